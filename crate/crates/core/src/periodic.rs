//! Periodic solutions by iterating the period map.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Species;
use crate::sampling::Discretized;
use crate::solver::{LogisticSystem, ScalarState, Stepper, SystemState};

pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_MAX_PERIODS: usize = 5000;

/// One period of a converged periodic solution, `steps + 1` snapshots at
/// times `0, dt, ..., T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodicOrbit<S> {
    pub snapshots: Vec<S>,
    pub dt: f64,
    pub period: f64,
    /// Sup-norm gap between the last two period-boundary states.
    pub residual: f64,
    pub periods_used: usize,
}

impl<S: SystemState> PeriodicOrbit<S> {
    pub fn at(&self, k: usize) -> &S {
        &self.snapshots[k % (self.snapshots.len() - 1)]
    }

    /// Sup norm of `snapshot(T) - snapshot(0)`.
    pub fn residual_gap(&self) -> Result<f64> {
        orbit_residual(&self.snapshots)
    }

    /// The same orbit with every time label moved by `offset`.
    pub fn time_shifted(&self, offset: f64) -> Self {
        let snapshots = self
            .snapshots
            .iter()
            .map(|s| s.clone().with_time(s.time() + offset))
            .collect();
        Self {
            snapshots,
            ..self.clone()
        }
    }
}

/// Sup norm of the gap between the last and the first snapshot.
pub fn orbit_residual<S: SystemState>(snapshots: &[S]) -> Result<f64> {
    if snapshots.len() < 2 {
        return Err(Error::Validation(
            "an orbit needs at least two period-boundary snapshots".into(),
        ));
    }
    Ok(snapshots[snapshots.len() - 1].sup_distance(&snapshots[0]))
}

fn advance_period<St: Stepper>(
    stepper: &mut St,
    start: &St::State,
    record: bool,
) -> Result<(St::State, Vec<St::State>)> {
    let steps = stepper.disc().steps_per_period();
    let dt = stepper.disc().dt;
    let mut s = start.clone().with_time(0.0);
    let mut rec = Vec::new();
    if record {
        rec.reserve(steps + 1);
        rec.push(s.clone());
    }
    for k in 1..=steps {
        s = stepper.step(&s)?.with_time(k as f64 * dt);
        if record {
            rec.push(s.clone());
        }
    }
    Ok((s, rec))
}

/// Marches whole periods from `init` until consecutive period-boundary
/// states differ by less than `tol` in sup norm, then records one more
/// period as the orbit.
pub fn find_periodic_orbit<St: Stepper>(
    stepper: &mut St,
    init: St::State,
    tol: f64,
    max_periods: usize,
) -> Result<PeriodicOrbit<St::State>> {
    if !(tol > 0.0) {
        return Err(Error::Validation(format!("tolerance must be positive, got {tol}")));
    }
    init.check_nonnegative()?;
    let dt = stepper.disc().dt;
    let period = stepper.disc().period();
    let mut state = init.with_time(0.0);
    let mut gap = f64::INFINITY;
    let mut periods = 0;
    while periods < max_periods {
        let (next, _) = advance_period(stepper, &state, false)?;
        periods += 1;
        gap = next.sup_distance(&state);
        state = next;
        if gap < tol {
            let (_, snapshots) = advance_period(stepper, &state, true)?;
            let residual = orbit_residual(&snapshots)?;
            return Ok(PeriodicOrbit {
                snapshots,
                dt,
                period,
                residual,
                periods_used: periods + 1,
            });
        }
    }
    Err(Error::NonConvergence {
        what: "periodic orbit",
        iterations: periods,
        residual: gap,
    })
}

/// Periodic logistic orbit of one species' total, started from its
/// carrying bound (an upper solution) or from 1 if that bound vanishes.
pub fn logistic_orbit(
    disc: &Discretized,
    species: Species,
    tol: f64,
    max_periods: usize,
) -> Result<PeriodicOrbit<ScalarState>> {
    let level = disc.carrying_bound(species)?;
    let level = if level > 0.0 { level } else { 1.0 };
    let mut u = vec![level; disc.node_count()];
    if disc.kind(species) == crate::discretization::BoundaryKind::Dirichlet {
        let n = u.len();
        u[0] = 0.0;
        u[n - 1] = 0.0;
    }
    find_periodic_orbit(
        &mut LogisticSystem::new(disc, species),
        ScalarState { u, t: 0.0 },
        tol,
        max_periods,
    )
}

/// Writes snapshots as long-format CSV: `t,x,<component>...`.
pub fn write_orbit_csv<S: SystemState, W: Write>(snapshots: &[S], nodes: &[f64], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let Some(first) = snapshots.first() else {
        return Err(Error::Validation("no snapshots to write".into()));
    };
    let names: Vec<&str> = first.components().iter().map(|(n, _)| *n).collect();
    let mut header = vec!["t", "x"];
    header.extend(&names);
    w.write_record(&header)?;
    for s in snapshots {
        let comps = s.components();
        for (i, x) in nodes.iter().enumerate() {
            let mut row = vec![crate::io::fmt_csv(s.time()), crate::io::fmt_csv(*x)];
            row.extend(comps.iter().map(|(_, u)| crate::io::fmt_csv(u[i])));
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::ConstantParams;
    use crate::model::{HeterogeneityParams, ModelSpec};
    use crate::sampling::Numerics;
    use crate::solver::{FullSystem, InfectionState, ReducedSystem, StateField};

    fn disc(spec: &ModelSpec, n: usize, steps: usize) -> Discretized {
        Discretized::new(spec, Numerics::new(n, steps)).unwrap()
    }

    #[test]
    fn constant_logistic_orbit() {
        let p = ConstantParams::new([2.0, 1.0, 1.0, 3.0], [3.0, 1.0, 1.0, 2.0]);
        let spec = ModelSpec::constant_neumann(&p, 0.1, 0.2, 1.0).unwrap();
        let d = disc(&spec, 20, 50);
        let o = logistic_orbit(&d, Species::Host, 1e-8, 5000).unwrap();
        assert!(o.residual < 1e-8);
        assert_eq!(o.snapshots.len(), 51);
        assert!(o.snapshots.iter().all(|s| s.u.iter().all(|v| (v - 1.0).abs() < 1e-8)));
        assert!(o.residual_gap().unwrap() < 1e-8);
        assert!((o.time_shifted(0.37).residual_gap().unwrap() - o.residual_gap().unwrap()).abs() < 1e-12);

        let p = ConstantParams::new([1.0, 2.0, 1.0, 3.0], [3.0, 1.0, 1.0, 2.0]);
        let spec = ModelSpec::constant_neumann(&p, 0.1, 0.2, 1.0).unwrap();
        let d = disc(&spec, 20, 50);
        let o = logistic_orbit(&d, Species::Host, 1e-8, 5000).unwrap();
        assert!(o.snapshots.iter().all(|s| s.u.iter().all(|v| *v < 1e-8)));
    }

    #[test]
    fn unconverged_residual_is_the_gap() {
        let snaps = vec![
            ScalarState {
                u: vec![1.0, 2.0],
                t: 0.0,
            },
            ScalarState {
                u: vec![1.5, 2.25],
                t: 1.0,
            },
        ];
        assert_eq!(orbit_residual(&snaps).unwrap(), 0.5);
        assert!(orbit_residual(&snaps[..1]).is_err());
    }

    #[test]
    fn non_convergence_is_reported() {
        let spec = ModelSpec::section5(&HeterogeneityParams::default()).unwrap();
        let d = disc(&spec, 10, 20);
        let mut sys = FullSystem::new(&d);
        let init = StateField::constant(11, [0.5, 0.5, 0.5, 0.5]);
        let err = find_periodic_orbit(&mut sys, init, 1e-8, 3).unwrap_err();
        assert_eq!(err.kind(), "orbit-nonconverged");
    }

    #[test]
    fn heterogeneous_full_orbit_is_positive_and_ordered() {
        let spec = ModelSpec::section5(&HeterogeneityParams::new([0.5; 4], [0.0; 4])).unwrap();
        let d = disc(&spec, 40, 200);
        let h = logistic_orbit(&d, Species::Host, 1e-10, 5000).unwrap();
        let v = logistic_orbit(&d, Species::Vector, 1e-10, 5000).unwrap();
        let init = StateField::constant(41, [0.5, 0.5, 0.5, 0.5]);
        let full = find_periodic_orbit(&mut FullSystem::new(&d), init, 1e-8, 5000).unwrap();
        for (k, s) in full.snapshots.iter().enumerate() {
            for i in 0..41 {
                assert!(s.hi[i] > 0.0 && s.hi[i] < h.snapshots[k].u[i]);
                assert!(s.vi[i] > 0.0 && s.vi[i] < v.snapshots[k].u[i]);
                assert!(s.hu[i] > 0.0 && s.vu[i] > 0.0);
            }
        }

        let mut red = ReducedSystem::new(&d, &h.snapshots, &v.snapshots).unwrap();
        let init = InfectionState {
            hi: vec![0.3; 41],
            vi: vec![0.3; 41],
            t: 0.0,
        };
        let ro = find_periodic_orbit(&mut red, init, 1e-8, 5000).unwrap();
        for (a, b) in full.snapshots.iter().zip(&ro.snapshots) {
            let g = crate::solver::SystemState::sup_distance(
                &InfectionState {
                    hi: a.hi.clone(),
                    vi: a.vi.clone(),
                    t: 0.0,
                },
                &InfectionState {
                    hi: b.hi.clone(),
                    vi: b.vi.clone(),
                    t: 0.0,
                },
            );
            assert!(g < 1e-4, "{g}");
        }
    }

    #[test]
    fn csv_export() {
        let snaps = vec![
            ScalarState {
                u: vec![1.0, 0.5],
                t: 0.0,
            },
            ScalarState {
                u: vec![0.25, 0.0],
                t: 0.5,
            },
        ];
        let mut buf = Vec::new();
        write_orbit_csv(&snaps, &[0.0, 1.0], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 5);
        assert_eq!(lines[0], "t,x,u");
    }
}
