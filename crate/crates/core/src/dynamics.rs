//! Long-horizon checks of the threshold dynamics: the limit predicted from
//! the reproduction numbers is compared with the last period of a full
//! simulation.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::expr::Expr;
use crate::model::ModelSpec;
use crate::periodic::{find_periodic_orbit, PeriodicOrbit};
use crate::sampling::{Discretized, Numerics};
use crate::solver::{simulate_full, FullSystem, InfectionState, ReducedSystem, ScalarState, StateField, SystemState};
use crate::spectral::{spectral_report, totals, SpectralOptions, SpectralReport};

pub const DEAD_BAND: f64 = 1e-4;
pub const DEFAULT_HORIZON: usize = 500;
pub const DEFAULT_TOL: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PredictedCase {
    /// Both species persist and the infection is endemic.
    #[serde(rename = "1")]
    Endemic,
    /// Both species persist and the infection dies out.
    #[serde(rename = "2")]
    DiseaseFree,
    #[serde(rename = "3a")]
    HostExtinct,
    #[serde(rename = "3b")]
    VectorExtinct,
    #[serde(rename = "3c")]
    AllExtinct,
    #[serde(rename = "threshold-indeterminate")]
    Indeterminate,
}

impl PredictedCase {
    pub fn label(self) -> &'static str {
        match self {
            PredictedCase::Endemic => "ENDEMIC",
            PredictedCase::DiseaseFree => "DISEASE_FREE",
            PredictedCase::HostExtinct => "HOST_EXTINCT",
            PredictedCase::VectorExtinct => "VECTOR_EXTINCT",
            PredictedCase::AllExtinct => "ALL_EXTINCT",
            PredictedCase::Indeterminate => "THRESHOLD_INDETERMINATE",
        }
    }
}

/// Case selection from the reproduction numbers alone, with a dead band of
/// width `DEAD_BAND` around every threshold. The disease-free case covers
/// `R0 <= 1` outside the band.
pub fn predict_case(r01: f64, r02: f64, r0: Option<f64>) -> PredictedCase {
    let near = |r: f64| (r - 1.0).abs() <= DEAD_BAND;
    if near(r01) || near(r02) {
        return PredictedCase::Indeterminate;
    }
    match (r01 > 1.0, r02 > 1.0) {
        (false, false) => PredictedCase::AllExtinct,
        (false, true) => PredictedCase::HostExtinct,
        (true, false) => PredictedCase::VectorExtinct,
        (true, true) => match r0 {
            Some(r) if near(r) => PredictedCase::Indeterminate,
            Some(r) if r > 1.0 => PredictedCase::Endemic,
            Some(_) => PredictedCase::DiseaseFree,
            None => PredictedCase::Indeterminate,
        },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Indeterminate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DynamicsReport {
    pub predicted_case: PredictedCase,
    pub label: String,
    #[serde(rename = "R01")]
    pub r01: f64,
    #[serde(rename = "R02")]
    pub r02: f64,
    #[serde(rename = "R0")]
    pub r0: Option<f64>,
    /// Sup-norm distance between the final simulated period and the
    /// predicted limit orbit; `None` when no limit is predicted.
    pub measured_gap: Option<f64>,
    pub horizon: usize,
    pub tol: f64,
    pub verdict: Verdict,
    /// For the endemic case: final-period `H_i < H` and `V_i < V` at every
    /// node and time.
    pub ordering_holds: Option<bool>,
    pub final_state: StateField,
    pub diagnostics: Vec<String>,
}

/// Initial data as four constants or four expressions in `x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InitSpec {
    Constant([f64; 4]),
    Expressions([String; 4]),
}

impl InitSpec {
    /// Parses four comma-separated numbers or `;`-separated expressions.
    pub fn parse(s: &str) -> Result<Self> {
        let nums: std::result::Result<Vec<f64>, _> = s.split(',').map(|p| p.trim().parse::<f64>()).collect();
        if let Ok(v) = nums {
            if v.len() == 4 {
                return Ok(InitSpec::Constant([v[0], v[1], v[2], v[3]]));
            }
        }
        let parts: Vec<String> = s.split(';').map(|p| p.trim().to_string()).collect();
        if parts.len() == 4 {
            return Ok(InitSpec::Expressions([
                parts[0].clone(),
                parts[1].clone(),
                parts[2].clone(),
                parts[3].clone(),
            ]));
        }
        Err(Error::Config(format!(
            "initial data {s:?} must be four numbers (a,b,c,d) or four expressions in x (e1;e2;e3;e4)"
        )))
    }

    pub fn sample(&self, nodes: &[f64]) -> Result<StateField> {
        let field = match self {
            InitSpec::Constant(v) => StateField::constant(nodes.len(), *v),
            InitSpec::Expressions(src) => {
                let exprs = src.iter().map(|s| Expr::parse(s)).collect::<Result<Vec<_>>>()?;
                StateField::from_fn(nodes, |x| {
                    let v: Vec<f64> = exprs.iter().map(|e| e.eval(x, 0.0)).collect();
                    [v[0], v[1], v[2], v[3]]
                })
            }
        };
        if !field
            .components()
            .iter()
            .all(|(_, u)| u.iter().all(|v| v.is_finite() && *v >= 0.0))
        {
            return Err(Error::Validation("initial data must be finite and nonnegative".into()));
        }
        Ok(field)
    }
}

/// Predicted limit orbit over one period, `steps + 1` states.
fn limit_orbit(
    case: PredictedCase,
    disc: &Discretized,
    opts: &SpectralOptions,
    diagnostics: &mut Vec<String>,
) -> Result<Option<Vec<StateField>>> {
    let steps = disc.steps_per_period();
    let n = disc.node_count();
    let zero = vec![0.0; n];
    let build = |h: &dyn Fn(usize) -> Vec<f64>,
                 hi: &dyn Fn(usize) -> Vec<f64>,
                 v: &dyn Fn(usize) -> Vec<f64>,
                 vi: &dyn Fn(usize) -> Vec<f64>| {
        (0..=steps)
            .map(|k| {
                let (h, hi, v, vi) = (h(k), hi(k), v(k), vi(k));
                StateField {
                    hu: h.iter().zip(&hi).map(|(a, b)| a - b).collect(),
                    hi,
                    vu: v.iter().zip(&vi).map(|(a, b)| a - b).collect(),
                    vi,
                    t: k as f64 * disc.dt,
                }
            })
            .collect::<Vec<_>>()
    };
    let z = |_: usize| zero.clone();
    Ok(match case {
        PredictedCase::Indeterminate => None,
        PredictedCase::AllExtinct => Some(build(&z, &z, &z, &z)),
        _ => {
            let (h, v) = totals(disc, opts)?;
            let hu = |k: usize| h.snapshots[k].u.clone();
            let vu = |k: usize| v.snapshots[k].u.clone();
            match case {
                PredictedCase::HostExtinct => Some(build(&z, &z, &vu, &z)),
                PredictedCase::VectorExtinct => Some(build(&hu, &z, &z, &z)),
                PredictedCase::DiseaseFree => Some(build(&hu, &z, &vu, &z)),
                PredictedCase::Endemic => {
                    let inf = infection_orbit(disc, &h.snapshots, &v.snapshots, opts)?;
                    diagnostics.push(format!(
                        "infection orbit: {} periods, residual {:e}",
                        inf.periods_used, inf.residual
                    ));
                    let hi = |k: usize| inf.snapshots[k].hi.clone();
                    let vi = |k: usize| inf.snapshots[k].vi.clone();
                    Some(build(&hu, &hi, &vu, &vi))
                }
                _ => unreachable!(),
            }
        }
    })
}

/// Periodic orbit of the infection subsystem driven by `H`, `V`, started
/// from half of the totals.
pub fn infection_orbit(
    disc: &Discretized,
    host: &[ScalarState],
    vector: &[ScalarState],
    opts: &SpectralOptions,
) -> Result<PeriodicOrbit<InfectionState>> {
    let mut sys = ReducedSystem::new(disc, host, vector)?;
    let init = InfectionState {
        hi: host[0].u.iter().map(|v| 0.5 * v).collect(),
        vi: vector[0].u.iter().map(|v| 0.5 * v).collect(),
        t: 0.0,
    };
    find_periodic_orbit(&mut sys, init, opts.orbit_tol.max(1e-12), opts.max_periods)
}

/// Simulates `horizon` periods and returns the last period, `steps + 1`
/// states with times relative to its start.
pub fn final_period(disc: &Discretized, init: StateField, horizon: usize) -> Result<Vec<StateField>> {
    if horizon == 0 {
        return Err(Error::Validation("horizon must be at least one period".into()));
    }
    let steps = disc.steps_per_period();
    let mut state = init;
    if horizon > 1 {
        let t_end = (horizon - 1) as f64 * disc.period();
        let tr = simulate_full(disc, state, t_end, usize::MAX)?;
        state = tr.last().clone().with_time(0.0);
    }
    let tr = simulate_full(disc, state, disc.period(), 1)?;
    let mut snaps = tr.snapshots;
    debug_assert_eq!(snaps.len(), steps + 1);
    for (k, s) in snaps.iter_mut().enumerate() {
        s.t = k as f64 * disc.dt;
    }
    Ok(snaps)
}

/// Predicts the limit from the reproduction numbers, simulates the full
/// system for `horizon` periods and measures the sup-norm gap over the
/// final period. A gap above `tol` is a failed verdict, not an error.
pub fn check_threshold_dynamics(
    spec: &ModelSpec,
    init: StateField,
    horizon: usize,
    tol: f64,
    numerics: Numerics,
    opts: &SpectralOptions,
) -> Result<DynamicsReport> {
    if !(tol > 0.0) {
        return Err(Error::Validation(format!("tolerance must be positive, got {tol}")));
    }
    let report = spectral_report(spec, numerics, opts)?;
    check_with_report(spec, &report, init, horizon, tol, numerics, opts)
}

/// As [`check_threshold_dynamics`] with precomputed reproduction numbers.
pub fn check_with_report(
    spec: &ModelSpec,
    report: &SpectralReport,
    init: StateField,
    horizon: usize,
    tol: f64,
    numerics: Numerics,
    opts: &SpectralOptions,
) -> Result<DynamicsReport> {
    let disc = Discretized::new(spec, numerics)?;
    if init.hu.len() != disc.node_count() {
        return Err(Error::Validation("initial data does not match the grid".into()));
    }
    let case = predict_case(report.r01, report.r02, report.r0);
    let mut diagnostics = Vec::new();
    if let Some(note) = &report.diagnostics.note {
        diagnostics.push(note.clone());
    }
    let limit = limit_orbit(case, &disc, opts, &mut diagnostics)?;
    let last = final_period(&disc, init, horizon)?;
    let final_state = last.last().cloned().expect("one period recorded");

    let (gap, verdict) = match &limit {
        Some(orbit) => {
            let g = last
                .iter()
                .zip(orbit)
                .fold(0.0f64, |m, (a, b)| m.max(a.sup_distance(b)));
            if g > tol {
                diagnostics.push(format!(
                    "gap {g:e} above tolerance {tol:e} after {horizon} periods; a longer horizon may be needed near a threshold"
                ));
            }
            (Some(g), if g <= tol { Verdict::Pass } else { Verdict::Fail })
        }
        None => {
            diagnostics.push("reproduction numbers within the dead band; no limit predicted".into());
            (None, Verdict::Indeterminate)
        }
    };

    let ordering_holds = if case == PredictedCase::Endemic {
        let orbit = limit.as_ref().expect("endemic limit");
        let ok = last.iter().zip(orbit).all(|(s, l)| {
            let h: Vec<f64> = l.host_total();
            let v: Vec<f64> = l.vector_total();
            let off_h = disc.kind(crate::model::Species::Host).offset();
            let off_v = disc.kind(crate::model::Species::Vector).offset();
            let n = s.hi.len();
            (off_h..n - off_h).all(|i| s.hi[i] < h[i]) && (off_v..n - off_v).all(|i| s.vi[i] < v[i])
        });
        Some(ok)
    } else {
        None
    };

    Ok(DynamicsReport {
        predicted_case: case,
        label: case.label().to_string(),
        r01: report.r01,
        r02: report.r02,
        r0: report.r0,
        measured_gap: gap,
        horizon,
        tol,
        verdict,
        ordering_holds,
        final_state,
        diagnostics,
    })
}

/// Positive periodic orbit of the full system reached from `init`.
pub fn full_orbit(
    disc: &Discretized,
    init: StateField,
    tol: f64,
    max_periods: usize,
) -> Result<PeriodicOrbit<StateField>> {
    find_periodic_orbit(&mut FullSystem::new(disc), init.with_time(0.0), tol, max_periods)
}

/// One entry of a batch check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchItem {
    pub name: String,
    pub model: crate::model::config::ModelConfig,
    pub init: InitSpec,
    #[serde(default = "default_horizon")]
    pub horizon: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
}

fn default_horizon() -> usize {
    DEFAULT_HORIZON
}

fn default_tol() -> f64 {
    DEFAULT_TOL
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchResult {
    pub name: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<DynamicsReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub status: String,
}

/// Runs independent checks concurrently; results keep the input order.
pub fn run_batch(
    items: &[BatchItem],
    numerics: Numerics,
    opts: &SpectralOptions,
    workers: Option<usize>,
) -> Result<Vec<BatchResult>> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers {
        builder = builder.num_threads(w.max(1));
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Validation(format!("worker pool: {e}")))?;
    let one = |item: &BatchItem| -> Result<DynamicsReport> {
        let spec = item.model.build()?;
        let disc = Discretized::new(&spec, numerics)?;
        let init = item.init.sample(&disc.grid.nodes())?;
        check_threshold_dynamics(&spec, init, item.horizon, item.tol, numerics, opts)
    };
    Ok(pool.install(|| {
        items
            .par_iter()
            .map(|item| match one(item) {
                Ok(r) => BatchResult {
                    name: item.name.clone(),
                    status: match r.verdict {
                        Verdict::Pass => "pass",
                        Verdict::Fail => "fail",
                        Verdict::Indeterminate => "indeterminate",
                    }
                    .into(),
                    report: Some(r),
                    error: None,
                },
                Err(e) => BatchResult {
                    name: item.name.clone(),
                    report: None,
                    status: e.kind().into(),
                    error: Some(e.to_string()),
                },
            })
            .collect()
    }))
}
