//! IMEX time stepping of the nonlinear systems.
//!
//! Every step solves one implicit tridiagonal system per compartment:
//! diffusion and all loss terms are implicit with rates frozen at the old
//! state, all gain terms are explicit. Coefficients are evaluated at the new
//! time. Within a species the susceptible compartment is solved first and
//! the infection gain of the infected compartment uses the new susceptible
//! value, so the transfer term cancels exactly in the species total and
//! `H_u + H_i` follows the scalar logistic scheme step for step.
//!
//! Because `I + dt (A + sink)` is an M-matrix for every `dt > 0` and all
//! explicit gains are nonnegative, the scheme preserves nonnegativity
//! without a step-size restriction. Negative values beyond `-1e-12` abort
//! the run; nothing is clipped.

use serde::{Deserialize, Serialize};

use crate::discretization::{solve_implicit, BoundaryKind, SolveScratch};
use crate::error::{Error, Result};
use crate::model::Species;
use crate::sampling::Discretized;

pub const NEGATIVITY_TOL: f64 = -1e-12;
/// Floor for the standard-incidence denominator `H_u + H_i`.
pub const DENOMINATOR_FLOOR: f64 = 1e-12;

/// States that can be marched, compared and checked.
pub trait SystemState: Clone {
    fn time(&self) -> f64;
    fn with_time(self, t: f64) -> Self;
    /// Sup-norm distance over all components.
    fn sup_distance(&self, other: &Self) -> f64;
    fn components(&self) -> Vec<(&'static str, &[f64])>;

    fn check_nonnegative(&self) -> Result<()> {
        for (name, u) in self.components() {
            if let Some((node, &v)) = u.iter().enumerate().find(|(_, v)| !(**v >= NEGATIVITY_TOL)) {
                return Err(Error::Positivity {
                    component: name,
                    node,
                    time: self.time(),
                    value: v,
                });
            }
        }
        Ok(())
    }

    fn min_value(&self) -> f64 {
        self.components()
            .iter()
            .flat_map(|(_, u)| u.iter())
            .fold(f64::INFINITY, |m, v| m.min(*v))
    }
}

fn sup_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

/// The four nodal densities at one time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateField {
    pub hu: Vec<f64>,
    pub hi: Vec<f64>,
    pub vu: Vec<f64>,
    pub vi: Vec<f64>,
    pub t: f64,
}

impl StateField {
    pub fn zeros(nodes: usize) -> Self {
        Self {
            hu: vec![0.0; nodes],
            hi: vec![0.0; nodes],
            vu: vec![0.0; nodes],
            vi: vec![0.0; nodes],
            t: 0.0,
        }
    }

    pub fn constant(nodes: usize, values: [f64; 4]) -> Self {
        Self {
            hu: vec![values[0]; nodes],
            hi: vec![values[1]; nodes],
            vu: vec![values[2]; nodes],
            vi: vec![values[3]; nodes],
            t: 0.0,
        }
    }

    /// Samples four profiles at the grid nodes.
    pub fn from_fn(nodes: &[f64], f: impl Fn(f64) -> [f64; 4]) -> Self {
        let mut s = Self::zeros(nodes.len());
        for (i, &x) in nodes.iter().enumerate() {
            let [a, b, c, d] = f(x);
            s.hu[i] = a;
            s.hi[i] = b;
            s.vu[i] = c;
            s.vi[i] = d;
        }
        s
    }

    pub fn host_total(&self) -> Vec<f64> {
        self.hu.iter().zip(&self.hi).map(|(a, b)| a + b).collect()
    }

    pub fn vector_total(&self) -> Vec<f64> {
        self.vu.iter().zip(&self.vi).map(|(a, b)| a + b).collect()
    }
}

impl SystemState for StateField {
    fn time(&self) -> f64 {
        self.t
    }
    fn with_time(mut self, t: f64) -> Self {
        self.t = t;
        self
    }
    fn sup_distance(&self, o: &Self) -> f64 {
        sup_dist(&self.hu, &o.hu)
            .max(sup_dist(&self.hi, &o.hi))
            .max(sup_dist(&self.vu, &o.vu))
            .max(sup_dist(&self.vi, &o.vi))
    }
    fn components(&self) -> Vec<(&'static str, &[f64])> {
        vec![("hu", &self.hu), ("hi", &self.hi), ("vu", &self.vu), ("vi", &self.vi)]
    }
}

/// One scalar nodal field (a logistic total).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarState {
    pub u: Vec<f64>,
    pub t: f64,
}

impl SystemState for ScalarState {
    fn time(&self) -> f64 {
        self.t
    }
    fn with_time(mut self, t: f64) -> Self {
        self.t = t;
        self
    }
    fn sup_distance(&self, o: &Self) -> f64 {
        sup_dist(&self.u, &o.u)
    }
    fn components(&self) -> Vec<(&'static str, &[f64])> {
        vec![("u", &self.u)]
    }
}

/// Infected densities `(H_i, V_i)` of the reduced system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfectionState {
    pub hi: Vec<f64>,
    pub vi: Vec<f64>,
    pub t: f64,
}

impl SystemState for InfectionState {
    fn time(&self) -> f64 {
        self.t
    }
    fn with_time(mut self, t: f64) -> Self {
        self.t = t;
        self
    }
    fn sup_distance(&self, o: &Self) -> f64 {
        sup_dist(&self.hi, &o.hi).max(sup_dist(&self.vi, &o.vi))
    }
    fn components(&self) -> Vec<(&'static str, &[f64])> {
        vec![("hi", &self.hi), ("vi", &self.vi)]
    }
}

/// A system that can be advanced by one time step.
pub trait Stepper {
    type State: SystemState;
    fn disc(&self) -> &Discretized;
    fn step(&mut self, state: &Self::State) -> Result<Self::State>;
}

#[derive(Debug, Clone, Default)]
struct Buffers {
    scratch: SolveScratch,
    sink: Vec<f64>,
    rhs: Vec<f64>,
}

impl Buffers {
    fn prepare(&mut self, n: usize) {
        self.sink.resize(n, 0.0);
        self.rhs.resize(n, 0.0);
    }
}

fn zero_dirichlet(kind: BoundaryKind, u: &mut [f64]) {
    if kind == BoundaryKind::Dirichlet {
        u[0] = 0.0;
        let n = u.len();
        u[n - 1] = 0.0;
    }
}

fn check_length(disc: &Discretized, name: &str, u: &[f64]) -> Result<()> {
    if u.len() != disc.node_count() {
        return Err(Error::Validation(format!(
            "{name} has {} nodes, grid has {}",
            u.len(),
            disc.node_count()
        )));
    }
    Ok(())
}

/// Full four-compartment bilinear-incidence system.
#[derive(Debug, Clone)]
pub struct FullSystem<'a> {
    disc: &'a Discretized,
    buf: Buffers,
}

impl<'a> FullSystem<'a> {
    pub fn new(disc: &'a Discretized) -> Self {
        Self {
            disc,
            buf: Buffers::default(),
        }
    }
}

impl Stepper for FullSystem<'_> {
    type State = StateField;

    fn disc(&self) -> &Discretized {
        self.disc
    }

    fn step(&mut self, s: &StateField) -> Result<StateField> {
        let disc = self.disc;
        let dt = disc.dt;
        let n = disc.node_count();
        let next_t = s.t + dt;
        let c = disc.coeffs(disc.step_index(s.t) + 1)?;
        self.buf.prepare(n);
        let Buffers { scratch, sink, rhs } = &mut self.buf;
        let mut out = StateField::zeros(n);
        out.t = next_t;

        // host
        for i in 0..n {
            let h = s.hu[i] + s.hi[i];
            sink[i] = c.b1[i] + c.c1[i] * h + c.l1[i] * s.vi[i];
            rhs[i] = s.hu[i] + dt * c.a1[i] * h;
        }
        solve_implicit(&c.host_diffusion, dt, sink, rhs, &mut out.hu, scratch)?;
        for i in 0..n {
            let h = s.hu[i] + s.hi[i];
            sink[i] = c.b1[i] + c.c1[i] * h;
            rhs[i] = s.hi[i] + dt * c.l1[i] * out.hu[i] * s.vi[i];
        }
        solve_implicit(&c.host_diffusion, dt, sink, rhs, &mut out.hi, scratch)?;

        // vector
        for i in 0..n {
            let v = s.vu[i] + s.vi[i];
            sink[i] = c.b2[i] + c.c2[i] * v + c.l2[i] * s.hi[i];
            rhs[i] = s.vu[i] + dt * c.a2[i] * v;
        }
        solve_implicit(&c.vector_diffusion, dt, sink, rhs, &mut out.vu, scratch)?;
        for i in 0..n {
            let v = s.vu[i] + s.vi[i];
            sink[i] = c.b2[i] + c.c2[i] * v;
            rhs[i] = s.vi[i] + dt * c.l2[i] * s.hi[i] * out.vu[i];
        }
        solve_implicit(&c.vector_diffusion, dt, sink, rhs, &mut out.vi, scratch)?;

        out.check_nonnegative()?;
        Ok(out)
    }
}

/// Scalar logistic equation for one species' total density.
#[derive(Debug, Clone)]
pub struct LogisticSystem<'a> {
    disc: &'a Discretized,
    species: Species,
    buf: Buffers,
}

impl<'a> LogisticSystem<'a> {
    pub fn new(disc: &'a Discretized, species: Species) -> Self {
        Self {
            disc,
            species,
            buf: Buffers::default(),
        }
    }
}

impl Stepper for LogisticSystem<'_> {
    type State = ScalarState;

    fn disc(&self) -> &Discretized {
        self.disc
    }

    fn step(&mut self, s: &ScalarState) -> Result<ScalarState> {
        let disc = self.disc;
        let dt = disc.dt;
        let n = disc.node_count();
        let c = disc.coeffs(disc.step_index(s.t) + 1)?;
        let (a, b, cc, _) = c.rates(self.species);
        self.buf.prepare(n);
        let Buffers { scratch, sink, rhs } = &mut self.buf;
        for i in 0..n {
            sink[i] = b[i] + cc[i] * s.u[i];
            rhs[i] = s.u[i] + dt * a[i] * s.u[i];
        }
        let mut out = ScalarState {
            u: vec![0.0; n],
            t: s.t + dt,
        };
        solve_implicit(c.diffusion(self.species), dt, sink, rhs, &mut out.u, scratch)?;
        out.check_nonnegative()?;
        Ok(out)
    }
}

/// Infection subsystem driven by fixed periodic totals `H(x,t)`, `V(x,t)`
/// given at every step of one period (`steps + 1` snapshots).
#[derive(Debug, Clone)]
pub struct ReducedSystem<'a> {
    disc: &'a Discretized,
    host_total: &'a [ScalarState],
    vector_total: &'a [ScalarState],
    buf: Buffers,
}

impl<'a> ReducedSystem<'a> {
    pub fn new(disc: &'a Discretized, host_total: &'a [ScalarState], vector_total: &'a [ScalarState]) -> Result<Self> {
        let steps = disc.steps_per_period();
        for (name, orbit) in [("host orbit", host_total), ("vector orbit", vector_total)] {
            if orbit.len() != steps + 1 {
                return Err(Error::Validation(format!(
                    "{name} has {} snapshots, expected {} for this time step",
                    orbit.len(),
                    steps + 1
                )));
            }
            check_length(disc, name, &orbit[0].u)?;
        }
        Ok(Self {
            disc,
            host_total,
            vector_total,
            buf: Buffers::default(),
        })
    }

    fn totals(&self, k: usize) -> (&'a [f64], &'a [f64]) {
        let k = k % self.disc.steps_per_period();
        (&self.host_total[k].u, &self.vector_total[k].u)
    }
}

impl Stepper for ReducedSystem<'_> {
    type State = InfectionState;

    fn disc(&self) -> &Discretized {
        self.disc
    }

    fn step(&mut self, s: &InfectionState) -> Result<InfectionState> {
        let disc = self.disc;
        let dt = disc.dt;
        let n = disc.node_count();
        let k = disc.step_index(s.t);
        let c = disc.coeffs(k + 1)?;
        let (h_now, v_now) = self.totals(k);
        let (h_next, v_next) = self.totals(k + 1);
        self.buf.prepare(n);
        let Buffers { scratch, sink, rhs } = &mut self.buf;
        let mut out = InfectionState {
            hi: vec![0.0; n],
            vi: vec![0.0; n],
            t: s.t + dt,
        };
        for i in 0..n {
            sink[i] = c.b1[i] + c.c1[i] * h_now[i] + c.l1[i] * s.vi[i];
            rhs[i] = s.hi[i] + dt * c.l1[i] * h_next[i] * s.vi[i];
        }
        solve_implicit(&c.host_diffusion, dt, sink, rhs, &mut out.hi, scratch)?;
        for i in 0..n {
            sink[i] = c.b2[i] + c.c2[i] * v_now[i] + c.l2[i] * s.hi[i];
            rhs[i] = s.vi[i] + dt * c.l2[i] * v_next[i] * s.hi[i];
        }
        solve_implicit(&c.vector_diffusion, dt, sink, rhs, &mut out.vi, scratch)?;
        out.check_nonnegative()?;
        Ok(out)
    }
}

/// Standard-incidence variant with recovery of infected hosts.
#[derive(Debug, Clone)]
pub struct ModifiedSystem<'a> {
    disc: &'a Discretized,
    buf: Buffers,
}

impl<'a> ModifiedSystem<'a> {
    pub fn new(disc: &'a Discretized) -> Result<Self> {
        if disc.spec.bc_host.is_dirichlet() || disc.spec.bc_vector.is_dirichlet() {
            return Err(Error::Unsupported(
                "the standard-incidence model needs Robin/Neumann boundaries (alpha = 1)".into(),
            ));
        }
        Ok(Self {
            disc,
            buf: Buffers::default(),
        })
    }
}

impl Stepper for ModifiedSystem<'_> {
    type State = StateField;

    fn disc(&self) -> &Discretized {
        self.disc
    }

    fn step(&mut self, s: &StateField) -> Result<StateField> {
        let disc = self.disc;
        let dt = disc.dt;
        let n = disc.node_count();
        let c = disc.coeffs(disc.step_index(s.t) + 1)?;
        let zeros;
        let gamma: &[f64] = match &c.gamma {
            Some(g) => g,
            None => {
                zeros = vec![0.0; n];
                &zeros
            }
        };
        self.buf.prepare(n);
        let Buffers { scratch, sink, rhs } = &mut self.buf;
        let mut out = StateField::zeros(n);
        out.t = s.t + dt;

        for i in 0..n {
            let h = s.hu[i] + s.hi[i];
            let den = h.max(DENOMINATOR_FLOOR);
            sink[i] = c.b1[i] + c.c1[i] * h + c.l1[i] * s.vi[i] / den;
            rhs[i] = s.hu[i] + dt * (c.a1[i] * h + gamma[i] * s.hi[i]);
        }
        solve_implicit(&c.host_diffusion, dt, sink, rhs, &mut out.hu, scratch)?;
        for i in 0..n {
            let h = s.hu[i] + s.hi[i];
            let den = h.max(DENOMINATOR_FLOOR);
            sink[i] = c.b1[i] + c.c1[i] * h + gamma[i];
            rhs[i] = s.hi[i] + dt * c.l1[i] * out.hu[i] * s.vi[i] / den;
        }
        solve_implicit(&c.host_diffusion, dt, sink, rhs, &mut out.hi, scratch)?;
        for i in 0..n {
            let v = s.vu[i] + s.vi[i];
            let frac = s.hi[i] / (s.hu[i] + s.hi[i]).max(DENOMINATOR_FLOOR);
            sink[i] = c.b2[i] + c.c2[i] * v + c.l2[i] * frac;
            rhs[i] = s.vu[i] + dt * c.a2[i] * v;
        }
        solve_implicit(&c.vector_diffusion, dt, sink, rhs, &mut out.vu, scratch)?;
        for i in 0..n {
            let v = s.vu[i] + s.vi[i];
            let frac = s.hi[i] / (s.hu[i] + s.hi[i]).max(DENOMINATOR_FLOOR);
            sink[i] = c.b2[i] + c.c2[i] * v;
            rhs[i] = s.vi[i] + dt * c.l2[i] * frac * out.vu[i];
        }
        solve_implicit(&c.vector_diffusion, dt, sink, rhs, &mut out.vi, scratch)?;
        out.check_nonnegative()?;
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryMeta {
    pub intervals: usize,
    pub steps_per_period: usize,
    pub scheme: String,
}

/// Recorded snapshots at times `0, r dt, 2 r dt, ...` with `r` the
/// recording stride; the final state is always recorded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory<S> {
    pub snapshots: Vec<S>,
    pub dt: f64,
    pub record_every: usize,
    pub meta: TrajectoryMeta,
}

impl<S: SystemState> Trajectory<S> {
    pub fn last(&self) -> &S {
        self.snapshots.last().expect("trajectory is never empty")
    }
}

fn step_count(t_end: f64, dt: f64) -> Result<usize> {
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::Validation(format!("t_end must be positive, got {t_end}")));
    }
    Ok(((t_end / dt) - 1e-9).ceil().max(1.0) as usize)
}

/// Runs `stepper` from `init`, recording every `record_every` steps and
/// invoking `check` on each new state.
pub fn march<St: Stepper>(
    stepper: &mut St,
    init: St::State,
    t_end: f64,
    record_every: usize,
    scheme: &str,
    mut check: impl FnMut(&St::State) -> Result<()>,
) -> Result<Trajectory<St::State>> {
    let disc = stepper.disc();
    let dt = disc.dt;
    let meta = TrajectoryMeta {
        intervals: disc.numerics.intervals,
        steps_per_period: disc.numerics.steps_per_period,
        scheme: scheme.to_string(),
    };
    let steps = step_count(t_end, dt)?;
    let stride = record_every.max(1);
    init.check_nonnegative()?;
    check(&init)?;
    let mut snapshots = vec![init.clone()];
    let mut state = init;
    for n in 1..=steps {
        let t0 = state.time();
        state = stepper.step(&state)?.with_time(t0 + dt);
        // keep time on the exact lattice
        let exact = n as f64 * dt + snapshots[0].time();
        state = state.with_time(exact);
        check(&state)?;
        if n % stride == 0 || n == steps {
            snapshots.push(state.clone());
        }
    }
    Ok(Trajectory {
        snapshots,
        dt,
        record_every: stride,
        meta,
    })
}

fn prepare_full_init(disc: &Discretized, mut init: StateField) -> Result<StateField> {
    for (name, u) in init.components() {
        check_length(disc, name, u)?;
    }
    for (s, comps) in [
        (Species::Host, [&mut init.hu, &mut init.hi]),
        (Species::Vector, [&mut init.vu, &mut init.vi]),
    ] {
        if disc.kind(s) == BoundaryKind::Dirichlet {
            for u in comps {
                let n = u.len();
                if u[0] != 0.0 || u[n - 1] != 0.0 {
                    log::warn!("initial data projected to zero on the Dirichlet boundary");
                }
                zero_dirichlet(BoundaryKind::Dirichlet, u);
            }
        }
    }
    let t = disc.step_index(init.t) as f64 * disc.dt;
    Ok(init.with_time(t))
}

fn bound_checker(disc: &Discretized, init_host: f64, init_vector: f64) -> Result<impl Fn(&StateField) -> Result<()>> {
    let hb = init_host.max(disc.carrying_bound(Species::Host)?) + 1.0;
    let vb = init_vector.max(disc.carrying_bound(Species::Vector)?) + 1.0;
    Ok(move |s: &StateField| {
        for (name, total, bound) in [("H", s.host_total(), hb), ("V", s.vector_total(), vb)] {
            let m = total.iter().fold(0.0f64, |m, v| m.max(*v));
            if m > bound {
                return Err(Error::Boundedness {
                    component: name,
                    value: m,
                    bound,
                    time: s.t,
                });
            }
        }
        Ok(())
    })
}

fn sup(u: &[f64]) -> f64 {
    u.iter().fold(0.0f64, |m, v| m.max(*v))
}

/// Integrates the full system to `t_end`, asserting positivity and
/// boundedness of the species totals at every step.
pub fn simulate_full(
    disc: &Discretized,
    init: StateField,
    t_end: f64,
    record_every: usize,
) -> Result<Trajectory<StateField>> {
    let init = prepare_full_init(disc, init)?;
    let check = bound_checker(disc, sup(&init.host_total()), sup(&init.vector_total()))?;
    march(
        &mut FullSystem::new(disc),
        init,
        t_end,
        record_every,
        "imex-lagged",
        check,
    )
}

/// Standard-incidence variant; Robin/Neumann boundaries only.
pub fn simulate_modified(
    disc: &Discretized,
    init: StateField,
    t_end: f64,
    record_every: usize,
) -> Result<Trajectory<StateField>> {
    let mut sys = ModifiedSystem::new(disc)?;
    let init = prepare_full_init(disc, init)?;
    if let Some(i) = (0..disc.node_count()).find(|&i| !(init.hu[i] + init.hi[i] > 0.0)) {
        return Err(Error::Validation(format!(
            "standard incidence needs H_u + H_i > 0, violated at node {i}"
        )));
    }
    let check = bound_checker(disc, sup(&init.host_total()), sup(&init.vector_total()))?;
    march(
        &mut sys,
        init,
        t_end,
        record_every,
        "imex-lagged-standard-incidence",
        check,
    )
}

pub fn simulate_logistic(
    disc: &Discretized,
    species: Species,
    init: Vec<f64>,
    t_end: f64,
    record_every: usize,
) -> Result<Trajectory<ScalarState>> {
    check_length(disc, "initial data", &init)?;
    let mut u = init;
    zero_dirichlet(disc.kind(species), &mut u);
    let bound = sup(&u).max(disc.carrying_bound(species)?) + 1.0;
    let check = move |s: &ScalarState| {
        let m = sup(&s.u);
        if m > bound {
            return Err(Error::Boundedness {
                component: "u",
                value: m,
                bound,
                time: s.t,
            });
        }
        Ok(())
    };
    march(
        &mut LogisticSystem::new(disc, species),
        ScalarState { u, t: 0.0 },
        t_end,
        record_every,
        "imex-lagged-logistic",
        check,
    )
}

/// Integrates the infection subsystem driven by the periodic totals.
/// `init` must lie in `[0, H(., 0)] x [0, V(., 0)]`.
pub fn simulate_reduced(
    disc: &Discretized,
    host_total: &[ScalarState],
    vector_total: &[ScalarState],
    init: InfectionState,
    t_end: f64,
    record_every: usize,
) -> Result<Trajectory<InfectionState>> {
    let mut sys = ReducedSystem::new(disc, host_total, vector_total)?;
    check_length(disc, "hi", &init.hi)?;
    check_length(disc, "vi", &init.vi)?;
    let (h0, v0) = (&host_total[0].u, &vector_total[0].u);
    for i in 0..disc.node_count() {
        if init.hi[i] > h0[i] + 1e-12 || init.vi[i] > v0[i] + 1e-12 {
            return Err(Error::Validation(format!(
                "initial infection exceeds the total population at node {i}"
            )));
        }
    }
    let init = InfectionState { t: 0.0, ..init };
    march(&mut sys, init, t_end, record_every, "imex-lagged-reduced", |_| Ok(()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::ConstantParams;
    use crate::model::{CoefficientField, HeterogeneityParams, ModelSpec};
    use crate::sampling::Numerics;

    fn disc(spec: &ModelSpec, n: usize, steps: usize) -> Discretized {
        Discretized::new(spec, Numerics::new(n, steps)).unwrap()
    }

    fn baseline() -> ModelSpec {
        ModelSpec::section5(&HeterogeneityParams::default()).unwrap()
    }

    fn endemic_params() -> ConstantParams {
        ConstantParams::new([2.0, 1.0, 1.0, 3.0], [3.0, 1.0, 1.0, 2.0])
    }

    #[test]
    fn zero_is_an_equilibrium() {
        let d = disc(&baseline(), 20, 100);
        let mut sys = FullSystem::new(&d);
        let s = sys.step(&StateField::zeros(21)).unwrap();
        assert!(s.sup_distance(&StateField::zeros(21)) == 0.0);
    }

    #[test]
    fn disease_free_baseline_is_stationary() {
        let d = disc(&baseline(), 40, 1000);
        let init = StateField::constant(41, [1.0, 0.0, 1.0, 0.0]);
        let tr = simulate_full(&d, init.clone(), 1.0, 1000).unwrap();
        assert!(tr.last().sup_distance(&init) < 1e-12);
    }

    #[test]
    fn endemic_equilibrium_is_stationary() {
        let spec = ModelSpec::constant_neumann(&endemic_params(), 0.1, 0.2, 1.0).unwrap();
        let d = disc(&spec, 40, 1000);
        let init = StateField::constant(41, [0.625, 0.375, 1.6, 0.4]);
        let tr = simulate_full(&d, init.clone(), 2.0, 100).unwrap();
        for s in &tr.snapshots {
            assert!(s.sup_distance(&init) < 1e-10);
        }
    }

    #[test]
    fn heterogeneous_infection_persists() {
        let spec = ModelSpec::section5(&HeterogeneityParams::new([0.5; 4], [0.0; 4])).unwrap();
        let d = disc(&spec, 50, 200);
        let init = StateField::from_fn(&d.grid.nodes(), |x| [0.8, 0.2 + 0.1 * x, 0.9, 0.1]);
        let tr = simulate_full(&d, init, 60.0, 200).unwrap();
        let last = tr.last();
        assert!(d.grid.average(&last.hi) > 0.05);
        assert!(d.grid.average(&last.vi) > 0.05);
    }

    #[test]
    fn subcritical_host_dies_out() {
        let p = ConstantParams::new([1.0, 2.0, 1.0, 3.0], [1.0, 2.0, 1.0, 2.0]);
        let spec = ModelSpec::constant_neumann(&p, 0.1, 0.2, 1.0).unwrap();
        let d = disc(&spec, 20, 100);
        let init = StateField::from_fn(&d.grid.nodes(), |x| [1.0 + x, 0.5, 1.0, 0.5 * x]);
        let tr = simulate_full(&d, init, 40.0, 1000).unwrap();
        assert!(tr.last().min_value() >= 0.0);
        let s = tr.last();
        let m = [&s.hu, &s.hi, &s.vu, &s.vi]
            .iter()
            .flat_map(|u| u.iter())
            .fold(0.0f64, |m, v| m.max(*v));
        assert!(m < 1e-10, "max {m}");
    }

    #[test]
    fn logistic_limits() {
        let spec = ModelSpec::constant_neumann(&endemic_params(), 0.1, 0.2, 1.0).unwrap();
        let d = disc(&spec, 20, 100);
        let nodes = d.grid.nodes();
        let init: Vec<f64> = nodes.iter().map(|x| 0.2 + x).collect();
        let tr = simulate_logistic(&d, Species::Host, init.clone(), 40.0, 1000).unwrap();
        assert!(tr.last().u.iter().all(|v| (v - 1.0).abs() < 1e-10));

        let p = ConstantParams::new([1.0, 1.5, 1.0, 3.0], [3.0, 1.0, 1.0, 2.0]);
        let spec = ModelSpec::constant_neumann(&p, 0.1, 0.2, 1.0).unwrap();
        let d = disc(&spec, 20, 100);
        let tr = simulate_logistic(&d, Species::Host, init, 60.0, 1000).unwrap();
        assert!(tr.last().u.iter().all(|v| *v < 1e-10));
    }

    /// Space-constant periodic logistic equation u' = (1 + cos 2 pi t) u - u^2
    /// against a fine RK4 integration of the same ODE.
    #[test]
    fn periodic_logistic_matches_ode() {
        let len = 1.0;
        let c = |v| CoefficientField::constant(v, len, 1.0);
        let mut cs = crate::model::make_parametric_family(&HeterogeneityParams::default()).unwrap();
        cs.a1 = CoefficientField::expression("2 + cos(2*pi*t)", len, 1.0).unwrap();
        cs.b1 = c(1.0);
        let spec = ModelSpec::new(
            len,
            1.0,
            crate::model::BoundaryCondition::neumann(len, 1.0),
            crate::model::BoundaryCondition::neumann(len, 1.0),
            cs,
        )
        .unwrap();

        // oracle: RK4 with 20000 steps per period
        let f = |t: f64, u: f64| (1.0 + (2.0 * std::f64::consts::PI * t).cos()) * u - u * u;
        let mut u = 0.5;
        let h = 1.0 / 20_000.0;
        let mut t = 0.0;
        for _ in 0..(40 * 20_000) {
            let k1 = f(t, u);
            let k2 = f(t + h / 2.0, u + h / 2.0 * k1);
            let k3 = f(t + h / 2.0, u + h / 2.0 * k2);
            let k4 = f(t + h, u + h * k3);
            u += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            t += h;
        }
        let mut errs = Vec::new();
        for steps in [500, 1000] {
            let d = disc(&spec, 8, steps);
            let tr = simulate_logistic(&d, Species::Host, vec![0.5; 9], 40.0, steps).unwrap();
            let last = tr.last();
            errs.push(last.u.iter().fold(0.0f64, |m, v| m.max((v - u).abs())));
        }
        assert!(errs[1] < 2e-3, "{errs:?}");
        assert!(errs[0] / errs[1] > 1.6, "{errs:?}");
    }

    #[test]
    fn sum_identity_step_by_step() {
        let spec = ModelSpec::section5(&HeterogeneityParams::new([0.5; 4], [0.3, -0.2, 0.1, 0.4])).unwrap();
        let d = disc(&spec, 30, 100);
        let init = StateField::from_fn(&d.grid.nodes(), |x| [1.0 - 0.3 * x, 0.2, 0.5 + x, 0.3]);
        let full = simulate_full(&d, init.clone(), 3.0, 1).unwrap();
        let host = simulate_logistic(&d, Species::Host, init.host_total(), 3.0, 1).unwrap();
        let vec = simulate_logistic(&d, Species::Vector, init.vector_total(), 3.0, 1).unwrap();
        for ((f, h), v) in full.snapshots.iter().zip(&host.snapshots).zip(&vec.snapshots) {
            let gh = f
                .host_total()
                .iter()
                .zip(&h.u)
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            let gv = f
                .vector_total()
                .iter()
                .zip(&v.u)
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            assert!(gh < 1e-12 && gv < 1e-12, "{gh} {gv}");
        }
    }

    #[test]
    fn dirichlet_init_is_projected() {
        let mut spec = baseline();
        spec.bc_host = crate::model::BoundaryCondition::dirichlet(1.0, 1.0);
        spec.bc_vector = crate::model::BoundaryCondition::dirichlet(1.0, 1.0);
        let d = disc(&spec, 20, 100);
        let tr = simulate_full(&d, StateField::constant(21, [1.0, 0.1, 1.0, 0.1]), 0.5, 10).unwrap();
        for s in &tr.snapshots {
            for u in [&s.hu, &s.hi, &s.vu, &s.vi] {
                assert_eq!((u[0], u[20]), (0.0, 0.0));
            }
        }
    }

    #[test]
    fn input_validation() {
        let d = disc(&baseline(), 20, 100);
        assert!(simulate_full(&d, StateField::zeros(21), 0.0, 1).is_err());
        assert!(simulate_full(&d, StateField::zeros(5), 1.0, 1).is_err());
        let mut bad = StateField::constant(21, [1.0, 0.0, 1.0, 0.0]);
        bad.hi[3] = -1e-6;
        assert!(matches!(
            simulate_full(&d, bad, 1.0, 1),
            Err(Error::Positivity {
                component: "hi",
                node: 3,
                ..
            })
        ));
    }

    #[test]
    fn modified_model_reduces_to_bilinear() {
        let spec = ModelSpec::section5(&HeterogeneityParams::new([0.2; 4], [0.0; 4])).unwrap();
        let d = disc(&spec, 20, 100);
        let init = StateField::from_fn(&d.grid.nodes(), |x| [1.0 - 0.4 * x, 0.4 * x, 0.7, 0.2]);
        let a = FullSystem::new(&d).step(&init).unwrap();
        let b = ModifiedSystem::new(&d).unwrap().step(&init).unwrap();
        assert!(a.sup_distance(&b) < 1e-12);
    }

    #[test]
    fn modified_model_totals_and_invariant_subspace() {
        let mut p = endemic_params();
        p.gamma = Some(0.5);
        let spec = ModelSpec::constant_neumann(&p, 0.1, 0.2, 1.0).unwrap();
        let d = disc(&spec, 20, 100);
        let nodes = d.grid.nodes();
        let init = StateField::from_fn(&nodes, |x| [0.5 + x, 0.3, 1.0, 0.2 + 0.1 * x]);
        let tr = simulate_modified(&d, init, 60.0, 6000).unwrap();
        let s = tr.last();
        assert!(s.host_total().iter().all(|v| (v - 1.0).abs() < 1e-8));
        assert!(s.vector_total().iter().all(|v| (v - 2.0).abs() < 1e-8));

        let clean = StateField::from_fn(&nodes, |x| [0.5 + x, 0.0, 1.0, 0.0]);
        let tr = simulate_modified(&d, clean, 30.0, 3000).unwrap();
        let s = tr.last();
        assert!(s.hi.iter().chain(&s.vi).all(|v| *v == 0.0));
        assert!(s.hu.iter().all(|v| (v - 1.0).abs() < 1e-8));

        let mut spec_d = spec.clone();
        spec_d.bc_host = crate::model::BoundaryCondition::dirichlet(1.0, 1.0);
        spec_d.bc_vector = crate::model::BoundaryCondition::dirichlet(1.0, 1.0);
        let dd = disc(&spec_d, 20, 100);
        assert!(matches!(ModifiedSystem::new(&dd), Err(Error::Unsupported(_))));
    }

    #[test]
    fn reduced_zero_stays_zero() {
        let spec = ModelSpec::constant_neumann(&endemic_params(), 0.1, 0.2, 1.0).unwrap();
        let d = disc(&spec, 10, 50);
        let h: Vec<ScalarState> = (0..=50)
            .map(|k| ScalarState {
                u: vec![1.0; 11],
                t: k as f64 * d.dt,
            })
            .collect();
        let v: Vec<ScalarState> = (0..=50)
            .map(|k| ScalarState {
                u: vec![2.0; 11],
                t: k as f64 * d.dt,
            })
            .collect();
        let zero = InfectionState {
            hi: vec![0.0; 11],
            vi: vec![0.0; 11],
            t: 0.0,
        };
        let tr = simulate_reduced(&d, &h, &v, zero.clone(), 5.0, 50).unwrap();
        assert_eq!(tr.last().hi, zero.hi);

        let tr = simulate_reduced(
            &d,
            &h,
            &v,
            InfectionState {
                hi: vec![0.5; 11],
                vi: vec![0.5; 11],
                t: 0.0,
            },
            60.0,
            3000,
        )
        .unwrap();
        let s = tr.last();
        assert!(s.hi.iter().all(|x| (x - 0.375).abs() < 1e-8));
        assert!(s.vi.iter().all(|x| (x - 0.4).abs() < 1e-8));

        let over = InfectionState {
            hi: vec![1.5; 11],
            vi: vec![0.0; 11],
            t: 0.0,
        };
        assert!(simulate_reduced(&d, &h, &v, over, 1.0, 1).is_err());
    }
}
