//! Principal eigenvalues of linear periodic-parabolic problems by power
//! iteration on the period map, and reproduction numbers as the coupling
//! scale `mu` at which the principal eigenvalue vanishes.
//!
//! The period map uses the IMEX scheme of the solver: decay implicit,
//! source or cross coupling divided by `mu` explicit. It is applied with a
//! renormalization after every step, so arbitrarily fast growth or decay is
//! carried in `log_radius` without overflow.

use serde::{Deserialize, Serialize};

use crate::discretization::TridiagonalLu;
use crate::error::{Error, Result};
use crate::model::{ModelSpec, Species};
use crate::periodic::{logistic_orbit, PeriodicOrbit};
use crate::sampling::{Discretized, Numerics};
use crate::solver::ScalarState;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralOptions {
    /// Convergence threshold on successive `ln r` estimates.
    pub radius_tol: f64,
    /// Convergence threshold on the sup-normalized field movement.
    pub field_tol: f64,
    pub max_iterations: usize,
    /// Relative width of the final `mu` bracket.
    pub root_rel_tol: f64,
    pub mu_min: f64,
    pub mu_max: f64,
    pub orbit_tol: f64,
    pub max_periods: usize,
    /// Combine results at `dt` and `dt / 2` as `2 x(dt/2) - x(dt)`.
    pub extrapolate: bool,
}

impl Default for SpectralOptions {
    fn default() -> Self {
        Self {
            radius_tol: 1e-10,
            field_tol: 1e-8,
            max_iterations: 10_000,
            root_rel_tol: 1e-6,
            mu_min: 1e-6,
            mu_max: 1e6,
            orbit_tol: 1e-10,
            max_periods: 5000,
            extrapolate: true,
        }
    }
}

impl SpectralOptions {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("radius tolerance", self.radius_tol),
            ("field tolerance", self.field_tol),
            ("root tolerance", self.root_rel_tol),
            ("orbit tolerance", self.orbit_tol),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Validation(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.mu_min > 0.0 && self.mu_min < 1.0 && self.mu_max > 1.0) {
            return Err(Error::Validation("mu search range must contain 1".into()));
        }
        if self.max_iterations == 0 || self.max_periods == 0 {
            return Err(Error::Validation("iteration caps must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
struct StepData {
    lu: TridiagonalLu,
    /// Node-indexed explicit gain, multiplied by `1 / mu`.
    source: Vec<f64>,
}

#[derive(Debug, Clone)]
struct Component {
    offset: usize,
    unknowns: usize,
    /// Index of the component whose value feeds the gain.
    source_from: usize,
    steps: Vec<StepData>,
}

/// A linear `T`-periodic cooperative system with one or two components,
/// prepared for repeated application of its period map.
#[derive(Debug, Clone)]
pub struct LinearPeriodicProblem {
    nodes: usize,
    dt: f64,
    period: f64,
    comps: Vec<Component>,
}

fn factor_step(disc: &Discretized, k: usize, species: Species, sink: impl Fn(usize) -> f64) -> Result<TridiagonalLu> {
    let c = disc.coeffs(k + 1)?;
    let op = c.diffusion(species);
    let off = op.kind.offset();
    let dt = disc.dt;
    let diag: Vec<f64> = op
        .diag
        .iter()
        .enumerate()
        .map(|(j, d)| 1.0 + dt * (d + sink(j + off)))
        .collect();
    let lower: Vec<f64> = op.lower.iter().map(|v| dt * v).collect();
    let upper: Vec<f64> = op.upper.iter().map(|v| dt * v).collect();
    TridiagonalLu::factor(&lower, &diag, &upper)
}

impl LinearPeriodicProblem {
    /// `u_t - (d_j u_x)_x + b_j u = (a_j / mu) u` for species `j`.
    pub fn scalar(disc: &Discretized, species: Species) -> Result<Self> {
        let steps = disc.steps_per_period();
        let mut data = Vec::with_capacity(steps);
        for k in 0..steps {
            let c = disc.coeffs(k + 1)?;
            let (a, b, _, _) = c.rates(species);
            let lu = factor_step(disc, k, species, |i| b[i])?;
            data.push(StepData { lu, source: a.to_vec() });
        }
        let kind = disc.kind(species);
        Ok(Self {
            nodes: disc.node_count(),
            dt: disc.dt,
            period: disc.period(),
            comps: vec![Component {
                offset: kind.offset(),
                unknowns: kind.unknowns(&disc.grid),
                source_from: 0,
                steps: data,
            }],
        })
    }

    /// Linearization of the infection subsystem at zero around the
    /// periodic totals `H`, `V` (one period, `steps + 1` snapshots each):
    /// decay `b_1 + c_1 H`, `b_2 + c_2 V`, couplings `l_1 H / mu` and
    /// `l_2 V / mu`.
    pub fn coupled(disc: &Discretized, host: &[ScalarState], vector: &[ScalarState]) -> Result<Self> {
        let steps = disc.steps_per_period();
        for (name, orbit) in [("H", host), ("V", vector)] {
            if orbit.len() != steps + 1 {
                return Err(Error::Validation(format!(
                    "{name} orbit has {} snapshots, expected {}",
                    orbit.len(),
                    steps + 1
                )));
            }
            if orbit.iter().any(|s| s.u.len() != disc.node_count()) {
                return Err(Error::Validation(format!("{name} orbit does not match the grid")));
            }
        }
        let mut comps = Vec::new();
        for (ci, species, own) in [(0, Species::Host, host), (1, Species::Vector, vector)] {
            let kind = disc.kind(species);
            let off = kind.offset();
            let n = disc.node_count();
            // positivity of the driving total, needed for a cooperative coupling
            for s in own {
                if let Some(i) = (off..n - off).find(|&i| !(s.u[i] > 0.0)) {
                    return Err(Error::Validation(format!(
                        "{} orbit is not positive at node {i}, t = {}",
                        if ci == 0 { "H" } else { "V" },
                        s.t
                    )));
                }
            }
            let mut data = Vec::with_capacity(steps);
            for k in 0..steps {
                let c = disc.coeffs(k + 1)?;
                let (_, b, cc, l) = c.rates(species);
                let now = &own[k].u;
                let next = &own[k + 1].u;
                let lu = factor_step(disc, k, species, |i| b[i] + cc[i] * now[i])?;
                let source: Vec<f64> = (0..n).map(|i| l[i] * next[i]).collect();
                if let Some(v) = source.iter().find(|v| !(**v >= 0.0)) {
                    return Err(Error::Validation(format!(
                        "non-cooperative coupling: sampled {v} in component {ci}"
                    )));
                }
                data.push(StepData { lu, source });
            }
            comps.push(Component {
                offset: off,
                unknowns: kind.unknowns(&disc.grid),
                source_from: 1 - ci,
                steps: data,
            });
        }
        Ok(Self {
            nodes: disc.node_count(),
            dt: disc.dt,
            period: disc.period(),
            comps,
        })
    }

    pub fn component_count(&self) -> usize {
        self.comps.len()
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn steps(&self) -> usize {
        self.comps[0].steps.len()
    }

    /// Strictly positive start field: ones at the unknowns.
    pub fn ones(&self) -> Vec<Vec<f64>> {
        self.comps
            .iter()
            .map(|c| {
                let mut v = vec![0.0; self.nodes];
                v[c.offset..c.offset + c.unknowns].iter_mut().for_each(|x| *x = 1.0);
                v
            })
            .collect()
    }

    /// One step `k -> k + 1` in place. Gains use the values at step `k`.
    fn step(&self, k: usize, inv_mu: f64, u: &mut [Vec<f64>], old: &mut [Vec<f64>]) {
        for (o, v) in old.iter_mut().zip(u.iter()) {
            o.copy_from_slice(v);
        }
        for (ci, c) in self.comps.iter().enumerate() {
            let sd = &c.steps[k];
            let from = &old[c.source_from];
            let target = &mut u[ci];
            let scale = self.dt * inv_mu;
            for i in c.offset..c.offset + c.unknowns {
                target[i] += scale * sd.source[i] * from[i];
            }
            sd.lu.solve_in_place(&mut target[c.offset..c.offset + c.unknowns]);
        }
    }

    /// Applies the period map once without renormalization.
    pub fn poincare_step(&self, mu: f64, v: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        self.check_input(mu, v)?;
        let mut u = v.to_vec();
        let mut old = v.to_vec();
        for k in 0..self.steps() {
            self.step(k, 1.0 / mu, &mut u, &mut old);
        }
        Ok(u)
    }

    /// Period map with per-step renormalization. Returns the sup-normalized
    /// image and `ln` of its sup norm relative to the input's.
    fn normalized_period(&self, mu: f64, v: &[Vec<f64>]) -> Result<(Vec<Vec<f64>>, f64)> {
        let mut u = v.to_vec();
        let mut old = v.to_vec();
        let mut log_growth = -sup_all(v).ln();
        scale_all(&mut u, 1.0 / sup_all(v));
        for k in 0..self.steps() {
            self.step(k, 1.0 / mu, &mut u, &mut old);
            let s = sup_all(&u);
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::NonConvergence {
                    what: "power iteration",
                    iterations: 0,
                    residual: s,
                });
            }
            scale_all(&mut u, 1.0 / s);
            log_growth += s.ln();
        }
        Ok((u, log_growth))
    }

    fn check_input(&self, mu: f64, v: &[Vec<f64>]) -> Result<()> {
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::Validation(format!("coupling scale must be positive, got {mu}")));
        }
        if v.len() != self.comps.len() || v.iter().any(|c| c.len() != self.nodes) {
            return Err(Error::Validation("field does not match the problem layout".into()));
        }
        if v.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::Validation("field has non-finite entries".into()));
        }
        Ok(())
    }

    /// Principal eigenvalue at coupling scale `mu` by power iteration on the
    /// period map, optionally warm-started.
    pub fn principal_eigenvalue(
        &self,
        mu: f64,
        start: Option<&[Vec<f64>]>,
        opts: &SpectralOptions,
    ) -> Result<SpectralResult> {
        let mut v = match start {
            Some(s) => s.to_vec(),
            None => self.ones(),
        };
        self.check_input(mu, &v)?;
        let s0 = sup_all(&v);
        if !(s0 > 0.0) {
            return Err(Error::Validation("start field must be nonzero".into()));
        }
        scale_all(&mut v, 1.0 / s0);
        let mut prev = f64::NAN;
        let mut moved = f64::INFINITY;
        for it in 1..=opts.max_iterations {
            let (w, log_r) = self.normalized_period(mu, &v)?;
            moved = v
                .iter()
                .flatten()
                .zip(w.iter().flatten())
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            let settled = (log_r - prev).abs() < opts.radius_tol;
            prev = log_r;
            v = w;
            if settled && moved < opts.field_tol {
                return Ok(SpectralResult {
                    eigenvalue: -log_r / self.period,
                    log_radius: log_r,
                    spectral_radius: log_r.exp(),
                    eigenfunction: v,
                    iterations: it,
                    converged: true,
                    mu,
                });
            }
        }
        Err(Error::NonConvergence {
            what: "power iteration",
            iterations: opts.max_iterations,
            residual: moved,
        })
    }

    /// Relative residual `|P v - r v| / |r v|` of an eigenpair.
    pub fn eigen_residual(&self, result: &SpectralResult) -> Result<f64> {
        let pv = self.poincare_step(result.mu, &result.eigenfunction)?;
        let r = result.spectral_radius;
        let mut num = 0.0f64;
        let mut den = 0.0f64;
        for (a, b) in pv.iter().flatten().zip(result.eigenfunction.iter().flatten()) {
            num = num.max((a - r * b).abs());
            den = den.max((r * b).abs());
        }
        Ok(num / den)
    }

    /// The eigenfunction over one period, `steps + 1` snapshots, each
    /// rescaled so the `t = 0` snapshot has sup norm 1 and the
    /// exponential factor `e^{-eigenvalue t}` is removed.
    pub fn eigenfunction_over_period(&self, result: &SpectralResult) -> Result<Vec<Vec<Vec<f64>>>> {
        let mut u = result.eigenfunction.clone();
        let mut old = u.clone();
        let mut out = vec![u.clone()];
        let mut log_growth = 0.0;
        for k in 0..self.steps() {
            self.step(k, 1.0 / result.mu, &mut u, &mut old);
            let s = sup_all(&u);
            scale_all(&mut u, 1.0 / s);
            log_growth += s.ln();
            let t = (k + 1) as f64 * self.dt;
            let factor = (log_growth + result.eigenvalue * t).exp();
            let mut snap = u.clone();
            scale_all(&mut snap, factor);
            out.push(snap);
        }
        Ok(out)
    }
}

fn sup_all(v: &[Vec<f64>]) -> f64 {
    v.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn scale_all(v: &mut [Vec<f64>], s: f64) {
    v.iter_mut().flatten().for_each(|x| *x *= s);
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralResult {
    /// `-ln(r) / T` with `r` the spectral radius of the period map.
    pub eigenvalue: f64,
    pub log_radius: f64,
    pub spectral_radius: f64,
    /// Components at `t = 0`, node indexed, jointly sup-normalized.
    pub eigenfunction: Vec<Vec<f64>>,
    pub iterations: usize,
    pub converged: bool,
    pub mu: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct R0Result {
    pub value: f64,
    pub lambda_at_one: f64,
    pub bracket: [f64; 2],
    pub evaluations: usize,
    /// `sign(value - 1) == sign(-lambda_at_one)`.
    pub sign_consistent: bool,
}

/// Root of `mu -> eigenvalue(mu)`, which increases with `mu`.
pub fn reproduction_number(problem: &LinearPeriodicProblem, opts: &SpectralOptions) -> Result<R0Result> {
    opts.validate()?;
    let mut warm: Option<Vec<Vec<f64>>> = None;
    let mut evaluations = 0;
    let mut eval = |mu: f64, warm: &mut Option<Vec<Vec<f64>>>| -> Result<f64> {
        let r = problem.principal_eigenvalue(mu, warm.as_deref(), opts)?;
        evaluations += 1;
        *warm = Some(r.eigenfunction);
        Ok(r.eigenvalue)
    };
    let at_one = eval(1.0, &mut warm)?;
    if at_one == 0.0 {
        return Ok(R0Result {
            value: 1.0,
            lambda_at_one: 0.0,
            bracket: [1.0, 1.0],
            evaluations,
            sign_consistent: true,
        });
    }
    // (lo, f_lo) has a negative eigenvalue, (hi, f_hi) a positive one
    let (mut lo, mut f_lo, mut hi, mut f_hi);
    if at_one < 0.0 {
        lo = 1.0;
        f_lo = at_one;
        hi = 2.0;
        loop {
            f_hi = eval(hi, &mut warm)?;
            if f_hi >= 0.0 {
                break;
            }
            lo = hi;
            f_lo = f_hi;
            if hi >= opts.mu_max {
                return Err(Error::RootNotBracketed {
                    lo: 1.0,
                    hi: opts.mu_max,
                });
            }
            hi = (hi * 4.0).min(opts.mu_max);
        }
    } else {
        hi = 1.0;
        f_hi = at_one;
        lo = 0.5;
        loop {
            f_lo = eval(lo, &mut warm)?;
            if f_lo <= 0.0 {
                break;
            }
            hi = lo;
            f_hi = f_lo;
            if lo <= opts.mu_min {
                return Err(Error::RootNotBracketed {
                    lo: opts.mu_min,
                    hi: 1.0,
                });
            }
            lo = (lo / 4.0).max(opts.mu_min);
        }
    }
    if f_lo == 0.0 || f_hi == 0.0 {
        let value = if f_lo == 0.0 { lo } else { hi };
        return Ok(finish(value, at_one, [lo, hi], evaluations));
    }
    while hi / lo - 1.0 > opts.root_rel_tol {
        let mid = (lo * hi).sqrt();
        let f = eval(mid, &mut warm)?;
        if f == 0.0 {
            return Ok(finish(mid, at_one, [lo, hi], evaluations));
        }
        if f < 0.0 {
            lo = mid;
            f_lo = f;
        } else {
            hi = mid;
            f_hi = f;
        }
    }
    // secant in ln(mu) inside the final bracket
    let (a, b) = (lo.ln(), hi.ln());
    let root = a - f_lo * (b - a) / (f_hi - f_lo);
    Ok(finish(root.exp().clamp(lo, hi), at_one, [lo, hi], evaluations))
}

fn finish(value: f64, at_one: f64, bracket: [f64; 2], evaluations: usize) -> R0Result {
    let sign_consistent = (value - 1.0).signum() == (-at_one).signum() || value == 1.0 || at_one == 0.0;
    if !sign_consistent {
        log::warn!("R0 = {value} disagrees in sign with lambda(mu = 1) = {at_one}");
    }
    R0Result {
        value,
        lambda_at_one: at_one,
        bracket,
        evaluations,
        sign_consistent,
    }
}

/// Principal eigenvalue `zeta_j` of the scalar problem at fixed resolution.
pub fn principal_eigenvalue_scalar(
    disc: &Discretized,
    species: Species,
    opts: &SpectralOptions,
) -> Result<SpectralResult> {
    LinearPeriodicProblem::scalar(disc, species)?.principal_eigenvalue(1.0, None, opts)
}

/// Principal eigenvalue of the coupled linearization at coupling scale `mu`.
pub fn principal_eigenvalue_coupled(
    disc: &Discretized,
    host: &[ScalarState],
    vector: &[ScalarState],
    mu: f64,
    opts: &SpectralOptions,
) -> Result<SpectralResult> {
    LinearPeriodicProblem::coupled(disc, host, vector)?.principal_eigenvalue(mu, None, opts)
}

pub fn basic_reproduction_scalar(disc: &Discretized, species: Species, opts: &SpectralOptions) -> Result<R0Result> {
    reproduction_number(&LinearPeriodicProblem::scalar(disc, species)?, opts)
}

pub fn basic_reproduction_coupled(
    disc: &Discretized,
    host: &[ScalarState],
    vector: &[ScalarState],
    opts: &SpectralOptions,
) -> Result<R0Result> {
    reproduction_number(&LinearPeriodicProblem::coupled(disc, host, vector)?, opts)
}

/// Principal eigenvalue of the time-independent operator
/// `-(d_j u_x)_x + (b_j - a_j) u` sampled at `t = 0`, with eigenvector.
pub fn principal_eigenvalue_autonomous(disc: &Discretized, species: Species) -> Result<(f64, Vec<f64>)> {
    let c = disc.coeffs(0)?;
    let (a, b, _, _) = c.rates(species);
    let mut op = c.diffusion(species).clone();
    let off = op.kind.offset();
    for (k, d) in op.diag.iter_mut().enumerate() {
        *d += b[k + off] - a[k + off];
    }
    op.principal_eigenvalue(1e-14, 100_000)
}

/// Quantities at a single resolution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelResult {
    pub intervals: usize,
    pub steps_per_period: usize,
    pub zeta1: f64,
    pub zeta2: f64,
    #[serde(rename = "R01")]
    pub r01: f64,
    #[serde(rename = "R02")]
    pub r02: f64,
    pub lambda: Option<f64>,
    #[serde(rename = "R0")]
    pub r0: Option<f64>,
    pub sign_consistent: bool,
    pub orbit_periods: [usize; 2],
    pub orbit_residuals: [f64; 2],
    pub power_iterations: [usize; 3],
    pub root_evaluations: [usize; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub extrapolated: bool,
    pub levels: Vec<LevelResult>,
    /// Largest change of any reported quantity between the two levels.
    pub level_gap: Option<f64>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralReport {
    pub zeta1: f64,
    pub zeta2: f64,
    #[serde(rename = "R01")]
    pub r01: f64,
    #[serde(rename = "R02")]
    pub r02: f64,
    pub lambda: Option<f64>,
    #[serde(rename = "R0")]
    pub r0: Option<f64>,
    pub diagnostics: Diagnostics,
}

impl SpectralReport {
    /// True when `R0` exists and agrees in sign with `-lambda`.
    pub fn sign_consistent(&self) -> bool {
        match (self.r0, self.lambda) {
            (Some(r), Some(l)) => r == 1.0 || l == 0.0 || (r - 1.0).signum() == (-l).signum(),
            _ => true,
        }
    }
}

/// Computes every quantity of the report at one resolution. The coupled
/// quantities are left out when `R01 <= 1` or `R02 <= 1`.
pub fn level_result(spec: &ModelSpec, numerics: Numerics, opts: &SpectralOptions) -> Result<LevelResult> {
    opts.validate()?;
    let disc = Discretized::new(spec, numerics)?;
    let p1 = LinearPeriodicProblem::scalar(&disc, Species::Host)?;
    let p2 = LinearPeriodicProblem::scalar(&disc, Species::Vector)?;
    let z1 = p1.principal_eigenvalue(1.0, None, opts)?;
    let z2 = p2.principal_eigenvalue(1.0, None, opts)?;
    let r1 = reproduction_number(&p1, opts)?;
    let r2 = reproduction_number(&p2, opts)?;
    let mut out = LevelResult {
        intervals: numerics.intervals,
        steps_per_period: numerics.steps_per_period,
        zeta1: z1.eigenvalue,
        zeta2: z2.eigenvalue,
        r01: r1.value,
        r02: r2.value,
        lambda: None,
        r0: None,
        sign_consistent: r1.sign_consistent && r2.sign_consistent,
        orbit_periods: [0, 0],
        orbit_residuals: [0.0, 0.0],
        power_iterations: [z1.iterations, z2.iterations, 0],
        root_evaluations: [r1.evaluations, r2.evaluations, 0],
    };
    if r1.value <= 1.0 || r2.value <= 1.0 {
        return Ok(out);
    }
    let (h, v) = totals(&disc, opts)?;
    let coupled = LinearPeriodicProblem::coupled(&disc, &h.snapshots, &v.snapshots)?;
    let lam = coupled.principal_eigenvalue(1.0, None, opts)?;
    let r0 = reproduction_number(&coupled, opts)?;
    out.lambda = Some(lam.eigenvalue);
    out.r0 = Some(r0.value);
    out.sign_consistent &= r0.sign_consistent;
    out.orbit_periods = [h.periods_used, v.periods_used];
    out.orbit_residuals = [h.residual, v.residual];
    out.power_iterations[2] = lam.iterations;
    out.root_evaluations[2] = r0.evaluations;
    Ok(out)
}

/// Periodic logistic totals `H`, `V` at the resolution of `disc`.
pub fn totals(
    disc: &Discretized,
    opts: &SpectralOptions,
) -> Result<(PeriodicOrbit<ScalarState>, PeriodicOrbit<ScalarState>)> {
    let h = logistic_orbit(disc, Species::Host, opts.orbit_tol, opts.max_periods)?;
    let v = logistic_orbit(disc, Species::Vector, opts.orbit_tol, opts.max_periods)?;
    Ok((h, v))
}

/// Full report `{zeta1, zeta2, R01, R02, lambda, R0}`. With extrapolation
/// enabled each quantity is `2 x(dt/2) - x(dt)`, which removes the
/// first-order time error of the scheme.
pub fn spectral_report(spec: &ModelSpec, numerics: Numerics, opts: &SpectralOptions) -> Result<SpectralReport> {
    numerics.validate()?;
    let coarse = level_result(spec, numerics, opts)?;
    if !opts.extrapolate {
        let note = undefined_note(&coarse);
        return Ok(SpectralReport {
            zeta1: coarse.zeta1,
            zeta2: coarse.zeta2,
            r01: coarse.r01,
            r02: coarse.r02,
            lambda: coarse.lambda,
            r0: coarse.r0,
            diagnostics: Diagnostics {
                extrapolated: false,
                levels: vec![coarse],
                level_gap: None,
                note,
            },
        });
    }
    let fine_num = Numerics::new(numerics.intervals, numerics.steps_per_period * 2);
    let fine = level_result(spec, fine_num, opts)?;
    let ex = |c: f64, f: f64| 2.0 * f - c;
    let pair = |c: Option<f64>, f: Option<f64>| match (c, f) {
        (Some(c), Some(f)) => Some(ex(c, f)),
        _ => None,
    };
    let mut gap = [
        (coarse.zeta1 - fine.zeta1).abs(),
        (coarse.zeta2 - fine.zeta2).abs(),
        (coarse.r01 - fine.r01).abs(),
        (coarse.r02 - fine.r02).abs(),
    ]
    .into_iter()
    .fold(0.0f64, f64::max);
    if let (Some(a), Some(b)) = (coarse.lambda, fine.lambda) {
        gap = gap.max((a - b).abs());
    }
    if let (Some(a), Some(b)) = (coarse.r0, fine.r0) {
        gap = gap.max((a - b).abs());
    }
    let r01 = ex(coarse.r01, fine.r01);
    let r02 = ex(coarse.r02, fine.r02);
    let (lambda, r0) = if r01 > 1.0 && r02 > 1.0 {
        (pair(coarse.lambda, fine.lambda), pair(coarse.r0, fine.r0))
    } else {
        (None, None)
    };
    let mut note = undefined_note(&fine);
    if note.is_none() && lambda.is_none() {
        note = Some("R0 undefined: a species reproduction number is at most 1".into());
    }
    Ok(SpectralReport {
        zeta1: ex(coarse.zeta1, fine.zeta1),
        zeta2: ex(coarse.zeta2, fine.zeta2),
        r01,
        r02,
        lambda,
        r0,
        diagnostics: Diagnostics {
            extrapolated: true,
            levels: vec![coarse, fine],
            level_gap: Some(gap),
            note,
        },
    })
}

fn undefined_note(l: &LevelResult) -> Option<String> {
    if l.r01 <= 1.0 {
        Some("R0 undefined: R01 <= 1, host total dies out".into())
    } else if l.r02 <= 1.0 {
        Some("R0 undefined: R02 <= 1, vector total dies out".into())
    } else {
        None
    }
}
