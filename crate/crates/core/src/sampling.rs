//! A model bound to a grid and a time step: coefficient samples and
//! assembled diffusion operators for each step of one period.

use std::borrow::Cow;

use serde::{Deserialize, Serialize};

use crate::discretization::{
    assemble_diffusion, build_grid, sample_diffusion, BoundaryKind, Grid, TridiagonalOperator,
};
use crate::error::{Error, Result};
use crate::model::{ModelSpec, Species};

/// Spatial and temporal resolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Numerics {
    /// Number of grid intervals `N`.
    pub intervals: usize,
    /// Time steps per period; `dt = T / steps_per_period`.
    pub steps_per_period: usize,
}

impl Default for Numerics {
    fn default() -> Self {
        Self {
            intervals: 200,
            steps_per_period: 1000,
        }
    }
}

impl Numerics {
    pub fn new(intervals: usize, steps_per_period: usize) -> Self {
        Self {
            intervals,
            steps_per_period,
        }
    }

    /// Converts a requested `dt` into a step count, requiring `dt` to divide
    /// the period to within `1e-12`.
    pub fn with_dt(intervals: usize, period: f64, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Validation(format!("dt must be positive, got {dt}")));
        }
        let steps = (period / dt).round();
        if steps < 1.0 || (steps * dt - period).abs() > 1e-12 * period.max(1.0) {
            return Err(Error::Validation(format!(
                "dt = {dt} does not divide the period {period}"
            )));
        }
        Ok(Self::new(intervals, steps as usize))
    }

    /// Doubles both resolutions.
    pub fn refined(self) -> Self {
        Self::new(self.intervals * 2, self.steps_per_period * 2)
    }

    pub fn validate(&self) -> Result<()> {
        if self.intervals < 4 {
            return Err(Error::Validation(format!(
                "N must be at least 4, got {}",
                self.intervals
            )));
        }
        if self.steps_per_period == 0 {
            return Err(Error::Validation("steps per period must be positive".into()));
        }
        Ok(())
    }
}

/// Samples needed by one implicit step ending at time `t`.
#[derive(Debug, Clone)]
pub struct StepCoefficients {
    pub t: f64,
    pub host_diffusion: TridiagonalOperator,
    pub vector_diffusion: TridiagonalOperator,
    pub a1: Vec<f64>,
    pub b1: Vec<f64>,
    pub c1: Vec<f64>,
    pub l1: Vec<f64>,
    pub a2: Vec<f64>,
    pub b2: Vec<f64>,
    pub c2: Vec<f64>,
    pub l2: Vec<f64>,
    pub gamma: Option<Vec<f64>>,
}

impl StepCoefficients {
    pub fn diffusion(&self, s: Species) -> &TridiagonalOperator {
        match s {
            Species::Host => &self.host_diffusion,
            Species::Vector => &self.vector_diffusion,
        }
    }

    /// `(a, b, c, l)` of one species.
    pub fn rates(&self, s: Species) -> (&[f64], &[f64], &[f64], &[f64]) {
        match s {
            Species::Host => (&self.a1, &self.b1, &self.c1, &self.l1),
            Species::Vector => (&self.a2, &self.b2, &self.c2, &self.l2),
        }
    }
}

/// Above this many stored values the per-period table is not kept and
/// samples are recomputed every step.
const CACHE_BUDGET: usize = 12_000_000;

#[derive(Debug, Clone)]
pub struct Discretized {
    pub spec: ModelSpec,
    pub grid: Grid,
    pub numerics: Numerics,
    pub dt: f64,
    table: Option<Vec<StepCoefficients>>,
}

impl Discretized {
    pub fn new(spec: &ModelSpec, numerics: Numerics) -> Result<Self> {
        numerics.validate()?;
        let grid = build_grid(spec.length, numerics.intervals)?;
        let dt = spec.period / numerics.steps_per_period as f64;
        let mut disc = Self {
            spec: spec.clone(),
            grid,
            numerics,
            dt,
            table: None,
        };
        let per_step = 17 * grid.node_count();
        if per_step * numerics.steps_per_period <= CACHE_BUDGET {
            let table = (0..numerics.steps_per_period)
                .map(|k| disc.sample(k))
                .collect::<Result<Vec<_>>>()?;
            disc.table = Some(table);
        } else {
            // still reject bad diffusion up front
            disc.sample(0)?;
        }
        Ok(disc)
    }

    pub fn steps_per_period(&self) -> usize {
        self.numerics.steps_per_period
    }

    pub fn period(&self) -> f64 {
        self.spec.period
    }

    pub fn node_count(&self) -> usize {
        self.grid.node_count()
    }

    pub fn kind(&self, s: Species) -> BoundaryKind {
        BoundaryKind::of(self.spec.bc(s))
    }

    /// Step index of time `t` (a multiple of `dt`).
    #[inline]
    pub fn step_index(&self, t: f64) -> usize {
        (t / self.dt).round() as usize
    }

    /// Coefficients at time `k dt`, periodically wrapped.
    pub fn coeffs(&self, k: usize) -> Result<Cow<'_, StepCoefficients>> {
        let k = k % self.numerics.steps_per_period;
        match &self.table {
            Some(t) => Ok(Cow::Borrowed(&t[k])),
            None => Ok(Cow::Owned(self.sample(k)?)),
        }
    }

    fn sample(&self, k: usize) -> Result<StepCoefficients> {
        let t = k as f64 * self.dt;
        let g = &self.grid;
        let cs = &self.spec.coeffs;
        let nodes = g.nodes();
        let at = |f: &crate::model::CoefficientField| -> Vec<f64> { nodes.iter().map(|&x| f.value(x, t)).collect() };
        let op = |s: Species| -> Result<TridiagonalOperator> {
            let d = match s {
                Species::Host => &cs.d1,
                Species::Vector => &cs.d2,
            };
            let bc = self.spec.bc(s);
            let (faces, ends) = sample_diffusion(g, d, t)?;
            let beta = [bc.beta.value(0.0, t), bc.beta.value(g.length, t)];
            Ok(assemble_diffusion(g, BoundaryKind::of(bc), &faces, ends, beta))
        };
        Ok(StepCoefficients {
            t,
            host_diffusion: op(Species::Host)?,
            vector_diffusion: op(Species::Vector)?,
            a1: at(&cs.a1),
            b1: at(&cs.b1),
            c1: at(&cs.c1),
            l1: at(&cs.l1),
            a2: at(&cs.a2),
            b2: at(&cs.b2),
            c2: at(&cs.c2),
            l2: at(&cs.l2),
            gamma: cs.gamma.as_ref().map(at),
        })
    }

    /// `max(a - b)^+ / min c` over the sampled nodes of one period: the
    /// level no logistic total can exceed in the long run.
    pub fn carrying_bound(&self, s: Species) -> Result<f64> {
        let mut growth = 0.0f64;
        let mut crowd = f64::INFINITY;
        for k in 0..self.steps_per_period() {
            let c = self.coeffs(k)?;
            let (a, b, cc, _) = c.rates(s);
            for i in 0..a.len() {
                growth = growth.max(a[i] - b[i]);
                crowd = crowd.min(cc[i]);
            }
        }
        Ok(growth / crowd)
    }
}
