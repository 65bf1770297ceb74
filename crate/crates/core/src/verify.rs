//! Side-by-side comparison of numerical results with the closed forms of
//! the space-time constant model.

use serde::{Deserialize, Serialize};

use crate::analytic::{constant_case_report, ConstantCaseReport, ConstantParams};
use crate::dynamics::full_orbit;
use crate::error::Result;
use crate::model::ModelSpec;
use crate::sampling::{Discretized, Numerics};
use crate::solver::{StateField, SystemState};
use crate::spectral::{spectral_report, SpectralOptions, SpectralReport};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub quantity: String,
    pub numeric: f64,
    pub exact: f64,
    /// `|numeric - exact| / |exact|`, or the absolute gap when the exact
    /// value is zero.
    pub gap: f64,
}

impl Comparison {
    pub fn new(quantity: &str, numeric: f64, exact: f64) -> Self {
        let abs = (numeric - exact).abs();
        let gap = if exact.abs() > 1e-12 { abs / exact.abs() } else { abs };
        Self {
            quantity: quantity.to_string(),
            numeric,
            exact,
            gap,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub params: ConstantParams,
    pub diffusion: [f64; 2],
    pub numerics: Numerics,
    pub analytic: ConstantCaseReport,
    pub rows: Vec<Comparison>,
    pub max_gap: f64,
    pub spectral: SpectralReport,
}

/// Compares `zeta_j`, `R0_j`, `lambda`, `R0` and, when it exists, the
/// endemic equilibrium against the numerical periodic orbit of the full
/// system on `[0, 1]` with no-flux boundaries.
pub fn verify_constant(
    params: &ConstantParams,
    diffusion: [f64; 2],
    numerics: Numerics,
    opts: &SpectralOptions,
) -> Result<VerifyReport> {
    let exact = constant_case_report(params)?;
    let spec = ModelSpec::constant_neumann(params, diffusion[0], diffusion[1], 1.0)?;
    let rep = spectral_report(&spec, numerics, opts)?;
    let mut rows = vec![
        Comparison::new("zeta1", rep.zeta1, exact.zeta1),
        Comparison::new("zeta2", rep.zeta2, exact.zeta2),
        Comparison::new("R01", rep.r01, exact.r01),
        Comparison::new("R02", rep.r02, exact.r02),
    ];
    if let (Some(l), Some(le)) = (rep.lambda, exact.lambda) {
        rows.push(Comparison::new("lambda", l, le));
    }
    if let (Some(r), Some(re)) = (rep.r0, exact.r0) {
        rows.push(Comparison::new("R0", r, re));
    }
    if let Some(eq) = exact.equilibrium {
        let disc = Discretized::new(&spec, numerics)?;
        let n = disc.node_count();
        let init = StateField::constant(n, eq.map(|v| 0.5 * v + 0.1));
        let orbit = full_orbit(&disc, init, opts.orbit_tol.max(1e-10), opts.max_periods)?;
        for (c, name) in ["Hu", "Hi", "Vu", "Vi"].iter().enumerate() {
            let mut worst = eq[c];
            for s in &orbit.snapshots {
                for v in s.components()[c].1 {
                    if (v - eq[c]).abs() > (worst - eq[c]).abs() {
                        worst = *v;
                    }
                }
            }
            rows.push(Comparison::new(&format!("equilibrium_{name}"), worst, eq[c]));
        }
    }
    let max_gap = rows.iter().fold(0.0f64, |m, r| m.max(r.gap));
    Ok(VerifyReport {
        params: *params,
        diffusion,
        numerics,
        analytic: exact,
        rows,
        max_gap,
        spectral: rep,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endemic_example() {
        let p = ConstantParams::parse_list("2,1,1,3,3,1,1,2").unwrap();
        let r = verify_constant(&p, [0.1, 0.2], Numerics::new(20, 200), &SpectralOptions::default()).unwrap();
        assert!(r.max_gap < 1e-3, "{:#?}", r.rows);
        assert_eq!(r.rows.len(), 10);
    }
}
