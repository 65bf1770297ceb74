//! Closed forms for constant coefficients with no-flux boundaries, regime
//! classification, and the Dirichlet reference eigenvalue used by the
//! convergence tests. Pure arithmetic; no discretization.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Constant rates `(a1, b1, c1, l1; a2, b2, c2, l2)`, optional recovery rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstantParams {
    pub a1: f64,
    pub b1: f64,
    pub c1: f64,
    pub l1: f64,
    pub a2: f64,
    pub b2: f64,
    pub c2: f64,
    pub l2: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
}

impl ConstantParams {
    /// Host rates then vector rates, in the order `a b c l`.
    pub fn new(host: [f64; 4], vector: [f64; 4]) -> Self {
        Self {
            a1: host[0],
            b1: host[1],
            c1: host[2],
            l1: host[3],
            a2: vector[0],
            b2: vector[1],
            c2: vector[2],
            l2: vector[3],
            gamma: None,
        }
    }

    /// Parses `a1,b1,c1,l1,a2,b2,c2,l2`.
    pub fn parse_list(s: &str) -> Result<Self> {
        let v: Vec<f64> = s
            .split(',')
            .map(|t| t.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Config(format!("bad parameter list '{s}': {e}")))?;
        if v.len() != 8 {
            return Err(Error::Config(format!(
                "expected 8 comma-separated values a1,b1,c1,l1,a2,b2,c2,l2, got {}",
                v.len()
            )));
        }
        Ok(Self::new([v[0], v[1], v[2], v[3]], [v[4], v[5], v[6], v[7]]))
    }

    pub fn validate(&self) -> Result<()> {
        let pos = [("a1", self.a1), ("a2", self.a2), ("c1", self.c1), ("c2", self.c2)];
        for (n, v) in pos {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Validation(format!("{n} must be positive, got {v}")));
            }
        }
        let nonneg = [("b1", self.b1), ("b2", self.b2), ("l1", self.l1), ("l2", self.l2)];
        for (n, v) in nonneg.into_iter().chain(self.gamma.map(|g| ("gamma", g))) {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Validation(format!("{n} must be nonnegative, got {v}")));
            }
        }
        Ok(())
    }

    /// `l1 l2 (a1 - b1)(a2 - b2) / (c1 c2)`, the quantity compared against
    /// `a1 a2` to decide endemicity.
    pub fn transmission_product(&self) -> f64 {
        self.l1 * self.l2 * (self.a1 - self.b1) * (self.a2 - self.b2) / (self.c1 * self.c2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Regime {
    Endemic,
    DiseaseFree,
    HostExtinct,
    VectorExtinct,
    AllExtinct,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantCaseReport {
    pub zeta1: f64,
    pub zeta2: f64,
    #[serde(rename = "R01")]
    pub r01: f64,
    #[serde(rename = "R02")]
    pub r02: f64,
    /// Host carrying capacity, present when positive.
    #[serde(rename = "H")]
    pub h: Option<f64>,
    #[serde(rename = "V")]
    pub v: Option<f64>,
    /// Defined only when both species persist.
    pub lambda: Option<f64>,
    #[serde(rename = "R0")]
    pub r0: Option<f64>,
    /// `(Hu, Hi, Vu, Vi)` in the endemic regime.
    pub equilibrium: Option<[f64; 4]>,
    pub regime: Regime,
}

pub fn classify_regime(p: &ConstantParams) -> Regime {
    let host = p.a1 > p.b1;
    let vector = p.a2 > p.b2;
    match (host, vector) {
        (true, true) => {
            if p.a1 * p.a2 < p.transmission_product() {
                Regime::Endemic
            } else {
                Regime::DiseaseFree
            }
        }
        (false, true) => Regime::HostExtinct,
        (true, false) => Regime::VectorExtinct,
        (false, false) => Regime::AllExtinct,
    }
}

/// Principal eigenvalue of the constant linearized infection system at
/// the disease-free state.
pub fn lambda_closed_form(p: &ConstantParams) -> f64 {
    let disc = (p.a1 - p.a2).powi(2) + 4.0 * p.transmission_product();
    0.5 * (p.a1 + p.a2 - disc.sqrt())
}

pub fn r0_closed_form(p: &ConstantParams) -> f64 {
    (p.transmission_product() / (p.a1 * p.a2)).sqrt()
}

/// The positive equilibrium `(Hu, Hi, Vu, Vi)`, or `None` outside the
/// endemic regime.
pub fn endemic_equilibrium(p: &ConstantParams) -> Option<[f64; 4]> {
    if classify_regime(p) != Regime::Endemic {
        return None;
    }
    let (a1, b1, c1, l1) = (p.a1, p.b1, p.c1, p.l1);
    let (a2, b2, c2, l2) = (p.a2, p.b2, p.c2, p.l2);
    let excess = l1 * l2 * (a1 - b1) * (a2 - b2) - a1 * a2 * c1 * c2;
    let host_den = c1 * l2 * (a1 * c2 + l1 * (a2 - b2));
    let vec_den = c2 * l1 * (a2 * c1 + l2 * (a1 - b1));
    let hu = a1 * c2 * (a2 * c1 + l2 * (a1 - b1)) / host_den;
    let hi = excess / host_den;
    let vu = a2 * c1 * (a1 * c2 + l1 * (a2 - b2)) / vec_den;
    let vi = excess / vec_den;
    Some([hu, hi, vu, vi])
}

/// Right-hand side of the constant-coefficient equilibrium equations at a
/// state; all four entries vanish at an equilibrium.
pub fn equilibrium_residual(p: &ConstantParams, s: [f64; 4]) -> [f64; 4] {
    let [hu, hi, vu, vi] = s;
    let (h, v) = (hu + hi, vu + vi);
    [
        p.a1 * h - p.b1 * hu - p.c1 * h * hu - p.l1 * hu * vi,
        p.l1 * hu * vi - p.b1 * hi - p.c1 * h * hi,
        p.a2 * v - p.b2 * vu - p.c2 * v * vu - p.l2 * hi * vu,
        p.l2 * hi * vu - p.b2 * vi - p.c2 * v * vi,
    ]
}

pub fn constant_case_report(p: &ConstantParams) -> Result<ConstantCaseReport> {
    p.validate()?;
    if p.b1 == 0.0 {
        return Err(Error::DivisionDomain("R01 = a1/b1 requires b1 > 0".into()));
    }
    if p.b2 == 0.0 {
        return Err(Error::DivisionDomain("R02 = a2/b2 requires b2 > 0".into()));
    }
    let regime = classify_regime(p);
    let h = (p.a1 > p.b1).then(|| (p.a1 - p.b1) / p.c1);
    let v = (p.a2 > p.b2).then(|| (p.a2 - p.b2) / p.c2);
    let both = h.is_some() && v.is_some();
    Ok(ConstantCaseReport {
        zeta1: p.b1 - p.a1,
        zeta2: p.b2 - p.a2,
        r01: p.a1 / p.b1,
        r02: p.a2 / p.b2,
        h,
        v,
        lambda: both.then(|| lambda_closed_form(p)),
        r0: both.then(|| r0_closed_form(p)),
        equilibrium: endemic_equilibrium(p),
        regime,
    })
}

/// `d pi^2 / L^2 + net_decay`: principal eigenvalue of
/// `-d u'' + net_decay u` with zero Dirichlet data on `[0, L]`.
pub fn reference_eigenvalue_dirichlet(d: f64, net_decay: f64, length: f64) -> f64 {
    d * PI * PI / (length * length) + net_decay
}
