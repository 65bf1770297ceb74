//! JSON model configuration documents.
//!
//! ```json
//! {
//!   "length": 1.0,
//!   "period": 1.0,
//!   "bc_host":   { "alpha": 1, "beta": 0.0 },
//!   "bc_vector": { "alpha": 1, "beta": "0.5 + 0.1*cos(2*pi*t)" },
//!   "family": { "type": "section5", "p": [0.5, 0.5, 0.5, 0.5], "q": [0, 0, 0, 0] }
//! }
//! ```
//!
//! An optional `"numerics": {"intervals": 200, "dt": 0.001}` block sets the
//! default resolution for commands run on this model.
//!
//! `family.type` is one of `section5` (keys `p`, `q`), `constant` (keys
//! `d1 d2 a1 a2 b1 b2 c1 c2 l1 l2`, optional `gamma`, all numbers) or
//! `custom-expression` (same keys, each a number or an expression string in
//! the grammar of [`crate::model::expr`]).

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    make_parametric_family, BoundaryCondition, CoefficientField, CoefficientSet, HeterogeneityParams, ModelSpec,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FieldValue {
    Number(f64),
    Expr(String),
}

impl FieldValue {
    fn build(&self, length: f64, period: f64) -> Result<CoefficientField> {
        match self {
            FieldValue::Number(v) => Ok(CoefficientField::constant(*v, length, period)),
            FieldValue::Expr(s) => CoefficientField::expression(s, length, period),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundaryConfig {
    pub alpha: u8,
    pub beta: FieldValue,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", deny_unknown_fields)]
pub enum FamilyConfig {
    #[serde(rename = "section5")]
    Section5 { p: [f64; 4], q: [f64; 4] },
    #[serde(rename = "constant")]
    Constant {
        d1: f64,
        d2: f64,
        a1: f64,
        a2: f64,
        b1: f64,
        b2: f64,
        c1: f64,
        c2: f64,
        l1: f64,
        l2: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        gamma: Option<f64>,
    },
    #[serde(rename = "custom-expression")]
    Custom {
        d1: FieldValue,
        d2: FieldValue,
        a1: FieldValue,
        a2: FieldValue,
        b1: FieldValue,
        b2: FieldValue,
        c1: FieldValue,
        c2: FieldValue,
        l1: FieldValue,
        l2: FieldValue,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        gamma: Option<FieldValue>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub length: f64,
    pub period: f64,
    pub bc_host: BoundaryConfig,
    pub bc_vector: BoundaryConfig,
    pub family: FamilyConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub numerics: Option<NumericsConfig>,
}

/// Optional resolution stored alongside a model; command-line flags take
/// precedence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumericsConfig {
    #[serde(default)]
    pub intervals: Option<usize>,
    #[serde(default)]
    pub dt: Option<f64>,
}

impl ModelConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Inline heterogeneity-family configuration with no-flux boundaries.
    pub fn section5(params: &HeterogeneityParams) -> Self {
        let neumann = BoundaryConfig {
            alpha: 1,
            beta: FieldValue::Number(0.0),
        };
        Self {
            length: 1.0,
            period: 1.0,
            bc_host: neumann.clone(),
            bc_vector: neumann,
            family: FamilyConfig::Section5 {
                p: params.p,
                q: params.q,
            },
            numerics: None,
        }
    }

    pub fn build(&self) -> Result<ModelSpec> {
        let (len, per) = (self.length, self.period);
        let coeffs = match &self.family {
            FamilyConfig::Section5 { p, q } => {
                if (len - 1.0).abs() > 0.0 || (per - 1.0).abs() > 0.0 {
                    return Err(Error::Config(
                        "the section5 family is defined on [0, 1] with period 1".into(),
                    ));
                }
                make_parametric_family(&HeterogeneityParams::new(*p, *q))?
            }
            FamilyConfig::Constant {
                d1,
                d2,
                a1,
                a2,
                b1,
                b2,
                c1,
                c2,
                l1,
                l2,
                gamma,
            } => {
                let c = |v: f64| CoefficientField::constant(v, len, per);
                CoefficientSet {
                    d1: c(*d1),
                    d2: c(*d2),
                    a1: c(*a1),
                    a2: c(*a2),
                    b1: c(*b1),
                    b2: c(*b2),
                    c1: c(*c1),
                    c2: c(*c2),
                    l1: c(*l1),
                    l2: c(*l2),
                    gamma: gamma.map(c),
                }
            }
            FamilyConfig::Custom {
                d1,
                d2,
                a1,
                a2,
                b1,
                b2,
                c1,
                c2,
                l1,
                l2,
                gamma,
            } => CoefficientSet {
                d1: d1.build(len, per)?,
                d2: d2.build(len, per)?,
                a1: a1.build(len, per)?,
                a2: a2.build(len, per)?,
                b1: b1.build(len, per)?,
                b2: b2.build(len, per)?,
                c1: c1.build(len, per)?,
                c2: c2.build(len, per)?,
                l1: l1.build(len, per)?,
                l2: l2.build(len, per)?,
                gamma: gamma.as_ref().map(|g| g.build(len, per)).transpose()?,
            },
        };
        let bc = |b: &BoundaryConfig| -> Result<BoundaryCondition> {
            Ok(BoundaryCondition {
                alpha: b.alpha,
                beta: b.beta.build(len, per)?,
            })
        };
        ModelSpec::new(len, per, bc(&self.bc_host)?, bc(&self.bc_vector)?, coeffs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate_model;

    #[test]
    fn parses_each_family() {
        let doc = r#"{
            "length": 1.0, "period": 1.0,
            "bc_host": {"alpha": 1, "beta": 0.0},
            "bc_vector": {"alpha": 1, "beta": 0},
            "family": {"type": "section5", "p": [0.5,0.5,0.5,0.5], "q": [0,0,0,0]}
        }"#;
        let cfg = ModelConfig::from_json(doc).unwrap();
        let spec = cfg.build().unwrap();
        assert!((spec.coeffs.a1.value(0.0, 0.0) - 4.5).abs() < 1e-15);
        assert!(validate_model(&spec).passed());

        let doc = r#"{
            "length": 2.0, "period": 0.5,
            "bc_host": {"alpha": 0, "beta": 1},
            "bc_vector": {"alpha": 0, "beta": 1},
            "family": {"type": "custom-expression",
                "d1": "0.1*(1 + 0.5*x)", "d2": 0.2,
                "a1": "2 + cos(4*pi*t)", "a2": 3, "b1": 1, "b2": "2*(1+0.3*sin(pi*x/2))",
                "c1": 1, "c2": 1, "l1": 3, "l2": "2", "gamma": 0.5}
        }"#;
        let spec = ModelConfig::from_json(doc).unwrap().build().unwrap();
        assert!((spec.coeffs.d1.value(2.0, 0.0) - 0.2).abs() < 1e-15);
        assert!((spec.coeffs.a1.value(0.0, 0.5) - 3.0).abs() < 1e-12);
        assert!(spec.coeffs.gamma.is_some());
        assert!(validate_model(&spec).passed(), "{:?}", validate_model(&spec));

        let cfg = ModelConfig {
            length: 1.0,
            period: 1.0,
            bc_host: BoundaryConfig {
                alpha: 1,
                beta: FieldValue::Number(0.0),
            },
            bc_vector: BoundaryConfig {
                alpha: 1,
                beta: FieldValue::Number(0.0),
            },
            family: FamilyConfig::Constant {
                d1: 0.1,
                d2: 0.2,
                a1: 2.0,
                a2: 3.0,
                b1: 1.0,
                b2: 1.0,
                c1: 1.0,
                c2: 1.0,
                l1: 3.0,
                l2: 2.0,
                gamma: None,
            },
            numerics: Some(NumericsConfig {
                intervals: Some(3),
                dt: None,
            }),
        };
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(ModelConfig::from_json(&text).unwrap(), cfg);
        assert!(cfg.build().unwrap().is_autonomous());
    }

    #[test]
    fn malformed_documents() {
        assert!(matches!(ModelConfig::from_json("{"), Err(Error::Config(_))));
        let unknown = r#"{"length":1,"period":1,"bc_host":{"alpha":1,"beta":0},
            "bc_vector":{"alpha":1,"beta":0},"family":{"type":"weird"}}"#;
        assert!(ModelConfig::from_json(unknown).is_err());
        let bad_expr = r#"{"length":1,"period":1,"bc_host":{"alpha":1,"beta":0},
            "bc_vector":{"alpha":1,"beta":"1 +"},"family":{"type":"section5","p":[0,0,0,0],"q":[0,0,0,0]}}"#;
        assert!(ModelConfig::from_json(bad_expr).unwrap().build().is_err());
    }
}
