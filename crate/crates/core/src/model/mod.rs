//! The continuous problem: coefficient fields, boundary conditions, the
//! heterogeneity family used for the reproduction-number studies, and the
//! hypothesis checks that every model must pass before it is discretized.

pub mod config;
pub mod expr;

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::analytic::ConstantParams;
use crate::error::{Error, Result};
pub use config::{BoundaryConfig, FamilyConfig, FieldValue, ModelConfig};
pub use expr::Expr;

type FieldFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum FieldKind {
    Constant(f64),
    /// `scale * (1 + space cos(pi x / L)) * (1 + time cos(2 pi t / T))`
    Modulated {
        scale: f64,
        space: f64,
        time: f64,
    },
    Expression(Arc<Expr>),
    Function(FieldFn),
}

/// A T-periodic space-time field on `[0, L]`.
///
/// `eval` wraps time into `[0, T)` so callers never reduce `t` themselves.
#[derive(Clone)]
pub struct CoefficientField {
    kind: FieldKind,
    length: f64,
    period: f64,
}

impl fmt::Debug for CoefficientField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            FieldKind::Constant(v) => write!(f, "Constant({v})"),
            FieldKind::Modulated { scale, space, time } => write!(
                f,
                "Modulated({scale} * (1 + {space} cos(pi x/L)) * (1 + {time} cos(2 pi t/T)))"
            ),
            FieldKind::Expression(e) => write!(f, "Expression({e:?})"),
            FieldKind::Function(_) => write!(f, "Function(<closure>)"),
        }
    }
}

impl CoefficientField {
    pub fn constant(value: f64, length: f64, period: f64) -> Self {
        Self {
            kind: FieldKind::Constant(value),
            length,
            period,
        }
    }

    pub fn modulated(scale: f64, space: f64, time: f64, length: f64, period: f64) -> Self {
        Self {
            kind: FieldKind::Modulated { scale, space, time },
            length,
            period,
        }
    }

    pub fn expression(src: &str, length: f64, period: f64) -> Result<Self> {
        Ok(Self {
            kind: FieldKind::Expression(Arc::new(Expr::parse(src)?)),
            length,
            period,
        })
    }

    /// Wraps an arbitrary closure. The closure is trusted to be T-periodic;
    /// `validate_model` checks this on a sample lattice.
    pub fn from_fn<F>(f: F, length: f64, period: f64) -> Self
    where
        F: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            kind: FieldKind::Function(Arc::new(f)),
            length,
            period,
        }
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    /// Evaluates the field, rejecting positions outside `[0, L]`.
    pub fn eval(&self, x: f64, t: f64) -> Result<f64> {
        let slack = 1e-12 * self.length.max(1.0);
        if !(x >= -slack && x <= self.length + slack) {
            return Err(Error::Domain { x, length: self.length });
        }
        Ok(self.value(x, t))
    }

    /// Evaluation without the domain check; time is still wrapped.
    #[inline]
    pub fn value(&self, x: f64, t: f64) -> f64 {
        self.raw(x, t.rem_euclid(self.period))
    }

    /// Evaluation of the underlying formula with no wrapping at all.
    pub fn raw(&self, x: f64, t: f64) -> f64 {
        match &self.kind {
            FieldKind::Constant(v) => *v,
            FieldKind::Modulated { scale, space, time } => {
                scale * (1.0 + space * (PI * x / self.length).cos()) * (1.0 + time * (2.0 * PI * t / self.period).cos())
            }
            FieldKind::Expression(e) => e.eval(x, t),
            FieldKind::Function(f) => f(x, t),
        }
    }

    /// `Some(v)` when the field is known to be the constant `v`.
    pub fn as_constant(&self) -> Option<f64> {
        match self.kind {
            FieldKind::Constant(v) => Some(v),
            FieldKind::Modulated { scale, space, time } if space == 0.0 && time == 0.0 => Some(scale),
            _ => None,
        }
    }

    /// Conservative: closures are assumed time dependent.
    pub fn is_time_independent(&self) -> bool {
        match &self.kind {
            FieldKind::Constant(_) => true,
            FieldKind::Modulated { time, .. } => *time == 0.0,
            FieldKind::Expression(e) => !e.depends_on_time(),
            FieldKind::Function(_) => false,
        }
    }
}

/// The ten rate fields of the model plus the optional recovery rate used by
/// the standard-incidence variant.
#[derive(Debug, Clone)]
pub struct CoefficientSet {
    pub d1: CoefficientField,
    pub d2: CoefficientField,
    pub a1: CoefficientField,
    pub a2: CoefficientField,
    pub b1: CoefficientField,
    pub b2: CoefficientField,
    pub c1: CoefficientField,
    pub c2: CoefficientField,
    pub l1: CoefficientField,
    pub l2: CoefficientField,
    pub gamma: Option<CoefficientField>,
}

impl CoefficientSet {
    pub fn named(&self) -> Vec<(&'static str, &CoefficientField)> {
        let mut v = vec![
            ("d1", &self.d1),
            ("d2", &self.d2),
            ("a1", &self.a1),
            ("a2", &self.a2),
            ("b1", &self.b1),
            ("b2", &self.b2),
            ("c1", &self.c1),
            ("c2", &self.c2),
            ("l1", &self.l1),
            ("l2", &self.l2),
        ];
        if let Some(g) = &self.gamma {
            v.push(("gamma", g));
        }
        v
    }

    pub fn constant(p: &ConstantParams, d1: f64, d2: f64, length: f64, period: f64) -> Self {
        let c = |v| CoefficientField::constant(v, length, period);
        Self {
            d1: c(d1),
            d2: c(d2),
            a1: c(p.a1),
            a2: c(p.a2),
            b1: c(p.b1),
            b2: c(p.b2),
            c1: c(p.c1),
            c2: c(p.c2),
            l1: c(p.l1),
            l2: c(p.l2),
            gamma: p.gamma.map(c),
        }
    }
}

/// Robin-type boundary condition `alpha du/dnu + beta u = 0`.
///
/// `alpha = 0` with `beta = 1` is the Dirichlet condition; `alpha = 1` with
/// `beta >= 0` covers Neumann (`beta = 0`) and Robin.
#[derive(Debug, Clone)]
pub struct BoundaryCondition {
    pub alpha: u8,
    pub beta: CoefficientField,
}

impl BoundaryCondition {
    pub fn dirichlet(length: f64, period: f64) -> Self {
        Self {
            alpha: 0,
            beta: CoefficientField::constant(1.0, length, period),
        }
    }

    pub fn neumann(length: f64, period: f64) -> Self {
        Self {
            alpha: 1,
            beta: CoefficientField::constant(0.0, length, period),
        }
    }

    pub fn robin(beta: CoefficientField) -> Self {
        Self { alpha: 1, beta }
    }

    pub fn is_dirichlet(&self) -> bool {
        self.alpha == 0
    }
}

/// The complete problem statement on `[0, L]` with period `T`.
#[derive(Debug, Clone)]
pub struct ModelSpec {
    pub length: f64,
    pub period: f64,
    pub bc_host: BoundaryCondition,
    pub bc_vector: BoundaryCondition,
    pub coeffs: CoefficientSet,
}

impl ModelSpec {
    pub fn new(
        length: f64,
        period: f64,
        bc_host: BoundaryCondition,
        bc_vector: BoundaryCondition,
        coeffs: CoefficientSet,
    ) -> Result<Self> {
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::Validation(format!("length must be positive, got {length}")));
        }
        if !(period > 0.0 && period.is_finite()) {
            return Err(Error::Validation(format!("period must be positive, got {period}")));
        }
        let mut fields = coeffs.named();
        fields.push(("beta_host", &bc_host.beta));
        fields.push(("beta_vector", &bc_vector.beta));
        for (name, f) in fields {
            if (f.period() - period).abs() > 1e-12 * period || (f.length() - length).abs() > 1e-12 * length {
                return Err(Error::Validation(format!(
                    "{name} is defined on a different domain or period"
                )));
            }
        }
        Ok(Self {
            length,
            period,
            bc_host,
            bc_vector,
            coeffs,
        })
    }

    /// The heterogeneity family on `[0, 1]`, `T = 1`, no-flux boundaries.
    pub fn section5(params: &HeterogeneityParams) -> Result<Self> {
        let coeffs = make_parametric_family(params)?;
        Self::new(
            1.0,
            1.0,
            BoundaryCondition::neumann(1.0, 1.0),
            BoundaryCondition::neumann(1.0, 1.0),
            coeffs,
        )
    }

    /// Constant coefficients with no-flux boundaries.
    pub fn constant_neumann(p: &ConstantParams, d1: f64, d2: f64, length: f64) -> Result<Self> {
        Self::new(
            length,
            1.0,
            BoundaryCondition::neumann(length, 1.0),
            BoundaryCondition::neumann(length, 1.0),
            CoefficientSet::constant(p, d1, d2, length, 1.0),
        )
    }

    pub fn bc(&self, species: Species) -> &BoundaryCondition {
        match species {
            Species::Host => &self.bc_host,
            Species::Vector => &self.bc_vector,
        }
    }

    pub fn is_autonomous(&self) -> bool {
        self.coeffs.named().iter().all(|(_, f)| f.is_time_independent())
            && self.bc_host.beta.is_time_independent()
            && self.bc_vector.beta.is_time_independent()
    }
}

/// Host (compartments `H_u`, `H_i`) or vector (`V_u`, `V_i`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Species {
    Host,
    Vector,
}

impl Species {
    pub fn index(self) -> usize {
        match self {
            Species::Host => 1,
            Species::Vector => 2,
        }
    }
}

/// Modulation amplitudes of the birth (`p`) and death (`q`) rates. Index 0
/// and 1 are spatial amplitudes for host and vector, 2 and 3 temporal.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct HeterogeneityParams {
    pub p: [f64; 4],
    pub q: [f64; 4],
}

pub const PARAM_NAMES: [&str; 8] = ["p1", "p2", "p3", "p4", "q1", "q2", "q3", "q4"];

impl HeterogeneityParams {
    pub fn new(p: [f64; 4], q: [f64; 4]) -> Self {
        Self { p, q }
    }

    fn slot(&mut self, name: &str) -> Option<&mut f64> {
        let idx = PARAM_NAMES.iter().position(|n| *n == name)?;
        Some(if idx < 4 {
            &mut self.p[idx]
        } else {
            &mut self.q[idx - 4]
        })
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        let idx = PARAM_NAMES.iter().position(|n| *n == name)?;
        Some(if idx < 4 { self.p[idx] } else { self.q[idx - 4] })
    }

    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        let slot = self
            .slot(name)
            .ok_or_else(|| Error::Validation(format!("unknown heterogeneity parameter '{name}'")))?;
        *slot = value;
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in PARAM_NAMES.iter().zip(self.p.iter().chain(self.q.iter())) {
            if !(v.abs() <= 1.0) {
                return Err(Error::Validation(format!("{name} = {v} outside [-1, 1]")));
            }
        }
        Ok(())
    }
}

/// Builds the heterogeneity family: `d1 = 0.1`, `d2 = 0.2`, `l1 = 3`,
/// `l2 = 2`, `c1 = c2 = 1` and cosine-modulated birth and death rates
/// around `a1 = 2`, `a2 = 3`, `b1 = 1`, `b2 = 2`, on `[0, 1]` with `T = 1`.
pub fn make_parametric_family(params: &HeterogeneityParams) -> Result<CoefficientSet> {
    params.validate()?;
    let (l, t) = (1.0, 1.0);
    let c = |v| CoefficientField::constant(v, l, t);
    let [p1, p2, p3, p4] = params.p;
    let [q1, q2, q3, q4] = params.q;
    Ok(CoefficientSet {
        d1: c(0.1),
        d2: c(0.2),
        l1: c(3.0),
        l2: c(2.0),
        c1: c(1.0),
        c2: c(1.0),
        a1: CoefficientField::modulated(2.0, p1, p3, l, t),
        a2: CoefficientField::modulated(3.0, p2, p4, l, t),
        b1: CoefficientField::modulated(1.0, q1, q3, l, t),
        b2: CoefficientField::modulated(2.0, q2, q4, l, t),
        gamma: None,
    })
}

pub fn eval_coefficient(field: &CoefficientField, x: f64, t: f64) -> Result<f64> {
    field.eval(x, t)
}

/// Outcome of [`validate_model`]; an empty violation list means the model
/// satisfies the positivity, periodicity and boundary hypotheses.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<String>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn into_result(self) -> Result<()> {
        if self.passed() {
            Ok(())
        } else {
            Err(Error::Validation(self.violations.join("; ")))
        }
    }
}

const LATTICE_X: usize = 33;
const LATTICE_T: usize = 33;

fn lattice(length: f64, period: f64) -> impl Iterator<Item = (f64, f64)> {
    (0..LATTICE_X).flat_map(move |i| {
        let x = length * i as f64 / (LATTICE_X - 1) as f64;
        (0..LATTICE_T).map(move |k| (x, period * k as f64 / (LATTICE_T - 1) as f64))
    })
}

pub fn validate_model(spec: &ModelSpec) -> ValidationReport {
    let mut report = ValidationReport::default();
    let (len, per) = (spec.length, spec.period);
    let cs = &spec.coeffs;

    let mut positive = vec![
        ("d1", &cs.d1),
        ("d2", &cs.d2),
        ("a1", &cs.a1),
        ("a2", &cs.a2),
        ("c1", &cs.c1),
        ("c2", &cs.c2),
    ];
    let mut nonneg = vec![("b1", &cs.b1), ("b2", &cs.b2), ("l1", &cs.l1), ("l2", &cs.l2)];
    if let Some(g) = &cs.gamma {
        nonneg.push(("gamma", g));
    }

    for (name, f) in positive.drain(..) {
        if lattice(len, per).any(|(x, t)| !(f.value(x, t) > 0.0)) {
            report.violations.push(format!("{name} not strictly positive"));
        }
    }
    for (name, f) in &nonneg {
        if lattice(len, per).any(|(x, t)| !(f.value(x, t) >= 0.0)) {
            report.violations.push(format!("{name} not nonnegative"));
        }
    }
    for (name, f) in [("l1", &cs.l1), ("l2", &cs.l2)] {
        if !lattice(len, per).any(|(x, t)| f.value(x, t) > 0.0) {
            report.violations.push(format!("{name} is identically zero"));
        }
    }

    let mut all = cs.named();
    all.push(("beta_host", &spec.bc_host.beta));
    all.push(("beta_vector", &spec.bc_vector.beta));
    for (name, f) in all {
        let bad = lattice(len, per).any(|(x, t)| {
            let (v0, v1) = (f.raw(x, t), f.raw(x, t + per));
            !((v1 - v0).abs() <= 1e-12 * v0.abs().max(1.0))
        });
        if bad {
            report.violations.push(format!("{name} is not {per}-periodic in t"));
        }
    }

    for (name, bc) in [("host", &spec.bc_host), ("vector", &spec.bc_vector)] {
        let boundary = (0..LATTICE_T).flat_map(|k| {
            let t = per * k as f64 / (LATTICE_T - 1) as f64;
            [(0.0, t), (len, t)]
        });
        match bc.alpha {
            0 => {
                if boundary.clone().any(|(x, t)| bc.beta.value(x, t) != 1.0) {
                    report
                        .violations
                        .push(format!("{name} boundary: Dirichlet (alpha = 0) requires beta ≡ 1"));
                }
            }
            1 => {
                if boundary.clone().any(|(x, t)| !(bc.beta.value(x, t) >= 0.0)) {
                    report
                        .violations
                        .push(format!("{name} boundary: Robin (alpha = 1) requires beta >= 0"));
                }
            }
            a => report
                .violations
                .push(format!("{name} boundary: alpha must be 0 or 1, got {a}")),
        }
    }
    if spec.bc_host.alpha != spec.bc_vector.alpha {
        report
            .violations
            .push("host and vector boundaries must both be Dirichlet or both be Robin/Neumann".into());
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn baseline() -> ModelSpec {
        ModelSpec::section5(&HeterogeneityParams::default()).unwrap()
    }

    #[test]
    fn family_values() {
        let p = HeterogeneityParams::new([0.5; 4], [0.0; 4]);
        let cs = make_parametric_family(&p).unwrap();
        assert!((eval_coefficient(&cs.a1, 0.0, 0.0).unwrap() - 4.5).abs() < 1e-15);
        assert!((eval_coefficient(&cs.a1, 0.0, 1.0).unwrap() - 4.5).abs() < 1e-15);
        let one = CoefficientField::constant(1.0, 1.0, 1.0);
        assert_eq!(eval_coefficient(&one, 0.3, 17.25).unwrap(), 1.0);
    }

    #[test]
    fn zero_params_give_constant_set() {
        let cs = make_parametric_family(&HeterogeneityParams::default()).unwrap();
        let want = [
            ("d1", 0.1),
            ("d2", 0.2),
            ("a1", 2.0),
            ("a2", 3.0),
            ("b1", 1.0),
            ("b2", 2.0),
            ("c1", 1.0),
            ("c2", 1.0),
            ("l1", 3.0),
            ("l2", 2.0),
        ];
        for ((name, f), (wn, wv)) in cs.named().into_iter().zip(want) {
            assert_eq!(name, wn);
            assert_eq!(f.as_constant(), Some(wv), "{name}");
            for &(x, t) in &[(0.0, 0.0), (0.37, 0.81), (1.0, 0.5)] {
                assert_eq!(f.value(x, t), wv);
            }
        }
    }

    #[test]
    fn spatial_death_modulation_range() {
        let mut p = HeterogeneityParams::default();
        p.set("q1", 0.8).unwrap();
        let cs = make_parametric_family(&p).unwrap();
        assert!((cs.b1.value(0.0, 0.3) - 1.8).abs() < 1e-14);
        assert!((cs.b1.value(1.0, 0.3) - 0.2).abs() < 1e-14);
        let (mut lo, mut hi) = (f64::MAX, f64::MIN);
        for i in 0..=100 {
            let v = cs.b1.value(i as f64 / 100.0, 0.0);
            lo = lo.min(v);
            hi = hi.max(v);
        }
        assert!((lo - 0.2).abs() < 1e-12 && (hi - 1.8).abs() < 1e-12);
    }

    #[test]
    fn family_rejects_out_of_range() {
        let p = HeterogeneityParams::new([0.0, 1.2, 0.0, 0.0], [0.0; 4]);
        assert!(matches!(make_parametric_family(&p), Err(Error::Validation(_))));
        let mut p = HeterogeneityParams::default();
        assert!(p.set("r9", 0.1).is_err());
    }

    #[test]
    fn domain_error_outside_interval() {
        let cs = baseline().coeffs;
        assert!(matches!(cs.a1.eval(1.5, 0.0), Err(Error::Domain { .. })));
        assert!(matches!(cs.a1.eval(-0.1, 0.0), Err(Error::Domain { .. })));
        assert!(cs.a1.eval(1.0, 0.0).is_ok());
    }

    #[test]
    fn validation_reports() {
        assert!(validate_model(&baseline()).passed());

        let mut spec = baseline();
        spec.coeffs.c1 = CoefficientField::constant(0.0, 1.0, 1.0);
        let r = validate_model(&spec);
        assert!(!r.passed());
        assert!(r.violations.iter().any(|v| v == "c1 not strictly positive"));

        let mut spec = baseline();
        spec.bc_host = BoundaryCondition {
            alpha: 0,
            beta: CoefficientField::constant(0.5, 1.0, 1.0),
        };
        spec.bc_vector = BoundaryCondition::dirichlet(1.0, 1.0);
        let r = validate_model(&spec);
        assert_eq!(r.violations.len(), 1);
        assert!(r.violations[0].contains("requires beta ≡ 1"));

        let mut spec = baseline();
        spec.coeffs.l2 = CoefficientField::constant(0.0, 1.0, 1.0);
        assert!(validate_model(&spec)
            .violations
            .contains(&"l2 is identically zero".to_string()));

        let mut spec = baseline();
        spec.coeffs.a2 = CoefficientField::expression("3 + sin(t)", 1.0, 1.0).unwrap();
        assert!(validate_model(&spec)
            .violations
            .iter()
            .any(|v| v.starts_with("a2 is not")));

        let mut spec = baseline();
        spec.bc_vector = BoundaryCondition::dirichlet(1.0, 1.0);
        assert!(!validate_model(&spec).passed());
    }

    #[test]
    fn autonomy_detection() {
        assert!(baseline().is_autonomous());
        let p = HeterogeneityParams::new([0.5, 0.5, 0.0, 0.0], [0.0; 4]);
        assert!(ModelSpec::section5(&p).unwrap().is_autonomous());
        let p = HeterogeneityParams::new([0.0, 0.0, 0.5, 0.0], [0.0; 4]);
        assert!(!ModelSpec::section5(&p).unwrap().is_autonomous());
    }

    proptest! {
        #[test]
        fn family_fields_are_periodic(
            p in proptest::array::uniform4(-1.0f64..=1.0),
            q in proptest::array::uniform4(-1.0f64..=1.0),
            x in 0.0f64..=1.0,
            t in -5.0f64..5.0,
        ) {
            let cs = make_parametric_family(&HeterogeneityParams::new(p, q)).unwrap();
            for (_, f) in cs.named() {
                prop_assert!((f.eval(x, t + 1.0).unwrap() - f.eval(x, t).unwrap()).abs() <= 1e-12);
                prop_assert!((f.raw(x, t + 1.0) - f.raw(x, t)).abs() <= 1e-12);
                prop_assert!(f.value(x, t) >= 0.0);
            }
        }
    }
}
