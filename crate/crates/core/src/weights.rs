//! Edge cost functions `h` comparable to Euclidean distance,
//! `c1 d(u, v) <= h(u, v) <= c2 d(u, v)`, and the power weight `h^alpha`.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{euclidean_distance, Point};

/// Edge weight exponent `alpha > 0`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Exponent(f64);

impl Exponent {
    pub fn new(alpha: f64) -> Result<Self> {
        if alpha.is_finite() && alpha > 0.0 {
            Ok(Exponent(alpha))
        } else {
            Err(Error::invalid(format!("exponent alpha must be > 0, got {alpha}")))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }

    /// `x^alpha`, with the common exponents special-cased.
    #[inline]
    pub fn pow(self, x: f64) -> f64 {
        if self.0 == 1.0 {
            x
        } else if self.0 == 2.0 {
            x * x
        } else if self.0 == 0.5 {
            x.sqrt()
        } else {
            x.powf(self.0)
        }
    }
}

impl TryFrom<f64> for Exponent {
    type Error = Error;
    fn try_from(v: f64) -> Result<Self> {
        Exponent::new(v)
    }
}

impl From<Exponent> for f64 {
    fn from(e: Exponent) -> f64 {
        e.0
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightKind {
    Euclidean,
    /// `h(x, y) = h1(x1, y1) + h1(x2, y2)` with `h1(u, v) = |(1+u)^2 - (1+v)^2|`.
    CoordinateMetric,
    /// `h(u, v) = d(u, v) + |d(u, 0) - d(v, 0)| / 2`.
    RadialMetric,
    Custom,
}

impl WeightKind {
    pub fn name(self) -> &'static str {
        match self {
            WeightKind::Euclidean => "euclidean",
            WeightKind::CoordinateMetric => "coordinate_metric",
            WeightKind::RadialMetric => "radial_metric",
            WeightKind::Custom => "custom",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "euclidean" => Ok(WeightKind::Euclidean),
            "coordinate_metric" => Ok(WeightKind::CoordinateMetric),
            "radial_metric" => Ok(WeightKind::RadialMetric),
            "custom" => Ok(WeightKind::Custom),
            other => Err(Error::Unknown {
                what: "weight kind",
                name: other.to_string(),
            }),
        }
    }
}

pub type CostFn = Arc<dyn Fn(Point, Point) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Formula {
    Builtin(WeightKind),
    Closure(CostFn),
}

/// An edge cost `h` together with its declared constants.
#[derive(Clone)]
pub struct WeightFunction {
    kind: WeightKind,
    formula: Formula,
    c1: f64,
    c2: f64,
    h0: Option<f64>,
    is_metric: bool,
    scale_invariant: bool,
}

impl fmt::Debug for WeightFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("WeightFunction")
            .field("kind", &self.kind)
            .field("formula", &self.formula_name())
            .field("c1", &self.c1)
            .field("c2", &self.c2)
            .field("h0", &self.h0)
            .field("is_metric", &self.is_metric)
            .field("scale_invariant", &self.scale_invariant)
            .finish()
    }
}

/// Serializable description of a weight function, as used in experiment
/// configs: `{"kind": "radial_metric"}` or
/// `{"kind": "custom", "base": "radial_metric", "c1": 1, "c2": 1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightSpec {
    pub kind: WeightKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base: Option<WeightKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h0: Option<f64>,
}

impl WeightSpec {
    pub fn builtin(kind: WeightKind) -> Self {
        WeightSpec {
            kind,
            base: None,
            c1: None,
            c2: None,
            h0: None,
        }
    }

    pub fn build(&self) -> Result<WeightFunction> {
        match self.kind {
            WeightKind::Custom => {
                let base = self
                    .base
                    .ok_or_else(|| Error::invalid("custom weight needs a `base` kind"))?;
                let (c1, c2) = match (self.c1, self.c2) {
                    (Some(c1), Some(c2)) => (c1, c2),
                    _ => return Err(Error::invalid("custom weight must declare c1 and c2")),
                };
                WeightFunction::builtin(base)?.with_constants(c1, c2, self.h0)
            }
            kind => {
                if self.c1.is_some() || self.c2.is_some() || self.h0.is_some() {
                    return Err(Error::invalid(format!(
                        "constants of `{}` are fixed; use kind `custom` to override them",
                        kind.name()
                    )));
                }
                WeightFunction::builtin(kind)
            }
        }
    }
}

impl WeightFunction {
    pub fn builtin(kind: WeightKind) -> Result<Self> {
        let (c1, c2, h0, scale_invariant) = match kind {
            WeightKind::Euclidean => (1.0, 1.0, Some(1.0), true),
            WeightKind::CoordinateMetric => (1.0, 3.0 * std::f64::consts::SQRT_2, None, false),
            WeightKind::RadialMetric => (1.0, 1.5, Some(1.5), true),
            WeightKind::Custom => {
                return Err(Error::invalid(
                    "custom weights need a formula; use WeightFunction::custom",
                ))
            }
        };
        Ok(WeightFunction {
            kind,
            formula: Formula::Builtin(kind),
            c1,
            c2,
            h0,
            is_metric: true,
            scale_invariant,
        })
    }

    pub fn euclidean() -> Self {
        Self::builtin(WeightKind::Euclidean).expect("builtin")
    }

    pub fn coordinate_metric() -> Self {
        Self::builtin(WeightKind::CoordinateMetric).expect("builtin")
    }

    pub fn radial_metric() -> Self {
        Self::builtin(WeightKind::RadialMetric).expect("builtin")
    }

    /// By name, with the published constants.
    pub fn by_name(name: &str) -> Result<Self> {
        Self::builtin(WeightKind::parse(name)?)
    }

    /// A user-supplied cost with declared constants. The declaration is not
    /// trusted: run [`verify_equivalence`] before using it in experiments.
    pub fn custom(
        cost: CostFn,
        c1: f64,
        c2: f64,
        h0: Option<f64>,
        is_metric: bool,
        scale_invariant: bool,
    ) -> Result<Self> {
        check_constants(c1, c2, h0)?;
        Ok(WeightFunction {
            kind: WeightKind::Custom,
            formula: Formula::Closure(cost),
            c1,
            c2,
            h0,
            is_metric,
            scale_invariant,
        })
    }

    /// Same formula, different declared constants; the result is `custom`.
    pub fn with_constants(&self, c1: f64, c2: f64, h0: Option<f64>) -> Result<Self> {
        check_constants(c1, c2, h0)?;
        Ok(WeightFunction {
            kind: WeightKind::Custom,
            formula: self.formula.clone(),
            c1,
            c2,
            h0,
            is_metric: self.is_metric,
            scale_invariant: self.scale_invariant,
        })
    }

    pub fn kind(&self) -> WeightKind {
        self.kind
    }

    pub fn formula_name(&self) -> &'static str {
        match &self.formula {
            Formula::Builtin(k) => k.name(),
            Formula::Closure(_) => "closure",
        }
    }

    pub fn c1(&self) -> f64 {
        self.c1
    }

    pub fn c2(&self) -> f64 {
        self.c2
    }

    pub fn h0(&self) -> Option<f64> {
        self.h0
    }

    pub fn is_metric(&self) -> bool {
        self.is_metric
    }

    /// Property `h(au, av) = a h(u, v)` for all `a > 0`.
    pub fn scale_invariant(&self) -> bool {
        self.scale_invariant
    }

    /// `h(u, v)`, evaluated on the canonically ordered pair so that the
    /// result is bitwise symmetric.
    pub fn cost(&self, u: Point, v: Point) -> f64 {
        let (a, b) = if u.lex_le(&v) { (u, v) } else { (v, u) };
        if a == b {
            return 0.0;
        }
        match &self.formula {
            Formula::Builtin(WeightKind::Euclidean) => euclidean_distance(a, b),
            Formula::Builtin(WeightKind::CoordinateMetric) => coordinate_h1(a.x, b.x) + coordinate_h1(a.y, b.y),
            Formula::Builtin(WeightKind::RadialMetric) => euclidean_distance(a, b) + 0.5 * (a.norm() - b.norm()).abs(),
            Formula::Builtin(WeightKind::Custom) => unreachable!("custom kinds carry a closure"),
            Formula::Closure(f) => f(a, b),
        }
    }

    /// Edge weight `h(u, v)^alpha`.
    #[inline]
    pub fn edge_weight(&self, alpha: Exponent, u: Point, v: Point) -> f64 {
        alpha.pow(self.cost(u, v))
    }

    pub fn spec(&self) -> Option<WeightSpec> {
        match (&self.formula, self.kind) {
            (Formula::Closure(_), _) => None,
            (Formula::Builtin(base), WeightKind::Custom) => Some(WeightSpec {
                kind: WeightKind::Custom,
                base: Some(*base),
                c1: Some(self.c1),
                c2: Some(self.c2),
                h0: self.h0,
            }),
            (Formula::Builtin(k), _) => Some(WeightSpec::builtin(*k)),
        }
    }
}

fn coordinate_h1(u: f64, v: f64) -> f64 {
    ((1.0 + u) * (1.0 + u) - (1.0 + v) * (1.0 + v)).abs()
}

fn check_constants(c1: f64, c2: f64, h0: Option<f64>) -> Result<()> {
    if !(c1.is_finite() && c1 > 0.0 && c2.is_finite() && c2 >= c1) {
        return Err(Error::invalid(format!(
            "equivalence constants need 0 < c1 <= c2, got c1 = {c1}, c2 = {c2}"
        )));
    }
    if let Some(h0) = h0 {
        if !(h0.is_finite() && h0 >= 1.0) {
            return Err(Error::invalid(format!(
                "translation constant h0 must be >= 1, got {h0}"
            )));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub property: String,
    pub u: Point,
    pub v: Point,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w: Option<Point>,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub kind: WeightKind,
    pub formula: String,
    pub c1: f64,
    pub c2: f64,
    pub samples: usize,
    pub seed: u64,
    pub violation_count: usize,
    /// The first few violations; `violation_count` has the total.
    pub violations: Vec<Violation>,
    pub passed: bool,
}

const MAX_REPORTED_VIOLATIONS: usize = 16;
const VERIFY_REL_TOL: f64 = 1e-12;

/// Monte Carlo check of the declared constants, symmetry, and (for metrics)
/// the triangle inequality on uniformly drawn pairs and triples.
pub fn verify_equivalence(wf: &WeightFunction, sample_count: usize, seed: u64) -> Result<VerificationReport> {
    if sample_count == 0 {
        return Err(Error::invalid("sample_count must be >= 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw = |rng: &mut ChaCha8Rng| Point::new(rng.random_range(-0.5..=0.5), rng.random_range(-0.5..=0.5));
    let mut violations = Vec::new();
    let mut count = 0usize;
    let mut record = |violation: Violation, violations: &mut Vec<Violation>| {
        count += 1;
        if violations.len() < MAX_REPORTED_VIOLATIONS {
            violations.push(violation);
        }
    };

    for _ in 0..sample_count {
        let u = draw(&mut rng);
        let v = draw(&mut rng);
        let d = euclidean_distance(u, v);
        let h = wf.cost(u, v);
        let slack = VERIFY_REL_TOL * d.max(f64::MIN_POSITIVE);
        if wf.c1 * d > h + slack {
            record(
                Violation {
                    property: "lower".into(),
                    u,
                    v,
                    w: None,
                    lhs: wf.c1 * d,
                    rhs: h,
                },
                &mut violations,
            );
        }
        if h > wf.c2 * d + slack {
            record(
                Violation {
                    property: "upper".into(),
                    u,
                    v,
                    w: None,
                    lhs: h,
                    rhs: wf.c2 * d,
                },
                &mut violations,
            );
        }
        let h_rev = wf.cost(v, u);
        if h_rev != h {
            record(
                Violation {
                    property: "symmetry".into(),
                    u,
                    v,
                    w: None,
                    lhs: h,
                    rhs: h_rev,
                },
                &mut violations,
            );
        }
        if wf.is_metric {
            let w = draw(&mut rng);
            let direct = wf.cost(u, w);
            let via = h + wf.cost(v, w);
            if direct > via + VERIFY_REL_TOL * via {
                record(
                    Violation {
                        property: "triangle".into(),
                        u,
                        v,
                        w: Some(w),
                        lhs: direct,
                        rhs: via,
                    },
                    &mut violations,
                );
            }
        }
    }

    Ok(VerificationReport {
        kind: wf.kind,
        formula: wf.formula_name().to_string(),
        c1: wf.c1,
        c2: wf.c2,
        samples: sample_count,
        seed,
        violation_count: count,
        passed: count == 0,
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn alpha(a: f64) -> Exponent {
        Exponent::new(a).unwrap()
    }

    #[test]
    fn published_constants() {
        let e = WeightFunction::euclidean();
        assert_eq!((e.c1(), e.c2(), e.h0()), (1.0, 1.0, Some(1.0)));
        let c = WeightFunction::coordinate_metric();
        assert_eq!(c.c1(), 1.0);
        assert_relative_eq!(c.c2(), 3.0 * 2f64.sqrt());
        assert_eq!(c.h0(), None);
        assert!(!c.scale_invariant());
        let r = WeightFunction::radial_metric();
        assert_eq!((r.c1(), r.c2(), r.h0()), (1.0, 1.5, Some(1.5)));
        assert!(e.is_metric() && c.is_metric() && r.is_metric());
    }

    #[test]
    fn unknown_kind_is_rejected() {
        assert!(matches!(
            WeightFunction::by_name("manhattan"),
            Err(Error::Unknown { .. })
        ));
        assert!(WeightFunction::by_name("custom").is_err());
    }

    #[test]
    fn edge_weight_examples() {
        let o = Point::ORIGIN;
        let p = Point::new(0.3, 0.4);
        assert_relative_eq!(
            WeightFunction::euclidean().edge_weight(alpha(2.0), o, p),
            0.25,
            epsilon = 1e-15
        );
        assert_relative_eq!(
            WeightFunction::radial_metric().edge_weight(alpha(1.0), o, p),
            0.75,
            epsilon = 1e-15
        );
        assert_relative_eq!(
            WeightFunction::coordinate_metric().edge_weight(alpha(1.0), Point::new(-0.5, -0.5), Point::new(0.5, 0.5)),
            4.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn coincident_points_cost_zero() {
        let p = Point::new(0.1, -0.2);
        for wf in [
            WeightFunction::euclidean(),
            WeightFunction::coordinate_metric(),
            WeightFunction::radial_metric(),
        ] {
            assert_eq!(wf.edge_weight(alpha(0.7), p, p), 0.0);
        }
    }

    #[test]
    fn exponent_validation() {
        assert!(Exponent::new(0.0).is_err());
        assert!(Exponent::new(-1.0).is_err());
        assert!(Exponent::new(f64::NAN).is_err());
        let e: Exponent = serde_json::from_str("1.5").unwrap();
        assert_eq!(e.get(), 1.5);
        assert!(serde_json::from_str::<Exponent>("0").is_err());
    }

    #[test]
    fn builtin_kinds_verify() {
        for wf in [
            WeightFunction::euclidean(),
            WeightFunction::coordinate_metric(),
            WeightFunction::radial_metric(),
        ] {
            let report = verify_equivalence(&wf, 10_000, 11).unwrap();
            assert!(report.passed, "{:?}", report.violations.first());
        }
    }

    #[test]
    fn understated_c2_is_caught_with_witness() {
        let wrong = WeightFunction::radial_metric().with_constants(1.0, 1.0, None).unwrap();
        let report = verify_equivalence(&wrong, 10_000, 3).unwrap();
        assert!(!report.passed);
        let witness = &report.violations[0];
        assert_eq!(witness.property, "upper");
        assert!(witness.lhs > witness.rhs);
        assert!(report.violation_count > 9_000);
    }

    #[test]
    fn closure_weights() {
        let doubled: CostFn = Arc::new(|u, v| 2.0 * euclidean_distance(u, v));
        let wf = WeightFunction::custom(doubled, 2.0, 2.0, Some(1.0), true, true).unwrap();
        assert!(verify_equivalence(&wf, 1000, 1).unwrap().passed);
        assert!(wf.spec().is_none());
        assert!(WeightFunction::custom(Arc::new(|_, _| 1.0), 2.0, 1.0, None, false, false).is_err());
    }

    #[test]
    fn spec_round_trip() {
        let spec: WeightSpec =
            serde_json::from_str(r#"{"kind":"custom","base":"radial_metric","c1":1,"c2":1}"#).unwrap();
        let wf = spec.build().unwrap();
        assert_eq!(wf.kind(), WeightKind::Custom);
        assert_eq!(wf.c2(), 1.0);
        assert_eq!(wf.spec().unwrap(), spec);
        let bad: WeightSpec = serde_json::from_str(r#"{"kind":"euclidean","c2":3}"#).unwrap();
        assert!(bad.build().is_err());
    }
}
