use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::pwl;
use crate::error::{contract, Error, Result};

/// Claimed comparison class of a scalar curve.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CurveClass {
    /// Continuous, strictly increasing, zero at zero. The zero function (an
    /// absent gain) is admitted under this label.
    #[serde(rename = "K")]
    K,
    /// Class K and unbounded.
    #[serde(rename = "Kinf")]
    KInf,
    /// Continuous, nonincreasing, tending to a floor.
    #[serde(rename = "L")]
    L,
    /// Nonnegative and nondecreasing, nothing more.
    #[serde(rename = "mono")]
    Mono,
}

impl CurveClass {
    pub fn is_k(self) -> bool {
        matches!(self, CurveClass::K | CurveClass::KInf)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Repr {
    /// `a r`
    Linear { a: f64 },
    /// `a r^p`
    Power { a: f64, p: f64 },
    /// `a r / (1 + r)`
    Saturating { a: f64 },
    /// `c e^{-lambda t}`
    ExpDecay { c: f64, lambda: f64 },
    /// Piecewise linear through `(r, value)` breakpoints.
    Pwl(Vec<(f64, f64)>),
    /// `outer(inner(r))`, kept symbolic when no closed form applies.
    Compose(Box<ScalarCurve>, Box<ScalarCurve>),
    Sum(Vec<ScalarCurve>),
    Max(Vec<ScalarCurve>),
}

/// A numerically represented comparison function.
///
/// Parametric families evaluate exactly. Piecewise-linear curves hold their
/// first value below the first breakpoint; above the last breakpoint they follow
/// the final slope, except class-L curves, which stay at their last value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CurveJson", into = "CurveJson")]
pub struct ScalarCurve {
    repr: Repr,
    class: CurveClass,
}

fn finite_nonneg(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        contract(format!("parameter {name} must be finite and nonnegative, got {v}"))
    }
}

impl ScalarCurve {
    pub fn zero() -> Self {
        ScalarCurve { repr: Repr::Linear { a: 0.0 }, class: CurveClass::K }
    }

    pub fn identity() -> Self {
        Self::linear(1.0).expect("identity is valid")
    }

    pub fn linear(a: f64) -> Result<Self> {
        finite_nonneg("a", a)?;
        let class = if a > 0.0 { CurveClass::KInf } else { CurveClass::K };
        Ok(ScalarCurve { repr: Repr::Linear { a }, class })
    }

    pub fn power(a: f64, p: f64) -> Result<Self> {
        finite_nonneg("a", a)?;
        if !(p.is_finite() && p > 0.0) {
            return contract(format!("power exponent must be positive, got {p}"));
        }
        if a == 0.0 {
            return Ok(Self::zero());
        }
        Ok(ScalarCurve { repr: Repr::Power { a, p }, class: CurveClass::KInf })
    }

    pub fn saturating(a: f64) -> Result<Self> {
        finite_nonneg("a", a)?;
        if a == 0.0 {
            return Ok(Self::zero());
        }
        Ok(ScalarCurve { repr: Repr::Saturating { a }, class: CurveClass::K })
    }

    pub fn exp_decay(c: f64, lambda: f64) -> Result<Self> {
        finite_nonneg("c", c)?;
        if !(lambda.is_finite() && lambda > 0.0) {
            return contract(format!("decay rate must be positive, got {lambda}"));
        }
        Ok(ScalarCurve { repr: Repr::ExpDecay { c, lambda }, class: CurveClass::L })
    }

    /// Piecewise-linear curve with a claimed class. Breakpoints must have
    /// strictly increasing nonnegative abscissae and finite nonnegative values.
    pub fn pwl(points: Vec<(f64, f64)>, class: CurveClass) -> Result<Self> {
        if points.is_empty() {
            return contract("piecewise-linear curve needs at least one point");
        }
        for &(r, v) in &points {
            if !(r.is_finite() && r >= 0.0 && v.is_finite() && v >= 0.0) {
                return contract(format!("invalid breakpoint ({r}, {v})"));
            }
        }
        if points.windows(2).any(|w| w[1].0 <= w[0].0) {
            return contract("breakpoint abscissae must be strictly increasing");
        }
        let shape_ok = match class {
            CurveClass::K | CurveClass::KInf => {
                (points[0].0 > 0.0 || points[0].1 == 0.0) && points.windows(2).all(|w| w[1].1 > w[0].1)
            }
            CurveClass::Mono => points.windows(2).all(|w| w[1].1 >= w[0].1),
            CurveClass::L => points.windows(2).all(|w| w[1].1 <= w[0].1),
        };
        if !shape_ok {
            return contract(format!("breakpoints do not fit the claimed class {class:?}"));
        }
        Ok(ScalarCurve { repr: Repr::Pwl(points), class })
    }

    pub fn repr(&self) -> &Repr {
        &self.repr
    }

    pub fn class(&self) -> CurveClass {
        self.class
    }

    /// Re-label the claimed class. Use [`ScalarCurve::verify_class`] to check it.
    pub fn with_class(mut self, class: CurveClass) -> Self {
        self.class = class;
        self
    }

    pub fn points(&self) -> Option<&[(f64, f64)]> {
        match &self.repr {
            Repr::Pwl(p) => Some(p),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        match &self.repr {
            Repr::Linear { a } => *a == 0.0,
            Repr::Pwl(p) => p.iter().all(|q| q.1 == 0.0) && pwl::final_slope(p) == 0.0,
            _ => false,
        }
    }

    pub fn linear_slope(&self) -> Option<f64> {
        match self.repr {
            Repr::Linear { a } => Some(a),
            _ => None,
        }
    }

    /// Checked evaluation.
    pub fn eval(&self, r: f64) -> Result<f64> {
        if !(r >= 0.0) || r.is_nan() {
            return Err(Error::Domain(format!("comparison functions take r >= 0, got {r}")));
        }
        Ok(self.at(r))
    }

    /// Evaluation for callers that already guarantee `r >= 0`.
    pub fn at(&self, r: f64) -> f64 {
        debug_assert!(r >= 0.0, "negative argument {r}");
        match &self.repr {
            Repr::Linear { a } => a * r,
            Repr::Power { a, p } => a * r.powf(*p),
            Repr::Saturating { a } => a * r / (1.0 + r),
            Repr::ExpDecay { c, lambda } => c * (-lambda * r).exp(),
            Repr::Pwl(p) => pwl::eval(p, r, self.class == CurveClass::L),
            Repr::Compose(f, g) => f.at(g.at(r)),
            Repr::Sum(parts) => parts.iter().map(|c| c.at(r)).sum(),
            Repr::Max(parts) => parts.iter().map(|c| c.at(r)).fold(0.0, f64::max),
        }
    }

    /// Whether the curve is unbounded, as far as its representation tells.
    /// Piecewise-linear curves count as unbounded iff their final slope is positive.
    pub fn is_unbounded(&self) -> bool {
        match &self.repr {
            Repr::Linear { a } => *a > 0.0,
            Repr::Power { a, .. } => *a > 0.0,
            Repr::Saturating { .. } | Repr::ExpDecay { .. } => false,
            Repr::Pwl(p) => self.class != CurveClass::L && pwl::final_slope(p) > 0.0,
            Repr::Compose(f, g) => f.is_unbounded() && g.is_unbounded(),
            Repr::Sum(parts) | Repr::Max(parts) => parts.iter().any(|c| c.is_unbounded()),
        }
    }

    /// Limit at infinity for decreasing curves, when the representation fixes it.
    pub fn tail_limit(&self) -> Option<f64> {
        match &self.repr {
            Repr::ExpDecay { .. } => Some(0.0),
            Repr::Pwl(p) if self.class == CurveClass::L => Some(p[p.len() - 1].1),
            Repr::Linear { a } if *a == 0.0 => Some(0.0),
            _ => None,
        }
    }

    /// Grid-sampled check of the claimed class.
    pub fn verify_class(&self, grid: &ClassGrid) -> Result<()> {
        let xs = grid.points();
        let vals: Vec<f64> = xs.iter().map(|&r| self.at(r)).collect();
        if let Some(k) = vals.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            return contract(format!("value {} at r = {} is not finite and nonnegative", vals[k], xs[k]));
        }
        let first_violation = |strict: bool, increasing: bool| {
            vals.windows(2).position(|w| match (strict, increasing) {
                (true, true) => w[1] <= w[0],
                (false, true) => w[1] < w[0],
                (_, false) => w[1] > w[0],
            })
        };
        match self.class {
            CurveClass::K | CurveClass::KInf => {
                if vals[0] != 0.0 {
                    return contract(format!("class K curve has value {} at 0", vals[0]));
                }
                if !self.is_zero() {
                    if let Some(k) = first_violation(true, true) {
                        return contract(format!(
                            "class K curve not strictly increasing between r = {} and r = {}",
                            xs[k],
                            xs[k + 1]
                        ));
                    }
                }
                if self.class == CurveClass::KInf && !self.is_unbounded() {
                    return contract("class K-infinity curve is bounded (final slope not positive)");
                }
                Ok(())
            }
            CurveClass::L => {
                if let Some(k) = first_violation(false, false) {
                    return contract(format!("class L curve increases after t = {}", xs[k]));
                }
                match self.tail_limit() {
                    Some(lim) if lim <= grid.l_floor => Ok(()),
                    Some(lim) => contract(format!("class L curve tends to {lim}, above floor {}", grid.l_floor)),
                    None => contract("class L curve has no determinable limit"),
                }
            }
            CurveClass::Mono => match first_violation(false, true) {
                Some(k) => contract(format!("curve decreases after r = {}", xs[k])),
                None => Ok(()),
            },
        }
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &ScalarCurve) -> Result<ScalarCurve> {
        if !self.class.is_k() || !inner.class.is_k() {
            return contract(format!(
                "composition needs class K operands, got {:?} ∘ {:?}",
                self.class, inner.class
            ));
        }
        if self.is_zero() || inner.is_zero() {
            return Ok(Self::zero());
        }
        let class = if self.class == CurveClass::KInf && inner.class == CurveClass::KInf {
            CurveClass::KInf
        } else {
            CurveClass::K
        };
        let repr = match (&self.repr, &inner.repr) {
            (Repr::Linear { a }, Repr::Linear { a: b }) => Repr::Linear { a: a * b },
            (Repr::Linear { a }, Repr::Power { a: b, p }) => Repr::Power { a: a * b, p: *p },
            (Repr::Power { a, p }, Repr::Linear { a: b }) => Repr::Power { a: a * b.powf(*p), p: *p },
            (Repr::Power { a, p }, Repr::Power { a: b, p: q }) => {
                Repr::Power { a: a * b.powf(*p), p: p * q }
            }
            (Repr::Linear { a }, Repr::Pwl(pts)) => Repr::Pwl(pts.iter().map(|&(r, v)| (r, a * v)).collect()),
            (Repr::Pwl(pts), Repr::Linear { a }) => Repr::Pwl(pts.iter().map(|&(r, v)| (r / a, v)).collect()),
            (Repr::Pwl(f), Repr::Pwl(g)) => Repr::Pwl(compose_pwl(f, g)),
            _ => Repr::Compose(Box::new(self.clone()), Box::new(inner.clone())),
        };
        Ok(ScalarCurve { repr, class })
    }

    /// `c · self`.
    pub fn scale(&self, c: f64) -> Result<ScalarCurve> {
        finite_nonneg("c", c)?;
        if c == 0.0 {
            return Ok(Self::zero());
        }
        let repr = match &self.repr {
            Repr::Linear { a } => Repr::Linear { a: a * c },
            Repr::Power { a, p } => Repr::Power { a: a * c, p: *p },
            Repr::Saturating { a } => Repr::Saturating { a: a * c },
            Repr::ExpDecay { c: c0, lambda } => Repr::ExpDecay { c: c0 * c, lambda: *lambda },
            Repr::Pwl(pts) => Repr::Pwl(pts.iter().map(|&(r, v)| (r, c * v)).collect()),
            _ => Repr::Compose(Box::new(Self::linear(c)?), Box::new(self.clone())),
        };
        Ok(ScalarCurve { repr, class: self.class })
    }

    /// Pointwise sum of nondecreasing curves.
    pub fn sum(parts: &[ScalarCurve]) -> Result<ScalarCurve> {
        combine(parts, Combine::Sum)
    }

    /// Pointwise maximum of nondecreasing curves.
    pub fn max(parts: &[ScalarCurve]) -> Result<ScalarCurve> {
        combine(parts, Combine::Max)
    }

    /// Add `slope · r`, turning a nondecreasing envelope anchored at zero into
    /// a K∞ curve. Curves that already are K∞ are returned unchanged.
    pub fn lift_to_kinf(&self, slope: f64) -> Result<ScalarCurve> {
        if !(slope.is_finite() && slope > 0.0) {
            return contract("lift slope must be positive");
        }
        if self.class == CurveClass::KInf {
            return Ok(self.clone());
        }
        if self.at(0.0) != 0.0 {
            return contract("cannot lift a curve with nonzero value at 0 into K-infinity");
        }
        match &self.repr {
            Repr::Pwl(pts) => {
                let mut pts: Vec<(f64, f64)> = pts.iter().map(|&(r, v)| (r, v + slope * r)).collect();
                if pts.len() == 1 {
                    let (r, v) = pts[0];
                    pts.push((r + 1.0, v + slope));
                }
                ScalarCurve::pwl(pts, CurveClass::KInf)
            }
            Repr::Linear { a } => ScalarCurve::linear(a + slope),
            _ => Ok(ScalarCurve::sum(&[self.clone().with_class(CurveClass::K), ScalarCurve::linear(slope)?])?
                .with_class(CurveClass::KInf)),
        }
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Combine {
    Sum,
    Max,
}

fn combine(parts: &[ScalarCurve], op: Combine) -> Result<ScalarCurve> {
    if parts.is_empty() {
        return contract("combination needs at least one curve");
    }
    if parts.iter().any(|c| c.class == CurveClass::L) {
        return contract("sum/max are defined for nondecreasing curves only");
    }
    let nonzero: Vec<&ScalarCurve> = parts.iter().filter(|c| !c.is_zero()).collect();
    if nonzero.is_empty() {
        return Ok(ScalarCurve::zero());
    }
    if nonzero.len() == 1 {
        return Ok(nonzero[0].clone());
    }
    let class = if parts.iter().all(|c| c.class.is_k()) {
        if parts.iter().any(|c| c.class == CurveClass::KInf) {
            CurveClass::KInf
        } else {
            CurveClass::K
        }
    } else {
        CurveClass::Mono
    };
    if let Some(slopes) = nonzero.iter().map(|c| c.linear_slope()).collect::<Option<Vec<f64>>>() {
        let a = match op {
            Combine::Sum => slopes.iter().sum(),
            Combine::Max => slopes.iter().copied().fold(0.0, f64::max),
        };
        return Ok(ScalarCurve { repr: Repr::Linear { a }, class });
    }
    if let Some(pts) = nonzero.iter().map(|c| c.points()).collect::<Option<Vec<&[(f64, f64)]>>>() {
        let merged = match op {
            Combine::Sum => pwl::sum(&pts),
            Combine::Max => pwl::upper_envelope(&pts, false),
        };
        return Ok(ScalarCurve { repr: Repr::Pwl(merged), class });
    }
    let owned = nonzero.into_iter().cloned().collect();
    let repr = match op {
        Combine::Sum => Repr::Sum(owned),
        Combine::Max => Repr::Max(owned),
    };
    Ok(ScalarCurve { repr, class })
}

/// Exact composition of two nondecreasing piecewise-linear curves: breakpoints
/// of `g` plus the preimages under `g` of the breakpoints of `f`.
fn compose_pwl(f: &[(f64, f64)], g: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut xs: Vec<f64> = g.iter().map(|p| p.0).collect();
    xs.extend(f.iter().filter_map(|&(b, _)| pwl::preimage(g, b)));
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let last = *xs.last().unwrap();
    xs.push(last + last.max(1.0));
    xs.into_iter()
        .map(|x| (x, pwl::eval(f, pwl::eval(g, x, false), false)))
        .collect()
}

/// Sampling grid for class checks: zero plus `per_decade` log-spaced points
/// per decade on `[lo, hi]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassGrid {
    pub lo: f64,
    pub hi: f64,
    pub per_decade: usize,
    /// Upper limit allowed for the tail of class-L curves.
    pub l_floor: f64,
}

impl Default for ClassGrid {
    fn default() -> Self {
        ClassGrid { lo: 1e-3, hi: 1e3, per_decade: 256, l_floor: 0.0 }
    }
}

impl ClassGrid {
    pub fn points(&self) -> Vec<f64> {
        let decades = (self.hi / self.lo).log10();
        let n = ((decades * self.per_decade as f64).ceil() as usize).max(1);
        let step = decades / n as f64;
        let mut xs = Vec::with_capacity(n + 2);
        xs.push(0.0);
        xs.extend((0..=n).map(|k| self.lo * 10f64.powf(step * k as f64)));
        xs
    }
}

/// Smallest nondecreasing piecewise-linear curve dominating `samples`: the
/// running maximum over the sorted abscissae, optionally anchored at `(0, 0)`.
///
/// The result is labelled K∞ when it is anchored, strictly increasing and has
/// a positive final slope, K when only the first two hold, `mono` otherwise.
pub fn fit_monotone_envelope(samples: &[(f64, f64)], zero_anchor: bool) -> Result<ScalarCurve> {
    if samples.is_empty() {
        return contract("envelope fit needs at least one sample");
    }
    if let Some(s) = samples.iter().find(|s| !(s.0.is_finite() && s.1.is_finite() && s.0 >= 0.0 && s.1 >= 0.0)) {
        return contract(format!("envelope samples must be finite and nonnegative, got ({}, {})", s.0, s.1));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let mut pts: Vec<(f64, f64)> = Vec::with_capacity(sorted.len() + 1);
    if zero_anchor && sorted[0].0 > 0.0 {
        pts.push((0.0, 0.0));
    }
    let mut running = 0.0f64;
    for (r, v) in sorted {
        running = running.max(v);
        match pts.last_mut() {
            Some(last) if last.0 == r => last.1 = last.1.max(running),
            _ => pts.push((r, running)),
        }
    }
    let anchored = pts[0] == (0.0, 0.0);
    let strict = pts.windows(2).all(|w| w[1].1 > w[0].1);
    let class = if anchored && strict && pts.len() > 1 {
        if pwl::final_slope(&pts) > 0.0 {
            CurveClass::KInf
        } else {
            CurveClass::K
        }
    } else {
        CurveClass::Mono
    };
    ScalarCurve::pwl(pts, class)
}

// ---------------------------------------------------------------- JSON

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CurveJson {
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    params: Option<BTreeMap<String, f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    points: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    parts: Option<Vec<CurveJson>>,
    /// Inferred from the kind and parameters when omitted.
    #[serde(default)]
    class: Option<CurveClass>,
}

impl From<ScalarCurve> for CurveJson {
    fn from(c: ScalarCurve) -> Self {
        let params = |kv: &[(&str, f64)]| Some(kv.iter().map(|(k, v)| (k.to_string(), *v)).collect());
        let (kind, params, points, parts) = match c.repr {
            Repr::Linear { a } => ("linear", params(&[("a", a)]), None, None),
            Repr::Power { a, p } => ("power", params(&[("a", a), ("p", p)]), None, None),
            Repr::Saturating { a } => ("sat", params(&[("a", a)]), None, None),
            Repr::ExpDecay { c, lambda } => ("expdec", params(&[("c", c), ("lambda", lambda)]), None, None),
            Repr::Pwl(p) => ("pwl", None, Some(p.into_iter().map(|(r, v)| [r, v]).collect()), None),
            Repr::Compose(f, g) => ("comp", None, None, Some(vec![(*f).into(), (*g).into()])),
            Repr::Sum(v) => ("sum", None, None, Some(v.into_iter().map(Into::into).collect())),
            Repr::Max(v) => ("max", None, None, Some(v.into_iter().map(Into::into).collect())),
        };
        CurveJson { kind: kind.to_string(), params, points, parts, class: Some(c.class) }
    }
}

impl TryFrom<CurveJson> for ScalarCurve {
    type Error = Error;

    fn try_from(j: CurveJson) -> Result<Self> {
        let param = |name: &str| -> Result<f64> {
            j.params
                .as_ref()
                .and_then(|p| p.get(name).copied())
                .ok_or_else(|| Error::Parse(format!("curve kind '{}' needs param '{name}'", j.kind)))
        };
        let parts = || -> Result<Vec<ScalarCurve>> {
            j.parts
                .clone()
                .ok_or_else(|| Error::Parse(format!("curve kind '{}' needs 'parts'", j.kind)))?
                .into_iter()
                .map(ScalarCurve::try_from)
                .collect()
        };
        let curve = match j.kind.as_str() {
            "linear" => ScalarCurve::linear(param("a")?)?,
            "power" => ScalarCurve::power(param("a")?, param("p")?)?,
            "sat" => ScalarCurve::saturating(param("a")?)?,
            "expdec" => ScalarCurve::exp_decay(param("c")?, param("lambda")?)?,
            "pwl" => {
                let pts = j
                    .points
                    .clone()
                    .ok_or_else(|| Error::Parse("curve kind 'pwl' needs 'points'".into()))?;
                let pts: Vec<(f64, f64)> = pts.into_iter().map(|[r, v]| (r, v)).collect();
                let class = j.class.unwrap_or_else(|| {
                    let strict = pts.first() == Some(&(0.0, 0.0)) && pts.windows(2).all(|w| w[1].1 > w[0].1);
                    if strict {
                        CurveClass::KInf
                    } else {
                        CurveClass::Mono
                    }
                });
                ScalarCurve::pwl(pts, class)?
            }
            "comp" => {
                let p = parts()?;
                if p.len() != 2 {
                    return Err(Error::Parse("'comp' needs exactly two parts (outer, inner)".into()));
                }
                let mut it = p.into_iter();
                let (f, g) = (it.next().unwrap(), it.next().unwrap());
                match j.class {
                    None => f.compose(&g)?,
                    Some(class) => ScalarCurve { repr: Repr::Compose(Box::new(f), Box::new(g)), class },
                }
            }
            "sum" => match j.class {
                None => ScalarCurve::sum(&parts()?)?,
                Some(class) => ScalarCurve { repr: Repr::Sum(parts()?), class },
            },
            "max" => match j.class {
                None => ScalarCurve::max(&parts()?)?,
                Some(class) => ScalarCurve { repr: Repr::Max(parts()?), class },
            },
            other => return Err(Error::Parse(format!("unknown curve kind '{other}'"))),
        };
        Ok(match j.class {
            Some(class) => curve.with_class(class),
            None => curve,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lin(a: f64) -> ScalarCurve {
        ScalarCurve::linear(a).unwrap()
    }

    #[test]
    fn eval_examples() {
        assert_eq!(lin(0.5).eval(2.0).unwrap(), 1.0);
        for c in [lin(3.0), ScalarCurve::power(2.0, 0.5).unwrap(), ScalarCurve::saturating(1.0).unwrap()] {
            assert_eq!(c.eval(0.0).unwrap(), 0.0);
        }
        let p = ScalarCurve::pwl(vec![(0.0, 0.0), (1.0, 2.0), (3.0, 4.0)], CurveClass::KInf).unwrap();
        assert_eq!(p.eval(2.0).unwrap(), 3.0);
        assert!(matches!(lin(1.0).eval(-1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn compose_examples() {
        let id = lin(2.0).compose(&lin(0.5)).unwrap();
        assert_eq!(id.linear_slope(), Some(1.0));
        let sq = ScalarCurve::power(1.0, 2.0).unwrap();
        let quartic = sq.compose(&sq).unwrap();
        for r in [0.0, 0.3, 1.0, 2.5, 7.0] {
            assert!((quartic.at(r) - r.powi(4)).abs() <= 1e-12 * r.powi(4).max(1.0));
        }
        assert!(lin(3.0).compose(&ScalarCurve::zero()).unwrap().is_zero());
        assert!(ScalarCurve::zero().compose(&sq).unwrap().is_zero());
        let l = ScalarCurve::exp_decay(1.0, 1.0).unwrap();
        assert!(matches!(lin(1.0).compose(&l), Err(Error::Contract(_))));
    }

    #[test]
    fn compose_pwl_is_exact_on_its_breakpoints() {
        let f = ScalarCurve::pwl(vec![(0.0, 0.0), (1.0, 3.0), (2.0, 4.0)], CurveClass::KInf).unwrap();
        let g = ScalarCurve::pwl(vec![(0.0, 0.0), (0.5, 0.5), (4.0, 1.5)], CurveClass::KInf).unwrap();
        let fg = f.compose(&g).unwrap();
        assert!(fg.points().is_some());
        for k in 0..=200 {
            let r = k as f64 * 0.05;
            let want = f.at(g.at(r));
            assert!((fg.at(r) - want).abs() <= 1e-12 * want.max(1.0), "r={r}");
        }
    }

    #[test]
    fn envelope_examples() {
        let e = fit_monotone_envelope(&[(1.0, 2.0), (2.0, 1.0)], false).unwrap();
        assert_eq!(e.at(1.0), 2.0);
        assert_eq!(e.at(2.0), 2.0);
        let e = fit_monotone_envelope(&[(0.0, 0.0), (1.0, 1.0), (2.0, 3.0)], false).unwrap();
        assert_eq!(e.points().unwrap(), &[(0.0, 0.0), (1.0, 1.0), (2.0, 3.0)]);
        let e = fit_monotone_envelope(&[(3.0, 5.0)], true).unwrap();
        assert_eq!(e.points().unwrap(), &[(0.0, 0.0), (3.0, 5.0)]);
        assert_eq!(e.class(), CurveClass::KInf);
        assert!(matches!(fit_monotone_envelope(&[], true), Err(Error::Contract(_))));
    }

    #[test]
    fn class_checks() {
        let g = ClassGrid { per_decade: 16, ..Default::default() };
        lin(1.0).verify_class(&g).unwrap();
        ScalarCurve::zero().verify_class(&g).unwrap();
        ScalarCurve::saturating(1.0).unwrap().verify_class(&g).unwrap();
        assert!(ScalarCurve::saturating(1.0).unwrap().with_class(CurveClass::KInf).verify_class(&g).is_err());
        ScalarCurve::exp_decay(2.0, 0.5).unwrap().verify_class(&g).unwrap();
        let flat = vec![(0.0, 0.0), (1.0, 1.0), (2.0, 1.0)];
        assert!(matches!(ScalarCurve::pwl(flat.clone(), CurveClass::K), Err(Error::Contract(_))));
        let relabelled = ScalarCurve::pwl(flat, CurveClass::Mono).unwrap().with_class(CurveClass::K);
        assert!(relabelled.verify_class(&g).is_err());
        assert!(ScalarCurve::pwl(vec![(0.0, 1.0), (1.0, 0.5)], CurveClass::Mono).is_err());
        let l = ScalarCurve::pwl(vec![(0.0, 2.0), (1.0, 1.0), (2.0, 0.0)], CurveClass::L).unwrap();
        l.verify_class(&g).unwrap();
        assert_eq!(l.at(10.0), 0.0);
    }

    #[test]
    fn sum_and_max() {
        let s = ScalarCurve::sum(&[lin(1.0), lin(2.0)]).unwrap();
        assert_eq!(s.linear_slope(), Some(3.0));
        let m = ScalarCurve::max(&[lin(1.0), ScalarCurve::power(1.0, 2.0).unwrap()]).unwrap();
        assert_eq!(m.at(0.5), 0.5);
        assert_eq!(m.at(3.0), 9.0);
        let p = ScalarCurve::pwl(vec![(0.0, 0.0), (1.0, 2.0)], CurveClass::KInf).unwrap();
        let q = ScalarCurve::pwl(vec![(0.0, 0.0), (2.0, 1.0), (3.0, 5.0)], CurveClass::KInf).unwrap();
        let m = ScalarCurve::max(&[p.clone(), q.clone()]).unwrap();
        for k in 0..100 {
            let r = k as f64 * 0.1;
            assert!((m.at(r) - p.at(r).max(q.at(r))).abs() < 1e-12);
        }
    }

    #[test]
    fn json_shape() {
        let c = lin(0.5);
        let v = serde_json::to_value(&c).unwrap();
        assert_eq!(v, serde_json::json!({"kind": "linear", "params": {"a": 0.5}, "class": "Kinf"}));
        let p: ScalarCurve =
            serde_json::from_str(r#"{"points": [[0,0],[1,2]], "class": "K", "kind": "pwl"}"#).unwrap();
        assert_eq!(p.at(0.5), 1.0);
        let bad = serde_json::from_str::<ScalarCurve>(r#"{"kind":"linear","params":{},"class":"K"}"#);
        assert!(bad.is_err());
    }
}
