//! Time scales: the supported families, jump operators, graininess, point
//! classification, intervals, and the reflection `t -> -t`.
//!
//! Points are stored by their exact combinatorial position (an index into a
//! lattice or finite set, an exponent on a q-scale) so that `sigma` and `rho`
//! never accumulate rounding. Real values are produced only by [`TimeScale::value`].

use std::cmp::Ordering;
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// The supported scale families.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Family<S> {
    /// The real interval `[lo, hi]`.
    Continuous { lo: S, hi: S },
    /// `{origin + i * step : 0 <= i < count}`.
    Lattice { origin: S, step: S, count: usize },
    /// `{q^k : k_min <= k <= k_max}`, or `{q^k : k >= k_min} ∪ {0}` when `zero` is set
    /// (then `k_max` only bounds enumeration). `reflected` negates every point.
    QScale {
        q: S,
        k_min: i32,
        k_max: i32,
        zero: bool,
        reflected: bool,
    },
    /// A strictly increasing list of points.
    Finite { points: Vec<S> },
}

/// A point of a time scale in exact form.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum ScalePoint<S> {
    /// A point of a continuous interval.
    Real(S),
    /// Position in a lattice or finite set.
    Index(usize),
    /// The point `q^k` (or `-q^k` on a reflected q-scale).
    QPow(i32),
    /// The accumulation point of a q-scale.
    Zero,
}

/// Density flags of a point. At the maximum both right flags are false, at the
/// minimum both left flags are false.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct PointClass {
    pub right_dense: bool,
    pub right_scattered: bool,
    pub left_dense: bool,
    pub left_scattered: bool,
}

/// An interval of a time scale, each end optionally open.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct TsInterval<S> {
    pub lower: ScalePoint<S>,
    pub upper: ScalePoint<S>,
    pub lower_open: bool,
    pub upper_open: bool,
}

impl<S> TsInterval<S> {
    pub fn new(lower: ScalePoint<S>, upper: ScalePoint<S>, lower_open: bool, upper_open: bool) -> Self {
        TsInterval {
            lower,
            upper,
            lower_open,
            upper_open,
        }
    }

    pub fn closed(lower: ScalePoint<S>, upper: ScalePoint<S>) -> Self {
        Self::new(lower, upper, false, false)
    }

    pub fn open(lower: ScalePoint<S>, upper: ScalePoint<S>) -> Self {
        Self::new(lower, upper, true, true)
    }
}

/// A validated time scale.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct TimeScale<S> {
    family: Family<S>,
}

impl<S: Scalar> TimeScale<S> {
    pub fn new(family: Family<S>) -> Result<Self> {
        match &family {
            Family::Continuous { lo, hi } => {
                if !(lo < hi) {
                    return Err(Error::InvalidScale("continuous interval needs lo < hi".into()));
                }
            }
            Family::Lattice { step, count, .. } => {
                if !(*step > S::zero()) {
                    return Err(Error::InvalidScale("lattice step must be positive".into()));
                }
                if *count == 0 {
                    return Err(Error::InvalidScale("lattice needs at least one point".into()));
                }
            }
            Family::QScale { q, k_min, k_max, .. } => {
                if !(*q > S::zero() && *q < S::one()) {
                    return Err(Error::InvalidScale("q must lie in (0, 1)".into()));
                }
                if k_min > k_max {
                    return Err(Error::InvalidScale("q-scale needs kmin <= kmax".into()));
                }
            }
            Family::Finite { points } => {
                if points.is_empty() {
                    return Err(Error::InvalidScale("finite scale needs at least one point".into()));
                }
                if points.windows(2).any(|w| !(w[0] < w[1])) {
                    return Err(Error::InvalidScale("finite scale points must be strictly increasing".into()));
                }
            }
        }
        Ok(TimeScale { family })
    }

    pub fn continuous(lo: S, hi: S) -> Result<Self> {
        Self::new(Family::Continuous { lo, hi })
    }

    pub fn lattice(origin: S, step: S, count: usize) -> Result<Self> {
        Self::new(Family::Lattice { origin, step, count })
    }

    pub fn qscale(q: S, k_min: i32, k_max: i32, zero: bool) -> Result<Self> {
        Self::new(Family::QScale {
            q,
            k_min,
            k_max,
            zero,
            reflected: false,
        })
    }

    pub fn finite(points: Vec<S>) -> Result<Self> {
        Self::new(Family::Finite { points })
    }

    pub fn family(&self) -> &Family<S> {
        &self.family
    }

    pub fn is_discrete(&self) -> bool {
        !matches!(self.family, Family::Continuous { .. })
    }

    /// The base of a q-scale.
    pub fn q(&self) -> Option<&S> {
        match &self.family {
            Family::QScale { q, .. } => Some(q),
            _ => None,
        }
    }

    fn discrete_len(&self) -> Option<usize> {
        match &self.family {
            Family::Lattice { count, .. } => Some(*count),
            Family::Finite { points } => Some(points.len()),
            _ => None,
        }
    }

    pub fn contains(&self, p: &ScalePoint<S>) -> bool {
        match (&self.family, p) {
            (Family::Continuous { lo, hi }, ScalePoint::Real(x)) => lo <= x && x <= hi,
            (Family::Lattice { count, .. }, ScalePoint::Index(i)) => i < count,
            (Family::Finite { points }, ScalePoint::Index(i)) => *i < points.len(),
            (
                Family::QScale {
                    k_min, k_max, zero, ..
                },
                ScalePoint::QPow(k),
            ) => k >= k_min && (*zero || k <= k_max),
            (Family::QScale { zero, .. }, ScalePoint::Zero) => *zero,
            _ => false,
        }
    }

    fn check(&self, p: &ScalePoint<S>) -> Result<()> {
        if self.contains(p) {
            Ok(())
        } else {
            Err(Error::PointNotInScale(self.label(p)))
        }
    }

    /// Real value of a point. The point is assumed to belong to the scale.
    pub fn value(&self, p: &ScalePoint<S>) -> S {
        match (&self.family, p) {
            (_, ScalePoint::Real(x)) => x.clone(),
            (Family::Lattice { origin, step, .. }, ScalePoint::Index(i)) => {
                origin.clone() + step.clone() * S::from_i64(*i as i64)
            }
            (Family::Finite { points }, ScalePoint::Index(i)) => points[*i].clone(),
            (Family::QScale { q, reflected, .. }, ScalePoint::QPow(k)) => {
                let v = q.powi(*k);
                if *reflected {
                    -v
                } else {
                    v
                }
            }
            (_, ScalePoint::Zero) => S::zero(),
            (_, p) => panic!("point {p:?} does not belong to this scale family"),
        }
    }

    /// Human-readable description of a point, used in diagnostics.
    pub fn label(&self, p: &ScalePoint<S>) -> String {
        match p {
            ScalePoint::Real(x) => format!("{}", x.to_f64()),
            ScalePoint::Index(i) => match self.discrete_len() {
                Some(n) if *i < n => format!("{}", self.value(p).to_f64()),
                _ => format!("#{i}"),
            },
            ScalePoint::QPow(k) => {
                let sign = match self.family {
                    Family::QScale { reflected: true, .. } => "-",
                    _ => "",
                };
                format!("{sign}q^{k}")
            }
            ScalePoint::Zero => "0".to_string(),
        }
    }

    /// Find the scale point whose value equals `x` exactly.
    pub fn locate(&self, x: &S) -> Result<ScalePoint<S>> {
        let miss = || Error::PointNotInScale(format!("{}", x.to_f64()));
        match &self.family {
            Family::Continuous { lo, hi } => {
                if lo <= x && x <= hi {
                    Ok(ScalePoint::Real(x.clone()))
                } else {
                    Err(miss())
                }
            }
            Family::Lattice { origin, step, count } => {
                let guess = ((x.clone() - origin.clone()) / step.clone()).to_f64().round();
                if !(guess >= 0.0 && guess < *count as f64) {
                    return Err(miss());
                }
                let p = ScalePoint::Index(guess as usize);
                if self.value(&p) == *x {
                    Ok(p)
                } else {
                    Err(miss())
                }
            }
            Family::Finite { points } => {
                let i = points
                    .binary_search_by(|v| v.partial_cmp(x).unwrap_or(Ordering::Less))
                    .map_err(|_| miss())?;
                Ok(ScalePoint::Index(i))
            }
            Family::QScale { .. } => {
                let k = self.nearest_exponent(x).ok_or_else(miss)?;
                match k {
                    None => Ok(ScalePoint::Zero),
                    Some(k) => {
                        for cand in [k, k - 1, k + 1] {
                            let p = ScalePoint::QPow(cand);
                            if self.contains(&p) && self.value(&p) == *x {
                                return Ok(p);
                            }
                        }
                        Err(miss())
                    }
                }
            }
        }
    }

    /// Like [`locate`](Self::locate) but, on q-scales, matches the exponent when
    /// `|x - q^k| <= rel_tol * |x|`. Lattices and finite sets still match exactly.
    pub fn locate_with_tolerance(&self, x: &S, rel_tol: f64) -> Result<ScalePoint<S>> {
        if !matches!(self.family, Family::QScale { .. }) {
            return self.locate(x);
        }
        let miss = || Error::PointNotInScale(format!("{}", x.to_f64()));
        match self.nearest_exponent(x).ok_or_else(miss)? {
            None => Ok(ScalePoint::Zero),
            Some(k) => {
                let p = ScalePoint::QPow(k);
                let err = (self.value(&p) - x.clone()).abs();
                if self.contains(&p) && err <= x.abs() * S::from_f64(rel_tol) {
                    Ok(p)
                } else {
                    Err(miss())
                }
            }
        }
    }

    /// `Some(None)` for zero, `Some(Some(k))` for the exponent closest to `x`.
    fn nearest_exponent(&self, x: &S) -> Option<Option<i32>> {
        let Family::QScale { q, zero, reflected, .. } = &self.family else {
            return None;
        };
        if x.is_zero() {
            return if *zero { Some(None) } else { None };
        }
        let negative = *x < S::zero();
        if negative != *reflected {
            return None;
        }
        let k = (x.abs().to_f64().ln() / q.to_f64().ln()).round();
        if !k.is_finite() || k.abs() > i32::MAX as f64 / 2.0 {
            return None;
        }
        Some(Some(k as i32))
    }

    /// Total order of two points of this scale.
    pub fn cmp_points(&self, a: &ScalePoint<S>, b: &ScalePoint<S>) -> Ordering {
        use ScalePoint::*;
        let reflected = matches!(self.family, Family::QScale { reflected: true, .. });
        let ord = match (a, b) {
            (Index(i), Index(j)) => i.cmp(j),
            (Zero, Zero) => Ordering::Equal,
            (Zero, QPow(_)) => Ordering::Less,
            (QPow(_), Zero) => Ordering::Greater,
            // larger exponent, smaller point
            (QPow(i), QPow(j)) => j.cmp(i),
            _ => {
                return self
                    .value(a)
                    .partial_cmp(&self.value(b))
                    .unwrap_or(Ordering::Equal)
            }
        };
        if reflected && matches!((a, b), (Zero | QPow(_), Zero | QPow(_))) {
            ord.reverse()
        } else {
            ord
        }
    }

    pub fn min_point(&self) -> ScalePoint<S> {
        match &self.family {
            Family::Continuous { lo, .. } => ScalePoint::Real(lo.clone()),
            Family::Lattice { .. } | Family::Finite { .. } => ScalePoint::Index(0),
            Family::QScale {
                k_min,
                k_max,
                zero,
                reflected,
                ..
            } => match (*reflected, *zero) {
                (true, _) => ScalePoint::QPow(*k_min),
                (false, true) => ScalePoint::Zero,
                (false, false) => ScalePoint::QPow(*k_max),
            },
        }
    }

    pub fn max_point(&self) -> ScalePoint<S> {
        match &self.family {
            Family::Continuous { hi, .. } => ScalePoint::Real(hi.clone()),
            Family::Lattice { count, .. } => ScalePoint::Index(count - 1),
            Family::Finite { points } => ScalePoint::Index(points.len() - 1),
            Family::QScale {
                k_min,
                k_max,
                zero,
                reflected,
                ..
            } => match (*reflected, *zero) {
                (false, _) => ScalePoint::QPow(*k_min),
                (true, true) => ScalePoint::Zero,
                (true, false) => ScalePoint::QPow(*k_max),
            },
        }
    }

    /// Exponent of the neighbour of `q^k` with larger value, if any.
    fn q_up(&self, k: i32) -> Option<i32> {
        let Family::QScale {
            k_min,
            k_max,
            zero,
            reflected,
            ..
        } = &self.family
        else {
            unreachable!()
        };
        if *reflected {
            (*zero || k < *k_max).then_some(k + 1)
        } else {
            (k > *k_min).then_some(k - 1)
        }
    }

    /// Exponent of the neighbour of `q^k` with smaller value, if any.
    fn q_down(&self, k: i32) -> Option<i32> {
        let Family::QScale {
            k_min,
            k_max,
            zero,
            reflected,
            ..
        } = &self.family
        else {
            unreachable!()
        };
        if *reflected {
            (k > *k_min).then_some(k - 1)
        } else {
            (*zero || k < *k_max).then_some(k + 1)
        }
    }

    /// Forward jump: the next point above `t`, or `t` itself at right-dense
    /// points and at the maximum.
    pub fn sigma(&self, t: &ScalePoint<S>) -> Result<ScalePoint<S>> {
        self.check(t)?;
        Ok(match t {
            ScalePoint::Real(_) | ScalePoint::Zero => t.clone(),
            ScalePoint::Index(i) => {
                let n = self.discrete_len().unwrap();
                ScalePoint::Index((*i + 1).min(n - 1))
            }
            ScalePoint::QPow(k) => ScalePoint::QPow(self.q_up(*k).unwrap_or(*k)),
        })
    }

    /// Backward jump: the previous point below `t`, or `t` itself at
    /// left-dense points and at the minimum.
    pub fn rho(&self, t: &ScalePoint<S>) -> Result<ScalePoint<S>> {
        self.check(t)?;
        Ok(match t {
            ScalePoint::Real(_) | ScalePoint::Zero => t.clone(),
            ScalePoint::Index(i) => ScalePoint::Index(i.saturating_sub(1)),
            ScalePoint::QPow(k) => ScalePoint::QPow(self.q_down(*k).unwrap_or(*k)),
        })
    }

    /// Forward graininess `sigma(t) - t`.
    pub fn mu(&self, t: &ScalePoint<S>) -> Result<S> {
        let s = self.sigma(t)?;
        Ok(self.value(&s) - self.value(t))
    }

    /// Backward graininess `t - rho(t)`.
    pub fn nu(&self, t: &ScalePoint<S>) -> Result<S> {
        let r = self.rho(t)?;
        Ok(self.value(t) - self.value(&r))
    }

    pub fn classify(&self, t: &ScalePoint<S>) -> Result<PointClass> {
        let s = self.sigma(t)?;
        let r = self.rho(t)?;
        let is_max = *t == self.max_point();
        let is_min = *t == self.min_point();
        let right_dense = !is_max && s == *t;
        let left_dense = !is_min && r == *t;
        Ok(PointClass {
            right_dense,
            right_scattered: !is_max && !right_dense,
            left_dense,
            left_scattered: !is_min && !left_dense,
        })
    }

    pub fn is_right_scattered(&self, t: &ScalePoint<S>) -> Result<bool> {
        Ok(self.sigma(t)? != *t)
    }

    pub fn is_left_scattered(&self, t: &ScalePoint<S>) -> Result<bool> {
        Ok(self.rho(t)? != *t)
    }

    /// Every point of a discrete scale in ascending order. On a q-scale that
    /// contains 0 the enumeration stops at `q^k_max`.
    pub fn all_points(&self) -> Result<Vec<ScalePoint<S>>> {
        match &self.family {
            Family::Continuous { .. } => Err(Error::UnsupportedOnContinuousScale),
            Family::Lattice { count, .. } => Ok((0..*count).map(ScalePoint::Index).collect()),
            Family::Finite { points } => Ok((0..points.len()).map(ScalePoint::Index).collect()),
            Family::QScale {
                k_min,
                k_max,
                zero,
                reflected,
                ..
            } => {
                let mut out = Vec::with_capacity((k_max - k_min + 2) as usize);
                if *reflected {
                    out.extend((*k_min..=*k_max).map(ScalePoint::QPow));
                    if *zero {
                        out.push(ScalePoint::Zero);
                    }
                } else {
                    if *zero {
                        out.push(ScalePoint::Zero);
                    }
                    out.extend((*k_min..=*k_max).rev().map(ScalePoint::QPow));
                }
                Ok(out)
            }
        }
    }

    /// Whether `p` lies in `iv` (by the scale's order).
    pub fn interval_contains(&self, iv: &TsInterval<S>, p: &ScalePoint<S>) -> bool {
        let lo = self.cmp_points(p, &iv.lower);
        let hi = self.cmp_points(p, &iv.upper);
        let above = if iv.lower_open {
            lo == Ordering::Greater
        } else {
            lo != Ordering::Less
        };
        let below = if iv.upper_open {
            hi == Ordering::Less
        } else {
            hi != Ordering::Greater
        };
        above && below
    }

    pub fn validate_interval(&self, iv: &TsInterval<S>) -> Result<()> {
        self.check(&iv.lower)?;
        self.check(&iv.upper)?;
        if self.cmp_points(&iv.lower, &iv.upper) == Ordering::Greater {
            return Err(Error::InvalidInterval(format!(
                "lower end {} exceeds upper end {}",
                self.label(&iv.lower),
                self.label(&iv.upper)
            )));
        }
        Ok(())
    }

    /// Scale points in `iv`, ascending.
    pub fn points_in(&self, iv: &TsInterval<S>) -> Result<Vec<ScalePoint<S>>> {
        if !self.is_discrete() {
            return Err(Error::UnsupportedOnContinuousScale);
        }
        self.validate_interval(iv)?;
        Ok(self
            .all_points()?
            .into_iter()
            .filter(|p| self.interval_contains(iv, p))
            .collect())
    }

    /// The reflected scale `{-t : t in self}`.
    pub fn dual(&self) -> TimeScale<S> {
        let family = match &self.family {
            Family::Continuous { lo, hi } => Family::Continuous {
                lo: -hi.clone(),
                hi: -lo.clone(),
            },
            Family::Lattice { origin, step, count } => Family::Lattice {
                origin: -(origin.clone() + step.clone() * S::from_i64(*count as i64 - 1)),
                step: step.clone(),
                count: *count,
            },
            Family::QScale {
                q,
                k_min,
                k_max,
                zero,
                reflected,
            } => Family::QScale {
                q: q.clone(),
                k_min: *k_min,
                k_max: *k_max,
                zero: *zero,
                reflected: !reflected,
            },
            Family::Finite { points } => Family::Finite {
                points: points.iter().rev().map(|p| -p.clone()).collect(),
            },
        };
        TimeScale { family }
    }

    /// Image of `p` in [`dual`](Self::dual).
    pub fn dual_point(&self, p: &ScalePoint<S>) -> ScalePoint<S> {
        match p {
            ScalePoint::Real(x) => ScalePoint::Real(-x.clone()),
            ScalePoint::Index(i) => ScalePoint::Index(self.discrete_len().unwrap() - 1 - i),
            ScalePoint::QPow(_) | ScalePoint::Zero => p.clone(),
        }
    }

    pub fn dual_interval(&self, iv: &TsInterval<S>) -> TsInterval<S> {
        TsInterval {
            lower: self.dual_point(&iv.upper),
            upper: self.dual_point(&iv.lower),
            lower_open: iv.upper_open,
            upper_open: iv.lower_open,
        }
    }

    /// Parse the textual scale description, e.g. `qscale q=0.5 kmin=0 kmax=6 zero`,
    /// `lattice origin=0 step=1 count=50`, `finite 0,1,2,4`, `continuous 0 1`.
    /// Numbers may be written as fractions (`3/10`), which the rational backend
    /// keeps exact.
    pub fn parse(spec: &str) -> Result<Self> {
        let mut tokens = spec.split_whitespace();
        let head = tokens.next().ok_or_else(|| Error::Parse("empty scale spec".into()))?;
        let rest: Vec<&str> = tokens.collect();
        let key = |name: &str| -> Result<&str> {
            rest.iter()
                .find_map(|t| t.strip_prefix(name).and_then(|v| v.strip_prefix('=')))
                .ok_or_else(|| Error::Parse(format!("{head}: missing {name}=")))
        };
        match head {
            "qscale" => {
                let q = parse_number::<S>(key("q")?)?;
                let k_min = parse_int(key("kmin")?)?;
                let k_max = parse_int(key("kmax")?)?;
                for t in &rest {
                    if !t.contains('=') && *t != "zero" && *t != "reflected" {
                        return Err(Error::Parse(format!("qscale: unknown flag {t}")));
                    }
                }
                Self::new(Family::QScale {
                    q,
                    k_min,
                    k_max,
                    zero: rest.contains(&"zero"),
                    reflected: rest.contains(&"reflected"),
                })
            }
            "lattice" => {
                let origin = parse_number::<S>(key("origin")?)?;
                let step = parse_number::<S>(key("step")?)?;
                let count: usize = key("count")?
                    .parse()
                    .map_err(|_| Error::Parse("lattice: count must be a non-negative integer".into()))?;
                Self::lattice(origin, step, count)
            }
            "finite" => {
                let joined = rest.join("");
                let points = joined
                    .split(',')
                    .filter(|s| !s.is_empty())
                    .map(parse_number::<S>)
                    .collect::<Result<Vec<_>>>()?;
                Self::finite(points)
            }
            "continuous" => {
                if rest.len() != 2 {
                    return Err(Error::Parse("continuous: expected `continuous LO HI`".into()));
                }
                Self::continuous(parse_number(rest[0])?, parse_number(rest[1])?)
            }
            other => Err(Error::Parse(format!("unknown scale family `{other}`"))),
        }
    }
}

fn parse_int(s: &str) -> Result<i32> {
    s.parse().map_err(|_| Error::Parse(format!("expected an integer, got `{s}`")))
}

fn parse_number<S: Scalar>(s: &str) -> Result<S> {
    let bad = || Error::Parse(format!("expected a number, got `{s}`"));
    if let Some((num, den)) = s.split_once('/') {
        let num: f64 = num.trim().parse().map_err(|_| bad())?;
        let den: f64 = den.trim().parse().map_err(|_| bad())?;
        if den == 0.0 {
            return Err(bad());
        }
        Ok(S::from_f64(num) / S::from_f64(den))
    } else {
        let v: f64 = s.trim().parse().map_err(|_| bad())?;
        if v.is_finite() {
            Ok(S::from_f64(v))
        } else {
            Err(bad())
        }
    }
}

impl<S: Scalar> fmt::Display for TimeScale<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.family {
            Family::Continuous { lo, hi } => write!(f, "continuous {} {}", lo.to_f64(), hi.to_f64()),
            Family::Lattice { origin, step, count } => write!(
                f,
                "lattice origin={} step={} count={count}",
                origin.to_f64(),
                step.to_f64()
            ),
            Family::QScale {
                q,
                k_min,
                k_max,
                zero,
                reflected,
            } => {
                write!(f, "qscale q={} kmin={k_min} kmax={k_max}", q.to_f64())?;
                if *zero {
                    f.write_str(" zero")?;
                }
                if *reflected {
                    f.write_str(" reflected")?;
                }
                Ok(())
            }
            Family::Finite { points } => {
                f.write_str("finite ")?;
                for (i, p) in points.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{}", p.to_f64())?;
                }
                Ok(())
            }
        }
    }
}
