//! Functions on time scales and their delta/nabla calculus.
//!
//! A [`GridFunction`] is either a table of values on every scale point of its
//! domain or an analytic evaluator. Derivatives on scattered points are the
//! exact difference quotients; dense points need a caller-supplied derivative.

use std::cmp::Ordering;
use std::fmt;
use std::io::Read;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::scale::{ScalePoint, TimeScale, TsInterval};

pub type Evaluator<S> = Arc<dyn Fn(&S) -> S + Send + Sync>;

/// Which generalized derivative.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Calculus {
    Delta,
    Nabla,
}

#[derive(Clone)]
pub enum Source<S> {
    /// Values on every scale point of the domain, ascending.
    Table(Vec<(ScalePoint<S>, S)>),
    Analytic {
        f: Evaluator<S>,
        derivative: Option<Evaluator<S>>,
    },
}

#[derive(Clone)]
pub struct GridFunction<S> {
    scale: TimeScale<S>,
    domain: TsInterval<S>,
    source: Source<S>,
}

impl<S: Scalar> fmt::Debug for GridFunction<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut d = f.debug_struct("GridFunction");
        d.field("scale", &self.scale.to_string()).field("domain", &self.domain);
        match &self.source {
            Source::Table(rows) => d.field("table", rows),
            Source::Analytic { derivative, .. } => d.field("analytic", &derivative.is_some()),
        };
        d.finish()
    }
}

impl<S: Scalar> GridFunction<S> {
    /// Table on `points_in(domain)`, one value per point in ascending order.
    pub fn from_values(scale: TimeScale<S>, domain: TsInterval<S>, values: Vec<S>) -> Result<Self> {
        let points = scale.points_in(&domain)?;
        if points.len() != values.len() {
            return Err(Error::TableMismatch(format!(
                "domain holds {} points, got {} values",
                points.len(),
                values.len()
            )));
        }
        Ok(GridFunction {
            source: Source::Table(points.into_iter().zip(values).collect()),
            scale,
            domain,
        })
    }

    /// Table built by evaluating `f` at every point of the domain.
    pub fn tabulate(scale: TimeScale<S>, domain: TsInterval<S>, f: impl Fn(&S) -> S) -> Result<Self> {
        let values = scale.points_in(&domain)?.iter().map(|p| f(&scale.value(p))).collect();
        Self::from_values(scale, domain, values)
    }

    /// Table from explicit `(point, value)` rows, which must list exactly the
    /// domain's points in ascending order.
    pub fn from_rows(scale: TimeScale<S>, domain: TsInterval<S>, rows: Vec<(ScalePoint<S>, S)>) -> Result<Self> {
        let points = scale.points_in(&domain)?;
        if points.len() != rows.len() || points.iter().zip(&rows).any(|(p, (r, _))| p != r) {
            return Err(Error::TableMismatch(
                "rows do not match the domain's scale points".into(),
            ));
        }
        Ok(GridFunction {
            source: Source::Table(rows),
            scale,
            domain,
        })
    }

    pub fn analytic(
        scale: TimeScale<S>,
        domain: TsInterval<S>,
        f: Evaluator<S>,
        derivative: Option<Evaluator<S>>,
    ) -> Result<Self> {
        scale.validate_interval(&domain)?;
        Ok(GridFunction {
            scale,
            domain,
            source: Source::Analytic { f, derivative },
        })
    }

    /// Function on the whole of a discrete scale, tabulated from `f`.
    pub fn on_scale(scale: &TimeScale<S>, f: impl Fn(&S) -> S) -> Result<Self> {
        let domain = TsInterval::closed(scale.min_point(), scale.max_point());
        Self::tabulate(scale.clone(), domain, f)
    }

    pub fn scale(&self) -> &TimeScale<S> {
        &self.scale
    }

    pub fn domain(&self) -> &TsInterval<S> {
        &self.domain
    }

    pub fn source(&self) -> &Source<S> {
        &self.source
    }

    /// Scale points of the domain, ascending.
    pub fn points(&self) -> Result<Vec<ScalePoint<S>>> {
        match &self.source {
            Source::Table(rows) => Ok(rows.iter().map(|(p, _)| p.clone()).collect()),
            Source::Analytic { .. } => self.scale.points_in(&self.domain),
        }
    }

    pub fn in_domain(&self, p: &ScalePoint<S>) -> bool {
        self.scale.contains(p) && self.scale.interval_contains(&self.domain, p)
    }

    pub fn eval(&self, p: &ScalePoint<S>) -> Result<S> {
        if !self.in_domain(p) {
            return Err(Error::PointOutsideDomain(self.scale.label(p)));
        }
        match &self.source {
            Source::Table(rows) => rows
                .binary_search_by(|(q, _)| self.scale.cmp_points(q, p))
                .map(|i| rows[i].1.clone())
                .map_err(|_| Error::PointOutsideDomain(self.scale.label(p))),
            Source::Analytic { f, .. } => Ok(f(&self.scale.value(p))),
        }
    }

    /// `(point, value)` for every point of the domain.
    pub fn samples(&self) -> Result<Vec<(ScalePoint<S>, S)>> {
        match &self.source {
            Source::Table(rows) => Ok(rows.clone()),
            Source::Analytic { .. } => self
                .points()?
                .into_iter()
                .map(|p| {
                    let v = self.eval(&p)?;
                    Ok((p, v))
                })
                .collect(),
        }
    }

    pub fn values(&self) -> Result<Vec<S>> {
        Ok(self.samples()?.into_iter().map(|(_, v)| v).collect())
    }

    fn same_grid(&self, other: &Self) -> bool {
        self.scale == other.scale && self.domain == other.domain
    }

    /// Pointwise combination of two functions on the same scale and domain.
    pub fn zip_with(&self, other: &Self, op: impl Fn(&S, &S) -> Result<S>) -> Result<Self> {
        if !self.same_grid(other) {
            return Err(Error::ScaleMismatch);
        }
        let rows = self
            .samples()?
            .into_iter()
            .zip(other.values()?)
            .map(|((p, a), b)| Ok((p, op(&a, &b)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(GridFunction {
            scale: self.scale.clone(),
            domain: self.domain.clone(),
            source: Source::Table(rows),
        })
    }

    /// Pointwise map of the values.
    pub fn map(&self, op: impl Fn(&S) -> S) -> Result<Self> {
        let rows = self.samples()?.into_iter().map(|(p, v)| (p, op(&v))).collect();
        Ok(GridFunction {
            scale: self.scale.clone(),
            domain: self.domain.clone(),
            source: Source::Table(rows),
        })
    }

    /// Restriction to the points of `iv` (which must be a sub-interval of the domain).
    pub fn restrict(&self, iv: TsInterval<S>) -> Result<Self> {
        let rows = self
            .scale
            .points_in(&iv)?
            .into_iter()
            .map(|p| {
                let v = self.eval(&p)?;
                Ok((p, v))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(GridFunction {
            scale: self.scale.clone(),
            domain: iv,
            source: Source::Table(rows),
        })
    }

    fn analytic_derivative_at(&self, t: &ScalePoint<S>) -> Result<S> {
        match &self.source {
            Source::Analytic {
                derivative: Some(d), ..
            } => Ok(d(&self.scale.value(t))),
            _ => Err(Error::DensePointWithoutAnalyticDerivative(self.scale.label(t))),
        }
    }

    /// `f^Δ(t)` or `f^∇(t)` at a single point. Scattered points use the
    /// difference quotient with the neighbouring point, which must be in the
    /// domain; dense points use the analytic derivative.
    pub fn derivative_at(&self, t: &ScalePoint<S>, kind: Calculus) -> Result<S> {
        match kind {
            Calculus::Delta => {
                let s = self.scale.sigma(t)?;
                if s == *t {
                    self.analytic_derivative_at(t)
                } else {
                    Ok((self.eval(&s)? - self.eval(t)?) / self.scale.mu(t)?)
                }
            }
            Calculus::Nabla => {
                let r = self.scale.rho(t)?;
                if r == *t {
                    self.analytic_derivative_at(t)
                } else {
                    Ok((self.eval(t)? - self.eval(&r)?) / self.scale.nu(t)?)
                }
            }
        }
    }

    fn derivative(&self, kind: Calculus) -> Result<Self> {
        if !self.scale.is_discrete() {
            return match &self.source {
                Source::Analytic {
                    derivative: Some(d), ..
                } => Self::analytic(self.scale.clone(), self.domain.clone(), d.clone(), None),
                _ => Err(Error::DensePointWithoutAnalyticDerivative(
                    self.scale.label(&self.domain.lower),
                )),
            };
        }
        let pts = self.points()?;
        if pts.len() < 2 {
            return Err(Error::EmptyDerivativeDomain);
        }
        let targets = match kind {
            Calculus::Delta => &pts[..pts.len() - 1],
            Calculus::Nabla => &pts[1..],
        };
        let rows = targets
            .iter()
            .map(|t| Ok((t.clone(), self.derivative_at(t, kind)?)))
            .collect::<Result<Vec<_>>>()?;
        let domain = TsInterval::closed(targets[0].clone(), targets[targets.len() - 1].clone());
        Ok(GridFunction {
            scale: self.scale.clone(),
            domain,
            source: Source::Table(rows),
        })
    }

    /// `f^Δ` on `[a, ρ(b)]`. At right-scattered `t` this is
    /// `(f(σ(t)) - f(t)) / μ(t)`.
    pub fn delta_derivative(&self) -> Result<Self> {
        self.derivative(Calculus::Delta)
    }

    /// `f^∇` on `[σ(a), b]`. At left-scattered `t` this is
    /// `(f(t) - f(ρ(t))) / ν(t)`.
    pub fn nabla_derivative(&self) -> Result<Self> {
        self.derivative(Calculus::Nabla)
    }

    pub fn derivative_of(&self, kind: Calculus) -> Result<Self> {
        self.derivative(kind)
    }

    /// `k`-fold derivative; `k = 0` returns a copy.
    pub fn iterate_derivative(&self, k: usize, kind: Calculus) -> Result<Self> {
        let mut cur = self.clone();
        for i in 0..k {
            cur = cur.derivative(kind).map_err(|e| match e {
                Error::EmptyDerivativeDomain => Error::DomainExhausted(i + 1),
                other => other,
            })?;
        }
        Ok(cur)
    }

    /// Reflection `f*(s) = f(-s)` on the dual scale.
    pub fn dual_function(&self) -> Self {
        let scale = self.scale.dual();
        let domain = self.scale.dual_interval(&self.domain);
        let source = match &self.source {
            Source::Table(rows) => Source::Table(
                rows.iter()
                    .rev()
                    .map(|(p, v)| (self.scale.dual_point(p), v.clone()))
                    .collect(),
            ),
            Source::Analytic { f, derivative } => {
                let f = f.clone();
                let fd: Evaluator<S> = Arc::new(move |s: &S| f(&-s.clone()));
                let dd = derivative.clone().map(|d| {
                    let e: Evaluator<S> = Arc::new(move |s: &S| -d(&-s.clone()));
                    e
                });
                Source::Analytic { f: fd, derivative: dd }
            }
        };
        GridFunction { scale, domain, source }
    }
}

/// Consecutive points of a discrete domain must be linked by the jump
/// operators for the recurrences in `delta_integrate`/`nabla_integrate`.
fn check_linked<S: Scalar>(scale: &TimeScale<S>, pts: &[ScalePoint<S>]) -> Result<()> {
    for w in pts.windows(2) {
        if scale.sigma(&w[0])? != w[1] {
            return Err(Error::DensePointWithoutAnalyticDerivative(scale.label(&w[0])));
        }
    }
    Ok(())
}

/// The function `f` with `f(anchor) = f0` and `f^Δ = rate`, defined on the
/// rate's points plus `σ` of the last one.
pub fn delta_integrate<S: Scalar>(rate: &GridFunction<S>, anchor: &ScalePoint<S>, f0: S) -> Result<GridFunction<S>> {
    let scale = rate.scale();
    if !scale.is_discrete() {
        return Err(Error::UnsupportedOnContinuousScale);
    }
    let samples = rate.samples()?;
    if samples.is_empty() {
        return Err(Error::EmptyDerivativeDomain);
    }
    let mut pts: Vec<ScalePoint<S>> = samples.iter().map(|(p, _)| p.clone()).collect();
    let last = pts[pts.len() - 1].clone();
    let next = scale.sigma(&last)?;
    if next == last {
        return Err(Error::DensePointWithoutAnalyticDerivative(scale.label(&last)));
    }
    pts.push(next);
    check_linked(scale, &pts)?;
    let start = pts
        .iter()
        .position(|p| p == anchor)
        .ok_or_else(|| Error::PointOutsideDomain(scale.label(anchor)))?;

    let mut values = vec![S::zero(); pts.len()];
    values[start] = f0;
    for i in start..samples.len() {
        let mu = scale.mu(&pts[i])?;
        values[i + 1] = values[i].clone() + mu * samples[i].1.clone();
    }
    for i in (0..start).rev() {
        let mu = scale.mu(&pts[i])?;
        values[i] = values[i + 1].clone() - mu * samples[i].1.clone();
    }
    let domain = TsInterval::closed(pts[0].clone(), pts[pts.len() - 1].clone());
    GridFunction::from_rows(scale.clone(), domain, pts.into_iter().zip(values).collect())
}

/// The function `f` with `f(anchor) = f0` and `f^∇ = rate`, defined on `ρ` of
/// the rate's first point plus the rate's points.
pub fn nabla_integrate<S: Scalar>(rate: &GridFunction<S>, anchor: &ScalePoint<S>, f0: S) -> Result<GridFunction<S>> {
    let scale = rate.scale();
    if !scale.is_discrete() {
        return Err(Error::UnsupportedOnContinuousScale);
    }
    let samples = rate.samples()?;
    if samples.is_empty() {
        return Err(Error::EmptyDerivativeDomain);
    }
    let first = samples[0].0.clone();
    let prev = scale.rho(&first)?;
    if prev == first {
        return Err(Error::DensePointWithoutAnalyticDerivative(scale.label(&first)));
    }
    let mut pts = vec![prev];
    pts.extend(samples.iter().map(|(p, _)| p.clone()));
    check_linked(scale, &pts)?;
    let start = pts
        .iter()
        .position(|p| p == anchor)
        .ok_or_else(|| Error::PointOutsideDomain(scale.label(anchor)))?;

    // samples[i] is the rate at pts[i + 1]
    let mut values = vec![S::zero(); pts.len()];
    values[start] = f0;
    for i in start + 1..pts.len() {
        let nu = scale.nu(&pts[i])?;
        values[i] = values[i - 1].clone() + nu * samples[i - 1].1.clone();
    }
    for i in (0..start).rev() {
        let nu = scale.nu(&pts[i + 1])?;
        values[i] = values[i + 1].clone() - nu * samples[i].1.clone();
    }
    let domain = TsInterval::closed(pts[0].clone(), pts[pts.len() - 1].clone());
    GridFunction::from_rows(scale.clone(), domain, pts.into_iter().zip(values).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Monotonicity {
    StrictlyIncreasing,
    StrictlyDecreasing,
    NonDecreasing,
    NonIncreasing,
    Neither,
    Vacuous,
}

/// One step between consecutive points.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Step<S> {
    pub from: ScalePoint<S>,
    pub to: ScalePoint<S>,
    pub from_value: S,
    pub to_value: S,
}

/// Evidence for [`Monotonicity::Neither`]: a step up and a step down, each
/// larger than the tolerance.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct NeitherWitness<S> {
    pub rising: Step<S>,
    pub falling: Step<S>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct MonotonicityVerdict<S> {
    pub kind: Monotonicity,
    pub witness: Option<NeitherWitness<S>>,
    pub tol: S,
    /// Smallest and largest consecutive difference; `None` when vacuous.
    pub min_step: Option<S>,
    pub max_step: Option<S>,
    pub points: usize,
}

impl<S: Scalar> MonotonicityVerdict<S> {
    pub fn strictly_increasing(&self) -> bool {
        self.min_step.as_ref().map_or(true, |d| *d > self.tol)
    }

    pub fn strictly_decreasing(&self) -> bool {
        self.max_step.as_ref().map_or(true, |d| *d < -self.tol.clone())
    }

    pub fn non_decreasing(&self) -> bool {
        self.min_step.as_ref().map_or(true, |d| *d >= -self.tol.clone())
    }

    pub fn non_increasing(&self) -> bool {
        self.max_step.as_ref().map_or(true, |d| *d <= self.tol)
    }

    /// Whether the sampled values have the property named by `want`.
    pub fn satisfies(&self, want: Monotonicity) -> bool {
        match want {
            Monotonicity::StrictlyIncreasing => self.strictly_increasing(),
            Monotonicity::StrictlyDecreasing => self.strictly_decreasing(),
            Monotonicity::NonDecreasing => self.non_decreasing(),
            Monotonicity::NonIncreasing => self.non_increasing(),
            Monotonicity::Neither => self.kind == Monotonicity::Neither,
            Monotonicity::Vacuous => self.kind == Monotonicity::Vacuous,
        }
    }
}

/// Classify a sequence of values at ascending points. Steps larger than `tol`
/// count as strict moves; steps within `tol` only satisfy the non-strict kinds.
pub fn classify_sequence<S: Scalar>(points: &[ScalePoint<S>], values: &[S], tol: S) -> MonotonicityVerdict<S> {
    debug_assert_eq!(points.len(), values.len());
    if values.len() < 2 {
        return MonotonicityVerdict {
            kind: Monotonicity::Vacuous,
            witness: None,
            tol,
            min_step: None,
            max_step: None,
            points: values.len(),
        };
    }
    let step = |i: usize| Step {
        from: points[i].clone(),
        to: points[i + 1].clone(),
        from_value: values[i].clone(),
        to_value: values[i + 1].clone(),
    };
    let neg_tol = -tol.clone();
    let mut min_step: Option<S> = None;
    let mut max_step: Option<S> = None;
    let mut first_rise = None;
    let mut first_fall = None;
    for i in 0..values.len() - 1 {
        let d = values[i + 1].clone() - values[i].clone();
        if first_rise.is_none() && d > tol {
            first_rise = Some(i);
        }
        if first_fall.is_none() && d < neg_tol {
            first_fall = Some(i);
        }
        min_step = Some(match min_step {
            Some(m) => S::min_of(m, d.clone()),
            None => d.clone(),
        });
        max_step = Some(match max_step {
            Some(m) => S::max_of(m, d),
            None => d,
        });
    }
    let min = min_step.clone().unwrap();
    let max = max_step.clone().unwrap();
    let kind = if min > tol {
        Monotonicity::StrictlyIncreasing
    } else if max < neg_tol {
        Monotonicity::StrictlyDecreasing
    } else if min >= neg_tol {
        Monotonicity::NonDecreasing
    } else if max <= tol {
        Monotonicity::NonIncreasing
    } else {
        Monotonicity::Neither
    };
    let witness = match (kind, first_rise, first_fall) {
        (Monotonicity::Neither, Some(r), Some(f)) => Some(NeitherWitness {
            rising: step(r),
            falling: step(f),
        }),
        _ => None,
    };
    MonotonicityVerdict {
        kind,
        witness,
        tol,
        min_step,
        max_step,
        points: values.len(),
    }
}

/// Monotonicity of `f` over the scale points of `iv`.
pub fn classify_monotonicity<S: Scalar>(f: &GridFunction<S>, iv: &TsInterval<S>, tol: S) -> Result<MonotonicityVerdict<S>> {
    let points = f.scale().points_in(iv)?;
    let values = points.iter().map(|p| f.eval(p)).collect::<Result<Vec<_>>>()?;
    Ok(classify_sequence(&points, &values, tol))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct MvtWitnesses<S> {
    pub c1: ScalePoint<S>,
    pub c2: ScalePoint<S>,
    pub lower_ratio: S,
    pub middle_ratio: S,
    pub upper_ratio: S,
}

/// Points `c1, c2 ∈ [a, x[` with
/// `F^Δ(c1)/G^Δ(c1) <= (F(x)-F(a))/(G(x)-G(a)) <= F^Δ(c2)/G^Δ(c2)`,
/// found as the argmin/argmax of the derivative ratio over `[a, x[`.
pub fn cauchy_mvt_witnesses<S: Scalar>(
    big_f: &GridFunction<S>,
    big_g: &GridFunction<S>,
    a: &ScalePoint<S>,
    x: &ScalePoint<S>,
) -> Result<MvtWitnesses<S>> {
    let scale = big_f.scale();
    if !scale.is_discrete() {
        return Err(Error::UnsupportedOnContinuousScale);
    }
    if big_g.scale() != scale {
        return Err(Error::ScaleMismatch);
    }
    if scale.cmp_points(x, a) != Ordering::Greater {
        return Err(Error::DegenerateInterval(format!(
            "need a < x, got a = {}, x = {}",
            scale.label(a),
            scale.label(x)
        )));
    }
    let iv = TsInterval::new(a.clone(), x.clone(), false, true);
    let mut best: Option<(ScalePoint<S>, S)> = None;
    let mut worst: Option<(ScalePoint<S>, S)> = None;
    let mut sign: Option<bool> = None;
    for t in scale.points_in(&iv)? {
        let s = scale.sigma(&t)?;
        if s == t {
            return Err(Error::DensePointWithoutAnalyticDerivative(scale.label(&t)));
        }
        let mu = scale.mu(&t)?;
        let fd = (big_f.eval(&s)? - big_f.eval(&t)?) / mu.clone();
        let gd = (big_g.eval(&s)? - big_g.eval(&t)?) / mu;
        if gd.is_zero() {
            return Err(Error::SignConditionViolated);
        }
        let positive = gd > S::zero();
        if *sign.get_or_insert(positive) != positive {
            return Err(Error::SignConditionViolated);
        }
        let r = fd / gd;
        if worst.as_ref().map_or(true, |(_, w)| r < *w) {
            worst = Some((t.clone(), r.clone()));
        }
        if best.as_ref().map_or(true, |(_, b)| r > *b) {
            best = Some((t, r));
        }
    }
    let (c1, lower_ratio) = worst.ok_or_else(|| Error::DegenerateInterval("[a, x[ is empty".into()))?;
    let (c2, upper_ratio) = best.unwrap();
    let middle_ratio = (big_f.eval(x)? - big_f.eval(a)?) / (big_g.eval(x)? - big_g.eval(a)?);
    Ok(MvtWitnesses {
        c1,
        c2,
        lower_ratio,
        middle_ratio,
        upper_ratio,
    })
}

/// Functions read from a `t,f[,g]` CSV table.
#[derive(Clone, Debug)]
pub struct CsvFunctions<S: Scalar> {
    pub f: GridFunction<S>,
    pub g: Option<GridFunction<S>>,
}

/// Read a `t,f[,g]` table whose rows list consecutive points of `scale`.
/// Lattice and finite-set points must match exactly; a q-scale `t` is matched
/// to the nearest exponent, within a relative `1e-12`.
pub fn read_csv<S: Scalar, R: Read>(scale: &TimeScale<S>, reader: R) -> Result<CsvFunctions<S>> {
    if !scale.is_discrete() {
        return Err(Error::UnsupportedOnContinuousScale);
    }
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let has_g = match headers.iter().map(String::as_str).collect::<Vec<_>>().as_slice() {
        ["t", "f"] => false,
        ["t", "f", "g"] => true,
        _ => return Err(Error::Csv(format!("expected header `t,f[,g]`, got `{}`", headers.join(",")))),
    };
    let num = |s: &str, line: usize| -> Result<S> {
        let v: f64 = s
            .parse()
            .map_err(|_| Error::Csv(format!("line {line}: `{s}` is not a number")))?;
        if !v.is_finite() {
            return Err(Error::Csv(format!("line {line}: `{s}` is not finite")));
        }
        Ok(S::from_f64(v))
    };
    let mut points = Vec::new();
    let mut fs = Vec::new();
    let mut gs = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let t = num(&rec[0], line)?;
        let p = scale
            .locate_with_tolerance(&t, 1e-12)
            .map_err(|_| Error::Csv(format!("line {line}: t = {} is not a point of `{scale}`", &rec[0])))?;
        points.push(p);
        fs.push(num(&rec[1], line)?);
        if has_g {
            gs.push(num(&rec[2], line)?);
        }
    }
    if points.is_empty() {
        return Err(Error::Csv("no data rows".into()));
    }
    let domain = TsInterval::closed(points[0].clone(), points[points.len() - 1].clone());
    let expected = scale
        .points_in(&domain)
        .map_err(|_| Error::Csv("rows must be in ascending order".into()))?;
    if expected != points {
        return Err(Error::Csv(
            "rows must list every scale point between the first and last row, ascending".into(),
        ));
    }
    let f = GridFunction::from_values(scale.clone(), domain.clone(), fs)?;
    let g = if has_g {
        Some(GridFunction::from_values(scale.clone(), domain, gs)?)
    } else {
        None
    };
    Ok(CsvFunctions { f, g })
}

/// [`read_csv`] on the finite scale formed by the table's own `t` column.
pub fn read_csv_own_scale<S: Scalar, R: Read>(mut reader: R) -> Result<CsvFunctions<S>> {
    let mut text = String::new();
    reader
        .read_to_string(&mut text)
        .map_err(|e| Error::Csv(e.to_string()))?;
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let mut ts = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let t: f64 = rec[0]
            .parse()
            .map_err(|_| Error::Csv(format!("line {}: `{}` is not a number", i + 2, &rec[0])))?;
        ts.push(S::from_f64(t));
    }
    let scale = TimeScale::finite(ts).map_err(|e| Error::Csv(format!("t column: {e}")))?;
    read_csv(&scale, text.as_bytes())
}

/// Render `f` (and optionally `g` on the same points) as a `t,f[,g]` table.
pub fn write_csv<S: Scalar>(f: &GridFunction<S>, g: Option<&GridFunction<S>>) -> Result<String> {
    let mut out = String::from(if g.is_some() { "t,f,g\n" } else { "t,f\n" });
    for (p, v) in f.samples()? {
        let t = f.scale().value(&p).to_f64();
        match g {
            Some(g) => out.push_str(&format!("{t},{},{}\n", v.to_f64(), g.eval(&p)?.to_f64())),
            None => out.push_str(&format!("{t},{}\n", v.to_f64())),
        }
    }
    Ok(out)
}
