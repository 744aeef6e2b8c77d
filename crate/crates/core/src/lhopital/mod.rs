//! Monotone l'Hôpital rules on time scales.
//!
//! For `f, g` on `[a, b]` with `g^Δ` of one sign and `f^Δ/g^Δ` monotone on
//! `]a, ρ(b)[`, the endpoint-anchored ratio
//! `H(x) = (f(x) - f_end) / (g(x) - g_end)` is monotone in the same direction.
//! The nabla rule is the mirror statement on `]σ(a), b[`.
//!
//! The functions here check the premises, build `H`, classify it, and report
//! whether the conclusion holds. [`generate`] builds premise-satisfying pairs
//! and [`suite`] runs the randomized verification.

pub mod generate;
pub mod suite;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gridfn::{classify_monotonicity, classify_sequence, Calculus, GridFunction, Monotonicity, MonotonicityVerdict};
use crate::scalar::Scalar;
use crate::scale::{Family, ScalePoint, TsInterval};

/// Samples walked toward a dense endpoint before giving up on a limit.
pub const LIMIT_SAMPLE_CAP: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Endpoint {
    Left,
    Right,
}

impl Endpoint {
    pub fn flipped(self) -> Endpoint {
        match self {
            Endpoint::Left => Endpoint::Right,
            Endpoint::Right => Endpoint::Left,
        }
    }
}

/// How the value of `f` or `g` at the anchoring endpoint is obtained.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum EndpointValue<S> {
    Supplied(S),
    /// Walk toward a dense endpoint until successive samples differ by less
    /// than `tail_tol`.
    LimitFromSamples { tail_tol: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum DerivSign {
    AllPositive,
    AllNegative,
    Mixed,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct PremiseReport<S> {
    pub calculus: Calculus,
    pub g_deriv_sign: DerivSign,
    /// Verdict on `f^Δ/g^Δ` (or `f^∇/g^∇`) over `interval`.
    pub ratio_verdict: MonotonicityVerdict<S>,
    /// The endpoint values were resolved and `g(x) - g_end` keeps one sign.
    pub endpoint_ok: bool,
    pub interval: TsInterval<S>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Outcome {
    Satisfied,
    Violated,
    PremisesFailed,
    /// Fewer than two points in the conclusion interval.
    Vacuous,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct RuleReport<S> {
    pub calculus: Calculus,
    pub endpoint: Endpoint,
    pub strict: bool,
    /// Premises on the interval from [`anchored_interval`].
    pub premises: PremiseReport<S>,
    /// `]a, ρ(b)[` (delta) or `]σ(a), b[` (nabla).
    pub conclusion_interval: TsInterval<S>,
    pub conclusion: MonotonicityVerdict<S>,
    pub outcome: Outcome,
    pub theorem_satisfied: bool,
    /// `H` on the open interval `]a, b[`.
    pub h_samples: Vec<(ScalePoint<S>, S)>,
    /// Points where the sign identity for `H^Δ` (or `H^∇`) was checked, and
    /// how many disagreed.
    pub identity_checked: usize,
    pub identity_failures: usize,
}

/// Direction of a monotone ratio, if the verdict has one under the mode.
fn direction<S: Scalar>(v: &MonotonicityVerdict<S>, strict: bool) -> Option<Monotonicity> {
    if strict {
        if v.strictly_increasing() {
            Some(Monotonicity::StrictlyIncreasing)
        } else if v.strictly_decreasing() {
            Some(Monotonicity::StrictlyDecreasing)
        } else {
            None
        }
    } else if v.non_decreasing() {
        Some(Monotonicity::NonDecreasing)
    } else if v.non_increasing() {
        Some(Monotonicity::NonIncreasing)
    } else {
        None
    }
}

fn endpoints<S: Scalar>(f: &GridFunction<S>) -> Result<(ScalePoint<S>, ScalePoint<S>)> {
    let d = f.domain();
    if d.lower_open || d.upper_open {
        return Err(Error::InvalidInterval("rule functions need a closed domain [a, b]".into()));
    }
    Ok((d.lower.clone(), d.upper.clone()))
}

/// `]a, ρ(b)[` for the delta rule, `]σ(a), b[` for the nabla rule.
pub fn premise_interval<S: Scalar>(f: &GridFunction<S>, kind: Calculus) -> Result<TsInterval<S>> {
    let (a, b) = endpoints(f)?;
    let ts = f.scale();
    Ok(match kind {
        Calculus::Delta => TsInterval::open(a, ts.rho(&b)?),
        Calculus::Nabla => TsInterval::open(ts.sigma(&a)?, b),
    })
}

fn check_pair<S: Scalar>(f: &GridFunction<S>, g: &GridFunction<S>) -> Result<()> {
    if f.scale() != g.scale() || f.domain() != g.domain() {
        return Err(Error::ScaleMismatch);
    }
    if !f.scale().is_discrete() {
        return Err(Error::UnsupportedOnContinuousScale);
    }
    Ok(())
}

/// The premise interval closed on the anchoring side. On a discrete scale
/// `H(x)` averages the ratio over the points between the anchor and `x`, so
/// the ratio at the scattered neighbour of the anchor matters too. Dense
/// anchors add nothing.
pub fn anchored_interval<S: Scalar>(f: &GridFunction<S>, kind: Calculus, end: Endpoint) -> Result<TsInterval<S>> {
    let (a, b) = endpoints(f)?;
    let ts = f.scale();
    let mut iv = premise_interval(f, kind)?;
    let scattered = match end {
        Endpoint::Left => ts.sigma(&a)? != a,
        Endpoint::Right => ts.rho(&b)? != b,
    };
    if scattered {
        match end {
            Endpoint::Left => iv.lower_open = false,
            Endpoint::Right => iv.upper_open = false,
        }
    }
    Ok(iv)
}

fn premises_on<S: Scalar>(
    f: &GridFunction<S>,
    g: &GridFunction<S>,
    kind: Calculus,
    interval: TsInterval<S>,
    tol: S,
) -> Result<PremiseReport<S>> {
    let pts = f.scale().points_in(&interval)?;
    let mut pos = 0;
    let mut neg = 0;
    let mut ratio_pts = Vec::with_capacity(pts.len());
    let mut ratios = Vec::with_capacity(pts.len());
    for t in &pts {
        let gd = g.derivative_at(t, kind)?;
        if gd > tol {
            pos += 1;
        } else if gd < -tol.clone() {
            neg += 1;
        }
        if !gd.is_zero() {
            ratios.push(f.derivative_at(t, kind)? / gd);
            ratio_pts.push(t.clone());
        }
    }
    let g_deriv_sign = if pos == pts.len() {
        DerivSign::AllPositive
    } else if neg == pts.len() {
        DerivSign::AllNegative
    } else {
        DerivSign::Mixed
    };
    Ok(PremiseReport {
        calculus: kind,
        g_deriv_sign,
        ratio_verdict: classify_sequence(&ratio_pts, &ratios, tol),
        endpoint_ok: true,
        interval,
    })
}

fn check_size<S: Scalar>(f: &GridFunction<S>, g: &GridFunction<S>) -> Result<()> {
    check_pair(f, g)?;
    let count = f.points()?.len();
    if count < 3 {
        return Err(Error::ScaleTooSmall(count, 3));
    }
    Ok(())
}

/// Sign of `g^Δ` (`g^∇`) and the monotonicity of `f^Δ/g^Δ` (`f^∇/g^∇`) on
/// the premise interval. An empty interval counts as all-positive.
pub fn check_premises<S: Scalar>(f: &GridFunction<S>, g: &GridFunction<S>, kind: Calculus, tol: S) -> Result<PremiseReport<S>> {
    check_size(f, g)?;
    premises_on(f, g, kind, premise_interval(f, kind)?, tol)
}

/// [`check_premises`] on [`anchored_interval`].
pub fn check_anchored_premises<S: Scalar>(
    f: &GridFunction<S>,
    g: &GridFunction<S>,
    kind: Calculus,
    end: Endpoint,
    tol: S,
) -> Result<PremiseReport<S>> {
    check_size(f, g)?;
    premises_on(f, g, kind, anchored_interval(f, kind, end)?, tol)
}

pub fn check_delta_premises<S: Scalar>(f: &GridFunction<S>, g: &GridFunction<S>, tol: S) -> Result<PremiseReport<S>> {
    check_premises(f, g, Calculus::Delta, tol)
}

pub fn check_nabla_premises<S: Scalar>(f: &GridFunction<S>, g: &GridFunction<S>, tol: S) -> Result<PremiseReport<S>> {
    check_premises(f, g, Calculus::Nabla, tol)
}

/// Resolve the value of `f` at the chosen endpoint of its domain.
pub fn resolve_endpoint<S: Scalar>(f: &GridFunction<S>, end: Endpoint, value: &EndpointValue<S>) -> Result<S> {
    let tail_tol = match value {
        EndpointValue::Supplied(v) => return Ok(v.clone()),
        EndpointValue::LimitFromSamples { tail_tol } => S::from_f64(*tail_tol),
    };
    let d = f.domain();
    let p = match end {
        Endpoint::Left => &d.lower,
        Endpoint::Right => &d.upper,
    };
    let ts = f.scale();
    let samples: Box<dyn Fn(usize) -> ScalePoint<S>> = match (ts.family(), p, end) {
        (
            Family::QScale {
                k_max,
                zero: true,
                reflected,
                ..
            },
            ScalePoint::Zero,
            _,
        ) if (end == Endpoint::Left) != *reflected => {
            let k0 = *k_max;
            Box::new(move |j| ScalePoint::QPow(k0.saturating_add(j as i32)))
        }
        (Family::Continuous { .. }, ScalePoint::Real(x), _) => {
            let other = match end {
                Endpoint::Left => ts.value(&d.upper),
                Endpoint::Right => ts.value(&d.lower),
            };
            let x = x.clone();
            Box::new(move |j| {
                let w = (other.clone() - x.clone()) / S::from_f64(2f64.powi(j as i32 + 1));
                ScalePoint::Real(x.clone() + w)
            })
        }
        _ => return Err(Error::LimitUnavailable(ts.label(p))),
    };
    let mut prev = f.eval(&samples(0))?;
    for j in 1..LIMIT_SAMPLE_CAP {
        let cur = f.eval(&samples(j))?;
        if (cur.clone() - prev).abs() < tail_tol {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(Error::LimitNotConverged(LIMIT_SAMPLE_CAP))
}

fn ratio_on_open<S: Scalar>(f: &GridFunction<S>, g: &GridFunction<S>, f_end: &S, g_end: &S) -> Result<GridFunction<S>> {
    check_pair(f, g)?;
    let (a, b) = endpoints(f)?;
    let iv = TsInterval::open(a, b);
    let ts = f.scale();
    let mut rows = Vec::new();
    for p in ts.points_in(&iv)? {
        let den = g.eval(&p)? - g_end.clone();
        if den.is_zero() {
            return Err(Error::ZeroDenominator(ts.label(&p)));
        }
        rows.push((p.clone(), (f.eval(&p)? - f_end.clone()) / den));
    }
    GridFunction::from_rows(ts.clone(), iv, rows)
}

/// `H(x) = (f(x) - f_end) / (g(x) - g_end)` on `]a, b[`.
pub fn endpoint_ratio<S: Scalar>(
    f: &GridFunction<S>,
    g: &GridFunction<S>,
    end: Endpoint,
    f_end: &EndpointValue<S>,
    g_end: &EndpointValue<S>,
) -> Result<GridFunction<S>> {
    let fe = resolve_endpoint(f, end, f_end)?;
    let ge = resolve_endpoint(g, end, g_end)?;
    ratio_on_open(f, g, &fe, &ge)
}

fn sign<S: Scalar>(x: &S) -> i8 {
    if *x > S::zero() {
        1
    } else if *x < S::zero() {
        -1
    } else {
        0
    }
}

/// Check a monotone l'Hôpital rule on one pair. Premise failures and
/// vacuous intervals are reported as outcomes, not errors.
#[allow(clippy::too_many_arguments)]
pub fn verify_rule<S: Scalar>(
    f: &GridFunction<S>,
    g: &GridFunction<S>,
    kind: Calculus,
    end: Endpoint,
    f_end: &EndpointValue<S>,
    g_end: &EndpointValue<S>,
    strict: bool,
    tol: S,
) -> Result<RuleReport<S>> {
    let mut premises = check_anchored_premises(f, g, kind, end, tol.clone())?;
    let conclusion_interval = premise_interval(f, kind)?;
    let fe = resolve_endpoint(f, end, f_end)?;
    let ge = resolve_endpoint(g, end, g_end)?;
    let h = ratio_on_open(f, g, &fe, &ge)?;
    let ts = f.scale();

    let mut den_signs = Vec::new();
    for p in h.points()? {
        den_signs.push(sign(&(g.eval(&p)? - ge.clone())));
    }
    premises.endpoint_ok = den_signs.windows(2).all(|w| w[0] == w[1]);

    let conclusion = classify_monotonicity(&h, &conclusion_interval, tol.clone())?;

    // H' = g' / (g(next) - g_end) * (f'/g' - H), checked by sign
    let mut identity_checked = 0;
    let mut identity_failures = 0;
    for t in ts.points_in(&conclusion_interval)? {
        let next = match kind {
            Calculus::Delta => ts.sigma(&t)?,
            Calculus::Nabla => ts.rho(&t)?,
        };
        let (Ok(ht), Ok(hn)) = (h.eval(&t), h.eval(&next)) else {
            continue;
        };
        let gd = g.derivative_at(&t, kind)?;
        if gd.is_zero() {
            continue;
        }
        let gap = f.derivative_at(&t, kind)? / gd.clone() - ht.clone();
        let band = tol.clone() * S::max_of(S::one(), ht.abs());
        if gap.abs() <= band {
            continue;
        }
        let h_prime = match kind {
            Calculus::Delta => hn - ht,
            Calculus::Nabla => ht - hn,
        };
        let factor = gd / (g.eval(&next)? - ge.clone());
        identity_checked += 1;
        if sign(&h_prime) != sign(&factor) * sign(&gap) {
            identity_failures += 1;
        }
    }

    let outcome = if conclusion.kind == Monotonicity::Vacuous {
        Outcome::Vacuous
    } else if premises.g_deriv_sign == DerivSign::Mixed || !premises.endpoint_ok {
        Outcome::PremisesFailed
    } else {
        match direction(&premises.ratio_verdict, strict) {
            None => Outcome::PremisesFailed,
            Some(want) if conclusion.satisfies(want) => Outcome::Satisfied,
            Some(_) => Outcome::Violated,
        }
    };
    Ok(RuleReport {
        calculus: kind,
        endpoint: end,
        strict,
        premises,
        conclusion_interval,
        conclusion,
        outcome,
        theorem_satisfied: matches!(outcome, Outcome::Satisfied | Outcome::Vacuous),
        h_samples: h.samples()?,
        identity_checked,
        identity_failures,
    })
}

/// The delta rule: premises and conclusion on `]a, ρ(b)[`.
pub fn verify_delta_rule<S: Scalar>(
    f: &GridFunction<S>,
    g: &GridFunction<S>,
    end: Endpoint,
    f_end: &EndpointValue<S>,
    g_end: &EndpointValue<S>,
    strict: bool,
    tol: S,
) -> Result<RuleReport<S>> {
    verify_rule(f, g, Calculus::Delta, end, f_end, g_end, strict, tol)
}

/// The nabla rule: premises and conclusion on `]σ(a), b[`.
pub fn verify_nabla_rule<S: Scalar>(
    f: &GridFunction<S>,
    g: &GridFunction<S>,
    end: Endpoint,
    f_end: &EndpointValue<S>,
    g_end: &EndpointValue<S>,
    strict: bool,
    tol: S,
) -> Result<RuleReport<S>> {
    verify_rule(f, g, Calculus::Nabla, end, f_end, g_end, strict, tol)
}

/// The nabla rule checked through the delta rule on the reflected pair
/// `f*(s) = f(-s)`, `g*(s) = g(-s)`; the anchoring endpoint changes side.
pub fn verify_nabla_via_dual<S: Scalar>(
    f: &GridFunction<S>,
    g: &GridFunction<S>,
    end: Endpoint,
    f_end: &EndpointValue<S>,
    g_end: &EndpointValue<S>,
    strict: bool,
    tol: S,
) -> Result<RuleReport<S>> {
    verify_delta_rule(
        &f.dual_function(),
        &g.dual_function(),
        end.flipped(),
        f_end,
        g_end,
        strict,
        tol,
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Corollary {
    /// Anchored at `a` with `f(a)`, `g(a)`.
    C1,
    /// Anchored at `b` with `f(b)`, `g(b)`.
    C2,
    /// Both functions vanish at the endpoint, so `H = f/g`.
    C3(Endpoint),
}

/// The delta-rule corollaries for functions defined at the endpoints.
pub fn verify_corollary<S: Scalar>(
    f: &GridFunction<S>,
    g: &GridFunction<S>,
    which: Corollary,
    strict: bool,
    tol: S,
) -> Result<RuleReport<S>> {
    let (a, b) = endpoints(f)?;
    let (end, fe, ge) = match which {
        Corollary::C1 => (Endpoint::Left, f.eval(&a)?, g.eval(&a)?),
        Corollary::C2 => (Endpoint::Right, f.eval(&b)?, g.eval(&b)?),
        Corollary::C3(end) => (end, S::zero(), S::zero()),
    };
    verify_delta_rule(
        f,
        g,
        end,
        &EndpointValue::Supplied(fe),
        &EndpointValue::Supplied(ge),
        strict,
        tol,
    )
}
