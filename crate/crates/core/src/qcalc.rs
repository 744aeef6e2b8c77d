//! q-calculus for `0 < q < 1`: q-numbers, q-factorials, q-shifted
//! polynomials, the q-derivative and the q-exponential series
//! `e_q^x = Σ x^k / [k]!`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::{Real, Scalar};

/// Largest number of series terms before giving up on a tail certificate.
pub const MAX_TERMS: usize = 1_000_000;

/// Relative guard applied to the radius of convergence.
pub const RADIUS_GUARD: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct QContext<S> {
    q: S,
    digits: usize,
    tail_tol: S,
}

impl<S: Scalar> QContext<S> {
    pub fn new(q: S, digits: usize, tail_tol: S) -> Result<Self> {
        if !(q > S::zero() && q < S::one()) {
            return Err(Error::InvalidContext(format!("q must lie in (0, 1), got {}", q.to_f64())));
        }
        if !(tail_tol > S::zero()) {
            return Err(Error::InvalidContext("tail tolerance must be positive".into()));
        }
        Ok(QContext { q, digits, tail_tol })
    }

    pub fn q(&self) -> &S {
        &self.q
    }

    /// Requested significant digits for rendered output.
    pub fn digits(&self) -> usize {
        self.digits
    }

    pub fn tail_tol(&self) -> &S {
        &self.tail_tol
    }

    /// `1 / (1 - q)`, the radius of convergence of the q-exponential series.
    pub fn radius(&self) -> S {
        S::one() / (S::one() - self.q.clone())
    }
}

/// `[α] = (q^α - 1) / (q - 1)` for real `α`.
pub fn q_number<S: Real>(ctx: &QContext<S>, alpha: &S) -> S {
    (ctx.q.powf(alpha) - S::one()) / (ctx.q.clone() - S::one())
}

/// `[k]` for integer `k`, computed with integer powers only.
pub fn q_int<S: Scalar>(ctx: &QContext<S>, k: i32) -> S {
    (ctx.q.powi(k) - S::one()) / (ctx.q.clone() - S::one())
}

/// `[n]! = [n][n-1]...[1]`, with `[0]! = 1`.
pub fn q_factorial<S: Scalar>(ctx: &QContext<S>, n: i64) -> Result<S> {
    if n < 0 {
        return Err(Error::NegativeN(n));
    }
    // [k] = 1 + q + ... + q^(k-1), accumulated without cancellation
    let mut acc = S::one();
    let mut bracket = S::zero();
    let mut qk = S::one();
    for _ in 0..n {
        bracket = bracket + qk.clone();
        qk = qk * ctx.q.clone();
        acc = acc * bracket.clone();
    }
    Ok(acc)
}

/// `(x - a)^n_q = (x - a)(x - qa)...(x - q^(n-1) a)`, with the empty product 1.
pub fn q_poly<S: Scalar>(ctx: &QContext<S>, x: &S, a: &S, n: i64) -> Result<S> {
    if n < 0 {
        return Err(Error::NegativeN(n));
    }
    let mut acc = S::one();
    let mut qa = a.clone();
    for _ in 0..n {
        acc = acc * (x.clone() - qa.clone());
        qa = qa * ctx.q.clone();
    }
    Ok(acc)
}

/// `D_q f(x) = (f(qx) - f(x)) / ((q - 1) x)`; at `x = 0` the caller supplies `f'(0)`.
pub fn q_derivative<S: Scalar>(ctx: &QContext<S>, f: &dyn Fn(&S) -> S, x: &S, f0prime: Option<S>) -> Result<S> {
    if x.is_zero() {
        return f0prime.ok_or(Error::MissingDerivativeAtZero);
    }
    let qx = ctx.q.clone() * x.clone();
    Ok((f(&qx) - f(x)) / ((ctx.q.clone() - S::one()) * x.clone()))
}

/// `D_q^k f(x)`, expanded over the points `q^j x`, `j = 0..=k`. At `x = 0` the
/// caller supplies the value of the `k`-th derivative.
pub fn q_derivative_iter<S: Scalar>(
    ctx: &QContext<S>,
    f: &dyn Fn(&S) -> S,
    x: &S,
    k: usize,
    at_zero: Option<S>,
) -> Result<S> {
    if k == 0 {
        return Ok(f(x));
    }
    if x.is_zero() {
        return at_zero.ok_or(Error::MissingDerivativeAtZero);
    }
    let qm1 = ctx.q.clone() - S::one();
    let mut nodes = Vec::with_capacity(k + 1);
    let mut p = x.clone();
    for _ in 0..=k {
        nodes.push(p.clone());
        p = p * ctx.q.clone();
    }
    // level m holds D_q^m f at nodes[0..=k-m]
    let mut level: Vec<S> = nodes.iter().map(f).collect();
    for _ in 0..k {
        level = (0..level.len() - 1)
            .map(|j| (level[j + 1].clone() - level[j].clone()) / (qm1.clone() * nodes[j].clone()))
            .collect();
    }
    Ok(level.swap_remove(0))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct QSeriesResult<S> {
    pub value: S,
    pub terms_used: usize,
    /// Certified bound on the absolute value of the omitted tail.
    pub tail_bound: S,
}

/// Check `|x| <= (1 - RADIUS_GUARD) / (1 - q)`.
pub fn check_radius<S: Scalar>(ctx: &QContext<S>, x: &S) -> Result<()> {
    let radius = ctx.radius();
    let limit = radius.clone() * (S::one() - S::from_f64(RADIUS_GUARD));
    if x.abs() > limit {
        return Err(Error::OutsideRadiusOfConvergence {
            x: x.to_f64(),
            radius: radius.to_f64(),
        });
    }
    Ok(())
}

/// `e_q^x` by partial summation. After term `t_k` the ratios of later terms
/// are at most `ρ = |x| / [k+1] < 1` (the brackets increase), so the tail is
/// at most `|t_k| ρ / (1 - ρ)`; summation stops once that is `<= tail_tol`.
pub fn q_exponential<S: Scalar>(ctx: &QContext<S>, x: &S) -> Result<QSeriesResult<S>> {
    check_radius(ctx, x)?;
    let ax = x.abs();
    let mut term = S::one();
    let mut sum = S::one();
    // [k+1] and q^(k+1) for the current k
    let mut bracket = S::one();
    let mut qk = ctx.q.clone();
    for k in 0..MAX_TERMS {
        let ratio = ax.clone() / bracket.clone();
        if ratio < S::one() {
            let tail = term.abs() * ratio.clone() / (S::one() - ratio);
            if tail <= ctx.tail_tol {
                return Ok(QSeriesResult {
                    value: sum,
                    terms_used: k + 1,
                    tail_bound: tail,
                });
            }
        }
        term = term * x.clone() / bracket.clone();
        sum = sum + term.clone();
        bracket = bracket + qk.clone();
        qk = qk * ctx.q.clone();
    }
    Err(Error::TailNotCertified(MAX_TERMS))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{exact_rational, F128};
    use num_rational::BigRational;
    use proptest::prelude::*;

    fn ctx(q: f64) -> QContext<f64> {
        QContext::new(q, 15, 1e-15).unwrap()
    }

    #[test]
    fn context_validation() {
        assert!(QContext::new(1.0, 10, 1e-12).is_err());
        assert!(QContext::new(0.0, 10, 1e-12).is_err());
        assert!(QContext::new(0.5, 10, 0.0).is_err());
        assert_eq!(ctx(0.5).radius(), 2.0);
        assert!((ctx(0.9).radius() - 10.0).abs() < 1e-13);
    }

    #[test]
    fn q_number_examples() {
        let c = ctx(0.5);
        assert_eq!(q_number(&c, &0.0), 0.0);
        assert_eq!(q_number(&c, &1.0), 1.0);
        assert_eq!(q_number(&c, &3.0), 1.75);
        assert_eq!(q_int(&c, 3), 1.75);
        assert_eq!(q_int(&c, 0), 0.0);
    }

    #[test]
    fn q_number_tends_to_alpha() {
        for alpha in [2.0, 3.5] {
            let errs: Vec<f64> = [0.9, 0.99, 0.999]
                .iter()
                .map(|q| (q_number(&ctx(*q), &alpha) - alpha).abs())
                .collect();
            assert!(errs[0] > errs[1] && errs[1] > errs[2], "{errs:?}");
        }
    }

    #[test]
    fn factorial_examples() {
        let c = ctx(0.5);
        assert_eq!(q_factorial(&c, 0).unwrap(), 1.0);
        assert_eq!(q_factorial(&c, 2).unwrap(), 1.5);
        assert_eq!(q_factorial(&c, 3).unwrap(), 2.625);
        assert_eq!(q_factorial(&c, -1).unwrap_err(), Error::NegativeN(-1));
    }

    #[test]
    fn q_poly_examples() {
        let c = ctx(0.5);
        assert_eq!(q_poly(&c, &3.0, &1.0, 0).unwrap(), 1.0);
        assert_eq!(q_poly(&c, &0.7, &0.7, 3).unwrap(), 0.0);
        assert_eq!(q_poly(&c, &1.0, &0.5, 2).unwrap(), 0.375);
        assert!(q_poly(&c, &1.0, &0.5, -2).is_err());
    }

    #[test]
    fn q_derivative_examples() {
        let c = ctx(0.5);
        assert_eq!(q_derivative(&c, &|x: &f64| x * x, &1.0, None).unwrap(), 1.5);
        assert_eq!(q_derivative(&c, &|_: &f64| 4.0, &0.3, None).unwrap(), 0.0);
        for x in [-2.0, 0.1, 7.0] {
            assert!((q_derivative(&c, &|x: &f64| *x, &x, None).unwrap() - 1.0).abs() < 1e-15);
        }
        assert_eq!(
            q_derivative(&c, &|x: &f64| *x, &0.0, None).unwrap_err(),
            Error::MissingDerivativeAtZero
        );
        assert_eq!(q_derivative(&c, &|x: &f64| *x, &0.0, Some(1.0)).unwrap(), 1.0);
    }

    #[test]
    fn iterated_q_derivative_examples() {
        let q = 0.3;
        let c = ctx(q);
        let sq = |x: &f64| x * x;
        assert_eq!(q_derivative_iter(&c, &sq, &0.5, 0, None).unwrap(), 0.25);
        for x in [0.2, 1.0, -3.0] {
            let v = q_derivative_iter(&c, &sq, &x, 2, None).unwrap();
            assert!((v - (1.0 + q)).abs() < 1e-12, "{v}");
        }
        // exact in rationals: D_q^n (x-a)^n_q = [n]!
        let qr = exact_rational(q);
        let cr = QContext::new(qr.clone(), 30, exact_rational(1e-30)).unwrap();
        let a = exact_rational(0.25);
        for n in 1..6 {
            let f = |x: &BigRational| q_poly(&cr, x, &a, n).unwrap();
            let v = q_derivative_iter(&cr, &f, &exact_rational(0.7), n as usize, None).unwrap();
            assert_eq!(v, q_factorial(&cr, n).unwrap());
        }
        assert!(q_derivative_iter(&c, &sq, &0.0, 1, None).is_err());
    }

    #[test]
    fn exponential_examples() {
        let c = ctx(0.5);
        let r = q_exponential(&c, &0.0).unwrap();
        assert_eq!((r.value, r.terms_used), (1.0, 1));
        assert!(matches!(
            q_exponential(&c, &2.0),
            Err(Error::OutsideRadiusOfConvergence { .. })
        ));
        assert!(q_exponential(&c, &-2.0).is_err());
        let r = q_exponential(&c, &1.0).unwrap();
        assert!(r.tail_bound <= 1e-15);
        // partial sums 1, 2, 2.6667, 3.0476 ...
        let mut partial = 0.0;
        let mut prev = 0.0;
        for k in 0..4 {
            partial += 1.0 / q_factorial(&c, k).unwrap();
            assert!(partial > prev);
            prev = partial;
        }
        assert!((partial - 3.047619047619).abs() < 1e-11);
        assert!(r.value > partial);
    }

    #[test]
    fn exponential_near_radius_and_negative_arguments() {
        let c = QContext::new(0.9, 15, 1e-14).unwrap();
        let r = q_exponential(&c, &9.9).unwrap();
        assert!(r.value.is_finite() && r.value > 1.0);
        let r = q_exponential(&c, &-9.9).unwrap();
        assert!(r.value.is_finite());
        let edge = 10.0 * (1.0 - 1e-10);
        assert!(q_exponential(&c, &edge).is_err());
    }

    #[test]
    fn exponential_is_fixed_by_q_derivative() {
        for q in [0.3, 0.5, 0.9] {
            let c = QContext::new(q, 15, 1e-16).unwrap();
            let e = |x: &f64| q_exponential(&c, x).unwrap().value;
            for k in 0..12 {
                let x = q.powi(k);
                let d = q_derivative(&c, &e, &x, None).unwrap();
                assert!((d - e(&x)).abs() <= 1e-9 * e(&x), "q={q} k={k}");
            }
        }
    }

    #[test]
    fn high_precision_backend() {
        let c = QContext::new(F128::parse("0.5").unwrap(), 30, F128::parse("1e-36").unwrap()).unwrap();
        let r = q_exponential(&c, &F128::one()).unwrap();
        let lo = q_exponential(&ctx(0.5), &1.0).unwrap().value;
        assert!((r.value.to_f64() - lo).abs() < 1e-14);
        assert!(r.tail_bound <= F128::parse("1e-36").unwrap());
    }

    proptest! {
        #[test]
        fn q_poly_derivative_rule(q in 0.05f64..0.95, a in 0.01f64..2.0, x in -3.0f64..3.0, n in 1i64..7) {
            prop_assume!(x != 0.0);
            let c = QContext::new(exact_rational(q), 20, exact_rational(1e-20)).unwrap();
            let (a, x) = (exact_rational(a), exact_rational(x));
            let f = |t: &BigRational| q_poly(&c, t, &a, n).unwrap();
            let lhs = q_derivative(&c, &f, &x, None).unwrap();
            let rhs = q_int(&c, n as i32) * q_poly(&c, &x, &a, n - 1).unwrap();
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn exponential_grows_with_positive_argument(q in 0.05f64..0.95, u in 0.0f64..0.99, v in 0.0f64..0.99) {
            let c = ctx(q);
            let r = c.radius();
            let (lo, hi) = if u < v { (u, v) } else { (v, u) };
            prop_assume!(hi - lo > 1e-6);
            let el = q_exponential(&c, &(lo * r)).unwrap().value;
            let eh = q_exponential(&c, &(hi * r)).unwrap().value;
            prop_assert!(el >= 1.0 && eh > el);
        }
    }
}
