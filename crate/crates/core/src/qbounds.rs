//! Lower and upper bounds for `e_q^x` on `[q^-1 a, b]` with `a, b` powers of `q`.
//!
//! With `T(x) = Σ_{k<n} e_q^a/[k]! (x - a)^k_q` and `gap(x) = e_q^x - T(x)`,
//!
//! ```text
//! L(x) = T(x) + (x - a)^n_q / (q^-1 a - a)^n_q * gap(q^-1 a)
//! U(x) = T(x) + (x - a)^n_q / (b - a)^n_q      * gap(b)
//! ```
//!
//! and `L(x) <= e_q^x <= U(x)` on the q-lattice points of `[q^-1 a, b]`. The
//! proof runs the nabla l'Hôpital rule down the chain of q-derivatives of
//! `gap` and `(x - a)^n_q`; [`verify_derivative_chain`] replays it.

use num_rational::BigRational;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gridfn::{classify_sequence, GridFunction, Monotonicity, MonotonicityVerdict};
use crate::lhopital::{verify_nabla_rule, EndpointValue, Outcome};
use crate::qcalc::{check_radius, q_exponential, q_factorial, q_poly, QContext};
use crate::scalar::{Scalar, GUARD_DIGITS};
use crate::scale::{ScalePoint, TimeScale, TsInterval};

/// `a = q^a_exp`, `b = q^b_exp`, order `n`.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct BoundProblem<S> {
    ctx: QContext<S>,
    a_exp: i32,
    b_exp: i32,
    n: usize,
}

impl<S: Scalar> BoundProblem<S> {
    pub fn new(ctx: QContext<S>, a_exp: i32, b_exp: i32, n: i64) -> Result<Self> {
        if n < 1 {
            return Err(Error::InvalidProblem(format!("order n must be at least 1, got {n}")));
        }
        if a_exp.checked_sub(1).map_or(true, |l| l < b_exp) {
            return Err(Error::InvalidProblem(format!(
                "need q^-1 a <= b, i.e. a_exp - 1 >= b_exp, got a_exp = {a_exp}, b_exp = {b_exp}"
            )));
        }
        let b = ctx.q().powi(b_exp);
        check_radius(&ctx, &b)?;
        Ok(BoundProblem {
            ctx,
            a_exp,
            b_exp,
            n: n as usize,
        })
    }

    pub fn ctx(&self) -> &QContext<S> {
        &self.ctx
    }

    pub fn a_exp(&self) -> i32 {
        self.a_exp
    }

    pub fn b_exp(&self) -> i32 {
        self.b_exp
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn a(&self) -> S {
        self.ctx.q().powi(self.a_exp)
    }

    pub fn b(&self) -> S {
        self.ctx.q().powi(self.b_exp)
    }

    /// `q^-1 a`, the left end of the bound interval.
    pub fn left(&self) -> S {
        self.ctx.q().powi(self.a_exp - 1)
    }

    /// Exponents of the lattice points of `[q^-1 a, b]`, ascending in value.
    pub fn lattice_exponents(&self) -> Vec<i32> {
        (self.b_exp..self.a_exp).rev().collect()
    }
}

/// Cached pieces shared by every evaluation of one problem.
struct Bounds<'a, S> {
    p: &'a BoundProblem<S>,
    a: S,
    /// `e_q^a / [k]!` for `k < n`.
    coeffs: Vec<S>,
    left_scale: S,
    right_scale: S,
    terms_used: usize,
}

impl<'a, S: Scalar> Bounds<'a, S> {
    fn new(p: &'a BoundProblem<S>) -> Result<Self> {
        let a = p.a();
        let ea = q_exponential(&p.ctx, &a)?;
        let mut coeffs = Vec::with_capacity(p.n);
        for k in 0..p.n {
            coeffs.push(ea.value.clone() / q_factorial(&p.ctx, k as i64)?);
        }
        let mut me = Bounds {
            p,
            a,
            coeffs,
            left_scale: S::zero(),
            right_scale: S::zero(),
            terms_used: ea.terms_used,
        };
        let n = p.n as i64;
        let left = p.left();
        let b = p.b();
        me.left_scale = me.gap(&left)? / q_poly(&p.ctx, &left, &me.a, n)?;
        me.right_scale = me.gap(&b)? / q_poly(&p.ctx, &b, &me.a, n)?;
        Ok(me)
    }

    fn taylor(&self, x: &S) -> Result<S> {
        let mut acc = S::zero();
        for (k, c) in self.coeffs.iter().enumerate() {
            acc = acc + c.clone() * q_poly(&self.p.ctx, x, &self.a, k as i64)?;
        }
        Ok(acc)
    }

    fn exp(&mut self, x: &S) -> Result<S> {
        let r = q_exponential(&self.p.ctx, x)?;
        self.terms_used = self.terms_used.max(r.terms_used);
        Ok(r.value)
    }

    fn gap(&mut self, x: &S) -> Result<S> {
        Ok(self.exp(x)? - self.taylor(x)?)
    }

    fn lower(&self, x: &S) -> Result<S> {
        Ok(self.taylor(x)? + q_poly(&self.p.ctx, x, &self.a, self.p.n as i64)? * self.left_scale.clone())
    }

    fn upper(&self, x: &S) -> Result<S> {
        Ok(self.taylor(x)? + q_poly(&self.p.ctx, x, &self.a, self.p.n as i64)? * self.right_scale.clone())
    }
}

/// `gap(x) = e_q^x - Σ_{k<n} e_q^a/[k]! (x - a)^k_q`.
pub fn taylor_gap<S: Scalar>(p: &BoundProblem<S>, x: &S) -> Result<S> {
    Bounds::new(p)?.gap(x)
}

/// The lower bound `L(x)`, equal to `e_q^x` at `x = q^-1 a`.
pub fn lower_bound<S: Scalar>(p: &BoundProblem<S>, x: &S) -> Result<S> {
    Bounds::new(p)?.lower(x)
}

/// The upper bound `U(x)`, equal to `e_q^x` at `x = b`.
pub fn upper_bound<S: Scalar>(p: &BoundProblem<S>, x: &S) -> Result<S> {
    Bounds::new(p)?.upper(x)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct BoundRow<S> {
    pub x: S,
    /// `Some(k)` when `x = q^k`; off-lattice rows do not count toward `all_passed`.
    pub exponent: Option<i32>,
    pub on_scale: bool,
    pub lower: S,
    pub exact: S,
    pub upper: S,
    pub lower_margin: S,
    pub upper_margin: S,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct BoundReport<S> {
    pub q: S,
    pub a_exp: i32,
    pub b_exp: i32,
    pub n: usize,
    pub tol: S,
    pub tail_tol: S,
    pub rows: Vec<BoundRow<S>>,
    pub all_passed: bool,
    /// `|L(q^-1 a) - e_q^(q^-1 a)|`.
    pub endpoint_equality_lower: S,
    /// `|U(b) - e_q^b|`.
    pub endpoint_equality_upper: S,
    pub terms_used_max: usize,
}

/// `L`, `e_q` and `U` at every lattice point of `[q^-1 a, b]`.
pub fn sandwich_report<S: Scalar>(p: &BoundProblem<S>, tol: S) -> Result<BoundReport<S>> {
    sandwich_report_with(p, tol, &[])
}

/// [`sandwich_report`] plus extra points inside `[q^-1 a, b]`. Extra points
/// off the lattice are reported but flagged and not counted.
pub fn sandwich_report_with<S: Scalar>(p: &BoundProblem<S>, tol: S, extra: &[S]) -> Result<BoundReport<S>> {
    let mut bounds = Bounds::new(p)?;
    let (left, b) = (p.left(), p.b());
    let mut xs: Vec<(S, Option<i32>)> = p
        .lattice_exponents()
        .into_iter()
        .map(|k| (p.ctx.q().powi(k), Some(k)))
        .collect();
    for x in extra {
        if *x < left || *x > b {
            return Err(Error::InvalidProblem(format!(
                "x = {} lies outside [q^-1 a, b]",
                x.to_f64()
            )));
        }
        if !xs.iter().any(|(y, _)| y == x) {
            xs.push((x.clone(), None));
        }
    }
    xs.sort_by(|u, v| u.0.partial_cmp(&v.0).expect("ordered"));

    let mut rows = Vec::with_capacity(xs.len());
    for (x, exponent) in xs {
        let exact = bounds.exp(&x)?;
        let lower = bounds.lower(&x)?;
        let upper = bounds.upper(&x)?;
        rows.push(BoundRow {
            lower_margin: exact.clone() - lower.clone(),
            upper_margin: upper.clone() - exact.clone(),
            x,
            exponent,
            on_scale: exponent.is_some(),
            lower,
            exact,
            upper,
        });
    }
    let neg_tol = -tol.clone();
    let all_passed = rows
        .iter()
        .filter(|r| r.on_scale)
        .all(|r| r.lower_margin >= neg_tol && r.upper_margin >= neg_tol);
    let endpoint_equality_lower = (bounds.lower(&left)? - bounds.exp(&left)?).abs();
    let endpoint_equality_upper = (bounds.upper(&b)? - bounds.exp(&b)?).abs();
    Ok(BoundReport {
        q: p.ctx.q().clone(),
        a_exp: p.a_exp,
        b_exp: p.b_exp,
        n: p.n,
        tol,
        tail_tol: p.ctx.tail_tol().clone(),
        rows,
        all_passed,
        endpoint_equality_lower,
        endpoint_equality_upper,
        terms_used_max: bounds.terms_used,
    })
}

/// The report as `x,lower,exact,upper,lower_margin,upper_margin` rows.
pub fn report_csv<S: Scalar>(report: &BoundReport<S>, digits: usize) -> String {
    let mut out = String::from("x,lower,exact,upper,lower_margin,upper_margin\n");
    for r in &report.rows {
        let cells = [&r.x, &r.lower, &r.exact, &r.upper, &r.lower_margin, &r.upper_margin];
        let line: Vec<String> = cells.iter().map(|v| v.render(digits)).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct VanishingRow<S> {
    pub k: usize,
    /// `gap^{∇k}(a)`.
    pub f_value: S,
    /// `((x - a)^n_q)^{∇k}` at `a`, exact.
    pub g_value: String,
    pub ok: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct RatioRow<S> {
    pub k: usize,
    /// `f^{∇k}/g^{∇k}` on `[σ(a), b]`.
    pub verdict: MonotonicityVerdict<S>,
    pub strictly_increasing: bool,
    /// Outcome of the nabla rule taking ratio `k + 1` to ratio `k`.
    pub rule_outcome: Option<Outcome>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ChainReport<S> {
    pub q: S,
    pub a_exp: i32,
    pub b_exp: i32,
    pub n: usize,
    pub tol: S,
    pub vanishing: Vec<VanishingRow<S>>,
    /// `g^{∇n}` at every point equals `[n]!` in exact arithmetic.
    pub g_top_exact: bool,
    pub q_factorial: String,
    /// Ratios for `k = n, n-1, ..., 0`.
    pub ratios: Vec<RatioRow<S>>,
    /// `max |f^{∇n}/g^{∇n} - e_q^x/[n]!|` over `[σ(a), b]`.
    pub top_ratio_error: S,
    /// `f(σ(a))/g(σ(a)) <= f(x)/g(x) <= f(b)/g(b)` on `[σ(a), b]`.
    pub sandwich_ok: bool,
    pub all_passed: bool,
}

/// Replay the proof on the q-scale `{q^b_exp, ..., q^(a_exp + n)}` with
/// `f = gap` and `g = (x - a)^n_q`:
///
/// 1. `f^{∇k}(a)` and `g^{∇k}(a)` vanish for `k < n`;
/// 2. `g^{∇n} = [n]!` exactly;
/// 3. each ratio `f^{∇k}/g^{∇k}`, `k = n..0`, is strictly increasing on `[σ(a), b]`;
/// 4. `f(σ(a))/g(σ(a)) <= f(x)/g(x) <= f(b)/g(b)` on `[σ(a), b]`.
pub fn verify_derivative_chain<S: Scalar>(p: &BoundProblem<S>, tol: S) -> Result<ChainReport<S>> {
    let n = p.n;
    let q = p.ctx.q().clone();
    let a_pt = ScalePoint::QPow(p.a_exp);
    let b_pt = ScalePoint::QPow(p.b_exp);
    let ts = TimeScale::qscale(q.clone(), p.b_exp, p.a_exp + n as i32, false)?;
    let sigma_a = ts.sigma(&a_pt)?;

    // Nested differences amplify series truncation that varies from point to
    // point, so the chain sums every series down to working precision.
    let digits = p.ctx.digits() + GUARD_DIGITS;
    let fine = BoundProblem {
        ctx: QContext::new(q.clone(), p.ctx.digits(), S::from_f64(10f64.powi(-(digits as i32))))?,
        ..p.clone()
    };
    let mut bounds = Bounds::new(&fine)?;
    let a = p.a();
    let full = ts.all_points()?;
    let mut f_vals = Vec::with_capacity(full.len());
    for pt in &full {
        f_vals.push(bounds.gap(&ts.value(pt))?);
    }
    let whole = TsInterval::closed(full[0].clone(), full[full.len() - 1].clone());
    let f0 = GridFunction::from_values(ts.clone(), whole.clone(), f_vals)?;
    let g0 = GridFunction::tabulate(ts.clone(), whole.clone(), |x| {
        q_poly(&p.ctx, x, &a, n as i64).expect("n >= 0")
    })?;

    // exact g-chain from the exact value of q
    let qr = q.to_rational();
    let ctx_r = QContext::new(qr.clone(), p.ctx.digits(), BigRational::from_f64(1e-30))?;
    let ts_r = TimeScale::qscale(qr.clone(), p.b_exp, p.a_exp + n as i32, false)?;
    let ar = Scalar::powi(&qr, p.a_exp);
    let whole_r = TsInterval::closed(ScalePoint::QPow(p.a_exp + n as i32), ScalePoint::QPow(p.b_exp));
    let a_pt_r: ScalePoint<BigRational> = ScalePoint::QPow(p.a_exp);
    let g_exact = GridFunction::tabulate(ts_r, whole_r, |x| q_poly(&ctx_r, x, &ar, n as i64).expect("n >= 0"))?;

    let mut fs = vec![f0];
    let mut gs = vec![g0];
    let mut gr = vec![g_exact];
    for _ in 0..n {
        let (fl, gl, rl) = (fs.last().unwrap(), gs.last().unwrap(), gr.last().unwrap());
        let next = (fl.nabla_derivative()?, gl.nabla_derivative()?, rl.nabla_derivative()?);
        fs.push(next.0);
        gs.push(next.1);
        gr.push(next.2);
    }

    let mut vanishing = Vec::with_capacity(n);
    for k in 0..n {
        let f_value = fs[k].eval(&a_pt)?;
        let g_value = gr[k].eval(&a_pt_r)?;
        let ok = f_value.abs() <= tol && num_traits::Zero::is_zero(&g_value);
        vanishing.push(VanishingRow {
            k,
            f_value,
            g_value: g_value.to_string(),
            ok,
        });
    }
    let fact = q_factorial(&ctx_r, n as i64)?;
    let g_top_exact = gr[n].values()?.iter().all(|v| *v == fact);

    let upper_iv = TsInterval::closed(sigma_a.clone(), b_pt.clone());
    let upper_pts = ts.points_in(&upper_iv)?;
    let ratio_values = |k: usize| -> Result<Vec<S>> {
        upper_pts
            .iter()
            .map(|pt| Ok(fs[k].eval(pt)? / gs[k].eval(pt)?))
            .collect()
    };

    let rule_iv = TsInterval::closed(a_pt.clone(), b_pt.clone());
    let mut ratios = Vec::with_capacity(n + 1);
    for k in (0..=n).rev() {
        let values = ratio_values(k)?;
        let verdict = classify_sequence(&upper_pts, &values, tol.clone());
        let rule_outcome = if k < n {
            let f_k = fs[k].restrict(rule_iv.clone())?;
            let g_k = gs[k].restrict(rule_iv.clone())?;
            let fe = EndpointValue::Supplied(f_k.eval(&a_pt)?);
            let ge = EndpointValue::Supplied(g_k.eval(&a_pt)?);
            let r = verify_nabla_rule(&f_k, &g_k, crate::lhopital::Endpoint::Left, &fe, &ge, true, tol.clone())?;
            Some(r.outcome)
        } else {
            None
        };
        ratios.push(RatioRow {
            k,
            strictly_increasing: verdict.kind == Monotonicity::StrictlyIncreasing,
            verdict,
            rule_outcome,
        });
    }

    let fact_s = q_factorial(&p.ctx, n as i64)?;
    let mut top_ratio_error = S::zero();
    for (pt, r) in upper_pts.iter().zip(ratio_values(n)?) {
        let e = bounds.exp(&ts.value(pt))? / fact_s.clone();
        top_ratio_error = S::max_of(top_ratio_error, (r - e).abs());
    }

    let base = ratio_values(0)?;
    let (lo, hi) = (base[0].clone(), base[base.len() - 1].clone());
    let sandwich_ok = base
        .iter()
        .all(|v| *v >= lo.clone() - tol.clone() && *v <= hi.clone() + tol.clone());

    let all_passed = vanishing.iter().all(|v| v.ok)
        && g_top_exact
        && ratios
            .iter()
            .all(|r| r.strictly_increasing && r.rule_outcome.map_or(true, |o| matches!(o, Outcome::Satisfied | Outcome::Vacuous)))
        && top_ratio_error <= tol
        && sandwich_ok;
    Ok(ChainReport {
        q,
        a_exp: p.a_exp,
        b_exp: p.b_exp,
        n,
        tol,
        vanishing,
        g_top_exact,
        q_factorial: fact.to_string(),
        ratios,
        top_ratio_error,
        sandwich_ok,
        all_passed,
    })
}
