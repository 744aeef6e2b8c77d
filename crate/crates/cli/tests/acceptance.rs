//! Acceptance checks 1 to 9. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

use std::io::Write;
use std::process::Command;
use std::time::Instant;

use num_bigint::BigInt;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tscale::gridfn::{cauchy_mvt_witnesses, Calculus, GridFunction, Monotonicity};
use tscale::lhopital::suite::{run_property_suite, SuiteConfig};
use tscale::lhopital::{verify_delta_rule, Endpoint, EndpointValue};
use tscale::qbounds::{sandwich_report, verify_derivative_chain, BoundProblem};
use tscale::qcalc::{q_derivative, q_exponential, q_int, q_poly, QContext};
use tscale::scalar::relative_error;
use tscale::{Scalar, ScalePoint, TimeScale, TsInterval, F128};

type Check = Result<String, String>;

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn f128(s: &str) -> F128 {
    F128::parse(s).unwrap()
}

fn ac1() -> Check {
    let cfg = SuiteConfig {
        trials: 1000,
        seed: 2024,
        calculus: Calculus::Delta,
        ..SuiteConfig::default()
    };
    let start = Instant::now();
    let r = run_property_suite(&cfg).map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    ensure(r.trials == 1000, "trial count")?;
    ensure(r.violations == 0, format!("{} violations", r.violations))?;
    ensure(r.errors == 0 && r.premises_failed == 0, format!("{} errors, {} premise failures", r.errors, r.premises_failed))?;
    ensure(r.satisfied + r.vacuous == 1000, "tally")?;
    ensure(r.identity_failures == 0 && r.mvt_failures == 0, "identity or MVT failure")?;
    ensure(secs <= 10.0, format!("took {secs:.2} s"))?;
    Ok(format!(
        "1000 delta trials, 0 violations, {} satisfied, {} vacuous, {secs:.2} s",
        r.satisfied, r.vacuous
    ))
}

fn ac2() -> Check {
    let cfg = SuiteConfig {
        trials: 500,
        seed: 2025,
        calculus: Calculus::Nabla,
        ..SuiteConfig::default()
    };
    let r = run_property_suite(&cfg).map_err(|e| e.to_string())?;
    ensure(r.violations == 0 && r.errors == 0, format!("{} violations, {} errors", r.violations, r.errors))?;
    ensure(r.duality_checked == 500, format!("{} dual checks", r.duality_checked))?;
    ensure(r.duality_mismatches == 0, format!("{} dual mismatches", r.duality_mismatches))?;
    ensure(r.max_dual_h_difference <= 1e-12, format!("H difference {}", r.max_dual_h_difference))?;
    Ok(format!(
        "500 nabla trials, direct and dual agree, max H difference {:.1e}",
        r.max_dual_h_difference
    ))
}

fn ac3() -> Check {
    let mut verdicts = Vec::new();
    for (h, count) in [(0.1, 11), (0.01, 101), (0.001, 1001)] {
        let ts = TimeScale::lattice(0.0, h, count).map_err(|e| e.to_string())?;
        let f = GridFunction::on_scale(&ts, |x: &f64| x * x * x + x).map_err(|e| e.to_string())?;
        let g = GridFunction::on_scale(&ts, |x: &f64| *x).map_err(|e| e.to_string())?;
        let zero = EndpointValue::Supplied(0.0);
        let r = verify_delta_rule(&f, &g, Endpoint::Left, &zero, &zero, true, 1e-10).map_err(|e| e.to_string())?;
        ensure(
            r.premises.ratio_verdict.kind == Monotonicity::StrictlyIncreasing,
            format!("h = {h}: premise ratio {:?}", r.premises.ratio_verdict.kind),
        )?;
        ensure(r.theorem_satisfied, format!("h = {h}: {:?}", r.outcome))?;
        verdicts.push(r.conclusion.kind);
    }
    ensure(
        verdicts.iter().all(|v| *v == Monotonicity::StrictlyIncreasing),
        format!("verdicts {verdicts:?}"),
    )?;
    Ok("H strictly increasing for h = 0.1, 0.01, 0.001".into())
}

fn ac4() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for case in 0..200 {
        let m = rng.gen_range(2..=12usize);
        let mut t = vec![rat(rng.gen_range(-8..8), 4)];
        let mut big_f = vec![rat(rng.gen_range(-20..20), 3)];
        let mut big_g = vec![rat(rng.gen_range(-20..20), 3)];
        for _ in 1..m {
            t.push(t.last().unwrap() + rat(rng.gen_range(1..=8), 4));
            big_f.push(rat(rng.gen_range(-40..40), 7));
            big_g.push(big_g.last().unwrap() + rat(rng.gen_range(1..=30), 5));
        }
        let ts = TimeScale::finite(t.clone()).map_err(|e| e.to_string())?;
        let whole = TsInterval::closed(ScalePoint::Index(0), ScalePoint::Index(m - 1));
        let fg = GridFunction::from_values(ts.clone(), whole.clone(), big_f.clone()).map_err(|e| e.to_string())?;
        let gg = GridFunction::from_values(ts, whole, big_g.clone()).map_err(|e| e.to_string())?;
        let i = rng.gen_range(0..m - 1);
        let j = rng.gen_range(i + 1..m);
        let w = cauchy_mvt_witnesses(&fg, &gg, &ScalePoint::Index(i), &ScalePoint::Index(j))
            .map_err(|e| format!("case {case}: {e}"))?;

        // exhaustive scan over [t_i, t_j[
        let ratios: Vec<BigRational> = (i..j)
            .map(|k| (&big_f[k + 1] - &big_f[k]) / (&big_g[k + 1] - &big_g[k]))
            .collect();
        let lo = ratios.iter().min().unwrap();
        let hi = ratios.iter().max().unwrap();
        let mid = (&big_f[j] - &big_f[i]) / (&big_g[j] - &big_g[i]);
        ensure(&w.lower_ratio == lo && &w.upper_ratio == hi, format!("case {case}: extremes differ"))?;
        ensure(w.middle_ratio == mid, format!("case {case}: middle ratio"))?;
        ensure(lo <= &mid && &mid <= hi, format!("case {case}: sandwich fails"))?;
        let at = |p: &ScalePoint<BigRational>| match p {
            ScalePoint::Index(k) => ratios[*k - i].clone(),
            _ => unreachable!(),
        };
        ensure(at(&w.c1) == *lo && at(&w.c2) == *hi, format!("case {case}: witness points"))?;
    }
    Ok("200 exact cases, witnesses found and sandwich holds".into())
}

fn ac5() -> Check {
    let tail = f128("1e-36");
    let mut worst_poly = 0.0f64;
    for q in ["0.3", "0.5", "0.9"] {
        let ctx = QContext::new(f128(q), 25, tail.clone()).map_err(|e| e.to_string())?;
        let a = f128("0.5");
        for n in 1..=6i64 {
            for i in 0..20 {
                // offset keeps the grid off the roots q^j a, where only absolute error is meaningful
                let x = f128("0.0623") + F128::from_i64(i) * f128("0.1");
                let lhs = q_derivative(&ctx, &|y: &F128| q_poly(&ctx, y, &a, n).unwrap(), &x, None).map_err(|e| e.to_string())?;
                let rhs = q_int(&ctx, n as i32) * q_poly(&ctx, &x, &a, n - 1).map_err(|e| e.to_string())?;
                let err = relative_error(&lhs, &rhs).to_f64();
                worst_poly = worst_poly.max(err);
                ensure(err <= 1e-12, format!("q = {q}, n = {n}, x = {}: {err:e}", x.to_f64()))?;
            }
        }
        let e = |y: &F128| q_exponential(&ctx, y).unwrap().value;
        for k in 0..12 {
            let x = ctx.q().powi(k);
            let d = q_derivative(&ctx, &e, &x, None).map_err(|e| e.to_string())?;
            let diff = (d - e(&x)).abs().to_f64();
            ensure(diff <= 1e-9, format!("q = {q}: D_q e at q^{k} off by {diff:e}"))?;
        }
        ensure(q_exponential(&ctx, &F128::zero()).unwrap().value == F128::one(), "e_q(0) != 1")?;

        // nabla derivative on the q-scale against D_q
        let ts = TimeScale::qscale(ctx.q().clone(), 0, 15, false).map_err(|e| e.to_string())?;
        let fun = GridFunction::on_scale(&ts, |y: &F128| e(y)).map_err(|e| e.to_string())?;
        let nd = fun.nabla_derivative().map_err(|e| e.to_string())?;
        for (p, v) in nd.samples().map_err(|e| e.to_string())? {
            let x = ts.value(&p);
            let dq = q_derivative(&ctx, &e, &x, None).map_err(|e| e.to_string())?;
            let err = relative_error(&v, &dq).to_f64();
            ensure(err <= 1e-14, format!("q = {q}: nabla vs D_q at {}: {err:e}", x.to_f64()))?;
        }
    }
    Ok(format!("q-poly rule worst relative error {worst_poly:.1e}; D_q e = e; e(0) = 1; nabla = D_q"))
}

fn grid() -> Vec<(&'static str, i64)> {
    ["0.3", "0.5", "0.9"]
        .into_iter()
        .flat_map(|q| (1..=4).map(move |n| (q, n)))
        .collect()
}

fn problem(q: &str, n: i64) -> Result<BoundProblem<F128>, String> {
    let ctx = QContext::new(f128(q), 25, f128("1e-14")).map_err(|e| e.to_string())?;
    BoundProblem::new(ctx, 4, 0, n).map_err(|e| e.to_string())
}

fn ac6() -> Check {
    let start = Instant::now();
    let tol = f128("1e-10");
    let mut min_margin = f64::INFINITY;
    for (q, n) in grid() {
        let r = sandwich_report(&problem(q, n)?, tol.clone()).map_err(|e| e.to_string())?;
        ensure(r.all_passed, format!("q = {q}, n = {n}: sandwich fails"))?;
        ensure(r.rows.len() == 4, "expected four lattice points")?;
        for row in &r.rows {
            min_margin = min_margin.min(row.lower_margin.to_f64()).min(row.upper_margin.to_f64());
        }
        ensure(
            r.endpoint_equality_lower <= tol && r.endpoint_equality_upper <= tol,
            format!("q = {q}, n = {n}: endpoint residuals"),
        )?;
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(secs <= 5.0, format!("took {secs:.2} s"))?;
    Ok(format!("12 problems, smallest margin {min_margin:.1e}, {secs:.2} s"))
}

fn ac7() -> Check {
    for (q, n) in grid() {
        let r = verify_derivative_chain(&problem(q, n)?, f128("1e-10")).map_err(|e| e.to_string())?;
        ensure(r.vanishing.iter().all(|v| v.ok), format!("q = {q}, n = {n}: derivatives at a do not vanish"))?;
        ensure(r.g_top_exact, format!("q = {q}, n = {n}: top g derivative is not [n]!"))?;
        ensure(r.ratios.len() == n as usize + 1, "ratio count")?;
        ensure(
            r.ratios.iter().all(|row| row.strictly_increasing),
            format!("q = {q}, n = {n}: a ratio is not strictly increasing"),
        )?;
        ensure(r.all_passed, format!("q = {q}, n = {n}: chain report fails"))?;
    }
    Ok("12 chains: vanishing, exact [n]!, all ratios strictly increasing".into())
}

fn ac8() -> Check {
    let scales = [
        TimeScale::qscale(rat(1, 2), -5, 10, false),
        TimeScale::qscale(rat(9, 10), 0, 30, false),
        TimeScale::lattice(rat(0, 1), rat(1, 1), 50),
    ];
    for ts in scales {
        let ts = ts.map_err(|e| e.to_string())?;
        let sq = GridFunction::on_scale(&ts, |t: &BigRational| t * t).map_err(|e| e.to_string())?;
        let d = sq.delta_derivative().map_err(|e| e.to_string())?;
        for (p, v) in d.samples().map_err(|e| e.to_string())? {
            let s = ts.sigma(&p).map_err(|e| e.to_string())?;
            if s == p {
                continue;
            }
            ensure(v == ts.value(&p) + ts.value(&s), format!("(t^2)^Δ at {} on `{ts}`", ts.label(&p)))?;
        }
    }
    let ts = TimeScale::qscale(0.5, -20_000, 20_000, false).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..10_000 {
        let p = ScalePoint::QPow(rng.gen_range(-19_999..20_000));
        let back = ts.rho(&ts.sigma(&p).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        let forth = ts.sigma(&ts.rho(&p).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        ensure(back == p && forth == p, format!("round trip at {}", ts.label(&p)))?;
    }
    Ok("(t^2)^Δ = t + σ(t) exactly; 10^4 σ/ρ round trips exact".into())
}

fn ac9() -> Check {
    let bin = env!("CARGO_BIN_EXE_tscale");
    let args = ["verify", "lhopital", "--trials", "100", "--seed", "7", "--format", "json"];
    let run = || Command::new(bin).args(args).env_remove("TS_PRECISION").env_remove("TS_TOL").output();
    let first = run().map_err(|e| e.to_string())?;
    let second = run().map_err(|e| e.to_string())?;
    ensure(first.status.code() == Some(0), format!("suite exit {:?}", first.status.code()))?;
    ensure(!first.stdout.is_empty() && first.stdout == second.stdout, "outputs differ")?;

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let good = dir.path().join("good.csv");
    let bad = dir.path().join("tampered.csv");
    let rows = [(0.0, 0.0, 0.0), (0.5, 1.0, 1.0), (1.5, 1.5, 2.0), (2.0, 3.0, 2.5), (3.0, 3.2, 4.0)];
    let write = |path: &std::path::Path, tamper: bool| -> std::io::Result<()> {
        let mut file = std::fs::File::create(path)?;
        writeln!(file, "t,f,g")?;
        for (i, (t, f, g)) in rows.iter().enumerate() {
            let g = if tamper && i == 2 { 0.2 } else { *g };
            writeln!(file, "{t},{f},{g}")?;
        }
        Ok(())
    };
    write(&good, false).map_err(|e| e.to_string())?;
    write(&bad, true).map_err(|e| e.to_string())?;
    let mvt = |path: &std::path::Path| {
        Command::new(bin)
            .args(["mvt", "--csv", path.to_str().unwrap(), "--x", "3"])
            .output()
            .map(|o| o.status.code())
    };
    let ok = mvt(&good).map_err(|e| e.to_string())?;
    let tampered = mvt(&bad).map_err(|e| e.to_string())?;
    ensure(ok == Some(0), format!("valid table exit {ok:?}"))?;
    ensure(tampered == Some(2), format!("tampered table exit {tampered:?}"))?;
    Ok("identical JSON over two runs; valid table exit 0, tampered table exit 2".into())
}

fn main() {
    let checks: [(&str, fn() -> Check); 9] = [
        ("AC1 delta-rule suite", ac1),
        ("AC2 nabla-rule suite", ac2),
        ("AC3 continuous-limit sanity", ac3),
        ("AC4 mean value witnesses", ac4),
        ("AC5 q-calculus identities", ac5),
        ("AC6 bounds sandwich", ac6),
        ("AC7 derivative chain", ac7),
        ("AC8 exactness", ac8),
        ("AC9 CLI determinism and exit codes", ac9),
    ];
    let mut failed = 0;
    for (name, check) in checks {
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL {name}: {why}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} of 9 criteria failed");
        std::process::exit(1);
    }
    println!("all 9 criteria passed");
}
