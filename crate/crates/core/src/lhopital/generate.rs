//! Random pairs `(f, g)` that satisfy the rule premises by construction.
//!
//! `|g'|` is drawn from `[0.5, 2]`, the ratio `r = f'/g'` is a running sum of
//! increments from `[0.05, 1]` (some set to zero for non-strict profiles), and
//! both functions are recovered by summation from random starting values.
//! Here `'` is `Δ` or `∇` according to the calculus.
//!
//! The ratio is monotone on the closed range `[a, ρ(b)]` (delta) or
//! `[σ(a), b]` (nabla), one point wider than the premise interval on each
//! side. On a discrete scale the rule needs the ratio at those points too.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gridfn::{delta_integrate, nabla_integrate, Calculus, GridFunction};
use crate::scalar::Scalar;
use crate::scale::{TimeScale, TsInterval};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Profile {
    StrictInc,
    StrictDec,
    NonStrictInc,
    NonStrictDec,
}

impl Profile {
    pub const ALL: [Profile; 4] = [Profile::StrictInc, Profile::StrictDec, Profile::NonStrictInc, Profile::NonStrictDec];

    pub fn strict(self) -> bool {
        matches!(self, Profile::StrictInc | Profile::StrictDec)
    }

    pub fn increasing(self) -> bool {
        matches!(self, Profile::StrictInc | Profile::NonStrictInc)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum GSign {
    Pos,
    Neg,
}

/// Smallest scale the generator accepts.
pub const MIN_POINTS: usize = 4;

const PLATEAU_PROBABILITY: f64 = 0.3;

fn build<S: Scalar, R: Rng + ?Sized>(
    ts: &TimeScale<S>,
    rng: &mut R,
    profile: Profile,
    g_sign: GSign,
    calculus: Calculus,
    mixed: bool,
) -> Result<(GridFunction<S>, GridFunction<S>)> {
    if !ts.is_discrete() {
        return Err(Error::UnsupportedOnContinuousScale);
    }
    let pts = ts.all_points()?;
    if pts.len() < MIN_POINTS {
        return Err(Error::ScaleTooSmall(pts.len(), MIN_POINTS));
    }
    let m = pts.len() - 1;
    let rate_pts = match calculus {
        Calculus::Delta => &pts[..m],
        Calculus::Nabla => &pts[1..],
    };
    let domain = TsInterval::closed(rate_pts[0].clone(), rate_pts[m - 1].clone());

    let mut g_rate: Vec<f64> = (0..m)
        .map(|_| {
            let v: f64 = rng.gen_range(0.5..=2.0);
            match g_sign {
                GSign::Pos => v,
                GSign::Neg => -v,
            }
        })
        .collect();
    if mixed {
        // index 0 and m-1 sit just outside the premise interval
        g_rate[1] = -g_rate[1];
    }

    let mut steps: Vec<f64> = (1..m).map(|_| rng.gen_range(0.05..=1.0)).collect();
    if !profile.strict() {
        for s in steps.iter_mut() {
            if rng.gen_bool(PLATEAU_PROBABILITY) {
                *s = 0.0;
            }
        }
        if !steps.iter().any(|s| *s == 0.0) {
            let i = rng.gen_range(0..steps.len());
            steps[i] = 0.0;
        }
    }
    let sign = if profile.increasing() { 1.0 } else { -1.0 };
    let mut ratio = vec![rng.gen_range(-2.0..=2.0)];
    for s in &steps {
        let last = ratio[ratio.len() - 1];
        ratio.push(last + sign * s);
    }

    let g_vals: Vec<S> = g_rate.iter().map(|v| S::from_f64(*v)).collect();
    let f_vals: Vec<S> = g_vals
        .iter()
        .zip(&ratio)
        .map(|(g, r)| g.clone() * S::from_f64(*r))
        .collect();
    let g_rate = GridFunction::from_values(ts.clone(), domain.clone(), g_vals)?;
    let f_rate = GridFunction::from_values(ts.clone(), domain, f_vals)?;
    let g0 = S::from_f64(rng.gen_range(-1.0..=1.0));
    let f0 = S::from_f64(rng.gen_range(-1.0..=1.0));
    let integrate = match calculus {
        Calculus::Delta => delta_integrate::<S>,
        Calculus::Nabla => nabla_integrate::<S>,
    };
    let g = integrate(&g_rate, &pts[0], g0)?;
    let f = integrate(&f_rate, &pts[0], f0)?;
    Ok((f, g))
}

/// A pair on the whole of `ts` whose premises hold for `profile` and `g_sign`.
pub fn generate_test_pair<S: Scalar, R: Rng + ?Sized>(
    ts: &TimeScale<S>,
    rng: &mut R,
    profile: Profile,
    g_sign: GSign,
    calculus: Calculus,
) -> Result<(GridFunction<S>, GridFunction<S>)> {
    build(ts, rng, profile, g_sign, calculus, false)
}

/// Like [`generate_test_pair`] but with the sign of `g'` flipped at the first
/// premise point, so the sign premise fails whenever the premise interval has
/// at least two points.
pub fn generate_mixed_sign_pair<S: Scalar, R: Rng + ?Sized>(
    ts: &TimeScale<S>,
    rng: &mut R,
    profile: Profile,
    calculus: Calculus,
) -> Result<(GridFunction<S>, GridFunction<S>)> {
    build(ts, rng, profile, GSign::Pos, calculus, true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gridfn::Monotonicity;
    use crate::lhopital::{check_premises, DerivSign};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn strict_increasing_positive_for_many_seeds() {
        let ts = TimeScale::finite(vec![0.0, 0.3, 1.0, 1.25, 2.0, 3.5, 4.0]).unwrap();
        for seed in 0..1000 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (f, g) = generate_test_pair(&ts, &mut rng, Profile::StrictInc, GSign::Pos, Calculus::Delta).unwrap();
            let p = check_premises(&f, &g, Calculus::Delta, 1e-10).unwrap();
            assert_eq!(p.g_deriv_sign, DerivSign::AllPositive);
            assert_eq!(p.ratio_verdict.kind, Monotonicity::StrictlyIncreasing);
        }
    }

    #[test]
    fn profiles_and_signs() {
        let ts = TimeScale::lattice(0.0, 0.25, 12).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for calc in [Calculus::Delta, Calculus::Nabla] {
            let (f, g) = generate_test_pair(&ts, &mut rng, Profile::StrictDec, GSign::Neg, calc).unwrap();
            let p = check_premises(&f, &g, calc, 1e-10).unwrap();
            assert_eq!(p.g_deriv_sign, DerivSign::AllNegative);
            assert_eq!(p.ratio_verdict.kind, Monotonicity::StrictlyDecreasing);
            let (f, g) = generate_test_pair(&ts, &mut rng, Profile::NonStrictInc, GSign::Pos, calc).unwrap();
            let p = check_premises(&f, &g, calc, 1e-10).unwrap();
            assert!(p.ratio_verdict.non_decreasing());
            let (f, g) = generate_mixed_sign_pair(&ts, &mut rng, Profile::StrictInc, calc).unwrap();
            assert_eq!(check_premises(&f, &g, calc, 1e-10).unwrap().g_deriv_sign, DerivSign::Mixed);
        }
    }

    #[test]
    fn plateau_gives_non_decreasing_verdict() {
        let ts = TimeScale::lattice(0.0, 1.0, 6).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut saw_plateau = false;
        for _ in 0..50 {
            let (f, g) = generate_test_pair(&ts, &mut rng, Profile::NonStrictInc, GSign::Pos, Calculus::Delta).unwrap();
            let d = f.delta_derivative().unwrap().zip_with(&g.delta_derivative().unwrap(), |a, b| Ok(a / b)).unwrap();
            let r = d.values().unwrap();
            assert!(r.windows(2).all(|w| w[1] >= w[0] - 1e-9));
            let p = check_premises(&f, &g, Calculus::Delta, 1e-10).unwrap();
            if p.ratio_verdict.kind == Monotonicity::NonDecreasing {
                saw_plateau = true;
            }
        }
        assert!(saw_plateau);
    }

    #[test]
    fn small_and_continuous_scales_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let ts = TimeScale::finite(vec![0.0, 1.0, 2.0]).unwrap();
        assert_eq!(
            generate_test_pair(&ts, &mut rng, Profile::StrictInc, GSign::Pos, Calculus::Delta).unwrap_err(),
            Error::ScaleTooSmall(3, 4)
        );
        let c = TimeScale::continuous(0.0, 1.0).unwrap();
        assert!(generate_test_pair(&c, &mut rng, Profile::StrictInc, GSign::Pos, Calculus::Delta).is_err());
    }
}
