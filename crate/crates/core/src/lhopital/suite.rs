//! Randomized verification of the monotone l'Hôpital rules.
//!
//! Trial `i` draws everything from `ChaCha8Rng::seed_from_u64(seed)` on stream
//! `i`, so any trial can be replayed alone and the report does not depend on
//! thread scheduling. Profiles, the sign of `g'` and the anchoring endpoint
//! cycle with the trial index; the scale family is drawn at random.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::generate::{generate_mixed_sign_pair, generate_test_pair, GSign, Profile};
use super::{verify_nabla_via_dual, verify_rule, Endpoint, EndpointValue, Outcome, RuleReport};
use crate::error::{Error, Result};
use crate::gridfn::{cauchy_mvt_witnesses, Calculus, GridFunction, Monotonicity, Step};
use crate::scalar::{Backend, Scalar, F128, F256, F512};
use crate::scale::TimeScale;

/// A family of random scales with a point-count range.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "camelCase", rename_all_fields = "camelCase")]
pub enum FamilySpec {
    /// Points with gaps drawn from `[0.1, 1]`.
    Finite { min_points: usize, max_points: usize },
    /// A lattice with a dyadic step.
    Lattice { min_points: usize, max_points: usize },
    /// Consecutive powers `q^k`.
    QScale { q: f64, min_points: usize, max_points: usize },
}

impl FamilySpec {
    fn range(&self) -> (usize, usize) {
        match self {
            FamilySpec::Finite { min_points, max_points }
            | FamilySpec::Lattice { min_points, max_points }
            | FamilySpec::QScale {
                min_points, max_points, ..
            } => (*min_points, *max_points),
        }
    }

    fn draw<S: Scalar, R: Rng + ?Sized>(&self, rng: &mut R) -> Result<TimeScale<S>> {
        let (lo, hi) = self.range();
        let n = rng.gen_range(lo..=hi);
        match self {
            FamilySpec::Finite { .. } => {
                let mut x = rng.gen_range(-5.0..5.0f64);
                let mut pts = Vec::with_capacity(n);
                for _ in 0..n {
                    pts.push(S::from_f64(x));
                    x += rng.gen_range(0.1..=1.0);
                }
                TimeScale::finite(pts)
            }
            FamilySpec::Lattice { .. } => {
                let origin = rng.gen_range(-40..=40) as f64 / 8.0;
                let step = rng.gen_range(1..=8) as f64 / 8.0;
                TimeScale::lattice(S::from_f64(origin), S::from_f64(step), n)
            }
            FamilySpec::QScale { q, .. } => {
                let k_min = rng.gen_range(-2..=2);
                TimeScale::qscale(S::from_f64(*q), k_min, k_min + n as i32 - 1, false)
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let (lo, hi) = self.range();
        if lo < super::generate::MIN_POINTS || lo > hi {
            return Err(Error::Parse(format!(
                "family point range {lo}..{hi} must satisfy {} <= min <= max",
                super::generate::MIN_POINTS
            )));
        }
        if let FamilySpec::QScale { q, .. } = self {
            if !(*q > 0.0 && *q < 1.0) {
                return Err(Error::Parse(format!("family q = {q} must lie in (0, 1)")));
            }
        }
        Ok(())
    }
}

pub fn default_families() -> Vec<FamilySpec> {
    vec![
        FamilySpec::Finite {
            min_points: 4,
            max_points: 50,
        },
        FamilySpec::Lattice {
            min_points: 4,
            max_points: 50,
        },
        FamilySpec::QScale {
            q: 0.3,
            min_points: 4,
            max_points: 10,
        },
        FamilySpec::QScale {
            q: 0.5,
            min_points: 4,
            max_points: 16,
        },
        FamilySpec::QScale {
            q: 0.9,
            min_points: 4,
            max_points: 40,
        },
    ]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, rename_all = "camelCase", deny_unknown_fields)]
pub struct SuiteConfig {
    pub trials: usize,
    pub seed: u64,
    /// Tolerance band for strictness and premise margins.
    pub tol: f64,
    pub calculus: Calculus,
    pub profiles: Vec<Profile>,
    pub families: Vec<FamilySpec>,
    /// Fixed scale for every trial instead of random families.
    pub scale: Option<String>,
    /// Fraction of trials given a sign-changing `g'`.
    pub adversarial_rate: f64,
    /// Largest accepted difference between directly and dually computed `H`.
    pub dual_tol: f64,
    /// Requested significant digits; selects the number backend.
    pub precision: usize,
    pub verbose: bool,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            trials: 1000,
            seed: 0,
            tol: 1e-10,
            calculus: Calculus::Delta,
            profiles: Profile::ALL.to_vec(),
            families: default_families(),
            scale: None,
            adversarial_rate: 0.0,
            dual_tol: 1e-12,
            precision: 20,
            verbose: false,
        }
    }
}

fn parse_bool(v: &str) -> Result<bool> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::Parse(format!("expected a boolean, got `{v}`"))),
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| Error::Parse(format!("{key}: cannot parse `{v}`")))
}

fn parse_family(v: &str) -> Result<FamilySpec> {
    let parts: Vec<&str> = v.split_whitespace().collect();
    let usize_at = |i: usize| -> Result<usize> {
        parts
            .get(i)
            .ok_or_else(|| Error::Parse(format!("family `{v}`: missing field")))
            .and_then(|s| parse_num("family", s))
    };
    match parts.first().copied() {
        Some("finite") => Ok(FamilySpec::Finite {
            min_points: usize_at(1)?,
            max_points: usize_at(2)?,
        }),
        Some("lattice") => Ok(FamilySpec::Lattice {
            min_points: usize_at(1)?,
            max_points: usize_at(2)?,
        }),
        Some("qscale") => Ok(FamilySpec::QScale {
            q: parse_num("family", parts.get(1).copied().unwrap_or(""))?,
            min_points: usize_at(2)?,
            max_points: usize_at(3)?,
        }),
        _ => Err(Error::Parse(format!(
            "family `{v}`: expected `finite MIN MAX`, `lattice MIN MAX` or `qscale Q MIN MAX`"
        ))),
    }
}

impl SuiteConfig {
    /// Parse a JSON object or `key = value` lines (`#` starts a comment).
    /// In the text form `family` may repeat and `profiles` is a comma list.
    pub fn parse(text: &str) -> Result<Self> {
        let cfg = if text.trim_start().starts_with('{') {
            serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?
        } else {
            let mut cfg = SuiteConfig::default();
            let mut families = Vec::new();
            for (no, raw) in text.lines().enumerate() {
                let line = raw.split('#').next().unwrap_or("").trim();
                if line.is_empty() {
                    continue;
                }
                let (key, value) = line
                    .split_once('=')
                    .map(|(k, v)| (k.trim(), v.trim()))
                    .ok_or_else(|| Error::Parse(format!("line {}: expected key = value", no + 1)))?;
                match key {
                    "trials" => cfg.trials = parse_num(key, value)?,
                    "seed" => cfg.seed = parse_num(key, value)?,
                    "tol" => cfg.tol = parse_num(key, value)?,
                    "dual_tol" => cfg.dual_tol = parse_num(key, value)?,
                    "precision" => cfg.precision = parse_num(key, value)?,
                    "adversarial_rate" => cfg.adversarial_rate = parse_num(key, value)?,
                    "verbose" => cfg.verbose = parse_bool(value)?,
                    "scale" => cfg.scale = Some(value.to_string()),
                    "calculus" => {
                        cfg.calculus = match value {
                            "delta" => Calculus::Delta,
                            "nabla" => Calculus::Nabla,
                            _ => return Err(Error::Parse(format!("calculus: expected delta or nabla, got `{value}`"))),
                        }
                    }
                    "profiles" => {
                        cfg.profiles = value
                            .split(',')
                            .map(|p| {
                                serde_json::from_value(serde_json::Value::String(p.trim().to_string()))
                                    .map_err(|_| Error::Parse(format!("unknown profile `{}`", p.trim())))
                            })
                            .collect::<Result<_>>()?
                    }
                    "family" => families.push(parse_family(value)?),
                    _ => return Err(Error::Parse(format!("line {}: unknown key `{key}`", no + 1))),
                }
            }
            if !families.is_empty() {
                cfg.families = families;
            }
            cfg
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.profiles.is_empty() {
            return Err(Error::Parse("at least one profile is required".into()));
        }
        if self.scale.is_none() && self.families.is_empty() {
            return Err(Error::Parse("at least one scale family is required".into()));
        }
        for f in &self.families {
            f.validate()?;
        }
        if !(self.tol >= 0.0) || !(self.dual_tol >= 0.0) {
            return Err(Error::Parse("tolerances must be non-negative".into()));
        }
        if !(0.0..=1.0).contains(&self.adversarial_rate) {
            return Err(Error::Parse("adversarial_rate must lie in [0, 1]".into()));
        }
        if let Some(spec) = &self.scale {
            let ts = TimeScale::<f64>::parse(spec)?;
            if !ts.is_discrete() {
                return Err(Error::UnsupportedOnContinuousScale);
            }
        }
        Backend::for_digits(self.precision)
            .ok_or_else(|| Error::Parse(format!("precision {} is beyond the widest backend", self.precision)))?;
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum TrialOutcome {
    Satisfied,
    Violated,
    PremisesFailed,
    Vacuous,
    Error,
}

impl From<Outcome> for TrialOutcome {
    fn from(o: Outcome) -> Self {
        match o {
            Outcome::Satisfied => TrialOutcome::Satisfied,
            Outcome::Violated => TrialOutcome::Violated,
            Outcome::PremisesFailed => TrialOutcome::PremisesFailed,
            Outcome::Vacuous => TrialOutcome::Vacuous,
        }
    }
}

/// A step of `H` against the expected direction, as plain numbers.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct StepWitness {
    pub from: f64,
    pub to: f64,
    pub from_value: f64,
    pub to_value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct TrialRecord {
    pub index: usize,
    pub scale: String,
    pub points: usize,
    pub profile: Profile,
    pub g_sign: GSign,
    pub endpoint: Endpoint,
    pub calculus: Calculus,
    pub adversarial: bool,
    pub outcome: TrialOutcome,
    pub error: Option<String>,
    pub ratio_verdict: Option<Monotonicity>,
    pub conclusion: Option<Monotonicity>,
    pub identity_checked: usize,
    pub identity_failures: usize,
    pub mvt_ok: Option<bool>,
    pub dual_agrees: Option<bool>,
    pub dual_h_difference: Option<f64>,
    pub witness: Option<StepWitness>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SuiteReport {
    pub config: SuiteConfig,
    pub backend: Backend,
    pub trials: usize,
    pub satisfied: usize,
    pub violations: usize,
    pub vacuous: usize,
    pub premises_failed: usize,
    pub adversarial: usize,
    pub errors: usize,
    pub identity_checked: usize,
    pub identity_failures: usize,
    pub mvt_checked: usize,
    pub mvt_failures: usize,
    pub duality_checked: usize,
    pub duality_mismatches: usize,
    pub max_dual_h_difference: f64,
    pub all_passed: bool,
    /// Trials that failed any check, always listed.
    pub failures: Vec<TrialRecord>,
    /// Every trial, when `verbose` is set.
    pub records: Option<Vec<TrialRecord>>,
}

fn witness<S: Scalar>(ts: &TimeScale<S>, report: &RuleReport<S>, want_increasing: bool) -> Option<StepWitness> {
    let step: &Step<S> = match &report.conclusion.witness {
        Some(w) if want_increasing => &w.falling,
        Some(w) => &w.rising,
        None => return None,
    };
    Some(StepWitness {
        from: ts.value(&step.from).to_f64(),
        to: ts.value(&step.to).to_f64(),
        from_value: step.from_value.to_f64(),
        to_value: step.to_value.to_f64(),
    })
}

struct Combo {
    profile: Profile,
    g_sign: GSign,
    endpoint: Endpoint,
}

fn combo(cfg: &SuiteConfig, index: usize) -> Combo {
    let p = cfg.profiles.len();
    Combo {
        profile: cfg.profiles[index % p],
        g_sign: if (index / p) % 2 == 0 { GSign::Pos } else { GSign::Neg },
        endpoint: if (index / (2 * p)) % 2 == 0 {
            Endpoint::Left
        } else {
            Endpoint::Right
        },
    }
}

/// The random generator for trial `index`.
pub fn trial_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

fn end_values<S: Scalar>(f: &GridFunction<S>, g: &GridFunction<S>, end: Endpoint) -> Result<(EndpointValue<S>, EndpointValue<S>)> {
    let d = f.domain();
    let p = match end {
        Endpoint::Left => &d.lower,
        Endpoint::Right => &d.upper,
    };
    Ok((EndpointValue::Supplied(f.eval(p)?), EndpointValue::Supplied(g.eval(p)?)))
}

/// Run trial `index` of the suite with backend `S`.
pub fn run_trial<S: Scalar>(cfg: &SuiteConfig, index: usize) -> TrialRecord {
    let c = combo(cfg, index);
    let mut rng = trial_rng(cfg.seed, index);
    let adversarial = cfg.adversarial_rate > 0.0 && rng.gen_bool(cfg.adversarial_rate);
    let mut rec = TrialRecord {
        index,
        scale: String::new(),
        points: 0,
        profile: c.profile,
        g_sign: if adversarial { GSign::Pos } else { c.g_sign },
        endpoint: c.endpoint,
        calculus: cfg.calculus,
        adversarial,
        outcome: TrialOutcome::Error,
        error: None,
        ratio_verdict: None,
        conclusion: None,
        identity_checked: 0,
        identity_failures: 0,
        mvt_ok: None,
        dual_agrees: None,
        dual_h_difference: None,
        witness: None,
    };
    if let Err(e) = trial_body::<S>(cfg, &c, &mut rng, &mut rec) {
        rec.outcome = TrialOutcome::Error;
        rec.error = Some(e.to_string());
    }
    rec
}

fn trial_body<S: Scalar>(cfg: &SuiteConfig, c: &Combo, rng: &mut ChaCha8Rng, rec: &mut TrialRecord) -> Result<()> {
    let ts: TimeScale<S> = match &cfg.scale {
        Some(spec) => TimeScale::parse(spec)?,
        None => {
            let fam = &cfg.families[rng.gen_range(0..cfg.families.len())];
            fam.draw(rng)?
        }
    };
    rec.scale = ts.to_string();
    rec.points = ts.all_points()?.len();
    let (f, g) = if rec.adversarial {
        generate_mixed_sign_pair(&ts, rng, c.profile, cfg.calculus)?
    } else {
        generate_test_pair(&ts, rng, c.profile, c.g_sign, cfg.calculus)?
    };
    let (fe, ge) = end_values(&f, &g, c.endpoint)?;
    let strict = c.profile.strict();
    let tol = S::from_f64(cfg.tol);
    let report = verify_rule(&f, &g, cfg.calculus, c.endpoint, &fe, &ge, strict, tol.clone())?;
    rec.outcome = report.outcome.into();
    rec.ratio_verdict = Some(report.premises.ratio_verdict.kind);
    rec.conclusion = Some(report.conclusion.kind);
    rec.identity_checked = report.identity_checked;
    rec.identity_failures = report.identity_failures;
    if report.outcome == Outcome::Violated {
        rec.witness = witness(&ts, &report, c.profile.increasing());
    }

    match cfg.calculus {
        Calculus::Delta => {
            if !rec.adversarial {
                let pts = f.points()?;
                let w = cauchy_mvt_witnesses(&f, &g, &pts[0], &pts[pts.len() - 1])?;
                let band = tol.clone() * S::max_of(S::one(), w.middle_ratio.abs());
                rec.mvt_ok = Some(
                    w.lower_ratio <= w.middle_ratio.clone() + band.clone() && w.middle_ratio <= w.upper_ratio + band,
                );
            }
        }
        Calculus::Nabla => {
            let dual = verify_nabla_via_dual(&f, &g, c.endpoint, &fe, &ge, strict, tol)?;
            let mut diff = 0.0f64;
            let same_len = dual.h_samples.len() == report.h_samples.len();
            if same_len {
                for ((_, h), (_, hd)) in report.h_samples.iter().zip(dual.h_samples.iter().rev()) {
                    diff = diff.max((h.clone() - hd.clone()).abs().to_f64());
                }
            }
            rec.dual_h_difference = Some(diff);
            rec.dual_agrees = Some(
                same_len
                    && dual.theorem_satisfied == report.theorem_satisfied
                    && dual.outcome == report.outcome
                    && diff <= cfg.dual_tol,
            );
        }
    }
    Ok(())
}

fn failed(r: &TrialRecord) -> bool {
    matches!(r.outcome, TrialOutcome::Violated | TrialOutcome::Error)
        || r.identity_failures > 0
        || r.mvt_ok == Some(false)
        || r.dual_agrees == Some(false)
        || (r.outcome == TrialOutcome::PremisesFailed && !r.adversarial)
}

fn run_with<S: Scalar>(cfg: &SuiteConfig, backend: Backend) -> SuiteReport {
    let records: Vec<TrialRecord> = (0..cfg.trials).into_par_iter().map(|i| run_trial::<S>(cfg, i)).collect();
    let count = |o: TrialOutcome| records.iter().filter(|r| r.outcome == o).count();
    let failures: Vec<TrialRecord> = records.iter().filter(|r| failed(r)).cloned().collect();
    let identity_failures = records.iter().map(|r| r.identity_failures).sum();
    let mvt_failures = records.iter().filter(|r| r.mvt_ok == Some(false)).count();
    let duality_mismatches = records.iter().filter(|r| r.dual_agrees == Some(false)).count();
    let errors = count(TrialOutcome::Error);
    let violations = count(TrialOutcome::Violated);
    SuiteReport {
        config: cfg.clone(),
        backend,
        trials: cfg.trials,
        satisfied: count(TrialOutcome::Satisfied),
        violations,
        vacuous: count(TrialOutcome::Vacuous),
        premises_failed: count(TrialOutcome::PremisesFailed),
        adversarial: records.iter().filter(|r| r.adversarial).count(),
        errors,
        identity_checked: records.iter().map(|r| r.identity_checked).sum(),
        identity_failures,
        mvt_checked: records.iter().filter(|r| r.mvt_ok.is_some()).count(),
        mvt_failures,
        duality_checked: records.iter().filter(|r| r.dual_agrees.is_some()).count(),
        duality_mismatches,
        max_dual_h_difference: records
            .iter()
            .filter_map(|r| r.dual_h_difference)
            .fold(0.0, f64::max),
        all_passed: failures.is_empty(),
        failures,
        records: cfg.verbose.then_some(records),
    }
}

/// Run the suite with the backend selected by `cfg.precision`.
pub fn run_property_suite(cfg: &SuiteConfig) -> Result<SuiteReport> {
    cfg.validate()?;
    let backend = Backend::for_digits(cfg.precision).expect("validated");
    Ok(match backend {
        Backend::F64 => run_with::<f64>(cfg, backend),
        Backend::F128 => run_with::<F128>(cfg, backend),
        Backend::F256 => run_with::<F256>(cfg, backend),
        Backend::F512 => run_with::<F512>(cfg, backend),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(trials: usize) -> SuiteConfig {
        SuiteConfig {
            trials,
            seed: 5,
            ..SuiteConfig::default()
        }
    }

    #[test]
    fn delta_suite_has_no_violations() {
        let r = run_property_suite(&small(64)).unwrap();
        assert_eq!(r.violations, 0, "{:?}", r.failures);
        assert_eq!(r.errors, 0, "{:?}", r.failures);
        assert_eq!(r.premises_failed, 0);
        assert!(r.all_passed);
        assert_eq!(r.satisfied + r.vacuous, 64);
        assert!(r.mvt_checked > 0 && r.identity_checked > 0);
    }

    #[test]
    fn nabla_suite_agrees_with_duality() {
        let cfg = SuiteConfig {
            calculus: Calculus::Nabla,
            ..small(48)
        };
        let r = run_property_suite(&cfg).unwrap();
        assert!(r.all_passed, "{:?}", r.failures);
        assert_eq!(r.duality_checked, 48);
        assert!(r.max_dual_h_difference <= 1e-12);
    }

    #[test]
    fn adversarial_trials_fail_premises_not_theorem() {
        let cfg = SuiteConfig {
            adversarial_rate: 1.0,
            ..small(40)
        };
        let r = run_property_suite(&cfg).unwrap();
        assert_eq!(r.violations, 0);
        assert_eq!(r.adversarial, 40);
        assert_eq!(r.premises_failed + r.vacuous, 40);
        assert!(r.premises_failed > 0);
    }

    #[test]
    fn three_point_scale_trials_report_errors_and_four_points_are_vacuous() {
        let cfg = SuiteConfig {
            scale: Some("finite 0,1,2,3".into()),
            ..small(8)
        };
        let r = run_property_suite(&cfg).unwrap();
        assert_eq!(r.vacuous, 8);
        let cfg = SuiteConfig {
            scale: Some("finite 0,1,2".into()),
            ..small(2)
        };
        let r = run_property_suite(&cfg).unwrap();
        assert_eq!(r.errors, 2);
        assert!(!r.all_passed);
    }

    #[test]
    fn trials_replay_in_isolation() {
        let cfg = SuiteConfig {
            verbose: true,
            ..small(20)
        };
        let r = run_property_suite(&cfg).unwrap();
        let alone = run_trial::<F128>(&cfg, 13);
        assert_eq!(r.records.unwrap()[13], alone);
    }

    #[test]
    fn config_parsing() {
        let text = "# suite\ntrials = 12\nseed=9\ncalculus = nabla\nprofiles = strictInc, nonStrictDec\nfamily = qscale 0.5 4 8\nfamily = finite 5 6\nverbose = yes\n";
        let cfg = SuiteConfig::parse(text).unwrap();
        assert_eq!(cfg.trials, 12);
        assert_eq!(cfg.calculus, Calculus::Nabla);
        assert_eq!(cfg.profiles, vec![Profile::StrictInc, Profile::NonStrictDec]);
        assert_eq!(cfg.families.len(), 2);
        assert!(cfg.verbose);
        let json = serde_json::to_string(&cfg).unwrap();
        assert_eq!(SuiteConfig::parse(&json).unwrap(), cfg);
        assert!(SuiteConfig::parse("{\"trials\": 3, \"bogus\": 1}").is_err());
        assert!(SuiteConfig::parse("trials = many").is_err());
        assert!(SuiteConfig::parse("family = finite 2 3").is_err());
        assert!(SuiteConfig::parse("profiles = sideways").is_err());
    }
}
