//! `tscale`: scale inspection, q-exponential evaluation, bound tables and the
//! property suites from the command line.
//!
//! Exit codes: 0 on success, 1 when a check reports a violation, 2 on usage
//! or precondition errors.

mod output;

use std::fs::File;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};
use tscale::gridfn::{cauchy_mvt_witnesses, read_csv, read_csv_own_scale};
use tscale::lhopital::suite::{run_property_suite, SuiteConfig};
use tscale::lhopital::generate::Profile;
use tscale::qbounds::{report_csv, sandwich_report_with, verify_derivative_chain, BoundProblem};
use tscale::qcalc::{q_exponential, QContext};
use tscale::scalar::Backend;
use tscale::{Error, Scalar, TimeScale, F128, F256, F512};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Table,
    Csv,
    Json,
}

#[derive(Parser, Debug)]
#[command(name = "tscale", version, about = "Time scale calculus, l'Hôpital rule checks and q-exponential bounds")]
struct Cli {
    /// Output format; JSON is canonical and the other two are derived from it.
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    format: Format,
    /// Requested significant digits (selects the number backend) [default: 25, suites: 20].
    #[arg(long, global = true, env = "TS_PRECISION")]
    precision: Option<usize>,
    /// Tolerance for margins and monotonicity [default: 1e-10].
    #[arg(long, global = true, env = "TS_TOL")]
    tol: Option<String>,
    /// Bound on the omitted tail of q-series.
    #[arg(long, global = true, default_value = "1e-14")]
    tail_tol: String,
    /// Include per-trial records and extra detail.
    #[arg(long, short, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Inspect a time scale.
    Scale {
        #[command(subcommand)]
        cmd: ScaleCmd,
    },
    /// Evaluate the q-exponential with a certified tail bound.
    #[command(allow_negative_numbers = true)]
    Qexp {
        #[arg(long)]
        q: String,
        #[arg(long)]
        x: String,
    },
    /// Lower and upper bounds for the q-exponential on [q^-1 a, b].
    #[command(allow_negative_numbers = true)]
    Bounds {
        #[arg(long)]
        q: String,
        /// a = q^A
        #[arg(long)]
        a_exp: i32,
        /// b = q^B
        #[arg(long)]
        b_exp: i32,
        #[arg(long)]
        n: i64,
        /// Extra evaluation points; those off the q-lattice are flagged.
        #[arg(long = "x")]
        x: Vec<String>,
    },
    /// Property suites and the derivative chain.
    Verify {
        #[command(subcommand)]
        cmd: VerifyCmd,
    },
    /// Cauchy mean value witnesses for a `t,f,g` table.
    #[command(allow_negative_numbers = true)]
    Mvt {
        #[arg(long)]
        csv: PathBuf,
        /// Right end of [a, x]; must be a row of the table.
        #[arg(long)]
        x: String,
        /// Left end; defaults to the first row.
        #[arg(long)]
        a: Option<String>,
        /// Scale of the table; defaults to the finite scale of its `t` column.
        #[arg(long)]
        scale: Option<String>,
    },
}

#[derive(Subcommand, Debug)]
enum ScaleCmd {
    /// Points, jumps and graininess of a scale spec such as `qscale q=0.5 kmin=0 kmax=6`.
    Info {
        #[arg(long)]
        scale: String,
        /// Largest number of point rows to list.
        #[arg(long, default_value_t = 50)]
        limit: usize,
    },
}

#[derive(Subcommand, Debug)]
enum VerifyCmd {
    /// Randomized check of the monotone l'Hôpital rules.
    Lhopital {
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Run every trial on this scale instead of random families.
        #[arg(long)]
        scale: Option<String>,
        /// Nabla rule instead of delta.
        #[arg(long)]
        nabla: bool,
        /// Only the non-strict (plateau) profiles.
        #[arg(long)]
        non_strict: bool,
        /// Suite configuration, JSON or `key = value` lines; flags override it.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Replay the derivative chain behind the bounds.
    Chain {
        #[arg(long)]
        q: String,
        #[arg(long)]
        a_exp: i32,
        #[arg(long)]
        b_exp: i32,
        #[arg(long)]
        n: i64,
    },
}

/// Everything that ends in exit code 2.
#[derive(Debug)]
struct Usage(String);

impl From<Error> for Usage {
    fn from(e: Error) -> Self {
        Usage(e.to_string())
    }
}

struct Report {
    json: Value,
    /// Preformatted CSV, when the generic conversion is not the right shape.
    csv: Option<String>,
    rows_key: Option<&'static str>,
    passed: bool,
}

impl Report {
    fn new(value: impl Serialize, passed: bool) -> Result<Self, Usage> {
        Ok(Report {
            json: serde_json::to_value(value).map_err(|e| Usage(e.to_string()))?,
            csv: None,
            rows_key: None,
            passed,
        })
    }

    fn rows(mut self, key: &'static str) -> Self {
        self.rows_key = Some(key);
        self
    }
}

const DEFAULT_PRECISION: usize = 25;
const DEFAULT_TOL: &str = "1e-10";

fn parse<S: Scalar>(name: &str, v: &str) -> Result<S, Usage> {
    S::parse_decimal(v).ok_or_else(|| Usage(format!("--{name}: `{v}` is not a number")))
}

/// Run `$body` with `$S` bound to the backend for `$digits`.
macro_rules! with_backend {
    ($digits:expr, $S:ident => $body:expr) => {
        match Backend::for_digits($digits) {
            Some(Backend::F64) => {
                type $S = f64;
                $body
            }
            Some(Backend::F128) => {
                type $S = F128;
                $body
            }
            Some(Backend::F256) => {
                type $S = F256;
                $body
            }
            Some(Backend::F512) => {
                type $S = F512;
                $body
            }
            None => Err(Usage(format!(
                "--precision {} exceeds the widest backend ({} digits)",
                $digits,
                F512::decimal_digits()
            ))),
        }
    };
}

fn backend_name(digits: usize) -> Value {
    serde_json::to_value(Backend::for_digits(digits)).unwrap_or(Value::Null)
}

fn ctx<S: Scalar>(cli: &Cli, q: &str, digits: usize) -> Result<QContext<S>, Usage> {
    Ok(QContext::new(parse("q", q)?, digits, parse("tail-tol", &cli.tail_tol)?)?)
}

fn scale_info<S: Scalar>(spec: &str, limit: usize) -> Result<Report, Usage> {
    let ts = TimeScale::<S>::parse(spec)?;
    let lo = ts.min_point();
    let hi = ts.max_point();
    let mut out = json!({
        "scale": ts.to_string(),
        "discrete": ts.is_discrete(),
        "min": ts.label(&lo),
        "max": ts.label(&hi),
    });
    if ts.is_discrete() {
        let pts = ts.all_points()?;
        let mut rows = Vec::new();
        for p in pts.iter().take(limit) {
            let c = ts.classify(p)?;
            rows.push(json!({
                "point": ts.label(p),
                "t": ts.value(p).render(12),
                "sigma": ts.label(&ts.sigma(p)?),
                "rho": ts.label(&ts.rho(p)?),
                "mu": ts.mu(p)?.render(12),
                "nu": ts.nu(p)?.render(12),
                "rightScattered": c.right_scattered,
                "leftScattered": c.left_scattered,
            }));
        }
        out["points"] = json!(pts.len());
        out["truncated"] = json!(pts.len() > limit);
        out["rows"] = Value::Array(rows);
    }
    Ok(Report::new(out, true)?.rows("rows"))
}

fn qexp<S: Scalar>(cli: &Cli, q: &str, x: &str, digits: usize) -> Result<Report, Usage> {
    let c = ctx::<S>(cli, q, digits)?;
    let x: S = parse("x", x)?;
    let r = q_exponential(&c, &x)?;
    let out = json!({
        "q": c.q(),
        "x": x,
        "value": r.value.render(digits),
        "termsUsed": r.terms_used,
        "tailBound": r.tail_bound.render(6),
        "tailTol": c.tail_tol(),
        "precision": digits,
        "backend": backend_name(digits),
    });
    Report::new(out, true)
}

fn bounds<S: Scalar>(cli: &Cli, q: &str, a: i32, b: i32, n: i64, xs: &[String], digits: usize) -> Result<Report, Usage> {
    let p = BoundProblem::new(ctx::<S>(cli, q, digits)?, a, b, n)?;
    let tol: S = parse("tol", cli.tol.as_deref().unwrap_or(DEFAULT_TOL))?;
    let extra = xs.iter().map(|x| parse("x", x)).collect::<Result<Vec<S>, _>>()?;
    let r = sandwich_report_with(&p, tol, &extra)?;
    let mut rep = Report::new(&r, r.all_passed)?.rows("rows");
    rep.csv = Some(report_csv(&r, digits));
    Ok(rep)
}

fn chain<S: Scalar>(cli: &Cli, q: &str, a: i32, b: i32, n: i64, digits: usize) -> Result<Report, Usage> {
    let p = BoundProblem::new(ctx::<S>(cli, q, digits)?, a, b, n)?;
    let tol: S = parse("tol", cli.tol.as_deref().unwrap_or(DEFAULT_TOL))?;
    let r = verify_derivative_chain(&p, tol)?;
    Ok(Report::new(&r, r.all_passed)?.rows("ratios"))
}

fn mvt<S: Scalar>(path: &PathBuf, x: &str, a: Option<&str>, scale: Option<&str>) -> Result<Report, Usage> {
    let file = File::open(path).map_err(|e| Usage(format!("--csv {}: {e}", path.display())))?;
    let table = match scale {
        Some(spec) => read_csv(&TimeScale::<S>::parse(spec)?, file)?,
        None => read_csv_own_scale::<S, _>(file)?,
    };
    let g = table
        .g
        .ok_or_else(|| Usage("--csv: the table needs a `g` column".into()))?;
    let ts = table.f.scale().clone();
    let locate = |name: &str, v: &str| -> Result<_, Usage> {
        let t: S = parse(name, v)?;
        ts.locate_with_tolerance(&t, 1e-12)
            .map_err(|_| Usage(format!("--{name} {v} is not a point of `{ts}`")))
    };
    let a_pt = match a {
        Some(a) => locate("a", a)?,
        None => table.f.points()?[0].clone(),
    };
    let x_pt = locate("x", x)?;
    let w = cauchy_mvt_witnesses(&table.f, &g, &a_pt, &x_pt)?;
    let holds = w.lower_ratio <= w.middle_ratio && w.middle_ratio <= w.upper_ratio;
    let out = json!({
        "a": ts.label(&a_pt),
        "x": ts.label(&x_pt),
        "c1": ts.label(&w.c1),
        "c2": ts.label(&w.c2),
        "lowerRatio": w.lower_ratio,
        "middleRatio": w.middle_ratio,
        "upperRatio": w.upper_ratio,
        "sandwichHolds": holds,
    });
    Report::new(out, holds)
}

fn suite(cli: &Cli, cmd: &VerifyCmd) -> Result<Report, Usage> {
    let VerifyCmd::Lhopital {
        trials,
        seed,
        scale,
        nabla,
        non_strict,
        config,
    } = cmd
    else {
        unreachable!()
    };
    let mut cfg = match config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Usage(format!("--config {}: {e}", path.display())))?;
            SuiteConfig::parse(&text)?
        }
        None => SuiteConfig::default(),
    };
    if let Some(t) = trials {
        cfg.trials = *t;
    }
    if let Some(s) = seed {
        cfg.seed = *s;
    }
    if scale.is_some() {
        cfg.scale = scale.clone();
    }
    if *nabla {
        cfg.calculus = tscale::gridfn::Calculus::Nabla;
    }
    if *non_strict {
        cfg.profiles = Profile::ALL.into_iter().filter(|p| !p.strict()).collect();
    }
    if let Some(p) = cli.precision {
        cfg.precision = p;
    }
    if let Some(t) = &cli.tol {
        cfg.tol = t.parse().map_err(|_| Usage(format!("--tol: `{t}` is not a number")))?;
    }
    cfg.verbose |= cli.verbose;
    let r = run_property_suite(&cfg)?;
    let key = if cfg.verbose { "records" } else { "failures" };
    Ok(Report::new(&r, r.all_passed)?.rows(key))
}

fn run(cli: &Cli) -> Result<Report, Usage> {
    let digits = cli.precision.unwrap_or(DEFAULT_PRECISION);
    match &cli.command {
        Command::Scale {
            cmd: ScaleCmd::Info { scale, limit },
        } => with_backend!(digits, S => scale_info::<S>(scale, *limit)),
        Command::Qexp { q, x } => with_backend!(digits, S => qexp::<S>(cli, q, x, digits)),
        Command::Bounds { q, a_exp, b_exp, n, x } => {
            with_backend!(digits, S => bounds::<S>(cli, q, *a_exp, *b_exp, *n, x, digits))
        }
        Command::Verify {
            cmd: VerifyCmd::Chain { q, a_exp, b_exp, n },
        } => with_backend!(digits, S => chain::<S>(cli, q, *a_exp, *b_exp, *n, digits)),
        Command::Verify { cmd } => suite(cli, cmd),
        Command::Mvt { csv, x, a, scale } => {
            with_backend!(digits, S => mvt::<S>(csv, x, a.as_deref(), scale.as_deref()))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(rep) => {
            let text = match cli.format {
                Format::Json => serde_json::to_string_pretty(&rep.json).expect("serializable") + "\n",
                Format::Csv => rep.csv.clone().unwrap_or_else(|| output::csv(&rep.json, rep.rows_key)),
                Format::Table => output::table(&rep.json),
            };
            print!("{text}");
            if rep.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
