//! `riskconv`: JSON reports for risk measures on finite scenario sets.

mod parse;

use std::fs::File;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use riskconv::approx::{localization_limit, LocalizationOptions};
use riskconv::fatou::{gallery_bigexamp1, gallery_bigexamp2, probe, pstar_consequence_probe, FamilyKind, SequenceFamily};
use riskconv::infconv::{certify_exactness, infconv_bruteforce, infconv_law_invariant, infconv_surplus, SolverOptions};
use riskconv::norms::norms_table;
use riskconv::prob::{read_scenarios, RandomVariable, Scenarios};
use riskconv::risk::{check_flags, evaluate, AcceptanceSet, Budget, Numeraire, RiskMeasure, Threshold};
use riskconv::scalar::{Rational, Scalar};
use riskconv::Error;

use parse::{default_fixture, parse_budgets, parse_norm, parse_norms, MeasureChoice};

const SCHEMA: u32 = 1;
const SEED_ENV: &str = "RISKCONV_SEED";

#[derive(Parser, Debug)]
#[command(name = "riskconv", version, about = "Risk measures, approximation schemes and risk sharing on finite spaces")]
#[command(arg_required_else_help = true)]
struct Cli {
    /// Random seed; the RISKCONV_SEED environment variable takes precedence.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true, default_value_t = 1e-9)]
    tol: f64,
    #[arg(long, global = true, value_enum, default_value_t = Mode::Float)]
    mode: Mode,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Mode {
    Rational,
    Float,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate risk measures.
    #[command(subcommand)]
    Risk(RiskCmd),
    /// Rearrangement-invariant norm diagnostics.
    #[command(subcommand)]
    Norms(NormsCmd),
    /// Conditional-expectation approximation.
    #[command(subcommand)]
    Approx(ApproxCmd),
    /// Optimal risk sharing.
    #[command(subcommand)]
    Infconv(InfconvCmd),
    /// Lower-semicontinuity probes.
    #[command(subcommand)]
    Fatou(FatouCmd),
}

#[derive(Args, Debug, Clone)]
struct Input {
    /// Scenario CSV; defaults to X = (-4, -2, 1, 3) on four equally likely atoms.
    #[arg(long)]
    scenarios: Option<PathBuf>,
    /// Column holding X; defaults to the first variable column.
    #[arg(long)]
    column: Option<String>,
}

#[derive(Args, Debug, Clone)]
struct MeasureArgs {
    /// es, var, entropic or neg_expectation, optionally with a parameter (es:0.3).
    #[arg(long)]
    measure: String,
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long)]
    gamma: Option<f64>,
}

impl MeasureArgs {
    fn parsed(&self) -> riskconv::Result<MeasureChoice> {
        MeasureChoice::parse(&self.measure, self.alpha.as_deref(), self.gamma)
    }
}

#[derive(Subcommand, Debug)]
enum RiskCmd {
    Eval {
        #[command(flatten)]
        measure: MeasureArgs,
        #[command(flatten)]
        input: Input,
        /// Randomized trials per declared flag.
        #[arg(long, default_value_t = 200)]
        flag_trials: usize,
    },
}

#[derive(Subcommand, Debug)]
enum NormsCmd {
    Table {
        #[arg(long, default_value = "l1,l1.5,l2,l4,linf,exp")]
        norms: String,
        /// The grid is `2^-k` for `k = 0..=levels`.
        #[arg(long, default_value_t = 10)]
        levels: u32,
    },
}

#[derive(Subcommand, Debug)]
enum ApproxCmd {
    Localize {
        #[command(flatten)]
        measure: MeasureArgs,
        #[command(flatten)]
        input: Input,
        #[arg(long, default_value = "l1")]
        norm: String,
        #[arg(long, default_value_t = 128)]
        max_steps: usize,
    },
}

#[derive(Subcommand, Debug)]
enum InfconvCmd {
    Solve {
        /// Comma-separated measures, e.g. es:0.3,es:0.6.
        #[arg(long)]
        measures: String,
        #[command(flatten)]
        input: Input,
        /// Also run the grid oracle with this many points per atom (two measures only).
        #[arg(long)]
        oracle_grid: Option<usize>,
        #[arg(long, default_value_t = 2000)]
        iterations: usize,
    },
    Surplus {
        /// Two flat budgets `w:c`, each the set `{Y >= 0 : E[w Y] <= c}`.
        #[arg(long)]
        budgets: String,
        #[command(flatten)]
        input: Input,
        /// Column holding the numeraire S; cash when absent.
        #[arg(long)]
        numeraire: Option<String>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Gallery {
    Bigexamp2,
    Bigexamp1,
    Pstar,
}

#[derive(Subcommand, Debug)]
enum FatouCmd {
    Probe {
        #[command(flatten)]
        measure: MeasureArgs,
        /// order_dominated, norm_bounded_as, as_only or bigexamp2.
        #[arg(long)]
        kind: String,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = 40)]
        horizon: usize,
        #[arg(long, default_value = "l1")]
        norm: String,
        #[arg(long, default_value_t = 1.0)]
        bound: f64,
    },
    Gallery {
        #[arg(value_enum)]
        which: Gallery,
        #[arg(long, default_value_t = 8)]
        nmax: usize,
        #[arg(long)]
        atoms: Option<usize>,
        #[arg(long, value_delimiter = ',', default_value = "4,8,12,16")]
        levels: Vec<u32>,
        #[arg(long, default_value = "l2")]
        norm: String,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long, default_value_t = 32)]
        horizon: usize,
    },
}

struct Config {
    seed: u64,
    tol: f64,
    mode: Mode,
}

enum Failure {
    Usage(String),
    Domain(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Domain(e)
    }
}

type Outcome<T> = Result<T, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Domain(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: &Cli) -> Outcome<()> {
    let seed = match std::env::var(SEED_ENV) {
        Ok(s) => s.trim().parse().map_err(|_| Failure::Usage(format!("{SEED_ENV}={s:?} is not an unsigned integer")))?,
        Err(_) => cli.seed,
    };
    if !(cli.tol > 0.0 && cli.tol.is_finite()) {
        return Err(Failure::Usage("--tol must be a positive number".into()));
    }
    let cfg = Config { seed, tol: cli.tol, mode: cli.mode };
    let (name, body) = dispatch(&cli.command, &cfg)?;
    let mut report = json!({
        "schema": SCHEMA,
        "command": name,
        "mode": match cfg.mode { Mode::Rational => "rational", Mode::Float => "float" },
        "seed": cfg.seed,
        "tol": cfg.tol,
    });
    if let (Value::Object(dst), Value::Object(src)) = (&mut report, body) {
        dst.extend(src);
    }
    if let Some(path) = find_null(&report, "") {
        return Err(Error::Evaluation(format!("report field {path} is not a finite number")).into());
    }
    let text = serde_json::to_string_pretty(&report).expect("serializable report") + "\n";
    match &cli.out {
        Some(path) => File::create(path)
            .and_then(|mut f| f.write_all(text.as_bytes()))
            .map_err(|e| Error::InvalidArgument(format!("cannot write {}: {e}", path.display())))?,
        None => print!("{text}"),
    }
    Ok(())
}

/// Path of the first `null`, which is what serde_json makes of a non-finite float.
fn find_null(v: &Value, path: &str) -> Option<String> {
    match v {
        Value::Null => Some(if path.is_empty() { "/".into() } else { path.into() }),
        Value::Array(items) => items.iter().enumerate().find_map(|(i, x)| find_null(x, &format!("{path}/{i}"))),
        Value::Object(map) => map.iter().find_map(|(k, x)| find_null(x, &format!("{path}/{k}"))),
        _ => None,
    }
}

fn to_json(v: impl serde::Serialize) -> Outcome<Value> {
    serde_json::to_value(v).map_err(|e| Error::Evaluation(e.to_string()).into())
}

fn number(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else if v > 0.0 {
        json!("inf")
    } else if v < 0.0 {
        json!("-inf")
    } else {
        Value::Null
    }
}

fn threshold<T: Scalar>(t: &Threshold<T>) -> Value {
    match t {
        Threshold::Finite(v) => json!({ "value": number(v.to_f64_lossy()), "exact": v.to_string() }),
        Threshold::PlusInfinity => json!({ "value": "inf", "exact": "inf" }),
    }
}

fn values<T: Scalar>(x: &RandomVariable<T>) -> Value {
    Value::Array(x.values().iter().map(|v| number(v.to_f64_lossy())).collect())
}

fn require_float(cfg: &Config, what: &str) -> Outcome<()> {
    if cfg.mode == Mode::Rational {
        return Err(Error::Unsupported(format!("{what} runs in float mode only")).into());
    }
    Ok(())
}

fn load_table<T: Scalar>(input: &Input) -> Outcome<Option<Scenarios<T>>> {
    match &input.scenarios {
        None => Ok(None),
        Some(path) => {
            let file = File::open(path).map_err(|e| Error::InvalidArgument(format!("cannot open {}: {e}", path.display())))?;
            Ok(Some(read_scenarios(std::io::BufReader::new(file))?))
        }
    }
}

fn load<T: Scalar>(input: &Input) -> Outcome<RandomVariable<T>> {
    match load_table::<T>(input)? {
        None if input.column.is_some() => Err(Failure::Usage("--column needs --scenarios".into())),
        None => Ok(default_fixture()?),
        Some(table) => Ok(match &input.column {
            Some(c) => table.column(c)?.clone(),
            None => table.first()?.clone(),
        }),
    }
}

fn dispatch(cmd: &Command, cfg: &Config) -> Outcome<(&'static str, Value)> {
    match cmd {
        Command::Risk(RiskCmd::Eval { measure, input, flag_trials }) => Ok(("risk eval", risk_eval(cfg, measure, input, *flag_trials)?)),
        Command::Norms(NormsCmd::Table { norms, levels }) => {
            require_float(cfg, "norms table")?;
            if *levels > 20 {
                return Err(Error::TooLarge("levels above 20".into()).into());
            }
            let rows = norms_table(&parse_norms(norms)?, *levels)?;
            Ok(("norms table", json!({ "levels": levels, "rows": to_json(rows)? })))
        }
        Command::Approx(ApproxCmd::Localize { measure, input, norm, max_steps }) => {
            require_float(cfg, "approx localize")?;
            let choice = measure.parsed()?;
            let rho = choice.build()?;
            let x = load::<f64>(input)?;
            let opts = LocalizationOptions { norm: parse_norm(norm)?, max_steps: *max_steps, tol: cfg.tol };
            let loc = localization_limit(rho.as_ref(), &x, &opts)?;
            Ok(("approx localize", json!({ "measure": rho.name(), "norm": opts.norm.label(), "limit": number(loc.limit), "steps": loc.steps, "trace": to_json(&loc.trace)? })))
        }
        Command::Infconv(InfconvCmd::Solve { measures, input, oracle_grid, iterations }) => {
            require_float(cfg, "infconv solve")?;
            infconv_solve(cfg, measures, input, *oracle_grid, *iterations).map(|v| ("infconv solve", v))
        }
        Command::Infconv(InfconvCmd::Surplus { budgets, input, numeraire }) => {
            let body = match cfg.mode {
                Mode::Rational => surplus::<Rational>(budgets, input, numeraire.as_deref())?,
                Mode::Float => surplus::<f64>(budgets, input, numeraire.as_deref())?,
            };
            Ok(("infconv surplus", body))
        }
        Command::Fatou(FatouCmd::Probe { measure, kind, trials, horizon, norm, bound }) => {
            require_float(cfg, "fatou probe")?;
            let rho = measure.parsed()?.build()?;
            let family = SequenceFamily::new(FamilyKind::parse(kind)?, cfg.seed).with_norm(parse_norm(norm)?, *bound);
            let report = probe(rho.as_ref(), &family, *trials, *horizon, cfg.tol)?;
            Ok(("fatou probe", to_json(report)?))
        }
        Command::Fatou(FatouCmd::Gallery { which, nmax, atoms, levels, norm, trials, horizon }) => {
            let body = match which {
                Gallery::Bigexamp2 => json!({ "gallery": "bigexamp2", "report": to_json(gallery_bigexamp2(*nmax, *atoms)?)? }),
                Gallery::Bigexamp1 => json!({ "gallery": "bigexamp1", "report": to_json(gallery_bigexamp1(levels)?)? }),
                Gallery::Pstar => {
                    let r = pstar_consequence_probe(&parse_norm(norm)?, *trials, *horizon, cfg.seed)?;
                    json!({ "gallery": "pstar", "report": to_json(r)? })
                }
            };
            Ok(("fatou gallery", body))
        }
    }
}

fn risk_eval(cfg: &Config, measure: &MeasureArgs, input: &Input, flag_trials: usize) -> Outcome<Value> {
    let choice = measure.parsed()?;
    let rho = choice.build()?;
    let flags = check_flags(rho.as_ref(), flag_trials, cfg.seed)?;
    let (value, exact) = match cfg.mode {
        Mode::Rational => {
            let v = choice.eval_exact(&load::<Rational>(input)?)?;
            (v.to_f64_lossy(), Some(v.to_string()))
        }
        Mode::Float => (evaluate(rho.as_ref(), &load::<f64>(input)?)?, None),
    };
    let mut body = json!({
        "measure": rho.name(),
        "value": number(value),
        "declared_flags": to_json(rho.flags())?,
        "flags_report": to_json(&flags)?,
        "flags_passed": flags.passed(),
    });
    if let Some(e) = exact {
        body["value_exact"] = json!(e);
    }
    Ok(body)
}

fn infconv_solve(cfg: &Config, measures: &str, input: &Input, oracle_grid: Option<usize>, iterations: usize) -> Outcome<Value> {
    let choices = MeasureChoice::parse_list(measures)?;
    let boxed: Vec<Box<dyn RiskMeasure>> = choices.iter().map(MeasureChoice::build).collect::<riskconv::Result<_>>()?;
    let refs: Vec<&dyn RiskMeasure> = boxed.iter().map(|b| b.as_ref()).collect();
    let x = load::<f64>(input)?;
    let opts = SolverOptions { iterations, ..SolverOptions::default() };
    let result = infconv_law_invariant(&refs, &x, &opts)?;
    let certificate = certify_exactness(&result, &refs, &x, cfg.tol.max(1e-9))?;
    let mut body = json!({
        "measures": refs.iter().map(|r| r.name()).collect::<Vec<_>>(),
        "value": number(result.value),
        "pieces": result.pieces.iter().map(|v| number(*v)).collect::<Vec<_>>(),
        "allocation": to_json(&result.allocation)?,
        "iterations": result.iterations,
        "converged": result.converged,
        "certificate": to_json(&certificate)?,
    });
    if let Some(grid) = oracle_grid {
        if refs.len() != 2 {
            return Err(Failure::Usage("--oracle-grid needs exactly two measures".into()));
        }
        let bf = infconv_bruteforce(refs[0], refs[1], &x, grid)?;
        body["oracle"] = json!({ "value": number(bf.value), "resolution": bf.resolution, "evaluations": bf.evaluations });
        body["oracle_gap"] = number(bf.value - result.value);
    }
    Ok(body)
}

fn surplus<T: Scalar>(budgets: &str, input: &Input, numeraire: Option<&str>) -> Outcome<Value> {
    let parsed = parse_budgets(budgets)?;
    if parsed.len() != 2 {
        return Err(Failure::Usage("--budgets takes exactly two w:c pairs".into()));
    }
    let table = load_table::<T>(input)?;
    let x = load::<T>(input)?;
    let space = x.space().clone();
    let s = match (numeraire, &table) {
        (None, _) => Numeraire::cash(space.clone()),
        (Some(col), Some(t)) => Numeraire::new(t.column(col)?.clone())?,
        (Some(_), None) => return Err(Failure::Usage("--numeraire needs --scenarios".into())),
    };
    let sets = parsed
        .iter()
        .map(|(w, c)| Ok(AcceptanceSet::budget(Budget::flat(space.clone(), T::from_rational(w), T::from_rational(c))?)))
        .collect::<riskconv::Result<Vec<_>>>()?;
    let r = infconv_surplus(&sets[0], &sets[1], &s, &x)?;
    Ok(json!({
        "budgets": budgets,
        "value": number(r.value.to_f64_lossy()),
        "value_exact": r.value.to_string(),
        "pieces": [values(&r.pieces.0), values(&r.pieces.1)],
        "piece_values": [threshold(&r.piece_values.0), threshold(&r.piece_values.1)],
        "witness": {
            "y": values(&r.witness.y),
            "w": values(&r.witness.w),
            "load1": number(r.witness.load1.to_f64_lossy()),
            "load2": number(r.witness.load2.to_f64_lossy()),
            "feasible": r.witness.feasible,
        },
    }))
}
