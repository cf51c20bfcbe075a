use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use metro::jaynescummings::{self, JCConfig};
use metro::lab::{self, Evaluation, LabModel, ModelKind, ModelPoint, MonteCarloConfig, Quantity, SweepSpec};
use metro::oscillator::{self, OscillatorConfig};
use metro::qbounds::QuantumFisherReport;
use serde_json::json;
use thiserror::Error;

mod config;

use config::Settings;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] metro::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Core(e) if e.is_numerical() => 2,
            CliError::Core(_) => 1,
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

/// Fisher information, Cramér–Rao bounds and Monte Carlo checks for the
/// oscillator and Jaynes–Cummings models.
#[derive(Debug, Parser)]
#[command(name = "metro", version)]
struct Cli {
    /// key=value file; flags on the command line take precedence
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Gravimetric oscillator
    #[command(subcommand)]
    Oscillator(OscillatorCommand),
    /// Jaynes–Cummings frequency estimation
    #[command(subcommand)]
    Jc(JcCommand),
    /// Monte Carlo check of the Cramér–Rao bound
    Mc(McArgs),
    /// Hermite overlap integral I_p^{n,m}
    Hermite(HermiteArgs),
}

#[derive(Debug, Subcommand)]
enum OscillatorCommand {
    /// Tabulate quantities over a time grid as CSV
    Sweep(SweepArgs),
    /// Evaluate one quantity at one time
    Eval(OscEvalArgs),
}

#[derive(Debug, Subcommand)]
enum JcCommand {
    /// Evaluate one quantity
    Eval(JcEvalArgs),
}

#[derive(Debug, Args)]
struct OscParams {
    #[arg(long)]
    m: Option<f64>,
    #[arg(long)]
    omega: Option<f64>,
    #[arg(long)]
    g: Option<f64>,
    #[arg(long)]
    dx: Option<f64>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[arg(long)]
    t_min: Option<f64>,
    #[arg(long)]
    t_max: Option<f64>,
    #[arg(long)]
    steps: Option<usize>,
    #[command(flatten)]
    params: OscParams,
    /// Comma-separated list from J, F_H, F, K_X, bound13, Im, boundJ+Im
    #[arg(long)]
    quantities: Option<String>,
    /// CSV destination; stdout when absent
    #[arg(long)]
    out: Option<PathBuf>,
    /// Use the numerical routes instead of the closed forms
    #[arg(long)]
    numeric: bool,
}

#[derive(Debug, Args)]
struct OscEvalArgs {
    #[arg(long)]
    t: Option<f64>,
    #[command(flatten)]
    params: OscParams,
    #[arg(long)]
    quantity: Option<String>,
    #[arg(long)]
    numeric: bool,
    /// Print a JSON report; Fisher information queries carry the term split
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct JcEvalArgs {
    #[arg(long)]
    omega: Option<f64>,
    #[arg(long)]
    kappa: Option<f64>,
    /// Interaction time
    #[arg(long = "T")]
    big_t: Option<f64>,
    /// Free evolution time
    #[arg(long)]
    t: Option<f64>,
    /// Excited-photon amplitude, real, in [-1, 1]
    #[arg(long)]
    c1: Option<f64>,
    /// F, J, bound, Im or boundJ+Im; bound is 1/(shots·F)
    #[arg(long)]
    quantity: Option<String>,
    #[arg(long)]
    shots: Option<u64>,
    #[arg(long)]
    numeric: bool,
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct McArgs {
    /// jc or oscillator
    #[arg(long)]
    model: Option<String>,
    /// True parameter value: ω for jc, g for oscillator
    #[arg(long = "true")]
    truth: Option<f64>,
    #[arg(long)]
    shots: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// LO:HI:POINTS
    #[arg(long)]
    grid: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long = "T")]
    big_t: Option<f64>,
    #[arg(long)]
    t: Option<f64>,
    #[arg(long)]
    c1: Option<f64>,
    #[arg(long)]
    m: Option<f64>,
    #[arg(long)]
    omega: Option<f64>,
    #[arg(long)]
    dx: Option<f64>,
}

#[derive(Debug, Args)]
struct HermiteArgs {
    #[arg(long)]
    p: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
}

const OSC_KEYS: [&str; 4] = ["m", "omega", "g", "dx"];

fn oscillator_params(s: &Settings, p: &OscParams) -> Result<BTreeMap<String, f64>> {
    let mut out = BTreeMap::new();
    for (key, flag) in OSC_KEYS.iter().zip([p.m, p.omega, p.g, p.dx]) {
        if let Some(v) = s.get(key, flag)? {
            out.insert(key.to_string(), v);
        }
    }
    Ok(out)
}

fn evaluation(numeric: bool) -> Evaluation {
    if numeric {
        Evaluation::Numeric
    } else {
        Evaluation::ClosedForm
    }
}

fn report_json(r: &QuantumFisherReport) -> serde_json::Value {
    json!({
        "value": r.total,
        "terms": {
            "state": r.term_state,
            "measure": r.term_measure,
            "povm": r.term_povm,
            "cross": r.term_cross,
        },
        "error_estimate": r.error_estimate,
    })
}

fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn oscillator_sweep(s: &Settings, a: &SweepArgs) -> Result<()> {
    s.restrict(&["t-min", "t-max", "steps", "m", "omega", "g", "dx", "quantities", "out", "numeric"])?;
    let spec = SweepSpec {
        model: ModelKind::Oscillator,
        variable: "t".into(),
        lo: s.require("t-min", a.t_min)?,
        hi: s.require("t-max", a.t_max)?,
        steps: s.require("steps", a.steps)?,
        fixed: oscillator_params(s, &a.params)?,
        outputs: Quantity::parse_list(&s.or("quantities", a.quantities.clone(), "J,F_H,bound13".to_string())?)?,
        evaluation: evaluation(s.flag("numeric", a.numeric)?),
    };
    let table = lab::sweep(&spec)?;
    emit(&table.to_csv(), s.get("out", a.out.clone())?.as_deref())
}

fn oscillator_eval(s: &Settings, a: &OscEvalArgs) -> Result<()> {
    s.restrict(&["t", "m", "omega", "g", "dx", "quantity", "numeric", "json"])?;
    let mut params = oscillator_params(s, &a.params)?;
    params.insert("t".into(), s.require("t", a.t)?);
    let q = Quantity::parse(&s.require::<String>("quantity", a.quantity.clone())?)?;
    let point = ModelKind::Oscillator.point(&params)?;
    let json = s.flag("json", a.json)?;
    if json && matches!(q, Quantity::F | Quantity::FH) {
        // the term split only exists on the numerical route
        let ModelPoint::Oscillator(c) = &point else { unreachable!() };
        println!("{}", report_json(&oscillator::numeric_energy_fi(c)?));
        return Ok(());
    }
    let v = lab::evaluate(&point, q, evaluation(s.flag("numeric", a.numeric)?))?;
    print_value(v, json);
    Ok(())
}

fn print_value(v: f64, json: bool) {
    if json {
        println!("{}", json!({ "value": v }));
    } else {
        println!("{}", lab::format_value(v));
    }
}

fn jc_eval(s: &Settings, a: &JcEvalArgs) -> Result<()> {
    s.restrict(&["omega", "kappa", "T", "t", "c1", "quantity", "shots", "numeric", "json"])?;
    let mut params = BTreeMap::new();
    for (key, flag) in ["omega", "kappa", "T", "t", "c1"].iter().zip([a.omega, a.kappa, a.big_t, a.t, a.c1]) {
        if let Some(v) = s.get(key, flag)? {
            params.insert(key.to_string(), v);
        }
    }
    let point = ModelKind::JaynesCummings.point(&params)?;
    let ModelPoint::JaynesCummings(config) = &point else { unreachable!() };
    let name: String = s.require("quantity", a.quantity.clone())?;
    let numeric = s.flag("numeric", a.numeric)?;
    let json = s.flag("json", a.json)?;
    let fisher = |c: &JCConfig| -> Result<f64> {
        Ok(if numeric { jaynescummings::numeric_fi(c)?.total } else { jaynescummings::closed_form_fi(c) })
    };
    if name == "bound" {
        let shots: u64 = s.or("shots", a.shots, 1)?;
        if shots == 0 {
            return Err(CliError::Usage("--shots must be positive".into()));
        }
        let f = fisher(config)?;
        if f.is_nan() || f <= 0.0 {
            return Err(metro::Error::NoInformation(f).into());
        }
        print_value(1.0 / (shots as f64 * f), json);
        return Ok(());
    }
    let q = Quantity::parse(&name)?;
    if json && q == Quantity::F {
        println!("{}", report_json(&jaynescummings::numeric_fi(config)?));
        return Ok(());
    }
    print_value(lab::evaluate(&point, q, evaluation(numeric))?, json);
    Ok(())
}

fn parse_grid(text: &str) -> Result<lab::EstimatorGrid> {
    let bad = || CliError::Usage(format!("--grid expects LO:HI:POINTS, got '{text}'"));
    let parts: Vec<&str> = text.split(':').collect();
    let [lo, hi, points] = parts.as_slice() else { return Err(bad()) };
    let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
    let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
    let points: usize = points.trim().parse().map_err(|_| bad())?;
    Ok(lab::EstimatorGrid::new(lo, hi, points)?)
}

fn monte_carlo(s: &Settings, a: &McArgs) -> Result<()> {
    s.restrict(&[
        "model", "true", "shots", "trials", "seed", "grid", "out", "kappa", "T", "t", "c1", "m", "omega", "dx",
    ])?;
    let truth: f64 = s.require("true", a.truth)?;
    let t = s.or("t", a.t, 0.0)?;
    let model = match s.require::<String>("model", a.model.clone())?.as_str() {
        "jc" => LabModel::JaynesCummings(JCConfig::with_real_c1(
            truth,
            s.or("kappa", a.kappa, 1.0)?,
            t,
            s.or("T", a.big_t, 1.0)?,
            s.or("c1", a.c1, 1.0)?,
        )?),
        "oscillator" => LabModel::Oscillator(OscillatorConfig::new(
            s.or("m", a.m, 1.0)?,
            s.or("omega", a.omega, 1.0)?,
            truth,
            s.or("dx", a.dx, 1.0)?,
            t,
        )?),
        other => return Err(CliError::Usage(format!("unknown model '{other}', expected jc or oscillator"))),
    };
    let cfg = MonteCarloConfig {
        model,
        true_lambda: truth,
        shots: s.require("shots", a.shots)?,
        trials: s.require("trials", a.trials)?,
        seed: s.or("seed", a.seed, 0)?,
        grid: parse_grid(&s.require::<String>("grid", a.grid.clone())?)?,
    };
    let r = lab::crb_experiment(&cfg)?;
    let body = json!({
        "empirical_var": r.empirical_var,
        "crb": r.crb,
        "ratio": r.ratio,
        "ci95": r.ci95,
    });
    emit(&format!("{body}\n"), s.get("out", a.out.clone())?.as_deref())
}

fn hermite(s: &Settings, a: &HermiteArgs) -> Result<()> {
    s.restrict(&["p", "n", "m"])?;
    let v = oscillator::hermite_integral(s.require("p", a.p)?, s.require("n", a.n)?, s.require("m", a.m)?)?;
    println!("{}", lab::format_value(v));
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    let s = Settings::load(cli.config.as_deref())?;
    match &cli.command {
        Command::Oscillator(OscillatorCommand::Sweep(a)) => oscillator_sweep(&s, a),
        Command::Oscillator(OscillatorCommand::Eval(a)) => oscillator_eval(&s, a),
        Command::Jc(JcCommand::Eval(a)) => jc_eval(&s, a),
        Command::Mc(a) => monte_carlo(&s, a),
        Command::Hermite(a) => hermite(&s, a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
