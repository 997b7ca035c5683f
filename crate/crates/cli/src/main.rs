//! `dustsim` command-line front end.
//!
//! Exit codes: 0 ok, 2 bad configuration, 3 censored or otherwise unusable
//! results, 4 internal invariant breach.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use dustsim_core::report::{self, EventWriter};
use dustsim_core::singleline::{estimate_nonblocking_prob, BlockingEstimate};
use dustsim_core::stats::regularity::env_regularity;
use dustsim_core::{
    estimate_pk, run_sweep, run_trial_with_events, solve_p1, Error, PkEstimate, SimConfig,
    SingleLineConfig, SolverConfig, StopReason, SweepSpec,
};

#[derive(Parser, Debug)]
#[command(name = "dustsim", version, about = "Greedy cleaning of Poisson-dusted halflines")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one trial; writes summary.json, rho.csv and optionally events.csv.
    Simulate(SimulateArgs),
    /// Doubling frequencies over (N, alpha) cells; writes sweep.csv and sweep.json.
    Sweep(SweepArgs),
    /// Single-halfline escape estimates; writes singleline.json.
    Singleline(SinglelineArgs),
    /// Solve the escape equation; writes oracle.csv and oracle.json.
    Oracle(OracleArgs),
    /// Regularity frequencies of fresh environments; writes env.csv and envcheck.json.
    Envcheck(EnvcheckArgs),
}

#[derive(Args, Debug)]
struct Common {
    /// Root seed; falls back to GC_SEED, then 0.
    #[arg(long, env = "GC_SEED", default_value_t = 0)]
    seed: u64,
    /// Output directory, created if missing.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Worker threads for trial-level parallelism. Never changes results.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Args, Debug)]
struct DynamicsArgs {
    /// Time horizon; defaults to 8 N^(1.3 - alpha).
    #[arg(long)]
    horizon: Option<f64>,
    /// Settlement streak; defaults to ceil(ln^3 N).
    #[arg(long = "quiescence-k")]
    quiescence_k: Option<u64>,
    #[arg(long = "quiescence-rho", default_value_t = 1.0)]
    quiescence_rho: f64,
    #[arg(long = "sigma-thresholds", value_delimiter = ',', default_values_t = vec![0.1, 0.5, 1.0])]
    sigma_thresholds: Vec<f64>,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    alpha: f64,
    /// Largest m for which A_m violations are reported.
    #[arg(long, default_value_t = 4)]
    m: usize,
    #[command(flatten)]
    dynamics: DynamicsArgs,
    /// Also write every jump to events.csv.
    #[arg(long = "emit-events")]
    emit_events: bool,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    n: Vec<usize>,
    #[arg(long, value_delimiter = ',', required = true)]
    alpha: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = vec![2])]
    m: Vec<usize>,
    #[arg(long, default_value_t = 100)]
    trials: u64,
    #[command(flatten)]
    dynamics: DynamicsArgs,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct SinglelineArgs {
    /// Number of workers stacked at each starting point.
    #[arg(long, default_value_t = 1)]
    k: usize,
    #[arg(long, value_delimiter = ',', default_values_t = vec![1.0])]
    x: Vec<f64>,
    #[arg(long, default_value_t = 100_000)]
    trials: u64,
    /// Also estimate the probability that fresh dust is not k-(delta) blocking.
    #[arg(long)]
    delta: Option<f64>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct OracleArgs {
    #[arg(long, default_value_t = 1e-3)]
    h: f64,
    #[arg(long = "x-max", default_value_t = 30.0)]
    x_max: f64,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Points at which P and log P / log^2 x are reported.
    #[arg(long, value_delimiter = ',', default_values_t = vec![1e-4, 1e-3, 1e-2, 0.25, 0.5, 1.0, 2.0])]
    x: Vec<f64>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct EnvcheckArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    n: Vec<usize>,
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    #[arg(long, default_value_t = 200)]
    trials: u64,
    #[command(flatten)]
    common: Common,
}

/// Failure carrying its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidConfig(_) | Error::Precondition(_) => 2,
            Error::NoConvergence { .. } | Error::Underflow(_) | Error::StepBudget(_) => 3,
            Error::Invariant(_) => 4,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure {
            code: 2,
            message: format!("output: {e}"),
        }
    }
}

type CmdResult = Result<u8, Failure>;

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>, Failure> {
    fs::create_dir_all(dir)?;
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn write_json_file<T: Serialize>(dir: &Path, name: &str, kind: &str, config: &Value, result: &T) -> Result<(), Failure> {
    let mut f = create(dir, name)?;
    report::write_json(&mut f, kind, config, result)?;
    f.flush()?;
    Ok(())
}

fn sim_config(n: usize, alpha: f64, seed: u64, d: &DynamicsArgs) -> SimConfig {
    let mut c = SimConfig::new(n, alpha, seed);
    if let Some(h) = d.horizon {
        c.horizon = Some(h);
        c.rho_sample_interval = (h / 500.0).max(1e-6);
    }
    if let Some(k) = d.quiescence_k {
        c.quiescence_k = k;
    }
    c.quiescence_rho = d.quiescence_rho;
    c.sigma_thresholds = d.sigma_thresholds.clone();
    c
}

fn simulate(a: &SimulateArgs) -> CmdResult {
    let mut cfg = sim_config(a.n, a.alpha, a.common.seed, &a.dynamics);
    cfg.m_max = a.m;
    cfg.validate()?;
    let echo = json!({ "command": "simulate", "sim": &cfg, "emit_events": a.emit_events });
    let summary = if a.emit_events {
        let mut events = EventWriter::new(create(&a.common.out, "events.csv")?, &echo)?;
        let mut sink = |e: &dustsim_core::JumpEvent| events.record(e);
        let s = run_trial_with_events(&cfg, Some(&mut sink))?;
        events.finish()?.flush()?;
        s
    } else {
        run_trial_with_events(&cfg, None)?
    };
    let mut rho = create(&a.common.out, "rho.csv")?;
    report::write_rho_csv(&mut rho, &echo, &summary.rho_samples)?;
    rho.flush()?;
    write_json_file(&a.common.out, "summary.json", "trial_summary", &echo, &summary)?;
    Ok(if summary.stop_reason == StopReason::EventCap { 3 } else { 0 })
}

fn sweep(a: &SweepArgs) -> CmdResult {
    let mut spec = SweepSpec::new(a.n.clone(), a.alpha.clone(), a.trials, a.common.seed);
    spec.template = sim_config(a.n[0], a.alpha[0], 0, &a.dynamics);
    spec.default_horizon = a.dynamics.horizon.is_none();
    spec.default_streak = a.dynamics.quiescence_k.is_none();
    spec.m_values = a.m.clone();
    spec.jobs = a.common.jobs;
    // The echo leaves out `jobs`: outputs must not depend on it.
    let echo = json!({
        "command": "sweep",
        "n": &spec.n_values,
        "alpha": &spec.alpha_values,
        "m": &spec.m_values,
        "trials": spec.trials,
        "seed": spec.root_seed,
        "horizon": a.dynamics.horizon,
        "quiescence_k": a.dynamics.quiescence_k,
        "quiescence_rho": a.dynamics.quiescence_rho,
        "sigma_thresholds": &a.dynamics.sigma_thresholds,
    });
    let cells = run_sweep(&spec)?;
    for c in &cells {
        for w in &c.warnings {
            eprintln!("warning: {w}");
        }
    }
    let mut f = create(&a.common.out, "sweep.csv")?;
    report::write_sweep_csv(&mut f, &echo, &cells)?;
    f.flush()?;
    write_json_file(&a.common.out, "sweep.json", "sweep", &echo, &cells)?;
    Ok(if cells.iter().all(|c| c.unreliable) { 3 } else { 0 })
}

#[derive(Serialize)]
struct EscapeRow {
    x: f64,
    #[serde(flatten)]
    estimate: PkEstimate,
}

#[derive(Serialize)]
struct SinglelineResult {
    k: usize,
    rows: Vec<EscapeRow>,
    nonblocking: Option<BlockingEstimate>,
}

fn singleline(a: &SinglelineArgs) -> CmdResult {
    if a.x.is_empty() {
        return Err(Error::InvalidConfig("need at least one --x".into()).into());
    }
    let echo = json!({
        "command": "singleline",
        "k": a.k,
        "x": &a.x,
        "trials": a.trials,
        "delta": a.delta,
        "seed": a.common.seed,
    });
    let mut rows = Vec::with_capacity(a.x.len());
    for &x in &a.x {
        let cfg = SingleLineConfig::stacked(a.k, x);
        rows.push(EscapeRow {
            x,
            estimate: estimate_pk(&cfg, a.trials, a.common.seed)?,
        });
    }
    let nonblocking = a
        .delta
        .map(|d| estimate_nonblocking_prob(a.k, d, a.trials, a.common.seed))
        .transpose()?;
    let censored_only = rows.iter().all(|r| r.estimate.censored == r.estimate.trials);
    let result = SinglelineResult { k: a.k, rows, nonblocking };
    write_json_file(&a.common.out, "singleline.json", "singleline", &echo, &result)?;
    Ok(if censored_only { 3 } else { 0 })
}

#[derive(Serialize)]
struct OraclePoint {
    x: f64,
    p: f64,
    log_p: Option<f64>,
    log_ratio: Option<f64>,
}

#[derive(Serialize)]
struct OracleResult {
    iterations: usize,
    residual: f64,
    defect: f64,
    asymptotic_constant: f64,
    points: Vec<OraclePoint>,
}

fn oracle(a: &OracleArgs) -> CmdResult {
    let cfg = SolverConfig::new(a.h, a.x_max, a.tol, 10_000);
    let echo = json!({
        "command": "oracle",
        "h": a.h,
        "x_max": a.x_max,
        "tol": a.tol,
        "x": &a.x,
    });
    let table = solve_p1(&cfg)?;
    let mut points = Vec::with_capacity(a.x.len());
    for &x in &a.x {
        points.push(OraclePoint {
            x,
            p: table.eval(x)?,
            log_p: table.log_eval(x).ok(),
            log_ratio: table.log_ratio(x).ok(),
        });
    }
    let mut f = create(&a.common.out, "oracle.csv")?;
    table.write_csv(&mut f, Some(&report::comment_body(&echo)))?;
    f.flush()?;
    let result = OracleResult {
        iterations: table.iterations_used(),
        residual: table.residual(),
        defect: table.defect(),
        asymptotic_constant: dustsim_core::oracle::asymptotic_constant(),
        points,
    };
    write_json_file(&a.common.out, "oracle.json", "oracle", &echo, &result)?;
    Ok(0)
}

fn envcheck(a: &EnvcheckArgs) -> CmdResult {
    let echo = json!({
        "command": "envcheck",
        "n": &a.n,
        "alpha": a.alpha,
        "trials": a.trials,
        "seed": a.common.seed,
    });
    let rows = a
        .n
        .iter()
        .map(|&n| env_regularity(n, a.alpha, a.trials, a.common.seed))
        .collect::<Result<Vec<_>, _>>()?;
    let mut f = create(&a.common.out, "env.csv")?;
    report::write_env_csv(&mut f, &echo, &rows)?;
    f.flush()?;
    write_json_file(&a.common.out, "envcheck.json", "envcheck", &echo, &rows)?;
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Sweep(a) => sweep(a),
        Command::Singleline(a) => singleline(a),
        Command::Oracle(a) => oracle(a),
        Command::Envcheck(a) => envcheck(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
