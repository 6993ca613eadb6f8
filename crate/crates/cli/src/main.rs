//! `dlsim`: command-line front end to the work-stealing simulator.
//!
//! Results go to stdout as JSON (or `key=value` for `lower-bound`),
//! diagnostics to stderr. Exit status is 0 on success, 1 on usage, I/O or
//! parse errors, and 2 when a model check fails.

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use dlsim::bounds::{
    self, lower_bound_run, makespan_bound, BoundInputs, BoundKind, BoundsError, Scenario,
};
use dlsim::engine::{run, EngineError, Mode, SimConfig};
use dlsim::harness::{self, Execution, SweepSpec, DEFAULT_REPLICATIONS};
use dlsim::potential::{reachable_state, verify_one_step_decrease, PotentialKind};
use dlsim::rng::{sim_rng, stream_seed};
use dlsim::stats::{fit_report, Family};
use dlsim::workloads::{DagSpec, InitialDistribution, WorkloadSpec};
use serde::Serialize;
use serde_json::json;

#[derive(Parser, Debug)]
#[command(
    name = "dlsim",
    version,
    about = "Simulate and analyse randomized work stealing"
)]
struct Cli {
    /// Seed for every random choice; overrides the seed in a config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the analysis constants and, given W, the makespan bounds.
    Bounds(BoundsArgs),
    /// Simulate a single run.
    Run(RunArgs),
    /// Run a sweep described by a JSON file and write its CSV.
    Sweep(SweepArgs),
    /// Fit GEV and Gaussian models to a CSV column.
    Fit(FitArgs),
    /// Regress the steal overhead R/m on log2 W for unit tasks.
    Slope(SlopeArgs),
    /// Compare steal requests of standard and cooperative stealing.
    CoopRatio(CoopRatioArgs),
    /// Replay the best-case schedule on 2^(k+1) tasks and 2^k processors.
    LowerBound { k: u32 },
    /// Monte-Carlo check of the one-slot potential contraction.
    VerifyPotential(VerifyArgs),
}

#[derive(Args, Debug)]
struct BoundsArgs {
    #[arg(long, default_value_t = 1024)]
    m: usize,
    /// Total work.
    #[arg(long = "W")]
    w: Option<f64>,
    /// Critical path, for the DAG bound.
    #[arg(long = "D")]
    d: Option<f64>,
    /// Exponent at which λ of the power potential is also reported.
    #[arg(long)]
    nu: Option<f64>,
    /// Task count, for the weighted bound.
    #[arg(long)]
    n: Option<f64>,
    /// Largest processing time, for the weighted bound.
    #[arg(long)]
    p_max: Option<f64>,
    /// Initial potential; defaults to the all-on-one-processor value.
    #[arg(long)]
    phi0: Option<f64>,
    /// Tail level for the high-probability bounds.
    #[arg(long, default_value_t = 0.01)]
    eps: f64,
}

/// Workload flags shared by `run` and `verify-potential`.
#[derive(Args, Debug)]
struct WorkloadArgs {
    #[arg(long, default_value = "unit")]
    mode: Mode,
    #[arg(long, default_value_t = 16)]
    m: usize,
    /// Total work; weighted tasks draw processing times in 1..=10.
    #[arg(long = "W", default_value_t = 4096)]
    w: u64,
    /// Cooperative stealing (unit tasks).
    #[arg(long)]
    coop: bool,
    /// Scatter unit or weighted tasks uniformly instead of all on processor 0.
    #[arg(long)]
    balls_and_bins: bool,
    /// DAG edge-list file; otherwise a layered DAG of about W nodes is drawn.
    #[arg(long)]
    dag: Option<PathBuf>,
    /// Drawn DAGs get a critical path of about W / 4m.
    #[arg(long)]
    long_path: bool,
}

#[derive(Args, Debug)]
struct RunArgs {
    /// JSON run configuration; replaces the workload flags.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    workload: WorkloadArgs,
    /// Include the per-slot potential series.
    #[arg(long)]
    record_potential: bool,
}

#[derive(Args, Debug)]
struct SweepArgs {
    /// JSON sweep specification.
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    reps: Option<usize>,
}

#[derive(Args, Debug)]
struct FitArgs {
    /// CSV file with a header row.
    #[arg(long, alias = "config")]
    input: PathBuf,
    #[arg(long, default_value = "cmax")]
    column: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SlopeArgs {
    #[arg(long, default_value_t = 1024)]
    m: usize,
    /// Work values, comma separated (default 2^13 through 2^20).
    #[arg(long = "W", value_delimiter = ',')]
    w: Vec<u64>,
    #[arg(long, default_value_t = DEFAULT_REPLICATIONS)]
    reps: usize,
    #[arg(long)]
    coop: bool,
}

#[derive(Args, Debug)]
struct CoopRatioArgs {
    #[arg(long, default_value_t = 128)]
    m: usize,
    #[arg(long = "W", default_value_t = 1 << 17)]
    w: u64,
    #[arg(long, default_value_t = DEFAULT_REPLICATIONS)]
    reps: usize,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[command(flatten)]
    workload: WorkloadArgs,
    /// Exponent of the power potential; unit tasks then use `Σ w^ν`
    /// (standard) or `Σ (w^ν - w)` (cooperative, default 3).
    #[arg(long)]
    nu: Option<f64>,
    #[arg(long, default_value_t = 100)]
    states: usize,
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
}

/// A model check that did not hold.
#[derive(Debug)]
struct ModelFailure(String);

impl std::fmt::Display for ModelFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ModelFailure {}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is::<ModelFailure>() => {
            eprintln!("dlsim: check failed: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("dlsim: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(cli: &Cli) -> Result<()> {
    let seed = cli.seed;
    match &cli.command {
        Command::Bounds(a) => cmd_bounds(a),
        Command::Run(a) => cmd_run(a, seed),
        Command::Sweep(a) => cmd_sweep(a, seed),
        Command::Fit(a) => cmd_fit(a),
        Command::Slope(a) => cmd_slope(a, seed),
        Command::CoopRatio(a) => cmd_coop_ratio(a, seed),
        Command::LowerBound { k } => cmd_lower_bound(*k),
        Command::VerifyPotential(a) => cmd_verify(a, seed),
    }
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    emit(&serde_json::to_string_pretty(value)?)
}

/// Writes one line to stdout; a closed pipe (e.g. `| head`) is not an error.
fn emit(line: &str) -> Result<()> {
    let mut out = std::io::stdout().lock();
    match writeln!(out, "{line}").and_then(|()| out.flush()) {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        r => r.context("cannot write to stdout"),
    }
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    serde_json::from_str(&read_text(path)?)
        .with_context(|| format!("malformed JSON in {}", path.display()))
}

fn cmd_bounds(a: &BoundsArgs) -> Result<()> {
    let c = bounds::constants(a.m)?;
    let mut out = json!({
        "m": a.m,
        "unit_2_lambda_2": c.unit,
        "power_nu_star": c.nu_star,
        "power_min_nu_lambda": c.power_min,
        "coop_3_lambda_3": c.coop3,
        "dag_3_lambda": c.dag,
        "dag_3_lambda_limit": 3.0 * bounds::unit_lambda_limit(),
    });
    if let Some(nu) = a.nu {
        out["nu"] = json!(nu);
        out["power_nu_lambda_nu"] = json!(nu * bounds::lambda(Scenario::PowerNu, a.m, nu)?);
        out["coop_nu_lambda_nu"] = json!(nu * bounds::lambda(Scenario::Coop, a.m, nu)?);
    }
    if let Some(w) = a.w {
        if !(a.eps > 0.0 && a.eps < 1.0) {
            bail!("--eps must lie in (0, 1)");
        }
        let mf = a.m as f64;
        let inputs = BoundInputs {
            w,
            m: a.m,
            phi0: Some(a.phi0.unwrap_or(w * w * (1.0 - 1.0 / mf))),
            n: a.n,
            p_max: a.p_max,
            d: a.d,
        };
        let mut by_kind = serde_json::Map::new();
        for which in [
            BoundKind::UnitVariance,
            BoundKind::UnitPower,
            BoundKind::UnitCooperative,
            BoundKind::Weighted,
            BoundKind::Dag,
        ] {
            match makespan_bound(which, &inputs) {
                Ok(b) => {
                    by_kind.insert(
                        which.to_string(),
                        json!({ "expected": b.expected, "tail": b.tail(a.eps) }),
                    );
                }
                Err(BoundsError::MissingInput { .. }) => {}
                Err(e) => return Err(e.into()),
            }
        }
        out["W"] = json!(w);
        out["eps"] = json!(a.eps);
        out["bounds"] = serde_json::Value::Object(by_kind);
    }
    print_json(&out)
}

fn build_config(a: &WorkloadArgs, seed: u64) -> Result<SimConfig> {
    let workload = match (a.mode, &a.dag) {
        (Mode::Dag, Some(path)) => WorkloadSpec::DagTasks {
            dag: DagSpec::parse_edge_list(&read_text(path)?)
                .with_context(|| format!("bad DAG in {}", path.display()))?,
        },
        (_, Some(_)) => bail!("--dag needs --mode dag"),
        (mode, None) => {
            harness::workload_for(mode, a.w, a.m, a.long_path, stream_seed(seed, u64::MAX, 0))?
        }
    };
    let mut cfg = SimConfig {
        mode: a.mode,
        m: a.m,
        workload,
        seed,
        ..SimConfig::unit(a.m, 0, seed)
    };
    cfg.protocol.cooperative = a.coop;
    if a.balls_and_bins {
        cfg.initial = InitialDistribution::BallsAndBins;
    }
    cfg.validate().map_err(EngineError::from)?;
    Ok(cfg)
}

fn check_identity(cfg: &SimConfig, cmax: u64, work: u64, steals: u64) -> Result<()> {
    if cfg.m as u64 * cmax != work + steals {
        return Err(ModelFailure(format!(
            "m*cmax = {} but W + R = {}",
            cfg.m as u64 * cmax,
            work + steals
        ))
        .into());
    }
    Ok(())
}

fn cmd_run(a: &RunArgs, seed: Option<u64>) -> Result<()> {
    let mut cfg = match &a.config {
        Some(path) => {
            let mut c: SimConfig = read_json(path)?;
            if let Some(s) = seed {
                c.seed = s;
            }
            c
        }
        None => build_config(&a.workload, seed.unwrap_or(0))?,
    };
    cfg.record_potential |= a.record_potential;
    let r = run(&cfg)?;
    check_identity(&cfg, r.cmax, r.work, r.steals_total)?;
    print_json(&json!({ "mode": cfg.mode, "m": cfg.m, "seed": cfg.seed, "result": r }))
}

fn cmd_sweep(a: &SweepArgs, seed: Option<u64>) -> Result<()> {
    let mut spec: SweepSpec = read_json(&a.config)?;
    if let Some(s) = seed {
        spec.master_seed = s;
    }
    if let Some(r) = a.reps {
        spec.replications = r;
    }
    let rows = harness::write_sweep(&spec, &a.out, Execution::Parallel)?;
    eprintln!("dlsim: wrote {} rows to {}", rows.len(), a.out.display());
    for r in &rows {
        if r.m as u64 * r.cmax != r.w + r.steals_total {
            return Err(
                ModelFailure(format!("row with seed {} breaks m*cmax = W + R", r.seed)).into(),
            );
        }
    }
    print_json(&json!({
        "rows": rows.len(),
        "replications": spec.replications,
        "master_seed": spec.master_seed,
        "out": a.out,
    }))
}

fn cmd_fit(a: &FitArgs) -> Result<()> {
    let xs = harness::read_column(&a.input, &a.column)?;
    let gev = fit_report(&xs, Family::Gev)?;
    let gaussian = fit_report(&xs, Family::Gaussian)?;
    let out = json!({ "column": a.column, "n": xs.len(), "gev": gev, "gaussian": gaussian });
    if let Some(path) = &a.out {
        std::fs::write(path, serde_json::to_string_pretty(&out)?)
            .with_context(|| format!("cannot write {}", path.display()))?;
    }
    print_json(&out)
}

fn cmd_slope(a: &SlopeArgs, seed: Option<u64>) -> Result<()> {
    let ws: Vec<u64> = if a.w.is_empty() {
        (13..=20).map(|e| 1u64 << e).collect()
    } else {
        a.w.clone()
    };
    print_json(&harness::slope_experiment(
        a.m,
        &ws,
        a.reps,
        a.coop,
        seed.unwrap_or(0),
    )?)
}

fn cmd_coop_ratio(a: &CoopRatioArgs, seed: Option<u64>) -> Result<()> {
    print_json(&harness::coop_ratio_experiment(
        a.m,
        a.w,
        a.reps,
        seed.unwrap_or(0),
    )?)
}

fn cmd_lower_bound(k: u32) -> Result<()> {
    match lower_bound_run(k) {
        Ok(cmax) => emit(&format!(
            "k={k} m={} W={} cmax={cmax}",
            1u64 << k,
            1u64 << (k + 1)
        )),
        Err(e @ BoundsError::LowerBoundMismatch { .. }) => Err(ModelFailure(e.to_string()).into()),
        Err(e) => Err(e.into()),
    }
}

fn cmd_verify(a: &VerifyArgs, seed: Option<u64>) -> Result<()> {
    let w = &a.workload;
    let (scenario, kind) = match (w.mode, w.coop, a.nu) {
        (Mode::Dag, _, _) => (Scenario::Dag, PotentialKind::AbpSquare),
        (Mode::Unit, false, None) => (Scenario::Unit, PotentialKind::Variance),
        (Mode::Unit, false, Some(nu)) => (Scenario::PowerNu, PotentialKind::Power { nu }),
        (Mode::Unit, true, nu) => {
            let nu = nu.unwrap_or(3.0);
            (Scenario::Coop, PotentialKind::PowerMinus { nu })
        }
        (Mode::Weighted, ..) => bail!("verify-potential covers unit and dag modes"),
    };
    let nu = match kind {
        PotentialKind::Power { nu } | PotentialKind::PowerMinus { nu } => nu,
        _ => 2.0,
    };
    if nu <= 1.0 {
        bail!("--nu must exceed 1");
    }
    if w.m < 2 {
        bail!("--m must be at least 2");
    }
    let master = seed.unwrap_or(0);
    let (mut passed, mut failed, mut skipped) = (0usize, 0usize, 0usize);
    let mut worst = f64::NEG_INFINITY;
    for i in 0..a.states {
        let cfg = build_config(w, stream_seed(master, 0, i as u64))?;
        let mut rng = sim_rng(stream_seed(master, 1, i as u64));
        let Some(state) = reachable_state(&cfg, &mut rng)? else {
            skipped += 1;
            continue;
        };
        let rep = verify_one_step_decrease(
            &state,
            kind,
            |r| bounds::h_of(scenario, r, w.m, nu),
            a.samples,
            &mut rng,
        )?;
        if rep.skipped {
            skipped += 1;
        } else if rep.passed {
            passed += 1;
        } else {
            failed += 1;
        }
        if rep.bound > 0.0 {
            worst = worst.max(rep.exact_next.unwrap_or(rep.mean_next) / rep.bound);
        }
    }
    print_json(&json!({
        "scenario": scenario,
        "potential": kind,
        "states": a.states,
        "samples": a.samples,
        "passed": passed,
        "failed": failed,
        "skipped": skipped,
        "max_ratio_to_bound": if worst.is_finite() { Some(worst) } else { None },
    }))?;
    if failed > 0 {
        return Err(
            ModelFailure(format!("{failed} of {} states exceeded h(r) Φ", a.states)).into(),
        );
    }
    Ok(())
}
