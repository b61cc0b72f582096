use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use semirandom::engine::{write_sweep_csv, write_trajectory_csv};
use semirandom::oracle::{run_oracle_suite, SuiteOptions};
use semirandom::strategy::TreeSampling;
use semirandom::{
    generate_target, run_ensemble, run_once, EngineError, Process, RoundMode, RunConfig,
    StrategyVariant, TargetSpec,
};

#[derive(Parser)]
#[command(name = "semirandom", version, about = "Builder strategies in the semirandom star and tree processes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the strategy once (or an ensemble with --runs) and write a JSON report.
    Run(RunArgs),
    /// Run an ensemble for every cell of a process x delta x n grid and write a CSV matrix.
    Sweep(SweepArgs),
    /// Check the exact spanning-tree identities and tail bounds.
    VerifyOracles(OracleArgs),
    /// Write a target graph as an edge list.
    GenTarget(GenArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ProcessArg {
    Star,
    Tree,
}

impl From<ProcessArg> for Process {
    fn from(p: ProcessArg) -> Self {
        match p {
            ProcessArg::Star => Process::Star,
            ProcessArg::Tree => Process::Tree,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Regular,
    CliqueFactor,
    Cycle,
    Matching,
    Grid,
    File,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Fixed,
    Poisson,
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    Paper,
    LargeDeltaShortcut,
}

#[derive(Clone, Copy, ValueEnum)]
enum SamplingArg {
    Intersection,
    FullTree,
}

#[derive(Args, Clone)]
struct TargetArgs {
    /// Target graph family.
    #[arg(long, value_enum, default_value = "regular")]
    target: FamilyArg,
    /// Edge-list file for --target file.
    #[arg(long)]
    target_file: Option<PathBuf>,
    /// Maximum degree parameter for regular and clique-factor targets.
    #[arg(long)]
    delta: Option<usize>,
}

impl TargetArgs {
    fn spec(&self) -> Result<TargetSpec> {
        family_spec(self.target, self.delta, self.target_file.as_ref())
    }
}

fn family_spec(family: FamilyArg, delta: Option<usize>, file: Option<&PathBuf>) -> Result<TargetSpec> {
    let need_delta = || delta.context("--delta is required for this target family");
    let natural = |d: usize, name: &str| match delta {
        Some(x) if x != d => bail!("{name} targets have delta {d}, got --delta {x}"),
        _ => Ok(()),
    };
    Ok(match family {
        FamilyArg::Regular => TargetSpec::Regular { delta: need_delta()? },
        FamilyArg::CliqueFactor => TargetSpec::CliqueFactor { delta: need_delta()? },
        FamilyArg::Cycle => {
            natural(2, "cycle")?;
            TargetSpec::Cycle
        }
        FamilyArg::Matching => {
            natural(1, "matching")?;
            TargetSpec::Matching
        }
        FamilyArg::Grid => TargetSpec::Grid,
        FamilyArg::File => TargetSpec::File {
            path: file.context("--target-file is required for --target file")?.clone(),
        },
    })
}

#[derive(Args, Clone)]
struct CommonArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "poisson")]
    rounds_mode: ModeArg,
    #[arg(long, value_enum, default_value = "paper")]
    strategy_variant: VariantArg,
    /// How tree offers are revealed on the edges Builder cares about.
    #[arg(long, value_enum, default_value = "intersection")]
    tree_sampling: SamplingArg,
    /// Final-phase round cap, as a multiple of delta*n/2.
    #[arg(long, default_value_t = 100.0)]
    final_round_factor: f64,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

impl CommonArgs {
    fn config(&self, process: Process, target: TargetSpec, n: usize) -> RunConfig {
        let mut c = RunConfig::new(process, target, n, self.seed);
        c.round_mode = match self.rounds_mode {
            ModeArg::Fixed => RoundMode::Fixed,
            ModeArg::Poisson => RoundMode::Poisson,
        };
        c.variant = match self.strategy_variant {
            VariantArg::Paper => StrategyVariant::Paper,
            VariantArg::LargeDeltaShortcut => StrategyVariant::LargeDeltaShortcut,
        };
        c.tree_sampling = match self.tree_sampling {
            SamplingArg::Intersection => TreeSampling::Intersection,
            SamplingArg::FullTree => TreeSampling::FullTree,
        };
        c.final_round_factor = self.final_round_factor;
        c
    }
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, value_enum)]
    process: ProcessArg,
    #[command(flatten)]
    target: TargetArgs,
    #[arg(long)]
    n: usize,
    /// Independent runs with seeds seed, seed+1, ...
    #[arg(long, default_value_t = 1)]
    runs: usize,
    /// Rounds between trajectory snapshots (default n).
    #[arg(long)]
    snapshot_every: Option<u64>,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, value_enum, value_delimiter = ',', default_value = "star")]
    process: Vec<ProcessArg>,
    #[arg(long, value_enum, default_value = "regular")]
    target: FamilyArg,
    #[arg(long, value_delimiter = ',', required = true)]
    delta: Vec<usize>,
    #[arg(long, value_delimiter = ',', required = true)]
    n: Vec<usize>,
    #[arg(long, default_value_t = 10)]
    runs: usize,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long, default_value_t = 8)]
    max_n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Drop one tree from every enumeration (negative control).
    #[arg(long, hide = true)]
    tamper: bool,
}

#[derive(Args)]
struct GenArgs {
    #[command(flatten)]
    target: TargetArgs,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Failure kinds mapped to exit codes 1 and 2.
enum Outcome {
    Ok,
    Failed,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::VerifyOracles(a) => cmd_verify(a),
        Command::GenTarget(a) => cmd_gen(a),
    };
    match result {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::Failed) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            let usage = e.downcast_ref::<EngineError>().is_some_and(|e| {
                matches!(e, EngineError::Config(_) | EngineError::Graph(semirandom::GraphError::Infeasible(_)))
            }) || e.downcast_ref::<UsageError>().is_some();
            ExitCode::from(if usage { 2 } else { 1 })
        }
    }
}

#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage<T>(r: Result<T>) -> Result<T> {
    r.map_err(|e| UsageError(format!("{e:#}")).into())
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

fn cmd_run(a: RunArgs) -> Result<Outcome> {
    let spec = usage(a.target.spec())?;
    let mut cfg = a.common.config(a.process.into(), spec, a.n);
    cfg.snapshot_every = a.snapshot_every;
    fs::create_dir_all(&a.common.out)?;
    if a.runs <= 1 {
        let report = run_once(&cfg)?;
        write_json(&a.common.out.join("report.json"), &report)?;
        let traj = fs::File::create(a.common.out.join("trajectory.csv"))?;
        write_trajectory_csv(traj, cfg.seed, &report.trajectory)?;
        println!(
            "{} on {} (n={}, delta={}): success={} rounds={} normalized_cost={:.4} budget={:.4}",
            cfg.process.as_str(),
            cfg.target.name(),
            report.config.n,
            report.delta,
            report.success,
            report.total_rounds,
            report.normalized_cost,
            report.budget_normalized
        );
        for d in report.diagnostics() {
            println!("  {d}");
        }
        return Ok(if report.success { Outcome::Ok } else { Outcome::Failed });
    }
    let e = run_ensemble(&cfg, a.runs, a.common.workers)?;
    write_json(&a.common.out.join("ensemble.json"), &e)?;
    println!(
        "{} runs: success_rate={:.4} mean_cost={:.4} std={:.4} budget={:.4}",
        e.runs, e.success_rate, e.mean_cost, e.std_cost, e.budget_normalized
    );
    Ok(if e.successes == e.runs { Outcome::Ok } else { Outcome::Failed })
}

fn cmd_sweep(a: SweepArgs) -> Result<Outcome> {
    fs::create_dir_all(&a.common.out)?;
    let mut rows = Vec::new();
    for &p in &a.process {
        for &d in &a.delta {
            for &n in &a.n {
                let spec = usage(family_spec(a.target, Some(d), None))?;
                let cfg = a.common.config(p.into(), spec, n);
                let e = run_ensemble(&cfg, a.runs, a.common.workers)?;
                println!(
                    "{} delta={d} n={n}: success_rate={:.4} mean_cost={:.4}",
                    cfg.process.as_str(),
                    e.success_rate,
                    e.mean_cost
                );
                rows.push(e);
            }
        }
    }
    write_sweep_csv(fs::File::create(a.common.out.join("sweep.csv"))?, &rows)?;
    write_json(&a.common.out.join("sweep.json"), &rows)?;
    Ok(if rows.iter().all(|e| e.successes == e.runs) {
        Outcome::Ok
    } else {
        Outcome::Failed
    })
}

fn cmd_verify(a: OracleArgs) -> Result<Outcome> {
    let opts = SuiteOptions {
        max_n: a.max_n,
        tamper: a.tamper,
        seed: a.seed,
        ..SuiteOptions::default()
    };
    let checks = run_oracle_suite(&opts);
    let width = checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
    let mut out = io::stdout().lock();
    for c in &checks {
        writeln!(out, "{:<width$}  {}  {}", c.name, if c.passed { "PASS" } else { "FAIL" }, c.detail)?;
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    writeln!(out, "{} checks, {failed} failed", checks.len())?;
    Ok(if failed == 0 { Outcome::Ok } else { Outcome::Failed })
}

fn cmd_gen(a: GenArgs) -> Result<Outcome> {
    let spec = usage(a.target.spec())?;
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let h = generate_target(&spec, a.n, &mut rng).map_err(EngineError::from)?;
    let text = h.to_edge_list();
    match a.out {
        Some(p) => fs::write(&p, text).with_context(|| format!("writing {}", p.display()))?,
        None => io::stdout().write_all(text.as_bytes())?,
    }
    Ok(Outcome::Ok)
}
