//! Command-line harness: build instances, run the algorithms under the
//! simulator, verify against the brute-force oracle, and emit reports.
//!
//! Exit codes: 0 all checks passed, 1 a statistical check failed, 2 a hard
//! invariant was violated (spurious triple or bandwidth fault), 3
//! configuration error.

use clap::{Args, Parser, Subcommand};
use congest_triangles::experiment::{
    run_experiment, scaling_study, verify_lemmas, AlgoKind, ExperimentConfig, ExperimentError,
    InstanceConfig, InstanceKind, LemmaConfig, ScalingConfig,
};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Default output directory; reports land here when `--out` names a bare
/// file.
const OUT_DIR_ENV: &str = "CONGEST_TRIANGLES_OUT_DIR";

#[derive(Parser)]
#[command(name = "congest-triangles", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one algorithm over seeded instances and compare with the oracle
    Run(RunArgs),
    /// Measure round scaling over an instance-size grid
    Scale(ScaleArgs),
    /// Verify the statistical guarantees of the building blocks
    Lemmas(LemmaArgs),
    /// Print the brute-force triangle listing of an instance
    Oracle(OracleArgs),
}

#[derive(Args, Clone)]
struct InstanceArgs {
    /// Instance family: gnp | heavy-edge | sparse-triangles | triangle-free
    #[arg(long = "gen", default_value = "gnp")]
    generator: String,
    /// Vertex count
    #[arg(long, default_value_t = 64)]
    n: usize,
    /// Edge probability (gnp) or cross-edge density (triangle-free)
    #[arg(long, default_value_t = 0.5)]
    p: f64,
    /// Common-neighbor count of the designated edge (heavy-edge)
    #[arg(long, default_value_t = 16)]
    heavy: usize,
    /// Number of planted vertex-disjoint triangles (sparse-triangles)
    #[arg(long, default_value_t = 4)]
    planted: usize,
    /// Background edge probability of the planted families
    #[arg(long, default_value_t = 0.1)]
    background: f64,
    /// Load the instance from an edge-list file instead of generating
    #[arg(long)]
    graph_file: Option<PathBuf>,
}

impl InstanceArgs {
    fn to_config(&self) -> Result<InstanceConfig, String> {
        if let Some(path) = &self.graph_file {
            return Ok(InstanceConfig { n: self.n, kind: InstanceKind::File { path: path.clone() } });
        }
        let kind = match self.generator.as_str() {
            "gnp" => InstanceKind::Gnp { p: self.p },
            "heavy-edge" => {
                InstanceKind::HeavyEdge { min_common: self.heavy, background: self.background }
            }
            "sparse-triangles" => {
                InstanceKind::SparseTriangles { count: self.planted, background: self.background }
            }
            "triangle-free" => InstanceKind::TriangleFree { density: self.p },
            other => return Err(format!("unknown generator {other:?}")),
        };
        Ok(InstanceConfig { n: self.n, kind })
    }
}

#[derive(Args, Clone)]
struct SeedArgs {
    /// Base seed; trials use seed, seed+1, ...
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of trials
    #[arg(long, default_value_t = 20)]
    trials: u64,
    /// Explicit comma-separated seed list (overrides --seed/--trials)
    #[arg(long, value_delimiter = ',')]
    seeds: Vec<u64>,
}

impl SeedArgs {
    fn seed_list(&self) -> Vec<u64> {
        if self.seeds.is_empty() {
            (self.seed..self.seed + self.trials).collect()
        } else {
            self.seeds.clone()
        }
    }
}

#[derive(Args, Clone)]
struct OutputArgs {
    /// Output path; bare file names resolve against $CONGEST_TRIANGLES_OUT_DIR
    #[arg(long)]
    out: Option<PathBuf>,
    /// report (JSON) or csv
    #[arg(long, default_value = "report")]
    format: String,
}

#[derive(Args)]
struct RunArgs {
    /// a1 | a2 | a3 | find | list | noop
    #[arg(long, default_value = "list")]
    algo: AlgoKind,
    #[command(flatten)]
    instance: InstanceArgs,
    #[command(flatten)]
    seeds: SeedArgs,
    /// Heavy/light threshold exponent override
    #[arg(long)]
    eps: Option<f64>,
    /// Channel capacity in id widths
    #[arg(long, default_value_t = 2)]
    beta: u32,
    /// Failure-probability target of the finding composition
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    #[arg(long, default_value_t = 1 << 20)]
    max_rounds: u64,
    /// Skip materializing node outputs (rounds-only run)
    #[arg(long)]
    rounds_only: bool,
    /// Fail (exit 1) when the success rate falls below this value
    #[arg(long)]
    min_success_rate: Option<f64>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct ScaleArgs {
    #[arg(long, default_value = "list")]
    algo: AlgoKind,
    /// Ascending comma-separated instance sizes
    #[arg(long = "n-grid", value_delimiter = ',', default_value = "64,128,256,512")]
    n_grid: Vec<usize>,
    #[command(flatten)]
    instance: InstanceArgs,
    #[command(flatten)]
    seeds: SeedArgs,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long, default_value_t = 2)]
    beta: u32,
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    #[arg(long, default_value_t = 1 << 20)]
    max_rounds: u64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct LemmaArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Hash samples per range
    #[arg(long, default_value_t = 100_000)]
    hash_trials: u64,
    /// Cover samples for the capture and settled-node checks
    #[arg(long, default_value_t = 500)]
    samples: u64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    output: OutputArgs,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Scale(args) => cmd_scale(args),
        Command::Lemmas(args) => cmd_lemmas(args),
        Command::Oracle(args) => cmd_oracle(args),
    };
    match code {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}

fn cmd_run(args: RunArgs) -> Result<ExitCode, ExperimentError> {
    let instance = args.instance.to_config().map_err(ExperimentError::Config)?;
    let mut cfg = ExperimentConfig::new(instance, args.algo, args.seeds.seed_list());
    cfg.algo_cfg.eps = args.eps;
    cfg.beta = args.beta;
    cfg.delta = args.delta;
    cfg.max_rounds = args.max_rounds;
    cfg.collect_output = !args.rounds_only;

    let report = run_experiment(&cfg)?;
    let rendered = match args.output.format.as_str() {
        "report" => report.to_json(),
        "csv" => {
            let mut out = String::from("seed,rounds,halted,target,found,missed,spurious,success\n");
            for t in &report.trials {
                out.push_str(&format!(
                    "{},{},{},{},{},{},{},{}\n",
                    t.seed, t.rounds, t.halted, t.target_size, t.found, t.missed, t.spurious, t.success
                ));
            }
            out
        }
        other => return Err(ExperimentError::Config(format!("unknown format {other:?}"))),
    };
    write_output(&args.output, &rendered)?;

    eprintln!(
        "{} trials: success rate {:.3} [{:.3}, {:.3}], rounds median {} (x{:.2} of {})",
        report.success.trials,
        report.success.rate,
        report.success.ci_low,
        report.success.ci_high,
        report.rounds.median,
        report.rounds.median_ratio,
        report.rounds.reference_curve,
    );
    let gate_ok = args.min_success_rate.map_or(true, |min| report.success.rate >= min);
    Ok(if report.passed && gate_ok { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn cmd_scale(args: ScaleArgs) -> Result<ExitCode, ExperimentError> {
    let instance = args.instance.to_config().map_err(ExperimentError::Config)?;
    let mut cfg = ScalingConfig::new(args.algo, instance, args.n_grid, args.seeds.seed_list());
    cfg.algo_cfg.eps = args.eps;
    cfg.beta = args.beta;
    cfg.delta = args.delta;
    cfg.max_rounds = args.max_rounds;

    let table = scaling_study(&cfg)?;
    let rendered = match args.output.format.as_str() {
        "report" => table.to_json(),
        "csv" => table.to_csv(),
        other => return Err(ExperimentError::Config(format!("unknown format {other:?}"))),
    };
    write_output(&args.output, &rendered)?;

    for row in &table.rows {
        eprintln!(
            "n {:>5}: median {} rounds, reference {:.1}, ratio {:.3}{}",
            row.n,
            row.median_rounds,
            row.reference,
            row.ratio,
            if row.excluded > 0 { format!(" ({} runs excluded)", row.excluded) } else { String::new() }
        );
    }
    eprintln!("ratio spread across grid: {:.3} (flag threshold 3)", table.ratio_spread);
    Ok(if table.passed { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn cmd_lemmas(args: LemmaArgs) -> Result<ExitCode, ExperimentError> {
    let cfg = LemmaConfig {
        seed: args.seed,
        hash_trials: args.hash_trials,
        capture_samples: args.samples,
        settle_samples: args.samples,
        ..Default::default()
    };
    let report = verify_lemmas(&cfg)?;
    write_output(&args.output, &report.to_json())?;
    for check in &report.checks {
        eprintln!(
            "{} {:<40} observed {:>10.6} bound {:>10.6} (3 sigma {:.6})",
            if check.pass { "pass" } else { "FAIL" },
            check.name,
            check.observed,
            check.bound,
            3.0 * check.sigma,
        );
    }
    Ok(if report.passed { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn cmd_oracle(args: OracleArgs) -> Result<ExitCode, ExperimentError> {
    let instance = args.instance.to_config().map_err(ExperimentError::Config)?;
    let graph = instance.build(args.seed)?;
    let listing = graph.enumerate_triangles().to_canonical_lines();
    write_output(&args.output, &listing)?;
    Ok(ExitCode::SUCCESS)
}

/// Writes to `--out` (resolving bare names against the env directory) or
/// stdout when no path was given.
fn write_output(out: &OutputArgs, contents: &str) -> Result<(), ExperimentError> {
    match &out.out {
        None => {
            print!("{contents}");
            Ok(())
        }
        Some(path) => {
            let resolved = match std::env::var_os(OUT_DIR_ENV) {
                Some(dir) if path.is_relative() => Path::new(&dir).join(path),
                _ => path.clone(),
            };
            if let Some(parent) = resolved.parent() {
                if !parent.as_os_str().is_empty() {
                    std::fs::create_dir_all(parent)?;
                }
            }
            std::fs::write(&resolved, contents)?;
            eprintln!("wrote {}", resolved.display());
            Ok(())
        }
    }
}
