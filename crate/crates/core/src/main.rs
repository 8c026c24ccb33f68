use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};

use mirp::beam::{write_beam_dump, BeamConfig};
use mirp::evaluator::{evaluate_full, write_trace};
use mirp::greedy::GreedyConfig;
use mirp::harness::{self, HarnessError, RunConfig, RunRecord, Stage, SweepConfig, SweepParam};
use mirp::ils::{write_ils_dump, IlsConfig};
use mirp::instance::{generate_toy, Instance};
use mirp::money::Money;
use mirp::solution::{parse_calls, Solution, SolutionError};
use mirp::validator;

#[derive(Parser)]
#[command(name = "mirp", version, about = "Beam search + ILS solver for maritime inventory routing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the staged pipeline on one instance.
    Solve(SolveArgs),
    /// Run the pipeline for several values of one parameter.
    Sweep(SweepArgs),
    /// Check a solution file against the network model.
    Validate {
        instance: PathBuf,
        solution: PathBuf,
        /// Write the per-period and per-call trace here.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Write a generated toy instance.
    GenToy {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        consumers: usize,
        #[arg(long, default_value_t = 12)]
        horizon: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args, Clone)]
struct PipelineArgs {
    #[arg(long, default_value = "ils", value_parser = parse_stage)]
    stage: Stage,
    #[arg(long, default_value_t = 100)]
    beam_width: usize,
    #[arg(long, default_value_t = 2)]
    max_children: usize,
    #[arg(long, default_value_t = 3)]
    greedy_samples: usize,
    /// Run a single seed.
    #[arg(long, conflicts_with = "seeds")]
    seed: Option<u64>,
    /// Run seeds 1..=K.
    #[arg(long)]
    seeds: Option<u64>,
    #[arg(long, default_value_t = 90_000.0)]
    time_limit: f64,
    #[arg(long, default_value_t = 640)]
    ils_iterations: usize,
    /// Run everything on the calling thread.
    #[arg(long)]
    serial: bool,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    instance: PathBuf,
    #[command(flatten)]
    pipeline: PipelineArgs,
    #[arg(long)]
    best_known: Option<String>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Per-level beam CSV.
    #[arg(long)]
    dump_beam: Option<PathBuf>,
    /// Per-iteration ILS CSV.
    #[arg(long)]
    dump_ils: Option<PathBuf>,
    /// Also write the trace of the best solution.
    #[arg(long)]
    trace: bool,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, value_parser = parse_param)]
    param: SweepParam,
    /// Comma-separated values.
    #[arg(long, value_delimiter = ',', required = true)]
    values: Vec<usize>,
    /// Instance files; the built-in toy suite is used when none is given.
    #[arg(long)]
    instance: Vec<PathBuf>,
    /// Keep N * q at this value in a q sweep.
    #[arg(long)]
    inverse_n: Option<usize>,
    #[command(flatten)]
    pipeline: PipelineArgs,
    /// Output CSV; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_stage(s: &str) -> Result<Stage, String> {
    s.parse()
}

fn parse_param(s: &str) -> Result<SweepParam, String> {
    s.parse()
}

enum Failure {
    Config(String),
    Violations,
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<mirp::instance::InstanceError> for Failure {
    fn from(e: mirp::instance::InstanceError) -> Self {
        Failure::Config(e.to_string())
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve(args) => solve(args),
        Command::Sweep(args) => run_sweep(args),
        Command::Validate { instance, solution, trace } => validate(&instance, &solution, trace.as_deref()),
        Command::GenToy { seed, consumers, horizon, out } => gen_toy(seed, consumers, horizon, &out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Violations) => ExitCode::from(3),
    }
}

fn run_config(p: &PipelineArgs) -> Result<RunConfig, Failure> {
    if !p.time_limit.is_finite() || p.time_limit <= 0.0 {
        return Err(Failure::Config("time limit must be a positive number of seconds".into()));
    }
    let seeds = match (p.seed, p.seeds) {
        (Some(s), _) => vec![s],
        (None, Some(k)) => (1..=k).collect(),
        (None, None) => (1..=10).collect(),
    };
    Ok(RunConfig {
        beam: BeamConfig {
            beam_width: p.beam_width,
            max_children: p.max_children,
            greedy: GreedyConfig {
                q: p.greedy_samples,
                ..GreedyConfig::default()
            },
            parallel: !p.serial,
            ..BeamConfig::default()
        },
        ils: IlsConfig {
            iterations: p.ils_iterations,
            ..IlsConfig::default()
        },
        stage: p.stage,
        seeds,
        time_limit: Some(Duration::from_secs_f64(p.time_limit)),
        parallel: !p.serial,
        ..RunConfig::default()
    })
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

/// `base.csv` for one seed, `base_seed{S}.csv` when several seeds ran.
fn per_seed(path: &Path, seed: u64, many: bool) -> PathBuf {
    if !many {
        return path.to_path_buf();
    }
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("dump");
    let ext = path.extension().and_then(|s| s.to_str()).unwrap_or("csv");
    path.with_file_name(format!("{stem}_seed{seed}.{ext}"))
}

fn solve(args: SolveArgs) -> Result<(), Failure> {
    let inst = Instance::load(&args.instance)?;
    let mut cfg = run_config(&args.pipeline)?;
    cfg.best_known = match &args.best_known {
        Some(v) => Some(v.parse::<Money>().map_err(|e| Failure::Config(e.to_string()))?),
        None => None,
    };
    let record = harness::run(&inst, &cfg)?;
    let paths = harness::write_reports(std::slice::from_ref(&record), &args.out)?;

    let many = record.seeds.len() > 1;
    for s in &record.seeds {
        if let Some(p) = &args.dump_beam {
            write_beam_dump(&s.beam_levels, create(&per_seed(p, s.seed, many))?)?;
        }
        if let Some(p) = &args.dump_ils {
            write_ils_dump(&s.ils_trace, create(&per_seed(p, s.seed, many))?)?;
        }
    }
    let best = best_run(&record);
    std::fs::write(args.out.join("solution.txt"), best.best.to_text())?;
    if args.trace {
        write_trace(&evaluate_full(&best.best, &inst), create(&args.out.join("trace.txt"))?)?;
    }

    let mut out = io::stdout().lock();
    for s in &record.seeds {
        let stage = s.last_stage.map_or("none".to_string(), |l| l.to_string());
        writeln!(out, "seed {:>3}  stage {:<4}  cost {}", s.seed, stage, s.cost())?;
    }
    writeln!(out, "best {}  average {}", record.best_cost(), record.average_cost())?;
    if let (Some(b), Some(a)) = (record.best_gap(), record.average_gap()) {
        writeln!(out, "best gap {b:.2}%  average gap {a:.2}%")?;
    }
    writeln!(out, "total time {:.3} s", record.total_seconds())?;
    writeln!(out, "reports: {}, {}, {}", paths.main.display(), paths.stages.display(), paths.plot.display())?;
    Ok(())
}

fn best_run(record: &RunRecord) -> &harness::SeedRun {
    record
        .seeds
        .iter()
        .min_by_key(|s| (s.cost(), s.seed))
        .expect("at least one seed")
}

fn run_sweep(args: SweepArgs) -> Result<(), Failure> {
    let instances: Vec<(Instance, Option<Money>)> = if args.instance.is_empty() {
        harness::toy_suite().into_iter().map(|i| (i, None)).collect()
    } else {
        args.instance
            .iter()
            .map(|p| Instance::load(p).map(|i| (i, None)))
            .collect::<Result<_, _>>()?
    };
    let cfg = SweepConfig {
        param: args.param,
        values: args.values,
        inverse_n: args.inverse_n,
        base: run_config(&args.pipeline)?,
    };
    let table = harness::sweep(&instances, &cfg)?;
    match &args.out {
        Some(p) => table.write_csv(create(p)?)?,
        None => table.write_csv(io::stdout().lock())?,
    }
    Ok(())
}

fn validate(instance: &Path, solution: &Path, trace: Option<&Path>) -> Result<(), Failure> {
    let inst = Instance::load(instance)?;
    let text = std::fs::read_to_string(solution)?;
    let calls = parse_calls(&text).map_err(|e| Failure::Config(e.to_string()))?;
    let sol = match Solution::from_calls(calls, &inst) {
        Ok(sol) => sol,
        Err(e @ SolutionError::Parity { .. }) => {
            println!("domain             {e}\nstatus             VIOLATIONS");
            return Err(Failure::Violations);
        }
        Err(e) => return Err(Failure::Config(e.to_string())),
    };
    let report = validator::check(&sol, &inst);
    println!("{report}");
    if let Some(p) = trace {
        write_trace(&evaluate_full(&sol, &inst), create(p)?)?;
    }
    if report.is_clean() {
        Ok(())
    } else {
        Err(Failure::Violations)
    }
}

fn gen_toy(seed: u64, consumers: usize, horizon: usize, out: &Path) -> Result<(), Failure> {
    let inst = generate_toy(seed, consumers, horizon)?;
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    inst.save(out)?;
    println!("wrote {} ({} ports, {} vessels, {} periods)", out.display(), inst.num_ports(), inst.num_vessels(), inst.horizon);
    Ok(())
}
