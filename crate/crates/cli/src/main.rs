//! `hcmm`: allocate, simulate, compare, budget, run, overhead, reproduce.
//!
//! Every command is deterministic given `(--scenario, --seed, --trials)`, and
//! every CSV output starts with a metadata comment line carrying the tool
//! version and the seed. Exit codes: 0 success, 1 verification failure or
//! budget infeasibility, 2 usage or config errors.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use hcmm_core::allocator::{
    hcmm_allocate, load_balanced_uncoded, uniform_coded, uniform_uncoded, Scheme,
};
use hcmm_core::budget::{cost_bounds, heuristic_search};
use hcmm_core::coding::lt_required_overhead;
use hcmm_core::emulator::{run_job, ExecMode, JobCoding, JobMetrics, JobSpec, MatrixSource};
use hcmm_core::rng::derive_seed;
use hcmm_core::scenarios::{builtin, ScenarioConfig, BUILTIN_NAMES};
use hcmm_core::simulator::{compare_schemes, estimate_expected_time, SchemeComparison};
use hcmm_core::{Allocation, ClusterSpec, Error};

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser)]
#[command(name = "hcmm", version, about = "Coded matrix-vector multiplication lab: HCMM load allocation, benchmark schemes, Monte Carlo studies, budget search and a local master-worker emulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print one scheme's per-worker loads, nominal time and redundancy.
    Allocate(AllocateArgs),
    /// Monte Carlo estimate of one scheme's expected completion time.
    Simulate(SimulateArgs),
    /// Compare all four schemes with common random numbers.
    Compare(CompareArgs),
    /// Budget-constrained machine selection (greedy search).
    Budget(BudgetArgs),
    /// Execute a real coded job locally and verify the decoded product.
    Run(RunArgs),
    /// Estimate the coded symbols an LT code needs for reliable decoding.
    Overhead(OverheadArgs),
    /// Write every builtin study's outputs into a results directory.
    Reproduce(ReproduceArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SchemeArg {
    Hcmm,
    UniformUncoded,
    LoadBalanced,
    UniformCoded,
}

impl SchemeArg {
    fn to_scheme(self) -> Scheme {
        match self {
            SchemeArg::Hcmm => Scheme::Hcmm,
            SchemeArg::UniformUncoded => Scheme::UniformUncoded,
            SchemeArg::LoadBalanced => Scheme::LoadBalancedUncoded,
            SchemeArg::UniformCoded => Scheme::UniformCoded,
        }
    }
}

#[derive(Args)]
struct ScenarioArgs {
    /// Builtin scenario name or path to a scenario TOML file.
    #[arg(long)]
    scenario: String,
    /// Master seed for all randomness.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Override the scenario's trial count.
    #[arg(long)]
    trials: Option<usize>,
    /// Write CSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Force LT coding (robust Soliton c=0.03, delta=0.1, epsilon=0.13).
    #[arg(long, conflicts_with = "rlc")]
    lt: bool,
    /// Force random linear coding.
    #[arg(long)]
    rlc: bool,
    /// Override the straggler probability.
    #[arg(long)]
    straggler_p: Option<f64>,
    /// Override the straggler slowdown factor.
    #[arg(long)]
    slowdown: Option<f64>,
}

#[derive(Args)]
struct AllocateArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Allocation scheme.
    #[arg(long, value_enum, default_value = "hcmm")]
    scheme: SchemeArg,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    #[arg(long, value_enum, default_value = "hcmm")]
    scheme: SchemeArg,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Measure and report average decode wall time per scheme (makes the
    /// decode_s column nondeterministic).
    #[arg(long)]
    decode_time: bool,
}

#[derive(Args)]
struct BudgetArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Columns of the generated data matrix.
    #[arg(long, default_value_t = 100)]
    cols: u64,
    /// Read the matrix from a CSV file instead of generating it.
    #[arg(long, conflicts_with = "matrix_bin")]
    matrix_csv: Option<PathBuf>,
    /// Read the matrix from an HCMM binary file instead of generating it.
    #[arg(long)]
    matrix_bin: Option<PathBuf>,
    /// Single-context virtual-time mode (no real straggler pauses).
    #[arg(long)]
    virtual_time: bool,
    /// Allocation scheme for the job.
    #[arg(long, value_enum, default_value = "hcmm")]
    scheme: SchemeArg,
    /// Corrupt the decoded result before verification (test hook).
    #[arg(long, hide = true)]
    corrupt: bool,
}

#[derive(Args)]
struct OverheadArgs {
    /// Source symbol count k.
    #[arg(long)]
    symbols: usize,
    /// Robust Soliton tuning parameter c.
    #[arg(long, default_value_t = 0.03)]
    c: f64,
    /// Decode failure bound delta.
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReproduceArgs {
    /// Results directory (created if missing).
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Override every scenario's trial count.
    #[arg(long)]
    trials: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            match err {
                Error::Config(_)
                | Error::ConfigParse(_)
                | Error::UnknownScenario(_)
                | Error::InvalidParameter(_) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}

fn dispatch(command: Command) -> Result<ExitCode, Error> {
    match command {
        Command::Allocate(args) => cmd_allocate(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Compare(args) => cmd_compare(args),
        Command::Budget(args) => cmd_budget(args),
        Command::Run(args) => cmd_run(args),
        Command::Overhead(args) => cmd_overhead(args),
        Command::Reproduce(args) => cmd_reproduce(args),
    }
}

fn load_scenario(args: &ScenarioArgs) -> Result<ScenarioConfig, Error> {
    let mut config = if BUILTIN_NAMES.contains(&args.scenario.as_str()) {
        builtin(&args.scenario)?
    } else {
        let path = std::path::Path::new(&args.scenario);
        if !path.exists() {
            return Err(Error::UnknownScenario(format!(
                "{}; not a builtin ({}) and no such file",
                args.scenario,
                BUILTIN_NAMES.join(", ")
            )));
        }
        ScenarioConfig::from_file(path)?
    };
    if let Some(trials) = args.trials {
        config.trials = trials;
    }
    if args.lt {
        config.coding = hcmm_core::scenarios::CodingConfig {
            mode: hcmm_core::scenarios::CodingMode::Lt,
            tuning: Some(0.03),
            failure_bound: Some(0.1),
            overhead: Some(0.13),
        };
    }
    if args.rlc {
        config.coding = hcmm_core::scenarios::CodingConfig::default();
    }
    if args.straggler_p.is_some() || args.slowdown.is_some() {
        let current = config.straggler.clone();
        config.straggler = Some(hcmm_core::scenarios::StragglerConfig {
            probability: args
                .straggler_p
                .or(current.as_ref().map(|s| s.probability))
                .unwrap_or(0.0),
            slowdown: args.slowdown.or(current.map(|s| s.slowdown)).unwrap_or(1.0),
        });
    }
    config.validate()?;
    Ok(config)
}

/// Opens `--out` or stdout and writes the metadata comment line.
fn open_output(
    out: &Option<PathBuf>,
    seed: u64,
    scenario: &str,
) -> Result<Box<dyn Write>, Error> {
    let mut writer: Box<dyn Write> = match out {
        Some(path) => {
            if let Some(parent) = path.parent() {
                if !parent.as_os_str().is_empty() {
                    std::fs::create_dir_all(parent)?;
                }
            }
            Box::new(std::fs::File::create(path)?)
        }
        None => Box::new(std::io::stdout()),
    };
    writeln!(writer, "# hcmm v{VERSION} seed={seed} scenario={scenario}")?;
    Ok(writer)
}

fn build_allocation(
    scheme: Scheme,
    cluster: &ClusterSpec,
    rows: u64,
    trials: usize,
    seed: u64,
) -> Result<Allocation, Error> {
    match scheme {
        Scheme::Hcmm => hcmm_allocate(cluster, rows),
        Scheme::UniformUncoded => uniform_uncoded(cluster, rows),
        Scheme::LoadBalancedUncoded => load_balanced_uncoded(cluster, rows),
        Scheme::UniformCoded => uniform_coded(cluster, rows, trials, derive_seed(seed, 1)),
    }
}

fn coded_rows_target(config: &ScenarioConfig) -> u64 {
    match config.lt_overhead() {
        Some(eps) => (config.rows as f64 * (1.0 + eps)).ceil() as u64,
        None => config.rows,
    }
}

fn cmd_allocate(args: AllocateArgs) -> Result<ExitCode, Error> {
    let config = load_scenario(&args.scenario)?;
    let cluster = config.resolve_cluster()?;
    let scheme = args.scheme.to_scheme();
    let rows = if scheme.is_uncoded() { config.rows } else { coded_rows_target(&config) };
    let allocation =
        build_allocation(scheme, &cluster, rows, config.trials, args.scenario.seed)?;
    let mut out = open_output(&args.scenario.out, args.scenario.seed, &config.name)?;
    writeln!(out, "worker,shift,straggling,shape,load")?;
    for (worker, load) in cluster.workers().iter().zip(&allocation.loads) {
        writeln!(
            out,
            "{},{},{},{},{load}",
            worker.id,
            worker.model.shift(),
            worker.model.straggling(),
            worker.model.shape(),
        )?;
    }
    writeln!(
        out,
        "# scheme={} nominal_time_s={:.6} total_rows={} redundancy={:.6}",
        allocation.scheme.label(),
        allocation.nominal_time,
        allocation.total_rows(),
        allocation.redundancy()
    )?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_simulate(args: SimulateArgs) -> Result<ExitCode, Error> {
    let config = load_scenario(&args.scenario)?;
    let cluster = config.resolve_cluster()?;
    let straggler = config.resolve_straggler()?;
    let scheme = args.scheme.to_scheme();
    let rows = if scheme.is_uncoded() { config.rows } else { coded_rows_target(&config) };
    let allocation =
        build_allocation(scheme, &cluster, rows, config.trials, args.scenario.seed)?;
    let estimate = estimate_expected_time(
        &cluster,
        &allocation,
        allocation.rows_to_collect(),
        &straggler,
        config.trials,
        args.scenario.seed,
    )?;
    let mut out = open_output(&args.scenario.out, args.scenario.seed, &config.name)?;
    writeln!(out, "scheme,mean_s,stderr_s,redundancy,trials")?;
    writeln!(
        out,
        "{},{:.6},{:.6},{:.6},{}",
        allocation.scheme.label(),
        estimate.mean,
        estimate.stderr,
        allocation.redundancy(),
        estimate.trials
    )?;
    Ok(ExitCode::SUCCESS)
}

fn write_comparison(
    mut out: Box<dyn Write>,
    comparison: &SchemeComparison<f64>,
) -> Result<(), Error> {
    writeln!(out, "scheme,mean_s,stderr_s,redundancy,trials,decode_s")?;
    for row in &comparison.summaries {
        writeln!(
            out,
            "{},{:.6},{:.6},{:.6},{},{}",
            row.scheme.label(),
            row.mean,
            row.stderr,
            row.redundancy,
            row.trials,
            row.decode_seconds.map_or(String::new(), |d| format!("{d:.6}")),
        )?;
    }
    Ok(())
}

fn run_comparison(config: &ScenarioConfig, seed: u64) -> Result<SchemeComparison<f64>, Error> {
    let cluster = config.resolve_cluster()?;
    let straggler = config.resolve_straggler()?;
    compare_schemes(
        &cluster,
        config.rows,
        config.lt_overhead(),
        &straggler,
        config.trials,
        seed,
    )
}

fn cmd_compare(args: CompareArgs) -> Result<ExitCode, Error> {
    let config = load_scenario(&args.scenario)?;
    let mut comparison = run_comparison(&config, args.scenario.seed)?;
    if args.decode_time {
        let decode_seed = derive_seed(args.scenario.seed, 2);
        for row in &mut comparison.summaries {
            row.decode_seconds = match config.resolve_lt()? {
                _ if row.scheme.is_uncoded() => Some(0.0),
                Some(code) => Some(benchmark_lt_decode(&code, row.total_rows, decode_seed)?),
                None => Some(benchmark_rlc_decode(config.rows as usize, decode_seed)?),
            };
        }
    }
    let out = open_output(&args.scenario.out, args.scenario.seed, &config.name)?;
    write_comparison(out, &comparison)?;
    Ok(ExitCode::SUCCESS)
}

/// Wall-time of one peeling decode over freshly sampled inner products.
fn benchmark_lt_decode(
    code: &hcmm_core::coding::LtCodeSpec,
    available: u64,
    seed: u64,
) -> Result<f64, Error> {
    use hcmm_core::coding::{sample_symbol_neighbors, LtSymbol, PeelDecoder};
    let mut rng = hcmm_core::rng::substream(seed, 0);
    let mut decoder: PeelDecoder<f64> = PeelDecoder::new(code.source_symbols());
    let started = std::time::Instant::now();
    let mut consumed = 0u64;
    while !decoder.is_complete() && consumed < available {
        let neighbors = sample_symbol_neighbors(code, &mut rng);
        decoder.push(&LtSymbol { neighbors, value: vec![1.0] })?;
        consumed += 1;
    }
    Ok(started.elapsed().as_secs_f64())
}

/// Wall-time of one dense solve of the size an RLC decode needs.
fn benchmark_rlc_decode(rows: usize, seed: u64) -> Result<f64, Error> {
    use hcmm_core::coding::{rlc_decode, DenseMatrix};
    let mut rng = hcmm_core::rng::substream(seed, 1);
    let system = DenseMatrix::standard_normal(rows, rows, &mut rng)?;
    let values = vec![1.0; rows];
    let started = std::time::Instant::now();
    rlc_decode(&system, &values)?;
    Ok(started.elapsed().as_secs_f64())
}

fn cmd_budget(args: BudgetArgs) -> Result<ExitCode, Error> {
    let config = load_scenario(&args.scenario)?;
    let Some(scenario) = config.resolve_budget()? else {
        return Err(Error::InvalidParameter(format!(
            "scenario `{}` has no budget section",
            config.name
        )));
    };
    let (c_min, c_max) = cost_bounds(&scenario)?;
    let result = heuristic_search(&scenario)?;
    let mut out = open_output(&args.scenario.out, args.scenario.seed, &config.name)?;
    writeln!(out, "# budget={} c_min={c_min:.4} c_max={c_max:.4}", scenario.budget)?;
    writeln!(out, "feasible,counts,cost,expected_time_s,iterations")?;
    match (&result.counts, result.cost, result.expected_time) {
        (Some(counts), Some(cost), Some(time)) => {
            let joined: Vec<String> = counts.iter().map(u32::to_string).collect();
            writeln!(
                out,
                "true,{},{cost:.4},{time:.4},{}",
                joined.join(" "),
                result.iterations
            )?;
        }
        _ => {
            writeln!(out, "false,,,,{}", result.iterations)?;
        }
    }
    writeln!(out, "# search path: counts -> cost")?;
    for step in &result.path {
        let joined: Vec<String> = step.counts.iter().map(u32::to_string).collect();
        writeln!(out, "# ({}) -> {:.4}", joined.join(" "), step.cost)?;
    }
    Ok(if result.feasible { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn cmd_run(args: RunArgs) -> Result<ExitCode, Error> {
    let config = load_scenario(&args.scenario)?;
    let cluster = config.resolve_cluster()?;
    let straggler = config.resolve_straggler()?;
    let seed = args.scenario.seed;
    let lt_code = config.resolve_lt()?;
    let coded_target = coded_rows_target(&config);
    let allocation = build_allocation(
        args.scheme.to_scheme(),
        &cluster,
        coded_target,
        config.trials.min(500),
        seed,
    )?;
    let matrix = match (&args.matrix_csv, &args.matrix_bin) {
        (Some(path), _) => MatrixSource::CsvFile(path.clone()),
        (_, Some(path)) => MatrixSource::BinFile(path.clone()),
        _ => MatrixSource::Generated { rows: config.rows, cols: args.cols, seed },
    };
    let coding = match lt_code {
        Some(code) => JobCoding::Lt(code),
        None => JobCoding::Rlc,
    };
    let mode = if args.virtual_time { ExecMode::VirtualTime } else { ExecMode::Concurrent };
    let spec = JobSpec {
        matrix,
        input: None,
        cluster,
        allocation,
        coding: coding.clone(),
        straggler,
        seed,
        mode,
    };
    let mut outcome = run_job(&spec)?;
    if args.corrupt {
        if let Some(result) = outcome.result.as_mut() {
            result[0] += 1.0;
            outcome.metrics.max_abs_error += 1.0;
            outcome.metrics.success = false;
        }
    }
    let mut out = open_output(&args.scenario.out, seed, &config.name)?;
    writeln!(out, "{}", JobMetrics::csv_header())?;
    writeln!(out, "{}", outcome.metrics.csv_row(seed, mode, &coding))?;
    if outcome.metrics.success {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!(
            "verification failed: max abs error {:e} over {} received rows",
            outcome.metrics.max_abs_error, outcome.metrics.rows_received
        );
        Ok(ExitCode::from(1))
    }
}

fn cmd_overhead(args: OverheadArgs) -> Result<ExitCode, Error> {
    let code = hcmm_core::coding::robust_soliton(args.symbols, args.c, args.delta)?;
    let estimate = lt_required_overhead(&code, args.trials, args.seed)?;
    let mut out = open_output(&args.out, args.seed, "overhead")?;
    writeln!(out, "k,c,delta,trials,required,mean,overhead")?;
    writeln!(
        out,
        "{},{},{},{},{},{:.1},{:.4}",
        args.symbols,
        args.c,
        args.delta,
        args.trials,
        estimate.required,
        estimate.mean,
        estimate.required as f64 / args.symbols as f64 - 1.0
    )?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_reproduce(args: ReproduceArgs) -> Result<ExitCode, Error> {
    std::fs::create_dir_all(&args.out)?;
    let comparison_names = [
        "exp-scenario-1",
        "exp-scenario-2",
        "exp-scenario-3",
        "weibull-scenario-1",
        "weibull-scenario-2",
        "weibull-scenario-3",
    ];
    for name in comparison_names {
        let mut config = builtin(name)?;
        if let Some(trials) = args.trials {
            config.trials = trials;
        }
        let comparison = run_comparison(&config, args.seed)?;
        let path = args.out.join(format!("{name}.csv"));
        let out = open_output(&Some(path.clone()), args.seed, name)?;
        write_comparison(out, &comparison)?;
        eprintln!("wrote {}", path.display());
    }
    for name in ["budget-1", "budget-2"] {
        let path = args.out.join(format!("{name}.csv"));
        cmd_budget(BudgetArgs {
            scenario: ScenarioArgs {
                scenario: name.to_string(),
                seed: args.seed,
                trials: args.trials,
                out: Some(path.clone()),
                lt: false,
                rlc: false,
                straggler_p: None,
                slowdown: None,
            },
        })?;
        eprintln!("wrote {}", path.display());
    }
    let overhead_path = args.out.join("lt-overhead.csv");
    cmd_overhead(OverheadArgs {
        symbols: 10_000,
        c: 0.03,
        delta: 0.1,
        trials: 100,
        seed: args.seed,
        out: Some(overhead_path.clone()),
    })?;
    eprintln!("wrote {}", overhead_path.display());
    Ok(ExitCode::SUCCESS)
}
