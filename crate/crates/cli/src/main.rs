use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use num::{BigInt, BigRational};

use rcds_cli::{
    append_rows, compare_report, oracle_report, read_instance, read_rows, run_experiment,
    write_instance, Algorithm, CliError, ExperimentSpec, Model,
};
use rcds_core::{generate, Family, GenerateError, GeneratorConfig, OracleGuard};

/// Simulator for adaptive connected-dominating-set policies under
/// stochastic node failures.
#[derive(Parser)]
#[command(name = "rcds", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random instance file.
    #[command(alias = "gen")]
    Generate(GenerateArgs),
    /// Evaluate algorithms on instance files and append CSV result rows.
    Run(RunArgs),
    /// Summarize a results CSV as ratios against the polymatroid baseline.
    Compare(CompareArgs),
    /// Compute the exact optimal policy value and per-algorithm ratios.
    Oracle(OracleArgs),
}

fn parse_rational(text: &str) -> Result<BigRational, String> {
    let (num, den) = match text.split_once('/') {
        Some((n, d)) => (n, d),
        None => (text, "1"),
    };
    let num = BigInt::from_str(num.trim()).map_err(|_| format!("bad numerator in '{text}'"))?;
    let den = BigInt::from_str(den.trim()).map_err(|_| format!("bad denominator in '{text}'"))?;
    if den <= BigInt::from(0) {
        return Err(format!("denominator must be positive in '{text}'"));
    }
    Ok(BigRational::new(num, den))
}

fn parse_family(text: &str) -> Result<Family, String> {
    match text {
        "unit-disk" => Ok(Family::UnitDisk),
        "bidirectional-disk" => Ok(Family::BidirectionalDisk),
        "erdos-renyi" => Ok(Family::ErdosRenyi),
        other => Err(format!(
            "unknown family '{other}' (expected unit-disk, bidirectional-disk, or erdos-renyi)"
        )),
    }
}

fn family_token(family: Family) -> &'static str {
    match family {
        Family::UnitDisk => "unit-disk",
        Family::BidirectionalDisk => "bidirectional-disk",
        Family::ErdosRenyi => "erdos-renyi",
    }
}

#[derive(Args)]
struct GenerateArgs {
    /// Instance family: unit-disk, bidirectional-disk, or erdos-renyi.
    #[arg(long, value_parser = parse_family)]
    family: Family,
    /// Number of nodes.
    #[arg(long)]
    n: usize,
    /// Number of failure scenarios.
    #[arg(long)]
    m: usize,
    /// Generator seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Failure points sampled per scenario.
    #[arg(long)]
    failure_points: Option<usize>,
    /// Lower bound of the failure radius range, as NUM or NUM/DEN.
    #[arg(long, value_parser = parse_rational)]
    threshold_lo: Option<BigRational>,
    /// Upper bound of the failure radius range, as NUM or NUM/DEN.
    #[arg(long, value_parser = parse_rational)]
    threshold_hi: Option<BigRational>,
    /// Family edge parameter (edge probability or connection radius), as
    /// NUM or NUM/DEN.
    #[arg(long, value_parser = parse_rational)]
    edge_param: Option<BigRational>,
    /// Output instance file.
    #[arg(long, short = 'o')]
    out: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    /// Instance file; repeat for a batch.
    #[arg(long, required = true)]
    instance: Vec<PathBuf>,
    /// Comma-separated algorithms to run.
    #[arg(long, value_delimiter = ',', default_values_t = Algorithm::ALL)]
    algorithms: Vec<Algorithm>,
    /// Comma-separated feedback models to run.
    #[arg(long, value_delimiter = ',', default_values_t = Model::ALL)]
    models: Vec<Model>,
    /// Seed for the randomized baseline.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Node-expansion budget per exact solve.
    #[arg(long)]
    budget: Option<u64>,
    /// Results CSV to append to.
    #[arg(long, short = 'o')]
    out: PathBuf,
}

#[derive(Args)]
struct CompareArgs {
    /// Results CSV produced by `run`.
    #[arg(long)]
    results: PathBuf,
}

#[derive(Args)]
struct OracleArgs {
    /// Instance file.
    #[arg(long)]
    instance: PathBuf,
    /// Feedback model to analyze.
    #[arg(long)]
    model: Model,
    /// Comma-separated algorithms to compare against the optimum.
    #[arg(long, value_delimiter = ',', default_values_t = Algorithm::ALL)]
    algorithms: Vec<Algorithm>,
    /// Seed for the randomized baseline.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Node-expansion budget per exact solve.
    #[arg(long)]
    budget: Option<u64>,
    /// Raise the oracle's node-count guard.
    #[arg(long)]
    max_n: Option<usize>,
    /// Raise the oracle's scenario-count guard.
    #[arg(long)]
    max_scenarios: Option<usize>,
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("RCDS_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .parse()
        .ok()
        .filter(|&t| t >= 1)
        .ok_or_else(|| CliError::Usage(format!("RCDS_THREADS must be a positive integer, got '{raw}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Usage(format!("thread pool setup failed: {e}")))
}

fn map_generate_error(e: GenerateError) -> CliError {
    match e {
        GenerateError::InvalidConfig(msg) => CliError::Usage(format!("invalid parameters: {msg}")),
        GenerateError::Disconnected(attempts) => CliError::Usage(format!(
            "no connected instance after {attempts} seed attempts; try another seed, more nodes, \
             or a denser edge parameter"
        )),
        other => CliError::Malformed(format!("generation failed: {other}")),
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Generate(args) => {
            let mut cfg = GeneratorConfig::new(args.family, args.n, args.m, args.seed);
            if let Some(points) = args.failure_points {
                cfg.failure_points = points;
            }
            if let Some(lo) = args.threshold_lo {
                cfg.threshold_range.0 = lo;
            }
            if let Some(hi) = args.threshold_hi {
                cfg.threshold_range.1 = hi;
            }
            if args.edge_param.is_some() {
                cfg.edge_param = args.edge_param;
            }
            let (graph, scenarios) = generate(&cfg).map_err(map_generate_error)?;
            let family = family_token(args.family);
            let id = format!("{family}-n{}-m{}-seed{}", args.n, args.m, args.seed);
            write_instance(&args.out, &graph, &scenarios, Some(family.into()), Some(id))?;
            println!("wrote {}", args.out.display());
            Ok(())
        }
        Command::Run(args) => {
            let spec = ExperimentSpec {
                instances: args.instance,
                algorithms: args.algorithms,
                models: args.models,
                seed: args.seed,
                budget: args.budget,
            };
            let rows = run_experiment(&spec)?;
            let count = rows.len();
            append_rows(&args.out, &rows)?;
            println!("appended {count} rows to {}", args.out.display());
            Ok(())
        }
        Command::Compare(args) => {
            let rows = read_rows(&args.results)?;
            print!("{}", compare_report(&rows)?);
            Ok(())
        }
        Command::Oracle(args) => {
            let loaded = read_instance(&args.instance)?;
            let mut guard = OracleGuard::default();
            if let Some(max_n) = args.max_n {
                guard.max_n = max_n;
            }
            if let Some(max_scenarios) = args.max_scenarios {
                guard.max_scenarios = max_scenarios;
            }
            let report = oracle_report(
                &loaded,
                args.model,
                &args.algorithms,
                &guard,
                args.seed,
                args.budget,
            )?;
            print!("{report}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = configure_threads().and_then(|()| run(cli));
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
