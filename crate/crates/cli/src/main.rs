use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use radonlab::geometry::{catalog, ModelSpec};
use serde_json::json;

mod experiments;
mod scenario;

use experiments::Outcome;
use scenario::Kind;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Resolution(String),
    Failure(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Resolution(m) | CliError::Failure(m) => f.write_str(m),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Failure(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Resolution(_) => 3,
        }
    }
}

impl From<radonlab::ccball::BallError> for CliError {
    fn from(e: radonlab::ccball::BallError) -> Self {
        use radonlab::ccball::BallError;
        match e {
            BallError::Resolution(_) => CliError::Resolution(e.to_string()),
            BallError::InvalidParameters(_) => CliError::Usage(format!("parameters: {e}")),
            BallError::Geometry(_) => CliError::Failure(e.to_string()),
        }
    }
}

impl From<radonlab::radon::RadonError> for CliError {
    fn from(e: radonlab::radon::RadonError) -> Self {
        use radonlab::radon::RadonError;
        match e {
            RadonError::Ball(b) => b.into(),
            RadonError::Resolution(_) => CliError::Resolution(e.to_string()),
            RadonError::InvalidInput(_) | RadonError::Overflow(_) => CliError::Usage(format!("parameters: {e}")),
        }
    }
}

impl From<radonlab::decomp::DecompError> for CliError {
    fn from(e: radonlab::decomp::DecompError) -> Self {
        use radonlab::decomp::DecompError;
        match e {
            DecompError::Radon(r) => r.into(),
            DecompError::Ball(b) => b.into(),
            DecompError::Configuration(_) => CliError::Usage(format!("parameters: {e}")),
            DecompError::Degenerate(_) => CliError::Failure(e.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(name = "radonlab", version, about = "Numerical experiments for curve Radon transforms")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct RunArgs {
    /// Scenario file (JSON).
    #[arg(long)]
    scenario: PathBuf,
    /// Output directory for the report, CSV and metadata sidecar.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Overrides the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum ModelCommand {
    /// Names of the built-in models.
    List,
    /// Prints a model as JSON, by name or from a scenario file.
    Show {
        name: Option<String>,
        #[arg(long)]
        scenario: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum Command {
    /// Built-in model catalog.
    Model {
        #[command(subcommand)]
        action: ModelCommand,
    },
    /// One ball: volume, projections and slab profile.
    Ball(RunArgs),
    /// Ball-lemma ratios against the calibrated bands.
    LemmaCheck(RunArgs),
    /// Exponent region estimate on a c-lattice.
    Region(RunArgs),
    /// Classification of exponent triples against an estimated region.
    Classify(RunArgs),
    /// Restricted weak-type ratios on ball pairs or explicit sets.
    TestInequality(RunArgs),
    /// Unions of translated balls with disjoint projections.
    Necessity(RunArgs),
    /// Superlevel decomposition checks for a given F.
    Decompose(RunArgs),
}

fn model_command(action: ModelCommand) -> Result<(), CliError> {
    match action {
        ModelCommand::List => {
            for name in catalog::NAMES {
                println!("{name}");
            }
            Ok(())
        }
        ModelCommand::Show { name, scenario } => {
            let model = match (name, scenario) {
                (Some(n), None) => scenario::resolve_model(scenario::ModelRef::Name(n))?,
                (None, Some(path)) => {
                    let text = fs::read_to_string(&path)
                        .map_err(|e| CliError::Usage(format!("cannot read scenario {}: {e}", path.display())))?;
                    let v: serde_json::Value =
                        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("scenario: {e}")))?;
                    let m = v.get("model").cloned().ok_or_else(|| CliError::Usage("model: missing".into()))?;
                    let m: scenario::ModelRef =
                        serde_json::from_value(m).map_err(|e| CliError::Usage(format!("model: {e}")))?;
                    scenario::resolve_model(m)?
                }
                _ => return Err(CliError::Usage("model show: give a model name or --scenario".into())),
            };
            let spec = ModelSpec::from(model);
            println!("{}", serde_json::to_string_pretty(&spec).expect("model serializes"));
            Ok(())
        }
    }
}

fn write_csv(path: &Path, series: &experiments::Series) -> Result<(), CliError> {
    let io = |e: csv::Error| CliError::Failure(format!("cannot write {}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    w.write_record(&series.header).map_err(io)?;
    for row in &series.rows {
        w.write_record(row).map_err(io)?;
    }
    w.flush().map_err(|e| CliError::Failure(format!("cannot write {}: {e}", path.display())))
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::Failure(format!("cannot write {}: {e}", path.display())))
}

fn run(kind: Kind, args: RunArgs) -> Result<bool, CliError> {
    let mut sc = scenario::load(&args.scenario, kind)?;
    if args.seed.is_some() {
        sc.seed = args.seed;
    }
    if let Some(n) = args.threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Failure(format!("thread pool: {e}")))?;
    }
    let started = chrono::Utc::now();
    let clock = Instant::now();
    let outcome: Outcome = match kind {
        Kind::Ball => experiments::ball(&sc),
        Kind::Lemma => experiments::lemma(&sc),
        Kind::Region => experiments::region(&sc),
        Kind::Classify => experiments::classify(&sc),
        Kind::Test => experiments::test_inequality(&sc),
        Kind::Necessity => experiments::necessity(&sc),
        Kind::Decompose => experiments::decompose(&sc),
    }?;
    let elapsed = clock.elapsed().as_secs_f64();
    let passed = outcome.assertions.iter().all(|a| a.passed);

    let stem = sc.output.name.clone().unwrap_or_else(|| kind.to_string());
    fs::create_dir_all(&args.out)
        .map_err(|e| CliError::Failure(format!("cannot create {}: {e}", args.out.display())))?;
    let report = json!({
        "kind": kind,
        "version": env!("CARGO_PKG_VERSION"),
        "model": ModelSpec::from(sc.model.clone()),
        "seed": sc.seed,
        "parameters": outcome.parameters,
        "result": outcome.result,
        "assertions": outcome.assertions,
        "passed": passed,
    });
    let report_path = args.out.join(format!("{stem}.json"));
    write_text(&report_path, &(serde_json::to_string_pretty(&report).expect("report serializes") + "\n"))?;
    let mut files = vec![format!("{stem}.json")];
    if let Some(series) = &outcome.series {
        let csv_path = args.out.join(format!("{stem}.csv"));
        write_csv(&csv_path, series)?;
        files.push(format!("{stem}.csv"));
    }
    let meta = json!({
        "scenario": args.scenario.display().to_string(),
        "files": files,
        "started": started.to_rfc3339(),
        "finished": chrono::Utc::now().to_rfc3339(),
        "elapsed_seconds": elapsed,
        "threads": rayon::current_num_threads(),
    });
    write_text(
        &args.out.join(format!("{stem}.meta.json")),
        &(serde_json::to_string_pretty(&meta).expect("metadata serializes") + "\n"),
    )?;

    for a in &outcome.assertions {
        println!("{} {}: {}", if a.passed { "PASS" } else { "FAIL" }, a.name, a.detail);
    }
    println!("report: {}", report_path.display());
    Ok(passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Model { action } => model_command(action).map(|_| true),
        Command::Ball(a) => run(Kind::Ball, a),
        Command::LemmaCheck(a) => run(Kind::Lemma, a),
        Command::Region(a) => run(Kind::Region, a),
        Command::Classify(a) => run(Kind::Classify, a),
        Command::TestInequality(a) => run(Kind::Test, a),
        Command::Necessity(a) => run(Kind::Necessity, a),
        Command::Decompose(a) => run(Kind::Decompose, a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            let label = match e {
                CliError::Usage(_) => "usage error",
                CliError::Resolution(_) => "resolution error",
                CliError::Failure(_) => "error",
            };
            eprintln!("{label}: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
