//! `aag-lab`: command-line front end for the AAG-on-Heisenberg workbench.
//!
//! Subcommands mirror the library layers: `session` generates one key
//! exchange, `attack` runs one length-based attack against it, `batch` runs
//! a seeded trial campaign and persists CSV + JSON artifacts, `grid` runs
//! several cells from a config file, and `report` recomputes summaries from
//! saved CSVs and prints the success-rate table with a trend verdict.
//!
//! Exit codes: 0 on completion (a Fail attack outcome is still a completed
//! run), 2 for configuration problems, 1 for everything else.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use heisenberg_aag::aag::run_session;
use heisenberg_aag::experiment::{
    load_records, load_summary, render_grid_table, run_batch_targeting, run_grid, save_records,
    save_summary, trend_report, AttackTarget, BudgetSpec, ExperimentConfig, GridRow, SummaryRow,
    TrialOutcome,
};
use heisenberg_aag::lba::{attack_with_progress, verify_result, IterationProgress};
use heisenberg_aag::{AttackOutcome, CapturedInstance, Element, Error, Session, Word};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Parser)]
#[command(
    name = "aag-lab",
    version,
    about = "Workbench for AAG key exchange on integer Heisenberg groups and the memory-M length-based attack"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate one key-exchange session and print the transcript.
    Session(SessionArgs),
    /// Run one length-based attack against a generated or loaded session.
    Attack(AttackArgs),
    /// Run a seeded batch of attack trials; writes <out>.csv and <out>.json.
    Batch(BatchArgs),
    /// Run a grid of batches from a JSON array of configs, print the table.
    Grid(GridArgs),
    /// Rebuild summaries from saved CSVs; print the table and trend verdict.
    Report(ReportArgs),
}

/// Parameter overrides shared by every subcommand. Anything left unset falls
/// back to the config file (if given) and then to the built-in replication
/// profile.
#[derive(Args, Debug, Clone, Default)]
struct Overrides {
    /// Number of generator pairs (the group is H^{2n+1}).
    #[arg(long)]
    n: Option<usize>,

    /// Alice's public-set size N1.
    #[arg(long)]
    n1: Option<usize>,

    /// Bob's public-set size N2.
    #[arg(long)]
    n2: Option<usize>,

    /// Private-key length L (factors per key).
    #[arg(long)]
    key_length: Option<usize>,

    /// Minimum public-element word length L1.
    #[arg(long)]
    min_len: Option<usize>,

    /// Maximum public-element word length L2.
    #[arg(long)]
    max_len: Option<usize>,

    /// Beam memory M: candidate states retained between attack rounds.
    #[arg(long)]
    memory: Option<usize>,

    /// Trials per batch.
    #[arg(long)]
    trials: Option<usize>,

    /// Iteration budget per attack (deterministic mode).
    #[arg(long, conflicts_with = "budget_secs")]
    budget_iters: Option<u64>,

    /// Wall-clock budget per attack, in seconds.
    #[arg(long)]
    budget_secs: Option<f64>,

    /// Master seed; per-trial seeds are derived from it.
    #[arg(long)]
    seed: Option<u64>,

    /// Keep only one beam candidate per distinct tuple within a round.
    #[arg(long, value_name = "BOOL")]
    dedup: Option<bool>,

    /// Worker threads for batch execution.
    #[arg(long, env = "AAG_LAB_PARALLELISM")]
    parallelism: Option<usize>,
}

impl Overrides {
    fn apply(&self, mut config: ExperimentConfig) -> ExperimentConfig {
        if let Some(n) = self.n {
            config.n = n;
        }
        if let Some(n1) = self.n1 {
            config.alice_size = n1;
        }
        if let Some(n2) = self.n2 {
            config.bob_size = n2;
        }
        if let Some(key_length) = self.key_length {
            config.key_length = key_length;
        }
        if let Some(min_len) = self.min_len {
            config.min_len = min_len;
        }
        if let Some(max_len) = self.max_len {
            config.max_len = max_len;
        }
        if let Some(memory) = self.memory {
            config.memory = memory;
        }
        if let Some(trials) = self.trials {
            config.trials = trials;
        }
        if let Some(iters) = self.budget_iters {
            config.budget = BudgetSpec::Iterations(iters);
        }
        if let Some(secs) = self.budget_secs {
            config.budget = BudgetSpec::Seconds(secs);
        }
        if let Some(seed) = self.seed {
            config.master_seed = seed;
        }
        if let Some(dedup) = self.dedup {
            config.dedup = dedup;
        }
        if let Some(parallelism) = self.parallelism {
            config.parallelism = parallelism;
        }
        config
    }
}

#[derive(Args)]
struct SessionArgs {
    /// JSON config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Print the session as JSON instead of a transcript.
    #[arg(long)]
    json: bool,

    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Args)]
struct AttackArgs {
    /// JSON config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Load a session from a JSON file (as written by `session --json`)
    /// instead of generating one.
    #[arg(long)]
    session_file: Option<PathBuf>,

    /// Which party's private key to recover.
    #[arg(long, value_enum, default_value_t = TargetArg::Alice)]
    target: TargetArg,

    /// Stream per-round search statistics to stderr.
    #[arg(long)]
    progress: bool,

    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Args)]
struct BatchArgs {
    /// JSON config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Output basename; records go to <out>.csv, the summary to <out>.json.
    #[arg(long)]
    out: PathBuf,

    /// Which party's private key the campaign attacks.
    #[arg(long, value_enum, default_value_t = TargetArg::Alice)]
    target: TargetArg,

    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Args)]
struct GridArgs {
    /// JSON file holding an array of configs, one per grid cell.
    #[arg(long)]
    config: PathBuf,

    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Args)]
struct ReportArgs {
    /// CSV record files; each <name>.csv must sit next to its <name>.json
    /// summary.
    #[arg(required = true)]
    csv: Vec<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TargetArg {
    Alice,
    Bob,
}

impl From<TargetArg> for AttackTarget {
    fn from(target: TargetArg) -> Self {
        match target {
            TargetArg::Alice => AttackTarget::Alice,
            TargetArg::Bob => AttackTarget::Bob,
        }
    }
}

/// CLI-level failures: library errors plus artifact-integrity mismatches
/// found while rebuilding a report.
#[derive(Debug)]
enum CliError {
    Core(Error),
    Integrity(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Core(err) => err.fmt(f),
            CliError::Integrity(msg) => f.write_str(msg),
        }
    }
}

impl From<Error> for CliError {
    fn from(err: Error) -> Self {
        CliError::Core(err)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            // Bad parameters and incomparable report rows are usage errors,
            // matching clap's own exit code for bad flags.
            CliError::Core(
                Error::ConfigError(_)
                | Error::IncomparableRows(_)
                | Error::BadParams(_)
                | Error::BadRange { .. },
            ) => 2,
            _ => 1,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Session(args) => run_session_cmd(args),
        Command::Attack(args) => run_attack_cmd(args),
        Command::Batch(args) => run_batch_cmd(args),
        Command::Grid(args) => run_grid_cmd(args),
        Command::Report(args) => run_report_cmd(args),
    }
}

/// Config file (or built-in default), then flag overrides, then validation.
fn effective_config(
    path: Option<&Path>,
    overrides: &Overrides,
) -> Result<ExperimentConfig, CliError> {
    let base = match path {
        Some(path) => ExperimentConfig::load_json(path)?,
        None => ExperimentConfig::default(),
    };
    let config = overrides.apply(base);
    config.validate()?;
    Ok(config)
}

fn generate_session(config: &ExperimentConfig) -> Result<Session, CliError> {
    let params = heisenberg_aag::GroupParams::new(config.n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.master_seed);
    let session = run_session(
        params,
        config.alice_size,
        config.bob_size,
        config.key_length,
        config.min_len,
        config.max_len,
        &mut rng,
    )?;
    Ok(session)
}

fn run_session_cmd(args: SessionArgs) -> Result<(), CliError> {
    let config = effective_config(args.config.as_deref(), &args.overrides)?;
    let session = generate_session(&config)?;
    if args.json {
        let text = serde_json::to_string_pretty(&session).map_err(Error::from)?;
        println!("{text}");
    } else {
        print_transcript(&session, config.master_seed);
    }
    Ok(())
}

fn print_tuple(heading: &str, prefix: &str, elements: &[Element]) {
    println!("{heading} ({} elements):", elements.len());
    for (i, e) in elements.iter().enumerate() {
        println!("  {prefix}{} = {e}", i + 1);
    }
}

fn print_transcript(session: &Session, seed: u64) {
    let params = session.params;
    println!(
        "group: H^{} (n = {}, Hirsch length {}), seed {seed}",
        2 * params.n() + 1,
        params.n(),
        params.hirsch_length()
    );
    print_tuple("alice public set", "sA", session.alice_public.elements());
    print_tuple("bob public set", "sB", session.bob_public.elements());
    let name_a = |i: usize| format!("sA{}", i + 1);
    let name_b = |i: usize| format!("sB{}", i + 1);
    println!(
        "alice private key: A = {}  ->  {}",
        session.alice_key.as_word().render(name_a),
        session.a_element
    );
    println!(
        "bob private key:   B = {}  ->  {}",
        session.bob_key.as_word().render(name_b),
        session.b_element
    );
    print_tuple(
        "alice sends bob's set conjugated by A",
        "sB'",
        &session.transmitted_b_prime,
    );
    print_tuple(
        "bob sends alice's set conjugated by B",
        "sA'",
        &session.transmitted_a_prime,
    );
    println!("shared key, alice's side: {}", session.shared_key_alice);
    println!("shared key, bob's side:   {}", session.shared_key_bob);
    println!("agreement: alice's key equals the inverse of bob's");
}

fn load_session(path: &Path) -> Result<Session, CliError> {
    let text = fs::read_to_string(path).map_err(Error::from)?;
    let session: Session = serde_json::from_str(&text).map_err(Error::from)?;
    Ok(session)
}

fn run_attack_cmd(args: AttackArgs) -> Result<(), CliError> {
    let config = effective_config(args.config.as_deref(), &args.overrides)?;
    let session = match &args.session_file {
        Some(path) => load_session(path)?,
        None => generate_session(&config)?,
    };
    let instance = match args.target {
        TargetArg::Alice => CapturedInstance::targeting_alice(&session),
        TargetArg::Bob => CapturedInstance::targeting_bob(&session),
    };

    println!(
        "target: {}'s key; attacker alphabet {} elements, captured tuple {} elements",
        match args.target {
            TargetArg::Alice => "alice",
            TargetArg::Bob => "bob",
        },
        instance.attacker_generators().size(),
        instance.captured_tuple().len()
    );

    let show_progress = args.progress;
    let sink = |p: &IterationProgress| {
        if show_progress {
            eprintln!(
                "round {:>4}: beam {:>5}, candidates {:>7}, best length {}, beam lengths {}..{}",
                p.iteration,
                p.beam_size,
                p.candidate_count,
                p.best_length,
                p.beam_min_length,
                p.beam_max_length
            );
        }
    };
    let result = attack_with_progress(&instance, &config.attack_config(), sink)?;

    let stats = &result.stats;
    match &result.outcome {
        AttackOutcome::Success {
            conjugator,
            element,
        } => {
            println!(
                "outcome: success after {} rounds ({} states expanded, peak {} candidates, {:.3?})",
                stats.iterations, stats.expanded, stats.peak_candidates, stats.elapsed
            );
            println!(
                "conjugator: {} (length {})",
                render_conjugator(conjugator, args.target),
                conjugator.len()
            );
            println!("conjugator element: {element}");
            if verify_result(&instance, &result) {
                println!("verification: passed");
            } else {
                // A success that fails re-verification is a soundness bug,
                // never a usage problem.
                eprintln!("verification: FAILED");
                std::process::exit(1);
            }
        }
        AttackOutcome::Fail => {
            println!(
                "outcome: fail after {} rounds ({} states expanded, peak {} candidates, {:.3?})",
                stats.iterations, stats.expanded, stats.peak_candidates, stats.elapsed
            );
        }
    }
    Ok(())
}

fn render_conjugator(word: &Word, target: TargetArg) -> String {
    let prefix = match target {
        TargetArg::Alice => "sA",
        TargetArg::Bob => "sB",
    };
    word.render(|i| format!("{prefix}{}", i + 1))
}

fn run_batch_cmd(args: BatchArgs) -> Result<(), CliError> {
    let config = effective_config(args.config.as_deref(), &args.overrides)?;
    let (records, summary) = run_batch_targeting(&config, args.target.into())?;

    let csv_path = args.out.with_extension("csv");
    let json_path = args.out.with_extension("json");
    save_records(&csv_path, &records)?;
    save_summary(&json_path, &summary)?;

    let row = GridRow {
        config,
        summary: Some(summary),
        error: None,
    };
    print!("{}", render_grid_table(std::slice::from_ref(&row)));
    println!("wrote {} and {}", csv_path.display(), json_path.display());
    Ok(())
}

fn run_grid_cmd(args: GridArgs) -> Result<(), CliError> {
    let text = fs::read_to_string(&args.config).map_err(Error::from)?;
    let cells: Vec<ExperimentConfig> = serde_json::from_str(&text)
        .map_err(|e| Error::ConfigError(format!("{}: {e}", args.config.display())))?;
    let cells: Vec<ExperimentConfig> = cells
        .into_iter()
        .map(|cell| args.overrides.apply(cell))
        .collect();
    let rows = run_grid(&cells)?;
    print!("{}", render_grid_table(&rows));
    Ok(())
}

/// Load one <name>.csv / <name>.json pair and cross-check them: the summary
/// must echo exactly what the records say.
fn rebuild_summary(csv_path: &Path) -> Result<SummaryRow, CliError> {
    let records = load_records(csv_path)?;
    let summary = load_summary(&csv_path.with_extension("json"))?;

    let successes = records
        .iter()
        .filter(|r| r.outcome == TrialOutcome::Success)
        .count();
    if summary.trials != records.len() || summary.successes != successes {
        return Err(CliError::Integrity(format!(
            "{}: summary claims {}/{} successes but records hold {}/{}",
            csv_path.display(),
            summary.successes,
            summary.trials,
            successes,
            records.len()
        )));
    }
    let rate = successes as f64 / records.len() as f64;
    if summary.success_rate != rate {
        return Err(CliError::Integrity(format!(
            "{}: summary rate {} does not match recomputed rate {rate}",
            csv_path.display(),
            summary.success_rate
        )));
    }
    Ok(summary)
}

fn run_report_cmd(args: ReportArgs) -> Result<(), CliError> {
    let summaries: Vec<SummaryRow> = args
        .csv
        .iter()
        .map(|path| rebuild_summary(path))
        .collect::<Result<_, _>>()?;

    let rows: Vec<GridRow> = summaries
        .iter()
        .map(|summary| GridRow {
            config: summary.config.clone(),
            summary: Some(summary.clone()),
            error: None,
        })
        .collect();
    print!("{}", render_grid_table(&rows));

    if summaries.len() < 2 {
        println!("trend: need at least two result sets for a verdict");
        return Ok(());
    }
    let report = trend_report(&summaries)?;
    print!("{}", report.render());
    Ok(())
}
