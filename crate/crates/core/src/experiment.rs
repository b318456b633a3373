//! Seeded experiment campaigns over the attack: batches of independent
//! trials, parameter grids, success-rate summaries, trend verdicts, and
//! CSV/JSON persistence.
//!
//! Reproducibility contract: every trial derives its own RNG seed from the
//! master seed and its trial index, so results are independent of execution
//! order and worker count. With an iteration budget the persisted CSV is
//! byte-identical across runs; wall-clock budgets trade that away for
//! realistic timing and record measured seconds per trial.

use std::cmp::Ordering;
use std::fmt::{self, Write as _};
use std::fs;
use std::path::Path;
use std::time::Duration;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::aag::{run_session, Session};
use crate::error::{Error, Result};
use crate::group::GroupParams;
use crate::lba::{attack, verify_result, AttackBudget, AttackConfig, CapturedInstance};

/// Attack budget as configured: iteration counts are exactly reproducible,
/// wall-clock seconds match longer replication runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BudgetSpec {
    Iterations(u64),
    Seconds(f64),
}

impl BudgetSpec {
    pub fn to_attack_budget(self) -> AttackBudget {
        match self {
            BudgetSpec::Iterations(n) => AttackBudget::Iterations(n),
            BudgetSpec::Seconds(s) => AttackBudget::WallClock(Duration::from_secs_f64(s)),
        }
    }

    pub fn is_deterministic(self) -> bool {
        matches!(self, BudgetSpec::Iterations(_))
    }
}

/// Full description of one experiment cell. Serialized field names follow the
/// conventional symbols (N1, N2, L, L1, L2, M); omitted fields take the
/// defaults below.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Heisenberg parameter: the group is H^{2n+1}.
    pub n: usize,
    /// Alice's public-set size (the attacker's alphabet size).
    #[serde(rename = "N1")]
    pub alice_size: usize,
    /// Bob's public-set size.
    #[serde(rename = "N2")]
    pub bob_size: usize,
    /// Private-key length for both parties.
    #[serde(rename = "L")]
    pub key_length: usize,
    /// Public-set element word length range.
    #[serde(rename = "L1")]
    pub min_len: usize,
    #[serde(rename = "L2")]
    pub max_len: usize,
    /// Attack beam width.
    #[serde(rename = "M")]
    pub memory: usize,
    pub budget: BudgetSpec,
    pub trials: usize,
    pub master_seed: u64,
    pub dedup: bool,
    pub parallelism: usize,
}

impl Default for ExperimentConfig {
    /// The recommended-safe-parameter profile: n=6, N1=N2=20, L=50,
    /// [L1,L2]=[40,43], M=1000, 30-minute per-trial time-out, 100 trials.
    fn default() -> Self {
        ExperimentConfig {
            n: 6,
            alice_size: 20,
            bob_size: 20,
            key_length: 50,
            min_len: 40,
            max_len: 43,
            memory: 1000,
            budget: BudgetSpec::Seconds(1800.0),
            trials: 100,
            master_seed: 1,
            dedup: true,
            parallelism: 1,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.n < 1 {
            problems.push("n must be >= 1".to_string());
        }
        if self.alice_size < 1 {
            problems.push("N1 must be >= 1".to_string());
        }
        if self.bob_size < 1 {
            problems.push("N2 must be >= 1".to_string());
        }
        if self.key_length < 1 {
            problems.push("L must be >= 1".to_string());
        }
        if self.min_len < 1 || self.min_len > self.max_len {
            problems.push(format!(
                "element length range [L1,L2]=[{},{}] must satisfy 1 <= L1 <= L2",
                self.min_len, self.max_len
            ));
        }
        if self.memory < 1 {
            problems.push("M must be >= 1".to_string());
        }
        if self.trials < 1 {
            problems.push("trials must be >= 1".to_string());
        }
        if self.parallelism < 1 {
            problems.push("parallelism must be >= 1".to_string());
        }
        match self.budget {
            // Also rejects NaN, which fails every comparison.
            BudgetSpec::Seconds(s) if s.partial_cmp(&0.0) != Some(Ordering::Greater) => {
                problems.push(format!("wall-clock budget must be positive, got {s}"));
            }
            _ => {}
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::ConfigError(problems.join("; ")))
        }
    }

    pub fn attack_config(&self) -> AttackConfig {
        AttackConfig {
            memory: self.memory,
            budget: self.budget.to_attack_budget(),
            dedup: self.dedup,
        }
    }

    pub fn load_json(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let config: ExperimentConfig = serde_json::from_str(&text)
            .map_err(|e| Error::ConfigError(format!("{}: {e}", path.display())))?;
        Ok(config)
    }
}

/// Which party's key the campaign attacks; batches target Alice unless the
/// roles are swapped explicitly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackTarget {
    Alice,
    Bob,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrialOutcome {
    Success,
    Fail,
    /// The trial aborted with an arithmetic or construction error; recorded,
    /// never a batch abort.
    Error,
}

impl TrialOutcome {
    fn as_str(self) -> &'static str {
        match self {
            TrialOutcome::Success => "success",
            TrialOutcome::Fail => "fail",
            TrialOutcome::Error => "error",
        }
    }

    fn parse(text: &str) -> Result<Self> {
        match text {
            "success" => Ok(TrialOutcome::Success),
            "fail" => Ok(TrialOutcome::Fail),
            "error" => Ok(TrialOutcome::Error),
            other => Err(Error::ConfigError(format!("unknown outcome '{other}'"))),
        }
    }
}

impl fmt::Display for TrialOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One persisted trial. `seconds` is populated only under wall-clock budgets:
/// iteration-budget campaigns guarantee byte-identical output, and measured
/// time can never be part of that.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    pub outcome: TrialOutcome,
    pub iterations: u64,
    pub seconds: Option<f64>,
    pub verified: bool,
}

/// Aggregate of one batch, with the full config echoed for provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub config: ExperimentConfig,
    pub trials: usize,
    pub successes: usize,
    pub failures: usize,
    pub errors: usize,
    pub success_rate: f64,
    pub mean_seconds: Option<f64>,
    pub median_seconds: Option<f64>,
}

/// One grid cell's outcome: a summary, or the error that prevented one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub config: ExperimentConfig,
    pub summary: Option<SummaryRow>,
    pub error: Option<String>,
}

/// Derive the per-trial seed from the master seed and trial index with a
/// splitmix64-style finalizer: counter-based, so any subset of trials can be
/// reproduced in isolation and parallel workers never share RNG state.
pub fn derive_trial_seed(master_seed: u64, trial: usize) -> u64 {
    let mut z = master_seed.wrapping_add((trial as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn build_instance(session: &Session, target: AttackTarget) -> CapturedInstance {
    match target {
        AttackTarget::Alice => CapturedInstance::targeting_alice(session),
        AttackTarget::Bob => CapturedInstance::targeting_bob(session),
    }
}

fn run_trial(config: &ExperimentConfig, target: AttackTarget, trial: usize) -> TrialRecord {
    let seed = derive_trial_seed(config.master_seed, trial);
    let mut record = TrialRecord {
        trial,
        seed,
        outcome: TrialOutcome::Error,
        iterations: 0,
        seconds: None,
        verified: false,
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let attempt = GroupParams::new(config.n)
        .and_then(|params| {
            run_session(
                params,
                config.alice_size,
                config.bob_size,
                config.key_length,
                config.min_len,
                config.max_len,
                &mut rng,
            )
        })
        .and_then(|session| {
            let instance = build_instance(&session, target);
            let result = attack(&instance, &config.attack_config())?;
            Ok((instance, result))
        });

    match attempt {
        Ok((instance, result)) => {
            record.iterations = result.stats.iterations;
            if !config.budget.is_deterministic() {
                record.seconds = Some(result.stats.elapsed.as_secs_f64());
            }
            if result.is_success() {
                record.outcome = TrialOutcome::Success;
                record.verified = verify_result(&instance, &result);
            } else {
                record.outcome = TrialOutcome::Fail;
            }
        }
        Err(_) => {
            // Recorded as an errored trial; outcome/verified defaults stand.
        }
    }
    record
}

fn summarize(config: &ExperimentConfig, records: &[TrialRecord]) -> SummaryRow {
    let successes = records
        .iter()
        .filter(|r| r.outcome == TrialOutcome::Success)
        .count();
    let errors = records
        .iter()
        .filter(|r| r.outcome == TrialOutcome::Error)
        .count();
    let mut seconds: Vec<f64> = records.iter().filter_map(|r| r.seconds).collect();
    seconds.sort_by(|a, b| a.total_cmp(b));
    let mean = if seconds.is_empty() {
        None
    } else {
        Some(seconds.iter().sum::<f64>() / seconds.len() as f64)
    };
    let median = if seconds.is_empty() {
        None
    } else {
        Some(seconds[seconds.len() / 2])
    };
    SummaryRow {
        config: config.clone(),
        trials: records.len(),
        successes,
        failures: records.len() - successes - errors,
        errors,
        success_rate: successes as f64 / records.len() as f64,
        mean_seconds: mean,
        median_seconds: median,
    }
}

/// Run a batch attacking the chosen party's key.
pub fn run_batch_targeting(
    config: &ExperimentConfig,
    target: AttackTarget,
) -> Result<(Vec<TrialRecord>, SummaryRow)> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.parallelism)
        .build()
        .map_err(|e| Error::ConfigError(format!("could not build worker pool: {e}")))?;
    // Indexed parallel collect keeps records in trial order regardless of
    // completion order.
    let records: Vec<TrialRecord> = pool.install(|| {
        (0..config.trials)
            .into_par_iter()
            .map(|trial| run_trial(config, target, trial))
            .collect()
    });
    let summary = summarize(config, &records);
    Ok((records, summary))
}

/// Run `config.trials` independent seeded trials against Alice's key and
/// aggregate them.
pub fn run_batch(config: &ExperimentConfig) -> Result<(Vec<TrialRecord>, SummaryRow)> {
    run_batch_targeting(config, AttackTarget::Alice)
}

/// Run every cell of a grid, one summary row per cell in input order. A
/// cell's failure (validation or execution) annotates its row instead of
/// aborting the remaining cells.
pub fn run_grid(cells: &[ExperimentConfig]) -> Result<Vec<GridRow>> {
    if cells.is_empty() {
        return Err(Error::ConfigError("grid has no cells".into()));
    }
    Ok(cells
        .iter()
        .map(|config| match run_batch(config) {
            Ok((_, summary)) => GridRow {
                config: config.clone(),
                summary: Some(summary),
                error: None,
            },
            Err(e) => GridRow {
                config: config.clone(),
                summary: None,
                error: Some(e.to_string()),
            },
        })
        .collect())
}

/// Render grid results as an aligned text table with the customary columns:
/// n, the Hirsch length h = 2n+1, set sizes, key length, element lengths,
/// memory, trials, and the success rate.
pub fn render_grid_table(rows: &[GridRow]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:>3} {:>5} {:>4} {:>4} {:>4} {:>9} {:>6} {:>7} {:>12}",
        "n", "h(G)", "N1", "N2", "L", "[L1,L2]", "M", "trials", "success rate"
    );
    for row in rows {
        let c = &row.config;
        match (&row.summary, &row.error) {
            (Some(s), _) => {
                let _ = writeln!(
                    out,
                    "{:>3} {:>5} {:>4} {:>4} {:>4} {:>9} {:>6} {:>7} {:>11.1}%",
                    c.n,
                    2 * c.n + 1,
                    c.alice_size,
                    c.bob_size,
                    c.key_length,
                    format!("[{},{}]", c.min_len, c.max_len),
                    c.memory,
                    s.trials,
                    s.success_rate * 100.0
                );
            }
            (None, Some(e)) => {
                let _ = writeln!(
                    out,
                    "{:>3} {:>5} {:>4} {:>4} {:>4} {:>9} {:>6} {:>7} error: {}",
                    c.n,
                    2 * c.n + 1,
                    c.alice_size,
                    c.bob_size,
                    c.key_length,
                    format!("[{},{}]", c.min_len, c.max_len),
                    c.memory,
                    c.trials,
                    e
                );
            }
            (None, None) => unreachable!("grid row with neither summary nor error"),
        }
    }
    out
}

/// The parameter a trend study varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StudiedParameter {
    KeyLength,
    ElementLength,
    GroupSize,
}

impl StudiedParameter {
    fn describe(self) -> &'static str {
        match self {
            StudiedParameter::KeyLength => "key length L",
            StudiedParameter::ElementLength => "element length [L1,L2]",
            StudiedParameter::GroupSize => "group size n (Hirsch length 2n+1)",
        }
    }

    /// The qualitative expectation each study is checked against.
    fn expectation(self) -> &'static str {
        match self {
            StudiedParameter::KeyLength => {
                "success rate is expected to drop as the key length grows"
            }
            StudiedParameter::ElementLength => {
                "element length is not expected to change the success rate dramatically"
            }
            StudiedParameter::GroupSize => {
                "no expected direction; observed rates may move either way with n"
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrendDirection {
    Decreasing,
    Increasing,
    Flat,
    Mixed,
}

/// Verdict of a trend study across summary rows that differ in exactly one
/// studied parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendReport {
    pub parameter: StudiedParameter,
    pub direction: TrendDirection,
    /// Rows sorted by the studied parameter: (parameter label, success rate).
    pub points: Vec<(String, f64)>,
    pub expectation: String,
    /// Whether the observed direction matches the expectation; None when the
    /// expectation has no mechanical direction to check.
    pub matches_expectation: Option<bool>,
}

impl TrendReport {
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "studied parameter: {}", self.parameter.describe());
        let _ = writeln!(
            out,
            "points: {}",
            self.points
                .iter()
                .map(|(label, rate)| format!("{label} -> {:.1}%", rate * 100.0))
                .collect::<Vec<_>>()
                .join(", ")
        );
        let _ = writeln!(out, "direction: {:?}", self.direction);
        let _ = writeln!(out, "expectation: {}", self.expectation);
        match self.matches_expectation {
            Some(true) => {
                let _ = writeln!(out, "verdict: matches expectation");
            }
            Some(false) => {
                let _ = writeln!(out, "verdict: contradicts expectation");
            }
            None => {
                let _ = writeln!(out, "verdict: observational only");
            }
        }
        out
    }
}

fn direction_of(rates: &[f64]) -> TrendDirection {
    let deltas: Vec<f64> = rates.windows(2).map(|w| w[1] - w[0]).collect();
    if deltas.iter().all(|&d| d == 0.0) {
        TrendDirection::Flat
    } else if deltas.iter().all(|&d| d <= 0.0) {
        TrendDirection::Decreasing
    } else if deltas.iter().all(|&d| d >= 0.0) {
        TrendDirection::Increasing
    } else {
        TrendDirection::Mixed
    }
}

/// Identify the single studied parameter across the rows, sort by it, and
/// judge the success-rate trend against that parameter's expectation.
///
/// Rows must agree on every experiment parameter except the studied one
/// (master_seed and parallelism, which do not define the cell, may differ);
/// anything else is reported as `IncomparableRows`.
pub fn trend_report(rows: &[SummaryRow]) -> Result<TrendReport> {
    if rows.len() < 2 {
        return Err(Error::IncomparableRows(
            "a trend needs at least two rows".into(),
        ));
    }
    let base = &rows[0].config;
    let varies_key = rows.iter().any(|r| r.config.key_length != base.key_length);
    let varies_elem = rows
        .iter()
        .any(|r| r.config.min_len != base.min_len || r.config.max_len != base.max_len);
    let varies_n = rows.iter().any(|r| r.config.n != base.n);

    for r in &rows[1..] {
        let c = &r.config;
        if c.alice_size != base.alice_size
            || c.bob_size != base.bob_size
            || c.memory != base.memory
            || c.budget != base.budget
            || c.trials != base.trials
            || c.dedup != base.dedup
        {
            return Err(Error::IncomparableRows(
                "rows differ outside the studied parameters (sizes, memory, budget, trials, or dedup)"
                    .into(),
            ));
        }
    }

    let parameter = match (varies_key, varies_elem, varies_n) {
        (true, false, false) => StudiedParameter::KeyLength,
        (false, true, false) => StudiedParameter::ElementLength,
        (false, false, true) => StudiedParameter::GroupSize,
        (false, false, false) => {
            return Err(Error::IncomparableRows(
                "no studied parameter varies across the rows".into(),
            ))
        }
        _ => {
            return Err(Error::IncomparableRows(
                "more than one studied parameter varies across the rows".into(),
            ))
        }
    };

    let mut sorted: Vec<&SummaryRow> = rows.iter().collect();
    match parameter {
        StudiedParameter::KeyLength => sorted.sort_by_key(|r| r.config.key_length),
        StudiedParameter::ElementLength => {
            sorted.sort_by_key(|r| (r.config.min_len, r.config.max_len))
        }
        StudiedParameter::GroupSize => sorted.sort_by_key(|r| r.config.n),
    }

    let points: Vec<(String, f64)> = sorted
        .iter()
        .map(|r| {
            let label = match parameter {
                StudiedParameter::KeyLength => format!("L={}", r.config.key_length),
                StudiedParameter::ElementLength => {
                    format!("[L1,L2]=[{},{}]", r.config.min_len, r.config.max_len)
                }
                StudiedParameter::GroupSize => format!("n={}", r.config.n),
            };
            (label, r.success_rate)
        })
        .collect();
    let rates: Vec<f64> = points.iter().map(|(_, rate)| *rate).collect();
    let direction = direction_of(&rates);

    let matches_expectation = match parameter {
        StudiedParameter::KeyLength => Some(direction == TrendDirection::Decreasing),
        StudiedParameter::ElementLength | StudiedParameter::GroupSize => None,
    };

    Ok(TrendReport {
        parameter,
        direction,
        points,
        expectation: parameter.expectation().to_string(),
        matches_expectation,
    })
}

pub const CSV_HEADER: &str = "trial,seed,outcome,iterations,seconds,verified";

/// Serialize records to the stable CSV format. The seconds field is blank
/// for trials without a measurement (iteration-budget mode).
pub fn records_to_csv(records: &[TrialRecord]) -> String {
    let mut out = String::with_capacity(64 * (records.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in records {
        let seconds = match r.seconds {
            Some(s) => format!("{s:.3}"),
            None => String::new(),
        };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.trial,
            r.seed,
            r.outcome.as_str(),
            r.iterations,
            seconds,
            r.verified
        );
    }
    out
}

/// Parse and re-validate a persisted CSV: schema, field types, and the rule
/// that every success was verified.
pub fn records_from_csv(text: &str) -> Result<Vec<TrialRecord>> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::ConfigError("empty CSV".into()))?;
    if header != CSV_HEADER {
        return Err(Error::ConfigError(format!(
            "unexpected CSV header '{header}'"
        )));
    }
    let mut records = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(Error::ConfigError(format!(
                "line {}: expected 6 fields, got {}",
                lineno + 2,
                fields.len()
            )));
        }
        let bad = |what: &str| Error::ConfigError(format!("line {}: bad {what}", lineno + 2));
        let record = TrialRecord {
            trial: fields[0].parse().map_err(|_| bad("trial index"))?,
            seed: fields[1].parse().map_err(|_| bad("seed"))?,
            outcome: TrialOutcome::parse(fields[2])?,
            iterations: fields[3].parse().map_err(|_| bad("iteration count"))?,
            seconds: if fields[4].is_empty() {
                None
            } else {
                Some(fields[4].parse().map_err(|_| bad("seconds"))?)
            },
            verified: fields[5].parse().map_err(|_| bad("verified flag"))?,
        };
        if record.outcome == TrialOutcome::Success && !record.verified {
            return Err(Error::ConfigError(format!(
                "line {}: success without verification",
                lineno + 2
            )));
        }
        records.push(record);
    }
    Ok(records)
}

pub fn save_records(path: &Path, records: &[TrialRecord]) -> Result<()> {
    fs::write(path, records_to_csv(records))?;
    Ok(())
}

pub fn load_records(path: &Path) -> Result<Vec<TrialRecord>> {
    records_from_csv(&fs::read_to_string(path)?)
}

pub fn save_summary(path: &Path, summary: &SummaryRow) -> Result<()> {
    let mut text = serde_json::to_string_pretty(summary)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn load_summary(path: &Path) -> Result<SummaryRow> {
    let summary: SummaryRow = serde_json::from_str(&fs::read_to_string(path)?)?;
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// A small, fast cell used throughout these tests.
    fn small_config() -> ExperimentConfig {
        ExperimentConfig {
            n: 2,
            alice_size: 5,
            bob_size: 5,
            key_length: 2,
            min_len: 3,
            max_len: 5,
            memory: 20,
            budget: BudgetSpec::Iterations(30),
            trials: 12,
            master_seed: 7,
            dedup: true,
            parallelism: 2,
        }
    }

    #[test]
    fn trial_seeds_are_distinct_and_stable() {
        let a: Vec<u64> = (0..100).map(|t| derive_trial_seed(42, t)).collect();
        let b: Vec<u64> = (0..100).map(|t| derive_trial_seed(42, t)).collect();
        assert_eq!(a, b);
        let mut dedup = a.clone();
        dedup.sort_unstable();
        dedup.dedup();
        assert_eq!(dedup.len(), a.len());
        assert_ne!(derive_trial_seed(42, 0), derive_trial_seed(43, 0));
    }

    #[test]
    fn batch_is_deterministic_across_parallelism() {
        let mut config = small_config();
        let (r1, s1) = run_batch(&config).unwrap();
        config.parallelism = 4;
        let (r2, s2) = run_batch(&config).unwrap();
        assert_eq!(r1, r2);
        assert_eq!(s1.successes, s2.successes);
        assert_eq!(records_to_csv(&r1), records_to_csv(&r2));
        // Records come back in trial order.
        for (i, r) in r1.iter().enumerate() {
            assert_eq!(r.trial, i);
        }
    }

    #[test]
    fn iteration_mode_records_no_seconds() {
        let (records, summary) = run_batch(&small_config()).unwrap();
        assert!(records.iter().all(|r| r.seconds.is_none()));
        assert_eq!(summary.mean_seconds, None);
        assert_eq!(summary.median_seconds, None);
    }

    #[test]
    fn guaranteed_success_cell() {
        // L=1 with enough memory succeeds in at most one iteration per trial.
        let config = ExperimentConfig {
            key_length: 1,
            memory: 10,
            budget: BudgetSpec::Iterations(2),
            trials: 8,
            ..small_config()
        };
        let (records, summary) = run_batch(&config).unwrap();
        assert_eq!(summary.success_rate, 1.0);
        for r in &records {
            assert!(r.iterations <= 1);
            assert!(r.verified);
        }
    }

    #[test]
    fn summary_matches_recomputation_from_records() {
        let (records, summary) = run_batch(&small_config()).unwrap();
        let successes = records
            .iter()
            .filter(|r| r.outcome == TrialOutcome::Success)
            .count();
        assert_eq!(summary.successes, successes);
        assert_eq!(
            summary.success_rate,
            successes as f64 / records.len() as f64
        );
        assert_eq!(summary.trials, records.len());
        assert_eq!(summary.errors, 0);
    }

    #[test]
    fn csv_round_trip_and_golden_format() {
        let records = vec![
            TrialRecord {
                trial: 0,
                seed: 11,
                outcome: TrialOutcome::Success,
                iterations: 3,
                seconds: None,
                verified: true,
            },
            TrialRecord {
                trial: 1,
                seed: 12,
                outcome: TrialOutcome::Fail,
                iterations: 30,
                seconds: Some(1.25),
                verified: false,
            },
            TrialRecord {
                trial: 2,
                seed: 13,
                outcome: TrialOutcome::Error,
                iterations: 0,
                seconds: None,
                verified: false,
            },
        ];
        let csv = records_to_csv(&records);
        assert_eq!(
            csv,
            "trial,seed,outcome,iterations,seconds,verified\n\
             0,11,success,3,,true\n\
             1,12,fail,30,1.250,false\n\
             2,13,error,0,,false\n"
        );
        assert_eq!(records_from_csv(&csv).unwrap(), records);
    }

    #[test]
    fn csv_loader_rejects_bad_input() {
        assert!(records_from_csv("").is_err());
        assert!(records_from_csv("wrong,header\n").is_err());
        let unverified_success =
            "trial,seed,outcome,iterations,seconds,verified\n0,1,success,1,,false\n";
        assert!(records_from_csv(unverified_success).is_err());
        let bad_outcome = "trial,seed,outcome,iterations,seconds,verified\n0,1,maybe,1,,true\n";
        assert!(records_from_csv(bad_outcome).is_err());
    }

    #[test]
    fn config_json_round_trip_with_conventional_names() {
        let config = small_config();
        let json = serde_json::to_string(&config).unwrap();
        for key in ["\"N1\"", "\"N2\"", "\"L\"", "\"L1\"", "\"L2\"", "\"M\""] {
            assert!(json.contains(key), "{key} missing from {json}");
        }
        let back: ExperimentConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back, config);

        // Partial configs take defaults; unknown keys are rejected.
        let partial: ExperimentConfig =
            serde_json::from_str(r#"{"n": 2, "L": 3, "budget": {"iterations": 10}}"#).unwrap();
        assert_eq!(partial.n, 2);
        assert_eq!(partial.key_length, 3);
        assert_eq!(partial.alice_size, 20);
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"bogus": 1}"#).is_err());
    }

    #[test]
    fn default_config_is_replication_profile() {
        let d = ExperimentConfig::default();
        assert_eq!(
            (d.n, d.alice_size, d.bob_size, d.key_length),
            (6, 20, 20, 50)
        );
        assert_eq!((d.min_len, d.max_len, d.memory), (40, 43, 1000));
        assert_eq!(d.budget, BudgetSpec::Seconds(1800.0));
        assert!(d.dedup);
        d.validate().unwrap();
    }

    #[test]
    fn validation_reports_each_problem() {
        let bad = ExperimentConfig {
            n: 0,
            trials: 0,
            min_len: 9,
            max_len: 3,
            ..small_config()
        };
        let err = bad.validate().unwrap_err().to_string();
        assert!(err.contains("n must be"));
        assert!(err.contains("trials must be"));
        assert!(err.contains("L1 <= L2"));
    }

    #[test]
    fn grid_annotates_bad_cells_and_keeps_order() {
        let good = ExperimentConfig {
            trials: 4,
            ..small_config()
        };
        let bad = ExperimentConfig {
            trials: 0,
            ..small_config()
        };
        let rows = run_grid(&[good.clone(), bad]).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows[0].summary.is_some());
        assert!(rows[0].error.is_none());
        assert!(rows[1].summary.is_none());
        assert!(rows[1].error.as_deref().unwrap().contains("trials"));

        let table = render_grid_table(&rows);
        assert!(table.contains("success rate"));
        assert!(table.contains("error:"));

        assert!(run_grid(&[]).is_err());
    }

    fn summary_with(config: ExperimentConfig, rate: f64) -> SummaryRow {
        SummaryRow {
            trials: config.trials,
            successes: (rate * config.trials as f64).round() as usize,
            failures: 0,
            errors: 0,
            success_rate: rate,
            mean_seconds: None,
            median_seconds: None,
            config,
        }
    }

    #[test]
    fn trend_over_key_length() {
        let base = small_config();
        let rows: Vec<SummaryRow> = [(10usize, 0.53), (20, 0.11), (50, 0.01)]
            .into_iter()
            .map(|(l, rate)| {
                summary_with(
                    ExperimentConfig {
                        key_length: l,
                        ..base.clone()
                    },
                    rate,
                )
            })
            .collect();
        let report = trend_report(&rows).unwrap();
        assert_eq!(report.parameter, StudiedParameter::KeyLength);
        assert_eq!(report.direction, TrendDirection::Decreasing);
        assert_eq!(report.matches_expectation, Some(true));
        let rendered = report.render();
        assert!(rendered.contains("L=10 -> 53.0%"));
        assert!(rendered.contains("matches expectation"));
    }

    #[test]
    fn trend_flat_and_group_size() {
        let base = small_config();
        let flat: Vec<SummaryRow> = [3usize, 6, 9]
            .into_iter()
            .map(|l| {
                summary_with(
                    ExperimentConfig {
                        key_length: l,
                        ..base.clone()
                    },
                    0.4,
                )
            })
            .collect();
        let report = trend_report(&flat).unwrap();
        assert_eq!(report.direction, TrendDirection::Flat);
        assert_eq!(report.matches_expectation, Some(false));

        let by_n: Vec<SummaryRow> = [(3usize, 0.11), (6, 0.69)]
            .into_iter()
            .map(|(n, rate)| summary_with(ExperimentConfig { n, ..base.clone() }, rate))
            .collect();
        let report = trend_report(&by_n).unwrap();
        assert_eq!(report.parameter, StudiedParameter::GroupSize);
        assert_eq!(report.direction, TrendDirection::Increasing);
        assert_eq!(report.matches_expectation, None);
        assert!(report.render().contains("observational only"));
    }

    #[test]
    fn trend_rejects_incomparable_rows() {
        let base = small_config();
        let row = summary_with(base.clone(), 0.5);
        assert!(matches!(
            trend_report(std::slice::from_ref(&row)),
            Err(Error::IncomparableRows(_))
        ));
        assert!(matches!(
            trend_report(&[row.clone(), row.clone()]),
            Err(Error::IncomparableRows(_))
        ));

        // Two studied parameters varying at once.
        let twisted = summary_with(
            ExperimentConfig {
                n: 3,
                key_length: 9,
                ..base.clone()
            },
            0.2,
        );
        assert!(matches!(
            trend_report(&[row.clone(), twisted]),
            Err(Error::IncomparableRows(_))
        ));

        // A non-studied parameter varying.
        let off_grid = summary_with(
            ExperimentConfig {
                key_length: 9,
                memory: 99,
                ..base
            },
            0.2,
        );
        assert!(matches!(
            trend_report(&[row, off_grid]),
            Err(Error::IncomparableRows(_))
        ));
    }

    #[test]
    fn persistence_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let (records, summary) = run_batch(&small_config()).unwrap();

        let csv_path = dir.path().join("run.csv");
        save_records(&csv_path, &records).unwrap();
        assert_eq!(load_records(&csv_path).unwrap(), records);

        let json_path = dir.path().join("run.json");
        save_summary(&json_path, &summary).unwrap();
        assert_eq!(load_summary(&json_path).unwrap(), summary);
    }

    #[test]
    fn role_swap_batches_run() {
        let config = ExperimentConfig {
            key_length: 1,
            memory: 10,
            budget: BudgetSpec::Iterations(2),
            trials: 6,
            ..small_config()
        };
        let (_, alice) = run_batch_targeting(&config, AttackTarget::Alice).unwrap();
        let (_, bob) = run_batch_targeting(&config, AttackTarget::Bob).unwrap();
        assert_eq!(alice.success_rate, 1.0);
        assert_eq!(bob.success_rate, 1.0);
    }
}
