//! Batch experiment driver: algorithm x feedback-model grids over instance
//! files, exact per-scenario evaluation, CSV result rows, ratio reports,
//! and the oracle report.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use num::{BigInt, BigRational, Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use rcds_core::{
    optimal_wavg_with_guard, run_borgs_local, run_cds_based, run_greedy, run_polymatroid_policy,
    satisfies_approx_bound, validate_trace, FeedbackModel, FullRealization, Graph, OracleError,
    OracleGuard, PolicyError, PolicyTrace, ScenarioSet, SolverError,
};

use crate::io::{read_instance, LoadedInstance};
use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Algorithm {
    Polymatroid,
    Greedy,
    CdsBased,
    Borgs,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [
        Algorithm::Polymatroid,
        Algorithm::Greedy,
        Algorithm::CdsBased,
        Algorithm::Borgs,
    ];

    pub fn token(self) -> &'static str {
        match self {
            Algorithm::Polymatroid => "polymatroid",
            Algorithm::Greedy => "greedy",
            Algorithm::CdsBased => "cds-based",
            Algorithm::Borgs => "borgs",
        }
    }
}

impl FromStr for Algorithm {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "polymatroid" => Ok(Algorithm::Polymatroid),
            "greedy" => Ok(Algorithm::Greedy),
            "cds-based" => Ok(Algorithm::CdsBased),
            "borgs" => Ok(Algorithm::Borgs),
            other => Err(format!(
                "unknown algorithm '{other}' (expected polymatroid, greedy, cds-based, or borgs)"
            )),
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Model {
    Full,
    Local,
}

impl Model {
    pub const ALL: [Model; 2] = [Model::Full, Model::Local];

    pub fn token(self) -> &'static str {
        match self {
            Model::Full => "full",
            Model::Local => "local",
        }
    }

    pub fn feedback(self) -> FeedbackModel {
        match self {
            Model::Full => FeedbackModel::Full,
            Model::Local => FeedbackModel::Local,
        }
    }
}

impl FromStr for Model {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "full" => Ok(Model::Full),
            "local" => Ok(Model::Local),
            other => Err(format!("unknown model '{other}' (expected full or local)")),
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

/// One batch: a grid of (instance, algorithm, model) cells. The seed feeds
/// the randomized baseline; the budget caps each exact solve.
#[derive(Clone, Debug)]
pub struct ExperimentSpec {
    pub instances: Vec<PathBuf>,
    pub algorithms: Vec<Algorithm>,
    pub models: Vec<Model>,
    pub seed: u64,
    pub budget: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResultRow {
    pub instance_id: String,
    pub family: String,
    pub n: usize,
    #[serde(rename = "M")]
    pub m: u64,
    pub algorithm: String,
    pub model: String,
    pub w_avg: String,
    pub w_avg_active: String,
    pub max_rounds: usize,
    pub runtime_ms: u64,
    pub seed: u64,
}

/// Render a nonnegative rational as a decimal string with exactly nine
/// fractional digits, truncated toward zero.
pub fn decimal9(r: &BigRational) -> String {
    let scale = BigInt::from(1_000_000_000u64);
    let scaled = (r.numer() * &scale) / r.denom();
    let magnitude = scaled.abs();
    let int_part = &magnitude / &scale;
    let frac_part = &magnitude % &scale;
    let sign = if scaled.is_negative() { "-" } else { "" };
    format!("{sign}{int_part}.{frac_part:09}")
}

/// Parse a decimal string produced by `decimal9` back to the exact value
/// it encodes.
pub fn parse_decimal9(text: &str) -> Result<BigRational, CliError> {
    let bad = || CliError::Malformed(format!("not a nine-digit decimal: '{text}'"));
    let (int_part, frac_part) = text.split_once('.').ok_or_else(bad)?;
    if frac_part.len() != 9 || frac_part.bytes().any(|b| !b.is_ascii_digit()) {
        return Err(bad());
    }
    let negative = int_part.starts_with('-');
    let digits = int_part.strip_prefix('-').unwrap_or(int_part);
    if digits.is_empty() || digits.bytes().any(|b| !b.is_ascii_digit()) {
        return Err(bad());
    }
    let scale = BigInt::from(1_000_000_000u64);
    let value = BigInt::from_str(digits).map_err(|_| bad())? * &scale
        + BigInt::from_str(frac_part).map_err(|_| bad())?;
    let value = if negative { -value } else { value };
    Ok(BigRational::new(value, scale))
}

fn map_policy_error(e: PolicyError) -> CliError {
    match e {
        PolicyError::Solver(SolverError::Limit(b)) => CliError::Guard(format!(
            "exact solve exceeded the node budget of {b}; raise --budget or shrink the instance"
        )),
        other => CliError::Malformed(format!("policy run failed: {other}")),
    }
}

fn map_oracle_error(e: OracleError) -> CliError {
    match e {
        OracleError::TooLarge { .. } => CliError::Guard(e.to_string()),
        other => CliError::Malformed(format!("oracle failed: {other}")),
    }
}

/// Run one policy over every scenario of the instance and reduce exactly.
/// Returns expected weight, expected active weight, and the largest round
/// count over scenarios (at least 1).
pub fn evaluate_cell(
    g: &Graph,
    s: &ScenarioSet,
    algorithm: Algorithm,
    model: Model,
    seed: u64,
    budget: Option<u64>,
) -> Result<(BigRational, BigRational, usize), CliError> {
    let feedback = model.feedback();
    let run_one = |i: usize, psi: &FullRealization| -> Result<PolicyTrace, PolicyError> {
        match algorithm {
            Algorithm::Polymatroid => run_polymatroid_policy(g, s, feedback, psi, budget),
            Algorithm::Greedy => run_greedy(g, s, feedback, psi),
            Algorithm::CdsBased => run_cds_based(g, s, feedback, psi, budget),
            Algorithm::Borgs => run_borgs_local(g, s, feedback, psi, seed.wrapping_add(i as u64)),
        }
    };
    let traces: Result<Vec<PolicyTrace>, PolicyError> = (0..s.len())
        .into_par_iter()
        .map(|i| {
            let trace = run_one(i, s.scenario(i))?;
            validate_trace(g, feedback, s.scenario(i), &trace)?;
            Ok(trace)
        })
        .collect();
    let traces = traces.map_err(map_policy_error)?;
    let mut w_avg = BigRational::zero();
    let mut w_active = BigRational::zero();
    let mut max_rounds = 1usize;
    for (i, trace) in traces.iter().enumerate() {
        let p = s.prob(i);
        w_avg += &p * &trace.total_weight;
        w_active += &p * &trace.active_weight;
        max_rounds = max_rounds.max(trace.rounds);
    }
    Ok((w_avg, w_active, max_rounds))
}

/// Execute the whole grid. Rows come back in (instance, model, algorithm)
/// order; the randomized baseline only runs under local feedback, so its
/// full-model cells are skipped.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<ResultRow>, CliError> {
    if spec.instances.is_empty() {
        return Err(CliError::Usage("no instance files given".into()));
    }
    if spec.algorithms.is_empty() || spec.models.is_empty() {
        return Err(CliError::Usage(
            "algorithm and model selections must be nonempty".into(),
        ));
    }
    let mut rows = Vec::new();
    for path in &spec.instances {
        let loaded = read_instance(path)?;
        for &model in &spec.models {
            for &algorithm in &spec.algorithms {
                if algorithm == Algorithm::Borgs && model == Model::Full {
                    continue;
                }
                rows.push(build_row(&loaded, algorithm, model, spec.seed, spec.budget)?);
            }
        }
    }
    Ok(rows)
}

fn build_row(
    loaded: &LoadedInstance,
    algorithm: Algorithm,
    model: Model,
    seed: u64,
    budget: Option<u64>,
) -> Result<ResultRow, CliError> {
    let start = Instant::now();
    let (w_avg, w_active, max_rounds) = evaluate_cell(
        &loaded.graph,
        &loaded.scenarios,
        algorithm,
        model,
        seed,
        budget,
    )?;
    let runtime_ms = start.elapsed().as_millis().try_into().unwrap_or(u64::MAX);
    Ok(ResultRow {
        instance_id: loaded.id.clone(),
        family: loaded.family.clone(),
        n: loaded.graph.n(),
        m: loaded.scenarios.m(),
        algorithm: algorithm.token().into(),
        model: model.token().into(),
        w_avg: decimal9(&w_avg),
        w_avg_active: decimal9(&w_active),
        max_rounds,
        runtime_ms,
        seed,
    })
}

/// Append rows to a CSV file, writing the header only when the file is new
/// or empty.
pub fn append_rows(path: &Path, rows: &[ResultRow]) -> Result<(), CliError> {
    let need_header = std::fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
    let file = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| CliError::Malformed(format!("{}: {e}", path.display())))?;
    let mut writer = csv::WriterBuilder::new()
        .has_headers(need_header)
        .from_writer(file);
    for row in rows {
        writer
            .serialize(row)
            .map_err(|e| CliError::Malformed(format!("csv write failed: {e}")))?;
    }
    writer
        .flush()
        .map_err(|e| CliError::Malformed(format!("csv write failed: {e}")))?;
    Ok(())
}

pub fn read_rows(path: &Path) -> Result<Vec<ResultRow>, CliError> {
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| CliError::Malformed(format!("{}: {e}", path.display())))?;
    let mut rows = Vec::new();
    for record in reader.deserialize() {
        rows.push(record.map_err(|e| CliError::Malformed(format!("{}: {e}", path.display())))?);
    }
    Ok(rows)
}

/// Serialize rows with a header, for byte-stable round-trip checks.
pub fn rows_to_string(rows: &[ResultRow]) -> Result<String, CliError> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for row in rows {
        writer
            .serialize(row)
            .map_err(|e| CliError::Malformed(format!("csv write failed: {e}")))?;
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| CliError::Malformed(format!("csv write failed: {e}")))?;
    String::from_utf8(bytes).map_err(|e| CliError::Malformed(format!("csv not utf-8: {e}")))
}

/// Per-instance ratios of each algorithm's w_avg to the exact-policy
/// baseline, followed by min/max/mean aggregates per algorithm and model.
/// When the same cell appears several times the latest row wins.
pub fn compare_report(rows: &[ResultRow]) -> Result<String, CliError> {
    let mut cells: BTreeMap<(String, String, String), BigRational> = BTreeMap::new();
    for row in rows {
        cells.insert(
            (
                row.instance_id.clone(),
                row.model.clone(),
                row.algorithm.clone(),
            ),
            parse_decimal9(&row.w_avg)?,
        );
    }
    let mut lines = vec!["instance_id,model,algorithm,ratio".to_string()];
    let mut aggregates: BTreeMap<(String, String), Vec<BigRational>> = BTreeMap::new();
    for ((instance, model, algorithm), value) in &cells {
        if algorithm == Algorithm::Polymatroid.token() {
            continue;
        }
        let baseline = cells
            .get(&(
                instance.clone(),
                model.clone(),
                Algorithm::Polymatroid.token().to_string(),
            ))
            .ok_or_else(|| {
                CliError::MissingBaseline(format!(
                    "no polymatroid row for instance '{instance}' under model '{model}'"
                ))
            })?;
        if baseline.is_zero() {
            return Err(CliError::MissingBaseline(format!(
                "zero baseline for instance '{instance}' under model '{model}'"
            )));
        }
        let ratio = value / baseline;
        lines.push(format!("{instance},{model},{algorithm},{}", decimal9(&ratio)));
        aggregates
            .entry((algorithm.clone(), model.clone()))
            .or_default()
            .push(ratio);
    }
    lines.push(String::new());
    lines.push("algorithm,model,min,max,mean".to_string());
    for ((algorithm, model), ratios) in &aggregates {
        let min = ratios.iter().min().expect("nonempty");
        let max = ratios.iter().max().expect("nonempty");
        let mean = ratios.iter().sum::<BigRational>()
            / BigRational::from_integer(BigInt::from(ratios.len()));
        lines.push(format!(
            "{algorithm},{model},{},{},{}",
            decimal9(min),
            decimal9(max),
            decimal9(&mean)
        ));
    }
    lines.push(String::new());
    Ok(lines.join("\n"))
}

/// The optimal adaptive value, the round-bound budget, and each requested
/// algorithm's exact ratio against the optimum.
pub fn oracle_report(
    loaded: &LoadedInstance,
    model: Model,
    algorithms: &[Algorithm],
    guard: &OracleGuard,
    seed: u64,
    budget: Option<u64>,
) -> Result<String, CliError> {
    let g = &loaded.graph;
    let s = &loaded.scenarios;
    let optimal =
        optimal_wavg_with_guard(g, s, model.feedback(), guard).map_err(map_oracle_error)?;
    let (delta_num, delta_den) = s.delta();
    let bound = 2.0 * (1.0 + ((delta_den as f64) / (delta_num as f64)).log2());
    let mut lines = vec![
        format!("instance_id,{}", loaded.id),
        format!("model,{}", model),
        format!("optimal_wavg,{}", decimal9(&optimal)),
        format!("approx_budget,{bound:.9}"),
        "algorithm,w_avg,ratio,within_budget".to_string(),
    ];
    for &algorithm in algorithms {
        if algorithm == Algorithm::Borgs && model == Model::Full {
            continue;
        }
        let (w_avg, _, _) = evaluate_cell(g, s, algorithm, model, seed, budget)?;
        let ratio = if optimal.is_zero() {
            "n/a".to_string()
        } else {
            decimal9(&(&w_avg / &optimal))
        };
        let verdict = match satisfies_approx_bound(&w_avg, &optimal, s) {
            Some(true) => "yes",
            Some(false) => "no",
            None => "unknown",
        };
        lines.push(format!(
            "{algorithm},{},{ratio},{verdict}",
            decimal9(&w_avg)
        ));
    }
    lines.push(String::new());
    Ok(lines.join("\n"))
}
