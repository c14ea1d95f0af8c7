//! The experiment harness behind the `dropout-lab` binary: the state and
//! exact-week grids over every (week, lag) combination, the importance
//! experiment, and all emitted files.
//!
//! Every grid cell is an independent nested cross-validation with a seed
//! derived from (master seed, task, week, lag), so grids are reproducible
//! bit-for-bit regardless of worker-thread count, and a cell computed in
//! isolation matches the same cell inside a full run.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{
    derive_labels, generate_synthetic, ingest_cohort, write_csvs, CourseCalendar, IngestOptions,
    LabeledCohort, SynthConfig,
};
use crate::error::{Error, Result};
use crate::evaluation::{nested_cv, ClassifierId, CvConfig, MetricValue, MetricsReport};
use crate::features::{assemble_matrix, FeatureConfig, Lag, TaskKind};
use crate::importance::{group_importance, summarize_distribution, temporal_weight, BoxStats};
use crate::seeds;

/// Where the cohort comes from.
#[derive(Debug, Clone)]
pub enum InputMode {
    Csv {
        profiles: PathBuf,
        forum: PathBuf,
        activity: PathBuf,
        calendar: CourseCalendar,
        skip_unknown_users: bool,
    },
    Synthetic(SynthConfig),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskId {
    StateGrid,
    ExactWeekGrid,
    Importance,
}

impl TaskId {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "state" | "state_grid" => Some(TaskId::StateGrid),
            "exactweek" | "exactweek_grid" | "exact_week" => Some(TaskId::ExactWeekGrid),
            "importance" => Some(TaskId::Importance),
            _ => None,
        }
    }
}

/// Full harness configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub input: InputMode,
    pub classifiers: Vec<ClassifierId>,
    pub tasks: Vec<TaskId>,
    pub cv: CvConfig,
    /// Forces SMOTE on or off for every task; `None` keeps the per-task
    /// defaults (off for state, on for exact-week and importance).
    pub smote_override: Option<bool>,
    pub features: FeatureConfig,
    pub out_dir: PathBuf,
    pub seed: u64,
}

impl RunConfig {
    pub fn synthetic_default(out_dir: PathBuf, seed: u64) -> Self {
        RunConfig {
            input: InputMode::Synthetic(SynthConfig::paper_calibration(3000, seed)),
            classifiers: vec![
                ClassifierId::Logistic,
                ClassifierId::Forest,
                ClassifierId::AdaBoost,
            ],
            tasks: vec![TaskId::StateGrid, TaskId::ExactWeekGrid, TaskId::Importance],
            cv: CvConfig::default(),
            smote_override: None,
            features: FeatureConfig::default(),
            out_dir,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.classifiers.is_empty() {
            return Err(Error::InvalidConfig("empty classifier set".into()));
        }
        if self.tasks.is_empty() {
            return Err(Error::InvalidConfig("empty task set".into()));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Config file parsing: `key = value` lines, `#` comments
// ---------------------------------------------------------------------------

fn parse_list<T, F: Fn(&str) -> Option<T>>(value: &str, parse: F, key: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            parse(s).ok_or_else(|| Error::InvalidConfig(format!("bad entry {s:?} for {key}")))
        })
        .collect()
}

fn parse_num<T: std::str::FromStr>(value: &str, key: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::InvalidConfig(format!("bad number {value:?} for {key}")))
}

fn parse_bool(value: &str, key: &str) -> Result<bool> {
    match value.trim() {
        "1" | "true" | "on" | "yes" => Ok(true),
        "0" | "false" | "off" | "no" => Ok(false),
        other => Err(Error::InvalidConfig(format!(
            "bad boolean {other:?} for {key}"
        ))),
    }
}

/// Parses the plain-text key-value configuration grammar.
///
/// Lines are `key = value`; `#` starts a comment; unknown keys are errors.
/// Every [`RunConfig`] field has a key; the README documents the full list.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    parse_config(&text)
}

pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut config = RunConfig::synthetic_default(PathBuf::from("results"), 0);
    let mut mode: Option<String> = None;
    let mut profiles: Option<PathBuf> = None;
    let mut forum: Option<PathBuf> = None;
    let mut activity: Option<PathBuf> = None;
    let mut calendar_start: Option<DateTime<Utc>> = None;
    let mut week_count: usize = 9;
    let mut skip_unknown = false;
    let mut synth = SynthConfig::paper_calibration(3000, 0);
    let mut smote_mode: Option<String> = None;

    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::InvalidConfig(format!(
                "line {}: expected `key = value`, got {raw:?}",
                lineno + 1
            )));
        };
        let key = key.trim();
        let value = value.trim();
        match key {
            "input.mode" => mode = Some(value.to_string()),
            "input.profiles" => profiles = Some(PathBuf::from(value)),
            "input.forum" => forum = Some(PathBuf::from(value)),
            "input.activity" => activity = Some(PathBuf::from(value)),
            "input.skip_unknown_users" => skip_unknown = parse_bool(value, key)?,
            "calendar.start" => {
                calendar_start = Some(
                    DateTime::parse_from_rfc3339(value)
                        .map_err(|e| {
                            Error::InvalidConfig(format!("bad calendar.start {value:?}: {e}"))
                        })?
                        .with_timezone(&Utc),
                )
            }
            "calendar.weeks" => week_count = parse_num(value, key)?,
            "synth.users" => synth.user_count = parse_num(value, key)?,
            "synth.dropout_rate" => synth.dropout_rate = parse_num(value, key)?,
            "synth.no_assignment_fraction" => {
                synth.no_assignment_fraction = parse_num(value, key)?
            }
            "synth.completion_rate_among_submitters" => {
                synth.completion_rate_among_submitters = parse_num(value, key)?
            }
            "synth.empty_profile_fraction" => {
                synth.empty_profile_fraction = parse_num(value, key)?
            }
            "synth.completion_rate_among_empty_profiles" => {
                synth.completion_rate_among_empty_profiles = parse_num(value, key)?
            }
            "synth.signal.start" => synth.signals.base_start_log_odds = parse_num(value, key)?,
            "synth.signal.persist" => {
                synth.signals.base_persist_log_odds = parse_num(value, key)?
            }
            "synth.signal.assignment" => {
                synth.signals.assignment_log_odds = parse_num(value, key)?
            }
            "synth.signal.forum" => synth.signals.forum_log_odds = parse_num(value, key)?,
            "synth.signal.profile" => synth.signals.profile_log_odds = parse_num(value, key)?,
            "classifiers" => {
                config.classifiers = parse_list(value, ClassifierId::parse, key)?;
            }
            "tasks" => {
                config.tasks = parse_list(value, TaskId::parse, key)?;
            }
            "cv.outer_k" => config.cv.outer_k = parse_num(value, key)?,
            "cv.inner_k" => config.cv.inner_k = parse_num(value, key)?,
            "cv.threshold" => config.cv.threshold = parse_num(value, key)?,
            "cv.smote_neighbors" => config.cv.smote_neighbors = parse_num(value, key)?,
            "cv.smote_target_ratio" => config.cv.smote_target_ratio = parse_num(value, key)?,
            "grid.lambda" => {
                config.cv.lambda_grid = parse_list(value, |s| s.parse().ok(), key)?;
            }
            "grid.alpha" => {
                config.cv.alpha_grid = parse_list(value, |s| s.parse().ok(), key)?;
            }
            "grid.forest_trees" => {
                config.cv.forest_trees_grid = parse_list(value, |s| s.parse().ok(), key)?;
            }
            "grid.boost_rounds" => {
                config.cv.boost_rounds_grid = parse_list(value, |s| s.parse().ok(), key)?;
            }
            "grid.boost_depth" => {
                config.cv.boost_depth_grid = parse_list(value, |s| s.parse().ok(), key)?;
            }
            "smote" => smote_mode = Some(value.to_string()),
            "features.include_dropped" => {
                config.features.include_dropped = parse_bool(value, key)?
            }
            "features.cumulative" => config.features.cumulative_weeks = parse_bool(value, key)?,
            "out" => config.out_dir = PathBuf::from(value),
            "seed" => config.seed = parse_num(value, key)?,
            other => {
                return Err(Error::InvalidConfig(format!(
                    "line {}: unknown key {other:?}",
                    lineno + 1
                )))
            }
        }
    }

    config.smote_override = match smote_mode.as_deref() {
        None | Some("default") => None,
        Some("on") => Some(true),
        Some("off") => Some(false),
        Some(other) => {
            return Err(Error::InvalidConfig(format!(
                "smote must be on, off, or default, got {other:?}"
            )))
        }
    };

    match mode.as_deref() {
        None | Some("synthetic") => {
            synth.week_count = week_count;
            synth.seed = config.seed;
            config.input = InputMode::Synthetic(synth);
        }
        Some("csv") => {
            let start = calendar_start.ok_or_else(|| {
                Error::InvalidConfig("csv mode needs calendar.start".into())
            })?;
            let need = |o: Option<PathBuf>, key: &str| {
                o.ok_or_else(|| Error::InvalidConfig(format!("csv mode needs {key}")))
            };
            config.input = InputMode::Csv {
                profiles: need(profiles, "input.profiles")?,
                forum: need(forum, "input.forum")?,
                activity: need(activity, "input.activity")?,
                calendar: CourseCalendar::new(start, week_count)?,
                skip_unknown_users: skip_unknown,
            };
        }
        Some(other) => {
            return Err(Error::InvalidConfig(format!(
                "input.mode must be synthetic or csv, got {other:?}"
            )))
        }
    }

    config.validate()?;
    Ok(config)
}

// ---------------------------------------------------------------------------
// Grids
// ---------------------------------------------------------------------------

/// One grid position.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Cell {
    pub week: usize,
    pub lag: Lag,
}

impl Cell {
    pub fn key(&self) -> String {
        format!("w{}_l{}", self.week, self.lag)
    }
}

/// Every (week, lag) combination: lags -1..=w for each week.
pub fn full_grid(week_count: usize) -> Vec<Cell> {
    let mut cells = Vec::new();
    for week in 0..week_count {
        cells.push(Cell {
            week,
            lag: Lag::ProfileOnly,
        });
        for lag in 0..=week {
            cells.push(Cell {
                week,
                lag: Lag::Weeks(lag),
            });
        }
    }
    cells
}

/// The lag-equals-week diagonal, the richest cell per week.
pub fn diagonal_grid(week_count: usize) -> Vec<Cell> {
    (0..week_count)
        .map(|week| Cell {
            week,
            lag: Lag::Weeks(week),
        })
        .collect()
}

/// Deterministic per-cell seed: a pure function of the master seed, task
/// kind, and cell coordinates, shared by every classifier so their fold
/// plans match.
fn cell_seed(master: u64, kind: TaskKind, cell: &Cell) -> u64 {
    let kind_tag = match kind {
        TaskKind::State => 1u64,
        TaskKind::ExactWeek => 2u64,
    };
    let lag_tag = (cell.lag.as_i64() + 1) as u64;
    seeds::child_indexed(
        master,
        seeds::domain::CELL,
        kind_tag * 4096 + (cell.week as u64) * 64 + lag_tag,
    )
}

#[derive(Debug, Clone)]
pub struct CellResult {
    pub cell: Cell,
    pub report: MetricsReport,
}

/// Runs nested cross-validation on a set of grid cells for one classifier.
///
/// Cells whose dataset cannot be assembled (for instance an exact-week
/// target with no eligible rows) become unevaluable reports, never holes.
pub fn run_task_cells(
    labeled: &LabeledCohort,
    kind: TaskKind,
    cells: &[Cell],
    classifier: ClassifierId,
    cv: &CvConfig,
    features: &FeatureConfig,
    master_seed: u64,
) -> Result<Vec<CellResult>> {
    let results: Result<Vec<CellResult>> = cells
        .par_iter()
        .map(|cell| {
            let mut cv = cv.clone();
            cv.seed = cell_seed(master_seed, kind, cell);
            let report = match assemble_matrix(labeled, kind, cell.week, cell.lag, true, features)
            {
                Ok(dataset) => nested_cv(&dataset, classifier, &cv)?,
                Err(e) => {
                    let mut r = MetricsReport {
                        classifier,
                        task: None,
                        folds: Vec::new(),
                        mean_auroc: MetricValue::Undefined(e.to_string()),
                        pooled_auroc: MetricValue::Undefined(e.to_string()),
                        mean_f2: MetricValue::Undefined(e.to_string()),
                        mean_precision: MetricValue::Undefined(e.to_string()),
                        mean_recall: MetricValue::Undefined(e.to_string()),
                        total_confusion: Default::default(),
                        warnings: Vec::new(),
                        hygiene_violations: 0,
                        unevaluable: Some(e.to_string()),
                        mean_column_importance: None,
                    };
                    r.unevaluable = Some(e.to_string());
                    r
                }
            };
            Ok(CellResult {
                cell: *cell,
                report,
            })
        })
        .collect();
    results
}

fn grid_csv(
    results: &[CellResult],
    week_count: usize,
    metric: impl Fn(&MetricsReport) -> &MetricValue,
) -> String {
    let by_key: BTreeMap<String, &CellResult> =
        results.iter().map(|r| (r.cell.key(), r)).collect();
    let mut out = String::from("week");
    out.push_str(",lag_-1");
    for lag in 0..week_count {
        out.push_str(&format!(",lag_{lag}"));
    }
    out.push('\n');
    for week in 0..week_count {
        out.push_str(&format!("{week}"));
        for lag_i in -1i64..week_count as i64 {
            out.push(',');
            if lag_i > week as i64 {
                continue; // structurally absent: later lag than target week
            }
            let lag = if lag_i < 0 {
                Lag::ProfileOnly
            } else {
                Lag::Weeks(lag_i as usize)
            };
            let key = Cell { week, lag }.key();
            match by_key.get(&key) {
                Some(result) => match metric(&result.report) {
                    MetricValue::Defined(v) => out.push_str(&format!("{v:.6}")),
                    MetricValue::Undefined(reason) => {
                        out.push_str(&format!("\"n/a: {}\"", reason.replace('"', "'")))
                    }
                },
                None => {}
            }
        }
        out.push('\n');
    }
    out
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| Error::Io {
            path: parent.display().to_string(),
            source: e,
        })?;
    }
    std::fs::File::create(path)
        .and_then(|mut f| f.write_all(contents.as_bytes()))
        .map_err(|e| Error::Io {
            path: path.display().to_string(),
            source: e,
        })
}

fn reports_json(results: &[CellResult]) -> Result<String> {
    let map: BTreeMap<String, &MetricsReport> =
        results.iter().map(|r| (r.cell.key(), &r.report)).collect();
    Ok(serde_json::to_string_pretty(&map)?)
}

fn summary_text(results: &[CellResult]) -> String {
    let mut out = String::new();
    for r in results {
        out.push_str(&format!("=== cell {} ===\n", r.cell.key()));
        out.push_str(&r.report.to_text());
        out.push('\n');
    }
    out
}

fn effective_cv(base: &CvConfig, task_default_smote: bool, smote_override: Option<bool>) -> CvConfig {
    let mut cv = base.clone();
    cv.smote = smote_override.unwrap_or(task_default_smote);
    cv
}

/// Runs the state-prediction grid and writes `state_auroc.csv`,
/// `state_f2.csv`, `state_reports.json`, and `state_summary.txt` per
/// classifier. SMOTE is off by default for this task.
pub fn run_state_grid(labeled: &LabeledCohort, config: &RunConfig) -> Result<()> {
    let cells = full_grid(labeled.cohort.calendar.week_count);
    let cv = effective_cv(&config.cv, false, config.smote_override);
    for &classifier in &config.classifiers {
        let results = run_task_cells(
            labeled,
            TaskKind::State,
            &cells,
            classifier,
            &cv,
            &config.features,
            config.seed,
        )?;
        let dir = config.out_dir.join(classifier.as_str());
        let week_count = labeled.cohort.calendar.week_count;
        write_file(
            &dir.join("state_auroc.csv"),
            &grid_csv(&results, week_count, |r| &r.mean_auroc),
        )?;
        write_file(
            &dir.join("state_f2.csv"),
            &grid_csv(&results, week_count, |r| &r.mean_f2),
        )?;
        write_file(&dir.join("state_reports.json"), &reports_json(&results)?)?;
        write_file(&dir.join("state_summary.txt"), &summary_text(&results))?;
    }
    Ok(())
}

/// Runs the exact-week grid (SMOTE on by default) and writes the same file
/// family with the `exactweek_` prefix.
pub fn run_exactweek_grid(labeled: &LabeledCohort, config: &RunConfig) -> Result<()> {
    let cells = full_grid(labeled.cohort.calendar.week_count);
    let cv = effective_cv(&config.cv, true, config.smote_override);
    for &classifier in &config.classifiers {
        let results = run_task_cells(
            labeled,
            TaskKind::ExactWeek,
            &cells,
            classifier,
            &cv,
            &config.features,
            config.seed,
        )?;
        let dir = config.out_dir.join(classifier.as_str());
        let week_count = labeled.cohort.calendar.week_count;
        write_file(
            &dir.join("exactweek_auroc.csv"),
            &grid_csv(&results, week_count, |r| &r.mean_auroc),
        )?;
        write_file(
            &dir.join("exactweek_f2.csv"),
            &grid_csv(&results, week_count, |r| &r.mean_f2),
        )?;
        write_file(&dir.join("exactweek_reports.json"), &reports_json(&results)?)?;
        write_file(&dir.join("exactweek_summary.txt"), &summary_text(&results))?;
    }
    Ok(())
}

/// Grouped importance rows for one task pool.
#[derive(Debug, Clone, Serialize)]
pub struct ImportanceRow {
    pub task: String,
    pub prediction: String,
    pub group: String,
    pub ri: f64,
    pub tw: Option<f64>,
}

#[derive(Debug, Default, Serialize)]
pub struct PoolStats {
    pub ri: BTreeMap<String, BoxStats>,
    pub tw: BTreeMap<String, BoxStats>,
}

/// Runs the importance experiment: empty-profile users removed, the
/// exact-week grid rerun (plus a labeled state pool), grouped RI and TW
/// extracted per prediction from the outer-fold AdaBoost refits.
pub fn run_importance(labeled: &LabeledCohort, config: &RunConfig) -> Result<()> {
    if !config.classifiers.contains(&ClassifierId::AdaBoost) {
        return Err(Error::InvalidConfig(
            "the importance experiment needs adaboost in the classifier set".into(),
        ));
    }
    let filtered = labeled.without_empty_profiles();
    let cells = full_grid(filtered.cohort.calendar.week_count);

    let mut all_rows: Vec<ImportanceRow> = Vec::new();
    let mut stats: BTreeMap<String, PoolStats> = BTreeMap::new();

    // The importance pools run on the filtered cohort under their own seed
    // branch so they never collide with the main grids.
    const IMPORTANCE_BRANCH: u64 = 0x51;
    for (task_name, kind, default_smote) in [
        ("exact_week", TaskKind::ExactWeek, true),
        ("state", TaskKind::State, false),
    ] {
        let cv = effective_cv(&config.cv, default_smote, config.smote_override);
        let results = run_task_cells(
            &filtered,
            kind,
            &cells,
            ClassifierId::AdaBoost,
            &cv,
            &config.features,
            seeds::child(config.seed, IMPORTANCE_BRANCH),
        )?;

        let mut ri_pool: BTreeMap<String, Vec<f64>> = BTreeMap::new();
        let mut tw_pool: BTreeMap<String, Vec<f64>> = BTreeMap::new();
        for result in &results {
            let Some(column_ri) = &result.report.mean_column_importance else {
                continue;
            };
            // Rebuild the cell's descriptors to group against.
            let dataset = assemble_matrix(
                &filtered,
                kind,
                result.cell.week,
                result.cell.lag,
                true,
                &config.features,
            )?;
            let records = group_importance(column_ri, &dataset.descriptors)?;
            for record in records {
                let tw = temporal_weight(&record).value();
                if record.ri > 0.0 {
                    ri_pool
                        .entry(record.group_id.clone())
                        .or_default()
                        .push(record.ri);
                    if let Some(tw) = tw {
                        tw_pool
                            .entry(record.group_id.clone())
                            .or_default()
                            .push(tw);
                    }
                }
                all_rows.push(ImportanceRow {
                    task: task_name.to_string(),
                    prediction: result.cell.key(),
                    group: record.group_id,
                    ri: record.ri,
                    tw,
                });
            }
        }
        let pool = stats.entry(task_name.to_string()).or_default();
        for (group, values) in ri_pool {
            pool.ri.insert(group, summarize_distribution(&values)?);
        }
        for (group, values) in tw_pool {
            pool.tw.insert(group, summarize_distribution(&values)?);
        }
    }

    let mut csv = String::from("task,prediction,group,ri,tw\n");
    for row in &all_rows {
        csv.push_str(&format!(
            "{},{},{},{:.6},{}\n",
            row.task,
            row.prediction,
            row.group,
            row.ri,
            row.tw.map_or(String::new(), |v| format!("{v:.6}")),
        ));
    }
    write_file(&config.out_dir.join("importance.csv"), &csv)?;
    write_file(
        &config.out_dir.join("boxstats.json"),
        &serde_json::to_string_pretty(&stats)?,
    )?;
    Ok(())
}

/// Produces the cohort for a run: CSV ingestion or synthetic generation.
pub fn prepare_cohort(config: &RunConfig) -> Result<LabeledCohort> {
    match &config.input {
        InputMode::Csv {
            profiles,
            forum,
            activity,
            calendar,
            skip_unknown_users,
        } => {
            let outcome = ingest_cohort(
                profiles,
                forum,
                activity,
                *calendar,
                IngestOptions {
                    skip_unknown_users: *skip_unknown_users,
                },
            )?;
            Ok(derive_labels(outcome.cohort))
        }
        InputMode::Synthetic(synth) => generate_synthetic(synth),
    }
}

/// Writes the synthetic cohort as the three CSV logs plus `cohort.json`.
pub fn run_synth(config: &RunConfig) -> Result<()> {
    let labeled = prepare_cohort(config)?;
    write_csvs(&labeled.cohort, &config.out_dir)?;
    write_file(
        &config.out_dir.join("cohort.json"),
        &labeled.cohort.to_json()?,
    )?;
    Ok(())
}

/// Runs the configured task set end to end.
pub fn run(config: &RunConfig) -> Result<()> {
    config.validate()?;
    let labeled = prepare_cohort(config)?;
    for task in &config.tasks {
        match task {
            TaskId::StateGrid => run_state_grid(&labeled, config)?,
            TaskId::ExactWeekGrid => run_exactweek_grid(&labeled, config)?,
            TaskId::Importance => run_importance(&labeled, config)?,
        }
    }
    Ok(())
}

/// Exit-code mapping: configuration problems are 2, data problems 3.
pub fn exit_code(error: &Error) -> i32 {
    match error {
        Error::InvalidConfig(_) => 2,
        _ => 3,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_grid_has_54_cells_for_nine_weeks() {
        let cells = full_grid(9);
        assert_eq!(cells.len(), 54);
        // 9 profile-only cells plus sum over weeks of (w + 1).
        let profile_only = cells
            .iter()
            .filter(|c| c.lag == Lag::ProfileOnly)
            .count();
        assert_eq!(profile_only, 9);
    }

    #[test]
    fn cell_seeds_are_distinct_across_tasks_and_cells() {
        use std::collections::BTreeSet;
        let mut seen = BTreeSet::new();
        for kind in [TaskKind::State, TaskKind::ExactWeek] {
            for cell in full_grid(9) {
                assert!(seen.insert(cell_seed(42, kind, &cell)));
            }
        }
    }

    #[test]
    fn config_parser_round_trip() {
        let text = "
# comment line
input.mode = synthetic
synth.users = 500
classifiers = logistic , adaboost
tasks = state
cv.outer_k = 4
cv.inner_k = 2
grid.lambda = 0.1, 1
grid.alpha = 0.5
smote = off
features.include_dropped = true
out = /tmp/somewhere
seed = 99
";
        let config = parse_config(text).unwrap();
        assert_eq!(config.seed, 99);
        assert_eq!(config.classifiers.len(), 2);
        assert_eq!(config.tasks, vec![TaskId::StateGrid]);
        assert_eq!(config.cv.outer_k, 4);
        assert_eq!(config.cv.lambda_grid, vec![0.1, 1.0]);
        assert_eq!(config.smote_override, Some(false));
        assert!(config.features.include_dropped);
        let InputMode::Synthetic(synth) = &config.input else {
            panic!("expected synthetic input");
        };
        assert_eq!(synth.user_count, 500);
        assert_eq!(synth.seed, 99);
    }

    #[test]
    fn config_parser_rejects_unknown_keys_and_bad_lines() {
        assert!(parse_config("nonsense.key = 1").is_err());
        assert!(parse_config("just words").is_err());
        assert!(parse_config("cv.outer_k = ten").is_err());
        assert!(parse_config("classifiers = ").is_err());
    }

    #[test]
    fn csv_mode_requires_paths() {
        let err = parse_config("input.mode = csv").unwrap_err();
        assert!(matches!(err, Error::InvalidConfig(_)));
    }
}
