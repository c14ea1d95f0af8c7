//! Turns a labeled cohort into numeric design matrices for any
//! (task, target week, lag) combination.
//!
//! Profile fields are one-hot encoded with an explicit NC column (nominal)
//! or mapped to integer codes with a separate NC indicator (ordinal); text
//! fields enter as standardized lengths. Temporal features are computed per
//! week, so a prediction at week `w` with lag `l` sees the profile block
//! plus the week blocks `0..=l`, never anything later.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::Path;

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use crate::dataset::{ActivityKind, ForumKind, LabeledCohort, ProfileRecord};
use crate::error::{Error, Result};

/// Column encoding.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Encoding {
    /// One level of a one-hot-encoded nominal feature ("NC" is the blank
    /// level).
    OneHotLevel(String),
    /// Integer code 0..L-1 of an ordinal feature (0 when NC; the paired NC
    /// indicator column disambiguates).
    OrdinalCode,
    NumericStandardized,
    Boolean,
}

/// Identity and provenance of one matrix column.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureDescriptor {
    pub feature_id: String,
    /// Week the value was observed in; `None` for profile features.
    pub source_week: Option<usize>,
    pub encoding: Encoding,
    /// Un-lagged feature family, shared by all of a feature's columns.
    pub group_id: String,
}

impl FeatureDescriptor {
    /// Export header: `featureid[_wN][_level]`.
    pub fn column_name(&self) -> String {
        let mut name = self.feature_id.clone();
        if let Some(w) = self.source_week {
            name.push_str(&format!("_w{w}"));
        }
        if let Encoding::OneHotLevel(level) = &self.encoding {
            name.push('_');
            name.push_str(level);
        }
        name
    }
}

/// Prediction task tag carried by a dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    /// Has the user dropped out by week `w`?
    State,
    /// Does the user drop out exactly in week `w`?
    ExactWeek,
}

/// Highest temporal week a prediction may see; `ProfileOnly` is the lag -1
/// setting with no temporal blocks at all.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Lag {
    ProfileOnly,
    Weeks(usize),
}

impl Lag {
    pub fn as_i64(&self) -> i64 {
        match self {
            Lag::ProfileOnly => -1,
            Lag::Weeks(w) => *w as i64,
        }
    }
}

impl std::fmt::Display for Lag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.as_i64())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub kind: TaskKind,
    pub week: usize,
    pub lag: Lag,
    pub include_profile: bool,
}

/// Feature-set switches.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FeatureConfig {
    /// Include the features dropped during the original study's early
    /// experiments (country, primary language, the low-signal forum
    /// counts, and the instructor variants).
    pub include_dropped: bool,
    /// Accumulate temporal counts over weeks `0..=w` instead of within
    /// week `w` only.
    pub cumulative_weeks: bool,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            include_dropped: false,
            cumulative_weeks: false,
        }
    }
}

/// A dense design matrix with label vector and column descriptors.
///
/// Rows are ordered by user id; SMOTE appends synthetic rows flagged in
/// `synthetic`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    data: Vec<f64>,
    n_cols: usize,
    pub labels: Vec<u8>,
    pub descriptors: Vec<FeatureDescriptor>,
    pub task: TaskSpec,
    pub user_ids: Vec<String>,
    pub synthetic: Vec<bool>,
    pub standardized: bool,
}

impl Dataset {
    pub fn n_rows(&self) -> usize {
        self.labels.len()
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n_cols..(i + 1) * self.n_cols]
    }

    pub fn view(&self) -> ArrayView2<'_, f64> {
        ArrayView2::from_shape((self.n_rows(), self.n_cols), &self.data)
            .expect("row-major buffer matches shape")
    }

    pub fn positives(&self) -> usize {
        self.labels.iter().filter(|&&y| y == 1).count()
    }

    pub fn has_both_classes(&self) -> bool {
        let pos = self.positives();
        pos > 0 && pos < self.n_rows()
    }

    /// Appends a row (used by SMOTE).
    pub fn push_row(
        &mut self,
        values: &[f64],
        label: u8,
        user_id: String,
        synthetic: bool,
    ) -> Result<()> {
        if values.len() != self.n_cols {
            return Err(Error::DimensionMismatch {
                expected: self.n_cols,
                got: values.len(),
            });
        }
        self.data.extend_from_slice(values);
        self.labels.push(label);
        self.user_ids.push(user_id);
        self.synthetic.push(synthetic);
        Ok(())
    }

    /// Copies the given rows into a new dataset.
    pub fn select_rows(&self, rows: &[usize]) -> Dataset {
        let mut data = Vec::with_capacity(rows.len() * self.n_cols);
        let mut labels = Vec::with_capacity(rows.len());
        let mut user_ids = Vec::with_capacity(rows.len());
        let mut synthetic = Vec::with_capacity(rows.len());
        for &r in rows {
            data.extend_from_slice(self.row(r));
            labels.push(self.labels[r]);
            user_ids.push(self.user_ids[r].clone());
            synthetic.push(self.synthetic[r]);
        }
        Dataset {
            data,
            n_cols: self.n_cols,
            labels,
            descriptors: self.descriptors.clone(),
            task: self.task,
            user_ids,
            synthetic,
            standardized: self.standardized,
        }
    }

    /// Writes the matrix as CSV plus a JSON sidecar of descriptors.
    pub fn export_csv(&self, csv_path: &Path, sidecar_path: &Path) -> Result<()> {
        let mut out = String::from("user_id");
        for d in &self.descriptors {
            out.push(',');
            out.push_str(&d.column_name());
        }
        out.push_str(",label\n");
        for i in 0..self.n_rows() {
            out.push_str(&self.user_ids[i]);
            for v in self.row(i) {
                out.push(',');
                out.push_str(&format!("{v}"));
            }
            out.push_str(&format!(",{}\n", self.labels[i]));
        }
        std::fs::File::create(csv_path)
            .and_then(|mut f| f.write_all(out.as_bytes()))
            .map_err(|e| Error::Io {
                path: csv_path.display().to_string(),
                source: e,
            })?;
        let sidecar = serde_json::to_string_pretty(&self.descriptors)?;
        std::fs::File::create(sidecar_path)
            .and_then(|mut f| f.write_all(sidecar.as_bytes()))
            .map_err(|e| Error::Io {
                path: sidecar_path.display().to_string(),
                source: e,
            })?;
        Ok(())
    }
}

/// One extracted column block (profile, or one temporal week).
#[derive(Debug, Clone)]
pub struct Block {
    pub descriptors: Vec<FeatureDescriptor>,
    /// Row-major, rows aligned with the sorted user-id order.
    pub data: Vec<f64>,
    pub user_ids: Vec<String>,
}

impl Block {
    fn n_cols(&self) -> usize {
        self.descriptors.len()
    }
}

// ---------------------------------------------------------------------------
// Profile encoding
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ProfileFieldKind {
    Nominal,
    Ordinal,
    TextLength,
}

struct ProfileField {
    id: &'static str,
    kind: ProfileFieldKind,
    /// Dropped during the original study's early experiments; excluded by
    /// default.
    dropped: bool,
}

const PROFILE_FIELDS: &[ProfileField] = &[
    ProfileField {
        id: "country",
        kind: ProfileFieldKind::Nominal,
        dropped: true,
    },
    ProfileField {
        id: "primary_language",
        kind: ProfileFieldKind::Nominal,
        dropped: true,
    },
    ProfileField {
        id: "gender",
        kind: ProfileFieldKind::Nominal,
        dropped: false,
    },
    ProfileField {
        id: "biography_length",
        kind: ProfileFieldKind::TextLength,
        dropped: false,
    },
    ProfileField {
        id: "track",
        kind: ProfileFieldKind::Nominal,
        dropped: false,
    },
    ProfileField {
        id: "age_range",
        kind: ProfileFieldKind::Ordinal,
        dropped: false,
    },
    ProfileField {
        id: "motivation",
        kind: ProfileFieldKind::Nominal,
        dropped: false,
    },
    ProfileField {
        id: "education_role",
        kind: ProfileFieldKind::Nominal,
        dropped: false,
    },
    ProfileField {
        id: "education_experience",
        kind: ProfileFieldKind::Ordinal,
        dropped: false,
    },
    ProfileField {
        id: "pbl_experience",
        kind: ProfileFieldKind::Ordinal,
        dropped: false,
    },
    ProfileField {
        id: "interest_area",
        kind: ProfileFieldKind::Nominal,
        dropped: false,
    },
    ProfileField {
        id: "schedule_preference",
        kind: ProfileFieldKind::Nominal,
        dropped: false,
    },
    ProfileField {
        id: "timezone",
        kind: ProfileFieldKind::Nominal,
        dropped: false,
    },
    ProfileField {
        id: "anxiety",
        kind: ProfileFieldKind::Ordinal,
        dropped: false,
    },
    ProfileField {
        id: "determination",
        kind: ProfileFieldKind::Ordinal,
        dropped: false,
    },
    ProfileField {
        id: "objectives_length",
        kind: ProfileFieldKind::TextLength,
        dropped: false,
    },
    ProfileField {
        id: "first_mooc",
        kind: ProfileFieldKind::Nominal,
        dropped: false,
    },
    ProfileField {
        id: "discovery_medium",
        kind: ProfileFieldKind::Nominal,
        dropped: false,
    },
];

fn field_value<'a>(profile: &'a ProfileRecord, id: &str) -> &'a Option<String> {
    match id {
        "country" => &profile.country,
        "primary_language" => &profile.primary_language,
        "gender" => &profile.gender,
        "track" => &profile.track,
        "age_range" => &profile.age_range,
        "motivation" => &profile.motivation,
        "education_role" => &profile.education_role,
        "education_experience" => &profile.education_experience,
        "pbl_experience" => &profile.pbl_experience,
        "interest_area" => &profile.interest_area,
        "schedule_preference" => &profile.schedule_preference,
        "timezone" => &profile.timezone,
        "anxiety" => &profile.anxiety,
        "determination" => &profile.determination,
        "first_mooc" => &profile.first_mooc,
        "discovery_medium" => &profile.discovery_medium,
        _ => unreachable!("unknown profile field {id}"),
    }
}

fn length_value(profile: &ProfileRecord, id: &str) -> f64 {
    match id {
        "biography_length" => profile.biography_length as f64,
        "objectives_length" => profile.objectives_length as f64,
        _ => unreachable!("unknown length field {id}"),
    }
}

/// Observed level lists per categorical profile field.
///
/// Levels come from the data; ordinal levels are ordered by their natural
/// (lexicographic) sort, which the synthetic pools are named to respect.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProfileVocabulary {
    levels: BTreeMap<String, Vec<String>>,
}

impl ProfileVocabulary {
    pub fn from_cohort(cohort: &LabeledCohort) -> Self {
        let mut sets: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
        for field in PROFILE_FIELDS {
            if field.kind == ProfileFieldKind::TextLength {
                continue;
            }
            sets.insert(field.id, BTreeSet::new());
        }
        for user in &cohort.cohort.users {
            for field in PROFILE_FIELDS {
                if field.kind == ProfileFieldKind::TextLength {
                    continue;
                }
                if let Some(v) = field_value(&user.profile, field.id) {
                    sets.get_mut(field.id).unwrap().insert(v);
                }
            }
        }
        ProfileVocabulary {
            levels: sets
                .into_iter()
                .map(|(k, v)| {
                    (
                        k.to_string(),
                        v.into_iter().map(|s| s.to_string()).collect(),
                    )
                })
                .collect(),
        }
    }

    pub fn levels_of(&self, field: &str) -> &[String] {
        self.levels
            .get(field)
            .map(|v| v.as_slice())
            .unwrap_or(&[])
    }
}

fn sorted_users(cohort: &LabeledCohort) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..cohort.cohort.users.len()).collect();
    idx.sort_by(|&a, &b| cohort.cohort.users[a].id.cmp(&cohort.cohort.users[b].id));
    idx
}

/// Extracts the profile block: one-hot nominals with an explicit NC column,
/// ordinal codes with a separate NC indicator, and standardized-length text
/// fields.
pub fn extract_profile(cohort: &LabeledCohort, config: &FeatureConfig) -> Block {
    let vocab = ProfileVocabulary::from_cohort(cohort);
    extract_profile_with_vocab(cohort, &vocab, config)
        .expect("vocabulary built from the same cohort covers every level")
}

/// Profile extraction against an explicit vocabulary; values outside the
/// vocabulary are an error naming the feature and value.
pub fn extract_profile_with_vocab(
    cohort: &LabeledCohort,
    vocab: &ProfileVocabulary,
    config: &FeatureConfig,
) -> Result<Block> {
    let mut descriptors = Vec::new();
    for field in PROFILE_FIELDS {
        if field.dropped && !config.include_dropped {
            continue;
        }
        match field.kind {
            ProfileFieldKind::Nominal => {
                for level in vocab
                    .levels_of(field.id)
                    .iter()
                    .map(String::as_str)
                    .chain(std::iter::once("NC"))
                {
                    descriptors.push(FeatureDescriptor {
                        feature_id: field.id.to_string(),
                        source_week: None,
                        encoding: Encoding::OneHotLevel(level.to_string()),
                        group_id: field.id.to_string(),
                    });
                }
            }
            ProfileFieldKind::Ordinal => {
                descriptors.push(FeatureDescriptor {
                    feature_id: field.id.to_string(),
                    source_week: None,
                    encoding: Encoding::OrdinalCode,
                    group_id: field.id.to_string(),
                });
                descriptors.push(FeatureDescriptor {
                    feature_id: format!("{}_NC", field.id),
                    source_week: None,
                    encoding: Encoding::Boolean,
                    group_id: field.id.to_string(),
                });
            }
            ProfileFieldKind::TextLength => {
                descriptors.push(FeatureDescriptor {
                    feature_id: field.id.to_string(),
                    source_week: None,
                    encoding: Encoding::NumericStandardized,
                    group_id: field.id.to_string(),
                });
            }
        }
    }

    let order = sorted_users(cohort);
    let n_cols = descriptors.len();
    let mut data = vec![0.0; order.len() * n_cols];
    let mut user_ids = Vec::with_capacity(order.len());
    for (row, &u) in order.iter().enumerate() {
        let user = &cohort.cohort.users[u];
        user_ids.push(user.id.clone());
        let out = &mut data[row * n_cols..(row + 1) * n_cols];
        let mut col = 0usize;
        for field in PROFILE_FIELDS {
            if field.dropped && !config.include_dropped {
                continue;
            }
            match field.kind {
                ProfileFieldKind::Nominal => {
                    let levels = vocab.levels_of(field.id);
                    let value = field_value(&user.profile, field.id);
                    let hot = match value {
                        Some(v) => match levels.iter().position(|l| l == v) {
                            Some(pos) => pos,
                            None => {
                                return Err(Error::InvalidData(format!(
                                    "unknown level {v:?} for profile feature {}",
                                    field.id
                                )))
                            }
                        },
                        None => levels.len(), // the NC column
                    };
                    out[col + hot] = 1.0;
                    col += levels.len() + 1;
                }
                ProfileFieldKind::Ordinal => {
                    let levels = vocab.levels_of(field.id);
                    let value = field_value(&user.profile, field.id);
                    match value {
                        Some(v) => {
                            let code = levels.iter().position(|l| l == v).ok_or_else(|| {
                                Error::InvalidData(format!(
                                    "unknown level {v:?} for profile feature {}",
                                    field.id
                                ))
                            })?;
                            out[col] = code as f64;
                            out[col + 1] = 0.0;
                        }
                        None => {
                            out[col] = 0.0;
                            out[col + 1] = 1.0;
                        }
                    }
                    col += 2;
                }
                ProfileFieldKind::TextLength => {
                    out[col] = length_value(&user.profile, field.id);
                    col += 1;
                }
            }
        }
        debug_assert_eq!(col, n_cols);
    }

    Ok(Block {
        descriptors,
        data,
        user_ids,
    })
}

// ---------------------------------------------------------------------------
// Temporal features
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum TemporalId {
    Fp,
    FpL,
    FrBa,
    FrBaL,
    FrBaU,
    FrAb,
    FrAbL,
    FrAbP,
    FcBa,
    FcBaL,
    FcBaU,
    FcAb,
    FcAbL,
    FcAbP,
    FrBaI,
    FrBaLI,
    FrBaUI,
    FcBaI,
    FcBaLI,
    FcBaUI,
    A,
    Ar,
    Gh,
}

struct TemporalField {
    id: TemporalId,
    name: &'static str,
    boolean: bool,
    dropped: bool,
}

const TEMPORAL_FIELDS: &[TemporalField] = &[
    TemporalField { id: TemporalId::Fp, name: "fp", boolean: false, dropped: false },
    TemporalField { id: TemporalId::FpL, name: "fp_l", boolean: false, dropped: false },
    TemporalField { id: TemporalId::FrBa, name: "fr_ba", boolean: false, dropped: false },
    TemporalField { id: TemporalId::FrBaL, name: "fr_ba_l", boolean: false, dropped: true },
    TemporalField { id: TemporalId::FrBaU, name: "fr_ba_u", boolean: false, dropped: true },
    TemporalField { id: TemporalId::FrAb, name: "fr_ab", boolean: false, dropped: false },
    TemporalField { id: TemporalId::FrAbL, name: "fr_ab_l", boolean: false, dropped: false },
    TemporalField { id: TemporalId::FrAbP, name: "fr_ab_p", boolean: false, dropped: true },
    TemporalField { id: TemporalId::FcBa, name: "fc_ba", boolean: false, dropped: false },
    TemporalField { id: TemporalId::FcBaL, name: "fc_ba_l", boolean: false, dropped: true },
    TemporalField { id: TemporalId::FcBaU, name: "fc_ba_u", boolean: false, dropped: true },
    TemporalField { id: TemporalId::FcAb, name: "fc_ab", boolean: false, dropped: false },
    TemporalField { id: TemporalId::FcAbL, name: "fc_ab_l", boolean: false, dropped: false },
    TemporalField { id: TemporalId::FcAbP, name: "fc_ab_p", boolean: false, dropped: false },
    TemporalField { id: TemporalId::FrBaI, name: "fr_ba_i", boolean: false, dropped: true },
    TemporalField { id: TemporalId::FrBaLI, name: "fr_ba_l_i", boolean: false, dropped: true },
    TemporalField { id: TemporalId::FrBaUI, name: "fr_ba_u_i", boolean: false, dropped: true },
    TemporalField { id: TemporalId::FcBaI, name: "fc_ba_i", boolean: false, dropped: true },
    TemporalField { id: TemporalId::FcBaLI, name: "fc_ba_l_i", boolean: false, dropped: true },
    TemporalField { id: TemporalId::FcBaUI, name: "fc_ba_u_i", boolean: false, dropped: true },
    TemporalField { id: TemporalId::A, name: "a", boolean: true, dropped: false },
    TemporalField { id: TemporalId::Ar, name: "ar", boolean: true, dropped: false },
    TemporalField { id: TemporalId::Gh, name: "gh", boolean: true, dropped: false },
];

#[derive(Default, Clone)]
struct UserWeekStats {
    posts: u32,
    post_len_sum: f64,
    replies_received: u32,
    replies_received_len_sum: f64,
    repliers: BTreeSet<String>,
    replies_given: u32,
    replies_given_len_sum: f64,
    posts_replied_to: BTreeSet<String>,
    comments_received: u32,
    comments_received_len_sum: f64,
    commenters: BTreeSet<String>,
    comments_given: u32,
    comments_given_len_sum: f64,
    posts_commented_on: BTreeSet<String>,
    instr_replies_received: u32,
    instr_replies_received_len_sum: f64,
    instr_repliers: BTreeSet<String>,
    instr_comments_received: u32,
    instr_comments_received_len_sum: f64,
    instr_commenters: BTreeSet<String>,
    assignment: bool,
    review: bool,
    hangout: bool,
}

fn mean(sum: f64, count: u32) -> f64 {
    if count == 0 {
        0.0
    } else {
        sum / count as f64
    }
}

/// Computes the Table-style per-week features for every user.
///
/// Counts are within-week by default; the cumulative switch accumulates
/// weeks `0..=week` instead.
pub fn extract_temporal(
    cohort: &LabeledCohort,
    week: usize,
    config: &FeatureConfig,
) -> Result<Block> {
    let week_count = cohort.cohort.calendar.week_count;
    if week >= week_count {
        return Err(Error::InvalidConfig(format!(
            "week {week} outside 0..{week_count}"
        )));
    }

    let order = sorted_users(cohort);
    let index_of: BTreeMap<&str, usize> = order
        .iter()
        .enumerate()
        .map(|(row, &u)| (cohort.cohort.users[u].id.as_str(), row))
        .collect();

    let in_window = |w: usize| {
        if config.cumulative_weeks {
            w <= week
        } else {
            w == week
        }
    };

    let mut stats: Vec<UserWeekStats> = vec![UserWeekStats::default(); order.len()];
    for ev in &cohort.cohort.forum_events {
        let Some(w) = cohort.cohort.calendar.week_of(ev.timestamp) else {
            continue;
        };
        if !in_window(w) {
            continue;
        }
        let author = index_of[ev.user_id.as_str()];
        let len = ev.text_length as f64;
        match ev.kind {
            ForumKind::Post => {
                stats[author].posts += 1;
                stats[author].post_len_sum += len;
            }
            ForumKind::ReplyGiven => {
                stats[author].replies_given += 1;
                stats[author].replies_given_len_sum += len;
                if let Some(pid) = &ev.target_post_id {
                    stats[author].posts_replied_to.insert(pid.clone());
                }
                if let Some(target) = &ev.target_user_id {
                    if let Some(&t) = index_of.get(target.as_str()) {
                        stats[t].replies_received += 1;
                        stats[t].replies_received_len_sum += len;
                        stats[t].repliers.insert(ev.user_id.clone());
                        if ev.author_is_instructor {
                            stats[t].instr_replies_received += 1;
                            stats[t].instr_replies_received_len_sum += len;
                            stats[t].instr_repliers.insert(ev.user_id.clone());
                        }
                    }
                }
            }
            ForumKind::CommentGiven => {
                stats[author].comments_given += 1;
                stats[author].comments_given_len_sum += len;
                if let Some(pid) = &ev.target_post_id {
                    stats[author].posts_commented_on.insert(pid.clone());
                }
                if let Some(target) = &ev.target_user_id {
                    if let Some(&t) = index_of.get(target.as_str()) {
                        stats[t].comments_received += 1;
                        stats[t].comments_received_len_sum += len;
                        stats[t].commenters.insert(ev.user_id.clone());
                        if ev.author_is_instructor {
                            stats[t].instr_comments_received += 1;
                            stats[t].instr_comments_received_len_sum += len;
                            stats[t].instr_commenters.insert(ev.user_id.clone());
                        }
                    }
                }
            }
        }
    }
    for ev in &cohort.cohort.activity_events {
        let Some(w) = cohort.cohort.calendar.week_of(ev.timestamp) else {
            continue;
        };
        if !in_window(w) {
            continue;
        }
        let row = index_of[ev.user_id.as_str()];
        match ev.kind {
            ActivityKind::AssignmentSubmitted => stats[row].assignment = true,
            ActivityKind::ReviewSubmitted => stats[row].review = true,
            ActivityKind::HangoutAttended => stats[row].hangout = true,
        }
    }

    let fields: Vec<&TemporalField> = TEMPORAL_FIELDS
        .iter()
        .filter(|f| config.include_dropped || !f.dropped)
        .collect();
    let descriptors: Vec<FeatureDescriptor> = fields
        .iter()
        .map(|f| FeatureDescriptor {
            feature_id: f.name.to_string(),
            source_week: Some(week),
            encoding: if f.boolean {
                Encoding::Boolean
            } else {
                Encoding::NumericStandardized
            },
            group_id: f.name.to_string(),
        })
        .collect();

    let n_cols = descriptors.len();
    let mut data = vec![0.0; order.len() * n_cols];
    let mut user_ids = Vec::with_capacity(order.len());
    for (row, &u) in order.iter().enumerate() {
        user_ids.push(cohort.cohort.users[u].id.clone());
        let st = &stats[row];
        let out = &mut data[row * n_cols..(row + 1) * n_cols];
        for (col, f) in fields.iter().enumerate() {
            out[col] = match f.id {
                TemporalId::Fp => st.posts as f64,
                TemporalId::FpL => mean(st.post_len_sum, st.posts),
                TemporalId::FrBa => st.replies_received as f64,
                TemporalId::FrBaL => mean(st.replies_received_len_sum, st.replies_received),
                TemporalId::FrBaU => st.repliers.len() as f64,
                TemporalId::FrAb => st.replies_given as f64,
                TemporalId::FrAbL => mean(st.replies_given_len_sum, st.replies_given),
                TemporalId::FrAbP => st.posts_replied_to.len() as f64,
                TemporalId::FcBa => st.comments_received as f64,
                TemporalId::FcBaL => mean(st.comments_received_len_sum, st.comments_received),
                TemporalId::FcBaU => st.commenters.len() as f64,
                TemporalId::FcAb => st.comments_given as f64,
                TemporalId::FcAbL => mean(st.comments_given_len_sum, st.comments_given),
                TemporalId::FcAbP => st.posts_commented_on.len() as f64,
                TemporalId::FrBaI => st.instr_replies_received as f64,
                TemporalId::FrBaLI => {
                    mean(st.instr_replies_received_len_sum, st.instr_replies_received)
                }
                TemporalId::FrBaUI => st.instr_repliers.len() as f64,
                TemporalId::FcBaI => st.instr_comments_received as f64,
                TemporalId::FcBaLI => {
                    mean(st.instr_comments_received_len_sum, st.instr_comments_received)
                }
                TemporalId::FcBaUI => st.instr_commenters.len() as f64,
                TemporalId::A => f64::from(st.assignment),
                TemporalId::Ar => f64::from(st.review),
                TemporalId::Gh => f64::from(st.hangout),
            };
        }
    }

    Ok(Block {
        descriptors,
        data,
        user_ids,
    })
}

// ---------------------------------------------------------------------------
// Matrix assembly
// ---------------------------------------------------------------------------

/// Assembles the design matrix for one (task, week, lag) prediction.
///
/// Columns are the profile block (when included) followed by the temporal
/// blocks for weeks `0..=lag`. State labels mark users dropped out by the
/// target week; exact-week labels mark users dropping exactly then, with
/// users already gone before the target week excluded from the rows.
pub fn assemble_matrix(
    cohort: &LabeledCohort,
    kind: TaskKind,
    week: usize,
    lag: Lag,
    include_profile: bool,
    config: &FeatureConfig,
) -> Result<Dataset> {
    let week_count = cohort.cohort.calendar.week_count;
    if week >= week_count {
        return Err(Error::InvalidConfig(format!(
            "target week {week} outside 0..{week_count}"
        )));
    }
    if let Lag::Weeks(l) = lag {
        if l > week {
            return Err(Error::InvalidConfig(format!(
                "lag {l} exceeds target week {week}; later weeks would leak"
            )));
        }
    }
    if lag == Lag::ProfileOnly && !include_profile {
        return Err(Error::InvalidConfig(
            "profile-only lag with the profile block excluded leaves no columns".into(),
        ));
    }

    let mut blocks: Vec<Block> = Vec::new();
    if include_profile {
        blocks.push(extract_profile(cohort, config));
    }
    if let Lag::Weeks(l) = lag {
        for w in 0..=l {
            blocks.push(extract_temporal(cohort, w, config)?);
        }
    }

    let all_user_rows = &blocks[0].user_ids;
    let keep: Vec<usize> = match kind {
        TaskKind::State => (0..all_user_rows.len()).collect(),
        TaskKind::ExactWeek => (0..all_user_rows.len())
            .filter(|&i| match cohort.dropout_week_of(&all_user_rows[i]) {
                Some(w) => w >= week,
                None => true,
            })
            .collect(),
    };
    if keep.is_empty() {
        return Err(Error::InvalidData(format!(
            "no eligible rows for {kind:?} at week {week}"
        )));
    }

    let descriptors: Vec<FeatureDescriptor> = blocks
        .iter()
        .flat_map(|b| b.descriptors.iter().cloned())
        .collect();
    let n_cols = descriptors.len();
    let mut data = Vec::with_capacity(keep.len() * n_cols);
    let mut labels = Vec::with_capacity(keep.len());
    let mut user_ids = Vec::with_capacity(keep.len());
    for &i in &keep {
        for b in &blocks {
            let bc = b.n_cols();
            data.extend_from_slice(&b.data[i * bc..(i + 1) * bc]);
        }
        let dw = cohort.dropout_week_of(&all_user_rows[i]);
        let y = match kind {
            TaskKind::State => dw.is_some_and(|w| w <= week),
            TaskKind::ExactWeek => dw == Some(week),
        };
        labels.push(u8::from(y));
        user_ids.push(all_user_rows[i].clone());
    }

    Ok(Dataset {
        data,
        n_cols,
        labels,
        descriptors,
        task: TaskSpec {
            kind,
            week,
            lag,
            include_profile,
        },
        user_ids,
        synthetic: vec![false; keep.len()],
        standardized: false,
    })
}

// ---------------------------------------------------------------------------
// Standardization
// ---------------------------------------------------------------------------

/// Per-column mean and population standard deviation for the
/// `NumericStandardized` columns, fitted on training rows only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    /// `Some((mean, std))` for standardized columns, `None` pass-through.
    stats: Vec<Option<(f64, f64)>>,
}

impl Standardizer {
    pub fn stats(&self) -> &[Option<(f64, f64)>] {
        &self.stats
    }
}

/// Fits column statistics on the given training rows. A constant column
/// gets std 1 so it maps to zero.
pub fn fit_standardizer(dataset: &Dataset, train_rows: &[usize]) -> Result<Standardizer> {
    if train_rows.is_empty() {
        return Err(Error::InvalidData(
            "standardizer fitted on an empty training set".into(),
        ));
    }
    let n = train_rows.len() as f64;
    let p = dataset.n_cols();
    let mut stats = vec![None; p];
    for (c, stat) in stats.iter_mut().enumerate() {
        if dataset.descriptors[c].encoding != Encoding::NumericStandardized {
            continue;
        }
        let mut sum = 0.0;
        for &r in train_rows {
            sum += dataset.row(r)[c];
        }
        let mean = sum / n;
        let mut ss = 0.0;
        for &r in train_rows {
            let d = dataset.row(r)[c] - mean;
            ss += d * d;
        }
        let std = (ss / n).sqrt();
        *stat = Some((mean, if std == 0.0 { 1.0 } else { std }));
    }
    Ok(Standardizer { stats })
}

/// Applies fitted statistics to every row; boolean, one-hot, and ordinal
/// columns pass through. Applying to an already-standardized dataset is a
/// no-op, so the transform is idempotent.
pub fn apply_standardizer(standardizer: &Standardizer, dataset: &Dataset) -> Result<Dataset> {
    if standardizer.stats.len() != dataset.n_cols() {
        return Err(Error::DimensionMismatch {
            expected: standardizer.stats.len(),
            got: dataset.n_cols(),
        });
    }
    if dataset.standardized {
        return Ok(dataset.clone());
    }
    let mut out = dataset.clone();
    let p = out.n_cols;
    for (c, stat) in standardizer.stats.iter().enumerate() {
        let Some((mean, std)) = stat else { continue };
        for r in 0..out.labels.len() {
            let v = &mut out.data[r * p + c];
            *v = (*v - mean) / std;
        }
    }
    out.standardized = true;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{
        generate_synthetic, ActivityEvent, Cohort, CourseCalendar, ForumEvent, SynthConfig, User,
    };
    use chrono::{DateTime, Duration, Utc};

    fn utc(s: &str) -> DateTime<Utc> {
        DateTime::parse_from_rfc3339(s).unwrap().with_timezone(&Utc)
    }

    fn start() -> DateTime<Utc> {
        utc("2015-10-05T00:00:00Z")
    }

    fn at_week(week: usize, hours: i64) -> DateTime<Utc> {
        start() + Duration::seconds(week as i64 * 7 * 86_400) + Duration::hours(hours)
    }

    fn profile(bio: u32, pbl: Option<&str>) -> crate::dataset::ProfileRecord {
        crate::dataset::ProfileRecord {
            biography_length: bio,
            pbl_experience: pbl.map(String::from),
            gender: Some("female".into()),
            ..Default::default()
        }
    }

    fn handmade() -> crate::dataset::LabeledCohort {
        let cal = CourseCalendar::nine_weeks(start());
        let users = vec![
            User {
                id: "u1".into(),
                profile: profile(10, Some("pbl_0")),
                completed: true,
            },
            User {
                id: "u2".into(),
                profile: profile(0, Some("pbl_2")),
                completed: false,
            },
            User {
                id: "u3".into(),
                profile: crate::dataset::ProfileRecord::default(),
                completed: false,
            },
        ];
        let forum_events = vec![
            ForumEvent {
                user_id: "u1".into(),
                timestamp: at_week(1, 5),
                kind: ForumKind::Post,
                text_length: 10,
                target_user_id: None,
                target_post_id: None,
                author_is_instructor: false,
            },
            ForumEvent {
                user_id: "u1".into(),
                timestamp: at_week(1, 9),
                kind: ForumKind::Post,
                text_length: 30,
                target_user_id: None,
                target_post_id: None,
                author_is_instructor: false,
            },
            ForumEvent {
                user_id: "u2".into(),
                timestamp: at_week(1, 20),
                kind: ForumKind::ReplyGiven,
                text_length: 8,
                target_user_id: Some("u1".into()),
                target_post_id: Some("p1".into()),
                author_is_instructor: false,
            },
        ];
        let activity_events = vec![
            ActivityEvent {
                user_id: "u2".into(),
                timestamp: at_week(1, 30),
                kind: ActivityKind::AssignmentSubmitted,
            },
            ActivityEvent {
                user_id: "u1".into(),
                timestamp: at_week(8, 2),
                kind: ActivityKind::AssignmentSubmitted,
            },
        ];
        let cohort = Cohort {
            calendar: cal,
            users,
            forum_events,
            activity_events,
        };
        crate::dataset::derive_labels(cohort)
    }

    #[test]
    fn empty_profile_encodes_as_all_nc() {
        let labeled = handmade();
        let block = extract_profile(&labeled, &FeatureConfig::default());
        // u3 sorts last.
        let row = 2;
        let n = block.descriptors.len();
        let values = &block.data[row * n..(row + 1) * n];
        for (d, &v) in block.descriptors.iter().zip(values) {
            match &d.encoding {
                Encoding::OneHotLevel(level) => {
                    if level == "NC" {
                        assert_eq!(v, 1.0, "{}", d.column_name());
                    } else {
                        assert_eq!(v, 0.0, "{}", d.column_name());
                    }
                }
                Encoding::OrdinalCode | Encoding::NumericStandardized => {
                    assert_eq!(v, 0.0, "{}", d.column_name())
                }
                Encoding::Boolean => assert_eq!(v, 1.0, "{}", d.column_name()),
            }
        }
    }

    #[test]
    fn ordinal_maps_to_codes_with_nc_indicator() {
        let labeled = handmade();
        let block = extract_profile(&labeled, &FeatureConfig::default());
        let n = block.descriptors.len();
        let col_of = |name: &str| {
            block
                .descriptors
                .iter()
                .position(|d| d.column_name() == name)
                .unwrap_or_else(|| panic!("missing column {name}"))
        };
        // Levels observed: pbl_0, pbl_2 -> codes 0, 1. u2 (row 1) has pbl_2.
        let code_col = col_of("pbl_experience");
        let nc_col = col_of("pbl_experience_NC");
        assert_eq!(block.data[n + code_col], 1.0);
        assert_eq!(block.data[n + nc_col], 0.0);
        // u3 (row 2) is NC.
        assert_eq!(block.data[2 * n + code_col], 0.0);
        assert_eq!(block.data[2 * n + nc_col], 1.0);
    }

    #[test]
    fn one_hot_partition_holds_per_row() {
        let labeled = generate_synthetic(&SynthConfig::paper_calibration(200, 5)).unwrap();
        let config = FeatureConfig {
            include_dropped: true,
            cumulative_weeks: false,
        };
        let block = extract_profile(&labeled, &config);
        let n = block.descriptors.len();
        let mut nominal_groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
        for (c, d) in block.descriptors.iter().enumerate() {
            if matches!(d.encoding, Encoding::OneHotLevel(_)) {
                nominal_groups.entry(&d.group_id).or_default().push(c);
            }
        }
        for row in 0..block.user_ids.len() {
            for (group, cols) in &nominal_groups {
                let ones: f64 = cols.iter().map(|&c| block.data[row * n + c]).sum();
                assert_eq!(ones, 1.0, "row {row} group {group}");
            }
        }
    }

    #[test]
    fn week_counts_and_means() {
        let labeled = handmade();
        let block = extract_temporal(&labeled, 1, &FeatureConfig::default()).unwrap();
        let n = block.descriptors.len();
        let col_of = |name: &str| {
            block
                .descriptors
                .iter()
                .position(|d| d.column_name() == name)
                .unwrap_or_else(|| panic!("missing column {name}"))
        };
        // u1 (row 0): two posts of lengths 10 and 30, one reply received.
        assert_eq!(block.data[col_of("fp_w1")], 2.0);
        assert_eq!(block.data[col_of("fp_l_w1")], 20.0);
        assert_eq!(block.data[col_of("fr_ba_w1")], 1.0);
        assert_eq!(block.data[col_of("a_w1")], 0.0);
        // u2 (row 1): one reply given, one assignment.
        assert_eq!(block.data[n + col_of("fr_ab_w1")], 1.0);
        assert_eq!(block.data[n + col_of("fr_ab_l_w1")], 8.0);
        assert_eq!(block.data[n + col_of("a_w1")], 1.0);
        // u3 (row 2): nothing.
        for c in 0..n {
            assert_eq!(block.data[2 * n + c], 0.0);
        }
    }

    #[test]
    fn week_out_of_range_is_rejected() {
        let labeled = handmade();
        assert!(extract_temporal(&labeled, 9, &FeatureConfig::default()).is_err());
    }

    #[test]
    fn assemble_includes_weeks_up_to_lag() {
        let labeled = handmade();
        let ds = assemble_matrix(
            &labeled,
            TaskKind::State,
            2,
            Lag::Weeks(2),
            true,
            &FeatureConfig::default(),
        )
        .unwrap();
        let weeks: BTreeSet<Option<usize>> =
            ds.descriptors.iter().map(|d| d.source_week).collect();
        assert!(weeks.contains(&None));
        assert!(weeks.contains(&Some(0)));
        assert!(weeks.contains(&Some(1)));
        assert!(weeks.contains(&Some(2)));
        assert!(!weeks.contains(&Some(3)));
    }

    #[test]
    fn profile_only_has_no_temporal_columns() {
        let labeled = handmade();
        let ds = assemble_matrix(
            &labeled,
            TaskKind::State,
            0,
            Lag::ProfileOnly,
            true,
            &FeatureConfig::default(),
        )
        .unwrap();
        assert!(ds.descriptors.iter().all(|d| d.source_week.is_none()));
    }

    #[test]
    fn exact_week_excludes_users_already_gone() {
        let labeled = handmade();
        // u2 dropped in week 2 (last event week 1); u3 dropped in week 0.
        let ds = assemble_matrix(
            &labeled,
            TaskKind::ExactWeek,
            2,
            Lag::Weeks(1),
            true,
            &FeatureConfig::default(),
        )
        .unwrap();
        assert_eq!(ds.user_ids, vec!["u1".to_string(), "u2".to_string()]);
        assert_eq!(ds.labels, vec![0, 1]);
    }

    #[test]
    fn leak_and_empty_errors() {
        let labeled = handmade();
        assert!(assemble_matrix(
            &labeled,
            TaskKind::State,
            1,
            Lag::Weeks(2),
            true,
            &FeatureConfig::default()
        )
        .is_err());
        assert!(assemble_matrix(
            &labeled,
            TaskKind::State,
            0,
            Lag::ProfileOnly,
            false,
            &FeatureConfig::default()
        )
        .is_err());
    }

    #[test]
    fn state_labels_flag_dropped_users() {
        let labeled = handmade();
        let ds = assemble_matrix(
            &labeled,
            TaskKind::State,
            2,
            Lag::Weeks(0),
            true,
            &FeatureConfig::default(),
        )
        .unwrap();
        // u1 completer -> 0; u2 dropout week 2 -> 1; u3 dropout week 0 -> 1.
        assert_eq!(ds.labels, vec![0, 1, 1]);
    }

    #[test]
    fn standardizer_hand_arithmetic() {
        let labeled = handmade();
        let mut ds = assemble_matrix(
            &labeled,
            TaskKind::State,
            0,
            Lag::ProfileOnly,
            true,
            &FeatureConfig::default(),
        )
        .unwrap();
        let bio_col = ds
            .descriptors
            .iter()
            .position(|d| d.feature_id == "biography_length")
            .unwrap();
        // Training rows {0, 2}: values 10 and 0 -> mean 5, population std 5.
        ds.data[bio_col] = 10.0;
        ds.data[ds.n_cols + bio_col] = 20.0;
        ds.data[2 * ds.n_cols + bio_col] = 0.0;
        let st = fit_standardizer(&ds, &[0, 2]).unwrap();
        let out = apply_standardizer(&st, &ds).unwrap();
        assert_eq!(out.row(0)[bio_col], 1.0);
        assert_eq!(out.row(2)[bio_col], -1.0);
        // Test value 20 with train mean 5, std 5 -> 3.
        assert_eq!(out.row(1)[bio_col], 3.0);
        // Idempotent by the standardized flag.
        let again = apply_standardizer(&st, &out).unwrap();
        assert_eq!(again, out);
    }

    #[test]
    fn constant_column_maps_to_zero() {
        let labeled = handmade();
        let ds = assemble_matrix(
            &labeled,
            TaskKind::State,
            0,
            Lag::Weeks(0),
            true,
            &FeatureConfig::default(),
        )
        .unwrap();
        let obj_col = ds
            .descriptors
            .iter()
            .position(|d| d.feature_id == "objectives_length")
            .unwrap();
        let st = fit_standardizer(&ds, &[0, 1, 2]).unwrap();
        let out = apply_standardizer(&st, &ds).unwrap();
        for r in 0..3 {
            assert_eq!(out.row(r)[obj_col], 0.0);
        }
    }

    #[test]
    fn training_columns_have_zero_mean_unit_std() {
        let labeled = generate_synthetic(&SynthConfig::paper_calibration(300, 9)).unwrap();
        let ds = assemble_matrix(
            &labeled,
            TaskKind::State,
            4,
            Lag::Weeks(4),
            true,
            &FeatureConfig::default(),
        )
        .unwrap();
        let train: Vec<usize> = (0..200).collect();
        let st = fit_standardizer(&ds, &train).unwrap();
        let out = apply_standardizer(&st, &ds).unwrap();
        for (c, d) in out.descriptors.iter().enumerate() {
            if d.encoding != Encoding::NumericStandardized {
                continue;
            }
            let vals: Vec<f64> = train.iter().map(|&r| out.row(r)[c]).collect();
            let mean: f64 = vals.iter().sum::<f64>() / vals.len() as f64;
            let var: f64 =
                vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / vals.len() as f64;
            assert!(mean.abs() < 1e-9, "column {} mean {mean}", d.column_name());
            let raw: Vec<f64> = train.iter().map(|&r| ds.row(r)[c]).collect();
            let constant = raw.iter().all(|&v| v == raw[0]);
            if !constant {
                assert!(
                    (var.sqrt() - 1.0).abs() < 1e-9,
                    "column {} std {}",
                    d.column_name(),
                    var.sqrt()
                );
            }
        }
    }

    #[test]
    fn causality_no_descriptor_later_than_lag() {
        let labeled = generate_synthetic(&SynthConfig::paper_calibration(100, 13)).unwrap();
        for week in [2usize, 5] {
            for lag in 0..=week {
                let ds = assemble_matrix(
                    &labeled,
                    TaskKind::State,
                    week,
                    Lag::Weeks(lag),
                    true,
                    &FeatureConfig::default(),
                )
                .unwrap();
                assert!(ds
                    .descriptors
                    .iter()
                    .all(|d| d.source_week.map_or(true, |w| w <= lag)));
            }
        }
    }

    #[test]
    fn descriptor_triples_are_unique() {
        let labeled = generate_synthetic(&SynthConfig::paper_calibration(100, 13)).unwrap();
        let config = FeatureConfig {
            include_dropped: true,
            cumulative_weeks: false,
        };
        let ds = assemble_matrix(&labeled, TaskKind::State, 3, Lag::Weeks(3), true, &config)
            .unwrap();
        let mut seen = BTreeSet::new();
        for d in &ds.descriptors {
            assert!(seen.insert(d.column_name()), "{}", d.column_name());
        }
    }
}
