//! Event-log data model, CSV ingestion, dropout-label derivation, and the
//! calibrated synthetic cohort generator.
//!
//! A [`Cohort`] binds user profiles and dated event streams to a
//! [`CourseCalendar`] of consecutive 7-day weeks. Labels are derived, never
//! ingested: a non-completer's dropout week is the week after their last
//! event, clamped to the final course week, and week 0 for users that never
//! produced an event.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::Path;

use chrono::{DateTime, Duration, SecondsFormat, Utc};
use rand::Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seeds;

pub type UserId = String;

/// Course start plus a week count; week boundaries are consecutive 7-day
/// intervals from the start.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CourseCalendar {
    pub start: DateTime<Utc>,
    pub week_count: usize,
}

impl CourseCalendar {
    pub fn new(start: DateTime<Utc>, week_count: usize) -> Result<Self> {
        if week_count == 0 {
            return Err(Error::InvalidConfig("week_count must be >= 1".into()));
        }
        Ok(Self { start, week_count })
    }

    /// The studied course ran nine weeks, indexed 0..8.
    pub fn nine_weeks(start: DateTime<Utc>) -> Self {
        Self {
            start,
            week_count: 9,
        }
    }

    /// Week index containing `t`, or `None` outside the course span.
    pub fn week_of(&self, t: DateTime<Utc>) -> Option<usize> {
        if t < self.start {
            return None;
        }
        let w = (t - self.start).num_seconds() / (7 * 86_400);
        let w = w as usize;
        (w < self.week_count).then_some(w)
    }

    pub fn week_start(&self, week: usize) -> DateTime<Utc> {
        self.start + Duration::seconds(week as i64 * 7 * 86_400)
    }

    pub fn end(&self) -> DateTime<Utc> {
        self.week_start(self.week_count)
    }
}

/// One registrant's profile. `None` is the explicit Not Communicated (NC)
/// level; free-text fields are kept as lengths only.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProfileRecord {
    pub country: Option<String>,
    pub primary_language: Option<String>,
    pub gender: Option<String>,
    pub biography_length: u32,
    pub track: Option<String>,
    pub age_range: Option<String>,
    pub motivation: Option<String>,
    pub education_role: Option<String>,
    pub education_experience: Option<String>,
    pub pbl_experience: Option<String>,
    pub interest_area: Option<String>,
    pub schedule_preference: Option<String>,
    pub timezone: Option<String>,
    pub anxiety: Option<String>,
    pub determination: Option<String>,
    pub objectives_length: u32,
    pub first_mooc: Option<String>,
    pub discovery_medium: Option<String>,
}

impl ProfileRecord {
    /// True when every field is NC and both text lengths are zero.
    pub fn is_empty(&self) -> bool {
        self.country.is_none()
            && self.primary_language.is_none()
            && self.gender.is_none()
            && self.biography_length == 0
            && self.track.is_none()
            && self.age_range.is_none()
            && self.motivation.is_none()
            && self.education_role.is_none()
            && self.education_experience.is_none()
            && self.pbl_experience.is_none()
            && self.interest_area.is_none()
            && self.schedule_preference.is_none()
            && self.timezone.is_none()
            && self.anxiety.is_none()
            && self.determination.is_none()
            && self.objectives_length == 0
            && self.first_mooc.is_none()
            && self.discovery_medium.is_none()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForumKind {
    Post,
    ReplyGiven,
    CommentGiven,
}

impl ForumKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ForumKind::Post => "post",
            ForumKind::ReplyGiven => "reply_given",
            ForumKind::CommentGiven => "comment_given",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "post" => Some(ForumKind::Post),
            "reply_given" => Some(ForumKind::ReplyGiven),
            "comment_given" => Some(ForumKind::CommentGiven),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForumEvent {
    pub user_id: UserId,
    pub timestamp: DateTime<Utc>,
    pub kind: ForumKind,
    pub text_length: u32,
    /// Recipient, for replies and comments.
    pub target_user_id: Option<UserId>,
    pub target_post_id: Option<String>,
    pub author_is_instructor: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActivityKind {
    AssignmentSubmitted,
    ReviewSubmitted,
    HangoutAttended,
}

impl ActivityKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ActivityKind::AssignmentSubmitted => "assignment_submitted",
            ActivityKind::ReviewSubmitted => "review_submitted",
            ActivityKind::HangoutAttended => "hangout_attended",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "assignment_submitted" => Some(ActivityKind::AssignmentSubmitted),
            "review_submitted" => Some(ActivityKind::ReviewSubmitted),
            "hangout_attended" => Some(ActivityKind::HangoutAttended),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActivityEvent {
    pub user_id: UserId,
    pub timestamp: DateTime<Utc>,
    pub kind: ActivityKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct User {
    pub id: UserId,
    pub profile: ProfileRecord,
    pub completed: bool,
}

/// Users plus dated event streams bound to a course calendar.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cohort {
    pub calendar: CourseCalendar,
    pub users: Vec<User>,
    pub forum_events: Vec<ForumEvent>,
    pub activity_events: Vec<ActivityEvent>,
}

impl Cohort {
    /// Checks user-id uniqueness, event-user references, event targeting,
    /// and calendar containment.
    pub fn validate(&self) -> Result<()> {
        let mut ids = BTreeSet::new();
        for user in &self.users {
            if !ids.insert(user.id.as_str()) {
                return Err(Error::InvalidData(format!(
                    "duplicate user id {}",
                    user.id
                )));
            }
        }
        for ev in &self.forum_events {
            if !ids.contains(ev.user_id.as_str()) {
                return Err(Error::InvalidData(format!(
                    "forum event references unknown user {}",
                    ev.user_id
                )));
            }
            if self.calendar.week_of(ev.timestamp).is_none() {
                return Err(Error::InvalidData(format!(
                    "forum event at {} outside the course calendar",
                    ev.timestamp
                )));
            }
            match ev.kind {
                ForumKind::Post => {
                    if ev.target_post_id.is_some() {
                        return Err(Error::InvalidData(
                            "post events must not carry a target_post_id".into(),
                        ));
                    }
                }
                ForumKind::ReplyGiven | ForumKind::CommentGiven => {
                    if ev.target_post_id.is_none() {
                        return Err(Error::InvalidData(
                            "reply/comment events must carry a target_post_id".into(),
                        ));
                    }
                }
            }
        }
        for ev in &self.activity_events {
            if !ids.contains(ev.user_id.as_str()) {
                return Err(Error::InvalidData(format!(
                    "activity event references unknown user {}",
                    ev.user_id
                )));
            }
            if self.calendar.week_of(ev.timestamp).is_none() {
                return Err(Error::InvalidData(format!(
                    "activity event at {} outside the course calendar",
                    ev.timestamp
                )));
            }
        }
        Ok(())
    }

    /// Serializes to a single JSON document with stable key order.
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let cohort: Cohort = serde_json::from_str(json)?;
        cohort.validate()?;
        Ok(cohort)
    }
}

/// A cohort plus derived dropout weeks; completers have no entry.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledCohort {
    pub cohort: Cohort,
    pub dropout_week: BTreeMap<UserId, usize>,
}

impl LabeledCohort {
    pub fn dropout_week_of(&self, user_id: &str) -> Option<usize> {
        self.dropout_week.get(user_id).copied()
    }

    /// Weekly dropout counts, indexed by week.
    pub fn weekly_dropouts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.cohort.calendar.week_count];
        for &w in self.dropout_week.values() {
            counts[w] += 1;
        }
        counts
    }

    /// Removes users whose profile is entirely NC, with their events.
    pub fn without_empty_profiles(&self) -> LabeledCohort {
        let keep: BTreeSet<&str> = self
            .cohort
            .users
            .iter()
            .filter(|u| !u.profile.is_empty())
            .map(|u| u.id.as_str())
            .collect();
        let cohort = Cohort {
            calendar: self.cohort.calendar,
            users: self
                .cohort
                .users
                .iter()
                .filter(|u| keep.contains(u.id.as_str()))
                .cloned()
                .collect(),
            forum_events: self
                .cohort
                .forum_events
                .iter()
                .filter(|e| keep.contains(e.user_id.as_str()))
                .cloned()
                .collect(),
            activity_events: self
                .cohort
                .activity_events
                .iter()
                .filter(|e| keep.contains(e.user_id.as_str()))
                .cloned()
                .collect(),
        };
        let dropout_week = self
            .dropout_week
            .iter()
            .filter(|(id, _)| keep.contains(id.as_str()))
            .map(|(id, &w)| (id.clone(), w))
            .collect();
        LabeledCohort {
            cohort,
            dropout_week,
        }
    }
}

/// Derives dropout weeks: a non-completer drops the week after their last
/// event (clamped to the final week); non-completers with no events drop in
/// week 0. Completers get no dropout week.
pub fn derive_labels(cohort: Cohort) -> LabeledCohort {
    let mut last_week: BTreeMap<&str, usize> = BTreeMap::new();
    for ev in &cohort.forum_events {
        if let Some(w) = cohort.calendar.week_of(ev.timestamp) {
            let e = last_week.entry(ev.user_id.as_str()).or_insert(w);
            *e = (*e).max(w);
        }
    }
    for ev in &cohort.activity_events {
        if let Some(w) = cohort.calendar.week_of(ev.timestamp) {
            let e = last_week.entry(ev.user_id.as_str()).or_insert(w);
            *e = (*e).max(w);
        }
    }
    let cap = cohort.calendar.week_count - 1;
    let mut dropout_week = BTreeMap::new();
    for user in &cohort.users {
        if user.completed {
            continue;
        }
        let week = match last_week.get(user.id.as_str()) {
            Some(&lw) => (lw + 1).min(cap),
            None => 0,
        };
        dropout_week.insert(user.id.clone(), week);
    }
    LabeledCohort {
        cohort,
        dropout_week,
    }
}

// ---------------------------------------------------------------------------
// CSV ingestion
// ---------------------------------------------------------------------------

/// A non-fatal ingestion observation tied to a file row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub file: String,
    pub row: usize,
    pub message: String,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct IngestOptions {
    /// Skip events referencing unknown users instead of failing.
    pub skip_unknown_users: bool,
}

#[derive(Debug)]
pub struct IngestOutcome {
    pub cohort: Cohort,
    pub diagnostics: Vec<Diagnostic>,
}

const PROFILE_HEADER: &[&str] = &[
    "user_id",
    "completed",
    "country",
    "primary_language",
    "gender",
    "biography",
    "track",
    "age_range",
    "motivation",
    "education_role",
    "education_experience",
    "pbl_experience",
    "interest_area",
    "schedule_preference",
    "timezone",
    "anxiety",
    "determination",
    "objectives",
    "first_mooc",
    "discovery_medium",
];

const FORUM_HEADER: &[&str] = &[
    "user_id",
    "timestamp",
    "kind",
    "text",
    "target_user_id",
    "target_post_id",
    "author_is_instructor",
];

const ACTIVITY_HEADER: &[&str] = &["user_id", "timestamp", "kind"];

fn open_reader(path: &Path, expected_header: &[&str]) -> Result<csv::Reader<std::fs::File>> {
    let file = std::fs::File::open(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(file);
    let headers = reader
        .headers()
        .map_err(|e| Error::Csv {
            path: path.display().to_string(),
            message: e.to_string(),
        })?
        .clone();
    let got: Vec<&str> = headers.iter().collect();
    if got != expected_header {
        return Err(Error::Schema {
            path: path.display().to_string(),
            message: format!("expected header {expected_header:?}, got {got:?}"),
        });
    }
    Ok(reader)
}

fn opt_cell(s: &str) -> Option<String> {
    if s.is_empty() {
        None
    } else {
        Some(s.to_string())
    }
}

fn parse_flag(s: &str, file: &str, row: usize, field: &str) -> Result<bool> {
    match s {
        "0" => Ok(false),
        "1" => Ok(true),
        _ => Err(Error::BadRow {
            file: file.into(),
            row,
            message: format!("{field} must be 0 or 1, got {s:?}"),
        }),
    }
}

/// Reads the three CSV logs into a validated [`Cohort`].
///
/// Duplicate user ids keep the first occurrence and are counted in the
/// diagnostics; rows with unparseable timestamps are rejected with a
/// line-numbered diagnostic. A parseable timestamp outside the calendar and
/// (unless skipped via options) an event referencing an unknown user are
/// fatal.
pub fn ingest_cohort(
    profile_path: &Path,
    forum_path: &Path,
    activity_path: &Path,
    calendar: CourseCalendar,
    options: IngestOptions,
) -> Result<IngestOutcome> {
    let mut diagnostics = Vec::new();

    let profile_file = profile_path.display().to_string();
    let mut users: Vec<User> = Vec::new();
    let mut seen: BTreeSet<String> = BTreeSet::new();
    let mut reader = open_reader(profile_path, PROFILE_HEADER)?;
    for (i, record) in reader.records().enumerate() {
        let row = i + 2; // 1-based, counting the header line
        let record = record.map_err(|e| Error::Csv {
            path: profile_file.clone(),
            message: format!("row {row}: {e}"),
        })?;
        if record.len() != PROFILE_HEADER.len() {
            return Err(Error::BadRow {
                file: profile_file.clone(),
                row,
                message: format!(
                    "expected {} fields, got {}",
                    PROFILE_HEADER.len(),
                    record.len()
                ),
            });
        }
        let id = record[0].to_string();
        if id.is_empty() {
            return Err(Error::BadRow {
                file: profile_file.clone(),
                row,
                message: "empty user_id".into(),
            });
        }
        if !seen.insert(id.clone()) {
            diagnostics.push(Diagnostic {
                file: profile_file.clone(),
                row,
                message: format!("duplicate user_id {id}; keeping the first occurrence"),
            });
            continue;
        }
        let completed = parse_flag(&record[1], &profile_file, row, "completed")?;
        let profile = ProfileRecord {
            country: opt_cell(&record[2]),
            primary_language: opt_cell(&record[3]),
            gender: opt_cell(&record[4]),
            biography_length: record[5].chars().count() as u32,
            track: opt_cell(&record[6]),
            age_range: opt_cell(&record[7]),
            motivation: opt_cell(&record[8]),
            education_role: opt_cell(&record[9]),
            education_experience: opt_cell(&record[10]),
            pbl_experience: opt_cell(&record[11]),
            interest_area: opt_cell(&record[12]),
            schedule_preference: opt_cell(&record[13]),
            timezone: opt_cell(&record[14]),
            anxiety: opt_cell(&record[15]),
            determination: opt_cell(&record[16]),
            objectives_length: record[17].chars().count() as u32,
            first_mooc: opt_cell(&record[18]),
            discovery_medium: opt_cell(&record[19]),
        };
        users.push(User {
            id,
            profile,
            completed,
        });
    }

    let known: BTreeSet<&str> = users.iter().map(|u| u.id.as_str()).collect();

    let parse_timestamp = |raw: &str,
                           file: &str,
                           row: usize,
                           diagnostics: &mut Vec<Diagnostic>|
     -> Result<Option<DateTime<Utc>>> {
        match DateTime::parse_from_rfc3339(raw) {
            Ok(t) => {
                let t = t.with_timezone(&Utc);
                if calendar.week_of(t).is_none() {
                    return Err(Error::BadRow {
                        file: file.into(),
                        row,
                        message: format!("timestamp {raw} outside the course calendar"),
                    });
                }
                Ok(Some(t))
            }
            Err(e) => {
                diagnostics.push(Diagnostic {
                    file: file.into(),
                    row,
                    message: format!("unparseable timestamp {raw:?}: {e}; row rejected"),
                });
                Ok(None)
            }
        }
    };

    let forum_file = forum_path.display().to_string();
    let mut forum_events = Vec::new();
    let mut reader = open_reader(forum_path, FORUM_HEADER)?;
    for (i, record) in reader.records().enumerate() {
        let row = i + 2;
        let record = record.map_err(|e| Error::Csv {
            path: forum_file.clone(),
            message: format!("row {row}: {e}"),
        })?;
        if record.len() != FORUM_HEADER.len() {
            return Err(Error::BadRow {
                file: forum_file.clone(),
                row,
                message: format!(
                    "expected {} fields, got {}",
                    FORUM_HEADER.len(),
                    record.len()
                ),
            });
        }
        let user_id = record[0].to_string();
        if !known.contains(user_id.as_str()) {
            if options.skip_unknown_users {
                diagnostics.push(Diagnostic {
                    file: forum_file.clone(),
                    row,
                    message: format!("unknown user {user_id}; row skipped"),
                });
                continue;
            }
            return Err(Error::BadRow {
                file: forum_file.clone(),
                row,
                message: format!("event references unknown user {user_id}"),
            });
        }
        let Some(timestamp) = parse_timestamp(&record[1], &forum_file, row, &mut diagnostics)?
        else {
            continue;
        };
        let kind = ForumKind::parse(&record[2]).ok_or_else(|| Error::BadRow {
            file: forum_file.clone(),
            row,
            message: format!("unknown forum kind {:?}", &record[2]),
        })?;
        forum_events.push(ForumEvent {
            user_id,
            timestamp,
            kind,
            text_length: record[3].chars().count() as u32,
            target_user_id: opt_cell(&record[4]),
            target_post_id: opt_cell(&record[5]),
            author_is_instructor: parse_flag(&record[6], &forum_file, row, "author_is_instructor")?,
        });
    }

    let activity_file = activity_path.display().to_string();
    let mut activity_events = Vec::new();
    let mut reader = open_reader(activity_path, ACTIVITY_HEADER)?;
    for (i, record) in reader.records().enumerate() {
        let row = i + 2;
        let record = record.map_err(|e| Error::Csv {
            path: activity_file.clone(),
            message: format!("row {row}: {e}"),
        })?;
        if record.len() != ACTIVITY_HEADER.len() {
            return Err(Error::BadRow {
                file: activity_file.clone(),
                row,
                message: format!(
                    "expected {} fields, got {}",
                    ACTIVITY_HEADER.len(),
                    record.len()
                ),
            });
        }
        let user_id = record[0].to_string();
        if !known.contains(user_id.as_str()) {
            if options.skip_unknown_users {
                diagnostics.push(Diagnostic {
                    file: activity_file.clone(),
                    row,
                    message: format!("unknown user {user_id}; row skipped"),
                });
                continue;
            }
            return Err(Error::BadRow {
                file: activity_file.clone(),
                row,
                message: format!("event references unknown user {user_id}"),
            });
        }
        let Some(timestamp) =
            parse_timestamp(&record[1], &activity_file, row, &mut diagnostics)?
        else {
            continue;
        };
        let kind = ActivityKind::parse(&record[2]).ok_or_else(|| Error::BadRow {
            file: activity_file.clone(),
            row,
            message: format!("unknown activity kind {:?}", &record[2]),
        })?;
        activity_events.push(ActivityEvent {
            user_id,
            timestamp,
            kind,
        });
    }

    let cohort = Cohort {
        calendar,
        users,
        forum_events,
        activity_events,
    };
    cohort.validate()?;
    Ok(IngestOutcome {
        cohort,
        diagnostics,
    })
}

/// Writes a cohort back out as the three CSV logs.
///
/// Free-text fields are emitted as runs of `a` of the recorded length, so a
/// re-ingest reproduces the same lengths.
pub fn write_csvs(cohort: &Cohort, dir: &Path) -> Result<()> {
    let io_err = |e: std::io::Error, p: &Path| Error::Io {
        path: p.display().to_string(),
        source: e,
    };
    std::fs::create_dir_all(dir).map_err(|e| io_err(e, dir))?;

    let quote = |s: &str| -> String {
        if s.contains(',') || s.contains('"') || s.contains('\n') {
            format!("\"{}\"", s.replace('"', "\"\""))
        } else {
            s.to_string()
        }
    };
    let text_of = |len: u32| "a".repeat(len as usize);
    let ts = |t: &DateTime<Utc>| t.to_rfc3339_opts(SecondsFormat::Secs, true);

    let profile_path = dir.join("profiles.csv");
    let mut out = String::new();
    out.push_str(&PROFILE_HEADER.join(","));
    out.push('\n');
    for u in &cohort.users {
        let p = &u.profile;
        let cell = |v: &Option<String>| quote(v.as_deref().unwrap_or(""));
        let fields = [
            quote(&u.id),
            (u.completed as u8).to_string(),
            cell(&p.country),
            cell(&p.primary_language),
            cell(&p.gender),
            text_of(p.biography_length),
            cell(&p.track),
            cell(&p.age_range),
            cell(&p.motivation),
            cell(&p.education_role),
            cell(&p.education_experience),
            cell(&p.pbl_experience),
            cell(&p.interest_area),
            cell(&p.schedule_preference),
            cell(&p.timezone),
            cell(&p.anxiety),
            cell(&p.determination),
            text_of(p.objectives_length),
            cell(&p.first_mooc),
            cell(&p.discovery_medium),
        ];
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    std::fs::File::create(&profile_path)
        .and_then(|mut f| f.write_all(out.as_bytes()))
        .map_err(|e| io_err(e, &profile_path))?;

    let forum_path = dir.join("forum.csv");
    let mut out = String::new();
    out.push_str(&FORUM_HEADER.join(","));
    out.push('\n');
    for e in &cohort.forum_events {
        let fields = [
            quote(&e.user_id),
            ts(&e.timestamp),
            e.kind.as_str().to_string(),
            text_of(e.text_length),
            quote(e.target_user_id.as_deref().unwrap_or("")),
            quote(e.target_post_id.as_deref().unwrap_or("")),
            (e.author_is_instructor as u8).to_string(),
        ];
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    std::fs::File::create(&forum_path)
        .and_then(|mut f| f.write_all(out.as_bytes()))
        .map_err(|e| io_err(e, &forum_path))?;

    let activity_path = dir.join("activity.csv");
    let mut out = String::new();
    out.push_str(&ACTIVITY_HEADER.join(","));
    out.push('\n');
    for e in &cohort.activity_events {
        let fields = [
            quote(&e.user_id),
            ts(&e.timestamp),
            e.kind.as_str().to_string(),
        ];
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    std::fs::File::create(&activity_path)
        .and_then(|mut f| f.write_all(out.as_bytes()))
        .map_err(|e| io_err(e, &activity_path))?;

    Ok(())
}

// ---------------------------------------------------------------------------
// Synthetic cohort generation
// ---------------------------------------------------------------------------

/// Per-week persistence-odds contributions for the planted behavioral
/// signals, on the log-odds scale.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SignalStrengths {
    /// Baseline log-odds of starting the course at all (week-0 gate).
    pub base_start_log_odds: f64,
    /// Baseline log-odds of persisting from one week to the next.
    pub base_persist_log_odds: f64,
    /// Added when the user submitted an assignment in the current week.
    pub assignment_log_odds: f64,
    /// Added when the user was forum-active in the current week.
    pub forum_log_odds: f64,
    /// Scaled by profile richness in [0, 1].
    pub profile_log_odds: f64,
}

/// Calibration targets and behavioral signal strengths for the generator.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthConfig {
    pub user_count: usize,
    /// Overall dropout rate (studied course: 0.87).
    pub dropout_rate: f64,
    /// Fraction of users submitting no assignment (0.75).
    pub no_assignment_fraction: f64,
    /// Completion rate among users with at least one assignment (0.51).
    pub completion_rate_among_submitters: f64,
    /// Fraction of users with an entirely NC profile (0.37).
    pub empty_profile_fraction: f64,
    /// Completion rate among empty-profile users (just under 0.01).
    pub completion_rate_among_empty_profiles: f64,
    pub signals: SignalStrengths,
    pub week_count: usize,
    pub seed: u64,
}

impl SynthConfig {
    /// The published course marginals with default signal strengths.
    pub fn paper_calibration(user_count: usize, seed: u64) -> Self {
        Self {
            user_count,
            dropout_rate: 0.87,
            no_assignment_fraction: 0.75,
            completion_rate_among_submitters: 0.51,
            empty_profile_fraction: 0.37,
            completion_rate_among_empty_profiles: 0.009,
            signals: SignalStrengths {
                base_start_log_odds: -0.1,
                base_persist_log_odds: -0.9,
                assignment_log_odds: 2.2,
                forum_log_odds: 0.9,
                profile_log_odds: 1.0,
            },
            week_count: 9,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.user_count == 0 {
            return Err(Error::InvalidConfig("user_count must be >= 1".into()));
        }
        if self.week_count == 0 {
            return Err(Error::InvalidConfig("week_count must be >= 1".into()));
        }
        for (name, v) in [
            ("dropout_rate", self.dropout_rate),
            ("no_assignment_fraction", self.no_assignment_fraction),
            (
                "completion_rate_among_submitters",
                self.completion_rate_among_submitters,
            ),
            ("empty_profile_fraction", self.empty_profile_fraction),
            (
                "completion_rate_among_empty_profiles",
                self.completion_rate_among_empty_profiles,
            ),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidConfig(format!("{name} = {v} outside [0, 1]")));
            }
        }
        Ok(())
    }
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

struct Pools;

impl Pools {
    const COUNTRY: &'static [&'static str] = &[
        "NL", "DE", "BE", "US", "UK", "ES", "FR", "IT", "GR", "TR", "IN", "CN",
    ];
    const LANGUAGE: &'static [&'static str] = &[
        "dutch", "english", "german", "spanish", "french", "greek", "turkish", "other",
    ];
    const GENDER: &'static [&'static str] = &["female", "male", "other", "prefer_not"];
    const TRACK: &'static [&'static str] = &["tutor_role", "problem_design", "assessment"];
    const AGE_RANGE: &'static [&'static str] = &[
        "age_18_24",
        "age_25_34",
        "age_35_44",
        "age_45_54",
        "age_55_plus",
    ];
    const MOTIVATION: &'static [&'static str] = &[
        "personal_interest",
        "professional_network",
        "career",
        "other",
    ];
    const EDUCATION_ROLE: &'static [&'static str] = &[
        "curriculum_manager",
        "not_involved",
        "teacher",
        "adviser",
        "other",
    ];
    const EDUCATION_EXPERIENCE: &'static [&'static str] = &["exp_0", "exp_1", "exp_2"];
    const PBL_EXPERIENCE: &'static [&'static str] = &["pbl_0", "pbl_1", "pbl_2"];
    const INTEREST: &'static [&'static str] = &[
        "arts",
        "economics",
        "health",
        "politics",
        "science",
        "none",
    ];
    const SCHEDULE: &'static [&'static str] = &["synchronous", "asynchronous", "no_preference"];
    const TIMEZONE: &'static [&'static str] = &[
        "utc_minus_5",
        "utc_0",
        "utc_plus_1",
        "utc_plus_2",
        "utc_plus_3",
        "utc_plus_8",
    ];
    const ANXIETY: &'static [&'static str] = &["anx_0", "anx_1", "anx_2", "anx_3", "anx_4"];
    const DETERMINATION: &'static [&'static str] = &["det_0", "det_1", "det_2", "det_3", "det_4"];
    const FIRST_MOOC: &'static [&'static str] = &["no", "yes"];
    const DISCOVERY: &'static [&'static str] = &[
        "professional_network",
        "social_media",
        "university_site",
        "platform",
        "other",
    ];
}

#[derive(Clone, Copy)]
struct UserPlan {
    completed: bool,
    submitter: bool,
    empty_profile: bool,
}

/// Generates a labeled cohort whose marginals match the configured targets
/// by stratified assignment, with a week-by-week hazard model planting the
/// behavioral signals.
///
/// Deterministic for a fixed seed; per-user streams derive from
/// `(seed, user index)` so output does not depend on evaluation order.
pub fn generate_synthetic(config: &SynthConfig) -> Result<LabeledCohort> {
    config.validate()?;
    let n = config.user_count;

    // Stratified count assignment; rounding keeps every marginal within
    // half a user of its target.
    let round = |x: f64| -> usize { (x + 0.5).floor() as usize };
    let completers = round(n as f64 * (1.0 - config.dropout_rate));
    let submitters = round(n as f64 * (1.0 - config.no_assignment_fraction));
    let c_sub = round(submitters as f64 * config.completion_rate_among_submitters).min(submitters);
    if c_sub > completers {
        return Err(Error::InfeasibleMarginals(format!(
            "completers among submitters ({c_sub}) exceeds total completers ({completers}); \
             lower completion_rate_among_submitters or dropout_rate"
        )));
    }
    let c_nonsub = completers - c_sub;
    if c_nonsub > n - submitters {
        return Err(Error::InfeasibleMarginals(format!(
            "needs {c_nonsub} non-submitting completers but only {} non-submitters exist; \
             completion_rate_among_submitters is inconsistent with the overall completion rate",
            n - submitters
        )));
    }
    let empties = round(n as f64 * config.empty_profile_fraction);
    let c_empty = round(empties as f64 * config.completion_rate_among_empty_profiles).min(empties);
    if c_empty > completers {
        return Err(Error::InfeasibleMarginals(format!(
            "completers among empty profiles ({c_empty}) exceeds total completers ({completers})"
        )));
    }
    if empties - c_empty > n - completers {
        return Err(Error::InfeasibleMarginals(format!(
            "needs {} empty-profile non-completers but only {} non-completers exist",
            empties - c_empty,
            n - completers
        )));
    }

    // Slots 0..completers are completers (submitters first); non-completer
    // submitters come next, and empty profiles are pushed to the back of
    // each group.
    let mut plans = vec![
        UserPlan {
            completed: false,
            submitter: false,
            empty_profile: false,
        };
        n
    ];
    for (i, plan) in plans.iter_mut().enumerate() {
        plan.completed = i < completers;
    }
    for plan in plans.iter_mut().take(c_sub) {
        plan.submitter = true;
    }
    for plan in plans.iter_mut().skip(completers).take(submitters - c_sub) {
        plan.submitter = true;
    }
    for plan in plans.iter_mut().take(completers).skip(completers - c_empty) {
        plan.empty_profile = true;
    }
    for plan in plans.iter_mut().skip(n - (empties - c_empty)) {
        plan.empty_profile = true;
    }

    // Shuffle plan-to-user assignment so user ids carry no structure.
    {
        use rand::seq::SliceRandom;
        let mut rng = seeds::rng(seeds::child(config.seed, seeds::domain::SHUFFLE));
        plans.shuffle(&mut rng);
    }

    let calendar = CourseCalendar::new(
        DateTime::parse_from_rfc3339("2015-10-05T00:00:00Z")
            .expect("static timestamp")
            .with_timezone(&Utc),
        config.week_count,
    )?;

    let width = (n as f64).log10().floor() as usize + 1;
    let user_id_of = |i: usize| format!("u{i:0width$}");

    let mut users = Vec::with_capacity(n);
    let mut forum_events: Vec<ForumEvent> = Vec::new();
    let mut activity_events: Vec<ActivityEvent> = Vec::new();
    // (author index, post id) pools per week, for reply/comment wiring.
    let mut posts_by_week: Vec<Vec<(usize, String)>> = vec![Vec::new(); config.week_count];
    // (event index, week) of replies/comments awaiting a target.
    let mut pending_targets: Vec<(usize, usize)> = Vec::new();

    for u in 0..n {
        let plan = plans[u];
        let id = user_id_of(u);
        let mut rng = seeds::rng(seeds::child_indexed(
            config.seed,
            seeds::domain::USER,
            u as u64,
        ));

        let (profile, richness) = if plan.empty_profile {
            (ProfileRecord::default(), 0.0)
        } else {
            let mut filled = 0usize;
            let mut total = 0usize;
            let mut pick = |pool: &[&str], rng: &mut rand_chacha::ChaCha8Rng| -> Option<String> {
                total += 1;
                if rng.gen::<f64>() < 0.85 {
                    filled += 1;
                    Some(pool[rng.gen_range(0..pool.len())].to_string())
                } else {
                    None
                }
            };
            let mut p = ProfileRecord {
                country: pick(Pools::COUNTRY, &mut rng),
                primary_language: pick(Pools::LANGUAGE, &mut rng),
                gender: pick(Pools::GENDER, &mut rng),
                biography_length: 0,
                track: pick(Pools::TRACK, &mut rng),
                age_range: pick(Pools::AGE_RANGE, &mut rng),
                motivation: pick(Pools::MOTIVATION, &mut rng),
                education_role: pick(Pools::EDUCATION_ROLE, &mut rng),
                education_experience: pick(Pools::EDUCATION_EXPERIENCE, &mut rng),
                pbl_experience: pick(Pools::PBL_EXPERIENCE, &mut rng),
                interest_area: pick(Pools::INTEREST, &mut rng),
                schedule_preference: pick(Pools::SCHEDULE, &mut rng),
                timezone: pick(Pools::TIMEZONE, &mut rng),
                anxiety: pick(Pools::ANXIETY, &mut rng),
                determination: pick(Pools::DETERMINATION, &mut rng),
                objectives_length: 0,
                first_mooc: pick(Pools::FIRST_MOOC, &mut rng),
                discovery_medium: pick(Pools::DISCOVERY, &mut rng),
            };
            if p.track.is_none() {
                // A non-empty profile always shows at least one field.
                p.track = Some(Pools::TRACK[rng.gen_range(0..Pools::TRACK.len())].to_string());
                filled += 1;
            }
            let richness = filled as f64 / total as f64;
            let bio = Normal::new(140.0 * richness, 45.0).expect("static params");
            let obj = Normal::new(70.0 * richness, 25.0).expect("static params");
            p.biography_length = f64::max(bio.sample(&mut rng), 0.0).round() as u32;
            p.objectives_length = f64::max(obj.sample(&mut rng), 0.0).round() as u32;
            (p, richness)
        };

        users.push(User {
            id: id.clone(),
            profile,
            completed: plan.completed,
        });

        // Week-by-week activity behind a persistence hazard. Completers
        // stay active for the whole course; submitters always start.
        let s = &config.signals;
        let started = plan.completed
            || plan.submitter
            || rng.gen::<f64>() < sigmoid(s.base_start_log_odds + s.profile_log_odds * richness);
        if !started {
            continue;
        }

        let posts_dist = Poisson::new(0.45 + 0.5 * richness).expect("static params");
        let replies_dist = Poisson::new(0.25 + 0.3 * richness).expect("static params");
        let comments_dist = Poisson::new(0.3 + 0.3 * richness).expect("static params");
        let post_len = Normal::new(90.0, 30.0).expect("static params");
        let note_len = Normal::new(45.0, 15.0).expect("static params");

        let mut submitted_any = false;
        let mut last_active_week = 0usize;
        let mut active = true;
        for week in 0..config.week_count {
            if !active {
                break;
            }
            last_active_week = week;
            let week_start = calendar.week_start(week);
            let stamp = |rng: &mut rand_chacha::ChaCha8Rng| {
                week_start + Duration::seconds(rng.gen_range(0..7 * 86_400))
            };

            let mut week_events = 0usize;
            let submitted_this_week = plan.submitter && rng.gen::<f64>() < 0.85;
            if submitted_this_week {
                activity_events.push(ActivityEvent {
                    user_id: id.clone(),
                    timestamp: stamp(&mut rng),
                    kind: ActivityKind::AssignmentSubmitted,
                });
                submitted_any = true;
                week_events += 1;
                if rng.gen::<f64>() < 0.4 {
                    activity_events.push(ActivityEvent {
                        user_id: id.clone(),
                        timestamp: stamp(&mut rng),
                        kind: ActivityKind::ReviewSubmitted,
                    });
                    week_events += 1;
                }
            }
            if rng.gen::<f64>() < 0.10 + 0.06 * richness {
                activity_events.push(ActivityEvent {
                    user_id: id.clone(),
                    timestamp: stamp(&mut rng),
                    kind: ActivityKind::HangoutAttended,
                });
                week_events += 1;
            }

            let n_posts = posts_dist.sample(&mut rng) as usize;
            for k in 0..n_posts {
                let post_id = format!("p:{id}:{week}:{k}");
                forum_events.push(ForumEvent {
                    user_id: id.clone(),
                    timestamp: stamp(&mut rng),
                    kind: ForumKind::Post,
                    text_length: f64::max(post_len.sample(&mut rng), 1.0).round() as u32,
                    target_user_id: None,
                    target_post_id: None,
                    author_is_instructor: false,
                });
                posts_by_week[week].push((u, post_id));
                week_events += 1;
            }
            let n_replies = replies_dist.sample(&mut rng) as usize;
            for _ in 0..n_replies {
                forum_events.push(ForumEvent {
                    user_id: id.clone(),
                    timestamp: stamp(&mut rng),
                    kind: ForumKind::ReplyGiven,
                    text_length: f64::max(note_len.sample(&mut rng), 1.0).round() as u32,
                    target_user_id: None,
                    target_post_id: None,
                    author_is_instructor: false,
                });
                pending_targets.push((forum_events.len() - 1, week));
                week_events += 1;
            }
            let n_comments = comments_dist.sample(&mut rng) as usize;
            for _ in 0..n_comments {
                forum_events.push(ForumEvent {
                    user_id: id.clone(),
                    timestamp: stamp(&mut rng),
                    kind: ForumKind::CommentGiven,
                    text_length: f64::max(note_len.sample(&mut rng), 1.0).round() as u32,
                    target_user_id: None,
                    target_post_id: None,
                    author_is_instructor: false,
                });
                pending_targets.push((forum_events.len() - 1, week));
                week_events += 1;
            }

            // Completers keep a full event history.
            if plan.completed && week_events == 0 {
                activity_events.push(ActivityEvent {
                    user_id: id.clone(),
                    timestamp: stamp(&mut rng),
                    kind: ActivityKind::HangoutAttended,
                });
            }

            if plan.completed {
                continue;
            }
            let eta = s.base_persist_log_odds
                + s.assignment_log_odds * f64::from(submitted_this_week)
                + s.forum_log_odds * f64::from(n_posts + n_replies + n_comments > 0)
                + s.profile_log_odds * richness;
            active = rng.gen::<f64>() < sigmoid(eta);
        }

        // A planned submitter always shows at least one submission.
        if plan.submitter && !submitted_any {
            let week_start = calendar.week_start(last_active_week);
            activity_events.push(ActivityEvent {
                user_id: id.clone(),
                timestamp: week_start + Duration::seconds(rng.gen_range(0..7 * 86_400)),
                kind: ActivityKind::AssignmentSubmitted,
            });
        }
    }

    // Wire reply/comment targets to posts of the same week. Replies with no
    // post to land on are dropped.
    {
        let mut rng = seeds::rng(seeds::child(config.seed, seeds::domain::WIRING));
        let mut drop_list = Vec::new();
        for &(ev_idx, week) in &pending_targets {
            let pool = &posts_by_week[week];
            if pool.is_empty() {
                drop_list.push(ev_idx);
                continue;
            }
            let (author, post_id) = &pool[rng.gen_range(0..pool.len())];
            let ev = &mut forum_events[ev_idx];
            ev.target_user_id = Some(user_id_of(*author));
            ev.target_post_id = Some(post_id.clone());
            ev.author_is_instructor = rng.gen::<f64>() < 0.04;
        }
        if !drop_list.is_empty() {
            let drop: BTreeSet<usize> = drop_list.into_iter().collect();
            forum_events = forum_events
                .into_iter()
                .enumerate()
                .filter(|(i, _)| !drop.contains(i))
                .map(|(_, e)| e)
                .collect();
        }
    }

    let cohort = Cohort {
        calendar,
        users,
        forum_events,
        activity_events,
    };
    cohort.validate()?;
    Ok(derive_labels(cohort))
}
