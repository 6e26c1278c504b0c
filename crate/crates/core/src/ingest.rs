//! Interaction-log ingestion: CSV, JSON arrays and newline-delimited JSON,
//! normalized to sessions of ordered events.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::Read;
use std::path::Path;

use chrono::{DateTime, NaiveDateTime};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("cannot read {path}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("input contains no events")]
    Empty,
    #[error("missing mandatory column `{0}`")]
    MissingColumn(String),
    #[error("line {line}: {message}")]
    Row { line: usize, message: String },
    #[error("malformed input: {0}")]
    Malformed(String),
    #[error("segmentation key `{0}` is not present on any event")]
    UnknownKey(String),
    #[error("segmentation key `{key}` missing on event {ordinal} of session `{session_id}`")]
    MissingKey {
        key: String,
        session_id: String,
        ordinal: usize,
    },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputFormat {
    #[default]
    Csv,
    Json,
    Ndjson,
}

impl std::str::FromStr for InputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            "ndjson" | "jsonl" => Ok(Self::Ndjson),
            other => Err(format!("unknown format `{other}` (expected csv, json or ndjson)")),
        }
    }
}

fn default_session_col() -> String {
    "session_id".into()
}

fn default_record_col() -> String {
    "record".into()
}

/// Column mapping for one dataset's ad-hoc log schema.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormatConfig {
    #[serde(default)]
    pub format: InputFormat,
    #[serde(default = "default_session_col")]
    pub session_col: String,
    #[serde(default = "default_record_col")]
    pub record_col: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_col: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attr_col: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub participant_col: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task_col: Option<String>,
    /// Dataset name; defaults to the file stem.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset: Option<String>,
    /// Skip unparseable rows (reporting them) instead of failing.
    #[serde(default)]
    pub lenient: bool,
}

impl Default for FormatConfig {
    fn default() -> Self {
        Self {
            format: InputFormat::Csv,
            session_col: default_session_col(),
            record_col: default_record_col(),
            time_col: None,
            attr_col: None,
            participant_col: None,
            task_col: None,
            dataset: None,
            lenient: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Event {
    pub session_id: String,
    pub ordinal: usize,
    /// Milliseconds since the Unix epoch.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<i64>,
    pub record: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attribute: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub participant: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task: Option<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub payload: BTreeMap<String, String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Session {
    pub session_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub participant: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task: Option<String>,
    pub events: Vec<Event>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RejectedRow {
    pub line: usize,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventLog {
    pub dataset: String,
    pub sessions: Vec<Session>,
    pub distinct_records: BTreeSet<String>,
    /// Rows skipped under lenient ingestion.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rejected: Vec<RejectedRow>,
}

impl EventLog {
    /// Builds a log from sessions, deriving `distinct_records`.
    pub fn from_sessions(dataset: impl Into<String>, sessions: Vec<Session>) -> Self {
        let distinct_records = sessions
            .iter()
            .flat_map(|s| s.events.iter().map(|e| e.record.clone()))
            .collect();
        Self {
            dataset: dataset.into(),
            sessions,
            distinct_records,
            rejected: Vec::new(),
        }
    }

    pub fn event_count(&self) -> usize {
        self.sessions.iter().map(|s| s.events.len()).sum()
    }

    pub fn events(&self) -> impl Iterator<Item = &Event> {
        self.sessions.iter().flat_map(|s| s.events.iter())
    }
}

/// Writes the log as CSV with columns `session_id, participant, task,
/// timestamp, record, attribute`. Timestamps are RFC 3339 in UTC.
pub fn write_csv<W: std::io::Write>(log: &EventLog, out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["session_id", "participant", "task", "timestamp", "record", "attribute"])?;
    for s in &log.sessions {
        for e in &s.events {
            let ts = e
                .timestamp
                .and_then(DateTime::from_timestamp_millis)
                .map(|t| t.to_rfc3339_opts(chrono::SecondsFormat::Millis, true))
                .unwrap_or_default();
            let participant = e.participant.as_deref().or(s.participant.as_deref());
            let task = e.task.as_deref().or(s.task.as_deref());
            w.write_record([
                e.session_id.as_str(),
                participant.unwrap_or(""),
                task.unwrap_or(""),
                ts.as_str(),
                e.record.as_str(),
                e.attribute.as_deref().unwrap_or(""),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Column mapping matching [`write_csv`].
pub fn written_csv_config() -> FormatConfig {
    FormatConfig {
        time_col: Some("timestamp".into()),
        attr_col: Some("attribute".into()),
        participant_col: Some("participant".into()),
        task_col: Some("task".into()),
        ..FormatConfig::default()
    }
}

/// A row before grouping: field lookup by column name.
struct RawRow {
    line: usize,
    fields: BTreeMap<String, String>,
}

struct Pending {
    file_order: usize,
    timestamp: Option<i64>,
    event: Event,
    participant: Option<String>,
    task: Option<String>,
}

pub fn parse_timestamp(s: &str) -> Option<i64> {
    let s = s.trim();
    if let Ok(ms) = s.parse::<i64>() {
        return Some(ms);
    }
    if let Ok(ms) = s.parse::<f64>() {
        return ms.is_finite().then(|| ms.round() as i64);
    }
    if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
        return Some(dt.timestamp_millis());
    }
    ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f"]
        .iter()
        .find_map(|fmt| NaiveDateTime::parse_from_str(s, fmt).ok())
        .map(|dt| dt.and_utc().timestamp_millis())
}

fn json_scalar(v: &serde_json::Value) -> Option<String> {
    match v {
        serde_json::Value::Null => None,
        serde_json::Value::String(s) => Some(s.clone()),
        other => Some(other.to_string()),
    }
}

fn object_row(line: usize, v: serde_json::Value) -> Result<RawRow, IngestError> {
    match v {
        serde_json::Value::Object(map) => Ok(RawRow {
            line,
            fields: map
                .into_iter()
                .filter_map(|(k, v)| json_scalar(&v).map(|s| (k, s)))
                .collect(),
        }),
        _ => Err(IngestError::Row {
            line,
            message: "expected a JSON object".into(),
        }),
    }
}

fn read_rows(
    text: &str,
    cfg: &FormatConfig,
    rejected: &mut Vec<RejectedRow>,
) -> Result<Vec<RawRow>, IngestError> {
    let mut rows = Vec::new();
    let reject = |err: IngestError, rejected: &mut Vec<RejectedRow>| -> Result<(), IngestError> {
        match err {
            IngestError::Row { line, message } if cfg.lenient => {
                rejected.push(RejectedRow { line, message });
                Ok(())
            }
            e => Err(e),
        }
    };
    match cfg.format {
        InputFormat::Csv => {
            let mut reader = csv::ReaderBuilder::new()
                .flexible(false)
                .from_reader(text.as_bytes());
            let headers = reader
                .headers()
                .map_err(|e| IngestError::Malformed(e.to_string()))?
                .clone();
            if headers.is_empty() {
                return Err(IngestError::Empty);
            }
            for required in [&cfg.session_col, &cfg.record_col] {
                if !headers.iter().any(|h| h == required) {
                    return Err(IngestError::MissingColumn(required.clone()));
                }
            }
            for optional in [&cfg.time_col, &cfg.attr_col, &cfg.participant_col, &cfg.task_col]
                .into_iter()
                .flatten()
            {
                if !headers.iter().any(|h| h == optional) {
                    return Err(IngestError::MissingColumn(optional.clone()));
                }
            }
            for result in reader.records() {
                match result {
                    Ok(rec) => {
                        let line = rec.position().map_or(0, |p| p.line() as usize);
                        let fields = headers
                            .iter()
                            .zip(rec.iter())
                            .map(|(h, v)| (h.to_string(), v.to_string()))
                            .collect();
                        rows.push(RawRow { line, fields });
                    }
                    Err(e) => {
                        let line = e.position().map_or(0, |p| p.line() as usize);
                        reject(
                            IngestError::Row {
                                line,
                                message: e.to_string(),
                            },
                            rejected,
                        )?;
                    }
                }
            }
        }
        InputFormat::Json => {
            let value: serde_json::Value =
                serde_json::from_str(text).map_err(|e| IngestError::Malformed(e.to_string()))?;
            let serde_json::Value::Array(items) = value else {
                return Err(IngestError::Malformed("expected a JSON array of objects".into()));
            };
            for (i, item) in items.into_iter().enumerate() {
                match object_row(i + 1, item) {
                    Ok(row) => rows.push(row),
                    Err(e) => reject(e, rejected)?,
                }
            }
        }
        InputFormat::Ndjson => {
            for (i, line) in text.lines().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                let parsed = serde_json::from_str(line)
                    .map_err(|e| IngestError::Row {
                        line: i + 1,
                        message: e.to_string(),
                    })
                    .and_then(|v| object_row(i + 1, v));
                match parsed {
                    Ok(row) => rows.push(row),
                    Err(e) => reject(e, rejected)?,
                }
            }
        }
    }
    Ok(rows)
}

fn row_to_pending(row: RawRow, order: usize, cfg: &FormatConfig) -> Result<Pending, IngestError> {
    let RawRow { line, mut fields } = row;
    let take_required = |fields: &mut BTreeMap<String, String>, col: &str| {
        match fields.remove(col) {
            Some(v) if !v.trim().is_empty() => Ok(v),
            _ => Err(IngestError::Row {
                line,
                message: format!("empty or missing `{col}`"),
            }),
        }
    };
    let session_id = take_required(&mut fields, &cfg.session_col)?;
    let record = take_required(&mut fields, &cfg.record_col)?;
    let timestamp = match &cfg.time_col {
        None => None,
        Some(col) => {
            let raw = take_required(&mut fields, col)?;
            Some(parse_timestamp(&raw).ok_or_else(|| IngestError::Row {
                line,
                message: format!("unparseable timestamp `{raw}`"),
            })?)
        }
    };
    let non_empty = |v: Option<String>| v.filter(|s| !s.is_empty());
    let attribute = cfg.attr_col.as_ref().and_then(|c| non_empty(fields.remove(c)));
    let participant = cfg
        .participant_col
        .as_ref()
        .and_then(|c| non_empty(fields.remove(c)));
    let task = cfg
        .task_col
        .as_ref()
        .and_then(|c| non_empty(fields.remove(c)));
    Ok(Pending {
        file_order: order,
        timestamp,
        event: Event {
            session_id,
            ordinal: 0,
            timestamp,
            record,
            attribute,
            participant: participant.clone(),
            task: task.clone(),
            payload: fields,
        },
        participant,
        task,
    })
}

/// Parses log text according to `cfg`.
pub fn ingest_str(text: &str, dataset: &str, cfg: &FormatConfig) -> Result<EventLog, IngestError> {
    if text.trim().is_empty() {
        return Err(IngestError::Empty);
    }
    let mut rejected = Vec::new();
    let rows = read_rows(text, cfg, &mut rejected)?;
    let mut pending = Vec::with_capacity(rows.len());
    for (order, row) in rows.into_iter().enumerate() {
        let line = row.line;
        match row_to_pending(row, order, cfg) {
            Ok(p) => pending.push(p),
            Err(IngestError::Row { message, .. }) if cfg.lenient => {
                rejected.push(RejectedRow { line, message })
            }
            Err(e) => return Err(e),
        }
    }
    if pending.is_empty() {
        return Err(IngestError::Empty);
    }

    let mut index: HashMap<String, usize> = HashMap::new();
    let mut groups: Vec<Vec<Pending>> = Vec::new();
    for p in pending {
        let slot = *index.entry(p.event.session_id.clone()).or_insert_with(|| {
            groups.push(Vec::new());
            groups.len() - 1
        });
        groups[slot].push(p);
    }
    let sessions = groups
        .into_iter()
        .map(|mut group| {
            // Stable: ties keep file order.
            group.sort_by_key(|p| (p.timestamp, p.file_order));
            let participant = group.iter().find_map(|p| p.participant.clone());
            let task = group.iter().find_map(|p| p.task.clone());
            let events: Vec<Event> = group
                .into_iter()
                .enumerate()
                .map(|(i, p)| Event { ordinal: i, ..p.event })
                .collect();
            Session {
                session_id: events[0].session_id.clone(),
                participant,
                task,
                events,
            }
        })
        .collect();
    let mut log = EventLog::from_sessions(dataset, sessions);
    rejected.sort_by_key(|r| r.line);
    log.rejected = rejected;
    Ok(log)
}

/// Reads and parses a log file. The dataset name defaults to the file stem.
pub fn ingest(path: impl AsRef<Path>, cfg: &FormatConfig) -> Result<EventLog, IngestError> {
    let path = path.as_ref();
    let io = |source| IngestError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut text = String::new();
    std::fs::File::open(path)
        .map_err(io)?
        .read_to_string(&mut text)
        .map_err(io)?;
    let dataset = cfg.dataset.clone().unwrap_or_else(|| {
        path.file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "dataset".into())
    });
    ingest_str(&text, &dataset, cfg)
}

fn key_value(session: &Session, event: &Event, key: &str) -> Option<String> {
    match key {
        "session_id" | "session" => Some(event.session_id.clone()),
        "participant" => event
            .participant
            .clone()
            .or_else(|| session.participant.clone())
            .or_else(|| event.payload.get(key).cloned()),
        "task" => event
            .task
            .clone()
            .or_else(|| session.task.clone())
            .or_else(|| event.payload.get(key).cloned()),
        "record" => Some(event.record.clone()),
        "attribute" => event.attribute.clone(),
        other => event.payload.get(other).cloned(),
    }
}

/// Re-partitions events by the values of `keys`. Partitions appear in order
/// of first occurrence, event order is preserved within each, and ordinals
/// are renumbered.
pub fn segment_sessions(log: &EventLog, keys: &[&str]) -> Result<EventLog, IngestError> {
    for key in keys {
        let present = log
            .sessions
            .iter()
            .any(|s| s.events.iter().any(|e| key_value(s, e, key).is_some()));
        if !present {
            return Err(IngestError::UnknownKey(key.to_string()));
        }
    }
    let mut index: HashMap<Vec<String>, usize> = HashMap::new();
    type Partition<'a> = (Vec<String>, Vec<(&'a Session, &'a Event)>);
    let mut parts: Vec<Partition<'_>> = Vec::new();
    for s in &log.sessions {
        for e in &s.events {
            let values = keys
                .iter()
                .map(|k| {
                    key_value(s, e, k).ok_or_else(|| IngestError::MissingKey {
                        key: k.to_string(),
                        session_id: s.session_id.clone(),
                        ordinal: e.ordinal,
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            let slot = *index.entry(values.clone()).or_insert_with(|| {
                parts.push((values, Vec::new()));
                parts.len() - 1
            });
            parts[slot].1.push((s, e));
        }
    }
    let sessions = parts
        .into_iter()
        .map(|(values, members)| {
            let session_id = values.join("/");
            let shared = |f: fn(&Session, &Event) -> Option<String>| {
                let first = f(members[0].0, members[0].1);
                members
                    .iter()
                    .all(|(s, e)| f(s, e) == first)
                    .then(|| first.clone())
                    .flatten()
            };
            let participant = shared(|s, e| e.participant.clone().or_else(|| s.participant.clone()));
            let task = shared(|s, e| e.task.clone().or_else(|| s.task.clone()));
            let events = members
                .iter()
                .enumerate()
                .map(|(i, (_, e))| Event {
                    session_id: session_id.clone(),
                    ordinal: i,
                    ..(*e).clone()
                })
                .collect();
            Session {
                session_id,
                participant,
                task,
                events,
            }
        })
        .collect();
    let mut out = EventLog::from_sessions(log.dataset.clone(), sessions);
    out.rejected = log.rejected.clone();
    Ok(out)
}
