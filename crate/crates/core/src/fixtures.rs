//! Seeded synthetic interaction logs with planted record patterns.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ingest::{Event, EventLog, Session};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum FixtureError {
    #[error("record vocabulary is empty")]
    EmptyVocabulary,
    #[error("fixture needs at least one participant and one task")]
    NoSessions,
    #[error("filler length range {0}..={1} is empty")]
    LengthRange(usize, usize),
    #[error("record `{0}` is not in the vocabulary")]
    UnknownRecord(String),
    #[error("planted pattern {0} has no records")]
    EmptyPlant(usize),
    #[error("vocabulary record `{0}` was never emitted; lengthen sessions or plant it")]
    Unemitted(String),
}

/// A record sequence inserted `per_session` times into every session.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlantedPattern {
    pub records: Vec<String>,
    pub per_session: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixtureSpec {
    pub name: String,
    pub seed: u64,
    pub participants: usize,
    #[serde(default = "one")]
    pub tasks_per_participant: usize,
    /// Inclusive range of filler events per session.
    pub filler_len: (usize, usize),
    /// Every record the log may contain.
    pub records: Vec<String>,
    /// Records drawn for filler; defaults to the whole vocabulary.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub filler_records: Option<Vec<String>>,
    #[serde(default)]
    pub planted: Vec<PlantedPattern>,
    /// Record inserted between adjacent segments (filler chunks and
    /// planted instances).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub separator: Option<String>,
    /// Attribute values drawn per event; empty means no attributes.
    #[serde(default)]
    pub attributes: Vec<String>,
    /// Require every vocabulary record to appear somewhere in the log.
    #[serde(default)]
    pub require_full_vocabulary: bool,
}

fn one() -> usize {
    1
}

const EPOCH_2020_MS: i64 = 1_577_836_800_000;

impl FixtureSpec {
    fn validate(&self) -> Result<(), FixtureError> {
        if self.records.is_empty() {
            return Err(FixtureError::EmptyVocabulary);
        }
        if self.participants == 0 || self.tasks_per_participant == 0 {
            return Err(FixtureError::NoSessions);
        }
        let (lo, hi) = self.filler_len;
        if lo > hi {
            return Err(FixtureError::LengthRange(lo, hi));
        }
        let known = |r: &String| {
            if self.records.contains(r) {
                Ok(())
            } else {
                Err(FixtureError::UnknownRecord(r.clone()))
            }
        };
        for (i, p) in self.planted.iter().enumerate() {
            if p.records.is_empty() {
                return Err(FixtureError::EmptyPlant(i));
            }
            p.records.iter().try_for_each(known)?;
        }
        if let Some(f) = &self.filler_records {
            if f.is_empty() && hi > 0 {
                return Err(FixtureError::EmptyVocabulary);
            }
            f.iter().try_for_each(known)?;
        }
        self.separator.iter().try_for_each(known)
    }
}

/// Generates the log described by `spec`; identical specs give identical logs.
pub fn gen_fixture(spec: &FixtureSpec) -> Result<EventLog, FixtureError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let filler = spec.filler_records.as_ref().unwrap_or(&spec.records);
    let mut sessions = Vec::new();
    let mut clock = EPOCH_2020_MS;
    for p in 1..=spec.participants {
        for t in 1..=spec.tasks_per_participant {
            let participant = format!("p{p:02}");
            let task = format!("t{t}");
            let session_id = if spec.tasks_per_participant == 1 {
                participant.clone()
            } else {
                format!("{participant}-{task}")
            };

            let mut segments: Vec<Vec<&str>> = spec
                .planted
                .iter()
                .flat_map(|pl| std::iter::repeat_n(&pl.records, pl.per_session))
                .map(|records| records.iter().map(String::as_str).collect())
                .collect();
            segments.shuffle(&mut rng);
            // Split the filler budget over the gaps around planted segments.
            let filler_total = rng.random_range(spec.filler_len.0..=spec.filler_len.1);
            let slots = segments.len() + 1;
            let mut sizes = vec![0usize; slots];
            for _ in 0..filler_total {
                sizes[rng.random_range(0..slots)] += 1;
            }
            let mut layout: Vec<Vec<&str>> = Vec::new();
            for (i, size) in sizes.into_iter().enumerate() {
                if size > 0 {
                    layout.push(
                        (0..size)
                            .map(|_| filler.choose(&mut rng).expect("non-empty filler").as_str())
                            .collect(),
                    );
                }
                if i < segments.len() {
                    layout.push(std::mem::take(&mut segments[i]));
                }
            }

            let mut records: Vec<&str> = Vec::new();
            for (i, seg) in layout.iter().enumerate() {
                if i > 0 {
                    if let Some(sep) = &spec.separator {
                        records.push(sep);
                    }
                }
                records.extend(seg);
            }
            if records.is_empty() {
                records.push(filler.first().unwrap_or(&spec.records[0]));
            }

            clock += 3_600_000;
            let mut ts = clock;
            let events = records
                .iter()
                .enumerate()
                .map(|(ordinal, record)| {
                    ts += rng.random_range(200..3_000);
                    Event {
                        session_id: session_id.clone(),
                        ordinal,
                        timestamp: Some(ts),
                        record: record.to_string(),
                        attribute: spec.attributes.choose(&mut rng).cloned(),
                        participant: Some(participant.clone()),
                        task: Some(task.clone()),
                        payload: Default::default(),
                    }
                })
                .collect();
            sessions.push(Session {
                session_id,
                participant: Some(participant),
                task: Some(task),
                events,
            });
        }
    }
    let log = EventLog::from_sessions(spec.name.clone(), sessions);
    if spec.require_full_vocabulary {
        if let Some(missing) = spec.records.iter().find(|r| !log.distinct_records.contains(*r)) {
            return Err(FixtureError::Unemitted(missing.clone()));
        }
    }
    Ok(log)
}

/// Record vocabulary of the Wall-shaped fixture.
pub const WALL_RECORDS: [&str; 11] = [
    "mouseover_from_list",
    "change_attribute_distribution",
    "filter_changed",
    "mouseover_from_scatterplot",
    "click_list_item",
    "sort_list",
    "change_x_axis",
    "change_y_axis",
    "zoom_scatterplot",
    "pan_scatterplot",
    "show_cluster_view",
];

/// 24 participants, 11 distinct records, one planted mantra-shaped run per
/// session.
pub fn wall_spec() -> FixtureSpec {
    FixtureSpec {
        name: "wall2020".into(),
        seed: 2020,
        participants: 24,
        tasks_per_participant: 1,
        filler_len: (20, 60),
        records: WALL_RECORDS.iter().map(|s| s.to_string()).collect(),
        filler_records: None,
        planted: vec![PlantedPattern {
            records: [
                "change_attribute_distribution",
                "zoom_scatterplot",
                "filter_changed",
                "mouseover_from_list",
            ]
            .iter()
            .map(|s| s.to_string())
            .collect(),
            per_session: 1,
        }],
        separator: None,
        attributes: ["age", "gpa", "sat", "major", "gender", "ethnicity"]
            .iter()
            .map(|s| s.to_string())
            .collect(),
        require_full_vocabulary: true,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wall_shape() {
        let log = gen_fixture(&wall_spec()).unwrap();
        assert_eq!(log.sessions.len(), 24);
        assert_eq!(log.distinct_records.len(), 11);
        assert_eq!(log, gen_fixture(&wall_spec()).unwrap());
        for s in &log.sessions {
            let ts: Vec<i64> = s.events.iter().map(|e| e.timestamp.unwrap()).collect();
            assert!(ts.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn planted_runs_are_separated() {
        let spec = FixtureSpec {
            name: "x".into(),
            seed: 1,
            participants: 2,
            tasks_per_participant: 2,
            filler_len: (3, 5),
            records: ["a", "b", "sep"].iter().map(|s| s.to_string()).collect(),
            filler_records: Some(vec!["b".into()]),
            planted: vec![PlantedPattern {
                records: vec!["a".into(), "a".into()],
                per_session: 3,
            }],
            separator: Some("sep".into()),
            attributes: vec![],
            require_full_vocabulary: false,
        };
        let log = gen_fixture(&spec).unwrap();
        assert_eq!(log.sessions.len(), 4);
        assert_eq!(log.sessions[1].session_id, "p01-t2");
        for s in &log.sessions {
            let recs: Vec<&str> = s.events.iter().map(|e| e.record.as_str()).collect();
            assert_eq!(recs.iter().filter(|r| **r == "a").count(), 6);
            assert!(!recs.windows(3).any(|w| w == ["a", "a", "a"]));
        }
    }

    #[test]
    fn invalid_specs() {
        let mut spec = wall_spec();
        spec.records.clear();
        assert_eq!(gen_fixture(&spec), Err(FixtureError::EmptyVocabulary));
        let mut spec = wall_spec();
        spec.planted[0].records.push("teleport".into());
        assert!(matches!(gen_fixture(&spec), Err(FixtureError::UnknownRecord(_))));
        let mut spec = wall_spec();
        spec.filler_len = (5, 1);
        assert!(matches!(gen_fixture(&spec), Err(FixtureError::LengthRange(5, 1))));
    }
}
