//! Code-books translating dataset log records to terminal symbols.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::de::{MapAccess, Visitor};
use serde::{Deserialize, Deserializer, Serialize};

use crate::grammar::{Taxonomy, NULL_TERMINAL};
use crate::ingest::EventLog;
use crate::sequence::{Encoding, SeqItem, SequenceSet, TerminalSequence};

#[derive(Debug, thiserror::Error)]
pub enum MappingError {
    #[error("cannot read {path}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed mapping: {0}")]
    Malformed(String),
    #[error("record `{record}` maps to `{terminal}`, which is not a terminal of `{taxonomy}`")]
    UnknownTerminal {
        record: String,
        terminal: String,
        taxonomy: String,
    },
    #[error("record `{0}` is listed more than once")]
    DuplicateRecord(String),
    #[error("mapping targets `{mapping}` but taxonomy `{taxonomy}` was supplied")]
    TaxonomyMismatch { mapping: String, taxonomy: String },
    #[error("`{0}` is not a terminal of the taxonomy")]
    UnknownBase(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MappingRule {
    pub terminal: String,
    #[serde(default)]
    pub description: String,
}

/// Rules keyed by record, rejecting repeated keys while parsing.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct RuleMap(pub BTreeMap<String, MappingRule>);

impl<'de> Deserialize<'de> for RuleMap {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = RuleMap;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("an object mapping records to rules")
            }

            fn visit_map<A: MapAccess<'de>>(self, mut access: A) -> Result<RuleMap, A::Error> {
                let mut map = BTreeMap::new();
                while let Some((k, v)) = access.next_entry::<String, MappingRule>()? {
                    if map.contains_key(&k) {
                        return Err(serde::de::Error::custom(format!("duplicate record `{k}`")));
                    }
                    map.insert(k, v);
                }
                Ok(RuleMap(map))
            }
        }
        d.deserialize_map(V)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MappingSpec {
    pub name: String,
    pub source_dataset: String,
    pub target_taxonomy: String,
    pub rules: RuleMap,
    #[serde(default)]
    pub explicit_nulls: Vec<String>,
}

/// Outcome of one record lookup.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Lookup<'a> {
    Terminal(&'a str),
    ExplicitNull,
    Unlisted,
}

impl MappingSpec {
    /// Conventional name `<dataset>-<taxonomy>-mapping`.
    pub fn conventional_name(dataset: &str, taxonomy: &str) -> String {
        format!("{dataset}-{taxonomy}-mapping")
    }

    /// Parses a mapping file, checking structure and duplicate records.
    /// Returns the mapping and any warnings.
    pub fn from_json(text: &str) -> Result<(Self, Vec<String>), MappingError> {
        let spec: Self = serde_json::from_str(text).map_err(|e| {
            let msg = e.to_string();
            match msg
                .strip_prefix("duplicate record `")
                .and_then(|rest| rest.split_once('`'))
            {
                Some((record, _)) => MappingError::DuplicateRecord(record.to_string()),
                None => MappingError::Malformed(msg),
            }
        })?;
        let mut seen = std::collections::BTreeSet::new();
        for r in &spec.explicit_nulls {
            if spec.rules.0.contains_key(r) || !seen.insert(r) {
                return Err(MappingError::DuplicateRecord(r.clone()));
            }
        }
        let mut warnings = Vec::new();
        if spec.rules.0.is_empty() {
            warnings.push(format!("mapping `{}` has no rules", spec.name));
        }
        for (record, rule) in &spec.rules.0 {
            if rule.description.trim().is_empty() {
                warnings.push(format!("rule for `{record}` has no description"));
            }
        }
        Ok((spec, warnings))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("mapping serializes")
    }

    /// Checks every rule terminal against `taxonomy`.
    pub fn validate(&self, taxonomy: &Taxonomy) -> Result<(), MappingError> {
        if taxonomy.name != self.target_taxonomy {
            return Err(MappingError::TaxonomyMismatch {
                mapping: self.target_taxonomy.clone(),
                taxonomy: taxonomy.name.clone(),
            });
        }
        for (record, rule) in &self.rules.0 {
            if rule.terminal != NULL_TERMINAL && !taxonomy.contains(&rule.terminal) {
                return Err(MappingError::UnknownTerminal {
                    record: record.clone(),
                    terminal: rule.terminal.clone(),
                    taxonomy: taxonomy.name.clone(),
                });
            }
        }
        Ok(())
    }

    pub fn lookup(&self, record: &str) -> Lookup<'_> {
        match self.rules.0.get(record) {
            Some(rule) if rule.terminal == NULL_TERMINAL => Lookup::ExplicitNull,
            Some(rule) => Lookup::Terminal(&rule.terminal),
            None if self.explicit_nulls.iter().any(|r| r == record) => Lookup::ExplicitNull,
            None => Lookup::Unlisted,
        }
    }
}

/// Loads and validates a mapping file against its target taxonomy.
pub fn load_mapping(
    path: impl AsRef<Path>,
    taxonomy: &Taxonomy,
) -> Result<(MappingSpec, Vec<String>), MappingError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| MappingError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let (spec, warnings) = MappingSpec::from_json(&text)?;
    spec.validate(taxonomy)?;
    Ok((spec, warnings))
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MappingReport {
    pub events: usize,
    pub mapped: usize,
    pub explicit_null: usize,
    pub unlisted: usize,
    /// Occurrences of each record absent from the code-book.
    pub unlisted_records: BTreeMap<String, usize>,
}

/// Translates every event to a terminal. Records absent from the code-book
/// become `null` and are tallied as unlisted.
pub fn apply_mapping(log: &EventLog, spec: &MappingSpec) -> (SequenceSet, MappingReport) {
    let mut report = MappingReport::default();
    let sequences = log
        .sessions
        .iter()
        .map(|session| {
            let items = session
                .events
                .iter()
                .map(|e| {
                    report.events += 1;
                    let terminal = match spec.lookup(&e.record) {
                        Lookup::Terminal(t) => {
                            report.mapped += 1;
                            t
                        }
                        Lookup::ExplicitNull => {
                            report.explicit_null += 1;
                            NULL_TERMINAL
                        }
                        Lookup::Unlisted => {
                            report.unlisted += 1;
                            *report.unlisted_records.entry(e.record.clone()).or_default() += 1;
                            NULL_TERMINAL
                        }
                    };
                    SeqItem {
                        attribute: e.attribute.clone(),
                        ..SeqItem::new(terminal, e.ordinal)
                    }
                })
                .collect();
            TerminalSequence {
                session_id: session.session_id.clone(),
                encoding: Encoding::Raw,
                items,
            }
        })
        .collect();
    let set = SequenceSet {
        dataset: log.dataset.clone(),
        taxonomy: spec.target_taxonomy.clone(),
        sequences,
    };
    (set, report)
}

pub const SAME: &str = "same";
pub const DIFFERENT: &str = "different";

/// Qualifies occurrences of `base` as `same` when their attribute equals
/// that of the previous `base` occurrence in the session, else `different`.
/// When no occurrence carries an attribute the input is returned unchanged
/// with a warning.
pub fn qualify_inspect(
    seqs: &SequenceSet,
    base: &str,
    taxonomy: &Taxonomy,
) -> Result<(SequenceSet, Vec<String>), MappingError> {
    if !taxonomy.contains(base) {
        return Err(MappingError::UnknownBase(base.to_string()));
    }
    let occurrences = || {
        seqs.sequences
            .iter()
            .flat_map(|s| s.items.iter())
            .filter(|i| i.terminal == base)
    };
    if occurrences().next().is_some() && occurrences().all(|i| i.attribute.is_none()) {
        let warning = format!("no `{base}` event carries an attribute; `{base}` left unqualified");
        return Ok((seqs.clone(), vec![warning]));
    }
    let out = seqs.map_sequences(|s| {
        let mut items = s.items.clone();
        let mut prev: Option<Option<String>> = None;
        for item in items.iter_mut().filter(|i| i.terminal == base) {
            let same = matches!(
                (&prev, &item.attribute),
                (Some(Some(a)), Some(b)) if a == b
            );
            item.qualifier = Some(if same { SAME } else { DIFFERENT }.to_string());
            prev = Some(item.attribute.clone());
        }
        TerminalSequence {
            items,
            ..s.clone()
        }
    });
    Ok((out, Vec::new()))
}
