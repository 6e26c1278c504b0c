//! Terminal sequences: the mapped form of a session.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::grammar::{Terminal, NULL_TERMINAL};

fn one() -> u32 {
    1
}

fn is_one(n: &u32) -> bool {
    *n == 1
}

fn is_false(b: &bool) -> bool {
    !*b
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeqItem {
    pub terminal: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qualifier: Option<String>,
    /// Ordinal of the first source event this item derives from.
    pub source_ordinal: usize,
    #[serde(default = "one", skip_serializing_if = "is_one")]
    pub repeat_count: u32,
    #[serde(default, skip_serializing_if = "is_false")]
    pub plus: bool,
    /// Attribute of the source event, kept for qualification.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attribute: Option<String>,
}

impl SeqItem {
    pub fn new(terminal: impl Into<String>, source_ordinal: usize) -> Self {
        Self {
            terminal: terminal.into(),
            qualifier: None,
            source_ordinal,
            repeat_count: 1,
            plus: false,
            attribute: None,
        }
    }

    pub fn null(source_ordinal: usize) -> Self {
        Self::new(NULL_TERMINAL, source_ordinal)
    }

    pub fn with_qualifier(mut self, q: impl Into<String>) -> Self {
        self.qualifier = Some(q.into());
        self
    }

    pub fn with_attribute(mut self, a: impl Into<String>) -> Self {
        self.attribute = Some(a.into());
        self
    }

    pub fn is_null(&self) -> bool {
        self.terminal == NULL_TERMINAL
    }

    /// Identity used for run equality.
    pub fn key(&self) -> (&str, Option<&str>) {
        (&self.terminal, self.qualifier.as_deref())
    }

    pub fn to_terminal(&self) -> Terminal {
        Terminal {
            name: self.terminal.clone(),
            qualifier: self.qualifier.clone(),
        }
    }

    fn base_label(&self) -> String {
        match &self.qualifier {
            Some(q) => format!("{}:{q}", self.terminal),
            None => self.terminal.clone(),
        }
    }
}

/// How the items of a sequence have been reduced.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Encoding {
    #[default]
    Raw,
    Collapse,
    Plus,
    Numeric,
}

impl Encoding {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Raw => "raw",
            Self::Collapse => "collapse",
            Self::Plus => "plus",
            Self::Numeric => "numeric",
        }
    }
}

impl fmt::Display for Encoding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Encoding {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "raw" | "none" => Ok(Self::Raw),
            "collapse" => Ok(Self::Collapse),
            "plus" => Ok(Self::Plus),
            "numeric" => Ok(Self::Numeric),
            other => Err(format!(
                "unknown approach `{other}` (expected raw, collapse, plus or numeric)"
            )),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TerminalSequence {
    pub session_id: String,
    #[serde(default)]
    pub encoding: Encoding,
    pub items: Vec<SeqItem>,
}

impl TerminalSequence {
    pub fn new(session_id: impl Into<String>, items: Vec<SeqItem>) -> Self {
        Self {
            session_id: session_id.into(),
            encoding: Encoding::Raw,
            items,
        }
    }

    /// Raw sequence from `name` or `name:qualifier` labels; ordinals are positions.
    pub fn from_labels(session_id: impl Into<String>, labels: &[&str]) -> Self {
        let items = labels
            .iter()
            .enumerate()
            .map(|(i, l)| match l.split_once(':') {
                Some((n, q)) => SeqItem::new(n, i).with_qualifier(q),
                None => SeqItem::new(*l, i),
            })
            .collect();
        Self::new(session_id, items)
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn terminals(&self) -> Vec<Terminal> {
        self.items.iter().map(SeqItem::to_terminal).collect()
    }

    /// Terminal names, ignoring qualifiers and annotations.
    pub fn names(&self) -> Vec<&str> {
        self.items.iter().map(|i| i.terminal.as_str()).collect()
    }

    /// Display label of one item under this sequence's encoding.
    pub fn label(&self, index: usize) -> String {
        render_item(&self.items[index], self.encoding)
    }

    pub fn labels(&self) -> Vec<String> {
        (0..self.items.len()).map(|i| self.label(i)).collect()
    }

    /// Expanded length: the sum of repeat counts.
    pub fn expanded_len(&self) -> usize {
        self.items.iter().map(|i| i.repeat_count as usize).sum()
    }
}

/// Renders `name+` for plus items and `name<k>` under numeric encoding.
pub fn render_item(item: &SeqItem, encoding: Encoding) -> String {
    let base = item.base_label();
    match encoding {
        Encoding::Numeric => format!("{base}{}", item.repeat_count),
        _ if item.plus => format!("{base}+"),
        _ => base,
    }
}

impl fmt::Display for TerminalSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.labels().join(" "))
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SequenceError {
    #[error("cannot read {path}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed sequence file: {0}")]
    Malformed(String),
    #[error("session `{session_id}`: source ordinals are not strictly increasing at item {index}")]
    Ordinals { session_id: String, index: usize },
    #[error("session `{session_id}`: item {index} has repeat_count 0")]
    ZeroRepeat { session_id: String, index: usize },
}

/// Mapped sequences for one dataset under one terminal taxonomy.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SequenceSet {
    pub dataset: String,
    pub taxonomy: String,
    pub sequences: Vec<TerminalSequence>,
}

impl SequenceSet {
    pub fn validate(&self) -> Result<(), SequenceError> {
        for s in &self.sequences {
            for (index, pair) in s.items.windows(2).enumerate() {
                if pair[1].source_ordinal <= pair[0].source_ordinal {
                    return Err(SequenceError::Ordinals {
                        session_id: s.session_id.clone(),
                        index: index + 1,
                    });
                }
            }
            if let Some(index) = s.items.iter().position(|i| i.repeat_count == 0) {
                return Err(SequenceError::ZeroRepeat {
                    session_id: s.session_id.clone(),
                    index,
                });
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, SequenceError> {
        let set: Self =
            serde_json::from_str(text).map_err(|e| SequenceError::Malformed(e.to_string()))?;
        set.validate()?;
        Ok(set)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, SequenceError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| SequenceError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("sequence set serializes")
    }

    pub fn map_sequences(&self, f: impl Fn(&TerminalSequence) -> TerminalSequence) -> Self {
        Self {
            dataset: self.dataset.clone(),
            taxonomy: self.taxonomy.clone(),
            sequences: self.sequences.iter().map(f).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_annotations() {
        let mut s = TerminalSequence::from_labels("s", &["filter", "inspect:same"]);
        s.items[0].plus = true;
        assert_eq!(s.to_string(), "filter+ inspect:same");
        s.encoding = Encoding::Numeric;
        s.items[0].repeat_count = 2;
        assert_eq!(s.to_string(), "filter2 inspect:same1");
    }

    #[test]
    fn json_round_trip_and_validation() {
        let set = SequenceSet {
            dataset: "d".into(),
            taxonomy: "t".into(),
            sequences: vec![TerminalSequence::from_labels("s", &["a", "null", "b"])],
        };
        let back = SequenceSet::from_json(&set.to_json()).unwrap();
        assert_eq!(back, set);
        assert!(back.sequences[0].items[1].is_null());

        let mut bad = set.clone();
        bad.sequences[0].items[2].source_ordinal = 1;
        assert!(matches!(
            SequenceSet::from_json(&bad.to_json()),
            Err(SequenceError::Ordinals { index: 2, .. })
        ));
    }
}
