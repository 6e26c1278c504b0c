use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Name of the reserved terminal assigned to log records no category covers.
pub const NULL_TERMINAL: &str = "null";

/// Returns true for identifiers of the form `[a-z][a-z0-9_-]*`.
pub fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_lowercase() => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_' || c == '-')
}

/// A terminal symbol, optionally carrying a qualifier such as `same` or
/// `different` (written `inspect:same`).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Terminal {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qualifier: Option<String>,
}

impl Terminal {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            qualifier: None,
        }
    }

    pub fn qualified(name: impl Into<String>, qualifier: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            qualifier: Some(qualifier.into()),
        }
    }

    pub fn null() -> Self {
        Self::new(NULL_TERMINAL)
    }

    pub fn is_null(&self) -> bool {
        self.name == NULL_TERMINAL
    }
}

impl fmt::Display for Terminal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.qualifier {
            Some(q) => write!(f, "{}:{}", self.name, q),
            None => f.write_str(&self.name),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid terminal `{0}`: expected `name` or `name:qualifier` with lowercase identifiers")]
pub struct InvalidTerminal(pub String);

impl FromStr for Terminal {
    type Err = InvalidTerminal;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (name, qualifier) = match s.split_once(':') {
            Some((n, q)) => (n, Some(q)),
            None => (s, None),
        };
        if !is_identifier(name) || qualifier.is_some_and(|q| !is_identifier(q)) {
            return Err(InvalidTerminal(s.to_string()));
        }
        Ok(Self {
            name: name.to_string(),
            qualifier: qualifier.map(str::to_string),
        })
    }
}

impl From<&str> for Terminal {
    /// Panics on malformed input; intended for literals in code and tests.
    fn from(s: &str) -> Self {
        s.parse().unwrap_or_else(|e| panic!("{e}"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identifiers() {
        assert!(is_identifier("details_on_demand"));
        assert!(is_identifier("abstract-elaborate"));
        assert!(is_identifier("t2"));
        assert!(!is_identifier(""));
        assert!(!is_identifier("Filter"));
        assert!(!is_identifier("2d"));
        assert!(!is_identifier("a b"));
    }

    #[test]
    fn parse_and_display() {
        let t: Terminal = "inspect:same".parse().unwrap();
        assert_eq!(t, Terminal::qualified("inspect", "same"));
        assert_eq!(t.to_string(), "inspect:same");
        assert!("inspect:".parse::<Terminal>().is_err());
        assert!(Terminal::null().is_null());
    }
}
