use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::symbol::{is_identifier, Terminal, NULL_TERMINAL};

/// Granularity of a taxonomy: terminal (`T`) or non-terminal (`NT`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Level {
    #[serde(rename = "T")]
    Terminal,
    #[serde(rename = "NT")]
    NonTerminal,
}

/// Where a catalog entry, or a single symbol of it, comes from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    /// Printed verbatim in the literature the entry was built from.
    LiteratureExplicit,
    /// Described in prose by the source literature and transcribed.
    LiteratureDescribed,
    /// Authored for this catalog.
    #[default]
    CatalogAuthored,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymbolDef {
    pub name: String,
    /// Qualifiers the symbol may carry (e.g. `same`, `different`).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub qualifiers: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub citation: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
}

impl SymbolDef {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            qualifiers: Vec::new(),
            citation: None,
            provenance: None,
        }
    }

    pub fn with_qualifiers<I, S>(mut self, qualifiers: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.qualifiers = qualifiers.into_iter().map(Into::into).collect();
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TaxonomyError {
    #[error("taxonomy name `{0}` is not a valid identifier")]
    InvalidName(String),
    #[error("taxonomy `{0}` has no symbols")]
    Empty(String),
    #[error("taxonomy `{taxonomy}`: symbol `{symbol}` is not a valid identifier")]
    InvalidSymbol { taxonomy: String, symbol: String },
    #[error("taxonomy `{taxonomy}`: the reserved name `null` cannot be declared")]
    ReservedSymbol { taxonomy: String },
    #[error("taxonomy `{taxonomy}`: duplicate symbol `{symbol}`")]
    DuplicateSymbol { taxonomy: String, symbol: String },
    #[error("taxonomy `{taxonomy}`: symbol `{symbol}` has invalid qualifier `{qualifier}`")]
    InvalidQualifier {
        taxonomy: String,
        symbol: String,
        qualifier: String,
    },
}

/// A named, ordered symbol set at one level of the taxonomy hierarchy.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawTaxonomy")]
pub struct Taxonomy {
    pub name: String,
    pub level: Level,
    pub symbols: Vec<SymbolDef>,
    #[serde(default)]
    pub citation: String,
    #[serde(default)]
    pub provenance: Provenance,
}

#[derive(Deserialize)]
struct RawTaxonomy {
    name: String,
    level: Level,
    symbols: Vec<SymbolDef>,
    #[serde(default)]
    citation: String,
    #[serde(default)]
    provenance: Provenance,
}

impl TryFrom<RawTaxonomy> for Taxonomy {
    type Error = TaxonomyError;

    fn try_from(raw: RawTaxonomy) -> Result<Self, Self::Error> {
        let tax = Taxonomy {
            name: raw.name,
            level: raw.level,
            symbols: raw.symbols,
            citation: raw.citation,
            provenance: raw.provenance,
        };
        tax.validate()?;
        Ok(tax)
    }
}

impl Taxonomy {
    pub fn new(
        name: impl Into<String>,
        level: Level,
        symbols: Vec<SymbolDef>,
    ) -> Result<Self, TaxonomyError> {
        let tax = Self {
            name: name.into(),
            level,
            symbols,
            citation: String::new(),
            provenance: Provenance::CatalogAuthored,
        };
        tax.validate()?;
        Ok(tax)
    }

    /// Convenience constructor for a level-T taxonomy of plain symbols.
    pub fn terminals<I, S>(name: impl Into<String>, names: I) -> Result<Self, TaxonomyError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self::new(
            name,
            Level::Terminal,
            names.into_iter().map(SymbolDef::new).collect(),
        )
    }

    fn validate(&self) -> Result<(), TaxonomyError> {
        if !is_identifier(&self.name) {
            return Err(TaxonomyError::InvalidName(self.name.clone()));
        }
        if self.symbols.is_empty() {
            return Err(TaxonomyError::Empty(self.name.clone()));
        }
        let mut seen = HashSet::new();
        for sym in &self.symbols {
            if sym.name == NULL_TERMINAL {
                return Err(TaxonomyError::ReservedSymbol {
                    taxonomy: self.name.clone(),
                });
            }
            if !is_identifier(&sym.name) {
                return Err(TaxonomyError::InvalidSymbol {
                    taxonomy: self.name.clone(),
                    symbol: sym.name.clone(),
                });
            }
            if !seen.insert(sym.name.as_str()) {
                return Err(TaxonomyError::DuplicateSymbol {
                    taxonomy: self.name.clone(),
                    symbol: sym.name.clone(),
                });
            }
            if let Some(q) = sym.qualifiers.iter().find(|q| !is_identifier(q)) {
                return Err(TaxonomyError::InvalidQualifier {
                    taxonomy: self.name.clone(),
                    symbol: sym.name.clone(),
                    qualifier: q.clone(),
                });
            }
        }
        Ok(())
    }

    pub fn symbol(&self, name: &str) -> Option<&SymbolDef> {
        self.symbols.iter().find(|s| s.name == name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.symbol(name).is_some()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.symbols.iter().map(|s| s.name.as_str())
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    /// Whether `t` may appear in a pattern over this alphabet. A qualifier is
    /// accepted only when the symbol declares it.
    pub fn accepts(&self, t: &Terminal) -> bool {
        match self.symbol(&t.name) {
            None => false,
            Some(def) => match &t.qualifier {
                None => true,
                Some(q) => def.qualifiers.iter().any(|d| d == q),
            },
        }
    }
}
