//! Built-in taxonomies and rule sets, plus loading of user-supplied ones.

mod ruleset;

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;

use crate::grammar::{GrammarError, Level, Provenance, Taxonomy};

pub use ruleset::{validate_ruleset, Diagnostic, DiagnosticKind, Rule, RuleSet};

#[derive(Debug, thiserror::Error)]
pub enum CatalogError {
    #[error("unknown taxonomy `{0}` (not built in and no such file)")]
    UnknownTaxonomy(String),
    #[error("no rule set for `{terminal}` × `{nonterminal}`")]
    UnknownPairing {
        terminal: String,
        nonterminal: String,
    },
    #[error("malformed catalog file: {0}")]
    Malformed(String),
    #[error("rule `{rule}`: {source}")]
    Pattern {
        rule: String,
        #[source]
        source: GrammarError,
    },
    #[error("cannot read {path}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

const BUILTIN_TAXONOMIES: &[(&str, &str)] = &[
    ("amar2005", include_str!("../../data/taxonomies/amar2005.json")),
    ("brehmermunzner2013", include_str!("../../data/taxonomies/brehmermunzner2013.json")),
    ("gotzzhou2009", include_str!("../../data/taxonomies/gotzzhou2009.json")),
    ("yi2007", include_str!("../../data/taxonomies/yi2007.json")),
    ("shneiderman1996", include_str!("../../data/taxonomies/shneiderman1996.json")),
    ("gotzwen2009", include_str!("../../data/taxonomies/gotzwen2009.json")),
    ("guo2015", include_str!("../../data/taxonomies/guo2015.json")),
];

macro_rules! ruleset_file {
    ($t:literal, $nt:literal) => {
        include_str!(concat!("../../data/rulesets/", $t, "-", $nt, "-mapping.json"))
    };
}

const BUILTIN_RULESETS: &[&str] = &[
    ruleset_file!("amar2005", "shneiderman1996"),
    ruleset_file!("brehmermunzner2013", "shneiderman1996"),
    ruleset_file!("gotzzhou2009", "shneiderman1996"),
    ruleset_file!("yi2007", "shneiderman1996"),
    ruleset_file!("amar2005", "gotzwen2009"),
    ruleset_file!("brehmermunzner2013", "gotzwen2009"),
    ruleset_file!("gotzzhou2009", "gotzwen2009"),
    ruleset_file!("yi2007", "gotzwen2009"),
    ruleset_file!("amar2005", "guo2015"),
    ruleset_file!("brehmermunzner2013", "guo2015"),
    ruleset_file!("gotzzhou2009", "guo2015"),
    ruleset_file!("yi2007", "guo2015"),
];

/// Short names accepted wherever a taxonomy name is expected.
const ALIASES: &[(&str, &str)] = &[
    ("a", "amar2005"),
    ("amar", "amar2005"),
    ("bm", "brehmermunzner2013"),
    ("gz", "gotzzhou2009"),
    ("y", "yi2007"),
    ("yi", "yi2007"),
    ("s", "shneiderman1996"),
    ("shneiderman", "shneiderman1996"),
    ("gw", "gotzwen2009"),
    ("gotzwen", "gotzwen2009"),
    ("guo", "guo2015"),
];

/// Resolves a short alias (`bm`, `shneiderman`, …) to the full name.
pub fn resolve_alias(name: &str) -> &str {
    ALIASES
        .iter()
        .find(|(alias, _)| *alias == name)
        .map_or(name, |(_, full)| full)
}

/// Names of the seven built-in taxonomies, terminal level first.
pub fn list_builtin() -> Vec<String> {
    BUILTIN_TAXONOMIES.iter().map(|(n, _)| n.to_string()).collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EntryKind {
    Taxonomy(Level),
    RuleSet,
}

/// Summary of one catalog item.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CatalogEntry {
    pub name: String,
    pub kind: EntryKind,
    pub provenance: Provenance,
    pub citation: Option<String>,
}

/// Registry of taxonomies and rule sets. Starts from the built-in data and
/// accepts user additions.
#[derive(Clone, Debug)]
pub struct Catalog {
    taxonomies: BTreeMap<String, Taxonomy>,
    rulesets: BTreeMap<String, RuleSet>,
}

fn read(path: &Path) -> Result<String, CatalogError> {
    std::fs::read_to_string(path).map_err(|source| CatalogError::Io {
        path: path.display().to_string(),
        source,
    })
}

impl Default for Catalog {
    fn default() -> Self {
        Self::builtin()
    }
}

impl Catalog {
    pub fn builtin() -> Self {
        let taxonomies = BUILTIN_TAXONOMIES
            .iter()
            .map(|(name, text)| {
                let tax: Taxonomy = serde_json::from_str(text)
                    .unwrap_or_else(|e| panic!("built-in taxonomy {name}: {e}"));
                (tax.name.clone(), tax)
            })
            .collect();
        let rulesets = BUILTIN_RULESETS
            .iter()
            .map(|text| {
                let rs = RuleSet::from_json(text)
                    .unwrap_or_else(|e| panic!("built-in rule set: {e}"));
                (rs.name.clone(), rs)
            })
            .collect();
        Self {
            taxonomies,
            rulesets,
        }
    }

    pub fn taxonomies(&self) -> impl Iterator<Item = &Taxonomy> {
        self.taxonomies.values()
    }

    pub fn rulesets(&self) -> impl Iterator<Item = &RuleSet> {
        self.rulesets.values()
    }

    pub fn entries(&self) -> Vec<CatalogEntry> {
        let taxa = self.taxonomies.values().map(|t| CatalogEntry {
            name: t.name.clone(),
            kind: EntryKind::Taxonomy(t.level),
            provenance: t.provenance,
            citation: (!t.citation.is_empty()).then(|| t.citation.clone()),
        });
        let rules = self.rulesets.values().map(|r| CatalogEntry {
            name: r.name.clone(),
            kind: EntryKind::RuleSet,
            provenance: r.provenance,
            citation: r.citation.clone(),
        });
        taxa.chain(rules).collect()
    }

    /// Looks up a registered taxonomy by name or alias.
    pub fn taxonomy(&self, name: &str) -> Result<&Taxonomy, CatalogError> {
        self.taxonomies
            .get(resolve_alias(name))
            .ok_or_else(|| CatalogError::UnknownTaxonomy(name.to_string()))
    }

    /// Registered taxonomy by name, else a JSON file at that path.
    pub fn load_taxonomy(&self, name_or_path: &str) -> Result<Taxonomy, CatalogError> {
        if let Ok(t) = self.taxonomy(name_or_path) {
            return Ok(t.clone());
        }
        let path = Path::new(name_or_path);
        if !path.exists() {
            return Err(CatalogError::UnknownTaxonomy(name_or_path.to_string()));
        }
        serde_json::from_str(&read(path)?).map_err(|e| CatalogError::Malformed(e.to_string()))
    }

    /// Registers a taxonomy, replacing any entry of the same name.
    pub fn add_taxonomy(&mut self, taxonomy: Taxonomy) {
        self.taxonomies.insert(taxonomy.name.clone(), taxonomy);
    }

    pub fn add_ruleset(&mut self, ruleset: RuleSet) {
        self.rulesets.insert(ruleset.name.clone(), ruleset);
    }

    /// Registered rule set for a (terminal, non-terminal) pairing.
    pub fn load_ruleset(&self, terminal: &str, nonterminal: &str) -> Result<RuleSet, CatalogError> {
        let t = resolve_alias(terminal);
        let nt = resolve_alias(nonterminal);
        self.rulesets
            .get(&RuleSet::conventional_name(t, nt))
            .cloned()
            .ok_or_else(|| CatalogError::UnknownPairing {
                terminal: t.to_string(),
                nonterminal: nt.to_string(),
            })
    }

    /// Resolves a rule-set reference: an existing file path, a full
    /// `<t>-<nt>-mapping` name, or a short `<t>-<nt>` pair such as
    /// `bm-shneiderman`.
    pub fn resolve_ruleset(&self, reference: &str) -> Result<RuleSet, CatalogError> {
        let path = Path::new(reference);
        if path.is_file() {
            return RuleSet::from_json(&read(path)?);
        }
        if let Some(rs) = self.rulesets.get(reference) {
            return Ok(rs.clone());
        }
        let stem = reference.strip_suffix("-mapping").unwrap_or(reference);
        match stem.split_once('-') {
            Some((t, nt)) => self.load_ruleset(t, nt),
            None => Err(CatalogError::UnknownPairing {
                terminal: reference.to_string(),
                nonterminal: String::new(),
            }),
        }
    }

    /// Validates a rule set against the registered taxonomies it names.
    pub fn validate_ruleset(&self, rs: &RuleSet) -> Result<Vec<Diagnostic>, CatalogError> {
        let t = self.taxonomy(&rs.terminal_taxonomy)?;
        let nt = self.taxonomy(&rs.nonterminal_taxonomy)?;
        Ok(validate_ruleset(rs, t, nt))
    }
}
