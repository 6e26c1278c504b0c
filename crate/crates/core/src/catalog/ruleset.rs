use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::grammar::{
    parse_syntax, validate_pattern, GrammarError, Level, NonTerminalDef, Pattern, Provenance,
    Taxonomy,
};

use super::CatalogError;

/// One production rule as loaded from a rule-set file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rule {
    pub nonterminal: String,
    /// Pattern text exactly as written in the source file.
    pub source: String,
    pub pattern: Pattern,
    pub description: String,
    pub provenance: Option<Provenance>,
}

impl Rule {
    pub fn definition(&self) -> NonTerminalDef {
        NonTerminalDef {
            name: self.nonterminal.clone(),
            pattern: self.pattern.clone(),
        }
    }

    /// Whether the source pattern accepts the empty sequence and is
    /// therefore matched in its non-empty form.
    pub fn is_normalized(&self) -> bool {
        self.pattern.is_nullable()
    }
}

/// Production rules for every non-terminal of one NT taxonomy, written over
/// one terminal alphabet.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RuleSet {
    pub name: String,
    pub terminal_taxonomy: String,
    pub nonterminal_taxonomy: String,
    pub rules: Vec<Rule>,
    /// Non-terminals that cannot be expressed over this terminal alphabet.
    pub null_nonterminals: Vec<String>,
    pub provenance: Provenance,
    pub citation: Option<String>,
    /// Terminal whose occurrences are qualified `same`/`different` by
    /// attribute continuity before matching.
    pub qualify: Option<String>,
}

#[derive(Serialize, Deserialize)]
struct RuleFile {
    nonterminal: String,
    pattern: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    description: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    provenance: Option<Provenance>,
}

#[derive(Serialize, Deserialize)]
struct RuleSetFile {
    name: String,
    terminal_taxonomy: String,
    nonterminal_taxonomy: String,
    #[serde(default)]
    provenance: Provenance,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    citation: Option<String>,
    rules: Vec<RuleFile>,
    #[serde(default)]
    null_nonterminals: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    qualify: Option<String>,
}

impl RuleSet {
    /// Conventional name `<terminal>-<nonterminal>-mapping`.
    pub fn conventional_name(terminal: &str, nonterminal: &str) -> String {
        format!("{terminal}-{nonterminal}-mapping")
    }

    /// Parses a rule-set file. Pattern syntax is checked here; symbols are
    /// checked by [`validate_ruleset`].
    pub fn from_json(text: &str) -> Result<Self, CatalogError> {
        let file: RuleSetFile =
            serde_json::from_str(text).map_err(|e| CatalogError::Malformed(e.to_string()))?;
        let rules = file
            .rules
            .into_iter()
            .map(|r| {
                let pattern = parse_syntax(&r.pattern).map_err(|source| CatalogError::Pattern {
                    rule: r.nonterminal.clone(),
                    source,
                })?;
                Ok(Rule {
                    nonterminal: r.nonterminal,
                    source: r.pattern,
                    pattern,
                    description: r.description,
                    provenance: r.provenance,
                })
            })
            .collect::<Result<Vec<_>, CatalogError>>()?;
        Ok(Self {
            name: file.name,
            terminal_taxonomy: file.terminal_taxonomy,
            nonterminal_taxonomy: file.nonterminal_taxonomy,
            rules,
            null_nonterminals: file.null_nonterminals,
            provenance: file.provenance,
            citation: file.citation,
            qualify: file.qualify,
        })
    }

    pub fn to_json(&self) -> String {
        let file = RuleSetFile {
            name: self.name.clone(),
            terminal_taxonomy: self.terminal_taxonomy.clone(),
            nonterminal_taxonomy: self.nonterminal_taxonomy.clone(),
            provenance: self.provenance,
            citation: self.citation.clone(),
            rules: self
                .rules
                .iter()
                .map(|r| RuleFile {
                    nonterminal: r.nonterminal.clone(),
                    pattern: r.source.clone(),
                    description: r.description.clone(),
                    provenance: r.provenance,
                })
                .collect(),
            null_nonterminals: self.null_nonterminals.clone(),
            qualify: self.qualify.clone(),
        };
        serde_json::to_string_pretty(&file).expect("rule set serializes")
    }

    pub fn rule(&self, nonterminal: &str) -> Option<&Rule> {
        self.rules.iter().find(|r| r.nonterminal == nonterminal)
    }

    /// Non-terminals whose patterns were narrowed to their non-empty part.
    pub fn normalized_rules(&self) -> Vec<&str> {
        self.rules
            .iter()
            .filter(|r| r.is_normalized())
            .map(|r| r.nonterminal.as_str())
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiagnosticKind {
    UnknownSymbol,
    UnknownQualifier,
    NullInPattern,
    EmptyLanguage,
    WrongTaxonomyLevel,
    UnknownNonterminal,
    DuplicateNonterminal,
    MissingNonterminal,
    UnknownQualifyTerminal,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub kind: DiagnosticKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rule: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub symbol: Option<String>,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

/// Checks every rule-set invariant; an empty list means the set is valid.
pub fn validate_ruleset(rs: &RuleSet, terminals: &Taxonomy, nonterminals: &Taxonomy) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let diag = |kind, rule: Option<&str>, symbol: Option<&str>, message: String| Diagnostic {
        kind,
        rule: rule.map(str::to_string),
        symbol: symbol.map(str::to_string),
        message,
    };
    if terminals.level != Level::Terminal {
        out.push(diag(
            DiagnosticKind::WrongTaxonomyLevel,
            None,
            None,
            format!("`{}` is not a terminal-level taxonomy", terminals.name),
        ));
        return out;
    }
    if nonterminals.level != Level::NonTerminal {
        out.push(diag(
            DiagnosticKind::WrongTaxonomyLevel,
            None,
            None,
            format!("`{}` is not a non-terminal-level taxonomy", nonterminals.name),
        ));
        return out;
    }

    for rule in &rs.rules {
        let name = rule.nonterminal.as_str();
        // Report every offending symbol, not just the first.
        for t in rule.pattern.symbols() {
            let single = Pattern::Symbol(t.clone());
            if let Err(e) = validate_pattern(&single, terminals) {
                let kind = match e {
                    GrammarError::UnknownQualifier { .. } => DiagnosticKind::UnknownQualifier,
                    GrammarError::NullInPattern => DiagnosticKind::NullInPattern,
                    _ => DiagnosticKind::UnknownSymbol,
                };
                out.push(diag(
                    kind,
                    Some(name),
                    Some(&t.to_string()),
                    format!("rule `{name}`: {e}"),
                ));
            }
        }
        if !rule.pattern.matches_nonempty() {
            out.push(diag(
                DiagnosticKind::EmptyLanguage,
                Some(name),
                None,
                format!("rule `{name}`: pattern `{}` matches only the empty sequence", rule.source),
            ));
        }
    }

    let mut seen: BTreeMap<&str, usize> = BTreeMap::new();
    let declared = rs
        .rules
        .iter()
        .map(|r| r.nonterminal.as_str())
        .chain(rs.null_nonterminals.iter().map(String::as_str));
    for name in declared {
        *seen.entry(name).or_default() += 1;
        if !nonterminals.contains(name) {
            out.push(diag(
                DiagnosticKind::UnknownNonterminal,
                Some(name),
                None,
                format!("`{name}` is not a non-terminal of `{}`", nonterminals.name),
            ));
        }
    }
    for (name, n) in &seen {
        if *n > 1 {
            out.push(diag(
                DiagnosticKind::DuplicateNonterminal,
                Some(name),
                None,
                format!("`{name}` is declared {n} times across rules and null_nonterminals"),
            ));
        }
    }
    for name in nonterminals.names() {
        if !seen.contains_key(name) {
            out.push(diag(
                DiagnosticKind::MissingNonterminal,
                Some(name),
                None,
                format!("non-terminal `{name}` appears in neither rules nor null_nonterminals"),
            ));
        }
    }
    if let Some(q) = &rs.qualify {
        if !terminals.contains(q) {
            out.push(diag(
                DiagnosticKind::UnknownQualifyTerminal,
                None,
                Some(q),
                format!("qualify terminal `{q}` is not in `{}`", terminals.name),
            ));
        }
    }
    out
}
