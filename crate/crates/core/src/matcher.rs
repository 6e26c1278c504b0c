//! Applies a rule set to terminal sequences.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::catalog::{validate_ruleset, Catalog, CatalogError, Diagnostic, RuleSet};
use crate::grammar::{GrammarError, MatchPolicy, MatchSpan, SymbolAutomaton, Taxonomy};
use crate::mapping::qualify_inspect;
use crate::sequence::{Encoding, SequenceSet, TerminalSequence};
use crate::transform;

#[derive(Debug, thiserror::Error)]
pub enum MatchError {
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error("rule set `{name}` is invalid: {}", .diagnostics.iter().map(|d| d.message.as_str()).collect::<Vec<_>>().join("; "))]
    Invalid {
        name: String,
        diagnostics: Vec<Diagnostic>,
    },
    #[error("sequences use taxonomy `{sequences}` but the rule set is written over `{ruleset}`")]
    TaxonomyMismatch { sequences: String, ruleset: String },
    #[error("session `{session_id}`: {source}")]
    Alphabet {
        session_id: String,
        #[source]
        source: GrammarError,
    },
}

/// A validated rule set with one automaton per expressible non-terminal.
#[derive(Clone, Debug)]
pub struct CompiledRuleSet {
    pub ruleset: RuleSet,
    pub terminals: Taxonomy,
    automata: Vec<SymbolAutomaton>,
}

impl CompiledRuleSet {
    pub fn compile(
        ruleset: &RuleSet,
        terminals: &Taxonomy,
        nonterminals: &Taxonomy,
    ) -> Result<Self, MatchError> {
        let diagnostics = validate_ruleset(ruleset, terminals, nonterminals);
        if !diagnostics.is_empty() {
            return Err(MatchError::Invalid {
                name: ruleset.name.clone(),
                diagnostics,
            });
        }
        let automata = ruleset
            .rules
            .iter()
            .map(|r| r.definition().compile(terminals))
            .collect();
        Ok(Self {
            ruleset: ruleset.clone(),
            terminals: terminals.clone(),
            automata,
        })
    }

    /// Compiles a rule set against the taxonomies registered in `catalog`.
    pub fn from_catalog(catalog: &Catalog, ruleset: &RuleSet) -> Result<Self, MatchError> {
        let t = catalog.taxonomy(&ruleset.terminal_taxonomy)?;
        let nt = catalog.taxonomy(&ruleset.nonterminal_taxonomy)?;
        Self::compile(ruleset, t, nt)
    }

    pub fn automata(&self) -> &[SymbolAutomaton] {
        &self.automata
    }

    pub fn null_nonterminals(&self) -> &[String] {
        &self.ruleset.null_nonterminals
    }

    /// Non-terminal names in rule order.
    pub fn nonterminals(&self) -> impl Iterator<Item = &str> {
        self.automata.iter().map(|a| a.name())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionMatchReport {
    pub session_id: String,
    pub counts: BTreeMap<String, usize>,
    /// Spans index into the transformed sequence.
    pub spans: BTreeMap<String, Vec<MatchSpan>>,
    pub null_nonterminals: Vec<String>,
}

/// Transforms `seq` by `approach` and counts every rule's occurrences
/// independently.
pub fn match_session(
    seq: &TerminalSequence,
    rs: &CompiledRuleSet,
    approach: Encoding,
) -> Result<SessionMatchReport, MatchError> {
    let reduced = transform::apply(seq, approach);
    let terminals = reduced.terminals();
    let mut counts = BTreeMap::new();
    let mut spans = BTreeMap::new();
    for a in &rs.automata {
        let found = a
            .find_matches(&terminals, MatchPolicy::LeftmostLongest)
            .map_err(|source| MatchError::Alphabet {
                session_id: seq.session_id.clone(),
                source,
            })?;
        counts.insert(a.name().to_string(), found.len());
        spans.insert(a.name().to_string(), found);
    }
    Ok(SessionMatchReport {
        session_id: seq.session_id.clone(),
        counts,
        spans,
        null_nonterminals: rs.ruleset.null_nonterminals.clone(),
    })
}

/// Checks the taxonomy and applies the rule set's qualification step when
/// the qualified terminal still lacks qualifiers. Returns warnings.
pub fn prepare(
    set: &SequenceSet,
    rs: &CompiledRuleSet,
) -> Result<(SequenceSet, Vec<String>), MatchError> {
    if set.taxonomy != rs.ruleset.terminal_taxonomy {
        return Err(MatchError::TaxonomyMismatch {
            sequences: set.taxonomy.clone(),
            ruleset: rs.ruleset.terminal_taxonomy.clone(),
        });
    }
    match &rs.ruleset.qualify {
        Some(base)
            if set
                .sequences
                .iter()
                .flat_map(|s| &s.items)
                .any(|i| &i.terminal == base && i.qualifier.is_none()) =>
        {
            let (qualified, warnings) = qualify_inspect(set, base, &rs.terminals)
                .expect("qualify terminal was validated with the rule set");
            Ok((qualified, warnings))
        }
        _ => Ok((set.clone(), Vec::new())),
    }
}

/// [`match_session`] over every sequence, in order.
pub fn match_dataset(
    set: &SequenceSet,
    rs: &CompiledRuleSet,
    approach: Encoding,
) -> Result<Vec<SessionMatchReport>, MatchError> {
    let (prepared, _) = prepare(set, rs)?;
    prepared
        .sequences
        .iter()
        .map(|s| match_session(s, rs, approach))
        .collect()
}
