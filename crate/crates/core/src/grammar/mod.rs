//! Symbols, production-rule patterns and their automata.

mod ast;
mod nfa;
mod parse;
mod symbol;
mod taxonomy;

pub use ast::Pattern;
pub use nfa::{Label, MatchPolicy, MatchSpan, StateId, SymbolAutomaton};
pub use parse::{parse_syntax, MAX_REPEAT};
pub use symbol::{is_identifier, InvalidTerminal, Terminal, NULL_TERMINAL};
pub use taxonomy::{Level, Provenance, SymbolDef, Taxonomy, TaxonomyError};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GrammarError {
    #[error("syntax error at offset {position}: {message}")]
    Syntax { position: usize, message: String },
    #[error("unknown symbol `{symbol}` (not in taxonomy `{taxonomy}`)")]
    UnknownSymbol { symbol: String, taxonomy: String },
    #[error("symbol `{symbol}` does not declare qualifier `{qualifier}` in taxonomy `{taxonomy}`")]
    UnknownQualifier {
        symbol: String,
        qualifier: String,
        taxonomy: String,
    },
    #[error("the reserved `null` terminal may not appear in a pattern")]
    NullInPattern,
    #[error("taxonomy `{0}` is not a terminal-level taxonomy")]
    NotTerminalLevel(String),
    #[error("pattern `{0}` can only match the empty sequence")]
    EmptyLanguage(String),
    #[error("symbol `{symbol}` at position {position} is outside the automaton alphabet")]
    AlphabetMismatch { symbol: String, position: usize },
}

/// Checks every symbol leaf of `pattern` against a level-T alphabet.
pub fn validate_pattern(pattern: &Pattern, alphabet: &Taxonomy) -> Result<(), GrammarError> {
    if alphabet.level != Level::Terminal {
        return Err(GrammarError::NotTerminalLevel(alphabet.name.clone()));
    }
    for t in pattern.symbols() {
        if t.is_null() {
            return Err(GrammarError::NullInPattern);
        }
        let Some(def) = alphabet.symbol(&t.name) else {
            return Err(GrammarError::UnknownSymbol {
                symbol: t.name.clone(),
                taxonomy: alphabet.name.clone(),
            });
        };
        if let Some(q) = &t.qualifier {
            if !def.qualifiers.contains(q) {
                return Err(GrammarError::UnknownQualifier {
                    symbol: t.name.clone(),
                    qualifier: q.clone(),
                    taxonomy: alphabet.name.clone(),
                });
            }
        }
    }
    if !pattern.matches_nonempty() {
        return Err(GrammarError::EmptyLanguage(pattern.to_string()));
    }
    Ok(())
}

/// Parses `text` and checks it against the terminal alphabet.
pub fn parse_pattern(text: &str, alphabet: &Taxonomy) -> Result<Pattern, GrammarError> {
    let pattern = parse_syntax(text)?;
    validate_pattern(&pattern, alphabet)?;
    Ok(pattern)
}

/// Compiles a validated pattern. The resulting automaton is labelled with the
/// pattern's printed form; use [`SymbolAutomaton::build`] to choose a name.
pub fn compile(pattern: &Pattern, alphabet: &Taxonomy) -> SymbolAutomaton {
    SymbolAutomaton::build(pattern.to_string(), pattern, alphabet)
}

/// A production rule: a non-terminal name and its pattern.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NonTerminalDef {
    pub name: String,
    pub pattern: Pattern,
}

impl NonTerminalDef {
    pub fn compile(&self, alphabet: &Taxonomy) -> SymbolAutomaton {
        SymbolAutomaton::build(self.name.clone(), &self.pattern, alphabet)
    }
}
