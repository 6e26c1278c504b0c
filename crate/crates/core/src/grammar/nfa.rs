//! Thompson construction and set-based simulation over terminal sequences.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::ast::Pattern;
use super::symbol::Terminal;
use super::taxonomy::Taxonomy;
use super::GrammarError;

pub type StateId = usize;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Label {
    Epsilon,
    /// Matches an item with this name; with a qualifier, only items carrying
    /// that exact qualifier.
    Symbol(Terminal),
}

impl Label {
    fn admits(&self, item: &Terminal) -> bool {
        match self {
            Label::Epsilon => false,
            Label::Symbol(t) => {
                t.name == item.name
                    && match &t.qualifier {
                        None => true,
                        Some(q) => item.qualifier.as_deref() == Some(q.as_str()),
                    }
            }
        }
    }
}

#[derive(Clone, Debug, Default)]
struct State {
    edges: Vec<(Label, StateId)>,
}

/// Half-open `[start, end)` occurrence of a non-terminal in a terminal
/// sequence.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MatchSpan {
    pub nonterminal: String,
    pub start: usize,
    pub end: usize,
}

impl MatchSpan {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.start
    }
}

/// How occurrences are selected when scanning a sequence.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
#[non_exhaustive]
pub enum MatchPolicy {
    /// From the lowest unconsumed index take the longest match, then resume
    /// after it.
    #[default]
    LeftmostLongest,
}

/// Compiled production rule. Never accepts the empty sequence: a nullable
/// source pattern such as `(x)*` is matched as `(x)+`, and
/// [`SymbolAutomaton::normalized_nullable`] records that this happened.
#[derive(Clone, Debug)]
pub struct SymbolAutomaton {
    name: String,
    states: Vec<State>,
    start: StateId,
    accept: StateId,
    alphabet: BTreeSet<String>,
    normalized_nullable: bool,
}

struct Builder<'a> {
    states: Vec<State>,
    alphabet: &'a Taxonomy,
}

impl Builder<'_> {
    fn state(&mut self) -> StateId {
        self.states.push(State::default());
        self.states.len() - 1
    }

    fn edge(&mut self, from: StateId, label: Label, to: StateId) {
        self.states[from].edges.push((label, to));
    }

    fn eps(&mut self, from: StateId, to: StateId) {
        self.edge(from, Label::Epsilon, to);
    }

    /// Returns the (entry, exit) pair of a fresh fragment.
    fn fragment(&mut self, p: &Pattern) -> (StateId, StateId) {
        match p {
            Pattern::Symbol(t) => {
                debug_assert!(self.alphabet.accepts(t));
                let s = self.state();
                let e = self.state();
                self.edge(s, Label::Symbol(t.clone()), e);
                (s, e)
            }
            Pattern::Concat(cs) => {
                let s = self.state();
                let mut cur = s;
                for c in cs {
                    let (cs_, ce) = self.fragment(c);
                    self.eps(cur, cs_);
                    cur = ce;
                }
                (s, cur)
            }
            Pattern::Alt(cs) => {
                let s = self.state();
                let e = self.state();
                for c in cs {
                    let (cs_, ce) = self.fragment(c);
                    self.eps(s, cs_);
                    self.eps(ce, e);
                }
                (s, e)
            }
            Pattern::Star(inner) => {
                let s = self.state();
                let e = self.state();
                let (is, ie) = self.fragment(inner);
                self.eps(s, is);
                self.eps(s, e);
                self.eps(ie, is);
                self.eps(ie, e);
                (s, e)
            }
            Pattern::Plus(inner) => {
                let s = self.state();
                let e = self.state();
                let (is, ie) = self.fragment(inner);
                self.eps(s, is);
                self.eps(ie, is);
                self.eps(ie, e);
                (s, e)
            }
            Pattern::Optional(inner) => {
                let s = self.state();
                let e = self.state();
                let (is, ie) = self.fragment(inner);
                self.eps(s, is);
                self.eps(s, e);
                self.eps(ie, e);
                (s, e)
            }
            Pattern::Repeat { inner, min, max } => {
                let s = self.state();
                let mut cur = s;
                for _ in 0..*min {
                    let (is, ie) = self.fragment(inner);
                    self.eps(cur, is);
                    cur = ie;
                }
                let e = self.state();
                for _ in *min..*max {
                    let (is, ie) = self.fragment(inner);
                    self.eps(cur, is);
                    self.eps(cur, e);
                    cur = ie;
                }
                self.eps(cur, e);
                (s, e)
            }
        }
    }
}

/// Reusable state-set storage for one simulation.
struct StateSet {
    members: Vec<StateId>,
    present: Vec<bool>,
}

impl StateSet {
    fn new(n: usize) -> Self {
        Self {
            members: Vec::with_capacity(n),
            present: vec![false; n],
        }
    }

    fn clear(&mut self) {
        for &s in &self.members {
            self.present[s] = false;
        }
        self.members.clear();
    }

    fn insert(&mut self, s: StateId) -> bool {
        if self.present[s] {
            return false;
        }
        self.present[s] = true;
        self.members.push(s);
        true
    }
}

impl SymbolAutomaton {
    /// Builds the automaton for a pattern already validated against
    /// `alphabet`. `name` labels the spans it produces.
    pub fn build(name: impl Into<String>, pattern: &Pattern, alphabet: &Taxonomy) -> Self {
        let mut b = Builder {
            states: Vec::new(),
            alphabet,
        };
        let (start, accept) = b.fragment(pattern);
        Self {
            name: name.into(),
            states: b.states,
            start,
            accept,
            alphabet: alphabet.names().map(str::to_string).collect(),
            normalized_nullable: pattern.is_nullable(),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn start(&self) -> StateId {
        self.start
    }

    pub fn accepting(&self) -> &[StateId] {
        std::slice::from_ref(&self.accept)
    }

    pub fn state_count(&self) -> usize {
        self.states.len()
    }

    pub fn alphabet(&self) -> &BTreeSet<String> {
        &self.alphabet
    }

    /// Outgoing transitions of `state`.
    pub fn transitions(&self, state: StateId) -> impl Iterator<Item = (&Label, StateId)> {
        self.states[state].edges.iter().map(|(l, t)| (l, *t))
    }

    /// True when the source pattern accepted the empty sequence and was
    /// narrowed to its non-empty part.
    pub fn normalized_nullable(&self) -> bool {
        self.normalized_nullable
    }

    fn check_alphabet(&self, seq: &[Terminal]) -> Result<(), GrammarError> {
        for (position, t) in seq.iter().enumerate() {
            if !t.is_null() && !self.alphabet.contains(&t.name) {
                return Err(GrammarError::AlphabetMismatch {
                    symbol: t.to_string(),
                    position,
                });
            }
        }
        Ok(())
    }

    fn close(&self, set: &mut StateSet, stack: &mut Vec<StateId>) {
        stack.extend_from_slice(&set.members);
        while let Some(s) = stack.pop() {
            for (label, to) in &self.states[s].edges {
                if *label == Label::Epsilon && set.insert(*to) {
                    stack.push(*to);
                }
            }
        }
    }

    fn step(&self, from: &StateSet, item: &Terminal, to: &mut StateSet) {
        to.clear();
        for &s in &from.members {
            for (label, t) in &self.states[s].edges {
                if label.admits(item) {
                    to.insert(*t);
                }
            }
        }
    }

    /// Longest `end > start` such that `seq[start..end]` is accepted.
    fn longest_from(&self, seq: &[Terminal], start: usize) -> Option<usize> {
        let n = self.states.len();
        let mut cur = StateSet::new(n);
        let mut next = StateSet::new(n);
        let mut stack = Vec::new();
        cur.insert(self.start);
        self.close(&mut cur, &mut stack);
        let mut best = None;
        for (i, item) in seq.iter().enumerate().skip(start) {
            if item.is_null() {
                break;
            }
            self.step(&cur, item, &mut next);
            if next.members.is_empty() {
                break;
            }
            self.close(&mut next, &mut stack);
            std::mem::swap(&mut cur, &mut next);
            if cur.present[self.accept] {
                best = Some(i + 1);
            }
        }
        best
    }

    /// Whether the whole sequence is in the (non-empty) language.
    pub fn full_match(&self, seq: &[Terminal]) -> Result<bool, GrammarError> {
        self.check_alphabet(seq)?;
        Ok(!seq.is_empty() && self.longest_from(seq, 0) == Some(seq.len()))
    }

    /// Non-overlapping occurrences under `policy`. Spans never cross a null
    /// item and are never empty.
    pub fn find_matches(
        &self,
        seq: &[Terminal],
        policy: MatchPolicy,
    ) -> Result<Vec<MatchSpan>, GrammarError> {
        self.check_alphabet(seq)?;
        let MatchPolicy::LeftmostLongest = policy;
        let mut spans = Vec::new();
        let mut i = 0;
        while i < seq.len() {
            match self.longest_from(seq, i) {
                Some(end) => {
                    spans.push(MatchSpan {
                        nonterminal: self.name.clone(),
                        start: i,
                        end,
                    });
                    i = end;
                }
                None => i += 1,
            }
        }
        Ok(spans)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::parse_pattern;

    fn bm() -> Taxonomy {
        Taxonomy::terminals(
            "bm",
            [
                "encode", "select", "navigate", "arrange", "change", "filter", "aggregate",
                "annotate", "import", "derive", "record",
            ],
        )
        .unwrap()
    }

    fn automaton(text: &str) -> SymbolAutomaton {
        let tax = bm();
        let p = parse_pattern(text, &tax).unwrap();
        SymbolAutomaton::build("rule", &p, &tax)
    }

    fn seq(items: &[&str]) -> Vec<Terminal> {
        items.iter().map(|s| Terminal::from(*s)).collect()
    }

    fn spans(a: &SymbolAutomaton, items: &[&str]) -> Vec<(usize, usize)> {
        a.find_matches(&seq(items), MatchPolicy::LeftmostLongest)
            .unwrap()
            .into_iter()
            .map(|s| (s.start, s.end))
            .collect()
    }

    #[test]
    fn plus_closure() {
        let a = automaton("(navigate)+");
        assert!(a.full_match(&seq(&["navigate"])).unwrap());
        assert!(a.full_match(&seq(&["navigate", "navigate"])).unwrap());
        assert!(!a.full_match(&seq(&["filter"])).unwrap());
        assert!(!a.full_match(&[]).unwrap());
        assert!(!a.normalized_nullable());
    }

    #[test]
    fn bounded_repeat() {
        let a = automaton("(filter){2,2}");
        assert!(!a.full_match(&seq(&["filter"])).unwrap());
        assert!(a.full_match(&seq(&["filter", "filter"])).unwrap());
        assert!(!a.full_match(&seq(&["filter", "filter", "filter"])).unwrap());
    }

    #[test]
    fn star_is_matched_as_plus() {
        let a = automaton("(aggregate | arrange | encode)*");
        assert!(a.normalized_nullable());
        assert!(!a.full_match(&[]).unwrap());
        assert!(a.full_match(&seq(&["encode", "aggregate"])).unwrap());
        assert_eq!(
            spans(&a, &["aggregate", "arrange", "navigate", "encode"]),
            vec![(0, 2), (3, 4)]
        );
    }

    #[test]
    fn maximal_runs_and_no_matches() {
        let zoom = automaton("(navigate)+");
        assert_eq!(
            spans(&zoom, &["navigate", "navigate", "filter", "navigate"]),
            vec![(0, 2), (3, 4)]
        );
        let filter = automaton("(filter)+");
        assert!(spans(&filter, &["select", "select"]).is_empty());
    }

    #[test]
    fn nulls_are_barriers() {
        let zoom = automaton("(navigate)+");
        assert_eq!(
            spans(&zoom, &["navigate", "null", "navigate"]),
            vec![(0, 1), (2, 3)]
        );
        assert!(!zoom.full_match(&seq(&["navigate", "null"])).unwrap());
    }

    #[test]
    fn alphabet_mismatch() {
        let zoom = automaton("(navigate)+");
        let err = zoom.full_match(&seq(&["navigate", "teleport"])).unwrap_err();
        assert_eq!(
            err,
            GrammarError::AlphabetMismatch {
                symbol: "teleport".into(),
                position: 1
            }
        );
    }

    #[test]
    fn qualified_labels() {
        let tax = Taxonomy::new(
            "gz",
            crate::grammar::Level::Terminal,
            vec![
                crate::grammar::SymbolDef::new("inspect").with_qualifiers(["same", "different"]),
            ],
        )
        .unwrap();
        let scan = SymbolAutomaton::build(
            "scan",
            &parse_pattern("(inspect:same)+", &tax).unwrap(),
            &tax,
        );
        let any = SymbolAutomaton::build("any", &parse_pattern("inspect", &tax).unwrap(), &tax);
        let items = seq(&["inspect:different", "inspect:same", "inspect:same"]);
        assert_eq!(
            scan.find_matches(&items, MatchPolicy::LeftmostLongest)
                .unwrap()
                .len(),
            1
        );
        assert!(any.full_match(&items[..1]).unwrap());
    }
}
