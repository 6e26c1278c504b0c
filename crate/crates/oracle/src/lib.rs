//! Naive reference implementations used only by tests.
//!
//! Nothing here calls into the automaton, transform, miner or statistics code
//! of `taxolex-core`; only plain data types (patterns, terminals) are shared.

use std::collections::{BTreeMap, BTreeSet};

use taxolex_core::grammar::{Pattern, Terminal};

fn symbol_admits(pattern_sym: &Terminal, item: &Terminal) -> bool {
    if item.is_null() || pattern_sym.name != item.name {
        return false;
    }
    match &pattern_sym.qualifier {
        None => true,
        Some(q) => item.qualifier.as_ref() == Some(q),
    }
}

/// Every `j` such that `seq[i..j]` is in the language of `p`.
pub fn ends(p: &Pattern, seq: &[Terminal], i: usize) -> BTreeSet<usize> {
    match p {
        Pattern::Symbol(t) => {
            let mut out = BTreeSet::new();
            if i < seq.len() && symbol_admits(t, &seq[i]) {
                out.insert(i + 1);
            }
            out
        }
        Pattern::Concat(children) => {
            let mut cur: BTreeSet<usize> = [i].into();
            for c in children {
                cur = cur.iter().flat_map(|&k| ends(c, seq, k)).collect();
            }
            cur
        }
        Pattern::Alt(children) => children.iter().flat_map(|c| ends(c, seq, i)).collect(),
        Pattern::Star(inner) => closure(inner, seq, [i].into()),
        Pattern::Plus(inner) => {
            let first = ends(inner, seq, i);
            closure(inner, seq, first)
        }
        Pattern::Optional(inner) => {
            let mut out = ends(inner, seq, i);
            out.insert(i);
            out
        }
        Pattern::Repeat { inner, min, max } => {
            let mut cur: BTreeSet<usize> = [i].into();
            for _ in 0..*min {
                cur = cur.iter().flat_map(|&k| ends(inner, seq, k)).collect();
            }
            let mut all = cur.clone();
            for _ in *min..*max {
                cur = cur.iter().flat_map(|&k| ends(inner, seq, k)).collect();
                all.extend(cur.iter().copied());
            }
            all
        }
    }
}

fn closure(inner: &Pattern, seq: &[Terminal], seed: BTreeSet<usize>) -> BTreeSet<usize> {
    let mut all = seed.clone();
    let mut frontier = seed;
    while !frontier.is_empty() {
        let next: BTreeSet<usize> = frontier
            .iter()
            .flat_map(|&k| ends(inner, seq, k))
            .filter(|k| !all.contains(k))
            .collect();
        all.extend(next.iter().copied());
        frontier = next;
    }
    all
}

/// Whole-sequence membership, excluding the empty sequence.
pub fn oracle_full_match(p: &Pattern, seq: &[Terminal]) -> bool {
    !seq.is_empty() && ends(p, seq, 0).contains(&seq.len())
}

/// Enumerates every non-empty accepted span, then greedily keeps the
/// leftmost-longest non-overlapping ones.
pub fn oracle_match(p: &Pattern, seq: &[Terminal]) -> Vec<(usize, usize)> {
    let mut all_spans = Vec::new();
    for start in 0..seq.len() {
        for end in start + 1..=seq.len() {
            if oracle_full_match(p, &seq[start..end]) {
                all_spans.push((start, end));
            }
        }
    }
    let mut picked = Vec::new();
    let mut i = 0;
    while i < seq.len() {
        let longest = all_spans
            .iter()
            .filter(|(s, _)| *s == i)
            .map(|(_, e)| *e)
            .max();
        match longest {
            Some(e) => {
                picked.push((i, e));
                i = e;
            }
            None => i += 1,
        }
    }
    picked
}

/// Mean, sample standard deviation and `1.96·sd/√n`, by direct formulas.
pub fn oracle_stats(counts: &[f64]) -> (f64, Option<f64>, Option<f64>) {
    let n = counts.len() as f64;
    let mean = counts.iter().sum::<f64>() / n;
    if counts.len() < 2 {
        return (mean, None, None);
    }
    let var = counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let sd = var.sqrt();
    (mean, Some(sd), Some(1.96 * sd / n.sqrt()))
}

/// Maximal runs of equal values as `(value, run_length)`.
pub fn oracle_runs<T: PartialEq + Clone>(items: &[T]) -> Vec<(T, usize)> {
    let mut out: Vec<(T, usize)> = Vec::new();
    for it in items {
        match out.last_mut() {
            Some((v, n)) if v == it => *n += 1,
            _ => out.push((it.clone(), 1)),
        }
    }
    out
}

fn contains_window<T: PartialEq>(hay: &[T], needle: &[T]) -> bool {
    needle.len() <= hay.len() && hay.windows(needle.len()).any(|w| w == needle)
}

/// Number of sessions containing `pattern` contiguously.
pub fn oracle_support<T: PartialEq>(sessions: &[Vec<T>], pattern: &[T]) -> usize {
    sessions
        .iter()
        .filter(|s| contains_window(s, pattern))
        .count()
}

/// Maximal common contiguous patterns by exhaustive substring enumeration.
///
/// `is_barrier` marks items no pattern may contain. A pattern is kept when
/// it has length `>= min_len`, occurs in at least `required` sessions, and
/// neither one-item extension (left or right) does.
pub fn oracle_mine<T, F>(
    sessions: &[Vec<T>],
    required: usize,
    min_len: usize,
    is_barrier: F,
) -> BTreeMap<Vec<T>, usize>
where
    T: Ord + Clone,
    F: Fn(&T) -> bool,
{
    let mut candidates: BTreeSet<Vec<T>> = BTreeSet::new();
    for s in sessions {
        for i in 0..s.len() {
            for j in i + 1..=s.len() {
                let sub = &s[i..j];
                if sub.iter().any(&is_barrier) {
                    break;
                }
                candidates.insert(sub.to_vec());
            }
        }
    }
    let frequent: BTreeMap<Vec<T>, usize> = candidates
        .into_iter()
        .map(|c| {
            let sup = oracle_support(sessions, &c);
            (c, sup)
        })
        .filter(|(_, sup)| *sup >= required)
        .collect();
    let alphabet: BTreeSet<T> = sessions.iter().flatten().cloned().collect();
    frequent
        .iter()
        .filter(|(p, _)| p.len() >= min_len)
        .filter(|(p, _)| {
            alphabet.iter().all(|x| {
                let mut right = (*p).clone();
                right.push(x.clone());
                let mut left = vec![x.clone()];
                left.extend((*p).iter().cloned());
                !frequent.contains_key(&right) && !frequent.contains_key(&left)
            })
        })
        .map(|(p, s)| (p.clone(), *s))
        .collect()
}


pub mod expect;
