//! Run-based reductions of terminal sequences.
//!
//! A run is a maximal stretch of adjacent items with equal terminal and
//! qualifier. Null items form runs like any other terminal.

use crate::sequence::{Encoding, SeqItem, TerminalSequence};

struct Run<'a> {
    first: &'a SeqItem,
    /// Total of the repeat counts in the run.
    count: u32,
    any_plus: bool,
}

fn runs(items: &[SeqItem]) -> Vec<Run<'_>> {
    let mut out: Vec<Run<'_>> = Vec::new();
    for item in items {
        match out.last_mut() {
            Some(run) if run.first.key() == item.key() => {
                run.count += item.repeat_count;
                run.any_plus |= item.plus;
            }
            _ => out.push(Run {
                first: item,
                count: item.repeat_count,
                any_plus: item.plus,
            }),
        }
    }
    out
}

fn reduce(
    seq: &TerminalSequence,
    encoding: Encoding,
    annotate: impl Fn(&Run<'_>, &mut SeqItem),
) -> TerminalSequence {
    let items = runs(&seq.items)
        .iter()
        .map(|run| {
            let mut item = run.first.clone();
            item.repeat_count = 1;
            item.plus = false;
            annotate(run, &mut item);
            item
        })
        .collect();
    TerminalSequence {
        session_id: seq.session_id.clone(),
        encoding,
        items,
    }
}

/// Replaces each run by a single unannotated item.
pub fn collapse(seq: &TerminalSequence) -> TerminalSequence {
    reduce(seq, Encoding::Collapse, |_, _| {})
}

/// Replaces each run by one item, flagged `plus` when the run has two or
/// more occurrences.
pub fn plus_encode(seq: &TerminalSequence) -> TerminalSequence {
    reduce(seq, Encoding::Plus, |run, item| {
        item.plus = run.any_plus || run.count >= 2;
    })
}

/// Replaces each run by one item carrying the run length.
pub fn numeric_encode(seq: &TerminalSequence) -> TerminalSequence {
    reduce(seq, Encoding::Numeric, |run, item| item.repeat_count = run.count)
}

/// Repeats each item `repeat_count` times. Inverse of [`numeric_encode`]
/// on raw sequences with consecutive ordinals.
pub fn numeric_expand(seq: &TerminalSequence) -> TerminalSequence {
    let mut items: Vec<SeqItem> = Vec::with_capacity(seq.expanded_len());
    for item in &seq.items {
        for k in 0..item.repeat_count as usize {
            let ordinal = match items.last() {
                Some(prev) => (item.source_ordinal + k).max(prev.source_ordinal + 1),
                None => item.source_ordinal + k,
            };
            items.push(SeqItem {
                source_ordinal: ordinal,
                repeat_count: 1,
                plus: false,
                ..item.clone()
            });
        }
    }
    TerminalSequence {
        session_id: seq.session_id.clone(),
        encoding: Encoding::Raw,
        items,
    }
}

/// Applies the reduction named by `encoding`; `Raw` returns a copy.
pub fn apply(seq: &TerminalSequence, encoding: Encoding) -> TerminalSequence {
    match encoding {
        Encoding::Raw => seq.clone(),
        Encoding::Collapse => collapse(seq),
        Encoding::Plus => plus_encode(seq),
        Encoding::Numeric => numeric_encode(seq),
    }
}
