//! Maximal common contiguous patterns across sessions.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::sequence::{Encoding, SeqItem, SequenceSet};
use crate::transform;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum MineError {
    #[error("mining needs at least 2 sessions, got {0}")]
    TooFewSessions(usize),
    #[error("min_len must be at least 2, got {0}")]
    MinLen(usize),
    #[error("min_support must be in (0, 1], got {0}")]
    MinSupport(String),
    #[error("approach must be plus or numeric, got {0}")]
    Approach(Encoding),
    #[error("intersection needs at least 2 pattern sets, got {0}")]
    TooFewSets(usize),
    #[error("pattern sets disagree on {what}: `{a}` vs `{b}`")]
    Mismatch { what: &'static str, a: String, b: String },
}

/// Equality of repeat counts under the numeric approach.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CountTolerance {
    #[default]
    Exact,
    /// Counts in the same power-of-two bucket (1, 2, 3–4, 5–8, ...) are equal.
    Log2,
}

impl std::str::FromStr for CountTolerance {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exact" => Ok(Self::Exact),
            "log2" => Ok(Self::Log2),
            other => Err(format!("unknown count tolerance `{other}` (expected exact or log2)")),
        }
    }
}

impl CountTolerance {
    /// Inclusive count range of the bucket holding `count`.
    pub fn bucket(self, count: u32) -> (u32, u32) {
        match self {
            Self::Exact => (count, count),
            Self::Log2 if count <= 1 => (count, count),
            Self::Log2 => {
                let hi = count.next_power_of_two();
                (hi / 2 + 1, hi)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MineConfig {
    pub approach: Encoding,
    pub min_len: usize,
    pub min_support: f64,
    #[serde(default)]
    pub tolerance: CountTolerance,
}

impl Default for MineConfig {
    fn default() -> Self {
        Self {
            approach: Encoding::Plus,
            min_len: 2,
            min_support: 1.0,
            tolerance: CountTolerance::Exact,
        }
    }
}

/// One encoded terminal of a mined pattern.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PatternItem {
    pub terminal: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qualifier: Option<String>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub plus: bool,
    /// Inclusive repeat-count range under the numeric approach.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub repeat: Option<(u32, u32)>,
}

impl PatternItem {
    fn from_seq(item: &SeqItem, cfg: &MineConfig) -> Self {
        Self {
            terminal: item.terminal.clone(),
            qualifier: item.qualifier.clone(),
            plus: cfg.approach == Encoding::Plus && item.plus,
            repeat: (cfg.approach == Encoding::Numeric)
                .then(|| cfg.tolerance.bucket(item.repeat_count)),
        }
    }
}

impl fmt::Display for PatternItem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.terminal)?;
        if let Some(q) = &self.qualifier {
            write!(f, ":{q}")?;
        }
        if self.plus {
            f.write_str("+")?;
        }
        match self.repeat {
            Some((lo, hi)) if lo == hi => write!(f, "{lo}"),
            Some((lo, hi)) => write!(f, "[{lo}-{hi}]"),
            None => Ok(()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MinedPattern {
    pub items: Vec<PatternItem>,
    pub support: usize,
    pub length: usize,
    /// `(a, b, c)` form.
    pub rendered: String,
    /// Repeated blocks folded into `(...)+` groups; presentation only.
    pub folded: String,
}

impl MinedPattern {
    fn new(items: Vec<PatternItem>, support: usize) -> Self {
        let labels: Vec<String> = items.iter().map(ToString::to_string).collect();
        Self {
            support,
            length: items.len(),
            rendered: format!("({})", labels.join(", ")),
            folded: fold(&labels),
            items,
        }
    }
}

/// Folds adjacent repeats of a block into `(block)+`, preferring the
/// longest covered stretch and then the shortest block.
pub fn fold(labels: &[String]) -> String {
    let parts = fold_parts(labels);
    if parts.len() == 1 {
        let only = &parts[0];
        if only.starts_with('(') {
            return only.clone();
        }
    }
    format!("({})", parts.join(", "))
}

fn fold_parts(labels: &[String]) -> Vec<String> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < labels.len() {
        let rest = &labels[i..];
        let mut best: Option<(usize, usize)> = None;
        for p in 1..=rest.len() / 2 {
            let mut r = 1;
            while (r + 1) * p <= rest.len() && rest[r * p..(r + 1) * p] == rest[..p] {
                r += 1;
            }
            if r >= 2 && best.is_none_or(|(bp, br)| p * r > bp * br) {
                best = Some((p, r));
            }
        }
        match best {
            Some((p, r)) => {
                let inner = fold_parts(&rest[..p]);
                let body = if inner.len() == 1 && p == 1 {
                    inner[0].clone()
                } else {
                    format!("({})", inner.join(", "))
                };
                out.push(format!("{body}+"));
                i += p * r;
            }
            None => {
                out.push(labels[i].clone());
                i += 1;
            }
        }
    }
    out
}

/// Number of sessions required for `min_support` of `n`.
pub fn required_support(min_support: f64, n: usize) -> usize {
    ((min_support * n as f64) - 1e-9).ceil().max(1.0) as usize
}

/// Maximal contiguous patterns, never containing `null`, present in at
/// least `min_support` of the sessions after encoding by `cfg.approach`.
/// Sorted by descending length, then rendering.
pub fn common_subsequences(seqs: &SequenceSet, cfg: &MineConfig) -> Result<Vec<MinedPattern>, MineError> {
    let n = seqs.sequences.len();
    if n < 2 {
        return Err(MineError::TooFewSessions(n));
    }
    if cfg.min_len < 2 {
        return Err(MineError::MinLen(cfg.min_len));
    }
    if !(cfg.min_support > 0.0 && cfg.min_support <= 1.0) {
        return Err(MineError::MinSupport(cfg.min_support.to_string()));
    }
    if !matches!(cfg.approach, Encoding::Plus | Encoding::Numeric) {
        return Err(MineError::Approach(cfg.approach));
    }
    let required = required_support(cfg.min_support, n);

    // Intern encoded items; `None` marks a null barrier.
    let mut vocab: Vec<PatternItem> = Vec::new();
    let mut ids: HashMap<PatternItem, u32> = HashMap::new();
    let sessions: Vec<Vec<Option<u32>>> = seqs
        .sequences
        .iter()
        .map(|s| {
            transform::apply(s, cfg.approach)
                .items
                .iter()
                .map(|item| {
                    (!item.is_null()).then(|| {
                        let p = PatternItem::from_seq(item, cfg);
                        *ids.entry(p.clone()).or_insert_with(|| {
                            vocab.push(p);
                            (vocab.len() - 1) as u32
                        })
                    })
                })
                .collect()
        })
        .collect();

    let support = |occ: &[(usize, usize)]| {
        let mut last = usize::MAX;
        let mut count = 0;
        for (s, _) in occ {
            if *s != last {
                count += 1;
                last = *s;
            }
        }
        count
    };

    // Level-wise growth: every frequent pattern with its occurrence list,
    // occurrences ordered by (session, start).
    let mut level: BTreeMap<Vec<u32>, Vec<(usize, usize)>> = BTreeMap::new();
    for (s, items) in sessions.iter().enumerate() {
        for (p, id) in items.iter().enumerate() {
            if let Some(id) = id {
                level.entry(vec![*id]).or_default().push((s, p));
            }
        }
    }
    level.retain(|_, occ| support(occ) >= required);

    let mut frequent: HashSet<Vec<u32>> = HashSet::new();
    let mut right_closed: Vec<(Vec<u32>, usize)> = Vec::new();
    while !level.is_empty() {
        let mut next: BTreeMap<Vec<u32>, Vec<(usize, usize)>> = BTreeMap::new();
        for (pat, occ) in &level {
            let k = pat.len();
            let mut grown: BTreeMap<u32, Vec<(usize, usize)>> = BTreeMap::new();
            for &(s, p) in occ {
                if let Some(Some(id)) = sessions[s].get(p + k) {
                    grown.entry(*id).or_default().push((s, p));
                }
            }
            let mut extended = false;
            for (id, occ) in grown {
                if support(&occ) >= required {
                    let mut longer = pat.clone();
                    longer.push(id);
                    next.insert(longer, occ);
                    extended = true;
                }
            }
            if !extended {
                right_closed.push((pat.clone(), support(occ)));
            }
        }
        frequent.extend(level.into_keys());
        level = next;
    }

    let mut out: Vec<MinedPattern> = right_closed
        .into_iter()
        .filter(|(pat, _)| pat.len() >= cfg.min_len)
        .filter(|(pat, _)| {
            // Left-maximal: no frequent pattern one item longer ends with `pat`.
            !(0..vocab.len() as u32).any(|x| {
                let mut left = Vec::with_capacity(pat.len() + 1);
                left.push(x);
                left.extend_from_slice(pat);
                frequent.contains(&left)
            })
        })
        .map(|(pat, sup)| {
            MinedPattern::new(pat.iter().map(|id| vocab[*id as usize].clone()).collect(), sup)
        })
        .collect();
    out.sort_by(|a, b| b.length.cmp(&a.length).then_with(|| a.rendered.cmp(&b.rendered)));
    Ok(out)
}

/// Mined patterns of one dataset, tagged for cross-dataset comparison.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinedPatternSet {
    pub dataset: String,
    pub taxonomy: String,
    pub approach: Encoding,
    pub patterns: Vec<MinedPattern>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SharedPattern {
    pub items: Vec<PatternItem>,
    pub rendered: String,
    pub support: BTreeMap<String, usize>,
}

/// Patterns whose items appear exactly in every set.
pub fn cross_dataset_intersection(sets: &[MinedPatternSet]) -> Result<Vec<SharedPattern>, MineError> {
    if sets.len() < 2 {
        return Err(MineError::TooFewSets(sets.len()));
    }
    let first = &sets[0];
    for s in &sets[1..] {
        if s.taxonomy != first.taxonomy {
            return Err(MineError::Mismatch {
                what: "taxonomy",
                a: first.taxonomy.clone(),
                b: s.taxonomy.clone(),
            });
        }
        if s.approach != first.approach {
            return Err(MineError::Mismatch {
                what: "approach",
                a: first.approach.to_string(),
                b: s.approach.to_string(),
            });
        }
    }
    let mut common: BTreeSet<&Vec<PatternItem>> = first.patterns.iter().map(|p| &p.items).collect();
    for s in &sets[1..] {
        let these: BTreeSet<&Vec<PatternItem>> = s.patterns.iter().map(|p| &p.items).collect();
        common = common.intersection(&these).copied().collect();
    }
    Ok(common
        .into_iter()
        .map(|items| {
            let support = sets
                .iter()
                .map(|s| {
                    let sup = s.patterns.iter().find(|p| &p.items == items).map_or(0, |p| p.support);
                    (s.dataset.clone(), sup)
                })
                .collect();
            SharedPattern {
                rendered: MinedPattern::new(items.clone(), 0).rendered,
                items: items.clone(),
                support,
            }
        })
        .collect())
}
