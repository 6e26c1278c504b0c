//! Coverage, diversity and per-session count statistics.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::grammar::Taxonomy;
use crate::ingest::EventLog;
use crate::mapping::{Lookup, MappingSpec};
use crate::matcher::SessionMatchReport;
use crate::sequence::SequenceSet;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("log `{0}` has no events")]
    EmptyLog(String),
    #[error("sequence set `{0}` has no items")]
    NoItems(String),
    #[error("sequences use taxonomy `{sequences}` but `{taxonomy}` was supplied")]
    TaxonomyMismatch { sequences: String, taxonomy: String },
    #[error("`{symbol}` is not a terminal of `{taxonomy}`")]
    UnknownTerminal { symbol: String, taxonomy: String },
}

/// Percentage with two decimals, rounded half-up from the exact ratio.
pub fn percent_hundredths(num: u64, den: u64) -> u64 {
    assert!(den > 0, "percentage of an empty total");
    (20_000 * num + den) / (2 * den)
}

pub fn format_hundredths(h: u64) -> String {
    format!("{}.{:02}", h / 100, h % 100)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoverageMode {
    #[default]
    DistinctRecords,
    EventWeighted,
}

impl std::str::FromStr for CoverageMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "distinct" | "distinct-records" => Ok(Self::DistinctRecords),
            "events" | "event-weighted" => Ok(Self::EventWeighted),
            other => Err(format!(
                "unknown coverage mode `{other}` (expected distinct-records or event-weighted)"
            )),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub dataset: String,
    pub taxonomy: String,
    pub mode: CoverageMode,
    pub covered: usize,
    pub total: usize,
    pub percentage: f64,
    /// `percentage` rendered half-up to two decimals.
    pub display: String,
}

impl CoverageReport {
    pub fn hundredths(&self) -> u64 {
        percent_hundredths(self.covered as u64, self.total as u64)
    }
}

/// Share of log records (distinct or per event) that map to a non-null terminal.
pub fn coverage(
    log: &EventLog,
    spec: &MappingSpec,
    mode: CoverageMode,
) -> Result<CoverageReport, MetricsError> {
    let mapped = |record: &str| matches!(spec.lookup(record), Lookup::Terminal(_));
    let (covered, total) = match mode {
        CoverageMode::DistinctRecords => (
            log.distinct_records.iter().filter(|r| mapped(r)).count(),
            log.distinct_records.len(),
        ),
        CoverageMode::EventWeighted => (
            log.events().filter(|e| mapped(&e.record)).count(),
            log.event_count(),
        ),
    };
    if total == 0 {
        return Err(MetricsError::EmptyLog(log.dataset.clone()));
    }
    Ok(CoverageReport {
        dataset: log.dataset.clone(),
        taxonomy: spec.target_taxonomy.clone(),
        mode,
        covered,
        total,
        percentage: 100.0 * covered as f64 / total as f64,
        display: format_hundredths(percent_hundredths(covered as u64, total as u64)),
    })
}

/// Datasets × taxonomies matrix of two-decimal percentages with averages.
///
/// Cells and averages are held in hundredths of a percent. Averages are
/// taken over the rounded cells, as a printed table would be.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverageTable {
    pub datasets: Vec<String>,
    pub taxonomies: Vec<String>,
    /// `cells[row][column]`; rows are datasets.
    pub cells: Vec<Vec<Option<u64>>>,
    pub row_averages: Vec<Option<u64>>,
    pub column_averages: Vec<Option<u64>>,
    pub grand_average: Option<u64>,
    pub warnings: Vec<String>,
}

fn mean_hundredths<'a>(values: impl Iterator<Item = &'a Option<u64>>) -> Option<u64> {
    let present: Vec<u64> = values.flatten().copied().collect();
    if present.is_empty() {
        return None;
    }
    let n = present.len() as u64;
    Some((2 * present.iter().sum::<u64>() + n) / (2 * n))
}

impl CoverageTable {
    pub fn from_cells(
        datasets: Vec<String>,
        taxonomies: Vec<String>,
        cells: Vec<Vec<Option<u64>>>,
    ) -> Self {
        let mut warnings = Vec::new();
        for (r, row) in cells.iter().enumerate() {
            for (c, cell) in row.iter().enumerate() {
                if cell.is_none() {
                    warnings.push(format!(
                        "no mapping for {} × {}; cell excluded from averages",
                        datasets[r], taxonomies[c]
                    ));
                }
            }
        }
        let row_averages = cells.iter().map(|row| mean_hundredths(row.iter())).collect();
        let column_averages = (0..taxonomies.len())
            .map(|c| mean_hundredths(cells.iter().map(|row| &row[c])))
            .collect();
        let grand_average = mean_hundredths(cells.iter().flatten());
        Self {
            datasets,
            taxonomies,
            cells,
            row_averages,
            column_averages,
            grand_average,
            warnings,
        }
    }

    /// CSV with an `avg` column and row.
    pub fn to_csv(&self) -> String {
        let fmt = |v: &Option<u64>| v.map(format_hundredths).unwrap_or_default();
        let mut out = String::from("dataset");
        for t in &self.taxonomies {
            out.push(',');
            out.push_str(t);
        }
        out.push_str(",avg\n");
        for (r, d) in self.datasets.iter().enumerate() {
            out.push_str(d);
            for cell in &self.cells[r] {
                out.push(',');
                out.push_str(&fmt(cell));
            }
            out.push(',');
            out.push_str(&fmt(&self.row_averages[r]));
            out.push('\n');
        }
        out.push_str("avg");
        for v in &self.column_averages {
            out.push(',');
            out.push_str(&fmt(v));
        }
        out.push(',');
        out.push_str(&fmt(&self.grand_average));
        out.push('\n');
        out
    }
}

impl fmt::Display for CoverageTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cell = |v: &Option<u64>| v.map(|h| format!("{}%", format_hundredths(h))).unwrap_or("-".into());
        write!(f, "{:<20}", "")?;
        for t in &self.taxonomies {
            write!(f, " {t:>20}")?;
        }
        writeln!(f, " {:>10}", "avg")?;
        for (r, d) in self.datasets.iter().enumerate() {
            write!(f, "{d:<20}")?;
            for v in &self.cells[r] {
                write!(f, " {:>20}", cell(v))?;
            }
            writeln!(f, " {:>10}", cell(&self.row_averages[r]))?;
        }
        write!(f, "{:<20}", "avg")?;
        for v in &self.column_averages {
            write!(f, " {:>20}", cell(v))?;
        }
        writeln!(f, " {:>10}", cell(&self.grand_average))
    }
}

/// Coverage of every log under every mapping whose `source_dataset` names it.
pub fn coverage_table(
    logs: &[EventLog],
    specs: &[MappingSpec],
    mode: CoverageMode,
) -> Result<CoverageTable, MetricsError> {
    let datasets: Vec<String> = logs.iter().map(|l| l.dataset.clone()).collect();
    let mut taxonomies: Vec<String> = Vec::new();
    for s in specs {
        if !taxonomies.contains(&s.target_taxonomy) {
            taxonomies.push(s.target_taxonomy.clone());
        }
    }
    let mut cells = vec![vec![None; taxonomies.len()]; logs.len()];
    for (r, log) in logs.iter().enumerate() {
        for spec in specs.iter().filter(|s| s.source_dataset == log.dataset) {
            let c = taxonomies.iter().position(|t| *t == spec.target_taxonomy).unwrap();
            cells[r][c] = Some(coverage(log, spec, mode)?.hundredths());
        }
    }
    Ok(CoverageTable::from_cells(datasets, taxonomies, cells))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiversityReport {
    pub dataset: String,
    pub taxonomy: String,
    pub total_items: usize,
    /// Share of every taxonomy terminal, including unused ones.
    pub distribution: BTreeMap<String, f64>,
    pub null_share: f64,
    pub unused: BTreeSet<String>,
    pub top_terminal: Option<String>,
    pub top_share: f64,
}

/// Event-weighted distribution of emitted terminals. Items carrying a
/// repeat count contribute that many events; qualifiers are ignored.
pub fn diversity(seqs: &SequenceSet, taxonomy: &Taxonomy) -> Result<DiversityReport, MetricsError> {
    if seqs.taxonomy != taxonomy.name {
        return Err(MetricsError::TaxonomyMismatch {
            sequences: seqs.taxonomy.clone(),
            taxonomy: taxonomy.name.clone(),
        });
    }
    let mut counts: BTreeMap<&str, usize> = taxonomy.names().map(|n| (n, 0)).collect();
    let mut nulls = 0usize;
    for item in seqs.sequences.iter().flat_map(|s| &s.items) {
        let weight = item.repeat_count as usize;
        if item.is_null() {
            nulls += weight;
            continue;
        }
        match counts.get_mut(item.terminal.as_str()) {
            Some(c) => *c += weight,
            None => {
                return Err(MetricsError::UnknownTerminal {
                    symbol: item.terminal.clone(),
                    taxonomy: taxonomy.name.clone(),
                })
            }
        }
    }
    let total = nulls + counts.values().sum::<usize>();
    if total == 0 {
        return Err(MetricsError::NoItems(seqs.dataset.clone()));
    }
    let share = |c: usize| c as f64 / total as f64;
    // Ties go to the terminal listed first in the taxonomy.
    let top = taxonomy
        .names()
        .map(|n| (n, counts[n]))
        .fold(None::<(&str, usize)>, |best, (n, c)| match best {
            Some((_, bc)) if bc >= c => best,
            _ if c > 0 => Some((n, c)),
            _ => best,
        });
    Ok(DiversityReport {
        dataset: seqs.dataset.clone(),
        taxonomy: taxonomy.name.clone(),
        total_items: total,
        distribution: counts.iter().map(|(n, c)| (n.to_string(), share(*c))).collect(),
        null_share: share(nulls),
        unused: counts
            .iter()
            .filter(|(_, c)| **c == 0)
            .map(|(n, _)| n.to_string())
            .collect(),
        top_terminal: top.map(|(n, _)| n.to_string()),
        top_share: top.map_or(0.0, |(_, c)| share(c)),
    })
}

/// One row per (dataset, taxonomy, terminal, share), with nulls last.
pub fn diversity_csv(reports: &[DiversityReport]) -> String {
    let mut out = String::from("dataset,taxonomy,terminal,share\n");
    for r in reports {
        for (t, s) in &r.distribution {
            out.push_str(&format!("{},{},{t},{s:.6}\n", r.dataset, r.taxonomy));
        }
        out.push_str(&format!("{},{},null,{:.6}\n", r.dataset, r.taxonomy, r.null_share));
    }
    out
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CiMethod {
    /// `1.96·sd/√n`.
    #[default]
    Normal,
    /// Student-t quantile with `n − 1` degrees of freedom.
    T,
}

impl std::str::FromStr for CiMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "normal" | "z" => Ok(Self::Normal),
            "t" | "student" => Ok(Self::T),
            other => Err(format!("unknown interval method `{other}` (expected normal or t)")),
        }
    }
}

impl CiMethod {
    fn multiplier(self, n: usize) -> f64 {
        match self {
            Self::Normal => 1.96,
            Self::T => StudentsT::new(0.0, 1.0, (n - 1) as f64)
                .expect("positive degrees of freedom")
                .inverse_cdf(0.975),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionStats {
    pub nonterminal: String,
    pub n_sessions: usize,
    /// False for non-terminals the terminal alphabet cannot express.
    pub expressible: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sd: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ci95_halfwidth: Option<f64>,
}

impl SessionStats {
    pub fn interval(&self) -> Option<(f64, f64)> {
        Some((self.mean? - self.ci95_halfwidth?, self.mean? + self.ci95_halfwidth?))
    }
}

/// Mean, sample sd and 95% half-width of `counts` (two-pass).
pub fn summarize(counts: &[f64], method: CiMethod) -> (f64, Option<f64>, Option<f64>) {
    let n = counts.len();
    let mean = counts.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, None, None);
    }
    let ss: f64 = counts.iter().map(|c| (c - mean) * (c - mean)).sum();
    let sd = (ss / (n - 1) as f64).sqrt();
    (mean, Some(sd), Some(method.multiplier(n) * sd / (n as f64).sqrt()))
}

/// Per non-terminal statistics over session counts. Non-terminals listed
/// as null in any report are reported as inexpressible.
pub fn session_stats(reports: &[SessionMatchReport], method: CiMethod) -> Vec<SessionStats> {
    let n = reports.len();
    let mut names: BTreeSet<&str> = BTreeSet::new();
    let mut nulls: BTreeSet<&str> = BTreeSet::new();
    for r in reports {
        names.extend(r.counts.keys().map(String::as_str));
        nulls.extend(r.null_nonterminals.iter().map(String::as_str));
    }
    let mut out: Vec<SessionStats> = names
        .iter()
        .filter(|nt| !nulls.contains(*nt))
        .map(|nt| {
            let counts: Vec<f64> = reports
                .iter()
                .map(|r| r.counts.get(*nt).copied().unwrap_or(0) as f64)
                .collect();
            let (mean, sd, hw) = if n == 0 {
                (None, None, None)
            } else {
                let (m, sd, hw) = summarize(&counts, method);
                (Some(m), sd, hw)
            };
            SessionStats {
                nonterminal: nt.to_string(),
                n_sessions: n,
                expressible: true,
                mean,
                sd,
                ci95_halfwidth: hw,
            }
        })
        .collect();
    out.extend(nulls.iter().map(|nt| SessionStats {
        nonterminal: nt.to_string(),
        n_sessions: n,
        expressible: false,
        mean: None,
        sd: None,
        ci95_halfwidth: None,
    }));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::Catalog;
    use crate::ingest::{ingest_str, FormatConfig};
    use crate::sequence::TerminalSequence;

    fn report(counts: &[(&str, usize)], nulls: &[&str]) -> SessionMatchReport {
        SessionMatchReport {
            session_id: "s".into(),
            counts: counts.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            spans: BTreeMap::new(),
            null_nonterminals: nulls.iter().map(|s| s.to_string()).collect(),
        }
    }

    #[test]
    fn rounding_half_up() {
        assert_eq!(format_hundredths(percent_hundredths(42, 90)), "46.67");
        assert_eq!(format_hundredths(percent_hundredths(6, 12)), "50.00");
        assert_eq!(format_hundredths(percent_hundredths(1, 8)), "12.50");
        assert_eq!(format_hundredths(percent_hundredths(1, 80000)), "0.00");
        assert_eq!(format_hundredths(percent_hundredths(1, 20000)), "0.01");
    }

    #[test]
    fn coverage_modes() {
        let text = "session_id,record\ns,a\ns,a\ns,a\ns,b\n";
        let log = ingest_str(text, "d", &FormatConfig::default()).unwrap();
        let spec = MappingSpec::from_json(
            r#"{"name":"m","source_dataset":"d","target_taxonomy":"amar2005",
                "rules":{"a":{"terminal":"filter","description":"x"}}}"#,
        )
        .unwrap()
        .0;
        let d = coverage(&log, &spec, CoverageMode::DistinctRecords).unwrap();
        assert_eq!((d.covered, d.total, d.display.as_str()), (1, 2, "50.00"));
        let e = coverage(&log, &spec, CoverageMode::EventWeighted).unwrap();
        assert_eq!((e.covered, e.total, e.display.as_str()), (3, 4, "75.00"));
    }

    #[test]
    fn table_averages() {
        let t = CoverageTable::from_cells(
            vec!["x".into(), "y".into()],
            vec!["a".into(), "b".into(), "c".into()],
            vec![vec![Some(4667), Some(5000), Some(10000)], vec![Some(6889), Some(10000), None]],
        );
        assert_eq!(t.row_averages, [Some(6556), Some(8445)]);
        assert_eq!(t.column_averages[2], Some(10000));
        assert_eq!(t.warnings.len(), 1);
        let single = CoverageTable::from_cells(vec!["x".into()], vec!["a".into()], vec![vec![Some(1234)]]);
        assert_eq!(single.grand_average, Some(1234));
        assert!(t.to_csv().starts_with("dataset,a,b,c,avg\nx,46.67,50.00,100.00,65.56\n"));
    }

    #[test]
    fn diversity_shares() {
        let amar = Catalog::builtin().taxonomy("amar2005").unwrap().clone();
        let set = SequenceSet {
            dataset: "d".into(),
            taxonomy: "amar2005".into(),
            sequences: vec![TerminalSequence::from_labels("s", &["filter", "filter", "sort", "null"])],
        };
        let r = diversity(&set, &amar).unwrap();
        assert_eq!(r.top_terminal.as_deref(), Some("filter"));
        assert!((r.top_share - 0.5).abs() < 1e-12);
        let sum: f64 = r.distribution.values().sum::<f64>() + r.null_share;
        assert!((sum - 1.0).abs() < 1e-9);
        assert!(r.unused.contains("find-anomalies"));
        assert!(diversity_csv(&[r]).lines().any(|l| l == "d,amar2005,null,0.250000"));
    }

    #[test]
    fn stats() {
        let reports: Vec<_> = [2, 3, 2].iter().map(|c| report(&[("zoom", *c)], &["scan"])).collect();
        let s = session_stats(&reports, CiMethod::Normal);
        assert_eq!(s[0].nonterminal, "zoom");
        assert!((s[0].mean.unwrap() - 2.3333).abs() < 1e-4);
        assert!((s[0].sd.unwrap() - 0.5774).abs() < 1e-4);
        assert!((s[0].ci95_halfwidth.unwrap() - 0.6533).abs() < 1e-4);
        assert!(!s[1].expressible && s[1].mean.is_none());
        let t = session_stats(&reports, CiMethod::T);
        assert!(t[0].ci95_halfwidth.unwrap() > s[0].ci95_halfwidth.unwrap());

        let zeros: Vec<_> = (0..4).map(|_| report(&[("zoom", 0)], &[])).collect();
        let z = session_stats(&zeros, CiMethod::Normal);
        assert_eq!((z[0].mean, z[0].ci95_halfwidth), (Some(0.0), Some(0.0)));
        let one = session_stats(&zeros[..1], CiMethod::Normal);
        assert!(one[0].ci95_halfwidth.is_none());
    }
}
