//! Python bindings: `import taxolex`.

use std::path::Path;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use taxolex_core::catalog::{list_builtin, Catalog};
use taxolex_core::grammar::parse_syntax;
use taxolex_core::ingest::{ingest, EventLog, FormatConfig};
use taxolex_core::mapping::{apply_mapping, load_mapping, MappingSpec};
use taxolex_core::matcher::{match_session, CompiledRuleSet};
use taxolex_core::metrics::{self, CiMethod, CoverageMode};
use taxolex_core::miner::{common_subsequences, MineConfig};
use taxolex_core::pipeline::{run_pipeline, PipelineConfig};
use taxolex_core::sequence::{Encoding, SequenceSet, TerminalSequence};
use taxolex_core::transform;

fn err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn encoding(approach: &str) -> PyResult<Encoding> {
    approach.parse().map_err(err)
}

fn labels_to_seq(labels: &[String]) -> TerminalSequence {
    let refs: Vec<&str> = labels.iter().map(String::as_str).collect();
    TerminalSequence::from_labels("s", &refs)
}

fn load(log: &str, mapping: &str, time_col: Option<String>) -> PyResult<(EventLog, MappingSpec)> {
    let cfg = FormatConfig { time_col, ..FormatConfig::default() };
    let log = ingest(log, &cfg).map_err(err)?;
    let text = std::fs::read_to_string(mapping).map_err(err)?;
    let (probe, _) = MappingSpec::from_json(&text).map_err(err)?;
    let catalog = Catalog::builtin();
    let taxonomy = catalog.taxonomy(&probe.target_taxonomy).map_err(err)?;
    let (spec, _) = load_mapping(mapping, taxonomy).map_err(err)?;
    Ok((log, spec))
}

/// Parses pattern text and returns its canonical printed form.
#[pyfunction]
fn parse_pattern(text: &str) -> PyResult<String> {
    parse_syntax(text).map(|p| p.to_string()).map_err(err)
}

/// Names of the built-in taxonomies.
#[pyfunction]
fn taxonomies() -> Vec<String> {
    list_builtin()
}

/// Encodes `labels` (`name` or `name:qualifier`) and returns item labels.
#[pyfunction]
#[pyo3(signature = (labels, approach = "collapse"))]
fn encode(labels: Vec<String>, approach: &str) -> PyResult<Vec<String>> {
    Ok(transform::apply(&labels_to_seq(&labels), encoding(approach)?).labels())
}

/// Mean, sample sd and 95% half-width of per-session counts.
#[pyfunction]
#[pyo3(signature = (counts, method = "normal"))]
fn summarize(counts: Vec<f64>, method: &str) -> PyResult<(f64, Option<f64>, Option<f64>)> {
    if counts.is_empty() {
        return Err(PyValueError::new_err("counts must not be empty"));
    }
    let method: CiMethod = method.parse().map_err(err)?;
    Ok(metrics::summarize(&counts, method))
}

/// Coverage of a log under a mapping file, as a two-decimal percentage.
#[pyfunction]
#[pyo3(signature = (log, mapping, mode = "distinct-records", time_col = None))]
fn coverage(log: &str, mapping: &str, mode: &str, time_col: Option<String>) -> PyResult<String> {
    let (log, spec) = load(log, mapping, time_col)?;
    let mode: CoverageMode = mode.parse().map_err(err)?;
    Ok(metrics::coverage(&log, &spec, mode).map_err(err)?.display)
}

/// Maps a log through a mapping file; returns one label list per session.
#[pyfunction]
#[pyo3(signature = (log, mapping, time_col = None))]
fn map_log(log: &str, mapping: &str, time_col: Option<String>) -> PyResult<Vec<(String, Vec<String>)>> {
    let (log, spec) = load(log, mapping, time_col)?;
    let (set, _) = apply_mapping(&log, &spec);
    Ok(set
        .sequences
        .iter()
        .map(|s| (s.session_id.clone(), s.labels()))
        .collect())
}

/// Maximal common contiguous patterns across sessions of labels.
#[pyfunction]
#[pyo3(signature = (sessions, approach = "plus", min_support = 1.0, min_len = 2))]
fn mine(
    sessions: Vec<Vec<String>>,
    approach: &str,
    min_support: f64,
    min_len: usize,
) -> PyResult<Vec<(String, usize)>> {
    let set = SequenceSet {
        dataset: "python".into(),
        taxonomy: "python".into(),
        sequences: sessions
            .iter()
            .enumerate()
            .map(|(i, s)| TerminalSequence { session_id: format!("s{i}"), ..labels_to_seq(s) })
            .collect(),
    };
    let cfg = MineConfig {
        approach: encoding(approach)?,
        min_len,
        min_support,
        ..MineConfig::default()
    };
    Ok(common_subsequences(&set, &cfg)
        .map_err(err)?
        .into_iter()
        .map(|p| (p.rendered, p.support))
        .collect())
}

/// Runs a pipeline config file and returns the report as JSON text.
#[pyfunction]
fn pipeline(config: &str) -> PyResult<String> {
    let cfg = PipelineConfig::load(config).map_err(err)?;
    let base = Path::new(config).parent().unwrap_or(Path::new("."));
    let (report, _) = run_pipeline(&cfg, base, &Catalog::builtin()).map_err(err)?;
    serde_json::to_string(&report).map_err(err)
}

/// A compiled production rule set.
#[pyclass(module = "taxolex", frozen)]
struct RuleSet {
    compiled: CompiledRuleSet,
}

#[pymethods]
impl RuleSet {
    /// Loads a built-in rule set by full name or short alias.
    #[new]
    fn new(reference: &str) -> PyResult<Self> {
        let catalog = Catalog::builtin();
        let rs = catalog.resolve_ruleset(reference).map_err(err)?;
        let compiled = CompiledRuleSet::from_catalog(&catalog, &rs).map_err(err)?;
        Ok(Self { compiled })
    }

    #[getter]
    fn name(&self) -> String {
        self.compiled.ruleset.name.clone()
    }

    #[getter]
    fn terminal_taxonomy(&self) -> String {
        self.compiled.ruleset.terminal_taxonomy.clone()
    }

    /// `(nonterminal, pattern)` pairs.
    fn rules(&self) -> Vec<(String, String)> {
        self.compiled
            .ruleset
            .rules
            .iter()
            .map(|r| (r.nonterminal.clone(), r.pattern.to_string()))
            .collect()
    }

    /// Non-terminals that cannot be expressed over this alphabet.
    fn inexpressible(&self) -> Vec<String> {
        self.compiled.null_nonterminals().to_vec()
    }

    /// Occurrence count per non-terminal in one session of labels.
    #[pyo3(signature = (labels, approach = "collapse"))]
    fn count(&self, labels: Vec<String>, approach: &str) -> PyResult<Vec<(String, usize)>> {
        let report = match_session(&labels_to_seq(&labels), &self.compiled, encoding(approach)?)
            .map_err(err)?;
        Ok(report.counts.into_iter().collect())
    }

    fn __repr__(&self) -> String {
        format!("RuleSet({:?})", self.compiled.ruleset.name)
    }
}

#[pymodule]
fn taxolex(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<RuleSet>()?;
    m.add_function(wrap_pyfunction!(parse_pattern, m)?)?;
    m.add_function(wrap_pyfunction!(taxonomies, m)?)?;
    m.add_function(wrap_pyfunction!(encode, m)?)?;
    m.add_function(wrap_pyfunction!(summarize, m)?)?;
    m.add_function(wrap_pyfunction!(coverage, m)?)?;
    m.add_function(wrap_pyfunction!(map_log, m)?)?;
    m.add_function(wrap_pyfunction!(mine, m)?)?;
    m.add_function(wrap_pyfunction!(pipeline, m)?)?;
    Ok(())
}
