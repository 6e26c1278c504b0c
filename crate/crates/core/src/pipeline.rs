//! End-to-end run: ingest, map, match, measure and mine.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::catalog::Catalog;
use crate::ingest::{ingest, segment_sessions, EventLog, FormatConfig};
use crate::mapping::{apply_mapping, MappingReport, MappingSpec};
use crate::matcher::{match_dataset, prepare, CompiledRuleSet, SessionMatchReport};
use crate::metrics::{
    coverage, diversity, session_stats, CiMethod, CoverageMode, CoverageReport, DiversityReport,
    SessionStats,
};
use crate::miner::{common_subsequences, MineConfig, MinedPatternSet};
use crate::sequence::{Encoding, SequenceSet};

fn collapse() -> Encoding {
    Encoding::Collapse
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    /// Log file, relative to the config file's directory.
    pub log: String,
    #[serde(default)]
    pub format: FormatConfig,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub segment_by: Vec<String>,
    /// Mapping files, one per terminal taxonomy.
    pub mappings: Vec<String>,
    /// Rule-set files or catalog references.
    #[serde(default)]
    pub rulesets: Vec<String>,
    /// Transform applied before counting.
    #[serde(default = "collapse")]
    pub approach: Encoding,
    #[serde(default)]
    pub coverage_mode: CoverageMode,
    #[serde(default)]
    pub ci: CiMethod,
    #[serde(default)]
    pub mine: MineConfig,
}

impl PipelineConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, PipelineError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| PipelineError::new("config", format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| PipelineError::new("config", e.to_string()))
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
#[error("{stage}: {message}")]
pub struct PipelineError {
    pub stage: &'static str,
    pub message: String,
}

impl PipelineError {
    pub fn new(stage: &'static str, message: impl Into<String>) -> Self {
        Self {
            stage,
            message: message.into(),
        }
    }

    fn at<E: std::fmt::Display>(stage: &'static str) -> impl FnOnce(E) -> Self {
        move |e| Self::new(stage, e.to_string())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MappingOutcome {
    pub mapping: String,
    pub taxonomy: String,
    pub report: MappingReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RuleSetOutcome {
    pub ruleset: String,
    pub approach: Encoding,
    pub stats: Vec<SessionStats>,
    pub sessions: Vec<SessionMatchReport>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub dataset: String,
    pub sessions: usize,
    pub events: usize,
    pub distinct_records: usize,
    pub mappings: Vec<MappingOutcome>,
    pub coverage: Vec<CoverageReport>,
    pub diversity: Vec<DiversityReport>,
    pub matches: Vec<RuleSetOutcome>,
    pub mined: Vec<MinedPatternSet>,
    pub warnings: Vec<String>,
}

/// Every input file a run reads, for digesting.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PipelineInputs {
    pub files: Vec<PathBuf>,
}

fn resolve(base: &Path, reference: &str) -> PathBuf {
    let p = Path::new(reference);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

/// Runs every stage; `base` anchors relative paths in `cfg`.
pub fn run_pipeline(
    cfg: &PipelineConfig,
    base: &Path,
    catalog: &Catalog,
) -> Result<(PipelineReport, PipelineInputs), PipelineError> {
    let mut inputs = PipelineInputs::default();
    let mut warnings = Vec::new();

    let log_path = resolve(base, &cfg.log);
    let mut log: EventLog = ingest(&log_path, &cfg.format).map_err(PipelineError::at("ingest"))?;
    inputs.files.push(log_path);
    for r in &log.rejected {
        warnings.push(format!("ingest: skipped line {}: {}", r.line, r.message));
    }
    if !cfg.segment_by.is_empty() {
        let keys: Vec<&str> = cfg.segment_by.iter().map(String::as_str).collect();
        log = segment_sessions(&log, &keys).map_err(PipelineError::at("segment"))?;
    }

    let mut mapped: Vec<(MappingSpec, SequenceSet)> = Vec::new();
    let mut mappings = Vec::new();
    for m in &cfg.mappings {
        let path = resolve(base, m);
        let text = std::fs::read_to_string(&path)
            .map_err(|e| PipelineError::new("map", format!("{}: {e}", path.display())))?;
        let (spec, w) = MappingSpec::from_json(&text).map_err(PipelineError::at("map"))?;
        let taxonomy = catalog
            .taxonomy(&spec.target_taxonomy)
            .map_err(PipelineError::at("map"))?;
        spec.validate(taxonomy).map_err(PipelineError::at("map"))?;
        if spec.source_dataset != log.dataset {
            warnings.push(format!(
                "map: `{}` is written for dataset `{}`, applied to `{}`",
                spec.name, spec.source_dataset, log.dataset
            ));
        }
        warnings.extend(w.into_iter().map(|w| format!("map: {w}")));
        inputs.files.push(path);
        let (seqs, report) = apply_mapping(&log, &spec);
        mappings.push(MappingOutcome {
            mapping: spec.name.clone(),
            taxonomy: spec.target_taxonomy.clone(),
            report,
        });
        mapped.push((spec, seqs));
    }

    let coverage = mapped
        .iter()
        .map(|(spec, _)| coverage(&log, spec, cfg.coverage_mode))
        .collect::<Result<Vec<_>, _>>()
        .map_err(PipelineError::at("coverage"))?;
    let diversity = mapped
        .iter()
        .map(|(spec, seqs)| {
            let taxonomy = catalog.taxonomy(&spec.target_taxonomy).expect("validated above");
            diversity(seqs, taxonomy)
        })
        .collect::<Result<Vec<_>, _>>()
        .map_err(PipelineError::at("diversity"))?;

    let mut matches = Vec::new();
    for reference in &cfg.rulesets {
        let candidate = resolve(base, reference);
        let rs = if candidate.is_file() {
            inputs.files.push(candidate.clone());
            catalog.resolve_ruleset(&candidate.display().to_string())
        } else {
            catalog.resolve_ruleset(reference)
        }
        .map_err(PipelineError::at("validate"))?;
        let compiled = CompiledRuleSet::from_catalog(catalog, &rs).map_err(PipelineError::at("validate"))?;
        let Some((_, seqs)) = mapped
            .iter()
            .find(|(spec, _)| spec.target_taxonomy == rs.terminal_taxonomy)
        else {
            let have: Vec<&str> = mapped.iter().map(|(s, _)| s.target_taxonomy.as_str()).collect();
            return Err(PipelineError::new(
                "validate",
                format!(
                    "rule set `{}` needs terminal taxonomy `{}` but the mappings target [{}]",
                    rs.name,
                    rs.terminal_taxonomy,
                    have.join(", ")
                ),
            ));
        };
        let (_, w) = prepare(seqs, &compiled).map_err(PipelineError::at("match"))?;
        warnings.extend(w.into_iter().map(|w| format!("match: {w}")));
        let sessions = match_dataset(seqs, &compiled, cfg.approach).map_err(PipelineError::at("match"))?;
        matches.push(RuleSetOutcome {
            ruleset: rs.name.clone(),
            approach: cfg.approach,
            stats: session_stats(&sessions, cfg.ci),
            sessions,
        });
    }

    let mut mined = Vec::new();
    for (spec, seqs) in &mapped {
        match common_subsequences(seqs, &cfg.mine) {
            Ok(patterns) => mined.push(MinedPatternSet {
                dataset: seqs.dataset.clone(),
                taxonomy: spec.target_taxonomy.clone(),
                approach: cfg.mine.approach,
                patterns,
            }),
            Err(crate::miner::MineError::TooFewSessions(n)) => {
                warnings.push(format!("mine: skipped `{}` ({n} session)", spec.name));
            }
            Err(e) => return Err(PipelineError::new("mine", e.to_string())),
        }
    }

    let report = PipelineReport {
        dataset: log.dataset.clone(),
        sessions: log.sessions.len(),
        events: log.event_count(),
        distinct_records: log.distinct_records.len(),
        mappings,
        coverage,
        diversity,
        matches,
        mined,
        warnings,
    };
    Ok((report, inputs))
}
