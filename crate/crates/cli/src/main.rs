mod manifest;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use taxolex_core::catalog::{Catalog, EntryKind};
use taxolex_core::grammar::Level;
use taxolex_core::ingest::{ingest, segment_sessions, EventLog, FormatConfig, InputFormat};
use taxolex_core::mapping::{apply_mapping, qualify_inspect, MappingSpec};
use taxolex_core::matcher::{match_dataset, prepare, CompiledRuleSet, SessionMatchReport};
use taxolex_core::metrics::{
    coverage, coverage_table, diversity, diversity_csv, format_hundredths, session_stats, CiMethod,
    CoverageMode, DiversityReport, SessionStats,
};
use taxolex_core::miner::{
    common_subsequences, cross_dataset_intersection, CountTolerance, MineConfig, MinedPatternSet,
};
use taxolex_core::pipeline::{run_pipeline, PipelineConfig, PipelineReport};
use taxolex_core::sequence::{Encoding, SequenceSet};
use taxolex_core::transform;

use manifest::RunManifest;

/// Writes to stdout, exiting quietly when the reader has gone away.
fn write_stdout(text: &str) {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    if let Err(e) = out.write_all(text.as_bytes()).and_then(|()| out.flush()) {
        if e.kind() == std::io::ErrorKind::BrokenPipe {
            std::process::exit(0);
        }
        eprintln!("error: writing output: {e}");
        std::process::exit(2);
    }
}

macro_rules! outln {
    ($($arg:tt)*) => {
        write_stdout(&format!("{}\n", format_args!($($arg)*)))
    };
}

#[derive(Parser)]
#[command(name = "taxolex", version, about = "Grammar-based analysis of interaction logs")]
struct Cli {
    /// Input log format; inferred from the file extension when omitted.
    #[arg(long, global = true, value_name = "csv|json|ndjson")]
    format: Option<InputFormat>,
    /// Output file (or directory for `pipeline`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Exit with status 1 when validation diagnostics or warnings occur.
    #[arg(long, global = true)]
    strict: bool,
    /// Suppress human-readable output and warnings.
    #[arg(long, short, global = true)]
    quiet: bool,
    /// Print machine-readable JSON instead of tables.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct LogArgs {
    /// JSON file with column names (session_col, record_col, time_col, ...).
    #[arg(long)]
    format_config: Option<PathBuf>,
    /// Column holding the session id [default: session_id].
    #[arg(long)]
    session_col: Option<String>,
    /// Column holding the log record name [default: record].
    #[arg(long)]
    record_col: Option<String>,
    /// Column holding event timestamps (ms, seconds or ISO 8601).
    #[arg(long)]
    time_col: Option<String>,
    /// Column holding the attribute an event acts on.
    #[arg(long)]
    attr_col: Option<String>,
    /// Column holding the participant id.
    #[arg(long)]
    participant_col: Option<String>,
    /// Column holding the task id.
    #[arg(long)]
    task_col: Option<String>,
    /// Dataset name; defaults to the log file stem.
    #[arg(long)]
    dataset: Option<String>,
    /// Skip unparseable rows instead of failing.
    #[arg(long)]
    lenient: bool,
    /// Re-partition sessions by these keys (e.g. participant,task).
    #[arg(long, value_delimiter = ',')]
    segment_by: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Translate a log to terminal sequences with a code-book.
    Map {
        /// Interaction log file.
        #[arg(long)]
        log: PathBuf,
        /// Mapping (code-book) JSON file.
        #[arg(long)]
        mapping: PathBuf,
        /// Qualify this terminal as same/different by attribute.
        #[arg(long)]
        qualify: Option<String>,
        #[command(flatten)]
        log_args: LogArgs,
    },
    /// Apply a reduction to terminal sequences.
    Transform {
        /// Terminal-sequence JSON file.
        #[arg(long = "in")]
        input: PathBuf,
        /// Reduction to apply, or `expand` to undo numeric encoding.
        #[arg(long, value_name = "collapse|plus|numeric|expand")]
        approach: String,
    },
    /// Count rule-set non-terminals in every session.
    Match {
        /// Terminal-sequence JSON file written by `taxolex map`.
        #[arg(long)]
        seqs: PathBuf,
        /// Rule-set file or catalog reference such as `bm-shneiderman`.
        #[arg(long)]
        ruleset: String,
        /// Reduction applied before matching: raw, collapse, plus or numeric.
        #[arg(long, default_value = "collapse")]
        approach: Encoding,
    },
    /// Share of log records mapped to non-null terminals.
    Coverage {
        /// Interaction log file.
        #[arg(long, required = true)]
        log: Vec<PathBuf>,
        /// Mapping (code-book) JSON file.
        #[arg(long, required = true)]
        mapping: Vec<PathBuf>,
        /// Count distinct records or every event.
        #[arg(long, default_value = "distinct-records", value_name = "distinct-records|event-weighted")]
        mode: CoverageMode,
        /// Emit CSV instead of JSON.
        #[arg(long)]
        csv: bool,
        #[command(flatten)]
        log_args: LogArgs,
    },
    /// Distribution of emitted terminals.
    Diversity {
        /// Terminal-sequence JSON file written by `taxolex map`.
        #[arg(long, required = true)]
        seqs: Vec<PathBuf>,
        /// Emit one CSV row per (dataset, taxonomy, terminal, share).
        #[arg(long)]
        csv: bool,
    },
    /// Mean, sd and 95% interval of per-session counts.
    Stats {
        /// Output of `taxolex match`.
        #[arg(long, conflicts_with_all = ["seqs", "ruleset"])]
        matches: Option<PathBuf>,
        /// Terminal-sequence JSON file written by `taxolex map`.
        #[arg(long, requires = "ruleset")]
        seqs: Option<PathBuf>,
        /// Rule-set file, full catalog name or short alias (e.g. bm-shneiderman).
        #[arg(long, requires = "seqs")]
        ruleset: Option<String>,
        /// Reduction applied before matching: raw, collapse, plus or numeric.
        #[arg(long, default_value = "collapse")]
        approach: Encoding,
        /// Interval multiplier: normal 1.96 or Student t.
        #[arg(long, default_value = "normal", value_name = "normal|t")]
        ci: CiMethod,
    },
    /// Maximal common contiguous patterns across sessions.
    Mine {
        /// Terminal-sequence JSON file written by `taxolex map`.
        #[arg(long, required = true)]
        seqs: Vec<PathBuf>,
        /// Encoding the patterns are mined over.
        #[arg(long, default_value = "plus", value_name = "plus|numeric")]
        approach: Encoding,
        /// Fraction of sessions a pattern must occur in, in (0, 1].
        #[arg(long, default_value_t = 1.0)]
        min_support: f64,
        /// Minimum pattern length in encoded items.
        #[arg(long, default_value_t = 2)]
        min_len: usize,
        /// Numeric counts must match exactly or share a power-of-two bucket.
        #[arg(long, default_value = "exact", value_name = "exact|log2")]
        tolerance: CountTolerance,
    },
    /// List or show built-in taxonomies and rule sets.
    Catalog {
        /// List built-in taxonomies.
        #[arg(long)]
        list: bool,
        /// List built-in rule sets.
        #[arg(long)]
        rulesets: bool,
        /// Print one taxonomy or rule set as JSON.
        #[arg(long)]
        show: Option<String>,
    },
    /// Check rule sets, mappings and taxonomies.
    Validate {
        /// Rule-set file, full catalog name or short alias (e.g. bm-shneiderman).
        #[arg(long)]
        ruleset: Vec<String>,
        /// Mapping (code-book) JSON file.
        #[arg(long)]
        mapping: Vec<PathBuf>,
        /// Built-in taxonomy name or taxonomy JSON file.
        #[arg(long)]
        taxonomy: Vec<String>,
    },
    /// Run ingest, map, match, coverage, diversity, stats and mining.
    Pipeline {
        /// JSON pipeline configuration.
        #[arg(long, conflicts_with_all = ["log", "mapping", "ruleset"])]
        config: Option<PathBuf>,
        /// Interaction log file.
        #[arg(long)]
        log: Option<PathBuf>,
        /// Mapping (code-book) JSON file.
        #[arg(long)]
        mapping: Vec<PathBuf>,
        /// Rule-set file, full catalog name or short alias (e.g. bm-shneiderman).
        #[arg(long)]
        ruleset: Vec<String>,
        /// Reduction applied before matching: raw, collapse, plus or numeric.
        #[arg(long, default_value = "collapse")]
        approach: Encoding,
        #[command(flatten)]
        log_args: LogArgs,
    },
}

/// Whether the run produced diagnostics that `--strict` turns into failure.
#[derive(PartialEq, Eq)]
enum Outcome {
    Clean,
    Diagnostics,
}

struct Ctx {
    format: Option<InputFormat>,
    out: Option<PathBuf>,
    quiet: bool,
    json: bool,
    catalog: Catalog,
}

impl Ctx {
    fn warn(&self, msg: &str) {
        if !self.quiet {
            eprintln!("warning: {msg}");
        }
    }

    fn say(&self, text: &str) {
        if !self.quiet {
            if text.ends_with('\n') {
                write_stdout(text);
            } else {
                write_stdout(&format!("{text}\n"));
            }
        }
    }

    /// Writes `body` to `--out` with a manifest, or prints it.
    fn emit(&self, command: &str, body: &str, human: &str, inputs: &[&Path]) -> Result<()> {
        match &self.out {
            Some(out) => {
                write_file(out, body)?;
                let manifest = RunManifest::new(command, inputs, &[out.as_path()])
                    .context("digesting inputs")?;
                let mpath = PathBuf::from(format!("{}.manifest.json", out.display()));
                write_file(&mpath, &to_json(&manifest))?;
                self.say(human);
            }
            None if self.json => outln!("{body}"),
            None => self.say(human),
        }
        Ok(())
    }

    fn format_config(&self, log: &Path, args: &LogArgs) -> Result<FormatConfig> {
        let mut cfg = match &args.format_config {
            Some(p) => serde_json::from_str(&read(p)?)
                .with_context(|| format!("parsing format config {}", p.display()))?,
            None => FormatConfig::default(),
        };
        let set = |field: &mut String, v: &Option<String>| {
            if let Some(v) = v {
                *field = v.clone();
            }
        };
        set(&mut cfg.session_col, &args.session_col);
        set(&mut cfg.record_col, &args.record_col);
        let opt = |field: &mut Option<String>, v: &Option<String>| {
            if v.is_some() {
                *field = v.clone();
            }
        };
        opt(&mut cfg.time_col, &args.time_col);
        opt(&mut cfg.attr_col, &args.attr_col);
        opt(&mut cfg.participant_col, &args.participant_col);
        opt(&mut cfg.task_col, &args.task_col);
        opt(&mut cfg.dataset, &args.dataset);
        cfg.lenient |= args.lenient;
        if let Some(f) = self.format {
            cfg.format = f;
        } else if args.format_config.is_none() {
            cfg.format = match log.extension().and_then(|e| e.to_str()) {
                Some("json") => InputFormat::Json,
                Some("ndjson" | "jsonl") => InputFormat::Ndjson,
                _ => InputFormat::Csv,
            };
        }
        Ok(cfg)
    }

    fn load_log(&self, path: &Path, args: &LogArgs) -> Result<EventLog> {
        let cfg = self.format_config(path, args)?;
        let mut log = ingest(path, &cfg)?;
        for r in &log.rejected {
            self.warn(&format!("{}: skipped line {}: {}", path.display(), r.line, r.message));
        }
        if !args.segment_by.is_empty() {
            let keys: Vec<&str> = args.segment_by.iter().map(String::as_str).collect();
            log = segment_sessions(&log, &keys)?;
        }
        Ok(log)
    }

    fn load_mapping(&self, path: &Path) -> Result<(MappingSpec, Vec<String>)> {
        let (spec, warnings) = MappingSpec::from_json(&read(path)?)
            .with_context(|| format!("loading mapping {}", path.display()))?;
        let taxonomy = self.catalog.taxonomy(&spec.target_taxonomy)?;
        spec.validate(taxonomy)
            .with_context(|| format!("validating mapping {}", path.display()))?;
        for w in &warnings {
            self.warn(&format!("{}: {w}", path.display()));
        }
        Ok((spec, warnings))
    }

    fn compile(&self, reference: &str) -> Result<CompiledRuleSet> {
        let rs = self.catalog.resolve_ruleset(reference)?;
        Ok(CompiledRuleSet::from_catalog(&self.catalog, &rs)?)
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write_file(path: &Path, body: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let mut text = body.to_string();
    if !text.ends_with('\n') {
        text.push('\n');
    }
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("report serializes")
}

fn load_seqs(path: &Path) -> Result<SequenceSet> {
    SequenceSet::load(path).with_context(|| format!("loading sequences {}", path.display()))
}

/// Output of `match`, input of `stats`.
#[derive(Serialize, Deserialize)]
struct MatchOutput {
    dataset: String,
    ruleset: String,
    approach: Encoding,
    null_nonterminals: Vec<String>,
    sessions: Vec<SessionMatchReport>,
}

fn stats_table(stats: &[SessionStats]) -> String {
    let mut s = format!("{:<20} {:>4} {:>9} {:>9} {:>19}\n", "non-terminal", "n", "mean", "±95%", "interval");
    for st in stats {
        match (st.mean, st.interval()) {
            (_, _) if !st.expressible => {
                let _ = writeln!(s, "{:<20} {:>4} {:>9}", st.nonterminal, st.n_sessions, "null");
            }
            (Some(m), Some((lo, hi))) => {
                let _ = writeln!(
                    s,
                    "{:<20} {:>4} {:>9.2} {:>9.2} {:>8.2} to {:>6.2}",
                    st.nonterminal,
                    st.n_sessions,
                    m,
                    st.ci95_halfwidth.unwrap_or(0.0),
                    lo,
                    hi
                );
            }
            (m, _) => {
                let mean = m.map(|m| format!("{m:.2}")).unwrap_or_else(|| "-".into());
                let _ = writeln!(s, "{:<20} {:>4} {:>9}", st.nonterminal, st.n_sessions, mean);
            }
        }
    }
    s
}

fn diversity_text(r: &DiversityReport) -> String {
    let mut s = format!("{} × {} ({} items)\n", r.dataset, r.taxonomy, r.total_items);
    if let Some(top) = &r.top_terminal {
        let _ = writeln!(s, "  top: {top} {:.2}%", 100.0 * r.top_share);
    }
    let _ = writeln!(s, "  null: {:.2}%", 100.0 * r.null_share);
    let unused: Vec<&str> = r.unused.iter().map(String::as_str).collect();
    let _ = writeln!(s, "  unused: {}", if unused.is_empty() { "-".into() } else { unused.join(", ") });
    s
}

fn mined_text(sets: &[MinedPatternSet]) -> String {
    let mut s = String::new();
    for set in sets {
        let _ = writeln!(s, "{} × {} ({}):", set.dataset, set.taxonomy, set.approach);
        if set.patterns.is_empty() {
            s.push_str("  none\n");
        }
        for p in &set.patterns {
            let _ = writeln!(s, "  {}  support {}  folded {}", p.rendered, p.support, p.folded);
        }
    }
    s
}

fn run(cli: Cli) -> Result<Outcome> {
    let ctx = Ctx {
        format: cli.format,
        out: cli.out.clone(),
        quiet: cli.quiet,
        json: cli.json,
        catalog: Catalog::builtin(),
    };
    match cli.command {
        Command::Map {
            log,
            mapping,
            qualify,
            log_args,
        } => {
            let events = ctx.load_log(&log, &log_args)?;
            let (spec, warnings) = ctx.load_mapping(&mapping)?;
            let (mut seqs, report) = apply_mapping(&events, &spec);
            let mut outcome = if warnings.is_empty() { Outcome::Clean } else { Outcome::Diagnostics };
            if let Some(base) = qualify {
                let taxonomy = ctx.catalog.taxonomy(&spec.target_taxonomy)?;
                let (q, w) = qualify_inspect(&seqs, &base, taxonomy)?;
                for w in &w {
                    ctx.warn(w);
                    outcome = Outcome::Diagnostics;
                }
                seqs = q;
            }
            let mut human = format!(
                "{} events in {} sessions: {} mapped, {} explicit null, {} unlisted\n",
                report.events,
                seqs.sequences.len(),
                report.mapped,
                report.explicit_null,
                report.unlisted
            );
            for (r, n) in &report.unlisted_records {
                let _ = writeln!(human, "  unlisted {r} ×{n}");
            }
            ctx.emit("map", &seqs.to_json(), &human, &[&log, &mapping])?;
            Ok(outcome)
        }
        Command::Transform { input, approach } => {
            let seqs = load_seqs(&input)?;
            let out = match approach.as_str() {
                "expand" => seqs.map_sequences(transform::numeric_expand),
                other => {
                    let enc: Encoding = other.parse().map_err(anyhow::Error::msg)?;
                    seqs.map_sequences(|s| transform::apply(s, enc))
                }
            };
            let human: String = out
                .sequences
                .iter()
                .map(|s| format!("{}: {s}\n", s.session_id))
                .collect();
            ctx.emit("transform", &out.to_json(), &human, &[&input])?;
            Ok(Outcome::Clean)
        }
        Command::Match {
            seqs,
            ruleset,
            approach,
        } => {
            let set = load_seqs(&seqs)?;
            let rs = ctx.compile(&ruleset)?;
            let (_, warnings) = prepare(&set, &rs)?;
            warnings.iter().for_each(|w| ctx.warn(w));
            let sessions = match_dataset(&set, &rs, approach)?;
            let names: Vec<&str> = rs.nonterminals().collect();
            let mut human = format!("{:<16}", "session");
            for n in &names {
                let _ = write!(human, " {n:>18}");
            }
            human.push('\n');
            for r in &sessions {
                let _ = write!(human, "{:<16}", r.session_id);
                for n in &names {
                    let _ = write!(human, " {:>18}", r.counts[*n]);
                }
                human.push('\n');
            }
            let output = MatchOutput {
                dataset: set.dataset.clone(),
                ruleset: rs.ruleset.name.clone(),
                approach,
                null_nonterminals: rs.null_nonterminals().to_vec(),
                sessions,
            };
            let mut inputs: Vec<&Path> = vec![&seqs];
            let rs_path = Path::new(&ruleset);
            if rs_path.is_file() {
                inputs.push(rs_path);
            }
            ctx.emit("match", &to_json(&output), &human, &inputs)?;
            Ok(if warnings.is_empty() { Outcome::Clean } else { Outcome::Diagnostics })
        }
        Command::Coverage {
            log,
            mapping,
            mode,
            csv,
            log_args,
        } => {
            let logs = log
                .iter()
                .map(|l| ctx.load_log(l, &log_args))
                .collect::<Result<Vec<_>>>()?;
            let mut specs = Vec::new();
            let mut outcome = Outcome::Clean;
            for m in &mapping {
                let (spec, w) = ctx.load_mapping(m)?;
                if !w.is_empty() {
                    outcome = Outcome::Diagnostics;
                }
                specs.push(spec);
            }
            let inputs: Vec<&Path> = log.iter().chain(&mapping).map(PathBuf::as_path).collect();
            if logs.len() == 1 && specs.len() == 1 {
                let r = coverage(&logs[0], &specs[0], mode)?;
                let human = format!(
                    "{} × {}: {}% ({}/{})\n",
                    r.dataset, r.taxonomy, r.display, r.covered, r.total
                );
                let body = if csv {
                    format!(
                        "dataset,taxonomy,mode,covered,total,percentage\n{},{},{},{},{},{}\n",
                        r.dataset,
                        r.taxonomy,
                        serde_json::to_value(r.mode)?.as_str().unwrap_or_default(),
                        r.covered,
                        r.total,
                        r.display
                    )
                } else {
                    to_json(&r)
                };
                ctx.emit("coverage", &body, &human, &inputs)?;
            } else {
                // Logs are matched to mappings by dataset name.
                let table = coverage_table(&logs, &specs, mode)?;
                for w in &table.warnings {
                    ctx.warn(w);
                }
                let body = if csv { table.to_csv() } else { to_json(&table) };
                ctx.emit("coverage", &body, &table.to_string(), &inputs)?;
            }
            Ok(outcome)
        }
        Command::Diversity { seqs, csv } => {
            let mut reports = Vec::new();
            for p in &seqs {
                let set = load_seqs(p)?;
                let taxonomy = ctx.catalog.taxonomy(&set.taxonomy)?;
                reports.push(diversity(&set, taxonomy)?);
            }
            let body = if csv { diversity_csv(&reports) } else { to_json(&reports) };
            let human: String = if csv {
                body.clone()
            } else {
                reports.iter().map(diversity_text).collect()
            };
            let inputs: Vec<&Path> = seqs.iter().map(PathBuf::as_path).collect();
            ctx.emit("diversity", &body, &human, &inputs)?;
            Ok(Outcome::Clean)
        }
        Command::Stats {
            matches,
            seqs,
            ruleset,
            approach,
            ci,
        } => {
            let (sessions, inputs): (Vec<SessionMatchReport>, Vec<PathBuf>) = match (matches, seqs, ruleset) {
                (Some(m), _, _) => {
                    let parsed: MatchOutput = serde_json::from_str(&read(&m)?)
                        .with_context(|| format!("parsing match output {}", m.display()))?;
                    (parsed.sessions, vec![m])
                }
                (None, Some(s), Some(r)) => {
                    let set = load_seqs(&s)?;
                    let rs = ctx.compile(&r)?;
                    (match_dataset(&set, &rs, approach)?, vec![s])
                }
                _ => bail!("stats needs --matches, or --seqs with --ruleset"),
            };
            if sessions.is_empty() {
                bail!("no sessions to summarize");
            }
            let stats = session_stats(&sessions, ci);
            let inputs: Vec<&Path> = inputs.iter().map(PathBuf::as_path).collect();
            ctx.emit("stats", &to_json(&stats), &stats_table(&stats), &inputs)?;
            Ok(Outcome::Clean)
        }
        Command::Mine {
            seqs,
            approach,
            min_support,
            min_len,
            tolerance,
        } => {
            let cfg = MineConfig {
                approach,
                min_len,
                min_support,
                tolerance,
            };
            let mut sets = Vec::new();
            for p in &seqs {
                let set = load_seqs(p)?;
                sets.push(MinedPatternSet {
                    patterns: common_subsequences(&set, &cfg)?,
                    dataset: set.dataset,
                    taxonomy: set.taxonomy,
                    approach,
                });
            }
            let mut human = mined_text(&sets);
            let body = if sets.len() >= 2 {
                let shared = cross_dataset_intersection(&sets)?;
                let _ = writeln!(human, "shared across all {} datasets: {}", sets.len(), shared.len());
                for p in &shared {
                    let _ = writeln!(human, "  {}", p.rendered);
                }
                to_json(&serde_json::json!({ "datasets": sets, "shared": shared }))
            } else {
                to_json(&sets[0])
            };
            let inputs: Vec<&Path> = seqs.iter().map(PathBuf::as_path).collect();
            ctx.emit("mine", &body, &human, &inputs)?;
            Ok(Outcome::Clean)
        }
        Command::Catalog {
            list,
            rulesets,
            show,
        } => {
            if let Some(name) = show {
                let body = match ctx.catalog.load_taxonomy(&name) {
                    Ok(t) => to_json(&t),
                    Err(_) => ctx.catalog.resolve_ruleset(&name)?.to_json(),
                };
                outln!("{body}");
                return Ok(Outcome::Clean);
            }
            let entries: Vec<_> = ctx
                .catalog
                .entries()
                .into_iter()
                .filter(|e| match e.kind {
                    EntryKind::RuleSet => rulesets,
                    _ => list || !rulesets,
                })
                .collect();
            if ctx.json {
                outln!("{}", to_json(&entries));
            } else {
                for e in &entries {
                    let kind = match &e.kind {
                        EntryKind::Taxonomy(level) => format!("taxonomy ({})", level_label(*level)),
                        EntryKind::RuleSet => "rule set".to_string(),
                    };
                    let prov = serde_json::to_value(e.provenance)?;
                    outln!(
                        "{:<45} {:<16} {}",
                        e.name,
                        kind,
                        prov.as_str().unwrap_or_default()
                    );
                }
            }
            Ok(Outcome::Clean)
        }
        Command::Validate {
            ruleset,
            mapping,
            taxonomy,
        } => {
            if ruleset.is_empty() && mapping.is_empty() && taxonomy.is_empty() {
                bail!("validate needs --ruleset, --mapping or --taxonomy");
            }
            let mut problems: Vec<String> = Vec::new();
            for t in &taxonomy {
                ctx.catalog.load_taxonomy(t)?;
                ctx.say(&format!("{t}: ok"));
            }
            for r in &ruleset {
                let rs = ctx.catalog.resolve_ruleset(r)?;
                let diags = ctx.catalog.validate_ruleset(&rs)?;
                if diags.is_empty() {
                    let normalized = rs.normalized_rules();
                    let note = if normalized.is_empty() {
                        String::new()
                    } else {
                        format!(" (matched non-empty: {})", normalized.join(", "))
                    };
                    ctx.say(&format!("{}: ok{note}", rs.name));
                }
                problems.extend(diags.iter().map(|d| format!("{}: {d}", rs.name)));
            }
            for m in &mapping {
                let (spec, w) = ctx.load_mapping(m)?;
                if w.is_empty() {
                    ctx.say(&format!("{}: ok", spec.name));
                }
                problems.extend(w.iter().map(|w| format!("{}: {w}", spec.name)));
            }
            for p in &problems {
                if !ctx.quiet {
                    outln!("{p}");
                }
            }
            Ok(if problems.is_empty() { Outcome::Clean } else { Outcome::Diagnostics })
        }
        Command::Pipeline {
            config,
            log,
            mapping,
            ruleset,
            approach,
            log_args,
        } => {
            let Some(out) = ctx.out.clone() else {
                bail!("pipeline needs --out DIR");
            };
            let (cfg, base, config_path) = match config {
                Some(path) => {
                    let cfg = PipelineConfig::load(&path)?;
                    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
                    (cfg, base, Some(path))
                }
                None => {
                    let Some(log) = log else {
                        bail!("pipeline needs --config, or --log with --mapping");
                    };
                    if mapping.is_empty() {
                        bail!("pipeline needs at least one --mapping");
                    }
                    let cfg = PipelineConfig {
                        format: ctx.format_config(&log, &log_args)?,
                        log: log.display().to_string(),
                        segment_by: log_args.segment_by.clone(),
                        mappings: mapping.iter().map(|m| m.display().to_string()).collect(),
                        rulesets: ruleset,
                        approach,
                        coverage_mode: CoverageMode::default(),
                        ci: CiMethod::default(),
                        mine: MineConfig::default(),
                    };
                    (cfg, PathBuf::new(), None)
                }
            };
            let (report, inputs) = run_pipeline(&cfg, &base, &ctx.catalog)?;
            let written = write_bundle(&out, &report)?;
            let mut input_paths: Vec<&Path> = inputs.files.iter().map(PathBuf::as_path).collect();
            if let Some(c) = &config_path {
                input_paths.insert(0, c);
            }
            let outputs: Vec<&Path> = written.iter().map(PathBuf::as_path).collect();
            let manifest = RunManifest::new("pipeline", &input_paths, &outputs)?;
            write_file(&out.join("manifest.json"), &to_json(&manifest))?;
            for w in &report.warnings {
                ctx.warn(w);
            }
            if ctx.json {
                outln!("{}", to_json(&report));
            } else {
                ctx.say(&pipeline_summary(&report, &out));
            }
            Ok(if report.warnings.is_empty() { Outcome::Clean } else { Outcome::Diagnostics })
        }
    }
}

fn level_label(level: Level) -> &'static str {
    match level {
        Level::Terminal => "T",
        Level::NonTerminal => "NT",
    }
}

/// Writes the per-stage report files and returns their paths.
fn write_bundle(out: &Path, report: &PipelineReport) -> Result<Vec<PathBuf>> {
    let stats: Vec<_> = report
        .matches
        .iter()
        .map(|m| serde_json::json!({"ruleset": m.ruleset, "approach": m.approach, "stats": m.stats}))
        .collect();
    let files: Vec<(&str, String)> = vec![
        ("coverage.json", to_json(&report.coverage)),
        ("mappings.json", to_json(&report.mappings)),
        ("diversity.json", to_json(&report.diversity)),
        ("diversity.csv", diversity_csv(&report.diversity)),
        ("matches.json", to_json(&report.matches)),
        ("stats.json", to_json(&stats)),
        ("mine.json", to_json(&report.mined)),
    ];
    let mut written = Vec::new();
    for (name, body) in files {
        let path = out.join(name);
        write_file(&path, &body)?;
        written.push(path);
    }
    Ok(written)
}

fn pipeline_summary(report: &PipelineReport, out: &Path) -> String {
    let mut s = format!(
        "{}: {} sessions, {} events, {} distinct records\n\ncoverage\n",
        report.dataset, report.sessions, report.events, report.distinct_records
    );
    for c in &report.coverage {
        let _ = writeln!(
            s,
            "  {:<22} {:>7}% ({}/{})",
            c.taxonomy,
            format_hundredths(c.hundredths()),
            c.covered,
            c.total
        );
    }
    s.push_str("\ndiversity\n");
    for d in &report.diversity {
        let _ = writeln!(
            s,
            "  {:<22} top {} {:.2}%, {} unused",
            d.taxonomy,
            d.top_terminal.as_deref().unwrap_or("-"),
            100.0 * d.top_share,
            d.unused.len()
        );
    }
    for m in &report.matches {
        let _ = writeln!(s, "\n{} ({})", m.ruleset, m.approach);
        s.push_str(&stats_table(&m.stats));
    }
    s.push('\n');
    s.push_str(&mined_text(&report.mined));
    let _ = writeln!(s, "\nreports written to {}", out.display());
    s
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let strict = cli.strict;
    match run(cli) {
        Ok(Outcome::Diagnostics) if strict => ExitCode::from(1),
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
