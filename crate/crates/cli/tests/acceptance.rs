//! Acceptance criteria 1 to 9, one PASS/FAIL line each.

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use taxolex_core::catalog::Catalog;
use taxolex_core::grammar::{
    parse_syntax, Level, MatchPolicy, Pattern, SymbolAutomaton, SymbolDef, Taxonomy, Terminal,
};
use taxolex_core::ingest::{ingest_str, FormatConfig};
use taxolex_core::mapping::{apply_mapping, Lookup, MappingSpec};
use taxolex_core::matcher::{match_dataset, CompiledRuleSet};
use taxolex_core::metrics::{coverage, diversity, session_stats, summarize, CiMethod, CoverageMode};
use taxolex_core::miner::{
    common_subsequences, cross_dataset_intersection, required_support, MineConfig, MinedPatternSet,
};
use taxolex_core::pipeline::{run_pipeline, PipelineConfig};
use taxolex_core::sequence::{Encoding, SequenceSet, TerminalSequence};
use taxolex_core::transform::{apply, numeric_encode, numeric_expand};
use taxolex_oracle::{oracle_full_match, oracle_match, oracle_mine, oracle_runs};

type Outcome = Result<String, String>;
type Criterion = (u32, &'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit_s: f64) -> Result<(), String> {
    ensure(elapsed.as_secs_f64() < limit_s, || {
        format!("took {:.2}s, limit {limit_s}s", elapsed.as_secs_f64())
    })
}

fn wall_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/wall")
}

fn set_of(dataset: &str, taxonomy: &str, sessions: Vec<Vec<&str>>) -> SequenceSet {
    SequenceSet {
        dataset: dataset.into(),
        taxonomy: taxonomy.into(),
        sequences: sessions
            .iter()
            .enumerate()
            .map(|(i, s)| TerminalSequence::from_labels(format!("s{i}"), s))
            .collect(),
    }
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let catalog = Catalog::builtin();
    let rs = catalog
        .resolve_ruleset("brehmermunzner2013-shneiderman1996-mapping")
        .map_err(|e| e.to_string())?;
    let expected = [
        ("overview", "(aggregate | arrange | encode)*"),
        ("zoom", "(navigate)+"),
        ("filter", "(filter)+"),
        ("details_on_demand", "(select | derive)+"),
    ];
    for (nt, text) in expected {
        let rule = rs.rule(nt).ok_or_else(|| format!("missing rule {nt}"))?;
        ensure(rule.source == text, || format!("{nt}: `{}` != `{text}`", rule.source))?;
        let parsed = parse_syntax(text).map_err(|e| e.to_string())?;
        ensure(parsed == rule.pattern, || format!("{nt}: parsed tree differs"))?;
    }
    for rule in &rs.rules {
        let printed = rule.pattern.to_string();
        let again = parse_syntax(&printed).map_err(|e| e.to_string())?;
        ensure(again == rule.pattern && again.to_string() == printed, || {
            format!("{}: `{printed}` is not a fixed point", rule.nonterminal)
        })?;
    }
    within(start.elapsed(), 1.0)?;
    Ok(format!("4 rules verbatim, {} rules at a print/parse fixed point", rs.rules.len()))
}

const NAMES: [&str; 4] = ["a", "b", "c", "d"];

fn random_terminal(rng: &mut ChaCha8Rng, null_weight: u32) -> Terminal {
    let name = NAMES[rng.random_range(0..NAMES.len())];
    match rng.random_range(0..6 + null_weight) {
        0 => Terminal::qualified(name, "same"),
        1 => Terminal::qualified(name, "different"),
        k if k >= 6 => Terminal::null(),
        _ => Terminal::new(name),
    }
}

fn random_pattern(rng: &mut ChaCha8Rng, depth: u32) -> Pattern {
    if depth == 0 || rng.random_bool(0.35) {
        return Pattern::Symbol(random_terminal(rng, 0));
    }
    let kids = |rng: &mut ChaCha8Rng| -> Vec<Pattern> {
        (0..rng.random_range(2..4)).map(|_| random_pattern(rng, depth - 1)).collect()
    };
    match rng.random_range(0..6) {
        0 => Pattern::Concat(kids(rng)),
        1 => Pattern::Alt(kids(rng)),
        2 => Pattern::star(random_pattern(rng, depth - 1)),
        3 => Pattern::plus(random_pattern(rng, depth - 1)),
        4 => Pattern::optional(random_pattern(rng, depth - 1)),
        _ => {
            let lo = rng.random_range(0..3);
            let hi = lo + rng.random_range(0..2);
            Pattern::repeat(random_pattern(rng, depth - 1), lo, hi)
        }
    }
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let alphabet = Taxonomy::new(
        "sigma",
        Level::Terminal,
        NAMES
            .iter()
            .map(|n| SymbolDef::new(*n).with_qualifiers(["same", "different"]))
            .collect(),
    )
    .map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut pairs, mut discrepancies, mut total_spans) = (0, 0, 0);
    let mut first = None;
    while pairs < 1000 {
        let p = random_pattern(&mut rng, 3);
        if !p.matches_nonempty() {
            continue;
        }
        let len = rng.random_range(0..=12);
        let seq: Vec<Terminal> = (0..len).map(|_| random_terminal(&mut rng, 1)).collect();
        let a = SymbolAutomaton::build("r", &p, &alphabet);
        let member = a.full_match(&seq).map_err(|e| e.to_string())?;
        let spans: Vec<(usize, usize)> = a
            .find_matches(&seq, MatchPolicy::LeftmostLongest)
            .map_err(|e| e.to_string())?
            .into_iter()
            .map(|s| (s.start, s.end))
            .collect();
        let want = oracle_match(&p, &seq);
        total_spans += want.len();
        if member != oracle_full_match(&p, &seq) || spans != want {
            discrepancies += 1;
            first.get_or_insert_with(|| format!("pattern `{p}`"));
        }
        pairs += 1;
    }
    ensure(discrepancies == 0, || {
        format!("{discrepancies} discrepancies, first on {}", first.unwrap_or_default())
    })?;
    within(start.elapsed(), 30.0)?;
    Ok(format!("{pairs} pairs, {total_spans} spans, 0 discrepancies"))
}

fn criterion_3() -> Outcome {
    let catalog = Catalog::builtin();
    let text = std::fs::read_to_string(wall_dir().join("mappings/wall2020-brehmermunzner2013-mapping.json"))
        .map_err(|e| e.to_string())?;
    let (spec, _) = MappingSpec::from_json(&text).map_err(|e| e.to_string())?;
    let records = ["mouseover_from_list", "change_attribute_distribution", "filter_changed"];
    let mapped: Vec<String> = records
        .iter()
        .map(|r| match spec.lookup(r) {
            Lookup::Terminal(t) => t.to_string(),
            _ => "null".to_string(),
        })
        .collect();
    ensure(mapped == ["select", "aggregate", "filter"], || format!("mapped to {mapped:?}"))?;

    let session = [
        "change_attribute_distribution",
        "zoom_scatterplot",
        "zoom_scatterplot",
        "filter_changed",
        "filter_changed",
        "mouseover_from_list",
    ];
    let csv: String = std::iter::once("session_id,record".to_string())
        .chain(session.iter().map(|r| format!("walk,{r}")))
        .collect::<Vec<_>>()
        .join("\n");
    let log = ingest_str(&csv, "wall2020", &FormatConfig::default()).map_err(|e| e.to_string())?;
    let (set, _) = apply_mapping(&log, &spec);
    let names = set.sequences[0].names().join(" ");
    ensure(names == "aggregate navigate navigate filter filter select", || {
        format!("session mapped to `{names}`")
    })?;
    let rs = catalog
        .resolve_ruleset("brehmermunzner2013-shneiderman1996-mapping")
        .map_err(|e| e.to_string())?;
    let compiled = CompiledRuleSet::from_catalog(&catalog, &rs).map_err(|e| e.to_string())?;
    let reports = match_dataset(&set, &compiled, Encoding::Collapse).map_err(|e| e.to_string())?;
    let ism = reports[0].counts.get("ism").copied().unwrap_or(0);
    ensure(ism == 1, || format!("ism count {ism}"))?;
    Ok(format!("{mapped:?}; `{names}` gives ism = 1"))
}

fn coverage_ratio(covered: usize, total: usize) -> Result<String, String> {
    let rules: Vec<String> = (0..covered)
        .map(|i| format!(r#""r{i}": {{"terminal": "filter", "description": ""}}"#))
        .collect();
    let json = format!(
        r#"{{"name": "fx", "source_dataset": "fx", "target_taxonomy": "amar2005", "rules": {{{}}}}}"#,
        rules.join(",")
    );
    let (spec, _) = MappingSpec::from_json(&json).map_err(|e| e.to_string())?;
    let csv: String = std::iter::once("session_id,record".to_string())
        .chain((0..total).map(|i| format!("s{},r{i}", i % 3)))
        .collect::<Vec<_>>()
        .join("\n");
    let log = ingest_str(&csv, "fx", &FormatConfig::default()).map_err(|e| e.to_string())?;
    let report = coverage(&log, &spec, CoverageMode::DistinctRecords).map_err(|e| e.to_string())?;
    Ok(report.display)
}

fn criterion_4() -> Outcome {
    let mut shown = Vec::new();
    for (c, t, want) in [(6, 12, "50.00"), (11, 11, "100.00"), (42, 90, "46.67")] {
        let got = coverage_ratio(c, t)?;
        ensure(got == want, || format!("{c}/{t} gave {got}, want {want}"))?;
        shown.push(format!("{c}/{t}={got}"));
    }
    let cfg = PipelineConfig::load(wall_dir().join("pipeline.json")).map_err(|e| e.to_string())?;
    let (report, _) = run_pipeline(&cfg, &wall_dir(), &Catalog::builtin()).map_err(|e| e.to_string())?;
    let row: Vec<&str> = report.coverage.iter().map(|c| c.display.as_str()).collect();
    ensure(row.len() == 4 && row.iter().all(|d| *d == "100.00"), || format!("Wall row {row:?}"))?;
    Ok(format!("{}; Wall row 4 × 100.00", shown.join(", ")))
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let labels = ["a", "b", "c", "a:same", "a:different", "null"];
    for case in 0..10_000 {
        let len = rng.random_range(0..=20);
        let picked: Vec<&str> = (0..len).map(|_| labels[rng.random_range(0..labels.len())]).collect();
        let s = TerminalSequence::from_labels("s", &picked);
        let fail = |what: &str| format!("case {case} `{s}`: {what}");
        for enc in [Encoding::Collapse, Encoding::Plus, Encoding::Numeric] {
            let once = apply(&s, enc);
            ensure(apply(&once, enc) == once, || fail(&format!("{enc} not idempotent")))?;
        }
        ensure(numeric_expand(&numeric_encode(&s)) == s, || fail("expand∘encode != id"))?;
        let c = apply(&s, Encoding::Collapse);
        let p = apply(&s, Encoding::Plus);
        let n = apply(&s, Encoding::Numeric);
        ensure(c.names() == p.names() && p.names() == n.names(), || fail("projections differ"))?;
    }
    let eight = TerminalSequence::from_labels(
        "runs",
        &["filter", "filter", "select", "select", "select", "navigate", "encode", "derive"],
    );
    let c = apply(&eight, Encoding::Collapse);
    ensure(c.len() == 5, || format!("collapse kept {} items", c.len()))?;
    let plus = apply(&eight, Encoding::Plus).to_string();
    let numeric = apply(&eight, Encoding::Numeric).to_string();
    ensure(plus.starts_with("filter+ select+ "), || format!("plus `{plus}`"))?;
    ensure(numeric.starts_with("filter2 select3 "), || format!("numeric `{numeric}`"))?;
    Ok(format!("10000 sequences, 0 failures; 8 → 5 items, `{numeric}`"))
}

fn criterion_6() -> Outcome {
    let (mean, _, hw) = summarize(&[2.0, 3.0, 2.0], CiMethod::Normal);
    let hw = hw.ok_or("no half-width")?;
    ensure((mean - 2.3333).abs() < 1e-4 && (hw - 0.6533).abs() < 1e-4, || {
        format!("mean {mean:.6}, half-width {hw:.6}")
    })?;

    // 16 sessions with sum 36 and sum of squares 100.
    let counts: Vec<usize> = [vec![2; 8], vec![3; 4], vec![4; 2], vec![0; 2]].concat();
    let sessions: Vec<Vec<&str>> = counts
        .iter()
        .map(|&k| match k {
            0 => vec!["navigate"],
            k => ["inspect", "annotate"].repeat(k),
        })
        .collect();
    let set = set_of("tuned", "gotzzhou2009", sessions);
    let catalog = Catalog::builtin();
    let rs = catalog
        .resolve_ruleset("gotzzhou2009-guo2015-mapping")
        .map_err(|e| e.to_string())?;
    let compiled = CompiledRuleSet::from_catalog(&catalog, &rs).map_err(|e| e.to_string())?;
    let reports = match_dataset(&set, &compiled, Encoding::Collapse).map_err(|e| e.to_string())?;
    let stats = session_stats(&reports, CiMethod::Normal);
    let e = stats
        .iter()
        .find(|s| s.nonterminal == "elaborating")
        .ok_or("no elaborating stats")?;
    let (lo, hi) = e.interval().ok_or("no interval")?;
    let line = format!(
        "{:.2}±{:.2} = {:.2} to {:.2}",
        e.mean.unwrap_or(f64::NAN),
        e.ci95_halfwidth.unwrap_or(f64::NAN),
        lo,
        hi
    );
    ensure(line == "2.25±0.55 = 1.70 to 2.80", || format!("got `{line}`"))?;
    Ok(format!("{{2,3,2}}: {mean:.4}±{hw:.4}; tuned: {line}"))
}

fn criterion_7() -> Outcome {
    let catalog = Catalog::builtin();
    let yi = catalog.taxonomy("yi2007").map_err(|e| e.to_string())?;
    let mut items = vec!["explore"; 9543];
    let others = ["select", "filter", "encode", "connect"];
    items.extend((0..457).map(|i| others[i % others.len()]));
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for i in (1..items.len()).rev() {
        items.swap(i, rng.random_range(0..=i));
    }
    let sessions: Vec<Vec<&str>> = items.chunks(500).map(<[&str]>::to_vec).collect();
    let r = diversity(&set_of("skewed", "yi2007", sessions), yi).map_err(|e| e.to_string())?;
    ensure(r.top_terminal.as_deref() == Some("explore") && (r.top_share - 0.9543).abs() < 1e-4, || {
        format!("top {:?} at {:.6}", r.top_terminal, r.top_share)
    })?;

    let amar = catalog.taxonomy("amar2005").map_err(|e| e.to_string())?;
    let planted: BTreeSet<String> = ["find-anomalies", "find-extremum"].map(String::from).into();
    let used: Vec<&str> = amar.names().filter(|n| !planted.contains(*n)).collect();
    let set = set_of("sparse", "amar2005", vec![used.clone(), used.into_iter().rev().collect()]);
    let r2 = diversity(&set, amar).map_err(|e| e.to_string())?;
    ensure(r2.unused == planted, || format!("unused {:?}", r2.unused))?;
    Ok(format!("explore {:.4}; unused {:?}", r.top_share, r2.unused))
}

fn oracle_tokens(seq: &[&str], approach: Encoding) -> Vec<String> {
    oracle_runs(seq)
        .into_iter()
        .map(|(t, n)| match approach {
            _ if t == "null" => t.to_string(),
            Encoding::Numeric => format!("{t}{n}"),
            _ if n >= 2 => format!("{t}+"),
            _ => t.to_string(),
        })
        .collect()
}

fn criterion_8() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let alphabet = ["a", "a", "b", "b", "c", "null"];
    let mut instances = 0;
    let mut patterns = 0;
    for case in 0..300 {
        let n = rng.random_range(2..=6);
        let per = 200 / n;
        let sessions: Vec<Vec<&str>> = (0..n)
            .map(|_| {
                (0..rng.random_range(1..=per.min(30)))
                    .map(|_| alphabet[rng.random_range(0..alphabet.len())])
                    .collect()
            })
            .collect();
        let approach = if case % 2 == 0 { Encoding::Plus } else { Encoding::Numeric };
        let min_support = [0.5, 0.75, 1.0][case % 3];
        let set = set_of("rand", "t", sessions.clone());
        let cfg = MineConfig { approach, min_support, ..MineConfig::default() };
        let got: BTreeSet<(String, usize)> = common_subsequences(&set, &cfg)
            .map_err(|e| e.to_string())?
            .into_iter()
            .map(|p| (p.rendered, p.support))
            .collect();
        let encoded: Vec<Vec<String>> = sessions.iter().map(|s| oracle_tokens(s, approach)).collect();
        let required = ((min_support * n as f64) - 1e-9).ceil().max(1.0) as usize;
        let want: BTreeSet<(String, usize)> = oracle_mine(&encoded, required, 2, |t: &String| t == "null")
            .into_iter()
            .map(|(p, s)| (format!("({})", p.join(", ")), s))
            .collect();
        ensure(got == want, || format!("case {case}: miner {got:?} vs oracle {want:?}"))?;
        ensure(required == required_support(min_support, n), || "support threshold differs".into())?;
        instances += 1;
        patterns += want.len();
    }

    let catalog = Catalog::builtin();
    let gz = catalog.taxonomy("gotzzhou2009").map_err(|e| e.to_string())?;
    let filler: Vec<&str> = gz.names().filter(|n| !["delete", "brush"].contains(n)).collect();
    let planted: Vec<Vec<&str>> = (0..12)
        .map(|_| {
            let mut s: Vec<&str> = (0..rng.random_range(5..15)).map(|_| filler[rng.random_range(0..filler.len())]).collect();
            s.extend(["delete", "brush"]);
            s.extend((0..rng.random_range(5..15)).map(|_| filler[rng.random_range(0..filler.len())]));
            s
        })
        .collect();
    let cfg = MineConfig { approach: Encoding::Numeric, ..MineConfig::default() };
    let mined = common_subsequences(&set_of("planted", "gotzzhou2009", planted), &cfg).map_err(|e| e.to_string())?;
    let hit = mined.iter().find(|p| {
        p.items.iter().map(|i| (i.terminal.as_str(), i.repeat)).collect::<Vec<_>>()
            == [("delete", Some((1, 1))), ("brush", Some((1, 1)))]
    });
    let hit = hit.ok_or_else(|| format!("planted pattern missing from {:?}", mined.iter().map(|p| &p.rendered).collect::<Vec<_>>()))?;

    let plus = MineConfig::default();
    let mine_set = |dataset: &str, sessions: Vec<Vec<&str>>| -> Result<MinedPatternSet, String> {
        let set = set_of(dataset, "gotzzhou2009", sessions);
        Ok(MinedPatternSet {
            dataset: dataset.into(),
            taxonomy: "gotzzhou2009".into(),
            approach: plus.approach,
            patterns: common_subsequences(&set, &plus).map_err(|e| e.to_string())?,
        })
    };
    let a = mine_set("A", vec![vec!["inspect", "navigate", "inspect"], vec!["navigate", "inspect", "navigate"]])?;
    let b = mine_set("B", vec![vec!["filter", "query", "filter"], vec!["query", "filter", "query"]])?;
    ensure(!a.patterns.is_empty() && !b.patterns.is_empty(), || "fixtures mined nothing".into())?;
    let shared = cross_dataset_intersection(&[a, b]).map_err(|e| e.to_string())?;
    ensure(shared.is_empty(), || format!("shared {shared:?}"))?;
    within(start.elapsed(), 10.0)?;
    Ok(format!(
        "{instances} oracle instances ({patterns} patterns) equal; planted {}; intersection ∅",
        hit.rendered
    ))
}

fn strip_timestamp(text: &str) -> Result<serde_json::Value, String> {
    let mut v: serde_json::Value = serde_json::from_str(text).map_err(|e| e.to_string())?;
    v.as_object_mut().ok_or("manifest is not an object")?.remove("timestamp");
    Ok(v)
}

fn criterion_9() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let out = dir.path().join("report");
    let first = dir.path().join("first");
    let run = || -> Result<(), String> {
        let status = Command::new(env!("CARGO_BIN_EXE_taxolex"))
            .args(["-q", "pipeline", "--config"])
            .arg(wall_dir().join("pipeline.json"))
            .arg("--out")
            .arg(&out)
            .status()
            .map_err(|e| e.to_string())?;
        ensure(status.success(), || format!("pipeline exited with {status}"))
    };
    run()?;
    std::fs::rename(&out, &first).map_err(|e| e.to_string())?;
    run()?;
    let mut names: Vec<String> = std::fs::read_dir(&first)
        .map_err(|e| e.to_string())?
        .map(|e| e.map(|e| e.file_name().to_string_lossy().into_owned()))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    names.sort();
    for name in &names {
        let a = std::fs::read(first.join(name)).map_err(|e| e.to_string())?;
        let b = std::fs::read(out.join(name)).map_err(|e| format!("{name}: {e}"))?;
        if name == "manifest.json" {
            let (a, b) = (String::from_utf8_lossy(&a), String::from_utf8_lossy(&b));
            ensure(strip_timestamp(&a)? == strip_timestamp(&b)?, || "manifests differ".into())?;
        } else {
            ensure(a == b, || format!("{name} differs"))?;
        }
    }
    Ok(format!("{} files identical ({})", names.len(), names.join(", ")))
}

fn main() {
    let criteria: [Criterion; 9] = [
        (1, "grammar fidelity", criterion_1),
        (2, "matcher/oracle equivalence", criterion_2),
        (3, "Wall walk-through", criterion_3),
        (4, "coverage ratios", criterion_4),
        (5, "transform algebra", criterion_5),
        (6, "session statistics", criterion_6),
        (7, "diversity", criterion_7),
        (8, "mining", criterion_8),
        (9, "CLI determinism", criterion_9),
    ];
    let mut failed = 0;
    for (n, name, f) in criteria {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {n} ({name}): PASS [{secs:.2}s] {detail}"),
            Err(detail) => {
                failed += 1;
                println!("criterion {n} ({name}): FAIL [{secs:.2}s] {detail}");
            }
        }
    }
    let summary: BTreeMap<&str, usize> = [("passed", 9 - failed), ("failed", failed)].into();
    println!("acceptance: {summary:?}");
    if failed > 0 {
        std::process::exit(1);
    }
}
