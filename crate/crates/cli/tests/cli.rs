use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use taxolex_core::catalog::Catalog;
use taxolex_core::fixtures::{gen_fixture, wall_spec};
use taxolex_core::ingest::write_csv;
use taxolex_oracle::expect::{expectations, OracleRuleSet};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_taxolex"))
}

fn wall_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/wall")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn catalog_lists_seven_taxonomies() {
    let out = run(&["catalog", "--list"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 7);
    assert!(text.contains("shneiderman1996"));
}

#[test]
fn exit_codes() {
    let out = run(&["map", "--mapping", "missing.json", "--log", "missing.csv"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(run(&["--help"]).status.code(), Some(0));

    let dir = tempfile::tempdir().unwrap();
    let mapping = dir.path().join("m.json");
    std::fs::write(
        &mapping,
        r#"{"name":"m","source_dataset":"d","target_taxonomy":"amar2005",
            "rules":{"a":{"terminal":"filter","description":""}}}"#,
    )
    .unwrap();
    let m = mapping.to_str().unwrap();
    assert_eq!(run(&["validate", "--mapping", m]).status.code(), Some(0));
    assert_eq!(run(&["--strict", "validate", "--mapping", m]).status.code(), Some(1));
    assert_eq!(
        run(&["--strict", "validate", "--ruleset", "bm-shneiderman"]).status.code(),
        Some(0)
    );
}

#[test]
fn stage_by_stage_chain() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let wall = wall_dir();
    let log = wall.join("wall2020.csv");
    let mapping = wall.join("mappings/wall2020-brehmermunzner2013-mapping.json");
    let seqs = d.join("seqs.json");
    let p = |p: &Path| p.to_str().unwrap().to_string();

    let out = run(&[
        "map", "--log", &p(&log), "--mapping", &p(&mapping), "--time-col", "timestamp",
        "--out", &p(&seqs),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let manifest = read_json(&d.join("seqs.json.manifest.json"));
    assert_eq!(manifest["inputs"].as_array().unwrap().len(), 2);
    assert_eq!(manifest["inputs"][0]["sha256"].as_str().unwrap().len(), 64);

    let plus = d.join("plus.json");
    let out = run(&["transform", "--in", &p(&seqs), "--approach", "plus", "--out", &p(&plus)]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(read_json(&plus)["sequences"][0]["encoding"], "plus");

    let matches = d.join("matches.json");
    let out = run(&["match", "--seqs", &p(&seqs), "--ruleset", "bm-shneiderman", "--out", &p(&matches)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(read_json(&matches)["sessions"].as_array().unwrap().len(), 24);

    let out = run(&["--json", "stats", "--matches", &p(&matches)]);
    assert_eq!(out.status.code(), Some(0));
    let stats: Value = serde_json::from_slice(&out.stdout).unwrap();
    let direct = run(&["--json", "stats", "--seqs", &p(&seqs), "--ruleset", "bm-shneiderman"]);
    assert_eq!(stats, serde_json::from_slice::<Value>(&direct.stdout).unwrap());

    let out = run(&["--json", "coverage", "--log", &p(&log), "--mapping", &p(&mapping)]);
    let cov: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(cov["display"], "100.00");

    let out = run(&["diversity", "--seqs", &p(&seqs), "--csv"]);
    let csv = String::from_utf8(out.stdout).unwrap();
    assert!(csv.starts_with("dataset,taxonomy,terminal,share\n"));

    let out = run(&["--json", "mine", "--seqs", &p(&seqs), "--seqs", &p(&seqs)]);
    let mined: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(mined["shared"].as_array().unwrap().len(), 1);
}

#[test]
fn pipeline_mismatched_taxonomy_aborts() {
    let dir = tempfile::tempdir().unwrap();
    let wall = wall_dir();
    let out = run(&[
        "pipeline",
        "--log",
        wall.join("wall2020.csv").to_str().unwrap(),
        "--mapping",
        wall.join("mappings/wall2020-amar2005-mapping.json").to_str().unwrap(),
        "--ruleset",
        "bm-shneiderman",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("validate") && err.contains("brehmermunzner2013"), "{err}");
}

/// The shipped fixture matches its generator and its oracle expectations.
#[test]
fn fixture_is_current() {
    let wall = wall_dir();
    let mut csv = Vec::new();
    write_csv(&gen_fixture(&wall_spec()).unwrap(), &mut csv).unwrap();
    let shipped = std::fs::read_to_string(wall.join("wall2020.csv")).unwrap();
    assert_eq!(String::from_utf8(csv).unwrap(), shipped);

    let config = read_json(&wall.join("pipeline.json"));
    let mappings: Vec<Value> = config["mappings"]
        .as_array()
        .unwrap()
        .iter()
        .map(|m| read_json(&wall.join(m.as_str().unwrap())))
        .collect();
    let catalog = Catalog::builtin();
    let rulesets: Vec<OracleRuleSet> = config["rulesets"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| {
            let rs = catalog.resolve_ruleset(r.as_str().unwrap()).unwrap();
            OracleRuleSet {
                name: rs.name.clone(),
                terminal_taxonomy: rs.terminal_taxonomy.clone(),
                rules: rs.rules.iter().map(|x| (x.nonterminal.clone(), x.pattern.clone())).collect(),
                nulls: rs.null_nonterminals.clone(),
                qualify: rs.qualify.clone(),
            }
        })
        .collect();
    let recomputed = expectations(&shipped, &mappings, &rulesets, 1.0);
    assert_eq!(recomputed, read_json(&wall.join("expected.json")));
}

fn close(a: &Value, b: &Value) -> bool {
    match (a.as_f64(), b.as_f64()) {
        (Some(x), Some(y)) => (x - y).abs() < 1e-9,
        _ => a == b,
    }
}

/// Pipeline output agrees with the oracle-derived expected values.
#[test]
fn pipeline_golden() {
    let dir = tempfile::tempdir().unwrap();
    let wall = wall_dir();
    let out = run(&[
        "-q",
        "pipeline",
        "--config",
        wall.join("pipeline.json").to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let expected = read_json(&wall.join("expected.json"));

    for c in read_json(&dir.path().join("coverage.json")).as_array().unwrap() {
        let t = c["taxonomy"].as_str().unwrap();
        assert_eq!(c["display"], expected["coverage"][t], "{t}");
    }

    let matches = read_json(&dir.path().join("matches.json"));
    for m in matches.as_array().unwrap() {
        let name = m["ruleset"].as_str().unwrap();
        let exp = &expected["matches"][name];
        for (nt, counts) in exp["per_session"].as_object().unwrap() {
            let got: Vec<Value> = m["sessions"]
                .as_array()
                .unwrap()
                .iter()
                .map(|s| s["counts"][nt].clone())
                .collect();
            assert_eq!(&Value::Array(got), counts, "{name} {nt}");
        }
        for s in m["stats"].as_array().unwrap() {
            let nt = s["nonterminal"].as_str().unwrap();
            let e = &exp["stats"][nt];
            for field in ["mean", "sd", "ci95_halfwidth"] {
                assert!(close(&s[field], &e[field]), "{name} {nt} {field}: {} vs {}", s[field], e[field]);
            }
        }
    }

    for set in read_json(&dir.path().join("mine.json")).as_array().unwrap() {
        let t = set["taxonomy"].as_str().unwrap();
        let got: Vec<(Value, Value)> = set["patterns"]
            .as_array()
            .unwrap()
            .iter()
            .map(|p| (p["rendered"].clone(), p["support"].clone()))
            .collect();
        let want: Vec<(Value, Value)> = expected["mined"][t]
            .as_array()
            .unwrap()
            .iter()
            .map(|p| (p["rendered"].clone(), p["support"].clone()))
            .collect();
        assert_eq!(got, want, "{t}");
    }
}
