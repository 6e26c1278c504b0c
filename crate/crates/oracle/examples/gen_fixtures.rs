//! Regenerates the Wall-shaped fixture and its expected values.
//!
//! Usage: cargo run -p taxolex-oracle --example gen_fixtures -- [fixtures/wall]

use std::fs;
use std::path::PathBuf;

use serde_json::Value;
use taxolex_core::catalog::Catalog;
use taxolex_core::fixtures::{gen_fixture, wall_spec};
use taxolex_core::ingest::write_csv;
use taxolex_oracle::expect::{expectations, OracleRuleSet};

fn main() {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "fixtures/wall".into()));
    let spec = wall_spec();
    let log = gen_fixture(&spec).expect("valid spec");
    let mut csv = Vec::new();
    write_csv(&log, &mut csv).expect("csv");
    fs::write(dir.join("wall2020.csv"), &csv).unwrap();
    fs::write(
        dir.join("fixture.json"),
        serde_json::to_string_pretty(&spec).unwrap() + "\n",
    )
    .unwrap();

    let config: Value =
        serde_json::from_str(&fs::read_to_string(dir.join("pipeline.json")).unwrap()).unwrap();
    let mappings: Vec<Value> = config["mappings"]
        .as_array()
        .unwrap()
        .iter()
        .map(|p| serde_json::from_str(&fs::read_to_string(dir.join(p.as_str().unwrap())).unwrap()).unwrap())
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
                rules: rs
                    .rules
                    .iter()
                    .map(|rule| (rule.nonterminal.clone(), rule.pattern.clone()))
                    .collect(),
                nulls: rs.null_nonterminals.clone(),
                qualify: rs.qualify.clone(),
            }
        })
        .collect();
    let share = config["mine"]["min_support"].as_f64().unwrap_or(1.0);
    let expected = expectations(&String::from_utf8(csv).unwrap(), &mappings, &rulesets, share);
    fs::write(
        dir.join("expected.json"),
        serde_json::to_string_pretty(&expected).unwrap() + "\n",
    )
    .unwrap();
    println!("wrote {}", dir.display());
}
