//! Expected pipeline values for a fixture, derived without the production
//! ingest, mapping, transform, matching, statistics or mining code.

use std::collections::{BTreeMap, BTreeSet};

use serde_json::{json, Map, Value};
use taxolex_core::grammar::{Pattern, Terminal};

use crate::{oracle_match, oracle_mine, oracle_runs, oracle_stats};

/// One CSV row as `(session_id, record, attribute)`, in file order.
pub type Row = (String, String, Option<String>);

/// Naive CSV reader for fixtures without quoting. Sorts each session by the
/// named timestamp column, which must be fixed-width ISO text.
pub fn read_rows(csv_text: &str, time_col: &str) -> Vec<Row> {
    let mut lines = csv_text.lines();
    let header: Vec<&str> = lines.next().unwrap_or_default().split(',').collect();
    let col = |name: &str| header.iter().position(|h| *h == name).expect("column present");
    let (sid, rec, attr, ts) = (col("session_id"), col("record"), col("attribute"), col(time_col));
    let mut rows: Vec<(String, String, String, Option<String>)> = lines
        .filter(|l| !l.is_empty())
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            let a = (!f[attr].is_empty()).then(|| f[attr].to_string());
            (f[sid].to_string(), f[ts].to_string(), f[rec].to_string(), a)
        })
        .collect();
    let mut first_seen: Vec<String> = Vec::new();
    for r in &rows {
        if !first_seen.contains(&r.0) {
            first_seen.push(r.0.clone());
        }
    }
    rows.sort_by(|a, b| {
        let ia = first_seen.iter().position(|s| *s == a.0);
        let ib = first_seen.iter().position(|s| *s == b.0);
        ia.cmp(&ib).then_with(|| a.1.cmp(&b.1))
    });
    rows.into_iter().map(|(s, _, r, a)| (s, r, a)).collect()
}

/// `(record, attribute)` pairs of one session, in order.
type Events = Vec<(String, Option<String>)>;

fn sessions(rows: &[Row]) -> Vec<(String, Events)> {
    let mut out: Vec<(String, Events)> = Vec::new();
    for (s, r, a) in rows {
        match out.iter_mut().find(|(id, _)| id == s) {
            Some((_, evs)) => evs.push((r.clone(), a.clone())),
            None => out.push((s.clone(), vec![(r.clone(), a.clone())])),
        }
    }
    out
}

fn terminal_of(mapping: &Value, record: &str) -> String {
    mapping["rules"]
        .get(record)
        .and_then(|r| r["terminal"].as_str())
        .unwrap_or("null")
        .to_string()
}

/// A rule set as plain data: rules, inexpressible names, qualified terminal.
pub struct OracleRuleSet {
    pub name: String,
    pub terminal_taxonomy: String,
    pub rules: Vec<(String, Pattern)>,
    pub nulls: Vec<String>,
    pub qualify: Option<String>,
}

fn pct(covered: usize, total: usize) -> String {
    let h = (covered * 20_000 + total) / (2 * total);
    format!("{}.{:02}", h / 100, h % 100)
}

/// Expected report values for the log text under each mapping and rule set.
pub fn expectations(
    csv_text: &str,
    mappings: &[Value],
    rulesets: &[OracleRuleSet],
    mine_required_share: f64,
) -> Value {
    let rows = read_rows(csv_text, "timestamp");
    let sess = sessions(&rows);
    let distinct: BTreeSet<&str> = rows.iter().map(|(_, r, _)| r.as_str()).collect();

    let mut coverage = Map::new();
    let mut mapped: BTreeMap<String, Vec<Events>> = BTreeMap::new();
    for m in mappings {
        let taxonomy = m["target_taxonomy"].as_str().unwrap().to_string();
        let covered = distinct.iter().filter(|r| terminal_of(m, r) != "null").count();
        coverage.insert(taxonomy.clone(), json!(pct(covered, distinct.len())));
        mapped.insert(
            taxonomy,
            sess.iter()
                .map(|(_, evs)| {
                    evs.iter()
                        .map(|(r, a)| (terminal_of(m, r), a.clone()))
                        .collect()
                })
                .collect(),
        );
    }

    let mut matches = Map::new();
    for rs in rulesets {
        let seqs = &mapped[&rs.terminal_taxonomy];
        let mut per_session: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for seq in seqs {
            let mut prev: Option<Option<String>> = None;
            let items: Vec<Terminal> = seq
                .iter()
                .map(|(t, a)| {
                    if rs.qualify.as_deref() == Some(t.as_str()) {
                        let q = match (&prev, a) {
                            (Some(Some(p)), Some(a)) if p == a => "same",
                            _ => "different",
                        };
                        prev = Some(a.clone());
                        Terminal::qualified(t.as_str(), q)
                    } else {
                        Terminal::new(t.as_str())
                    }
                })
                .collect();
            let collapsed: Vec<Terminal> = oracle_runs(&items).into_iter().map(|(t, _)| t).collect();
            for (nt, p) in &rs.rules {
                per_session
                    .entry(nt.clone())
                    .or_default()
                    .push(oracle_match(p, &collapsed).len());
            }
        }
        let mut stats = Map::new();
        for (nt, counts) in &per_session {
            let xs: Vec<f64> = counts.iter().map(|c| *c as f64).collect();
            let (mean, sd, hw) = oracle_stats(&xs);
            stats.insert(nt.clone(), json!({"mean": mean, "sd": sd, "ci95_halfwidth": hw}));
        }
        matches.insert(
            rs.name.clone(),
            json!({"per_session": per_session, "stats": stats, "inexpressible": rs.nulls}),
        );
    }

    let mut mined = Map::new();
    for (taxonomy, seqs) in &mapped {
        let encoded: Vec<Vec<String>> = seqs
            .iter()
            .map(|s| {
                let names: Vec<&str> = s.iter().map(|(t, _)| t.as_str()).collect();
                oracle_runs(&names)
                    .into_iter()
                    .map(|(t, n)| if n >= 2 && t != "null" { format!("{t}+") } else { t.to_string() })
                    .collect()
            })
            .collect();
        let required = ((mine_required_share * encoded.len() as f64) - 1e-9).ceil().max(1.0) as usize;
        let found = oracle_mine(&encoded, required, 2, |t: &String| t == "null");
        let mut rendered: Vec<(usize, String, usize)> = found
            .into_iter()
            .map(|(p, s)| (p.len(), format!("({})", p.join(", ")), s))
            .collect();
        rendered.sort_by(|a, b| b.0.cmp(&a.0).then_with(|| a.1.cmp(&b.1)));
        mined.insert(
            taxonomy.clone(),
            Value::Array(
                rendered
                    .into_iter()
                    .map(|(_, r, s)| json!({"rendered": r, "support": s}))
                    .collect(),
            ),
        );
    }

    json!({
        "sessions": sess.len(),
        "events": rows.len(),
        "distinct_records": distinct.len(),
        "coverage": coverage,
        "matches": matches,
        "mined": mined,
    })
}
