mod common;

use std::process::{Command, Output};

use cardlake::discovery::DiscoveryConfig;
use cardlake::lake::EvidenceTable;
use cardlake::{integrate_all, Operator, PipelineConfig, RetrievalResult, SemanticMethod};
use cardlake_cli::api;
use cardlake_cli::index::Manifest;
use common::{demo_fixture, demo_index, open, ANCHOR_TABLE, OTHER_TABLES, QUERY};

fn cardlake(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cardlake")).args(args).output().unwrap()
}

fn stdout_ok(args: &[&str]) -> String {
    let out = cardlake(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn help_and_unknown_subcommand_exit_codes() {
    assert_eq!(cardlake(&["search", "--help"]).status.code(), Some(0));
    assert_eq!(cardlake(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(cardlake(&["search", "--index", "x", "--q", "y", "--method", "fuzzy"]).status.code(), Some(2));
    let missing = cardlake(&["search", "--index", "/nonexistent/index", "--q", "y"]);
    assert_eq!(missing.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("manifest.json"));
}

#[test]
fn ingest_writes_a_stamped_index() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("idx");
    let cards = demo_fixture("cards.jsonl");
    let tables = demo_fixture("tables.jsonl");
    let printed: Manifest = serde_json::from_str(&stdout_ok(&[
        "ingest",
        "--cards",
        cards.to_str().unwrap(),
        "--tables",
        tables.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]))
    .unwrap();
    let stored: Manifest = serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(printed, stored);
    assert_eq!(stored.format, "cardlake-index/1");
    assert_eq!((stored.cards, stored.tables, stored.dropped_tables), (25, 40, 0));
    for f in ["cards.jsonl", "tables.jsonl", "nuggets.jsonl"] {
        assert!(out.join(f).is_file(), "{f}");
    }
    assert_eq!(open(&out).nuggets.nugget_count(), stored.nuggets);
}

#[test]
fn pipeline_output_equals_library_call() {
    let (dir, path) = demo_index();
    let index = open(&path);
    let file = dir.path().join("result.json");
    let printed = stdout_ok(&[
        "pipeline",
        "--index",
        path.to_str().unwrap(),
        "--q",
        QUERY,
        "--semantic",
        "sparse",
        "--operator",
        "joinable",
        "--k",
        "5",
        "--out",
        file.to_str().unwrap(),
    ]);
    let want = index.engine.run_structured(QUERY, &PipelineConfig::new(SemanticMethod::Sparse, Operator::Joinable, 5)).unwrap();
    let got: RetrievalResult = serde_json::from_str(&printed).unwrap();
    assert_eq!(got, want);
    let written: RetrievalResult = serde_json::from_str(&std::fs::read_to_string(file).unwrap()).unwrap();
    assert_eq!(written, want);
}

#[test]
fn search_and_score_match_the_shared_api() {
    let (_dir, path) = demo_index();
    let index = open(&path);
    let p = path.to_str().unwrap();
    let got: RetrievalResult =
        serde_json::from_str(&stdout_ok(&["search", "--index", p, "--q", QUERY, "--method", "hybrid", "--k", "3"])).unwrap();
    assert_eq!(got, api::search(&index, QUERY, SemanticMethod::Hybrid, 3).unwrap());

    let text = stdout_ok(&["search", "--index", p, "--q", QUERY, "--k", "3", "--format", "text"]);
    let ids: Vec<&str> = text.lines().map(|l| l.split('\t').nth(1).unwrap()).collect();
    assert_eq!(ids, api::search(&index, QUERY, SemanticMethod::Dense, 3).unwrap().card_ids());

    let cards = "demo/code-anchor,demo/code-partner-1";
    let score = stdout_ok(&["nuggets", "score", "--index", p, "--q", QUERY, "--cards", cards, "--format", "text"]);
    let want = api::score(&index, QUERY, &api::split_ids(cards)).unwrap().score;
    assert_eq!(score.trim(), want.to_string());

    let extracted = stdout_ok(&["nuggets", "extract", "--index", p, "--card", "demo/code-anchor"]);
    assert_eq!(extracted.lines().count(), index.nuggets.get("demo/code-anchor").unwrap().len());
}

#[test]
fn integrate_and_discover_formats() {
    let (_dir, path) = demo_index();
    let index = open(&path);
    let p = path.to_str().unwrap();
    let retrieved: Vec<EvidenceTable> = OTHER_TABLES.iter().map(|t| index.lake().table(t).unwrap().clone()).collect();
    let want = integrate_all(index.lake().table(ANCHOR_TABLE).unwrap(), &retrieved, &DiscoveryConfig::default());
    let tables = OTHER_TABLES.join(",");
    let base = ["integrate", "--index", p, "--anchor-table", ANCHOR_TABLE, "--tables", tables.as_str()];
    let csv = stdout_ok(&[&base[..], &["--format", "csv"]].concat());
    assert_eq!(csv, want.to_csv().unwrap());
    let md = stdout_ok(&[&base[..], &["--format", "markdown"]].concat());
    assert_eq!(md, want.to_markdown());

    let hits = stdout_ok(&["discover", "--index", p, "--operator", "unionable", "--anchor-table", ANCHOR_TABLE, "--k", "4", "--format", "text"]);
    let want = index.engine.discovery().discover(Operator::Unionable, index.lake().table(ANCHOR_TABLE).unwrap(), 4);
    let ids: Vec<&str> = hits.lines().map(|l| l.split('\t').nth(1).unwrap()).collect();
    assert_eq!(ids, want.hits.iter().map(|h| h.table_id.as_str()).collect::<Vec<_>>());
}

#[test]
fn bench_writes_reports() {
    let (dir, path) = demo_index();
    let out = dir.path().join("bench");
    let queries = demo_fixture("scripted.jsonl");
    stdout_ok(&[
        "bench",
        "--index",
        path.to_str().unwrap(),
        "--queries",
        queries.to_str().unwrap(),
        "--budgets",
        "1,3",
        "--out",
        out.to_str().unwrap(),
    ]);
    let report = std::fs::read_to_string(out.join("report.csv")).unwrap();
    assert_eq!(report.lines().count(), 1 + 5 * 6 * 2);
    let summary = std::fs::read_to_string(out.join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 1 + 6 * 2);
}
