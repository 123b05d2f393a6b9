#![allow(dead_code)]

use std::path::{Path, PathBuf};

use cardlake_cli::index::{ingest, Index, IngestOptions};
use tempfile::TempDir;

pub fn demo_fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/demo").join(name)
}

/// An index built from the demo fixture in a fresh directory.
pub fn demo_index() -> (TempDir, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("index");
    ingest(
        &demo_fixture("cards.jsonl"),
        &demo_fixture("tables.jsonl"),
        &out,
        &IngestOptions { markdown_tables: false },
    )
    .unwrap();
    (dir, out)
}

pub fn open(path: &Path) -> Index {
    Index::open(path).unwrap()
}

pub const QUERY: &str = "Which code generation models report HumanEval results?";
pub const ANCHOR_TABLE: &str = "demo/code-anchor#table-0";
pub const OTHER_TABLES: [&str; 2] = ["demo/code-partner-0#table-0", "demo/math-anchor#table-1"];
