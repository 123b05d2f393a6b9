//! Random fixtures and brute-force reference implementations shared by the
//! integration and acceptance tests. The oracles deliberately avoid the
//! library's scoring code: tokenization, alignment, matching and ranking
//! are re-derived here from their definitions.

#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap};
use std::path::PathBuf;

use cardlake::lake::{Cell, Corpus, EvidenceTable, ModelCard, ModelLake, TableLake};
use cardlake::nuggets::{Attribute, AttributeConstraint, Nugget, NuggetStore, QueryConstraint};
use cardlake::pipeline::{Engine, PipelineConfig};
use cardlake::text_index::SemanticMethod;
use cardlake::Operator;
use rand::seq::IndexedRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub use rand::SeedableRng;
pub type TestRng = ChaCha8Rng;

pub fn rng(seed: u64) -> TestRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn workspace_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn fixtures_dir() -> PathBuf {
    workspace_root().join("fixtures")
}

// ---------------------------------------------------------------- generators

const WORDS: &[&str] = &[
    "alpha", "beta", "gamma", "delta", "bert", "llama", "mmlu", "squad", "glue", "accuracy", "f1", "bleu",
    "vision", "speech", "code", "math", "qa", "base", "large", "small", "Tiny", "ROUGE-L", "top-1", "wer",
    "model", "dataset", "score", "task", "split", "test", "dev", "v2",
];

const HEADERS: &[&str] = &[
    "Model", "Dataset", "Benchmark", "Task", "Accuracy", "F1", "BLEU", "Score", "Split", "Params", "Size",
    "metric", "Value", "top-1", "ROUGE-L", "",
];

fn random_cell(rng: &mut TestRng) -> Cell {
    match rng.random_range(0..10) {
        0 => Cell::Null,
        1..=4 => {
            let n: i32 = rng.random_range(0..20);
            if rng.random_bool(0.5) {
                Cell::Number(f64::from(n))
            } else {
                Cell::Number(f64::from(n) + 0.5)
            }
        }
        5..=7 => Cell::Text((*WORDS.choose(rng).unwrap()).to_owned()),
        _ => {
            let a = WORDS.choose(rng).unwrap();
            let b = WORDS.choose(rng).unwrap();
            Cell::Text(format!("{a} {b}"))
        }
    }
}

pub fn random_table(rng: &mut TestRng, id: String, max_rows: usize, max_cols: usize) -> EvidenceTable {
    let cols = rng.random_range(1..=max_cols);
    let rows = rng.random_range(0..=max_rows);
    let headers: Vec<String> = (0..cols).map(|_| (*HEADERS.choose(rng).unwrap()).to_owned()).collect();
    let rows = (0..rows).map(|_| (0..cols).map(|_| random_cell(rng)).collect()).collect();
    EvidenceTable::new(id, headers, rows)
}

/// Up to `max_tables` tables of at most 20 rows by 10 columns, each linked
/// to one placeholder card.
pub fn random_tables(rng: &mut TestRng, max_tables: usize) -> Vec<EvidenceTable> {
    let n = rng.random_range(2..=max_tables);
    (0..n)
        .map(|i| random_table(rng, format!("t{i:03}"), 20, 10).with_cards(["card"]))
        .collect()
}

fn random_text(rng: &mut TestRng, words: usize) -> String {
    (0..words).map(|_| *WORDS.choose(rng).unwrap()).collect::<Vec<_>>().join(" ")
}

/// A card corpus of at most `max_cards` and a lake of at most `max_tables`;
/// each table links to one or two cards, and some cards have no tables.
pub fn random_model_lake(rng: &mut TestRng, max_cards: usize, max_tables: usize) -> ModelLake {
    let n_cards = rng.random_range(3..=max_cards);
    let n_tables = rng.random_range(1..=max_tables);
    let card_ids: Vec<String> = (0..n_cards).map(|i| format!("org/model-{i:02}")).collect();
    let cards: Vec<ModelCard> = card_ids
        .iter()
        .map(|id| {
            let words = rng.random_range(0..12);
            ModelCard::new(id, random_text(rng, words))
        })
        .collect();
    let tables = (0..n_tables)
        .map(|i| {
            let links = rng.random_range(1..=2);
            let linked: Vec<&String> = card_ids.choose_multiple(rng, links).collect();
            random_table(rng, format!("t{i:03}"), 8, 6).with_cards(linked)
        })
        .collect();
    ModelLake::assemble(Corpus::new(cards).unwrap(), TableLake::new(tables).unwrap())
}

pub fn random_query(rng: &mut TestRng) -> String {
    let words = rng.random_range(1..5);
    random_text(rng, words)
}

/// The 20-card, 100-table ingest fixture: every card owns five compact
/// tables, one of which is also linked from the next card.
pub fn ingest_fixture() -> (Vec<ModelCard>, Vec<EvidenceTable>) {
    let mut rng = rng(20_100);
    let mut cards = Vec::new();
    let mut tables = Vec::new();
    for c in 0..20 {
        let id = format!("fixture/model-{c:02}");
        let words = rng.random_range(4..16);
        let text = random_text(&mut rng, words);
        let table_ids: Vec<String> = (0..5).map(|t| format!("{id}#table-{t}")).collect();
        for tid in &table_ids {
            let mut table = random_table(&mut rng, tid.clone(), 12, 6).with_cards([id.as_str()]);
            if tid.ends_with("table-0") && c > 0 {
                table.card_ids.push(format!("fixture/model-{:02}", c - 1));
            }
            tables.push(table);
        }
        cards.push(ModelCard::new(id, text).with_tables(table_ids));
    }
    (cards, tables)
}

/// A card and table reproducing the luisra/Kimi-K2-Instruct-4bit example.
pub fn kimi_fixture() -> (ModelCard, EvidenceTable) {
    let id = "luisra/Kimi-K2-Instruct-4bit";
    let card = ModelCard::new(
        id,
        "# luisra/Kimi-K2-Instruct-4bit\n\nThis model was converted to MLX format from \
         moonshotai/Kimi-K2-Instruct using mlx-lm with 4-bit quantization.",
    )
    .with_tags([
        "mlx",
        "safetensors",
        "kimi_k2",
        "text-generation",
        "conversational",
        "custom_code",
        "4-bit",
        "base_model:moonshotai/Kimi-K2-Instruct",
        "base_model:quantized:moonshotai/Kimi-K2-Instruct",
        "license:other",
        "region:us",
    ])
    .with_tables([format!("{id}#table-0")]);
    let table = EvidenceTable::from_strings(
        format!("{id}#table-0"),
        &["Benchmark", "Metric", "Kimi K2 Instruct"],
        &[
            &["LiveCodeBench v6", "Pass@1", "0.537"],
            &["OJBench", "Pass@1", "0.271"],
            &["MultiPL-E", "Pass@1", "0.857"],
            &["SWE-bench Verified", "Single Attempt Accuracy", "0.658"],
        ],
    )
    .with_cards([id]);
    (card, table)
}

/// A random non-empty nugget over a small value space so that collisions,
/// including case and punctuation variants, are common.
pub fn random_nugget(rng: &mut TestRng, card: &str) -> Nugget {
    const VALUES: [&[&str]; 6] = [
        &["org/a", "org/b", "ORG/A"],
        &["base-x", "base y"],
        &["quantization", "lora", "distillation"],
        &["LiveCodeBench v6", "livecodebench-v6", "MMLU", "GSM8K"],
        &["Pass@1", "accuracy", "pass 1"],
        &["0.537", "4-bit", "70"],
    ];
    loop {
        let mut n = Nugget::for_card(card);
        for (a, values) in Attribute::ALL.into_iter().zip(VALUES) {
            if rng.random_bool(0.5) {
                n.set(a, Some((*values.choose(rng).unwrap()).to_owned()));
            }
        }
        if Attribute::ALL.iter().any(|&a| n.get(a).is_some()) {
            return n;
        }
    }
}

pub fn random_constraint(rng: &mut TestRng) -> QueryConstraint {
    const TERMS: [&[&str]; 6] = [
        &["org"],
        &["base"],
        &["quantization", "lora"],
        &["livecodebench", "mmlu", "v6"],
        &["pass", "1", "accuracy"],
        &["bit", "4"],
    ];
    let mut c = QueryConstraint::unconstrained("random");
    for (a, terms) in Attribute::ALL.into_iter().zip(TERMS) {
        let constraint = match rng.random_range(0..4) {
            0 | 1 => AttributeConstraint::Irrelevant,
            2 => AttributeConstraint::RequiredNonNull,
            _ => AttributeConstraint::MustContain(vec![(*terms.choose(rng).unwrap()).to_owned()]),
        };
        c = c.with(a, constraint);
    }
    c
}

// ------------------------------------------------------------------ oracles

pub fn tokens(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_owned)
        .collect()
}

pub fn key(text: &str) -> String {
    tokens(text).join(" ")
}

pub fn cell_text(cell: &Cell) -> String {
    match cell {
        Cell::Null => String::new(),
        Cell::Number(x) => format!("{x}"),
        Cell::Text(s) => s.clone(),
    }
}

fn column(table: &EvidenceTable, j: usize) -> Vec<&Cell> {
    table.rows.iter().map(|r| &r[j]).collect()
}

fn numeric_only(cells: &[&Cell]) -> bool {
    let non_null: Vec<&&Cell> = cells.iter().filter(|c| !matches!(c, Cell::Null)).collect();
    !non_null.is_empty() && non_null.iter().all(|c| matches!(c, Cell::Number(_)))
}

fn value_set(cells: &[&Cell]) -> BTreeSet<String> {
    cells
        .iter()
        .filter(|c| !matches!(c, Cell::Null))
        .map(|c| key(&cell_text(c)))
        .filter(|k| !k.is_empty())
        .collect()
}

/// Keeps positive scores, orders by score descending then id ascending,
/// and cuts at `k`.
pub fn rank_oracle(mut scored: Vec<(String, usize)>, k: usize) -> Vec<(String, usize)> {
    scored.retain(|(_, s)| *s > 0);
    scored.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    scored.truncate(k);
    scored
}

pub fn keyword_oracle(tables: &[EvidenceTable], anchor: &EvidenceTable, k: usize) -> Vec<(String, usize)> {
    let mut query: Vec<String> = anchor.headers.iter().flat_map(|h| tokens(h)).collect();
    for row in &anchor.rows {
        if let Some(c) = row.first() {
            query.extend(tokens(&cell_text(c)));
        }
    }
    query.sort();
    query.dedup();
    let scored = tables
        .iter()
        .filter(|t| t.id != anchor.id)
        .map(|t| {
            let mut bag: Vec<String> = t.headers.iter().flat_map(|h| tokens(h)).collect();
            for cell in t.rows.iter().flatten() {
                bag.extend(tokens(&cell_text(cell)));
            }
            let score = bag.iter().filter(|tok| query.contains(tok)).count();
            (t.id.clone(), score)
        })
        .collect();
    rank_oracle(scored, k)
}

pub fn joinable_oracle(tables: &[EvidenceTable], anchor: &EvidenceTable, k: usize) -> Vec<(String, usize)> {
    if anchor.headers.is_empty() {
        return Vec::new();
    }
    let first = column(anchor, 0);
    if numeric_only(&first) {
        return Vec::new();
    }
    let keys = value_set(&first);
    let scored = tables
        .iter()
        .filter(|t| t.id != anchor.id)
        .map(|t| {
            let best = (0..t.headers.len())
                .map(|j| column(t, j))
                .filter(|c| !numeric_only(c))
                .map(|c| value_set(&c).intersection(&keys).count())
                .max()
                .unwrap_or(0);
            (t.id.clone(), best)
        })
        .collect();
    rank_oracle(scored, k)
}

/// What alignment looks at in one column, recomputed from the raw cells.
pub struct ColumnFacts {
    header: String,
    numeric_only: bool,
    values: BTreeSet<String>,
}

pub fn column_facts(table: &EvidenceTable) -> Vec<ColumnFacts> {
    (0..table.headers.len())
        .map(|j| {
            let cells = column(table, j);
            ColumnFacts {
                header: key(&table.headers[j]),
                numeric_only: numeric_only(&cells),
                values: value_set(&cells),
            }
        })
        .collect()
}

pub fn aligned(a: &ColumnFacts, b: &ColumnFacts) -> bool {
    if !a.header.is_empty() && a.header == b.header {
        return true;
    }
    if a.numeric_only || b.numeric_only || a.values.is_empty() || b.values.is_empty() {
        return false;
    }
    let inter = a.values.intersection(&b.values).count();
    let union = a.values.union(&b.values).count();
    // Jaccard >= 0.2, in integers
    inter * 5 >= union
}

/// Largest one-to-one column alignment, by dynamic programming over the
/// reachable subsets of used candidate columns.
pub fn matching_oracle(a: &[ColumnFacts], b: &[ColumnFacts]) -> usize {
    assert!(b.len() <= 32, "subset dynamic programming needs few columns");
    let mut reachable: BTreeSet<u32> = BTreeSet::from([0]);
    for col in a {
        let mut next = reachable.clone();
        for &mask in &reachable {
            for (j, other) in b.iter().enumerate() {
                if mask & (1 << j) == 0 && aligned(col, other) {
                    next.insert(mask | (1 << j));
                }
            }
        }
        reachable = next;
    }
    reachable.iter().map(|m| m.count_ones() as usize).max().unwrap_or(0)
}

pub fn unionable_oracle(tables: &[EvidenceTable], anchor: &EvidenceTable, k: usize) -> Vec<(String, usize)> {
    let anchor_facts = column_facts(anchor);
    let scored = tables
        .iter()
        .filter(|t| t.id != anchor.id)
        .map(|t| (t.id.clone(), matching_oracle(&anchor_facts, &column_facts(t))))
        .collect();
    rank_oracle(scored, k)
}

pub fn operator_oracle(op: Operator, tables: &[EvidenceTable], anchor: &EvidenceTable, k: usize) -> Vec<(String, usize)> {
    match op {
        Operator::Keyword => keyword_oracle(tables, anchor, k),
        Operator::Joinable => joinable_oracle(tables, anchor, k),
        Operator::Unionable => unionable_oracle(tables, anchor, k),
    }
}

/// Straight-line structured retrieval: anchor, its tables, brute-force
/// discovery, representative cards, rerank, cut. Semantic scores come from
/// the engine's text index; everything after that is recomputed here.
/// Returns (card id, supporting table ids) in rank order.
pub fn structured_oracle(
    engine: &Engine,
    query: &str,
    semantic: SemanticMethod,
    op: Operator,
    k: usize,
) -> Option<Vec<(String, Vec<String>)>> {
    let config = PipelineConfig::new(semantic, op, k);
    let lake = engine.lake();
    let scores = engine.text().semantic_scores(semantic, query).unwrap();
    let score: HashMap<&str, f64> = lake
        .corpus
        .iter()
        .enumerate()
        .map(|(i, c)| (c.id.as_str(), scores.score(i)))
        .collect();
    let better = |a: &str, b: &str| {
        let (sa, sb) = (score[a], score[b]);
        sa > sb || (sa == sb && a < b)
    };

    let mut anchor: Option<&ModelCard> = None;
    for card in lake.corpus.iter().filter(|c| !c.table_ids.is_empty()) {
        if anchor.is_none_or(|best| better(&card.id, &best.id)) {
            anchor = Some(card);
        }
    }
    let anchor = anchor?;

    let tables = lake.tables.tables();
    let mut retrieved: Vec<&str> = Vec::new();
    for seed_id in &anchor.table_ids {
        let seed = lake.tables.get(seed_id).unwrap();
        for (id, _) in operator_oracle(op, tables, seed, config.discovery_k) {
            let id = lake.tables.get(&id).unwrap().id.as_str();
            if !retrieved.contains(&id) {
                retrieved.push(id);
            }
        }
    }

    let mut cards: Vec<(String, Vec<String>)> = Vec::new();
    for id in retrieved {
        let table = lake.tables.get(id).unwrap();
        let mut rep = table.card_ids[0].as_str();
        for c in &table.card_ids[1..] {
            if better(c, rep) {
                rep = c;
            }
        }
        match cards.iter_mut().find(|(c, _)| c == rep) {
            Some((_, support)) => support.push(id.to_owned()),
            None => cards.push((rep.to_owned(), vec![id.to_owned()])),
        }
    }
    // insertion sort keeps the reference obviously correct
    let mut ordered: Vec<(String, Vec<String>)> = Vec::new();
    for entry in cards {
        let at = ordered
            .iter()
            .position(|(c, _)| better(&entry.0, c))
            .unwrap_or(ordered.len());
        ordered.insert(at, entry);
    }
    ordered.truncate(k);
    Some(ordered)
}

fn accepts(constraint: &AttributeConstraint, value: Option<&str>) -> bool {
    let toks = value.map(tokens).unwrap_or_default();
    match constraint {
        AttributeConstraint::Irrelevant => true,
        AttributeConstraint::RequiredNonNull => !toks.is_empty(),
        AttributeConstraint::MustContain(terms) => !toks.is_empty() && terms.iter().all(|t| toks.contains(t)),
    }
}

/// Enumerates every nugget of every listed card, keeps those satisfying
/// the constraint, and counts distinct normalized six-tuples.
pub fn score_oracle(cards: &[&str], constraint: &QueryConstraint, store: &NuggetStore) -> usize {
    let mut seen: Vec<Vec<String>> = Vec::new();
    for card in cards {
        for n in store.get(card).expect("card in store") {
            let ok = Attribute::ALL.into_iter().all(|a| accepts(constraint.get(a), n.get(a)));
            if !ok {
                continue;
            }
            let tuple: Vec<String> = Attribute::ALL
                .into_iter()
                .map(|a| n.get(a).map(key).unwrap_or_default())
                .collect();
            if !seen.contains(&tuple) {
                seen.push(tuple);
            }
        }
    }
    seen.len()
}

/// Non-null cell values of a grid as a sorted multiset of display strings.
pub fn nonnull_multiset<'a>(rows: impl IntoIterator<Item = &'a Vec<Cell>>) -> Vec<String> {
    let mut out: Vec<String> = rows
        .into_iter()
        .flatten()
        .filter(|c| !matches!(c, Cell::Null))
        .map(cell_text)
        .collect();
    out.sort();
    out
}

// ----------------------------------------------------------------- fixtures

fn jsonl<T: serde::Serialize>(records: &[T]) -> String {
    records
        .iter()
        .map(|r| serde_json::to_string(r).expect("fixtures serialize") + "\n")
        .collect()
}

/// Every checked-in fixture file, as (path relative to `fixtures/`, body).
pub fn fixture_files() -> Vec<(&'static str, String)> {
    let demo = cardlake::synth::demo_lake();
    let (ingest_cards, ingest_tables) = ingest_fixture();
    let (kimi_card, kimi_table) = kimi_fixture();
    vec![
        ("demo/cards.jsonl", jsonl(demo.corpus.cards())),
        ("demo/tables.jsonl", jsonl(demo.tables.tables())),
        ("demo/queries.jsonl", jsonl(&cardlake::synth::standin_queries())),
        ("demo/scripted.jsonl", jsonl(&cardlake::synth::scripted_queries())),
        ("ingest/cards.jsonl", jsonl(&ingest_cards)),
        ("ingest/tables.jsonl", jsonl(&ingest_tables)),
        ("kimi/cards.jsonl", jsonl(&[kimi_card])),
        ("kimi/tables.jsonl", jsonl(&[kimi_table])),
    ]
}
