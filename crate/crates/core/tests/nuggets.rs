mod common;

use cardlake::lake::{Cell, EvidenceTable, ModelCard};
use cardlake::nuggets::{
    extract_fallback, map_query_fallback, matches, score_candidate_set, Attribute, AttributeConstraint, Nugget,
    NuggetStore, QueryConstraint,
};
use common::{key, random_constraint, random_nugget, rng, score_oracle, workspace_root};
use rand::Rng;

fn nugget(card: &str, values: [Option<&str>; 6]) -> Nugget {
    let mut n = Nugget::for_card(card);
    for (a, v) in Attribute::ALL.into_iter().zip(values) {
        n.set(a, v.map(str::to_owned));
    }
    n
}

#[test]
fn metric_table_yields_one_nugget_per_row_and_metric_column() {
    let card = ModelCard::new("org/tiny", "A tiny model.");
    let table = EvidenceTable::from_strings(
        "org/tiny#table-0",
        &["Dataset", "accuracy", "F1"],
        &[&["SQuAD", "81.0", "88.2"], &["BoolQ", "79.5", "80.1"]],
    );
    let got: Vec<_> = extract_fallback(&card, &[&table]).iter().map(Nugget::key).collect();
    let want: Vec<_> = [
        ["SQuAD", "accuracy", "81.0"],
        ["SQuAD", "F1", "88.2"],
        ["BoolQ", "accuracy", "79.5"],
        ["BoolQ", "F1", "80.1"],
    ]
    .iter()
    .map(|[d, m, v]| {
        // numeric cells carry their canonical rendering, so "81.0" reads "81"
        let v = Cell::parse(v).to_string();
        nugget("org/tiny", [Some("org/tiny"), None, None, Some(d), Some(m), Some(&v)]).key()
    })
    .collect();
    assert_eq!(got, want);
}

#[test]
fn bare_card_yields_nothing() {
    assert!(extract_fallback(&ModelCard::new("org/bare", "no evidence here"), &[]).is_empty());
}

#[test]
fn three_card_score_counts_distinct_projections() {
    let q = QueryConstraint::unconstrained("q").with(Attribute::Dataset, AttributeConstraint::must_contain(["livecodebench"]));
    let mut store = NuggetStore::new();
    let shared = [None, None, None, Some("LiveCodeBench v6"), Some("Pass@1"), Some("0.537")];
    store
        .insert("a", vec![nugget("a", shared), nugget("a", [None, None, None, Some("LiveCodeBench"), Some("Pass@1"), Some("0.4")])])
        .unwrap();
    store
        .insert(
            "b",
            vec![
                nugget("b", [None, None, None, Some("livecodebench-v6"), Some("pass@1"), Some("0.537")]),
                nugget("b", [None, None, None, Some("LiveCodeBench v5"), Some("Pass@1"), Some("0.5")]),
                nugget("b", [None, None, None, Some("MMLU"), Some("acc"), Some("70")]),
            ],
        )
        .unwrap();
    store
        .insert("c", vec![nugget("c", shared), nugget("c", [None, None, None, Some("LiveCodeBench v4"), None, None])])
        .unwrap();
    // matching projections: a0, a1, b0 (= a0), b1, c0 (= a0), c1; distinct: 4
    let cards = ["a", "b", "c"];
    assert_eq!(score_candidate_set(&cards, &q, &store).unwrap(), 4);
    assert_eq!(score_oracle(&cards, &q, &store), 4);
    assert_eq!(score_candidate_set::<&str>(&[], &q, &store).unwrap(), 0);
    assert!(score_candidate_set(&["a", "missing"], &q, &store).is_err());
}

#[test]
fn livecodebench_query_follows_the_lexicon_file() {
    let lexicon = std::fs::read_to_string(workspace_root().join("crates/core/assets/query_lexicon.tsv")).unwrap();
    let line = lexicon
        .lines()
        .find(|l| l.split('\t').next() == Some("livecodebench"))
        .expect("lexicon has a livecodebench entry");
    let fields: Vec<&str> = line.split('\t').collect();
    assert_eq!(fields[1], "dataset");
    let c = map_query_fallback("models evaluated on LiveCodeBench").unwrap();
    assert_eq!(c.get(Attribute::Dataset), &AttributeConstraint::must_contain(fields[2].split_whitespace()));
    assert_eq!(c.get(Attribute::Dataset), &AttributeConstraint::MustContain(vec!["livecodebench".into()]));
}

#[test]
fn token_containment_ignores_case_and_punctuation() {
    let n = nugget("x", [None, None, None, Some("LiveCodeBench v6"), None, None]);
    let c = QueryConstraint::unconstrained("q").with(Attribute::Dataset, AttributeConstraint::must_contain(["livecodebench", "v6"]));
    assert!(matches(&n, &c));
    let c = QueryConstraint::unconstrained("q").with(Attribute::Dataset, AttributeConstraint::must_contain(["livecode"]));
    assert!(!matches(&n, &c), "containment is token-level, not substring");
    let c = QueryConstraint::unconstrained("q").with(Attribute::MetricName, AttributeConstraint::RequiredNonNull);
    assert!(!matches(&n, &c));
}

#[test]
fn score_is_monotone_duplicate_invariant_and_bounded() {
    let mut rng = rng(61);
    for _ in 0..200 {
        let mut store = NuggetStore::new();
        let cards: Vec<String> = (0..rng.random_range(1..6)).map(|i| format!("c{i}")).collect();
        for c in &cards {
            let ns = (0..rng.random_range(0..5)).map(|_| random_nugget(&mut rng, c)).collect();
            store.insert(c, ns).unwrap();
        }
        let constraint = random_constraint(&mut rng);
        let refs: Vec<&str> = cards.iter().map(String::as_str).collect();
        let mut prev = 0;
        for n in 0..=refs.len() {
            let s = score_candidate_set(&refs[..n], &constraint, &store).unwrap();
            assert_eq!(s, score_oracle(&refs[..n], &constraint, &store));
            assert!(s >= prev);
            prev = s;
        }
        let mut doubled = refs.clone();
        doubled.extend(&refs);
        assert_eq!(score_candidate_set(&doubled, &constraint, &store).unwrap(), prev);
        let distinct: std::collections::BTreeSet<Vec<String>> = refs
            .iter()
            .flat_map(|c| store.get(c).unwrap())
            .map(|n| Attribute::ALL.iter().map(|&a| n.get(a).map(key).unwrap_or_default()).collect())
            .collect();
        assert!(prev <= distinct.len());
    }
}

#[test]
fn relaxing_a_constraint_never_rejects_a_match() {
    let mut rng = rng(62);
    for _ in 0..500 {
        let n = random_nugget(&mut rng, "c");
        let c = random_constraint(&mut rng);
        if !matches(&n, &c) {
            continue;
        }
        for a in Attribute::ALL {
            let relaxed = match c.get(a) {
                AttributeConstraint::MustContain(_) => AttributeConstraint::RequiredNonNull,
                AttributeConstraint::RequiredNonNull => AttributeConstraint::Irrelevant,
                AttributeConstraint::Irrelevant => continue,
            };
            assert!(matches(&n, &c.clone().with(a, relaxed)));
        }
    }
}

#[test]
fn store_is_append_only_and_round_trips() {
    let mut store = NuggetStore::new();
    let first = vec![nugget("a", [Some("a"), None, None, Some("MMLU"), Some("acc"), Some("70")])];
    store.insert("a", first.clone()).unwrap();
    store.insert("b", vec![nugget("b", [Some("b"), Some("a"), None, None, None, None])]).unwrap();
    assert_eq!(store.get("a").unwrap(), &first[..]);
    assert!(store.insert("a", Vec::new()).is_err());

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("nuggets.jsonl");
    store.write(&path).unwrap();
    let back = NuggetStore::read(&path).unwrap();
    assert_eq!(back.get("a"), store.get("a"));
    assert_eq!(back.get("b"), store.get("b"));
}
