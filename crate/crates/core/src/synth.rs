//! A small hand-built demo lake and its query sets.
//!
//! The lake has five topics. Each topic has one anchor card that reads like
//! the topic's query and owns two result tables, two "family" cards whose
//! prose is close to the query but which publish no tables, and two
//! partner cards with generic prose and three result tables each. Every
//! table of a topic shares the anchor's header, and no header or row label
//! is shared across topics, so unionable discovery from the anchor reaches
//! exactly the partner tables, while text similarity alone favours the
//! table-less family cards.

use crate::eval::QuerySpec;
use crate::lake::{Corpus, EvidenceTable, ModelCard, ModelLake, TableLake};

struct Topic {
    slug: &'static str,
    query: &'static str,
    anchor_text: &'static str,
    family_texts: [&'static str; 2],
    headers: [&'static str; 3],
    /// Row labels; the first two mention the queried benchmark.
    rows: [&'static str; 3],
}

const TOPICS: [Topic; 5] = [
    Topic {
        slug: "code",
        query: "Which code generation models report HumanEval results?",
        anchor_text: "Code generation model for Python. We report HumanEval results for code generation below.",
        family_texts: [
            "A code generation model. Which HumanEval results? We report code generation models results soon.",
            "Code generation models for Python; HumanEval results for code generation to be reported.",
        ],
        headers: ["Task", "pass@1", "pass@10"],
        rows: ["HumanEval", "HumanEval+", "MBPP sanitized"],
    },
    Topic {
        slug: "math",
        query: "Which math word problem models report GSM8K results?",
        anchor_text: "Math word problem solver. We report GSM8K results for math word problem models.",
        family_texts: [
            "Math word problem models. Which GSM8K results? We report math word problem sets later.",
            "A math word problem model; GSM8K results for math word problems will be reported.",
        ],
        headers: ["Problem set", "maj@8", "greedy"],
        rows: ["GSM8K", "GSM8K platinum", "SVAMP"],
    },
    Topic {
        slug: "speech",
        query: "Which speech recognition models report LibriSpeech results?",
        anchor_text: "Speech recognition model. We report LibriSpeech results for speech recognition.",
        family_texts: [
            "Speech recognition models. Which LibriSpeech results? We report speech recognition later.",
            "A speech recognition model; LibriSpeech results for speech recognition are coming.",
        ],
        headers: ["Test split", "WER clean", "WER other"],
        rows: ["LibriSpeech test", "LibriSpeech dev", "TED-LIUM 3"],
    },
    Topic {
        slug: "docs",
        query: "Which document understanding models report DocVQA scores?",
        anchor_text: "Document understanding model. We report DocVQA scores for document understanding.",
        family_texts: [
            "Document understanding models. Which DocVQA scores? Document understanding report pending.",
            "A document understanding model; DocVQA scores for document understanding will follow.",
        ],
        headers: ["Document benchmark", "ANLS", "answer EM"],
        rows: ["DocVQA val", "DocVQA test", "InfographicVQA"],
    },
    Topic {
        slug: "vision",
        query: "Which image classification models report ImageNet results?",
        anchor_text: "Image classification model. We report ImageNet results for image classification.",
        family_texts: [
            "Image classification models. Which ImageNet results? We report image classification later.",
            "An image classification model; ImageNet results for image classification are coming.",
        ],
        headers: ["Eval set", "top-1", "top-5"],
        rows: ["ImageNet-1k", "ImageNet-V2", "ObjectNet"],
    },
];

const PARTNER_TEXTS: [&str; 2] = [
    "General purpose checkpoint released by an independent lab. Training details and license are listed below.",
    "Community fine-tune of an open base checkpoint. See the evaluation section for numbers.",
];

/// Deterministic, distinct-per-table metric values.
fn value(topic: usize, table: usize, row: usize, col: usize) -> String {
    let v = 30.0 + ((topic * 131 + table * 17 + row * 7 + col * 3) % 600) as f64 / 10.0;
    format!("{v:.1}")
}

fn topic_table(topic: usize, t: &Topic, id: String, table: usize, card: &str) -> EvidenceTable {
    let values: Vec<Vec<String>> = (0..3)
        .map(|r| {
            let mut row = vec![t.rows[r].to_owned()];
            row.extend((1..3).map(|c| value(topic, table, r, c)));
            row
        })
        .collect();
    let rows: Vec<Vec<&str>> = values.iter().map(|r| r.iter().map(String::as_str).collect()).collect();
    let rows: Vec<&[&str]> = rows.iter().map(Vec::as_slice).collect();
    EvidenceTable::from_strings(id, &t.headers, &rows).with_cards([card])
}

/// 25 cards and 40 tables.
pub fn demo_lake() -> ModelLake {
    let mut cards = Vec::new();
    let mut tables = Vec::new();
    for (i, topic) in TOPICS.iter().enumerate() {
        let anchor = format!("demo/{}-anchor", topic.slug);
        let anchor_tables: Vec<String> = (0..2).map(|n| format!("{anchor}#table-{n}")).collect();
        for (n, id) in anchor_tables.iter().enumerate() {
            tables.push(topic_table(i, topic, id.clone(), n, &anchor));
        }
        cards.push(ModelCard::new(&anchor, topic.anchor_text).with_tables(&anchor_tables));

        for (f, text) in topic.family_texts.iter().enumerate() {
            cards.push(ModelCard::new(format!("demo/{}-family-{f}", topic.slug), *text));
        }

        for (p, text) in PARTNER_TEXTS.iter().enumerate() {
            let card = format!("demo/{}-partner-{p}", topic.slug);
            let ids: Vec<String> = (0..3).map(|n| format!("{card}#table-{n}")).collect();
            for (n, id) in ids.iter().enumerate() {
                tables.push(topic_table(i, topic, id.clone(), 2 + p * 3 + n, &card));
            }
            cards.push(ModelCard::new(&card, *text).with_tables(&ids));
        }
    }
    let corpus = Corpus::new(cards).expect("demo card ids are unique");
    let lake = TableLake::new(tables).expect("demo table ids are unique");
    ModelLake::assemble(corpus, lake)
}

/// One query per topic, in topic order.
pub fn scripted_queries() -> Vec<QuerySpec> {
    TOPICS
        .iter()
        .enumerate()
        .map(|(i, t)| QuerySpec {
            id: format!("s{}", i + 1),
            text: t.query.to_owned(),
        })
        .collect()
}

const STANDIN: [&str; 25] = [
    "Could you recommend papers that report HumanEval results for code generation?",
    "Which studies compare code generation models on HumanEval?",
    "How do I pick a code generation model from the literature for Python tasks?",
    "Are there publications on HumanEval pass rates of small code models?",
    "Why do code generation papers disagree on HumanEval numbers?",
    "Could you recommend papers on math word problem solving evaluated on GSM8K?",
    "Which is better for GSM8K, greedy decoding or majority voting, according to studies?",
    "Point me to articles that report GSM8K accuracy for math word problem models.",
    "Has anyone seen papers on math reasoning models that report GSM8K results in practice?",
    "Should we trust studies that only report GSM8K for math reasoning?",
    "Could you recommend papers on speech recognition evaluated on LibriSpeech?",
    "Which publications report LibriSpeech results for speech recognition models?",
    "How can I find studies on noisy speech recognition with LibriSpeech numbers?",
    "Papers comparing speech recognition models versus each other on LibriSpeech.",
    "What literature reports LibriSpeech test-other results for speech recognition?",
    "Could you recommend papers on document understanding evaluated on DocVQA?",
    "Which studies report DocVQA scores for document understanding models?",
    "Why do document understanding papers report DocVQA validation rather than test?",
    "Find articles with DocVQA results for OCR-free document models.",
    "Is it worth reading the literature on DocVQA for document understanding?",
    "Could you recommend papers on image classification evaluated on ImageNet?",
    "Which studies report ImageNet results for image classification models?",
    "Papers that compare image classification models on ImageNet top-1.",
    "How to choose an image classification model from publications with ImageNet results?",
    "Are there studies of robust image classification beyond ImageNet?",
];

/// A 25-query stand-in for a literature-search benchmark, five per topic,
/// phrased as paper requests so rewriting has something to do.
pub fn standin_queries() -> Vec<QuerySpec> {
    STANDIN
        .iter()
        .enumerate()
        .map(|(i, text)| QuerySpec {
            id: format!("q{:02}", i + 1),
            text: (*text).to_owned(),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn demo_lake_shape() {
        let lake = demo_lake();
        assert_eq!(lake.corpus.len(), 25);
        assert_eq!(lake.tables.len(), 40);
        assert!(lake.warnings.is_empty(), "{:?}", lake.warnings);
        assert!(lake.tables.iter().all(EvidenceTable::is_compact));
        assert_eq!(lake.corpus.iter().filter(|c| c.has_tables()).count(), 15);
    }

    #[test]
    fn query_sets() {
        assert_eq!(scripted_queries().len(), 5);
        let standin = standin_queries();
        assert_eq!(standin.len(), 25);
        assert_eq!(standin[0].id, "q01");
    }
}
