//! Benchmark driver: query preparation, multi-method multi-budget runs,
//! nugget-coverage scoring, rank shares, and CSV reports.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::{self, File};
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::str::FromStr;
use std::sync::LazyLock;

use regex::{Captures, Regex};
use serde::{Deserialize, Serialize};

use crate::error::{Error, ProviderError, Result};
use crate::nuggets::{map_query, score_candidate_set, NuggetStore, QueryConstraint};
use crate::pipeline::{Engine, PipelineConfig};
use crate::provider::{strip_code_fence, PromptRunner};
use crate::text_index::{RetrievalMethod, SemanticMethod};
use crate::token::token_strings;

pub const REWRITE_PROMPT: &str = include_str!("../assets/prompts/rewrite_query.v1.txt");
pub const CLASSIFY_PROMPT: &str = include_str!("../assets/prompts/classify_query.v1.txt");
pub const REWRITE_MAP: &str = include_str!("../assets/rewrite_map.tsv");
pub const INTENT_RULES: &str = include_str!("../assets/intent_rules.tsv");
pub const DEFAULT_BUDGETS: [usize; 4] = [1, 3, 5, 10];
const PROMPT_VERSION: &str = "v1";

fn tsv_pairs(text: &str) -> Vec<(&str, &str)> {
    text.lines()
        .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
        .map(|l| {
            let (a, b) = l.split_once('\t').expect("bundled tables have two tab-separated fields");
            (a.trim(), b.trim())
        })
        .collect()
}

static REWRITES: LazyLock<BTreeMap<String, String>> = LazyLock::new(|| {
    tsv_pairs(REWRITE_MAP)
        .into_iter()
        .map(|(from, to)| (from.to_lowercase(), to.to_owned()))
        .collect()
});

static WORD: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\b[A-Za-z]+\b").expect("valid regex"));

/// The bundled substitution map, lowercased word to replacement.
pub fn rewrite_map() -> &'static BTreeMap<String, String> {
    &REWRITES
}

fn match_case(original: &str, replacement: &str) -> String {
    let mut chars = original.chars();
    let first_upper = chars.next().is_some_and(char::is_uppercase);
    if first_upper && original.chars().count() > 1 && original.chars().all(char::is_uppercase) {
        replacement.to_uppercase()
    } else if first_upper {
        let mut out = String::new();
        let mut rest = replacement.chars();
        if let Some(c) = rest.next() {
            out.extend(c.to_uppercase());
        }
        out.extend(rest);
        out
    } else {
        replacement.to_owned()
    }
}

/// Whole-word substitution of paper-oriented terms; everything else,
/// including punctuation and spacing, is left untouched.
pub fn rewrite_fallback(text: &str) -> String {
    WORD.replace_all(text, |caps: &Captures<'_>| {
        let word = &caps[0];
        match REWRITES.get(&word.to_lowercase()) {
            Some(to) => match_case(word, to),
            None => word.to_owned(),
        }
    })
    .into_owned()
}

pub fn rewrite_query(text: &str, provider: Option<&PromptRunner<'_>>) -> Result<String> {
    let Some(runner) = provider else {
        return Ok(rewrite_fallback(text));
    };
    let prompt = REWRITE_PROMPT.replace("{query}", text);
    let rewritten = runner.run("rewrite_query", PROMPT_VERSION, prompt, |reply| {
        let cleaned = strip_code_fence(reply).trim().trim_matches('"').trim().to_owned();
        if cleaned.is_empty() {
            return Err(ProviderError::invalid_response(runner.provider.name(), "empty rewrite"));
        }
        Ok((cleaned.clone(), cleaned))
    })?;
    Ok(rewritten)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Intent {
    #[serde(rename = "evidence-based")]
    EvidenceBased,
    #[serde(rename = "comparison")]
    Comparison,
    #[serde(rename = "experience")]
    Experience,
    #[serde(rename = "reason")]
    Reason,
    #[serde(rename = "instruction")]
    Instruction,
    #[serde(rename = "debate")]
    Debate,
}

impl Intent {
    pub const ALL: [Intent; 6] = [
        Self::EvidenceBased,
        Self::Comparison,
        Self::Experience,
        Self::Reason,
        Self::Instruction,
        Self::Debate,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::EvidenceBased => "evidence-based",
            Self::Comparison => "comparison",
            Self::Experience => "experience",
            Self::Reason => "reason",
            Self::Instruction => "instruction",
            Self::Debate => "debate",
        }
    }
}

impl fmt::Display for Intent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Intent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let wanted = token_strings(s).join("-");
        Intent::ALL
            .into_iter()
            .find(|i| i.as_str() == wanted)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown intent `{s}`")))
    }
}

static INTENTS: LazyLock<Vec<(Vec<String>, Intent)>> = LazyLock::new(|| {
    tsv_pairs(INTENT_RULES)
        .into_iter()
        .map(|(phrase, label)| (token_strings(phrase), label.parse().expect("bundled intent labels are valid")))
        .collect()
});

/// The bundled rule table: token phrase and the intent it signals.
pub fn intent_rules() -> &'static [(Vec<String>, Intent)] {
    &INTENTS
}

pub fn classify_fallback(text: &str) -> Intent {
    let tokens = token_strings(text);
    INTENTS
        .iter()
        .find(|(phrase, _)| tokens.windows(phrase.len()).any(|w| w == phrase.as_slice()))
        .map_or(Intent::EvidenceBased, |(_, intent)| *intent)
}

pub fn classify_query(text: &str, provider: Option<&PromptRunner<'_>>) -> Result<Intent> {
    let Some(runner) = provider else {
        return Ok(classify_fallback(text));
    };
    let prompt = CLASSIFY_PROMPT.replace("{query}", text);
    let intent = runner.run("classify_query", PROMPT_VERSION, prompt, |reply| {
        let intent: Intent = strip_code_fence(reply)
            .parse()
            .map_err(|_| ProviderError::invalid_response(runner.provider.name(), format!("not an intent label: {reply}")))?;
        Ok((intent, intent.to_string()))
    })?;
    Ok(intent)
}

/// One line of a query file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuerySpec {
    pub id: String,
    #[serde(alias = "query")]
    pub text: String,
}

/// Reads `{"id": ..., "text": ...}` records, one per line.
pub fn read_query_file(path: &Path) -> Result<Vec<QuerySpec>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::MalformedRecord {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchmarkQuery {
    pub id: String,
    pub original: String,
    pub rewritten: String,
    pub intent: Intent,
}

pub fn prepare_queries(specs: &[QuerySpec], provider: Option<&PromptRunner<'_>>) -> Result<Vec<BenchmarkQuery>> {
    specs
        .iter()
        .map(|spec| {
            let rewritten = rewrite_query(&spec.text, provider)?;
            let intent = classify_query(&rewritten, provider)?;
            Ok(BenchmarkQuery {
                id: spec.id.clone(),
                original: spec.text.clone(),
                rewritten,
                intent,
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchmarkRow {
    pub query_id: String,
    pub method: RetrievalMethod,
    pub k: usize,
    pub score: usize,
    pub rank: usize,
    /// Why the cell failed; failed cells score 0.
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub methods: Vec<RetrievalMethod>,
    pub budgets: Vec<usize>,
    /// Semantic stage of the structured methods.
    pub semantic: SemanticMethod,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            methods: RetrievalMethod::ALL.to_vec(),
            budgets: DEFAULT_BUDGETS.to_vec(),
            semantic: SemanticMethod::Dense,
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() || self.budgets.is_empty() {
            return Err(Error::InvalidConfig("benchmark needs at least one method and one budget".into()));
        }
        if self.budgets.contains(&0) {
            return Err(Error::InvalidConfig("budgets must be at least 1".into()));
        }
        Ok(())
    }
}

/// The cards `method` returns for `query` under budget `k`.
pub fn retrieve(
    engine: &Engine,
    query: &str,
    method: RetrievalMethod,
    k: usize,
    semantic: SemanticMethod,
) -> Result<Vec<String>> {
    let result = match method {
        RetrievalMethod::Dense => engine.run_unstructured(query, SemanticMethod::Dense, k)?,
        RetrievalMethod::Sparse => engine.run_unstructured(query, SemanticMethod::Sparse, k)?,
        RetrievalMethod::Hybrid => engine.run_unstructured(query, SemanticMethod::Hybrid, k)?,
        RetrievalMethod::Keyword => {
            engine.run_structured(query, &PipelineConfig::new(semantic, crate::Operator::Keyword, k))?
        }
        RetrievalMethod::Joinable => {
            engine.run_structured(query, &PipelineConfig::new(semantic, crate::Operator::Joinable, k))?
        }
        RetrievalMethod::Unionable => {
            engine.run_structured(query, &PipelineConfig::new(semantic, crate::Operator::Unionable, k))?
        }
    };
    Ok(result.cards.into_iter().map(|c| c.card_id).collect())
}

/// Competition ranks: a method's rank is one more than the number of
/// methods that scored strictly higher, so ties share the better rank.
pub fn competition_ranks(scores: &[usize]) -> Vec<usize> {
    scores
        .iter()
        .map(|s| 1 + scores.iter().filter(|o| *o > s).count())
        .collect()
}

/// Runs every (query, method, budget) cell. Constraints are derived from
/// each query's rewritten text. A failing cell scores 0, carries its
/// error, and does not stop the run. Rows are grouped by query then budget
/// and ordered by rank, then method name.
pub fn run_benchmark(
    engine: &Engine,
    store: &NuggetStore,
    queries: &[BenchmarkQuery],
    config: &BenchConfig,
    provider: Option<&PromptRunner<'_>>,
) -> Result<Vec<BenchmarkRow>> {
    config.validate()?;
    let mut rows = Vec::new();
    for query in queries {
        let constraint = map_query(&query.rewritten, provider);
        rows.extend(score_query(engine, store, query, constraint.as_ref(), config));
    }
    Ok(rows)
}

/// All rows for one query given its (possibly failed) constraint.
pub fn score_query(
    engine: &Engine,
    store: &NuggetStore,
    query: &BenchmarkQuery,
    constraint: std::result::Result<&QueryConstraint, &Error>,
    config: &BenchConfig,
) -> Vec<BenchmarkRow> {
    let mut rows = Vec::new();
    for &k in &config.budgets {
        let cells: Vec<(usize, Option<String>)> = config
            .methods
            .iter()
            .map(|&method| {
                let outcome = constraint.map_err(Error::to_string).and_then(|c| {
                    retrieve(engine, &query.rewritten, method, k, config.semantic)
                        .and_then(|cards| score_candidate_set(&cards, c, store))
                        .map_err(|e| e.to_string())
                });
                match outcome {
                    Ok(score) => (score, None),
                    Err(e) => (0, Some(e)),
                }
            })
            .collect();
        let scores: Vec<usize> = cells.iter().map(|c| c.0).collect();
        let ranks = competition_ranks(&scores);
        let mut group: Vec<BenchmarkRow> = config
            .methods
            .iter()
            .zip(cells)
            .zip(ranks)
            .map(|((&method, (score, error)), rank)| BenchmarkRow {
                query_id: query.id.clone(),
                method,
                k,
                score,
                rank,
                error,
            })
            .collect();
        group.sort_by(|a, b| a.rank.cmp(&b.rank).then_with(|| a.method.as_str().cmp(b.method.as_str())));
        rows.extend(group);
    }
    rows
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub method: RetrievalMethod,
    pub k: usize,
    pub queries: usize,
    pub mean: f64,
    pub median: f64,
    /// Fraction of queries at rank 1, 2, ... up to the number of methods.
    pub rank_share: Vec<f64>,
}

pub fn mean(values: &[usize]) -> f64 {
    values.iter().sum::<usize>() as f64 / values.len() as f64
}

pub fn median(values: &[usize]) -> f64 {
    let mut v = values.to_vec();
    v.sort_unstable();
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2] as f64
    } else {
        (v[n / 2 - 1] + v[n / 2]) as f64 / 2.0
    }
}

/// Per method and budget: mean and median score over queries, and the
/// share of queries at each rank. Summary rows follow budget order, then
/// method order of first appearance.
pub fn aggregate(rows: &[BenchmarkRow]) -> Result<Vec<SummaryRow>> {
    if rows.is_empty() {
        return Err(Error::InvalidConfig("cannot aggregate an empty benchmark".into()));
    }
    let mut methods: Vec<RetrievalMethod> = Vec::new();
    let mut budgets: Vec<usize> = Vec::new();
    for row in rows {
        if !methods.contains(&row.method) {
            methods.push(row.method);
        }
        if !budgets.contains(&row.k) {
            budgets.push(row.k);
        }
    }
    let positions = rows.iter().map(|r| r.rank).max().unwrap_or(1).max(methods.len());
    let mut out = Vec::new();
    for &k in &budgets {
        for &method in &methods {
            let cell: Vec<&BenchmarkRow> = rows.iter().filter(|r| r.k == k && r.method == method).collect();
            if cell.is_empty() {
                continue;
            }
            let scores: Vec<usize> = cell.iter().map(|r| r.score).collect();
            let mut rank_share = vec![0.0; positions];
            for r in &cell {
                rank_share[r.rank - 1] += 1.0;
            }
            for share in &mut rank_share {
                *share /= cell.len() as f64;
            }
            out.push(SummaryRow {
                method,
                k,
                queries: cell.len(),
                mean: mean(&scores),
                median: median(&scores),
                rank_share,
            });
        }
    }
    Ok(out)
}

fn csv_string(write: impl FnOnce(&mut csv::Writer<Vec<u8>>) -> Result<()>) -> Result<String> {
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    write(&mut writer)?;
    let bytes = writer.into_inner().map_err(|e| csv::Error::from(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv of utf-8 fields is utf-8"))
}

pub fn report_csv(rows: &[BenchmarkRow]) -> Result<String> {
    csv_string(|w| {
        w.write_record(["query_id", "method", "k", "score", "rank"])?;
        for r in rows {
            w.write_record([
                r.query_id.clone(),
                r.method.to_string(),
                r.k.to_string(),
                r.score.to_string(),
                r.rank.to_string(),
            ])?;
        }
        Ok(())
    })
}

pub fn failures_csv(rows: &[BenchmarkRow]) -> Result<String> {
    csv_string(|w| {
        w.write_record(["query_id", "method", "k", "error"])?;
        for r in rows {
            if let Some(e) = &r.error {
                w.write_record([r.query_id.clone(), r.method.to_string(), r.k.to_string(), e.clone()])?;
            }
        }
        Ok(())
    })
}

pub fn summary_csv(summary: &[SummaryRow]) -> Result<String> {
    let ranks = summary.iter().map(|s| s.rank_share.len()).max().unwrap_or(0);
    csv_string(|w| {
        let mut header = vec!["method".to_owned(), "k".into(), "queries".into(), "mean".into(), "median".into()];
        header.extend((1..=ranks).map(|r| format!("rank_{r}")));
        w.write_record(&header)?;
        for s in summary {
            let mut record = vec![
                s.method.to_string(),
                s.k.to_string(),
                s.queries.to_string(),
                format!("{:.6}", s.mean),
                format!("{:.6}", s.median),
            ];
            record.extend(s.rank_share.iter().map(|x| format!("{x:.6}")));
            w.write_record(&record)?;
        }
        Ok(())
    })
}

pub fn queries_csv(queries: &[BenchmarkQuery]) -> Result<String> {
    csv_string(|w| {
        w.write_record(["query_id", "original", "rewritten", "intent"])?;
        for q in queries {
            w.write_record([q.id.as_str(), &q.original, &q.rewritten, q.intent.as_str()])?;
        }
        Ok(())
    })
}

/// Writes `report.csv`, `summary.csv`, `queries.csv` and `failures.csv`
/// into `dir`, creating it if needed.
pub fn write_reports(dir: &Path, queries: &[BenchmarkQuery], rows: &[BenchmarkRow]) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let files = [
        ("report.csv", report_csv(rows)?),
        ("summary.csv", summary_csv(&aggregate(rows)?)?),
        ("queries.csv", queries_csv(queries)?),
        ("failures.csv", failures_csv(rows)?),
    ];
    for (name, body) in files {
        let path = dir.join(name);
        fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}
