//! Text-only card search: sparse BM25, dense cosine, and the hybrid that
//! reranks a sparse candidate pool densely.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lake::Corpus;
use crate::provider::{EmbeddingProvider, EmbeddingVector};
use crate::token::token_strings;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SemanticMethod {
    Dense,
    Sparse,
    Hybrid,
}

impl SemanticMethod {
    pub const ALL: [SemanticMethod; 3] = [Self::Dense, Self::Sparse, Self::Hybrid];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Dense => "dense",
            Self::Sparse => "sparse",
            Self::Hybrid => "hybrid",
        }
    }
}

impl fmt::Display for SemanticMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SemanticMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dense" => Ok(Self::Dense),
            "sparse" => Ok(Self::Sparse),
            "hybrid" => Ok(Self::Hybrid),
            other => Err(Error::InvalidConfig(format!("unknown semantic method `{other}`"))),
        }
    }
}

/// Which retrieval route produced a scored card.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RetrievalMethod {
    Dense,
    Sparse,
    Hybrid,
    Keyword,
    Joinable,
    Unionable,
}

impl RetrievalMethod {
    pub const ALL: [RetrievalMethod; 6] = [
        Self::Dense,
        Self::Sparse,
        Self::Hybrid,
        Self::Keyword,
        Self::Joinable,
        Self::Unionable,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Dense => "dense",
            Self::Sparse => "sparse",
            Self::Hybrid => "hybrid",
            Self::Keyword => "keyword",
            Self::Joinable => "joinable",
            Self::Unionable => "unionable",
        }
    }
}

impl fmt::Display for RetrievalMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RetrievalMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        RetrievalMethod::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown retrieval method `{s}`")))
    }
}

impl From<SemanticMethod> for RetrievalMethod {
    fn from(m: SemanticMethod) -> Self {
        match m {
            SemanticMethod::Dense => Self::Dense,
            SemanticMethod::Sparse => Self::Sparse,
            SemanticMethod::Hybrid => Self::Hybrid,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoredCard {
    pub card_id: String,
    pub score: f64,
    pub method: RetrievalMethod,
}

/// Descending score, then ascending id.
pub fn by_score_then_id(a_score: f64, a_id: &str, b_score: f64, b_id: &str) -> Ordering {
    b_score.total_cmp(&a_score).then_with(|| a_id.cmp(b_id))
}

pub fn cosine(a: &EmbeddingVector, b: &EmbeddingVector) -> Result<f64> {
    if a.dimension() != b.dimension() {
        return Err(Error::DimensionMismatch {
            left: a.dimension(),
            right: b.dimension(),
        });
    }
    let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
    for (x, y) in a.values.iter().zip(&b.values) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return Ok(0.0);
    }
    Ok((dot / (na.sqrt() * nb.sqrt())).clamp(-1.0, 1.0))
}

pub fn embed(text: &str, provider: &dyn EmbeddingProvider) -> Result<EmbeddingVector> {
    let mut out = provider.embed_batch(&[text])?;
    out.pop()
        .ok_or_else(|| Error::InvalidConfig(format!("provider `{}` returned no vector", provider.name())))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Self { k1: 1.2, b: 0.75 }
    }
}

/// Okapi BM25 over normalized token multisets.
///
/// score(d, q) = Σ_{t ∈ distinct(q)} idf(t) · tf·(k1+1) / (tf + k1·(1 − b + b·|d|/avgdl))
/// with the non-negative idf(t) = ln(1 + (N − df + 0.5) / (df + 0.5)).
#[derive(Clone, Debug)]
pub struct Bm25Index {
    params: Bm25Params,
    term_freqs: Vec<HashMap<String, u32>>,
    doc_lens: Vec<usize>,
    doc_freq: HashMap<String, u32>,
    avg_len: f64,
}

impl Bm25Index {
    pub fn build<'a>(docs: impl IntoIterator<Item = &'a str>, params: Bm25Params) -> Self {
        let mut term_freqs = Vec::new();
        let mut doc_lens = Vec::new();
        let mut doc_freq: HashMap<String, u32> = HashMap::new();
        for doc in docs {
            let tokens = token_strings(doc);
            let mut tf: HashMap<String, u32> = HashMap::new();
            for t in &tokens {
                *tf.entry(t.clone()).or_default() += 1;
            }
            for t in tf.keys() {
                *doc_freq.entry(t.clone()).or_default() += 1;
            }
            doc_lens.push(tokens.len());
            term_freqs.push(tf);
        }
        let total: usize = doc_lens.iter().sum();
        let avg_len = if doc_lens.is_empty() {
            0.0
        } else {
            total as f64 / doc_lens.len() as f64
        };
        Self {
            params,
            term_freqs,
            doc_lens,
            doc_freq,
            avg_len,
        }
    }

    pub fn len(&self) -> usize {
        self.doc_lens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.doc_lens.is_empty()
    }

    pub fn idf(&self, term: &str) -> f64 {
        let n = self.len() as f64;
        let df = f64::from(self.doc_freq.get(term).copied().unwrap_or(0));
        (1.0 + (n - df + 0.5) / (df + 0.5)).ln()
    }

    /// Scores every document for `query`, in document order.
    pub fn scores(&self, query: &str) -> Vec<f64> {
        let mut terms = token_strings(query);
        terms.sort();
        terms.dedup();
        let Bm25Params { k1, b } = self.params;
        self.term_freqs
            .iter()
            .zip(&self.doc_lens)
            .map(|(tf, &len)| {
                let norm = if self.avg_len > 0.0 {
                    1.0 - b + b * len as f64 / self.avg_len
                } else {
                    1.0
                };
                terms
                    .iter()
                    .filter_map(|t| tf.get(t).map(|&f| (t, f64::from(f))))
                    .map(|(t, f)| self.idf(t) * f * (k1 + 1.0) / (f + k1 * norm))
                    .sum()
            })
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TextIndexConfig {
    pub bm25: Bm25Params,
    /// Sparse candidates handed to the dense reranker by hybrid search.
    pub hybrid_pool: usize,
}

impl Default for TextIndexConfig {
    fn default() -> Self {
        Self {
            bm25: Bm25Params::default(),
            hybrid_pool: 100,
        }
    }
}

/// Offset that places hybrid cards outside the sparse pool strictly below
/// every pool member (cosine lies in [-1, 1]).
const HYBRID_OUT_OF_POOL_OFFSET: f64 = 2.0;

/// Per-card semantic scores for one query under one method, in corpus order.
#[derive(Clone, Debug)]
pub struct SemanticScores {
    pub method: SemanticMethod,
    scores: Vec<f64>,
    /// Cards eligible for the method's own search result: non-zero sparse
    /// score, or membership in the hybrid pool. Dense admits everything.
    eligible: Vec<bool>,
}

impl SemanticScores {
    pub fn score(&self, position: usize) -> f64 {
        self.scores[position]
    }

    pub fn eligible(&self, position: usize) -> bool {
        self.eligible[position]
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }
}

/// Exhaustive dense and sparse indexes over a corpus.
pub struct TextIndex {
    card_ids: Vec<String>,
    embeddings: Vec<EmbeddingVector>,
    bm25: Bm25Index,
    provider: Arc<dyn EmbeddingProvider>,
    config: TextIndexConfig,
}

impl fmt::Debug for TextIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TextIndex")
            .field("cards", &self.card_ids.len())
            .field("provider", &self.provider.name())
            .field("config", &self.config)
            .finish()
    }
}

impl TextIndex {
    pub fn build(
        corpus: &Corpus,
        provider: Arc<dyn EmbeddingProvider>,
        config: TextIndexConfig,
    ) -> Result<Self> {
        let texts: Vec<&str> = corpus.iter().map(|c| c.text.as_str()).collect();
        let embeddings = if texts.is_empty() {
            Vec::new()
        } else {
            provider.embed_batch(&texts)?
        };
        if embeddings.len() != texts.len() {
            return Err(Error::InvalidConfig(format!(
                "provider `{}` returned {} vectors for {} cards",
                provider.name(),
                embeddings.len(),
                texts.len()
            )));
        }
        Ok(Self {
            card_ids: corpus.iter().map(|c| c.id.clone()).collect(),
            embeddings,
            bm25: Bm25Index::build(texts.iter().copied(), config.bm25),
            provider,
            config,
        })
    }

    pub fn config(&self) -> &TextIndexConfig {
        &self.config
    }

    pub fn provider(&self) -> &dyn EmbeddingProvider {
        self.provider.as_ref()
    }

    pub fn card_id(&self, position: usize) -> &str {
        &self.card_ids[position]
    }

    pub fn len(&self) -> usize {
        self.card_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.card_ids.is_empty()
    }

    pub fn embedding(&self, position: usize) -> &EmbeddingVector {
        &self.embeddings[position]
    }

    fn dense_scores(&self, query: &str) -> Result<Vec<f64>> {
        let q = embed(query, self.provider.as_ref())?;
        self.embeddings.iter().map(|e| cosine(&q, e)).collect()
    }

    /// Top-`limit` positions by descending score then ascending card id,
    /// restricted to `keep`.
    fn top(&self, scores: &[f64], keep: impl Fn(usize) -> bool, limit: usize) -> Vec<usize> {
        let mut positions: Vec<usize> = (0..scores.len()).filter(|&i| keep(i)).collect();
        positions.sort_by(|&a, &b| {
            by_score_then_id(scores[a], &self.card_ids[a], scores[b], &self.card_ids[b])
        });
        positions.truncate(limit);
        positions
    }

    /// Scores every card for `query`.
    ///
    /// Dense: cosine. Sparse: BM25 (zero when no query token matches).
    /// Hybrid: cosine for cards in the sparse top-pool, and cosine − 2 for
    /// every other card, so pool members always outrank non-members.
    pub fn semantic_scores(&self, method: SemanticMethod, query: &str) -> Result<SemanticScores> {
        let n = self.len();
        match method {
            SemanticMethod::Dense => Ok(SemanticScores {
                method,
                scores: self.dense_scores(query)?,
                eligible: vec![true; n],
            }),
            SemanticMethod::Sparse => {
                let scores = self.bm25.scores(query);
                let eligible = scores.iter().map(|&s| s > 0.0).collect();
                Ok(SemanticScores {
                    method,
                    scores,
                    eligible,
                })
            }
            SemanticMethod::Hybrid => {
                let sparse = self.bm25.scores(query);
                let pool = self.top(&sparse, |i| sparse[i] > 0.0, self.config.hybrid_pool);
                let mut eligible = vec![false; n];
                for &i in &pool {
                    eligible[i] = true;
                }
                let scores = self
                    .dense_scores(query)?
                    .into_iter()
                    .enumerate()
                    .map(|(i, c)| if eligible[i] { c } else { c - HYBRID_OUT_OF_POOL_OFFSET })
                    .collect();
                Ok(SemanticScores {
                    method,
                    scores,
                    eligible,
                })
            }
        }
    }

    /// Every card, best first, ignoring eligibility.
    pub fn full_ranking(&self, scores: &SemanticScores) -> Vec<usize> {
        self.top(&scores.scores, |_| true, usize::MAX)
    }

    pub fn search(&self, method: SemanticMethod, query: &str, k: usize) -> Result<Vec<ScoredCard>> {
        let scores = self.semantic_scores(method, query)?;
        Ok(self
            .top(&scores.scores, |i| scores.eligible[i], k)
            .into_iter()
            .map(|i| ScoredCard {
                card_id: self.card_ids[i].clone(),
                score: scores.scores[i],
                method: method.into(),
            })
            .collect())
    }

    pub fn search_dense(&self, query: &str, k: usize) -> Result<Vec<ScoredCard>> {
        self.search(SemanticMethod::Dense, query, k)
    }

    pub fn search_sparse(&self, query: &str, k: usize) -> Result<Vec<ScoredCard>> {
        self.search(SemanticMethod::Sparse, query, k)
    }

    pub fn search_hybrid(&self, query: &str, k: usize) -> Result<Vec<ScoredCard>> {
        self.search(SemanticMethod::Hybrid, query, k)
    }
}
