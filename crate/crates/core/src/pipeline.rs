//! The two retrieval pipelines over one immutable lake.
//!
//! Unstructured: query → text index → cards.
//! Structured: query → anchor card(s) → seed tables → discovery → one
//! representative card per retrieved table → semantic rerank → top-k.

use std::collections::HashSet;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::discovery::{DiscoveryConfig, DiscoveryIndex, Operator};
use crate::error::{Error, Result};
use crate::lake::{EvidenceTable, ModelCard, ModelLake};
use crate::provider::EmbeddingProvider;
use crate::text_index::{by_score_then_id, SemanticMethod, SemanticScores, TextIndex, TextIndexConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub semantic: SemanticMethod,
    pub operator: Operator,
    pub k: usize,
    /// Candidates kept per seed table.
    pub discovery_k: usize,
    pub anchor_count: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            semantic: SemanticMethod::Dense,
            operator: Operator::Unionable,
            k: 10,
            discovery_k: 20,
            anchor_count: 1,
        }
    }
}

impl PipelineConfig {
    pub fn new(semantic: SemanticMethod, operator: Operator, k: usize) -> Self {
        Self {
            semantic,
            operator,
            k,
            discovery_k: PipelineConfig::default().discovery_k.max(k),
            ..PipelineConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidConfig("k must be at least 1".into()));
        }
        if self.discovery_k < self.k {
            return Err(Error::InvalidConfig(format!(
                "discovery_k ({}) must be at least k ({})",
                self.discovery_k, self.k
            )));
        }
        if self.anchor_count == 0 {
            return Err(Error::InvalidConfig("anchor_count must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankedCard {
    pub card_id: String,
    pub score: f64,
    /// Retrieved tables this card represents; empty for text-only results.
    pub supporting_tables: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RetrievalResult {
    pub query: String,
    /// `dense`, `sparse`, `hybrid`, or the discovery operator name.
    pub method: String,
    pub semantic: SemanticMethod,
    pub cards: Vec<RankedCard>,
    /// Anchor cards, structured pipeline only.
    #[serde(default)]
    pub anchors: Vec<String>,
    #[serde(default)]
    pub seed_tables: Vec<String>,
    /// Tables returned by discovery, in merge order.
    #[serde(default)]
    pub retrieved_tables: Vec<String>,
    #[serde(default)]
    pub flags: Vec<String>,
}

impl RetrievalResult {
    pub fn card_ids(&self) -> Vec<&str> {
        self.cards.iter().map(|c| c.card_id.as_str()).collect()
    }

    pub fn anchor(&self) -> Option<&str> {
        self.anchors.first().map(String::as_str)
    }
}

/// Everything a query needs: the lake plus its text and discovery indexes.
#[derive(Debug)]
pub struct Engine {
    lake: ModelLake,
    text: TextIndex,
    discovery: DiscoveryIndex,
}

impl Engine {
    pub fn build(
        lake: ModelLake,
        provider: Arc<dyn EmbeddingProvider>,
        text_config: TextIndexConfig,
        discovery_config: DiscoveryConfig,
    ) -> Result<Self> {
        let text = TextIndex::build(&lake.corpus, provider, text_config)?;
        let discovery = DiscoveryIndex::build(&lake.tables, discovery_config);
        Ok(Self {
            lake,
            text,
            discovery,
        })
    }

    pub fn lake(&self) -> &ModelLake {
        &self.lake
    }

    pub fn text(&self) -> &TextIndex {
        &self.text
    }

    pub fn discovery(&self) -> &DiscoveryIndex {
        &self.discovery
    }

    pub fn run_unstructured(&self, query: &str, method: SemanticMethod, k: usize) -> Result<RetrievalResult> {
        if k == 0 {
            return Err(Error::InvalidConfig("k must be at least 1".into()));
        }
        let cards = self
            .text
            .search(method, query, k)?
            .into_iter()
            .map(|c| RankedCard {
                card_id: c.card_id,
                score: c.score,
                supporting_tables: Vec::new(),
            })
            .collect();
        Ok(RetrievalResult {
            query: query.to_owned(),
            method: method.as_str().to_owned(),
            semantic: method,
            cards,
            anchors: Vec::new(),
            seed_tables: Vec::new(),
            retrieved_tables: Vec::new(),
            flags: Vec::new(),
        })
    }

    fn score_of(&self, scores: &SemanticScores, card_id: &str) -> f64 {
        let pos = self
            .lake
            .corpus
            .position(card_id)
            .expect("assembled lakes only link to known cards");
        scores.score(pos)
    }

    /// The first `count` cards of the full semantic ranking that have at
    /// least one table.
    fn anchors_from(&self, scores: &SemanticScores, count: usize) -> Result<Vec<&ModelCard>> {
        let anchors: Vec<&ModelCard> = self
            .text
            .full_ranking(scores)
            .into_iter()
            .map(|pos| &self.lake.corpus.cards()[pos])
            .filter(|card| card.has_tables())
            .take(count)
            .collect();
        if anchors.is_empty() {
            return Err(Error::AnchorNotFound);
        }
        Ok(anchors)
    }

    /// Highest-ranked card under `method` that has at least one table.
    pub fn select_anchor(&self, query: &str, method: SemanticMethod) -> Result<&ModelCard> {
        let scores = self.text.semantic_scores(method, query)?;
        Ok(self.anchors_from(&scores, 1)?[0])
    }

    fn representative<'a>(&self, table: &'a EvidenceTable, scores: &SemanticScores) -> &'a str {
        table
            .card_ids
            .iter()
            .map(|id| (id.as_str(), self.score_of(scores, id)))
            .min_by(|a, b| by_score_then_id(a.1, a.0, b.1, b.0))
            .map(|(id, _)| id)
            .expect("assembled tables link to at least one card")
    }

    /// The card linked to `table` that is most similar to the query; ties go
    /// to the smaller card id.
    pub fn map_table_to_card(&self, table: &EvidenceTable, query: &str, method: SemanticMethod) -> Result<String> {
        if table.card_ids.is_empty() {
            return Err(Error::InvalidTable {
                table: table.id.clone(),
                reason: "no linked cards".into(),
            });
        }
        for id in &table.card_ids {
            self.lake.card(id)?;
        }
        let scores = self.text.semantic_scores(method, query)?;
        Ok(self.representative(table, &scores).to_owned())
    }

    pub fn run_structured(&self, query: &str, config: &PipelineConfig) -> Result<RetrievalResult> {
        config.validate()?;
        let scores = self.text.semantic_scores(config.semantic, query)?;
        let anchors = self.anchors_from(&scores, config.anchor_count)?;

        let mut seed_tables: Vec<&EvidenceTable> = Vec::new();
        let mut seen = HashSet::new();
        for anchor in &anchors {
            for table in self.lake.tables_of(anchor) {
                if seen.insert(table.id.as_str()) {
                    seed_tables.push(table);
                }
            }
        }

        let mut flags = Vec::new();
        let mut retrieved: Vec<&EvidenceTable> = Vec::new();
        let mut seen = HashSet::new();
        for seed in &seed_tables {
            let found = self.discovery.discover(config.operator, seed, config.discovery_k);
            if found.empty_query {
                flags.push(format!("seed table `{}` produced an empty {} query", seed.id, config.operator));
            }
            for hit in found.hits {
                if seen.insert(hit.table_id.clone()) {
                    retrieved.push(self.lake.table(&hit.table_id)?);
                }
            }
        }

        // One representative card per retrieved table, merged per card.
        let mut candidates: Vec<RankedCard> = Vec::new();
        for table in &retrieved {
            let card_id = self.representative(table, &scores);
            match candidates.iter_mut().find(|c| c.card_id == card_id) {
                Some(existing) => existing.supporting_tables.push(table.id.clone()),
                None => candidates.push(RankedCard {
                    card_id: card_id.to_owned(),
                    score: self.score_of(&scores, card_id),
                    supporting_tables: vec![table.id.clone()],
                }),
            }
        }
        candidates.sort_by(|a, b| by_score_then_id(a.score, &a.card_id, b.score, &b.card_id));
        candidates.truncate(config.k);
        if candidates.is_empty() {
            flags.push("discovery returned no tables".to_owned());
        }

        Ok(RetrievalResult {
            query: query.to_owned(),
            method: config.operator.as_str().to_owned(),
            semantic: config.semantic,
            cards: candidates,
            anchors: anchors.iter().map(|c| c.id.clone()).collect(),
            seed_tables: seed_tables.iter().map(|t| t.id.clone()).collect(),
            retrieved_tables: retrieved.iter().map(|t| t.id.clone()).collect(),
            flags,
        })
    }
}
