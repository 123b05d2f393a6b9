//! Read-only operations shared by the command line and the HTTP service,
//! so both surfaces return the same structures for the same request.

use std::collections::BTreeSet;
use std::fmt;

use cardlake::discovery::Discovery;
use cardlake::error::Error;
use cardlake::integration::IntegratedTable;
use cardlake::lake::{EvidenceTable, ModelCard};
use cardlake::nuggets::{map_query, matches, score_candidate_set, Nugget};
use cardlake::{integrate_all, Operator, PipelineConfig, QueryConstraint, RetrievalResult, SemanticMethod};
use serde::{Deserialize, Serialize};

use crate::index::Index;

pub const DEFAULT_K: usize = 10;

#[derive(Debug, PartialEq, Eq)]
pub enum ApiError {
    NotFound(String),
    BadRequest(String),
    Internal(String),
}

impl fmt::Display for ApiError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::NotFound(m) | Self::BadRequest(m) | Self::Internal(m) => f.write_str(m),
        }
    }
}

impl std::error::Error for ApiError {}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let message = e.to_string();
        match e {
            Error::UnknownCard(_) | Error::UnknownTable(_) | Error::MissingNuggets(_) | Error::AnchorNotFound => {
                Self::NotFound(message)
            }
            Error::InvalidConfig(_) | Error::EmptyQuery(_) | Error::SingleColumnTranspose(_) => Self::BadRequest(message),
            _ => Self::Internal(message),
        }
    }
}

pub type ApiResult<T> = Result<T, ApiError>;

fn nonempty(query: &str) -> ApiResult<&str> {
    let q = query.trim();
    if q.is_empty() {
        return Err(ApiError::BadRequest("query must not be empty".into()));
    }
    Ok(q)
}

pub fn search(index: &Index, query: &str, method: SemanticMethod, k: usize) -> ApiResult<RetrievalResult> {
    Ok(index.engine.run_unstructured(nonempty(query)?, method, k)?)
}

pub fn pipeline(index: &Index, query: &str, config: &PipelineConfig) -> ApiResult<RetrievalResult> {
    Ok(index.engine.run_structured(nonempty(query)?, config)?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscoverResponse {
    pub anchor_table: String,
    pub operator: Operator,
    pub k: usize,
    #[serde(flatten)]
    pub discovery: Discovery,
}

pub fn discover(index: &Index, anchor_table: &str, operator: Operator, k: usize) -> ApiResult<DiscoverResponse> {
    if k == 0 {
        return Err(ApiError::BadRequest("k must be at least 1".into()));
    }
    let anchor = index.lake().table(anchor_table)?;
    Ok(DiscoverResponse {
        anchor_table: anchor.id.clone(),
        operator,
        k,
        discovery: index.engine.discovery().discover(operator, anchor, k),
    })
}

pub fn table(index: &Index, id: &str) -> ApiResult<EvidenceTable> {
    Ok(index.lake().table(id)?.clone())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CardResponse {
    pub card: ModelCard,
    pub tables: Vec<EvidenceTable>,
    pub nuggets: Vec<Nugget>,
}

pub fn card(index: &Index, id: &str) -> ApiResult<CardResponse> {
    let lake = index.lake();
    let card = lake.card(id)?;
    Ok(CardResponse {
        card: card.clone(),
        tables: lake.tables_of(card).cloned().collect(),
        nuggets: index.nuggets.get(id).map(<[Nugget]>::to_vec).unwrap_or_default(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegrateResponse {
    pub anchor: String,
    /// Integration order.
    pub tables: Vec<String>,
    pub integrated: IntegratedTable,
}

pub fn integrate<S: AsRef<str>>(index: &Index, anchor: &str, tables: &[S]) -> ApiResult<IntegrateResponse> {
    let lake = index.lake();
    let query = lake.table(anchor)?;
    let retrieved = tables
        .iter()
        .map(|id| lake.table(id.as_ref()).cloned())
        .collect::<Result<Vec<_>, _>>()?;
    Ok(IntegrateResponse {
        anchor: query.id.clone(),
        tables: retrieved.iter().map(|t| t.id.clone()).collect(),
        integrated: integrate_all(query, &retrieved, index.engine.discovery().config()),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreResponse {
    pub query: String,
    /// The query's constraint, including the audit record of its mapping.
    pub constraint: QueryConstraint,
    pub cards: Vec<String>,
    pub score: usize,
    /// One witness per counted nugget, from the first card that carries it.
    pub matching: Vec<Nugget>,
}

pub fn score<S: AsRef<str>>(index: &Index, query: &str, cards: &[S]) -> ApiResult<ScoreResponse> {
    let constraint = map_query(nonempty(query)?, index.runner().as_ref())?;
    let score = score_candidate_set(cards, &constraint, &index.nuggets)?;
    let mut seen = BTreeSet::new();
    let matching: Vec<Nugget> = cards
        .iter()
        .filter_map(|c| index.nuggets.get(c.as_ref()))
        .flatten()
        .filter(|n| matches(n, &constraint) && seen.insert(n.key()))
        .cloned()
        .collect();
    Ok(ScoreResponse {
        query: query.to_owned(),
        constraint,
        cards: cards.iter().map(|c| c.as_ref().to_owned()).collect(),
        score,
        matching,
    })
}

/// Splits a comma-separated id list, ignoring blanks.
pub fn split_ids(raw: &str) -> Vec<String> {
    raw.split(',').map(str::trim).filter(|s| !s.is_empty()).map(str::to_owned).collect()
}
