//! Structure-aware table discovery: keyword, joinable and unionable search
//! over the table lake, seeded by one anchor table.
//!
//! All three operators exclude the anchor itself, keep only positive
//! scores, and order results by descending score then ascending table id.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lake::{Cell, EvidenceTable, TableLake};
use crate::token::{normalized_key, token_strings};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Operator {
    Keyword,
    Joinable,
    Unionable,
}

impl Operator {
    pub const ALL: [Operator; 3] = [Self::Keyword, Self::Joinable, Self::Unionable];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Keyword => "keyword",
            Self::Joinable => "joinable",
            Self::Unionable => "unionable",
        }
    }
}

impl fmt::Display for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Operator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "keyword" => Ok(Self::Keyword),
            "joinable" => Ok(Self::Joinable),
            "unionable" => Ok(Self::Unionable),
            other => Err(Error::InvalidConfig(format!("unknown operator `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscoveryConfig {
    /// Minimum value-set Jaccard for two columns to align.
    pub alignment_threshold: f64,
}

impl Default for DiscoveryConfig {
    fn default() -> Self {
        Self {
            alignment_threshold: 0.2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoredTable {
    pub table_id: String,
    pub score: usize,
    pub operator: Operator,
}

/// Operator output plus a flag for anchors that produced no query at all.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Discovery {
    pub hits: Vec<ScoredTable>,
    /// The anchor yielded no keyword tokens or no usable join key.
    pub empty_query: bool,
}

/// A column reduced to what alignment and joining look at.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ColumnProfile {
    /// Normalized header; empty when the header has no tokens.
    pub header: String,
    /// Distinct normalized non-null values.
    pub values: BTreeSet<String>,
    /// Every non-null cell is a number (and there is at least one).
    pub numeric_only: bool,
}

impl ColumnProfile {
    pub fn new<'a>(header: &str, cells: impl IntoIterator<Item = &'a Cell>) -> Self {
        let mut values = BTreeSet::new();
        let mut non_null = 0usize;
        let mut numeric = 0usize;
        for cell in cells {
            if cell.is_null() {
                continue;
            }
            non_null += 1;
            if cell.is_number() {
                numeric += 1;
            }
            let key = normalized_key(&cell.to_string());
            if !key.is_empty() {
                values.insert(key);
            }
        }
        Self {
            header: normalized_key(header),
            values,
            numeric_only: non_null > 0 && numeric == non_null,
        }
    }

    pub fn of_table(table: &EvidenceTable) -> Vec<ColumnProfile> {
        (0..table.n_cols())
            .map(|j| ColumnProfile::new(&table.headers[j], table.column(j)))
            .collect()
    }

    pub fn headers_match(&self, other: &ColumnProfile) -> bool {
        !self.header.is_empty() && self.header == other.header
    }
}

/// |A ∩ B| / |A ∪ B|, zero when both are empty.
pub fn jaccard(a: &BTreeSet<String>, b: &BTreeSet<String>) -> f64 {
    let inter = a.intersection(b).count();
    let union = a.len() + b.len() - inter;
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

/// Two columns align when their normalized headers are equal, or when both
/// hold non-numeric values whose distinct-value Jaccard reaches `threshold`.
pub fn column_alignment(a: &ColumnProfile, b: &ColumnProfile, threshold: f64) -> bool {
    if a.headers_match(b) {
        return true;
    }
    !a.numeric_only
        && !b.numeric_only
        && !a.values.is_empty()
        && !b.values.is_empty()
        && jaccard(&a.values, &b.values) >= threshold
}

/// Size of a maximum one-to-one matching in a bipartite graph given as
/// adjacency lists from left to right vertices (augmenting paths).
pub fn max_bipartite_matching(adjacency: &[Vec<usize>], right_len: usize) -> usize {
    fn augment(
        left: usize,
        adjacency: &[Vec<usize>],
        seen: &mut [bool],
        owner: &mut [Option<usize>],
    ) -> bool {
        for &right in &adjacency[left] {
            if seen[right] {
                continue;
            }
            seen[right] = true;
            if owner[right].is_none_or(|other| augment(other, adjacency, seen, owner)) {
                owner[right] = Some(left);
                return true;
            }
        }
        false
    }

    let mut owner = vec![None; right_len];
    let mut size = 0;
    for left in 0..adjacency.len() {
        let mut seen = vec![false; right_len];
        if augment(left, adjacency, &mut seen, &mut owner) {
            size += 1;
        }
    }
    size
}

/// Precomputed per-table token counts and column profiles for one lake.
#[derive(Clone, Debug)]
pub struct DiscoveryIndex {
    table_ids: Vec<String>,
    token_counts: Vec<HashMap<String, usize>>,
    columns: Vec<Vec<ColumnProfile>>,
    config: DiscoveryConfig,
}

fn table_token_counts(table: &EvidenceTable) -> HashMap<String, usize> {
    let mut counts = HashMap::new();
    let cells = table.rows.iter().flatten().map(Cell::to_string);
    for text in table.headers.iter().cloned().chain(cells) {
        for t in token_strings(&text) {
            *counts.entry(t).or_default() += 1;
        }
    }
    counts
}

/// Distinct tokens of the anchor's headers and first-column cells.
pub fn keyword_query(anchor: &EvidenceTable) -> BTreeSet<String> {
    let mut query: BTreeSet<String> = anchor.headers.iter().flat_map(|h| token_strings(h)).collect();
    for cell in anchor.first_column() {
        query.extend(token_strings(&cell.to_string()));
    }
    query
}

/// Distinct normalized values of the anchor's first column, or nothing if
/// that column is numeric-only.
pub fn join_key(anchor: &EvidenceTable) -> BTreeSet<String> {
    if anchor.n_cols() == 0 {
        return BTreeSet::new();
    }
    let profile = ColumnProfile::new(&anchor.headers[0], anchor.first_column());
    if profile.numeric_only {
        BTreeSet::new()
    } else {
        profile.values
    }
}

impl DiscoveryIndex {
    pub fn build(lake: &TableLake, config: DiscoveryConfig) -> Self {
        Self {
            table_ids: lake.iter().map(|t| t.id.clone()).collect(),
            token_counts: lake.iter().map(table_token_counts).collect(),
            columns: lake.iter().map(ColumnProfile::of_table).collect(),
            config,
        }
    }

    pub fn config(&self) -> &DiscoveryConfig {
        &self.config
    }

    fn rank(&self, scored: Vec<(usize, usize)>, operator: Operator, k: usize) -> Vec<ScoredTable> {
        let mut scored: Vec<(usize, usize)> = scored.into_iter().filter(|&(_, s)| s > 0).collect();
        scored.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| self.table_ids[a.0].cmp(&self.table_ids[b.0])));
        scored.truncate(k);
        scored
            .into_iter()
            .map(|(i, score)| ScoredTable {
                table_id: self.table_ids[i].clone(),
                score,
                operator,
            })
            .collect()
    }

    fn candidates<'a>(&'a self, anchor: &'a EvidenceTable) -> impl Iterator<Item = usize> + 'a {
        (0..self.table_ids.len()).filter(move |&i| self.table_ids[i] != anchor.id)
    }

    /// Total occurrences of anchor query tokens among each candidate's
    /// header and cell tokens.
    pub fn keyword_search(&self, anchor: &EvidenceTable, k: usize) -> Discovery {
        let query = keyword_query(anchor);
        if query.is_empty() {
            return Discovery {
                hits: Vec::new(),
                empty_query: true,
            };
        }
        let scored = self
            .candidates(anchor)
            .map(|i| {
                let counts = &self.token_counts[i];
                (i, query.iter().filter_map(|t| counts.get(t)).sum())
            })
            .collect();
        Discovery {
            hits: self.rank(scored, Operator::Keyword, k),
            empty_query: false,
        }
    }

    /// Largest overlap between the anchor's first-column values and any
    /// non-numeric candidate column.
    pub fn joinable_search(&self, anchor: &EvidenceTable, k: usize) -> Discovery {
        let key = join_key(anchor);
        if key.is_empty() {
            return Discovery {
                hits: Vec::new(),
                empty_query: true,
            };
        }
        let scored = self
            .candidates(anchor)
            .map(|i| {
                let best = self.columns[i]
                    .iter()
                    .filter(|c| !c.numeric_only)
                    .map(|c| c.values.intersection(&key).count())
                    .max()
                    .unwrap_or(0);
                (i, best)
            })
            .collect();
        Discovery {
            hits: self.rank(scored, Operator::Joinable, k),
            empty_query: false,
        }
    }

    /// Number of anchor columns that can be aligned one-to-one with
    /// candidate columns (maximum matching over the alignment relation).
    pub fn unionable_search(&self, anchor: &EvidenceTable, k: usize) -> Discovery {
        let anchor_cols = ColumnProfile::of_table(anchor);
        let tau = self.config.alignment_threshold;
        let scored = self
            .candidates(anchor)
            .map(|i| {
                let cand = &self.columns[i];
                let adjacency: Vec<Vec<usize>> = anchor_cols
                    .iter()
                    .map(|a| {
                        (0..cand.len())
                            .filter(|&j| column_alignment(a, &cand[j], tau))
                            .collect()
                    })
                    .collect();
                (i, max_bipartite_matching(&adjacency, cand.len()))
            })
            .collect();
        Discovery {
            hits: self.rank(scored, Operator::Unionable, k),
            empty_query: false,
        }
    }

    pub fn discover(&self, operator: Operator, anchor: &EvidenceTable, k: usize) -> Discovery {
        match operator {
            Operator::Keyword => self.keyword_search(anchor, k),
            Operator::Joinable => self.joinable_search(anchor, k),
            Operator::Unionable => self.unionable_search(anchor, k),
        }
    }
}

/// Ids of the tables in `hits`, for quick set checks.
pub fn hit_ids(hits: &[ScoredTable]) -> HashSet<&str> {
    hits.iter().map(|h| h.table_id.as_str()).collect()
}
