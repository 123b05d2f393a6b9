//! Model cards, evidence tables, and the line-delimited files they live in.
//!
//! Card file: one JSON object per line with fields `id`, `text`, `tags`,
//! `table_ids`. Table file: one JSON object per line with fields `id`,
//! `headers`, `rows`, `card_ids`; each cell is a string, a number or `null`.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Tables must have strictly fewer rows and columns than these to be kept.
pub const MAX_COMPACT_ROWS: usize = 200;
pub const MAX_COMPACT_COLUMNS: usize = 100;

static NUMERIC_CELL: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^[+-]?[0-9]+(\.[0-9]+)?%?$").expect("valid regex"));

/// One table cell.
#[derive(Clone, Debug, PartialEq, Default)]
pub enum Cell {
    #[default]
    Null,
    Number(f64),
    Text(String),
}

impl Cell {
    /// Types a raw cell: trimmed, empty becomes null, and a cell that is
    /// entirely sign/digits/decimal/optional percent becomes a number. The
    /// percent sign is stripped without rescaling.
    pub fn parse(raw: &str) -> Cell {
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            return Cell::Null;
        }
        if NUMERIC_CELL.is_match(trimmed) {
            let digits = trimmed.trim_end_matches('%');
            if let Ok(value) = digits.parse::<f64>() {
                return Cell::Number(value);
            }
        }
        Cell::Text(trimmed.to_owned())
    }

    pub fn is_null(&self) -> bool {
        matches!(self, Cell::Null)
    }

    pub fn is_number(&self) -> bool {
        matches!(self, Cell::Number(_))
    }

    pub fn as_text(&self) -> Option<&str> {
        match self {
            Cell::Text(s) => Some(s),
            _ => None,
        }
    }

    /// Re-types text cells with [`Cell::parse`]; numbers and nulls pass through.
    pub fn canonical(self) -> Cell {
        match self {
            Cell::Text(s) => Cell::parse(&s),
            other => other,
        }
    }
}

/// Nulls render as the empty string; numbers use the shortest round-trip form.
impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Null => Ok(()),
            Cell::Number(n) => write!(f, "{n}"),
            Cell::Text(s) => f.write_str(s),
        }
    }
}

impl Serialize for Cell {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Cell::Null => serializer.serialize_none(),
            Cell::Number(n) => serializer.serialize_f64(*n),
            Cell::Text(s) => serializer.serialize_str(s),
        }
    }
}

impl<'de> Deserialize<'de> for Cell {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Null,
            Number(f64),
            Text(String),
        }
        // `Option` first so that JSON null maps onto the unit variant.
        let raw: Option<Raw> = Option::deserialize(deserializer)?;
        Ok(match raw {
            None | Some(Raw::Null) => Cell::Null,
            Some(Raw::Number(n)) => Cell::Number(n),
            Some(Raw::Text(s)) => Cell::parse(&s),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelCard {
    pub id: String,
    pub text: String,
    #[serde(default)]
    pub tags: Vec<String>,
    #[serde(default)]
    pub table_ids: Vec<String>,
}

impl ModelCard {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            text: text.into(),
            tags: Vec::new(),
            table_ids: Vec::new(),
        }
    }

    pub fn with_tags<I, S>(mut self, tags: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.tags = tags.into_iter().map(Into::into).collect();
        self
    }

    pub fn with_tables<I, S>(mut self, table_ids: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.table_ids = table_ids.into_iter().map(Into::into).collect();
        self
    }

    pub fn has_tables(&self) -> bool {
        !self.table_ids.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvidenceTable {
    pub id: String,
    pub headers: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    #[serde(default)]
    pub card_ids: Vec<String>,
}

impl EvidenceTable {
    pub fn new(id: impl Into<String>, headers: Vec<String>, rows: Vec<Vec<Cell>>) -> Self {
        Self {
            id: id.into(),
            headers,
            rows,
            card_ids: Vec::new(),
        }
    }

    /// Builds a table from string cells typed with [`Cell::parse`].
    pub fn from_strings(id: impl Into<String>, headers: &[&str], rows: &[&[&str]]) -> Self {
        Self::new(
            id,
            headers.iter().map(|h| (*h).to_owned()).collect(),
            rows.iter()
                .map(|row| row.iter().map(|c| Cell::parse(c)).collect())
                .collect(),
        )
    }

    pub fn with_cards<I, S>(mut self, card_ids: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.card_ids = card_ids.into_iter().map(Into::into).collect();
        self
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.headers.len()
    }

    pub fn column(&self, j: usize) -> impl Iterator<Item = &Cell> + '_ {
        self.rows.iter().map(move |row| &row[j])
    }

    pub fn first_column(&self) -> impl Iterator<Item = &Cell> + '_ {
        self.column(0)
    }

    /// Checks the structural invariants that hold for every table in a lake.
    pub fn validate(&self) -> Result<()> {
        if self.id.is_empty() {
            return Err(Error::InvalidTable {
                table: self.id.clone(),
                reason: "empty id".into(),
            });
        }
        if self.headers.is_empty() {
            return Err(Error::InvalidTable {
                table: self.id.clone(),
                reason: "no headers".into(),
            });
        }
        for (row, cells) in self.rows.iter().enumerate() {
            if cells.len() != self.headers.len() {
                return Err(Error::RaggedRow {
                    table: self.id.clone(),
                    row,
                    found: cells.len(),
                    expected: self.headers.len(),
                });
            }
        }
        Ok(())
    }

    pub fn is_compact(&self) -> bool {
        self.n_rows() < MAX_COMPACT_ROWS && self.n_cols() < MAX_COMPACT_COLUMNS
    }
}

/// The card corpus: insertion-ordered, unique ids.
#[derive(Clone, Debug, Default)]
pub struct Corpus {
    cards: Vec<ModelCard>,
    index: HashMap<String, usize>,
}

impl Corpus {
    pub fn new(cards: Vec<ModelCard>) -> Result<Self> {
        let mut corpus = Corpus::default();
        for card in cards {
            corpus.push(card)?;
        }
        Ok(corpus)
    }

    pub fn push(&mut self, card: ModelCard) -> Result<()> {
        if card.id.is_empty() {
            return Err(Error::InvalidCard {
                card: card.id,
                reason: "empty id".into(),
            });
        }
        if self.index.contains_key(&card.id) {
            return Err(Error::DuplicateCard(card.id));
        }
        self.index.insert(card.id.clone(), self.cards.len());
        self.cards.push(card);
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<&ModelCard> {
        self.index.get(id).map(|&i| &self.cards[i])
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn cards(&self) -> &[ModelCard] {
        &self.cards
    }

    pub fn len(&self) -> usize {
        self.cards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cards.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, ModelCard> {
        self.cards.iter()
    }

    pub fn into_cards(self) -> Vec<ModelCard> {
        self.cards
    }
}

/// The table lake: insertion-ordered, unique ids, rectangular tables.
#[derive(Clone, Debug, Default)]
pub struct TableLake {
    tables: Vec<EvidenceTable>,
    index: HashMap<String, usize>,
}

impl TableLake {
    pub fn new(tables: Vec<EvidenceTable>) -> Result<Self> {
        let mut lake = TableLake::default();
        for table in tables {
            lake.push(table)?;
        }
        Ok(lake)
    }

    pub fn push(&mut self, table: EvidenceTable) -> Result<()> {
        table.validate()?;
        if self.index.contains_key(&table.id) {
            return Err(Error::DuplicateTable(table.id));
        }
        self.index.insert(table.id.clone(), self.tables.len());
        self.tables.push(table);
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<&EvidenceTable> {
        self.index.get(id).map(|&i| &self.tables[i])
    }

    pub fn tables(&self) -> &[EvidenceTable] {
        &self.tables
    }

    pub fn len(&self) -> usize {
        self.tables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tables.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, EvidenceTable> {
        self.tables.iter()
    }

    pub fn into_tables(self) -> Vec<EvidenceTable> {
        self.tables
    }
}

/// Keeps exactly the tables with fewer than 200 rows and fewer than 100
/// columns, preserving order.
pub fn filter_compact(lake: TableLake) -> TableLake {
    let kept = lake
        .into_tables()
        .into_iter()
        .filter(EvidenceTable::is_compact)
        .collect();
    TableLake::new(kept).expect("subset of a valid lake is valid")
}

/// A corpus and lake whose card/table links are resolved in both directions.
#[derive(Clone, Debug, Default)]
pub struct ModelLake {
    pub corpus: Corpus,
    pub tables: TableLake,
    /// Dangling links dropped during assembly, in discovery order.
    pub warnings: Vec<String>,
}

impl ModelLake {
    /// Resolves links between cards and tables.
    ///
    /// A card listing a table and a table listing a card are both treated as
    /// the same association, so after assembly `card.table_ids` and
    /// `table.card_ids` mirror each other. Links to ids that do not exist are
    /// dropped with a warning, and tables left without any card are dropped.
    pub fn assemble(corpus: Corpus, tables: TableLake) -> ModelLake {
        let mut warnings = Vec::new();
        let mut cards = corpus.into_cards();
        let mut tables = tables.into_tables();

        let card_pos: HashMap<String, usize> = cards
            .iter()
            .enumerate()
            .map(|(i, c)| (c.id.clone(), i))
            .collect();
        let table_pos: HashMap<String, usize> = tables
            .iter()
            .enumerate()
            .map(|(i, t)| (t.id.clone(), i))
            .collect();

        // card index -> set of table indices, collected from both sides
        let mut links: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); cards.len()];
        for (ci, card) in cards.iter().enumerate() {
            for tid in &card.table_ids {
                match table_pos.get(tid) {
                    Some(&ti) => {
                        links[ci].insert(ti);
                    }
                    None => warnings.push(format!(
                        "card `{}` links to unknown table `{tid}`; link dropped",
                        card.id
                    )),
                }
            }
        }
        for (ti, table) in tables.iter().enumerate() {
            for cid in &table.card_ids {
                match card_pos.get(cid) {
                    Some(&ci) => {
                        links[ci].insert(ti);
                    }
                    None => warnings.push(format!(
                        "table `{}` links to unknown card `{cid}`; link dropped",
                        table.id
                    )),
                }
            }
        }

        let mut table_cards: Vec<Vec<String>> = vec![Vec::new(); tables.len()];
        for (ci, linked) in links.iter().enumerate() {
            for &ti in linked {
                table_cards[ti].push(cards[ci].id.clone());
            }
        }
        let orphaned: BTreeSet<usize> = table_cards
            .iter()
            .enumerate()
            .filter(|(_, ids)| ids.is_empty())
            .map(|(ti, _)| ti)
            .collect();
        for &ti in &orphaned {
            warnings.push(format!(
                "table `{}` has no resolvable card; table dropped",
                tables[ti].id
            ));
        }

        // Preserve each side's original link order, then append links that
        // were only declared on the other side.
        for (ci, card) in cards.iter_mut().enumerate() {
            let mut ordered: Vec<String> = Vec::new();
            for tid in &card.table_ids {
                if let Some(&ti) = table_pos.get(tid) {
                    if !orphaned.contains(&ti) && !ordered.contains(tid) {
                        ordered.push(tid.clone());
                    }
                }
            }
            for &ti in &links[ci] {
                let tid = &tables[ti].id;
                if !orphaned.contains(&ti) && !ordered.contains(tid) {
                    ordered.push(tid.clone());
                }
            }
            card.table_ids = ordered;
        }
        for (ti, table) in tables.iter_mut().enumerate() {
            let mut ordered: Vec<String> = Vec::new();
            for cid in &table.card_ids {
                if card_pos.contains_key(cid) && !ordered.contains(cid) {
                    ordered.push(cid.clone());
                }
            }
            for cid in &table_cards[ti] {
                if !ordered.contains(cid) {
                    ordered.push(cid.clone());
                }
            }
            table.card_ids = ordered;
        }

        let tables: Vec<EvidenceTable> = tables
            .into_iter()
            .enumerate()
            .filter(|(ti, _)| !orphaned.contains(ti))
            .map(|(_, t)| t)
            .collect();

        ModelLake {
            corpus: Corpus::new(cards).expect("ids were unique before assembly"),
            tables: TableLake::new(tables).expect("tables were valid before assembly"),
            warnings,
        }
    }

    /// Drops oversized tables, then re-resolves links.
    pub fn compact(self) -> ModelLake {
        let mut warnings = self.warnings;
        let compacted = filter_compact(self.tables);
        let mut assembled = ModelLake::assemble(self.corpus, compacted);
        warnings.append(&mut assembled.warnings);
        assembled.warnings = warnings;
        assembled
    }

    /// Loads both files and assembles them.
    pub fn load(cards: &Path, tables: &Path) -> Result<ModelLake> {
        Ok(ModelLake::assemble(ingest_cards(cards)?, ingest_tables(tables)?))
    }

    pub fn card(&self, id: &str) -> Result<&ModelCard> {
        self.corpus
            .get(id)
            .ok_or_else(|| Error::UnknownCard(id.to_owned()))
    }

    pub fn table(&self, id: &str) -> Result<&EvidenceTable> {
        self.tables
            .get(id)
            .ok_or_else(|| Error::UnknownTable(id.to_owned()))
    }

    /// The tables linked to a card, in link order.
    pub fn tables_of<'a>(&'a self, card: &'a ModelCard) -> impl Iterator<Item = &'a EvidenceTable> + 'a {
        card.table_ids.iter().filter_map(|id| self.tables.get(id))
    }
}

fn read_records<T, R>(reader: R, path: &Path) -> Result<Vec<(usize, T)>>
where
    T: serde::de::DeserializeOwned,
    R: BufRead,
{
    let mut records = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line).map_err(|e| Error::MalformedRecord {
            path: path.to_path_buf(),
            line: line_no,
            message: e.to_string(),
        })?;
        records.push((line_no, record));
    }
    Ok(records)
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::io(path, e))
}

pub fn ingest_cards(path: &Path) -> Result<Corpus> {
    read_cards(open(path)?, path)
}

/// Parses a card file from any reader; `path` is only used in error messages.
pub fn read_cards<R: BufRead>(reader: R, path: &Path) -> Result<Corpus> {
    let mut corpus = Corpus::default();
    for (line, card) in read_records::<ModelCard, _>(reader, path)? {
        if card.id.is_empty() {
            return Err(Error::MalformedRecord {
                path: path.to_path_buf(),
                line,
                message: "empty card id".into(),
            });
        }
        corpus.push(card)?;
    }
    Ok(corpus)
}

pub fn ingest_tables(path: &Path) -> Result<TableLake> {
    read_tables(open(path)?, path)
}

pub fn read_tables<R: BufRead>(reader: R, path: &Path) -> Result<TableLake> {
    let mut lake = TableLake::default();
    for (line, table) in read_records::<EvidenceTable, _>(reader, path)? {
        if table.card_ids.is_empty() {
            return Err(Error::MalformedRecord {
                path: path.to_path_buf(),
                line,
                message: format!("table `{}` has no card_ids", table.id),
            });
        }
        lake.push(table)?;
    }
    Ok(lake)
}

fn write_records<'a, T, I>(path: &Path, records: I) -> Result<()>
where
    T: Serialize + 'a,
    I: IntoIterator<Item = &'a T>,
{
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for record in records {
        let line = serde_json::to_string(record).expect("records serialize");
        writeln!(out, "{line}").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn write_cards(path: &Path, cards: &[ModelCard]) -> Result<()> {
    write_records(path, cards)
}

pub fn write_tables(path: &Path, tables: &[EvidenceTable]) -> Result<()> {
    write_records(path, tables)
}
