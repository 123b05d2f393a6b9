//! Orientation-aware integration of retrieved tables into one comparison
//! view.
//!
//! Each incoming table is checked against the view built so far with a 2×2
//! token-overlap matrix. Axis 0 is a table's header row without its corner
//! cell (the label of the key column, which stays in the corner under
//! transposition); axis 1 is its first column, numeric cells excluded. A
//! table whose headers show up only in the other table's first column is
//! pivoted before it is merged.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::discovery::{column_alignment, jaccard, ColumnProfile, DiscoveryConfig};
use crate::error::{Error, Result};
use crate::lake::{Cell, EvidenceTable};
use crate::token::{normalized_key, token_strings};

/// Read access shared by evidence tables and integrated views.
pub trait Grid {
    fn headers(&self) -> &[String];
    fn rows(&self) -> &[Vec<Cell>];
}

impl Grid for EvidenceTable {
    fn headers(&self) -> &[String] {
        &self.headers
    }

    fn rows(&self) -> &[Vec<Cell>] {
        &self.rows
    }
}

/// `m[i][j]` counts distinct tokens shared by axis `i` of the first table
/// and axis `j` of the second (0 = header row, 1 = first column).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OverlapMatrix {
    pub m: [[usize; 2]; 2],
}

impl OverlapMatrix {
    pub fn new(m: [[usize; 2]; 2]) -> Self {
        Self { m }
    }
}

fn header_tokens(grid: &impl Grid, skip: usize) -> BTreeSet<String> {
    grid.headers()
        .iter()
        .skip(skip)
        .flat_map(|h| token_strings(h))
        .collect()
}

fn first_column_axis(grid: &impl Grid) -> BTreeSet<String> {
    grid.rows()
        .iter()
        .filter_map(|row| row.first())
        .filter_map(Cell::as_text)
        .flat_map(token_strings)
        .collect()
}

/// Token overlap between the header rows and text first columns of two
/// tables. Header-to-header overlap ignores both corner headers, since a
/// pivot keeps its corner and would otherwise always overlap its source.
pub fn overlap_matrix(a: &impl Grid, b: &impl Grid) -> OverlapMatrix {
    let (col_a, col_b) = (first_column_axis(a), first_column_axis(b));
    let count = |x: &BTreeSet<String>, y: &BTreeSet<String>| x.intersection(y).count();
    OverlapMatrix {
        m: [
            [count(&header_tokens(a, 1), &header_tokens(b, 1)), count(&header_tokens(a, 0), &col_b)],
            [count(&col_a, &header_tokens(b, 0)), count(&col_a, &col_b)],
        ],
    }
}

/// The second table is a transpose of the first when the first table's
/// headers appear in its first column, but neither headers nor first
/// columns overlap directly.
pub fn detect_transpose(m: &OverlapMatrix) -> bool {
    m.m[0][1] > 0 && m.m[0][0] == 0 && m.m[1][1] == 0
}

/// Pivots a table about its corner cell: the first-column values become the
/// headers (after the corner header) and the remaining headers become the
/// first column.
pub fn transpose(table: &EvidenceTable) -> Result<EvidenceTable> {
    if table.n_cols() < 2 {
        return Err(Error::SingleColumnTranspose(table.id.clone()));
    }
    let mut headers = Vec::with_capacity(table.n_rows() + 1);
    headers.push(table.headers[0].clone());
    headers.extend(table.first_column().map(Cell::to_string));
    let rows = (1..table.n_cols())
        .map(|j| {
            let mut row = Vec::with_capacity(table.n_rows() + 1);
            row.push(Cell::parse(&table.headers[j]));
            row.extend(table.column(j).cloned());
            row
        })
        .collect();
    Ok(EvidenceTable {
        id: table.id.clone(),
        headers,
        rows,
        card_ids: table.card_ids.clone(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegratedTable {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    /// Source table of each cell; `None` exactly where the cell is a null fill.
    pub provenance: Vec<Vec<Option<String>>>,
}

impl Grid for IntegratedTable {
    fn headers(&self) -> &[String] {
        &self.headers
    }

    fn rows(&self) -> &[Vec<Cell>] {
        &self.rows
    }
}

impl From<&EvidenceTable> for IntegratedTable {
    fn from(table: &EvidenceTable) -> Self {
        let provenance = table
            .rows
            .iter()
            .map(|row| {
                row.iter()
                    .map(|c| (!c.is_null()).then(|| table.id.clone()))
                    .collect()
            })
            .collect();
        Self {
            headers: table.headers.clone(),
            rows: table.rows.clone(),
            provenance,
        }
    }
}

impl IntegratedTable {
    pub fn n_cols(&self) -> usize {
        self.headers.len()
    }

    pub fn null_count(&self) -> usize {
        self.rows.iter().flatten().filter(|c| c.is_null()).count()
    }

    /// RFC 4180 CSV; nulls are empty fields.
    pub fn to_csv(&self) -> Result<String> {
        let mut writer = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        writer.write_record(&self.headers)?;
        for row in &self.rows {
            writer.write_record(row.iter().map(Cell::to_string))?;
        }
        let bytes = writer.into_inner().map_err(|e| csv::Error::from(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv of utf-8 fields is utf-8"))
    }

    /// A pipe table; nulls render as empty cells and `|` in values is escaped.
    pub fn to_markdown(&self) -> String {
        fn escape(s: &str) -> String {
            s.replace('|', "\\|")
        }
        let mut out = String::new();
        let header: Vec<String> = self.headers.iter().map(|h| escape(h)).collect();
        let _ = writeln!(out, "| {} |", header.join(" | "));
        let _ = writeln!(out, "|{}", "---|".repeat(self.headers.len()));
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|c| escape(&c.to_string())).collect();
            let _ = writeln!(out, "| {} |", cells.join(" | "));
        }
        out
    }
}

/// One-to-one column alignment of `incoming` onto `base`: header matches
/// first, then higher value Jaccard, then lower column indices.
fn align_columns(base: &[ColumnProfile], incoming: &[ColumnProfile], threshold: f64) -> Vec<Option<usize>> {
    let mut pairs = Vec::new();
    for (i, b) in base.iter().enumerate() {
        for (j, t) in incoming.iter().enumerate() {
            if column_alignment(b, t, threshold) {
                pairs.push((b.headers_match(t), jaccard(&b.values, &t.values), i, j));
            }
        }
    }
    pairs.sort_by(|x, y| {
        y.0.cmp(&x.0)
            .then_with(|| y.1.total_cmp(&x.1))
            .then_with(|| x.2.cmp(&y.2))
            .then_with(|| x.3.cmp(&y.3))
    });
    let mut mapping = vec![None; incoming.len()];
    let mut used = vec![false; base.len()];
    for (_, _, i, j) in pairs {
        if mapping[j].is_none() && !used[i] {
            mapping[j] = Some(i);
            used[i] = true;
        }
    }
    mapping
}

fn row_key(row: &[Cell]) -> String {
    row.first().map(|c| normalized_key(&c.to_string())).unwrap_or_default()
}

/// Numbers compare by value, everything else by normalized tokens.
fn same_value(a: &Cell, b: &Cell) -> bool {
    match (a, b) {
        (Cell::Number(x), Cell::Number(y)) => x == y,
        (Cell::Number(_), _) | (_, Cell::Number(_)) => false,
        _ => normalized_key(&a.to_string()) == normalized_key(&b.to_string()),
    }
}

/// Number of positions where both rows hold the same non-null value, or
/// `None` if some position holds two different non-null values.
fn agreement(existing: &[Cell], incoming: &[Cell]) -> Option<usize> {
    let mut agree = 0;
    for (a, b) in existing.iter().zip(incoming) {
        if a.is_null() || b.is_null() {
            continue;
        }
        if !same_value(a, b) {
            return None;
        }
        agree += 1;
    }
    Some(agree)
}

/// Aligns `table` onto `base`, appends its unaligned columns, outer-unions
/// its rows, and merges each incoming row into an existing row with the same
/// key when no non-null cell would change.
///
/// Key merging only applies when the incoming first column aligned with the
/// base first column. Among compatible rows the one agreeing on the most
/// cells wins, then the earliest. Conflicting rows are kept side by side.
pub fn integrate_pair(base: &IntegratedTable, table: &EvidenceTable, config: &DiscoveryConfig) -> IntegratedTable {
    let base_profiles: Vec<ColumnProfile> = (0..base.n_cols())
        .map(|j| ColumnProfile::new(&base.headers[j], base.rows.iter().map(|r| &r[j])))
        .collect();
    let incoming = ColumnProfile::of_table(table);
    let aligned = align_columns(&base_profiles, &incoming, config.alignment_threshold);

    let mut headers = base.headers.clone();
    let mut target = Vec::with_capacity(table.n_cols());
    for (j, slot) in aligned.iter().enumerate() {
        match slot {
            Some(i) => target.push(*i),
            None => {
                target.push(headers.len());
                headers.push(table.headers[j].clone());
            }
        }
    }
    let width = headers.len();

    let mut rows: Vec<Vec<Cell>> = base.rows.clone();
    let mut provenance = base.provenance.clone();
    for (row, prov) in rows.iter_mut().zip(provenance.iter_mut()) {
        row.resize(width, Cell::Null);
        prov.resize(width, None);
    }

    let key_merge = table.n_cols() > 0 && base.n_cols() > 0 && aligned[0] == Some(0);
    let base_len = rows.len();
    for source in &table.rows {
        let mut row = vec![Cell::Null; width];
        for (j, cell) in source.iter().enumerate() {
            row[target[j]] = cell.clone();
        }

        let key = row_key(&row);
        let merge_into = if key_merge && !key.is_empty() {
            (0..base_len)
                .filter(|&r| row_key(&rows[r]) == key)
                .filter_map(|r| agreement(&rows[r], &row).map(|a| (r, a)))
                .max_by(|x, y| x.1.cmp(&y.1).then_with(|| y.0.cmp(&x.0)))
                .map(|(r, _)| r)
        } else {
            None
        };

        match merge_into {
            Some(r) => {
                for (c, cell) in row.into_iter().enumerate() {
                    if rows[r][c].is_null() && !cell.is_null() {
                        rows[r][c] = cell;
                        provenance[r][c] = Some(table.id.clone());
                    }
                }
            }
            None => {
                let prov = row
                    .iter()
                    .map(|c| (!c.is_null()).then(|| table.id.clone()))
                    .collect();
                rows.push(row);
                provenance.push(prov);
            }
        }
    }

    IntegratedTable {
        headers,
        rows,
        provenance,
    }
}

/// Integrates `retrieved` into `query` in order, pivoting any table whose
/// overlap pattern marks it as transposed.
pub fn integrate_all(query: &EvidenceTable, retrieved: &[EvidenceTable], config: &DiscoveryConfig) -> IntegratedTable {
    let mut view = IntegratedTable::from(query);
    for table in retrieved {
        let m = overlap_matrix(&view, table);
        let oriented = if table.n_cols() >= 2 && detect_transpose(&m) {
            transpose(table).expect("tables with two or more columns transpose")
        } else {
            table.clone()
        };
        view = integrate_pair(&view, &oriented, config);
    }
    view
}
