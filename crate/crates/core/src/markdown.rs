//! Pipe-table extraction from card bodies.

use crate::lake::{Cell, EvidenceTable};

fn is_pipe_row(line: &str) -> bool {
    line.trim().contains('|')
}

fn split_row(line: &str) -> Vec<&str> {
    let trimmed = line.trim();
    let trimmed = trimmed.strip_prefix('|').unwrap_or(trimmed);
    let trimmed = trimmed.strip_suffix('|').unwrap_or(trimmed);
    trimmed.split('|').map(str::trim).collect()
}

/// A separator row is made only of `-` runs with optional alignment colons.
fn is_separator(line: &str) -> bool {
    if !is_pipe_row(line) {
        return false;
    }
    split_row(line).iter().all(|cell| {
        let inner = cell.strip_prefix(':').unwrap_or(cell);
        let inner = inner.strip_suffix(':').unwrap_or(inner);
        !inner.is_empty() && inner.chars().all(|c| c == '-')
    })
}

/// Extracts every well-formed pipe table from `text`.
///
/// A table is a header row, a separator row, and at least one data row.
/// Cells are trimmed and typed with [`Cell::parse`]; short data rows are
/// padded with nulls and surplus cells are dropped. Tables are named
/// `{card_id}#table-{n}` (counting from 1) and linked to `card_id`.
pub fn parse_markdown_tables(text: &str, card_id: &str) -> Vec<EvidenceTable> {
    let lines: Vec<&str> = text.lines().collect();
    let mut tables = Vec::new();
    let mut i = 0;
    while i + 1 < lines.len() {
        let header = lines[i];
        if !is_pipe_row(header) || is_separator(header) || !is_separator(lines[i + 1]) {
            i += 1;
            continue;
        }
        let headers: Vec<String> = split_row(header).into_iter().map(str::to_owned).collect();
        let mut rows = Vec::new();
        let mut j = i + 2;
        while j < lines.len() && is_pipe_row(lines[j]) && !is_separator(lines[j]) {
            let mut cells: Vec<Cell> = split_row(lines[j]).into_iter().map(Cell::parse).collect();
            cells.resize(headers.len(), Cell::Null);
            rows.push(cells);
            j += 1;
        }
        if rows.is_empty() {
            i += 2;
            continue;
        }
        let id = format!("{card_id}#table-{}", tables.len() + 1);
        tables.push(EvidenceTable::new(id, headers, rows).with_cards([card_id]));
        i = j;
    }
    tables
}
