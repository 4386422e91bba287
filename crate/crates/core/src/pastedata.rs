//! Reverse path for students: text copied from a rendered table back into a
//! table, and CSV export.

use thiserror::Error;

use crate::numfmt::parse_number;
use crate::table::{Column, ColumnData, DataTable};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PasteError {
    #[error("no data to parse")]
    Empty,
    #[error("line {line} has {found} cells, expected {expected}")]
    Ragged { line: usize, found: usize, expected: usize },
}

fn tokenize(text: &str) -> Vec<(usize, Vec<String>)> {
    let tabbed = text.contains('\t');
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, line)| {
            let cells: Vec<String> = if tabbed {
                line.split('\t').map(str::trim).filter(|c| !c.is_empty()).map(str::to_string).collect()
            } else {
                line.split_whitespace().map(str::to_string).collect()
            };
            (i + 1, cells)
        })
        .collect()
}

fn is_num(cell: &str) -> bool {
    parse_number(cell).is_some()
}

fn column(name: Option<String>, cells: Vec<String>) -> Column {
    let data = if cells.iter().all(|c| is_num(c)) {
        ColumnData::Numeric(cells.iter().map(|c| parse_number(c).expect("checked")).collect())
    } else {
        ColumnData::Text(cells)
    };
    Column { name, data }
}

/// Parse pasted table text. Cells are separated by tabs when the text has
/// any, otherwise by whitespace. A first row of text over a column holding
/// numbers is a header. Headerless tables of one cell type are bare vectors
/// laid out row-major and are read back in that order.
pub fn parse_pasted(text: &str) -> Result<DataTable, PasteError> {
    let rows = tokenize(text);
    if rows.is_empty() {
        return Err(PasteError::Empty);
    }
    let width = rows.iter().map(|(_, r)| r.len()).max().unwrap_or(0);
    let header = rows.len() > 1
        && rows[0].1.len() == width
        && rows[0].1.iter().all(|c| !is_num(c))
        && (0..width).any(|c| rows[1..].iter().any(|(_, r)| r.get(c).is_some_and(|v| is_num(v))));
    let body = if header { &rows[1..] } else { &rows[..] };
    let cells = body.iter().flat_map(|(_, r)| r.iter());
    let homogeneous = {
        let numeric = cells.clone().filter(|c| is_num(c)).count();
        numeric == 0 || numeric == cells.count()
    };
    // All but the last row must be full width; a short last row is the
    // padding of a vector table.
    for (k, (line, r)) in body.iter().enumerate() {
        let last = k + 1 == body.len();
        let allowed_short = last && !header && homogeneous;
        if r.len() != width && !(allowed_short && r.len() < width) {
            return Err(PasteError::Ragged { line: *line, found: r.len(), expected: width });
        }
    }
    if !header && homogeneous {
        let flat: Vec<String> = body.iter().flat_map(|(_, r)| r.iter().cloned()).collect();
        return Ok(DataTable::vector(column(None, flat).data));
    }
    let names: Vec<Option<String>> = match header {
        true => rows[0].1.iter().cloned().map(Some).collect(),
        false => vec![None; width],
    };
    let columns: Vec<Column> = names
        .into_iter()
        .enumerate()
        .map(|(c, name)| column(name, body.iter().map(|(_, r)| r[c].clone()).collect()))
        .collect();
    // Duplicate header names fall back to a headerless table.
    DataTable::new(columns.clone()).or_else(|_| {
        let plain: Vec<Column> = columns.into_iter().map(|c| Column { name: None, data: c.data }).collect();
        Ok(DataTable::new(plain).expect("same shape"))
    })
}

/// RFC 4180 CSV; a header row when any column is named.
pub fn to_csv(t: &DataTable) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::CRLF)
        .quote_style(csv::QuoteStyle::Necessary)
        .from_writer(Vec::new());
    if t.has_header() {
        w.write_record(t.columns().iter().map(|c| c.name.clone().unwrap_or_default())).expect("in-memory");
    }
    for r in 0..t.nrows() {
        w.write_record(t.columns().iter().map(|c| c.data.cell(r))).expect("in-memory");
    }
    String::from_utf8(w.into_inner().expect("in-memory")).expect("utf-8 input")
}
