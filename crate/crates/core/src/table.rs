//! Rectangular data shared by the expression engine, the HTML renderer and
//! the paste parser.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numfmt::format_number;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TableError {
    #[error("column `{name}` has {found} rows, expected {expected}")]
    Ragged { name: String, found: usize, expected: usize },
    #[error("duplicate column name `{0}`")]
    DuplicateName(String),
    #[error("a table needs at least one column")]
    NoColumns,
    #[error("non-finite value in column `{0}`")]
    NonFinite(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "values", rename_all = "lowercase")]
pub enum ColumnData {
    Numeric(Vec<f64>),
    Text(Vec<String>),
}

impl ColumnData {
    pub fn len(&self) -> usize {
        match self {
            ColumnData::Numeric(v) => v.len(),
            ColumnData::Text(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_numeric(&self) -> bool {
        matches!(self, ColumnData::Numeric(_))
    }

    /// Cell text as it is displayed.
    pub fn cell(&self, row: usize) -> String {
        match self {
            ColumnData::Numeric(v) => format_number(v[row]),
            ColumnData::Text(v) => v[row].clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub name: Option<String>,
    pub data: ColumnData,
}

impl Column {
    pub fn numeric(name: Option<&str>, values: Vec<f64>) -> Self {
        Column { name: name.map(str::to_string), data: ColumnData::Numeric(values) }
    }

    pub fn text(name: Option<&str>, values: Vec<String>) -> Self {
        Column { name: name.map(str::to_string), data: ColumnData::Text(values) }
    }
}

/// Columns of equal length, optionally named.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DataTable {
    columns: Vec<Column>,
}

impl DataTable {
    pub fn new(columns: Vec<Column>) -> Result<Self, TableError> {
        let Some(first) = columns.first() else {
            return Err(TableError::NoColumns);
        };
        let expected = first.data.len();
        let mut seen = Vec::new();
        for (i, c) in columns.iter().enumerate() {
            let label = c.name.clone().unwrap_or_else(|| format!("#{}", i + 1));
            if c.data.len() != expected {
                return Err(TableError::Ragged { name: label, found: c.data.len(), expected });
            }
            if let ColumnData::Numeric(v) = &c.data {
                if v.iter().any(|x| !x.is_finite()) {
                    return Err(TableError::NonFinite(label));
                }
            }
            if let Some(n) = &c.name {
                if seen.contains(&n) {
                    return Err(TableError::DuplicateName(n.clone()));
                }
                seen.push(n);
            }
        }
        Ok(DataTable { columns })
    }

    /// A single unnamed column.
    pub fn vector(data: ColumnData) -> Self {
        DataTable { columns: vec![Column { name: None, data }] }
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn into_columns(self) -> Vec<Column> {
        self.columns
    }

    pub fn nrows(&self) -> usize {
        self.columns[0].data.len()
    }

    pub fn ncols(&self) -> usize {
        self.columns.len()
    }

    pub fn has_header(&self) -> bool {
        self.columns.iter().any(|c| c.name.is_some())
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.columns.iter().find(|c| c.name.as_deref() == Some(name))
    }

    /// One unnamed column: the shape a pasted bare vector collapses to.
    pub fn is_vector(&self) -> bool {
        self.columns.len() == 1 && self.columns[0].name.is_none()
    }
}

impl<'de> Deserialize<'de> for DataTable {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            columns: Vec<Column>,
        }
        let raw = Raw::deserialize(d)?;
        DataTable::new(raw.columns).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_ragged_and_duplicate_columns() {
        let err = DataTable::new(vec![
            Column::numeric(Some("a"), vec![1.0, 2.0]),
            Column::numeric(Some("b"), vec![1.0]),
        ]);
        assert!(matches!(err, Err(TableError::Ragged { .. })));
        let err = DataTable::new(vec![
            Column::numeric(Some("a"), vec![1.0]),
            Column::text(Some("a"), vec!["x".into()]),
        ]);
        assert_eq!(err, Err(TableError::DuplicateName("a".into())));
        assert_eq!(DataTable::new(vec![]), Err(TableError::NoColumns));
    }

    #[test]
    fn serde_validates() {
        let ok: DataTable = serde_json::from_str(
            r#"{"columns":[{"name":"x","data":{"type":"numeric","values":[1,2]}}]}"#,
        )
        .unwrap();
        assert_eq!(ok.nrows(), 2);
        let bad = serde_json::from_str::<DataTable>(
            r#"{"columns":[{"name":"x","data":{"type":"numeric","values":[1]}},{"name":"y","data":{"type":"text","values":[]}}]}"#,
        );
        assert!(bad.is_err());
    }
}
