//! Two-way contingency tables: CSV ingestion, empty-margin removal and
//! row-major flattening into count vectors.
//!
//! CSV layout with `header = true`: the first record holds a corner label
//! followed by the column labels, and every later record starts with its row
//! label. Without a header every record is cells only and labels are
//! generated (`r1..`, `c1..`). Fields are trimmed; lines starting with `#`
//! are comments.

use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prob::CountVector;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContingencyTable {
    rows: usize,
    cols: usize,
    /// Row-major cells.
    cells: Vec<u64>,
    row_labels: Vec<String>,
    col_labels: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TableFormat {
    pub header: bool,
}

/// Labels of the rows and columns dropped by [`remove_empty_margins`].
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RemovalLog {
    pub rows: Vec<String>,
    pub cols: Vec<String>,
}

impl RemovalLog {
    pub fn is_empty(&self) -> bool {
        self.rows.is_empty() && self.cols.is_empty()
    }
}

impl ContingencyTable {
    pub fn new(rows: Vec<Vec<u64>>, row_labels: Vec<String>, col_labels: Vec<String>) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.is_empty() || cols == 0 {
            return Err(Error::Parse { line: 1, message: "empty table".into() });
        }
        if let Some(i) = rows.iter().position(|r| r.len() != cols) {
            return Err(Error::Parse {
                line: i + 1,
                message: format!("row has {} cells, expected {cols}", rows[i].len()),
            });
        }
        if row_labels.len() != rows.len() || col_labels.len() != cols {
            return Err(Error::InvalidArgument("label counts do not match table shape".into()));
        }
        let table = Self {
            rows: rows.len(),
            cols,
            cells: rows.into_iter().flatten().collect(),
            row_labels,
            col_labels,
        };
        if table.total() == 0 {
            return Err(Error::EmptyCounts);
        }
        Ok(table)
    }

    /// Table with generated labels.
    pub fn from_rows(rows: Vec<Vec<u64>>) -> Result<Self> {
        let row_labels = (1..=rows.len()).map(|i| format!("r{i}")).collect();
        let cols = rows.first().map_or(0, Vec::len);
        let col_labels = (1..=cols).map(|j| format!("c{j}")).collect();
        Self::new(rows, row_labels, col_labels)
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn get(&self, i: usize, j: usize) -> u64 {
        self.cells[i * self.cols + j]
    }

    pub fn cells(&self) -> &[u64] {
        &self.cells
    }

    pub fn row_labels(&self) -> &[String] {
        &self.row_labels
    }

    pub fn col_labels(&self) -> &[String] {
        &self.col_labels
    }

    pub fn total(&self) -> u64 {
        self.cells.iter().sum()
    }

    pub fn row_totals(&self) -> Vec<u64> {
        self.cells.chunks(self.cols).map(|r| r.iter().sum()).collect()
    }

    pub fn col_totals(&self) -> Vec<u64> {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self.get(i, j)).sum())
            .collect()
    }

    /// Row-major count vector of length `I * J`.
    pub fn flatten(&self) -> Result<CountVector> {
        CountVector::new(self.cells.clone())
    }

    /// CSV with header and row labels; parses back to the same table.
    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
        let mut header = vec![String::new()];
        header.extend(self.col_labels.iter().cloned());
        w.write_record(&header).expect("in-memory write");
        for (i, label) in self.row_labels.iter().enumerate() {
            let mut record = vec![label.clone()];
            record.extend((0..self.cols).map(|j| self.get(i, j).to_string()));
            w.write_record(&record).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input")
    }
}

fn parse_cell(field: &str, line: usize) -> Result<u64> {
    field.parse::<u64>().map_err(|_| Error::Parse {
        line,
        message: format!("cell {field:?} is not a nonnegative integer"),
    })
}

pub fn parse_table(source: impl Read, format: TableFormat) -> Result<ContingencyTable> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(source);

    let mut col_labels: Option<Vec<String>> = None;
    let mut row_labels = Vec::new();
    let mut rows = Vec::new();
    let mut width: Option<usize> = None;
    for record in reader.records() {
        let record = record.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.iter().all(str::is_empty) {
            continue;
        }
        if format.header && col_labels.is_none() {
            col_labels = Some(record.iter().skip(1).map(str::to_owned).collect());
            width = Some(record.len());
            continue;
        }
        let expected = *width.get_or_insert(record.len());
        if record.len() != expected {
            return Err(Error::Parse {
                line,
                message: format!("ragged row: {} fields, expected {expected}", record.len()),
            });
        }
        let mut fields = record.iter();
        if format.header {
            row_labels.push(fields.next().unwrap_or_default().to_owned());
        }
        rows.push(fields.map(|f| parse_cell(f, line)).collect::<Result<Vec<_>>>()?);
    }
    if rows.is_empty() {
        return Err(Error::Parse { line: 1, message: "no data rows".into() });
    }
    if format.header {
        ContingencyTable::new(rows, row_labels, col_labels.unwrap_or_default())
    } else {
        ContingencyTable::from_rows(rows)
    }
}

/// Drops all-zero rows and columns, repeating until none remain.
pub fn remove_empty_margins(table: &ContingencyTable) -> Result<(ContingencyTable, RemovalLog)> {
    let mut keep_rows: Vec<usize> = (0..table.rows).collect();
    let mut keep_cols: Vec<usize> = (0..table.cols).collect();
    let mut log = RemovalLog::default();
    loop {
        let before = (keep_rows.len(), keep_cols.len());
        keep_rows.retain(|&i| {
            let empty = keep_cols.iter().all(|&j| table.get(i, j) == 0);
            if empty {
                log.rows.push(table.row_labels[i].clone());
            }
            !empty
        });
        keep_cols.retain(|&j| {
            let empty = keep_rows.iter().all(|&i| table.get(i, j) == 0);
            if empty {
                log.cols.push(table.col_labels[j].clone());
            }
            !empty
        });
        if (keep_rows.len(), keep_cols.len()) == before {
            break;
        }
    }
    if keep_rows.len() < 2 || keep_cols.len() < 2 {
        return Err(Error::DegenerateTable {
            rows: keep_rows.len(),
            cols: keep_cols.len(),
        });
    }
    let rows = keep_rows
        .iter()
        .map(|&i| keep_cols.iter().map(|&j| table.get(i, j)).collect())
        .collect();
    let cleaned = ContingencyTable::new(
        rows,
        keep_rows.iter().map(|&i| table.row_labels[i].clone()).collect(),
        keep_cols.iter().map(|&j| table.col_labels[j].clone()).collect(),
    )?;
    Ok((cleaned, log))
}

/// Datasets shipped with the crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dataset {
    /// Trophic level of 21 rivers against vegetable composition, 3x6.
    Rivers,
    /// TNFAIP3 diplotypes against systemic sclerosis status, 2x16.
    Sclerosis,
}

impl Dataset {
    pub const ALL: [Dataset; 2] = [Dataset::Rivers, Dataset::Sclerosis];

    pub fn name(&self) -> &'static str {
        match self {
            Self::Rivers => "rivers",
            Self::Sclerosis => "sclerosis",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|d| d.name() == name)
            .ok_or_else(|| Error::UnknownDataset(name.to_owned()))
    }

    pub fn csv(&self) -> &'static str {
        match self {
            Self::Rivers => include_str!("../fixtures/rivers.csv"),
            Self::Sclerosis => include_str!("../fixtures/sclerosis.csv"),
        }
    }

    pub fn table(&self) -> ContingencyTable {
        parse_table(self.csv().as_bytes(), TableFormat { header: true })
            .expect("bundled fixture parses")
    }
}
