//! CSV record format: one row per record, UTF-8, header required.
//!
//! Columns (in this order when written): `id, age, sex, height, weight,
//! Glucose, HbA1c, eGFR, sbp1, dbp1, LDL-c, icd10, drugs, note`, optionally
//! followed by `DM_label, HTN_label, CKD_label, DLP_label`. Missing numbers
//! and unknown labels are empty cells; `icd10` and `drugs` are `;`-separated.

use std::io::{Read, Write};
use std::path::Path;

use super::{Dataset, Labs, RawRecord, Task};
use crate::error::{Result, XlabelError};

pub const CSV_COLUMNS: [&str; 14] = [
    "id", "age", "sex", "height", "weight", "Glucose", "HbA1c", "eGFR", "sbp1", "dbp1", "LDL-c", "icd10",
    "drugs", "note",
];

fn csv_err(e: csv::Error) -> XlabelError {
    XlabelError::Csv(e.to_string())
}

fn parse_number(cell: &str, row: usize, column: &str) -> Result<Option<f64>> {
    let cell = cell.trim();
    if cell.is_empty() {
        return Ok(None);
    }
    match cell.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(Some(v)),
        _ => Err(XlabelError::Csv(format!("row {row}, column {column}: invalid number {cell:?}"))),
    }
}

fn parse_label(cell: &str, row: usize, column: &str) -> Result<Option<u8>> {
    match cell.trim() {
        "" => Ok(None),
        "0" => Ok(Some(0)),
        "1" => Ok(Some(1)),
        other => Err(XlabelError::Csv(format!("row {row}, column {column}: label must be 0, 1 or empty, got {other:?}"))),
    }
}

fn split_list(cell: &str) -> Vec<String> {
    cell.split(';')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(String::from)
        .collect()
}

fn fmt_number(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

pub fn read_dataset<R: Read>(reader: R) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.headers().map_err(csv_err)?.clone();
    let find = |name: &str| headers.iter().position(|h| h.trim() == name);
    let mut base = [0usize; CSV_COLUMNS.len()];
    for (slot, name) in base.iter_mut().zip(CSV_COLUMNS) {
        *slot = find(name).ok_or_else(|| XlabelError::Csv(format!("missing column {name:?}")))?;
    }
    let label_cols: Vec<Option<usize>> = Task::CHAIN.iter().map(|t| find(&t.label_column())).collect();

    let mut records = Vec::new();
    let mut labels = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let rowno = i + 2; // header is line 1
        let row = row.map_err(|e| XlabelError::Csv(format!("row {rowno}: {e}")))?;
        let cell = |k: usize| row.get(base[k]).unwrap_or("");
        let num = |k: usize| parse_number(cell(k), rowno, CSV_COLUMNS[k]);
        let record = RawRecord {
            id: cell(0).trim().to_string(),
            age: num(1)?,
            sex: cell(2).trim().to_string(),
            height: num(3)?,
            weight: num(4)?,
            labs: Labs {
                glucose: num(5)?,
                hba1c: num(6)?,
                egfr: num(7)?,
                sbp1: num(8)?,
                dbp1: num(9)?,
                ldl_c: num(10)?,
            },
            icd10_codes: split_list(cell(11)),
            drugs: split_list(cell(12)),
            note: cell(13).to_string(),
        };
        record
            .validate()
            .map_err(|e| XlabelError::Csv(format!("row {rowno}: {e}")))?;
        let mut row_labels = [None; 4];
        for (t, col) in Task::CHAIN.iter().zip(&label_cols) {
            if let Some(c) = col {
                row_labels[t.index()] = parse_label(row.get(*c).unwrap_or(""), rowno, &t.label_column())?;
            }
        }
        records.push(record);
        labels.push(row_labels);
    }
    if records.is_empty() {
        return Err(XlabelError::Csv("no records".into()));
    }
    Dataset::new(records, labels).map_err(|e| XlabelError::Csv(e.to_string()))
}

pub fn read_dataset_from_path(path: impl AsRef<Path>) -> Result<Dataset> {
    read_dataset(std::fs::File::open(path)?)
}

/// Raw-record cells in `CSV_COLUMNS` order.
pub fn record_cells(r: &RawRecord) -> Vec<String> {
    vec![
        r.id.clone(),
        fmt_number(r.age),
        r.sex.clone(),
        fmt_number(r.height),
        fmt_number(r.weight),
        fmt_number(r.labs.glucose),
        fmt_number(r.labs.hba1c),
        fmt_number(r.labs.egfr),
        fmt_number(r.labs.sbp1),
        fmt_number(r.labs.dbp1),
        fmt_number(r.labs.ldl_c),
        r.icd10_codes.join(";"),
        r.drugs.join(";"),
        r.note.clone(),
    ]
}

/// Write a dataset with all four label columns.
pub fn write_dataset<W: Write>(writer: W, dataset: &Dataset) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<String> = CSV_COLUMNS.iter().map(|s| s.to_string()).collect();
    header.extend(Task::CHAIN.iter().map(|t| t.label_column()));
    w.write_record(&header).map_err(csv_err)?;
    for (r, y) in dataset.records.iter().zip(&dataset.labels) {
        let mut cells = record_cells(r);
        cells.extend(y.iter().map(|l| l.map(|v| v.to_string()).unwrap_or_default()));
        w.write_record(&cells).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}
