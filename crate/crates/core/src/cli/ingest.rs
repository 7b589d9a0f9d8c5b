use crate::error::{Error, Result};
use crate::fit::LossRecord;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

/// One row of a loss file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossRow {
    pub period: i64,
    pub cell: String,
    pub amount: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Ingested {
    pub records: BTreeMap<String, LossRecord>,
    /// Rows below the threshold, per cell.
    pub rejected: BTreeMap<String, usize>,
}

impl Ingested {
    pub fn rejected_total(&self) -> usize {
        self.rejected.values().sum()
    }
}

/// Serializes rows with a header line.
pub fn write_rows<T: Serialize, W: Write>(rows: &[T], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Parses rows written by [`write_rows`]; failures carry the file line.
pub fn read_rows<T: DeserializeOwned, R: Read>(input: R) -> Result<Vec<T>> {
    let mut rd = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    rd.deserialize()
        .map(|r| {
            r.map_err(|e| Error::Data { line: e.position().map_or(0, |p| p.line() as usize), message: e.to_string() })
        })
        .collect()
}

/// Groups loss rows into per-cell records, dropping and counting rows
/// below `threshold`.
pub fn ingest_rows<R: Read>(input: R, threshold: f64) -> Result<Ingested> {
    let mut rd = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let mut by_cell: BTreeMap<String, Vec<(i64, f64)>> = BTreeMap::new();
    let mut rejected: BTreeMap<String, usize> = BTreeMap::new();
    for row in rd.deserialize::<LossRow>() {
        let row = row
            .map_err(|e| Error::Data { line: e.position().map_or(0, |p| p.line() as usize), message: e.to_string() })?;
        if !(row.amount > 0.0 && row.amount.is_finite()) {
            return Err(Error::Data {
                line: 0,
                message: format!("amount {} in cell {} is not positive", row.amount, row.cell),
            });
        }
        if row.amount < threshold {
            *rejected.entry(row.cell).or_default() += 1;
        } else {
            by_cell.entry(row.cell).or_default().push((row.period, row.amount));
        }
    }
    if by_cell.is_empty() && rejected.is_empty() {
        log::warn!("loss file has no rows");
    }
    let total: usize = rejected.values().sum();
    if total > 0 {
        log::info!("{total} rows below the threshold {threshold} were rejected");
    }
    let records = by_cell
        .into_iter()
        .map(|(cell, rows)| Ok((cell, LossRecord::from_rows(threshold, &rows)?)))
        .collect::<Result<_>>()?;
    Ok(Ingested { records, rejected })
}

pub fn ingest_losses(path: &Path, threshold: f64) -> Result<Ingested> {
    ingest_rows(std::fs::File::open(path)?, threshold)
}

/// Rows of a record in period order.
pub fn record_rows(cell: &str, record: &LossRecord) -> Vec<LossRow> {
    record
        .periods()
        .iter()
        .flat_map(|p| p.amounts.iter().map(move |&amount| LossRow { period: p.period, cell: cell.to_string(), amount }))
        .collect()
}
