//! On-disk formats.
//!
//! | file          | header                                                          |
//! |---------------|-----------------------------------------------------------------|
//! | transactions  | `customer_id,purchase_date` (dates `YYYY-MM-DD`)                |
//! | summaries     | `customer_id,x,t_x,T`                                           |
//! | scores        | `customer_id,effective_horizon,churn_probability,already_churned` |
//! | ground truth  | `customer_id,x,t_x,T,holdout_zero` (`0`, `1` or `NA`)           |
//! | parameters    | JSON object, see [`ParamsFile`]                                 |
//!
//! All CSV output uses LF line endings; input may use LF or CRLF.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::TransactionRecord;
use crate::model::{ChurnScore, CustomerSummary, ModelParams};
use crate::simulate::SimulatedCohort;

pub const TRANSACTIONS_HEADER: [&str; 2] = ["customer_id", "purchase_date"];
pub const SUMMARY_HEADER: [&str; 4] = ["customer_id", "x", "t_x", "T"];
pub const SCORE_HEADER: [&str; 4] = [
    "customer_id",
    "effective_horizon",
    "churn_probability",
    "already_churned",
];
pub const GROUND_TRUTH_HEADER: [&str; 5] = ["customer_id", "x", "t_x", "T", "holdout_zero"];

const DATE_FORMAT: &str = "%Y-%m-%d";

pub fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::io(path, e))
}

pub fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn csv_reader<R: Read>(reader: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader)
}

fn csv_writer<W: Write>(writer: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(writer)
}

fn parse_err(line: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

/// A parsed row with the 1-based line it started on.
struct Row {
    line: u64,
    fields: csv::StringRecord,
}

impl std::ops::Index<usize> for Row {
    type Output = str;

    fn index(&self, i: usize) -> &str {
        &self.fields[i]
    }
}

/// Line number of a byte offset. Computed from the raw bytes because the csv
/// crate's own line counter lags by one after CRLF terminators.
fn line_of(newlines: &[usize], byte: u64) -> u64 {
    newlines.partition_point(|&nl| (nl as u64) <= byte) as u64 + 1
}

/// Reads rows after checking the header. An input with no lines at all is
/// treated as empty.
fn read_rows<R: Read>(mut reader: R, header: &[&str]) -> Result<Vec<Row>> {
    let mut raw = Vec::new();
    reader
        .read_to_end(&mut raw)
        .map_err(|e| Error::io("<input>", e))?;
    let newlines: Vec<usize> = raw
        .iter()
        .enumerate()
        .filter_map(|(i, &b)| (b == b'\n').then_some(i))
        .collect();
    let line_at = |pos: Option<&csv::Position>| pos.map_or(0, |p| line_of(&newlines, p.byte()));

    let mut rdr = csv_reader(raw.as_slice());
    let mut records = rdr.records();
    let first = match records.next() {
        None => return Ok(Vec::new()),
        Some(r) => r.map_err(|e| parse_err(line_at(e.position()), e.to_string()))?,
    };
    let got: Vec<&str> = first
        .iter()
        .enumerate()
        .map(|(i, f)| if i == 0 { f.trim_start_matches('\u{feff}') } else { f })
        .collect();
    if got != header {
        return Err(parse_err(
            line_at(first.position()),
            format!("expected header `{}`, got `{}`", header.join(","), got.join(",")),
        ));
    }
    let mut out = Vec::new();
    for rec in records {
        let fields = rec.map_err(|e| parse_err(line_at(e.position()), e.to_string()))?;
        let line = line_at(fields.position());
        if fields.len() == 1 && fields[0].is_empty() {
            continue;
        }
        if fields.len() != header.len() {
            return Err(parse_err(
                line,
                format!("expected {} fields, got {}", header.len(), fields.len()),
            ));
        }
        out.push(Row { line, fields });
    }
    Ok(out)
}

pub fn read_transactions<R: Read>(reader: R) -> Result<Vec<TransactionRecord>> {
    read_rows(reader, &TRANSACTIONS_HEADER)?
        .iter()
        .map(|row| {
            let line = row.line;
            let date = NaiveDate::parse_from_str(&row[1], DATE_FORMAT)
                .map_err(|e| parse_err(line, format!("bad purchase_date `{}`: {e}", &row[1])))?;
            TransactionRecord::new(&row[0], date).map_err(|e| parse_err(line, e.to_string()))
        })
        .collect()
}

pub fn write_transactions<W: Write>(writer: W, records: &[TransactionRecord]) -> Result<()> {
    let mut w = csv_writer(writer);
    w.write_record(TRANSACTIONS_HEADER)?;
    for rec in records {
        let date = rec.purchase_date().format(DATE_FORMAT).to_string();
        w.write_record([rec.customer_id(), date.as_str()])?;
    }
    w.flush().map_err(|e| Error::io("<output>", e))?;
    Ok(())
}

fn parse_field<T: std::str::FromStr>(line: u64, name: &str, raw: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    raw.parse()
        .map_err(|e| parse_err(line, format!("bad {name} `{raw}`: {e}")))
}

/// Summary rows in file order.
pub fn read_summaries<R: Read>(reader: R) -> Result<Vec<(String, CustomerSummary)>> {
    read_rows(reader, &SUMMARY_HEADER)?
        .iter()
        .map(|row| {
            let line = row.line;
            let id = row[0].to_owned();
            if id.is_empty() {
                return Err(parse_err(line, "empty customer_id"));
            }
            let x: u64 = parse_field(line, "x", &row[1])?;
            let tx: f64 = parse_field(line, "t_x", &row[2])?;
            let age: f64 = parse_field(line, "T", &row[3])?;
            let summary =
                CustomerSummary::new(x, tx, age).map_err(|e| parse_err(line, e.to_string()))?;
            Ok((id, summary))
        })
        .collect()
}

pub fn write_summaries<W: Write>(writer: W, rows: &[(String, CustomerSummary)]) -> Result<()> {
    let mut w = csv_writer(writer);
    w.write_record(SUMMARY_HEADER)?;
    for (id, s) in rows {
        w.write_record([
            id.clone(),
            s.frequency().to_string(),
            s.recency().to_string(),
            s.age().to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<output>", e))?;
    Ok(())
}

/// Ten significant digits, ties to even. Values below 0.1 switch to
/// scientific notation so small probabilities keep their digits; 1 prints
/// as `1.0000000000`.
pub fn format_probability(p: f64) -> String {
    if p == 0.0 || p >= 0.1 {
        format!("{p:.10}")
    } else {
        format!("{p:.9e}")
    }
}

pub fn write_scores<W: Write>(writer: W, rows: &[(String, ChurnScore)]) -> Result<()> {
    let mut w = csv_writer(writer);
    w.write_record(SCORE_HEADER)?;
    for (id, s) in rows {
        w.write_record([
            id.clone(),
            s.effective_horizon.to_string(),
            format_probability(s.probability),
            u8::from(s.already_churned).to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<output>", e))?;
    Ok(())
}

/// Day-aggregated `(x, t_x, T)` per simulated customer plus the holdout
/// indicator, in customer order.
pub fn write_ground_truth<W: Write>(writer: W, cohort: &SimulatedCohort) -> Result<()> {
    let mut w = csv_writer(writer);
    w.write_record(GROUND_TRUTH_HEADER)?;
    for c in &cohort.customers {
        let s = c.daily_summary();
        let flag = match cohort.holdout_zero(c) {
            Some(true) => "1",
            Some(false) => "0",
            None => "NA",
        };
        w.write_record([
            c.customer_id.clone(),
            s.frequency().to_string(),
            s.recency().to_string(),
            s.age().to_string(),
            flag.to_owned(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<output>", e))?;
    Ok(())
}

/// Ground-truth rows: summary plus holdout indicator (`None` for `NA`).
pub fn read_ground_truth<R: Read>(reader: R) -> Result<Vec<(String, CustomerSummary, Option<bool>)>> {
    read_rows(reader, &GROUND_TRUTH_HEADER)?
        .iter()
        .map(|row| {
            let line = row.line;
            let x: u64 = parse_field(line, "x", &row[1])?;
            let tx: f64 = parse_field(line, "t_x", &row[2])?;
            let age: f64 = parse_field(line, "T", &row[3])?;
            let summary =
                CustomerSummary::new(x, tx, age).map_err(|e| parse_err(line, e.to_string()))?;
            let flag = match &row[4] {
                "1" => Some(true),
                "0" => Some(false),
                "NA" => None,
                other => return Err(parse_err(line, format!("bad holdout_zero `{other}`"))),
            };
            Ok((row[0].to_owned(), summary, flag))
        })
        .collect()
}

/// Persisted model parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsFile {
    pub r: f64,
    pub alpha: f64,
    pub a: f64,
    pub b: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fitted_on: Option<String>,
    pub tool_version: String,
}

impl ParamsFile {
    pub fn new(params: &ModelParams, fitted_on: Option<String>) -> Self {
        Self {
            r: params.r(),
            alpha: params.alpha(),
            a: params.a(),
            b: params.b(),
            fitted_on,
            tool_version: env!("CARGO_PKG_VERSION").to_owned(),
        }
    }

    pub fn params(&self) -> Result<ModelParams> {
        ModelParams::new(self.r, self.alpha, self.a, self.b)
    }

    pub fn read<R: Read>(reader: R) -> Result<Self> {
        Ok(serde_json::from_reader(reader)?)
    }

    pub fn write<W: Write>(&self, mut writer: W) -> Result<()> {
        serde_json::to_writer_pretty(&mut writer, self)?;
        writer
            .write_all(b"\n")
            .and_then(|_| writer.flush())
            .map_err(|e| Error::io("<output>", e))
    }
}
