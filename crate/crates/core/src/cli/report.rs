//! Report CSV rows, reading, writing and summaries.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

pub const HEADER: [&str; 7] = ["run_id", "metric", "input_kind", "config", "seed", "n", "value"];

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("unexpected report header {0:?}")]
    Header(Vec<String>),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub run_id: String,
    pub metric: String,
    pub input_kind: String,
    pub config: String,
    pub seed: u64,
    pub n: u64,
    pub value: f64,
}

/// Shortest decimal form that parses back to the same value.
pub fn format_value(v: f64) -> String {
    format!("{v}")
}

pub fn write_rows<W: Write>(w: W, rows: &[ReportRow]) -> Result<(), ReportError> {
    let mut out = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    out.write_record(HEADER)?;
    for r in rows {
        out.write_record([
            r.run_id.as_str(),
            &r.metric,
            &r.input_kind,
            &r.config,
            &r.seed.to_string(),
            &r.n.to_string(),
            &format_value(r.value),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn rows_to_string(rows: &[ReportRow]) -> String {
    let mut buf = Vec::new();
    write_rows(&mut buf, rows).expect("writing to memory");
    String::from_utf8(buf).expect("csv output is utf-8")
}

pub fn read_rows<R: Read>(r: R) -> Result<Vec<ReportRow>, ReportError> {
    let mut rdr = csv::Reader::from_reader(r);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    if header != HEADER {
        return Err(ReportError::Header(header));
    }
    rdr.deserialize().map(|r| r.map_err(ReportError::from)).collect()
}

/// Parses `key=value;key=value` config strings.
pub fn config_fields(config: &str) -> BTreeMap<&str, &str> {
    config.split(';').filter_map(|kv| kv.split_once('=')).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SummaryRow {
    pub metric: String,
    pub input_kind: String,
    pub config: String,
    pub count: usize,
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

/// Mean, population standard deviation and range per
/// (metric, input_kind, config), across seeds and runs.
pub fn summarize(rows: &[ReportRow]) -> Vec<SummaryRow> {
    let mut groups: BTreeMap<(&str, &str, &str), Vec<f64>> = BTreeMap::new();
    for r in rows {
        groups.entry((&r.metric, &r.input_kind, &r.config)).or_default().push(r.value);
    }
    groups
        .into_iter()
        .map(|((metric, input_kind, config), vs)| {
            let n = vs.len() as f64;
            let mean = vs.iter().sum::<f64>() / n;
            let var = vs.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
            SummaryRow {
                metric: metric.to_owned(),
                input_kind: input_kind.to_owned(),
                config: config.to_owned(),
                count: vs.len(),
                mean,
                std: var.sqrt(),
                min: vs.iter().cloned().fold(f64::INFINITY, f64::min),
                max: vs.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            }
        })
        .collect()
}

pub fn summary_to_string(rows: &[SummaryRow]) -> String {
    let mut out = csv::Writer::from_writer(Vec::new());
    out.write_record(["metric", "input_kind", "config", "count", "mean", "std", "min", "max"])
        .expect("writing to memory");
    for r in rows {
        out.write_record([
            r.metric.clone(),
            r.input_kind.clone(),
            r.config.clone(),
            r.count.to_string(),
            format_value(r.mean),
            format_value(r.std),
            format_value(r.min),
            format_value(r.max),
        ])
        .expect("writing to memory");
    }
    String::from_utf8(out.into_inner().expect("flush to memory")).expect("utf-8")
}
