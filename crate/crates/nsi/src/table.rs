//! Aggregate result tables in CSV and markdown.
//!
//! Table numbers carry 6 significant digits. Per-replication records keep
//! full precision; see [`crate::harness`].

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::io::write_file;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub sd: f64,
}

impl Summary {
    /// Mean and sample standard deviation (`n − 1` denominator, 0 for a
    /// single value). An empty slice gives NaN for both.
    pub fn of(values: &[f64]) -> Summary {
        let n = values.len();
        if n == 0 {
            return Summary {
                mean: f64::NAN,
                sd: f64::NAN,
            };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let sd = if n == 1 {
            0.0
        } else {
            let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
            (ss / (n - 1) as f64).sqrt()
        };
        Summary { mean, sd }
    }

    fn rounded(self) -> Summary {
        Summary {
            mean: round_sig6(self.mean),
            sd: round_sig6(self.sd),
        }
    }
}

/// One table line: a sweep setting and method with mean/sd per metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub setting: String,
    pub method: String,
    /// Successful replications the summaries were computed from.
    pub replications: usize,
    pub l2: Summary,
    pub l1: Summary,
    pub fpr: Summary,
    pub tpr: Summary,
    pub nz: Summary,
}

impl AggregateRow {
    fn metrics(&self) -> [Summary; 5] {
        [self.l2, self.l1, self.fpr, self.tpr, self.nz]
    }

    /// The row as it reads back from an emitted table.
    pub fn rounded(&self) -> AggregateRow {
        AggregateRow {
            l2: self.l2.rounded(),
            l1: self.l1.rounded(),
            fpr: self.fpr.rounded(),
            tpr: self.tpr.rounded(),
            nz: self.nz.rounded(),
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TableFormat {
    Csv,
    Markdown,
}

const METRIC_NAMES: [&str; 5] = ["l2", "l1", "fpr", "tpr", "nz"];
const MARKDOWN_HEADERS: [&str; 5] = ["l2", "l1", "FPR", "TPR", "NZ"];

pub fn round_sig6(v: f64) -> f64 {
    if !v.is_finite() || v == 0.0 {
        return v;
    }
    format!("{v:.5e}").parse().expect("formatted float parses")
}

/// Shortest decimal text of `v` rounded to 6 significant digits.
pub fn format_sig6(v: f64) -> String {
    round_sig6(v).to_string()
}

/// Markdown cell in the `mean(sd)` layout, e.g. `10.947(2.018)`.
pub fn markdown_cell(s: Summary) -> String {
    format!("{}({})", format_sig6(s.mean), format_sig6(s.sd))
}

pub fn render_table(rows: &[AggregateRow], format: TableFormat) -> Result<String> {
    if rows.is_empty() {
        return Err(Error::Usage("cannot emit an empty table".into()));
    }
    match format {
        TableFormat::Csv => render_csv(rows),
        TableFormat::Markdown => Ok(render_markdown(rows)),
    }
}

pub fn emit_table(rows: &[AggregateRow], path: impl AsRef<Path>, format: TableFormat) -> Result<()> {
    let text = render_table(rows, format)?;
    write_file(path, text.as_bytes())
}

fn csv_header() -> Vec<String> {
    let mut h = vec!["setting".to_string(), "method".into(), "replications".into()];
    for m in METRIC_NAMES {
        h.push(format!("{m}_mean"));
        h.push(format!("{m}_sd"));
    }
    h
}

fn render_csv(rows: &[AggregateRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let to_err = |e: csv::Error| Error::Usage(format!("csv encoding: {e}"));
    w.write_record(csv_header()).map_err(to_err)?;
    for r in rows {
        let mut rec = vec![r.setting.clone(), r.method.clone(), r.replications.to_string()];
        for s in r.metrics() {
            rec.push(format_sig6(s.mean));
            rec.push(format_sig6(s.sd));
        }
        w.write_record(&rec).map_err(to_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Usage(format!("csv encoding: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn render_markdown(rows: &[AggregateRow]) -> String {
    let mut out = String::from("| setting | method | reps |");
    for h in MARKDOWN_HEADERS {
        let _ = write!(out, " {h} |");
    }
    out.push_str("\n|---|---|---:|");
    out.push_str(&"---:|".repeat(MARKDOWN_HEADERS.len()));
    out.push('\n');
    for r in rows {
        let _ = write!(out, "| {} | {} | {} |", r.setting, r.method, r.replications);
        for s in r.metrics() {
            let _ = write!(out, " {} |", markdown_cell(s));
        }
        out.push('\n');
    }
    out
}

/// Reads a table written by [`emit_table`] in CSV format.
pub fn load_table_csv(path: impl AsRef<Path>) -> Result<Vec<AggregateRow>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let parse_err = |row: usize, column: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        row,
        column,
        message,
    };
    let mut reader = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| parse_err(1, 0, e.to_string()))?;
    if header.iter().ne(csv_header().iter().map(String::as_str)) {
        return Err(parse_err(1, 0, "unexpected table header".into()));
    }
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| parse_err(line, 0, e.to_string()))?;
        let num = |j: usize| -> Result<f64> {
            rec[j]
                .parse()
                .map_err(|_| parse_err(line, j + 1, format!("non-numeric cell {:?}", &rec[j])))
        };
        let summary = |k: usize| -> Result<Summary> {
            Ok(Summary {
                mean: num(3 + 2 * k)?,
                sd: num(4 + 2 * k)?,
            })
        };
        rows.push(AggregateRow {
            setting: rec[0].to_string(),
            method: rec[1].to_string(),
            replications: rec[2]
                .parse()
                .map_err(|_| parse_err(line, 3, "replications must be an integer".into()))?,
            l2: summary(0)?,
            l1: summary(1)?,
            fpr: summary(2)?,
            tpr: summary(3)?,
            nz: summary(4)?,
        });
    }
    Ok(rows)
}
