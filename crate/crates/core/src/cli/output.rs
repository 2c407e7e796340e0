use std::fs::File;
use std::io::{self, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::verify::ExperimentReport;

pub const CSV_HEADER: [&str; 8] = [
    "experiment",
    "statistic",
    "estimate",
    "std_error",
    "threshold",
    "verdict",
    "n_samples",
    "seed",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
}

impl FromStr for OutputFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(OutputFormat::Json),
            "csv" => Ok(OutputFormat::Csv),
            other => Err(Error::InvalidArgument(format!("unknown format {other:?}"))),
        }
    }
}

/// 17 significant digits.
fn float(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_report<W: Write>(reports: &[ExperimentReport], format: OutputFormat, out: W) -> Result<()> {
    match format {
        OutputFormat::Json => {
            let mut out = out;
            serde_json::to_writer_pretty(&mut out, reports)?;
            out.write_all(b"\n")?;
            out.flush()?;
        }
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(CSV_HEADER)?;
            for r in reports {
                for s in &r.statistics {
                    w.write_record([
                        r.name.clone(),
                        s.name.clone(),
                        float(s.estimate),
                        float(s.std_error),
                        float(s.threshold),
                        s.verdict.as_str().to_string(),
                        s.n_samples.to_string(),
                        r.seed.to_string(),
                    ])?;
                }
            }
            w.flush()?;
        }
    }
    Ok(())
}

/// Writes to `path`, or to standard output when `path` is `None`.
pub fn emit_report(reports: &[ExperimentReport], format: OutputFormat, path: Option<&Path>) -> Result<()> {
    match path {
        Some(p) => write_report(reports, format, io::BufWriter::new(File::create(p)?)),
        None => write_report(reports, format, io::stdout().lock()),
    }
}
