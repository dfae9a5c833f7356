//! CSV tables in the layout of the published tables, and JSON bundles with
//! every replicate value for downstream plotting.
//!
//! The JSON layout is described by `schema/report.schema.json`; its version
//! is [`SCHEMA_VERSION`].

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngSeed;
use crate::simharness::{EstimateReport, Experiment, SimulationConfig};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub experiment: Experiment,
    pub seed: RngSeed,
    pub tool_version: String,
    /// Seconds since the epoch from `SOURCE_DATE_EPOCH`; null otherwise, so
    /// repeated runs produce identical files.
    pub timestamp_unix: Option<u64>,
    pub config: SimulationConfig,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportBundle {
    pub schema_version: u32,
    pub metadata: Metadata,
    pub cells: Vec<EstimateReport>,
}

impl ReportBundle {
    pub fn new(config: &SimulationConfig, cells: Vec<EstimateReport>) -> Self {
        let timestamp_unix = std::env::var("SOURCE_DATE_EPOCH")
            .ok()
            .and_then(|s| s.trim().parse().ok());
        Self {
            schema_version: SCHEMA_VERSION,
            metadata: Metadata {
                experiment: config.experiment,
                seed: config.seed,
                tool_version: env!("CARGO_PKG_VERSION").to_string(),
                timestamp_unix,
                config: config.clone(),
                notes: notes_for(config.experiment),
            },
            cells,
        }
    }

    pub fn table(&self) -> CsvTable {
        let header: &[&str] = match self.metadata.experiment {
            Experiment::Table1 => &["epsilon", "m", "mean", "mse"],
            Experiment::Table2 => &["epsilon", "m", "mean", "mse", "variance"],
            Experiment::Table3 => &["epsilon", "n", "mean", "mse"],
            Experiment::Table4 => &["estimator", "epsilon", "n", "mean", "mse"],
            Experiment::Table5 => &["n", "estimator", "mean", "mse"],
            Experiment::Custom => &["estimator", "target", "epsilon", "n", "mean", "mse"],
        };
        let rows = self
            .cells
            .iter()
            .map(|c| {
                header
                    .iter()
                    .map(|&col| match col {
                        "estimator" => c.cell.estimator.clone(),
                        "target" => serde_json::to_value(c.cell.target)
                            .ok()
                            .and_then(|v| v.as_str().map(str::to_owned))
                            .unwrap_or_default(),
                        "epsilon" => c.cell.epsilon.map(|e| e.to_string()).unwrap_or_default(),
                        "n" => c.cell.n.map(|n| n.to_string()).unwrap_or_default(),
                        "m" => c.cell.m.map(|m| m.to_string()).unwrap_or_default(),
                        "mean" => format_float(c.mean),
                        "mse" => format_float(c.mse),
                        "variance" => format_float(c.variance),
                        _ => unreachable!("unknown column {col}"),
                    })
                    .collect()
            })
            .collect();
        CsvTable {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows,
        }
    }
}

fn notes_for(experiment: Experiment) -> Vec<String> {
    let note: &[&str] = match experiment {
        Experiment::Table1 | Experiment::Table2 => &["every (epsilon, m) cell uses independent draws"],
        Experiment::Table3 | Experiment::Table4 => &[
            "Table 3 and Table 4 draw the same samples, so their MRE rows coincide",
            "Table 4 estimators are evaluated on the same samples in each replication",
            "the published column labels of Table 4 are read as the sample size n",
        ],
        Experiment::Table5 => &["the three estimators are evaluated on the same samples in each replication"],
        Experiment::Custom => &[],
    };
    note.iter().map(|s| s.to_string()).collect()
}

/// 17 significant digits, enough to recover the exact double.
pub fn format_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

/// A parsed or generated CSV table, all fields as text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    /// Column `name` parsed as floats, empty fields as NaN.
    pub fn column_f64(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.header.iter().position(|h| h == name)?;
        self.rows
            .iter()
            .map(|r| {
                let f = r.get(i)?;
                if f.is_empty() {
                    Some(f64::NAN)
                } else {
                    f.parse().ok()
                }
            })
            .collect()
    }
}

fn io_error(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    if e.is_io_error() {
        if let csv::ErrorKind::Io(source) = e.into_kind() {
            return Error::Io {
                path: path.to_path_buf(),
                source,
            };
        }
        unreachable!("checked is_io_error");
    }
    Error::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

pub fn write_csv(bundle: &ReportBundle, path: &Path) -> Result<()> {
    let table = bundle.table();
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    w.write_record(&table.header).map_err(|e| csv_error(path, e))?;
    for row in &table.rows {
        w.write_record(row).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(io_error(path))
}

pub fn read_csv(path: &Path) -> Result<CsvTable> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let header = r
        .headers()
        .map_err(|e| csv_error(path, e))?
        .iter()
        .map(str::to_owned)
        .collect();
    let rows = r
        .records()
        .map(|rec| rec.map(|rec| rec.iter().map(str::to_owned).collect()))
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| csv_error(path, e))?;
    Ok(CsvTable { header, rows })
}

pub fn to_json_string(bundle: &ReportBundle) -> Result<String> {
    serde_json::to_string_pretty(bundle).map_err(|e| Error::Config(format!("cannot serialize report: {e}")))
}

pub fn write_json(bundle: &ReportBundle, path: &Path) -> Result<()> {
    let text = to_json_string(bundle)?;
    let mut w = BufWriter::new(File::create(path).map_err(io_error(path))?);
    w.write_all(text.as_bytes()).map_err(io_error(path))?;
    w.write_all(b"\n").map_err(io_error(path))?;
    w.flush().map_err(io_error(path))
}

pub fn read_json(path: &Path) -> Result<ReportBundle> {
    let text = std::fs::read_to_string(path).map_err(io_error(path))?;
    let bundle: ReportBundle = serde_json::from_str(&text).map_err(|e| Error::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    if bundle.schema_version != SCHEMA_VERSION {
        return Err(Error::Format {
            path: path.to_path_buf(),
            message: format!(
                "schema version {} is not supported (expected {SCHEMA_VERSION})",
                bundle.schema_version
            ),
        });
    }
    Ok(bundle)
}
