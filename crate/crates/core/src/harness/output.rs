use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::run::{RunResult, SweepEntry};
use crate::error::{Error, Result};
use crate::scheduling::Mac;

fn csv_err(path: &Path, e: csv::Error) -> Error {
    Error::io(path, std::io::Error::other(e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Writes `trace.csv`, `summary.json` and `topology.json` into `dir`.
pub fn write_run(result: &RunResult, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

    let trace_path = dir.join("trace.csv");
    let mut w = csv::Writer::from_path(&trace_path).map_err(|e| csv_err(&trace_path, e))?;
    w.write_record([
        "iteration",
        "q25",
        "median",
        "q75",
        "best_gamma",
        "current_gamma",
        "mean_gamma",
    ])
    .map_err(|e| csv_err(&trace_path, e))?;
    for row in &result.trace {
        w.write_record([
            row.iteration.to_string(),
            format!("{:.9}", row.per_ue_gbps.q25),
            format!("{:.9}", row.per_ue_gbps.median),
            format!("{:.9}", row.per_ue_gbps.q75),
            format!("{:.3}", row.best_gamma),
            format!("{:.3}", row.current_gamma),
            format!("{:.3}", row.mean_gamma),
        ])
        .map_err(|e| csv_err(&trace_path, e))?;
    }
    w.flush().map_err(|e| Error::io(&trace_path, e))?;

    write_json(&dir.join("summary.json"), result)?;
    if let Some(topo) = &result.topology {
        write_json(&dir.join("topology.json"), &topo.export())?;
    }
    Ok(())
}

/// One line of the sweep `summary.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub scenario: String,
    pub mac: Mac,
    pub nominal_aues: usize,
    pub effective_aues: Option<usize>,
    pub interference_initial_dbm: Option<f64>,
    pub interference_final_dbm: Option<f64>,
    pub interference_pct: Option<f64>,
    pub sinr_initial_db: Option<f64>,
    pub sinr_final_db: Option<f64>,
    pub sinr_pct: Option<f64>,
    pub throughput_initial_gbps: Option<f64>,
    pub throughput_final_gbps: Option<f64>,
    pub throughput_pct: Option<f64>,
    pub status: String,
}

impl SummaryRow {
    fn from_entry(e: &SweepEntry) -> Self {
        let mut row = SummaryRow {
            scenario: e.name.clone(),
            mac: e.mac,
            nominal_aues: e.nominal_aues,
            effective_aues: None,
            interference_initial_dbm: None,
            interference_final_dbm: None,
            interference_pct: None,
            sinr_initial_db: None,
            sinr_final_db: None,
            sinr_pct: None,
            throughput_initial_gbps: None,
            throughput_final_gbps: None,
            throughput_pct: None,
            status: "ok".into(),
        };
        match &e.result {
            Ok(r) => {
                let s = &r.summary;
                row.effective_aues = Some(r.effective_aues);
                if let Some(d) = s.interference_dbm {
                    row.interference_initial_dbm = Some(d.initial);
                    row.interference_final_dbm = Some(d.final_);
                    row.interference_pct = Some(d.percent);
                }
                if let Some(d) = s.sinr_db {
                    row.sinr_initial_db = Some(d.initial);
                    row.sinr_final_db = Some(d.final_);
                    row.sinr_pct = Some(d.percent);
                }
                row.throughput_initial_gbps = Some(s.throughput_gbps.initial);
                row.throughput_final_gbps = Some(s.throughput_gbps.final_);
                row.throughput_pct = Some(s.throughput_gbps.percent);
            }
            Err(err) => row.status = format!("error: {err}"),
        }
        row
    }
}

pub fn write_summary_csv(entries: &[SweepEntry], path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    for e in entries {
        w.serialize(SummaryRow::from_entry(e))
            .map_err(|err| csv_err(path, err))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
