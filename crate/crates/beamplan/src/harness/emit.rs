//! Report emission: JSON documents plus CSV tables for plotting.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::harness::Report;

/// Which file set to emit. `Csv` writes the two CSV tables alongside the
/// JSON documents; `Json` writes the JSON documents only.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
}

impl ReportFormat {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(Error::InvalidArgument(format!(
                "unknown report format `{other}` (expected json|csv)"
            ))),
        }
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let body = serde_json::to_string_pretty(value)?;
    write_file(path, &body)
}

/// Write `report.json` (the full report), `regions.json` (per-trajectory
/// partitions per method), and with [`ReportFormat::Csv`] also `counts.csv`
/// and `snr_per_location.csv`. Returns the written paths.
pub fn emit_report(report: &Report, format: ReportFormat, out_dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut written = Vec::new();

    let report_path = out_dir.join("report.json");
    write_json(&report_path, report)?;
    written.push(report_path);

    #[derive(Serialize)]
    struct Regions<'a> {
        method: &'a str,
        partitions: &'a [crate::planner::Partition],
    }
    let regions: Vec<Regions> = report
        .methods
        .iter()
        .map(|m| Regions {
            method: m.method.name(),
            partitions: &m.partitions,
        })
        .collect();
    let regions_path = out_dir.join("regions.json");
    write_json(&regions_path, &regions)?;
    written.push(regions_path);

    if format == ReportFormat::Csv {
        let mut counts = String::from("method,presetup_mean,runtime_mean\n");
        for m in &report.methods {
            counts.push_str(&format!(
                "{},{},{}\n",
                m.method.name(),
                m.presetup_mean,
                m.runtime_mean
            ));
        }
        let counts_path = out_dir.join("counts.csv");
        write_file(&counts_path, &counts)?;
        written.push(counts_path);

        let mut snr = String::from("location");
        for m in &report.methods {
            snr.push(',');
            snr.push_str(m.method.name());
        }
        snr.push('\n');
        let m_len = report.config.scenario.m;
        for x in 0..m_len {
            snr.push_str(&format!("{}", x + 1));
            for m in &report.methods {
                snr.push(',');
                snr.push_str(&format!("{}", m.snr_per_location_db[x]));
            }
            snr.push('\n');
        }
        let snr_path = out_dir.join("snr_per_location.csv");
        write_file(&snr_path, &snr)?;
        written.push(snr_path);
    }
    Ok(written)
}
