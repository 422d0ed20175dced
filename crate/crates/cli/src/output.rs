//! Result files. Every CSV starts with a comment line recording the config
//! hash and tool version; wall times go to a separate sidecar so the result
//! files themselves are reproducible byte for byte.

use std::path::{Path, PathBuf};
use std::time::Duration;

use crate::CliError;

pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    pub fn render(&self, config_hash: &str) -> Result<Vec<u8>, CliError> {
        let mut buf = format!("# config_hash={config_hash} version={}\n", env!("CARGO_PKG_VERSION")).into_bytes();
        {
            let mut w = csv::Writer::from_writer(&mut buf);
            w.write_record(&self.header).map_err(csv_err)?;
            for r in &self.rows {
                w.write_record(r).map_err(csv_err)?;
            }
            w.flush()?;
        }
        Ok(buf)
    }

    pub fn write(&self, path: &Path, config_hash: &str) -> Result<(), CliError> {
        std::fs::write(path, self.render(config_hash)?)?;
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Io(std::io::Error::other(e))
}

/// `name.csv` → `name.timing.csv` with one `label,seconds` row per job.
pub fn write_timing(path: &Path, entries: &[(String, Duration)]) -> Result<(), CliError> {
    let mut t = CsvTable::new(["job", "seconds"]);
    for (label, d) in entries {
        t.push(vec![label.clone(), format!("{:.3}", d.as_secs_f64())]);
    }
    let mut buf = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(&t.header).map_err(csv_err)?;
        for r in &t.rows {
            w.write_record(r).map_err(csv_err)?;
        }
        w.flush()?;
    }
    std::fs::write(timing_path(path), buf)?;
    Ok(())
}

pub fn timing_path(path: &Path) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("results");
    path.with_file_name(format!("{stem}.timing.csv"))
}
