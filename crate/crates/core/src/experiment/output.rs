//! Result tables: CSV rows plus a JSON sidecar echoing the configuration.

use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::ExperimentConfig;
use crate::channel::csv_err;
use crate::error::{Error, Result};

/// `git describe` of the source tree this binary was built from.
pub const BUILD_ID: &str = env!("RIS_IMAGER_BUILD_ID");

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricRecord {
    pub sweep_value: Option<f64>,
    pub series_value: Option<f64>,
    pub method: String,
    /// `nmse_db`, `avenmse_db`, `phi` or `converged`.
    pub metric: String,
    pub mean: f64,
    pub std: f64,
    /// 95% normal-approximation interval of the mean.
    pub ci_low: f64,
    pub ci_high: f64,
    /// Trials that completed.
    pub trials: usize,
    pub failures: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ResultTable {
    pub experiment: String,
    pub config_hash: String,
    pub seed: u64,
    pub build_id: String,
    pub sweep_axis: Option<String>,
    pub series_axis: Option<String>,
    pub records: Vec<MetricRecord>,
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl ResultTable {
    pub fn new(cfg: &ExperimentConfig) -> Self {
        ResultTable {
            experiment: cfg.name.clone(),
            config_hash: cfg.hash(),
            seed: cfg.seed,
            build_id: BUILD_ID.to_string(),
            sweep_axis: cfg.sweep.as_ref().map(|a| a.axis.name().to_string()),
            series_axis: cfg.series.as_ref().map(|a| a.axis.name().to_string()),
            records: Vec::new(),
        }
    }

    /// First record matching the given labels.
    pub fn find(&self, method: &str, metric: &str, sweep: Option<f64>, series: Option<f64>) -> Option<&MetricRecord> {
        self.records
            .iter()
            .find(|r| r.method == method && r.metric == metric && r.sweep_value == sweep && r.series_value == series)
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "experiment",
            "sweep_axis",
            "sweep_value",
            "series_axis",
            "series_value",
            "method",
            "metric",
            "mean",
            "std",
            "ci_low",
            "ci_high",
            "trials",
            "failures",
            "seed",
            "config_hash",
            "build_id",
        ])
        .map_err(csv_err)?;
        for r in &self.records {
            w.write_record([
                self.experiment.clone(),
                self.sweep_axis.clone().unwrap_or_default(),
                opt(r.sweep_value),
                self.series_axis.clone().unwrap_or_default(),
                opt(r.series_value),
                r.method.clone(),
                r.metric.clone(),
                format!("{:.6}", r.mean),
                format!("{:.6}", r.std),
                format!("{:.6}", r.ci_low),
                format!("{:.6}", r.ci_high),
                r.trials.to_string(),
                r.failures.to_string(),
                self.seed.to_string(),
                self.config_hash.clone(),
                self.build_id.clone(),
            ])
            .map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    /// Write `<path>` as CSV and `<path>.json` as the sidecar; returns the
    /// sidecar path.
    pub fn write(&self, path: &Path, cfg: &ExperimentConfig) -> Result<PathBuf> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        std::fs::write(path, self.to_csv_string()?)?;
        let sidecar = sidecar_path(path);
        let json = serde_json::json!({
            "experiment": self.experiment,
            "config_hash": self.config_hash,
            "seed": self.seed,
            "build_id": self.build_id,
            "config": cfg,
            "records": self.records.len(),
        });
        std::fs::write(&sidecar, serde_json::to_string_pretty(&json).expect("json"))?;
        Ok(sidecar)
    }
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}
