//! Experiment reports: fixed-column CSV and JSON emission.

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::Result;

/// One `(k, config)` result cell.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ReportRow {
    pub k: f64,
    pub method: String,
    pub n_or_dims: String,
    pub case: String,
    /// Fixed-point iterations to the residual tolerance (rounds for the
    /// sequential methods).
    pub iters_fp: Option<usize>,
    pub iters_gmres: Option<usize>,
    /// Residual reduction after the theorem-budget number of iterations.
    pub rho: Option<f64>,
    pub diverged: bool,
    pub dofs: usize,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ReportMeta {
    /// GMRES preconditioning side.
    pub preconditioning: String,
    pub initial_guess: String,
    /// What one reported sequential iteration spans.
    pub rms_iteration_unit: String,
    pub seed: u64,
}

impl Default for ReportMeta {
    fn default() -> Self {
        ReportMeta {
            preconditioning: "left".into(),
            initial_guess: "zero".into(),
            rms_iteration_unit: "one full schedule round (e.g. forward+backward)".into(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Default)]
pub struct Report {
    pub meta: ReportMeta,
    pub rows: Vec<ReportRow>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

impl std::str::FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            other => Err(Error::InvalidConfig(format!(
                "unknown report format {other:?} (csv|json)"
            ))),
        }
    }
}

fn opt_usize(v: &Option<usize>) -> String {
    v.map_or(String::new(), |x| x.to_string())
}

fn opt_f64(v: &Option<f64>) -> String {
    v.map_or(String::new(), |x| format!("{x:e}"))
}

impl Report {
    pub fn to_csv(&self) -> String {
        let mut out = format!(
            "# preconditioning={} x0={} rms_unit={{{}}} seed={}\n",
            self.meta.preconditioning,
            self.meta.initial_guess,
            self.meta.rms_iteration_unit,
            self.meta.seed
        );
        out.push_str("k,method,N_or_dims,case,iters_fp,iters_gmres,rho,diverged,dofs,wall_ms\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{}\n",
                r.k,
                r.method,
                r.n_or_dims,
                r.case,
                opt_usize(&r.iters_fp),
                opt_usize(&r.iters_gmres),
                opt_f64(&r.rho),
                r.diverged,
                r.dofs,
                r.wall_ms
            ));
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }

    pub fn write(&self, path: &std::path::Path, format: ReportFormat) -> Result<()> {
        let text = match format {
            ReportFormat::Csv => self.to_csv(),
            ReportFormat::Json => self.to_json(),
        };
        std::fs::write(path, text).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })
    }
}
