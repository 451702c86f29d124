use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub lr: f64,
    pub train_loss: f64,
    pub train_accuracy: f64,
    pub test_loss: f64,
    pub test_accuracy: f64,
    pub wall_seconds: f64,
}

/// Per-epoch training record.
///
/// [`MetricsLog::to_csv`] leaves out wall time so that the file depends only
/// on the configuration and seed; [`MetricsLog::timing_csv`] carries it.
#[derive(Clone, Debug, Default, Serialize)]
pub struct MetricsLog {
    rows: Vec<EpochMetrics>,
}

pub const METRICS_HEADER: &str = "epoch,lr,train_loss,train_accuracy,test_loss,test_accuracy";

impl MetricsLog {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a row; epochs must strictly increase.
    pub fn push(&mut self, row: EpochMetrics) -> Result<()> {
        if let Some(last) = self.rows.last() {
            if row.epoch <= last.epoch {
                return Err(Error::InvalidArgument(format!(
                    "metrics epoch {} after {}",
                    row.epoch, last.epoch
                )));
            }
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn rows(&self) -> &[EpochMetrics] {
        &self.rows
    }

    pub fn last(&self) -> Option<&EpochMetrics> {
        self.rows.last()
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("{METRICS_HEADER}\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.epoch, r.lr, r.train_loss, r.train_accuracy, r.test_loss, r.test_accuracy
            ));
        }
        out
    }

    pub fn timing_csv(&self) -> String {
        let mut out = String::from("epoch,wall_seconds\n");
        for r in &self.rows {
            out.push_str(&format!("{},{}\n", r.epoch, r.wall_seconds));
        }
        out
    }

    pub fn write(&self, metrics: &Path, timing: &Path) -> Result<()> {
        std::fs::write(metrics, self.to_csv()).map_err(|e| Error::io(metrics, e))?;
        std::fs::write(timing, self.timing_csv()).map_err(|e| Error::io(timing, e))
    }
}
