use super::FlowTable;
use crate::error::{Error, Result};

/// Per-feature min/max fitted on training rows.
#[derive(Debug, Clone, PartialEq)]
pub struct NormStats {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
    pub fitted_rows: usize,
}

impl NormStats {
    /// Fits on rows `start..end` of `table`.
    pub fn fit(table: &FlowTable, start: usize, end: usize) -> Result<Self> {
        if start >= end || end > table.n_rows() {
            return Err(Error::Data(format!(
                "min-max fit range {start}..{end} is empty or outside {} rows",
                table.n_rows()
            )));
        }
        let f = table.n_features();
        let mut min = vec![f64::INFINITY; f];
        let mut max = vec![f64::NEG_INFINITY; f];
        for i in start..end {
            for (j, &v) in table.row(i).iter().enumerate() {
                min[j] = min[j].min(v);
                max[j] = max[j].max(v);
            }
        }
        Ok(NormStats {
            min,
            max,
            fitted_rows: end - start,
        })
    }

    pub fn features(&self) -> usize {
        self.min.len()
    }

    /// `(v - min)/(max - min)` clamped to `[0, 1]`; constant features map to 0.
    pub fn scale(&self, j: usize, v: f64) -> f64 {
        let span = self.max[j] - self.min[j];
        if span <= 0.0 {
            0.0
        } else {
            ((v - self.min[j]) / span).clamp(0.0, 1.0)
        }
    }

    pub fn apply_row(&self, row: &mut [f64]) {
        for (j, v) in row.iter_mut().enumerate() {
            *v = self.scale(j, *v);
        }
    }

    pub fn apply(&self, table: &FlowTable) -> Result<FlowTable> {
        if table.n_features() != self.features() {
            return Err(Error::Config(format!(
                "normalisation stats cover {} features, table has {}",
                self.features(),
                table.n_features()
            )));
        }
        let mut out = table.clone();
        for row in out.values.chunks_mut(self.features()) {
            self.apply_row(row);
        }
        Ok(out)
    }
}
