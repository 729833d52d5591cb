use super::FlowTable;
use crate::error::{Error, Result};
use crate::numerics::Tensor;

/// How a window's target is derived from its rows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LabelRule {
    /// 1 iff any contained row is anomalous.
    Any,
    /// 1 iff at least this fraction of rows is anomalous.
    Fraction(f64),
    /// Regression target: value of the given feature in the row following
    /// the window.
    NextValue(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    /// `W×F`.
    pub data: Tensor,
    pub label: f64,
    /// Row index of the first row in the source table.
    pub start: usize,
    /// Event type of the first anomalous row, `normal` when there is none.
    pub tag: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindowSet {
    pub windows: Vec<Window>,
    pub window_len: usize,
    pub hop: usize,
    pub rule: LabelRule,
}

impl WindowSet {
    pub fn len(&self) -> usize {
        self.windows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.windows.is_empty()
    }

    pub fn positives(&self) -> usize {
        self.windows.iter().filter(|w| w.label >= 0.5).count()
    }
}

/// `⌊(rows − W)/hop⌋ + 1`, or 0 when the series is shorter than a window.
pub fn window_count(rows: usize, window_len: usize, hop: usize) -> usize {
    if rows < window_len || hop == 0 {
        0
    } else {
        (rows - window_len) / hop + 1
    }
}

pub fn make_windows(table: &FlowTable, window_len: usize, hop: usize, rule: LabelRule) -> Result<WindowSet> {
    if window_len == 0 || hop == 0 {
        return Err(Error::Config("window length and hop must be at least 1".into()));
    }
    // a next-value target needs one row past the window
    let usable = match rule {
        LabelRule::NextValue(j) => {
            if j >= table.n_features() {
                return Err(Error::Config(format!(
                    "regression target feature {j} out of range for {} features",
                    table.n_features()
                )));
            }
            table.n_rows().saturating_sub(1)
        }
        LabelRule::Fraction(f) if !(0.0..=1.0).contains(&f) => {
            return Err(Error::Config(format!("label fraction must be in [0, 1], got {f}")));
        }
        _ => table.n_rows(),
    };
    if window_len > usable {
        return Err(Error::Data(format!(
            "window length {window_len} exceeds the {usable} usable rows"
        )));
    }
    let f = table.n_features();
    let count = window_count(usable, window_len, hop);
    let mut windows = Vec::with_capacity(count);
    for k in 0..count {
        let start = k * hop;
        let end = start + window_len;
        let data = Tensor::from_vec(&[window_len, f], table.values[start * f..end * f].to_vec())?;
        let anomalous = table.labels[start..end].iter().filter(|&&l| l == 1).count();
        let label = match rule {
            LabelRule::Any => f64::from(u8::from(anomalous > 0)),
            LabelRule::Fraction(frac) => f64::from(u8::from(anomalous > 0 && anomalous as f64 >= frac * window_len as f64)),
            LabelRule::NextValue(j) => table.value(end, j),
        };
        let tag = (start..end)
            .find(|&i| table.labels[i] == 1)
            .map_or_else(|| "normal".to_string(), |i| table.tags[i].clone());
        windows.push(Window { data, label, start, tag });
    }
    Ok(WindowSet {
        windows,
        window_len,
        hop,
        rule,
    })
}
