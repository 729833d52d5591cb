use std::path::Path;

use crate::error::{Error, Result};

/// Numeric flow features with a binary anomaly label per row.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowTable {
    pub columns: Vec<String>,
    /// Row-major `rows × columns.len()`.
    pub values: Vec<f64>,
    pub labels: Vec<u8>,
    /// Event type per row (`normal` when unknown or not anomalous).
    pub tags: Vec<String>,
    pub provenance: String,
    pub dropped_rows: usize,
    pub dropped_columns: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoadOptions {
    pub label_column: String,
    /// Optional column holding an anomaly-type tag; never used as a feature.
    pub tag_column: Option<String>,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions {
            label_column: "label".into(),
            tag_column: Some("event".into()),
        }
    }
}

impl FlowTable {
    pub fn n_rows(&self) -> usize {
        self.labels.len()
    }

    pub fn n_features(&self) -> usize {
        self.columns.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let f = self.n_features();
        &self.values[i * f..(i + 1) * f]
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n_features() + j]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n_rows()).map(|i| self.value(i, j)).collect()
    }

    /// Rows `start..end`, all columns.
    pub fn slice_rows(&self, start: usize, end: usize) -> FlowTable {
        let f = self.n_features();
        FlowTable {
            columns: self.columns.clone(),
            values: self.values[start * f..end * f].to_vec(),
            labels: self.labels[start..end].to_vec(),
            tags: self.tags[start..end].to_vec(),
            provenance: format!("{} [rows {start}..{end}]", self.provenance),
            dropped_rows: 0,
            dropped_columns: Vec::new(),
        }
    }

    pub fn select_columns(&self, keep: &[usize]) -> FlowTable {
        let mut values = Vec::with_capacity(self.n_rows() * keep.len());
        for i in 0..self.n_rows() {
            let row = self.row(i);
            values.extend(keep.iter().map(|&j| row[j]));
        }
        FlowTable {
            columns: keep.iter().map(|&j| self.columns[j].clone()).collect(),
            values,
            labels: self.labels.clone(),
            tags: self.tags.clone(),
            provenance: self.provenance.clone(),
            dropped_rows: self.dropped_rows,
            dropped_columns: self.dropped_columns.clone(),
        }
    }

    /// Writes `columns..., label, event` with a header row, preceded by one
    /// `# ` line per entry of `comments`.
    pub fn write_csv(&self, path: &Path, comments: &[String]) -> Result<()> {
        use std::io::Write as _;
        let mut file = std::io::BufWriter::new(std::fs::File::create(path).map_err(|e| Error::io(path, e))?);
        for c in comments {
            writeln!(file, "# {c}").map_err(|e| Error::io(path, e))?;
        }
        let mut w = csv::Writer::from_writer(file);
        let mut header: Vec<&str> = self.columns.iter().map(String::as_str).collect();
        header.extend(["label", "event"]);
        w.write_record(&header).map_err(|e| csv_error(path, e))?;
        for i in 0..self.n_rows() {
            let mut rec: Vec<String> = self.row(i).iter().map(|v| format!("{v:?}")).collect();
            rec.push(self.labels[i].to_string());
            rec.push(self.tags[i].clone());
            w.write_record(&rec).map_err(|e| csv_error(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Data(format!("{}: {other:?}", path.display())),
    }
}

fn parse_label(cell: &str) -> Option<u8> {
    match cell.trim().parse::<f64>() {
        Ok(v) if v == 0.0 => Some(0),
        Ok(v) if v == 1.0 => Some(1),
        _ => None,
    }
}

/// Reads a header-first, comma-separated file. Columns where most cells are
/// not numbers are dropped as non-numeric; remaining rows with any bad cell
/// (or a label other than 0/1) are dropped and counted. `#` lines are skipped.
pub fn load_flows(path: &Path, options: &LoadOptions) -> Result<FlowTable> {
    if !path.exists() {
        return Err(Error::Data(format!("flow file {} does not exist", path.display())));
    }
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| csv_error(path, e))?
        .iter()
        .map(str::to_string)
        .collect();
    let label_idx = header
        .iter()
        .position(|h| *h == options.label_column)
        .ok_or_else(|| {
            Error::Data(format!(
                "{}: label column `{}` not found in header",
                path.display(),
                options.label_column
            ))
        })?;
    let tag_idx = options
        .tag_column
        .as_ref()
        .and_then(|t| header.iter().position(|h| h == t));

    let mut records = Vec::new();
    let mut dropped_rows = 0;
    for rec in reader.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        if rec.len() != header.len() {
            dropped_rows += 1;
            continue;
        }
        records.push(rec);
    }

    let candidates: Vec<usize> = (0..header.len())
        .filter(|&j| j != label_idx && Some(j) != tag_idx)
        .collect();
    let mut numeric = Vec::new();
    let mut dropped_columns = Vec::new();
    for &j in &candidates {
        let non_empty = records.iter().filter(|r| !r[j].is_empty()).count();
        let parsed = records.iter().filter(|r| r[j].parse::<f64>().is_ok()).count();
        if non_empty > 0 && parsed * 2 > non_empty {
            numeric.push(j);
        } else {
            dropped_columns.push(header[j].clone());
        }
    }

    let mut values = Vec::new();
    let mut labels = Vec::new();
    let mut tags = Vec::new();
    let mut row = Vec::with_capacity(numeric.len());
    'rows: for rec in &records {
        let Some(label) = parse_label(&rec[label_idx]) else {
            dropped_rows += 1;
            continue;
        };
        row.clear();
        for &j in &numeric {
            match rec[j].parse::<f64>() {
                Ok(v) if v.is_finite() => row.push(v),
                _ => {
                    dropped_rows += 1;
                    continue 'rows;
                }
            }
        }
        values.extend_from_slice(&row);
        labels.push(label);
        let tag = tag_idx.map(|t| rec[t].to_string()).filter(|t| !t.is_empty());
        tags.push(tag.unwrap_or_else(|| if label == 1 { "anomalous".into() } else { "normal".into() }));
    }
    if labels.is_empty() {
        return Err(Error::Data(format!("{}: no usable rows", path.display())));
    }
    if numeric.is_empty() {
        return Err(Error::Data(format!("{}: no numeric feature columns", path.display())));
    }
    Ok(FlowTable {
        columns: numeric.iter().map(|&j| header[j].clone()).collect(),
        values,
        labels,
        tags,
        provenance: path.display().to_string(),
        dropped_rows,
        dropped_columns,
    })
}
