//! Text checkpoints: header, config, preprocessing state, then one block per
//! parameter tensor. Floats are written with 17 significant digits so a
//! reload reproduces every bit.

use std::fmt::Write as _;
use std::path::Path;

use crate::config::RunConfig;
use crate::data::{make_windows, FlowTable, NormStats, WindowSet};
use crate::error::{Error, Result};
use crate::model::{ModelConfig, ModelParams, PARAM_NAMES};
use crate::numerics::Tensor;

pub const HEADER: &str = "mamnet-checkpoint v1";
const HEADER_PREFIX: &str = "mamnet-checkpoint ";

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub config: RunConfig,
    /// Feature columns of the source table, before selection.
    pub columns: Vec<String>,
    pub selected: Vec<usize>,
    pub norm: NormStats,
    pub params: ModelParams,
}

fn float(v: f64) -> String {
    format!("{v:.16e}")
}

fn floats(vs: &[f64]) -> String {
    vs.iter().map(|&v| float(v)).collect::<Vec<_>>().join(" ")
}

impl Checkpoint {
    pub fn model_config(&self) -> ModelConfig {
        self.config.model_config(self.selected.len())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let config = self.config.to_text();
        let _ = writeln!(out, "{HEADER}");
        let _ = writeln!(out, "config_hash {}", self.config.hash());
        let _ = writeln!(out, "config {}", config.lines().count());
        out.push_str(&config);
        let _ = writeln!(out, "columns {}", self.columns.len());
        for c in &self.columns {
            let _ = writeln!(out, "{c}");
        }
        let sel: Vec<String> = self.selected.iter().map(usize::to_string).collect();
        let _ = writeln!(out, "selected {}", sel.join(" "));
        let _ = writeln!(out, "norm_min {}", floats(&self.norm.min));
        let _ = writeln!(out, "norm_max {}", floats(&self.norm.max));
        let _ = writeln!(out, "norm_rows {}", self.norm.fitted_rows);
        for (name, t) in self.params.named() {
            let shape: Vec<String> = t.shape().iter().map(usize::to_string).collect();
            let _ = writeln!(out, "tensor {name} {}", shape.join("x"));
            for row in t.data().chunks(t.cols().max(1)) {
                let _ = writeln!(out, "{}", floats(row));
            }
        }
        out.push_str("end\n");
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| match e {
            Error::Data(m) => Error::Data(format!("checkpoint {}: {m}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = Lines { inner: text.lines(), line: 0 };
        let header = lines.next("header")?;
        if header != HEADER {
            return Err(match header.strip_prefix(HEADER_PREFIX) {
                Some(version) => Error::Data(format!("unsupported checkpoint version `{version}`, expected v1")),
                None => Error::Data("not a mamnet checkpoint (bad header line)".into()),
            });
        }
        let hash = lines.field("config_hash")?.to_string();
        let n_config: usize = lines.number("config")?;
        let mut config_text = String::new();
        for _ in 0..n_config {
            config_text.push_str(lines.next("config block")?);
            config_text.push('\n');
        }
        let config = RunConfig::parse(&config_text)
            .map_err(|e| Error::Data(format!("config block: {e}")))?;
        if config.hash() != hash {
            return Err(Error::Data(format!(
                "config hash mismatch: header {hash}, block {}",
                config.hash()
            )));
        }
        let n_columns: usize = lines.number("columns")?;
        let columns = (0..n_columns)
            .map(|_| lines.next("column names").map(str::to_string))
            .collect::<Result<Vec<_>>>()?;
        let selected = parse_list::<usize>(lines.field("selected")?, "selected")?;
        if selected.iter().any(|&j| j >= n_columns) || selected.is_empty() {
            return Err(Error::Data("selected feature index out of range".into()));
        }
        let norm = NormStats {
            min: parse_list(lines.field("norm_min")?, "norm_min")?,
            max: parse_list(lines.field("norm_max")?, "norm_max")?,
            fitted_rows: lines.number("norm_rows")?,
        };
        if norm.min.len() != selected.len() || norm.max.len() != selected.len() {
            return Err(Error::Data("normalisation stats do not match the selected features".into()));
        }

        let model_config = config.model_config(selected.len());
        let shapes = ModelParams::shapes(&model_config);
        let mut tensors = Vec::with_capacity(PARAM_NAMES.len());
        for (name, expect) in PARAM_NAMES.iter().zip(&shapes) {
            let head = lines.field("tensor").map_err(|_| Error::Data(format!("missing tensor block `{name}`")))?;
            let mut parts = head.split_whitespace();
            let (got_name, shape_text) = (parts.next().unwrap_or(""), parts.next().unwrap_or(""));
            if got_name != *name {
                return Err(Error::Data(format!("expected tensor `{name}`, found `{got_name}`")));
            }
            let shape = parse_shape(shape_text).ok_or_else(|| Error::Data(format!("tensor `{name}`: bad shape")))?;
            if &shape != expect {
                return Err(Error::Data(format!("tensor `{name}`: shape {shape:?}, config implies {expect:?}")));
            }
            let total: usize = shape.iter().product();
            let mut data = Vec::with_capacity(total);
            while data.len() < total {
                let row = lines
                    .next(name)
                    .map_err(|_| Error::Data(format!("tensor `{name}` truncated: {} of {total} values", data.len())))?;
                if row.starts_with("tensor ") || row == "end" {
                    return Err(Error::Data(format!("tensor `{name}` truncated: {} of {total} values", data.len())));
                }
                data.extend(parse_list::<f64>(row, name)?);
            }
            if data.len() != total {
                return Err(Error::Data(format!("tensor `{name}`: {} values, shape needs {total}", data.len())));
            }
            tensors.push(Tensor::from_vec(&shape, data)?);
        }
        if lines.next("end marker")? != "end" {
            return Err(Error::Data("trailing data after the last tensor".into()));
        }
        let params = ModelParams::from_tensors(&model_config, tensors).map_err(|e| Error::Data(e.to_string()))?;
        Ok(Checkpoint {
            config,
            columns,
            selected,
            norm,
            params,
        })
    }

    /// Selected, normalised features of one raw row over [`Self::columns`].
    pub fn transform_row(&self, raw: &[f64]) -> Result<Vec<f64>> {
        if raw.len() != self.columns.len() {
            return Err(Error::Data(format!(
                "row has {} values, model expects {}",
                raw.len(),
                self.columns.len()
            )));
        }
        let mut row: Vec<f64> = self.selected.iter().map(|&j| raw[j]).collect();
        self.norm.apply_row(&mut row);
        Ok(row)
    }

    /// Windows over a whole table with this checkpoint's preprocessing.
    pub fn windows(&self, table: &FlowTable) -> Result<WindowSet> {
        if table.columns != self.columns {
            return Err(Error::Data(format!(
                "data columns {:?} differ from the model's {:?}",
                table.columns, self.columns
            )));
        }
        let scaled = self.norm.apply(&table.select_columns(&self.selected))?;
        make_windows(&scaled, self.config.window_len, self.config.hop, self.config.label_rule())
    }
}

struct Lines<'a> {
    inner: std::str::Lines<'a>,
    line: usize,
}

impl<'a> Lines<'a> {
    fn next(&mut self, what: &str) -> Result<&'a str> {
        self.line += 1;
        self.inner
            .next()
            .ok_or_else(|| Error::Data(format!("truncated at line {} while reading {what}", self.line)))
    }

    fn field(&mut self, key: &str) -> Result<&'a str> {
        let line = self.next(key)?;
        match line.split_once(' ') {
            Some((k, rest)) if k == key => Ok(rest),
            None if line == key => Ok(""),
            _ => Err(Error::Data(format!("line {}: expected `{key}`", self.line))),
        }
    }

    fn number<T: std::str::FromStr>(&mut self, key: &str) -> Result<T> {
        let line = self.line + 1;
        self.field(key)?
            .trim()
            .parse()
            .map_err(|_| Error::Data(format!("line {line}: bad `{key}` value")))
    }
}

fn parse_list<T: std::str::FromStr>(text: &str, what: &str) -> Result<Vec<T>> {
    text.split_whitespace()
        .map(|s| s.parse().map_err(|_| Error::Data(format!("{what}: cannot parse `{s}`"))))
        .collect()
}

fn parse_shape(text: &str) -> Option<Vec<usize>> {
    text.split('x').map(|d| d.parse().ok()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Rng;

    fn sample() -> Checkpoint {
        let mut config = RunConfig::default();
        config.window_len = 8;
        config.state_dim = 3;
        config.fusion_dim = 2;
        let selected = vec![0, 2];
        let mc = config.model_config(selected.len());
        let params = ModelParams::init(&mc, &mut Rng::new(4)).unwrap();
        Checkpoint {
            config,
            columns: vec!["a".into(), "b b".into(), "c".into()],
            selected,
            norm: NormStats {
                min: vec![0.1, -3.0],
                max: vec![1.0 / 3.0, 7.25],
                fitted_rows: 70,
            },
            params,
        }
    }

    #[test]
    fn round_trip_is_exact() {
        let ck = sample();
        let back = Checkpoint::parse(&ck.to_text()).unwrap();
        assert_eq!(back, ck);
        for (a, b) in ck.params.tensors().iter().zip(back.params.tensors()) {
            let bits_a: Vec<u64> = a.data().iter().map(|v| v.to_bits()).collect();
            let bits_b: Vec<u64> = b.data().iter().map(|v| v.to_bits()).collect();
            assert_eq!(bits_a, bits_b);
        }
    }

    #[test]
    fn other_version_rejected() {
        let text = sample().to_text().replacen(HEADER, "mamnet-checkpoint v2", 1);
        let err = Checkpoint::parse(&text).unwrap_err();
        assert!(matches!(err, Error::Data(_)));
        assert!(err.to_string().contains("v2"));
    }

    #[test]
    fn truncated_tensor_names_it() {
        let text = sample().to_text();
        let cut = text.find("tensor fusion.alpha").unwrap();
        let truncated = &text[..cut - 30];
        let err = Checkpoint::parse(truncated).unwrap_err();
        assert!(matches!(err, Error::Data(_)));
        assert!(err.to_string().contains("freq.b"), "{err}");
    }

    #[test]
    fn transform_selects_then_scales() {
        let ck = sample();
        let row = ck.transform_row(&[0.1, 99.0, 7.25]).unwrap();
        assert_eq!(row, [0.0, 1.0]);
        assert!(ck.transform_row(&[1.0]).is_err());
    }
}
