//! Flat `key = value` run configuration.
//!
//! Every key is listed in [`KEYS`]; unknown keys are rejected and absent keys
//! keep their defaults. [`RunConfig::to_text`] renders the full effective
//! configuration, and its SHA-256 prefix is the config hash stamped on every
//! output file.

use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::data::{BalanceOptions, LabelRule, LoadOptions};
use crate::error::{Error, Result};
use crate::kv;
use crate::model::{ModelConfig, Task, TrainOptions, Variant};
use crate::numerics::AdamConfig;
use crate::spectral::{self, Taper};
use crate::ssm::Pooling;

pub const DEFAULT_SEED: u64 = 42;

/// `(key, description)` for every accepted config key.
pub const KEYS: &[(&str, &str)] = &[
    ("window_w", "window length W in rows (default 32)"),
    ("hop", "rows between window starts (default 8)"),
    ("state_n", "SSM state dimension N (default 16)"),
    ("fusion_m", "fusion dimension M (default 16)"),
    ("spectral_k", "retained DFT bins K, or `auto` for min(16, W/2+1)"),
    ("task", "classify | regress"),
    ("variant", "full | no_time | no_freq | no_both"),
    ("dropout", "dropout rate on the fused vector (default 0.3)"),
    ("threshold", "decision threshold, score >= threshold is anomalous (default 0.5)"),
    ("pooling", "SSM window summary: mean | last"),
    ("taper", "spectral taper: rect | hann"),
    ("label_rule", "window label: any | fraction"),
    ("label_fraction", "anomalous-row fraction for label_rule = fraction (default 0.5)"),
    ("regress_feature", "feature index forecast one step ahead in regress mode (default 0)"),
    ("data", "flow CSV path (empty: synthetic data)"),
    ("synth_spec", "synthetic generator spec path (empty: reference spec)"),
    ("label_column", "label column name (default label)"),
    ("tag_column", "anomaly-type column name, empty for none (default event)"),
    ("split", "chronological train fraction (default 0.7)"),
    ("epochs", "training epochs (default 60)"),
    ("batch", "mini-batch size (default 32)"),
    ("lr", "Adam learning rate (default 0.001)"),
    ("seed", "seed for single runs (default 42)"),
    ("seeds", "comma list or a..b range of seeds for ablation (default 1..5)"),
    ("balance", "oversample/undersample training windows: true | false"),
    ("smote_k", "SMOTE neighbour count (default 5)"),
    ("smote_ratio", "grow minority to this fraction of the majority (default 0.5)"),
    ("undersample_ratio", "shrink majority to this multiple of the minority (default 1.0)"),
    ("corr_threshold", "minimum |Pearson r| with the label to keep a feature (default 0.05)"),
    ("rfe_keep", "features kept by recursive elimination, 0 disables (default 0)"),
    ("validation_fraction", "held-out slice of the training split for grid search (default 0.2)"),
    ("out", "primary output path"),
    ("report", "report output path"),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelRuleKind {
    Any,
    Fraction,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub window_len: usize,
    pub hop: usize,
    pub state_dim: usize,
    pub fusion_dim: usize,
    pub bins: Option<usize>,
    pub task: Task,
    pub variant: Variant,
    pub dropout: f64,
    pub threshold: f64,
    pub pooling: Pooling,
    pub taper: Taper,
    pub label_rule: LabelRuleKind,
    pub label_fraction: f64,
    pub regress_feature: usize,
    pub data: Option<PathBuf>,
    pub synth_spec: Option<PathBuf>,
    pub label_column: String,
    pub tag_column: String,
    pub split: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub seeds: Vec<u64>,
    pub balance: bool,
    pub smote_k: usize,
    pub smote_ratio: f64,
    pub undersample_ratio: f64,
    pub corr_threshold: f64,
    pub rfe_keep: usize,
    pub validation_fraction: f64,
    pub out: Option<PathBuf>,
    pub report: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            window_len: 32,
            hop: 8,
            state_dim: 16,
            fusion_dim: 16,
            bins: None,
            task: Task::Classify,
            variant: Variant::Full,
            dropout: 0.3,
            threshold: 0.5,
            pooling: Pooling::Mean,
            taper: Taper::Rectangular,
            label_rule: LabelRuleKind::Any,
            label_fraction: 0.5,
            regress_feature: 0,
            data: None,
            synth_spec: None,
            label_column: "label".into(),
            tag_column: "event".into(),
            split: 0.7,
            epochs: 60,
            batch_size: 32,
            learning_rate: 0.001,
            seed: DEFAULT_SEED,
            seeds: (1..=5).collect(),
            balance: true,
            smote_k: 5,
            smote_ratio: 0.5,
            undersample_ratio: 1.0,
            corr_threshold: 0.05,
            rfe_keep: 0,
            validation_fraction: 0.2,
            out: None,
            report: None,
        }
    }
}

fn parse_bool(s: &str) -> Option<bool> {
    match s {
        "true" | "yes" | "1" => Some(true),
        "false" | "no" | "0" => Some(false),
        _ => None,
    }
}

/// `1,2,3` or `1..5` (inclusive).
pub fn parse_seeds(s: &str) -> Option<Vec<u64>> {
    let s = s.trim();
    if let Some((a, b)) = s.split_once("..") {
        let (a, b): (u64, u64) = (a.trim().parse().ok()?, b.trim().parse().ok()?);
        return (a <= b).then(|| (a..=b).collect());
    }
    let seeds: Option<Vec<u64>> = s.split(',').map(|p| p.trim().parse().ok()).collect();
    seeds.filter(|v| !v.is_empty())
}

fn opt_path(s: &str) -> Option<PathBuf> {
    (!s.is_empty()).then(|| PathBuf::from(s))
}

fn path_text(p: &Option<PathBuf>) -> String {
    p.as_ref().map_or_else(String::new, |p| p.display().to_string())
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        for entry in kv::parse(text)? {
            cfg.apply(&entry)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| match e {
            Error::Usage(msg) => Error::Usage(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Sets one key from its text form (line 0 when not from a file).
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        self.apply(&kv::Entry {
            line: 0,
            key: key.to_string(),
            value: value.to_string(),
        })
    }

    fn apply(&mut self, e: &kv::Entry) -> Result<()> {
        let v = e.value.as_str();
        let bad = || kv::bad_value(e);
        match e.key.as_str() {
            "window_w" => self.window_len = kv::value(e)?,
            "hop" => self.hop = kv::value(e)?,
            "state_n" => self.state_dim = kv::value(e)?,
            "fusion_m" => self.fusion_dim = kv::value(e)?,
            "spectral_k" => self.bins = if v == "auto" { None } else { Some(kv::value(e)?) },
            "task" => self.task = v.parse().map_err(|_| bad())?,
            "variant" => self.variant = v.parse().map_err(|_| bad())?,
            "dropout" => self.dropout = kv::value(e)?,
            "threshold" => self.threshold = kv::value(e)?,
            "pooling" => {
                self.pooling = match v {
                    "mean" => Pooling::Mean,
                    "last" => Pooling::Last,
                    _ => return Err(bad()),
                }
            }
            "taper" => {
                self.taper = match v {
                    "rect" => Taper::Rectangular,
                    "hann" => Taper::Hann,
                    _ => return Err(bad()),
                }
            }
            "label_rule" => {
                self.label_rule = match v {
                    "any" => LabelRuleKind::Any,
                    "fraction" => LabelRuleKind::Fraction,
                    _ => return Err(bad()),
                }
            }
            "label_fraction" => self.label_fraction = kv::value(e)?,
            "regress_feature" => self.regress_feature = kv::value(e)?,
            "data" => self.data = opt_path(v),
            "synth_spec" => self.synth_spec = opt_path(v),
            "label_column" => self.label_column = v.to_string(),
            "tag_column" => self.tag_column = v.to_string(),
            "split" => self.split = kv::value(e)?,
            "epochs" => self.epochs = kv::value(e)?,
            "batch" => self.batch_size = kv::value(e)?,
            "lr" => self.learning_rate = kv::value(e)?,
            "seed" => self.seed = kv::value(e)?,
            "seeds" => self.seeds = parse_seeds(v).ok_or_else(bad)?,
            "balance" => self.balance = parse_bool(v).ok_or_else(bad)?,
            "smote_k" => self.smote_k = kv::value(e)?,
            "smote_ratio" => self.smote_ratio = kv::value(e)?,
            "undersample_ratio" => self.undersample_ratio = kv::value(e)?,
            "corr_threshold" => self.corr_threshold = kv::value(e)?,
            "rfe_keep" => self.rfe_keep = kv::value(e)?,
            "validation_fraction" => self.validation_fraction = kv::value(e)?,
            "out" => self.out = opt_path(v),
            "report" => self.report = opt_path(v),
            other => {
                let at = if e.line > 0 { format!("line {}: ", e.line) } else { String::new() };
                return Err(Error::Usage(format!("{at}unknown key `{other}`")));
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.window_len == 0 || self.hop == 0 || self.state_dim == 0 || self.fusion_dim == 0 {
            return fail("window_w, hop, state_n and fusion_m must be at least 1".into());
        }
        let k = self.spectral_bins();
        if k == 0 || k > spectral::max_bins(self.window_len) {
            return fail(format!(
                "spectral_k = {k} must be in 1..={} for window_w = {}",
                spectral::max_bins(self.window_len),
                self.window_len
            ));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return fail(format!("dropout must be in [0, 1), got {}", self.dropout));
        }
        if !(self.split > 0.0 && self.split < 1.0) {
            return fail(format!("split must be in (0, 1), got {}", self.split));
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return fail("validation_fraction must be in (0, 1)".into());
        }
        if !(0.0..=1.0).contains(&self.label_fraction) {
            return fail("label_fraction must be in [0, 1]".into());
        }
        if self.batch_size == 0 || self.smote_k == 0 {
            return fail("batch and smote_k must be at least 1".into());
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return fail("lr must be positive".into());
        }
        if self.smote_ratio < 0.0 || self.undersample_ratio < 0.0 {
            return fail("balancing ratios must be non-negative".into());
        }
        if self.seeds.is_empty() {
            return fail("seeds must not be empty".into());
        }
        Ok(())
    }

    pub fn spectral_bins(&self) -> usize {
        self.bins.unwrap_or_else(|| spectral::default_bins(self.window_len))
    }

    pub fn model_config(&self, features: usize) -> ModelConfig {
        ModelConfig {
            window_len: self.window_len,
            features,
            state_dim: self.state_dim,
            fusion_dim: self.fusion_dim,
            bins: self.spectral_bins(),
            task: self.task,
            variant: self.variant,
            dropout: self.dropout,
            threshold: self.threshold,
            pooling: self.pooling,
            taper: self.taper,
        }
    }

    pub fn train_options(&self) -> TrainOptions {
        TrainOptions {
            epochs: self.epochs,
            batch_size: self.batch_size,
            adam: AdamConfig {
                lr: self.learning_rate,
                ..AdamConfig::default()
            },
        }
    }

    pub fn balance_options(&self) -> BalanceOptions {
        BalanceOptions {
            smote_k: self.smote_k,
            smote_ratio: self.smote_ratio,
            undersample_ratio: self.undersample_ratio,
        }
    }

    pub fn label_rule(&self) -> LabelRule {
        match (self.task, self.label_rule) {
            (Task::Regress, _) => LabelRule::NextValue(self.regress_feature),
            (Task::Classify, LabelRuleKind::Any) => LabelRule::Any,
            (Task::Classify, LabelRuleKind::Fraction) => LabelRule::Fraction(self.label_fraction),
        }
    }

    pub fn load_options(&self) -> LoadOptions {
        LoadOptions {
            label_column: self.label_column.clone(),
            tag_column: (!self.tag_column.is_empty()).then(|| self.tag_column.clone()),
        }
    }

    /// The full effective configuration, one key per line in [`KEYS`] order.
    pub fn to_text(&self) -> String {
        let seeds = self.seeds.iter().map(u64::to_string).collect::<Vec<_>>().join(",");
        let values: Vec<String> = vec![
            self.window_len.to_string(),
            self.hop.to_string(),
            self.state_dim.to_string(),
            self.fusion_dim.to_string(),
            self.bins.map_or_else(|| "auto".to_string(), |k| k.to_string()),
            self.task.to_string(),
            self.variant.to_string(),
            format!("{:?}", self.dropout),
            format!("{:?}", self.threshold),
            match self.pooling {
                Pooling::Mean => "mean".into(),
                Pooling::Last => "last".into(),
            },
            match self.taper {
                Taper::Rectangular => "rect".into(),
                Taper::Hann => "hann".into(),
            },
            match self.label_rule {
                LabelRuleKind::Any => "any".into(),
                LabelRuleKind::Fraction => "fraction".into(),
            },
            format!("{:?}", self.label_fraction),
            self.regress_feature.to_string(),
            path_text(&self.data),
            path_text(&self.synth_spec),
            self.label_column.clone(),
            self.tag_column.clone(),
            format!("{:?}", self.split),
            self.epochs.to_string(),
            self.batch_size.to_string(),
            format!("{:?}", self.learning_rate),
            self.seed.to_string(),
            seeds,
            self.balance.to_string(),
            self.smote_k.to_string(),
            format!("{:?}", self.smote_ratio),
            format!("{:?}", self.undersample_ratio),
            format!("{:?}", self.corr_threshold),
            self.rfe_keep.to_string(),
            format!("{:?}", self.validation_fraction),
            path_text(&self.out),
            path_text(&self.report),
        ];
        debug_assert_eq!(values.len(), KEYS.len());
        KEYS.iter()
            .zip(values)
            .map(|((k, _), v)| format!("{k} = {v}\n"))
            .collect()
    }

    /// Hash of the settings that affect results (output paths excluded).
    pub fn hash(&self) -> String {
        let mut canon = self.clone();
        canon.out = None;
        canon.report = None;
        let digest = Sha256::digest(canon.to_text().as_bytes());
        hex::encode(&digest[..8])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        assert_eq!(RunConfig::parse("").unwrap(), RunConfig::default());
    }

    #[test]
    fn window_key_sets_w() {
        let cfg = RunConfig::parse("window_w = 64\n").unwrap();
        assert_eq!(cfg.window_len, 64);
        assert_eq!(cfg.spectral_bins(), 16);
    }

    #[test]
    fn bad_value_cites_line_and_key() {
        let err = RunConfig::parse("window_w = banana\n").unwrap_err();
        let msg = err.to_string();
        assert!(matches!(err, Error::Usage(_)));
        assert!(msg.contains("line 1") && msg.contains("window_w"), "{msg}");
    }

    #[test]
    fn unknown_key_rejected() {
        let err = RunConfig::parse("epochs = 3\ncolour = red\n").unwrap_err();
        assert!(err.to_string().contains("line 2") && err.to_string().contains("colour"));
    }

    #[test]
    fn text_round_trip() {
        let mut cfg = RunConfig::default();
        cfg.set("seeds", "3..6").unwrap();
        cfg.set("variant", "no_freq").unwrap();
        cfg.set("spectral_k", "7").unwrap();
        cfg.set("data", "flows.csv").unwrap();
        let back = RunConfig::parse(&cfg.to_text()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.seeds, [3, 4, 5, 6]);
        assert_eq!(back.hash(), cfg.hash());
        assert_eq!(RunConfig::default().to_text().lines().count(), KEYS.len());
    }

    #[test]
    fn hash_tracks_settings() {
        let a = RunConfig::default();
        let mut b = a.clone();
        b.out = Some("elsewhere.csv".into());
        assert_eq!(a.hash(), b.hash());
        b.epochs = 3;
        assert_ne!(a.hash(), b.hash());
    }

    #[test]
    fn invalid_values_rejected() {
        assert!(matches!(RunConfig::parse("spectral_k = 40\n"), Err(Error::Config(_))));
        assert!(RunConfig::parse("dropout = 1.0\n").is_err());
        assert!(RunConfig::parse("seeds = 5..1\n").is_err());
    }
}
