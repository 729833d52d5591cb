//! End-to-end runs: split, select, normalise, window, balance, train, score.

use std::collections::BTreeMap;

use rayon::prelude::*;

use super::metrics::{accuracy, confusion, f1, grouped_metrics, mae, mse, precision, recall, Confusion};
use super::report::{EvalReport, MetricSample, RunFailure};
use crate::config::RunConfig;
use crate::data::{balance_windows, correlation_filter, make_windows, rfe, FlowTable, NormStats, WindowSet};
use crate::error::{Error, Result};
use crate::model::{fit, predict, ModelConfig, ModelParams, Task, Variant};
use crate::numerics::Rng;
use crate::kv;

/// Everything derived from the training split before a model sees data.
#[derive(Debug, Clone, PartialEq)]
pub struct Prepared {
    /// Indices into the source table's columns.
    pub selected: Vec<usize>,
    pub norm: NormStats,
    pub train: WindowSet,
    pub test: WindowSet,
    pub model_config: ModelConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub losses: Vec<f64>,
    pub scores: Vec<f64>,
    /// Named metric values; `None` where a denominator vanishes.
    pub metrics: Vec<(String, Option<f64>)>,
    pub confusion: Option<Confusion>,
    /// Per event-type confusion (classify only).
    pub groups: BTreeMap<String, Confusion>,
}

impl RunOutcome {
    pub fn metric(&self, name: &str) -> Option<f64> {
        self.metrics.iter().find(|(n, _)| n == name).and_then(|(_, v)| *v)
    }
}

pub fn split_row(rows: usize, fraction: f64) -> usize {
    (rows as f64 * fraction).floor() as usize
}

/// Chronological split; selection and min-max statistics see training rows only.
pub fn prepare(table: &FlowTable, cfg: &RunConfig, seed: u64) -> Result<Prepared> {
    cfg.validate()?;
    let n = table.n_rows();
    let cut = split_row(n, cfg.split);
    if cut == 0 || cut >= n {
        return Err(Error::Data(format!("split {} of {n} rows leaves an empty side", cfg.split)));
    }
    let train_raw = table.slice_rows(0, cut);

    let selected = match cfg.task {
        // the target column must survive, so regression keeps every feature
        Task::Regress => {
            if cfg.regress_feature >= table.n_features() {
                return Err(Error::Config(format!(
                    "regress_feature {} out of range for {} features",
                    cfg.regress_feature,
                    table.n_features()
                )));
            }
            (0..table.n_features()).collect()
        }
        Task::Classify => {
            let filtered = correlation_filter(&train_raw, cfg.corr_threshold);
            if cfg.rfe_keep > 0 && cfg.rfe_keep < filtered.len() {
                let mut rng = Rng::stream(seed, "rfe");
                let kept = rfe(&train_raw.select_columns(&filtered), cfg.rfe_keep, &mut rng)?;
                kept.into_iter().map(|j| filtered[j]).collect()
            } else {
                filtered
            }
        }
    };

    let train_sel = train_raw.select_columns(&selected);
    let norm = NormStats::fit(&train_sel, 0, train_sel.n_rows())?;
    let train_table = norm.apply(&train_sel)?;
    let test_table = norm.apply(&table.slice_rows(cut, n).select_columns(&selected))?;

    let rule = cfg.label_rule();
    let mut train = make_windows(&train_table, cfg.window_len, cfg.hop, rule)?;
    let test = make_windows(&test_table, cfg.window_len, cfg.hop, rule)?;
    if train.is_empty() || test.is_empty() {
        return Err(Error::Data(format!(
            "window_w = {} yields {} training and {} test windows",
            cfg.window_len,
            train.len(),
            test.len()
        )));
    }
    if cfg.task == Task::Classify && cfg.balance {
        train = balance_windows(&train, &cfg.balance_options(), &mut Rng::stream(seed, "balance"))?;
    }
    Ok(Prepared {
        model_config: cfg.model_config(selected.len()),
        selected,
        norm,
        train,
        test,
    })
}

/// Initialises from `seed` and trains on the prepared training windows.
pub fn train_prepared(prep: &Prepared, cfg: &RunConfig, seed: u64) -> Result<(ModelParams, Vec<f64>)> {
    let mut init = Rng::stream(seed, "init");
    let mut params = ModelParams::init(&prep.model_config, &mut init)?;
    let losses = fit(&mut params, &prep.model_config, &prep.train.windows, &cfg.train_options(), seed)?;
    Ok((params, losses))
}

pub fn evaluate_windows(params: &ModelParams, config: &ModelConfig, set: &WindowSet) -> Result<RunOutcome> {
    let preds = predict(params, config, &set.windows)?;
    let mut outcome = RunOutcome {
        losses: Vec::new(),
        scores: preds.scores.clone(),
        metrics: Vec::new(),
        confusion: None,
        groups: BTreeMap::new(),
    };
    match (config.task, preds.labels) {
        (Task::Classify, Some(hard)) => {
            let truth: Vec<u8> = set.windows.iter().map(|w| u8::from(w.label >= 0.5)).collect();
            let tags: Vec<String> = set.windows.iter().map(|w| w.tag.clone()).collect();
            let c = confusion(&truth, &hard)?;
            outcome.metrics = vec![
                ("accuracy".into(), accuracy(&c)),
                ("precision".into(), precision(&c)),
                ("recall".into(), recall(&c)),
                ("f1".into(), f1(&c)),
            ];
            outcome.confusion = Some(c);
            outcome.groups = grouped_metrics(&truth, &hard, &tags)?;
        }
        _ => {
            let actual: Vec<f64> = set.windows.iter().map(|w| w.label).collect();
            outcome.metrics = vec![
                ("mae".into(), Some(mae(&preds.scores, &actual)?)),
                ("mse".into(), Some(mse(&preds.scores, &actual)?)),
            ];
        }
    }
    Ok(outcome)
}

fn run_variant(prep: &Prepared, cfg: &RunConfig, variant: Variant, seed: u64) -> Result<RunOutcome> {
    let mut vcfg = cfg.clone();
    vcfg.variant = variant;
    let mut vprep = prep.clone();
    vprep.model_config.variant = variant;
    let (params, losses) = train_prepared(&vprep, &vcfg, seed)?;
    let mut outcome = evaluate_windows(&params, &vprep.model_config, &vprep.test)?;
    outcome.losses = losses;
    Ok(outcome)
}

/// Trains every variant under every seed. Preparation is shared by the
/// variants of one seed; a failing run is recorded and the rest continue.
pub fn run_ablation(table: &FlowTable, cfg: &RunConfig, variants: &[Variant], seeds: &[u64]) -> Result<EvalReport> {
    cfg.validate()?;
    if variants.is_empty() || seeds.is_empty() {
        return Err(Error::Config("ablation needs at least one variant and one seed".into()));
    }
    let runs: Vec<(Variant, u64, std::result::Result<RunOutcome, String>)> = seeds
        .par_iter()
        .flat_map_iter(|&seed| {
            let prep = prepare(table, cfg, seed);
            let results: Vec<_> = variants
                .par_iter()
                .map(|&v| {
                    let r = match &prep {
                        Ok(p) => run_variant(p, cfg, v, seed).map_err(|e| format!("train/evaluate: {e}")),
                        Err(e) => Err(format!("prepare: {e}")),
                    };
                    (v, seed, r)
                })
                .collect();
            results
        })
        .collect();

    let mut samples: BTreeMap<Variant, BTreeMap<String, MetricSample>> = BTreeMap::new();
    let mut failures = Vec::new();
    for (variant, seed, result) in runs {
        match result {
            Ok(outcome) => {
                let per_metric = samples.entry(variant).or_default();
                for (name, value) in outcome.metrics {
                    let s = per_metric.entry(name.clone()).or_insert_with(|| MetricSample {
                        metric: name,
                        values: Vec::new(),
                        seeds: Vec::new(),
                    });
                    if let Some(v) = value.filter(|v| v.is_finite()) {
                        s.values.push(v);
                        s.seeds.push(seed);
                    }
                }
            }
            Err(message) => failures.push(RunFailure { variant, seed, message }),
        }
    }
    let samples = samples
        .into_iter()
        .map(|(v, m)| (v, m.into_values().collect()))
        .collect();
    Ok(EvalReport::aggregate(samples, failures, cfg.hash(), seeds, table.provenance.clone()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridRow {
    pub assignments: Vec<(String, String)>,
    /// F1 (classify) or MSE (regress) on the validation slice.
    pub score: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridResult {
    pub best: RunConfig,
    pub best_index: usize,
    pub rows: Vec<GridRow>,
}

/// Grid axes from `key = v1, v2, ...` lines.
pub fn parse_grid(text: &str) -> Result<Vec<(String, Vec<String>)>> {
    kv::parse(text)?
        .iter()
        .map(|e| {
            let values: Vec<String> = kv::list(e)?;
            if values.is_empty() {
                return Err(Error::Usage(format!("line {}: grid key `{}` has no values", e.line, e.key)));
            }
            Ok((e.key.clone(), values))
        })
        .collect()
}

fn cartesian(grid: &[(String, Vec<String>)]) -> Vec<Vec<(String, String)>> {
    let mut out: Vec<Vec<(String, String)>> = vec![Vec::new()];
    for (key, values) in grid {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                values.iter().map(move |v| {
                    let mut next = prefix.clone();
                    next.push((key.clone(), v.clone()));
                    next
                })
            })
            .collect();
    }
    out
}

/// Scores each grid point on a validation slice carved from the end of the
/// training split; the test split is never touched.
pub fn grid_search(
    table: &FlowTable,
    base: &RunConfig,
    grid: &[(String, Vec<String>)],
    validation_fraction: f64,
    seed: u64,
) -> Result<GridResult> {
    if grid.is_empty() || grid.iter().any(|(_, v)| v.is_empty()) {
        return Err(Error::Config("grid search needs at least one key with values".into()));
    }
    if !(validation_fraction > 0.0 && validation_fraction < 1.0) {
        return Err(Error::Config(format!("validation fraction {validation_fraction} outside (0, 1)")));
    }
    let train_only = table.slice_rows(0, split_row(table.n_rows(), base.split));

    let points = cartesian(grid);
    let mut candidates = Vec::with_capacity(points.len());
    for point in &points {
        let mut c = base.clone();
        for (k, v) in point {
            c.set(k, v)?;
        }
        c.split = 1.0 - validation_fraction;
        c.validate()?;
        candidates.push(c);
    }

    let task = base.task;
    let scored: Vec<std::result::Result<Option<f64>, String>> = candidates
        .par_iter()
        .map(|c| {
            let prep = prepare(&train_only, c, seed).map_err(|e| e.to_string())?;
            let (params, _) = train_prepared(&prep, c, seed).map_err(|e| e.to_string())?;
            let out = evaluate_windows(&params, &prep.model_config, &prep.test).map_err(|e| e.to_string())?;
            Ok(out.metric(if task == Task::Classify { "f1" } else { "mse" }))
        })
        .collect();

    let rows: Vec<GridRow> = points
        .into_iter()
        .zip(scored)
        .map(|(assignments, s)| {
            let (score, error) = match s {
                Ok(v) => (v, None),
                Err(e) => (None, Some(e)),
            };
            GridRow { assignments, score, error }
        })
        .collect();

    let better = |a: f64, b: f64| if task == Task::Classify { a > b } else { a < b };
    let mut best: Option<(usize, f64)> = None;
    for (i, row) in rows.iter().enumerate() {
        if let Some(s) = row.score {
            if best.is_none_or(|(_, b)| better(s, b)) {
                best = Some((i, s));
            }
        }
    }
    let (best_index, _) = best.ok_or_else(|| Error::Data("no grid candidate produced a score".into()))?;
    let mut best_cfg = candidates[best_index].clone();
    best_cfg.split = base.split;
    Ok(GridResult {
        best: best_cfg,
        best_index,
        rows,
    })
}

impl GridResult {
    /// One row per candidate: the grid keys, then `score`.
    pub fn to_csv(&self, config_hash: &str) -> String {
        let mut out = format!("# config_hash={config_hash}\n");
        if let Some(first) = self.rows.first() {
            let keys: Vec<&str> = first.assignments.iter().map(|(k, _)| k.as_str()).collect();
            out.push_str(&format!("{},score,selected\n", keys.join(",")));
        }
        for (i, row) in self.rows.iter().enumerate() {
            let vals: Vec<&str> = row.assignments.iter().map(|(_, v)| v.as_str()).collect();
            let score = row.score.map_or_else(|| "n/a".to_string(), |s| format!("{s:?}"));
            out.push_str(&format!("{},{score},{}\n", vals.join(","), u8::from(i == self.best_index)));
        }
        out
    }
}
