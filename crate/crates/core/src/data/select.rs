use super::{FlowTable, NormStats};
use crate::error::{Error, Result};
use crate::numerics::{AdamConfig, AdamState, Rng, Tensor};

/// Pearson correlation; `None` when either side has zero variance.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return None;
    }
    Some(sxy / (sxx.sqrt() * syy.sqrt()))
}

/// Keeps features whose `|r|` against the label reaches `threshold`. At
/// least one feature survives (the strongest defined one, else feature 0).
pub fn correlation_filter(table: &FlowTable, threshold: f64) -> Vec<usize> {
    let labels: Vec<f64> = table.labels.iter().map(|&l| f64::from(l)).collect();
    let scores: Vec<Option<f64>> = (0..table.n_features())
        .map(|j| pearson(&table.column(j), &labels).map(f64::abs))
        .collect();
    let kept: Vec<usize> = scores
        .iter()
        .enumerate()
        .filter(|(_, s)| matches!(s, Some(r) if *r >= threshold))
        .map(|(j, _)| j)
        .collect();
    if !kept.is_empty() {
        return kept;
    }
    let best = scores
        .iter()
        .enumerate()
        .filter_map(|(j, s)| s.map(|r| (j, r)))
        .fold(None, |acc: Option<(usize, f64)>, (j, r)| match acc {
            Some((_, br)) if br >= r => acc,
            _ => Some((j, r)),
        });
    vec![best.map_or(0, |(j, _)| j)]
}

const PROBE_EPOCHS: usize = 5;
const PROBE_BATCH: usize = 32;
const PROBE_LR: f64 = 0.01;

/// Logistic probe on the given columns; returns the fitted weights.
fn fit_probe(rows: &[Vec<f64>], labels: &[f64], columns: &[usize], rng: &mut Rng) -> Result<Vec<f64>> {
    let p = columns.len();
    let mut w = Tensor::vector((0..p).map(|_| rng.uniform(-0.01, 0.01)).collect());
    let mut b = Tensor::scalar(0.0);
    let cfg = AdamConfig {
        lr: PROBE_LR,
        ..AdamConfig::default()
    };
    let mut sw = AdamState::new(&[p], cfg);
    let mut sb = AdamState::new(&[1], cfg);
    let mut order: Vec<usize> = (0..rows.len()).collect();
    for _ in 0..PROBE_EPOCHS {
        rng.shuffle(&mut order);
        for batch in order.chunks(PROBE_BATCH) {
            let mut gw = Tensor::zeros(&[p]);
            let mut gb = Tensor::zeros(&[1]);
            for &i in batch {
                let x = &rows[i];
                let logit = b.data()[0] + columns.iter().zip(w.data()).map(|(&j, wj)| wj * x[j]).sum::<f64>();
                let err = 1.0 / (1.0 + (-logit).exp()) - labels[i];
                for (g, &j) in gw.data_mut().iter_mut().zip(columns) {
                    *g += err * x[j];
                }
                gb.data_mut()[0] += err;
            }
            let inv = 1.0 / batch.len() as f64;
            gw.scale(inv);
            gb.scale(inv);
            sw.step(&mut w, &gw)?;
            sb.step(&mut b, &gb)?;
        }
    }
    Ok(w.into_data())
}

/// Recursive feature elimination with a logistic probe refitted after each
/// removal. Returns the surviving feature indices in ascending order.
pub fn rfe(table: &FlowTable, keep: usize, rng: &mut Rng) -> Result<Vec<usize>> {
    let f = table.n_features();
    if keep == 0 || keep > f {
        return Err(Error::Config(format!("rfe keep count {keep} must be in 1..={f}")));
    }
    let mut remaining: Vec<usize> = (0..f).collect();
    if keep == f {
        return Ok(remaining);
    }
    let stats = NormStats::fit(table, 0, table.n_rows())?;
    let rows: Vec<Vec<f64>> = (0..table.n_rows())
        .map(|i| {
            let mut r = table.row(i).to_vec();
            stats.apply_row(&mut r);
            r
        })
        .collect();
    let labels: Vec<f64> = table.labels.iter().map(|&l| f64::from(l)).collect();
    while remaining.len() > keep {
        let weights = fit_probe(&rows, &labels, &remaining, rng)?;
        let weakest = weights
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |(bi, bw), (i, w)| if w.abs() < bw { (i, w.abs()) } else { (bi, bw) })
            .0;
        remaining.remove(weakest);
    }
    Ok(remaining)
}
