use rand::seq::index;

use super::{Window, WindowSet};
use crate::error::{Error, Result};
use crate::numerics::{Rng, Tensor};

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// SMOTE: `target` synthetic points `p + λ(q − p)` with `p` drawn uniformly
/// from `minority`, `q` one of its `k` nearest minority neighbours and
/// `λ ~ U[0, 1]`.
pub fn smote_oversample(minority: &[Vec<f64>], k: usize, target: usize, rng: &mut Rng) -> Result<Vec<Vec<f64>>> {
    if minority.len() < 2 {
        return Err(Error::Data(format!(
            "SMOTE needs at least 2 minority samples, got {}",
            minority.len()
        )));
    }
    if k == 0 {
        return Err(Error::Config("SMOTE neighbour count must be at least 1".into()));
    }
    if target == 0 {
        return Ok(Vec::new());
    }
    let k = k.min(minority.len() - 1);
    let mut neighbours: Vec<Option<Vec<usize>>> = vec![None; minority.len()];
    let mut out = Vec::with_capacity(target);
    for _ in 0..target {
        let p = rng.below(minority.len());
        let nn = neighbours[p].get_or_insert_with(|| {
            let mut d: Vec<(f64, usize)> = minority
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != p)
                .map(|(i, q)| (squared_distance(&minority[p], q), i))
                .collect();
            d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            d.into_iter().take(k).map(|(_, i)| i).collect()
        });
        let q = nn[rng.below(nn.len())];
        let lambda = rng.unit();
        let (a, b) = (&minority[p], &minority[q]);
        out.push(a.iter().zip(b).map(|(x, y)| x + lambda * (y - x)).collect());
    }
    Ok(out)
}

/// Uniform sample of `target` items without replacement, kept in their
/// original relative order.
pub fn undersample<T: Clone>(majority: &[T], target: usize, rng: &mut Rng) -> Result<Vec<T>> {
    if target > majority.len() {
        return Err(Error::Config(format!(
            "undersample target {target} exceeds the {} available samples",
            majority.len()
        )));
    }
    let mut picked = index::sample(rng, majority.len(), target).into_vec();
    picked.sort_unstable();
    Ok(picked.into_iter().map(|i| majority[i].clone()).collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BalanceOptions {
    pub smote_k: usize,
    /// Minority grows to `smote_ratio × majority` (never shrinks).
    pub smote_ratio: f64,
    /// Majority shrinks to `undersample_ratio × minority` (never grows).
    pub undersample_ratio: f64,
}

impl Default for BalanceOptions {
    fn default() -> Self {
        BalanceOptions {
            smote_k: 5,
            smote_ratio: 0.5,
            undersample_ratio: 1.0,
        }
    }
}

/// Oversamples the minority class in flattened `W·F` space, then
/// undersamples the majority. Synthetic windows carry the tag `synthetic`.
pub fn balance_windows(set: &WindowSet, options: &BalanceOptions, rng: &mut Rng) -> Result<WindowSet> {
    let (pos, neg): (Vec<&Window>, Vec<&Window>) = set.windows.iter().partition(|w| w.label >= 0.5);
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::Data(format!(
            "cannot balance windows with {} positive and {} negative samples",
            pos.len(),
            neg.len()
        )));
    }
    let (minority, majority) = if pos.len() <= neg.len() { (pos, neg) } else { (neg, pos) };
    let minority_label = minority[0].label;
    let shape = minority[0].data.shape().to_vec();

    let grow_to = ((options.smote_ratio * majority.len() as f64).round() as usize).max(minority.len());
    let flat: Vec<Vec<f64>> = minority.iter().map(|w| w.data.data().to_vec()).collect();
    let synthetic = if grow_to > minority.len() && minority.len() >= 2 {
        smote_oversample(&flat, options.smote_k, grow_to - minority.len(), &mut rng.fork("smote"))?
    } else {
        Vec::new()
    };
    let minority_total = minority.len() + synthetic.len();
    let shrink_to = ((options.undersample_ratio * minority_total as f64).round() as usize).min(majority.len());
    let kept_majority = undersample(&majority, shrink_to, &mut rng.fork("undersample"))?;

    let mut windows: Vec<Window> = kept_majority.into_iter().cloned().collect();
    windows.extend(minority.into_iter().cloned());
    for (i, values) in synthetic.into_iter().enumerate() {
        windows.push(Window {
            data: Tensor::from_vec(&shape, values)?,
            label: minority_label,
            start: usize::MAX - i,
            tag: "synthetic".into(),
        });
    }
    windows.sort_by_key(|w| w.start);
    Ok(WindowSet {
        windows,
        window_len: set.window_len,
        hop: set.hop,
        rule: set.rule,
    })
}
