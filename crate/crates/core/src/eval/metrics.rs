use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Confusion counts with anomalous as the positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Confusion {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    pub fn_: u64,
}

impl Confusion {
    pub fn total(&self) -> u64 {
        self.tp + self.tn + self.fp + self.fn_
    }

    fn record(&mut self, label: u8, pred: u8) {
        match (label != 0, pred != 0) {
            (true, true) => self.tp += 1,
            (true, false) => self.fn_ += 1,
            (false, true) => self.fp += 1,
            (false, false) => self.tn += 1,
        }
    }
}

pub fn confusion(labels: &[u8], predictions: &[u8]) -> Result<Confusion> {
    if labels.len() != predictions.len() {
        return Err(Error::Data(format!(
            "{} labels but {} predictions",
            labels.len(),
            predictions.len()
        )));
    }
    let mut c = Confusion::default();
    for (&l, &p) in labels.iter().zip(predictions) {
        c.record(l, p);
    }
    Ok(c)
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// `(TP+TN)/n`; `None` on an empty table.
pub fn accuracy(c: &Confusion) -> Option<f64> {
    ratio(c.tp + c.tn, c.total())
}

pub fn recall(c: &Confusion) -> Option<f64> {
    ratio(c.tp, c.tp + c.fn_)
}

pub fn precision(c: &Confusion) -> Option<f64> {
    ratio(c.tp, c.tp + c.fp)
}

pub fn f1(c: &Confusion) -> Option<f64> {
    let (p, r) = (precision(c)?, recall(c)?);
    (p + r > 0.0).then(|| 2.0 * p * r / (p + r))
}

fn check_pairs(preds: &[f64], actuals: &[f64]) -> Result<()> {
    if preds.is_empty() || preds.len() != actuals.len() {
        return Err(Error::Data(format!(
            "need equal non-zero lengths, got {} predictions and {} actuals",
            preds.len(),
            actuals.len()
        )));
    }
    if preds.iter().chain(actuals).any(|v| !v.is_finite()) {
        return Err(Error::Data("non-finite value in regression metric input".into()));
    }
    Ok(())
}

pub fn mae(preds: &[f64], actuals: &[f64]) -> Result<f64> {
    check_pairs(preds, actuals)?;
    Ok(preds.iter().zip(actuals).map(|(p, a)| (p - a).abs()).sum::<f64>() / preds.len() as f64)
}

pub fn mse(preds: &[f64], actuals: &[f64]) -> Result<f64> {
    check_pairs(preds, actuals)?;
    Ok(preds.iter().zip(actuals).map(|(p, a)| (p - a).powi(2)).sum::<f64>() / preds.len() as f64)
}

/// One confusion table per distinct tag.
pub fn grouped_metrics(labels: &[u8], predictions: &[u8], tags: &[String]) -> Result<BTreeMap<String, Confusion>> {
    if labels.len() != predictions.len() || labels.len() != tags.len() {
        return Err(Error::Data(format!(
            "grouped metrics need aligned inputs, got {} labels, {} predictions, {} tags",
            labels.len(),
            predictions.len(),
            tags.len()
        )));
    }
    let mut groups: BTreeMap<String, Confusion> = BTreeMap::new();
    for ((&l, &p), t) in labels.iter().zip(predictions).zip(tags) {
        groups.entry(t.clone()).or_default().record(l, p);
    }
    Ok(groups)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn confusion_examples() {
        let c = confusion(&[1, 1, 0, 0], &[1, 0, 0, 1]).unwrap();
        assert_eq!((c.tp, c.fn_, c.tn, c.fp), (1, 1, 1, 1));
        let c = confusion(&[1, 0, 1], &[1, 0, 1]).unwrap();
        assert_eq!((c.fp, c.fn_), (0, 0));
        let c = confusion(&[1; 5], &[0; 5]).unwrap();
        assert_eq!((c.tp, c.fn_), (0, 5));
        assert!(confusion(&[1], &[]).is_err());
    }

    #[test]
    fn metric_examples() {
        let c = Confusion { tp: 90, tn: 5, fp: 3, fn_: 2 };
        assert_eq!(accuracy(&c), Some(0.95));
        let c = Confusion { tp: 3, tn: 0, fp: 0, fn_: 1 };
        assert_eq!(recall(&c), Some(0.75));
        // precision 1/2, recall 1
        let c = Confusion { tp: 1, tn: 0, fp: 1, fn_: 0 };
        assert!((f1(&c).unwrap() - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn undefined_denominators() {
        let empty = Confusion::default();
        assert_eq!(accuracy(&empty), None);
        assert_eq!(recall(&empty), None);
        assert_eq!(precision(&empty), None);
        assert_eq!(f1(&Confusion { tp: 0, tn: 4, fp: 1, fn_: 1 }), None);
    }

    #[test]
    fn regression_examples() {
        assert_eq!(mae(&[1.0, 2.0], &[2.0, 4.0]).unwrap(), 1.5);
        assert_eq!(mse(&[1.0, 2.0], &[2.0, 4.0]).unwrap(), 2.5);
        assert_eq!(mae(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(mse(&[0.0], &[3.0]).unwrap(), 9.0);
        assert_eq!(mae(&[0.0], &[3.0]).unwrap(), 3.0);
        assert!(matches!(mae(&[], &[]), Err(Error::Data(_))));
    }

    #[test]
    fn groups_partition_the_global_table() {
        let labels = [1, 0, 1, 1, 0, 0];
        let preds = [1, 1, 0, 1, 0, 0];
        let tags: Vec<String> = ["burst", "normal", "periodic", "burst", "normal", "normal"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let groups = grouped_metrics(&labels, &preds, &tags).unwrap();
        let global = confusion(&labels, &preds).unwrap();
        let sum = groups.values().fold(Confusion::default(), |a, c| Confusion {
            tp: a.tp + c.tp,
            tn: a.tn + c.tn,
            fp: a.fp + c.fp,
            fn_: a.fn_ + c.fn_,
        });
        assert_eq!(sum, global);
        assert_eq!(groups.len(), 3);

        let one_tag = vec!["all".to_string(); 6];
        assert_eq!(grouped_metrics(&labels, &preds, &one_tag).unwrap()["all"], global);
    }

    proptest! {
        #[test]
        fn cross_identities(tp in 0u64..500, tn in 0u64..500, fp in 0u64..500, fn_ in 0u64..500) {
            let c = Confusion { tp, tn, fp, fn_ };
            let n = (tp + tn + fp + fn_) as f64;
            if n > 0.0 {
                prop_assert!((accuracy(&c).unwrap() - (tp + tn) as f64 / n).abs() < 1e-15);
            }
            if let (Some(p), Some(r)) = (precision(&c), recall(&c)) {
                prop_assert!((p - tp as f64 / (tp + fp) as f64).abs() < 1e-15);
                prop_assert!((r - tp as f64 / (tp + fn_) as f64).abs() < 1e-15);
                match f1(&c) {
                    Some(f) => prop_assert!((1.0 / f - 0.5 * (1.0 / p + 1.0 / r)).abs() < 1e-9),
                    None => prop_assert_eq!(tp, 0),
                }
            }
        }

        #[test]
        fn regression_metric_signs(pairs in prop::collection::vec((-100.0f64..100.0, -100.0f64..100.0), 1..50)) {
            let (p, a): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            prop_assert!(mae(&p, &a).unwrap() >= 0.0);
            prop_assert!(mse(&p, &a).unwrap() >= 0.0);
        }

        #[test]
        fn equal_errors_make_mse_square_of_mae(e in 0.0f64..10.0, n in 1usize..20) {
            let preds: Vec<f64> = (0..n).map(|i| if i % 2 == 0 { e } else { -e }).collect();
            let actual = vec![0.0; n];
            let m = mae(&preds, &actual).unwrap();
            prop_assert!((mse(&preds, &actual).unwrap() - m * m).abs() < 1e-9);
        }
    }
}
