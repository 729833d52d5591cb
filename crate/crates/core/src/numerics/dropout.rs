use super::{Rng, Tensor};
use crate::error::{Error, Result};

/// Inverted dropout. Returns the output and the multiplier mask
/// (`0` or `1/(1-rate)` per element; all ones outside training), so that
/// `output == input * mask` elementwise.
pub fn dropout(input: &Tensor, rate: f64, rng: &mut Rng, training: bool) -> Result<(Tensor, Tensor)> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::Config(format!("dropout rate must be in [0, 1), got {rate}")));
    }
    if !training || rate == 0.0 {
        return Ok((input.clone(), Tensor::filled(input.shape(), 1.0)));
    }
    let keep_scale = 1.0 / (1.0 - rate);
    let mut mask = Tensor::zeros(input.shape());
    let mut out = input.clone();
    for (o, m) in out.data_mut().iter_mut().zip(mask.data_mut()) {
        if rng.unit() >= rate {
            *m = keep_scale;
        }
        *o *= *m;
    }
    Ok((out, mask))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Rng;
    use proptest::prelude::*;

    #[test]
    fn zero_rate_and_eval_are_identity() {
        let x = Tensor::vector(vec![1.0, -2.0, 3.5]);
        let mut rng = Rng::new(3);
        for training in [true, false] {
            let (y, _) = dropout(&x, 0.0, &mut rng, training).unwrap();
            assert_eq!(y, x);
        }
        let (y, m) = dropout(&x, 0.3, &mut rng, false).unwrap();
        assert_eq!(y, x);
        assert!(m.data().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn expectation_is_preserved() {
        let x = Tensor::filled(&[100_000], 1.0);
        let mut rng = Rng::new(5);
        let (y, _) = dropout(&x, 0.3, &mut rng, true).unwrap();
        let mean = y.data().iter().sum::<f64>() / y.len() as f64;
        assert!((0.98..=1.02).contains(&mean), "mean {mean}");
    }

    #[test]
    fn rate_one_rejected() {
        let mut rng = Rng::new(0);
        assert!(dropout(&Tensor::zeros(&[2]), 1.0, &mut rng, true).is_err());
    }

    proptest! {
        #[test]
        fn mask_replays_output(seed in 0u64..1000, rate in 0.0f64..0.95, vals in prop::collection::vec(-10.0f64..10.0, 1..64)) {
            let x = Tensor::vector(vals);
            let mut rng = Rng::new(seed);
            let (y, m) = dropout(&x, rate, &mut rng, true).unwrap();
            for ((xi, yi), mi) in x.data().iter().zip(y.data()).zip(m.data()) {
                prop_assert_eq!(*yi, xi * mi);
            }
        }
    }
}
