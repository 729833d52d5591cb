use super::Tensor;

/// Central-difference step.
pub const FD_STEP: f64 = 1e-5;

/// `|a - b| / max(|a|, |b|, 1e-8)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    let denom = analytic.abs().max(numeric.abs()).max(1e-8);
    (analytic - numeric).abs() / denom
}

/// Compares analytic gradients against central differences of `loss`,
/// perturbing one scalar of `params` at a time. Returns the maximum relative
/// error per parameter tensor. `params` is restored before returning.
pub fn grad_check<F>(params: &mut [Tensor], mut loss: F, analytic: &[Tensor]) -> Vec<f64>
where
    F: FnMut(&[Tensor]) -> f64,
{
    assert_eq!(params.len(), analytic.len(), "one analytic gradient per parameter");
    let mut worst = vec![0.0; params.len()];
    for p in 0..params.len() {
        assert!(params[p].same_shape(&analytic[p]), "gradient shape for parameter {p}");
        for i in 0..params[p].len() {
            let orig = params[p].data()[i];
            params[p].data_mut()[i] = orig + FD_STEP;
            let up = loss(params);
            params[p].data_mut()[i] = orig - FD_STEP;
            let down = loss(params);
            params[p].data_mut()[i] = orig;
            let fd = (up - down) / (2.0 * FD_STEP);
            let err = relative_error(analytic[p].data()[i], fd);
            if err.is_nan() || err > worst[p] {
                worst[p] = if err.is_nan() { f64::INFINITY } else { err };
            }
        }
    }
    worst
}
