//! Frequency-domain branch: per-column DFT magnitudes of a window.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Taper {
    #[default]
    Rectangular,
    Hann,
}

/// Default number of retained bins for a window of length `w`.
pub fn default_bins(w: usize) -> usize {
    16.min(max_bins(w))
}

/// Number of non-redundant bins of a real signal: `⌊W/2⌋ + 1`.
pub fn max_bins(w: usize) -> usize {
    w / 2 + 1
}

/// `X_k = Σ_t x_t e^{-i2πkt/W}`. Radix-2 for power-of-two lengths, direct
/// summation otherwise.
pub fn dft(signal: &[f64]) -> Result<Vec<Complex64>> {
    if signal.is_empty() {
        return Err(Error::Config("dft of an empty signal".into()));
    }
    if signal.iter().any(|v| !v.is_finite()) {
        return Err(Error::Data("dft input contains non-finite values".into()));
    }
    if signal.len().is_power_of_two() {
        Ok(fft_radix2(signal))
    } else {
        Ok(dft_direct(signal))
    }
}

/// O(W²) direct summation.
pub fn dft_direct(signal: &[f64]) -> Vec<Complex64> {
    let w = signal.len();
    (0..w)
        .map(|k| {
            signal
                .iter()
                .enumerate()
                .map(|(t, &x)| {
                    // reduce k·t mod W first to keep the angle small
                    let angle = -2.0 * PI * ((k * t) % w) as f64 / w as f64;
                    Complex64::from_polar(x, angle)
                })
                .sum()
        })
        .collect()
}

/// Iterative Cooley-Tukey; `signal.len()` must be a power of two.
pub fn fft_radix2(signal: &[f64]) -> Vec<Complex64> {
    let n = signal.len();
    assert!(n.is_power_of_two(), "radix-2 path needs a power-of-two length");
    let bits = n.trailing_zeros();
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for (i, &x) in signal.iter().enumerate() {
        let j = if bits == 0 { 0 } else { i.reverse_bits() >> (usize::BITS - bits) };
        buf[j] = Complex64::new(x, 0.0);
    }
    let mut len = 2;
    while len <= n {
        let half = len / 2;
        let twiddles: Vec<Complex64> = (0..half)
            .map(|k| Complex64::from_polar(1.0, -2.0 * PI * k as f64 / len as f64))
            .collect();
        for start in (0..n).step_by(len) {
            for k in 0..half {
                let even = buf[start + k];
                let odd = buf[start + k + half] * twiddles[k];
                buf[start + k] = even + odd;
                buf[start + k + half] = even - odd;
            }
        }
        len <<= 1;
    }
    buf
}

/// `|X_k| / W` for the lowest `k` bins.
pub fn magnitude_bins(coeffs: &[Complex64], k: usize) -> Result<Vec<f64>> {
    let w = coeffs.len();
    if k == 0 || k > max_bins(w) {
        return Err(Error::Config(format!(
            "bin count {k} must be in 1..={} for W={w}",
            max_bins(w)
        )));
    }
    Ok(coeffs[..k].iter().map(|c| c.norm() / w as f64).collect())
}

fn hann(w: usize) -> Vec<f64> {
    if w == 1 {
        return vec![1.0];
    }
    (0..w)
        .map(|t| 0.5 - 0.5 * (2.0 * PI * t as f64 / w as f64).cos())
        .collect()
}

/// Magnitude bins of every column of a `W×F` window, feature-major
/// (`out[f*K + k]`).
pub fn spectral_features(window: &Tensor, k: usize, taper: Taper) -> Result<Tensor> {
    if window.shape().len() != 2 {
        return Err(Error::Config(format!(
            "spectral features expect a 2-d window, got {:?}",
            window.shape()
        )));
    }
    let (w, f) = (window.rows(), window.cols());
    let weights = match taper {
        Taper::Rectangular => None,
        Taper::Hann => Some(hann(w)),
    };
    let mut out = Vec::with_capacity(f * k);
    let mut column = vec![0.0; w];
    for j in 0..f {
        for (t, c) in column.iter_mut().enumerate() {
            *c = window.at(t, j) * weights.as_ref().map_or(1.0, |h| h[t]);
        }
        let coeffs = dft(&column)?;
        out.extend(magnitude_bins(&coeffs, k)?);
    }
    Ok(Tensor::vector(out))
}
