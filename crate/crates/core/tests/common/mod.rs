//! Independent reference implementations used as test oracles. None of these
//! call into the library's numerical code.
#![allow(dead_code)]

use std::f64::consts::PI;

/// Textbook O(W²) DFT as (re, im) pairs.
pub fn naive_dft(x: &[f64]) -> Vec<(f64, f64)> {
    let w = x.len();
    (0..w)
        .map(|k| {
            x.iter().enumerate().fold((0.0, 0.0), |(re, im), (t, &v)| {
                let ang = -2.0 * PI * (k * t) as f64 / w as f64;
                (re + v * ang.cos(), im + v * ang.sin())
            })
        })
        .collect()
}

/// Composite Simpson rule with `n` (even) intervals.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let x = a + i as f64 * h;
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(x);
    }
    s * h / 3.0
}

/// Student-t CDF by quadrature. With x = √ν·tan θ the density becomes
/// proportional to cos^(ν−1) θ, so both the tail mass and the normalising
/// constant are one-dimensional integrals and no gamma function is needed.
/// Integrating in φ = π/2 − θ = s⁴ keeps the integrand smooth at the
/// endpoint where cos^(ν−1) has an unbounded derivative.
pub fn t_cdf_quadrature(t: f64, df: f64) -> f64 {
    let tail_integral = |phi_max: f64| {
        let g = |s: f64| (s.powi(4)).sin().powf(df - 1.0) * 4.0 * s.powi(3);
        simpson(g, 0.0, phi_max.powf(0.25), 20_000)
    };
    let theta = (t.abs() / df.sqrt()).atan();
    let upper = 0.5 * tail_integral(PI / 2.0 - theta) / tail_integral(PI / 2.0);
    if t >= 0.0 {
        1.0 - upper
    } else {
        upper
    }
}

/// Inverts [`t_cdf_quadrature`] by bisection.
pub fn t_quantile_quadrature(p: f64, df: f64) -> f64 {
    let (mut lo, mut hi) = (-1e3, 1e3);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if t_cdf_quadrature(mid, df) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn sample_var(v: &[f64]) -> f64 {
    let m = mean(v);
    v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64
}

/// Welch test straight from the published formulas: (t, df, two-sided p).
pub fn welch_textbook(a: &[f64], b: &[f64]) -> (f64, f64, f64) {
    let (qa, qb) = (sample_var(a) / a.len() as f64, sample_var(b) / b.len() as f64);
    let t = (mean(a) - mean(b)) / (qa + qb).sqrt();
    let df = (qa + qb).powi(2) / (qa * qa / (a.len() - 1) as f64 + qb * qb / (b.len() - 1) as f64);
    let p = 2.0 * (1.0 - t_cdf_quadrature(t.abs(), df));
    (t, df, p)
}

/// Direct unroll of x_{t+1} = a⊙x_t + B u_t, y_t = C x_t + D u_t, mean of y.
pub fn ssm_unroll_mean(a: &[f64], b: &[Vec<f64>], c: &[Vec<f64>], d: &[Vec<f64>], u: &[Vec<f64>]) -> Vec<f64> {
    let (n, m) = (a.len(), c.len());
    let mut x = vec![0.0; n];
    let mut acc = vec![0.0; m];
    for ut in u {
        for (o, acc_o) in acc.iter_mut().enumerate() {
            let cx: f64 = (0..n).map(|i| c[o][i] * x[i]).sum();
            let du: f64 = ut.iter().enumerate().map(|(j, v)| d[o][j] * v).sum();
            *acc_o += cx + du;
        }
        x = (0..n)
            .map(|i| a[i] * x[i] + ut.iter().enumerate().map(|(j, v)| b[i][j] * v).sum::<f64>())
            .collect();
    }
    acc.iter().map(|v| v / u.len() as f64).collect()
}
