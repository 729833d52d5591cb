//! Time-domain branch: a linear time-invariant state-space scan
//!
//! ```text
//! y_t     = C x_t + D u_t
//! x_{t+1} = A x_t + B u_t,    A = diag(tanh(rho)),  x_0 = 0
//! ```
//!
//! The window is summarised by pooling the outputs `y_t` (mean by default).
//! Because `|tanh| < 1` the scan is stable for every finite `rho`.

use crate::error::{Error, Result};
use crate::numerics::{Rng, Tensor};

#[derive(Debug, Clone, PartialEq)]
pub struct SsmParams {
    /// Pre-activation transition diagonal, length `N`.
    pub rho: Tensor,
    /// Input matrix `N×F`.
    pub b: Tensor,
    /// Observation matrix `M×N`.
    pub c: Tensor,
    /// Feedthrough matrix `M×F`.
    pub d: Tensor,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Pooling {
    #[default]
    Mean,
    Last,
}

#[derive(Debug, Clone)]
pub struct SsmCache {
    pub window: Tensor,
    /// `(W+1)×N`, row 0 is the zero initial state.
    pub states: Tensor,
    /// `W×M`.
    pub outputs: Tensor,
    pub pooling: Pooling,
}

#[derive(Debug, Clone)]
pub struct SsmGrads {
    pub rho: Tensor,
    pub b: Tensor,
    pub c: Tensor,
    pub d: Tensor,
    pub window: Tensor,
}

/// Bound of the uniform fan-in/fan-out initialiser.
pub fn fan_bound(fan_in: usize, fan_out: usize) -> f64 {
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}

pub(crate) fn uniform_matrix(rows: usize, cols: usize, rng: &mut Rng) -> Tensor {
    let bound = fan_bound(cols, rows);
    let data = (0..rows * cols).map(|_| rng.uniform(-bound, bound)).collect();
    Tensor::from_vec(&[rows, cols], data).expect("positive extents")
}

impl SsmParams {
    pub fn init(state_dim: usize, input_dim: usize, output_dim: usize, rng: &mut Rng) -> Result<Self> {
        if state_dim == 0 || input_dim == 0 || output_dim == 0 {
            return Err(Error::Config(format!(
                "ssm dims must be positive, got N={state_dim} F={input_dim} M={output_dim}"
            )));
        }
        // long-memory bias: effective decay drawn in [0.5, 0.95]
        let rho = (0..state_dim).map(|_| rng.uniform(0.5, 0.95).atanh()).collect();
        Ok(SsmParams {
            rho: Tensor::vector(rho),
            b: uniform_matrix(state_dim, input_dim, rng),
            c: uniform_matrix(output_dim, state_dim, rng),
            d: uniform_matrix(output_dim, input_dim, rng),
        })
    }

    pub fn state_dim(&self) -> usize {
        self.rho.len()
    }

    pub fn input_dim(&self) -> usize {
        self.b.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.c.rows()
    }

    /// Effective diagonal of `A`.
    pub fn transition(&self) -> Vec<f64> {
        self.rho.data().iter().map(|r| r.tanh()).collect()
    }

    pub fn param_count(&self) -> usize {
        self.rho.len() + self.b.len() + self.c.len() + self.d.len()
    }

    fn check(&self, window: &Tensor) -> Result<(usize, usize)> {
        let (n, f, m) = (self.state_dim(), self.input_dim(), self.output_dim());
        if self.b.shape() != [n, f] || self.c.shape() != [m, n] || self.d.shape() != [m, f] {
            return Err(Error::Config("inconsistent ssm parameter shapes".into()));
        }
        if window.shape().len() != 2 || window.cols() != f || window.rows() == 0 {
            return Err(Error::Config(format!(
                "ssm expects a W×{f} window, got shape {:?}",
                window.shape()
            )));
        }
        Ok((window.rows(), f))
    }
}

pub fn ssm_forward(params: &SsmParams, window: &Tensor, pooling: Pooling) -> Result<(Tensor, SsmCache)> {
    let (w, f) = params.check(window)?;
    if !window.all_finite() {
        return Err(Error::Data("ssm input window contains non-finite values".into()));
    }
    let (n, m) = (params.state_dim(), params.output_dim());
    let a = params.transition();
    let (b, c, d) = (params.b.data(), params.c.data(), params.d.data());

    let mut states = Tensor::zeros(&[w + 1, n]);
    let mut outputs = Tensor::zeros(&[w, m]);
    for t in 0..w {
        let u = window.row(t);
        let (prev, next) = states.data_mut().split_at_mut((t + 1) * n);
        let x = &prev[t * n..];
        let x_next = &mut next[..n];
        let y = &mut outputs.data_mut()[t * m..(t + 1) * m];
        for (i, yi) in y.iter_mut().enumerate() {
            let c_row = &c[i * n..(i + 1) * n];
            let d_row = &d[i * f..(i + 1) * f];
            *yi = dot(c_row, x) + dot(d_row, u);
        }
        for i in 0..n {
            x_next[i] = a[i] * x[i] + dot(&b[i * f..(i + 1) * f], u);
        }
    }

    let pooled = match pooling {
        Pooling::Mean => {
            let mut h = vec![0.0; m];
            for t in 0..w {
                for (hi, yi) in h.iter_mut().zip(outputs.row(t)) {
                    *hi += yi;
                }
            }
            h.iter_mut().for_each(|v| *v /= w as f64);
            h
        }
        Pooling::Last => outputs.row(w - 1).to_vec(),
    };
    Ok((
        Tensor::vector(pooled),
        SsmCache {
            window: window.clone(),
            states,
            outputs,
            pooling,
        },
    ))
}

/// Backpropagation through the scan. `grad_pooled` is `∂L/∂h_time`.
pub fn ssm_backward(params: &SsmParams, cache: &SsmCache, grad_pooled: &Tensor) -> Result<SsmGrads> {
    let (w, f) = params.check(&cache.window)?;
    let (n, m) = (params.state_dim(), params.output_dim());
    if grad_pooled.len() != m {
        return Err(Error::Config(format!(
            "ssm backward expects gradient of length {m}, got {}",
            grad_pooled.len()
        )));
    }
    let a = params.transition();
    let (b, c, d) = (params.b.data(), params.c.data(), params.d.data());
    let gh = grad_pooled.data();

    let mut g_a = vec![0.0; n];
    let mut g_b = Tensor::zeros(&[n, f]);
    let mut g_c = Tensor::zeros(&[m, n]);
    let mut g_d = Tensor::zeros(&[m, f]);
    let mut g_u = Tensor::zeros(&[w, f]);

    // lambda holds ∂L/∂x_{t+1}; x_W feeds no output so it starts at zero.
    let mut lambda = vec![0.0; n];
    let mut lambda_prev = vec![0.0; n];
    let mut gy = vec![0.0; m];
    for t in (0..w).rev() {
        match cache.pooling {
            Pooling::Mean => gy.iter_mut().zip(gh).for_each(|(g, h)| *g = h / w as f64),
            Pooling::Last => {
                let active = if t == w - 1 { 1.0 } else { 0.0 };
                gy.iter_mut().zip(gh).for_each(|(g, h)| *g = h * active);
            }
        }
        let x = cache.states.row(t);
        let u = cache.window.row(t);

        // x_{t+1} = a ⊙ x_t + B u_t
        for i in 0..n {
            g_a[i] += lambda[i] * x[i];
            let gb_row = &mut g_b.data_mut()[i * f..(i + 1) * f];
            for j in 0..f {
                gb_row[j] += lambda[i] * u[j];
            }
        }
        // y_t = C x_t + D u_t
        for i in 0..m {
            let gc_row = &mut g_c.data_mut()[i * n..(i + 1) * n];
            for k in 0..n {
                gc_row[k] += gy[i] * x[k];
            }
            let gd_row = &mut g_d.data_mut()[i * f..(i + 1) * f];
            for j in 0..f {
                gd_row[j] += gy[i] * u[j];
            }
        }
        let gu_row = &mut g_u.data_mut()[t * f..(t + 1) * f];
        for j in 0..f {
            let mut acc = 0.0;
            for i in 0..m {
                acc += d[i * f + j] * gy[i];
            }
            for i in 0..n {
                acc += b[i * f + j] * lambda[i];
            }
            gu_row[j] = acc;
        }
        // ∂L/∂x_t = Aᵀ λ_{t+1} + Cᵀ ∂L/∂y_t
        for k in 0..n {
            let mut acc = a[k] * lambda[k];
            for i in 0..m {
                acc += c[i * n + k] * gy[i];
            }
            lambda_prev[k] = acc;
        }
        std::mem::swap(&mut lambda, &mut lambda_prev);
    }

    let g_rho = params
        .rho
        .data()
        .iter()
        .zip(&g_a)
        .map(|(r, g)| {
            let th = r.tanh();
            g * (1.0 - th * th)
        })
        .collect();
    Ok(SsmGrads {
        rho: Tensor::vector(g_rho),
        b: g_b,
        c: g_c,
        d: g_d,
        window: g_u,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
