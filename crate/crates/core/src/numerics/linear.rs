use super::Tensor;
use crate::error::{Error, Result};

/// Saved input of an affine map, needed for the backward pass.
#[derive(Debug, Clone)]
pub struct LinearCache {
    pub input: Tensor,
}

#[derive(Debug, Clone)]
pub struct LinearGrads {
    pub weights: Tensor,
    pub bias: Tensor,
    pub input: Tensor,
}

/// `out_i = bias_i + Σ_j weights_ij · input_j` for a `M×P` weight matrix.
pub fn linear_forward(weights: &Tensor, bias: &Tensor, input: &Tensor) -> Result<(Tensor, LinearCache)> {
    let (m, p) = check_shapes(weights, bias, input.len())?;
    let x = input.data();
    let mut out = bias.data().to_vec();
    for (i, o) in out.iter_mut().enumerate().take(m) {
        let row = &weights.data()[i * p..(i + 1) * p];
        *o += row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
    }
    Ok((
        Tensor::vector(out),
        LinearCache {
            input: input.clone(),
        },
    ))
}

pub fn linear_backward(weights: &Tensor, cache: &LinearCache, grad_out: &Tensor) -> Result<LinearGrads> {
    let (m, p) = check_shapes(weights, grad_out, cache.input.len())?;
    let x = cache.input.data();
    let g = grad_out.data();
    let mut gw = Tensor::zeros(&[m, p]);
    let mut gin = vec![0.0; p];
    for i in 0..m {
        let row = &weights.data()[i * p..(i + 1) * p];
        let gw_row = &mut gw.data_mut()[i * p..(i + 1) * p];
        for j in 0..p {
            gw_row[j] = g[i] * x[j];
            gin[j] += row[j] * g[i];
        }
    }
    Ok(LinearGrads {
        weights: gw,
        bias: grad_out.clone(),
        input: Tensor::vector(gin),
    })
}

fn check_shapes(weights: &Tensor, out_like: &Tensor, input_len: usize) -> Result<(usize, usize)> {
    if weights.shape().len() != 2 {
        return Err(Error::Config(format!(
            "linear weights must be 2-d, got shape {:?}",
            weights.shape()
        )));
    }
    let (m, p) = (weights.shape()[0], weights.shape()[1]);
    if out_like.len() != m || input_len != p {
        return Err(Error::Config(format!(
            "linear shape mismatch: weights {m}x{p}, output {}, input {input_len}",
            out_like.len()
        )));
    }
    Ok((m, p))
}
