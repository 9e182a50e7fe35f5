use super::{LayerGrad, Tensor};
use crate::error::{Error, Result};

fn check(input: &Tensor, weights: &Tensor) -> Result<(usize, usize)> {
    let &[n_out, n_in] = weights.dims() else {
        return Err(Error::shape(format!(
            "dense weights must be [out,in], got {:?}",
            weights.dims()
        )));
    };
    if input.len() != n_in {
        return Err(Error::shape(format!(
            "dense input axis: expected {n_in} values, got {}",
            input.len()
        )));
    }
    Ok((n_out, n_in))
}

/// `W x + b` for `W: [out, in]`. The input may have any shape with `in`
/// elements; the output is `[out]`.
pub fn dense_forward(input: &Tensor, weights: &Tensor, bias: &Tensor) -> Result<Tensor> {
    let (n_out, n_in) = check(input, weights)?;
    if bias.dims() != [n_out] {
        return Err(Error::shape(format!(
            "dense bias axis: expected [{n_out}], got {:?}",
            bias.dims()
        )));
    }
    let x = input.data();
    let w = weights.data();
    let out = (0..n_out)
        .map(|o| {
            let row = &w[o * n_in..(o + 1) * n_in];
            bias.data()[o] + row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>()
        })
        .collect();
    Tensor::from_vec(&[n_out], out)
}

/// Gradients `"weights"`, `"bias"` and input (shaped like `input`).
pub fn dense_backward(input: &Tensor, weights: &Tensor, upstream: &Tensor) -> Result<LayerGrad> {
    let (n_out, n_in) = check(input, weights)?;
    if upstream.len() != n_out {
        return Err(Error::shape(format!(
            "dense upstream axis: expected {n_out}, got {}",
            upstream.len()
        )));
    }
    let x = input.data();
    let w = weights.data();
    let up = upstream.data();
    let mut gw = Tensor::zeros(weights.dims());
    let mut gx = Tensor::zeros(input.dims());
    {
        let gwd = gw.data_mut();
        let gxd = gx.data_mut();
        for o in 0..n_out {
            let u = up[o];
            if u == 0.0 {
                continue;
            }
            let row = &w[o * n_in..(o + 1) * n_in];
            let grow = &mut gwd[o * n_in..(o + 1) * n_in];
            for i in 0..n_in {
                grow[i] = u * x[i];
                gxd[i] += u * row[i];
            }
        }
    }
    let gb = Tensor::from_vec(&[n_out], up.to_vec())?;
    Ok(LayerGrad::new(vec![("weights", gw), ("bias", gb)], gx))
}

/// Input gradient only, reshaped to `input_dims`.
pub(crate) fn dense_backward_input(input_dims: &[usize], weights: &Tensor, upstream: &Tensor) -> Tensor {
    let (n_out, n_in) = (weights.dims()[0], weights.dims()[1]);
    let w = weights.data();
    let mut gx = Tensor::zeros(input_dims);
    let gxd = gx.data_mut();
    for o in 0..n_out {
        let u = upstream.data()[o];
        if u == 0.0 {
            continue;
        }
        for (g, &wv) in gxd.iter_mut().zip(&w[o * n_in..(o + 1) * n_in]) {
            *g += u * wv;
        }
    }
    gx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forward_small() {
        let w = Tensor::from_vec(&[2, 3], vec![1.0, 2.0, 3.0, -1.0, 0.0, 1.0]).unwrap();
        let b = Tensor::from_vec(&[2], vec![0.5, -0.5]).unwrap();
        let x = Tensor::from_vec(&[3], vec![1.0, 1.0, 2.0]).unwrap();
        let y = dense_forward(&x, &w, &b).unwrap();
        assert_eq!(y.data(), &[9.5, 0.5]);
    }

    #[test]
    fn rejects_wrong_input_len() {
        let w = Tensor::zeros(&[2, 3]);
        assert!(dense_forward(&Tensor::zeros(&[4]), &w, &Tensor::zeros(&[2])).is_err());
        assert!(dense_forward(&Tensor::zeros(&[3]), &w, &Tensor::zeros(&[3])).is_err());
    }
}
