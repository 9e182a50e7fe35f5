use super::Tensor;
use crate::error::{Error, Result};

/// Nearest-neighbour 2x upsampling of `[C, H, W]` to `[C, 2H, 2W]`.
pub fn upsample2x_forward(input: &Tensor) -> Result<Tensor> {
    let &[c, h, w] = input.dims() else {
        return Err(Error::shape(format!(
            "upsample2x input must be [C,H,W], got {:?}",
            input.dims()
        )));
    };
    let mut out = Tensor::zeros(&[c, 2 * h, 2 * w]);
    let x = input.data();
    let o = out.data_mut();
    for ch in 0..c {
        for y in 0..2 * h {
            let src = &x[(ch * h + y / 2) * w..(ch * h + y / 2 + 1) * w];
            let dst = &mut o[(ch * 2 * h + y) * 2 * w..(ch * 2 * h + y + 1) * 2 * w];
            for (xx, d) in dst.iter_mut().enumerate() {
                *d = src[xx / 2];
            }
        }
    }
    Ok(out)
}

/// Sums each 2x2 upstream block back onto its source pixel.
pub fn upsample2x_backward(upstream: &Tensor) -> Result<Tensor> {
    let &[c, h2, w2] = upstream.dims() else {
        return Err(Error::shape(format!(
            "upsample2x upstream must be [C,2H,2W], got {:?}",
            upstream.dims()
        )));
    };
    if h2 % 2 != 0 || w2 % 2 != 0 {
        return Err(Error::shape(format!(
            "upsample2x upstream spatial axes must be even, got {h2}x{w2}"
        )));
    }
    let (h, w) = (h2 / 2, w2 / 2);
    let mut out = Tensor::zeros(&[c, h, w]);
    let u = upstream.data();
    let o = out.data_mut();
    for ch in 0..c {
        for y in 0..h2 {
            for x in 0..w2 {
                o[(ch * h + y / 2) * w + x / 2] += u[(ch * h2 + y) * w2 + x];
            }
        }
    }
    Ok(out)
}
