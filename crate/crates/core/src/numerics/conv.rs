//! Same-padded 2-D cross-correlation with optional stride.
//!
//! Input `[C_in, H, W]`, kernels `[C_out, C_in, k, k]` with odd `k`,
//! bias `[C_out]`. Padding is `(k - 1) / 2` on every side and the output is
//! `[C_out, ceil(H / s), ceil(W / s)]`.

use super::{LayerGrad, Tensor};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
struct Geometry {
    c_in: usize,
    h: usize,
    w: usize,
    c_out: usize,
    k: usize,
    pad: usize,
    stride: usize,
    oh: usize,
    ow: usize,
}

impl Geometry {
    fn check(input: &Tensor, kernels: &Tensor, stride: usize) -> Result<Self> {
        if stride == 0 {
            return Err(Error::invalid("conv2d stride must be positive"));
        }
        let &[c_in, h, w] = input.dims() else {
            return Err(Error::shape(format!(
                "conv2d input must be [C,H,W], got {:?}",
                input.dims()
            )));
        };
        let &[c_out, kc, kh, kw] = kernels.dims() else {
            return Err(Error::shape(format!(
                "conv2d kernels must be [C_out,C_in,k,k], got {:?}",
                kernels.dims()
            )));
        };
        if kc != c_in {
            return Err(Error::shape(format!(
                "conv2d channel axis: input has {c_in}, kernels expect {kc}"
            )));
        }
        if kh != kw || kh % 2 == 0 {
            return Err(Error::shape(format!(
                "conv2d kernel axes must be equal and odd, got {kh}x{kw}"
            )));
        }
        if h < kh {
            return Err(Error::shape(format!("conv2d height axis: {h} < kernel {kh}")));
        }
        if w < kw {
            return Err(Error::shape(format!("conv2d width axis: {w} < kernel {kw}")));
        }
        Ok(Geometry {
            c_in,
            h,
            w,
            c_out,
            k: kh,
            pad: (kh - 1) / 2,
            stride,
            oh: h.div_ceil(stride),
            ow: w.div_ceil(stride),
        })
    }

    /// Output index range `[lo, hi)` along one axis for kernel tap `t`, such
    /// that `o * stride + t - pad` lands inside `[0, n)`.
    fn valid(&self, t: usize, n: usize, out_n: usize) -> (usize, usize) {
        let lo = if t < self.pad {
            (self.pad - t).div_ceil(self.stride)
        } else {
            0
        };
        let hi = if n + self.pad > t {
            ((n + self.pad - t - 1) / self.stride + 1).min(out_n)
        } else {
            0
        };
        (lo, hi.max(lo))
    }
}

pub fn conv2d_forward(
    input: &Tensor,
    kernels: &Tensor,
    bias: &Tensor,
    stride: usize,
) -> Result<Tensor> {
    let g = Geometry::check(input, kernels, stride)?;
    if bias.dims() != [g.c_out] {
        return Err(Error::shape(format!(
            "conv2d bias axis: expected [{}], got {:?}",
            g.c_out,
            bias.dims()
        )));
    }
    let x = input.data();
    let kd = kernels.data();
    let mut out = Tensor::zeros(&[g.c_out, g.oh, g.ow]);
    let o = out.data_mut();
    let plane_out = g.oh * g.ow;
    let plane_in = g.h * g.w;
    for co in 0..g.c_out {
        let out_plane = &mut o[co * plane_out..(co + 1) * plane_out];
        out_plane.fill(bias.data()[co]);
        for ci in 0..g.c_in {
            let in_plane = &x[ci * plane_in..(ci + 1) * plane_in];
            for ky in 0..g.k {
                let (y0, y1) = g.valid(ky, g.h, g.oh);
                for kx in 0..g.k {
                    let wv = kd[((co * g.c_in + ci) * g.k + ky) * g.k + kx];
                    let (x0, x1) = g.valid(kx, g.w, g.ow);
                    for oy in y0..y1 {
                        let iy = oy * g.stride + ky - g.pad;
                        let in_row = &in_plane[iy * g.w..(iy + 1) * g.w];
                        let out_row = &mut out_plane[oy * g.ow..(oy + 1) * g.ow];
                        if g.stride == 1 {
                            let src = &in_row[x0 + kx - g.pad..x1 + kx - g.pad];
                            for (dst, &s) in out_row[x0..x1].iter_mut().zip(src) {
                                *dst += wv * s;
                            }
                        } else {
                            for ox in x0..x1 {
                                out_row[ox] += wv * in_row[ox * g.stride + kx - g.pad];
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Gradients of `sum(upstream * forward(input))` with respect to the
/// kernels (`"kernels"`), bias (`"bias"`) and input.
pub fn conv2d_backward(
    input: &Tensor,
    kernels: &Tensor,
    stride: usize,
    upstream: &Tensor,
) -> Result<LayerGrad> {
    let g = Geometry::check(input, kernels, stride)?;
    if upstream.dims() != [g.c_out, g.oh, g.ow] {
        return Err(Error::shape(format!(
            "conv2d upstream: expected {:?}, got {:?}",
            [g.c_out, g.oh, g.ow],
            upstream.dims()
        )));
    }
    let x = input.data();
    let kd = kernels.data();
    let up = upstream.data();
    let mut gk = Tensor::zeros(kernels.dims());
    let mut gb = Tensor::zeros(&[g.c_out]);
    let mut gx = Tensor::zeros(input.dims());
    let plane_out = g.oh * g.ow;
    let plane_in = g.h * g.w;
    {
        let gkd = gk.data_mut();
        let gxd = gx.data_mut();
        let gbd = gb.data_mut();
        for co in 0..g.c_out {
            let up_plane = &up[co * plane_out..(co + 1) * plane_out];
            gbd[co] = up_plane.iter().sum();
            for ci in 0..g.c_in {
                let in_plane = &x[ci * plane_in..(ci + 1) * plane_in];
                let gx_plane = &mut gxd[ci * plane_in..(ci + 1) * plane_in];
                for ky in 0..g.k {
                    let (y0, y1) = g.valid(ky, g.h, g.oh);
                    for kx in 0..g.k {
                        let widx = ((co * g.c_in + ci) * g.k + ky) * g.k + kx;
                        let wv = kd[widx];
                        let (x0, x1) = g.valid(kx, g.w, g.ow);
                        let mut acc = 0.0;
                        for oy in y0..y1 {
                            let iy = oy * g.stride + ky - g.pad;
                            let up_row = &up_plane[oy * g.ow..(oy + 1) * g.ow];
                            let in_row = &in_plane[iy * g.w..(iy + 1) * g.w];
                            let gx_row = &mut gx_plane[iy * g.w..(iy + 1) * g.w];
                            for ox in x0..x1 {
                                let ix = ox * g.stride + kx - g.pad;
                                acc += up_row[ox] * in_row[ix];
                                gx_row[ix] += wv * up_row[ox];
                            }
                        }
                        gkd[widx] += acc;
                    }
                }
            }
        }
    }
    Ok(LayerGrad::new(vec![("kernels", gk), ("bias", gb)], gx))
}

/// Input gradient only; skips the kernel/bias accumulation.
pub(crate) fn conv2d_backward_input(
    input_dims: &[usize],
    kernels: &Tensor,
    stride: usize,
    upstream: &Tensor,
) -> Tensor {
    let g = Geometry::check(&Tensor::zeros(input_dims), kernels, stride)
        .expect("conv geometry validated on forward");
    let kd = kernels.data();
    let up = upstream.data();
    let mut gx = Tensor::zeros(input_dims);
    let plane_out = g.oh * g.ow;
    let plane_in = g.h * g.w;
    let gxd = gx.data_mut();
    for co in 0..g.c_out {
        let up_plane = &up[co * plane_out..(co + 1) * plane_out];
        for ci in 0..g.c_in {
            let gx_plane = &mut gxd[ci * plane_in..(ci + 1) * plane_in];
            for ky in 0..g.k {
                let (y0, y1) = g.valid(ky, g.h, g.oh);
                for kx in 0..g.k {
                    let wv = kd[((co * g.c_in + ci) * g.k + ky) * g.k + kx];
                    let (x0, x1) = g.valid(kx, g.w, g.ow);
                    for oy in y0..y1 {
                        let iy = oy * g.stride + ky - g.pad;
                        let up_row = &up_plane[oy * g.ow..(oy + 1) * g.ow];
                        let gx_row = &mut gx_plane[iy * g.w..(iy + 1) * g.w];
                        for ox in x0..x1 {
                            gx_row[ox * g.stride + kx - g.pad] += wv * up_row[ox];
                        }
                    }
                }
            }
        }
    }
    gx
}
