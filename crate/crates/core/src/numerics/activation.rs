use std::str::FromStr;

use super::Tensor;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Sigmoid,
    Tanh,
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "relu" => Ok(Activation::Relu),
            "sigmoid" => Ok(Activation::Sigmoid),
            "tanh" => Ok(Activation::Tanh),
            other => Err(Error::invalid(format!("unknown activation kind `{other}`"))),
        }
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl Activation {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Sigmoid => sigmoid(x),
            Activation::Tanh => x.tanh(),
        }
    }

    /// Derivative at pre-activation `x`, given `y = apply(x)`.
    fn slope(self, x: f64, y: f64) -> f64 {
        match self {
            Activation::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => y * (1.0 - y),
            Activation::Tanh => 1.0 - y * y,
        }
    }
}

pub fn activation_forward(kind: Activation, input: &Tensor) -> Tensor {
    input.map(|x| kind.apply(x))
}

/// Gradient with respect to the pre-activation `input`.
pub fn activation_backward(kind: Activation, input: &Tensor, upstream: &Tensor) -> Result<Tensor> {
    if input.dims() != upstream.dims() {
        return Err(Error::shape(format!(
            "activation upstream {:?} vs input {:?}",
            upstream.dims(),
            input.dims()
        )));
    }
    let data = input
        .data()
        .iter()
        .zip(upstream.data())
        .map(|(&x, &u)| u * kind.slope(x, kind.apply(x)))
        .collect();
    Tensor::from_vec(input.dims(), data)
}

/// Same as [`activation_backward`] but reuses the cached forward output.
pub(crate) fn activation_backward_cached(
    kind: Activation,
    input: &Tensor,
    output: &Tensor,
    upstream: &Tensor,
) -> Tensor {
    let data = input
        .data()
        .iter()
        .zip(output.data())
        .zip(upstream.data())
        .map(|((&x, &y), &u)| u * kind.slope(x, y))
        .collect();
    Tensor::from_vec(input.dims(), data).expect("dims preserved")
}
