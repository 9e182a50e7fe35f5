//! Dense tensors and the fixed set of layers the generative models use,
//! each with an explicit forward and backward pass.

mod activation;
mod adam;
mod conv;
mod dense;
mod tensor;
mod upsample;

pub use activation::{activation_backward, activation_forward, sigmoid, Activation};
pub use adam::{adam_step, AdamConfig, AdamState};
pub use conv::{conv2d_backward, conv2d_forward};
pub use dense::{dense_backward, dense_forward};
pub use tensor::Tensor;
pub use upsample::{upsample2x_backward, upsample2x_forward};

pub(crate) use activation::activation_backward_cached;
pub(crate) use conv::conv2d_backward_input;
pub(crate) use dense::dense_backward_input;

/// Parameter gradients by name, plus the gradient with respect to the
/// layer input.
#[derive(Debug, Clone)]
pub struct LayerGrad {
    params: Vec<(&'static str, Tensor)>,
    pub input: Tensor,
}

impl LayerGrad {
    pub fn new(params: Vec<(&'static str, Tensor)>, input: Tensor) -> Self {
        LayerGrad { params, input }
    }

    /// Panics if the layer has no parameter called `name`.
    pub fn param(&self, name: &str) -> &Tensor {
        self.params
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, t)| t)
            .unwrap_or_else(|| panic!("layer has no parameter `{name}`"))
    }

    pub fn params(&self) -> impl Iterator<Item = (&'static str, &Tensor)> {
        self.params.iter().map(|(n, t)| (*n, t))
    }

    pub fn into_parts(self) -> (Vec<(&'static str, Tensor)>, Tensor) {
        (self.params, self.input)
    }
}
