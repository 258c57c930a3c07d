use serde::{Deserialize, Serialize};

/// Element-wise layer activation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Activation {
    ReLU,
    Identity,
    Tanh,
}

impl Activation {
    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::ReLU => z.max(0.0),
            Activation::Identity => z,
            Activation::Tanh => z.tanh(),
        }
    }

    /// Derivative expressed through the post-activation value `y`.
    ///
    /// All three activations admit this form, which lets backprop run off the
    /// stored forward trace alone.
    #[inline]
    pub fn grad_from_output(self, y: f64) -> f64 {
        match self {
            Activation::ReLU => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Identity => 1.0,
            Activation::Tanh => 1.0 - y * y,
        }
    }

    pub(crate) fn tag(self) -> u8 {
        match self {
            Activation::ReLU => 0,
            Activation::Identity => 1,
            Activation::Tanh => 2,
        }
    }

    pub(crate) fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(Activation::ReLU),
            1 => Some(Activation::Identity),
            2 => Some(Activation::Tanh),
            _ => None,
        }
    }
}
