//! From-scratch dense networks: forward pass, exact reverse-mode gradients,
//! Adam, target-network management, and a binary weight format.
//!
//! Everything is `f64`. Networks are plain values: cloning gives an
//! independent copy, and nothing here shares state behind the scenes.

mod activation;
mod adam;
mod io;
mod loss;
mod mlp;

pub use activation::Activation;
pub use adam::{adam_step, AdamState};
pub use io::{load_mlp, load_mlp_file, save_mlp, save_mlp_file};
pub use loss::mse_loss_grad;
pub use mlp::{hard_copy, soft_update, Gradient, LayerSpec, Mlp, Trace};
