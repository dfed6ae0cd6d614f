//! Tensorized neural-network building blocks.
//!
//! Batched inputs carry the batch as mode `0`; layers never contract it.

mod dropout;
mod polynet;
mod tcl;
mod train;
mod trl;
mod tt_linear;

pub use dropout::{cp_dropout, tucker_dropout};
pub use polynet::{polynet_forward, polynet_grad, PolyNet, PolyNetGrad};
pub use tcl::{tcl_dense_param_count, tcl_forward, tcl_param_count, TclLayer};
pub use train::{sgd_fit, SgdModel};
pub use trl::{fc_param_count, trl_forward, trl_forward_dense, trl_grad, trl_param_count, TrlGrad, TrlLayer};
pub use tt_linear::{
    detensorize_matrix, tensorize_matrix, tt_linear_forward, tt_linear_param_count, TtLinearLayer,
};

use crate::error::{Error, Result};
use crate::tensor::DenseMatrix;

/// Uniform entries in `[-scale, scale)`.
pub(crate) fn uniform_matrix(rows: usize, cols: usize, scale: f64, rng: &mut crate::Rng) -> DenseMatrix {
    use rand::Rng;
    DenseMatrix::from_fn(rows, cols, |_, _| rng.random_range(-scale..scale))
}

pub(crate) fn check_keep_probability(theta: f64) -> Result<()> {
    if theta > 0.0 && theta <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "keep probability must lie in (0, 1], got {theta}"
        )))
    }
}
