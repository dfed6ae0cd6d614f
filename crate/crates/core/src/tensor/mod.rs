//! Dense tensors, matrices and the multilinear operations on them.

mod dense;
mod matrix;
mod norms;
mod ops;

pub use dense::DenseTensor;
pub(crate) use dense::increment_index;
pub use matrix::DenseMatrix;
pub use norms::{frobenius, norm_l0, norm_lp, nuclear, schatten};
pub use ops::{
    fold, generalized_inner, hadamard, inner, khatri_rao, kronecker, mode_n_conv1d,
    mode_n_product, mode_n_vec_product, multi_mode_product, outer, unfold, vectorize,
};
