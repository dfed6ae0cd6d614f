//! Dense tensor algebra and tensor methods.
//!
//! The crate is organised bottom-up:
//!
//! * [`tensor`]: the row-major [`DenseTensor`] and [`DenseMatrix`] types, unfolding and folding,
//!   n-mode products, Kronecker/Khatri-Rao/Hadamard/outer products, inner products,
//!   mode-wise 1-D cross-correlation and norms.
//! * [`linalg`]: one-sided Jacobi SVD and the proximal operators built on it.
//! * [`decomp`]: CP-ALS, Tucker (HOSVD/HOOI), tensor-train SVD, MPCA and multifactor analysis.
//! * [`robust`]: convex robust tensor PCA solved with ADMM.
//! * [`nn`]: tensor contraction/regression layers, TT dense layers, tensor dropout,
//!   polynomial networks and a small SGD trainer.
//! * [`convfact`]: direct multichannel convolution and its factorized pipelines.
//! * [`io`]: the TNSR binary format and factorized-model manifests.
//!
//! Mode indices in the public API are 0-based: mode `0` of a tensor is its first axis.

pub mod convfact;
pub mod decomp;
mod error;
pub mod io;
pub mod linalg;
pub mod nn;
pub mod robust;
pub mod tensor;

pub use error::{Error, Result};
pub use tensor::{DenseMatrix, DenseTensor};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Random generator used everywhere randomness is needed.
pub type Rng = ChaCha8Rng;

/// Deterministic generator for a 64-bit seed.
pub fn seeded_rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
