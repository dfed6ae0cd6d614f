//! Tensor decompositions: CP, Tucker, tensor-train and multilinear subspace learning.

mod cp;
mod formats;
mod mpca;
mod tt;
mod tucker;

pub use cp::{cp_als, CpResult};
pub use formats::{KruskalTensor, TtTensor, TuckerTensor};
pub use mpca::{mpca, multifactor_analysis, MpcaResult, MultifactorModel};
pub use tt::{tt_rank_bounds, tt_svd, TtTruncation};
pub use tucker::{tucker_hooi, tucker_hosvd, TuckerResult};

/// Factor initialisation strategy for iterative decompositions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Init {
    /// Leading left singular vectors of each unfolding.
    Hosvd,
    /// Standard-normal entries from the seeded generator.
    Random,
}

/// Options shared by the iterative decompositions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecompOptions {
    pub max_iters: usize,
    /// Stop once the fit changes by less than this between iterations.
    pub tol: f64,
    pub seed: u64,
    pub init: Init,
}

impl Default for DecompOptions {
    fn default() -> Self {
        Self {
            max_iters: 500,
            tol: 1e-8,
            seed: 0,
            init: Init::Hosvd,
        }
    }
}

impl DecompOptions {
    pub(crate) fn validate(&self) -> crate::Result<()> {
        if self.max_iters == 0 {
            return Err(crate::Error::InvalidArgument("max_iters must be positive".into()));
        }
        if !(self.tol > 0.0) {
            return Err(crate::Error::InvalidArgument(format!(
                "tolerance must be positive, got {}",
                self.tol
            )));
        }
        Ok(())
    }
}

/// `1 − ‖X − X̂‖ / ‖X‖`, with a zero tensor counting as a perfect fit of itself.
pub fn fit(x: &crate::DenseTensor, approx: &crate::DenseTensor) -> f64 {
    1.0 - approx.relative_error(x)
}
