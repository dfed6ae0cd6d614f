use rand::Rng;

use super::check_keep_probability;
use crate::decomp::{KruskalTensor, TuckerTensor};
use crate::error::Result;
use crate::tensor::{mode_n_product, DenseMatrix};

/// Keeps each rank-one component with probability `θ`, scaling survivors by `1/θ`.
///
/// Dropped components stay in place with weight zero, so the rank is unchanged.
pub fn cp_dropout(k: &KruskalTensor, theta: f64, rng: &mut crate::Rng) -> Result<KruskalTensor> {
    check_keep_probability(theta)?;
    let weights = k
        .weights
        .iter()
        .map(|&w| if rng.random_bool(theta) { w / theta } else { 0.0 })
        .collect();
    KruskalTensor::new(weights, k.factors.clone())
}

/// Contracts the core along every mode with `diag(λ^(k))/θ`, `λ^(k)` drawn i.i.d. Bernoulli(θ).
pub fn tucker_dropout(t: &TuckerTensor, theta: f64, rng: &mut crate::Rng) -> Result<TuckerTensor> {
    check_keep_probability(theta)?;
    let mut core = t.core.clone();
    for (n, &r) in t.ranks().iter().enumerate() {
        let mask: Vec<f64> = (0..r)
            .map(|_| if rng.random_bool(theta) { 1.0 / theta } else { 0.0 })
            .collect();
        core = mode_n_product(&core, &DenseMatrix::from_diag(&mask), n)?;
    }
    TuckerTensor::new(core, t.factors.clone())
}
