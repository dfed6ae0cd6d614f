use super::{fit, DecompOptions, TuckerTensor};
use crate::error::{Error, Result};
use crate::linalg::leading_left_singular_vectors;
use crate::tensor::{mode_n_product, unfold, DenseMatrix, DenseTensor};

/// Outcome of [`tucker_hooi`].
#[derive(Debug, Clone)]
pub struct TuckerResult {
    pub tucker: TuckerTensor,
    /// Fit of the HOSVD start followed by the fit after every sweep.
    pub fit_history: Vec<f64>,
    pub sweeps: usize,
    pub converged: bool,
}

impl TuckerResult {
    pub fn fit(&self) -> f64 {
        *self.fit_history.last().expect("non-empty history")
    }
}

pub(crate) fn check_ranks(shape: &[usize], ranks: &[usize]) -> Result<()> {
    if ranks.len() != shape.len() {
        return Err(Error::InvalidRank(format!(
            "expected {} ranks for shape {shape:?}, got {ranks:?}",
            shape.len()
        )));
    }
    for (n, (&r, &i)) in ranks.iter().zip(shape).enumerate() {
        if r == 0 || r > i {
            return Err(Error::InvalidRank(format!(
                "rank {r} for mode {n} outside 1..={i}"
            )));
        }
    }
    Ok(())
}

/// Projects `x` onto the factor spaces: `X ×_1 U^(1)ᵀ … ×_N U^(N)ᵀ`, skipping `skip`.
pub(crate) fn project(x: &DenseTensor, factors: &[DenseMatrix], skip: Option<usize>) -> Result<DenseTensor> {
    let mut acc = x.clone();
    for (n, f) in factors.iter().enumerate() {
        if Some(n) == skip {
            continue;
        }
        acc = mode_n_product(&acc, &f.transpose(), n)?;
    }
    Ok(acc)
}

/// Truncated higher-order SVD: factor `n` holds the leading `R_n` left singular vectors of
/// `X_[n]` and the core is the projection of `X` onto them.
pub fn tucker_hosvd(x: &DenseTensor, ranks: &[usize]) -> Result<TuckerTensor> {
    check_ranks(x.shape(), ranks)?;
    let factors = (0..x.order())
        .map(|n| leading_left_singular_vectors(&unfold(x, n)?, ranks[n]))
        .collect::<Result<Vec<_>>>()?;
    let core = project(x, &factors, None)?;
    TuckerTensor::new(core, factors)
}

/// Higher-order orthogonal iteration started from the HOSVD.
pub fn tucker_hooi(x: &DenseTensor, ranks: &[usize], opts: &DecompOptions) -> Result<TuckerResult> {
    opts.validate()?;
    let start = tucker_hosvd(x, ranks)?;
    let mut history = vec![fit(x, &start.to_tensor())];
    let mut factors = start.factors;
    let mut current = TuckerTensor::new(start.core, factors.clone())?;
    let mut converged = history[0] == 1.0;
    let mut sweeps = 0;
    while !converged && sweeps < opts.max_iters {
        sweeps += 1;
        for n in 0..x.order() {
            let partial = project(x, &factors, Some(n))?;
            factors[n] = leading_left_singular_vectors(&unfold(&partial, n)?, ranks[n])?;
        }
        let core = project(x, &factors, None)?;
        current = TuckerTensor::new(core, factors.clone())?;
        let f = fit(x, &current.to_tensor());
        let prev = *history.last().expect("non-empty");
        history.push(f);
        converged = (f - prev).abs() < opts.tol;
    }
    Ok(TuckerResult {
        tucker: current,
        fit_history: history,
        sweeps,
        converged,
    })
}
