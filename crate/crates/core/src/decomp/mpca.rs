use super::tucker::{check_ranks, project};
use super::{tucker_hosvd, DecompOptions, TuckerTensor};
use crate::error::{Error, Result};
use crate::linalg::leading_left_singular_vectors;
use crate::tensor::{mode_n_product, unfold, DenseMatrix, DenseTensor};

/// Outcome of [`mpca`].
#[derive(Debug, Clone, PartialEq)]
pub struct MpcaResult {
    /// One column-orthonormal `I_n × R_n` matrix per non-sample mode.
    pub projections: Vec<DenseMatrix>,
    /// Projected samples, shape `R_1 × … × R_{N−1} × M`.
    pub cores: DenseTensor,
    /// Captured scatter `Σ_m ‖core_m‖²` at the start and after every sweep.
    pub scatter_history: Vec<f64>,
    pub sweeps: usize,
    pub converged: bool,
}

impl MpcaResult {
    pub fn captured_scatter(&self) -> f64 {
        *self.scatter_history.last().expect("non-empty history")
    }

    /// Maps samples (sample mode last) into the learned subspace.
    pub fn project(&self, samples: &DenseTensor) -> Result<DenseTensor> {
        if samples.order() != self.projections.len() + 1 {
            return Err(Error::ShapeMismatch(format!(
                "expected order-{} samples, got shape {:?}",
                self.projections.len() + 1,
                samples.shape()
            )));
        }
        project(samples, &self.projections, Some(samples.order() - 1))
    }

    /// Lifts the cores back to sample space.
    pub fn reconstruct(&self) -> DenseTensor {
        let mut acc = self.cores.clone();
        for (n, u) in self.projections.iter().enumerate() {
            acc = mode_n_product(&acc, u, n).expect("consistent projections");
        }
        acc
    }
}

/// Multilinear PCA with orthonormal projections.
///
/// `samples` stacks `M` tensors of order `N − 1` along its last mode. The data is not centred;
/// subtract the mean sample first if that is wanted. Projections start from the per-mode leading
/// singular vectors and are refined by alternating maximisation of captured scatter, stopping once
/// its relative change drops below `opts.tol`.
pub fn mpca(samples: &DenseTensor, ranks: &[usize], opts: &DecompOptions) -> Result<MpcaResult> {
    opts.validate()?;
    let order = samples.order();
    if order < 2 {
        return Err(Error::InvalidArgument(
            "MPCA needs samples stacked along a trailing mode".into(),
        ));
    }
    let sample_mode = order - 1;
    check_ranks(&samples.shape()[..sample_mode], ranks)?;

    let mut projections = (0..sample_mode)
        .map(|n| leading_left_singular_vectors(&unfold(samples, n)?, ranks[n]))
        .collect::<Result<Vec<_>>>()?;
    let mut cores = project(samples, &projections, Some(sample_mode))?;
    let mut history = vec![cores.frobenius().powi(2)];
    let mut sweeps = 0;
    let mut converged = sample_mode == 1;
    while !converged && sweeps < opts.max_iters {
        sweeps += 1;
        for n in 0..sample_mode {
            let mut partial = samples.clone();
            for (k, u) in projections.iter().enumerate() {
                if k != n {
                    partial = mode_n_product(&partial, &u.transpose(), k)?;
                }
            }
            projections[n] = leading_left_singular_vectors(&unfold(&partial, n)?, ranks[n])?;
        }
        cores = project(samples, &projections, Some(sample_mode))?;
        let scatter = cores.frobenius().powi(2);
        let prev = *history.last().expect("non-empty");
        history.push(scatter);
        converged = (scatter - prev).abs() <= opts.tol * prev.max(f64::MIN_POSITIVE);
    }
    Ok(MpcaResult {
        projections,
        cores,
        scatter_history: history,
        sweeps,
        converged,
    })
}

/// Multilinear model of data indexed by variation factors plus one pixel mode.
#[derive(Debug, Clone, PartialEq)]
pub struct MultifactorModel {
    /// Core `B` and one orthonormal factor per mode.
    pub tucker: TuckerTensor,
    pub pixel_mode: usize,
}

impl MultifactorModel {
    /// Factor matrix for a variation mode; row `i` describes label `i`.
    pub fn factor(&self, mode: usize) -> &DenseMatrix {
        &self.tucker.factors[mode]
    }

    /// `B ×_pixel U_pixel`: the basis that the variation factors mix.
    pub fn basis(&self) -> DenseTensor {
        mode_n_product(&self.tucker.core, &self.tucker.factors[self.pixel_mode], self.pixel_mode)
            .expect("consistent model")
    }
}

/// HOSVD of a labelled data tensor, keeping every mode at its largest attainable rank
/// `min(I_n, Π_{k≠n} I_k)`.
pub fn multifactor_analysis(x: &DenseTensor, pixel_mode: usize) -> Result<MultifactorModel> {
    x.check_mode(pixel_mode)?;
    let total: usize = x.len();
    let ranks: Vec<usize> = x.shape().iter().map(|&i| i.min(total / i)).collect();
    Ok(MultifactorModel {
        tucker: tucker_hosvd(x, &ranks)?,
        pixel_mode,
    })
}
