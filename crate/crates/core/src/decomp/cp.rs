use rand_distr::{Distribution, StandardNormal};

use super::{fit, DecompOptions, Init, KruskalTensor};
use crate::error::{Error, Result};
use crate::linalg::{leading_left_singular_vectors, pinv};
use crate::tensor::{hadamard, khatri_rao, unfold, DenseMatrix, DenseTensor};

/// Outcome of [`cp_als`].
#[derive(Debug, Clone)]
pub struct CpResult {
    /// Normalised model: unit-norm factor columns, non-negative weights.
    pub kruskal: KruskalTensor,
    /// Fit `1 − ‖X − X̂‖/‖X‖` after every sweep.
    pub fit_history: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Set when the rank exceeds some mode size.
    pub warning: Option<String>,
}

impl CpResult {
    pub fn fit(&self) -> f64 {
        self.fit_history.last().copied().unwrap_or(0.0)
    }
}

/// CP decomposition by alternating least squares.
///
/// Each sweep solves, for every mode in turn, the normal equations
/// `U_n · (∗_{k≠n} U_kᵀU_k) = X_[n] · (⊙_{k≠n} U_k)` with a pseudo-inverse. After a sweep the
/// factors are also moved `k^{1/3} − 1` times further along the change since the previous sweep
/// (iteration `k`); that point replaces the sweep result only if it fits better, so the fit
/// history stays non-decreasing.
pub fn cp_als(x: &DenseTensor, rank: usize, opts: &DecompOptions) -> Result<CpResult> {
    if rank == 0 {
        return Err(Error::InvalidRank("CP rank must be at least 1".into()));
    }
    opts.validate()?;
    let shape = x.shape().to_vec();
    let order = shape.len();
    let warning = shape.iter().position(|&i| rank > i).map(|n| {
        format!(
            "rank {rank} exceeds size {} of mode {n}; the model is over-parametrised",
            shape[n]
        )
    });

    let mut factors = initial_factors(x, rank, opts)?;
    if order == 1 {
        // A vector is its own rank-1 decomposition.
        let mut f = DenseMatrix::zeros(shape[0], rank);
        f.set_col(0, x.data());
        let kruskal = KruskalTensor::from_factors(vec![f])?.normalized();
        let fit = fit(x, &kruskal.to_tensor());
        return Ok(CpResult {
            kruskal,
            fit_history: vec![fit],
            iterations: 1,
            converged: true,
            warning,
        });
    }

    let unfoldings: Vec<DenseMatrix> = (0..order).map(|n| unfold(x, n)).collect::<Result<_>>()?;
    let mut history = Vec::new();
    let mut model = KruskalTensor::from_factors(factors.clone())?;
    let mut converged = false;
    let mut iterations = 0;
    let mut previous_state: Option<Vec<DenseMatrix>> = None;
    for _ in 0..opts.max_iters {
        iterations += 1;
        for n in 0..order {
            let others: Vec<&DenseMatrix> =
                (0..order).filter(|&k| k != n).map(|k| &factors[k]).collect();
            let mut gram = others[0].t_matmul(others[0])?;
            for f in &others[1..] {
                gram = hadamard(&gram, &f.t_matmul(f)?)?;
            }
            let kr = khatri_rao(&others)?;
            let mttkrp = unfoldings[n].matmul(&kr)?;
            factors[n] = mttkrp.matmul(&pinv(&gram)?)?;
        }
        model = KruskalTensor::from_factors(factors.clone())?.normalized();
        // Keep the sweep state normalised, with the weights folded into the last factor.
        factors = model.factors.clone();
        let last = order - 1;
        factors[last] = factors[last].scale_columns(&model.weights);

        let mut current = fit(x, &model.to_tensor());
        // Extrapolate along the last update, keeping a step only when it improves the fit; a
        // successful step is retried at twice the length.
        if let Some(prev) = &previous_state {
            let base = factors.clone();
            let mut step = (iterations as f64).cbrt() - 1.0;
            for _ in 0..4 {
                let candidate = base
                    .iter()
                    .zip(prev)
                    .map(|(f, p)| f.add(&f.sub(p)?.scale(step)))
                    .collect::<Result<Vec<_>>>()?;
                let trial = KruskalTensor::from_factors(candidate)?.normalized();
                let trial_fit = fit(x, &trial.to_tensor());
                if !(trial_fit > current) {
                    break;
                }
                current = trial_fit;
                factors = trial.factors.clone();
                factors[last] = factors[last].scale_columns(&trial.weights);
                model = trial;
                step *= 2.0;
            }
        }
        previous_state = Some(factors.clone());
        let previous = history.last().copied();
        history.push(current);
        if let Some(prev) = previous {
            if (current - prev).abs() < opts.tol {
                converged = true;
                break;
            }
        }
        if current == 1.0 {
            converged = true;
            break;
        }
    }

    Ok(CpResult {
        kruskal: model,
        fit_history: history,
        iterations,
        converged,
        warning,
    })
}

fn initial_factors(x: &DenseTensor, rank: usize, opts: &DecompOptions) -> Result<Vec<DenseMatrix>> {
    let mut rng = crate::seeded_rng(opts.seed);
    let mut random = |rows: usize, cols: usize| {
        DenseMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(&mut rng))
    };
    let mut factors = Vec::with_capacity(x.order());
    for n in 0..x.order() {
        let size = x.shape()[n];
        let f = match opts.init {
            Init::Random => random(size, rank),
            Init::Hosvd => {
                let k = rank.min(size);
                let lead = leading_left_singular_vectors(&unfold(x, n)?, k)?;
                if k == rank {
                    lead
                } else {
                    let extra = random(size, rank - k);
                    DenseMatrix::from_fn(size, rank, |i, j| {
                        if j < k {
                            lead.get(i, j)
                        } else {
                            extra.get(i, j - k)
                        }
                    })
                }
            }
        };
        factors.push(f);
    }
    Ok(factors)
}
