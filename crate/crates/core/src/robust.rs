//! Robust tensor PCA: split `X = L + S` into a low-rank and a sparse part by minimising
//! `Σ_n α_n‖L_[n]‖_* + λ‖S‖_1` subject to `L + S = X`.

use crate::error::{Error, Result};
use crate::linalg::{shrink, svt_parts};
use crate::tensor::{fold, unfold, DenseTensor};

/// Solver settings for [`trpca`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RpcaOptions {
    pub max_iters: usize,
    /// Stop once both residuals fall below `tol·‖X‖`.
    pub tol: f64,
    /// Initial penalty.
    pub rho: f64,
    pub rho_max: f64,
    /// Multiplier applied when one residual dominates the other by `balance`.
    pub rho_step: f64,
    pub balance: f64,
}

impl Default for RpcaOptions {
    fn default() -> Self {
        Self {
            max_iters: 1000,
            tol: 1e-7,
            rho: 1e-2,
            rho_max: 1e6,
            rho_step: 1.5,
            balance: 10.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RpcaResult {
    pub low_rank: DenseTensor,
    pub sparse: DenseTensor,
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub converged: bool,
    /// Split objective `Σ α_n‖M_n‖_* + λ‖S‖_1` per iteration.
    pub objective_history: Vec<f64>,
}

impl RpcaResult {
    /// `‖X − L − S‖ / ‖X‖`.
    pub fn feasibility(&self, x: &DenseTensor) -> f64 {
        let fitted = self.low_rank.add(&self.sparse).expect("same shape");
        fitted.relative_error(x)
    }
}

/// `1/√(max_n I_n)`.
pub fn default_lambda(shape: &[usize]) -> f64 {
    let largest = shape.iter().copied().max().unwrap_or(1).max(1);
    1.0 / (largest as f64).sqrt()
}

/// Equal mode weights `1/N`.
pub fn default_alpha(order: usize) -> Vec<f64> {
    vec![1.0 / order as f64; order]
}

/// `Σ_n α_n‖L_[n]‖_* + λ‖S‖_1`.
pub fn objective(l: &DenseTensor, s: &DenseTensor, lambda: f64, alpha: &[f64]) -> Result<f64> {
    let mut total = lambda * s.data().iter().map(|v| v.abs()).sum::<f64>();
    for (n, &a) in alpha.iter().enumerate() {
        total += a * crate::tensor::nuclear(&unfold(l, n)?)?;
    }
    Ok(total)
}

/// Sum-of-nuclear-norms robust PCA by ADMM.
///
/// Each mode gets its own copy `M_n` of `L` (constraint `M_n = L`). One iteration applies SVT with
/// threshold `α_n/ρ` to every `M_n`, soft-thresholds `S` at `λ/ρ`, averages the copies into `L` and
/// takes a dual ascent step. `ρ` adapts to keep the primal and dual residuals balanced. Without
/// convergence the iterate with the smallest residual is returned with `converged = false`, its
/// low-rank part replaced by `X − S` so that the split still sums to `X`.
pub fn trpca(x: &DenseTensor, lambda: f64, alpha: &[f64], opts: &RpcaOptions) -> Result<RpcaResult> {
    check_inputs(x, lambda, alpha, opts)?;
    let order = x.order();
    let shape = x.shape().to_vec();
    let x_norm = x.frobenius();
    let threshold = opts.tol * x_norm;

    let mut rho = opts.rho;
    let mut l = DenseTensor::zeros(&shape);
    let mut s = DenseTensor::zeros(&shape);
    let mut ys = vec![DenseTensor::zeros(&shape); order];
    let mut z = DenseTensor::zeros(&shape);
    let mut ms = vec![DenseTensor::zeros(&shape); order];
    let mut history = Vec::new();
    let mut best: Option<(f64, DenseTensor, f64, f64)> = None;
    let mut iterations = 0;
    let mut converged = false;
    let (mut primal, mut dual) = (f64::INFINITY, f64::INFINITY);

    if x_norm == 0.0 {
        converged = true;
        primal = 0.0;
        dual = 0.0;
    }
    while !converged && iterations < opts.max_iters {
        iterations += 1;
        let mut obj = 0.0;
        for n in 0..order {
            let target = l.zip_with(&ys[n], |a, b| a - b / rho)?;
            let (m, _, nuclear) = svt_parts(&unfold(&target, n)?, alpha[n] / rho)?;
            ms[n] = fold(&m, n, &shape)?;
            obj += alpha[n] * nuclear;
        }
        let tau = lambda / rho;
        for (i, v) in s.data_mut().iter_mut().enumerate() {
            *v = shrink(x.data()[i] - l.data()[i] - z.data()[i] / rho, tau);
        }
        obj += lambda * s.data().iter().map(|v| v.abs()).sum::<f64>();
        history.push(obj);

        let mut next = DenseTensor::zeros(&shape);
        {
            let acc = next.data_mut();
            for (m, y) in ms.iter().zip(&ys) {
                for ((a, &mv), &yv) in acc.iter_mut().zip(m.data()).zip(y.data()) {
                    *a += mv + yv / rho;
                }
            }
            for (i, a) in acc.iter_mut().enumerate() {
                *a = (*a + x.data()[i] - s.data()[i] - z.data()[i] / rho) / (order + 1) as f64;
            }
        }
        let change = next.sub(&l)?.frobenius();
        l = next;

        let mut primal_sq = 0.0;
        for (m, y) in ms.iter().zip(ys.iter_mut()) {
            for ((yv, &mv), &lv) in y.data_mut().iter_mut().zip(m.data()).zip(l.data()) {
                let r = mv - lv;
                primal_sq += r * r;
                *yv += rho * r;
            }
        }
        for (i, zv) in z.data_mut().iter_mut().enumerate() {
            let r = l.data()[i] + s.data()[i] - x.data()[i];
            primal_sq += r * r;
            *zv += rho * r;
        }
        primal = primal_sq.sqrt();
        dual = rho * ((order + 1) as f64).sqrt() * change;

        let score = primal.max(dual);
        if best.as_ref().is_none_or(|b| score < b.0) {
            best = Some((score, s.clone(), primal, dual));
        }
        if score < threshold {
            converged = true;
            break;
        }
        if primal > opts.balance * dual {
            rho = (rho * opts.rho_step).min(opts.rho_max);
        } else if dual > opts.balance * primal {
            rho /= opts.rho_step;
        }
    }

    if !converged {
        if let Some((_, bs, bp, bd)) = best {
            l = x.sub(&bs)?;
            s = bs;
            primal = bp;
            dual = bd;
        }
    }
    Ok(RpcaResult {
        low_rank: l,
        sparse: s,
        iterations,
        primal_residual: primal,
        dual_residual: dual,
        converged,
        objective_history: history,
    })
}

fn check_inputs(x: &DenseTensor, lambda: f64, alpha: &[f64], opts: &RpcaOptions) -> Result<()> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidArgument(format!("lambda must be positive, got {lambda}")));
    }
    if alpha.len() != x.order() {
        return Err(Error::InvalidArgument(format!(
            "expected {} mode weights, got {}",
            x.order(),
            alpha.len()
        )));
    }
    if alpha.iter().any(|&a| !(a >= 0.0)) || (alpha.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!(
            "mode weights must be non-negative and sum to 1, got {alpha:?}"
        )));
    }
    if opts.max_iters == 0 || !(opts.tol > 0.0) || !(opts.rho > 0.0) || !(opts.rho_step > 1.0) {
        return Err(Error::InvalidArgument(format!("invalid solver options {opts:?}")));
    }
    Ok(())
}
