//! Matrix kernels: one-sided Jacobi SVD, thresholding operators and least squares.

use crate::error::{shape_err, Error, Result};
use crate::tensor::{DenseMatrix, DenseTensor};

/// Maximum number of Jacobi sweeps before giving up.
pub const MAX_SWEEPS: usize = 100;

/// Singular values below this fraction of `σ_1` get their left vectors re-orthogonalised.
const REORTHOGONALIZE: f64 = 1e-8;
/// Relative singular-value cutoff used by [`pinv`] and [`lstsq`].
const PINV_CUTOFF: f64 = 1e-12;

/// Thin SVD `A = U · diag(s) · Vᵀ` with `k = min(rows, cols)` components.
///
/// `s` is sorted in descending order. In every column of `u` the entry of largest magnitude
/// is non-negative (the first one wins ties), which makes the factorisation deterministic.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: DenseMatrix,
    pub s: Vec<f64>,
    pub v: DenseMatrix,
}

impl Svd {
    pub fn reconstruct(&self) -> DenseMatrix {
        self.u
            .scale_columns(&self.s)
            .matmul(&self.v.transpose())
            .expect("consistent factors")
    }

    /// Keeps the leading `r` triplets.
    pub fn truncate(&self, r: usize) -> Svd {
        Svd {
            u: self.u.leading_columns(r),
            s: self.s[..r].to_vec(),
            v: self.v.leading_columns(r),
        }
    }
}

/// Computes the thin SVD with one-sided (Hestenes) Jacobi rotations.
pub fn svd(a: &DenseMatrix) -> Result<Svd> {
    if a.data().iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument("svd input contains non-finite values".into()));
    }
    let d = if a.rows() >= a.cols() {
        let (u, s, v) = jacobi(a)?;
        canonicalize(u, s, v)
    } else {
        let (u, s, v) = jacobi(&a.transpose())?;
        let t = canonicalize(u, s, v);
        Svd { u: t.v, s: t.s, v: t.u }
    };
    Ok(fix_signs(d))
}

/// Leading `r` singular triplets.
pub fn truncated_svd(a: &DenseMatrix, r: usize) -> Result<Svd> {
    let k = a.rows().min(a.cols());
    if r == 0 || r > k {
        return Err(Error::InvalidRank(format!(
            "truncation rank {r} outside 1..={k} for a {}x{} matrix",
            a.rows(),
            a.cols()
        )));
    }
    Ok(svd(a)?.truncate(r))
}

/// Leading `r` left singular vectors as an `rows × r` column-orthonormal matrix.
pub fn leading_left_singular_vectors(a: &DenseMatrix, r: usize) -> Result<DenseMatrix> {
    let full = svd(a)?;
    if r > full.u.cols() {
        // Wide request: complete the basis with orthonormal directions.
        return complete_basis(&full.u, r);
    }
    Ok(full.u.leading_columns(r))
}

/// Element-wise soft thresholding `sign(x)·max(|x| − τ, 0)`.
pub fn soft_threshold(t: &DenseTensor, tau: f64) -> Result<DenseTensor> {
    check_tau(tau)?;
    Ok(t.map(|x| shrink(x, tau)))
}

#[inline]
pub(crate) fn shrink(x: f64, tau: f64) -> f64 {
    if x > tau {
        x - tau
    } else if x < -tau {
        x + tau
    } else {
        0.0
    }
}

/// Singular-value thresholding: the proximal operator of `τ‖·‖_*`.
pub fn svt(a: &DenseMatrix, tau: f64) -> Result<DenseMatrix> {
    Ok(svt_with_rank(a, tau)?.0)
}

/// Like [`svt`], also returning the number of singular values that survive.
pub fn svt_with_rank(a: &DenseMatrix, tau: f64) -> Result<(DenseMatrix, usize)> {
    let (out, kept, _) = svt_parts(a, tau)?;
    Ok((out, kept))
}

/// SVT result, surviving rank and nuclear norm of the result.
pub(crate) fn svt_parts(a: &DenseMatrix, tau: f64) -> Result<(DenseMatrix, usize, f64)> {
    check_tau(tau)?;
    let d = svd(a)?;
    let kept: Vec<usize> = (0..d.s.len()).filter(|&i| d.s[i] > tau).collect();
    let mut out = DenseMatrix::zeros(a.rows(), a.cols());
    for &k in &kept {
        let sigma = d.s[k] - tau;
        for i in 0..a.rows() {
            let ui = d.u.get(i, k) * sigma;
            if ui == 0.0 {
                continue;
            }
            for (o, j) in out.row_mut(i).iter_mut().zip(0..) {
                *o += ui * d.v.get(j, k);
            }
        }
    }
    let nuclear = kept.iter().map(|&k| d.s[k] - tau).sum();
    Ok((out, kept.len(), nuclear))
}

/// Moore-Penrose pseudo-inverse with singular values below `1e-12·σ_1` treated as zero.
pub fn pinv(a: &DenseMatrix) -> Result<DenseMatrix> {
    let d = svd(a)?;
    let cutoff = PINV_CUTOFF * d.s.first().copied().unwrap_or(0.0);
    let inv: Vec<f64> = d
        .s
        .iter()
        .map(|&s| if s > cutoff && s > 0.0 { 1.0 / s } else { 0.0 })
        .collect();
    d.v.scale_columns(&inv).matmul(&d.u.transpose())
}

/// Minimum-norm least-squares solution of `A·X ≈ B`.
pub fn lstsq(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    if a.rows() != b.rows() {
        return shape_err(format!(
            "lstsq: A is {}x{} but B has {} rows",
            a.rows(),
            a.cols(),
            b.rows()
        ));
    }
    let d = svd(a)?;
    let cutoff = PINV_CUTOFF * d.s.first().copied().unwrap_or(0.0);
    let inv: Vec<f64> = d
        .s
        .iter()
        .map(|&s| if s > cutoff && s > 0.0 { 1.0 / s } else { 0.0 })
        .collect();
    // X = V · diag(1/s) · Uᵀ · B
    let utb = d.u.t_matmul(b)?;
    let mut scaled = utb;
    for (i, &w) in inv.iter().enumerate() {
        scaled.row_mut(i).iter_mut().for_each(|x| *x *= w);
    }
    d.v.matmul(&scaled)
}

fn check_tau(tau: f64) -> Result<()> {
    if tau.is_nan() || tau < 0.0 {
        return Err(Error::InvalidArgument(format!("threshold must be ≥ 0, got {tau}")));
    }
    Ok(())
}

/// Orthogonalises the columns of a tall matrix; returns (U·diag(s), s, V) unsorted.
fn jacobi(a: &DenseMatrix) -> Result<(DenseMatrix, Vec<f64>, DenseMatrix)> {
    let (m, n) = a.dims();
    debug_assert!(m >= n);
    let mut cols: Vec<Vec<f64>> = (0..n).map(|j| a.col(j)).collect();
    let mut vcols: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            e
        })
        .collect();
    let fro = a.frobenius();
    let tol = (m as f64).sqrt() * f64::EPSILON;
    let floor = (f64::EPSILON * fro).powi(2);

    let mut converged = fro == 0.0 || n == 1;
    let mut sweeps = 0;
    while !converged {
        if sweeps == MAX_SWEEPS {
            return Err(Error::NoConvergence {
                algorithm: "jacobi svd",
                iterations: MAX_SWEEPS,
            });
        }
        sweeps += 1;
        converged = true;
        for i in 0..n - 1 {
            for j in i + 1..n {
                let (ci, cj) = pair_mut(&mut cols, i, j);
                let alpha = dot(ci, ci);
                let beta = dot(cj, cj);
                let gamma = dot(ci, cj);
                if gamma.abs() <= tol * (alpha * beta).sqrt() || gamma.abs() <= floor {
                    continue;
                }
                converged = false;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = if zeta >= 0.0 {
                    1.0 / (zeta + (1.0 + zeta * zeta).sqrt())
                } else {
                    -1.0 / (-zeta + (1.0 + zeta * zeta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(ci, cj, c, s);
                let (vi, vj) = pair_mut(&mut vcols, i, j);
                rotate(vi, vj, c, s);
            }
        }
    }

    let mut u = DenseMatrix::zeros(m, n);
    let mut v = DenseMatrix::zeros(n, n);
    let mut s = Vec::with_capacity(n);
    for (j, (c, vc)) in cols.iter().zip(&vcols).enumerate() {
        s.push(dot(c, c).sqrt());
        u.set_col(j, c);
        v.set_col(j, vc);
    }
    Ok((u, s, v))
}

/// Sorts, normalises and completes null directions.
fn canonicalize(scaled_u: DenseMatrix, s: Vec<f64>, v: DenseMatrix) -> Svd {
    let k = s.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| s[b].partial_cmp(&s[a]).expect("finite singular values"));

    let scale = s.iter().cloned().fold(0.0, f64::max);
    let negligible = scale * 1e-200;
    let m = scaled_u.rows();
    let mut u = DenseMatrix::zeros(m, k);
    let mut vs = DenseMatrix::zeros(v.rows(), k);
    let mut sorted = Vec::with_capacity(k);
    let mut missing = Vec::new();
    for (dst, &src) in order.iter().enumerate() {
        let sigma = s[src];
        vs.set_col(dst, &v.col(src));
        if sigma > negligible && sigma > 0.0 {
            let mut col: Vec<f64> = scaled_u.col(src).iter().map(|x| x / sigma).collect();
            sorted.push(sigma);
            if sigma < REORTHOGONALIZE * scale {
                // Directions this small carry rounding noise; re-orthogonalise them.
                for _ in 0..2 {
                    for prev in 0..dst {
                        if missing.contains(&prev) {
                            continue;
                        }
                        let b = u.col(prev);
                        let p = dot(&col, &b);
                        col.iter_mut().zip(&b).for_each(|(x, y)| *x -= p * y);
                    }
                }
                let norm = dot(&col, &col).sqrt();
                if norm < 0.5 {
                    missing.push(dst);
                    continue;
                }
                col.iter_mut().for_each(|x| *x /= norm);
            }
            u.set_col(dst, &col);
        } else {
            missing.push(dst);
            sorted.push(0.0);
        }
    }
    if !missing.is_empty() {
        fill_null_columns(&mut u, &missing);
    }
    Svd { u, s: sorted, v: vs }
}

/// Makes the largest-magnitude entry of every left singular vector non-negative.
fn fix_signs(d: Svd) -> Svd {
    let Svd { mut u, s, v: mut vs } = d;
    for j in 0..s.len() {
        let col = u.col(j);
        let mut best = 0;
        for (i, x) in col.iter().enumerate() {
            if x.abs() > col[best].abs() {
                best = i;
            }
        }
        if col[best] < 0.0 {
            let flipped: Vec<f64> = col.iter().map(|x| -x).collect();
            u.set_col(j, &flipped);
            let vf: Vec<f64> = vs.col(j).iter().map(|x| -x).collect();
            vs.set_col(j, &vf);
        }
    }
    Svd { u, s, v: vs }
}

/// Replaces the listed columns with unit vectors orthogonal to every other column.
///
/// Each new column is the coordinate vector with the largest component outside the current
/// span, orthogonalised twice.
fn fill_null_columns(u: &mut DenseMatrix, missing: &[usize]) {
    let m = u.rows();
    let mut basis: Vec<Vec<f64>> = (0..u.cols())
        .filter(|j| !missing.contains(j))
        .map(|j| u.col(j))
        .collect();
    let project_out = |e: &mut Vec<f64>, basis: &[Vec<f64>]| {
        for _ in 0..2 {
            for b in basis {
                let p = dot(e, b);
                e.iter_mut().zip(b).for_each(|(x, y)| *x -= p * y);
            }
        }
    };
    for &j in missing {
        let mut best: Option<(f64, Vec<f64>)> = None;
        for i in 0..m {
            let mut e = vec![0.0; m];
            e[i] = 1.0;
            project_out(&mut e, &basis);
            let norm = dot(&e, &e).sqrt();
            if best.as_ref().is_none_or(|(n, _)| norm > *n) {
                best = Some((norm, e));
            }
        }
        let (norm, mut e) = best.expect("at least one row");
        assert!(norm > 1e-8, "cannot complete an orthonormal basis");
        e.iter_mut().for_each(|x| *x /= norm);
        // One more pass after normalising keeps the new column orthogonal to working precision.
        project_out(&mut e, &basis);
        let norm = dot(&e, &e).sqrt();
        e.iter_mut().for_each(|x| *x /= norm);
        u.set_col(j, &e);
        basis.push(e);
    }
}

/// Extends column-orthonormal `q` to `r` orthonormal columns.
pub(crate) fn complete_basis(q: &DenseMatrix, r: usize) -> Result<DenseMatrix> {
    if r > q.rows() {
        return Err(Error::InvalidRank(format!(
            "cannot build {r} orthonormal columns in dimension {}",
            q.rows()
        )));
    }
    let mut out = DenseMatrix::zeros(q.rows(), r);
    for j in 0..q.cols().min(r) {
        out.set_col(j, &q.col(j));
    }
    let missing: Vec<usize> = (q.cols()..r).collect();
    if !missing.is_empty() {
        fill_null_columns(&mut out, &missing);
    }
    Ok(out)
}

fn pair_mut(v: &mut [Vec<f64>], i: usize, j: usize) -> (&mut Vec<f64>, &mut Vec<f64>) {
    debug_assert!(i < j);
    let (lo, hi) = v.split_at_mut(j);
    (&mut lo[i], &mut hi[0])
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn rotate(x: &mut [f64], y: &mut [f64], c: f64, s: f64) {
    for (a, b) in x.iter_mut().zip(y.iter_mut()) {
        let (xa, yb) = (*a, *b);
        *a = c * xa - s * yb;
        *b = s * xa + c * yb;
    }
}
