use crate::error::{Error, Result};
use crate::linalg;
use crate::tensor::{DenseMatrix, DenseTensor};

/// Element-wise ℓp norm for `p ≥ 1`; `p = ∞` gives the max-abs norm.
pub fn norm_lp(t: &DenseTensor, p: f64) -> Result<f64> {
    lp(t.data(), p)
}

/// Number of non-zero elements.
pub fn norm_l0(t: &DenseTensor) -> usize {
    t.data().iter().filter(|&&x| x != 0.0).count()
}

pub fn frobenius(t: &DenseTensor) -> f64 {
    t.frobenius()
}

/// Schatten-p norm: the ℓp norm of the singular values.
pub fn schatten(m: &DenseMatrix, p: f64) -> Result<f64> {
    check_p(p)?;
    let svd = linalg::svd(m)?;
    lp(&svd.s, p)
}

/// Nuclear norm (Schatten-1).
pub fn nuclear(m: &DenseMatrix) -> Result<f64> {
    schatten(m, 1.0)
}

fn check_p(p: f64) -> Result<()> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::InvalidArgument(format!("norm order p must be ≥ 1, got {p}")));
    }
    Ok(())
}

fn lp(values: &[f64], p: f64) -> Result<f64> {
    check_p(p)?;
    if p.is_infinite() {
        return Ok(values.iter().fold(0.0, |m, x| m.max(x.abs())));
    }
    if p == 1.0 {
        return Ok(values.iter().map(|x| x.abs()).sum());
    }
    if p == 2.0 {
        return Ok(values.iter().map(|x| x * x).sum::<f64>().sqrt());
    }
    Ok(values.iter().map(|x| x.abs().powf(p)).sum::<f64>().powf(1.0 / p))
}
