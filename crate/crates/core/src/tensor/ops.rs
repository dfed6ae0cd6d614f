//! Unfolding, folding and the multilinear products.

use crate::error::{shape_err, Error, Result};
use crate::tensor::{DenseMatrix, DenseTensor};

/// Mode-`mode` unfolding `X_[mode]` with `I_mode` rows.
///
/// Columns enumerate the remaining indices in row-major order, so for a tensor split as
/// `left × I_mode × right` element `(a, i, b)` lands at row `i`, column `a·right + b`.
pub fn unfold(t: &DenseTensor, mode: usize) -> Result<DenseMatrix> {
    t.check_mode(mode)?;
    let (left, size, right) = t.split_at_mode(mode);
    let data = t.data();
    let cols = left * right;
    let mut out = vec![0.0; size * cols];
    for a in 0..left {
        for i in 0..size {
            let src = &data[(a * size + i) * right..(a * size + i + 1) * right];
            let dst = &mut out[i * cols + a * right..i * cols + (a + 1) * right];
            dst.copy_from_slice(src);
        }
    }
    DenseMatrix::new(size, cols, out)
}

/// Inverse of [`unfold`]: rebuilds a tensor of `shape` from its mode-`mode` unfolding.
pub fn fold(m: &DenseMatrix, mode: usize, shape: &[usize]) -> Result<DenseTensor> {
    if mode >= shape.len() {
        return Err(Error::ModeOutOfRange {
            mode,
            order: shape.len(),
        });
    }
    let left: usize = shape[..mode].iter().product();
    let right: usize = shape[mode + 1..].iter().product();
    let size = shape[mode];
    if m.rows() != size || m.cols() != left * right {
        return shape_err(format!(
            "cannot fold a {}x{} matrix along mode {mode} into shape {shape:?}",
            m.rows(),
            m.cols()
        ));
    }
    let cols = m.cols();
    let src = m.data();
    let mut out = vec![0.0; size * cols];
    for a in 0..left {
        for i in 0..size {
            out[(a * size + i) * right..(a * size + i + 1) * right]
                .copy_from_slice(&src[i * cols + a * right..i * cols + (a + 1) * right]);
        }
    }
    DenseTensor::new(shape.to_vec(), out)
}

/// Row-major vectorisation; identical to the storage order.
pub fn vectorize(t: &DenseTensor) -> Vec<f64> {
    t.data().to_vec()
}

/// Kronecker product `A ⊗ B`.
pub fn kronecker(a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
    let (ar, ac) = a.dims();
    let (br, bc) = b.dims();
    let mut out = DenseMatrix::zeros(ar * br, ac * bc);
    for i in 0..ar {
        for j in 0..ac {
            let s = a.get(i, j);
            for k in 0..br {
                for l in 0..bc {
                    out.set(i * br + k, j * bc + l, s * b.get(k, l));
                }
            }
        }
    }
    out
}

/// Column-wise Kronecker product `M_1 ⊙ M_2 ⊙ … ⊙ M_k`.
pub fn khatri_rao(mats: &[&DenseMatrix]) -> Result<DenseMatrix> {
    let first = mats
        .first()
        .ok_or_else(|| Error::InvalidArgument("khatri_rao needs at least one matrix".into()))?;
    let r = first.cols();
    if let Some(bad) = mats.iter().find(|m| m.cols() != r) {
        return shape_err(format!(
            "khatri_rao column counts differ: {} vs {}",
            r,
            bad.cols()
        ));
    }
    let mut acc = (*first).clone();
    for m in &mats[1..] {
        let rows = acc.rows() * m.rows();
        let mut next = DenseMatrix::zeros(rows, r);
        for i in 0..acc.rows() {
            for k in 0..m.rows() {
                let dst = next.row_mut(i * m.rows() + k);
                for ((d, &x), &y) in dst.iter_mut().zip(acc.row(i)).zip(m.row(k)) {
                    *d = x * y;
                }
            }
        }
        acc = next;
    }
    Ok(acc)
}

/// Element-wise product.
pub fn hadamard(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    a.zip_with(b, |x, y| x * y)
}

/// Outer product `v_1 ∘ v_2 ∘ … ∘ v_N` as an order-N tensor.
pub fn outer(vecs: &[&[f64]]) -> Result<DenseTensor> {
    if vecs.is_empty() {
        return Err(Error::InvalidArgument("outer needs at least one vector".into()));
    }
    let mut data = vecs[0].to_vec();
    let mut shape = vec![vecs[0].len()];
    for v in &vecs[1..] {
        let mut next = Vec::with_capacity(data.len() * v.len());
        for &a in &data {
            next.extend(v.iter().map(|&b| a * b));
        }
        data = next;
        shape.push(v.len());
    }
    DenseTensor::new(shape, data)
}

/// n-mode product `T ×_mode M`; `M` has `I_mode` columns and replaces that mode by `rows(M)`.
pub fn mode_n_product(t: &DenseTensor, m: &DenseMatrix, mode: usize) -> Result<DenseTensor> {
    t.check_mode(mode)?;
    let (left, size, right) = t.split_at_mode(mode);
    if m.cols() != size {
        return shape_err(format!(
            "mode-{mode} product: matrix has {} columns but mode size is {size}",
            m.cols()
        ));
    }
    let r = m.rows();
    let src = t.data();
    let mut out = vec![0.0; left * r * right];
    for a in 0..left {
        for row in 0..r {
            let dst = &mut out[(a * r + row) * right..(a * r + row + 1) * right];
            for (i, &w) in m.row(row).iter().enumerate() {
                if w == 0.0 {
                    continue;
                }
                let s = &src[(a * size + i) * right..(a * size + i + 1) * right];
                for (d, &x) in dst.iter_mut().zip(s) {
                    *d += w * x;
                }
            }
        }
    }
    let mut shape = t.shape().to_vec();
    shape[mode] = r;
    DenseTensor::new(shape, out)
}

/// Applies `T ×_k M_k` for every `(k, M_k)` pair, in the given order.
pub fn multi_mode_product(t: &DenseTensor, mats: &[(usize, &DenseMatrix)]) -> Result<DenseTensor> {
    let mut acc = t.clone();
    for &(mode, m) in mats {
        acc = mode_n_product(&acc, m, mode)?;
    }
    Ok(acc)
}

/// Contracts mode `mode` with a vector; the result has order `N − 1`.
///
/// Contracting the only mode of an order-1 tensor yields a single-element order-1 tensor.
pub fn mode_n_vec_product(t: &DenseTensor, v: &[f64], mode: usize) -> Result<DenseTensor> {
    let prod = mode_n_product(t, &DenseMatrix::row_vector(v), mode)?;
    let mut shape = t.shape().to_vec();
    shape.remove(mode);
    if shape.is_empty() {
        shape.push(1);
    }
    prod.into_reshaped(&shape)
}

/// Inner product of two same-shape tensors.
pub fn inner(x: &DenseTensor, y: &DenseTensor) -> Result<f64> {
    if x.shape() != y.shape() {
        return shape_err(format!("inner: shapes {:?} and {:?}", x.shape(), y.shape()));
    }
    Ok(x.data().iter().zip(y.data()).map(|(a, b)| a * b).sum())
}

/// Generalised inner product along the last `n` modes of `x` and the first `n` modes of `y`.
///
/// The leading modes of `x` are flattened into the rows of the result and the trailing modes
/// of `y` into its columns; with `n` equal to both orders the result is the 1×1 inner product.
pub fn generalized_inner(x: &DenseTensor, y: &DenseTensor, n: usize) -> Result<DenseMatrix> {
    if n == 0 || n > x.order() || n > y.order() {
        return Err(Error::InvalidArgument(format!(
            "cannot contract {n} modes of orders {} and {}",
            x.order(),
            y.order()
        )));
    }
    let x_shared = &x.shape()[x.order() - n..];
    let y_shared = &y.shape()[..n];
    if x_shared != y_shared {
        return shape_err(format!(
            "generalized_inner: trailing modes {x_shared:?} differ from leading modes {y_shared:?}"
        ));
    }
    let shared: usize = x_shared.iter().product();
    let dx = x.len() / shared;
    let dy = y.len() / shared;
    let xm = DenseMatrix::new(dx, shared, x.data().to_vec())?;
    let ym = DenseMatrix::new(shared, dy, y.data().to_vec())?;
    xm.matmul(&ym)
}

/// Mode-wise 1-D cross-correlation with "valid" extent: the mode shrinks to `I − K + 1`.
pub fn mode_n_conv1d(t: &DenseTensor, kernel: &[f64], mode: usize) -> Result<DenseTensor> {
    t.check_mode(mode)?;
    let (left, size, right) = t.split_at_mode(mode);
    let k = kernel.len();
    if k == 0 || k > size {
        return shape_err(format!(
            "kernel of length {k} does not fit mode {mode} of size {size}"
        ));
    }
    let out_size = size - k + 1;
    let src = t.data();
    let mut out = vec![0.0; left * out_size * right];
    for a in 0..left {
        for i in 0..out_size {
            let dst = &mut out[(a * out_size + i) * right..(a * out_size + i + 1) * right];
            for (off, &w) in kernel.iter().enumerate() {
                let s = &src[(a * size + i + off) * right..(a * size + i + off + 1) * right];
                for (d, &x) in dst.iter_mut().zip(s) {
                    *d += w * x;
                }
            }
        }
    }
    let mut shape = t.shape().to_vec();
    shape[mode] = out_size;
    DenseTensor::new(shape, out)
}
