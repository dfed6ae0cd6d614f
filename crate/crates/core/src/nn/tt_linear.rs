use crate::decomp::{tt_svd, TtTensor, TtTruncation};
use crate::error::{shape_err, Result};
use crate::tensor::{increment_index, DenseMatrix, DenseTensor};

/// Dense layer `y = W·x` whose `Π J_k × Π I_k` weight is stored as a tensor train over the merged
/// modes `I_k·J_k`.
///
/// Merged index convention: input digit `i_k` and output digit `j_k` map to `i_k·J_k + j_k`.
/// Digits are read from the flat row/column index in row-major order, so the first factor is the
/// most significant.
#[derive(Debug, Clone, PartialEq)]
pub struct TtLinearLayer {
    in_shape: Vec<usize>,
    out_shape: Vec<usize>,
    cores: TtTensor,
}

impl TtLinearLayer {
    pub fn new(in_shape: Vec<usize>, out_shape: Vec<usize>, cores: TtTensor) -> Result<Self> {
        check_factorization(&in_shape, &out_shape)?;
        let merged: Vec<usize> = in_shape.iter().zip(&out_shape).map(|(i, j)| i * j).collect();
        if cores.shape() != merged {
            return shape_err(format!(
                "TT cores over {:?} do not match merged modes {merged:?}",
                cores.shape()
            ));
        }
        Ok(Self { in_shape, out_shape, cores })
    }

    /// Compresses `w` (`Π out × Π in`) with TT-SVD.
    pub fn from_matrix(
        w: &DenseMatrix,
        in_shape: &[usize],
        out_shape: &[usize],
        truncation: &TtTruncation,
    ) -> Result<Self> {
        let t = tensorize_matrix(w, in_shape, out_shape)?;
        Self::new(in_shape.to_vec(), out_shape.to_vec(), tt_svd(&t, truncation)?)
    }

    pub fn in_shape(&self) -> &[usize] {
        &self.in_shape
    }

    pub fn out_shape(&self) -> &[usize] {
        &self.out_shape
    }

    pub fn cores(&self) -> &TtTensor {
        &self.cores
    }

    pub fn in_features(&self) -> usize {
        self.in_shape.iter().product()
    }

    pub fn out_features(&self) -> usize {
        self.out_shape.iter().product()
    }

    pub fn param_count(&self) -> usize {
        self.cores.param_count()
    }

    pub fn to_matrix(&self) -> DenseMatrix {
        detensorize_matrix(&self.cores.to_tensor(), &self.in_shape, &self.out_shape)
            .expect("validated layer")
    }
}

fn check_factorization(in_shape: &[usize], out_shape: &[usize]) -> Result<()> {
    if in_shape.is_empty() || in_shape.len() != out_shape.len() {
        return shape_err(format!(
            "input factorization {in_shape:?} and output factorization {out_shape:?} need equal, non-zero length"
        ));
    }
    if in_shape.iter().chain(out_shape).any(|&d| d == 0) {
        return shape_err("factorization contains a zero");
    }
    Ok(())
}

/// `Σ_k R_k·I_k·J_k·R_{k+1}` for internal ranks `R_2 … R_N`.
pub fn tt_linear_param_count(in_shape: &[usize], out_shape: &[usize], ranks: &[usize]) -> usize {
    let mut full = vec![1];
    full.extend_from_slice(ranks);
    full.push(1);
    (0..in_shape.len())
        .map(|k| full[k] * in_shape[k] * out_shape[k] * full[k + 1])
        .sum()
}

/// Splits a flat row-major index into digits of the given shape.
fn digits(mut flat: usize, shape: &[usize], out: &mut [usize]) {
    for k in (0..shape.len()).rev() {
        out[k] = flat % shape[k];
        flat /= shape[k];
    }
}

/// Re-indexes `W` (`Π J × Π I`) into a tensor with modes `I_k·J_k`.
pub fn tensorize_matrix(w: &DenseMatrix, in_shape: &[usize], out_shape: &[usize]) -> Result<DenseTensor> {
    check_factorization(in_shape, out_shape)?;
    let (rows, cols) = w.dims();
    if rows != out_shape.iter().product::<usize>() || cols != in_shape.iter().product::<usize>() {
        return shape_err(format!(
            "{rows}x{cols} matrix does not factor as {out_shape:?} x {in_shape:?}"
        ));
    }
    let merged: Vec<usize> = in_shape.iter().zip(out_shape).map(|(i, j)| i * j).collect();
    let mut t = DenseTensor::zeros(&merged);
    let n = in_shape.len();
    let (mut id, mut jd, mut m) = (vec![0; n], vec![0; n], vec![0; n]);
    for r in 0..rows {
        digits(r, out_shape, &mut jd);
        for c in 0..cols {
            digits(c, in_shape, &mut id);
            for k in 0..n {
                m[k] = id[k] * out_shape[k] + jd[k];
            }
            t.set(&m, w.get(r, c));
        }
    }
    Ok(t)
}

/// Inverse of [`tensorize_matrix`].
pub fn detensorize_matrix(t: &DenseTensor, in_shape: &[usize], out_shape: &[usize]) -> Result<DenseMatrix> {
    check_factorization(in_shape, out_shape)?;
    let merged: Vec<usize> = in_shape.iter().zip(out_shape).map(|(i, j)| i * j).collect();
    if t.shape() != merged {
        return shape_err(format!("tensor {:?} is not over merged modes {merged:?}", t.shape()));
    }
    let rows: usize = out_shape.iter().product();
    let cols: usize = in_shape.iter().product();
    let mut w = DenseMatrix::zeros(rows, cols);
    let mut m = vec![0; merged.len()];
    for &v in t.data() {
        let (mut r, mut c) = (0, 0);
        for k in 0..merged.len() {
            r = r * out_shape[k] + m[k] % out_shape[k];
            c = c * in_shape[k] + m[k] / out_shape[k];
        }
        w.set(r, c, v);
        increment_index(&mut m, &merged);
    }
    Ok(w)
}

/// `Y = X·Wᵀ` for a batch `X` (`S × Π I`), contracting one core at a time.
pub fn tt_linear_forward(x: &DenseMatrix, layer: &TtLinearLayer) -> Result<DenseMatrix> {
    if x.cols() != layer.in_features() {
        return shape_err(format!(
            "TT layer takes {} inputs, got {}",
            layer.in_features(),
            x.cols()
        ));
    }
    // State layout: (outer, r, i_k, rest), outer = batch × finished output digits.
    let mut state = x.data().to_vec();
    let mut outer = x.rows();
    let mut rest = layer.in_features();
    for (k, core) in layer.cores.cores().iter().enumerate() {
        let (r0, r1) = (core.shape()[0], core.shape()[2]);
        let (ik, jk) = (layer.in_shape[k], layer.out_shape[k]);
        rest /= ik;
        // Core as a (r0·I_k) × (J_k·r1) matrix.
        let mut g = DenseMatrix::zeros(r0 * ik, jk * r1);
        for a in 0..r0 {
            for i in 0..ik {
                for j in 0..jk {
                    for b in 0..r1 {
                        g.set(a * ik + i, j * r1 + b, core.get(&[a, i * jk + j, b]));
                    }
                }
            }
        }
        let mut next = vec![0.0; outer * jk * r1 * rest];
        let mut gathered = vec![0.0; r0 * ik];
        for o in 0..outer {
            for t in 0..rest {
                for (p, slot) in gathered.iter_mut().enumerate() {
                    *slot = state[(o * r0 * ik + p) * rest + t];
                }
                for q in 0..jk * r1 {
                    let mut acc = 0.0;
                    for (p, &v) in gathered.iter().enumerate() {
                        acc += v * g.get(p, q);
                    }
                    next[(o * jk * r1 + q) * rest + t] = acc;
                }
            }
        }
        state = next;
        outer *= jk;
    }
    DenseMatrix::new(x.rows(), layer.out_features(), state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomp::tt_rank_bounds;
    use crate::seeded_rng;
    use rand::Rng;

    fn random_matrix(r: usize, c: usize, seed: u64) -> DenseMatrix {
        let mut rng = seeded_rng(seed);
        DenseMatrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn index_map_for_small_case() {
        let w = DenseMatrix::from_fn(4, 4, |r, c| (10 * r + c) as f64);
        let t = tensorize_matrix(&w, &[2, 2], &[2, 2]).unwrap();
        assert_eq!(t.shape(), &[4, 4]);
        // Row r = (j1, j2), column c = (i1, i2), entry at (i1·2 + j1, i2·2 + j2).
        for r in 0..4 {
            for c in 0..4 {
                let (j1, j2, i1, i2) = (r / 2, r % 2, c / 2, c % 2);
                assert_eq!(t.get(&[i1 * 2 + j1, i2 * 2 + j2]), w.get(r, c));
            }
        }
        assert_eq!(detensorize_matrix(&t, &[2, 2], &[2, 2]).unwrap(), w);
    }

    #[test]
    fn roundtrip_and_errors() {
        let w = random_matrix(6, 12, 1);
        let t = tensorize_matrix(&w, &[3, 2, 2], &[1, 3, 2]).unwrap();
        assert_eq!(t.shape(), &[3, 6, 4]);
        assert_eq!(detensorize_matrix(&t, &[3, 2, 2], &[1, 3, 2]).unwrap(), w);
        assert!(tensorize_matrix(&w, &[3, 4], &[2, 2]).is_err());
        assert!(tensorize_matrix(&w, &[12], &[2, 3]).is_err());
    }

    #[test]
    fn full_rank_forward_matches_dense() {
        let (ins, outs) = ([2, 3, 2], [3, 2, 2]);
        let w = random_matrix(12, 12, 2);
        let merged: Vec<usize> = ins.iter().zip(&outs).map(|(i, j)| i * j).collect();
        let layer =
            TtLinearLayer::from_matrix(&w, &ins, &outs, &TtTruncation::MaxRanks(tt_rank_bounds(&merged))).unwrap();
        let x = random_matrix(5, 12, 3);
        let y = tt_linear_forward(&x, &layer).unwrap();
        let dense = x.matmul(&w.transpose()).unwrap();
        assert!(y.max_abs_diff(&dense) <= 1e-8 * dense.frobenius());
        assert!(layer.to_matrix().max_abs_diff(&w) < 1e-10);
    }

    #[test]
    fn identity_passes_input_through() {
        let w = DenseMatrix::identity(8);
        let layer = TtLinearLayer::from_matrix(&w, &[2, 2, 2], &[2, 2, 2], &TtTruncation::MaxRanks(vec![4, 4])).unwrap();
        let x = random_matrix(3, 8, 4);
        assert!(tt_linear_forward(&x, &layer).unwrap().max_abs_diff(&x) < 1e-12);
    }

    #[test]
    fn compression_count() {
        let shape = [4, 4, 4, 4, 4];
        assert_eq!(tt_linear_param_count(&shape, &shape, &[8, 8, 8, 8]), 3328);
        assert_eq!(1024 * 1024, 1_048_576);
    }
}
