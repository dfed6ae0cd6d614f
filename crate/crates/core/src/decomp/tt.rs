use super::TtTensor;
use crate::error::{Error, Result};
use crate::linalg::svd;
use crate::tensor::{DenseMatrix, DenseTensor};

/// How [`tt_svd`] chooses the internal ranks.
#[derive(Debug, Clone, PartialEq)]
pub enum TtTruncation {
    /// Upper bounds on the `N − 1` internal ranks `R_2 … R_N`.
    MaxRanks(Vec<usize>),
    /// Relative error target `ε`: the result satisfies `‖X − X̂‖ ≤ ε‖X‖`.
    Tolerance(f64),
}

/// Largest useful internal ranks: `min(Π_{j≤k} I_j, Π_{j>k} I_j)`.
pub fn tt_rank_bounds(shape: &[usize]) -> Vec<usize> {
    (1..shape.len())
        .map(|k| {
            let left: usize = shape[..k].iter().product();
            let right: usize = shape[k..].iter().product();
            left.min(right)
        })
        .collect()
}

/// TT-SVD: left-to-right sequence of truncated SVDs.
///
/// With a tolerance, every step discards at most `ε‖X‖/√(N−1)` of Frobenius energy, so the
/// accumulated error stays within `ε‖X‖`.
pub fn tt_svd(x: &DenseTensor, truncation: &TtTruncation) -> Result<TtTensor> {
    let shape = x.shape().to_vec();
    let order = shape.len();
    let bounds = tt_rank_bounds(&shape);
    let per_step_budget = match truncation {
        TtTruncation::MaxRanks(ranks) => {
            if ranks.len() != order - 1 {
                return Err(Error::InvalidRank(format!(
                    "an order-{order} tensor train has {} internal ranks, got {ranks:?}",
                    order - 1
                )));
            }
            for (k, (&r, &b)) in ranks.iter().zip(&bounds).enumerate() {
                if r == 0 || r > b {
                    return Err(Error::InvalidRank(format!(
                        "TT rank {r} at position {} outside feasible range 1..={b}",
                        k + 1
                    )));
                }
            }
            None
        }
        TtTruncation::Tolerance(eps) => {
            if !(*eps > 0.0) || !eps.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "TT tolerance must be positive, got {eps}"
                )));
            }
            let steps = (order.max(2) - 1) as f64;
            Some(eps * x.frobenius() / steps.sqrt())
        }
    };

    let mut cores = Vec::with_capacity(order);
    let mut rank = 1;
    let mut rest = x.data().to_vec();
    for k in 0..order - 1 {
        let rows = rank * shape[k];
        let cols = rest.len() / rows;
        let c = DenseMatrix::new(rows, cols, rest)?;
        let d = svd(&c)?;
        let available = d.s.len();
        let keep = match (&per_step_budget, truncation) {
            (Some(delta), _) => rank_for_budget(&d.s, *delta),
            (None, TtTruncation::MaxRanks(ranks)) => ranks[k].min(available),
            _ => unreachable!(),
        };
        let d = d.truncate(keep);
        cores.push(DenseTensor::new(vec![rank, shape[k], keep], d.u.into_data())?);
        // Remainder diag(s)·Vᵀ, keep × cols.
        let mut next = d.v.transpose();
        for (i, &s) in d.s.iter().enumerate() {
            next.row_mut(i).iter_mut().for_each(|x| *x *= s);
        }
        rest = next.into_data();
        rank = keep;
    }
    cores.push(DenseTensor::new(vec![rank, shape[order - 1], 1], rest)?);
    TtTensor::new(cores)
}

/// Smallest rank whose discarded tail energy is within `delta²`.
fn rank_for_budget(s: &[f64], delta: f64) -> usize {
    let budget = delta * delta;
    let mut tail = 0.0;
    let mut keep = s.len();
    while keep > 1 {
        let next = tail + s[keep - 1] * s[keep - 1];
        if next > budget {
            break;
        }
        tail = next;
        keep -= 1;
    }
    keep
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeded_rng;
    use rand::Rng;

    fn random_tensor(shape: &[usize], seed: u64) -> DenseTensor {
        let mut rng = seeded_rng(seed);
        DenseTensor::from_fn(shape, |_| rng.random_range(-1.0..1.0))
    }

    fn random_tt(shape: &[usize], ranks: &[usize], seed: u64) -> TtTensor {
        let mut rng = seeded_rng(seed);
        let cores = shape
            .iter()
            .enumerate()
            .map(|(k, &i)| DenseTensor::from_fn(&[ranks[k], i, ranks[k + 1]], |_| rng.random_range(-1.0..1.0)))
            .collect();
        TtTensor::new(cores).unwrap()
    }

    #[test]
    fn full_ranks_are_exact() {
        let x = random_tensor(&[3, 4, 2, 3], 1);
        let bounds = tt_rank_bounds(x.shape());
        assert_eq!(bounds, vec![3, 6, 3]);
        let tt = tt_svd(&x, &TtTruncation::MaxRanks(bounds)).unwrap();
        assert!(tt.to_tensor().relative_error(&x) < 1e-10);
        let m = random_tensor(&[2, 2], 2);
        let tt = tt_svd(&m, &TtTruncation::MaxRanks(vec![2])).unwrap();
        assert!(tt.to_tensor().max_abs_diff(&m) < 1e-12);
    }

    #[test]
    fn recovers_constructed_train() {
        let x = random_tt(&[2, 2, 2], &[1, 2, 2, 1], 3).to_tensor();
        let tt = tt_svd(&x, &TtTruncation::MaxRanks(vec![2, 2])).unwrap();
        assert!(tt.to_tensor().relative_error(&x) < 1e-8);
        let x = random_tt(&[4, 5, 3, 4], &[1, 2, 3, 2, 1], 4).to_tensor();
        let tt = tt_svd(&x, &TtTruncation::Tolerance(1e-10)).unwrap();
        assert_eq!(tt.ranks(), vec![1, 2, 3, 2, 1]);
        assert!(tt.to_tensor().relative_error(&x) < 1e-8);
    }

    #[test]
    fn tolerance_is_respected() {
        for (seed, eps) in [(5, 0.1), (6, 0.2), (7, 0.05), (8, 0.5)] {
            let x = random_tensor(&[4, 3, 5, 2], seed);
            let tt = tt_svd(&x, &TtTruncation::Tolerance(eps)).unwrap();
            assert!(tt.to_tensor().relative_error(&x) <= eps);
        }
    }

    #[test]
    fn chain_invariants_and_errors() {
        let x = random_tensor(&[3, 3, 3], 9);
        let tt = tt_svd(&x, &TtTruncation::MaxRanks(vec![2, 2])).unwrap();
        let r = tt.ranks();
        assert_eq!((r[0], r[3]), (1, 1));
        assert!(tt_svd(&x, &TtTruncation::MaxRanks(vec![2])).is_err());
        assert!(tt_svd(&x, &TtTruncation::MaxRanks(vec![4, 2])).is_err());
        assert!(tt_svd(&x, &TtTruncation::MaxRanks(vec![0, 2])).is_err());
        assert!(tt_svd(&x, &TtTruncation::Tolerance(0.0)).is_err());
        let v = random_tensor(&[5], 1);
        let tt = tt_svd(&v, &TtTruncation::Tolerance(0.1)).unwrap();
        assert_eq!(tt.to_tensor(), v);
    }

    #[test]
    fn zero_tensor() {
        let z = DenseTensor::zeros(&[2, 3, 2]);
        let tt = tt_svd(&z, &TtTruncation::Tolerance(0.1)).unwrap();
        assert_eq!(tt.ranks(), vec![1, 1, 1, 1]);
        assert_eq!(tt.to_tensor(), z);
    }
}
