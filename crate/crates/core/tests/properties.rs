use proptest::prelude::*;
use rand::Rng;

use tensorkit::convfact::{conv1x1, convnd_direct, valid_extent};
use tensorkit::decomp::{cp_als, tt_svd, tucker_hosvd, DecompOptions, KruskalTensor, TtTruncation};
use tensorkit::linalg::{svd, svt};
use tensorkit::robust::{default_alpha, default_lambda, trpca, RpcaOptions};
use tensorkit::tensor::{fold, inner, khatri_rao, kronecker, mode_n_product, unfold};
use tensorkit::{seeded_rng, DenseMatrix, DenseTensor};

fn tensor(shape: &[usize], seed: u64) -> DenseTensor {
    let mut rng = seeded_rng(seed);
    DenseTensor::from_fn(shape, |_| rng.random_range(-1.0..1.0))
}

fn matrix(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
    let mut rng = seeded_rng(seed);
    DenseMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

fn shape(max_order: usize, max_dim: usize) -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(1..=max_dim, 1..=max_order)
}

fn shape_and_mode(max_order: usize, max_dim: usize) -> impl Strategy<Value = (Vec<usize>, usize)> {
    shape(max_order, max_dim).prop_flat_map(|s| {
        let n = s.len();
        (Just(s), 0..n)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn fold_inverts_unfold((s, n) in shape_and_mode(5, 5), seed in any::<u64>()) {
        let t = tensor(&s, seed);
        let m = unfold(&t, n).unwrap();
        prop_assert_eq!(m.rows(), s[n]);
        prop_assert_eq!(fold(&m, n, &s).unwrap(), t);
    }

    #[test]
    fn unfold_is_linear((s, n) in shape_and_mode(4, 5), seed in any::<u64>(), a in -3.0..3.0f64, b in -3.0..3.0f64) {
        let x = tensor(&s, seed);
        let y = tensor(&s, seed.wrapping_add(1));
        let combo = x.scale(a).add(&y.scale(b)).unwrap();
        let lhs = unfold(&combo, n).unwrap();
        let rhs = unfold(&x, n).unwrap().scale(a).add(&unfold(&y, n).unwrap().scale(b)).unwrap();
        prop_assert!(lhs.max_abs_diff(&rhs) <= 1e-12 * rhs.frobenius().max(1.0));
    }

    #[test]
    fn mode_product_matches_unfolded_matmul((s, n) in shape_and_mode(4, 5), j in 1..5usize, seed in any::<u64>()) {
        let t = tensor(&s, seed);
        let m = matrix(j, s[n], seed ^ 7);
        let lhs = unfold(&mode_n_product(&t, &m, n).unwrap(), n).unwrap();
        let rhs = m.matmul(&unfold(&t, n).unwrap()).unwrap();
        prop_assert!(lhs.max_abs_diff(&rhs) <= 1e-12 * m.frobenius() * t.frobenius());
    }

    #[test]
    fn distinct_mode_products_commute(s in prop::collection::vec(1..=5usize, 2..=4), seed in any::<u64>(), m in 0..4usize, dn in 1..4usize) {
        let m = m % s.len();
        let n = (m + dn) % s.len();
        prop_assume!(m != n);
        let t = tensor(&s, seed);
        let a = matrix(3, s[m], seed ^ 1);
        let b = matrix(2, s[n], seed ^ 2);
        let ab = mode_n_product(&mode_n_product(&t, &a, m).unwrap(), &b, n).unwrap();
        let ba = mode_n_product(&mode_n_product(&t, &b, n).unwrap(), &a, m).unwrap();
        prop_assert!(ab.max_abs_diff(&ba) <= 1e-12 * ab.frobenius().max(1e-300));
    }

    #[test]
    fn inner_self_is_squared_norm(s in shape(5, 5), seed in any::<u64>()) {
        let x = tensor(&s, seed);
        let f = x.frobenius();
        prop_assert!((inner(&x, &x).unwrap() - f * f).abs() <= 1e-12 * f * f);
    }

    #[test]
    fn khatri_rao_columns_are_kronecker_products(i in 1..6usize, j in 1..6usize, r in 1..5usize, seed in any::<u64>()) {
        let a = matrix(i, r, seed);
        let b = matrix(j, r, seed ^ 3);
        let kr = khatri_rao(&[&a, &b]).unwrap();
        for c in 0..r {
            let kc = kronecker(&DenseMatrix::column(&a.col(c)), &DenseMatrix::column(&b.col(c)));
            prop_assert_eq!(kr.col(c), kc.col(0));
        }
    }

    #[test]
    fn svd_invariants(rows in 1..=20usize, cols in 1..=20usize, rank in 1..=20usize, seed in any::<u64>()) {
        // Products of thin factors give rank-deficient inputs as well as full-rank ones.
        let a = matrix(rows, rank, seed).matmul(&matrix(rank, cols, seed ^ 5)).unwrap();
        let d = svd(&a).unwrap();
        prop_assert!(d.reconstruct().sub(&a).unwrap().frobenius() <= 1e-10 * a.frobenius());
        prop_assert!(d.s.windows(2).all(|w| w[0] >= w[1]));
        prop_assert!(d.s.iter().all(|&s| s >= 0.0));
        prop_assert!(d.u.orthonormality_error() <= 1e-10);
        prop_assert!(d.v.orthonormality_error() <= 1e-10);
        for c in 0..d.u.cols() {
            let col = d.u.col(c);
            let argmax = (0..col.len()).fold(0, |best, i| if col[i].abs() > col[best].abs() { i } else { best });
            prop_assert!(col[argmax] >= 0.0);
        }
        let again = svd(&a).unwrap();
        prop_assert_eq!(again.u, d.u);
        prop_assert_eq!(again.s, d.s);
        prop_assert_eq!(again.v, d.v);
    }

    #[test]
    fn valid_extent_arithmetic(t in 1..4usize, c in 1..4usize, dims in prop::collection::vec((1..8usize, 1..8usize), 1..4)) {
        let mut input = vec![c];
        input.extend(dims.iter().map(|&(k, extra)| k + extra - 1));
        let mut kernel = vec![t, c];
        kernel.extend(dims.iter().map(|&(k, _)| k));
        let out = valid_extent(&input, &kernel).unwrap();
        let mut expected = vec![t];
        expected.extend(input[1..].iter().zip(&kernel[2..]).map(|(d, k)| d - k + 1));
        prop_assert_eq!(out, expected);
        let mut too_big = kernel.clone();
        too_big[2] = input[1] + 1;
        prop_assert!(valid_extent(&input, &too_big).is_err());
    }

    #[test]
    fn conv1x1_is_a_channel_mode_product(c in 1..5usize, t in 1..5usize, h in 1..5usize, w in 1..5usize, seed in any::<u64>()) {
        let x = tensor(&[c, h, w], seed);
        let m = matrix(t, c, seed ^ 9);
        prop_assert_eq!(conv1x1(&x, &m).unwrap(), mode_n_product(&x, &m, 0).unwrap());
    }

    #[test]
    fn direct_conv_output_extent(c in 1..3usize, k in 1..4usize, extra in 1..4usize, seed in any::<u64>()) {
        let x = tensor(&[c, k + extra - 1, k + extra], seed);
        let kernel = tensor(&[2, c, k, k], seed ^ 4);
        let y = convnd_direct(&x, &kernel).unwrap();
        prop_assert_eq!(y.shape(), &[2, extra, extra + 1][..]);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn hosvd_error_bounded_by_discarded_energy(s in prop::collection::vec(2..=6usize, 2..=4), cut in 0..3usize, seed in any::<u64>()) {
        let x = tensor(&s, seed);
        let ranks: Vec<usize> = s.iter().map(|&i| i.saturating_sub(cut).max(1)).collect();
        let t = tucker_hosvd(&x, &ranks).unwrap();
        for f in &t.factors {
            prop_assert!(f.orthonormality_error() <= 1e-10);
        }
        let mut discarded = 0.0;
        for (n, &r) in ranks.iter().enumerate() {
            discarded += svd(&unfold(&x, n).unwrap()).unwrap().s.iter().skip(r).map(|v| v * v).sum::<f64>();
        }
        let err = x.sub(&t.to_tensor()).unwrap().frobenius();
        prop_assert!(err * err <= discarded * (1.0 + 1e-10) + 1e-20);
    }

    #[test]
    fn cp_fit_never_decreases(s in prop::collection::vec(2..=6usize, 3), rank in 1..4usize, seed in any::<u64>()) {
        let x = tensor(&s, seed);
        let opts = DecompOptions { max_iters: 60, seed, ..DecompOptions::default() };
        let res = cp_als(&x, rank, &opts).unwrap();
        for w in res.fit_history.windows(2) {
            prop_assert!(w[1] >= w[0] - 1e-12, "fit dropped {} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn tt_cores_chain(s in prop::collection::vec(1..=5usize, 1..=5), eps in 0.0..0.5f64, seed in any::<u64>()) {
        let x = tensor(&s, seed);
        let tt = tt_svd(&x, &TtTruncation::Tolerance(eps)).unwrap();
        let cores = tt.cores();
        prop_assert_eq!(cores.len(), s.len());
        prop_assert_eq!(cores[0].shape()[0], 1);
        prop_assert_eq!(cores[cores.len() - 1].shape()[2], 1);
        for (k, g) in cores.iter().enumerate() {
            prop_assert_eq!(g.order(), 3);
            prop_assert_eq!(g.shape()[1], s[k]);
        }
        for w in cores.windows(2) {
            prop_assert_eq!(w[0].shape()[2], w[1].shape()[0]);
        }
        prop_assert!(tt.to_tensor().relative_error(&x) <= eps + 1e-12);
    }

    #[test]
    fn decompositions_are_deterministic(seed in any::<u64>()) {
        let x = tensor(&[4, 3, 5], seed);
        let opts = DecompOptions { seed, max_iters: 30, ..DecompOptions::default() };
        prop_assert_eq!(cp_als(&x, 2, &opts).unwrap().kruskal, cp_als(&x, 2, &opts).unwrap().kruskal);
        prop_assert_eq!(tucker_hosvd(&x, &[2, 2, 2]).unwrap(), tucker_hosvd(&x, &[2, 2, 2]).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn trpca_returns_feasible_split(s in prop::collection::vec(3..=6usize, 2..=3), seed in any::<u64>()) {
        let x = tensor(&s, seed);
        let res = trpca(&x, default_lambda(&s), &default_alpha(s.len()), &RpcaOptions::default()).unwrap();
        prop_assert!(res.feasibility(&x) <= 1e-6, "feasibility {}", res.feasibility(&x));
    }
}

/// `½‖X − A‖² + τ‖X‖_*` for a 2×2 `X`, with the nuclear norm from the closed-form singular values.
fn svt_objective(x: &DenseMatrix, a: &DenseMatrix, tau: f64) -> f64 {
    let (p, q, r, s) = (x.get(0, 0), x.get(0, 1), x.get(1, 0), x.get(1, 1));
    let fro2 = p * p + q * q + r * r + s * s;
    let det = (p * s - q * r).abs();
    // σ1 + σ2 = sqrt(‖X‖² + 2|det X|)
    let nuclear = (fro2 + 2.0 * det).sqrt();
    let d = x.sub(a).unwrap().frobenius();
    0.5 * d * d + tau * nuclear
}

#[test]
fn svt_minimizes_its_objective_on_2x2() {
    let mut rng = seeded_rng(99);
    for trial in 0..50 {
        let a = matrix(2, 2, trial);
        let tau = rng.random_range(0.05..1.5);
        let x = svt(&a, tau).unwrap();
        let best = svt_objective(&x, &a, tau);
        // Grid of perturbations around the candidate, plus random far-away points.
        let step = 0.05;
        for i in -2i32..=2 {
            for j in -2i32..=2 {
                for k in -2i32..=2 {
                    for l in -2i32..=2 {
                        let d = DenseMatrix::from_rows(&[
                            [i as f64 * step, j as f64 * step],
                            [k as f64 * step, l as f64 * step],
                        ]);
                        let y = x.add(&d).unwrap();
                        assert!(svt_objective(&y, &a, tau) >= best - 1e-12, "trial {trial}");
                    }
                }
            }
        }
        for _ in 0..200 {
            let y = DenseMatrix::from_fn(2, 2, |_, _| rng.random_range(-2.0..2.0));
            assert!(svt_objective(&y, &a, tau) >= best - 1e-12);
        }
    }
}

#[test]
fn kruskal_weights_scale_reconstruction() {
    let mut rng = seeded_rng(4);
    let factors: Vec<DenseMatrix> = [3, 4, 2]
        .iter()
        .map(|&i| DenseMatrix::from_fn(i, 2, |_, _| rng.random_range(-1.0..1.0)))
        .collect();
    let unit = KruskalTensor::from_factors(factors.clone()).unwrap().to_tensor();
    let doubled = KruskalTensor::new(vec![2.0, 2.0], factors).unwrap().to_tensor();
    assert!(doubled.max_abs_diff(&unit.scale(2.0)) < 1e-14);
}
