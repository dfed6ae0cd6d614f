use crate::error::{shape_err, Error, Result};
use crate::tensor::{khatri_rao, mode_n_product, DenseMatrix, DenseTensor};

/// CP (Kruskal) format: `Σ_r w_r · u_r^(1) ∘ … ∘ u_r^(N)`.
#[derive(Debug, Clone, PartialEq)]
pub struct KruskalTensor {
    pub weights: Vec<f64>,
    /// One `I_n × R` matrix per mode.
    pub factors: Vec<DenseMatrix>,
}

impl KruskalTensor {
    pub fn new(weights: Vec<f64>, factors: Vec<DenseMatrix>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::InvalidArgument("Kruskal tensor needs at least one factor".into()));
        }
        let r = weights.len();
        if let Some(f) = factors.iter().find(|f| f.cols() != r) {
            return shape_err(format!(
                "factor with {} columns does not match {r} weights",
                f.cols()
            ));
        }
        Ok(Self { weights, factors })
    }

    /// Unit weights.
    pub fn from_factors(factors: Vec<DenseMatrix>) -> Result<Self> {
        let r = factors.first().map_or(0, DenseMatrix::cols);
        Self::new(vec![1.0; r], factors)
    }

    pub fn rank(&self) -> usize {
        self.weights.len()
    }

    pub fn order(&self) -> usize {
        self.factors.len()
    }

    pub fn shape(&self) -> Vec<usize> {
        self.factors.iter().map(DenseMatrix::rows).collect()
    }

    pub fn param_count(&self) -> usize {
        self.rank() * self.shape().iter().sum::<usize>()
    }

    /// Dense reconstruction.
    pub fn to_tensor(&self) -> DenseTensor {
        let shape = self.shape();
        let first = self.factors[0].scale_columns(&self.weights);
        let data = if self.order() == 1 {
            (0..first.rows()).map(|i| first.row(i).iter().sum()).collect()
        } else {
            let rest: Vec<&DenseMatrix> = self.factors[1..].iter().collect();
            let kr = khatri_rao(&rest).expect("consistent ranks");
            first.matmul(&kr.transpose()).expect("consistent ranks").into_data()
        };
        DenseTensor::new(shape, data).expect("consistent shape")
    }

    /// Moves column norms into the weights; zero columns get weight zero.
    pub fn normalized(&self) -> Self {
        let mut weights = self.weights.clone();
        let mut factors = self.factors.clone();
        for f in factors.iter_mut() {
            let norms = f.column_norms();
            for (r, &n) in norms.iter().enumerate() {
                if n > 0.0 {
                    weights[r] *= n;
                    let col: Vec<f64> = f.col(r).iter().map(|x| x / n).collect();
                    f.set_col(r, &col);
                } else {
                    weights[r] = 0.0;
                }
            }
        }
        for (r, w) in weights.iter_mut().enumerate() {
            if *w < 0.0 {
                *w = -*w;
                let last = factors.last_mut().expect("at least one factor");
                let col: Vec<f64> = last.col(r).iter().map(|x| -x).collect();
                last.set_col(r, &col);
            }
        }
        Self { weights, factors }
    }
}

/// Tucker format: `G ×_1 U^(1) ×_2 … ×_N U^(N)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TuckerTensor {
    pub core: DenseTensor,
    /// One `I_n × R_n` matrix per mode.
    pub factors: Vec<DenseMatrix>,
}

impl TuckerTensor {
    pub fn new(core: DenseTensor, factors: Vec<DenseMatrix>) -> Result<Self> {
        if factors.len() != core.order() {
            return shape_err(format!(
                "order-{} core needs {} factors, got {}",
                core.order(),
                core.order(),
                factors.len()
            ));
        }
        for (n, f) in factors.iter().enumerate() {
            if f.cols() != core.shape()[n] {
                return shape_err(format!(
                    "factor {n} has {} columns but core mode {n} has size {}",
                    f.cols(),
                    core.shape()[n]
                ));
            }
        }
        Ok(Self { core, factors })
    }

    pub fn ranks(&self) -> Vec<usize> {
        self.core.shape().to_vec()
    }

    pub fn shape(&self) -> Vec<usize> {
        self.factors.iter().map(DenseMatrix::rows).collect()
    }

    pub fn param_count(&self) -> usize {
        self.core.len() + self.factors.iter().map(|f| f.rows() * f.cols()).sum::<usize>()
    }

    pub fn to_tensor(&self) -> DenseTensor {
        let mut acc = self.core.clone();
        for (n, f) in self.factors.iter().enumerate() {
            acc = mode_n_product(&acc, f, n).expect("consistent Tucker factors");
        }
        acc
    }
}

/// Tensor-train format: cores `G_k` of shape `R_k × I_k × R_{k+1}` with `R_1 = R_{N+1} = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct TtTensor {
    cores: Vec<DenseTensor>,
}

impl TtTensor {
    pub fn new(cores: Vec<DenseTensor>) -> Result<Self> {
        if cores.is_empty() {
            return Err(Error::InvalidArgument("tensor train needs at least one core".into()));
        }
        if let Some(c) = cores.iter().find(|c| c.order() != 3) {
            return shape_err(format!("TT cores must be third order, got {:?}", c.shape()));
        }
        if cores[0].shape()[0] != 1 || cores[cores.len() - 1].shape()[2] != 1 {
            return Err(Error::InvalidRank("TT boundary ranks must be 1".into()));
        }
        for w in cores.windows(2) {
            if w[0].shape()[2] != w[1].shape()[0] {
                return Err(Error::InvalidRank(format!(
                    "TT chain broken: {:?} followed by {:?}",
                    w[0].shape(),
                    w[1].shape()
                )));
            }
        }
        Ok(Self { cores })
    }

    pub fn cores(&self) -> &[DenseTensor] {
        &self.cores
    }

    pub fn into_cores(self) -> Vec<DenseTensor> {
        self.cores
    }

    /// `[R_1, …, R_{N+1}]`, boundaries included.
    pub fn ranks(&self) -> Vec<usize> {
        let mut r: Vec<usize> = self.cores.iter().map(|c| c.shape()[0]).collect();
        r.push(1);
        r
    }

    pub fn shape(&self) -> Vec<usize> {
        self.cores.iter().map(|c| c.shape()[1]).collect()
    }

    pub fn param_count(&self) -> usize {
        self.cores.iter().map(DenseTensor::len).sum()
    }

    pub fn to_tensor(&self) -> DenseTensor {
        let first = &self.cores[0];
        let mut acc =
            DenseMatrix::new(first.shape()[1], first.shape()[2], first.data().to_vec()).expect("core");
        for core in &self.cores[1..] {
            let (r, i, r_next) = (core.shape()[0], core.shape()[1], core.shape()[2]);
            let g = DenseMatrix::new(r, i * r_next, core.data().to_vec()).expect("core");
            let prod = acc.matmul(&g).expect("chain");
            acc = DenseMatrix::new(prod.rows() * i, r_next, prod.into_data()).expect("reshape");
        }
        DenseTensor::new(self.shape(), acc.into_data()).expect("consistent shape")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeded_rng;
    use crate::tensor::outer;
    use rand::Rng;

    fn random_matrix(r: usize, c: usize, rng: &mut crate::Rng) -> DenseMatrix {
        DenseMatrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn rank_one_kruskal() {
        let k = KruskalTensor::from_factors(vec![
            DenseMatrix::column(&[1.0, 2.0]),
            DenseMatrix::column(&[3.0, 4.0]),
        ])
        .unwrap();
        let t = k.to_tensor();
        assert_eq!(t, outer(&[&[1.0, 2.0], &[3.0, 4.0]]).unwrap());
        assert_eq!(t.data(), &[3.0, 4.0, 6.0, 8.0]);
    }

    #[test]
    fn kruskal_matches_sum_of_outer_products() {
        let mut rng = seeded_rng(3);
        let factors: Vec<DenseMatrix> = [3, 4, 2].iter().map(|&i| random_matrix(i, 3, &mut rng)).collect();
        let weights = vec![0.5, -1.5, 2.0];
        let k = KruskalTensor::new(weights.clone(), factors.clone()).unwrap();
        let mut brute = DenseTensor::zeros(&[3, 4, 2]);
        for r in 0..3 {
            let cols: Vec<Vec<f64>> = factors.iter().map(|f| f.col(r)).collect();
            let refs: Vec<&[f64]> = cols.iter().map(Vec::as_slice).collect();
            brute = brute.add(&outer(&refs).unwrap().scale(weights[r])).unwrap();
        }
        assert!(k.to_tensor().max_abs_diff(&brute) < 1e-14);
        let n = k.normalized();
        assert!(n.to_tensor().max_abs_diff(&brute) < 1e-14);
        assert!(n.weights.iter().all(|&w| w >= 0.0));
        for f in &n.factors {
            assert!(f.column_norms().iter().all(|c| (c - 1.0).abs() < 1e-14));
        }
        let single = KruskalTensor::new(vec![2.0], vec![DenseMatrix::column(&[1.0, 3.0])]).unwrap();
        assert_eq!(single.to_tensor().data(), &[2.0, 6.0]);
        assert!(KruskalTensor::new(vec![1.0], vec![random_matrix(2, 2, &mut rng)]).is_err());
    }

    #[test]
    fn tucker_identity_factors_give_core() {
        let mut rng = seeded_rng(5);
        let core = DenseTensor::from_fn(&[2, 3, 2], |_| rng.random_range(-1.0..1.0));
        let factors = core.shape().iter().map(|&r| DenseMatrix::identity(r)).collect();
        let t = TuckerTensor::new(core.clone(), factors).unwrap();
        assert_eq!(t.to_tensor(), core);
        assert!(TuckerTensor::new(core.clone(), vec![DenseMatrix::identity(2)]).is_err());
        assert!(TuckerTensor::new(
            core,
            vec![DenseMatrix::identity(2), DenseMatrix::identity(2), DenseMatrix::identity(2)]
        )
        .is_err());
    }

    #[test]
    fn tt_reconstruction_matches_core_products() {
        let mut rng = seeded_rng(9);
        let shapes = [[1, 2, 3], [3, 4, 2], [2, 3, 1]];
        let cores: Vec<DenseTensor> = shapes
            .iter()
            .map(|s| DenseTensor::from_fn(s, |_| rng.random_range(-1.0..1.0)))
            .collect();
        let tt = TtTensor::new(cores.clone()).unwrap();
        assert_eq!(tt.ranks(), vec![1, 3, 2, 1]);
        let full = tt.to_tensor();
        assert_eq!(full.shape(), &[2, 4, 3]);
        for i in 0..2 {
            for j in 0..4 {
                for k in 0..3 {
                    let mut v = vec![0.0; 3];
                    for b in 0..3 {
                        v[b] = cores[0].get(&[0, i, b]);
                    }
                    let mut w = vec![0.0; 2];
                    for c in 0..2 {
                        w[c] = (0..3).map(|b| v[b] * cores[1].get(&[b, j, c])).sum();
                    }
                    let x: f64 = (0..2).map(|c| w[c] * cores[2].get(&[c, k, 0])).sum();
                    assert!((full.get(&[i, j, k]) - x).abs() < 1e-14);
                }
            }
        }
        assert!(TtTensor::new(vec![cores[1].clone()]).is_err());
        assert!(TtTensor::new(vec![cores[0].clone(), cores[2].clone()]).is_err());
    }
}
