use crate::error::{shape_err, Result};
use crate::tensor::DenseMatrix;

/// Degree-`N` polynomial network with shared rank-`k` factors.
///
/// `x_1 = U_1ᵀz`, `x_n = (U_nᵀz) ∗ x_{n−1} + x_{n−1}`, output `C·x_N + β`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyNet {
    /// `N` matrices of size `d × k`.
    pub factors: Vec<DenseMatrix>,
    /// `o × k`.
    pub c: DenseMatrix,
    pub beta: Vec<f64>,
}

/// Gradients of a loss with respect to every [`PolyNet`] parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyNetGrad {
    pub factors: Vec<DenseMatrix>,
    pub c: DenseMatrix,
    pub beta: Vec<f64>,
}

impl PolyNet {
    pub fn new(factors: Vec<DenseMatrix>, c: DenseMatrix, beta: Vec<f64>) -> Result<Self> {
        let Some(first) = factors.first() else {
            return shape_err("polynomial network needs at least one factor");
        };
        let (d, k) = first.dims();
        if factors.iter().any(|u| u.dims() != (d, k)) {
            return shape_err("all factors must share the same d × k shape");
        }
        if c.cols() != k || beta.len() != c.rows() {
            return shape_err(format!(
                "C is {:?} and β has length {} for rank {k}",
                c.dims(),
                beta.len()
            ));
        }
        Ok(Self { factors, c, beta })
    }

    pub fn random(order: usize, input: usize, rank: usize, output: usize, rng: &mut crate::Rng) -> Result<Self> {
        let scale = 1.0 / (input as f64).sqrt();
        let factors = (0..order)
            .map(|_| super::uniform_matrix(input, rank, scale, rng))
            .collect();
        let c = super::uniform_matrix(output, rank, 1.0 / (rank as f64).sqrt(), rng);
        Self::new(factors, c, vec![0.0; output])
    }

    pub fn order(&self) -> usize {
        self.factors.len()
    }

    pub fn input_dim(&self) -> usize {
        self.factors[0].rows()
    }

    pub fn output_dim(&self) -> usize {
        self.beta.len()
    }

    pub fn param_count(&self) -> usize {
        self.factors.iter().map(|u| u.rows() * u.cols()).sum::<usize>()
            + self.c.rows() * self.c.cols()
            + self.beta.len()
    }

    /// `[U_1ᵀz, …, U_Nᵀz]` and `[x_1, …, x_N]`.
    fn hidden(&self, z: &[f64]) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
        if z.len() != self.input_dim() {
            return shape_err(format!(
                "network takes {} inputs, got {}",
                self.input_dim(),
                z.len()
            ));
        }
        let mut projections = Vec::with_capacity(self.order());
        let mut states: Vec<Vec<f64>> = Vec::with_capacity(self.order());
        for u in &self.factors {
            let a = u.transpose().matvec(z)?;
            let x = match states.last() {
                None => a.clone(),
                Some(prev) => a.iter().zip(prev).map(|(ai, xi)| ai * xi + xi).collect(),
            };
            projections.push(a);
            states.push(x);
        }
        Ok((projections, states))
    }
}

pub fn polynet_forward(z: &[f64], net: &PolyNet) -> Result<Vec<f64>> {
    let (_, states) = net.hidden(z)?;
    let mut out = net.c.matvec(states.last().expect("order ≥ 1"))?;
    out.iter_mut().zip(&net.beta).for_each(|(o, b)| *o += b);
    Ok(out)
}

/// Gradients given `upstream = ∂loss/∂output`.
pub fn polynet_grad(z: &[f64], net: &PolyNet, upstream: &[f64]) -> Result<PolyNetGrad> {
    if upstream.len() != net.output_dim() {
        return shape_err(format!(
            "upstream gradient has length {}, expected {}",
            upstream.len(),
            net.output_dim()
        ));
    }
    let (projections, states) = net.hidden(z)?;
    let order = net.order();
    let last = &states[order - 1];
    let c = DenseMatrix::from_fn(net.c.rows(), net.c.cols(), |i, j| upstream[i] * last[j]);
    let mut dx = net.c.transpose().matvec(upstream)?;
    let mut factors = Vec::with_capacity(order);
    for n in (0..order).rev() {
        let da: Vec<f64> = if n == 0 {
            dx.clone()
        } else {
            dx.iter().zip(&states[n - 1]).map(|(g, x)| g * x).collect()
        };
        factors.push(DenseMatrix::from_fn(z.len(), da.len(), |i, j| z[i] * da[j]));
        if n > 0 {
            dx = dx.iter().zip(&projections[n]).map(|(g, a)| g * (a + 1.0)).collect();
        }
    }
    factors.reverse();
    Ok(PolyNetGrad {
        factors,
        c,
        beta: upstream.to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeded_rng;
    use rand::Rng;

    #[test]
    fn order_one_is_affine() {
        let mut rng = seeded_rng(1);
        let mut net = PolyNet::random(1, 4, 3, 2, &mut rng).unwrap();
        net.beta = vec![0.5, -1.0];
        let z = [0.3, -0.2, 0.9, 1.1];
        let expected = net.c.matmul(&net.factors[0].transpose()).unwrap().matvec(&z).unwrap();
        let y = polynet_forward(&z, &net).unwrap();
        for i in 0..2 {
            assert!((y[i] - expected[i] - net.beta[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_input_gives_beta() {
        let mut rng = seeded_rng(2);
        let mut net = PolyNet::random(3, 4, 3, 2, &mut rng).unwrap();
        net.beta = vec![0.25, 4.0];
        assert_eq!(polynet_forward(&[0.0; 4], &net).unwrap(), net.beta);
    }

    #[test]
    fn cubic_along_a_ray() {
        let mut rng = seeded_rng(3);
        let net = PolyNet::random(3, 5, 4, 2, &mut rng).unwrap();
        let z: Vec<f64> = (0..5).map(|_| rng.random_range(-1.0..1.0)).collect();
        let eval = |t: f64| polynet_forward(&z.iter().map(|v| t * v).collect::<Vec<_>>(), &net).unwrap();
        let ts = [-1.0, -0.3, 0.4, 1.2];
        let held_out = 0.8;
        let truth = eval(held_out);
        for o in 0..2 {
            // Lagrange interpolation through the four samples.
            let mut pred = 0.0;
            for (i, &ti) in ts.iter().enumerate() {
                let mut basis = 1.0;
                for (j, &tj) in ts.iter().enumerate() {
                    if i != j {
                        basis *= (held_out - tj) / (ti - tj);
                    }
                }
                pred += basis * eval(ti)[o];
            }
            assert!((pred - truth[o]).abs() <= 1e-8 * truth[o].abs().max(1.0));
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = seeded_rng(4);
        let mut net = PolyNet::random(3, 4, 3, 2, &mut rng).unwrap();
        net.beta = vec![0.1, 0.2];
        let z: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
        let up = [0.7, -1.3];
        let loss = |n: &PolyNet| -> f64 {
            polynet_forward(&z, n).unwrap().iter().zip(&up).map(|(a, b)| a * b).sum()
        };
        let g = polynet_grad(&z, &net, &up).unwrap();
        let h = 1e-5;
        let mut analytic = Vec::new();
        let mut numeric = Vec::new();
        for n in 0..3 {
            for i in 0..net.factors[n].data().len() {
                let mut p = net.clone();
                p.factors[n].data_mut()[i] += h;
                let mut m = net.clone();
                m.factors[n].data_mut()[i] -= h;
                numeric.push((loss(&p) - loss(&m)) / (2.0 * h));
                analytic.push(g.factors[n].data()[i]);
            }
        }
        for i in 0..net.c.data().len() {
            let mut p = net.clone();
            p.c.data_mut()[i] += h;
            let mut m = net.clone();
            m.c.data_mut()[i] -= h;
            numeric.push((loss(&p) - loss(&m)) / (2.0 * h));
            analytic.push(g.c.data()[i]);
        }
        let diff: f64 = analytic.iter().zip(&numeric).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let norm: f64 = numeric.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(diff / norm < 1e-4);
        assert_eq!(g.beta, up.to_vec());
    }

    #[test]
    fn shape_errors() {
        let mut rng = seeded_rng(5);
        let net = PolyNet::random(2, 3, 2, 1, &mut rng).unwrap();
        assert!(polynet_forward(&[1.0, 2.0], &net).is_err());
        assert!(polynet_grad(&[1.0, 2.0, 3.0], &net, &[1.0, 2.0]).is_err());
        assert!(PolyNet::new(vec![], DenseMatrix::zeros(1, 1), vec![0.0]).is_err());
    }
}
