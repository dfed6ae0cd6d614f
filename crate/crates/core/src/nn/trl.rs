use crate::decomp::TuckerTensor;
use crate::error::{shape_err, Result};
use crate::tensor::{fold, unfold, DenseMatrix, DenseTensor};

/// Tensor regression layer: `y = ⟨X, W⟩ + b` with a Tucker-structured weight over the input
/// modes plus a trailing output mode of size `d`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrlLayer {
    /// Core `R_1 × … × R_N × R_{N+1}`; factors `I_n × R_n`, the last one `d × R_{N+1}`.
    pub weight: TuckerTensor,
    pub bias: Vec<f64>,
}

/// Gradients of a loss with respect to every [`TrlLayer`] parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct TrlGrad {
    pub core: DenseTensor,
    /// Same layout as `weight.factors`.
    pub factors: Vec<DenseMatrix>,
    pub bias: Vec<f64>,
}

impl TrlLayer {
    pub fn new(weight: TuckerTensor, bias: Vec<f64>) -> Result<Self> {
        let d = weight.factors.last().map_or(0, DenseMatrix::rows);
        if weight.factors.len() < 2 {
            return shape_err("TRL weight needs at least one input mode and the output mode");
        }
        if bias.len() != d {
            return shape_err(format!("bias of length {} for {d} outputs", bias.len()));
        }
        Ok(Self { weight, bias })
    }

    /// Uniformly initialised layer; `ranks` has one entry per input mode plus one for the output.
    pub fn random(in_shape: &[usize], ranks: &[usize], outputs: usize, rng: &mut crate::Rng) -> Result<Self> {
        if ranks.len() != in_shape.len() + 1 {
            return shape_err(format!(
                "TRL over {in_shape:?} needs {} ranks, got {ranks:?}",
                in_shape.len() + 1
            ));
        }
        use rand::Rng;
        let core = DenseTensor::from_fn(ranks, |_| rng.random_range(-1.0..1.0));
        let mut factors: Vec<DenseMatrix> = in_shape
            .iter()
            .zip(ranks)
            .map(|(&i, &r)| super::uniform_matrix(i, r, 1.0 / (i as f64).sqrt(), rng))
            .collect();
        factors.push(super::uniform_matrix(outputs, ranks[in_shape.len()], 1.0, rng));
        Self::new(TuckerTensor::new(core, factors)?, vec![0.0; outputs])
    }

    pub fn input_shape(&self) -> Vec<usize> {
        let s = self.weight.shape();
        s[..s.len() - 1].to_vec()
    }

    pub fn outputs(&self) -> usize {
        self.bias.len()
    }

    /// `n_TRL`: core plus factors, bias excluded.
    pub fn param_count(&self) -> usize {
        self.weight.param_count()
    }

    fn check_input(&self, x: &DenseTensor) -> Result<()> {
        if x.order() < 2 || x.shape()[1..] != self.input_shape()[..] {
            return shape_err(format!(
                "TRL expects batch × {:?}, got {:?}",
                self.input_shape(),
                x.shape()
            ));
        }
        Ok(())
    }
}

/// `Π R_n + Σ_{n≤N} I_n·R_n + R_{N+1}·d`.
pub fn trl_param_count(in_shape: &[usize], ranks: &[usize], outputs: usize) -> usize {
    let n = in_shape.len();
    ranks.iter().product::<usize>()
        + in_shape.iter().zip(ranks).map(|(i, r)| i * r).sum::<usize>()
        + ranks[n] * outputs
}

/// Parameters of a fully connected layer from the flattened input to `d` outputs (bias excluded).
pub fn fc_param_count(in_shape: &[usize], outputs: usize) -> usize {
    in_shape.iter().product::<usize>() * outputs
}

/// Intermediate values shared by the forward pass and the gradient.
struct Forward {
    /// Batch projected onto the input factors, `S × Π R_n` (flattened).
    z: DenseMatrix,
    /// Core unfolded along the output rank, `R_{N+1} × Π R_n`.
    g_last: DenseMatrix,
    /// `z · g_lastᵀ`, `S × R_{N+1}`.
    h: DenseMatrix,
    /// Projection shape `S × R_1 × … × R_N`.
    z_shape: Vec<usize>,
}

fn forward_parts(x: &DenseTensor, layer: &TrlLayer) -> Result<Forward> {
    layer.check_input(x)?;
    let n = layer.input_shape().len();
    let factors = &layer.weight.factors;
    let mut proj = x.clone();
    for (k, u) in factors[..n].iter().enumerate() {
        proj = crate::tensor::mode_n_product(&proj, &u.transpose(), k + 1)?;
    }
    let z_shape = proj.shape().to_vec();
    let s = z_shape[0];
    let z = DenseMatrix::new(s, proj.len() / s, proj.into_data())?;
    let g_last = unfold(&layer.weight.core, n)?;
    let h = z.matmul(&g_last.transpose())?;
    Ok(Forward { z, g_last, h, z_shape })
}

/// Factorized forward pass; never forms the full weight tensor.
pub fn trl_forward(x: &DenseTensor, layer: &TrlLayer) -> Result<DenseMatrix> {
    let f = forward_parts(x, layer)?;
    let out = f.h.matmul(&layer.weight.factors[layer.weight.factors.len() - 1].transpose())?;
    Ok(add_bias(out, &layer.bias))
}

/// Reference forward pass through the reconstructed weight tensor.
pub fn trl_forward_dense(x: &DenseTensor, layer: &TrlLayer) -> Result<DenseMatrix> {
    layer.check_input(x)?;
    let w = layer.weight.to_tensor();
    let d = layer.outputs();
    let wm = DenseMatrix::new(w.len() / d, d, w.into_data())?;
    let s = x.shape()[0];
    let xm = DenseMatrix::new(s, x.len() / s, x.data().to_vec())?;
    Ok(add_bias(xm.matmul(&wm)?, &layer.bias))
}

fn add_bias(mut out: DenseMatrix, bias: &[f64]) -> DenseMatrix {
    for i in 0..out.rows() {
        out.row_mut(i).iter_mut().zip(bias).for_each(|(o, b)| *o += b);
    }
    out
}

/// Gradients given `upstream = ∂loss/∂Y` (`S × d`).
pub fn trl_grad(x: &DenseTensor, layer: &TrlLayer, upstream: &DenseMatrix) -> Result<TrlGrad> {
    let f = forward_parts(x, layer)?;
    let n = layer.input_shape().len();
    let factors = &layer.weight.factors;
    let u_out = &factors[n];
    if upstream.dims() != (f.h.rows(), u_out.rows()) {
        return shape_err(format!(
            "upstream gradient is {:?}, expected {:?}",
            upstream.dims(),
            (f.h.rows(), u_out.rows())
        ));
    }
    let bias = (0..upstream.cols()).map(|j| upstream.col(j).iter().sum()).collect();
    let d_out = upstream.t_matmul(&f.h)?;
    let dh = upstream.matmul(u_out)?;
    let dg_last = dh.t_matmul(&f.z)?;
    let core = fold(&dg_last, n, layer.weight.core.shape())?;
    let dz = DenseTensor::new(f.z_shape.clone(), dh.matmul(&f.g_last)?.into_data())?;

    let mut grads = Vec::with_capacity(n + 1);
    for k in 0..n {
        let mut partial = x.clone();
        for (j, u) in factors[..n].iter().enumerate() {
            if j != k {
                partial = crate::tensor::mode_n_product(&partial, &u.transpose(), j + 1)?;
            }
        }
        let pk = unfold(&partial, k + 1)?;
        let dzk = unfold(&dz, k + 1)?;
        grads.push(pk.matmul(&dzk.transpose())?);
    }
    grads.push(d_out);
    Ok(TrlGrad {
        core,
        factors: grads,
        bias,
    })
}
