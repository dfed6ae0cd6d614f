use crate::error::{shape_err, Result};
use crate::tensor::{mode_n_product, DenseMatrix, DenseTensor};

/// Tensor contraction layer: one `R_n × I_n` factor per non-batch mode.
#[derive(Debug, Clone, PartialEq)]
pub struct TclLayer {
    pub factors: Vec<DenseMatrix>,
}

impl TclLayer {
    pub fn new(factors: Vec<DenseMatrix>) -> Result<Self> {
        if factors.is_empty() {
            return shape_err("TCL needs at least one factor");
        }
        Ok(Self { factors })
    }

    pub fn random(in_shape: &[usize], ranks: &[usize], rng: &mut crate::Rng) -> Result<Self> {
        if in_shape.len() != ranks.len() {
            return shape_err(format!("{} ranks for input shape {in_shape:?}", ranks.len()));
        }
        let factors = in_shape
            .iter()
            .zip(ranks)
            .map(|(&i, &r)| super::uniform_matrix(r, i, 1.0 / (i as f64).sqrt(), rng))
            .collect();
        Self::new(factors)
    }

    pub fn input_shape(&self) -> Vec<usize> {
        self.factors.iter().map(DenseMatrix::cols).collect()
    }

    pub fn output_shape(&self) -> Vec<usize> {
        self.factors.iter().map(DenseMatrix::rows).collect()
    }

    pub fn param_count(&self) -> usize {
        tcl_param_count(&self.input_shape(), &self.output_shape())
    }
}

/// `Σ_n I_n·R_n`.
pub fn tcl_param_count(in_shape: &[usize], ranks: &[usize]) -> usize {
    in_shape.iter().zip(ranks).map(|(i, r)| i * r).sum()
}

/// Parameters of the equivalent dense layer, `Π I_n · Π R_n`.
pub fn tcl_dense_param_count(in_shape: &[usize], ranks: &[usize]) -> usize {
    in_shape.iter().product::<usize>() * ranks.iter().product::<usize>()
}

/// `X ×_1 V^(1) ×_2 … ×_N V^(N)` on a batch `S × I_1 × … × I_N`.
pub fn tcl_forward(x: &DenseTensor, layer: &TclLayer) -> Result<DenseTensor> {
    if x.order() != layer.factors.len() + 1 || x.shape()[1..] != layer.input_shape()[..] {
        return shape_err(format!(
            "TCL expects batch × {:?}, got {:?}",
            layer.input_shape(),
            x.shape()
        ));
    }
    let mut acc = x.clone();
    for (n, v) in layer.factors.iter().enumerate() {
        acc = mode_n_product(&acc, v, n + 1)?;
    }
    Ok(acc)
}
