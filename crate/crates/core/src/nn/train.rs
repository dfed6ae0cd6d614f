use rand::seq::SliceRandom;

use super::{polynet_forward, polynet_grad, trl_forward, trl_grad, PolyNet, TrlLayer};
use crate::error::{shape_err, Error, Result};
use crate::tensor::{DenseMatrix, DenseTensor};

/// A model that plain SGD can train on squared loss.
pub trait SgdModel {
    type Input;

    fn predict(&self, input: &Self::Input) -> Result<Vec<f64>>;

    /// One step on `½‖f(input) − target‖²`; returns the residual `f(input) − target` seen
    /// before the update.
    fn sgd_step(&mut self, input: &Self::Input, target: &[f64], lr: f64) -> Result<Vec<f64>>;
}

fn axpy(dst: &mut [f64], src: &[f64], lr: f64) {
    dst.iter_mut().zip(src).for_each(|(d, s)| *d -= lr * s);
}

fn residual(pred: &[f64], target: &[f64]) -> Result<Vec<f64>> {
    if pred.len() != target.len() {
        return shape_err(format!("target of length {} for {} outputs", target.len(), pred.len()));
    }
    Ok(pred.iter().zip(target).map(|(p, t)| p - t).collect())
}

/// Trains on single samples without the batch mode.
impl SgdModel for TrlLayer {
    type Input = DenseTensor;

    fn predict(&self, input: &DenseTensor) -> Result<Vec<f64>> {
        Ok(trl_forward(&batch_of_one(input)?, self)?.into_data())
    }

    fn sgd_step(&mut self, input: &DenseTensor, target: &[f64], lr: f64) -> Result<Vec<f64>> {
        let x = batch_of_one(input)?;
        let r = residual(&trl_forward(&x, self)?.into_data(), target)?;
        let g = trl_grad(&x, self, &DenseMatrix::row_vector(&r))?;
        axpy(self.weight.core.data_mut(), g.core.data(), lr);
        for (f, df) in self.weight.factors.iter_mut().zip(&g.factors) {
            axpy(f.data_mut(), df.data(), lr);
        }
        axpy(&mut self.bias, &g.bias, lr);
        Ok(r)
    }
}

fn batch_of_one(x: &DenseTensor) -> Result<DenseTensor> {
    let mut shape = vec![1];
    shape.extend_from_slice(x.shape());
    x.reshape(&shape)
}

impl SgdModel for PolyNet {
    type Input = Vec<f64>;

    fn predict(&self, input: &Vec<f64>) -> Result<Vec<f64>> {
        polynet_forward(input, self)
    }

    fn sgd_step(&mut self, input: &Vec<f64>, target: &[f64], lr: f64) -> Result<Vec<f64>> {
        let r = residual(&polynet_forward(input, self)?, target)?;
        let g = polynet_grad(input, self, &r)?;
        for (f, df) in self.factors.iter_mut().zip(&g.factors) {
            axpy(f.data_mut(), df.data(), lr);
        }
        axpy(self.c.data_mut(), g.c.data(), lr);
        axpy(&mut self.beta, &g.beta, lr);
        Ok(r)
    }
}

/// Per-sample SGD with a seeded shuffle each epoch.
///
/// Returns the trained model and, for every epoch, the mean squared error over all outputs,
/// accumulated from the residuals seen during that epoch.
pub fn sgd_fit<M: SgdModel>(
    mut model: M,
    inputs: &[M::Input],
    targets: &[Vec<f64>],
    lr: f64,
    epochs: usize,
    seed: u64,
) -> Result<(M, Vec<f64>)> {
    if !(lr >= 0.0) || !lr.is_finite() {
        return Err(Error::InvalidArgument(format!("learning rate must be non-negative, got {lr}")));
    }
    if inputs.len() != targets.len() || inputs.is_empty() {
        return shape_err(format!(
            "{} inputs and {} targets",
            inputs.len(),
            targets.len()
        ));
    }
    let mut rng = crate::seeded_rng(seed);
    let mut order: Vec<usize> = (0..inputs.len()).collect();
    let mut trace = Vec::with_capacity(epochs);
    for _ in 0..epochs {
        order.shuffle(&mut rng);
        let (mut total, mut count) = (0.0, 0usize);
        for &i in &order {
            let r = model.sgd_step(&inputs[i], &targets[i], lr)?;
            total += r.iter().map(|v| v * v).sum::<f64>();
            count += r.len();
        }
        trace.push(total / count as f64);
    }
    Ok((model, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeded_rng;
    use rand::Rng;

    fn teacher_data(n: usize, seed: u64) -> (Vec<DenseTensor>, Vec<Vec<f64>>) {
        let mut rng = seeded_rng(seed);
        let teacher = TrlLayer::random(&[3, 4, 5], &[2, 2, 2, 2], 2, &mut rng).unwrap();
        let inputs: Vec<DenseTensor> = (0..n)
            .map(|_| DenseTensor::from_fn(&[3, 4, 5], |_| rng.random_range(-1.0..1.0)))
            .collect();
        let targets = inputs.iter().map(|x| teacher.predict(x).unwrap()).collect();
        (inputs, targets)
    }

    #[test]
    fn zero_learning_rate_keeps_parameters() {
        let (inputs, targets) = teacher_data(10, 1);
        let model = TrlLayer::random(&[3, 4, 5], &[2, 2, 2, 2], 2, &mut seeded_rng(2)).unwrap();
        let (trained, trace) = sgd_fit(model.clone(), &inputs, &targets, 0.0, 5, 0).unwrap();
        assert_eq!(trained, model);
        assert_eq!(trace.len(), 5);
    }

    #[test]
    fn learns_teacher() {
        let (inputs, targets) = teacher_data(100, 3);
        let model = TrlLayer::random(&[3, 4, 5], &[2, 2, 2, 2], 2, &mut seeded_rng(4)).unwrap();
        let (_, trace) = sgd_fit(model, &inputs, &targets, 0.05, 200, 7).unwrap();
        assert_eq!(trace.len(), 200);
        assert!(trace[0] / trace[199] >= 10.0, "loss {} -> {}", trace[0], trace[199]);
    }

    #[test]
    fn deterministic_and_polynet() {
        let mut rng = seeded_rng(5);
        let teacher = PolyNet::random(2, 3, 2, 1, &mut rng).unwrap();
        let inputs: Vec<Vec<f64>> = (0..30).map(|_| (0..3).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let targets: Vec<Vec<f64>> = inputs.iter().map(|z| teacher.predict(z).unwrap()).collect();
        let student = PolyNet::random(2, 3, 2, 1, &mut seeded_rng(6)).unwrap();
        let a = sgd_fit(student.clone(), &inputs, &targets, 0.05, 50, 1).unwrap();
        let b = sgd_fit(student, &inputs, &targets, 0.05, 50, 1).unwrap();
        assert_eq!(a.0, b.0);
        assert_eq!(a.1, b.1);
        assert!(a.1[49] < a.1[0]);
    }
}
