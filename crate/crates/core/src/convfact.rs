//! Multichannel convolution and its factorized pipelines.
//!
//! All convolutions are cross-correlations with stride 1 and "valid" extent: a mode of size `D`
//! filtered by a kernel of size `K` yields `D − K + 1` outputs. Inputs are `C × D_1 × … × D_N`
//! (channels first) and kernels `T × C × K_1 × … × K_N`.

use crate::decomp::{cp_als, tucker_hooi, DecompOptions, KruskalTensor, TuckerTensor};
use crate::error::{shape_err, Error, Result};
use crate::tensor::{increment_index, mode_n_conv1d, mode_n_product, DenseMatrix, DenseTensor};

/// Dense 2-D kernel `T × C × H × W`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvKernel4 {
    tensor: DenseTensor,
}

impl ConvKernel4 {
    pub fn new(tensor: DenseTensor) -> Result<Self> {
        if tensor.order() != 4 {
            return shape_err(format!(
                "a 2-D convolution kernel is T×C×H×W, got shape {:?}",
                tensor.shape()
            ));
        }
        Ok(Self { tensor })
    }

    pub fn tensor(&self) -> &DenseTensor {
        &self.tensor
    }

    pub fn into_tensor(self) -> DenseTensor {
        self.tensor
    }

    /// `(T, C, H, W)`.
    pub fn dims(&self) -> (usize, usize, usize, usize) {
        let s = self.tensor.shape();
        (s[0], s[1], s[2], s[3])
    }

    pub fn param_count(&self) -> usize {
        self.tensor.len()
    }
}

/// Kernel factorization family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConvForm {
    Kruskal,
    Tucker,
    Separable,
}

impl ConvForm {
    pub fn name(self) -> &'static str {
        match self {
            ConvForm::Kruskal => "kruskal",
            ConvForm::Tucker => "tucker",
            ConvForm::Separable => "separable",
        }
    }
}

/// A factorized kernel together with the pipeline that applies it.
///
/// * `Kruskal`: order-4 CP model with factors `U_T, U_C, U_H, U_W` and weights `λ`.
/// * `Tucker`: order-4 Tucker model with factors `U_T, U_C, U_H, U_W`.
/// * `Separable`: CP model of order `N + 2` with factors `U_T, U_C, U_{K_1}, …, U_{K_N}`.
#[derive(Debug, Clone, PartialEq)]
pub enum FactorizedConvKernel {
    Kruskal(KruskalTensor),
    Tucker(TuckerTensor),
    Separable(KruskalTensor),
}

impl FactorizedConvKernel {
    pub fn form(&self) -> ConvForm {
        match self {
            Self::Kruskal(_) => ConvForm::Kruskal,
            Self::Tucker(_) => ConvForm::Tucker,
            Self::Separable(_) => ConvForm::Separable,
        }
    }

    /// Dense kernel `T × C × K_1 × … × K_N`.
    pub fn reconstruct(&self) -> DenseTensor {
        match self {
            Self::Kruskal(k) | Self::Separable(k) => k.to_tensor(),
            Self::Tucker(t) => t.to_tensor(),
        }
    }

    pub fn kernel_shape(&self) -> Vec<usize> {
        match self {
            Self::Kruskal(k) | Self::Separable(k) => k.shape(),
            Self::Tucker(t) => t.shape(),
        }
    }

    pub fn param_count(&self) -> usize {
        match self {
            Self::Kruskal(k) | Self::Separable(k) => k.param_count(),
            Self::Tucker(t) => t.param_count(),
        }
    }

    /// Runs the factorized pipeline.
    pub fn apply(&self, x: &DenseTensor) -> Result<DenseTensor> {
        match self {
            Self::Kruskal(k) => kruskal_conv2d(x, k),
            Self::Tucker(t) => tucker_conv2d(x, t),
            Self::Separable(k) => separable_convnd(x, k),
        }
    }

    /// Multiplications performed by [`apply`](Self::apply) on an input of the given shape.
    pub fn multiply_count(&self, input_shape: &[usize]) -> Result<usize> {
        let kernel = self.kernel_shape();
        let out = valid_extent(input_shape, &kernel)?;
        Ok(match self {
            Self::Kruskal(k) | Self::Separable(k) => {
                let r = k.rank();
                // Channel contraction, one depthwise pass per spatial mode, channel expansion.
                let mut dims: Vec<usize> = input_shape[1..].to_vec();
                let mut total = r * input_shape[0] * dims.iter().product::<usize>();
                for (n, &kn) in kernel[2..].iter().enumerate() {
                    dims[n] = out[n + 1];
                    total += r * kn * dims.iter().product::<usize>();
                }
                total + kernel[0] * r * dims.iter().product::<usize>()
            }
            Self::Tucker(t) => {
                let ranks = t.ranks();
                let spatial_in: usize = input_shape[1..].iter().product();
                let spatial_out: usize = out[1..].iter().product();
                let window: usize = kernel[2..].iter().product();
                ranks[1] * input_shape[0] * spatial_in
                    + ranks[0] * ranks[1] * window * spatial_out
                    + kernel[0] * ranks[0] * spatial_out
            }
        })
    }
}

/// Multiplications of the direct convolution.
pub fn direct_multiply_count(kernel_shape: &[usize], input_shape: &[usize]) -> Result<usize> {
    let out = valid_extent(input_shape, kernel_shape)?;
    Ok(kernel_shape.iter().product::<usize>() * out[1..].iter().product::<usize>())
}

/// Output shape `T × (D_1 − K_1 + 1) × …`.
pub fn valid_extent(input_shape: &[usize], kernel_shape: &[usize]) -> Result<Vec<usize>> {
    if kernel_shape.len() < 3 || input_shape.len() + 1 != kernel_shape.len() {
        return shape_err(format!(
            "kernel {kernel_shape:?} does not match input {input_shape:?}"
        ));
    }
    if input_shape[0] != kernel_shape[1] {
        return shape_err(format!(
            "input has {} channels but the kernel expects {}",
            input_shape[0], kernel_shape[1]
        ));
    }
    let mut out = vec![kernel_shape[0]];
    for (&d, &k) in input_shape[1..].iter().zip(&kernel_shape[2..]) {
        if k > d {
            return shape_err(format!(
                "kernel extent {k} exceeds input extent {d}"
            ));
        }
        out.push(d - k + 1);
    }
    Ok(out)
}

/// Direct N-D multichannel cross-correlation.
pub fn convnd_direct(x: &DenseTensor, kernel: &DenseTensor) -> Result<DenseTensor> {
    let out_shape = valid_extent(x.shape(), kernel.shape())?;
    let (t_out, channels) = (kernel.shape()[0], kernel.shape()[1]);
    let window = &kernel.shape()[2..];
    let spatial_out = &out_shape[1..];
    let xs = x.strides();
    let out_len: usize = spatial_out.iter().product();
    let window_len: usize = window.iter().product();
    let mut out = DenseTensor::zeros(&out_shape);
    let data = out.data_mut();
    let mut offsets = vec![0usize; window_len];
    let mut k_idx = vec![0; window.len()];
    for off in offsets.iter_mut() {
        *off = k_idx.iter().zip(&xs[1..]).map(|(k, s)| k * s).sum();
        increment_index(&mut k_idx, window);
    }
    let mut bases = vec![0usize; out_len];
    let mut o_idx = vec![0; spatial_out.len()];
    for base in bases.iter_mut() {
        *base = o_idx.iter().zip(&xs[1..]).map(|(o, s)| o * s).sum();
        increment_index(&mut o_idx, spatial_out);
    }
    let kd = kernel.data();
    let xd = x.data();
    for t in 0..t_out {
        let dst = &mut data[t * out_len..(t + 1) * out_len];
        for c in 0..channels {
            let kbase = (t * channels + c) * window_len;
            let xc = c * xs[0];
            for (w, &off) in offsets.iter().enumerate() {
                let weight = kd[kbase + w];
                if weight == 0.0 {
                    continue;
                }
                for (d, &base) in dst.iter_mut().zip(&bases) {
                    *d += weight * xd[xc + base + off];
                }
            }
        }
    }
    Ok(out)
}

/// Direct 2-D multichannel cross-correlation of `C × H_in × W_in` input.
pub fn conv2d_direct(x: &DenseTensor, kernel: &ConvKernel4) -> Result<DenseTensor> {
    if x.order() != 3 {
        return shape_err(format!("2-D convolution expects C×H×W input, got {:?}", x.shape()));
    }
    convnd_direct(x, kernel.tensor())
}

/// `1×1` convolution: the channel-mode product with a `T × C` matrix.
pub fn conv1x1(x: &DenseTensor, w: &DenseMatrix) -> Result<DenseTensor> {
    mode_n_product(x, w, 0)
}

/// Channel `r` of `t` filtered along `mode` with column `r` of `kernels`.
fn depthwise_conv1d(t: &DenseTensor, kernels: &DenseMatrix, mode: usize) -> Result<DenseTensor> {
    let channels = t.shape()[0];
    if kernels.cols() != channels {
        return shape_err(format!(
            "{} depthwise kernels for {channels} channels",
            kernels.cols()
        ));
    }
    let slice_shape = &t.shape()[1..];
    let slice_len: usize = slice_shape.iter().product();
    let mut data = Vec::new();
    let mut out_slice_shape = Vec::new();
    for r in 0..channels {
        let slice = DenseTensor::new(
            slice_shape.to_vec(),
            t.data()[r * slice_len..(r + 1) * slice_len].to_vec(),
        )?;
        let filtered = mode_n_conv1d(&slice, &kernels.col(r), mode - 1)?;
        out_slice_shape = filtered.shape().to_vec();
        data.extend_from_slice(filtered.data());
    }
    let mut shape = vec![channels];
    shape.extend(out_slice_shape);
    DenseTensor::new(shape, data)
}

fn check_cp_kernel(k: &KruskalTensor, x: &DenseTensor) -> Result<()> {
    if k.order() != x.order() + 1 {
        return shape_err(format!(
            "order-{} kernel for order-{} input",
            k.order(),
            x.order()
        ));
    }
    valid_extent(x.shape(), &k.shape()).map(|_| ())
}

/// CP pipeline on `C × D_1 × … × D_N` input: contract channels with `U_Cᵀ`, filter each rank
/// channel along every spatial mode in turn, expand with `U_T·diag(λ)`.
pub fn separable_convnd(x: &DenseTensor, k: &KruskalTensor) -> Result<DenseTensor> {
    check_cp_kernel(k, x)?;
    let mut z = conv1x1(x, &k.factors[1].transpose())?;
    for (n, f) in k.factors[2..].iter().enumerate() {
        z = depthwise_conv1d(&z, f, n + 1)?;
    }
    conv1x1(&z, &k.factors[0].scale_columns(&k.weights))
}

/// CP pipeline for a `T × C × H × W` Kruskal kernel on `C × H × W` input.
pub fn kruskal_conv2d(x: &DenseTensor, k: &KruskalTensor) -> Result<DenseTensor> {
    if k.order() != 4 {
        return shape_err(format!("Kruskal 2-D kernel must be order 4, got {}", k.order()));
    }
    separable_convnd(x, k)
}

/// Tucker pipeline: `U_Cᵀ` channel contraction, a regular convolution from `R_2` to `R_1`
/// channels with the core absorbing the spatial factors, then `U_T`.
pub fn tucker_conv2d(x: &DenseTensor, t: &TuckerTensor) -> Result<DenseTensor> {
    if t.factors.len() != 4 || x.order() != 3 {
        return shape_err(format!(
            "Tucker 2-D pipeline needs an order-4 kernel and C×H×W input, got {:?} and {:?}",
            t.shape(),
            x.shape()
        ));
    }
    valid_extent(x.shape(), &t.shape())?;
    let mut h = t.core.clone();
    for n in 2..4 {
        h = mode_n_product(&h, &t.factors[n], n)?;
    }
    let z = conv1x1(x, &t.factors[1].transpose())?;
    let y = convnd_direct(&z, &h)?;
    conv1x1(&y, &t.factors[0])
}

/// Extends a separable kernel to one more spatial dimension.
pub fn transduce(k: &KruskalTensor, extra_factor: &DenseMatrix) -> Result<KruskalTensor> {
    if extra_factor.cols() != k.rank() {
        return Err(Error::InvalidRank(format!(
            "extra factor has {} columns but the kernel has rank {}",
            extra_factor.cols(),
            k.rank()
        )));
    }
    let mut factors = k.factors.clone();
    factors.push(extra_factor.clone());
    KruskalTensor::new(k.weights.clone(), factors)
}

/// Outcome of [`decompose_kernel`].
#[derive(Debug, Clone)]
pub struct DecomposedKernel {
    pub kernel: FactorizedConvKernel,
    /// `‖W − Ŵ‖ / ‖W‖`.
    pub relative_error: f64,
    pub params_before: usize,
    pub params_after: usize,
    /// Set when CP-ALS flagged the rank.
    pub warning: Option<String>,
}

/// Factorizes a dense kernel. `ranks` holds one CP rank for the Kruskal and separable forms and
/// four ranks `(R_T, R_C, R_H, R_W)` for Tucker.
pub fn decompose_kernel(
    w: &ConvKernel4,
    form: ConvForm,
    ranks: &[usize],
    opts: &DecompOptions,
) -> Result<DecomposedKernel> {
    let x = w.tensor();
    let (kernel, warning) = match form {
        ConvForm::Kruskal | ConvForm::Separable => {
            let [rank] = ranks else {
                return Err(Error::InvalidRank(format!("CP kernel takes one rank, got {ranks:?}")));
            };
            let res = cp_als(x, *rank, opts)?;
            let k = res.kruskal;
            let kernel = if form == ConvForm::Kruskal {
                FactorizedConvKernel::Kruskal(k)
            } else {
                FactorizedConvKernel::Separable(k)
            };
            (kernel, res.warning)
        }
        ConvForm::Tucker => (FactorizedConvKernel::Tucker(tucker_hooi(x, ranks, opts)?.tucker), None),
    };
    Ok(DecomposedKernel {
        relative_error: kernel.reconstruct().relative_error(x),
        params_before: w.param_count(),
        params_after: kernel.param_count(),
        kernel,
        warning,
    })
}
