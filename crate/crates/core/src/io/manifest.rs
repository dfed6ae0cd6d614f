//! Factorized models on disk: a directory holding `manifest.json` and one TNSR file per factor,
//! core or vector.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::tnsr::{read_tensor, write_tensor};
use crate::convfact::FactorizedConvKernel;
use crate::decomp::{KruskalTensor, MpcaResult, TtTensor, TuckerTensor};
use crate::error::{Error, Result};
use crate::nn::{PolyNet, TclLayer, TrlLayer, TtLinearLayer};
use crate::tensor::{DenseMatrix, DenseTensor};

pub const MANIFEST_FILE: &str = "manifest.json";

/// Contents of `manifest.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    /// `kruskal`, `tucker`, `tt`, `mpca`, `tcl` or `polynet`.
    pub format: String,
    /// Refines the format: `trl`, `tt-linear`, `conv-kruskal`, `conv-tucker`, `conv-separable`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tag: Option<String>,
    /// Mode sizes of the represented tensor.
    pub shape: Vec<usize>,
    pub ranks: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
    /// TNSR files in this directory, in the order the format defines.
    pub tensors: Vec<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub meta: BTreeMap<String, Value>,
}

/// Anything that can be stored as a manifest directory.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Kruskal(KruskalTensor),
    Tucker(TuckerTensor),
    Tt(TtTensor),
    Mpca(MpcaResult),
    ConvKernel(FactorizedConvKernel),
    Tcl(TclLayer),
    Trl(TrlLayer),
    TtLinear(TtLinearLayer),
    PolyNet(PolyNet),
}

fn matrix_tensor(m: &DenseMatrix) -> DenseTensor {
    DenseTensor::from_matrix(m)
}

fn vector_tensor(v: &[f64]) -> Result<DenseTensor> {
    DenseTensor::from_vec(v.to_vec())
}

fn named(prefix: &str, items: impl IntoIterator<Item = DenseTensor>) -> Vec<(String, DenseTensor)> {
    items
        .into_iter()
        .enumerate()
        .map(|(i, t)| (format!("{prefix}_{i}.tnsr"), t))
        .collect()
}

struct Layout {
    manifest: Manifest,
    files: Vec<(String, DenseTensor)>,
}

fn layout(model: &Model) -> Result<Layout> {
    let manifest = |format: &str, tag: Option<&str>, shape: Vec<usize>, ranks: Vec<usize>| Manifest {
        format: format.to_string(),
        tag: tag.map(str::to_string),
        shape,
        ranks,
        weights: None,
        tensors: Vec::new(),
        meta: BTreeMap::new(),
    };
    let kruskal = |k: &KruskalTensor, tag: Option<&str>| {
        let mut m = manifest("kruskal", tag, k.shape(), vec![k.rank()]);
        m.weights = Some(k.weights.clone());
        Layout {
            manifest: m,
            files: named("factor", k.factors.iter().map(matrix_tensor)),
        }
    };
    let tucker = |t: &TuckerTensor, tag: Option<&str>| {
        let mut files = vec![("core.tnsr".to_string(), t.core.clone())];
        files.extend(named("factor", t.factors.iter().map(matrix_tensor)));
        Layout {
            manifest: manifest("tucker", tag, t.shape(), t.ranks()),
            files,
        }
    };
    let tt = |t: &TtTensor, tag: Option<&str>| Layout {
        manifest: manifest("tt", tag, t.shape(), t.ranks()),
        files: named("core", t.cores().iter().cloned()),
    };
    Ok(match model {
        Model::Kruskal(k) => kruskal(k, None),
        Model::Tucker(t) => tucker(t, None),
        Model::Tt(t) => tt(t, None),
        Model::Mpca(r) => {
            let mut m = manifest(
                "mpca",
                None,
                {
                    let mut s: Vec<usize> = r.projections.iter().map(DenseMatrix::rows).collect();
                    s.push(r.cores.shape()[r.cores.order() - 1]);
                    s
                },
                r.projections.iter().map(DenseMatrix::cols).collect(),
            );
            m.meta.insert("captured_scatter".into(), r.captured_scatter().into());
            m.meta.insert("sweeps".into(), r.sweeps.into());
            m.meta.insert("converged".into(), r.converged.into());
            let mut files = named("projection", r.projections.iter().map(matrix_tensor));
            files.push(("cores.tnsr".into(), r.cores.clone()));
            Layout { manifest: m, files }
        }
        Model::ConvKernel(k) => match k {
            FactorizedConvKernel::Kruskal(c) => kruskal(c, Some("conv-kruskal")),
            FactorizedConvKernel::Separable(c) => kruskal(c, Some("conv-separable")),
            FactorizedConvKernel::Tucker(t) => tucker(t, Some("conv-tucker")),
        },
        Model::Tcl(l) => Layout {
            manifest: manifest("tcl", None, l.input_shape(), l.output_shape()),
            files: named("factor", l.factors.iter().map(matrix_tensor)),
        },
        Model::Trl(l) => {
            let mut out = tucker(&l.weight, Some("trl"));
            out.files.push(("bias.tnsr".into(), vector_tensor(&l.bias)?));
            out
        }
        Model::TtLinear(l) => {
            let mut out = tt(l.cores(), Some("tt-linear"));
            out.manifest.meta.insert("in_shape".into(), serde_json::to_value(l.in_shape())?);
            out.manifest.meta.insert("out_shape".into(), serde_json::to_value(l.out_shape())?);
            out
        }
        Model::PolyNet(p) => {
            let mut files = named("factor", p.factors.iter().map(matrix_tensor));
            files.push(("c.tnsr".into(), matrix_tensor(&p.c)));
            files.push(("beta.tnsr".into(), vector_tensor(&p.beta)?));
            Layout {
                manifest: manifest(
                    "polynet",
                    None,
                    vec![p.input_dim(), p.output_dim()],
                    vec![p.c.cols(); p.order()],
                ),
                files,
            }
        }
    })
}

/// Writes `model` into `dir` (created if needed) and returns the manifest written.
pub fn save_model(dir: impl AsRef<Path>, model: &Model, meta: BTreeMap<String, Value>) -> Result<Manifest> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let Layout { mut manifest, files } = layout(model)?;
    manifest.meta.extend(meta);
    for (name, t) in &files {
        write_tensor(dir.join(name), t)?;
        manifest.tensors.push(name.clone());
    }
    let mut json = serde_json::to_string_pretty(&manifest)?;
    json.push('\n');
    std::fs::write(dir.join(MANIFEST_FILE), json)?;
    Ok(manifest)
}

pub fn read_manifest(dir: impl AsRef<Path>) -> Result<Manifest> {
    let text = std::fs::read_to_string(dir.as_ref().join(MANIFEST_FILE))?;
    Ok(serde_json::from_str(&text)?)
}

fn manifest_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Manifest(msg.into()))
}

struct Reader<'a> {
    dir: &'a Path,
    names: std::slice::Iter<'a, String>,
}

impl Reader<'_> {
    fn tensor(&mut self) -> Result<DenseTensor> {
        let Some(name) = self.names.next() else {
            return manifest_err("manifest lists too few tensor files");
        };
        if name.contains(['/', '\\']) || name == ".." || name.is_empty() {
            return manifest_err(format!("tensor file name {name:?} must be a plain file name"));
        }
        read_tensor(self.dir.join(name))
    }

    fn matrix(&mut self) -> Result<DenseMatrix> {
        self.tensor()?.to_matrix()
    }

    fn vector(&mut self) -> Result<Vec<f64>> {
        let t = self.tensor()?;
        if t.order() != 1 {
            return manifest_err(format!("expected a vector, found shape {:?}", t.shape()));
        }
        Ok(t.into_data())
    }

    fn matrices(&mut self, n: usize) -> Result<Vec<DenseMatrix>> {
        (0..n).map(|_| self.matrix()).collect()
    }

    fn finish(self) -> Result<()> {
        if self.names.len() != 0 {
            return manifest_err("manifest lists more tensor files than the format uses");
        }
        Ok(())
    }
}

fn meta_shape(m: &Manifest, key: &str) -> Result<Vec<usize>> {
    match m.meta.get(key) {
        Some(v) => Ok(serde_json::from_value(v.clone())?),
        None => manifest_err(format!("missing meta field {key:?}")),
    }
}

/// Reads a model written by [`save_model`].
pub fn load_model(dir: impl AsRef<Path>) -> Result<Model> {
    let dir = dir.as_ref();
    let m = read_manifest(dir)?;
    let mut r = Reader {
        dir,
        names: m.tensors.iter(),
    };
    let order = m.shape.len();
    let model = match (m.format.as_str(), m.tag.as_deref()) {
        ("kruskal", tag) => {
            let Some(weights) = m.weights.clone() else {
                return manifest_err("kruskal manifest needs weights");
            };
            let k = KruskalTensor::new(weights, r.matrices(order)?)?;
            match tag {
                None => Model::Kruskal(k),
                Some("conv-kruskal") => Model::ConvKernel(FactorizedConvKernel::Kruskal(k)),
                Some("conv-separable") => Model::ConvKernel(FactorizedConvKernel::Separable(k)),
                Some(other) => return manifest_err(format!("unknown kruskal tag {other:?}")),
            }
        }
        ("tucker", tag) => {
            let core = r.tensor()?;
            let t = TuckerTensor::new(core, r.matrices(order)?)?;
            match tag {
                None => Model::Tucker(t),
                Some("conv-tucker") => Model::ConvKernel(FactorizedConvKernel::Tucker(t)),
                Some("trl") => Model::Trl(TrlLayer::new(t, r.vector()?)?),
                Some(other) => return manifest_err(format!("unknown tucker tag {other:?}")),
            }
        }
        ("tt", tag) => {
            let cores = (0..order).map(|_| r.tensor()).collect::<Result<Vec<_>>>()?;
            let t = TtTensor::new(cores)?;
            match tag {
                None => Model::Tt(t),
                Some("tt-linear") => Model::TtLinear(TtLinearLayer::new(
                    meta_shape(&m, "in_shape")?,
                    meta_shape(&m, "out_shape")?,
                    t,
                )?),
                Some(other) => return manifest_err(format!("unknown tt tag {other:?}")),
            }
        }
        ("mpca", None) => {
            let projections = r.matrices(order.saturating_sub(1))?;
            let cores = r.tensor()?;
            let scatter = m.meta.get("captured_scatter").and_then(Value::as_f64).unwrap_or(0.0);
            Model::Mpca(MpcaResult {
                projections,
                cores,
                scatter_history: vec![scatter],
                sweeps: m.meta.get("sweeps").and_then(Value::as_u64).unwrap_or(0) as usize,
                converged: m.meta.get("converged").and_then(Value::as_bool).unwrap_or(false),
            })
        }
        ("tcl", None) => Model::Tcl(TclLayer::new(r.matrices(order)?)?),
        ("polynet", None) => {
            let factors = r.matrices(m.ranks.len())?;
            let c = r.matrix()?;
            Model::PolyNet(PolyNet::new(factors, c, r.vector()?)?)
        }
        (format, tag) => return manifest_err(format!("unknown format {format:?} with tag {tag:?}")),
    };
    r.finish()?;
    Ok(model)
}
