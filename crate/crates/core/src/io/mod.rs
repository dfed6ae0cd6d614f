//! Tensor files and factorized-model directories.

mod manifest;
pub mod tnsr;

pub use manifest::{load_model, read_manifest, save_model, Manifest, Model, MANIFEST_FILE};
pub use tnsr::{read_tensor, write_tensor};
