//! TNSR: a minimal little-endian container for one dense tensor.
//!
//! ```text
//! offset  size      field
//! 0       4         magic "TNSR"
//! 4       2         version (u16) = 1
//! 6       2         reserved, zero
//! 8       8         order N (u64)
//! 16      8·N       mode sizes (u64 each)
//! 16+8N   8·ΠI_n    entries (f64), row-major
//! ```

use std::path::Path;

use crate::error::{Error, Result};
use crate::tensor::DenseTensor;

pub const MAGIC: &[u8; 4] = b"TNSR";
pub const VERSION: u16 = 1;
const HEADER: usize = 16;

fn format_err<T>(offset: usize, message: impl Into<String>) -> Result<T> {
    Err(Error::Format {
        offset,
        message: message.into(),
    })
}

pub fn encode(t: &DenseTensor) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER + 8 * (t.order() + t.len()));
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&[0, 0]);
    out.extend_from_slice(&(t.order() as u64).to_le_bytes());
    for &d in t.shape() {
        out.extend_from_slice(&(d as u64).to_le_bytes());
    }
    for &v in t.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

fn read_u64(bytes: &[u8], offset: usize) -> u64 {
    u64::from_le_bytes(bytes[offset..offset + 8].try_into().expect("8 bytes"))
}

pub fn decode(bytes: &[u8]) -> Result<DenseTensor> {
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        return format_err(0, "bad magic, expected \"TNSR\"");
    }
    if bytes.len() < HEADER {
        return format_err(
            bytes.len(),
            format!("header truncated: expected {HEADER} bytes, found {}", bytes.len()),
        );
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != VERSION {
        return format_err(4, format!("unsupported version {version}, expected {VERSION}"));
    }
    if bytes[6] != 0 || bytes[7] != 0 {
        return format_err(6, "reserved bytes must be zero");
    }
    let order = read_u64(bytes, 8);
    if order == 0 {
        return format_err(8, "order must be at least 1");
    }
    let shape_end = (order as usize)
        .checked_mul(8)
        .and_then(|n| n.checked_add(HEADER))
        .filter(|&end| end <= bytes.len());
    let Some(shape_end) = shape_end else {
        return format_err(
            HEADER,
            format!("shape truncated: order {order} needs {} bytes", order.saturating_mul(8)),
        );
    };
    let mut shape = Vec::with_capacity(order as usize);
    let mut count: usize = 1;
    for k in 0..order as usize {
        let offset = HEADER + 8 * k;
        let d = read_u64(bytes, offset);
        if d == 0 {
            return format_err(offset, format!("mode {k} has size 0"));
        }
        count = match usize::try_from(d).ok().and_then(|d| count.checked_mul(d)) {
            Some(c) => c,
            None => return format_err(offset, "tensor size overflows"),
        };
        shape.push(d as usize);
    }
    let payload = &bytes[shape_end..];
    let expected = count.checked_mul(8);
    if expected != Some(payload.len()) {
        return format_err(
            shape_end,
            format!(
                "payload length mismatch: expected {} bytes, found {}",
                expected.map_or_else(|| "too many".to_string(), |e| e.to_string()),
                payload.len()
            ),
        );
    }
    let data = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    DenseTensor::new(shape, data)
}

pub fn write_tensor(path: impl AsRef<Path>, t: &DenseTensor) -> Result<()> {
    std::fs::write(path, encode(t))?;
    Ok(())
}

pub fn read_tensor(path: impl AsRef<Path>) -> Result<DenseTensor> {
    decode(&std::fs::read(path)?)
}
