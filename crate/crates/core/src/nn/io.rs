//! Weights file: versioned header with the architecture, then the parameter
//! block as little-endian 64-bit floats in traversal order.
//!
//! Layout (all integers little-endian u32 unless noted):
//!
//! ```text
//! bytes 0..8   magic "SITENAVN"
//! u32          format version (1)
//! u32          activation tag (0 = relu-hidden / linear-out)
//! u32          input_dim
//! u32          robot_dim
//! u32          embed layer count, then that many u32 sizes
//! u32          attn layer count, then that many u32 sizes
//! u32          value layer count, then that many u32 sizes
//! u64          parameter count
//! f64 * count  parameters (embed, attn, value; per layer weights then bias)
//! ```

use super::value::{NnError, ValueArch, ValueNetwork};
use crate::scalar::Real;
use std::path::Path;

const MAGIC: &[u8; 8] = b"SITENAVN";
const VERSION: u32 = 1;
const ACT_RELU: u32 = 0;

pub fn weights_to_bytes<F: Real>(net: &ValueNetwork<F>) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&ACT_RELU.to_le_bytes());
    out.extend_from_slice(&(net.arch.input_dim as u32).to_le_bytes());
    out.extend_from_slice(&(net.arch.robot_dim as u32).to_le_bytes());
    for dims in [
        &net.arch.embed_dims,
        &net.arch.attn_dims,
        &net.arch.value_dims,
    ] {
        out.extend_from_slice(&(dims.len() as u32).to_le_bytes());
        for d in dims {
            out.extend_from_slice(&(*d as u32).to_le_bytes());
        }
    }
    out.extend_from_slice(&(net.param_count() as u64).to_le_bytes());
    net.visit_params(|_, p| {
        for v in p {
            out.extend_from_slice(&v.as_f64().to_le_bytes());
        }
    });
    out
}

pub fn save_weights<F: Real>(net: &ValueNetwork<F>, path: &Path) -> Result<(), NnError> {
    std::fs::write(path, weights_to_bytes(net))?;
    Ok(())
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], NnError> {
        if self.pos + n > self.bytes.len() {
            return Err(NnError::Format("file truncated".into()));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, NnError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64, NnError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f64(&mut self) -> Result<f64, NnError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

pub fn weights_from_bytes<F: Real>(bytes: &[u8]) -> Result<ValueNetwork<F>, NnError> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(8)? != MAGIC {
        return Err(NnError::Format("bad magic".into()));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(NnError::Format(format!(
            "unsupported weights version {version}"
        )));
    }
    let act = r.u32()?;
    if act != ACT_RELU {
        return Err(NnError::Format(format!("unknown activation tag {act}")));
    }
    let input_dim = r.u32()? as usize;
    let robot_dim = r.u32()? as usize;
    let mut read_dims = |r: &mut Reader| -> Result<Vec<usize>, NnError> {
        let n = r.u32()? as usize;
        if n > 64 {
            return Err(NnError::Format(format!("implausible layer count {n}")));
        }
        (0..n).map(|_| Ok(r.u32()? as usize)).collect()
    };
    let arch = ValueArch {
        input_dim,
        robot_dim,
        embed_dims: read_dims(&mut r)?,
        attn_dims: read_dims(&mut r)?,
        value_dims: read_dims(&mut r)?,
    };
    arch.validate()?;
    let mut net = ValueNetwork::zeros(arch)?;
    let count = r.u64()? as usize;
    if count != net.param_count() {
        return Err(NnError::Format(format!(
            "parameter count {count} does not match architecture ({})",
            net.param_count()
        )));
    }
    let mut err = None;
    net.visit_params_mut(|_, p| {
        if err.is_some() {
            return;
        }
        for v in p.iter_mut() {
            match r.f64() {
                Ok(x) => *v = F::from_f64(x),
                Err(e) => {
                    err = Some(e);
                    return;
                }
            }
        }
    });
    if let Some(e) = err {
        return Err(e);
    }
    if r.pos != bytes.len() {
        return Err(NnError::Format("trailing bytes after parameter block".into()));
    }
    Ok(net)
}

pub fn load_weights<F: Real>(path: &Path) -> Result<ValueNetwork<F>, NnError> {
    weights_from_bytes(&std::fs::read(path)?)
}

/// Load and require the given architecture.
pub fn load_weights_expecting<F: Real>(
    path: &Path,
    expected: &ValueArch,
) -> Result<ValueNetwork<F>, NnError> {
    let net = load_weights(path)?;
    if &net.arch != expected {
        return Err(NnError::ArchMismatch {
            file: net.arch.flat_dims(),
            expected: expected.flat_dims(),
        });
    }
    Ok(net)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::FEAT_DIM;
    use rand::Rng as _;

    fn arch() -> ValueArch {
        ValueArch {
            input_dim: FEAT_DIM,
            robot_dim: 5,
            embed_dims: vec![6, 4],
            attn_dims: vec![3, 1],
            value_dims: vec![5, 1],
        }
    }

    #[test]
    fn save_load_save_is_byte_identical() {
        let mut rng = crate::seeding::rng_from(11);
        let net: ValueNetwork<f64> = ValueNetwork::init(arch(), &mut rng).unwrap();
        let b1 = weights_to_bytes(&net);
        let back: ValueNetwork<f64> = weights_from_bytes(&b1).unwrap();
        assert_eq!(back, net);
        assert_eq!(weights_to_bytes(&back), b1);
    }

    #[test]
    fn forward_identical_after_roundtrip() {
        let mut rng = crate::seeding::rng_from(12);
        let net: ValueNetwork<f64> = ValueNetwork::init(arch(), &mut rng).unwrap();
        let back: ValueNetwork<f64> =
            weights_from_bytes(&weights_to_bytes(&net)).unwrap();
        for _ in 0..100 {
            let rows: Vec<Vec<f64>> = (0..1 + rng.gen_range(0..4))
                .map(|_| (0..FEAT_DIM).map(|_| rng.gen_range(-2.0..2.0)).collect())
                .collect();
            assert_eq!(net.evaluate(&rows).0, back.evaluate(&rows).0);
        }
    }

    #[test]
    fn corrupt_and_mismatched_files_error() {
        let mut rng = crate::seeding::rng_from(13);
        let net: ValueNetwork<f64> = ValueNetwork::init(arch(), &mut rng).unwrap();
        let bytes = weights_to_bytes(&net);
        // Truncated.
        assert!(weights_from_bytes::<f64>(&bytes[..bytes.len() - 3]).is_err());
        // Bad magic.
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(weights_from_bytes::<f64>(&bad).is_err());
        // Edited layer size: parameter count no longer matches.
        let mut resized = bytes.clone();
        // embed dim entries start after magic(8)+ver(4)+act(4)+in(4)+rob(4)+count(4)
        resized[28] = 7;
        assert!(weights_from_bytes::<f64>(&resized).is_err());
        // Architecture mismatch against an explicit expectation.
        let other = ValueArch {
            embed_dims: vec![9, 4],
            ..arch()
        };
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("w.bin");
        save_weights(&net, &p).unwrap();
        let err = load_weights_expecting::<f64>(&p, &other).unwrap_err();
        assert!(matches!(err, NnError::ArchMismatch { .. }));
        assert!(load_weights_expecting::<f64>(&p, &arch()).is_ok());
    }
}
