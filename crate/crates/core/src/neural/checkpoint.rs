//! Binary checkpoint container. Layout (all integers little-endian):
//!
//! ```text
//! magic      4 bytes  "PNCK"
//! version    u32      currently 1
//! meta_len   u64
//! meta       meta_len bytes of UTF-8 JSON
//! count      u32      number of tensors
//! per tensor:
//!   name_len u32, name (UTF-8)
//!   rank     u32      always 2
//!   rows     u64, cols u64
//!   values   rows*cols f64 little-endian
//! ```

use std::io::{Read, Write};
use std::path::Path;

use super::{NeuralError, ParamStore, Tensor};

pub const MAGIC: &[u8; 4] = b"PNCK";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub metadata: serde_json::Value,
    pub tensors: Vec<(String, Tensor)>,
}

impl Checkpoint {
    pub fn from_params(metadata: serde_json::Value, params: &ParamStore) -> Self {
        let tensors = params
            .iter()
            .map(|(n, t)| (n.to_string(), t.clone()))
            .collect();
        Self { metadata, tensors }
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<(), NeuralError> {
        let meta = serde_json::to_vec(&self.metadata)
            .map_err(|e| NeuralError::Checkpoint(e.to_string()))?;
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&(meta.len() as u64).to_le_bytes())?;
        w.write_all(&meta)?;
        w.write_all(&(self.tensors.len() as u32).to_le_bytes())?;
        for (name, t) in &self.tensors {
            w.write_all(&(name.len() as u32).to_le_bytes())?;
            w.write_all(name.as_bytes())?;
            w.write_all(&2u32.to_le_bytes())?;
            w.write_all(&(t.rows() as u64).to_le_bytes())?;
            w.write_all(&(t.cols() as u64).to_le_bytes())?;
            let mut buf = Vec::with_capacity(t.len() * 8);
            for v in t.data() {
                buf.extend_from_slice(&v.to_le_bytes());
            }
            w.write_all(&buf)?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self, NeuralError> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(NeuralError::Checkpoint(
                "not a checkpoint file (bad magic)".into(),
            ));
        }
        let version = read_u32(&mut r)?;
        if version != VERSION {
            return Err(NeuralError::Checkpoint(format!(
                "unsupported checkpoint version {version}"
            )));
        }
        let meta_len = read_u64(&mut r)? as usize;
        let meta = read_bytes(&mut r, meta_len)?;
        let metadata = serde_json::from_slice(&meta)
            .map_err(|e| NeuralError::Checkpoint(format!("metadata: {e}")))?;
        let count = read_u32(&mut r)? as usize;
        let mut tensors = Vec::with_capacity(count);
        for _ in 0..count {
            let len = read_u32(&mut r)? as usize;
            let name = String::from_utf8(read_bytes(&mut r, len)?)
                .map_err(|_| NeuralError::Checkpoint("tensor name is not UTF-8".into()))?;
            let rank = read_u32(&mut r)?;
            if rank != 2 {
                return Err(NeuralError::Checkpoint(format!(
                    "tensor {name}: rank {rank} unsupported"
                )));
            }
            let rows = read_u64(&mut r)? as usize;
            let cols = read_u64(&mut r)? as usize;
            let n = rows
                .checked_mul(cols)
                .filter(|n| *n <= 1 << 28)
                .ok_or_else(|| {
                    NeuralError::Checkpoint(format!(
                        "tensor {name}: implausible shape {rows}x{cols}"
                    ))
                })?;
            let raw = read_bytes(&mut r, n * 8)?;
            let data = raw
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect();
            tensors.push((name, Tensor::new(rows, cols, data)));
        }
        Ok(Self { metadata, tensors })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), NeuralError> {
        let file = std::fs::File::create(path)?;
        let mut w = std::io::BufWriter::new(file);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, NeuralError> {
        let file = std::fs::File::open(path)?;
        Self::read_from(std::io::BufReader::new(file))
    }

    pub fn tensor_map(&self) -> std::collections::BTreeMap<String, Tensor> {
        self.tensors.iter().cloned().collect()
    }
}

fn read_bytes<R: Read>(r: &mut R, n: usize) -> Result<Vec<u8>, NeuralError> {
    let mut buf = Vec::new();
    r.take(n as u64).read_to_end(&mut buf)?;
    if buf.len() != n {
        return Err(NeuralError::Checkpoint("truncated checkpoint".into()));
    }
    Ok(buf)
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32, NeuralError> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64, NeuralError> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_exact() {
        let ck = Checkpoint {
            metadata: serde_json::json!({"topology": "toy", "d": 16}),
            tensors: vec![
                (
                    "a".into(),
                    Tensor::new(1, 3, vec![0.1, -0.0, f64::MIN_POSITIVE]),
                ),
                ("b".into(), Tensor::new(2, 1, vec![1e300, -7.25])),
            ],
        };
        let mut buf = Vec::new();
        ck.write_to(&mut buf).unwrap();
        let back = Checkpoint::read_from(buf.as_slice()).unwrap();
        assert_eq!(back.metadata, ck.metadata);
        for ((na, ta), (nb, tb)) in ck.tensors.iter().zip(&back.tensors) {
            assert_eq!(na, nb);
            let bits = |t: &Tensor| t.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
            assert_eq!(bits(ta), bits(tb));
        }
        let mut again = Vec::new();
        back.write_to(&mut again).unwrap();
        assert_eq!(buf, again);
    }

    #[test]
    fn rejects_garbage_and_truncation() {
        assert!(Checkpoint::read_from(&b"NOPE0000"[..]).is_err());
        let ck = Checkpoint {
            metadata: serde_json::json!({}),
            tensors: vec![("x".into(), Tensor::zeros(2, 2))],
        };
        let mut buf = Vec::new();
        ck.write_to(&mut buf).unwrap();
        buf.truncate(buf.len() - 3);
        assert!(Checkpoint::read_from(buf.as_slice()).is_err());
    }
}
