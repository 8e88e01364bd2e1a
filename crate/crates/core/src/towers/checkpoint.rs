//! `WLT1` model checkpoints, all integers little-endian:
//!
//! ```text
//! "WLT1" | u32 version
//! per tower (request, item): u32 in_dim | u32 layers | per layer: u32 out_dim, u8 activation
//! per tower, per layer: out_dim x in_dim f32 weights (row-major), out_dim f32 bias
//! u64 CRC-64/XZ of every byte after the version field
//! ```

use std::path::Path;

use crc::{Crc, CRC_64_XZ};

use super::{Activation, Dense, Tower, TowerError, TwoTower};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"WLT1";
pub const CHECKPOINT_VERSION: u32 = 1;

const CRC64: Crc<u64> = Crc::<u64>::new(&CRC_64_XZ);

fn err(m: impl Into<String>) -> TowerError {
    TowerError::Checkpoint(m.into())
}

impl TwoTower<f32> {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(16 + 4 * self.param_count());
        out.extend_from_slice(CHECKPOINT_MAGIC);
        out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        let towers = [self.request_tower(), self.item_tower()];
        for t in towers {
            out.extend_from_slice(&(t.in_dim() as u32).to_le_bytes());
            out.extend_from_slice(&(t.layers().len() as u32).to_le_bytes());
            for l in t.layers() {
                out.extend_from_slice(&(l.out_dim() as u32).to_le_bytes());
                out.push(l.activation().code());
            }
        }
        for t in towers {
            for v in t.params() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        let crc = CRC64.checksum(&out[8..]);
        out.extend_from_slice(&crc.to_le_bytes());
        out
    }

    pub fn from_bytes(buf: &[u8]) -> Result<Self, TowerError> {
        if buf.len() < 16 {
            return Err(err("truncated"));
        }
        if &buf[..4] != CHECKPOINT_MAGIC {
            return Err(err("bad magic"));
        }
        let version = u32::from_le_bytes(buf[4..8].try_into().expect("4 bytes"));
        if version != CHECKPOINT_VERSION {
            return Err(err(format!("unsupported version {version}")));
        }
        let (body, trailer) = buf.split_at(buf.len() - 8);
        let stored = u64::from_le_bytes(trailer.try_into().expect("8 bytes"));
        if CRC64.checksum(&body[8..]) != stored {
            return Err(err("checksum mismatch"));
        }

        let mut pos = 8;
        let mut take = |n: usize| -> Result<&[u8], TowerError> {
            let s = body.get(pos..pos + n).ok_or_else(|| err("truncated"))?;
            pos += n;
            Ok(s)
        };
        let mut shapes = Vec::with_capacity(2);
        for _ in 0..2 {
            let in_dim = u32::from_le_bytes(take(4)?.try_into().expect("4 bytes")) as usize;
            let n = u32::from_le_bytes(take(4)?.try_into().expect("4 bytes")) as usize;
            if n == 0 || n > 1024 {
                return Err(err(format!("implausible layer count {n}")));
            }
            let mut layers = Vec::with_capacity(n);
            for _ in 0..n {
                let out = u32::from_le_bytes(take(4)?.try_into().expect("4 bytes")) as usize;
                let act = Activation::from_code(take(1)?[0]).ok_or_else(|| err("unknown activation"))?;
                layers.push((out, act));
            }
            shapes.push((in_dim, layers));
        }
        let mut towers = Vec::with_capacity(2);
        for (in_dim, layers) in shapes {
            let mut prev = in_dim;
            let mut built = Vec::with_capacity(layers.len());
            for (out, act) in layers {
                let floats = |n: usize, bytes: &[u8]| -> Vec<f32> {
                    debug_assert_eq!(bytes.len(), 4 * n);
                    bytes
                        .chunks_exact(4)
                        .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
                        .collect()
                };
                let n_weight = prev.checked_mul(out).ok_or_else(|| err("layer too large"))?;
                let weight = floats(n_weight, take(4 * n_weight)?);
                let bias = floats(out, take(4 * out)?);
                built.push(Dense::new(prev, out, weight, bias, act)?);
                prev = out;
            }
            towers.push(Tower::new(built)?);
        }
        if pos != body.len() {
            return Err(err("trailing bytes"));
        }
        let item = towers.pop().expect("two towers");
        let request = towers.pop().expect("two towers");
        TwoTower::new(request, item)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), TowerError> {
        let path = path.as_ref();
        std::fs::write(path, self.to_bytes()).map_err(|source| TowerError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, TowerError> {
        let path = path.as_ref();
        let buf = std::fs::read(path).map_err(|source| TowerError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_bytes(&buf)
    }
}
