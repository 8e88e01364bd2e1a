//! `EMB1` binary layout, all integers little-endian, no padding:
//!
//! ```text
//! "EMB1" | u32 version (1) | u32 dim | u64 count
//! count x [ u16 id length | id bytes (UTF-8) | dim x f32 ]
//! ```

use std::path::Path;

use super::{EmbedError, EmbeddingStore, Provenance};

pub const EMBEDDING_MAGIC: &[u8; 4] = b"EMB1";
pub const EMBEDDING_VERSION: u32 = 1;

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8], EmbedError> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| EmbedError::Truncated(format!("{what} needs {n} bytes at offset {}", self.pos)))?;
        let out = &self.buf[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u16(&mut self, what: &str) -> Result<u16, EmbedError> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().unwrap()))
    }

    fn u32(&mut self, what: &str) -> Result<u32, EmbedError> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &str) -> Result<u64, EmbedError> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }
}

impl EmbeddingStore {
    /// Parses an `EMB1` buffer. Vectors are kept exactly as stored.
    pub fn from_bytes(buf: &[u8]) -> Result<Self, EmbedError> {
        let mut cur = Cursor { buf, pos: 0 };
        if cur.take(4, "magic").map_err(|_| EmbedError::BadMagic)? != EMBEDDING_MAGIC {
            return Err(EmbedError::BadMagic);
        }
        let version = cur.u32("version")?;
        if version != EMBEDDING_VERSION {
            return Err(EmbedError::UnsupportedVersion(version));
        }
        let dim = cur.u32("dim")? as usize;
        let count = cur.u64("count")?;
        let mut store = EmbeddingStore::new(dim, Provenance::File);
        for n in 0..count {
            let len = cur.u16("id length")? as usize;
            let raw = cur.take(len, "id")?;
            let id =
                std::str::from_utf8(raw).map_err(|_| EmbedError::BadId(String::from_utf8_lossy(raw).into_owned()))?;
            let payload = cur.take(dim * 4, &format!("vector of record {n}"))?;
            let v: Vec<f32> = payload
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
                .collect();
            store.insert(id, v)?;
        }
        if cur.pos != buf.len() {
            return Err(EmbedError::TrailingBytes(buf.len() - cur.pos));
        }
        Ok(store)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(20 + self.len() * (2 + 16 + 4 * self.dim()));
        out.extend_from_slice(EMBEDDING_MAGIC);
        out.extend_from_slice(&EMBEDDING_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.dim() as u32).to_le_bytes());
        out.extend_from_slice(&(self.len() as u64).to_le_bytes());
        for (id, v) in self.iter() {
            out.extend_from_slice(&(id.len() as u16).to_le_bytes());
            out.extend_from_slice(id.as_bytes());
            for x in v {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
        out
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, EmbedError> {
        let path = path.as_ref();
        let buf = std::fs::read(path).map_err(|source| EmbedError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_bytes(&buf)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), EmbedError> {
        let path = path.as_ref();
        std::fs::write(path, self.to_bytes()).map_err(|source| EmbedError::Io {
            path: path.display().to_string(),
            source,
        })
    }
}
