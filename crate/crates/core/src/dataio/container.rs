//! `AEC1` embedding container.
//!
//! ```text
//! bytes 0..4      magic "AEC1"
//! bytes 4..12     u64 LE header length H
//! bytes 12..12+H  UTF-8 JSON header {version, dtype, shape, keys, ...}
//! then            prod(shape) little-endian f32, row-major, no padding
//! ```
//!
//! Header fields other than the four required ones are carried through
//! untouched in [`EmbeddingContainer::meta`].

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{decode_f32s, encode_f32s, read_file, read_preamble, write_file, write_preamble};
use crate::error::{check_dim, Error, Result};

pub const CONTAINER_MAGIC: &[u8; 4] = b"AEC1";
pub const FORMAT_VERSION: u32 = 1;
pub(crate) const DTYPE_F32LE: &str = "f32le";

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    version: u32,
    dtype: String,
    shape: Vec<usize>,
    keys: Vec<String>,
    #[serde(flatten)]
    meta: serde_json::Map<String, serde_json::Value>,
}

/// Row-keyed block of `f32` embeddings with shape `(count, dim)` or
/// `(count, channels, dim)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingContainer {
    shape: Vec<usize>,
    keys: Vec<String>,
    data: Vec<f32>,
    pub meta: serde_json::Map<String, serde_json::Value>,
}

impl EmbeddingContainer {
    pub fn new(shape: Vec<usize>, keys: Vec<String>, data: Vec<f32>) -> Result<Self> {
        let c = Self {
            shape,
            keys,
            data,
            meta: Default::default(),
        };
        c.validate()?;
        Ok(c)
    }

    /// Builds a `(rows.len(), dim)` container.
    pub fn from_rows(keys: Vec<String>, rows: &[Vec<f32>]) -> Result<Self> {
        let dim = rows
            .first()
            .map(Vec::len)
            .ok_or(Error::Empty("container rows"))?;
        let mut data = Vec::with_capacity(rows.len() * dim);
        for r in rows {
            check_dim("container row", dim, r.len())?;
            data.extend_from_slice(r);
        }
        Self::new(vec![rows.len(), dim], keys, data)
    }

    pub fn with_meta(mut self, key: &str, value: serde_json::Value) -> Self {
        self.meta.insert(key.to_string(), value);
        self
    }

    fn validate(&self) -> Result<()> {
        if self.shape.len() < 2 {
            return Err(Error::Header(format!(
                "shape must have at least two axes, got {:?}",
                self.shape
            )));
        }
        check_dim("container keys", self.shape[0], self.keys.len())?;
        let expected = self
            .shape
            .iter()
            .try_fold(1usize, |acc, d| acc.checked_mul(*d))
            .ok_or_else(|| Error::Header(format!("shape {:?} overflows", self.shape)))?;
        check_dim("container data", expected, self.data.len())?;
        let mut seen = HashSet::with_capacity(self.keys.len());
        for k in &self.keys {
            if !seen.insert(k.as_str()) {
                return Err(Error::DuplicateKey(k.clone()));
            }
        }
        if !self.data.iter().all(|x| x.is_finite()) {
            return Err(Error::NonFinite("container data"));
        }
        Ok(())
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn keys(&self) -> &[String] {
        &self.keys
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn len(&self) -> usize {
        self.shape[0]
    }

    pub fn is_empty(&self) -> bool {
        self.shape[0] == 0
    }

    /// Number of floats per keyed row.
    pub fn row_len(&self) -> usize {
        self.shape[1..].iter().product()
    }

    pub fn row(&self, i: usize) -> &[f32] {
        let n = self.row_len();
        &self.data[i * n..(i + 1) * n]
    }

    pub fn index_of(&self, key: &str) -> Option<usize> {
        self.keys.iter().position(|k| k == key)
    }

    pub fn get(&self, key: &str) -> Result<&[f32]> {
        self.index_of(key)
            .map(|i| self.row(i))
            .ok_or_else(|| Error::KeyNotFound(key.to_string()))
    }

    pub fn key_index(&self) -> std::collections::HashMap<&str, usize> {
        self.keys
            .iter()
            .enumerate()
            .map(|(i, k)| (k.as_str(), i))
            .collect()
    }

    /// Appends a row, keeping the trailing shape.
    pub fn push(&mut self, key: String, row: &[f32]) -> Result<()> {
        check_dim("container row", self.row_len(), row.len())?;
        if self.keys.contains(&key) {
            return Err(Error::DuplicateKey(key));
        }
        if !row.iter().all(|x| x.is_finite()) {
            return Err(Error::NonFinite("container data"));
        }
        self.keys.push(key);
        self.data.extend_from_slice(row);
        self.shape[0] += 1;
        Ok(())
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        self.validate()?;
        let header = Header {
            version: FORMAT_VERSION,
            dtype: DTYPE_F32LE.to_string(),
            shape: self.shape.clone(),
            keys: self.keys.clone(),
            meta: self.meta.clone(),
        };
        let header = serde_json::to_vec(&header)?;
        let mut out = Vec::with_capacity(12 + header.len() + self.data.len() * 4);
        write_preamble(&mut out, CONTAINER_MAGIC, &header);
        encode_f32s(&mut out, &self.data);
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let (header, payload_start) = read_preamble(bytes, CONTAINER_MAGIC)?;
        let header: Header = serde_json::from_slice(header)?;
        if header.version != FORMAT_VERSION {
            return Err(Error::VersionMismatch {
                found: header.version,
                supported: FORMAT_VERSION,
            });
        }
        if header.dtype != DTYPE_F32LE {
            return Err(Error::UnsupportedDtype(header.dtype));
        }
        let count = header
            .shape
            .iter()
            .try_fold(1usize, |acc, d| acc.checked_mul(*d))
            .ok_or_else(|| Error::Header(format!("shape {:?} overflows", header.shape)))?;
        let data = decode_f32s(&bytes[payload_start..], count, payload_start)?;
        let c = Self {
            shape: header.shape,
            keys: header.keys,
            data,
            meta: header.meta,
        };
        c.validate()?;
        Ok(c)
    }
}

pub fn write_container(path: &Path, container: &EmbeddingContainer) -> Result<()> {
    write_file(path, &container.to_bytes()?)
}

pub fn read_container(path: &Path) -> Result<EmbeddingContainer> {
    EmbeddingContainer::from_bytes(&read_file(path)?)
}
