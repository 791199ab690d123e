//! Input ingestion and on-disk formats: the VAD lexicon, the binary
//! embedding container, model files, scalers and dataset splitting.

mod container;
mod dataset;
mod lexicon;
mod modelfile;
mod scaler;

pub use container::{
    read_container, write_container, EmbeddingContainer, CONTAINER_MAGIC, FORMAT_VERSION,
};
pub use dataset::{split_dataset, split_indices, Dataset, GridDataset, Sample, SourceKind};
pub use lexicon::{
    parse_lexicon, parse_lexicon_reader, LexiconColumns, LexiconEntry, ParsedLexicon, RowReject,
};
pub use modelfile::{
    load_ensemble, load_model, load_model_file, save_ensemble, save_model, save_model_file,
    ModelFile, TrainingMeta, MODEL_MAGIC,
};
pub use scaler::Scaler;

use std::io::Read;

use crate::error::{Error, Result};

/// Reads the shared `magic | u64 header length | JSON header` preamble and
/// returns the header bytes and the offset at which the payload starts.
pub(crate) fn read_preamble<'a>(bytes: &'a [u8], magic: &[u8; 4]) -> Result<(&'a [u8], usize)> {
    if bytes.len() < 4 {
        return Err(Error::Truncated {
            needed: 4,
            available: bytes.len() as u64,
        });
    }
    let found: [u8; 4] = bytes[..4].try_into().expect("4 bytes");
    if &found != magic {
        return Err(Error::BadMagic {
            expected: *magic,
            found,
        });
    }
    if bytes.len() < 12 {
        return Err(Error::Truncated {
            needed: 12,
            available: bytes.len() as u64,
        });
    }
    let header_len = u64::from_le_bytes(bytes[4..12].try_into().expect("8 bytes"));
    let end = 12u64.saturating_add(header_len);
    if end > bytes.len() as u64 {
        return Err(Error::Truncated {
            needed: end,
            available: bytes.len() as u64,
        });
    }
    let end = end as usize;
    Ok((&bytes[12..end], end))
}

pub(crate) fn write_preamble(out: &mut Vec<u8>, magic: &[u8; 4], header: &[u8]) {
    out.extend_from_slice(magic);
    out.extend_from_slice(&(header.len() as u64).to_le_bytes());
    out.extend_from_slice(header);
}

/// Decodes exactly `count` little-endian `f32`s from `payload`.
pub(crate) fn decode_f32s(payload: &[u8], count: usize, offset: usize) -> Result<Vec<f32>> {
    let needed = count
        .checked_mul(4)
        .ok_or_else(|| Error::Header(format!("payload of {count} floats overflows")))?;
    if payload.len() < needed {
        return Err(Error::Truncated {
            needed: (offset + needed) as u64,
            available: (offset + payload.len()) as u64,
        });
    }
    if payload.len() > needed {
        return Err(Error::TrailingBytes((payload.len() - needed) as u64));
    }
    Ok(payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
        .collect())
}

pub(crate) fn encode_f32s(out: &mut Vec<u8>, values: &[f32]) {
    out.reserve(values.len() * 4);
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

pub(crate) fn read_file(path: &std::path::Path) -> Result<Vec<u8>> {
    let mut f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut buf = Vec::new();
    f.read_to_end(&mut buf).map_err(|e| Error::io(path, e))?;
    Ok(buf)
}

pub(crate) fn write_file(path: &std::path::Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}
