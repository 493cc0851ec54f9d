//! `.demb` binary frame files.
//!
//! Layout (little-endian): magic `DEMB`, version `u16 = 1`, reserved `u16 = 0`,
//! `T: u32`, `d: u32`, then `T·d` `f32` values frame-major.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{EmbeddingSequence, Frames};

pub const MAGIC: [u8; 4] = *b"DEMB";
pub const VERSION: u16 = 1;
pub const HEADER_LEN: usize = 16;

pub fn encode_frames(frames: &Frames) -> Vec<u8> {
    let mut buf = Vec::with_capacity(HEADER_LEN + frames.as_slice().len() * 4);
    buf.extend_from_slice(&MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&0u16.to_le_bytes());
    buf.extend_from_slice(&(frames.len() as u32).to_le_bytes());
    buf.extend_from_slice(&(frames.dim() as u32).to_le_bytes());
    for v in frames.as_slice() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    buf
}

pub fn decode_frames(path: &Path, bytes: &[u8]) -> Result<Frames> {
    if bytes.len() < HEADER_LEN {
        if bytes.len() >= 4 && bytes[..4] != MAGIC {
            return Err(Error::BadMagic {
                path: path.into(),
                found: bytes[..4].try_into().unwrap(),
            });
        }
        return Err(Error::Truncated {
            path: path.into(),
            expected: HEADER_LEN as u64,
            actual: bytes.len() as u64,
        });
    }
    let magic: [u8; 4] = bytes[..4].try_into().unwrap();
    if magic != MAGIC {
        return Err(Error::BadMagic {
            path: path.into(),
            found: magic,
        });
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != VERSION {
        return Err(Error::UnsupportedVersion {
            path: path.into(),
            version,
        });
    }
    let len = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let dim = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
    let expected = HEADER_LEN as u64 + len as u64 * dim as u64 * 4;
    if bytes.len() as u64 != expected {
        return Err(Error::Truncated {
            path: path.into(),
            expected,
            actual: bytes.len() as u64,
        });
    }
    let data = bytes[HEADER_LEN..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Frames::new(len, dim, data).map_err(|e| Error::parse(path, 0, e.to_string()))
}

pub fn write_embedding(seq: &EmbeddingSequence, path: &Path) -> Result<()> {
    write_frames(&seq.frames, path)
}

pub fn write_frames(frames: &Frames, path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, encode_frames(frames)).map_err(|e| Error::io(path, e))
}

pub fn read_frames(path: &Path) -> Result<Frames> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_frames(path, &bytes)
}

/// Reads a file stored at `<model>/layer<NN>/<location>/<word>.demb`, taking
/// the identifiers from the path.
pub fn read_embedding(path: &Path) -> Result<EmbeddingSequence> {
    let frames = read_frames(path)?;
    let bad = || Error::parse(path, 0, "path does not follow <model>/layerNN/<location>/<word>.demb");
    let word = path.file_stem().and_then(|s| s.to_str()).ok_or_else(bad)?;
    let mut up = path.ancestors().skip(1).map(|p| p.file_name().and_then(|s| s.to_str()));
    let location = up.next().flatten().ok_or_else(bad)?;
    let layer_dir = up.next().flatten().ok_or_else(bad)?;
    let model = up.next().flatten().ok_or_else(bad)?;
    let layer = super::archive::parse_layer_dir(layer_dir).ok_or_else(bad)?;
    EmbeddingSequence::new(location, word, model, layer, frames)
}
