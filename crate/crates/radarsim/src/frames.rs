//! Frame files: raw little-endian `f32`, azimuth-major, no header.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// Writes `bytes` to a sibling temp file and renames it into place, so
/// readers never observe a half-written file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = Path::new(&tmp);
    let mut f = fs::File::create(tmp).map_err(|e| Error::io(tmp, e))?;
    f.write_all(bytes).map_err(|e| Error::io(tmp, e))?;
    f.sync_all().map_err(|e| Error::io(tmp, e))?;
    drop(f);
    fs::rename(tmp, path).map_err(|e| Error::io(path, e))
}

pub fn encode_f32(values: &[f32]) -> Vec<u8> {
    values.iter().flat_map(|v| v.to_le_bytes()).collect()
}

pub fn decode_f32(bytes: &[u8]) -> Option<Vec<f32>> {
    if !bytes.len().is_multiple_of(4) {
        return None;
    }
    Some(
        bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect(),
    )
}

pub fn write_frame(path: &Path, values: &[f32]) -> Result<()> {
    write_atomic(path, &encode_f32(values))
}

/// Reads a frame and checks it holds exactly `cells` values.
pub fn read_frame(path: &Path, cells: usize) -> Result<Vec<f32>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() != cells * 4 {
        return Err(Error::corrupt(
            path,
            format!("expected {} bytes, found {}", cells * 4, bytes.len()),
        ));
    }
    Ok(decode_f32(&bytes).expect("length checked"))
}

pub fn write_mask(path: &Path, mask: &[bool]) -> Result<()> {
    let values: Vec<f32> = mask.iter().map(|&m| if m { 1.0 } else { 0.0 }).collect();
    write_frame(path, &values)
}

pub fn read_mask(path: &Path, cells: usize) -> Result<Vec<bool>> {
    read_frame(path, cells)?
        .into_iter()
        .map(|v| match v {
            0.0 => Ok(false),
            1.0 => Ok(true),
            other => Err(Error::corrupt(path, format!("mask value {other}"))),
        })
        .collect()
}
