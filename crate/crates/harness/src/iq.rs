//! Raw IQ files: interleaved little-endian `f32` I/Q pairs, no header.
//! Sample rate, length and checksum live in the accompanying manifest.

use std::fs;
use std::path::Path;

use rfmix_core::{Complex64, IqBuffer};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{HarnessError, Result};

pub const BYTES_PER_SAMPLE: usize = 8;

/// Manifest record for one IQ file. `path` is relative to the manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub path: String,
    pub n_samples: usize,
    pub sample_rate_hz: f64,
    pub sha256: String,
}

pub fn encode(samples: &[Complex64]) -> Vec<u8> {
    let mut out = Vec::with_capacity(samples.len() * BYTES_PER_SAMPLE);
    for z in samples {
        out.extend_from_slice(&(z.re as f32).to_le_bytes());
        out.extend_from_slice(&(z.im as f32).to_le_bytes());
    }
    out
}

pub fn decode(bytes: &[u8]) -> Result<Vec<Complex64>> {
    if bytes.len() % BYTES_PER_SAMPLE != 0 {
        return Err(HarnessError::validation(format!(
            "{} bytes is not a whole number of f32 I/Q pairs",
            bytes.len()
        )));
    }
    Ok(bytes
        .chunks_exact(BYTES_PER_SAMPLE)
        .map(|c| {
            let re = f32::from_le_bytes([c[0], c[1], c[2], c[3]]);
            let im = f32::from_le_bytes([c[4], c[5], c[6], c[7]]);
            Complex64::new(re as f64, im as f64)
        })
        .collect())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

/// Samples as stored on disk: every value rounded to `f32`.
pub fn quantize(buf: &IqBuffer) -> IqBuffer {
    buf.map_samples(
        buf.samples
            .iter()
            .map(|z| Complex64::new(z.re as f32 as f64, z.im as f32 as f64))
            .collect(),
    )
}

/// Writes `buf` to `root/rel`, creating parent directories.
pub fn write(root: &Path, rel: &str, buf: &IqBuffer) -> Result<FileEntry> {
    let path = root.join(rel);
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| HarnessError::io(parent, e))?;
    }
    let bytes = encode(&buf.samples);
    fs::write(&path, &bytes).map_err(|e| HarnessError::io(&path, e))?;
    Ok(FileEntry {
        path: rel.to_string(),
        n_samples: buf.len(),
        sample_rate_hz: buf.sample_rate_hz,
        sha256: sha256_hex(&bytes),
    })
}

/// Checks an entry's file against its checksum and declared length.
pub fn check(root: &Path, entry: &FileEntry) -> Result<Vec<u8>> {
    let path = root.join(&entry.path);
    let bytes = fs::read(&path).map_err(|e| HarnessError::io(&path, e))?;
    let actual = sha256_hex(&bytes);
    if actual != entry.sha256 {
        return Err(HarnessError::Checksum {
            path,
            expected: entry.sha256.clone(),
            actual,
        });
    }
    if bytes.len() != entry.n_samples * BYTES_PER_SAMPLE {
        return Err(HarnessError::Truncated {
            path,
            expected: entry.n_samples,
            actual_bytes: bytes.len() as u64,
        });
    }
    Ok(bytes)
}

pub fn read(root: &Path, entry: &FileEntry) -> Result<IqBuffer> {
    let bytes = check(root, entry)?;
    Ok(IqBuffer::new(decode(&bytes)?, entry.sample_rate_hz)?)
}

/// Reads a bare IQ file with no manifest record.
pub fn read_raw(path: &Path, sample_rate_hz: f64) -> Result<IqBuffer> {
    let bytes = fs::read(path).map_err(|e| HarnessError::io(path, e))?;
    let samples = decode(&bytes)?;
    if samples.is_empty() {
        return Err(HarnessError::validation(format!("{} is empty", path.display())));
    }
    Ok(IqBuffer::new(samples, sample_rate_hz)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn encode_layout_is_interleaved_le_f32() {
        let bytes = encode(&[Complex64::new(1.0, -2.0)]);
        assert_eq!(bytes, [1.0f32.to_le_bytes(), (-2.0f32).to_le_bytes()].concat());
    }

    #[test]
    fn decode_rejects_partial_pairs() {
        assert!(decode(&[0u8; 12]).is_err());
        assert_eq!(decode(&[]).unwrap().len(), 0);
    }

    #[test]
    fn quantized_values_survive_encoding() {
        let buf = IqBuffer::new(vec![Complex64::new(0.1, 1.0 / 3.0); 3], 1e6).unwrap();
        let q = quantize(&buf);
        assert_eq!(decode(&encode(&buf.samples)).unwrap(), q.samples);
        assert_eq!(encode(&q.samples), encode(&buf.samples));
    }

    #[test]
    fn known_digest() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
