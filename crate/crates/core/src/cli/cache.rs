//! On-disk cache of Dirac eigendecompositions, one file per `n`.
//!
//! Layout (little endian): magic `DPL1`, `n: u32`, `dim: u32`,
//! `convention: u64`, `checksum: u64`, then `dim` eigenvalues and the
//! eigenvector matrix row-major as `(re, im)` pairs. The checksum is the
//! first eight bytes of the SHA-256 of the payload.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::matrix::{eigh, ComplexMatrix, HermitianEigenDecomposition};
use crate::torus::CONSTRUCTION_CONVENTION;

pub const CACHE_DIR_ENV: &str = "FUZZY_SPECTRAL_CACHE_DIR";
const MAGIC: &[u8; 4] = b"DPL1";
const HEADER_LEN: usize = 4 + 4 + 4 + 8 + 8;

pub fn convention_hash() -> u64 {
    first_u64(&Sha256::digest(CONSTRUCTION_CONVENTION.as_bytes()))
}

fn first_u64(digest: &[u8]) -> u64 {
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}

#[derive(Clone, Debug)]
pub struct EigenCache {
    dir: PathBuf,
}

impl EigenCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    /// Directory from the environment override, else `fallback`.
    pub fn from_env_or(fallback: impl Into<PathBuf>) -> Self {
        match std::env::var_os(CACHE_DIR_ENV) {
            Some(dir) if !dir.is_empty() => Self::new(dir),
            _ => Self::new(fallback),
        }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_for(&self, n: usize) -> PathBuf {
        self.dir.join(format!("dirac-n{n}-{:016x}.dpl", convention_hash()))
    }

    /// Loads the decomposition for `n`, or computes and stores it.
    /// Returns the decomposition and whether it came from the cache.
    pub fn load_or_compute(&self, n: usize, dirac: &ComplexMatrix) -> Result<(HermitianEigenDecomposition, bool)> {
        let path = self.path_for(n);
        if path.exists() {
            match read_file(&path, n, dirac.dim()) {
                Ok(e) => return Ok((e, true)),
                Err(err) => log::warn!("rebuilding cache entry: {err}"),
            }
        }
        let e = eigh(dirac)?;
        self.store(n, &e)?;
        Ok((e, false))
    }

    pub fn load(&self, n: usize, dim: usize) -> Result<HermitianEigenDecomposition> {
        read_file(&self.path_for(n), n, dim)
    }

    /// Writes atomically: a temporary file in the cache directory is renamed
    /// into place, so readers never see a partial entry.
    pub fn store(&self, n: usize, e: &HermitianEigenDecomposition) -> Result<()> {
        fs::create_dir_all(&self.dir)?;
        let bytes = encode(n, e);
        let mut tmp = tempfile::NamedTempFile::new_in(&self.dir)?;
        tmp.write_all(&bytes)?;
        tmp.as_file().sync_all()?;
        tmp.persist(self.path_for(n)).map_err(|e| Error::Io(e.error))?;
        Ok(())
    }
}

pub fn encode(n: usize, e: &HermitianEigenDecomposition) -> Vec<u8> {
    let dim = e.dim();
    let mut payload = Vec::with_capacity(8 * dim + 16 * dim * dim);
    for l in &e.eigenvalues {
        payload.extend_from_slice(&l.to_le_bytes());
    }
    for z in e.eigenvectors.as_slice() {
        payload.extend_from_slice(&z.re.to_le_bytes());
        payload.extend_from_slice(&z.im.to_le_bytes());
    }
    let mut out = Vec::with_capacity(HEADER_LEN + payload.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(n as u32).to_le_bytes());
    out.extend_from_slice(&(dim as u32).to_le_bytes());
    out.extend_from_slice(&convention_hash().to_le_bytes());
    out.extend_from_slice(&first_u64(&Sha256::digest(&payload)).to_le_bytes());
    out.extend_from_slice(&payload);
    out
}

pub fn decode(bytes: &[u8], n: usize, dim: usize) -> std::result::Result<HermitianEigenDecomposition, String> {
    if bytes.len() < HEADER_LEN {
        return Err("truncated header".into());
    }
    if &bytes[..4] != MAGIC {
        return Err("bad magic".into());
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap()) as usize;
    let u64_at = |o: usize| u64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    if u32_at(4) != n || u32_at(8) != dim {
        return Err(format!("header says n={} dim={}, expected n={n} dim={dim}", u32_at(4), u32_at(8)));
    }
    if u64_at(12) != convention_hash() {
        return Err("construction convention changed".into());
    }
    let payload = &bytes[HEADER_LEN..];
    if payload.len() != 8 * dim + 16 * dim * dim {
        return Err(format!("payload has {} bytes", payload.len()));
    }
    if first_u64(&Sha256::digest(payload)) != u64_at(20) {
        return Err("checksum mismatch".into());
    }
    let f = |o: usize| f64::from_le_bytes(payload[o..o + 8].try_into().unwrap());
    let eigenvalues: Vec<f64> = (0..dim).map(|i| f(8 * i)).collect();
    let base = 8 * dim;
    let data: Vec<Complex64> =
        (0..dim * dim).map(|i| Complex64::new(f(base + 16 * i), f(base + 16 * i + 8))).collect();
    let eigenvectors = ComplexMatrix::new(dim, data).map_err(|e| e.to_string())?;
    Ok(HermitianEigenDecomposition { eigenvalues, eigenvectors })
}

fn read_file(path: &Path, n: usize, dim: usize) -> Result<HermitianEigenDecomposition> {
    let bytes = fs::read(path)?;
    decode(&bytes, n, dim).map_err(|reason| Error::CacheCorrupt { path: path.to_path_buf(), reason })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::torus::dirac_fuzzy;

    #[test]
    fn round_trip_and_hit() {
        let dir = tempfile::tempdir().unwrap();
        let cache = EigenCache::new(dir.path());
        let t = dirac_fuzzy(3).unwrap();
        let (a, hit) = cache.load_or_compute(3, &t.dirac).unwrap();
        assert!(!hit);
        let (b, hit) = cache.load_or_compute(3, &t.dirac).unwrap();
        assert!(hit);
        assert_eq!(a, b);
    }

    #[test]
    fn corruption_is_detected_and_rebuilt() {
        let dir = tempfile::tempdir().unwrap();
        let cache = EigenCache::new(dir.path());
        let t = dirac_fuzzy(2).unwrap();
        let (a, _) = cache.load_or_compute(2, &t.dirac).unwrap();
        let path = cache.path_for(2);
        let mut bytes = fs::read(&path).unwrap();
        let last = bytes.len() - 1;
        bytes[last] ^= 0xff;
        fs::write(&path, &bytes).unwrap();
        assert!(matches!(cache.load(2, 16), Err(Error::CacheCorrupt { .. })));
        let (b, hit) = cache.load_or_compute(2, &t.dirac).unwrap();
        assert!(!hit);
        assert_eq!(a, b);
        assert!(cache.load(2, 16).is_ok());
    }

    #[test]
    fn header_mismatch_rejected() {
        let t = dirac_fuzzy(2).unwrap();
        let e = eigh(&t.dirac).unwrap();
        let bytes = encode(2, &e);
        assert!(decode(&bytes, 3, 16).is_err());
        assert!(decode(&bytes[..10], 2, 16).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert_eq!(decode(&bad, 2, 16).unwrap_err(), "bad magic");
    }
}
