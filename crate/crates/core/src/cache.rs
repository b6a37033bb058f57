//! On-disk r₃ table: `R3CB`, a version byte, x_max as u64 LE, x_max
//! counts as u32 LE (n = 1..=x_max), then a u64 LE FNV-1a checksum of the
//! count bytes.

use std::fs::{self, File};
use std::hash::Hasher;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use fnv::FnvHasher;

use crate::cube_reps::{sieve_r3, CubeRepTable};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"R3CB";
pub const VERSION: u8 = 1;
const HEADER_LEN: usize = 4 + 1 + 8;

fn checksum(bytes: &[u8]) -> u64 {
    let mut h = FnvHasher::default();
    h.write(bytes);
    h.finish()
}

pub fn encode(table: &CubeRepTable) -> Vec<u8> {
    let x_max = table.x_max();
    let mut payload = Vec::with_capacity(4 * x_max as usize);
    for &c in &table.counts()[1..] {
        payload.extend_from_slice(&c.to_le_bytes());
    }
    let mut out = Vec::with_capacity(HEADER_LEN + payload.len() + 8);
    out.extend_from_slice(MAGIC);
    out.push(VERSION);
    out.extend_from_slice(&x_max.to_le_bytes());
    out.extend_from_slice(&payload);
    out.extend_from_slice(&checksum(&payload).to_le_bytes());
    out
}

pub fn decode(bytes: &[u8]) -> Result<CubeRepTable> {
    if bytes.len() < HEADER_LEN + 8 {
        return Err(Error::CorruptCache(format!(
            "file too short ({} bytes)",
            bytes.len()
        )));
    }
    if &bytes[..4] != MAGIC {
        return Err(Error::CorruptCache("bad magic bytes".into()));
    }
    if bytes[4] != VERSION {
        return Err(Error::CorruptCache(format!(
            "unsupported version {}",
            bytes[4]
        )));
    }
    let x_max = u64::from_le_bytes(bytes[5..13].try_into().expect("8 bytes"));
    let expected = (x_max as u128) * 4 + (HEADER_LEN as u128) + 8;
    if x_max == 0 || bytes.len() as u128 != expected {
        return Err(Error::CorruptCache(format!(
            "length {} does not match x_max = {x_max}",
            bytes.len()
        )));
    }
    let payload = &bytes[HEADER_LEN..bytes.len() - 8];
    let stored = u64::from_le_bytes(bytes[bytes.len() - 8..].try_into().expect("8 bytes"));
    let computed = checksum(payload);
    if stored != computed {
        return Err(Error::Checksum { stored, computed });
    }
    let mut counts = Vec::with_capacity(x_max as usize + 1);
    counts.push(0);
    counts.extend(
        payload
            .chunks_exact(4)
            .map(|c| u32::from_le_bytes(c.try_into().expect("4 bytes"))),
    );
    Ok(CubeRepTable::from_dense(counts))
}

/// Write atomically through a temporary file in the same directory.
pub fn write_cache(path: &Path, table: &CubeRepTable) -> Result<()> {
    let tmp = path.with_extension("tmp");
    {
        let mut w = BufWriter::new(File::create(&tmp)?);
        w.write_all(&encode(table))?;
        w.flush()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn read_cache(path: &Path) -> Result<CubeRepTable> {
    let mut bytes = Vec::new();
    BufReader::new(File::open(path)?).read_to_end(&mut bytes)?;
    decode(&bytes)
}

/// Whether `load_or_sieve` reused the file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CacheOutcome {
    Hit,
    Built,
}

/// Load a cache covering `x_max`, or sieve and write one. A corrupt file is
/// an error, not silently replaced.
pub fn load_or_sieve(path: &Path, x_max: u64) -> Result<(CubeRepTable, CacheOutcome)> {
    if path.exists() {
        let table = read_cache(path)?;
        if table.x_max() >= x_max {
            log::info!("cache hit: {} covers x_max = {x_max}", path.display());
            return Ok((table, CacheOutcome::Hit));
        }
        log::info!(
            "cache {} covers only {}; rebuilding to {x_max}",
            path.display(),
            table.x_max()
        );
    }
    let table = sieve_r3(x_max)?;
    write_cache(path, &table)?;
    Ok((table, CacheOutcome::Built))
}

/// Load an existing cache that must cover `x`.
pub fn load_covering(path: &Path, x: u64) -> Result<CubeRepTable> {
    let table = read_cache(path)?;
    if table.x_max() < x {
        return Err(Error::Range {
            value: x,
            max: table.x_max(),
        });
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_in_memory() {
        let t = sieve_r3(5000).unwrap();
        assert_eq!(decode(&encode(&t)).unwrap(), t);
        let small = sieve_r3(10).unwrap();
        let bytes = encode(&small);
        assert_eq!(bytes.len(), 13 + 40 + 8);
        assert_eq!(&bytes[..4], b"R3CB");
    }

    #[test]
    fn corruption_is_detected() {
        let bytes = encode(&sieve_r3(100).unwrap());
        assert!(matches!(
            decode(&bytes[..bytes.len() - 3]),
            Err(Error::CorruptCache(_))
        ));
        let mut flipped = bytes.clone();
        flipped[20] ^= 1;
        assert!(matches!(decode(&flipped), Err(Error::Checksum { .. })));
        let mut magic = bytes.clone();
        magic[0] = b'X';
        assert!(matches!(decode(&magic), Err(Error::CorruptCache(_))));
        let mut version = bytes;
        version[4] = 9;
        assert!(matches!(decode(&version), Err(Error::CorruptCache(_))));
    }

    #[test]
    fn load_or_sieve_reuses_larger_cache() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r3.bin");
        let (_, first) = load_or_sieve(&path, 1000).unwrap();
        assert_eq!(first, CacheOutcome::Built);
        let (t, second) = load_or_sieve(&path, 500).unwrap();
        assert_eq!(second, CacheOutcome::Hit);
        assert_eq!(t.x_max(), 1000);
        let (t, third) = load_or_sieve(&path, 2000).unwrap();
        assert_eq!(third, CacheOutcome::Built);
        assert_eq!(t.x_max(), 2000);
        assert!(matches!(
            load_covering(&path, 3000),
            Err(Error::Range { .. })
        ));
    }
}
