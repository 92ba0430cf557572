//! Binary coefficient cache.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic      8 bytes  "CUSPQEXP"
//! version    u16
//! weight     u16
//! n_max      u64
//! form_id    u32 length + UTF-8 bytes
//! flags      u8       bit 0: exact; bits 1-2: roundoff kind
//! roundoff   f64      parameter of the roundoff kind (0 otherwise)
//! checksum   u64      FNV-1a of the payload
//! payload    float: n_max + 1 doubles
//!            exact: per coefficient a u64 word count w, then w u64 words of
//!                   the two's-complement value
//! ```
//!
//! Writers take an exclusive advisory lock, readers a shared one.

use std::fs::{File, OpenOptions};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_bigint::BigInt;

use crate::qseries::{Coeffs, QExpansion, Roundoff};
use crate::{Error, Result};

pub const MAGIC: &[u8; 8] = b"CUSPQEXP";
pub const VERSION: u16 = 1;

const FLAG_EXACT: u8 = 1;

/// 64-bit FNV-1a.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

fn roundoff_code(r: Roundoff) -> (u8, f64) {
    match r {
        Roundoff::Exact => (0, 0.0),
        Roundoff::CorrectlyRounded => (1, 0.0),
        Roundoff::Relative(x) => (2, x),
        Roundoff::Absolute(x) => (3, x),
    }
}

fn roundoff_from(code: u8, value: f64) -> Roundoff {
    match code {
        0 => Roundoff::Exact,
        1 => Roundoff::CorrectlyRounded,
        2 => Roundoff::Relative(value),
        _ => Roundoff::Absolute(value),
    }
}

/// The payload bytes of an expansion.
pub fn encode_payload(f: &QExpansion) -> Vec<u8> {
    match f.coeffs() {
        Coeffs::Float(v) => v.iter().flat_map(|x| x.to_le_bytes()).collect(),
        Coeffs::Exact(v) => {
            let mut out = Vec::with_capacity(v.len() * 16);
            for c in v {
                let mut bytes = c.to_signed_bytes_le();
                let fill = if c.sign() == num_bigint::Sign::Minus { 0xff } else { 0 };
                bytes.resize(bytes.len().div_ceil(8).max(1) * 8, fill);
                out.extend_from_slice(&((bytes.len() / 8) as u64).to_le_bytes());
                out.extend_from_slice(&bytes);
            }
            out
        }
    }
}

fn encode(f: &QExpansion) -> Result<Vec<u8>> {
    let weight = u16::try_from(f.weight()).map_err(|_| Error::Cache("weight exceeds u16".into()))?;
    let payload = encode_payload(f);
    let id = f.form_id().as_bytes();
    let (code, value) = roundoff_code(f.roundoff());
    let flags = (if f.is_exact() { FLAG_EXACT } else { 0 }) | (code << 1);
    let mut out = Vec::with_capacity(payload.len() + 48 + id.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&weight.to_le_bytes());
    out.extend_from_slice(&(f.n_max() as u64).to_le_bytes());
    out.extend_from_slice(&(id.len() as u32).to_le_bytes());
    out.extend_from_slice(id);
    out.push(flags);
    out.extend_from_slice(&value.to_le_bytes());
    out.extend_from_slice(&fnv1a(&payload).to_le_bytes());
    out.extend_from_slice(&payload);
    Ok(out)
}

/// Writes `f` to `path` under an exclusive lock.
pub fn write(path: &Path, f: &QExpansion) -> Result<()> {
    let bytes = encode(f)?;
    let file = OpenOptions::new().create(true).write(true).truncate(false).open(path)?;
    file.lock()?;
    file.set_len(0)?;
    let mut w = BufWriter::new(&file);
    w.write_all(&bytes)?;
    w.flush()?;
    drop(w);
    file.sync_all()?;
    file.unlock()?;
    Ok(())
}

struct Cursor<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.data.len())
            .ok_or_else(|| Error::Cache(format!("truncated file: need {n} bytes at offset {}", self.pos)))?;
        let s = &self.data[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().expect("2 bytes")))
    }
}

/// Header fields of a cache file.
#[derive(Debug, Clone, PartialEq)]
pub struct Header {
    pub version: u16,
    pub weight: u16,
    pub n_max: u64,
    pub form_id: String,
    pub exact: bool,
    pub roundoff: Roundoff,
    pub checksum: u64,
}

/// Parses a complete cache image.
pub fn decode(bytes: &[u8]) -> Result<(Header, QExpansion)> {
    let mut c = Cursor { data: bytes, pos: 0 };
    if c.take(8)? != MAGIC {
        return Err(Error::Cache("bad magic".into()));
    }
    let version = c.u16()?;
    if version != VERSION {
        return Err(Error::VersionMismatch {
            found: version,
            expected: VERSION,
        });
    }
    let weight = c.u16()?;
    let n_max = c.u64()?;
    let id_len = c.u32()? as usize;
    let form_id =
        String::from_utf8(c.take(id_len)?.to_vec()).map_err(|_| Error::Cache("form id is not UTF-8".into()))?;
    let flags = c.take(1)?[0];
    let value = f64::from_le_bytes(c.take(8)?.try_into().expect("8 bytes"));
    let checksum = c.u64()?;
    let payload = &bytes[c.pos..];
    let actual = fnv1a(payload);
    if actual != checksum {
        return Err(Error::ChecksumMismatch {
            expected: checksum,
            actual,
        });
    }
    let exact = flags & FLAG_EXACT != 0;
    let roundoff = roundoff_from((flags >> 1) & 3, value);
    let count = usize::try_from(n_max)
        .ok()
        .and_then(|n| n.checked_add(1))
        .ok_or_else(|| Error::Cache("n_max does not fit in memory".into()))?;
    let mut p = Cursor { data: payload, pos: 0 };
    let f = if exact {
        let mut v = Vec::with_capacity(count.min(payload.len() / 16));
        for _ in 0..count {
            let words = p.u64()? as usize;
            let raw = p.take(words.checked_mul(8).ok_or_else(|| Error::Cache("bad record".into()))?)?;
            v.push(BigInt::from_signed_bytes_le(raw));
        }
        if p.pos != p.data.len() {
            return Err(Error::Cache("trailing bytes after payload".into()));
        }
        QExpansion::from_exact(weight as u32, form_id.clone(), v)
    } else {
        let expected = count.saturating_mul(8);
        if payload.len() != expected {
            return Err(Error::Cache(format!(
                "truncated file: payload has {} bytes, expected {expected}",
                payload.len()
            )));
        }
        let v = payload
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().expect("8 bytes")))
            .collect();
        QExpansion::from_float(weight as u32, form_id.clone(), v, roundoff)
    };
    let header = Header {
        version,
        weight,
        n_max,
        form_id,
        exact,
        roundoff,
        checksum,
    };
    Ok((header, f))
}

/// Reads `path` under a shared lock. With `n_max` set, the cached expansion
/// must reach it and is truncated to it.
pub fn read(path: &Path, n_max: Option<usize>) -> Result<QExpansion> {
    let file = File::open(path)?;
    file.lock_shared()?;
    let mut bytes = Vec::new();
    BufReader::new(&file).read_to_end(&mut bytes)?;
    file.unlock()?;
    let (header, f) = decode(&bytes)?;
    match n_max {
        None => Ok(f),
        Some(n) if (n as u64) > header.n_max => Err(Error::InsufficientCache {
            cached: header.n_max,
            requested: n as u64,
        }),
        Some(n) => f.truncate(n),
    }
}

/// The cache file name for a generated form.
pub fn file_name(form_id: &str, n_max: usize, exact: bool) -> String {
    let id: String = form_id
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
        .collect();
    format!("{id}-n{n_max}-{}.qexp", if exact { "exact" } else { "float" })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fnv_reference_values() {
        assert_eq!(fnv1a(b""), 0xcbf29ce484222325);
        assert_eq!(fnv1a(b"a"), 0xaf63dc4c8601ec8c);
        assert_eq!(fnv1a(b"foobar"), 0x85944171f73967e8);
    }

    #[test]
    fn bigint_records_sign_extend() {
        for v in [0i64, 1, -1, 255, -256, i64::MAX, i64::MIN] {
            let f = QExpansion::from_exact(12, "t", vec![BigInt::from(v)]);
            let (_, g) = decode(&encode(&f).unwrap()).unwrap();
            assert_eq!(f, g, "{v}");
        }
        let big = BigInt::from(-7) * BigInt::from(10).pow(40);
        let f = QExpansion::from_exact(12, "t", vec![big]);
        assert_eq!(decode(&encode(&f).unwrap()).unwrap().1, f);
    }
}
