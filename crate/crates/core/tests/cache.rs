use std::fs;

use cuspsum::cache::{self, encode_payload};
use cuspsum::qseries::{delta_qexp, eigenform};
use cuspsum::Error;

fn temp_path(name: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("cuspsum-cache-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn float_roundtrip_is_bit_exact() {
    let d = delta_qexp(10_000, false).unwrap();
    let p = temp_path("delta-float.qexp");
    cache::write(&p, &d).unwrap();
    let back = cache::read(&p, None).unwrap();
    assert_eq!(encode_payload(&back), encode_payload(&d));
    assert_eq!(back, d);
}

#[test]
fn exact_roundtrip() {
    let f = eigenform(26, 2000, true).unwrap();
    let p = temp_path("eig26-exact.qexp");
    cache::write(&p, &f).unwrap();
    assert_eq!(cache::read(&p, None).unwrap(), f);
    assert_eq!(cache::read(&p, Some(500)).unwrap(), f.truncate(500).unwrap());
}

#[test]
fn corrupt_payload_byte() {
    let d = delta_qexp(1000, false).unwrap();
    let p = temp_path("corrupt.qexp");
    cache::write(&p, &d).unwrap();
    let mut bytes = fs::read(&p).unwrap();
    let last = bytes.len() - 100;
    bytes[last] ^= 0x40;
    fs::write(&p, &bytes).unwrap();
    assert!(matches!(cache::read(&p, None), Err(Error::ChecksumMismatch { .. })));
}

#[test]
fn version_and_truncation_errors() {
    let d = delta_qexp(1000, true).unwrap();
    let p = temp_path("version.qexp");
    cache::write(&p, &d).unwrap();
    let bytes = fs::read(&p).unwrap();
    let mut v2 = bytes.clone();
    v2[8] = 2;
    assert!(matches!(
        cache::decode(&v2),
        Err(Error::VersionMismatch { found: 2, expected: 1 })
    ));
    assert!(matches!(cache::decode(&bytes[..20]), Err(Error::Cache(_))));
    let mut bad = bytes.clone();
    bad[0] = b'X';
    assert!(matches!(cache::decode(&bad), Err(Error::Cache(_))));
}

#[test]
fn request_beyond_cached_range() {
    let d = delta_qexp(1000, false).unwrap();
    let p = temp_path("short.qexp");
    cache::write(&p, &d).unwrap();
    assert!(matches!(
        cache::read(&p, Some(5000)),
        Err(Error::InsufficientCache {
            cached: 1000,
            requested: 5000
        })
    ));
}
