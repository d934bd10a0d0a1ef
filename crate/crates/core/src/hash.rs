use std::fs::File;
use std::io::{self, Read};
use std::path::Path;

use sha2::{Digest, Sha256};

/// Hashes a list of key/value pairs in a stable, unambiguous way.
pub fn hash_fields<K: AsRef<str>, V: AsRef<str>>(fields: &[(K, V)]) -> String {
    let mut hasher = Sha256::new();
    for (k, v) in fields {
        hasher.update(k.as_ref().as_bytes());
        hasher.update([0u8]);
        hasher.update(v.as_ref().as_bytes());
        hasher.update([0xffu8]);
    }
    hex::encode(hasher.finalize())
}

/// SHA-256 of a file's contents.
pub fn hash_file(path: &Path) -> io::Result<String> {
    let mut file = File::open(path)?;
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = file.read(&mut buf)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex::encode(hasher.finalize()))
}

/// Shortened hash for directory names and log lines.
pub fn short(hash: &str) -> &str {
    &hash[..hash.len().min(16)]
}
