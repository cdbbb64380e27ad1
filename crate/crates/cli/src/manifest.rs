//! Work-directory manifest: per stage, the hash of the settings it ran with
//! and the digests of the files it read and wrote.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::Read;
use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const FILE: &str = "manifest.json";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub config_hash: String,
    /// Path → sha256 of every file read.
    pub inputs: BTreeMap<String, String>,
    /// Path (relative to the work dir) → sha256 of every file written.
    pub outputs: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub stages: BTreeMap<String, StageRecord>,
}

impl Manifest {
    pub fn load(work_dir: &Path) -> Result<Manifest> {
        let path = work_dir.join(FILE);
        if !path.exists() {
            return Ok(Manifest::default());
        }
        let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn save(&self, work_dir: &Path) -> Result<()> {
        let path = work_dir.join(FILE);
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn sha256_bytes(bytes: &[u8]) -> String {
    hex(&Sha256::digest(bytes))
}

/// Digest of a file, or of a directory as the digest of its sorted
/// (name, digest) listing.
pub fn sha256_path(path: &Path) -> Result<String> {
    if path.is_dir() {
        let mut entries: Vec<_> = std::fs::read_dir(path)
            .with_context(|| format!("listing {}", path.display()))?
            .collect::<std::io::Result<_>>()?;
        entries.sort_by_key(|e| e.file_name());
        let mut h = Sha256::new();
        for e in entries {
            h.update(e.file_name().to_string_lossy().as_bytes());
            h.update(sha256_path(&e.path())?.as_bytes());
        }
        return Ok(hex(&h.finalize()));
    }
    let mut file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut h = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = file.read(&mut buf)?;
        if n == 0 {
            break;
        }
        h.update(&buf[..n]);
    }
    Ok(hex(&h.finalize()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_digest() {
        assert_eq!(
            sha256_bytes(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn round_trip_and_dir_digest() {
        let dir = tempfile::tempdir().unwrap();
        let mut m = Manifest::default();
        m.stages.insert(
            "train".into(),
            StageRecord {
                config_hash: "x".into(),
                ..StageRecord::default()
            },
        );
        m.save(dir.path()).unwrap();
        assert_eq!(Manifest::load(dir.path()).unwrap(), m);

        let sub = dir.path().join("d");
        std::fs::create_dir(&sub).unwrap();
        std::fs::write(sub.join("a"), "1").unwrap();
        let before = sha256_path(&sub).unwrap();
        std::fs::write(sub.join("a"), "2").unwrap();
        assert_ne!(before, sha256_path(&sub).unwrap());
    }
}
