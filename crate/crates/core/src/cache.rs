//! Append-only response cache keyed by content hash.
//!
//! The cache stores raw provider responses so that re-runs never repeat a
//! provider call for a prompt already answered. The on-disk format is one
//! JSON entry per line; entries are only appended. Writes are serialized,
//! reads proceed concurrently.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CacheError {
    #[error("cache I/O failed: {0}")]
    Io(#[from] std::io::Error),
    #[error("cache entry {line} is corrupt: {message}")]
    Corrupt { line: usize, message: String },
}

#[derive(Debug, Serialize, Deserialize)]
struct CacheEntry {
    key: String,
    value: String,
    created_at: u64,
}

/// Content-addressed store of raw provider responses.
pub struct ResponseCache {
    entries: RwLock<BTreeMap<String, String>>,
    writer: Mutex<Option<File>>,
    path: Option<PathBuf>,
}

impl ResponseCache {
    /// A cache that lives only for the process; useful in tests.
    pub fn in_memory() -> Self {
        Self {
            entries: RwLock::new(BTreeMap::new()),
            writer: Mutex::new(None),
            path: None,
        }
    }

    /// Open (or create) a file-backed cache, loading all existing entries.
    pub fn open(path: &Path) -> Result<Self, CacheError> {
        if let Some(parent) = path.parent() {
            if !parent.as_os_str().is_empty() {
                std::fs::create_dir_all(parent)?;
            }
        }
        let mut entries = BTreeMap::new();
        if path.exists() {
            let reader = BufReader::new(File::open(path)?);
            for (idx, line) in reader.lines().enumerate() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let entry: CacheEntry =
                    serde_json::from_str(&line).map_err(|e| CacheError::Corrupt {
                        line: idx + 1,
                        message: e.to_string(),
                    })?;
                // keys are pure functions of their inputs, so duplicates are identical
                entries.entry(entry.key).or_insert(entry.value);
            }
        }
        let writer = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(Self {
            entries: RwLock::new(entries),
            writer: Mutex::new(Some(writer)),
            path: Some(path.to_path_buf()),
        })
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    /// Cache key for a provider call: hash of the provider identity and the
    /// exact prompt text. Any change to either yields a fresh key.
    pub fn key(identity: &str, prompt: &str) -> String {
        let mut hasher = Sha256::new();
        hasher.update(identity.as_bytes());
        hasher.update([0u8]);
        hasher.update(prompt.as_bytes());
        hex_digest(hasher)
    }

    pub fn get(&self, key: &str) -> Option<String> {
        self.entries.read().expect("cache lock poisoned").get(key).cloned()
    }

    pub fn len(&self) -> usize {
        self.entries.read().expect("cache lock poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Insert a response, appending it to the backing file when present.
    pub fn put(&self, key: &str, value: &str) -> Result<(), CacheError> {
        {
            let mut entries = self.entries.write().expect("cache lock poisoned");
            if entries.contains_key(key) {
                return Ok(());
            }
            entries.insert(key.to_string(), value.to_string());
        }
        let mut writer = self.writer.lock().expect("cache writer poisoned");
        if let Some(file) = writer.as_mut() {
            let entry = CacheEntry {
                key: key.to_string(),
                value: value.to_string(),
                created_at: unix_millis(),
            };
            let line = serde_json::to_string(&entry).expect("cache entry serializes");
            file.write_all(line.as_bytes())?;
            file.write_all(b"\n")?;
        }
        Ok(())
    }
}

fn unix_millis() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

fn hex_digest(hasher: Sha256) -> String {
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for byte in digest {
        use std::fmt::Write;
        write!(out, "{byte:02x}").expect("write to string");
    }
    out
}

/// Hex SHA-256 of arbitrary bytes; used for manifest content hashes too.
pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    hex_digest(hasher)
}
