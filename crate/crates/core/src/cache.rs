//! Append-only JSON-lines cache of per-design metric records.
//!
//! Records are keyed by a SHA-256 content hash over everything the result
//! depends on: chain kind, design triple, the resolved hand model, the grid
//! step, and the voxel size. A key therefore never serves stale data when
//! the configuration changes. Corrupt lines are skipped with a warning and
//! recomputed on demand.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::design::PhalanxTriple;
use crate::error::{Error, Result};
use crate::metrics::{FingerRecord, MetricsRecord};
use crate::model::HandModel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "record", rename_all = "snake_case")]
pub enum CachedRecord {
    Thumb(MetricsRecord),
    Finger(FingerRecord),
}

impl CachedRecord {
    pub fn design(&self) -> PhalanxTriple {
        match self {
            CachedRecord::Thumb(r) => r.design,
            CachedRecord::Finger(r) => r.index.design,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct CacheLine {
    key: String,
    #[serde(flatten)]
    entry: CachedRecord,
}

/// Hash key for one record. serde_json prints floats with exact shortest
/// round-trip digits, so distinct models hash to distinct keys.
pub fn record_key(
    kind: &str,
    design: &PhalanxTriple,
    model: &HandModel,
    step_deg: f64,
    delta: f64,
) -> String {
    #[derive(Serialize)]
    struct KeyMaterial<'a> {
        kind: &'a str,
        design: &'a PhalanxTriple,
        model: &'a HandModel,
        step_deg: f64,
        delta: f64,
    }
    let material = serde_json::to_vec(&KeyMaterial {
        kind,
        design,
        model,
        step_deg,
        delta,
    })
    .expect("key material serializes");
    let digest = Sha256::digest(&material);
    let mut hex = String::with_capacity(64);
    for b in digest {
        hex.push_str(&format!("{b:02x}"));
    }
    hex
}

#[derive(Debug)]
pub struct RecordCache {
    path: PathBuf,
    entries: HashMap<String, CachedRecord>,
    pending: Vec<String>,
    warnings: Vec<String>,
}

impl RecordCache {
    /// Load an existing cache file, skipping lines that fail to parse.
    pub fn open(path: &Path) -> Result<Self> {
        let mut cache = RecordCache {
            path: path.to_path_buf(),
            entries: HashMap::new(),
            pending: Vec::new(),
            warnings: Vec::new(),
        };
        if path.exists() {
            let file = std::fs::File::open(path).map_err(|e| Error::Cache {
                path: path.display().to_string(),
                source: e,
            })?;
            for (lineno, line) in BufReader::new(file).lines().enumerate() {
                let line = line.map_err(|e| Error::Cache {
                    path: path.display().to_string(),
                    source: e,
                })?;
                if line.trim().is_empty() {
                    continue;
                }
                match serde_json::from_str::<CacheLine>(&line) {
                    Ok(parsed) => {
                        cache.entries.insert(parsed.key, parsed.entry);
                    }
                    Err(e) => cache.warnings.push(format!(
                        "{}:{}: skipping corrupt cache line ({e})",
                        path.display(),
                        lineno + 1
                    )),
                }
            }
        }
        Ok(cache)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn get_thumb(&self, key: &str) -> Option<&MetricsRecord> {
        match self.entries.get(key) {
            Some(CachedRecord::Thumb(r)) => Some(r),
            _ => None,
        }
    }

    pub fn get_finger(&self, key: &str) -> Option<&FingerRecord> {
        match self.entries.get(key) {
            Some(CachedRecord::Finger(r)) => Some(r),
            _ => None,
        }
    }

    pub fn insert(&mut self, key: String, entry: CachedRecord) {
        let line = serde_json::to_string(&CacheLine {
            key: key.clone(),
            entry: entry.clone(),
        })
        .expect("records serialize");
        self.pending.push(line);
        self.entries.insert(key, entry);
    }

    /// Append all records inserted since the last flush. One writer, one
    /// append, at the end of a command.
    pub fn flush(&mut self) -> Result<()> {
        if self.pending.is_empty() {
            return Ok(());
        }
        if let Some(dir) = self.path.parent() {
            if !dir.as_os_str().is_empty() {
                std::fs::create_dir_all(dir).map_err(|e| Error::Cache {
                    path: self.path.display().to_string(),
                    source: e,
                })?;
            }
        }
        let mut file = std::fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(&self.path)
            .map_err(|e| Error::Cache {
                path: self.path.display().to_string(),
                source: e,
            })?;
        for line in self.pending.drain(..) {
            writeln!(file, "{line}").map_err(|e| Error::Cache {
                path: self.path.display().to_string(),
                source: e,
            })?;
        }
        Ok(())
    }

    /// Entries sorted by key, for deterministic sampling.
    pub fn entries_sorted(&self) -> Vec<(&String, &CachedRecord)> {
        let mut v: Vec<_> = self.entries.iter().collect();
        v.sort_by(|a, b| a.0.cmp(b.0));
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::voxel::VoxelSet;

    fn sample_record() -> MetricsRecord {
        let voxels = VoxelSet::new(0.05, vec![[0, 0, 0], [1, 2, -3]]).unwrap();
        MetricsRecord {
            design: PhalanxTriple::new(17, 17, 17),
            global_manipulability: 0.0123456789,
            workspace_volume: voxels.volume(),
            voxels,
            distal_sensitivity: 0.17,
        }
    }

    #[test]
    fn keys_distinguish_kind_design_and_settings() {
        let m = HandModel::default();
        let d = PhalanxTriple::new(17, 17, 17);
        let base = record_key("thumb", &d, &m, 5.0, 0.05);
        assert_eq!(base.len(), 64);
        assert_ne!(base, record_key("finger", &d, &m, 5.0, 0.05));
        assert_ne!(base, record_key("thumb", &PhalanxTriple::new(18, 17, 16), &m, 5.0, 0.05));
        assert_ne!(base, record_key("thumb", &d, &m, 3.0, 0.05));
        assert_ne!(base, record_key("thumb", &d, &m, 5.0, 0.025));
        let mut other = HandModel::default();
        other.geometry.d1 = 0.56;
        assert_ne!(base, record_key("thumb", &d, &other, 5.0, 0.05));
        // Stable across calls.
        assert_eq!(base, record_key("thumb", &d, &m, 5.0, 0.05));
    }

    #[test]
    fn round_trip_through_the_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cache.jsonl");
        let record = sample_record();

        let mut cache = RecordCache::open(&path).unwrap();
        cache.insert("k1".into(), CachedRecord::Thumb(record.clone()));
        cache.flush().unwrap();

        let reloaded = RecordCache::open(&path).unwrap();
        assert_eq!(reloaded.len(), 1);
        assert_eq!(reloaded.get_thumb("k1"), Some(&record));
        assert!(reloaded.get_finger("k1").is_none());
        assert!(reloaded.warnings().is_empty());
    }

    #[test]
    fn corrupt_lines_are_skipped_with_a_warning() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cache.jsonl");
        let record = sample_record();

        let mut cache = RecordCache::open(&path).unwrap();
        cache.insert("good".into(), CachedRecord::Thumb(record.clone()));
        cache.flush().unwrap();
        std::fs::OpenOptions::new()
            .append(true)
            .open(&path)
            .unwrap()
            .write_all(b"{ this is not json\n")
            .unwrap();
        cache.insert("good2".into(), CachedRecord::Thumb(record.clone()));
        cache.flush().unwrap();

        let reloaded = RecordCache::open(&path).unwrap();
        assert_eq!(reloaded.len(), 2);
        assert_eq!(reloaded.warnings().len(), 1);
        assert!(reloaded.warnings()[0].contains("corrupt"));
        assert_eq!(reloaded.get_thumb("good2"), Some(&record));
    }

    #[test]
    fn flush_appends_rather_than_rewrites() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cache.jsonl");
        let record = sample_record();

        let mut cache = RecordCache::open(&path).unwrap();
        cache.insert("a".into(), CachedRecord::Thumb(record.clone()));
        cache.flush().unwrap();
        let first = std::fs::read_to_string(&path).unwrap();

        let mut cache = RecordCache::open(&path).unwrap();
        cache.insert("b".into(), CachedRecord::Thumb(record));
        cache.flush().unwrap();
        let second = std::fs::read_to_string(&path).unwrap();
        assert!(second.starts_with(&first));
        assert_eq!(second.lines().count(), 2);
    }
}
