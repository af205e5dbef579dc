//! Atomic artifact writes and per-stage manifests.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::hex;

/// Write through a temp file in the destination directory, then rename.
pub fn write_atomic(path: &Path, fill: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> anyhow::Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).with_context(|| format!("temp file in {}", dir.display()))?;
    {
        let mut w = BufWriter::new(tmp.as_file_mut());
        fill(&mut w).with_context(|| format!("writing {}", path.display()))?;
        w.flush()?;
    }
    tmp.as_file().sync_all()?;
    tmp.persist(path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

pub fn sha256_file(path: &Path) -> anyhow::Result<String> {
    let mut h = Sha256::new();
    let mut f = fs::File::open(path).with_context(|| format!("reading {}", path.display()))?;
    io::copy(&mut f, &mut h)?;
    Ok(hex(&h.finalize()))
}

fn count_lines(path: &Path) -> anyhow::Result<u64> {
    let data = fs::read(path)?;
    Ok(data.iter().filter(|&&b| b == b'\n').count() as u64)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputRecord {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputRecord {
    pub path: String,
    pub sha256: String,
    pub rows: u64,
}

/// Everything needed to trace a stage's outputs back to exact inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub stage: String,
    pub version: String,
    pub config_sha256: String,
    pub inputs: Vec<InputRecord>,
    pub outputs: Vec<OutputRecord>,
    pub stats: BTreeMap<String, serde_json::Value>,
}

pub struct ManifestBuilder {
    base: PathBuf,
    manifest: Manifest,
}

impl ManifestBuilder {
    /// Paths are recorded relative to `base` (the config directory) when
    /// they live below it.
    pub fn new(stage: &str, base: &Path, config_sha256: &str) -> Self {
        Self {
            base: base.to_path_buf(),
            manifest: Manifest {
                stage: stage.into(),
                version: env!("CARGO_PKG_VERSION").into(),
                config_sha256: config_sha256.into(),
                inputs: Vec::new(),
                outputs: Vec::new(),
                stats: BTreeMap::new(),
            },
        }
    }

    fn display(&self, p: &Path) -> String {
        p.strip_prefix(&self.base)
            .unwrap_or(p)
            .to_string_lossy()
            .replace('\\', "/")
    }

    pub fn input(&mut self, path: &Path) -> anyhow::Result<()> {
        let rec = InputRecord {
            path: self.display(path),
            sha256: sha256_file(path)?,
        };
        self.manifest.inputs.push(rec);
        Ok(())
    }

    /// Every regular file below `root`, in path order.
    pub fn input_tree(&mut self, root: &Path) -> anyhow::Result<()> {
        let mut files: Vec<PathBuf> = walkdir::WalkDir::new(root)
            .follow_links(true)
            .into_iter()
            .filter_map(Result::ok)
            .filter(|e| e.file_type().is_file())
            .map(|e| e.into_path())
            .collect();
        files.sort();
        for f in files {
            self.input(&f)?;
        }
        Ok(())
    }

    pub fn output(&mut self, path: &Path) -> anyhow::Result<()> {
        let rec = OutputRecord {
            path: self.display(path),
            sha256: sha256_file(path)?,
            rows: count_lines(path)?,
        };
        self.manifest.outputs.push(rec);
        Ok(())
    }

    pub fn stat(&mut self, key: &str, value: impl Into<serde_json::Value>) {
        self.manifest.stats.insert(key.into(), value.into());
    }

    pub fn write(self, path: &Path) -> anyhow::Result<Manifest> {
        let json = serde_json::to_vec_pretty(&self.manifest)?;
        write_atomic(path, |w| {
            w.write_all(&json)?;
            w.write_all(b"\n")
        })?;
        Ok(self.manifest)
    }
}

pub fn read_manifest(path: &Path) -> anyhow::Result<Manifest> {
    let data = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_slice(&data).with_context(|| format!("parsing {}", path.display()))
}
