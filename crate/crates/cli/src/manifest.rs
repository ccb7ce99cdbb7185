use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::commands::RunConfig;

pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Running,
    Complete,
    Failed,
}

/// Everything needed to reproduce a run: the fully resolved configuration and
/// digests of what went in and came out. Contains no timestamps or host data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub seed: u64,
    pub config: RunConfig,
    /// File name (as given) to SHA-256 of its contents.
    pub inputs: BTreeMap<String, String>,
    /// Output file name relative to the output directory to SHA-256.
    pub outputs: BTreeMap<String, String>,
    pub status: RunStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<RunManifest> {
        let text = fs::read_to_string(path).with_context(|| format!("reading manifest {}", path.display()))?;
        let manifest = serde_json::from_str(&text).with_context(|| format!("parsing manifest {}", path.display()))?;
        Ok(manifest)
    }
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Writes the manifest up front, hands out output files, and rewrites the
/// manifest with digests when the run ends.
pub struct RunRecorder {
    dir: PathBuf,
    manifest: RunManifest,
    files: Vec<String>,
}

impl RunRecorder {
    pub fn begin(dir: &Path, seed: u64, config: RunConfig, inputs: BTreeMap<String, String>) -> Result<RunRecorder> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let recorder = RunRecorder {
            dir: dir.to_path_buf(),
            manifest: RunManifest {
                tool: "cosserat".to_string(),
                version: env!("CARGO_PKG_VERSION").to_string(),
                seed,
                config,
                inputs,
                outputs: BTreeMap::new(),
                status: RunStatus::Running,
                error: None,
            },
            files: Vec::new(),
        };
        recorder.write_manifest()?;
        Ok(recorder)
    }

    pub fn create(&mut self, name: &str) -> Result<BufWriter<File>> {
        let path = self.dir.join(name);
        let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        if !self.files.iter().any(|f| f == name) {
            self.files.push(name.to_string());
        }
        Ok(BufWriter::new(file))
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut out = self.create(name)?;
        serde_json::to_writer_pretty(&mut out, value)?;
        writeln!(out)?;
        out.flush()?;
        Ok(())
    }

    pub fn finish(mut self, outcome: &Result<()>) -> Result<()> {
        for name in &self.files {
            let digest = sha256_file(&self.dir.join(name))?;
            self.manifest.outputs.insert(name.clone(), digest);
        }
        match outcome {
            Ok(()) => self.manifest.status = RunStatus::Complete,
            Err(e) => {
                self.manifest.status = RunStatus::Failed;
                self.manifest.error = Some(format!("{e:#}"));
            }
        }
        self.write_manifest()
    }

    fn write_manifest(&self) -> Result<()> {
        let path = self.dir.join(MANIFEST_NAME);
        let mut text = serde_json::to_string_pretty(&self.manifest)?;
        text.push('\n');
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
    }
}
