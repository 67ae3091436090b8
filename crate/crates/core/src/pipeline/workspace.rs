//! Artifact layout under the work directory and stage manifests.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, InferenceMode};
use crate::boost_learning::Strategy;
use crate::seed::sha256_hex;
use crate::seq2seq::Direction;
use crate::{Error, Result};

#[derive(Clone, Debug)]
pub struct Workspace {
    pub root: PathBuf,
}

impl Workspace {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn data(&self, split: &str) -> PathBuf {
        self.root.join("data").join(format!("{split}.tsv"))
    }

    pub fn edits(&self, split: &str) -> PathBuf {
        self.root.join("data").join(format!("{split}.edits.jsonl"))
    }

    pub fn native(&self) -> PathBuf {
        self.root.join("data").join("native.txt")
    }

    pub fn vocab(&self) -> PathBuf {
        self.root.join("vocab.txt")
    }

    pub fn lm(&self) -> PathBuf {
        self.root.join("lm.bin")
    }

    pub fn model(&self, strategy: Strategy, dir: Direction, member: usize) -> PathBuf {
        self.root
            .join("models")
            .join(format!("{strategy}-{dir}-{member}.ckpt"))
    }

    pub fn generator(&self, strategy: Strategy, dir: Direction, member: usize) -> PathBuf {
        self.root
            .join("models")
            .join(format!("{strategy}-{dir}-{member}.gen.ckpt"))
    }

    pub fn candidates(&self, strategy: Strategy, dir: Direction, member: usize) -> PathBuf {
        self.root
            .join("candidates")
            .join(format!("{strategy}-{dir}-{member}.jsonl"))
    }

    pub fn system_name(strategy: Strategy, mode: InferenceMode) -> String {
        format!("{strategy}-{mode}")
    }

    pub fn output(&self, system: &str) -> PathBuf {
        self.root.join("outputs").join(format!("{system}.txt"))
    }

    pub fn trace(&self, system: &str) -> PathBuf {
        self.root
            .join("outputs")
            .join(format!("{system}.trace.jsonl"))
    }

    pub fn report(&self, name: &str) -> PathBuf {
        self.root.join("reports").join(format!("{name}.json"))
    }

    pub fn report_table(&self, name: &str) -> PathBuf {
        self.root.join("reports").join(format!("{name}.txt"))
    }

    pub fn manifest(&self, stage: &str) -> PathBuf {
        self.root.join("manifests").join(format!("{stage}.json"))
    }

    /// Path as recorded in manifests: relative to the root when inside it.
    pub fn display(&self, path: &Path) -> String {
        path.strip_prefix(&self.root)
            .unwrap_or(path)
            .display()
            .to_string()
    }
}

pub(crate) fn require(path: &Path) -> Result<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(Error::StageDependency(path.to_path_buf()))
    }
}

pub(crate) fn refuse_overwrite(paths: &[PathBuf], force: bool) -> Result<()> {
    if force {
        return Ok(());
    }
    match paths.iter().find(|p| p.exists()) {
        Some(p) => Err(Error::ArtifactExists(p.clone())),
        None => Ok(()),
    }
}

pub(crate) fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(Error::io(format!("create {}", dir.display())))?;
    }
    Ok(())
}

pub(crate) fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    ensure_parent(path)?;
    std::fs::write(path, contents).map_err(Error::io(format!("write {}", path.display())))
}

fn file_hash(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(Error::io(format!("read {}", path.display())))?;
    Ok(sha256_hex(&bytes))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub stage: String,
    pub tool_version: String,
    pub config_hash: String,
    pub seed: u64,
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
}

impl Manifest {
    pub fn write(
        ws: &Workspace,
        stage: &str,
        cfg: &ExperimentConfig,
        inputs: &[PathBuf],
        outputs: &[PathBuf],
    ) -> Result<Manifest> {
        let hashes = |paths: &[PathBuf]| -> Result<BTreeMap<String, String>> {
            paths
                .iter()
                .filter(|p| p.exists())
                .map(|p| Ok((ws.display(p), file_hash(p)?)))
                .collect()
        };
        let m = Manifest {
            stage: stage.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config_hash: cfg.hash(),
            seed: cfg.seed,
            inputs: hashes(inputs)?,
            outputs: hashes(outputs)?,
        };
        let text =
            serde_json::to_string_pretty(&m).map_err(|e| Error::Format(e.to_string()))? + "\n";
        write_file(&ws.manifest(stage), text.as_bytes())?;
        Ok(m)
    }

    pub fn read(path: &Path) -> Result<Manifest> {
        let text =
            std::fs::read_to_string(path).map_err(Error::io(format!("read {}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::Format(e.to_string()))
    }
}
