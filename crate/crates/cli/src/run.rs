//! Artifact sink: every file a command reads is hashed, every file it writes
//! is recorded, and `manifest.json` ties them together.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

pub const MANIFEST_NAME: &str = "manifest.json";
pub const TOOL: &str = "geodesica";

/// A named output file held in memory until it is written.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: &'static str,
    pub bytes: Vec<u8>,
}

impl Artifact {
    /// Pretty JSON with a trailing newline.
    pub fn json(name: &'static str, value: &impl Serialize) -> CliResult<Self> {
        let mut bytes = serde_json::to_vec_pretty(value).map_err(geodesica::Error::from)?;
        bytes.push(b'\n');
        Ok(Artifact { name, bytes })
    }

    pub fn csv(name: &'static str, write: impl FnOnce(&mut Vec<u8>) -> geodesica::Result<()>) -> CliResult<Self> {
        let mut bytes = Vec::new();
        write(&mut bytes)?;
        Ok(Artifact { name, bytes })
    }

    pub fn text(name: &'static str, text: String) -> Self {
        Artifact { name, bytes: text.into_bytes() }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputRecord {
    /// As given on the command line or in the config.
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputRecord {
    pub name: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// Arguments after the program name; replayed verbatim by `rerun`.
    pub args: Vec<String>,
    /// Directory relative input paths were resolved against.
    pub working_dir: String,
    pub parameters: serde_json::Value,
    pub seed: Option<u64>,
    pub inputs: Vec<InputRecord>,
    pub outputs: Vec<OutputRecord>,
}

pub struct Run {
    out_dir: PathBuf,
    manifest: Manifest,
}

impl Run {
    pub fn new(command: &str, args: &[String], out_dir: impl Into<PathBuf>) -> Self {
        let working_dir = std::env::current_dir().map(|d| d.display().to_string()).unwrap_or_default();
        Run {
            out_dir: out_dir.into(),
            manifest: Manifest {
                tool: TOOL.into(),
                version: env!("CARGO_PKG_VERSION").into(),
                command: command.into(),
                args: args.to_vec(),
                working_dir,
                parameters: serde_json::Value::Null,
                seed: None,
                inputs: Vec::new(),
                outputs: Vec::new(),
            },
        }
    }

    pub fn out_dir(&self) -> &Path {
        &self.out_dir
    }

    pub fn set_out_dir(&mut self, dir: impl Into<PathBuf>) {
        self.out_dir = dir.into();
    }

    pub fn set_parameters(&mut self, params: &impl Serialize) -> CliResult<()> {
        self.manifest.parameters = serde_json::to_value(params).map_err(geodesica::Error::from)?;
        Ok(())
    }

    pub fn set_seed(&mut self, seed: u64) {
        self.manifest.seed = Some(seed);
    }

    /// Reads and hashes an input file. The same path is recorded once.
    pub fn read_input(&mut self, path: &Path) -> CliResult<Vec<u8>> {
        let bytes = fs::read(path).map_err(CliError::io(path))?;
        let record = InputRecord { path: path.display().to_string(), sha256: sha256_hex(&bytes) };
        if !self.manifest.inputs.contains(&record) {
            self.manifest.inputs.push(record);
        }
        Ok(bytes)
    }

    pub fn write(&mut self, artifact: &Artifact) -> CliResult<()> {
        if self.manifest.outputs.iter().any(|o| o.name == artifact.name) {
            return Err(CliError::Config(format!("two stages write `{}`", artifact.name)));
        }
        fs::create_dir_all(&self.out_dir).map_err(CliError::io(&self.out_dir))?;
        let path = self.out_dir.join(artifact.name);
        fs::write(&path, &artifact.bytes).map_err(CliError::io(&path))?;
        self.manifest.outputs.push(OutputRecord { name: artifact.name.into(), sha256: sha256_hex(&artifact.bytes) });
        Ok(())
    }

    pub fn write_all(&mut self, artifacts: &[Artifact]) -> CliResult<()> {
        artifacts.iter().try_for_each(|a| self.write(a))
    }

    /// Writes `manifest.json` unless nothing was produced. Returns the
    /// recorded outputs.
    pub fn finish(self) -> CliResult<Vec<OutputRecord>> {
        if self.manifest.outputs.is_empty() {
            return Ok(Vec::new());
        }
        let artifact = Artifact::json(MANIFEST_NAME, &self.manifest)?;
        let path = self.out_dir.join(MANIFEST_NAME);
        fs::write(&path, &artifact.bytes).map_err(CliError::io(&path))?;
        Ok(self.manifest.outputs)
    }
}

pub fn read_manifest(path: &Path) -> CliResult<Manifest> {
    let bytes = fs::read(path).map_err(CliError::io(path))?;
    serde_json::from_slice(&bytes).map_err(|e| CliError::input(path)(e.into()))
}
