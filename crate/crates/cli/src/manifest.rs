//! Reproducibility manifests and content hashes.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use trafficsim::io::{to_document, SchemaKind};

/// `io::Write` sink that only hashes.
#[derive(Default)]
pub struct HashWriter(Sha256);

impl HashWriter {
    pub fn hex(self) -> String {
        hex::encode(self.0.finalize())
    }
}

impl Write for HashWriter {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        self.0.update(buf);
        Ok(buf.len())
    }

    fn flush(&mut self) -> io::Result<()> {
        Ok(())
    }
}

pub fn sha256_bytes(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn sha256_file(path: &Path) -> io::Result<String> {
    let mut h = HashWriter::default();
    io::copy(&mut File::open(path)?, &mut h)?;
    Ok(h.hex())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub command_line: Vec<String>,
    pub command: String,
    /// Effective options in config-file form; `--config` accepts this
    /// manifest to replay the run.
    pub config: BTreeMap<String, serde_json::Value>,
    /// SHA-256 of the canonical JSON of `config`.
    pub config_hash: String,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub schema_versions: BTreeMap<String, u32>,
    /// SHA-256 per input path.
    pub inputs: BTreeMap<String, String>,
    /// SHA-256 per output path.
    pub outputs: BTreeMap<String, String>,
    pub duration_s: f64,
    pub steps_per_second: Option<f64>,
    pub vehicle_updates_per_second: Option<f64>,
}

impl RunManifest {
    pub fn new(command_line: Vec<String>, command: &str, options: serde_json::Value) -> Self {
        let config = BTreeMap::from([(command.to_string(), options)]);
        let config_hash = sha256_bytes(serde_json::to_string(&config).expect("json").as_bytes());
        Self {
            command_line,
            command: command.into(),
            config,
            config_hash,
            seed: None,
            threads: None,
            schema_versions: SchemaKind::ALL.iter().map(|k| (k.name().to_string(), k.version())).collect(),
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
            duration_s: 0.0,
            steps_per_second: None,
            vehicle_updates_per_second: None,
        }
    }

    pub fn add_input(&mut self, path: &Path) -> io::Result<()> {
        self.inputs.insert(path.display().to_string(), sha256_file(path)?);
        Ok(())
    }

    pub fn add_output(&mut self, path: &Path) -> io::Result<()> {
        self.outputs.insert(path.display().to_string(), sha256_file(path)?);
        Ok(())
    }

    pub fn to_document(&self) -> String {
        to_document(SchemaKind::RunManifest, self)
    }
}

/// `<output>.manifest.json`.
pub fn default_path(output: &Path) -> PathBuf {
    let mut name = output.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}
