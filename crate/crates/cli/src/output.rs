//! Output directory handling and the run manifest.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::Failure;

fn hex(bytes: &[u8]) -> String {
    bytes.iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex(&Sha256::digest(bytes))
}

#[derive(Serialize)]
struct InputDigest {
    path: String,
    sha256: String,
}

/// Manifest written next to a command's outputs. Holds no timestamps or
/// absolute output paths so that equal runs produce equal bytes.
#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    seed: u64,
    config_sha256: String,
    config: &'a RunConfig,
    inputs: Vec<InputDigest>,
    outputs: Vec<String>,
}

/// Collects the files a command writes into one directory.
pub struct OutputDir {
    root: PathBuf,
    written: Vec<String>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self, Failure> {
        std::fs::create_dir_all(root)
            .map_err(|e| Failure::config(format!("cannot create output directory {}: {e}", root.display())))?;
        Ok(Self {
            root: root.to_owned(),
            written: Vec::new(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn write(&mut self, name: &str, contents: impl AsRef<[u8]>) -> Result<(), Failure> {
        let path = self.path(name);
        std::fs::write(&path, contents)
            .map_err(|e| Failure::config(format!("cannot write {}: {e}", path.display())))?;
        self.written.push(name.to_owned());
        Ok(())
    }

    /// Registers a file that was written through [`OutputDir::path`].
    pub fn record(&mut self, name: &str) {
        self.written.push(name.to_owned());
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), Failure> {
        let mut text = serde_json::to_string_pretty(value).map_err(persgrad::Error::from)?;
        text.push('\n');
        self.write(name, text)
    }

    pub fn finish(mut self, command: &str, cfg: &RunConfig, inputs: &[PathBuf]) -> Result<(), Failure> {
        let config_json = serde_json::to_vec(cfg).map_err(persgrad::Error::from)?;
        let mut digests = Vec::new();
        for p in inputs {
            let bytes = std::fs::read(p).map_err(|e| Failure::config(format!("cannot read {}: {e}", p.display())))?;
            digests.push(InputDigest {
                path: p.display().to_string(),
                sha256: sha256_hex(&bytes),
            });
        }
        self.written.sort();
        let manifest = Manifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command,
            seed: cfg.seed(),
            config_sha256: sha256_hex(&config_json),
            config: cfg,
            inputs: digests,
            outputs: self.written.clone(),
        };
        self.write_json("manifest.json", &manifest)
    }
}
