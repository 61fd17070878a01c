//! Run manifests: enough to re-run a command and find what it wrote.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const MANIFEST_FORMAT: &str = "sinflow-manifest/1";
pub const REPORT_FORMAT: &str = "sinflow-report/1";
pub const CUTS_FORMAT: &str = "sinflow-cuts/1";
pub const CHECK_FORMAT: &str = "sinflow-check/1";
pub const SWEEP_FORMAT: &str = "sinflow-sweep/1";
pub const LOG_FORMAT: &str = "sinflow-log/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub format: String,
    pub command: String,
    /// SHA-256 of the input scenario file, if the command read one.
    pub scenario_sha256: Option<String>,
    /// The parsed command; `replay` feeds it back unchanged.
    pub config: serde_json::Value,
    pub seeds: Vec<u64>,
    pub versions: BTreeMap<String, String>,
    /// Output file names, relative to the manifest's directory.
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &str, config: serde_json::Value, scenario_sha256: Option<String>, seeds: Vec<u64>) -> Self {
        let mut versions = BTreeMap::new();
        versions.insert("sinflow-cli".into(), env!("CARGO_PKG_VERSION").into());
        versions.insert("scenario-schema".into(), sinflow::scenario::SCHEMA_VERSION.into());
        for f in [MANIFEST_FORMAT, REPORT_FORMAT, CUTS_FORMAT, CHECK_FORMAT, SWEEP_FORMAT, LOG_FORMAT] {
            let (k, v) = f.split_once('/').expect("format tag");
            versions.insert(k.into(), v.into());
        }
        RunManifest {
            format: MANIFEST_FORMAT.into(),
            command: command.into(),
            scenario_sha256,
            config,
            seeds,
            versions,
            outputs: Vec::new(),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading manifest {}", path.display()))?;
        let m: RunManifest = serde_json::from_str(&text).with_context(|| format!("parsing manifest {}", path.display()))?;
        if m.format != MANIFEST_FORMAT {
            bail!("manifest {} has format {:?}, expected {MANIFEST_FORMAT:?}", path.display(), m.format);
        }
        Ok(m)
    }
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Collects output files for one command under a common name.
pub struct Outputs {
    pub dir: PathBuf,
    pub name: String,
    pub manifest: RunManifest,
}

impl Outputs {
    pub fn new(dir: &Path, name: &str, manifest: RunManifest) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))?;
        Ok(Outputs { dir: dir.to_path_buf(), name: name.to_string(), manifest })
    }

    /// `<name>.<command>.manifest.json`, so commands sharing a name do not clash.
    pub fn manifest_name(&self) -> String {
        format!("{}.{}.manifest.json", self.name, self.manifest.command)
    }

    pub fn path(&self, suffix: &str) -> PathBuf {
        self.dir.join(format!("{}{suffix}", self.name))
    }

    pub fn write(&mut self, suffix: &str, contents: &str) -> Result<PathBuf> {
        let path = self.path(suffix);
        fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
        self.manifest.outputs.push(format!("{}{suffix}", self.name));
        Ok(path)
    }

    /// Write the manifest last so that it lists every output.
    pub fn finish(self) -> Result<PathBuf> {
        let path = self.dir.join(self.manifest_name());
        let text = serde_json::to_string_pretty(&self.manifest)? + "\n";
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }
}
