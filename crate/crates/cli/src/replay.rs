use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Result};
use clap::Args;
use serde::{Deserialize, Serialize};

use crate::manifest::{sha256_file, RunManifest};
use crate::{Command, Exit};

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ReplayArgs {
    pub manifest: PathBuf,
    /// Compare every re-written output byte for byte with the original.
    #[arg(long)]
    pub verify: bool,
}

/// Outputs of `m` whose bytes differ between `before` and the files now in `dir`.
pub fn differing(m: &RunManifest, before: &BTreeMap<String, Vec<u8>>, dir: &Path) -> Vec<String> {
    m.outputs.iter().filter(|f| fs::read(dir.join(f)).ok().as_ref() != before.get(*f)).cloned().collect()
}

pub fn run(a: &ReplayArgs, out: &Path) -> Result<Exit> {
    let m = RunManifest::load(&a.manifest)?;
    let command: Command = serde_json::from_value(m.config.clone())?;
    if matches!(command, Command::Replay(_)) {
        bail!("manifest {} records a replay", a.manifest.display());
    }
    if let (Some(path), Some(want)) = (command.scenario(), &m.scenario_sha256) {
        let have = sha256_file(path)?;
        if &have != want {
            bail!("scenario {} changed since the recorded run (sha256 {have}, manifest has {want})", path.display());
        }
    }
    let src = a.manifest.parent().unwrap_or(Path::new("."));
    let mut before = BTreeMap::new();
    if a.verify {
        for f in &m.outputs {
            if let Ok(bytes) = fs::read(src.join(f)) {
                before.insert(f.clone(), bytes);
            }
        }
    }
    let exit = crate::execute(&command, out)?;
    if a.verify {
        let bad = differing(&m, &before, out);
        if !bad.is_empty() {
            eprintln!("outputs differ from the manifest's run: {}", bad.join(", "));
            return Ok(Exit::Failed);
        }
        println!("{} outputs reproduced byte for byte", m.outputs.len());
    }
    Ok(exit)
}
