//! Shell out to an external sampler.
//!
//! The model is written in the coordinate text format; the program gets the
//! model path and a result path, substituted for `{qubo}` and `{out}` in its
//! arguments. The result file holds one bitstring of `0`/`1` per line;
//! anything after the first comma or whitespace is ignored.

use std::path::PathBuf;
use std::process::Command;

use super::{SampleSet, Sampler};
use crate::error::{Error, Result};
use crate::qubo::{write_qubo, QuboModel};

#[derive(Debug, Clone)]
pub struct ExternalSampler {
    pub program: String,
    pub args: Vec<String>,
    pub workdir: PathBuf,
}

impl ExternalSampler {
    pub fn new(program: impl Into<String>, args: Vec<String>, workdir: impl Into<PathBuf>) -> Self {
        ExternalSampler { program: program.into(), args, workdir: workdir.into() }
    }
}

pub fn parse_bitstrings(text: &str, n: usize) -> Result<Vec<Vec<u8>>> {
    let mut out = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') || t.starts_with("bitstring") {
            continue;
        }
        let field = t.split(|c: char| c == ',' || c.is_whitespace()).next().unwrap_or("");
        let bits: Option<Vec<u8>> = field
            .chars()
            .map(|c| match c {
                '0' => Some(0),
                '1' => Some(1),
                _ => None,
            })
            .collect();
        match bits {
            Some(b) if b.len() == n => out.push(b),
            _ => {
                return Err(Error::Parse {
                    line: k + 1,
                    column: 1,
                    message: format!("expected a {n}-bit 0/1 string, got {field:?}"),
                })
            }
        }
    }
    Ok(out)
}

impl Sampler for ExternalSampler {
    fn sample(&self, model: &QuboModel, seed: u64) -> Result<SampleSet> {
        std::fs::create_dir_all(&self.workdir).map_err(|e| Error::io(self.workdir.display().to_string(), e))?;
        let qpath = self.workdir.join(format!("master-{seed}.qubo"));
        let opath = self.workdir.join(format!("master-{seed}.out"));
        std::fs::write(&qpath, write_qubo(model)).map_err(|e| Error::io(qpath.display().to_string(), e))?;
        let args: Vec<String> = self
            .args
            .iter()
            .map(|a| a.replace("{qubo}", &qpath.display().to_string()).replace("{out}", &opath.display().to_string()))
            .collect();
        let status = Command::new(&self.program)
            .args(&args)
            .status()
            .map_err(|e| Error::External(format!("cannot start {}: {e}", self.program)))?;
        if !status.success() {
            return Err(Error::External(format!("{} exited with {status}", self.program)));
        }
        let text = std::fs::read_to_string(&opath).map_err(|e| Error::io(opath.display().to_string(), e))?;
        let reads = parse_bitstrings(&text, model.n)?;
        if reads.is_empty() {
            return Err(Error::External(format!("{} returned no samples", self.program)));
        }
        Ok(SampleSet::from_reads(model, reads, seed))
    }

    fn name(&self) -> &'static str {
        "external"
    }
}
