//! Run reports: a JSON document echoing the resolved configuration, listing
//! every check with the tolerance it used, every residual measured, and a
//! content-hashed manifest of emitted files. Wall time goes to stderr only,
//! keeping the JSON byte-reproducible across runs.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::fail::{CommandError, CommandResult};

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tol: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
}

#[derive(Serialize)]
pub struct RunReport {
    pub command: String,
    pub version: String,
    pub config: RunConfig,
    pub checks: Vec<Check>,
    pub residuals: BTreeMap<String, f64>,
    pub outputs: Vec<FileEntry>,
    pub pass: bool,
}

/// Accumulates checks, residuals, and emitted files during a command run.
pub struct Reporter {
    command: String,
    config: RunConfig,
    dir: PathBuf,
    prefix: String,
    checks: Vec<Check>,
    residuals: BTreeMap<String, f64>,
    outputs: Vec<FileEntry>,
}

impl Reporter {
    pub fn new(command: &str, config: RunConfig) -> CommandResult<Self> {
        let dir = PathBuf::from(&config.output.dir);
        std::fs::create_dir_all(&dir).map_err(|e| {
            CommandError::Config(format!("cannot create output dir {dir:?}: {e}"))
        })?;
        let prefix = config.output.prefix.clone();
        Ok(Reporter {
            command: command.to_string(),
            config,
            dir,
            prefix,
            checks: Vec::new(),
            residuals: BTreeMap::new(),
            outputs: Vec::new(),
        })
    }

    pub fn config(&self) -> &RunConfig {
        &self.config
    }

    /// Record a pass/fail gate; returns whether it passed.
    pub fn check(&mut self, name: &str, value: f64, tol: f64) -> bool {
        let pass = value.is_finite() && value <= tol;
        self.checks.push(Check {
            name: name.to_string(),
            value,
            tol,
            pass,
        });
        pass
    }

    /// Record a measured quantity that has no gate of its own.
    pub fn residual(&mut self, name: &str, value: f64) {
        self.residuals.insert(name.to_string(), value);
    }

    /// Absolute path for an emitted file with the configured prefix.
    pub fn path(&self, suffix: &str) -> PathBuf {
        self.dir.join(format!("{}_{}", self.prefix, suffix))
    }

    /// Write bytes to `<dir>/<prefix>_<suffix>` and record the content hash.
    pub fn emit(&mut self, suffix: &str, bytes: &[u8]) -> CommandResult<PathBuf> {
        let path = self.path(suffix);
        std::fs::write(&path, bytes)
            .map_err(|e| CommandError::Config(format!("cannot write {path:?}: {e}")))?;
        self.outputs.push(FileEntry {
            path: path.to_string_lossy().into_owned(),
            sha256: hex_digest(bytes),
        });
        Ok(path)
    }

    /// Seal the report, write it next to the other outputs, and print it to
    /// stdout. `failed` marks a numeric failure that was already reported
    /// through checks.
    pub fn finish(self) -> CommandResult<RunReport> {
        let pass = self.checks.iter().all(|c| c.pass);
        let report = RunReport {
            command: self.command,
            version: env!("CARGO_PKG_VERSION").to_string(),
            config: self.config,
            checks: self.checks,
            residuals: self.residuals,
            outputs: self.outputs,
            pass,
        };
        let json = serde_json::to_string_pretty(&report)
            .map_err(|e| CommandError::Config(format!("report serialization: {e}")))?;
        let path = PathBuf::from(&report.config.output.dir)
            .join(format!("{}_report.json", report.config.output.prefix));
        std::fs::write(&path, json.as_bytes())
            .map_err(|e| CommandError::Config(format!("cannot write {path:?}: {e}")))?;
        let mut stdout = std::io::stdout().lock();
        // ignore a broken pipe on stdout; the file copy is authoritative
        let _ = stdout.write_all(json.as_bytes());
        let _ = stdout.write_all(b"\n");
        Ok(report)
    }
}

/// Seal the report and convert failed checks into the numeric exit path.
pub fn finish_gate(rep: Reporter) -> CommandResult<()> {
    let report = rep.finish()?;
    if report.pass {
        Ok(())
    } else {
        let failed: Vec<&str> = report
            .checks
            .iter()
            .filter(|c| !c.pass)
            .map(|c| c.name.as_str())
            .collect();
        Err(CommandError::Numeric(format!(
            "checks failed: {}",
            failed.join(", ")
        )))
    }
}

pub fn hex_digest(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    let out = h.finalize();
    let mut s = String::with_capacity(64);
    for b in out {
        s.push_str(&format!("{b:02x}"));
    }
    s
}

/// Hash an existing file, for manifests over files written incrementally.
pub fn hash_file(path: &Path) -> CommandResult<String> {
    let bytes = std::fs::read(path)
        .map_err(|e| CommandError::Config(format!("cannot reread {path:?}: {e}")))?;
    Ok(hex_digest(&bytes))
}
