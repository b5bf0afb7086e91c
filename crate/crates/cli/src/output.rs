//! Output-directory handling: result files under `--out` plus a manifest
//! recording the fully resolved configuration.
//!
//! Result files never contain timestamps, so identical invocations produce
//! byte-identical files; the manifest carries the wall-clock time.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::Context;
use gftbench_harness::kv::format_kv;

use crate::CliResult;

/// Where a command's results go: files under a directory, or stdout.
pub struct Sink {
    out: Option<PathBuf>,
}

impl Sink {
    pub fn new(out: Option<PathBuf>) -> CliResult<Self> {
        if let Some(dir) = &out {
            std::fs::create_dir_all(dir)
                .with_context(|| format!("creating output directory {}", dir.display()))
                .map_err(crate::CliError::from)?;
        }
        Ok(Self { out })
    }

    pub fn dir(&self) -> Option<&Path> {
        self.out.as_deref()
    }

    /// Write a named result file, or dump it to stdout when no directory
    /// was requested.
    pub fn emit(&self, name: &str, content: &str) -> CliResult<()> {
        match &self.out {
            Some(dir) => {
                let path = dir.join(name);
                std::fs::write(&path, content)
                    .with_context(|| format!("writing {}", path.display()))
                    .map_err(crate::CliError::from)?;
            }
            None => print!("{content}"),
        }
        Ok(())
    }

    /// Write `manifest.txt` beside the results: the command, every
    /// resolved setting, and the only timestamp of the run.
    pub fn manifest(&self, command: &str, settings: &[(String, String)]) -> CliResult<()> {
        let Some(dir) = &self.out else {
            return Ok(());
        };
        let unix = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        let mut pairs: Vec<(String, String)> = vec![("command".into(), command.into())];
        pairs.extend(settings.iter().cloned());
        pairs.push(("created_unix".into(), unix.to_string()));
        let path = dir.join("manifest.txt");
        std::fs::write(&path, format_kv(&pairs))
            .with_context(|| format!("writing {}", path.display()))
            .map_err(crate::CliError::from)
    }
}

/// Settings accumulator so every command records what it actually ran
/// with.
#[derive(Default)]
pub struct Manifest {
    pairs: Vec<(String, String)>,
}

impl Manifest {
    pub fn push(&mut self, key: &str, value: impl ToString) {
        self.pairs.push((key.to_string(), value.to_string()));
    }

    pub fn pairs(&self) -> &[(String, String)] {
        &self.pairs
    }
}
