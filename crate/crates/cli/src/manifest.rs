//! Run manifests: one JSON object per line, appended after every run.

use std::fs::OpenOptions;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::commands::Command;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Entry {
    pub subcommand: String,
    pub args: Command,
    pub seed: Option<u64>,
    pub version: String,
    pub started: DateTime<Utc>,
    pub finished: DateTime<Utc>,
    pub outputs: Vec<PathBuf>,
    pub stdout: String,
    pub exit_code: i32,
}

impl Entry {
    pub fn new(
        command: &Command,
        started: DateTime<Utc>,
        finished: DateTime<Utc>,
        outputs: Vec<PathBuf>,
        stdout: String,
        exit_code: i32,
    ) -> Self {
        Entry {
            subcommand: command.name().to_string(),
            args: command.clone(),
            seed: command.seed(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            started,
            finished,
            outputs,
            stdout,
            exit_code,
        }
    }
}

pub fn append(path: &Path, entry: &Entry) -> anyhow::Result<()> {
    let mut file = OpenOptions::new().create(true).append(true).open(path)?;
    let mut line = serde_json::to_string(entry)?;
    line.push('\n');
    file.write_all(line.as_bytes())?;
    Ok(())
}

pub fn read(path: &Path) -> anyhow::Result<Vec<Entry>> {
    let file =
        std::fs::File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    let mut entries = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let entry: Entry = serde_json::from_str(&line)
            .with_context(|| format!("{}: line {}", path.display(), i + 1))?;
        entries.push(entry);
    }
    if entries.is_empty() {
        bail!("{} has no entries", path.display());
    }
    Ok(entries)
}
