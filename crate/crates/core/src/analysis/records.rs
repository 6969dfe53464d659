//! Append-only `records.jsonl` persistence.

use std::collections::BTreeSet;
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::RunRecord;
use crate::error::{Error, IoContext, Result};
use crate::paths::read_string;
use crate::prompt_repair::PromptLevel;

/// Identity of a run for resume purposes.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RunKey {
    pub case_id: String,
    pub backend_identity: String,
    pub prompt_level: Option<PromptLevel>,
}

fn open_append(path: &Path) -> Result<File> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).at(parent)?;
    }
    OpenOptions::new().create(true).append(true).open(path).at(path)
}

pub fn append_record(path: &Path, record: &RunRecord) -> Result<()> {
    let mut f = open_append(path)?;
    let line = serde_json::to_string(record).expect("records serialize");
    writeln!(f, "{line}").at(path)
}

/// Reads every record. A torn final line (no trailing newline, unparsable) is skipped.
pub fn read_records(path: &Path) -> Result<Vec<RunRecord>> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let text = read_string(path)?;
    let complete = text.ends_with('\n');
    let lines: Vec<&str> = text.lines().collect();
    let mut out = Vec::with_capacity(lines.len());
    for (i, line) in lines.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<RunRecord>(line) {
            Ok(r) => out.push(r),
            Err(_) if i + 1 == lines.len() && !complete => break,
            Err(e) => return Err(Error::malformed(path, format!("line {}: {e}", i + 1))),
        }
    }
    Ok(out)
}

pub fn recorded_keys(path: &Path) -> Result<BTreeSet<RunKey>> {
    Ok(read_records(path)?.iter().map(RunRecord::key).collect())
}

/// Serializes appends from concurrent runs; each record is flushed as soon as it is written.
#[derive(Debug)]
pub struct RecordSink {
    path: PathBuf,
    file: Mutex<File>,
}

impl RecordSink {
    pub fn open(path: &Path) -> Result<Self> {
        let file = open_append(path)?;
        // Drop a torn line left by an interrupted writer.
        let text = std::fs::read(path).at(path)?;
        if !text.is_empty() && !text.ends_with(b"\n") {
            let keep = text.iter().rposition(|b| *b == b'\n').map_or(0, |i| i + 1);
            file.set_len(keep as u64).at(path)?;
        }
        Ok(RecordSink { path: path.to_path_buf(), file: Mutex::new(file) })
    }

    pub fn append(&self, record: &RunRecord) -> Result<()> {
        let line = serde_json::to_string(record).expect("records serialize");
        let mut f = self.file.lock().expect("sink lock");
        writeln!(f, "{line}").at(&self.path)?;
        f.flush().at(&self.path)
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}
