//! Disposable script execution with log capture and output snapshots.

mod capture;
mod container;
mod local;

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

pub use capture::{truncate_tail, TailLog, DEFAULT_LOG_CAP};
pub use container::{ContainerBackend, CONTAINER_WORKDIR};
pub use local::LocalBackend;

use crate::corpus::RuntimeSpec;
use crate::error::{Error, Result};
use crate::paths::{hash_file, list_files, RelPath};

/// Slack allowed beyond a timeout before a run counts as overdue.
pub const GRACE: Duration = Duration::from_secs(5);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExitStatus {
    Success,
    NonZeroExit(i32),
    Timeout,
    LaunchFailure,
}

impl ExitStatus {
    pub fn is_success(&self) -> bool {
        matches!(self, ExitStatus::Success)
    }
}

impl std::fmt::Display for ExitStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ExitStatus::Success => f.write_str("success"),
            ExitStatus::NonZeroExit(c) => write!(f, "exit status {c}"),
            ExitStatus::Timeout => f.write_str("timeout"),
            ExitStatus::LaunchFailure => f.write_str("launch failure"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mount {
    pub host: PathBuf,
    pub target: String,
    pub read_only: bool,
}

#[derive(Debug, Clone)]
pub struct ExecutionRequest {
    pub workspace: PathBuf,
    pub command: Vec<String>,
    pub timeout: Duration,
    pub runtime_spec: RuntimeSpec,
    pub extra_mounts: Vec<Mount>,
    pub env_vars: BTreeMap<String, String>,
}

impl ExecutionRequest {
    pub fn new(workspace: &Path, command: Vec<String>, runtime_spec: &RuntimeSpec) -> Self {
        ExecutionRequest {
            workspace: workspace.to_path_buf(),
            command,
            timeout: Duration::from_secs(runtime_spec.script_timeout),
            runtime_spec: runtime_spec.clone(),
            extra_mounts: Vec::new(),
            env_vars: BTreeMap::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.timeout.is_zero() {
            return Err(Error::InvalidConfig("timeout must be positive".into()));
        }
        if self.command.is_empty() {
            return Err(Error::InvalidConfig("empty command".into()));
        }
        if !self.workspace.is_dir() {
            return Err(Error::PathViolation(format!("workspace {} does not exist", self.workspace.display())));
        }
        let mut seen = BTreeSet::new();
        for m in &self.extra_mounts {
            if !m.target.starts_with('/') {
                return Err(Error::MountDenied(format!("mount target {:?} is not absolute", m.target)));
            }
            if !seen.insert(m.target.as_str()) {
                return Err(Error::MountDenied(format!("mount target {:?} used twice", m.target)));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecutionResult {
    pub exit_status: ExitStatus,
    pub combined_log: String,
    pub wall_time: f64,
    /// Files created or modified by the run, with their hashes.
    pub produced_files: Vec<(RelPath, String)>,
}

/// Execution substrate. Implementations own no per-call mutable state.
pub trait Executor: Send + Sync {
    fn name(&self) -> &str;
    /// Fails with `ExecutorUnavailable` or `ImageMissing` when `spec` cannot be served.
    fn check(&self, spec: &RuntimeSpec) -> Result<()>;
    fn execute(&self, request: &ExecutionRequest) -> Result<ExecutionResult>;
    /// Whether runs are isolated from the host (required for agents).
    fn isolated(&self) -> bool;
}

pub(crate) fn hash_tree(root: &Path) -> Result<BTreeMap<RelPath, String>> {
    let mut out = BTreeMap::new();
    for f in list_files(root)? {
        let (h, _) = hash_file(&f.under(root))?;
        out.insert(f, h);
    }
    Ok(out)
}

pub(crate) fn produced_delta(
    before: &BTreeMap<RelPath, String>,
    after: BTreeMap<RelPath, String>,
) -> Vec<(RelPath, String)> {
    after.into_iter().filter(|(p, h)| before.get(p) != Some(h)).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputSnapshot {
    pub path: RelPath,
    /// `None` when the file is absent.
    pub hash: Option<String>,
}

/// Hashes exactly the listed paths; absent files are reported, not errors.
pub fn snapshot_outputs(workspace: &Path, manifest: &[RelPath]) -> Result<Vec<OutputSnapshot>> {
    manifest
        .iter()
        .map(|p| {
            let full = p.under(workspace);
            let hash = if full.is_file() { Some(hash_file(&full)?.0) } else { None };
            Ok(OutputSnapshot { path: p.clone(), hash })
        })
        .collect()
}

/// Outcome of running a project's entry scripts in order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptsRun {
    pub exit_status: ExitStatus,
    pub log: String,
    pub wall_time: f64,
    pub produced_files: Vec<(RelPath, String)>,
    /// The script that failed, if any.
    pub failed_script: Option<RelPath>,
}

/// Runs `entries` one after another in `workspace`, stopping at the first failure.
pub fn run_scripts(
    executor: &dyn Executor,
    workspace: &Path,
    entries: &[RelPath],
    spec: &RuntimeSpec,
) -> Result<ScriptsRun> {
    let mut log = String::new();
    let mut wall_time = 0.0;
    let mut produced = BTreeMap::new();
    for script in entries {
        let request = ExecutionRequest::new(workspace, spec.command_for(script)?, spec);
        log.push_str(&format!("[harness] running {}\n", request.command.join(" ")));
        let r = executor.execute(&request)?;
        log.push_str(&r.combined_log);
        wall_time += r.wall_time;
        produced.extend(r.produced_files);
        if !r.exit_status.is_success() {
            log.push_str(&format!("[harness] {script} ended with {}\n", r.exit_status));
            return Ok(ScriptsRun {
                exit_status: r.exit_status,
                log,
                wall_time,
                produced_files: produced.into_iter().collect(),
                failed_script: Some(script.clone()),
            });
        }
    }
    Ok(ScriptsRun {
        exit_status: ExitStatus::Success,
        log,
        wall_time,
        produced_files: produced.into_iter().collect(),
        failed_script: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> RuntimeSpec {
        RuntimeSpec { command_template: "sh {script}".into(), script_timeout: 10, ..RuntimeSpec::default() }
    }

    #[test]
    fn snapshot_reports_absent_files() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("a.txt"), "x").unwrap();
        let snap =
            snapshot_outputs(dir.path(), &[RelPath::new("a.txt").unwrap(), RelPath::new("b.txt").unwrap()]).unwrap();
        assert!(snap[0].hash.is_some());
        assert_eq!(snap[1].hash, None);
        assert!(snapshot_outputs(dir.path(), &[]).unwrap().is_empty());
    }

    #[test]
    fn scripts_stop_at_first_failure() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("one.sh"), "echo one > one.txt\nexit 2\n").unwrap();
        std::fs::write(dir.path().join("two.sh"), "echo two > two.txt\n").unwrap();
        let entries = [RelPath::new("one.sh").unwrap(), RelPath::new("two.sh").unwrap()];
        let run = run_scripts(&LocalBackend::default(), dir.path(), &entries, &spec()).unwrap();
        assert_eq!(run.exit_status, ExitStatus::NonZeroExit(2));
        assert_eq!(run.failed_script.as_ref().map(RelPath::as_str), Some("one.sh"));
        assert!(!dir.path().join("two.txt").exists());
        assert_eq!(run.produced_files.len(), 1);
    }

    #[test]
    fn mount_targets_must_be_absolute_and_distinct() {
        let dir = tempfile::tempdir().unwrap();
        let mut req = ExecutionRequest::new(dir.path(), vec!["true".into()], &spec());
        req.extra_mounts.push(Mount { host: dir.path().into(), target: "rel".into(), read_only: true });
        assert!(matches!(req.validate(), Err(Error::MountDenied(_))));
        req.extra_mounts[0].target = "/a".into();
        req.extra_mounts.push(Mount { host: dir.path().into(), target: "/a".into(), read_only: true });
        assert!(matches!(req.validate(), Err(Error::MountDenied(_))));
    }
}
