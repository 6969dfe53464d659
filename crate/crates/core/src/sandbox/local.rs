use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;

use super::capture::{run_supervised, DEFAULT_LOG_CAP};
use super::{hash_tree, produced_delta, ExecutionRequest, ExecutionResult, Executor};
use crate::corpus::RuntimeSpec;
use crate::error::{Error, Result};

/// Spawns commands directly on the host. Enforces timeouts but no resource caps.
#[derive(Debug, Clone)]
pub struct LocalBackend {
    /// Replaces a command's program name, e.g. `Rscript` with a specific binary.
    pub program_overrides: BTreeMap<String, PathBuf>,
    pub log_cap: usize,
}

impl Default for LocalBackend {
    fn default() -> Self {
        LocalBackend { program_overrides: BTreeMap::new(), log_cap: DEFAULT_LOG_CAP }
    }
}

impl LocalBackend {
    pub fn with_override(mut self, program: &str, path: impl Into<PathBuf>) -> Self {
        self.program_overrides.insert(program.to_string(), path.into());
        self
    }

    fn program(&self, name: &str) -> PathBuf {
        self.program_overrides.get(name).cloned().unwrap_or_else(|| PathBuf::from(name))
    }
}

/// Resolves a program name against `PATH` the way a shell would.
pub fn find_program(program: &Path) -> Option<PathBuf> {
    if program.components().count() > 1 {
        return program.is_file().then(|| program.to_path_buf());
    }
    let path = std::env::var_os("PATH")?;
    std::env::split_paths(&path).map(|d| d.join(program)).find(|p| p.is_file())
}

impl Executor for LocalBackend {
    fn name(&self) -> &str {
        "local"
    }

    fn check(&self, spec: &RuntimeSpec) -> Result<()> {
        let argv = spec.command_for(&crate::paths::RelPath::new("script").expect("static path"))?;
        let program = self.program(&argv[0]);
        match find_program(&program) {
            Some(_) => Ok(()),
            None => Err(Error::ExecutorUnavailable(format!("interpreter {} not found", program.display()))),
        }
    }

    fn execute(&self, request: &ExecutionRequest) -> Result<ExecutionResult> {
        request.validate()?;
        if let Some(m) = request.extra_mounts.first() {
            return Err(Error::MountDenied(format!("the local backend cannot mount {}", m.target)));
        }
        let before = hash_tree(&request.workspace)?;
        let mut cmd = Command::new(self.program(&request.command[0]));
        cmd.args(&request.command[1..]).current_dir(&request.workspace).envs(&request.env_vars);
        let run = run_supervised(cmd, request.timeout, self.log_cap, || {});
        let after = hash_tree(&request.workspace)?;
        Ok(ExecutionResult {
            exit_status: run.status,
            combined_log: run.log,
            wall_time: run.wall_time,
            produced_files: produced_delta(&before, after),
        })
    }

    fn isolated(&self) -> bool {
        false
    }
}

#[cfg(test)]
mod tests {
    use std::time::Duration;

    use super::*;
    use crate::sandbox::{ExitStatus, GRACE};

    fn spec() -> RuntimeSpec {
        RuntimeSpec { command_template: "sh {script}".into(), script_timeout: 10, ..RuntimeSpec::default() }
    }

    #[test]
    fn noop_produces_nothing() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("s.sh"), "true\n").unwrap();
        let req = ExecutionRequest::new(dir.path(), vec!["sh".into(), "s.sh".into()], &spec());
        let r = LocalBackend::default().execute(&req).unwrap();
        assert_eq!(r.exit_status, ExitStatus::Success);
        assert!(r.produced_files.is_empty());
    }

    #[test]
    fn produced_files_are_the_delta() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("s.sh"), "mkdir -p out; echo 1 > out/result.csv\n").unwrap();
        let req = ExecutionRequest::new(dir.path(), vec!["sh".into(), "s.sh".into()], &spec());
        let r = LocalBackend::default().execute(&req).unwrap();
        let paths: Vec<&str> = r.produced_files.iter().map(|(p, _)| p.as_str()).collect();
        assert_eq!(paths, ["out/result.csv"]);
    }

    #[test]
    fn timeout_within_grace() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("s.sh"), "echo partial\nsleep 30\n").unwrap();
        let mut req = ExecutionRequest::new(dir.path(), vec!["sh".into(), "s.sh".into()], &spec());
        req.timeout = Duration::from_millis(500);
        let r = LocalBackend::default().execute(&req).unwrap();
        assert_eq!(r.exit_status, ExitStatus::Timeout);
        assert!(r.combined_log.contains("partial"));
        assert!(r.wall_time <= (req.timeout + GRACE).as_secs_f64());
    }

    #[test]
    fn overrides_and_availability() {
        let spec = RuntimeSpec { command_template: "Rscript-not-installed {script}".into(), ..RuntimeSpec::default() };
        assert!(matches!(LocalBackend::default().check(&spec), Err(Error::ExecutorUnavailable(_))));
        let backend = LocalBackend::default().with_override("Rscript-not-installed", "/bin/sh");
        assert!(backend.check(&spec).is_ok());
    }
}
