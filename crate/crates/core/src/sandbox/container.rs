use std::process::{Command, Stdio};
use std::sync::atomic::{AtomicU64, Ordering};

use super::capture::{run_supervised, DEFAULT_LOG_CAP};
use super::{hash_tree, produced_delta, ExecutionRequest, ExecutionResult, Executor};
use crate::corpus::RuntimeSpec;
use crate::error::{Error, Result};

/// Working directory of the workspace inside the container.
pub const CONTAINER_WORKDIR: &str = "/workspace";

/// Drives an OCI-compatible runtime CLI (`docker`, `podman`, ...).
/// One container per call, removed on exit.
#[derive(Debug)]
pub struct ContainerBackend {
    pub runtime: String,
    pub log_cap: usize,
    counter: AtomicU64,
}

impl ContainerBackend {
    pub fn new(runtime: impl Into<String>) -> Self {
        ContainerBackend { runtime: runtime.into(), log_cap: DEFAULT_LOG_CAP, counter: AtomicU64::new(0) }
    }

    fn container_name(&self) -> String {
        let n = self.counter.fetch_add(1, Ordering::Relaxed);
        format!("reprokit-{}-{n}", std::process::id())
    }

    /// Arguments passed to the runtime for `request`, without the runtime itself.
    /// Environment values are not included; the runtime reads them from its own
    /// environment so they stay out of process listings.
    pub fn run_args(&self, request: &ExecutionRequest, name: &str) -> Vec<String> {
        let spec = &request.runtime_spec;
        let mut args = vec![
            "run".to_string(),
            "--rm".into(),
            "--name".into(),
            name.into(),
            "--memory".into(),
            format!("{}b", spec.memory_limit),
            "--cpus".into(),
            spec.cpu_count.to_string(),
            "-v".into(),
            format!("{}:{CONTAINER_WORKDIR}", request.workspace.display()),
            "-w".into(),
            CONTAINER_WORKDIR.into(),
        ];
        for m in &request.extra_mounts {
            args.push("-v".into());
            let ro = if m.read_only { ":ro" } else { "" };
            args.push(format!("{}:{}{ro}", m.host.display(), m.target));
        }
        for k in request.env_vars.keys() {
            args.push("-e".into());
            args.push(k.clone());
        }
        args.push(spec.image_name.clone());
        args.extend(request.command.iter().cloned());
        args
    }

    fn quiet(&self, args: &[&str]) -> std::io::Result<std::process::ExitStatus> {
        Command::new(&self.runtime).args(args).stdin(Stdio::null()).stdout(Stdio::null()).stderr(Stdio::null()).status()
    }
}

impl Executor for ContainerBackend {
    fn name(&self) -> &str {
        "container"
    }

    fn check(&self, spec: &RuntimeSpec) -> Result<()> {
        match self.quiet(&["--version"]) {
            Ok(s) if s.success() => {}
            _ => return Err(Error::ExecutorUnavailable(format!("container runtime {:?} is not usable", self.runtime))),
        }
        match self.quiet(&["image", "inspect", &spec.image_name]) {
            Ok(s) if s.success() => Ok(()),
            _ => Err(Error::ImageMissing(spec.image_name.clone())),
        }
    }

    fn execute(&self, request: &ExecutionRequest) -> Result<ExecutionResult> {
        request.validate()?;
        for m in &request.extra_mounts {
            if !m.host.exists() {
                return Err(Error::MountDenied(format!("mount source {} does not exist", m.host.display())));
            }
        }
        let before = hash_tree(&request.workspace)?;
        let name = self.container_name();
        let mut cmd = Command::new(&self.runtime);
        cmd.args(self.run_args(request, &name)).envs(&request.env_vars);
        let run = run_supervised(cmd, request.timeout, self.log_cap, || {
            let _ = self.quiet(&["rm", "-f", &name]);
        });
        let after = hash_tree(&request.workspace)?;
        Ok(ExecutionResult {
            exit_status: run.status,
            combined_log: run.log,
            wall_time: run.wall_time,
            produced_files: produced_delta(&before, after),
        })
    }

    fn isolated(&self) -> bool {
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sandbox::Mount;

    #[test]
    fn run_arguments_carry_limits_and_mounts() {
        let dir = tempfile::tempdir().unwrap();
        let spec = RuntimeSpec::default();
        let mut req = ExecutionRequest::new(dir.path(), vec!["Rscript".into(), "a.R".into()], &spec);
        req.extra_mounts.push(Mount { host: "/gt".into(), target: "/base_results".into(), read_only: true });
        req.env_vars.insert("MODEL".into(), "m".into());
        req.env_vars.insert("API_KEY".into(), "sk-secret".into());
        let args = ContainerBackend::new("docker").run_args(&req, "n");
        let joined = args.join(" ");
        assert!(!joined.contains("sk-secret"));
        assert!(joined.contains("-e API_KEY -e MODEL "));
        assert!(joined.starts_with("run --rm --name n --memory 8589934592b --cpus 8 -v "));
        assert!(joined.contains("-v /gt:/base_results:ro"));
        assert!(joined.ends_with("rocker/r-ver:4.4.1 Rscript a.R"));
    }

    #[test]
    fn missing_runtime_is_unavailable() {
        let b = ContainerBackend::new("/nonexistent/docker");
        assert!(matches!(b.check(&RuntimeSpec::default()), Err(Error::ExecutorUnavailable(_))));
    }
}
