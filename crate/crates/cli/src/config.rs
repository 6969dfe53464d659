//! TOML configuration. Credentials are never read from the file, only the
//! names of environment variables that hold them.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{bail, Context, Result};
use regex::Regex;
use reprokit_core::agent_repair::AgentConfig;
use reprokit_core::prompt_repair::{
    CompletionBackend, NullBackend, OpenAiBackend, OracleBackend, ReplayBackend, DEFAULT_MAX_ITERATIONS,
};
use serde::Deserialize;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HarnessConfig {
    #[serde(default)]
    pub paths: PathsConfig,
    #[serde(default)]
    pub sandbox: SandboxConfig,
    #[serde(default)]
    pub limits: LimitsConfig,
    /// Comparison policy: `byte-exact`, `normalized` or `numeric:EPS`.
    pub policy: Option<String>,
    #[serde(default)]
    pub backends: BTreeMap<String, BackendConfig>,
    #[serde(default)]
    pub agents: BTreeMap<String, AgentEntry>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    pub projects: PathBuf,
    pub corpus: PathBuf,
    pub artifacts: PathBuf,
    pub records: PathBuf,
}

impl Default for PathsConfig {
    fn default() -> Self {
        PathsConfig {
            projects: "projects".into(),
            corpus: "corpus".into(),
            artifacts: "artifacts".into(),
            records: "records.jsonl".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ExecutorKind {
    Container,
    Local,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SandboxConfig {
    pub executor: ExecutorKind,
    /// Container runtime binary (`docker`, `podman`, ...).
    pub runtime: String,
    pub workers: usize,
    /// Local executor only: program used for `Rscript`.
    pub rscript: Option<PathBuf>,
}

impl Default for SandboxConfig {
    fn default() -> Self {
        SandboxConfig { executor: ExecutorKind::Container, runtime: "docker".into(), workers: 1, rscript: None }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LimitsConfig {
    pub max_iterations: u32,
    pub agent_time_limit: u64,
}

impl Default for LimitsConfig {
    fn default() -> Self {
        LimitsConfig {
            max_iterations: DEFAULT_MAX_ITERATIONS,
            agent_time_limit: reprokit_core::agent_repair::DEFAULT_TIME_LIMIT,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum BackendConfig {
    Oracle {
        identity: Option<String>,
    },
    Null {
        identity: Option<String>,
    },
    Replay {
        identity: Option<String>,
        dir: PathBuf,
    },
    Openai {
        identity: Option<String>,
        endpoint: String,
        model: String,
        api_key_env: Option<String>,
        temperature: Option<f64>,
        #[serde(default = "default_request_timeout")]
        timeout: u64,
        #[serde(default = "default_concurrency")]
        max_concurrent: usize,
    },
}

fn default_request_timeout() -> u64 {
    300
}

fn default_concurrency() -> usize {
    4
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentEntry {
    pub launch_command: Vec<String>,
    #[serde(default)]
    pub model_routing: BTreeMap<String, String>,
    /// Host environment variables forwarded to the agent by name (for credentials).
    #[serde(default)]
    pub pass_env: Vec<String>,
    pub time_limit: Option<u64>,
    pub image: Option<String>,
    pub mount_path: Option<String>,
    pub completion_markers: Option<Vec<String>>,
}

/// Rejects anything that looks like an inline credential.
fn reject_secrets(value: &toml::Value, path: &str) -> Result<()> {
    let secretish = Regex::new(r"(?i)(api[_-]?key|secret|token|password|credential)").expect("static regex");
    if let toml::Value::Table(t) = value {
        for (k, v) in t {
            let here = if path.is_empty() { k.clone() } else { format!("{path}.{k}") };
            if secretish.is_match(k) && !k.ends_with("_env") {
                bail!("configuration key {here} looks like a credential; put the secret in an environment variable and name it with {k}_env");
            }
            reject_secrets(v, &here)?;
        }
    }
    Ok(())
}

impl HarnessConfig {
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let raw: toml::Value = toml::from_str(text).with_context(|| format!("parsing {}", origin.display()))?;
        reject_secrets(&raw, "")?;
        let mut cfg: HarnessConfig = raw.try_into().with_context(|| format!("reading {}", origin.display()))?;
        if let Some(dir) = origin.parent() {
            cfg.resolve_relative(dir);
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text, path)
    }

    /// Makes relative paths in the file relative to the file's directory.
    fn resolve_relative(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.paths.projects);
        fix(&mut self.paths.corpus);
        fix(&mut self.paths.artifacts);
        fix(&mut self.paths.records);
        if let Some(r) = self.sandbox.rscript.as_mut() {
            if r.components().count() > 1 {
                fix(r);
            }
        }
        for b in self.backends.values_mut() {
            if let BackendConfig::Replay { dir, .. } = b {
                fix(dir);
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sandbox.workers == 0 {
            bail!("sandbox.workers must be at least 1");
        }
        if self.limits.max_iterations == 0 {
            bail!("limits.max_iterations must be at least 1");
        }
        if self.limits.agent_time_limit == 0 {
            bail!("limits.agent_time_limit must be positive");
        }
        for name in self.backends.keys() {
            if matches!(name.as_str(), "oracle" | "null") {
                bail!("backend name {name:?} is reserved for the built-in backend");
            }
        }
        Ok(())
    }

    /// Resolves `name` to a backend: built-ins `oracle`, `null`, `replay=DIR`, or a configured entry.
    pub fn backend(&self, name: &str) -> Result<Box<dyn CompletionBackend>> {
        if let Some(dir) = name.strip_prefix("replay=") {
            return Ok(Box::new(ReplayBackend::new(dir)));
        }
        match name {
            "oracle" => return Ok(Box::new(OracleBackend::default())),
            "null" => return Ok(Box::new(NullBackend::default())),
            _ => {}
        }
        let cfg = self.backends.get(name).with_context(|| format!("unknown backend {name:?}"))?;
        let identity = |id: &Option<String>| id.clone().unwrap_or_else(|| name.to_string());
        Ok(match cfg {
            BackendConfig::Oracle { identity: id } => Box::new(OracleBackend { identity: identity(id) }),
            BackendConfig::Null { identity: id } => Box::new(NullBackend { identity: identity(id) }),
            BackendConfig::Replay { identity: id, dir } => {
                Box::new(ReplayBackend { identity: identity(id), root: dir.clone() })
            }
            BackendConfig::Openai {
                identity: id,
                endpoint,
                model,
                api_key_env,
                temperature,
                timeout,
                max_concurrent,
            } => {
                let mut b = OpenAiBackend::new(
                    endpoint,
                    model,
                    api_key_env.clone(),
                    Duration::from_secs(*timeout),
                    *max_concurrent,
                );
                b.identity = identity(id);
                b.temperature = *temperature;
                Box::new(b)
            }
        })
    }

    pub fn agent(&self, name: &str, time_limit: Option<u64>) -> Result<AgentConfig> {
        let e = self.agents.get(name).with_context(|| format!("unknown agent {name:?}"))?;
        let mut cfg = AgentConfig::new(name, e.launch_command.clone());
        cfg.model_routing = e.model_routing.clone();
        for var in &e.pass_env {
            let value =
                std::env::var(var).with_context(|| format!("agent {name}: environment variable {var} is not set"))?;
            cfg.model_routing.insert(var.clone(), value);
        }
        cfg.time_limit = time_limit.or(e.time_limit).unwrap_or(self.limits.agent_time_limit);
        cfg.image = e.image.clone();
        if let Some(m) = &e.mount_path {
            cfg.mount_path = m.clone();
        }
        if let Some(m) = &e.completion_markers {
            cfg.completion_markers = m.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_follow_the_protocol() {
        let cfg = HarnessConfig::parse("", Path::new("c.toml")).unwrap();
        assert_eq!(cfg.limits.max_iterations, 5);
        assert_eq!(cfg.limits.agent_time_limit, 1200);
        assert_eq!(cfg.sandbox.executor, ExecutorKind::Container);
        cfg.validate().unwrap();
    }

    #[test]
    fn inline_keys_are_rejected() {
        let text = "[backends.gpt]\nkind = \"openai\"\nendpoint = \"http://x\"\nmodel = \"m\"\napi_key = \"sk-123\"\n";
        let err = HarnessConfig::parse(text, Path::new("c.toml")).unwrap_err().to_string();
        assert!(err.contains("backends.gpt.api_key"), "{err}");
        let ok = "[backends.gpt]\nkind = \"openai\"\nendpoint = \"http://x\"\nmodel = \"m\"\napi_key_env = \"OPENAI_API_KEY\"\n";
        let cfg = HarnessConfig::parse(ok, Path::new("c.toml")).unwrap();
        assert_eq!(cfg.backend("gpt").unwrap().identity(), "gpt");
        assert!(HarnessConfig::parse(
            "[agents.a]\nlaunch_command = [\"x\"]\n[agents.a.model_routing]\nTOKEN = \"t\"\n",
            Path::new("c.toml")
        )
        .is_err());
    }

    #[test]
    fn relative_paths_follow_the_file() {
        let text = "[paths]\nprojects = \"p\"\ncorpus = \"/abs/c\"\nartifacts = \"a\"\nrecords = \"r.jsonl\"\n";
        let cfg = HarnessConfig::parse(text, Path::new("/etc/rk/c.toml")).unwrap();
        assert_eq!(cfg.paths.projects, PathBuf::from("/etc/rk/p"));
        assert_eq!(cfg.paths.corpus, PathBuf::from("/abs/c"));
    }

    #[test]
    fn backends_and_agents() {
        let text = "[backends.m1]\nkind = \"replay\"\ndir = \"r\"\n[agents.mock]\nlaunch_command = [\"sh\", \"{prompt_file}\"]\ntime_limit = 5\n";
        let cfg = HarnessConfig::parse(text, Path::new("c.toml")).unwrap();
        assert_eq!(cfg.backend("m1").unwrap().identity(), "m1");
        assert_eq!(cfg.backend("oracle").unwrap().identity(), "oracle");
        assert!(cfg.backend("nope").is_err());
        let a = cfg.agent("mock", None).unwrap();
        assert_eq!(a.time_limit, 5);
        assert_eq!(cfg.agent("mock", Some(9)).unwrap().time_limit, 9);
        assert!(HarnessConfig::parse("[sandbox]\nworkers = 0\n", Path::new("c.toml")).unwrap().validate().is_err());
    }
}
