//! Headless coding-agent runs inside the container sandbox, with the ground
//! truth mounted read-only and a post-run leakage audit of the agent's log.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::PathBuf;
use std::sync::atomic::AtomicBool;
use std::time::{Duration, Instant};

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::analysis::{RecordSink, RunKey, RunRecord, Workflow};
use crate::corpus::{write_tree, StoredCase, TestCase};
use crate::error::{Error, IoContext, Result};
use crate::paths::{copy_tree, hash_file, list_files, to_json_pretty, write_file};
use crate::pool::run_pool;
use crate::sandbox::{run_scripts, ExecutionRequest, Executor, ExitStatus, Mount};
use crate::validator::{classify, compare_outputs, Classification, ComparisonPolicy, ComparisonReport, ExpectedSet};

pub const AGENT_PROMPT: &str = include_str!("../assets/prompts/agent.txt");
pub const DEFAULT_MOUNT_PATH: &str = "/base_results";
pub const DEFAULT_TIME_LIMIT: u64 = 1200;
pub const PROMPT_PLACEHOLDER: &str = "{prompt_file}";
/// Where the prompt file is mounted inside the container.
pub const PROMPT_MOUNT: &str = "/harness/prompt.txt";
pub const STATUS_FILE: &str = "status.txt";
pub const DEFAULT_COMPLETION_MARKERS: &[&str] = &[r"status\.txt", r"(?i)\b(ran|runs|executed) successfully\b"];

/// The agent prompt with the ground-truth path substituted.
pub fn agent_prompt(mount_path: &str) -> String {
    AGENT_PROMPT.replace(DEFAULT_MOUNT_PATH, mount_path)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentConfig {
    pub agent_name: String,
    /// Argument vector; `{prompt_file}` is replaced by the mounted prompt path.
    pub launch_command: Vec<String>,
    /// Passed to the agent process as environment variables.
    #[serde(default)]
    pub model_routing: BTreeMap<String, String>,
    #[serde(default = "default_time_limit")]
    pub time_limit: u64,
    /// Image with the agent installed; defaults to the case's runtime image.
    #[serde(default)]
    pub image: Option<String>,
    #[serde(default = "default_mount_path")]
    pub mount_path: String,
    /// Regexes marking the log line where the repair counts as complete.
    #[serde(default = "default_markers")]
    pub completion_markers: Vec<String>,
}

fn default_time_limit() -> u64 {
    DEFAULT_TIME_LIMIT
}

fn default_mount_path() -> String {
    DEFAULT_MOUNT_PATH.into()
}

fn default_markers() -> Vec<String> {
    DEFAULT_COMPLETION_MARKERS.iter().map(|s| s.to_string()).collect()
}

impl AgentConfig {
    pub fn new(agent_name: &str, launch_command: Vec<String>) -> Self {
        AgentConfig {
            agent_name: agent_name.into(),
            launch_command,
            model_routing: BTreeMap::new(),
            time_limit: DEFAULT_TIME_LIMIT,
            image: None,
            mount_path: default_mount_path(),
            completion_markers: default_markers(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(format!("agent {}: {m}", self.agent_name)));
        if self.agent_name.is_empty() {
            return bad("agent_name is empty".into());
        }
        if self.launch_command.is_empty() {
            return bad("launch_command is empty".into());
        }
        if self.time_limit == 0 {
            return bad("time_limit must be positive".into());
        }
        if !self.mount_path.starts_with('/') || self.mount_path == crate::sandbox::CONTAINER_WORKDIR {
            return bad(format!("mount_path {:?} must be absolute and outside the workspace", self.mount_path));
        }
        self.markers().map(|_| ())
    }

    pub fn markers(&self) -> Result<Vec<Regex>> {
        self.completion_markers
            .iter()
            .map(|m| Regex::new(m).map_err(|e| Error::InvalidConfig(format!("completion marker {m:?}: {e}"))))
            .collect()
    }

    pub fn command(&self) -> Vec<String> {
        self.launch_command.iter().map(|a| a.replace(PROMPT_PLACEHOLDER, PROMPT_MOUNT)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StatusValue {
    Reproduced,
    NotReproduced,
    Missing,
    Malformed,
}

impl fmt::Display for StatusValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StatusValue::Reproduced => "Reproduced",
            StatusValue::NotReproduced => "Not Reproduced",
            StatusValue::Missing => "Missing",
            StatusValue::Malformed => "Malformed",
        })
    }
}

/// Reads `status.txt`: exactly one of the two status words, surrounding whitespace allowed.
pub fn parse_status(content: Option<&[u8]>) -> StatusValue {
    let Some(bytes) = content else { return StatusValue::Missing };
    match std::str::from_utf8(bytes).map(str::trim) {
        Ok("Reproduced") => StatusValue::Reproduced,
        Ok("Not Reproduced") => StatusValue::NotReproduced,
        _ => StatusValue::Malformed,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LeakageFlag {
    /// 1-based line number in the agent log.
    pub line_no: usize,
    pub line: String,
}

/// Log lines that reference `mount_path` before the first completion marker.
/// Lines that merely repeat the prompt are ignored.
pub fn audit_leakage(log: &str, mount_path: &str, markers: &[Regex], prompt: Option<&str>) -> Vec<LeakageFlag> {
    let mention = Regex::new(&format!(r"{}(?:[^A-Za-z0-9_.\-]|$)", regex::escape(mount_path))).expect("escaped path");
    let echoed: BTreeSet<&str> =
        prompt.map(|p| p.lines().map(str::trim).filter(|l| !l.is_empty()).collect()).unwrap_or_default();
    let mut flags = Vec::new();
    for (i, line) in log.lines().enumerate() {
        let content = line.strip_prefix("[stdout] ").or_else(|| line.strip_prefix("[stderr] ")).unwrap_or(line);
        if echoed.contains(content.trim()) {
            continue;
        }
        if markers.iter().any(|m| m.is_match(content)) {
            break;
        }
        if mention.is_match(content) {
            flags.push(LeakageFlag { line_no: i + 1, line: line.to_string() });
        }
    }
    flags
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentOutcome {
    pub case_id: String,
    pub agent: String,
    pub status_file_value: StatusValue,
    pub harness_classification: Classification,
    pub report: ComparisonReport,
    pub agent_exit: ExitStatus,
    pub timed_out: bool,
    pub wall_time: f64,
    pub leakage_flags: Vec<LeakageFlag>,
    /// Whether the mounted ground truth hashed the same before and after the run.
    pub ground_truth_intact: bool,
    pub log: String,
}

impl AgentOutcome {
    pub fn to_record(&self, case: &TestCase) -> RunRecord {
        RunRecord {
            case_id: self.case_id.clone(),
            error_kinds: case.error_kinds(),
            category: case.category,
            workflow: Workflow::Agent,
            backend_identity: self.agent.clone(),
            prompt_level: None,
            attempts: 1,
            execution_time: self.wall_time,
            outcome: self.harness_classification,
            status_file: Some(self.status_file_value.to_string()),
            leakage_flags: Some(self.leakage_flags.len()),
            error: None,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct AgentRunOptions {
    /// Overrides the case's own comparison policy.
    pub policy: Option<ComparisonPolicy>,
    pub artifacts: Option<PathBuf>,
}

fn tree_hashes(root: &std::path::Path) -> Result<BTreeMap<String, String>> {
    list_files(root)?.into_iter().map(|p| Ok((p.to_string(), hash_file(&p.under(root))?.0))).collect()
}

/// Runs the agent on a fresh copy of the case and classifies the result independently.
pub fn launch_agent(
    case: &TestCase,
    cfg: &AgentConfig,
    executor: &dyn Executor,
    opts: &AgentRunOptions,
) -> Result<AgentOutcome> {
    cfg.validate()?;
    if !executor.isolated() {
        return Err(Error::AgentLaunchFailure(format!(
            "agents need an isolated executor; {} runs processes on the host",
            executor.name()
        )));
    }
    let mut spec = case.project.runtime_spec.clone();
    if let Some(image) = &cfg.image {
        spec.image_name = image.clone();
    }
    executor.check(&spec)?;
    let started = Instant::now();
    let scratch = tempfile::Builder::new().prefix("reprokit-agent-").tempdir().at(std::env::temp_dir())?;
    let ws = scratch.path().join("workspace");
    let truth = scratch.path().join("base_results");
    let harness = scratch.path().join("harness");
    write_tree(&ws, &case.workspace)?;
    write_tree(&truth, &case.ground_truth)?;
    let prompt = agent_prompt(&cfg.mount_path);
    write_file(&harness.join("prompt.txt"), &prompt)?;
    let truth_before = tree_hashes(&truth)?;

    let mut request = ExecutionRequest::new(&ws, cfg.command(), &spec);
    request.timeout = Duration::from_secs(cfg.time_limit);
    request.extra_mounts = vec![
        Mount { host: truth.clone(), target: cfg.mount_path.clone(), read_only: true },
        Mount { host: harness.clone(), target: "/harness".into(), read_only: true },
    ];
    request.env_vars = cfg.model_routing.clone();
    let result = executor.execute(&request).map_err(|e| match e {
        Error::Io { .. } | Error::ExecutorUnavailable(_) | Error::ImageMissing(_) => e,
        other => Error::AgentLaunchFailure(other.to_string()),
    })?;
    if result.exit_status == ExitStatus::LaunchFailure {
        return Err(Error::AgentLaunchFailure(format!(
            "{} could not start: {}",
            cfg.agent_name,
            result.combined_log.trim()
        )));
    }
    let wall_time = started.elapsed().as_secs_f64();
    let ground_truth_intact = tree_hashes(&truth)? == truth_before;
    let status_path = ws.join(STATUS_FILE);
    let status_bytes = status_path.is_file().then(|| std::fs::read(&status_path)).transpose().at(&status_path)?;
    let status = parse_status(status_bytes.as_deref());

    // Independent check: re-run the repaired scripts in a fresh copy, without any outputs the agent left.
    let check = scratch.path().join("check");
    copy_tree(&ws, &check)?;
    for out in &case.project.expected_outputs {
        let p = out.path.under(&check);
        if p.is_file() {
            std::fs::remove_file(&p).at(&p)?;
        }
    }
    let run = run_scripts(executor, &check, &case.project.entry_scripts, &case.project.runtime_spec)?;
    let expected = ExpectedSet { root: truth.clone(), outputs: case.project.expected_outputs.clone() };
    let report = compare_outputs(&check, &expected, &case.project.policy_or(opts.policy.as_ref()))?;
    let report = match &run.failed_script {
        Some(s) => report.with_execution_failure(format!("ExecutionFailed: {s} ({})", run.exit_status)),
        None => report,
    };
    let classification = classify(&run.exit_status, &report);
    let flags = audit_leakage(&result.combined_log, &cfg.mount_path, &cfg.markers()?, Some(&prompt));

    let outcome = AgentOutcome {
        case_id: case.case_id.clone(),
        agent: cfg.agent_name.clone(),
        status_file_value: status,
        harness_classification: classification,
        report,
        agent_exit: result.exit_status,
        timed_out: result.exit_status == ExitStatus::Timeout,
        wall_time,
        leakage_flags: flags,
        ground_truth_intact,
        log: result.combined_log,
    };
    if let Some(root) = &opts.artifacts {
        let dir = root.join(format!("{}__{}__agent", case.case_id, cfg.agent_name));
        if dir.exists() {
            std::fs::remove_dir_all(&dir).at(&dir)?;
        }
        write_file(&dir.join("logs/agent.log"), &outcome.log)?;
        write_file(&dir.join("logs/check.log"), &run.log)?;
        write_file(&dir.join("prompt.txt"), &prompt)?;
        write_file(&dir.join("comparison.txt"), outcome.report.render())?;
        copy_tree(&ws, &dir.join("final_workspace"))?;
        let meta = serde_json::json!({
            "case_id": outcome.case_id,
            "agent": outcome.agent,
            "status_file_value": outcome.status_file_value,
            "harness_classification": outcome.harness_classification,
            "agent_exit": outcome.agent_exit.to_string(),
            "timed_out": outcome.timed_out,
            "time_limit": cfg.time_limit,
            "wall_time": outcome.wall_time,
            "leakage_flags": outcome.leakage_flags,
            "ground_truth_intact": outcome.ground_truth_intact,
        });
        write_file(&dir.join("meta.json"), to_json_pretty(&meta))?;
    }
    Ok(outcome)
}

#[derive(Debug, Clone)]
pub struct AgentBatchOptions {
    pub run: AgentRunOptions,
    pub workers: usize,
    /// Runs already recorded; they are not repeated.
    pub skip: BTreeSet<RunKey>,
}

impl Default for AgentBatchOptions {
    fn default() -> Self {
        AgentBatchOptions { run: AgentRunOptions::default(), workers: 1, skip: BTreeSet::new() }
    }
}

/// Runs every (case, agent) pair not already recorded, appending records to `sink` as runs finish.
pub fn run_agents(
    corpus: &[StoredCase],
    agents: &[AgentConfig],
    executor: &dyn Executor,
    opts: &AgentBatchOptions,
    sink: Option<&RecordSink>,
    stop: &AtomicBool,
) -> Result<Vec<RunRecord>> {
    if !executor.isolated() {
        return Err(Error::AgentLaunchFailure(format!(
            "agents need an isolated executor; {} runs processes on the host",
            executor.name()
        )));
    }
    for a in agents {
        a.validate()?;
    }
    let mut jobs = Vec::new();
    for sc in corpus {
        for a in agents {
            let key =
                RunKey { case_id: sc.case.case_id.clone(), backend_identity: a.agent_name.clone(), prompt_level: None };
            if !opts.skip.contains(&key) {
                jobs.push((sc, a));
            }
        }
    }
    let results = run_pool(&jobs, opts.workers, stop, |&(sc, a)| -> Result<RunRecord> {
        let record = match launch_agent(&sc.case, a, executor, &opts.run) {
            Ok(outcome) => outcome.to_record(&sc.case),
            Err(e @ (Error::ExecutorUnavailable(_) | Error::ImageMissing(_))) => return Err(e),
            Err(e) => {
                tracing::error!(case = %sc.case.case_id, agent = %a.agent_name, "agent run failed: {e}");
                RunRecord {
                    case_id: sc.case.case_id.clone(),
                    error_kinds: sc.case.error_kinds(),
                    category: sc.case.category,
                    workflow: Workflow::Agent,
                    backend_identity: a.agent_name.clone(),
                    prompt_level: None,
                    attempts: 0,
                    execution_time: 0.0,
                    outcome: Classification::NotReproduced,
                    status_file: None,
                    leakage_flags: None,
                    error: Some(e.to_string()),
                }
            }
        };
        if let Some(s) = sink {
            s.append(&record)?;
        }
        Ok(record)
    });
    results.into_iter().flatten().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sandbox::LocalBackend;

    fn markers() -> Vec<Regex> {
        AgentConfig::new("a", vec!["x".into()]).markers().unwrap()
    }

    #[test]
    fn status_words() {
        assert_eq!(parse_status(None), StatusValue::Missing);
        assert_eq!(parse_status(Some(b"Reproduced")), StatusValue::Reproduced);
        assert_eq!(parse_status(Some(b"  Not Reproduced\n")), StatusValue::NotReproduced);
        assert_eq!(parse_status(Some(b"NotReproduced")), StatusValue::Malformed);
        assert_eq!(parse_status(Some(b"Reproduced!")), StatusValue::Malformed);
        assert_eq!(parse_status(Some(b"`Reproduced`")), StatusValue::Malformed);
        assert_eq!(parse_status(Some(b"Reproduced\nNot Reproduced")), StatusValue::Malformed);
        assert_eq!(parse_status(Some(b"")), StatusValue::Malformed);
        assert_eq!(parse_status(Some(&[0xff, 0xfe])), StatusValue::Malformed);
    }

    #[test]
    fn clean_log_has_no_flags() {
        let log = "[stdout] running analysis.R\n[stdout] fixed path\n";
        assert!(audit_leakage(log, "/base_results", &markers(), None).is_empty());
    }

    #[test]
    fn early_read_is_flagged() {
        let log = "[stdout] $ ls /base_results\n[stdout] $ Rscript analysis.R\n[stdout] analysis.R ran successfully\n";
        let flags = audit_leakage(log, "/base_results", &markers(), None);
        assert_eq!(flags.len(), 1);
        assert_eq!(flags[0].line_no, 1);
    }

    #[test]
    fn reads_after_completion_are_allowed() {
        let log = "[stdout] $ Rscript analysis.R\n[stdout] analysis.R ran successfully\n[stdout] $ diff out.csv /base_results/out.csv\n";
        assert!(audit_leakage(log, "/base_results", &markers(), None).is_empty());
    }

    #[test]
    fn prompt_echo_and_similar_names_are_ignored() {
        let prompt = agent_prompt("/base_results");
        let echoed = prompt.lines().find(|l| l.contains("/base_results")).unwrap();
        let log = format!("[stdout] {echoed}\n[stdout] cat /base_results_old/x\n[stdout] cat /base_results/x\n");
        let flags = audit_leakage(&log, "/base_results", &markers(), Some(&prompt));
        assert_eq!(flags.len(), 1);
        assert_eq!(flags[0].line_no, 3);
    }

    #[test]
    fn prompt_substitutes_only_the_mount_path() {
        assert_eq!(agent_prompt("/base_results"), AGENT_PROMPT);
        let p = agent_prompt("/gt");
        assert!(!p.contains("/base_results"));
        assert_eq!(p.replace("/gt", "/base_results"), AGENT_PROMPT);
        let fixture =
            std::fs::read_to_string(format!("{}/../../fixtures/prompts/agent.txt", env!("CARGO_MANIFEST_DIR")))
                .unwrap();
        assert_eq!(AGENT_PROMPT, fixture);
    }

    #[test]
    fn config_validation() {
        let ok = AgentConfig::new("a", vec!["run".into(), PROMPT_PLACEHOLDER.into()]);
        ok.validate().unwrap();
        assert_eq!(ok.command(), ["run", PROMPT_MOUNT]);
        let mut c = ok.clone();
        c.time_limit = 0;
        assert!(c.validate().is_err());
        let mut c = ok.clone();
        c.launch_command.clear();
        assert!(c.validate().is_err());
        let mut c = ok;
        c.completion_markers = vec!["(".into()];
        assert!(c.validate().is_err());
    }

    #[test]
    fn local_backend_refuses_agents() {
        let dir = tempfile::tempdir().unwrap();
        let project = crate::corpus::tests::shell_project(dir.path());
        let case = TestCase {
            case_id: "c".into(),
            origin_project: project.id().into(),
            category: crate::corpus::Category::A,
            seed: 0,
            injections: vec![],
            project: project.manifest.clone(),
            workspace: project.read_workspace().unwrap(),
            ground_truth: project.read_ground_truth().unwrap(),
        };
        let cfg = AgentConfig::new("a", vec!["true".into()]);
        let r = launch_agent(&case, &cfg, &LocalBackend::default(), &AgentRunOptions::default());
        assert!(matches!(r, Err(Error::AgentLaunchFailure(_))));
    }
}
