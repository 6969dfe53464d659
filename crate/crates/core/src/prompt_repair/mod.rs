//! Iterative prompt-based repair: execute, prompt a completion backend with the
//! failure, write its code back, re-execute in a fresh directory.

pub mod backends;
mod matrix;

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::LazyLock;
use std::time::Instant;

use regex::{Captures, Regex};
use serde::{Deserialize, Serialize};

use crate::analysis::{RunRecord, Workflow};
use crate::corpus::{write_tree, TestCase};
use crate::error::{Error, IoContext, Result};
use crate::paths::{copy_tree, to_json_pretty, write_file, RelPath};
use crate::sandbox::{run_scripts, truncate_tail, Executor, ScriptsRun};
use crate::validator::{classify, compare_outputs, Classification, ComparisonPolicy, ComparisonReport, ExpectedSet};

pub use backends::{CompletionBackend, CompletionRequest, NullBackend, OpenAiBackend, OracleBackend, ReplayBackend};
pub use matrix::{run_matrix, MatrixOptions};

pub const MINIMAL_TEMPLATE: &str = include_str!("../../assets/prompts/minimal.txt");
pub const MEDIUM_TEMPLATE: &str = include_str!("../../assets/prompts/medium.txt");
pub const FULL_TEMPLATE: &str = include_str!("../../assets/prompts/full.txt");

pub const DEFAULT_MAX_ITERATIONS: u32 = 5;
/// Per-attempt cap on the log text carried into the next prompt.
pub const DEFAULT_ATTEMPT_LOG_CAP: usize = 16 * 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PromptLevel {
    Minimal,
    Medium,
    Full,
}

impl PromptLevel {
    pub const ALL: [PromptLevel; 3] = [PromptLevel::Minimal, PromptLevel::Medium, PromptLevel::Full];

    pub fn template(&self) -> &'static str {
        match self {
            PromptLevel::Minimal => MINIMAL_TEMPLATE,
            PromptLevel::Medium => MEDIUM_TEMPLATE,
            PromptLevel::Full => FULL_TEMPLATE,
        }
    }
}

impl fmt::Display for PromptLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PromptLevel::Minimal => "Minimal",
            PromptLevel::Medium => "Medium",
            PromptLevel::Full => "Full",
        })
    }
}

impl FromStr for PromptLevel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "minimal" => Ok(PromptLevel::Minimal),
            "medium" => Ok(PromptLevel::Medium),
            "full" => Ok(PromptLevel::Full),
            _ => Err(Error::InvalidConfig(format!("unknown prompt level {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PromptContext {
    pub script_name: String,
    pub script_code: String,
    pub log: String,
    pub paper: Option<String>,
    pub support_scripts: Option<Vec<(String, String)>>,
}

/// `--- name ---` sections, one per support script.
pub fn format_support(scripts: &[(String, String)]) -> String {
    scripts.iter().map(|(name, text)| format!("--- {name} ---\n{text}")).collect::<Vec<_>>().join("\n")
}

static PLACEHOLDER: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"\{(log|script_name|script_code|paper|context)\}").expect("placeholder regex"));

/// Substitutes the context into the level's template in a single pass.
pub fn render_prompt(level: PromptLevel, ctx: &PromptContext) -> Result<String> {
    let paper = match level {
        PromptLevel::Minimal => "",
        _ => ctx.paper.as_deref().ok_or(Error::MissingContextField("paper"))?,
    };
    let context = match level {
        PromptLevel::Full => {
            format_support(ctx.support_scripts.as_deref().ok_or(Error::MissingContextField("support_scripts"))?)
        }
        _ => String::new(),
    };
    Ok(PLACEHOLDER
        .replace_all(level.template(), |c: &Captures| match &c[1] {
            "log" => ctx.log.clone(),
            "script_name" => ctx.script_name.clone(),
            "script_code" => ctx.script_code.clone(),
            "paper" => paper.to_string(),
            _ => context.clone(),
        })
        .into_owned())
}

static THINK: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?s)<think>.*?</think>").expect("think regex"));

/// Recovers script text from a model response: drops `<think>` spans and keeps
/// the largest fenced block when fences are present.
pub fn extract_code(response: &str) -> Result<String> {
    let mut text = THINK.replace_all(response, "").into_owned();
    if let Some(i) = text.rfind("</think>") {
        text = text[i + "</think>".len()..].to_string();
    }
    if let Some(i) = text.find("<think>") {
        text.truncate(i);
    }
    let mut blocks: Vec<String> = Vec::new();
    let mut current: Option<String> = None;
    for line in text.split_inclusive('\n') {
        if line.trim_start().starts_with("```") {
            match current.take() {
                Some(block) => blocks.push(block),
                None => current = Some(String::new()),
            }
        } else if let Some(block) = current.as_mut() {
            block.push_str(line);
        }
    }
    if let Some(block) = current {
        blocks.push(block);
    }
    let code = match blocks.into_iter().reduce(|best, b| if b.len() > best.len() { b } else { best }) {
        Some(mut block) => {
            if block.ends_with('\n') {
                block.pop();
            }
            block
        }
        None => text.trim_start_matches(['\n', '\r']).to_string(),
    };
    if code.trim().is_empty() {
        return Err(Error::EmptyAfterExtraction);
    }
    Ok(code)
}

#[derive(Debug, Clone)]
pub struct RepairOptions {
    pub max_iterations: u32,
    /// Overrides the case's own comparison policy.
    pub policy: Option<ComparisonPolicy>,
    pub attempt_log_cap: usize,
    /// Root for per-run artifact directories; nothing is written when `None`.
    pub artifacts: Option<PathBuf>,
}

impl Default for RepairOptions {
    fn default() -> Self {
        RepairOptions {
            max_iterations: DEFAULT_MAX_ITERATIONS,
            policy: None,
            attempt_log_cap: DEFAULT_ATTEMPT_LOG_CAP,
            artifacts: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendCall {
    pub target: RelPath,
    pub prompt: String,
    pub response: Option<String>,
    pub error: Option<String>,
}

/// One repair round: a backend call per target file, then a re-execution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepairRound {
    pub round: u32,
    pub calls: Vec<BackendCall>,
    /// `None` when every call failed and the working tree was left unchanged.
    pub execution: Option<ScriptsRun>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepairOutcome {
    pub case_id: String,
    pub backend_identity: String,
    pub level: PromptLevel,
    pub attempts_used: u32,
    pub backend_calls: u32,
    pub initial: ScriptsRun,
    pub rounds: Vec<RepairRound>,
    pub classification: Classification,
    pub final_report: ComparisonReport,
    pub wall_time: f64,
}

impl RepairOutcome {
    pub fn to_record(&self, case: &TestCase) -> RunRecord {
        RunRecord {
            case_id: self.case_id.clone(),
            error_kinds: case.error_kinds(),
            category: case.category,
            workflow: Workflow::Prompt,
            backend_identity: self.backend_identity.clone(),
            prompt_level: Some(self.level),
            attempts: self.attempts_used,
            execution_time: self.wall_time,
            outcome: self.classification,
            status_file: None,
            leakage_flags: None,
            error: None,
        }
    }
}

pub fn run_id(case_id: &str, backend_identity: &str, level: PromptLevel) -> String {
    let clean: String = backend_identity
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || "-_.".contains(c) { c } else { '_' })
        .collect();
    format!("{case_id}__{clean}__{level}")
}

fn artifact_name(target: &RelPath) -> String {
    target.as_str().replace('/', "_")
}

struct Evaluation {
    run: ScriptsRun,
    report: ComparisonReport,
    classification: Classification,
    workdir: tempfile::TempDir,
}

/// Materializes `tree` with `overrides` in a fresh directory and runs the entry scripts there.
fn evaluate(
    case: &TestCase,
    overrides: &BTreeMap<RelPath, String>,
    executor: &dyn Executor,
    expected: &ExpectedSet,
    policy: &ComparisonPolicy,
) -> Result<Evaluation> {
    let workdir = tempfile::Builder::new().prefix("reprokit-attempt-").tempdir().at(std::env::temp_dir())?;
    let mut tree = case.workspace.clone();
    for (p, text) in overrides {
        tree.insert(p.clone(), text.clone().into_bytes());
    }
    write_tree(workdir.path(), &tree)?;
    let run = run_scripts(executor, workdir.path(), &case.project.entry_scripts, &case.project.runtime_spec)?;
    let report = compare_outputs(workdir.path(), expected, policy)?;
    let report = match &run.failed_script {
        Some(s) => report.with_execution_failure(format!("ExecutionFailed: {s} ({})", run.exit_status)),
        None => report,
    };
    let classification = classify(&run.exit_status, &report);
    Ok(Evaluation { run, report, classification, workdir })
}

/// The log of one execution as carried into the next prompt.
fn attempt_log(e: &Evaluation) -> String {
    let mut log = e.run.log.clone();
    if e.run.exit_status.is_success() && e.classification == Classification::NotReproduced {
        if !log.is_empty() && !log.ends_with('\n') {
            log.push('\n');
        }
        log.push_str("[harness] the scripts ran but their outputs differ from the expected results:\n");
        log.push_str(&e.report.render());
    }
    log
}

struct Artifacts {
    dir: PathBuf,
}

impl Artifacts {
    fn new(root: &Path, run_id: &str) -> Result<Self> {
        let dir = root.join(run_id);
        if dir.exists() {
            std::fs::remove_dir_all(&dir).at(&dir)?;
        }
        std::fs::create_dir_all(&dir).at(&dir)?;
        Ok(Artifacts { dir })
    }

    fn write(&self, rel: &str, text: &str) -> Result<()> {
        write_file(&self.dir.join(rel), text)
    }
}

/// Runs the repair loop for one case, one backend and one prompt level.
pub fn repair_loop(
    case: &TestCase,
    backend: &dyn CompletionBackend,
    level: PromptLevel,
    executor: &dyn Executor,
    opts: &RepairOptions,
) -> Result<RepairOutcome> {
    if opts.max_iterations == 0 {
        return Err(Error::InvalidConfig("max_iterations must be at least 1".into()));
    }
    executor.check(&case.project.runtime_spec)?;
    let started = Instant::now();
    let identity = backend.identity();
    let id = run_id(&case.case_id, &identity, level);
    let artifacts = opts.artifacts.as_deref().map(|root| Artifacts::new(root, &id)).transpose()?;

    let truth = tempfile::Builder::new().prefix("reprokit-truth-").tempdir().at(std::env::temp_dir())?;
    write_tree(truth.path(), &case.ground_truth)?;
    let expected = ExpectedSet { root: truth.path().to_path_buf(), outputs: case.project.expected_outputs.clone() };
    let policy = case.project.policy_or(opts.policy.as_ref());

    let targets = case.touched_files();
    let mut current: BTreeMap<RelPath, String> = BTreeMap::new();
    for t in &targets {
        let bytes = case.workspace.get(t).ok_or_else(|| Error::PathViolation(format!("target {t} missing")))?;
        current.insert(t.clone(), String::from_utf8_lossy(bytes).into_owned());
    }
    let paper = case.workspace.get(&case.project.paper_doc).map(|b| String::from_utf8_lossy(b).into_owned());

    let mut eval = evaluate(case, &current, executor, &expected, &policy)?;
    let initial = eval.run.clone();
    let mut history = format!("=== attempt 0 ===\n{}", truncate_tail(&attempt_log(&eval), opts.attempt_log_cap));
    if let Some(a) = &artifacts {
        a.write("logs/attempt_0.log", &eval.run.log)?;
    }

    let mut rounds = Vec::new();
    let mut calls_made = 0u32;
    let mut round = 0u32;
    while eval.classification == Classification::NotReproduced && round < opts.max_iterations {
        round += 1;
        let mut calls = Vec::new();
        let mut edited = false;
        for target in &targets {
            calls_made += 1;
            let ctx = PromptContext {
                script_name: target.to_string(),
                script_code: current[target].clone(),
                log: history.clone(),
                paper: (level != PromptLevel::Minimal).then(|| paper.clone().unwrap_or_default()),
                support_scripts: (level == PromptLevel::Full).then(|| {
                    case.project
                        .scripts()
                        .filter(|s| *s != target)
                        .map(|s| {
                            let text = current.get(s).cloned().unwrap_or_else(|| {
                                case.workspace
                                    .get(s)
                                    .map(|b| String::from_utf8_lossy(b).into_owned())
                                    .unwrap_or_default()
                            });
                            (s.to_string(), text)
                        })
                        .collect()
                }),
            };
            let prompt = render_prompt(level, &ctx)?;
            let request = CompletionRequest {
                prompt: &prompt,
                case,
                target,
                current: &current[target],
                round,
                call_index: calls_made,
            };
            let reply = backend.complete(&request);
            let name = artifact_name(target);
            if let Some(a) = &artifacts {
                a.write(&format!("prompts/attempt_{round}__{name}.txt"), &prompt)?;
                match &reply {
                    Ok(text) => a.write(&format!("responses/attempt_{round}__{name}.txt"), text)?,
                    Err(e) => a.write(&format!("responses/attempt_{round}__{name}.error.txt"), &e.to_string())?,
                }
            }
            let (response, error) = match reply.and_then(|r| extract_code(&r).map(|code| (r, code))) {
                Ok((raw, mut code)) => {
                    if !code.ends_with('\n') {
                        code.push('\n');
                    }
                    current.insert(target.clone(), code);
                    edited = true;
                    (Some(raw), None)
                }
                Err(e) => {
                    tracing::warn!(run = %id, round, target = %target, "backend call failed: {e}");
                    (None, Some(e.to_string()))
                }
            };
            calls.push(BackendCall { target: target.clone(), prompt, response, error });
        }
        if !edited {
            rounds.push(RepairRound { round, calls, execution: None });
            continue;
        }
        eval = evaluate(case, &current, executor, &expected, &policy)?;
        history.push_str(&format!(
            "\n=== attempt {round} ===\n{}",
            truncate_tail(&attempt_log(&eval), opts.attempt_log_cap)
        ));
        if let Some(a) = &artifacts {
            a.write(&format!("logs/attempt_{round}.log"), &eval.run.log)?;
            for (t, text) in &current {
                a.write(&format!("scripts/attempt_{round}/{t}"), text)?;
            }
        }
        rounds.push(RepairRound { round, calls, execution: Some(eval.run.clone()) });
    }

    let outcome = RepairOutcome {
        case_id: case.case_id.clone(),
        backend_identity: identity,
        level,
        attempts_used: round,
        backend_calls: calls_made,
        initial,
        rounds,
        classification: eval.classification,
        final_report: eval.report.clone(),
        wall_time: started.elapsed().as_secs_f64(),
    };
    if let Some(a) = &artifacts {
        a.write("comparison.txt", &eval.report.render())?;
        copy_tree(eval.workdir.path(), &a.dir.join("final_workspace"))?;
        let meta = serde_json::json!({
            "run_id": id,
            "case_id": outcome.case_id,
            "backend_identity": outcome.backend_identity,
            "backend_settings": backend.settings(),
            "prompt_level": level,
            "max_iterations": opts.max_iterations,
            "reprompt_on_mismatch": true,
            "comparison_policy": policy,
            "targets": targets,
            "attempts_used": outcome.attempts_used,
            "backend_calls": outcome.backend_calls,
            "classification": outcome.classification,
            "wall_time": outcome.wall_time,
        });
        a.write("meta.json", &to_json_pretty(&meta))?;
    }
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx() -> PromptContext {
        PromptContext {
            script_name: "s.R".into(),
            script_code: "x<-1".into(),
            log: "L".into(),
            paper: Some("# P\n\nText.".into()),
            support_scripts: Some(vec![("u.R".into(), "f <- function() 1\n".into())]),
        }
    }

    #[test]
    fn goldens() {
        let golden = |name: &str| {
            std::fs::read_to_string(format!(
                "{}/../../fixtures/prompts/{name}.rendered.txt",
                env!("CARGO_MANIFEST_DIR")
            ))
            .unwrap()
        };
        assert_eq!(render_prompt(PromptLevel::Minimal, &ctx()).unwrap(), golden("minimal"));
        assert_eq!(render_prompt(PromptLevel::Medium, &ctx()).unwrap(), golden("medium"));
        assert_eq!(render_prompt(PromptLevel::Full, &ctx()).unwrap(), golden("full"));
    }

    #[test]
    fn shipped_templates_match_fixtures() {
        for (level, name) in
            [(PromptLevel::Minimal, "minimal"), (PromptLevel::Medium, "medium"), (PromptLevel::Full, "full")]
        {
            let fixture =
                std::fs::read_to_string(format!("{}/../../fixtures/prompts/{name}.txt", env!("CARGO_MANIFEST_DIR")))
                    .unwrap();
            assert_eq!(level.template(), fixture);
        }
    }

    #[test]
    fn missing_fields() {
        let mut c = ctx();
        c.paper = None;
        assert!(matches!(render_prompt(PromptLevel::Medium, &c), Err(Error::MissingContextField("paper"))));
        assert!(render_prompt(PromptLevel::Minimal, &c).is_ok());
        let mut c = ctx();
        c.support_scripts = None;
        assert!(matches!(render_prompt(PromptLevel::Full, &c), Err(Error::MissingContextField("support_scripts"))));
    }

    #[test]
    fn empty_support_renders_empty_section() {
        let mut c = ctx();
        c.support_scripts = Some(vec![]);
        let out = render_prompt(PromptLevel::Full, &c).unwrap();
        assert!(out.contains("--- Other R Scripts (Context) ---\n\n\n--- Last Run Error Log ---"));
    }

    #[test]
    fn substitution_is_single_pass() {
        let mut c = ctx();
        c.log = "{script_name}".into();
        let out = render_prompt(PromptLevel::Minimal, &c).unwrap();
        assert!(out.contains("--- Error Log ---\n{script_name}\n"));
    }

    #[test]
    fn extraction() {
        assert_eq!(extract_code("```r\nx <- 1\n```").unwrap(), "x <- 1");
        assert_eq!(extract_code("<think>plan</think>x <- 1").unwrap(), "x <- 1");
        assert_eq!(extract_code("x <- 1").unwrap(), "x <- 1");
        assert_eq!(extract_code("Here:\n```r\na\n```\nand\n```\nlonger\nblock\n```\n").unwrap(), "longer\nblock");
        assert_eq!(extract_code("```R\nunterminated\n").unwrap(), "unterminated");
        assert_eq!(extract_code("reasoning only</think>\ny <- 2\n").unwrap(), "y <- 2\n");
        assert!(matches!(extract_code("<think>all thought</think>\n"), Err(Error::EmptyAfterExtraction)));
        assert!(matches!(extract_code(""), Err(Error::EmptyAfterExtraction)));
    }

    #[test]
    fn level_names() {
        for l in PromptLevel::ALL {
            assert_eq!(l.to_string().parse::<PromptLevel>().unwrap(), l);
        }
        assert_eq!(run_id("c", "a/b c", PromptLevel::Full), "c__a_b_c__Full");
    }
}
