//! Ground-truth projects and test cases on disk.
//!
//! A project directory holds `project.json`, the project's paper as `paper.md`, its
//! scripts and data, and the verified outputs under `base_results/`. A test
//! case directory holds `case.json`, the mutated copy under `workspace/` and a
//! copy of the ground truth under `base_results/`.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, IoContext, Result};
use crate::injector::InjectionRecord;
use crate::paths::{
    hash_file, list_files, read_string, sha256_hex, to_json_pretty, write_file, RelPath, HASH_ALGORITHM,
};
use crate::sandbox::{run_scripts, Executor, ExitStatus};
use crate::validator::{compare_outputs, ComparisonPolicy, ComparisonReport, ExpectedSet};

pub const PROJECT_MANIFEST: &str = "project.json";
pub const CASE_MANIFEST: &str = "case.json";
pub const BASE_RESULTS: &str = "base_results";
pub const WORKSPACE: &str = "workspace";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuntimeSpec {
    pub image_name: String,
    pub command_template: String,
    pub memory_limit: u64,
    pub cpu_count: u32,
    pub script_timeout: u64,
}

impl Default for RuntimeSpec {
    fn default() -> Self {
        RuntimeSpec {
            image_name: "rocker/r-ver:4.4.1".into(),
            command_template: "Rscript {script}".into(),
            memory_limit: 8 << 30,
            cpu_count: 8,
            script_timeout: 300,
        }
    }
}

impl RuntimeSpec {
    pub fn validate(&self) -> Result<()> {
        if self.memory_limit == 0 {
            return Err(Error::InvalidConfig("memory_limit must be positive".into()));
        }
        if self.cpu_count == 0 {
            return Err(Error::InvalidConfig("cpu_count must be at least 1".into()));
        }
        if self.script_timeout == 0 {
            return Err(Error::InvalidConfig("script_timeout must be positive".into()));
        }
        if self.command_template.matches("{script}").count() != 1 {
            return Err(Error::InvalidConfig("command_template must contain {script} exactly once".into()));
        }
        Ok(())
    }

    /// The argv that runs `script`.
    pub fn command_for(&self, script: &RelPath) -> Result<Vec<String>> {
        self.validate()?;
        let words = shlex::split(&self.command_template)
            .ok_or_else(|| Error::InvalidConfig(format!("cannot split {:?}", self.command_template)))?;
        if words.is_empty() {
            return Err(Error::InvalidConfig("empty command_template".into()));
        }
        Ok(words.into_iter().map(|w| w.replace("{script}", script.as_str())).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpectedOutput {
    pub path: RelPath,
    pub hash: String,
    pub size: u64,
}

/// Contents of `project.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProjectManifest {
    pub project_id: String,
    pub paper_doc: RelPath,
    pub entry_scripts: Vec<RelPath>,
    #[serde(default)]
    pub support_scripts: Vec<RelPath>,
    #[serde(default)]
    pub data_files: Vec<RelPath>,
    pub expected_outputs: Vec<ExpectedOutput>,
    pub hash_algorithm: String,
    #[serde(default)]
    pub runtime_spec: RuntimeSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comparison_policy: Option<ComparisonPolicy>,
}

impl ProjectManifest {
    pub fn scripts(&self) -> impl Iterator<Item = &RelPath> {
        self.entry_scripts.iter().chain(&self.support_scripts)
    }

    pub fn is_script(&self, path: &RelPath) -> bool {
        self.scripts().any(|s| s == path)
    }

    /// Files that make up a runnable workspace: paper, scripts and data.
    pub fn workspace_files(&self) -> Vec<RelPath> {
        let mut files: Vec<RelPath> =
            std::iter::once(&self.paper_doc).chain(self.scripts()).chain(&self.data_files).cloned().collect();
        files.sort();
        files.dedup();
        files
    }

    pub fn policy_or(&self, flag: Option<&ComparisonPolicy>) -> ComparisonPolicy {
        flag.or(self.comparison_policy.as_ref()).cloned().unwrap_or_default()
    }

    fn check_shape(&self, path: &Path) -> Result<()> {
        if self.project_id.trim().is_empty() {
            return Err(Error::malformed(path, "project_id is empty"));
        }
        if self.entry_scripts.is_empty() {
            return Err(Error::malformed(path, "entry_scripts is empty"));
        }
        if self.expected_outputs.is_empty() {
            return Err(Error::malformed(path, "expected_outputs is empty"));
        }
        if self.hash_algorithm != HASH_ALGORITHM {
            return Err(Error::malformed(path, format!("unsupported hash algorithm {:?}", self.hash_algorithm)));
        }
        self.runtime_spec.validate().map_err(|e| Error::malformed(path, e))?;
        if let Some(p) = &self.comparison_policy {
            p.validate().map_err(|e| Error::malformed(path, e))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct GroundTruthProject {
    pub root: PathBuf,
    pub manifest: ProjectManifest,
    pub paper: String,
}

impl GroundTruthProject {
    pub fn id(&self) -> &str {
        &self.manifest.project_id
    }

    pub fn base_results(&self) -> PathBuf {
        self.root.join(BASE_RESULTS)
    }

    pub fn expected(&self) -> ExpectedSet {
        ExpectedSet { root: self.base_results(), outputs: self.manifest.expected_outputs.clone() }
    }

    pub fn read_workspace(&self) -> Result<FileTree> {
        read_listed(&self.root, &self.manifest.workspace_files())
    }

    pub fn read_ground_truth(&self) -> Result<FileTree> {
        let paths: Vec<RelPath> = self.manifest.expected_outputs.iter().map(|o| o.path.clone()).collect();
        read_listed(&self.base_results(), &paths)
    }
}

/// An in-memory file tree keyed by root-relative path.
pub type FileTree = BTreeMap<RelPath, Vec<u8>>;

fn read_listed(root: &Path, paths: &[RelPath]) -> Result<FileTree> {
    paths
        .iter()
        .map(|p| {
            let full = p.under(root);
            Ok((p.clone(), std::fs::read(&full).at(&full)?))
        })
        .collect()
}

pub fn write_tree(root: &Path, tree: &FileTree) -> Result<()> {
    std::fs::create_dir_all(root).at(root)?;
    for (p, bytes) in tree {
        write_file(&p.under(root), bytes)?;
    }
    Ok(())
}

pub fn read_tree(root: &Path) -> Result<FileTree> {
    let files = list_files(root)?;
    read_listed(root, &files)
}

/// Loads and validates a project: shape, path containment, and output hashes.
pub fn load_project(root: &Path) -> Result<GroundTruthProject> {
    let path = root.join(PROJECT_MANIFEST);
    if !path.is_file() {
        return Err(Error::ManifestMissing(path));
    }
    let text = read_string(&path)?;
    let raw: serde_json::Value = serde_json::from_str(&text).map_err(|e| Error::malformed(&path, e))?;
    check_raw_paths(&raw)?;
    let manifest: ProjectManifest = serde_json::from_value(raw).map_err(|e| Error::malformed(&path, e))?;
    manifest.check_shape(&path)?;
    for f in manifest.workspace_files() {
        if !f.under(root).is_file() {
            return Err(Error::PathViolation(format!("listed file {f} does not exist in {}", root.display())));
        }
    }
    let base = root.join(BASE_RESULTS);
    for out in &manifest.expected_outputs {
        let full = out.path.under(&base);
        if !full.is_file() {
            return Err(Error::PathViolation(format!("expected output {BASE_RESULTS}/{} does not exist", out.path)));
        }
        let (hash, size) = hash_file(&full)?;
        if hash != out.hash || size != out.size {
            return Err(Error::HashMismatch { path: out.path.to_string(), expected: out.hash.clone(), found: hash });
        }
    }
    let paper = read_string(&manifest.paper_doc.under(root))?;
    Ok(GroundTruthProject { root: root.to_path_buf(), manifest, paper })
}

/// Reports escaping paths as `PathViolation` rather than a generic parse error.
fn check_raw_paths(raw: &serde_json::Value) -> Result<()> {
    let mut paths = Vec::new();
    if let Some(s) = raw.get("paper_doc").and_then(|v| v.as_str()) {
        paths.push(s);
    }
    for key in ["entry_scripts", "support_scripts", "data_files"] {
        if let Some(list) = raw.get(key).and_then(|v| v.as_array()) {
            paths.extend(list.iter().filter_map(|v| v.as_str()));
        }
    }
    if let Some(list) = raw.get("expected_outputs").and_then(|v| v.as_array()) {
        paths.extend(list.iter().filter_map(|o| o.get("path").and_then(|v| v.as_str())));
    }
    for p in paths {
        RelPath::new(p)?;
    }
    Ok(())
}

/// Recomputes `expected_outputs` from the files under `base_results/` and rewrites the manifest.
pub fn seal_project(root: &Path) -> Result<ProjectManifest> {
    let path = root.join(PROJECT_MANIFEST);
    if !path.is_file() {
        return Err(Error::ManifestMissing(path));
    }
    let mut manifest: ProjectManifest =
        serde_json::from_str(&read_string(&path)?).map_err(|e| Error::malformed(&path, e))?;
    let base = root.join(BASE_RESULTS);
    let listed: Vec<RelPath> = if manifest.expected_outputs.is_empty() {
        list_files(&base)?
    } else {
        manifest.expected_outputs.iter().map(|o| o.path.clone()).collect()
    };
    manifest.expected_outputs = listed
        .into_iter()
        .map(|p| {
            let (hash, size) = hash_file(&p.under(&base))?;
            Ok(ExpectedOutput { path: p, hash, size })
        })
        .collect::<Result<_>>()?;
    manifest.hash_algorithm = HASH_ALGORITHM.into();
    write_file(&path, to_json_pretty(&manifest))?;
    Ok(manifest)
}

/// Runs the entry scripts on a pristine copy and compares against the stored outputs.
pub fn verify_ground_truth(
    project: &GroundTruthProject,
    executor: &dyn Executor,
    policy: &ComparisonPolicy,
) -> Result<ComparisonReport> {
    let m = &project.manifest;
    executor.check(&m.runtime_spec)?;
    let scratch = tempfile::Builder::new().prefix("reprokit-verify-").tempdir().at(std::env::temp_dir())?;
    write_tree(scratch.path(), &project.read_workspace()?)?;
    let run = run_scripts(executor, scratch.path(), &m.entry_scripts, &m.runtime_spec)?;
    if run.exit_status == ExitStatus::Timeout {
        return Err(Error::ExecutionTimeout(m.runtime_spec.script_timeout));
    }
    let report = compare_outputs(scratch.path(), &project.expected(), policy)?;
    Ok(match &run.failed_script {
        Some(script) => report.with_execution_failure(format!("ExecutionFailed: {script} ({})", run.exit_status)),
        None => report,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Category {
    A,
    B,
    C,
}

impl Category {
    pub const ALL: [Category; 3] = [Category::A, Category::B, Category::C];
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Category::A => "A",
            Category::B => "B",
            Category::C => "C",
        })
    }
}

impl FromStr for Category {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "A" | "a" => Ok(Category::A),
            "B" | "b" => Ok(Category::B),
            "C" | "c" => Ok(Category::C),
            other => Err(Error::InvalidConfig(format!("unknown category {other:?}"))),
        }
    }
}

/// A mutated copy of a project with the witness records of every injected error.
#[derive(Debug, Clone, PartialEq)]
pub struct TestCase {
    pub case_id: String,
    pub origin_project: String,
    pub category: Category,
    pub seed: u64,
    pub injections: Vec<InjectionRecord>,
    /// Manifest of the origin project, so a case is runnable on its own.
    pub project: ProjectManifest,
    pub workspace: FileTree,
    pub ground_truth: FileTree,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CaseManifest {
    case_id: String,
    origin_project: String,
    category: Category,
    seed: u64,
    injections: Vec<InjectionRecord>,
    project: ProjectManifest,
}

impl TestCase {
    /// Files touched by at least one injection, in first-touch order.
    pub fn touched_files(&self) -> Vec<RelPath> {
        let mut out: Vec<RelPath> = Vec::new();
        for r in &self.injections {
            if !out.contains(&r.location.file) {
                out.push(r.location.file.clone());
            }
        }
        out
    }

    /// The pristine text of `file`, recovered by undoing its injections in reverse.
    pub fn pristine(&self, file: &RelPath) -> Option<String> {
        let text = String::from_utf8(self.workspace.get(file)?.clone()).ok()?;
        Some(self.injections.iter().rev().filter(|r| &r.location.file == file).fold(text, |t, r| r.revert(&t)))
    }

    pub fn error_kinds(&self) -> Vec<String> {
        self.injections.iter().map(|r| r.operator.kind.to_string()).collect()
    }
}

pub fn write_test_case(tc: &TestCase, out_dir: &Path) -> Result<PathBuf> {
    let manifest = CaseManifest {
        case_id: tc.case_id.clone(),
        origin_project: tc.origin_project.clone(),
        category: tc.category,
        seed: tc.seed,
        injections: tc.injections.clone(),
        project: tc.project.clone(),
    };
    std::fs::create_dir_all(out_dir).at(out_dir)?;
    for sub in [WORKSPACE, BASE_RESULTS] {
        let d = out_dir.join(sub);
        if d.exists() {
            std::fs::remove_dir_all(&d).at(&d)?;
        }
    }
    write_tree(&out_dir.join(WORKSPACE), &tc.workspace)?;
    write_tree(&out_dir.join(BASE_RESULTS), &tc.ground_truth)?;
    let path = out_dir.join(CASE_MANIFEST);
    write_file(&path, to_json_pretty(&manifest))?;
    Ok(path)
}

pub fn load_test_case(dir: &Path) -> Result<TestCase> {
    let path = dir.join(CASE_MANIFEST);
    if !path.is_file() {
        return Err(Error::ManifestMissing(path));
    }
    let m: CaseManifest = serde_json::from_str(&read_string(&path)?).map_err(|e| Error::malformed(&path, e))?;
    if m.injections.is_empty() {
        return Err(Error::malformed(&path, "injections is empty"));
    }
    m.project.check_shape(&path)?;
    let workspace = read_tree(&dir.join(WORKSPACE))?;
    for r in &m.injections {
        if !workspace.contains_key(&r.location.file) {
            return Err(Error::malformed(
                &path,
                format!("injection target {} is not in the workspace", r.location.file),
            ));
        }
    }
    let ground_truth = read_tree(&dir.join(BASE_RESULTS))?;
    for out in &m.project.expected_outputs {
        match ground_truth.get(&out.path) {
            Some(bytes) if sha256_hex(bytes) == out.hash => {}
            Some(bytes) => {
                return Err(Error::HashMismatch {
                    path: out.path.to_string(),
                    expected: out.hash.clone(),
                    found: sha256_hex(bytes),
                })
            }
            None => return Err(Error::malformed(&path, format!("ground truth {} is missing", out.path))),
        }
    }
    Ok(TestCase {
        case_id: m.case_id,
        origin_project: m.origin_project,
        category: m.category,
        seed: m.seed,
        injections: m.injections,
        project: m.project,
        workspace,
        ground_truth,
    })
}

/// A case together with the directory it was loaded from.
#[derive(Debug, Clone)]
pub struct StoredCase {
    pub dir: PathBuf,
    pub case: TestCase,
}

impl StoredCase {
    pub fn expected(&self) -> ExpectedSet {
        ExpectedSet { root: self.dir.join(BASE_RESULTS), outputs: self.case.project.expected_outputs.clone() }
    }
}

/// Loads every case directory directly under `corpus_dir`, sorted by case id.
pub fn load_corpus(corpus_dir: &Path) -> Result<Vec<StoredCase>> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(corpus_dir).at(corpus_dir)? {
        let dir = entry.at(corpus_dir)?.path();
        if dir.join(CASE_MANIFEST).is_file() {
            let case = load_test_case(&dir)?;
            out.push(StoredCase { dir, case });
        }
    }
    out.sort_by(|a, b| a.case.case_id.cmp(&b.case.case_id));
    for w in out.windows(2) {
        if w[0].case.case_id == w[1].case.case_id {
            return Err(Error::InvalidPlan(format!("duplicate case id {}", w[0].case.case_id)));
        }
    }
    Ok(out)
}

/// Loads every project directory directly under `projects_dir`, sorted by id.
pub fn load_projects(projects_dir: &Path) -> Result<Vec<GroundTruthProject>> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(projects_dir).at(projects_dir)? {
        let dir = entry.at(projects_dir)?.path();
        if dir.join(PROJECT_MANIFEST).is_file() {
            out.push(load_project(&dir)?);
        }
    }
    out.sort_by(|a, b| a.manifest.project_id.cmp(&b.manifest.project_id));
    Ok(out)
}
