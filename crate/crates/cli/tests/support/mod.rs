#![allow(dead_code)]

pub mod agents;

use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::OnceLock;

use reprokit_core::injector::BenchmarkPlan;
use reprokit_core::{
    generate_benchmark, load_corpus, load_projects, verify_broken, write_test_case, ComparisonPolicy, ContainerBackend,
    LocalBackend, StoredCase, TestCase,
};

pub fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").canonicalize().unwrap()
}

pub fn fixtures() -> PathBuf {
    repo_root().join("fixtures")
}

pub fn projects_dir() -> PathBuf {
    fixtures().join("projects")
}

pub fn minir_bin() -> PathBuf {
    PathBuf::from(env!("CARGO_BIN_EXE_minir"))
}

pub fn reprokit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_reprokit")).args(args).env_remove("REPROKIT_CONFIG").output().unwrap()
}

pub fn local_flags() -> Vec<String> {
    vec!["--executor".into(), "local".into(), "--rscript".into(), minir_bin().display().to_string()]
}

pub fn local_executor() -> LocalBackend {
    LocalBackend::default().with_override("Rscript", minir_bin())
}

/// Generates a strict corpus for `plan` (a file under fixtures/plans) and loads it back from disk.
pub fn build_corpus(plan: &str, out: &Path) -> Vec<StoredCase> {
    let plan = BenchmarkPlan::load(&fixtures().join("plans").join(plan)).unwrap();
    let projects = load_projects(&projects_dir()).unwrap();
    let exec = local_executor();
    let check = |c: &TestCase| verify_broken(c, &exec, &c.project.policy_or(None));
    let cases = generate_benchmark(&projects, &plan, Some(&check)).unwrap();
    for c in &cases {
        write_test_case(c, &out.join(&c.case_id)).unwrap();
    }
    load_corpus(out).unwrap()
}

pub struct SharedCorpus {
    _dir: tempfile::TempDir,
    pub cases: Vec<StoredCase>,
}

/// The smoke-plan corpus, generated once per test binary.
pub fn smoke_corpus() -> &'static [StoredCase] {
    static CORPUS: OnceLock<SharedCorpus> = OnceLock::new();
    &CORPUS
        .get_or_init(|| {
            let dir = tempfile::tempdir().unwrap();
            let cases = build_corpus("smoke.json", dir.path());
            SharedCorpus { _dir: dir, cases }
        })
        .cases
}

pub fn default_policy() -> ComparisonPolicy {
    ComparisonPolicy::default()
}

pub fn write_exec(path: &Path, text: &str) {
    use std::os::unix::fs::PermissionsExt;
    std::fs::create_dir_all(path.parent().unwrap()).unwrap();
    std::fs::write(path, text).unwrap();
    std::fs::set_permissions(path, std::fs::Permissions::from_mode(0o755)).unwrap();
}

/// The scripted runtime in `tests/support/fakeoci.sh`, wrapped so that
/// `Rscript` inside the "container" is minir.
pub struct FakeRuntime {
    pub dir: tempfile::TempDir,
    pub runtime: PathBuf,
}

impl FakeRuntime {
    pub fn executor(&self) -> ContainerBackend {
        ContainerBackend::new(self.runtime.display().to_string())
    }

    /// Scratch directory visible at the same path inside the container.
    pub fn scratch(&self) -> PathBuf {
        self.dir.path().join("scratch")
    }
}

/// `None` when the host cannot create mount namespaces (not root, no unshare).
pub fn fake_runtime() -> Option<FakeRuntime> {
    let dir = tempfile::tempdir().unwrap();
    let bin = dir.path().join("bin");
    std::fs::create_dir_all(&bin).unwrap();
    std::fs::copy(minir_bin(), bin.join("Rscript")).unwrap();
    std::fs::create_dir_all(dir.path().join("scratch")).unwrap();
    let script = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/support/fakeoci.sh");
    let runtime = dir.path().join("fakeoci");
    write_exec(
        &runtime,
        &format!(
            "#!/bin/sh\nFAKEOCI_SHARE='{}' FAKEOCI_PATH='{}' FAKEOCI_STATE='{}' exec bash '{}' \"$@\"\n",
            dir.path().display(),
            bin.display(),
            dir.path().join("state").display(),
            script.display()
        ),
    );
    let probe_ws = dir.path().join("probe");
    std::fs::create_dir_all(&probe_ws).unwrap();
    let ok = Command::new(&runtime)
        .args(["run", "--rm", "--name", "probe", "-v"])
        .arg(format!("{}:/workspace", probe_ws.display()))
        .args(["-w", "/workspace", "img", "sh", "-c", "Rscript -e 'cat(1)' > ok.txt"])
        .output()
        .map(|o| o.status.success())
        .unwrap_or(false);
    (ok && probe_ws.join("ok.txt").is_file()).then_some(FakeRuntime { dir, runtime })
}
