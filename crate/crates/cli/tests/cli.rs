mod support;

use std::collections::BTreeMap;
use std::path::Path;

use reprokit_core::analysis::read_records;
use sha2::{Digest, Sha256};

fn args<'a>(base: &'a [&'a str], extra: &'a [String]) -> Vec<&'a str> {
    base.iter().copied().chain(extra.iter().map(String::as_str)).collect()
}

fn stderr(o: &std::process::Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn tree_digest(root: &Path) -> BTreeMap<String, String> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(root).unwrap().display().to_string();
                out.insert(rel, hex(&Sha256::digest(std::fs::read(&p).unwrap())));
            }
        }
    }
    out
}

fn hex(b: &[u8]) -> String {
    b.iter().map(|x| format!("{x:02x}")).collect()
}

#[test]
fn verify_accepts_fixture_projects() {
    let projects = support::projects_dir();
    let flags = support::local_flags();
    let out = support::reprokit(&args(&["verify", projects.to_str().unwrap()], &flags));
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let lines: Vec<serde_json::Value> =
        String::from_utf8(out.stdout).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 5);
    assert!(lines.iter().all(|l| l["classification"] == "Reproduced"));
}

#[test]
fn verify_reports_a_diverging_project_with_exit_1() {
    let tmp = tempfile::tempdir().unwrap();
    let copy = tmp.path().join("income_gini");
    copy_dir(&support::projects_dir().join("income_gini"), &copy);
    let script = copy.join("analysis.R");
    let text = std::fs::read_to_string(&script).unwrap();
    std::fs::write(&script, text.replacen("results/summary.txt", "results/other.txt", 1)).unwrap();
    let out = support::reprokit(&args(&["verify", copy.to_str().unwrap()], &support::local_flags()));
    assert_eq!(out.status.code(), Some(1), "{}", stderr(&out));
}

#[test]
fn operational_errors_exit_2_with_a_kind() {
    let tmp = tempfile::tempdir().unwrap();
    let out = support::reprokit(&["verify", tmp.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("ManifestMissing"), "{}", stderr(&out));

    let out = support::reprokit(&["--policy", "fuzzy", "report", "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("InvalidConfig"), "{}", stderr(&out));

    let projects = support::projects_dir();
    let out = support::reprokit(&[
        "--executor",
        "container",
        "--container-runtime",
        "/nonexistent/runtime",
        "verify",
        projects.join("income_gini").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("ExecutorUnavailable"), "{}", stderr(&out));
}

#[test]
fn config_rejects_inline_credentials() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("rk.toml");
    std::fs::write(
        &cfg,
        "[backends.gpt]\nkind = \"openai\"\nendpoint = \"http://localhost\"\nmodel = \"m\"\napi_key = \"sk-1\"\n",
    )
    .unwrap();
    let out = support::reprokit(&["--config", cfg.to_str().unwrap(), "report", "--out", "x"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("api_key_env"), "{}", stderr(&out));
}

#[test]
fn injection_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let plan = support::fixtures().join("plans/smoke.json");
    let projects = support::projects_dir();
    let mut digests = Vec::new();
    for run in ["a", "b"] {
        let out_dir = tmp.path().join(run);
        let out = support::reprokit(&args(
            &[
                "inject",
                "--plan",
                plan.to_str().unwrap(),
                "--projects",
                projects.to_str().unwrap(),
                "--out",
                out_dir.to_str().unwrap(),
            ],
            &support::local_flags(),
        ));
        assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
        let summary: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
        assert_eq!(summary["cases"], 30);
        digests.push(tree_digest(&out_dir));
    }
    assert_eq!(digests[0], digests[1]);
}

#[test]
fn prompt_runs_resume_without_repeating() {
    let corpus = support::smoke_corpus();
    let corpus_dir = corpus[0].dir.parent().unwrap();
    let tmp = tempfile::tempdir().unwrap();
    let records = tmp.path().join("records.jsonl");
    let ids = format!("{},{}", corpus[0].case.case_id, corpus[1].case.case_id);
    let run = |extra: &[&str]| {
        let mut a = vec![
            "run",
            "prompt",
            "--corpus",
            corpus_dir.to_str().unwrap(),
            "--case",
            &ids,
            "--backend",
            "oracle",
            "--levels",
            "minimal,full",
            "--records",
            records.to_str().unwrap(),
            "--no-artifacts",
        ];
        a.extend_from_slice(extra);
        support::reprokit(&args(&a, &support::local_flags()))
    };
    let out = run(&[]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(read_records(&records).unwrap().len(), 4);
    // Simulate an interrupted append.
    let mut text = std::fs::read_to_string(&records).unwrap();
    let last = text.trim_end().rfind('\n').unwrap();
    text.truncate(last + 1 + 20);
    std::fs::write(&records, &text).unwrap();
    let out = run(&["--resume"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let recs = read_records(&records).unwrap();
    assert_eq!(recs.len(), 4);
    let keys: std::collections::BTreeSet<_> = recs.iter().map(|r| r.key()).collect();
    assert_eq!(keys.len(), 4);
    let out = run(&["--resume"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(read_records(&records).unwrap().len(), 4);
}

#[test]
fn local_executor_refuses_agents() {
    let corpus = support::smoke_corpus();
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("rk.toml");
    std::fs::write(&cfg, "[agents.mock]\nlaunch_command = [\"true\"]\n").unwrap();
    let out = support::reprokit(&args(
        &[
            "--config",
            cfg.to_str().unwrap(),
            "run",
            "agent",
            "--corpus",
            corpus[0].dir.parent().unwrap().to_str().unwrap(),
            "--agent",
            "mock",
            "--records",
            tmp.path().join("r.jsonl").to_str().unwrap(),
        ],
        &support::local_flags(),
    ));
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("AgentLaunchFailure"), "{}", stderr(&out));
}

#[test]
fn report_writes_every_format() {
    let tmp = tempfile::tempdir().unwrap();
    let records = support::fixtures().join("records/reference_matrix.jsonl");
    let out = support::reprokit(&[
        "report",
        "--records",
        records.to_str().unwrap(),
        "--group-by",
        "workflow,backend,category",
        "--group-by",
        "category",
        "--format",
        "csv,md,png",
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    for f in ["report.csv", "report.md", "figures/01_workflow_backend_category.png", "figures/02_category.png"] {
        assert!(tmp.path().join(f).is_file(), "{f}");
    }
    let png = std::fs::read(tmp.path().join("figures/02_category.png")).unwrap();
    assert_eq!(&png[..8], b"\x89PNG\r\n\x1a\n");

    let out = support::reprokit(&[
        "report",
        "--records",
        records.to_str().unwrap(),
        "--format",
        "svg",
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn report_on_no_records_is_an_error() {
    let tmp = tempfile::tempdir().unwrap();
    let empty = tmp.path().join("empty.jsonl");
    std::fs::write(&empty, "").unwrap();
    let out =
        support::reprokit(&["report", "--records", empty.to_str().unwrap(), "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("EmptyRecordSet"), "{}", stderr(&out));
}

fn copy_dir(from: &Path, to: &Path) {
    std::fs::create_dir_all(to).unwrap();
    for e in std::fs::read_dir(from).unwrap() {
        let p = e.unwrap().path();
        let dest = to.join(p.file_name().unwrap());
        if p.is_dir() {
            copy_dir(&p, &dest);
        } else {
            std::fs::copy(&p, &dest).unwrap();
        }
    }
}
