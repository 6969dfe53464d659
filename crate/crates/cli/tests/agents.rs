mod support;

use reprokit_core::agent_repair::{StatusValue, STATUS_FILE};
use reprokit_core::analysis::read_records;
use reprokit_core::{Category, Classification, ExitStatus, StoredCase};
use support::agents::{self, MockAgent};
use support::FakeRuntime;

fn setup() -> Option<(FakeRuntime, &'static StoredCase)> {
    let Some(rt) = support::fake_runtime() else {
        eprintln!("skipping: cannot create mount namespaces on this host");
        return None;
    };
    let case = support::smoke_corpus().iter().find(|c| c.case.category == Category::B).unwrap();
    Some((rt, case))
}

fn agent(name: &str) -> &'static MockAgent {
    agents::ALL.iter().find(|a| a.name == name).unwrap()
}

#[test]
fn fixer_is_confirmed_by_the_harness() {
    let Some((rt, sc)) = setup() else { return };
    let art = tempfile::tempdir().unwrap();
    let out = agents::run(&rt, &sc.case, agent("fixer"), 60, Some(art.path()));
    assert_eq!(out.status_file_value, StatusValue::Reproduced, "{}", out.log);
    assert_eq!(out.harness_classification, Classification::Reproduced, "{}", out.report.render());
    assert!(out.ground_truth_intact);
    assert!(out.leakage_flags.is_empty(), "{:?}", out.leakage_flags);
    let dir = art.path().join(format!("{}__fixer__agent", sc.case.case_id));
    for f in ["meta.json", "comparison.txt", "prompt.txt", "logs/agent.log", "logs/check.log"] {
        assert!(dir.join(f).is_file(), "{f}");
    }
    assert!(dir.join("final_workspace").join(STATUS_FILE).is_file());
}

#[test]
fn self_reports_do_not_decide_the_outcome() {
    let Some((rt, sc)) = setup() else { return };
    let liar = agents::run(&rt, &sc.case, agent("liar"), 60, None);
    assert_eq!(liar.status_file_value, StatusValue::Reproduced);
    assert_eq!(liar.harness_classification, Classification::NotReproduced);

    let cheat = agents::run(&rt, &sc.case, agent("cheater"), 60, None);
    assert_eq!(cheat.status_file_value, StatusValue::Reproduced);
    assert_eq!(cheat.harness_classification, Classification::NotReproduced, "copied outputs must not count");
    assert!(!cheat.leakage_flags.is_empty());
    assert!(cheat.leakage_flags.iter().any(|f| f.line.contains("looking at /base_results")));

    let mumble = agents::run(&rt, &sc.case, agent("mumbler"), 60, None);
    assert_eq!(mumble.status_file_value, StatusValue::Malformed);
}

#[test]
fn time_limit_kills_the_agent() {
    let Some((rt, sc)) = setup() else { return };
    let started = std::time::Instant::now();
    let out = agents::run(&rt, &sc.case, agent("sleeper"), 5, None);
    let elapsed = started.elapsed().as_secs_f64();
    assert!(out.timed_out);
    assert_eq!(out.agent_exit, ExitStatus::Timeout);
    assert_eq!(out.status_file_value, StatusValue::Missing);
    assert_eq!(out.harness_classification, Classification::NotReproduced);
    assert!(elapsed < 20.0, "took {elapsed:.1}s");
    assert!(out.log.contains("started"));
}

#[test]
fn ground_truth_mount_is_read_only() {
    let Some((rt, sc)) = setup() else { return };
    let out = agents::run(&rt, &sc.case, agent("vandal"), 60, None);
    assert!(out.ground_truth_intact);
    assert_eq!(out.status_file_value, StatusValue::NotReproduced);
    assert_eq!(out.harness_classification, Classification::NotReproduced);
}

#[test]
fn cli_runs_configured_agents() {
    let Some((rt, sc)) = setup() else { return };
    let cfg = agents::config_for(&rt, &sc.case, agent("fixer"), 60);
    let tmp = tempfile::tempdir().unwrap();
    let toml = format!(
        "[agents.mock-fixer]\nlaunch_command = {:?}\ntime_limit = 60\n[agents.mock-liar]\nlaunch_command = {:?}\n",
        cfg.launch_command,
        agents::config_for(&rt, &sc.case, agent("liar"), 60).launch_command,
    );
    let config = tmp.path().join("rk.toml");
    std::fs::write(&config, toml).unwrap();
    let records = tmp.path().join("records.jsonl");
    let corpus = sc.dir.parent().unwrap();
    let out = support::reprokit(&[
        "--config",
        config.to_str().unwrap(),
        "--executor",
        "container",
        "--container-runtime",
        rt.runtime.to_str().unwrap(),
        "run",
        "agent",
        "--corpus",
        corpus.to_str().unwrap(),
        "--case",
        &sc.case.case_id,
        "--agent",
        "mock-fixer,mock-liar",
        "--records",
        records.to_str().unwrap(),
        "--artifacts",
        tmp.path().join("art").to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let recs = read_records(&records).unwrap();
    assert_eq!(recs.len(), 2);
    let by = |n: &str| recs.iter().find(|r| r.backend_identity == n).unwrap();
    assert_eq!(by("mock-fixer").outcome, Classification::Reproduced);
    assert_eq!(by("mock-fixer").status_file.as_deref(), Some("Reproduced"));
    assert_eq!(by("mock-liar").outcome, Classification::NotReproduced);
    assert!(recs.iter().all(|r| r.prompt_level.is_none() && r.attempts == 1));
}

#[test]
fn missing_image_is_reported() {
    let Some((rt, sc)) = setup() else { return };
    let mut cfg = agents::config_for(&rt, &sc.case, agent("liar"), 60);
    cfg.image = Some("missing/image:1".into());
    std::fs::write(
        rt.dir.path().join("fakeoci"),
        std::fs::read_to_string(rt.dir.path().join("fakeoci"))
            .unwrap()
            .replace("FAKEOCI_PATH=", "FAKEOCI_IMAGES='rocker/r-ver:4.4.1' FAKEOCI_PATH="),
    )
    .unwrap();
    let err =
        reprokit_core::agent_repair::launch_agent(&sc.case, &cfg, &rt.executor(), &Default::default()).unwrap_err();
    assert!(matches!(err, reprokit_core::Error::ImageMissing(_)), "{err}");
}

#[test]
fn forwarded_credentials_reach_the_agent() {
    let Some((rt, sc)) = setup() else { return };
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("rk.toml");
    std::fs::write(
        &config,
        "[agents.env-echo]\nlaunch_command = [\"sh\", \"-c\", \"echo key=$RK_TEST_KEY model=$MODEL\"]\npass_env = [\"RK_TEST_KEY\"]\nmodel_routing = { MODEL = \"small\" }\n",
    )
    .unwrap();
    let art = tmp.path().join("art");
    let out = std::process::Command::new(env!("CARGO_BIN_EXE_reprokit"))
        .env_remove("REPROKIT_CONFIG")
        .env("RK_TEST_KEY", "k-123")
        .args(["--config", config.to_str().unwrap(), "--executor", "container", "--container-runtime"])
        .arg(&rt.runtime)
        .args(["run", "agent", "--corpus", sc.dir.parent().unwrap().to_str().unwrap(), "--case", &sc.case.case_id])
        .args(["--agent", "env-echo", "--records", tmp.path().join("r.jsonl").to_str().unwrap()])
        .args(["--artifacts", art.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let log =
        std::fs::read_to_string(art.join(format!("{}__env-echo__agent/logs/agent.log", sc.case.case_id))).unwrap();
    assert!(log.contains("key=k-123 model=small"), "{log}");

    let out = support::reprokit(&[
        "--config",
        config.to_str().unwrap(),
        "--executor",
        "container",
        "--container-runtime",
        rt.runtime.to_str().unwrap(),
        "run",
        "agent",
        "--corpus",
        sc.dir.parent().unwrap().to_str().unwrap(),
        "--agent",
        "env-echo",
        "--records",
        tmp.path().join("r2.jsonl").to_str().unwrap(),
    ]);
    let stderr = String::from_utf8_lossy(&out.stderr);
    if std::env::var_os("RK_TEST_KEY").is_none() {
        assert_eq!(out.status.code(), Some(2));
        assert!(stderr.contains("RK_TEST_KEY"), "{stderr}");
    }
}
