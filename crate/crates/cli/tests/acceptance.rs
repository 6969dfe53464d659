//! Acceptance criteria, one line of output per criterion.
//!
//! Criterion 9 needs a real container runtime and R image. Set
//! `REPROKIT_TEST_RUNTIME` (e.g. `docker`) to enable it.

mod support;

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::atomic::AtomicBool;
use std::time::Instant;

use proptest::prelude::Rng;
use proptest::test_runner::{RngAlgorithm, TestRng};
use reprokit_core::agent_repair::StatusValue;
use reprokit_core::analysis::{read_records, RunRecord};
use reprokit_core::corpus::write_tree;
use reprokit_core::prompt_repair::{
    render_prompt, repair_loop, run_matrix, CompletionBackend, CompletionRequest, MatrixOptions, NullBackend,
    OracleBackend, PromptContext, PromptLevel, RepairOptions,
};
use reprokit_core::{
    compare_outputs, load_projects, verify_broken, verify_ground_truth, Category, Classification, ContainerBackend,
    Executor, StoredCase,
};

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

type Check = fn() -> Outcome;

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Outcome::Pass(detail)
    } else {
        Outcome::Fail(detail)
    }
}

fn sweep(backend: &dyn CompletionBackend) -> (Vec<RunRecord>, f64) {
    let corpus = support::smoke_corpus();
    let started = Instant::now();
    let opts = MatrixOptions { workers: 4, ..MatrixOptions::default() };
    let stop = AtomicBool::new(false);
    let records =
        run_matrix(corpus, &[backend], &PromptLevel::ALL, &support::local_executor(), &opts, None, &stop).unwrap();
    (records, started.elapsed().as_secs_f64())
}

fn corpus_shape(corpus: &[StoredCase]) -> BTreeMap<Category, usize> {
    let mut by = BTreeMap::new();
    for c in corpus {
        *by.entry(c.case.category).or_default() += 1;
    }
    by
}

fn oracle_sweep() -> Outcome {
    let shape = corpus_shape(support::smoke_corpus());
    let (records, secs) = sweep(&OracleBackend::default());
    let reproduced = records.iter().filter(|r| r.outcome == Classification::Reproduced).count();
    let one_round = records.iter().all(|r| r.attempts == 1 && r.error.is_none());
    let big_enough = support::smoke_corpus().len() >= 30 && shape.values().all(|&n| n >= 10);
    ensure(
        big_enough && reproduced == records.len() && one_round && secs < 300.0,
        format!("{shape:?}, {reproduced}/{} reproduced, one round each: {one_round}, {secs:.1}s", records.len()),
    )
}

fn null_sweep() -> Outcome {
    let (records, secs) = sweep(&NullBackend::default());
    let reproduced = records.iter().filter(|r| r.outcome == Classification::Reproduced).count();
    let attempts: BTreeSet<u32> = records.iter().map(|r| r.attempts).collect();
    ensure(
        reproduced == 0 && attempts == BTreeSet::from([5]) && records.iter().all(|r| r.error.is_none()),
        format!("{reproduced}/{} reproduced, attempts used {attempts:?}, {secs:.1}s", records.len()),
    )
}

fn brokenness() -> Outcome {
    let exec = support::local_executor();
    let tmp = tempfile::tempdir().unwrap();
    let full = support::build_corpus("full_scale.json", tmp.path());
    let all: Vec<&StoredCase> = full.iter().chain(support::smoke_corpus()).collect();
    let broken = all.iter().filter(|c| verify_broken(&c.case, &exec, &c.case.project.policy_or(None)).unwrap()).count();
    ensure(broken == all.len(), format!("{broken}/{} strict cases fail or diverge", all.len()))
}

/// Independent renderer: literal scan for the five placeholders, left to right.
fn render_oracle(template: &str, fields: &[(&str, &str)]) -> String {
    let mut out = String::new();
    let mut rest = template;
    'scan: while let Some(open) = rest.find('{') {
        for (name, value) in fields {
            let token = format!("{{{name}}}");
            if rest[open..].starts_with(&token) {
                out.push_str(&rest[..open]);
                out.push_str(value);
                rest = &rest[open + token.len()..];
                continue 'scan;
            }
        }
        out.push_str(&rest[..=open]);
        rest = &rest[open + 1..];
    }
    out.push_str(rest);
    out
}

fn random_text(rng: &mut TestRng) -> String {
    const PIECES: [&str; 12] =
        ["x <- 1", "\n", "{log}", "{paper}", "}", "{", "Error: ", "ü", "{script_code}", " ", "```", "\r\n"];
    let n = (rng.next_u32() % 40) as usize;
    (0..n).map(|_| PIECES[(rng.next_u32() as usize) % PIECES.len()]).collect()
}

fn prompt_fidelity() -> Outcome {
    let mut rng = TestRng::from_seed(RngAlgorithm::ChaCha, &[7; 32]);
    let mut checked = 0;
    let mut failures = Vec::new();
    for (level, name) in
        [(PromptLevel::Minimal, "minimal"), (PromptLevel::Medium, "medium"), (PromptLevel::Full, "full")]
    {
        let template = std::fs::read_to_string(support::fixtures().join(format!("prompts/{name}.txt"))).unwrap();
        for _ in 0..5 {
            let support_scripts: Vec<(String, String)> =
                (0..rng.next_u32() % 3).map(|i| (format!("u{i}.R"), random_text(&mut rng))).collect();
            let ctx = PromptContext {
                script_name: format!("s{}.R", rng.next_u32() % 100),
                script_code: random_text(&mut rng),
                log: random_text(&mut rng),
                paper: Some(random_text(&mut rng)),
                support_scripts: Some(support_scripts.clone()),
            };
            let context: Vec<String> = support_scripts.iter().map(|(n, t)| format!("--- {n} ---\n{t}")).collect();
            let context = context.join("\n");
            let paper = if level == PromptLevel::Minimal { "" } else { ctx.paper.as_deref().unwrap() };
            let ctx_field = if level == PromptLevel::Full { context.as_str() } else { "" };
            let want = render_oracle(
                &template,
                &[
                    ("log", &ctx.log),
                    ("script_name", &ctx.script_name),
                    ("script_code", &ctx.script_code),
                    ("paper", paper),
                    ("context", ctx_field),
                ],
            );
            let got = render_prompt(level, &ctx).unwrap();
            checked += 1;
            if got != want {
                failures.push(name);
            }
        }
    }
    ensure(failures.is_empty(), format!("{checked} renders compared byte for byte, mismatches: {failures:?}"))
}

fn reference_arithmetic() -> Outcome {
    let out = tempfile::tempdir().unwrap();
    let records = support::fixtures().join("records/reference_matrix.jsonl");
    let base = "backend=qwen3-coder,prompt_level=Full";
    let run = support::reprokit(&[
        "report",
        "--records",
        records.to_str().unwrap(),
        "--group-by",
        "backend,prompt_level,category",
        "--compare",
        &format!("{base}->backend=opencode"),
        "--compare",
        &format!("{base}->backend=claude-code"),
        "--format",
        "csv",
        "--out",
        out.path().to_str().unwrap(),
    ]);
    if !run.status.success() {
        return Outcome::Fail(String::from_utf8_lossy(&run.stderr).into_owned());
    }
    let mut rates: BTreeMap<(String, String), f64> = BTreeMap::new();
    let mut rdr = csv::Reader::from_path(out.path().join("report.csv")).unwrap();
    for row in rdr.deserialize::<BTreeMap<String, String>>() {
        let row = row.unwrap();
        rates.insert((row["backend"].clone(), row["category"].clone()), row["rate_percent"].parse().unwrap());
    }
    let mut deltas: BTreeMap<(String, String), f64> = BTreeMap::new();
    let mut rdr = csv::Reader::from_path(out.path().join("deltas.csv")).unwrap();
    for row in rdr.deserialize::<BTreeMap<String, String>>() {
        let row = row.unwrap();
        let agent = if row["comparison"].contains("opencode") { "opencode" } else { "claude-code" };
        deltas.insert((agent.into(), row["key"].clone()), row["delta_pp"].parse().unwrap());
    }
    let want_rates =
        [("qwen3-coder", [52.9, 55.3, 54.2]), ("opencode", [81.5, 76.9, 69.2]), ("claude-code", [96.3, 91.7, 82.1])];
    let want_deltas = [("opencode", [28.6, 21.6, 15.0]), ("claude-code", [43.4, 36.4, 27.9])];
    let mut bad = Vec::new();
    let mut check = |table: &BTreeMap<(String, String), f64>, who: &str, want: [f64; 3]| {
        for (cat, w) in ["A", "B", "C"].iter().zip(want) {
            match table.get(&(who.to_string(), cat.to_string())) {
                Some(g) if (g - w).abs() <= 0.1 + 1e-9 => {}
                got => bad.push(format!("{who}/{cat}: want {w}, got {got:?}")),
            }
        }
    };
    for (who, want) in want_rates {
        check(&rates, who, want);
    }
    for (who, want) in want_deltas {
        check(&deltas, who, want);
    }
    ensure(bad.is_empty(), if bad.is_empty() { "9 rates and 6 deltas within 0.1 pp".into() } else { bad.join("; ") })
}

fn matrix_count() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let started = Instant::now();
    let corpus = tmp.path().join("corpus");
    let mut flags = support::local_flags();
    let inject = support::reprokit(
        &[
            "inject",
            "--plan",
            support::fixtures().join("plans/full_scale.json").to_str().unwrap(),
            "--projects",
            support::projects_dir().to_str().unwrap(),
            "--out",
            corpus.to_str().unwrap(),
        ]
        .into_iter()
        .chain(flags.iter().map(String::as_str))
        .collect::<Vec<_>>(),
    );
    if !inject.status.success() {
        return Outcome::Fail(String::from_utf8_lossy(&inject.stderr).into_owned());
    }
    let replay = tmp.path().join("replay");
    std::fs::create_dir_all(&replay).unwrap();
    for i in 1..=60 {
        std::fs::write(replay.join(format!("{i:03}.txt")), "stop(\"replayed response\")\n").unwrap();
    }
    let config = tmp.path().join("rk.toml");
    let backends: String = ["model-a", "model-b", "model-c"]
        .iter()
        .map(|b| format!("[backends.{b}]\nkind = \"replay\"\ndir = \"replay\"\n"))
        .collect();
    std::fs::write(&config, backends).unwrap();
    let records = tmp.path().join("records.jsonl");
    flags.extend(["--workers".into(), "8".into(), "--config".into(), config.display().to_string()]);
    let run = support::reprokit(
        &[
            "run",
            "prompt",
            "--corpus",
            corpus.to_str().unwrap(),
            "--backend",
            "model-a,model-b,model-c",
            "--records",
            records.to_str().unwrap(),
            "--no-artifacts",
        ]
        .into_iter()
        .chain(flags.iter().map(String::as_str))
        .collect::<Vec<_>>(),
    );
    if !run.status.success() {
        return Outcome::Fail(String::from_utf8_lossy(&run.stderr).into_owned());
    }
    let recs = read_records(&records).unwrap();
    let keys: BTreeSet<_> = recs.iter().map(|r| r.key()).collect();
    let cases: BTreeSet<_> = recs.iter().map(|r| r.case_id.clone()).collect();
    let secs = started.elapsed().as_secs_f64();
    ensure(
        recs.len() == 1170 && keys.len() == 1170 && cases.len() == 130 && secs < 900.0,
        format!("{} records ({} distinct runs) over {} cases, {secs:.1}s", recs.len(), keys.len(), cases.len()),
    )
}

fn validator_soundness() -> Outcome {
    let projects = load_projects(&support::projects_dir()).unwrap();
    let mut rng = TestRng::from_seed(RngAlgorithm::ChaCha, &[9; 32]);
    let mut false_reproduced = 0;
    for _ in 0..100 {
        let project = &projects[rng.next_u32() as usize % projects.len()];
        let expected = project.expected();
        let out = &expected.outputs[rng.next_u32() as usize % expected.outputs.len()];
        let dir = tempfile::tempdir().unwrap();
        write_tree(dir.path(), &project.read_ground_truth().unwrap()).unwrap();
        let path = out.path.under(dir.path());
        let mut bytes = std::fs::read(&path).unwrap();
        let i = rng.next_u32() as usize % bytes.len();
        bytes[i] ^= (rng.next_u32() % 255 + 1) as u8;
        std::fs::write(&path, bytes).unwrap();
        let report = compare_outputs(dir.path(), &expected, &project.manifest.policy_or(None)).unwrap();
        if report.classification != Classification::NotReproduced {
            false_reproduced += 1;
        }
    }
    ensure(false_reproduced == 0, format!("100 single-byte mutations, {false_reproduced} false Reproduced"))
}

fn agent_protocol() -> Outcome {
    use support::agents;
    let Some(rt) = support::fake_runtime() else {
        return Outcome::Fail("cannot create mount namespaces for the scripted runtime".into());
    };
    let case = &support::smoke_corpus().iter().find(|c| c.case.category == Category::C).unwrap().case;
    let by = |n: &str| agents::ALL.iter().find(|a| a.name == n).unwrap();
    let fixer = agents::run(&rt, case, by("fixer"), 60, None);
    let liar = agents::run(&rt, case, by("liar"), 60, None);
    let cheater = agents::run(&rt, case, by("cheater"), 60, None);
    let vandal = agents::run(&rt, case, by("vandal"), 60, None);
    let sleeper = agents::run(&rt, case, by("sleeper"), 5, None);
    let mut failed = Vec::new();
    let mut expect = |ok: bool, what: &str| {
        if !ok {
            failed.push(what.to_string());
        }
    };
    expect(fixer.status_file_value == StatusValue::Reproduced, "status parsing");
    expect(fixer.harness_classification == Classification::Reproduced, "fixer confirmed by harness");
    expect(liar.status_file_value == StatusValue::Reproduced, "liar status parsed");
    expect(liar.harness_classification == Classification::NotReproduced, "liar overruled by harness");
    expect(cheater.harness_classification == Classification::NotReproduced, "copied outputs rejected");
    expect(!cheater.leakage_flags.is_empty(), "leakage flagged");
    expect(fixer.leakage_flags.is_empty(), "no flags after completion marker");
    expect(sleeper.timed_out && sleeper.wall_time < 5.0 + 10.0, "time-limit kill");
    let runs = [&fixer, &liar, &cheater, &vandal, &sleeper];
    expect(runs.iter().all(|o| o.ground_truth_intact), "read-only mount hashes unchanged");
    ensure(
        failed.is_empty(),
        if failed.is_empty() {
            format!("5 scripted agents, timeout after {:.1}s, ground truth intact in every run", sleeper.wall_time)
        } else {
            format!("failed: {}", failed.join(", "))
        },
    )
}

/// Writes a sentinel outside the workspace and in it on round 1, and looks for both on round 2.
struct SentinelProbe;

impl CompletionBackend for SentinelProbe {
    fn identity(&self) -> String {
        "sentinel-probe".into()
    }

    fn complete(&self, r: &CompletionRequest<'_>) -> reprokit_core::Result<String> {
        Ok(match r.round {
            1 => "writeLines(\"x\", \"/tmp/reprokit_sentinel\")\nwriteLines(\"x\", \"sentinel.txt\")\nstop(\"first attempt\")\n".into(),
            _ => "if (file.exists(\"/tmp/reprokit_sentinel\") || file.exists(\"sentinel.txt\")) stop(\"sentinel survived\") else stop(\"environment was fresh\")\n".into(),
        })
    }
}

fn fresh_between_attempts(exec: &dyn Executor) -> Result<(), String> {
    let sc = support::smoke_corpus()
        .iter()
        .find(|c| c.case.category == Category::A && c.case.project.entry_scripts.contains(&c.case.touched_files()[0]))
        .ok_or("no single-script case")?;
    let opts = RepairOptions { max_iterations: 2, ..RepairOptions::default() };
    let out = repair_loop(&sc.case, &SentinelProbe, PromptLevel::Minimal, exec, &opts).map_err(|e| e.to_string())?;
    let logs: Vec<&str> = out.rounds.iter().filter_map(|r| r.execution.as_ref()).map(|e| e.log.as_str()).collect();
    if logs.len() != 2 || !logs[0].contains("first attempt") {
        return Err(format!("unexpected first attempt: {logs:?}"));
    }
    if !logs[1].contains("environment was fresh") {
        return Err(format!("second attempt saw earlier state: {}", logs[1]));
    }
    Ok(())
}

fn container_integration() -> Outcome {
    let rehearsal = match support::fake_runtime() {
        Some(rt) => match fresh_between_attempts(&rt.executor()) {
            Ok(()) => "scripted-runtime rehearsal passed".to_string(),
            Err(e) => return Outcome::Fail(format!("scripted-runtime rehearsal: {e}")),
        },
        None => "scripted runtime unavailable".to_string(),
    };
    let Ok(runtime) = std::env::var("REPROKIT_TEST_RUNTIME") else {
        return Outcome::Skip(format!("REPROKIT_TEST_RUNTIME not set; {rehearsal}"));
    };
    let exec = ContainerBackend::new(runtime.clone());
    let projects = load_projects(&support::projects_dir()).unwrap();
    let project = &projects[0];
    if let Err(e) = exec.check(&project.manifest.runtime_spec) {
        return Outcome::Skip(format!(
            "{runtime} cannot serve {}: {e}; {rehearsal}",
            project.manifest.runtime_spec.image_name
        ));
    }
    let report = match verify_ground_truth(project, &exec, &project.manifest.policy_or(None)) {
        Ok(r) => r,
        Err(e) => return Outcome::Fail(e.to_string()),
    };
    if report.classification != Classification::Reproduced {
        return Outcome::Fail(report.render());
    }
    match fresh_between_attempts(&exec) {
        Ok(()) => {
            Outcome::Pass(format!("{} verified under {runtime}; fresh environment across attempts", project.id()))
        }
        Err(e) => Outcome::Fail(e),
    }
}

fn main() {
    let filters: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let criteria: [(u32, &str, Check); 9] = [
        (1, "oracle sweep", oracle_sweep),
        (2, "null sweep", null_sweep),
        (3, "brokenness guarantee", brokenness),
        (4, "prompt fidelity", prompt_fidelity),
        (5, "reported aggregates", reference_arithmetic),
        (6, "matrix count", matrix_count),
        (7, "validator soundness", validator_soundness),
        (8, "agent protocol", agent_protocol),
        (9, "container integration", container_integration),
    ];
    if std::env::args().any(|a| a == "--list") {
        for (n, name, _) in &criteria {
            println!("criterion_{n} {name}: test");
        }
        return;
    }
    let mut failed = 0;
    for (n, name, check) in criteria {
        let id = format!("criterion_{n}");
        if !filters.is_empty() && !filters.iter().any(|f| id.contains(f.as_str()) || name.contains(f.as_str())) {
            continue;
        }
        let started = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Outcome::Fail(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let secs = started.elapsed().as_secs_f64();
        let (tag, detail) = match outcome {
            Outcome::Pass(d) => ("PASS", d),
            Outcome::Fail(d) => {
                failed += 1;
                ("FAIL", d)
            }
            Outcome::Skip(d) => ("SKIP", d),
        };
        println!("criterion {n} {tag}: {name}: {detail} [{secs:.1}s]");
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
