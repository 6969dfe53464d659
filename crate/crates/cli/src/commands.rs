use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::atomic::AtomicBool;

use anyhow::{bail, Context as _, Result};
use clap::Args;
use reprokit_core::agent_repair::{run_agents, AgentBatchOptions, AgentRunOptions};
use reprokit_core::analysis::{
    aggregate, emit_report, improvement, markdown, read_records, recorded_keys, GroupKey, RecordFilter, RecordSink,
    ReportFormat, RunRecord, SuccessTable,
};
use reprokit_core::injector::BenchmarkPlan;
use reprokit_core::prompt_repair::{run_matrix, CompletionBackend, MatrixOptions, PromptLevel, RepairOptions};
use reprokit_core::{
    generate_benchmark, load_corpus, load_project, load_projects, seal_project, verify_broken, verify_ground_truth,
    write_test_case, Classification, ComparisonPolicy, ContainerBackend, Executor, GroundTruthProject, LocalBackend,
    StoredCase, TestCase,
};
use serde_json::json;

use crate::config::{ExecutorKind, HarnessConfig};
use crate::GlobalArgs;

#[derive(Debug, Args)]
pub struct InjectArgs {
    /// Benchmark plan (JSON).
    #[arg(long)]
    pub plan: PathBuf,
    /// Directory of ground-truth projects.
    #[arg(long)]
    pub projects: Option<PathBuf>,
    /// Corpus output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Keep only cases whose scripts verifiably fail or diverge.
    #[arg(long)]
    pub strict: bool,
}

#[derive(Debug, Args)]
pub struct PromptArgs {
    /// Corpus directory written by `inject`.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Backend names: oracle, null, replay=DIR, or entries from the config.
    #[arg(long = "backend", required = true, value_delimiter = ',')]
    pub backends: Vec<String>,
    /// Prompt levels to run.
    #[arg(long, value_delimiter = ',', default_values = ["minimal", "medium", "full"])]
    pub levels: Vec<PromptLevel>,
    /// Records file (JSON lines) that runs are appended to.
    #[arg(long)]
    pub records: Option<PathBuf>,
    /// Directory for per-run prompts, responses, logs and workspaces.
    #[arg(long)]
    pub artifacts: Option<PathBuf>,
    /// Do not write per-run artifacts.
    #[arg(long, conflicts_with = "artifacts")]
    pub no_artifacts: bool,
    /// Repair rounds per run.
    #[arg(long)]
    pub max_iterations: Option<u32>,
    /// Restrict to these case ids.
    #[arg(long = "case", value_delimiter = ',')]
    pub cases: Vec<String>,
}

#[derive(Debug, Args)]
pub struct AgentArgs {
    /// Corpus directory written by `inject`.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Agent names from the config.
    #[arg(long = "agent", required = true, value_delimiter = ',')]
    pub agents: Vec<String>,
    /// Records file (JSON lines) that runs are appended to.
    #[arg(long)]
    pub records: Option<PathBuf>,
    /// Directory for per-run prompts, responses, logs and workspaces.
    #[arg(long)]
    pub artifacts: Option<PathBuf>,
    /// Do not write per-run artifacts.
    #[arg(long, conflicts_with = "artifacts")]
    pub no_artifacts: bool,
    /// Seconds per agent run.
    #[arg(long)]
    pub time_limit: Option<u64>,
    /// Restrict to these case ids.
    #[arg(long = "case", value_delimiter = ',')]
    pub cases: Vec<String>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Records files (JSON lines).
    #[arg(long = "records")]
    pub records: Vec<PathBuf>,
    /// One table per occurrence, e.g. `backend,prompt_level,category`.
    #[arg(long = "group-by")]
    pub group_by: Vec<String>,
    /// Only records matching `key=value,...`.
    #[arg(long)]
    pub filter: Option<String>,
    /// Improvement between two record subsets: `BASE_FILTER->NEW_FILTER`.
    #[arg(long)]
    pub compare: Vec<String>,
    /// Keys comparisons are joined on.
    #[arg(long, default_value = "category")]
    pub join: String,
    /// Output formats: csv, md, png.
    #[arg(long, value_delimiter = ',', default_values = ["csv", "md"])]
    pub format: Vec<ReportFormat>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

pub struct Context {
    cfg: HarnessConfig,
    workers: usize,
    resume: bool,
    policy: Option<ComparisonPolicy>,
    executor_kind: ExecutorKind,
    runtime: String,
    rscript: Option<PathBuf>,
}

impl Context {
    pub fn new(g: &GlobalArgs) -> Result<Self> {
        let cfg = match &g.config {
            Some(p) => HarnessConfig::load(p)?,
            None => HarnessConfig::default(),
        };
        cfg.validate()?;
        let policy = match g.policy.as_deref().or(cfg.policy.as_deref()) {
            Some(s) => Some(ComparisonPolicy::parse(s)?),
            None => None,
        };
        let workers = g.workers.unwrap_or(cfg.sandbox.workers);
        if workers == 0 {
            bail!("--workers must be at least 1");
        }
        Ok(Context {
            workers,
            resume: g.resume,
            policy,
            executor_kind: g.executor.unwrap_or(cfg.sandbox.executor),
            runtime: g.container_runtime.clone().unwrap_or_else(|| cfg.sandbox.runtime.clone()),
            rscript: g.rscript.clone().or_else(|| cfg.sandbox.rscript.clone()),
            cfg,
        })
    }

    fn executor(&self) -> Box<dyn Executor> {
        match self.executor_kind {
            ExecutorKind::Container => Box::new(ContainerBackend::new(self.runtime.clone())),
            ExecutorKind::Local => {
                let mut b = LocalBackend::default();
                if let Some(r) = &self.rscript {
                    b = b.with_override("Rscript", r);
                }
                Box::new(b)
            }
        }
    }

    fn policy_for(&self, project: &GroundTruthProject) -> ComparisonPolicy {
        project.manifest.policy_or(self.policy.as_ref())
    }

    pub fn verify(&self, dirs: &[PathBuf]) -> Result<bool> {
        let executor = self.executor();
        let mut all_ok = true;
        for project in expand_projects(dirs)? {
            let report = verify_ground_truth(&project, executor.as_ref(), &self.policy_for(&project))?;
            all_ok &= report.classification == Classification::Reproduced;
            let line = json!({
                "project": project.id(),
                "classification": report.classification,
                "execution_failure": report.execution_failure,
                "files": report.per_file,
            });
            println!("{line}");
            if report.classification != Classification::Reproduced {
                eprint!("{}: {}", project.id(), report.render());
            }
        }
        Ok(all_ok)
    }

    pub fn seal(&self, dirs: &[PathBuf]) -> Result<bool> {
        for dir in dirs {
            let m = seal_project(dir)?;
            println!("{}", json!({"project": m.project_id, "expected_outputs": m.expected_outputs.len()}));
        }
        Ok(true)
    }

    pub fn inject(&self, args: &InjectArgs) -> Result<bool> {
        let plan = BenchmarkPlan::load(&args.plan)?;
        let projects_dir = args.projects.clone().unwrap_or_else(|| self.cfg.paths.projects.clone());
        let out = args.out.clone().unwrap_or_else(|| self.cfg.paths.corpus.clone());
        let projects = load_projects(&projects_dir)?;
        let cases = if args.strict || plan.strict {
            let executor = self.executor();
            let check =
                |case: &TestCase| verify_broken(case, executor.as_ref(), &case.project.policy_or(self.policy.as_ref()));
            generate_benchmark(&projects, &plan, Some(&check))?
        } else {
            generate_benchmark(&projects, &plan, None)?
        };
        let mut by_category: BTreeMap<String, usize> = BTreeMap::new();
        for case in &cases {
            write_test_case(case, &out.join(&case.case_id))?;
            *by_category.entry(case.category.to_string()).or_default() += 1;
        }
        println!("{}", json!({"cases": cases.len(), "by_category": by_category, "out": out}));
        Ok(true)
    }

    fn corpus(&self, dir: &Option<PathBuf>, only: &[String]) -> Result<Vec<StoredCase>> {
        let dir = dir.clone().unwrap_or_else(|| self.cfg.paths.corpus.clone());
        let mut corpus = load_corpus(&dir)?;
        if !only.is_empty() {
            for id in only {
                if !corpus.iter().any(|c| &c.case.case_id == id) {
                    bail!("case {id} is not in {}", dir.display());
                }
            }
            corpus.retain(|c| only.contains(&c.case.case_id));
        }
        if corpus.is_empty() {
            bail!("no test cases under {}", dir.display());
        }
        Ok(corpus)
    }

    fn sink(
        &self,
        records: &Option<PathBuf>,
    ) -> Result<(RecordSink, std::collections::BTreeSet<reprokit_core::analysis::RunKey>)> {
        let path = records.clone().unwrap_or_else(|| self.cfg.paths.records.clone());
        let skip = if self.resume { recorded_keys(&path)? } else { Default::default() };
        if !self.resume && path.is_file() && std::fs::metadata(&path)?.len() > 0 {
            tracing::warn!("appending to existing records {}; use --resume to skip finished runs", path.display());
        }
        Ok((RecordSink::open(&path)?, skip))
    }

    fn artifacts(&self, dir: &Option<PathBuf>, disabled: bool) -> Option<PathBuf> {
        (!disabled).then(|| dir.clone().unwrap_or_else(|| self.cfg.paths.artifacts.clone()))
    }

    pub fn run_prompt(&self, args: &PromptArgs, stop: &AtomicBool) -> Result<bool> {
        let corpus = self.corpus(&args.corpus, &args.cases)?;
        let backends: Vec<Box<dyn CompletionBackend>> =
            args.backends.iter().map(|b| self.cfg.backend(b)).collect::<Result<_>>()?;
        let refs: Vec<&dyn CompletionBackend> = backends.iter().map(|b| b.as_ref()).collect();
        let max_iterations = args.max_iterations.unwrap_or(self.cfg.limits.max_iterations);
        if max_iterations == 0 {
            bail!("--max-iterations must be at least 1");
        }
        let (sink, skip) = self.sink(&args.records)?;
        let opts = MatrixOptions {
            repair: RepairOptions {
                max_iterations,
                policy: self.policy.clone(),
                artifacts: self.artifacts(&args.artifacts, args.no_artifacts),
                ..RepairOptions::default()
            },
            workers: self.workers,
            skip,
        };
        let executor = self.executor();
        let records = run_matrix(&corpus, &refs, &args.levels, executor.as_ref(), &opts, Some(&sink), stop)?;
        summarize(&records, &[GroupKey::Backend, GroupKey::PromptLevel, GroupKey::Category])?;
        Ok(true)
    }

    pub fn run_agent(&self, args: &AgentArgs, stop: &AtomicBool) -> Result<bool> {
        let corpus = self.corpus(&args.corpus, &args.cases)?;
        let agents = args.agents.iter().map(|a| self.cfg.agent(a, args.time_limit)).collect::<Result<Vec<_>>>()?;
        let (sink, skip) = self.sink(&args.records)?;
        let opts = AgentBatchOptions {
            run: AgentRunOptions {
                policy: self.policy.clone(),
                artifacts: self.artifacts(&args.artifacts, args.no_artifacts),
            },
            workers: self.workers,
            skip,
        };
        let executor = self.executor();
        let records = run_agents(&corpus, &agents, executor.as_ref(), &opts, Some(&sink), stop)?;
        summarize(&records, &[GroupKey::Backend, GroupKey::Category])?;
        Ok(true)
    }

    pub fn report(&self, args: &ReportArgs) -> Result<bool> {
        let paths = if args.records.is_empty() { vec![self.cfg.paths.records.clone()] } else { args.records.clone() };
        let mut records = Vec::new();
        for p in &paths {
            records.extend(read_records(p).with_context(|| format!("reading {}", p.display()))?);
        }
        if let Some(f) = &args.filter {
            records = RecordFilter::parse(f)?.apply(&records);
        }
        let groupings = if args.group_by.is_empty() {
            vec!["workflow,backend,prompt_level,category".to_string()]
        } else {
            args.group_by.clone()
        };
        let mut tables = Vec::new();
        for g in &groupings {
            tables.push(aggregate(&records, &GroupKey::parse_list(g)?)?);
        }
        let join = GroupKey::parse_list(&args.join)?;
        let mut deltas = Vec::new();
        for c in &args.compare {
            let (base, new) = c.split_once("->").with_context(|| format!("--compare {c:?} is not BASE->NEW"))?;
            let subset = |f: &str| -> Result<SuccessTable> {
                let mut t = aggregate(&RecordFilter::parse(f)?.apply(&records), &join)?;
                t.name = f.trim().to_string();
                Ok(t)
            };
            deltas.push(improvement(&subset(base)?, &subset(new)?, &join)?);
        }
        let written = emit_report(&tables, &deltas, &args.format, &args.out)?;
        print!("{}", markdown(&tables, &deltas));
        for w in written {
            tracing::info!("wrote {}", w.display());
        }
        Ok(true)
    }
}

/// Project directories as given, or every project inside a directory that is not one itself.
fn expand_projects(dirs: &[PathBuf]) -> Result<Vec<GroundTruthProject>> {
    let mut out = Vec::new();
    for dir in dirs {
        if !is_project(dir) && dir.is_dir() {
            let inner = load_projects(dir)?;
            if !inner.is_empty() {
                out.extend(inner);
                continue;
            }
        }
        out.push(load_project(dir)?);
    }
    Ok(out)
}

fn is_project(dir: &Path) -> bool {
    dir.join("project.json").is_file()
}

fn summarize(records: &[RunRecord], keys: &[GroupKey]) -> Result<()> {
    if records.is_empty() {
        println!("no runs executed");
        return Ok(());
    }
    let failed = records.iter().filter(|r| r.error.is_some()).count();
    print!("{}", markdown(&[aggregate(records, keys)?], &[]));
    if failed > 0 {
        eprintln!("{failed} run(s) ended with an error; see the records file");
    }
    Ok(())
}
