use std::collections::BTreeSet;
use std::sync::atomic::AtomicBool;

use super::{repair_loop, CompletionBackend, PromptLevel, RepairOptions};
use crate::analysis::{RecordSink, RunKey, RunRecord, Workflow};
use crate::corpus::StoredCase;
use crate::error::Result;
use crate::pool::run_pool;
use crate::sandbox::Executor;
use crate::validator::Classification;

#[derive(Debug, Clone)]
pub struct MatrixOptions {
    pub repair: RepairOptions,
    pub workers: usize,
    /// Runs already recorded; they are not repeated.
    pub skip: BTreeSet<RunKey>,
}

impl Default for MatrixOptions {
    fn default() -> Self {
        MatrixOptions { repair: RepairOptions::default(), workers: 1, skip: BTreeSet::new() }
    }
}

/// Runs every (case, backend, level) combination not in `opts.skip`.
///
/// Records come back in matrix order and are appended to `sink` as runs finish.
/// Individual run failures become records; an unusable executor aborts up front.
pub fn run_matrix(
    corpus: &[StoredCase],
    backends: &[&dyn CompletionBackend],
    levels: &[PromptLevel],
    executor: &dyn Executor,
    opts: &MatrixOptions,
    sink: Option<&RecordSink>,
    stop: &AtomicBool,
) -> Result<Vec<RunRecord>> {
    let mut jobs = Vec::new();
    for sc in corpus {
        for (bi, b) in backends.iter().enumerate() {
            for &level in levels {
                let key = RunKey {
                    case_id: sc.case.case_id.clone(),
                    backend_identity: b.identity(),
                    prompt_level: Some(level),
                };
                if !opts.skip.contains(&key) {
                    jobs.push((sc, bi, level));
                }
            }
        }
    }
    let mut specs = BTreeSet::new();
    for (sc, _, _) in &jobs {
        if specs.insert(sc.case.project.runtime_spec.image_name.clone()) {
            executor.check(&sc.case.project.runtime_spec)?;
        }
    }
    let results = run_pool(&jobs, opts.workers, stop, |&(sc, bi, level)| -> Result<RunRecord> {
        let backend = backends[bi];
        let record = match repair_loop(&sc.case, backend, level, executor, &opts.repair) {
            Ok(outcome) => outcome.to_record(&sc.case),
            Err(e) => {
                tracing::error!(case = %sc.case.case_id, backend = %backend.identity(), %level, "run failed: {e}");
                RunRecord {
                    case_id: sc.case.case_id.clone(),
                    error_kinds: sc.case.error_kinds(),
                    category: sc.case.category,
                    workflow: Workflow::Prompt,
                    backend_identity: backend.identity(),
                    prompt_level: Some(level),
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
