//! Shared inputs for the benchmarks.

use std::path::PathBuf;

use reprokit_core::analysis::{RunRecord, Workflow};
use reprokit_core::prompt_repair::PromptLevel;
use reprokit_core::{Category, Classification};

pub fn projects_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/projects")
}

/// `n` records spread over three backends, three levels and three categories.
pub fn synthetic_records(n: usize) -> Vec<RunRecord> {
    (0..n)
        .map(|i| RunRecord {
            case_id: format!("case-{:04}", i % 130),
            error_kinds: vec!["PathCorruption".into()],
            category: [Category::A, Category::B, Category::C][i % 3],
            workflow: Workflow::Prompt,
            backend_identity: ["m1", "m2", "m3"][(i / 3) % 3].into(),
            prompt_level: Some(PromptLevel::ALL[(i / 9) % 3]),
            attempts: (i % 5) as u32 + 1,
            execution_time: 1.0,
            outcome: if i % 7 < 4 { Classification::Reproduced } else { Classification::NotReproduced },
            status_file: None,
            leakage_flags: None,
            error: None,
        })
        .collect()
}
