//! Benchmark construction and repair evaluation for computational reproducibility.

pub mod agent_repair;
pub mod analysis;
pub mod corpus;
pub mod error;
pub mod injector;
pub mod paths;
mod pool;
pub mod prompt_repair;
pub mod sandbox;
pub mod validator;

pub use corpus::{
    load_corpus, load_project, load_projects, load_test_case, seal_project, verify_ground_truth, write_test_case,
    Category, ExpectedOutput, FileTree, GroundTruthProject, ProjectManifest, RuntimeSpec, StoredCase, TestCase,
};
pub use error::{Error, Result};
pub use injector::{
    apply_mutation, compose_test_case, generate_benchmark, verify_broken, BenchmarkPlan, CategoryRecipe,
    InjectionRecord, Location, MutationOperator, OperatorKind,
};
pub use paths::RelPath;
pub use sandbox::{ContainerBackend, ExecutionRequest, ExecutionResult, Executor, ExitStatus, LocalBackend, Mount};
pub use validator::{
    classify, compare_outputs, Classification, CompareMode, ComparisonPolicy, ComparisonReport, Verdict,
};
