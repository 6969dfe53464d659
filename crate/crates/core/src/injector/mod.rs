//! Seeded fault injection over R sources and composition into A/B/C test cases.

pub mod operators;
pub mod rsyntax;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{write_tree, Category, GroundTruthProject, TestCase};
use crate::error::{Error, IoContext, Result};
use crate::paths::{read_string, RelPath};
use crate::sandbox::{run_scripts, Executor};
use crate::validator::{compare_outputs, Classification, ComparisonPolicy, ExpectedSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum OperatorKind {
    PathCorruption,
    PackageRemoval,
    PackageNameCorruption,
    IdentifierTypo,
    SyntaxBreak,
    VariableRemoval,
    FunctionStub,
    CodeBlockDeletion,
    FileReadCorruption,
}

impl OperatorKind {
    pub const ALL: [OperatorKind; 9] = [
        OperatorKind::PathCorruption,
        OperatorKind::PackageRemoval,
        OperatorKind::PackageNameCorruption,
        OperatorKind::IdentifierTypo,
        OperatorKind::SyntaxBreak,
        OperatorKind::VariableRemoval,
        OperatorKind::FunctionStub,
        OperatorKind::CodeBlockDeletion,
        OperatorKind::FileReadCorruption,
    ];
    pub const CATEGORY_A: [OperatorKind; 4] = [
        OperatorKind::PathCorruption,
        OperatorKind::PackageRemoval,
        OperatorKind::IdentifierTypo,
        OperatorKind::FileReadCorruption,
    ];
    pub const CATEGORY_B: [OperatorKind; 3] =
        [OperatorKind::PackageNameCorruption, OperatorKind::SyntaxBreak, OperatorKind::VariableRemoval];
    pub const STRUCTURAL: [OperatorKind; 2] = [OperatorKind::FunctionStub, OperatorKind::CodeBlockDeletion];

    pub fn name(&self) -> &'static str {
        match self {
            OperatorKind::PathCorruption => "PathCorruption",
            OperatorKind::PackageRemoval => "PackageRemoval",
            OperatorKind::PackageNameCorruption => "PackageNameCorruption",
            OperatorKind::IdentifierTypo => "IdentifierTypo",
            OperatorKind::SyntaxBreak => "SyntaxBreak",
            OperatorKind::VariableRemoval => "VariableRemoval",
            OperatorKind::FunctionStub => "FunctionStub",
            OperatorKind::CodeBlockDeletion => "CodeBlockDeletion",
            OperatorKind::FileReadCorruption => "FileReadCorruption",
        }
    }
}

impl fmt::Display for OperatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OperatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        OperatorKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown operator kind {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MutationOperator {
    pub kind: OperatorKind,
    pub target_file: RelPath,
    /// Pinned parameters on input; every resolved parameter in a record.
    #[serde(default)]
    pub params: BTreeMap<String, String>,
}

impl MutationOperator {
    pub fn new(kind: OperatorKind, target_file: RelPath) -> Self {
        MutationOperator { kind, target_file, params: BTreeMap::new() }
    }

    pub fn with(mut self, key: &str, value: &str) -> Self {
        self.params.insert(key.into(), value.into());
        self
    }
}

/// A 1-based inclusive line range in the file as it was before the edit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Location {
    pub file: RelPath,
    pub start_line: usize,
    pub end_line: usize,
}

/// Witness of one edit: replacing `original_snippet` at `location` with
/// `mutated_snippet` turns the file before the edit into the file after it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InjectionRecord {
    pub operator: MutationOperator,
    pub original_snippet: String,
    pub mutated_snippet: String,
    pub location: Location,
}

impl InjectionRecord {
    /// Re-applies the edit to the text it was recorded against.
    pub fn apply(&self, text: &str) -> Result<String> {
        splice(text, self.location.start_line - 1, &self.original_snippet, &self.mutated_snippet)
            .ok_or_else(|| Error::InapplicableOperator(format!("record does not match {}", self.location.file)))
    }

    /// Undoes the edit on the text it produced.
    pub fn try_revert(&self, text: &str) -> Result<String> {
        splice(text, self.location.start_line - 1, &self.mutated_snippet, &self.original_snippet)
            .ok_or_else(|| Error::InapplicableOperator(format!("record cannot be reverted in {}", self.location.file)))
    }

    pub fn revert(&self, text: &str) -> String {
        self.try_revert(text).unwrap_or_else(|_| text.to_string())
    }
}

/// Replaces the lines starting at `start` that spell `from` with `to`.
fn splice(text: &str, start: usize, from: &str, to: &str) -> Option<String> {
    let lines = rsyntax::lines(text);
    let n = rsyntax::lines(from).len();
    if start + n > lines.len() || lines[start..start + n].concat() != from {
        return None;
    }
    let mut out: String = lines[..start].concat();
    out.push_str(to);
    out.push_str(&lines[start + n..].concat());
    Some(out)
}

fn candidate_matches(c: &operators::Candidate, pinned: &BTreeMap<String, String>) -> bool {
    pinned.iter().all(|(k, v)| c.params.get(k) == Some(v))
}

/// Applies `operator` to `script_text`, choosing among matching sites with `seed`.
pub fn apply_mutation(script_text: &str, operator: &MutationOperator, seed: u64) -> Result<(String, InjectionRecord)> {
    apply_avoiding(script_text, operator, seed, &[])
}

/// As [`apply_mutation`], skipping sites that overlap `protected` lines (0-based flags).
pub fn apply_avoiding(
    script_text: &str,
    operator: &MutationOperator,
    seed: u64,
    protected: &[bool],
) -> Result<(String, InjectionRecord)> {
    let all = operators::candidates(operator.kind, script_text);
    if all.is_empty() {
        return Err(Error::TargetNotFound { kind: operator.kind.to_string(), file: operator.target_file.to_string() });
    }
    let pool: Vec<_> = all
        .into_iter()
        .filter(|c| candidate_matches(c, &operator.params))
        .filter(|c| !(c.start..c.end).any(|i| protected.get(i).copied().unwrap_or(false)))
        .collect();
    if pool.is_empty() {
        return Err(Error::InapplicableOperator(format!(
            "no {} site in {} matches the requested parameters",
            operator.kind, operator.target_file
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let chosen = &pool[rng.random_range(0..pool.len())];
    let lines = rsyntax::lines(script_text);
    let original: String = lines[chosen.start..chosen.end].concat();
    let mut mutated_text: String = lines[..chosen.start].concat();
    mutated_text.push_str(&chosen.replacement);
    mutated_text.push_str(&lines[chosen.end..].concat());
    if mutated_text == script_text {
        return Err(Error::InapplicableOperator(format!("{} left {} unchanged", operator.kind, operator.target_file)));
    }
    let record = InjectionRecord {
        operator: MutationOperator {
            kind: operator.kind,
            target_file: operator.target_file.clone(),
            params: chosen.params.clone(),
        },
        original_snippet: original,
        mutated_snippet: chosen.replacement.clone(),
        location: Location { file: operator.target_file.clone(), start_line: chosen.start + 1, end_line: chosen.end },
    };
    Ok((mutated_text, record))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryRecipe {
    pub category: Category,
    pub operator_pool: Vec<OperatorKind>,
    /// Kinds the first operator is drawn from; it fixes the case's character.
    pub lead_pool: Vec<OperatorKind>,
    pub count_range: (usize, usize),
    pub cross_file_allowed: bool,
}

impl CategoryRecipe {
    pub fn standard(category: Category) -> Self {
        match category {
            Category::A => CategoryRecipe {
                category,
                operator_pool: OperatorKind::CATEGORY_A.to_vec(),
                lead_pool: OperatorKind::CATEGORY_A.to_vec(),
                count_range: (1, 1),
                cross_file_allowed: false,
            },
            Category::B => CategoryRecipe {
                category,
                operator_pool: OperatorKind::CATEGORY_B.iter().chain(&OperatorKind::CATEGORY_A).copied().collect(),
                lead_pool: OperatorKind::CATEGORY_B.to_vec(),
                count_range: (1, 3),
                cross_file_allowed: false,
            },
            Category::C => CategoryRecipe {
                category,
                operator_pool: OperatorKind::ALL.to_vec(),
                lead_pool: OperatorKind::STRUCTURAL.to_vec(),
                count_range: (2, 4),
                cross_file_allowed: true,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(format!("category {} recipe: {msg}", self.category)));
        let (lo, hi) = self.count_range;
        if lo == 0 || lo > hi {
            return bad("count_range must satisfy 1 <= min <= max");
        }
        if self.lead_pool.is_empty() || !self.lead_pool.iter().all(|k| self.operator_pool.contains(k)) {
            return bad("lead_pool must be a non-empty subset of operator_pool");
        }
        let pool: BTreeSet<_> = self.operator_pool.iter().collect();
        match self.category {
            Category::A => {
                if !pool.iter().all(|k| OperatorKind::CATEGORY_A.contains(k)) {
                    return bad("pool must only hold Category-A kinds");
                }
                if self.count_range != (1, 1) || self.cross_file_allowed {
                    return bad("exactly one operator in a single file");
                }
            }
            Category::B => {
                if !OperatorKind::CATEGORY_B.iter().all(|k| pool.contains(k)) {
                    return bad("pool must include every Category-B kind");
                }
                if pool.iter().any(|k| OperatorKind::STRUCTURAL.contains(k)) {
                    return bad("structural kinds belong to Category C");
                }
                if !self.lead_pool.iter().all(|k| OperatorKind::CATEGORY_B.contains(k)) {
                    return bad("the lead operator must be a Category-B kind");
                }
            }
            Category::C => {
                if !OperatorKind::STRUCTURAL.iter().all(|k| pool.contains(k)) {
                    return bad("pool must include the structural kinds");
                }
                if !self.lead_pool.iter().all(|k| OperatorKind::STRUCTURAL.contains(k)) {
                    return bad("the lead operator must be structural");
                }
                if !self.cross_file_allowed {
                    return bad("cross-file edits must be allowed");
                }
            }
        }
        Ok(())
    }
}

/// Resampling budget for inapplicable operators within one case.
pub const RETRY_BUDGET: usize = 32;

fn script_texts(project: &GroundTruthProject, workspace: &crate::corpus::FileTree) -> Result<Vec<(RelPath, String)>> {
    project
        .manifest
        .scripts()
        .map(|s| {
            let bytes = workspace.get(s).ok_or_else(|| Error::PathViolation(format!("script {s} missing")))?;
            let text = String::from_utf8(bytes.clone())
                .map_err(|_| Error::InapplicableOperator(format!("script {s} is not UTF-8")))?;
            Ok((s.clone(), text))
        })
        .collect()
}

/// Builds one test case by sampling and applying operators per `recipe`.
pub fn compose_test_case(project: &GroundTruthProject, recipe: &CategoryRecipe, seed: u64) -> Result<TestCase> {
    recipe.validate()?;
    let mut workspace = project.read_workspace()?;
    let scripts = script_texts(project, &workspace)?;
    let has_site = |kinds: &[OperatorKind]| {
        scripts.iter().any(|(_, t)| kinds.iter().any(|k| !operators::candidates(*k, t).is_empty()))
    };
    if !has_site(&recipe.operator_pool) {
        return Err(Error::NoApplicableTarget(project.id().to_string()));
    }
    if !has_site(&recipe.lead_pool) {
        return Err(Error::RecipeUnsatisfiable(format!(
            "no {} lead operator applies to {}",
            recipe.category,
            project.id()
        )));
    }
    let mut texts: BTreeMap<RelPath, String> = scripts.iter().cloned().collect();
    let mut protected: BTreeMap<RelPath, Vec<bool>> =
        texts.iter().map(|(p, t)| (p.clone(), vec![false; rsyntax::lines(t).len()])).collect();
    let names: Vec<RelPath> = scripts.iter().map(|(p, _)| p.clone()).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = recipe.count_range;
    let count = rng.random_range(lo..=hi);
    let mut records: Vec<InjectionRecord> = Vec::new();
    let mut failures = 0;
    while records.len() < count && failures <= RETRY_BUDGET {
        let pool = if records.is_empty() { &recipe.lead_pool } else { &recipe.operator_pool };
        let kind = pool[rng.random_range(0..pool.len())];
        let file = match records.first() {
            Some(first) if !recipe.cross_file_allowed => first.location.file.clone(),
            _ => names[rng.random_range(0..names.len())].clone(),
        };
        let op_seed: u64 = rng.random();
        let op = MutationOperator::new(kind, file.clone());
        match apply_avoiding(&texts[&file], &op, op_seed, &protected[&file]) {
            Ok((mutated, record)) => {
                let mask = protected.get_mut(&file).expect("every script has a mask");
                let start = record.location.start_line - 1;
                let added = rsyntax::lines(&record.mutated_snippet).len();
                mask.splice(start..record.location.end_line, std::iter::repeat_n(true, added));
                texts.insert(file, mutated);
                records.push(record);
            }
            Err(Error::TargetNotFound { .. }) | Err(Error::InapplicableOperator(_)) => failures += 1,
            Err(e) => return Err(e),
        }
    }
    if records.len() < lo {
        return Err(Error::RecipeUnsatisfiable(format!(
            "only {} of at least {lo} operators applied to {} after {RETRY_BUDGET} retries",
            records.len(),
            project.id()
        )));
    }
    for (path, text) in texts {
        workspace.insert(path, text.into_bytes());
    }
    Ok(TestCase {
        case_id: format!("{}-{}-{seed:016x}", project.id(), recipe.category),
        origin_project: project.id().to_string(),
        category: recipe.category,
        seed,
        injections: records,
        project: project.manifest.clone(),
        workspace,
        ground_truth: project.read_ground_truth()?,
    })
}

/// One row of a benchmark plan: how many cases of a category to draw from a project.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanEntry {
    pub project: String,
    pub category: Category,
    pub count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkPlan {
    #[serde(default)]
    pub description: String,
    pub base_seed: u64,
    /// Keep only cases that verifiably fail.
    #[serde(default)]
    pub strict: bool,
    pub entries: Vec<PlanEntry>,
}

/// A single case to generate, with its identity fixed before any work is done.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlannedCase {
    pub case_id: String,
    pub project: String,
    pub category: Category,
    pub seed: u64,
}

/// `hash(base seed, project, category, ordinal)`, truncated to 64 bits.
pub fn case_seed(base_seed: u64, project: &str, category: Category, ordinal: usize) -> u64 {
    let digest = Sha256::digest(format!("{base_seed}/{project}/{category}/{ordinal}").as_bytes());
    u64::from_be_bytes(digest[..8].try_into().expect("digest is 32 bytes"))
}

impl BenchmarkPlan {
    pub fn load(path: &Path) -> Result<Self> {
        if !path.is_file() {
            return Err(Error::ManifestMissing(path.to_path_buf()));
        }
        serde_json::from_str(&read_string(path)?).map_err(|e| Error::malformed(path, e))
    }

    pub fn total(&self) -> usize {
        self.entries.iter().map(|e| e.count).sum()
    }

    /// Expands the plan into cases, rejecting duplicate case ids.
    pub fn expand(&self) -> Result<Vec<PlannedCase>> {
        let mut out = Vec::new();
        let mut ids = BTreeSet::new();
        for e in &self.entries {
            let base = e.base_seed.unwrap_or(self.base_seed);
            for ordinal in 1..=e.count {
                let case_id = format!("{}-{}-{ordinal:03}", e.project, e.category);
                if !ids.insert(case_id.clone()) {
                    return Err(Error::InvalidPlan(format!("duplicate case id {case_id}")));
                }
                out.push(PlannedCase {
                    case_id,
                    project: e.project.clone(),
                    category: e.category,
                    seed: case_seed(base, &e.project, e.category, ordinal),
                });
            }
        }
        Ok(out)
    }
}

/// Attempts per planned case when strict mode keeps rejecting candidates.
pub const STRICT_ATTEMPTS: usize = 64;

/// Strict-mode gate: a candidate is kept only when this returns `true`.
pub type BrokenCheck<'a> = dyn Fn(&TestCase) -> Result<bool> + Sync + 'a;

/// Generates one planned case; in strict mode, walks `seed, seed+1, ...` until the case is broken.
pub fn generate_case(
    project: &GroundTruthProject,
    planned: &PlannedCase,
    strict: Option<&BrokenCheck>,
) -> Result<TestCase> {
    let recipe = CategoryRecipe::standard(planned.category);
    let annotate = |seed: u64, e: Error| Error::Generation {
        project: planned.project.clone(),
        category: planned.category.to_string(),
        seed,
        source: Box::new(e),
    };
    let mut seed = planned.seed;
    for _ in 0..STRICT_ATTEMPTS {
        let mut case = compose_test_case(project, &recipe, seed).map_err(|e| annotate(seed, e))?;
        case.case_id = planned.case_id.clone();
        match strict {
            None => return Ok(case),
            Some(check) => {
                if check(&case).map_err(|e| annotate(seed, e))? {
                    return Ok(case);
                }
            }
        }
        seed = seed.wrapping_add(1);
    }
    Err(annotate(planned.seed, Error::RecipeUnsatisfiable(format!("no broken case within {STRICT_ATTEMPTS} seeds"))))
}

/// Generates every case of `plan`, in plan order.
pub fn generate_benchmark(
    projects: &[GroundTruthProject],
    plan: &BenchmarkPlan,
    strict: Option<&BrokenCheck>,
) -> Result<Vec<TestCase>> {
    let planned = plan.expand()?;
    let by_id: BTreeMap<&str, &GroundTruthProject> = projects.iter().map(|p| (p.id(), p)).collect();
    for p in &planned {
        if !by_id.contains_key(p.project.as_str()) {
            return Err(Error::InvalidPlan(format!("unknown project {}", p.project)));
        }
    }
    let mut seeds = BTreeSet::new();
    let mut out = Vec::with_capacity(planned.len());
    for p in &planned {
        let mut case = generate_case(by_id[p.project.as_str()], p, strict)?;
        if !seeds.insert(case.seed) {
            return Err(Error::InvalidPlan(format!("seed collision for {}", case.case_id)));
        }
        case.case_id = p.case_id.clone();
        out.push(case);
    }
    Ok(out)
}

/// Whether the case's entry scripts fail or produce outputs that differ from the ground truth.
pub fn verify_broken(case: &TestCase, executor: &dyn Executor, policy: &ComparisonPolicy) -> Result<bool> {
    let spec = &case.project.runtime_spec;
    executor.check(spec)?;
    let scratch = tempfile::Builder::new().prefix("reprokit-broken-").tempdir().at(std::env::temp_dir())?;
    let ws = scratch.path().join("ws");
    let truth = scratch.path().join("truth");
    write_tree(&ws, &case.workspace)?;
    write_tree(&truth, &case.ground_truth)?;
    let run = run_scripts(executor, &ws, &case.project.entry_scripts, spec)?;
    if !run.exit_status.is_success() {
        return Ok(true);
    }
    let expected = ExpectedSet { root: truth, outputs: case.project.expected_outputs.clone() };
    let report = compare_outputs(&ws, &expected, policy)?;
    Ok(report.classification == Classification::NotReproduced)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SCRIPT: &str = "library(tools)\nsource(\"utils.R\")\nd <- read.csv(\"data/x.csv\")\nlinterp <- function(x, y) {\n  a <- x + y\n  return(a)\n}\nfor (i in 1:3) {\n  print(i)\n}\ntotal <- linterp(d$a, 1)\nprint(total)\n";

    fn op(kind: OperatorKind) -> MutationOperator {
        MutationOperator::new(kind, RelPath::new("s.R").unwrap())
    }

    #[test]
    fn stub_example() {
        let (out, rec) = apply_mutation(SCRIPT, &op(OperatorKind::FunctionStub), 1).unwrap();
        assert!(out.contains("linterp <- function(x, y) {\n  stop(\"Not implemented\")\n}\n"));
        assert_eq!(rec.location.start_line, 4);
        assert_eq!(rec.location.end_line, 7);
        assert_eq!(rec.operator.params["function"], "linterp");
    }

    #[test]
    fn path_suffix_example() {
        let o = op(OperatorKind::PathCorruption).with("suffix", "_missing").with("literal", "data/x.csv");
        let (out, _) = apply_mutation(SCRIPT, &o, 9).unwrap();
        assert!(out.contains("read.csv(\"data/x_missing.csv\")"));
    }

    #[test]
    fn package_removal_without_library_call() {
        let r = apply_mutation("x <- 1\n", &op(OperatorKind::PackageRemoval), 0);
        assert!(matches!(r, Err(Error::TargetNotFound { .. })));
    }

    #[test]
    fn pinned_params_that_match_nothing() {
        let o = op(OperatorKind::FunctionStub).with("function", "absent");
        assert!(matches!(apply_mutation(SCRIPT, &o, 0), Err(Error::InapplicableOperator(_))));
    }

    #[test]
    fn every_kind_round_trips_through_its_record() {
        for kind in OperatorKind::ALL {
            for seed in 0..8 {
                let (out, rec) = apply_mutation(SCRIPT, &op(kind), seed).unwrap();
                assert_ne!(out, SCRIPT);
                assert_eq!(rec.apply(SCRIPT).unwrap(), out, "{kind} seed {seed}");
                assert_eq!(rec.try_revert(&out).unwrap(), SCRIPT, "{kind} seed {seed}");
                assert_eq!(apply_mutation(SCRIPT, &op(kind), seed).unwrap().0, out);
            }
        }
    }

    #[test]
    fn standard_recipes_are_valid() {
        for c in Category::ALL {
            CategoryRecipe::standard(c).validate().unwrap();
        }
        let mut a = CategoryRecipe::standard(Category::A);
        a.count_range = (1, 2);
        assert!(a.validate().is_err());
        let mut b = CategoryRecipe::standard(Category::B);
        b.operator_pool.retain(|k| *k != OperatorKind::SyntaxBreak);
        assert!(b.validate().is_err());
        let mut c = CategoryRecipe::standard(Category::C);
        c.cross_file_allowed = false;
        assert!(c.validate().is_err());
    }

    #[test]
    fn plan_expansion() {
        let plan = BenchmarkPlan {
            description: String::new(),
            base_seed: 7,
            strict: false,
            entries: vec![
                PlanEntry { project: "p".into(), category: Category::A, count: 2, base_seed: None },
                PlanEntry { project: "p".into(), category: Category::B, count: 1, base_seed: None },
            ],
        };
        let cases = plan.expand().unwrap();
        let ids: Vec<&str> = cases.iter().map(|c| c.case_id.as_str()).collect();
        assert_eq!(ids, ["p-A-001", "p-A-002", "p-B-001"]);
        assert_ne!(cases[0].seed, cases[1].seed);
        let mut dup = plan.clone();
        dup.entries.push(PlanEntry { project: "p".into(), category: Category::A, count: 1, base_seed: Some(3) });
        assert!(matches!(dup.expand(), Err(Error::InvalidPlan(_))));
        let empty = BenchmarkPlan { description: String::new(), base_seed: 1, strict: false, entries: vec![] };
        assert!(generate_benchmark(&[], &empty, None).unwrap().is_empty());
    }

    #[test]
    fn case_seed_is_stable() {
        assert_eq!(case_seed(1, "p", Category::A, 1), case_seed(1, "p", Category::A, 1));
        assert_ne!(case_seed(1, "p", Category::A, 1), case_seed(1, "p", Category::A, 2));
        assert_ne!(case_seed(1, "p", Category::A, 1), case_seed(1, "p", Category::B, 1));
    }
}
