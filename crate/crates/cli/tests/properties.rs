mod support;

use std::collections::BTreeMap;
use std::sync::OnceLock;

use proptest::prelude::*;
use reprokit_core::analysis::{aggregate, parse_tables_csv, tables_csv, GroupKey, RunRecord, Workflow};
use reprokit_core::paths::RelPath;
use reprokit_core::prompt_repair::{repair_loop, CompletionBackend, CompletionRequest, PromptLevel, RepairOptions};
use reprokit_core::validator::compare_bytes;
use reprokit_core::{
    apply_mutation, compare_outputs, compose_test_case, load_projects, load_test_case, write_test_case, Category,
    CategoryRecipe, Classification, ComparisonPolicy, GroundTruthProject, MutationOperator, OperatorKind,
};

fn projects() -> &'static [GroundTruthProject] {
    static P: OnceLock<Vec<GroundTruthProject>> = OnceLock::new();
    P.get_or_init(|| load_projects(&support::projects_dir()).unwrap())
}

fn category() -> impl Strategy<Value = Category> {
    prop_oneof![Just(Category::A), Just(Category::B), Just(Category::C)]
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn records_witness_their_edit(p in 0usize..5, s in 0usize..4, k in 0usize..9, seed in any::<u64>()) {
        let project = &projects()[p];
        let scripts: Vec<&RelPath> = project.manifest.scripts().collect();
        let script = scripts[s % scripts.len()];
        let text = std::fs::read_to_string(script.under(&project.root)).unwrap();
        let op = MutationOperator::new(OperatorKind::ALL[k], script.clone());
        let Ok((mutated, record)) = apply_mutation(&text, &op, seed) else { return Ok(()) };
        prop_assert_ne!(&mutated, &text);
        prop_assert_eq!(record.apply(&text).unwrap(), mutated.clone());
        prop_assert_eq!(record.try_revert(&mutated).unwrap(), text.clone());
        prop_assert_eq!(apply_mutation(&text, &op, seed).unwrap(), (mutated, record));
    }

    #[test]
    fn composed_cases_keep_their_shape(p in 0usize..5, cat in category(), seed in any::<u64>()) {
        let project = &projects()[p];
        let recipe = CategoryRecipe::standard(cat);
        let case = match compose_test_case(project, &recipe, seed) {
            Ok(c) => c,
            Err(reprokit_core::Error::RecipeUnsatisfiable(_)) => return Ok(()),
            Err(e) => panic!("{e}"),
        };
        prop_assert_eq!(&compose_test_case(project, &recipe, seed).unwrap(), &case);
        let kinds: Vec<OperatorKind> = case.injections.iter().map(|r| r.operator.kind).collect();
        match cat {
            Category::A => prop_assert_eq!(kinds.len(), 1),
            Category::B => prop_assert!(kinds.iter().any(|k| OperatorKind::CATEGORY_B.contains(k))),
            Category::C => prop_assert!(kinds.iter().any(|k| OperatorKind::STRUCTURAL.contains(k))),
        }
        prop_assert!(kinds.len() >= recipe.count_range.0 && kinds.len() <= recipe.count_range.1);
        let pristine = project.read_workspace().unwrap();
        for data in &project.manifest.data_files {
            prop_assert_eq!(&case.workspace[data], &pristine[data]);
        }
        prop_assert_eq!(&case.ground_truth, &project.read_ground_truth().unwrap());
        for f in case.touched_files() {
            let restored = case.pristine(&f).unwrap();
            prop_assert_eq!(restored.as_bytes(), &pristine[&f][..]);
        }
        let dir = tempfile::tempdir().unwrap();
        write_test_case(&case, dir.path()).unwrap();
        prop_assert_eq!(load_test_case(dir.path()).unwrap(), case);
    }

    #[test]
    fn any_single_byte_change_is_caught(p in 0usize..5, file in any::<prop::sample::Index>(), pos in any::<prop::sample::Index>(), flip in 1u8..=255) {
        let project = &projects()[p];
        let expected = project.expected();
        let out = file.get(&expected.outputs);
        let produced = tempfile::tempdir().unwrap();
        reprokit_core::corpus::write_tree(produced.path(), &project.read_ground_truth().unwrap()).unwrap();
        let target = out.path.under(produced.path());
        let mut bytes = std::fs::read(&target).unwrap();
        let i = pos.index(bytes.len());
        bytes[i] ^= flip;
        std::fs::write(&target, &bytes).unwrap();
        let policy = project.manifest.policy_or(None);
        let report = compare_outputs(produced.path(), &expected, &policy).unwrap();
        prop_assert_eq!(report.classification, Classification::NotReproduced);
    }

    #[test]
    fn tolerant_policies_never_reject_exact_matches(a in "[0-9a-z,.\\r\\n -]{0,80}", b in "[0-9a-z,.\\r\\n -]{0,80}", same in any::<bool>()) {
        let b = if same { a.clone() } else { b };
        let path = RelPath::new("t.csv").unwrap();
        if compare_bytes(&path, a.as_bytes(), b.as_bytes(), &ComparisonPolicy::byte_exact()).is_none() {
            prop_assert!(compare_bytes(&path, a.as_bytes(), b.as_bytes(), &ComparisonPolicy::default()).is_none());
            prop_assert!(compare_bytes(&path, a.as_bytes(), b.as_bytes(), &ComparisonPolicy::numeric(1e-6)).is_none());
        }
        let first = compare_bytes(&path, a.as_bytes(), b.as_bytes(), &ComparisonPolicy::default());
        prop_assert_eq!(first, compare_bytes(&path, a.as_bytes(), b.as_bytes(), &ComparisonPolicy::default()));
    }

    #[test]
    fn aggregation_ignores_order_and_partitions(records in prop::collection::vec(record(), 1..200), seed in any::<u64>()) {
        let keys = [GroupKey::Backend, GroupKey::Category];
        let table = aggregate(&records, &keys).unwrap();
        let mut shuffled = records.clone();
        let mut rng = proptest::test_runner::TestRng::from_seed(proptest::test_runner::RngAlgorithm::ChaCha, &seed.to_le_bytes().repeat(4));
        for i in (1..shuffled.len()).rev() {
            let j = (rng.next_u64() % (i as u64 + 1)) as usize;
            shuffled.swap(i, j);
        }
        prop_assert_eq!(&aggregate(&shuffled, &keys).unwrap(), &table);
        let mut per_backend: BTreeMap<&str, u64> = BTreeMap::new();
        for row in &table.rows {
            *per_backend.entry(&row.key[0]).or_default() += row.n_total;
            prop_assert!(row.n_reproduced <= row.n_total);
        }
        for (b, n) in per_backend {
            prop_assert_eq!(n, records.iter().filter(|r| r.backend_identity == b).count() as u64);
        }
        let tables = vec![table, aggregate(&records, &[]).unwrap()];
        prop_assert_eq!(parse_tables_csv(&tables_csv(&tables).unwrap()).unwrap(), tables);
    }
}

fn record() -> impl Strategy<Value = RunRecord> {
    (0usize..3, category(), any::<bool>(), 0u32..6).prop_map(|(b, category, ok, attempts)| RunRecord {
        case_id: format!("c-{attempts}"),
        error_kinds: vec!["PathCorruption".into()],
        category,
        workflow: Workflow::Prompt,
        backend_identity: ["m1", "m2", "m3"][b].into(),
        prompt_level: Some(PromptLevel::Full),
        attempts,
        execution_time: 1.0,
        outcome: if ok { Classification::Reproduced } else { Classification::NotReproduced },
        status_file: None,
        leakage_flags: None,
        error: None,
    })
}

/// Answers with the pristine script only on the listed calls, otherwise echoes the input.
struct Scripted {
    fix_on: Vec<u32>,
}

impl CompletionBackend for Scripted {
    fn identity(&self) -> String {
        "scripted".into()
    }

    fn complete(&self, r: &CompletionRequest<'_>) -> reprokit_core::Result<String> {
        if self.fix_on.contains(&r.call_index) {
            Ok(r.case.pristine(r.target).unwrap())
        } else {
            Ok(r.current.to_string())
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn repair_rounds_stay_within_the_cap(case in any::<prop::sample::Index>(), max in 1u32..6, fix_on in prop::collection::vec(1u32..12, 0..6)) {
        let corpus = support::smoke_corpus();
        let sc = case.get(corpus);
        let backend = Scripted { fix_on };
        let art = tempfile::tempdir().unwrap();
        let opts = RepairOptions { max_iterations: max, artifacts: Some(art.path().to_path_buf()), ..RepairOptions::default() };
        let out = repair_loop(&sc.case, &backend, PromptLevel::Minimal, &support::local_executor(), &opts).unwrap();
        prop_assert!(out.attempts_used >= 1 && out.attempts_used <= max);
        prop_assert_eq!(out.rounds.len() as u32, out.attempts_used);
        let files = sc.case.touched_files().len() as u32;
        prop_assert!(out.backend_calls <= max * files);
        if out.classification == Classification::Reproduced {
            let last = out.rounds.last().unwrap().execution.as_ref().unwrap();
            prop_assert!(last.exit_status.is_success());
            prop_assert!(out.final_report.per_file.iter().all(|f| f.verdict == reprokit_core::Verdict::Match));
        } else {
            prop_assert_eq!(out.attempts_used, max);
        }
        let run = art.path().join(reprokit_core::prompt_repair::run_id(&sc.case.case_id, "scripted", PromptLevel::Minimal));
        let count = |d: &str| std::fs::read_dir(run.join(d)).map(|r| r.count()).unwrap_or(0) as u32;
        prop_assert_eq!(count("prompts"), out.backend_calls);
        prop_assert_eq!(count("responses"), out.backend_calls);
        prop_assert_eq!(count("logs"), out.attempts_used + 1);
    }
}
