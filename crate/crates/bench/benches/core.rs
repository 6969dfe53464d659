use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use reprokit_bench::{projects_dir, synthetic_records};
use reprokit_core::analysis::{aggregate, GroupKey};
use reprokit_core::paths::RelPath;
use reprokit_core::prompt_repair::{extract_code, render_prompt, PromptContext, PromptLevel};
use reprokit_core::validator::compare_bytes;
use reprokit_core::{
    apply_mutation, compose_test_case, load_projects, Category, CategoryRecipe, ComparisonPolicy, MutationOperator,
    OperatorKind,
};

fn injection(c: &mut Criterion) {
    let projects = load_projects(&projects_dir()).unwrap();
    let project = &projects[0];
    let script = project.manifest.entry_scripts[0].clone();
    let text = std::fs::read_to_string(script.under(&project.root)).unwrap();
    let op = MutationOperator::new(OperatorKind::IdentifierTypo, script);
    c.bench_function("apply_mutation/identifier_typo", |b| {
        let mut seed = 0u64;
        b.iter(|| {
            seed += 1;
            black_box(apply_mutation(&text, &op, seed).ok())
        })
    });
    let recipe = CategoryRecipe::standard(Category::C);
    c.bench_function("compose_test_case/category_c", |b| {
        let mut seed = 0u64;
        b.iter(|| {
            seed += 1;
            black_box(compose_test_case(project, &recipe, seed).ok())
        })
    });
}

fn aggregation(c: &mut Criterion) {
    let records = synthetic_records(10_000);
    let keys = [GroupKey::Backend, GroupKey::PromptLevel, GroupKey::Category];
    c.bench_function("aggregate/10k_records", |b| b.iter(|| black_box(aggregate(&records, &keys).unwrap())));
}

fn comparison(c: &mut Criterion) {
    let mut truth = String::from("id,value,share\n");
    for i in 0..5_000 {
        truth.push_str(&format!("{i},{:.6},{:.4}\n", i as f64 * 1.37, (i % 100) as f64 / 100.0));
    }
    let crlf = truth.replace('\n', "\r\n");
    let mut nudged = truth.clone();
    nudged.replace_range(nudged.len() - 3..nudged.len() - 2, "1");
    let path = RelPath::new("results/table.csv").unwrap();
    let normalized = ComparisonPolicy::default();
    let numeric = ComparisonPolicy::numeric(1e-3);
    c.bench_function("compare/normalized_crlf", |b| {
        b.iter(|| black_box(compare_bytes(&path, truth.as_bytes(), crlf.as_bytes(), &normalized)))
    });
    c.bench_function("compare/numeric_tolerant", |b| {
        b.iter(|| black_box(compare_bytes(&path, truth.as_bytes(), nudged.as_bytes(), &numeric)))
    });
}

fn prompting(c: &mut Criterion) {
    let ctx = PromptContext {
        script_name: "analysis.R".into(),
        script_code: "x <- read.csv('data/a.csv')\n".repeat(200),
        log: "Error in file(file, \"rt\"): cannot open the connection\n".repeat(50),
        paper: Some("# Title\n\nBody text.\n".repeat(500)),
        support_scripts: Some(vec![("utils.R".into(), "f <- function(x) x + 1\n".repeat(100))]),
    };
    c.bench_function("render_prompt/full", |b| b.iter(|| black_box(render_prompt(PromptLevel::Full, &ctx).unwrap())));
    let response = format!("<think>{}</think>\n```r\n{}```\n", "plan ".repeat(2000), ctx.script_code);
    c.bench_function("extract_code/fenced", |b| b.iter(|| black_box(extract_code(&response).unwrap())));
}

criterion_group!(benches, injection, aggregation, comparison, prompting);
criterion_main!(benches);
