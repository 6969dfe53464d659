//! Output comparison against stored ground truth.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus::ExpectedOutput;
use crate::error::{Error, IoContext, Result};
use crate::paths::{list_files, RelPath};
use crate::sandbox::ExitStatus;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CompareMode {
    ByteExact,
    NormalizedExact,
    NumericTolerant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    LineEndings,
    TrailingWhitespace,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonPolicy {
    pub mode: CompareMode,
    #[serde(default)]
    pub normalizations: BTreeSet<Normalization>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub numeric_tolerance: Option<f64>,
}

impl Default for ComparisonPolicy {
    fn default() -> Self {
        ComparisonPolicy {
            mode: CompareMode::NormalizedExact,
            normalizations: BTreeSet::from([Normalization::LineEndings]),
            numeric_tolerance: None,
        }
    }
}

impl ComparisonPolicy {
    pub fn byte_exact() -> Self {
        ComparisonPolicy { mode: CompareMode::ByteExact, normalizations: BTreeSet::new(), numeric_tolerance: None }
    }

    pub fn numeric(epsilon: f64) -> Self {
        ComparisonPolicy { mode: CompareMode::NumericTolerant, numeric_tolerance: Some(epsilon), ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.mode == CompareMode::NumericTolerant {
            match self.numeric_tolerance {
                Some(eps) if eps > 0.0 && eps.is_finite() => {}
                _ => return Err(Error::InvalidConfig("numeric_tolerance must be a positive number".into())),
            }
        }
        Ok(())
    }

    /// Parses the `--policy` flag: `byte-exact`, `normalized`, or `numeric:<epsilon>`.
    pub fn parse(spec: &str) -> Result<Self> {
        let policy = match spec {
            "byte-exact" | "byte_exact" => ComparisonPolicy::byte_exact(),
            "normalized" | "normalized-exact" | "normalized_exact" => ComparisonPolicy::default(),
            s if s.starts_with("numeric") => {
                let eps = match s.split_once(':') {
                    Some((_, e)) => {
                        e.parse::<f64>().map_err(|_| Error::InvalidConfig(format!("bad numeric tolerance in {s:?}")))?
                    }
                    None => 1e-9,
                };
                ComparisonPolicy::numeric(eps)
            }
            other => return Err(Error::InvalidConfig(format!("unknown policy {other:?}"))),
        };
        policy.validate()?;
        Ok(policy)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Match,
    Mismatch,
    MissingOutput,
    ExtraIgnored,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Classification {
    Reproduced,
    NotReproduced,
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Classification::Reproduced => "Reproduced",
            Classification::NotReproduced => "NotReproduced",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileVerdict {
    pub path: RelPath,
    pub verdict: Verdict,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub per_file: Vec<FileVerdict>,
    pub classification: Classification,
    /// Set when the comparison was preceded by a failed execution.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub execution_failure: Option<String>,
}

impl ComparisonReport {
    /// Builds a report and derives the classification from the verdicts.
    pub fn from_verdicts(per_file: Vec<FileVerdict>) -> Self {
        let ok = per_file.iter().all(|f| matches!(f.verdict, Verdict::Match | Verdict::ExtraIgnored))
            && per_file.iter().any(|f| f.verdict == Verdict::Match);
        ComparisonReport {
            per_file,
            classification: if ok { Classification::Reproduced } else { Classification::NotReproduced },
            execution_failure: None,
        }
    }

    pub fn with_execution_failure(mut self, detail: impl Into<String>) -> Self {
        self.execution_failure = Some(detail.into());
        self.classification = Classification::NotReproduced;
        self
    }

    /// Human-readable rendering used for `comparison.txt` and repair logs.
    pub fn render(&self) -> String {
        let mut out = format!("classification: {}\n", self.classification);
        if let Some(e) = &self.execution_failure {
            out.push_str(&format!("execution failed: {e}\n"));
        }
        for f in &self.per_file {
            let verdict = match f.verdict {
                Verdict::Match => "match",
                Verdict::Mismatch => "MISMATCH",
                Verdict::MissingOutput => "MISSING",
                Verdict::ExtraIgnored => "extra (ignored)",
            };
            match &f.detail {
                Some(d) => out.push_str(&format!("{verdict:>16}  {}  ({d})\n", f.path)),
                None => out.push_str(&format!("{verdict:>16}  {}\n", f.path)),
            }
        }
        out
    }
}

/// Ground-truth files: the manifest entries plus the directory holding their bytes.
#[derive(Debug, Clone)]
pub struct ExpectedSet {
    pub root: PathBuf,
    pub outputs: Vec<ExpectedOutput>,
}

/// Compares the expected outputs found in `produced` against the ground truth.
///
/// Files that exist in an output directory of the workspace but are not
/// expected are listed as `ExtraIgnored`.
pub fn compare_outputs(produced: &Path, expected: &ExpectedSet, policy: &ComparisonPolicy) -> Result<ComparisonReport> {
    if expected.outputs.is_empty() {
        return Err(Error::InvalidConfig("expected outputs must not be empty".into()));
    }
    policy.validate()?;
    let mut per_file = Vec::new();
    for out in &expected.outputs {
        let truth_path = out.path.under(&expected.root);
        let truth = std::fs::read(&truth_path).at(&truth_path)?;
        let got_path = out.path.under(produced);
        let got = match std::fs::read(&got_path) {
            Ok(b) => b,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                per_file.push(FileVerdict {
                    path: out.path.clone(),
                    verdict: Verdict::MissingOutput,
                    detail: Some("absent".into()),
                });
                continue;
            }
            Err(e) => return Err(Error::io(got_path, e)),
        };
        let (verdict, detail) = match compare_bytes(&out.path, &truth, &got, policy) {
            None => (Verdict::Match, None),
            Some(d) => (Verdict::Mismatch, Some(d)),
        };
        per_file.push(FileVerdict { path: out.path.clone(), verdict, detail });
    }
    let expected_paths: BTreeSet<&RelPath> = expected.outputs.iter().map(|o| &o.path).collect();
    let output_dirs: BTreeSet<&str> = expected.outputs.iter().filter_map(|o| o.path.top_dir()).collect();
    let mut extras = BTreeMap::new();
    for dir in output_dirs {
        let d = produced.join(dir);
        if d.is_dir() {
            for f in list_files(&d)? {
                let rel = RelPath::new(&format!("{dir}/{f}"))?;
                if !expected_paths.contains(&rel) {
                    extras.insert(rel.clone(), FileVerdict { path: rel, verdict: Verdict::ExtraIgnored, detail: None });
                }
            }
        }
    }
    per_file.extend(extras.into_values());
    Ok(ComparisonReport::from_verdicts(per_file))
}

/// `None` when the files match under `policy`, otherwise a description of the first difference.
pub fn compare_bytes(path: &RelPath, truth: &[u8], got: &[u8], policy: &ComparisonPolicy) -> Option<String> {
    if truth == got {
        return None;
    }
    let text = is_text(truth) && is_text(got);
    if policy.mode == CompareMode::ByteExact || !text {
        return Some(first_difference(truth, got, text));
    }
    let (a, b) = (String::from_utf8_lossy(truth), String::from_utf8_lossy(got));
    let (a, b) = (normalize(&a, &policy.normalizations), normalize(&b, &policy.normalizations));
    if a == b {
        return None;
    }
    if policy.mode == CompareMode::NumericTolerant {
        if let Some(delim) = delimiter_for(path) {
            let eps = policy.numeric_tolerance.unwrap_or(1e-9);
            match compare_delimited(&a, &b, delim, eps) {
                Ok(()) => return None,
                Err(Some(detail)) => return Some(detail),
                Err(None) => {}
            }
        }
    }
    Some(first_difference(a.as_bytes(), b.as_bytes(), true))
}

fn is_text(bytes: &[u8]) -> bool {
    !bytes.contains(&0) && std::str::from_utf8(bytes).is_ok()
}

fn normalize(s: &str, norms: &BTreeSet<Normalization>) -> String {
    let mut out = if norms.contains(&Normalization::LineEndings) { s.replace("\r\n", "\n") } else { s.to_string() };
    if norms.contains(&Normalization::TrailingWhitespace) {
        let trimmed: Vec<&str> = out.split('\n').map(|l| l.trim_end_matches([' ', '\t', '\r'])).collect();
        out = trimmed.join("\n");
        let kept = out.trim_end_matches('\n').len();
        out.truncate(kept);
    }
    out
}

fn first_difference(a: &[u8], b: &[u8], text: bool) -> String {
    let offset = a.iter().zip(b).position(|(x, y)| x != y).unwrap_or(a.len().min(b.len()));
    if !text {
        return format!("first difference at byte offset {offset}");
    }
    let before = &a[..offset.min(a.len())];
    let line = before.iter().filter(|&&c| c == b'\n').count() + 1;
    let line_start = before.iter().rposition(|&c| c == b'\n').map(|i| i + 1).unwrap_or(0);
    let column = String::from_utf8_lossy(&before[line_start..]).chars().count() + 1;
    format!("first difference at line {line}, column {column}")
}

fn delimiter_for(path: &RelPath) -> Option<u8> {
    match path.extension().map(str::to_ascii_lowercase).as_deref() {
        Some("csv") => Some(b','),
        Some("tsv") | Some("tab") => Some(b'\t'),
        _ => None,
    }
}

/// Cell-wise comparison. `Err(None)` means the files could not be parsed as tables.
fn compare_delimited(a: &str, b: &str, delim: u8, eps: f64) -> std::result::Result<(), Option<String>> {
    let parse = |s: &str| -> Option<Vec<csv::StringRecord>> {
        csv::ReaderBuilder::new()
            .delimiter(delim)
            .has_headers(false)
            .flexible(true)
            .from_reader(s.as_bytes())
            .records()
            .collect::<std::result::Result<Vec<_>, _>>()
            .ok()
    };
    let (ra, rb) = match (parse(a), parse(b)) {
        (Some(x), Some(y)) => (x, y),
        _ => return Err(None),
    };
    if ra.len() != rb.len() {
        return Err(Some(format!("row count differs: {} vs {}", ra.len(), rb.len())));
    }
    for (i, (x, y)) in ra.iter().zip(&rb).enumerate() {
        if x.len() != y.len() {
            return Err(Some(format!("row {} has {} cells, expected {}", i + 1, y.len(), x.len())));
        }
        for (j, (p, q)) in x.iter().zip(y.iter()).enumerate() {
            if !cells_match(p, q, eps) {
                return Err(Some(format!("cell at row {}, column {} differs: {p:?} vs {q:?}", i + 1, j + 1)));
            }
        }
    }
    Ok(())
}

fn cells_match(p: &str, q: &str, eps: f64) -> bool {
    if p == q {
        return true;
    }
    match (p.trim().parse::<f64>(), q.trim().parse::<f64>()) {
        (Ok(x), Ok(y)) if x.is_finite() && y.is_finite() => (x - y).abs() <= eps * x.abs().max(y.abs()),
        _ => false,
    }
}

/// Final verdict for one run: the scripts ran to completion and every output matched.
pub fn classify(status: &ExitStatus, report: &ComparisonReport) -> Classification {
    if matches!(status, ExitStatus::Success) && report.classification == Classification::Reproduced {
        Classification::Reproduced
    } else {
        Classification::NotReproduced
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> RelPath {
        RelPath::new(s).unwrap()
    }

    #[test]
    fn line_endings_are_normalised_by_default() {
        let path = p("r/x.txt");
        assert_eq!(compare_bytes(&path, b"a\nb\n", b"a\r\nb\r\n", &ComparisonPolicy::default()), None);
        assert!(compare_bytes(&path, b"a\nb\n", b"a\r\nb\r\n", &ComparisonPolicy::byte_exact()).is_some());
    }

    #[test]
    fn trailing_whitespace_only_when_requested() {
        let path = p("r/x.txt");
        let mut policy = ComparisonPolicy::default();
        assert!(compare_bytes(&path, b"a\n", b"a  \n\n", &policy).is_some());
        policy.normalizations.insert(Normalization::TrailingWhitespace);
        assert_eq!(compare_bytes(&path, b"a\n", b"a  \n\n", &policy), None);
    }

    #[test]
    fn detail_reports_line_and_column() {
        let d = compare_bytes(&p("x.txt"), b"abc\ndef\n", b"abc\ndxf\n", &ComparisonPolicy::byte_exact()).unwrap();
        assert_eq!(d, "first difference at line 2, column 2");
        let d = compare_bytes(&p("x.png"), &[0, 1, 2], &[0, 1, 3], &ComparisonPolicy::default()).unwrap();
        assert_eq!(d, "first difference at byte offset 2");
    }

    #[test]
    fn numeric_mode_is_cellwise() {
        let eps = ComparisonPolicy::numeric(1e-9);
        let path = p("r/t.csv");
        assert_eq!(compare_bytes(&path, b"\"a\",1.5\n", b"\"a\",1.5000000000001\n", &eps), None);
        assert!(compare_bytes(&path, b"\"a\",1.5\n", b"\"b\",1.5\n", &eps).is_some());
        assert!(compare_bytes(&p("r/t.txt"), b"1.5\n", b"1.5000000000001\n", &eps).is_some());
    }

    #[test]
    fn policy_flag_parsing() {
        assert_eq!(ComparisonPolicy::parse("byte-exact").unwrap().mode, CompareMode::ByteExact);
        assert_eq!(ComparisonPolicy::parse("numeric:1e-6").unwrap().numeric_tolerance, Some(1e-6));
        assert!(ComparisonPolicy::parse("numeric:0").is_err());
        assert!(ComparisonPolicy::parse("fuzzy").is_err());
    }

    #[test]
    fn classification_requires_success() {
        let ok =
            ComparisonReport::from_verdicts(vec![FileVerdict { path: p("a"), verdict: Verdict::Match, detail: None }]);
        assert_eq!(classify(&ExitStatus::Success, &ok), Classification::Reproduced);
        assert_eq!(classify(&ExitStatus::Timeout, &ok), Classification::NotReproduced);
        assert_eq!(classify(&ExitStatus::NonZeroExit(1), &ok), Classification::NotReproduced);
        let bad = ComparisonReport::from_verdicts(vec![
            FileVerdict { path: p("a"), verdict: Verdict::Match, detail: None },
            FileVerdict { path: p("b"), verdict: Verdict::Mismatch, detail: None },
        ]);
        assert_eq!(classify(&ExitStatus::Success, &bad), Classification::NotReproduced);
    }

    #[test]
    fn extras_never_count() {
        let r = ComparisonReport::from_verdicts(vec![
            FileVerdict { path: p("r/a"), verdict: Verdict::Match, detail: None },
            FileVerdict { path: p("r/tmp"), verdict: Verdict::ExtraIgnored, detail: None },
        ]);
        assert_eq!(r.classification, Classification::Reproduced);
    }
}
