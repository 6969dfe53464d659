//! Run records, success-rate aggregation and percentage-point comparisons.

mod chart;
pub mod records;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::Category;
use crate::error::{Error, IoContext, Result};
use crate::paths::write_file;
use crate::prompt_repair::PromptLevel;
use crate::validator::Classification;

pub use records::{append_record, read_records, recorded_keys, RecordSink, RunKey};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Workflow {
    Prompt,
    Agent,
}

impl fmt::Display for Workflow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Workflow::Prompt => "Prompt",
            Workflow::Agent => "Agent",
        })
    }
}

/// One repair run, persisted as a line of `records.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub case_id: String,
    pub error_kinds: Vec<String>,
    pub category: Category,
    pub workflow: Workflow,
    pub backend_identity: String,
    #[serde(default)]
    pub prompt_level: Option<PromptLevel>,
    pub attempts: u32,
    /// Seconds.
    pub execution_time: f64,
    pub outcome: Classification,
    /// Agent runs: what the agent wrote to `status.txt`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub status_file: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub leakage_flags: Option<usize>,
    /// Operational failure that ended the run early.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl RunRecord {
    pub fn key(&self) -> RunKey {
        RunKey {
            case_id: self.case_id.clone(),
            backend_identity: self.backend_identity.clone(),
            prompt_level: self.prompt_level,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(format!("run record {}: {m}", self.case_id)));
        if self.case_id.is_empty() || self.backend_identity.is_empty() || self.error_kinds.is_empty() {
            return bad("identifying fields must be non-empty");
        }
        if (self.workflow == Workflow::Prompt) != self.prompt_level.is_some() {
            return bad("prompt_level is set exactly for prompt runs");
        }
        if self.execution_time.is_nan() || self.execution_time < 0.0 {
            return bad("execution_time must be non-negative");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GroupKey {
    Workflow,
    Backend,
    Category,
    PromptLevel,
}

impl GroupKey {
    pub const ALL: [GroupKey; 4] = [GroupKey::Workflow, GroupKey::Backend, GroupKey::Category, GroupKey::PromptLevel];

    pub fn name(&self) -> &'static str {
        match self {
            GroupKey::Workflow => "workflow",
            GroupKey::Backend => "backend",
            GroupKey::Category => "category",
            GroupKey::PromptLevel => "prompt_level",
        }
    }

    pub fn value(&self, r: &RunRecord) -> String {
        match self {
            GroupKey::Workflow => r.workflow.to_string(),
            GroupKey::Backend => r.backend_identity.clone(),
            GroupKey::Category => r.category.to_string(),
            GroupKey::PromptLevel => r.prompt_level.map(|l| l.to_string()).unwrap_or_else(|| "-".into()),
        }
    }

    /// Parses a comma-separated key list such as `backend,category`.
    pub fn parse_list(s: &str) -> Result<Vec<GroupKey>> {
        let keys: Vec<GroupKey> =
            s.split(',').map(str::trim).filter(|k| !k.is_empty()).map(str::parse).collect::<Result<_>>()?;
        let unique: BTreeSet<_> = keys.iter().collect();
        if unique.len() != keys.len() {
            return Err(Error::InvalidGroupKey(format!("repeated key in {s:?}")));
        }
        Ok(keys)
    }
}

impl FromStr for GroupKey {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "workflow" => Ok(GroupKey::Workflow),
            "backend" | "backend_identity" | "model" | "agent" => Ok(GroupKey::Backend),
            "category" => Ok(GroupKey::Category),
            "prompt_level" | "level" => Ok(GroupKey::PromptLevel),
            _ => Err(Error::InvalidGroupKey(s.to_string())),
        }
    }
}

/// Percentage in tenths of a point, rounded half away from zero.
pub fn rate_tenths(n_reproduced: u64, n_total: u64) -> i64 {
    assert!(n_total > 0 && n_reproduced <= n_total);
    ((2000 * n_reproduced + n_total) / (2 * n_total)) as i64
}

/// `100*(r_new/n_new - r_base/n_base)` in tenths of a point, from exact fractions.
pub fn delta_tenths(r_base: u64, n_base: u64, r_new: u64, n_new: u64) -> i64 {
    let num = 1000 * (r_new as i128 * n_base as i128 - r_base as i128 * n_new as i128);
    let den = n_base as i128 * n_new as i128;
    let mag = (2 * num.abs() + den) / (2 * den);
    (num.signum() * mag) as i64
}

pub fn format_tenths(t: i64) -> String {
    let sign = if t < 0 { "-" } else { "" };
    format!("{sign}{}.{}", t.abs() / 10, t.abs() % 10)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuccessRow {
    pub key: Vec<String>,
    pub n_total: u64,
    pub n_reproduced: u64,
}

impl SuccessRow {
    pub fn rate_tenths(&self) -> i64 {
        rate_tenths(self.n_reproduced, self.n_total)
    }

    pub fn rate_percent(&self) -> f64 {
        self.rate_tenths() as f64 / 10.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuccessTable {
    pub name: String,
    pub group_by: Vec<GroupKey>,
    /// Sorted by key.
    pub rows: Vec<SuccessRow>,
}

impl SuccessTable {
    pub fn row(&self, key: &[&str]) -> Option<&SuccessRow> {
        self.rows.iter().find(|r| r.key.iter().map(String::as_str).eq(key.iter().copied()))
    }
}

pub fn aggregate(records: &[RunRecord], group_by: &[GroupKey]) -> Result<SuccessTable> {
    if records.is_empty() {
        return Err(Error::EmptyRecordSet);
    }
    let mut counts: BTreeMap<Vec<String>, (u64, u64)> = BTreeMap::new();
    for r in records {
        let key = group_by.iter().map(|k| k.value(r)).collect();
        let c = counts.entry(key).or_default();
        c.0 += 1;
        if r.outcome == Classification::Reproduced {
            c.1 += 1;
        }
    }
    let name = if group_by.is_empty() {
        "overall".to_string()
    } else {
        group_by.iter().map(GroupKey::name).collect::<Vec<_>>().join("_")
    };
    Ok(SuccessTable {
        name,
        group_by: group_by.to_vec(),
        rows: counts
            .into_iter()
            .map(|(key, (n_total, n_reproduced))| SuccessRow { key, n_total, n_reproduced })
            .collect(),
    })
}

/// Record selector of the form `key=value,key=value`; all pairs must match.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RecordFilter(pub Vec<(GroupKey, String)>);

impl RecordFilter {
    pub fn parse(s: &str) -> Result<Self> {
        let mut out = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| Error::InvalidGroupKey(format!("filter term {part:?} is not key=value")))?;
            out.push((k.trim().parse()?, v.trim().to_string()));
        }
        Ok(RecordFilter(out))
    }

    pub fn matches(&self, r: &RunRecord) -> bool {
        self.0.iter().all(|(k, v)| &k.value(r) == v)
    }

    pub fn apply(&self, records: &[RunRecord]) -> Vec<RunRecord> {
        records.iter().filter(|r| self.matches(r)).cloned().collect()
    }
}

impl fmt::Display for RecordFilter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|(k, v)| format!("{}={v}", k.name())).collect();
        f.write_str(&parts.join(","))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeltaRow {
    pub key: Vec<String>,
    pub base_rate_tenths: i64,
    pub new_rate_tenths: i64,
    pub delta_tenths: i64,
}

impl DeltaRow {
    pub fn delta_pp(&self) -> f64 {
        self.delta_tenths as f64 / 10.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeltaTable {
    pub name: String,
    pub join_keys: Vec<GroupKey>,
    pub rows: Vec<DeltaRow>,
}

fn project_rows(table: &SuccessTable, join_keys: &[GroupKey]) -> Result<BTreeMap<Vec<String>, SuccessRow>> {
    let idx: Vec<usize> = join_keys
        .iter()
        .map(|k| {
            table
                .group_by
                .iter()
                .position(|g| g == k)
                .ok_or_else(|| Error::KeyMismatch(format!("table {} is not grouped by {}", table.name, k.name())))
        })
        .collect::<Result<_>>()?;
    let mut out = BTreeMap::new();
    for row in &table.rows {
        let key: Vec<String> = idx.iter().map(|&i| row.key[i].clone()).collect();
        if out.insert(key.clone(), row.clone()).is_some() {
            return Err(Error::KeyMismatch(format!(
                "table {} has several rows for {}; filter it first",
                table.name,
                key.join("/")
            )));
        }
    }
    Ok(out)
}

/// Percentage-point change from `base` to `new`, row by row over `join_keys`.
pub fn improvement(base: &SuccessTable, new: &SuccessTable, join_keys: &[GroupKey]) -> Result<DeltaTable> {
    let b = project_rows(base, join_keys)?;
    let n = project_rows(new, join_keys)?;
    let mut rows = Vec::new();
    for (key, nr) in &n {
        let br = b
            .get(key)
            .ok_or_else(|| Error::KeyMismatch(format!("{} is absent from table {}", key.join("/"), base.name)))?;
        rows.push(DeltaRow {
            key: key.clone(),
            base_rate_tenths: br.rate_tenths(),
            new_rate_tenths: nr.rate_tenths(),
            delta_tenths: delta_tenths(br.n_reproduced, br.n_total, nr.n_reproduced, nr.n_total),
        });
    }
    Ok(DeltaTable { name: format!("{} vs {}", new.name, base.name), join_keys: join_keys.to_vec(), rows })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ReportFormat {
    Csv,
    Markdown,
    Png,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(ReportFormat::Csv),
            "md" | "markdown" => Ok(ReportFormat::Markdown),
            "png" => Ok(ReportFormat::Png),
            _ => Err(Error::UnsupportedFormat(s.to_string())),
        }
    }
}

const CSV_HEADER: [&str; 8] =
    ["table", "workflow", "backend", "category", "prompt_level", "n_total", "n_reproduced", "rate_percent"];

fn key_cells(group_by: &[GroupKey], key: &[String]) -> [String; 4] {
    let mut cells: [String; 4] = Default::default();
    for (k, v) in group_by.iter().zip(key) {
        let i = GroupKey::ALL.iter().position(|g| g == k).expect("known key");
        cells[i] = v.clone();
    }
    cells
}

/// Writes `report.csv`, `deltas.csv`, `report.md` and `figures/*.png` as requested.
pub fn emit_report(
    tables: &[SuccessTable],
    deltas: &[DeltaTable],
    formats: &[ReportFormat],
    out_dir: &Path,
) -> Result<Vec<PathBuf>> {
    if tables.is_empty() {
        return Err(Error::EmptyRecordSet);
    }
    std::fs::create_dir_all(out_dir).at(out_dir)?;
    let mut written = Vec::new();
    let formats: BTreeSet<_> = formats.iter().copied().collect();
    if formats.contains(&ReportFormat::Csv) {
        let path = out_dir.join("report.csv");
        write_file(&path, tables_csv(tables)?)?;
        written.push(path);
        if !deltas.is_empty() {
            let path = out_dir.join("deltas.csv");
            write_file(&path, deltas_csv(deltas)?)?;
            written.push(path);
        }
    }
    if formats.contains(&ReportFormat::Markdown) {
        let path = out_dir.join("report.md");
        write_file(&path, markdown(tables, deltas))?;
        written.push(path);
    }
    if formats.contains(&ReportFormat::Png) {
        let dir = out_dir.join("figures");
        std::fs::create_dir_all(&dir).at(&dir)?;
        for (i, t) in tables.iter().enumerate() {
            let path = dir.join(format!("{:02}_{}.png", i + 1, sanitize(&t.name)));
            chart::bar_chart(t).save(&path).map_err(|e| Error::io(&path, std::io::Error::other(e)))?;
            written.push(path);
        }
    }
    Ok(written)
}

fn sanitize(s: &str) -> String {
    s.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect()
}

fn csv_error(e: csv::Error) -> Error {
    Error::io("report.csv", std::io::Error::other(e))
}

pub fn tables_csv(tables: &[SuccessTable]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER).map_err(csv_error)?;
    for t in tables {
        for row in &t.rows {
            let [wf, be, cat, lvl] = key_cells(&t.group_by, &row.key);
            w.write_record([
                t.name.clone(),
                wf,
                be,
                cat,
                lvl,
                row.n_total.to_string(),
                row.n_reproduced.to_string(),
                format_tenths(row.rate_tenths()),
            ])
            .map_err(csv_error)?;
        }
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| csv_error(e.into_error().into()))?).expect("csv output is UTF-8"))
}

/// Parses `report.csv` back into tables. Group keys are the non-empty key columns of each table.
pub fn parse_tables_csv(text: &str) -> Result<Vec<SuccessTable>> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let mut tables: Vec<SuccessTable> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_error)?;
        let field = |i: usize| rec.get(i).unwrap_or("").to_string();
        let parse_n = |i: usize| {
            field(i).parse::<u64>().map_err(|_| Error::malformed("report.csv", format!("bad count {:?}", field(i))))
        };
        let name = field(0);
        let group_by: Vec<GroupKey> =
            GroupKey::ALL.iter().enumerate().filter(|(i, _)| !field(i + 1).is_empty()).map(|(_, k)| *k).collect();
        let key: Vec<String> = (1..5).map(field).filter(|v| !v.is_empty()).collect();
        let row = SuccessRow { key, n_total: parse_n(5)?, n_reproduced: parse_n(6)? };
        match tables.iter_mut().find(|t| t.name == name) {
            Some(t) => t.rows.push(row),
            None => tables.push(SuccessTable { name, group_by, rows: vec![row] }),
        }
    }
    Ok(tables)
}

pub fn deltas_csv(deltas: &[DeltaTable]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["comparison", "key", "base_rate_percent", "new_rate_percent", "delta_pp"]).map_err(csv_error)?;
    for d in deltas {
        for row in &d.rows {
            w.write_record([
                d.name.clone(),
                row.key.join("/"),
                format_tenths(row.base_rate_tenths),
                format_tenths(row.new_rate_tenths),
                format_tenths(row.delta_tenths),
            ])
            .map_err(csv_error)?;
        }
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| csv_error(e.into_error().into()))?).expect("csv output is UTF-8"))
}

pub fn markdown(tables: &[SuccessTable], deltas: &[DeltaTable]) -> String {
    let mut out = String::from("# Repair success report\n");
    for t in tables {
        out.push_str(&format!("\n## Success rates: {}\n\n", t.name));
        let mut header: Vec<&str> = t.group_by.iter().map(GroupKey::name).collect();
        header.extend(["n_total", "n_reproduced", "rate_percent"]);
        out.push_str(&format!("| {} |\n", header.join(" | ")));
        out.push_str(&format!("|{}\n", " --- |".repeat(header.len())));
        for row in &t.rows {
            let mut cells = row.key.clone();
            cells.extend([row.n_total.to_string(), row.n_reproduced.to_string(), format_tenths(row.rate_tenths())]);
            out.push_str(&format!("| {} |\n", cells.join(" | ")));
        }
    }
    for d in deltas {
        out.push_str(&format!("\n## Percentage-point change: {}\n\n", d.name));
        let mut header: Vec<&str> = d.join_keys.iter().map(GroupKey::name).collect();
        header.extend(["base_rate_percent", "new_rate_percent", "delta_pp"]);
        out.push_str(&format!("| {} |\n", header.join(" | ")));
        out.push_str(&format!("|{}\n", " --- |".repeat(header.len())));
        for row in &d.rows {
            let mut cells = row.key.clone();
            let sign = if row.delta_tenths > 0 { "+" } else { "" };
            cells.extend([
                format_tenths(row.base_rate_tenths),
                format_tenths(row.new_rate_tenths),
                format!("{sign}{}", format_tenths(row.delta_tenths)),
            ]);
            out.push_str(&format!("| {} |\n", cells.join(" | ")));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn record(case: &str, backend: &str, cat: Category, ok: bool) -> RunRecord {
        RunRecord {
            case_id: case.into(),
            error_kinds: vec!["PathCorruption".into()],
            category: cat,
            workflow: Workflow::Agent,
            backend_identity: backend.into(),
            prompt_level: None,
            attempts: 0,
            execution_time: 1.0,
            outcome: if ok { Classification::Reproduced } else { Classification::NotReproduced },
            status_file: None,
            leakage_flags: None,
            error: None,
        }
    }

    fn set(backend: &str, cat: Category, ok: u64, n: u64) -> Vec<RunRecord> {
        (0..n).map(|i| record(&format!("{backend}-{cat}-{i}"), backend, cat, i < ok)).collect()
    }

    /// Independent floating-point oracle for the rounding rule.
    fn oracle_tenths(x: f64) -> i64 {
        (x * 10.0).round() as i64
    }

    #[test]
    fn rates_match_float_oracle() {
        for n in 1..=120u64 {
            for r in 0..=n {
                let exact = 100.0 * r as f64 / n as f64;
                let t = rate_tenths(r, n);
                if ((exact * 10.0).fract() - 0.5).abs() > 1e-6 {
                    assert_eq!(t, oracle_tenths(exact), "{r}/{n}");
                }
            }
        }
        assert_eq!(rate_tenths(22, 27), 815);
        assert_eq!(rate_tenths(1, 8), 125);
        assert_eq!(rate_tenths(1, 16), 63);
    }

    #[test]
    fn deltas_round_half_away_from_zero() {
        assert_eq!(delta_tenths(1, 16, 0, 1), -63);
        assert_eq!(delta_tenths(0, 1, 1, 16), 63);
        assert_eq!(delta_tenths(3, 7, 3, 7), 0);
        assert_eq!(format_tenths(-63), "-6.3");
        assert_eq!(format_tenths(5), "0.5");
    }

    #[test]
    fn all_reproduced_is_one_hundred() {
        let t = aggregate(&set("x", Category::B, 4, 4), &[GroupKey::Category]).unwrap();
        assert_eq!(format_tenths(t.rows[0].rate_tenths()), "100.0");
    }

    #[test]
    fn errors() {
        assert!(matches!(aggregate(&[], &[]), Err(Error::EmptyRecordSet)));
        assert!(matches!("colour".parse::<GroupKey>(), Err(Error::InvalidGroupKey(_))));
        let a = aggregate(&set("x", Category::A, 1, 2), &[GroupKey::Category]).unwrap();
        let b = aggregate(&set("x", Category::B, 1, 2), &[GroupKey::Category]).unwrap();
        assert!(matches!(improvement(&a, &b, &[GroupKey::Category]), Err(Error::KeyMismatch(_))));
        assert!(matches!(improvement(&a, &b, &[GroupKey::Backend]), Err(Error::KeyMismatch(_))));
        assert!(matches!("pdf".parse::<ReportFormat>(), Err(Error::UnsupportedFormat(_))));
    }

    #[test]
    fn identical_tables_have_zero_delta() {
        let recs: Vec<_> = [set("x", Category::A, 3, 7), set("x", Category::C, 5, 9)].concat();
        let t = aggregate(&recs, &[GroupKey::Category]).unwrap();
        let d = improvement(&t, &t, &[GroupKey::Category]).unwrap();
        assert!(d.rows.iter().all(|r| r.delta_tenths == 0));
    }

    #[test]
    fn csv_round_trip_and_markdown_sections() {
        let recs: Vec<_> = [set("a", Category::A, 53, 65), set("b", Category::A, 9, 17)].concat();
        let t1 = aggregate(&recs, &[GroupKey::Backend, GroupKey::Category]).unwrap();
        let t2 = aggregate(&recs, &[]).unwrap();
        let parsed = parse_tables_csv(&tables_csv(&[t1.clone(), t2.clone()]).unwrap()).unwrap();
        assert_eq!(parsed, vec![t1.clone(), t2.clone()]);
        let ta = aggregate(&RecordFilter::parse("backend=a").unwrap().apply(&recs), &[GroupKey::Category]).unwrap();
        let tb = aggregate(&RecordFilter::parse("backend=b").unwrap().apply(&recs), &[GroupKey::Category]).unwrap();
        let d = improvement(&tb, &ta, &[GroupKey::Category]).unwrap();
        assert_eq!(d.rows[0].delta_tenths, 286);
        let md = markdown(&[t1, t2], &[d]);
        assert_eq!(md.matches("\n## Success rates: ").count(), 2);
        assert!(md.contains("| A | 52.9 | 81.5 | +28.6 |"));
    }

    #[test]
    fn emits_requested_files() {
        let dir = tempfile::tempdir().unwrap();
        let t = aggregate(&set("x", Category::A, 1, 3), &[GroupKey::Category]).unwrap();
        let files = emit_report(&[t], &[], &[ReportFormat::Csv, ReportFormat::Markdown, ReportFormat::Png], dir.path())
            .unwrap();
        let names: Vec<_> =
            files.iter().map(|p| p.strip_prefix(dir.path()).unwrap().to_string_lossy().into_owned()).collect();
        assert_eq!(names, ["report.csv", "report.md", "figures/01_category.png"]);
        assert!(matches!(emit_report(&[], &[], &[ReportFormat::Csv], dir.path()), Err(Error::EmptyRecordSet)));
    }
}
