//! Candidate edits for each mutation kind.
//!
//! Every candidate is a line-range replacement plus the fully resolved
//! parameters that identify it. Callers filter candidates by the parameters
//! they pin and pick one with the seeded generator.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::OnceLock;

use regex::Regex;

use super::rsyntax::{self, balanced, idents, indent, is_argument_name, is_definition, is_member, KEYWORDS};
use super::OperatorKind;

#[derive(Debug, Clone)]
pub struct Candidate {
    /// 0-based first line replaced.
    pub start: usize,
    /// Exclusive end line.
    pub end: usize,
    pub replacement: String,
    pub params: BTreeMap<String, String>,
}

/// Suffixes tried by path corruption when none is pinned.
pub const PATH_SUFFIXES: &[&str] = &["_missing", "_old", "_v2"];

macro_rules! re {
    ($name:ident, $pat:expr) => {
        fn $name() -> &'static Regex {
            static R: OnceLock<Regex> = OnceLock::new();
            R.get_or_init(|| Regex::new($pat).expect("static regex"))
        }
    };
}

re!(
    read_call_re,
    r"\b(read\.csv2?|read\.table|read\.delim|readRDS|readLines|load|source|scan|file|fread|read_csv|read_excel)\s*\("
);
re!(path_re, r"^[A-Za-z0-9_./-]*[A-Za-z0-9_-]\.(csv|tsv|txt|rds|RDS|rda|RData|R|r|json|xlsx|xls|dta|sav|dat)$");
re!(string_re, r#""([^"\\\n]*)"|'([^'\\\n]*)'"#);
re!(
    library_re,
    r#"^\s*(?:suppressPackageStartupMessages\(\s*)?(library|require)\s*\(\s*["']?([A-Za-z][A-Za-z0-9.]*)["']?\s*\)\s*\)?\s*;?\s*(?:#.*)?$"#
);
re!(assign_re, r"^\s*([A-Za-z.][A-Za-z0-9._]*)\s*<-\s*\S");
re!(function_re, r"^\s*([A-Za-z.][A-Za-z0-9._]*)\s*(?:<-|=)\s*function\s*\(.*\)\s*\{\s*$");
re!(block_re, r"^\s*(for|while|if)\s*\(.*\)\s*\{\s*$");
re!(reader_re, r"\b(read\.csv|read\.table|read\.delim|readLines)\s*\(");
re!(header_arg_re, r"\bheader\s*=");
re!(sep_arg_re, r"\bsep\s*=");

fn params(pairs: &[(&str, String)]) -> BTreeMap<String, String> {
    pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
}

fn line_body(raw: &str) -> (&str, &str) {
    match raw.strip_suffix('\n') {
        Some(b) => (b, "\n"),
        None => (raw, ""),
    }
}

pub fn candidates(kind: OperatorKind, text: &str) -> Vec<Candidate> {
    let raw = rsyntax::lines(text);
    let masked = rsyntax::mask(text);
    match kind {
        OperatorKind::PathCorruption => path_corruption(&raw, &masked),
        OperatorKind::PackageRemoval => package_lines(&raw, &masked)
            .into_iter()
            .map(|(i, pkg)| Candidate {
                start: i,
                end: i + 1,
                replacement: String::new(),
                params: params(&[("line", (i + 1).to_string()), ("package", pkg)]),
            })
            .collect(),
        OperatorKind::PackageNameCorruption => package_name_corruption(&raw, &masked),
        OperatorKind::IdentifierTypo => identifier_typo(&raw, &masked),
        OperatorKind::SyntaxBreak => syntax_break(&raw, &masked),
        OperatorKind::VariableRemoval => variable_removal(&masked),
        OperatorKind::FunctionStub => function_stub(&raw, &masked),
        OperatorKind::CodeBlockDeletion => block_deletion(&masked),
        OperatorKind::FileReadCorruption => file_read_corruption(&raw, &masked),
    }
}

fn path_corruption(raw: &[&str], masked: &[String]) -> Vec<Candidate> {
    let mut out = Vec::new();
    for (i, (line, m)) in raw.iter().zip(masked).enumerate() {
        if !read_call_re().is_match(m) {
            continue;
        }
        for cap in string_re().captures_iter(line) {
            let whole = cap.get(0).expect("match");
            if m.as_bytes().get(whole.start()) != line.as_bytes().get(whole.start()) {
                continue;
            }
            let lit = cap.get(1).or(cap.get(2)).expect("one alternative").as_str();
            if !path_re().is_match(lit) {
                continue;
            }
            let dot = lit.rfind('.').expect("path regex requires an extension");
            for suffix in PATH_SUFFIXES {
                let corrupted = format!("{}{suffix}{}", &lit[..dot], &lit[dot..]);
                let mut new_line = String::with_capacity(line.len() + suffix.len());
                new_line.push_str(&line[..whole.start() + 1]);
                new_line.push_str(&corrupted);
                new_line.push_str(&line[whole.end() - 1..]);
                out.push(Candidate {
                    start: i,
                    end: i + 1,
                    replacement: new_line,
                    params: params(&[
                        ("line", (i + 1).to_string()),
                        ("literal", lit.to_string()),
                        ("suffix", suffix.to_string()),
                    ]),
                });
            }
        }
    }
    out
}

fn package_lines(raw: &[&str], masked: &[String]) -> Vec<(usize, String)> {
    raw.iter()
        .zip(masked)
        .enumerate()
        .filter_map(|(i, (line, m))| {
            let t = m.trim_start();
            if !(t.starts_with("library")
                || t.starts_with("require")
                || t.starts_with("suppressPackageStartupMessages"))
            {
                return None;
            }
            library_re().captures(line_body(line).0).map(|c| (i, c[2].to_string()))
        })
        .collect()
}

/// Plausible misspellings of a package name.
pub fn corrupt_package(name: &str) -> Vec<String> {
    let chars: Vec<char> = name.chars().collect();
    let mut out = Vec::new();
    if chars.len() >= 3 {
        out.push(chars[..chars.len() - 1].iter().collect());
    }
    if chars.len() >= 2 && chars[0] != chars[1] {
        let mut c = chars.clone();
        c.swap(0, 1);
        if c[0].is_ascii_alphabetic() {
            out.push(c.into_iter().collect());
        }
    }
    let mut doubled = chars.clone();
    doubled.push(*chars.last().expect("non-empty name"));
    out.push(doubled.into_iter().collect());
    out.push(format!("{name}2"));
    let mut seen = BTreeSet::new();
    out.retain(|s| s != name && seen.insert(s.clone()));
    out
}

fn package_name_corruption(raw: &[&str], masked: &[String]) -> Vec<Candidate> {
    let mut out = Vec::new();
    for (i, pkg) in package_lines(raw, masked) {
        let line = raw[i];
        let open = line.find('(').expect("library call has a paren");
        let rel = line[open..].find(pkg.as_str()).expect("package inside parens");
        let at = open + rel;
        for replacement in corrupt_package(&pkg) {
            let new_line = format!("{}{replacement}{}", &line[..at], &line[at + pkg.len()..]);
            out.push(Candidate {
                start: i,
                end: i + 1,
                replacement: new_line,
                params: params(&[
                    ("line", (i + 1).to_string()),
                    ("package", pkg.clone()),
                    ("replacement", replacement),
                ]),
            });
        }
    }
    out
}

fn valid_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() => {}
        Some('.') => {
            if s.chars().nth(1).is_some_and(|c| c.is_ascii_digit()) {
                return false;
            }
        }
        _ => return false,
    }
    s.chars().all(rsyntax::is_ident_char) && !KEYWORDS.contains(&s)
}

/// Typos of an identifier: a swap of two middle characters, and a dropped middle character.
pub fn typos(name: &str) -> Vec<String> {
    let chars: Vec<char> = name.chars().collect();
    let n = chars.len();
    let mut out = Vec::new();
    let mid = n / 2;
    if mid >= 1 && mid < n && chars[mid - 1] != chars[mid] {
        let mut c = chars.clone();
        c.swap(mid - 1, mid);
        out.push(c.into_iter().collect::<String>());
    }
    if n >= 3 {
        let mut c = chars.clone();
        c.remove(mid);
        out.push(c.into_iter().collect::<String>());
    }
    out.retain(|t| t != name && valid_identifier(t));
    out.dedup();
    out
}

fn identifier_typo(raw: &[&str], masked: &[String]) -> Vec<Candidate> {
    let mut defined = BTreeSet::new();
    let mut all = BTreeSet::new();
    for m in masked {
        for id in idents(m) {
            if is_definition(m, &id) {
                defined.insert(id.name.clone());
            }
            all.insert(id.name);
        }
    }
    let mut out = Vec::new();
    for (i, m) in masked.iter().enumerate() {
        for id in idents(m) {
            if id.name.len() < 3
                || KEYWORDS.contains(&id.name.as_str())
                || is_definition(m, &id)
                || is_argument_name(m, &id)
                || is_member(m, &id)
            {
                continue;
            }
            let called = rsyntax::after(m, &id).starts_with('(');
            if !(defined.contains(&id.name) || called) || id.name == "function" {
                continue;
            }
            let line = raw[i];
            for typo in typos(&id.name) {
                if all.contains(&typo) {
                    continue;
                }
                let new_line = format!("{}{typo}{}", &line[..id.col], &line[id.col + id.name.len()..]);
                out.push(Candidate {
                    start: i,
                    end: i + 1,
                    replacement: new_line,
                    params: params(&[
                        ("line", (i + 1).to_string()),
                        ("column", (id.col + 1).to_string()),
                        ("identifier", id.name.clone()),
                        ("typo", typo),
                    ]),
                });
            }
        }
    }
    out
}

fn syntax_break(raw: &[&str], masked: &[String]) -> Vec<Candidate> {
    let mut out = Vec::new();
    for (i, (line, m)) in raw.iter().zip(masked).enumerate() {
        let code = m.trim_end();
        if code.is_empty() || !balanced(code) {
            continue;
        }
        if code.ends_with(')') && code.contains('(') {
            let at = code.len() - 1;
            out.push(Candidate {
                start: i,
                end: i + 1,
                replacement: format!("{}{}", &line[..at], &line[at + 1..]),
                params: params(&[
                    ("line", (i + 1).to_string()),
                    ("variant", "drop_paren".into()),
                    ("column", (at + 1).to_string()),
                ]),
            });
        }
        if let Some(at) = separable_comma(code) {
            out.push(Candidate {
                start: i,
                end: i + 1,
                replacement: format!("{}{}", &line[..at], &line[at + 1..]),
                params: params(&[
                    ("line", (i + 1).to_string()),
                    ("variant", "drop_comma".into()),
                    ("column", (at + 1).to_string()),
                ]),
            });
        }
    }
    out
}

/// First argument comma whose removal leaves two adjacent operands.
fn separable_comma(code: &str) -> Option<usize> {
    let b = code.as_bytes();
    let mut depth = 0i32;
    for (i, &c) in b.iter().enumerate() {
        match c {
            b'(' | b'[' => depth += 1,
            b')' | b']' => depth -= 1,
            b',' if depth > 0 => {
                let prev = code[..i].trim_end().chars().last();
                let next = code[i + 1..].trim_start().chars().next();
                let operand_end = prev.is_some_and(|p| rsyntax::is_ident_char(p) || p == '"' || p == '\'' || p == ')');
                let operand_start =
                    next.is_some_and(|n| n.is_ascii_alphanumeric() || n == '.' || n == '"' || n == '\'');
                if operand_end && operand_start && code[i + 1..].starts_with(' ') {
                    return Some(i);
                }
            }
            _ => {}
        }
    }
    None
}

fn statement_complete(code: &str) -> bool {
    let t = code.trim_end();
    balanced(t) && !t.ends_with(['+', '-', '*', '/', ',', '|', '&', '(', '<', '>', '=', '%', '~'])
}

fn variable_removal(masked: &[String]) -> Vec<Candidate> {
    let mut out = Vec::new();
    for (i, m) in masked.iter().enumerate() {
        let Some(cap) = assign_re().captures(m) else { continue };
        if !statement_complete(m) || m.contains("function") {
            continue;
        }
        let name = cap[1].to_string();
        let later = masked[i + 1..].iter().find_map(|l| {
            let hits: Vec<_> = idents(l)
                .into_iter()
                .filter(|id| id.name == name && !is_member(l, id) && !is_argument_name(l, id))
                .collect();
            if hits.is_empty() {
                None
            } else {
                Some(hits.iter().any(|id| !is_definition(l, id)))
            }
        });
        if later == Some(true) {
            out.push(Candidate {
                start: i,
                end: i + 1,
                replacement: String::new(),
                params: params(&[("line", (i + 1).to_string()), ("variable", name)]),
            });
        }
    }
    out
}

/// Line index where the statement opened by a `{` on `start` ends, following `} else {` chains.
fn block_end(masked: &[String], start: usize) -> Option<usize> {
    let mut depth = 0i32;
    for (i, m) in masked.iter().enumerate().skip(start) {
        let [_, _, d] = rsyntax::depth_delta(m);
        depth += d;
        if depth <= 0 {
            return (depth == 0 && i > start).then_some(i);
        }
    }
    None
}

pub const STUB_BODY: &str = "stop(\"Not implemented\")";

fn function_stub(raw: &[&str], masked: &[String]) -> Vec<Candidate> {
    let mut out = Vec::new();
    for (i, m) in masked.iter().enumerate() {
        let Some(cap) = function_re().captures(line_body(m).0) else { continue };
        let Some(close) = block_end(masked, i) else { continue };
        if masked[close].trim() != "}" || close <= i + 1 {
            continue;
        }
        if close == i + 2 && raw[i + 1].trim() == STUB_BODY {
            continue;
        }
        let pad = indent(raw[i]);
        let replacement = format!("{}{pad}  {STUB_BODY}\n{}", raw[i], raw[close]);
        out.push(Candidate {
            start: i,
            end: close + 1,
            replacement,
            params: params(&[
                ("function", cap[1].to_string()),
                ("line", (i + 1).to_string()),
                ("end_line", (close + 1).to_string()),
            ]),
        });
    }
    out
}

fn block_deletion(masked: &[String]) -> Vec<Candidate> {
    let mut out = Vec::new();
    for (i, m) in masked.iter().enumerate() {
        let Some(cap) = block_re().captures(line_body(m).0) else { continue };
        let Some(close) = block_end(masked, i) else { continue };
        if masked[close].trim() != "}" || close <= i + 1 {
            continue;
        }
        out.push(Candidate {
            start: i,
            end: close + 1,
            replacement: String::new(),
            params: params(&[
                ("construct", cap[1].to_string()),
                ("line", (i + 1).to_string()),
                ("end_line", (close + 1).to_string()),
            ]),
        });
    }
    out
}

fn file_read_corruption(raw: &[&str], masked: &[String]) -> Vec<Candidate> {
    let mut out = Vec::new();
    for (i, (line, m)) in raw.iter().zip(masked).enumerate() {
        for cap in reader_re().captures_iter(m) {
            let func = cap[1].to_string();
            let open = cap.get(0).expect("match").end() - 1;
            let Some(close) = matching_paren(m, open) else { continue };
            let args = &m[open + 1..close];
            let mut variants: Vec<(&str, &str)> = Vec::new();
            if func == "readLines" {
                if !args.contains("n =") && !args.contains("n=") {
                    variants.push(("n", ", n = 1"));
                }
            } else {
                if !header_arg_re().is_match(args) {
                    variants.push(("header", ", header = FALSE"));
                }
                if !sep_arg_re().is_match(args) {
                    variants.push(("sep", ", sep = \";\""));
                }
            }
            for (name, insert) in variants {
                let new_line = format!("{}{insert}{}", &line[..close], &line[close..]);
                out.push(Candidate {
                    start: i,
                    end: i + 1,
                    replacement: new_line,
                    params: params(&[
                        ("line", (i + 1).to_string()),
                        ("function", func.clone()),
                        ("variant", name.to_string()),
                    ]),
                });
            }
        }
    }
    out
}

fn matching_paren(masked: &str, open: usize) -> Option<usize> {
    let mut depth = 0;
    for (i, c) in masked.char_indices().skip_while(|(i, _)| *i < open) {
        match c {
            '(' => depth += 1,
            ')' => {
                depth -= 1;
                if depth == 0 {
                    return Some(i);
                }
            }
            _ => {}
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn apply(text: &str, c: &Candidate) -> String {
        let lines = rsyntax::lines(text);
        let mut out: String = lines[..c.start].concat();
        out.push_str(&c.replacement);
        out.push_str(&lines[c.end..].concat());
        out
    }

    #[test]
    fn path_corruption_inserts_suffix_before_extension() {
        let text = "x <- read.csv(\"data/x.csv\")\n# read.csv(\"data/y.csv\")\nwrite.csv(x, \"out/x.csv\")\n";
        let c = candidates(OperatorKind::PathCorruption, text);
        assert_eq!(c.len(), PATH_SUFFIXES.len());
        let missing = c.iter().find(|c| c.params["suffix"] == "_missing").unwrap();
        assert_eq!(missing.replacement, "x <- read.csv(\"data/x_missing.csv\")\n");
    }

    #[test]
    fn package_sites() {
        let text = "library(tools)\nsuppressPackageStartupMessages(library(\"stats\"))\nx <- 1 # library(no)\n";
        let rm = candidates(OperatorKind::PackageRemoval, text);
        let pkgs: Vec<&str> = rm.iter().map(|c| c.params["package"].as_str()).collect();
        assert_eq!(pkgs, ["tools", "stats"]);
        let bad = candidates(OperatorKind::PackageNameCorruption, text);
        assert!(bad.iter().any(|c| c.replacement == "library(tool)\n"));
        assert!(bad.iter().all(|c| c.params["replacement"] != c.params["package"]));
        assert!(candidates(OperatorKind::PackageRemoval, "x <- 1\n").is_empty());
    }

    #[test]
    fn stub_keeps_signature() {
        let text = "linterp <- function(x, y) {\n  a <- 1\n  return(a)\n}\nz <- 2\n";
        let c = candidates(OperatorKind::FunctionStub, text);
        assert_eq!(c.len(), 1);
        assert_eq!(apply(text, &c[0]), "linterp <- function(x, y) {\n  stop(\"Not implemented\")\n}\nz <- 2\n");
        let again = apply(text, &c[0]);
        assert!(candidates(OperatorKind::FunctionStub, &again).is_empty());
    }

    #[test]
    fn block_deletion_covers_else_chain() {
        let text = "if (a > 1) {\n  b <- 1\n} else {\n  b <- 2\n}\nprint(b)\n";
        let c = candidates(OperatorKind::CodeBlockDeletion, text);
        assert_eq!(c.len(), 1);
        assert_eq!((c[0].start, c[0].end), (0, 5));
    }

    #[test]
    fn variable_removal_requires_later_use() {
        let text = "a <- 1\nb <- 2\nb <- 3\nprint(a + b)\nc <- f(\n  1)\n";
        let c = candidates(OperatorKind::VariableRemoval, text);
        let vars: Vec<&str> = c.iter().map(|c| c.params["variable"].as_str()).collect();
        assert_eq!(vars, ["a", "b"]);
        assert_eq!(c[1].params["line"], "3");
    }

    #[test]
    fn typo_skips_members_and_argument_names() {
        let text = "total <- 1\ndf$total <- f(total = total)\n";
        let c = candidates(OperatorKind::IdentifierTypo, text);
        assert!(c.iter().all(|c| c.params["line"] == "2"));
        let cols: BTreeSet<&str> = c.iter().map(|c| c.params["column"].as_str()).collect();
        assert!(cols.contains("23"));
        assert!(!cols.contains("4"));
        assert!(!cols.contains("15"));
    }

    #[test]
    fn syntax_break_variants() {
        let text = "x <- paste(\"a\", b)\n";
        let c = candidates(OperatorKind::SyntaxBreak, text);
        let outs: Vec<String> = c.iter().map(|c| apply(text, c)).collect();
        assert!(outs.contains(&"x <- paste(\"a\", b\n".to_string()));
        assert!(outs.contains(&"x <- paste(\"a\" b)\n".to_string()));
    }

    #[test]
    fn read_corruption_adds_arguments() {
        let text = "d <- read.csv(\"data/x.csv\", stringsAsFactors = FALSE)\n";
        let c = candidates(OperatorKind::FileReadCorruption, text);
        let outs: Vec<String> = c.iter().map(|c| apply(text, c)).collect();
        assert_eq!(
            outs,
            [
                "d <- read.csv(\"data/x.csv\", stringsAsFactors = FALSE, header = FALSE)\n",
                "d <- read.csv(\"data/x.csv\", stringsAsFactors = FALSE, sep = \";\")\n"
            ]
        );
    }

    #[test]
    fn package_corruptions_are_distinct() {
        let c = corrupt_package("tools");
        assert!(c.contains(&"tool".to_string()));
        assert!(c.contains(&"otols".to_string()));
        assert!(!c.contains(&"tools".to_string()));
    }
}
