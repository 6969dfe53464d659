//! Root-relative paths and small filesystem helpers.

use std::fmt;
use std::path::{Component, Path, PathBuf};

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

use crate::error::{Error, IoContext, Result};

/// Name of the only hash algorithm used in manifests.
pub const HASH_ALGORITHM: &str = "sha256";

/// A forward-slash path that stays inside some root: never absolute, never `..`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RelPath(String);

impl RelPath {
    pub fn new(raw: &str) -> Result<Self> {
        let unified = raw.replace('\\', "/");
        if unified.is_empty() {
            return Err(Error::PathViolation("empty path".into()));
        }
        if unified.starts_with('/') || Path::new(raw).is_absolute() {
            return Err(Error::PathViolation(format!("absolute path {raw:?}")));
        }
        let mut parts = Vec::new();
        for part in unified.split('/') {
            match part {
                "" | "." => {}
                ".." => return Err(Error::PathViolation(format!("parent traversal in {raw:?}"))),
                p if p.contains(':') && cfg!(windows) => {
                    return Err(Error::PathViolation(format!("drive prefix in {raw:?}")))
                }
                p => parts.push(p),
            }
        }
        if parts.is_empty() {
            return Err(Error::PathViolation(format!("path {raw:?} names the root")));
        }
        Ok(RelPath(parts.join("/")))
    }

    /// Builds a `RelPath` from a path already known to sit under `root`.
    pub fn from_under(root: &Path, full: &Path) -> Result<Self> {
        let rel = full
            .strip_prefix(root)
            .map_err(|_| Error::PathViolation(format!("{} is outside {}", full.display(), root.display())))?;
        let mut parts = Vec::new();
        for c in rel.components() {
            match c {
                Component::Normal(s) => parts.push(s.to_string_lossy().into_owned()),
                _ => return Err(Error::PathViolation(format!("unexpected component in {}", rel.display()))),
            }
        }
        RelPath::new(&parts.join("/"))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn under(&self, root: &Path) -> PathBuf {
        self.0.split('/').fold(root.to_path_buf(), |p, s| p.join(s))
    }

    pub fn file_name(&self) -> &str {
        self.0.rsplit('/').next().unwrap_or(&self.0)
    }

    pub fn extension(&self) -> Option<&str> {
        let name = self.file_name();
        name.rfind('.').filter(|&i| i > 0).map(|i| &name[i + 1..])
    }

    /// First path component, or `None` for a bare file name.
    pub fn top_dir(&self) -> Option<&str> {
        self.0.split_once('/').map(|(a, _)| a)
    }
}

impl fmt::Display for RelPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for RelPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

impl Serialize for RelPath {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for RelPath {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = String::deserialize(d)?;
        RelPath::new(&raw).map_err(serde::de::Error::custom)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn hash_file(path: &Path) -> Result<(String, u64)> {
    let bytes = std::fs::read(path).at(path)?;
    Ok((sha256_hex(&bytes), bytes.len() as u64))
}

/// All regular files under `root`, as sorted root-relative paths.
pub fn list_files(root: &Path) -> Result<Vec<RelPath>> {
    let mut out = Vec::new();
    for entry in walkdir::WalkDir::new(root).follow_links(false) {
        let entry = entry.map_err(|e| {
            let path = e.path().map(Path::to_path_buf).unwrap_or_else(|| root.to_path_buf());
            Error::io(path, e.into())
        })?;
        if entry.file_type().is_file() {
            out.push(RelPath::from_under(root, entry.path())?);
        }
    }
    out.sort();
    Ok(out)
}

/// Copies the listed files from `src` to `dst`, creating parent directories.
pub fn copy_files<'a>(src: &Path, dst: &Path, files: impl IntoIterator<Item = &'a RelPath>) -> Result<()> {
    for f in files {
        let to = f.under(dst);
        if let Some(parent) = to.parent() {
            std::fs::create_dir_all(parent).at(parent)?;
        }
        let from = f.under(src);
        std::fs::copy(&from, &to).at(&from)?;
    }
    Ok(())
}

/// Recursively copies every regular file from `src` into `dst`.
pub fn copy_tree(src: &Path, dst: &Path) -> Result<()> {
    std::fs::create_dir_all(dst).at(dst)?;
    let files = list_files(src)?;
    copy_files(src, dst, &files)
}

pub fn write_file(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).at(parent)?;
    }
    std::fs::write(path, bytes).at(path)
}

pub fn read_string(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).at(path)?;
    Ok(String::from_utf8_lossy(&bytes).into_owned())
}

/// Serializes `value` as pretty JSON with a trailing newline.
pub fn to_json_pretty<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("manifest types always serialize");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_escapes() {
        assert!(RelPath::new("/etc/passwd").is_err());
        assert!(RelPath::new("../x").is_err());
        assert!(RelPath::new("a/../../x").is_err());
        assert!(RelPath::new("").is_err());
        assert!(RelPath::new(".").is_err());
    }

    #[test]
    fn normalises_separators() {
        assert_eq!(RelPath::new("./data//x.csv").unwrap().as_str(), "data/x.csv");
        assert_eq!(RelPath::new("data\\x.csv").unwrap().as_str(), "data/x.csv");
    }

    #[test]
    fn components() {
        let p = RelPath::new("results/tab.v2.csv").unwrap();
        assert_eq!(p.file_name(), "tab.v2.csv");
        assert_eq!(p.extension(), Some("csv"));
        assert_eq!(p.top_dir(), Some("results"));
        assert_eq!(RelPath::new(".Rprofile").unwrap().extension(), None);
    }

    #[test]
    fn known_digest() {
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }
}
