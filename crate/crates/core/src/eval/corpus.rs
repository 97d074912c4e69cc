use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

/// Longest accepted corpus line, in bytes.
pub const MAX_LINE_BYTES: usize = 256;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorpusMode {
    #[default]
    Unique,
    Multiset,
}

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("cannot read corpus {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: line is {len} bytes, longer than the {MAX_LINE_BYTES}-byte limit")]
    LineTooLong { path: PathBuf, line: usize, len: usize },
    #[error("{path}:{line}: line is not valid UTF-8")]
    InvalidUtf8 { path: PathBuf, line: usize },
    #[error("corpus {0} contains no passwords")]
    Empty(PathBuf),
}

/// Reads a one-password-per-line file. Blank lines are skipped and a
/// trailing carriage return is dropped; nothing else is unescaped.
pub fn read_password_lines(path: &Path) -> Result<Vec<String>, CorpusError> {
    let bytes = std::fs::read(path).map_err(|source| CorpusError::Io { path: path.into(), source })?;
    parse_password_lines(&bytes, path)
}

pub fn parse_password_lines(bytes: &[u8], path: &Path) -> Result<Vec<String>, CorpusError> {
    let mut out = Vec::new();
    for (i, mut line) in bytes.split(|b| *b == b'\n').enumerate() {
        if let Some(stripped) = line.strip_suffix(b"\r") {
            line = stripped;
        }
        if line.len() > MAX_LINE_BYTES {
            return Err(CorpusError::LineTooLong { path: path.into(), line: i + 1, len: line.len() });
        }
        if line.is_empty() {
            continue;
        }
        let s = std::str::from_utf8(line)
            .map_err(|_| CorpusError::InvalidUtf8 { path: path.into(), line: i + 1 })?;
        out.push(s.to_string());
    }
    Ok(out)
}

/// The hold-out password set fitness is scored against.
#[derive(Debug, Clone)]
pub struct TestCorpus {
    entries: Vec<String>,
    members: HashSet<String>,
    mode: CorpusMode,
    source_path: PathBuf,
}

impl TestCorpus {
    pub fn load(path: &Path, mode: CorpusMode) -> Result<Self, CorpusError> {
        let entries = read_password_lines(path)?;
        Self::from_entries(entries, mode, path)
    }

    /// In unique mode duplicates are removed, keeping first occurrences.
    pub fn from_entries(
        entries: Vec<String>,
        mode: CorpusMode,
        source_path: impl Into<PathBuf>,
    ) -> Result<Self, CorpusError> {
        let source_path = source_path.into();
        if entries.is_empty() {
            return Err(CorpusError::Empty(source_path));
        }
        let mut members = HashSet::with_capacity(entries.len());
        let entries = match mode {
            CorpusMode::Unique => entries.into_iter().filter(|e| members.insert(e.clone())).collect(),
            CorpusMode::Multiset => {
                members.extend(entries.iter().cloned());
                entries
            }
        };
        Ok(Self { entries, members, mode, source_path })
    }

    pub fn entries(&self) -> &[String] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn mode(&self) -> CorpusMode {
        self.mode
    }

    pub fn source_path(&self) -> &Path {
        &self.source_path
    }

    pub fn contains(&self, password: &str) -> bool {
        self.members.contains(password)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_lines() {
        let got = parse_password_lines(b"abc\r\n\nx y\n\xc3\xa9t\xc3\xa9", Path::new("t")).unwrap();
        assert_eq!(got, vec!["abc", "x y", "été"]);
    }

    #[test]
    fn rejects_long_line_with_number() {
        let mut data = b"ok\nfine\n".to_vec();
        data.extend(std::iter::repeat_n(b'a', 257));
        match parse_password_lines(&data, Path::new("c.txt")) {
            Err(CorpusError::LineTooLong { line, len, .. }) => assert_eq!((line, len), (3, 257)),
            other => panic!("unexpected {other:?}"),
        }
        let exact = vec![b'a'; 256];
        assert_eq!(parse_password_lines(&exact, Path::new("c")).unwrap().len(), 1);
    }

    #[test]
    fn rejects_invalid_utf8() {
        assert!(matches!(
            parse_password_lines(b"ok\n\xff\xfe\n", Path::new("c")),
            Err(CorpusError::InvalidUtf8 { line: 2, .. })
        ));
    }

    #[test]
    fn unique_mode_dedups() {
        let c = TestCorpus::from_entries(
            vec!["a".into(), "b".into(), "a".into()],
            CorpusMode::Unique,
            "mem",
        )
        .unwrap();
        assert_eq!(c.entries(), ["a", "b"]);
        let m = TestCorpus::from_entries(vec!["a".into(), "a".into()], CorpusMode::Multiset, "mem").unwrap();
        assert_eq!(m.len(), 2);
    }

    #[test]
    fn empty_corpus_is_an_error() {
        assert!(matches!(
            TestCorpus::from_entries(vec![], CorpusMode::Unique, "x"),
            Err(CorpusError::Empty(_))
        ));
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("blank.txt");
        std::fs::write(&p, "\n\n").unwrap();
        assert!(matches!(TestCorpus::load(&p, CorpusMode::Unique), Err(CorpusError::Empty(_))));
        assert!(matches!(
            TestCorpus::load(&dir.path().join("missing.txt"), CorpusMode::Unique),
            Err(CorpusError::Io { .. })
        ));
    }
}
