//! Credential file names and private key markers.

use std::fs;
use std::io::Read;
use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const BUILTIN: &str = include_str!("../../data/secret_patterns.tsv");

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PatternKind {
    FilenameExact,
    FilenameSubstring,
    ContentMarker,
}

impl PatternKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PatternKind::FilenameExact => "filename_exact",
            PatternKind::FilenameSubstring => "filename_substring",
            PatternKind::ContentMarker => "content_marker",
        }
    }

    fn from_name(name: &str) -> Option<PatternKind> {
        match name {
            "filename_exact" => Some(PatternKind::FilenameExact),
            "filename_substring" => Some(PatternKind::FilenameSubstring),
            "content_marker" => Some(PatternKind::ContentMarker),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SecretPattern {
    pub kind: PatternKind,
    pub pattern: String,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SecretPatterns {
    patterns: Vec<SecretPattern>,
}

impl SecretPatterns {
    /// The list shipped with the library.
    pub fn builtin() -> &'static SecretPatterns {
        static PATTERNS: OnceLock<SecretPatterns> = OnceLock::new();
        PATTERNS.get_or_init(|| SecretPatterns::parse(BUILTIN).expect("built-in patterns parse"))
    }

    pub fn load(path: &Path) -> Result<SecretPatterns> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        SecretPatterns::parse(&text)
    }

    /// Parses `kind<TAB>pattern<TAB>label` lines; `#` starts a comment line.
    pub fn parse(text: &str) -> Result<SecretPatterns> {
        let mut patterns = Vec::new();
        for (index, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |reason: &str| Error::MalformedRecord {
                line: index + 1,
                reason: reason.to_string(),
            };
            let mut fields = line.splitn(3, '\t');
            let kind = fields.next().unwrap_or_default();
            let pattern = fields.next().ok_or_else(|| bad("missing pattern"))?;
            let label = fields.next().ok_or_else(|| bad("missing label"))?;
            let kind = PatternKind::from_name(kind).ok_or_else(|| bad("unknown pattern kind"))?;
            if pattern.is_empty() {
                return Err(bad("empty pattern"));
            }
            let pattern = match kind {
                PatternKind::ContentMarker => pattern.to_string(),
                _ => pattern.to_lowercase(),
            };
            patterns.push(SecretPattern {
                kind,
                pattern,
                label: label.to_string(),
            });
        }
        Ok(SecretPatterns { patterns })
    }

    pub fn patterns(&self) -> &[SecretPattern] {
        &self.patterns
    }

    /// Best filename match for a basename: exact beats substring, then
    /// file order.
    pub fn match_filename(&self, name: &str) -> Option<&SecretPattern> {
        let name = name.to_lowercase();
        if name.ends_with(".pub") {
            return None;
        }
        let of_kind = |kind| self.patterns.iter().filter(move |p| p.kind == kind);
        of_kind(PatternKind::FilenameExact)
            .find(|p| p.pattern == name)
            .or_else(|| of_kind(PatternKind::FilenameSubstring).find(|p| name.contains(&p.pattern)))
    }

    /// First content marker (in list order) occurring in `bytes`.
    pub fn match_content(&self, bytes: &[u8]) -> Option<&SecretPattern> {
        self.markers()
            .find(|p| contains(bytes, p.pattern.as_bytes()))
    }

    /// Streams `reader` in chunks of `chunk` bytes, keeping enough of the
    /// previous chunk that a marker straddling a boundary is still seen.
    pub fn scan_content<R: Read>(&self, mut reader: R, chunk: usize) -> std::io::Result<Option<&SecretPattern>> {
        let overlap = self.markers().map(|p| p.pattern.len()).max().unwrap_or(1) - 1;
        let mut window: Vec<u8> = Vec::with_capacity(chunk.max(1) + overlap);
        let mut buf = vec![0u8; chunk.max(1)];
        loop {
            let n = reader.read(&mut buf)?;
            if n == 0 {
                return Ok(None);
            }
            window.extend_from_slice(&buf[..n]);
            if let Some(found) = self.match_content(&window) {
                return Ok(Some(found));
            }
            let keep = window.len().min(overlap);
            window.drain(..window.len() - keep);
        }
    }

    fn markers(&self) -> impl Iterator<Item = &SecretPattern> {
        self.patterns
            .iter()
            .filter(|p| p.kind == PatternKind::ContentMarker)
    }
}

fn contains(haystack: &[u8], needle: &[u8]) -> bool {
    !needle.is_empty() && haystack.windows(needle.len()).any(|w| w == needle)
}

pub fn is_secret_filename(name: &str) -> Option<&'static SecretPattern> {
    SecretPatterns::builtin().match_filename(name)
}

pub fn detect_private_key_content(bytes: &[u8]) -> Option<&'static SecretPattern> {
    SecretPatterns::builtin().match_content(bytes)
}
