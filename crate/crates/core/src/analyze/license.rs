//! Template-based license identification.
//!
//! Texts are lowercased, copyright lines dropped, punctuation folded to
//! spaces and cut into token 5-grams. A template matches when more than
//! `THRESHOLD` of its 5-grams occur in the text.

use std::cmp::Ordering;
use std::collections::hash_map::DefaultHasher;
use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::fs;
use std::hash::{Hash, Hasher};
use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const THRESHOLD: f64 = 0.90;
const SHINGLE: usize = 5;
/// Share of a template's 5-grams that must remain unclaimed by stronger
/// matches for it to be reported as well.
const RESIDUAL: f64 = 0.5;

const BUILTIN: &[(&str, &str)] = &[
    ("MIT.txt", include_str!("../../licenses/MIT.txt")),
    ("ISC.txt", include_str!("../../licenses/ISC.txt")),
    ("Unlicense.txt", include_str!("../../licenses/Unlicense.txt")),
    ("BSD-2.txt", include_str!("../../licenses/BSD-2.txt")),
    ("BSD-3.txt", include_str!("../../licenses/BSD-3.txt")),
    ("Apache-2.0.txt", include_str!("../../licenses/Apache-2.0.txt")),
    ("GPL-2.0.txt", include_str!("../../licenses/GPL-2.0.txt")),
    ("GPL-3.0.txt", include_str!("../../licenses/GPL-3.0.txt")),
    ("LGPL-2.1.txt", include_str!("../../licenses/LGPL-2.1.txt")),
    ("LGPL-3.0.txt", include_str!("../../licenses/LGPL-3.0.txt")),
    ("AGPL-3.0.txt", include_str!("../../licenses/AGPL-3.0.txt")),
    ("MPL-2.0.txt", include_str!("../../licenses/MPL-2.0.txt")),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum LicenseFamily {
    #[serde(rename = "MIT")]
    Mit,
    Apache,
    #[serde(rename = "GPL")]
    Gpl,
    #[serde(rename = "LGPL")]
    Lgpl,
    #[serde(rename = "AGPL")]
    Agpl,
    #[serde(rename = "BSD-2")]
    Bsd2,
    #[serde(rename = "BSD-3")]
    Bsd3,
    #[serde(rename = "MPL")]
    Mpl,
    Unlicense,
    #[serde(rename = "ISC")]
    Isc,
}

impl LicenseFamily {
    pub const ALL: [LicenseFamily; 10] = [
        LicenseFamily::Mit,
        LicenseFamily::Apache,
        LicenseFamily::Gpl,
        LicenseFamily::Lgpl,
        LicenseFamily::Agpl,
        LicenseFamily::Bsd2,
        LicenseFamily::Bsd3,
        LicenseFamily::Mpl,
        LicenseFamily::Unlicense,
        LicenseFamily::Isc,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LicenseFamily::Mit => "MIT",
            LicenseFamily::Apache => "Apache",
            LicenseFamily::Gpl => "GPL",
            LicenseFamily::Lgpl => "LGPL",
            LicenseFamily::Agpl => "AGPL",
            LicenseFamily::Bsd2 => "BSD-2",
            LicenseFamily::Bsd3 => "BSD-3",
            LicenseFamily::Mpl => "MPL",
            LicenseFamily::Unlicense => "Unlicense",
            LicenseFamily::Isc => "ISC",
        }
    }

    pub fn is_versioned(self) -> bool {
        matches!(
            self,
            LicenseFamily::Apache
                | LicenseFamily::Gpl
                | LicenseFamily::Lgpl
                | LicenseFamily::Agpl
                | LicenseFamily::Mpl
        )
    }
}

impl fmt::Display for LicenseFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A detected license. Identity (equality, ordering, hashing) is the
/// (family, version) pair; confidence is carried along.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LicenseId {
    pub family: LicenseFamily,
    pub version: Option<String>,
    pub confidence: f64,
}

impl LicenseId {
    pub fn new(family: LicenseFamily, version: Option<&str>) -> LicenseId {
        LicenseId {
            family,
            version: version.map(str::to_string),
            confidence: 1.0,
        }
    }

    fn key(&self) -> (LicenseFamily, Option<&str>) {
        (self.family, self.version.as_deref())
    }
}

impl PartialEq for LicenseId {
    fn eq(&self, other: &Self) -> bool {
        self.key() == other.key()
    }
}

impl Eq for LicenseId {}

impl PartialOrd for LicenseId {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for LicenseId {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key().cmp(&other.key())
    }
}

impl Hash for LicenseId {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.key().hash(state)
    }
}

impl fmt::Display for LicenseId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.version {
            Some(v) => write!(f, "{}-{}", self.family, v),
            None => write!(f, "{}", self.family),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ChangeClass {
    LicenseUpdate,
    PartialChange,
    FullChange,
    NoChange,
    Undetermined,
}

impl ChangeClass {
    pub fn as_str(self) -> &'static str {
        match self {
            ChangeClass::LicenseUpdate => "LicenseUpdate",
            ChangeClass::PartialChange => "PartialChange",
            ChangeClass::FullChange => "FullChange",
            ChangeClass::NoChange => "NoChange",
            ChangeClass::Undetermined => "Undetermined",
        }
    }
}

impl fmt::Display for ChangeClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

pub fn is_license_filename(name: &str) -> bool {
    let folded = name.to_lowercase();
    folded.contains("license") || folded.contains("licence")
}

pub fn classify_license_change(
    before: &BTreeSet<LicenseId>,
    after: &BTreeSet<LicenseId>,
) -> ChangeClass {
    if before.is_empty() || after.is_empty() {
        return ChangeClass::Undetermined;
    }
    if before == after {
        return ChangeClass::NoChange;
    }
    let families = |set: &BTreeSet<LicenseId>| -> BTreeSet<LicenseFamily> {
        set.iter().map(|l| l.family).collect()
    };
    let (fb, fa) = (families(before), families(after));
    if fb == fa {
        ChangeClass::LicenseUpdate
    } else if fb.is_disjoint(&fa) {
        ChangeClass::FullChange
    } else {
        ChangeClass::PartialChange
    }
}

/// Anything that can name the licenses in a text.
pub trait LicenseClassifier: Send + Sync {
    fn detect(&self, text: &[u8]) -> BTreeSet<LicenseId>;
}

struct Template {
    family: LicenseFamily,
    version: Option<String>,
    /// Normalized tokens that must appear in sequence in the text.
    version_phrase: Option<Vec<String>>,
    shingles: HashSet<u64>,
}

/// Classifier over canonical license texts.
pub struct TemplateClassifier {
    templates: Vec<Template>,
}

impl TemplateClassifier {
    pub fn builtin() -> &'static TemplateClassifier {
        static CLASSIFIER: OnceLock<TemplateClassifier> = OnceLock::new();
        CLASSIFIER.get_or_init(|| {
            let mut templates = Vec::new();
            for (name, text) in BUILTIN {
                let (family, version) = parse_template_name(name).expect("built-in template name");
                templates.push(Template::new(family, version, text));
            }
            TemplateClassifier { templates }
        })
    }

    /// Loads every `<family>[-<version>].txt` file in `dir`.
    pub fn from_dir(dir: &Path) -> Result<TemplateClassifier> {
        let mut paths: Vec<_> = fs::read_dir(dir)
            .map_err(|e| Error::io(dir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "txt"))
            .collect();
        paths.sort();
        let mut templates = Vec::new();
        for path in paths {
            let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default();
            let Some((family, version)) = parse_template_name(name) else {
                return Err(Error::Archive(format!("unrecognized template name {name}")));
            };
            let text = fs::read(&path).map_err(|e| Error::io(&path, e))?;
            templates.push(Template::new(family, version, &String::from_utf8_lossy(&text)));
        }
        Ok(TemplateClassifier { templates })
    }

    pub fn ids(&self) -> Vec<LicenseId> {
        self.templates
            .iter()
            .map(|t| LicenseId::new(t.family, t.version.as_deref()))
            .collect()
    }
}

impl Template {
    fn new(family: LicenseFamily, version: Option<String>, text: &str) -> Template {
        let version_phrase = version.as_ref().map(|v| {
            // GNU texts say "Version 2", "Version 3", "Version 2.1"
            let spoken = match family {
                LicenseFamily::Gpl | LicenseFamily::Lgpl | LicenseFamily::Agpl => {
                    v.strip_suffix(".0").unwrap_or(v)
                }
                _ => v,
            };
            normalize(&format!("version {spoken}"))
        });
        Template {
            family,
            version,
            version_phrase,
            shingles: shingles(&normalize(text)),
        }
    }
}

impl LicenseClassifier for TemplateClassifier {
    fn detect(&self, text: &[u8]) -> BTreeSet<LicenseId> {
        let tokens = normalize(&String::from_utf8_lossy(text));
        let text_shingles = shingles(&tokens);
        if text_shingles.is_empty() {
            return BTreeSet::new();
        }
        let mut candidates: Vec<(f64, &Template)> = Vec::new();
        for template in &self.templates {
            if template.shingles.is_empty() {
                continue;
            }
            let hits = template
                .shingles
                .iter()
                .filter(|s| text_shingles.contains(s))
                .count();
            let confidence = hits as f64 / template.shingles.len() as f64;
            if confidence <= THRESHOLD {
                continue;
            }
            if let Some(phrase) = &template.version_phrase {
                if !contains_run(&tokens, phrase) {
                    continue;
                }
            }
            candidates.push((confidence, template));
        }
        candidates.sort_by(|a, b| {
            b.0.total_cmp(&a.0)
                .then(b.1.shingles.len().cmp(&a.1.shingles.len()))
                .then(a.1.family.cmp(&b.1.family))
                .then(a.1.version.cmp(&b.1.version))
        });

        let mut claimed: HashSet<u64> = HashSet::new();
        let mut out = BTreeSet::new();
        for (confidence, template) in candidates {
            let fresh = template
                .shingles
                .iter()
                .filter(|s| !claimed.contains(s))
                .count();
            if (fresh as f64) < RESIDUAL * template.shingles.len() as f64 {
                continue;
            }
            claimed.extend(template.shingles.iter().copied());
            out.insert(LicenseId {
                family: template.family,
                version: template.version.clone(),
                confidence: confidence.min(1.0),
            });
        }
        out
    }
}

/// Canonical text shipped for a template file name such as `GPL-3.0.txt`.
pub fn builtin_template(file_name: &str) -> Option<&'static str> {
    BUILTIN.iter().find(|(n, _)| *n == file_name).map(|(_, t)| *t)
}

/// Licenses in `text` according to the built-in templates.
pub fn detect_licenses(text: &[u8]) -> BTreeSet<LicenseId> {
    TemplateClassifier::builtin().detect(text)
}

/// `MIT.txt` -> (MIT, None), `GPL-3.0.txt` -> (GPL, Some("3.0")).
pub fn parse_template_name(file_name: &str) -> Option<(LicenseFamily, Option<String>)> {
    let stem = file_name.strip_suffix(".txt")?;
    let mut best: Option<(LicenseFamily, Option<String>)> = None;
    for family in LicenseFamily::ALL {
        let name = family.name();
        if stem == name {
            return Some((family, None));
        }
        if let Some(version) = stem.strip_prefix(name).and_then(|r| r.strip_prefix('-')) {
            if family.is_versioned() && !version.is_empty() {
                best = Some((family, Some(version.to_string())));
            }
        }
    }
    best
}

fn normalize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    for line in text.lines() {
        let lower = line.to_lowercase();
        if lower.trim_start().starts_with("copyright") {
            continue;
        }
        for token in lower.split(|c: char| !c.is_alphanumeric()) {
            if !token.is_empty() {
                tokens.push(token.to_string());
            }
        }
    }
    tokens
}

fn shingles(tokens: &[String]) -> HashSet<u64> {
    tokens
        .windows(SHINGLE)
        .map(|w| {
            let mut hasher = DefaultHasher::new();
            w.hash(&mut hasher);
            hasher.finish()
        })
        .collect()
}

fn contains_run(tokens: &[String], run: &[String]) -> bool {
    !run.is_empty() && tokens.windows(run.len()).any(|w| w == run)
}
