//! Uncertainty marker lexicon.
//!
//! A lexicon file is UTF-8 text with one marker per line:
//!
//! ```text
//! surface<TAB>category[<TAB>context_rule]
//! ```
//!
//! Blank lines and lines starting with `#` are ignored, except that a comment
//! of the form `# version: <string>` sets the lexicon version. Surfaces are
//! normalized on load, so they may be written with hamza or diacritics.

mod normalize;

pub use normalize::{
    contains_url, is_question_mark, normalize, normalize_with, url_pattern, NormalizeOptions,
    NormalizedText, ARABIC_QUESTION_MARK, LATIN_QUESTION_MARK, TATWEEL,
};

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

const DEFAULT_LEXICON: &str = include_str!("default_lexicon.tsv");

/// Longest marker phrase, in tokens.
pub const MAX_MARKER_TOKENS: usize = 4;

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("cannot read lexicon {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: expected 2 or 3 tab-separated fields, found {found}")]
    FieldCount { line: usize, found: usize },
    #[error("line {line}: unknown category {name:?}")]
    UnknownCategory { line: usize, name: String },
    #[error("line {line}: unknown context rule {name:?}")]
    UnknownRule { line: usize, name: String },
    #[error("line {line}: surface {surface:?} normalizes to no tokens")]
    EmptySurface { line: usize, surface: String },
    #[error("line {line}: surface {surface:?} has {tokens} tokens, at most {MAX_MARKER_TOKENS} allowed")]
    TooLong {
        line: usize,
        surface: String,
        tokens: usize,
    },
    #[error("line {line}: duplicate marker {surface:?} ({category}), first defined on line {first_line}")]
    Duplicate {
        line: usize,
        first_line: usize,
        surface: String,
        category: MarkerCategory,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MarkerCategory {
    Modal,
    Hedge,
    Question,
    WhoQuestion,
    InfoUncertainty,
    Rumor,
}

impl MarkerCategory {
    pub const ALL: [MarkerCategory; 6] = [
        MarkerCategory::Modal,
        MarkerCategory::Hedge,
        MarkerCategory::Question,
        MarkerCategory::WhoQuestion,
        MarkerCategory::InfoUncertainty,
        MarkerCategory::Rumor,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MarkerCategory::Modal => "modal",
            MarkerCategory::Hedge => "hedge",
            MarkerCategory::Question => "question",
            MarkerCategory::WhoQuestion => "who_question",
            MarkerCategory::InfoUncertainty => "info_uncertainty",
            MarkerCategory::Rumor => "rumor",
        }
    }
}

impl fmt::Display for MarkerCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MarkerCategory {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        MarkerCategory::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| s.to_string())
    }
}

/// Predicates that gate a marker on its surrounding tokens.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContextRule {
    /// Fires only when followed by a question mark or when the token opens a
    /// listed multi-token who-question phrase.
    Interrogative,
}

impl ContextRule {
    pub fn as_str(self) -> &'static str {
        match self {
            ContextRule::Interrogative => "interrogative",
        }
    }
}

impl fmt::Display for ContextRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ContextRule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "interrogative" => Ok(ContextRule::Interrogative),
            other => Err(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Marker {
    /// Surface as written in the lexicon file.
    pub raw: String,
    /// Surface under default normalization.
    pub tokens: Vec<String>,
    pub category: MarkerCategory,
    pub context_rule: Option<ContextRule>,
}

impl Marker {
    pub fn surface(&self) -> String {
        self.tokens.join(" ")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lexicon {
    pub markers: Vec<Marker>,
    pub category_counts: BTreeMap<MarkerCategory, usize>,
    pub version: String,
}

impl Lexicon {
    /// The lexicon compiled into the binary.
    pub fn embedded() -> Lexicon {
        Lexicon::parse(DEFAULT_LEXICON).expect("embedded lexicon is valid")
    }

    pub fn embedded_source() -> &'static str {
        DEFAULT_LEXICON
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Lexicon, LexiconError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| LexiconError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Lexicon::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Lexicon, LexiconError> {
        let mut markers = Vec::new();
        let mut seen: HashMap<(Vec<String>, MarkerCategory), usize> = HashMap::new();
        let mut version = None;

        for (idx, line) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                if let Some(v) = comment.trim().strip_prefix("version:") {
                    version = Some(v.trim().to_string());
                }
                continue;
            }

            let fields: Vec<&str> = line.split('\t').collect();
            if !(2..=3).contains(&fields.len()) {
                return Err(LexiconError::FieldCount {
                    line: line_no,
                    found: fields.len(),
                });
            }
            let raw = fields[0].trim();
            let category = fields[1]
                .trim()
                .parse::<MarkerCategory>()
                .map_err(|name| LexiconError::UnknownCategory { line: line_no, name })?;
            let context_rule = match fields.get(2).map(|f| f.trim()) {
                None | Some("") | Some("-") => None,
                Some(r) => Some(
                    r.parse::<ContextRule>()
                        .map_err(|name| LexiconError::UnknownRule { line: line_no, name })?,
                ),
            };

            let tokens = normalize(raw).tokens;
            if tokens.is_empty() {
                return Err(LexiconError::EmptySurface {
                    line: line_no,
                    surface: raw.to_string(),
                });
            }
            if tokens.len() > MAX_MARKER_TOKENS {
                return Err(LexiconError::TooLong {
                    line: line_no,
                    surface: raw.to_string(),
                    tokens: tokens.len(),
                });
            }
            if let Some(&first_line) = seen.get(&(tokens.clone(), category)) {
                return Err(LexiconError::Duplicate {
                    line: line_no,
                    first_line,
                    surface: raw.to_string(),
                    category,
                });
            }
            seen.insert((tokens.clone(), category), line_no);
            markers.push(Marker {
                raw: raw.to_string(),
                tokens,
                category,
                context_rule,
            });
        }

        let mut category_counts: BTreeMap<MarkerCategory, usize> =
            MarkerCategory::ALL.into_iter().map(|c| (c, 0)).collect();
        for m in &markers {
            *category_counts.entry(m.category).or_default() += 1;
        }

        Ok(Lexicon {
            markers,
            category_counts,
            version: version.unwrap_or_else(|| "unversioned".to_string()),
        })
    }

    pub fn len(&self) -> usize {
        self.markers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.markers.is_empty()
    }

    pub fn count(&self, category: MarkerCategory) -> usize {
        self.category_counts.get(&category).copied().unwrap_or(0)
    }

    /// Markers that carry no context rule and so fire wherever they occur.
    pub fn unconditional_markers(&self) -> impl Iterator<Item = &Marker> {
        self.markers.iter().filter(|m| m.context_rule.is_none())
    }
}
