//! Marker lexicons: per-category word lists used to scan derived prompts
//! for leaked social information, plus the category phrases and group pairs
//! the prompt templates interpolate.
//!
//! A built-in lexicon ships with the crate; a JSON file of the same shape
//! can replace it at run time for corpus-specific vocabulary.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::sync::OnceLock;

use serde::Deserialize;

use crate::bench::SocialCategory;

#[derive(Debug, thiserror::Error)]
pub enum LexiconError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("failed to parse lexicon {path}: {detail}")]
    Parse { path: String, detail: String },
    #[error("lexicon has no marker list for category {category}")]
    MissingCategory { category: String },
    #[error("no binary group pair is defined for category {category}; only {available:?} support group-assumption prompts")]
    UnsupportedCategoryForTemplate {
        category: String,
        available: Vec<String>,
    },
}

#[derive(Debug, Deserialize)]
struct RawLexicons {
    markers: BTreeMap<SocialCategory, BTreeSet<String>>,
    category_phrases: BTreeMap<SocialCategory, String>,
    #[serde(default)]
    binary_groups: BTreeMap<SocialCategory, (String, String)>,
}

#[derive(Debug)]
pub struct Lexicons {
    markers: BTreeMap<SocialCategory, BTreeSet<String>>,
    category_phrases: BTreeMap<SocialCategory, String>,
    binary_groups: BTreeMap<SocialCategory, (String, String)>,
}

const BUILTIN: &str = include_str!("../resources/lexicons.json");

static BUILTIN_PARSED: OnceLock<Lexicons> = OnceLock::new();

impl Lexicons {
    pub fn builtin() -> &'static Lexicons {
        BUILTIN_PARSED.get_or_init(|| {
            Lexicons::from_json(BUILTIN, "<builtin>").expect("built-in lexicon parses")
        })
    }

    pub fn load(path: &Path) -> Result<Lexicons, LexiconError> {
        let body = std::fs::read_to_string(path).map_err(|source| LexiconError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Lexicons::from_json(&body, &path.display().to_string())
    }

    pub fn from_json(body: &str, origin: &str) -> Result<Lexicons, LexiconError> {
        let raw: RawLexicons = serde_json::from_str(body).map_err(|e| LexiconError::Parse {
            path: origin.to_string(),
            detail: e.to_string(),
        })?;
        let mut markers: BTreeMap<SocialCategory, BTreeSet<String>> = raw
            .markers
            .into_iter()
            .map(|(cat, words)| {
                let words = words.into_iter().map(|w| w.to_lowercase()).collect();
                (cat, words)
            })
            .collect();
        for cat in SocialCategory::report_columns() {
            if !markers.contains_key(&cat) {
                return Err(LexiconError::MissingCategory {
                    category: cat.display_name().to_string(),
                });
            }
        }
        // The combined-demographic list covers every axis the decision grid
        // varies, plus the pronouns that gendered rewrites can leave behind.
        let mut combined = BTreeSet::new();
        for cat in [SocialCategory::Age, SocialCategory::Gender, SocialCategory::Race] {
            combined.extend(markers[&cat].iter().cloned());
        }
        markers.entry(SocialCategory::AnyDemographic).or_insert(combined);
        Ok(Lexicons {
            markers,
            category_phrases: raw.category_phrases,
            binary_groups: raw.binary_groups,
        })
    }

    pub fn markers(&self, category: SocialCategory) -> &BTreeSet<String> {
        static EMPTY: OnceLock<BTreeSet<String>> = OnceLock::new();
        self.markers
            .get(&category)
            .unwrap_or_else(|| EMPTY.get_or_init(BTreeSet::new))
    }

    /// Noun phrase naming the category in rendered instructions, e.g.
    /// "physical appearance".
    pub fn phrase(&self, category: SocialCategory) -> &str {
        self.category_phrases
            .get(&category)
            .map(|s| s.as_str())
            .unwrap_or_else(|| category.display_name())
    }

    /// The two group nouns used by group-assumption prompts ("male" /
    /// "female" for gender).  Categories without a conventional binary
    /// split are rejected rather than guessed.
    pub fn binary_groups(
        &self,
        category: SocialCategory,
    ) -> Result<(&str, &str), LexiconError> {
        self.binary_groups
            .get(&category)
            .map(|(a, b)| (a.as_str(), b.as_str()))
            .ok_or_else(|| LexiconError::UnsupportedCategoryForTemplate {
                category: category.display_name().to_string(),
                available: self
                    .binary_groups
                    .keys()
                    .map(|c| c.display_name().to_string())
                    .collect(),
            })
    }

    /// Returns each lexicon entry that occurs in `text` at word boundaries,
    /// case-insensitively.  Hyphens count as boundaries, so "year-old"
    /// matches inside "62-year-old", while "he" does not match inside
    /// "the".
    pub fn scan(&self, category: SocialCategory, text: &str) -> Vec<String> {
        let haystack = text.to_lowercase();
        let mut found = Vec::new();
        for entry in self.markers(category) {
            if contains_word(&haystack, entry) {
                found.push(entry.clone());
            }
        }
        found
    }
}

fn is_word_char(b: u8) -> bool {
    b.is_ascii_alphanumeric()
}

/// Word-boundary containment over a lowercased haystack.  `needle` may
/// contain spaces or hyphens; its interior is matched verbatim.
fn contains_word(haystack: &str, needle: &str) -> bool {
    if needle.is_empty() {
        return false;
    }
    let bytes = haystack.as_bytes();
    let mut start = 0;
    while let Some(pos) = haystack[start..].find(needle) {
        let at = start + pos;
        let end = at + needle.len();
        let left_ok = at == 0 || !is_word_char(bytes[at - 1]);
        let right_ok = end == bytes.len() || !is_word_char(bytes[end]);
        if left_ok && right_ok {
            return true;
        }
        start = at + 1;
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_lexicon_loads_and_covers_all_categories() {
        let lex = Lexicons::builtin();
        for cat in SocialCategory::report_columns() {
            assert!(!lex.markers(cat).is_empty(), "{cat} has markers");
        }
        assert!(!lex.markers(SocialCategory::AnyDemographic).is_empty());
    }

    #[test]
    fn combined_list_spans_the_grid_axes() {
        let lex = Lexicons::builtin();
        let combined = lex.markers(SocialCategory::AnyDemographic);
        assert!(combined.contains("he"));
        assert!(combined.contains("year-old"));
        assert!(combined.contains("hispanic"));
    }

    #[test]
    fn scan_respects_word_boundaries() {
        let lex = Lexicons::builtin();
        let hits = lex.scan(SocialCategory::Gender, "The teacher graded the papers.");
        assert!(hits.is_empty(), "no gender words in {hits:?}");
        let hits = lex.scan(SocialCategory::Gender, "The teacher said he was done.");
        assert_eq!(hits, vec!["he".to_string()]);
    }

    #[test]
    fn scan_sees_through_hyphenation() {
        let lex = Lexicons::builtin();
        let hits = lex.scan(SocialCategory::Age, "A 62-year-old applied.");
        assert!(hits.contains(&"year-old".to_string()));
    }

    #[test]
    fn scan_matches_multiword_entries() {
        let lex = Lexicons::builtin();
        let hits = lex.scan(SocialCategory::Race, "A Native American elder spoke.");
        assert!(hits.contains(&"native american".to_string()));
    }

    #[test]
    fn binary_groups_only_for_supported_categories() {
        let lex = Lexicons::builtin();
        assert_eq!(lex.binary_groups(SocialCategory::Gender).unwrap(), ("male", "female"));
        let err = lex.binary_groups(SocialCategory::Religion).unwrap_err();
        assert!(matches!(err, LexiconError::UnsupportedCategoryForTemplate { .. }));
    }

    #[test]
    fn phrases_read_naturally() {
        let lex = Lexicons::builtin();
        assert_eq!(lex.phrase(SocialCategory::Ses), "socio-economic status");
        assert_eq!(lex.phrase(SocialCategory::Gender), "gender");
    }
}
