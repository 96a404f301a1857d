//! Loader for coreference pairs: one sentence, two occupation entities, and
//! a gendered pronoun whose referent must be resolved.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;

use super::{
    apply_exclusions, check_unique_ids, Benchmark, BenchmarkInstance, BenchError, ExclusionList,
    MarkerKind, MarkerSpan, Polarity, SocialCategory, TaskType,
};

#[derive(Debug, Deserialize)]
struct RawLine {
    id: String,
    pair_id: String,
    sentence: String,
    entities: [String; 2],
    gold: usize,
    pronoun: String,
    /// Which case-insensitive occurrence of the pronoun is the target,
    /// counting from zero.
    #[serde(default)]
    pronoun_occurrence: usize,
}

/// Pronoun surface forms recognised as coreference targets.
pub const TARGET_PRONOUNS: [&str; 5] = ["he", "she", "him", "her", "his"];

fn is_word_byte(b: u8) -> bool {
    b.is_ascii_alphanumeric()
}

/// Finds the byte span of the `occurrence`-th whole-word, case-insensitive
/// match of `word` in `text`.
pub(crate) fn find_word_span(text: &str, word: &str, occurrence: usize) -> Option<(usize, usize)> {
    let lower_text = text.to_lowercase();
    let lower_word = word.to_lowercase();
    if lower_text.len() != text.len() || lower_word.is_empty() {
        // Lowercasing that changes byte length would desynchronise offsets;
        // the corpora here are ASCII so this only guards exotic input.
        return None;
    }
    let bytes = lower_text.as_bytes();
    let mut seen = 0;
    let mut start = 0;
    while let Some(pos) = lower_text[start..].find(&lower_word) {
        let at = start + pos;
        let end = at + lower_word.len();
        let left_ok = at == 0 || !is_word_byte(bytes[at - 1]);
        let right_ok = end == bytes.len() || !is_word_byte(bytes[end]);
        if left_ok && right_ok {
            if seen == occurrence {
                return Some((at, lower_word.len()));
            }
            seen += 1;
        }
        start = at + 1;
    }
    None
}

fn convert(raw: RawLine, polarity: Polarity, task_type: TaskType) -> Result<BenchmarkInstance, BenchError> {
    let pronoun = raw.pronoun.trim();
    if !TARGET_PRONOUNS.contains(&pronoun.to_lowercase().as_str()) {
        return Err(BenchError::MarkerNotFound {
            id: raw.id,
            detail: format!("{pronoun:?} is not a recognised target pronoun"),
        });
    }
    if raw.gold > 1 {
        return Err(BenchError::InvalidInstance {
            id: raw.id,
            detail: format!("gold index {} out of range for two entities", raw.gold),
        });
    }
    let (offset, len) = find_word_span(&raw.sentence, pronoun, raw.pronoun_occurrence)
        .ok_or_else(|| BenchError::MarkerNotFound {
            id: raw.id.clone(),
            detail: format!(
                "occurrence {} of pronoun {:?} not present in sentence",
                raw.pronoun_occurrence, pronoun
            ),
        })?;
    Ok(BenchmarkInstance {
        id: raw.id,
        benchmark: Benchmark::Winobias,
        text: raw.sentence,
        options: raw.entities.to_vec(),
        gold: Some(raw.gold),
        polarity,
        task_type,
        social_category: SocialCategory::Gender,
        marker_spans: vec![MarkerSpan {
            offset,
            len,
            kind: MarkerKind::Pronoun,
        }],
        unknown_index: None,
        pair_id: Some(raw.pair_id),
        demographics: None,
        base_text: None,
        excluded: false,
        excluded_reason: None,
    })
}

/// Loads one polarity file of coreference instances.  Every line must carry
/// a locatable target pronoun; instances named by `exclusions` are kept but
/// flagged.
pub fn load_winobias(
    path: &Path,
    task_type: TaskType,
    polarity: Polarity,
    exclusions: &ExclusionList,
) -> Result<Vec<BenchmarkInstance>, BenchError> {
    if polarity == Polarity::NotApplicable {
        return Err(BenchError::InvalidInstance {
            id: path.display().to_string(),
            detail: "coreference instances must be loaded as pro or anti".to_string(),
        });
    }
    let body = std::fs::read_to_string(path).map_err(|source| BenchError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut out = Vec::new();
    for (lineno, line) in body.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawLine = serde_json::from_str(line).map_err(|e| BenchError::Parse {
            path: path.display().to_string(),
            line: lineno + 1,
            detail: e.to_string(),
        })?;
        out.push(convert(raw, polarity, task_type)?);
    }
    check_unique_ids(&out)?;
    apply_exclusions(&mut out, exclusions)?;
    Ok(out)
}

/// Pairs pro and anti instances by `pair_id`.  Every non-excluded instance
/// must have a non-excluded partner on the other side.
pub fn pair_map<'a>(
    pro: &'a [BenchmarkInstance],
    anti: &'a [BenchmarkInstance],
) -> Result<BTreeMap<&'a str, (&'a BenchmarkInstance, &'a BenchmarkInstance)>, BenchError> {
    let mut anti_by_pair: BTreeMap<&str, &BenchmarkInstance> = BTreeMap::new();
    for inst in anti.iter().filter(|i| !i.excluded) {
        let pid = inst.pair_id.as_deref().ok_or_else(|| BenchError::InvalidInstance {
            id: inst.id.clone(),
            detail: "missing pair id".to_string(),
        })?;
        if anti_by_pair.insert(pid, inst).is_some() {
            return Err(BenchError::DuplicateId { id: pid.to_string() });
        }
    }
    let mut map = BTreeMap::new();
    for inst in pro.iter().filter(|i| !i.excluded) {
        let pid = inst.pair_id.as_deref().ok_or_else(|| BenchError::InvalidInstance {
            id: inst.id.clone(),
            detail: "missing pair id".to_string(),
        })?;
        let partner = anti_by_pair.remove(pid).ok_or_else(|| BenchError::InvalidInstance {
            id: inst.id.clone(),
            detail: format!("no anti-stereotype partner for pair {pid}"),
        })?;
        map.insert(pid, (inst, partner));
    }
    if let Some((pid, inst)) = anti_by_pair.into_iter().next() {
        return Err(BenchError::InvalidInstance {
            id: inst.id.clone(),
            detail: format!("no pro-stereotype partner for pair {pid}"),
        });
    }
    Ok(map)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_temp(lines: &[&str]) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        for l in lines {
            writeln!(f, "{l}").unwrap();
        }
        f
    }

    #[test]
    fn loads_and_locates_pronoun() {
        let f = write_temp(&[
            r#"{"id":"w1","pair_id":"p1","sentence":"The physician hired the secretary because he was overwhelmed.","entities":["the physician","the secretary"],"gold":0,"pronoun":"he"}"#,
        ]);
        let insts =
            load_winobias(f.path(), TaskType::Type1, Polarity::Pro, &ExclusionList::empty())
                .unwrap();
        assert_eq!(insts.len(), 1);
        let span = &insts[0].marker_spans[0];
        assert_eq!(span.kind, MarkerKind::Pronoun);
        assert_eq!(span.slice(&insts[0].text), "he");
        assert_eq!(insts[0].social_category, SocialCategory::Gender);
        assert_eq!(insts[0].options.len(), 2);
    }

    #[test]
    fn pronoun_matching_ignores_embedded_letters() {
        // "he" appears inside "The" and "the"; only the standalone word counts.
        let (off, len) = find_word_span("The teacher said he left.", "he", 0).unwrap();
        assert_eq!(&"The teacher said he left."[off..off + len], "he");
        assert_eq!(off, 17);
    }

    #[test]
    fn occurrence_selects_later_match() {
        let text = "She said she would come.";
        let (off, _) = find_word_span(text, "she", 1).unwrap();
        assert_eq!(off, 9);
    }

    #[test]
    fn missing_pronoun_is_an_error() {
        let f = write_temp(&[
            r#"{"id":"w1","pair_id":"p1","sentence":"The physician hired the secretary.","entities":["the physician","the secretary"],"gold":0,"pronoun":"she"}"#,
        ]);
        let err =
            load_winobias(f.path(), TaskType::Type1, Polarity::Pro, &ExclusionList::empty())
                .unwrap_err();
        assert!(matches!(err, BenchError::MarkerNotFound { .. }));
    }

    #[test]
    fn unrecognised_pronoun_is_an_error() {
        let f = write_temp(&[
            r#"{"id":"w1","pair_id":"p1","sentence":"The dog barked at it.","entities":["the dog","the cat"],"gold":0,"pronoun":"it"}"#,
        ]);
        let err =
            load_winobias(f.path(), TaskType::Type1, Polarity::Pro, &ExclusionList::empty())
                .unwrap_err();
        assert!(matches!(err, BenchError::MarkerNotFound { .. }));
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let f = write_temp(&[
            r#"{"id":"w1","pair_id":"p1","sentence":"The nurse helped him.","entities":["the nurse","the doctor"],"gold":0,"pronoun":"him"}"#,
            r#"{"id":"w2","no_such_schema":true}"#,
        ]);
        let err =
            load_winobias(f.path(), TaskType::Type1, Polarity::Pro, &ExclusionList::empty())
                .unwrap_err();
        match err {
            BenchError::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn pairing_requires_partners_on_both_sides() {
        let mk = |id: &str, pair: &str, pol: Polarity| {
            let f = write_temp(&[&format!(
                r#"{{"id":"{id}","pair_id":"{pair}","sentence":"The nurse helped him.","entities":["the nurse","the doctor"],"gold":0,"pronoun":"him"}}"#
            )]);
            load_winobias(f.path(), TaskType::Type1, pol, &ExclusionList::empty())
                .unwrap()
                .remove(0)
        };
        let pro = vec![mk("a-pro", "p1", Polarity::Pro)];
        let anti = vec![mk("a-anti", "p1", Polarity::Anti)];
        let map = pair_map(&pro, &anti).unwrap();
        assert_eq!(map.len(), 1);

        let orphan = vec![mk("b-pro", "p2", Polarity::Pro)];
        assert!(pair_map(&orphan, &anti).is_err());
    }
}
