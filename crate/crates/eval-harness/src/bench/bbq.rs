//! Loader for context-question instances: a short disambiguated context
//! mentioning two people, a question, and three answer options (two people
//! plus an "unknown" choice).

use std::path::Path;

use serde::Deserialize;

use super::{
    apply_exclusions, check_unique_ids, Benchmark, BenchmarkInstance, BenchError, ExclusionList,
    MarkerKind, MarkerSpan, Polarity, SocialCategory, TaskType,
};

#[derive(Debug, Deserialize)]
struct RawSpan {
    offset: usize,
    len: usize,
}

#[derive(Debug, Deserialize)]
struct RawEntitySpan {
    offset: usize,
    len: usize,
    entity: u8,
}

#[derive(Debug, Deserialize)]
struct RawLine {
    id: String,
    category: SocialCategory,
    context: String,
    question: String,
    /// The two person options must appear in entity order: the lower-indexed
    /// non-unknown option names entity 1, the higher names entity 2.
    options: [String; 3],
    gold: usize,
    unknown_index: usize,
    context_condition: String,
    /// Mentions of the two candidate people, offsets into
    /// `context + " " + question`.
    entity_spans: Vec<RawEntitySpan>,
    /// Demographic descriptors outside entity mentions, same offset base.
    #[serde(default)]
    demographic_spans: Vec<RawSpan>,
}

fn spans_disjoint(a: (usize, usize), b: (usize, usize)) -> bool {
    a.1 <= b.0 || b.1 <= a.0
}

fn span_inside(inner: (usize, usize), outer: (usize, usize)) -> bool {
    outer.0 <= inner.0 && inner.1 <= outer.1
}

fn convert(raw: RawLine) -> Result<BenchmarkInstance, BenchError> {
    if raw.gold > 2 || raw.unknown_index > 2 {
        return Err(BenchError::InvalidInstance {
            id: raw.id,
            detail: "option indices must be 0..=2".to_string(),
        });
    }
    if raw.gold == raw.unknown_index {
        return Err(BenchError::InvalidInstance {
            id: raw.id,
            detail: "a disambiguated instance cannot have the unknown option as gold".to_string(),
        });
    }
    let text = format!("{} {}", raw.context, raw.question);

    let mut marker_spans = Vec::new();
    let mut entity_ranges = Vec::new();
    let mut saw = [false, false];
    for es in &raw.entity_spans {
        let kind = match es.entity {
            1 => MarkerKind::Entity1,
            2 => MarkerKind::Entity2,
            other => {
                return Err(BenchError::InvalidInstance {
                    id: raw.id,
                    detail: format!("entity span tag {other} must be 1 or 2"),
                })
            }
        };
        saw[(es.entity - 1) as usize] = true;
        entity_ranges.push((es.offset, es.offset + es.len));
        marker_spans.push(MarkerSpan {
            offset: es.offset,
            len: es.len,
            kind,
        });
    }
    if !(saw[0] && saw[1]) {
        return Err(BenchError::MarkerNotFound {
            id: raw.id,
            detail: "both candidate people need at least one annotated mention".to_string(),
        });
    }
    for (i, a) in entity_ranges.iter().enumerate() {
        for b in entity_ranges.iter().skip(i + 1) {
            if !spans_disjoint(*a, *b) {
                return Err(BenchError::InvalidInstance {
                    id: raw.id,
                    detail: format!("entity mentions {a:?} and {b:?} overlap"),
                });
            }
        }
    }
    for ds in &raw.demographic_spans {
        let range = (ds.offset, ds.offset + ds.len);
        let clean = entity_ranges
            .iter()
            .all(|er| spans_disjoint(range, *er) || span_inside(range, *er));
        if !clean {
            return Err(BenchError::InvalidInstance {
                id: raw.id,
                detail: format!(
                    "demographic span {range:?} straddles an entity mention boundary"
                ),
            });
        }
        marker_spans.push(MarkerSpan {
            offset: ds.offset,
            len: ds.len,
            kind: MarkerKind::Demographic,
        });
    }

    let inst = BenchmarkInstance {
        id: raw.id,
        benchmark: Benchmark::Bbq,
        text,
        options: raw.options.to_vec(),
        gold: Some(raw.gold),
        polarity: Polarity::NotApplicable,
        task_type: TaskType::NotApplicable,
        social_category: raw.category,
        marker_spans,
        unknown_index: Some(raw.unknown_index),
        pair_id: None,
        demographics: None,
        base_text: None,
        excluded: false,
        excluded_reason: None,
    };
    inst.validate_spans()?;
    Ok(inst)
}

/// Loads context-question instances, keeping only lines whose
/// `context_condition` is `"disambig"`: only those have a determinable
/// answer, so accuracy is meaningful.
pub fn load_bbq(path: &Path, exclusions: &ExclusionList) -> Result<Vec<BenchmarkInstance>, BenchError> {
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
        match raw.context_condition.as_str() {
            "disambig" => out.push(convert(raw)?),
            "ambig" => continue,
            other => {
                return Err(BenchError::Parse {
                    path: path.display().to_string(),
                    line: lineno + 1,
                    detail: format!("unknown context_condition {other:?}"),
                })
            }
        }
    }
    check_unique_ids(&out)?;
    apply_exclusions(&mut out, exclusions)?;
    Ok(out)
}
