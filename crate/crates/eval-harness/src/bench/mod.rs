//! Benchmark corpora: canonical instance type, exclusion lists, and loaders
//! for the three supported dataset shapes.

pub mod bbq;
pub mod discrim;
pub mod winobias;

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error in {path} line {line}: {detail}")]
    Parse {
        path: String,
        line: usize,
        detail: String,
    },
    #[error("duplicate instance id {id}")]
    DuplicateId { id: String },
    #[error("instance {id}: marker not found: {detail}")]
    MarkerNotFound { id: String, detail: String },
    #[error("unknown social category {value:?} in {path} line {line}")]
    UnknownCategory {
        value: String,
        path: String,
        line: usize,
    },
    #[error("instance {id}: {detail}")]
    InvalidInstance { id: String, detail: String },
    #[error("exclusion list names unknown instance id {id}")]
    UnresolvedExclusion { id: String },
    #[error("template {template}: missing slot {slot}")]
    SlotMissing { template: String, slot: String },
    #[error("template {template}: {detail}")]
    BadTemplate { template: String, detail: String },
    #[error("base answer set does not match scenarios: {detail}")]
    BaseAnswerMismatch { detail: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Benchmark {
    Winobias,
    Bbq,
    DiscrimEval,
}

impl fmt::Display for Benchmark {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Benchmark::Winobias => "winobias",
            Benchmark::Bbq => "bbq",
            Benchmark::DiscrimEval => "discrim_eval",
        };
        f.write_str(s)
    }
}

/// Whether the correct resolution of a coreference instance agrees with
/// (`Pro`) or contradicts (`Anti`) the occupational stereotype.  Instances
/// without a stereotype pairing carry `NotApplicable`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Polarity {
    Pro,
    Anti,
    #[serde(rename = "na")]
    NotApplicable,
}

impl fmt::Display for Polarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Polarity::Pro => "pro",
            Polarity::Anti => "anti",
            Polarity::NotApplicable => "na",
        };
        f.write_str(s)
    }
}

/// Coreference instance family.  Type 1 instances are resolvable only
/// through world knowledge; type 2 instances carry syntactic cues.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskType {
    Type1,
    Type2,
    #[serde(rename = "na")]
    NotApplicable,
}

impl fmt::Display for TaskType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            TaskType::Type1 => "type1",
            TaskType::Type2 => "type2",
            TaskType::NotApplicable => "na",
        };
        f.write_str(s)
    }
}

/// The social dimension an instance probes.  `AnyDemographic` marks
/// instances that vary several dimensions at once (the decision-question
/// grid varies age, gender, and race together).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SocialCategory {
    #[serde(alias = "Age")]
    Age,
    #[serde(alias = "Disability_status")]
    Disability,
    #[serde(alias = "Gender_identity")]
    Gender,
    #[serde(alias = "Nationality")]
    Nationality,
    #[serde(alias = "Physical_appearance")]
    PhysicalAppearance,
    #[serde(alias = "Race_ethnicity")]
    Race,
    #[serde(alias = "Religion")]
    Religion,
    #[serde(alias = "SES")]
    Ses,
    #[serde(alias = "Sexual_orientation")]
    SexualOrientation,
    #[serde(rename = "demographic")]
    AnyDemographic,
}

impl SocialCategory {
    /// Human-readable name used as a report column header.
    pub fn display_name(&self) -> &'static str {
        match self {
            SocialCategory::Age => "Age",
            SocialCategory::Disability => "Disability Status",
            SocialCategory::Gender => "Gender Identity",
            SocialCategory::Nationality => "Nationality",
            SocialCategory::PhysicalAppearance => "Physical Appearance",
            SocialCategory::Race => "Race Ethnicity",
            SocialCategory::Religion => "Religion",
            SocialCategory::Ses => "SES",
            SocialCategory::SexualOrientation => "Sexual Orientation",
            SocialCategory::AnyDemographic => "Demographic",
        }
    }

    /// The nine single-dimension categories, in report column order.
    pub fn report_columns() -> [SocialCategory; 9] {
        [
            SocialCategory::Age,
            SocialCategory::Disability,
            SocialCategory::Gender,
            SocialCategory::Nationality,
            SocialCategory::PhysicalAppearance,
            SocialCategory::Race,
            SocialCategory::Religion,
            SocialCategory::Ses,
            SocialCategory::SexualOrientation,
        ]
    }
}

impl fmt::Display for SocialCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.display_name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MarkerKind {
    /// The target pronoun of a coreference instance.
    Pronoun,
    /// Mention of the first candidate entity.
    Entity1,
    /// Mention of the second candidate entity.
    Entity2,
    /// A demographic descriptor outside any entity mention.
    Demographic,
}

/// Byte range in `BenchmarkInstance::text` carrying social information.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MarkerSpan {
    pub offset: usize,
    pub len: usize,
    pub kind: MarkerKind,
}

impl MarkerSpan {
    pub fn slice<'t>(&self, text: &'t str) -> &'t str {
        &text[self.offset..self.offset + self.len]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Demographics {
    pub age: u32,
    pub gender: String,
    pub race: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkInstance {
    pub id: String,
    pub benchmark: Benchmark,
    /// Full natural-language body: the sentence, or context plus question.
    pub text: String,
    /// Answer options in canonical order.  For coreference pairs these are
    /// the two entity phrases; for context questions three choices; for
    /// yes/no decisions `["Yes", "No"]`.
    pub options: Vec<String>,
    /// Index into `options` of the correct answer, when one exists.
    pub gold: Option<usize>,
    pub polarity: Polarity,
    pub task_type: TaskType,
    pub social_category: SocialCategory,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub marker_spans: Vec<MarkerSpan>,
    /// Index into `options` of the "cannot be determined" choice, when the
    /// option set has one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unknown_index: Option<usize>,
    /// Links instances generated from one template: the pro and anti
    /// variants of a coreference pair, or the grid cells of one scenario.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pair_id: Option<String>,
    /// Demographic cell of a grid-expanded instance.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub demographics: Option<Demographics>,
    /// Demographic-free variant of `text`, when the instance was generated
    /// from a template that defines one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_text: Option<String>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub excluded: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub excluded_reason: Option<ExclusionReason>,
}

impl BenchmarkInstance {
    pub fn spans_of(&self, kind: MarkerKind) -> impl Iterator<Item = &MarkerSpan> {
        self.marker_spans.iter().filter(move |s| s.kind == kind)
    }

    fn validate_spans(&self) -> Result<(), BenchError> {
        for span in &self.marker_spans {
            let end = span.offset.checked_add(span.len);
            let ok = end.is_some_and(|e| {
                e <= self.text.len()
                    && self.text.is_char_boundary(span.offset)
                    && self.text.is_char_boundary(e)
            });
            if !ok {
                return Err(BenchError::InvalidInstance {
                    id: self.id.clone(),
                    detail: format!(
                        "marker span {}+{} out of bounds for text of length {}",
                        span.offset,
                        span.len,
                        self.text.len()
                    ),
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExclusionReason {
    /// Human raters could not agree on the intended answer.
    AmbiguousHumanEval,
    /// The model declined to answer in a prior run.
    Refusal,
    /// The demographic-free variant of the scenario was not approved.
    BaseScenarioRefused,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExclusionEntry {
    pub id: String,
    pub reason: ExclusionReason,
}

/// Instances dropped from metric denominators, with the reason recorded.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExclusionList {
    pub entries: Vec<ExclusionEntry>,
}

impl ExclusionList {
    pub fn empty() -> Self {
        ExclusionList::default()
    }

    pub fn from_entries(entries: Vec<ExclusionEntry>) -> Result<Self, BenchError> {
        let mut seen = BTreeSet::new();
        for e in &entries {
            if !seen.insert(e.id.as_str()) {
                return Err(BenchError::DuplicateId { id: e.id.clone() });
            }
        }
        Ok(ExclusionList { entries })
    }

    pub fn load(path: &Path) -> Result<Self, BenchError> {
        let body = std::fs::read_to_string(path).map_err(|source| BenchError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let list: ExclusionList =
            serde_json::from_str(&body).map_err(|e| BenchError::Parse {
                path: path.display().to_string(),
                line: e.line(),
                detail: e.to_string(),
            })?;
        ExclusionList::from_entries(list.entries)
    }

    pub fn reason_for(&self, id: &str) -> Option<ExclusionReason> {
        self.entries.iter().find(|e| e.id == id).map(|e| e.reason)
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Every listed id must name a loaded instance; a stale entry is an error.
    pub fn check_resolved<'a, I>(&self, known_ids: I) -> Result<(), BenchError>
    where
        I: IntoIterator<Item = &'a str>,
    {
        let known: BTreeSet<&str> = known_ids.into_iter().collect();
        for e in &self.entries {
            if !known.contains(e.id.as_str()) {
                return Err(BenchError::UnresolvedExclusion { id: e.id.clone() });
            }
        }
        Ok(())
    }
}

/// Stamps exclusion flags onto loaded instances and checks that every
/// exclusion entry resolved to a real id.
pub fn apply_exclusions(
    instances: &mut [BenchmarkInstance],
    exclusions: &ExclusionList,
) -> Result<(), BenchError> {
    exclusions.check_resolved(instances.iter().map(|i| i.id.as_str()))?;
    for inst in instances.iter_mut() {
        if let Some(reason) = exclusions.reason_for(&inst.id) {
            inst.excluded = true;
            inst.excluded_reason = Some(reason);
        }
    }
    Ok(())
}

fn check_unique_ids(instances: &[BenchmarkInstance]) -> Result<(), BenchError> {
    let mut seen = BTreeSet::new();
    for inst in instances {
        if !seen.insert(inst.id.as_str()) {
            return Err(BenchError::DuplicateId {
                id: inst.id.clone(),
            });
        }
    }
    Ok(())
}

/// Serializes instances one JSON object per line, in input order.
pub fn write_jsonl(instances: &[BenchmarkInstance]) -> String {
    let mut out = String::new();
    for inst in instances {
        out.push_str(&serde_json::to_string(inst).expect("instance serializes"));
        out.push('\n');
    }
    out
}

/// Reads instances from the canonical one-object-per-line form produced by
/// [`write_jsonl`], revalidating ids and marker spans.
pub fn read_jsonl(body: &str, origin: &str) -> Result<Vec<BenchmarkInstance>, BenchError> {
    let mut out = Vec::new();
    for (lineno, line) in body.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let inst: BenchmarkInstance =
            serde_json::from_str(line).map_err(|e| BenchError::Parse {
                path: origin.to_string(),
                line: lineno + 1,
                detail: e.to_string(),
            })?;
        inst.validate_spans()?;
        out.push(inst);
    }
    check_unique_ids(&out)?;
    Ok(out)
}
