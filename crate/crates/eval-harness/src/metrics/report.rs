//! Aggregated report construction and its JSON/CSV renderings.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bench::{Benchmark, Polarity, SocialCategory};

use super::{
    accuracy_gap, categorize, relative_gap, Aggregation, CategoryShare, EvalRecord, MetricsError,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Counts {
    pub total: usize,
    pub included: usize,
    pub excluded: usize,
    pub refused: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoreferenceMetrics {
    pub anti_accuracy: f64,
    pub pro_accuracy: f64,
    pub gap: f64,
    pub gap_abs: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub categories: Option<BTreeMap<Polarity, CategoryShare>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QaMetrics {
    pub overall_accuracy: f64,
    /// Accuracy per social category, keyed by display name so iteration
    /// yields the standard column order.
    pub by_category: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionAxis {
    /// Aggregated Yes probability per demographic value.
    pub yes_probability: BTreeMap<String, f64>,
    pub relative_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionMetrics {
    pub axes: BTreeMap<String, DecisionAxis>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Section {
    pub counts: Counts,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coreference: Option<CoreferenceMetrics>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qa: Option<QaMetrics>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decision: Option<DecisionMetrics>,
}

/// The full report: one section per (benchmark, task type, strategy, model)
/// combination present in the records.  Pure data; renderings are separate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub aggregation: Aggregation,
    pub sections: BTreeMap<String, Section>,
}

#[derive(PartialEq, Eq, PartialOrd, Ord)]
struct SectionKey {
    benchmark: Benchmark,
    task_type: crate::bench::TaskType,
    strategy: String,
    model: String,
}

impl SectionKey {
    fn label(&self) -> String {
        format!(
            "{}/{}/{}/{}",
            self.benchmark, self.task_type, self.strategy, self.model
        )
    }
}

fn counts_of(records: &[EvalRecord]) -> Counts {
    let excluded = records.iter().filter(|r| r.excluded).count();
    let refused = records.iter().filter(|r| r.refused()).count();
    Counts {
        total: records.len(),
        included: records.len() - excluded - refused,
        excluded,
        refused,
    }
}

fn coreference_section(
    label: &str,
    records: Vec<EvalRecord>,
) -> Result<CoreferenceMetrics, MetricsError> {
    let summary = accuracy_gap(&records).map_err(|e| match e {
        MetricsError::EmptyDenominator { section } => MetricsError::EmptyDenominator {
            section: format!("{label}/{section}"),
        },
        other => other,
    })?;
    let has_base = records
        .iter()
        .filter(|r| r.counted())
        .all(|r| r.base_correct.is_some());
    let categories = if has_base {
        let (_, table) = categorize(records)?;
        Some(table)
    } else {
        None
    };
    Ok(CoreferenceMetrics {
        anti_accuracy: summary.anti_accuracy,
        pro_accuracy: summary.pro_accuracy,
        gap: summary.gap,
        gap_abs: summary.gap_abs,
        categories,
    })
}

fn qa_section(label: &str, records: &[EvalRecord]) -> Result<QaMetrics, MetricsError> {
    let counted: Vec<&EvalRecord> = records.iter().filter(|r| r.counted()).collect();
    if counted.is_empty() {
        return Err(MetricsError::EmptyDenominator {
            section: label.to_string(),
        });
    }
    let accuracy = |rs: &[&EvalRecord]| {
        100.0 * rs.iter().filter(|r| r.final_correct == Some(true)).count() as f64
            / rs.len() as f64
    };
    let mut by_category = BTreeMap::new();
    for category in SocialCategory::report_columns() {
        let members: Vec<&EvalRecord> = counted
            .iter()
            .filter(|r| r.social_category == category)
            .copied()
            .collect();
        if !members.is_empty() {
            by_category.insert(category.display_name().to_string(), accuracy(&members));
        }
    }
    Ok(QaMetrics {
        overall_accuracy: accuracy(&counted),
        by_category,
    })
}

fn decision_section(
    label: &str,
    records: &[EvalRecord],
    aggregation: Aggregation,
) -> Result<DecisionMetrics, MetricsError> {
    let counted: Vec<&EvalRecord> = records
        .iter()
        .filter(|r| r.counted() && r.yes_probability.is_some() && r.demographics.is_some())
        .collect();
    if counted.is_empty() {
        return Err(MetricsError::EmptyDenominator {
            section: label.to_string(),
        });
    }
    let mut axes = BTreeMap::new();
    for axis in ["age", "gender", "race"] {
        let mut groups: BTreeMap<String, Vec<f64>> = BTreeMap::new();
        for record in &counted {
            let demo = record.demographics.as_ref().expect("filtered");
            let value = match axis {
                "age" => demo.age.to_string(),
                "gender" => demo.gender.clone(),
                _ => demo.race.clone(),
            };
            groups
                .entry(value)
                .or_default()
                .push(record.yes_probability.expect("filtered"));
        }
        let yes_probability: BTreeMap<String, f64> = groups
            .into_iter()
            .map(|(value, mut probs)| (value, aggregation.apply(&mut probs)))
            .collect();
        let gap = relative_gap(&yes_probability)?;
        axes.insert(
            axis.to_string(),
            DecisionAxis {
                yes_probability,
                relative_gap: gap,
            },
        );
    }
    Ok(DecisionMetrics { axes })
}

/// Aggregates records into a report.  Sections appear only for record
/// combinations that exist; a section whose denominator would be empty is an
/// error rather than a zero-filled row.
pub fn build_report(
    records: &[EvalRecord],
    aggregation: Aggregation,
) -> Result<MetricsReport, MetricsError> {
    let mut grouped: BTreeMap<SectionKey, Vec<EvalRecord>> = BTreeMap::new();
    for record in records {
        let key = SectionKey {
            benchmark: record.benchmark,
            task_type: record.task_type,
            strategy: record.strategy.clone(),
            model: record.model.clone(),
        };
        grouped.entry(key).or_default().push(record.clone());
    }
    let mut sections = BTreeMap::new();
    for (key, group) in grouped {
        let label = key.label();
        let counts = counts_of(&group);
        let mut section = Section {
            counts,
            coreference: None,
            qa: None,
            decision: None,
        };
        match key.benchmark {
            Benchmark::Winobias => {
                section.coreference = Some(coreference_section(&label, group)?);
            }
            Benchmark::Bbq => {
                section.qa = Some(qa_section(&label, &group)?);
            }
            Benchmark::DiscrimEval => {
                section.decision = Some(decision_section(&label, &group, aggregation)?);
            }
        }
        sections.insert(label, section);
    }
    Ok(MetricsReport {
        aggregation,
        sections,
    })
}

/// Canonical JSON rendering: pretty-printed, sorted keys, full precision.
pub fn render_json(report: &MetricsReport) -> String {
    let mut out = serde_json::to_string_pretty(report).expect("report serializes");
    out.push('\n');
    out
}

fn split_label(label: &str) -> [&str; 4] {
    let mut parts = label.splitn(4, '/');
    [
        parts.next().unwrap_or(""),
        parts.next().unwrap_or(""),
        parts.next().unwrap_or(""),
        parts.next().unwrap_or(""),
    ]
}

/// Flat CSV rendering with two-decimal values:
/// `benchmark,task_type,strategy,model,metric,key,value`.
pub fn render_csv(report: &MetricsReport) -> Result<String, MetricsError> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(["benchmark", "task_type", "strategy", "model", "metric", "key", "value"])?;
    for (label, section) in &report.sections {
        let [benchmark, task_type, strategy, model] = split_label(label);
        let mut row = |metric: &str, key: &str, value: String| {
            writer.write_record([benchmark, task_type, strategy, model, metric, key, &value])
        };
        let c = section.counts;
        row("count", "total", c.total.to_string())?;
        row("count", "included", c.included.to_string())?;
        row("count", "excluded", c.excluded.to_string())?;
        row("count", "refused", c.refused.to_string())?;
        if let Some(coref) = &section.coreference {
            row("accuracy", "anti", format!("{:.2}", coref.anti_accuracy))?;
            row("accuracy", "pro", format!("{:.2}", coref.pro_accuracy))?;
            row("gap", "abs", format!("{:.2}", coref.gap_abs))?;
            if let Some(categories) = &coref.categories {
                for (polarity, share) in categories {
                    for (cell, value) in [
                        ("TT", share.tt),
                        ("TF", share.tf),
                        ("FT", share.ft),
                        ("FF", share.ff),
                    ] {
                        row(
                            "category_pct",
                            &format!("{polarity}/{cell}"),
                            format!("{value:.2}"),
                        )?;
                    }
                }
            }
        }
        if let Some(qa) = &section.qa {
            row("accuracy", "overall", format!("{:.2}", qa.overall_accuracy))?;
            for (category, value) in &qa.by_category {
                row("accuracy", category, format!("{value:.2}"))?;
            }
        }
        if let Some(decision) = &section.decision {
            for (axis, metrics) in &decision.axes {
                for (value, prob) in &metrics.yes_probability {
                    row(
                        "yes_probability",
                        &format!("{axis}/{value}"),
                        format!("{prob:.2}"),
                    )?;
                }
                row("relative_gap", axis, format!("{:.2}", metrics.relative_gap))?;
            }
        }
    }
    let bytes = writer.into_inner().map_err(|e| MetricsError::InvalidRecords {
        detail: e.to_string(),
    })?;
    String::from_utf8(bytes).map_err(|e| MetricsError::InvalidRecords {
        detail: e.to_string(),
    })
}

/// Writes records as JSONL, one record per line, in the given order.
pub fn write_records(path: &Path, records: &[EvalRecord]) -> Result<(), MetricsError> {
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    for record in records {
        let line = serde_json::to_string(record).map_err(|e| MetricsError::InvalidRecords {
            detail: e.to_string(),
        })?;
        writeln!(file, "{line}")?;
    }
    file.flush()?;
    Ok(())
}

pub fn read_records(path: &Path) -> Result<Vec<EvalRecord>, MetricsError> {
    let reader = BufReader::new(std::fs::File::open(path)?);
    let mut records = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line).map_err(|e| MetricsError::InvalidRecords {
            detail: format!("{} line {}: {e}", path.display(), lineno + 1),
        })?;
        records.push(record);
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::TaskType;
    use crate::gateway::AnswerValue;
    use crate::metrics::tests::record;

    /// Marginals chosen to render 94.57 anti accuracy and a 2.17 gap at two
    /// decimals: 87/92 anti correct, 89/92 pro correct.
    fn synthetic_gap_records() -> Vec<EvalRecord> {
        let mut records = Vec::new();
        for i in 0..92 {
            records.push(record(
                &format!("anti-{i}"),
                Polarity::Anti,
                Some(i < 87),
                AnswerValue::Choice(0),
            ));
            records.push(record(
                &format!("pro-{i}"),
                Polarity::Pro,
                Some(i < 89),
                AnswerValue::Choice(0),
            ));
        }
        records
    }

    #[test]
    fn csv_renders_two_decimal_accuracy_and_gap() {
        let report = build_report(&synthetic_gap_records(), Aggregation::Mean).unwrap();
        let csv = render_csv(&report).unwrap();
        assert!(
            csv.contains("winobias,type1,default,mock,accuracy,anti,94.57"),
            "{csv}"
        );
        assert!(
            csv.contains("winobias,type1,default,mock,gap,abs,2.17"),
            "{csv}"
        );
    }

    #[test]
    fn json_rendering_is_deterministic() {
        let records = synthetic_gap_records();
        let a = render_json(&build_report(&records, Aggregation::Mean).unwrap());
        let b = render_json(&build_report(&records, Aggregation::Mean).unwrap());
        assert_eq!(a, b);
        assert!(a.contains("\"anti_accuracy\": 94.56521739130434"), "{a}");
    }

    #[test]
    fn counts_identity_holds() {
        let mut records = synthetic_gap_records();
        records[0].excluded = true;
        records[1] = record("r", Polarity::Anti, None, AnswerValue::Refusal);
        let report = build_report(&records, Aggregation::Mean).unwrap();
        let section = report.sections.values().next().unwrap();
        let c = section.counts;
        assert_eq!(c.total, c.included + c.excluded + c.refused);
        assert_eq!(c.excluded, 1);
        assert_eq!(c.refused, 1);
    }

    #[test]
    fn sections_exist_only_for_present_combinations() {
        let report = build_report(&synthetic_gap_records(), Aggregation::Mean).unwrap();
        assert_eq!(report.sections.len(), 1);
        let section = report.sections.get("winobias/type1/default/mock").unwrap();
        assert!(section.qa.is_none());
        assert!(section.decision.is_none());
        assert!(section.coreference.is_some());
    }

    #[test]
    fn category_table_appears_when_base_bits_are_present() {
        let mut records = synthetic_gap_records();
        for r in &mut records {
            r.base_correct = Some(true);
        }
        let report = build_report(&records, Aggregation::Mean).unwrap();
        let coref = report
            .sections
            .values()
            .next()
            .unwrap()
            .coreference
            .as_ref()
            .unwrap();
        let table = coref.categories.as_ref().unwrap();
        let anti = table[&Polarity::Anti];
        assert!((anti.tt + anti.tf + anti.ft + anti.ff - 100.0).abs() < 1e-9);
        let csv = render_csv(&report).unwrap();
        assert!(csv.contains("category_pct,anti/TT"), "{csv}");
    }

    #[test]
    fn decision_records_produce_axes_and_gaps() {
        use crate::bench::Demographics;
        let mut records = Vec::new();
        let mut n = 0;
        for age in [20u32, 30] {
            for (gi, gender) in ["male", "female"].iter().enumerate() {
                let mut r = record(
                    &format!("d{n}"),
                    Polarity::NotApplicable,
                    None,
                    AnswerValue::Choice(0),
                );
                r.benchmark = Benchmark::DiscrimEval;
                r.task_type = TaskType::NotApplicable;
                r.social_category = SocialCategory::AnyDemographic;
                r.demographics = Some(Demographics {
                    age,
                    gender: gender.to_string(),
                    race: "white".to_string(),
                });
                r.yes_probability = Some(if gi == 0 { 0.6 } else { 0.9 });
                records.push(r);
                n += 1;
            }
        }
        let report = build_report(&records, Aggregation::Mean).unwrap();
        let section = report
            .sections
            .get("discrim_eval/na/default/mock")
            .unwrap();
        let decision = section.decision.as_ref().unwrap();
        let gender_axis = &decision.axes["gender"];
        assert!((gender_axis.yes_probability["male"] - 0.6).abs() < 1e-12);
        assert!((gender_axis.yes_probability["female"] - 0.9).abs() < 1e-12);
        assert!((gender_axis.relative_gap - 1.0 / 3.0).abs() < 1e-12);
        assert!((decision.axes["age"].relative_gap - 0.0).abs() < 1e-12);
    }

    #[test]
    fn bbq_category_columns_use_display_names() {
        let mut records = Vec::new();
        for (i, category) in SocialCategory::report_columns().iter().enumerate() {
            let mut r = record(
                &format!("b{i}"),
                Polarity::NotApplicable,
                Some(i % 2 == 0),
                AnswerValue::Choice(0),
            );
            r.benchmark = Benchmark::Bbq;
            r.task_type = TaskType::NotApplicable;
            r.social_category = *category;
            records.push(r);
        }
        let report = build_report(&records, Aggregation::Mean).unwrap();
        let qa = report
            .sections
            .get("bbq/na/default/mock")
            .unwrap()
            .qa
            .as_ref()
            .unwrap();
        assert_eq!(qa.by_category.len(), 9);
        let columns: Vec<&String> = qa.by_category.keys().collect();
        assert_eq!(columns[0], "Age");
        assert_eq!(columns[8], "Sexual Orientation");
    }

    #[test]
    fn records_round_trip_through_jsonl() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("records.jsonl");
        let records = synthetic_gap_records();
        write_records(&path, &records).unwrap();
        let loaded = read_records(&path).unwrap();
        assert_eq!(records, loaded);
    }
}
