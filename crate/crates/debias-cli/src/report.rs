//! Re-emits metric reports from a records file, without touching any model.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

use eval_harness::metrics::{build_report, read_records, render_csv, render_json, Aggregation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ReportFormat {
    Json,
    Csv,
    Both,
}

#[derive(Debug, Clone)]
pub struct ReportArgs {
    pub records: PathBuf,
    pub format: ReportFormat,
    /// Output directory; defaults to the records file's directory.
    pub out: Option<PathBuf>,
    pub aggregation: Aggregation,
}

/// Builds the report and writes the requested renderings.  Returns the paths
/// written, in emission order.
pub fn cmd_report(args: &ReportArgs) -> Result<Vec<PathBuf>> {
    let records = read_records(&args.records)?;
    let report = build_report(&records, args.aggregation)?;
    let dir = args
        .out
        .clone()
        .or_else(|| args.records.parent().map(Path::to_path_buf))
        .unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir)
        .with_context(|| format!("failed to create {}", dir.display()))?;
    let mut written = Vec::new();
    if matches!(args.format, ReportFormat::Json | ReportFormat::Both) {
        let path = dir.join("report.json");
        std::fs::write(&path, render_json(&report))
            .with_context(|| format!("failed to write {}", path.display()))?;
        written.push(path);
    }
    if matches!(args.format, ReportFormat::Csv | ReportFormat::Both) {
        let path = dir.join("report.csv");
        std::fs::write(&path, render_csv(&report)?)
            .with_context(|| format!("failed to write {}", path.display()))?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use eval_harness::bench::{Benchmark, Polarity, SocialCategory, TaskType};
    use eval_harness::metrics::{write_records, EvalRecord};

    fn record(id: &str, polarity: Polarity, correct: bool) -> EvalRecord {
        EvalRecord {
            id: id.to_string(),
            benchmark: Benchmark::Winobias,
            task_type: TaskType::Type1,
            polarity,
            strategy: "default".to_string(),
            model: "mock".to_string(),
            social_category: SocialCategory::Gender,
            demographics: None,
            answer: None,
            base_correct: None,
            final_correct: Some(correct),
            category: None,
            yes_probability: None,
            excluded: false,
        }
    }

    #[test]
    fn both_formats_are_written_next_to_the_records() {
        let dir = tempfile::tempdir().unwrap();
        let records_path = dir.path().join("records.jsonl");
        let records = vec![
            record("a", Polarity::Anti, true),
            record("p", Polarity::Pro, true),
        ];
        write_records(&records_path, &records).unwrap();
        let written = cmd_report(&ReportArgs {
            records: records_path,
            format: ReportFormat::Both,
            out: None,
            aggregation: Aggregation::Mean,
        })
        .unwrap();
        assert_eq!(written.len(), 2);
        assert!(written[0].ends_with("report.json") && written[0].exists());
        assert!(written[1].ends_with("report.csv") && written[1].exists());
        let body = std::fs::read_to_string(&written[1]).unwrap();
        assert!(body.contains("winobias,type1,default,mock,accuracy,anti,100.00"), "{body}");
    }

    #[test]
    fn empty_records_surface_an_empty_denominator() {
        let dir = tempfile::tempdir().unwrap();
        let records_path = dir.path().join("records.jsonl");
        let mut excluded = record("a", Polarity::Anti, true);
        excluded.excluded = true;
        write_records(&records_path, &[excluded]).unwrap();
        let err = cmd_report(&ReportArgs {
            records: records_path,
            format: ReportFormat::Json,
            out: None,
            aggregation: Aggregation::Mean,
        })
        .unwrap_err();
        assert!(format!("{err:#}").contains("denominator"), "{err:#}");
    }
}
