//! Run execution: loads benchmark instances, renders a prompt plan per
//! (instance, strategy), drives the model through the gateway, and writes
//! records, reports, and transcripts under `out/{run-id}/`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use anyhow::{Context, Result};
use serde::Serialize;

use eval_harness::bench::discrim::{
    expand_discrim_eval, filter_base_refusals, load_discrim_templates, BaseDecision, BaseScenario,
};
use eval_harness::bench::winobias::load_winobias;
use eval_harness::bench::{
    apply_exclusions, bbq::load_bbq, Benchmark, BenchmarkInstance, ExclusionList, Polarity,
};
use eval_harness::gateway::{
    match_option, yes_probability_renormalized, AnswerSpace, AnswerValue, Backend, Cache,
    ChatRequest, ChatTurn, ExtractedAnswer, Gateway, GatewayConfig, GatewayError, HttpBackend,
    HttpConfig, MockModel, Role,
};
use eval_harness::lexicon::Lexicons;
use eval_harness::metrics::{
    build_report, render_csv, render_json, write_records, EvalRecord, MetricsReport,
    OutcomeCategory,
};
use eval_harness::strategy::{
    compose_ddp, plan_chain_of_thought, plan_default, plan_icl, render_strategy,
    resolve_base_answer, PlanStage, PlanTurn, PromptPlan, ResolvedBase, Strategy, StrategySpec,
    TurnRole,
};

use crate::config::{BenchmarkConfig, ModelConfig, RunConfig, StrategyConfig};

/// Everything a finished run produced, for callers that want to assert on
/// artifacts without re-reading them from disk.
pub struct RunOutcome {
    pub run_dir: PathBuf,
    pub records: Vec<EvalRecord>,
    pub report: MetricsReport,
    pub report_json: String,
    pub report_csv: String,
}

fn build_gateway(config: &RunConfig) -> Result<Gateway> {
    let cache_path = config.cache_path();
    if let Some(parent) = cache_path.parent() {
        std::fs::create_dir_all(parent)
            .with_context(|| format!("failed to create {}", parent.display()))?;
    }
    let cache = Cache::open(&cache_path)?;
    let backend: Box<dyn Backend> = match &config.model {
        ModelConfig::Mock { fixture, .. } => Box::new(MockModel::from_path(fixture)?),
        ModelConfig::Live {
            base_url,
            path,
            api_key_env,
            ..
        } => {
            let mut http = HttpConfig::default();
            if let Some(u) = base_url {
                http.base_url = u.clone();
            }
            if let Some(p) = path {
                http.path = p.clone();
            }
            if let Some(e) = api_key_env {
                http.api_key_env = e.clone();
            }
            Box::new(HttpBackend::new(http)?)
        }
    };
    Ok(Gateway::new(
        backend,
        cache,
        GatewayConfig {
            concurrency: config.concurrency,
            requests_per_second: config.requests_per_second,
        },
    ))
}

/// Index-pulling parallel map: results land in input order regardless of
/// which worker finished first, so downstream artifacts stay deterministic.
fn parallel_map<T, R, F>(items: &[T], workers: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync,
{
    let workers = workers.clamp(1, items.len().max(1));
    if workers <= 1 {
        return items.iter().map(&f).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<R>>> = items.iter().map(|_| Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= items.len() {
                    break;
                }
                let result = f(&items[i]);
                *slots[i].lock().expect("slot lock") = Some(result);
            });
        }
    });
    slots
        .into_iter()
        .map(|slot| slot.into_inner().expect("slot lock").expect("worker filled slot"))
        .collect()
}

#[derive(Serialize)]
struct TranscriptDoc<'a> {
    instance_id: &'a str,
    strategy: &'a str,
    model: &'a str,
    /// One turn list per stage, including the model's replies.
    stages: &'a [Vec<ChatTurn>],
}

fn write_transcript(dir: &Path, doc: &TranscriptDoc) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("failed to create {}", dir.display()))?;
    let path = dir.join(format!("{}.json", doc.instance_id));
    let body = serde_json::to_string_pretty(doc).expect("transcript serializes");
    std::fs::write(&path, body).with_context(|| format!("failed to write {}", path.display()))?;
    Ok(())
}

fn to_chat_turns(turns: &[PlanTurn]) -> Vec<ChatTurn> {
    turns
        .iter()
        .map(|t| ChatTurn {
            role: match t.role {
                TurnRole::System => Role::System,
                TurnRole::User => Role::User,
                TurnRole::AssistantInjected => Role::Assistant,
            },
            text: t.text.clone(),
        })
        .collect()
}

fn stage_space(stage: &PlanStage) -> AnswerSpace<'_> {
    AnswerSpace {
        options: &stage.options,
        allow_equally_likely: stage.allow_equally_likely,
        unknown_index: stage.unknown_index,
    }
}

fn ask_base_decision(
    gateway: &Gateway,
    model: &str,
    scenario: &BaseScenario,
) -> Result<(BaseDecision, Vec<ChatTurn>), GatewayError> {
    let options = ["Yes".to_string(), "No".to_string()];
    let space = AnswerSpace {
        options: &options,
        allow_equally_likely: false,
        unknown_index: None,
    };
    let turns = vec![ChatTurn::user(scenario.text.clone())];
    let outcome = gateway.iterative_answer(model, &turns, &space)?;
    let decision = match outcome.answer.value {
        AnswerValue::Choice(0) => BaseDecision::Yes,
        AnswerValue::Choice(1) => BaseDecision::No,
        _ => BaseDecision::Refused,
    };
    Ok((decision, outcome.transcript))
}

fn load_instances(
    bench: &BenchmarkConfig,
    gateway: &Gateway,
    model: &str,
    run_dir: &Path,
    workers: usize,
) -> Result<Vec<BenchmarkInstance>> {
    match bench {
        BenchmarkConfig::Winobias {
            task_type,
            pro_path,
            anti_path,
            exclusions,
        } => {
            // One exclusion list covers both polarity files, so exclusions
            // are applied to the combined set rather than per file.
            let none = ExclusionList::empty();
            let mut instances =
                load_winobias(pro_path, *task_type, Polarity::Pro, &none)?;
            instances.extend(load_winobias(anti_path, *task_type, Polarity::Anti, &none)?);
            if let Some(path) = exclusions {
                let list = ExclusionList::load(path)?;
                apply_exclusions(&mut instances, &list)?;
            }
            Ok(instances)
        }
        BenchmarkConfig::Bbq { path, exclusions } => {
            let list = match exclusions {
                Some(p) => ExclusionList::load(p)?,
                None => ExclusionList::empty(),
            };
            Ok(load_bbq(path, &list)?)
        }
        BenchmarkConfig::DiscrimEval { templates } => {
            let templates = load_discrim_templates(templates)?;
            let (mut instances, bases) = expand_discrim_eval(&templates)?;
            // Every grid cell of a scenario whose demographic-free variant
            // is not approved gets excluded before any strategy runs.
            let asked = parallel_map(&bases, workers, |scenario| {
                ask_base_decision(gateway, model, scenario)
                    .with_context(|| format!("base scenario {}", scenario.scenario_id))
            });
            let mut decisions = BTreeMap::new();
            let transcript_dir = run_dir.join("transcripts").join("base");
            for (scenario, outcome) in bases.iter().zip(asked) {
                let (decision, transcript) = outcome?;
                write_transcript(
                    &transcript_dir,
                    &TranscriptDoc {
                        instance_id: &scenario.scenario_id,
                        strategy: "base-scenario",
                        model,
                        stages: &[transcript],
                    },
                )?;
                decisions.insert(scenario.scenario_id.clone(), decision);
            }
            filter_base_refusals(&mut instances, &decisions)?;
            Ok(instances)
        }
    }
}

fn build_plan(
    strategy: &StrategyConfig,
    instance: &BenchmarkInstance,
    lexicons: &Lexicons,
) -> Result<PromptPlan> {
    let plan = match strategy {
        StrategyConfig::Default => plan_default(instance),
        StrategyConfig::ChainOfThought => plan_chain_of_thought(instance),
        StrategyConfig::Icl { examples } => plan_icl(instance, examples),
        StrategyConfig::Clauses { spec } => {
            if spec.has(Strategy::Fact) {
                compose_ddp(instance, spec, lexicons)?
            } else {
                render_strategy(spec, instance, None, lexicons)?
            }
        }
    };
    Ok(plan)
}

fn skeleton_record(instance: &BenchmarkInstance, strategy: &str, model: &str) -> EvalRecord {
    EvalRecord {
        id: instance.id.clone(),
        benchmark: instance.benchmark,
        task_type: instance.task_type,
        polarity: instance.polarity,
        strategy: strategy.to_string(),
        model: model.to_string(),
        social_category: instance.social_category,
        demographics: instance.demographics.clone(),
        answer: None,
        base_correct: None,
        final_correct: None,
        category: None,
        yes_probability: None,
        excluded: instance.excluded,
    }
}

/// Grades a final-stage answer against the instance's gold index, when one
/// exists.  Refusals have no grade.
fn grade(instance: &BenchmarkInstance, value: AnswerValue) -> Option<bool> {
    let gold = instance.gold?;
    match value {
        AnswerValue::Choice(i) => Some(i == gold),
        AnswerValue::UnknownOption => Some(instance.unknown_index == Some(gold)),
        AnswerValue::EquallyLikely | AnswerValue::Refusal => None,
    }
}

enum BaseOutcome {
    Resolved(ResolvedBase, Option<bool>),
    /// The model saw the two candidates as equally likely; the instance has
    /// no usable base answer, so it leaves the denominator.
    Undecidable,
    Refused,
}

fn map_base_answer(
    instance: &BenchmarkInstance,
    stage: &PlanStage,
    value: AnswerValue,
) -> BaseOutcome {
    match instance.benchmark {
        Benchmark::Winobias => match value {
            AnswerValue::Choice(i) => {
                BaseOutcome::Resolved(ResolvedBase::Option(i), instance.gold.map(|g| g == i))
            }
            AnswerValue::EquallyLikely => BaseOutcome::Undecidable,
            _ => BaseOutcome::Refused,
        },
        Benchmark::Bbq => {
            let index = match value {
                AnswerValue::Choice(i) => Some(i),
                AnswerValue::UnknownOption => stage.unknown_index,
                _ => None,
            };
            match index {
                Some(i) => {
                    BaseOutcome::Resolved(ResolvedBase::Option(i), instance.gold.map(|g| g == i))
                }
                None => BaseOutcome::Refused,
            }
        }
        Benchmark::DiscrimEval => match value {
            AnswerValue::Choice(0) => BaseOutcome::Resolved(ResolvedBase::Decision(true), None),
            AnswerValue::Choice(1) => BaseOutcome::Resolved(ResolvedBase::Decision(false), None),
            _ => BaseOutcome::Refused,
        },
    }
}

fn clause_spec(strategy: &StrategyConfig) -> Option<&StrategySpec> {
    match strategy {
        StrategyConfig::Clauses { spec } => Some(spec),
        _ => None,
    }
}

fn process_instance(
    gateway: &Gateway,
    model: &str,
    strategy: &StrategyConfig,
    label: &str,
    instance: &BenchmarkInstance,
    lexicons: &Lexicons,
) -> Result<(EvalRecord, Vec<Vec<ChatTurn>>)> {
    let mut record = skeleton_record(instance, label, model);
    if instance.excluded {
        return Ok((record, Vec::new()));
    }
    let plan = build_plan(strategy, instance, lexicons)
        .with_context(|| format!("instance {}", instance.id))?;

    let mut stages: Vec<Vec<ChatTurn>> = Vec::new();
    let final_stage = if plan.stages.len() > 1 {
        let stage = &plan.stages[0];
        let outcome = gateway
            .iterative_answer(model, &to_chat_turns(&stage.turns), &stage_space(stage))
            .with_context(|| format!("instance {} base question", instance.id))?;
        stages.push(outcome.transcript);
        let resolved = match map_base_answer(instance, stage, outcome.answer.value) {
            BaseOutcome::Resolved(resolved, correct) => {
                record.base_correct = correct;
                resolved
            }
            BaseOutcome::Undecidable => {
                record.answer = Some(outcome.answer);
                record.excluded = true;
                return Ok((record, stages));
            }
            BaseOutcome::Refused => {
                record.answer = Some(outcome.answer);
                return Ok((record, stages));
            }
        };
        let spec = clause_spec(strategy).expect("multi-stage plans come from clause specs");
        let plan = resolve_base_answer(&plan, spec, instance, resolved, lexicons)
            .with_context(|| format!("instance {}", instance.id))?;
        plan.stages.last().expect("plan has stages").clone()
    } else {
        plan.stages[0].clone()
    };

    match instance.benchmark {
        Benchmark::Winobias | Benchmark::Bbq => {
            let outcome = gateway
                .iterative_answer(
                    model,
                    &to_chat_turns(&final_stage.turns),
                    &stage_space(&final_stage),
                )
                .with_context(|| format!("instance {}", instance.id))?;
            stages.push(outcome.transcript);
            record.final_correct = grade(instance, outcome.answer.value);
            record.answer = Some(outcome.answer);
        }
        Benchmark::DiscrimEval => {
            let turns = to_chat_turns(&final_stage.turns);
            let request = ChatRequest::evaluation(model, turns.clone()).with_logprobs();
            let response = gateway
                .complete(&request)
                .with_context(|| format!("instance {}", instance.id))?;
            let mut transcript = turns;
            transcript.push(ChatTurn::assistant(response.text.clone()));
            stages.push(transcript);
            let value = match_option(&response.text, &stage_space(&final_stage))
                .unwrap_or(AnswerValue::Refusal);
            record.yes_probability = match yes_probability_renormalized(&response) {
                Ok(p) => Some(p),
                Err(GatewayError::YesTokenAbsent | GatewayError::LogprobsMissing) => None,
                Err(e) => {
                    return Err(e).with_context(|| format!("instance {}", instance.id));
                }
            };
            record.answer = Some(ExtractedAnswer {
                value,
                raw_final: response.text,
                rounds_used: 1,
                attempts: 1,
            });
        }
    }
    record.category = record
        .base_correct
        .zip(record.final_correct)
        .map(|(b, f)| OutcomeCategory::from_bits(b, f));
    Ok((record, stages))
}

/// Executes the whole run.  Records accumulate in deterministic order
/// (benchmarks, then strategies, then instances, all in declared order) and
/// are flushed to `records.jsonl` after every group, so an aborted run
/// leaves its completed work on disk.
pub fn cmd_run(config: &RunConfig) -> Result<RunOutcome> {
    config.validate()?;
    let run_dir = config.run_dir();
    std::fs::create_dir_all(run_dir.join("transcripts"))
        .with_context(|| format!("failed to create {}", run_dir.display()))?;
    let gateway = build_gateway(config)?;
    let model = config.model.name();
    let owned_lexicons;
    let lexicons: &Lexicons = match &config.lexicons {
        Some(path) => {
            owned_lexicons = Lexicons::load(path)?;
            &owned_lexicons
        }
        None => Lexicons::builtin(),
    };

    let records_path = run_dir.join("records.jsonl");
    let mut records: Vec<EvalRecord> = Vec::new();
    for bench in &config.benchmarks {
        let instances = load_instances(bench, &gateway, model, &run_dir, config.concurrency)?;
        for strategy in &config.strategies {
            let label = strategy.label();
            let outcomes = parallel_map(&instances, config.concurrency, |instance| {
                process_instance(&gateway, model, strategy, &label, instance, lexicons)
            });
            let transcript_dir = run_dir.join("transcripts").join(&label);
            for outcome in outcomes {
                match outcome {
                    Ok((record, stages)) => {
                        if !stages.is_empty() {
                            write_transcript(
                                &transcript_dir,
                                &TranscriptDoc {
                                    instance_id: &record.id,
                                    strategy: &label,
                                    model,
                                    stages: &stages,
                                },
                            )?;
                        }
                        records.push(record);
                    }
                    Err(e) => {
                        write_records(&records_path, &records)?;
                        return Err(e);
                    }
                }
            }
            write_records(&records_path, &records)?;
        }
    }

    let report = build_report(&records, config.aggregation)?;
    let report_json = render_json(&report);
    let report_csv = render_csv(&report)?;
    std::fs::write(run_dir.join("report.json"), &report_json)?;
    std::fs::write(run_dir.join("report.csv"), &report_csv)?;
    Ok(RunOutcome {
        run_dir,
        records,
        report,
        report_json,
        report_csv,
    })
}
