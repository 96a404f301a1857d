//! Prompt construction: social-agnostic base questions, debiasing clause
//! rendering, and the two-stage answer-prepending protocol.

mod base;
mod render;

pub use base::derive_base_question;
pub use render::{
    compose_ddp, plan_chain_of_thought, plan_default, plan_icl, render_strategy,
    resolve_base_answer, IclExample, ResolvedBase,
};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::bench::SocialCategory;
use crate::lexicon::LexiconError;

#[derive(Debug, thiserror::Error)]
pub enum StrategyError {
    #[error("instance {id}: missing annotation: {detail}")]
    MissingAnnotation { id: String, detail: String },
    #[error("instance {id}: cannot derive a social-agnostic question: {detail}")]
    IrreducibleInstance { id: String, detail: String },
    #[error("a strategy spec needs at least one strategy")]
    EmptyStrategySet,
    #[error("counteract_level is only meaningful with strategy II")]
    CounteractWithoutStrategyTwo,
    #[error("counteract level {value}% is outside 0..=100")]
    PercentOutOfRange { value: u8 },
    #[error("the two-stage protocol requires strategy I in the spec")]
    DdpRequiresFactStrategy,
    #[error("strategy II needs two person entities to make assumptions about: {detail}")]
    CounteractNeedsEntities { detail: String },
    #[error("plan still contains unfilled slot {slot}")]
    SlotUnfilled { slot: String },
    #[error("base answer does not fit this instance: {detail}")]
    InvalidBaseAnswer { detail: String },
    #[error(transparent)]
    Lexicon(#[from] LexiconError),
}

/// The three clause families a prompt can carry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Strategy {
    /// Nudge toward a social-agnostic fact ("Considering the fact that ...").
    #[serde(rename = "I")]
    Fact,
    /// Counteract existing selection bias with asserted group splits.
    #[serde(rename = "II")]
    Counteract,
    /// Nudge away from social information ("Do not use ... information").
    #[serde(rename = "III")]
    AvoidSocial,
}

impl Strategy {
    pub fn numeral(&self) -> &'static str {
        match self {
            Strategy::Fact => "I",
            Strategy::Counteract => "II",
            Strategy::AvoidSocial => "III",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.numeral())
    }
}

/// How hard a strategy-II clause pushes against the stereotype: an even
/// either/or assumption, or an explicit percentage split where the level is
/// the share asserted for the second group of the pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CounteractLevel {
    Balanced,
    Percent(u8),
}

impl Serialize for CounteractLevel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            CounteractLevel::Balanced => s.serialize_str("balanced"),
            CounteractLevel::Percent(p) => s.serialize_u8(*p),
        }
    }
}

impl<'de> Deserialize<'de> for CounteractLevel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(u8),
            Tag(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(n) => Ok(CounteractLevel::Percent(n)),
            Repr::Tag(t) if t == "balanced" => Ok(CounteractLevel::Balanced),
            Repr::Tag(t) => Err(serde::de::Error::custom(format!(
                "counteract level must be \"balanced\" or an integer percent, got {t:?}"
            ))),
        }
    }
}

/// Wording family for the strategy-I clause.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FactWording {
    /// "... is more likely to happen in real life than the other sentence ..."
    #[default]
    RealLife,
    /// "... is practically more viable than the sentence ..."
    PracticallyViable,
}

/// Wording family for the balanced strategy-II clause.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CounteractWording {
    /// "X can be either male or female, and Y can also be ..."
    #[default]
    EitherOr,
    /// "Assume male and female are equally represented in Xs and in Ys."
    EquallyRepresented,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategySpec {
    pub strategies: BTreeSet<Strategy>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counteract_level: Option<CounteractLevel>,
    pub social_category: SocialCategory,
    #[serde(default)]
    pub fact_wording: FactWording,
    #[serde(default)]
    pub counteract_wording: CounteractWording,
}

impl StrategySpec {
    pub fn new(
        strategies: impl IntoIterator<Item = Strategy>,
        social_category: SocialCategory,
    ) -> Self {
        StrategySpec {
            strategies: strategies.into_iter().collect(),
            counteract_level: None,
            social_category,
            fact_wording: FactWording::default(),
            counteract_wording: CounteractWording::default(),
        }
    }

    pub fn with_level(mut self, level: CounteractLevel) -> Self {
        self.counteract_level = Some(level);
        self
    }

    pub fn has(&self, s: Strategy) -> bool {
        self.strategies.contains(&s)
    }

    pub fn validate(&self) -> Result<(), StrategyError> {
        if self.strategies.is_empty() {
            return Err(StrategyError::EmptyStrategySet);
        }
        if self.counteract_level.is_some() && !self.has(Strategy::Counteract) {
            return Err(StrategyError::CounteractWithoutStrategyTwo);
        }
        if let Some(CounteractLevel::Percent(p)) = self.counteract_level {
            if p > 100 {
                return Err(StrategyError::PercentOutOfRange { value: p });
            }
        }
        Ok(())
    }

    /// Effective level for strategy-II rendering; defaults to balanced.
    pub fn level(&self) -> CounteractLevel {
        self.counteract_level.unwrap_or(CounteractLevel::Balanced)
    }

    /// Deterministic run label, e.g. "ddp-I+II-balanced" or "static-III".
    pub fn label(&self, two_stage: bool) -> String {
        let mut out = String::from(if two_stage { "ddp-" } else { "static-" });
        let numerals: Vec<&str> = self.strategies.iter().map(|s| s.numeral()).collect();
        out.push_str(&numerals.join("+"));
        if self.has(Strategy::Counteract) {
            match self.level() {
                CounteractLevel::Balanced => out.push_str("-balanced"),
                CounteractLevel::Percent(p) => out.push_str(&format!("-{p}")),
            }
        }
        out
    }
}

/// What kind of social-agnostic reformulation a base question is.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaseQuestionKind {
    /// Which of two resolved sentences is more likely.
    LikelihoodComparison,
    /// The original context question with people renamed Person X / Person Y.
    NeutralizedQa,
    /// The decision scenario with demographic content removed.
    BaseScenario,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaseQuestion {
    pub kind: BaseQuestionKind,
    /// One or two fully resolved, social-agnostic sentences.
    pub candidate_statements: Vec<String>,
    /// The complete question text posed to the model.
    pub question_text: String,
    /// Extraction options for answers to this question.
    pub options: Vec<String>,
    pub allow_equally_likely: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unknown_index: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TurnRole {
    System,
    User,
    /// A scripted assistant turn injected into the conversation (in-context
    /// examples), as opposed to a live model reply.
    AssistantInjected,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanTurn {
    pub role: TurnRole,
    pub text: String,
}

impl PlanTurn {
    pub fn user(text: impl Into<String>) -> Self {
        PlanTurn {
            role: TurnRole::User,
            text: text.into(),
        }
    }
}

/// One conversation the runner sends as a unit, with the extraction options
/// that apply to its final reply.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanStage {
    pub turns: Vec<PlanTurn>,
    pub options: Vec<String>,
    pub allow_equally_likely: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unknown_index: Option<usize>,
}

impl PlanStage {
    /// Errors unless every placeholder has been resolved.
    pub fn ensure_filled(&self) -> Result<(), StrategyError> {
        for turn in &self.turns {
            if let Some(start) = turn.text.find("{{") {
                let rest = &turn.text[start + 2..];
                let name = rest.split("}}").next().unwrap_or(rest);
                return Err(StrategyError::SlotUnfilled {
                    slot: name.to_string(),
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptPlan {
    pub instance_id: String,
    pub strategy_label: String,
    pub stages: Vec<PlanStage>,
    /// Placeholder name -> human description of what fills it.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub slots: BTreeMap<String, String>,
}

impl PromptPlan {
    pub fn ensure_filled(&self) -> Result<(), StrategyError> {
        if let Some(name) = self.slots.keys().next() {
            return Err(StrategyError::SlotUnfilled { slot: name.clone() });
        }
        for stage in &self.stages {
            stage.ensure_filled()?;
        }
        Ok(())
    }
}

/// Name of the placeholder the two-stage protocol fills with the extracted
/// base answer.
pub const BASE_ANSWER_SLOT: &str = "BASE_ANSWER";
