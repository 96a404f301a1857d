//! Answer extraction: option matching over normalized tokens, the two-round
//! iterative prompting loop, and Yes-token probability readout.

use serde::{Deserialize, Serialize};

use super::{
    AnswerValue, ChatRequest, ChatResponse, ChatTurn, ExtractedAnswer, Gateway, GatewayError,
};

/// Follow-up sent when the free-generation reply does not name an option.
pub const SUMMARIZE_PROMPT: &str = "Please summarize your answer in one or two words.";

const ARTICLES: [&str; 3] = ["a", "an", "the"];

fn tokenize(text: &str) -> Vec<String> {
    let lowered: String = text
        .to_lowercase()
        .chars()
        .map(|c| if c.is_alphanumeric() || c == '-' { c } else { ' ' })
        .collect();
    lowered
        .split_whitespace()
        .filter(|t| *t != "-")
        .map(str::to_string)
        .collect()
}

/// Tokens with articles dropped, unless dropping them would leave nothing.
fn normalize(text: &str) -> Vec<String> {
    let tokens = tokenize(text);
    let kept: Vec<String> = tokens
        .iter()
        .filter(|t| !ARTICLES.contains(&t.as_str()))
        .cloned()
        .collect();
    if kept.is_empty() {
        tokens
    } else {
        kept
    }
}

fn contains_contiguous(hay: &[String], needle: &[String]) -> bool {
    !needle.is_empty() && hay.windows(needle.len()).any(|w| w == needle)
}

/// The option set a reply is matched against.
#[derive(Debug, Clone, Copy)]
pub struct AnswerSpace<'a> {
    pub options: &'a [String],
    pub allow_equally_likely: bool,
    pub unknown_index: Option<usize>,
}

/// Matches a reply against the options.  Tiers, in order:
/// 1. the phrase "equally likely" (when the space allows that verdict);
/// 2. whole-reply equality with exactly one option;
/// 3. exactly one option contained contiguously in the reply;
/// 4. for replies of at most three tokens, token subset of exactly one option.
///
/// Everything is compared after lowercasing, mapping punctuation (except
/// hyphens) to spaces, and dropping articles.  No unique match means no
/// extraction; the caller moves to the next round or attempt.
pub fn match_option(response: &str, space: &AnswerSpace) -> Option<AnswerValue> {
    let reply = normalize(response);
    if reply.is_empty() {
        return None;
    }
    let equally: [String; 2] = ["equally".to_string(), "likely".to_string()];
    if space.allow_equally_likely && contains_contiguous(&reply, &equally) {
        return Some(AnswerValue::EquallyLikely);
    }
    let options: Vec<Vec<String>> = space.options.iter().map(|o| normalize(o)).collect();

    let unique = |hits: Vec<usize>| if hits.len() == 1 { Some(hits[0]) } else { None };
    let exact: Vec<usize> = (0..options.len()).filter(|&i| options[i] == reply).collect();
    let mut hit = unique(exact);
    if hit.is_none() {
        let contained: Vec<usize> = (0..options.len())
            .filter(|&i| contains_contiguous(&reply, &options[i]))
            .collect();
        hit = unique(contained);
    }
    if hit.is_none() && reply.len() <= 3 {
        let subset: Vec<usize> = (0..options.len())
            .filter(|&i| reply.iter().all(|t| options[i].contains(t)))
            .collect();
        hit = unique(subset);
    }
    hit.map(|i| {
        if space.unknown_index == Some(i) {
            AnswerValue::UnknownOption
        } else {
            AnswerValue::Choice(i)
        }
    })
}

/// An extracted answer together with the conversation that produced it
/// (the final attempt's turns, including model replies).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnswerOutcome {
    pub answer: ExtractedAnswer,
    pub transcript: Vec<ChatTurn>,
}

impl Gateway {
    /// Two-round iterative answering.  Round 1 lets the model reply freely;
    /// if no option matches, round 2 asks it to summarize in one or two
    /// words.  The whole exchange is attempted up to three times before the
    /// answer is recorded as a refusal.
    pub fn iterative_answer(
        &self,
        model: &str,
        turns: &[ChatTurn],
        space: &AnswerSpace,
    ) -> Result<AnswerOutcome, GatewayError> {
        let mut last: Option<(Vec<ChatTurn>, String)> = None;
        for attempt in 1..=3u8 {
            let first = self.complete(&ChatRequest::evaluation(model, turns.to_vec()))?;
            if let Some(value) = match_option(&first.text, space) {
                let mut transcript = turns.to_vec();
                transcript.push(ChatTurn::assistant(first.text.clone()));
                return Ok(AnswerOutcome {
                    answer: ExtractedAnswer {
                        value,
                        raw_final: first.text,
                        rounds_used: 1,
                        attempts: attempt,
                    },
                    transcript,
                });
            }
            let mut followup = turns.to_vec();
            followup.push(ChatTurn::assistant(first.text.clone()));
            followup.push(ChatTurn::user(SUMMARIZE_PROMPT));
            let second = self.complete(&ChatRequest::evaluation(model, followup.clone()))?;
            let mut transcript = followup;
            transcript.push(ChatTurn::assistant(second.text.clone()));
            if let Some(value) = match_option(&second.text, space) {
                return Ok(AnswerOutcome {
                    answer: ExtractedAnswer {
                        value,
                        raw_final: second.text,
                        rounds_used: 2,
                        attempts: attempt,
                    },
                    transcript,
                });
            }
            last = Some((transcript, second.text));
        }
        let (transcript, raw_final) = last.expect("three attempts ran");
        Ok(AnswerOutcome {
            answer: ExtractedAnswer {
                value: AnswerValue::Refusal,
                raw_final,
                rounds_used: 2,
                attempts: 3,
            },
            transcript,
        })
    }
}

fn is_family(token: &str, family: &str) -> bool {
    token.trim().eq_ignore_ascii_case(family)
}

fn decision_token(response: &ChatResponse) -> Result<&super::TokenLogprob, GatewayError> {
    response
        .token_logprobs
        .as_ref()
        .and_then(|tokens| tokens.iter().find(|t| !t.token.trim().is_empty()))
        .ok_or(GatewayError::LogprobsMissing)
}

fn family_probability(response: &ChatResponse, family: &str) -> Result<Option<f64>, GatewayError> {
    let decision = decision_token(response)?;
    if is_family(&decision.token, family) {
        return Ok(Some(decision.logprob.exp().min(1.0)));
    }
    Ok(decision
        .alternatives
        .iter()
        .find(|a| is_family(&a.token, family))
        .map(|a| a.logprob.exp().min(1.0)))
}

/// Probability of the Yes token at the decision position: `exp(logprob)` of
/// the generated token if it is Yes-family (case-insensitive "yes" after
/// trimming), otherwise of the Yes-family entry among its alternatives.
pub fn yes_probability(response: &ChatResponse) -> Result<f64, GatewayError> {
    family_probability(response, "yes")?.ok_or(GatewayError::YesTokenAbsent)
}

/// Yes probability renormalized over {Yes, No} at the decision position.
/// A missing No token contributes zero mass.
pub fn yes_probability_renormalized(response: &ChatResponse) -> Result<f64, GatewayError> {
    let yes = yes_probability(response)?;
    let no = family_probability(response, "no")?.unwrap_or(0.0);
    if yes + no == 0.0 {
        return Ok(0.0);
    }
    Ok(yes / (yes + no))
}
