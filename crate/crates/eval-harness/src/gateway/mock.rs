//! Scripted mock model: deterministic replies driven by a JSON fixture.

use std::collections::BTreeMap;
use std::path::Path;

use regex::Regex;
use serde::Deserialize;

use super::cache::request_key;
use super::{
    Backend, ChatRequest, ChatResponse, GatewayError, TokenAlternative, TokenLogprob,
};

#[derive(Deserialize)]
struct RawFixture {
    #[serde(default = "default_strict")]
    strict: bool,
    #[serde(default)]
    default: Option<RawReply>,
    rules: Vec<RawRule>,
}

fn default_strict() -> bool {
    true
}

#[derive(Deserialize)]
struct RawRule {
    #[serde(rename = "match")]
    matcher: RawMatcher,
    reply: RawReply,
}

#[derive(Deserialize)]
struct RawMatcher {
    #[serde(default)]
    hash: Option<String>,
    #[serde(default)]
    last_turn_regex: Option<String>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawReply {
    Text(String),
    Full {
        text: String,
        #[serde(default)]
        logprobs: Option<BTreeMap<String, f64>>,
    },
}

#[derive(Debug)]
enum Matcher {
    Hash(String),
    LastTurn(Regex),
}

#[derive(Debug)]
struct Reply {
    text: String,
    logprobs: Option<BTreeMap<String, f64>>,
}

impl Reply {
    fn from_raw(raw: RawReply) -> Self {
        match raw {
            RawReply::Text(text) => Reply {
                text,
                logprobs: None,
            },
            RawReply::Full { text, logprobs } => Reply { text, logprobs },
        }
    }

    fn to_response(&self) -> ChatResponse {
        let token_logprobs = self.logprobs.as_ref().map(|map| {
            let mut entries: Vec<(&String, &f64)> = map.iter().collect();
            entries.sort_by(|a, b| b.1.partial_cmp(a.1).unwrap().then(a.0.cmp(b.0)));
            let alternatives: Vec<TokenAlternative> = entries
                .iter()
                .map(|(token, logprob)| TokenAlternative {
                    token: (*token).clone(),
                    logprob: **logprob,
                })
                .collect();
            let top = &entries[0];
            vec![TokenLogprob {
                token: top.0.clone(),
                logprob: *top.1,
                alternatives,
            }]
        });
        ChatResponse {
            text: self.text.clone(),
            token_logprobs,
            finish_reason: Some("stop".to_string()),
            provider_meta: None,
            cache_hit: false,
        }
    }
}

#[derive(Debug)]
struct Rule {
    matcher: Matcher,
    reply: Reply,
}

/// Deterministic stand-in for a live model.  Rules are tried in order; the
/// first whose hash equals the request key or whose regex matches the last
/// turn's text wins.
#[derive(Debug)]
pub struct MockModel {
    rules: Vec<Rule>,
    default: Option<Reply>,
    strict: bool,
}

impl MockModel {
    pub fn from_json(json: &str) -> Result<Self, GatewayError> {
        let raw: RawFixture = serde_json::from_str(json).map_err(|e| GatewayError::Fixture {
            detail: e.to_string(),
        })?;
        let mut rules = Vec::with_capacity(raw.rules.len());
        for (i, rule) in raw.rules.into_iter().enumerate() {
            let matcher = match (rule.matcher.hash, rule.matcher.last_turn_regex) {
                (Some(hash), None) => Matcher::Hash(hash),
                (None, Some(pattern)) => {
                    let regex = Regex::new(&pattern).map_err(|e| GatewayError::Fixture {
                        detail: format!("rule {i}: bad regex: {e}"),
                    })?;
                    Matcher::LastTurn(regex)
                }
                _ => {
                    return Err(GatewayError::Fixture {
                        detail: format!(
                            "rule {i}: exactly one of `hash` or `last_turn_regex` required"
                        ),
                    });
                }
            };
            rules.push(Rule {
                matcher,
                reply: Reply::from_raw(rule.reply),
            });
        }
        Ok(MockModel {
            rules,
            default: raw.default.map(Reply::from_raw),
            strict: raw.strict,
        })
    }

    pub fn from_path(path: &Path) -> Result<Self, GatewayError> {
        let json = std::fs::read_to_string(path).map_err(|e| GatewayError::Fixture {
            detail: format!("{}: {e}", path.display()),
        })?;
        MockModel::from_json(&json)
    }
}

/// Loads a mock model fixture from disk.
pub fn script_mock(fixture_path: &Path) -> Result<MockModel, GatewayError> {
    MockModel::from_path(fixture_path)
}

impl Backend for MockModel {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        let key = request_key(request);
        let last = request.turns.last().map(|t| t.text.as_str()).unwrap_or("");
        let hit = self.rules.iter().find(|rule| match &rule.matcher {
            Matcher::Hash(hash) => *hash == key,
            Matcher::LastTurn(regex) => regex.is_match(last),
        });
        match hit.map(|r| &r.reply).or(self.default.as_ref()) {
            Some(reply) => Ok(reply.to_response()),
            None => {
                let snippet: String = last.chars().take(120).collect();
                if self.strict {
                    Err(GatewayError::FixtureMiss {
                        detail: format!("last turn {snippet:?}"),
                    })
                } else {
                    Err(GatewayError::FixtureMiss {
                        detail: format!("no default reply configured; last turn {snippet:?}"),
                    })
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::ChatTurn;

    fn request(text: &str) -> ChatRequest {
        ChatRequest::evaluation("mock-model", vec![ChatTurn::user(text)])
    }

    #[test]
    fn regex_rule_answers_matching_prompts() {
        let mock = MockModel::from_json(
            r#"{"rules": [{"match": {"last_turn_regex": "physician"}, "reply": "The physician"}]}"#,
        )
        .unwrap();
        let resp = mock
            .complete(&request("Who does 'he' refer to? The physician hired..."))
            .unwrap();
        assert_eq!(resp.text, "The physician");
    }

    #[test]
    fn first_matching_rule_wins() {
        let mock = MockModel::from_json(
            r#"{"rules": [
                {"match": {"last_turn_regex": "summarize your answer"}, "reply": "Secretary"},
                {"match": {"last_turn_regex": ".*"}, "reply": "An essay."}
            ]}"#,
        )
        .unwrap();
        assert_eq!(mock.complete(&request("anything")).unwrap().text, "An essay.");
        assert_eq!(
            mock.complete(&request("Please summarize your answer in one or two words."))
                .unwrap()
                .text,
            "Secretary"
        );
    }

    #[test]
    fn strict_miss_is_an_error() {
        let mock = MockModel::from_json(r#"{"rules": []}"#).unwrap();
        let err = mock.complete(&request("unmatched")).unwrap_err();
        assert!(matches!(err, GatewayError::FixtureMiss { .. }));
    }

    #[test]
    fn hash_rule_matches_exact_request() {
        let req = request("exact prompt");
        let key = request_key(&req);
        let fixture = format!(
            r#"{{"rules": [{{"match": {{"hash": "{key}"}}, "reply": "pinned"}}]}}"#
        );
        let mock = MockModel::from_json(&fixture).unwrap();
        assert_eq!(mock.complete(&req).unwrap().text, "pinned");
        assert!(mock.complete(&request("other prompt")).is_err());
    }

    #[test]
    fn logprob_replies_expose_alternatives() {
        let mock = MockModel::from_json(
            r#"{"rules": [{"match": {"last_turn_regex": "decide"},
                "reply": {"text": "Yes", "logprobs": {"Yes": -0.1, "No": -2.4}}}]}"#,
        )
        .unwrap();
        let resp = mock.complete(&request("decide now")).unwrap();
        let tokens = resp.token_logprobs.unwrap();
        assert_eq!(tokens.len(), 1);
        assert_eq!(tokens[0].token, "Yes");
        assert_eq!(tokens[0].logprob, -0.1);
        assert_eq!(tokens[0].alternatives.len(), 2);
        assert_eq!(tokens[0].alternatives[1].token, "No");
    }

    #[test]
    fn default_reply_catches_unmatched_requests() {
        let mock = MockModel::from_json(
            r#"{"strict": false, "default": "fallback", "rules": []}"#,
        )
        .unwrap();
        assert_eq!(mock.complete(&request("whatever")).unwrap().text, "fallback");
    }

    #[test]
    fn malformed_rules_are_rejected() {
        let err = MockModel::from_json(r#"{"rules": [{"match": {}, "reply": "x"}]}"#).unwrap_err();
        assert!(matches!(err, GatewayError::Fixture { .. }));
        let err =
            MockModel::from_json(r#"{"rules": [{"match": {"last_turn_regex": "("}, "reply": "x"}]}"#)
                .unwrap_err();
        assert!(matches!(err, GatewayError::Fixture { .. }));
    }
}
