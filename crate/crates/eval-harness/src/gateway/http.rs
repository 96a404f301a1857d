//! Live backend speaking the OpenAI-compatible chat-completions protocol.

use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Duration;

use serde::Deserialize;
use serde_json::json;

use super::{
    Backend, ChatRequest, ChatResponse, GatewayError, Role, TokenAlternative, TokenLogprob,
};

static LIVE_REQUESTS: AtomicU64 = AtomicU64::new(0);

/// Number of HTTP requests actually sent over the network by this process.
/// Tests use it to prove that mock-mode runs never touch the network.
pub fn live_request_count() -> u64 {
    LIVE_REQUESTS.load(Ordering::Relaxed)
}

#[derive(Debug, Clone)]
pub struct HttpConfig {
    pub base_url: String,
    pub path: String,
    /// Environment variable holding the API key.
    pub api_key_env: String,
    pub max_attempts: u32,
    pub connect_timeout: Duration,
    pub request_timeout: Duration,
}

impl Default for HttpConfig {
    fn default() -> Self {
        HttpConfig {
            base_url: "https://api.openai.com".to_string(),
            path: "/v1/chat/completions".to_string(),
            api_key_env: "OPENAI_API_KEY".to_string(),
            max_attempts: 5,
            connect_timeout: Duration::from_secs(10),
            request_timeout: Duration::from_secs(120),
        }
    }
}

pub struct HttpBackend {
    config: HttpConfig,
    api_key: String,
    client: reqwest::blocking::Client,
}

impl std::fmt::Debug for HttpBackend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HttpBackend")
            .field("config", &self.config)
            .field("api_key", &"<redacted>")
            .finish_non_exhaustive()
    }
}

impl HttpBackend {
    pub fn new(config: HttpConfig) -> Result<Self, GatewayError> {
        let api_key = std::env::var(&config.api_key_env).map_err(|_| GatewayError::Auth {
            detail: format!("environment variable {} is not set", config.api_key_env),
        })?;
        let client = reqwest::blocking::Client::builder()
            .connect_timeout(config.connect_timeout)
            .timeout(config.request_timeout)
            .build()
            .map_err(|e| GatewayError::Transport {
                attempts: 0,
                detail: e.to_string(),
            })?;
        Ok(HttpBackend {
            config,
            api_key,
            client,
        })
    }

    fn endpoint(&self) -> String {
        format!(
            "{}/{}",
            self.config.base_url.trim_end_matches('/'),
            self.config.path.trim_start_matches('/')
        )
    }
}

fn role_name(role: Role) -> &'static str {
    match role {
        Role::System => "system",
        Role::User => "user",
        Role::Assistant => "assistant",
    }
}

#[derive(Deserialize)]
struct ProviderResponse {
    choices: Vec<ProviderChoice>,
}

#[derive(Deserialize)]
struct ProviderChoice {
    message: ProviderMessage,
    #[serde(default)]
    finish_reason: Option<String>,
    #[serde(default)]
    logprobs: Option<ProviderLogprobs>,
}

#[derive(Deserialize)]
struct ProviderMessage {
    #[serde(default)]
    content: Option<String>,
}

#[derive(Deserialize)]
struct ProviderLogprobs {
    #[serde(default)]
    content: Vec<ProviderToken>,
}

#[derive(Deserialize)]
struct ProviderToken {
    token: String,
    logprob: f64,
    #[serde(default)]
    top_logprobs: Vec<ProviderAlternative>,
}

#[derive(Deserialize)]
struct ProviderAlternative {
    token: String,
    logprob: f64,
}

fn parse_response(body: &str) -> Result<ChatResponse, GatewayError> {
    let parsed: ProviderResponse =
        serde_json::from_str(body).map_err(|e| GatewayError::Protocol {
            detail: format!("unparseable completion body: {e}"),
        })?;
    let choice = parsed.choices.into_iter().next().ok_or(GatewayError::Protocol {
        detail: "response contains no choices".to_string(),
    })?;
    let token_logprobs = choice.logprobs.map(|lp| {
        lp.content
            .into_iter()
            .map(|t| TokenLogprob {
                token: t.token,
                logprob: t.logprob,
                alternatives: t
                    .top_logprobs
                    .into_iter()
                    .map(|a| TokenAlternative {
                        token: a.token,
                        logprob: a.logprob,
                    })
                    .collect(),
            })
            .collect::<Vec<_>>()
    });
    Ok(ChatResponse {
        text: choice.message.content.unwrap_or_default(),
        token_logprobs: token_logprobs.filter(|t| !t.is_empty()),
        finish_reason: choice.finish_reason,
        provider_meta: None,
        cache_hit: false,
    })
}

impl Backend for HttpBackend {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        let messages: Vec<serde_json::Value> = request
            .turns
            .iter()
            .map(|t| json!({"role": role_name(t.role), "content": t.text}))
            .collect();
        let mut body = json!({
            "model": request.model,
            "messages": messages,
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        });
        if request.want_logprobs {
            body["logprobs"] = json!(true);
            body["top_logprobs"] = json!(request.top_logprobs);
        }

        let mut last_error = String::new();
        for attempt in 1..=self.config.max_attempts {
            if attempt > 1 {
                let backoff = Duration::from_secs(1 << (attempt - 2).min(4));
                std::thread::sleep(backoff);
            }
            LIVE_REQUESTS.fetch_add(1, Ordering::Relaxed);
            let sent = self
                .client
                .post(self.endpoint())
                .bearer_auth(&self.api_key)
                .json(&body)
                .send();
            match sent {
                Ok(resp) => {
                    let status = resp.status();
                    let text = resp.text().unwrap_or_default();
                    if status.is_success() {
                        return parse_response(&text);
                    }
                    if status.as_u16() == 401 || status.as_u16() == 403 {
                        return Err(GatewayError::Auth {
                            detail: format!("{status}: {text}"),
                        });
                    }
                    if status.as_u16() == 429 || status.is_server_error() {
                        last_error = format!("{status}: {text}");
                        continue;
                    }
                    return Err(GatewayError::Protocol {
                        detail: format!("{status}: {text}"),
                    });
                }
                Err(e) => {
                    last_error = e.to_string();
                    continue;
                }
            }
        }
        Err(GatewayError::Transport {
            attempts: self.config.max_attempts,
            detail: last_error,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn missing_api_key_is_an_auth_error() {
        let config = HttpConfig {
            api_key_env: "EVAL_HARNESS_TEST_KEY_THAT_IS_NEVER_SET".to_string(),
            ..HttpConfig::default()
        };
        let err = HttpBackend::new(config).unwrap_err();
        assert!(matches!(err, GatewayError::Auth { .. }));
        assert_eq!(live_request_count(), 0);
    }

    #[test]
    fn endpoint_joins_base_and_path() {
        std::env::set_var("EVAL_HARNESS_TEST_KEY_SET", "k");
        let backend = HttpBackend::new(HttpConfig {
            base_url: "http://localhost:9/".to_string(),
            path: "/v1/chat/completions".to_string(),
            api_key_env: "EVAL_HARNESS_TEST_KEY_SET".to_string(),
            ..HttpConfig::default()
        })
        .unwrap();
        assert_eq!(backend.endpoint(), "http://localhost:9/v1/chat/completions");
    }

    #[test]
    fn completion_body_parses_with_and_without_logprobs() {
        let plain = r#"{"choices": [{"message": {"content": "The physician"}, "finish_reason": "stop"}]}"#;
        let resp = parse_response(plain).unwrap();
        assert_eq!(resp.text, "The physician");
        assert!(resp.token_logprobs.is_none());

        let with_lp = r#"{"choices": [{"message": {"content": "Yes"}, "finish_reason": "stop",
            "logprobs": {"content": [{"token": "Yes", "logprob": -0.1,
                "top_logprobs": [{"token": "Yes", "logprob": -0.1}, {"token": "No", "logprob": -2.4}]}]}}]}"#;
        let resp = parse_response(with_lp).unwrap();
        let tokens = resp.token_logprobs.unwrap();
        assert_eq!(tokens[0].token, "Yes");
        assert_eq!(tokens[0].alternatives.len(), 2);

        let empty = r#"{"choices": []}"#;
        assert!(matches!(
            parse_response(empty),
            Err(GatewayError::Protocol { .. })
        ));
    }
}
