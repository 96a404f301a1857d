//! Append-only response cache: one JSONL record per completed request.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::sync::{Mutex, RwLock};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{ChatRequest, ChatResponse, ChatTurn, GatewayError};

#[derive(Serialize)]
struct KeyFields<'a> {
    model: &'a str,
    turns: &'a [ChatTurn],
    temperature: f64,
    want_logprobs: bool,
    max_tokens: u32,
}

/// Stable identity of a request: a hash over the fields that determine the
/// response.  `top_logprobs` only widens the reported alternatives, so it is
/// deliberately left out.
pub fn request_key(request: &ChatRequest) -> String {
    let canonical = serde_json::to_string(&KeyFields {
        model: &request.model,
        turns: &request.turns,
        temperature: request.temperature,
        want_logprobs: request.want_logprobs,
        max_tokens: request.max_tokens,
    })
    .expect("request serializes");
    hex::encode(Sha256::digest(canonical.as_bytes()))
}

#[derive(Serialize, Deserialize)]
struct CacheRecord {
    key: String,
    request: ChatRequest,
    response: ChatResponse,
}

#[derive(Debug)]
pub struct Cache {
    entries: RwLock<HashMap<String, ChatResponse>>,
    file: Option<Mutex<File>>,
}

impl Cache {
    /// Process-local cache with no persistence.
    pub fn in_memory() -> Self {
        Cache {
            entries: RwLock::new(HashMap::new()),
            file: None,
        }
    }

    /// Opens (creating if absent) a JSONL-backed cache and loads every
    /// record.  Later records win on duplicate keys.
    pub fn open(path: &Path) -> Result<Self, GatewayError> {
        let io_err = |e: std::io::Error| GatewayError::Cache {
            detail: format!("{}: {e}", path.display()),
        };
        if let Some(parent) = path.parent() {
            if !parent.as_os_str().is_empty() {
                std::fs::create_dir_all(parent).map_err(io_err)?;
            }
        }
        let mut entries = HashMap::new();
        if path.exists() {
            let reader = BufReader::new(File::open(path).map_err(io_err)?);
            for (lineno, line) in reader.lines().enumerate() {
                let line = line.map_err(io_err)?;
                if line.trim().is_empty() {
                    continue;
                }
                let record: CacheRecord =
                    serde_json::from_str(&line).map_err(|e| GatewayError::Cache {
                        detail: format!("{} line {}: {e}", path.display(), lineno + 1),
                    })?;
                entries.insert(record.key, record.response);
            }
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(io_err)?;
        Ok(Cache {
            entries: RwLock::new(entries),
            file: Some(Mutex::new(file)),
        })
    }

    pub fn get(&self, key: &str) -> Option<ChatResponse> {
        let entries = self.entries.read().expect("cache lock");
        entries.get(key).map(|resp| {
            let mut hit = resp.clone();
            hit.cache_hit = true;
            hit
        })
    }

    pub fn put(
        &self,
        key: &str,
        request: &ChatRequest,
        response: &ChatResponse,
    ) -> Result<(), GatewayError> {
        if let Some(file) = &self.file {
            let record = CacheRecord {
                key: key.to_string(),
                request: request.clone(),
                response: response.clone(),
            };
            let line = serde_json::to_string(&record).map_err(|e| GatewayError::Cache {
                detail: e.to_string(),
            })?;
            let mut file = file.lock().expect("cache file lock");
            writeln!(file, "{line}").map_err(|e| GatewayError::Cache {
                detail: e.to_string(),
            })?;
        }
        self.entries
            .write()
            .expect("cache lock")
            .insert(key.to_string(), response.clone());
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.read().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
