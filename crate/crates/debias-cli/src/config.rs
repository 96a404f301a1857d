//! Run configuration: a single JSON or TOML document describing the model,
//! the benchmarks, and the strategies to evaluate.
//!
//! Relative paths inside the document are resolved against the directory
//! containing the config file, so a config can travel with its fixtures.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use eval_harness::bench::TaskType;
use eval_harness::metrics::Aggregation;
use eval_harness::strategy::{IclExample, Strategy, StrategySpec};

/// Which model answers the prompts: a scripted fixture or a live endpoint.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelConfig {
    Mock {
        fixture: PathBuf,
        #[serde(default = "default_mock_name")]
        name: String,
    },
    Live {
        model: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        base_url: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        path: Option<String>,
        /// Environment variable holding the API key.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        api_key_env: Option<String>,
    },
}

fn default_mock_name() -> String {
    "mock".to_string()
}

impl ModelConfig {
    pub fn name(&self) -> &str {
        match self {
            ModelConfig::Mock { name, .. } => name,
            ModelConfig::Live { model, .. } => model,
        }
    }

    pub fn is_mock(&self) -> bool {
        matches!(self, ModelConfig::Mock { .. })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "benchmark", rename_all = "snake_case")]
pub enum BenchmarkConfig {
    Winobias {
        task_type: TaskType,
        pro_path: PathBuf,
        anti_path: PathBuf,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        exclusions: Option<PathBuf>,
    },
    Bbq {
        path: PathBuf,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        exclusions: Option<PathBuf>,
    },
    DiscrimEval {
        templates: PathBuf,
    },
}

/// One prompting configuration to evaluate every instance under.
///
/// `clauses` drives the debiasing strategies: a spec naming strategy I runs
/// the two-stage protocol (base question first, its answer folded into the
/// fact clause); a spec without strategy I renders a single static prompt.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum StrategyConfig {
    Default,
    ChainOfThought,
    Icl {
        examples: Vec<IclExample>,
    },
    Clauses {
        #[serde(flatten)]
        spec: StrategySpec,
    },
}

impl StrategyConfig {
    /// The label records carry, identical to what the rendered plan reports.
    pub fn label(&self) -> String {
        match self {
            StrategyConfig::Default => "default".to_string(),
            StrategyConfig::ChainOfThought => "cot".to_string(),
            StrategyConfig::Icl { .. } => "icl".to_string(),
            StrategyConfig::Clauses { spec } => spec.label(spec.has(Strategy::Fact)),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    #[serde(default = "default_concurrency")]
    pub concurrency: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub requests_per_second: Option<f64>,
    /// Response cache location; defaults to `cache.jsonl` inside the run
    /// directory, which is what makes re-running a config resumable.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cache_path: Option<PathBuf>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Folded into the run id.  The evaluation itself is deterministic
    /// (temperature 0, scripted mocks), so the seed's job is to let two
    /// otherwise-identical configs produce separate run directories.
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub aggregation: Aggregation,
    /// Marker lexicon override; the built-in lists are used when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lexicons: Option<PathBuf>,
    pub benchmarks: Vec<BenchmarkConfig>,
    pub strategies: Vec<StrategyConfig>,
}

fn default_concurrency() -> usize {
    4
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

impl RunConfig {
    /// Twelve hex chars of the SHA-256 of the canonical JSON form.  Identical
    /// configs (after path resolution) share a run directory.
    pub fn run_id(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("config serializes");
        let digest = Sha256::digest(&canonical);
        hex::encode(&digest[..6])
    }

    pub fn run_dir(&self) -> PathBuf {
        self.output_dir.join(self.run_id())
    }

    pub fn cache_path(&self) -> PathBuf {
        self.cache_path
            .clone()
            .unwrap_or_else(|| self.run_dir().join("cache.jsonl"))
    }

    /// Checks the parts of the config that must hold before any request is
    /// issued: referenced files exist, counts make sense.
    pub fn validate(&self) -> Result<()> {
        if self.concurrency == 0 {
            bail!("concurrency must be at least 1");
        }
        if let Some(rps) = self.requests_per_second {
            if !(rps.is_finite() && rps > 0.0) {
                bail!("requests_per_second must be a positive number, got {rps}");
            }
        }
        if self.benchmarks.is_empty() {
            bail!("config names no benchmarks");
        }
        if self.strategies.is_empty() {
            bail!("config names no strategies");
        }
        let mut referenced: Vec<&Path> = Vec::new();
        if let ModelConfig::Mock { fixture, .. } = &self.model {
            referenced.push(fixture);
        }
        if let Some(lex) = &self.lexicons {
            referenced.push(lex);
        }
        for bench in &self.benchmarks {
            match bench {
                BenchmarkConfig::Winobias {
                    pro_path,
                    anti_path,
                    exclusions,
                    ..
                } => {
                    referenced.push(pro_path);
                    referenced.push(anti_path);
                    referenced.extend(exclusions.as_deref());
                }
                BenchmarkConfig::Bbq { path, exclusions } => {
                    referenced.push(path);
                    referenced.extend(exclusions.as_deref());
                }
                BenchmarkConfig::DiscrimEval { templates } => referenced.push(templates),
            }
        }
        for path in referenced {
            if !path.exists() {
                bail!("referenced path does not exist: {}", path.display());
            }
        }
        Ok(())
    }

    fn resolve_paths(&mut self, base: &Path) {
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&p);
            }
        };
        match &mut self.model {
            ModelConfig::Mock { fixture, .. } => resolve(fixture),
            ModelConfig::Live { .. } => {}
        }
        if let Some(p) = &mut self.cache_path {
            resolve(p);
        }
        resolve(&mut self.output_dir);
        if let Some(p) = &mut self.lexicons {
            resolve(p);
        }
        for bench in &mut self.benchmarks {
            match bench {
                BenchmarkConfig::Winobias {
                    pro_path,
                    anti_path,
                    exclusions,
                    ..
                } => {
                    resolve(pro_path);
                    resolve(anti_path);
                    if let Some(p) = exclusions {
                        resolve(p);
                    }
                }
                BenchmarkConfig::Bbq { path, exclusions } => {
                    resolve(path);
                    if let Some(p) = exclusions {
                        resolve(p);
                    }
                }
                BenchmarkConfig::DiscrimEval { templates } => resolve(templates),
            }
        }
    }
}

/// Parses a config file by extension (`.toml` for TOML, JSON otherwise),
/// resolves relative paths against the file's directory, and validates it.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let body = std::fs::read_to_string(path)
        .with_context(|| format!("failed to read config {}", path.display()))?;
    let mut config: RunConfig = if path.extension().is_some_and(|e| e == "toml") {
        toml::from_str(&body).with_context(|| format!("invalid TOML in {}", path.display()))?
    } else {
        serde_json::from_str(&body)
            .with_context(|| format!("invalid JSON in {}", path.display()))?
    };
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    config.resolve_paths(base);
    config
        .validate()
        .with_context(|| format!("invalid config {}", path.display()))?;
    Ok(config)
}
