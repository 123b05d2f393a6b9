//! Embedding and completion providers.
//!
//! The default embedder is a deterministic character-trigram hasher so that
//! everything runs offline. Remote providers speak an OpenAI-compatible HTTP
//! dialect and are configured through environment variables:
//!
//! | variable                    | meaning                               |
//! |-----------------------------|---------------------------------------|
//! | `CARDLAKE_EMBED_URL`        | base URL, `POST {url}/embeddings`     |
//! | `CARDLAKE_EMBED_API_KEY`    | bearer token (optional)               |
//! | `CARDLAKE_EMBED_MODEL`      | model name sent with each request     |
//! | `CARDLAKE_LLM_URL`          | base URL, `POST {url}/chat/completions` |
//! | `CARDLAKE_LLM_API_KEY`      | bearer token (optional)               |
//! | `CARDLAKE_LLM_MODEL`        | model name sent with each request     |
//!
//! A remote failure is always reported; nothing silently falls back to the
//! offline implementations.

use std::fs::OpenOptions;
use std::io::Write;
use std::path::PathBuf;
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::ProviderError;

pub const DEFAULT_DIMENSION: usize = 256;

/// A dense text embedding. Non-empty texts are L2-normalized; the empty
/// text maps to the zero vector and is flagged.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingVector {
    pub values: Vec<f64>,
    pub empty: bool,
}

impl EmbeddingVector {
    pub fn zero(dimension: usize) -> Self {
        Self {
            values: vec![0.0; dimension],
            empty: true,
        }
    }

    /// Scales `values` to unit length. An all-zero input stays zero and is
    /// flagged empty.
    pub fn normalized(mut values: Vec<f64>) -> Self {
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Self {
                values,
                empty: true,
            };
        }
        for v in &mut values {
            *v /= norm;
        }
        Self {
            values,
            empty: false,
        }
    }

    pub fn dimension(&self) -> usize {
        self.values.len()
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

pub trait EmbeddingProvider: Send + Sync {
    fn name(&self) -> &str;
    fn dimension(&self) -> usize;
    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, ProviderError>;
}

/// 64-bit FNV-1a.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

/// Offline embedder: lowercased text with whitespace runs collapsed, every
/// character trigram hashed (FNV-1a of its UTF-8 bytes) into one of
/// `dimension` buckets, then L2-normalized. Texts shorter than three
/// characters contribute themselves as a single gram.
#[derive(Clone, Debug)]
pub struct HashingEmbedder {
    dimension: usize,
}

impl HashingEmbedder {
    pub fn new(dimension: usize) -> Self {
        assert!(dimension > 0, "embedding dimension must be positive");
        Self { dimension }
    }

    pub fn embed_one(&self, text: &str) -> EmbeddingVector {
        let folded: Vec<char> = text
            .to_lowercase()
            .split_whitespace()
            .collect::<Vec<_>>()
            .join(" ")
            .chars()
            .collect();
        if folded.is_empty() {
            return EmbeddingVector::zero(self.dimension);
        }
        let mut buckets = vec![0.0; self.dimension];
        let mut add = |gram: &[char]| {
            let s: String = gram.iter().collect();
            let bucket = (fnv1a(s.as_bytes()) % self.dimension as u64) as usize;
            buckets[bucket] += 1.0;
        };
        if folded.len() < 3 {
            add(&folded);
        } else {
            for gram in folded.windows(3) {
                add(gram);
            }
        }
        EmbeddingVector::normalized(buckets)
    }
}

impl Default for HashingEmbedder {
    fn default() -> Self {
        Self::new(DEFAULT_DIMENSION)
    }
}

impl EmbeddingProvider for HashingEmbedder {
    fn name(&self) -> &str {
        "hashing-trigram"
    }

    fn dimension(&self) -> usize {
        self.dimension
    }

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, ProviderError> {
        Ok(texts.iter().map(|t| self.embed_one(t)).collect())
    }
}

/// Connection settings for one remote endpoint.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RemoteSettings {
    pub base_url: String,
    pub api_key: Option<String>,
    pub model: String,
}

impl RemoteSettings {
    /// Reads `{prefix}_URL`, `{prefix}_API_KEY` and `{prefix}_MODEL`.
    /// Returns `None` when the URL is unset.
    pub fn from_env(prefix: &str) -> Option<Self> {
        let base_url = std::env::var(format!("{prefix}_URL")).ok()?;
        Some(Self {
            base_url: base_url.trim_end_matches('/').to_owned(),
            api_key: std::env::var(format!("{prefix}_API_KEY")).ok(),
            model: std::env::var(format!("{prefix}_MODEL")).unwrap_or_default(),
        })
    }

    fn post<T: Serialize>(&self, provider: &str, path: &str, body: &T) -> Result<serde_json::Value, ProviderError> {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(60)))
            .http_status_as_error(false)
            .build()
            .into();
        let url = format!("{}{path}", self.base_url);
        let mut request = agent.post(&url);
        if let Some(key) = &self.api_key {
            request = request.header("Authorization", &format!("Bearer {key}"));
        }
        let mut response = request
            .send_json(body)
            .map_err(|e| ProviderError::transport(provider, format!("POST {url}: {e}")))?;
        let status = response.status().as_u16();
        if status >= 500 || status == 429 {
            return Err(ProviderError::transport(provider, format!("POST {url}: HTTP {status}")));
        }
        if status >= 400 {
            return Err(ProviderError::invalid_response(provider, format!("POST {url}: HTTP {status}")));
        }
        response
            .body_mut()
            .read_json::<serde_json::Value>()
            .map_err(|e| ProviderError::invalid_response(provider, format!("POST {url}: {e}")))
    }
}

/// Remote embedder: `POST {base}/embeddings` with `{"model", "input": [..]}`,
/// expecting `{"data": [{"embedding": [..]}, ..]}` in input order.
#[derive(Clone, Debug)]
pub struct HttpEmbedder {
    settings: RemoteSettings,
    dimension: usize,
}

impl HttpEmbedder {
    pub fn new(settings: RemoteSettings, dimension: usize) -> Self {
        Self {
            settings,
            dimension,
        }
    }

    pub fn from_env(dimension: usize) -> Option<Self> {
        RemoteSettings::from_env("CARDLAKE_EMBED").map(|s| Self::new(s, dimension))
    }
}

#[derive(Deserialize)]
struct EmbeddingResponse {
    data: Vec<EmbeddingDatum>,
}

#[derive(Deserialize)]
struct EmbeddingDatum {
    embedding: Vec<f64>,
}

impl EmbeddingProvider for HttpEmbedder {
    fn name(&self) -> &str {
        "http-embeddings"
    }

    fn dimension(&self) -> usize {
        self.dimension
    }

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, ProviderError> {
        let body = serde_json::json!({ "model": self.settings.model, "input": texts });
        let value = self.settings.post(self.name(), "/embeddings", &body)?;
        let parsed: EmbeddingResponse = serde_json::from_value(value)
            .map_err(|e| ProviderError::invalid_response(self.name(), e.to_string()))?;
        if parsed.data.len() != texts.len() {
            return Err(ProviderError::invalid_response(
                self.name(),
                format!("{} vectors for {} texts", parsed.data.len(), texts.len()),
            ));
        }
        parsed
            .data
            .into_iter()
            .zip(texts)
            .map(|(datum, text)| {
                if datum.embedding.len() != self.dimension {
                    return Err(ProviderError::invalid_response(
                        self.name(),
                        format!(
                            "expected dimension {}, got {}",
                            self.dimension,
                            datum.embedding.len()
                        ),
                    ));
                }
                if text.trim().is_empty() {
                    return Ok(EmbeddingVector::zero(self.dimension));
                }
                Ok(EmbeddingVector::normalized(datum.embedding))
            })
            .collect()
    }
}

pub trait CompletionProvider: Send + Sync {
    fn name(&self) -> &str;
    fn complete(&self, prompt: &str) -> Result<String, ProviderError>;
}

/// Remote completion: `POST {base}/chat/completions` with one user message
/// and temperature 0, reading `choices[0].message.content`.
#[derive(Clone, Debug)]
pub struct HttpCompletion {
    settings: RemoteSettings,
}

impl HttpCompletion {
    pub fn new(settings: RemoteSettings) -> Self {
        Self { settings }
    }

    pub fn from_env() -> Option<Self> {
        RemoteSettings::from_env("CARDLAKE_LLM").map(Self::new)
    }
}

impl CompletionProvider for HttpCompletion {
    fn name(&self) -> &str {
        "http-completion"
    }

    fn complete(&self, prompt: &str) -> Result<String, ProviderError> {
        let body = serde_json::json!({
            "model": self.settings.model,
            "temperature": 0,
            "messages": [{ "role": "user", "content": prompt }],
        });
        let value = self.settings.post(self.name(), "/chat/completions", &body)?;
        value
            .pointer("/choices/0/message/content")
            .and_then(serde_json::Value::as_str)
            .map(str::to_owned)
            .ok_or_else(|| {
                ProviderError::invalid_response(self.name(), "missing choices[0].message.content")
            })
    }
}

/// One prompt exchange: what was sent, what came back, and what we made of it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub task: String,
    pub prompt_version: String,
    pub input: String,
    pub output: String,
    pub post_processed: String,
}

/// Append-only record of every prompt exchange, optionally mirrored to a
/// JSONL file.
#[derive(Debug, Default)]
pub struct AuditLog {
    records: Mutex<Vec<AuditRecord>>,
    file: Option<PathBuf>,
}

impl AuditLog {
    pub fn in_memory() -> Self {
        Self::default()
    }

    pub fn to_file(path: impl Into<PathBuf>) -> Self {
        Self {
            records: Mutex::default(),
            file: Some(path.into()),
        }
    }

    /// Stores the record and returns its sequence number.
    pub fn append(&self, record: AuditRecord) -> std::io::Result<usize> {
        let mut records = self.records.lock().expect("audit log poisoned");
        if let Some(path) = &self.file {
            let mut file = OpenOptions::new().create(true).append(true).open(path)?;
            let line = serde_json::to_string(&record).expect("audit record serializes");
            writeln!(file, "{line}")?;
        }
        records.push(record);
        Ok(records.len() - 1)
    }

    pub fn records(&self) -> Vec<AuditRecord> {
        self.records.lock().expect("audit log poisoned").clone()
    }
}

/// A completion provider paired with the log its exchanges are written to.
pub struct PromptRunner<'a> {
    pub provider: &'a dyn CompletionProvider,
    pub audit: &'a AuditLog,
}

impl PromptRunner<'_> {
    /// Sends `prompt`, post-processes the reply with `post`, and records the
    /// exchange whether or not post-processing succeeds.
    pub fn run<T>(
        &self,
        task: &str,
        prompt_version: &str,
        prompt: String,
        post: impl FnOnce(&str) -> Result<(T, String), ProviderError>,
    ) -> Result<T, ProviderError> {
        let output = self.provider.complete(&prompt)?;
        let result = post(&output);
        let post_processed = match &result {
            Ok((_, rendered)) => rendered.clone(),
            Err(e) => format!("error: {e}"),
        };
        self.audit
            .append(AuditRecord {
                task: task.to_owned(),
                prompt_version: prompt_version.to_owned(),
                input: prompt,
                output,
                post_processed,
            })
            .map_err(|e| ProviderError::invalid_response(self.provider.name(), format!("audit log: {e}")))?;
        result.map(|(value, _)| value)
    }
}

/// Strips a surrounding Markdown code fence from a model reply.
pub(crate) fn strip_code_fence(reply: &str) -> &str {
    let trimmed = reply.trim();
    let Some(rest) = trimmed.strip_prefix("```") else {
        return trimmed;
    };
    let rest = rest.split_once('\n').map_or("", |(_, body)| body);
    rest.strip_suffix("```").unwrap_or(rest).trim()
}
