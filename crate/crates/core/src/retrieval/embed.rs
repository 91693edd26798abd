//! Text embedders.
//!
//! The default embedder is a deterministic hashing embedder: it needs no
//! network or model weights, which keeps store builds reproducible and lets
//! the exactness of the search itself be tested. An OpenAI-style HTTP
//! embedder is available behind the `http` feature.

use crate::error::RetrievalError;

/// Maps text to a fixed-dimension vector.
pub trait Embedder: Sync {
    /// Stable identifier stored in the manifest; a store refuses queries
    /// from a different embedder.
    fn id(&self) -> String;
    fn dim(&self) -> usize;
    fn embed(&self, text: &str) -> Result<Vec<f64>, RetrievalError>;
}

/// Bag-of-tokens hashing embedder.
///
/// Tokens are maximal runs of alphanumeric characters, lowercased; each
/// token is FNV-1a-hashed into one of `dim` buckets and counted; the count
/// vector is l2-normalized. Text with no tokens embeds to the zero vector,
/// which has cosine similarity 0 with everything.
#[derive(Debug, Clone)]
pub struct HashingEmbedder {
    dim: usize,
}

impl HashingEmbedder {
    pub fn new(dim: usize) -> Result<Self, RetrievalError> {
        if dim == 0 {
            return Err(RetrievalError::Backend(
                "embedding dimension must be positive".to_string(),
            ));
        }
        Ok(HashingEmbedder { dim })
    }
}

impl Default for HashingEmbedder {
    fn default() -> Self {
        HashingEmbedder { dim: 512 }
    }
}

const FNV_OFFSET: u64 = 0xcbf29ce484222325;
const FNV_PRIME: u64 = 0x100000001b3;

fn fnv1a_64(bytes: impl Iterator<Item = u8>) -> u64 {
    let mut h = FNV_OFFSET;
    for b in bytes {
        h = (h ^ b as u64).wrapping_mul(FNV_PRIME);
    }
    h
}

impl Embedder for HashingEmbedder {
    fn id(&self) -> String {
        format!("fnv1a-hash-{}", self.dim)
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, text: &str) -> Result<Vec<f64>, RetrievalError> {
        let mut v = vec![0.0f64; self.dim];
        for token in text
            .split(|c: char| !c.is_alphanumeric())
            .filter(|t| !t.is_empty())
        {
            let lowered = token.to_lowercase();
            let h = fnv1a_64(lowered.bytes());
            v[(h % self.dim as u64) as usize] += 1.0;
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            for x in v.iter_mut() {
                *x /= norm;
            }
        }
        Ok(v)
    }
}

/// OpenAI-style `/embeddings` client. The API key comes from an environment
/// variable and is excluded from `Debug` output.
#[cfg(feature = "http")]
pub struct HttpEmbedder {
    pub base_url: String,
    pub model: String,
    dim: usize,
    api_key: String,
    agent: ureq::Agent,
}

#[cfg(feature = "http")]
impl std::fmt::Debug for HttpEmbedder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HttpEmbedder")
            .field("base_url", &self.base_url)
            .field("model", &self.model)
            .field("dim", &self.dim)
            .field("api_key", &"<redacted>")
            .finish()
    }
}

#[cfg(feature = "http")]
impl HttpEmbedder {
    pub fn from_env(
        base_url: &str,
        model: &str,
        dim: usize,
        api_key_env: &str,
        timeout_secs: u64,
    ) -> Result<Self, RetrievalError> {
        let api_key = std::env::var(api_key_env).map_err(|_| {
            RetrievalError::Backend(format!("api key environment variable {api_key_env} not set"))
        })?;
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(std::time::Duration::from_secs(timeout_secs)))
            .build()
            .into();
        Ok(HttpEmbedder {
            base_url: base_url.trim_end_matches('/').to_string(),
            model: model.to_string(),
            dim,
            api_key,
            agent,
        })
    }
}

#[cfg(feature = "http")]
impl Embedder for HttpEmbedder {
    fn id(&self) -> String {
        format!("http-{}-{}", self.model, self.dim)
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, text: &str) -> Result<Vec<f64>, RetrievalError> {
        let url = format!("{}/embeddings", self.base_url);
        let body = serde_json::json!({ "model": self.model, "input": text });
        let mut response = self
            .agent
            .post(&url)
            .header("Authorization", &format!("Bearer {}", self.api_key))
            .send_json(&body)
            .map_err(|e| RetrievalError::Backend(e.to_string()))?;
        let payload: serde_json::Value = response
            .body_mut()
            .read_json()
            .map_err(|e| RetrievalError::Backend(e.to_string()))?;
        let raw = payload["data"][0]["embedding"]
            .as_array()
            .ok_or_else(|| RetrievalError::Backend("no data[0].embedding".to_string()))?;
        let v: Vec<f64> = raw.iter().filter_map(serde_json::Value::as_f64).collect();
        if v.len() != self.dim {
            return Err(RetrievalError::DimMismatch {
                got: v.len(),
                want: self.dim,
            });
        }
        Ok(v)
    }
}
