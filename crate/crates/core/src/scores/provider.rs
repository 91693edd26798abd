//! Model providers that turn a scoring prompt into a response string.
//!
//! The deterministic stub providers answer locally (seeded pseudo-random
//! scores, a fixed score map, or a constant) and exist so every pipeline
//! stage can run end to end without network access. The HTTP provider talks
//! to an OpenAI-style chat-completions endpoint and is feature-gated.

use std::collections::BTreeMap;

use crate::error::ProviderError;

/// Deterministic identifiers for one provider call. Stub providers fold
/// these into their seed so repeated trials differ reproducibly regardless
/// of thread scheduling; network providers ignore them.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CallContext {
    pub batch_index: usize,
    pub trial: u32,
    pub attempt: u32,
}

/// Something that can answer a scoring prompt.
pub trait ScoreProvider: Sync {
    /// Stable identifier recorded in score provenance and cache keys.
    fn id(&self) -> &str;
    /// Sampling temperature; a temperature of exactly zero means responses
    /// are deterministic, so collection runs a single trial.
    fn temperature(&self) -> f64;
    /// Answer one prompt.
    fn complete(&self, system: &str, user: &str, ctx: CallContext)
        -> Result<String, ProviderError>;
}

/// How a [`StubProvider`] assigns scores.
#[derive(Debug, Clone)]
pub enum StubScoring {
    /// Uniform pseudo-random score in the declared range, derived from a
    /// hash of (seed, name, trial). Stable across batch sizes and threads.
    Seeded { seed: u64 },
    /// Fixed score per feature name; unknown names are an error.
    Map(BTreeMap<String, f64>),
    /// Same score for every feature.
    Constant(f64),
}

/// Offline provider that fabricates well-formed responses.
#[derive(Debug, Clone)]
pub struct StubProvider {
    pub scoring: StubScoring,
    pub range: (f64, f64),
    pub temperature: f64,
    id: String,
}

impl StubProvider {
    pub fn new(scoring: StubScoring, range: (f64, f64), temperature: f64) -> Self {
        let id = match &scoring {
            StubScoring::Seeded { seed } => format!("stub-seeded-{seed}"),
            StubScoring::Map(_) => "stub-map".to_string(),
            StubScoring::Constant(_) => "stub-const".to_string(),
        };
        StubProvider {
            scoring,
            range,
            temperature,
            id,
        }
    }

    fn score_for(&self, name: &str, trial: u32) -> Result<f64, ProviderError> {
        match &self.scoring {
            StubScoring::Seeded { seed } => {
                let mut h = fnv1a(*seed);
                for b in name.bytes() {
                    h = fnv1a_step(h, b);
                }
                if self.temperature != 0.0 {
                    for b in trial.to_le_bytes() {
                        h = fnv1a_step(h, b);
                    }
                }
                let unit = (h >> 11) as f64 / (1u64 << 53) as f64; // [0, 1)
                Ok(self.range.0 + unit * (self.range.1 - self.range.0))
            }
            StubScoring::Map(map) => map
                .get(name)
                .copied()
                .ok_or_else(|| ProviderError::StubMissingName(name.to_string())),
            StubScoring::Constant(v) => Ok(*v),
        }
    }
}

/// Pull the feature names back out of a rendered prompt: the last
/// `[...]` block is the gene list.
pub(crate) fn names_from_prompt(user: &str) -> Result<Vec<String>, ProviderError> {
    let open = user.rfind('[').ok_or(ProviderError::UnreadablePrompt)?;
    let close = user[open..]
        .find(']')
        .map(|i| open + i)
        .ok_or(ProviderError::UnreadablePrompt)?;
    let inner = &user[open + 1..close];
    let names: Vec<String> = inner
        .split(',')
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .collect();
    if names.is_empty() {
        return Err(ProviderError::UnreadablePrompt);
    }
    Ok(names)
}

impl ScoreProvider for StubProvider {
    fn id(&self) -> &str {
        &self.id
    }

    fn temperature(&self) -> f64 {
        self.temperature
    }

    fn complete(
        &self,
        _system: &str,
        user: &str,
        ctx: CallContext,
    ) -> Result<String, ProviderError> {
        let names = names_from_prompt(user)?;
        let mut out = String::new();
        for name in &names {
            let v = self.score_for(name, ctx.trial)?;
            out.push_str(&format!("**{name}**: {v}\n"));
        }
        Ok(out)
    }
}

const FNV_OFFSET: u64 = 0xcbf29ce484222325;
const FNV_PRIME: u64 = 0x100000001b3;

fn fnv1a(seed: u64) -> u64 {
    let mut h = FNV_OFFSET;
    for b in seed.to_le_bytes() {
        h = fnv1a_step(h, b);
    }
    h
}

fn fnv1a_step(h: u64, b: u8) -> u64 {
    (h ^ b as u64).wrapping_mul(FNV_PRIME)
}

/// What a [`FaultyStub`] answers while it is failing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaultMode {
    /// Respond with prose containing no score lines at all.
    Garbage,
    /// Respond with the first score in scientific notation.
    ScientificNotation,
    /// Omit the first feature's score line.
    OmitFirst,
    /// Fail at the transport level.
    Transport,
}

/// Test double wrapping another provider: the first `fail_attempts` attempts
/// of every batch fail in the configured way, later attempts delegate.
/// Exercises the retry path deterministically.
pub struct FaultyStub<P> {
    pub inner: P,
    pub fail_attempts: u32,
    pub mode: FaultMode,
}

impl<P: ScoreProvider> ScoreProvider for FaultyStub<P> {
    fn id(&self) -> &str {
        self.inner.id()
    }

    fn temperature(&self) -> f64 {
        self.inner.temperature()
    }

    fn complete(
        &self,
        system: &str,
        user: &str,
        ctx: CallContext,
    ) -> Result<String, ProviderError> {
        if ctx.attempt >= self.fail_attempts {
            return self.inner.complete(system, user, ctx);
        }
        match self.mode {
            FaultMode::Garbage => Ok("I cannot assign numeric scores to genes.".to_string()),
            FaultMode::ScientificNotation => {
                let good = self.inner.complete(system, user, ctx)?;
                let names = names_from_prompt(user)?;
                let first = &names[0];
                // Replace the first score with an exponent form.
                let mut out = String::new();
                for line in good.lines() {
                    if line.starts_with(&format!("**{first}**")) {
                        out.push_str(&format!("**{first}**: 1e-1\n"));
                    } else {
                        out.push_str(line);
                        out.push('\n');
                    }
                }
                Ok(out)
            }
            FaultMode::OmitFirst => {
                let good = self.inner.complete(system, user, ctx)?;
                let names = names_from_prompt(user)?;
                let first = &names[0];
                let out: String = good
                    .lines()
                    .filter(|l| !l.starts_with(&format!("**{first}**")))
                    .map(|l| format!("{l}\n"))
                    .collect();
                Ok(out)
            }
            FaultMode::Transport => Err(ProviderError::Transport(format!(
                "simulated outage (batch {}, attempt {})",
                ctx.batch_index, ctx.attempt
            ))),
        }
    }
}

/// Chat-completions client for an OpenAI-style endpoint.
///
/// The API key is read from an environment variable at construction and is
/// deliberately excluded from `Debug` output; it is never logged or written
/// to disk.
#[cfg(feature = "http")]
pub struct HttpProvider {
    pub base_url: String,
    pub model: String,
    pub temperature: f64,
    pub timeout_secs: u64,
    api_key: String,
    agent: ureq::Agent,
}

#[cfg(feature = "http")]
impl std::fmt::Debug for HttpProvider {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HttpProvider")
            .field("base_url", &self.base_url)
            .field("model", &self.model)
            .field("temperature", &self.temperature)
            .field("timeout_secs", &self.timeout_secs)
            .field("api_key", &"<redacted>")
            .finish()
    }
}

#[cfg(feature = "http")]
impl HttpProvider {
    /// Build a client, taking the API key from `api_key_env`.
    pub fn from_env(
        base_url: &str,
        model: &str,
        temperature: f64,
        api_key_env: &str,
        timeout_secs: u64,
    ) -> Result<Self, ProviderError> {
        let api_key = std::env::var(api_key_env)
            .map_err(|_| ProviderError::MissingApiKey(api_key_env.to_string()))?;
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(std::time::Duration::from_secs(timeout_secs)))
            .build()
            .into();
        Ok(HttpProvider {
            base_url: base_url.trim_end_matches('/').to_string(),
            model: model.to_string(),
            temperature,
            timeout_secs,
            api_key,
            agent,
        })
    }
}

#[cfg(feature = "http")]
impl ScoreProvider for HttpProvider {
    fn id(&self) -> &str {
        &self.model
    }

    fn temperature(&self) -> f64 {
        self.temperature
    }

    fn complete(
        &self,
        system: &str,
        user: &str,
        _ctx: CallContext,
    ) -> Result<String, ProviderError> {
        let url = format!("{}/chat/completions", self.base_url);
        let body = serde_json::json!({
            "model": self.model,
            "temperature": self.temperature,
            "messages": [
                {"role": "system", "content": system},
                {"role": "user", "content": user},
            ],
        });
        let mut response = self
            .agent
            .post(&url)
            .header("Authorization", &format!("Bearer {}", self.api_key))
            .send_json(&body)
            .map_err(|e| ProviderError::Transport(e.to_string()))?;
        let payload: serde_json::Value = response
            .body_mut()
            .read_json()
            .map_err(|e| ProviderError::MalformedPayload(e.to_string()))?;
        payload["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| {
                ProviderError::MalformedPayload(
                    "no choices[0].message.content in response".to_string(),
                )
            })
    }
}
