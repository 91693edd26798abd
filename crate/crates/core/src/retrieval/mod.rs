//! Exact cosine-similarity retrieval over chunked documents.
//!
//! Documents are split into fixed-size character windows with overlap, each
//! chunk is embedded, and queries run an exhaustive cosine scan — no
//! approximate index, so recall against a brute-force oracle is exactly 1.
//! A store persists as a `manifest.json` plus a `chunks.jsonl`, both written
//! deterministically.

mod embed;

pub use embed::{Embedder, HashingEmbedder};
#[cfg(feature = "http")]
pub use embed::HttpEmbedder;

use std::collections::BTreeSet;
use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::RetrievalError;
use crate::scores::ContextFetcher;

/// Character-window chunking policy.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
pub struct ChunkConfig {
    pub max_chars: usize,
    pub overlap: usize,
}

impl Default for ChunkConfig {
    fn default() -> Self {
        ChunkConfig {
            max_chars: 1000,
            overlap: 200,
        }
    }
}

impl ChunkConfig {
    pub fn validate(&self) -> Result<(), RetrievalError> {
        if self.max_chars == 0 {
            return Err(RetrievalError::BadChunker(
                "max_chars must be positive".to_string(),
            ));
        }
        if self.overlap >= self.max_chars {
            return Err(RetrievalError::BadChunker(format!(
                "overlap {} must be smaller than max_chars {}",
                self.overlap, self.max_chars
            )));
        }
        Ok(())
    }
}

/// Split text into character windows: each window is `max_chars` long
/// (the last one shorter), and consecutive windows overlap by `overlap`
/// characters. Returns the window texts; offsets are in characters.
pub fn chunk_text(text: &str, cfg: &ChunkConfig) -> Result<Vec<String>, RetrievalError> {
    cfg.validate()?;
    let chars: Vec<char> = text.chars().collect();
    if chars.is_empty() {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    let mut start = 0usize;
    loop {
        let end = (start + cfg.max_chars).min(chars.len());
        out.push(chars[start..end].iter().collect());
        if end == chars.len() {
            break;
        }
        start += cfg.max_chars - cfg.overlap;
    }
    Ok(out)
}

/// One embedded chunk. The id is `{doc_id}#{ordinal}`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Chunk {
    pub id: String,
    pub doc_id: String,
    pub ordinal: usize,
    pub text: String,
    pub vector: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
struct Manifest {
    embedder_id: String,
    dim: usize,
    chunker: ChunkConfig,
}

/// A search hit.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Hit {
    pub id: String,
    pub score: f64,
    pub text: String,
}

/// In-memory vector store with exhaustive cosine search.
#[derive(Debug, Clone)]
pub struct VectorStore {
    manifest: Manifest,
    chunks: Vec<Chunk>,
}

impl VectorStore {
    /// Chunk and embed `docs` (id, text) pairs. Chunk vectors are
    /// l2-normalized by the embedder contract, so cosine similarity is a
    /// dot product.
    pub fn build(
        embedder: &dyn Embedder,
        docs: &[(String, String)],
        chunker: ChunkConfig,
    ) -> Result<Self, RetrievalError> {
        chunker.validate()?;
        let mut ids = BTreeSet::new();
        let mut chunks = Vec::new();
        for (doc_id, text) in docs {
            if !ids.insert(doc_id.clone()) {
                return Err(RetrievalError::BadManifest {
                    path: String::new(),
                    reason: format!("duplicate document id {doc_id:?}"),
                });
            }
            for (ordinal, piece) in chunk_text(text, &chunker)?.into_iter().enumerate() {
                let vector = embedder.embed(&piece)?;
                if vector.len() != embedder.dim() {
                    return Err(RetrievalError::DimMismatch {
                        got: vector.len(),
                        want: embedder.dim(),
                    });
                }
                chunks.push(Chunk {
                    id: format!("{doc_id}#{ordinal}"),
                    doc_id: doc_id.clone(),
                    ordinal,
                    text: piece,
                    vector,
                });
            }
        }
        if chunks.is_empty() {
            return Err(RetrievalError::EmptyStore);
        }
        Ok(VectorStore {
            manifest: Manifest {
                embedder_id: embedder.id(),
                dim: embedder.dim(),
                chunker,
            },
            chunks,
        })
    }

    pub fn len(&self) -> usize {
        self.chunks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chunks.is_empty()
    }

    pub fn embedder_id(&self) -> &str {
        &self.manifest.embedder_id
    }

    pub fn dim(&self) -> usize {
        self.manifest.dim
    }

    pub fn chunks(&self) -> &[Chunk] {
        &self.chunks
    }

    /// Persist as `manifest.json` + `chunks.jsonl`. Chunks are written in
    /// build order with a stable field order, so saving the same store twice
    /// produces byte-identical files.
    pub fn save(&self, dir: &Path) -> Result<(), RetrievalError> {
        let io = |e: std::io::Error, p: &Path| RetrievalError::Io {
            path: p.display().to_string(),
            source: e,
        };
        std::fs::create_dir_all(dir).map_err(|e| io(e, dir))?;
        let manifest_path = dir.join("manifest.json");
        let body = serde_json::to_string_pretty(&self.manifest).map_err(|e| {
            RetrievalError::BadManifest {
                path: manifest_path.display().to_string(),
                reason: e.to_string(),
            }
        })?;
        std::fs::write(&manifest_path, body).map_err(|e| io(e, &manifest_path))?;
        let chunks_path = dir.join("chunks.jsonl");
        let mut f = std::fs::File::create(&chunks_path).map_err(|e| io(e, &chunks_path))?;
        for chunk in &self.chunks {
            let line = serde_json::to_string(chunk).map_err(|e| RetrievalError::BadManifest {
                path: chunks_path.display().to_string(),
                reason: e.to_string(),
            })?;
            writeln!(f, "{line}").map_err(|e| io(e, &chunks_path))?;
        }
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self, RetrievalError> {
        let io = |e: std::io::Error, p: &Path| RetrievalError::Io {
            path: p.display().to_string(),
            source: e,
        };
        let manifest_path = dir.join("manifest.json");
        let raw = std::fs::read_to_string(&manifest_path).map_err(|e| io(e, &manifest_path))?;
        let manifest: Manifest =
            serde_json::from_str(&raw).map_err(|e| RetrievalError::BadManifest {
                path: manifest_path.display().to_string(),
                reason: e.to_string(),
            })?;
        let chunks_path = dir.join("chunks.jsonl");
        let raw = std::fs::read_to_string(&chunks_path).map_err(|e| io(e, &chunks_path))?;
        let mut chunks = Vec::new();
        for (i, line) in raw.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let chunk: Chunk =
                serde_json::from_str(line).map_err(|e| RetrievalError::BadManifest {
                    path: chunks_path.display().to_string(),
                    reason: format!("line {}: {e}", i + 1),
                })?;
            if chunk.vector.len() != manifest.dim {
                return Err(RetrievalError::DimMismatch {
                    got: chunk.vector.len(),
                    want: manifest.dim,
                });
            }
            chunks.push(chunk);
        }
        if chunks.is_empty() {
            return Err(RetrievalError::EmptyStore);
        }
        Ok(VectorStore { manifest, chunks })
    }

    /// Exhaustive top-k cosine search. Results are sorted by score
    /// descending, ties broken by chunk id ascending. Refuses queries from
    /// an embedder other than the one the store was built with.
    pub fn query_top_k(
        &self,
        embedder: &dyn Embedder,
        query: &str,
        k: usize,
    ) -> Result<Vec<Hit>, RetrievalError> {
        if embedder.id() != self.manifest.embedder_id {
            return Err(RetrievalError::EmbedderMismatch {
                built: self.manifest.embedder_id.clone(),
                queried: embedder.id(),
            });
        }
        let q = embedder.embed(query)?;
        if q.len() != self.manifest.dim {
            return Err(RetrievalError::DimMismatch {
                got: q.len(),
                want: self.manifest.dim,
            });
        }
        let mut hits: Vec<Hit> = self
            .chunks
            .iter()
            .map(|c| Hit {
                id: c.id.clone(),
                score: dot(&q, &c.vector),
                text: c.text.clone(),
            })
            .collect();
        hits.sort_by(|a, b| {
            b.score
                .partial_cmp(&a.score)
                .expect("cosine scores are finite")
                .then_with(|| a.id.cmp(&b.id))
        });
        hits.truncate(k);
        Ok(hits)
    }

    /// Fraction of true top-k ids the store returns, averaged over queries.
    /// Ground truth is an independent brute-force scan; `k` is clamped to
    /// the store size.
    pub fn recall_at_k(
        &self,
        embedder: &dyn Embedder,
        queries: &[String],
        k: usize,
    ) -> Result<f64, RetrievalError> {
        if queries.is_empty() {
            return Err(RetrievalError::Backend("no queries".to_string()));
        }
        let k = k.min(self.chunks.len()).max(1);
        let mut total = 0.0;
        for query in queries {
            let got: BTreeSet<String> = self
                .query_top_k(embedder, query, k)?
                .into_iter()
                .map(|h| h.id)
                .collect();
            let truth = brute_force_top_k(self, embedder, query, k)?;
            let overlap = truth.iter().filter(|id| got.contains(*id)).count();
            total += overlap as f64 / k as f64;
        }
        Ok(total / queries.len() as f64)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Deliberately separate from `query_top_k`: selection by repeated scan
/// instead of sorting, used as ground truth for recall.
fn brute_force_top_k(
    store: &VectorStore,
    embedder: &dyn Embedder,
    query: &str,
    k: usize,
) -> Result<Vec<String>, RetrievalError> {
    let q = embedder.embed(query)?;
    let mut remaining: Vec<(&Chunk, f64)> = store
        .chunks
        .iter()
        .map(|c| (c, dot(&q, &c.vector)))
        .collect();
    let mut out = Vec::with_capacity(k);
    for _ in 0..k.min(remaining.len()) {
        let mut best = 0usize;
        for i in 1..remaining.len() {
            let (bc, bs) = &remaining[best];
            let (ic, is) = &remaining[i];
            if *is > *bs || (*is == *bs && ic.id < bc.id) {
                best = i;
            }
        }
        out.push(remaining.swap_remove(best).0.id.clone());
    }
    Ok(out)
}

/// The canonical query used to fetch context about one gene.
pub fn build_retrieval_prompt(gene: &str, category: &str) -> String {
    format!(
        "Retrieve information about gene {gene}, category \"{category}\", \
         especially in the context of {gene}'s relevance to \"{category}\"."
    )
}

/// Bridges a vector store into score collection: fetches the top chunks for
/// each feature name in a batch.
pub struct StoreContextFetcher<'a> {
    pub store: &'a VectorStore,
    pub embedder: &'a dyn Embedder,
    pub category: String,
    pub top_k: usize,
}

impl ContextFetcher for StoreContextFetcher<'_> {
    fn contexts_for(&self, names: &[String]) -> Result<Vec<String>, RetrievalError> {
        let mut out = Vec::new();
        for name in names {
            let prompt = build_retrieval_prompt(name, &self.category);
            for hit in self.store.query_top_k(self.embedder, &prompt, self.top_k)? {
                out.push(hit.text);
            }
        }
        Ok(out)
    }
}
