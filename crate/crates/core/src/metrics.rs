//! Lexical (BLEU) and embedding-based similarity between two sentences.
//!
//! Tokenization is fixed: lowercase the text, put whitespace around every
//! ASCII or Unicode punctuation character, then split on whitespace. The
//! [`Tokenizer::DropPunctuation`] variant additionally discards the
//! punctuation tokens.

use std::collections::HashMap;
use std::hash::{Hash, Hasher};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Highest n-gram order scored.
pub const MAX_NGRAM: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Tokenizer {
    /// Punctuation split off into separate tokens.
    #[default]
    Detach,
    /// Punctuation split off, then removed.
    DropPunctuation,
}

impl Tokenizer {
    pub fn tokenize(&self, text: &str) -> Vec<String> {
        let mut spaced = String::with_capacity(text.len() + 8);
        for ch in text.chars().flat_map(char::to_lowercase) {
            if is_punct(ch) {
                spaced.push(' ');
                if *self == Tokenizer::Detach {
                    spaced.push(ch);
                }
                spaced.push(' ');
            } else {
                spaced.push(ch);
            }
        }
        spaced.split_whitespace().map(str::to_owned).collect()
    }
}

fn is_punct(ch: char) -> bool {
    ch.is_ascii_punctuation() || (!ch.is_alphanumeric() && !ch.is_whitespace() && !ch.is_control())
}

/// A score with a flag for degenerate inputs (empty candidate, no n-grams).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Score {
    pub value: f64,
    pub degenerate: bool,
}

fn ngram_counts<S: AsRef<str>>(tokens: &[S], n: usize) -> HashMap<Vec<&str>, usize> {
    let mut counts = HashMap::new();
    if n == 0 || tokens.len() < n {
        return counts;
    }
    for window in tokens.windows(n) {
        let key: Vec<&str> = window.iter().map(AsRef::as_ref).collect();
        *counts.entry(key).or_insert(0) += 1;
    }
    counts
}

/// Clipped n-gram precision of `candidate` against `reference`.
pub fn ngram_precision<S: AsRef<str>>(candidate: &[S], reference: &[S], n: usize) -> Result<Score> {
    if n == 0 {
        return Err(Error::Parameter("n-gram order must be >= 1".into()));
    }
    let cand = ngram_counts(candidate, n);
    let total: usize = cand.values().sum();
    if total == 0 {
        return Ok(Score {
            value: 0.0,
            degenerate: true,
        });
    }
    let refs = ngram_counts(reference, n);
    let matched: usize = cand
        .iter()
        .map(|(g, &c)| c.min(refs.get(g).copied().unwrap_or(0)))
        .sum();
    Ok(Score {
        value: matched as f64 / total as f64,
        degenerate: false,
    })
}

/// Per-order precisions and composite BLEU for one sentence pair.
#[derive(Debug, Clone, PartialEq)]
pub struct BleuScores {
    /// `per_n[i]` is the clipped precision of order `i + 1`; orders above
    /// `max_n` are `None`.
    pub per_n: [Option<f64>; MAX_NGRAM],
    /// Geometric mean of the precisions up to `max_n` times the brevity penalty.
    pub composite: f64,
    pub brevity_penalty: f64,
    pub degenerate: bool,
}

/// BLEU of `candidate` against a single `reference`, unsmoothed.
pub fn bleu(candidate: &str, reference: &str, max_n: usize, tokenizer: Tokenizer) -> Result<BleuScores> {
    if !(1..=MAX_NGRAM).contains(&max_n) {
        return Err(Error::Parameter(format!(
            "max n-gram order must lie in 1..={MAX_NGRAM}, got {max_n}"
        )));
    }
    let cand = tokenizer.tokenize(candidate);
    let refr = tokenizer.tokenize(reference);
    let mut per_n = [None; MAX_NGRAM];
    let mut log_sum = 0.0;
    let mut degenerate = cand.is_empty();
    let mut any_zero = false;
    for n in 1..=max_n {
        let p = ngram_precision(&cand, &refr, n)?;
        degenerate |= p.degenerate && n == 1;
        per_n[n - 1] = Some(p.value);
        if p.value == 0.0 {
            any_zero = true;
        } else {
            log_sum += p.value.ln();
        }
    }
    let brevity_penalty = if cand.is_empty() {
        0.0
    } else {
        (1.0 - refr.len() as f64 / cand.len() as f64).min(0.0).exp()
    };
    let composite = if any_zero {
        0.0
    } else {
        (log_sum / max_n as f64).exp() * brevity_penalty
    };
    Ok(BleuScores {
        per_n,
        composite: composite.clamp(0.0, 1.0),
        brevity_penalty,
        degenerate,
    })
}

/// Cosine of the angle between `a` and `b`.
pub fn cosine_similarity<T: Real>(a: &[T], b: &[T]) -> Result<T> {
    if a.len() != b.len() {
        return Err(Error::Length {
            expected: a.len(),
            actual: b.len(),
        });
    }
    let (mut dot, mut na, mut nb) = (T::zero(), T::zero(), T::zero());
    for (&x, &y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if !(na > T::zero()) || !(nb > T::zero()) {
        return Err(Error::UndefinedSimilarity);
    }
    let c = dot / (na.sqrt() * nb.sqrt());
    Ok(c.max(-T::one()).min(T::one()))
}

/// Source of fixed-dimension sentence embeddings.
///
/// Implementations must return identical vectors for identical sentences.
pub trait EmbeddingProvider: Send + Sync {
    fn embed(&self, sentence: &str) -> Result<Vec<f64>>;
}

/// Feature-hashed bag of word unigrams and character trigrams.
///
/// Deterministic across runs and platforms; a stand-in when no sentence
/// encoder is available.
#[derive(Debug, Clone)]
pub struct HashEmbedding {
    dim: usize,
}

impl HashEmbedding {
    pub fn new(dim: usize) -> Self {
        assert!(dim > 0, "embedding dimension must be positive");
        Self { dim }
    }
}

impl Default for HashEmbedding {
    fn default() -> Self {
        Self::new(256)
    }
}

/// 64-bit FNV-1a; fixed so embeddings do not depend on the std hasher.
struct Fnv1a(u64);

impl Hasher for Fnv1a {
    fn finish(&self) -> u64 {
        self.0
    }

    fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 ^= b as u64;
            self.0 = self.0.wrapping_mul(0x0100_0000_01b3);
        }
    }
}

fn fnv(feature: &str) -> u64 {
    let mut h = Fnv1a(0xcbf2_9ce4_8422_2325);
    feature.hash(&mut h);
    h.finish()
}

impl EmbeddingProvider for HashEmbedding {
    fn embed(&self, sentence: &str) -> Result<Vec<f64>> {
        let mut v = vec![0.0; self.dim];
        let mut add = |feature: &str, weight: f64| {
            let h = fnv(feature);
            let sign = if h >> 63 == 0 { 1.0 } else { -1.0 };
            v[(h % self.dim as u64) as usize] += sign * weight;
        };
        for token in Tokenizer::DropPunctuation.tokenize(sentence) {
            add(&format!("w:{token}"), 1.0);
            let padded: Vec<char> = format!("#{token}#").chars().collect();
            for tri in padded.windows(3) {
                add(&format!("c:{}", tri.iter().collect::<String>()), 0.5);
            }
        }
        Ok(v)
    }
}

/// Cosine similarity of the two sentences' embeddings.
pub fn semantic_similarity(
    candidate: &str,
    reference: &str,
    provider: &dyn EmbeddingProvider,
) -> Result<f64> {
    let a = provider.embed(candidate)?;
    let b = provider.embed(reference)?;
    cosine_similarity(&a, &b)
}

/// Scores of a received sentence against the transmitted one.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreReport {
    pub bleu_per_n: [f64; MAX_NGRAM],
    pub bleu_composite: f64,
    /// `None` when no embedding provider is configured or embedding failed.
    pub semantic_similarity: Option<f64>,
    pub degenerate: bool,
}

impl ScoreReport {
    /// BLEU for every order 1..=4 (composite over all four) and, when a
    /// provider is given, embedding similarity.
    pub fn compute(
        candidate: &str,
        reference: &str,
        provider: Option<&dyn EmbeddingProvider>,
    ) -> Result<Self> {
        let b = bleu(candidate, reference, MAX_NGRAM, Tokenizer::Detach)?;
        let per_n = b.per_n.map(|p| p.unwrap_or(0.0));
        let semantic_similarity = match provider {
            Some(p) => match semantic_similarity(candidate, reference, p) {
                Ok(s) => Some(s),
                // Empty or all-punctuation text embeds to the zero vector.
                Err(Error::UndefinedSimilarity) => Some(0.0),
                Err(e) => return Err(e),
            },
            None => None,
        };
        Ok(Self {
            bleu_per_n: per_n,
            bleu_composite: b.composite,
            semantic_similarity,
            degenerate: b.degenerate,
        })
    }
}
