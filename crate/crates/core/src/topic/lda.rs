//! Latent Dirichlet allocation fitted by collapsed Gibbs sampling.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::text::TokenizedContent;
use super::TopicError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LdaConfig {
    pub k: usize,
    /// Symmetric document-topic prior.
    pub alpha: f64,
    /// Symmetric topic-word prior.
    pub beta: f64,
    pub iterations: usize,
    pub seed: u64,
}

impl Default for LdaConfig {
    fn default() -> Self {
        LdaConfig {
            k: 2,
            alpha: 0.1,
            beta: 0.01,
            iterations: 1000,
            seed: 42,
        }
    }
}

impl LdaConfig {
    fn validate(&self) -> Result<(), TopicError> {
        if self.k == 0 {
            return Err(TopicError::InvalidParameter("k must be >= 1".into()));
        }
        if self.iterations == 0 {
            return Err(TopicError::InvalidParameter("iterations must be >= 1".into()));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(TopicError::InvalidParameter(format!("alpha must be positive, got {}", self.alpha)));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(TopicError::InvalidParameter(format!("beta must be positive, got {}", self.beta)));
        }
        Ok(())
    }
}

/// Word distributions per topic and topic coverage per document.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TopicModelResult {
    pub k: usize,
    /// Sorted vocabulary; indexes the columns of `topics`.
    pub vocabulary: Vec<String>,
    /// `topics[j][v]` = p(vocabulary[v] | topic j).
    pub topics: Vec<Vec<f64>>,
    /// `coverage[i][j]` = share of topic j in document i.
    pub coverage: Vec<Vec<f64>>,
    pub seed: u64,
}

impl TopicModelResult {
    /// Assembles a result from precomputed distributions, checking shapes and
    /// that every row is a probability vector.
    pub fn from_parts(
        vocabulary: Vec<String>,
        topics: Vec<Vec<f64>>,
        coverage: Vec<Vec<f64>>,
        seed: u64,
    ) -> Result<Self, TopicError> {
        let k = topics.len();
        if k == 0 {
            return Err(TopicError::Malformed("no topics".into()));
        }
        let check_row = |row: &[f64], what: String| -> Result<(), TopicError> {
            if row.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
                return Err(TopicError::Malformed(format!("{what} has a negative or non-finite entry")));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > 1e-9 {
                return Err(TopicError::Malformed(format!("{what} sums to {s}")));
            }
            Ok(())
        };
        for (j, row) in topics.iter().enumerate() {
            if row.len() != vocabulary.len() {
                return Err(TopicError::Malformed(format!("topic {j} has {} entries", row.len())));
            }
            check_row(row, format!("topic {j}"))?;
        }
        for (i, row) in coverage.iter().enumerate() {
            if row.len() != k {
                return Err(TopicError::Malformed(format!("coverage row {i} has {} entries", row.len())));
            }
            check_row(row, format!("coverage row {i}"))?;
        }
        Ok(TopicModelResult {
            k,
            vocabulary,
            topics,
            coverage,
            seed,
        })
    }

    /// The `m` most probable terms of topic `j`, ties broken by term.
    /// Zero-probability terms are never returned.
    pub fn top_terms(&self, j: usize, m: usize) -> Vec<(&str, f64)> {
        let mut terms: Vec<(&str, f64)> = self.vocabulary
            .iter()
            .map(String::as_str)
            .zip(self.topics[j].iter().copied())
            .filter(|(_, p)| *p > 0.0)
            .collect();
        terms.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        terms.truncate(m);
        terms
    }

    /// Plain-text report: seed, per-topic top terms and the coverage rows.
    pub fn report(&self, top_n: usize) -> String {
        let mut out = format!("seed {}\ntopics {}\n", self.seed, self.k);
        for j in 0..self.k {
            out.push_str(&format!("topic {}\n", j + 1));
            for (term, p) in self.top_terms(j, top_n) {
                out.push_str(&format!("  {term:<32} {p:.6}\n"));
            }
        }
        for (i, row) in self.coverage.iter().enumerate() {
            let cells: Vec<String> = row.iter().map(|p| format!("{p:.6}")).collect();
            out.push_str(&format!("coverage {} {}\n", i + 1, cells.join(" ")));
        }
        out
    }
}

/// Fits LDA with `config.iterations` full Gibbs sweeps. The result depends
/// only on the documents and the configuration, seed included.
pub fn fit_lda(docs: &[TokenizedContent], config: &LdaConfig) -> Result<TopicModelResult, TopicError> {
    config.validate()?;
    if docs.is_empty() {
        return Err(TopicError::NoDocuments);
    }
    if let Some(i) = docs.iter().position(TokenizedContent::is_empty) {
        return Err(TopicError::EmptyDocument(i));
    }
    let total: usize = docs.iter().map(|d| d.tokens.len()).sum();
    if config.k > total {
        return Err(TopicError::TooFewTokens { k: config.k, tokens: total });
    }

    let vocab_index: BTreeMap<&str, usize> = docs
        .iter()
        .flat_map(|d| d.tokens.iter().map(String::as_str))
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .enumerate()
        .map(|(i, w)| (w, i))
        .collect();
    let vocabulary: Vec<String> = vocab_index.keys().map(|w| w.to_string()).collect();
    let words: Vec<Vec<usize>> = docs
        .iter()
        .map(|d| d.tokens.iter().map(|t| vocab_index[t.as_str()]).collect())
        .collect();

    let k = config.k;
    let v = vocabulary.len();
    let (alpha, beta) = (config.alpha, config.beta);
    let v_beta = v as f64 * beta;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut doc_topic = vec![vec![0usize; k]; docs.len()];
    let mut topic_word = vec![vec![0usize; v]; k];
    let mut topic_total = vec![0usize; k];
    let mut assign: Vec<Vec<usize>> = Vec::with_capacity(docs.len());
    for (d, ws) in words.iter().enumerate() {
        let zs: Vec<usize> = ws
            .iter()
            .map(|&w| {
                let z = rng.gen_range(0..k);
                doc_topic[d][z] += 1;
                topic_word[z][w] += 1;
                topic_total[z] += 1;
                z
            })
            .collect();
        assign.push(zs);
    }

    let mut weights = vec![0.0f64; k];
    for _ in 0..config.iterations {
        for (d, ws) in words.iter().enumerate() {
            for (i, &w) in ws.iter().enumerate() {
                let old = assign[d][i];
                doc_topic[d][old] -= 1;
                topic_word[old][w] -= 1;
                topic_total[old] -= 1;

                let mut acc = 0.0;
                for t in 0..k {
                    acc += (doc_topic[d][t] as f64 + alpha) * (topic_word[t][w] as f64 + beta)
                        / (topic_total[t] as f64 + v_beta);
                    weights[t] = acc;
                }
                let u = rng.gen::<f64>() * acc;
                let new = weights.iter().position(|&c| u < c).unwrap_or(k - 1);

                assign[d][i] = new;
                doc_topic[d][new] += 1;
                topic_word[new][w] += 1;
                topic_total[new] += 1;
            }
        }
    }

    let topics = (0..k)
        .map(|t| {
            let denom = topic_total[t] as f64 + v_beta;
            topic_word[t].iter().map(|&n| (n as f64 + beta) / denom).collect()
        })
        .collect();
    let k_alpha = k as f64 * alpha;
    let coverage = doc_topic
        .iter()
        .zip(&words)
        .map(|(counts, ws)| {
            let denom = ws.len() as f64 + k_alpha;
            counts.iter().map(|&n| (n as f64 + alpha) / denom).collect()
        })
        .collect();

    Ok(TopicModelResult {
        k,
        vocabulary,
        topics,
        coverage,
        seed: config.seed,
    })
}
