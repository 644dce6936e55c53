//! Allocation of a session's content to knowledge points.
//!
//! Only the top `m` terms of each topic take part. The slot for term `i` of
//! topic `j` receives `coverage[j] * p(i | j)`, normalized by the sum over all
//! `k * m` slots. A knowledge point collects every slot whose term names it.

use std::collections::BTreeMap;

use serde::Serialize;

use super::lda::TopicModelResult;
use super::TopicError;
use crate::tree::KnowledgeTree;

pub const DEFAULT_TOP_M: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShareAllocation {
    /// Knowledge point -> share of the session content.
    pub shares: BTreeMap<String, f64>,
    /// Considered terms that are not knowledge points, with their shares.
    pub non_knowledge: BTreeMap<String, f64>,
    pub m: usize,
    /// Topics that had fewer than `m` terms with positive probability.
    pub short_topics: Vec<usize>,
}

impl ShareAllocation {
    pub fn knowledge_mass(&self) -> f64 {
        self.shares.values().sum()
    }

    pub fn non_knowledge_mass(&self) -> f64 {
        self.non_knowledge.values().sum()
    }
}

/// Core allocation over raw distributions. `coverage` is one document's topic
/// shares, `topics[j]` a distribution over `vocabulary`.
pub fn allocate_shares(
    coverage: &[f64],
    topics: &[Vec<f64>],
    vocabulary: &[String],
    m: usize,
    is_point: impl Fn(&str) -> bool,
) -> Result<ShareAllocation, TopicError> {
    if m == 0 {
        return Err(TopicError::InvalidParameter("m must be >= 1".into()));
    }
    if coverage.len() != topics.len() {
        return Err(TopicError::Malformed(format!(
            "{} coverage entries for {} topics",
            coverage.len(),
            topics.len()
        )));
    }
    let mut slots: Vec<(&str, f64)> = Vec::new();
    let mut short_topics = Vec::new();
    for (j, (row, pi)) in topics.iter().zip(coverage).enumerate() {
        if row.len() != vocabulary.len() {
            return Err(TopicError::Malformed(format!("topic {j} has {} entries", row.len())));
        }
        let mut terms: Vec<(&str, f64)> = vocabulary
            .iter()
            .map(String::as_str)
            .zip(row.iter().copied())
            .filter(|(_, p)| *p > 0.0)
            .collect();
        terms.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        if terms.len() < m {
            log::info!("topic {j} has only {} terms with positive probability (m = {m})", terms.len());
            short_topics.push(j);
        }
        slots.extend(terms.into_iter().take(m).map(|(t, p)| (t, pi * p)));
    }
    let total: f64 = slots.iter().map(|(_, w)| w).sum();
    if !(total > 0.0) {
        return Err(TopicError::Malformed("considered terms carry no probability mass".into()));
    }
    let mut shares = BTreeMap::new();
    let mut non_knowledge = BTreeMap::new();
    for (term, w) in slots {
        let target = if is_point(term) { &mut shares } else { &mut non_knowledge };
        *target.entry(term.to_string()).or_insert(0.0) += w / total;
    }
    Ok(ShareAllocation {
        shares,
        non_knowledge,
        m,
        short_topics,
    })
}

/// Shares of the tree's knowledge points in document `doc_index`.
pub fn knowledge_point_shares(
    result: &TopicModelResult,
    doc_index: usize,
    tree: &KnowledgeTree,
    m: usize,
) -> Result<ShareAllocation, TopicError> {
    let coverage = result.coverage.get(doc_index).ok_or(TopicError::DocumentIndex {
        index: doc_index,
        len: result.coverage.len(),
    })?;
    allocate_shares(coverage, &result.topics, &result.vocabulary, m, |t| tree.is_leaf(t))
}
