//! Concept pools and the applications built on familiarity scores:
//! common topics, lecture comprehension, research concentrations, referee
//! matching and discipline expertise.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use chrono::NaiveDateTime;
use serde::Serialize;
use thiserror::Error;

use crate::familiarity::{
    familiarity, relative_familiarity, understanding_logit, understanding_probability, FamiliarityError,
    LogisticParams, RetentionCurve,
};
use crate::history::{HistoryError, PersonHistories};
use crate::timefmt::format_datetime;
use crate::topic::TokenizedContent;
use crate::tree::{KnowledgeTree, TreeError};

/// Familiarity value per knowledge point.
pub type Scores = BTreeMap<String, f64>;

#[derive(Debug, Error, PartialEq)]
pub enum AnalyticsError {
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Familiarity(#[from] FamiliarityError),
    #[error("{0}")]
    History(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("group is empty")]
    EmptyGroup,
}

impl From<HistoryError> for AnalyticsError {
    fn from(e: HistoryError) -> Self {
        AnalyticsError::History(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PoolType {
    Tf,
    Idf,
    PersonFamiliarity,
    GroupFamiliarity,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConceptsPool {
    pub pool_type: PoolType,
    pub members: BTreeSet<String>,
    /// Thresholds and evaluation context the pool was selected with.
    pub criteria: BTreeMap<String, String>,
}

impl ConceptsPool {
    fn new(pool_type: PoolType, members: BTreeSet<String>, criteria: &[(&str, String)]) -> Self {
        ConceptsPool {
            pool_type,
            members,
            criteria: criteria.iter().map(|(k, v)| (k.to_string(), v.clone())).collect(),
        }
    }
}

/// Terms whose total frequency across the corpus is strictly above `min_tf`.
pub fn pool_tf(corpus: &[TokenizedContent], min_tf: u64) -> Result<ConceptsPool, AnalyticsError> {
    if min_tf < 1 {
        return Err(AnalyticsError::InvalidParameter("min_tf must be >= 1".into()));
    }
    let mut tf: HashMap<&str, u64> = HashMap::new();
    for doc in corpus {
        for t in &doc.tokens {
            *tf.entry(t.as_str()).or_default() += 1;
        }
    }
    let members = tf
        .into_iter()
        .filter(|(_, n)| *n > min_tf)
        .map(|(t, _)| t.to_string())
        .collect();
    Ok(ConceptsPool::new(PoolType::Tf, members, &[("min_tf", min_tf.to_string())]))
}

/// Terms with `log10(N / df) <= max_idf`, i.e. concepts shared widely across
/// the corpus.
pub fn pool_idf(corpus: &[TokenizedContent], max_idf: f64) -> Result<ConceptsPool, AnalyticsError> {
    if corpus.is_empty() {
        return Err(AnalyticsError::InvalidParameter("IDF needs a non-empty corpus".into()));
    }
    let n = corpus.len() as f64;
    let mut df: HashMap<&str, usize> = HashMap::new();
    for doc in corpus {
        for t in &doc.vocabulary {
            *df.entry(t.as_str()).or_default() += 1;
        }
    }
    let members = df
        .into_iter()
        .filter(|(_, d)| (n / *d as f64).log10() <= max_idf)
        .map(|(t, _)| t.to_string())
        .collect();
    Ok(ConceptsPool::new(
        PoolType::Idf,
        members,
        &[("max_idf", max_idf.to_string()), ("documents", corpus.len().to_string())],
    ))
}

pub fn idf(corpus: &[TokenizedContent], term: &str) -> Option<f64> {
    let df = corpus.iter().filter(|d| d.vocabulary.contains(term)).count();
    (df > 0).then(|| (corpus.len() as f64 / df as f64).log10())
}

/// Points the person's familiarity exceeds `min_f` on.
pub fn pool_person(scores: &Scores, min_f: f64) -> ConceptsPool {
    let members = scores
        .iter()
        .filter(|(_, f)| **f > min_f)
        .map(|(p, _)| p.clone())
        .collect();
    ConceptsPool::new(PoolType::PersonFamiliarity, members, &[("min_f", min_f.to_string())])
}

/// Points known (F > `min_f`) to at least `quorum_fraction` of the group.
pub fn pool_group(
    per_person: &BTreeMap<String, Scores>,
    min_f: f64,
    quorum_fraction: f64,
) -> Result<ConceptsPool, AnalyticsError> {
    if per_person.is_empty() {
        return Err(AnalyticsError::EmptyGroup);
    }
    if !(quorum_fraction > 0.0 && quorum_fraction <= 1.0) {
        return Err(AnalyticsError::InvalidParameter(format!(
            "quorum fraction must be in (0, 1], got {quorum_fraction}"
        )));
    }
    let group = per_person.len();
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for scores in per_person.values() {
        for (p, f) in scores {
            if *f > min_f {
                *counts.entry(p.as_str()).or_default() += 1;
            }
        }
    }
    let members = counts
        .into_iter()
        .filter(|(_, c)| *c as f64 >= quorum_fraction * group as f64)
        .map(|(p, _)| p.to_string())
        .collect();
    Ok(ConceptsPool::new(
        PoolType::GroupFamiliarity,
        members,
        &[
            ("min_f", min_f.to_string()),
            ("quorum_fraction", quorum_fraction.to_string()),
            ("group_size", group.to_string()),
        ],
    ))
}

fn rank_desc(items: &mut [(String, f64)]) {
    items.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
}

/// Points both people know (F > `min_f`), optionally restricted to a
/// branch's subtree, ranked by the smaller of the two familiarities.
pub fn common_topics(
    scores_a: &Scores,
    scores_b: &Scores,
    branch: Option<(&KnowledgeTree, &str)>,
    min_f: f64,
) -> Result<Vec<(String, f64)>, AnalyticsError> {
    let allowed: Option<BTreeSet<String>> = match branch {
        Some((tree, name)) => Some(tree.subtree_points(name)?.into_iter().collect()),
        None => None,
    };
    let mut out: Vec<(String, f64)> = scores_a
        .iter()
        .filter(|(p, _)| allowed.as_ref().is_none_or(|a| a.contains(*p)))
        .filter_map(|(p, fa)| {
            let fb = *scores_b.get(p)?;
            (*fa > min_f && fb > min_f).then(|| (p.clone(), fa.min(fb)))
        })
        .collect();
    rank_desc(&mut out);
    Ok(out)
}

/// How well a person can follow a talk over `poster_points`.
///
/// Without weights: the mean relative familiarity over the poster points,
/// unknown points counting as 0. With weights: the logistic probability over
/// the familiarities of the weighted points (the poster points when the
/// weights name none).
pub fn lecture_comprehension(
    scores: &Scores,
    poster_points: &[String],
    weights: Option<&LogisticParams>,
) -> Result<f64, AnalyticsError> {
    if poster_points.is_empty() {
        return Err(AnalyticsError::InvalidParameter("no poster points".into()));
    }
    match weights {
        Some(params) => {
            let points = if params.points.is_empty() { poster_points } else { &params.points[..] };
            let fs: Vec<f64> = points.iter().map(|p| scores.get(p).copied().unwrap_or(0.0)).collect();
            Ok(understanding_probability(understanding_logit(&fs, params)?))
        }
        None => {
            let relative = match relative_familiarity(scores) {
                Ok(r) => r,
                // nothing learned yet
                Err(FamiliarityError::Undefined(_)) => return Ok(0.0),
                Err(e) => return Err(e.into()),
            };
            let total: f64 = poster_points
                .iter()
                .map(|p| relative.get(p).copied().unwrap_or(0.0))
                .sum();
            Ok(total / poster_points.len() as f64)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConcentrationReport {
    pub person: String,
    pub window: (NaiveDateTime, NaiveDateTime),
    pub evaluated_at: NaiveDateTime,
    /// (knowledge point, familiarity), descending.
    pub ranked: Vec<(String, f64)>,
}

impl ConcentrationReport {
    pub fn as_vector(&self) -> BTreeMap<&str, f64> {
        self.ranked.iter().map(|(p, f)| (p.as_str(), *f)).collect()
    }
}

/// Familiarity at `at` computed from the records that stopped inside
/// `window`, keeping the `top_n` largest.
pub fn research_concentrations<C: RetentionCurve + ?Sized>(
    histories: &PersonHistories,
    person: &str,
    window: (NaiveDateTime, NaiveDateTime),
    at: NaiveDateTime,
    top_n: usize,
    curve: &C,
) -> Result<ConcentrationReport, AnalyticsError> {
    let (t0, t1) = window;
    if at < t1 {
        return Err(AnalyticsError::InvalidParameter(format!(
            "evaluation time {} precedes window end {}",
            format_datetime(&at),
            format_datetime(&t1)
        )));
    }
    let mut ranked = Vec::new();
    for history in histories.values() {
        let slice = history.window(t0, t1)?;
        if slice.is_empty() {
            continue;
        }
        ranked.push((slice.knowledge_point.clone(), familiarity(&slice, at, curve)?.value));
    }
    rank_desc(&mut ranked);
    ranked.truncate(top_n);
    Ok(ConcentrationReport {
        person: person.to_string(),
        window,
        evaluated_at: at,
        ranked,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RefereeMatch {
    pub paper_shares: BTreeMap<String, f64>,
    /// (referee, cosine similarity), descending.
    pub ranked_referees: Vec<(String, f64)>,
}

pub fn cosine_similarity(a: &BTreeMap<&str, f64>, b: &BTreeMap<&str, f64>) -> f64 {
    let dot: f64 = a.iter().filter_map(|(k, x)| b.get(k).map(|y| x * y)).sum();
    let na = a.values().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.values().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 || dot <= 0.0 {
        return 0.0;
    }
    (dot / (na * nb)).clamp(0.0, 1.0)
}

/// Ranks candidate referees by cosine similarity between the paper's
/// knowledge-point shares and each candidate's concentrations.
pub fn match_referees(
    paper_shares: &BTreeMap<String, f64>,
    candidates: &BTreeMap<String, ConcentrationReport>,
) -> Result<RefereeMatch, AnalyticsError> {
    if paper_shares.is_empty() {
        return Err(AnalyticsError::InvalidParameter("paper has no knowledge-point shares".into()));
    }
    let paper: BTreeMap<&str, f64> = paper_shares.iter().map(|(k, v)| (k.as_str(), *v)).collect();
    let mut ranked: Vec<(String, f64)> = candidates
        .iter()
        .map(|(id, report)| (id.clone(), cosine_similarity(&paper, &report.as_vector())))
        .collect();
    rank_desc(&mut ranked);
    Ok(RefereeMatch {
        paper_shares: paper_shares.clone(),
        ranked_referees: ranked,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Expertise {
    pub branch: String,
    pub points: usize,
    pub mastered: usize,
    pub average: f64,
}

/// Number of points in the branch with F > `min_f`, and mean F over all of
/// the branch's points (unscored points count as 0).
pub fn discipline_expertise(
    scores: &Scores,
    tree: &KnowledgeTree,
    branch: &str,
    min_f: f64,
) -> Result<Expertise, AnalyticsError> {
    let points = tree.subtree_points(branch)?;
    let values: Vec<f64> = points.iter().map(|p| scores.get(p).copied().unwrap_or(0.0)).collect();
    let mastered = values.iter().filter(|f| **f > min_f).count();
    let average = values.iter().sum::<f64>() / values.len() as f64;
    Ok(Expertise {
        branch: tree.get(branch).map(|n| n.name.clone()).unwrap_or_default(),
        points: points.len(),
        mastered,
        average,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scores(pairs: &[(&str, f64)]) -> Scores {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    fn corpus(docs: &[&[&str]]) -> Vec<TokenizedContent> {
        docs.iter().map(|d| TokenizedContent::from_tokens(d.iter().copied())).collect()
    }

    fn set(items: &[&str]) -> BTreeSet<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn tf_threshold_is_strict() {
        let c = corpus(&[&["a", "a", "a"], &["a", "a", "b", "b", "b"]]);
        assert_eq!(pool_tf(&c, 3).unwrap().members, set(&["a"]));
        assert!(pool_tf(&[], 3).unwrap().members.is_empty());
        assert!(pool_tf(&c, 0).is_err());
    }

    #[test]
    fn idf_values() {
        let mut docs: Vec<&[&str]> = vec![&["common"]; 9];
        docs.push(&["common", "rare"]);
        let c = corpus(&docs);
        assert_eq!(idf(&c, "common"), Some(0.0));
        assert!((idf(&c, "rare").unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(pool_idf(&c, 0.0).unwrap().members, set(&["common"]));
        assert_eq!(pool_idf(&c, 1.0).unwrap().members, set(&["common", "rare"]));
        assert!(pool_idf(&c, -0.5).unwrap().members.is_empty());
        assert!(pool_idf(&[], 1.0).is_err());
    }

    #[test]
    fn person_pool() {
        let s = scores(&[
            ("bayes-rule", 15.14),
            ("conditional-entropy", 25.75),
            ("posterior-distribution", 35.05),
            ("lagrange-multiplier", 3.97),
            ("expectation-maximization-algorithm", 122.54),
        ]);
        assert_eq!(
            pool_person(&s, 20.0).members,
            set(&["conditional-entropy", "posterior-distribution", "expectation-maximization-algorithm"])
        );
        assert_eq!(pool_person(&s, 0.0).members.len(), 5);
        assert!(pool_person(&s, 1000.0).members.is_empty());
        assert_eq!(pool_person(&s, 20.0).criteria["min_f"], "20");
    }

    #[test]
    fn group_pool() {
        let mut g = BTreeMap::new();
        g.insert("p1".to_string(), scores(&[("x", 10.0), ("y", 10.0)]));
        g.insert("p2".to_string(), scores(&[("x", 10.0)]));
        assert_eq!(pool_group(&g, 5.0, 1.0).unwrap().members, set(&["x"]));
        assert_eq!(pool_group(&g, 5.0, 0.5).unwrap().members, set(&["x", "y"]));
        assert!(matches!(pool_group(&BTreeMap::new(), 5.0, 0.5), Err(AnalyticsError::EmptyGroup)));
        assert!(pool_group(&g, 5.0, 0.0).is_err());
    }

    #[test]
    fn common_topics_examples() {
        let a = scores(&[("x", 50.0), ("y", 10.0)]);
        let b = scores(&[("x", 30.0), ("y", 40.0)]);
        assert_eq!(common_topics(&a, &b, None, 20.0).unwrap(), vec![("x".to_string(), 30.0)]);
        assert!(common_topics(&scores(&[("p", 5.0)]), &scores(&[("q", 5.0)]), None, 0.0).unwrap().is_empty());
        let self_rank = common_topics(&b, &b, None, 20.0).unwrap();
        assert_eq!(self_rank, vec![("y".to_string(), 40.0), ("x".to_string(), 30.0)]);

        let tree = KnowledgeTree::parse("r:\n  m:\n    x\n  n:\n    y\n").unwrap();
        assert_eq!(common_topics(&b, &b, Some((&tree, "n")), 0.0).unwrap(), vec![("y".to_string(), 40.0)]);
        assert!(common_topics(&b, &b, Some((&tree, "zzz")), 0.0).is_err());
    }

    #[test]
    fn lecture_examples() {
        let poster = vec!["x".to_string(), "y".to_string()];
        assert_eq!(lecture_comprehension(&scores(&[("z", 4.0)]), &poster, None).unwrap(), 0.0);
        assert_eq!(lecture_comprehension(&Scores::new(), &poster, None).unwrap(), 0.0);
        // F = {x: 30, y: 10} gives relative {1.5, 0.5}
        let s = scores(&[("x", 30.0), ("y", 10.0)]);
        assert!((lecture_comprehension(&s, &poster, None).unwrap() - 1.0).abs() < 1e-12);
        let zero = LogisticParams { alpha0: 0.0, alphas: vec![0.0, 0.0], points: vec![] };
        assert_eq!(lecture_comprehension(&s, &poster, Some(&zero)).unwrap(), 0.5);
        assert!(lecture_comprehension(&s, &[], None).is_err());
    }

    #[test]
    fn referee_examples() {
        let paper: BTreeMap<String, f64> = scores(&[("x", 1.0)]);
        let t = NaiveDateTime::default();
        let report = |pairs: &[(&str, f64)]| ConcentrationReport {
            person: String::new(),
            window: (t, t),
            evaluated_at: t,
            ranked: pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        };
        let mut c = BTreeMap::new();
        c.insert("A".to_string(), report(&[("x", 1.0), ("y", 1.0)]));
        c.insert("B".to_string(), report(&[("y", 1.0)]));
        c.insert("C".to_string(), report(&[("x", 3.0)]));
        c.insert("D".to_string(), report(&[]));
        let m = match_referees(&paper, &c).unwrap();
        let names: Vec<&str> = m.ranked_referees.iter().map(|(n, _)| n.as_str()).collect();
        assert_eq!(names, vec!["C", "A", "B", "D"]);
        assert!((m.ranked_referees[0].1 - 1.0).abs() < 1e-12);
        assert!((m.ranked_referees[1].1 - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        assert_eq!(m.ranked_referees[2].1, 0.0);
        assert!(match_referees(&BTreeMap::new(), &c).is_err());
    }

    #[test]
    fn expertise_examples() {
        let tree = KnowledgeTree::parse("r:\n  b:\n    a\n    b2\n    c\n    d\n  e\n").unwrap();
        let s = scores(&[("a", 10.0), ("b2", 0.0)]);
        let e = discipline_expertise(&s, &tree, "b", 5.0).unwrap();
        assert_eq!((e.mastered, e.average, e.points), (1, 2.5, 4));
        let e = discipline_expertise(&Scores::new(), &tree, "b", 5.0).unwrap();
        assert_eq!((e.mastered, e.average), (0, 0.0));
        let e = discipline_expertise(&s, &tree, "b", 1e300).unwrap();
        assert_eq!((e.mastered, e.average), (0, 2.5));
        assert!(discipline_expertise(&s, &tree, "nope", 1.0).is_err());
    }
}
