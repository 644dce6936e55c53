use std::collections::BTreeMap;

use chrono::NaiveDateTime;
use serde::Serialize;

use super::retention::{elapsed_minutes, RetentionCurve};
use super::FamiliarityError;
use crate::history::LearningHistory;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FamiliarityScore {
    /// Knowledge point name or topic identifier.
    pub subject: String,
    pub value: f64,
    pub evaluated_at: NaiveDateTime,
}

fn decayed_sum<C: RetentionCurve + ?Sized>(
    items: impl Iterator<Item = (u64, f64, NaiveDateTime)>,
    at: &NaiveDateTime,
    curve: &C,
) -> Result<f64, FamiliarityError> {
    let mut total = 0.0;
    for (duration, share, stop) in items {
        let b = curve.retention(elapsed_minutes(&stop, at)?)?;
        total += duration as f64 * share * b;
    }
    Ok(total)
}

/// Familiarity with a knowledge point at `at`: the sum over its history of
/// duration x proportion x retention.
pub fn familiarity<C: RetentionCurve + ?Sized>(
    history: &LearningHistory,
    at: NaiveDateTime,
    curve: &C,
) -> Result<FamiliarityScore, FamiliarityError> {
    let value = decayed_sum(
        history
            .records()
            .iter()
            .map(|r| (r.duration_seconds, r.proportion, r.stop_time)),
        &at,
        curve,
    )?;
    Ok(FamiliarityScore {
        subject: history.knowledge_point.clone(),
        value,
        evaluated_at: at,
    })
}

/// A learning session as seen by one topic: its duration, the topic's share
/// of its content and when it stopped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TopicSession {
    pub duration_seconds: u64,
    pub share: f64,
    pub stop_time: NaiveDateTime,
}

/// Familiarity with a topic of a stored topic model.
pub fn topic_familiarity<C: RetentionCurve + ?Sized>(
    topic: &str,
    sessions: &[TopicSession],
    at: NaiveDateTime,
    curve: &C,
) -> Result<FamiliarityScore, FamiliarityError> {
    if let Some(s) = sessions.iter().find(|s| !(0.0..=1.0).contains(&s.share)) {
        return Err(FamiliarityError::InvalidParameter(format!("topic share {} outside [0, 1]", s.share)));
    }
    let value = decayed_sum(
        sessions.iter().map(|s| (s.duration_seconds, s.share, s.stop_time)),
        &at,
        curve,
    )?;
    Ok(FamiliarityScore {
        subject: topic.to_string(),
        value,
        evaluated_at: at,
    })
}

/// Each score divided by the mean of all scores.
pub fn relative_familiarity(scores: &BTreeMap<String, f64>) -> Result<BTreeMap<String, f64>, FamiliarityError> {
    if scores.is_empty() {
        return Err(FamiliarityError::Undefined("relative familiarity of no scores".into()));
    }
    let mean = scores.values().sum::<f64>() / scores.len() as f64;
    if !(mean > 0.0) {
        return Err(FamiliarityError::Undefined("mean familiarity is zero".into()));
    }
    Ok(scores.iter().map(|(k, v)| (k.clone(), v / mean)).collect())
}

/// Per-point complexity factors and a per-person worker factor; points
/// without an explicit factor use 1.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizationConfig {
    pub complexity_factors: BTreeMap<String, f64>,
    pub worker_factor: f64,
}

impl Default for NormalizationConfig {
    fn default() -> Self {
        NormalizationConfig {
            complexity_factors: BTreeMap::new(),
            worker_factor: 1.0,
        }
    }
}

impl NormalizationConfig {
    pub fn validate(&self) -> Result<(), FamiliarityError> {
        let bad = |v: f64| !(v > 0.0 && v.is_finite());
        if bad(self.worker_factor) {
            return Err(FamiliarityError::InvalidParameter(format!(
                "worker factor must be positive, got {}",
                self.worker_factor
            )));
        }
        if let Some((p, v)) = self.complexity_factors.iter().find(|(_, v)| bad(**v)) {
            return Err(FamiliarityError::InvalidParameter(format!(
                "complexity factor for `{p}` must be positive, got {v}"
            )));
        }
        Ok(())
    }
}

pub fn normalize(
    scores: &BTreeMap<String, f64>,
    config: &NormalizationConfig,
) -> Result<BTreeMap<String, f64>, FamiliarityError> {
    config.validate()?;
    Ok(scores
        .iter()
        .map(|(k, v)| {
            let c = config.complexity_factors.get(k).copied().unwrap_or(1.0);
            (k.clone(), v * c * config.worker_factor)
        })
        .collect())
}

/// z-scores against the population mean and standard deviation.
pub fn standardize(scores: &BTreeMap<String, f64>) -> Result<BTreeMap<String, f64>, FamiliarityError> {
    if scores.len() < 2 {
        return Err(FamiliarityError::Undefined("standardizing needs at least two scores".into()));
    }
    let n = scores.len() as f64;
    let mean = scores.values().sum::<f64>() / n;
    let var = scores.values().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let sd = var.sqrt();
    if !(sd > 0.0) {
        return Err(FamiliarityError::Undefined("standard deviation is zero".into()));
    }
    Ok(scores.iter().map(|(k, v)| (k.clone(), (v - mean) / sd)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::familiarity::Ebbinghaus;
    use crate::history::LearningRecord;
    use crate::timefmt::parse_datetime;

    fn t(s: &str) -> NaiveDateTime {
        parse_datetime(s).unwrap()
    }

    fn map(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn empty_history_is_zero() {
        let h = LearningHistory::new("p");
        let f = familiarity(&h, t("2016-03-29 19:24"), &Ebbinghaus::default()).unwrap();
        assert_eq!(f.value, 0.0);
    }

    #[test]
    fn at_stop_time_no_decay() {
        let stop = t("2016-03-01 10:00");
        let h = LearningHistory::from_records("p", [LearningRecord::new(1, stop, 1000, 0.1)]).unwrap();
        let f = familiarity(&h, stop, &Ebbinghaus::default()).unwrap();
        assert!((f.value - 100.0).abs() < 1e-12);
    }

    #[test]
    fn before_stop_is_error() {
        let h = LearningHistory::from_records("p", [LearningRecord::new(1, t("2016-03-01 10:00"), 10, 0.1)]).unwrap();
        assert!(matches!(
            familiarity(&h, t("2016-03-01 09:59"), &Ebbinghaus::default()),
            Err(FamiliarityError::EvaluatedBeforeStop { .. })
        ));
    }

    #[test]
    fn topic_examples() {
        let curve = Ebbinghaus::default();
        let at = t("2016-03-01 10:19");
        assert_eq!(topic_familiarity("t", &[], at, &curve).unwrap().value, 0.0);
        let one = TopicSession { duration_seconds: 600, share: 0.5, stop_time: at };
        assert!((topic_familiarity("t", &[one], at, &curve).unwrap().value - 300.0).abs() < 1e-12);
        let two = [
            TopicSession { duration_seconds: 600, share: 0.5, stop_time: t("2016-03-01 10:00") },
            TopicSession { duration_seconds: 1200, share: 0.25, stop_time: at },
        ];
        let v = topic_familiarity("t", &two, at, &curve).unwrap().value;
        assert!((v - 470.9).abs() < 0.05, "{v}");
    }

    #[test]
    fn relative_examples() {
        assert_eq!(relative_familiarity(&map(&[("a", 10.0), ("b", 30.0)])).unwrap(), map(&[("a", 0.5), ("b", 1.5)]));
        assert_eq!(relative_familiarity(&map(&[("a", 7.0)])).unwrap(), map(&[("a", 1.0)]));
        assert_eq!(relative_familiarity(&map(&[("a", 3.0), ("b", 3.0)])).unwrap(), map(&[("a", 1.0), ("b", 1.0)]));
        assert!(relative_familiarity(&map(&[("a", 0.0), ("b", 0.0)])).is_err());
        assert!(relative_familiarity(&BTreeMap::new()).is_err());
    }

    #[test]
    fn normalize_examples() {
        let id = NormalizationConfig::default();
        assert_eq!(normalize(&map(&[("a", 10.0)]), &id).unwrap(), map(&[("a", 10.0)]));
        let worker = NormalizationConfig { worker_factor: 1.25, ..Default::default() };
        assert_eq!(normalize(&map(&[("a", 80.0)]), &worker).unwrap(), map(&[("a", 100.0)]));
        let both = NormalizationConfig { complexity_factors: map(&[("a", 2.0)]), worker_factor: 1.25 };
        assert_eq!(normalize(&map(&[("a", 10.0)]), &both).unwrap(), map(&[("a", 25.0)]));
        let bad = NormalizationConfig { complexity_factors: map(&[("a", 0.0)]), worker_factor: 1.0 };
        assert!(normalize(&map(&[("a", 10.0)]), &bad).is_err());
    }

    #[test]
    fn standardize_examples() {
        assert_eq!(standardize(&map(&[("a", 10.0), ("b", 30.0)])).unwrap(), map(&[("a", -1.0), ("b", 1.0)]));
        let z = standardize(&map(&[("a", 0.0), ("b", 10.0), ("c", 20.0)])).unwrap();
        assert!((z["a"] + 1.2247).abs() < 1e-4);
        assert_eq!(z["b"], 0.0);
        assert!((z["c"] - 1.2247).abs() < 1e-4);
        assert!(standardize(&map(&[("a", 1.0), ("b", 1.0)])).is_err());
        assert!(standardize(&map(&[("a", 1.0)])).is_err());
    }
}
