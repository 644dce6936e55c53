mod common;

use std::collections::BTreeMap;

use common::*;
use kmodel_core::analytics::{cosine_similarity, idf};
use kmodel_core::familiarity::{
    elapsed_minutes, familiarity, relative_familiarity, retention, standardize, topic_familiarity,
    understanding_probability, Ebbinghaus, TopicSession,
};
use kmodel_core::history::{HistoryStore, LearningHistory, LearningRecord};
use kmodel_core::timefmt::parse_datetime;
use kmodel_core::topic::allocate_shares;
use kmodel_core::TokenizedContent;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn t(s: &str) -> chrono::NaiveDateTime {
    parse_datetime(s).unwrap()
}

fn bayes_rule_history() -> LearningHistory {
    let mut h = LearningHistory::new("bayes-rule");
    for (i, (stop, d, xi)) in BAYES_RULE_RECORDS.iter().enumerate() {
        h.append(LearningRecord::new(i as u64 + 1, t(stop), *d as u64, *xi)).unwrap();
    }
    h
}

#[test]
fn bayes_rule_oracle_lands_within_one_percent() {
    let f = familiarity_direct(&BAYES_RULE_RECORDS, EVAL_AT);
    assert!((f - 15.14).abs() / 15.14 < 0.01, "oracle gives {f}");
}

#[test]
fn bayes_rule_library_matches_oracle() {
    let f = familiarity(&bayes_rule_history(), t(EVAL_AT), &Ebbinghaus::default()).unwrap();
    assert!((f.value - familiarity_direct(&BAYES_RULE_RECORDS, EVAL_AT)).abs() < 1e-9);
}

#[test]
fn bayes_rule_fixture_file_matches_oracle() {
    let store = HistoryStore::open(data_dir().join("bayes_rule_history.jsonl")).unwrap();
    let h = store.history("subject", "bayes-rule").unwrap();
    assert_eq!(h.cumulative_seconds(), 5954);
    let f = familiarity(h, t(EVAL_AT), &Ebbinghaus::default()).unwrap();
    assert!((f.value - familiarity_direct(&BAYES_RULE_RECORDS, EVAL_AT)).abs() < 1e-9);
}

#[test]
fn elapsed_minutes_match_calendar_arithmetic() {
    let now = calendar_minutes(EVAL_AT);
    for (stop, _, _) in BAYES_RULE_RECORDS {
        let lib = elapsed_minutes(&t(stop), &t(EVAL_AT)).unwrap();
        assert_eq!(lib, now - calendar_minutes(stop));
    }
    assert_eq!(elapsed_minutes(&t(BAYES_RULE_RECORDS[0].0), &t(EVAL_AT)).unwrap(), 44_683.0);
}

#[test]
fn retention_matches_direct_formula() {
    let curve = Ebbinghaus::default();
    for t in [1.0, 2.0, 5.0, 20.0, 60.0, 1440.0, 44_684.0, 1e7] {
        let lib = retention(t - 1.0, &curve).unwrap();
        assert!((lib - retention_direct(t, 1.84, 1.25)).abs() < 1e-15, "t = {t}");
    }
    assert!((retention_direct(20.0, 1.84, 1.25) - 0.5697).abs() < 5e-4);
    assert!((retention_direct(44_684.0, 1.84, 1.25) - 0.2123).abs() < 5e-4);
}

#[test]
fn two_session_topic_familiarity() {
    let at = t("2016-03-01 10:19:00");
    let sessions = [
        TopicSession {
            duration_seconds: 600,
            share: 0.5,
            stop_time: t("2016-03-01 10:00:00"),
        },
        TopicSession {
            duration_seconds: 1200,
            share: 0.25,
            stop_time: at,
        },
    ];
    let f = topic_familiarity("topic-0", &sessions, at, &Ebbinghaus::default()).unwrap();
    let expected = 600.0 * 0.5 * retention_direct(20.0, 1.84, 1.25) + 1200.0 * 0.25;
    assert!((f.value - expected).abs() < 1e-9);
    assert!((f.value - 470.9).abs() < 0.05);
}

#[test]
fn hand_evaluated_shares() {
    let vocab: Vec<String> = ["a", "b", "c", "d", "e", "f", "g"].iter().map(|s| s.to_string()).collect();
    let topics = vec![
        vec![0.5, 0.3, 0.0, 0.0, 0.1, 0.1, 0.0],
        vec![0.0, 0.0, 0.4, 0.2, 0.15, 0.15, 0.1],
    ];
    let coverage = [0.6, 0.4];
    let all = allocate_shares(&coverage, &topics, &vocab, 2, |_| true).unwrap();
    let oracle = shares_double_loop(&coverage, &topics, &vocab, 2);
    assert_eq!(all.shares.keys().collect::<Vec<_>>(), oracle.keys().collect::<Vec<_>>());
    for (k, v) in &oracle {
        assert!((all.shares[k] - v).abs() < 1e-12);
    }
    assert!((all.shares["a"] - 0.30 / 0.72).abs() < 1e-12);
    assert!((all.shares["d"] - 0.08 / 0.72).abs() < 1e-12);

    let only_a = allocate_shares(&coverage, &topics, &vocab, 2, |w| w == "a").unwrap();
    assert_eq!(only_a.shares.len(), 1);
    assert!((only_a.non_knowledge_mass() - (1.0 - 0.30 / 0.72)).abs() < 1e-12);
}

#[test]
fn random_share_instances_match_double_loop() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..200 {
        let k = rng.gen_range(1..=3);
        let v = rng.gen_range(1..=8);
        let m = rng.gen_range(1..=4);
        let vocab: Vec<String> = (0..v).map(|i| format!("w{i}")).collect();
        let topics: Vec<Vec<f64>> = (0..k)
            .map(|_| {
                let raw: Vec<f64> = (0..v).map(|_| rng.gen::<f64>()).collect();
                let s: f64 = raw.iter().sum();
                raw.into_iter().map(|x| x / s).collect()
            })
            .collect();
        let raw: Vec<f64> = (0..k).map(|_| rng.gen::<f64>() + 1e-3).collect();
        let s: f64 = raw.iter().sum();
        let coverage: Vec<f64> = raw.into_iter().map(|x| x / s).collect();
        let lib = allocate_shares(&coverage, &topics, &vocab, m, |_| true).unwrap();
        let oracle = shares_double_loop(&coverage, &topics, &vocab, m);
        assert_eq!(lib.shares.len(), oracle.len());
        for (term, share) in &oracle {
            assert!((lib.shares[term] - share).abs() < 1e-12);
        }
    }
}

#[test]
fn normalization_examples() {
    let scores: BTreeMap<String, f64> = [("a".to_string(), 10.0), ("b".to_string(), 30.0)].into();
    let rel = relative_familiarity(&scores).unwrap();
    assert!((rel["a"] - 10.0 / 20.0).abs() < 1e-12);
    assert!((rel["b"] - 30.0 / 20.0).abs() < 1e-12);
    let z = standardize(&scores).unwrap();
    assert!((z["a"] + 1.0).abs() < 1e-12 && (z["b"] - 1.0).abs() < 1e-12);

    let triple: BTreeMap<String, f64> = [("x", 0.0), ("y", 10.0), ("z", 20.0)]
        .iter()
        .map(|(k, v)| (k.to_string(), *v))
        .collect();
    let z = standardize(&triple).unwrap();
    let sd = (200.0f64 / 3.0).sqrt();
    assert!((z["x"] + 10.0 / sd).abs() < 1e-12);
    assert!(z["y"].abs() < 1e-12);
    assert!((z["x"] + 1.2247).abs() < 1e-4);
}

#[test]
fn logistic_example() {
    let direct = 1.0 / (1.0 + (-2.0f64).exp());
    assert!((understanding_probability(2.0) - direct).abs() < 1e-15);
    assert!((direct - 0.8808).abs() < 1e-4);
}

#[test]
fn idf_and_cosine_examples() {
    let mut corpus = vec![TokenizedContent::from_tokens(["rare", "x"])];
    corpus.extend((0..9).map(|_| TokenizedContent::from_tokens(["x"])));
    assert!((idf(&corpus, "rare").unwrap() - (10.0f64 / 1.0).log10()).abs() < 1e-15);

    let paper: BTreeMap<&str, f64> = [("x", 1.0)].into();
    let a: BTreeMap<&str, f64> = [("x", 1.0), ("y", 1.0)].into();
    let b: BTreeMap<&str, f64> = [("y", 1.0)].into();
    assert!((cosine_similarity(&paper, &a) - 1.0 / 2f64.sqrt()).abs() < 1e-12);
    assert_eq!(cosine_similarity(&paper, &b), 0.0);
}
