//! Independent reference implementations used by the integration tests.
//! Nothing here calls into the library's arithmetic.

#![allow(dead_code, clippy::needless_range_loop)]

use std::collections::BTreeMap;
use std::path::PathBuf;

pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

/// Days since 1970-01-01 for a proleptic Gregorian date.
fn days_from_civil(y: i64, m: i64, d: i64) -> i64 {
    let y = if m <= 2 { y - 1 } else { y };
    let era = y.div_euclid(400);
    let yoe = y - era * 400;
    let mp = (m + 9) % 12;
    let doy = (153 * mp + 2) / 5 + d - 1;
    let doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    era * 146_097 + doe - 719_468
}

/// Calendar minutes since the epoch for "YYYY-MM-DD HH:MM[:SS]".
pub fn calendar_minutes(s: &str) -> f64 {
    let s = s.replace('T', " ");
    let (date, time) = s.split_once(' ').expect("date and time");
    let d: Vec<i64> = date.split('-').map(|x| x.parse().unwrap()).collect();
    let t: Vec<f64> = time.split(':').map(|x| x.parse().unwrap()).collect();
    let secs = t.get(2).copied().unwrap_or(0.0);
    days_from_civil(d[0], d[1], d[2]) as f64 * 1440.0 + t[0] * 60.0 + t[1] + secs / 60.0
}

/// Forgetting curve evaluated directly: k / ((log10 t)^c + k).
pub fn retention_direct(t: f64, k: f64, c: f64) -> f64 {
    k / (t.log10().powf(c) + k)
}

/// Sum of duration x proportion x retention with t = elapsed minutes + 1.
pub fn familiarity_direct(records: &[(&str, f64, f64)], at: &str) -> f64 {
    let now = calendar_minutes(at);
    records
        .iter()
        .map(|(stop, d, xi)| d * xi * retention_direct(now - calendar_minutes(stop) + 1.0, 1.84, 1.25))
        .sum()
}

/// The subject's bayes-rule records: (stop time, duration s, proportion).
pub const BAYES_RULE_RECORDS: [(&str, f64, f64); 5] = [
    ("2016-02-27 18:41", 1171.0, 0.0122),
    ("2016-02-27 18:47", 220.0, 0.0212),
    ("2016-02-29 16:08", 2523.0, 0.0117),
    ("2016-02-29 16:55", 330.0, 0.0066),
    ("2016-03-03 16:21", 1710.0, 0.0117),
];

pub const EVAL_AT: &str = "2016-03-29 19:24:00";

/// Share allocation evaluated with explicit loops: for each topic, pick the
/// `m` most probable positive terms by repeated maximum search (ties to the
/// lexicographically smaller term), then for each term sum the weights of
/// every slot it occupies and divide by the total over all slots.
pub fn shares_double_loop(
    coverage: &[f64],
    topics: &[Vec<f64>],
    vocab: &[String],
    m: usize,
) -> BTreeMap<String, f64> {
    let mut slots: Vec<(usize, f64)> = Vec::new();
    for (j, row) in topics.iter().enumerate() {
        let mut taken = vec![false; vocab.len()];
        for _ in 0..m {
            let mut best: Option<usize> = None;
            for v in 0..vocab.len() {
                if taken[v] || row[v] <= 0.0 {
                    continue;
                }
                best = match best {
                    None => Some(v),
                    Some(b) if row[v] > row[b] || (row[v] == row[b] && vocab[v] < vocab[b]) => Some(v),
                    keep => keep,
                };
            }
            let Some(b) = best else { break };
            taken[b] = true;
            slots.push((b, coverage[j] * row[b]));
        }
    }
    let mut total = 0.0;
    for (_, w) in &slots {
        total += w;
    }
    let mut out = BTreeMap::new();
    for v in 0..vocab.len() {
        let mut s = 0.0;
        let mut hit = false;
        for (slot, w) in &slots {
            if *slot == v {
                s += w;
                hit = true;
            }
        }
        if hit {
            out.insert(vocab[v].clone(), s / total);
        }
    }
    out
}
