//! Synthetic workloads for the criterion benchmarks.

use chrono::{Duration, NaiveDate, NaiveDateTime};
use kmodel_core::activity::{ActivityEvent, EventKind};
use kmodel_core::history::{LearningHistory, LearningRecord};
use kmodel_core::topic::TokenizedContent;

pub fn base_time() -> NaiveDateTime {
    NaiveDate::from_ymd_opt(2016, 2, 23)
        .unwrap()
        .and_hms_opt(9, 0, 0)
        .unwrap()
}

/// `sessions` open/page/close cycles over a handful of documents.
pub fn event_log(sessions: usize) -> Vec<ActivityEvent> {
    let mut t = base_time();
    let mut out = Vec::with_capacity(sessions * 6);
    for s in 0..sessions {
        let doc = format!("d{}", s % 7);
        out.push(ActivityEvent::new(t, EventKind::DocOpen).with_doc(&doc));
        for p in 2..=5 {
            t += Duration::seconds(45 + (s as i64 * 13 + p) % 90);
            out.push(ActivityEvent::new(t, EventKind::PageSwitch).with_doc(&doc).with_page(p as u32));
        }
        t += Duration::seconds(120);
        out.push(ActivityEvent::new(t, EventKind::DocClose).with_doc(&doc));
        t += Duration::seconds(600 + (s as i64 % 5) * 400);
    }
    out
}

/// `docs` documents of `len` tokens drawn from a small vocabulary.
pub fn corpus(docs: usize, len: usize) -> Vec<TokenizedContent> {
    (0..docs)
        .map(|d| TokenizedContent::from_tokens((0..len).map(|i| format!("w{}", (i * 7 + d * 3) % 40))))
        .collect()
}

pub fn history(records: usize) -> LearningHistory {
    LearningHistory::from_records(
        "p",
        (0..records).map(|i| {
            LearningRecord::new(i as u64 + 1, base_time() + Duration::minutes(37 * i as i64), 600, 0.01)
        }),
    )
    .unwrap()
}
