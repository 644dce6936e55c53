//! Reading-activity event logs and the learning sessions reconstructed from them.
//!
//! A log is a line-delimited sequence of JSON records, one event per line:
//!
//! ```text
//! {"timestamp":"2016-03-13T09:30:00","kind":"DocOpen","doc_id":"d1"}
//! {"timestamp":"2016-03-13T09:41:12","kind":"PageSwitch","doc_id":"d1","page":2}
//! {"timestamp":"2016-03-13T10:30:10","kind":"DocClose","doc_id":"d1"}
//! ```
//!
//! Blank lines and lines starting with `#` are skipped. Unknown fields and
//! unknown kinds are rejected.
//!
//! Sessions are opened by `DocOpen`, `FocusToDoc` and `InputAfterIdle` (when a
//! document is in the foreground) and closed by `DocClose`, `FocusToOtherApp`
//! and `IdleTimeout`. Page dwell accrues to the page that was active until the
//! next `PageSwitch` or the session stop.

use std::collections::HashMap;
use std::fmt;
use std::io::BufRead;

use chrono::{Duration, NaiveDateTime};
use log::warn;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::timefmt::{format_datetime, parse_datetime, seconds_between};

/// Default idle period after which an unannounced return to the keyboard
/// starts a fresh session.
pub const DEFAULT_IDLE_THRESHOLD_S: u64 = 300;
/// Default maximum gap for merging two sessions over the same document.
pub const DEFAULT_MERGE_GAP_S: u64 = 1800;
/// Pages viewed for less than this many seconds are ignored.
pub const DEFAULT_MIN_PAGE_DWELL_S: u64 = 30;
/// Sessions shorter than this many seconds are ignored.
pub const DEFAULT_MIN_SESSION_S: u64 = 150;

#[derive(Debug, Error)]
pub enum ActivityError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: timestamp {found} precedes previous event at {previous}")]
    Ordering {
        line: usize,
        previous: String,
        found: String,
    },
    #[error("i/o error reading event log: {0}")]
    Io(#[from] std::io::Error),
    #[error("idle threshold must be positive")]
    ZeroIdleThreshold,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EventKind {
    DocOpen,
    DocClose,
    FocusToDoc,
    FocusToOtherApp,
    InputAfterIdle,
    IdleTimeout,
    PageSwitch,
}

impl EventKind {
    pub const ALL: [EventKind; 7] = [
        EventKind::DocOpen,
        EventKind::DocClose,
        EventKind::FocusToDoc,
        EventKind::FocusToOtherApp,
        EventKind::InputAfterIdle,
        EventKind::IdleTimeout,
        EventKind::PageSwitch,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::DocOpen => "DocOpen",
            EventKind::DocClose => "DocClose",
            EventKind::FocusToDoc => "FocusToDoc",
            EventKind::FocusToOtherApp => "FocusToOtherApp",
            EventKind::InputAfterIdle => "InputAfterIdle",
            EventKind::IdleTimeout => "IdleTimeout",
            EventKind::PageSwitch => "PageSwitch",
        }
    }

    fn requires_doc(self) -> bool {
        matches!(
            self,
            EventKind::DocOpen | EventKind::DocClose | EventKind::FocusToDoc
        )
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for EventKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        EventKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown event kind `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActivityEvent {
    pub timestamp: NaiveDateTime,
    pub kind: EventKind,
    pub doc_id: Option<String>,
    pub page: Option<u32>,
}

impl ActivityEvent {
    pub fn new(timestamp: NaiveDateTime, kind: EventKind) -> Self {
        ActivityEvent {
            timestamp,
            kind,
            doc_id: None,
            page: None,
        }
    }

    pub fn with_doc(mut self, doc_id: impl Into<String>) -> Self {
        self.doc_id = Some(doc_id.into());
        self
    }

    pub fn with_page(mut self, page: u32) -> Self {
        self.page = Some(page);
        self
    }

    /// Renders the event as one log line (without the trailing newline).
    pub fn to_line(&self) -> String {
        let raw = RawEvent {
            timestamp: format_datetime(&self.timestamp),
            kind: self.kind.as_str().to_string(),
            doc_id: self.doc_id.clone(),
            page: self.page.map(i64::from),
        };
        serde_json::to_string(&raw).expect("event serialization is infallible")
    }

    fn validate(&self) -> Result<(), String> {
        if self.kind.requires_doc() && self.doc_id.is_none() {
            return Err(format!("{} requires a doc_id", self.kind));
        }
        if self.kind == EventKind::PageSwitch && self.page.is_none() {
            return Err("PageSwitch requires a page".to_string());
        }
        if self.kind != EventKind::PageSwitch && self.page.is_some() {
            return Err(format!("{} must not carry a page", self.kind));
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEvent {
    timestamp: String,
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    doc_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    page: Option<i64>,
}

fn parse_line(line: &str) -> Result<ActivityEvent, String> {
    let raw: RawEvent = serde_json::from_str(line).map_err(|e| e.to_string())?;
    let timestamp = parse_datetime(&raw.timestamp)
        .ok_or_else(|| format!("invalid timestamp `{}`", raw.timestamp))?;
    let kind: EventKind = raw.kind.parse()?;
    let page = match raw.page {
        None => None,
        Some(p) if p >= 1 && p <= i64::from(u32::MAX) => Some(p as u32),
        Some(p) => return Err(format!("page must be >= 1, got {p}")),
    };
    let doc_id = match raw.doc_id {
        Some(d) if d.trim().is_empty() => return Err("empty doc_id".to_string()),
        other => other,
    };
    let event = ActivityEvent {
        timestamp,
        kind,
        doc_id,
        page,
    };
    event.validate()?;
    Ok(event)
}

/// Reads a whole event log, validating each record and the timestamp order.
pub fn parse_event_log<R: BufRead>(reader: R) -> Result<Vec<ActivityEvent>, ActivityError> {
    let mut events: Vec<ActivityEvent> = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let event = parse_line(trimmed).map_err(|message| ActivityError::Parse {
            line: lineno,
            message,
        })?;
        if let Some(prev) = events.last() {
            if event.timestamp < prev.timestamp {
                return Err(ActivityError::Ordering {
                    line: lineno,
                    previous: format_datetime(&prev.timestamp),
                    found: format_datetime(&event.timestamp),
                });
            }
        }
        events.push(event);
    }
    Ok(events)
}

pub fn parse_event_str(s: &str) -> Result<Vec<ActivityEvent>, ActivityError> {
    parse_event_log(s.as_bytes())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PageView {
    pub page: u32,
    pub dwell_seconds: u64,
    /// Extracted page text, attached after discrimination.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
}

/// Identity used to recognise a session across repeated ingests.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SessionKey {
    pub doc_id: String,
    pub start_time: NaiveDateTime,
    pub stop_time: NaiveDateTime,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LearningSession {
    pub session_id: usize,
    pub doc_id: String,
    pub start_time: NaiveDateTime,
    pub stop_time: NaiveDateTime,
    pub page_views: Vec<PageView>,
    /// Set when the log ended while this session was still open.
    pub truncated: bool,
}

impl LearningSession {
    pub fn duration_seconds(&self) -> u64 {
        seconds_between(&self.start_time, &self.stop_time).max(0) as u64
    }

    pub fn total_dwell_seconds(&self) -> u64 {
        self.page_views.iter().map(|p| p.dwell_seconds).sum()
    }

    /// Concatenated text of the viewed pages, in viewing order.
    pub fn text(&self) -> String {
        self.page_views
            .iter()
            .filter_map(|p| p.text.as_deref())
            .collect::<Vec<_>>()
            .join("\n")
    }

    pub fn key(&self) -> SessionKey {
        SessionKey {
            doc_id: self.doc_id.clone(),
            start_time: self.start_time,
            stop_time: self.stop_time,
        }
    }
}

struct OpenSession {
    doc_id: String,
    start: NaiveDateTime,
    page: u32,
    page_since: NaiveDateTime,
    last_activity: NaiveDateTime,
    views: Vec<PageView>,
}

impl OpenSession {
    fn new(doc_id: String, at: NaiveDateTime, page: u32) -> Self {
        OpenSession {
            doc_id,
            start: at,
            page,
            page_since: at,
            last_activity: at,
            views: Vec::new(),
        }
    }

    fn accrue(&mut self, until: NaiveDateTime) {
        let dwell = seconds_between(&self.page_since, &until).max(0) as u64;
        match self.views.iter_mut().find(|v| v.page == self.page) {
            Some(v) => v.dwell_seconds += dwell,
            None => self.views.push(PageView {
                page: self.page,
                dwell_seconds: dwell,
                text: None,
            }),
        }
        self.page_since = until;
    }

    fn close(mut self, at: NaiveDateTime, id: usize, truncated: bool) -> LearningSession {
        self.accrue(at);
        LearningSession {
            session_id: id,
            doc_id: self.doc_id,
            start_time: self.start,
            stop_time: at,
            page_views: self.views,
            truncated,
        }
    }
}

struct Discriminator {
    idle: Duration,
    open: Option<OpenSession>,
    foreground: Option<String>,
    last_page: HashMap<String, u32>,
    sessions: Vec<LearningSession>,
}

impl Discriminator {
    fn start(&mut self, doc: String, at: NaiveDateTime) {
        let page = self.last_page.get(&doc).copied().unwrap_or(1);
        self.foreground = Some(doc.clone());
        self.open = Some(OpenSession::new(doc, at, page));
    }

    fn stop(&mut self, at: NaiveDateTime, truncated: bool) -> bool {
        match self.open.take() {
            Some(open) => {
                let id = self.sessions.len() + 1;
                self.sessions.push(open.close(at, id, truncated));
                true
            }
            None => false,
        }
    }

    fn step(&mut self, ev: &ActivityEvent) {
        let at = ev.timestamp;
        match ev.kind {
            EventKind::DocOpen | EventKind::FocusToDoc => {
                let doc = ev.doc_id.clone().expect("validated");
                if self.open.as_ref().is_some_and(|o| o.doc_id == doc) {
                    if let Some(o) = self.open.as_mut() {
                        o.last_activity = at;
                    }
                    return;
                }
                self.stop(at, false);
                self.start(doc, at);
            }
            EventKind::InputAfterIdle => {
                let doc = ev.doc_id.clone().or_else(|| self.foreground.clone());
                if let Some(open) = self.open.as_mut() {
                    let silent_since = open.last_activity;
                    if at - silent_since > self.idle {
                        // No IdleTimeout was recorded for the silent period;
                        // the session ended when the idle threshold elapsed.
                        let idle_stop = silent_since + self.idle;
                        self.stop(idle_stop, false);
                        if let Some(doc) = doc {
                            self.start(doc, at);
                        }
                    } else {
                        open.last_activity = at;
                    }
                } else if let Some(doc) = doc {
                    self.start(doc, at);
                }
            }
            EventKind::DocClose => {
                let doc = ev.doc_id.as_deref().expect("validated");
                let closes_open = self.open.as_ref().is_some_and(|o| o.doc_id == doc);
                if closes_open {
                    self.stop(at, false);
                } else if self.open.is_none() {
                    warn!(
                        "DocClose for `{doc}` at {} with no open session; ignored",
                        format_datetime(&at)
                    );
                }
                if self.foreground.as_deref() == Some(doc) {
                    self.foreground = None;
                }
                self.last_page.remove(doc);
            }
            EventKind::FocusToOtherApp => {
                if !self.stop(at, false) {
                    warn!(
                        "FocusToOtherApp at {} with no open session; ignored",
                        format_datetime(&at)
                    );
                }
                self.foreground = None;
            }
            EventKind::IdleTimeout => {
                if !self.stop(at, false) {
                    warn!(
                        "IdleTimeout at {} with no open session; ignored",
                        format_datetime(&at)
                    );
                }
            }
            EventKind::PageSwitch => {
                let page = ev.page.expect("validated");
                let target = ev
                    .doc_id
                    .clone()
                    .or_else(|| self.open.as_ref().map(|o| o.doc_id.clone()))
                    .or_else(|| self.foreground.clone());
                let Some(doc) = target else {
                    warn!("PageSwitch at {} with no document; ignored", format_datetime(&at));
                    return;
                };
                if let Some(open) = self.open.as_mut().filter(|o| o.doc_id == doc) {
                    open.accrue(at);
                    open.page = page;
                    open.last_activity = at;
                }
                self.last_page.insert(doc, page);
            }
        }
    }
}

/// Reconstructs learning sessions from a validated event sequence.
///
/// A session still open when the log ends is closed at the last event's
/// timestamp and flagged as `truncated`.
pub fn discriminate_sessions(
    events: &[ActivityEvent],
    idle_threshold_s: u64,
) -> Result<Vec<LearningSession>, ActivityError> {
    if idle_threshold_s == 0 {
        return Err(ActivityError::ZeroIdleThreshold);
    }
    let mut d = Discriminator {
        idle: Duration::seconds(idle_threshold_s as i64),
        open: None,
        foreground: None,
        last_page: HashMap::new(),
        sessions: Vec::new(),
    };
    for ev in events {
        d.step(ev);
    }
    if let Some(last) = events.last() {
        if d.stop(last.timestamp, true) {
            warn!(
                "event log ended with an open session; closed at {}",
                format_datetime(&last.timestamp)
            );
        }
    }
    Ok(d.sessions)
}

/// Merges consecutive sessions over the same document whose gap is strictly
/// below `merge_gap_s`. Applied left to right, so chains merge transitively.
pub fn merge_sessions(sessions: &[LearningSession], merge_gap_s: u64) -> Vec<LearningSession> {
    let mut out: Vec<LearningSession> = Vec::with_capacity(sessions.len());
    for s in sessions {
        if let Some(prev) = out.last_mut() {
            let gap = seconds_between(&prev.stop_time, &s.start_time);
            if prev.doc_id == s.doc_id && gap >= 0 && (gap as u64) < merge_gap_s {
                prev.stop_time = prev.stop_time.max(s.stop_time);
                prev.page_views.extend(s.page_views.iter().cloned());
                prev.truncated |= s.truncated;
                continue;
            }
        }
        out.push(s.clone());
    }
    out
}

/// Drops sessions shorter than `min_session_s`, then drops page views with
/// dwell below `min_page_dwell_s` from the survivors.
pub fn filter_sessions(
    sessions: &[LearningSession],
    min_page_dwell_s: u64,
    min_session_s: u64,
) -> Vec<LearningSession> {
    sessions
        .iter()
        .filter(|s| s.duration_seconds() >= min_session_s)
        .map(|s| {
            let mut s = s.clone();
            s.page_views.retain(|p| p.dwell_seconds >= min_page_dwell_s);
            s
        })
        .collect()
}
