//! Per-person learning histories and their on-disk store.
//!
//! The store is a line-delimited JSON file, one learning record per line:
//!
//! ```text
//! {"person":"alice","knowledge_point":"bayes-rule","sequence_id":1,"stop_time":"2016-02-27T18:41:00","duration_s":1171,"proportion":0.0122}
//! ```
//!
//! Records written by ingestion additionally carry `doc_id` and
//! `session_start`, which identify the source session for deduplication.
//!
//! Commits rewrite the file through a temporary sibling and an atomic rename,
//! so readers always see either the old or the new complete file. A trailing
//! line without a newline is a torn write and is ignored on load.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, File, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::activity::SessionKey;
use crate::timefmt::{format_datetime, serde_naive};
use crate::tree::{normalize_name, KnowledgeTree};

#[derive(Debug, Error)]
pub enum HistoryError {
    #[error("unknown knowledge point `{0}`")]
    UnknownPoint(String),
    #[error("`{point}`: sequence id {found} does not follow {last}")]
    Sequence { point: String, last: u64, found: u64 },
    #[error("`{point}`: stop time {found} precedes {last}")]
    StopTime {
        point: String,
        last: String,
        found: String,
    },
    #[error("`{point}`: proportion {value} outside [0, 1]")]
    Proportion { point: String, value: f64 },
    #[error("`{point}`: sequence id must be >= 1")]
    ZeroSequence { point: String },
    #[error("window start is after window end")]
    InvertedWindow,
    #[error("store line {line}: {message}")]
    Corrupt { line: usize, message: String },
    #[error("store is locked by another writer ({0})")]
    Locked(PathBuf),
    #[error("store i/o: {0}")]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearningRecord {
    pub sequence_id: u64,
    #[serde(with = "serde_naive")]
    pub stop_time: NaiveDateTime,
    pub duration_seconds: u64,
    pub proportion: f64,
}

impl LearningRecord {
    pub fn new(sequence_id: u64, stop_time: NaiveDateTime, duration_seconds: u64, proportion: f64) -> Self {
        LearningRecord {
            sequence_id,
            stop_time,
            duration_seconds,
            proportion,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearningHistory {
    pub knowledge_point: String,
    records: Vec<LearningRecord>,
}

impl LearningHistory {
    pub fn new(knowledge_point: impl Into<String>) -> Self {
        LearningHistory {
            knowledge_point: knowledge_point.into(),
            records: Vec::new(),
        }
    }

    /// Builds a history, validating every record as if appended in order.
    pub fn from_records(
        knowledge_point: impl Into<String>,
        records: impl IntoIterator<Item = LearningRecord>,
    ) -> Result<Self, HistoryError> {
        let mut h = Self::new(knowledge_point);
        for r in records {
            h.append(r)?;
        }
        Ok(h)
    }

    pub fn records(&self) -> &[LearningRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn next_sequence_id(&self) -> u64 {
        self.records.last().map_or(1, |r| r.sequence_id + 1)
    }

    pub fn cumulative_seconds(&self) -> u64 {
        self.records.iter().map(|r| r.duration_seconds).sum()
    }

    pub fn latest_stop(&self) -> Option<NaiveDateTime> {
        self.records.last().map(|r| r.stop_time)
    }

    pub fn check(&self, record: &LearningRecord) -> Result<(), HistoryError> {
        let point = || self.knowledge_point.clone();
        if record.sequence_id == 0 {
            return Err(HistoryError::ZeroSequence { point: point() });
        }
        if !(0.0..=1.0).contains(&record.proportion) {
            return Err(HistoryError::Proportion {
                point: point(),
                value: record.proportion,
            });
        }
        if let Some(last) = self.records.last() {
            if record.sequence_id <= last.sequence_id {
                return Err(HistoryError::Sequence {
                    point: point(),
                    last: last.sequence_id,
                    found: record.sequence_id,
                });
            }
            if record.stop_time < last.stop_time {
                return Err(HistoryError::StopTime {
                    point: point(),
                    last: format_datetime(&last.stop_time),
                    found: format_datetime(&record.stop_time),
                });
            }
        }
        Ok(())
    }

    pub fn append(&mut self, record: LearningRecord) -> Result<&Self, HistoryError> {
        self.check(&record)?;
        self.records.push(record);
        Ok(self)
    }

    /// Records whose stop time lies in `[t0, t1]`, order preserved.
    pub fn window(&self, t0: NaiveDateTime, t1: NaiveDateTime) -> Result<LearningHistory, HistoryError> {
        if t0 > t1 {
            return Err(HistoryError::InvertedWindow);
        }
        Ok(LearningHistory {
            knowledge_point: self.knowledge_point.clone(),
            records: self
                .records
                .iter()
                .filter(|r| r.stop_time >= t0 && r.stop_time <= t1)
                .cloned()
                .collect(),
        })
    }
}

/// Free-function form of [`LearningHistory::window`].
pub fn history_window(
    history: &LearningHistory,
    t0: NaiveDateTime,
    t1: NaiveDateTime,
) -> Result<LearningHistory, HistoryError> {
    history.window(t0, t1)
}

/// One store line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StoredRecord {
    pub person: String,
    pub knowledge_point: String,
    pub sequence_id: u64,
    #[serde(with = "serde_naive")]
    pub stop_time: NaiveDateTime,
    pub duration_s: u64,
    pub proportion: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub doc_id: Option<String>,
    #[serde(
        default,
        skip_serializing_if = "Option::is_none",
        with = "opt_naive"
    )]
    pub session_start: Option<NaiveDateTime>,
}

mod opt_naive {
    use chrono::NaiveDateTime;
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(t: &Option<NaiveDateTime>, s: S) -> Result<S::Ok, S::Error> {
        match t {
            Some(t) => s.serialize_str(&crate::timefmt::format_datetime(t)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<NaiveDateTime>, D::Error> {
        match Option::<String>::deserialize(d)? {
            None => Ok(None),
            Some(raw) => crate::timefmt::parse_datetime(&raw)
                .map(Some)
                .ok_or_else(|| de::Error::custom(format!("invalid timestamp `{raw}`"))),
        }
    }
}

impl StoredRecord {
    pub fn record(&self) -> LearningRecord {
        LearningRecord::new(self.sequence_id, self.stop_time, self.duration_s, self.proportion)
    }

    pub fn session_key(&self) -> Option<SessionKey> {
        Some(SessionKey {
            doc_id: self.doc_id.clone()?,
            start_time: self.session_start?,
            stop_time: self.stop_time,
        })
    }

    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("record serialization is infallible")
    }
}

/// All histories of one person, keyed by knowledge point.
pub type PersonHistories = BTreeMap<String, LearningHistory>;

/// In-memory view of a history store file.
#[derive(Debug, Clone, Default)]
pub struct HistoryStore {
    path: Option<PathBuf>,
    lines: Vec<StoredRecord>,
    persons: BTreeMap<String, PersonHistories>,
}

impl HistoryStore {
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Loads the store at `path`; a missing file is an empty store.
    pub fn open(path: impl AsRef<Path>) -> Result<Self, HistoryError> {
        let path = path.as_ref().to_path_buf();
        let mut store = HistoryStore {
            path: Some(path.clone()),
            ..Default::default()
        };
        let content = match fs::read_to_string(&path) {
            Ok(c) => c,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(store),
            Err(e) => return Err(e.into()),
        };
        let complete = match content.rfind('\n') {
            Some(i) => &content[..=i],
            None => "",
        };
        if complete.len() < content.len() {
            log::warn!("{}: ignoring torn trailing line", path.display());
        }
        for (idx, line) in complete.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let rec: StoredRecord = serde_json::from_str(line).map_err(|e| HistoryError::Corrupt {
                line: idx + 1,
                message: e.to_string(),
            })?;
            store.apply(rec).map_err(|e| HistoryError::Corrupt {
                line: idx + 1,
                message: e.to_string(),
            })?;
        }
        Ok(store)
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    fn apply(&mut self, rec: StoredRecord) -> Result<(), HistoryError> {
        let point = normalize_name(&rec.knowledge_point);
        self.persons
            .entry(rec.person.clone())
            .or_default()
            .entry(point.clone())
            .or_insert_with(|| LearningHistory::new(point))
            .append(rec.record())?;
        self.lines.push(rec);
        Ok(())
    }

    pub fn is_empty(&self) -> bool {
        self.lines.is_empty()
    }

    pub fn records(&self) -> &[StoredRecord] {
        &self.lines
    }

    pub fn persons(&self) -> impl Iterator<Item = &str> {
        self.persons.keys().map(String::as_str)
    }

    pub fn person(&self, person: &str) -> Option<&PersonHistories> {
        self.persons.get(person)
    }

    pub fn history(&self, person: &str, point: &str) -> Option<&LearningHistory> {
        self.persons.get(person)?.get(&normalize_name(point))
    }

    pub fn next_sequence_id(&self, person: &str, point: &str) -> u64 {
        self.history(person, point).map_or(1, LearningHistory::next_sequence_id)
    }

    /// Session identities already ingested for `person`.
    pub fn ingested_sessions(&self, person: &str) -> BTreeSet<SessionKey> {
        self.lines
            .iter()
            .filter(|r| r.person == person)
            .filter_map(StoredRecord::session_key)
            .collect()
    }

    /// Validates a batch against the tree and current histories and, when
    /// file-backed, persists the new file atomically. On any error the store,
    /// in memory and on disk, is unchanged.
    pub fn commit(&mut self, batch: Vec<StoredRecord>, tree: &KnowledgeTree) -> Result<usize, HistoryError> {
        let mut staged = self.clone();
        for rec in &batch {
            if !tree.is_leaf(&rec.knowledge_point) {
                return Err(HistoryError::UnknownPoint(rec.knowledge_point.clone()));
            }
            staged.apply(rec.clone())?;
        }
        if batch.is_empty() {
            return Ok(0);
        }
        if let Some(path) = &self.path {
            write_atomically(path, &staged.lines)?;
        }
        *self = staged;
        Ok(batch.len())
    }

    /// Appends one record to a person's history of a knowledge point.
    pub fn append_record(
        &mut self,
        tree: &KnowledgeTree,
        person: &str,
        point: &str,
        record: LearningRecord,
    ) -> Result<&LearningHistory, HistoryError> {
        let name = normalize_name(point);
        self.commit(
            vec![StoredRecord {
                person: person.to_string(),
                knowledge_point: name.clone(),
                sequence_id: record.sequence_id,
                stop_time: record.stop_time,
                duration_s: record.duration_seconds,
                proportion: record.proportion,
                doc_id: None,
                session_start: None,
            }],
            tree,
        )?;
        Ok(self.history(person, &name).expect("just appended"))
    }
}

fn write_atomically(path: &Path, lines: &[StoredRecord]) -> Result<(), HistoryError> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    let result = (|| -> io::Result<()> {
        let mut f = File::create(&tmp)?;
        let mut buf = String::new();
        for l in lines {
            buf.push_str(&l.to_line());
            buf.push('\n');
        }
        f.write_all(buf.as_bytes())?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() && tmp.is_file() {
        let _ = fs::remove_file(&tmp);
    }
    Ok(result?)
}

/// Advisory single-writer lock held for the lifetime of the guard.
#[derive(Debug)]
pub struct StoreLock {
    path: PathBuf,
}

impl StoreLock {
    pub fn lock_path(store: &Path) -> PathBuf {
        let mut p = store.as_os_str().to_owned();
        p.push(".lock");
        PathBuf::from(p)
    }

    pub fn acquire(store: &Path) -> Result<Self, HistoryError> {
        let path = Self::lock_path(store);
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(mut f) => {
                let _ = writeln!(f, "{}", std::process::id());
                Ok(StoreLock { path })
            }
            Err(e) if e.kind() == io::ErrorKind::AlreadyExists => Err(HistoryError::Locked(path)),
            Err(e) => Err(e.into()),
        }
    }

    pub fn is_locked(store: &Path) -> bool {
        Self::lock_path(store).exists()
    }
}

impl Drop for StoreLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}
