//! End-to-end ingestion: events -> sessions -> topics -> learning records.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use log::{info, warn};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::activity::{
    discriminate_sessions, filter_sessions, merge_sessions, ActivityError, ActivityEvent, LearningSession,
    DEFAULT_IDLE_THRESHOLD_S, DEFAULT_MERGE_GAP_S, DEFAULT_MIN_PAGE_DWELL_S, DEFAULT_MIN_SESSION_S,
};
use crate::familiarity::{Ebbinghaus, FamiliarityError, NormalizationConfig};
use crate::history::{HistoryError, HistoryStore, StoredRecord};
use crate::topic::{
    fit_lda, knowledge_point_shares, merge_multiword_terms, tokenize, LdaConfig, Lexicon, StopWords, TopicError,
    DEFAULT_TOP_M,
};
use crate::tree::KnowledgeTree;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Activity(#[from] ActivityError),
    #[error(transparent)]
    Topic(#[from] TopicError),
    #[error(transparent)]
    History(#[from] HistoryError),
    #[error(transparent)]
    Familiarity(#[from] FamiliarityError),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("page texts: {0}")]
    Pages(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SessionSettings {
    pub idle_threshold_s: u64,
    pub merge_gap_s: u64,
    pub min_page_dwell_s: u64,
    pub min_session_s: u64,
    /// Keep a session that was still open when the log ended.
    pub include_truncated: bool,
}

impl Default for SessionSettings {
    fn default() -> Self {
        SessionSettings {
            idle_threshold_s: DEFAULT_IDLE_THRESHOLD_S,
            merge_gap_s: DEFAULT_MERGE_GAP_S,
            min_page_dwell_s: DEFAULT_MIN_PAGE_DWELL_S,
            min_session_s: DEFAULT_MIN_SESSION_S,
            include_truncated: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LdaSettings {
    pub k: usize,
    pub alpha: f64,
    pub beta: f64,
    pub iterations: usize,
    pub seed: u64,
}

impl Default for LdaSettings {
    fn default() -> Self {
        let d = LdaConfig::default();
        LdaSettings {
            k: d.k,
            alpha: d.alpha,
            beta: d.beta,
            iterations: d.iterations,
            seed: d.seed,
        }
    }
}

impl LdaSettings {
    pub fn to_config(&self) -> LdaConfig {
        LdaConfig {
            k: self.k,
            alpha: self.alpha,
            beta: self.beta,
            iterations: self.iterations,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RetentionSettings {
    pub k: f64,
    pub c: f64,
}

impl Default for RetentionSettings {
    fn default() -> Self {
        let e = Ebbinghaus::default();
        RetentionSettings { k: e.k, c: e.c }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NormalizationSettings {
    pub worker_factor: f64,
    pub complexity: BTreeMap<String, f64>,
}

impl Default for NormalizationSettings {
    fn default() -> Self {
        NormalizationSettings {
            worker_factor: 1.0,
            complexity: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathSettings {
    pub tree: Option<PathBuf>,
    pub lexicon: Option<PathBuf>,
    pub stopwords: Option<PathBuf>,
    pub store: Option<PathBuf>,
    pub pages: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub sessions: SessionSettings,
    pub lda: LdaSettings,
    pub top_m: usize,
    pub retention: RetentionSettings,
    pub normalization: NormalizationSettings,
    pub paths: PathSettings,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            sessions: SessionSettings::default(),
            lda: LdaSettings::default(),
            top_m: DEFAULT_TOP_M,
            retention: RetentionSettings::default(),
            normalization: NormalizationSettings::default(),
            paths: PathSettings::default(),
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.sessions.idle_threshold_s == 0 {
            return Err(PipelineError::Config("sessions.idle_threshold_s must be > 0".into()));
        }
        if self.lda.k == 0 {
            return Err(PipelineError::Config("lda.k must be >= 1".into()));
        }
        if self.lda.iterations == 0 {
            return Err(PipelineError::Config("lda.iterations must be >= 1".into()));
        }
        if !(self.lda.alpha > 0.0) || !(self.lda.beta > 0.0) {
            return Err(PipelineError::Config("lda.alpha and lda.beta must be > 0".into()));
        }
        if self.top_m == 0 {
            return Err(PipelineError::Config("top_m must be >= 1".into()));
        }
        self.curve()?;
        self.normalization_config().validate()?;
        Ok(())
    }

    pub fn curve(&self) -> Result<Ebbinghaus, FamiliarityError> {
        Ebbinghaus::new(self.retention.k, self.retention.c)
    }

    pub fn normalization_config(&self) -> NormalizationConfig {
        NormalizationConfig {
            complexity_factors: self.normalization.complexity.clone(),
            worker_factor: self.normalization.worker_factor,
        }
    }
}

/// Extracted text per document and page.
///
/// Loaded either from a directory laid out as `<doc_id>/<page>.txt`, or from
/// a JSON file `{"<doc_id>": {"<page>": "text", ...}, ...}`.
#[derive(Debug, Clone, Default)]
pub struct PageTexts {
    pages: HashMap<String, BTreeMap<u32, String>>,
}

impl PageTexts {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, doc_id: impl Into<String>, page: u32, text: impl Into<String>) {
        self.pages.entry(doc_id.into()).or_default().insert(page, text.into());
    }

    pub fn get(&self, doc_id: &str, page: u32) -> Option<&str> {
        self.pages.get(doc_id)?.get(&page).map(String::as_str)
    }

    /// Each document's pages in page order.
    pub fn documents(&self) -> impl Iterator<Item = (&str, Vec<&str>)> {
        let mut docs: Vec<(&str, Vec<&str>)> = self
            .pages
            .iter()
            .map(|(d, ps)| (d.as_str(), ps.values().map(String::as_str).collect()))
            .collect();
        docs.sort_by(|a, b| a.0.cmp(b.0));
        docs.into_iter()
    }

    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        if path.is_dir() {
            Self::load_dir(path)
        } else {
            let raw = fs::read_to_string(path).map_err(|source| PipelineError::Io {
                path: path.to_path_buf(),
                source,
            })?;
            Self::parse_json(&raw)
        }
    }

    pub fn parse_json(raw: &str) -> Result<Self, PipelineError> {
        let parsed: BTreeMap<String, BTreeMap<String, String>> =
            serde_json::from_str(raw).map_err(|e| PipelineError::Pages(e.to_string()))?;
        let mut out = PageTexts::new();
        for (doc, pages) in parsed {
            for (page, text) in pages {
                let n: u32 = page
                    .parse()
                    .map_err(|_| PipelineError::Pages(format!("`{doc}`: page key `{page}` is not a number")))?;
                out.insert(doc.clone(), n, text);
            }
        }
        Ok(out)
    }

    fn load_dir(dir: &Path) -> Result<Self, PipelineError> {
        let io_err = |path: &Path| {
            let path = path.to_path_buf();
            move |source| PipelineError::Io { path, source }
        };
        let mut out = PageTexts::new();
        for doc in fs::read_dir(dir).map_err(io_err(dir))? {
            let doc = doc.map_err(io_err(dir))?;
            if !doc.path().is_dir() {
                continue;
            }
            let doc_id = doc.file_name().to_string_lossy().into_owned();
            for page in fs::read_dir(doc.path()).map_err(io_err(&doc.path()))? {
                let path = page.map_err(io_err(&doc.path()))?.path();
                if path.extension().and_then(|e| e.to_str()) != Some("txt") {
                    continue;
                }
                let Some(n) = path.file_stem().and_then(|s| s.to_str()).and_then(|s| s.parse::<u32>().ok()) else {
                    continue;
                };
                let text = fs::read_to_string(&path).map_err(io_err(&path))?;
                out.insert(doc_id.clone(), n, text);
            }
        }
        Ok(out)
    }
}

/// Everything ingestion needs besides the events and the store.
pub struct Resources<'a> {
    pub tree: &'a KnowledgeTree,
    pub lexicon: &'a Lexicon,
    pub stopwords: &'a StopWords,
    pub pages: &'a PageTexts,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct IngestReport {
    pub events: usize,
    /// Sessions as discriminated, before merging and filtering.
    pub raw_sessions: usize,
    pub merged_sessions: usize,
    pub filtered_sessions: usize,
    pub already_ingested: usize,
    pub skipped_missing_text: usize,
    pub skipped_too_little_text: usize,
    pub ingested_sessions: usize,
    pub records_appended: usize,
}

/// Discriminates, merges and filters sessions per the configuration.
pub fn reconstruct_sessions(
    events: &[ActivityEvent],
    settings: &SessionSettings,
) -> Result<(usize, usize, Vec<LearningSession>), PipelineError> {
    let mut raw = discriminate_sessions(events, settings.idle_threshold_s)?;
    if !settings.include_truncated {
        raw.retain(|s| !s.truncated);
    }
    let merged = merge_sessions(&raw, settings.merge_gap_s);
    let filtered = filter_sessions(&merged, settings.min_page_dwell_s, settings.min_session_s);
    Ok((raw.len(), merged.len(), filtered))
}

/// Runs the full pipeline for one person and commits the resulting records
/// in a single atomic batch. Sessions already present in the store are
/// skipped, so re-running over the same log changes nothing.
pub fn ingest(
    events: &[ActivityEvent],
    resources: &Resources<'_>,
    config: &PipelineConfig,
    store: &mut HistoryStore,
    person: &str,
) -> Result<IngestReport, PipelineError> {
    config.validate()?;
    let (raw, merged, sessions) = reconstruct_sessions(events, &config.sessions)?;
    let mut report = IngestReport {
        events: events.len(),
        raw_sessions: raw,
        merged_sessions: merged,
        filtered_sessions: sessions.len(),
        ..Default::default()
    };

    let seen = store.ingested_sessions(person);
    let lda = config.lda.to_config();
    let mut next_seq: HashMap<String, u64> = HashMap::new();
    let mut batch = Vec::new();

    for mut session in sessions {
        let key = session.key();
        if seen.contains(&key) {
            report.already_ingested += 1;
            continue;
        }
        let missing: Vec<u32> = session
            .page_views
            .iter()
            .filter(|p| resources.pages.get(&session.doc_id, p.page).is_none())
            .map(|p| p.page)
            .collect();
        if !missing.is_empty() {
            warn!(
                "session {} on `{}`: no text for pages {:?}; skipped",
                session.session_id, session.doc_id, missing
            );
            report.skipped_missing_text += 1;
            continue;
        }
        for view in &mut session.page_views {
            view.text = resources.pages.get(&session.doc_id, view.page).map(String::from);
        }
        let merged_text = merge_multiword_terms(&session.text(), resources.lexicon);
        let content = tokenize(&merged_text, resources.stopwords);
        if content.tokens.len() < lda.k {
            warn!(
                "session {} on `{}`: {} tokens is too little text for {} topics; skipped",
                session.session_id,
                session.doc_id,
                content.tokens.len(),
                lda.k
            );
            report.skipped_too_little_text += 1;
            continue;
        }
        let model = fit_lda(std::slice::from_ref(&content), &lda)?;
        let shares = knowledge_point_shares(&model, 0, resources.tree, config.top_m)?;
        for (point, share) in shares.shares {
            if share <= 0.0 {
                continue;
            }
            let seq = next_seq
                .entry(point.clone())
                .or_insert_with(|| store.next_sequence_id(person, &point));
            batch.push(StoredRecord {
                person: person.to_string(),
                knowledge_point: point,
                sequence_id: *seq,
                stop_time: session.stop_time,
                duration_s: session.duration_seconds(),
                proportion: share,
                doc_id: Some(key.doc_id.clone()),
                session_start: Some(key.start_time),
            });
            *seq += 1;
        }
        report.ingested_sessions += 1;
    }

    report.records_appended = store.commit(batch, resources.tree)?;
    info!("ingest for `{person}`: {report:?}");
    Ok(report)
}
