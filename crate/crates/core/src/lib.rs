//! Reconstructs learning sessions from reading-activity logs, allocates their
//! content to knowledge points with a topic model, and measures time-decayed
//! familiarity with each knowledge point.
//!
//! The modules follow the data flow:
//!
//! - [`activity`]: event logs and session reconstruction
//! - [`topic`]: text preparation, LDA and knowledge-point shares
//! - [`tree`]: the knowledge taxonomy
//! - [`history`]: learning records and the append-only store
//! - [`familiarity`]: forgetting curve, familiarity and normalizations
//! - [`analytics`]: concept pools and applications
//! - [`pipeline`]: end-to-end ingestion
//! - [`report`]: table rendering

// `!(x > 0.0)` is used deliberately so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod activity;
pub mod analytics;
pub mod familiarity;
pub mod history;
pub mod pipeline;
pub mod report;
pub mod timefmt;
pub mod topic;
pub mod tree;

pub use activity::{ActivityEvent, EventKind, LearningSession, PageView};
pub use familiarity::{Ebbinghaus, FamiliarityScore, RetentionCurve};
pub use history::{HistoryStore, LearningHistory, LearningRecord};
pub use pipeline::{PipelineConfig, PipelineError};
pub use topic::{ShareAllocation, TokenizedContent, TopicModelResult};
pub use tree::KnowledgeTree;
