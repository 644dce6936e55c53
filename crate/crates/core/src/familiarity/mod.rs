//! Time-decayed familiarity measures.
//!
//! Every learning experience contributes `duration * share * retention`,
//! where retention follows a forgetting curve evaluated at the time elapsed
//! since the experience stopped. Contributions are independent and additive.

mod logistic;
mod measures;
mod retention;

pub use logistic::{
    fit_logistic, understanding_logit, understanding_probability, FitOptions, LogisticFit, LogisticParams,
};
pub use measures::{
    familiarity, normalize, relative_familiarity, standardize, topic_familiarity, FamiliarityScore,
    NormalizationConfig, TopicSession,
};
pub use retention::{elapsed_minutes, retention, Ebbinghaus, RetentionCurve};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum FamiliarityError {
    #[error("evaluation time {at} precedes learning stop {stop}")]
    EvaluatedBeforeStop { stop: String, at: String },
    #[error("negative elapsed time ({0} minutes)")]
    NegativeElapsed(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("undefined: {0}")]
    Undefined(String),
    #[error("expected {expected} values, got {found}")]
    LengthMismatch { expected: usize, found: usize },
}
