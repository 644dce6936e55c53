use chrono::NaiveDateTime;

use super::FamiliarityError;
use crate::timefmt::{format_datetime, seconds_between};

/// A forgetting curve: the retained fraction of a learning experience after
/// `minutes_elapsed` minutes, in `(0, 1]`.
pub trait RetentionCurve {
    fn retention(&self, minutes_elapsed: f64) -> Result<f64, FamiliarityError>;
}

/// Ebbinghaus' savings curve `b = k / ((log10 t)^c + k)` with `t` in minutes
/// counted from one minute before the end of learning, so `b = 1` at stop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ebbinghaus {
    pub k: f64,
    pub c: f64,
}

impl Default for Ebbinghaus {
    fn default() -> Self {
        Ebbinghaus { k: 1.84, c: 1.25 }
    }
}

impl Ebbinghaus {
    pub fn new(k: f64, c: f64) -> Result<Self, FamiliarityError> {
        if !(k > 0.0 && k.is_finite()) || !(c > 0.0 && c.is_finite()) {
            return Err(FamiliarityError::InvalidParameter(format!(
                "retention constants must be positive, got k={k}, c={c}"
            )));
        }
        Ok(Ebbinghaus { k, c })
    }
}

impl RetentionCurve for Ebbinghaus {
    fn retention(&self, minutes_elapsed: f64) -> Result<f64, FamiliarityError> {
        if minutes_elapsed.is_nan() || minutes_elapsed < 0.0 {
            return Err(FamiliarityError::NegativeElapsed(minutes_elapsed));
        }
        let t = (minutes_elapsed + 1.0).max(1.0);
        Ok(self.k / (t.log10().powf(self.c) + self.k))
    }
}

/// Free-function form of [`Ebbinghaus::retention`].
pub fn retention(minutes_elapsed: f64, params: &Ebbinghaus) -> Result<f64, FamiliarityError> {
    params.retention(minutes_elapsed)
}

/// Calendar minutes (fractional) from `stop` to `at`.
pub fn elapsed_minutes(stop: &NaiveDateTime, at: &NaiveDateTime) -> Result<f64, FamiliarityError> {
    let secs = seconds_between(stop, at);
    if secs < 0 {
        return Err(FamiliarityError::EvaluatedBeforeStop {
            stop: format_datetime(stop),
            at: format_datetime(at),
        });
    }
    Ok(secs as f64 / 60.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unity_at_stop() {
        assert_eq!(retention(0.0, &Ebbinghaus::default()).unwrap(), 1.0);
    }

    #[test]
    fn twenty_minutes() {
        let b = retention(19.0, &Ebbinghaus::default()).unwrap();
        assert!((b - 0.5697).abs() < 5e-5, "{b}");
    }

    #[test]
    fn negative_elapsed() {
        assert!(matches!(
            retention(-1.0, &Ebbinghaus::default()),
            Err(FamiliarityError::NegativeElapsed(_))
        ));
    }

    #[test]
    fn invalid_constants() {
        assert!(Ebbinghaus::new(0.0, 1.0).is_err());
        assert!(Ebbinghaus::new(1.0, -1.0).is_err());
        assert!(Ebbinghaus::new(f64::NAN, 1.0).is_err());
    }
}
