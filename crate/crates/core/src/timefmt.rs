//! Timezone-naive local timestamps as they appear in logs, stores and reports.

use chrono::NaiveDateTime;

const FORMATS: [&str; 4] = [
    "%Y-%m-%dT%H:%M:%S",
    "%Y-%m-%d %H:%M:%S",
    "%Y-%m-%dT%H:%M",
    "%Y-%m-%d %H:%M",
];

/// Parses an ISO-8601 local timestamp. Both `T` and a space are accepted as
/// the date/time separator, and seconds may be omitted.
pub fn parse_datetime(s: &str) -> Option<NaiveDateTime> {
    let s = s.trim();
    FORMATS
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(s, f).ok())
}

/// Canonical rendering used by every file format: `2016-03-13T09:30:00`.
pub fn format_datetime(t: &NaiveDateTime) -> String {
    t.format("%Y-%m-%dT%H:%M:%S").to_string()
}

/// Seconds from `earlier` to `later`; negative when `later` precedes `earlier`.
pub fn seconds_between(earlier: &NaiveDateTime, later: &NaiveDateTime) -> i64 {
    (*later - *earlier).num_seconds()
}

pub(crate) mod serde_naive {
    use chrono::NaiveDateTime;
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(t: &NaiveDateTime, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&super::format_datetime(t))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<NaiveDateTime, D::Error> {
        let raw = String::deserialize(d)?;
        super::parse_datetime(&raw)
            .ok_or_else(|| de::Error::custom(format!("invalid timestamp `{raw}`")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accepts_both_separators() {
        let a = parse_datetime("2016-03-13T09:30:00").unwrap();
        let b = parse_datetime("2016-03-13 09:30:00").unwrap();
        assert_eq!(a, b);
        assert_eq!(format_datetime(&a), "2016-03-13T09:30:00");
        assert_eq!(parse_datetime("2016-03-13 09:30").unwrap(), a);
    }

    #[test]
    fn leap_day() {
        let a = parse_datetime("2016-02-28 12:00:00").unwrap();
        let b = parse_datetime("2016-03-01 12:00:00").unwrap();
        assert_eq!(seconds_between(&a, &b), 2 * 86_400);
        assert!(parse_datetime("2015-02-29 00:00:00").is_none());
    }
}
