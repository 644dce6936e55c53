//! Text renderings shared by the command-line reports.

use std::collections::BTreeMap;

use chrono::NaiveDateTime;
use serde::Serialize;

use crate::familiarity::{familiarity, FamiliarityError, RetentionCurve};
use crate::history::PersonHistories;
use crate::timefmt::format_datetime;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    /// Aligned text table.
    Table,
    /// One JSON object per line.
    Records,
}

/// A rectangular report with named columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(headers: impl IntoIterator<Item = S>) -> Self {
        Table {
            headers: headers.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }

    pub fn render(&self, format: OutputFormat) -> String {
        match format {
            OutputFormat::Table => self.render_table(),
            OutputFormat::Records => self.render_records(),
        }
    }

    fn render_table(&self) -> String {
        let mut widths: Vec<usize> = self.headers.iter().map(|h| h.chars().count()).collect();
        for row in &self.rows {
            for (w, cell) in widths.iter_mut().zip(row) {
                *w = (*w).max(cell.chars().count());
            }
        }
        let line = |cells: &[String]| {
            let padded: Vec<String> = cells
                .iter()
                .zip(&widths)
                .map(|(c, w)| format!("{c:<w$}"))
                .collect();
            padded.join("  ").trim_end().to_string()
        };
        let mut out = line(&self.headers);
        out.push('\n');
        let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
        out.push_str(&rule.join("  "));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&line(row));
            out.push('\n');
        }
        out
    }

    fn render_records(&self) -> String {
        let mut out = String::new();
        for row in &self.rows {
            let obj: serde_json::Map<String, serde_json::Value> = self
                .headers
                .iter()
                .zip(row)
                .map(|(h, c)| (h.clone(), serde_json::Value::String(c.clone())))
                .collect();
            out.push_str(&serde_json::Value::Object(obj).to_string());
            out.push('\n');
        }
        out
    }
}

/// One row of a familiarity report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FamiliarityRow {
    pub knowledge_point: String,
    pub frequency: usize,
    pub cumulative_seconds: u64,
    pub latest: Option<NaiveDateTime>,
    pub familiarity: f64,
}

/// Per-point statistics and familiarity at `at`, in knowledge-point order.
pub fn familiarity_rows<C: RetentionCurve + ?Sized>(
    histories: &PersonHistories,
    at: NaiveDateTime,
    curve: &C,
) -> Result<Vec<FamiliarityRow>, FamiliarityError> {
    histories
        .values()
        .map(|h| {
            Ok(FamiliarityRow {
                knowledge_point: h.knowledge_point.clone(),
                frequency: h.len(),
                cumulative_seconds: h.cumulative_seconds(),
                latest: h.latest_stop(),
                familiarity: familiarity(h, at, curve)?.value,
            })
        })
        .collect()
}

pub fn scores_of(rows: &[FamiliarityRow]) -> BTreeMap<String, f64> {
    rows.iter().map(|r| (r.knowledge_point.clone(), r.familiarity)).collect()
}

pub fn familiarity_table(rows: &[FamiliarityRow]) -> Table {
    let mut t = Table::new([
        "knowledge point",
        "learning frequency",
        "cumulative learning time (s)",
        "latest learning date",
        "familiarity measure",
    ]);
    for r in rows {
        t.push(vec![
            r.knowledge_point.clone(),
            r.frequency.to_string(),
            r.cumulative_seconds.to_string(),
            r.latest.as_ref().map(format_datetime).unwrap_or_default(),
            format!("{:.2}", r.familiarity),
        ]);
    }
    t
}
