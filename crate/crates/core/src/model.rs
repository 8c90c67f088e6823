//! Shared domain types: edit events, working sets, news items, run reports.

use std::collections::BTreeMap;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Timestamp (de)serialization used for everything we persist or export.
///
/// Output is pinned to whole-second UTC (`2013-05-20T22:41:00Z`) so that
/// feed exports are byte-stable; input accepts any RFC 3339 instant.
pub mod ts {
    use chrono::{DateTime, SecondsFormat, Utc};
    use serde::{self, Deserialize, Deserializer, Serializer};

    pub const FORMAT: &str = "%Y-%m-%dT%H:%M:%SZ";

    pub fn to_string(dt: &DateTime<Utc>) -> String {
        dt.to_rfc3339_opts(SecondsFormat::Secs, true)
    }

    pub fn parse(s: &str) -> Result<DateTime<Utc>, chrono::ParseError> {
        DateTime::parse_from_rfc3339(s).map(|d| d.with_timezone(&Utc))
    }

    pub fn serialize<S: Serializer>(dt: &DateTime<Utc>, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&to_string(dt))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DateTime<Utc>, D::Error> {
        let raw = String::deserialize(d)?;
        parse(&raw).map_err(serde::de::Error::custom)
    }
}

/// One revision event on a page.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EditRecord {
    pub revision_id: u64,
    pub page_id: u64,
    pub page_title: String,
    pub namespace: i64,
    /// Account name or IP identifier.
    pub author: String,
    pub is_bot: bool,
    #[serde(with = "ts")]
    pub timestamp: DateTime<Utc>,
    pub comment: String,
    pub added_text: String,
    /// Character count of `added_text`, except in the degraded live-API case
    /// where the diff could not be reconstructed and the reported size delta
    /// is used instead.
    pub added_char_count: u64,
    pub categories: Vec<String>,
}

impl EditRecord {
    /// Character count measured the way the length selection criterion
    /// expects: Unicode scalar values, not bytes.
    pub fn char_count(text: &str) -> u64 {
        text.chars().count() as u64
    }
}

/// Per-page slice of a working set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PageEdits {
    pub page_title: String,
    /// Union of categories seen across the page's edits, sorted.
    pub categories: Vec<String>,
    /// Ascending by timestamp.
    pub edits: Vec<EditRecord>,
}

/// One pipeline run's grouping of recent edits by page.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkingSet {
    pub run_id: u64,
    #[serde(with = "ts")]
    pub window_start: DateTime<Utc>,
    #[serde(with = "ts")]
    pub window_end: DateTime<Utc>,
    pub pages: BTreeMap<u64, PageEdits>,
}

impl WorkingSet {
    pub fn total_edits(&self) -> u64 {
        self.pages.values().map(|p| p.edits.len() as u64).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.pages.is_empty()
    }
}

/// Every count and statistic consumed by the rank formulas.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankInputs {
    pub page_id: u64,
    /// News-generating authors that edited this page.
    pub news_gen_authors_on_page: u64,
    /// All news-generating authors in the store.
    pub news_gen_authors_total: u64,
    /// Distinct authors with a stored edit on this page.
    pub authors_on_page: u64,
    /// Distinct authors in the store.
    pub authors_total: u64,
    /// Authors of this page who also edited a different page sharing at
    /// least one category with it.
    pub domain_expert_authors_on_page: u64,
    pub edits_of_page_in_set: u64,
    pub mean_edits_per_page_in_set: f64,
    pub views_yesterday: u64,
    pub views_last_30_days_total: u64,
}

impl RankInputs {
    /// The subset inequalities every valid instance satisfies.
    pub fn check_invariants(&self) -> Result<()> {
        if self.news_gen_authors_on_page > self.news_gen_authors_total.min(self.authors_on_page) {
            return Err(Error::Integrity(format!(
                "news_gen_authors_on_page {} exceeds min(total {}, on_page {})",
                self.news_gen_authors_on_page, self.news_gen_authors_total, self.authors_on_page
            )));
        }
        if self.authors_on_page > self.authors_total {
            return Err(Error::Integrity(format!(
                "authors_on_page {} exceeds authors_total {}",
                self.authors_on_page, self.authors_total
            )));
        }
        if self.domain_expert_authors_on_page > self.authors_on_page {
            return Err(Error::Integrity(format!(
                "domain_expert_authors_on_page {} exceeds authors_on_page {}",
                self.domain_expert_authors_on_page, self.authors_on_page
            )));
        }
        if self.views_yesterday > self.views_last_30_days_total {
            return Err(Error::Integrity(format!(
                "views_yesterday {} exceeds 30-day total {}",
                self.views_yesterday, self.views_last_30_days_total
            )));
        }
        Ok(())
    }
}

/// One rank's contribution as recorded on a saved news item.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankComponent {
    pub value: f64,
    pub weight: f64,
}

/// A generated, summarized, categorized news story with provenance to the
/// edits it was built from. Field order matches the feed JSON schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NewsItem {
    /// Store-assigned identifier; 0 marks a draft that has not been saved.
    pub id: u64,
    pub page_id: u64,
    pub title: String,
    pub summary: String,
    pub categories: Vec<String>,
    #[serde(with = "ts")]
    pub generated_at: DateTime<Utc>,
    #[serde(with = "ts")]
    pub updated_at: DateTime<Utc>,
    pub final_rank: f64,
    pub rank_breakdown: BTreeMap<String, RankComponent>,
    pub source_revision_ids: Vec<u64>,
}

pub const RANK_SUM_TOLERANCE: f64 = 1e-12;

impl NewsItem {
    /// Type invariants that do not need store access.
    pub fn check_invariants(&self) -> Result<()> {
        if self.source_revision_ids.is_empty() {
            return Err(Error::Integrity("source_revision_ids is empty".into()));
        }
        if self.updated_at < self.generated_at {
            return Err(Error::Integrity("updated_at precedes generated_at".into()));
        }
        let sum: f64 = self
            .rank_breakdown
            .values()
            .map(|c| c.value * c.weight)
            .sum();
        if (sum - self.final_rank).abs() > RANK_SUM_TOLERANCE {
            return Err(Error::Integrity(format!(
                "final_rank {} does not equal rank_breakdown weighted sum {}",
                self.final_rank, sum
            )));
        }
        Ok(())
    }
}

/// Per-page view statistics over a 30-day window ending yesterday.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PageViewStats {
    pub page_title: String,
    /// Exactly 30 entries, oldest first; the last entry is yesterday.
    pub daily_views: Vec<u64>,
    pub views_yesterday: u64,
    pub views_last_30_days_total: u64,
    /// Set when the provider had no data and zeros were substituted.
    pub degraded: bool,
}

impl PageViewStats {
    pub fn from_daily(page_title: impl Into<String>, daily_views: Vec<u64>, degraded: bool) -> Self {
        debug_assert_eq!(daily_views.len(), 30);
        let views_yesterday = *daily_views.last().unwrap_or(&0);
        let views_last_30_days_total = daily_views.iter().sum();
        PageViewStats {
            page_title: page_title.into(),
            daily_views,
            views_yesterday,
            views_last_30_days_total,
            degraded,
        }
    }

    pub fn zeros(page_title: impl Into<String>) -> Self {
        Self::from_daily(page_title, vec![0; 30], true)
    }
}

/// Bookkeeping for one pipeline run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub run_id: u64,
    #[serde(with = "ts")]
    pub started_at: DateTime<Utc>,
    #[serde(with = "ts")]
    pub finished_at: DateTime<Utc>,
    pub pages_considered: u64,
    pub pages_selected: u64,
    pub news_created: u64,
    pub news_updated: u64,
    /// Human-readable notes on degraded steps (stats fallback, summarizer
    /// fallback, pages skipped for lack of text).
    pub degradations: Vec<String>,
}
