//! Page ranking: the five per-page ranks and the weighted-threshold
//! selection decision. Ranks are named units over `RankInputs`, registered
//! in a table so further mechanisms can be added without touching the
//! selection logic.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::model::{PageViewStats, RankInputs, WorkingSet, RANK_SUM_TOLERANCE};
use crate::store::GraphStore;

pub const AUTHORS_WITH_NEWS: &str = "authors_with_news";
pub const COMMON_AUTHORS: &str = "common_authors";
pub const DOMAIN_EXPERTS: &str = "domain_experts";
pub const RECENT_CHANGES: &str = "recent_changes";
pub const RELEVANCE: &str = "relevance";

pub const ALL_RANKS: [&str; 5] = [
    AUTHORS_WITH_NEWS,
    COMMON_AUTHORS,
    DOMAIN_EXPERTS,
    RECENT_CHANGES,
    RELEVANCE,
];

pub type RankFn = fn(&RankInputs) -> f64;

/// The built-in rank registry.
pub fn builtin_ranks() -> BTreeMap<&'static str, RankFn> {
    let mut m: BTreeMap<&'static str, RankFn> = BTreeMap::new();
    m.insert(AUTHORS_WITH_NEWS, rank_authors_with_news);
    m.insert(COMMON_AUTHORS, rank_common_authors);
    m.insert(DOMAIN_EXPERTS, rank_domain_experts);
    m.insert(RECENT_CHANGES, rank_recent_changes);
    m.insert(RELEVANCE, rank_relevance);
    m
}

/// Weights, threshold and the set of ranks that participate.
#[derive(Debug, Clone, PartialEq)]
pub struct RankConfig {
    pub weights: BTreeMap<String, f64>,
    pub threshold: f64,
    pub enabled: BTreeSet<String>,
}

impl Default for RankConfig {
    fn default() -> Self {
        // placeholder defaults: unit weights and a unit threshold, expected
        // to be tuned per deployment
        let weights = ALL_RANKS.iter().map(|r| (r.to_string(), 1.0)).collect();
        let enabled = ALL_RANKS.iter().map(|r| r.to_string()).collect();
        RankConfig {
            weights,
            threshold: 1.0,
            enabled,
        }
    }
}

impl RankConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.threshold.is_finite() {
            return Err(Error::Config("ranks.threshold must be finite".into()));
        }
        for rank in &self.enabled {
            match self.weights.get(rank) {
                None => {
                    return Err(Error::Config(format!("enabled rank `{rank}` has no weight")))
                }
                Some(w) if !w.is_finite() || *w < 0.0 => {
                    return Err(Error::Config(format!(
                        "weight for `{rank}` must be a finite non-negative number"
                    )))
                }
                _ => {}
            }
        }
        Ok(())
    }
}

/// Outcome of the weighted-threshold rule for one page.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionDecision {
    pub page_id: u64,
    pub rank_values: BTreeMap<String, f64>,
    pub weighted_total: f64,
    pub selected: bool,
}

fn ratio(numerator: u64, denominator: u64) -> f64 {
    // absence of evidence must not promote a page
    if denominator == 0 {
        0.0
    } else {
        numerator as f64 / denominator as f64
    }
}

/// Share of all news-generating authors that edited this page.
pub fn rank_authors_with_news(inputs: &RankInputs) -> f64 {
    ratio(inputs.news_gen_authors_on_page, inputs.news_gen_authors_total)
}

/// Share of all known authors that edited this page.
pub fn rank_common_authors(inputs: &RankInputs) -> f64 {
    ratio(inputs.authors_on_page, inputs.authors_total)
}

/// Share of all known authors that edited this page and also edited another
/// page sharing one of its categories.
pub fn rank_domain_experts(inputs: &RankInputs) -> f64 {
    ratio(inputs.domain_expert_authors_on_page, inputs.authors_total)
}

/// Edit activity of this page relative to the working-set mean; exceeds 1
/// for pages busier than average. Callers never invoke this on an empty
/// working set, where the mean is undefined.
pub fn rank_recent_changes(inputs: &RankInputs) -> f64 {
    inputs.edits_of_page_in_set as f64 / inputs.mean_edits_per_page_in_set
}

/// Yesterday's page views relative to the 30-day total.
pub fn rank_relevance(inputs: &RankInputs) -> f64 {
    ratio(inputs.views_yesterday, inputs.views_last_30_days_total)
}

/// Evaluate every enabled rank against the inputs.
pub fn evaluate_ranks(
    inputs: &RankInputs,
    enabled: &BTreeSet<String>,
) -> Result<BTreeMap<String, f64>> {
    let registry = builtin_ranks();
    let mut out = BTreeMap::new();
    for name in enabled {
        let f = registry
            .get(name.as_str())
            .ok_or_else(|| Error::Config(format!("unknown rank `{name}`")))?;
        out.insert(name.clone(), f(inputs));
    }
    Ok(out)
}

/// Weighted sum of the enabled rank values compared against the threshold;
/// selection requires strictly exceeding it.
pub fn combine(values: &BTreeMap<String, f64>, cfg: &RankConfig, page_id: u64) -> Result<SelectionDecision> {
    let mut total = 0.0;
    let mut kept = BTreeMap::new();
    for name in &cfg.enabled {
        let value = *values
            .get(name)
            .ok_or_else(|| Error::Config(format!("no value computed for enabled rank `{name}`")))?;
        let weight = *cfg
            .weights
            .get(name)
            .ok_or_else(|| Error::Config(format!("enabled rank `{name}` has no weight")))?;
        total += value * weight;
        kept.insert(name.clone(), value);
    }
    Ok(SelectionDecision {
        page_id,
        rank_values: kept,
        weighted_total: total,
        selected: total > cfg.threshold,
    })
}

/// Rank every page of the working set and keep the selected ones, strongest
/// first (ties by page id). The working set must already be ingested so the
/// store-side counts reflect it.
pub fn select_news_pages(
    store: &GraphStore,
    ws: &WorkingSet,
    cfg: &RankConfig,
    stats: &BTreeMap<u64, PageViewStats>,
) -> Result<Vec<SelectionDecision>> {
    cfg.validate()?;
    let mut selected = Vec::new();
    for page_id in ws.pages.keys() {
        let zeros;
        let page_stats = match stats.get(page_id) {
            Some(s) => s,
            None => {
                zeros = PageViewStats::zeros(
                    store.page_title(*page_id).unwrap_or_default().to_string(),
                );
                &zeros
            }
        };
        let inputs = store.gather_rank_inputs(*page_id, ws, page_stats)?;
        let values = evaluate_ranks(&inputs, &cfg.enabled)?;
        let decision = combine(&values, cfg, *page_id)?;
        if decision.selected {
            selected.push(decision);
        }
    }
    selected.sort_by(|a, b| {
        b.weighted_total
            .partial_cmp(&a.weighted_total)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.page_id.cmp(&b.page_id))
    });
    Ok(selected)
}

/// True when the decision's stored total matches its breakdown under the
/// crate-wide arithmetic tolerance.
pub fn decision_is_consistent(decision: &SelectionDecision, cfg: &RankConfig) -> bool {
    let sum: f64 = decision
        .rank_values
        .iter()
        .map(|(name, v)| v * cfg.weights.get(name).copied().unwrap_or(0.0))
        .sum();
    (sum - decision.weighted_total).abs() <= RANK_SUM_TOLERANCE
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inputs() -> RankInputs {
        RankInputs {
            page_id: 1,
            news_gen_authors_on_page: 0,
            news_gen_authors_total: 0,
            authors_on_page: 0,
            authors_total: 0,
            domain_expert_authors_on_page: 0,
            edits_of_page_in_set: 1,
            mean_edits_per_page_in_set: 1.0,
            views_yesterday: 0,
            views_last_30_days_total: 0,
        }
    }

    #[test]
    fn authors_with_news_ratio() {
        let mut i = inputs();
        assert_eq!(rank_authors_with_news(&i), 0.0); // zero denominator
        i.news_gen_authors_total = 5;
        i.news_gen_authors_on_page = 2;
        i.authors_on_page = 2;
        i.authors_total = 9;
        assert_eq!(rank_authors_with_news(&i), 0.4);
        i.news_gen_authors_on_page = 5;
        i.authors_on_page = 5;
        assert_eq!(rank_authors_with_news(&i), 1.0);
    }

    #[test]
    fn common_authors_ratio() {
        let mut i = inputs();
        assert_eq!(rank_common_authors(&i), 0.0); // empty store
        i.authors_total = 12;
        i.authors_on_page = 3;
        assert_eq!(rank_common_authors(&i), 0.25);
        i.authors_total = 1;
        i.authors_on_page = 1;
        assert_eq!(rank_common_authors(&i), 1.0);
    }

    #[test]
    fn domain_experts_ratio() {
        let mut i = inputs();
        assert_eq!(rank_domain_experts(&i), 0.0); // no shared-category pages
        i.authors_total = 8;
        i.authors_on_page = 3;
        i.domain_expert_authors_on_page = 2;
        assert_eq!(rank_domain_experts(&i), 0.25);
        i.authors_on_page = 8;
        i.domain_expert_authors_on_page = 8;
        assert_eq!(rank_domain_experts(&i), 1.0);
    }

    #[test]
    fn recent_changes_against_mean() {
        let mut i = inputs();
        // set with per-page edits {2,4,6}: mean 4, page with 6 -> 1.5
        i.edits_of_page_in_set = 6;
        i.mean_edits_per_page_in_set = 4.0;
        assert_eq!(rank_recent_changes(&i), 1.5);
        // single-page set
        i.edits_of_page_in_set = 7;
        i.mean_edits_per_page_in_set = 7.0;
        assert_eq!(rank_recent_changes(&i), 1.0);
    }

    #[test]
    fn relevance_ratio() {
        let mut i = inputs();
        assert_eq!(rank_relevance(&i), 0.0);
        i.views_yesterday = 100;
        i.views_last_30_days_total = 3000;
        let r = rank_relevance(&i);
        assert!((r - 1.0 / 30.0).abs() < 1e-15);
        i.views_yesterday = 3000;
        assert_eq!(rank_relevance(&i), 1.0);
    }

    fn values(v: &[(&str, f64)]) -> BTreeMap<String, f64> {
        v.iter().map(|(k, x)| (k.to_string(), *x)).collect()
    }

    #[test]
    fn combine_zero_ranks_not_selected() {
        let mut cfg = RankConfig::default();
        cfg.threshold = 0.5;
        let vals = values(&ALL_RANKS.map(|r| (r, 0.0)));
        let d = combine(&vals, &cfg, 1).unwrap();
        assert_eq!(d.weighted_total, 0.0);
        assert!(!d.selected);
    }

    #[test]
    fn combine_hand_sum() {
        let cfg = RankConfig::default();
        let vals = values(&[
            (AUTHORS_WITH_NEWS, 0.4),
            (COMMON_AUTHORS, 0.25),
            (DOMAIN_EXPERTS, 0.25),
            (RECENT_CHANGES, 1.5),
            (RELEVANCE, 0.05),
        ]);
        let d = combine(&vals, &cfg, 1).unwrap();
        assert!((d.weighted_total - 2.45).abs() <= 1e-12);
        assert!(d.selected);
        assert!(decision_is_consistent(&d, &cfg));
    }

    #[test]
    fn combine_all_weights_zero_annihilates() {
        let mut cfg = RankConfig::default();
        for w in cfg.weights.values_mut() {
            *w = 0.0;
        }
        let vals = values(&[
            (AUTHORS_WITH_NEWS, 0.9),
            (COMMON_AUTHORS, 0.9),
            (DOMAIN_EXPERTS, 0.9),
            (RECENT_CHANGES, 9.0),
            (RELEVANCE, 0.9),
        ]);
        let d = combine(&vals, &cfg, 1).unwrap();
        assert_eq!(d.weighted_total, 0.0);
    }

    #[test]
    fn combine_requires_every_enabled_value() {
        let cfg = RankConfig::default();
        let vals = values(&[(AUTHORS_WITH_NEWS, 0.5)]);
        assert!(matches!(combine(&vals, &cfg, 1), Err(Error::Config(_))));
    }

    #[test]
    fn threshold_tie_is_not_selected() {
        let mut cfg = RankConfig::default();
        cfg.threshold = 2.0;
        cfg.enabled = [COMMON_AUTHORS.to_string()].into_iter().collect();
        cfg.weights = values(&[(COMMON_AUTHORS, 2.0)]);
        let vals = values(&[(COMMON_AUTHORS, 1.0)]);
        let d = combine(&vals, &cfg, 1).unwrap();
        assert_eq!(d.weighted_total, 2.0);
        assert!(!d.selected, "exact threshold must not select");
    }

    #[test]
    fn config_validation_rejects_missing_weight_and_bad_threshold() {
        let mut cfg = RankConfig::default();
        cfg.weights.remove(RELEVANCE);
        assert!(cfg.validate().is_err());

        let mut cfg = RankConfig::default();
        cfg.threshold = f64::INFINITY;
        assert!(cfg.validate().is_err());

        let mut cfg = RankConfig::default();
        cfg.weights.insert(RELEVANCE.into(), -0.5);
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn unknown_enabled_rank_is_config_error() {
        let mut enabled = BTreeSet::new();
        enabled.insert("made_up".to_string());
        assert!(matches!(
            evaluate_ranks(&inputs(), &enabled),
            Err(Error::Config(_))
        ));
    }
}
