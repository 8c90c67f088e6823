//! The authorgraph store: pages, authors, categories, edits, news items and
//! run records, persisted as a single JSON snapshot written atomically
//! (temp file + rename). One writer per run; readers open the file and see
//! only fully committed runs.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Duration, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{EditRecord, NewsItem, PageViewStats, RankInputs, RunReport, WorkingSet};

/// Per-author bookkeeping as exposed by the editor/expert queries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuthorRecord {
    pub author_id: String,
    pub total_edit_count: u64,
    pub per_category_edit_counts: BTreeMap<String, u64>,
    /// True iff some persisted news item derives from a page this author
    /// edited before the item's generation instant.
    pub news_generating: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct IngestStats {
    pub pages_added: u64,
    pub edits_added: u64,
    pub authors_added: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SaveDisposition {
    Created,
    Updated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct PageNode {
    title: String,
    categories: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct StoredEdit {
    revision_id: u64,
    page_id: u64,
    author: String,
    #[serde(with = "crate::model::ts")]
    timestamp: DateTime<Utc>,
    added_text: String,
    added_char_count: u64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
struct AuthorNode {
    total_edit_count: u64,
    per_category_edit_counts: BTreeMap<String, u64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
struct StoreState {
    pages: BTreeMap<u64, PageNode>,
    edits: BTreeMap<u64, StoredEdit>,
    authors: BTreeMap<String, AuthorNode>,
    news: BTreeMap<u64, NewsItem>,
    runs: BTreeMap<u64, RunReport>,
    next_news_id: u64,
    next_run_id: u64,
}

pub struct GraphStore {
    state: StoreState,
    path: Option<PathBuf>,
}

impl GraphStore {
    /// Volatile store, mostly for tests; `commit` is a no-op.
    pub fn in_memory() -> Self {
        GraphStore {
            state: StoreState::default(),
            path: None,
        }
    }

    /// Open the store at `path`, loading the snapshot if one exists.
    pub fn open(path: &Path) -> Result<Self> {
        let state = if path.exists() {
            let raw = std::fs::read_to_string(path)?;
            serde_json::from_str(&raw)
                .map_err(|e| Error::Storage(format!("corrupt store {}: {e}", path.display())))?
        } else {
            StoreState::default()
        };
        Ok(GraphStore {
            state,
            path: Some(path.to_path_buf()),
        })
    }

    /// Atomically persist the current state: write a temp file in the same
    /// directory, flush it, then rename over the target. A crash mid-run
    /// leaves the previous snapshot untouched.
    pub fn commit(&self) -> Result<()> {
        let Some(path) = &self.path else {
            return Ok(());
        };
        let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
        if let Some(dir) = dir {
            std::fs::create_dir_all(dir)?;
        }
        let tmp = path.with_extension("tmp");
        let body = serde_json::to_string(&self.state)
            .map_err(|e| Error::Storage(format!("serialize store: {e}")))?;
        {
            use std::io::Write;
            let mut f = std::fs::File::create(&tmp)
                .map_err(|e| Error::Storage(format!("create {}: {e}", tmp.display())))?;
            f.write_all(body.as_bytes())
                .map_err(|e| Error::Storage(format!("write {}: {e}", tmp.display())))?;
            f.sync_all()
                .map_err(|e| Error::Storage(format!("sync {}: {e}", tmp.display())))?;
        }
        std::fs::rename(&tmp, path)
            .map_err(|e| Error::Storage(format!("rename into {}: {e}", path.display())))?;
        Ok(())
    }

    pub fn next_run_id(&mut self) -> u64 {
        self.state.next_run_id += 1;
        self.state.next_run_id
    }

    pub fn page_count(&self) -> u64 {
        self.state.pages.len() as u64
    }

    pub fn edit_count(&self) -> u64 {
        self.state.edits.len() as u64
    }

    pub fn author_count(&self) -> u64 {
        self.state.authors.len() as u64
    }

    pub fn run_count(&self) -> u64 {
        self.state.runs.len() as u64
    }

    pub fn page_title(&self, page_id: u64) -> Option<&str> {
        self.state.pages.get(&page_id).map(|p| p.title.as_str())
    }

    pub fn page_categories(&self, page_id: u64) -> Option<Vec<String>> {
        self.state
            .pages
            .get(&page_id)
            .map(|p| p.categories.iter().cloned().collect())
    }

    /// Upsert a working set: pages, authors, categories, edits. Keyed by
    /// revision id, so re-ingesting the same set adds nothing. Derived
    /// author counts stay consistent, including back-filling counts when a
    /// known page gains categories.
    pub fn ingest_working_set(&mut self, ws: &WorkingSet) -> IngestStats {
        let mut stats = IngestStats::default();
        for (page_id, page) in &ws.pages {
            let incoming: BTreeSet<String> = page.categories.iter().cloned().collect();
            match self.state.pages.get_mut(page_id) {
                Some(existing) => {
                    existing.title = page.page_title.clone();
                    let new_cats: Vec<String> = incoming
                        .iter()
                        .filter(|c| !existing.categories.contains(*c))
                        .cloned()
                        .collect();
                    if !new_cats.is_empty() {
                        existing.categories.extend(new_cats.iter().cloned());
                        // credit already-stored edits on this page for the
                        // newly learned categories
                        let mut per_author: BTreeMap<&str, u64> = BTreeMap::new();
                        for e in self.state.edits.values() {
                            if e.page_id == *page_id {
                                *per_author.entry(e.author.as_str()).or_insert(0) += 1;
                            }
                        }
                        for (author, count) in per_author {
                            let node = self.state.authors.get_mut(author).expect("author exists");
                            for c in &new_cats {
                                *node.per_category_edit_counts.entry(c.clone()).or_insert(0) +=
                                    count;
                            }
                        }
                    }
                }
                None => {
                    self.state.pages.insert(
                        *page_id,
                        PageNode {
                            title: page.page_title.clone(),
                            categories: incoming,
                        },
                    );
                    stats.pages_added += 1;
                }
            }

            let page_categories = self.state.pages[page_id].categories.clone();
            for edit in &page.edits {
                if self.state.edits.contains_key(&edit.revision_id) {
                    continue;
                }
                self.state.edits.insert(
                    edit.revision_id,
                    StoredEdit {
                        revision_id: edit.revision_id,
                        page_id: *page_id,
                        author: edit.author.clone(),
                        timestamp: edit.timestamp,
                        added_text: edit.added_text.clone(),
                        added_char_count: edit.added_char_count,
                    },
                );
                stats.edits_added += 1;
                if !self.state.authors.contains_key(&edit.author) {
                    self.state
                        .authors
                        .insert(edit.author.clone(), AuthorNode::default());
                    stats.authors_added += 1;
                }
                let node = self.state.authors.get_mut(&edit.author).expect("just inserted");
                node.total_edit_count += 1;
                for c in &page_categories {
                    *node.per_category_edit_counts.entry(c.clone()).or_insert(0) += 1;
                }
            }
        }
        stats
    }

    pub fn record_run(&mut self, report: &RunReport) {
        self.state.runs.insert(report.run_id, report.clone());
    }

    pub fn get_run(&self, run_id: u64) -> Option<&RunReport> {
        self.state.runs.get(&run_id)
    }

    /// Authors with at least one stored edit on a page that later became a
    /// persisted news item, the edit preceding the item's generation.
    pub fn news_generating_authors(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for item in self.state.news.values() {
            for edit in self.state.edits.values() {
                if edit.page_id == item.page_id && edit.timestamp < item.generated_at {
                    out.insert(edit.author.clone());
                }
            }
        }
        out
    }

    fn authors_of_page(&self, page_id: u64) -> BTreeSet<&str> {
        self.state
            .edits
            .values()
            .filter(|e| e.page_id == page_id)
            .map(|e| e.author.as_str())
            .collect()
    }

    /// Assemble every count the rank formulas consume, from current store
    /// contents plus the working set plus the page's view stats.
    pub fn gather_rank_inputs(
        &self,
        page_id: u64,
        ws: &WorkingSet,
        stats: &PageViewStats,
    ) -> Result<RankInputs> {
        let page = self
            .state
            .pages
            .get(&page_id)
            .ok_or(Error::UnknownPage(page_id))?;
        let in_set = ws.pages.get(&page_id).ok_or(Error::UnknownPage(page_id))?;

        let page_authors = self.authors_of_page(page_id);
        let news_gen = self.news_generating_authors();
        let news_gen_on_page = page_authors
            .iter()
            .filter(|a| news_gen.contains(**a))
            .count() as u64;

        let mut domain_experts = 0u64;
        for author in &page_authors {
            let qualifies = self.state.edits.values().any(|e| {
                e.author == **author
                    && e.page_id != page_id
                    && self
                        .state
                        .pages
                        .get(&e.page_id)
                        .map(|other| !other.categories.is_disjoint(&page.categories))
                        .unwrap_or(false)
            });
            if qualifies {
                domain_experts += 1;
            }
        }

        let inputs = RankInputs {
            page_id,
            news_gen_authors_on_page: news_gen_on_page,
            news_gen_authors_total: news_gen.len() as u64,
            authors_on_page: page_authors.len() as u64,
            authors_total: self.state.authors.len() as u64,
            domain_expert_authors_on_page: domain_experts,
            edits_of_page_in_set: in_set.edits.len() as u64,
            mean_edits_per_page_in_set: ws.total_edits() as f64 / ws.pages.len() as f64,
            views_yesterday: stats.views_yesterday,
            views_last_30_days_total: stats.views_last_30_days_total,
        };
        inputs.check_invariants()?;
        Ok(inputs)
    }

    fn author_record(&self, id: &str, node: &AuthorNode, news_gen: &BTreeSet<String>) -> AuthorRecord {
        AuthorRecord {
            author_id: id.to_string(),
            total_edit_count: node.total_edit_count,
            per_category_edit_counts: node.per_category_edit_counts.clone(),
            news_generating: news_gen.contains(id),
        }
    }

    /// Authors ranked by total stored edit count, ties by identifier.
    pub fn top_editors(&self, k: usize) -> Vec<AuthorRecord> {
        let news_gen = self.news_generating_authors();
        let mut ranked: Vec<(&String, &AuthorNode)> = self.state.authors.iter().collect();
        ranked.sort_by(|a, b| b.1.total_edit_count.cmp(&a.1.total_edit_count).then(a.0.cmp(b.0)));
        ranked
            .into_iter()
            .take(k)
            .map(|(id, node)| self.author_record(id, node, &news_gen))
            .collect()
    }

    /// Authors ranked by edit count within one category; authors with no
    /// edits in the category do not appear.
    pub fn category_top_experts(&self, category: &str, k: usize) -> Vec<AuthorRecord> {
        let news_gen = self.news_generating_authors();
        let mut ranked: Vec<(&String, &AuthorNode, u64)> = self
            .state
            .authors
            .iter()
            .filter_map(|(id, node)| {
                let count = node.per_category_edit_counts.get(category).copied().unwrap_or(0);
                (count > 0).then_some((id, node, count))
            })
            .collect();
        ranked.sort_by(|a, b| b.2.cmp(&a.2).then(a.0.cmp(b.0)));
        ranked
            .into_iter()
            .take(k)
            .map(|(id, node, _)| self.author_record(id, node, &news_gen))
            .collect()
    }

    /// Every other page sharing at least one author with this one, with the
    /// shared-author count, largest first.
    pub fn shared_editorship_neighbors(&self, page_id: u64) -> Result<Vec<(u64, u64)>> {
        if !self.state.pages.contains_key(&page_id) {
            return Err(Error::UnknownPage(page_id));
        }
        let mine = self.authors_of_page(page_id);
        let mut neighbors = Vec::new();
        for other in self.state.pages.keys() {
            if *other == page_id {
                continue;
            }
            let theirs = self.authors_of_page(*other);
            let shared = mine.intersection(&theirs).count() as u64;
            if shared > 0 {
                neighbors.push((*other, shared));
            }
        }
        neighbors.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        Ok(neighbors)
    }

    fn validate_news_item(&self, item: &NewsItem) -> Result<()> {
        item.check_invariants()?;
        if !self.state.pages.contains_key(&item.page_id) {
            return Err(Error::Integrity(format!(
                "news item references unknown page {}",
                item.page_id
            )));
        }
        for rev in &item.source_revision_ids {
            match self.state.edits.get(rev) {
                None => {
                    return Err(Error::Integrity(format!(
                        "news item references unknown revision {rev}"
                    )))
                }
                Some(e) if e.page_id != item.page_id => {
                    return Err(Error::Integrity(format!(
                        "revision {rev} belongs to page {}, not {}",
                        e.page_id, item.page_id
                    )))
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Persist a news item. When an item for the same page was generated
    /// within `dedup_horizon` of the incoming one, it is updated in place
    /// (summary, provenance, rank fields, updated_at) instead of inserting
    /// a duplicate; otherwise a fresh id is assigned.
    pub fn save_news_item(
        &mut self,
        item: NewsItem,
        dedup_horizon: Duration,
    ) -> Result<(NewsItem, SaveDisposition)> {
        self.validate_news_item(&item)?;

        let target = self
            .state
            .news
            .values()
            .filter(|existing| {
                existing.page_id == item.page_id
                    && (item.generated_at - existing.generated_at).abs() <= dedup_horizon
            })
            .max_by_key(|existing| (existing.generated_at, existing.id))
            .map(|existing| existing.id);

        match target {
            Some(id) => {
                let stored = self.state.news.get_mut(&id).expect("dedup target exists");
                stored.summary = item.summary;
                stored.source_revision_ids = item.source_revision_ids;
                stored.final_rank = item.final_rank;
                stored.rank_breakdown = item.rank_breakdown;
                stored.updated_at = item.updated_at.max(stored.updated_at);
                Ok((stored.clone(), SaveDisposition::Updated))
            }
            None => {
                self.state.next_news_id += 1;
                let mut stored = item;
                stored.id = self.state.next_news_id;
                self.state.news.insert(stored.id, stored.clone());
                Ok((stored, SaveDisposition::Created))
            }
        }
    }

    pub fn get_news(&self, id: u64) -> Option<&NewsItem> {
        self.state.news.get(&id)
    }

    /// News items, most recently updated first; optional category filter
    /// matches any of an item's categories.
    pub fn list_news(&self, category: Option<&str>, limit: Option<usize>) -> Vec<NewsItem> {
        let mut items: Vec<&NewsItem> = self
            .state
            .news
            .values()
            .filter(|item| match category {
                Some(c) => item.categories.iter().any(|ic| ic == c),
                None => true,
            })
            .collect();
        items.sort_by(|a, b| b.updated_at.cmp(&a.updated_at).then(a.id.cmp(&b.id)));
        let take = limit.unwrap_or(items.len());
        items.into_iter().take(take).cloned().collect()
    }

    /// Raw stored edits for a page, used by oracles and integrity checks.
    pub fn edits_of(&self, page_id: u64) -> Vec<EditRecord> {
        let page = self.state.pages.get(&page_id);
        self.state
            .edits
            .values()
            .filter(|e| e.page_id == page_id)
            .map(|e| EditRecord {
                revision_id: e.revision_id,
                page_id: e.page_id,
                page_title: page.map(|p| p.title.clone()).unwrap_or_default(),
                namespace: 0,
                author: e.author.clone(),
                is_bot: false,
                timestamp: e.timestamp,
                comment: String::new(),
                added_text: e.added_text.clone(),
                added_char_count: e.added_char_count,
                categories: page
                    .map(|p| p.categories.iter().cloned().collect())
                    .unwrap_or_default(),
            })
            .collect()
    }
}
