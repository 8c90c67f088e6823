//! Edit-event acquisition: replaying recorded change streams, fetching from
//! a MediaWiki-compatible recent-changes API, and assembling the edits of
//! one run into a working set.

pub mod api;

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader};
use std::path::Path;

use chrono::{DateTime, Utc};
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::model::{EditRecord, PageEdits, WorkingSet};
use crate::textproc::normalize_category;

/// Which change events qualify for a working set.
#[derive(Debug, Clone, PartialEq)]
pub struct IngestFilters {
    /// Namespaces to keep; an empty list keeps everything.
    pub namespaces: Vec<i64>,
    pub exclude_bots: bool,
}

impl Default for IngestFilters {
    fn default() -> Self {
        // main-article namespace only, no bots: raw change streams are
        // dominated by maintenance edits that are not newsworthy
        IngestFilters {
            namespaces: vec![0],
            exclude_bots: true,
        }
    }
}

impl IngestFilters {
    pub fn accepts(&self, edit: &EditRecord) -> bool {
        if self.exclude_bots && edit.is_bot {
            return false;
        }
        self.namespaces.is_empty() || self.namespaces.contains(&edit.namespace)
    }

    pub fn apply(&self, edits: Vec<EditRecord>) -> Vec<EditRecord> {
        edits.into_iter().filter(|e| self.accepts(e)).collect()
    }
}

/// One line of the recorded change-stream format.
#[derive(Debug, Deserialize)]
struct StreamLine {
    ts: String,
    rev_id: u64,
    page_id: u64,
    page_title: String,
    ns: i64,
    user: String,
    bot: bool,
    comment: String,
    added_text: String,
    categories: Vec<String>,
}

/// Read a recorded change stream: line-delimited JSON, one edit per line.
/// Records come back in file order with duplicate revision ids collapsed to
/// their first occurrence.
pub fn replay_stream(path: &Path) -> Result<Vec<EditRecord>> {
    let file = std::fs::File::open(path)?;
    let reader = BufReader::new(file);
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let context = format!("{}:{}", path.display(), idx + 1);
        let parsed: StreamLine = serde_json::from_str(&line)
            .map_err(|e| Error::parse(context.clone(), e.to_string()))?;
        let timestamp = crate::model::ts::parse(&parsed.ts)
            .map_err(|e| Error::parse(context, format!("ts: {e}")))?;
        if !seen.insert(parsed.rev_id) {
            continue;
        }
        let added_char_count = EditRecord::char_count(&parsed.added_text);
        out.push(EditRecord {
            revision_id: parsed.rev_id,
            page_id: parsed.page_id,
            page_title: parsed.page_title,
            namespace: parsed.ns,
            author: parsed.user,
            is_bot: parsed.bot,
            timestamp,
            comment: parsed.comment,
            added_text: parsed.added_text,
            added_char_count,
            categories: parsed.categories.iter().map(|c| normalize_category(c)).collect(),
        });
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct WorkingSetOptions {
    /// Window recorded when the edit list is empty.
    pub fallback_window: (DateTime<Utc>, DateTime<Utc>),
    /// Keep at most this many pages, preferring larger edit counts.
    pub max_pages: Option<usize>,
}

impl WorkingSetOptions {
    pub fn unbounded(fallback_window: (DateTime<Utc>, DateTime<Utc>)) -> Self {
        WorkingSetOptions {
            fallback_window,
            max_pages: None,
        }
    }
}

/// Group edits by page into a working set. Duplicate revision ids collapse
/// to their first occurrence, per-page lists sort ascending by timestamp,
/// and a page's categories are the union of categories across its edits.
pub fn build_working_set(
    edits: Vec<EditRecord>,
    run_id: u64,
    opts: &WorkingSetOptions,
) -> WorkingSet {
    let mut seen = std::collections::HashSet::new();
    let mut by_page: BTreeMap<u64, Vec<EditRecord>> = BTreeMap::new();
    for edit in edits {
        if seen.insert(edit.revision_id) {
            by_page.entry(edit.page_id).or_default().push(edit);
        }
    }

    if let Some(cap) = opts.max_pages {
        if by_page.len() > cap {
            let mut ranked: Vec<(u64, usize)> =
                by_page.iter().map(|(id, v)| (*id, v.len())).collect();
            // largest edit counts kept; equal counts keep the smaller page id
            ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
            let keep: std::collections::HashSet<u64> =
                ranked.into_iter().take(cap).map(|(id, _)| id).collect();
            by_page.retain(|id, _| keep.contains(id));
        }
    }

    let mut pages = BTreeMap::new();
    let mut window: Option<(DateTime<Utc>, DateTime<Utc>)> = None;
    for (page_id, mut list) in by_page {
        list.sort_by_key(|e| e.timestamp);
        for e in &list {
            window = Some(match window {
                None => (e.timestamp, e.timestamp),
                Some((lo, hi)) => (lo.min(e.timestamp), hi.max(e.timestamp)),
            });
        }
        let mut categories: Vec<String> = list
            .iter()
            .flat_map(|e| e.categories.iter().map(|c| normalize_category(c)))
            .filter(|c| !c.is_empty())
            .collect();
        categories.sort();
        categories.dedup();
        let page_title = list.last().expect("nonempty edit list").page_title.clone();
        pages.insert(
            page_id,
            PageEdits {
                page_title,
                categories,
                edits: list,
            },
        );
    }

    let (window_start, window_end) = window.unwrap_or(opts.fallback_window);
    WorkingSet {
        run_id,
        window_start,
        window_end,
        pages,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ts;
    use std::io::Write;

    fn edit(rev: u64, page: u64, author: &str, when: &str) -> EditRecord {
        EditRecord {
            revision_id: rev,
            page_id: page,
            page_title: format!("Page {page}"),
            namespace: 0,
            author: author.into(),
            is_bot: false,
            timestamp: ts::parse(when).unwrap(),
            comment: String::new(),
            added_text: "text".into(),
            added_char_count: 4,
            categories: vec![],
        }
    }

    fn opts() -> WorkingSetOptions {
        WorkingSetOptions::unbounded((
            ts::parse("2013-05-20T00:00:00Z").unwrap(),
            ts::parse("2013-05-20T01:00:00Z").unwrap(),
        ))
    }

    #[test]
    fn empty_edits_yield_empty_set_with_fallback_window() {
        let ws = build_working_set(vec![], 1, &opts());
        assert!(ws.is_empty());
        assert_eq!(ws.window_start, opts().fallback_window.0);
        assert_eq!(ws.window_end, opts().fallback_window.1);
    }

    #[test]
    fn grouping_by_page() {
        // pages {A,A,B,A,B} -> A with 3 edits, B with 2
        let edits = vec![
            edit(1, 1, "x", "2013-05-20T10:00:00Z"),
            edit(2, 1, "y", "2013-05-20T10:01:00Z"),
            edit(3, 2, "x", "2013-05-20T10:02:00Z"),
            edit(4, 1, "z", "2013-05-20T10:03:00Z"),
            edit(5, 2, "y", "2013-05-20T10:04:00Z"),
        ];
        let ws = build_working_set(edits, 1, &opts());
        assert_eq!(ws.pages.len(), 2);
        assert_eq!(ws.pages[&1].edits.len(), 3);
        assert_eq!(ws.pages[&2].edits.len(), 2);
        assert_eq!(ws.window_start, ts::parse("2013-05-20T10:00:00Z").unwrap());
        assert_eq!(ws.window_end, ts::parse("2013-05-20T10:04:00Z").unwrap());
    }

    #[test]
    fn out_of_order_edits_sort_ascending_per_page() {
        let edits = vec![
            edit(1, 1, "x", "2013-05-20T10:05:00Z"),
            edit(2, 1, "y", "2013-05-20T10:01:00Z"),
            edit(3, 1, "z", "2013-05-20T10:03:00Z"),
        ];
        let ws = build_working_set(edits, 1, &opts());
        let times: Vec<_> = ws.pages[&1].edits.iter().map(|e| e.timestamp).collect();
        let mut sorted = times.clone();
        sorted.sort();
        assert_eq!(times, sorted);
    }

    #[test]
    fn duplicate_revisions_collapse_to_first() {
        let mut a = edit(1, 1, "x", "2013-05-20T10:00:00Z");
        a.comment = "first".into();
        let mut b = edit(1, 1, "x", "2013-05-20T10:09:00Z");
        b.comment = "second".into();
        let ws = build_working_set(vec![a, b], 1, &opts());
        assert_eq!(ws.pages[&1].edits.len(), 1);
        assert_eq!(ws.pages[&1].edits[0].comment, "first");
    }

    #[test]
    fn categories_are_unioned_and_normalized() {
        let mut a = edit(1, 1, "x", "2013-05-20T10:00:00Z");
        a.categories = vec!["Category: Sports".into()];
        let mut b = edit(2, 1, "y", "2013-05-20T10:01:00Z");
        b.categories = vec!["Sports".into(), "Europe".into()];
        let ws = build_working_set(vec![a, b], 1, &opts());
        assert_eq!(ws.pages[&1].categories, vec!["Europe", "Sports"]);
    }

    #[test]
    fn page_cap_keeps_largest_edit_counts() {
        let edits = vec![
            edit(1, 1, "x", "2013-05-20T10:00:00Z"),
            edit(2, 2, "x", "2013-05-20T10:01:00Z"),
            edit(3, 2, "y", "2013-05-20T10:02:00Z"),
            edit(4, 3, "z", "2013-05-20T10:03:00Z"),
            edit(5, 3, "w", "2013-05-20T10:04:00Z"),
            edit(6, 3, "v", "2013-05-20T10:05:00Z"),
        ];
        let mut o = opts();
        o.max_pages = Some(2);
        let ws = build_working_set(edits, 1, &o);
        let kept: Vec<u64> = ws.pages.keys().copied().collect();
        assert_eq!(kept, vec![2, 3]);
    }

    #[test]
    fn flattened_set_is_permutation_of_deduplicated_input() {
        let edits = vec![
            edit(5, 2, "a", "2013-05-20T10:04:00Z"),
            edit(1, 1, "b", "2013-05-20T10:00:00Z"),
            edit(5, 2, "a", "2013-05-20T10:04:00Z"),
            edit(3, 1, "c", "2013-05-20T10:02:00Z"),
        ];
        let ws = build_working_set(edits, 1, &opts());
        let mut flattened: Vec<u64> = ws
            .pages
            .values()
            .flat_map(|p| p.edits.iter().map(|e| e.revision_id))
            .collect();
        flattened.sort();
        assert_eq!(flattened, vec![1, 3, 5]);
    }

    #[test]
    fn filters_drop_bots_and_foreign_namespaces() {
        let filters = IngestFilters::default();
        let mut bot = edit(1, 1, "robot", "2013-05-20T10:00:00Z");
        bot.is_bot = true;
        let mut talk = edit(2, 2, "x", "2013-05-20T10:01:00Z");
        talk.namespace = 1;
        let keep = edit(3, 3, "y", "2013-05-20T10:02:00Z");
        let out = filters.apply(vec![bot, talk, keep.clone()]);
        assert_eq!(out, vec![keep]);
    }

    #[test]
    fn filters_are_idempotent() {
        let filters = IngestFilters::default();
        let mut edits = vec![];
        for i in 0..20u64 {
            let mut e = edit(i, i % 3, "x", "2013-05-20T10:00:00Z");
            e.is_bot = i % 4 == 0;
            e.namespace = (i % 5) as i64;
            edits.push(e);
        }
        let once = filters.apply(edits);
        let twice = filters.apply(once.clone());
        assert_eq!(once, twice);
    }

    #[test]
    fn empty_namespace_list_allows_all() {
        let filters = IngestFilters {
            namespaces: vec![],
            exclude_bots: false,
        };
        let mut talk = edit(1, 1, "x", "2013-05-20T10:00:00Z");
        talk.namespace = 4;
        assert!(filters.accepts(&talk));
    }

    fn write_stream(lines: &[&str]) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        for l in lines {
            writeln!(f, "{l}").unwrap();
        }
        f.flush().unwrap();
        f
    }

    const LINE_A: &str = r#"{"ts":"2013-05-20T10:00:00Z","rev_id":1,"page_id":10,"page_title":"A","ns":0,"user":"u1","bot":false,"comment":"c","added_text":"hello","categories":["Category:X"]}"#;
    const LINE_B: &str = r#"{"ts":"2013-05-20T10:01:00Z","rev_id":2,"page_id":10,"page_title":"A","ns":0,"user":"u2","bot":false,"comment":"c","added_text":"world!","categories":[]}"#;

    #[test]
    fn replay_empty_file() {
        let f = write_stream(&[]);
        assert!(replay_stream(f.path()).unwrap().is_empty());
    }

    #[test]
    fn replay_parses_fields_and_char_counts() {
        let f = write_stream(&[LINE_A, LINE_B]);
        let records = replay_stream(f.path()).unwrap();
        assert_eq!(records.len(), 2);
        assert_eq!(records[0].revision_id, 1);
        assert_eq!(records[0].added_char_count, 5);
        assert_eq!(records[0].categories, vec!["X"]);
        assert_eq!(records[1].added_char_count, 6);
    }

    #[test]
    fn replay_collapses_duplicate_revision_ids() {
        // 5 lines, 2 sharing a revision id -> 4 records
        let dup = LINE_A;
        let c = r#"{"ts":"2013-05-20T10:02:00Z","rev_id":3,"page_id":11,"page_title":"B","ns":0,"user":"u","bot":false,"comment":"","added_text":"x","categories":[]}"#;
        let d = r#"{"ts":"2013-05-20T10:03:00Z","rev_id":4,"page_id":11,"page_title":"B","ns":0,"user":"u","bot":false,"comment":"","added_text":"y","categories":[]}"#;
        let f = write_stream(&[LINE_A, LINE_B, dup, c, d]);
        let records = replay_stream(f.path()).unwrap();
        assert_eq!(records.len(), 4);
    }

    #[test]
    fn replay_is_deterministic() {
        let f = write_stream(&[LINE_A, LINE_B]);
        let one = replay_stream(f.path()).unwrap();
        let two = replay_stream(f.path()).unwrap();
        assert_eq!(one, two);
    }

    #[test]
    fn replay_reports_line_numbers_on_bad_input() {
        let f = write_stream(&[LINE_A, r#"{"rev_id": 9}"#]);
        let err = replay_stream(f.path()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains(":2"), "missing line number: {msg}");
    }

    #[test]
    fn replay_missing_file_is_io_error() {
        let err = replay_stream(Path::new("/nonexistent/stream.ndjson")).unwrap_err();
        assert!(matches!(err, Error::Io(_)));
    }
}
