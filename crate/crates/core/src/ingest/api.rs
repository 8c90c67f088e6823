//! Client for MediaWiki-compatible recent-changes and revision endpoints.
//!
//! The change feed reports sizes only, so added text is reconstructed from
//! the revision diff (insertions kept). When that fails the edit comment
//! stands in and the reported size delta is used as the character count.

use std::collections::HashMap;

use chrono::{DateTime, Utc};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::httpgate::HttpGateway;
use crate::ingest::IngestFilters;
use crate::model::{ts, EditRecord};
use crate::textproc::normalize_category;

fn field<'a>(v: &'a Value, name: &str, context: &str) -> Result<&'a Value> {
    v.get(name)
        .ok_or_else(|| Error::parse(context, format!("missing field `{name}`")))
}

fn field_u64(v: &Value, name: &str, context: &str) -> Result<u64> {
    field(v, name, context)?
        .as_u64()
        .ok_or_else(|| Error::parse(context, format!("field `{name}` is not an unsigned integer")))
}

fn field_str<'a>(v: &'a Value, name: &str, context: &str) -> Result<&'a str> {
    field(v, name, context)?
        .as_str()
        .ok_or_else(|| Error::parse(context, format!("field `{name}` is not a string")))
}

/// Fetch every qualifying edit event in `[window_start, window_end]`,
/// following pagination to exhaustion. Each record is fully populated:
/// categories come from a per-page lookup and added text from the diff.
pub fn fetch_recent_changes(
    gw: &HttpGateway,
    endpoint: &str,
    window_start: DateTime<Utc>,
    window_end: DateTime<Utc>,
    filters: &IngestFilters,
) -> Result<Vec<EditRecord>> {
    if window_start >= window_end {
        return Err(Error::Config(format!(
            "window start {} is not before window end {}",
            ts::to_string(&window_start),
            ts::to_string(&window_end)
        )));
    }

    let mut out = Vec::new();
    let mut category_cache: HashMap<u64, Vec<String>> = HashMap::new();
    let mut continue_token: Option<String> = None;

    loop {
        let start = ts::to_string(&window_start);
        let end = ts::to_string(&window_end);
        let mut query: Vec<(&str, &str)> = vec![
            ("action", "query"),
            ("format", "json"),
            ("formatversion", "2"),
            ("list", "recentchanges"),
            ("rcprop", "title|ids|sizes|flags|user|timestamp|comment"),
            ("rctype", "edit|new"),
            ("rcdir", "newer"),
            ("rcstart", &start),
            ("rcend", &end),
            ("rclimit", "500"),
        ];
        let namespaces = filters
            .namespaces
            .iter()
            .map(|n| n.to_string())
            .collect::<Vec<_>>()
            .join("|");
        if !filters.namespaces.is_empty() {
            query.push(("rcnamespace", &namespaces));
        }
        if filters.exclude_bots {
            query.push(("rcshow", "!bot"));
        }
        if let Some(token) = &continue_token {
            query.push(("rccontinue", token));
        }

        let body = gw.get_with_query(endpoint, &query)?;
        let doc: Value = serde_json::from_str(&body)
            .map_err(|e| Error::parse("recentchanges response", e.to_string()))?;
        let changes = field(field(&doc, "query", "recentchanges response")?, "recentchanges", "query")?
            .as_array()
            .ok_or_else(|| Error::parse("query", "field `recentchanges` is not an array"))?;

        for change in changes {
            let record = parse_change(gw, endpoint, change, &mut category_cache)?;
            if filters.accepts(&record) {
                out.push(record);
            }
        }

        continue_token = doc
            .get("continue")
            .and_then(|c| c.get("rccontinue"))
            .and_then(|t| t.as_str())
            .map(String::from);
        if continue_token.is_none() {
            break;
        }
    }

    Ok(out)
}

fn parse_change(
    gw: &HttpGateway,
    endpoint: &str,
    change: &Value,
    category_cache: &mut HashMap<u64, Vec<String>>,
) -> Result<EditRecord> {
    let ctx = "recentchanges entry";
    let revision_id = field_u64(change, "revid", ctx)?;
    let page_id = field_u64(change, "pageid", ctx)?;
    let page_title = field_str(change, "title", ctx)?.to_string();
    let namespace = field(change, "ns", ctx)?
        .as_i64()
        .ok_or_else(|| Error::parse(ctx, "field `ns` is not an integer"))?;
    let author = field_str(change, "user", ctx)?.to_string();
    let is_bot = change.get("bot").and_then(|b| b.as_bool()).unwrap_or(false);
    let timestamp = ts::parse(field_str(change, "timestamp", ctx)?)
        .map_err(|e| Error::parse(ctx, format!("timestamp: {e}")))?;
    let comment = change
        .get("comment")
        .and_then(|c| c.as_str())
        .unwrap_or("")
        .to_string();
    let old_revid = change.get("old_revid").and_then(|v| v.as_u64()).unwrap_or(0);
    let oldlen = change.get("oldlen").and_then(|v| v.as_i64()).unwrap_or(0);
    let newlen = change.get("newlen").and_then(|v| v.as_i64()).unwrap_or(0);

    let categories = match category_cache.get(&page_id) {
        Some(cached) => cached.clone(),
        None => {
            let fetched = fetch_page_categories(gw, endpoint, page_id).unwrap_or_default();
            category_cache.insert(page_id, fetched.clone());
            fetched
        }
    };

    let (added_text, added_char_count) =
        match reconstruct_added_text(gw, endpoint, old_revid, revision_id) {
            Ok(text) if !text.trim().is_empty() => {
                let count = EditRecord::char_count(&text);
                (text, count)
            }
            _ => {
                // fall back to the comment and the reported size delta
                let delta = (newlen - oldlen).max(0) as u64;
                (comment.clone(), delta)
            }
        };

    Ok(EditRecord {
        revision_id,
        page_id,
        page_title,
        namespace,
        author,
        is_bot,
        timestamp,
        comment,
        added_text,
        added_char_count,
        categories,
    })
}

fn fetch_page_categories(gw: &HttpGateway, endpoint: &str, page_id: u64) -> Result<Vec<String>> {
    let id = page_id.to_string();
    let query = [
        ("action", "query"),
        ("format", "json"),
        ("formatversion", "2"),
        ("prop", "categories"),
        ("cllimit", "500"),
        ("pageids", id.as_str()),
    ];
    let body = gw.get_with_query(endpoint, &query)?;
    let doc: Value = serde_json::from_str(&body)
        .map_err(|e| Error::parse("categories response", e.to_string()))?;
    let pages = field(field(&doc, "query", "categories response")?, "pages", "query")?
        .as_array()
        .cloned()
        .unwrap_or_default();
    let mut out = Vec::new();
    for page in &pages {
        if let Some(cats) = page.get("categories").and_then(|c| c.as_array()) {
            for cat in cats {
                if let Some(title) = cat.get("title").and_then(|t| t.as_str()) {
                    let name = normalize_category(title);
                    if !name.is_empty() {
                        out.push(name);
                    }
                }
            }
        }
    }
    out.sort();
    out.dedup();
    Ok(out)
}

/// Inserted text of one revision: from the diff against its parent, or the
/// whole revision content when the page is new.
fn reconstruct_added_text(
    gw: &HttpGateway,
    endpoint: &str,
    old_revid: u64,
    revid: u64,
) -> Result<String> {
    if old_revid == 0 {
        return fetch_revision_content(gw, endpoint, revid);
    }
    let from = old_revid.to_string();
    let to = revid.to_string();
    let query = [
        ("action", "compare"),
        ("format", "json"),
        ("formatversion", "2"),
        ("fromrev", from.as_str()),
        ("torev", to.as_str()),
    ];
    let body = gw.get_with_query(endpoint, &query)?;
    let doc: Value = serde_json::from_str(&body)
        .map_err(|e| Error::parse("compare response", e.to_string()))?;
    let compare = field(&doc, "compare", "compare response")?;
    let html = compare
        .get("body")
        .or_else(|| compare.get("*"))
        .and_then(|b| b.as_str())
        .ok_or_else(|| Error::parse("compare", "missing diff body"))?;
    Ok(extract_insertions(html))
}

fn fetch_revision_content(gw: &HttpGateway, endpoint: &str, revid: u64) -> Result<String> {
    let id = revid.to_string();
    let query = [
        ("action", "query"),
        ("format", "json"),
        ("formatversion", "2"),
        ("prop", "revisions"),
        ("rvprop", "content"),
        ("rvslots", "main"),
        ("revids", id.as_str()),
    ];
    let body = gw.get_with_query(endpoint, &query)?;
    let doc: Value = serde_json::from_str(&body)
        .map_err(|e| Error::parse("revisions response", e.to_string()))?;
    let content = doc
        .pointer("/query/pages/0/revisions/0/slots/main/content")
        .and_then(|c| c.as_str())
        .ok_or_else(|| Error::parse("revisions response", "missing revision content"))?;
    Ok(content.to_string())
}

/// Pull the inserted text out of a MediaWiki diff table: `<ins>` spans
/// first, whole added-line cells when there are none.
pub fn extract_insertions(diff_html: &str) -> String {
    use regex::Regex;
    use std::sync::LazyLock;
    static INS: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?is)<ins[^>]*>(.*?)</ins>").unwrap());
    static ADDED_CELL: LazyLock<Regex> = LazyLock::new(|| {
        Regex::new(r#"(?is)<td[^>]*class="[^"]*diff-addedline[^"]*"[^>]*>(.*?)</td>"#).unwrap()
    });
    static TAG: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?s)<[^>]*>").unwrap());

    let mut pieces: Vec<String> = INS
        .captures_iter(diff_html)
        .map(|c| c[1].to_string())
        .collect();
    if pieces.is_empty() {
        pieces = ADDED_CELL
            .captures_iter(diff_html)
            .map(|c| c[1].to_string())
            .collect();
    }
    let joined = pieces.join(" ");
    let stripped = TAG.replace_all(&joined, "");
    unescape_entities(stripped.trim())
}

fn unescape_entities(text: &str) -> String {
    text.replace("&lt;", "<")
        .replace("&gt;", ">")
        .replace("&quot;", "\"")
        .replace("&#039;", "'")
        .replace("&amp;", "&")
}
