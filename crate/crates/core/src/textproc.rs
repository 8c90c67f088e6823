//! Text utilities shared by the news builder and the benchmark tool:
//! tokenization, sentence splitting, the bundled stopword list, and a
//! minimal wiki-markup cleaner.

use std::collections::{HashMap, HashSet};
use std::sync::LazyLock;

/// Bundled list of common English stopwords, shared by the summarizer and
/// the keyword extractor so both score content words the same way.
pub const STOPWORDS: &[&str] = &[
    "a", "about", "above", "after", "again", "against", "all", "also", "am", "an", "and", "any",
    "are", "as", "at", "be", "because", "been", "before", "being", "below", "between", "both",
    "but", "by", "can", "could", "did", "do", "does", "doing", "down", "during", "each", "few",
    "for", "from", "further", "had", "has", "have", "having", "he", "her", "here", "hers",
    "herself", "him", "himself", "his", "how", "i", "if", "in", "into", "is", "it", "its",
    "itself", "just", "may", "me", "might", "more", "most", "must", "my", "myself", "no", "nor",
    "not", "now", "of", "off", "on", "once", "only", "or", "other", "our", "ours", "ourselves",
    "out", "over", "own", "same", "shall", "she", "should", "so", "some", "such", "than", "that",
    "the", "their", "theirs", "them", "themselves", "then", "there", "these", "they", "this",
    "those", "through", "to", "too", "under", "until", "up", "very", "was", "we", "were", "what",
    "when", "where", "which", "while", "who", "whom", "why", "will", "with", "would", "you",
    "your", "yours", "yourself", "yourselves",
];

static STOPWORD_SET: LazyLock<HashSet<&'static str>> =
    LazyLock::new(|| STOPWORDS.iter().copied().collect());

pub fn stopwords() -> &'static HashSet<&'static str> {
    &STOPWORD_SET
}

pub fn is_stopword(word: &str) -> bool {
    STOPWORD_SET.contains(word)
}

/// Lowercased, punctuation-free tokens in input order.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(|t| t.to_lowercase())
        .collect()
}

pub fn word_frequencies(tokens: &[String]) -> HashMap<&str, u64> {
    let mut freq: HashMap<&str, u64> = HashMap::new();
    for t in tokens {
        *freq.entry(t.as_str()).or_insert(0) += 1;
    }
    freq
}

/// Split text into sentences at '.', '!' or '?' followed by whitespace or
/// end of input. Terminal punctuation stays with its sentence. Abbreviations
/// are not special-cased.
pub fn split_sentences(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut current = String::new();
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        current.push(c);
        if matches!(c, '.' | '!' | '?') {
            let at_boundary = match chars.peek() {
                None => true,
                Some(next) => next.is_whitespace(),
            };
            // let runs like "?!" or "..." accumulate onto one sentence
            let run_continues = matches!(chars.peek(), Some('.') | Some('!') | Some('?'));
            if at_boundary && !run_continues {
                let s = current.trim();
                if !s.is_empty() {
                    out.push(s.to_string());
                }
                current.clear();
            }
        }
    }
    let tail = current.trim();
    if !tail.is_empty() {
        out.push(tail.to_string());
    }
    out
}

/// Strip wiki markup sigils, keeping the visible text: piped and plain link
/// brackets, template braces, and ref tags. Everything else passes through.
pub fn clean_wiki_markup(text: &str) -> String {
    use regex::Regex;
    static REF_PAIR: LazyLock<Regex> =
        LazyLock::new(|| Regex::new(r"(?is)<ref[^>/]*>.*?</ref>").unwrap());
    static REF_SELF: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?is)<ref[^>]*/>").unwrap());
    static TEMPLATE: LazyLock<Regex> =
        LazyLock::new(|| Regex::new(r"\{\{[^{}]*\}\}").unwrap());
    static PIPED_LINK: LazyLock<Regex> =
        LazyLock::new(|| Regex::new(r"\[\[[^\[\]|]*\|([^\[\]]*)\]\]").unwrap());
    static PLAIN_LINK: LazyLock<Regex> =
        LazyLock::new(|| Regex::new(r"\[\[([^\[\]]*)\]\]").unwrap());

    let mut s = REF_PAIR.replace_all(text, "").into_owned();
    s = REF_SELF.replace_all(&s, "").into_owned();
    // innermost-first so nested templates collapse over a few passes
    loop {
        let next = TEMPLATE.replace_all(&s, "").into_owned();
        if next == s {
            break;
        }
        s = next;
    }
    loop {
        let next = PIPED_LINK.replace_all(&s, "$1").into_owned();
        let next = PLAIN_LINK.replace_all(&next, "$1").into_owned();
        if next == s {
            break;
        }
        s = next;
    }
    s
}

/// Strip a leading "Category:" prefix and surrounding whitespace.
pub fn normalize_category(raw: &str) -> String {
    let trimmed = raw.trim();
    let stripped = trimmed
        .strip_prefix("Category:")
        .unwrap_or(trimmed)
        .trim();
    stripped.to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokenize_lowercases_and_strips_punctuation() {
        assert_eq!(
            tokenize("The cat, sat! On THE mat."),
            vec!["the", "cat", "sat", "on", "the", "mat"]
        );
        assert!(tokenize("").is_empty());
        assert!(tokenize("... !!").is_empty());
    }

    #[test]
    fn tokenize_keeps_digits_and_unicode() {
        assert_eq!(tokenize("Route 66 café"), vec!["route", "66", "café"]);
    }

    #[test]
    fn sentences_split_on_terminators_before_whitespace() {
        assert_eq!(
            split_sentences("One. Two! Three? Four"),
            vec!["One.", "Two!", "Three?", "Four"]
        );
    }

    #[test]
    fn sentences_ignore_inline_dots() {
        // the boundary requires whitespace or end-of-input after punctuation
        assert_eq!(split_sentences("v1.2 shipped. Done."), vec!["v1.2 shipped.", "Done."]);
    }

    #[test]
    fn sentences_handle_punctuation_runs() {
        assert_eq!(split_sentences("What?! Yes... maybe."), vec!["What?!", "Yes... maybe."]);
    }

    #[test]
    fn sentences_empty_input() {
        assert!(split_sentences("").is_empty());
        assert!(split_sentences("   ").is_empty());
    }

    #[test]
    fn cleaner_unwraps_piped_link() {
        assert_eq!(
            clean_wiki_markup("[[Moore, Oklahoma|Moore]] was hit"),
            "Moore was hit"
        );
    }

    #[test]
    fn cleaner_unwraps_plain_link_and_templates_and_refs() {
        assert_eq!(clean_wiki_markup("[[Tornado]] season"), "Tornado season");
        assert_eq!(clean_wiki_markup("a {{cite|x=1}} b"), "a  b");
        assert_eq!(clean_wiki_markup("a {{outer|{{inner}}}} b"), "a  b");
        assert_eq!(clean_wiki_markup("fact<ref name=x>src</ref> stands"), "fact stands");
        assert_eq!(clean_wiki_markup("fact<ref name=x/> stands"), "fact stands");
    }

    #[test]
    fn cleaner_handles_nested_links() {
        assert_eq!(clean_wiki_markup("[[a|[[b]] c]]"), "b c");
    }

    #[test]
    fn category_normalization() {
        assert_eq!(normalize_category(" Category: Natural disasters "), "Natural disasters");
        assert_eq!(normalize_category("Sports"), "Sports");
    }

    #[test]
    fn stopword_list_is_usable() {
        assert!(STOPWORDS.len() >= 100);
        assert!(is_stopword("the"));
        assert!(is_stopword("on"));
        assert!(!is_stopword("tornado"));
    }
}
