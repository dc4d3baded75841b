//! Keyword masking: replaces listed vocabulary with a neutral token so
//! models can be trained and evaluated without direct keyword signals.
//!
//! Three match kinds, applied in this order: community patterns (substring,
//! e.g. `r/anxiety`), multi-word phrases (whole-token, longest first), then
//! single words (whole-token). Matching is case-insensitive; a "token" for
//! matching purposes is a maximal non-whitespace run with leading/trailing
//! non-alphanumeric characters ignored, so `anxiety,` matches `anxiety` but
//! `anxious-free` does not match `anxious`.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The neutral replacement token. Excluded from matching, so masking is
/// idempotent; it also passes opaquely through the tokenizer so it can never
/// score in a lexicon or count as a pronoun.
pub const MASK_TOKEN: &str = "[MASK]";

/// Parsed keyword list: single words, multi-word phrases, and community
/// substring patterns, all lowercase.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeywordList {
    pub words: BTreeSet<String>,
    /// Token sequences, kept sorted longest-first.
    pub phrases: Vec<Vec<String>>,
    pub patterns: Vec<String>,
}

impl KeywordList {
    /// An empty list; masking with it is the identity. The file loader
    /// rejects empty lists, but an empty value is legal for experiment
    /// plumbing (for example, running the masking study as a no-op control).
    pub fn empty() -> Self {
        KeywordList::default()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty() && self.phrases.is_empty() && self.patterns.is_empty()
    }

    pub fn len(&self) -> usize {
        self.words.len() + self.phrases.len() + self.patterns.len()
    }

    /// Parses one entry per line; `#` starts a comment. Lines containing
    /// whitespace are phrases, lines containing `/` are community patterns,
    /// anything else is a single word.
    pub fn parse(text: &str) -> Result<Self> {
        let mut list = KeywordList::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let entry = line.to_lowercase();
            if entry.split_whitespace().count() > 1 {
                let phrase: Vec<String> = entry.split_whitespace().map(str::to_string).collect();
                if phrase.len() < 2 {
                    return Err(Error::parse("keyword list", i + 1, "phrase needs >= 2 words"));
                }
                list.phrases.push(phrase);
            } else if entry.contains('/') {
                list.patterns.push(entry);
            } else {
                list.words.insert(entry);
            }
        }
        list.phrases.sort_by(|a, b| b.len().cmp(&a.len()).then(a.cmp(b)));
        Ok(list)
    }

    /// The bundled default list: disorder and symptom terms, SSRIs,
    /// benzodiazepines, other medications, and community identifiers.
    pub fn default_builtin() -> Self {
        KeywordList::parse(include_str!("../data/keywords_default.txt"))
            .expect("bundled keyword list is valid")
    }
}

/// Loads a keyword file, rejecting files that define no entries.
pub fn load_keywords(path: &Path) -> Result<KeywordList> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let list = KeywordList::parse(&text)?;
    if list.is_empty() {
        return Err(Error::Invalid(format!(
            "keyword file {} defines no entries",
            path.display()
        )));
    }
    Ok(list)
}

/// Byte range of one whitespace token's alphanumeric core.
#[derive(Debug, Clone, Copy)]
struct TokenSpan {
    core_start: usize,
    core_end: usize,
    is_mask: bool,
}

fn token_spans(text: &str, mask_lower: &str) -> Vec<(TokenSpan, String)> {
    let mut spans = Vec::new();
    let bytes = text.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        // skip whitespace
        let rest = &text[i..];
        let mut chars = rest.char_indices();
        let mut start = None;
        for (off, c) in chars.by_ref() {
            if !c.is_whitespace() {
                start = Some(i + off);
                break;
            }
        }
        let Some(tok_start) = start else { break };
        let after = &text[tok_start..];
        let tok_len = after
            .char_indices()
            .find(|(_, c)| c.is_whitespace())
            .map(|(off, _)| off)
            .unwrap_or(after.len());
        let tok_end = tok_start + tok_len;
        let token = &text[tok_start..tok_end];
        let token_lower = token.to_lowercase();
        let is_mask = token_lower.contains(mask_lower);
        // trim non-alphanumeric edges to find the core
        let mut core_start = tok_start;
        let mut core_end = tok_end;
        for (off, c) in token.char_indices() {
            if c.is_alphanumeric() {
                core_start = tok_start + off;
                break;
            }
            core_start = tok_end;
        }
        if core_start < tok_end {
            for (off, c) in token.char_indices().rev() {
                if c.is_alphanumeric() {
                    core_end = tok_start + off + c.len_utf8();
                    break;
                }
            }
        } else {
            core_end = core_start;
        }
        let core_lower = text[core_start..core_end].to_lowercase();
        spans.push((
            TokenSpan {
                core_start,
                core_end,
                is_mask,
            },
            core_lower,
        ));
        i = tok_end;
    }
    spans
}

#[derive(Debug, Clone, Copy)]
struct Edit {
    start: usize,
    end: usize,
}

fn apply_edits(text: &str, mut edits: Vec<Edit>, token: &str) -> String {
    if edits.is_empty() {
        return text.to_string();
    }
    edits.sort_by_key(|e| e.start);
    let mut out = String::with_capacity(text.len());
    let mut cursor = 0;
    for edit in edits {
        out.push_str(&text[cursor..edit.start]);
        out.push_str(token);
        cursor = edit.end;
    }
    out.push_str(&text[cursor..]);
    out
}

/// Occurrences of the literal mask token; matches overlapping these are
/// skipped so masking stays idempotent.
fn mask_occurrences(text: &str, token: &str) -> Vec<(usize, usize)> {
    text.match_indices(token)
        .map(|(i, m)| (i, i + m.len()))
        .collect()
}

fn overlaps(ranges: &[(usize, usize)], start: usize, end: usize) -> bool {
    ranges.iter().any(|&(a, b)| start < b && end > a)
}

fn replace_patterns(text: &str, patterns: &[String], token: &str) -> String {
    if patterns.is_empty() {
        return text.to_string();
    }
    let guard = mask_occurrences(text, token);
    // Lowercased copy plus a byte-offset map back into the original; the map
    // has one entry per lowercase byte (lowercasing can change byte length).
    let mut lower = String::with_capacity(text.len());
    let mut back: Vec<usize> = Vec::with_capacity(text.len() + 1);
    for (orig, c) in text.char_indices() {
        for lc in c.to_lowercase() {
            for _ in 0..lc.len_utf8() {
                back.push(orig);
            }
            lower.push(lc);
        }
    }
    back.push(text.len());
    let mut edits: Vec<Edit> = Vec::new();
    for pat in patterns {
        if pat.is_empty() {
            continue;
        }
        for (lo_start, m) in lower.match_indices(pat.as_str()) {
            let lo_end = lo_start + m.len();
            // accept only matches aligned to original char boundaries
            let start_ok = lo_start == 0 || back[lo_start] != back[lo_start - 1];
            let end_ok = lo_end == lower.len() || back[lo_end] != back[lo_end - 1];
            if !start_ok || !end_ok {
                continue;
            }
            let start = back[lo_start];
            let end = back[lo_end];
            if start >= end {
                continue;
            }
            if !overlaps(&guard, start, end) && !edits.iter().any(|e| start < e.end && end > e.start) {
                edits.push(Edit { start, end });
            }
        }
    }
    apply_edits(text, edits, token)
}

fn replace_phrases_and_words(text: &str, keywords: &KeywordList, token: &str) -> String {
    if keywords.phrases.is_empty() && keywords.words.is_empty() {
        return text.to_string();
    }
    let guard = mask_occurrences(text, token);
    let mask_lower = token.to_lowercase();
    let spans = token_spans(text, &mask_lower);
    let mut consumed = vec![false; spans.len()];
    let mut edits: Vec<Edit> = Vec::new();
    // phrases first, longest first, left to right
    for (i, _) in spans.iter().enumerate() {
        if consumed[i] {
            continue;
        }
        for phrase in &keywords.phrases {
            let n = phrase.len();
            if i + n > spans.len() {
                continue;
            }
            let window = &spans[i..i + n];
            if window.iter().enumerate().all(|(j, (span, core))| {
                !consumed[i + j]
                    && !span.is_mask
                    && span.core_start < span.core_end
                    && core == &phrase[j]
                    && !overlaps(&guard, span.core_start, span.core_end)
            }) {
                edits.push(Edit {
                    start: window[0].0.core_start,
                    end: window[n - 1].0.core_end,
                });
                for j in 0..n {
                    consumed[i + j] = true;
                }
                break;
            }
        }
    }
    // single words
    for (i, (span, core)) in spans.iter().enumerate() {
        if consumed[i] || span.is_mask || span.core_start >= span.core_end {
            continue;
        }
        if keywords.words.contains(core) && !overlaps(&guard, span.core_start, span.core_end) {
            edits.push(Edit {
                start: span.core_start,
                end: span.core_end,
            });
            consumed[i] = true;
        }
    }
    apply_edits(text, edits, token)
}

/// Replaces every keyword occurrence with `token`. Applied identically to
/// training and evaluation text. Idempotent: the mask token itself never
/// matches.
pub fn mask_text(text: &str, keywords: &KeywordList, token: &str) -> String {
    if keywords.is_empty() {
        return text.to_string();
    }
    let after_patterns = replace_patterns(text, &keywords.patterns, token);
    replace_phrases_and_words(&after_patterns, keywords, token)
}

/// Whether the text contains at least one keyword occurrence, using exactly
/// the matching rules of [`mask_text`].
pub fn contains_keyword(text: &str, keywords: &KeywordList) -> bool {
    if keywords.is_empty() {
        return false;
    }
    mask_text(text, keywords, MASK_TOKEN) != text
}
