//! Deterministic preprocessing, tokenization, and extraction of the
//! 13-dimensional per-post feature vector, plus the train-fit standardizer.
//!
//! The pipeline per post is: `preprocess` (control chars to spaces,
//! lowercase, URL removal) then `tokenize` (whitespace split with edge
//! punctuation stripped), then [`extract_features`]. All three are pure
//! functions of their inputs; identical text always yields the identical
//! vector.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{Partition, Post, SplitAssignment};
use crate::error::{Error, Result};
use crate::masking::MASK_TOKEN;
use crate::sentiment::{self, PolarityLexicon, SentimentConfig, ValenceLexicon};

pub const FEATURE_COUNT: usize = 13;

/// Canonical feature order. Every matrix, model, and report in the toolkit
/// uses exactly this ordering.
pub const FEATURE_NAMES: [&str; FEATURE_COUNT] = [
    "sent_neg",
    "sent_neu",
    "sent_pos",
    "sent_compound",
    "polarity",
    "subjectivity",
    "first_person_count",
    "first_person_rate",
    "char_count",
    "word_count",
    "avg_word_length",
    "punct_density",
    "emoji_count",
];

/// First-person singular pronouns counted by the self-reference features.
pub const PRONOUNS: [&str; 5] = ["i", "me", "my", "mine", "myself"];

/// Punctuation marks counted by `punct_density`.
pub const PUNCT_MARKS: [char; 6] = ['.', ',', '!', '?', ';', ':'];

pub fn feature_index(name: &str) -> Option<usize> {
    FEATURE_NAMES.iter().position(|n| *n == name)
}

/// The 13 per-post features in canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub sent_neg: f64,
    pub sent_neu: f64,
    pub sent_pos: f64,
    pub sent_compound: f64,
    pub polarity: f64,
    pub subjectivity: f64,
    pub first_person_count: f64,
    pub first_person_rate: f64,
    pub char_count: f64,
    pub word_count: f64,
    pub avg_word_length: f64,
    pub punct_density: f64,
    pub emoji_count: f64,
}

impl FeatureVector {
    pub fn to_array(self) -> [f64; FEATURE_COUNT] {
        [
            self.sent_neg,
            self.sent_neu,
            self.sent_pos,
            self.sent_compound,
            self.polarity,
            self.subjectivity,
            self.first_person_count,
            self.first_person_rate,
            self.char_count,
            self.word_count,
            self.avg_word_length,
            self.punct_density,
            self.emoji_count,
        ]
    }

    pub fn from_array(v: [f64; FEATURE_COUNT]) -> Self {
        FeatureVector {
            sent_neg: v[0],
            sent_neu: v[1],
            sent_pos: v[2],
            sent_compound: v[3],
            polarity: v[4],
            subjectivity: v[5],
            first_person_count: v[6],
            first_person_rate: v[7],
            char_count: v[8],
            word_count: v[9],
            avg_word_length: v[10],
            punct_density: v[11],
            emoji_count: v[12],
        }
    }
}

/// Cleans raw text: control characters become spaces, the result is
/// lowercased, and URL runs (maximal non-space runs that start with
/// `scheme://` or `www.`) are removed. Punctuation, stopwords, and pronouns
/// are preserved; there is no stemming or lemmatization.
pub fn preprocess(text: &str) -> String {
    let despaced: String = text
        .chars()
        .map(|c| if c.is_control() { ' ' } else { c })
        .collect();
    let lowered = despaced.to_lowercase();
    let mut out = String::with_capacity(lowered.len());
    let mut first = true;
    for run in lowered.split(' ') {
        if !first {
            out.push(' ');
        }
        first = false;
        if !is_url_run(run) {
            out.push_str(run);
        }
    }
    out
}

fn is_url_run(run: &str) -> bool {
    if run.starts_with("www.") {
        return true;
    }
    if let Some(idx) = run.find("://") {
        let scheme = &run[..idx];
        return !scheme.is_empty()
            && scheme.chars().next().is_some_and(|c| c.is_ascii_alphabetic())
            && scheme
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || matches!(c, '+' | '-' | '.'));
    }
    false
}

/// Splits preprocessed text on whitespace and strips leading/trailing
/// non-alphanumeric characters from each token (interior characters such as
/// apostrophes are kept). Tokens that are empty after stripping are dropped.
/// The mask token passes through verbatim so it can never hit a lexicon or
/// the pronoun set.
pub fn tokenize(cleaned: &str) -> Vec<String> {
    let mask_lower = MASK_TOKEN.to_lowercase();
    cleaned
        .split_whitespace()
        .filter_map(|raw| {
            if raw.contains(mask_lower.as_str()) {
                return Some(mask_lower.clone());
            }
            let core = raw.trim_matches(|c: char| !c.is_alphanumeric());
            if core.is_empty() {
                None
            } else {
                Some(core.to_string())
            }
        })
        .collect()
}

const EMOJI_RANGES: [(u32, u32); 4] = [
    (0x1F600, 0x1F64F),
    (0x1F300, 0x1F5FF),
    (0x1F680, 0x1F6FF),
    (0x1F1E0, 0x1F1FF),
];

fn is_emoji(c: char) -> bool {
    let cp = c as u32;
    EMOJI_RANGES.iter().any(|&(lo, hi)| cp >= lo && cp <= hi)
}

/// Extracts the full feature vector from raw text. Inputs that tokenize to
/// nothing are an error; callers are expected to run the minimum-token filter
/// first.
pub fn extract_features(
    text: &str,
    valence: &ValenceLexicon,
    polarity: &PolarityLexicon,
    cfg: &SentimentConfig,
) -> Result<FeatureVector> {
    let cleaned = preprocess(text);
    let tokens = tokenize(&cleaned);
    if tokens.is_empty() {
        return Err(Error::Invalid(
            "cannot extract features from text with zero tokens".into(),
        ));
    }
    let scores = sentiment::score(&tokens, valence, polarity, cfg);
    let word_count = tokens.len() as f64;
    let first_person_count = tokens
        .iter()
        .filter(|t| PRONOUNS.contains(&t.as_str()))
        .count() as f64;
    let char_count = cleaned.chars().count() as f64;
    let punct = cleaned.chars().filter(|c| PUNCT_MARKS.contains(c)).count() as f64;
    let emoji_count = cleaned.chars().filter(|c| is_emoji(*c)).count() as f64;
    Ok(FeatureVector {
        sent_neg: scores.neg,
        sent_neu: scores.neu,
        sent_pos: scores.pos,
        sent_compound: scores.compound,
        polarity: scores.polarity,
        subjectivity: scores.subjectivity,
        first_person_count,
        first_person_rate: 100.0 * first_person_count / word_count,
        char_count,
        word_count,
        avg_word_length: char_count / word_count,
        punct_density: if char_count > 0.0 { punct / char_count } else { 0.0 },
        emoji_count,
    })
}

/// Per-feature mean and standard deviation fitted on the training partition
/// (population standard deviation, divisor n).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub feature_names: Vec<String>,
    pub mu: Vec<f64>,
    pub sigma: Vec<f64>,
    /// Which partition the statistics were computed on.
    pub fitted_on: String,
}

impl Standardizer {
    /// An identity transform (mu = 0, sigma = 1) over the given features.
    pub fn identity(feature_names: &[String]) -> Self {
        Standardizer {
            feature_names: feature_names.to_vec(),
            mu: vec![0.0; feature_names.len()],
            sigma: vec![1.0; feature_names.len()],
            fitted_on: "identity".into(),
        }
    }

    pub fn width(&self) -> usize {
        self.feature_names.len()
    }

    /// z_i = (x_i - mu_i) / sigma_i, with z_i = 0 where sigma_i = 0.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.width());
        x.iter()
            .zip(self.mu.iter().zip(&self.sigma))
            .map(|(&v, (&m, &s))| if s == 0.0 { 0.0 } else { (v - m) / s })
            .collect()
    }

    /// Inverse of [`Standardizer::apply`] for features with sigma > 0.
    pub fn invert(&self, z: &[f64]) -> Vec<f64> {
        debug_assert_eq!(z.len(), self.width());
        z.iter()
            .zip(self.mu.iter().zip(&self.sigma))
            .map(|(&v, (&m, &s))| v * s + m)
            .collect()
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)
            .map_err(|e| Error::Invalid(format!("serialize standardizer: {e}")))?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    /// Loads a standardizer, checking the feature-name array against the
    /// canonical ordering (subsets must preserve canonical order).
    pub fn read_json(path: &Path) -> Result<Standardizer> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let s: Standardizer = serde_json::from_str(&text)
            .map_err(|e| Error::parse(path.display().to_string(), 1, e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.mu.len() != self.feature_names.len() || self.sigma.len() != self.feature_names.len() {
            return Err(Error::Invalid(format!(
                "standardizer arrays disagree: {} names, {} mu, {} sigma",
                self.feature_names.len(),
                self.mu.len(),
                self.sigma.len()
            )));
        }
        if self.sigma.iter().any(|s| *s < 0.0 || !s.is_finite()) {
            return Err(Error::Invalid("standardizer sigma must be finite and >= 0".into()));
        }
        let mut last = None;
        for name in &self.feature_names {
            let idx = feature_index(name)
                .ok_or_else(|| Error::Invalid(format!("unknown feature name {name:?}")))?;
            if let Some(prev) = last {
                if idx <= prev {
                    return Err(Error::Invalid(
                        "standardizer feature names are not in canonical order".into(),
                    ));
                }
            }
            last = Some(idx);
        }
        Ok(())
    }
}

/// Fits per-feature population statistics. `rows` must come from the
/// training partition only; the partition tag is recorded for audit.
pub fn fit_standardizer(
    rows: &[Vec<f64>],
    feature_names: &[String],
    fitted_on: &str,
) -> Result<Standardizer> {
    if rows.len() < 2 {
        return Err(Error::Insufficient(format!(
            "standardizer needs at least 2 rows, got {}",
            rows.len()
        )));
    }
    let width = feature_names.len();
    let n = rows.len() as f64;
    let mut mu = vec![0.0; width];
    for row in rows {
        debug_assert_eq!(row.len(), width);
        for (m, v) in mu.iter_mut().zip(row) {
            *m += v;
        }
    }
    for m in &mut mu {
        *m /= n;
    }
    let mut var = vec![0.0; width];
    for row in rows {
        for ((s, v), m) in var.iter_mut().zip(row).zip(&mu) {
            let d = v - m;
            *s += d * d;
        }
    }
    let sigma = var.into_iter().map(|s| (s / n).sqrt()).collect();
    Ok(Standardizer {
        feature_names: feature_names.to_vec(),
        mu,
        sigma,
        fitted_on: fitted_on.to_string(),
    })
}

/// One post's extracted features together with the metadata the experiment
/// runners need.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PostFeatures {
    pub id: String,
    pub author: String,
    pub timestamp: i64,
    pub label: u8,
    pub partition: Partition,
    pub values: [f64; FEATURE_COUNT],
}

/// Extracts features for every post, in input order, using up to `threads`
/// worker threads (0 = available parallelism). Posts with unassigned authors
/// are an error.
pub fn extract_all(
    posts: &[Post],
    assignment: &SplitAssignment,
    valence: &ValenceLexicon,
    polarity: &PolarityLexicon,
    cfg: &SentimentConfig,
    threads: usize,
) -> Result<Vec<PostFeatures>> {
    let threads = if threads == 0 {
        std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
    } else {
        threads
    };
    let partitions: Vec<Partition> = posts
        .iter()
        .map(|p| {
            assignment.partition_of(p).ok_or_else(|| {
                Error::Invalid(format!(
                    "post {:?} has unassigned author (run split first)",
                    p.id
                ))
            })
        })
        .collect::<Result<_>>()?;
    let chunk = posts.len().div_ceil(threads.max(1)).max(1);
    let mut results: Vec<Result<Vec<FeatureVector>>> = Vec::new();
    std::thread::scope(|scope| {
        let handles: Vec<_> = posts
            .chunks(chunk)
            .map(|slice| {
                scope.spawn(move || {
                    slice
                        .iter()
                        .map(|p| extract_features(&p.text, valence, polarity, cfg))
                        .collect::<Result<Vec<_>>>()
                })
            })
            .collect();
        results = handles.into_iter().map(|h| h.join().expect("worker panicked")).collect();
    });
    let mut vectors = Vec::with_capacity(posts.len());
    for r in results {
        vectors.extend(r?);
    }
    Ok(posts
        .iter()
        .zip(partitions)
        .zip(vectors)
        .map(|((post, partition), fv)| PostFeatures {
            id: post.id.clone(),
            author: post.author.clone(),
            timestamp: post.timestamp,
            label: post.label,
            partition,
            values: fv.to_array(),
        })
        .collect())
}

/// Writes the feature matrix CSV: id, label, partition, then the 13
/// canonical feature columns. Author and timestamp are not part of the file
/// schema; user-level experiments rejoin them from the corpus by post id.
pub fn write_matrix_csv(rows: &[PostFeatures], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)
        .map_err(|e| Error::Invalid(format!("{}: {e}", path.display())))?;
    let mut header = vec!["id", "label", "partition"];
    header.extend(FEATURE_NAMES);
    w.write_record(&header)
        .map_err(|e| Error::Invalid(format!("{}: {e}", path.display())))?;
    for row in rows {
        let mut rec = vec![
            row.id.clone(),
            row.label.to_string(),
            row.partition.as_str().to_string(),
        ];
        rec.extend(row.values.iter().map(|v| format_float(*v)));
        w.write_record(&rec)
            .map_err(|e| Error::Invalid(format!("{}: {e}", path.display())))?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Shortest round-trip float formatting (matches serde_json's output).
pub fn format_float(v: f64) -> String {
    let mut buf = ryu_like(v);
    if buf == "-0" {
        buf = "0".into();
    }
    buf
}

fn ryu_like(v: f64) -> String {
    // `{}` on f64 produces the shortest representation that round-trips.
    format!("{v}")
}

/// Reads a feature matrix CSV produced by [`write_matrix_csv`]. The rows
/// come back with empty author and zero timestamp; callers that need user
/// structure (the early-slice experiment) rejoin those from the corpus.
pub fn read_matrix_csv(path: &Path) -> Result<Vec<PostFeatures>> {
    let origin = path.display().to_string();
    let mut r = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| Error::Invalid(format!("{origin}: {e}")))?;
    let headers = r
        .headers()
        .map_err(|e| Error::parse(&origin, 1, e.to_string()))?
        .clone();
    let expected: Vec<&str> = {
        let mut h = vec!["id", "label", "partition"];
        h.extend(FEATURE_NAMES);
        h
    };
    let found: Vec<&str> = headers.iter().collect();
    if found != expected {
        return Err(Error::parse(
            &origin,
            1,
            format!("unexpected header {found:?}"),
        ));
    }
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| Error::Invalid(format!("{origin}: {e}")))?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        let label: u8 = rec[1]
            .parse()
            .map_err(|_| Error::parse(&origin, line, format!("bad label {:?}", &rec[1])))?;
        if label > 1 {
            return Err(Error::parse(&origin, line, format!("label must be 0 or 1, found {label}")));
        }
        let partition = Partition::parse(&rec[2])
            .map_err(|e| Error::parse(&origin, line, e.to_string()))?;
        let mut values = [0.0; FEATURE_COUNT];
        for (j, v) in values.iter_mut().enumerate() {
            *v = rec[3 + j]
                .parse::<f64>()
                .map_err(|_| Error::parse(&origin, line, format!("bad number {:?}", &rec[3 + j])))?;
        }
        rows.push(PostFeatures {
            id: rec[0].to_string(),
            label,
            partition,
            author: String::new(),
            timestamp: 0,
            values,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn demo() -> (ValenceLexicon, PolarityLexicon, SentimentConfig) {
        (
            ValenceLexicon::demo(),
            PolarityLexicon::demo(),
            SentimentConfig::default(),
        )
    }

    #[test]
    fn preprocess_lowercases() {
        assert_eq!(preprocess("I AM Fine"), "i am fine");
    }

    #[test]
    fn preprocess_strips_urls() {
        assert_eq!(preprocess("see https://x.y now"), "see  now");
        assert_eq!(preprocess("go to www.example.com please"), "go to  please");
        assert_eq!(preprocess("ftp://host/file x"), " x");
    }

    #[test]
    fn preprocess_maps_control_chars() {
        assert_eq!(preprocess("a\tb\nc"), "a b c");
    }

    #[test]
    fn preprocess_without_urls_only_changes_case() {
        let text = "Hello, World! it's fine.";
        assert_eq!(preprocess(text), text.to_lowercase());
    }

    #[test]
    fn tokenize_strips_edge_punctuation() {
        assert_eq!(tokenize("ok. yes," ), vec!["ok", "yes"]);
        assert_eq!(tokenize("don't stop"), vec!["don't", "stop"]);
        assert_eq!(tokenize("... !!"), Vec::<String>::new());
        assert_eq!(tokenize("(hello)"), vec!["hello"]);
    }

    #[test]
    fn tokenize_keeps_mask_token_opaque() {
        let cleaned = preprocess("my [MASK] is bad");
        assert_eq!(tokenize(&cleaned), vec!["my", "[mask]", "is", "bad"]);
    }

    #[test]
    fn pronoun_features_match_hand_count() {
        let (v, p, c) = demo();
        let fv = extract_features("i told myself i can", &v, &p, &c).unwrap();
        assert_eq!(fv.first_person_count, 3.0);
        assert_eq!(fv.first_person_rate, 60.0);
        assert_eq!(fv.word_count, 5.0);
    }

    #[test]
    fn punct_density_counts_marks_over_chars() {
        let (v, p, c) = demo();
        let fv = extract_features("ok.", &v, &p, &c).unwrap();
        assert!((fv.punct_density - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(fv.char_count, 3.0);
    }

    #[test]
    fn emoji_count_uses_unicode_ranges() {
        let (v, p, c) = demo();
        let fv = extract_features("hi \u{1F600}\u{1F600}", &v, &p, &c).unwrap();
        assert_eq!(fv.emoji_count, 2.0);
        // flags block and transport block count too
        let fv = extract_features("go \u{1F1E6} \u{1F680}", &v, &p, &c).unwrap();
        assert_eq!(fv.emoji_count, 2.0);
        // plain text has none
        let fv = extract_features("no emoji here", &v, &p, &c).unwrap();
        assert_eq!(fv.emoji_count, 0.0);
    }

    #[test]
    fn zero_token_input_is_an_error() {
        let (v, p, c) = demo();
        assert!(extract_features("...", &v, &p, &c).is_err());
        assert!(extract_features("", &v, &p, &c).is_err());
    }

    #[test]
    fn extraction_is_deterministic() {
        let (v, p, c) = demo();
        let text = "I was really happy, then very sad. Not good!";
        let a = extract_features(text, &v, &p, &c).unwrap();
        let b = extract_features(text, &v, &p, &c).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn avg_word_length_times_words_is_chars() {
        let (v, p, c) = demo();
        let fv = extract_features("some words of varying length here now", &v, &p, &c).unwrap();
        assert_eq!(fv.avg_word_length * fv.word_count, fv.char_count);
    }

    #[test]
    fn standardizer_centers_and_scales() {
        let rows = vec![vec![1.0, 5.0], vec![3.0, 5.0], vec![5.0, 5.0]];
        let names = vec!["char_count".to_string(), "word_count".to_string()];
        let s = fit_standardizer(&rows, &names, "train").unwrap();
        assert_eq!(s.mu, vec![3.0, 5.0]);
        // population sd of {1,3,5} = sqrt(8/3)
        assert!((s.sigma[0] - (8.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert_eq!(s.sigma[1], 0.0);
        let z = s.apply(&[3.0, 5.0]);
        assert_eq!(z, vec![0.0, 0.0]);
        // constant feature maps to 0 everywhere
        let z = s.apply(&[1.0, 7.0]);
        assert_eq!(z[1], 0.0);
        // standardized training data has mean 0, sd 1
        let zs: Vec<Vec<f64>> = rows.iter().map(|r| s.apply(r)).collect();
        let mean0: f64 = zs.iter().map(|z| z[0]).sum::<f64>() / 3.0;
        let var0: f64 = zs.iter().map(|z| z[0] * z[0]).sum::<f64>() / 3.0;
        assert!(mean0.abs() < 1e-9);
        assert!((var0 - 1.0).abs() < 1e-6);
    }

    #[test]
    fn standardizer_roundtrips_for_nonzero_sigma() {
        let rows = vec![vec![1.0], vec![2.0], vec![4.0]];
        let names = vec!["char_count".to_string()];
        let s = fit_standardizer(&rows, &names, "train").unwrap();
        for x in [0.5, 1.7, 9.9] {
            let z = s.apply(&[x]);
            let back = s.invert(&z);
            assert!((back[0] - x).abs() < 1e-9);
        }
    }

    #[test]
    fn standardizer_needs_two_rows() {
        let names = vec!["char_count".to_string()];
        assert!(fit_standardizer(&[vec![1.0]], &names, "train").is_err());
    }

    #[test]
    fn standardizer_validation_enforces_canonical_order() {
        let s = Standardizer {
            feature_names: vec!["word_count".into(), "char_count".into()],
            mu: vec![0.0, 0.0],
            sigma: vec![1.0, 1.0],
            fitted_on: "train".into(),
        };
        assert!(s.validate().is_err());
    }
}
