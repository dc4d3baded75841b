//! Corpus loading, filtering, author-disjoint splitting, and user grouping.
//!
//! A corpus is a flat list of [`Post`]s. Splits are always computed at the
//! author level so that no author's posts can leak across partitions. Posts
//! whose author id is missing are each treated as their own singleton
//! pseudo-author for splitting purposes (see [`author_key`]).

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::io::{BufRead, BufReader};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features;

/// One authored text with label and metadata. The atomic corpus unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Post {
    pub id: String,
    /// Anonymized author id. Empty when the source data carries none.
    #[serde(default)]
    pub author: String,
    /// Seconds since the epoch.
    pub timestamp: i64,
    pub text: String,
    /// 0 = control, 1 = positive class.
    pub label: u8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
}

/// Splitting key for a post: the author id, or a per-post pseudo-author when
/// the author id is absent. Singleton pseudo-authors keep authorless posts
/// from collapsing into one giant "author" while preserving disjointness.
pub fn author_key(post: &Post) -> String {
    if post.author.is_empty() {
        format!("post:{}", post.id)
    } else {
        post.author.clone()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Partition {
    Train,
    Validation,
    Test,
}

impl Partition {
    pub const ALL: [Partition; 3] = [Partition::Train, Partition::Validation, Partition::Test];

    pub fn as_str(&self) -> &'static str {
        match self {
            Partition::Train => "train",
            Partition::Validation => "validation",
            Partition::Test => "test",
        }
    }

    pub fn parse(s: &str) -> Result<Partition> {
        match s {
            "train" => Ok(Partition::Train),
            "validation" => Ok(Partition::Validation),
            "test" => Ok(Partition::Test),
            other => Err(Error::Invalid(format!("unknown partition {other:?}"))),
        }
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Author -> partition map with pairwise author-disjoint partitions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitAssignment {
    map: BTreeMap<String, Partition>,
}

impl SplitAssignment {
    pub fn partition_of(&self, post: &Post) -> Option<Partition> {
        self.map.get(&author_key(post)).copied()
    }

    pub fn partition_of_author(&self, author: &str) -> Option<Partition> {
        self.map.get(author).copied()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn authors_in(&self, partition: Partition) -> BTreeSet<&str> {
        self.map
            .iter()
            .filter(|(_, p)| **p == partition)
            .map(|(a, _)| a.as_str())
            .collect()
    }

    /// Writes the split manifest as `author,partition` CSV.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
        w.write_record(["author", "partition"])
            .map_err(|e| csv_err(path, e))?;
        for (author, partition) in &self.map {
            w.write_record([author.as_str(), partition.as_str()])
                .map_err(|e| csv_err(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<SplitAssignment> {
        let mut r = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_path(path)
            .map_err(|e| csv_err(path, e))?;
        let mut map = BTreeMap::new();
        for (i, rec) in r.records().enumerate() {
            let rec = rec.map_err(|e| csv_err(path, e))?;
            if rec.len() != 2 {
                return Err(Error::parse(
                    path.display().to_string(),
                    i + 2,
                    format!("expected 2 columns, found {}", rec.len()),
                ));
            }
            let partition = Partition::parse(&rec[1]).map_err(|e| {
                Error::parse(path.display().to_string(), i + 2, e.to_string())
            })?;
            if map.insert(rec[0].to_string(), partition).is_some() {
                return Err(Error::parse(
                    path.display().to_string(),
                    i + 2,
                    format!("duplicate author {:?}", &rec[0]),
                ));
            }
        }
        Ok(SplitAssignment { map })
    }
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    match e.position() {
        Some(pos) => Error::parse(path.display().to_string(), pos.line() as usize, e.to_string()),
        None => Error::Invalid(format!("{}: {e}", path.display())),
    }
}

/// A user's posts in ascending time order. `synthetic` marks pseudo-users
/// built by chunking authorless control posts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserGroup {
    pub user: String,
    pub label: u8,
    pub synthetic: bool,
    pub posts: Vec<Post>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusFormat {
    Jsonl,
    Csv,
}

impl CorpusFormat {
    pub fn parse(s: &str) -> Result<CorpusFormat> {
        match s {
            "jsonl" => Ok(CorpusFormat::Jsonl),
            "csv" => Ok(CorpusFormat::Csv),
            other => Err(Error::Invalid(format!("unknown corpus format {other:?}"))),
        }
    }
}

#[derive(Debug, Deserialize)]
struct RawPost {
    id: String,
    #[serde(default)]
    author: Option<String>,
    timestamp: i64,
    text: String,
    label: i64,
    #[serde(default)]
    source: Option<String>,
}

impl RawPost {
    fn validate(self, origin: &str, line: usize) -> Result<Post> {
        if self.id.is_empty() {
            return Err(Error::parse(origin, line, "empty id"));
        }
        if !(self.label == 0 || self.label == 1) {
            return Err(Error::parse(
                origin,
                line,
                format!("label must be 0 or 1, found {}", self.label),
            ));
        }
        Ok(Post {
            id: self.id,
            author: self.author.unwrap_or_default(),
            timestamp: self.timestamp,
            text: self.text,
            label: self.label as u8,
            source: self.source,
        })
    }
}

/// Loads a corpus file, rejecting malformed records with the offending line
/// number and refusing duplicate post ids.
pub fn load_corpus(path: &Path, format: CorpusFormat) -> Result<Vec<Post>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let origin = path.display().to_string();
    match format {
        CorpusFormat::Jsonl => parse_jsonl(BufReader::new(file), &origin),
        CorpusFormat::Csv => parse_csv(BufReader::new(file), &origin),
    }
}

/// JSONL parser: one object per line with keys id, author, timestamp, text,
/// label, source (author and source optional). Blank lines are skipped.
pub fn parse_jsonl(reader: impl BufRead, origin: &str) -> Result<Vec<Post>> {
    let mut posts = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::parse(origin, i + 1, e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawPost = serde_json::from_str(&line)
            .map_err(|e| Error::parse(origin, i + 1, e.to_string()))?;
        let post = raw.validate(origin, i + 1)?;
        if !seen.insert(post.id.clone()) {
            return Err(Error::parse(
                origin,
                i + 1,
                format!("duplicate post id {:?}", post.id),
            ));
        }
        posts.push(post);
    }
    Ok(posts)
}

/// CSV parser: header row with columns id, author, timestamp, text, label,
/// source; RFC 4180 quoting; UTF-8.
pub fn parse_csv(reader: impl std::io::Read, origin: &str) -> Result<Vec<Post>> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = r
        .headers()
        .map_err(|e| Error::parse(origin, 1, e.to_string()))?
        .clone();
    let mut posts = Vec::new();
    let mut seen = HashSet::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| match e.position() {
            Some(pos) => Error::parse(origin, pos.line() as usize, e.to_string()),
            None => Error::Invalid(format!("{origin}: {e}")),
        })?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        let raw: RawPost = rec
            .deserialize(Some(&headers))
            .map_err(|e| Error::parse(origin, line, e.to_string()))?;
        let post = raw.validate(origin, line)?;
        if !seen.insert(post.id.clone()) {
            return Err(Error::parse(
                origin,
                line,
                format!("duplicate post id {:?}", post.id),
            ));
        }
        posts.push(post);
    }
    Ok(posts)
}

/// Writes a corpus in the canonical JSONL layout.
pub fn write_jsonl(posts: &[Post], path: &Path) -> Result<()> {
    use std::io::Write;
    let mut out = std::io::BufWriter::new(
        std::fs::File::create(path).map_err(|e| Error::io(path, e))?,
    );
    for post in posts {
        let line = serde_json::to_string(post)
            .map_err(|e| Error::Invalid(format!("serialize post {:?}: {e}", post.id)))?;
        writeln!(out, "{line}").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterReport {
    pub input: usize,
    pub kept: usize,
    pub removed: usize,
    pub removal_fraction: f64,
}

/// Retains posts whose tokenized length is at least `min_tokens`.
pub fn filter_posts(posts: &[Post], min_tokens: usize) -> Result<(Vec<Post>, FilterReport)> {
    if min_tokens < 1 {
        return Err(Error::Invalid("min_tokens must be >= 1".into()));
    }
    let kept: Vec<Post> = posts
        .iter()
        .filter(|p| features::tokenize(&features::preprocess(&p.text)).len() >= min_tokens)
        .cloned()
        .collect();
    let report = FilterReport {
        input: posts.len(),
        kept: kept.len(),
        removed: posts.len() - kept.len(),
        removal_fraction: if posts.is_empty() {
            0.0
        } else {
            (posts.len() - kept.len()) as f64 / posts.len() as f64
        },
    };
    Ok((kept, report))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QualityFilterOptions {
    /// Drop posts whose alphabetic characters are mostly non-ASCII
    /// (ratio > 0.5). A rough stand-in for a language-confidence filter.
    pub drop_non_ascii: bool,
    /// Drop exact duplicate texts by the same author, keeping the earliest
    /// by (timestamp, id). A rough stand-in for an automation filter.
    pub drop_duplicates: bool,
}

impl Default for QualityFilterOptions {
    fn default() -> Self {
        QualityFilterOptions {
            drop_non_ascii: true,
            drop_duplicates: true,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct QualityFilterCounts {
    pub removed_non_ascii: usize,
    pub removed_duplicate: usize,
}

/// Applies the configurable quality heuristics ahead of the token-length
/// filter. Duplicates are detected on exact (author, text) equality.
pub fn apply_quality_filters(
    posts: &[Post],
    opts: QualityFilterOptions,
) -> (Vec<Post>, QualityFilterCounts) {
    let mut counts = QualityFilterCounts::default();
    let mut ordered: Vec<&Post> = posts.iter().collect();
    ordered.sort_by(|a, b| (a.timestamp, &a.id).cmp(&(b.timestamp, &b.id)));
    let mut seen_texts: HashSet<(String, String)> = HashSet::new();
    let mut drop_ids: HashSet<&str> = HashSet::new();
    for post in &ordered {
        if opts.drop_non_ascii && non_ascii_letter_ratio(&post.text) > 0.5 {
            counts.removed_non_ascii += 1;
            drop_ids.insert(&post.id);
            continue;
        }
        if opts.drop_duplicates
            && !post.author.is_empty()
            && !seen_texts.insert((post.author.clone(), post.text.clone()))
        {
            counts.removed_duplicate += 1;
            drop_ids.insert(&post.id);
        }
    }
    let kept = posts
        .iter()
        .filter(|p| !drop_ids.contains(p.id.as_str()))
        .cloned()
        .collect();
    (kept, counts)
}

fn non_ascii_letter_ratio(text: &str) -> f64 {
    let mut letters = 0usize;
    let mut non_ascii = 0usize;
    for c in text.chars() {
        if c.is_alphabetic() {
            letters += 1;
            if !c.is_ascii() {
                non_ascii += 1;
            }
        }
    }
    if letters == 0 {
        0.0
    } else {
        non_ascii as f64 / letters as f64
    }
}

/// Deterministic author-level split. Authors (see [`author_key`]) are sorted,
/// shuffled with the seeded generator, then allocated by floor of the
/// cumulative ratio boundaries: train takes floor(r_train * n), test takes
/// floor(r_test * n), and validation absorbs the rounding slack.
pub fn author_disjoint_split(
    posts: &[Post],
    ratios: (f64, f64, f64),
    seed: u64,
) -> Result<SplitAssignment> {
    let (r_train, r_val, r_test) = ratios;
    let sum = r_train + r_val + r_test;
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::Invalid(format!("split ratios sum to {sum}, not 1")));
    }
    if r_train < 0.0 || r_val < 0.0 || r_test < 0.0 {
        return Err(Error::Invalid("split ratios must be non-negative".into()));
    }
    let authors: BTreeSet<String> = posts.iter().map(author_key).collect();
    let mut authors: Vec<String> = authors.into_iter().collect();
    if authors.len() < 3 {
        return Err(Error::Insufficient(format!(
            "need at least 3 authors to split, found {}",
            authors.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Fisher-Yates over the sorted author list.
    for i in (1..authors.len()).rev() {
        let j = rng.gen_range(0..=i);
        authors.swap(i, j);
    }
    let n = authors.len();
    let n_train = (r_train * n as f64).floor() as usize;
    let n_test = (r_test * n as f64).floor() as usize;
    let mut map = BTreeMap::new();
    for (i, author) in authors.into_iter().enumerate() {
        let partition = if i < n_train {
            Partition::Train
        } else if i < n - n_test {
            Partition::Validation
        } else {
            Partition::Test
        };
        map.insert(author, partition);
    }
    Ok(SplitAssignment { map })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionBalance {
    pub partition: Partition,
    pub posts: usize,
    pub positive: usize,
    pub positive_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalanceReport {
    pub partitions: Vec<PartitionBalance>,
    pub max_gap: f64,
    pub threshold: f64,
    pub flagged: bool,
}

/// Reports per-partition positive-class fractions and the maximum pairwise
/// gap; the report is flagged when the gap exceeds `threshold`.
pub fn verify_balance(
    posts: &[Post],
    assignment: &SplitAssignment,
    threshold: f64,
) -> Result<BalanceReport> {
    let mut counts: BTreeMap<Partition, (usize, usize)> = BTreeMap::new();
    for post in posts {
        let partition = assignment.partition_of(post).ok_or_else(|| {
            Error::Invalid(format!(
                "post {:?} has unassigned author {:?}",
                post.id,
                author_key(post)
            ))
        })?;
        let entry = counts.entry(partition).or_insert((0, 0));
        entry.0 += 1;
        if post.label == 1 {
            entry.1 += 1;
        }
    }
    let partitions: Vec<PartitionBalance> = Partition::ALL
        .iter()
        .filter_map(|p| {
            counts.get(p).map(|&(n, pos)| PartitionBalance {
                partition: *p,
                posts: n,
                positive: pos,
                positive_fraction: pos as f64 / n as f64,
            })
        })
        .collect();
    let mut max_gap = 0.0f64;
    for (i, a) in partitions.iter().enumerate() {
        for b in &partitions[i + 1..] {
            max_gap = max_gap.max((a.positive_fraction - b.positive_fraction).abs());
        }
    }
    Ok(BalanceReport {
        partitions,
        max_gap,
        threshold,
        flagged: max_gap > threshold,
    })
}

/// Groups posts into one [`UserGroup`] per distinct (author, label), posts
/// sorted ascending by timestamp with ties broken by post id. Posts without
/// an author id each form their own singleton group.
pub fn group_users(posts: &[Post]) -> Vec<UserGroup> {
    let mut grouped: BTreeMap<(String, u8), Vec<Post>> = BTreeMap::new();
    for post in posts {
        grouped
            .entry((author_key(post), post.label))
            .or_default()
            .push(post.clone());
    }
    grouped
        .into_iter()
        .map(|((user, label), mut posts)| {
            posts.sort_by(|a, b| (a.timestamp, &a.id).cmp(&(b.timestamp, &b.id)));
            UserGroup {
                user,
                label,
                synthetic: false,
                posts,
            }
        })
        .collect()
}

/// Builds synthetic control users by chunking the globally time-sorted
/// control posts into consecutive groups of exactly `k`; a trailing remainder
/// shorter than `k` is dropped.
pub fn synthesize_control_users(control_posts: &[Post], k: usize) -> Result<Vec<UserGroup>> {
    if k < 1 {
        return Err(Error::Invalid("chunk size k must be >= 1".into()));
    }
    if let Some(bad) = control_posts.iter().find(|p| p.label != 0) {
        return Err(Error::Invalid(format!(
            "synthesize_control_users requires control posts; post {:?} has label {}",
            bad.id, bad.label
        )));
    }
    let mut sorted: Vec<Post> = control_posts.to_vec();
    sorted.sort_by(|a, b| (a.timestamp, &a.id).cmp(&(b.timestamp, &b.id)));
    Ok(sorted
        .chunks_exact(k)
        .enumerate()
        .map(|(i, chunk)| UserGroup {
            user: format!("synthetic-control-{i:06}"),
            label: 0,
            synthetic: true,
            posts: chunk.to_vec(),
        })
        .collect())
}
