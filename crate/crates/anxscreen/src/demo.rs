//! Synthetic demo corpus generator.
//!
//! Builds a labeled corpus whose positive class differs from the control
//! class only in first-person pronoun rate: class 1 draws a target rate from
//! N(6.8, 4.1^2) per hundred tokens and class 0 from N(3.2, 2.9^2), both
//! clipped to [0, 30]; every other ingredient (length, sentiment words,
//! punctuation, emoji, URLs) is drawn label-independently. That makes the
//! self-reference features the only systematic signal, with a closed-form
//! two-Gaussian separability oracle for the resulting rates.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::corpus::Post;
use crate::error::{Error, Result};
use crate::features::PRONOUNS;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DemoConfig {
    pub posts: usize,
    pub seed: u64,
    /// Fraction of posts labeled 1.
    pub positive_fraction: f64,
    /// (mean, sd) of the target pronoun rate per 100 tokens, class 1.
    pub positive_rate: (f64, f64),
    /// (mean, sd) of the target pronoun rate per 100 tokens, class 0.
    pub control_rate: (f64, f64),
    /// Inclusive word-count range per post.
    pub words: (usize, usize),
    /// Inclusive posts-per-author range for class-1 authors.
    pub posts_per_author: (usize, usize),
    /// When false, control posts carry no author id, mirroring corpora whose
    /// control side lacks stable user identifiers.
    pub control_authors: bool,
}

impl Default for DemoConfig {
    fn default() -> Self {
        DemoConfig {
            posts: 2000,
            seed: 42,
            positive_fraction: 0.5,
            positive_rate: (6.8, 4.1),
            control_rate: (3.2, 2.9),
            words: (25, 120),
            posts_per_author: (1, 5),
            control_authors: false,
        }
    }
}

const FILLERS: [&str; 48] = [
    "the", "a", "an", "and", "but", "so", "then", "today", "yesterday", "morning", "evening",
    "work", "school", "home", "friend", "coffee", "music", "book", "movie", "game", "walk",
    "weather", "dinner", "weekend", "project", "meeting", "garden", "street", "city", "train",
    "phone", "letter", "kitchen", "window", "winter", "summer", "again", "maybe", "really",
    "quite", "about", "around", "through", "because", "while", "after", "before", "people",
];

const SENTIMENT_WORDS: [&str; 12] = [
    "good", "great", "happy", "calm", "nice", "hope", "bad", "sad", "tired", "lonely", "hurt",
    "upset",
];

const EMOJIS: [char; 4] = ['\u{1F600}', '\u{1F62D}', '\u{1F389}', '\u{1F680}'];

/// Generates the demo corpus. Deterministic for a given config.
pub fn generate(cfg: &DemoConfig) -> Result<Vec<Post>> {
    if cfg.posts == 0 {
        return Err(Error::Invalid("demo corpus needs at least 1 post".into()));
    }
    if !(0.0..=1.0).contains(&cfg.positive_fraction) {
        return Err(Error::Invalid("positive_fraction must lie in [0, 1]".into()));
    }
    if cfg.words.0 < 5 || cfg.words.1 < cfg.words.0 {
        return Err(Error::Invalid("word range must satisfy 5 <= lo <= hi".into()));
    }
    if cfg.posts_per_author.0 < 1 || cfg.posts_per_author.1 < cfg.posts_per_author.0 {
        return Err(Error::Invalid("posts_per_author range invalid".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n_pos = (cfg.posts as f64 * cfg.positive_fraction).round() as usize;
    let pos_normal = Normal::new(cfg.positive_rate.0, cfg.positive_rate.1)
        .map_err(|e| Error::Invalid(format!("bad rate parameters: {e}")))?;
    let ctl_normal = Normal::new(cfg.control_rate.0, cfg.control_rate.1)
        .map_err(|e| Error::Invalid(format!("bad rate parameters: {e}")))?;

    let mut posts = Vec::with_capacity(cfg.posts);
    let mut author_idx = 0usize;
    let mut author_quota = 0usize;
    let mut current_author = String::new();
    for idx in 0..cfg.posts {
        let label = u8::from(idx < n_pos);
        let author = if label == 1 {
            if author_quota == 0 {
                author_idx += 1;
                author_quota = rng.gen_range(cfg.posts_per_author.0..=cfg.posts_per_author.1);
                current_author = format!("demo-anx-{author_idx:05}");
            }
            author_quota -= 1;
            current_author.clone()
        } else if cfg.control_authors {
            if author_quota == 0 {
                author_idx += 1;
                author_quota = rng.gen_range(cfg.posts_per_author.0..=cfg.posts_per_author.1);
                current_author = format!("demo-ctl-{author_idx:05}");
            }
            author_quota -= 1;
            current_author.clone()
        } else {
            String::new()
        };
        // switching classes resets the author run
        if idx + 1 == n_pos {
            author_quota = 0;
        }
        let rate = if label == 1 {
            pos_normal.sample(&mut rng)
        } else {
            ctl_normal.sample(&mut rng)
        }
        .clamp(0.0, 30.0);
        let words = rng.gen_range(cfg.words.0..=cfg.words.1);
        let text = compose_text(&mut rng, words, rate);
        posts.push(Post {
            id: format!("demo-{idx:06}"),
            author,
            timestamp: 1_600_000_000 + (idx as i64) * 97 + rng.gen_range(0..50),
            text,
            label,
            source: Some(if label == 1 {
                "demo/positive".to_string()
            } else {
                "demo/control".to_string()
            }),
        });
    }
    Ok(posts)
}

fn compose_text(rng: &mut ChaCha8Rng, words: usize, pronoun_rate: f64) -> String {
    let pronoun_count = ((pronoun_rate * words as f64 / 100.0).round() as usize).min(words);
    // choose pronoun slots by partial Fisher-Yates over the positions
    let mut positions: Vec<usize> = (0..words).collect();
    for i in 0..pronoun_count.min(words.saturating_sub(1)) {
        let j = rng.gen_range(i..words);
        positions.swap(i, j);
    }
    let mut is_pronoun = vec![false; words];
    for &p in positions.iter().take(pronoun_count) {
        is_pronoun[p] = true;
    }
    let mut out = String::new();
    let mut sentence_len = 0usize;
    let mut next_break = rng.gen_range(6..=14);
    let mut pronoun_cycle = 0usize;
    for (w, flagged) in is_pronoun.iter().enumerate() {
        if w > 0 {
            out.push(' ');
        }
        let word = if *flagged {
            pronoun_cycle += 1;
            PRONOUNS[(pronoun_cycle - 1) % PRONOUNS.len()]
        } else if rng.gen_range(0..100) < 6 {
            SENTIMENT_WORDS[rng.gen_range(0..SENTIMENT_WORDS.len())]
        } else {
            FILLERS[rng.gen_range(0..FILLERS.len())]
        };
        out.push_str(word);
        sentence_len += 1;
        if sentence_len >= next_break {
            out.push(match rng.gen_range(0..10) {
                0 => '!',
                1 => '?',
                _ => '.',
            });
            sentence_len = 0;
            next_break = rng.gen_range(6..=14);
        } else if rng.gen_range(0..100) < 4 {
            out.push(',');
        }
        // occasional label-independent extras
        if rng.gen_range(0..1000) < 20 {
            out.push(' ');
            out.push(EMOJIS[rng.gen_range(0..EMOJIS.len())]);
        } else if rng.gen_range(0..1000) < 10 {
            out.push_str(" https://example.com/x");
        }
    }
    out.push('.');
    out
}
