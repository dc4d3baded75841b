//! Self-contained lexicon-based sentiment scoring.
//!
//! Produces six per-post sentiment quantities from two lexicons: a valence
//! lexicon with booster and negation rules (neg/neu/pos proportions plus a
//! normalized compound score) and a polarity lexicon (mean polarity and
//! subjectivity). No external NLP dependency is involved; scoring is fully
//! determined by the lexicon files and [`SentimentConfig`].

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rule constants for valence scoring. All knobs are exposed so golden
/// values in downstream tests stay adjustable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SentimentConfig {
    /// Multiplier applied to a token's valence when a negation term occurs
    /// within `window` preceding tokens.
    pub negation_factor: f64,
    /// Per-step distance damping for booster increments: a booster at
    /// distance d contributes increment * damping^(d-1).
    pub booster_damping: f64,
    /// How many preceding tokens are scanned for boosters and negations.
    pub window: usize,
    /// Normalization constant of the compound score x / sqrt(x^2 + alpha).
    pub alpha: f64,
}

impl Default for SentimentConfig {
    fn default() -> Self {
        SentimentConfig {
            negation_factor: -0.74,
            booster_damping: 0.95,
            window: 3,
            alpha: 15.0,
        }
    }
}

/// Term valences in [-4, 4] plus booster increments and negation terms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValenceLexicon {
    valence: BTreeMap<String, f64>,
    boosters: BTreeMap<String, f64>,
    negations: BTreeSet<String>,
}

/// Term -> (polarity in [-1, 1], subjectivity in [0, 1]).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolarityLexicon {
    terms: BTreeMap<String, (f64, f64)>,
}

fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn normalize_term(term: &str, origin: &str, line: usize) -> Result<String> {
    if term.is_empty() {
        return Err(Error::parse(origin, line, "empty term"));
    }
    Ok(term.to_lowercase())
}

fn parse_value(raw: &str, origin: &str, line: usize) -> Result<f64> {
    let v: f64 = raw
        .parse()
        .map_err(|_| Error::parse(origin, line, format!("not a number: {raw:?}")))?;
    if !v.is_finite() {
        return Err(Error::parse(origin, line, format!("non-finite value {raw:?}")));
    }
    Ok(v)
}

impl ValenceLexicon {
    /// Parses the three valence-side inputs: `term<TAB>valence` lines,
    /// `term<TAB>increment` booster lines, and a one-term-per-line negation
    /// list. `#` comment lines and blank lines are ignored everywhere.
    pub fn parse(valence_tsv: &str, boosters_tsv: &str, negations_txt: &str) -> Result<Self> {
        let mut valence = BTreeMap::new();
        for (line, text) in data_lines(valence_tsv) {
            let (term, raw) = text
                .split_once('\t')
                .ok_or_else(|| Error::parse("valence lexicon", line, "expected term<TAB>valence"))?;
            let term = normalize_term(term.trim(), "valence lexicon", line)?;
            let v = parse_value(raw.trim(), "valence lexicon", line)?;
            if !(-4.0..=4.0).contains(&v) {
                return Err(Error::parse(
                    "valence lexicon",
                    line,
                    format!("valence {v} outside [-4, 4]"),
                ));
            }
            if valence.insert(term.clone(), v).is_some() {
                return Err(Error::parse(
                    "valence lexicon",
                    line,
                    format!("duplicate term {term:?}"),
                ));
            }
        }
        let mut boosters = BTreeMap::new();
        for (line, text) in data_lines(boosters_tsv) {
            let (term, raw) = text
                .split_once('\t')
                .ok_or_else(|| Error::parse("booster lexicon", line, "expected term<TAB>increment"))?;
            let term = normalize_term(term.trim(), "booster lexicon", line)?;
            let v = parse_value(raw.trim(), "booster lexicon", line)?;
            if boosters.insert(term.clone(), v).is_some() {
                return Err(Error::parse(
                    "booster lexicon",
                    line,
                    format!("duplicate term {term:?}"),
                ));
            }
        }
        let mut negations = BTreeSet::new();
        for (line, text) in data_lines(negations_txt) {
            let term = normalize_term(text, "negation list", line)?;
            if !negations.insert(term.clone()) {
                return Err(Error::parse(
                    "negation list",
                    line,
                    format!("duplicate term {term:?}"),
                ));
            }
        }
        Ok(ValenceLexicon {
            valence,
            boosters,
            negations,
        })
    }

    /// The small bundled demo lexicon used by tests, demos, and the demo
    /// corpus generator. Real analyses should load a full user lexicon.
    pub fn demo() -> Self {
        ValenceLexicon::parse(
            include_str!("../data/valence_demo.tsv"),
            include_str!("../data/boosters_demo.tsv"),
            include_str!("../data/negations_demo.txt"),
        )
        .expect("bundled demo valence lexicon is valid")
    }

    pub fn valence_of(&self, token: &str) -> Option<f64> {
        self.valence.get(token).copied()
    }

    pub fn booster_of(&self, token: &str) -> Option<f64> {
        self.boosters.get(token).copied()
    }

    pub fn is_negation(&self, token: &str) -> bool {
        self.negations.contains(token)
    }

    pub fn len(&self) -> usize {
        self.valence.len()
    }

    pub fn is_empty(&self) -> bool {
        self.valence.is_empty()
    }
}

impl PolarityLexicon {
    /// Parses `term<TAB>polarity<TAB>subjectivity` lines.
    pub fn parse(tsv: &str) -> Result<Self> {
        let mut terms = BTreeMap::new();
        for (line, text) in data_lines(tsv) {
            let mut parts = text.split('\t');
            let term = parts
                .next()
                .ok_or_else(|| Error::parse("polarity lexicon", line, "missing term"))?;
            let term = normalize_term(term.trim(), "polarity lexicon", line)?;
            let pol = parse_value(
                parts
                    .next()
                    .ok_or_else(|| Error::parse("polarity lexicon", line, "missing polarity"))?
                    .trim(),
                "polarity lexicon",
                line,
            )?;
            let subj = parse_value(
                parts
                    .next()
                    .ok_or_else(|| Error::parse("polarity lexicon", line, "missing subjectivity"))?
                    .trim(),
                "polarity lexicon",
                line,
            )?;
            if !(-1.0..=1.0).contains(&pol) {
                return Err(Error::parse(
                    "polarity lexicon",
                    line,
                    format!("polarity {pol} outside [-1, 1]"),
                ));
            }
            if !(0.0..=1.0).contains(&subj) {
                return Err(Error::parse(
                    "polarity lexicon",
                    line,
                    format!("subjectivity {subj} outside [0, 1]"),
                ));
            }
            if terms.insert(term.clone(), (pol, subj)).is_some() {
                return Err(Error::parse(
                    "polarity lexicon",
                    line,
                    format!("duplicate term {term:?}"),
                ));
            }
        }
        Ok(PolarityLexicon { terms })
    }

    pub fn demo() -> Self {
        PolarityLexicon::parse(include_str!("../data/polarity_demo.tsv"))
            .expect("bundled demo polarity lexicon is valid")
    }

    pub fn lookup(&self, token: &str) -> Option<(f64, f64)> {
        self.terms.get(token).copied()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
}

/// Loads the valence-side files and the polarity lexicon from disk.
pub fn load_lexicons(
    valence_path: &Path,
    boosters_path: &Path,
    negations_path: &Path,
    polarity_path: &Path,
) -> Result<(ValenceLexicon, PolarityLexicon)> {
    let read = |p: &Path| std::fs::read_to_string(p).map_err(|e| Error::io(p, e));
    let valence = ValenceLexicon::parse(
        &read(valence_path)?,
        &read(boosters_path)?,
        &read(negations_path)?,
    )?;
    let polarity = PolarityLexicon::parse(&read(polarity_path)?)?;
    Ok((valence, polarity))
}

/// Per-token adjusted valences. A booster within `window` preceding tokens
/// adds its increment in the direction of the token's valence, damped by
/// `booster_damping` per step of distance beyond the first; any negation term
/// in the window multiplies the result by `negation_factor`. Out-of-lexicon
/// tokens score zero.
pub fn token_valences(tokens: &[String], lexicon: &ValenceLexicon, cfg: &SentimentConfig) -> Vec<f64> {
    tokens
        .iter()
        .enumerate()
        .map(|(i, token)| {
            let Some(base) = lexicon.valence_of(token) else {
                return 0.0;
            };
            if base == 0.0 {
                return 0.0;
            }
            let mut v = base;
            let mut negated = false;
            for d in 1..=cfg.window.min(i) {
                let prev = tokens[i - d].as_str();
                if let Some(inc) = lexicon.booster_of(prev) {
                    let damp = cfg.booster_damping.powi(d as i32 - 1);
                    v += inc * damp * base.signum();
                }
                if lexicon.is_negation(prev) {
                    negated = true;
                }
            }
            if negated {
                v *= cfg.negation_factor;
            }
            v
        })
        .collect()
}

/// x / sqrt(x^2 + alpha) where x is the sum of the valences. Odd, strictly
/// increasing in x, and confined to (-1, 1).
pub fn compound_score(valences: &[f64], alpha: f64) -> f64 {
    let x: f64 = valences.iter().sum();
    if x == 0.0 {
        return 0.0;
    }
    x / (x * x + alpha).sqrt()
}

/// Mass-based (neg, neu, pos) proportions: positive tokens contribute v + 1,
/// negative tokens |v| + 1, neutral tokens count 1 each. Empty input scores
/// fully neutral.
pub fn proportion_scores(valences: &[f64]) -> (f64, f64, f64) {
    if valences.is_empty() {
        return (0.0, 1.0, 0.0);
    }
    let mut pos = 0.0;
    let mut neg = 0.0;
    let mut neu = 0.0;
    for &v in valences {
        if v > 0.0 {
            pos += v + 1.0;
        } else if v < 0.0 {
            neg += v.abs() + 1.0;
        } else {
            neu += 1.0;
        }
    }
    let total = pos + neg + neu;
    (neg / total, neu / total, pos / total)
}

/// Arithmetic mean of (polarity, subjectivity) over tokens found in the
/// lexicon; (0, 0) when nothing matches.
pub fn polarity_subjectivity(tokens: &[String], lexicon: &PolarityLexicon) -> (f64, f64) {
    let mut pol = 0.0;
    let mut subj = 0.0;
    let mut hits = 0usize;
    for token in tokens {
        if let Some((p, s)) = lexicon.lookup(token) {
            pol += p;
            subj += s;
            hits += 1;
        }
    }
    if hits == 0 {
        (0.0, 0.0)
    } else {
        (pol / hits as f64, subj / hits as f64)
    }
}

/// The six sentiment quantities of one token sequence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SentimentScores {
    pub neg: f64,
    pub neu: f64,
    pub pos: f64,
    pub compound: f64,
    pub polarity: f64,
    pub subjectivity: f64,
}

pub fn score(
    tokens: &[String],
    valence: &ValenceLexicon,
    polarity: &PolarityLexicon,
    cfg: &SentimentConfig,
) -> SentimentScores {
    let valences = token_valences(tokens, valence, cfg);
    let (neg, neu, pos) = proportion_scores(&valences);
    let compound = compound_score(&valences, cfg.alpha);
    let (pol, subj) = polarity_subjectivity(tokens, polarity);
    SentimentScores {
        neg,
        neu,
        pos,
        compound,
        polarity: pol,
        subjectivity: subj,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(words: &[&str]) -> Vec<String> {
        words.iter().map(|w| w.to_string()).collect()
    }

    #[test]
    fn demo_lexicons_load() {
        let v = ValenceLexicon::demo();
        let p = PolarityLexicon::demo();
        assert!(v.len() >= 60, "demo valence lexicon has {} terms", v.len());
        assert!(p.len() >= 40, "demo polarity lexicon has {} terms", p.len());
        assert_eq!(v.valence_of("good"), Some(1.9));
    }

    #[test]
    fn plain_lookup() {
        let lex = ValenceLexicon::demo();
        let cfg = SentimentConfig::default();
        assert_eq!(token_valences(&toks(&["good"]), &lex, &cfg), vec![1.9]);
    }

    #[test]
    fn negation_applies_factor() {
        let lex = ValenceLexicon::demo();
        let cfg = SentimentConfig::default();
        let v = token_valences(&toks(&["not", "good"]), &lex, &cfg);
        assert_eq!(v[0], 0.0);
        assert!((v[1] - 1.9 * -0.74).abs() < 1e-12, "got {}", v[1]);
    }

    #[test]
    fn out_of_vocabulary_scores_zero() {
        let lex = ValenceLexicon::demo();
        let cfg = SentimentConfig::default();
        assert_eq!(token_valences(&toks(&["the", "cat"]), &lex, &cfg), vec![0.0, 0.0]);
    }

    #[test]
    fn booster_damps_with_distance() {
        let lex = ValenceLexicon::parse("good\t1.9\n", "very\t0.3\n", "not\n").unwrap();
        let cfg = SentimentConfig::default();
        let v1 = token_valences(&toks(&["very", "good"]), &lex, &cfg);
        assert!((v1[1] - (1.9 + 0.3)).abs() < 1e-12);
        let v2 = token_valences(&toks(&["very", "x", "good"]), &lex, &cfg);
        assert!((v2[2] - (1.9 + 0.3 * 0.95)).abs() < 1e-12);
        let v3 = token_valences(&toks(&["very", "x", "y", "good"]), &lex, &cfg);
        assert!((v3[3] - (1.9 + 0.3 * 0.95 * 0.95)).abs() < 1e-12);
        let v4 = token_valences(&toks(&["very", "x", "y", "z", "good"]), &lex, &cfg);
        assert!((v4[4] - 1.9).abs() < 1e-12, "booster outside window must not fire");
    }

    #[test]
    fn booster_is_sign_aligned() {
        let lex = ValenceLexicon::parse("awful\t-2.0\n", "very\t0.3\n", "not\n").unwrap();
        let cfg = SentimentConfig::default();
        let v = token_valences(&toks(&["very", "awful"]), &lex, &cfg);
        assert!((v[1] - (-2.0 - 0.3)).abs() < 1e-12);
    }

    #[test]
    fn compound_matches_closed_form() {
        assert_eq!(compound_score(&[], 15.0), 0.0);
        assert_eq!(compound_score(&[0.0, 0.0], 15.0), 0.0);
        // x = 4 -> 4/sqrt(31)
        let got = compound_score(&[1.0, 3.0], 15.0);
        assert!((got - 0.718_421_208_107_099_6).abs() < 1e-12);
        assert!(compound_score(&[1000.0], 15.0) > 0.999);
    }

    #[test]
    fn proportions_match_mass_formula() {
        assert_eq!(proportion_scores(&[]), (0.0, 1.0, 0.0));
        assert_eq!(proportion_scores(&[0.0, 0.0]), (0.0, 1.0, 0.0));
        assert_eq!(proportion_scores(&[1.0]), (0.0, 0.0, 1.0));
        let (neg, neu, pos) = proportion_scores(&[1.0, -1.0, 0.0]);
        assert!((neg - 0.4).abs() < 1e-12);
        assert!((neu - 0.2).abs() < 1e-12);
        assert!((pos - 0.4).abs() < 1e-12);
    }

    #[test]
    fn polarity_means() {
        let lex = PolarityLexicon::parse("calm\t0.5\t0.6\nangry\t-0.5\t0.0\nhappy\t1.0\t1.0\n").unwrap();
        assert_eq!(polarity_subjectivity(&toks(&["the", "cat"]), &lex), (0.0, 0.0));
        assert_eq!(polarity_subjectivity(&toks(&["calm"]), &lex), (0.5, 0.6));
        let (p, s) = polarity_subjectivity(&toks(&["happy", "angry"]), &lex);
        assert!((p - 0.25).abs() < 1e-12);
        assert!((s - 0.5).abs() < 1e-12);
    }

    #[test]
    fn lexicon_rejects_out_of_range() {
        assert!(ValenceLexicon::parse("good\t4.5\n", "", "").is_err());
        assert!(PolarityLexicon::parse("good\t1.5\t0.5\n").is_err());
        assert!(PolarityLexicon::parse("good\t0.5\t1.5\n").is_err());
    }

    #[test]
    fn lexicon_rejects_duplicates_with_line() {
        let err = ValenceLexicon::parse("good\t1.0\ngood\t2.0\n", "", "").unwrap_err();
        assert!(err.to_string().contains(":2:"), "{err}");
    }
}
