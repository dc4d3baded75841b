//! Experiment runners: feature ablation, keyword masking, early-slice
//! user-level detection, and cross-domain statistical validation.
//!
//! Every runner is deterministic given its config. Ablation-style runs refit
//! the standardizer on their own training rows, train one model per feature
//! subset on identical splits, and evaluate on the test partition.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::corpus::{Partition, Post, SplitAssignment};
use crate::error::{Error, Result};
use crate::eval::{self, MetricSet};
use crate::features::{
    extract_all, feature_index, PostFeatures, FEATURE_COUNT, FEATURE_NAMES,
};
use crate::masking::{self, KeywordList, MASK_TOKEN};
use crate::model::{self, LogisticModel, TrainConfig};
use crate::sentiment::{PolarityLexicon, SentimentConfig, ValenceLexicon};
use crate::stats::{self, HedgesCorrection, StatResult};

/// A named subset of the canonical features.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSubsetSpec {
    pub name: String,
    pub features: Vec<String>,
}

impl FeatureSubsetSpec {
    pub fn validate(&self) -> Result<Vec<usize>> {
        if self.features.is_empty() {
            return Err(Error::Invalid(format!("subset {:?} is empty", self.name)));
        }
        let mut indices = Vec::with_capacity(self.features.len());
        for name in &self.features {
            let idx = feature_index(name).ok_or_else(|| {
                Error::Invalid(format!("subset {:?}: unknown feature {name:?}", self.name))
            })?;
            if indices.contains(&idx) {
                return Err(Error::Invalid(format!(
                    "subset {:?}: duplicate feature {name:?}",
                    self.name
                )));
            }
            indices.push(idx);
        }
        indices.sort_unstable();
        Ok(indices)
    }

    pub fn is_full(&self) -> bool {
        self.validate().map(|idx| idx.len() == FEATURE_COUNT).unwrap_or(false)
    }
}

#[derive(Debug, Deserialize)]
struct SubsetFile {
    #[serde(rename = "subset")]
    subsets: Vec<FeatureSubsetSpec>,
}

/// Parses a subset spec file (TOML with `[[subset]]` tables).
pub fn parse_subsets(text: &str) -> Result<Vec<FeatureSubsetSpec>> {
    let file: SubsetFile =
        toml::from_str(text).map_err(|e| Error::Invalid(format!("subset spec: {e}")))?;
    if file.subsets.is_empty() {
        return Err(Error::Invalid("subset spec defines no subsets".into()));
    }
    for s in &file.subsets {
        s.validate()?;
    }
    Ok(file.subsets)
}

pub fn load_subsets(path: &std::path::Path) -> Result<Vec<FeatureSubsetSpec>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_subsets(&text)
}

/// The five bundled groupings: all features, non-sentiment, self-reference
/// only, text structure only, sentiment only.
pub fn default_subsets() -> Vec<FeatureSubsetSpec> {
    parse_subsets(include_str!("../data/subsets_default.toml"))
        .expect("bundled subset spec is valid")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub train: TrainConfig,
    pub threshold: f64,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            train: TrainConfig::default(),
            threshold: 0.5,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub subset: String,
    pub features: Vec<String>,
    pub metrics: MetricSet,
    pub delta_f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationTable {
    pub rows: Vec<AblationRow>,
}

fn partition_rows<'a>(rows: &'a [PostFeatures], partition: Partition) -> Vec<&'a PostFeatures> {
    rows.iter().filter(|r| r.partition == partition).collect()
}

fn project(values: &[f64; FEATURE_COUNT], indices: &[usize]) -> Vec<f64> {
    indices.iter().map(|&i| values[i]).collect()
}

fn subset_names(indices: &[usize]) -> Vec<String> {
    indices.iter().map(|&i| FEATURE_NAMES[i].to_string()).collect()
}

/// Trains on the train partition restricted to `indices` and evaluates on
/// the test partition. The standardizer is refit on this run's training rows.
pub fn train_eval_subset(
    rows: &[PostFeatures],
    indices: &[usize],
    cfg: &ExperimentConfig,
) -> Result<(MetricSet, LogisticModel)> {
    let names = subset_names(indices);
    let train_rows = partition_rows(rows, Partition::Train);
    let test_rows = partition_rows(rows, Partition::Test);
    if train_rows.is_empty() || test_rows.is_empty() {
        return Err(Error::Insufficient(
            "need non-empty train and test partitions".into(),
        ));
    }
    let x_train: Vec<Vec<f64>> = train_rows.iter().map(|r| project(&r.values, indices)).collect();
    let y_train: Vec<u8> = train_rows.iter().map(|r| r.label).collect();
    let model = model::fit(&x_train, &y_train, &cfg.train, &names, "train")?;
    let y_test: Vec<u8> = test_rows.iter().map(|r| r.label).collect();
    let probs: Vec<f64> = test_rows
        .iter()
        .map(|r| model.predict_proba(&project(&r.values, indices)))
        .collect();
    let preds: Vec<u8> = probs.iter().map(|p| u8::from(*p >= cfg.threshold)).collect();
    let cm = eval::confusion(&y_test, &preds)?;
    let mut metrics = eval::metrics(&cm);
    metrics.auc = Some(eval::roc_auc(&y_test, &probs)?);
    Ok((metrics, model))
}

/// Independent train/eval per subset on identical splits, with F1 deltas
/// against the all-features baseline. The subset list must contain a subset
/// covering all features.
pub fn run_ablation(
    rows: &[PostFeatures],
    subsets: &[FeatureSubsetSpec],
    cfg: &ExperimentConfig,
) -> Result<AblationTable> {
    let baseline_pos = subsets
        .iter()
        .position(FeatureSubsetSpec::is_full)
        .ok_or_else(|| Error::Invalid("subset list needs an all-features baseline".into()))?;
    let mut raw = Vec::with_capacity(subsets.len());
    for spec in subsets {
        let indices = spec.validate()?;
        let (metrics, _model) = train_eval_subset(rows, &indices, cfg)?;
        raw.push((spec.name.clone(), subset_names(&indices), metrics));
    }
    let baseline_f1 = raw[baseline_pos].2.f1;
    Ok(AblationTable {
        rows: raw
            .into_iter()
            .map(|(subset, features, metrics)| AblationRow {
                delta_f1: metrics.f1 - baseline_f1,
                subset,
                features,
                metrics,
            })
            .collect(),
    })
}

/// Masks every post, re-extracts features, and runs the same table as
/// [`run_ablation`]. With an empty keyword list this is exactly an ablation
/// run on the unmasked corpus.
#[allow(clippy::too_many_arguments)]
pub fn run_masking(
    posts: &[Post],
    assignment: &SplitAssignment,
    valence: &ValenceLexicon,
    polarity: &PolarityLexicon,
    sentiment_cfg: &SentimentConfig,
    keywords: &KeywordList,
    subsets: &[FeatureSubsetSpec],
    cfg: &ExperimentConfig,
    threads: usize,
) -> Result<AblationTable> {
    let masked: Vec<Post> = posts
        .iter()
        .map(|p| Post {
            text: masking::mask_text(&p.text, keywords, MASK_TOKEN),
            ..p.clone()
        })
        .collect();
    let rows = extract_all(&masked, assignment, valence, polarity, sentiment_cfg, threads)?;
    run_ablation(&rows, subsets, cfg)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassPrevalence {
    pub posts: usize,
    pub with_keyword: usize,
    pub fraction: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrevalenceReport {
    pub positive: ClassPrevalence,
    pub control: ClassPrevalence,
    /// positive fraction over control fraction; infinite when controls have
    /// no keyword posts but positives do.
    pub ratio: f64,
}

/// Per-class fraction of posts containing at least one keyword, counted with
/// exactly the matching rules of `mask_text`.
pub fn keyword_prevalence(posts: &[Post], keywords: &KeywordList) -> PrevalenceReport {
    let mut counts = [(0usize, 0usize); 2];
    for post in posts {
        let c = &mut counts[post.label as usize];
        c.0 += 1;
        if masking::contains_keyword(&post.text, keywords) {
            c.1 += 1;
        }
    }
    let frac = |(n, k): (usize, usize)| if n == 0 { 0.0 } else { k as f64 / n as f64 };
    let control = ClassPrevalence {
        posts: counts[0].0,
        with_keyword: counts[0].1,
        fraction: frac(counts[0]),
    };
    let positive = ClassPrevalence {
        posts: counts[1].0,
        with_keyword: counts[1].1,
        fraction: frac(counts[1]),
    };
    let ratio = if positive.fraction == 0.0 {
        0.0
    } else if control.fraction == 0.0 {
        f64::INFINITY
    } else {
        positive.fraction / control.fraction
    };
    PrevalenceReport {
        positive,
        control,
        ratio,
    }
}

/// One user's rows in ascending (timestamp, id) order.
struct FeatureGroup<'a> {
    label: u8,
    rows: Vec<&'a PostFeatures>,
}

fn group_features<'a>(rows: &[&'a PostFeatures]) -> Vec<FeatureGroup<'a>> {
    let mut grouped: BTreeMap<(String, u8), Vec<&PostFeatures>> = BTreeMap::new();
    for row in rows {
        let key = if row.author.is_empty() {
            format!("post:{}", row.id)
        } else {
            row.author.clone()
        };
        grouped.entry((key, row.label)).or_default().push(row);
    }
    grouped
        .into_iter()
        .map(|((_user, label), mut rows)| {
            rows.sort_by(|a, b| (a.timestamp, &a.id).cmp(&(b.timestamp, &b.id)));
            FeatureGroup { label, rows }
        })
        .collect()
}

/// Chunks control rows (globally time-sorted) into synthetic users of
/// exactly `k`, dropping the remainder; mirrors the corpus-level operation.
fn synthesize_control_groups<'a>(rows: &[&'a PostFeatures], k: usize) -> Vec<FeatureGroup<'a>> {
    let mut sorted: Vec<&PostFeatures> = rows.to_vec();
    sorted.sort_by(|a, b| (a.timestamp, &a.id).cmp(&(b.timestamp, &b.id)));
    sorted
        .chunks_exact(k)
        .map(|chunk| FeatureGroup {
            label: 0,
            rows: chunk.to_vec(),
        })
        .collect()
}

/// Mean feature vector over the first `k` rows of a group.
fn mean_first_k(group: &FeatureGroup<'_>, k: usize) -> Vec<f64> {
    let take = k.min(group.rows.len());
    let mut out = vec![0.0; FEATURE_COUNT];
    for row in group.rows.iter().take(take) {
        for (o, v) in out.iter_mut().zip(row.values.iter()) {
            *o += v;
        }
    }
    for o in &mut out {
        *o /= take as f64;
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EarlySliceResult {
    pub k: usize,
    pub eligible_train_users: usize,
    pub eligible_test_users: usize,
    pub metrics: MetricSet,
    pub validation_metrics: MetricSet,
    /// F1 difference against the post-level full model's test F1.
    pub delta_f1_vs_full: f64,
    /// Early correct, full-model wrong / early wrong, full-model correct on
    /// the same eligible test users.
    pub n01: u64,
    pub n10: u64,
    pub mcnemar_chi2: f64,
    pub mcnemar_p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EarlySliceRun {
    /// Post-level test F1 of the full model the deltas refer to.
    pub full_model_f1: f64,
    pub results: Vec<EarlySliceResult>,
}

fn user_groups_for<'a>(
    rows: &[&'a PostFeatures],
    k: usize,
) -> (Vec<FeatureGroup<'a>>, bool) {
    let positives: Vec<&PostFeatures> = rows.iter().copied().filter(|r| r.label == 1).collect();
    let controls: Vec<&PostFeatures> = rows.iter().copied().filter(|r| r.label == 0).collect();
    let mut groups = group_features(&positives);
    // controls without stable author ids get synthetic chunked users
    let synthetic = controls.iter().any(|r| r.author.is_empty());
    if synthetic {
        groups.extend(synthesize_control_groups(&controls, k));
    } else {
        groups.extend(group_features(&controls));
    }
    (groups, synthetic)
}

/// For each k: keep users with at least k posts, average per-post features
/// over each user's first k posts, train on train users, evaluate on test
/// users, and compare against post-level full-model predictions (features
/// averaged over the user's entire history) with McNemar discordant counts.
pub fn run_early_slice(
    rows: &[PostFeatures],
    ks: &[usize],
    cfg: &ExperimentConfig,
) -> Result<EarlySliceRun> {
    if ks.is_empty() {
        return Err(Error::Invalid("early-slice needs at least one k".into()));
    }
    if ks.iter().any(|k| *k == 0) {
        return Err(Error::Invalid("k must be >= 1".into()));
    }
    let all_indices: Vec<usize> = (0..FEATURE_COUNT).collect();
    let (full_metrics, full_model) = train_eval_subset(rows, &all_indices, cfg)?;
    let train_rows = partition_rows(rows, Partition::Train);
    let val_rows = partition_rows(rows, Partition::Validation);
    let test_rows = partition_rows(rows, Partition::Test);
    let mut results = Vec::with_capacity(ks.len());
    for &k in ks {
        let (train_groups, _) = user_groups_for(&train_rows, k);
        let (val_groups, _) = user_groups_for(&val_rows, k);
        let (test_groups, _) = user_groups_for(&test_rows, k);
        let eligible =
            |groups: &[FeatureGroup<'_>]| -> Vec<usize> {
                groups
                    .iter()
                    .enumerate()
                    .filter(|(_, g)| g.rows.len() >= k)
                    .map(|(i, _)| i)
                    .collect()
            };
        let train_idx = eligible(&train_groups);
        let test_idx = eligible(&test_groups);
        let val_idx = eligible(&val_groups);
        if train_idx.is_empty() || test_idx.is_empty() {
            return Err(Error::Insufficient(format!(
                "no eligible users with >= {k} posts (train {}, test {})",
                train_idx.len(),
                test_idx.len()
            )));
        }
        let x_train: Vec<Vec<f64>> = train_idx
            .iter()
            .map(|&i| mean_first_k(&train_groups[i], k))
            .collect();
        let y_train: Vec<u8> = train_idx.iter().map(|&i| train_groups[i].label).collect();
        let names: Vec<String> = FEATURE_NAMES.iter().map(|s| s.to_string()).collect();
        let early_model = model::fit(&x_train, &y_train, &cfg.train, &names, "train-users")?;
        let evaluate = |groups: &[FeatureGroup<'_>], idx: &[usize]| -> Result<(MetricSet, Vec<u8>, Vec<u8>)> {
            let labels: Vec<u8> = idx.iter().map(|&i| groups[i].label).collect();
            let probs: Vec<f64> = idx
                .iter()
                .map(|&i| early_model.predict_proba(&mean_first_k(&groups[i], k)))
                .collect();
            let preds: Vec<u8> = probs.iter().map(|p| u8::from(*p >= cfg.threshold)).collect();
            let cm = eval::confusion(&labels, &preds)?;
            let mut m = eval::metrics(&cm);
            m.auc = eval::roc_auc(&labels, &probs).ok();
            Ok((m, labels, preds))
        };
        let (metrics, test_labels, early_preds) = evaluate(&test_groups, &test_idx)?;
        let validation_metrics = if val_idx.is_empty() {
            MetricSet::default()
        } else {
            evaluate(&val_groups, &val_idx)?.0
        };
        // full-model user prediction: entire history through the post-level model
        let full_preds: Vec<u8> = test_idx
            .iter()
            .map(|&i| {
                let mean_all = {
                    let g = &test_groups[i];
                    let mut out = vec![0.0; FEATURE_COUNT];
                    for row in &g.rows {
                        for (o, v) in out.iter_mut().zip(row.values.iter()) {
                            *o += v;
                        }
                    }
                    for o in &mut out {
                        *o /= g.rows.len() as f64;
                    }
                    out
                };
                u8::from(full_model.predict_proba(&mean_all) >= cfg.threshold)
            })
            .collect();
        let mut n01 = 0u64;
        let mut n10 = 0u64;
        for ((y, e), f) in test_labels.iter().zip(&early_preds).zip(&full_preds) {
            let early_ok = e == y;
            let full_ok = f == y;
            if early_ok && !full_ok {
                n01 += 1;
            } else if !early_ok && full_ok {
                n10 += 1;
            }
        }
        let mc = if n01 + n10 > 0 {
            stats::mcnemar(n01, n10, true)?
        } else {
            stats::McnemarTest { chi2: 0.0, p: 1.0 }
        };
        results.push(EarlySliceResult {
            k,
            eligible_train_users: train_idx.len(),
            eligible_test_users: test_idx.len(),
            delta_f1_vs_full: metrics.f1 - full_metrics.f1,
            metrics,
            validation_metrics,
            n01,
            n10,
            mcnemar_chi2: mc.chi2,
            mcnemar_p: mc.p,
        });
    }
    Ok(EarlySliceRun {
        full_model_f1: full_metrics.f1,
        results,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossDomainReport {
    pub consistency: stats::ConsistencyReport,
    pub domain_a_results: Vec<StatResult>,
    pub domain_b_results: Vec<StatResult>,
    pub alpha: f64,
    pub features: Vec<String>,
}

/// The 12-feature default for cross-domain comparisons: everything except
/// emoji_count, which is structurally zero for transcribed speech.
pub fn cross_domain_default_features() -> Vec<String> {
    FEATURE_NAMES
        .iter()
        .filter(|n| **n != "emoji_count")
        .map(|s| s.to_string())
        .collect()
}

fn domain_summaries(
    rows: &[PostFeatures],
    feature_names: &[String],
) -> Result<Vec<(String, stats::GroupSummary, stats::GroupSummary)>> {
    let mut out = Vec::with_capacity(feature_names.len());
    for name in feature_names {
        let idx = feature_index(name)
            .ok_or_else(|| Error::Invalid(format!("unknown feature {name:?}")))?;
        let pos: Vec<f64> = rows
            .iter()
            .filter(|r| r.label == 1)
            .map(|r| r.values[idx])
            .collect();
        let ctl: Vec<f64> = rows
            .iter()
            .filter(|r| r.label == 0)
            .map(|r| r.values[idx])
            .collect();
        out.push((
            name.clone(),
            stats::GroupSummary::from_values(&pos)?,
            stats::GroupSummary::from_values(&ctl)?,
        ));
    }
    Ok(out)
}

/// Welch tests per feature within each domain, BH correction within each
/// domain across its tests, Hedges' g, then the directional-consistency
/// comparison.
pub fn run_cross_domain(
    domain_a: (&str, &[PostFeatures]),
    domain_b: (&str, &[PostFeatures]),
    alpha: f64,
    feature_names: &[String],
) -> Result<CrossDomainReport> {
    if feature_names.is_empty() {
        return Err(Error::Invalid("cross-domain needs at least one feature".into()));
    }
    let summaries_a = domain_summaries(domain_a.1, feature_names)?;
    let summaries_b = domain_summaries(domain_b.1, feature_names)?;
    let results_a = stats::domain_feature_tests(&summaries_a, alpha, HedgesCorrection::SampleSize)?;
    let results_b = stats::domain_feature_tests(&summaries_b, alpha, HedgesCorrection::SampleSize)?;
    let consistency =
        stats::cross_domain_consistency((domain_a.0, &results_a), (domain_b.0, &results_b))?;
    Ok(CrossDomainReport {
        consistency,
        domain_a_results: results_a,
        domain_b_results: results_b,
        alpha,
        features: feature_names.to_vec(),
    })
}
