//! File-based pipeline commands behind the `anxscreen` binary.
//!
//! Each command reads upstream artifacts, computes deterministically, and
//! writes its outputs atomically (temp file + rename), so commands are
//! rerunnable and never mutate their inputs. Every JSON report embeds the
//! run seed and a hash of the resolved command parameters; no timestamps are
//! written, so reruns with the same inputs are byte-identical.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use serde::{de::DeserializeOwned, Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{
    self, apply_quality_filters, author_disjoint_split, load_corpus, verify_balance, CorpusFormat,
    Partition, Post, QualityFilterOptions, SplitAssignment,
};
use crate::demo::{self, DemoConfig};
use crate::error::{Error, Result};
use crate::eval::{self, BootstrapCi, CalibrationReport, ConfusionMatrix, Interval, MetricSet};
use crate::experiments::{
    self, AblationTable, CrossDomainReport, EarlySliceRun, ExperimentConfig, FeatureSubsetSpec,
    PrevalenceReport,
};
use crate::features::{
    self, extract_all, fit_standardizer, format_float, PostFeatures, FEATURE_NAMES,
};
use crate::masking::{self, KeywordList};
use crate::model::{self, LogisticModel, TrainConfig};
use crate::sentiment::{PolarityLexicon, SentimentConfig, ValenceLexicon};

/// Optional run configuration file (TOML). Command-line flags override any
/// value set here; anything left unset falls back to the built-in defaults.
#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
    pub corpus: Option<PathBuf>,
    pub format: Option<String>,
    pub min_tokens: Option<usize>,
    pub drop_non_ascii: Option<bool>,
    pub drop_duplicates: Option<bool>,
    pub ratios: Option<Vec<f64>>,
    pub balance_threshold: Option<f64>,
    pub split: Option<PathBuf>,
    pub features: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub valence_lexicon: Option<PathBuf>,
    pub booster_lexicon: Option<PathBuf>,
    pub negation_list: Option<PathBuf>,
    pub polarity_lexicon: Option<PathBuf>,
    pub mask_keywords: Option<String>,
    pub subsets: Option<PathBuf>,
    pub k: Option<Vec<usize>>,
    pub alpha: Option<f64>,
    pub bootstrap: Option<usize>,
    pub c: Option<f64>,
    pub max_iterations: Option<usize>,
    pub tolerance: Option<f64>,
    pub class_weight: Option<String>,
    pub calibrate: Option<bool>,
    pub folds: Option<usize>,
    pub threshold: Option<f64>,
    pub log_level: Option<String>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text)
            .map_err(|e| Error::parse(path.display().to_string(), 1, e.to_string()))
    }
}

/// Short hex digest of the resolved command parameters; embedded in every
/// report so artifacts can be traced to the exact configuration.
pub fn config_hash<T: Serialize>(params: &T) -> String {
    let json = serde_json::to_string(params).expect("params serialize");
    let digest = Sha256::digest(json.as_bytes());
    let mut out = String::with_capacity(16);
    for b in &digest[..8] {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

fn ensure_out_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Atomic write: temp file in the same directory, then rename over the
/// destination.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension(match path.extension().and_then(|e| e.to_str()) {
        Some(ext) => format!("{ext}.tmp"),
        None => "tmp".to_string(),
    });
    std::fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Invalid(format!("serialize {}: {e}", path.display())))?;
    text.push('\n');
    atomic_write(path, text.as_bytes())
}

fn read_json<T: DeserializeOwned>(path: &Path, hint: &str) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        Error::Invalid(format!(
            "{}: {e} ({hint})",
            path.display()
        ))
    })?;
    serde_json::from_str(&text)
        .map_err(|e| Error::parse(path.display().to_string(), 1, e.to_string()))
}

fn require_file(path: &Path, hint: &str) -> Result<()> {
    if !path.is_file() {
        return Err(Error::Invalid(format!(
            "missing artifact {} ({hint})",
            path.display()
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// demo
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct DemoParams {
    pub posts: usize,
    pub seed: u64,
    pub control_authors: bool,
    pub out: PathBuf,
}

/// Writes a synthetic demo corpus as JSONL.
pub fn cmd_demo(params: &DemoParams) -> Result<()> {
    let cfg = DemoConfig {
        posts: params.posts,
        seed: params.seed,
        control_authors: params.control_authors,
        ..Default::default()
    };
    let posts = demo::generate(&cfg)?;
    if let Some(parent) = params.out.parent() {
        if !parent.as_os_str().is_empty() {
            ensure_out_dir(parent)?;
        }
    }
    let mut buf = Vec::new();
    for post in &posts {
        let line = serde_json::to_string(post)
            .map_err(|e| Error::Invalid(format!("serialize post: {e}")))?;
        buf.extend_from_slice(line.as_bytes());
        buf.push(b'\n');
    }
    atomic_write(&params.out, &buf)?;
    log::info!("wrote {} demo posts to {}", posts.len(), params.out.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// ingest
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct IngestParams {
    pub corpus: PathBuf,
    pub format: String,
    pub min_tokens: usize,
    pub drop_non_ascii: bool,
    pub drop_duplicates: bool,
    pub seed: u64,
    pub out: PathBuf,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct IngestReport {
    pub seed: u64,
    pub config_hash: String,
    pub input: PathBuf,
    pub total_records: usize,
    pub removed_non_ascii: usize,
    pub removed_duplicate: usize,
    pub removed_short: usize,
    pub kept: usize,
    pub removal_fraction: f64,
    pub min_tokens: usize,
}

/// Loads, validates, and filters a corpus; writes the canonical JSONL plus
/// an ingestion report with the removal fraction.
pub fn cmd_ingest(params: &IngestParams) -> Result<()> {
    let format = CorpusFormat::parse(&params.format)?;
    let posts = load_corpus(&params.corpus, format)?;
    let total = posts.len();
    let (posts, quality) = apply_quality_filters(
        &posts,
        QualityFilterOptions {
            drop_non_ascii: params.drop_non_ascii,
            drop_duplicates: params.drop_duplicates,
        },
    );
    let (kept, filter) = corpus::filter_posts(&posts, params.min_tokens)?;
    ensure_out_dir(&params.out)?;
    let out_corpus = params.out.join("corpus.jsonl");
    let mut buf = Vec::new();
    for post in &kept {
        let line = serde_json::to_string(post)
            .map_err(|e| Error::Invalid(format!("serialize post: {e}")))?;
        buf.extend_from_slice(line.as_bytes());
        buf.push(b'\n');
    }
    atomic_write(&out_corpus, &buf)?;
    let report = IngestReport {
        seed: params.seed,
        config_hash: config_hash(params),
        input: params.corpus.clone(),
        total_records: total,
        removed_non_ascii: quality.removed_non_ascii,
        removed_duplicate: quality.removed_duplicate,
        removed_short: filter.removed,
        kept: kept.len(),
        removal_fraction: if total == 0 {
            0.0
        } else {
            (total - kept.len()) as f64 / total as f64
        },
        min_tokens: params.min_tokens,
    };
    write_json(&params.out.join("ingest_report.json"), &report)?;
    log::info!(
        "ingested {} of {} posts ({}% removed)",
        kept.len(),
        total,
        (report.removal_fraction * 100.0).round()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// split
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct SplitParams {
    pub corpus: PathBuf,
    pub ratios: (f64, f64, f64),
    pub balance_threshold: f64,
    pub seed: u64,
    pub out: PathBuf,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SplitReport {
    pub seed: u64,
    pub config_hash: String,
    pub authors: usize,
    pub balance: corpus::BalanceReport,
}

/// Computes the author-disjoint split and verifies class balance.
pub fn cmd_split(params: &SplitParams) -> Result<()> {
    require_file(&params.corpus, "run `anxscreen ingest` first")?;
    let posts = load_corpus(&params.corpus, CorpusFormat::Jsonl)?;
    let assignment = author_disjoint_split(&posts, params.ratios, params.seed)?;
    let balance = verify_balance(&posts, &assignment, params.balance_threshold)?;
    if balance.flagged {
        log::warn!(
            "class balance gap {:.4} exceeds threshold {:.4}",
            balance.max_gap,
            balance.threshold
        );
    }
    ensure_out_dir(&params.out)?;
    let split_path = params.out.join("split.csv");
    let tmp = split_path.with_extension("csv.tmp");
    assignment.write_csv(&tmp)?;
    std::fs::rename(&tmp, &split_path).map_err(|e| Error::io(&split_path, e))?;
    let report = SplitReport {
        seed: params.seed,
        config_hash: config_hash(params),
        authors: assignment.len(),
        balance,
    };
    write_json(&params.out.join("balance_report.json"), &report)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// featurize
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Default, Serialize)]
pub struct LexiconParams {
    pub valence: Option<PathBuf>,
    pub boosters: Option<PathBuf>,
    pub negations: Option<PathBuf>,
    pub polarity: Option<PathBuf>,
}

impl LexiconParams {
    /// Bundled demo lexicons fill in for any unspecified file.
    pub fn resolve(&self) -> Result<(ValenceLexicon, PolarityLexicon)> {
        let read = |p: &PathBuf| std::fs::read_to_string(p).map_err(|e| Error::io(p, e));
        let valence = match (&self.valence, &self.boosters, &self.negations) {
            (None, None, None) => ValenceLexicon::demo(),
            (Some(v), b, n) => {
                let boosters = match b {
                    Some(p) => read(p)?,
                    None => String::new(),
                };
                let negations = match n {
                    Some(p) => read(p)?,
                    None => String::new(),
                };
                ValenceLexicon::parse(&read(v)?, &boosters, &negations)?
            }
            _ => {
                return Err(Error::Invalid(
                    "booster/negation lexicons need --valence-lexicon as well".into(),
                ))
            }
        };
        let polarity = match &self.polarity {
            Some(p) => PolarityLexicon::parse(&read(p)?)?,
            None => PolarityLexicon::demo(),
        };
        Ok((valence, polarity))
    }
}

/// `--mask-keywords` value: a path, or the literal `default` for the bundled
/// list.
pub fn resolve_keywords(spec: &str) -> Result<KeywordList> {
    if spec == "default" {
        Ok(KeywordList::default_builtin())
    } else {
        masking::load_keywords(Path::new(spec))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FeaturizeParams {
    pub corpus: PathBuf,
    pub split: PathBuf,
    pub lexicons: LexiconParams,
    pub mask_keywords: Option<String>,
    pub threads: usize,
    pub seed: u64,
    pub out: PathBuf,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct FeaturizeReport {
    pub seed: u64,
    pub config_hash: String,
    pub posts: usize,
    pub masked: bool,
    pub feature_names: Vec<String>,
}

/// Extracts the feature matrix (optionally masking keywords first) and fits
/// the train-partition standardizer.
pub fn cmd_featurize(params: &FeaturizeParams) -> Result<()> {
    require_file(&params.corpus, "run `anxscreen ingest` first")?;
    require_file(&params.split, "run `anxscreen split` first")?;
    let mut posts = load_corpus(&params.corpus, CorpusFormat::Jsonl)?;
    let assignment = SplitAssignment::read_csv(&params.split)?;
    let masked = match &params.mask_keywords {
        Some(spec) => {
            let keywords = resolve_keywords(spec)?;
            for post in &mut posts {
                post.text = masking::mask_text(&post.text, &keywords, masking::MASK_TOKEN);
            }
            true
        }
        None => false,
    };
    let (valence, polarity) = params.lexicons.resolve()?;
    let sentiment_cfg = SentimentConfig::default();
    let rows = extract_all(&posts, &assignment, &valence, &polarity, &sentiment_cfg, params.threads)?;
    ensure_out_dir(&params.out)?;
    let matrix_path = params.out.join("features.csv");
    let tmp = matrix_path.with_extension("csv.tmp");
    features::write_matrix_csv(&rows, &tmp)?;
    std::fs::rename(&tmp, &matrix_path).map_err(|e| Error::io(&matrix_path, e))?;
    // train-partition standardizer rides along for audit and reuse
    let train_rows: Vec<Vec<f64>> = rows
        .iter()
        .filter(|r| r.partition == Partition::Train)
        .map(|r| r.values.to_vec())
        .collect();
    let names: Vec<String> = FEATURE_NAMES.iter().map(|s| s.to_string()).collect();
    let standardizer = fit_standardizer(&train_rows, &names, "train")?;
    standardizer.write_json(&params.out.join("standardizer.json.tmp"))?;
    std::fs::rename(
        params.out.join("standardizer.json.tmp"),
        params.out.join("standardizer.json"),
    )
    .map_err(|e| Error::io(params.out.join("standardizer.json"), e))?;
    let report = FeaturizeReport {
        seed: params.seed,
        config_hash: config_hash(params),
        posts: rows.len(),
        masked,
        feature_names: names,
    };
    write_json(&params.out.join("featurize_report.json"), &report)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct TrainParams {
    pub features: PathBuf,
    pub train: TrainConfig,
    pub calibrate: bool,
    pub folds: usize,
    pub out: PathBuf,
}

/// Trains the full model on the train partition; with `calibrate`, fits a
/// Platt calibrator on pooled out-of-fold decision scores from k-fold
/// cross-validation over the training rows.
pub fn cmd_train(params: &TrainParams) -> Result<()> {
    require_file(&params.features, "run `anxscreen featurize` first")?;
    let rows = features::read_matrix_csv(&params.features)?;
    let train_rows: Vec<&PostFeatures> = rows
        .iter()
        .filter(|r| r.partition == Partition::Train)
        .collect();
    if train_rows.is_empty() {
        return Err(Error::Insufficient("no training rows in feature matrix".into()));
    }
    let names: Vec<String> = FEATURE_NAMES.iter().map(|s| s.to_string()).collect();
    let x: Vec<Vec<f64>> = train_rows.iter().map(|r| r.values.to_vec()).collect();
    let y: Vec<u8> = train_rows.iter().map(|r| r.label).collect();
    let mut trained = model::fit(&x, &y, &params.train, &names, "train")?;
    if params.calibrate {
        let calibrator = cross_fit_calibrator(&x, &y, &params.train, &names, params.folds)?;
        trained.calibrator = Some(calibrator);
    }
    ensure_out_dir(&params.out)?;
    let path = params.out.join("model.json");
    let tmp = path.with_extension("json.tmp");
    trained.write_json(&tmp)?;
    std::fs::rename(&tmp, &path).map_err(|e| Error::io(&path, e))?;
    #[derive(Serialize)]
    struct TrainReport {
        seed: u64,
        config_hash: String,
        rows: usize,
        iterations: usize,
        final_loss: f64,
        converged: bool,
        calibrated: bool,
    }
    let report = TrainReport {
        seed: params.train.seed,
        config_hash: config_hash(params),
        rows: x.len(),
        iterations: trained.training.iterations,
        final_loss: trained.training.final_loss,
        converged: trained.training.converged,
        calibrated: params.calibrate,
    };
    write_json(&params.out.join("train_report.json"), &report)?;
    Ok(())
}

/// K-fold cross-fit: per fold, train on the complement (standardizer refit
/// per fold), score the held-out rows, pool everything, then fit Platt
/// parameters on the pooled out-of-fold scores.
fn cross_fit_calibrator(
    x: &[Vec<f64>],
    y: &[u8],
    cfg: &TrainConfig,
    names: &[String],
    folds: usize,
) -> Result<eval::PlattCalibrator> {
    if folds < 2 {
        return Err(Error::Invalid("calibration needs at least 2 folds".into()));
    }
    let n = x.len();
    if n < folds * 2 {
        return Err(Error::Insufficient(format!(
            "calibration needs at least {} rows for {} folds",
            folds * 2,
            folds
        )));
    }
    // deterministic shuffled fold assignment
    use rand::{Rng, SeedableRng};
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(cfg.seed);
    for i in (1..n).rev() {
        let j = rng.gen_range(0..=i);
        order.swap(i, j);
    }
    let mut oof_scores = vec![0.0f64; n];
    let mut covered = vec![false; n];
    for fold in 0..folds {
        let mut x_fit = Vec::new();
        let mut y_fit = Vec::new();
        let mut held = Vec::new();
        for (pos, &idx) in order.iter().enumerate() {
            if pos % folds == fold {
                held.push(idx);
            } else {
                x_fit.push(x[idx].clone());
                y_fit.push(y[idx]);
            }
        }
        let fold_model = model::fit(&x_fit, &y_fit, cfg, names, "train-fold")?;
        for idx in held {
            oof_scores[idx] = fold_model.decision_score(&x[idx]);
            covered[idx] = true;
        }
    }
    debug_assert!(covered.iter().all(|c| *c));
    eval::platt_fit(&oof_scores, y, folds, cfg.seed)
}

// ---------------------------------------------------------------------------
// evaluate
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct EvaluateParams {
    pub features: PathBuf,
    pub model: PathBuf,
    pub partition: Partition,
    pub bootstrap: usize,
    pub alpha: f64,
    pub threshold: f64,
    pub ece_bins: usize,
    pub seed: u64,
    pub out: PathBuf,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct EvalReport {
    pub seed: u64,
    pub config_hash: String,
    pub partition: Partition,
    pub n: usize,
    pub confusion: ConfusionMatrix,
    pub metrics: MetricSet,
    pub specificity: f64,
    pub npv: f64,
    pub calibration: CalibrationReport,
    pub threshold: f64,
}

/// Evaluates a model on one partition: metrics with bootstrap intervals,
/// the ROC point file, and the calibration table.
pub fn cmd_evaluate(params: &EvaluateParams) -> Result<()> {
    require_file(&params.features, "run `anxscreen featurize` first")?;
    require_file(&params.model, "run `anxscreen train` first")?;
    let rows = features::read_matrix_csv(&params.features)?;
    let trained = LogisticModel::read_json(&params.model)?;
    let eval_rows: Vec<&PostFeatures> = rows
        .iter()
        .filter(|r| r.partition == params.partition)
        .collect();
    if eval_rows.is_empty() {
        return Err(Error::Insufficient(format!(
            "no rows in partition {}",
            params.partition
        )));
    }
    let labels: Vec<u8> = eval_rows.iter().map(|r| r.label).collect();
    let probs: Vec<f64> = eval_rows
        .iter()
        .map(|r| trained.predict_proba(&r.values))
        .collect();
    let preds: Vec<u8> = probs.iter().map(|p| u8::from(*p >= params.threshold)).collect();
    let cm = eval::confusion(&labels, &preds)?;
    let mut metrics = eval::metrics(&cm);
    metrics.auc = Some(eval::roc_auc(&labels, &probs)?);

    let preds_f: Vec<f64> = preds.iter().map(|p| f64::from(*p)).collect();
    let b = params.bootstrap;
    if b > 0 {
        let ci = |m: BootstrapCi| Interval { lo: m.lo, hi: m.hi };
        metrics.accuracy_ci = Some(ci(eval::bootstrap_ci(
            &labels,
            &preds_f,
            eval::accuracy_of,
            b,
            params.alpha,
            params.seed,
        )?));
        metrics.precision_ci = Some(ci(eval::bootstrap_ci(
            &labels,
            &preds_f,
            |y, p| {
                let (mut tp, mut fp) = (0u64, 0u64);
                for (yi, pi) in y.iter().zip(p) {
                    if *pi == 1.0 {
                        if *yi == 1 {
                            tp += 1;
                        } else {
                            fp += 1;
                        }
                    }
                }
                (tp + fp > 0).then(|| tp as f64 / (tp + fp) as f64)
            },
            b,
            params.alpha,
            params.seed.wrapping_add(1),
        )?));
        metrics.recall_ci = Some(ci(eval::bootstrap_ci(
            &labels,
            &preds_f,
            |y, p| {
                let (mut tp, mut fn_) = (0u64, 0u64);
                for (yi, pi) in y.iter().zip(p) {
                    if *yi == 1 {
                        if *pi == 1.0 {
                            tp += 1;
                        } else {
                            fn_ += 1;
                        }
                    }
                }
                (tp + fn_ > 0).then(|| tp as f64 / (tp + fn_) as f64)
            },
            b,
            params.alpha,
            params.seed.wrapping_add(2),
        )?));
        metrics.f1_ci = Some(ci(eval::bootstrap_ci(
            &labels,
            &preds_f,
            |y, p| {
                let (mut tp, mut fp, mut fn_) = (0u64, 0u64, 0u64);
                for (yi, pi) in y.iter().zip(p) {
                    match (*yi, *pi == 1.0) {
                        (1, true) => tp += 1,
                        (0, true) => fp += 1,
                        (1, false) => fn_ += 1,
                        _ => {}
                    }
                }
                if tp + fp == 0 || tp + fn_ == 0 {
                    return None;
                }
                let prec = tp as f64 / (tp + fp) as f64;
                let rec = tp as f64 / (tp + fn_) as f64;
                if prec + rec == 0.0 {
                    None
                } else {
                    Some(2.0 * prec * rec / (prec + rec))
                }
            },
            b,
            params.alpha,
            params.seed.wrapping_add(3),
        )?));
        metrics.auc_ci = Some(ci(eval::bootstrap_ci(
            &labels,
            &probs,
            |y, s| eval::roc_auc(y, s).ok(),
            b,
            params.alpha,
            params.seed.wrapping_add(4),
        )?));
    }
    let calibration = eval::ece(&labels, &probs, params.ece_bins)?;
    ensure_out_dir(&params.out)?;
    // ROC points for external plotting
    let points = eval::roc_curve(&labels, &probs)?;
    let mut roc_csv = String::from("fpr,tpr,threshold\n");
    for p in &points {
        roc_csv.push_str(&format!(
            "{},{},{}\n",
            format_float(p.fpr),
            format_float(p.tpr),
            format_float(p.threshold)
        ));
    }
    atomic_write(&params.out.join("roc.csv"), roc_csv.as_bytes())?;
    let report = EvalReport {
        seed: params.seed,
        config_hash: config_hash(params),
        partition: params.partition,
        n: labels.len(),
        confusion: cm,
        specificity: cm.specificity(),
        npv: cm.npv(),
        metrics,
        calibration,
        threshold: params.threshold,
    };
    write_json(&params.out.join("eval_report.json"), &report)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// ablate / mask
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct AblateParams {
    pub features: PathBuf,
    pub subsets: Option<PathBuf>,
    pub experiment: ExperimentConfig,
    pub out: PathBuf,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct AblationReport {
    pub seed: u64,
    pub config_hash: String,
    pub table: AblationTable,
}

fn load_subsets_or_default(path: &Option<PathBuf>) -> Result<Vec<FeatureSubsetSpec>> {
    match path {
        Some(p) => experiments::load_subsets(p),
        None => Ok(experiments::default_subsets()),
    }
}

fn write_ablation_summary(table: &AblationTable, path: &Path) -> Result<()> {
    let mut csv = String::from("feature_set,f1,delta_f1\n");
    for row in &table.rows {
        csv.push_str(&format!(
            "{},{},{}\n",
            row.subset,
            format_float(row.metrics.f1),
            format_float(row.delta_f1)
        ));
    }
    atomic_write(path, csv.as_bytes())
}

/// Feature-subset ablation on an existing feature matrix.
pub fn cmd_ablate(params: &AblateParams) -> Result<()> {
    require_file(&params.features, "run `anxscreen featurize` first")?;
    let rows = features::read_matrix_csv(&params.features)?;
    let subsets = load_subsets_or_default(&params.subsets)?;
    let table = experiments::run_ablation(&rows, &subsets, &params.experiment)?;
    ensure_out_dir(&params.out)?;
    let report = AblationReport {
        seed: params.experiment.seed,
        config_hash: config_hash(params),
        table,
    };
    write_json(&params.out.join("ablation.json"), &report)?;
    write_ablation_summary(&report.table, &params.out.join("ablation_summary.csv"))?;
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct MaskParams {
    pub corpus: PathBuf,
    pub split: PathBuf,
    pub lexicons: LexiconParams,
    pub mask_keywords: Option<String>,
    pub subsets: Option<PathBuf>,
    pub experiment: ExperimentConfig,
    pub threads: usize,
    pub out: PathBuf,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct MaskingReport {
    pub seed: u64,
    pub config_hash: String,
    pub keywords: usize,
    pub prevalence_before: PrevalenceReport,
    pub prevalence_after: PrevalenceReport,
    pub table: AblationTable,
}

/// Masks the corpus, re-extracts features, and reruns the ablation table;
/// also reports per-class keyword prevalence before and after masking.
pub fn cmd_mask(params: &MaskParams) -> Result<()> {
    require_file(&params.corpus, "run `anxscreen ingest` first")?;
    require_file(&params.split, "run `anxscreen split` first")?;
    let posts = load_corpus(&params.corpus, CorpusFormat::Jsonl)?;
    let assignment = SplitAssignment::read_csv(&params.split)?;
    let keywords = match &params.mask_keywords {
        Some(spec) => resolve_keywords(spec)?,
        None => KeywordList::default_builtin(),
    };
    let subsets = load_subsets_or_default(&params.subsets)?;
    let (valence, polarity) = params.lexicons.resolve()?;
    let sentiment_cfg = SentimentConfig::default();
    let prevalence_before = experiments::keyword_prevalence(&posts, &keywords);
    let masked: Vec<Post> = posts
        .iter()
        .map(|p| Post {
            text: masking::mask_text(&p.text, &keywords, masking::MASK_TOKEN),
            ..p.clone()
        })
        .collect();
    let prevalence_after = experiments::keyword_prevalence(&masked, &keywords);
    let rows = extract_all(&masked, &assignment, &valence, &polarity, &sentiment_cfg, params.threads)?;
    let table = experiments::run_ablation(&rows, &subsets, &params.experiment)?;
    ensure_out_dir(&params.out)?;
    let report = MaskingReport {
        seed: params.experiment.seed,
        config_hash: config_hash(params),
        keywords: keywords.len(),
        prevalence_before,
        prevalence_after,
        table,
    };
    write_json(&params.out.join("masking.json"), &report)?;
    write_ablation_summary(&report.table, &params.out.join("masking_summary.csv"))?;
    Ok(())
}

// ---------------------------------------------------------------------------
// early
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct EarlyParams {
    pub features: PathBuf,
    pub corpus: PathBuf,
    pub k: Vec<usize>,
    pub experiment: ExperimentConfig,
    pub out: PathBuf,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct EarlyReport {
    pub seed: u64,
    pub config_hash: String,
    pub run: EarlySliceRun,
}

/// User-level early-slice detection. Author and timestamp are joined back
/// from the corpus by post id (the feature matrix schema carries neither).
pub fn cmd_early(params: &EarlyParams) -> Result<()> {
    require_file(&params.features, "run `anxscreen featurize` first")?;
    require_file(&params.corpus, "run `anxscreen ingest` first")?;
    let mut rows = features::read_matrix_csv(&params.features)?;
    let posts = load_corpus(&params.corpus, CorpusFormat::Jsonl)?;
    let by_id: HashMap<&str, &Post> = posts.iter().map(|p| (p.id.as_str(), p)).collect();
    for row in &mut rows {
        let post = by_id.get(row.id.as_str()).ok_or_else(|| {
            Error::Invalid(format!(
                "post {:?} in feature matrix but not in corpus (featurize and corpus out of sync)",
                row.id
            ))
        })?;
        row.author = post.author.clone();
        row.timestamp = post.timestamp;
    }
    let run = experiments::run_early_slice(&rows, &params.k, &params.experiment)?;
    ensure_out_dir(&params.out)?;
    let report = EarlyReport {
        seed: params.experiment.seed,
        config_hash: config_hash(params),
        run,
    };
    write_json(&params.out.join("early.json"), &report)?;
    let mut csv = String::from("k,f1,delta_f1,precision\n");
    for r in &report.run.results {
        csv.push_str(&format!(
            "{},{},{},{}\n",
            r.k,
            format_float(r.metrics.f1),
            format_float(r.delta_f1_vs_full),
            format_float(r.metrics.precision)
        ));
    }
    atomic_write(&params.out.join("early_summary.csv"), csv.as_bytes())?;
    Ok(())
}

// ---------------------------------------------------------------------------
// crossdomain
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct CrossDomainParams {
    pub features_a: PathBuf,
    pub features_b: PathBuf,
    pub name_a: String,
    pub name_b: String,
    pub alpha: f64,
    pub include_emoji: bool,
    pub seed: u64,
    pub out: PathBuf,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CrossDomainFileReport {
    pub seed: u64,
    pub config_hash: String,
    pub report: CrossDomainReport,
}

fn write_crossdomain_csv(report: &CrossDomainReport, path: &Path) -> Result<()> {
    let mut csv = String::from("feature,direction_a,direction_b,consistent,hedges_g\n");
    for row in &report.consistency.rows {
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            row.feature,
            row.direction_a.as_str(),
            row.direction_b.as_str(),
            if row.consistent { "yes" } else { "no" },
            row.g_display.map(format_float).unwrap_or_default()
        ));
    }
    atomic_write(path, csv.as_bytes())
}

/// Two-domain feature-consistency analysis over two feature matrices
/// (partitions in the files are ignored; each domain is compared whole).
pub fn cmd_crossdomain(params: &CrossDomainParams) -> Result<()> {
    require_file(&params.features_a, "run `anxscreen featurize` for domain A first")?;
    require_file(&params.features_b, "run `anxscreen featurize` for domain B first")?;
    let rows_a = features::read_matrix_csv(&params.features_a)?;
    let rows_b = features::read_matrix_csv(&params.features_b)?;
    let feature_names: Vec<String> = if params.include_emoji {
        FEATURE_NAMES.iter().map(|s| s.to_string()).collect()
    } else {
        experiments::cross_domain_default_features()
    };
    let report = experiments::run_cross_domain(
        (params.name_a.as_str(), &rows_a),
        (params.name_b.as_str(), &rows_b),
        params.alpha,
        &feature_names,
    )?;
    ensure_out_dir(&params.out)?;
    let file_report = CrossDomainFileReport {
        seed: params.seed,
        config_hash: config_hash(params),
        report,
    };
    write_json(&params.out.join("crossdomain.json"), &file_report)?;
    write_crossdomain_csv(&file_report.report, &params.out.join("crossdomain.csv"))?;
    Ok(())
}

// ---------------------------------------------------------------------------
// report
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct ReportParams {
    pub results: PathBuf,
    pub out: PathBuf,
}

/// Consolidates a results directory: coefficient table (sorted by
/// magnitude), metric summary, and the plot-ready CSVs for whatever runs are
/// present.
pub fn cmd_report(params: &ReportParams) -> Result<()> {
    let dir = &params.results;
    let model_path = dir.join("model.json");
    let eval_path = dir.join("eval_report.json");
    require_file(&model_path, "run `anxscreen train --out <results>` first")?;
    require_file(&eval_path, "run `anxscreen evaluate --out <results>` first")?;
    let trained = LogisticModel::read_json(&model_path)?;
    let eval_report: EvalReport = read_json(&eval_path, "run `anxscreen evaluate` first")?;
    ensure_out_dir(&params.out)?;

    let coefficients = trained.coefficients_report();
    let mut coef_csv = String::from("feature,coefficient\n");
    for (name, value) in &coefficients {
        coef_csv.push_str(&format!("{},{}\n", name, format_float(*value)));
    }
    atomic_write(&params.out.join("coefficients.csv"), coef_csv.as_bytes())?;

    let roc_src = dir.join("roc.csv");
    if roc_src.is_file() && roc_src != params.out.join("roc.csv") {
        let bytes = std::fs::read(&roc_src).map_err(|e| Error::io(&roc_src, e))?;
        atomic_write(&params.out.join("roc.csv"), &bytes)?;
    }

    let ablation: Option<AblationReport> = dir
        .join("ablation.json")
        .is_file()
        .then(|| read_json(&dir.join("ablation.json"), ""))
        .transpose()?;
    if let Some(ab) = &ablation {
        write_ablation_summary(&ab.table, &params.out.join("ablation_deltas.csv"))?;
    }
    let masking_report: Option<MaskingReport> = dir
        .join("masking.json")
        .is_file()
        .then(|| read_json(&dir.join("masking.json"), ""))
        .transpose()?;
    let early: Option<EarlyReport> = dir
        .join("early.json")
        .is_file()
        .then(|| read_json(&dir.join("early.json"), ""))
        .transpose()?;
    if let Some(e) = &early {
        let mut csv = String::from("k,f1,delta_f1,precision\n");
        for r in &e.run.results {
            csv.push_str(&format!(
                "{},{},{},{}\n",
                r.k,
                format_float(r.metrics.f1),
                format_float(r.delta_f1_vs_full),
                format_float(r.metrics.precision)
            ));
        }
        atomic_write(&params.out.join("early_curve.csv"), csv.as_bytes())?;
    }
    let crossdomain: Option<CrossDomainFileReport> = dir
        .join("crossdomain.json")
        .is_file()
        .then(|| read_json(&dir.join("crossdomain.json"), ""))
        .transpose()?;
    if let Some(cd) = &crossdomain {
        write_crossdomain_csv(&cd.report, &params.out.join("crossdomain.csv"))?;
    }

    #[derive(Serialize)]
    struct Consolidated {
        seed: u64,
        config_hash: String,
        coefficients: Vec<(String, f64)>,
        evaluation: EvalReport,
        #[serde(skip_serializing_if = "Option::is_none")]
        ablation: Option<AblationReport>,
        #[serde(skip_serializing_if = "Option::is_none")]
        masking: Option<MaskingReport>,
        #[serde(skip_serializing_if = "Option::is_none")]
        early: Option<EarlyReport>,
        #[serde(skip_serializing_if = "Option::is_none")]
        crossdomain: Option<CrossDomainFileReport>,
    }
    let consolidated = Consolidated {
        seed: eval_report.seed,
        config_hash: config_hash(params),
        coefficients,
        evaluation: eval_report,
        ablation,
        masking: masking_report,
        early,
        crossdomain,
    };
    write_json(&params.out.join("consolidated.json"), &consolidated)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_hash_is_deterministic_and_sensitive() {
        let a = DemoParams {
            posts: 10,
            seed: 1,
            control_authors: false,
            out: PathBuf::from("x.jsonl"),
        };
        let b = DemoParams { seed: 2, ..a.clone() };
        assert_eq!(config_hash(&a), config_hash(&a));
        assert_ne!(config_hash(&a), config_hash(&b));
        assert_eq!(config_hash(&a).len(), 16);
    }

    #[test]
    fn run_config_rejects_unknown_keys() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfg.toml");
        std::fs::write(&path, "seed = 7\nbogus_key = 1\n").unwrap();
        assert!(RunConfig::load(&path).is_err());
        std::fs::write(&path, "seed = 7\nthreads = 2\n").unwrap();
        let cfg = RunConfig::load(&path).unwrap();
        assert_eq!(cfg.seed, Some(7));
        assert_eq!(cfg.threads, Some(2));
    }

    #[test]
    fn demo_ingest_split_pipeline() {
        let dir = tempfile::tempdir().unwrap();
        let corpus = dir.path().join("demo.jsonl");
        cmd_demo(&DemoParams {
            posts: 300,
            seed: 42,
            control_authors: false,
            out: corpus.clone(),
        })
        .unwrap();
        let out = dir.path().join("run");
        cmd_ingest(&IngestParams {
            corpus,
            format: "jsonl".into(),
            min_tokens: 10,
            drop_non_ascii: true,
            drop_duplicates: true,
            seed: 42,
            out: out.clone(),
        })
        .unwrap();
        let report: IngestReport =
            read_json(&out.join("ingest_report.json"), "").unwrap();
        assert!(report.kept > 250, "kept {}", report.kept);
        cmd_split(&SplitParams {
            corpus: out.join("corpus.jsonl"),
            ratios: (0.70, 0.15, 0.15),
            balance_threshold: 0.05,
            seed: 42,
            out: out.clone(),
        })
        .unwrap();
        assert!(out.join("split.csv").is_file());
        assert!(out.join("balance_report.json").is_file());
        let assignment = SplitAssignment::read_csv(&out.join("split.csv")).unwrap();
        assert!(assignment.len() > 100);
    }

    #[test]
    fn missing_artifacts_give_remediation_hints() {
        let dir = tempfile::tempdir().unwrap();
        let err = cmd_split(&SplitParams {
            corpus: dir.path().join("nope.jsonl"),
            ratios: (0.70, 0.15, 0.15),
            balance_threshold: 0.05,
            seed: 1,
            out: dir.path().to_path_buf(),
        })
        .unwrap_err();
        assert!(err.to_string().contains("ingest"), "{err}");
    }
}
