use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use anxscreen::cli::{self, LexiconParams, RunConfig};
use anxscreen::corpus::Partition;
use anxscreen::error::Error;
use anxscreen::experiments::ExperimentConfig;
use anxscreen::model::{ClassWeight, TrainConfig};

/// Interpretable text-screening pipeline: ingest, split, featurize, train,
/// evaluate, and the robustness experiments, as rerunnable file-based steps.
#[derive(Parser)]
#[command(name = "anxscreen", version, disable_help_subcommand = true)]
struct Cli {
    /// TOML config file; command-line flags override its values.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Run seed recorded in every output.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for feature extraction (0 = all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory (or file, for `demo`).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Log level: error, warn, info, debug, trace.
    #[arg(long, global = true)]
    log_level: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct LexiconArgs {
    /// Valence lexicon TSV (term<TAB>valence); bundled demo lexicon if unset.
    #[arg(long, value_name = "PATH")]
    valence_lexicon: Option<PathBuf>,
    /// Booster TSV (term<TAB>increment).
    #[arg(long, value_name = "PATH")]
    booster_lexicon: Option<PathBuf>,
    /// Negation list (one term per line).
    #[arg(long, value_name = "PATH")]
    negation_list: Option<PathBuf>,
    /// Polarity lexicon TSV (term<TAB>polarity<TAB>subjectivity).
    #[arg(long, value_name = "PATH")]
    polarity_lexicon: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct TrainArgs {
    /// Inverse regularization strength C.
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    max_iterations: Option<usize>,
    /// Convergence tolerance on the gradient max-norm.
    #[arg(long)]
    tolerance: Option<f64>,
    /// Class weighting: uniform or balanced.
    #[arg(long)]
    class_weight: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic demo corpus (JSONL).
    Demo {
        /// Number of posts.
        #[arg(long, default_value_t = 2000)]
        posts: usize,
        /// Give control posts stable author ids too.
        #[arg(long)]
        control_authors: bool,
    },
    /// Validate and filter a corpus into the canonical JSONL layout.
    Ingest {
        /// Corpus file (JSONL or CSV).
        #[arg(long, value_name = "PATH")]
        corpus: Option<PathBuf>,
        /// Corpus format: jsonl or csv.
        #[arg(long)]
        format: Option<String>,
        /// Minimum token count per post.
        #[arg(long)]
        min_tokens: Option<usize>,
        /// Disable the non-ASCII-letter heuristic filter.
        #[arg(long)]
        keep_non_ascii: bool,
        /// Disable the exact-duplicate filter.
        #[arg(long)]
        keep_duplicates: bool,
    },
    /// Author-disjoint train/validation/test split with balance check.
    Split {
        #[arg(long, value_name = "PATH")]
        corpus: Option<PathBuf>,
        /// Comma-separated train,validation,test ratios.
        #[arg(long, value_name = "R,R,R")]
        ratios: Option<String>,
        /// Balance gap threshold for the flag in the report.
        #[arg(long)]
        balance_threshold: Option<f64>,
    },
    /// Extract the 13-feature matrix and the train-fit standardizer.
    Featurize {
        #[arg(long, value_name = "PATH")]
        corpus: Option<PathBuf>,
        /// Split manifest CSV.
        #[arg(long, value_name = "PATH")]
        split: Option<PathBuf>,
        #[command(flatten)]
        lexicons: LexiconArgs,
        /// Mask keywords before extraction: a keyword file path, or
        /// `default` for the bundled list.
        #[arg(long, value_name = "PATH|default")]
        mask_keywords: Option<String>,
    },
    /// Train the logistic model on the train partition.
    Train {
        /// Feature matrix CSV.
        #[arg(long, value_name = "PATH")]
        features: Option<PathBuf>,
        #[command(flatten)]
        train: TrainArgs,
        /// Fit a Platt calibrator on pooled out-of-fold scores.
        #[arg(long)]
        calibrate: bool,
        /// Cross-validation folds for calibration.
        #[arg(long)]
        folds: Option<usize>,
    },
    /// Evaluate a trained model on one partition.
    Evaluate {
        #[arg(long, value_name = "PATH")]
        features: Option<PathBuf>,
        #[arg(long, value_name = "PATH")]
        model: Option<PathBuf>,
        /// Partition to evaluate: train, validation, or test.
        #[arg(long, default_value = "test")]
        partition: String,
        /// Bootstrap resamples for confidence intervals (0 disables).
        #[arg(long)]
        bootstrap: Option<usize>,
        /// Interval miss probability (0.05 gives 95% intervals).
        #[arg(long)]
        alpha: Option<f64>,
        /// Decision threshold on the predicted probability.
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Feature-subset ablation study.
    Ablate {
        #[arg(long, value_name = "PATH")]
        features: Option<PathBuf>,
        /// Subset spec TOML; bundled five-subset spec if unset.
        #[arg(long, value_name = "PATH")]
        subsets: Option<PathBuf>,
    },
    /// Keyword-masking study (mask, re-extract, rerun the ablation table).
    Mask {
        #[arg(long, value_name = "PATH")]
        corpus: Option<PathBuf>,
        #[arg(long, value_name = "PATH")]
        split: Option<PathBuf>,
        #[command(flatten)]
        lexicons: LexiconArgs,
        /// Keyword file path or `default`.
        #[arg(long, value_name = "PATH|default")]
        mask_keywords: Option<String>,
        #[arg(long, value_name = "PATH")]
        subsets: Option<PathBuf>,
    },
    /// Early-slice user-level detection from each user's first k posts.
    Early {
        #[arg(long, value_name = "PATH")]
        features: Option<PathBuf>,
        #[arg(long, value_name = "PATH")]
        corpus: Option<PathBuf>,
        /// Comma-separated k values, e.g. 3,5,10.
        #[arg(long, value_name = "K,K,...")]
        k: Option<String>,
    },
    /// Cross-domain feature-consistency analysis of two feature matrices.
    Crossdomain {
        #[arg(long, value_name = "PATH")]
        features_a: Option<PathBuf>,
        #[arg(long, value_name = "PATH")]
        features_b: Option<PathBuf>,
        /// Display name for domain A.
        #[arg(long, default_value = "domain_a")]
        name_a: String,
        /// Display name for domain B.
        #[arg(long, default_value = "domain_b")]
        name_b: String,
        #[arg(long)]
        alpha: Option<f64>,
        /// Keep emoji_count in the comparison (excluded by default).
        #[arg(long)]
        include_emoji: bool,
    },
    /// Consolidate a results directory into plot-ready tables.
    Report {
        /// Directory holding the artifacts of earlier commands.
        #[arg(long, value_name = "DIR")]
        results: Option<PathBuf>,
    },
}

fn parse_ratios(s: &str) -> Result<(f64, f64, f64), Error> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err(Error::Invalid(format!(
            "--ratios wants three comma-separated numbers, got {s:?}"
        )));
    }
    let mut vals = [0.0f64; 3];
    for (v, p) in vals.iter_mut().zip(&parts) {
        *v = p
            .trim()
            .parse()
            .map_err(|_| Error::Invalid(format!("bad ratio {p:?}")))?;
    }
    Ok((vals[0], vals[1], vals[2]))
}

fn parse_k_list(s: &str) -> Result<Vec<usize>, Error> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<usize>()
                .map_err(|_| Error::Invalid(format!("bad k value {p:?}")))
        })
        .collect()
}

fn parse_class_weight(s: &str) -> Result<ClassWeight, Error> {
    match s {
        "uniform" => Ok(ClassWeight::Uniform),
        "balanced" => Ok(ClassWeight::Balanced),
        other => Err(Error::Invalid(format!(
            "class_weight must be uniform or balanced, got {other:?}"
        ))),
    }
}

struct Resolved {
    cfg: RunConfig,
    seed: u64,
    threads: usize,
    out: PathBuf,
}

fn resolve_common(cli: &Cli) -> Result<Resolved, Error> {
    let cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let seed = cli.seed.or(cfg.seed).unwrap_or(42);
    let threads = cli.threads.or(cfg.threads).unwrap_or(0);
    let out = cli
        .out
        .clone()
        .or(cfg.out.clone())
        .unwrap_or_else(|| PathBuf::from("runs/out"));
    Ok(Resolved {
        cfg,
        seed,
        threads,
        out,
    })
}

fn lexicon_params(args: &LexiconArgs, cfg: &RunConfig) -> LexiconParams {
    LexiconParams {
        valence: args.valence_lexicon.clone().or(cfg.valence_lexicon.clone()),
        boosters: args.booster_lexicon.clone().or(cfg.booster_lexicon.clone()),
        negations: args.negation_list.clone().or(cfg.negation_list.clone()),
        polarity: args.polarity_lexicon.clone().or(cfg.polarity_lexicon.clone()),
    }
}

fn train_config(args: &TrainArgs, cfg: &RunConfig, seed: u64) -> Result<TrainConfig, Error> {
    let defaults = TrainConfig::default();
    let class_weight = match args.class_weight.as_deref().or(cfg.class_weight.as_deref()) {
        Some(s) => parse_class_weight(s)?,
        None => defaults.class_weight,
    };
    Ok(TrainConfig {
        c: args.c.or(cfg.c).unwrap_or(defaults.c),
        max_iterations: args
            .max_iterations
            .or(cfg.max_iterations)
            .unwrap_or(defaults.max_iterations),
        tolerance: args.tolerance.or(cfg.tolerance).unwrap_or(defaults.tolerance),
        class_weight,
        seed,
    })
}

fn experiment_config(cfg: &RunConfig, seed: u64) -> Result<ExperimentConfig, Error> {
    let train = train_config(
        &TrainArgs {
            c: None,
            max_iterations: None,
            tolerance: None,
            class_weight: None,
        },
        cfg,
        seed,
    )?;
    Ok(ExperimentConfig {
        train,
        threshold: cfg.threshold.unwrap_or(0.5),
        seed,
    })
}

fn required_path(
    flag: Option<PathBuf>,
    cfg_value: Option<PathBuf>,
    name: &str,
) -> Result<PathBuf, Error> {
    flag.or(cfg_value).ok_or_else(|| {
        Error::Invalid(format!("missing --{name} (or `{name}` in the config file)"))
    })
}

fn run(cli: Cli) -> Result<(), Error> {
    let common = resolve_common(&cli)?;
    let Resolved {
        cfg,
        seed,
        threads,
        out,
    } = common;
    match cli.command {
        Command::Demo {
            posts,
            control_authors,
        } => cli::cmd_demo(&cli::DemoParams {
            posts,
            seed,
            control_authors,
            out: if out.extension().is_some() {
                out
            } else {
                out.join("demo.jsonl")
            },
        }),
        Command::Ingest {
            corpus,
            format,
            min_tokens,
            keep_non_ascii,
            keep_duplicates,
        } => cli::cmd_ingest(&cli::IngestParams {
            corpus: required_path(corpus, cfg.corpus.clone(), "corpus")?,
            format: format.or(cfg.format.clone()).unwrap_or_else(|| "jsonl".into()),
            min_tokens: min_tokens.or(cfg.min_tokens).unwrap_or(10),
            drop_non_ascii: !keep_non_ascii && cfg.drop_non_ascii.unwrap_or(true),
            drop_duplicates: !keep_duplicates && cfg.drop_duplicates.unwrap_or(true),
            seed,
            out,
        }),
        Command::Split {
            corpus,
            ratios,
            balance_threshold,
        } => {
            let ratios = match ratios {
                Some(s) => parse_ratios(&s)?,
                None => match &cfg.ratios {
                    Some(v) if v.len() == 3 => (v[0], v[1], v[2]),
                    Some(_) => {
                        return Err(Error::Invalid("config ratios must have 3 entries".into()))
                    }
                    None => (0.70, 0.15, 0.15),
                },
            };
            cli::cmd_split(&cli::SplitParams {
                corpus: required_path(corpus, cfg.corpus.clone(), "corpus")?,
                ratios,
                balance_threshold: balance_threshold
                    .or(cfg.balance_threshold)
                    .unwrap_or(0.05),
                seed,
                out,
            })
        }
        Command::Featurize {
            corpus,
            split,
            lexicons,
            mask_keywords,
        } => cli::cmd_featurize(&cli::FeaturizeParams {
            corpus: required_path(corpus, cfg.corpus.clone(), "corpus")?,
            split: required_path(split, cfg.split.clone(), "split")?,
            lexicons: lexicon_params(&lexicons, &cfg),
            mask_keywords: mask_keywords.or(cfg.mask_keywords.clone()),
            threads,
            seed,
            out,
        }),
        Command::Train {
            features,
            train,
            calibrate,
            folds,
        } => cli::cmd_train(&cli::TrainParams {
            features: required_path(features, cfg.features.clone(), "features")?,
            train: train_config(&train, &cfg, seed)?,
            calibrate: calibrate || cfg.calibrate.unwrap_or(false),
            folds: folds.or(cfg.folds).unwrap_or(5),
            out,
        }),
        Command::Evaluate {
            features,
            model,
            partition,
            bootstrap,
            alpha,
            threshold,
        } => cli::cmd_evaluate(&cli::EvaluateParams {
            features: required_path(features, cfg.features.clone(), "features")?,
            model: required_path(model, cfg.model.clone(), "model")?,
            partition: Partition::parse(&partition)?,
            bootstrap: bootstrap.or(cfg.bootstrap).unwrap_or(1000),
            alpha: alpha.or(cfg.alpha).unwrap_or(0.05),
            threshold: threshold.or(cfg.threshold).unwrap_or(0.5),
            ece_bins: 10,
            seed,
            out,
        }),
        Command::Ablate { features, subsets } => cli::cmd_ablate(&cli::AblateParams {
            features: required_path(features, cfg.features.clone(), "features")?,
            subsets: subsets.or(cfg.subsets.clone()),
            experiment: experiment_config(&cfg, seed)?,
            out,
        }),
        Command::Mask {
            corpus,
            split,
            lexicons,
            mask_keywords,
            subsets,
        } => cli::cmd_mask(&cli::MaskParams {
            corpus: required_path(corpus, cfg.corpus.clone(), "corpus")?,
            split: required_path(split, cfg.split.clone(), "split")?,
            lexicons: lexicon_params(&lexicons, &cfg),
            mask_keywords: mask_keywords.or(cfg.mask_keywords.clone()),
            subsets: subsets.or(cfg.subsets.clone()),
            experiment: experiment_config(&cfg, seed)?,
            threads,
            out,
        }),
        Command::Early {
            features,
            corpus,
            k,
        } => {
            let ks = match k {
                Some(s) => parse_k_list(&s)?,
                None => cfg.k.clone().unwrap_or_else(|| vec![3, 5, 10]),
            };
            cli::cmd_early(&cli::EarlyParams {
                features: required_path(features, cfg.features.clone(), "features")?,
                corpus: required_path(corpus, cfg.corpus.clone(), "corpus")?,
                k: ks,
                experiment: experiment_config(&cfg, seed)?,
                out,
            })
        }
        Command::Crossdomain {
            features_a,
            features_b,
            name_a,
            name_b,
            alpha,
            include_emoji,
        } => cli::cmd_crossdomain(&cli::CrossDomainParams {
            features_a: features_a
                .ok_or_else(|| Error::Invalid("missing --features-a".into()))?,
            features_b: features_b
                .ok_or_else(|| Error::Invalid("missing --features-b".into()))?,
            name_a,
            name_b,
            alpha: alpha.or(cfg.alpha).unwrap_or(0.05),
            include_emoji,
            seed,
            out,
        }),
        Command::Report { results } => cli::cmd_report(&cli::ReportParams {
            results: results.unwrap_or_else(|| out.clone()),
            out,
        }),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap treats --help/--version as errors that print to stdout
            if e.use_stderr() {
                eprint!("{e}");
                return ExitCode::from(1);
            }
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };
    let level = cli
        .log_level
        .clone()
        .unwrap_or_else(|| "warn".to_string());
    env_logger::Builder::new()
        .parse_filters(&level)
        .target(env_logger::Target::Stderr)
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
