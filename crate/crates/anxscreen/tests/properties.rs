//! Property tests for the spec-level invariants that hold for all inputs.

use proptest::prelude::*;

use anxscreen::corpus::{self, author_disjoint_split, filter_posts, Partition, Post};
use anxscreen::eval::{self, PlattCalibrator};
use anxscreen::features::{self, fit_standardizer};
use anxscreen::masking::{self, KeywordList, MASK_TOKEN};
use anxscreen::sentiment;
use anxscreen::stats;

fn arb_post(max_authors: usize) -> impl Strategy<Value = Post> {
    (
        0..max_authors,
        0i64..1_000_000,
        0u8..2,
        "[a-z ]{0,40}",
        any::<u32>(),
    )
        .prop_map(|(author, timestamp, label, text, nonce)| Post {
            id: format!("id-{nonce:08x}-{timestamp}"),
            author: format!("author-{author}"),
            timestamp,
            text,
            label,
            source: None,
        })
}

fn arb_corpus() -> impl Strategy<Value = Vec<Post>> {
    prop::collection::vec(arb_post(20), 3..80).prop_map(|mut posts| {
        // unique ids
        for (i, p) in posts.iter_mut().enumerate() {
            p.id = format!("{}-{i}", p.id);
        }
        posts
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn splitter_partitions_are_always_disjoint(posts in arb_corpus(), seed in any::<u64>()) {
        prop_assume!(posts.iter().map(corpus::author_key).collect::<std::collections::BTreeSet<_>>().len() >= 3);
        let split = author_disjoint_split(&posts, (0.70, 0.15, 0.15), seed).unwrap();
        let train = split.authors_in(Partition::Train);
        let val = split.authors_in(Partition::Validation);
        let test = split.authors_in(Partition::Test);
        prop_assert!(train.is_disjoint(&val));
        prop_assert!(train.is_disjoint(&test));
        prop_assert!(val.is_disjoint(&test));
        // every author is assigned exactly once
        prop_assert_eq!(train.len() + val.len() + test.len(), split.len());
        // determinism
        let again = author_disjoint_split(&posts, (0.70, 0.15, 0.15), seed).unwrap();
        prop_assert_eq!(split, again);
    }

    #[test]
    fn filter_posts_is_idempotent(posts in arb_corpus(), min_tokens in 1usize..6) {
        let (once, _) = filter_posts(&posts, min_tokens).unwrap();
        let (twice, report) = filter_posts(&once, min_tokens).unwrap();
        prop_assert_eq!(&once, &twice);
        prop_assert_eq!(report.removed, 0);
    }

    #[test]
    fn mask_text_is_idempotent_and_clean(words in prop::collection::vec(
        prop::sample::select(vec![
            "anxiety", "panic", "worry", "racing", "thoughts", "xanax", "r/anxiety",
            "calm", "walk", "coffee", "anxious-free", "Worried!", "(stress)", "día",
        ]),
        0..30,
    )) {
        let text = words.join(" ");
        let keywords = KeywordList::default_builtin();
        let once = masking::mask_text(&text, &keywords, MASK_TOKEN);
        let twice = masking::mask_text(&once, &keywords, MASK_TOKEN);
        prop_assert_eq!(&once, &twice);
        // no listed word survives as a whole token
        for token in once.split_whitespace() {
            let core: String = token
                .trim_matches(|c: char| !c.is_alphanumeric())
                .to_lowercase();
            prop_assert!(!keywords.words.contains(&core), "{core:?} survived in {once:?}");
        }
        prop_assert!(!masking::contains_keyword(&once, &keywords));
        // single-word masking preserves the whitespace token count when the
        // text has no phrases (phrases merge tokens)
        let has_phrase = once.contains("racing") || text.to_lowercase().contains("racing thoughts")
            || text.to_lowercase().contains("intrusive thoughts");
        if !has_phrase {
            prop_assert_eq!(
                text.split_whitespace().count(),
                once.split_whitespace().count()
            );
        }
    }

    #[test]
    fn compound_score_is_odd_bounded_monotone(xs in prop::collection::vec(-8.0f64..8.0, 0..12)) {
        let f = sentiment::compound_score(&xs, 15.0);
        prop_assert!((-1.0..=1.0).contains(&f));
        let neg: Vec<f64> = xs.iter().map(|v| -v).collect();
        let g = sentiment::compound_score(&neg, 15.0);
        prop_assert!((f + g).abs() < 1e-12);
    }

    #[test]
    fn proportions_always_sum_to_one(xs in prop::collection::vec(-4.0f64..4.0, 1..30)) {
        let (neg, neu, pos) = sentiment::proportion_scores(&xs);
        prop_assert!((neg + neu + pos - 1.0).abs() < 1e-9);
        prop_assert!(neg >= 0.0 && neu >= 0.0 && pos >= 0.0);
    }

    #[test]
    fn ece_is_permutation_invariant(
        pairs in prop::collection::vec((0.0f64..=1.0, 0u8..2), 1..60),
        rotation in 0usize..60,
    ) {
        let probs: Vec<f64> = pairs.iter().map(|(p, _)| *p).collect();
        let labels: Vec<u8> = pairs.iter().map(|(_, y)| *y).collect();
        let base = eval::ece(&labels, &probs, 10).unwrap().ece;
        let r = rotation % pairs.len();
        let mut probs_rot = probs.clone();
        let mut labels_rot = labels.clone();
        probs_rot.rotate_left(r);
        labels_rot.rotate_left(r);
        let rotated = eval::ece(&labels_rot, &probs_rot, 10).unwrap().ece;
        prop_assert!((base - rotated).abs() < 1e-12);
    }

    #[test]
    fn bh_is_monotone_in_alpha_and_p_ordered(
        ps in prop::collection::vec(0.0f64..=1.0, 1..20),
        alpha_lo in 0.01f64..0.2,
        bump in 0.01f64..0.3,
    ) {
        let alpha_hi = alpha_lo + bump;
        let (reject_lo, adj) = stats::bh_fdr(&ps, alpha_lo).unwrap();
        let (reject_hi, _) = stats::bh_fdr(&ps, alpha_hi).unwrap();
        // rejection set grows with alpha
        for (lo, hi) in reject_lo.iter().zip(&reject_hi) {
            prop_assert!(!lo || *hi);
        }
        // never reject a hypothesis with p above a rejected one's p
        let max_rejected = ps
            .iter()
            .zip(&reject_lo)
            .filter(|(_, r)| **r)
            .map(|(p, _)| *p)
            .fold(f64::NEG_INFINITY, f64::max);
        for (p, r) in ps.iter().zip(&reject_lo) {
            if *p < max_rejected {
                prop_assert!(*r, "p {p} below rejected {max_rejected} but kept");
            }
        }
        // adjusted p-values dominate the raw ones and stay in [0, 1]
        for (p, a) in ps.iter().zip(&adj) {
            prop_assert!(a >= p && *a <= 1.0);
        }
    }

    #[test]
    fn hedges_is_antisymmetric(
        n1 in 2usize..40, n2 in 2usize..40,
        m1 in -5.0f64..5.0, m2 in -5.0f64..5.0,
        s1 in 0.1f64..3.0, s2 in 0.1f64..3.0,
    ) {
        let a = stats::GroupSummary { n: n1, mean: m1, sd: s1 };
        let b = stats::GroupSummary { n: n2, mean: m2, sd: s2 };
        let ab = stats::hedges_g(&a, &b, stats::HedgesCorrection::SampleSize).unwrap();
        let ba = stats::hedges_g(&b, &a, stats::HedgesCorrection::SampleSize).unwrap();
        prop_assert_eq!(ab, -ba);
    }

    #[test]
    fn mcnemar_is_symmetric(n01 in 0u64..500, n10 in 0u64..500, continuity in any::<bool>()) {
        prop_assume!(n01 + n10 > 0);
        let a = stats::mcnemar(n01, n10, continuity).unwrap();
        let b = stats::mcnemar(n10, n01, continuity).unwrap();
        prop_assert_eq!(a, b);
        prop_assert!(a.p >= 0.0 && a.p <= 1.0);
    }

    #[test]
    fn standardizer_roundtrips(rows in prop::collection::vec(
        prop::collection::vec(-100.0f64..100.0, 3),
        2..30,
    )) {
        let names = vec![
            "char_count".to_string(),
            "word_count".to_string(),
            "punct_density".to_string(),
        ];
        let s = fit_standardizer(&rows, &names, "train").unwrap();
        for row in &rows {
            let z = s.apply(row);
            let back = s.invert(&z);
            for ((orig, rec), sigma) in row.iter().zip(&back).zip(&s.sigma) {
                if *sigma > 1e-9 {
                    prop_assert!((orig - rec).abs() < 1e-9 * (1.0 + orig.abs()));
                }
            }
        }
    }

    #[test]
    fn rank_auc_matches_trapezoid(
        pairs in prop::collection::vec((0u8..2, 0.0f64..1.0), 4..60),
        coarse in any::<bool>(),
    ) {
        let labels: Vec<u8> = pairs.iter().map(|(y, _)| *y).collect();
        prop_assume!(labels.iter().any(|l| *l == 0) && labels.iter().any(|l| *l == 1));
        let scores: Vec<f64> = pairs
            .iter()
            .map(|(_, s)| if coarse { (s * 4.0).round() / 4.0 } else { *s })
            .collect();
        let a = eval::roc_auc(&labels, &scores).unwrap();
        let b = eval::auc_trapezoid(&eval::roc_curve(&labels, &scores).unwrap());
        prop_assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn platt_apply_is_monotone(a in -3.0f64..3.0, b in -2.0f64..2.0, s1 in -10.0f64..10.0, d in 0.001f64..5.0) {
        prop_assume!(a.abs() > 1e-6);
        let cal = PlattCalibrator { a, b };
        let s2 = s1 + d;
        let (p1, p2) = (cal.apply(s1), cal.apply(s2));
        if a < 0.0 {
            prop_assert!(p2 >= p1);
        } else {
            prop_assert!(p2 <= p1);
        }
    }

    #[test]
    fn extraction_rate_identity_holds(text in "[a-zA-Z .,!?]{1,120}") {
        let valence = sentiment::ValenceLexicon::demo();
        let polarity = sentiment::PolarityLexicon::demo();
        let cfg = sentiment::SentimentConfig::default();
        if let Ok(fv) = features::extract_features(&text, &valence, &polarity, &cfg) {
            prop_assert!((fv.first_person_rate - 100.0 * fv.first_person_count / fv.word_count).abs() < 1e-12);
            prop_assert_eq!(fv.avg_word_length * fv.word_count, fv.char_count);
            prop_assert!(fv.punct_density >= 0.0 && fv.punct_density <= 1.0);
            prop_assert!((fv.sent_neg + fv.sent_neu + fv.sent_pos - 1.0).abs() < 1e-9);
        }
    }
}

#[test]
fn ece_calibrated_bin_dilutes_prior_contribution() {
    // adding a perfectly calibrated bin of weight w scales the previous ECE
    // contribution by (1 - w)
    let labels = vec![1u8, 1, 0, 0];
    let probs = vec![0.95, 0.95, 0.95, 0.95];
    let base = eval::ece(&labels, &probs, 10).unwrap().ece;
    // empty bin [0.2, 0.3): four samples at 0.25 with accuracy exactly 0.25
    let mut labels2 = labels.clone();
    let mut probs2 = probs.clone();
    labels2.extend([1, 0, 0, 0]);
    probs2.extend([0.25, 0.25, 0.25, 0.25]);
    let diluted = eval::ece(&labels2, &probs2, 10).unwrap().ece;
    let w = 4.0 / 8.0;
    assert!((diluted - base * (1.0 - w)).abs() < 1e-12, "{diluted} vs {}", base * (1.0 - w));
}

#[test]
fn alpha_shrinks_compound_magnitude() {
    for x in [0.25, 1.0, -3.0, 12.0] {
        let tight = sentiment::compound_score(&[x], 10.0);
        let loose = sentiment::compound_score(&[x], 20.0);
        assert!(loose.abs() < tight.abs());
    }
}
