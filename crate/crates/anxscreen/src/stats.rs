//! Two-group inference and paired-classifier comparison: Welch's t-test with
//! fractional degrees of freedom, Hedges' g effect sizes, Benjamini-Hochberg
//! FDR control, McNemar's test, and the cross-domain consistency report.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special;

/// Sample summary of one group: n, mean, and sample standard deviation
/// (divisor n - 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub n: usize,
    pub mean: f64,
    pub sd: f64,
}

impl GroupSummary {
    pub fn from_values(values: &[f64]) -> Result<GroupSummary> {
        if values.len() < 2 {
            return Err(Error::Insufficient(format!(
                "group summary needs n >= 2, got {}",
                values.len()
            )));
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
        Ok(GroupSummary {
            n: values.len(),
            mean,
            sd: (ss / (n - 1.0)).sqrt(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WelchTest {
    pub t: f64,
    /// Welch-Satterthwaite degrees of freedom (fractional).
    pub df: f64,
    /// Two-tailed p-value.
    pub p: f64,
}

/// Welch's unequal-variance t-test. Identical groups give t = 0, p = 1 by
/// convention; two zero-variance groups with different means give p = 0.
pub fn welch_t(a: &GroupSummary, b: &GroupSummary) -> Result<WelchTest> {
    if a.n < 2 || b.n < 2 {
        return Err(Error::Insufficient("Welch test needs n >= 2 per group".into()));
    }
    let va = a.sd * a.sd / a.n as f64;
    let vb = b.sd * b.sd / b.n as f64;
    let denom = (va + vb).sqrt();
    if denom == 0.0 {
        return if a.mean == b.mean {
            Ok(WelchTest {
                t: 0.0,
                df: (a.n + b.n - 2) as f64,
                p: 1.0,
            })
        } else {
            Ok(WelchTest {
                t: if a.mean > b.mean { f64::INFINITY } else { f64::NEG_INFINITY },
                df: (a.n + b.n - 2) as f64,
                p: 0.0,
            })
        };
    }
    let t = (a.mean - b.mean) / denom;
    let df = (va + vb) * (va + vb)
        / (va * va / (a.n as f64 - 1.0) + vb * vb / (b.n as f64 - 1.0));
    let p = special::student_t_two_tailed(t, df);
    Ok(WelchTest { t, df, p })
}

/// Which small-sample bias correction multiplies Cohen's d. Note that
/// 1 - 3/(4 df - 1) with the pooled df = n1 + n2 - 2 is algebraically the
/// same as the sample-size form; the variant here therefore plugs in the
/// Welch fractional df, which is what makes it a genuinely different number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HedgesCorrection {
    /// 1 - 3 / (4 (n1 + n2) - 9); the default.
    SampleSize,
    /// 1 - 3 / (4 df - 1) with df from the Welch-Satterthwaite equation.
    WelchDf,
}

/// Bias-corrected standardized mean difference (Cohen's d times the chosen
/// correction factor). Pooled sd must be positive.
pub fn hedges_g(a: &GroupSummary, b: &GroupSummary, correction: HedgesCorrection) -> Result<f64> {
    if a.n < 2 || b.n < 2 {
        return Err(Error::Insufficient("Hedges' g needs n >= 2 per group".into()));
    }
    let n1 = a.n as f64;
    let n2 = b.n as f64;
    let pooled =
        (((n1 - 1.0) * a.sd * a.sd + (n2 - 1.0) * b.sd * b.sd) / (n1 + n2 - 2.0)).sqrt();
    if pooled == 0.0 {
        return Err(Error::Numeric("pooled standard deviation is zero".into()));
    }
    let d = (a.mean - b.mean) / pooled;
    let j = match correction {
        HedgesCorrection::SampleSize => 1.0 - 3.0 / (4.0 * (n1 + n2) - 9.0),
        HedgesCorrection::WelchDf => {
            let va = a.sd * a.sd / n1;
            let vb = b.sd * b.sd / n2;
            let df = if va + vb == 0.0 {
                n1 + n2 - 2.0
            } else {
                (va + vb) * (va + vb) / (va * va / (n1 - 1.0) + vb * vb / (n2 - 1.0))
            };
            1.0 - 3.0 / (4.0 * df - 1.0)
        }
    };
    Ok(d * j)
}

/// Benjamini-Hochberg step-up procedure. Returns per-input reject flags and
/// adjusted p-values (min over j >= i of m * p_(j) / j, clipped to 1, mapped
/// back to input order).
pub fn bh_fdr(p_values: &[f64], alpha: f64) -> Result<(Vec<bool>, Vec<f64>)> {
    if p_values.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(Error::Invalid("p-values must lie in [0, 1]".into()));
    }
    let m = p_values.len();
    if m == 0 {
        return Ok((Vec::new(), Vec::new()));
    }
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| {
        p_values[a]
            .partial_cmp(&p_values[b])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    // largest k with p_(k) <= k/m * alpha
    let mut k = 0usize;
    for (rank, &idx) in order.iter().enumerate() {
        if p_values[idx] <= (rank + 1) as f64 / m as f64 * alpha {
            k = rank + 1;
        }
    }
    let mut reject = vec![false; m];
    for &idx in order.iter().take(k) {
        reject[idx] = true;
    }
    // adjusted p-values via the running suffix minimum; the ratio is taken
    // first so rank m maps p exactly to itself, and the final clamp keeps
    // adjusted >= raw under floating-point rounding
    let mut adjusted_sorted = vec![0.0f64; m];
    let mut running = 1.0f64;
    for rank in (0..m).rev() {
        let ratio = m as f64 / (rank + 1) as f64;
        let raw = p_values[order[rank]] * ratio;
        running = running.min(raw).min(1.0);
        adjusted_sorted[rank] = running.max(p_values[order[rank]]);
    }
    let mut adjusted = vec![0.0f64; m];
    for (rank, &idx) in order.iter().enumerate() {
        adjusted[idx] = adjusted_sorted[rank];
    }
    Ok((reject, adjusted))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McnemarTest {
    pub chi2: f64,
    pub p: f64,
}

/// McNemar's test on the discordant counts. With `continuity` the statistic
/// is (|n01 - n10| - 1)^2 / (n01 + n10), clamped at zero when the counts
/// differ by at most one; without, (n01 - n10)^2 / (n01 + n10).
pub fn mcnemar(n01: u64, n10: u64, continuity: bool) -> Result<McnemarTest> {
    let total = n01 + n10;
    if total == 0 {
        return Err(Error::Insufficient(
            "McNemar needs at least one discordant pair".into(),
        ));
    }
    let diff = (n01 as f64 - n10 as f64).abs();
    let num = if continuity {
        (diff - 1.0).max(0.0)
    } else {
        diff
    };
    let chi2 = num * num / total as f64;
    let p = special::chi2_sf(chi2, 1.0);
    Ok(McnemarTest { chi2, p })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Up,
    Down,
    None,
}

impl Direction {
    pub fn of(mean_diff: f64) -> Direction {
        if mean_diff > 0.0 {
            Direction::Up
        } else if mean_diff < 0.0 {
            Direction::Down
        } else {
            Direction::None
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Direction::Up => "up",
            Direction::Down => "down",
            Direction::None => "none",
        }
    }
}

/// Per-feature two-group comparison within one domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatResult {
    pub feature: String,
    pub group1: GroupSummary,
    pub group2: GroupSummary,
    pub t: f64,
    pub df: f64,
    pub p: f64,
    pub p_adjusted: f64,
    pub g: f64,
    pub direction: Direction,
    pub significant: bool,
}

/// Welch + Hedges for every feature of one domain, BH-corrected across the
/// domain's tests. `groups` maps feature name to (positive group, control
/// group) summaries.
pub fn domain_feature_tests(
    features: &[(String, GroupSummary, GroupSummary)],
    alpha: f64,
    correction: HedgesCorrection,
) -> Result<Vec<StatResult>> {
    let mut tests = Vec::with_capacity(features.len());
    for (name, g1, g2) in features {
        let w = welch_t(g1, g2)?;
        let g = match hedges_g(g1, g2, correction) {
            Ok(v) => v,
            Err(Error::Numeric(_)) => 0.0,
            Err(e) => return Err(e),
        };
        tests.push((name.clone(), *g1, *g2, w, g));
    }
    let p_values: Vec<f64> = tests.iter().map(|t| t.3.p).collect();
    let (reject, adjusted) = bh_fdr(&p_values, alpha)?;
    Ok(tests
        .into_iter()
        .zip(reject.into_iter().zip(adjusted))
        .map(|((feature, g1, g2, w, g), (sig, p_adj))| StatResult {
            feature,
            group1: g1,
            group2: g2,
            t: w.t,
            df: w.df,
            p: w.p,
            p_adjusted: p_adj,
            g,
            direction: Direction::of(g1.mean - g2.mean),
            significant: sig,
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyRow {
    pub feature: String,
    pub direction_a: Direction,
    pub direction_b: Direction,
    pub consistent: bool,
    pub dual_significant: bool,
    pub g_a: f64,
    pub g_b: f64,
    /// Effect size shown in the table column: domain B's g, displayed only
    /// for dual-significant features.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g_display: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub domain_a: String,
    pub domain_b: String,
    pub rows: Vec<ConsistencyRow>,
    pub consistent_count: usize,
    pub total: usize,
    pub consistency_rate: f64,
    pub dual_significant_count: usize,
}

/// Per-feature directional agreement and dual significance between two
/// domains' test results. Feature sets must match.
pub fn cross_domain_consistency(
    domain_a: (&str, &[StatResult]),
    domain_b: (&str, &[StatResult]),
) -> Result<ConsistencyReport> {
    let (name_a, a) = domain_a;
    let (name_b, b) = domain_b;
    if a.len() != b.len() {
        return Err(Error::Invalid(format!(
            "domains test different feature counts: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    let mut rows = Vec::with_capacity(a.len());
    for ra in a {
        let rb = b
            .iter()
            .find(|r| r.feature == ra.feature)
            .ok_or_else(|| {
                Error::Invalid(format!("feature {:?} missing from domain {name_b}", ra.feature))
            })?;
        let consistent = ra.direction == rb.direction;
        let dual = ra.significant && rb.significant;
        rows.push(ConsistencyRow {
            feature: ra.feature.clone(),
            direction_a: ra.direction,
            direction_b: rb.direction,
            consistent,
            dual_significant: dual,
            g_a: ra.g,
            g_b: rb.g,
            g_display: if dual { Some(rb.g) } else { None },
        });
    }
    let consistent_count = rows.iter().filter(|r| r.consistent).count();
    let dual_significant_count = rows.iter().filter(|r| r.dual_significant).count();
    let total = rows.len();
    Ok(ConsistencyReport {
        domain_a: name_a.to_string(),
        domain_b: name_b.to_string(),
        consistent_count,
        total,
        consistency_rate: if total == 0 {
            0.0
        } else {
            consistent_count as f64 / total as f64
        },
        dual_significant_count,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn welch_identical_groups() {
        let g = GroupSummary { n: 10, mean: 5.0, sd: 1.0 };
        let w = welch_t(&g, &g).unwrap();
        assert_eq!(w.t, 0.0);
        assert_eq!(w.p, 1.0);
    }

    #[test]
    fn welch_equal_n_equal_sd_collapses_df() {
        let a = GroupSummary { n: 8, mean: 1.0, sd: 2.0 };
        let b = GroupSummary { n: 8, mean: 0.0, sd: 2.0 };
        let w = welch_t(&a, &b).unwrap();
        assert!((w.df - 14.0).abs() < 1e-10, "df = {}", w.df);
    }

    #[test]
    fn welch_matches_extended_precision_oracle() {
        // frozen 40-digit reference for a=(10, 5, 1), b=(12, 4, 2)
        let a = GroupSummary { n: 10, mean: 5.0, sd: 1.0 };
        let b = GroupSummary { n: 12, mean: 4.0, sd: 2.0 };
        let w = welch_t(&a, &b).unwrap();
        assert!((w.t - 1.519_109_050_625_499_9).abs() < 1e-9, "t = {}", w.t);
        assert!((w.df - 16.747_747_747_747_748).abs() < 1e-9, "df = {}", w.df);
        assert!((w.p - 0.147_387_148_512_962_24).abs() < 1e-8, "p = {}", w.p);
    }

    #[test]
    fn welch_needs_two_per_group() {
        let a = GroupSummary { n: 1, mean: 0.0, sd: 0.0 };
        let b = GroupSummary { n: 5, mean: 0.0, sd: 1.0 };
        assert!(welch_t(&a, &b).is_err());
    }

    #[test]
    fn hedges_equal_means_is_zero() {
        let a = GroupSummary { n: 5, mean: 2.0, sd: 1.0 };
        let b = GroupSummary { n: 7, mean: 2.0, sd: 2.0 };
        assert_eq!(hedges_g(&a, &b, HedgesCorrection::SampleSize).unwrap(), 0.0);
    }

    #[test]
    fn hedges_hand_example() {
        let a = GroupSummary { n: 2, mean: 3.0, sd: 2.0f64.sqrt() };
        let b = GroupSummary { n: 2, mean: 2.0, sd: 2.0f64.sqrt() };
        let g = hedges_g(&a, &b, HedgesCorrection::SampleSize).unwrap();
        assert!((g - 0.4041).abs() < 5e-4, "g = {g}");
        assert!((g - 0.404_061_017_820_884_3).abs() < 1e-12);
    }

    #[test]
    fn hedges_is_antisymmetric() {
        let a = GroupSummary { n: 9, mean: 3.5, sd: 1.2 };
        let b = GroupSummary { n: 14, mean: 2.1, sd: 2.3 };
        let ab = hedges_g(&a, &b, HedgesCorrection::SampleSize).unwrap();
        let ba = hedges_g(&b, &a, HedgesCorrection::SampleSize).unwrap();
        assert_eq!(ab, -ba);
    }

    #[test]
    fn hedges_correction_variants() {
        // equal n, equal sd: Welch df collapses to n1 + n2 - 2 and the two
        // factors coincide
        let a = GroupSummary { n: 4, mean: 1.0, sd: 1.0 };
        let b = GroupSummary { n: 4, mean: 0.0, sd: 1.0 };
        let g1 = hedges_g(&a, &b, HedgesCorrection::SampleSize).unwrap();
        let g2 = hedges_g(&a, &b, HedgesCorrection::WelchDf).unwrap();
        assert!((g1 - g2).abs() < 1e-12);
        // unequal variances: Welch df < pooled df, so the factors differ
        let a = GroupSummary { n: 10, mean: 1.0, sd: 1.0 };
        let b = GroupSummary { n: 6, mean: 0.0, sd: 3.0 };
        let g1 = hedges_g(&a, &b, HedgesCorrection::SampleSize).unwrap();
        let g2 = hedges_g(&a, &b, HedgesCorrection::WelchDf).unwrap();
        assert!((g1 - g2).abs() > 1e-6);
    }

    #[test]
    fn hedges_zero_pooled_sd_errors() {
        let a = GroupSummary { n: 3, mean: 1.0, sd: 0.0 };
        let b = GroupSummary { n: 3, mean: 0.0, sd: 0.0 };
        assert!(matches!(
            hedges_g(&a, &b, HedgesCorrection::SampleSize),
            Err(Error::Numeric(_))
        ));
    }

    #[test]
    fn bh_thresholds_for_twelve_tests() {
        let alpha = 0.05;
        for i in 1..=12usize {
            let threshold = i as f64 / 12.0 * alpha;
            assert!((threshold - (i as f64) * 0.05 / 12.0).abs() < 1e-15);
        }
    }

    #[test]
    fn bh_step_up_hand_example() {
        let p = vec![0.01, 0.02, 0.04, 0.2];
        let (reject, adjusted) = bh_fdr(&p, 0.05).unwrap();
        assert_eq!(reject, vec![true, true, false, false]);
        assert!((adjusted[0] - 0.04).abs() < 1e-12);
        assert!((adjusted[1] - 0.04).abs() < 1e-12);
        assert!((adjusted[2] - 0.04 * 4.0 / 3.0).abs() < 1e-12);
        assert!((adjusted[3] - 0.2).abs() < 1e-12);
    }

    #[test]
    fn bh_all_ones_rejects_nothing() {
        let p = vec![1.0; 5];
        let (reject, adjusted) = bh_fdr(&p, 0.05).unwrap();
        assert!(reject.iter().all(|r| !r));
        assert!(adjusted.iter().all(|a| *a == 1.0));
    }

    #[test]
    fn bh_adjusted_dominates_raw() {
        let p = vec![0.003, 0.7, 0.04, 0.0499, 0.2, 0.011];
        let (_, adjusted) = bh_fdr(&p, 0.05).unwrap();
        for (raw, adj) in p.iter().zip(&adjusted) {
            assert!(adj >= raw);
            assert!(*adj <= 1.0);
        }
    }

    #[test]
    fn mcnemar_fixture() {
        let corrected = mcnemar(52, 76, true).unwrap();
        assert!((corrected.chi2 - 529.0 / 128.0).abs() < 1e-12);
        assert!((corrected.chi2 - 4.133).abs() < 0.005);
        assert!((corrected.p - 0.042).abs() < 0.001, "p = {}", corrected.p);
        let uncorrected = mcnemar(52, 76, false).unwrap();
        assert_eq!(uncorrected.chi2, 4.5);
    }

    #[test]
    fn mcnemar_symmetric_and_degenerate() {
        let a = mcnemar(30, 11, true).unwrap();
        let b = mcnemar(11, 30, true).unwrap();
        assert_eq!(a, b);
        let even = mcnemar(9, 9, false).unwrap();
        assert_eq!(even.chi2, 0.0);
        assert_eq!(even.p, 1.0);
        let one_sided = mcnemar(10, 0, false).unwrap();
        assert_eq!(one_sided.chi2, 10.0);
        assert!(mcnemar(0, 0, true).is_err());
    }

    #[test]
    fn consistency_self_comparison_is_total() {
        let summaries: Vec<(String, GroupSummary, GroupSummary)> = (0..4)
            .map(|i| {
                (
                    format!("f{i}"),
                    GroupSummary { n: 30, mean: 1.0 + i as f64, sd: 1.0 },
                    GroupSummary { n: 30, mean: 0.5, sd: 1.0 },
                )
            })
            .collect();
        let results = domain_feature_tests(&summaries, 0.05, HedgesCorrection::SampleSize).unwrap();
        let report = cross_domain_consistency(("a", &results), ("b", &results)).unwrap();
        assert_eq!(report.consistent_count, 4);
        assert!((report.consistency_rate - 1.0).abs() < 1e-12);
        assert_eq!(
            report.dual_significant_count,
            results.iter().filter(|r| r.significant).count()
        );
    }

    #[test]
    fn consistency_sign_flip_zeroes_agreement() {
        let base: Vec<(String, GroupSummary, GroupSummary)> = (0..3)
            .map(|i| {
                (
                    format!("f{i}"),
                    GroupSummary { n: 25, mean: 2.0, sd: 1.0 },
                    GroupSummary { n: 25, mean: 1.0, sd: 1.0 },
                )
            })
            .collect();
        let flipped: Vec<(String, GroupSummary, GroupSummary)> = base
            .iter()
            .map(|(n, a, b)| (n.clone(), *b, *a))
            .collect();
        let ra = domain_feature_tests(&base, 0.05, HedgesCorrection::SampleSize).unwrap();
        let rb = domain_feature_tests(&flipped, 0.05, HedgesCorrection::SampleSize).unwrap();
        let report = cross_domain_consistency(("a", &ra), ("b", &rb)).unwrap();
        assert_eq!(report.consistent_count, 0);
    }

    #[test]
    fn consistency_requires_matched_features() {
        let a = domain_feature_tests(
            &[("x".to_string(), GroupSummary { n: 5, mean: 1.0, sd: 1.0 }, GroupSummary { n: 5, mean: 0.0, sd: 1.0 })],
            0.05,
            HedgesCorrection::SampleSize,
        )
        .unwrap();
        let b = domain_feature_tests(
            &[("y".to_string(), GroupSummary { n: 5, mean: 1.0, sd: 1.0 }, GroupSummary { n: 5, mean: 0.0, sd: 1.0 })],
            0.05,
            HedgesCorrection::SampleSize,
        )
        .unwrap();
        assert!(cross_domain_consistency(("a", &a), ("b", &b)).is_err());
    }
}
