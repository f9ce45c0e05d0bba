//! Box-plot summaries and group comparisons.

use serde::Serialize;

use crate::corpus::Source;
use crate::stats::{self, StatsError};

/// Box-plot numbers for one sample: interpolated quartiles and Tukey
/// whiskers at 1.5 IQR.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoxStats {
    pub n: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub whisker_low: f64,
    pub whisker_high: f64,
    /// Points beyond the fences, ascending.
    pub outliers: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistributionSummary {
    pub group: String,
    pub source: Option<Source>,
    pub metric: String,
    /// `video` or `channel`.
    pub level: &'static str,
    #[serde(flatten)]
    pub stats: BoxStats,
}

pub const WHISKER_IQR_FACTOR: f64 = 1.5;

pub fn summarize_distribution(values: &[f64]) -> Result<BoxStats, StatsError> {
    if values.is_empty() {
        return Err(StatsError::Empty);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let q1 = stats::quantile_sorted(&sorted, 0.25);
    let median = stats::quantile_sorted(&sorted, 0.5);
    let q3 = stats::quantile_sorted(&sorted, 0.75);
    let reach = WHISKER_IQR_FACTOR * (q3 - q1);
    let (low_fence, high_fence) = (q1 - reach, q3 + reach);
    let inside = |x: &&f64| **x >= low_fence && **x <= high_fence;
    let whisker_low = *sorted.iter().find(inside).unwrap_or(&q1);
    let whisker_high = *sorted.iter().rev().find(inside).unwrap_or(&q3);
    let outliers = sorted
        .iter()
        .copied()
        .filter(|x| *x < low_fence || *x > high_fence)
        .collect();
    Ok(BoxStats {
        n: sorted.len(),
        min: sorted[0],
        q1,
        median,
        q3,
        max: sorted[sorted.len() - 1],
        whisker_low,
        whisker_high,
        outliers,
    })
}

/// Median comparison of one metric between two groups.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupTest {
    pub metric: String,
    pub level: &'static str,
    pub source: Option<Source>,
    pub group_a: String,
    pub group_b: String,
    pub n_a: usize,
    pub n_b: usize,
    pub median_a: f64,
    pub median_b: f64,
    /// `median_a - median_b`.
    pub difference: f64,
    pub p: f64,
    pub resamples: usize,
}

/// `(metric, level, source, group, values)`
type Entry = (String, &'static str, Option<Source>, String, Vec<f64>);

/// Labelled samples keyed by `(metric, level, source, group)`.
#[derive(Debug, Default)]
pub struct Samples {
    entries: Vec<Entry>,
}

impl Samples {
    pub fn push(
        &mut self,
        metric: &str,
        level: &'static str,
        source: Option<Source>,
        group: &str,
        value: f64,
    ) {
        let pos = self
            .entries
            .iter()
            .position(|e| e.0 == metric && e.1 == level && e.2 == source && e.3 == group);
        match pos {
            Some(i) => self.entries[i].4.push(value),
            None => self.entries.push((
                metric.to_string(),
                level,
                source,
                group.to_string(),
                vec![value],
            )),
        }
    }

    /// One summary per sample, ordered by metric, level, source, group.
    pub fn summaries(&self) -> Vec<DistributionSummary> {
        let mut out: Vec<DistributionSummary> = self
            .entries
            .iter()
            .map(
                |(metric, level, source, group, values)| DistributionSummary {
                    group: group.clone(),
                    source: *source,
                    metric: metric.clone(),
                    level,
                    stats: summarize_distribution(values).expect("samples are non-empty"),
                },
            )
            .collect();
        out.sort_by(|a, b| {
            (&a.metric, a.level, a.source, &a.group).cmp(&(&b.metric, b.level, b.source, &b.group))
        });
        out
    }

    /// Median-difference tests for every pair of groups sharing a
    /// `(metric, level, source)`; `seed_of` maps the labels to a seed.
    pub fn group_tests(
        &self,
        resamples: usize,
        seed_of: impl Fn(&str, &str, Option<Source>, &str, &str) -> u64,
    ) -> Vec<GroupTest> {
        let mut keyed: Vec<_> = self.entries.iter().collect();
        keyed.sort_by(|a, b| (&a.0, a.1, a.2, &a.3).cmp(&(&b.0, b.1, b.2, &b.3)));
        let mut out = Vec::new();
        for (i, a) in keyed.iter().enumerate() {
            for b in &keyed[i + 1..] {
                if (&a.0, a.1, a.2) != (&b.0, b.1, b.2) {
                    continue;
                }
                let seed = seed_of(&a.0, a.1, a.2, &a.3, &b.3);
                let t = stats::median_difference_test(&a.4, &b.4, resamples, seed)
                    .expect("samples are non-empty");
                out.push(GroupTest {
                    metric: a.0.clone(),
                    level: a.1,
                    source: a.2,
                    group_a: a.3.clone(),
                    group_b: b.3.clone(),
                    n_a: a.4.len(),
                    n_b: b.4.len(),
                    median_a: stats::median(&a.4).expect("non-empty"),
                    median_b: stats::median(&b.4).expect("non-empty"),
                    difference: t.difference,
                    p: t.p,
                    resamples,
                });
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn hand_computed_case() {
        let s = summarize_distribution(&[1.0, 2.0, 3.0, 4.0, 100.0]).unwrap();
        assert_eq!((s.q1, s.median, s.q3), (2.0, 3.0, 4.0));
        assert_eq!((s.whisker_low, s.whisker_high), (1.0, 4.0));
        assert_eq!(s.outliers, [100.0]);
    }

    #[test]
    fn singleton_and_constant() {
        let s = summarize_distribution(&[5.0]).unwrap();
        assert_eq!(
            [
                s.min,
                s.q1,
                s.median,
                s.q3,
                s.max,
                s.whisker_low,
                s.whisker_high
            ],
            [5.0; 7]
        );
        assert!(s.outliers.is_empty());
        let s = summarize_distribution(&[2.5; 6]).unwrap();
        assert_eq!(s.q3 - s.q1, 0.0);
        assert_eq!((s.whisker_low, s.whisker_high), (2.5, 2.5));
        assert!(s.outliers.is_empty());
        assert!(summarize_distribution(&[]).is_err());
    }

    #[test]
    fn group_tests_pair_matching_samples() {
        let mut s = Samples::default();
        for v in [1.0, 2.0, 3.0] {
            s.push("m", "video", None, "b", v);
            s.push("m", "video", None, "a", v + 10.0);
        }
        s.push("other", "video", None, "a", 1.0);
        let tests = s.group_tests(200, |_, _, _, _, _| 7);
        assert_eq!(tests.len(), 1);
        assert_eq!(
            (tests[0].group_a.as_str(), tests[0].group_b.as_str()),
            ("a", "b")
        );
        assert_eq!(tests[0].difference, 10.0);
        let sums = s.summaries();
        assert_eq!(sums.len(), 3);
        assert_eq!(
            (sums[0].metric.as_str(), sums[0].group.as_str()),
            ("m", "a")
        );
    }

    proptest! {
        #[test]
        fn summary_invariants(values in proptest::collection::vec(-1e3f64..1e3, 1..60)) {
            let s = summarize_distribution(&values).unwrap();
            prop_assert!(s.q1 <= s.median && s.median <= s.q3);
            prop_assert!(s.min <= s.whisker_low && s.whisker_high <= s.max);
            for o in &s.outliers {
                prop_assert!(*o < s.whisker_low || *o > s.whisker_high);
            }
            let inside = values.iter().filter(|v| **v >= s.whisker_low && **v <= s.whisker_high).count();
            prop_assert_eq!(inside + s.outliers.len(), values.len());
        }
    }
}
