//! Small descriptive and permutation statistics shared by the layers.

use rand::seq::SliceRandom;
use thiserror::Error;

use crate::seed;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("series lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least {needed} observations, got {got}")]
    TooShort { needed: usize, got: usize },
    #[error("series is constant")]
    ConstantSeries,
    #[error("empty input")]
    Empty,
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (`n - 1` denominator).
pub fn sample_std(xs: &[f64]) -> f64 {
    let m = mean(xs);
    let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    (ss / (xs.len() as f64 - 1.0)).sqrt()
}

/// Quantile of sorted data by linear interpolation between closest ranks
/// (position `q * (n - 1)`).
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + (sorted[hi] - sorted[lo]) * frac
    }
}

pub fn median(xs: &[f64]) -> Result<f64, StatsError> {
    if xs.is_empty() {
        return Err(StatsError::Empty);
    }
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(quantile_sorted(&sorted, 0.5))
}

/// Sample Pearson coefficient, clamped to `[-1, 1]`.
pub fn pearson_r(xs: &[f64], ys: &[f64]) -> Result<f64, StatsError> {
    if xs.len() != ys.len() {
        return Err(StatsError::LengthMismatch(xs.len(), ys.len()));
    }
    if xs.len() < 2 {
        return Err(StatsError::TooShort {
            needed: 2,
            got: xs.len(),
        });
    }
    let mx = mean(xs);
    let my = mean(ys);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(StatsError::ConstantSeries);
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correlation {
    pub r: f64,
    /// Two-sided permutation p-value with plus-one smoothing.
    pub p: f64,
}

/// Pearson r with a two-sided permutation p-value.
///
/// `ys` is shuffled `permutations` times; the p-value is
/// `(1 + #{|r_perm| >= |r|}) / (1 + permutations)`.
pub fn pearson_correlation(
    xs: &[f64],
    ys: &[f64],
    permutations: usize,
    seed: u64,
) -> Result<Correlation, StatsError> {
    if xs.len() != ys.len() {
        return Err(StatsError::LengthMismatch(xs.len(), ys.len()));
    }
    if xs.len() < 3 {
        return Err(StatsError::TooShort {
            needed: 3,
            got: xs.len(),
        });
    }
    let r = pearson_r(xs, ys)?;
    let mut rng = seed::rng(seed);
    let mut shuffled = ys.to_vec();
    let mut extreme = 0usize;
    for _ in 0..permutations {
        shuffled.shuffle(&mut rng);
        let rp = pearson_r(xs, &shuffled)?;
        if rp.abs() >= r.abs() {
            extreme += 1;
        }
    }
    Ok(Correlation {
        r,
        p: (1 + extreme) as f64 / (1 + permutations) as f64,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MedianDifference {
    /// `median(a) - median(b)`.
    pub difference: f64,
    pub p: f64,
    pub resamples: usize,
}

/// Two-sided permutation test on the difference of group medians.
pub fn median_difference_test(
    a: &[f64],
    b: &[f64],
    resamples: usize,
    seed: u64,
) -> Result<MedianDifference, StatsError> {
    let observed = median(a)? - median(b)?;
    let mut pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let mut rng = seed::rng(seed);
    let mut extreme = 0usize;
    for _ in 0..resamples {
        pooled.shuffle(&mut rng);
        let (pa, pb) = pooled.split_at(a.len());
        let d = median(pa)? - median(pb)?;
        if d.abs() >= observed.abs() {
            extreme += 1;
        }
    }
    Ok(MedianDifference {
        difference: observed,
        p: (1 + extreme) as f64 / (1 + resamples) as f64,
        resamples,
    })
}
