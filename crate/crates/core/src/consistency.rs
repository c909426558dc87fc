//! Fuzzy photo-consistency: membership degree, adaptive dual thresholds and
//! hysteresis classification.
//!
//! The membership degree of a voxel is the quotient of the smallest and
//! largest retained pixel value, taken per channel after trimming the tails
//! of each channel's sorted values, and combined by taking the minimum over
//! channels. A channel whose retained values are all zero counts as
//! perfectly homogeneous.
//!
//! Thresholds come from the partial sums `S_n` of the alternating harmonic
//! series: for a voxel seen in `N` views the low threshold is `S_2N` and the
//! high threshold `S_2N+1`. The even sums increase and the odd sums decrease
//! toward `ln 2`, so the band between them narrows as more views agree.

use thiserror::Error;

use crate::grid::{VoxelCoord, VoxelGrid};
use crate::Rgb;

/// Default fraction of values dropped from each tail of every channel.
pub const DEFAULT_TRIM_FRACTION: f64 = 0.1;

#[derive(Debug, Error, PartialEq)]
pub enum ConsistencyError {
    #[error("empty input")]
    EmptyInput,
    #[error("trim fraction {0} must lie in [0, 0.5)")]
    InvalidTrim(f64),
    #[error("sequence index must be at least 1, got {0}")]
    InvalidIndex(usize),
    #[error("invalid thresholds: low {low} must not exceed high {high}")]
    InvalidThresholds { low: f64, high: f64 },
}

fn check_trim(trim_fraction: f64) -> Result<(), ConsistencyError> {
    if (0.0..0.5).contains(&trim_fraction) {
        Ok(())
    } else {
        Err(ConsistencyError::InvalidTrim(trim_fraction))
    }
}

/// Number of values dropped from each end of a list of `len` values.
fn trim_count(len: usize, trim_fraction: f64) -> usize {
    let d = (trim_fraction * len as f64).floor() as usize;
    d.min(len.saturating_sub(1) / 2)
}

/// Drops `floor(trim_fraction * len)` values from each end of a sorted
/// slice, always keeping at least one.
pub fn trim_outliers<T>(values: &[T], trim_fraction: f64) -> Result<&[T], ConsistencyError> {
    check_trim(trim_fraction)?;
    if values.is_empty() {
        return Err(ConsistencyError::EmptyInput);
    }
    let d = trim_count(values.len(), trim_fraction);
    Ok(&values[d..values.len() - d])
}

fn channel_ratio(lo: u8, hi: u8) -> f64 {
    if hi == 0 {
        1.0
    } else {
        f64::from(lo) / f64::from(hi)
    }
}

/// Membership degree in `[0, 1]` of a set of pixel colors.
pub fn membership(colors: &[Rgb], trim_fraction: f64) -> Result<f64, ConsistencyError> {
    check_trim(trim_fraction)?;
    if colors.is_empty() {
        return Err(ConsistencyError::EmptyInput);
    }
    let mut channel = Vec::with_capacity(colors.len());
    let mut mu = 1.0f64;
    for c in 0..3 {
        channel.clear();
        channel.extend(colors.iter().map(|p| p.0[c]));
        channel.sort_unstable();
        let kept = trim_outliers(&channel, trim_fraction)?;
        mu = mu.min(channel_ratio(kept[0], kept[kept.len() - 1]));
    }
    Ok(mu)
}

/// `floor(sum / n + 1/2)` in exact integer arithmetic.
fn round_half_up(sum: u64, n: u64) -> u8 {
    ((2 * sum + n) / (2 * n)) as u8
}

/// Per-channel arithmetic mean, rounded half-up.
pub fn mean_color(colors: &[Rgb]) -> Result<Rgb, ConsistencyError> {
    if colors.is_empty() {
        return Err(ConsistencyError::EmptyInput);
    }
    let n = colors.len() as u64;
    let mut sums = [0u64; 3];
    for c in colors {
        for (s, v) in sums.iter_mut().zip(c.0) {
            *s += u64::from(v);
        }
    }
    Ok(Rgb(sums.map(|s| round_half_up(s, n))))
}

/// A membership degree with the evidence it was computed from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MembershipScore {
    pub mu: f64,
    pub n_views: usize,
    pub n_pixels: usize,
}

/// Partial sum `S_n = sum_{m=1..n} (-1)^(m+1) / m`, accumulated in index
/// order.
pub fn alt_harmonic(n: usize) -> Result<f64, ConsistencyError> {
    if n < 1 {
        return Err(ConsistencyError::InvalidIndex(n));
    }
    Ok(alt_harmonic_sum(n))
}

fn alt_harmonic_sum(n: usize) -> f64 {
    let mut sum = 0.0;
    for m in 1..=n {
        let term = 1.0 / m as f64;
        if m % 2 == 1 {
            sum += term;
        } else {
            sum -= term;
        }
    }
    sum
}

/// Low and high hysteresis thresholds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdPair {
    pub t_low: f64,
    pub t_high: f64,
}

impl ThresholdPair {
    /// A fixed pair, for comparisons against single- or dual-threshold
    /// baselines.
    pub fn fixed(t_low: f64, t_high: f64) -> Result<Self, ConsistencyError> {
        if t_low.is_nan() || t_high.is_nan() || t_low > t_high {
            return Err(ConsistencyError::InvalidThresholds { low: t_low, high: t_high });
        }
        Ok(ThresholdPair { t_low, t_high })
    }
}

/// `(S_2n, S_2n+1)` with `n` the number of views seeing the voxel.
pub fn thresholds(n_views: usize) -> Result<ThresholdPair, ConsistencyError> {
    if n_views < 1 {
        return Err(ConsistencyError::InvalidIndex(n_views));
    }
    let t_low = alt_harmonic_sum(2 * n_views);
    // the next term of the same summation
    let t_high = t_low + 1.0 / (2 * n_views + 1) as f64;
    Ok(ThresholdPair { t_low, t_high })
}

/// Thresholds for view counts `1..=max_views`, computed once per run.
#[derive(Debug, Clone)]
pub struct ThresholdSchedule {
    pairs: Vec<ThresholdPair>,
    fixed: Option<ThresholdPair>,
}

impl ThresholdSchedule {
    pub fn adaptive(max_views: usize) -> Self {
        let mut pairs = Vec::with_capacity(max_views);
        let mut sum = 0.0;
        let mut m = 0usize;
        for n in 1..=max_views {
            while m < 2 * n {
                m += 1;
                let term = 1.0 / m as f64;
                if m % 2 == 1 {
                    sum += term;
                } else {
                    sum -= term;
                }
            }
            pairs.push(ThresholdPair { t_low: sum, t_high: sum + 1.0 / (2 * n + 1) as f64 });
        }
        ThresholdSchedule { pairs, fixed: None }
    }

    pub fn fixed(pair: ThresholdPair) -> Self {
        ThresholdSchedule { pairs: Vec::new(), fixed: Some(pair) }
    }

    pub fn get(&self, n_views: usize) -> Result<ThresholdPair, ConsistencyError> {
        if let Some(pair) = self.fixed {
            return Ok(pair);
        }
        match n_views.checked_sub(1).and_then(|i| self.pairs.get(i)) {
            Some(pair) => Ok(*pair),
            None => thresholds(n_views),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Verdict {
    Strong,
    Candidate,
    Reject,
}

/// Strong above the high threshold, Reject below the low one, Candidate in
/// the closed band between them.
pub fn classify(mu: f64, t: ThresholdPair) -> Verdict {
    if mu > t.t_high {
        Verdict::Strong
    } else if mu < t.t_low {
        Verdict::Reject
    } else {
        Verdict::Candidate
    }
}

/// Set of voxels classified Strong so far in a run.
#[derive(Debug, Clone)]
pub struct StrongSet {
    flags: Vec<bool>,
}

impl StrongSet {
    pub fn new(grid: &VoxelGrid) -> Self {
        StrongSet { flags: vec![false; grid.len()] }
    }

    pub fn insert(&mut self, grid: &VoxelGrid, c: VoxelCoord) {
        self.flags[grid.index(c)] = true;
    }

    pub fn contains(&self, grid: &VoxelGrid, c: VoxelCoord) -> bool {
        grid.contains(c) && self.flags[grid.index(c)]
    }

    pub fn len(&self) -> usize {
        self.flags.iter().filter(|f| **f).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.flags.iter().any(|f| *f)
    }
}

/// Accepts a candidate iff one of its 26 neighbors is Strong.
pub fn resolve_candidate(coord: VoxelCoord, strong: &StrongSet, grid: &VoxelGrid) -> bool {
    match grid.neighbors26(coord) {
        Ok(mut neighbors) => neighbors.any(|n| strong.contains(grid, n)),
        Err(_) => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use nalgebra::Point3;

    #[test]
    fn trim_examples() {
        let v: Vec<f64> = (1..=10).map(|x| f64::from(x) * 10.0).collect();
        assert_eq!(trim_outliers(&v, 0.1).unwrap(), &v[1..9]);
        assert_eq!(trim_outliers(&v, 0.0).unwrap(), &v[..]);
        assert_eq!(trim_outliers(&[5.0], 0.4).unwrap(), &[5.0]);
        assert_eq!(trim_outliers::<f64>(&[], 0.1), Err(ConsistencyError::EmptyInput));
        assert_eq!(trim_outliers(&v, 0.5), Err(ConsistencyError::InvalidTrim(0.5)));
        assert_eq!(trim_outliers(&v, -0.1), Err(ConsistencyError::InvalidTrim(-0.1)));
        // 0.49 * 3 floors to 1, leaving the median
        assert_eq!(trim_outliers(&[1, 2, 3], 0.49).unwrap(), &[2]);
    }

    #[test]
    fn membership_examples() {
        let same = vec![Rgb::new(40, 80, 120); 5];
        assert_eq!(membership(&same, 0.1).unwrap(), 1.0);
        let two = [Rgb::new(100, 100, 100), Rgb::new(50, 100, 100)];
        assert_eq!(membership(&two, 0.0).unwrap(), 0.5);
        assert_eq!(membership(&[Rgb::BLACK; 3], 0.0).unwrap(), 1.0);
        assert_eq!(membership(&[], 0.0), Err(ConsistencyError::EmptyInput));
    }

    #[test]
    fn trimming_removes_an_outlier() {
        let mut colors = vec![Rgb::new(200, 200, 200); 9];
        colors.push(Rgb::new(20, 200, 200));
        assert!((membership(&colors, 0.0).unwrap() - 0.1).abs() < 1e-12);
        assert_eq!(membership(&colors, 0.1).unwrap(), 1.0);
    }

    #[test]
    fn mean_examples() {
        assert_eq!(mean_color(&[Rgb::new(10, 20, 30)]).unwrap(), Rgb::new(10, 20, 30));
        assert_eq!(mean_color(&[Rgb::BLACK, Rgb::new(255, 255, 255)]).unwrap(), Rgb::new(128, 128, 128));
        let reds = [Rgb::new(10, 0, 0), Rgb::new(20, 0, 0), Rgb::new(30, 0, 0)];
        assert_eq!(mean_color(&reds).unwrap(), Rgb::new(20, 0, 0));
        assert_eq!(mean_color(&[]), Err(ConsistencyError::EmptyInput));
    }

    #[test]
    fn harmonic_prefix() {
        let expected = [1.0, 0.5, 5.0 / 6.0, 7.0 / 12.0, 47.0 / 60.0];
        for (n, e) in expected.iter().enumerate() {
            assert!((alt_harmonic(n + 1).unwrap() - e).abs() < 1e-15);
        }
        assert_eq!(alt_harmonic(0), Err(ConsistencyError::InvalidIndex(0)));
        assert!(thresholds(0).is_err());
    }

    #[test]
    fn first_thresholds() {
        let t = thresholds(1).unwrap();
        assert!((t.t_low - 0.5).abs() < 1e-15 && (t.t_high - 5.0 / 6.0).abs() < 1e-15);
        let t = thresholds(2).unwrap();
        assert!((t.t_low - 7.0 / 12.0).abs() < 1e-15 && (t.t_high - 47.0 / 60.0).abs() < 1e-15);
    }

    #[test]
    fn schedule_matches_direct() {
        let schedule = ThresholdSchedule::adaptive(40);
        for n in 1..=45 {
            assert_eq!(schedule.get(n).unwrap(), thresholds(n).unwrap());
        }
        let fixed = ThresholdPair::fixed(0.6, 0.6).unwrap();
        assert_eq!(ThresholdSchedule::fixed(fixed).get(7).unwrap(), fixed);
        assert!(ThresholdPair::fixed(0.7, 0.6).is_err());
    }

    #[test]
    fn classify_examples() {
        let t = thresholds(1).unwrap();
        assert_eq!(classify(0.9, t), Verdict::Strong);
        assert_eq!(classify(0.4, t), Verdict::Reject);
        assert_eq!(classify(0.7, t), Verdict::Candidate);
        assert_eq!(classify(t.t_low, t), Verdict::Candidate);
        assert_eq!(classify(t.t_high, t), Verdict::Candidate);
    }

    #[test]
    fn candidate_resolution() {
        let grid = VoxelGrid::new(GridSpec::new(Point3::origin(), 1.0, [3, 3, 3]).unwrap()).unwrap();
        let mut strong = StrongSet::new(&grid);
        assert!(!resolve_candidate([1, 1, 1], &strong, &grid));
        strong.insert(&grid, [0, 0, 0]);
        assert!(resolve_candidate([1, 1, 1], &strong, &grid));
        assert!(!resolve_candidate([2, 2, 2], &strong, &grid));
        // same-layer neighbor
        strong.insert(&grid, [2, 1, 2]);
        assert!(resolve_candidate([2, 2, 2], &strong, &grid));
        assert_eq!(strong.len(), 2);
    }
}
