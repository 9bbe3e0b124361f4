//! Correlation coefficients with tie handling.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CorrelationError {
    #[error("series lengths differ ({left} vs {right})")]
    LengthMismatch { left: usize, right: usize },
    #[error("need at least 2 pairs, got {0}")]
    TooShort(usize),
    #[error("series contains a non-finite value")]
    NonFinite,
    /// Zero variance (or, for tau-b, every pair tied in one series).
    #[error("correlation undefined for constant input")]
    Undefined,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coefficient {
    Pearson,
    Spearman,
    Kendall,
}

impl Coefficient {
    pub fn symbol(self) -> &'static str {
        match self {
            Coefficient::Pearson => "r",
            Coefficient::Spearman => "ρ",
            Coefficient::Kendall => "τ",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Coefficient::Pearson => "pearson",
            Coefficient::Spearman => "spearman",
            Coefficient::Kendall => "kendall",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TauVariant {
    TauA,
    #[default]
    TauB,
}

/// Metric scores paired with human scores, optionally tagged with a group.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedSeries {
    pub metric_scores: Vec<f64>,
    pub human_scores: Vec<f64>,
    pub group_id: Option<String>,
}

impl PairedSeries {
    pub fn new(metric_scores: Vec<f64>, human_scores: Vec<f64>) -> Result<Self, CorrelationError> {
        check(&metric_scores, &human_scores)?;
        Ok(Self {
            metric_scores,
            human_scores,
            group_id: None,
        })
    }

    pub fn correlate(&self, coef: Coefficient, variant: TauVariant) -> Result<f64, CorrelationError> {
        correlate(coef, &self.metric_scores, &self.human_scores, variant)
    }
}

fn check(x: &[f64], y: &[f64]) -> Result<(), CorrelationError> {
    if x.len() != y.len() {
        return Err(CorrelationError::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(CorrelationError::TooShort(x.len()));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(CorrelationError::NonFinite);
    }
    Ok(())
}

pub fn correlate(coef: Coefficient, x: &[f64], y: &[f64], variant: TauVariant) -> Result<f64, CorrelationError> {
    match coef {
        Coefficient::Pearson => pearson(x, y),
        Coefficient::Spearman => spearman(x, y),
        Coefficient::Kendall => kendall_tau(x, y, variant),
    }
}

pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, CorrelationError> {
    check(x, y)?;
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(CorrelationError::Undefined);
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// 1-based ranks; tied values share the mean of the ranks they span.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}

pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64, CorrelationError> {
    check(x, y)?;
    pearson(&average_ranks(x), &average_ranks(y))
}

/// Pairs within runs of equal values in an already sorted sequence.
fn tied_pairs<T: PartialEq>(sorted: &[T]) -> u64 {
    let mut total = 0u64;
    let mut run = 1u64;
    for w in sorted.windows(2) {
        if w[0] == w[1] {
            run += 1;
        } else {
            total += run * (run - 1) / 2;
            run = 1;
        }
    }
    total + run * (run - 1) / 2
}

/// Sorts `v` and returns the number of strictly inverted pairs.
fn sort_counting_inversions(v: &mut Vec<f64>) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mut right = v.split_off(n / 2);
    let mut swaps = sort_counting_inversions(v) + sort_counting_inversions(&mut right);
    let mut merged = Vec::with_capacity(n);
    let (mut i, mut j) = (0, 0);
    while i < v.len() && j < right.len() {
        if right[j] < v[i] {
            swaps += (v.len() - i) as u64;
            merged.push(right[j]);
            j += 1;
        } else {
            merged.push(v[i]);
            i += 1;
        }
    }
    merged.extend_from_slice(&v[i..]);
    merged.extend_from_slice(&right[j..]);
    *v = merged;
    swaps
}

/// Kendall rank correlation in O(n log n). Pairs tied in either series count
/// as neither concordant nor discordant.
pub fn kendall_tau(x: &[f64], y: &[f64], variant: TauVariant) -> Result<f64, CorrelationError> {
    check(x, y)?;
    let n = x.len() as u64;
    let n0 = n * (n - 1) / 2;

    let mut pairs: Vec<(f64, f64)> = x.iter().copied().zip(y.iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let xs: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let tied_x = tied_pairs(&xs);
    let tied_xy = tied_pairs(&pairs);

    let mut ys: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let swaps = sort_counting_inversions(&mut ys);
    let tied_y = tied_pairs(&ys);

    let c_minus_d = n0 as i64 - tied_x as i64 - tied_y as i64 + tied_xy as i64 - 2 * swaps as i64;
    let value = match variant {
        TauVariant::TauA => c_minus_d as f64 / n0 as f64,
        TauVariant::TauB => {
            let denom = ((n0 - tied_x) as f64 * (n0 - tied_y) as f64).sqrt();
            if denom == 0.0 {
                return Err(CorrelationError::Undefined);
            }
            c_minus_d as f64 / denom
        }
    };
    Ok(value.clamp(-1.0, 1.0))
}

/// Fraction of unordered pairs with equal values; 0 when there are no pairs.
pub fn tie_fraction(scores: &[f64]) -> f64 {
    let n = scores.len() as u64;
    if n < 2 {
        return 0.0;
    }
    let mut sorted = scores.to_vec();
    sorted.sort_by(f64::total_cmp);
    tied_pairs(&sorted) as f64 / (n * (n - 1) / 2) as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn spearman_examples() {
        assert!(close(spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap(), -1.0));
        assert!(close(spearman(&[1.0, 2.0, 3.0], &[1.0, 3.0, 2.0]).unwrap(), 0.5));
        assert_eq!(spearman(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]), Err(CorrelationError::Undefined));
    }

    #[test]
    fn kendall_examples() {
        let tau_a = kendall_tau(&[1.0, 2.0, 3.0], &[1.0, 3.0, 2.0], TauVariant::TauA).unwrap();
        assert!(close(tau_a, 1.0 / 3.0));
        let tau_b = kendall_tau(&[1.0, 2.0, 2.0, 3.0], &[1.0, 2.0, 3.0, 4.0], TauVariant::TauB).unwrap();
        assert!(close(tau_b, 5.0 / 30f64.sqrt()));
        for v in [TauVariant::TauA, TauVariant::TauB] {
            assert_eq!(kendall_tau(&[1.0, 2.0, 5.0], &[1.0, 2.0, 5.0], v).unwrap(), 1.0);
        }
        assert_eq!(
            kendall_tau(&[2.0, 2.0], &[1.0, 3.0], TauVariant::TauB),
            Err(CorrelationError::Undefined)
        );
    }

    #[test]
    fn pearson_examples() {
        assert!(close(pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]).unwrap(), 1.0));
        assert!(close(pearson(&[1.0, 2.0, 3.0], &[6.0, 4.0, 2.0]).unwrap(), -1.0));
        assert!(close(pearson(&[1.0, 2.0, 3.0, 4.0], &[1.0, 3.0, 2.0, 4.0]).unwrap(), 0.8));
    }

    #[test]
    fn tie_fraction_examples() {
        assert_eq!(tie_fraction(&[3.0, 3.0, 3.0]), 1.0);
        assert_eq!(tie_fraction(&[1.0, 2.0, 3.0]), 0.0);
        assert!(close(tie_fraction(&[1.0, 1.0, 2.0]), 1.0 / 3.0));
    }

    #[test]
    fn input_checks() {
        assert_eq!(pearson(&[1.0], &[1.0]), Err(CorrelationError::TooShort(1)));
        assert!(matches!(spearman(&[1.0, 2.0], &[1.0]), Err(CorrelationError::LengthMismatch { .. })));
        assert_eq!(pearson(&[1.0, f64::NAN], &[1.0, 2.0]), Err(CorrelationError::NonFinite));
    }

    #[test]
    fn ranks_average_ties() {
        assert_eq!(average_ranks(&[10.0, 20.0, 20.0, 5.0]), vec![2.0, 3.5, 3.5, 1.0]);
    }
}
