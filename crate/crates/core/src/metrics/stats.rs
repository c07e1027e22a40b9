use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StatsError {
    #[error("no values")]
    Empty,
    #[error("all values are zero")]
    AllZero,
    #[error("negative or non-finite value")]
    BadValue,
}

/// Jain's fairness index `(sum x)^2 / (n * sum x^2)`.
pub fn jain_index(values: &[f64]) -> Result<f64, StatsError> {
    if values.is_empty() {
        return Err(StatsError::Empty);
    }
    if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(StatsError::BadValue);
    }
    let sum: f64 = values.iter().sum();
    let sq: f64 = values.iter().map(|v| v * v).sum();
    if sq == 0.0 {
        return Err(StatsError::AllZero);
    }
    Ok(sum * sum / (values.len() as f64 * sq))
}

/// Nearest-rank percentile of an ascending slice, `p` in `[0, 1]`.
pub fn percentile_sorted<T: Copy>(sorted: &[T], p: f64) -> Option<T> {
    if sorted.is_empty() {
        return None;
    }
    let rank = (p * sorted.len() as f64).ceil() as usize;
    Some(sorted[rank.clamp(1, sorted.len()) - 1])
}

pub fn percentile(values: &[u64], p: f64) -> Option<u64> {
    let mut v = values.to_vec();
    v.sort_unstable();
    percentile_sorted(&v, p)
}

pub fn mean(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        None
    } else {
        Some(values.iter().sum::<f64>() / values.len() as f64)
    }
}

/// Smallest value whose cumulative weight reaches `p` of the total.
pub fn weighted_percentile(samples: &[(u64, u64)], p: f64) -> Option<u64> {
    let total: u128 = samples.iter().map(|&(_, w)| w as u128).sum();
    if total == 0 {
        return None;
    }
    let mut v = samples.to_vec();
    v.sort_unstable();
    let target = p * total as f64;
    let mut acc = 0u128;
    for &(x, w) in &v {
        acc += w as u128;
        if acc as f64 >= target && w > 0 {
            return Some(x);
        }
    }
    v.iter().rev().find(|s| s.1 > 0).map(|s| s.0)
}

/// Weighted mean of `(value, weight)` pairs.
pub fn weighted_mean(samples: &[(u64, u64)]) -> Option<f64> {
    let total: u128 = samples.iter().map(|&(_, w)| w as u128).sum();
    if total == 0 {
        return None;
    }
    let s: u128 = samples.iter().map(|&(x, w)| x as u128 * w as u128).sum();
    Some(s as f64 / total as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jain_examples() {
        assert_eq!(jain_index(&[10.0, 10.0, 10.0, 10.0]).unwrap(), 1.0);
        assert_eq!(jain_index(&[7.0, 0.0, 0.0, 0.0]).unwrap(), 0.25);
        // 36 / (3 * 14)
        assert!((jain_index(&[1.0, 2.0, 3.0]).unwrap() - 36.0 / 42.0).abs() < 1e-15);
        assert_eq!(jain_index(&[0.0, 0.0]), Err(StatsError::AllZero));
        assert_eq!(jain_index(&[]), Err(StatsError::Empty));
        assert_eq!(jain_index(&[-1.0]), Err(StatsError::BadValue));
    }

    #[test]
    fn nearest_rank() {
        let v: Vec<u64> = (1..=10).collect();
        assert_eq!(percentile(&v, 0.9), Some(9));
        assert_eq!(percentile(&v, 0.5), Some(5));
        assert_eq!(percentile(&v, 1.0), Some(10));
        assert_eq!(percentile(&v, 0.0), Some(1));
        assert_eq!(percentile(&[], 0.5), None);
    }

    #[test]
    fn weighted() {
        let s = [(0, 10), (10, 30), (20, 60)];
        assert_eq!(weighted_percentile(&s, 0.5), Some(20));
        assert_eq!(weighted_percentile(&s, 0.4), Some(10));
        assert_eq!(weighted_mean(&s), Some(15.0));
        assert_eq!(weighted_percentile(&[(5, 0)], 0.5), None);
    }
}
