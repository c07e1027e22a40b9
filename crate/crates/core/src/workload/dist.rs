use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Exp, Pareto};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum CdfError {
    #[error("CDF has no points")]
    Empty,
    #[error("line {line}: expected `size_bytes probability`")]
    Syntax { line: usize },
    #[error("point {index}: sizes must be positive and strictly increasing")]
    SizesNotIncreasing { index: usize },
    #[error("point {index}: probability {p} outside [0, 1] or decreasing")]
    NotMonotone { index: usize, p: f64 },
    #[error("last probability is {0}, expected 1")]
    NotNormalized(f64),
    #[error("cannot read CDF file: {0}")]
    Io(String),
}

/// Empirical flow-size distribution with step inverse-transform sampling:
/// a uniform draw `u` selects the first size whose cumulative probability
/// reaches `u`.
#[derive(Clone, Debug, PartialEq)]
pub struct EmpiricalCdf {
    points: Vec<(u64, f64)>,
}

impl EmpiricalCdf {
    pub fn new(points: Vec<(u64, f64)>) -> Result<Self, CdfError> {
        if points.is_empty() {
            return Err(CdfError::Empty);
        }
        let mut last_size = 0u64;
        let mut last_p = 0.0f64;
        for (i, &(s, p)) in points.iter().enumerate() {
            if s == 0 || (i > 0 && s <= last_size) {
                return Err(CdfError::SizesNotIncreasing { index: i });
            }
            if !(0.0..=1.0).contains(&p) || p < last_p {
                return Err(CdfError::NotMonotone { index: i, p });
            }
            last_size = s;
            last_p = p;
        }
        if (last_p - 1.0).abs() > 1e-9 {
            return Err(CdfError::NotNormalized(last_p));
        }
        Ok(Self { points })
    }

    /// Parses `size_bytes probability` lines; blank lines and `#` comments
    /// are skipped.
    pub fn parse(text: &str) -> Result<Self, CdfError> {
        let mut pts = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut it = line.split_whitespace();
            let (Some(a), Some(b), None) = (it.next(), it.next(), it.next()) else {
                return Err(CdfError::Syntax { line: i + 1 });
            };
            let size = a.parse::<f64>().map_err(|_| CdfError::Syntax { line: i + 1 })?;
            let p = b.parse::<f64>().map_err(|_| CdfError::Syntax { line: i + 1 })?;
            if !(size.is_finite() && size >= 0.0) {
                return Err(CdfError::Syntax { line: i + 1 });
            }
            pts.push((size.round() as u64, p));
        }
        Self::new(pts)
    }

    pub fn load(path: &Path) -> Result<Self, CdfError> {
        let text = std::fs::read_to_string(path).map_err(|e| CdfError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn points(&self) -> &[(u64, f64)] {
        &self.points
    }

    pub fn cdf(&self, size: u64) -> f64 {
        self.points.iter().take_while(|&&(s, _)| s <= size).last().map_or(0.0, |&(_, p)| p)
    }

    /// Size for a uniform draw in `[0, 1)`.
    pub fn quantile(&self, u: f64) -> u64 {
        let i = self.points.partition_point(|&(_, p)| p <= u);
        self.points[i.min(self.points.len() - 1)].0
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        self.quantile(rng.random::<f64>())
    }

    pub fn mean(&self) -> f64 {
        let mut prev = 0.0;
        let mut m = 0.0;
        for &(s, p) in &self.points {
            m += s as f64 * (p - prev);
            prev = p;
        }
        m
    }
}

/// Pareto scale giving `mean` at `shape`: `mean = shape * scale / (shape - 1)`.
pub fn pareto_scale(mean: f64, shape: f64) -> f64 {
    mean * (shape - 1.0) / shape
}

#[derive(Clone, Copy, Debug)]
pub struct ParetoSizes {
    dist: Pareto<f64>,
}

impl ParetoSizes {
    pub fn new(mean: f64, shape: f64) -> Self {
        let dist = Pareto::new(pareto_scale(mean, shape), shape).expect("valid Pareto parameters");
        Self { dist }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        self.dist.sample(rng).ceil() as u64
    }
}

/// Exponential inter-arrival gaps of a Poisson process, in nanoseconds.
#[derive(Clone, Copy, Debug)]
pub struct PoissonArrivals {
    exp: Exp<f64>,
}

impl PoissonArrivals {
    pub fn new(rate_per_sec: f64) -> Self {
        Self { exp: Exp::new(rate_per_sec / 1e9).expect("positive arrival rate") }
    }

    pub fn gap_ns<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        (self.exp.sample(rng).ceil() as u64).max(1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_validate() {
        let c = EmpiricalCdf::parse("# sizes\n1024 0.5\n1048576 1.0\n").unwrap();
        assert_eq!(c.points().len(), 2);
        assert_eq!(c.quantile(0.2), 1024);
        assert_eq!(c.quantile(0.5), 1_048_576);
        assert_eq!(c.quantile(0.99), 1_048_576);
        assert_eq!(EmpiricalCdf::parse("10 0.5\n5 1.0").unwrap_err(), CdfError::SizesNotIncreasing { index: 1 });
        assert!(matches!(EmpiricalCdf::parse("10 0.6\n20 0.5\n30 1"), Err(CdfError::NotMonotone { index: 1, .. })));
        assert_eq!(EmpiricalCdf::parse("10 0.5\n20 0.9").unwrap_err(), CdfError::NotNormalized(0.9));
        assert_eq!(EmpiricalCdf::parse("10 0.5 7").unwrap_err(), CdfError::Syntax { line: 1 });
        assert_eq!(EmpiricalCdf::parse("").unwrap_err(), CdfError::Empty);
    }

    #[test]
    fn degenerate_cdf() {
        let c = EmpiricalCdf::new(vec![(65536, 1.0)]).unwrap();
        assert_eq!(c.quantile(0.0), 65536);
        assert_eq!(c.quantile(0.999), 65536);
        assert_eq!(c.mean(), 65536.0);
    }

    #[test]
    fn pareto_scale_identity() {
        assert!((pareto_scale(192.0, 1.5) - 64.0).abs() < 1e-12);
    }
}
