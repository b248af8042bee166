use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Complementary CDF `F(q)` = fraction of observations `>= q`, evaluated at
/// each distinct observed `q` in increasing order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Ccdf<T: Real> {
    pub points: Vec<(u64, T)>,
}

pub fn ccdf<T: Real>(values: &[u64]) -> Result<Ccdf<T>> {
    if values.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut sorted = values.to_vec();
    sorted.sort_unstable();
    let n = T::of_count(sorted.len());
    let mut points = Vec::new();
    let mut i = 0;
    while i < sorted.len() {
        let q = sorted[i];
        points.push((q, T::of_count(sorted.len() - i) / n));
        i += sorted[i..].partition_point(|&v| v == q);
    }
    Ok(Ccdf { points })
}

/// Share of the total held by the top `⌈p·n⌉` values.
pub fn top_share<T: Real>(values: &[u64], p: T) -> Result<T> {
    if values.is_empty() {
        return Err(Error::EmptySample);
    }
    if !(p > T::zero() && p <= T::one()) {
        return Err(Error::InvalidArgument(format!("fraction must lie in (0, 1], got {p}")));
    }
    let mut sorted = values.to_vec();
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    let n = sorted.len();
    // Absorb representation error in p so that, e.g., 0.2 * 10 selects 2 values.
    let slack = T::of_count(n) * T::epsilon() * T::lit(4.0);
    let k = (p * T::of_count(n) - slack).ceil().to_usize().unwrap_or(n).clamp(1, n);
    let top: u64 = sorted[..k].iter().sum();
    let total: u64 = sorted.iter().sum();
    if total == 0 {
        return Ok(T::one());
    }
    Ok(T::of_u64(top) / T::of_u64(total))
}

/// Concentration curve: `(k/n, share held by the k largest values)` for `k = 0..=n`.
pub fn lorenz_curve<T: Real>(values: &[u64]) -> Result<Vec<(T, T)>> {
    if values.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut sorted = values.to_vec();
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    let n = T::of_count(sorted.len());
    let total = T::of_u64(sorted.iter().sum::<u64>().max(1));
    let mut acc = 0u64;
    let mut curve = Vec::with_capacity(sorted.len() + 1);
    curve.push((T::zero(), T::zero()));
    for (k, &v) in sorted.iter().enumerate() {
        acc += v;
        curve.push((T::of_count(k + 1) / n, T::of_u64(acc) / total));
    }
    Ok(curve)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ccdf_counts() {
        let c: Ccdf<f64> = ccdf(&[1, 1, 2, 3]).unwrap();
        assert_eq!(c.points, vec![(1, 1.0), (2, 0.5), (3, 0.25)]);
        let c: Ccdf<f64> = ccdf(&[5]).unwrap();
        assert_eq!(c.points, vec![(5, 1.0)]);
        assert!(ccdf::<f64>(&[]).is_err());
    }

    #[test]
    fn ccdf_geometric_sample_is_monotone() {
        let c: Ccdf<f64> = ccdf(&[1, 2, 4, 8, 16, 32, 64, 1, 2, 1]).unwrap();
        assert_eq!(c.points[0], (1, 1.0));
        assert!(c.points.windows(2).all(|w| w[0].1 > w[1].1 && w[0].0 < w[1].0));
    }

    #[test]
    fn top_share_hand_values() {
        let s: f64 = top_share(&[4, 3, 2, 1], 0.5).unwrap();
        assert!((s - 0.7).abs() < 1e-15);
        let s: f64 = top_share(&[9, 1, 1, 5], 1.0).unwrap();
        assert_eq!(s, 1.0);
        let values: Vec<u64> = (1..=10).collect();
        let s: f64 = top_share(&values, 0.2).unwrap();
        assert!((s - 19.0 / 55.0).abs() < 1e-15);
        let s: f32 = top_share(&values, 0.2f32).unwrap();
        assert!((s - 19.0 / 55.0).abs() < 1e-6);
        assert!(top_share::<f64>(&values, 0.0).is_err());
        assert!(top_share::<f64>(&[], 0.5).is_err());
    }

    #[test]
    fn lorenz_endpoints() {
        let curve: Vec<(f64, f64)> = lorenz_curve(&[4, 3, 2, 1]).unwrap();
        assert_eq!(curve.first(), Some(&(0.0, 0.0)));
        assert_eq!(curve.last(), Some(&(1.0, 1.0)));
        assert_eq!(curve[2], (0.5, 0.7));
    }
}
