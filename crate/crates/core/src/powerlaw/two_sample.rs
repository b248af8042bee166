use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct TwoSampleKs<T: Real> {
    pub statistic: T,
    pub p_value: T,
}

/// Two-sample Kolmogorov–Smirnov test.
///
/// The statistic is computed exactly in integer arithmetic; the p-value uses
/// the asymptotic Kolmogorov distribution at
/// `λ = (√nₑ + 0.12 + 0.11/√nₑ)·D` with `nₑ = n_a·n_b/(n_a+n_b)`.
pub fn two_sample_ks<T: Real>(a: &[u64], b: &[u64]) -> Result<TwoSampleKs<T>> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_unstable();
    ys.sort_unstable();
    let (na, nb) = (xs.len() as u128, ys.len() as u128);

    // Track |i/na - j/nb| as |i*nb - j*na| to keep ties exact.
    let (mut i, mut j) = (0usize, 0usize);
    let mut worst: u128 = 0;
    while i < xs.len() && j < ys.len() {
        let v = xs[i].min(ys[j]);
        while i < xs.len() && xs[i] == v {
            i += 1;
        }
        while j < ys.len() && ys[j] == v {
            j += 1;
        }
        let gap = (i as u128 * nb).abs_diff(j as u128 * na);
        worst = worst.max(gap);
    }
    let statistic = T::from_u128(worst).unwrap() / T::from_u128(na * nb).unwrap();

    let ne = T::from_u128(na * nb).unwrap() / T::from_u128(na + nb).unwrap();
    let root = ne.sqrt();
    let lambda = (root + T::lit(0.12) + T::lit(0.11) / root) * statistic;
    Ok(TwoSampleKs {
        statistic,
        p_value: kolmogorov_survival(lambda),
    })
}

/// `Q(λ) = P(K > λ)` for the Kolmogorov distribution.
pub fn kolmogorov_survival<T: Real>(lambda: T) -> T {
    if lambda.is_nan() || lambda <= T::zero() {
        return T::one();
    }
    let q = if lambda < T::lit(1.18) {
        // Jacobi-theta form converges fast for small λ.
        let pi = T::PI();
        let factor = -pi * pi / (T::lit(8.0) * lambda * lambda);
        let mut sum = T::zero();
        for k in 1..=8 {
            let odd = T::of_count(2 * k - 1);
            sum = sum + (factor * odd * odd).exp();
        }
        T::one() - (T::lit(2.0) * pi).sqrt() / lambda * sum
    } else {
        let mut sum = T::zero();
        let mut sign = T::one();
        for k in 1..=100 {
            let kk = T::of_count(k);
            let term = (T::lit(-2.0) * kk * kk * lambda * lambda).exp();
            sum = sum + sign * term;
            if term < T::epsilon() * sum.abs() {
                break;
            }
            sign = -sign;
        }
        T::lit(2.0) * sum
    };
    q.max(T::zero()).min(T::one())
}
