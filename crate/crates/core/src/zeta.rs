//! Hurwitz zeta function for real `s > 1`, `a > 0`.
//!
//! Direct summation until the shifted argument reaches [`SHIFT`], then an
//! Euler–Maclaurin tail with eight Bernoulli corrections. Relative error is
//! below 1e-12 in `f64` for `s` in `(1, 10]`.

use crate::scalar::Real;

const SHIFT: f64 = 10.0;

/// `B_{2j} / (2j)!` for `j = 1..=8`.
const BERNOULLI_OVER_FACTORIAL: [f64; 8] = [
    1.0 / 12.0,
    -1.0 / 720.0,
    1.0 / 30_240.0,
    -1.0 / 1_209_600.0,
    1.0 / 47_900_160.0,
    -691.0 / 1_307_674_368_000.0,
    1.0 / 74_724_249_600.0,
    -3617.0 / 10_670_622_842_880_000.0,
];

/// `ζ(s, a) = Σ_{k≥0} (a + k)^{-s}`.
pub fn hurwitz_zeta<T: Real>(s: T, a: T) -> T {
    debug_assert!(s > T::one(), "hurwitz_zeta requires s > 1");
    debug_assert!(a > T::zero(), "hurwitz_zeta requires a > 0");

    let shift = T::lit(SHIFT);
    let direct_terms = if a < shift {
        (shift - a).ceil().to_usize().unwrap_or(0)
    } else {
        0
    };

    // Smallest terms first.
    let mut head = T::zero();
    for k in (0..direct_terms).rev() {
        head = head + (a + T::of_count(k)).powf(-s);
    }

    let x = a + T::of_count(direct_terms);
    let x_pow = x.powf(-s);
    let x2 = x * x;
    let mut tail = x * x_pow / (s - T::one()) + x_pow / T::lit(2.0);

    // term_j = B_{2j}/(2j)! * s(s+1)...(s+2j-2) * x^{-s-2j+1}
    let mut rising = s * x_pow / x;
    let mut corrections = T::zero();
    for (j, &coef) in BERNOULLI_OVER_FACTORIAL.iter().enumerate() {
        if j > 0 {
            let k = T::of_count(2 * j);
            rising = rising * (s + k - T::one()) * (s + k) / x2;
        }
        corrections = corrections + T::lit(coef) * rising;
    }
    tail = tail + corrections;

    head + tail
}
