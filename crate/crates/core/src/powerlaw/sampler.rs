use rand::Rng;

use crate::error::{Error, Result};
use crate::zeta::hurwitz_zeta;

/// Inverse-CDF table stops once the remaining mass drops below this.
const TABLE_TAIL_MASS: f64 = 1e-9;
/// Hard cap on the table length; mass beyond it is drawn by rejection.
const MAX_TABLE_LEN: usize = 1 << 16;
/// Draws are clamped here so they stay exactly representable as `f64`.
const MAX_VALUE: u64 = 1 << 53;

/// Exact sampler for `p(q) = q^{-γ} / ζ(γ, x_min)`, `q ≥ x_min`.
///
/// Values up to a table cutoff come from inverse-CDF lookup; the remainder is
/// drawn by rejection from a floored continuous Pareto proposal.
#[derive(Debug, Clone)]
pub struct DiscretePowerLaw {
    gamma: f64,
    x_min: u64,
    norm: f64,
    cdf: Vec<f64>,
    /// `guide[j]` is the first index with `cdf > j / guide.len()`, so a lookup
    /// starts next to its answer instead of bisecting.
    guide: Vec<u32>,
    /// First value not covered by `cdf`.
    tail_start: u64,
    /// Envelope constant `(1 + 1/tail_start)^γ` for the tail rejection step.
    envelope: f64,
}

fn bucket_floor(j: usize, buckets: usize) -> f64 {
    j as f64 / buckets as f64
}

impl DiscretePowerLaw {
    pub fn new(gamma: f64, x_min: u64) -> Result<Self> {
        if !(gamma > 1.0 && gamma.is_finite()) {
            return Err(Error::InvalidArgument(format!("power-law exponent must be > 1, got {gamma}")));
        }
        if x_min == 0 {
            return Err(Error::InvalidArgument("x_min must be >= 1".into()));
        }
        let norm = hurwitz_zeta(gamma, x_min as f64);
        let mut cdf = Vec::new();
        let mut cum = 0.0;
        let mut q = x_min;
        while cdf.len() < MAX_TABLE_LEN {
            cum += (q as f64).powf(-gamma) / norm;
            cdf.push(cum);
            q += 1;
            if 1.0 - cum < TABLE_TAIL_MASS {
                break;
            }
        }
        let tail_start = q;
        let buckets = cdf.len();
        let guide = (0..buckets)
            .map(|j| cdf.partition_point(|&c| c <= bucket_floor(j, buckets)) as u32)
            .collect();
        Ok(Self {
            gamma,
            x_min,
            norm,
            cdf,
            guide,
            tail_start,
            envelope: (1.0 + 1.0 / tail_start as f64).powf(gamma),
        })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn x_min(&self) -> u64 {
        self.x_min
    }

    pub fn pmf(&self, q: u64) -> f64 {
        if q < self.x_min {
            0.0
        } else {
            (q as f64).powf(-self.gamma) / self.norm
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let u: f64 = rng.gen();
        let table_mass = *self.cdf.last().expect("table is never empty");
        if u < table_mass {
            return self.x_min + self.table_index(u) as u64;
        }
        self.sample_tail(rng)
    }

    /// First index with `cdf > u`, for `u` below the table mass.
    fn table_index(&self, u: f64) -> usize {
        let buckets = self.guide.len();
        let mut j = ((u * buckets as f64) as usize).min(buckets - 1);
        // `u * buckets` can round up across a bucket edge, never further.
        if j > 0 && bucket_floor(j, buckets) > u {
            j -= 1;
        }
        let mut idx = self.guide[j] as usize;
        while self.cdf[idx] <= u {
            idx += 1;
        }
        idx
    }

    pub fn sample_n<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Vec<u64> {
        (0..n).map(|_| self.sample(rng)).collect()
    }

    fn sample_tail<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let k0 = self.tail_start as f64;
        let shape = self.gamma - 1.0;
        loop {
            let u = 1.0 - rng.gen::<f64>();
            let x = k0 * u.powf(-1.0 / shape);
            if x >= MAX_VALUE as f64 {
                return MAX_VALUE;
            }
            let k = x.floor();
            // Proposal mass of k is ∫_k^{k+1} x^{-γ} dx (up to a constant).
            let cell = -k.powf(-shape) * (-shape * (1.0 / k).ln_1p()).exp_m1() / shape;
            let ratio = k.powf(-self.gamma) / cell;
            if rng.gen::<f64>() * self.envelope <= ratio {
                return k as u64;
            }
        }
    }
}
