//! Discrete power-law fitting: maximum likelihood, KS distance, parametric
//! bootstrap goodness of fit, and the smallest-passing-`x_min` rule.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::powerlaw::DiscretePowerLaw;
use crate::scalar::Real;
use crate::seed::{derive_seed, rng_from_seed, stream, DEFAULT_SEED};
use crate::zeta::hurwitz_zeta;

pub const GAMMA_LOWER: f64 = 1.01;
pub const GAMMA_UPPER: f64 = 6.0;
/// `select_xmin` gives up once fewer tail observations than this remain.
pub const MIN_TAIL_FOR_SELECTION: usize = 10;
pub const MIN_BOOTSTRAP: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct PowerLawFit<T: Real> {
    pub gamma: T,
    pub x_min: u64,
    pub ks_stat: T,
    pub p_value: T,
    pub n_tail: usize,
    pub n_total: usize,
    pub seed: u64,
    pub n_boot: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub p_threshold: f64,
    pub n_boot: usize,
    pub seed: u64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            p_threshold: 0.1,
            n_boot: 1000,
            seed: DEFAULT_SEED,
        }
    }
}

impl FitOptions {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_n_boot(mut self, n_boot: usize) -> Self {
        self.n_boot = n_boot;
        self
    }
}

/// Observations `>= x_min`, reduced to what the likelihood and KS distance need.
#[derive(Debug, Clone)]
struct Tail<T> {
    x_min: u64,
    n: usize,
    sum_ln: T,
    /// Distinct values with multiplicities, ascending.
    distinct: Vec<(u64, usize)>,
}

impl<T: Real> Tail<T> {
    fn from_values(values: &[u64], x_min: u64) -> Self {
        let mut tail: Vec<u64> = values.iter().copied().filter(|&v| v >= x_min).collect();
        tail.sort_unstable();
        Self::from_sorted(&tail, x_min)
    }

    fn from_sorted(sorted: &[u64], x_min: u64) -> Self {
        let mut distinct: Vec<(u64, usize)> = Vec::new();
        let mut sum_ln = T::zero();
        for &v in sorted {
            match distinct.last_mut() {
                Some((last, count)) if *last == v => *count += 1,
                _ => distinct.push((v, 1)),
            }
        }
        for &(v, count) in &distinct {
            sum_ln = sum_ln + T::of_count(count) * T::of_u64(v).ln();
        }
        Self {
            x_min,
            n: sorted.len(),
            sum_ln,
            distinct,
        }
    }

    fn require_fit_input(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::TooFewTail {
                x_min: self.x_min,
                found: self.n,
                required: 2,
            });
        }
        if self.distinct.len() == 1 {
            return Err(Error::DegenerateTail {
                n: self.n,
                value: self.distinct[0].0,
            });
        }
        Ok(())
    }

    fn log_likelihood(&self, gamma: T) -> T {
        let norm = hurwitz_zeta(gamma, T::of_u64(self.x_min));
        -T::of_count(self.n) * norm.ln() - gamma * self.sum_ln
    }

    /// Golden-section maximisation of the concave log-likelihood on the
    /// exponent bounds. Degenerate tails converge to a bound.
    fn mle(&self) -> T {
        let inv_phi = (T::lit(5.0).sqrt() - T::one()) / T::lit(2.0);
        let tol = T::search_tolerance();
        let mut lo = T::lit(GAMMA_LOWER);
        let mut hi = T::lit(GAMMA_UPPER);
        let mut c = hi - inv_phi * (hi - lo);
        let mut d = lo + inv_phi * (hi - lo);
        let mut fc = self.log_likelihood(c);
        let mut fd = self.log_likelihood(d);
        while hi - lo > tol {
            if fc > fd {
                hi = d;
                d = c;
                fd = fc;
                c = hi - inv_phi * (hi - lo);
                fc = self.log_likelihood(c);
            } else {
                lo = c;
                c = d;
                fc = fd;
                d = lo + inv_phi * (hi - lo);
                fd = self.log_likelihood(d);
            }
        }
        ((lo + hi) / T::lit(2.0)).min(T::lit(GAMMA_UPPER))
    }

    /// Largest absolute gap between the empirical and model CDFs over all
    /// integers `>= x_min`. Between observed values the empirical CDF is flat
    /// while the model CDF rises, so each gap is checked at both ends.
    fn ks(&self, gamma: T) -> T {
        let norm = hurwitz_zeta(gamma, T::of_u64(self.x_min));
        let n = T::of_count(self.n);
        let mut below = 0usize;
        let mut worst = T::zero();
        for &(v, count) in &self.distinct {
            let upper = hurwitz_zeta(gamma, T::of_u64(v + 1));
            let cdf_at = T::one() - upper / norm;
            if v > self.x_min {
                let cdf_before = T::one() - (upper + T::of_u64(v).powf(-gamma)) / norm;
                worst = worst.max((T::of_count(below) / n - cdf_before).abs());
            }
            below += count;
            worst = worst.max((T::of_count(below) / n - cdf_at).abs());
        }
        worst
    }
}

/// Maximum-likelihood exponent of the discrete power law fitted to `values >= x_min`.
pub fn mle_gamma<T: Real>(values: &[u64], x_min: u64) -> Result<T> {
    check_x_min(x_min)?;
    let tail = Tail::<T>::from_values(values, x_min);
    tail.require_fit_input()?;
    Ok(tail.mle())
}

/// KS distance between the tail of `values` and the power law `(gamma, x_min)`.
pub fn ks_distance<T: Real>(values: &[u64], gamma: T, x_min: u64) -> Result<T> {
    check_x_min(x_min)?;
    if gamma.is_nan() || gamma <= T::one() {
        return Err(Error::InvalidArgument(format!("exponent must be > 1, got {gamma}")));
    }
    let tail = Tail::<T>::from_values(values, x_min);
    if tail.n < 2 {
        return Err(Error::TooFewTail {
            x_min,
            found: tail.n,
            required: 2,
        });
    }
    Ok(tail.ks(gamma))
}

/// Parametric-bootstrap p-value: the fraction of synthetic tails (same size,
/// drawn from the fitted law, refitted with `x_min` held fixed) whose KS
/// distance is at least the observed one.
pub fn gof_p_value<T: Real>(values: &[u64], fit: &PowerLawFit<T>, n_boot: usize, seed: u64) -> Result<T> {
    if n_boot < MIN_BOOTSTRAP {
        return Err(Error::InvalidArgument(format!(
            "n_boot must be at least {MIN_BOOTSTRAP}, got {n_boot}"
        )));
    }
    let n_tail = values.iter().filter(|&&v| v >= fit.x_min).count();
    if n_tail < 2 {
        return Err(Error::TooFewTail {
            x_min: fit.x_min,
            found: n_tail,
            required: 2,
        });
    }
    Ok(bootstrap_p(fit.gamma, fit.x_min, n_tail, fit.ks_stat, n_boot, seed))
}

fn bootstrap_p<T: Real>(gamma: T, x_min: u64, n_tail: usize, observed: T, n_boot: usize, seed: u64) -> T {
    let law = DiscretePowerLaw::new(gamma.as_f64(), x_min).expect("fitted exponent lies in bounds");
    let exceed: usize = (0..n_boot)
        .into_par_iter()
        .map(|b| {
            let mut rng = rng_from_seed(derive_seed(seed, stream::BOOTSTRAP, b as u64));
            let mut synth = law.sample_n(&mut rng, n_tail);
            synth.sort_unstable();
            let tail = Tail::<T>::from_sorted(&synth, x_min);
            let refit = tail.mle();
            usize::from(tail.ks(refit) >= observed)
        })
        .sum();
    T::of_count(exceed) / T::of_count(n_boot)
}

/// Fits the tail `>= x_min`: MLE exponent, KS distance, and bootstrap p-value.
pub fn fit_power_law<T: Real>(values: &[u64], x_min: u64, opts: &FitOptions) -> Result<PowerLawFit<T>> {
    check_x_min(x_min)?;
    let tail = Tail::<T>::from_values(values, x_min);
    fit_tail(&tail, values.len(), opts.n_boot, opts.seed)
}

fn fit_tail<T: Real>(tail: &Tail<T>, n_total: usize, n_boot: usize, seed: u64) -> Result<PowerLawFit<T>> {
    tail.require_fit_input()?;
    if n_boot < MIN_BOOTSTRAP {
        return Err(Error::InvalidArgument(format!(
            "n_boot must be at least {MIN_BOOTSTRAP}, got {n_boot}"
        )));
    }
    let gamma = tail.mle();
    let ks_stat = tail.ks(gamma);
    let p_value = bootstrap_p(gamma, tail.x_min, tail.n, ks_stat, n_boot, seed);
    Ok(PowerLawFit {
        gamma,
        x_min: tail.x_min,
        ks_stat,
        p_value,
        n_tail: tail.n,
        n_total,
        seed,
        n_boot,
    })
}

/// Scans `x_min = 1, 2, …` and returns the first fit whose p-value exceeds
/// `opts.p_threshold`. Each candidate bootstraps with its own derived seed.
pub fn select_xmin<T: Real>(values: &[u64], opts: &FitOptions) -> Result<PowerLawFit<T>> {
    if values.is_empty() {
        return Err(Error::EmptySample);
    }
    if !(opts.p_threshold > 0.0 && opts.p_threshold < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "p_threshold must lie in (0, 1), got {}",
            opts.p_threshold
        )));
    }
    let mut sorted = values.to_vec();
    sorted.sort_unstable();
    let threshold = T::lit(opts.p_threshold);

    let mut x_min = 1u64;
    loop {
        let start = sorted.partition_point(|&v| v < x_min);
        let tail_slice = &sorted[start..];
        if x_min == 1 {
            // Problems with the whole sample are reported as such.
            if let (Some(&lo), Some(&hi)) = (tail_slice.first(), tail_slice.last()) {
                if lo == hi && tail_slice.len() >= 2 {
                    return Err(Error::DegenerateTail { n: tail_slice.len(), value: lo });
                }
            }
            if tail_slice.len() < MIN_TAIL_FOR_SELECTION {
                return Err(Error::TooFewTail {
                    x_min,
                    found: tail_slice.len(),
                    required: MIN_TAIL_FOR_SELECTION,
                });
            }
        }
        if tail_slice.len() < MIN_TAIL_FOR_SELECTION {
            break;
        }
        let tail = Tail::<T>::from_sorted(tail_slice, x_min);
        if tail.distinct.len() == 1 {
            break;
        }
        let seed = derive_seed(opts.seed, stream::XMIN, x_min);
        let fit = fit_tail(&tail, values.len(), opts.n_boot, seed)?;
        if fit.p_value > threshold {
            return Ok(fit);
        }
        x_min += 1;
    }
    Err(Error::NoPowerLawFit {
        threshold: opts.p_threshold,
    })
}

fn check_x_min(x_min: u64) -> Result<()> {
    if x_min == 0 {
        Err(Error::InvalidArgument("x_min must be >= 1".into()))
    } else {
        Ok(())
    }
}
