use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::event_log::ActivityLog;
use crate::scalar::Real;

/// Absences beyond this are treated as this many in the exponential kernel.
pub const EXP_KERNEL_MAX_ABSENCE: f64 = 700.0;

/// Decreasing weight `w(d)` applied to the number of rounds since a user last participated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Kernel {
    /// `w(d) = 1/d`
    #[default]
    Reciprocal,
    /// `w(d) = e^{-d}`, with `d` capped at [`EXP_KERNEL_MAX_ABSENCE`].
    Exponential,
}

impl Kernel {
    #[inline]
    pub fn weight<T: Real>(self, absence: T) -> T {
        match self {
            Kernel::Reciprocal => absence.recip(),
            Kernel::Exponential => (-absence.min(T::lit(EXP_KERNEL_MAX_ABSENCE))).exp(),
        }
    }
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Kernel::Reciprocal => "reciprocal",
            Kernel::Exponential => "exponential",
        })
    }
}

impl FromStr for Kernel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "reciprocal" => Ok(Kernel::Reciprocal),
            "exponential" => Ok(Kernel::Exponential),
            other => Err(Error::InvalidArgument(format!(
                "unknown kernel `{other}` (expected reciprocal or exponential)"
            ))),
        }
    }
}

/// Model parameters: `n` rounds, `c` new users and `m` returning users per
/// round, habit weight `alpha`, and the inertia kernel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct HfbiParams<T: Real> {
    pub n: usize,
    pub c: usize,
    pub m: usize,
    pub alpha: T,
    pub kernel: Kernel,
}

impl<T: Real> HfbiParams<T> {
    pub fn new(n: usize, c: usize, m: usize, alpha: T, kernel: Kernel) -> Result<Self> {
        let params = Self { n, c, m, alpha, kernel };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 1 {
            return Err(Error::InvalidParams("n must be >= 1".into()));
        }
        if self.m < 1 {
            return Err(Error::InvalidParams("m must be >= 1".into()));
        }
        if !(self.alpha >= T::zero() && self.alpha <= T::one()) {
            return Err(Error::InvalidParams(format!("alpha must lie in [0, 1], got {}", self.alpha)));
        }
        Ok(())
    }

    pub fn with_alpha(mut self, alpha: T) -> Self {
        self.alpha = alpha;
        self
    }

    /// Users present after all rounds: the `m` initial users plus `c` per round.
    pub fn final_population(&self) -> usize {
        self.m + self.n * self.c
    }
}

/// Scale parameters from a log: `c` and `m` are the rounded per-activity means
/// of first-time and returning participants; `n` is chosen so that
/// `m + n·c` matches the log's population.
pub fn derive_params<T: Real>(log: &ActivityLog, alpha: T, kernel: Kernel) -> Result<HfbiParams<T>> {
    let activities = log.activity_count() as f64;
    let users = log.user_count();
    let records = log.records().len();
    // Every user is first-time in exactly one activity.
    let c = (users as f64 / activities).round() as usize;
    let m = ((records - users) as f64 / activities).round() as usize;
    if m == 0 {
        return Err(Error::InvalidParams(
            "mean number of returning participants rounds to 0".into(),
        ));
    }
    let n = if c == 0 {
        if users > m {
            return Err(Error::InvalidParams(format!(
                "mean number of new participants rounds to 0 but {users} users exceed m = {m}"
            )));
        }
        log.activity_count()
    } else {
        ((users.saturating_sub(m)) as f64 / c as f64).round().max(1.0) as usize
    };
    HfbiParams::new(n, c, m, alpha, kernel)
}

/// Exponent of the participation-count distribution under habit formation alone: `2 + c/m`.
pub fn habit_only_exponent<T: Real>(c: usize, m: usize) -> T {
    T::lit(2.0) + T::of_count(c) / T::of_count(m)
}
