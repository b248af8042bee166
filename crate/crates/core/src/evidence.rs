//! Empirical propensity curves: how the chance of returning depends on the
//! number of past participations and on the time since the last one.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::event_log::ActivityLog;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveKind {
    /// Indexed by the number of earlier participations `q`.
    ByHistory,
    /// Indexed by the number of activities since the last participation `d`.
    ByAbsence,
}

impl fmt::Display for CurveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CurveKind::ByHistory => "by_history",
            CurveKind::ByAbsence => "by_absence",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct CurvePoint<T: Real> {
    pub x: u64,
    pub proportion: T,
    pub n_exposed: u64,
    pub n_participated: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct PropensityCurve<T: Real> {
    pub kind: CurveKind,
    pub points: Vec<CurvePoint<T>>,
}

impl<T: Real> PropensityCurve<T> {
    fn from_counts(kind: CurveKind, exposed: &[u64], participated: &[u64]) -> Self {
        let points = exposed
            .iter()
            .zip(participated)
            .enumerate()
            .filter(|(_, (&n, _))| n > 0)
            .map(|(x, (&n, &m))| CurvePoint {
                x: x as u64,
                proportion: T::of_u64(m) / T::of_u64(n),
                n_exposed: n,
                n_participated: m,
            })
            .collect();
        Self { kind, points }
    }

    /// Points with at least `min_exposed` exposures.
    pub fn with_min_exposure(&self, min_exposed: u64) -> Self {
        Self {
            kind: self.kind,
            points: self.points.iter().copied().filter(|p| p.n_exposed >= min_exposed).collect(),
        }
    }

    pub fn total_exposure(&self) -> u64 {
        self.points.iter().map(|p| p.n_exposed).sum()
    }

    /// Spearman correlation between `x` and the proportion.
    pub fn trend(&self) -> Option<T> {
        let xs: Vec<T> = self.points.iter().map(|p| T::of_u64(p.x)).collect();
        let ys: Vec<T> = self.points.iter().map(|p| p.proportion).collect();
        spearman(&xs, &ys)
    }
}

fn check_log(log: &ActivityLog) -> Result<()> {
    if log.activity_count() < 2 {
        return Err(Error::TooFewActivities {
            required: 2,
            found: log.activity_count(),
        });
    }
    Ok(())
}

/// Share of users with exactly `q` earlier participations who take part in
/// the next activity, pooled over all activities. Users who have not joined
/// yet are not exposed.
pub fn prop_by_history<T: Real>(log: &ActivityLog) -> Result<PropensityCurve<T>> {
    check_log(log)?;
    let last = u64::from(log.last_activity());
    let mut exposed = vec![0u64; 2];
    let mut participated = vec![0u64; 2];
    for (_, acts) in log.users() {
        let k = acts.len();
        if exposed.len() <= k {
            exposed.resize(k + 1, 0);
            participated.resize(k + 1, 0);
        }
        // After the (i+1)-th attendance the user is exposed with q = i + 1
        // until the next attendance, inclusive.
        for (i, w) in acts.windows(2).enumerate() {
            exposed[i + 1] += u64::from(w[1] - w[0]);
            participated[i + 1] += 1;
        }
        exposed[k] += last - u64::from(acts[k - 1]);
    }
    Ok(PropensityCurve::from_counts(CurveKind::ByHistory, &exposed, &participated))
}

/// Share of users whose last participation was `d` activities ago who take
/// part in the current one, pooled over all activities.
pub fn prop_by_absence<T: Real>(log: &ActivityLog) -> Result<PropensityCurve<T>> {
    check_log(log)?;
    let last = log.last_activity() as usize;
    // A gap of length g exposes the user once at each d = 1..=g, so the
    // exposure at d counts the gaps of length >= d.
    let mut gaps_ending = vec![0u64; log.activity_count() + 1];
    let mut participated = vec![0u64; log.activity_count() + 1];
    for (_, acts) in log.users() {
        for w in acts.windows(2) {
            let gap = (w[1] - w[0]) as usize;
            gaps_ending[gap] += 1;
            participated[gap] += 1;
        }
        let trailing = last - acts[acts.len() - 1] as usize;
        gaps_ending[trailing] += 1;
    }
    let mut exposed = vec![0u64; gaps_ending.len()];
    let mut running = 0;
    for d in (1..gaps_ending.len()).rev() {
        running += gaps_ending[d];
        exposed[d] = running;
    }
    Ok(PropensityCurve::from_counts(CurveKind::ByAbsence, &exposed, &participated))
}

/// Centered moving average of the proportions over `window` consecutive
/// points. Near the ends the window shrinks to the same reach on both
/// sides. Exposure and participation counts are summed over the window.
pub fn smooth<T: Real>(curve: &PropensityCurve<T>, window: usize) -> Result<PropensityCurve<T>> {
    if window < 1 {
        return Err(Error::InvalidArgument("smoothing window must be >= 1".into()));
    }
    let pts = &curve.points;
    let n = pts.len();
    let left = window / 2;
    let right = window - 1 - left;
    let points = (0..n)
        .map(|i| {
            let (lo, hi) = if i >= left && i + right < n {
                (i - left, i + right)
            } else {
                let reach = i.min(n - 1 - i);
                (i - reach, i + reach)
            };
            let span = &pts[lo..=hi];
            let mean = span.iter().map(|p| p.proportion).sum::<T>() / T::of_count(span.len());
            CurvePoint {
                x: pts[i].x,
                proportion: mean,
                n_exposed: span.iter().map(|p| p.n_exposed).sum(),
                n_participated: span.iter().map(|p| p.n_participated).sum(),
            }
        })
        .collect();
    Ok(PropensityCurve {
        kind: curve.kind,
        points,
    })
}

/// Ranks starting at 1, with ties sharing their average rank.
fn average_ranks<T: Real>(values: &[T]) -> Vec<T> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap_or(std::cmp::Ordering::Equal));
    let mut ranks = vec![T::zero(); values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        let rank = T::of_count(start + end + 1) / T::lit(2.0);
        for &idx in &order[start..end] {
            ranks[idx] = rank;
        }
        start = end;
    }
    ranks
}

/// Spearman rank correlation; `None` for fewer than two pairs or a constant input.
pub fn spearman<T: Real>(xs: &[T], ys: &[T]) -> Option<T> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    let rx = average_ranks(xs);
    let ry = average_ranks(ys);
    let n = T::of_count(xs.len());
    let mx = rx.iter().copied().sum::<T>() / n;
    let my = ry.iter().copied().sum::<T>() / n;
    let (mut sxy, mut sxx, mut syy) = (T::zero(), T::zero(), T::zero());
    for (&a, &b) in rx.iter().zip(&ry) {
        sxy = sxy + (a - mx) * (b - my);
        sxx = sxx + (a - mx) * (a - mx);
        syy = syy + (b - my) * (b - my);
    }
    if sxx == T::zero() || syy == T::zero() {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}
