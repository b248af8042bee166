//! Individual-level analysis: loyal users, interval fits, bursts of closely
//! spaced attendances and where incentive activities fall inside them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::event_log::{interval_sequence, ActivityId, ActivityLog, UserId};
use crate::powerlaw::{select_xmin, FitOptions, PowerLawFit};
use crate::scalar::Real;

/// Users with strictly more than `min_count` attendances, ascending by id.
pub fn loyal_users(log: &ActivityLog, min_count: usize) -> Vec<UserId> {
    log.users()
        .filter(|(_, acts)| acts.len() > min_count)
        .map(|(u, _)| u)
        .collect()
}

/// Power-law fit of the gaps between a user's consecutive attendances.
pub fn fit_intervals<T: Real>(log: &ActivityLog, user: UserId, opts: &FitOptions) -> Result<PowerLawFit<T>> {
    let seq = interval_sequence(log, user)?;
    select_xmin(&seq.intervals, opts)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Burst {
    pub user_id: UserId,
    pub activity_ids: Vec<ActivityId>,
    /// 1-based position of the first incentive activity, 0 if there is none.
    pub first_incentive_position: usize,
}

impl Burst {
    pub fn start(&self) -> ActivityId {
        self.activity_ids[0]
    }

    pub fn end(&self) -> ActivityId {
        self.activity_ids[self.activity_ids.len() - 1]
    }

    pub fn len(&self) -> usize {
        self.activity_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.activity_ids.is_empty()
    }
}

fn check_delta(delta: u32) -> Result<()> {
    if delta < 2 {
        return Err(Error::InvalidArgument(format!("burst threshold must be >= 2, got {delta}")));
    }
    Ok(())
}

/// Index ranges `[start, end)` of the maximal runs of sorted `attendances`
/// whose consecutive gaps are all below `delta`, keeping runs of length >= 2.
pub fn burst_spans(attendances: &[ActivityId], delta: u32) -> Vec<(usize, usize)> {
    let mut spans = Vec::new();
    let mut start = 0;
    for i in 1..=attendances.len() {
        let breaks = i == attendances.len() || attendances[i] - attendances[i - 1] >= delta;
        if breaks {
            if i - start >= 2 {
                spans.push((start, i));
            }
            start = i;
        }
    }
    spans
}

/// Bursts of one user for gap threshold `delta` (gaps must be `< delta`).
/// Users with fewer than two attendances have none.
pub fn detect_bursts(log: &ActivityLog, user: UserId, delta: u32) -> Result<Vec<Burst>> {
    check_delta(delta)?;
    let acts = log.attendances(user).ok_or(Error::UnknownUser(user))?;
    Ok(burst_spans(acts, delta)
        .into_iter()
        .map(|(lo, hi)| {
            let ids = acts[lo..hi].to_vec();
            let first_incentive_position = ids
                .iter()
                .position(|&a| log.is_incentive(a))
                .map_or(0, |p| p + 1);
            Burst {
                user_id: user,
                activity_ids: ids,
                first_incentive_position,
            }
        })
        .collect())
}

/// Counts of bursts by the position of their first incentive activity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct BurstTable<T: Real> {
    pub delta: u32,
    pub total_bursts: u64,
    /// `position_counts[k]` bursts have their first incentive at position
    /// `k` (`k = 0`: none).
    pub position_counts: Vec<u64>,
    /// Percentages of all bursts with the first incentive at position 1, <= 2, <= 3.
    pub pct_first: T,
    pub pct_within_2: T,
    pub pct_within_3: T,
}

impl<T: Real> BurstTable<T> {
    pub fn from_bursts(bursts: &[Burst], delta: u32) -> Self {
        let longest = bursts.iter().map(|b| b.first_incentive_position).max().unwrap_or(0);
        let mut position_counts = vec![0u64; longest.max(3) + 1];
        for b in bursts {
            position_counts[b.first_incentive_position] += 1;
        }
        let total = bursts.len() as u64;
        let pct = |upto: usize| {
            if total == 0 {
                T::zero()
            } else {
                let hits: u64 = position_counts[1..=upto].iter().sum();
                T::lit(100.0) * T::of_u64(hits) / T::of_u64(total)
            }
        };
        Self {
            delta,
            total_bursts: total,
            pct_first: pct(1),
            pct_within_2: pct(2),
            pct_within_3: pct(3),
            position_counts,
        }
    }
}

/// Bursts of all `users` (in the given order) and their position table.
pub fn burst_table<T: Real>(log: &ActivityLog, users: &[UserId], delta: u32) -> Result<(BurstTable<T>, Vec<Burst>)> {
    check_delta(delta)?;
    let mut bursts = Vec::new();
    for &u in users {
        bursts.extend(detect_bursts(log, u, delta)?);
    }
    Ok((BurstTable::from_bursts(&bursts, delta), bursts))
}

/// Fraction of activities that carry an incentive.
pub fn burst_baseline<T: Real>(log: &ActivityLog) -> T {
    T::of_count(log.incentive_set().len()) / T::of_count(log.activity_count())
}
