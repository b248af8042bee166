//! Simulation state and one round of the participation process.
//!
//! Each round draws `m` distinct existing users, one at a time, from the
//! mixture `φ_i = α·q_i/Σq + (1−α)·w(d_i)/Σw` renormalised over the users not
//! yet drawn, then appends `c` newcomers. Because `φ` is a mixture, a draw
//! can first pick a component in proportion to its remaining mass and then a
//! user within it:
//!
//! * habit: a Fenwick tree over `q_i`, maintained across rounds;
//! * inertia: users grouped by the round of their last participation, so one
//!   Fenwick tree over the (few) groups replaces a per-user scan.

use rand::Rng;

use crate::error::{Error, Result};
use crate::event_log::UserId;
use crate::hfbi::fenwick::Fenwick;
use crate::hfbi::{HfbiParams, Kernel};
use crate::scalar::Real;

/// Per-user participation counts `q_i` and last-participation rounds `l_i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimState {
    q: Vec<u64>,
    last: Vec<usize>,
    round: usize,
}

impl SimState {
    /// `m` pre-existing users with no history, before round 0.
    pub fn initial(m: usize) -> Self {
        Self {
            q: vec![0; m],
            last: vec![0; m],
            round: 0,
        }
    }

    /// Arbitrary state about to play round `round`.
    pub fn from_parts(q: Vec<u64>, last: Vec<usize>, round: usize) -> Result<Self> {
        if q.len() != last.len() {
            return Err(Error::InvalidArgument("q and last must have equal length".into()));
        }
        if let Some(&l) = last.iter().find(|&&l| l > round) {
            return Err(Error::InvalidArgument(format!(
                "last participation {l} is after the current round {round}"
            )));
        }
        Ok(Self { q, last, round })
    }

    pub fn q(&self) -> &[u64] {
        &self.q
    }

    pub fn last(&self) -> &[usize] {
        &self.last
    }

    /// Index of the next round to be played.
    pub fn round(&self) -> usize {
        self.round
    }

    pub fn user_count(&self) -> usize {
        self.q.len()
    }

    /// Rounds since user `i` last participated, clamped to at least 1.
    #[inline]
    pub fn absence(&self, i: usize) -> usize {
        self.round.saturating_sub(self.last[i]).max(1)
    }
}

/// Selection probabilities `φ` over the existing users for the next round.
///
/// When no user has participated yet the habit term is uniform. If every
/// inertia weight underflows, the inertia mass goes to the most recent
/// participants.
pub fn participation_probabilities<T: Real>(state: &SimState, alpha: T, kernel: Kernel) -> Vec<T> {
    let n = state.user_count();
    if n == 0 {
        return Vec::new();
    }
    let total_q: u64 = state.q.iter().sum();
    let habit: Vec<T> = if total_q == 0 {
        vec![T::one() / T::of_count(n); n]
    } else {
        let denom = T::of_u64(total_q);
        state.q.iter().map(|&q| T::of_u64(q) / denom).collect()
    };

    let raw: Vec<T> = (0..n)
        .map(|i| kernel.weight(T::of_count(state.absence(i))))
        .collect();
    let total_w: T = raw.iter().copied().sum();
    let inertia: Vec<T> = if total_w > T::zero() {
        raw.iter().map(|&w| w / total_w).collect()
    } else {
        let latest = state.last.iter().copied().max().unwrap_or(0);
        let recent = state.last.iter().filter(|&&l| l == latest).count();
        state
            .last
            .iter()
            .map(|&l| if l == latest { T::one() / T::of_count(recent) } else { T::zero() })
            .collect()
    };

    habit
        .iter()
        .zip(&inertia)
        .map(|(&h, &w)| alpha * h + (T::one() - alpha) * w)
        .collect()
}

/// Participants of one round: the `m` drawn existing users in draw order,
/// then the `c` newcomers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoundOutcome {
    pub round: usize,
    pub selected: Vec<UserId>,
    pub newcomers: Vec<UserId>,
}

/// Plays one round from `state`.
pub fn step<T: Real, R: Rng + ?Sized>(state: &SimState, params: &HfbiParams<T>, rng: &mut R) -> Result<(SimState, RoundOutcome)> {
    params.validate()?;
    let mut engine = Engine::new(state.clone());
    let outcome = engine.play_round(params.c, params.m, params.alpha.as_f64(), params.kernel, rng)?;
    Ok((engine.state, outcome))
}

/// Incremental sampler state kept across rounds by the simulator.
#[derive(Debug, Clone)]
pub(crate) struct Engine {
    pub state: SimState,
    habit: Fenwick,
    habit_total: u64,
    /// `groups[l]` holds the users whose last participation was round `l`.
    groups: Vec<Vec<u32>>,
    /// Position of each user inside its group.
    slot: Vec<u32>,
    /// Rounds with a non-empty group, ascending.
    active: Vec<usize>,
}

impl Engine {
    pub fn new(state: SimState) -> Self {
        let habit = Fenwick::from_weights(state.q.iter().map(|&q| q as f64).collect());
        let habit_total = state.q.iter().sum();
        let mut groups = vec![Vec::new(); state.round + 1];
        let mut slot = vec![0u32; state.user_count()];
        for (i, &l) in state.last.iter().enumerate() {
            slot[i] = groups[l].len() as u32;
            groups[l].push(i as u32);
        }
        let active = (0..groups.len()).filter(|&l| !groups[l].is_empty()).collect();
        Self {
            state,
            habit,
            habit_total,
            groups,
            slot,
            active,
        }
    }

    fn detach(&mut self, user: usize) {
        let l = self.state.last[user];
        let pos = self.slot[user] as usize;
        let group = &mut self.groups[l];
        group.swap_remove(pos);
        if let Some(&moved) = group.get(pos) {
            self.slot[moved as usize] = pos as u32;
        }
    }

    fn attach(&mut self, user: usize, round: usize) {
        if self.groups.len() <= round {
            self.groups.resize_with(round + 1, Vec::new);
        }
        self.slot[user] = self.groups[round].len() as u32;
        self.groups[round].push(user as u32);
    }

    /// Remaining user with the latest last participation, lowest id on ties.
    fn most_recent_remaining(&self) -> Option<usize> {
        self.active
            .iter()
            .rev()
            .find_map(|&l| self.groups[l].iter().min().map(|&u| u as usize))
    }

    pub fn play_round<R: Rng + ?Sized>(
        &mut self,
        c: usize,
        m: usize,
        alpha: f64,
        kernel: Kernel,
        rng: &mut R,
    ) -> Result<RoundOutcome> {
        let pool = self.state.user_count();
        if m > pool {
            return Err(Error::InvalidParams(format!(
                "cannot select {m} distinct users from a pool of {pool}"
            )));
        }
        let round = self.state.round;
        let mut selected: Vec<usize> = Vec::with_capacity(m);

        if m == pool {
            selected.extend(0..pool);
            for &u in &selected {
                self.detach(u);
            }
        } else {
            self.draw(m, alpha, kernel, round, rng, &mut selected);
        }

        for &u in &selected {
            self.state.q[u] += 1;
            self.state.last[u] = round;
            self.habit.set(u, self.state.q[u] as f64);
            self.habit_total += 1;
            self.attach(u, round);
        }
        let first_new = pool;
        for k in 0..c {
            let u = first_new + k;
            self.state.q.push(1);
            self.state.last.push(round);
            self.slot.push(0);
            self.habit.push(1.0);
            self.habit_total += 1;
            self.attach(u, round);
        }
        let groups = &self.groups;
        self.active.retain(|&l| !groups[l].is_empty());
        if self.groups.get(round).is_some_and(|g| !g.is_empty()) && self.active.last() != Some(&round) {
            self.active.push(round);
        }
        self.state.round += 1;

        Ok(RoundOutcome {
            round,
            selected: selected.into_iter().map(|u| u as UserId).collect(),
            newcomers: (first_new..first_new + c).map(|u| u as UserId).collect(),
        })
    }

    /// Panics unless the incremental structures agree with a rebuild from `state`.
    #[cfg(test)]
    pub fn assert_consistent(&self) {
        let fresh = Engine::new(self.state.clone());
        assert_eq!(self.habit_total, fresh.habit_total);
        for k in 0..=self.state.user_count() {
            assert_eq!(self.habit.prefix(k), fresh.habit.prefix(k));
        }
        assert_eq!(self.active, fresh.active);
        for &l in &self.active {
            let mut members = self.groups[l].clone();
            members.sort_unstable();
            assert_eq!(members, fresh.groups[l]);
            for (pos, &u) in self.groups[l].iter().enumerate() {
                assert_eq!(self.slot[u as usize] as usize, pos);
            }
        }
    }

    /// Sequential weighted draws without replacement. Drawn users are detached
    /// from their groups and, when the habit term is active, zeroed in the
    /// habit tree until `play_round` writes their new counts.
    fn draw<R: Rng + ?Sized>(
        &mut self,
        m: usize,
        alpha: f64,
        kernel: Kernel,
        round: usize,
        rng: &mut R,
        selected: &mut Vec<usize>,
    ) {
        let pool = self.state.user_count();
        let use_habit = alpha > 0.0;
        let use_inertia = alpha < 1.0;

        // Uniform habit term when nobody has participated yet.
        let uniform_habit = use_habit && self.habit_total == 0;
        let mut uniform_tree = if uniform_habit {
            Fenwick::from_weights(vec![1.0; pool])
        } else {
            Fenwick::default()
        };
        let habit_norm = if uniform_habit { pool as f64 } else { self.habit_total as f64 };

        let active = self.active.clone();
        let group_weight: Vec<f64> = if use_inertia {
            active
                .iter()
                .map(|&l| kernel.weight(round.saturating_sub(l).max(1) as f64))
                .collect()
        } else {
            Vec::new()
        };
        let mut inertia_tree = if use_inertia {
            Fenwick::from_weights(
                active
                    .iter()
                    .zip(&group_weight)
                    .map(|(&l, &w)| self.groups[l].len() as f64 * w)
                    .collect(),
            )
        } else {
            Fenwick::default()
        };
        let inertia_norm = inertia_tree.total();
        let group_index = |l: usize| active.binary_search(&l).expect("user group is active");

        for _ in 0..m {
            let habit_mass = if use_habit {
                let remaining = if uniform_habit { uniform_tree.total() } else { self.habit.total() };
                alpha * remaining / habit_norm
            } else {
                0.0
            };
            let inertia_mass = if use_inertia && inertia_norm > 0.0 {
                (1.0 - alpha) * inertia_tree.total() / inertia_norm
            } else {
                0.0
            };
            let mass = habit_mass + inertia_mass;

            let pick = if mass > 0.0 {
                if rng.gen::<f64>() * mass < habit_mass {
                    let tree = if uniform_habit { &uniform_tree } else { &self.habit };
                    tree.find(rng.gen::<f64>() * tree.total())
                } else {
                    inertia_tree.find(rng.gen::<f64>() * inertia_tree.total()).map(|g| {
                        let members = &self.groups[active[g]];
                        members[rng.gen_range(0..members.len())] as usize
                    })
                }
            } else {
                None
            };
            let user = match pick {
                Some(u) => u,
                None => self
                    .most_recent_remaining()
                    .expect("pool is larger than the number of draws"),
            };

            if use_habit {
                if uniform_habit {
                    uniform_tree.set(user, 0.0);
                } else {
                    self.habit.set(user, 0.0);
                }
            }
            if use_inertia {
                let g = group_index(self.state.last[user]);
                let left = (self.groups[active[g]].len() - 1) as f64;
                inertia_tree.set(g, left * group_weight[g]);
            }
            self.detach(user);
            selected.push(user);
        }
    }
}
