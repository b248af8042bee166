use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::event_log::{ActivityLog, FrequencySequence, ParticipationRecord};
use crate::hfbi::state::{Engine, SimState};
use crate::hfbi::{habit_only_exponent, HfbiParams, Kernel};
use crate::powerlaw::{select_xmin, FitOptions, PowerLawFit};
use crate::scalar::Real;
use crate::seed::{derive_seed, rng_from_seed, stream};

/// Output of a full simulation: one activity per round, participants as records.
#[derive(Debug, Clone)]
pub struct SyntheticRun {
    pub log: ActivityLog,
    pub frequencies: FrequencySequence,
}

/// Runs all `n` rounds from `m` history-free users and returns the final state.
pub fn simulate_state<T: Real>(params: &HfbiParams<T>, seed: u64) -> Result<SimState> {
    simulate_with(params, seed, |_, _| {})
}

fn simulate_with<T: Real>(
    params: &HfbiParams<T>,
    seed: u64,
    mut on_round: impl FnMut(usize, &[u32]),
) -> Result<SimState> {
    params.validate()?;
    let mut rng = rng_from_seed(seed);
    let mut engine = Engine::new(SimState::initial(params.m));
    let alpha = params.alpha.as_f64();
    let mut participants = Vec::with_capacity(params.c + params.m);
    for _ in 0..params.n {
        let out = engine.play_round(params.c, params.m, alpha, params.kernel, &mut rng)?;
        participants.clear();
        participants.extend_from_slice(&out.selected);
        participants.extend_from_slice(&out.newcomers);
        on_round(out.round, &participants);
    }
    Ok(engine.state)
}

/// Participation counts of every user who took part at least once.
pub fn simulate_frequencies<T: Real>(params: &HfbiParams<T>, seed: u64) -> Result<FrequencySequence> {
    let state = simulate_state(params, seed)?;
    Ok(positive_counts(&state))
}

fn positive_counts(state: &SimState) -> FrequencySequence {
    FrequencySequence(state.q().iter().copied().filter(|&q| q > 0).collect())
}

/// Full simulation including the synthetic participation log. Synthetic
/// activities carry no incentive flag.
pub fn simulate<T: Real>(params: &HfbiParams<T>, seed: u64) -> Result<SyntheticRun> {
    let mut records = Vec::with_capacity(params.n * (params.c + params.m));
    let state = simulate_with(params, seed, |round, users| {
        records.extend(
            users
                .iter()
                .map(|&u| ParticipationRecord::new(u, round as u32, false)),
        );
    })?;
    Ok(SyntheticRun {
        log: ActivityLog::from_records(records)?,
        frequencies: positive_counts(&state),
    })
}

/// Fitted versus predicted exponent for a habit-only simulation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct TheoryCheck<T: Real> {
    pub c: usize,
    pub m: usize,
    pub n: usize,
    pub seed: u64,
    pub gamma_hat: T,
    pub gamma_theory: T,
    pub abs_error: T,
    pub fit: PowerLawFit<T>,
}

/// Simulates with `alpha = 1` and fits the resulting counts with `select_xmin`.
pub fn validate_theory<T: Real>(c: usize, m: usize, n: usize, seed: u64, fit: &FitOptions) -> Result<TheoryCheck<T>> {
    let params = HfbiParams::new(n, c, m, T::one(), Kernel::Reciprocal)?;
    let counts = simulate_frequencies(&params, seed)?;
    let fit_opts = fit.with_seed(derive_seed(seed, stream::THEORY, 0));
    let fitted: PowerLawFit<T> = select_xmin(counts.values(), &fit_opts)?;
    let gamma_theory = habit_only_exponent::<T>(c, m);
    Ok(TheoryCheck {
        c,
        m,
        n,
        seed,
        gamma_hat: fitted.gamma,
        gamma_theory,
        abs_error: (fitted.gamma - gamma_theory).abs(),
        fit: fitted,
    })
}
