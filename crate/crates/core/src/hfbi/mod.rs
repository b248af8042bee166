//! Participation model combining habit formation (selection in proportion to
//! past participation) with behavioral inertia (selection decaying with the
//! time since the last participation).

mod fenwick;
mod params;
mod simulate;
mod state;

pub use params::{derive_params, habit_only_exponent, HfbiParams, Kernel, EXP_KERNEL_MAX_ABSENCE};
pub use simulate::{simulate, simulate_frequencies, simulate_state, validate_theory, SyntheticRun, TheoryCheck};
pub use state::{participation_probabilities, step, RoundOutcome, SimState};
