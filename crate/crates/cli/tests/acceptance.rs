//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Criteria listed in `KNOWN_UNATTAINABLE` are reported as `FAIL (known)` and
//! do not fail the process unless `HFBI_ACCEPTANCE_STRICT=1`; any other
//! failure exits nonzero.

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};
use rand::Rng;

use hfbi_core::bursts::{burst_spans, detect_bursts};
use hfbi_core::calibration::{calibrate_alpha, CalibrationOptions};
use hfbi_core::event_log::{frequency_sequence, ActivityLog, ParticipationRecord};
use hfbi_core::evidence::{prop_by_absence, prop_by_history};
use hfbi_core::hfbi::{participation_probabilities, simulate, validate_theory, HfbiParams, Kernel, SimState};
use hfbi_core::powerlaw::{ccdf, fit_power_law, mle_gamma, DiscretePowerLaw, FitOptions, PowerLawFit};
use hfbi_core::seed::{derive_seed, rng_from_seed};

const KNOWN_UNATTAINABLE: &[u32] = &[1];

/// Id, name, runtime budget, check.
type Criterion = (u32, &'static str, Duration, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn theory_recovery() -> Outcome {
    let cases = [(1, 1, 3.0), (1, 2, 2.5), (4, 33, 2.0 + 4.0 / 33.0)];
    let opts = FitOptions::default();
    let mut pass = true;
    let mut parts = Vec::new();
    for (c, m, target) in cases {
        let gammas: Vec<f64> = (0..5u64)
            .map(|s| validate_theory::<f64>(c, m, 50_000, s, &opts).expect("theory run").gamma_hat)
            .collect();
        let med = median(gammas);
        pass &= (med - target).abs() <= 0.1;
        parts.push(format!("({c},{m}) median {med:.3} vs {target:.3}"));
    }
    Outcome { pass, detail: parts.join("; ") }
}

fn estimator_accuracy() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for gamma in [1.8, 2.5, 3.2] {
        let law = DiscretePowerLaw::new(gamma, 1).unwrap();
        let est: Vec<f64> = (0..20u64)
            .map(|s| {
                let mut rng = rng_from_seed(derive_seed(2, (gamma * 10.0) as u64, s));
                mle_gamma::<f64>(&law.sample_n(&mut rng, 10_000), 1).unwrap()
            })
            .collect();
        let worst = est.iter().map(|g| (g - gamma).abs()).fold(0.0, f64::max);
        let med = median(est);
        pass &= worst <= 0.1 && (med - gamma).abs() <= 0.03;
        parts.push(format!("γ={gamma}: median {med:.4}, max err {worst:.4}"));
    }
    Outcome { pass, detail: parts.join("; ") }
}

fn geometric<R: Rng>(p: f64, rng: &mut R) -> u64 {
    let u = 1.0 - rng.gen::<f64>();
    (u.ln() / (1.0 - p).ln()).ceil().max(1.0) as u64
}

fn gof_calibration() -> Outcome {
    let law = DiscretePowerLaw::new(2.5, 1).unwrap();
    let mut total_p = 0.0;
    let mut rejected = 0;
    for s in 0..50u64 {
        let opts = FitOptions::default().with_seed(derive_seed(3, 1, s));
        let mut rng = rng_from_seed(derive_seed(3, 0, s));
        let tail = law.sample_n(&mut rng, 1000);
        let fit: PowerLawFit<f64> = fit_power_law(&tail, 1, &opts).unwrap();
        total_p += fit.p_value;
        let geo: Vec<u64> = (0..1000).map(|_| geometric(0.5, &mut rng)).collect();
        let fit: PowerLawFit<f64> = fit_power_law(&geo, 1, &opts).unwrap();
        if fit.p_value < 0.05 {
            rejected += 1;
        }
    }
    let mean = total_p / 50.0;
    Outcome {
        pass: (0.35..=0.65).contains(&mean) && rejected >= 48,
        detail: format!("mean p {mean:.3}; geometric rejected {rejected}/50"),
    }
}

fn alpha_self_consistency() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for alpha in [0.7, 0.9] {
        let params = HfbiParams::new(731, 4, 33, alpha, Kernel::Reciprocal).unwrap();
        let best: Vec<f64> = (1..=5u64)
            .map(|s| {
                let log = simulate(&params, s).unwrap().log;
                let opts = CalibrationOptions {
                    seed: derive_seed(s, 4, 0),
                    ..CalibrationOptions::default()
                };
                calibrate_alpha::<f64>(&log, Kernel::Reciprocal, &opts).unwrap().best_alpha
            })
            .collect();
        let med = median(best.clone());
        pass &= (med - alpha).abs() <= 0.1;
        parts.push(format!("α={alpha}: median {med:.2} of {best:?}"));
    }
    Outcome { pass, detail: parts.join("; ") }
}

fn mechanism_signatures() -> Outcome {
    let habit = simulate(&HfbiParams::new(731, 4, 33, 1.0, Kernel::Reciprocal).unwrap(), 5).unwrap().log;
    let inertia = simulate(&HfbiParams::new(731, 4, 33, 0.0, Kernel::Reciprocal).unwrap(), 5).unwrap().log;
    let h = prop_by_history::<f64>(&habit).unwrap().with_min_exposure(30).trend();
    let a = prop_by_absence::<f64>(&inertia).unwrap().with_min_exposure(30).trend();
    Outcome {
        pass: h.is_some_and(|r| r > 0.0) && a.is_some_and(|r| r < 0.0),
        detail: format!("history Spearman {h:?} (α=1); absence Spearman {a:?} (α=0)"),
    }
}

/// Every maximal run of at least two attendances with all gaps below `delta`,
/// found by checking each candidate window directly.
fn brute_force_bursts(acts: &[u32], delta: u32) -> Vec<(usize, usize)> {
    let n = acts.len();
    let tight = |lo: usize, hi: usize| (lo + 1..hi).all(|k| acts[k] - acts[k - 1] < delta);
    let mut out = Vec::new();
    for lo in 0..n {
        for hi in lo + 2..=n {
            let left_closed = lo == 0 || !tight(lo - 1, hi);
            let right_closed = hi == n || !tight(lo, hi + 1);
            if tight(lo, hi) && left_closed && right_closed {
                out.push((lo, hi));
            }
        }
    }
    out
}

fn burst_oracle() -> Outcome {
    let mut compared = 0;
    let mut mismatches = 0;
    for s in 0..1000u64 {
        let mut rng = rng_from_seed(derive_seed(6, 0, s));
        let len = rng.gen_range(0..40);
        let mut acts: Vec<u32> = (0..len).map(|_| rng.gen_range(0..200)).collect();
        acts.sort_unstable();
        acts.dedup();
        let last = acts.last().copied().unwrap_or(0).max(1);
        let mut records: Vec<_> = acts.iter().map(|&a| ParticipationRecord::new(0, a, a % 5 == 0)).collect();
        records.extend((0..=last).map(|a| ParticipationRecord::new(1, a, a % 5 == 0)));
        let log = ActivityLog::from_records(records).unwrap();
        for delta in [2, 8, 10] {
            let oracle = brute_force_bursts(&acts, delta);
            let spans = burst_spans(&acts, delta);
            let via_log: Vec<(u32, u32)> = if acts.is_empty() {
                Vec::new()
            } else {
                detect_bursts(&log, 0, delta).unwrap().iter().map(|b| (b.start(), b.end())).collect()
            };
            let expected: Vec<(u32, u32)> = oracle.iter().map(|&(lo, hi)| (acts[lo], acts[hi - 1])).collect();
            compared += 1;
            if spans != oracle || via_log != expected {
                mismatches += 1;
            }
        }
    }
    Outcome {
        pass: mismatches == 0,
        detail: format!("{compared} sequence/Δ pairs, {mismatches} mismatches"),
    }
}

fn run_property<S: Strategy>(
    cases: u32,
    seed: u8,
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<u32, String> {
    let config = Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    };
    let mut runner = TestRunner::new_with_rng(config, proptest::test_runner::TestRng::from_seed(
        proptest::test_runner::RngAlgorithm::ChaCha,
        &[seed; 32],
    ));
    runner.run(&strategy, test).map(|()| cases).map_err(|e| e.to_string())
}

fn sim_state() -> impl Strategy<Value = SimState> {
    (1usize..40, 0usize..2000).prop_flat_map(|(n, round)| {
        (prop::collection::vec(0u64..50, n), prop::collection::vec(0..=round, n), Just(round))
            .prop_map(|(q, last, round)| SimState::from_parts(q, last, round).unwrap())
    })
}

fn kernel() -> impl Strategy<Value = Kernel> + Clone {
    prop_oneof![Just(Kernel::Reciprocal), Just(Kernel::Exponential)]
}

fn invariant_suite() -> Outcome {
    let mut total = 0;
    let mut failures = Vec::new();
    let mut record = |name: &str, r: Result<u32, String>| match r {
        Ok(n) => total += n,
        Err(e) => failures.push(format!("{name}: {e}")),
    };

    record(
        "phi normalization",
        run_property(3000, 1, (sim_state(), 0.0f64..=1.0, kernel()), |(s, alpha, k)| {
            let phi: Vec<f64> = participation_probabilities(&s, alpha, k);
            let sum: f64 = phi.iter().sum();
            prop_assert!((sum - 1.0).abs() <= 1e-12 && phi.iter().all(|&p| p >= 0.0));
            Ok(())
        }),
    );
    record(
        "ccdf monotonicity",
        run_property(3000, 2, prop::collection::vec(1u64..10_000, 1..300), |values| {
            let c = ccdf::<f64>(&values).unwrap();
            prop_assert_eq!(c.points[0].1, 1.0);
            prop_assert!(c.points.windows(2).all(|w| w[0].0 < w[1].0 && w[0].1 > w[1].1));
            Ok(())
        }),
    );
    let params = || (1usize..40, 0usize..4, 1usize..6, 0.0f64..=1.0, kernel(), any::<u64>());
    record(
        "frequency-sum conservation",
        run_property(2000, 3, params(), |(n, c, m, alpha, k, seed)| {
            let p = HfbiParams::new(n, c, m, alpha, k).unwrap();
            let run = simulate(&p, seed).unwrap();
            let freq = frequency_sequence(&run.log, None).unwrap();
            prop_assert_eq!(freq.total(), (n * (c + m)) as u64);
            prop_assert_eq!(freq.total() as usize, run.log.records().len());
            Ok(())
        }),
    );
    record(
        "burst maximality",
        run_property(
            1500,
            4,
            (prop::collection::btree_set(0u32..300, 0..40), 2u32..15),
            |(set, delta)| {
                let acts: Vec<u32> = set.into_iter().collect();
                for (lo, hi) in burst_spans(&acts, delta) {
                    prop_assert!(hi - lo >= 2);
                    prop_assert!(acts[lo..hi].windows(2).all(|w| w[1] - w[0] < delta));
                    prop_assert!(lo == 0 || acts[lo] - acts[lo - 1] >= delta);
                    prop_assert!(hi == acts.len() || acts[hi] - acts[hi - 1] >= delta);
                }
                Ok(())
            },
        ),
    );
    record(
        "determinism under fixed seeds",
        run_property(1000, 5, params(), |(n, c, m, alpha, k, seed)| {
            let p = HfbiParams::new(n, c, m, alpha, k).unwrap();
            prop_assert_eq!(simulate(&p, seed).unwrap().log, simulate(&p, seed).unwrap().log);
            let values: Vec<u64> = simulate(&p, seed).unwrap().frequencies.values().to_vec();
            if values.iter().any(|&v| v != values[0]) && values.len() >= 2 {
                let opts = FitOptions::default().with_n_boot(100).with_seed(seed);
                let x_min = *values.iter().min().unwrap();
                let a: PowerLawFit<f64> = fit_power_law(&values, x_min, &opts).unwrap();
                let b: PowerLawFit<f64> = fit_power_law(&values, x_min, &opts).unwrap();
                prop_assert_eq!(a, b);
            }
            Ok(())
        }),
    );

    Outcome {
        pass: failures.is_empty() && total >= 10_000,
        detail: if failures.is_empty() {
            format!("{total} generated cases")
        } else {
            format!("{total} cases passed; {}", failures.join("; "))
        },
    }
}

fn reproduction_script() -> Outcome {
    let root = concat!(env!("CARGO_MANIFEST_DIR"), "/../..");
    let out = tempfile::tempdir().expect("temporary directory");
    let status = Command::new("bash")
        .arg(format!("{root}/scripts/reproduce.sh"))
        .arg(out.path())
        .env("HFBI", env!("CARGO_BIN_EXE_hfbi"))
        .output()
        .expect("running the reproduction script");
    let manifests = ["simulate", "fit", "evidence", "bursts", "theory"]
        .iter()
        .filter(|step| out.path().join(step).join("manifest.json").is_file())
        .count();
    let tail = String::from_utf8_lossy(&status.stdout).lines().last().unwrap_or("").to_owned();
    Outcome {
        pass: status.status.success() && manifests == 5,
        detail: format!(
            "exit {:?}, {manifests}/5 manifests, last line {tail:?}{}",
            status.status.code(),
            if status.status.success() { String::new() } else { format!(", stderr: {}", String::from_utf8_lossy(&status.stderr).trim()) }
        ),
    }
}

fn main() -> ExitCode {
    let strict = std::env::var("HFBI_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    let criteria: [Criterion; 8] = [
        (1, "theory recovery", Duration::from_secs(300), theory_recovery),
        (2, "estimator accuracy", Duration::from_secs(60), estimator_accuracy),
        (3, "GOF calibration", Duration::from_secs(600), gof_calibration),
        (4, "alpha self-consistency", Duration::from_secs(900), alpha_self_consistency),
        (5, "mechanism signatures", Duration::MAX, mechanism_signatures),
        (6, "burst oracle equivalence", Duration::MAX, burst_oracle),
        (7, "invariant suite", Duration::MAX, invariant_suite),
        (8, "end-to-end reproduction", Duration::MAX, reproduction_script),
    ];
    let mut fatal = 0;
    for (id, name, budget, check) in criteria {
        let start = Instant::now();
        let outcome = check();
        let elapsed = start.elapsed();
        let in_budget = elapsed <= budget;
        let pass = outcome.pass && in_budget;
        let budget_note = if budget == Duration::MAX {
            String::new()
        } else {
            format!(" / budget {}s", budget.as_secs())
        };
        let status = match (pass, KNOWN_UNATTAINABLE.contains(&id)) {
            (true, _) => "PASS",
            (false, true) => "FAIL (known)",
            (false, false) => "FAIL",
        };
        if !pass && (strict || !KNOWN_UNATTAINABLE.contains(&id)) {
            fatal += 1;
        }
        println!(
            "{status} C{id} {name}: {}{} [{:.1}s{budget_note}]",
            outcome.detail,
            if in_budget { "" } else { " (over budget)" },
            elapsed.as_secs_f64()
        );
    }
    if fatal == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{fatal} criteria failed");
        ExitCode::FAILURE
    }
}
