use rand::Rng;

use hfbi_core::bursts::fit_intervals;
use hfbi_core::calibration::{per_node_calibration, per_node_fits, CalibrationOptions};
use hfbi_core::event_log::{parse_csv, write_csv_file, ActivityLog, ParticipationRecord};
use hfbi_core::hfbi::{simulate, HfbiParams, Kernel};
use hfbi_core::powerlaw::{select_xmin, two_sample_ks, DiscretePowerLaw, FitOptions, PowerLawFit};
use hfbi_core::seed::{derive_seed, rng_from_seed};

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Draw from the Yule–Simon law with shape `rho`: a geometric variable whose
/// success probability is `exp(-W)` with `W ~ Exp(rho)`.
fn yule_simon<R: Rng>(rho: f64, rng: &mut R) -> u64 {
    let p = (1.0 - rng.gen::<f64>()).powf(1.0 / rho);
    if p >= 1.0 {
        return 1;
    }
    let u = 1.0 - rng.gen::<f64>();
    (u.ln() / (1.0 - p).ln()).ceil().max(1.0) as u64
}

#[test]
fn csv_round_trip_preserves_the_log() {
    let params = HfbiParams::new(50, 2, 5, 0.7, Kernel::Exponential).unwrap();
    let mut log = simulate(&params, 5).unwrap().log;
    // Flag every seventh activity to exercise the incentive column.
    let records: Vec<ParticipationRecord> = log
        .records()
        .iter()
        .map(|r| ParticipationRecord::new(r.participant_id, r.activity_id, r.activity_id % 7 == 0))
        .collect();
    log = ActivityLog::from_records(records).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("log.csv");
    write_csv_file(&log, &path).unwrap();
    assert_eq!(parse_csv(&path).unwrap(), log);
}

#[test]
fn two_sample_p_values_are_calibrated() {
    let law = DiscretePowerLaw::new(2.2, 1).unwrap();
    let mut accepted = 0;
    for trial in 0..100u64 {
        let mut rng = rng_from_seed(derive_seed(77, 0, trial));
        let a = law.sample_n(&mut rng, 1000);
        let b = law.sample_n(&mut rng, 1000);
        if two_sample_ks::<f64>(&a, &b).unwrap().p_value > 0.1 {
            accepted += 1;
        }
    }
    assert!(accepted >= 85, "accepted {accepted} of 100");
}

#[test]
fn interval_fits_recover_the_generator() {
    let law = DiscretePowerLaw::new(2.35, 1).unwrap();
    let mut estimates = Vec::new();
    for seed in 0..20u64 {
        let mut rng = rng_from_seed(derive_seed(3, 1, seed));
        let intervals = law.sample_n(&mut rng, 200);
        let mut acts = vec![0u32];
        for &d in &intervals {
            acts.push(acts[acts.len() - 1] + d as u32);
        }
        let last = acts[acts.len() - 1];
        let mut records: Vec<_> = acts.iter().map(|&a| ParticipationRecord::new(0, a, false)).collect();
        records.extend((0..=last).map(|a| ParticipationRecord::new(1, a, false)));
        let log = ActivityLog::from_records(records).unwrap();
        let fit: PowerLawFit<f64> = fit_intervals(&log, 0, &FitOptions::default().with_n_boot(200).with_seed(seed)).unwrap();
        assert!((fit.gamma - 2.35).abs() <= 0.5, "seed {seed}: {fit:?}");
        estimates.push(fit.gamma);
    }
    let med = median(estimates);
    assert!((med - 2.35).abs() <= 0.25, "median {med}");
}

#[test]
fn simulated_counts_follow_the_yule_simon_law() {
    // Habit-only growth with c newcomers and m returning users per round
    // yields p(q) ∝ Γ(q)/Γ(q + 1 + ρ) with ρ = 1 + c/m; for c = m = 1 this
    // is 4 / (q(q+1)(q+2)).
    let params = HfbiParams::new(50_000, 1, 1, 1.0, Kernel::Reciprocal).unwrap();
    let counts = hfbi_core::hfbi::simulate_frequencies(&params, 9).unwrap();
    let n = counts.len() as f64;
    for q in 1..=6u64 {
        let p = 4.0 / (q * (q + 1) * (q + 2)) as f64;
        let freq = counts.values().iter().filter(|&&v| v == q).count() as f64 / n;
        let sd = (p * (1.0 - p) / n).sqrt();
        assert!((freq - p).abs() < 5.0 * sd, "q={q}: {freq} vs {p}");
    }
}

#[test]
fn per_node_fits_match_the_finite_size_oracle() {
    // Per-node fits of habit-only (c = m = 1) logs agree with the same
    // estimator applied to exact Yule–Simon samples of equal size, whose
    // asymptotic exponent is 3.
    let params = HfbiParams::new(2000, 1, 1, 1.0, Kernel::Reciprocal).unwrap();
    let opts = FitOptions::default().with_n_boot(100);
    let mut model = Vec::new();
    let mut users = 0;
    for seed in 0..15u64 {
        let log = simulate(&params, seed).unwrap().log;
        let series = per_node_fits::<f64>(&log, 1000, 250, &opts.with_seed(seed)).unwrap();
        assert_eq!(series.nodes[0].activity_id, 998);
        assert_eq!(series.nodes.last().unwrap().activity_id, log.last_activity());
        assert!(series.nodes.windows(2).all(|w| w[0].activity_id < w[1].activity_id));
        model.push(series.nodes.last().unwrap().result.expect("final node fits").gamma);
        users = log.user_count();
    }
    let mut oracle = Vec::new();
    for seed in 0..30u64 {
        let mut rng = rng_from_seed(derive_seed(21, 0, seed));
        let sample: Vec<u64> = (0..users).map(|_| yule_simon(2.0, &mut rng)).collect();
        let fit: PowerLawFit<f64> = select_xmin(&sample, &opts.with_seed(seed)).unwrap();
        oracle.push(fit.gamma);
    }
    let (model, oracle) = (median(model), median(oracle));
    assert!((model - oracle).abs() <= 0.1, "per-node median {model} vs oracle {oracle}");
}

#[test]
fn per_node_alpha_is_stable_for_a_fixed_generator() {
    let params = HfbiParams::new(731, 4, 33, 0.9, Kernel::Reciprocal).unwrap();
    let log = simulate(&params, 12).unwrap().log;
    let opts = CalibrationOptions {
        grid_step: 0.05,
        runs: 5,
        seed: 4,
    };
    let series = per_node_calibration::<f64>(&log, Kernel::Reciprocal, 1000, 40, &opts).unwrap();
    let mut alphas: Vec<f64> = series.successes().map(|(_, r)| r.best_alpha).collect();
    assert_eq!(alphas.len(), series.nodes.len());
    alphas.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let q = |f: f64| alphas[((alphas.len() - 1) as f64 * f).round() as usize];
    assert!(q(0.75) - q(0.25) <= 0.2, "alphas {alphas:?}");
}
