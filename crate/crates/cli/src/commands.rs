use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Serialize;

use hfbi_core::bursts::{burst_baseline, burst_table, fit_intervals, loyal_users, Burst, BurstTable};
use hfbi_core::calibration::{calibrate_alpha, per_node_calibration, CalibrationOptions};
use hfbi_core::event_log::{frequency_sequence, parse_csv, prefix, write_csv_file, ActivityLog};
use hfbi_core::evidence::{prop_by_absence, prop_by_history, smooth, PropensityCurve};
use hfbi_core::hfbi::{derive_params, simulate, validate_theory, HfbiParams};
use hfbi_core::powerlaw::{ccdf, lorenz_curve, select_xmin, top_share, FitOptions};
use hfbi_core::{PowerLawFit64, PropensityCurve64};

use crate::artifacts::{sha256_file, strip_out_flag, Artifacts, Manifest, MANIFEST_FILE, MANIFEST_SCHEMA};
use crate::{
    parse_from, BurstsArgs, CalibrateArgs, Cli, Command, EvidenceArgs, FitArgs, Scope, SimulateArgs, TheoryArgs,
    ValidateArgs,
};

/// A repeated run did not reproduce the recorded outputs.
#[derive(Debug)]
pub struct Mismatch(pub String);

impl std::fmt::Display for Mismatch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "reproducibility check failed: {}", self.0)
    }
}

impl std::error::Error for Mismatch {}

const TOP_SHARE_POINTS: [f64; 5] = [0.01, 0.05, 0.1, 0.2, 0.5];

pub fn run(cli: Cli, raw_args: &[String]) -> Result<()> {
    let args = strip_out_flag(raw_args);
    let seed = cli.seed;
    let name = match &cli.command {
        Command::Fit(_) => "fit",
        Command::Simulate(_) => "simulate",
        Command::Calibrate(_) => "calibrate",
        Command::Evidence(_) => "evidence",
        Command::Bursts(_) => "bursts",
        Command::Theory(_) => "theory",
        Command::Validate(v) => return validate(v, seed),
    };
    let mut art = Artifacts::create(&cli.out)?;
    match &cli.command {
        Command::Fit(a) => fit(a, seed, &mut art)?,
        Command::Simulate(a) => simulate_cmd(a, seed, &mut art)?,
        Command::Calibrate(a) => calibrate(a, seed, &mut art)?,
        Command::Evidence(a) => evidence(a, &mut art)?,
        Command::Bursts(a) => bursts(a, seed, &mut art)?,
        Command::Theory(a) => theory(a, seed, &mut art)?,
        Command::Validate(_) => unreachable!("handled above"),
    }
    let manifest = art.finish(name, args, seed)?;
    eprintln!("wrote {} files and {} to {}", manifest.outputs.len(), MANIFEST_FILE, cli.out.display());
    Ok(())
}

fn load(input: &Path, upto: Option<u32>, art: &mut Artifacts) -> Result<ActivityLog> {
    art.record_input(input)?;
    let log = parse_csv(input).with_context(|| format!("loading {}", input.display()))?;
    Ok(match upto {
        Some(a) => prefix(&log, a)?,
        None => log,
    })
}

#[derive(Serialize)]
struct SharePoint {
    p: f64,
    share: f64,
}

#[derive(Serialize)]
struct FitReport<'a> {
    schema: &'static str,
    input: String,
    upto: Option<u32>,
    activities: usize,
    users: usize,
    total_participation: u64,
    fit: &'a PowerLawFit64,
    top_share: Vec<SharePoint>,
}

fn fit(a: &FitArgs, seed: u64, art: &mut Artifacts) -> Result<()> {
    let log = load(&a.input, a.upto, art)?;
    let counts = frequency_sequence(&log, None)?;
    let opts = FitOptions {
        p_threshold: a.p_threshold,
        n_boot: a.n_boot,
        seed,
    };

    let curve = ccdf::<f64>(counts.values())?;
    art.write_csv("ccdf.csv", &["q", "ccdf"], curve.points.iter().map(|&(q, f)| [q.to_string(), f.to_string()]))?;
    let lorenz = lorenz_curve::<f64>(counts.values())?;
    art.write_csv(
        "lorenz.csv",
        &["population_share", "participation_share"],
        lorenz.iter().map(|&(x, y)| [x, y]),
    )?;
    let shares = TOP_SHARE_POINTS
        .iter()
        .map(|&p| Ok(SharePoint { p, share: top_share(counts.values(), p)? }))
        .collect::<Result<Vec<_>>>()?;

    let fitted: PowerLawFit64 = select_xmin(counts.values(), &opts)?;
    art.write_json(
        "fit.json",
        &FitReport {
            schema: "hfbi.fit/1",
            input: a.input.display().to_string(),
            upto: a.upto,
            activities: log.activity_count(),
            users: log.user_count(),
            total_participation: counts.total(),
            fit: &fitted,
            top_share: shares,
        },
    )?;

    if a.per_node {
        let series = hfbi_core::calibration::per_node_fits::<f64>(&log, a.threshold, a.stride, &opts)?;
        art.write_csv(
            "fit_nodes.csv",
            &["activity_id", "gamma", "x_min", "p_value", "n_tail"],
            series.nodes.iter().map(|n| match &n.result {
                Some(f) => [
                    n.activity_id.to_string(),
                    f.gamma.to_string(),
                    f.x_min.to_string(),
                    f.p_value.to_string(),
                    f.n_tail.to_string(),
                ],
                None => [n.activity_id.to_string(), String::new(), String::new(), String::new(), String::new()],
            }),
        )?;
        art.write_json("fit_nodes.json", &Tagged { schema: "hfbi.fit_nodes/1", body: &series })?;
    }
    Ok(())
}

#[derive(Serialize)]
struct Tagged<'a, B: Serialize> {
    schema: &'static str,
    #[serde(flatten)]
    body: &'a B,
}

#[derive(Serialize)]
struct SimulateReport<'a> {
    schema: &'static str,
    seed: u64,
    params: &'a HfbiParams<f64>,
    activities: usize,
    users: usize,
    frequencies: &'a [u64],
}

fn simulate_cmd(a: &SimulateArgs, seed: u64, art: &mut Artifacts) -> Result<()> {
    let params = match &a.input {
        Some(path) => {
            let log = load(path, None, art)?;
            derive_params(&log, a.alpha, a.kernel.into())?
        }
        None => HfbiParams::new(a.n, a.c, a.m, a.alpha, a.kernel.into())?,
    };
    let run = simulate(&params, seed)?;
    write_csv_file(&run.log, art.path("synthetic_log.csv"))?;
    art.register("synthetic_log.csv");
    art.write_json(
        "frequencies.json",
        &SimulateReport {
            schema: "hfbi.simulate/1",
            seed,
            params: &params,
            activities: run.log.activity_count(),
            users: run.log.user_count(),
            frequencies: run.frequencies.values(),
        },
    )?;
    Ok(())
}

fn calibrate(a: &CalibrateArgs, seed: u64, art: &mut Artifacts) -> Result<()> {
    let log = load(&a.input, a.upto, art)?;
    let opts = CalibrationOptions {
        grid_step: a.grid_step,
        runs: a.runs,
        seed,
    };
    let cal = calibrate_alpha::<f64>(&log, a.kernel.into(), &opts)?;
    art.write_csv(
        "calibration_grid.csv",
        &["alpha", "mean_p"],
        cal.grid.iter().zip(&cal.mean_p).map(|(&x, &p)| [x, p]),
    )?;
    art.write_json("calibration.json", &Tagged { schema: "hfbi.calibrate/1", body: &cal })?;

    if a.per_node {
        let series = per_node_calibration::<f64>(&log, a.kernel.into(), a.threshold, a.stride, &opts)?;
        art.write_csv(
            "calibration_nodes.csv",
            &["activity_id", "best_alpha", "mean_p", "n", "c", "m"],
            series.nodes.iter().map(|node| match &node.result {
                Some(r) => [
                    node.activity_id.to_string(),
                    r.best_alpha.to_string(),
                    r.best_mean_p.to_string(),
                    r.params.n.to_string(),
                    r.params.c.to_string(),
                    r.params.m.to_string(),
                ],
                None => [node.activity_id.to_string(), String::new(), String::new(), String::new(), String::new(), String::new()],
            }),
        )?;
        art.write_json("calibration_nodes.json", &Tagged { schema: "hfbi.calibrate_nodes/1", body: &series })?;
    }
    Ok(())
}

#[derive(Serialize)]
struct CurveSummary<'a> {
    /// Spearman correlation of proportion with x over well-exposed points.
    trend: Option<f64>,
    trend_points: usize,
    raw: &'a PropensityCurve64,
    smoothed: &'a PropensityCurve64,
}

#[derive(Serialize)]
struct EvidenceReport<'a> {
    schema: &'static str,
    window: usize,
    min_exposure: u64,
    by_history: CurveSummary<'a>,
    by_absence: CurveSummary<'a>,
}

fn curve_rows(c: &PropensityCurve<f64>) -> impl Iterator<Item = [String; 3]> + '_ {
    c.points
        .iter()
        .map(|p| [p.x.to_string(), p.proportion.to_string(), p.n_exposed.to_string()])
}

fn summarize<'a>(raw: &'a PropensityCurve64, smoothed: &'a PropensityCurve64, min_exposure: u64) -> CurveSummary<'a> {
    let strong = raw.with_min_exposure(min_exposure);
    CurveSummary {
        trend: strong.trend(),
        trend_points: strong.points.len(),
        raw,
        smoothed,
    }
}

fn evidence(a: &EvidenceArgs, art: &mut Artifacts) -> Result<()> {
    let log = load(&a.input, a.upto, art)?;
    let history = prop_by_history::<f64>(&log)?;
    let absence = prop_by_absence::<f64>(&log)?;
    let history_s = smooth(&history, a.window)?;
    let absence_s = smooth(&absence, a.window)?;
    let header = ["x", "proportion", "n_exposed"];
    art.write_csv("prop_by_history.csv", &header, curve_rows(&history))?;
    art.write_csv("prop_by_history_smoothed.csv", &header, curve_rows(&history_s))?;
    art.write_csv("prop_by_absence.csv", &header, curve_rows(&absence))?;
    art.write_csv("prop_by_absence_smoothed.csv", &header, curve_rows(&absence_s))?;
    art.write_json(
        "evidence.json",
        &EvidenceReport {
            schema: "hfbi.evidence/1",
            window: a.window,
            min_exposure: a.min_exposure,
            by_history: summarize(&history, &history_s, a.min_exposure),
            by_absence: summarize(&absence, &absence_s, a.min_exposure),
        },
    )?;
    Ok(())
}

#[derive(Serialize)]
struct IntervalFit {
    user_id: u32,
    fit: Option<PowerLawFit64>,
    error: Option<String>,
}

#[derive(Serialize)]
struct BurstsReport {
    schema: &'static str,
    scope: &'static str,
    min_count: usize,
    loyal_users: usize,
    users_analysed: usize,
    /// Fraction of all activities carrying an incentive.
    baseline: f64,
    tables: Vec<BurstTable<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    interval_fits: Option<Vec<IntervalFit>>,
}

fn bursts(a: &BurstsArgs, seed: u64, art: &mut Artifacts) -> Result<()> {
    let log = load(&a.input, a.upto, art)?;
    if a.delta.is_empty() {
        bail!(hfbi_core::Error::InvalidArgument("at least one --delta is required".into()));
    }
    let loyal = loyal_users(&log, a.min_count);
    let (users, scope) = match a.scope {
        Scope::Loyal => (loyal.clone(), "loyal"),
        Scope::All => (log.users().map(|(u, _)| u).collect(), "all"),
    };

    let mut tables = Vec::with_capacity(a.delta.len());
    let mut details: Vec<(u32, Burst)> = Vec::new();
    for &delta in &a.delta {
        let (table, found) = burst_table::<f64>(&log, &users, delta)?;
        tables.push(table);
        details.extend(found.into_iter().map(|b| (delta, b)));
    }

    let width = tables.iter().map(|t| t.position_counts.len()).max().unwrap_or(0);
    let mut header: Vec<String> = vec!["delta".into(), "total_bursts".into()];
    header.extend((0..width).map(|k| format!("pos_{k}")));
    header.extend(["pct_first".into(), "pct_within_2".into(), "pct_within_3".into()]);
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    art.write_csv(
        "burst_table.csv",
        &header_refs,
        tables.iter().map(|t| {
            let mut row = vec![t.delta.to_string(), t.total_bursts.to_string()];
            row.extend((0..width).map(|k| t.position_counts.get(k).copied().unwrap_or(0).to_string()));
            row.extend([t.pct_first.to_string(), t.pct_within_2.to_string(), t.pct_within_3.to_string()]);
            row
        }),
    )?;
    art.write_csv(
        "bursts_detail.csv",
        &["delta", "user_id", "start_activity", "end_activity", "length", "first_incentive_position"],
        details.iter().map(|(d, b)| {
            [
                d.to_string(),
                b.user_id.to_string(),
                b.start().to_string(),
                b.end().to_string(),
                b.len().to_string(),
                b.first_incentive_position.to_string(),
            ]
        }),
    )?;

    let interval_fits = if a.fit_intervals {
        let opts = FitOptions::default().with_n_boot(a.n_boot).with_seed(seed);
        let fits: Vec<IntervalFit> = loyal
            .iter()
            .map(|&u| match fit_intervals::<f64>(&log, u, &opts) {
                Ok(f) => IntervalFit { user_id: u, fit: Some(f), error: None },
                Err(e) => IntervalFit { user_id: u, fit: None, error: Some(e.to_string()) },
            })
            .collect();
        art.write_csv(
            "interval_fits.csv",
            &["user_id", "gamma", "x_min", "p_value", "n_tail"],
            fits.iter().map(|f| match &f.fit {
                Some(p) => [
                    f.user_id.to_string(),
                    p.gamma.to_string(),
                    p.x_min.to_string(),
                    p.p_value.to_string(),
                    p.n_tail.to_string(),
                ],
                None => [f.user_id.to_string(), String::new(), String::new(), String::new(), String::new()],
            }),
        )?;
        Some(fits)
    } else {
        None
    };

    art.write_json(
        "bursts.json",
        &BurstsReport {
            schema: "hfbi.bursts/1",
            scope,
            min_count: a.min_count,
            loyal_users: loyal.len(),
            users_analysed: users.len(),
            baseline: burst_baseline(&log),
            tables,
            interval_fits,
        },
    )?;
    Ok(())
}

#[derive(Serialize)]
struct TheoryReport<'a> {
    schema: &'static str,
    tolerance: f64,
    within_tolerance: bool,
    #[serde(flatten)]
    check: &'a hfbi_core::TheoryCheck64,
}

fn theory(a: &TheoryArgs, seed: u64, art: &mut Artifacts) -> Result<()> {
    let opts = FitOptions::default().with_n_boot(a.n_boot);
    let check = validate_theory::<f64>(a.c, a.m, a.n, seed, &opts)?;
    art.write_json(
        "theory.json",
        &TheoryReport {
            schema: "hfbi.theory/1",
            tolerance: a.tolerance,
            within_tolerance: check.abs_error <= a.tolerance,
            check: &check,
        },
    )?;
    eprintln!(
        "gamma_theory = {:.4}, gamma_hat = {:.4} (x_min = {}, p = {}), |error| = {:.4}",
        check.gamma_theory, check.gamma_hat, check.fit.x_min, check.fit.p_value, check.abs_error
    );
    Ok(())
}

#[derive(Serialize)]
struct LogSummary {
    schema: &'static str,
    input: String,
    records: usize,
    activities: usize,
    users: usize,
    incentive_activities: usize,
}

fn validate(a: &ValidateArgs, _seed: u64) -> Result<()> {
    if let Some(input) = &a.input {
        let log = parse_csv(input).with_context(|| format!("loading {}", input.display()))?;
        let summary = LogSummary {
            schema: "hfbi.validation/1",
            input: input.display().to_string(),
            records: log.records().len(),
            activities: log.activity_count(),
            users: log.user_count(),
            incentive_activities: log.incentive_set().len(),
        };
        println!("{}", serde_json::to_string_pretty(&summary)?);
        return Ok(());
    }
    let path = a.manifest.as_ref().expect("clap requires --input or --manifest");
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let manifest: Manifest = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    if manifest.schema != MANIFEST_SCHEMA {
        bail!("unsupported manifest schema `{}`", manifest.schema);
    }
    for input in &manifest.inputs {
        let now = sha256_file(Path::new(&input.path))?;
        if now != input.sha256 {
            return Err(Mismatch(format!("input {} changed since the recorded run", input.path)).into());
        }
    }

    let scratch = tempfile::tempdir()?;
    let mut rerun_args = manifest.args.clone();
    rerun_args.push("--out".into());
    rerun_args.push(scratch.path().display().to_string());
    let cli = parse_from(&rerun_args)?;
    if matches!(cli.command, Command::Validate(_)) {
        bail!("manifest records a validate run, which produces no outputs");
    }
    run(cli, &rerun_args)?;

    let replay: Manifest = serde_json::from_str(&fs::read_to_string(scratch.path().join(MANIFEST_FILE))?)?;
    let mut differing = Vec::new();
    for (old, new) in manifest.outputs.iter().zip(&replay.outputs) {
        if old != new {
            differing.push(old.path.clone());
        }
    }
    if manifest.outputs.len() != replay.outputs.len() {
        differing.push(format!(
            "output count {} vs {}",
            manifest.outputs.len(),
            replay.outputs.len()
        ));
    }
    if !differing.is_empty() {
        return Err(Mismatch(format!("outputs differ: {}", differing.join(", "))).into());
    }
    println!("reproduced {} outputs of `{}` byte for byte", replay.outputs.len(), manifest.command);
    Ok(())
}
