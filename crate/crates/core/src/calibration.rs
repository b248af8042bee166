//! Grid-search calibration of the habit weight and prefix ("activity node")
//! analyses of a growing log.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::event_log::{frequency_sequence, prefix, users_reaching, ActivityId, ActivityLog};
use crate::hfbi::{derive_params, simulate_frequencies, HfbiParams, Kernel};
use crate::powerlaw::{select_xmin, two_sample_ks, FitOptions, PowerLawFit};
use crate::scalar::Real;
use crate::seed::{derive_seed, stream, DEFAULT_SEED};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationOptions {
    pub grid_step: f64,
    pub runs: usize,
    pub seed: u64,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        Self {
            grid_step: 0.01,
            runs: 5,
            seed: DEFAULT_SEED,
        }
    }
}

impl CalibrationOptions {
    fn validate(&self) -> Result<()> {
        if !(self.grid_step > 0.0 && self.grid_step <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "grid step must lie in (0, 1], got {}",
                self.grid_step
            )));
        }
        if self.runs == 0 {
            return Err(Error::InvalidArgument("runs must be >= 1".into()));
        }
        Ok(())
    }

    /// `0, step, 2·step, …` up to 1, with 1 always included.
    pub fn grid<T: Real>(&self) -> Result<Vec<T>> {
        self.validate()?;
        let steps = (1.0 / self.grid_step + 1e-9).floor() as usize;
        // Rounding keeps values such as 0.7 free of representation noise.
        let mut grid: Vec<f64> = (0..=steps)
            .map(|k| ((k as f64 * self.grid_step * 1e12).round() / 1e12).min(1.0))
            .collect();
        if 1.0 - grid[grid.len() - 1] > 1e-9 {
            grid.push(1.0);
        } else {
            let last = grid.len() - 1;
            grid[last] = 1.0;
        }
        Ok(grid.into_iter().map(T::lit).collect())
    }

    /// Seed of run `r`, shared by every grid point.
    pub fn run_seed(&self, run: usize) -> u64 {
        derive_seed(self.seed, stream::CALIBRATION_RUN, run as u64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct AlphaCalibration<T: Real> {
    pub grid: Vec<T>,
    /// Mean two-sample KS p-value over `runs` simulations, per grid point.
    pub mean_p: Vec<T>,
    pub best_alpha: T,
    pub best_mean_p: T,
    pub runs: usize,
    pub kernel: Kernel,
    pub seed: u64,
    /// Scale parameters used for every simulation (`alpha` is the best one).
    pub params: HfbiParams<T>,
}

/// Scores each grid value of `alpha` by how well simulated participation
/// counts match the log's, and returns the best (ties go to the smaller
/// `alpha`). Every grid point reuses the same per-run seeds.
pub fn calibrate_alpha<T: Real>(log: &ActivityLog, kernel: Kernel, opts: &CalibrationOptions) -> Result<AlphaCalibration<T>> {
    let params = derive_params(log, T::zero(), kernel)?;
    let empirical = frequency_sequence(log, None)?;
    calibrate_against(empirical.values(), params, opts)
}

/// As [`calibrate_alpha`] with explicit scale parameters and target counts.
pub fn calibrate_against<T: Real>(
    empirical: &[u64],
    params: HfbiParams<T>,
    opts: &CalibrationOptions,
) -> Result<AlphaCalibration<T>> {
    if empirical.is_empty() {
        return Err(Error::EmptySample);
    }
    let grid = opts.grid::<T>()?;
    params.validate()?;
    let mean_p = grid
        .par_iter()
        .map(|&alpha| {
            let trial = params.with_alpha(alpha);
            let mut total = T::zero();
            for r in 0..opts.runs {
                let simulated = simulate_frequencies(&trial, opts.run_seed(r))?;
                total = total + two_sample_ks::<T>(simulated.values(), empirical)?.p_value;
            }
            Ok(total / T::of_count(opts.runs))
        })
        .collect::<Result<Vec<T>>>()?;

    let mut best = 0;
    for (i, &p) in mean_p.iter().enumerate() {
        if p > mean_p[best] {
            best = i;
        }
    }
    Ok(AlphaCalibration {
        best_alpha: grid[best],
        best_mean_p: mean_p[best],
        params: params.with_alpha(grid[best]),
        grid,
        mean_p,
        runs: opts.runs,
        kernel: params.kernel,
        seed: opts.seed,
    })
}

/// Outcome of one analysis at one activity node; failures are kept in the
/// series rather than aborting it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeResult<R> {
    pub activity_id: ActivityId,
    pub result: Option<R>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeSeries<R> {
    pub population_threshold: usize,
    pub stride: usize,
    pub nodes: Vec<NodeResult<R>>,
}

impl<R> NodeSeries<R> {
    pub fn successes(&self) -> impl Iterator<Item = (ActivityId, &R)> {
        self.nodes
            .iter()
            .filter_map(|n| n.result.as_ref().map(|r| (n.activity_id, r)))
    }
}

/// Activity nodes from the first one whose prefix holds `population_threshold`
/// users to the end of the log, every `stride`-th node, always ending with the last.
pub fn activity_nodes(log: &ActivityLog, population_threshold: usize, stride: usize) -> Result<Vec<ActivityId>> {
    if stride == 0 {
        return Err(Error::InvalidArgument("stride must be >= 1".into()));
    }
    let start = users_reaching(log, population_threshold)?;
    let last = log.last_activity();
    let mut nodes: Vec<ActivityId> = (start..=last).step_by(stride).collect();
    if nodes.last() != Some(&last) {
        nodes.push(last);
    }
    Ok(nodes)
}

fn run_nodes<R: Send>(
    nodes: Vec<ActivityId>,
    population_threshold: usize,
    stride: usize,
    analyse: impl Fn(ActivityId) -> Result<R> + Sync,
) -> NodeSeries<R> {
    let nodes = nodes
        .into_par_iter()
        .map(|a| match analyse(a) {
            Ok(r) => NodeResult {
                activity_id: a,
                result: Some(r),
                error: None,
            },
            Err(e) => NodeResult {
                activity_id: a,
                result: None,
                error: Some(e.to_string()),
            },
        })
        .collect();
    NodeSeries {
        population_threshold,
        stride,
        nodes,
    }
}

/// Power-law fit of the participation counts of every prefix.
pub fn per_node_fits<T: Real>(
    log: &ActivityLog,
    population_threshold: usize,
    stride: usize,
    opts: &FitOptions,
) -> Result<NodeSeries<PowerLawFit<T>>> {
    let nodes = activity_nodes(log, population_threshold, stride)?;
    Ok(run_nodes(nodes, population_threshold, stride, |a| {
        let counts = frequency_sequence(log, Some(a))?;
        select_xmin(counts.values(), opts)
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct NodeAlpha<T: Real> {
    pub best_alpha: T,
    pub best_mean_p: T,
    pub params: HfbiParams<T>,
}

/// [`calibrate_alpha`] on every prefix, each with its own scale parameters.
pub fn per_node_calibration<T: Real>(
    log: &ActivityLog,
    kernel: Kernel,
    population_threshold: usize,
    stride: usize,
    opts: &CalibrationOptions,
) -> Result<NodeSeries<NodeAlpha<T>>> {
    opts.validate()?;
    let nodes = activity_nodes(log, population_threshold, stride)?;
    Ok(run_nodes(nodes, population_threshold, stride, |a| {
        let cal = calibrate_alpha::<T>(&prefix(log, a)?, kernel, opts)?;
        Ok(NodeAlpha {
            best_alpha: cal.best_alpha,
            best_mean_p: cal.best_mean_p,
            params: cal.params,
        })
    }))
}
