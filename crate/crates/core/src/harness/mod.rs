//! Monte-Carlo sweeps over channel draws.
//!
//! Every trial draws its channel from its own seeded stream, so trials are
//! independent and can run on a thread pool. Per-trial results are collected
//! in trial order before any averaging, which keeps the output bit-identical
//! whatever [`Execution`] is chosen.

mod beamscan;
mod output;

pub use beamscan::{beamscan_estimate, beamscan_estimate_on_grid, REFINE_TOL};
pub use output::{write_pattern_csv, write_run, write_run_metadata, write_sweep_csv, RunMetadata};

use serde::{Deserialize, Serialize};

use crate::beamformer::{water_filling, SrProblem, SrSolution};
use crate::channel::draw_channel;
use crate::config::{GammaSetting, SystemConfig};
use crate::error::{Error, Result};
use crate::metrics::{
    achievable_rate, angle_grid, normalize_pattern, spatial_covariance, BeamSample, Precoder,
};

/// How trials are scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// Rayon pool; `None` uses rayon's default thread count. Without the
    /// `parallel` feature this runs sequentially.
    Parallel {
        threads: Option<usize>,
    },
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel { threads: None }
        } else {
            Execution::Sequential
        }
    }
}

impl Execution {
    /// `Some(1)` and `None` without the feature mean sequential.
    pub fn from_threads(threads: Option<usize>) -> Self {
        match threads {
            Some(1) => Execution::Sequential,
            t => Execution::Parallel { threads: t },
        }
    }

    /// Runs `f` for trials `0..n` and returns results in trial order.
    pub fn map_trials<T, F>(self, n: usize, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(u64) -> Result<T> + Sync + Send,
    {
        match self {
            Execution::Sequential => (0..n as u64).map(f).collect(),
            Execution::Parallel { threads } => parallel_map(threads, n, f),
        }
    }
}

#[cfg(feature = "parallel")]
fn parallel_map<T, F>(threads: Option<usize>, n: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    use rayon::prelude::*;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        builder = builder.num_threads(t);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::invalid(format!("cannot build thread pool: {e}")))?;
    pool.install(|| (0..n as u64).into_par_iter().map(&f).collect())
}

#[cfg(not(feature = "parallel"))]
fn parallel_map<T, F>(_threads: Option<usize>, n: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    (0..n as u64).map(f).collect()
}

/// Default SNR grid in dB: −10 to 20 in steps of 2.
pub fn default_snr_grid() -> Vec<f64> {
    (0..16).map(|i| -10.0 + 2.0 * i as f64).collect()
}

/// `(N_T, N_R)` pairs compared in the ADPAR-vs-SNR sweep.
pub const DEFAULT_ANTENNA_CONFIGS: [(usize, usize); 3] = [(32, 16), (16, 16), (16, 8)];

pub const DEFAULT_NS_SET: [usize; 5] = [1, 2, 4, 6, 8];

pub const DEFAULT_PATTERN_NS: [usize; 3] = [1, 4, 8];

/// Default `γ` grid for the rate-vs-`γ` sweep.
pub fn default_gamma_grid() -> Vec<f64> {
    (1..=8).map(f64::from).collect()
}

/// Version tag written into every output.
pub fn build_tag() -> String {
    match option_env!("SRBF_BUILD_TAG") {
        Some(tag) => tag.to_string(),
        None => format!("srbf-core-v{}", env!("CARGO_PKG_VERSION")),
    }
}

/// One averaged point of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub x: f64,
    pub mean: f64,
    /// Sample standard deviation over `√trial_count`.
    pub std_error: f64,
    pub trial_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepMetadata {
    pub config: SystemConfig,
    pub seed: u64,
    pub build: String,
    pub x_label: String,
    /// Trials per point whose `γ` was unattainable and that fell back to the
    /// ADPAR-maximizing precoder.
    pub fallback_trials: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub sweep_id: String,
    pub points: Vec<SweepPoint>,
    pub metadata: SweepMetadata,
}

/// Trial-averaged beampattern.
#[derive(Debug, Clone, PartialEq)]
pub struct PatternResult {
    pub pattern_id: String,
    pub samples: Vec<BeamSample>,
    pub trial_count: usize,
}

/// Sample mean and standard error.
pub fn mean_and_std_error(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Averages `per_trial[trial][point]` into sweep points at `xs`.
fn aggregate(xs: &[f64], per_trial: &[Vec<f64>]) -> Vec<SweepPoint> {
    xs.iter()
        .enumerate()
        .map(|(k, &x)| {
            let column: Vec<f64> = per_trial.iter().map(|t| t[k]).collect();
            let (mean, std_error) = mean_and_std_error(&column);
            SweepPoint {
                x,
                mean,
                std_error,
                trial_count: column.len(),
            }
        })
        .collect()
}

fn sweep(
    id: String,
    cfg: &SystemConfig,
    x_label: &str,
    xs: &[f64],
    per_trial: &[Vec<f64>],
    fallback_trials: Vec<usize>,
) -> SweepResult {
    SweepResult {
        sweep_id: id,
        points: aggregate(xs, per_trial),
        metadata: SweepMetadata {
            config: cfg.clone(),
            seed: cfg.base_seed,
            build: build_tag(),
            x_label: x_label.to_string(),
            fallback_trials,
        },
    }
}

/// Solves at `gamma`; an unattainable `γ` falls back to the closed-form
/// ADPAR-maximizing precoder. The flag reports whether that happened.
pub fn solve_or_fallback(
    problem: &SrProblem,
    gamma: GammaSetting,
    n_s: usize,
) -> Result<(SrSolution, bool)> {
    let b = problem.bounds();
    let g = gamma.resolve(b.lambda_min, b.lambda_max);
    let s = problem.solve(g, n_s)?;
    if s.is_feasible() {
        Ok((s, false))
    } else {
        Ok((problem.closed_form_max(n_s)?, true))
    }
}

/// Received power per grid angle for one precoder.
fn pattern_powers(
    problem: &SrProblem,
    cfg: &SystemConfig,
    w: &Precoder,
    grid: &[f64],
) -> Result<Vec<f64>> {
    let r = spatial_covariance(problem.channel(), w, problem.n0())?;
    let rx = cfg.rx_geometry();
    Ok(grid.iter().map(|&t| r.power_toward(&rx, t)).collect())
}

fn average_pattern(id: String, grid: &[f64], per_trial: &[Vec<f64>]) -> PatternResult {
    let n = per_trial.len() as f64;
    let powers = grid
        .iter()
        .enumerate()
        .map(|(k, &t)| (t, per_trial.iter().map(|p| p[k]).sum::<f64>() / n))
        .collect();
    PatternResult {
        pattern_id: id,
        samples: normalize_pattern(powers),
        trial_count: per_trial.len(),
    }
}

fn count_fallbacks(flags: &[Vec<bool>], points: usize) -> Vec<usize> {
    (0..points)
        .map(|k| flags.iter().filter(|f| f[k]).count())
        .collect()
}

/// Maximal ADPAR (`λ_max`) and the rate of the precoder attaining it, versus
/// SNR, for each `(N_T, N_R)` pair.
pub fn run_fig2(
    cfg: &SystemConfig,
    snr_grid_db: &[f64],
    antenna_configs: &[(usize, usize)],
    exec: Execution,
) -> Result<Vec<SweepResult>> {
    if snr_grid_db.is_empty() {
        return Err(Error::invalid("SNR grid is empty"));
    }
    let mut out = Vec::new();
    for &(n_t, n_r) in antenna_configs {
        let sub = SystemConfig {
            n_t,
            n_r,
            n_s: cfg.n_s.min(n_r).min(n_t.saturating_sub(1)).max(1),
            snr_db: crate::config::SnrSetting::Grid(snr_grid_db.to_vec()),
            ..cfg.clone()
        };
        sub.validate()?;
        let per_trial = exec.map_trials(sub.trials, |trial| {
            let ch = draw_channel(&sub, trial);
            let mut adpar = Vec::with_capacity(snr_grid_db.len());
            let mut rate = Vec::with_capacity(snr_grid_db.len());
            for &snr in snr_grid_db {
                let problem = SrProblem::new(&sub, &ch, snr)?;
                adpar.push(problem.bounds().lambda_max);
                rate.push(problem.closed_form_max(sub.n_s)?.achieved_rate);
            }
            Ok((adpar, rate))
        })?;
        let (adpar, rate): (Vec<_>, Vec<_>) = per_trial.into_iter().unzip();
        let none = vec![0; snr_grid_db.len()];
        out.push(sweep(
            format!("fig2_adpar_{n_t}x{n_r}"),
            &sub,
            "snr_db",
            snr_grid_db,
            &adpar,
            none.clone(),
        ));
        out.push(sweep(
            format!("fig2_rate_{n_t}x{n_r}"),
            &sub,
            "snr_db",
            snr_grid_db,
            &rate,
            none,
        ));
    }
    Ok(out)
}

/// Rate-vs-SNR and beampattern sweep settings.
#[derive(Debug, Clone, PartialEq)]
pub struct Fig3Options {
    pub snr_grid_db: Vec<f64>,
    pub gammas: Vec<GammaSetting>,
    pub pattern_snr_db: f64,
}

impl Default for Fig3Options {
    fn default() -> Self {
        Self {
            snr_grid_db: default_snr_grid(),
            gammas: vec![
                GammaSetting::Value(0.0),
                GammaSetting::Value(5.0),
                GammaSetting::Max,
            ],
            pattern_snr_db: 10.0,
        }
    }
}

/// Rate sweeps plus averaged beampatterns.
#[derive(Debug, Clone, PartialEq)]
pub struct FigureOutput {
    pub rates: Vec<SweepResult>,
    pub patterns: Vec<PatternResult>,
}

struct Fig3Trial {
    rates: Vec<Vec<f64>>,
    fallbacks: Vec<Vec<bool>>,
    benchmark: Vec<f64>,
    patterns: Vec<Vec<f64>>,
}

/// Rate versus SNR for each `γ` and for unconstrained water-filling on the
/// full channel, plus beampatterns at one SNR.
pub fn run_fig3(cfg: &SystemConfig, opts: &Fig3Options, exec: Execution) -> Result<FigureOutput> {
    cfg.validate()?;
    if opts.snr_grid_db.is_empty() || opts.gammas.is_empty() {
        return Err(Error::invalid("SNR grid and gamma list must be non-empty"));
    }
    let grid = angle_grid(cfg.grid_points);
    let per_trial = exec.map_trials(cfg.trials, |trial| {
        let ch = draw_channel(cfg, trial);
        let mut t = Fig3Trial {
            rates: vec![Vec::new(); opts.gammas.len()],
            fallbacks: vec![Vec::new(); opts.gammas.len()],
            benchmark: Vec::new(),
            patterns: Vec::new(),
        };
        for &snr in &opts.snr_grid_db {
            let problem = SrProblem::new(cfg, &ch, snr)?;
            for (k, &g) in opts.gammas.iter().enumerate() {
                let (s, fell_back) = solve_or_fallback(&problem, g, cfg.n_s)?;
                t.rates[k].push(s.achieved_rate);
                t.fallbacks[k].push(fell_back);
            }
            let w = Precoder::from_matrix(water_filling(
                &ch.h_full,
                cfg.power_watts,
                problem.n0(),
                cfg.n_s,
            )?);
            t.benchmark
                .push(achievable_rate(&ch.h_full, &w, problem.n0())?);
        }
        let problem = SrProblem::new(cfg, &ch, opts.pattern_snr_db)?;
        for &g in &opts.gammas {
            let (s, _) = solve_or_fallback(&problem, g, cfg.n_s)?;
            t.patterns
                .push(pattern_powers(&problem, cfg, &s.w_full, &grid)?);
        }
        Ok(t)
    })?;

    let xs = &opts.snr_grid_db;
    let mut rates = Vec::new();
    for (k, g) in opts.gammas.iter().enumerate() {
        let values: Vec<Vec<f64>> = per_trial.iter().map(|t| t.rates[k].clone()).collect();
        let flags: Vec<Vec<bool>> = per_trial.iter().map(|t| t.fallbacks[k].clone()).collect();
        rates.push(sweep(
            format!("fig3_rate_gamma{}", g.label()),
            cfg,
            "snr_db",
            xs,
            &values,
            count_fallbacks(&flags, xs.len()),
        ));
    }
    let bench: Vec<Vec<f64>> = per_trial.iter().map(|t| t.benchmark.clone()).collect();
    rates.push(sweep(
        "fig3_rate_benchmark".into(),
        cfg,
        "snr_db",
        xs,
        &bench,
        vec![0; xs.len()],
    ));

    let patterns = opts
        .gammas
        .iter()
        .enumerate()
        .map(|(k, g)| {
            let p: Vec<Vec<f64>> = per_trial.iter().map(|t| t.patterns[k].clone()).collect();
            average_pattern(format!("fig3_pattern_gamma{}", g.label()), &grid, &p)
        })
        .collect();
    Ok(FigureOutput { rates, patterns })
}

/// Rate-vs-`γ` sweep settings.
#[derive(Debug, Clone, PartialEq)]
pub struct Fig4Options {
    pub gamma_grid: Vec<f64>,
    pub ns_set: Vec<usize>,
    pub pattern_ns: Vec<usize>,
    pub pattern_gamma: f64,
}

impl Default for Fig4Options {
    fn default() -> Self {
        Self {
            gamma_grid: default_gamma_grid(),
            ns_set: DEFAULT_NS_SET.to_vec(),
            pattern_ns: DEFAULT_PATTERN_NS.to_vec(),
            pattern_gamma: 5.0,
        }
    }
}

/// Rate versus `γ` for several stream counts at the configured SNR, plus
/// beampatterns for selected stream counts.
pub fn run_fig4(cfg: &SystemConfig, opts: &Fig4Options, exec: Execution) -> Result<FigureOutput> {
    cfg.validate()?;
    let ns_max = (cfg.n_t - 1).min(cfg.n_r);
    for &ns in opts.ns_set.iter().chain(&opts.pattern_ns) {
        if ns < 1 || ns > ns_max {
            return Err(Error::config(
                "n_s",
                format!("sweep value {ns} outside 1..={ns_max}"),
            ));
        }
    }
    if opts.gamma_grid.is_empty() || opts.ns_set.is_empty() {
        return Err(Error::invalid(
            "gamma grid and stream-count set must be non-empty",
        ));
    }
    let snr = cfg.snr_db.point();
    let grid = angle_grid(cfg.grid_points);
    let pattern_gamma = GammaSetting::Value(opts.pattern_gamma);

    type Trial = (Vec<Vec<f64>>, Vec<Vec<bool>>, Vec<Vec<f64>>);
    let per_trial: Vec<Trial> = exec.map_trials(cfg.trials, |trial| {
        let ch = draw_channel(cfg, trial);
        let problem = SrProblem::new(cfg, &ch, snr)?;
        let mut rates = Vec::with_capacity(opts.ns_set.len());
        let mut flags = Vec::with_capacity(opts.ns_set.len());
        for &ns in &opts.ns_set {
            let mut r = Vec::with_capacity(opts.gamma_grid.len());
            let mut f = Vec::with_capacity(opts.gamma_grid.len());
            for &g in &opts.gamma_grid {
                let (s, fell_back) = solve_or_fallback(&problem, GammaSetting::Value(g), ns)?;
                r.push(s.achieved_rate);
                f.push(fell_back);
            }
            rates.push(r);
            flags.push(f);
        }
        let mut patterns = Vec::with_capacity(opts.pattern_ns.len());
        for &ns in &opts.pattern_ns {
            let (s, _) = solve_or_fallback(&problem, pattern_gamma, ns)?;
            patterns.push(pattern_powers(&problem, cfg, &s.w_full, &grid)?);
        }
        Ok((rates, flags, patterns))
    })?;

    let xs = &opts.gamma_grid;
    let mut rates = Vec::new();
    for (k, &ns) in opts.ns_set.iter().enumerate() {
        let values: Vec<Vec<f64>> = per_trial.iter().map(|t| t.0[k].clone()).collect();
        let flags: Vec<Vec<bool>> = per_trial.iter().map(|t| t.1[k].clone()).collect();
        let sub = SystemConfig {
            n_s: ns,
            ..cfg.clone()
        };
        rates.push(sweep(
            format!("fig4_rate_ns{ns}"),
            &sub,
            "gamma",
            xs,
            &values,
            count_fallbacks(&flags, xs.len()),
        ));
    }
    let patterns = opts
        .pattern_ns
        .iter()
        .enumerate()
        .map(|(k, &ns)| {
            let p: Vec<Vec<f64>> = per_trial.iter().map(|t| t.2[k].clone()).collect();
            average_pattern(format!("fig4_pattern_ns{ns}"), &grid, &p)
        })
        .collect();
    Ok(FigureOutput { rates, patterns })
}

/// Outcome of running the beamscan adversary against SR precoders.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcealmentReport {
    pub estimates_deg: Vec<f64>,
    /// Estimates within `decoy_tol_deg` of the decoy direction.
    pub near_decoy: usize,
    /// Estimates at least `true_margin_deg` away from the true direction.
    pub far_from_true: usize,
    /// Both of the above.
    pub concealed: usize,
    /// Estimates within `decoy_tol_deg` of the true direction.
    pub exposed: usize,
    pub fallback_trials: usize,
    pub trial_count: usize,
}

impl ConcealmentReport {
    pub fn concealed_fraction(&self) -> f64 {
        self.concealed as f64 / self.trial_count as f64
    }
}

/// Solves each trial at the configured SNR and `γ` and points a beamscan
/// receiver at the resulting covariance.
pub fn run_concealment(
    cfg: &SystemConfig,
    decoy_tol_deg: f64,
    true_margin_deg: f64,
    exec: Execution,
) -> Result<ConcealmentReport> {
    cfg.validate()?;
    let snr = cfg.snr_db.point();
    let rx = cfg.rx_geometry();
    let per_trial = exec.map_trials(cfg.trials, |trial| {
        let ch = draw_channel(cfg, trial);
        let problem = SrProblem::new(cfg, &ch, snr)?;
        let (s, fell_back) = solve_or_fallback(&problem, cfg.gamma, cfg.n_s)?;
        let r = spatial_covariance(&ch.h_full, &s.w_full, problem.n0())?;
        Ok((
            beamscan_estimate_on_grid(&r, &rx, cfg.grid_points).to_degrees(),
            fell_back,
        ))
    })?;
    let estimates_deg: Vec<f64> = per_trial.iter().map(|t| t.0).collect();
    let near = |e: &f64| (e - cfg.phi_hat_deg).abs() <= decoy_tol_deg;
    let far = |e: &f64| (e - cfg.phi_deg).abs() >= true_margin_deg;
    Ok(ConcealmentReport {
        near_decoy: estimates_deg.iter().filter(|e| near(e)).count(),
        far_from_true: estimates_deg.iter().filter(|e| far(e)).count(),
        concealed: estimates_deg.iter().filter(|e| near(e) && far(e)).count(),
        exposed: estimates_deg
            .iter()
            .filter(|e| (*e - cfg.phi_deg).abs() <= decoy_tol_deg)
            .count(),
        fallback_trials: per_trial.iter().filter(|t| t.1).count(),
        trial_count: estimates_deg.len(),
        estimates_deg,
    })
}

/// `λ_min`, `λ_max` of trial `trial` at the configured SNR point.
pub fn realization_bounds(cfg: &SystemConfig, trial: u64) -> Result<(f64, f64)> {
    let ch = draw_channel(cfg, trial);
    let problem = SrProblem::new(cfg, &ch, cfg.snr_db.point())?;
    Ok((problem.bounds().lambda_min, problem.bounds().lambda_max))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn std_error_of_known_sample() {
        let (m, se) = mean_and_std_error(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        // sample variance 5/3
        assert!((se - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
        assert_eq!(mean_and_std_error(&[7.0]), (7.0, 0.0));
    }

    #[test]
    fn sequential_and_parallel_agree() {
        let f = |t: u64| Ok(((t * 2654435761) % 97) as f64 / 7.0);
        let a = Execution::Sequential.map_trials(50, f).unwrap();
        let b = Execution::Parallel { threads: Some(3) }
            .map_trials(50, f)
            .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn small_fig2_is_deterministic() {
        let cfg = SystemConfig {
            trials: 4,
            ..Default::default()
        };
        let a = run_fig2(&cfg, &[0.0, 10.0], &[(6, 4)], Execution::Sequential).unwrap();
        let b = run_fig2(
            &cfg,
            &[0.0, 10.0],
            &[(6, 4)],
            Execution::Parallel { threads: Some(2) },
        )
        .unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 2);
        assert_eq!(a[0].sweep_id, "fig2_adpar_6x4");
        assert!(a[0].points[1].mean > a[0].points[0].mean);
    }
}
