//! `srbf`: sensing-resistant beamforming simulator.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use srbf_core::beamformer::{SolutionCase, SrProblem};
use srbf_core::channel::draw_channel;
use srbf_core::config::{ConfigOverrides, GammaSetting, SnrSetting, SystemConfig};
use srbf_core::harness::{
    default_snr_grid, realization_bounds, run_fig2, run_fig3, run_fig4, write_pattern_csv,
    write_run, Execution, Fig3Options, Fig4Options, FigureOutput, PatternResult,
    DEFAULT_ANTENNA_CONFIGS,
};
use srbf_core::metrics::{beampattern, spatial_covariance};
use srbf_core::{selftest, Error};

#[derive(Debug, Parser)]
#[command(
    name = "srbf",
    version,
    about = "Sensing-resistant MIMO beamforming simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve one channel realization and print the solution summary.
    Solve {
        #[command(flatten)]
        common: Common,
        /// Trial index of the realization.
        #[arg(long, default_value_t = 0)]
        trial: u64,
        /// Also write the received beampattern CSV into the output directory.
        #[arg(long)]
        pattern: bool,
    },
    /// Maximal ADPAR and its rate versus SNR for several array sizes.
    SweepFig2 {
        #[command(flatten)]
        common: Common,
        /// Antenna pairs as NTxNR, comma separated.
        #[arg(long, value_delimiter = ',', value_parser = parse_antennas)]
        antennas: Option<Vec<(usize, usize)>>,
    },
    /// Rate versus SNR for several ADPAR thresholds plus beampatterns.
    SweepFig3 {
        #[command(flatten)]
        common: Common,
        /// Thresholds to sweep, e.g. `0,5,max`.
        #[arg(long, value_delimiter = ',')]
        gammas: Option<Vec<GammaSetting>>,
        #[arg(long, allow_hyphen_values = true)]
        pattern_snr_db: Option<f64>,
    },
    /// Rate versus ADPAR threshold for several stream counts plus beampatterns.
    SweepFig4 {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',')]
        gamma_grid: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        ns_set: Option<Vec<usize>>,
        #[arg(long, value_delimiter = ',')]
        pattern_ns: Option<Vec<usize>>,
        #[arg(long)]
        pattern_gamma: Option<f64>,
    },
    /// Print lambda_min and lambda_max per realization.
    Bounds {
        #[command(flatten)]
        common: Common,
        /// Only this trial instead of trials 0..trials.
        #[arg(long)]
        trial: Option<u64>,
    },
    /// Run the oracle-backed self checks.
    Selftest,
}

/// Config file, output and scheduling flags plus one flag per config field.
#[derive(Debug, Args)]
struct Common {
    /// TOML config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, env = "SRBF_OUT_DIR", default_value = "out")]
    out: PathBuf,
    /// Worker threads for sweeps (1 means sequential).
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    n_t: Option<usize>,
    #[arg(long)]
    n_r: Option<usize>,
    #[arg(long)]
    n_s: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    phi_deg: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    phi_hat_deg: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    kappa_db: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    power_watts: Option<f64>,
    /// One value, `start:step:stop` or a comma-separated list.
    #[arg(long, allow_hyphen_values = true)]
    snr_db: Option<SnrSetting>,
    /// A number, `max` or `min`.
    #[arg(long, allow_hyphen_values = true)]
    gamma: Option<GammaSetting>,
    #[arg(long, allow_hyphen_values = true)]
    spacing_wavelengths: Option<f64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long, visible_alias = "seed")]
    base_seed: Option<u64>,
    #[arg(long)]
    grid_points: Option<usize>,
}

impl Common {
    fn overrides(&self) -> ConfigOverrides {
        ConfigOverrides {
            n_t: self.n_t,
            n_r: self.n_r,
            n_s: self.n_s,
            phi_deg: self.phi_deg,
            phi_hat_deg: self.phi_hat_deg,
            kappa_db: self.kappa_db,
            power_watts: self.power_watts,
            snr_db: self.snr_db.clone(),
            gamma: self.gamma,
            spacing_wavelengths: self.spacing_wavelengths,
            trials: self.trials,
            base_seed: self.base_seed,
            grid_points: self.grid_points,
        }
    }

    fn load(&self) -> srbf_core::Result<SystemConfig> {
        SystemConfig::load(self.config.as_deref(), &self.overrides())
    }

    fn execution(&self) -> Execution {
        match self.threads {
            Some(t) => Execution::from_threads(Some(t)),
            None => Execution::default(),
        }
    }
}

fn parse_antennas(s: &str) -> Result<(usize, usize), String> {
    let (t, r) = s
        .trim()
        .split_once('x')
        .ok_or_else(|| format!("expected NTxNR, got `{s}`"))?;
    let t = t.parse().map_err(|_| format!("bad N_T in `{s}`"))?;
    let r = r.parse().map_err(|_| format!("bad N_R in `{s}`"))?;
    Ok((t, r))
}

/// Failure with its process exit code.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Self {
        let code = match error.downcast_ref::<Error>() {
            Some(Error::NumericalFailure(_)) => 2,
            Some(Error::Infeasible(_)) => 3,
            _ => 1,
        };
        Failure { code, error }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        anyhow::Error::new(e).into()
    }
}

fn solve(common: &Common, trial: u64, pattern: bool) -> Result<(), Failure> {
    let cfg = common.load()?;
    let ch = draw_channel(&cfg, trial);
    let snr = cfg.snr_db.point();
    let problem = SrProblem::new(&cfg, &ch, snr)?;
    let b = problem.bounds();
    let gamma = cfg.gamma.resolve(b.lambda_min, b.lambda_max);
    let s = problem.solve(gamma, cfg.n_s)?;
    println!("trial: {trial}");
    println!("snr_db: {snr}");
    println!("case: {}", s.case_taken);
    println!("gamma: {}", s.gamma);
    println!("lambda_min: {}", s.lambda_min);
    println!("lambda_max: {}", s.lambda_max);
    println!("rate_bps_hz: {}", s.achieved_rate);
    println!("adpar: {}", s.achieved_adpar);
    if let Some(idx) = &s.indices {
        println!("indices: {idx:?}");
    }
    if s.case_taken == SolutionCase::Infeasible {
        return Err(Error::Infeasible(format!(
            "gamma = {gamma} exceeds the largest attainable ADPAR λ_max = {} (lambda_min = {})",
            s.lambda_max, s.lambda_min
        ))
        .into());
    }
    if pattern {
        let r = spatial_covariance(&ch.h_full, &s.w_full, problem.n0())?;
        let samples = beampattern(&r, &cfg.rx_geometry(), cfg.grid_points)?;
        let result = PatternResult {
            pattern_id: format!("solve_pattern_trial{trial}"),
            samples,
            trial_count: 1,
        };
        std::fs::create_dir_all(&common.out)
            .with_context(|| format!("cannot create {}", common.out.display()))?;
        let path = write_pattern_csv(&common.out, &result, cfg.base_seed)?;
        println!("pattern: {}", path.display());
    }
    Ok(())
}

fn report(paths: &[PathBuf]) {
    for p in paths {
        println!("{}", p.display());
    }
}

fn write(out: &Path, run: &str, cfg: &SystemConfig, output: &FigureOutput) -> Result<(), Failure> {
    let paths = write_run(out, run, cfg, output)?;
    report(&paths);
    Ok(())
}

fn bounds(common: &Common, trial: Option<u64>) -> Result<(), Failure> {
    let cfg = common.load()?;
    let trials: Vec<u64> = match trial {
        Some(t) => vec![t],
        None => (0..cfg.trials as u64).collect(),
    };
    println!("trial,lambda_min,lambda_max");
    for t in trials {
        let (lo, hi) = realization_bounds(&cfg, t)?;
        println!("{t},{lo},{hi}");
    }
    Ok(())
}

fn run_selftest() -> Result<(), Failure> {
    let checks = selftest::run();
    let failed = checks.iter().filter(|c| !c.passed).count();
    for c in &checks {
        println!(
            "{} {}: {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        );
    }
    if failed > 0 {
        return Err(Error::NumericalFailure(format!("{failed} self checks failed")).into());
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Solve {
            common,
            trial,
            pattern,
        } => solve(&common, trial, pattern),
        Command::SweepFig2 { common, antennas } => {
            let cfg = common.load()?;
            let grid = cfg.snr_db.grid_or(&default_snr_grid());
            let antennas = antennas.unwrap_or_else(|| DEFAULT_ANTENNA_CONFIGS.to_vec());
            let rates = run_fig2(&cfg, &grid, &antennas, common.execution())?;
            let output = FigureOutput {
                rates,
                patterns: Vec::new(),
            };
            write(&common.out, "fig2", &cfg, &output)
        }
        Command::SweepFig3 {
            common,
            gammas,
            pattern_snr_db,
        } => {
            let cfg = common.load()?;
            let mut opts = Fig3Options {
                snr_grid_db: cfg.snr_db.grid_or(&default_snr_grid()),
                ..Default::default()
            };
            if let Some(g) = gammas {
                opts.gammas = g;
            }
            if let Some(s) = pattern_snr_db {
                opts.pattern_snr_db = s;
            }
            let output = run_fig3(&cfg, &opts, common.execution())?;
            write(&common.out, "fig3", &cfg, &output)
        }
        Command::SweepFig4 {
            common,
            gamma_grid,
            ns_set,
            pattern_ns,
            pattern_gamma,
        } => {
            let cfg = common.load()?;
            let d = Fig4Options::default();
            let opts = Fig4Options {
                gamma_grid: gamma_grid.unwrap_or(d.gamma_grid),
                ns_set: ns_set.unwrap_or(d.ns_set),
                pattern_ns: pattern_ns.unwrap_or(d.pattern_ns),
                pattern_gamma: pattern_gamma.unwrap_or(d.pattern_gamma),
            };
            let output = run_fig4(&cfg, &opts, common.execution())?;
            write(&common.out, "fig4", &cfg, &output)
        }
        Command::Bounds { common, trial } => bounds(&common, trial),
        Command::Selftest => run_selftest(),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn antenna_pairs() {
        assert_eq!(parse_antennas("16x8"), Ok((16, 8)));
        assert!(parse_antennas("16-8").is_err());
        assert!(parse_antennas("ax8").is_err());
    }

    #[test]
    fn command_line_is_well_formed() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }

    #[test]
    fn flags_map_onto_overrides() {
        let cli = Cli::try_parse_from([
            "srbf", "solve", "--snr-db", "-10:5:0", "--gamma", "max", "--seed", "9",
        ])
        .unwrap();
        let Command::Solve { common, .. } = cli.command else {
            panic!("wrong subcommand")
        };
        let o = common.overrides();
        assert_eq!(o.snr_db, Some(SnrSetting::Grid(vec![-10.0, -5.0, 0.0])));
        assert_eq!(o.gamma, Some(GammaSetting::Max));
        assert_eq!(o.base_seed, Some(9));
    }
}
