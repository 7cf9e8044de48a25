//! Sensing-resistant precoder design.
//!
//! The precoder is confined to the null space of the true-direction steering
//! vector, `W = V_N W′`, so the line-of-sight path carries no energy. Inside
//! that space the ADPAR at the decoy angle becomes a generalized Rayleigh
//! quotient of the pair `{Â′, J′}`, whose extreme eigenvalues bound what any
//! precoder can reach. [`SrProblem::solve`] picks one of four regimes from
//! where `γ` falls relative to those bounds.

mod power;
mod sdr;
mod waterfill;

pub use power::{
    maximize_over_polytope, solve_power_allocation, Evaluation, LogDetObjective, PowerAllocation,
    PowerPolytope, FW_GAP_TOL, MAX_FW_ITERATIONS,
};
pub use sdr::{binomial, combinations, sdr_solve, SdrOutcome, EXHAUSTIVE_LIMIT};
pub use waterfill::{water_filling, water_filling_powers};

use serde::{Deserialize, Serialize};

use crate::channel::{steering_vector, ArrayGeometry, ChannelRealization};
use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::metrics::{achievable_rate, projected_forms, Precoder, ProjectedForms};
use crate::numerics::{gevd, svd, ComplexMat, ComplexVec};

/// Tolerance on `γ` when deciding which regime applies.
pub const CASE_TOL: f64 = 1e-9;

/// Orthonormal basis `V_N` (`N_T × (N_T−1)`) of the complement of `a_T(φ)`,
/// taken from the right singular vectors of `a_T(φ)ᴴ`.
pub fn null_space_basis(tx: &ArrayGeometry, phi: f64) -> Result<ComplexMat> {
    let n_t = tx.num_elements();
    if n_t < 2 {
        return Err(Error::invalid(
            "a single transmit antenna has no null space to hide in",
        ));
    }
    let a = steering_vector(tx, phi)?;
    let row = ComplexMat::from_column(&a).adjoint();
    let d = svd(&row)?;
    Ok(d.v.column_range(1, n_t))
}

/// Extreme generalized eigenpairs of `{Â′, J′}`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdparBounds {
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub t_min: ComplexVec,
    pub t_max: ComplexVec,
}

pub fn adpar_bounds(a_hat_prime: &ComplexMat, j_prime: &ComplexMat) -> Result<AdparBounds> {
    let g = gevd(a_hat_prime, j_prime)?;
    Ok(AdparBounds {
        lambda_min: g.lambda_min(),
        lambda_max: g.lambda_max(),
        t_min: g.t_min(),
        t_max: g.t_max(),
    })
}

/// Rank-one `W′` along `t` with power `p`: first column `√P·t/‖t‖`, the
/// other `n_s − 1` columns zero.
pub fn closed_form_extremal(t: &[crate::numerics::Complex64], p: f64, n_s: usize) -> ComplexMat {
    let norm = crate::numerics::norm(t);
    let scale = p.sqrt() / norm;
    ComplexMat::from_fn(t.len(), n_s.max(1), |i, j| {
        if j == 0 {
            t[i] * scale
        } else {
            Default::default()
        }
    })
}

/// Which regime produced a solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SolutionCase {
    /// `γ` exceeds the largest attainable ADPAR.
    Infeasible,
    /// `γ` equals the largest attainable ADPAR.
    ClosedFormMax,
    /// `γ` is at or below the smallest ADPAR, so the constraint never binds.
    WaterFillingInactive,
    /// Eigenvector subset search with constrained power split.
    SdrPath,
}

impl SolutionCase {
    pub fn label(self) -> &'static str {
        match self {
            Self::Infeasible => "infeasible",
            Self::ClosedFormMax => "closed_form_max",
            Self::WaterFillingInactive => "water_filling_inactive",
            Self::SdrPath => "sdr_path",
        }
    }
}

impl std::fmt::Display for SolutionCase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// Optimizer output for one channel, SNR and `γ`.
#[derive(Debug, Clone, PartialEq)]
pub struct SrSolution {
    /// `W = V_N W′`; silent when infeasible.
    pub w_full: Precoder,
    pub w_prime: ComplexMat,
    pub case_taken: SolutionCase,
    /// bit/s/Hz over the full channel.
    pub achieved_rate: f64,
    pub achieved_adpar: f64,
    pub gamma: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// Eigenvector subset chosen on the SDR path.
    pub indices: Option<Vec<usize>>,
}

impl SrSolution {
    pub fn is_feasible(&self) -> bool {
        self.case_taken != SolutionCase::Infeasible
    }
}

/// Everything about one channel and SNR that does not depend on `γ` or `N_S`.
#[derive(Debug, Clone)]
pub struct SrProblem {
    h: ComplexMat,
    v_n: ComplexMat,
    forms: ProjectedForms,
    bounds: AdparBounds,
    power: f64,
    n0: f64,
}

impl SrProblem {
    pub fn new(cfg: &SystemConfig, channel: &ChannelRealization, snr_db: f64) -> Result<Self> {
        cfg.validate()?;
        if channel.n_t() != cfg.n_t || channel.n_r() != cfg.n_r {
            return Err(Error::invalid(format!(
                "channel is {}x{} but config expects {}x{}",
                channel.n_r(),
                channel.n_t(),
                cfg.n_r,
                cfg.n_t
            )));
        }
        let tx = cfg.tx_geometry();
        let rx = cfg.rx_geometry();
        let n0 = cfg.n0_at(snr_db);
        let v_n = null_space_basis(&tx, cfg.phi_rad())?;
        let forms = projected_forms(
            &channel.h_full,
            &v_n,
            &rx,
            n0,
            cfg.power_watts,
            cfg.phi_hat_rad(),
        )?;
        let bounds = adpar_bounds(&forms.a_hat_prime, &forms.j_prime)?;
        Ok(Self {
            h: channel.h_full.clone(),
            v_n,
            forms,
            bounds,
            power: cfg.power_watts,
            n0,
        })
    }

    pub fn bounds(&self) -> &AdparBounds {
        &self.bounds
    }

    pub fn forms(&self) -> &ProjectedForms {
        &self.forms
    }

    pub fn v_n(&self) -> &ComplexMat {
        &self.v_n
    }

    pub fn n0(&self) -> f64 {
        self.n0
    }

    pub fn power(&self) -> f64 {
        self.power
    }

    pub fn channel(&self) -> &ComplexMat {
        &self.h
    }

    /// Regime for a given `γ`.
    pub fn classify(&self, gamma: f64) -> SolutionCase {
        let AdparBounds {
            lambda_min,
            lambda_max,
            ..
        } = self.bounds;
        if gamma > lambda_max + CASE_TOL {
            SolutionCase::Infeasible
        } else if (gamma - lambda_max).abs() <= CASE_TOL {
            SolutionCase::ClosedFormMax
        } else if gamma <= lambda_min + CASE_TOL {
            SolutionCase::WaterFillingInactive
        } else {
            SolutionCase::SdrPath
        }
    }

    /// The rank-one precoder that attains `λ_max`.
    pub fn closed_form_max(&self, n_s: usize) -> Result<SrSolution> {
        let w_prime = closed_form_extremal(&self.bounds.t_max, self.power, n_s);
        self.assemble(
            w_prime,
            SolutionCase::ClosedFormMax,
            self.bounds.lambda_max,
            None,
        )
    }

    pub fn solve(&self, gamma: f64, n_s: usize) -> Result<SrSolution> {
        if !gamma.is_finite() {
            return Err(Error::invalid(format!("gamma must be finite, got {gamma}")));
        }
        let dim = self.v_n.cols();
        if n_s == 0 || n_s > dim {
            return Err(Error::invalid(format!(
                "n_s must lie in 1..={dim}, got {n_s}"
            )));
        }
        match self.classify(gamma) {
            SolutionCase::Infeasible => Ok(SrSolution {
                w_full: Precoder::silent(self.v_n.rows(), n_s),
                w_prime: ComplexMat::zeros(dim, n_s),
                case_taken: SolutionCase::Infeasible,
                achieved_rate: 0.0,
                achieved_adpar: 1.0,
                gamma,
                lambda_min: self.bounds.lambda_min,
                lambda_max: self.bounds.lambda_max,
                indices: None,
            }),
            SolutionCase::ClosedFormMax => {
                let w_prime = closed_form_extremal(&self.bounds.t_max, self.power, n_s);
                self.assemble(w_prime, SolutionCase::ClosedFormMax, gamma, None)
            }
            SolutionCase::WaterFillingInactive => {
                let w_prime = water_filling(&self.forms.h_prime, self.power, self.n0, n_s)?;
                self.assemble(w_prime, SolutionCase::WaterFillingInactive, gamma, None)
            }
            SolutionCase::SdrPath => {
                let out = sdr_solve(&self.forms, gamma, self.power, self.n0, n_s)?;
                self.assemble(out.w_prime, SolutionCase::SdrPath, gamma, Some(out.indices))
            }
        }
    }

    fn assemble(
        &self,
        w_prime: ComplexMat,
        case_taken: SolutionCase,
        gamma: f64,
        indices: Option<Vec<usize>>,
    ) -> Result<SrSolution> {
        let w_full = Precoder::new(&self.v_n * &w_prime, self.power)?;
        let achieved_rate = achievable_rate(&self.h, &w_full, self.n0)?;
        let achieved_adpar = self.forms.trace_ratio(&w_prime);
        Ok(SrSolution {
            w_full,
            w_prime,
            case_taken,
            achieved_rate,
            achieved_adpar,
            gamma,
            lambda_min: self.bounds.lambda_min,
            lambda_max: self.bounds.lambda_max,
            indices,
        })
    }
}

/// Solves one configuration end to end at its single SNR point and `γ`.
pub fn optimize(cfg: &SystemConfig, channel: &ChannelRealization) -> Result<SrSolution> {
    let problem = SrProblem::new(cfg, channel, cfg.snr_db.point())?;
    let b = problem.bounds();
    let gamma = cfg.gamma.resolve(b.lambda_min, b.lambda_max);
    problem.solve(gamma, cfg.n_s)
}
