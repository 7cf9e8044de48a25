//! Received covariance, ADPAR, achievable rate and beampatterns.

use std::f64::consts::PI;

use crate::channel::{check_angle, steering_vector_unchecked, ArrayGeometry};
use crate::error::{Error, Result};
use crate::numerics::{bessel_j0, logdet_pd, Cholesky, Complex64, ComplexMat};

/// Default beampattern resolution: 0.1° over [0°, 180°].
pub const DEFAULT_GRID_POINTS: usize = 1801;

/// Transmit beamforming matrix `W` (`N_T × N_S`) and its total power.
#[derive(Debug, Clone, PartialEq)]
pub struct Precoder {
    w: ComplexMat,
    power: f64,
}

impl Precoder {
    /// Checks `tr(W Wᴴ) = power` within 1e-9 relative.
    pub fn new(w: ComplexMat, power: f64) -> Result<Self> {
        let actual = w.frobenius_norm().powi(2);
        if (actual - power).abs() > 1e-9 * power.abs().max(f64::MIN_POSITIVE) {
            return Err(Error::invalid(format!(
                "precoder power {actual:e} does not match declared {power:e}"
            )));
        }
        Ok(Self { w, power })
    }

    /// Precoder whose power is whatever `tr(W Wᴴ)` is.
    pub fn from_matrix(w: ComplexMat) -> Self {
        let power = w.frobenius_norm().powi(2);
        Self { w, power }
    }

    /// All-zero precoder (the transmitter stays silent).
    pub fn silent(n_t: usize, n_s: usize) -> Self {
        Self {
            w: ComplexMat::zeros(n_t, n_s),
            power: 0.0,
        }
    }

    pub fn w(&self) -> &ComplexMat {
        &self.w
    }

    pub fn power(&self) -> f64 {
        self.power
    }

    pub fn n_t(&self) -> usize {
        self.w.rows()
    }

    pub fn n_s(&self) -> usize {
        self.w.cols()
    }
}

/// Spatial covariance `R` of the received signal.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialCovariance {
    r: ComplexMat,
}

impl SpatialCovariance {
    /// Wraps `r` after checking it is Hermitian positive definite.
    pub fn new(r: ComplexMat) -> Result<Self> {
        Cholesky::new(&r)?;
        Ok(Self { r })
    }

    pub fn r(&self) -> &ComplexMat {
        &self.r
    }

    pub fn n_r(&self) -> usize {
        self.r.rows()
    }

    /// Received power `a(θ)ᴴ R a(θ)` seen by a steering vector.
    pub fn power_toward(&self, rx: &ArrayGeometry, theta: f64) -> f64 {
        let a = steering_vector_unchecked(rx, theta);
        self.r.quadratic_form(&a)
    }
}

fn check_noise(n0: f64) -> Result<()> {
    if !(n0 > 0.0) || !n0.is_finite() {
        return Err(Error::invalid(format!(
            "noise power must be positive, got {n0}"
        )));
    }
    Ok(())
}

fn check_link(h: &ComplexMat, w: &Precoder) -> Result<()> {
    if h.cols() != w.n_t() {
        return Err(Error::invalid(format!(
            "channel has {} transmit antennas but precoder has {} rows",
            h.cols(),
            w.n_t()
        )));
    }
    Ok(())
}

/// `R = H W Wᴴ Hᴴ + N₀ I`.
pub fn spatial_covariance(h: &ComplexMat, w: &Precoder, n0: f64) -> Result<SpatialCovariance> {
    check_noise(n0)?;
    check_link(h, w)?;
    let hw = h * w.w();
    let r = (&hw * &hw.adjoint()).hermitian_part().add_diagonal(n0);
    SpatialCovariance::new(r)
}

/// `[J]_{mn} = J₀(2π(m−n)·Δ/λ)`: the angular average of `a(θ)a(θ)ᴴ` over [0, π].
pub fn build_j_matrix(rx: &ArrayGeometry) -> ComplexMat {
    let n = rx.num_elements();
    let k = 2.0 * PI * rx.spacing_wavelengths();
    let by_lag: Vec<f64> = (0..n).map(|d| bessel_j0(k * d as f64)).collect();
    ComplexMat::from_fn(n, n, |m, l| Complex64::new(by_lag[m.abs_diff(l)], 0.0))
}

/// ADPAR in direction `theta`: `a(θ)ᴴ R a(θ) / tr(R J)`.
pub fn adpar(theta: f64, r: &SpatialCovariance, rx: &ArrayGeometry) -> Result<f64> {
    check_angle(theta)?;
    check_rx(r, rx)?;
    let j = build_j_matrix(rx);
    Ok(adpar_with_j(theta, r, rx, &j))
}

pub(crate) fn adpar_with_j(
    theta: f64,
    r: &SpatialCovariance,
    rx: &ArrayGeometry,
    j: &ComplexMat,
) -> f64 {
    let num = r.power_toward(rx, theta);
    let den: f64 = (0..r.n_r())
        .flat_map(|m| (0..r.n_r()).map(move |l| (m, l)))
        .map(|(m, l)| (r.r[(m, l)] * j[(l, m)]).re)
        .sum();
    num / den
}

fn check_rx(r: &SpatialCovariance, rx: &ArrayGeometry) -> Result<()> {
    if r.n_r() != rx.num_elements() {
        return Err(Error::invalid(format!(
            "covariance is {}x{} but the array has {} elements",
            r.n_r(),
            r.n_r(),
            rx.num_elements()
        )));
    }
    Ok(())
}

/// Achievable rate `log₂ det(I + N₀⁻¹ H W Wᴴ Hᴴ)` in bit/s/Hz.
pub fn achievable_rate(h: &ComplexMat, w: &Precoder, n0: f64) -> Result<f64> {
    check_noise(n0)?;
    check_link(h, w)?;
    let hw = h * w.w();
    // det(I + X Xᴴ/N₀) = det(I + Xᴴ X/N₀); factor the smaller Gram matrix.
    let gram = if hw.cols() <= hw.rows() {
        hw.adjoint_mul(&hw)
    } else {
        &hw * &hw.adjoint()
    };
    let m = gram.hermitian_part().scale(1.0 / n0).add_diagonal(1.0);
    Ok((logdet_pd(&m)? / std::f64::consts::LN_2).max(0.0))
}

/// One beampattern sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamSample {
    pub theta_rad: f64,
    pub power: f64,
    /// Power relative to the grid maximum (0 dB at the peak).
    pub power_db: f64,
}

/// Uniform angle grid over [0, π] inclusive.
pub fn angle_grid(grid_points: usize) -> Vec<f64> {
    let step = PI / (grid_points - 1) as f64;
    (0..grid_points)
        .map(|i| {
            if i + 1 == grid_points {
                PI
            } else {
                step * i as f64
            }
        })
        .collect()
}

/// Samples `a(θ)ᴴ R a(θ)` on a uniform grid over [0, π].
pub fn beampattern(
    r: &SpatialCovariance,
    rx: &ArrayGeometry,
    grid_points: usize,
) -> Result<Vec<BeamSample>> {
    if grid_points < 2 {
        return Err(Error::invalid("beampattern needs at least 2 grid points"));
    }
    check_rx(r, rx)?;
    let powers: Vec<(f64, f64)> = angle_grid(grid_points)
        .into_iter()
        .map(|t| (t, r.power_toward(rx, t)))
        .collect();
    Ok(normalize_pattern(powers))
}

/// Attaches the peak-normalized dB column to `(theta, power)` pairs.
pub fn normalize_pattern(powers: Vec<(f64, f64)>) -> Vec<BeamSample> {
    let peak = powers.iter().map(|p| p.1).fold(f64::MIN_POSITIVE, f64::max);
    powers
        .into_iter()
        .map(|(theta_rad, power)| BeamSample {
            theta_rad,
            power,
            power_db: 10.0 * (power / peak).log10(),
        })
        .collect()
}

/// Matrices of the ADPAR in the null-space coordinates `W = V_N W′`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectedForms {
    /// `H′ = H V_N`.
    pub h_prime: ComplexMat,
    /// `Â′ = H′ᴴ A(φ̂) H′ + (N_R N₀/P) I`.
    pub a_hat_prime: ComplexMat,
    /// `J′ = H′ᴴ J H′ + (N_R N₀/P) I`.
    pub j_prime: ComplexMat,
}

impl ProjectedForms {
    /// Trace-ratio ADPAR `tr(W′ᴴ Â′ W′) / tr(W′ᴴ J′ W′)`.
    pub fn trace_ratio(&self, w_prime: &ComplexMat) -> f64 {
        let num: f64 = (0..w_prime.cols())
            .map(|k| self.a_hat_prime.quadratic_form(&w_prime.column(k)))
            .sum();
        let den: f64 = (0..w_prime.cols())
            .map(|k| self.j_prime.quadratic_form(&w_prime.column(k)))
            .sum();
        num / den
    }
}

/// Builds `Â′` and `J′` for the decoy direction `phi_hat`.
pub fn projected_forms(
    h: &ComplexMat,
    v_n: &ComplexMat,
    rx: &ArrayGeometry,
    n0: f64,
    p: f64,
    phi_hat: f64,
) -> Result<ProjectedForms> {
    check_angle(phi_hat)?;
    check_noise(n0)?;
    if !(p > 0.0) {
        return Err(Error::invalid(format!(
            "transmit power must be positive, got {p}"
        )));
    }
    if h.cols() != v_n.rows() || h.rows() != rx.num_elements() {
        return Err(Error::invalid("projected_forms: dimension mismatch"));
    }
    let k = v_n.cols();
    let gram_defect = (&v_n.adjoint_mul(v_n) - &ComplexMat::identity(k)).frobenius_norm();
    if gram_defect > 1e-9 {
        return Err(Error::invalid(format!(
            "null-space basis is not orthonormal (defect {gram_defect:e})"
        )));
    }
    let n_r = rx.num_elements() as f64;
    let load = n_r * n0 / p;
    let h_prime = h * v_n;
    let a = steering_vector_unchecked(rx, phi_hat);
    // H′ᴴ a aᴴ H′ = g gᴴ with g = H′ᴴ a.
    let g = h_prime.adjoint().mul_vec(&a);
    let a_hat_prime = ComplexMat::outer(&g, &g)
        .hermitian_part()
        .add_diagonal(load);
    let j = build_j_matrix(rx);
    let j_prime = h_prime
        .adjoint_mul(&(&j * &h_prime))
        .hermitian_part()
        .add_diagonal(load);
    Ok(ProjectedForms {
        h_prime,
        a_hat_prime,
        j_prime,
    })
}
