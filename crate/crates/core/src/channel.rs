//! Uniform linear arrays and block-flat Rician channel draws.
//!
//! Randomness comes from ChaCha20 keyed by the run's base seed, with the trial
//! index selecting the ChaCha stream. Each trial therefore owns an
//! independent, platform-stable substream and trials can be drawn in any
//! order or in parallel without changing their values.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::numerics::{ComplexMat, ComplexVec};

/// A uniform linear array; wavelength is normalized to 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrayGeometry {
    num_elements: usize,
    spacing_wavelengths: f64,
}

impl ArrayGeometry {
    pub fn new(num_elements: usize, spacing_wavelengths: f64) -> Result<Self> {
        if num_elements < 1 {
            return Err(Error::invalid("array needs at least one element"));
        }
        if !(spacing_wavelengths > 0.0) || !spacing_wavelengths.is_finite() {
            return Err(Error::invalid(format!(
                "element spacing must be positive, got {spacing_wavelengths}"
            )));
        }
        Ok(Self {
            num_elements,
            spacing_wavelengths,
        })
    }

    /// Half-wavelength spaced array.
    pub fn half_wavelength(num_elements: usize) -> Result<Self> {
        Self::new(num_elements, 0.5)
    }

    pub fn num_elements(&self) -> usize {
        self.num_elements
    }

    pub fn spacing_wavelengths(&self) -> f64 {
        self.spacing_wavelengths
    }
}

pub(crate) fn check_angle(theta: f64) -> Result<()> {
    if !(0.0..=PI).contains(&theta) {
        return Err(Error::invalid(format!("angle {theta} rad outside [0, π]")));
    }
    Ok(())
}

/// Far-field response `exp(j·2π·n·(Δ/λ)·cos θ)`, `n = 0..N−1`.
pub fn steering_vector(geometry: &ArrayGeometry, theta: f64) -> Result<ComplexVec> {
    check_angle(theta)?;
    Ok(steering_vector_unchecked(geometry, theta))
}

pub(crate) fn steering_vector_unchecked(geometry: &ArrayGeometry, theta: f64) -> ComplexVec {
    let k = 2.0 * PI * geometry.spacing_wavelengths * theta.cos();
    (0..geometry.num_elements)
        .map(|n| Complex64::from_polar(1.0, k * n as f64))
        .collect()
}

/// Line-of-sight component `a_R(φ)·a_T(φ)ᴴ`.
pub fn los_component(tx: &ArrayGeometry, rx: &ArrayGeometry, phi: f64) -> Result<ComplexMat> {
    let a_t = steering_vector(tx, phi)?;
    let a_r = steering_vector(rx, phi)?;
    Ok(ComplexMat::outer(&a_r, &a_t))
}

/// One channel draw and its parts.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    /// `N_R × N_T` channel.
    pub h_full: ComplexMat,
    pub h_los: ComplexMat,
    pub h_nlos: ComplexMat,
    pub alpha: Complex64,
    pub rician_kappa_linear: f64,
    /// True transmitter direction in radians.
    pub true_angle_rad: f64,
}

impl ChannelRealization {
    /// Assembles `α(√(κ/(κ+1))·H̄ + √(1/(κ+1))·H̃)`.
    pub fn assemble(
        h_los: ComplexMat,
        h_nlos: ComplexMat,
        alpha: Complex64,
        kappa_linear: f64,
        true_angle_rad: f64,
    ) -> Result<Self> {
        if h_los.shape() != h_nlos.shape() {
            return Err(Error::invalid("LoS and NLoS parts differ in shape"));
        }
        if !(kappa_linear >= 0.0) {
            return Err(Error::invalid(format!(
                "Rician factor must be >= 0, got {kappa_linear}"
            )));
        }
        let (w_los, w_nlos) = if kappa_linear.is_infinite() {
            (1.0, 0.0)
        } else {
            (
                (kappa_linear / (kappa_linear + 1.0)).sqrt(),
                (1.0 / (kappa_linear + 1.0)).sqrt(),
            )
        };
        let h_full = (&h_los.scale(w_los) + &h_nlos.scale(w_nlos)).scale_complex(alpha);
        Ok(Self {
            h_full,
            h_los,
            h_nlos,
            alpha,
            rician_kappa_linear: kappa_linear,
            true_angle_rad,
        })
    }

    pub fn n_r(&self) -> usize {
        self.h_full.rows()
    }

    pub fn n_t(&self) -> usize {
        self.h_full.cols()
    }
}

/// Deterministic generator for one trial: ChaCha20 keyed by `base_seed`,
/// stream `trial_index`.
pub fn trial_rng(base_seed: u64, trial_index: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(base_seed);
    rng.set_stream(trial_index);
    rng
}

/// `rows × cols` matrix of i.i.d. CN(0, 1) entries, filled row-major with the
/// real part drawn before the imaginary part.
pub fn complex_gaussian<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> ComplexMat {
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    ComplexMat::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re * scale, im * scale)
    })
}

/// Draws the channel of trial `trial_index`. `α` is fixed to 1 so the SNR
/// carries the path gain.
pub fn draw_channel(cfg: &SystemConfig, trial_index: u64) -> ChannelRealization {
    let tx = cfg.tx_geometry();
    let rx = cfg.rx_geometry();
    let phi = cfg.phi_rad();
    let h_los = los_component(&tx, &rx, phi).expect("validated angle");
    let mut rng = trial_rng(cfg.base_seed, trial_index);
    let h_nlos = complex_gaussian(&mut rng, cfg.n_r, cfg.n_t);
    ChannelRealization::assemble(
        h_los,
        h_nlos,
        Complex64::new(1.0, 0.0),
        cfg.kappa_linear(),
        phi,
    )
    .expect("shapes agree by construction")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{dot, svd};

    fn close(a: Complex64, b: Complex64) -> bool {
        (a - b).norm() < 1e-12
    }

    #[test]
    fn steering_vector_examples() {
        let g4 = ArrayGeometry::half_wavelength(4).unwrap();
        let v = steering_vector(&g4, PI / 2.0).unwrap();
        assert!(v.iter().all(|&z| close(z, Complex64::new(1.0, 0.0))));

        let g2 = ArrayGeometry::half_wavelength(2).unwrap();
        let v = steering_vector(&g2, 0.0).unwrap();
        assert!(close(v[0], Complex64::new(1.0, 0.0)) && close(v[1], Complex64::new(-1.0, 0.0)));

        let g3 = ArrayGeometry::half_wavelength(3).unwrap();
        let v = steering_vector(&g3, PI / 3.0).unwrap();
        assert!(close(v[1], Complex64::new(0.0, 1.0)) && close(v[2], Complex64::new(-1.0, 0.0)));
    }

    #[test]
    fn steering_vector_rejects_out_of_range() {
        let g = ArrayGeometry::half_wavelength(4).unwrap();
        assert!(steering_vector(&g, -0.1).is_err());
        assert!(steering_vector(&g, PI + 1e-9).is_err());
        assert!(ArrayGeometry::new(0, 0.5).is_err());
        assert!(ArrayGeometry::new(3, 0.0).is_err());
    }

    #[test]
    fn steering_vector_norm() {
        let g = ArrayGeometry::new(7, 0.37).unwrap();
        for i in 0..=20 {
            let v = steering_vector(&g, PI * i as f64 / 20.0).unwrap();
            assert!((dot(&v, &v).re - 7.0).abs() < 1e-12);
        }
    }

    #[test]
    fn los_examples() {
        let g1 = ArrayGeometry::half_wavelength(1).unwrap();
        let m = los_component(&g1, &g1, 1.0).unwrap();
        assert!(close(m[(0, 0)], Complex64::new(1.0, 0.0)));

        let t = ArrayGeometry::half_wavelength(3).unwrap();
        let r = ArrayGeometry::half_wavelength(2).unwrap();
        let m = los_component(&t, &r, PI / 2.0).unwrap();
        assert!(m
            .as_slice()
            .iter()
            .all(|&z| close(z, Complex64::new(1.0, 0.0))));

        let t = ArrayGeometry::half_wavelength(4).unwrap();
        let m = los_component(&t, &r, PI / 3.0).unwrap();
        assert!((m.frobenius_norm() - 8f64.sqrt()).abs() < 1e-12);
        let d = svd(&m).unwrap();
        assert!(d.s[1] <= 1e-9 * d.s[0]);
    }

    #[test]
    fn kappa_limits() {
        let mut cfg = SystemConfig {
            kappa_db: 120.0,
            ..Default::default()
        };
        let ch = draw_channel(&cfg, 3);
        let rel = (&ch.h_full - &ch.h_los).frobenius_norm() / ch.h_los.frobenius_norm();
        assert!(rel < 1e-5);

        cfg.kappa_db = 0.0;
        let base = draw_channel(&cfg, 3);
        let ch = ChannelRealization::assemble(
            base.h_los,
            base.h_nlos,
            Complex64::new(1.0, 0.0),
            0.0,
            cfg.phi_rad(),
        )
        .unwrap();
        assert_eq!(ch.h_full, ch.h_nlos);
    }

    #[test]
    fn draws_are_deterministic_and_distinct() {
        let cfg = SystemConfig::default();
        let a = draw_channel(&cfg, 5);
        let b = draw_channel(&cfg, 5);
        assert_eq!(a.h_full, b.h_full);
        let c = draw_channel(&cfg, 6);
        assert_ne!(a.h_nlos, c.h_nlos);
        let other_seed = SystemConfig {
            base_seed: 2,
            ..cfg
        };
        assert_ne!(draw_channel(&other_seed, 5).h_nlos, a.h_nlos);
    }

    #[test]
    fn reconstruction_invariant() {
        let cfg = SystemConfig {
            kappa_db: 3.0,
            ..Default::default()
        };
        let ch = draw_channel(&cfg, 0);
        let k = ch.rician_kappa_linear;
        let expect =
            &ch.h_los.scale((k / (k + 1.0)).sqrt()) + &ch.h_nlos.scale((1.0 / (k + 1.0)).sqrt());
        assert!(ch.h_full.max_abs_diff(&expect) < 1e-12);
    }
}
