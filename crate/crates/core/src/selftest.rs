//! Quick oracle-backed checks of the whole pipeline, runnable from a release
//! binary without the test harness.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::beamformer::{
    closed_form_extremal, solve_power_allocation, LogDetObjective, SolutionCase, SrProblem,
};
use crate::channel::{complex_gaussian, draw_channel, steering_vector, ArrayGeometry};
use crate::config::SystemConfig;
use crate::error::Result;
use crate::metrics::{adpar, spatial_covariance, Precoder, SpatialCovariance};
use crate::numerics::{bessel_j0, Complex64, ComplexMat, ComplexVec};

/// Outcome of one check.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, passed: bool, detail: String) -> Check {
    Check {
        name,
        passed,
        detail,
    }
}

/// Composite Simpson rule with `panels` (even) panels.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    let mut acc = f(a) + f(b);
    for i in 1..panels {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + h * i as f64);
    }
    acc * h / 3.0
}

/// ADPAR straight from its definition: power toward `theta` over the
/// angular mean of the received power, the mean taken by quadrature.
pub fn adpar_by_quadrature(
    theta: f64,
    r: &SpatialCovariance,
    rx: &ArrayGeometry,
    panels: usize,
) -> f64 {
    let mean = simpson(|t| r.power_toward(rx, t), 0.0, PI, panels) / PI;
    r.power_toward(rx, theta) / mean
}

fn bessel_check() -> Check {
    // Reference values of J0 to 18 digits.
    let table = [
        (1.0, 0.765_197_686_557_966_55),
        (PI, -0.304_242_177_644_093_86),
        (10.0, -0.245_935_764_451_348_34),
        (50.0, 0.055_812_327_669_251_815),
    ];
    let worst = table
        .iter()
        .map(|&(x, v)| (bessel_j0(x) - v).abs())
        .fold(0.0, f64::max);
    check(
        "bessel_j0 reference values",
        worst < 1e-13,
        format!("max abs error {worst:.2e}"),
    )
}

fn random_covariance(rng: &mut ChaCha20Rng, n_r: usize) -> SpatialCovariance {
    let g = complex_gaussian(rng, n_r, n_r);
    let r = (&g * &g.adjoint()).hermitian_part().add_diagonal(0.1);
    SpatialCovariance::new(r).expect("positive definite by construction")
}

fn adpar_check(rng: &mut ChaCha20Rng) -> Result<Check> {
    let mut worst: f64 = 0.0;
    for n_r in [2, 4, 8] {
        let rx = ArrayGeometry::half_wavelength(n_r)?;
        let r = random_covariance(rng, n_r);
        let theta = rng.random::<f64>() * PI;
        let closed = adpar(theta, &r, &rx)?;
        let quad = adpar_by_quadrature(theta, &r, &rx, 1 << 12);
        worst = worst.max((closed - quad).abs() / quad);
    }
    Ok(check(
        "ADPAR trace form vs quadrature",
        worst < 1e-6,
        format!("max relative error {worst:.2e}"),
    ))
}

fn bounds_check() -> Result<Vec<Check>> {
    let cfg = SystemConfig {
        n_t: 6,
        n_r: 4,
        n_s: 2,
        ..Default::default()
    };
    let mut rng = ChaCha20Rng::seed_from_u64(11);
    let mut outside = 0;
    let mut attain: f64 = 0.0;
    let mut zf: f64 = 0.0;
    let tx = cfg.tx_geometry();
    let a_t = steering_vector(&tx, cfg.phi_rad())?;
    for trial in 0..10 {
        let ch = draw_channel(&cfg, trial);
        let problem = SrProblem::new(&cfg, &ch, 10.0)?;
        let b = problem.bounds();
        let forms = problem.forms();
        for _ in 0..50 {
            let w = complex_gaussian(&mut rng, cfg.n_t - 1, cfg.n_s);
            let ratio = forms.trace_ratio(&w);
            if ratio < b.lambda_min - 1e-9 || ratio > b.lambda_max + 1e-9 {
                outside += 1;
            }
        }
        for (t, target) in [(&b.t_max, b.lambda_max), (&b.t_min, b.lambda_min)] {
            let w = closed_form_extremal(t, 1.0, cfg.n_s);
            attain = attain.max((forms.trace_ratio(&w) - target).abs());
        }
        let mid = 0.5 * (b.lambda_min + b.lambda_max);
        let s = problem.solve(mid, cfg.n_s)?;
        let leak = ComplexMat::from_column(&a_t)
            .adjoint_mul(s.w_full.w())
            .frobenius_norm();
        zf = zf.max(leak);
    }
    Ok(vec![
        check(
            "ADPAR within generalized eigenvalue bounds",
            outside == 0,
            format!("{outside} of 500 outside"),
        ),
        check(
            "closed-form precoders attain the bounds",
            attain < 1e-8,
            format!("max gap {attain:.2e}"),
        ),
        check(
            "true direction is zero-forced",
            zf < 1e-9 * (cfg.n_t as f64).sqrt(),
            format!("max leakage {zf:.2e}"),
        ),
    ])
}

fn power_allocation_check(rng: &mut ChaCha20Rng) -> Result<Check> {
    let mut worst: f64 = 0.0;
    for _ in 0..5 {
        let g = complex_gaussian(rng, 3, 2);
        let gains: Vec<ComplexVec> = vec![g.column(0), g.column(1)];
        let lambdas = [rng.random::<f64>() + 0.1, -(rng.random::<f64>() + 0.1)];
        let (p, n0) = (1.0, 0.2);
        let alloc = solve_power_allocation(&gains, &lambdas, p, n0)?;
        let obj = LogDetObjective::from_gains(&gains, n0);
        let solved = obj.value(&alloc)?;
        // Feasible segment: p₀ from p·(−λ₁)/(λ₀−λ₁) up to p.
        let lo = p * (-lambdas[1]) / (lambdas[0] - lambdas[1]);
        let mut best = f64::NEG_INFINITY;
        for k in 0..=10_000 {
            let p0 = lo + (p - lo) * k as f64 / 10_000.0;
            best = best.max(obj.value(&[p0, p - p0])?);
        }
        worst = worst.max(best - solved);
    }
    Ok(check(
        "power allocation vs grid search",
        worst < 1e-4,
        format!("max shortfall {worst:.2e} bit/s/Hz"),
    ))
}

fn dispatch_check() -> Result<Check> {
    let cfg = SystemConfig {
        n_t: 8,
        n_r: 4,
        n_s: 2,
        ..Default::default()
    };
    let ch = draw_channel(&cfg, 0);
    let problem = SrProblem::new(&cfg, &ch, 10.0)?;
    let b = problem.bounds().clone();
    let cases = [
        (0.0, SolutionCase::WaterFillingInactive),
        (0.5 * (b.lambda_min + b.lambda_max), SolutionCase::SdrPath),
        (b.lambda_max, SolutionCase::ClosedFormMax),
        (2.0 * b.lambda_max, SolutionCase::Infeasible),
    ];
    let mut rates = Vec::new();
    let mut ok = true;
    for (gamma, expect) in cases {
        let s = problem.solve(gamma, cfg.n_s)?;
        ok &= s.case_taken == expect;
        if s.is_feasible() {
            ok &= s.achieved_adpar >= gamma - 1e-6;
            ok &= (s.w_full.power() - cfg.power_watts).abs() <= 1e-9 * cfg.power_watts;
            rates.push(s.achieved_rate);
        }
    }
    ok &= rates.windows(2).all(|w| w[0] >= w[1] - 1e-9);
    Ok(check(
        "four-case dispatch and rate ordering",
        ok,
        format!("rates {rates:.3?}"),
    ))
}

fn received_adpar_check() -> Result<Check> {
    let cfg = SystemConfig::default();
    let ch = draw_channel(&cfg, 0);
    let problem = SrProblem::new(&cfg, &ch, 10.0)?;
    let s = problem.solve(5.0, cfg.n_s)?;
    let r = spatial_covariance(&ch.h_full, &s.w_full, problem.n0())?;
    let direct = adpar(cfg.phi_hat_rad(), &r, &cfg.rx_geometry())?;
    let gap = (direct - s.achieved_adpar).abs() / direct;
    Ok(check(
        "trace-ratio ADPAR equals received-covariance ADPAR",
        gap < 1e-9 && direct >= 5.0 - 1e-6,
        format!("ADPAR {direct:.6}, relative gap {gap:.2e}"),
    ))
}

fn precoder_power_check() -> Check {
    let w = ComplexMat::from_fn(3, 2, |i, j| Complex64::new((i + j) as f64, 0.5));
    let p = w.frobenius_norm().powi(2);
    let ok = Precoder::new(w.clone(), p).is_ok() && Precoder::new(w, 2.0 * p).is_err();
    check("precoder power bookkeeping", ok, String::new())
}

/// Runs every check. Errors inside a check are reported as failures.
pub fn run() -> Vec<Check> {
    let mut rng = ChaCha20Rng::seed_from_u64(2024);
    let mut out = vec![bessel_check(), precoder_power_check()];
    let fail = |name: &'static str, e: crate::Error| check(name, false, e.to_string());
    out.push(adpar_check(&mut rng).unwrap_or_else(|e| fail("ADPAR trace form vs quadrature", e)));
    match bounds_check() {
        Ok(c) => out.extend(c),
        Err(e) => out.push(fail("ADPAR bounds", e)),
    }
    out.push(
        power_allocation_check(&mut rng)
            .unwrap_or_else(|e| fail("power allocation vs grid search", e)),
    );
    out.push(dispatch_check().unwrap_or_else(|e| fail("four-case dispatch and rate ordering", e)));
    out.push(received_adpar_check().unwrap_or_else(|e| fail("trace-ratio ADPAR", e)));
    out
}
