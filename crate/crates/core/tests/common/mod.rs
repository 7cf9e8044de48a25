#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use srbf_core::numerics::{Complex64, ComplexMat};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> ComplexMat {
    ComplexMat::from_fn(rows, cols, |_, _| {
        Complex64::new(
            rng.random::<f64>() * 2.0 - 1.0,
            rng.random::<f64>() * 2.0 - 1.0,
        )
    })
}

pub fn random_hermitian(rng: &mut ChaCha8Rng, n: usize) -> ComplexMat {
    random_matrix(rng, n, n).hermitian_part()
}

/// `X Xᴴ + shift·I`.
pub fn random_pd(rng: &mut ChaCha8Rng, n: usize, shift: f64) -> ComplexMat {
    let x = random_matrix(rng, n, n);
    (&x * &x.adjoint()).hermitian_part().add_diagonal(shift)
}

pub fn to_na(m: &ComplexMat) -> DMatrix<Complex64> {
    DMatrix::from_fn(m.rows(), m.cols(), |i, j| m[(i, j)])
}

pub fn from_na(m: &DMatrix<Complex64>) -> ComplexMat {
    ComplexMat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

/// Eigenvalues of a Hermitian matrix from nalgebra, descending.
pub fn na_eigenvalues(m: &ComplexMat) -> Vec<f64> {
    let mut ev: Vec<f64> = to_na(m).symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    ev
}

/// Composite Simpson rule.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    let mut acc = f(a) + f(b);
    for i in 1..panels {
        acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f(a + h * i as f64);
    }
    acc * h / 3.0
}

/// Best rate over `samples` random rank-≤`n_s` precoders pushed into the
/// ADPAR constraint set: each Gaussian draw is mixed with the `t_max`
/// direction just far enough to reach `gamma`, then rescaled to power `p`.
#[allow(clippy::too_many_arguments)]
pub fn random_search_rate(
    forms: &srbf_core::metrics::ProjectedForms,
    t_max: &[Complex64],
    gamma: f64,
    p: f64,
    n0: f64,
    n_s: usize,
    samples: usize,
    rng: &mut ChaCha8Rng,
) -> f64 {
    use srbf_core::metrics::{achievable_rate, Precoder};
    let dim = forms.h_prime.cols();
    let anchor = ComplexMat::from_fn(dim, n_s, |i, j| {
        if j == 0 {
            t_max[i]
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let anchor = anchor.scale(1.0 / anchor.frobenius_norm());
    let mut best = f64::NEG_INFINITY;
    for _ in 0..samples {
        let g = random_matrix(rng, dim, n_s);
        let g = g.scale(1.0 / g.frobenius_norm());
        let mix = |s: f64| &g + &anchor.scale(s);
        let w = if forms.trace_ratio(&g) >= gamma {
            g
        } else {
            let mut hi = 1.0;
            while forms.trace_ratio(&mix(hi)) < gamma {
                hi *= 2.0;
                if hi > 1e12 {
                    break;
                }
            }
            let mut lo = 0.0;
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if forms.trace_ratio(&mix(mid)) >= gamma {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            mix(hi)
        };
        if forms.trace_ratio(&w) < gamma - 1e-9 {
            continue;
        }
        let w = w.scale(p.sqrt() / w.frobenius_norm());
        let rate = achievable_rate(&forms.h_prime, &Precoder::from_matrix(w), n0)
            .expect("valid dimensions");
        best = best.max(rate);
    }
    best
}
