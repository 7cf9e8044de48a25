use crate::error::Result;
use crate::numerics::{svd, ComplexMat};

/// Water-filling over parallel channels with inverse gains `N₀/σ_k²`
/// (`f64::INFINITY` for a dead mode). Returns powers summing to `total`.
///
/// The water level is bracketed by bisection until the allocated power is
/// within `1e-12·total`, then recomputed exactly on the resulting active set.
pub fn water_filling_powers(inverse_gains: &[f64], total: f64) -> Vec<f64> {
    let n = inverse_gains.len();
    if n == 0 || !(total > 0.0) {
        return vec![0.0; n];
    }
    let alloc =
        |mu: f64| -> Vec<f64> { inverse_gains.iter().map(|&g| (mu - g).max(0.0)).collect() };
    let finite_max = inverse_gains
        .iter()
        .copied()
        .filter(|g| g.is_finite())
        .fold(f64::NEG_INFINITY, f64::max);
    if finite_max == f64::NEG_INFINITY {
        return vec![0.0; n];
    }
    let mut lo = 0.0;
    let mut hi = total + finite_max;
    for _ in 0..400 {
        let mu = 0.5 * (lo + hi);
        let s: f64 = alloc(mu).iter().sum();
        if (s - total).abs() <= 1e-12 * total {
            lo = mu;
            hi = mu;
            break;
        }
        if s > total {
            hi = mu;
        } else {
            lo = mu;
        }
    }
    let mu = 0.5 * (lo + hi);
    let active: Vec<usize> = (0..n).filter(|&k| mu > inverse_gains[k]).collect();
    let exact_mu =
        (total + active.iter().map(|&k| inverse_gains[k]).sum::<f64>()) / active.len() as f64;
    let mut p = alloc(exact_mu);
    let s: f64 = p.iter().sum();
    if s > 0.0 {
        p.iter_mut().for_each(|x| *x *= total / s);
    }
    p
}

/// Unconstrained rate-maximizing precoder on `h`: the top `n_s` right
/// singular vectors weighted by water-filled amplitudes.
pub fn water_filling(h: &ComplexMat, p: f64, n0: f64, n_s: usize) -> Result<ComplexMat> {
    let d = svd(h)?;
    let inverse_gains: Vec<f64> = (0..n_s)
        .map(|k| {
            let s = d.s.get(k).copied().unwrap_or(0.0);
            if s > 0.0 {
                n0 / (s * s)
            } else {
                f64::INFINITY
            }
        })
        .collect();
    let powers = water_filling_powers(&inverse_gains, p);
    let mut w = d.v.column_range(0, n_s);
    for (k, pk) in powers.iter().enumerate() {
        let amp = pk.sqrt();
        for i in 0..w.rows() {
            w[(i, k)] *= amp;
        }
    }
    Ok(w)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dominant_mode_takes_everything() {
        let p = water_filling_powers(&[0.01, 10.0, 50.0], 1.0);
        assert_eq!(p[1], 0.0);
        assert_eq!(p[2], 0.0);
        assert!((p[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn equal_modes_split_evenly() {
        let p = water_filling_powers(&[0.3; 4], 2.0);
        assert!(p.iter().all(|&x| (x - 0.5).abs() < 1e-14));
    }

    #[test]
    fn dead_modes_get_nothing() {
        let p = water_filling_powers(&[0.1, f64::INFINITY], 1.0);
        assert_eq!(p, vec![1.0, 0.0]);
        assert_eq!(
            water_filling_powers(&[f64::INFINITY; 2], 1.0),
            vec![0.0, 0.0]
        );
    }

    #[test]
    fn partial_activation_matches_level() {
        // Level μ with two active modes: μ − 0.2 + μ − 0.5 = 1 ⇒ μ = 0.85 < 2.
        let p = water_filling_powers(&[0.2, 0.5, 2.0], 1.0);
        assert!((p[0] - 0.65).abs() < 1e-14 && (p[1] - 0.35).abs() < 1e-14 && p[2] == 0.0);
    }
}
