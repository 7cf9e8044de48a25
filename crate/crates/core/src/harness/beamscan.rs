use std::f64::consts::PI;

use crate::channel::ArrayGeometry;
use crate::metrics::{angle_grid, SpatialCovariance, DEFAULT_GRID_POINTS};

/// Refinement stops once the bracket is narrower than this (radians).
pub const REFINE_TOL: f64 = 1e-4;

const TIE_REL: f64 = 1e-12;

/// Direction estimate of a beamscan receiver that knows `R` exactly.
pub fn beamscan_estimate(r: &SpatialCovariance, rx: &ArrayGeometry) -> f64 {
    beamscan_estimate_on_grid(r, rx, DEFAULT_GRID_POINTS)
}

/// Grid argmax of `a(θ)ᴴ R a(θ)` followed by a golden-section search over
/// the two cells around it. Flat or tied patterns resolve to the lowest
/// maximizing grid angle.
pub fn beamscan_estimate_on_grid(
    r: &SpatialCovariance,
    rx: &ArrayGeometry,
    grid_points: usize,
) -> f64 {
    let grid = angle_grid(grid_points.max(2));
    let power = |t: f64| r.power_toward(rx, t);
    let mut best_i = 0;
    let mut best = power(grid[0]);
    for (i, &t) in grid.iter().enumerate().skip(1) {
        let p = power(t);
        if p > best * (1.0 + TIE_REL) {
            best = p;
            best_i = i;
        }
    }
    let lo = grid[best_i.saturating_sub(1)];
    let hi = grid[(best_i + 1).min(grid.len() - 1)];
    let (t, p) = golden_section_max(power, lo, hi, REFINE_TOL);
    if p > best * (1.0 + TIE_REL) {
        t.clamp(0.0, PI)
    } else {
        grid[best_i]
    }
}

fn golden_section_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while b - a > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let t = 0.5 * (a + b);
    (t, f(t))
}
