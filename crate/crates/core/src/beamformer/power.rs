//! Power allocation over a fixed set of transmit directions.
//!
//! Maximizes `f(p) = log₂ det(I + N₀⁻¹ Σ pᵢ hᵢ hᵢᴴ)` over
//! `{p ≥ 0, Σ pᵢ = P, Σ pᵢ λ′ᵢ ≥ 0}` with away-step Frank-Wolfe. The feasible
//! set is a simplex cut by one halfspace, so its vertices are known in closed
//! form and the linear subproblem is a scan over them.
//!
//! The objective only depends on the Gram matrix `G = [hᵢᴴ hⱼ]`, so everything
//! here runs in `n = |p|` dimensions regardless of the receive array size.

use std::f64::consts::LN_2;

use crate::error::{Error, Result};
use crate::numerics::{Cholesky, Complex64, ComplexMat, ComplexVec};

/// Iteration cap for Frank-Wolfe.
pub const MAX_FW_ITERATIONS: usize = 10_000;

/// Relative duality-gap target: stop once `gap ≤ FW_GAP_TOL · f`.
pub const FW_GAP_TOL: f64 = 1e-8;

/// `{p ≥ 0, Σ pᵢ = total, Σ pᵢ λᵢ ≥ 0}` or the plain simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerPolytope {
    total: f64,
    halfspace: Option<Vec<f64>>,
    dim: usize,
}

impl PowerPolytope {
    pub fn simplex(dim: usize, total: f64) -> Self {
        Self {
            total,
            halfspace: None,
            dim,
        }
    }

    pub fn with_halfspace(lambdas: &[f64], total: f64) -> Self {
        Self {
            total,
            halfspace: Some(lambdas.to_vec()),
            dim: lambdas.len(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    /// Vertex list: simplex corners inside the halfspace, then the points
    /// where the halfspace boundary crosses simplex edges.
    pub fn vertices(&self) -> Vec<Vec<f64>> {
        let n = self.dim;
        let corner = |i: usize| {
            let mut v = vec![0.0; n];
            v[i] = self.total;
            v
        };
        let Some(lam) = &self.halfspace else {
            return (0..n).map(corner).collect();
        };
        let mut out: Vec<Vec<f64>> = (0..n).filter(|&i| lam[i] >= 0.0).map(corner).collect();
        for i in 0..n {
            for j in 0..n {
                if lam[i] > 0.0 && lam[j] < 0.0 {
                    let span = lam[i] - lam[j];
                    let mut v = vec![0.0; n];
                    v[i] = self.total * (-lam[j]) / span;
                    v[j] = self.total * lam[i] / span;
                    out.push(v);
                }
            }
        }
        out
    }

    pub fn contains(&self, p: &[f64], tol: f64) -> bool {
        let sum: f64 = p.iter().sum();
        let scale = self.total.abs().max(f64::MIN_POSITIVE);
        p.len() == self.dim
            && p.iter().all(|&x| x >= -tol * scale)
            && (sum - self.total).abs() <= tol * scale
            && self.halfspace.as_ref().is_none_or(|lam| {
                let lp: f64 = lam.iter().zip(p).map(|(l, x)| l * x).sum();
                let mag: f64 = lam.iter().zip(p).map(|(l, x)| (l * x).abs()).sum();
                lp >= -tol * mag.max(f64::MIN_POSITIVE)
            })
    }
}

/// `log₂ det(I + N₀⁻¹ S G S)` with `S = diag(√p)`, plus derivatives.
#[derive(Debug, Clone)]
pub struct LogDetObjective {
    gram: ComplexMat,
    n0: f64,
}

/// Value, gradient and Hessian of the objective at one point.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub value: f64,
    pub gradient: Vec<f64>,
    /// Row-major `n × n`.
    pub hessian: Vec<f64>,
}

impl LogDetObjective {
    pub fn from_gram(gram: ComplexMat, n0: f64) -> Self {
        Self { gram, n0 }
    }

    /// Builds the Gram matrix of the effective channel columns `hᵢ`.
    pub fn from_gains(gains: &[ComplexVec], n0: f64) -> Self {
        let cols = ComplexMat::from_columns(gains);
        Self::from_gram(cols.adjoint_mul(&cols).hermitian_part(), n0)
    }

    pub fn dim(&self) -> usize {
        self.gram.rows()
    }

    pub fn gram(&self) -> &ComplexMat {
        &self.gram
    }

    pub fn value(&self, p: &[f64]) -> Result<f64> {
        let (c, _) = self.factor(p)?;
        Ok(self.value_from(&c))
    }

    fn value_from(&self, c: &Cholesky) -> f64 {
        let n = self.dim() as f64;
        ((c.logdet() - n * self.n0.ln()) / LN_2).max(0.0)
    }

    fn factor(&self, p: &[f64]) -> Result<(Cholesky, Vec<f64>)> {
        let n = self.dim();
        let s: Vec<f64> = p.iter().map(|&x| x.max(0.0).sqrt()).collect();
        let c = ComplexMat::from_fn(n, n, |i, j| {
            let v = self.gram[(i, j)] * (s[i] * s[j]);
            if i == j {
                Complex64::new(v.re + self.n0, 0.0)
            } else {
                v
            }
        });
        Ok((Cholesky::new(&c)?, s))
    }

    /// With `C = N₀I + SGS` and `K = N₀⁻¹(G − G S C⁻¹ S G)` (the matrix
    /// `hᵢᴴ(N₀I + Σ pₖ hₖhₖᴴ)⁻¹hⱼ` via Woodbury), the gradient is
    /// `Kᵢᵢ/ln 2` and the Hessian `−|Kᵢⱼ|²/ln 2`.
    pub fn evaluate(&self, p: &[f64]) -> Result<Evaluation> {
        let n = self.dim();
        let (c, s) = self.factor(p)?;
        let sg = ComplexMat::from_fn(n, n, |i, j| self.gram[(i, j)] * s[i]);
        let y = c.solve_mat(&sg);
        // G S Y = (S G)ᴴ Y
        let gsy = sg.adjoint_mul(&y);
        let k = ComplexMat::from_fn(n, n, |i, j| (self.gram[(i, j)] - gsy[(i, j)]) / self.n0);
        let gradient = (0..n).map(|i| k[(i, i)].re / LN_2).collect();
        let mut hessian = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                hessian[i * n + j] = -k[(i, j)].norm_sqr() / LN_2;
            }
        }
        Ok(Evaluation {
            value: self.value_from(&c),
            gradient,
            hessian,
        })
    }

    /// Upper bound from Hadamard's inequality: `f(p) ≤ Σ log₂(1 + pᵢ Gᵢᵢ/N₀)`,
    /// maximized over the simplex by water-filling. Valid on any subset of it.
    pub fn hadamard_bound(&self, total: f64) -> f64 {
        let diag: Vec<f64> = (0..self.dim()).map(|i| self.gram[(i, i)].re).collect();
        hadamard_bound(&diag, self.n0, total)
    }
}

/// [`LogDetObjective::hadamard_bound`] from the Gram diagonal alone.
pub fn hadamard_bound(gram_diag: &[f64], n0: f64, total: f64) -> f64 {
    let mut gains: Vec<f64> = gram_diag
        .iter()
        .map(|&g| g / n0)
        .filter(|&g| g > 0.0)
        .collect();
    gains.sort_by(|a, b| b.total_cmp(a));
    // Largest active set whose water level clears every member's floor.
    let mut level = 0.0;
    let mut floors = 0.0;
    let mut active = 0;
    for (k, g) in gains.iter().enumerate() {
        let candidate = (total + floors + 1.0 / g) / (k + 1) as f64;
        if candidate <= 1.0 / g {
            break;
        }
        floors += 1.0 / g;
        level = candidate;
        active = k + 1;
    }
    gains[..active].iter().map(|g| (level * g).log2()).sum()
}

/// Result of one power allocation solve.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerAllocation {
    pub powers: Vec<f64>,
    pub rate: f64,
    pub duality_gap: f64,
    pub iterations: usize,
}

fn dotv(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Away-step Frank-Wolfe over the vertices of `polytope`.
pub fn maximize_over_polytope(
    objective: &LogDetObjective,
    polytope: &PowerPolytope,
) -> Result<PowerAllocation> {
    maximize_above(objective, polytope, f64::NEG_INFINITY).map(|a| a.expect("no cutoff"))
}

/// Like [`maximize_over_polytope`] but gives up with `None` as soon as the
/// duality bound `f(p) + gap` proves the optimum is below `cutoff`.
pub(crate) fn maximize_above(
    objective: &LogDetObjective,
    polytope: &PowerPolytope,
    cutoff: f64,
) -> Result<Option<PowerAllocation>> {
    let n = objective.dim();
    if polytope.dim() != n {
        return Err(Error::invalid(format!(
            "polytope has dimension {} but objective has {n}",
            polytope.dim()
        )));
    }
    let vertices = polytope.vertices();
    if vertices.is_empty() {
        return Err(Error::Infeasible(
            "power polytope is empty: every direction has negative ADPAR margin".into(),
        ));
    }

    // Start from the best vertex.
    let mut start = 0;
    let mut start_val = f64::NEG_INFINITY;
    for (k, v) in vertices.iter().enumerate() {
        let val = objective.value(v)?;
        if val > start_val {
            start_val = val;
            start = k;
        }
    }
    let mut weights = vec![0.0; vertices.len()];
    weights[start] = 1.0;

    let combine = |weights: &[f64]| -> Vec<f64> {
        let mut p = vec![0.0; n];
        for (w, v) in weights.iter().zip(&vertices) {
            if *w > 0.0 {
                for (pi, vi) in p.iter_mut().zip(v) {
                    *pi += w * vi;
                }
            }
        }
        p
    };

    let mut p = combine(&weights);
    let mut gap = f64::INFINITY;
    let mut iterations = 0;
    let mut eval = objective.evaluate(&p)?;
    while iterations < MAX_FW_ITERATIONS {
        let scores: Vec<f64> = vertices.iter().map(|v| dotv(&eval.gradient, v)).collect();
        let gp = dotv(&eval.gradient, &p);
        let fw = (0..scores.len())
            .max_by(|&a, &b| scores[a].total_cmp(&scores[b]).then(b.cmp(&a)))
            .expect("non-empty");
        gap = (scores[fw] - gp).max(0.0);
        if gap <= FW_GAP_TOL * eval.value.max(f64::MIN_POSITIVE) {
            break;
        }
        if eval.value + gap < cutoff {
            return Ok(None);
        }
        iterations += 1;
        let away = (0..scores.len())
            .filter(|&k| weights[k] > 0.0)
            .min_by(|&a, &b| scores[a].total_cmp(&scores[b]).then(a.cmp(&b)))
            .expect("active set is non-empty");
        let away_gap = gp - scores[away];

        let toward = gap >= away_gap;
        let (dir, t_max): (Vec<f64>, f64) = if toward {
            (
                vertices[fw].iter().zip(&p).map(|(v, x)| v - x).collect(),
                1.0,
            )
        } else {
            let a = weights[away];
            (
                p.iter().zip(&vertices[away]).map(|(x, v)| x - v).collect(),
                a / (1.0 - a),
            )
        };
        let t = line_search(objective, &p, &dir, t_max, &eval)?;
        if t <= 0.0 {
            // No progress possible along the chosen direction.
            break;
        }
        if toward {
            weights.iter_mut().for_each(|w| *w *= 1.0 - t);
            weights[fw] += t;
        } else {
            weights.iter_mut().for_each(|w| *w *= 1.0 + t);
            weights[away] -= t;
            if t >= t_max {
                weights[away] = 0.0;
            }
        }
        weights.iter_mut().for_each(|w| {
            if *w < 1e-15 {
                *w = 0.0
            }
        });
        let wsum: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= wsum);
        p = combine(&weights);
        eval = objective.evaluate(&p)?;
    }
    Ok(Some(PowerAllocation {
        rate: eval.value,
        powers: p,
        duality_gap: gap,
        iterations,
    }))
}

/// Maximizes the concave `φ(t) = f(p + t·d)` on `[0, t_max]` by safeguarded
/// Newton on `φ′`.
fn line_search(
    objective: &LogDetObjective,
    p: &[f64],
    dir: &[f64],
    t_max: f64,
    at_zero: &Evaluation,
) -> Result<f64> {
    let n = p.len();
    let slope = |e: &Evaluation| dotv(&e.gradient, dir);
    let curvature = |e: &Evaluation| -> f64 {
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                acc += dir[i] * e.hessian[i * n + j] * dir[j];
            }
        }
        acc
    };
    let point = |t: f64| -> Vec<f64> {
        p.iter()
            .zip(dir)
            .map(|(x, d)| (x + t * d).max(0.0))
            .collect()
    };

    let d0 = slope(at_zero);
    if d0 <= 0.0 {
        return Ok(0.0);
    }
    let at_max = objective.evaluate(&point(t_max))?;
    if slope(&at_max) >= 0.0 {
        return Ok(t_max);
    }
    let (mut lo, mut hi) = (0.0, t_max);
    let mut t = {
        let c = curvature(at_zero);
        if c < 0.0 {
            (-d0 / c).clamp(0.0, t_max)
        } else {
            0.5 * t_max
        }
    };
    for _ in 0..100 {
        if !(t > lo && t < hi) {
            t = 0.5 * (lo + hi);
        }
        let e = objective.evaluate(&point(t))?;
        let d = slope(&e);
        if d > 0.0 {
            lo = t;
        } else {
            hi = t;
        }
        if d.abs() <= 1e-15 * d0 || hi - lo <= 1e-15 * t_max {
            break;
        }
        let c = curvature(&e);
        t = if c < 0.0 { t - d / c } else { 0.5 * (lo + hi) };
    }
    Ok(t.clamp(0.0, t_max))
}

/// Power split across directions with effective channels `gains[i] = H′u′ᵢ`
/// and ADPAR margins `lambdas[i]`.
pub fn solve_power_allocation(
    gains: &[ComplexVec],
    lambdas: &[f64],
    p: f64,
    n0: f64,
) -> Result<Vec<f64>> {
    if gains.len() != lambdas.len() || gains.is_empty() {
        return Err(Error::invalid(
            "gains and lambdas must be non-empty and equally long",
        ));
    }
    if !(p > 0.0) || !(n0 > 0.0) {
        return Err(Error::invalid("power and noise must be positive"));
    }
    let objective = LogDetObjective::from_gains(gains, n0);
    let polytope = PowerPolytope::with_halfspace(lambdas, p);
    maximize_over_polytope(&objective, &polytope).map(|a| a.powers)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn vertices_of_cut_simplex() {
        let poly = PowerPolytope::with_halfspace(&[1.0, -1.0, 0.0], 2.0);
        let v = poly.vertices();
        assert_eq!(v.len(), 3);
        assert!(v.contains(&vec![2.0, 0.0, 0.0]));
        assert!(v.contains(&vec![0.0, 0.0, 2.0]));
        assert!(v.contains(&vec![1.0, 1.0, 0.0]));
        assert!(PowerPolytope::with_halfspace(&[-1.0, -2.0], 1.0)
            .vertices()
            .is_empty());
    }

    #[test]
    fn single_direction_takes_all_power() {
        let p =
            solve_power_allocation(&[vec![c(1.0, 0.5), c(0.2, 0.0)]], &[0.3], 2.0, 0.1).unwrap();
        assert_eq!(p, vec![2.0]);
    }

    #[test]
    fn empty_polytope_is_infeasible() {
        let g = vec![vec![c(1.0, 0.0)], vec![c(0.0, 1.0)]];
        let err = solve_power_allocation(&g, &[-1.0, -0.5], 1.0, 1.0).unwrap_err();
        assert!(matches!(err, Error::Infeasible(_)));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let gains = vec![
            vec![c(1.0, 0.2), c(-0.3, 0.7), c(0.1, 0.1)],
            vec![c(0.4, -0.1), c(0.9, 0.0), c(-0.2, 0.5)],
        ];
        let obj = LogDetObjective::from_gains(&gains, 0.3);
        let p = [0.6, 0.4];
        let e = obj.evaluate(&p).unwrap();
        let h = 1e-6;
        for i in 0..2 {
            let mut up = p;
            let mut dn = p;
            up[i] += h;
            dn[i] -= h;
            let fd = (obj.value(&up).unwrap() - obj.value(&dn).unwrap()) / (2.0 * h);
            assert!(
                (fd - e.gradient[i]).abs() < 1e-7,
                "{fd} vs {}",
                e.gradient[i]
            );
        }
        // Hessian diagonal by differencing the gradient.
        for i in 0..2 {
            let mut up = p;
            let mut dn = p;
            up[i] += h;
            dn[i] -= h;
            let fd = (obj.evaluate(&up).unwrap().gradient[i]
                - obj.evaluate(&dn).unwrap().gradient[i])
                / (2.0 * h);
            assert!((fd - e.hessian[i * 2 + i]).abs() < 1e-6);
        }
    }

    #[test]
    fn value_matches_direct_log_det() {
        let gains = vec![
            vec![c(1.0, 0.0), c(0.0, 1.0)],
            vec![c(0.5, 0.5), c(1.0, -1.0)],
        ];
        let obj = LogDetObjective::from_gains(&gains, 0.5);
        let p = [0.3, 0.7];
        let m = ComplexMat::from_fn(2, 2, |i, j| {
            let mut acc = if i == j { c(1.0, 0.0) } else { c(0.0, 0.0) };
            for (k, g) in gains.iter().enumerate() {
                acc += g[i] * g[j].conj() * (p[k] / 0.5);
            }
            acc
        });
        let direct = crate::numerics::logdet_pd(&m).unwrap() / LN_2;
        assert!((obj.value(&p).unwrap() - direct).abs() < 1e-13);
    }
}
