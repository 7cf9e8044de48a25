//! Index-subset search over the eigenvectors of `Â′ − γJ′`.
//!
//! Restricting `W′W′ᴴ` to commute with `Â′ − γJ′` turns the rank and ADPAR
//! constraints into a choice of `N_S` eigenvectors plus a power split over
//! them. The search is exhaustive up to [`EXHAUSTIVE_LIMIT`] subsets and
//! greedy beyond that.
//!
//! The exhaustive search is exact but prunes with two upper bounds on a
//! subset's rate: a Hadamard bound that needs only the channel gains, and a
//! first-order bound from concavity at one feasible point.

use crate::error::{Error, Result};
use crate::metrics::ProjectedForms;
use crate::numerics::{hermitian_evd, ComplexMat};

use super::power::{hadamard_bound, maximize_above, LogDetObjective, PowerPolytope};

/// Subset count up to which every subset is examined.
pub const EXHAUSTIVE_LIMIT: u128 = 100_000;

/// Output of [`sdr_solve`].
#[derive(Debug, Clone, PartialEq)]
pub struct SdrOutcome {
    pub w_prime: ComplexMat,
    pub rate: f64,
    /// Chosen eigenvector indices (0-based, ascending).
    pub indices: Vec<usize>,
    pub powers: Vec<f64>,
    /// Eigenvalues of `Â′ − γJ′`, descending.
    pub lambdas: Vec<f64>,
    pub exhaustive: bool,
}

pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// All `k`-subsets of `0..n` in lexicographic order.
pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        let Some(i) = (0..k).rev().find(|&i| idx[i] != i + n - k) else {
            return out;
        };
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

struct SubsetSolver<'a> {
    gram: &'a ComplexMat,
    lambdas: &'a [f64],
    p: f64,
    n0: f64,
}

impl SubsetSolver<'_> {
    fn objective(&self, subset: &[usize]) -> LogDetObjective {
        let g = ComplexMat::from_fn(subset.len(), subset.len(), |i, j| {
            self.gram[(subset[i], subset[j])]
        });
        LogDetObjective::from_gram(g, self.n0)
    }

    fn polytope(&self, subset: &[usize]) -> PowerPolytope {
        let lam: Vec<f64> = subset.iter().map(|&i| self.lambdas[i]).collect();
        PowerPolytope::with_halfspace(&lam, self.p)
    }

    fn hadamard(&self, subset: &[usize]) -> f64 {
        let diag: Vec<f64> = subset.iter().map(|&i| self.gram[(i, i)].re).collect();
        hadamard_bound(&diag, self.n0, self.p)
    }

    fn feasible(&self, subset: &[usize]) -> bool {
        subset.iter().any(|&i| self.lambdas[i] >= 0.0)
    }

    /// `None` when the subset's polytope is empty or its optimum provably
    /// lies below `cutoff`.
    fn solve(&self, subset: &[usize], cutoff: f64) -> Result<Option<(f64, Vec<f64>)>> {
        if !self.feasible(subset) {
            return Ok(None);
        }
        let a = maximize_above(&self.objective(subset), &self.polytope(subset), cutoff)?;
        Ok(a.map(|a| (a.rate, a.powers)))
    }

    /// Concavity bound `f(p̂) + max_v ∇f(p̂)·(v − p̂)` at the vertex centroid.
    fn linear_bound(&self, subset: &[usize]) -> Result<f64> {
        let obj = self.objective(subset);
        let vertices = self.polytope(subset).vertices();
        let n = subset.len();
        let mut centroid = vec![0.0; n];
        for v in &vertices {
            for (c, x) in centroid.iter_mut().zip(v) {
                *c += x / vertices.len() as f64;
            }
        }
        let e = obj.evaluate(&centroid)?;
        let dot = |v: &[f64]| -> f64 { e.gradient.iter().zip(v).map(|(g, x)| g * x).sum() };
        let best = vertices
            .iter()
            .map(|v| dot(v))
            .fold(f64::NEG_INFINITY, f64::max);
        Ok(e.value + (best - dot(&centroid)).max(0.0))
    }
}

/// Searches eigenvector subsets of `Â′ − γJ′` for the highest-rate precoder
/// with trace-ratio ADPAR at least `gamma`.
pub fn sdr_solve(
    forms: &ProjectedForms,
    gamma: f64,
    p: f64,
    n0: f64,
    n_s: usize,
) -> Result<SdrOutcome> {
    let dim = forms.a_hat_prime.rows();
    if n_s == 0 || n_s > dim {
        return Err(Error::invalid(format!(
            "n_s must lie in 1..={dim}, got {n_s}"
        )));
    }
    let diff = &forms.a_hat_prime - &forms.j_prime.scale(gamma);
    let evd = hermitian_evd(&diff.hermitian_part())?;
    let lambdas = evd.eigenvalues;
    let u = evd.eigenvectors;
    let hu = &forms.h_prime * &u;
    let gram = hu.adjoint_mul(&hu).hermitian_part();
    let solver = SubsetSolver {
        gram: &gram,
        lambdas: &lambdas,
        p,
        n0,
    };

    let exhaustive = binomial(dim, n_s) <= EXHAUSTIVE_LIMIT;
    let best = if exhaustive {
        exhaustive_search(&solver, dim, n_s)?
    } else {
        greedy_search(&solver, dim, n_s)?
    };
    let Some((rate, indices, powers)) = best else {
        return Err(Error::NumericalFailure(format!(
            "no index subset satisfies the ADPAR constraint at gamma = {gamma}"
        )));
    };

    let mut w_prime = u.select_columns(&indices);
    for (k, pk) in powers.iter().enumerate() {
        let amp = pk.max(0.0).sqrt();
        for i in 0..w_prime.rows() {
            w_prime[(i, k)] *= amp;
        }
    }
    Ok(SdrOutcome {
        w_prime,
        rate,
        indices,
        powers,
        lambdas,
        exhaustive,
    })
}

type Best = Option<(f64, Vec<usize>, Vec<f64>)>;

fn exhaustive_search(solver: &SubsetSolver, dim: usize, n_s: usize) -> Result<Best> {
    let subsets = combinations(dim, n_s);
    let mut ranked: Vec<(f64, usize)> = subsets
        .iter()
        .enumerate()
        .filter(|(_, s)| solver.feasible(s))
        .map(|(rank, s)| (solver.hadamard(s), rank))
        .collect();
    ranked.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));

    let mut best: Option<(f64, usize, Vec<f64>)> = None;
    for &(bound, rank) in &ranked {
        if let Some((value, _, _)) = &best {
            if bound < *value {
                break;
            }
            if solver.linear_bound(&subsets[rank])? < *value {
                continue;
            }
        }
        let cutoff = best.as_ref().map_or(f64::NEG_INFINITY, |b| b.0);
        if let Some((rate, powers)) = solver.solve(&subsets[rank], cutoff)? {
            let better = match &best {
                None => true,
                Some((value, best_rank, _)) => {
                    rate > *value || (rate == *value && rank < *best_rank)
                }
            };
            if better {
                best = Some((rate, rank, powers));
            }
        }
    }
    Ok(best.map(|(rate, rank, powers)| (rate, subsets[rank].clone(), powers)))
}

fn greedy_search(solver: &SubsetSolver, dim: usize, n_s: usize) -> Result<Best> {
    let mut chosen: Vec<usize> = Vec::with_capacity(n_s);
    let mut best: Best = None;
    for _ in 0..n_s {
        let mut step: Option<(f64, usize, Vec<f64>)> = None;
        // Eigenvalues are descending, so index order already breaks ties by
        // larger λ′ first and lower index second.
        for cand in (0..dim).filter(|i| !chosen.contains(i)) {
            let mut trial = chosen.clone();
            trial.push(cand);
            trial.sort_unstable();
            let rate = solver.solve(&trial, f64::NEG_INFINITY)?;
            let score = rate.as_ref().map_or(f64::NEG_INFINITY, |r| r.0);
            if step.as_ref().is_none_or(|s| score > s.0) {
                step = Some((score, cand, rate.map(|r| r.1).unwrap_or_default()));
            }
        }
        let (score, cand, powers) = step.expect("dim > chosen");
        chosen.push(cand);
        chosen.sort_unstable();
        best = score.is_finite().then(|| (score, chosen.clone(), powers));
    }
    Ok(best)
}
