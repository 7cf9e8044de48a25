//! Factorizations of small dense complex matrices.
//!
//! Hermitian eigenproblems use cyclic two-sided Jacobi rotations; the SVD uses
//! one-sided (Hestenes) Jacobi on the columns. Both are slow for large `n` but
//! reach near machine precision on the ≤ 32×32 matrices this crate works with.

use num_complex::Complex64;

use super::matrix::{dot, norm, ComplexMat, ComplexVec};
use crate::error::{Error, Result};

/// Relative Hermitian defect accepted by the factorizations.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Maximum number of Jacobi sweeps before reporting a numerical failure.
pub const MAX_SWEEPS: usize = 10_000;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Eigen-decomposition of a Hermitian matrix, eigenvalues descending.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianEvd {
    pub eigenvalues: Vec<f64>,
    /// Column `i` pairs with `eigenvalues[i]`.
    pub eigenvectors: ComplexMat,
}

/// Full singular value decomposition `M = U diag(S) Vᴴ`.
///
/// `u` is `m×m`, `v` is `n×n` and `s` holds the `min(m, n)` singular values in
/// descending order.
#[derive(Debug, Clone, PartialEq)]
pub struct Svd {
    pub u: ComplexMat,
    pub s: Vec<f64>,
    pub v: ComplexMat,
}

/// Generalized eigen-decomposition of a Hermitian / positive-definite pair.
#[derive(Debug, Clone, PartialEq)]
pub struct GevdResult {
    /// Descending generalized eigenvalues.
    pub eigenvalues: Vec<f64>,
    /// `T` with `Tᴴ B T = I` and `Tᴴ A T = diag(eigenvalues)`.
    pub eigenvectors: ComplexMat,
}

impl GevdResult {
    pub fn lambda_max(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn lambda_min(&self) -> f64 {
        *self.eigenvalues.last().expect("non-empty")
    }

    pub fn t_max(&self) -> ComplexVec {
        self.eigenvectors.column(0)
    }

    pub fn t_min(&self) -> ComplexVec {
        self.eigenvectors.column(self.eigenvectors.cols() - 1)
    }
}

/// Cholesky factor `M = L Lᴴ` of a Hermitian positive-definite matrix.
#[derive(Debug, Clone)]
pub struct Cholesky {
    l: ComplexMat,
}

impl Cholesky {
    pub fn new(m: &ComplexMat) -> Result<Self> {
        check_hermitian(m, "cholesky")?;
        let n = m.rows();
        let mut l = ComplexMat::zeros(n, n);
        for j in 0..n {
            let mut d = m[(j, j)].re;
            for k in 0..j {
                d -= l[(j, k)].norm_sqr();
            }
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::invalid(format!(
                    "matrix is not positive definite (pivot {j} = {d:e})"
                )));
            }
            let djj = d.sqrt();
            l[(j, j)] = Complex64::new(djj, 0.0);
            for i in (j + 1)..n {
                let mut s = m[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)].conj();
                }
                l[(i, j)] = s / djj;
            }
        }
        Ok(Self { l })
    }

    pub fn l(&self) -> &ComplexMat {
        &self.l
    }

    pub fn into_l(self) -> ComplexMat {
        self.l
    }

    /// Natural log of the determinant.
    pub fn logdet(&self) -> f64 {
        2.0 * (0..self.l.rows())
            .map(|i| self.l[(i, i)].re.ln())
            .sum::<f64>()
    }

    /// Solves `L x = b`.
    pub fn solve_lower(&self, b: &[Complex64]) -> ComplexVec {
        let n = self.l.rows();
        assert_eq!(b.len(), n);
        let mut x = b.to_vec();
        for i in 0..n {
            let mut s = x[i];
            for k in 0..i {
                s -= self.l[(i, k)] * x[k];
            }
            x[i] = s / self.l[(i, i)].re;
        }
        x
    }

    /// Solves `Lᴴ x = b`.
    pub fn solve_upper(&self, b: &[Complex64]) -> ComplexVec {
        let n = self.l.rows();
        assert_eq!(b.len(), n);
        let mut x = b.to_vec();
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in (i + 1)..n {
                s -= self.l[(k, i)].conj() * x[k];
            }
            x[i] = s / self.l[(i, i)].re;
        }
        x
    }

    /// Solves `M x = b`.
    pub fn solve(&self, b: &[Complex64]) -> ComplexVec {
        self.solve_upper(&self.solve_lower(b))
    }

    fn map_columns(
        &self,
        b: &ComplexMat,
        f: impl Fn(&Self, &[Complex64]) -> ComplexVec,
    ) -> ComplexMat {
        let cols: Vec<ComplexVec> = (0..b.cols()).map(|j| f(self, &b.column(j))).collect();
        ComplexMat::from_columns(&cols)
    }

    pub fn solve_mat(&self, b: &ComplexMat) -> ComplexMat {
        self.map_columns(b, Self::solve)
    }

    pub fn solve_lower_mat(&self, b: &ComplexMat) -> ComplexMat {
        self.map_columns(b, Self::solve_lower)
    }

    pub fn solve_upper_mat(&self, b: &ComplexMat) -> ComplexMat {
        self.map_columns(b, Self::solve_upper)
    }
}

/// Lower-triangular Cholesky factor of a Hermitian positive-definite matrix.
pub fn cholesky(m: &ComplexMat) -> Result<ComplexMat> {
    Cholesky::new(m).map(Cholesky::into_l)
}

/// Natural-log determinant of a Hermitian positive-definite matrix.
pub fn logdet_pd(m: &ComplexMat) -> Result<f64> {
    Cholesky::new(m).map(|c| c.logdet())
}

fn check_hermitian(m: &ComplexMat, what: &str) -> Result<()> {
    match m.hermitian_defect() {
        None => Err(Error::invalid(format!(
            "{what}: matrix must be square, got {}x{}",
            m.rows(),
            m.cols()
        ))),
        Some(d) if d > HERMITIAN_TOL => Err(Error::invalid(format!(
            "{what}: matrix is not Hermitian (relative defect {d:e})"
        ))),
        Some(_) => Ok(()),
    }
}

/// Rotation `(c, s·e^{jφ})` that zeroes the off-diagonal of the Hermitian
/// 2×2 block `[[a, b], [b*, d]]` when applied as `Gᴴ·X·G` with
/// `G = [[c, s e^{jφ}], [−s e^{−jφ}, c]]`.
#[inline]
fn jacobi_rotation(a: f64, d: f64, b: Complex64) -> (f64, Complex64) {
    let babs = b.norm();
    let phase = b / babs;
    let tau = (d - a) / (2.0 * babs);
    let t = if tau >= 0.0 {
        1.0 / (tau + (1.0 + tau * tau).sqrt())
    } else {
        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    (c, phase * (t * c))
}

/// Applies `X ← X·G` to columns `p`, `q` of a row-major buffer.
#[inline]
fn rotate_columns(x: &mut ComplexMat, p: usize, q: usize, c: f64, s: Complex64) {
    for i in 0..x.rows() {
        let xp = x[(i, p)];
        let xq = x[(i, q)];
        x[(i, p)] = xp * c - xq * s.conj();
        x[(i, q)] = xp * s + xq * c;
    }
}

/// Applies `X ← Gᴴ·X` to rows `p`, `q`.
#[inline]
fn rotate_rows(x: &mut ComplexMat, p: usize, q: usize, c: f64, s: Complex64) {
    for j in 0..x.cols() {
        let xp = x[(p, j)];
        let xq = x[(q, j)];
        x[(p, j)] = xp * c - xq * s;
        x[(q, j)] = xp * s.conj() + xq * c;
    }
}

/// Eigen-decomposition of a Hermitian matrix (descending eigenvalues).
pub fn hermitian_evd(m: &ComplexMat) -> Result<HermitianEvd> {
    check_hermitian(m, "hermitian_evd")?;
    let n = m.rows();
    let mut a = m.hermitian_part();
    let mut v = ComplexMat::identity(n);
    let scale = a.frobenius_norm();
    let off_tol = f64::EPSILON * scale;

    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= off_tol {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let b = a[(p, q)];
                if b.norm() <= f64::MIN_POSITIVE {
                    continue;
                }
                let (c, s) = jacobi_rotation(a[(p, p)].re, a[(q, q)].re, b);
                rotate_columns(&mut a, p, q, c, s);
                rotate_rows(&mut a, p, q, c, s);
                a[(p, q)] = ZERO;
                a[(q, p)] = ZERO;
                a[(p, p)].im = 0.0;
                a[(q, q)].im = 0.0;
                rotate_columns(&mut v, p, q, c, s);
            }
        }
    }
    if !converged {
        return Err(Error::NumericalFailure(format!(
            "Hermitian Jacobi eigensolver did not converge in {MAX_SWEEPS} sweeps"
        )));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].re.total_cmp(&a[(i, i)].re).then(i.cmp(&j)));
    let eigenvalues = order.iter().map(|&i| a[(i, i)].re).collect();
    let eigenvectors = v.select_columns(&order);
    Ok(HermitianEvd {
        eigenvalues,
        eigenvectors,
    })
}

/// Full SVD by one-sided Jacobi rotations on the columns of `m`.
pub fn svd(m: &ComplexMat) -> Result<Svd> {
    let (rows, cols) = m.shape();
    let mut w = m.clone();
    let mut v = ComplexMat::identity(cols);
    let total: f64 = m.frobenius_norm().powi(2);
    let tol = 4.0 * f64::EPSILON;
    // Columns below this squared norm are numerically zero and never rotated.
    let negligible = (f64::EPSILON * rows.max(cols) as f64).powi(2) * total;

    let col_dot = |w: &ComplexMat, p: usize, q: usize| -> Complex64 {
        (0..rows).map(|i| w[(i, p)].conj() * w[(i, q)]).sum()
    };
    let col_norm2 =
        |w: &ComplexMat, p: usize| -> f64 { (0..rows).map(|i| w[(i, p)].norm_sqr()).sum() };

    let mut converged = cols == 1;
    for _ in 0..MAX_SWEEPS {
        if converged {
            break;
        }
        let mut rotated = false;
        for p in 0..cols {
            for q in (p + 1)..cols {
                let alpha = col_norm2(&w, p);
                let beta = col_norm2(&w, q);
                let gamma = col_dot(&w, p, q);
                let scale = (alpha * beta).sqrt();
                if alpha <= negligible || beta <= negligible || gamma.norm() <= tol * scale {
                    continue;
                }
                rotated = true;
                let (c, s) = jacobi_rotation(alpha, beta, gamma);
                rotate_columns(&mut w, p, q, c, s);
                rotate_columns(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            converged = true;
        }
    }
    if !converged {
        return Err(Error::NumericalFailure(format!(
            "one-sided Jacobi SVD did not converge in {MAX_SWEEPS} sweeps"
        )));
    }

    let norms: Vec<f64> = (0..cols).map(|j| col_norm2(&w, j).sqrt()).collect();
    let mut order: Vec<usize> = (0..cols).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]).then(i.cmp(&j)));
    let k = rows.min(cols);
    let s: Vec<f64> = order[..k].iter().map(|&j| norms[j]).collect();
    let v = v.select_columns(&order);

    let smax = s.first().copied().unwrap_or(0.0);
    let cutoff = smax * (rows.max(cols) as f64) * f64::EPSILON;
    let mut basis: Vec<ComplexVec> = Vec::with_capacity(rows);
    for (idx, &j) in order[..k].iter().enumerate() {
        if s[idx] > cutoff && s[idx] > 0.0 {
            let col: ComplexVec = (0..rows).map(|i| w[(i, j)] / s[idx]).collect();
            basis.push(col);
        } else {
            break;
        }
    }
    complete_orthonormal_basis(&mut basis, rows);
    let u = ComplexMat::from_columns(&basis);
    Ok(Svd { u, s, v })
}

/// Extends orthonormal `basis` (vectors of length `dim`) to a full basis with
/// twice-orthogonalized standard basis vectors.
fn complete_orthonormal_basis(basis: &mut Vec<ComplexVec>, dim: usize) {
    let mut e = 0;
    while basis.len() < dim && e < dim {
        let mut cand = vec![ZERO; dim];
        cand[e] = Complex64::new(1.0, 0.0);
        for _ in 0..2 {
            for b in basis.iter() {
                let proj = dot(b, &cand);
                for (c, bi) in cand.iter_mut().zip(b) {
                    *c -= proj * bi;
                }
            }
        }
        let nrm = norm(&cand);
        if nrm > 0.5 {
            basis.push(cand.into_iter().map(|z| z / nrm).collect());
        }
        e += 1;
    }
    // A standard basis vector always survives with norm ≥ 1/√dim; fall back to
    // the largest residual if the 0.5 threshold rejected too many.
    while basis.len() < dim {
        let mut best: Option<(f64, ComplexVec)> = None;
        for e in 0..dim {
            let mut cand = vec![ZERO; dim];
            cand[e] = Complex64::new(1.0, 0.0);
            for _ in 0..2 {
                for b in basis.iter() {
                    let proj = dot(b, &cand);
                    for (c, bi) in cand.iter_mut().zip(b) {
                        *c -= proj * bi;
                    }
                }
            }
            let nrm = norm(&cand);
            if best.as_ref().is_none_or(|(bn, _)| nrm > *bn) {
                best = Some((nrm, cand));
            }
        }
        let (nrm, cand) = best.expect("dim > 0");
        basis.push(cand.into_iter().map(|z| z / nrm).collect());
    }
}

/// Generalized eigen-decomposition of the pair `{A, B}` with `A` Hermitian and
/// `B` Hermitian positive definite.
///
/// Reduces to a standard problem through `B = L Lᴴ`: the eigenvectors `Y` of
/// `L⁻¹ A L⁻ᴴ` map back as `T = L⁻ᴴ Y`.
pub fn gevd(a: &ComplexMat, b: &ComplexMat) -> Result<GevdResult> {
    check_hermitian(a, "gevd (A)")?;
    if a.shape() != b.shape() {
        return Err(Error::invalid(format!(
            "gevd: A is {}x{} but B is {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    let chol = Cholesky::new(b)?;
    // C = L⁻¹ A L⁻ᴴ = L⁻¹ (L⁻¹ Aᴴ)ᴴ; A is Hermitian so Aᴴ = A.
    let x = chol.solve_lower_mat(a);
    let c = chol.solve_lower_mat(&x.adjoint()).hermitian_part();
    let evd = hermitian_evd(&c)?;
    let t = chol.solve_upper_mat(&evd.eigenvectors);
    Ok(GevdResult {
        eigenvalues: evd.eigenvalues,
        eigenvectors: t,
    })
}
