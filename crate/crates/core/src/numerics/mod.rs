//! Dense complex linear algebra and the special functions the models need.

mod bessel;
mod decomp;
mod matrix;

pub use bessel::bessel_j0;
pub use decomp::{
    cholesky, gevd, hermitian_evd, logdet_pd, svd, Cholesky, GevdResult, HermitianEvd, Svd,
    HERMITIAN_TOL, MAX_SWEEPS,
};
pub use matrix::{dot, norm, ComplexMat, ComplexVec};
pub use num_complex::Complex64;
