//! Complex dense linear algebra primitives: Khatri-Rao and Kronecker products,
//! rank-1 truncated SVD, least-squares solves, and Frobenius norms.
//!
//! All routines operate on [`ComplexMatrix`] values and are pure functions of
//! their inputs.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Dense complex matrix in double precision; the universal carrier for
/// channels, training matrices, and tensor unfoldings.
pub type ComplexMatrix = DMatrix<Complex64>;

/// Dense complex column vector.
pub type ComplexVector = DVector<Complex64>;

/// Column-wise Kronecker (Khatri-Rao) product of two matrices with equal
/// column counts. For `A` of size `K x N` and `B` of size `L x N` the result
/// is `KL x N` with column `n` equal to `a_n (x) b_n`.
pub fn khatri_rao(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    if a.ncols() != b.ncols() {
        return Err(Error::InvalidArgument(format!(
            "khatri_rao: column counts differ ({} vs {})",
            a.ncols(),
            b.ncols()
        )));
    }
    let (ra, rb, n) = (a.nrows(), b.nrows(), a.ncols());
    let mut out = ComplexMatrix::zeros(ra * rb, n);
    for c in 0..n {
        for i in 0..ra {
            let aic = a[(i, c)];
            for j in 0..rb {
                out[(i * rb + j, c)] = aic * b[(j, c)];
            }
        }
    }
    Ok(out)
}

/// Kronecker product: block `(i, j)` of the result equals `a[(i, j)] * B`.
pub fn kronecker(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

/// Identity matrix of the given size.
pub fn identity(n: usize) -> ComplexMatrix {
    ComplexMatrix::identity(n, n)
}

/// Dominant singular triplet of a matrix.
#[derive(Debug, Clone)]
pub struct Rank1Svd {
    /// Unit-norm left singular vector.
    pub u: ComplexVector,
    /// Largest singular value.
    pub sigma: f64,
    /// Unit-norm right singular vector (`W v = sigma u`).
    pub v: ComplexVector,
}

impl Rank1Svd {
    /// The rank-1 matrix `u * sigma * v^H`, the Frobenius-best rank-1
    /// approximation of the decomposed matrix.
    pub fn reconstruct(&self) -> ComplexMatrix {
        let scaled = &self.u * Complex64::new(self.sigma, 0.0);
        &scaled * self.v.adjoint()
    }
}

/// Dominant singular triplet `(u, sigma, v)` of `w`, computed from a full SVD.
///
/// Errors on an all-zero input, which has no dominant direction.
pub fn rank1_truncated_svd(w: &ComplexMatrix) -> Result<Rank1Svd> {
    if w.iter().all(|z| z.norm_sqr() == 0.0) {
        return Err(Error::DegenerateInput(
            "rank1_truncated_svd: all-zero matrix has no dominant singular direction".into(),
        ));
    }
    let svd = w
        .clone()
        .try_svd(true, true, f64::EPSILON, 0)
        .ok_or_else(|| Error::Numerical("rank1_truncated_svd: SVD did not converge".into()))?;
    let (idx, &sigma) = svd
        .singular_values
        .iter()
        .enumerate()
        .max_by(|(_, a), (_, b)| a.total_cmp(b))
        .expect("non-empty singular value vector");
    let u = svd
        .u
        .as_ref()
        .expect("left singular vectors requested")
        .column(idx)
        .into_owned();
    let v = svd
        .v_t
        .as_ref()
        .expect("right singular vectors requested")
        .row(idx)
        .adjoint();
    Ok(Rank1Svd { u, sigma, v })
}

/// Least-squares solve: the `X` minimizing `||A X - B||_F`, i.e. the
/// pseudo-inverse applied to `B`.
///
/// Requires `A` tall (or square) with full column rank. Rank deficiency is
/// declared when the smallest singular value drops below
/// `eps * max(P, N) * sigma_max`.
pub fn ls_solve(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    ls_solve_ctx(a, b, "ls_solve")
}

/// Same as [`ls_solve`] but labels rank-deficiency errors with the caller's
/// context (which update step of an iterative algorithm failed).
pub fn ls_solve_ctx(a: &ComplexMatrix, b: &ComplexMatrix, context: &str) -> Result<ComplexMatrix> {
    let (p, n) = (a.nrows(), a.ncols());
    if b.nrows() != p {
        return Err(Error::InvalidArgument(format!(
            "{context}: row counts differ (A has {p}, B has {})",
            b.nrows()
        )));
    }
    if p < n {
        return Err(Error::InvalidArgument(format!(
            "{context}: system is underdetermined ({p} rows < {n} columns)"
        )));
    }
    let svd = a
        .clone()
        .try_svd(true, true, f64::EPSILON, 0)
        .ok_or_else(|| Error::Numerical(format!("{context}: SVD did not converge")))?;
    let sigma_max = svd.singular_values.max();
    let sigma_min = svd.singular_values.min();
    let threshold = f64::EPSILON * (p.max(n) as f64) * sigma_max;
    if sigma_max == 0.0 || sigma_min < threshold {
        return Err(Error::RankDeficient {
            context: context.to_string(),
            smallest: sigma_min,
            threshold,
        });
    }
    svd.solve(b, 0.0)
        .map_err(|e| Error::Numerical(format!("{context}: {e}")))
}

/// Squared Frobenius norm: the sum of squared entry magnitudes.
pub fn frobenius_norm_sq(m: &ComplexMatrix) -> f64 {
    m.norm_squared()
}
