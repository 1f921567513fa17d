//! Channel estimators and their shared plumbing.
//!
//! Two estimators recover the transmitter-surface channel `H` and the
//! surface-receiver channel `G` from the received tensor:
//!
//! * [`lskrf`]: closed-form least-squares Khatri-Rao factorization of the
//!   bilinearly filtered mode-3 unfolding, one rank-1 approximation per
//!   surface element;
//! * [`bals`]: bilinear alternating least squares on the mode-1/mode-2
//!   unfoldings, usable with fewer training blocks.
//!
//! Both leave one complex scale per surface element undetermined; the scales
//! cancel in the cascaded channel `G H^T` and can be aligned against a known
//! reference with [`resolve_scaling`].

mod bals;
mod lskrf;

pub use bals::{bals, bals_fast_step_g, BalsSettings};
pub use lskrf::lskrf;

use std::fmt;
use std::time::Duration;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{identity, kronecker, ComplexMatrix};
use crate::model::{ChannelPair, ScenarioDims};

/// Which estimator to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorKind {
    Lskrf,
    Bals,
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EstimatorKind::Lskrf => write!(f, "lskrf"),
            EstimatorKind::Bals => write!(f, "bals"),
        }
    }
}

impl std::str::FromStr for EstimatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lskrf" => Ok(EstimatorKind::Lskrf),
            "bals" => Ok(EstimatorKind::Bals),
            other => Err(Error::InvalidArgument(format!(
                "unknown estimator '{other}' (expected lskrf or bals)"
            ))),
        }
    }
}

/// Failed identifiability requirements for an estimator at given dimensions.
#[derive(Debug, Clone)]
pub struct IdentifiabilityViolation {
    pub method: EstimatorKind,
    pub failures: Vec<String>,
}

impl fmt::Display for IdentifiabilityViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "identifiability violation for {}: {}",
            self.method,
            self.failures.join("; ")
        )
    }
}

impl std::error::Error for IdentifiabilityViolation {}

/// Checks the training-dimension requirements of an estimator.
///
/// The closed-form route filters with `S^H` and `X^*`, so it needs `K >= N`
/// and `T >= M`. The iterative route only needs its two least-squares systems
/// to be overdetermined: `K min(T, L) >= N` and `T >= M`.
pub fn check_identifiability(
    dims: &ScenarioDims,
    method: EstimatorKind,
) -> std::result::Result<(), IdentifiabilityViolation> {
    let (m, l, n, t, k) = (
        dims.bs_antennas,
        dims.ut_antennas,
        dims.irs_elements,
        dims.slots_per_block,
        dims.blocks,
    );
    let mut failures = Vec::new();
    match method {
        EstimatorKind::Lskrf => {
            if k < n {
                failures.push(format!("requires K >= N, got K={k} < N={n}"));
            }
            if t < m {
                failures.push(format!("requires T >= M, got T={t} < M={m}"));
            }
        }
        EstimatorKind::Bals => {
            let kmin = k * t.min(l);
            if kmin < n {
                failures.push(format!(
                    "requires K*min(T,L) >= N, got {k}*{} = {kmin} < N={n}",
                    t.min(l)
                ));
            }
            if t < m {
                failures.push(format!("requires T >= M, got T={t} < M={m}"));
            }
        }
    }
    if failures.is_empty() {
        Ok(())
    } else {
        Err(IdentifiabilityViolation { method, failures })
    }
}

/// Result of one channel estimation run.
#[derive(Debug, Clone)]
pub struct ChannelEstimate {
    /// Estimated transmitter-surface channel `H` (`N x M`).
    pub bs_irs: ComplexMatrix,
    /// Estimated surface-receiver channel `G` (`L x N`).
    pub irs_ut: ComplexMatrix,
    /// Cascaded channel `G H^T` (`L x M`), free of per-element scale
    /// ambiguity.
    pub cascaded: ComplexMatrix,
    /// Iterations performed (0 for the closed form).
    pub iterations: usize,
    /// Reconstruction error per iteration (empty for the closed form).
    pub error_trace: Vec<f64>,
    /// Whether the iteration stopped on the tolerance rather than the cap
    /// (always true for the closed form).
    pub converged: bool,
    /// Wall-clock time spent inside the estimator.
    pub wall_time: Duration,
}

impl ChannelEstimate {
    pub fn new(
        bs_irs: ComplexMatrix,
        irs_ut: ComplexMatrix,
        iterations: usize,
        error_trace: Vec<f64>,
        converged: bool,
        wall_time: Duration,
    ) -> Self {
        let cascaded = &irs_ut * bs_irs.transpose();
        Self {
            bs_irs,
            irs_ut,
            cascaded,
            iterations,
            error_trace,
            converged,
            wall_time,
        }
    }

    /// The cascaded channel `G H^T`.
    pub fn cascaded_channel(&self) -> &ComplexMatrix {
        &self.cascaded
    }
}

/// When `gram` is `c I` within a small relative tolerance, returns `c`.
pub(crate) fn scaled_identity_factor(gram: &ComplexMatrix) -> Option<f64> {
    let n = gram.nrows();
    if n == 0 || gram.ncols() != n {
        return None;
    }
    let c = gram.diagonal().iter().map(|z| z.re).sum::<f64>() / n as f64;
    if !(c > 0.0) {
        return None;
    }
    let mut err_sq = 0.0;
    for j in 0..n {
        for i in 0..n {
            let target = if i == j {
                Complex64::new(c, 0.0)
            } else {
                Complex64::default()
            };
            err_sq += (gram[(i, j)] - target).norm_sqr();
        }
    }
    (err_sq.sqrt() <= 1e-8 * c * (n as f64).sqrt()).then_some(c)
}

pub(crate) fn is_semi_unitary(m: &ComplexMatrix) -> bool {
    matches!(
        scaled_identity_factor(&(m.adjoint() * m)),
        Some(c) if (c - 1.0).abs() <= 1e-8
    )
}

/// Bilinear filtering of the mode-3 unfolding with the known training
/// matrices: `W^T = S^H Y3 (X^* (x) I_L)`, rescaled by the Gram factor of `S`
/// so that noiseless data yields `W = H^T . G` exactly.
///
/// `y3` is `K x LT`, `s` is `K x N`, `x` is `T x M`; the result is `ML x N`.
pub fn bilinear_filter(
    y3: &ComplexMatrix,
    s: &ComplexMatrix,
    x: &ComplexMatrix,
) -> Result<ComplexMatrix> {
    let (k, n) = s.shape();
    let (t, _m) = x.shape();
    if y3.nrows() != k {
        return Err(Error::InvalidArgument(format!(
            "bilinear_filter: Y3 has {} rows but S has {k} blocks",
            y3.nrows()
        )));
    }
    if t == 0 || y3.ncols() % t != 0 {
        return Err(Error::InvalidArgument(format!(
            "bilinear_filter: Y3 column count {} is not a multiple of the {t} slots",
            y3.ncols()
        )));
    }
    let l = y3.ncols() / t;
    if !is_semi_unitary(x) {
        return Err(Error::DesignMismatch(
            "bilinear_filter: pilot matrix is not semi-unitary (X^H X != I)".into(),
        ));
    }
    let scale = scaled_identity_factor(&(s.adjoint() * s)).ok_or_else(|| {
        Error::DesignMismatch(
            "bilinear_filter: IRS matrix Gram is not a scaled identity (S^H S != c I)".into(),
        )
    })?;
    let filtered = s.adjoint() * y3 * kronecker(&x.conjugate(), &identity(l));
    Ok(filtered.transpose().unscale(scale))
}

/// Aligns the per-element scale ambiguity of an estimate against a known
/// reference: for each surface element the complex factor minimizing
/// `||g_n - alpha g_hat_n||^2` rescales column `n` of `G` and divides row `n`
/// of `H`, leaving the cascaded channel unchanged.
pub fn resolve_scaling(est: &ChannelEstimate, truth: &ChannelPair) -> Result<ChannelEstimate> {
    let n = est.irs_ut.ncols();
    if truth.irs_ut.shape() != est.irs_ut.shape() || truth.bs_irs.shape() != est.bs_irs.shape() {
        return Err(Error::InvalidArgument(format!(
            "resolve_scaling: estimate shapes {:?}/{:?} do not match reference {:?}/{:?}",
            est.bs_irs.shape(),
            est.irs_ut.shape(),
            truth.bs_irs.shape(),
            truth.irs_ut.shape()
        )));
    }
    let mut g = est.irs_ut.clone();
    let mut h = est.bs_irs.clone();
    for col in 0..n {
        let g_hat = est.irs_ut.column(col);
        let denom = g_hat.norm_squared();
        if denom == 0.0 {
            return Err(Error::DegenerateColumn {
                index: col,
                reason: "estimated receive-side column is zero".into(),
            });
        }
        let alpha = g_hat.dotc(&truth.irs_ut.column(col)) / denom;
        if alpha.norm_sqr() == 0.0 {
            return Err(Error::DegenerateColumn {
                index: col,
                reason: "estimated column is orthogonal to the reference".into(),
            });
        }
        for r in 0..g.nrows() {
            g[(r, col)] *= alpha;
        }
        let inv = Complex64::new(1.0, 0.0) / alpha;
        for c in 0..h.ncols() {
            h[(col, c)] *= inv;
        }
    }
    Ok(ChannelEstimate::new(
        h,
        g,
        est.iterations,
        est.error_trace.clone(),
        est.converged,
        est.wall_time,
    ))
}
