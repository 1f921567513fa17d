//! Closed-form least-squares Khatri-Rao factorization.

use std::time::Instant;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{rank1_truncated_svd, ComplexMatrix};

use super::ChannelEstimate;

/// Factors the filtered virtual channel `W ~ H^T . G` (`ML x N`) into the two
/// channel estimates by solving one rank-1 matrix approximation per column.
///
/// Column `n` is reshaped (column-stacking) into the `L x M` block `g_n h_n^T`
/// and the dominant singular triplet gives `h_n = sqrt(sigma) conj(v)` and
/// `g_n = sqrt(sigma) u`. Estimates carry one arbitrary unit-modulus phase per
/// element, which cancels in the cascaded channel.
pub fn lskrf(w: &ComplexMatrix, ut_antennas: usize, bs_antennas: usize) -> Result<ChannelEstimate> {
    let start = Instant::now();
    let (l, m) = (ut_antennas, bs_antennas);
    if l == 0 || m == 0 || w.nrows() != l * m {
        return Err(Error::InvalidArgument(format!(
            "lskrf: W has {} rows, expected L*M = {}*{}",
            w.nrows(),
            l,
            m
        )));
    }
    let n = w.ncols();
    if n == 0 {
        return Err(Error::InvalidArgument(
            "lskrf: W must have at least one column".into(),
        ));
    }
    let mut h = ComplexMatrix::zeros(n, m);
    let mut g = ComplexMatrix::zeros(l, n);
    for col in 0..n {
        let block = ComplexMatrix::from_fn(l, m, |i, j| w[(j * l + i, col)]);
        if block.iter().all(|z| z.norm_sqr() == 0.0) {
            return Err(Error::DegenerateColumn {
                index: col,
                reason: "all-zero column in the Khatri-Rao factorization target".into(),
            });
        }
        let r1 = rank1_truncated_svd(&block)?;
        let root = Complex64::new(r1.sigma.sqrt(), 0.0);
        for j in 0..m {
            h[(col, j)] = r1.v[j].conj() * root;
        }
        for i in 0..l {
            g[(i, col)] = r1.u[i] * root;
        }
    }
    Ok(ChannelEstimate::new(h, g, 0, Vec::new(), true, start.elapsed()))
}
