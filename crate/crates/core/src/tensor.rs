//! Third-order complex tensor with PARAFAC-oriented unfoldings.
//!
//! A [`SignalTensor`] holds the received signal cube indexed `(l, t, k)`:
//! receive antenna, time slot within a block, and block. Frontal slices are
//! the per-block `L x T` matrices; the three matrix unfoldings follow the
//! slice-concatenation layout used throughout the estimators.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{khatri_rao, ComplexMatrix};

/// Dense third-order complex tensor of shape `(L, T, K)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalTensor {
    dim1: usize,
    dim2: usize,
    dim3: usize,
    // Index (l, t, k) lives at l + dim1 * (t + dim2 * k).
    data: Vec<Complex64>,
}

impl SignalTensor {
    /// All-zero tensor of shape `(l, t, k)`.
    pub fn zeros(l: usize, t: usize, k: usize) -> Self {
        Self {
            dim1: l,
            dim2: t,
            dim3: k,
            data: vec![Complex64::default(); l * t * k],
        }
    }

    /// Builds a tensor entry-by-entry from a function of the index `(l, t, k)`.
    pub fn from_fn(
        l: usize,
        t: usize,
        k: usize,
        mut f: impl FnMut(usize, usize, usize) -> Complex64,
    ) -> Self {
        let mut out = Self::zeros(l, t, k);
        for kk in 0..k {
            for tt in 0..t {
                for ll in 0..l {
                    out.set(ll, tt, kk, f(ll, tt, kk));
                }
            }
        }
        out
    }

    /// Stacks `K` frontal slices of equal shape `L x T` into a tensor.
    pub fn from_slices(slices: &[ComplexMatrix]) -> Result<Self> {
        let first = slices.first().ok_or_else(|| {
            Error::InvalidArgument("from_slices: need at least one slice".into())
        })?;
        let (l, t) = first.shape();
        for (k, s) in slices.iter().enumerate() {
            if s.shape() != (l, t) {
                return Err(Error::InvalidArgument(format!(
                    "from_slices: slice {k} has shape {:?}, expected {:?}",
                    s.shape(),
                    (l, t)
                )));
            }
        }
        let mut out = Self::zeros(l, t, slices.len());
        for (k, s) in slices.iter().enumerate() {
            for tt in 0..t {
                for ll in 0..l {
                    out.set(ll, tt, k, s[(ll, tt)]);
                }
            }
        }
        Ok(out)
    }

    /// Synthesizes the rank-`N` tensor with entries
    /// `y(l, t, k) = sum_n g[(l, n)] z[(t, n)] s[(k, n)]`.
    pub fn from_factors(
        g: &ComplexMatrix,
        z: &ComplexMatrix,
        s: &ComplexMatrix,
    ) -> Result<Self> {
        let n = g.ncols();
        if z.ncols() != n || s.ncols() != n {
            return Err(Error::InvalidArgument(format!(
                "from_factors: factor column counts differ ({n}, {}, {})",
                z.ncols(),
                s.ncols()
            )));
        }
        // Mode-1 unfolding of the factor model, then refold.
        let mode1 = g * khatri_rao(s, z)?.transpose();
        Ok(Self::from_mode1(&mode1, z.nrows(), s.nrows()))
    }

    fn from_mode1(mode1: &ComplexMatrix, t: usize, k: usize) -> Self {
        let l = mode1.nrows();
        Self::from_fn(l, t, k, |ll, tt, kk| mode1[(ll, kk * t + tt)])
    }

    /// Tensor shape `(L, T, K)`.
    pub fn dims(&self) -> (usize, usize, usize) {
        (self.dim1, self.dim2, self.dim3)
    }

    #[inline]
    pub fn get(&self, l: usize, t: usize, k: usize) -> Complex64 {
        self.data[l + self.dim1 * (t + self.dim2 * k)]
    }

    #[inline]
    pub fn set(&mut self, l: usize, t: usize, k: usize, value: Complex64) {
        self.data[l + self.dim1 * (t + self.dim2 * k)] = value;
    }

    /// Frontal slice `k` as an `L x T` matrix.
    pub fn slice(&self, k: usize) -> ComplexMatrix {
        ComplexMatrix::from_fn(self.dim1, self.dim2, |l, t| self.get(l, t, k))
    }

    /// Matrix unfolding along the requested mode:
    ///
    /// * mode 1: `L x TK`, the frontal slices side by side;
    /// * mode 2: `T x LK`, the transposed frontal slices side by side;
    /// * mode 3: `K x LT`, row `k` holding the column-stacked slice `k`.
    pub fn unfold(&self, mode: usize) -> Result<ComplexMatrix> {
        let (l, t, k) = self.dims();
        match mode {
            1 => Ok(ComplexMatrix::from_fn(l, t * k, |ll, col| {
                self.get(ll, col % t, col / t)
            })),
            2 => Ok(ComplexMatrix::from_fn(t, l * k, |tt, col| {
                self.get(col % l, tt, col / l)
            })),
            3 => Ok(ComplexMatrix::from_fn(k, l * t, |kk, col| {
                self.get(col % l, col / l, kk)
            })),
            other => Err(Error::InvalidArgument(format!(
                "unfold: mode must be 1, 2, or 3 (got {other})"
            ))),
        }
    }

    /// Sum of squared entry magnitudes.
    pub fn frobenius_norm_sq(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Entrywise sum; shapes must match.
    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.dims() != other.dims() {
            return Err(Error::InvalidArgument(format!(
                "add: tensor shapes differ ({:?} vs {:?})",
                self.dims(),
                other.dims()
            )));
        }
        let mut out = self.clone();
        for (o, r) in out.data.iter_mut().zip(&other.data) {
            *o += r;
        }
        Ok(out)
    }

    /// Entrywise scaling by a real factor.
    pub fn scale(&self, factor: f64) -> Self {
        let mut out = self.clone();
        for z in &mut out.data {
            *z *= factor;
        }
        out
    }

    /// True when every entry is finite.
    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

/// Rebuilds a tensor from `K` frontal slices of equal shape.
pub fn fold_from_slices(slices: &[ComplexMatrix]) -> Result<SignalTensor> {
    SignalTensor::from_slices(slices)
}
