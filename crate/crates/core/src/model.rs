//! Scenario generation: channel draws, training design (pilots and IRS phase
//! patterns), noiseless synthesis of the received tensor, and SNR-calibrated
//! noise injection.
//!
//! The training protocol is block-structured: the IRS phase vector is held
//! for the `T` slots of a block and changes across the `K` blocks, while the
//! `T` pilot vectors repeat identically in every block. Under that protocol
//! the noiseless received cube is trilinear in `(G, Z, S)` with `Z = X H^T`.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;
use crate::tensor::SignalTensor;

/// Problem dimensions for one scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDims {
    /// Transmit (base-station) antennas, `M`.
    pub bs_antennas: usize,
    /// Receive (user-terminal) antennas, `L`.
    pub ut_antennas: usize,
    /// Reflecting elements on the surface, `N`.
    pub irs_elements: usize,
    /// Pilot time slots per block, `T`.
    pub slots_per_block: usize,
    /// Blocks per channel coherence interval, `K`.
    pub blocks: usize,
}

impl ScenarioDims {
    pub fn new(
        bs_antennas: usize,
        ut_antennas: usize,
        irs_elements: usize,
        slots_per_block: usize,
        blocks: usize,
    ) -> Result<Self> {
        let dims = Self {
            bs_antennas,
            ut_antennas,
            irs_elements,
            slots_per_block,
            blocks,
        };
        if [bs_antennas, ut_antennas, irs_elements, slots_per_block, blocks]
            .iter()
            .any(|&d| d == 0)
        {
            return Err(Error::InvalidArgument(format!(
                "scenario dimensions must all be positive (got {dims:?})"
            )));
        }
        Ok(dims)
    }

    /// Total training slots in one coherence interval (`K * T`).
    pub fn coherence_slots(&self) -> usize {
        self.blocks * self.slots_per_block
    }
}

/// How the IRS phase-shift matrix `S` is built.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IrsPhaseDesign {
    /// Unit-modulus rows of a DFT: every element stays on at full reflection
    /// and only its phase changes, so `S^H S = K I_N` when `K >= N`. This is
    /// the default, physically realizable design.
    #[default]
    UnitModulus,
    /// Truncated DFT scaled for strict semi-unitarity, `S^H S = I_N`.
    /// Requires `K >= N`; entry magnitudes are `1/sqrt(K)`.
    SemiUnitary,
}

/// The known training matrices: pilots `X` (`T x M`) and IRS phases `S`
/// (`K x N`), plus the Gram scale of `S` when the design guarantees
/// `S^H S = c I_N`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingPair {
    pub pilots: ComplexMatrix,
    pub irs_phases: ComplexMatrix,
    /// `Some(c)` when `S^H S = c I_N` holds by construction.
    pub irs_gram_scale: Option<f64>,
}

impl TrainingPair {
    /// Builds the default training matrices for the given dimensions.
    ///
    /// Pilots are always the `T`-point truncated unitary DFT (`X^H X = I_M`).
    /// The IRS matrix follows `design`; in unit-modulus mode with `K < N`
    /// (reachable only by the iterative estimator) the columns are taken from
    /// the `N`-point DFT instead so that no two columns coincide, at the cost
    /// of losing the scaled-identity Gram.
    pub fn design(dims: &ScenarioDims, design: IrsPhaseDesign) -> Result<Self> {
        let pilots = dft_training(dims.slots_per_block, dims.bs_antennas)?;
        let (k, n) = (dims.blocks, dims.irs_elements);
        let (irs_phases, irs_gram_scale) = match design {
            IrsPhaseDesign::UnitModulus => {
                let period = k.max(n);
                let s = unit_modulus_dft(k, n, period);
                let scale = (k >= n).then_some(k as f64);
                (s, scale)
            }
            IrsPhaseDesign::SemiUnitary => {
                let s = dft_training(k, n).map_err(|_| {
                    Error::InvalidArgument(format!(
                        "semi-unitary IRS design needs blocks >= irs_elements (got K={k} < N={n})"
                    ))
                })?;
                (s, Some(1.0))
            }
        };
        Ok(Self {
            pilots,
            irs_phases,
            irs_gram_scale,
        })
    }
}

/// The two propagation channels: `H` (`N x M`, transmitter to surface) and
/// `G` (`L x N`, surface to receiver).
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelPair {
    pub bs_irs: ComplexMatrix,
    pub irs_ut: ComplexMatrix,
}

impl ChannelPair {
    /// End-to-end cascaded channel `G H^T` (`L x M`).
    pub fn cascaded(&self) -> ComplexMatrix {
        &self.irs_ut * self.bs_irs.transpose()
    }
}

/// One sample of the standard circularly-symmetric complex Gaussian: real and
/// imaginary parts independent `N(0, 1/2)`.
pub fn standard_complex<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Draws both channels with i.i.d. `CN(0, 1)` entries.
///
/// Entries are consumed from `rng` in a fixed order (`H` row-major, then `G`
/// row-major), so a given stream position always yields the same pair.
pub fn gen_channels<R: Rng + ?Sized>(dims: &ScenarioDims, rng: &mut R) -> ChannelPair {
    let bs_irs = random_cn_matrix(dims.irs_elements, dims.bs_antennas, rng);
    let irs_ut = random_cn_matrix(dims.ut_antennas, dims.irs_elements, rng);
    ChannelPair { bs_irs, irs_ut }
}

fn random_cn_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> ComplexMatrix {
    // from_fn fills column-major; draw row-major explicitly to keep the
    // documented consumption order.
    let mut m = ComplexMatrix::zeros(rows, cols);
    for r in 0..rows {
        for c in 0..cols {
            m[(r, c)] = standard_complex(rng);
        }
    }
    m
}

/// First `cols` columns of the `rows`-point unitary DFT matrix, satisfying
/// `F^H F = I_cols`. Every entry has magnitude `1/sqrt(rows)`.
pub fn dft_training(rows: usize, cols: usize) -> Result<ComplexMatrix> {
    if rows < cols {
        return Err(Error::InvalidArgument(format!(
            "dft_training: semi-unitarity needs rows >= cols (got {rows} < {cols})"
        )));
    }
    let scale = 1.0 / (rows as f64).sqrt();
    Ok(ComplexMatrix::from_fn(rows, cols, |r, c| {
        Complex64::from_polar(scale, -2.0 * std::f64::consts::PI * (r * c) as f64 / rows as f64)
    }))
}

/// `K x N` matrix of unit-modulus phase shifts `exp(-2 pi i k n / period)`.
fn unit_modulus_dft(rows: usize, cols: usize, period: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |r, c| {
        Complex64::from_polar(
            1.0,
            -2.0 * std::f64::consts::PI * ((r * c) % period) as f64 / period as f64,
        )
    })
}

/// Noiseless received tensor for the block-structured protocol: frontal slice
/// `k` equals `G diag(s_k) H X^T`.
pub fn synthesize_noiseless(
    channels: &ChannelPair,
    training: &TrainingPair,
) -> Result<SignalTensor> {
    let n = channels.bs_irs.nrows();
    let m = channels.bs_irs.ncols();
    if channels.irs_ut.ncols() != n {
        return Err(Error::InvalidArgument(format!(
            "synthesize_noiseless: channel IRS dimensions differ ({} vs {n})",
            channels.irs_ut.ncols()
        )));
    }
    if training.pilots.ncols() != m {
        return Err(Error::InvalidArgument(format!(
            "synthesize_noiseless: pilot columns {} do not match transmit antennas {m}",
            training.pilots.ncols()
        )));
    }
    if training.irs_phases.ncols() != n {
        return Err(Error::InvalidArgument(format!(
            "synthesize_noiseless: IRS matrix columns {} do not match elements {n}",
            training.irs_phases.ncols()
        )));
    }
    let z = &training.pilots * channels.bs_irs.transpose();
    SignalTensor::from_factors(&channels.irs_ut, &z, &training.irs_phases)
}

/// Adds complex Gaussian noise scaled so the realized Frobenius-norm SNR
/// `10 log10(||clean||^2 / ||noise||^2)` equals `snr_db` exactly.
///
/// Returns `(noisy, noise)`.
pub fn add_noise<R: Rng + ?Sized>(
    clean: &SignalTensor,
    snr_db: f64,
    rng: &mut R,
) -> Result<(SignalTensor, SignalTensor)> {
    if !snr_db.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "add_noise: snr_db must be finite (got {snr_db})"
        )));
    }
    let clean_power = clean.frobenius_norm_sq();
    if clean_power == 0.0 {
        return Err(Error::DegenerateInput(
            "add_noise: zero tensor has undefined SNR".into(),
        ));
    }
    let (l, t, k) = clean.dims();
    let raw = SignalTensor::from_fn(l, t, k, |_, _, _| standard_complex(rng));
    let raw_power = raw.frobenius_norm_sq();
    let target_power = clean_power / 10f64.powf(snr_db / 10.0);
    let noise = raw.scale((target_power / raw_power).sqrt());
    let noisy = clean.add(&noise)?;
    Ok((noisy, noise))
}
