//! Bilinear alternating least squares.

use std::time::Instant;

use num_complex::Complex64;
use rand_chacha::{rand_core::SeedableRng, ChaCha8Rng};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{frobenius_norm_sq, khatri_rao, ls_solve_ctx, ComplexMatrix};
use crate::model::{standard_complex, ScenarioDims};

use super::{check_identifiability, scaled_identity_factor, ChannelEstimate, EstimatorKind};

/// Tuning knobs for [`bals`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BalsSettings {
    /// Stop once the reconstruction error changes by at most this much
    /// between consecutive iterations.
    pub tolerance: f64,
    /// Hard iteration cap; hitting it is reported, not an error.
    pub max_iterations: usize,
    /// Divide the reconstruction error by `||Y||_F^2` so the stopping rule is
    /// scale-invariant. Off reproduces the raw squared-error rule.
    pub normalize_error: bool,
    /// Replace the per-iteration pseudo-inverses with scaled matrix products
    /// whenever the training design makes the Khatri-Rao Grams diagonal.
    pub fast_path: bool,
    /// Seed for the random initial `H`.
    pub init_seed: u64,
}

impl Default for BalsSettings {
    fn default() -> Self {
        Self {
            tolerance: 1e-6,
            max_iterations: 200,
            normalize_error: true,
            fast_path: true,
            init_seed: 0,
        }
    }
}

/// Estimates both channels by alternating exact least-squares updates of `G`
/// and `H` against the mode-1 and mode-2 unfoldings, with the IRS matrix `S`
/// known and fixed.
///
/// `y1` is `L x TK`, `y2` is `T x LK`, `s` is `K x N`, `x` is `T x M`. The
/// reconstruction error after each iteration is recorded in the returned
/// trace; it is non-increasing because each half-step solves its subproblem
/// exactly.
pub fn bals(
    y1: &ComplexMatrix,
    y2: &ComplexMatrix,
    s: &ComplexMatrix,
    x: &ComplexMatrix,
    settings: &BalsSettings,
) -> Result<ChannelEstimate> {
    let start = Instant::now();
    let (k, n) = s.shape();
    let (t, m) = x.shape();
    let l = y1.nrows();
    if y1.ncols() != t * k {
        return Err(Error::InvalidArgument(format!(
            "bals: Y1 is {}x{}, expected L x TK = {l}x{}",
            y1.nrows(),
            y1.ncols(),
            t * k
        )));
    }
    if y2.shape() != (t, l * k) {
        return Err(Error::InvalidArgument(format!(
            "bals: Y2 is {}x{}, expected T x LK = {t}x{}",
            y2.nrows(),
            y2.ncols(),
            l * k
        )));
    }
    if !(settings.tolerance > 0.0) || settings.max_iterations == 0 {
        return Err(Error::InvalidArgument(format!(
            "bals: settings need tolerance > 0 and max_iterations >= 1 (got {:?})",
            settings
        )));
    }
    let dims = ScenarioDims::new(m, l, n, t, k)?;
    check_identifiability(&dims, EstimatorKind::Bals)?;

    // The design-dependent shortcut applies when both Grams are (scaled)
    // identities; otherwise every step falls back to the SVD-based solve.
    let s_scale = scaled_identity_factor(&(s.adjoint() * s));
    let x_unitary = matches!(
        scaled_identity_factor(&(x.adjoint() * x)),
        Some(c) if (c - 1.0).abs() <= 1e-8
    );
    let fast = settings.fast_path && x_unitary && s_scale.is_some();

    let norm_y_sq = frobenius_norm_sq(y1);
    let mut init_rng = ChaCha8Rng::seed_from_u64(settings.init_seed);
    let mut h = ComplexMatrix::zeros(n, m);
    for r in 0..n {
        for c in 0..m {
            h[(r, c)] = standard_complex(&mut init_rng);
        }
    }

    let mut g = ComplexMatrix::zeros(l, n);
    let mut z = x * h.transpose();
    let mut kr_sz = khatri_rao(s, &z)?;
    let mut trace: Vec<f64> = Vec::new();
    let mut converged = false;
    for _ in 0..settings.max_iterations {
        g = if fast {
            diagonal_gram_solve(y1, &kr_sz, "bals G-update")?
        } else {
            ls_solve_ctx(&kr_sz, &y1.transpose(), "bals G-update")?.transpose()
        };

        let kr_sg = khatri_rao(s, &g)?;
        h = if fast {
            let pilot_filtered = x.adjoint() * y2;
            diagonal_gram_solve(&pilot_filtered, &kr_sg, "bals H-update")?.transpose()
        } else {
            let pilot_solved = ls_solve_ctx(x, y2, "bals H-update (pilot solve)")?;
            ls_solve_ctx(&kr_sg, &pilot_solved.transpose(), "bals H-update")?
        };

        z = x * h.transpose();
        kr_sz = khatri_rao(s, &z)?;
        let residual = y1 - &g * kr_sz.transpose();
        let mut err = frobenius_norm_sq(&residual);
        if settings.normalize_error {
            err /= norm_y_sq;
        }
        trace.push(err);
        let len = trace.len();
        if len >= 2 && (trace[len - 1] - trace[len - 2]).abs() <= settings.tolerance {
            converged = true;
            break;
        }
    }
    let iterations = trace.len();
    Ok(ChannelEstimate::new(
        h,
        g,
        iterations,
        trace,
        converged,
        start.elapsed(),
    ))
}

/// Least-squares update for `min_B ||Y - B F^T||_F` when the columns of the
/// Khatri-Rao product `F = S . V` are mutually orthogonal (guaranteed by
/// `S^H S = c I`): the Gram collapses to `diag(||f_n||^2)`, so the
/// pseudo-inverse reduces to `Y conj(F) D^{-1}`.
fn diagonal_gram_solve(
    y: &ComplexMatrix,
    kr: &ComplexMatrix,
    context: &str,
) -> Result<ComplexMatrix> {
    let n = kr.ncols();
    let powers: Vec<f64> = (0..n).map(|c| kr.column(c).norm_squared()).collect();
    let max_p = powers.iter().cloned().fold(0.0f64, f64::max);
    // Column norms are the singular values here; mirror the ls_solve rule.
    let threshold = f64::EPSILON * (kr.nrows().max(n) as f64) * max_p.sqrt();
    for &p in &powers {
        if max_p == 0.0 || p.sqrt() < threshold {
            return Err(Error::RankDeficient {
                context: context.to_string(),
                smallest: p.sqrt(),
                threshold,
            });
        }
    }
    let mut out = y * kr.conjugate();
    for c in 0..n {
        let inv = Complex64::new(1.0 / powers[c], 0.0);
        for r in 0..out.nrows() {
            out[(r, c)] *= inv;
        }
    }
    Ok(out)
}

/// One fast `G` update: given the mode-1 unfolding, the IRS matrix with
/// `S^H S = c I_N`, and the current `Z = X H^T`, computes the exact
/// least-squares estimate of `G` without a pseudo-inverse, using the
/// Hadamard-product identity `(S . Z)^H (S . Z) = (S^H S) o (Z^H Z)`, which
/// the scaled-identity Gram collapses to `c diag(||z_n||^2)`.
pub fn bals_fast_step_g(
    y1: &ComplexMatrix,
    s: &ComplexMatrix,
    z: &ComplexMatrix,
) -> Result<ComplexMatrix> {
    let (k, n) = s.shape();
    if z.ncols() != n {
        return Err(Error::InvalidArgument(format!(
            "bals_fast_step_g: Z has {} columns, expected {n}",
            z.ncols()
        )));
    }
    if y1.ncols() != z.nrows() * k {
        return Err(Error::InvalidArgument(format!(
            "bals_fast_step_g: Y1 has {} columns, expected T*K = {}",
            y1.ncols(),
            z.nrows() * k
        )));
    }
    let c = scaled_identity_factor(&(s.adjoint() * s)).ok_or_else(|| {
        Error::DesignMismatch(
            "bals_fast_step_g: IRS matrix Gram is not a scaled identity (S^H S != c I)".into(),
        )
    })?;
    let kr = khatri_rao(s, z)?;
    diagonal_gram_solve(y1, &kr, c, "bals G-update")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::test_support::{random_matrix, rel_err, rng};
    use crate::model::{
        add_noise, gen_channels, synthesize_noiseless, IrsPhaseDesign, TrainingPair,
    };
    use crate::tensor::SignalTensor;

    fn paper_dims(n: usize) -> ScenarioDims {
        ScenarioDims::new(3, 2, n, 4, 50).unwrap()
    }

    struct Setup {
        y: SignalTensor,
        training: TrainingPair,
        truth: crate::model::ChannelPair,
    }

    fn noiseless_setup(dims: &ScenarioDims, design: IrsPhaseDesign, seed: u64) -> Setup {
        let truth = gen_channels(dims, &mut rng(seed));
        let training = TrainingPair::design(dims, design).unwrap();
        let y = synthesize_noiseless(&truth, &training).unwrap();
        Setup { y, training, truth }
    }

    fn run(setup: &Setup, settings: &BalsSettings) -> ChannelEstimate {
        bals(
            &setup.y.unfold(1).unwrap(),
            &setup.y.unfold(2).unwrap(),
            &setup.training.irs_phases,
            &setup.training.pilots,
            settings,
        )
        .unwrap()
    }

    #[test]
    fn noiseless_exact_model_convergence() {
        let setup = noiseless_setup(&paper_dims(10), IrsPhaseDesign::UnitModulus, 601);
        let est = run(&setup, &BalsSettings::default());
        assert!(est.converged);
        let final_err = *est.error_trace.last().unwrap();
        assert!(final_err < 1e-10, "final normalized error {final_err}");
        assert!(rel_err(est.cascaded_channel(), &setup.truth.cascaded()) < 1e-8);
    }

    #[test]
    fn converges_in_few_iterations_at_20db() {
        let dims = paper_dims(10);
        let mut iteration_counts = Vec::new();
        for seed in 0..20 {
            let mut r = rng(700 + seed);
            let truth = gen_channels(&dims, &mut r);
            let training = TrainingPair::design(&dims, IrsPhaseDesign::UnitModulus).unwrap();
            let clean = synthesize_noiseless(&truth, &training).unwrap();
            let (noisy, _) = add_noise(&clean, 20.0, &mut r).unwrap();
            let est = bals(
                &noisy.unfold(1).unwrap(),
                &noisy.unfold(2).unwrap(),
                &training.irs_phases,
                &training.pilots,
                &BalsSettings {
                    init_seed: seed,
                    ..BalsSettings::default()
                },
            )
            .unwrap();
            assert!(est.converged);
            iteration_counts.push(est.iterations);
        }
        iteration_counts.sort_unstable();
        let median = iteration_counts[iteration_counts.len() / 2];
        assert!(median < 10, "median iterations {median}");
    }

    #[test]
    fn error_trace_is_non_increasing() {
        let dims = paper_dims(10);
        let mut r = rng(611);
        let truth = gen_channels(&dims, &mut r);
        let training = TrainingPair::design(&dims, IrsPhaseDesign::UnitModulus).unwrap();
        let clean = synthesize_noiseless(&truth, &training).unwrap();
        let (noisy, _) = add_noise(&clean, 5.0, &mut r).unwrap();
        let est = bals(
            &noisy.unfold(1).unwrap(),
            &noisy.unfold(2).unwrap(),
            &training.irs_phases,
            &training.pilots,
            &BalsSettings {
                tolerance: 1e-14,
                max_iterations: 30,
                ..BalsSettings::default()
            },
        )
        .unwrap();
        for pair in est.error_trace.windows(2) {
            assert!(
                pair[1] <= pair[0] + 1e-12,
                "trace increased: {} -> {}",
                pair[0],
                pair[1]
            );
        }
    }

    #[test]
    fn fast_and_generic_paths_agree() {
        for design in [IrsPhaseDesign::UnitModulus, IrsPhaseDesign::SemiUnitary] {
            let setup = noiseless_setup(&paper_dims(6), design, 613);
            let (noisy, _) = add_noise(&setup.y, 15.0, &mut rng(617)).unwrap();
            let noisy_setup = Setup {
                y: noisy,
                training: setup.training.clone(),
                truth: setup.truth.clone(),
            };
            let fast = run(
                &noisy_setup,
                &BalsSettings {
                    fast_path: true,
                    ..BalsSettings::default()
                },
            );
            let generic = run(
                &noisy_setup,
                &BalsSettings {
                    fast_path: false,
                    ..BalsSettings::default()
                },
            );
            assert_eq!(fast.iterations, generic.iterations);
            assert!(rel_err(&fast.bs_irs, &generic.bs_irs) < 1e-10);
            assert!(rel_err(&fast.irs_ut, &generic.irs_ut) < 1e-10);
        }
    }

    #[test]
    fn identifiability_violation_is_rejected() {
        // K*min(T,L) = 10*2 = 20 < N = 40.
        let dims = ScenarioDims::new(3, 2, 40, 4, 10).unwrap();
        let setup = noiseless_setup(&dims, IrsPhaseDesign::UnitModulus, 619);
        let result = bals(
            &setup.y.unfold(1).unwrap(),
            &setup.y.unfold(2).unwrap(),
            &setup.training.irs_phases,
            &setup.training.pilots,
            &BalsSettings::default(),
        );
        assert!(matches!(result, Err(Error::Identifiability(_))));
    }

    #[test]
    fn iteration_cap_is_reported_not_an_error() {
        let setup = noiseless_setup(&paper_dims(8), IrsPhaseDesign::UnitModulus, 621);
        let est = run(
            &setup,
            &BalsSettings {
                tolerance: 1e-300,
                max_iterations: 3,
                ..BalsSettings::default()
            },
        );
        assert!(!est.converged);
        assert_eq!(est.iterations, 3);
        assert_eq!(est.error_trace.len(), 3);
    }

    #[test]
    fn fast_step_matches_generic_pseudo_inverse() {
        let dims = paper_dims(6);
        let setup = noiseless_setup(&dims, IrsPhaseDesign::UnitModulus, 623);
        let mut r = rng(627);
        let (noisy, _) = add_noise(&setup.y, 10.0, &mut r).unwrap();
        let y1 = noisy.unfold(1).unwrap();
        let h_guess = random_matrix(&mut r, 6, 3);
        let z = &setup.training.pilots * h_guess.transpose();

        let fast = bals_fast_step_g(&y1, &setup.training.irs_phases, &z).unwrap();
        let kr = khatri_rao(&setup.training.irs_phases, &z).unwrap();
        let generic = ls_solve_ctx(&kr, &y1.transpose(), "oracle").unwrap().transpose();
        assert!(rel_err(&fast, &generic) < 1e-10);
    }

    #[test]
    fn fast_step_matches_generic_in_semi_unitary_mode() {
        let dims = paper_dims(6);
        let setup = noiseless_setup(&dims, IrsPhaseDesign::SemiUnitary, 629);
        let y1 = setup.y.unfold(1).unwrap();
        let mut r = rng(631);
        let h_guess = random_matrix(&mut r, 6, 3);
        let z = &setup.training.pilots * h_guess.transpose();
        let fast = bals_fast_step_g(&y1, &setup.training.irs_phases, &z).unwrap();
        let kr = khatri_rao(&setup.training.irs_phases, &z).unwrap();
        let generic = ls_solve_ctx(&kr, &y1.transpose(), "oracle").unwrap().transpose();
        assert!(rel_err(&fast, &generic) < 1e-10);
    }

    #[test]
    fn fast_step_with_orthogonal_z_is_fully_diagonal() {
        // Z with orthogonal columns: the Gram of the Khatri-Rao product is
        // diagonal on both factors, so entrywise inversion is exact.
        let dims = ScenarioDims::new(3, 2, 3, 4, 8).unwrap();
        let training = TrainingPair::design(&dims, IrsPhaseDesign::UnitModulus).unwrap();
        let z = crate::model::dft_training(4, 3).unwrap();
        let mut r = rng(633);
        let g_true = random_matrix(&mut r, 2, 3);
        let y = SignalTensor::from_factors(&g_true, &z, &training.irs_phases).unwrap();
        let y1 = y.unfold(1).unwrap();
        let g = bals_fast_step_g(&y1, &training.irs_phases, &z).unwrap();
        assert!(rel_err(&g, &g_true) < 1e-10);
    }

    #[test]
    fn fast_step_rejects_unstructured_irs_matrix() {
        let mut r = rng(637);
        let s = random_matrix(&mut r, 8, 3);
        let z = random_matrix(&mut r, 4, 3);
        let y1 = random_matrix(&mut r, 2, 32);
        assert!(matches!(
            bals_fast_step_g(&y1, &s, &z),
            Err(Error::DesignMismatch(_))
        ));
    }

    #[test]
    fn invalid_settings_are_rejected() {
        let setup = noiseless_setup(&paper_dims(4), IrsPhaseDesign::UnitModulus, 641);
        let result = bals(
            &setup.y.unfold(1).unwrap(),
            &setup.y.unfold(2).unwrap(),
            &setup.training.irs_phases,
            &setup.training.pilots,
            &BalsSettings {
                tolerance: 0.0,
                ..BalsSettings::default()
            },
        );
        assert!(matches!(result, Err(Error::InvalidArgument(_))));
    }
}
