//! Closed-form kernels of the effective flux-lattice model.
//!
//! These are the scalar-type-agnostic algebraic cores; the model-facing
//! wrappers in [`crate::effective`] and [`crate::noise`] instantiate them at
//! [`crate::Real`]. Signs follow the convention that the hopping matrix
//! element J_ij multiplies b_i† b_j, so arg J_ij = φ_i − φ_j.

use num_complex::Complex;

use crate::scalar::Scalar;

/// Second-order excitation-exchange amplitude J_ij through one shared color:
/// Ω_i Ω_j* V / (4 Δ (Δ + V)).
#[inline]
pub fn hopping_kernel<S: Scalar>(
    omega_i: Complex<S>,
    omega_j: Complex<S>,
    v: S,
    delta: S,
) -> Complex<S> {
    omega_i * omega_j.conj() * (v / (S::of(4) * delta * (delta + v)))
}

/// General two-detuning form of the exchange amplitude,
/// (Ω_i Ω_j*/4) (1/Δ_i − 1/(Δ_j + V)); reduces to [`hopping_kernel`] when
/// Δ_i = Δ_j.
#[inline]
pub fn hopping_kernel_asymmetric<S: Scalar>(
    omega_i: Complex<S>,
    omega_j: Complex<S>,
    v: S,
    delta_i: S,
    delta_j: S,
) -> Complex<S> {
    omega_i * omega_j.conj()
        * ((S::one() / delta_i - S::one() / (delta_j + v)) / S::of(4))
}

/// Single-site light shift |Ω|²/4Δ.
#[inline]
pub fn light_shift<S: Scalar>(omega_sq: S, delta: S) -> S {
    omega_sq / (S::of(4) * delta)
}

/// Interaction-shifted light shift |Ω|²/(4(Δ + V)) induced on a site by a
/// drive on a neighbor.
#[inline]
pub fn blockade_shift<S: Scalar>(omega_sq: S, delta: S, v: S) -> S {
    omega_sq / (S::of(4) * (delta + v))
}

/// Dimer-assisted exchange J⁽²⁾ for a pinned excitation at distance V_NN:
/// Ω_j Ω_k* V_jk / [4 (Δ + V_NN)(Δ + V_NN + V_jk)].
#[inline]
pub fn dimer_kernel<S: Scalar>(
    omega_j: Complex<S>,
    omega_k: Complex<S>,
    v_jk: S,
    delta: S,
    v_nn: S,
) -> Complex<S> {
    let shifted = delta + v_nn;
    omega_j * omega_k.conj() * (v_jk / (S::of(4) * shifted * (shifted + v_jk)))
}

/// Wrap an angle to (−π, π].
#[inline]
pub fn wrap_angle<S: Scalar>(theta: S) -> S {
    let tau = S::TAU();
    let mut t = theta % tau;
    if t > S::PI() {
        t = t - tau;
    } else if t <= -S::PI() {
        t = t + tau;
    }
    t
}

/// Center-of-mass parameters of a tightly bound pair: modified hoppings and
/// the doubled flux.
///
/// Returns (J_x′, J_y′, Φ′) with J_x′ = 2 J_x²/D₂, J_y′ = J_y²/D₁ + J_y²/D₃,
/// Φ′ = 2Φ wrapped to (−π, π].
#[inline]
pub fn doublon_com_kernel<S: Scalar>(
    j_x: S,
    j_y: S,
    flux: S,
    d1: S,
    d2: S,
    d3: S,
) -> (S, S, S) {
    let jx2 = S::of(2) * j_x * j_x / d2;
    let jy2 = j_y * j_y / d1 + j_y * j_y / d3;
    (jx2, jy2, wrap_angle(S::of(2) * flux))
}

/// Total-power estimate of the four-color square-lattice scheme from the
/// final closed form P = (w₀² N ħ / 2 α d²) J² (8/ε_b + 3/√ε_c).
///
/// `w0` in meters, `j` in rad·s⁻¹, `d_eff` in C·m, `hbar` in J·s.
#[inline]
pub fn power_total_closed_form<S: Scalar>(
    j: S,
    eps_b: S,
    eps_c: S,
    w0: S,
    n_sites: S,
    d_eff: S,
    alpha: S,
    hbar: S,
) -> S {
    w0 * w0 * n_sites * hbar / (S::of(2) * alpha * d_eff * d_eff)
        * j
        * j
        * (S::of(8) / eps_b + S::of(3) / eps_c.sqrt())
}

/// Doppler suppression figures for a two-site exchange at hopping J and
/// detuning spread Δ_T: two-site eigenvalues ±√(J² + Δ_T²), effective
/// dephasing rate Δ_T²/J, localization length J²/Δ_T², coherence time ξ/J.
#[inline]
pub fn doppler_scaling_kernel<S: Scalar>(j: S, delta_t: S) -> (S, S, S, S) {
    let two_site = (j * j + delta_t * delta_t).sqrt();
    let gamma_eff = delta_t * delta_t / j;
    let xi = if delta_t == S::zero() {
        S::infinity()
    } else {
        j * j / (delta_t * delta_t)
    };
    let t_c = xi / j;
    (two_site, gamma_eff, xi, t_c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn hopping_vanishes_without_interaction() {
        let o = Complex64::new(3.0, 1.0);
        assert_eq!(hopping_kernel(o, o, 0.0, 5.0).norm(), 0.0);
    }

    #[test]
    fn hopping_phase_is_difference_of_drive_phases() {
        // φ_i = π/2, φ_j = 0, positive prefactor -> arg J = π/2
        let oi = Complex64::from_polar(2.0, std::f64::consts::FRAC_PI_2);
        let oj = Complex64::from_polar(2.0, 0.0);
        let j = hopping_kernel(oi, oj, 1.0, 3.0);
        assert!((j.arg() - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
    }

    #[test]
    fn hopping_large_interaction_limit() {
        // |Ω| = 2π×10, Δ = 2π×120 MHz, V -> ∞: |J| -> Ω²/4Δ = 2π×0.2083 MHz
        let tau = std::f64::consts::TAU;
        let omega = Complex64::new(tau * 10.0, 0.0);
        let delta = tau * 120.0;
        let v = 1e6 * delta;
        let j = hopping_kernel(omega, omega, v, delta).norm();
        let limit = (tau * 10.0_f64).powi(2) / (4.0 * delta);
        assert!((j - limit).abs() / limit < 2e-6);
        assert!((limit / tau - 0.2083).abs() < 1e-3);
    }

    #[test]
    fn asymmetric_form_reduces_to_symmetric() {
        let oi = Complex64::new(1.0, 0.5);
        let oj = Complex64::new(0.7, -0.2);
        let (v, d) = (2.0, 7.0);
        let a = hopping_kernel(oi, oj, v, d);
        let b = hopping_kernel_asymmetric(oi, oj, v, d, d);
        assert!((a - b).norm() < 1e-15);
    }

    #[test]
    fn dimer_kernel_degenerates_to_single_excitation_form() {
        // V_NN = 0 reduces J² to the plain hopping formula
        let oj = Complex64::new(1.0, 0.0);
        let ok = Complex64::new(0.0, 1.0);
        let a = dimer_kernel(oj, ok, 3.0, 11.0, 0.0);
        let b = hopping_kernel(oj, ok, 3.0, 11.0);
        assert!((a - b).norm() < 1e-15);
        // and vanishes with V_jk
        assert_eq!(dimer_kernel(oj, ok, 0.0, 11.0, 5.0).norm(), 0.0);
    }

    #[test]
    fn doublon_com_values() {
        let (jx, jy, flux) = doublon_com_kernel(1.0_f64, 1.0, 0.3, 10.0, 10.0, 10.0);
        assert!((jx - 0.2).abs() < 1e-15);
        assert!((jy - 0.2).abs() < 1e-15);
        assert!((flux - 0.6).abs() < 1e-15);
    }

    #[test]
    fn doublon_flux_wraps_and_flips_chirality() {
        // Φ = 2π/3 -> Φ' = 4π/3 ≡ -2π/3 (mod 2π)
        let phi = 2.0 * std::f64::consts::PI / 3.0;
        let (_, _, fp) = doublon_com_kernel(1.0, 1.0, phi, 1.0, 1.0, 1.0);
        assert!((fp + phi).abs() < 1e-14);
    }

    #[test]
    fn doublon_hopping_dies_with_gap() {
        let (jx, _, _) = doublon_com_kernel(1.0_f32, 1.0, 0.1, 1.0, f32::INFINITY, 1.0);
        assert_eq!(jx, 0.0);
    }

    #[test]
    fn kernels_are_generic_over_scalar() {
        let j32 = hopping_kernel(
            Complex::new(1.0_f32, 0.0),
            Complex::new(1.0_f32, 0.0),
            2.0_f32,
            5.0_f32,
        );
        let j64 = hopping_kernel(
            Complex64::new(1.0, 0.0),
            Complex64::new(1.0, 0.0),
            2.0_f64,
            5.0_f64,
        );
        assert!((f64::from(j32.re) - j64.re).abs() < 1e-7);
    }

    #[test]
    fn doppler_kernel_limits() {
        let (two_site, gamma_eff, xi, _) = doppler_scaling_kernel(2.0_f64, 0.0);
        assert_eq!(two_site, 2.0);
        assert_eq!(gamma_eff, 0.0);
        assert!(xi.is_infinite());
        // J = Δ_T -> eigenvalues ±√2 J
        let (two_site, _, _, _) = doppler_scaling_kernel(3.0, 3.0);
        assert!((two_site - 3.0 * 2.0_f64.sqrt()).abs() < 1e-14);
    }
}
