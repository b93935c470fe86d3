//! Forward models for notch-type (hanger) resonators.
//!
//! The linear model is the standard side-coupled lumped-LC transmission
//!
//! ```text
//! S21_ideal(f) = 1 − (Q_l/|Q_c|) e^{iφ} / (1 + 2i Q_l (f/f_r − 1))
//! S21(f)       = a e^{iα₀} e^{−2πifτ} · S21_ideal(f)
//! ```
//!
//! with the loaded quality factor `Q_l`, the coupling quality factor
//! magnitude `|Q_c|`, the impedance-mismatch phase `φ`, and the complex
//! background (cable damping `a`, phase offset `α₀`, cable delay `τ`).
//! The internal quality factor follows from the diameter correction
//! `1/Q_l = 1/Q_int + cos φ / |Q_c|`.
//!
//! The nonlinear (Kerr/Duffing) model works in angular rates. The steady
//! state of the driven mode with anharmonicity `β` gives the intracavity
//! photon number as the smallest positive root of
//!
//! ```text
//! β² n³ − 2Δβ n² + (Δ² + κ²/4) n − (κ_c/2) Φ = 0,      Δ = ω − ω_r,
//! ```
//!
//! and the transmission in terms of the mode amplitude `|α| = √n`:
//!
//! ```text
//! S21 = 1 + i √(κ_c/2) (|α| e^{−iψ} / √Φ) e^{iφ},
//! ψ   = atan(2(Δ − βn)/κ).
//! ```
//!
//! The drive term enters the mode equation with amplitude `√(κ_c/2)` (the
//! side-coupled resonator radiates into both feedline directions), so the
//! same `κ_c/2` appears in the cubic. With that convention the β = 0 limit
//! is *identical* to the linear model under `κ = 2πf_r/Q_l`,
//! `κ_c = 2πf_r/|Q_c|` and `φ_linear = φ − π/2`; see
//! [`DuffingParams::equivalent_notch`].
//!
//! All rates in [`DuffingParams`] are angular (rad/s). Conversions from the
//! quality-factor parameterization are provided by
//! [`DuffingParams::from_quality_factors`].

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Wrap an angle to the interval (−π, π].
pub fn wrap_phase(x: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let mut y = x % two_pi;
    if y <= -PI {
        y += two_pi;
    } else if y > PI {
        y -= two_pi;
    }
    y
}

/// Parameters of the linear notch model, including the complex background.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NotchParams {
    /// Resonance frequency [Hz].
    pub f_r_hz: f64,
    /// Loaded quality factor.
    pub q_l: f64,
    /// Magnitude of the coupling quality factor.
    pub q_c_mag: f64,
    /// Impedance-mismatch phase [rad], wrapped to (−π, π].
    pub phi: f64,
    /// Cable damping (linear amplitude).
    pub a: f64,
    /// Global phase offset [rad], wrapped to (−π, π].
    pub alpha0: f64,
    /// Cable delay [s].
    pub tau_s: f64,
}

impl NotchParams {
    /// Validates the physical domain and wraps the phases. Rejects parameter
    /// sets whose diameter-corrected internal quality factor would be
    /// non-positive.
    pub fn new(
        f_r_hz: f64,
        q_l: f64,
        q_c_mag: f64,
        phi: f64,
        a: f64,
        alpha0: f64,
        tau_s: f64,
    ) -> Result<Self> {
        for (name, v) in [
            ("f_r_hz", f_r_hz),
            ("q_l", q_l),
            ("q_c_mag", q_c_mag),
            ("a", a),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::ParameterDomain(format!(
                    "{name} must be finite and positive, got {v}"
                )));
            }
        }
        if !phi.is_finite() || !alpha0.is_finite() || !tau_s.is_finite() {
            return Err(Error::ParameterDomain(
                "phi, alpha0 and tau_s must be finite".into(),
            ));
        }
        let phi = wrap_phase(phi);
        diameter_correct(q_l, q_c_mag, phi)?;
        Ok(NotchParams {
            f_r_hz,
            q_l,
            q_c_mag,
            phi,
            a,
            alpha0,
            tau_s,
        })
    }

    /// Internal quality factor via the diameter correction. Positive by
    /// construction.
    pub fn q_int(&self) -> f64 {
        1.0 / (1.0 / self.q_l - self.phi.cos() / self.q_c_mag)
    }

    /// Linewidth f_r/Q_l [Hz].
    pub fn linewidth_hz(&self) -> f64 {
        self.f_r_hz / self.q_l
    }
}

/// Ideal notch transmission without background.
pub fn eval_ideal_notch(f_hz: f64, p: &NotchParams) -> Complex64 {
    ideal_notch_raw(f_hz, p.f_r_hz, p.q_l, p.q_c_mag, p.phi)
}

/// Full notch transmission including the complex background prefactor.
pub fn eval_full_notch(f_hz: f64, p: &NotchParams) -> Complex64 {
    full_notch_raw(
        f_hz, p.f_r_hz, p.q_l, p.q_c_mag, p.phi, p.a, p.alpha0, p.tau_s,
    )
}

pub(crate) fn ideal_notch_raw(f_hz: f64, f_r: f64, q_l: f64, q_c: f64, phi: f64) -> Complex64 {
    let num = Complex64::from_polar(q_l / q_c, phi);
    let den = Complex64::new(1.0, 2.0 * q_l * (f_hz / f_r - 1.0));
    Complex64::new(1.0, 0.0) - num / den
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn full_notch_raw(
    f_hz: f64,
    f_r: f64,
    q_l: f64,
    q_c: f64,
    phi: f64,
    a: f64,
    alpha0: f64,
    tau_s: f64,
) -> Complex64 {
    let bg = Complex64::from_polar(a, alpha0 - 2.0 * PI * f_hz * tau_s);
    bg * ideal_notch_raw(f_hz, f_r, q_l, q_c, phi)
}

/// Internal quality factor from the diameter correction
/// `1/Q_int = 1/Q_l − cos(φ)/|Q_c|`.
pub fn diameter_correct(q_l: f64, q_c_mag: f64, phi: f64) -> Result<f64> {
    if !(q_l > 0.0) || !(q_c_mag > 0.0) {
        return Err(Error::ParameterDomain(
            "diameter correction requires positive Q_l and |Q_c|".into(),
        ));
    }
    let inv = 1.0 / q_l - phi.cos() / q_c_mag;
    if !(inv > 0.0) || !inv.is_finite() {
        return Err(Error::UnphysicalFit(format!(
            "1/Q_l − cos(φ)/|Q_c| = {inv:.6e} implies non-positive Q_int"
        )));
    }
    Ok(1.0 / inv)
}

/// Parameters of the Kerr-nonlinear mode. All rates angular [rad/s].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DuffingParams {
    /// Angular resonance frequency [rad/s].
    pub omega_r: f64,
    /// Total decay rate κ [rad/s].
    pub kappa: f64,
    /// Coupling decay rate κ_c [rad/s].
    pub kappa_c: f64,
    /// Kerr anharmonicity β [rad/s per photon]; any sign.
    pub beta_kerr: f64,
    /// Drive phase φ of the transmission formula [rad], wrapped to (−π, π].
    /// The impedance-mismatch angle of the equivalent linear model is
    /// `φ − π/2`, see [`Self::mismatch_angle`].
    pub phi: f64,
}

impl DuffingParams {
    pub fn new(omega_r: f64, kappa: f64, kappa_c: f64, beta_kerr: f64, phi: f64) -> Result<Self> {
        for (name, v) in [("omega_r", omega_r), ("kappa", kappa), ("kappa_c", kappa_c)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::ParameterDomain(format!(
                    "{name} must be finite and positive, got {v}"
                )));
            }
        }
        if !beta_kerr.is_finite() || !phi.is_finite() {
            return Err(Error::ParameterDomain(
                "beta_kerr and phi must be finite".into(),
            ));
        }
        let p = DuffingParams {
            omega_r,
            kappa,
            kappa_c,
            beta_kerr,
            phi: wrap_phase(phi),
        };
        if p.kappa_int() < 0.0 {
            return Err(Error::ParameterDomain(format!(
                "kappa_int = {:.6e} rad/s is negative",
                p.kappa_int()
            )));
        }
        Ok(p)
    }

    /// Build from the quality-factor parameterization:
    /// κ = 2πf_r/Q_l, κ_c = 2πf_r/|Q_c|.
    pub fn from_quality_factors(
        f_r_hz: f64,
        q_l: f64,
        q_c_mag: f64,
        beta_kerr: f64,
        phi: f64,
    ) -> Result<Self> {
        let omega_r = 2.0 * PI * f_r_hz;
        DuffingParams::new(omega_r, omega_r / q_l, omega_r / q_c_mag, beta_kerr, phi)
    }

    /// Impedance-mismatch angle of the resonance circle, wrap(φ − π/2).
    /// An impedance-matched resonator (dip pointing at the origin) has
    /// φ = π/2 and mismatch angle 0.
    pub fn mismatch_angle(&self) -> f64 {
        wrap_phase(self.phi - PI / 2.0)
    }

    /// Internal decay rate from the diameter correction applied in rate
    /// form: κ_int = κ − κ_c·cos(mismatch angle).
    pub fn kappa_int(&self) -> f64 {
        self.kappa - self.kappa_c * self.mismatch_angle().cos()
    }

    /// Equivalent internal quality factor ω_r/κ_int.
    pub fn q_int(&self) -> Result<f64> {
        let ki = self.kappa_int();
        if !(ki > 0.0) {
            return Err(Error::UnphysicalFit(format!(
                "kappa_int = {ki:.6e} rad/s implies non-positive Q_int"
            )));
        }
        Ok(self.omega_r / ki)
    }

    /// The linear notch parameter set whose transmission is identical to
    /// this model at β = 0:
    /// f_r = ω_r/2π, Q_l = ω_r/κ, |Q_c| = ω_r/κ_c, φ_lin = φ − π/2.
    ///
    /// Substituting the β = 0 photon number n = (κ_c/2)Φ/(Δ² + κ²/4) into
    /// the transmission formula collapses it to
    /// 1 + i(κ_c/2)e^{iφ}/(κ/2 + iΔ), which is the ideal notch with the
    /// mapping above at every frequency.
    pub fn equivalent_notch(&self, a: f64, alpha0: f64, tau_s: f64) -> Result<NotchParams> {
        NotchParams::new(
            self.omega_r / (2.0 * PI),
            self.omega_r / self.kappa,
            self.omega_r / self.kappa_c,
            self.mismatch_angle(),
            a,
            alpha0,
            tau_s,
        )
    }
}

/// Steady-state intracavity photon number of the driven Kerr mode.
///
/// `delta` is the drive detuning ω − ω_r [rad/s] and `flux` the applied
/// photon flux Φ [photons/s]. Returns the smallest real positive root of
/// the steady-state cubic; for β = 0 the closed Lorentzian form
/// (κ_c/2)Φ/(Δ² + κ²/4) is returned exactly.
pub fn duffing_photon_number(delta: f64, p: &DuffingParams, flux: f64) -> Result<f64> {
    if !(flux >= 0.0) || !flux.is_finite() {
        return Err(Error::ParameterDomain(format!(
            "photon flux must be finite and non-negative, got {flux}"
        )));
    }
    photon_number_raw(delta, p.kappa, p.kappa_c, p.beta_kerr, flux)
}

pub(crate) fn photon_number_raw(
    delta: f64,
    kappa: f64,
    kappa_c: f64,
    beta: f64,
    flux: f64,
) -> Result<f64> {
    if flux == 0.0 {
        return Ok(0.0);
    }
    let r2 = delta * delta + 0.25 * kappa * kappa;
    let n0 = 0.5 * kappa_c * flux / r2;
    if beta == 0.0 {
        return Ok(n0);
    }
    // Scale n = m·n0 so the low branch sits at m ≈ O(1):
    //   A m³ + B m² + m − 1 = 0, A = β²n0²/R², B = −2Δβn0/R².
    let a3 = beta * beta * n0 * n0 / r2;
    let b2 = -2.0 * delta * beta * n0 / r2;
    let m = smallest_positive_cubic_root(a3, b2)?;
    Ok(m * n0)
}

/// Smallest positive root of A m³ + B m² + m − 1 = 0 with A > 0.
/// Closed-form discriminant solve followed by a Newton polish; ties between
/// equal-magnitude candidates resolve toward the smaller root.
fn smallest_positive_cubic_root(a: f64, b: f64) -> Result<f64> {
    let poly = |m: f64| ((a * m + b) * m + 1.0) * m - 1.0;
    let dpoly = |m: f64| (3.0 * a * m + 2.0 * b) * m + 1.0;
    let polish = |mut m: f64| {
        for _ in 0..16 {
            let d = dpoly(m);
            if d == 0.0 {
                break;
            }
            let step = poly(m) / d;
            m -= step;
            if step.abs() <= 1e-15 * m.abs().max(1.0) {
                break;
            }
        }
        m
    };

    let mut candidates: Vec<f64> = Vec::with_capacity(3);
    if a < 1e-80 {
        // Cubic term numerically irrelevant on the O(1) branch.
        if b.abs() < 1e-300 {
            candidates.push(1.0);
        } else {
            let disc = 1.0 + 4.0 * b;
            if disc >= 0.0 {
                let s = disc.sqrt();
                candidates.push((-1.0 + s) / (2.0 * b));
                candidates.push((-1.0 - s) / (2.0 * b));
            } else if a > 0.0 {
                // Only the far cubic root exists; it is ≈ −B/A.
                candidates.push(-b / a);
            }
        }
    } else {
        // Monic form m³ + pm² + qm + r, then depressed cubic in t = m + p/3.
        let p = b / a;
        let q = 1.0 / a;
        let r = -1.0 / a;
        let shift = p / 3.0;
        let dp = q - p * p / 3.0;
        let dq = 2.0 * p * p * p / 27.0 - p * q / 3.0 + r;
        let disc = 0.25 * dq * dq + dp * dp * dp / 27.0;
        if disc > 0.0 {
            let s = disc.sqrt();
            let t = (-0.5 * dq + s).cbrt() + (-0.5 * dq - s).cbrt();
            candidates.push(t - shift);
        } else {
            let rad = (-dp / 3.0).sqrt();
            let cos_arg = (-0.5 * dq / (rad * rad * rad)).clamp(-1.0, 1.0);
            let theta = cos_arg.acos();
            for k in 0..3 {
                let t = 2.0 * rad * ((theta + 2.0 * PI * k as f64) / 3.0).cos();
                candidates.push(t - shift);
            }
        }
    }

    let mut best: Option<f64> = None;
    for c in candidates {
        if !c.is_finite() {
            continue;
        }
        let m = polish(c);
        if m.is_finite() && m > 0.0 {
            best = Some(match best {
                Some(cur) if cur <= m => cur,
                _ => m,
            });
        }
    }
    best.ok_or_else(|| {
        Error::Numerical(format!(
            "no positive real photon-number root (A = {a:.3e}, B = {b:.3e})"
        ))
    })
}

/// Transmission of the Kerr-nonlinear notch resonator (no background).
pub fn eval_duffing_s21(f_hz: f64, p: &DuffingParams, flux: f64) -> Result<Complex64> {
    if !(flux > 0.0) || !flux.is_finite() {
        return Err(Error::ParameterDomain(format!(
            "duffing transmission requires positive photon flux, got {flux}"
        )));
    }
    duffing_s21_raw(
        2.0 * PI * f_hz,
        p.omega_r,
        p.kappa,
        p.kappa_c,
        p.beta_kerr,
        p.phi,
        flux,
    )
}

pub(crate) fn duffing_s21_raw(
    omega: f64,
    omega_r: f64,
    kappa: f64,
    kappa_c: f64,
    beta: f64,
    phi: f64,
    flux: f64,
) -> Result<Complex64> {
    let delta = omega - omega_r;
    let n = photon_number_raw(delta, kappa, kappa_c, beta, flux)?;
    let amp = n.sqrt();
    let psi = (2.0 * (delta - beta * n) / kappa).atan();
    let dip = Complex64::i()
        * (0.5 * kappa_c).sqrt()
        * (amp / flux.sqrt())
        * Complex64::from_polar(1.0, phi - psi);
    Ok(Complex64::new(1.0, 0.0) + dip)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn notch(f_r: f64, q_l: f64, q_c: f64, phi: f64) -> NotchParams {
        NotchParams::new(f_r, q_l, q_c, phi, 1.0, 0.0, 0.0).unwrap()
    }

    #[test]
    fn ideal_notch_on_resonance_critical_coupling() {
        let p = notch(7.5e9, 2.5e5, 5.0e5, 0.0);
        let s = eval_ideal_notch(p.f_r_hz, &p);
        assert!((s.re - 0.5).abs() < 1e-14);
        assert!(s.im.abs() < 1e-14);
    }

    #[test]
    fn ideal_notch_far_detuned_tends_to_unity() {
        let p = notch(7.5e9, 2.5e5, 5.0e5, 0.0);
        let f = p.f_r_hz * (1.0 + 1e3 / p.q_l);
        let s = eval_ideal_notch(f, &p);
        assert!((s - Complex64::new(1.0, 0.0)).norm() < 1e-3);
    }

    #[test]
    fn ideal_notch_half_linewidth_point() {
        // f/f_r − 1 = 1/(2Q_l) makes the denominator 1 + i, so with
        // Q_l/|Q_c| = 0.5 and φ = 0: 1 − 0.5/(1+i) = 0.75 + 0.25i.
        let p = notch(5.0e9, 1.0e5, 2.0e5, 0.0);
        let f = p.f_r_hz * (1.0 + 1.0 / (2.0 * p.q_l));
        let s = eval_ideal_notch(f, &p);
        // Tolerance covers the rounding of f/f_r − 1 at Q_l = 1e5.
        assert!((s.re - 0.75).abs() < 1e-9);
        assert!((s.im - 0.25).abs() < 1e-9);
    }

    #[test]
    fn ideal_notch_minimum_sits_at_resonance_for_zero_phi() {
        let p = notch(7.0e9, 3.0e5, 6.0e5, 0.0);
        let lw = p.linewidth_hz();
        let mut min_f = 0.0;
        let mut min_v = f64::INFINITY;
        for k in -2000..=2000 {
            let f = p.f_r_hz + 5e-3 * lw * k as f64;
            let v = eval_ideal_notch(f, &p).norm();
            if v < min_v {
                min_v = v;
                min_f = f;
            }
        }
        assert!((min_f - p.f_r_hz).abs() <= 5e-3 * lw);
    }

    #[test]
    fn full_notch_unit_background_matches_ideal() {
        let p = notch(7.5e9, 2.5e5, 5.0e5, 0.3);
        for k in 0..100 {
            let f = p.f_r_hz * (1.0 + (k as f64 - 50.0) * 1e-6);
            let a = eval_full_notch(f, &p);
            let b = eval_ideal_notch(f, &p);
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn full_notch_background_only() {
        let p = NotchParams::new(7.5e9, 2.5e5, 5.0e5, 0.0, 2.0, PI, 0.0).unwrap();
        let f = p.f_r_hz * (1.0 + 2e3 / p.q_l);
        let s = eval_full_notch(f, &p);
        assert!((s - Complex64::new(-2.0, 0.0)).norm() < 1e-3 * 2.0);
    }

    #[test]
    fn full_notch_delay_phase_winding() {
        // τ = 1 ns at f = 0.5 GHz winds the phase by exactly π.
        let p = NotchParams::new(5.0e8 * 1.0e4, 1.0e5, 1.0e10, 0.0, 1.0, 0.0, 0.0).unwrap();
        let s = full_notch_raw(5.0e8, p.f_r_hz, p.q_l, p.q_c_mag, 0.0, 1.0, 0.0, 1e-9);
        assert!((s - Complex64::new(-1.0, 0.0)).norm() < 1e-3);
    }

    #[test]
    fn diameter_correction_examples() {
        assert!((diameter_correct(2.5e5, 5.0e5, 0.0).unwrap() - 5.0e5).abs() < 1e-6);
        assert!((diameter_correct(4.0e5, 7.7e5, PI / 2.0).unwrap() - 4.0e5).abs() < 1e-4);
        assert!((diameter_correct(4.0e5, 1.0e6, PI / 3.0).unwrap() - 5.0e5).abs() < 1e-6);
        assert!(diameter_correct(4.0e5, 1.0e5, 0.0).is_err());
    }

    #[test]
    fn diameter_correction_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..500 {
            let q_int: f64 = 10f64.powf(rng.random_range(4.0..7.0));
            let q_c: f64 = 10f64.powf(rng.random_range(4.6..6.6));
            let phi: f64 = rng.random_range(-1.2..1.2);
            let q_l = 1.0 / (1.0 / q_int + phi.cos() / q_c);
            if q_l <= 0.0 {
                continue;
            }
            let rec = diameter_correct(q_l, q_c, phi).unwrap();
            assert!(
                (1.0 / q_l - (1.0 / rec + phi.cos() / q_c)).abs() <= 1e-12 / q_l,
                "identity violated: q_int {q_int:e}, rec {rec:e}"
            );
            assert!((rec - q_int).abs() <= 1e-9 * q_int);
        }
    }

    fn duffing(kappa: f64, kappa_c: f64, beta: f64, phi: f64) -> DuffingParams {
        DuffingParams::new(2.0 * PI * 7.5e9, kappa, kappa_c, beta, phi).unwrap()
    }

    #[test]
    fn photon_number_lorentzian_limit() {
        // β = 0, Δ = 0 → n = 2κ_cΦ/κ².
        let p = duffing(1.5e5, 9.0e4, 0.0, PI / 2.0);
        let flux = 3.0e8;
        let n = duffing_photon_number(0.0, &p, flux).unwrap();
        let expect = 2.0 * p.kappa_c * flux / (p.kappa * p.kappa);
        assert!((n - expect).abs() <= 1e-12 * expect);
    }

    #[test]
    fn photon_number_zero_flux() {
        let p = duffing(1.5e5, 9.0e4, 25.0, PI / 2.0);
        assert_eq!(duffing_photon_number(1e4, &p, 0.0).unwrap(), 0.0);
    }

    /// Independent oracle: dense log-grid sign scan plus bisection on the
    /// steady-state cubic.
    fn root_scan_oracle(delta: f64, kappa: f64, kappa_c: f64, beta: f64, flux: f64) -> f64 {
        let r2 = delta * delta + 0.25 * kappa * kappa;
        let poly = |n: f64| {
            beta * beta * n * n * n - 2.0 * delta * beta * n * n + r2 * n - 0.5 * kappa_c * flux
        };
        let n0 = 0.5 * kappa_c * flux / r2;
        let lo0 = n0 * 1e-9;
        let mut hi0 = n0;
        if beta != 0.0 {
            hi0 = hi0.max(3.0 * delta.abs() / beta.abs()).max(kappa / beta.abs());
        }
        hi0 *= 10.0;
        let steps = 16384;
        let lg_lo = lo0.ln();
        let lg_hi = hi0.ln();
        let mut prev_n = 0.0;
        let mut prev_v = poly(0.0);
        assert!(prev_v < 0.0);
        for i in 0..=steps {
            let n = (lg_lo + (lg_hi - lg_lo) * i as f64 / steps as f64).exp();
            let v = poly(n);
            if prev_v < 0.0 && v >= 0.0 {
                let (mut a, mut b) = (prev_n, n);
                for _ in 0..200 {
                    let mid = 0.5 * (a + b);
                    if poly(mid) < 0.0 {
                        a = mid;
                    } else {
                        b = mid;
                    }
                }
                return 0.5 * (a + b);
            }
            prev_n = n;
            prev_v = v;
        }
        panic!("oracle found no sign change");
    }

    #[test]
    fn photon_number_matches_root_scan_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..100 {
            let kappa = 10f64.powf(rng.random_range(4.0..7.0));
            let kappa_c = kappa * rng.random_range(0.05..0.95);
            let beta = if rng.random_range(0.0..1.0) < 0.5 { -1.0 } else { 1.0 }
                * 10f64.powf(rng.random_range(-2.0..2.0));
            let delta = kappa * rng.random_range(-8.0..8.0);
            let flux = 10f64.powf(rng.random_range(6.0..12.0));
            let p = DuffingParams::new(2.0 * PI * 7.5e9, kappa, kappa_c, beta, PI / 2.0).unwrap();
            let got = duffing_photon_number(delta, &p, flux).unwrap();
            let want = root_scan_oracle(delta, kappa, kappa_c, beta, flux);
            assert!(
                (got - want).abs() <= 1e-9 * want,
                "root mismatch: got {got:e}, want {want:e} (κ={kappa:e}, β={beta:e}, Δ={delta:e}, Φ={flux:e})"
            );
        }
    }

    #[test]
    fn photon_number_continuous_in_flux_below_bistability() {
        // Weak Kerr: the smallest-root branch must track the linear solution
        // smoothly, with no branch jumps.
        let p = duffing(2.0e5, 1.0e5, 1.0e-3, PI / 2.0);
        let n1 = duffing_photon_number(0.5 * p.kappa, &p, 1e6).unwrap();
        let mut prev = 0.0;
        for k in 1..200 {
            let flux = 1e6 * k as f64;
            let n = duffing_photon_number(0.5 * p.kappa, &p, flux).unwrap();
            assert!(n > prev, "photon number must grow with flux here");
            assert!((n / (k as f64 * n1) - 1.0).abs() < 0.2, "branch jump at k = {k}");
            prev = n;
        }
    }

    #[test]
    fn duffing_matches_linear_notch_at_resonance() {
        // φ = π/2 makes the mismatch angle zero; the equivalent linear model
        // then has φ = 0 and the two transmissions agree exactly.
        let p = duffing(1.8e5, 1.1e5, 0.0, PI / 2.0);
        let flux = 1.0e9;
        let lin = p.equivalent_notch(1.0, 0.0, 0.0).unwrap();
        let f_r = p.omega_r / (2.0 * PI);
        let got = eval_duffing_s21(f_r, &p, flux).unwrap();
        let want = eval_full_notch(f_r, &lin);
        assert!((got - want).norm() < 1e-9);
    }

    #[test]
    fn duffing_equals_linear_notch_at_all_detunings_for_zero_kerr() {
        let p = duffing(1.8e5, 1.1e5, 0.0, -1.1);
        let lin = p.equivalent_notch(1.0, 0.0, 0.0).unwrap();
        let f_r = p.omega_r / (2.0 * PI);
        let lw = p.kappa / (2.0 * PI);
        for k in -400..=400 {
            let f = f_r + lw * 0.02 * k as f64;
            let got = eval_duffing_s21(f, &p, 2.5e8).unwrap();
            let want = eval_full_notch(f, &lin);
            assert!((got - want).norm() < 1e-10, "mismatch at offset {k}");
        }
    }

    #[test]
    fn duffing_dip_shifts_monotonically_with_flux() {
        let p = duffing(2.0e5, 1.2e5, 0.5, PI / 2.0);
        let f_r = p.omega_r / (2.0 * PI);
        let lw = p.kappa / (2.0 * PI);
        let mut prev_dip = f64::NEG_INFINITY;
        for flux in [1e7, 1e8, 5e8, 2e9, 8e9] {
            let mut dip_f = 0.0;
            let mut dip_v = f64::NEG_INFINITY;
            for k in -3000..=3000 {
                let f = f_r + lw * 0.01 * k as f64;
                let v = (eval_duffing_s21(f, &p, flux).unwrap() - Complex64::new(1.0, 0.0)).norm();
                if v > dip_v {
                    dip_v = v;
                    dip_f = f;
                }
            }
            assert!(dip_f >= prev_dip, "positive Kerr must pull the dip upward");
            prev_dip = dip_f;
        }
    }

    #[test]
    fn duffing_magnitude_symmetric_for_zero_kerr() {
        // Impedance-matched drive phase; the lineshape is then an even
        // function of the detuning.
        let p = duffing(2.0e5, 1.2e5, 0.0, PI / 2.0);
        let f_r = p.omega_r / (2.0 * PI);
        let lw = p.kappa / (2.0 * PI);
        for k in 1..200 {
            let off = lw * 0.03 * k as f64;
            let hi = eval_duffing_s21(f_r + off, &p, 1e8).unwrap().norm();
            let lo = eval_duffing_s21(f_r - off, &p, 1e8).unwrap().norm();
            assert!((hi - lo).abs() < 1e-9);
        }
    }

    /// Algebraic (Kåsa) circle fit used as an independent oracle.
    fn kasa_circle(points: &[Complex64]) -> (f64, f64, f64) {
        use nalgebra::{DMatrix, DVector};
        let m = DMatrix::from_fn(points.len(), 3, |i, j| match j {
            0 => points[i].re,
            1 => points[i].im,
            _ => 1.0,
        });
        let b = DVector::from_fn(points.len(), |i, _| points[i].norm_sqr());
        let sol = (m.transpose() * &m)
            .cholesky()
            .expect("circle normal equations")
            .solve(&(m.transpose() * b));
        let (cx, cy) = (0.5 * sol[0], 0.5 * sol[1]);
        let r = (sol[2] + cx * cx + cy * cy).sqrt();
        (cx, cy, r)
    }

    #[test]
    fn zero_kerr_response_traces_a_circle() {
        let p = duffing(2.2e5, 1.3e5, 0.0, 1.9);
        let f_r = p.omega_r / (2.0 * PI);
        let lw = p.kappa / (2.0 * PI);
        let pts: Vec<Complex64> = (-500..=500)
            .map(|k| eval_duffing_s21(f_r + lw * 0.05 * k as f64, &p, 4e8).unwrap())
            .collect();
        let (cx, cy, r) = kasa_circle(&pts);
        let c = Complex64::new(cx, cy);
        let max_dev = pts
            .iter()
            .map(|z| ((z - c).norm() - r).abs())
            .fold(0.0, f64::max);
        assert!(max_dev < 1e-9 * r, "radius deviation {max_dev:e} vs r {r:e}");
    }

    #[test]
    fn phase_wrapping_convention() {
        assert_eq!(wrap_phase(PI), PI);
        assert_eq!(wrap_phase(-PI), PI);
        assert!((wrap_phase(3.0 * PI) - PI).abs() < 1e-12);
        assert!((wrap_phase(-0.3) + 0.3).abs() < 1e-15);
        let p = NotchParams::new(1e9, 1e5, 1e5, 3.0 * PI, 1.0, -5.0 * PI, 0.0).unwrap();
        assert!((p.phi - PI).abs() < 1e-12);
    }

    #[test]
    fn notch_params_reject_unphysical() {
        assert!(NotchParams::new(-1.0, 1e5, 1e5, 0.0, 1.0, 0.0, 0.0).is_err());
        assert!(NotchParams::new(1e9, 1e5, 1e4, 0.0, 1.0, 0.0, 0.0).is_err()); // Q_int < 0
        assert!(NotchParams::new(1e9, 1e5, 1e5, 0.0, 0.0, 0.0, 0.0).is_err());
    }
}
