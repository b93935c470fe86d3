//! Superconducting film parameters from DC transport data.
//!
//! * Critical temperature from the resistive transition (midpoint criterion
//!   by default, configurable fraction).
//! * B_c2(0) = 0.69·T_c·|dB_c2/dT| at T_c, with the slope from a linear
//!   regression of the near-T_c points.
//! * Ginzburg-Landau coherence length ξ_GL(0) = √(Φ₀/(2π·B_c2(0))).
//! * Mean free path from the residual resistivity via ρℓ = 3.72×10⁻⁶ μΩ·cm².

use serde::{Deserialize, Serialize};

use crate::consts::FLUX_QUANTUM;
use crate::error::{Error, Result};

/// ρℓ product for Nb [μΩ·cm²].
pub const RHO_MFP_PRODUCT: f64 = 3.72e-6;

/// Fraction of T_c above which the B_c2(T) regression runs.
pub const DEFAULT_SLOPE_WINDOW: f64 = 0.9;

/// B_c2 vs T samples plus the residual resistivity for one film.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransportCurve {
    pub film_id: String,
    /// (temperature [K], upper critical field [T]).
    pub bc2_vs_t: Vec<(f64, f64)>,
    /// Residual resistivity at 10 K [μΩ·cm].
    pub rho_10k: f64,
}

impl TransportCurve {
    pub fn new(film_id: String, bc2_vs_t: Vec<(f64, f64)>, rho_10k: f64) -> Result<Self> {
        if !(rho_10k > 0.0) {
            return Err(Error::ParameterDomain(format!(
                "residual resistivity must be positive, got {rho_10k}"
            )));
        }
        for &(t, b) in &bc2_vs_t {
            if !(t > 0.0) || !(b >= 0.0) {
                return Err(Error::ParameterDomain(format!(
                    "invalid (T, B_c2) sample ({t}, {b})"
                )));
            }
        }
        Ok(TransportCurve {
            film_id,
            bc2_vs_t,
            rho_10k,
        })
    }
}

/// Critical temperature at 50% of the normal-state resistance plateau.
pub fn extract_tc(r_vs_t: &[(f64, f64)]) -> Result<f64> {
    extract_tc_at_fraction(r_vs_t, 0.5)
}

/// Critical temperature at an arbitrary fraction of the normal-state
/// plateau (e.g. 0.1 or 0.9 for transition-width estimates).
pub fn extract_tc_at_fraction(r_vs_t: &[(f64, f64)], fraction: f64) -> Result<f64> {
    if r_vs_t.len() < 3 {
        return Err(Error::Data(format!(
            "resistance curve needs at least 3 samples, got {}",
            r_vs_t.len()
        )));
    }
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::ParameterDomain(format!(
            "criterion fraction must lie in (0, 1), got {fraction}"
        )));
    }
    let mut curve = r_vs_t.to_vec();
    curve.sort_by(|a, b| a.0.total_cmp(&b.0));

    // Normal-state plateau: mean resistance of the samples within 10% of the
    // maximum (the high-temperature flat part).
    let r_max = curve.iter().map(|&(_, r)| r).fold(f64::NEG_INFINITY, f64::max);
    if !(r_max > 0.0) {
        return Err(Error::Data("no transition found: curve never leaves zero".into()));
    }
    let plateau: Vec<f64> = curve
        .iter()
        .map(|&(_, r)| r)
        .filter(|&r| r >= 0.9 * r_max)
        .collect();
    let r_n = plateau.iter().sum::<f64>() / plateau.len() as f64;
    let threshold = fraction * r_n;

    let r_min = curve.iter().map(|&(_, r)| r).fold(f64::INFINITY, f64::min);
    if r_min > threshold {
        return Err(Error::Data(
            "no transition found: resistance never drops below the criterion".into(),
        ));
    }

    // Scan upward in temperature for the first crossing and interpolate.
    for w in curve.windows(2) {
        let (t0, r0) = w[0];
        let (t1, r1) = w[1];
        if r0 < threshold && r1 >= threshold {
            if r1 == r0 {
                return Ok(t1);
            }
            return Ok(t0 + (t1 - t0) * (threshold - r0) / (r1 - r0));
        }
    }
    // Curve starts above the threshold at its lowest temperature.
    Err(Error::Data(
        "no transition found: curve does not cross the criterion from below".into(),
    ))
}

/// dB_c2/dT at T_c from a linear regression of points with T ≥ window·T_c.
pub fn fit_bc2_slope(curve: &TransportCurve, t_c_k: f64) -> Result<f64> {
    fit_bc2_slope_with_window(curve, t_c_k, DEFAULT_SLOPE_WINDOW)
}

pub fn fit_bc2_slope_with_window(
    curve: &TransportCurve,
    t_c_k: f64,
    window: f64,
) -> Result<f64> {
    if !(t_c_k > 0.0) {
        return Err(Error::ParameterDomain(format!(
            "critical temperature must be positive, got {t_c_k}"
        )));
    }
    let pts: Vec<(f64, f64)> = curve
        .bc2_vs_t
        .iter()
        .copied()
        .filter(|&(t, _)| t >= window * t_c_k)
        .collect();
    if pts.len() < 3 {
        return Err(Error::Data(format!(
            "only {} point(s) within the near-T_c window [{:.3}, ∞) K; need ≥ 3",
            pts.len(),
            window * t_c_k
        )));
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-30 {
        return Err(Error::Data("degenerate regression: identical temperatures".into()));
    }
    Ok((n * sxy - sx * sy) / denom)
}

/// Zero-temperature upper critical field B_c2(0) = 0.69·T_c·|slope|.
pub fn bc2_zero(t_c_k: f64, slope_t_per_k: f64) -> f64 {
    0.69 * t_c_k * slope_t_per_k.abs()
}

/// Ginzburg-Landau coherence length [m] from B_c2 [T].
pub fn gl_coherence_length(b_c2_t: f64) -> Result<f64> {
    if !(b_c2_t > 0.0) {
        return Err(Error::ParameterDomain(format!(
            "critical field must be positive, got {b_c2_t}"
        )));
    }
    Ok((FLUX_QUANTUM / (2.0 * std::f64::consts::PI * b_c2_t)).sqrt())
}

/// Electron mean free path [m] from the residual resistivity [μΩ·cm].
pub fn mean_free_path(rho_micro_ohm_cm: f64) -> Result<f64> {
    if !(rho_micro_ohm_cm > 0.0) {
        return Err(Error::ParameterDomain(format!(
            "resistivity must be positive, got {rho_micro_ohm_cm}"
        )));
    }
    // ℓ in cm, converted to meters.
    Ok(RHO_MFP_PRODUCT / rho_micro_ohm_cm * 1e-2)
}

/// Assembled figures of merit for one film.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FilmParameters {
    pub film_id: String,
    pub t_c_k: f64,
    pub bc2_slope_t_per_k: f64,
    pub bc2_zero_t: f64,
    pub xi_gl_m: f64,
    pub mean_free_path_m: f64,
    pub rho_10k_micro_ohm_cm: f64,
}

/// Full per-film characterization from a resistance curve and a B_c2 curve.
pub fn characterize_film(
    r_vs_t: &[(f64, f64)],
    curve: &TransportCurve,
) -> Result<FilmParameters> {
    let t_c = extract_tc(r_vs_t)?;
    let slope = fit_bc2_slope(curve, t_c)?;
    let b0 = bc2_zero(t_c, slope);
    Ok(FilmParameters {
        film_id: curve.film_id.clone(),
        t_c_k: t_c,
        bc2_slope_t_per_k: slope,
        bc2_zero_t: b0,
        xi_gl_m: gl_coherence_length(b0)?,
        mean_free_path_m: mean_free_path(curve.rho_10k)?,
        rho_10k_micro_ohm_cm: curve.rho_10k,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn step_curve(tc: f64, r_n: f64, dt: f64) -> Vec<(f64, f64)> {
        let count = (2.5 / dt) as usize;
        (0..count)
            .map(|k| {
                let t = 8.0 + dt * k as f64;
                (t, if t >= tc { r_n } else { 0.0 })
            })
            .collect()
    }

    #[test]
    fn tc_from_ideal_step() {
        let dt = 0.002;
        let tc = extract_tc(&step_curve(9.25, 0.8, dt)).unwrap();
        // A discontinuous step resolves T_c to within one grid interval.
        assert!((tc - 9.25).abs() <= dt, "tc = {tc}");
    }

    #[test]
    fn tc_from_smooth_transition() {
        // Monotone tanh transition with 10%-90% width of 0.1 K centered at
        // 9.25 K: R = R_n(1+tanh((T−T_c)/s))/2 crosses 10%/90% of the plateau
        // at tanh = ∓0.8, so s = 0.05/atanh(0.8).
        let scale = 0.05 / 0.8f64.atanh();
        let curve: Vec<(f64, f64)> = (0..4000)
            .map(|k| {
                let t = 8.5 + 1.5 * k as f64 / 4000.0;
                (t, 0.4 * (1.0 + ((t - 9.25) / scale).tanh()))
            })
            .collect();
        let tc = extract_tc(&curve).unwrap();
        assert!((tc - 9.25).abs() <= 0.01, "tc = {tc}");
        let t10 = extract_tc_at_fraction(&curve, 0.1).unwrap();
        let t90 = extract_tc_at_fraction(&curve, 0.9).unwrap();
        assert!(((t90 - t10) - 0.1).abs() < 0.01);
    }

    #[test]
    fn flat_curves_are_rejected() {
        let flat: Vec<(f64, f64)> = (0..100).map(|k| (8.0 + 0.02 * k as f64, 0.8)).collect();
        assert!(matches!(extract_tc(&flat), Err(Error::Data(_))));
        let zero: Vec<(f64, f64)> = (0..100).map(|k| (8.0 + 0.02 * k as f64, 0.0)).collect();
        assert!(extract_tc(&zero).is_err());
    }

    fn linear_bc2(tc: f64, slope: f64, n: usize) -> TransportCurve {
        let pts: Vec<(f64, f64)> = (0..n)
            .map(|k| {
                let t = tc * (0.85 + 0.14 * k as f64 / (n - 1) as f64);
                (t, (slope * (t - tc)).max(0.0))
            })
            .collect();
        TransportCurve::new("film".into(), pts, 1.0).unwrap()
    }

    #[test]
    fn slope_recovered_exactly_on_linear_data() {
        let curve = linear_bc2(9.25, -0.26, 40);
        let slope = fit_bc2_slope(&curve, 9.25).unwrap();
        assert!((slope + 0.26).abs() < 1e-10, "slope = {slope}");
    }

    #[test]
    fn slope_monte_carlo_with_field_noise() {
        let mut ok = 0;
        for seed in 0..50 {
            let mut rng = ChaCha8Rng::seed_from_u64(400 + seed);
            let mut curve = linear_bc2(9.25, -0.26, 40);
            for p in curve.bc2_vs_t.iter_mut() {
                let z: f64 = rng.sample(rand_distr::StandardNormal);
                p.1 = (p.1 + 0.01 * z).max(0.0);
            }
            let slope = fit_bc2_slope(&curve, 9.25).unwrap();
            if (slope + 0.26).abs() <= 0.05 * 0.26 {
                ok += 1;
            }
        }
        assert!(ok >= 45, "only {ok}/50 slopes within 5%");
    }

    #[test]
    fn too_few_near_tc_points() {
        let pts = vec![(8.0, 0.3), (9.0, 0.1), (9.2, 0.02)];
        let curve = TransportCurve::new("film".into(), pts, 1.0).unwrap();
        assert!(fit_bc2_slope(&curve, 9.25).is_err());
    }

    #[test]
    fn bc2_zero_examples() {
        assert_eq!(bc2_zero(9.25, 0.0), 0.0);
        assert!((bc2_zero(9.25, 0.26) - 1.65945).abs() < 1e-10);
        assert!((bc2_zero(9.25, -0.26) - 1.65945).abs() < 1e-10);
        assert!((bc2_zero(9.25, 0.52) - 2.0 * 1.65945).abs() < 1e-10);
    }

    #[test]
    fn coherence_length_examples() {
        let unit_field = FLUX_QUANTUM / (2.0 * std::f64::consts::PI);
        assert!((gl_coherence_length(unit_field).unwrap() - 1.0).abs() < 1e-12);
        let xi = gl_coherence_length(1.660).unwrap();
        assert!((xi - 14.08e-9).abs() < 0.05e-9, "xi = {xi:e}");
        let quarter = gl_coherence_length(4.0 * 1.660).unwrap();
        assert!((quarter - xi / 2.0).abs() < 1e-15);
    }

    #[test]
    fn mean_free_path_product_identity() {
        for rho in [0.1, 0.74, 1.1, 4.0, 25.0] {
            let l_cm = mean_free_path(rho).unwrap() * 1e2;
            assert!((l_cm * rho - RHO_MFP_PRODUCT).abs() < 1e-20);
        }
    }

    #[test]
    fn film_series_mean_free_paths() {
        let rhos = [4.0, 2.3, 1.1, 0.77, 0.74];
        let expected_nm = [9.0, 16.0, 34.0, 48.0, 50.0];
        for (rho, nm) in rhos.iter().zip(expected_nm) {
            let l_nm = mean_free_path(*rho).unwrap() * 1e9;
            assert_eq!(l_nm.round(), nm, "rho = {rho}: {l_nm} nm");
        }
    }

    #[test]
    fn characterize_film_end_to_end() {
        let r_curve = step_curve(9.25, 0.8, 0.002);
        let bc2 = linear_bc2(9.25, -0.26, 40);
        let film = characterize_film(&r_curve, &bc2).unwrap();
        assert!((film.t_c_k - 9.25).abs() < 0.01);
        assert!((film.bc2_zero_t - 1.659).abs() < 0.01);
        assert!((film.xi_gl_m - 14.1e-9).abs() < 0.1e-9);
        assert!((film.mean_free_path_m - 37.2e-9).abs() < 0.1e-9);
    }
}
