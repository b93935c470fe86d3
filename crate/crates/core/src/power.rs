//! Power calibration and photon-number conversion.
//!
//! The input-line attenuation is anchored to the thermal noise floor of the
//! cryogenic HEMT amplifier: with the VNA noise dominated by the HEMT, the
//! signal power at the HEMT while applying 0 dBm is
//!
//! ```text
//! P_noise  = k_B T_HEMT Δf                      [W]
//! V_noise  = √(P_noise · 50)                    [V rms]
//! P_HEMT,0 = 10 log10[ (V_noise · SNR)² / (50/1000) ]   [dBm]
//! ```
//!
//! and the on-chip power adds the fixed attenuation between HEMT and sample
//! (`post_sample_offset_db`, +2 dB for two circulators):
//! `P_on_chip = offset + P_HEMT,0 + P_applied`, so the line attenuation is
//! `Att = P_on_chip − P_applied`, independent of the applied power.
//!
//! Photon numbers follow from the circulating power
//! `P_in = P_on_chip · Q_int² Q_c / (π (Q_int + Q_c)²)` and
//! `n = P_in / (h f_r²)`.

use serde::{Deserialize, Serialize};

use crate::consts::{BOLTZMANN, PLANCK, SYSTEM_IMPEDANCE};
use crate::error::{Error, Result};

/// Thermal noise power k_B·T·Δf of the HEMT in watts.
pub fn hemt_noise_power(t_hemt_k: f64, if_bandwidth_hz: f64) -> Result<f64> {
    if !(t_hemt_k > 0.0) || !(if_bandwidth_hz > 0.0) {
        return Err(Error::ParameterDomain(
            "HEMT noise power needs positive temperature and bandwidth".into(),
        ));
    }
    Ok(BOLTZMANN * t_hemt_k * if_bandwidth_hz)
}

pub fn dbm_to_watt(p_dbm: f64) -> f64 {
    1e-3 * 10f64.powf(p_dbm / 10.0)
}

pub fn watt_to_dbm(p_w: f64) -> Result<f64> {
    if !(p_w > 0.0) {
        return Err(Error::ParameterDomain(format!(
            "cannot express non-positive power {p_w} W in dBm"
        )));
    }
    Ok(10.0 * (p_w / 1e-3).log10())
}

/// Photon flux P/(h·f) in photons per second.
pub fn photon_flux(p_w: f64, f_hz: f64) -> Result<f64> {
    if !(p_w >= 0.0) || !(f_hz > 0.0) {
        return Err(Error::ParameterDomain(
            "photon flux needs non-negative power and positive frequency".into(),
        ));
    }
    Ok(p_w / (PLANCK * f_hz))
}

/// Power circulating in the resonator for a given on-chip drive power.
pub fn circulating_power(p_on_chip_w: f64, q_int: f64, q_c: f64) -> Result<f64> {
    if !(p_on_chip_w >= 0.0) || !(q_int > 0.0) || !(q_c > 0.0) {
        return Err(Error::ParameterDomain(
            "circulating power needs non-negative power and positive quality factors".into(),
        ));
    }
    let sum = q_int + q_c;
    Ok(p_on_chip_w * q_int * q_int * q_c / (std::f64::consts::PI * sum * sum))
}

/// Mean intracavity photon number n = P_in/(h f_r²).
pub fn photon_number_linear(p_in_w: f64, f_r_hz: f64) -> Result<f64> {
    if !(p_in_w >= 0.0) || !(f_r_hz > 0.0) {
        return Err(Error::ParameterDomain(
            "photon number needs non-negative power and positive frequency".into(),
        ));
    }
    Ok(p_in_w / (PLANCK * f_r_hz * f_r_hz))
}

/// Frequency-dependent input-line calibration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CalibrationModel {
    pub hemt_noise_temperature_k: f64,
    pub if_bandwidth_hz: f64,
    /// Attenuation between the HEMT and the sample [dB]; on-chip power is
    /// higher than the HEMT-referenced power by this amount.
    pub post_sample_offset_db: f64,
    /// Piecewise-linear attenuation curve, (frequency [Hz], Att [dB]),
    /// sorted by frequency.
    attenuation_curve: Vec<(f64, f64)>,
}

impl CalibrationModel {
    pub fn new(
        hemt_noise_temperature_k: f64,
        if_bandwidth_hz: f64,
        post_sample_offset_db: f64,
    ) -> Result<Self> {
        if !(hemt_noise_temperature_k > 0.0) || !(if_bandwidth_hz > 0.0) {
            return Err(Error::ParameterDomain(
                "calibration needs positive HEMT temperature and IF bandwidth".into(),
            ));
        }
        Ok(CalibrationModel {
            hemt_noise_temperature_k,
            if_bandwidth_hz,
            post_sample_offset_db,
            attenuation_curve: Vec::new(),
        })
    }

    /// Install a precomputed attenuation curve (frequency [Hz] → dB).
    pub fn with_attenuation_curve(mut self, mut curve: Vec<(f64, f64)>) -> Result<Self> {
        if curve.is_empty() {
            return Err(Error::EmptyInput("attenuation curve".into()));
        }
        curve.sort_by(|a, b| a.0.total_cmp(&b.0));
        for w in curve.windows(2) {
            if w[1].0 == w[0].0 {
                return Err(Error::ParameterDomain(format!(
                    "duplicate frequency {} Hz in attenuation curve",
                    w[0].0
                )));
            }
        }
        self.attenuation_curve = curve;
        Ok(self)
    }

    pub fn attenuation_curve(&self) -> &[(f64, f64)] {
        &self.attenuation_curve
    }

    /// Interpolated attenuation [dB] at `f_hz`.
    pub fn attenuation_db_at(&self, f_hz: f64) -> Result<f64> {
        let curve = &self.attenuation_curve;
        if curve.is_empty() {
            return Err(Error::Lookup("no attenuation curve installed".into()));
        }
        if f_hz < curve[0].0 || f_hz > curve[curve.len() - 1].0 {
            return Err(Error::Lookup(format!(
                "frequency {f_hz} Hz outside calibrated range [{}, {}] Hz",
                curve[0].0,
                curve[curve.len() - 1].0
            )));
        }
        let idx = curve.partition_point(|&(f, _)| f < f_hz);
        if idx == 0 {
            return Ok(curve[0].1);
        }
        let (f0, a0) = curve[idx - 1];
        let (f1, a1) = curve[idx];
        if f_hz == f0 {
            return Ok(a0);
        }
        Ok(a0 + (a1 - a0) * (f_hz - f0) / (f1 - f0))
    }

    /// On-chip power for a given applied source power.
    pub fn on_chip_power_dbm(&self, f_hz: f64, applied_dbm: f64) -> Result<f64> {
        Ok(applied_dbm + self.attenuation_db_at(f_hz)?)
    }

    pub fn on_chip_power_w(&self, f_hz: f64, applied_dbm: f64) -> Result<f64> {
        Ok(dbm_to_watt(self.on_chip_power_dbm(f_hz, applied_dbm)?))
    }
}

/// Convert a measured linear-SNR spectrum (taken at 0 dBm applied power)
/// into the input-line attenuation curve.
pub fn calibrate_attenuation(
    snr_spectrum: &[(f64, f64)],
    cal: &CalibrationModel,
) -> Result<Vec<(f64, f64)>> {
    if snr_spectrum.is_empty() {
        return Err(Error::EmptyInput("SNR spectrum".into()));
    }
    let p_noise = hemt_noise_power(cal.hemt_noise_temperature_k, cal.if_bandwidth_hz)?;
    let v_noise = (p_noise * SYSTEM_IMPEDANCE).sqrt();
    let mut curve = Vec::with_capacity(snr_spectrum.len());
    for &(f_hz, snr) in snr_spectrum {
        if !(snr > 1.0) {
            return Err(Error::DataQuality(format!(
                "SNR {snr} at {f_hz} Hz is at or below the noise floor"
            )));
        }
        let v_signal = v_noise * snr;
        let p_hemt_0dbm = 10.0 * (v_signal * v_signal / (SYSTEM_IMPEDANCE / 1000.0)).log10();
        curve.push((f_hz, cal.post_sample_offset_db + p_hemt_0dbm));
    }
    curve.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(curve)
}
