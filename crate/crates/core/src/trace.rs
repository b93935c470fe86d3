//! Measured (or synthesized) complex transmission traces.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_TRACE_POINTS: usize = 32;

/// Resonator and wafer labels carried along with each trace.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceMeta {
    pub resonator_id: String,
    pub wafer_id: String,
}

/// A frequency-ordered complex S21 sweep at one applied power and one stage
/// temperature.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexTrace {
    pub freqs_hz: Vec<f64>,
    pub s21: Vec<Complex64>,
    pub applied_power_dbm: f64,
    pub stage_temperature_k: f64,
    pub meta: TraceMeta,
}

impl ComplexTrace {
    pub fn new(
        freqs_hz: Vec<f64>,
        s21: Vec<Complex64>,
        applied_power_dbm: f64,
        stage_temperature_k: f64,
        meta: TraceMeta,
    ) -> Result<Self> {
        if freqs_hz.len() != s21.len() {
            return Err(Error::ParameterDomain(format!(
                "frequency and S21 arrays differ in length ({} vs {})",
                freqs_hz.len(),
                s21.len()
            )));
        }
        if freqs_hz.len() < MIN_TRACE_POINTS {
            return Err(Error::ParameterDomain(format!(
                "trace needs at least {MIN_TRACE_POINTS} points, got {}",
                freqs_hz.len()
            )));
        }
        for w in freqs_hz.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::ParameterDomain(format!(
                    "frequencies must be strictly increasing ({} then {})",
                    w[0], w[1]
                )));
            }
        }
        if !freqs_hz[0].is_finite() || freqs_hz[0] <= 0.0 {
            return Err(Error::ParameterDomain(
                "frequencies must be finite and positive".into(),
            ));
        }
        Ok(ComplexTrace {
            freqs_hz,
            s21,
            applied_power_dbm,
            stage_temperature_k,
            meta,
        })
    }

    pub fn len(&self) -> usize {
        self.freqs_hz.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freqs_hz.is_empty()
    }

    /// Swept span [Hz].
    pub fn span_hz(&self) -> f64 {
        self.freqs_hz[self.len() - 1] - self.freqs_hz[0]
    }
}
