//! Physical constants (SI; 2019 redefinition exact values where applicable).

/// Boltzmann constant [J/K].
pub const BOLTZMANN: f64 = 1.380_649e-23;

/// Planck constant [J s].
pub const PLANCK: f64 = 6.626_070_15e-34;

/// Magnetic flux quantum h/2e [Wb].
pub const FLUX_QUANTUM: f64 = 2.067_833_848e-15;

/// Reference impedance of the measurement chain [Ω].
pub const SYSTEM_IMPEDANCE: f64 = 50.0;
