//! Physical constants (SI, CODATA 2018 exact where defined).

/// Speed of light in vacuum (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// Boltzmann constant (J/K).
pub const BOLTZMANN: f64 = 1.380_649e-23;
/// Unified atomic mass unit (kg).
pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_066_60e-27;
/// One torr in pascal.
pub const TORR: f64 = 133.322_368_421;
/// 0 °C in kelvin.
pub const ZERO_CELSIUS: f64 = 273.15;

/// Vacuum wavelength in micrometres for an optical frequency in hertz.
pub fn wavelength_um(frequency_hz: f64) -> f64 {
    SPEED_OF_LIGHT / frequency_hz * 1e6
}

/// Optical frequency in hertz for a vacuum wavelength in micrometres.
pub fn frequency_hz(wavelength_um: f64) -> f64 {
    SPEED_OF_LIGHT / (wavelength_um * 1e-6)
}
