//! Refractive index, group index and quasi-phase-matching for the KTP crystals.
//!
//! Indices follow a two-pole Sellmeier form with a polynomial thermo-optic
//! correction; coefficients are loaded from a versioned TOML data file
//! (`data/ktp_kato2002.toml` is compiled in as the default).

use std::f64::consts::PI;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::consts::{wavelength_um, SPEED_OF_LIGHT};

const DEFAULT_KTP: &str = include_str!("../data/ktp_kato2002.toml");

/// Crystal principal axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DispersionError {
    #[error("wavelength {wavelength_um} um outside the {axis}-axis model window [{min_um}, {max_um}] um")]
    WavelengthOutOfRange {
        axis: Axis,
        wavelength_um: f64,
        min_um: f64,
        max_um: f64,
    },
    #[error("temperature {temperature_c} C outside the {axis}-axis model window [{min_c}, {max_c}] C")]
    TemperatureOutOfRange {
        axis: Axis,
        temperature_c: f64,
        min_c: f64,
        max_c: f64,
    },
    #[error("axis {0} not present in the coefficient file")]
    MissingAxis(Axis),
    #[error("coefficient file: {0}")]
    Parse(String),
    #[error("invalid poling: {0}")]
    InvalidPoling(String),
    #[error("no phase-matching temperature in [{low_c}, {high_c}] C")]
    NoPhaseMatching { low_c: f64, high_c: f64 },
    #[error("phase matching is not peaked near degeneracy (efficiency {efficiency} at centre)")]
    NotPhaseMatched { efficiency: f64 },
}

/// Sellmeier + thermo-optic model for one polarization axis.
///
/// `n^2 = constant + sum_j B_j / (lambda^2 - C_j)` with `lambda` in micrometres,
/// plus `dn/dT * (T - reference_temperature_c)` where `dn/dT` is a polynomial in
/// `1/lambda`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SellmeierModel {
    pub axis: Axis,
    pub constant: f64,
    /// `[B_j, C_j]` pairs, `C_j` in um^2.
    pub poles: Vec<[f64; 2]>,
    /// Coefficients of `1/lambda^k`, highest power first, ending with the constant term.
    pub thermo_optic: Vec<f64>,
    pub thermo_optic_scale: f64,
    pub reference_temperature_c: f64,
    pub wavelength_window_um: [f64; 2],
    pub temperature_window_c: [f64; 2],
}

impl SellmeierModel {
    /// Index that does not depend on wavelength or temperature. Used as a mock medium.
    pub fn constant_index(axis: Axis, index: f64) -> Self {
        Self {
            axis,
            constant: index * index,
            poles: Vec::new(),
            thermo_optic: vec![0.0],
            thermo_optic_scale: 0.0,
            reference_temperature_c: 25.0,
            wavelength_window_um: [0.2, 5.0],
            temperature_window_c: [-273.15, 1000.0],
        }
    }

    fn check(&self, wavelength_um: f64, temperature_c: f64) -> Result<(), DispersionError> {
        let [lo, hi] = self.wavelength_window_um;
        if !(wavelength_um >= lo && wavelength_um <= hi) {
            return Err(DispersionError::WavelengthOutOfRange {
                axis: self.axis,
                wavelength_um,
                min_um: lo,
                max_um: hi,
            });
        }
        let [tlo, thi] = self.temperature_window_c;
        if !(temperature_c >= tlo && temperature_c <= thi) {
            return Err(DispersionError::TemperatureOutOfRange {
                axis: self.axis,
                temperature_c,
                min_c: tlo,
                max_c: thi,
            });
        }
        Ok(())
    }

    fn n_squared(&self, lam: f64) -> f64 {
        let l2 = lam * lam;
        self.constant + self.poles.iter().map(|[b, c]| b / (l2 - c)).sum::<f64>()
    }

    fn dn_squared_dlambda(&self, lam: f64) -> f64 {
        let l2 = lam * lam;
        self.poles
            .iter()
            .map(|[b, c]| {
                let d = l2 - c;
                -2.0 * b * lam / (d * d)
            })
            .sum()
    }

    /// `dn/dT` at the given wavelength (1/K).
    pub fn thermo_optic_coefficient(&self, lam: f64) -> f64 {
        let top = self.thermo_optic.len().saturating_sub(1) as i32;
        self.thermo_optic_scale
            * self
                .thermo_optic
                .iter()
                .enumerate()
                .map(|(j, c)| c * lam.powi(-(top - j as i32)))
                .sum::<f64>()
    }

    fn dthermo_dlambda(&self, lam: f64) -> f64 {
        let top = self.thermo_optic.len().saturating_sub(1) as i32;
        self.thermo_optic_scale
            * self
                .thermo_optic
                .iter()
                .enumerate()
                .map(|(j, c)| {
                    let k = top - j as i32;
                    -(k as f64) * c * lam.powi(-k - 1)
                })
                .sum::<f64>()
    }

    fn index_unchecked(&self, lam: f64, temperature_c: f64) -> f64 {
        self.n_squared(lam).sqrt()
            + self.thermo_optic_coefficient(lam) * (temperature_c - self.reference_temperature_c)
    }

    fn dn_dlambda(&self, lam: f64, temperature_c: f64) -> f64 {
        let n0 = self.n_squared(lam).sqrt();
        self.dn_squared_dlambda(lam) / (2.0 * n0)
            + self.dthermo_dlambda(lam) * (temperature_c - self.reference_temperature_c)
    }
}

/// Refractive index `n(lambda, T)`; wavelength in micrometres, temperature in °C.
pub fn refractive_index(
    model: &SellmeierModel,
    wavelength_um: f64,
    temperature_c: f64,
) -> Result<f64, DispersionError> {
    model.check(wavelength_um, temperature_c)?;
    Ok(model.index_unchecked(wavelength_um, temperature_c))
}

/// Group index `n - lambda dn/dlambda`, from the analytic Sellmeier derivative.
pub fn group_index(
    model: &SellmeierModel,
    wavelength_um: f64,
    temperature_c: f64,
) -> Result<f64, DispersionError> {
    model.check(wavelength_um, temperature_c)?;
    Ok(model.index_unchecked(wavelength_um, temperature_c)
        - wavelength_um * model.dn_dlambda(wavelength_um, temperature_c))
}

#[derive(Debug, Deserialize)]
struct RawAxis {
    name: Axis,
    constant: f64,
    poles: Vec<[f64; 2]>,
    thermo_optic: Vec<f64>,
}

#[derive(Debug, Deserialize)]
struct RawSellmeierFile {
    name: String,
    citation: String,
    version: String,
    reference_temperature_c: f64,
    wavelength_window_um: [f64; 2],
    temperature_window_c: [f64; 2],
    thermo_optic_scale: f64,
    axis: Vec<RawAxis>,
}

/// A parsed coefficient file: one [`SellmeierModel`] per axis plus provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct SellmeierData {
    pub name: String,
    pub citation: String,
    pub version: String,
    models: Vec<SellmeierModel>,
}

impl SellmeierData {
    pub fn from_toml_str(text: &str) -> Result<Self, DispersionError> {
        let raw: RawSellmeierFile =
            toml::from_str(text).map_err(|e| DispersionError::Parse(e.to_string()))?;
        if raw.wavelength_window_um[0] >= raw.wavelength_window_um[1] {
            return Err(DispersionError::Parse("empty wavelength window".into()));
        }
        let models = raw
            .axis
            .into_iter()
            .map(|a| SellmeierModel {
                axis: a.name,
                constant: a.constant,
                poles: a.poles,
                thermo_optic: a.thermo_optic,
                thermo_optic_scale: raw.thermo_optic_scale,
                reference_temperature_c: raw.reference_temperature_c,
                wavelength_window_um: raw.wavelength_window_um,
                temperature_window_c: raw.temperature_window_c,
            })
            .collect();
        Ok(Self {
            name: raw.name,
            citation: raw.citation,
            version: raw.version,
            models,
        })
    }

    pub fn load(path: &Path) -> Result<Self, DispersionError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| DispersionError::Parse(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    /// The bundled KTP data set.
    pub fn ktp() -> Self {
        Self::from_toml_str(DEFAULT_KTP).expect("bundled KTP coefficients parse")
    }

    pub fn axis(&self, axis: Axis) -> Result<&SellmeierModel, DispersionError> {
        self.models
            .iter()
            .find(|m| m.axis == axis)
            .ok_or(DispersionError::MissingAxis(axis))
    }
}

/// Periodic-poling geometry of the nonlinear crystal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolingSpec {
    pub period_um: f64,
    pub length_mm: f64,
    pub temperature_c: f64,
}

impl PolingSpec {
    pub fn new(period_um: f64, length_mm: f64, temperature_c: f64) -> Result<Self, DispersionError> {
        if !(period_um > 0.0) {
            return Err(DispersionError::InvalidPoling(format!("period {period_um} um")));
        }
        if !(length_mm > 0.0) {
            return Err(DispersionError::InvalidPoling(format!("length {length_mm} mm")));
        }
        Ok(Self {
            period_um,
            length_mm,
            temperature_c,
        })
    }
}

/// Index models seen by each of the three interacting waves.
///
/// Type-II: pump and signal share a polarization, the idler is orthogonal.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveAxes {
    pub pump: SellmeierModel,
    pub signal: SellmeierModel,
    pub idler: SellmeierModel,
}

impl WaveAxes {
    pub fn from_data(
        data: &SellmeierData,
        pump: Axis,
        signal: Axis,
        idler: Axis,
    ) -> Result<Self, DispersionError> {
        Ok(Self {
            pump: data.axis(pump)?.clone(),
            signal: data.axis(signal)?.clone(),
            idler: data.axis(idler)?.clone(),
        })
    }
}

fn wavenumber(model: &SellmeierModel, frequency_hz: f64, temperature_c: f64) -> Result<f64, DispersionError> {
    let n = refractive_index(model, wavelength_um(frequency_hz), temperature_c)?;
    Ok(2.0 * PI * n * frequency_hz / SPEED_OF_LIGHT)
}

fn bulk_mismatch(
    pump_hz: f64,
    signal_hz: f64,
    idler_hz: f64,
    temperature_c: f64,
    models: &WaveAxes,
) -> Result<f64, DispersionError> {
    Ok(wavenumber(&models.pump, pump_hz, temperature_c)?
        - wavenumber(&models.signal, signal_hz, temperature_c)?
        - wavenumber(&models.idler, idler_hz, temperature_c)?)
}

/// Wave-vector mismatch `k_p - k_s - k_i - 2 pi / period` in 1/m.
///
/// The caller is responsible for `pump = signal + idler`.
pub fn phase_mismatch(
    pump_hz: f64,
    signal_hz: f64,
    idler_hz: f64,
    poling: &PolingSpec,
    models: &WaveAxes,
) -> Result<f64, DispersionError> {
    debug_assert!((pump_hz - signal_hz - idler_hz).abs() <= 1.0);
    Ok(bulk_mismatch(pump_hz, signal_hz, idler_hz, poling.temperature_c, models)?
        - 2.0 * PI / (poling.period_um * 1e-6))
}

/// Crystal temperature at which `phase_mismatch` vanishes for the given waves.
///
/// Bisection over the dispersion model's temperature window.
pub fn solve_phase_matching_temperature(
    pump_hz: f64,
    signal_hz: f64,
    poling: &PolingSpec,
    models: &WaveAxes,
) -> Result<f64, DispersionError> {
    let idler_hz = pump_hz - signal_hz;
    let [lo, hi] = models.pump.temperature_window_c;
    let f = |t: f64| {
        let p = PolingSpec {
            temperature_c: t,
            ..*poling
        };
        phase_mismatch(pump_hz, signal_hz, idler_hz, &p, models)
    };
    let (mut a, mut b) = (lo, hi);
    let (mut fa, fb) = (f(a)?, f(b)?);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(DispersionError::NoPhaseMatching { low_c: lo, high_c: hi });
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        let fm = f(m)?;
        if fm == 0.0 || (b - a) < 1e-12 {
            return Ok(m);
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

/// `sinc^2(x) = (sin x / x)^2`.
pub fn sinc_squared(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        let s = 1.0 - x2 / 6.0 + x2 * x2 / 120.0;
        s * s
    } else {
        let s = x.sin() / x;
        s * s
    }
}

/// Spectral phase-matching efficiency seen along the energy-conservation line.
///
/// Implementors receive the pump and signal frequency; the idler is always
/// `pump - signal`.
pub trait PhaseMatch: fmt::Debug + Send + Sync {
    fn efficiency(&self, pump_hz: f64, signal_hz: f64) -> f64;
}

/// Phase matching with infinite bandwidth (efficiency 1 everywhere).
#[derive(Debug, Clone, Copy, Default)]
pub struct FlatPhaseMatching;

impl PhaseMatch for FlatPhaseMatching {
    fn efficiency(&self, _pump_hz: f64, _signal_hz: f64) -> f64 {
        1.0
    }
}

/// Periodically poled crystal evaluated with the full dispersion model.
///
/// In raw mode the grating period and interaction length are the physical
/// ones. [`QpmCrystal::calibrated`] replaces them with an effective period
/// (phase matching exactly at degeneracy at the crystal temperature) and an
/// effective length (a prescribed sinc^2 FWHM).
#[derive(Debug, Clone, PartialEq)]
pub struct QpmCrystal {
    pub axes: WaveAxes,
    pub poling: PolingSpec,
    pub effective_period_um: f64,
    pub effective_length_mm: f64,
}

impl QpmCrystal {
    pub fn new(axes: WaveAxes, poling: PolingSpec) -> Self {
        Self {
            effective_period_um: poling.period_um,
            effective_length_mm: poling.length_mm,
            axes,
            poling,
        }
    }

    /// Mismatch (1/m) for a signal frequency on the energy-conservation line.
    pub fn phase_mismatch(&self, pump_hz: f64, signal_hz: f64) -> Result<f64, DispersionError> {
        let idler_hz = pump_hz - signal_hz;
        Ok(bulk_mismatch(pump_hz, signal_hz, idler_hz, self.poling.temperature_c, &self.axes)?
            - 2.0 * PI / (self.effective_period_um * 1e-6))
    }

    pub fn try_efficiency(&self, pump_hz: f64, signal_hz: f64) -> Result<f64, DispersionError> {
        let dk = self.phase_mismatch(pump_hz, signal_hz)?;
        Ok(sinc_squared(dk * self.effective_length_mm * 1e-3 / 2.0))
    }

    /// Grating period that phase-matches the degenerate pair at the crystal temperature.
    pub fn with_degenerate_period(mut self, pump_hz: f64) -> Result<Self, DispersionError> {
        let half = pump_hz / 2.0;
        let dk = bulk_mismatch(pump_hz, half, pump_hz - half, self.poling.temperature_c, &self.axes)?;
        self.effective_period_um = 2.0 * PI / dk * 1e6;
        Ok(self)
    }

    /// FWHM (Hz, in signal frequency) of the efficiency around degeneracy.
    pub fn fwhm(&self, pump_hz: f64) -> Result<f64, DispersionError> {
        let centre = pump_hz / 2.0;
        let peak = self.try_efficiency(pump_hz, centre)?;
        if peak < 0.5 {
            return Err(DispersionError::NotPhaseMatched { efficiency: peak });
        }
        let half = |sign: f64| -> Result<f64, DispersionError> {
            let step = 1e9;
            let mut inner = 0.0;
            let mut outer = step;
            while self.try_efficiency(pump_hz, centre + sign * outer)? >= 0.5 * peak {
                inner = outer;
                outer += step;
            }
            for _ in 0..60 {
                let mid = 0.5 * (inner + outer);
                if self.try_efficiency(pump_hz, centre + sign * mid)? >= 0.5 * peak {
                    inner = mid;
                } else {
                    outer = mid;
                }
            }
            Ok(0.5 * (inner + outer))
        };
        Ok(half(1.0)? + half(-1.0)?)
    }

    /// Effective length chosen so the efficiency FWHM equals `target_fwhm_hz`.
    ///
    /// The sinc^2 argument is proportional to length, so the FWHM scales as 1/L.
    pub fn with_fwhm(mut self, pump_hz: f64, target_fwhm_hz: f64) -> Result<Self, DispersionError> {
        let current = self.fwhm(pump_hz)?;
        self.effective_length_mm *= current / target_fwhm_hz;
        Ok(self)
    }

    /// Effective period for degeneracy, then effective length for the target FWHM.
    pub fn calibrated(self, pump_hz: f64, target_fwhm_hz: f64) -> Result<Self, DispersionError> {
        self.with_degenerate_period(pump_hz)?
            .with_fwhm(pump_hz, target_fwhm_hz)
    }
}

impl PhaseMatch for QpmCrystal {
    /// Outside the dispersion window the crystal does not phase-match (0).
    fn efficiency(&self, pump_hz: f64, signal_hz: f64) -> f64 {
        self.try_efficiency(pump_hz, signal_hz).unwrap_or(0.0)
    }
}
