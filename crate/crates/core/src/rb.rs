//! Rubidium D1 vapour-cell absorption and the two spectroscopy experiments
//! run on the filtered source output.

use std::f64::consts::{LN_2, PI};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::consts::{ATOMIC_MASS_UNIT, BOLTZMANN, SPEED_OF_LIGHT, TORR, ZERO_CELSIUS};
use crate::filter::{fp_fsr, fp_transmission, FilterError, FpFilter};
use crate::plan::{solve_plan, FrequencyPlan, PlanError, PlanSettings, ReferenceFeature};
use crate::spectrum::ModePair;

const DEFAULT_RB_D1: &str = include_str!("../data/rb_d1.toml");

/// Temperature range accepted by the Doppler model (°C).
pub const DOPPLER_TEMPERATURE_RANGE_C: [f64; 2] = [0.0, 150.0];
/// Melting point of rubidium (K); selects the solid or liquid vapour-pressure branch.
pub const RB_MELTING_POINT_K: f64 = 312.46;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RbError {
    #[error("atomic data: {0}")]
    Parse(String),
    #[error("temperature {0} C outside [0, 150] C")]
    Temperature(f64),
    #[error("invalid cell: {0}")]
    InvalidCell(String),
    #[error("invalid scan: {0}")]
    InvalidScan(String),
    #[error("no data for isotope {0}")]
    UnknownIsotope(u32),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Filter(#[from] FilterError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Isotope {
    pub mass_number: u32,
    pub mass_amu: f64,
    pub abundance: f64,
    pub nuclear_spin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomicTransition {
    pub isotope: u32,
    /// Ground hyperfine level F.
    pub f: u32,
    /// Excited hyperfine level F'.
    pub f_prime: u32,
    /// Offset from the data set's reference frequency (Hz).
    pub offset_hz: f64,
    /// Relative strength; sums to 1 over F' for each ground F.
    pub strength: f64,
}

impl AtomicTransition {
    pub fn label(&self) -> String {
        format!("Rb{} F={}->F'={}", self.isotope, self.f, self.f_prime)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomicData {
    pub citation: String,
    pub version: String,
    pub reference_frequency_hz: f64,
    pub wavelength_m: f64,
    pub natural_linewidth_hz: f64,
    #[serde(rename = "isotope")]
    pub isotopes: Vec<Isotope>,
    #[serde(rename = "transition")]
    pub transitions: Vec<AtomicTransition>,
}

impl AtomicData {
    pub fn from_toml_str(text: &str) -> Result<Self, RbError> {
        let data: Self = toml::from_str(text).map_err(|e| RbError::Parse(e.to_string()))?;
        for t in &data.transitions {
            if !data.isotopes.iter().any(|i| i.mass_number == t.isotope) {
                return Err(RbError::UnknownIsotope(t.isotope));
            }
        }
        Ok(data)
    }

    pub fn load(path: &Path) -> Result<Self, RbError> {
        let text = std::fs::read_to_string(path).map_err(|e| RbError::Parse(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    /// The bundled D1 data set.
    pub fn rb_d1() -> Self {
        Self::from_toml_str(DEFAULT_RB_D1).expect("bundled Rb data parses")
    }

    pub fn isotope(&self, mass_number: u32) -> Result<&Isotope, RbError> {
        self.isotopes
            .iter()
            .find(|i| i.mass_number == mass_number)
            .ok_or(RbError::UnknownIsotope(mass_number))
    }

    pub fn frequency(&self, t: &AtomicTransition) -> f64 {
        self.reference_frequency_hz + t.offset_hz
    }

    pub fn find(&self, isotope: u32, f: u32, f_prime: u32) -> Option<&AtomicTransition> {
        self.transitions
            .iter()
            .find(|t| t.isotope == isotope && t.f == f && t.f_prime == f_prime)
    }

    /// Transitions from the upper ground hyperfine level of each isotope
    /// (87Rb F=2 and 85Rb F=3), sorted by frequency: the lines closest to the
    /// centre of the D1 manifold.
    pub fn central_lines(&self) -> Vec<&AtomicTransition> {
        let mut v: Vec<&AtomicTransition> = self
            .transitions
            .iter()
            .filter(|t| {
                self.isotope(t.isotope)
                    .map(|iso| t.f as f64 == iso.nuclear_spin + 0.5)
                    .unwrap_or(false)
            })
            .collect();
        v.sort_by(|a, b| a.offset_hz.total_cmp(&b.offset_hz));
        v
    }

    /// Saturated-absorption features: every transition plus the crossover
    /// midway between each pair sharing isotope and ground level.
    pub fn reference_features(&self) -> Vec<ReferenceFeature> {
        let mut out: Vec<ReferenceFeature> = self
            .transitions
            .iter()
            .map(|t| ReferenceFeature {
                name: t.label(),
                frequency_hz: self.frequency(t).round() as i64,
            })
            .collect();
        for (i, a) in self.transitions.iter().enumerate() {
            for b in &self.transitions[i + 1..] {
                if a.isotope == b.isotope && a.f == b.f && a.f_prime != b.f_prime {
                    let (lo, hi) = if a.f_prime < b.f_prime { (a, b) } else { (b, a) };
                    out.push(ReferenceFeature {
                        name: format!("Rb{} F={} CO {}-{}", a.isotope, a.f, lo.f_prime, hi.f_prime),
                        frequency_hz: (0.5 * (self.frequency(a) + self.frequency(b))).round() as i64,
                    });
                }
            }
        }
        out.sort_by_key(|f| f.frequency_hz);
        out
    }
}

/// Doppler FWHM `nu0 sqrt(8 ln2 k T / (m c^2))`.
pub fn doppler_fwhm(frequency_hz: f64, temperature_c: f64, mass_amu: f64) -> f64 {
    let t = temperature_c + ZERO_CELSIUS;
    let m = mass_amu * ATOMIC_MASS_UNIT;
    frequency_hz * (8.0 * LN_2 * BOLTZMANN * t / (m * SPEED_OF_LIGHT * SPEED_OF_LIGHT)).sqrt()
}

/// Area-normalized Gaussian Doppler profile (1/Hz) of `transition` at `probe_hz`.
pub fn doppler_profile(
    data: &AtomicData,
    transition: &AtomicTransition,
    temperature_c: f64,
    probe_hz: f64,
) -> Result<f64, RbError> {
    let [lo, hi] = DOPPLER_TEMPERATURE_RANGE_C;
    if !(temperature_c >= lo && temperature_c <= hi) {
        return Err(RbError::Temperature(temperature_c));
    }
    let iso = data.isotope(transition.isotope)?;
    let nu0 = data.frequency(transition);
    let sigma = doppler_fwhm(nu0, temperature_c, iso.mass_amu) / (8.0 * LN_2).sqrt();
    let x = (probe_hz - nu0) / sigma;
    Ok((-0.5 * x * x).exp() / (sigma * (2.0 * PI).sqrt()))
}

/// Saturated Rb vapour pressure (Pa): solid branch below the melting point,
/// liquid branch above.
pub fn vapor_pressure_pa(temperature_c: f64) -> f64 {
    let t = temperature_c + ZERO_CELSIUS;
    let log10_torr = if t < RB_MELTING_POINT_K {
        2.881 + 4.857 - 4215.0 / t
    } else {
        2.881 + 4.312 - 4040.0 / t
    };
    10f64.powf(log10_torr) * TORR
}

/// Total Rb atom number density (1/m^3) at saturation.
pub fn number_density(temperature_c: f64) -> f64 {
    vapor_pressure_pa(temperature_c) / (BOLTZMANN * (temperature_c + ZERO_CELSIUS))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VaporCell {
    pub length_cm: f64,
    pub temperature_c: f64,
    /// 85Rb fraction; 87Rb makes up the rest.
    pub abundance_85: f64,
    /// Multiplier on the saturated vapour density.
    pub density_scale: f64,
}

impl VaporCell {
    pub fn validate(&self) -> Result<(), RbError> {
        if !(self.length_cm > 0.0) {
            return Err(RbError::InvalidCell(format!("length {} cm", self.length_cm)));
        }
        if !(0.0..=1.0).contains(&self.abundance_85) {
            return Err(RbError::InvalidCell(format!("85Rb abundance {}", self.abundance_85)));
        }
        if !(self.density_scale >= 0.0) {
            return Err(RbError::InvalidCell(format!("density scale {}", self.density_scale)));
        }
        Ok(())
    }

    pub fn abundance_87(&self) -> f64 {
        1.0 - self.abundance_85
    }

    fn abundance(&self, isotope: u32) -> f64 {
        match isotope {
            85 => self.abundance_85,
            87 => self.abundance_87(),
            _ => 0.0,
        }
    }
}

/// Optical depth `-ln T` at `probe_hz`.
pub fn optical_depth(cell: &VaporCell, data: &AtomicData, probe_hz: f64) -> Result<f64, RbError> {
    cell.validate()?;
    let n = number_density(cell.temperature_c) * cell.density_scale;
    let gamma = 2.0 * PI * data.natural_linewidth_hz;
    let lambda2 = data.wavelength_m * data.wavelength_m;
    let mut od = 0.0;
    for t in &data.transitions {
        let iso = data.isotope(t.isotope)?;
        let population = (2.0 * t.f as f64 + 1.0) / (2.0 * (2.0 * iso.nuclear_spin + 1.0));
        let integrated = lambda2 / (8.0 * PI) * gamma * t.strength;
        let g = doppler_profile(data, t, cell.temperature_c, probe_hz)?;
        od += n * cell.abundance(t.isotope) * population * integrated * g;
    }
    Ok(od * cell.length_cm * 1e-2)
}

/// Beer-Lambert transmission through the cell (no saturation).
pub fn cell_transmission(cell: &VaporCell, data: &AtomicData, probe_hz: f64) -> Result<f64, RbError> {
    Ok((-optical_depth(cell, data, probe_hz)?).exp())
}

/// Smallest density scale for which the cell transmits less than `max_transmission`
/// everywhere in `[lo_hz, hi_hz]` (sampled every `step_hz`).
pub fn minimal_density_scale(
    cell: &VaporCell,
    data: &AtomicData,
    lo_hz: f64,
    hi_hz: f64,
    step_hz: f64,
    max_transmission: f64,
) -> Result<f64, RbError> {
    let n = ((hi_hz - lo_hz) / step_hz).ceil() as usize;
    let mut unit = *cell;
    unit.density_scale = 1.0;
    let min_od = (0..=n)
        .map(|k| optical_depth(&unit, data, (lo_hz + k as f64 * step_hz).min(hi_hz)))
        .try_fold(f64::INFINITY, |acc, od| od.map(|v| acc.min(v)))?;
    Ok(-max_transmission.ln() / min_od)
}

/// Centre and half-width of the window spanned by the central lines plus a margin
/// making it `width_hz` wide.
pub fn central_window(data: &AtomicData, width_hz: f64) -> (f64, f64) {
    let lines = data.central_lines();
    let lo = data.frequency(lines.first().expect("central lines"));
    let hi = data.frequency(lines.last().expect("central lines"));
    let centre = 0.5 * (lo + hi);
    (centre - 0.5 * width_hz, centre + 0.5 * width_hz)
}

/// Position of an offset inside a periodic scan window `[-fsr/2, fsr/2)`.
pub fn alias_position(offset_hz: f64, fsr_hz: f64) -> f64 {
    let x = offset_hz / fsr_hz;
    (x - x.round()) * fsr_hz
}

/// Singles versus filter detuning from `anchor_hz`: every pair is weighted by
/// the filter transmission at its signal frequency (periodic in FSR) and the
/// cell transmission.
pub fn filter_scan(
    pairs: &[ModePair],
    anchor_hz: f64,
    filter: &FpFilter,
    cell: &VaporCell,
    data: &AtomicData,
    scan: (f64, f64),
    step_hz: f64,
    background: f64,
) -> Result<Vec<(f64, f64)>, RbError> {
    let (start, stop) = scan;
    if !(stop > start && step_hz > 0.0) {
        return Err(RbError::InvalidScan(format!("{start}..{stop} step {step_hz}")));
    }
    if stop - start >= fp_fsr(filter) {
        return Err(RbError::InvalidScan(format!(
            "scan width {} Hz must be below the filter FSR {} Hz",
            stop - start,
            fp_fsr(filter)
        )));
    }
    let cell_t: Vec<f64> = pairs
        .iter()
        .map(|p| cell_transmission(cell, data, p.signal_hz))
        .collect::<Result<_, _>>()?;
    let n = ((stop - start) / step_hz).floor() as usize + 1;
    Ok((0..n)
        .into_par_iter()
        .map(|k| {
            let d = start + k as f64 * step_hz;
            let res = anchor_hz + d;
            let s: f64 = pairs
                .iter()
                .zip(&cell_t)
                .map(|(p, t)| p.weight * fp_transmission(filter, p.signal_hz - res) * t)
                .sum();
            (d, s + background)
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Arm {
    Signal,
    Idler,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectroscopyRow {
    pub arm: Arm,
    pub delta_nu_hz: f64,
    pub frequency_hz: f64,
    /// Photon transmission normalized to the far-detuned point.
    pub transmission: f64,
    /// Weak-laser transmission at the same frequency.
    pub laser_transmission: f64,
    pub filter_temperature_c: f64,
    pub reference: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectroscopySettings {
    pub plan: PlanSettings,
    /// Photon FWHM used to average the cell transmission; 0 disables averaging.
    pub photon_linewidth_hz: f64,
    /// Offset (from the data set reference) of the far-detuned normalization point.
    pub normalization_offset_hz: f64,
}

fn photon_transmission(cell: &VaporCell, data: &AtomicData, nu: f64, fwhm: f64) -> Result<f64, RbError> {
    if fwhm <= 0.0 {
        return cell_transmission(cell, data, nu);
    }
    let hw = 0.5 * fwhm;
    let n = 400;
    let span = 20.0 * hw;
    let (mut num, mut den) = (0.0, 0.0);
    for k in -n..=n {
        let d = span * k as f64 / n as f64;
        let w = 1.0 / (1.0 + (d / hw).powi(2));
        num += w * cell_transmission(cell, data, nu + d)?;
        den += w;
    }
    Ok(num / den)
}

/// Cell transmission of signal and idler photons for each `(signal_hz, delta_nu_hz)`.
///
/// Every point must admit a feasible frequency plan. The filter in each arm is
/// tuned to the photon being measured.
pub fn photon_spectroscopy(
    points: &[(f64, f64)],
    filter: &FpFilter,
    cell: &VaporCell,
    data: &AtomicData,
    settings: &SpectroscopySettings,
) -> Result<Vec<SpectroscopyRow>, RbError> {
    let features = data.reference_features();
    let norm_nu = data.reference_frequency_hz + settings.normalization_offset_hz;
    let norm = photon_transmission(cell, data, norm_nu, settings.photon_linewidth_hz)?;
    let mut rows = Vec::with_capacity(2 * points.len());
    for &(nu_s, dnu) in points {
        let target_s = nu_s.round() as i64;
        let target_i = (nu_s + dnu).round() as i64;
        let plan: FrequencyPlan = solve_plan(target_s, target_i, &features, &settings.plan)?;
        for (arm, nu) in [(Arm::Signal, plan.nu_signal as f64), (Arm::Idler, plan.nu_idler as f64)] {
            let t = photon_transmission(cell, data, nu, settings.photon_linewidth_hz)?;
            rows.push(SpectroscopyRow {
                arm,
                delta_nu_hz: plan.delta_nu as f64,
                frequency_hz: nu,
                transmission: t / norm,
                laser_transmission: cell_transmission(cell, data, nu)?,
                filter_temperature_c: filter.tuned_to(nu).temperature_c,
                reference: plan.reference.clone(),
            });
        }
    }
    Ok(rows)
}
