//! Bow-tie ring cavity: per-polarization FSR, finesse, decay rate and the Airy
//! enhancement factor.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::consts::SPEED_OF_LIGHT;
use crate::dispersion::{group_index, refractive_index, DispersionError, SellmeierModel};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CavityError {
    #[error(transparent)]
    Dispersion(#[from] DispersionError),
    #[error("invalid cavity: {0}")]
    Invalid(String),
    #[error("cavity has no region with role {0:?}")]
    MissingRegion(RegionRole),
}

/// Which of the two down-converted fields a quantity refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarization {
    Signal,
    Idler,
}

/// Optical medium filling a region.
#[derive(Debug, Clone, PartialEq)]
pub enum Medium {
    /// `n = n_g = 1`. Air is treated as vacuum.
    Vacuum,
    /// Birefringent crystal: separate index models for the signal and idler polarizations.
    Crystal {
        signal: SellmeierModel,
        idler: SellmeierModel,
    },
    /// Wavelength- and polarization-independent medium.
    Uniform { index: f64, group_index: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegionRole {
    Spdc,
    Tuning,
    Air,
    Other,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CavityRegion {
    pub name: String,
    pub role: RegionRole,
    pub length_mm: f64,
    pub temperature_c: f64,
    pub medium: Medium,
}

impl CavityRegion {
    pub fn air(name: &str, length_mm: f64) -> Self {
        Self {
            name: name.to_string(),
            role: RegionRole::Air,
            length_mm,
            temperature_c: 25.0,
            medium: Medium::Vacuum,
        }
    }

    fn is_crystal(&self) -> bool {
        matches!(self.medium, Medium::Crystal { .. })
    }

    fn indices(
        &self,
        pol: Polarization,
        wavelength_um: f64,
        offset: f64,
    ) -> Result<(f64, f64), DispersionError> {
        match &self.medium {
            Medium::Vacuum => Ok((1.0, 1.0)),
            Medium::Uniform { index, group_index } => Ok((*index, *group_index)),
            Medium::Crystal { signal, idler } => {
                let m = match pol {
                    Polarization::Signal => signal,
                    Polarization::Idler => idler,
                };
                Ok((
                    refractive_index(m, wavelength_um, self.temperature_c)? + offset,
                    group_index(m, wavelength_um, self.temperature_c)? + offset,
                ))
            }
        }
    }
}

/// Additive index offsets applied to every crystal region, per polarization.
///
/// Chosen so the cavity reproduces measured free spectral ranges; see
/// [`RingCavity::calibrate`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupIndexCalibration {
    pub signal_offset: f64,
    pub idler_offset: f64,
}

impl GroupIndexCalibration {
    fn offset(&self, pol: Polarization) -> f64 {
        match pol {
            Polarization::Signal => self.signal_offset,
            Polarization::Idler => self.idler_offset,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RingCavity {
    /// Regions in round-trip order.
    pub regions: Vec<CavityRegion>,
    pub outcoupler_transmission: f64,
    /// Round-trip power loss other than the outcoupler (crystal faces, mirrors).
    pub residual_loss: f64,
    pub calibration: Option<GroupIndexCalibration>,
}

impl RingCavity {
    pub fn new(
        regions: Vec<CavityRegion>,
        outcoupler_transmission: f64,
        residual_loss: f64,
    ) -> Result<Self, CavityError> {
        if regions.is_empty() {
            return Err(CavityError::Invalid("no regions".into()));
        }
        if let Some(r) = regions.iter().find(|r| !(r.length_mm > 0.0)) {
            return Err(CavityError::Invalid(format!(
                "region '{}' has length {} mm",
                r.name, r.length_mm
            )));
        }
        if !(outcoupler_transmission > 0.0 && outcoupler_transmission < 1.0) {
            return Err(CavityError::Invalid(format!(
                "outcoupler transmission {outcoupler_transmission} not in (0, 1)"
            )));
        }
        if !(0.0..1.0).contains(&residual_loss) {
            return Err(CavityError::Invalid(format!(
                "residual loss {residual_loss} not in [0, 1)"
            )));
        }
        Ok(Self {
            regions,
            outcoupler_transmission,
            residual_loss,
            calibration: None,
        })
    }

    fn offset(&self, pol: Polarization, use_calibration: bool) -> f64 {
        match (use_calibration, self.calibration) {
            (true, Some(c)) => c.offset(pol),
            _ => 0.0,
        }
    }

    /// Round-trip (phase, group) optical path in metres.
    pub fn optical_paths(
        &self,
        pol: Polarization,
        wavelength_um: f64,
        use_calibration: bool,
    ) -> Result<(f64, f64), CavityError> {
        let mut phase = 0.0;
        let mut group = 0.0;
        for r in &self.regions {
            let off = if r.is_crystal() {
                self.offset(pol, use_calibration)
            } else {
                0.0
            };
            let (n, ng) = r.indices(pol, wavelength_um, off)?;
            phase += n * r.length_mm * 1e-3;
            group += ng * r.length_mm * 1e-3;
        }
        Ok((phase, group))
    }

    pub fn region_mut(&mut self, role: RegionRole) -> Result<&mut CavityRegion, CavityError> {
        self.regions
            .iter_mut()
            .find(|r| r.role == role)
            .ok_or(CavityError::MissingRegion(role))
    }

    pub fn region(&self, role: RegionRole) -> Result<&CavityRegion, CavityError> {
        self.regions
            .iter()
            .find(|r| r.role == role)
            .ok_or(CavityError::MissingRegion(role))
    }

    fn crystal_length_m(&self) -> f64 {
        self.regions
            .iter()
            .filter(|r| r.is_crystal())
            .map(|r| r.length_mm * 1e-3)
            .sum()
    }

    /// Sets the per-polarization crystal index offsets so the calibrated FSRs
    /// equal `mean_hz ± delta_hz / 2` (signal gets the larger FSR for positive `delta_hz`).
    pub fn calibrate(
        &mut self,
        wavelength_um: f64,
        mean_hz: f64,
        delta_hz: f64,
    ) -> Result<GroupIndexCalibration, CavityError> {
        let lc = self.crystal_length_m();
        if lc <= 0.0 {
            return Err(CavityError::Invalid("calibration needs a crystal region".into()));
        }
        let solve = |pol, target: f64| -> Result<f64, CavityError> {
            let (_, raw) = self.optical_paths(pol, wavelength_um, false)?;
            Ok((SPEED_OF_LIGHT / target - raw) / lc)
        };
        let cal = GroupIndexCalibration {
            signal_offset: solve(Polarization::Signal, mean_hz + delta_hz / 2.0)?,
            idler_offset: solve(Polarization::Idler, mean_hz - delta_hz / 2.0)?,
        };
        self.calibration = Some(cal);
        Ok(cal)
    }

    /// Length of the air region that gives the requested uncalibrated mean FSR.
    pub fn solve_air_length(&self, wavelength_um: f64, mean_hz: f64) -> Result<f64, CavityError> {
        let mut trial = self.clone();
        let mean_at = |cav: &mut RingCavity, len: f64| -> Result<f64, CavityError> {
            cav.region_mut(RegionRole::Air)?.length_mm = len;
            let (s, i) = fsr_pair(cav, wavelength_um, false)?;
            Ok(0.5 * (s + i))
        };
        let (mut lo, mut hi) = (1e-6, 1e5);
        if mean_at(&mut trial, lo)? < mean_hz || mean_at(&mut trial, hi)? > mean_hz {
            return Err(CavityError::Invalid(format!(
                "mean FSR {mean_hz} Hz not reachable by changing the air length"
            )));
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mean_at(&mut trial, mid)? > mean_hz {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

/// Free spectral range `c / sum(n_g L)` for one polarization.
pub fn fsr(
    cavity: &RingCavity,
    pol: Polarization,
    wavelength_um: f64,
    use_calibration: bool,
) -> Result<f64, CavityError> {
    let (_, group) = cavity.optical_paths(pol, wavelength_um, use_calibration)?;
    Ok(SPEED_OF_LIGHT / group)
}

/// `(FSR_s, FSR_i)`.
pub fn fsr_pair(
    cavity: &RingCavity,
    wavelength_um: f64,
    use_calibration: bool,
) -> Result<(f64, f64), CavityError> {
    Ok((
        fsr(cavity, Polarization::Signal, wavelength_um, use_calibration)?,
        fsr(cavity, Polarization::Idler, wavelength_um, use_calibration)?,
    ))
}

/// Finesse `2 pi / (round-trip fractional loss)`.
pub fn finesse(cavity: &RingCavity) -> Result<f64, CavityError> {
    let loss = cavity.outcoupler_transmission + cavity.residual_loss;
    if !(loss > 0.0 && loss < 1.0) {
        return Err(CavityError::Invalid(format!(
            "total round-trip loss {loss} must be in (0, 1)"
        )));
    }
    Ok(2.0 * PI / loss)
}

/// Finesse and power decay rate `gamma = 2 pi FSR_mean / F` (rad/s).
pub fn finesse_and_decay(
    cavity: &RingCavity,
    wavelength_um: f64,
    use_calibration: bool,
) -> Result<(f64, f64), CavityError> {
    let f = finesse(cavity)?;
    let (s, i) = fsr_pair(cavity, wavelength_um, use_calibration)?;
    Ok((f, 2.0 * PI * 0.5 * (s + i) / f))
}

/// Equally spaced resonances `anchor + m * fsr`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeComb {
    pub anchor_hz: f64,
    pub fsr_hz: f64,
}

impl ModeComb {
    pub fn new(anchor_hz: f64, fsr_hz: f64) -> Self {
        assert!(fsr_hz > 0.0, "comb FSR must be positive");
        Self { anchor_hz, fsr_hz }
    }

    pub fn resonance(&self, m: i64) -> f64 {
        self.anchor_hz + m as f64 * self.fsr_hz
    }

    pub fn nearest_index(&self, frequency_hz: f64) -> i64 {
        ((frequency_hz - self.anchor_hz) / self.fsr_hz).round() as i64
    }

    /// Detuning from the nearest resonance in units of FSR, in `[-0.5, 0.5]`.
    pub fn phase(&self, frequency_hz: f64) -> f64 {
        let x = (frequency_hz - self.anchor_hz) / self.fsr_hz;
        x - x.round()
    }
}

/// Normalized Airy enhancement `1 / (1 + (2F/pi)^2 sin^2(pi (nu - anchor) / FSR))`.
pub fn airy_weight(comb: &ModeComb, finesse: f64, frequency_hz: f64) -> f64 {
    let s = (PI * comb.phase(frequency_hz)).sin();
    let k = 2.0 * finesse / PI;
    1.0 / (1.0 + k * k * s * s)
}

/// `sqrt(sqrt(2) - 1)`: single-photon FWHM in units of the cavity power decay rate.
pub const PHOTON_LINEWIDTH_FACTOR: f64 = 0.643_594_252_905_582_6;

/// Photon FWHM (Hz) for a cavity power decay rate `gamma` (rad/s).
pub fn photon_linewidth_hz(gamma: f64) -> f64 {
    PHOTON_LINEWIDTH_FACTOR * gamma / (2.0 * PI)
}
