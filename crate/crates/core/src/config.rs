//! Run configuration: one TOML document with a section per module.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cavity::{CavityRegion, Medium, RegionRole, RingCavity};
use crate::consts::wavelength_um;
use crate::correlation::G2Model;
use crate::dispersion::{
    Axis, DispersionError, FlatPhaseMatching, PhaseMatch, PolingSpec, QpmCrystal, SellmeierData, WaveAxes,
};
use crate::filter::{DesignConstraints, FpFilter};
use crate::plan::PlanSettings;
use crate::rb::{AtomicData, VaporCell};
use crate::spectrum::SourceConfig;
use crate::Error;

pub const PAPER_2020: &str = include_str!("../data/paper-2020.toml");

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("cannot read {path}: {message}")]
    Read { path: PathBuf, message: String },
    #[error("unknown preset '{0}' (available: paper-2020)")]
    UnknownPreset(String),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PhaseMatchingKind {
    /// Effective period and length fitted to degeneracy and `pm_fwhm_hz`.
    Calibrated,
    /// Physical grating period and crystal length.
    Raw,
    Flat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceSection {
    /// Frequency of the locked signal mode (Hz).
    pub signal_anchor_hz: f64,
    pub delta_nu_hz: f64,
    pub max_delta_nu_hz: f64,
    /// Target mean FSR and signal-minus-idler FSR difference for the
    /// group-index calibration; omit both to use the raw dispersion model.
    pub fsr_mean_hz: Option<f64>,
    pub delta_fsr_hz: Option<f64>,
    pub phase_matching: PhaseMatchingKind,
    pub pm_fwhm_hz: Option<f64>,
    /// Half-width of the enumerated spectrum around the anchor (Hz).
    pub window_hz: f64,
    pub weight_floor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrystalSection {
    /// Dispersion data file; the bundled KTP data when absent.
    pub dispersion_file: Option<PathBuf>,
    pub pump_axis: Axis,
    pub signal_axis: Axis,
    pub idler_axis: Axis,
    pub period_um: f64,
    pub length_mm: f64,
    pub temperature_c: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MediumKind {
    Vacuum,
    Crystal,
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionSection {
    pub name: String,
    pub role: RegionRole,
    pub length_mm: f64,
    #[serde(default = "default_temperature")]
    pub temperature_c: f64,
    pub medium: MediumKind,
    pub index: Option<f64>,
    pub group_index: Option<f64>,
}

fn default_temperature() -> f64 {
    25.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CavitySection {
    pub outcoupler_transmission: f64,
    pub residual_loss: f64,
    #[serde(rename = "region")]
    pub regions: Vec<RegionSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignSection {
    pub max_unwanted_fraction: f64,
    pub spacer_mm: [f64; 2],
    pub reflectivity: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterSection {
    pub spacer_length_mm: f64,
    pub spacer_expansion: f64,
    pub mirror_expansion: f64,
    pub bore_radius_mm: f64,
    /// Fixed mirror coefficient; ignored when `kelvin_per_fsr` is given.
    #[serde(default)]
    pub mirror_coefficient: f64,
    /// Measured tuning rate used to calibrate the mirror coefficient.
    pub kelvin_per_fsr: Option<f64>,
    pub reflectivity: f64,
    pub peak_transmission: f64,
    pub reference_temperature_c: f64,
    pub measured_linewidth_hz: Option<f64>,
    /// Oven set-point resolution (K).
    pub temperature_resolution_k: f64,
    /// Place a second filter on the idler arm.
    #[serde(default)]
    pub filter_idler: bool,
    pub design: DesignSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellSection {
    pub atomic_data_file: Option<PathBuf>,
    pub length_cm: f64,
    pub temperature_c: f64,
    pub abundance_85: f64,
    pub density_scale: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum G2Mode {
    /// One filtered mode pair.
    Single,
    /// Every mode pair in the brightest cluster.
    Multimode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorrelationSection {
    /// Signal decay rate over 2 pi (Hz).
    pub gamma_s_over_2pi_hz: f64,
    pub gamma_i_over_2pi_hz: f64,
    pub mode: G2Mode,
    pub pair_rate: f64,
    pub duration_s: f64,
    /// Uncorrelated singles rate per channel (1/s).
    pub background_rate: f64,
    pub bin_width_ps: u64,
    pub window_ns: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanSection {
    /// Feature the signal is locked to.
    pub signal_reference: String,
    pub light_shift_hz: i64,
    pub delta_nu_hz: i64,
    #[serde(default)]
    pub limits: PlanSettings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectroscopySection {
    pub cell_temperature_c: f64,
    pub delta_nu_hz: Vec<f64>,
    /// Photon FWHM for averaging; the cavity value when absent.
    pub photon_linewidth_hz: Option<f64>,
    pub normalization_offset_hz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSection {
    pub jsi_half_width_hz: f64,
    pub jsi_points: usize,
    pub dfg_start_hz: f64,
    pub dfg_stop_hz: f64,
    pub dfg_points: usize,
    pub filter_scan_start_hz: f64,
    pub filter_scan_stop_hz: f64,
    pub filter_scan_step_hz: f64,
    pub filter_scan_background: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub source: SourceSection,
    pub crystal: CrystalSection,
    pub cavity: CavitySection,
    pub filter: FilterSection,
    pub cell: CellSection,
    pub correlation: CorrelationSection,
    pub plan: PlanSection,
    pub spectroscopy: SpectroscopySection,
    pub scan: ScanSection,
    /// Directory relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Read {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        let mut cfg = Self::from_toml_str(&text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf);
        Ok(cfg)
    }

    pub fn preset(name: &str) -> Result<Self, ConfigError> {
        match name {
            "paper-2020" => Self::from_toml_str(PAPER_2020),
            other => Err(ConfigError::UnknownPreset(other.to_string())),
        }
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        if self.source.fsr_mean_hz.is_some() != self.source.delta_fsr_hz.is_some() {
            return bad("source.fsr_mean_hz and source.delta_fsr_hz must be given together".into());
        }
        if self.source.phase_matching == PhaseMatchingKind::Calibrated && self.source.pm_fwhm_hz.is_none() {
            return bad("calibrated phase matching needs source.pm_fwhm_hz".into());
        }
        if !(self.source.window_hz > 0.0) {
            return bad(format!("source.window_hz {}", self.source.window_hz));
        }
        for r in &self.cavity.regions {
            if r.medium == MediumKind::Uniform && (r.index.is_none() || r.group_index.is_none()) {
                return bad(format!("uniform region '{}' needs index and group_index", r.name));
            }
        }
        if self.correlation.bin_width_ps == 0 {
            return bad("correlation.bin_width_ps must be positive".into());
        }
        if self.scan.jsi_points < 2 || self.scan.dfg_points < 2 {
            return bad("scans need at least two points".into());
        }
        Ok(())
    }

    fn resolve(&self, p: &Path) -> PathBuf {
        match &self.base_dir {
            Some(base) if p.is_relative() => base.join(p),
            _ => p.to_path_buf(),
        }
    }

    pub fn dispersion_data(&self) -> Result<SellmeierData, DispersionError> {
        match &self.crystal.dispersion_file {
            Some(p) => SellmeierData::load(&self.resolve(p)),
            None => Ok(SellmeierData::ktp()),
        }
    }

    pub fn atomic_data(&self) -> Result<AtomicData, Error> {
        Ok(match &self.cell.atomic_data_file {
            Some(p) => AtomicData::load(&self.resolve(p))?,
            None => AtomicData::rb_d1(),
        })
    }

    pub fn wavelength_um(&self) -> f64 {
        wavelength_um(self.source.signal_anchor_hz)
    }

    pub fn pump_hz(&self) -> f64 {
        2.0 * self.source.signal_anchor_hz + self.source.delta_nu_hz
    }

    pub fn wave_axes(&self) -> Result<WaveAxes, DispersionError> {
        let c = &self.crystal;
        WaveAxes::from_data(&self.dispersion_data()?, c.pump_axis, c.signal_axis, c.idler_axis)
    }

    /// Cavity with crystal regions filled from the dispersion data, calibrated
    /// when target FSRs are configured.
    pub fn cavity(&self) -> Result<RingCavity, Error> {
        let axes = self.wave_axes()?;
        let regions = self
            .cavity
            .regions
            .iter()
            .map(|r| CavityRegion {
                name: r.name.clone(),
                role: r.role,
                length_mm: r.length_mm,
                temperature_c: r.temperature_c,
                medium: match r.medium {
                    MediumKind::Vacuum => Medium::Vacuum,
                    MediumKind::Crystal => Medium::Crystal {
                        signal: axes.signal.clone(),
                        idler: axes.idler.clone(),
                    },
                    MediumKind::Uniform => Medium::Uniform {
                        index: r.index.unwrap_or(1.0),
                        group_index: r.group_index.unwrap_or(1.0),
                    },
                },
            })
            .collect();
        let mut cav = RingCavity::new(regions, self.cavity.outcoupler_transmission, self.cavity.residual_loss)?;
        if let (Some(mean), Some(delta)) = (self.source.fsr_mean_hz, self.source.delta_fsr_hz) {
            cav.calibrate(self.wavelength_um(), mean, delta)?;
        }
        Ok(cav)
    }

    pub fn phase_matching(&self) -> Result<Arc<dyn PhaseMatch>, DispersionError> {
        let c = &self.crystal;
        let crystal = || -> Result<QpmCrystal, DispersionError> {
            Ok(QpmCrystal::new(
                self.wave_axes()?,
                PolingSpec::new(c.period_um, c.length_mm, c.temperature_c)?,
            ))
        };
        Ok(match self.source.phase_matching {
            PhaseMatchingKind::Flat => Arc::new(FlatPhaseMatching),
            PhaseMatchingKind::Raw => Arc::new(crystal()?),
            PhaseMatchingKind::Calibrated => {
                let fwhm = self.source.pm_fwhm_hz.expect("validated");
                Arc::new(crystal()?.calibrated(self.pump_hz(), fwhm)?)
            }
        })
    }

    pub fn source_config(&self) -> Result<SourceConfig, Error> {
        let cav = self.cavity()?;
        Ok(SourceConfig::from_cavity(
            &cav,
            self.wavelength_um(),
            true,
            self.phase_matching()?,
            self.source.signal_anchor_hz,
            self.source.delta_nu_hz,
            self.source.max_delta_nu_hz,
        )?)
    }

    /// Filter at its reference temperature with a resonance on the signal anchor.
    pub fn filter(&self) -> FpFilter {
        let s = &self.filter;
        let mut f = FpFilter {
            spacer_length_mm: s.spacer_length_mm,
            spacer_expansion: s.spacer_expansion,
            mirror_expansion: s.mirror_expansion,
            bore_radius_mm: s.bore_radius_mm,
            mirror_coefficient: s.mirror_coefficient,
            reflectivity: s.reflectivity,
            peak_transmission: s.peak_transmission,
            reference_temperature_c: s.reference_temperature_c,
            reference_resonance_hz: self.source.signal_anchor_hz,
            temperature_c: s.reference_temperature_c,
            measured_linewidth_hz: s.measured_linewidth_hz,
        };
        if let Some(k) = s.kelvin_per_fsr {
            f.mirror_coefficient = f.calibrated_mirror_coefficient(k);
        }
        f
    }

    pub fn design_constraints(&self) -> DesignConstraints {
        DesignConstraints {
            spacer_mm: self.filter.design.spacer_mm,
            reflectivity: self.filter.design.reflectivity,
        }
    }

    pub fn cell(&self) -> VaporCell {
        VaporCell {
            length_cm: self.cell.length_cm,
            temperature_c: self.cell.temperature_c,
            abundance_85: self.cell.abundance_85,
            density_scale: self.cell.density_scale,
        }
    }

    pub fn gammas(&self) -> (f64, f64) {
        let tau = 2.0 * std::f64::consts::PI;
        (
            tau * self.correlation.gamma_s_over_2pi_hz,
            tau * self.correlation.gamma_i_over_2pi_hz,
        )
    }

    /// Correlation model; multimode uses the brightest cluster of the source.
    pub fn g2_model(&self) -> Result<G2Model, Error> {
        let (gs, gi) = self.gammas();
        let bg = self.correlation.background_rate;
        match self.correlation.mode {
            G2Mode::Single => {
                let fsr = self.source.fsr_mean_hz.map_or_else(|| self.source_config().map(|c| c.fsr_mean()), Ok)?;
                Ok(G2Model::single_mode(gs, gi, fsr, bg)?)
            }
            G2Mode::Multimode => {
                let src = self.source_config()?;
                let pairs = crate::spectrum::enumerate_mode_pairs(&src, self.source.window_hz, self.source.weight_floor);
                let report = crate::spectrum::cluster_report(&src, &pairs);
                let cluster = report
                    .brightest_cluster()
                    .ok_or_else(|| ConfigError::Invalid("spectrum has no clusters".into()))?;
                let mut members = cluster.members.clone();
                members.sort_by(|a, b| b.weight.total_cmp(&a.weight));
                Ok(G2Model::new(gs, gi, members, src.fsr_mean(), bg)?)
            }
        }
    }
}
