//! Signal-idler cross-correlation: analytic G2, Monte-Carlo time tags,
//! coincidence binning, envelope fitting and rate bookkeeping.

mod events;
mod fit;
mod histogram;
mod model;

pub use events::{simulate_events, Channel, DelaySampler, DetectionEvent, DetectionEventStream, SAMPLER_POINTS};
pub use fit::{fit_envelope, EnvelopeFit, MIN_NONZERO_BINS};
pub use histogram::{bin_coincidences, G2Histogram};
pub use model::{comb_period, fourier_power_ratio, g2_envelope, g2_multimode, G2Model};

use thiserror::Error;

use crate::cavity::photon_linewidth_hz;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CorrelationError {
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("invalid rate: {0}")]
    InvalidRate(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("fit did not converge after {iterations} iterations")]
    NotConverged { iterations: usize, last: Box<EnvelopeFit> },
}

/// Detected and QE-corrected pair rate and heralding efficiency.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RateReport {
    pub detected_pair_rate: f64,
    pub heralding_efficiency: f64,
    pub detector_qe: f64,
    pub corrected_pair_rate: f64,
    pub corrected_heralding: f64,
}

/// Divides detected rate and heralding efficiency by the detector quantum efficiency.
pub fn correct_rates(detected_rate: f64, heralding: f64, qe: f64) -> Result<RateReport, CorrelationError> {
    if !(qe > 0.0 && qe <= 1.0) {
        return Err(CorrelationError::InvalidRate(format!("quantum efficiency {qe} not in (0, 1]")));
    }
    Ok(RateReport {
        detected_pair_rate: detected_rate,
        heralding_efficiency: heralding,
        detector_qe: qe,
        corrected_pair_rate: detected_rate / qe,
        corrected_heralding: heralding / qe,
    })
}

/// Photon FWHM (Hz) from the mean of the two fitted decay rates (rad/s).
pub fn pair_linewidth_hz(gamma_s: f64, gamma_i: f64) -> f64 {
    photon_linewidth_hz(0.5 * (gamma_s + gamma_i))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn rate_correction() {
        let r = correct_rates(180.0, 0.09, 0.49).unwrap();
        assert!((r.corrected_pair_rate - 367.35).abs() < 0.01);
        assert!((r.corrected_heralding - 0.1837).abs() < 1e-4);
        let id = correct_rates(180.0, 0.09, 1.0).unwrap();
        assert_eq!((id.corrected_pair_rate, id.corrected_heralding), (180.0, 0.09));
        let d = correct_rates(360.0, 0.09, 0.49).unwrap();
        assert_eq!(d.corrected_pair_rate, 2.0 * r.corrected_pair_rate);
        assert!(correct_rates(1.0, 0.1, 0.0).is_err());
        assert!(correct_rates(1.0, 0.1, 1.2).is_err());
    }

    #[test]
    fn pair_linewidth() {
        let lw = pair_linewidth_hz(2.0 * PI * 6.9e6, 2.0 * PI * 6.3e6);
        assert!((lw - 4.25e6).abs() < 0.01e6, "{lw}");
    }
}
