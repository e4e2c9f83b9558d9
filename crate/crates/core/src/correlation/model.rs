use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::CorrelationError;
use crate::spectrum::ModePair;

/// Parameters of the signal-idler cross-correlation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct G2Model {
    /// Signal power decay rate (rad/s).
    pub gamma_s: f64,
    /// Idler power decay rate (rad/s).
    pub gamma_i: f64,
    pub mode_pairs: Vec<ModePair>,
    /// `1 / FSR_mean` (s).
    pub round_trip_time: f64,
    /// Uncorrelated singles rate per detector channel (1/s).
    pub background_rate: f64,
}

impl G2Model {
    pub fn new(
        gamma_s: f64,
        gamma_i: f64,
        mode_pairs: Vec<ModePair>,
        fsr_mean_hz: f64,
        background_rate: f64,
    ) -> Result<Self, CorrelationError> {
        if !(gamma_s > 0.0 && gamma_i > 0.0) {
            return Err(CorrelationError::InvalidModel(format!(
                "decay rates must be positive (got {gamma_s}, {gamma_i})"
            )));
        }
        if !(fsr_mean_hz > 0.0) {
            return Err(CorrelationError::InvalidModel(format!("FSR {fsr_mean_hz}")));
        }
        if !(background_rate >= 0.0 && background_rate.is_finite()) {
            return Err(CorrelationError::InvalidRate(format!("background {background_rate}")));
        }
        if mode_pairs.iter().any(|p| !(p.weight >= 0.0)) {
            return Err(CorrelationError::InvalidModel("negative pair weight".into()));
        }
        Ok(Self {
            gamma_s,
            gamma_i,
            mode_pairs,
            round_trip_time: 1.0 / fsr_mean_hz,
            background_rate,
        })
    }

    /// Single pair at zero offset: the filtered, single-mode source.
    pub fn single_mode(gamma_s: f64, gamma_i: f64, fsr_mean_hz: f64, background_rate: f64) -> Result<Self, CorrelationError> {
        let pair = ModePair {
            signal_index: 0,
            idler_index: 0,
            signal_hz: 0.0,
            idler_hz: 0.0,
            weight: 1.0,
            mismatch_hz: 0.0,
        };
        Self::new(gamma_s, gamma_i, vec![pair], fsr_mean_hz, background_rate)
    }

    fn amplitudes(&self) -> Vec<(f64, f64)> {
        let reference = self.mode_pairs.first().map_or(0.0, |p| p.signal_hz);
        self.mode_pairs
            .iter()
            .map(|p| (p.weight.sqrt(), p.signal_hz - reference))
            .collect()
    }

    /// `|sum sqrt(w) exp(i 2 pi D tau)|^2 / (sum sqrt(w))^2`.
    pub fn comb_factor(&self, tau: f64) -> f64 {
        let amps = self.amplitudes();
        let norm: f64 = amps.iter().map(|a| a.0).sum();
        if amps.len() == 1 {
            return 1.0;
        }
        if norm == 0.0 {
            return 0.0;
        }
        let (re, im) = amps.iter().fold((0.0, 0.0), |(re, im), (a, d)| {
            let (s, c) = (2.0 * PI * d * tau).sin_cos();
            (re + a * c, im + a * s)
        });
        (re * re + im * im) / (norm * norm)
    }
}

/// Double exponential `exp(-gamma_s tau / 2)` for `tau > 0`, `exp(gamma_i tau / 2)` otherwise.
/// `tau` is signal time minus idler time.
pub fn g2_envelope(model: &G2Model, tau: f64) -> f64 {
    if tau >= 0.0 {
        (-0.5 * model.gamma_s * tau).exp()
    } else {
        (0.5 * model.gamma_i * tau).exp()
    }
}

/// Envelope times the multimode beat pattern, normalized to 1 at `tau = 0`.
pub fn g2_multimode(model: &G2Model, tau: f64) -> f64 {
    model.comb_factor(tau) * g2_envelope(model, tau)
}

/// First revival of the multimode beat pattern after `tau = 0` (s), or `None`
/// when there is no comb (single mode or no revival above one half).
pub fn comb_period(model: &G2Model, max_tau: f64) -> Option<f64> {
    if model.mode_pairs.len() < 2 {
        return None;
    }
    let step = 1e-12;
    let n = (max_tau / step) as usize;
    let f = |t: f64| model.comb_factor(t);
    let mut dipped = false;
    let mut prev = f(0.0);
    for k in 1..n {
        let t = k as f64 * step;
        let cur = f(t);
        if cur < 0.5 {
            dipped = true;
        }
        let next = f(t + step);
        if dipped && cur > 0.5 && cur >= prev && cur >= next {
            // Parabolic refinement of the sampled maximum.
            let denom = prev - 2.0 * cur + next;
            let shift = if denom != 0.0 { 0.5 * (prev - next) / denom } else { 0.0 };
            return Some(t + shift * step);
        }
        prev = cur;
    }
    None
}

/// `|F(f)|^2 / |F(0)|^2` for uniformly sampled `values` with spacing `dt`.
pub fn fourier_power_ratio(values: &[f64], dt: f64, frequency: f64) -> f64 {
    let (mut re, mut im, mut dc) = (0.0, 0.0, 0.0);
    for (k, v) in values.iter().enumerate() {
        let (s, c) = (2.0 * PI * frequency * k as f64 * dt).sin_cos();
        re += v * c;
        im -= v * s;
        dc += v;
    }
    (re * re + im * im) / (dc * dc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pair(offset: f64, w: f64) -> ModePair {
        ModePair {
            signal_index: 0,
            idler_index: 0,
            signal_hz: 377e12 + offset,
            idler_hz: 377e12 - offset,
            weight: w,
            mismatch_hz: 0.0,
        }
    }

    fn nominal_gammas() -> (f64, f64) {
        (2.0 * PI * 6.9e6, 2.0 * PI * 6.3e6)
    }

    #[test]
    fn envelope_closed_forms() {
        let (gs, gi) = nominal_gammas();
        let m = G2Model::single_mode(gs, gi, 496e6, 0.0).unwrap();
        assert_eq!(g2_envelope(&m, 0.0), 1.0);
        assert!((g2_envelope(&m, -1e-18) - 1.0).abs() < 1e-9);
        assert!((g2_envelope(&m, 2.0 / gs) - (-1f64).exp()).abs() < 1e-15);
        let ts = 2.0 / gs;
        let ti = 2.0 / gi;
        assert!((g2_envelope(&m, -ti) - (-1f64).exp()).abs() < 1e-15);
        assert!(((ts / ti) - 6.3 / 6.9).abs() < 1e-12);
    }

    #[test]
    fn single_pair_reduces_to_envelope() {
        let (gs, gi) = nominal_gammas();
        let m = G2Model::new(gs, gi, vec![pair(123e6, 0.37)], 496e6, 0.0).unwrap();
        for t in [-300e-9, -1e-9, 0.0, 0.7e-9, 2e-9, 150e-9] {
            assert_eq!(g2_multimode(&m, t), g2_envelope(&m, t));
        }
        assert!(comb_period(&m, 10e-9).is_none());
    }

    #[test]
    fn equal_weight_comb_has_full_visibility() {
        let (gs, gi) = nominal_gammas();
        let fsr = 496e6;
        let pairs = (-3..=3).map(|k| pair(k as f64 * fsr, 1.0)).collect();
        let m = G2Model::new(gs, gi, pairs, fsr, 0.0).unwrap();
        for k in 1..4 {
            assert!((m.comb_factor(k as f64 / fsr) - 1.0).abs() < 1e-9);
        }
        let t = comb_period(&m, 5e-9).unwrap();
        assert!((t * fsr - 1.0).abs() < 1e-6, "{t}");
    }

    #[test]
    fn round_trip_matches_fsr() {
        let m = G2Model::single_mode(1e7, 1e7, 496e6, 0.0).unwrap();
        assert!((m.round_trip_time * 496e6 - 1.0).abs() < 1e-12);
        assert!(G2Model::single_mode(-1.0, 1e7, 496e6, 0.0).is_err());
        assert!(G2Model::single_mode(1e7, 1e7, 496e6, -1.0).is_err());
    }

    #[test]
    fn single_mode_has_no_comb_component() {
        let (gs, gi) = nominal_gammas();
        let m = G2Model::single_mode(gs, gi, 496e6, 0.0).unwrap();
        let dt = 10e-12;
        let span = 20.0 / gi.min(gs);
        let n = (2.0 * span / dt) as usize;
        let v: Vec<f64> = (0..n).map(|k| g2_multimode(&m, -span + k as f64 * dt)).collect();
        let r = fourier_power_ratio(&v, dt, 1.0 / m.round_trip_time);
        assert!(r < 1e-3, "{r}");
        let expected = {
            let w = 2.0 * PI / m.round_trip_time;
            let a = 0.5 * gs;
            let b = 0.5 * gi;
            let f0 = 1.0 / a + 1.0 / b;
            let re = a / (a * a + w * w) + b / (b * b + w * w);
            let im = -w / (a * a + w * w) + w / (b * b + w * w);
            (re * re + im * im) / (f0 * f0)
        };
        assert!((r - expected).abs() < 0.05 * expected, "{r} vs {expected}");
    }

    #[test]
    fn multimode_integral_matches_weight_normalization() {
        let (gs, gi) = nominal_gammas();
        let fsr = 496e6;
        let ws = [0.114, 0.285, 0.674, 1.0, 0.674, 0.285, 0.114];
        let pairs: Vec<ModePair> = ws.iter().enumerate().map(|(k, w)| pair((k as f64 - 3.0) * fsr, *w)).collect();
        let m = G2Model::new(gs, gi, pairs, fsr, 0.0).unwrap();
        let dt = 2e-12;
        let span = 40.0 / gi.min(gs);
        let n = (2.0 * span / dt) as usize;
        let (mut a, mut b) = (0.0, 0.0);
        for k in 0..n {
            let t = -span + k as f64 * dt;
            a += g2_multimode(&m, t) * dt;
            b += g2_envelope(&m, t) * dt;
        }
        let sum_w: f64 = ws.iter().sum();
        let sum_a: f64 = ws.iter().map(|w| w.sqrt()).sum();
        let expected = b * sum_w / (sum_a * sum_a);
        assert!((a / expected - 1.0).abs() < 0.01, "{a} {expected}");
    }

    proptest! {
        #[test]
        fn multimode_nonnegative(t in -1e-6f64..1e-6, w1 in 0.0f64..1.0, w2 in 0.0f64..1.0) {
            let pairs = vec![pair(0.0, 1.0), pair(497e6, w1), pair(-494e6, w2)];
            let m = G2Model::new(4e7, 4e7, pairs, 496e6, 0.0).unwrap();
            let v = g2_multimode(&m, t);
            prop_assert!(v >= 0.0 && v <= 1.0 + 1e-12);
        }
    }
}
