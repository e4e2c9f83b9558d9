//! Joint spectral intensity of the doubly-resonant source, mode-pair
//! enumeration, cluster analytics and the DFG scan.
//!
//! Every evaluation lives on the energy-conservation line: callers pass a
//! signal frequency and the idler is always `pump - signal`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cavity::{airy_weight, finesse, fsr_pair, CavityError, ModeComb, RingCavity};
use crate::dispersion::PhaseMatch;

/// Default weight below which pairs are dropped by [`enumerate_mode_pairs`].
pub const DEFAULT_WEIGHT_FLOOR: f64 = 1e-4;
/// Relative weight difference under which two pairs count as equally bright.
pub const TIE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpectrumError {
    #[error(transparent)]
    Cavity(#[from] CavityError),
    #[error("signal and idler FSRs are equal: no clustering")]
    NoClustering,
    #[error("tuning offset {delta_nu_hz} Hz exceeds the bound {bound_hz} Hz")]
    TuningOutOfRange { delta_nu_hz: f64, bound_hz: f64 },
    #[error("invalid scan: {0}")]
    InvalidScan(String),
}

/// Everything needed to evaluate the JSI along the energy-conservation line.
#[derive(Clone)]
pub struct SourceConfig {
    pub pump_hz: f64,
    /// Signal resonances; the anchor is the locked signal mode.
    pub signal_comb: ModeComb,
    /// Idler resonances; the anchor sits at `signal anchor + delta_nu`.
    pub idler_comb: ModeComb,
    pub finesse: f64,
    pub phase_matching: Arc<dyn PhaseMatch>,
}

impl fmt::Debug for SourceConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SourceConfig")
            .field("pump_hz", &self.pump_hz)
            .field("signal_comb", &self.signal_comb)
            .field("idler_comb", &self.idler_comb)
            .field("finesse", &self.finesse)
            .field("phase_matching", &self.phase_matching)
            .finish()
    }
}

impl SourceConfig {
    /// Source locked with its signal mode at `signal_anchor_hz` and idler at
    /// `signal_anchor_hz + delta_nu_hz`; the pump is the sum of the two.
    pub fn from_cavity(
        cavity: &RingCavity,
        wavelength_um: f64,
        use_calibration: bool,
        phase_matching: Arc<dyn PhaseMatch>,
        signal_anchor_hz: f64,
        delta_nu_hz: f64,
        max_delta_nu_hz: f64,
    ) -> Result<Self, SpectrumError> {
        if delta_nu_hz.abs() > max_delta_nu_hz {
            return Err(SpectrumError::TuningOutOfRange {
                delta_nu_hz,
                bound_hz: max_delta_nu_hz,
            });
        }
        let (fs, fi) = fsr_pair(cavity, wavelength_um, use_calibration)?;
        Ok(Self::from_combs(
            ModeComb::new(signal_anchor_hz, fs),
            ModeComb::new(signal_anchor_hz + delta_nu_hz, fi),
            finesse(cavity)?,
            phase_matching,
        ))
    }

    /// Pump at the sum of the two comb anchors.
    pub fn from_combs(
        signal_comb: ModeComb,
        idler_comb: ModeComb,
        finesse: f64,
        phase_matching: Arc<dyn PhaseMatch>,
    ) -> Self {
        Self {
            pump_hz: signal_comb.anchor_hz + idler_comb.anchor_hz,
            signal_comb,
            idler_comb,
            finesse,
            phase_matching,
        }
    }

    pub fn delta_fsr(&self) -> f64 {
        self.signal_comb.fsr_hz - self.idler_comb.fsr_hz
    }

    pub fn fsr_mean(&self) -> f64 {
        0.5 * (self.signal_comb.fsr_hz + self.idler_comb.fsr_hz)
    }

    /// Cavity power decay rate `2 pi FSR_mean / F` (rad/s).
    pub fn gamma(&self) -> f64 {
        2.0 * PI * self.fsr_mean() / self.finesse
    }

    pub fn degeneracy_hz(&self) -> f64 {
        0.5 * self.pump_hz
    }

    /// Same source with signal and idler labels exchanged.
    pub fn relabeled(&self) -> Self {
        Self {
            pump_hz: self.pump_hz,
            signal_comb: self.idler_comb,
            idler_comb: self.signal_comb,
            finesse: self.finesse,
            phase_matching: Arc::new(Mirrored(self.phase_matching.clone())),
        }
    }
}

#[derive(Debug)]
struct Mirrored(Arc<dyn PhaseMatch>);

impl PhaseMatch for Mirrored {
    fn efficiency(&self, pump_hz: f64, signal_hz: f64) -> f64 {
        self.0.efficiency(pump_hz, pump_hz - signal_hz)
    }
}

/// `sinc^2(dk L / 2) |A_s(nu_s)|^2 |A_i(nu_p - nu_s)|^2`, equal to 1 for a
/// doubly-resonant, perfectly phase-matched pair.
pub fn jsi_slice(config: &SourceConfig, signal_hz: f64) -> f64 {
    let idler_hz = config.pump_hz - signal_hz;
    config.phase_matching.efficiency(config.pump_hz, signal_hz)
        * airy_weight(&config.signal_comb, config.finesse, signal_hz)
        * airy_weight(&config.idler_comb, config.finesse, idler_hz)
}

/// An energy-conserving (signal mode, idler mode) pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModePair {
    /// Signal mode index relative to the signal anchor.
    pub signal_index: i64,
    /// Idler mode index relative to the idler anchor.
    pub idler_index: i64,
    /// Signal frequency of the JSI maximum for this pair.
    pub signal_hz: f64,
    /// Always `pump - signal_hz`.
    pub idler_hz: f64,
    pub weight: f64,
    /// Signal resonance minus the signal frequency that would put the idler on resonance.
    pub mismatch_hz: f64,
}

impl ModePair {
    /// Cluster label `l + m`; constant across the modes of one cluster.
    pub fn cluster_index(&self) -> i64 {
        self.signal_index + self.idler_index
    }
}

fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, iters: usize) -> (f64, f64) {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..iters {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    if fc >= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Weight of the pair formed by signal mode `l` and its nearest idler mode.
pub fn mode_pair(config: &SourceConfig, l: i64) -> ModePair {
    let a = config.signal_comb.resonance(l);
    let m = config.idler_comb.nearest_index(config.pump_hz - a);
    let b = config.pump_hz - config.idler_comb.resonance(m);
    let f = |nu: f64| jsi_slice(config, nu);
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    let (nu, w) = if hi - lo < 1.0 {
        (a, f(a))
    } else {
        let n = 8;
        let step = (hi - lo) / n as f64;
        let (k, _) = (0..=n)
            .map(|k| (k, f(lo + k as f64 * step)))
            .fold((0, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
        let a0 = (lo + (k as f64 - 1.0) * step).max(lo);
        let b0 = (lo + (k as f64 + 1.0) * step).min(hi);
        golden_max(f, a0, b0, 60)
    };
    ModePair {
        signal_index: l,
        idler_index: m,
        signal_hz: nu,
        idler_hz: config.pump_hz - nu,
        weight: w,
        mismatch_hz: a - b,
    }
}

/// All pairs with weight `>= weight_floor` whose signal lies within
/// `±window_hz` of degeneracy, sorted by signal frequency.
pub fn enumerate_mode_pairs(config: &SourceConfig, window_hz: f64, weight_floor: f64) -> Vec<ModePair> {
    let centre = config.degeneracy_hz();
    let comb = &config.signal_comb;
    let lo = ((centre - window_hz - comb.anchor_hz) / comb.fsr_hz).ceil() as i64;
    let hi = ((centre + window_hz - comb.anchor_hz) / comb.fsr_hz).floor() as i64;
    if hi < lo {
        return Vec::new();
    }
    (lo..=hi)
        .into_par_iter()
        .map(|l| mode_pair(config, l))
        .filter(|p| p.weight >= weight_floor && p.weight > 0.0)
        .collect()
}

/// Brightest pair; near-ties go to the pair closest to the signal anchor.
pub fn brightest<'a>(pairs: &'a [ModePair], anchor_hz: f64) -> Option<&'a ModePair> {
    pairs.iter().fold(None, |best: Option<&ModePair>, p| match best {
        None => Some(p),
        Some(b) => {
            let scale = b.weight.max(p.weight);
            if (p.weight - b.weight).abs() <= TIE_TOLERANCE * scale {
                if (p.signal_hz - anchor_hz).abs() < (b.signal_hz - anchor_hz).abs() {
                    Some(p)
                } else {
                    Some(b)
                }
            } else if p.weight > b.weight {
                Some(p)
            } else {
                Some(b)
            }
        }
    })
}

/// Spacing between clusters, `FSR_s FSR_i / |FSR_s - FSR_i|`.
pub fn cluster_spacing(fsr_s: f64, fsr_i: f64) -> Result<f64, SpectrumError> {
    if fsr_s == fsr_i {
        return Err(SpectrumError::NoClustering);
    }
    Ok(fsr_s * fsr_i / (fsr_s - fsr_i).abs())
}

/// `gamma / (4 pi |dFSR|)`, with `gamma` in rad/s.
pub fn modes_per_cluster(gamma: f64, delta_fsr: f64) -> Result<f64, SpectrumError> {
    if delta_fsr == 0.0 {
        return Err(SpectrumError::NoClustering);
    }
    Ok(gamma / (4.0 * PI * delta_fsr.abs()))
}

/// `FSR_mean / (F |dFSR|)`; twice [`modes_per_cluster`] when `gamma = 2 pi FSR_mean / F`.
pub fn modes_per_cluster_from_finesse(fsr_mean: f64, finesse: f64, delta_fsr: f64) -> Result<f64, SpectrumError> {
    if delta_fsr == 0.0 {
        return Err(SpectrumError::NoClustering);
    }
    Ok(fsr_mean / (finesse * delta_fsr.abs()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub index: i64,
    /// Signal frequency of the brightest member.
    pub center_hz: f64,
    pub peak_weight: f64,
    /// Members with weight at least half the peak.
    pub fwhm_mode_count: usize,
    pub members: Vec<ModePair>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterReport {
    pub signal_anchor_hz: f64,
    pub fsr_signal_hz: f64,
    pub fsr_idler_hz: f64,
    /// Sorted by centre frequency.
    pub clusters: Vec<Cluster>,
    /// `None` when the combs have equal FSR.
    pub predicted_spacing_hz: Option<f64>,
    /// `gamma / (4 pi |dFSR|)`.
    pub predicted_modes_per_cluster: Option<f64>,
    /// `FSR_mean / (F |dFSR|)`.
    pub predicted_modes_per_cluster_finesse: Option<f64>,
    /// FWHM mode count of the brightest cluster.
    pub empirical_modes_per_cluster: usize,
}

impl ClusterReport {
    pub fn brightest_cluster(&self) -> Option<&Cluster> {
        let anchor = self.signal_anchor_hz;
        self.clusters.iter().fold(None, |best: Option<&Cluster>, c| match best {
            None => Some(c),
            Some(b) => {
                let scale = b.peak_weight.max(c.peak_weight);
                if (c.peak_weight - b.peak_weight).abs() <= TIE_TOLERANCE * scale {
                    if (c.center_hz - anchor).abs() < (b.center_hz - anchor).abs() {
                        Some(c)
                    } else {
                        Some(b)
                    }
                } else if c.peak_weight > b.peak_weight {
                    Some(c)
                } else {
                    Some(b)
                }
            }
        })
    }

    pub fn pairs(&self) -> impl Iterator<Item = &ModePair> {
        self.clusters.iter().flat_map(|c| c.members.iter())
    }

    pub fn cluster(&self, index: i64) -> Option<&Cluster> {
        self.clusters.iter().find(|c| c.index == index)
    }
}

/// Groups pairs by `l + m` and reports the cluster structure.
pub fn cluster_report(config: &SourceConfig, pairs: &[ModePair]) -> ClusterReport {
    let mut sorted: Vec<ModePair> = pairs.to_vec();
    sorted.sort_by_key(|p| (p.cluster_index(), p.signal_index));
    let mut clusters = Vec::new();
    for group in sorted.chunk_by(|a, b| a.cluster_index() == b.cluster_index()) {
        let top = brightest(group, config.signal_comb.anchor_hz).expect("non-empty group");
        let half = 0.5 * top.weight;
        clusters.push(Cluster {
            index: top.cluster_index(),
            center_hz: top.signal_hz,
            peak_weight: top.weight,
            fwhm_mode_count: group.iter().filter(|p| p.weight >= half).count(),
            members: group.to_vec(),
        });
    }
    clusters.sort_by(|a, b| a.center_hz.total_cmp(&b.center_hz));
    let d = config.delta_fsr();
    let mut report = ClusterReport {
        signal_anchor_hz: config.signal_comb.anchor_hz,
        fsr_signal_hz: config.signal_comb.fsr_hz,
        fsr_idler_hz: config.idler_comb.fsr_hz,
        clusters,
        predicted_spacing_hz: cluster_spacing(config.signal_comb.fsr_hz, config.idler_comb.fsr_hz).ok(),
        predicted_modes_per_cluster: modes_per_cluster(config.gamma(), d).ok(),
        predicted_modes_per_cluster_finesse: modes_per_cluster_from_finesse(config.fsr_mean(), config.finesse, d)
            .ok(),
        empirical_modes_per_cluster: 0,
    };
    report.empirical_modes_per_cluster = report.brightest_cluster().map_or(0, |c| c.fwhm_mode_count);
    report
}

/// Background idler level of the DFG measurement, relative to the brightest peak.
pub const DFG_BACKGROUND: f64 = 0.008;

/// Idler power versus seed detuning from the signal anchor:
/// `jsi_slice(anchor + detuning) + background`.
pub fn dfg_scan(
    config: &SourceConfig,
    start_hz: f64,
    stop_hz: f64,
    points: usize,
    background: f64,
) -> Result<Vec<(f64, f64)>, SpectrumError> {
    if points < 2 || !(stop_hz > start_hz) {
        return Err(SpectrumError::InvalidScan(format!(
            "need start < stop and at least two points (got {start_hz}..{stop_hz}, {points})"
        )));
    }
    let step = (stop_hz - start_hz) / (points - 1) as f64;
    let anchor = config.signal_comb.anchor_hz;
    Ok((0..points)
        .into_par_iter()
        .map(|k| {
            let d = start_hz + k as f64 * step;
            (d, jsi_slice(config, anchor + d) + background)
        })
        .collect())
}

/// Local maxima of a sampled curve above `threshold`.
pub fn find_peaks(curve: &[(f64, f64)], threshold: f64) -> Vec<(f64, f64)> {
    curve
        .windows(3)
        .filter(|w| w[1].1 > threshold && w[1].1 >= w[0].1 && w[1].1 > w[2].1)
        .map(|w| w[1])
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dispersion::FlatPhaseMatching;
    use proptest::prelude::*;

    const NU: f64 = 377.107e12;

    #[derive(Debug)]
    struct Gaussian {
        centre: f64,
        width: f64,
    }

    impl PhaseMatch for Gaussian {
        fn efficiency(&self, _p: f64, s: f64) -> f64 {
            (-((s - self.centre) / self.width).powi(2)).exp()
        }
    }

    fn nominal_source(pm: Arc<dyn PhaseMatch>) -> SourceConfig {
        SourceConfig::from_combs(
            ModeComb::new(NU, 497.75e6),
            ModeComb::new(NU, 494.25e6),
            2.0 * PI / 0.095,
            pm,
        )
    }

    fn flat() -> SourceConfig {
        nominal_source(Arc::new(FlatPhaseMatching))
    }

    #[test]
    fn doubly_resonant_pair_scores_one() {
        assert_eq!(jsi_slice(&flat(), NU), 1.0);
    }

    #[test]
    fn detuned_idler_is_suppressed() {
        let c = flat();
        let f = c.finesse;
        // Move only the idler comb by half an FSR.
        let mut d = c.clone();
        d.idler_comb.anchor_hz += 0.5 * d.idler_comb.fsr_hz;
        let bound = 1.0 / (1.0 + (2.0 * f / PI).powi(2));
        assert!(jsi_slice(&d, NU) <= bound * (1.0 + 1e-12));
        assert!(bound < 5.7e-4 && bound > 5.5e-4);
    }

    #[test]
    fn nonnegative_on_dense_scan() {
        let c = nominal_source(Arc::new(Gaussian { centre: NU, width: 150e9 }));
        let n = 1_000_000;
        let ok = (0..n).into_par_iter().all(|k| {
            let s = NU - 500e9 + 1e12 * k as f64 / n as f64;
            jsi_slice(&c, s) >= 0.0
        });
        assert!(ok);
    }

    #[test]
    fn factorizes_into_three_factors() {
        let pm = Arc::new(Gaussian { centre: NU + 3e9, width: 50e9 });
        let c = nominal_source(pm.clone());
        for s in [NU, NU + 123.4e6, NU - 7.1e9, NU + 70e9] {
            let expected = pm.efficiency(c.pump_hz, s)
                * airy_weight(&c.signal_comb, c.finesse, s)
                * airy_weight(&c.idler_comb, c.finesse, c.pump_hz - s);
            assert_eq!(jsi_slice(&c, s), expected);
        }
    }

    #[test]
    fn pairs_conserve_energy() {
        for p in enumerate_mode_pairs(&flat(), 20e9, DEFAULT_WEIGHT_FLOOR) {
            assert_eq!(p.signal_hz + p.idler_hz, flat().pump_hz);
            assert!(p.weight >= 0.0 && p.weight <= 1.0);
        }
    }

    #[test]
    fn central_cluster_has_at_least_three_bright_pairs() {
        let pairs = enumerate_mode_pairs(&flat(), 5e9, DEFAULT_WEIGHT_FLOOR);
        let centre = pairs.iter().find(|p| p.signal_index == 0).unwrap();
        assert!(centre.weight >= 0.99);
        let bright = pairs.iter().filter(|p| p.cluster_index() == 0 && p.weight > 0.25).count();
        assert!(bright >= 3, "{bright}");
    }

    #[test]
    fn enumeration_matches_brute_force_scan() {
        let c = nominal_source(Arc::new(Gaussian { centre: NU, width: 40e9 }));
        let window = 3e9;
        let pairs = enumerate_mode_pairs(&c, window, 1e-3);
        // Dense scan; take the maximum within each signal-mode cell.
        let fs = c.signal_comb.fsr_hz;
        let mut brute = Vec::new();
        let lmax = (window / fs).floor() as i64;
        for l in -lmax..=lmax {
            let centre = c.signal_comb.resonance(l);
            let n = 20_000;
            let best = (0..=n)
                .map(|k| jsi_slice(&c, centre - fs / 2.0 + fs * k as f64 / n as f64))
                .fold(0.0f64, f64::max);
            if best >= 1e-3 {
                brute.push((l, best));
            }
        }
        assert_eq!(pairs.len(), brute.len());
        for (p, (l, w)) in pairs.iter().zip(&brute) {
            assert_eq!(p.signal_index, *l);
            assert!((p.weight - w).abs() < 1e-4 * w.max(1e-3), "{l}: {} vs {w}", p.weight);
            assert!(p.weight >= *w * (1.0 - 1e-9));
        }
    }

    #[test]
    fn relabeling_with_flipped_dfsr_is_symmetric() {
        let c = nominal_source(Arc::new(Gaussian { centre: NU + 1e9, width: 60e9 }));
        let r = c.relabeled();
        assert!((r.delta_fsr() + c.delta_fsr()).abs() < 1e-6);
        let window = 40e9;
        // Weak off-cluster pairs are not one-to-one between the two labelings.
        let inner = |p: &ModePair| (p.signal_hz - c.degeneracy_hz()).abs() < window - 2e9 && p.weight > 1e-2;
        let mut a: Vec<_> = enumerate_mode_pairs(&c, window, DEFAULT_WEIGHT_FLOOR)
            .into_iter()
            .filter(inner)
            .map(|p| (p.idler_hz, p.weight))
            .collect();
        let mut b: Vec<_> = enumerate_mode_pairs(&r, window, DEFAULT_WEIGHT_FLOOR)
            .into_iter()
            .filter(|p| (p.idler_hz - c.degeneracy_hz()).abs() < window - 2e9 && p.weight > 1e-2)
            .map(|p| (p.signal_hz, p.weight))
            .collect();
        a.sort_by(|x, y| x.0.total_cmp(&y.0));
        b.sort_by(|x, y| x.0.total_cmp(&y.0));
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert!((x.0 - y.0).abs() < 1e3, "{} {}", x.0, y.0);
            assert!((x.1 - y.1).abs() < 1e-6 * x.1.max(1e-4));
        }
    }

    #[test]
    fn spacing_formula() {
        let s = cluster_spacing(497.75e6, 494.25e6).unwrap();
        assert!((s - 70.29e9).abs() < 0.01e9, "{s}");
        assert_eq!(cluster_spacing(496e6, 496e6), Err(SpectrumError::NoClustering));
        let s2 = cluster_spacing(2.0 * 497.75e6, 2.0 * 494.25e6).unwrap();
        assert!((s2 / s - 2.0).abs() < 1e-12);
    }

    #[test]
    fn modes_per_cluster_formulae() {
        let g = 2.0 * PI * 7.6e6;
        let m = modes_per_cluster(g, 3.5e6).unwrap();
        assert!((m - 1.086).abs() < 0.001, "{m}");
        assert!((modes_per_cluster(g, 1.75e6).unwrap() / m - 2.0).abs() < 1e-12);
        assert_eq!(modes_per_cluster(g, 0.0), Err(SpectrumError::NoClustering));
        let c = flat();
        let a = modes_per_cluster(c.gamma(), c.delta_fsr()).unwrap();
        let b = modes_per_cluster_from_finesse(c.fsr_mean(), c.finesse, c.delta_fsr()).unwrap();
        assert!((b / a - 2.0).abs() < 1e-12);
    }

    #[test]
    fn cluster_centres_follow_spacing() {
        let c = nominal_source(Arc::new(Gaussian { centre: NU, width: 200e9 }));
        let pairs = enumerate_mode_pairs(&c, 160e9, DEFAULT_WEIGHT_FLOOR);
        let report = cluster_report(&c, &pairs);
        let spacing = report.predicted_spacing_hz.unwrap();
        for k in -2i64..=2 {
            let cl = report
                .clusters
                .iter()
                .min_by(|a, b| {
                    (a.center_hz - NU - k as f64 * spacing)
                        .abs()
                        .total_cmp(&(b.center_hz - NU - k as f64 * spacing).abs())
                })
                .unwrap();
            assert!((cl.center_hz - NU - k as f64 * spacing).abs() <= c.fsr_mean(), "k={k}");
        }
        assert!(report.empirical_modes_per_cluster >= 3);
        for cl in &report.clusters {
            assert!(cl.members.iter().all(|p| p.weight <= cl.peak_weight));
        }
        assert!(report.clusters.windows(2).all(|w| w[0].center_hz <= w[1].center_hz));
    }

    #[test]
    fn brightest_tie_goes_to_anchor() {
        let p = |hz: f64, w: f64| ModePair {
            signal_index: 0,
            idler_index: 0,
            signal_hz: hz,
            idler_hz: 0.0,
            weight: w,
            mismatch_hz: 0.0,
        };
        let pairs = [p(NU + 2e9, 0.5), p(NU - 1e9, 0.5 * (1.0 + 1e-12)), p(NU + 5e9, 0.3)];
        assert_eq!(brightest(&pairs, NU).unwrap().signal_hz, NU - 1e9);
        let pairs = [p(NU + 2e9, 0.5), p(NU - 1e9, 0.49)];
        assert_eq!(brightest(&pairs, NU).unwrap().signal_hz, NU + 2e9);
    }

    #[test]
    fn dfg_peaks_decrease_within_cluster() {
        let c = nominal_source(Arc::new(Gaussian { centre: NU, width: 150e9 }));
        let fs = c.signal_comb.fsr_hz;
        let curve = dfg_scan(&c, -2.5 * fs, 2.5 * fs, 10001, DFG_BACKGROUND).unwrap();
        // Per signal-mode cell maximum; far-detuned pairs can be split into two sub-peaks.
        let cell_max: Vec<f64> = (-2i64..=2)
            .map(|k| {
                curve
                    .iter()
                    .filter(|(d, _)| (d - k as f64 * fs).abs() < 0.5 * fs)
                    .map(|p| p.1)
                    .fold(0.0, f64::max)
            })
            .collect();
        assert!(cell_max[2] > cell_max[1] && cell_max[1] > cell_max[0]);
        assert!(cell_max[2] > cell_max[3] && cell_max[3] > cell_max[4]);
        assert!(cell_max[0] > 0.05 + DFG_BACKGROUND);
        let top = curve.iter().max_by(|a, b| a.1.total_cmp(&b.1)).unwrap();
        assert!(top.0.abs() < 1e6);
        assert!(curve.iter().all(|(_, p)| *p >= DFG_BACKGROUND));
    }

    #[test]
    fn equal_fsr_gives_equal_peaks() {
        let c = SourceConfig::from_combs(
            ModeComb::new(NU, 496e6),
            ModeComb::new(NU, 496e6),
            66.0,
            Arc::new(FlatPhaseMatching),
        );
        let curve = dfg_scan(&c, -3.2 * 496e6, 3.2 * 496e6, 6401, 0.0).unwrap();
        let peaks = find_peaks(&curve, 0.5);
        assert_eq!(peaks.len(), 7);
        assert!(peaks.iter().all(|p| (p.1 - 1.0).abs() < 1e-9));
        assert!(report_no_clustering(&c));
    }

    fn report_no_clustering(c: &SourceConfig) -> bool {
        let r = cluster_report(c, &enumerate_mode_pairs(c, 2e9, DEFAULT_WEIGHT_FLOOR));
        r.predicted_spacing_hz.is_none() && r.predicted_modes_per_cluster.is_none()
    }

    #[test]
    fn invalid_scan_rejected() {
        assert!(dfg_scan(&flat(), 1.0, 0.0, 10, 0.0).is_err());
        assert!(dfg_scan(&flat(), 0.0, 1.0, 1, 0.0).is_err());
    }

    proptest! {
        #[test]
        fn slice_bounded(offset in -500e9f64..500e9) {
            let c = nominal_source(Arc::new(Gaussian { centre: NU, width: 150e9 }));
            let w = jsi_slice(&c, NU + offset);
            prop_assert!((0.0..=1.0).contains(&w));
        }
    }
}
