//! Temperature-tuned plano-concave Fabry-Perot mode filter.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::consts::SPEED_OF_LIGHT;
use crate::spectrum::{brightest, jsi_slice, ClusterReport, ModePair, SourceConfig};

/// Largest temperature excursion for which the linear expansion model is used.
pub const MAX_THERMAL_EXCURSION_K: f64 = 60.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FilterError {
    #[error("invalid filter: {0}")]
    Invalid(String),
    #[error("temperature change {delta_t} K exceeds the ±{MAX_THERMAL_EXCURSION_K} K linear range")]
    ThermalRange { delta_t: f64 },
    #[error("spectrum has no mode pairs")]
    EmptySpectrum,
    #[error(
        "unwanted fraction {target} not reachable; best design reaches {:.4e} (spacer {:.4} mm, R {:.5})",
        best.unwanted_fraction, best.filter.spacer_length_mm, best.filter.reflectivity
    )]
    Infeasible { target: f64, best: Box<FilterDesign> },
}

/// Air-spaced etalon: two fused-silica mirrors on an annular spacer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FpFilter {
    pub spacer_length_mm: f64,
    /// Linear expansion of the spacer (1/K).
    pub spacer_expansion: f64,
    /// Linear expansion of the mirror substrates (1/K).
    pub mirror_expansion: f64,
    /// Radius of the spacer bore (mm); sets the effective substrate thickness.
    pub bore_radius_mm: f64,
    /// Dimensionless weight of the two-substrate expansion term in `dL/dT`.
    pub mirror_coefficient: f64,
    pub reflectivity: f64,
    /// `T_max^2`, on-resonance power transmission.
    pub peak_transmission: f64,
    pub reference_temperature_c: f64,
    /// A resonance frequency at the reference temperature.
    pub reference_resonance_hz: f64,
    /// Current oven temperature.
    pub temperature_c: f64,
    /// Measured FWHM; when present it overrides the reflectivity finesse.
    pub measured_linewidth_hz: Option<f64>,
}

impl FpFilter {
    pub fn validate(&self) -> Result<(), FilterError> {
        if !(self.spacer_length_mm > 0.0) {
            return Err(FilterError::Invalid(format!("spacer length {} mm", self.spacer_length_mm)));
        }
        if !(self.reflectivity > 0.0 && self.reflectivity < 1.0) {
            return Err(FilterError::Invalid(format!("reflectivity {} not in (0, 1)", self.reflectivity)));
        }
        if !(self.peak_transmission > 0.0 && self.peak_transmission <= 1.0) {
            return Err(FilterError::Invalid(format!(
                "peak transmission {} not in (0, 1]",
                self.peak_transmission
            )));
        }
        if let Some(lw) = self.measured_linewidth_hz {
            if !(lw > 0.0) {
                return Err(FilterError::Invalid(format!("linewidth {lw} Hz")));
            }
        }
        Ok(())
    }

    /// Finesse from the reflectivity, `pi sqrt(R) / (1 - R)`.
    pub fn reflectivity_finesse(&self) -> f64 {
        PI * self.reflectivity.sqrt() / (1.0 - self.reflectivity)
    }

    /// Effective finesse: measured linewidth if given, otherwise from reflectivity.
    pub fn finesse(&self) -> f64 {
        match self.measured_linewidth_hz {
            Some(lw) => fp_fsr(self) / lw,
            None => self.reflectivity_finesse(),
        }
    }

    pub fn linewidth_hz(&self) -> f64 {
        fp_fsr(self) / self.finesse()
    }

    /// `dL/dT` in mm/K: spacer expansion plus the two-substrate term.
    pub fn length_expansion_mm_per_k(&self) -> f64 {
        self.spacer_length_mm * self.spacer_expansion
            + self.mirror_coefficient * 2.0 * self.bore_radius_mm * self.mirror_expansion
    }

    /// Mirror coefficient for which a temperature change of `kelvin_per_fsr` moves the
    /// resonance by exactly one FSR.
    pub fn calibrated_mirror_coefficient(&self, kelvin_per_fsr: f64) -> f64 {
        let fsr = fp_fsr(self);
        let needed = self.spacer_length_mm * fsr / (self.reference_resonance_hz * kelvin_per_fsr);
        (needed - self.spacer_length_mm * self.spacer_expansion)
            / (2.0 * self.bore_radius_mm * self.mirror_expansion)
    }

    /// Temperature change per FSR of resonance shift under the current model.
    pub fn kelvin_per_fsr(&self) -> f64 {
        fp_fsr(self) * self.spacer_length_mm / (self.reference_resonance_hz * self.length_expansion_mm_per_k())
    }

    /// Resonance nearest the reference resonance at the current temperature.
    pub fn resonance_hz(&self) -> Result<f64, FilterError> {
        Ok(self.reference_resonance_hz
            + thermal_resonance_shift(self, self.temperature_c - self.reference_temperature_c)?)
    }

    /// Power transmission at an absolute optical frequency.
    pub fn transmission_at(&self, frequency_hz: f64) -> Result<f64, FilterError> {
        Ok(fp_transmission(self, frequency_hz - self.resonance_hz()?))
    }

    /// Temperature change (smallest magnitude) that puts a resonance on `target_hz`.
    pub fn temperature_offset_for(&self, target_hz: f64) -> f64 {
        let fsr = fp_fsr(self);
        let x = (target_hz - self.reference_resonance_hz) / fsr;
        let shift = (x - x.round()) * fsr;
        let per_k = -self.reference_resonance_hz * self.length_expansion_mm_per_k() / self.spacer_length_mm;
        shift / per_k
    }

    /// Copy with the oven set to put a resonance on `target_hz`.
    pub fn tuned_to(&self, target_hz: f64) -> Self {
        let mut f = self.clone();
        f.temperature_c = self.reference_temperature_c + self.temperature_offset_for(target_hz);
        f
    }

    /// As [`FpFilter::tuned_to`] with the temperature rounded to the nearest
    /// multiple of `resolution_k` from the reference.
    pub fn tuned_to_with_resolution(&self, target_hz: f64, resolution_k: f64) -> Self {
        let dt = self.temperature_offset_for(target_hz);
        let mut f = self.clone();
        f.temperature_c = self.reference_temperature_c + (dt / resolution_k).round() * resolution_k;
        f
    }
}

/// `c / (2 L)` for the air-spaced linear cavity.
pub fn fp_fsr(filter: &FpFilter) -> f64 {
    SPEED_OF_LIGHT / (2.0 * filter.spacer_length_mm * 1e-3)
}

/// Airy transmission `T_max^2 / (1 + (2F/pi)^2 sin^2(pi delta / FSR))`.
pub fn fp_transmission(filter: &FpFilter, detuning_hz: f64) -> f64 {
    let x = detuning_hz / fp_fsr(filter);
    let s = (PI * (x - x.round())).sin();
    let k = 2.0 * filter.finesse() / PI;
    filter.peak_transmission / (1.0 + k * k * s * s)
}

/// Resonance shift `-nu dL / L` for an oven temperature change `delta_t`.
pub fn thermal_resonance_shift(filter: &FpFilter, delta_t: f64) -> Result<f64, FilterError> {
    if delta_t.abs() > MAX_THERMAL_EXCURSION_K {
        return Err(FilterError::ThermalRange { delta_t });
    }
    Ok(-filter.reference_resonance_hz * filter.length_expansion_mm_per_k() * delta_t / filter.spacer_length_mm)
}

/// `|phi|^2 |T_s|^2 |T_i|^2`; an absent filter transmits 1.
pub fn filtered_jsi(
    config: &SourceConfig,
    signal_filter: Option<&FpFilter>,
    idler_filter: Option<&FpFilter>,
    signal_hz: f64,
) -> Result<f64, FilterError> {
    let ts = match signal_filter {
        Some(f) => f.transmission_at(signal_hz)?,
        None => 1.0,
    };
    let ti = match idler_filter {
        Some(f) => f.transmission_at(config.pump_hz - signal_hz)?,
        None => 1.0,
    };
    Ok(jsi_slice(config, signal_hz) * ts * ti)
}

/// One row of the extinction table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtinctionRow {
    pub signal_hz: f64,
    pub raw_weight: f64,
    pub filtered_weight: f64,
    /// `10 log10(selected filtered weight / filtered weight)`; 0 for the selected mode.
    pub suppression_db: f64,
    pub selected: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PurityReport {
    pub selected: ModePair,
    pub unwanted_fraction: f64,
    /// Smallest suppression over all non-selected modes.
    pub min_suppression_db: f64,
    pub rows: Vec<ExtinctionRow>,
}

/// Filters the signal arm with `filter` (already tuned) and reports how much of
/// the transmitted flux comes from modes other than `selected`.
pub fn purity(pairs: &[ModePair], filter: &FpFilter, selected: &ModePair) -> Result<PurityReport, FilterError> {
    if pairs.is_empty() {
        return Err(FilterError::EmptySpectrum);
    }
    let res = filter.resonance_hz()?;
    let sel_w = selected.weight * fp_transmission(filter, selected.signal_hz - res);
    let mut total = 0.0;
    let mut unwanted = 0.0;
    let mut min_db = f64::INFINITY;
    let rows = pairs
        .iter()
        .map(|p| {
            let fw = p.weight * fp_transmission(filter, p.signal_hz - res);
            let is_sel = p.signal_index == selected.signal_index && p.idler_index == selected.idler_index;
            total += fw;
            let db = if is_sel {
                0.0
            } else {
                unwanted += fw;
                let d = 10.0 * (sel_w / fw).log10();
                min_db = min_db.min(d);
                d
            };
            ExtinctionRow {
                signal_hz: p.signal_hz,
                raw_weight: p.weight,
                filtered_weight: fw,
                suppression_db: db,
                selected: is_sel,
            }
        })
        .collect();
    Ok(PurityReport {
        selected: *selected,
        unwanted_fraction: if total > 0.0 { unwanted / total } else { 0.0 },
        min_suppression_db: min_db,
        rows,
    })
}

/// Tunes `filter` to the brightest pair and evaluates [`purity`].
pub fn purity_at_brightest(pairs: &[ModePair], filter: &FpFilter, anchor_hz: f64) -> Result<PurityReport, FilterError> {
    let sel = brightest(pairs, anchor_hz).ok_or(FilterError::EmptySpectrum)?;
    purity(pairs, &filter.tuned_to(sel.signal_hz), sel)
}

/// Worst-case resonance miss (Hz) and fractional transmission loss when the
/// oven can only be set in steps of `resolution_k`.
pub fn tuning_granularity(filter: &FpFilter, resolution_k: f64) -> (f64, f64) {
    let per_k = filter.reference_resonance_hz * filter.length_expansion_mm_per_k() / filter.spacer_length_mm;
    let miss = 0.5 * resolution_k * per_k;
    let loss = 1.0 - fp_transmission(filter, miss) / filter.peak_transmission;
    (miss, loss)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesignConstraints {
    pub spacer_mm: [f64; 2],
    pub reflectivity: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterDesign {
    /// Filter tuned to the brightest mode.
    pub filter: FpFilter,
    pub finesse: f64,
    pub unwanted_fraction: f64,
    pub min_suppression_db: f64,
}

const GRID: usize = 17;
const EQUAL_PURITY: f64 = 1e-12;

fn evaluate(
    template: &FpFilter,
    pairs: &[ModePair],
    anchor: f64,
    spacer_mm: f64,
    reflectivity: f64,
) -> Result<FilterDesign, FilterError> {
    let mut f = template.clone();
    f.spacer_length_mm = spacer_mm;
    f.reflectivity = reflectivity;
    f.measured_linewidth_hz = None;
    let rep = purity_at_brightest(pairs, &f, anchor)?;
    let tuned = f.tuned_to(rep.selected.signal_hz);
    Ok(FilterDesign {
        finesse: tuned.finesse(),
        filter: tuned,
        unwanted_fraction: rep.unwanted_fraction,
        min_suppression_db: rep.min_suppression_db,
    })
}

fn better(a: &FilterDesign, b: &FilterDesign) -> bool {
    let scale = a.unwanted_fraction.max(b.unwanted_fraction).max(1e-300);
    if (a.unwanted_fraction - b.unwanted_fraction).abs() <= EQUAL_PURITY * scale
        || a.unwanted_fraction.max(b.unwanted_fraction) == 0.0
    {
        a.finesse < b.finesse
    } else {
        a.unwanted_fraction < b.unwanted_fraction
    }
}

/// Grid search over spacer length and reflectivity, then a golden-section
/// polish of the spacer length, minimizing the unwanted fraction. Equal purity
/// is broken toward lower finesse.
pub fn design_filter(
    spectrum: &ClusterReport,
    max_unwanted_fraction: f64,
    constraints: &DesignConstraints,
    template: &FpFilter,
) -> Result<FilterDesign, FilterError> {
    let [l0, l1] = constraints.spacer_mm;
    let [r0, r1] = constraints.reflectivity;
    if !(l0 > 0.0 && l0 <= l1 && r0 > 0.0 && r0 <= r1 && r1 < 1.0) {
        return Err(FilterError::Invalid(format!("constraint ranges {constraints:?}")));
    }
    let pairs: Vec<ModePair> = spectrum.pairs().copied().collect();
    if pairs.is_empty() {
        return Err(FilterError::EmptySpectrum);
    }
    let anchor = spectrum.signal_anchor_hz;
    let at = |i: usize, lo: f64, hi: f64| lo + (hi - lo) * i as f64 / (GRID - 1) as f64;
    let candidates: Vec<(f64, f64)> = (0..GRID)
        .flat_map(|i| (0..GRID).map(move |j| (i, j)))
        .map(|(i, j)| (at(i, l0, l1), at(j, r0, r1)))
        .collect();
    let evaluated = candidates
        .par_iter()
        .map(|&(l, r)| evaluate(template, &pairs, anchor, l, r))
        .collect::<Result<Vec<_>, _>>()?;
    let mut best = evaluated
        .into_iter()
        .reduce(|a, b| if better(&b, &a) { b } else { a })
        .expect("non-empty grid");

    if l1 > l0 {
        let r = best.filter.reflectivity;
        let step = (l1 - l0) / (GRID - 1) as f64;
        let mut a = (best.filter.spacer_length_mm - step).max(l0);
        let mut b = (best.filter.spacer_length_mm + step).min(l1);
        let g = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..40 {
            let c = b - g * (b - a);
            let d = a + g * (b - a);
            let fc = evaluate(template, &pairs, anchor, c, r)?;
            let fd = evaluate(template, &pairs, anchor, d, r)?;
            if better(&fc, &best) {
                best = fc.clone();
            }
            if better(&fd, &best) {
                best = fd.clone();
            }
            if better(&fc, &fd) {
                b = d;
            } else {
                a = c;
            }
        }
    }

    if max_unwanted_fraction > 0.0 && best.unwanted_fraction <= max_unwanted_fraction {
        Ok(best)
    } else {
        Err(FilterError::Infeasible {
            target: max_unwanted_fraction,
            best: Box::new(best),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cavity::ModeComb;
    use crate::dispersion::{FlatPhaseMatching, PhaseMatch};
    use crate::spectrum::{cluster_report, enumerate_mode_pairs};
    use proptest::prelude::*;
    use std::sync::Arc;

    const NU: f64 = 377.107e12;

    fn built_filter() -> FpFilter {
        let mut f = FpFilter {
            spacer_length_mm: 3.8,
            spacer_expansion: 3.2e-6,
            mirror_expansion: 5.1e-7,
            bore_radius_mm: 2.75,
            mirror_coefficient: 0.0,
            reflectivity: 0.992,
            peak_transmission: 0.87,
            reference_temperature_c: 25.0,
            reference_resonance_hz: NU,
            temperature_c: 25.0,
            measured_linewidth_hz: None,
        };
        f.mirror_coefficient = f.calibrated_mirror_coefficient(31.7);
        f
    }

    #[derive(Debug)]
    struct Gaussian(f64);
    impl PhaseMatch for Gaussian {
        fn efficiency(&self, _p: f64, s: f64) -> f64 {
            (-((s - NU) / self.0).powi(2) * 4.0 * 2f64.ln()).exp()
        }
    }

    fn source() -> SourceConfig {
        SourceConfig::from_combs(
            ModeComb::new(NU, 497.75e6),
            ModeComb::new(NU, 494.25e6),
            2.0 * PI / 0.095,
            Arc::new(Gaussian(148e9)),
        )
    }

    #[test]
    fn fsr_values() {
        let f = built_filter();
        assert!((fp_fsr(&f) / 1e9 - 39.44).abs() < 0.01);
        let mut g = f.clone();
        g.spacer_length_mm = 3.9;
        assert!((fp_fsr(&g) / 1e9 - 38.43).abs() < 0.01);
        g.spacer_length_mm = 7.6;
        assert!((fp_fsr(&g) * 2.0 - fp_fsr(&f)).abs() < 1e-3);
    }

    #[test]
    fn finesse_from_r_and_linewidth() {
        let f = built_filter();
        assert!((f.reflectivity_finesse() - 391.1).abs() < 0.2, "{}", f.reflectivity_finesse());
        let mut m = f.clone();
        m.measured_linewidth_hz = Some(96.6e6);
        assert!((m.finesse() - 408.3).abs() < 0.3, "{}", m.finesse());
    }

    #[test]
    fn transmission_closed_forms() {
        let mut f = built_filter();
        assert_eq!(fp_transmission(&f, 0.0), 0.87);
        let half = fp_transmission(&f, 0.5 * fp_fsr(&f)) / 0.87;
        assert!(half <= 1e-4);
        f.measured_linewidth_hz = Some(96.6e6);
        let lor = 1.0 / (1.0 + (2.0f64 * 6e6 / 96.6e6).powi(2));
        let six = fp_transmission(&f, 6e6) / 0.87;
        assert!(six >= 0.98, "{six}");
        assert!((six - lor).abs() < 1e-4);
    }

    #[test]
    fn thermal_calibration() {
        let f = built_filter();
        assert!(f.mirror_coefficient > 0.0 && f.mirror_coefficient < 1.0);
        let s = thermal_resonance_shift(&f, 31.7).unwrap();
        assert!((s.abs() / fp_fsr(&f) - 1.0).abs() < 1e-9);
        let five = thermal_resonance_shift(&f, 0.005).unwrap();
        assert!((five.abs() - 6e6).abs() < 1e6, "{five}");
        assert_eq!(thermal_resonance_shift(&f, -0.3).unwrap(), -thermal_resonance_shift(&f, 0.3).unwrap());
        assert!(thermal_resonance_shift(&f, 61.0).is_err());
        let mut spacer_only = f.clone();
        spacer_only.mirror_coefficient = 0.0;
        assert!((spacer_only.kelvin_per_fsr() - 32.7).abs() < 0.1);
    }

    #[test]
    fn heating_lowers_resonance() {
        let f = built_filter();
        assert!(thermal_resonance_shift(&f, 1.0).unwrap() < 0.0);
    }

    #[test]
    fn tuning_lands_on_target() {
        let f = built_filter();
        for target in [NU + 1.234e9, NU - 17.5e9, NU + 70.18e9] {
            let t = f.tuned_to(target);
            assert!((t.transmission_at(target).unwrap() - 0.87).abs() < 1e-9);
            assert!((t.temperature_c - 25.0).abs() <= 31.7 / 2.0 + 1e-9);
        }
    }

    #[test]
    fn granularity_envelope() {
        let mut f = built_filter();
        f.measured_linewidth_hz = Some(96.6e6);
        let (miss, loss) = tuning_granularity(&f, 0.010);
        assert!(miss <= 12e6 && loss <= 0.05, "{miss} {loss}");
        for k in 0..50 {
            let target = NU + 0.37e6 * k as f64 * 13.0;
            let t = f.tuned_to_with_resolution(target, 0.010);
            let d = (t.resonance_hz().unwrap() - target).abs();
            assert!(d <= miss * (1.0 + 1e-9), "{d}");
        }
    }

    #[test]
    fn absent_filters_are_identity() {
        let c = source();
        for s in [NU, NU + 497.75e6, NU + 3e9] {
            assert_eq!(filtered_jsi(&c, None, None, s).unwrap(), jsi_slice(&c, s));
        }
    }

    #[test]
    fn reference_filter_purity() {
        let c = source();
        let pairs = enumerate_mode_pairs(&c, 475e9, 1e-4);
        let rep = purity_at_brightest(&pairs, &built_filter(), NU).unwrap();
        assert!(rep.unwanted_fraction > 0.013 && rep.unwanted_fraction < 0.033, "{}", rep.unwanted_fraction);
        assert!(rep.min_suppression_db > 20.0, "{}", rep.min_suppression_db);
        assert_eq!(rep.rows.iter().filter(|r| r.selected).count(), 1);
    }

    #[test]
    fn design_reproduces_fixed_design() {
        let c = source();
        let pairs = enumerate_mode_pairs(&c, 475e9, 1e-4);
        let report = cluster_report(&c, &pairs);
        let cons = DesignConstraints { spacer_mm: [3.8, 3.8], reflectivity: [0.992, 0.992] };
        let d = design_filter(&report, 0.05, &cons, &built_filter()).unwrap();
        let direct = purity_at_brightest(&pairs, &built_filter(), NU).unwrap();
        assert!((d.unwanted_fraction - direct.unwanted_fraction).abs() < 1e-12);
        let err = design_filter(&report, 0.0, &cons, &built_filter()).unwrap_err();
        match err {
            FilterError::Infeasible { best, .. } => assert!(best.unwanted_fraction > 0.0),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn single_mode_spectrum_gets_lowest_finesse() {
        let c = SourceConfig::from_combs(
            ModeComb::new(NU, 497.75e6),
            ModeComb::new(NU, 494.25e6),
            66.0,
            Arc::new(FlatPhaseMatching),
        );
        let pairs = vec![crate::spectrum::mode_pair(&c, 0)];
        let report = cluster_report(&c, &pairs);
        let cons = DesignConstraints { spacer_mm: [2.0, 5.0], reflectivity: [0.95, 0.995] };
        let d = design_filter(&report, 0.01, &cons, &built_filter()).unwrap();
        assert_eq!(d.unwanted_fraction, 0.0);
        assert!((d.filter.reflectivity - 0.95).abs() < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn transmission_bounded(d in -200e9f64..200e9, r in 0.5f64..0.9999) {
            let mut f = built_filter();
            f.reflectivity = r;
            let t = fp_transmission(&f, d);
            prop_assert!(t >= 0.0 && t <= f.peak_transmission);
            prop_assert_eq!(fp_transmission(&f, 3.0 * fp_fsr(&f)), f.peak_transmission);
        }

        #[test]
        fn filtering_never_adds(s in -300e9f64..300e9, tf in -10.0f64..10.0) {
            let c = source();
            let mut f = built_filter();
            f.temperature_c += tf;
            let raw = jsi_slice(&c, NU + s);
            prop_assert!(filtered_jsi(&c, Some(&f), None, NU + s).unwrap() <= raw);
            prop_assert!(filtered_jsi(&c, Some(&f), Some(&f), NU + s).unwrap() <= raw);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]

        #[test]
        fn design_respects_constraints(
            l0 in 1.0f64..6.0, dl in 0.0f64..3.0, r0 in 0.9f64..0.99, dr in 0.0f64..0.009
        ) {
            let c = source();
            let pairs = enumerate_mode_pairs(&c, 40e9, 1e-3);
            let report = cluster_report(&c, &pairs);
            let cons = DesignConstraints { spacer_mm: [l0, l0 + dl], reflectivity: [r0, r0 + dr] };
            let d = match design_filter(&report, 1.0, &cons, &built_filter()) {
                Ok(d) => d,
                Err(FilterError::Infeasible { best, .. }) => *best,
                Err(e) => return Err(TestCaseError::fail(e.to_string())),
            };
            prop_assert!(d.filter.spacer_length_mm >= l0 && d.filter.spacer_length_mm <= l0 + dl);
            prop_assert!(d.filter.reflectivity >= r0 && d.filter.reflectivity <= r0 + dr);
        }
    }
}
