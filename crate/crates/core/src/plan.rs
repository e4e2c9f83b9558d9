//! Laser, AOM and pump-lock frequency plan for locking signal and idler to
//! atomic references. All frequencies are integer hertz so the bookkeeping is exact.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cavity::{Polarization, RegionRole, RingCavity};
use crate::consts::{wavelength_um, SPEED_OF_LIGHT};
use crate::dispersion::DispersionError;
use crate::cavity::CavityError;

const MHZ: i64 = 1_000_000;

/// Half-width of the tuning-crystal temperature window (K).
pub const TUNING_WINDOW_K: f64 = 15.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceFeature {
    pub name: String,
    pub frequency_hz: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlanSettings {
    pub aom_min_hz: i64,
    pub aom_max_hz: i64,
    pub aom_center_hz: i64,
    pub pump_offset_min_hz: i64,
    pub pump_offset_max_hz: i64,
    pub max_delta_nu_hz: i64,
    /// 1 when the AOM frequency is the full shift, 2 when each AOM is double-passed.
    pub aom_double_pass_factor: i64,
}

impl Default for PlanSettings {
    fn default() -> Self {
        Self {
            aom_min_hz: 156 * MHZ,
            aom_max_hz: 164 * MHZ,
            aom_center_hz: 160 * MHZ,
            pump_offset_min_hz: 80 * MHZ,
            pump_offset_max_hz: 1_500 * MHZ,
            max_delta_nu_hz: 1_180 * MHZ,
            aom_double_pass_factor: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrequencyPlan {
    pub reference: String,
    pub nu_ref: i64,
    pub nu_aom1: i64,
    pub nu_aom2: i64,
    /// Idler minus signal.
    pub delta_nu: i64,
    /// `nu_pump - 2 nu_laser`.
    pub pump_offset: i64,
    pub aom_double_pass_factor: i64,
    pub nu_laser: i64,
    pub nu_signal: i64,
    pub nu_idler: i64,
    pub nu_pump: i64,
}

/// A broken plan constraint.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "constraint", rename_all = "snake_case")]
pub enum Violation {
    AomRange { aom: u8, value_hz: i64, min_hz: i64, max_hz: i64 },
    PumpOffset { value_hz: i64, min_hz: i64, max_hz: i64 },
    DeltaNu { value_hz: i64, limit_hz: i64 },
    EnergyConservation { residual_hz: i64 },
    LaserChain { residual_hz: i64 },
    SignalChain { residual_hz: i64 },
    DeltaNuMismatch { residual_hz: i64 },
    PumpOffsetMismatch { residual_hz: i64 },
    DoublePassFactor { value: i64 },
    Resolution { detuning_hz: i64, factor: i64 },
}

fn mhz(hz: i64) -> f64 {
    hz as f64 / 1e6
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Violation::AomRange { aom, value_hz, min_hz, max_hz } => write!(
                f,
                "AOM{aom} at {} MHz outside the {}-{} MHz range",
                mhz(value_hz),
                mhz(min_hz),
                mhz(max_hz)
            ),
            Violation::PumpOffset { value_hz, min_hz, max_hz } => write!(
                f,
                "|pump offset| = {} MHz outside [{}, {}] MHz",
                mhz(value_hz.abs()),
                mhz(min_hz),
                mhz(max_hz)
            ),
            Violation::DeltaNu { value_hz, limit_hz } => write!(
                f,
                "|delta_nu| = {} MHz exceeds the {} GHz limit",
                mhz(value_hz.abs()),
                limit_hz as f64 / 1e9
            ),
            Violation::EnergyConservation { residual_hz } => {
                write!(f, "nu_pump - nu_signal - nu_idler = {residual_hz} Hz")
            }
            Violation::LaserChain { residual_hz } => write!(f, "laser frequency off the AOM1 chain by {residual_hz} Hz"),
            Violation::SignalChain { residual_hz } => write!(f, "signal frequency off the AOM2 chain by {residual_hz} Hz"),
            Violation::DeltaNuMismatch { residual_hz } => write!(f, "delta_nu differs from idler - signal by {residual_hz} Hz"),
            Violation::PumpOffsetMismatch { residual_hz } => {
                write!(f, "pump offset differs from nu_pump - 2 nu_laser by {residual_hz} Hz")
            }
            Violation::DoublePassFactor { value } => write!(f, "AOM pass factor {value} is not 1 or 2"),
            Violation::Resolution { detuning_hz, factor } => {
                write!(f, "detuning {detuning_hz} Hz is not a multiple of the pass factor {factor}")
            }
        }
    }
}

fn join(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlanError {
    #[error("no reference features")]
    NoFeatures,
    #[error("no feasible plan (closest reference {reference}): {}", join(.violations))]
    Infeasible { reference: String, violations: Vec<Violation> },
    #[error("delta_nu {delta_nu_hz} Hz outside the tuning range [{min_hz:.0}, {max_hz:.0}] Hz")]
    TuningOutOfRange { delta_nu_hz: f64, min_hz: f64, max_hz: f64 },
    #[error(transparent)]
    Cavity(#[from] CavityError),
    #[error(transparent)]
    Dispersion(#[from] DispersionError),
}

impl PlanError {
    pub fn violations(&self) -> &[Violation] {
        match self {
            PlanError::Infeasible { violations, .. } => violations,
            _ => &[],
        }
    }
}

fn build(feature: &ReferenceFeature, aom1: i64, aom2: i64, target_s: i64, target_i: i64, k: i64) -> FrequencyPlan {
    let nu_laser = feature.frequency_hz - k * aom1;
    let nu_signal = nu_laser + k * aom2;
    debug_assert_eq!(nu_signal, target_s);
    let nu_idler = target_i;
    let nu_pump = nu_signal + nu_idler;
    FrequencyPlan {
        reference: feature.name.clone(),
        nu_ref: feature.frequency_hz,
        nu_aom1: aom1,
        nu_aom2: aom2,
        delta_nu: nu_idler - nu_signal,
        pump_offset: nu_pump - 2 * nu_laser,
        aom_double_pass_factor: k,
        nu_laser,
        nu_signal,
        nu_idler,
        nu_pump,
    }
}

fn ceil_div(a: i64, b: i64) -> i64 {
    -((-a).div_euclid(b))
}

/// Best plan against one reference, or the violations of the unconstrained optimum.
fn plan_for_feature(
    feature: &ReferenceFeature,
    target_s: i64,
    target_i: i64,
    s: &PlanSettings,
) -> Result<(i64, FrequencyPlan), Vec<Violation>> {
    let k = s.aom_double_pass_factor;
    let d = target_s - feature.frequency_hz;
    if d % k != 0 {
        return Err(vec![Violation::Resolution { detuning_hz: d, factor: k }]);
    }
    let shift = d / k;
    let dnu = target_i - target_s;
    let c = s.aom_center_hz;
    // nu_aom1 = nu_aom2 - shift; cost |aom2 - shift - c| + |aom2 - c|.
    let cost = |a2: i64| (a2 - shift - c).abs() + (a2 - c).abs();
    let aom_lo = s.aom_min_hz.max(s.aom_min_hz + shift);
    let aom_hi = s.aom_max_hz.min(s.aom_max_hz + shift);
    let bands = [
        (ceil_div(s.pump_offset_min_hz - dnu, 2 * k), (s.pump_offset_max_hz - dnu).div_euclid(2 * k)),
        (ceil_div(-s.pump_offset_max_hz - dnu, 2 * k), (-s.pump_offset_min_hz - dnu).div_euclid(2 * k)),
    ];
    let ideal = c + shift.div_euclid(2);
    let mut best: Option<(i64, i64)> = None;
    for (lo, hi) in bands {
        let (lo, hi) = (lo.max(aom_lo), hi.min(aom_hi));
        if lo > hi {
            continue;
        }
        let a2 = ideal.clamp(lo, hi);
        let key = (cost(a2), (a2 - c).abs());
        if best.is_none_or(|(b, _)| key < (cost(b), (b - c).abs())) {
            best = Some((a2, 0));
        }
    }
    match best {
        Some((a2, _)) => Ok((cost(a2), build(feature, a2 - shift, a2, target_s, target_i, k))),
        None => {
            let a2 = ideal;
            let p = build(feature, a2 - shift, a2, target_s, target_i, k);
            let mut v = range_violations(&p, s);
            if v.is_empty() {
                // Both AOMs fit individually but no shared setting satisfies the pump bound.
                v.push(Violation::PumpOffset {
                    value_hz: p.pump_offset,
                    min_hz: s.pump_offset_min_hz,
                    max_hz: s.pump_offset_max_hz,
                });
            }
            Err(v)
        }
    }
}

fn range_violations(p: &FrequencyPlan, s: &PlanSettings) -> Vec<Violation> {
    let mut v = Vec::new();
    for (aom, value) in [(1u8, p.nu_aom1), (2u8, p.nu_aom2)] {
        if !(s.aom_min_hz..=s.aom_max_hz).contains(&value) {
            v.push(Violation::AomRange { aom, value_hz: value, min_hz: s.aom_min_hz, max_hz: s.aom_max_hz });
        }
    }
    if !(s.pump_offset_min_hz..=s.pump_offset_max_hz).contains(&p.pump_offset.abs()) {
        v.push(Violation::PumpOffset {
            value_hz: p.pump_offset,
            min_hz: s.pump_offset_min_hz,
            max_hz: s.pump_offset_max_hz,
        });
    }
    if p.delta_nu.abs() > s.max_delta_nu_hz {
        v.push(Violation::DeltaNu { value_hz: p.delta_nu, limit_hz: s.max_delta_nu_hz });
    }
    v
}

/// Chooses the reference feature and AOM pair closest to the AOM centre
/// frequency that put the signal on `target_signal` and the idler on `target_idler`.
///
/// Ties between features go to the smaller signal detuning, then the lower
/// reference frequency.
pub fn solve_plan(
    target_signal: i64,
    target_idler: i64,
    features: &[ReferenceFeature],
    settings: &PlanSettings,
) -> Result<FrequencyPlan, PlanError> {
    if features.is_empty() {
        return Err(PlanError::NoFeatures);
    }
    let k = settings.aom_double_pass_factor;
    let mut ordered: Vec<&ReferenceFeature> = features.iter().collect();
    ordered.sort_by_key(|f| ((target_signal - f.frequency_hz).abs(), f.frequency_hz));
    if k != 1 && k != 2 {
        return Err(PlanError::Infeasible {
            reference: ordered[0].name.clone(),
            violations: vec![Violation::DoublePassFactor { value: k }],
        });
    }
    let dnu = target_idler - target_signal;
    if dnu.abs() > settings.max_delta_nu_hz {
        return Err(PlanError::Infeasible {
            reference: ordered[0].name.clone(),
            violations: vec![Violation::DeltaNu { value_hz: dnu, limit_hz: settings.max_delta_nu_hz }],
        });
    }
    let mut best: Option<(i64, FrequencyPlan)> = None;
    let mut closest_failure = None;
    for f in &ordered {
        match plan_for_feature(f, target_signal, target_idler, settings) {
            Ok((cost, plan)) => {
                if best.as_ref().is_none_or(|(b, _)| cost < *b) {
                    best = Some((cost, plan));
                }
            }
            Err(v) => {
                if closest_failure.is_none() {
                    closest_failure = Some((f.name.clone(), v));
                }
            }
        }
    }
    match best {
        Some((_, plan)) => Ok(plan),
        None => {
            let (reference, violations) = closest_failure.expect("at least one feature");
            Err(PlanError::Infeasible { reference, violations })
        }
    }
}

/// Every broken invariant of `plan`; empty when the plan is valid.
pub fn validate_plan(plan: &FrequencyPlan, settings: &PlanSettings) -> Vec<Violation> {
    let k = plan.aom_double_pass_factor;
    let mut v = Vec::new();
    if k != 1 && k != 2 {
        v.push(Violation::DoublePassFactor { value: k });
    }
    let laser = plan.nu_ref - k * plan.nu_aom1 - plan.nu_laser;
    if laser != 0 {
        v.push(Violation::LaserChain { residual_hz: laser });
    }
    let signal = plan.nu_laser + k * plan.nu_aom2 - plan.nu_signal;
    if signal != 0 {
        v.push(Violation::SignalChain { residual_hz: signal });
    }
    let energy = plan.nu_pump - plan.nu_signal - plan.nu_idler;
    if energy != 0 {
        v.push(Violation::EnergyConservation { residual_hz: energy });
    }
    let dnu = plan.delta_nu - (plan.nu_idler - plan.nu_signal);
    if dnu != 0 {
        v.push(Violation::DeltaNuMismatch { residual_hz: dnu });
    }
    let pump = plan.pump_offset - (plan.nu_pump - 2 * plan.nu_laser);
    if pump != 0 {
        v.push(Violation::PumpOffsetMismatch { residual_hz: pump });
    }
    v.extend(range_violations(plan, settings));
    v
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TuningSolution {
    /// Tuning-crystal temperature change from its configured value (K).
    pub offset_k: f64,
    pub temperature_c: f64,
    /// Achieved minus requested idler shift (Hz).
    pub residual_hz: f64,
}

/// Idler frequency shift (Hz) when the tuning crystal is moved by `offset_k`
/// while the cavity length follows the signal lock at `signal_hz`.
pub fn idler_shift(cavity: &RingCavity, signal_hz: f64, offset_k: f64) -> Result<f64, PlanError> {
    let lam_s = wavelength_um(signal_hz);
    let (ps0, _) = cavity.optical_paths(Polarization::Signal, lam_s, true)?;
    let (pi0, _) = cavity.optical_paths(Polarization::Idler, lam_s, true)?;
    let order = signal_hz * pi0 / SPEED_OF_LIGHT;

    let mut warm = cavity.clone();
    warm.region_mut(RegionRole::Tuning)?.temperature_c += offset_k;
    let (ps1, _) = warm.optical_paths(Polarization::Signal, lam_s, true)?;
    // The lock moves the air path to hold the signal on resonance.
    let air = warm.region_mut(RegionRole::Air)?;
    air.length_mm -= (ps1 - ps0) * 1e3;

    let mut nu = signal_hz;
    for _ in 0..50 {
        let (p, pg) = warm.optical_paths(Polarization::Idler, wavelength_um(nu), true)?;
        let step = (nu * p - order * SPEED_OF_LIGHT) / pg;
        nu -= step;
        if step.abs() < 1e-3 {
            break;
        }
    }
    Ok(nu - signal_hz)
}

/// Tuning-crystal temperature offset that moves the idler comb by `delta_nu_hz`
/// relative to the locked signal comb, searched within ±15 K.
pub fn delta_nu_to_tuning_temperature(
    delta_nu_hz: f64,
    cavity: &RingCavity,
    signal_hz: f64,
) -> Result<TuningSolution, PlanError> {
    let base = cavity.region(RegionRole::Tuning)?.temperature_c;
    let f = |dt: f64| idler_shift(cavity, signal_hz, dt);
    let (mut lo, mut hi) = (-TUNING_WINDOW_K, TUNING_WINDOW_K);
    let (flo, fhi) = (f(lo)?, f(hi)?);
    let (min, max) = (flo.min(fhi), flo.max(fhi));
    if !(delta_nu_hz >= min && delta_nu_hz <= max) {
        return Err(PlanError::TuningOutOfRange { delta_nu_hz, min_hz: min, max_hz: max });
    }
    let rising = fhi > flo;
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if (f(mid)? < delta_nu_hz) == rising {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let offset_k = 0.5 * (lo + hi);
    Ok(TuningSolution {
        offset_k,
        temperature_c: base + offset_k,
        residual_hz: f(offset_k)? - delta_nu_hz,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn features() -> Vec<ReferenceFeature> {
        vec![
            ReferenceFeature { name: "a".into(), frequency_hz: 377_104_390_000_000 },
            ReferenceFeature { name: "b".into(), frequency_hz: 377_105_206_000_000 },
            ReferenceFeature { name: "c".into(), frequency_hz: 377_105_910_000_000 },
        ]
    }

    #[test]
    fn on_feature_with_positive_delta_nu() {
        let f = features();
        let s = PlanSettings::default();
        let nu_s = f[1].frequency_hz;
        let p = solve_plan(nu_s, nu_s + 250 * MHZ, &f, &s).unwrap();
        assert_eq!(p.reference, "b");
        assert_eq!(p.nu_aom1, p.nu_aom2);
        assert_eq!(p.nu_aom2, 160 * MHZ);
        assert_eq!(p.pump_offset, 2 * p.nu_aom2 + 250 * MHZ);
        assert!(validate_plan(&p, &s).is_empty());
        let q = solve_plan(nu_s, nu_s - 170 * MHZ, &f, &s).unwrap();
        assert_eq!(q.pump_offset, 320 * MHZ - 170 * MHZ);
        assert!(validate_plan(&q, &s).is_empty());
    }

    #[test]
    fn light_shift_moves_aom_difference() {
        let f = features();
        let s = PlanSettings::default();
        let nu_s = f[0].frequency_hz + 4 * MHZ;
        let p = solve_plan(nu_s, nu_s + 250 * MHZ, &f, &s).unwrap();
        assert_eq!(p.nu_aom2 - p.nu_aom1, 4 * MHZ);
        assert_eq!(p.nu_aom2, 162 * MHZ);
        assert_eq!(p.nu_signal, nu_s);
    }

    #[test]
    fn two_ghz_is_rejected() {
        let f = features();
        let nu_s = f[1].frequency_hz;
        let e = solve_plan(nu_s, nu_s + 2_000 * MHZ, &f, &PlanSettings::default()).unwrap_err();
        assert!(matches!(e.violations(), [Violation::DeltaNu { limit_hz: 1_180_000_000, .. }]));
        assert!(e.to_string().contains("1.18 GHz"));
    }

    #[test]
    fn far_target_names_aom_range() {
        let f = features();
        let e = solve_plan(f[1].frequency_hz + 50 * MHZ, f[1].frequency_hz, &f, &PlanSettings::default()).unwrap_err();
        assert!(e.violations().iter().any(|v| matches!(v, Violation::AomRange { .. })));
        assert!(matches!(solve_plan(0, 0, &[], &PlanSettings::default()), Err(PlanError::NoFeatures)));
    }

    #[test]
    fn pump_offset_lower_bound_pushes_aoms() {
        // 2 AOM2 + dnu would sit inside (-80, 80) MHz for dnu = -320 MHz with centred AOMs.
        let f = features();
        let s = PlanSettings::default();
        let nu_s = f[2].frequency_hz;
        let e = solve_plan(nu_s, nu_s - 320 * MHZ, &f, &s).unwrap_err();
        assert!(e.violations().iter().any(|v| matches!(v, Violation::PumpOffset { .. })));
        let p = solve_plan(nu_s, nu_s - 236 * MHZ, &f, &s).unwrap();
        assert!(p.pump_offset.abs() >= 80 * MHZ);
        assert!(validate_plan(&p, &s).is_empty());
    }

    #[test]
    fn validate_catches_hand_built_errors() {
        let f = features();
        let s = PlanSettings::default();
        let nu_s = f[1].frequency_hz;
        let good = solve_plan(nu_s, nu_s + 250 * MHZ, &f, &s).unwrap();
        let mut bad = good.clone();
        bad.nu_aom1 = 150 * MHZ;
        bad.nu_laser = bad.nu_ref - bad.nu_aom1;
        bad.nu_signal = bad.nu_laser + bad.nu_aom2;
        bad.nu_idler = bad.nu_signal + bad.delta_nu;
        bad.nu_pump = bad.nu_signal + bad.nu_idler;
        bad.pump_offset = bad.nu_pump - 2 * bad.nu_laser;
        let v = validate_plan(&bad, &s);
        assert_eq!(v, vec![Violation::AomRange { aom: 1, value_hz: 150 * MHZ, min_hz: 156 * MHZ, max_hz: 164 * MHZ }]);
        let mut e = good.clone();
        e.nu_pump += 1;
        assert!(validate_plan(&e, &s).contains(&Violation::EnergyConservation { residual_hz: 1 }));
    }

    #[test]
    fn double_pass_factor() {
        let f = features();
        let s = PlanSettings { aom_double_pass_factor: 2, ..Default::default() };
        let nu_s = f[0].frequency_hz + 8 * MHZ;
        let p = solve_plan(nu_s, nu_s + 250 * MHZ, &f, &s).unwrap();
        assert_eq!(p.nu_aom2 - p.nu_aom1, 4 * MHZ);
        assert!(validate_plan(&p, &s).is_empty());
        let bad = PlanSettings { aom_double_pass_factor: 3, ..Default::default() };
        assert!(solve_plan(nu_s, nu_s, &f, &bad).is_err());
    }

    proptest! {
        #[test]
        fn solver_output_always_validates(
            which in 0usize..3,
            shift in -9_000_000i64..9_000_000,
            dnu in -1_300_000_000i64..1_300_000_000,
        ) {
            let f = features();
            let s = PlanSettings::default();
            let nu_s = f[which].frequency_hz + shift;
            match solve_plan(nu_s, nu_s + dnu, &f, &s) {
                Ok(p) => {
                    prop_assert!(validate_plan(&p, &s).is_empty());
                    prop_assert_eq!(p.nu_pump - p.nu_signal - p.nu_idler, 0);
                    prop_assert_eq!(p.nu_signal, nu_s);
                }
                Err(e) => prop_assert!(!e.violations().is_empty()),
            }
        }

        #[test]
        fn small_perturbations_keep_reference(which in 0usize..3, shift in -3_000_000i64..3_000_000, eps in -999i64..999) {
            let f = features();
            let s = PlanSettings::default();
            let nu_s = f[which].frequency_hz + shift;
            let a = solve_plan(nu_s, nu_s + 250 * MHZ, &f, &s).unwrap();
            let b = solve_plan(nu_s + eps, nu_s + eps + 250 * MHZ, &f, &s).unwrap();
            prop_assert_eq!(a.reference, b.reference);
        }
    }
}
