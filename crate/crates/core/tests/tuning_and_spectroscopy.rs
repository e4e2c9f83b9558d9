use cespdc::config::RunConfig;
use cespdc::plan::{delta_nu_to_tuning_temperature, PlanSettings};
use cespdc::rb::{cell_transmission, photon_spectroscopy, Arm, AtomicData, SpectroscopySettings};

fn preset() -> RunConfig {
    RunConfig::preset("paper-2020").unwrap()
}

#[test]
fn tuning_temperature_is_monotone_and_zero_at_degeneracy() {
    let cfg = preset();
    let cavity = cfg.cavity().unwrap();
    let nu_s = cfg.source.signal_anchor_hz;
    let zero = delta_nu_to_tuning_temperature(0.0, &cavity, nu_s).unwrap();
    assert!(zero.offset_k.abs() < 1e-6, "{}", zero.offset_k);

    let mut last = f64::INFINITY;
    for dnu in [-500e6, -170e6, 0.0, 250e6, 500e6] {
        let s = delta_nu_to_tuning_temperature(dnu, &cavity, nu_s).unwrap();
        assert!(s.residual_hz.abs() < 1e3, "{dnu}: residual {}", s.residual_hz);
        assert!(s.offset_k < last);
        last = s.offset_k;
    }
    let s = delta_nu_to_tuning_temperature(250e6, &cavity, nu_s).unwrap();
    assert!((s.offset_k + 2.913).abs() < 0.01, "{}", s.offset_k);
}

#[test]
fn tuning_outside_window_is_rejected() {
    let cfg = preset();
    let cavity = cfg.cavity().unwrap();
    assert!(delta_nu_to_tuning_temperature(5e9, &cavity, cfg.source.signal_anchor_hz).is_err());
}

#[test]
fn photon_spectroscopy_at_warm_cell() {
    let cfg = preset();
    let data = AtomicData::rb_d1();
    let mut cell = cfg.cell();
    cell.temperature_c = 40.0;
    let settings = SpectroscopySettings {
        plan: PlanSettings::default(),
        photon_linewidth_hz: 4.3e6,
        normalization_offset_hz: 70e9,
    };
    let nu_s = cfg.source.signal_anchor_hz;
    let rows = photon_spectroscopy(&[(nu_s, 250e6)], &cfg.filter(), &cell, &data, &settings).unwrap();
    assert_eq!(rows.len(), 2);
    let signal = rows.iter().find(|r| r.arm == Arm::Signal).unwrap();
    let idler = rows.iter().find(|r| r.arm == Arm::Idler).unwrap();
    assert_eq!(signal.reference, "Rb87 F=2->F'=1");
    assert!(signal.transmission < 1.0);
    // A few-MHz photon averages the Doppler profile to within a few percent.
    assert!((signal.transmission / signal.laser_transmission - 1.0).abs() < 0.05);
    assert!((idler.frequency_hz - signal.frequency_hz - 250e6).abs() < 1.0);
    let direct = cell_transmission(&cell, &data, idler.frequency_hz).unwrap();
    assert!((idler.laser_transmission - direct).abs() < 1e-12);
}
