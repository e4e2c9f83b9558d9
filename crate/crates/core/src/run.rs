//! Command runner shared by the CLI and the tests. Every run writes its
//! outputs, a copy of the effective config and `manifest.toml` into the output
//! directory.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{ConfigError, RunConfig};
use crate::correlation::{bin_coincidences, fit_envelope, pair_linewidth_hz, simulate_events, EnvelopeFit};
use crate::csvio::{self, ClusterRow, JsiRow};
use crate::filter::{design_filter, filtered_jsi, purity_at_brightest};
use crate::plan::{delta_nu_to_tuning_temperature, solve_plan, validate_plan, FrequencyPlan, TuningSolution};
use crate::rb::{filter_scan, photon_spectroscopy, SpectroscopySettings};
use crate::spectrum::{cluster_report, dfg_scan, enumerate_mode_pairs, find_peaks, jsi_slice, DFG_BACKGROUND};
use crate::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Jsi,
    Clusters,
    DfgScan,
    FilterDesign,
    FilterScan,
    G2,
    Events,
    Fit,
    Plan,
    Spectroscopy,
}

impl Command {
    pub const ALL: [Command; 10] = [
        Command::Jsi,
        Command::Clusters,
        Command::DfgScan,
        Command::FilterDesign,
        Command::FilterScan,
        Command::G2,
        Command::Events,
        Command::Fit,
        Command::Plan,
        Command::Spectroscopy,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Jsi => "jsi",
            Command::Clusters => "clusters",
            Command::DfgScan => "dfg-scan",
            Command::FilterDesign => "filter-design",
            Command::FilterScan => "filter-scan",
            Command::G2 => "g2",
            Command::Events => "events",
            Command::Fit => "fit",
            Command::Plan => "plan",
            Command::Spectroscopy => "spectroscopy",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputRecord {
    pub file: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub version: String,
    pub seed: u64,
    pub config_file: String,
    pub config_sha256: String,
    pub input_sha256: Option<String>,
    #[serde(rename = "output")]
    pub outputs: Vec<OutputRecord>,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub summary: String,
    pub outputs: Vec<PathBuf>,
    pub manifest: Manifest,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn hash_file(path: &Path) -> Result<String, Error> {
    Ok(sha256_hex(&fs::read(path)?))
}

struct Outputs<'a> {
    dir: &'a Path,
    files: Vec<PathBuf>,
}

impl Outputs<'_> {
    fn path(&mut self, name: &str) -> PathBuf {
        let p = self.dir.join(name);
        self.files.push(p.clone());
        p
    }

    fn toml<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), Error> {
        let text = toml::to_string(value).map_err(|e| ConfigError::Invalid(e.to_string()))?;
        fs::write(self.path(name), text)?;
        Ok(())
    }
}

#[derive(Serialize)]
struct ClusterSummary {
    signal_anchor_hz: f64,
    fsr_signal_hz: f64,
    fsr_idler_hz: f64,
    predicted_spacing_hz: Option<f64>,
    measured_spacing_hz: Option<f64>,
    predicted_modes_per_cluster: Option<f64>,
    empirical_modes_per_cluster: usize,
}

#[derive(Serialize)]
struct PlanReport<'a> {
    plan: &'a FrequencyPlan,
    tuning: Option<TuningSolution>,
}

#[derive(Serialize)]
struct FitReport {
    gamma_s_over_2pi_hz: f64,
    gamma_i_over_2pi_hz: f64,
    pair_linewidth_hz: f64,
    fit: EnvelopeFit,
}

fn fit_report(fit: EnvelopeFit) -> FitReport {
    let tau = 2.0 * std::f64::consts::PI;
    FitReport {
        gamma_s_over_2pi_hz: fit.gamma_s / tau,
        gamma_i_over_2pi_hz: fit.gamma_i / tau,
        pair_linewidth_hz: pair_linewidth_hz(fit.gamma_s, fit.gamma_i),
        fit,
    }
}

/// Runs `command` with `config`, writing everything into `out_dir`.
pub fn run(command: Command, config: &RunConfig, out_dir: &Path, input: Option<&Path>) -> Result<RunOutcome, Error> {
    fs::create_dir_all(out_dir)?;
    let config_text = config.to_toml_string();
    fs::write(out_dir.join("config.toml"), &config_text)?;
    let mut out = Outputs { dir: out_dir, files: Vec::new() };
    let summary = execute(command, config, &mut out, input)?;

    let outputs = out
        .files
        .iter()
        .map(|p| {
            Ok(OutputRecord {
                file: p.file_name().expect("file name").to_string_lossy().into_owned(),
                sha256: hash_file(p)?,
            })
        })
        .collect::<Result<Vec<_>, Error>>()?;
    let manifest = Manifest {
        command: command.name().to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        seed: config.seed,
        config_file: "config.toml".to_string(),
        config_sha256: sha256_hex(config_text.as_bytes()),
        input_sha256: input.map(hash_file).transpose()?,
        outputs,
    };
    let text = toml::to_string(&manifest).map_err(|e| ConfigError::Invalid(e.to_string()))?;
    fs::write(out_dir.join("manifest.toml"), text)?;
    Ok(RunOutcome { summary, outputs: out.files, manifest })
}

fn execute(command: Command, cfg: &RunConfig, out: &mut Outputs<'_>, input: Option<&Path>) -> Result<String, Error> {
    let scan = &cfg.scan;
    match command {
        Command::Jsi => {
            let src = cfg.source_config()?;
            let filter = cfg.filter();
            let idler_filter = cfg.filter.filter_idler.then(|| filter.tuned_to(src.idler_comb.anchor_hz));
            let n = scan.jsi_points;
            let anchor = src.signal_comb.anchor_hz;
            let rows = (0..n)
                .map(|k| {
                    let s = anchor - scan.jsi_half_width_hz + 2.0 * scan.jsi_half_width_hz * k as f64 / (n - 1) as f64;
                    Ok(JsiRow {
                        signal_hz: s,
                        idler_hz: src.pump_hz - s,
                        jsi: jsi_slice(&src, s),
                        filtered_jsi: filtered_jsi(&src, Some(&filter), idler_filter.as_ref(), s)?,
                    })
                })
                .collect::<Result<Vec<_>, Error>>()?;
            csvio::write_rows(&out.path("jsi.csv"), &rows)?;
            Ok(format!("jsi: {n} points over +/-{:.3} GHz", scan.jsi_half_width_hz / 1e9))
        }
        Command::Clusters => {
            let src = cfg.source_config()?;
            let pairs = enumerate_mode_pairs(&src, cfg.source.window_hz, cfg.source.weight_floor);
            let report = cluster_report(&src, &pairs);
            let measured = report
                .cluster(1)
                .zip(report.cluster(-1))
                .map(|(a, b)| 0.5 * (a.center_hz - b.center_hz).abs());
            csvio::write_rows(&out.path("pairs.csv"), &pairs)?;
            let rows: Vec<ClusterRow> = report
                .clusters
                .iter()
                .map(|c| ClusterRow {
                    index: c.index,
                    center_hz: c.center_hz,
                    peak_weight: c.peak_weight,
                    fwhm_mode_count: c.fwhm_mode_count,
                    members: c.members.len(),
                })
                .collect();
            csvio::write_rows(&out.path("clusters.csv"), &rows)?;
            out.toml(
                "clusters.toml",
                &ClusterSummary {
                    signal_anchor_hz: report.signal_anchor_hz,
                    fsr_signal_hz: report.fsr_signal_hz,
                    fsr_idler_hz: report.fsr_idler_hz,
                    predicted_spacing_hz: report.predicted_spacing_hz,
                    measured_spacing_hz: measured,
                    predicted_modes_per_cluster: report.predicted_modes_per_cluster,
                    empirical_modes_per_cluster: report.empirical_modes_per_cluster,
                },
            )?;
            Ok(format!(
                "clusters: {} pairs in {} clusters, spacing {:.2} GHz (enumerated {})",
                pairs.len(),
                report.clusters.len(),
                report.predicted_spacing_hz.unwrap_or(f64::NAN) / 1e9,
                measured.map_or("n/a".to_string(), |m| format!("{:.2} GHz", m / 1e9)),
            ))
        }
        Command::DfgScan => {
            let src = cfg.source_config()?;
            let curve = dfg_scan(&src, scan.dfg_start_hz, scan.dfg_stop_hz, scan.dfg_points, DFG_BACKGROUND)?;
            let max = curve.iter().map(|p| p.1).fold(0.0, f64::max);
            let peaks = find_peaks(&curve, 0.1 * max);
            csvio::write_rows(&out.path("dfg_scan.csv"), &csvio::scan_rows(&curve))?;
            Ok(format!("dfg-scan: {} points, {} peaks above 10% of maximum", curve.len(), peaks.len()))
        }
        Command::FilterDesign => {
            let src = cfg.source_config()?;
            let pairs = enumerate_mode_pairs(&src, cfg.source.window_hz, cfg.source.weight_floor);
            let report = cluster_report(&src, &pairs);
            let design = design_filter(
                &report,
                cfg.filter.design.max_unwanted_fraction,
                &cfg.design_constraints(),
                &cfg.filter(),
            )?;
            let purity = purity_at_brightest(&pairs, &design.filter, src.signal_comb.anchor_hz)?;
            csvio::write_rows(&out.path("extinction.csv"), &purity.rows)?;
            out.toml("filter_design.toml", &design)?;
            Ok(format!(
                "filter-design: spacer {:.3} mm, R = {:.4}, unwanted fraction {:.2}%, weakest suppression {:.1} dB",
                design.filter.spacer_length_mm,
                design.filter.reflectivity,
                100.0 * design.unwanted_fraction,
                design.min_suppression_db
            ))
        }
        Command::FilterScan => {
            let src = cfg.source_config()?;
            let pairs = enumerate_mode_pairs(&src, cfg.source.window_hz, cfg.source.weight_floor);
            let data = cfg.atomic_data()?;
            let curve = filter_scan(
                &pairs,
                src.signal_comb.anchor_hz,
                &cfg.filter(),
                &cfg.cell(),
                &data,
                (scan.filter_scan_start_hz, scan.filter_scan_stop_hz),
                scan.filter_scan_step_hz,
                scan.filter_scan_background,
            )?;
            let max = curve.iter().map(|p| p.1).fold(0.0, f64::max);
            let peaks = find_peaks(&curve, 0.05 * max);
            csvio::write_rows(&out.path("filter_scan.csv"), &csvio::scan_rows(&curve))?;
            Ok(format!(
                "filter-scan: {} points, peaks at [{}] GHz",
                curve.len(),
                peaks.iter().map(|p| format!("{:.2}", p.0 / 1e9)).collect::<Vec<_>>().join(", ")
            ))
        }
        Command::Events => {
            let model = cfg.g2_model()?;
            let c = &cfg.correlation;
            let stream = simulate_events(&model, c.duration_s, c.pair_rate, cfg.seed)?;
            csvio::write_events(&out.path("events.csv"), &stream)?;
            Ok(format!("events: {} detection events over {} s", stream.len(), c.duration_s))
        }
        Command::G2 => {
            let model = cfg.g2_model()?;
            let c = &cfg.correlation;
            let stream = simulate_events(&model, c.duration_s, c.pair_rate, cfg.seed)?;
            let hist = bin_coincidences(&stream, c.bin_width_ps as f64 * 1e-12, c.window_ns * 1e-9);
            csvio::write_histogram(&out.path("histogram.csv"), &hist)?;
            let fit = fit_report(fit_envelope(&hist)?);
            out.toml("fit.toml", &fit)?;
            Ok(format!(
                "g2: {} coincidences, gamma_s/2pi = {:.3} MHz, gamma_i/2pi = {:.3} MHz",
                hist.total(),
                fit.gamma_s_over_2pi_hz / 1e6,
                fit.gamma_i_over_2pi_hz / 1e6
            ))
        }
        Command::Fit => {
            let path = input.ok_or_else(|| ConfigError::Invalid("fit needs --input <histogram.csv>".into()))?;
            let hist = csvio::read_histogram(path)?;
            let fit = fit_report(fit_envelope(&hist)?);
            out.toml("fit.toml", &fit)?;
            Ok(format!(
                "fit: gamma_s/2pi = {:.3} MHz, gamma_i/2pi = {:.3} MHz, pair linewidth {:.2} MHz",
                fit.gamma_s_over_2pi_hz / 1e6,
                fit.gamma_i_over_2pi_hz / 1e6,
                fit.pair_linewidth_hz / 1e6
            ))
        }
        Command::Plan => {
            let data = cfg.atomic_data()?;
            let features = data.reference_features();
            let p = &cfg.plan;
            let feature = features
                .iter()
                .find(|f| f.name == p.signal_reference)
                .ok_or_else(|| ConfigError::Invalid(format!("unknown reference feature '{}'", p.signal_reference)))?;
            let target_s = feature.frequency_hz + p.light_shift_hz;
            let plan = solve_plan(target_s, target_s + p.delta_nu_hz, &features, &p.limits)?;
            debug_assert!(validate_plan(&plan, &p.limits).is_empty());
            let tuning = delta_nu_to_tuning_temperature(plan.delta_nu as f64, &cfg.cavity()?, plan.nu_signal as f64)?;
            out.toml("plan.toml", &PlanReport { plan: &plan, tuning: Some(tuning) })?;
            Ok(format!(
                "plan: {} with AOM1 {:.3} MHz, AOM2 {:.3} MHz, pump offset {:.3} MHz, tuning crystal {:+.3} K",
                plan.reference,
                plan.nu_aom1 as f64 / 1e6,
                plan.nu_aom2 as f64 / 1e6,
                plan.pump_offset as f64 / 1e6,
                tuning.offset_k
            ))
        }
        Command::Spectroscopy => {
            let data = cfg.atomic_data()?;
            let s = &cfg.spectroscopy;
            let mut cell = cfg.cell();
            cell.temperature_c = s.cell_temperature_c;
            let (gs, gi) = cfg.gammas();
            let settings = SpectroscopySettings {
                plan: cfg.plan.limits.clone(),
                photon_linewidth_hz: s.photon_linewidth_hz.unwrap_or_else(|| pair_linewidth_hz(gs, gi)),
                normalization_offset_hz: s.normalization_offset_hz,
            };
            let points: Vec<(f64, f64)> = data
                .reference_features()
                .iter()
                .flat_map(|f| s.delta_nu_hz.iter().map(move |&d| (f.frequency_hz as f64, d)))
                .collect();
            let rows = photon_spectroscopy(&points, &cfg.filter(), &cell, &data, &settings)?;
            csvio::write_rows(&out.path("spectroscopy.csv"), &rows)?;
            Ok(format!("spectroscopy: {} rows at {} C", rows.len(), s.cell_temperature_c))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn command_names_round_trip() {
        for c in Command::ALL {
            let v: Command = toml::Value::String(c.name().into()).try_into().unwrap();
            assert_eq!(v, c);
        }
    }

    #[test]
    fn g2_run_is_reproducible() {
        let mut cfg = RunConfig::preset("paper-2020").unwrap();
        cfg.correlation.duration_s = 2.0;
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let ra = run(Command::Events, &cfg, a.path(), None).unwrap();
        let rb = run(Command::Events, &cfg, b.path(), None).unwrap();
        assert_eq!(ra.manifest, rb.manifest);
        cfg.seed += 1;
        let rc = run(Command::Events, &cfg, b.path(), None).unwrap();
        assert_ne!(ra.manifest.outputs, rc.manifest.outputs);
    }

    #[test]
    fn fit_without_input_is_a_config_error() {
        let cfg = RunConfig::preset("paper-2020").unwrap();
        let d = tempfile::tempdir().unwrap();
        assert!(matches!(run(Command::Fit, &cfg, d.path(), None), Err(Error::Config(_))));
    }
}
