//! CSV schemas for command outputs. Floats are written in shortest
//! round-trip form, so every file parses back to identical values.

use std::fs::File;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::correlation::{DetectionEvent, DetectionEventStream, G2Histogram};
use crate::Error;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JsiRow {
    pub signal_hz: f64,
    pub idler_hz: f64,
    pub jsi: f64,
    pub filtered_jsi: f64,
}

/// A sampled curve against a detuning.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub detuning_hz: f64,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistogramRow {
    /// Left edge of the bin.
    pub tau_ps: i64,
    pub count: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusterRow {
    pub index: i64,
    pub center_hz: f64,
    pub peak_weight: f64,
    pub fwhm_mode_count: usize,
    pub members: usize,
}

pub fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), Error> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_rows<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, Error> {
    let mut r = csv::Reader::from_reader(File::open(path)?);
    Ok(r.deserialize().collect::<Result<_, _>>()?)
}

pub fn scan_rows(curve: &[(f64, f64)]) -> Vec<ScanRow> {
    curve.iter().map(|&(detuning_hz, value)| ScanRow { detuning_hz, value }).collect()
}

pub fn write_histogram(path: &Path, hist: &G2Histogram) -> Result<(), Error> {
    let rows: Vec<HistogramRow> = hist
        .rows()
        .into_iter()
        .map(|(tau_ps, count)| HistogramRow { tau_ps, count })
        .collect();
    write_rows(path, &rows)
}

pub fn read_histogram(path: &Path) -> Result<G2Histogram, Error> {
    let rows: Vec<HistogramRow> = read_rows(path)?;
    let pairs: Vec<(i64, u64)> = rows.iter().map(|r| (r.tau_ps, r.count)).collect();
    G2Histogram::from_rows(&pairs).ok_or_else(|| {
        Error::Io(std::io::Error::new(
            std::io::ErrorKind::InvalidData,
            format!("{}: bins must be uniform, contain tau = 0 and number at least two", path.display()),
        ))
    })
}

pub fn write_events(path: &Path, stream: &DetectionEventStream) -> Result<(), Error> {
    write_rows(path, &stream.events)
}

pub fn read_events(path: &Path) -> Result<DetectionEventStream, Error> {
    let events: Vec<DetectionEvent> = read_rows(path)?;
    Ok(DetectionEventStream { events })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correlation::Channel;
    use proptest::prelude::*;

    #[test]
    fn events_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("events.csv");
        let s = DetectionEventStream {
            events: vec![
                DetectionEvent { channel: Channel::Idler, timestamp_ps: 12 },
                DetectionEvent { channel: Channel::Signal, timestamp_ps: u64::MAX },
            ],
        };
        write_events(&p, &s).unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap().lines().next(), Some("channel,timestamp_ps"));
        assert_eq!(read_events(&p).unwrap(), s);
    }

    #[test]
    fn histogram_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("h.csv");
        let h = G2Histogram { bin_width_ps: 625, counts: vec![0, 3, 7, 1], delay_origin: 1 };
        write_histogram(&p, &h).unwrap();
        assert_eq!(read_histogram(&p).unwrap(), h);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn floats_round_trip(values in proptest::collection::vec((any::<f64>(), any::<f64>()), 1..20)) {
            let finite: Vec<(f64, f64)> = values.into_iter().filter(|(a, b)| a.is_finite() && b.is_finite()).collect();
            let dir = tempfile::tempdir().unwrap();
            let p = dir.path().join("scan.csv");
            let rows = scan_rows(&finite);
            write_rows(&p, &rows).unwrap();
            let back: Vec<ScanRow> = read_rows(&p).unwrap();
            prop_assert_eq!(back, rows);
        }
    }
}
