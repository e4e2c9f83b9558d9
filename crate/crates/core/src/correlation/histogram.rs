use serde::{Deserialize, Serialize};

use super::events::{Channel, DetectionEventStream};

/// Coincidence counts versus signal-minus-idler delay.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct G2Histogram {
    pub bin_width_ps: u64,
    pub counts: Vec<u64>,
    /// Index of the bin whose left edge is `tau = 0`.
    pub delay_origin: usize,
}

impl G2Histogram {
    pub fn bin_width(&self) -> f64 {
        self.bin_width_ps as f64 * 1e-12
    }

    /// Left edge of bin `k` in picoseconds.
    pub fn tau_ps(&self, k: usize) -> i64 {
        (k as i64 - self.delay_origin as i64) * self.bin_width_ps as i64
    }

    /// Left edge of bin `k` in seconds.
    pub fn tau(&self, k: usize) -> f64 {
        self.tau_ps(k) as f64 * 1e-12
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Builds a histogram from `(tau_ps, count)` rows with uniform spacing.
    pub fn from_rows(rows: &[(i64, u64)]) -> Option<Self> {
        if rows.len() < 2 {
            return None;
        }
        let bw = rows[1].0 - rows[0].0;
        if bw <= 0 || rows.windows(2).any(|w| w[1].0 - w[0].0 != bw) || rows[0].0 % bw != 0 {
            return None;
        }
        let origin = -rows[0].0 / bw;
        if origin < 0 || origin as usize > rows.len() {
            return None;
        }
        Some(Self {
            bin_width_ps: bw as u64,
            counts: rows.iter().map(|r| r.1).collect(),
            delay_origin: origin as usize,
        })
    }

    pub fn rows(&self) -> Vec<(i64, u64)> {
        self.counts.iter().enumerate().map(|(k, &c)| (self.tau_ps(k), c)).collect()
    }
}

/// Histogram of every signal-idler delay `t_s - t_i` within `±window`.
///
/// Each signal event is paired with all idler events inside the window
/// (multi-stop); delay `d` goes into bin `floor(d / bin_width)` relative to the origin.
pub fn bin_coincidences(stream: &DetectionEventStream, bin_width: f64, window: f64) -> G2Histogram {
    assert!(bin_width > 0.0, "bin width must be positive");
    let bw = ((bin_width * 1e12).round() as i64).max(1);
    let half = ((window * 1e12 / bw as f64).ceil() as i64).max(1);
    let mut counts = vec![0u64; (2 * half) as usize];
    let sig = stream.timestamps(Channel::Signal);
    let idl = stream.timestamps(Channel::Idler);
    let span = half * bw;
    let mut start = 0usize;
    for &ts in &sig {
        let ts = ts as i64;
        while start < idl.len() && (idl[start] as i64) < ts - span {
            start += 1;
        }
        let mut j = start;
        while j < idl.len() {
            let d = ts - idl[j] as i64;
            if d < -span {
                break;
            }
            let k = d.div_euclid(bw) + half;
            if (0..2 * half).contains(&k) {
                counts[k as usize] += 1;
            }
            j += 1;
        }
    }
    G2Histogram {
        bin_width_ps: bw as u64,
        counts,
        delay_origin: half as usize,
    }
}

#[cfg(test)]
mod tests {
    use super::super::events::DetectionEvent;
    use super::*;

    fn ev(ch: Channel, t: u64) -> DetectionEvent {
        DetectionEvent { channel: ch, timestamp_ps: t }
    }

    #[test]
    fn single_delay_floor_convention() {
        let s = DetectionEventStream {
            events: vec![ev(Channel::Idler, 1_000_000), ev(Channel::Signal, 1_003_100)],
        };
        let h = bin_coincidences(&s, 625e-12, 20e-9);
        assert_eq!(h.total(), 1);
        let k = h.counts.iter().position(|&c| c == 1).unwrap();
        assert_eq!(k as i64 - h.delay_origin as i64, 4);
        assert_eq!(h.tau_ps(k), 2500);
    }

    #[test]
    fn negative_delay_uses_floor() {
        let s = DetectionEventStream {
            events: vec![ev(Channel::Signal, 10_000), ev(Channel::Idler, 10_001)],
        };
        let h = bin_coincidences(&s, 625e-12, 5e-9);
        let k = h.counts.iter().position(|&c| c == 1).unwrap();
        assert_eq!(k as i64 - h.delay_origin as i64, -1);
    }

    #[test]
    fn empty_stream() {
        let h = bin_coincidences(&DetectionEventStream::default(), 625e-12, 10e-9);
        assert_eq!(h.total(), 0);
        assert_eq!(h.counts.len(), 32);
    }

    #[test]
    fn all_pairs_within_window_counted() {
        let s = DetectionEventStream {
            events: vec![
                ev(Channel::Idler, 0),
                ev(Channel::Idler, 1_000),
                ev(Channel::Signal, 2_000),
                ev(Channel::Idler, 50_000),
            ],
        };
        let h = bin_coincidences(&s, 1e-9, 10e-9);
        assert_eq!(h.total(), 2);
    }

    #[test]
    fn rows_round_trip() {
        let h = G2Histogram { bin_width_ps: 625, counts: vec![1, 5, 9, 2], delay_origin: 2 };
        assert_eq!(G2Histogram::from_rows(&h.rows()).unwrap(), h);
    }
}
