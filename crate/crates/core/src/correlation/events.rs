use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use super::model::{g2_multimode, G2Model};
use super::CorrelationError;

/// Points in the inverse-CDF delay grid.
pub const SAMPLER_POINTS: usize = 1 << 16;
/// Grid half-width in units of the envelope time constant `2 / gamma`.
const SAMPLER_TIME_CONSTANTS: f64 = 10.0;
/// Refuse simulations expected to produce more events than this.
const MAX_EVENTS: f64 = 5e8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Channel {
    #[serde(rename = "s")]
    Signal,
    #[serde(rename = "i")]
    Idler,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DetectionEvent {
    pub channel: Channel,
    /// Picoseconds from the start of the run.
    pub timestamp_ps: u64,
}

/// Time-ordered two-channel detection record.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DetectionEventStream {
    pub events: Vec<DetectionEvent>,
}

impl DetectionEventStream {
    pub fn timestamps(&self, channel: Channel) -> Vec<u64> {
        self.events
            .iter()
            .filter(|e| e.channel == channel)
            .map(|e| e.timestamp_ps)
            .collect()
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }
}

/// Inverse-CDF sampler for the signal-minus-idler delay distribution.
#[derive(Debug, Clone)]
pub struct DelaySampler {
    grid: Vec<f64>,
    cdf: Vec<f64>,
}

impl DelaySampler {
    pub fn new(model: &G2Model) -> Self {
        let lo = -SAMPLER_TIME_CONSTANTS * 2.0 / model.gamma_i;
        let hi = SAMPLER_TIME_CONSTANTS * 2.0 / model.gamma_s;
        let n = SAMPLER_POINTS;
        let dt = (hi - lo) / (n - 1) as f64;
        let grid: Vec<f64> = (0..n).map(|k| lo + k as f64 * dt).collect();
        let pdf: Vec<f64> = grid.iter().map(|&t| g2_multimode(model, t)).collect();
        let mut cdf = Vec::with_capacity(n);
        let mut acc = 0.0;
        cdf.push(0.0);
        for w in pdf.windows(2) {
            acc += 0.5 * (w[0] + w[1]) * dt;
            cdf.push(acc);
        }
        for c in &mut cdf {
            *c /= acc;
        }
        Self { grid, cdf }
    }

    /// Delay (s) at cumulative probability `u` in `[0, 1)`.
    pub fn quantile(&self, u: f64) -> f64 {
        let k = self.cdf.partition_point(|&c| c <= u).clamp(1, self.cdf.len() - 1);
        let (c0, c1) = (self.cdf[k - 1], self.cdf[k]);
        let (t0, t1) = (self.grid[k - 1], self.grid[k]);
        if c1 > c0 {
            t0 + (u - c0) / (c1 - c0) * (t1 - t0)
        } else {
            t0
        }
    }

    /// Cumulative probability at delay `tau` (piecewise linear on the grid).
    pub fn cdf(&self, tau: f64) -> f64 {
        if tau <= self.grid[0] {
            return 0.0;
        }
        if tau >= *self.grid.last().unwrap() {
            return 1.0;
        }
        let k = self.grid.partition_point(|&t| t <= tau);
        let (t0, t1) = (self.grid[k - 1], self.grid[k]);
        self.cdf[k - 1] + (tau - t0) / (t1 - t0) * (self.cdf[k] - self.cdf[k - 1])
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.quantile(rng.random::<f64>())
    }
}

fn poisson_times<R: Rng + ?Sized>(rng: &mut R, rate: f64, duration_ps: f64, mut f: impl FnMut(f64)) {
    if rate <= 0.0 {
        return;
    }
    let exp = Exp::new(rate).expect("positive rate");
    let mut t = 0.0;
    loop {
        t += exp.sample(rng) * 1e12;
        if t >= duration_ps {
            break;
        }
        f(t);
    }
}

/// Time tags for `duration` seconds of pairs emitted at `pair_rate` plus
/// independent Poissonian singles at `model.background_rate` on each channel.
///
/// Pair delays (signal minus idler) follow the normalized `g2_multimode`.
/// The stream is a pure function of the arguments and `seed`.
pub fn simulate_events(
    model: &G2Model,
    duration: f64,
    pair_rate: f64,
    seed: u64,
) -> Result<DetectionEventStream, CorrelationError> {
    if !(duration > 0.0 && duration.is_finite()) {
        return Err(CorrelationError::InvalidRate(format!("duration {duration} s")));
    }
    if !(pair_rate >= 0.0 && pair_rate.is_finite()) {
        return Err(CorrelationError::InvalidRate(format!("pair rate {pair_rate} /s")));
    }
    let expected = duration * (2.0 * pair_rate + 2.0 * model.background_rate);
    if expected > MAX_EVENTS {
        return Err(CorrelationError::InvalidRate(format!(
            "about {expected:.3e} events expected; limit is {MAX_EVENTS:.0e}"
        )));
    }
    if model.mode_pairs.is_empty() && pair_rate > 0.0 {
        return Err(CorrelationError::InvalidModel("no mode pairs".into()));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let duration_ps = duration * 1e12;
    let mut events = Vec::with_capacity(expected as usize + 16);
    if pair_rate > 0.0 {
        let sampler = DelaySampler::new(model);
        let mut emissions = Vec::new();
        poisson_times(&mut rng, pair_rate, duration_ps, |t| emissions.push(t));
        for t0 in emissions {
            let tau_ps = sampler.sample(&mut rng) * 1e12;
            let ts = (t0 + tau_ps.max(0.0)).round() as u64;
            let ti = (t0 + (-tau_ps).max(0.0)).round() as u64;
            events.push(DetectionEvent { channel: Channel::Signal, timestamp_ps: ts });
            events.push(DetectionEvent { channel: Channel::Idler, timestamp_ps: ti });
        }
    }
    for ch in [Channel::Signal, Channel::Idler] {
        poisson_times(&mut rng, model.background_rate, duration_ps, |t| {
            events.push(DetectionEvent { channel: ch, timestamp_ps: t.round() as u64 });
        });
    }
    events.sort_by_key(|e| (e.timestamp_ps, e.channel));
    Ok(DetectionEventStream { events })
}
