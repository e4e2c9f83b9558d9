use nalgebra::{Matrix4, Vector4};
use serde::{Deserialize, Serialize};

use super::histogram::G2Histogram;
use super::CorrelationError;

pub const MIN_NONZERO_BINS: usize = 50;
const MAX_ITERATIONS: usize = 500;

/// Fitted envelope parameters; rates in rad/s, amplitudes in counts per bin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeFit {
    pub gamma_s: f64,
    pub gamma_i: f64,
    /// Peak height above background (counts per bin at `tau = 0`).
    pub peak: f64,
    /// Flat background (counts per bin).
    pub background: f64,
    pub gamma_s_err: f64,
    pub gamma_i_err: f64,
    pub peak_err: f64,
    pub background_err: f64,
    pub chi2: f64,
    pub dof: usize,
    pub iterations: usize,
    /// Set when the fit is not physically meaningful (non-positive peak or
    /// decay-rate uncertainties at least as large as the estimates).
    pub flagged: bool,
}

// Working units: nanoseconds and rad/ns. Parameters: [A, B, gs, gi] with A and
// B in counts per ns.
fn integral(gs: f64, gi: f64, t0: f64, t1: f64) -> f64 {
    let pos = |a: f64, b: f64| 2.0 / gs * ((-0.5 * gs * a).exp() - (-0.5 * gs * b).exp());
    let neg = |a: f64, b: f64| 2.0 / gi * ((0.5 * gi * b).exp() - (0.5 * gi * a).exp());
    if t0 >= 0.0 {
        pos(t0, t1)
    } else if t1 <= 0.0 {
        neg(t0, t1)
    } else {
        neg(t0, 0.0) + pos(0.0, t1)
    }
}

fn bin_model(p: &Vector4<f64>, t0: f64, t1: f64) -> f64 {
    p[0] * integral(p[2], p[3], t0, t1) + p[1] * (t1 - t0)
}

fn jacobian_row(p: &Vector4<f64>, t0: f64, t1: f64) -> Vector4<f64> {
    let mut row = Vector4::zeros();
    row[0] = integral(p[2], p[3], t0, t1);
    row[1] = t1 - t0;
    for j in 2..4 {
        let h = 1e-6 * p[j].abs().max(1e-9);
        let mut up = *p;
        let mut dn = *p;
        up[j] += h;
        dn[j] -= h;
        row[j] = (bin_model(&up, t0, t1) - bin_model(&dn, t0, t1)) / (2.0 * h);
    }
    row
}

struct Bins {
    t0: Vec<f64>,
    t1: Vec<f64>,
    y: Vec<f64>,
    w: Vec<f64>,
}

fn chi2(bins: &Bins, p: &Vector4<f64>) -> f64 {
    (0..bins.y.len())
        .map(|k| {
            let r = bins.y[k] - bin_model(p, bins.t0[k], bins.t1[k]);
            bins.w[k] * r * r
        })
        .sum()
}

fn normal_equations(bins: &Bins, p: &Vector4<f64>) -> (Matrix4<f64>, Vector4<f64>) {
    let mut jtj = Matrix4::zeros();
    let mut jtr = Vector4::zeros();
    for k in 0..bins.y.len() {
        let row = jacobian_row(p, bins.t0[k], bins.t1[k]);
        let r = bins.y[k] - bin_model(p, bins.t0[k], bins.t1[k]);
        jtj += row * row.transpose() * bins.w[k];
        jtr += row * (r * bins.w[k]);
    }
    (jtj, jtr)
}

fn initial_guess(bins: &Bins, bw: f64) -> Vector4<f64> {
    let n = bins.y.len();
    let edge = (n / 10).max(1);
    let mut outer: Vec<f64> = bins.y[..edge].iter().chain(&bins.y[n - edge..]).copied().collect();
    outer.sort_by(f64::total_cmp);
    let bg = outer[outer.len() / 2] / bw;
    let (kmax, ymax) = bins
        .y
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (k, &y)| if y > acc.1 { (k, y) } else { acc });
    let a = ((ymax / bw) - bg).max(1e-9);
    let target = bg * bw + (ymax - bg * bw) / std::f64::consts::E;
    let decay = |mut range: Box<dyn Iterator<Item = usize>>| -> Option<f64> {
        range.find(|&k| bins.y[k] < target).map(|k| {
            let tk = 0.5 * (bins.t0[k] + bins.t1[k]);
            let tm = 0.5 * (bins.t0[kmax] + bins.t1[kmax]);
            2.0 / (tk - tm).abs().max(bw)
        })
    };
    let gs = decay(Box::new(kmax..n)).unwrap_or(0.05);
    let gi = decay(Box::new((0..=kmax).rev())).unwrap_or(0.05);
    Vector4::new(a, bg, gs, gi)
}

fn summarize(bins: &Bins, p: &Vector4<f64>, bw: f64, iterations: usize) -> EnvelopeFit {
    let (jtj, _) = normal_equations(bins, p);
    let cov = jtj.try_inverse().unwrap_or_else(|| Matrix4::from_element(f64::INFINITY));
    let err = |j: usize| {
        let v = cov[(j, j)];
        if v.is_finite() && v >= 0.0 {
            v.sqrt()
        } else {
            f64::INFINITY
        }
    };
    let c = chi2(bins, p);
    let gs = p[2] * 1e9;
    let gi = p[3] * 1e9;
    let (gs_err, gi_err) = (err(2) * 1e9, err(3) * 1e9);
    EnvelopeFit {
        gamma_s: gs,
        gamma_i: gi,
        peak: p[0] * bw,
        background: p[1] * bw,
        gamma_s_err: gs_err,
        gamma_i_err: gi_err,
        peak_err: err(0) * bw,
        background_err: err(1) * bw,
        chi2: c,
        dof: bins.y.len().saturating_sub(4),
        iterations,
        flagged: !(p[0] > 0.0) || !(gs > 0.0 && gi > 0.0) || !(gs_err < gs) || !(gi_err < gi),
    }
}

/// Weighted (Poisson, variance `max(count, 1)`) Levenberg-Marquardt fit of the
/// bin-integrated double exponential plus flat background.
pub fn fit_envelope(hist: &G2Histogram) -> Result<EnvelopeFit, CorrelationError> {
    let nonzero = hist.counts.iter().filter(|&&c| c > 0).count();
    if nonzero < MIN_NONZERO_BINS {
        return Err(CorrelationError::InsufficientData(format!(
            "{nonzero} nonzero bins, need at least {MIN_NONZERO_BINS}"
        )));
    }
    let neg = hist.counts[..hist.delay_origin.min(hist.counts.len())].iter().any(|&c| c > 0);
    let pos = hist.counts[hist.delay_origin.min(hist.counts.len())..].iter().any(|&c| c > 0);
    if !(neg && pos) {
        return Err(CorrelationError::InsufficientData(
            "counts must span both sides of zero delay".into(),
        ));
    }
    let bw = hist.bin_width_ps as f64 * 1e-3;
    let bins = Bins {
        t0: (0..hist.counts.len()).map(|k| hist.tau_ps(k) as f64 * 1e-3).collect(),
        t1: (0..hist.counts.len()).map(|k| hist.tau_ps(k) as f64 * 1e-3 + bw).collect(),
        y: hist.counts.iter().map(|&c| c as f64).collect(),
        w: hist.counts.iter().map(|&c| 1.0 / (c.max(1) as f64)).collect(),
    };
    let mut p = initial_guess(&bins, bw);
    let mut cost = chi2(&bins, &p);
    let mut lambda = 1e-3;
    for it in 1..=MAX_ITERATIONS {
        let (jtj, jtr) = normal_equations(&bins, &p);
        let mut accepted = false;
        while lambda < 1e12 {
            let mut damped = jtj;
            for j in 0..4 {
                damped[(j, j)] *= 1.0 + lambda;
            }
            let Some(step) = damped.lu().solve(&jtr) else {
                lambda *= 10.0;
                continue;
            };
            let trial = p + step;
            if trial[2] <= 0.0 || trial[3] <= 0.0 {
                lambda *= 10.0;
                continue;
            }
            let c = chi2(&bins, &trial);
            if c.is_finite() && c <= cost {
                let small = step.iter().zip(p.iter()).all(|(s, v)| s.abs() <= 1e-9 * v.abs().max(1e-12));
                let rel = (cost - c) / cost.max(1e-300);
                p = trial;
                cost = c;
                lambda = (lambda * 0.1).max(1e-12);
                accepted = true;
                if rel < 1e-12 || small {
                    return Ok(summarize(&bins, &p, bw, it));
                }
                break;
            }
            lambda *= 10.0;
        }
        if !accepted {
            // No downhill step at any damping: stationary point.
            return Ok(summarize(&bins, &p, bw, it));
        }
    }
    Err(CorrelationError::NotConverged {
        iterations: MAX_ITERATIONS,
        last: Box::new(summarize(&bins, &p, bw, MAX_ITERATIONS)),
    })
}
