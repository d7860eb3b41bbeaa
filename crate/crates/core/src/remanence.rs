//! Decay experiment on simulated tags and logistic curve fitting.
//!
//! The experiment mirrors a bench procedure: fill the whole memory with a
//! pseudorandom pattern, cut power for a fixed interval, restore power, read
//! the memory back and score the Hamming distance to the pattern. A decayed
//! cell lands on either value with probability one half relative to a uniform
//! pattern, so the curve saturates near 0.5.

use std::fmt::Write as _;

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::{self, streams};
use crate::sram::{hamming_fraction, TagState};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecaySample {
    pub tag_id: u64,
    pub interval_s: f64,
    pub hamming: f64,
}

/// `amplitude / (1 + exp(-(t - midpoint_s) / slope_s))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogisticFit {
    pub amplitude: f64,
    pub midpoint_s: f64,
    pub slope_s: f64,
    pub rss: f64,
}

impl LogisticFit {
    pub fn eval(&self, t: f64) -> f64 {
        self.amplitude * sigmoid((t - self.midpoint_s) / self.slope_s)
    }
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Runs one fill/off/on/compare trial per interval. Intervals must be sorted
/// and non-negative; each uses a fresh pattern derived from `pattern_seed`.
pub fn run_decay_experiment(tag: &mut TagState, intervals: &[f64], pattern_seed: u64) -> Result<Vec<DecaySample>> {
    if intervals.iter().any(|&t| !(t >= 0.0) || !t.is_finite()) {
        return Err(Error::Range("intervals must be finite and non-negative".into()));
    }
    if intervals.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Range("intervals must be sorted".into()));
    }
    let n = tag.len_bits();
    let skip = (tag.spec().excluded_bytes * 8).min(n);
    let mut samples = Vec::with_capacity(intervals.len());
    for (i, &interval_s) in intervals.iter().enumerate() {
        if !tag.is_powered() {
            tag.power_on(tag.clock_s())?;
        }
        let mut prng = rng::stream(rng::derive_seed(pattern_seed, i as u64), streams::PATTERN);
        let pattern: Vec<bool> = (0..n).map(|_| prng.random_bool(0.5)).collect();
        tag.write_bits(0, &pattern)?;
        let off_at = tag.clock_s();
        tag.power_off(off_at)?;
        tag.power_on(off_at + interval_s)?;
        let read = tag.read_bits(0, n)?;
        samples.push(DecaySample {
            tag_id: tag.id(),
            interval_s,
            hamming: hamming_fraction(&pattern[skip..], &read[skip..])?,
        });
    }
    Ok(samples)
}

/// Least-squares logistic fit: a grid search over midpoint and slope with the
/// amplitude solved in closed form, then Levenberg-Marquardt refinement on
/// `(amplitude, midpoint, ln slope)`.
pub fn fit_logistic(samples: &[DecaySample]) -> Result<LogisticFit> {
    if samples.len() < 4 {
        return Err(Error::NoFit(format!("need at least 4 samples, got {}", samples.len())));
    }
    let mut pts: Vec<(f64, f64)> = samples.iter().map(|s| (s.interval_s, s.hamming)).collect();
    if pts.iter().any(|&(t, h)| !t.is_finite() || !h.is_finite()) {
        return Err(Error::NoFit("non-finite sample".into()));
    }
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let first = pts[0].1;
    if pts.iter().all(|&(_, h)| h == first) {
        return Err(Error::NoFit("all samples have the same value".into()));
    }
    let t_max = pts.iter().map(|p| p.0).fold(0.0f64, f64::max).max(1e-6);

    let (mut best, mut best_rss) = ([0.5, 0.0, 0.0], f64::INFINITY);
    const T0_STEPS: usize = 240;
    const S_STEPS: usize = 80;
    for i in 0..=T0_STEPS {
        let t0 = t_max * i as f64 / T0_STEPS as f64;
        for j in 0..=S_STEPS {
            // log-spaced slope from t_max / 1000 to t_max
            let ln_s = (t_max * 1e-3).ln() + (1e3f64).ln() * j as f64 / S_STEPS as f64;
            let amp = best_amplitude(&pts, t0, ln_s.exp());
            let rss = residual(&pts, [amp, t0, ln_s]);
            if rss < best_rss {
                best = [amp, t0, ln_s];
                best_rss = rss;
            }
        }
    }

    let (params, rss) = levenberg_marquardt(&pts, best, best_rss);
    Ok(LogisticFit { amplitude: params[0], midpoint_s: params[1], slope_s: params[2].exp(), rss })
}

const MIN_AMPLITUDE: f64 = 1e-9;

fn best_amplitude(pts: &[(f64, f64)], t0: f64, s: f64) -> f64 {
    let (num, den) = pts.iter().fold((0.0, 0.0), |(n, d), &(t, y)| {
        let g = sigmoid((t - t0) / s);
        (n + y * g, d + g * g)
    });
    if den == 0.0 {
        return 1.0;
    }
    (num / den).clamp(MIN_AMPLITUDE, 1.0)
}

fn residual(pts: &[(f64, f64)], p: [f64; 3]) -> f64 {
    let s = p[2].exp();
    pts.iter().map(|&(t, y)| (y - p[0] * sigmoid((t - p[1]) / s)).powi(2)).sum()
}

fn project(p: [f64; 3]) -> [f64; 3] {
    [p[0].clamp(MIN_AMPLITUDE, 1.0), p[1], p[2].clamp(-30.0, 30.0)]
}

fn levenberg_marquardt(pts: &[(f64, f64)], start: [f64; 3], start_rss: f64) -> ([f64; 3], f64) {
    let (mut p, mut rss) = (start, start_rss);
    let mut lambda = 1e-3;
    for _ in 0..1000 {
        let s = p[2].exp();
        let mut jtj = [[0.0; 3]; 3];
        let mut jtr = [0.0; 3];
        for &(t, y) in pts {
            let z = (t - p[1]) / s;
            let g = sigmoid(z);
            let dg = g * (1.0 - g);
            // gradient of the model with respect to (amplitude, midpoint, ln slope)
            let grad = [g, -p[0] * dg / s, -p[0] * dg * z];
            let r = y - p[0] * g;
            for a in 0..3 {
                jtr[a] += grad[a] * r;
                for b in 0..3 {
                    jtj[a][b] += grad[a] * grad[b];
                }
            }
        }
        let mut improved = false;
        while lambda < 1e16 {
            let mut m = jtj;
            for (d, row) in m.iter_mut().enumerate() {
                row[d] += lambda * jtj[d][d].max(1e-12);
            }
            if let Some(step) = solve3(m, jtr) {
                let cand = project([p[0] + step[0], p[1] + step[1], p[2] + step[2]]);
                let cand_rss = residual(pts, cand);
                if cand_rss < rss {
                    let gain = rss - cand_rss;
                    p = cand;
                    rss = cand_rss;
                    lambda = (lambda * 0.3).max(1e-15);
                    improved = gain > rss * 1e-15 + 1e-300;
                    break;
                }
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }
    (p, rss)
}

/// Gaussian elimination with partial pivoting.
fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let piv = (col..3).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..3 {
            let f = a[row][col] / a[col][col];
            for k in col..3 {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let tail: f64 = (row + 1..3).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - tail) / a[row][row];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// Default share of the fitted asymptote at which memory counts as decayed.
pub const DEFAULT_FULL_DECAY_THRESHOLD: f64 = 0.96;

/// Time at which the fitted curve reaches `threshold_fraction` of its
/// asymptote: `t0 + s * ln(th / (1 - th))`.
pub fn full_decay_time(fit: &LogisticFit, threshold_fraction: f64) -> Result<f64> {
    if !(threshold_fraction > 0.0 && threshold_fraction < 1.0) {
        return Err(Error::Range(format!("threshold {threshold_fraction} not in (0, 1)")));
    }
    Ok(fit.midpoint_s + fit.slope_s * (threshold_fraction / (1.0 - threshold_fraction)).ln())
}

/// Mean Hamming fraction per distinct interval, in interval order.
pub fn average_by_interval(samples: &[DecaySample]) -> Vec<(f64, f64)> {
    let mut sorted: Vec<&DecaySample> = samples.iter().collect();
    sorted.sort_by(|a, b| a.interval_s.total_cmp(&b.interval_s));
    let mut out: Vec<(f64, f64, usize)> = Vec::new();
    for s in sorted {
        match out.last_mut() {
            Some(last) if last.0 == s.interval_s => {
                last.1 += s.hamming;
                last.2 += 1;
            }
            _ => out.push((s.interval_s, s.hamming, 1)),
        }
    }
    out.into_iter().map(|(t, sum, n)| (t, sum / n as f64)).collect()
}

pub const SAMPLES_CSV_HEADER: &str = "tag_id,interval_s,hamming_fraction";
pub const FITS_CSV_HEADER: &str = "tag_id,amplitude,midpoint_s,slope_s,rss";

/// One CSV line per sample after the header.
pub fn samples_to_csv(samples: &[DecaySample]) -> String {
    let mut out = format!("{SAMPLES_CSV_HEADER}\n");
    for s in samples {
        let _ = writeln!(out, "{},{:.6},{:.6}", s.tag_id, s.interval_s, s.hamming);
    }
    out
}

pub fn fit_to_csv_row(tag_id: &str, fit: &LogisticFit) -> String {
    format!("{tag_id},{:.6},{:.6},{:.6},{:.6}", fit.amplitude, fit.midpoint_s, fit.slope_s, fit.rss)
}
