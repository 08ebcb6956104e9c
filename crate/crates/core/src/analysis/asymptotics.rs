use serde::Serialize;

use super::SelectionTrace;
use crate::construction::ThresholdRule;
use crate::error::{Error, Result};

/// `(1 - eps) · sqrt(n · ln ln n) / sqrt(2)`, the iterated-logarithm scale of
/// fair coin fluctuations.
pub fn lil_curve(n: f64, eps: f64) -> Result<f64> {
    if n.is_nan() || n < 3.0 || !(0.0..=1.0).contains(&eps) {
        return Err(Error::LilDomain { n, eps });
    }
    Ok((1.0 - eps) * (n * n.ln().ln()).sqrt() / std::f64::consts::SQRT_2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DyadicPoint {
    pub m: u64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub index: u32,
    pub selected: usize,
    /// Finite-care traces fall outside the convergence claim.
    pub exempt: bool,
    /// |S(m)/m - 1/2| at m = 1, 2, 4, ...
    pub checkpoints: Vec<DyadicPoint>,
    /// Largest deviation over each complete window [2^j, 2^(j+1)), keyed by 2^j.
    pub envelope: Vec<DyadicPoint>,
}

impl ConvergenceReport {
    /// Deviation at the largest dyadic checkpoint.
    pub fn final_deviation(&self) -> Option<f64> {
        self.checkpoints.last().map(|p| p.value)
    }

    /// Every later envelope value is at most `factor` times every earlier one,
    /// considering windows starting at or after `from`.
    pub fn envelope_nonincreasing_within(&self, factor: f64, from: u64) -> bool {
        let mut lowest = f64::INFINITY;
        for p in self.envelope.iter().filter(|p| p.m >= from) {
            if p.value > factor * lowest {
                return false;
            }
            lowest = lowest.min(p.value);
        }
        true
    }
}

pub fn convergence_report(trace: &SelectionTrace) -> ConvergenceReport {
    let mut checkpoints = Vec::new();
    let mut envelope = Vec::new();
    let mut window_max = 0.0f64;
    let mut ones = 0u64;
    let mut next = 1u64;
    for (i, b) in trace.bits().iter().enumerate() {
        let m = i as u64 + 1;
        ones += u64::from(b);
        let dev = (ones as f64 / m as f64 - 0.5).abs();
        if m == next {
            if m > 1 {
                envelope.push(DyadicPoint {
                    m: m / 2,
                    value: window_max,
                });
            }
            checkpoints.push(DyadicPoint { m, value: dev });
            window_max = 0.0;
            next *= 2;
        }
        window_max = window_max.max(dev);
    }
    ConvergenceReport {
        index: trace.index,
        selected: trace.len(),
        exempt: trace.finite_care(),
        checkpoints,
        envelope,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FluctuationReport {
    pub index: u32,
    pub selected: usize,
    /// Extrema of 2δ(m) over m >= 1, with the m attaining them first.
    pub max_two_delta: Option<i64>,
    pub argmax: Option<u64>,
    pub min_two_delta: Option<i64>,
    pub argmin: Option<u64>,
    /// -min_{m <= n} δ(m) at n = 1, 2, 4, ...
    pub envelope: Vec<DyadicPoint>,
    /// Least-squares slope of log(envelope) against log(n) over the positive
    /// envelope points; needs at least three.
    pub fitted_exponent: Option<f64>,
    /// exp(intercept) of the same fit.
    pub fitted_constant: Option<f64>,
    /// ln 2 / ln r for exponential rules.
    pub target_exponent: Option<f64>,
    /// max over envelope points of envelope(n) / n^target.
    pub envelope_constant: Option<f64>,
}

pub fn fluctuation_report(trace: &SelectionTrace, rule: &ThresholdRule) -> FluctuationReport {
    let mut max: Option<(i64, u64)> = None;
    let mut min: Option<(i64, u64)> = None;
    let mut envelope = Vec::new();
    let mut next = 1u64;
    for (i, two_delta) in trace.two_deltas().enumerate() {
        let m = i as u64 + 1;
        if max.is_none_or(|(v, _)| two_delta > v) {
            max = Some((two_delta, m));
        }
        if min.is_none_or(|(v, _)| two_delta < v) {
            min = Some((two_delta, m));
        }
        if m == next {
            let lowest = min.expect("set above").0;
            envelope.push(DyadicPoint {
                m,
                value: (-lowest).max(0) as f64 / 2.0,
            });
            next *= 2;
        }
    }

    let points: Vec<(f64, f64)> = envelope
        .iter()
        .filter(|p| p.value > 0.0)
        .map(|p| ((p.m as f64).ln(), p.value.ln()))
        .collect();
    let fit = least_squares(&points);
    let target = rule.envelope_exponent();
    let envelope_constant = target.map(|e| {
        envelope
            .iter()
            .map(|p| p.value / (p.m as f64).powf(e))
            .fold(0.0, f64::max)
    });

    FluctuationReport {
        index: trace.index,
        selected: trace.len(),
        max_two_delta: max.map(|m| m.0),
        argmax: max.map(|m| m.1),
        min_two_delta: min.map(|m| m.0),
        argmin: min.map(|m| m.1),
        envelope,
        fitted_exponent: fit.map(|f| f.0),
        fitted_constant: fit.map(|f| f.1.exp()),
        target_exponent: target,
        envelope_constant,
    }
}

/// (slope, intercept) of the ordinary least-squares line through `points`.
fn least_squares(points: &[(f64, f64)]) -> Option<(f64, f64)> {
    if points.len() < 3 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}
