//! Sliding-window estimate of the lumped term of the first-order
//! ultra-local model `ẏ = F + α·u`.
//!
//! Over a window of length `T` ending at `t`,
//!
//! ```text
//! F̂ = -(6/T³) ∫₀ᵀ [ (T − 2σ)·y(t−T+σ) + α·σ·(T−σ)·u(t−T+σ) ] dσ
//! ```
//!
//! which is exact whenever `F` and `u` are constant over the window. The
//! output is integrated as the piecewise-linear interpolant of its samples
//! and the input as a zero-order hold, each against its weight in closed
//! form, so affine outputs are recovered to round-off.

use std::collections::VecDeque;

use serde::Serialize;

use crate::error::{Error, Result};

/// One controller-period sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EstimatorSample {
    /// Sample time (d).
    pub t: f64,
    /// Measured output.
    pub y: f64,
    /// Input held over the interval that ends at `t`.
    pub u: f64,
}

/// Ring of recent samples.
#[derive(Debug, Clone, Default, Serialize)]
pub struct EstimatorBuffer {
    samples: VecDeque<EstimatorSample>,
    /// Span to retain (d).
    keep: f64,
}

impl EstimatorBuffer {
    pub fn new(window: f64) -> Self {
        EstimatorBuffer {
            samples: VecDeque::new(),
            keep: window,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> impl Iterator<Item = &EstimatorSample> {
        self.samples.iter()
    }

    /// Time covered by the buffered samples.
    pub fn span(&self) -> f64 {
        match (self.samples.front(), self.samples.back()) {
            (Some(a), Some(b)) => b.t - a.t,
            _ => 0.0,
        }
    }

    pub fn push(&mut self, t: f64, y: f64, u: f64) -> Result<()> {
        if let Some(last) = self.samples.back() {
            if !(t > last.t) {
                return Err(Error::invalid(
                    "t",
                    format!("estimator samples must be strictly increasing ({} after {})", t, last.t),
                ));
            }
        }
        self.samples.push_back(EstimatorSample { t, y, u });
        let tol = 1e-9 * self.keep.max(1e-12);
        while self.samples.len() > 2 && t - self.samples[1].t >= self.keep - tol {
            self.samples.pop_front();
        }
        Ok(())
    }

    pub fn clear(&mut self) {
        self.samples.clear();
    }
}

/// Estimate of `F` over the window `[t - window, t]`, or `None` while the
/// buffer does not yet cover a full window.
pub fn estimate_f(buf: &EstimatorBuffer, alpha: f64, window: f64, t: f64) -> Option<f64> {
    let tol = 1e-9 * window.max(1e-12);
    let samples = &buf.samples;
    let end = samples.partition_point(|s| s.t <= t + tol);
    if end == 0 {
        return None;
    }
    let last = samples[end - 1];
    let start_time = last.t - window;
    let first = samples.partition_point(|s| s.t <= start_time + tol);
    if first == 0 {
        return None;
    }
    let first = first - 1;
    if first + 1 >= end {
        return None;
    }

    let t0 = samples[first].t;
    let y_ref = samples[first].y;
    let span = last.t - t0;
    if span < window - tol {
        return None;
    }
    let weight = |s: f64| span - 2.0 * s;
    let input_weight = |s: f64| span * s * s / 2.0 - s * s * s / 3.0;

    let mut y_term = 0.0;
    let mut u_term = 0.0;
    for j in first..end - 1 {
        let (a, b) = (samples[j], samples[j + 1]);
        let (sa, sb) = (a.t - t0, b.t - t0);
        let (ya, yb) = (a.y - y_ref, b.y - y_ref);
        // exact integral of (linear weight) × (linear interpolant)
        y_term += (sb - sa) / 6.0 * (weight(sa) * (2.0 * ya + yb) + weight(sb) * (ya + 2.0 * yb));
        u_term += b.u * (input_weight(sb) - input_weight(sa));
    }
    Some(-6.0 / (span * span * span) * (y_term + alpha * u_term))
}

#[cfg(test)]
mod tests {
    use super::*;

    const DT: f64 = 5.0 / 1440.0;
    const T: f64 = 1.0 / 24.0;

    fn fill(f: impl Fn(f64) -> (f64, f64), n: usize) -> EstimatorBuffer {
        let mut b = EstimatorBuffer::new(T);
        for i in 0..n {
            let t = i as f64 * DT;
            let (y, u) = f(t);
            b.push(t, y, u).unwrap();
        }
        b
    }

    #[test]
    fn constants_are_annihilated() {
        let b = fill(|_| (3.7, 0.0), 40);
        let f = estimate_f(&b, -0.01, T, 39.0 * DT).unwrap();
        assert!(f.abs() < 1e-12);
    }

    #[test]
    fn ramp_slope_is_recovered() {
        let a = 2.5;
        let b = fill(|t| (1.0 + a * t, 0.0), 40);
        let f = estimate_f(&b, -0.01, T, 39.0 * DT).unwrap();
        assert!((f - a).abs() < 1e-9, "{f}");
    }

    #[test]
    fn simulated_first_order_plant() {
        // ẏ = F₀ + αu with u ≡ 1 sampled on the grid.
        let (f0, alpha) = (2.0, 0.5);
        let b = fill(|t| (0.3 + (f0 + alpha) * t, 1.0), 13);
        let f = estimate_f(&b, alpha, T, 12.0 * DT).unwrap();
        assert!((f - f0).abs() < 1e-3);
    }

    #[test]
    fn not_ready_until_the_window_is_covered() {
        let b = fill(|t| (t, 0.0), 12);
        assert!(estimate_f(&b, 1.0, T, 11.0 * DT).is_none());
        let b = fill(|t| (t, 0.0), 13);
        assert!(estimate_f(&b, 1.0, T, 12.0 * DT).is_some());
        assert!(estimate_f(&EstimatorBuffer::new(T), 1.0, T, 0.0).is_none());
    }

    #[test]
    fn buffer_rejects_non_increasing_times() {
        let mut b = EstimatorBuffer::new(T);
        b.push(0.1, 0.0, 0.0).unwrap();
        assert!(b.push(0.1, 1.0, 0.0).is_err());
        assert!(b.push(0.05, 1.0, 0.0).is_err());
    }

    #[test]
    fn buffer_keeps_about_one_window() {
        let b = fill(|t| (t, 0.0), 200);
        assert!(b.span() >= T * (1.0 - 1e-9));
        assert!(b.span() < T + 2.0 * DT);
    }

    #[test]
    fn piecewise_constant_input_is_integrated_exactly() {
        // y follows ẏ = F + αu exactly with u switching mid-window.
        let (f0, alpha) = (-0.4, -0.02);
        let mut b = EstimatorBuffer::new(T);
        let mut y = 0.9;
        let mut u_prev = 0.0;
        for i in 0..30 {
            let t = i as f64 * DT;
            b.push(t, y, u_prev).unwrap();
            let u = if i % 3 == 0 { 40.0 } else { 5.0 * i as f64 };
            y += (f0 + alpha * u) * DT;
            u_prev = u;
        }
        let f = estimate_f(&b, alpha, T, 29.0 * DT).unwrap();
        assert!((f - f0).abs() < 1e-10, "{f}");
    }
}
