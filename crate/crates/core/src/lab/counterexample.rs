//! Graph representations over arbitrary lines for the curve
//! `t ↦ (t, ε·sin(2πt/δ))`.
//!
//! Over the horizontal line through any of its points the curve stays within
//! height `2ε`, so it is C⁰-small in the generalized sense, while over every
//! line its slope is at least `2πε/δ`.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::lambda_cap;
use crate::error::{Error, Result};

/// Phases per period used for the base points and for the curve tangents.
const PHASES: usize = 4096;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleReport {
    pub epsilon: f64,
    pub delta: f64,
    pub r: f64,
    pub angles: usize,
    /// Largest height deviation over the horizontal line, divided by `r`.
    pub lambda_gen: f64,
    /// Largest slope over the horizontal line.
    pub horizontal_max_slope: f64,
    /// Smallest over all sampled line angles of the largest slope over that
    /// line (`null` when the curve is a graph over none of them).
    #[serde(with = "crate::report::inf_as_null")]
    pub min_over_angles_max_slope: f64,
    pub best_angle: f64,
    /// `λ_gen ≤ Λ(1)` and yet no line carries a graph of slope `≤ λ_gen/Λ(1)`.
    pub verdict: bool,
}

/// Largest `|sin a − sin b|` for `a ∈ [b − w, b + w]`.
fn sup_sine_deviation(b: f64, w: f64) -> f64 {
    if w >= PI {
        return 1.0 + b.sin().abs();
    }
    let mut best = ((b - w).sin() - b.sin()).abs().max(((b + w).sin() - b.sin()).abs());
    // interior extrema of sin sit at π/2 + kπ
    let first = ((b - w - FRAC_PI_2) / PI).ceil() as i64;
    let last = ((b + w - FRAC_PI_2) / PI).floor() as i64;
    for k in first..=last {
        let a = FRAC_PI_2 + k as f64 * PI;
        best = best.max((a.sin() - b.sin()).abs());
    }
    best
}

/// Analyzes the curve `(t, ε·sin(2πt/δ))` over lines of `angles` directions in
/// `(−π/2, π/2)`, with windows of half-width `r`.
pub fn analyze_counterexample(epsilon: f64, delta: f64, r: f64, angles: usize) -> Result<CounterexampleReport> {
    if !(epsilon.is_finite() && epsilon >= 0.0) {
        return Err(Error::InvalidParams(format!("epsilon {epsilon} must be non-negative")));
    }
    if !(delta.is_finite() && delta > 0.0 && r.is_finite() && r > 0.0) {
        return Err(Error::InvalidParams("delta and r must be positive".into()));
    }
    if angles < 2 || angles % 2 != 0 {
        return Err(Error::InvalidParams(format!("angle grid {angles} must be even and at least 2")));
    }
    let omega = TAU / delta;
    // Base points at phases offset half a step from the crests.
    let half_window = omega * r;
    let sup_dev = (0..PHASES)
        .map(|i| sup_sine_deviation(TAU * (i as f64 + 0.5) / PHASES as f64, half_window))
        .fold(0.0, f64::max);
    let lambda_gen = epsilon * sup_dev / r;

    // Tangent angles along one period, or along the window when it is shorter.
    let span = delta.min(2.0 * r);
    let tangent_angles: Vec<f64> = (0..PHASES)
        .map(|i| {
            let t = span * i as f64 / PHASES as f64;
            (epsilon * omega * (omega * t).cos()).atan()
        })
        .collect();
    let max_slope = |theta: f64| -> f64 {
        let mut worst: f64 = 0.0;
        for &phi in &tangent_angles {
            let rel = phi - theta;
            if rel.abs() >= FRAC_PI_2 {
                return f64::INFINITY;
            }
            worst = worst.max(rel.tan().abs());
        }
        worst
    };
    let (best_angle, min_slope) = (1..angles)
        .into_par_iter()
        .map(|j| {
            let theta = -FRAC_PI_2 + PI * j as f64 / angles as f64;
            (theta, max_slope(theta))
        })
        .reduce(
            || (0.0, f64::INFINITY),
            |a, b| if b.1 < a.1 || (b.1 == a.1 && b.0.abs() < a.0.abs()) { b } else { a },
        );
    let horizontal_max_slope = max_slope(0.0);
    let cap = lambda_cap(1);
    let verdict = lambda_gen <= cap && min_slope > lambda_gen / cap;
    Ok(CounterexampleReport {
        epsilon,
        delta,
        r,
        angles,
        lambda_gen,
        horizontal_max_slope,
        min_over_angles_max_slope: min_slope,
        best_angle,
        verdict,
    })
}
