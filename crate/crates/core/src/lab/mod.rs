//! Numerical checks of the C⁰-to-C¹ statement and its supporting lemmas.

mod certify;
mod counterexample;

pub use certify::{
    certify_du_bound, global_du_bound, CertifiedDuBound, CertifiedNode, ProbeFailure, INNER_RADIUS_FRACTION,
};
pub use counterexample::{analyze_counterexample, CounterexampleReport};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extract::{component, ExtractOptions, FrameContext};
use crate::immersion::{ParamImmersion, ParamPoint};
use crate::radius::{
    is_c0_r_lambda, is_r_lambda, max_radius, PropertyKind, RadiusOptions, RadiusReport, VerdictStatus,
};

/// Growth factor of the radius under one enlargement step.
pub const ENLARGEMENT_RADIUS_FACTOR: f64 = 7.0 / 4.0;
/// Largest slope for which the inclusion `U_{2r/5,q} ⊂ U_{r,p}` is asserted.
pub const INCLUSION_MAX_LAMBDA: f64 = 0.1;
/// Inclusion checks use at most this many points `p`.
const INCLUSION_MAX_PAIRS: usize = 16;

/// The threshold `Λ(m) = 10⁻⁵·m⁻²` below which C⁰-smallness forces
/// C¹-smallness.
pub fn lambda_cap(m: usize) -> f64 {
    assert!(m >= 1, "dimension must be positive");
    1e-5 / (m * m) as f64
}

/// Slope multiplier `8√m` of one enlargement step.
pub fn enlargement_slope_factor(m: usize) -> f64 {
    8.0 * (m as f64).sqrt()
}

/// Arithmetic behind iterating the enlargement step three times:
/// `(7/4)³ > 5` and `(8√m)³·8⁻³·m^{-3/2} = 1`.
pub fn iteration_constant_check() -> bool {
    let growth = ENLARGEMENT_RADIUS_FACTOR.powi(3);
    let slopes_cancel = [1usize, 2, 3, 10].iter().all(|&m| {
        let product = enlargement_slope_factor(m).powi(3) * 8f64.powi(-3) * (m as f64).powf(-1.5);
        (product - 1.0).abs() <= 4.0 * f64::EPSILON
    });
    growth == 5.359375 && growth > 5.0 && growth * 0.2 >= 1.0 && slopes_cancel
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremVerdict {
    #[serde(rename = "lambda")]
    pub lambda: f64,
    pub lambda_cap: f64,
    /// `λ/Λ`, the slope bound of the C¹ radius.
    pub scaled_lambda: f64,
    pub r0: RadiusReport,
    pub r1_scaled: RadiusReport,
    /// `r1_scaled.r_lo − r0.r_hi`; `null` when infinite.
    #[serde(with = "crate::report::inf_as_null")]
    pub margin: f64,
    pub holds: bool,
}

/// Compares `r₀(f, λ)` with `r₁(f, λ/Λ)` on the sample `q`.
pub fn verify_main_theorem(
    f: &ParamImmersion,
    lambda: f64,
    q: &[ParamPoint],
    opts: &RadiusOptions,
) -> Result<TheoremVerdict> {
    let cap = lambda_cap(f.m());
    if !(lambda > 0.0 && lambda <= cap) {
        return Err(Error::HypothesisFailed(format!("lambda {lambda:e} must lie in (0, {cap:e}]")));
    }
    let scaled_lambda = lambda / cap;
    let r0 = max_radius(f, lambda, PropertyKind::C0, q, opts)?;
    let r1 = max_radius(f, scaled_lambda, PropertyKind::C1, q, opts)?;
    let (margin, holds) = match (r0.is_unbounded(), r1.is_unbounded()) {
        (_, true) => (f64::INFINITY, true),
        (true, false) => (f64::NEG_INFINITY, false),
        (false, false) => {
            let margin = r1.r_lo - r0.r_hi;
            (margin, margin >= -(r0.width() + r1.width()))
        }
    };
    Ok(TheoremVerdict { lambda, lambda_cap: cap, scaled_lambda, r0, r1_scaled: r1, margin, holds })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnlargementVerdict {
    pub radius: f64,
    #[serde(rename = "lambda")]
    pub lambda: f64,
    pub enlarged_radius: f64,
    pub enlarged_lambda: f64,
    /// Whether `λ ≤ 1/(8√m)`, the range in which the enlargement is asserted.
    pub within_hypothesis: bool,
    pub status: VerdictStatus,
    pub holds: bool,
}

/// Checks that the C¹ property at `(r, λ)` on `q` carries over to
/// `(7r/4, 8√m·λ)`.
///
/// Slopes above `1/(8√m)` are still checked; the verdict records that they
/// lie outside the asserted range.
pub fn check_enlargement(
    f: &ParamImmersion,
    r: f64,
    lambda: f64,
    q: &[ParamPoint],
    opts: &ExtractOptions,
) -> Result<EnlargementVerdict> {
    let hypothesis = is_r_lambda(f, r, lambda, q, opts)?;
    if !hypothesis.holds {
        return Err(Error::HypothesisFailed(format!(
            "the C¹ property fails at r = {r:e}, lambda = {lambda:e}"
        )));
    }
    let factor = enlargement_slope_factor(f.m());
    let enlarged_radius = ENLARGEMENT_RADIUS_FACTOR * r;
    let enlarged_lambda = factor * lambda;
    let v = is_r_lambda(f, enlarged_radius, enlarged_lambda, q, opts)?;
    Ok(EnlargementVerdict {
        radius: r,
        lambda,
        enlarged_radius,
        enlarged_lambda,
        within_hypothesis: lambda * factor <= 1.0,
        status: v.status,
        holds: v.holds,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceCheck {
    /// `ρ + rλ`.
    pub bound: f64,
    pub pairs_checked: usize,
    /// Largest `|f(q) − f(p)|` over the sampled `p`.
    pub max_distance: f64,
    pub holds: bool,
}

/// Checks `|f(q) − f(p)| < ρ + rλ` for lattice points `p` of `U_{ρ,q}`.
pub fn check_distance_bound(
    f: &ParamImmersion,
    q: &ParamPoint,
    rho: f64,
    r: f64,
    lambda: f64,
    opts: &ExtractOptions,
) -> Result<DistanceCheck> {
    if !(rho > 0.0 && rho <= r) {
        return Err(Error::InvalidInput(format!("need 0 < rho ≤ r, got rho = {rho:e}, r = {r:e}")));
    }
    let hypothesis = is_c0_r_lambda(f, r, lambda, std::slice::from_ref(q), opts)?;
    if !hypothesis.holds {
        return Err(Error::HypothesisFailed(format!(
            "the C⁰ property fails at r = {r:e}, lambda = {lambda:e}"
        )));
    }
    let ctx = FrameContext::canonical(f, q.clone(), rho)?;
    let region = component(&ctx, default_cell_size(&ctx))?;
    let fq = f.eval(q);
    let max_distance = region
        .cells()
        .iter()
        .map(|c| (f.eval(&ParamPoint::new(c.chart, c.centre.clone())) - &fq).norm())
        .fold(0.0, f64::max);
    let bound = rho + r * lambda;
    let slack = 1e-12 * f.length_scale();
    Ok(DistanceCheck { bound, pairs_checked: region.len(), max_distance, holds: max_distance < bound + slack })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InclusionCheck {
    pub pairs_checked: usize,
    pub cells_per_pair: usize,
    /// Cells of `U_{2r/5,q}` missing from some `U_{r,p}`.
    pub violations: usize,
    pub holds: bool,
}

/// Checks `U_{2r/5,q} ⊂ U_{r,p}` for up to 16 lattice points `p ∈ U_{2r/5,q}`.
pub fn check_inclusion(f: &ParamImmersion, q: &ParamPoint, r: f64, lambda: f64) -> Result<InclusionCheck> {
    if !(lambda > 0.0 && lambda <= INCLUSION_MAX_LAMBDA) {
        return Err(Error::HypothesisFailed(format!(
            "lambda {lambda:e} must lie in (0, {INCLUSION_MAX_LAMBDA}]"
        )));
    }
    let inner_ctx = FrameContext::canonical(f, q.clone(), 0.4 * r)?;
    let inner = component(&inner_ctx, default_cell_size(&inner_ctx))?;
    let cells = inner.cells();
    let pairs = cells.len().min(INCLUSION_MAX_PAIRS);
    let mut violations = 0;
    for i in 0..pairs {
        let c = &cells[i * cells.len() / pairs];
        let p = ParamPoint::new(c.chart, c.centre.clone());
        let ctx = FrameContext::canonical(f, p, r)?;
        let outer = component(&ctx, default_cell_size(&ctx))?;
        violations += cells
            .iter()
            .filter(|d| !outer.contains_point(f, &ParamPoint::new(d.chart, d.centre.clone())))
            .count();
    }
    Ok(InclusionCheck { pairs_checked: pairs, cells_per_pair: cells.len(), violations, holds: violations == 0 })
}

fn default_cell_size(ctx: &FrameContext<'_>) -> f64 {
    let sigma = crate::geometry::largest_singular_value(&ctx.immersion.jacobian(&ctx.base));
    ctx.radius / (crate::extract::CELLS_PER_RADIUS * sigma)
}
