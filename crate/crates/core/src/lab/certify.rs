//! Derivative bound certified from C⁰ data through probe points.
//!
//! For `x ∈ B_ρ`, `ρ = r/5`, the points over `x` and `x + ρeⱼ` are located on
//! the surface; the offsets `f(pⱼ) − f(p)`, projected to the tangent plane at
//! `p` and divided by `ρ`, are probes of that plane. When they stay within
//! `L/(3√m)` of the axes, the plane is a graph with slope at most `L`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::lambda_cap;
use crate::error::{Error, Result};
use crate::extract::{component, extract, ExtractOptions, FrameContext, NodeStatus, CELLS_PER_RADIUS};
use crate::geometry::{graph_matrix_from_probes, largest_singular_value, Vector};
use crate::immersion::{tangent_space, ParamImmersion, ParamPoint};
use crate::radius::is_c0_r_lambda;

/// Ratio of the inner radius `ρ` to the C⁰ radius `r`.
pub const INNER_RADIUS_FRACTION: f64 = 0.2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertifiedNode {
    pub x: Vec<f64>,
    /// `3√m·maxⱼ|vⱼ − eⱼ|`, the smallest slope bound the probes certify.
    pub certified_bound: f64,
    /// `‖Du(x)‖` from the exact tangent plane.
    pub actual_lip: f64,
}

/// A node at which the probe hypothesis could not be established.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeFailure {
    pub node: usize,
    pub probe: Option<usize>,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertifiedDuBound {
    pub rho: f64,
    /// Probe offset used for every node; equals `rho`.
    pub probe_offset: f64,
    pub global_bound: f64,
    pub per_node: Vec<CertifiedNode>,
    pub failures: Vec<ProbeFailure>,
}

impl CertifiedDuBound {
    /// No node failed and every certified bound is within the global one.
    pub fn is_certified(&self) -> bool {
        self.failures.is_empty() && self.per_node.iter().all(|n| n.certified_bound <= self.global_bound)
    }

    pub fn max_actual_lip(&self) -> f64 {
        self.per_node.iter().map(|n| n.actual_lip).fold(0.0, f64::max)
    }

    pub fn max_certified(&self) -> f64 {
        self.per_node.iter().map(|n| n.certified_bound).fold(0.0, f64::max)
    }
}

/// Slope bound `8⁻³·m^{-3/2}·λ/Λ(m)` on the inner ball.
pub fn global_du_bound(m: usize, lambda: f64) -> f64 {
    8f64.powi(-3) * (m as f64).powf(-1.5) * lambda / lambda_cap(m)
}

/// Certifies `‖Du‖ ≤ 8⁻³·m^{-3/2}·λ/Λ` on `B_{r/5}` around `q` from the C⁰
/// property at `(r, λ)`.
pub fn certify_du_bound(
    f: &ParamImmersion,
    q: &ParamPoint,
    r: f64,
    lambda: f64,
    opts: &ExtractOptions,
) -> Result<CertifiedDuBound> {
    let m = f.m();
    let cap = lambda_cap(m);
    if !(lambda > 0.0 && lambda <= cap) {
        return Err(Error::HypothesisFailed(format!("lambda {lambda:e} must lie in (0, {cap:e}]")));
    }
    if !is_c0_r_lambda(f, r, lambda, std::slice::from_ref(q), opts)?.holds {
        return Err(Error::HypothesisFailed(format!(
            "the C⁰ property fails at r = {r:e}, lambda = {lambda:e}"
        )));
    }
    let rho = INNER_RADIUS_FRACTION * r;
    let bound = global_du_bound(m, lambda);

    let inner = FrameContext::canonical(f, q.clone(), rho)?;
    let sample = extract(&inner, opts)?;
    let outer = inner.at_radius(2.0 * rho);
    let sigma = largest_singular_value(&f.jacobian(q));
    let region = component(&outer, outer.radius / (CELLS_PER_RADIUS * sigma))?;
    let rot_t = inner.iso.rotation().transpose();
    let probe_radius = bound / (3.0 * (m as f64).sqrt());

    let results: Vec<std::result::Result<CertifiedNode, ProbeFailure>> = sample
        .nodes
        .par_iter()
        .enumerate()
        .map(|(idx, node)| {
            let fail = |probe, reason: String| ProbeFailure { node: idx, probe, reason };
            let (Some(p), NodeStatus::Ok) = (&node.param, node.status) else {
                return Err(fail(None, format!("node status {}", node.status.as_str())));
            };
            let tangent = tangent_space(f, p).map_err(|e| fail(None, e.to_string()))?;
            let fp = f.eval(p);
            let mut probes = Vec::with_capacity(m);
            let mut worst: f64 = 0.0;
            for j in 0..m {
                let mut xj = node.x.clone();
                xj[j] += rho;
                let (pj, _) = crate::extract::solve_height(&outer, &region, &xj, p)
                    .map_err(|e| fail(Some(j), e.to_string()))?;
                let offset: Vector = tangent.project(&(f.eval(&pj) - &fp)) / rho;
                let v = &rot_t * offset;
                let mut dev = v.clone();
                dev[j] -= 1.0;
                worst = worst.max(dev.norm());
                if dev.norm() > probe_radius {
                    return Err(fail(Some(j), Error::ProbeHypothesisFailed { node: idx, probe: j }.to_string()));
                }
                probes.push(v);
            }
            let plane = tangent.transformed(&rot_t);
            let graph = graph_matrix_from_probes(&plane, &probes, bound.min(1.0)).map_err(|e| fail(None, e.to_string()))?;
            Ok(CertifiedNode {
                x: node.x.iter().copied().collect(),
                certified_bound: 3.0 * (m as f64).sqrt() * worst,
                actual_lip: graph.norm,
            })
        })
        .collect();

    let mut per_node = Vec::new();
    let mut failures = Vec::new();
    for r in results {
        match r {
            Ok(n) => per_node.push(n),
            Err(e) => failures.push(e),
        }
    }
    Ok(CertifiedDuBound { rho, probe_offset: rho, global_bound: bound, per_node, failures })
}
