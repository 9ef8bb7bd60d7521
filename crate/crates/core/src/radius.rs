//! Sampled verification of the graph properties and bisection for the
//! largest radius at which they hold.
//!
//! Every verdict quantifies over an explicit finite set of base points only.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extract::{extract, norms, ExtractOptions, FrameContext, NodeStatus};
use crate::immersion::{ParamImmersion, ParamPoint, SampleSpec};

/// Which graph property a check refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PropertyKind {
    /// `‖u‖ ≤ rλ` for a continuous single-sheeted `u`.
    C0,
    /// `‖Du‖ ≤ λ` for a differentiable `u`.
    C1,
}

impl std::str::FromStr for PropertyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "c0" => Ok(Self::C0),
            "c1" => Ok(Self::C1),
            other => Err(Error::InvalidInput(format!("unknown property kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictStatus {
    Holds,
    Fails,
    /// The numerical data could not decide (e.g. the component left every chart).
    Inconclusive,
}

/// Outcome of the property check at one base point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub base: ParamPoint,
    pub status: VerdictStatus,
    pub c0: Option<f64>,
    /// `None` when unavailable; infinite slopes are reported as `reason`.
    pub lip: Option<f64>,
    pub reason: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyVerdict {
    pub kind: PropertyKind,
    pub radius: f64,
    pub lambda: f64,
    pub status: VerdictStatus,
    pub holds: bool,
    pub witnesses: Vec<Witness>,
    pub failing_q: Option<ParamPoint>,
}

fn witness(f: &ParamImmersion, q: &ParamPoint, r: f64, lambda: f64, kind: PropertyKind, opts: &ExtractOptions) -> Witness {
    let mut w = Witness { base: q.clone(), status: VerdictStatus::Inconclusive, c0: None, lip: None, reason: None };
    let sample = match FrameContext::canonical(f, q.clone(), r).and_then(|ctx| extract(&ctx, opts)) {
        Ok(s) => s,
        Err(e) => {
            w.reason = Some(e.to_string());
            return w;
        }
    };
    if !sample.is_graph() {
        w.status = VerdictStatus::Fails;
        w.reason = Some(
            Error::NotAGraph {
                multi_sheet: sample.count(NodeStatus::MultiSheet),
                uncovered: sample.count(NodeStatus::Uncovered),
            }
            .to_string(),
        );
        return w;
    }
    let est = norms(&sample).expect("graph samples have norms");
    w.c0 = Some(est.c0);
    w.lip = est.lip.is_finite().then_some(est.lip);
    let passes = match kind {
        PropertyKind::C1 => {
            if sample.count(NodeStatus::Vertical) > 0 {
                w.reason = Some("vertical tangent plane".into());
                false
            } else {
                est.lip <= lambda
            }
        }
        PropertyKind::C0 => est.c0 <= r * lambda,
    };
    w.status = if passes { VerdictStatus::Holds } else { VerdictStatus::Fails };
    w
}

/// Checks the property `kind` at radius `r` for every base point in `q`.
pub fn check_property(
    f: &ParamImmersion,
    kind: PropertyKind,
    r: f64,
    lambda: f64,
    q: &[ParamPoint],
    opts: &ExtractOptions,
) -> Result<PropertyVerdict> {
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::InvalidInput(format!("radius {r} must be positive")));
    }
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::InvalidInput(format!("lambda {lambda} must be positive")));
    }
    if q.is_empty() {
        return Err(Error::InvalidInput("empty base point sample".into()));
    }
    let witnesses: Vec<Witness> = q.par_iter().map(|p| witness(f, p, r, lambda, kind, opts)).collect();
    let failing_q = witnesses.iter().find(|w| w.status == VerdictStatus::Fails).map(|w| w.base.clone());
    let status = if failing_q.is_some() {
        VerdictStatus::Fails
    } else if witnesses.iter().any(|w| w.status == VerdictStatus::Inconclusive) {
        VerdictStatus::Inconclusive
    } else {
        VerdictStatus::Holds
    };
    Ok(PropertyVerdict { kind, radius: r, lambda, status, holds: status == VerdictStatus::Holds, witnesses, failing_q })
}

/// `U_{r,q}` is the graph of `u` with `‖Du‖ ≤ λ` at every sampled `q`.
pub fn is_r_lambda(f: &ParamImmersion, r: f64, lambda: f64, q: &[ParamPoint], opts: &ExtractOptions) -> Result<PropertyVerdict> {
    check_property(f, PropertyKind::C1, r, lambda, q, opts)
}

/// `U_{r,q}` is the graph of a continuous `u` with `‖u‖ ≤ rλ` at every sampled `q`.
pub fn is_c0_r_lambda(
    f: &ParamImmersion,
    r: f64,
    lambda: f64,
    q: &[ParamPoint],
    opts: &ExtractOptions,
) -> Result<PropertyVerdict> {
    check_property(f, PropertyKind::C0, r, lambda, q, opts)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadiusOptions {
    pub extract: ExtractOptionsSpec,
    /// Relative bracket width at which bisection stops.
    pub tol: f64,
    /// First radius tried, in units of the immersion's length scale.
    pub start: f64,
    /// Radius (in length-scale units) beyond which the property counts as unbounded.
    pub cap: f64,
    /// Re-check passing below and failing above the final bracket.
    pub check_monotonicity: bool,
    /// Sampler used to produce the base points, recorded in reports.
    pub sample: Option<SampleSpec>,
}

/// Serializable mirror of [`ExtractOptions`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtractOptionsSpec {
    pub grid: usize,
    pub cell_size: Option<f64>,
}

impl From<ExtractOptionsSpec> for ExtractOptions {
    fn from(s: ExtractOptionsSpec) -> Self {
        Self { grid: s.grid, cell_size: s.cell_size }
    }
}

impl From<ExtractOptions> for ExtractOptionsSpec {
    fn from(o: ExtractOptions) -> Self {
        Self { grid: o.grid, cell_size: o.cell_size }
    }
}

impl Default for RadiusOptions {
    fn default() -> Self {
        Self {
            extract: ExtractOptions::default().into(),
            tol: 1e-3,
            start: 1e-6,
            cap: 1e3,
            check_monotonicity: true,
            sample: None,
        }
    }
}

impl RadiusOptions {
    pub fn with_grid(grid: usize) -> Self {
        Self { extract: ExtractOptions::with_grid(grid).into(), ..Self::default() }
    }

    pub fn tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn sample(mut self, spec: SampleSpec) -> Self {
        self.sample = Some(spec);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RadiusOutcome {
    /// `r_lo` passes, `r_hi` fails, within the bisection tolerance.
    Bracketed,
    /// The property still holds at the cap radius.
    Unbounded,
    /// The property fails already at the start radius; `r_lo = 0`.
    BelowStart,
}

/// Bracket `[r_lo, r_hi]` around the largest radius with the property.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadiusReport {
    pub immersion: String,
    pub kind: PropertyKind,
    #[serde(rename = "lambda")]
    pub lambda: f64,
    pub outcome: RadiusOutcome,
    pub r_lo: f64,
    /// Infinite (serialized as `null`) when unbounded.
    #[serde(with = "crate::report::inf_as_null")]
    pub r_hi: f64,
    pub tol: f64,
    pub grid: usize,
    pub sample: Option<SampleSpec>,
    pub sample_count: usize,
    /// Number of property checks run, monotonicity re-checks included.
    pub probes: usize,
    pub failing_q: Option<ParamPoint>,
    /// Verdicts hold for the sampled base points only.
    pub scope: String,
}

impl RadiusReport {
    pub fn is_unbounded(&self) -> bool {
        self.outcome == RadiusOutcome::Unbounded
    }

    /// Midpoint of the bracket (`r_lo` when unbounded).
    pub fn estimate(&self) -> f64 {
        if self.r_hi.is_finite() {
            0.5 * (self.r_lo + self.r_hi)
        } else {
            self.r_lo
        }
    }

    pub fn width(&self) -> f64 {
        if self.r_hi.is_finite() {
            self.r_hi - self.r_lo
        } else {
            0.0
        }
    }
}

/// Largest radius at which `kind` holds with constant `lambda` on all of `q`,
/// found by doubling from a tiny radius and bisecting the first failure.
pub fn max_radius(
    f: &ParamImmersion,
    lambda: f64,
    kind: PropertyKind,
    q: &[ParamPoint],
    opts: &RadiusOptions,
) -> Result<RadiusReport> {
    if !(opts.tol > 0.0 && opts.tol <= 0.1) {
        return Err(Error::InvalidInput(format!("tolerance {} must lie in (0, 0.1]", opts.tol)));
    }
    if !(opts.start > 0.0 && opts.cap > opts.start) {
        return Err(Error::InvalidInput("need 0 < start < cap".into()));
    }
    let ext: ExtractOptions = opts.extract.into();
    let scale = f.length_scale();
    let mut probes = 0usize;
    let mut probe = |r: f64| -> Result<PropertyVerdict> {
        probes += 1;
        check_property(f, kind, r, lambda, q, &ext)
    };

    let start = opts.start * scale;
    let cap = opts.cap * scale;
    let first = probe(start)?;
    let (mut r_lo, mut r_hi, mut hi_verdict, outcome);
    match first.status {
        VerdictStatus::Inconclusive => {
            return Err(Error::Inconclusive(format!("property undecidable at the start radius {start:e}")));
        }
        VerdictStatus::Fails => {
            r_lo = 0.0;
            r_hi = start;
            hi_verdict = Some(first);
            outcome = RadiusOutcome::BelowStart;
        }
        VerdictStatus::Holds => {
            r_lo = start;
            r_hi = f64::INFINITY;
            hi_verdict = None;
            let mut r = start;
            while r < cap {
                r = (2.0 * r).min(cap);
                let v = probe(r)?;
                if v.holds {
                    r_lo = r;
                } else {
                    r_hi = r;
                    hi_verdict = Some(v);
                    break;
                }
            }
            outcome = if r_hi.is_finite() { RadiusOutcome::Bracketed } else { RadiusOutcome::Unbounded };
        }
    }

    if outcome == RadiusOutcome::Bracketed {
        while r_hi / r_lo - 1.0 > opts.tol {
            let mid = 0.5 * (r_lo + r_hi);
            let v = probe(mid)?;
            if v.holds {
                r_lo = mid;
            } else {
                r_hi = mid;
                hi_verdict = Some(v);
            }
        }
    }
    if let Some(v) = &hi_verdict {
        if v.status == VerdictStatus::Inconclusive {
            return Err(Error::Inconclusive(format!(
                "property undecidable at the upper bracket radius {r_hi:e}: {}",
                v.witnesses.iter().find_map(|w| w.reason.clone()).unwrap_or_default()
            )));
        }
    }

    if opts.check_monotonicity && outcome == RadiusOutcome::Bracketed {
        for factor in [0.25, 0.5, 0.75] {
            let r = factor * r_lo;
            match probe(r)?.status {
                VerdictStatus::Holds => {}
                VerdictStatus::Fails => return Err(Error::MonotonicityViolated { radius: r, expected: "pass" }),
                VerdictStatus::Inconclusive => {
                    return Err(Error::Inconclusive(format!("monotonicity re-check undecidable at {r:e}")))
                }
            }
        }
        for factor in [1.5, 2.0] {
            let r = factor * r_hi;
            if probe(r)?.holds {
                return Err(Error::MonotonicityViolated { radius: r, expected: "fail" });
            }
        }
    }

    Ok(RadiusReport {
        immersion: f.name().to_string(),
        kind,
        lambda,
        outcome,
        r_lo,
        r_hi,
        tol: opts.tol,
        grid: opts.extract.grid,
        sample: opts.sample,
        sample_count: q.len(),
        probes,
        failing_q: hi_verdict.and_then(|v| v.failing_q),
        scope: "sampled base points".into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::zoo::{params, zoo_build};

    fn circle() -> ParamImmersion {
        zoo_build("circle", &params(&[("R", 1.0)])).unwrap()
    }

    fn q() -> Vec<ParamPoint> {
        vec![ParamPoint::new(0, vec![0.0])]
    }

    fn grid() -> ExtractOptions {
        ExtractOptions::with_grid(512)
    }

    #[test]
    fn circle_c1_examples() {
        let f = circle();
        assert!(is_r_lambda(&f, 0.40, 0.5, &q(), &grid()).unwrap().holds);
        let v = is_r_lambda(&f, 0.46, 0.5, &q(), &grid()).unwrap();
        assert_eq!(v.status, VerdictStatus::Fails);
        assert!(v.failing_q.is_some());
        let v = is_r_lambda(&f, 1.2, 100.0, &q(), &ExtractOptions::with_grid(64)).unwrap();
        assert_eq!(v.status, VerdictStatus::Fails);
        assert!(v.witnesses[0].reason.as_ref().unwrap().contains("not a graph"));
    }

    #[test]
    fn circle_c0_examples() {
        let f = circle();
        assert!(is_c0_r_lambda(&f, 0.19, 0.1, &q(), &grid()).unwrap().holds);
        assert!(!is_c0_r_lambda(&f, 0.21, 0.1, &q(), &grid()).unwrap().holds);
    }

    #[test]
    fn invalid_inputs() {
        let f = circle();
        assert!(matches!(is_r_lambda(&f, 0.0, 0.5, &q(), &grid()), Err(Error::InvalidInput(_))));
        assert!(matches!(is_r_lambda(&f, 0.1, -1.0, &q(), &grid()), Err(Error::InvalidInput(_))));
        let opts = RadiusOptions::default().tol(0.5);
        assert!(matches!(max_radius(&f, 0.5, PropertyKind::C1, &q(), &opts), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn circle_radii_close_to_closed_forms() {
        let f = circle();
        let opts = RadiusOptions::with_grid(1024);
        let r1 = max_radius(&f, 0.5, PropertyKind::C1, &q(), &opts).unwrap();
        assert_eq!(r1.outcome, RadiusOutcome::Bracketed);
        let exact = 0.5 / 1.25f64.sqrt();
        assert!(r1.r_lo <= exact * (1.0 + 1e-3) && r1.r_hi >= exact * (1.0 - 1e-3), "{r1:?}");
        let r0 = max_radius(&f, 0.1, PropertyKind::C0, &q(), &opts).unwrap();
        let exact = 0.2 / 1.01;
        assert!((r0.estimate() / exact - 1.0).abs() <= 2e-3, "{r0:?}");
    }

    #[test]
    fn flat_is_unbounded() {
        let f = zoo_build("flat", &params(&[("m", 1.0), ("k", 1.0)])).unwrap();
        let opts = RadiusOptions::with_grid(8);
        let rep = max_radius(&f, 0.1, PropertyKind::C1, &[ParamPoint::new(0, vec![0.0])], &opts).unwrap();
        assert!(rep.is_unbounded());
        let json = serde_json::to_value(&rep).unwrap();
        assert!(json["r_hi"].is_null());
    }

    #[test]
    fn kind_parses() {
        assert_eq!("C1".parse::<PropertyKind>().unwrap(), PropertyKind::C1);
        assert!("c2".parse::<PropertyKind>().is_err());
    }
}
