//! Immersions given by charts with exact Jacobians.
//!
//! The manifold is never represented globally: a [`ParamImmersion`] is a list
//! of charts (box-shaped parameter domains, possibly periodic along some axes)
//! plus a deterministic sampler of base points. Charts that overlap others
//! carry an inverse map so that a point can be handed over when a computation
//! runs into a chart edge.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{smallest_singular_value, Isometry, Matrix, Subspace, Vector};

/// Smallest singular value below which the differential counts as singular.
pub const IMMERSION_RANK_TOL: f64 = 1e-8;

pub type EvalFn = Arc<dyn Fn(&[f64]) -> Vector + Send + Sync>;
pub type JacobianFn = Arc<dyn Fn(&[f64]) -> Matrix + Send + Sync>;
pub type InverseFn = Arc<dyn Fn(&Vector) -> Option<Vec<f64>> + Send + Sync>;

/// Axis-aligned parameter box. Periodic axes wrap around `[lo, hi)`; an
/// optional bound on the Euclidean norm of the coordinates cuts the box
/// further (used by orthographic sphere charts).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub periodic: Vec<bool>,
    pub max_norm: Option<f64>,
}

impl ParamBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        let periodic = vec![false; lo.len()];
        Self { lo, hi, periodic, max_norm: None }
    }

    pub fn unbounded(m: usize) -> Self {
        Self::new(vec![f64::NEG_INFINITY; m], vec![f64::INFINITY; m])
    }

    pub fn with_periodic(mut self, periodic: Vec<bool>) -> Self {
        self.periodic = periodic;
        self
    }

    pub fn with_max_norm(mut self, max_norm: f64) -> Self {
        self.max_norm = Some(max_norm);
        self
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, coords: &[f64]) -> bool {
        let in_box = coords
            .iter()
            .enumerate()
            .all(|(a, &c)| self.periodic[a] || (c >= self.lo[a] && c <= self.hi[a]));
        in_box && self.max_norm.is_none_or(|r| norm(coords) <= r)
    }

    /// Reduces periodic coordinates into `[lo, hi)`.
    pub fn wrap(&self, coords: &mut [f64]) {
        for (a, c) in coords.iter_mut().enumerate() {
            if self.periodic[a] {
                let period = self.hi[a] - self.lo[a];
                *c = self.lo[a] + (*c - self.lo[a]).rem_euclid(period);
            }
        }
    }

    /// Relative depth of a point inside the domain: 1 at the center (or for
    /// unconstrained axes), 0 on the boundary, negative outside.
    pub fn margin(&self, coords: &[f64]) -> f64 {
        let mut margin: f64 = 1.0;
        for (a, &c) in coords.iter().enumerate() {
            if self.periodic[a] || !self.lo[a].is_finite() || !self.hi[a].is_finite() {
                continue;
            }
            let half = 0.5 * (self.hi[a] - self.lo[a]);
            margin = margin.min((c - self.lo[a]).min(self.hi[a] - c) / half);
        }
        if let Some(r) = self.max_norm {
            margin = margin.min((r - norm(coords)) / r);
        }
        margin
    }

    pub fn period(&self, axis: usize) -> Option<f64> {
        self.periodic[axis].then(|| self.hi[axis] - self.lo[axis])
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// One coordinate patch of the immersion.
#[derive(Clone)]
pub struct Chart {
    pub domain: ParamBox,
    /// Box from which base points are sampled; lies inside `domain`.
    pub sample_window: (Vec<f64>, Vec<f64>),
    pub eval: EvalFn,
    pub jacobian: JacobianFn,
    pub inverse: Option<InverseFn>,
}

impl Chart {
    pub fn new(domain: ParamBox, eval: EvalFn, jacobian: JacobianFn) -> Self {
        let sample_window = (domain.lo.clone(), domain.hi.clone());
        Self { domain, sample_window, eval, jacobian, inverse: None }
    }

    pub fn with_sample_window(mut self, lo: Vec<f64>, hi: Vec<f64>) -> Self {
        self.sample_window = (lo, hi);
        self
    }

    pub fn with_inverse(mut self, inverse: InverseFn) -> Self {
        self.inverse = Some(inverse);
        self
    }
}

impl fmt::Debug for Chart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Chart")
            .field("domain", &self.domain)
            .field("sample_window", &self.sample_window)
            .field("has_inverse", &self.inverse.is_some())
            .finish()
    }
}

/// A point of M: a chart index plus coordinates in that chart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamPoint {
    pub chart: usize,
    pub coords: Vec<f64>,
}

impl ParamPoint {
    pub fn new(chart: usize, coords: Vec<f64>) -> Self {
        Self { chart, coords }
    }
}

/// Base-point sampler settings: `per_axis` cell-centred points along every
/// chart axis, optionally jittered inside their cells.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleSpec {
    pub per_axis: usize,
    pub jitter: f64,
    pub seed: u64,
}

impl Default for SampleSpec {
    fn default() -> Self {
        Self { per_axis: 64, jitter: 0.0, seed: 0 }
    }
}

impl SampleSpec {
    pub fn per_axis(per_axis: usize) -> Self {
        Self { per_axis, ..Self::default() }
    }
}

/// An immersion `f: Mᵐ → ℝⁿ` given through charts.
#[derive(Debug, Clone)]
pub struct ParamImmersion {
    name: String,
    m: usize,
    n: usize,
    charts: Vec<Chart>,
    length_scale: f64,
}

impl ParamImmersion {
    pub fn new(name: impl Into<String>, m: usize, n: usize, charts: Vec<Chart>, length_scale: f64) -> Result<Self> {
        if m == 0 || m >= n {
            return Err(Error::InvalidParams(format!("need 1 ≤ m < n, got m = {m}, n = {n}")));
        }
        if charts.is_empty() {
            return Err(Error::InvalidParams("an immersion needs at least one chart".into()));
        }
        if charts.iter().any(|c| c.domain.dim() != m) {
            return Err(Error::InvalidParams("chart dimension differs from m".into()));
        }
        if !(length_scale.is_finite() && length_scale > 0.0) {
            return Err(Error::InvalidParams("length scale must be positive".into()));
        }
        Ok(Self { name: name.into(), m, n, charts, length_scale })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Intrinsic dimension.
    pub fn m(&self) -> usize {
        self.m
    }

    /// Codimension.
    pub fn k(&self) -> usize {
        self.n - self.m
    }

    /// Ambient dimension.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn charts(&self) -> &[Chart] {
        &self.charts
    }

    /// Characteristic size (radius of a circle, major radius of a torus, ...)
    /// used to seed radius searches.
    pub fn length_scale(&self) -> f64 {
        self.length_scale
    }

    pub fn eval(&self, p: &ParamPoint) -> Vector {
        (self.charts[p.chart].eval)(&p.coords)
    }

    pub fn jacobian(&self, p: &ParamPoint) -> Matrix {
        (self.charts[p.chart].jacobian)(&p.coords)
    }

    pub fn contains(&self, p: &ParamPoint) -> bool {
        p.chart < self.charts.len() && p.coords.len() == self.m && self.charts[p.chart].domain.contains(&p.coords)
    }

    /// Wraps periodic coordinates.
    pub fn normalize(&self, p: &mut ParamPoint) {
        self.charts[p.chart].domain.wrap(&mut p.coords);
    }

    /// All chart representations of an ambient point that lies on a chart with
    /// an inverse map.
    pub fn locate(&self, ambient: &Vector) -> Vec<ParamPoint> {
        self.charts
            .iter()
            .enumerate()
            .filter_map(|(i, c)| {
                let inv = c.inverse.as_ref()?;
                let mut coords = inv(ambient)?;
                c.domain.wrap(&mut coords);
                c.domain.contains(&coords).then(|| ParamPoint::new(i, coords))
            })
            .collect()
    }

    /// Moves `p` to the chart in which it sits deepest, when it is close to
    /// the edge of its current chart and another chart covers it.
    pub fn recenter(&self, p: &ParamPoint) -> ParamPoint {
        let mut p = p.clone();
        self.normalize(&mut p);
        if self.charts.len() == 1 {
            return p;
        }
        let current = self.charts[p.chart].domain.margin(&p.coords);
        if current >= 0.3 {
            return p;
        }
        let ambient = self.eval(&p);
        self.locate(&ambient)
            .into_iter()
            .map(|q| {
                let m = self.charts[q.chart].domain.margin(&q.coords);
                (q, m)
            })
            .filter(|(_, m)| *m > current)
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(q, _)| q)
            .unwrap_or(p)
    }

    /// Deterministic base-point sample covering every chart's sample window.
    pub fn sample(&self, spec: &SampleSpec) -> Vec<ParamPoint> {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let per = spec.per_axis.max(1);
        let mut out = Vec::new();
        for (ci, chart) in self.charts.iter().enumerate() {
            let (lo, hi) = &chart.sample_window;
            let total = per.pow(self.m as u32);
            for flat in 0..total {
                let mut rest = flat;
                let mut coords = Vec::with_capacity(self.m);
                for a in 0..self.m {
                    let i = rest % per;
                    rest /= per;
                    let jitter = if spec.jitter > 0.0 { spec.jitter * (rng.gen::<f64>() - 0.5) } else { 0.0 };
                    let t = (i as f64 + 0.5 + jitter) / per as f64;
                    coords.push(lo[a] + t * (hi[a] - lo[a]));
                }
                if chart.domain.contains(&coords) {
                    out.push(ParamPoint::new(ci, coords));
                }
            }
        }
        out
    }

    /// `c · f`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::InvalidParams(format!("scale factor {c} must be positive")));
        }
        let charts = self
            .charts
            .iter()
            .map(|ch| {
                let eval = ch.eval.clone();
                let jac = ch.jacobian.clone();
                let mut out = Chart {
                    domain: ch.domain.clone(),
                    sample_window: ch.sample_window.clone(),
                    eval: Arc::new(move |t: &[f64]| eval(t) * c),
                    jacobian: Arc::new(move |t: &[f64]| jac(t) * c),
                    inverse: None,
                };
                if let Some(inv) = ch.inverse.clone() {
                    out.inverse = Some(Arc::new(move |y: &Vector| inv(&(y / c))));
                }
                out
            })
            .collect();
        Self::new(format!("{}*{c}", self.name), self.m, self.n, charts, self.length_scale * c)
    }

    /// `A ∘ f` for a Euclidean isometry `A`.
    pub fn transformed(&self, iso: &Isometry) -> Result<Self> {
        if iso.dim() != self.n {
            return Err(Error::InvalidParams("isometry dimension differs from ambient dimension".into()));
        }
        let charts = self
            .charts
            .iter()
            .map(|ch| {
                let (eval, jac) = (ch.eval.clone(), ch.jacobian.clone());
                let (a1, a2) = (iso.clone(), iso.clone());
                let mut out = Chart {
                    domain: ch.domain.clone(),
                    sample_window: ch.sample_window.clone(),
                    eval: Arc::new(move |t: &[f64]| a1.apply(&eval(t))),
                    jacobian: Arc::new(move |t: &[f64]| a2.rotation() * jac(t)),
                    inverse: None,
                };
                if let Some(inv) = ch.inverse.clone() {
                    let a3 = iso.clone();
                    out.inverse = Some(Arc::new(move |y: &Vector| inv(&a3.apply_inverse(y))));
                }
                out
            })
            .collect();
        Self::new(format!("{}(moved)", self.name), self.m, self.n, charts, self.length_scale)
    }
}

/// Tangent space τ_f(p) = column span of the Jacobian at `p`.
pub fn tangent_space(f: &ParamImmersion, p: &ParamPoint) -> Result<Subspace> {
    let jac = f.jacobian(p);
    let sigma = smallest_singular_value(&jac);
    if !(sigma > IMMERSION_RANK_TOL) {
        return Err(Error::RankDeficient { sigma });
    }
    Subspace::from_spanning(&jac)
}
