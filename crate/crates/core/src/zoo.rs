//! Built-in analytic immersions, addressable by name and a parameter map.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::{Matrix, Vector};
use crate::immersion::{Chart, ParamBox, ParamImmersion};

pub type Params = BTreeMap<String, f64>;

/// Half-width of an orthographic sphere chart, in units of the radius.
const SPHERE_CHART_HALF_WIDTH: f64 = 0.8;
/// Squared norm bound of an orthographic sphere chart, in units of R².
const SPHERE_CHART_NORM_SQ: f64 = 0.81;
/// Parameter intervals of the open curves extend this many analysis windows
/// beyond the sampled window on either side.
const OPEN_CURVE_MARGIN: f64 = 10.0;

/// A named family of immersions.
#[derive(Debug, Clone, Copy)]
pub struct ZooEntry {
    pub name: &'static str,
    pub description: &'static str,
    pub defaults: &'static [(&'static str, f64)],
    build: fn(&Params) -> Result<ParamImmersion>,
}

impl ZooEntry {
    pub fn build(&self, params: &Params) -> Result<ParamImmersion> {
        for key in params.keys() {
            if !self.defaults.iter().any(|(k, _)| k == key) {
                return Err(Error::InvalidParams(format!("`{}` has no parameter `{key}`", self.name)));
            }
        }
        let mut full: Params = self.defaults.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        for (k, v) in params {
            if !v.is_finite() {
                return Err(Error::InvalidParams(format!("parameter `{k}` is not finite")));
            }
            full.insert(k.clone(), *v);
        }
        (self.build)(&full)
    }
}

static ENTRIES: [ZooEntry; 7] = [
    ZooEntry {
        name: "flat",
        description: "hyperplane x ↦ (x, 0) in ℝ^{m+k}",
        defaults: &[("m", 2.0), ("k", 1.0)],
        build: build_flat,
    },
    ZooEntry {
        name: "circle",
        description: "circle of radius R in ℝ²",
        defaults: &[("R", 1.0)],
        build: build_circle,
    },
    ZooEntry {
        name: "sphere2",
        description: "round 2-sphere of radius R in ℝ³, six orthographic charts",
        defaults: &[("R", 1.0)],
        build: build_sphere,
    },
    ZooEntry {
        name: "torus",
        description: "torus of revolution with radii R_maj > r_min in ℝ³",
        defaults: &[("R_maj", 2.0), ("r_min", 0.5)],
        build: build_torus,
    },
    ZooEntry {
        name: "helix",
        description: "helix t ↦ (cos t, sin t, h t), sampled on |t| ≤ window",
        defaults: &[("h", 1.0), ("window", PI)],
        build: build_helix,
    },
    ZooEntry {
        name: "graph_of",
        description: "graph of ½(c1 x² + c2 y²) over a square of half-width half_width",
        defaults: &[("c1", 1.0), ("c2", 1.0), ("half_width", 1.0)],
        build: build_graph_of,
    },
    ZooEntry {
        name: "wiggle",
        description: "t ↦ (t, eps·sin(2πt/delta)), sampled on |t| ≤ window",
        defaults: &[("eps", 1e-6), ("delta", 1e-7), ("window", 0.2)],
        build: build_wiggle,
    },
];

pub fn zoo_entries() -> &'static [ZooEntry] {
    &ENTRIES
}

/// Builds the zoo immersion `name`; missing parameters take their defaults.
pub fn zoo_build(name: &str, params: &Params) -> Result<ParamImmersion> {
    ENTRIES
        .iter()
        .find(|e| e.name == name)
        .ok_or_else(|| Error::UnknownEntry(name.to_string()))?
        .build(params)
}

/// Shorthand for building a parameter map in code.
pub fn params(pairs: &[(&str, f64)]) -> Params {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

fn positive(p: &Params, key: &str) -> Result<f64> {
    let v = p[key];
    if v > 0.0 {
        Ok(v)
    } else {
        Err(Error::InvalidParams(format!("`{key}` must be positive, got {v}")))
    }
}

fn count(p: &Params, key: &str) -> Result<usize> {
    let v = p[key];
    if v >= 1.0 && v.fract() == 0.0 && v <= 16.0 {
        Ok(v as usize)
    } else {
        Err(Error::InvalidParams(format!("`{key}` must be an integer in 1..=16, got {v}")))
    }
}

fn build_flat(p: &Params) -> Result<ParamImmersion> {
    let m = count(p, "m")?;
    let k = count(p, "k")?;
    let n = m + k;
    let chart = Chart::new(
        ParamBox::unbounded(m),
        Arc::new(move |t: &[f64]| {
            let mut y = Vector::zeros(n);
            y.rows_mut(0, m).copy_from_slice(t);
            y
        }),
        Arc::new(move |_: &[f64]| Matrix::identity(n, m)),
    )
    .with_sample_window(vec![-1.0; m], vec![1.0; m]);
    ParamImmersion::new("flat", m, n, vec![chart], 1.0)
}

fn build_circle(p: &Params) -> Result<ParamImmersion> {
    let r = positive(p, "R")?;
    let chart = Chart::new(
        ParamBox::new(vec![-PI], vec![PI]).with_periodic(vec![true]),
        Arc::new(move |t: &[f64]| Vector::from_column_slice(&[r * t[0].cos(), r * t[0].sin()])),
        Arc::new(move |t: &[f64]| Matrix::from_column_slice(2, 1, &[-r * t[0].sin(), r * t[0].cos()])),
    );
    ParamImmersion::new("circle", 1, 2, vec![chart], r)
}

/// Orthographic chart of the sphere over the coordinate plane orthogonal to
/// `axis`, on the hemisphere where that coordinate has sign `sign`.
fn sphere_chart(radius: f64, axis: usize, sign: f64) -> Chart {
    let others: Vec<usize> = (0..3).filter(|&i| i != axis).collect();
    let (b, c) = (others[0], others[1]);
    let half = SPHERE_CHART_HALF_WIDTH * radius;
    let domain = ParamBox::new(vec![-half; 2], vec![half; 2]).with_max_norm(SPHERE_CHART_NORM_SQ.sqrt() * radius);
    let eval = move |t: &[f64]| {
        let w = (radius * radius - t[0] * t[0] - t[1] * t[1]).sqrt();
        let mut y = Vector::zeros(3);
        y[b] = t[0];
        y[c] = t[1];
        y[axis] = sign * w;
        y
    };
    let jac = move |t: &[f64]| {
        let w = (radius * radius - t[0] * t[0] - t[1] * t[1]).sqrt();
        let mut j = Matrix::zeros(3, 2);
        j[(b, 0)] = 1.0;
        j[(c, 1)] = 1.0;
        j[(axis, 0)] = -sign * t[0] / w;
        j[(axis, 1)] = -sign * t[1] / w;
        j
    };
    let inverse = move |y: &Vector| (sign * y[axis] > 0.0).then(|| vec![y[b], y[c]]);
    Chart::new(domain, Arc::new(eval), Arc::new(jac)).with_inverse(Arc::new(inverse))
}

fn build_sphere(p: &Params) -> Result<ParamImmersion> {
    let r = positive(p, "R")?;
    let charts = [(2, 1.0), (2, -1.0), (0, 1.0), (0, -1.0), (1, 1.0), (1, -1.0)]
        .into_iter()
        .map(|(axis, sign)| sphere_chart(r, axis, sign))
        .collect();
    ParamImmersion::new("sphere2", 2, 3, charts, r)
}

fn build_torus(p: &Params) -> Result<ParamImmersion> {
    let big = positive(p, "R_maj")?;
    let small = positive(p, "r_min")?;
    if small >= big {
        return Err(Error::InvalidParams("torus needs R_maj > r_min".into()));
    }
    let chart = Chart::new(
        ParamBox::new(vec![-PI; 2], vec![PI; 2]).with_periodic(vec![true; 2]),
        Arc::new(move |t: &[f64]| {
            let (th, ph) = (t[0], t[1]);
            let w = big + small * ph.cos();
            Vector::from_column_slice(&[w * th.cos(), w * th.sin(), small * ph.sin()])
        }),
        Arc::new(move |t: &[f64]| {
            let (th, ph) = (t[0], t[1]);
            let w = big + small * ph.cos();
            Matrix::from_column_slice(
                3,
                2,
                &[
                    -w * th.sin(),
                    w * th.cos(),
                    0.0,
                    -small * ph.sin() * th.cos(),
                    -small * ph.sin() * th.sin(),
                    small * ph.cos(),
                ],
            )
        }),
    );
    ParamImmersion::new("torus", 2, 3, vec![chart], big)
}

fn open_interval(window: f64) -> ParamBox {
    let reach = (1.0 + OPEN_CURVE_MARGIN) * window;
    ParamBox::new(vec![-reach], vec![reach])
}

fn build_helix(p: &Params) -> Result<ParamImmersion> {
    let h = p["h"];
    let window = positive(p, "window")?;
    let chart = Chart::new(
        open_interval(window),
        Arc::new(move |t: &[f64]| Vector::from_column_slice(&[t[0].cos(), t[0].sin(), h * t[0]])),
        Arc::new(move |t: &[f64]| Matrix::from_column_slice(3, 1, &[-t[0].sin(), t[0].cos(), h])),
    )
    .with_sample_window(vec![-window], vec![window]);
    ParamImmersion::new("helix", 1, 3, vec![chart], 1.0)
}

fn build_graph_of(p: &Params) -> Result<ParamImmersion> {
    let (c1, c2) = (p["c1"], p["c2"]);
    let half = positive(p, "half_width")?;
    graph_of(
        "graph_of",
        2,
        half,
        0.25 * half,
        move |x| 0.5 * (c1 * x[0] * x[0] + c2 * x[1] * x[1]),
        move |x| vec![c1 * x[0], c2 * x[1]],
    )
}

/// Graph `x ↦ (x, h(x))` of a scalar height function over the cube
/// `[-half_width, half_width]ᵐ`, sampled on the cube of half-width
/// `sample_half_width`.
pub fn graph_of<H, G>(
    name: &str,
    m: usize,
    half_width: f64,
    sample_half_width: f64,
    height: H,
    gradient: G,
) -> Result<ParamImmersion>
where
    H: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    G: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
{
    if !(half_width > 0.0 && sample_half_width > 0.0 && sample_half_width <= half_width) {
        return Err(Error::InvalidParams("graph_of needs 0 < sample_half_width ≤ half_width".into()));
    }
    let n = m + 1;
    let chart = Chart::new(
        ParamBox::new(vec![-half_width; m], vec![half_width; m]),
        Arc::new(move |x: &[f64]| {
            let mut y = Vector::zeros(n);
            y.rows_mut(0, m).copy_from_slice(x);
            y[m] = height(x);
            y
        }),
        Arc::new(move |x: &[f64]| {
            let mut j = Matrix::identity(n, m);
            for (a, g) in gradient(x).into_iter().enumerate() {
                j[(m, a)] = g;
            }
            j
        }),
    )
    .with_sample_window(vec![-sample_half_width; m], vec![sample_half_width; m]);
    ParamImmersion::new(name, m, n, vec![chart], half_width)
}

fn build_wiggle(p: &Params) -> Result<ParamImmersion> {
    let eps = p["eps"];
    if eps < 0.0 {
        return Err(Error::InvalidParams("`eps` must be non-negative".into()));
    }
    let delta = positive(p, "delta")?;
    let window = positive(p, "window")?;
    let freq = TAU / delta;
    let chart = Chart::new(
        open_interval(window),
        Arc::new(move |t: &[f64]| Vector::from_column_slice(&[t[0], eps * (freq * t[0]).sin()])),
        Arc::new(move |t: &[f64]| Matrix::from_column_slice(2, 1, &[1.0, eps * freq * (freq * t[0]).cos()])),
    )
    .with_sample_window(vec![-window], vec![window]);
    ParamImmersion::new("wiggle", 1, 2, vec![chart], window)
}
