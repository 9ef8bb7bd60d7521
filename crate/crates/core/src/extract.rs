//! Local graph representation of an immersion over its affine tangent plane.
//!
//! Given a base point `q` and an admissible isometry `A` at `f(q)`, the
//! component `U_{r,q}` of `(π ∘ A⁻¹ ∘ f)⁻¹(B_r)` containing `q` is found by a
//! flood fill on a parameter lattice ([`component`]). Heights `u(x)` are then
//! solved on a regular grid over `B_r` by Newton continuation from the origin
//! ([`extract`]), with `Du` read off the tangent planes exactly.

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};
use std::hash::{BuildHasherDefault, Hasher};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{
    graph_matrix_of_columns, is_admissible, largest_singular_value, make_admissible_isometry, matrix_norm,
    Isometry, Matrix, Vector,
};
use crate::immersion::{tangent_space, ParamImmersion, ParamPoint, IMMERSION_RANK_TOL};

/// Default number of parameter cells per radius, after Jacobian scaling.
pub const CELLS_PER_RADIUS: f64 = 32.0;
/// Grid nodes stop at `|x| < r·(1 − OPEN_BALL_SHRINK)`.
pub const OPEN_BALL_SHRINK: f64 = 1e-9;
/// Multiplier of `h·σ_max` separating a second sheet from continuation noise.
pub const SHEET_GAP_FACTOR: f64 = 10.0;
/// Upper bound on the number of lattice cells visited by a flood fill.
pub const MAX_CELLS: usize = 4_000_000;

const NEWTON_MAX_ITER: usize = 100;
const NEWTON_TOL: f64 = 1e-10;
/// Newton gives up after this many consecutive steps damped below
/// `STALL_STEP`.
const STALL_LIMIT: usize = 8;
const STALL_STEP: f64 = 1.0 / 64.0;
/// Grid nodes from which the peak search starts.
const PEAK_STARTS: usize = 2;
/// Peak search stops once its step is below this fraction of `r`.
const PEAK_STEP_FRACTION: f64 = 1e-7;
const POLISH_STEPS: usize = 1;
const HANDOVER_MARGIN: f64 = 0.05;
const SIGMA_GROWTH: f64 = 1.25;
const REFINE_CHANGE: f64 = 0.01;

/// A base point together with an admissible frame and a radius.
#[derive(Debug, Clone)]
pub struct FrameContext<'a> {
    pub immersion: &'a ParamImmersion,
    pub base: ParamPoint,
    pub iso: Isometry,
    pub radius: f64,
}

impl<'a> FrameContext<'a> {
    /// Context in the canonical admissible frame at `base`.
    pub fn canonical(f: &'a ParamImmersion, base: ParamPoint, radius: f64) -> Result<Self> {
        check_base(f, &base, radius)?;
        let plane = tangent_space(f, &base)?;
        let iso = make_admissible_isometry(&f.eval(&base), &plane);
        Ok(Self { immersion: f, base, iso, radius })
    }

    /// Context in a caller-supplied frame, which must be admissible at `base`.
    pub fn with_isometry(f: &'a ParamImmersion, base: ParamPoint, iso: Isometry, radius: f64) -> Result<Self> {
        check_base(f, &base, radius)?;
        let plane = tangent_space(f, &base)?;
        if !is_admissible(&iso, &f.eval(&base), &plane) {
            return Err(Error::InvalidInput("isometry is not admissible at the base point".into()));
        }
        Ok(Self { immersion: f, base, iso, radius })
    }

    /// Same base and frame at another radius.
    pub fn at_radius(&self, radius: f64) -> Self {
        Self { radius, ..self.clone() }
    }

    fn m(&self) -> usize {
        self.immersion.m()
    }

    /// `A⁻¹(f(p))`.
    pub fn local(&self, p: &ParamPoint) -> Vector {
        self.iso.apply_inverse(&self.immersion.eval(p))
    }

    /// `π(A⁻¹(f(p)))` and the remaining `k` coordinates.
    pub fn split(&self, p: &ParamPoint) -> (Vector, Vector) {
        let y = self.local(p);
        let m = self.m();
        (y.rows(0, m).into_owned(), y.rows(m, y.len() - m).into_owned())
    }
}

fn check_base(f: &ParamImmersion, base: &ParamPoint, radius: f64) -> Result<()> {
    if !(radius.is_finite() && radius > 0.0) {
        return Err(Error::InvalidInput(format!("radius {radius} must be positive")));
    }
    if !f.contains(base) {
        return Err(Error::InvalidInput("base point lies outside its chart".into()));
    }
    Ok(())
}

/// Bits of a cell key shared by the lattice coordinates.
const INDEX_KEY_BITS: u32 = 120;
/// Largest intrinsic dimension handled by the flood fill.
pub const MAX_FILL_DIM: usize = 5;

/// Packs a chart index and a lattice multi-index into one integer key.
fn cell_key(chart: usize, index: &[i64]) -> Option<u128> {
    if chart > 0xff || index.is_empty() || index.len() > MAX_FILL_DIM {
        return None;
    }
    let bits = (INDEX_KEY_BITS / index.len() as u32).min(62);
    let bound = 1i64 << (bits - 1);
    let mut key = chart as u128;
    for &i in index {
        if i < -bound || i >= bound {
            return None;
        }
        key = (key << bits) | (i + bound) as u128;
    }
    Some(key)
}

/// Multiplicative hash for packed cell keys.
#[derive(Default)]
struct KeyHasher(u64);

impl Hasher for KeyHasher {
    fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 = (self.0.rotate_left(5) ^ b as u64).wrapping_mul(0x51_7c_c1_b7_27_22_0a_95);
        }
    }

    fn write_u128(&mut self, v: u128) {
        let folded = (v as u64) ^ ((v >> 64) as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15);
        self.0 = (self.0 ^ folded).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    }

    fn write_usize(&mut self, v: usize) {
        self.0 = (self.0 ^ v as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    }

    fn finish(&self) -> u64 {
        self.0 ^ (self.0 >> 29)
    }
}

type KeyMap<V> = HashMap<u128, V, BuildHasherDefault<KeyHasher>>;

/// Lattice of cell centres `anchor + i·step` on one chart.
#[derive(Debug, Clone)]
struct ChartLattice {
    anchor: Vec<f64>,
    step: Vec<f64>,
    /// Number of cells along periodic axes.
    wrap: Vec<Option<i64>>,
}

impl ChartLattice {
    fn new(f: &ParamImmersion, chart: usize, anchor: Vec<f64>, h: f64) -> Self {
        let domain = &f.charts()[chart].domain;
        let mut step = vec![h; anchor.len()];
        let mut wrap = vec![None; anchor.len()];
        for a in 0..anchor.len() {
            if let Some(period) = domain.period(a) {
                let count = (period / h).ceil().max(1.0);
                step[a] = period / count;
                wrap[a] = Some(count as i64);
            }
        }
        Self { anchor, step, wrap }
    }

    fn normalize(&self, idx: &mut [i64]) {
        for (i, w) in idx.iter_mut().zip(&self.wrap) {
            if let Some(count) = w {
                *i = i.rem_euclid(*count);
            }
        }
    }

    fn centre(&self, idx: &[i64]) -> Vec<f64> {
        idx.iter().zip(self.anchor.iter().zip(&self.step)).map(|(&i, (a, s))| a + i as f64 * s).collect()
    }

    fn index_of(&self, coords: &[f64]) -> Vec<i64> {
        let mut idx: Vec<i64> = coords
            .iter()
            .enumerate()
            .map(|(a, &c)| ((c - self.anchor[a]) / self.step[a]).round() as i64)
            .collect();
        if self.wrap.iter().any(Option::is_some) {
            // periodic offsets may be off by one period before wrapping
            self.normalize(&mut idx);
        }
        idx
    }

    fn cell_volume(&self) -> f64 {
        self.step.iter().product()
    }
}

/// One lattice cell of the component with the local image of its centre.
#[derive(Debug, Clone)]
pub struct RegionCell {
    pub chart: usize,
    pub index: Vec<i64>,
    pub centre: Vec<f64>,
    /// `π(A⁻¹ f(centre))`.
    pub x: Vector,
    /// Remaining `k` coordinates of `A⁻¹ f(centre)`.
    pub height: Vector,
}

/// Discrete approximation of `U_{r,q}`: the face-connected set of parameter
/// cells around the base cell whose centres project into `B_r`.
#[derive(Debug, Clone)]
pub struct ComponentRegion {
    cell_size: f64,
    sigma_max: f64,
    lattices: Vec<Option<ChartLattice>>,
    cells: Vec<RegionCell>,
    lookup: KeyMap<usize>,
}

impl ComponentRegion {
    /// Nominal lattice step `h`.
    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    /// Largest Jacobian singular value over the cell centres.
    pub fn sigma_max(&self) -> f64 {
        self.sigma_max
    }

    pub fn cells(&self) -> &[RegionCell] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn has_cell(&self, chart: usize, index: &[i64]) -> bool {
        cell_key(chart, index).is_some_and(|k| self.lookup.contains_key(&k))
    }

    /// Parameter measure `Σ cell volume`, summed over charts.
    pub fn measure(&self) -> f64 {
        self.cells
            .iter()
            .map(|c| self.lattices[c.chart].as_ref().map_or(0.0, ChartLattice::cell_volume))
            .sum()
    }

    /// Whether `p` lies in a region cell or next to one, in its own chart or
    /// in any other chart representing the same point.
    pub fn contains_point(&self, f: &ParamImmersion, p: &ParamPoint) -> bool {
        if self.near_cell(p) {
            return true;
        }
        if f.charts().len() == 1 {
            return false;
        }
        f.locate(&f.eval(p)).iter().any(|q| q.chart != p.chart && self.near_cell(q))
    }

    fn near_cell(&self, p: &ParamPoint) -> bool {
        let Some(lattice) = self.lattices.get(p.chart).and_then(Option::as_ref) else {
            return false;
        };
        let idx = lattice.index_of(&p.coords);
        let m = idx.len();
        let mut offset = [-1i64; MAX_FILL_DIM];
        let mut probe = [0i64; MAX_FILL_DIM];
        loop {
            for a in 0..m {
                probe[a] = idx[a] + offset[a];
            }
            let probe = &mut probe[..m];
            lattice.normalize(probe);
            if cell_key(p.chart, &probe).is_some_and(|k| self.lookup.contains_key(&k)) {
                return true;
            }
            let mut a = 0;
            while a < m {
                offset[a] += 1;
                if offset[a] <= 1 {
                    break;
                }
                offset[a] = -1;
                a += 1;
            }
            if a == m {
                return false;
            }
        }
    }
}

struct FloodFill<'c, 'a> {
    ctx: &'c FrameContext<'a>,
    h: f64,
    lattices: Vec<Option<ChartLattice>>,
    /// Visited keys, with whether the cell centre lies in its chart domain.
    visited: KeyMap<bool>,
    cells: Vec<RegionCell>,
    queue: VecDeque<usize>,
}

impl<'c, 'a> FloodFill<'c, 'a> {
    fn new(ctx: &'c FrameContext<'a>, h: f64) -> Self {
        Self {
            ctx,
            h,
            lattices: vec![None; ctx.immersion.charts().len()],
            visited: KeyMap::default(),
            cells: Vec::new(),
            queue: VecDeque::new(),
        }
    }

    fn lattice(&mut self, chart: usize, anchor: &[f64]) -> &ChartLattice {
        let (f, h) = (self.ctx.immersion, self.h);
        self.lattices[chart].get_or_insert_with(|| ChartLattice::new(f, chart, anchor.to_vec(), h))
    }

    /// Tests a cell, enqueueing it on first visit when it belongs. Returns
    /// whether its centre lies in the chart domain.
    fn visit(&mut self, chart: usize, index: &[i64]) -> Result<bool> {
        let key = cell_key(chart, index)
            .ok_or_else(|| Error::Inconclusive("component exceeds the addressable lattice".into()))?;
        if let Some(&inside) = self.visited.get(&key) {
            return Ok(inside);
        }
        if self.visited.len() >= MAX_CELLS {
            return Err(Error::Inconclusive(format!("component exceeds {MAX_CELLS} cells")));
        }
        let f = self.ctx.immersion;
        let lattice = self.lattices[chart].as_ref().expect("lattice anchored before visiting");
        let mut centre = lattice.centre(index);
        let domain = &f.charts()[chart].domain;
        domain.wrap(&mut centre);
        let inside = domain.contains(&centre);
        self.visited.insert(key, inside);
        if !inside {
            return Ok(false);
        }
        let p = ParamPoint::new(chart, centre);
        let (x, height) = self.ctx.split(&p);
        if x.iter().chain(height.iter()).all(|v| v.is_finite()) && x.norm() < self.ctx.radius {
            self.cells.push(RegionCell { chart, index: index.to_vec(), centre: p.coords, x, height });
            self.queue.push_back(self.cells.len() - 1);
        }
        Ok(true)
    }

    /// Continues the fill in other charts from a cell whose neighbour falls
    /// outside its own chart.
    fn hand_over(&mut self, from: usize) -> Result<()> {
        let f = self.ctx.immersion;
        let cell = &self.cells[from];
        let chart = cell.chart;
        let ambient = f.eval(&ParamPoint::new(chart, cell.centre.clone()));
        let targets: Vec<ParamPoint> = f
            .locate(&ambient)
            .into_iter()
            .filter(|q| q.chart != chart && f.charts()[q.chart].domain.margin(&q.coords) > HANDOVER_MARGIN)
            .collect();
        if targets.is_empty() {
            return Err(Error::BoundaryEscape { chart });
        }
        for q in targets {
            let idx = self.lattice(q.chart, &q.coords).index_of(&q.coords);
            self.visit(q.chart, &idx)?;
        }
        Ok(())
    }

    fn run(mut self) -> Result<ComponentRegion> {
        let f = self.ctx.immersion;
        let base = self.ctx.base.clone();
        let m = f.m();
        self.lattice(base.chart, &base.coords);
        self.visit(base.chart, &vec![0; m])?;
        if self.cells.is_empty() {
            return Err(Error::Numerical("base cell does not project into the ball".into()));
        }
        let mut next = [0i64; MAX_FILL_DIM];
        while let Some(ci) = self.queue.pop_front() {
            let chart = self.cells[ci].chart;
            let mut outside = false;
            for a in 0..m {
                for dir in [-1, 1] {
                    next[..m].copy_from_slice(&self.cells[ci].index);
                    next[a] += dir;
                    let lattice = self.lattices[chart].as_ref().expect("anchored");
                    lattice.normalize(&mut next[..m]);
                    outside |= !self.visit(chart, &next[..m])?;
                }
            }
            if outside {
                self.hand_over(ci)?;
            }
        }
        let sigma_max = self
            .cells
            .iter()
            .map(|c| largest_singular_value(&f.jacobian(&ParamPoint::new(c.chart, c.centre.clone()))))
            .fold(0.0, f64::max);
        let lookup = self
            .cells
            .iter()
            .enumerate()
            .map(|(i, c)| (cell_key(c.chart, &c.index).expect("visited cells have keys"), i))
            .collect();
        Ok(ComponentRegion { cell_size: self.h, sigma_max, lattices: self.lattices, cells: self.cells, lookup })
    }
}

/// Flood fill of `U_{r,q}` on a parameter lattice of step `h`.
pub fn component(ctx: &FrameContext<'_>, h: f64) -> Result<ComponentRegion> {
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::InvalidInput(format!("cell size {h} must be positive")));
    }
    if ctx.immersion.m() > MAX_FILL_DIM {
        return Err(Error::InvalidInput(format!("component fill supports m ≤ {MAX_FILL_DIM}")));
    }
    FloodFill::new(ctx, h).run()
}

/// Component with the default Jacobian-scaled step `r/(32·σ_max)`, refined
/// once when halving the step changes the measure by more than 1%.
fn default_component(ctx: &FrameContext<'_>) -> Result<ComponentRegion> {
    let f = ctx.immersion;
    let sigma = largest_singular_value(&f.jacobian(&ctx.base));
    let mut h = ctx.radius / (CELLS_PER_RADIUS * sigma);
    let mut region = component(ctx, h)?;
    if region.sigma_max() > SIGMA_GROWTH * sigma {
        h = ctx.radius / (CELLS_PER_RADIUS * region.sigma_max());
        region = component(ctx, h)?;
    }
    let finer = component(ctx, 0.5 * h)?;
    let (coarse_m, fine_m) = (region.measure(), finer.measure());
    if (fine_m - coarse_m).abs() > REFINE_CHANGE * fine_m {
        region = finer;
    }
    Ok(region)
}

/// Solves `π(A⁻¹ f(p)) = x` for `p` by damped Newton from `seed`.
///
/// Returns the parameter solution and the height `u(x)`.
pub fn solve_height(
    ctx: &FrameContext<'_>,
    region: &ComponentRegion,
    x: &Vector,
    seed: &ParamPoint,
) -> Result<(ParamPoint, Vector)> {
    let f = ctx.immersion;
    let m = f.m();
    let rot_top = ctx.iso.rotation().columns(0, m).transpose();
    let tol = NEWTON_TOL * ctx.radius.max(1.0);
    let residual = |p: &ParamPoint| -> Vector { ctx.split(p).0 - x };

    let mut p = f.recenter(seed);
    let mut g = residual(&p);
    let mut gnorm = g.norm();
    let mut converged_at = None;
    let mut stalled = 0;
    for iter in 0..NEWTON_MAX_ITER {
        if gnorm <= tol && converged_at.is_none() {
            converged_at = Some(iter);
        }
        if converged_at.is_some_and(|c| iter >= c + POLISH_STEPS) || gnorm == 0.0 {
            break;
        }
        let jg = &rot_top * f.jacobian(&p);
        let step = match jg.clone().lu().solve(&g) {
            Some(s) if s.iter().all(|v| v.is_finite()) => -s,
            _ => {
                let pinv = jg
                    .pseudo_inverse(1e-14)
                    .map_err(|e| Error::Numerical(e.to_string()))?;
                -(pinv * &g)
            }
        };
        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let mut trial = p.clone();
            for (c, s) in trial.coords.iter_mut().zip(step.iter()) {
                *c += alpha * s;
            }
            let trial = f.recenter(&trial);
            if f.contains(&trial) {
                let tg = residual(&trial);
                let tn = tg.norm();
                if tn.is_finite() && tn < gnorm * (1.0 - 1e-4 * alpha) {
                    accepted = Some((trial, tg, tn));
                    break;
                }
            }
            alpha *= 0.5;
        }
        match accepted {
            Some((np, ng, nn)) => {
                p = np;
                g = ng;
                gnorm = nn;
                stalled = if alpha < STALL_STEP { stalled + 1 } else { 0 };
                if stalled >= STALL_LIMIT && converged_at.is_none() {
                    return Err(Error::NoConvergence { iterations: iter + 1 });
                }
            }
            None if converged_at.is_some() => break,
            None => return Err(Error::NoConvergence { iterations: iter + 1 }),
        }
    }
    if gnorm > tol {
        return Err(Error::NoConvergence { iterations: NEWTON_MAX_ITER });
    }
    if !region.contains_point(f, &p) {
        return Err(Error::LeftRegion);
    }
    let (_, height) = ctx.split(&p);
    Ok((p, height))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeStatus {
    Ok,
    Vertical,
    MultiSheet,
    Uncovered,
}

impl NodeStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Ok => "ok",
            Self::Vertical => "vertical",
            Self::MultiSheet => "multi_sheet",
            Self::Uncovered => "uncovered",
        }
    }
}

/// One node of the grid over `B_r`.
#[derive(Debug, Clone)]
pub struct GraphNode {
    pub x: Vector,
    /// Whether the node is a radial projection onto the rim `|x| = r(1 − 1e−9)`.
    pub rim: bool,
    pub param: Option<ParamPoint>,
    pub height: Option<Vector>,
    pub du: Option<Matrix>,
    pub status: NodeStatus,
}

impl GraphNode {
    /// `‖Du(x)‖`, infinite at vertical nodes and NaN where unsolved.
    pub fn du_norm(&self) -> f64 {
        match (&self.du, self.status) {
            (Some(du), _) => matrix_norm(du),
            (None, NodeStatus::Vertical) => f64::INFINITY,
            _ => f64::NAN,
        }
    }
}

/// The graph function `u` sampled on a regular grid over `B_r`.
#[derive(Debug, Clone)]
pub struct GraphSample {
    pub m: usize,
    pub k: usize,
    pub radius: f64,
    /// Grid resolution: lattice spacing is `2r/N`.
    pub grid: usize,
    pub cell_size: f64,
    pub region_cells: usize,
    pub nodes: Vec<GraphNode>,
    /// Local maxima refined off the grid, when the sample is a graph.
    pub peaks: Option<Peaks>,
}

/// `|u|` and `‖Du‖` maximized locally from the best grid nodes by a compass
/// search on the closed ball; `lip` is infinite when some node is vertical.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Peaks {
    pub c0: f64,
    #[serde(with = "crate::report::inf_as_null")]
    pub lip: f64,
}

impl GraphSample {
    pub fn count(&self, status: NodeStatus) -> usize {
        self.nodes.iter().filter(|n| n.status == status).count()
    }

    pub fn is_graph(&self) -> bool {
        self.count(NodeStatus::MultiSheet) == 0 && self.count(NodeStatus::Uncovered) == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtractOptions {
    /// Grid resolution `N` (at least 8).
    pub grid: usize,
    /// Parameter lattice step; `None` selects the Jacobian-scaled default.
    pub cell_size: Option<f64>,
}

impl Default for ExtractOptions {
    fn default() -> Self {
        Self { grid: 128, cell_size: None }
    }
}

impl ExtractOptions {
    pub fn with_grid(grid: usize) -> Self {
        Self { grid, ..Self::default() }
    }
}

/// Grid node positions: interior lattice nodes with their continuation
/// parents, then rim nodes attached to the lattice node they project from.
struct NodeLayout {
    xs: Vec<Vector>,
    rim: Vec<bool>,
    /// Candidate seeds (node indices), nearest first.
    parents: Vec<Vec<usize>>,
    /// Node indices grouped by continuation layer.
    layers: Vec<Vec<usize>>,
    lattice_index: HashMap<Vec<i64>, usize>,
    spacing: f64,
}

fn layout(m: usize, radius: f64, grid: usize) -> NodeLayout {
    let spacing = 2.0 * radius / grid as f64;
    let inner = radius * (1.0 - OPEN_BALL_SHRINK);
    let half = (grid / 2) as i64;
    let inside = |idx: &[i64]| idx.iter().map(|&i| (i as f64 * spacing).powi(2)).sum::<f64>().sqrt() < inner;

    let mut lattice: Vec<Vec<i64>> = Vec::new();
    let mut idx = vec![-half; m];
    loop {
        if inside(&idx) {
            lattice.push(idx.clone());
        }
        let mut a = 0;
        while a < m {
            idx[a] += 1;
            if idx[a] <= half {
                break;
            }
            idx[a] = -half;
            a += 1;
        }
        if a == m {
            break;
        }
    }
    let l1 = |v: &[i64]| v.iter().map(|i| i.unsigned_abs()).sum::<u64>();
    lattice.sort_by(|a, b| l1(a).cmp(&l1(b)).then_with(|| a.cmp(b)));
    let lattice_index: HashMap<Vec<i64>, usize> = lattice.iter().enumerate().map(|(i, v)| (v.clone(), i)).collect();

    let mut xs = Vec::with_capacity(lattice.len());
    let mut parents = Vec::with_capacity(lattice.len());
    let mut layers: Vec<Vec<usize>> = Vec::new();
    for (i, v) in lattice.iter().enumerate() {
        xs.push(Vector::from_iterator(m, v.iter().map(|&c| c as f64 * spacing)));
        // neighbours one step closer to the origin, largest coordinate first
        let mut axes: Vec<usize> = (0..m).filter(|&a| v[a] != 0).collect();
        axes.sort_by(|&a, &b| v[b].abs().cmp(&v[a].abs()).then(a.cmp(&b)));
        let ps = axes
            .into_iter()
            .filter_map(|a| {
                let mut w = v.clone();
                w[a] -= v[a].signum();
                lattice_index.get(&w).copied()
            })
            .collect();
        parents.push(ps);
        let layer = l1(v) as usize;
        if layers.len() <= layer {
            layers.resize(layer + 1, Vec::new());
        }
        layers[layer].push(i);
    }
    let mut rim = vec![false; xs.len()];

    // one rim node per lattice direction, fed by the outermost lattice node on it
    let mut outermost: BTreeMap<Vec<i64>, usize> = BTreeMap::new();
    for (i, v) in lattice.iter().enumerate() {
        let open_face = (0..m).any(|a| {
            [-1, 1].iter().any(|d| {
                let mut w = v.clone();
                w[a] += d;
                !lattice_index.contains_key(&w)
            })
        });
        if !open_face || v.iter().all(|&c| c == 0) {
            continue;
        }
        let g = v.iter().fold(0u64, |g, &c| gcd(g, c.unsigned_abs())) as i64;
        let dir: Vec<i64> = v.iter().map(|&c| c / g).collect();
        let entry = outermost.entry(dir).or_insert(i);
        if l1(&lattice[*entry]) < l1(v) {
            *entry = i;
        }
    }
    let mut rim_layer = Vec::new();
    for &i in outermost.values() {
        let x = &xs[i];
        xs.push(x * (inner / x.norm()));
        rim.push(true);
        parents.push(vec![i]);
        rim_layer.push(xs.len() - 1);
    }
    if !rim_layer.is_empty() {
        layers.push(rim_layer);
    }
    NodeLayout { xs, rim, parents, layers, lattice_index, spacing }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Samples the graph function `u` of `U_{r,q}` over `B_r` in the frame of `ctx`.
pub fn extract(ctx: &FrameContext<'_>, opts: &ExtractOptions) -> Result<GraphSample> {
    if opts.grid < 8 {
        return Err(Error::InvalidInput(format!("grid resolution {} is below 8", opts.grid)));
    }
    let f = ctx.immersion;
    let (m, k) = (f.m(), f.k());
    let region = match opts.cell_size {
        Some(h) => component(ctx, h)?,
        None => default_component(ctx)?,
    };
    let nodes = layout(m, ctx.radius, opts.grid);

    let mut solved: Vec<Option<(ParamPoint, Vector)>> = vec![None; nodes.xs.len()];
    for layer in &nodes.layers {
        let results: Vec<(usize, Option<(ParamPoint, Vector)>)> = layer
            .par_iter()
            .map(|&i| {
                let seeds: Vec<&ParamPoint> = if nodes.parents[i].is_empty() {
                    vec![&ctx.base]
                } else {
                    nodes.parents[i].iter().filter_map(|&j| solved[j].as_ref().map(|s| &s.0)).collect()
                };
                let found = seeds.into_iter().find_map(|seed| solve_height(ctx, &region, &nodes.xs[i], seed).ok());
                (i, found)
            })
            .collect();
        for (i, r) in results {
            solved[i] = r;
        }
    }

    let plane_rotation = ctx.iso.rotation().transpose();
    let mut graph_nodes: Vec<GraphNode> = nodes
        .xs
        .par_iter()
        .zip(solved.into_par_iter())
        .zip(nodes.rim.par_iter())
        .map(|((x, sol), &rim)| match sol {
            None => GraphNode { x: x.clone(), rim, param: None, height: None, du: None, status: NodeStatus::Uncovered },
            Some((p, height)) => {
                let du = local_slope(f, &p, &plane_rotation);
                let status = if du.is_some() { NodeStatus::Ok } else { NodeStatus::Vertical };
                GraphNode { x: x.clone(), rim, param: Some(p), height: Some(height), du, status }
            }
        })
        .collect();

    flag_second_sheets(&region, &nodes, &mut graph_nodes);
    let peaks = graph_nodes
        .iter()
        .all(|n| matches!(n.status, NodeStatus::Ok | NodeStatus::Vertical))
        .then(|| refine_peaks(ctx, &region, &graph_nodes, opts.grid));
    debug_assert!(k == graph_nodes.iter().find_map(|n| n.height.as_ref()).map_or(k, |h| h.len()));
    Ok(GraphSample {
        m,
        k,
        radius: ctx.radius,
        grid: opts.grid,
        cell_size: region.cell_size(),
        region_cells: region.len(),
        nodes: graph_nodes,
        peaks,
    })
}

fn refine_peaks(ctx: &FrameContext<'_>, region: &ComponentRegion, nodes: &[GraphNode], grid: usize) -> Peaks {
    let plane_rotation = ctx.iso.rotation().transpose();
    let height = |_: &ParamPoint, h: &Vector| Some(h.norm());
    let slope = |p: &ParamPoint, _: &Vector| {
        local_slope(ctx.immersion, p, &plane_rotation).map(|du| largest_singular_value(&du))
    };
    let c0 = peak_from_best(ctx, region, nodes, grid, |n| n.height.as_ref().map(|h| h.norm()), height);
    let lip = if nodes.iter().any(|n| n.status == NodeStatus::Vertical) {
        f64::INFINITY
    } else {
        peak_from_best(ctx, region, nodes, grid, |n| Some(n.du_norm()), slope)
    };
    Peaks { c0, lip }
}

/// Runs [`compass_max`] from the `PEAK_STARTS` best nodes under `score`.
fn peak_from_best(
    ctx: &FrameContext<'_>,
    region: &ComponentRegion,
    nodes: &[GraphNode],
    grid: usize,
    score: impl Fn(&GraphNode) -> Option<f64>,
    metric: impl Fn(&ParamPoint, &Vector) -> Option<f64> + Sync,
) -> f64 {
    let mut ranked: Vec<(f64, &GraphNode)> =
        nodes.iter().filter_map(|n| score(n).filter(|v| v.is_finite()).map(|v| (v, n))).collect();
    ranked.sort_by(|a, b| b.0.total_cmp(&a.0));
    ranked.truncate(PEAK_STARTS);
    let step = 2.0 * ctx.radius / grid as f64;
    ranked
        .par_iter()
        .filter_map(|(v, n)| n.param.as_ref().map(|p| compass_max(ctx, region, &n.x, p, *v, step, &metric)))
        .reduce(|| 0.0, f64::max)
}

/// Coordinate-direction hill climb of `metric` over `|x| ≤ r(1 − OPEN_BALL_SHRINK)`,
/// halving the step until it drops below `PEAK_STEP_FRACTION·r`.
fn compass_max(
    ctx: &FrameContext<'_>,
    region: &ComponentRegion,
    x0: &Vector,
    p0: &ParamPoint,
    v0: f64,
    step0: f64,
    metric: &impl Fn(&ParamPoint, &Vector) -> Option<f64>,
) -> f64 {
    let limit = ctx.radius * (1.0 - OPEN_BALL_SHRINK);
    let (mut x, mut p, mut best) = (x0.clone(), p0.clone(), v0);
    let mut step = step0;
    while step > PEAK_STEP_FRACTION * ctx.radius {
        let mut moved = false;
        for a in 0..x.len() {
            for dir in [-1.0, 1.0] {
                let mut y = x.clone();
                y[a] += dir * step;
                let len = y.norm();
                if len > limit {
                    y *= limit / len;
                }
                let Ok((py, hy)) = solve_height(ctx, region, &y, &p) else {
                    continue;
                };
                if let Some(v) = metric(&py, &hy).filter(|v| *v > best) {
                    (x, p, best) = (y, py, v);
                    moved = true;
                }
            }
        }
        if !moved {
            step *= 0.5;
        }
    }
    best
}

/// `Du` at a solved point: the graph matrix of `Rᵀ·τ_f(p)` over ℝᵐ × {0}, or
/// `None` when that plane is vertical or the differential degenerates.
fn local_slope(f: &ParamImmersion, p: &ParamPoint, plane_rotation: &Matrix) -> Option<Matrix> {
    let local = plane_rotation * f.jacobian(p);
    let r = local.clone().qr().r();
    if r.diagonal().iter().any(|d| d.abs() <= IMMERSION_RANK_TOL) {
        return None;
    }
    graph_matrix_of_columns(&local).map(|g| g.matrix)
}

/// Marks nodes whose grid cell also receives a region cell at a clearly
/// different height, i.e. a second sheet over the same point of `B_r`.
fn flag_second_sheets(region: &ComponentRegion, nodes: &NodeLayout, graph: &mut [GraphNode]) {
    let threshold = SHEET_GAP_FACTOR * region.cell_size() * region.sigma_max();
    let flagged: HashSet<usize> = region
        .cells()
        .par_iter()
        .filter_map(|cell| {
            let idx: Vec<i64> = cell.x.iter().map(|v| (v / nodes.spacing).round() as i64).collect();
            let &node = nodes.lattice_index.get(&idx)?;
            let gn = &graph[node];
            let u = gn.height.as_ref()?;
            let slope = match &gn.du {
                Some(du) => matrix_norm(du),
                None => return None,
            };
            let allowed = threshold + slope * (&cell.x - &gn.x).norm();
            ((&cell.height - u).norm() > allowed).then_some(node)
        })
        .collect();
    for node in flagged {
        graph[node].status = NodeStatus::MultiSheet;
    }
}

/// Sup-norm estimates of `u` and `Du` over the grid.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct NormEstimates {
    /// `max |u|` over grid and rim nodes.
    pub c0: f64,
    /// `c0 + (r/N)·lip`, an upper estimate of the supremum between nodes.
    pub c0_upper: f64,
    /// `max ‖Du‖`; infinite when a node is vertical.
    #[serde(with = "crate::report::inf_as_null")]
    pub lip: f64,
}

/// Computes [`NormEstimates`]; fails with `NotAGraph` when the sample has
/// second-sheet or unsolved nodes.
pub fn norms(sample: &GraphSample) -> Result<NormEstimates> {
    let multi_sheet = sample.count(NodeStatus::MultiSheet);
    let uncovered = sample.count(NodeStatus::Uncovered);
    if multi_sheet + uncovered > 0 {
        return Err(Error::NotAGraph { multi_sheet, uncovered });
    }
    let peaks = sample.peaks.unwrap_or(Peaks { c0: 0.0, lip: 0.0 });
    let c0 = sample
        .nodes
        .iter()
        .filter_map(|n| n.height.as_ref())
        .map(|h| h.norm())
        .fold(peaks.c0, f64::max);
    let lip = sample.nodes.iter().map(GraphNode::du_norm).fold(peaks.lip, f64::max);
    let c0_upper = if lip.is_finite() { c0 + sample.radius / sample.grid as f64 * lip } else { c0 };
    Ok(NormEstimates { c0, c0_upper, lip })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::zoo::{params, zoo_build};

    fn circle() -> ParamImmersion {
        zoo_build("circle", &params(&[("R", 1.0)])).unwrap()
    }

    fn q0() -> ParamPoint {
        ParamPoint::new(0, vec![0.0])
    }

    #[test]
    fn flat_component_is_parameter_ball() {
        let f = zoo_build("flat", &params(&[("m", 2.0), ("k", 1.0)])).unwrap();
        let ctx = FrameContext::canonical(&f, ParamPoint::new(0, vec![0.0, 0.0]), 1.0).unwrap();
        let h = 1.0 / 16.0;
        let region = component(&ctx, h).unwrap();
        let expected = (-16i64..=16)
            .flat_map(|i| (-16i64..=16).map(move |j| (i, j)))
            .filter(|&(i, j)| ((i * i + j * j) as f64).sqrt() * h < 1.0)
            .count();
        assert_eq!(region.len(), expected);
    }

    #[test]
    fn circle_component_is_arc() {
        let f = circle();
        let ctx = FrameContext::canonical(&f, q0(), 0.5).unwrap();
        let region = component(&ctx, 1e-3).unwrap();
        let max_t = region.cells().iter().map(|c| c.centre[0].abs()).fold(0.0, f64::max);
        assert!((max_t - 0.5f64.asin()).abs() <= 1e-3, "{max_t}");
    }

    #[test]
    fn circle_component_wraps_whole_circle() {
        let f = circle();
        let ctx = FrameContext::canonical(&f, q0(), 1.2).unwrap();
        let h = 0.01;
        let region = component(&ctx, h).unwrap();
        let total = (std::f64::consts::TAU / h).ceil() as usize;
        assert_eq!(region.len(), total);
    }

    #[test]
    fn solve_height_on_circle_and_flat() {
        let f = circle();
        let ctx = FrameContext::canonical(&f, q0(), 0.5).unwrap();
        let region = component(&ctx, 1e-3).unwrap();
        let (p, u) = solve_height(&ctx, &region, &Vector::from_element(1, 0.3), &q0()).unwrap();
        assert!((p.coords[0] - 0.3f64.asin()).abs() < 1e-10);
        assert!((u[0] - (1.0 - 0.91f64.sqrt())).abs() < 1e-12);

        let flat = zoo_build("flat", &params(&[("m", 2.0), ("k", 2.0)])).unwrap();
        let base = ParamPoint::new(0, vec![0.0, 0.0]);
        let ctx = FrameContext::canonical(&flat, base.clone(), 1.0).unwrap();
        let region = component(&ctx, 1.0 / 32.0).unwrap();
        let x = Vector::from_column_slice(&[0.25, -0.5]);
        let (p, u) = solve_height(&ctx, &region, &x, &base).unwrap();
        assert!((Vector::from_column_slice(&p.coords) - &x).norm() < 1e-14);
        assert!(u.norm() < 1e-15);
    }

    #[test]
    fn circle_extract_norms() {
        let f = circle();
        let ctx = FrameContext::canonical(&f, q0(), 0.5).unwrap();
        let sample = extract(&ctx, &ExtractOptions::with_grid(256)).unwrap();
        assert_eq!(sample.count(NodeStatus::Ok), sample.nodes.len());
        let n = norms(&sample).unwrap();
        let c0 = 1.0 - 0.75f64.sqrt();
        assert!(n.c0 >= c0 - 1e-8 && n.c0 <= c0 + 0.5 / 256.0 * 0.578);
        assert!((n.lip - 0.5 / 0.75f64.sqrt()).abs() < 1e-3);
        for node in &sample.nodes {
            let p = node.param.as_ref().unwrap();
            let y = ctx.local(p);
            assert!((y[0] - node.x[0]).abs() <= 1e-10);
            assert!((y[1] - node.height.as_ref().unwrap()[0]).abs() <= 1e-15);
        }
    }

    #[test]
    fn circle_beyond_unit_radius_has_second_sheet() {
        let f = circle();
        let ctx = FrameContext::canonical(&f, q0(), 1.2).unwrap();
        let sample = extract(&ctx, &ExtractOptions::with_grid(64)).unwrap();
        assert!(sample.count(NodeStatus::MultiSheet) > 0);
        assert!(matches!(norms(&sample), Err(Error::NotAGraph { .. })));
    }

    #[test]
    fn flat_extract_is_zero() {
        let f = zoo_build("flat", &params(&[("m", 2.0), ("k", 1.0)])).unwrap();
        let ctx = FrameContext::canonical(&f, ParamPoint::new(0, vec![0.3, -0.2]), 1.0).unwrap();
        let sample = extract(&ctx, &ExtractOptions::with_grid(16)).unwrap();
        let n = norms(&sample).unwrap();
        assert_eq!(n.c0, 0.0);
        assert_eq!(n.lip, 0.0);
    }

    #[test]
    fn sphere_height_is_radial() {
        let f = zoo_build("sphere2", &params(&[("R", 1.0)])).unwrap();
        let base = ParamPoint::new(0, vec![0.0, 0.0]);
        let ctx = FrameContext::canonical(&f, base.clone(), 0.6).unwrap();
        let region = component(&ctx, 0.6 / 32.0).unwrap();
        let x = Vector::from_column_slice(&[0.3, 0.4]);
        let (_, u) = solve_height(&ctx, &region, &x, &base).unwrap();
        assert!((u[0].abs() - (1.0 - 0.75f64.sqrt())).abs() < 1e-12);
    }

    #[test]
    fn layout_rim_nodes_sit_on_shrunk_sphere() {
        let lay = layout(2, 1.0, 16);
        let rim: Vec<&Vector> = lay.xs.iter().zip(&lay.rim).filter(|(_, r)| **r).map(|(x, _)| x).collect();
        assert!(!rim.is_empty());
        for x in rim {
            assert!((x.norm() - (1.0 - OPEN_BALL_SHRINK)).abs() < 1e-14);
        }
        assert!(lay.xs.iter().all(|x| x.norm() < 1.0));
    }
}
