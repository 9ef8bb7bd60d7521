//! Small-dimension linear algebra for points of ℝⁿ = ℝᵐ × ℝᵏ.
//!
//! Subspaces are stored through an orthonormal basis and compared by span.
//! Euclidean isometries are `x ↦ Rx + T` with `R ∈ SO(n)`. The graph matrix
//! of an m-plane `E` is the `k×m` matrix `A` with `E = span{(eⱼ, aⱼ)}`; its
//! size is measured by the column-ℓ² norm `‖A‖ = (Σⱼ|aⱼ|²)^{1/2}`, which
//! dominates the operator norm.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub type Vector = DVector<f64>;
pub type Matrix = DMatrix<f64>;

/// Tolerance on `BᵀB = I` for stored frames.
pub const ORTHONORMAL_TOL: f64 = 1e-12;
/// Tolerance on `det R = 1`.
pub const DET_TOL: f64 = 1e-9;
/// Smallest admissible singular value of the top `m×m` block for a plane to
/// count as a graph over ℝᵐ × {0}.
pub const GRAPH_RANK_TOL: f64 = 1e-9;
/// Largest principal angle (radians) under which two subspaces are equal.
pub const SPAN_TOL: f64 = 1e-10;
/// Largest distance of a probe from its subspace.
pub const PROBE_ON_PLANE_TOL: f64 = 1e-10;
/// Slack on the certified norm bound.
pub const NORM_BOUND_SLACK: f64 = 1e-12;

/// Column-ℓ² norm `(Σⱼ|aⱼ|²)^{1/2}` of a `k×m` matrix.
pub fn matrix_norm(a: &Matrix) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Spectral (operator) norm.
pub fn operator_norm(a: &Matrix) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    a.clone().svd(false, false).singular_values.max()
}

/// Smallest singular value of a matrix with at least as many rows as columns.
pub fn smallest_singular_value(a: &Matrix) -> f64 {
    if a.ncols() == 0 {
        return f64::INFINITY;
    }
    a.clone().svd(false, false).singular_values.min()
}

/// Largest singular value.
pub fn largest_singular_value(a: &Matrix) -> f64 {
    match a.ncols() {
        1 => a.column(0).norm(),
        2 => {
            // largest eigenvalue of the 2×2 Gram matrix
            let (c0, c1) = (a.column(0), a.column(1));
            let (p, q, r) = (c0.norm_squared(), c1.norm_squared(), c0.dot(&c1));
            (0.5 * (p + q) + (0.25 * (p - q) * (p - q) + r * r).sqrt()).sqrt()
        }
        _ => operator_norm(a),
    }
}

/// Smallest singular value of a square matrix; closed form up to 2×2.
fn square_smallest_singular_value(a: &Matrix) -> f64 {
    match a.nrows() {
        1 => a[(0, 0)].abs(),
        2 => {
            let det = (a[(0, 0)] * a[(1, 1)] - a[(0, 1)] * a[(1, 0)]).abs();
            let fro = a.norm_squared();
            let big = (0.5 * (fro + (fro * fro - 4.0 * det * det).max(0.0).sqrt())).sqrt();
            if big == 0.0 {
                0.0
            } else {
                det / big
            }
        }
        _ => smallest_singular_value(a),
    }
}

/// Modified Gram–Schmidt with column pivoting.
///
/// At every step the remaining column of largest norm is taken next; the
/// process stops once that norm drops to `tol`. The result has orthonormal
/// columns spanning the numerical column space (rank = number of columns).
pub fn orthonormalize(cols: &Matrix, tol: f64) -> Matrix {
    let n = cols.nrows();
    let mut work: Vec<Vector> = cols.column_iter().map(|c| c.into_owned()).collect();
    let mut basis: Vec<Vector> = Vec::with_capacity(work.len().min(n));
    while !work.is_empty() && basis.len() < n {
        let (pivot, norm) = work
            .iter()
            .enumerate()
            .map(|(i, c)| (i, c.norm()))
            .fold((0, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if norm <= tol {
            break;
        }
        let mut q = work.swap_remove(pivot);
        // second pass restores orthogonality lost to cancellation
        for b in &basis {
            let d = b.dot(&q);
            q.axpy(-d, b, 1.0);
        }
        let qn = q.norm();
        if qn <= tol {
            continue;
        }
        q /= qn;
        for c in work.iter_mut() {
            let d = q.dot(c);
            c.axpy(-d, &q, 1.0);
        }
        basis.push(q);
    }
    if basis.is_empty() {
        return Matrix::zeros(n, 0);
    }
    Matrix::from_columns(&basis)
}

/// Largest entry of `|MᵀM − I|`.
pub fn orthonormality_defect(m: &Matrix) -> f64 {
    let g = m.transpose() * m;
    let mut worst: f64 = 0.0;
    for i in 0..g.nrows() {
        for j in 0..g.ncols() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g[(i, j)] - target).abs());
        }
    }
    worst
}

/// An m-dimensional linear subspace of ℝⁿ, a point of the Grassmannian.
///
/// Equality is span equality: two subspaces compare equal when all principal
/// angles are below [`SPAN_TOL`], whatever bases were used to build them.
#[derive(Debug, Clone)]
pub struct Subspace {
    basis: Matrix,
}

impl Subspace {
    /// Orthonormalizes the columns of `cols`; they must be linearly independent.
    pub fn from_spanning(cols: &Matrix) -> Result<Self> {
        let scale = cols.iter().fold(0.0_f64, |a, v| a.max(v.abs())).max(f64::MIN_POSITIVE);
        let basis = orthonormalize(cols, 1e-13 * scale);
        if basis.ncols() < cols.ncols() {
            return Err(Error::RankDeficient {
                sigma: smallest_singular_value(cols),
            });
        }
        Ok(Self { basis })
    }

    /// Wraps a basis that is already orthonormal (checked to [`ORTHONORMAL_TOL`]).
    pub fn from_orthonormal(basis: Matrix) -> Result<Self> {
        if basis.ncols() > basis.nrows() || orthonormality_defect(&basis) > ORTHONORMAL_TOL {
            return Err(Error::InvalidInput("basis is not orthonormal".into()));
        }
        Ok(Self { basis })
    }

    /// ℝᵐ × {0} ⊂ ℝⁿ.
    pub fn coordinate(n: usize, m: usize) -> Self {
        assert!(m <= n, "subspace dimension exceeds ambient dimension");
        Self {
            basis: Matrix::identity(n, m),
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn basis(&self) -> &Matrix {
        &self.basis
    }

    /// Orthogonal projection of `v` onto the subspace.
    pub fn project(&self, v: &Vector) -> Vector {
        &self.basis * (self.basis.transpose() * v)
    }

    /// Euclidean distance from `v` to the subspace.
    pub fn distance_to(&self, v: &Vector) -> f64 {
        (v - self.project(v)).norm()
    }

    /// Image under a linear map with orthonormal columns (e.g. a rotation).
    pub fn transformed(&self, rotation: &Matrix) -> Self {
        Self {
            basis: rotation * &self.basis,
        }
    }

    /// Principal angles in increasing order.
    ///
    /// Small angles are taken from the sines (singular values of
    /// `(I − P₁)B₂`), large ones from the cosines, so both ends stay accurate.
    pub fn principal_angles(&self, other: &Subspace) -> Vec<f64> {
        assert_eq!(self.ambient_dim(), other.ambient_dim());
        let p = self.dim().min(other.dim());
        if p == 0 {
            return Vec::new();
        }
        let cross = self.basis.transpose() * &other.basis;
        let mut cos: Vec<f64> = cross.svd(false, false).singular_values.iter().copied().collect();
        cos.sort_by(|a, b| b.total_cmp(a));
        let residual = &other.basis - &self.basis * (self.basis.transpose() * &other.basis);
        let mut sin: Vec<f64> = residual.svd(false, false).singular_values.iter().copied().collect();
        sin.sort_by(|a, b| a.total_cmp(b));
        (0..p)
            .map(|i| {
                let s = sin.get(i).copied().unwrap_or(0.0).min(1.0);
                let c = cos.get(i).copied().unwrap_or(0.0).min(1.0);
                s.atan2(c)
            })
            .collect()
    }

    /// Largest principal angle; `π/2` when the dimensions differ.
    pub fn max_angle(&self, other: &Subspace) -> f64 {
        if self.dim() != other.dim() || self.ambient_dim() != other.ambient_dim() {
            return std::f64::consts::FRAC_PI_2;
        }
        self.principal_angles(other).into_iter().fold(0.0, f64::max)
    }

    pub fn span_eq(&self, other: &Subspace, tol: f64) -> bool {
        self.dim() == other.dim()
            && self.ambient_dim() == other.ambient_dim()
            && self.max_angle(other) <= tol
    }
}

impl PartialEq for Subspace {
    fn eq(&self, other: &Self) -> bool {
        self.span_eq(other, SPAN_TOL)
    }
}

/// A Euclidean isometry `x ↦ Rx + T` with `R ∈ SO(n)`.
#[derive(Debug, Clone)]
pub struct Isometry {
    rotation: Matrix,
    translation: Vector,
}

impl Isometry {
    pub fn new(rotation: Matrix, translation: Vector) -> Result<Self> {
        let n = translation.len();
        if rotation.nrows() != n || rotation.ncols() != n {
            return Err(Error::InvalidInput("rotation and translation dimensions differ".into()));
        }
        if orthonormality_defect(&rotation) > ORTHONORMAL_TOL {
            return Err(Error::InvalidInput("rotation is not orthogonal".into()));
        }
        if (rotation.determinant() - 1.0).abs() > DET_TOL {
            return Err(Error::InvalidInput("rotation does not preserve orientation".into()));
        }
        Ok(Self { rotation, translation })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            rotation: Matrix::identity(n, n),
            translation: Vector::zeros(n),
        }
    }

    pub fn dim(&self) -> usize {
        self.translation.len()
    }

    pub fn rotation(&self) -> &Matrix {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector {
        &self.translation
    }

    pub fn apply(&self, x: &Vector) -> Vector {
        &self.rotation * x + &self.translation
    }

    /// `A⁻¹(y) = Rᵀ(y − T)`.
    pub fn apply_inverse(&self, y: &Vector) -> Vector {
        self.rotation.tr_mul(&(y - &self.translation))
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Isometry) -> Isometry {
        Isometry {
            rotation: &self.rotation * &other.rotation,
            translation: &self.rotation * &other.translation + &self.translation,
        }
    }

    pub fn inverse(&self) -> Isometry {
        let rt = self.rotation.transpose();
        let translation = -(&rt * &self.translation);
        Isometry {
            rotation: rt,
            translation,
        }
    }
}

/// The k×m graph matrix of a plane together with its column-ℓ² norm.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphMatrix {
    pub matrix: Matrix,
    pub norm: f64,
}

impl GraphMatrix {
    fn new(matrix: Matrix) -> Self {
        let norm = matrix_norm(&matrix);
        Self { matrix, norm }
    }
}

/// Canonical isometry mapping the origin to `base` and ℝᵐ × {0} onto
/// `base + plane`.
///
/// The plane basis is re-orthonormalized with pivoted Gram–Schmidt, completed
/// to a frame of ℝⁿ by a QR factorization of `[B | I]`, and the last column is
/// negated when needed to land in SO(n).
pub fn make_admissible_isometry(base: &Vector, plane: &Subspace) -> Isometry {
    let n = plane.ambient_dim();
    let m = plane.dim();
    assert_eq!(base.len(), n, "base point and plane live in different spaces");
    let q0 = orthonormalize(plane.basis(), 1e-13);
    let mut aug = Matrix::zeros(n, m + n);
    aug.view_mut((0, 0), (n, m)).copy_from(&q0);
    aug.view_mut((0, m), (n, n)).fill_with_identity();
    let mut frame = aug.qr().q();
    frame.view_mut((0, 0), (n, m)).copy_from(&q0);
    // Re-orthogonalize the completion against the exact plane basis.
    for j in m..n {
        let mut c = frame.column(j).into_owned();
        for _ in 0..2 {
            for i in 0..j {
                let d = frame.column(i).dot(&c);
                c.axpy(-d, &frame.column(i).into_owned(), 1.0);
            }
        }
        c /= c.norm();
        frame.set_column(j, &c);
    }
    if frame.determinant() < 0.0 {
        let mut last = frame.column_mut(n - 1);
        last.neg_mut();
    }
    Isometry {
        rotation: frame,
        translation: base.clone(),
    }
}

/// Whether `iso` maps the origin to `base` and ℝᵐ × {0} onto `base + plane`.
pub fn is_admissible(iso: &Isometry, base: &Vector, plane: &Subspace) -> bool {
    let n = iso.dim();
    if base.len() != n || plane.ambient_dim() != n {
        return false;
    }
    if (iso.translation() - base).norm() > 1e-10 {
        return false;
    }
    let image = iso.rotation().columns(0, plane.dim()).into_owned();
    match Subspace::from_orthonormal(image) {
        Ok(s) => s.max_angle(plane) <= SPAN_TOL,
        Err(_) => false,
    }
}

/// The standard projection π: ℝⁿ → ℝᵐ onto the first m coordinates.
pub fn project_to_first_m(x: &Vector, m: usize) -> Vector {
    assert!(m < x.len(), "projection requires m < n");
    x.rows(0, m).into_owned()
}

/// The graph matrix of `e` over ℝᵐ × {0}, or `None` when the projection of
/// `e` to ℝᵐ loses rank.
pub fn subspace_graph_matrix(e: &Subspace) -> Option<GraphMatrix> {
    graph_matrix_of_orthonormal(e.basis())
}

/// The graph matrix of the column span of `cols`, which must have full
/// column rank; equal to `subspace_graph_matrix` of that span.
pub fn graph_matrix_of_columns(cols: &Matrix) -> Option<GraphMatrix> {
    graph_matrix_of_orthonormal(&cols.clone().qr().q())
}

fn graph_matrix_of_orthonormal(basis: &Matrix) -> Option<GraphMatrix> {
    let (n, m) = basis.shape();
    let k = n - m;
    let top = basis.rows(0, m).into_owned();
    if square_smallest_singular_value(&top) <= GRAPH_RANK_TOL {
        return None;
    }
    let bottom = basis.rows(m, k).into_owned();
    // A = bottom · top⁻¹, i.e. solve topᵀ Aᵀ = bottomᵀ
    let at = top.transpose().lu().solve(&bottom.transpose())?;
    Some(GraphMatrix::new(at.transpose()))
}

/// Graph matrix of `e` certified through probe points `v₁..v_m ∈ e`.
///
/// When every probe satisfies `|vⱼ − (eⱼ, 0)| ≤ L/(3√m)` with `L ≤ 1`, the
/// plane is a graph over ℝᵐ × {0} and its graph matrix has `‖A‖ ≤ L`. The
/// probes only validate the hypothesis; `A` itself is read off the plane.
pub fn graph_matrix_from_probes(e: &Subspace, probes: &[Vector], l: f64) -> Result<GraphMatrix> {
    let n = e.ambient_dim();
    let m = e.dim();
    if !(l.is_finite() && l >= 0.0 && l <= 1.0) {
        return Err(Error::InvalidInput(format!("bound L = {l} must lie in [0, 1]")));
    }
    if probes.len() != m {
        return Err(Error::InvalidInput(format!("expected {m} probes, got {}", probes.len())));
    }
    let radius = l / (3.0 * (m as f64).sqrt());
    for (j, v) in probes.iter().enumerate() {
        if v.len() != n {
            return Err(Error::InvalidInput(format!("probe {j} has dimension {}", v.len())));
        }
        if e.distance_to(v) > PROBE_ON_PLANE_TOL {
            return Err(Error::PreconditionViolated { probe: j });
        }
        let mut offset = v.clone();
        offset[j] -= 1.0;
        if offset.norm() > radius {
            return Err(Error::PreconditionViolated { probe: j });
        }
    }
    let graph = subspace_graph_matrix(e)
        .ok_or_else(|| Error::Numerical("probe hypothesis holds but plane is not a graph".into()))?;
    if graph.norm > l + NORM_BOUND_SLACK {
        return Err(Error::Numerical(format!(
            "certified norm {} exceeds bound {l}",
            graph.norm
        )));
    }
    Ok(graph)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn closed_form_singular_values_match_svd() {
        let a = Matrix::from_row_slice(3, 2, &[1.0, 0.3, -0.2, 2.0, 0.5, 0.7]);
        let svd = a.clone().svd(false, false).singular_values;
        assert!((largest_singular_value(&a) - svd.max()).abs() < 1e-14);
        let sq = Matrix::from_row_slice(2, 2, &[0.3, 1e-3, 0.2, -0.9]);
        let svd = sq.clone().svd(false, false).singular_values;
        assert!((square_smallest_singular_value(&sq) - svd.min()).abs() < 1e-15);
        let cols = Matrix::from_row_slice(3, 2, &[2.0, 0.1, 0.3, 1.5, 0.4, -0.8]);
        let from_cols = graph_matrix_of_columns(&cols).unwrap();
        let from_span = subspace_graph_matrix(&Subspace::from_spanning(&cols).unwrap()).unwrap();
        assert!((from_cols.matrix - from_span.matrix).amax() < 1e-14);
    }

    fn vec(v: &[f64]) -> Vector {
        Vector::from_column_slice(v)
    }

    #[test]
    fn matrix_norm_examples() {
        assert_eq!(matrix_norm(&Matrix::zeros(3, 2)), 0.0);
        assert_abs_diff_eq!(matrix_norm(&Matrix::from_row_slice(1, 2, &[3.0, 4.0])), 5.0);
        let id = Matrix::identity(2, 2);
        assert_abs_diff_eq!(matrix_norm(&id), 2f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(operator_norm(&id), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn aligned_plane_gives_identity_frame() {
        let iso = make_admissible_isometry(&Vector::zeros(3), &Subspace::coordinate(3, 2));
        assert_eq!(iso.translation(), &Vector::zeros(3));
        let image = Subspace::from_orthonormal(iso.rotation().columns(0, 2).into_owned()).unwrap();
        assert_eq!(image, Subspace::coordinate(3, 2));
        assert!(is_admissible(&iso, &Vector::zeros(3), &Subspace::coordinate(3, 2)));
    }

    #[test]
    fn admissible_line_in_plane() {
        let plane = Subspace::from_spanning(&Matrix::from_column_slice(2, 1, &[0.0, 1.0])).unwrap();
        let base = vec(&[1.0, 2.0]);
        let iso = make_admissible_isometry(&base, &plane);
        assert!(is_admissible(&iso, &base, &plane));
        assert_abs_diff_eq!(iso.rotation()[(0, 0)].abs(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(iso.rotation()[(1, 0)].abs(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(iso.rotation().determinant(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn admissible_diagonal_line_in_space() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let plane = Subspace::from_spanning(&Matrix::from_column_slice(3, 1, &[s, s, 0.0])).unwrap();
        let iso = make_admissible_isometry(&Vector::zeros(3), &plane);
        let c0 = iso.rotation().column(0);
        let sign = c0[0].signum();
        assert_abs_diff_eq!(c0[0] * sign, s, epsilon = 1e-15);
        assert_abs_diff_eq!(c0[1] * sign, s, epsilon = 1e-15);
        assert_abs_diff_eq!(c0[2], 0.0, epsilon = 1e-15);
        assert!(orthonormality_defect(iso.rotation()) < 1e-12);
        assert_abs_diff_eq!(iso.rotation().determinant(), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn identity_is_admissible_only_at_origin() {
        let id = Isometry::identity(3);
        let plane = Subspace::coordinate(3, 2);
        assert!(is_admissible(&id, &Vector::zeros(3), &plane));
        assert!(!is_admissible(&id, &vec(&[0.0, 0.0, 1.0]), &plane));
    }

    #[test]
    fn projection_examples() {
        assert_eq!(project_to_first_m(&vec(&[1.0, 2.0, 3.0]), 2), vec(&[1.0, 2.0]));
        assert_eq!(project_to_first_m(&vec(&[0.0, 5.0]), 1), vec(&[0.0]));
        let plane = Subspace::from_spanning(&Matrix::from_column_slice(3, 2, &[1.0, 1.0, 0.0, 0.0, 1.0, 2.0])).unwrap();
        let base = vec(&[0.3, -1.0, 2.5]);
        let iso = make_admissible_isometry(&base, &plane);
        let back = project_to_first_m(&iso.apply_inverse(&base), 2);
        assert!(back.norm() < 1e-10);
    }

    #[test]
    fn graph_matrix_of_lines() {
        assert_eq!(
            subspace_graph_matrix(&Subspace::coordinate(4, 2)).unwrap().matrix,
            Matrix::zeros(2, 2)
        );
        let tilted = Subspace::from_spanning(&Matrix::from_column_slice(2, 1, &[1.0, 0.1])).unwrap();
        let a = subspace_graph_matrix(&tilted).unwrap();
        assert_abs_diff_eq!(a.matrix[(0, 0)], 0.1, epsilon = 1e-14);
        let vertical = Subspace::from_spanning(&Matrix::from_column_slice(2, 1, &[0.0, 1.0])).unwrap();
        assert!(subspace_graph_matrix(&vertical).is_none());
    }

    #[test]
    fn exact_probes_certify_zero() {
        let e = Subspace::coordinate(3, 2);
        let probes = vec![vec(&[1.0, 0.0, 0.0]), vec(&[0.0, 1.0, 0.0])];
        for l in [0.0, 0.3, 1.0] {
            let a = graph_matrix_from_probes(&e, &probes, l).unwrap();
            assert_eq!(a.norm, 0.0);
        }
    }

    #[test]
    fn tilted_line_probe() {
        let scale = 1.01f64.sqrt();
        let e = Subspace::from_spanning(&Matrix::from_column_slice(2, 1, &[1.0, 0.1])).unwrap();
        let v = vec(&[1.0 / scale, 0.1 / scale]);
        // distance to e₁ is |(1/√1.01 − 1, 0.1/√1.01)| ≈ 0.09963
        let dist = ((1.0 / scale - 1.0).powi(2) + (0.1 / scale).powi(2)).sqrt();
        assert_abs_diff_eq!(dist, 0.09963, epsilon = 1e-5);
        let a = graph_matrix_from_probes(&e, &[v.clone()], 0.3).unwrap();
        assert_abs_diff_eq!(a.matrix[(0, 0)], 0.1, epsilon = 1e-14);
        assert!(a.norm <= 0.3);
        assert_eq!(
            graph_matrix_from_probes(&e, &[v], 0.2),
            Err(Error::PreconditionViolated { probe: 0 })
        );
    }

    #[test]
    fn off_plane_probe_is_rejected() {
        let e = Subspace::coordinate(3, 2);
        let probes = vec![vec(&[1.0, 0.0, 1e-6]), vec(&[0.0, 1.0, 0.0])];
        assert_eq!(
            graph_matrix_from_probes(&e, &probes, 1.0),
            Err(Error::PreconditionViolated { probe: 0 })
        );
        assert!(matches!(
            graph_matrix_from_probes(&e, &probes[..1], 1.0),
            Err(Error::InvalidInput(_))
        ));
        assert!(matches!(
            graph_matrix_from_probes(&e, &probes, 1.5),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn principal_angles_of_coordinate_planes() {
        let a = Subspace::coordinate(3, 1);
        let b = Subspace::from_spanning(&Matrix::from_column_slice(3, 1, &[1.0, 1.0, 0.0])).unwrap();
        assert_abs_diff_eq!(a.max_angle(&b), std::f64::consts::FRAC_PI_4, epsilon = 1e-14);
        let tiny = Subspace::from_spanning(&Matrix::from_column_slice(3, 1, &[1.0, 1e-12, 0.0])).unwrap();
        assert_abs_diff_eq!(a.max_angle(&tiny), 1e-12, epsilon = 1e-20);
    }

    #[test]
    fn rank_deficient_spanning_set() {
        let cols = Matrix::from_column_slice(3, 2, &[1.0, 2.0, 3.0, 2.0, 4.0, 6.0]);
        assert!(matches!(Subspace::from_spanning(&cols), Err(Error::RankDeficient { .. })));
    }

    #[test]
    fn isometry_rejects_reflection() {
        let refl = Matrix::from_diagonal(&vec(&[1.0, -1.0]));
        assert!(Isometry::new(refl, Vector::zeros(2)).is_err());
    }

    #[test]
    fn isometry_inverse_and_compose() {
        let plane = Subspace::from_spanning(&Matrix::from_column_slice(3, 1, &[1.0, 2.0, -1.0])).unwrap();
        let iso = make_admissible_isometry(&vec(&[1.0, -2.0, 0.5]), &plane);
        let x = vec(&[0.2, 0.7, -3.0]);
        let round = iso.apply_inverse(&iso.apply(&x));
        assert!((round - &x).norm() < 1e-14);
        let id = iso.compose(&iso.inverse());
        assert!((id.apply(&x) - &x).norm() < 1e-14);
    }
}
