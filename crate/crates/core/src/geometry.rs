//! H-polytopes `{x : Hx <= h}` and the set operations the invariant-set
//! algorithms need: intersection, redundancy removal, containment tests,
//! Fourier-Motzkin projection, and vertex enumeration of small polytopes.
//!
//! All operations are pure functions on immutable inputs. Containment and
//! redundancy are decided by one support LP per row, solved on the dual so
//! the simplex basis never grows past the ambient dimension.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{dot, norm2, row_rank, solve_dense, Mat};
use crate::lp::{self, LpError, Support};
use crate::scalar::{scalar, Scalar};

/// Row-count cap for intermediate Fourier-Motzkin systems.
pub const DEFAULT_PROJECTION_ROW_CAP: usize = 20_000;

/// Ambient-dimension cap for vertex enumeration.
pub const DEFAULT_VERTEX_DIM_CAP: usize = 6;

#[derive(Clone, Debug, Error)]
pub enum GeometryError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("set is unbounded in a tested direction")]
    UnboundedSet,
    #[error("projection exceeded the row cap ({rows} rows > {cap})")]
    ExplosionLimit { rows: usize, cap: usize },
    #[error("vertex enumeration limited to dimension {cap}, got {dim}")]
    DimensionCap { dim: usize, cap: usize },
    #[error("operation needs a nonempty set")]
    EmptySet,
    #[error("convex hull construction supports dimensions 1..=3, got {0}")]
    HullDimension(usize),
    #[error(transparent)]
    Lp(#[from] LpError),
}

/// Intersection of half-spaces `{x : Hx <= h}`.
///
/// Serializes as `{"H": [[...]], "h": [...]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(
    serialize = "T: Scalar + Serialize",
    deserialize = "T: Scalar + Deserialize<'de>"
))]
pub struct HPolytope<T: Scalar = f64> {
    #[serde(rename = "H")]
    a: Mat<T>,
    #[serde(rename = "h")]
    b: Vec<T>,
}

/// Finite point set, usually the vertices of a bounded `HPolytope`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(
    serialize = "T: Scalar + Serialize",
    deserialize = "T: Scalar + Deserialize<'de>"
))]
pub struct VPolytope<T: Scalar = f64> {
    pub vertices: Vec<Vec<T>>,
}

impl<T: Scalar> HPolytope<T> {
    pub fn new(a: Mat<T>, b: Vec<T>) -> Result<Self, GeometryError> {
        if a.rows() != b.len() {
            return Err(GeometryError::DimensionMismatch(format!(
                "{} constraint rows but {} right-hand sides",
                a.rows(),
                b.len()
            )));
        }
        Ok(HPolytope { a, b })
    }

    /// `R^dim`, represented with zero rows.
    pub fn full_space(dim: usize) -> Self {
        HPolytope { a: Mat::zeros(0, dim), b: Vec::new() }
    }

    /// Canonical empty set: the single unsatisfiable row `0 <= -1`.
    pub fn empty(dim: usize) -> Self {
        HPolytope { a: Mat::zeros(1, dim), b: vec![-T::one()] }
    }

    /// Axis-aligned box `lower <= x <= upper`.
    pub fn from_bounds(lower: &[T], upper: &[T]) -> Self {
        assert_eq!(lower.len(), upper.len());
        let d = lower.len();
        let mut a = Mat::zeros(2 * d, d);
        let mut b = vec![T::zero(); 2 * d];
        for i in 0..d {
            a[(2 * i, i)] = T::one();
            b[2 * i] = upper[i];
            a[(2 * i + 1, i)] = -T::one();
            b[2 * i + 1] = -lower[i];
        }
        HPolytope { a, b }
    }

    pub fn dim(&self) -> usize {
        self.a.cols()
    }

    pub fn num_rows(&self) -> usize {
        self.a.rows()
    }

    pub fn matrix(&self) -> &Mat<T> {
        &self.a
    }

    pub fn offsets(&self) -> &[T] {
        &self.b
    }

    pub fn row(&self, i: usize) -> (&[T], T) {
        (self.a.row(i), self.b[i])
    }

    pub fn contains_point(&self, x: &[T]) -> bool {
        self.contains_point_with_tol(x, T::feas_tol())
    }

    pub fn contains_point_with_tol(&self, x: &[T], tol: T) -> bool {
        (0..self.num_rows()).all(|i| dot(self.a.row(i), x) <= self.b[i] + tol)
    }

    /// Largest violation of `Hx <= h` at `x`; nonpositive means member.
    pub fn violation(&self, x: &[T]) -> T {
        (0..self.num_rows())
            .map(|i| dot(self.a.row(i), x) - self.b[i])
            .fold(T::neg_infinity(), T::max)
    }

    /// Scale each row to unit normal norm. Zero-normal rows with nonnegative
    /// offset are trivially true and dropped; zero rows with negative offset
    /// mark the set empty and are kept.
    pub fn normalized(&self) -> Self {
        let mut rows = Vec::with_capacity(self.num_rows());
        let mut offs = Vec::with_capacity(self.num_rows());
        for i in 0..self.num_rows() {
            let norm = norm2(self.a.row(i));
            if norm <= T::pivot_tol() {
                if self.b[i] < T::zero() {
                    rows.push(vec![T::zero(); self.dim()]);
                    offs.push(-T::one());
                }
                continue;
            }
            rows.push(self.a.row(i).iter().map(|v| *v / norm).collect());
            offs.push(self.b[i] / norm);
        }
        HPolytope {
            a: Mat::from_rows_with_cols(&rows, self.dim()).expect("rows share the dimension"),
            b: offs,
        }
    }

    pub fn feasible_point(&self) -> Result<Option<Vec<T>>, GeometryError> {
        Ok(lp::feasible_point(&self.a, &self.b)?)
    }

    pub fn is_empty(&self) -> Result<bool, GeometryError> {
        Ok(self.feasible_point()?.is_none())
    }

    /// Maximum of `direction · x` over the set.
    pub fn support(&self, direction: &[T]) -> Result<Support<T>, GeometryError> {
        if direction.len() != self.dim() {
            return Err(GeometryError::DimensionMismatch("support direction".into()));
        }
        Ok(lp::support_value(&self.a, &self.b, direction)?)
    }

    pub fn is_bounded(&self) -> Result<bool, GeometryError> {
        let mut dir = vec![T::zero(); self.dim()];
        for i in 0..self.dim() {
            for sign in [T::one(), -T::one()] {
                dir[i] = sign;
                match self.support(&dir)? {
                    Support::Unbounded => return Ok(false),
                    Support::Empty => return Ok(true),
                    Support::Value(_) => {}
                }
            }
            dir[i] = T::zero();
        }
        Ok(true)
    }

    /// Row-union intersection. Emptiness is not decided here.
    pub fn intersect(&self, other: &HPolytope<T>) -> Result<HPolytope<T>, GeometryError> {
        if self.dim() != other.dim() {
            return Err(GeometryError::DimensionMismatch(format!(
                "intersect: {} vs {}",
                self.dim(),
                other.dim()
            )));
        }
        let mut a = self.a.clone();
        for i in 0..other.num_rows() {
            a.push_row(other.a.row(i));
        }
        let mut b = self.b.clone();
        b.extend_from_slice(&other.b);
        Ok(HPolytope { a, b })
    }

    /// Cartesian product: `self x other` over the concatenated coordinates.
    pub fn cartesian_product(&self, other: &HPolytope<T>) -> HPolytope<T> {
        let (dl, dr) = (self.dim(), other.dim());
        let mut a = Mat::zeros(self.num_rows() + other.num_rows(), dl + dr);
        let mut b = Vec::with_capacity(a.rows());
        for i in 0..self.num_rows() {
            a.row_mut(i)[..dl].copy_from_slice(self.a.row(i));
            b.push(self.b[i]);
        }
        for i in 0..other.num_rows() {
            a.row_mut(self.num_rows() + i)[dl..].copy_from_slice(other.a.row(i));
            b.push(other.b[i]);
        }
        HPolytope { a, b }
    }

    /// Preimage `{x : H(Mx + c) <= h}` under an affine map.
    pub fn preimage(&self, map: &Mat<T>, offset: &[T]) -> Result<HPolytope<T>, GeometryError> {
        if map.rows() != self.dim() || offset.len() != self.dim() {
            return Err(GeometryError::DimensionMismatch("preimage map".into()));
        }
        let a = self.a.mul(map);
        let shift = self.a.mul_vec(offset);
        let b = self.b.iter().zip(&shift).map(|(bi, si)| *bi - *si).collect();
        Ok(HPolytope { a, b })
    }

    /// Substitute fixed values for the listed coordinates and drop them.
    pub fn slice(&self, fixed: &[(usize, T)]) -> Result<HPolytope<T>, GeometryError> {
        let mut taken = vec![false; self.dim()];
        for &(idx, _) in fixed {
            if idx >= self.dim() || taken[idx] {
                return Err(GeometryError::DimensionMismatch("slice coordinates".into()));
            }
            taken[idx] = true;
        }
        let keep: Vec<usize> = (0..self.dim()).filter(|&j| !taken[j]).collect();
        let mut rows = Vec::with_capacity(self.num_rows());
        let mut offs = Vec::with_capacity(self.num_rows());
        for i in 0..self.num_rows() {
            let row = self.a.row(i);
            let mut rhs = self.b[i];
            for &(idx, val) in fixed {
                rhs = rhs - row[idx] * val;
            }
            rows.push(keep.iter().map(|&j| row[j]).collect::<Vec<_>>());
            offs.push(rhs);
        }
        Ok(HPolytope {
            a: Mat::from_rows_with_cols(&rows, keep.len()).expect("rows share the dimension"),
            b: offs,
        })
    }

    /// Drop every row whose removal leaves the set unchanged, decided by one
    /// support LP per row. An empty input collapses to the canonical empty
    /// representation.
    pub fn remove_redundancy(&self) -> Result<HPolytope<T>, GeometryError> {
        self.remove_redundancy_with_tol(T::feas_tol())
    }

    /// Redundancy removal with an explicit slack: a row is dropped when the
    /// rest of the set cannot exceed its offset by more than `tol`, so the
    /// result can grow by at most `tol` per removed row.
    pub fn remove_redundancy_with_tol(&self, tol: T) -> Result<HPolytope<T>, GeometryError> {
        if self.num_rows() == 0 {
            return Ok(self.clone());
        }
        if self.is_empty()? {
            return Ok(HPolytope::empty(self.dim()));
        }
        let p = self.normalized();
        let n = p.num_rows();
        let mut keep = vec![true; n];
        for i in 0..n {
            let (row_i, rhs_i) = p.row(i);
            // Maximize this row over the others, capped one unit above its own
            // offset so the subproblem stays bounded.
            let mut a = Mat::zeros(0, p.dim());
            let mut b = Vec::new();
            for j in 0..n {
                if j != i && keep[j] {
                    a.push_row(p.a.row(j));
                    b.push(p.b[j]);
                }
            }
            a.push_row(row_i);
            b.push(rhs_i + T::one());
            match lp::support_value(&a, &b, row_i)? {
                Support::Value(v) => {
                    if v <= rhs_i + tol {
                        keep[i] = false;
                    }
                }
                // The cap row bounds this direction and the set is nonempty.
                Support::Unbounded | Support::Empty => {
                    return Err(LpError::NumericalFailure { iterations: 0 }.into())
                }
            }
        }
        let rows: Vec<Vec<T>> = (0..n).filter(|&i| keep[i]).map(|i| p.a.row(i).to_vec()).collect();
        let offs: Vec<T> = (0..n).filter(|&i| keep[i]).map(|i| p.b[i]).collect();
        Ok(HPolytope {
            a: Mat::from_rows_with_cols(&rows, p.dim()).expect("rows share the dimension"),
            b: offs,
        })
    }

    /// Collapse families of nearly parallel rows, keeping the tightest
    /// member of each family. Rows `i`, `j` belong to one family when
    /// `||n_i - n_j|| * scale + |b_i - b_j| <= tol` after normalization, so
    /// the result differs from the input by roughly `tol` over a set of
    /// radius `scale`. Fixed-point iterates of slowly contracting systems
    /// accumulate such shells; callers re-certify after merging.
    pub fn merge_parallel_rows(&self, tol: T, scale: T) -> HPolytope<T> {
        let p = self.normalized();
        let n = p.num_rows();
        let mut keep = vec![true; n];
        for i in 0..n {
            if !keep[i] {
                continue;
            }
            for j in (i + 1)..n {
                if !keep[j] {
                    continue;
                }
                let ni = p.a.row(i);
                let nj = p.a.row(j);
                let angle: T = ni
                    .iter()
                    .zip(nj)
                    .map(|(a, b)| (*a - *b) * (*a - *b))
                    .sum::<T>()
                    .sqrt();
                if angle * scale + (p.b[i] - p.b[j]).abs() <= tol {
                    // Keep the tighter offset.
                    if p.b[j] < p.b[i] {
                        keep[i] = false;
                        break;
                    } else {
                        keep[j] = false;
                    }
                }
            }
        }
        let rows: Vec<Vec<T>> = (0..n).filter(|&i| keep[i]).map(|i| p.a.row(i).to_vec()).collect();
        let offs: Vec<T> = (0..n).filter(|&i| keep[i]).map(|i| p.b[i]).collect();
        HPolytope {
            a: Mat::from_rows_with_cols(&rows, p.dim()).expect("rows share the dimension"),
            b: offs,
        }
    }

    /// Does `self` contain `other`? Decided by one support LP per row of
    /// `self`; an empty `other` is contained vacuously. Errors with
    /// `UnboundedSet` when `other` is unbounded in a tested direction.
    pub fn contains_poly(&self, other: &HPolytope<T>) -> Result<bool, GeometryError> {
        self.contains_poly_with_tol(other, T::feas_tol())
    }

    pub fn contains_poly_with_tol(
        &self,
        other: &HPolytope<T>,
        tol: T,
    ) -> Result<bool, GeometryError> {
        if self.dim() != other.dim() {
            return Err(GeometryError::DimensionMismatch(format!(
                "containment: {} vs {}",
                self.dim(),
                other.dim()
            )));
        }
        for i in 0..self.num_rows() {
            let (row, rhs) = self.row(i);
            let norm = norm2(row);
            if norm <= T::pivot_tol() {
                if rhs < -tol {
                    // Self is empty; only an empty inner set fits.
                    return other.is_empty();
                }
                continue;
            }
            match lp::support_value(&other.a, &other.b, row)? {
                Support::Value(v) => {
                    if v > rhs + tol * norm.max(T::one()) {
                        return Ok(false);
                    }
                }
                Support::Unbounded => return Err(GeometryError::UnboundedSet),
                Support::Empty => return Ok(true),
            }
        }
        Ok(true)
    }

    /// Set equality as mutual containment with the feasibility slack.
    pub fn set_equal(&self, other: &HPolytope<T>) -> Result<bool, GeometryError> {
        Ok(self.contains_poly(other)? && other.contains_poly(self)?)
    }

    /// Eliminate the trailing `last_k` coordinates by Fourier-Motzkin, with
    /// redundancy removal after each elimination. The result is the
    /// orthogonal projection onto the leading coordinates.
    pub fn project_out(&self, last_k: usize) -> Result<HPolytope<T>, GeometryError> {
        self.project_out_with_cap(last_k, DEFAULT_PROJECTION_ROW_CAP)
    }

    pub fn project_out_with_cap(
        &self,
        last_k: usize,
        cap: usize,
    ) -> Result<HPolytope<T>, GeometryError> {
        if last_k >= self.dim() {
            return Err(GeometryError::DimensionMismatch(
                "must keep at least one coordinate".into(),
            ));
        }
        if self.is_empty()? {
            return Ok(HPolytope::empty(self.dim() - last_k));
        }
        let mut p = self.normalized();
        for _ in 0..last_k {
            let col = p.dim() - 1;
            let mut zero_rows: Vec<(Vec<T>, T)> = Vec::new();
            let mut pos: Vec<(Vec<T>, T)> = Vec::new();
            let mut neg: Vec<(Vec<T>, T)> = Vec::new();
            for i in 0..p.num_rows() {
                let row = p.a.row(i);
                let coef = row[col];
                let reduced: Vec<T> = row[..col].to_vec();
                if coef.abs() <= T::pivot_tol() {
                    zero_rows.push((reduced, p.b[i]));
                } else if coef > T::zero() {
                    pos.push((
                        reduced.iter().map(|v| *v / coef).collect(),
                        p.b[i] / coef,
                    ));
                } else {
                    let neg_coef = -coef;
                    neg.push((
                        reduced.iter().map(|v| *v / neg_coef).collect(),
                        p.b[i] / neg_coef,
                    ));
                }
            }
            let combined = zero_rows.len() + pos.len() * neg.len();
            if combined > cap {
                return Err(GeometryError::ExplosionLimit { rows: combined, cap });
            }
            let mut rows = zero_rows;
            // pos row: x_col <= b_p - a_p . x;  neg row: x_col >= a_n . x - b_n.
            for (ap, bp) in &pos {
                for (an, bn) in &neg {
                    let row: Vec<T> = ap.iter().zip(an).map(|(x, y)| *x + *y).collect();
                    rows.push((row, *bp + *bn));
                }
            }
            let a =
                Mat::from_rows_with_cols(&rows.iter().map(|(r, _)| r.clone()).collect::<Vec<_>>(), col)
                    .expect("rows share the dimension");
            let b = rows.iter().map(|(_, o)| *o).collect();
            p = HPolytope { a, b }.remove_redundancy()?;
            if p.num_rows() == 1 && norm2(p.a.row(0)) <= T::pivot_tol() && p.b[0] < T::zero() {
                // Empty marker: pad back to the requested output dimension.
                return Ok(HPolytope::empty(self.dim() - last_k));
            }
        }
        Ok(p)
    }

    /// All vertices of a bounded polytope of small dimension: every basic
    /// solution of an active-row subset of size `dim`, feasibility-checked
    /// and deduplicated.
    pub fn enumerate_vertices(&self) -> Result<VPolytope<T>, GeometryError> {
        self.enumerate_vertices_with_cap(DEFAULT_VERTEX_DIM_CAP)
    }

    pub fn enumerate_vertices_with_cap(
        &self,
        dim_cap: usize,
    ) -> Result<VPolytope<T>, GeometryError> {
        let d = self.dim();
        if d > dim_cap {
            return Err(GeometryError::DimensionCap { dim: d, cap: dim_cap });
        }
        if !self.is_bounded()? {
            return Err(GeometryError::UnboundedSet);
        }
        let p = self.normalized();
        let n = p.num_rows();
        let mut vertices: Vec<Vec<T>> = Vec::new();
        if n < d {
            return Ok(VPolytope { vertices });
        }
        let mut idx: Vec<usize> = (0..d).collect();
        loop {
            let a = Mat::from_rows(&idx.iter().map(|&i| p.a.row(i).to_vec()).collect::<Vec<_>>())
                .unwrap();
            let rhs: Vec<T> = idx.iter().map(|&i| p.b[i]).collect();
            if let Some(x) = solve_dense(&a, &rhs) {
                if p.contains_point(&x)
                    && !vertices.iter().any(|v| max_abs_diff(v, &x) <= T::vertex_merge_tol())
                {
                    vertices.push(x);
                }
            }
            if !next_combination(&mut idx, n) {
                break;
            }
        }
        Ok(VPolytope { vertices })
    }

    /// Deterministic sample of points: the vertex set followed by seeded
    /// random convex combinations. Convexity makes vertex checks the binding
    /// ones, but interior samples exercise the same certificates.
    pub fn sample_points(
        &self,
        count: usize,
        rng: &mut impl rand::Rng,
    ) -> Result<Vec<Vec<T>>, GeometryError> {
        let verts = self.enumerate_vertices()?.vertices;
        if verts.is_empty() {
            return Err(GeometryError::EmptySet);
        }
        let mut out: Vec<Vec<T>> = verts.iter().take(count).cloned().collect();
        while out.len() < count {
            let mut weights: Vec<T> = (0..verts.len())
                .map(|_| scalar::<T>(-rng.random_range(1e-6..1.0f64).ln()))
                .collect();
            let total: T = weights.iter().copied().sum();
            for w in weights.iter_mut() {
                *w = *w / total;
            }
            let mut point = vec![T::zero(); self.dim()];
            for (w, v) in weights.iter().zip(&verts) {
                for (pi, vi) in point.iter_mut().zip(v) {
                    *pi = *pi + *w * *vi;
                }
            }
            out.push(point);
        }
        Ok(out)
    }
}

impl<T: Scalar> VPolytope<T> {
    pub fn dim(&self) -> usize {
        self.vertices.first().map_or(0, |v| v.len())
    }

    /// H-representation of the convex hull. Supports ambient dimensions 1-3
    /// and requires the points to span the full dimension.
    pub fn to_h_rep(&self) -> Result<HPolytope<T>, GeometryError> {
        let d = self.dim();
        if self.vertices.is_empty() {
            return Err(GeometryError::EmptySet);
        }
        if d == 0 || d > 3 {
            return Err(GeometryError::HullDimension(d));
        }
        if affine_rank(&self.vertices) < d {
            return Err(GeometryError::HullDimension(d));
        }
        if d == 1 {
            let lo = self.vertices.iter().map(|v| v[0]).fold(T::infinity(), T::min);
            let hi = self.vertices.iter().map(|v| v[0]).fold(T::neg_infinity(), T::max);
            return Ok(HPolytope::from_bounds(&[lo], &[hi]));
        }
        let mut rows: Vec<Vec<T>> = Vec::new();
        let mut offs: Vec<T> = Vec::new();
        let mut idx: Vec<usize> = (0..d).collect();
        let n = self.vertices.len();
        let tol = scalar::<T>(1e-9);
        loop {
            if let Some(normal) = hyperplane_normal(&self.vertices, &idx) {
                let offset = dot(&normal, &self.vertices[idx[0]]);
                let mut above = false;
                let mut below = false;
                for v in &self.vertices {
                    let val = dot(&normal, v) - offset;
                    if val > tol {
                        above = true;
                    } else if val < -tol {
                        below = true;
                    }
                }
                if !(above && below) {
                    let (mut row, mut rhs) = (normal, offset);
                    if above {
                        for r in row.iter_mut() {
                            *r = -*r;
                        }
                        rhs = -rhs;
                    }
                    if !rows
                        .iter()
                        .zip(&offs)
                        .any(|(r, o)| max_abs_diff(r, &row) <= tol && (*o - rhs).abs() <= tol)
                    {
                        rows.push(row);
                        offs.push(rhs);
                    }
                }
            }
            if !next_combination(&mut idx, n) {
                break;
            }
        }
        HPolytope::new(Mat::from_rows(&rows).unwrap(), offs)
    }
}

/// Unit normal of the hyperplane through the selected points, when they are
/// in general position.
fn hyperplane_normal<T: Scalar>(points: &[Vec<T>], idx: &[usize]) -> Option<Vec<T>> {
    let d = points[idx[0]].len();
    let base = &points[idx[0]];
    match d {
        2 => {
            let p = &points[idx[1]];
            let edge = [p[0] - base[0], p[1] - base[1]];
            let normal = vec![edge[1], -edge[0]];
            normalize_unit(normal)
        }
        3 => {
            let p = &points[idx[1]];
            let q = &points[idx[2]];
            let u = [p[0] - base[0], p[1] - base[1], p[2] - base[2]];
            let v = [q[0] - base[0], q[1] - base[1], q[2] - base[2]];
            let normal = vec![
                u[1] * v[2] - u[2] * v[1],
                u[2] * v[0] - u[0] * v[2],
                u[0] * v[1] - u[1] * v[0],
            ];
            normalize_unit(normal)
        }
        _ => None,
    }
}

fn normalize_unit<T: Scalar>(mut v: Vec<T>) -> Option<Vec<T>> {
    let n = norm2(&v);
    if n <= scalar::<T>(1e-12) {
        return None;
    }
    for x in v.iter_mut() {
        *x = *x / n;
    }
    Some(v)
}

fn affine_rank<T: Scalar>(points: &[Vec<T>]) -> usize {
    if points.len() < 2 {
        return 0;
    }
    let base = &points[0];
    let diffs: Vec<Vec<T>> = points[1..]
        .iter()
        .map(|p| p.iter().zip(base).map(|(a, b)| *a - *b).collect())
        .collect();
    row_rank(&diffs, scalar::<T>(1e-9))
}

fn max_abs_diff<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(x, y)| (*x - *y).abs()).fold(T::zero(), T::max)
}

/// Advance `idx` to the next k-combination of `0..n`; false when exhausted.
fn next_combination(idx: &mut [usize], n: usize) -> bool {
    let k = idx.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if idx[i] < n - k + i {
            idx[i] += 1;
            for j in (i + 1)..k {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}
