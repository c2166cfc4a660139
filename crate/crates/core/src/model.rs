//! Uncertain LTI systems, the adjustable uncertainty parametrization, and the
//! augmented systems whose invariant sets certify recursive feasibility.
//!
//! The disturbance set is the affine image `W = Y S + y_off` of a fixed
//! primitive polytope `S = {s : Gs <= g}`. Stacking `(vec(Y), y_off)` as
//! extra state coordinates with identity dynamics turns "pick a constant
//! uncertainty set" into a set computation over the augmented state
//! `z = (x, vec(Y), y_off)`:
//!
//! ```text
//! z+ = [A + BK   E*S(s)   E]       [B b]
//!      [  0        I      0] z  +  [ 0 ]      S(s) vec(Y) = Y s
//!      [  0        0      I]       [ 0 ]
//! ```
//!
//! `vec` is column-major throughout, so `S(s)` is the Kronecker row
//! `s' (x) I`.

use thiserror::Error;

use crate::geometry::{GeometryError, HPolytope, VPolytope};
use crate::linalg::{dot, orthonormal_basis, solve_dense, Mat};
use crate::scalar::{scalar, Scalar};

#[derive(Clone, Debug, Error)]
pub enum ModelError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("primitive set must be bounded and nonempty")]
    BadPrimitiveSet,
    #[error("admissible parameter set must be nonempty")]
    EmptyAdmissibleSet,
    #[error("image construction supports disturbance dimensions 1..=3, got {0}")]
    UnsupportedDimension(usize),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// `x+ = Ax + Bu + Ew` with polytopic state and input constraints.
#[derive(Clone, Debug)]
pub struct UncertainLtiSystem<T: Scalar = f64> {
    pub a: Mat<T>,
    pub b: Mat<T>,
    pub e: Mat<T>,
    pub state_set: HPolytope<T>,
    pub input_set: HPolytope<T>,
}

impl<T: Scalar> UncertainLtiSystem<T> {
    pub fn new(
        a: Mat<T>,
        b: Mat<T>,
        e: Mat<T>,
        state_set: HPolytope<T>,
        input_set: HPolytope<T>,
    ) -> Result<Self, ModelError> {
        let n_x = a.rows();
        if a.cols() != n_x {
            return Err(ModelError::DimensionMismatch("A must be square".into()));
        }
        if b.rows() != n_x || e.rows() != n_x {
            return Err(ModelError::DimensionMismatch(
                "B and E must have as many rows as A".into(),
            ));
        }
        if state_set.dim() != n_x {
            return Err(ModelError::DimensionMismatch("state set dimension".into()));
        }
        if input_set.dim() != b.cols() {
            return Err(ModelError::DimensionMismatch("input set dimension".into()));
        }
        Ok(UncertainLtiSystem { a, b, e, state_set, input_set })
    }

    pub fn n_x(&self) -> usize {
        self.a.rows()
    }

    pub fn n_u(&self) -> usize {
        self.b.cols()
    }

    pub fn n_w(&self) -> usize {
        self.e.cols()
    }
}

/// The adjustable part: primitive set `S`, its vertices, and the admissible
/// set for the stacked parameters `(vec(Y), y_off)`.
#[derive(Clone, Debug)]
pub struct UncertaintyParametrization<T: Scalar = f64> {
    pub primitive_set: HPolytope<T>,
    pub primitive_vertices: VPolytope<T>,
    pub admissible_set: HPolytope<T>,
    /// Force a single `(Y, y_off)` across the whole prediction horizon.
    pub tie_over_horizon: bool,
    n_w: usize,
}

impl<T: Scalar> UncertaintyParametrization<T> {
    pub fn new(
        primitive_set: HPolytope<T>,
        admissible_set: HPolytope<T>,
        tie_over_horizon: bool,
        n_w: usize,
    ) -> Result<Self, ModelError> {
        let vertices = primitive_set
            .enumerate_vertices()
            .map_err(|_| ModelError::BadPrimitiveSet)?;
        if vertices.vertices.is_empty() {
            return Err(ModelError::BadPrimitiveSet);
        }
        Self::with_vertices(primitive_set, vertices, admissible_set, tie_over_horizon, n_w)
    }

    pub fn with_vertices(
        primitive_set: HPolytope<T>,
        primitive_vertices: VPolytope<T>,
        admissible_set: HPolytope<T>,
        tie_over_horizon: bool,
        n_w: usize,
    ) -> Result<Self, ModelError> {
        let n_s = primitive_set.dim();
        if admissible_set.dim() != n_w * n_s + n_w {
            return Err(ModelError::DimensionMismatch(format!(
                "admissible set has dimension {}, expected n_w*n_s + n_w = {}",
                admissible_set.dim(),
                n_w * n_s + n_w
            )));
        }
        for v in &primitive_vertices.vertices {
            if v.len() != n_s || !primitive_set.contains_point(v) {
                return Err(ModelError::BadPrimitiveSet);
            }
        }
        if admissible_set.is_empty()? {
            return Err(ModelError::EmptyAdmissibleSet);
        }
        Ok(UncertaintyParametrization {
            primitive_set,
            primitive_vertices,
            admissible_set,
            tie_over_horizon,
            n_w,
        })
    }

    pub fn n_s(&self) -> usize {
        self.primitive_set.dim()
    }

    pub fn n_w(&self) -> usize {
        self.n_w
    }

    /// Dimension of the stacked parameter vector `(vec(Y), y_off)`.
    pub fn param_dim(&self) -> usize {
        self.n_w * self.n_s() + self.n_w
    }

    /// Whether the parametrization admits the zero uncertainty set
    /// `(Y, y_off) = (0, 0)`. The shifted-policy feasibility fallback needs
    /// this; callers should warn when it fails.
    pub fn supports_zero_uncertainty(&self) -> bool {
        self.admissible_set.contains_point(&vec![T::zero(); self.param_dim()])
    }

    /// `Y = alpha * I` with `0 <= alpha <= y_max` and `y_off = 0`. Needs a
    /// square `Y` (`n_s == n_w`).
    pub fn scalar_symmetric_template(n_w: usize, y_max: T) -> HPolytope<T> {
        let n_s = n_w;
        let m = n_w * n_s + n_w;
        let mut rows: Vec<Vec<T>> = Vec::new();
        let mut offs: Vec<T> = Vec::new();
        let lead = 0; // index of Y[0,0] in the column-major stacking
        push_range(&mut rows, &mut offs, m, lead, T::zero(), y_max);
        for i in 0..n_w {
            for j in 0..n_s {
                let idx = j * n_w + i;
                if idx == lead {
                    continue;
                }
                if i == j {
                    // Tie the diagonal to the leading entry.
                    let mut row = vec![T::zero(); m];
                    row[idx] = T::one();
                    row[lead] = -T::one();
                    push_eq(&mut rows, &mut offs, row, T::zero());
                } else {
                    push_fixed(&mut rows, &mut offs, m, idx, T::zero());
                }
            }
        }
        for i in 0..n_w {
            push_fixed(&mut rows, &mut offs, m, n_w * n_s + i, T::zero());
        }
        HPolytope::new(Mat::from_rows(&rows).unwrap(), offs).unwrap()
    }

    /// Independent nonnegative diagonal scalings, zero offset.
    pub fn diagonal_template(n_w: usize, y_max: &[T]) -> HPolytope<T> {
        assert_eq!(y_max.len(), n_w);
        let n_s = n_w;
        let m = n_w * n_s + n_w;
        let mut rows: Vec<Vec<T>> = Vec::new();
        let mut offs: Vec<T> = Vec::new();
        for i in 0..n_w {
            for j in 0..n_s {
                let idx = j * n_w + i;
                if i == j {
                    push_range(&mut rows, &mut offs, m, idx, T::zero(), y_max[i]);
                } else {
                    push_fixed(&mut rows, &mut offs, m, idx, T::zero());
                }
            }
        }
        for i in 0..n_w {
            push_fixed(&mut rows, &mut offs, m, n_w * n_s + i, T::zero());
        }
        HPolytope::new(Mat::from_rows(&rows).unwrap(), offs).unwrap()
    }

    /// Independent bounds on every stacked entry.
    pub fn box_template(lower: &[T], upper: &[T]) -> HPolytope<T> {
        HPolytope::from_bounds(lower, upper)
    }
}

fn push_range<T: Scalar>(
    rows: &mut Vec<Vec<T>>,
    offs: &mut Vec<T>,
    m: usize,
    idx: usize,
    lo: T,
    hi: T,
) {
    let mut up = vec![T::zero(); m];
    up[idx] = T::one();
    rows.push(up);
    offs.push(hi);
    let mut down = vec![T::zero(); m];
    down[idx] = -T::one();
    rows.push(down);
    offs.push(-lo);
}

fn push_fixed<T: Scalar>(rows: &mut Vec<Vec<T>>, offs: &mut Vec<T>, m: usize, idx: usize, v: T) {
    push_range(rows, offs, m, idx, v, v);
}

fn push_eq<T: Scalar>(rows: &mut Vec<Vec<T>>, offs: &mut Vec<T>, row: Vec<T>, rhs: T) {
    let neg = row.iter().map(|x| -*x).collect();
    rows.push(row);
    offs.push(rhs);
    rows.push(neg);
    offs.push(-rhs);
}

/// `S(s) = s' (x) I_{n_w}`, the operator with `S(s) vec(Y) = Y s` for
/// column-major `vec`.
pub fn s_operator<T: Scalar>(s: &[T], n_w: usize) -> Mat<T> {
    let n_s = s.len();
    let mut m = Mat::zeros(n_w, n_w * n_s);
    for (j, &sj) in s.iter().enumerate() {
        for i in 0..n_w {
            m[(i, j * n_w + i)] = sj;
        }
    }
    m
}

/// Closed loop `u = Kx + b` over the augmented state `z = (x, vec(Y), y_off)`.
#[derive(Clone, Debug)]
pub struct AugmentedAutonomousSystem<T: Scalar = f64> {
    pub closed_loop_a: Mat<T>,
    pub e: Mat<T>,
    pub gain: Mat<T>,
    pub gain_offset: Vec<T>,
    /// Transition matrix realized at each vertex of the primitive set.
    pub vertex_transitions: Vec<Mat<T>>,
    /// Constant offset `[Bb; 0; 0]`.
    pub offset: Vec<T>,
    /// `Z = X x M`, the constraint set in z-space.
    pub feasible_set: HPolytope<T>,
    pub primitive_vertices: VPolytope<T>,
    n_x: usize,
    n_w: usize,
    n_s: usize,
}

impl<T: Scalar> AugmentedAutonomousSystem<T> {
    pub fn n(&self) -> usize {
        self.n_x + self.n_w * self.n_s + self.n_w
    }

    pub fn n_x(&self) -> usize {
        self.n_x
    }

    pub fn n_w(&self) -> usize {
        self.n_w
    }

    pub fn n_s(&self) -> usize {
        self.n_s
    }

    /// Transition matrix realized at an arbitrary primitive point `s`.
    pub fn transition_matrix(&self, s: &[T]) -> Mat<T> {
        augmented_transition(&self.closed_loop_a, &self.e, s, self.n_w, self.n_s)
    }

    /// One step of `z+ = g(z, s)`.
    pub fn step(&self, z: &[T], s: &[T]) -> Vec<T> {
        let mut out = self.transition_matrix(s).mul_vec(z);
        for (o, c) in out.iter_mut().zip(&self.offset) {
            *o = *o + *c;
        }
        out
    }
}

/// Free-input variant over the augmented state, `z+ = h(z, u, s)`.
#[derive(Clone, Debug)]
pub struct AugmentedControlledSystem<T: Scalar = f64> {
    pub a: Mat<T>,
    pub e: Mat<T>,
    /// Input matrix `[B; 0; 0]`.
    pub input_matrix: Mat<T>,
    pub vertex_transitions: Vec<Mat<T>>,
    pub feasible_set: HPolytope<T>,
    pub primitive_vertices: VPolytope<T>,
    n_x: usize,
    n_w: usize,
    n_s: usize,
}

impl<T: Scalar> AugmentedControlledSystem<T> {
    pub fn n(&self) -> usize {
        self.n_x + self.n_w * self.n_s + self.n_w
    }

    pub fn n_x(&self) -> usize {
        self.n_x
    }

    pub fn n_u(&self) -> usize {
        self.input_matrix.cols()
    }

    pub fn transition_matrix(&self, s: &[T]) -> Mat<T> {
        augmented_transition(&self.a, &self.e, s, self.n_w, self.n_s)
    }

    pub fn step(&self, z: &[T], u: &[T], s: &[T]) -> Vec<T> {
        let mut out = self.transition_matrix(s).mul_vec(z);
        let bu = self.input_matrix.mul_vec(u);
        for (o, c) in out.iter_mut().zip(&bu) {
            *o = *o + *c;
        }
        out
    }
}

fn augmented_transition<T: Scalar>(
    x_block: &Mat<T>,
    e: &Mat<T>,
    s: &[T],
    n_w: usize,
    n_s: usize,
) -> Mat<T> {
    let n_x = x_block.rows();
    let n = n_x + n_w * n_s + n_w;
    let mut m = Mat::zeros(n, n);
    m.set_block(0, 0, x_block);
    m.set_block(0, n_x, &e.mul(&s_operator(s, n_w)));
    m.set_block(0, n_x + n_w * n_s, e);
    for i in n_x..n {
        m[(i, i)] = T::one();
    }
    m
}

/// Augment the closed loop `u = Kx + b` with the uncertainty parameters.
pub fn build_autonomous_augmentation<T: Scalar>(
    sys: &UncertainLtiSystem<T>,
    unc: &UncertaintyParametrization<T>,
    gain: &Mat<T>,
    gain_offset: &[T],
) -> Result<AugmentedAutonomousSystem<T>, ModelError> {
    let (n_x, n_u) = (sys.n_x(), sys.n_u());
    if gain.rows() != n_u || gain.cols() != n_x || gain_offset.len() != n_u {
        return Err(ModelError::DimensionMismatch("feedback gain shape".into()));
    }
    if unc.n_w() != sys.n_w() {
        return Err(ModelError::DimensionMismatch("disturbance dimension".into()));
    }
    let closed_loop_a = sys.a.add(&sys.b.mul(gain));
    let bb = sys.b.mul_vec(gain_offset);
    let n = n_x + unc.param_dim();
    let mut offset = vec![T::zero(); n];
    offset[..n_x].copy_from_slice(&bb);
    let vertex_transitions = unc
        .primitive_vertices
        .vertices
        .iter()
        .map(|v| augmented_transition(&closed_loop_a, &sys.e, v, unc.n_w(), unc.n_s()))
        .collect();
    Ok(AugmentedAutonomousSystem {
        closed_loop_a,
        e: sys.e.clone(),
        gain: gain.clone(),
        gain_offset: gain_offset.to_vec(),
        vertex_transitions,
        offset,
        feasible_set: sys.state_set.cartesian_product(&unc.admissible_set),
        primitive_vertices: unc.primitive_vertices.clone(),
        n_x,
        n_w: unc.n_w(),
        n_s: unc.n_s(),
    })
}

/// Augment the open-loop system with the uncertainty parameters.
pub fn build_controlled_augmentation<T: Scalar>(
    sys: &UncertainLtiSystem<T>,
    unc: &UncertaintyParametrization<T>,
) -> Result<AugmentedControlledSystem<T>, ModelError> {
    if unc.n_w() != sys.n_w() {
        return Err(ModelError::DimensionMismatch("disturbance dimension".into()));
    }
    let n_x = sys.n_x();
    let n = n_x + unc.param_dim();
    let mut input_matrix = Mat::zeros(n, sys.n_u());
    input_matrix.set_block(0, 0, &sys.b);
    let vertex_transitions = unc
        .primitive_vertices
        .vertices
        .iter()
        .map(|v| augmented_transition(&sys.a, &sys.e, v, unc.n_w(), unc.n_s()))
        .collect();
    Ok(AugmentedControlledSystem {
        a: sys.a.clone(),
        e: sys.e.clone(),
        input_matrix,
        vertex_transitions,
        feasible_set: sys.state_set.cartesian_product(&unc.admissible_set),
        primitive_vertices: unc.primitive_vertices.clone(),
        n_x,
        n_w: unc.n_w(),
        n_s: unc.n_s(),
    })
}

/// Intersect the state set with `{x : K x + b in U}` so that sets computed
/// for the closed loop `u = Kx + b` certify input admissibility as well.
/// Without this, a terminal set built from a feedback that saturates inside
/// the state set cannot guarantee a feasible tail input.
pub fn tighten_states_for_feedback<T: Scalar>(
    sys: &UncertainLtiSystem<T>,
    gain: &Mat<T>,
    gain_offset: &[T],
) -> Result<UncertainLtiSystem<T>, ModelError> {
    if gain.rows() != sys.n_u() || gain.cols() != sys.n_x() || gain_offset.len() != sys.n_u() {
        return Err(ModelError::DimensionMismatch("feedback gain shape".into()));
    }
    // F_u (K x + b) <= f_u  =>  (F_u K) x <= f_u - F_u b.
    let fu_k = sys.input_set.matrix().mul(gain);
    let shift = sys.input_set.matrix().mul_vec(gain_offset);
    let offs: Vec<T> = sys
        .input_set
        .offsets()
        .iter()
        .zip(&shift)
        .map(|(f, s)| *f - *s)
        .collect();
    let admissible = HPolytope::new(fu_k, offs)?;
    let state_set = sys.state_set.intersect(&admissible)?.remove_redundancy()?;
    Ok(UncertainLtiSystem {
        a: sys.a.clone(),
        b: sys.b.clone(),
        e: sys.e.clone(),
        state_set,
        input_set: sys.input_set.clone(),
    })
}

/// The affine image of the primitive set with an explicit flatness flag.
#[derive(Clone, Debug)]
pub struct RealizedSet<T: Scalar = f64> {
    pub set: HPolytope<T>,
    /// True when the image is lower-dimensional than the disturbance space.
    pub flat: bool,
}

/// H-representation of `{Y s + y_off : s in S}`.
///
/// Uses the direct pullback when `Y` is square and invertible; otherwise maps
/// the primitive vertices and rebuilds the hull, handling flat images by
/// pinning the orthogonal complement with equality rows.
pub fn realize_uncertainty_set<T: Scalar>(
    y: &Mat<T>,
    y_off: &[T],
    primitive_set: &HPolytope<T>,
    primitive_vertices: &VPolytope<T>,
) -> Result<RealizedSet<T>, ModelError> {
    let n_w = y.rows();
    let n_s = y.cols();
    if y_off.len() != n_w || primitive_set.dim() != n_s {
        return Err(ModelError::DimensionMismatch("image shapes".into()));
    }
    if n_w == n_s {
        if let Some(y_inv) = invert(y) {
            let pull = primitive_set.matrix().mul(&y_inv);
            let shift = pull.mul_vec(y_off);
            let offs = primitive_set
                .offsets()
                .iter()
                .zip(&shift)
                .map(|(g, s)| *g + *s)
                .collect();
            return Ok(RealizedSet { set: HPolytope::new(pull, offs)?, flat: false });
        }
    }
    // Vertex image path.
    let points: Vec<Vec<T>> = primitive_vertices
        .vertices
        .iter()
        .map(|v| {
            let mut w = y.mul_vec(v);
            for (wi, oi) in w.iter_mut().zip(y_off) {
                *wi = *wi + *oi;
            }
            w
        })
        .collect();
    if points.is_empty() {
        return Err(ModelError::BadPrimitiveSet);
    }
    let base = points[0].clone();
    let diffs: Vec<Vec<T>> = points[1..]
        .iter()
        .map(|p| p.iter().zip(&base).map(|(a, b)| *a - *b).collect())
        .collect();
    let span = orthonormal_basis(&diffs, scalar::<T>(1e-9));
    let rank = span.len();
    if rank == n_w {
        if n_w > 3 {
            return Err(ModelError::UnsupportedDimension(n_w));
        }
        let hull = VPolytope { vertices: points }.to_h_rep()?;
        return Ok(RealizedSet { set: hull, flat: false });
    }
    // Flat image: equality rows pin the complement of the affine hull, hull
    // rows constrain the in-span coordinates.
    let mut rows: Vec<Vec<T>> = Vec::new();
    let mut offs: Vec<T> = Vec::new();
    let mut full = span.clone();
    for i in 0..n_w {
        let mut e_i = vec![T::zero(); n_w];
        e_i[i] = T::one();
        full.push(e_i);
    }
    let complete = orthonormal_basis(&full, scalar::<T>(1e-9));
    for q in complete.iter().skip(rank) {
        let rhs = dot(q, &base);
        rows.push(q.clone());
        offs.push(rhs);
        rows.push(q.iter().map(|x| -*x).collect());
        offs.push(-rhs);
    }
    if rank > 0 {
        let coords: Vec<Vec<T>> = points
            .iter()
            .map(|p| {
                let centered: Vec<T> = p.iter().zip(&base).map(|(a, b)| *a - *b).collect();
                span.iter().map(|u| dot(u, &centered)).collect()
            })
            .collect();
        let hull = VPolytope { vertices: coords }.to_h_rep()?;
        for i in 0..hull.num_rows() {
            let (crow, crhs) = hull.row(i);
            // c . t <= d with t_k = u_k . (w - base)
            let mut lifted = vec![T::zero(); n_w];
            for (ck, u) in crow.iter().zip(&span) {
                for (l, ui) in lifted.iter_mut().zip(u) {
                    *l = *l + *ck * *ui;
                }
            }
            let rhs = crhs + dot(&lifted, &base);
            rows.push(lifted);
            offs.push(rhs);
        }
    }
    Ok(RealizedSet {
        set: HPolytope::new(Mat::from_rows(&rows).unwrap(), offs)?,
        flat: true,
    })
}

fn invert<T: Scalar>(m: &Mat<T>) -> Option<Mat<T>> {
    let n = m.rows();
    if n != m.cols() {
        return None;
    }
    let mut cols: Vec<Vec<T>> = Vec::with_capacity(n);
    for j in 0..n {
        let mut e = vec![T::zero(); n];
        e[j] = T::one();
        cols.push(solve_dense(m, &e)?);
    }
    Some(Mat::from_fn(n, n, |i, j| cols[j][i]))
}
