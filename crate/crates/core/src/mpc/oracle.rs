//! Exact reference solver and robust certificate, both built on explicit
//! enumeration of the primitive vertex sequences.
//!
//! Constraints are affine in the primitive sequence for any fixed decision,
//! so the robust problem over `S^N` equals the same problem over the finitely
//! many vertex sequences. Enumerating them gives an LP that is exponential in
//! the horizon but exact, which is exactly what is wanted from a reference:
//! its rows come from a step-by-step symbolic rollout, not from the stacked
//! prediction matrices or the dualization it is used to check.

use crate::geometry::HPolytope;
use crate::linalg::Mat;
use crate::lp::{solve_lp, Direction, LinearProgram, LpSolution, RowSense, VarBound};
use crate::problem::CompiledProblem;
use crate::scalar::Scalar;

use super::{simulate_policy_response, PolicyLayout, RmpcError, RmpcSolution};

/// Affine function of the policy variables: `coef x_policy + constant`.
#[derive(Clone)]
struct AffineBlock<T: Scalar> {
    coef: Mat<T>,
    constant: Vec<T>,
}

impl<T: Scalar> AffineBlock<T> {
    fn constant_vec(values: &[T], n_vars: usize) -> Self {
        AffineBlock { coef: Mat::zeros(values.len(), n_vars), constant: values.to_vec() }
    }

    fn apply(&self, m: &Mat<T>) -> Self {
        AffineBlock { coef: m.mul(&self.coef), constant: m.mul_vec(&self.constant) }
    }

    fn add(&self, other: &Self) -> Self {
        AffineBlock {
            coef: self.coef.add(&other.coef),
            constant: self
                .constant
                .iter()
                .zip(&other.constant)
                .map(|(a, b)| *a + *b)
                .collect(),
        }
    }
}

/// Mixed-radix counter over vertex index tuples of length `horizon`.
fn for_each_vertex_sequence(
    n_vertices: usize,
    horizon: usize,
    mut f: impl FnMut(&[usize]),
) {
    let mut idx = vec![0usize; horizon];
    loop {
        f(&idx);
        let mut pos = horizon;
        loop {
            if pos == 0 {
                return;
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < n_vertices {
                break;
            }
            idx[pos] = 0;
            if pos == 0 {
                return;
            }
        }
    }
}

/// Solve the adjustable-uncertainty problem exactly by imposing every
/// constraint at every vertex sequence of the primitive set. Intended for
/// small horizons and primitive sets; the row count grows as `|V|^N`.
pub fn solve_ocp_vertex_oracle<T: Scalar>(
    instance: &CompiledProblem<T>,
    x0: &[T],
    terminal: Option<&HPolytope<T>>,
) -> Result<RmpcSolution<T>, RmpcError<T>> {
    let sys = &instance.system;
    let unc = &instance.uncertainty;
    let n = instance.horizon;
    let (n_x, n_u, n_w, n_s) = (sys.n_x(), sys.n_u(), sys.n_w(), unc.n_s());
    if x0.len() != n_x {
        return Err(RmpcError::Shape("initial state length".into()));
    }
    let layout = PolicyLayout::new(n, n_u, n_s, n_w);
    let total = layout.policy_total;
    let vertices = &unc.primitive_vertices.vertices;

    let mut rows: Vec<Vec<T>> = Vec::new();
    let mut rhs: Vec<T> = Vec::new();
    let mut senses: Vec<RowSense> = Vec::new();

    for_each_vertex_sequence(vertices.len(), n, |seq| {
        // Symbolic rollout along this vertex sequence.
        let mut states = vec![AffineBlock::constant_vec(x0, total)];
        let mut inputs: Vec<AffineBlock<T>> = Vec::with_capacity(n);
        for k in 0..n {
            let mut u = AffineBlock::constant_vec(&vec![T::zero(); n_u], total);
            for iu in 0..n_u {
                u.coef[(iu, layout.p_index(k, iu))] = T::one();
                for (j, &vj) in seq.iter().take(k).enumerate() {
                    for (is, sv) in vertices[vj].iter().enumerate() {
                        u.coef[(iu, layout.p_gain_index(k, j, iu, is))] = *sv;
                    }
                }
            }
            let mut w = AffineBlock::constant_vec(&vec![T::zero(); n_w], total);
            for iw in 0..n_w {
                for (is, sv) in vertices[seq[k]].iter().enumerate() {
                    w.coef[(iw, layout.y_index(k, iw, is))] = *sv;
                }
                w.coef[(iw, layout.y_off_index(k, iw))] = T::one();
            }
            let next = states[k]
                .apply(&sys.a)
                .add(&u.apply(&sys.b))
                .add(&w.apply(&sys.e));
            states.push(next);
            inputs.push(u);
        }
        // State and input constraints along the rollout.
        for k in 0..n {
            push_affine_rows(&mut rows, &mut rhs, &mut senses, &states[k], &sys.state_set);
            push_affine_rows(&mut rows, &mut rhs, &mut senses, &inputs[k], &sys.input_set);
        }
        // Terminal rows over (x_N, vec(Y_{N-1}), y_off_{N-1}).
        if let Some(term) = terminal {
            let fx = term.matrix().block(0..term.num_rows(), 0..n_x);
            let fin = states[n].apply(&fx);
            for t in 0..term.num_rows() {
                let mut row = fin.coef.row(t).to_vec();
                for c in 0..(n_w * n_s) {
                    let idx = layout.y_start + (n - 1) * n_w * n_s + c;
                    row[idx] = row[idx] + term.matrix()[(t, n_x + c)];
                }
                for iw in 0..n_w {
                    let idx = layout.y_off_index(n - 1, iw);
                    row[idx] = row[idx] + term.matrix()[(t, n_x + n_w * n_s + iw)];
                }
                rows.push(row);
                rhs.push(term.offsets()[t] - fin.constant[t]);
                senses.push(RowSense::Le);
            }
        }
        // Epigraph: the realized cost along this sequence is below tau.
        let mut cost_row = vec![T::zero(); total];
        let mut cost_const = T::zero();
        cost_row[layout.tau] = -T::one();
        for k in 0..n {
            accumulate_row(&mut cost_row, &mut cost_const, &instance.cost.state, &states[k]);
            accumulate_row(&mut cost_row, &mut cost_const, &instance.cost.input, &inputs[k]);
        }
        accumulate_row(&mut cost_row, &mut cost_const, &instance.cost.terminal, &states[n]);
        rows.push(cost_row);
        rhs.push(-cost_const);
        senses.push(RowSense::Le);
    });

    // Shared rows: admissible membership and horizon ties.
    let admissible = &unc.admissible_set;
    for k in 0..n {
        for r in 0..admissible.num_rows() {
            let hrow = admissible.matrix().row(r);
            let mut row = vec![T::zero(); total];
            for c in 0..(n_w * n_s) {
                row[layout.y_start + k * n_w * n_s + c] = hrow[c];
            }
            for iw in 0..n_w {
                row[layout.y_off_index(k, iw)] = hrow[n_w * n_s + iw];
            }
            rows.push(row);
            rhs.push(admissible.offsets()[r]);
            senses.push(RowSense::Le);
        }
    }
    if unc.tie_over_horizon {
        for k in 1..n {
            for c in 0..(n_w * n_s) {
                let mut row = vec![T::zero(); total];
                row[layout.y_start + k * n_w * n_s + c] = T::one();
                row[layout.y_start + c] = -T::one();
                rows.push(row);
                rhs.push(T::zero());
                senses.push(RowSense::Eq);
            }
            for iw in 0..n_w {
                let mut row = vec![T::zero(); total];
                row[layout.y_off_index(k, iw)] = T::one();
                row[layout.y_off_index(0, iw)] = -T::one();
                rows.push(row);
                rhs.push(T::zero());
                senses.push(RowSense::Eq);
            }
        }
    }

    let mut objective = vec![T::zero(); total];
    objective[layout.tau] = T::one();
    for k in 0..n {
        for c in 0..(n_w * n_s) {
            objective[layout.y_start + k * n_w * n_s + c] = -instance.lambda[k] * instance.rho.y[c];
        }
        for iw in 0..n_w {
            objective[layout.y_off_index(k, iw)] =
                -instance.lambda[k] * instance.rho.y_off[iw];
        }
    }

    let lp = LinearProgram {
        objective,
        constraint_matrix: Mat::from_rows_with_cols(&rows, total).expect("rows share the width"),
        rhs,
        senses,
        bounds: vec![VarBound::free(); total],
        direction: Direction::Minimize,
    };
    match solve_lp(&lp)? {
        LpSolution::Optimal { primal, objective_value } => {
            let (policy, uncertainty, tau) = layout.extract_solution(&primal);
            Ok(RmpcSolution { policy, uncertainty, tau, objective: objective_value })
        }
        LpSolution::Infeasible => Err(RmpcError::Infeasible),
        LpSolution::Unbounded => Err(RmpcError::Unbounded),
    }
}

fn push_affine_rows<T: Scalar>(
    rows: &mut Vec<Vec<T>>,
    rhs: &mut Vec<T>,
    senses: &mut Vec<RowSense>,
    value: &AffineBlock<T>,
    set: &HPolytope<T>,
) {
    let mapped = value.apply(set.matrix());
    for i in 0..set.num_rows() {
        rows.push(mapped.coef.row(i).to_vec());
        rhs.push(set.offsets()[i] - mapped.constant[i]);
        senses.push(RowSense::Le);
    }
}

fn accumulate_row<T: Scalar>(
    row: &mut [T],
    constant: &mut T,
    weights: &[T],
    value: &AffineBlock<T>,
) {
    for (i, wgt) in weights.iter().enumerate() {
        if *wgt == T::zero() {
            continue;
        }
        for (rj, cj) in row.iter_mut().zip(value.coef.row(i)) {
            *rj = *rj + *wgt * *cj;
        }
        *constant = *constant + *wgt * value.constant[i];
    }
}

/// Result of checking an optimal solution against every vertex sequence.
#[derive(Clone, Debug)]
pub struct RobustCertificate<T> {
    pub sequences: usize,
    /// Worst state/input/terminal constraint violation across sequences.
    pub max_violation: T,
    /// Worst `realized cost - tau`; nonpositive means the bound is valid.
    pub max_cost_gap: T,
}

impl<T: Scalar> RobustCertificate<T> {
    pub fn holds(&self, tol: T) -> bool {
        self.max_violation <= tol && self.max_cost_gap <= tol
    }
}

/// Replay a solution along every primitive vertex sequence and measure the
/// worst constraint violation and epigraph gap.
pub fn verify_robust_feasibility<T: Scalar>(
    instance: &CompiledProblem<T>,
    x0: &[T],
    terminal: Option<&HPolytope<T>>,
    solution: &RmpcSolution<T>,
) -> Result<RobustCertificate<T>, RmpcError<T>> {
    let sys = &instance.system;
    let unc = &instance.uncertainty;
    let n = instance.horizon;
    let vertices = &unc.primitive_vertices.vertices;
    let mut cert = RobustCertificate {
        sequences: 0,
        max_violation: T::neg_infinity(),
        max_cost_gap: T::neg_infinity(),
    };
    for_each_vertex_sequence(vertices.len(), n, |seq| {
        let s_seq: Vec<Vec<T>> = seq.iter().map(|&v| vertices[v].clone()).collect();
        let response =
            simulate_policy_response(sys, x0, &solution.policy, &solution.uncertainty, &s_seq);
        cert.sequences += 1;
        for k in 0..n {
            cert.max_violation = cert
                .max_violation
                .max(sys.state_set.violation(&response.states[k]))
                .max(sys.input_set.violation(&response.inputs[k]));
        }
        if let Some(term) = terminal {
            let (y_last, y_off_last) = &solution.uncertainty[n - 1];
            let mut z = response.states[n].clone();
            z.extend(y_last.vec_col());
            z.extend_from_slice(y_off_last);
            cert.max_violation = cert.max_violation.max(term.violation(&z));
        }
        let mut cost = T::zero();
        for k in 0..n {
            cost = cost + crate::linalg::dot(&instance.cost.state, &response.states[k]);
            cost = cost + crate::linalg::dot(&instance.cost.input, &response.inputs[k]);
        }
        cost = cost + crate::linalg::dot(&instance.cost.terminal, &response.states[n]);
        cert.max_cost_gap = cert.max_cost_gap.max(cost - solution.tau);
    });
    // Also confirm that each chosen (Y, y_off) is admissible.
    for (y_mat, y_off) in &solution.uncertainty {
        let mut p = y_mat.vec_col();
        p.extend_from_slice(y_off);
        cert.max_violation = cert.max_violation.max(unc.admissible_set.violation(&p));
    }
    Ok(cert)
}
