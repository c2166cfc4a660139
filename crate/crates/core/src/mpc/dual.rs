//! Dualization of the robust constraints into one finite-dimensional LP.
//!
//! Each robust row `max_{s in S^N} a(decision) . s <= b(decision)` is
//! replaced by nonnegative multipliers against the stacked primitive rows:
//! `m . g_stack <= b` and `m . G_stack = a`. Applied to the worst-case cost
//! (multiplier `mu`), the path constraints (one multiplier row of `Lambda`
//! per constraint), and the terminal rows (`Gamma`), this yields the single
//! LP solved at every controller step. The decision blocks are
//! `(tau, P, p, Y, y_off, mu, Lambda, Gamma)`.

use crate::geometry::HPolytope;
use crate::linalg::Mat;
use crate::lp::{solve_lp, Direction, LinearProgram, LpSolution, RowSense, VarBound};
use crate::problem::CompiledProblem;
use crate::scalar::Scalar;

use super::{
    build_prediction_matrices, DerivedCost, PolicyLayout, PredictionMatrices, RhoCoefficients,
    RmpcError, RmpcSolution,
};

/// Variable index map for the dual LP: the policy block shared with the
/// oracle, followed by the multiplier blocks.
#[derive(Clone, Copy, Debug)]
pub struct VariableLayout {
    pub policy: PolicyLayout,
    /// Stacked primitive rows `N * l`.
    pub primitive_rows: usize,
    pub rows_path: usize,
    pub n_t: usize,
    pub mu_start: usize,
    pub lambda_start: usize,
    pub gamma_start: usize,
    pub total: usize,
}

impl VariableLayout {
    fn new(policy: PolicyLayout, primitive_rows: usize, rows_path: usize, n_t: usize) -> Self {
        let mu_start = policy.policy_total;
        let lambda_start = mu_start + primitive_rows;
        let gamma_start = lambda_start + rows_path * primitive_rows;
        let total = gamma_start + n_t * primitive_rows;
        VariableLayout { policy, primitive_rows, rows_path, n_t, mu_start, lambda_start, gamma_start, total }
    }

    pub fn mu_index(&self, col: usize) -> usize {
        self.mu_start + col
    }

    pub fn lambda_index(&self, row: usize, col: usize) -> usize {
        self.lambda_start + row * self.primitive_rows + col
    }

    pub fn gamma_index(&self, row: usize, col: usize) -> usize {
        self.gamma_start + row * self.primitive_rows + col
    }
}

/// The assembled LP plus the index map back into the decision blocks.
#[derive(Clone, Debug)]
pub struct RmpcLp<T: Scalar = f64> {
    pub lp: LinearProgram<T>,
    pub layout: VariableLayout,
}

pub fn build_dual_lp<T: Scalar>(
    pm: &PredictionMatrices<T>,
    cost: &DerivedCost<T>,
    terminal: Option<&HPolytope<T>>,
    lambda: &[T],
    rho: &RhoCoefficients<T>,
    admissible: &HPolytope<T>,
    tie_over_horizon: bool,
) -> Result<RmpcLp<T>, RmpcError<T>> {
    let (n, n_u, n_w, n_s) = (pm.horizon, pm.n_u, pm.n_w, pm.n_s);
    let param_dim = n_w * n_s + n_w;
    if lambda.len() != n {
        return Err(RmpcError::Shape("lambda length must equal the horizon".into()));
    }
    if admissible.dim() != param_dim {
        return Err(RmpcError::Shape(format!(
            "admissible set dimension {} != n_w*n_s + n_w = {param_dim}",
            admissible.dim()
        )));
    }
    if rho.y.len() != n_w * n_s || rho.y_off.len() != n_w {
        return Err(RmpcError::Shape("rho coefficient lengths".into()));
    }
    if let Some(term) = terminal {
        if term.dim() != pm.n_x + param_dim {
            return Err(RmpcError::Shape(format!(
                "terminal set dimension {} != n_x + n_w*n_s + n_w = {}",
                term.dim(),
                pm.n_x + param_dim
            )));
        }
    }
    let n_t = terminal.map_or(0, |t| t.num_rows());
    let rows_path = pm.path_rows();
    let prim_rows = pm.primitive_rows();
    let ns_cols = n * n_s;
    let policy = PolicyLayout::new(n, n_u, n_s, n_w);
    let layout = VariableLayout::new(policy, prim_rows, rows_path, n_t);

    let mut rows: Vec<Vec<T>> = Vec::new();
    let mut rhs: Vec<T> = Vec::new();
    let mut senses: Vec<RowSense> = Vec::new();
    let push = |row: Vec<T>, b: T, s: RowSense, rows: &mut Vec<Vec<T>>, rhs: &mut Vec<T>, senses: &mut Vec<RowSense>| {
        rows.push(row);
        rhs.push(b);
        senses.push(s);
    };

    // Epigraph: c_u . p + c_w . y_off + mu . g + constant <= tau.
    {
        let mut row = vec![T::zero(); layout.total];
        row[policy.tau] = -T::one();
        for k in 0..n {
            for iu in 0..n_u {
                row[policy.p_index(k, iu)] = cost.input_row[k * n_u + iu];
            }
            for iw in 0..n_w {
                row[policy.y_off_index(k, iw)] = cost.dist_row[k * n_w + iw];
            }
        }
        for col in 0..prim_rows {
            row[layout.mu_index(col)] = pm.g_rhs[col];
        }
        push(row, -cost.constant, RowSense::Le, &mut rows, &mut rhs, &mut senses);
    }

    // mu' G_stack = c_u' P + c_w' Y, one equality per stacked primitive
    // column.
    for a in 0..ns_cols {
        let (m, ms) = (a / n_s, a % n_s);
        let mut row = vec![T::zero(); layout.total];
        for i in 0..prim_rows {
            let g = pm.g_stack[(i, a)];
            if g != T::zero() {
                row[layout.mu_index(i)] = g;
            }
        }
        for k in (m + 1)..n {
            for iu in 0..n_u {
                row[policy.p_gain_index(k, m, iu, ms)] =
                    row[policy.p_gain_index(k, m, iu, ms)] - cost.input_row[k * n_u + iu];
            }
        }
        for iw in 0..n_w {
            row[policy.y_index(m, iw, ms)] =
                row[policy.y_index(m, iw, ms)] - cost.dist_row[m * n_w + iw];
        }
        push(row, T::zero(), RowSense::Eq, &mut rows, &mut rhs, &mut senses);
    }

    // Robust path: C p + D y_off + Lambda g <= d.
    for i in 0..rows_path {
        let mut row = vec![T::zero(); layout.total];
        for k in 0..n {
            for iu in 0..n_u {
                row[policy.p_index(k, iu)] = pm.path_input[(i, k * n_u + iu)];
            }
            for iw in 0..n_w {
                row[policy.y_off_index(k, iw)] = pm.path_dist[(i, k * n_w + iw)];
            }
        }
        for col in 0..prim_rows {
            row[layout.lambda_index(i, col)] = pm.g_rhs[col];
        }
        push(row, pm.path_rhs[i], RowSense::Le, &mut rows, &mut rhs, &mut senses);
    }

    // Lambda G_stack = C P + D Y, entrywise.
    for i in 0..rows_path {
        for a in 0..ns_cols {
            let (m, ms) = (a / n_s, a % n_s);
            let mut row = vec![T::zero(); layout.total];
            for col in 0..prim_rows {
                let g = pm.g_stack[(col, a)];
                if g != T::zero() {
                    row[layout.lambda_index(i, col)] = g;
                }
            }
            for k in (m + 1)..n {
                for iu in 0..n_u {
                    row[policy.p_gain_index(k, m, iu, ms)] =
                        row[policy.p_gain_index(k, m, iu, ms)] - pm.path_input[(i, k * n_u + iu)];
                }
            }
            for iw in 0..n_w {
                row[policy.y_index(m, iw, ms)] =
                    row[policy.y_index(m, iw, ms)] - pm.path_dist[(i, m * n_w + iw)];
            }
            push(row, T::zero(), RowSense::Eq, &mut rows, &mut rhs, &mut senses);
        }
    }

    // Terminal rows couple the predicted final state with the last
    // uncertainty parameters.
    if let Some(term) = terminal {
        let fx = term.matrix().block(0..n_t, 0..pm.n_x);
        let fm = fx.mul(&pm.terminal_input);
        let fn_ = fx.mul(&pm.terminal_dist);
        let free = fx.mul_vec(&pm.terminal_free);
        for t in 0..n_t {
            let mut row = vec![T::zero(); layout.total];
            for k in 0..n {
                for iu in 0..n_u {
                    row[policy.p_index(k, iu)] = fm[(t, k * n_u + iu)];
                }
                for iw in 0..n_w {
                    row[policy.y_off_index(k, iw)] = fn_[(t, k * n_w + iw)];
                }
            }
            for c in 0..(n_w * n_s) {
                let idx = policy.y_start + (n - 1) * n_w * n_s + c;
                row[idx] = row[idx] + term.matrix()[(t, pm.n_x + c)];
            }
            for iw in 0..n_w {
                let idx = policy.y_off_index(n - 1, iw);
                row[idx] = row[idx] + term.matrix()[(t, pm.n_x + n_w * n_s + iw)];
            }
            for col in 0..prim_rows {
                row[layout.gamma_index(t, col)] = pm.g_rhs[col];
            }
            push(row, term.offsets()[t] - free[t], RowSense::Le, &mut rows, &mut rhs, &mut senses);
        }
        // Gamma G_stack = F_x (M P + N Y).
        for t in 0..n_t {
            for a in 0..ns_cols {
                let (m, ms) = (a / n_s, a % n_s);
                let mut row = vec![T::zero(); layout.total];
                for col in 0..prim_rows {
                    let g = pm.g_stack[(col, a)];
                    if g != T::zero() {
                        row[layout.gamma_index(t, col)] = g;
                    }
                }
                for k in (m + 1)..n {
                    for iu in 0..n_u {
                        row[policy.p_gain_index(k, m, iu, ms)] =
                            row[policy.p_gain_index(k, m, iu, ms)] - fm[(t, k * n_u + iu)];
                    }
                }
                for iw in 0..n_w {
                    row[policy.y_index(m, iw, ms)] =
                        row[policy.y_index(m, iw, ms)] - fn_[(t, m * n_w + iw)];
                }
                push(row, T::zero(), RowSense::Eq, &mut rows, &mut rhs, &mut senses);
            }
        }
    }

    // Per-step admissible-set membership for (vec(Y_k), y_off_k).
    for k in 0..n {
        for r in 0..admissible.num_rows() {
            let hrow = admissible.matrix().row(r);
            let mut row = vec![T::zero(); layout.total];
            for c in 0..(n_w * n_s) {
                row[policy.y_start + k * n_w * n_s + c] = hrow[c];
            }
            for iw in 0..n_w {
                row[policy.y_off_index(k, iw)] = hrow[n_w * n_s + iw];
            }
            push(row, admissible.offsets()[r], RowSense::Le, &mut rows, &mut rhs, &mut senses);
        }
    }

    // A constant uncertainty set over the horizon: equality rows tie every
    // step to step zero.
    if tie_over_horizon {
        for k in 1..n {
            for c in 0..(n_w * n_s) {
                let mut row = vec![T::zero(); layout.total];
                row[policy.y_start + k * n_w * n_s + c] = T::one();
                row[policy.y_start + c] = -T::one();
                push(row, T::zero(), RowSense::Eq, &mut rows, &mut rhs, &mut senses);
            }
            for iw in 0..n_w {
                let mut row = vec![T::zero(); layout.total];
                row[policy.y_off_index(k, iw)] = T::one();
                row[policy.y_off_index(0, iw)] = -T::one();
                push(row, T::zero(), RowSense::Eq, &mut rows, &mut rhs, &mut senses);
            }
        }
    }

    // Objective: tau - sum_k lambda_k rho(Y_k S + y_off_k).
    let mut objective = vec![T::zero(); layout.total];
    objective[policy.tau] = T::one();
    for k in 0..n {
        for c in 0..(n_w * n_s) {
            objective[policy.y_start + k * n_w * n_s + c] = -lambda[k] * rho.y[c];
        }
        for iw in 0..n_w {
            objective[policy.y_off_index(k, iw)] = -lambda[k] * rho.y_off[iw];
        }
    }

    let mut bounds = vec![VarBound::free(); layout.total];
    for b in bounds[layout.mu_start..].iter_mut() {
        *b = VarBound::at_least(T::zero());
    }

    let constraint_matrix =
        Mat::from_rows_with_cols(&rows, layout.total).expect("rows share the width");
    Ok(RmpcLp {
        lp: LinearProgram {
            objective,
            constraint_matrix,
            rhs,
            senses,
            bounds,
            direction: Direction::Minimize,
        },
        layout,
    })
}

/// Build and solve the adjustable-uncertainty problem at the measured state.
pub fn solve_ocp<T: Scalar>(
    instance: &CompiledProblem<T>,
    x0: &[T],
    terminal: Option<&HPolytope<T>>,
) -> Result<RmpcSolution<T>, RmpcError<T>> {
    let pm = build_prediction_matrices(&instance.system, &instance.uncertainty, instance.horizon, x0)?;
    let cost = instance.cost.derive(&instance.system, instance.horizon, x0)?;
    let rl = build_dual_lp(
        &pm,
        &cost,
        terminal,
        &instance.lambda,
        &instance.rho,
        &instance.uncertainty.admissible_set,
        instance.uncertainty.tie_over_horizon,
    )?;
    match solve_lp(&rl.lp)? {
        LpSolution::Optimal { primal, objective_value } => {
            let (policy, uncertainty, tau) = rl.layout.policy.extract_solution(&primal);
            Ok(RmpcSolution { policy, uncertainty, tau, objective: objective_value })
        }
        LpSolution::Infeasible => Err(RmpcError::Infeasible),
        LpSolution::Unbounded => Err(RmpcError::Unbounded),
    }
}
