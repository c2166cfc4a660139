//! Dense linear programming.
//!
//! The reference backend is a two-phase tableau simplex. Entering columns are
//! chosen by the most-negative reduced cost; after a run of degenerate pivots
//! the rule switches to Bland's, which cannot cycle. Both rules break ties by
//! lowest index, so identical inputs always produce identical outputs.
//!
//! Free variables are handled internally by shift-and-split: bounded-below
//! variables are shifted to zero, bounded-above are negated, doubly bounded
//! get an extra row, and fully free variables are split into a difference of
//! nonnegatives.

use thiserror::Error;

use crate::linalg::{dot, Mat};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RowSense {
    Le,
    Eq,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Minimize,
    Maximize,
}

/// Per-variable bounds; `None` means unbounded on that side.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VarBound<T> {
    pub lower: Option<T>,
    pub upper: Option<T>,
}

impl<T> VarBound<T> {
    pub fn free() -> Self {
        VarBound { lower: None, upper: None }
    }

    pub fn at_least(lower: T) -> Self {
        VarBound { lower: Some(lower), upper: None }
    }

    pub fn range(lower: T, upper: T) -> Self {
        VarBound { lower: Some(lower), upper: Some(upper) }
    }
}

#[derive(Clone, Debug)]
pub struct LinearProgram<T: Scalar> {
    pub objective: Vec<T>,
    pub constraint_matrix: Mat<T>,
    pub rhs: Vec<T>,
    pub senses: Vec<RowSense>,
    pub bounds: Vec<VarBound<T>>,
    pub direction: Direction,
}

impl<T: Scalar> LinearProgram<T> {
    /// Minimization over free variables with all-`Le` rows.
    pub fn minimize_free(objective: Vec<T>, constraint_matrix: Mat<T>, rhs: Vec<T>) -> Self {
        let n = objective.len();
        let m = rhs.len();
        LinearProgram {
            objective,
            constraint_matrix,
            rhs,
            senses: vec![RowSense::Le; m],
            bounds: vec![VarBound::free(); n],
            direction: Direction::Minimize,
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rhs.len()
    }

    fn validate(&self) -> Result<(), LpError> {
        let n = self.num_vars();
        let m = self.num_rows();
        if self.constraint_matrix.rows() != m || self.constraint_matrix.cols() != n {
            return Err(LpError::InvalidProblem(format!(
                "constraint matrix is {}x{}, expected {}x{}",
                self.constraint_matrix.rows(),
                self.constraint_matrix.cols(),
                m,
                n
            )));
        }
        if self.senses.len() != m || self.bounds.len() != n {
            return Err(LpError::InvalidProblem("senses/bounds length mismatch".into()));
        }
        let finite = self.constraint_matrix.is_finite()
            && self.objective.iter().all(|x| x.is_finite())
            && self.rhs.iter().all(|x| x.is_finite())
            && self.bounds.iter().all(|b| {
                b.lower.map_or(true, |x| x.is_finite()) && b.upper.map_or(true, |x| x.is_finite())
            });
        if !finite {
            return Err(LpError::InvalidProblem("non-finite entry in problem data".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum LpSolution<T> {
    Optimal { primal: Vec<T>, objective_value: T },
    Infeasible,
    Unbounded,
}

impl<T: Copy> LpSolution<T> {
    pub fn optimal(&self) -> Option<(&[T], T)> {
        match self {
            LpSolution::Optimal { primal, objective_value } => Some((primal, *objective_value)),
            _ => None,
        }
    }

    pub fn is_optimal(&self) -> bool {
        matches!(self, LpSolution::Optimal { .. })
    }
}

#[derive(Clone, Debug, Error, PartialEq)]
pub enum LpError {
    #[error("invalid linear program: {0}")]
    InvalidProblem(String),
    #[error("simplex made no progress within {iterations} iterations; consider rescaling")]
    NumericalFailure { iterations: usize },
}

/// Solver contract. Alternative backends implement this; everything else in
/// the crate goes through [`solve_lp`], which delegates to the default
/// backend.
pub trait LpSolver<T: Scalar> {
    fn solve(&self, lp: &LinearProgram<T>) -> Result<LpSolution<T>, LpError>;
}

/// Two-phase dense tableau simplex.
#[derive(Clone, Copy, Debug, Default)]
pub struct DenseSimplex {
    /// Overrides the automatic iteration cap when set.
    pub max_iterations: Option<usize>,
}

impl<T: Scalar> LpSolver<T> for DenseSimplex {
    fn solve(&self, lp: &LinearProgram<T>) -> Result<LpSolution<T>, LpError> {
        lp.validate()?;
        solve_impl(lp, self.max_iterations)
    }
}

/// Solve with the default backend.
pub fn solve_lp<T: Scalar>(lp: &LinearProgram<T>) -> Result<LpSolution<T>, LpError> {
    DenseSimplex::default().solve(lp)
}

/// Find any point satisfying `constraint_matrix · x <= rhs`, or certify that
/// none exists. This is the phase-1 subroutine exposed on its own; geometry
/// uses it for emptiness checks.
pub fn feasible_point<T: Scalar>(
    constraint_matrix: &Mat<T>,
    rhs: &[T],
) -> Result<Option<Vec<T>>, LpError> {
    let lp = LinearProgram::minimize_free(
        vec![T::zero(); constraint_matrix.cols()],
        constraint_matrix.clone(),
        rhs.to_vec(),
    );
    match solve_lp(&lp)? {
        LpSolution::Optimal { primal, .. } => Ok(Some(primal)),
        LpSolution::Infeasible => Ok(None),
        LpSolution::Unbounded => unreachable!("zero objective cannot be unbounded"),
    }
}

/// Outcome of maximizing a linear functional over `{x : Ax <= b}`.
#[derive(Clone, Debug, PartialEq)]
pub enum Support<T> {
    Value(T),
    Unbounded,
    /// A Farkas certificate of primal emptiness was found.
    Empty,
}

/// Maximum of `direction · x` over `{x : constraint_matrix x <= rhs}`,
/// computed on the dual so that the simplex basis stays as small as the
/// ambient dimension. This is the hot path behind containment and redundancy
/// tests, which solve one such problem per polytope row.
///
/// A finite dual optimum is returned directly. The rarer unbounded and
/// infeasible dual verdicts are sensitive to near-dependent rows, so they
/// are confirmed by solving the primal before being reported.
pub fn support_value<T: Scalar>(
    constraint_matrix: &Mat<T>,
    rhs: &[T],
    direction: &[T],
) -> Result<Support<T>, LpError> {
    let m = constraint_matrix.rows();
    let n = constraint_matrix.cols();
    debug_assert_eq!(direction.len(), n);
    // Dual: min rhs'y  s.t.  A' y = direction, y >= 0.
    let lp = LinearProgram {
        objective: rhs.to_vec(),
        constraint_matrix: constraint_matrix.transpose(),
        rhs: direction.to_vec(),
        senses: vec![RowSense::Eq; n],
        bounds: vec![VarBound::at_least(T::zero()); m],
        direction: Direction::Minimize,
    };
    match solve_lp(&lp) {
        Ok(LpSolution::Optimal { objective_value, .. }) => Ok(Support::Value(objective_value)),
        Ok(LpSolution::Infeasible) | Ok(LpSolution::Unbounded) | Err(_) => {
            support_value_primal(constraint_matrix, rhs, direction)
        }
    }
}

fn support_value_primal<T: Scalar>(
    constraint_matrix: &Mat<T>,
    rhs: &[T],
    direction: &[T],
) -> Result<Support<T>, LpError> {
    let lp = LinearProgram {
        objective: direction.to_vec(),
        constraint_matrix: constraint_matrix.clone(),
        rhs: rhs.to_vec(),
        senses: vec![RowSense::Le; rhs.len()],
        bounds: vec![VarBound::free(); direction.len()],
        direction: Direction::Maximize,
    };
    Ok(match solve_lp(&lp)? {
        LpSolution::Optimal { objective_value, .. } => Support::Value(objective_value),
        LpSolution::Unbounded => Support::Unbounded,
        LpSolution::Infeasible => Support::Empty,
    })
}

// How an original variable maps onto standard-form columns.
#[derive(Clone, Copy, Debug)]
enum VarMap<T> {
    Shifted { col: usize, lower: T },
    Negated { col: usize, upper: T },
    Split { pos: usize, neg: usize },
}

fn solve_impl<T: Scalar>(
    lp: &LinearProgram<T>,
    max_iterations: Option<usize>,
) -> Result<LpSolution<T>, LpError> {
    let n = lp.num_vars();
    let m_orig = lp.num_rows();

    let sign = match lp.direction {
        Direction::Minimize => T::one(),
        Direction::Maximize => -T::one(),
    };

    // Assign standard-form columns.
    let mut maps: Vec<VarMap<T>> = Vec::with_capacity(n);
    let mut n_std = 0usize;
    let mut bound_rows: Vec<(usize, T)> = Vec::new(); // (std col, upper bound)
    for (j, b) in lp.bounds.iter().enumerate() {
        match (b.lower, b.upper) {
            (Some(l), Some(u)) => {
                if u < l - T::feas_tol() {
                    return Ok(LpSolution::Infeasible);
                }
                maps.push(VarMap::Shifted { col: n_std, lower: l });
                bound_rows.push((n_std, u - l));
                n_std += 1;
            }
            (Some(l), None) => {
                maps.push(VarMap::Shifted { col: n_std, lower: l });
                n_std += 1;
            }
            (None, Some(u)) => {
                maps.push(VarMap::Negated { col: n_std, upper: u });
                n_std += 1;
            }
            (None, None) => {
                maps.push(VarMap::Split { pos: n_std, neg: n_std + 1 });
                n_std += 2;
            }
        }
        let _ = j;
    }

    // Standardized rows: coefficients over std columns, rhs, sense.
    let m = m_orig + bound_rows.len();
    let mut std_rows: Vec<Vec<T>> = vec![vec![T::zero(); n_std]; m];
    let mut std_rhs: Vec<T> = vec![T::zero(); m];
    let mut std_sense: Vec<RowSense> = vec![RowSense::Le; m];
    for i in 0..m_orig {
        let row = lp.constraint_matrix.row(i);
        let mut rhs = lp.rhs[i];
        let out = &mut std_rows[i];
        for (j, &a) in row.iter().enumerate() {
            if a == T::zero() {
                continue;
            }
            match maps[j] {
                VarMap::Shifted { col, lower } => {
                    out[col] = out[col] + a;
                    rhs = rhs - a * lower;
                }
                VarMap::Negated { col, upper } => {
                    out[col] = out[col] - a;
                    rhs = rhs - a * upper;
                }
                VarMap::Split { pos, neg } => {
                    out[pos] = out[pos] + a;
                    out[neg] = out[neg] - a;
                }
            }
        }
        std_rhs[i] = rhs;
        std_sense[i] = lp.senses[i];
    }
    for (k, &(col, ub)) in bound_rows.iter().enumerate() {
        std_rows[m_orig + k][col] = T::one();
        std_rhs[m_orig + k] = ub;
        std_sense[m_orig + k] = RowSense::Le;
    }

    // Phase-2 costs over std columns.
    let mut std_cost = vec![T::zero(); n_std];
    for (j, &c) in lp.objective.iter().enumerate() {
        let c = c * sign;
        if c == T::zero() {
            continue;
        }
        match maps[j] {
            VarMap::Shifted { col, .. } => std_cost[col] = std_cost[col] + c,
            VarMap::Negated { col, .. } => std_cost[col] = std_cost[col] - c,
            VarMap::Split { pos, neg } => {
                std_cost[pos] = std_cost[pos] + c;
                std_cost[neg] = std_cost[neg] - c;
            }
        }
    }

    let mut tab = Tableau::build(std_rows, std_rhs, std_sense, max_iterations);
    if !tab.phase_one()? {
        return Ok(LpSolution::Infeasible);
    }
    match tab.phase_two(&std_cost)? {
        Phase2::Unbounded => return Ok(LpSolution::Unbounded),
        Phase2::Optimal => {}
    }

    // Map the basic solution back to original variables and check it against
    // the rows. Long degenerate pivot runs leave elimination drift in the
    // working tableau; when the drift shows up as residual error, recompute
    // the tableau from pristine data at the final basis, resume pivoting if
    // fresh pricing still finds an improving column, and try again.
    for attempt in 0..4 {
        let x_std = tab.extract(n_std);
        let mut primal = vec![T::zero(); n];
        for (j, map) in maps.iter().enumerate() {
            primal[j] = match *map {
                VarMap::Shifted { col, lower } => lower + x_std[col],
                VarMap::Negated { col, upper } => upper - x_std[col],
                VarMap::Split { pos, neg } => x_std[pos] - x_std[neg],
            };
        }
        let mut worst = T::zero();
        for i in 0..m_orig {
            let lhs = dot(lp.constraint_matrix.row(i), &primal);
            let viol = match lp.senses[i] {
                RowSense::Le => lhs - lp.rhs[i],
                RowSense::Eq => (lhs - lp.rhs[i]).abs(),
            };
            let scale = T::one() + lp.rhs[i].abs();
            worst = worst.max(viol / scale);
        }
        if worst <= T::feas_tol() {
            let objective_value = dot(&lp.objective, &primal);
            return Ok(LpSolution::Optimal { primal, objective_value });
        }
        eprintln!("[lp-debug] attempt {attempt}: worst residual {worst:?}");
        if attempt == 3 {
            eprintln!("[lp-debug] attempts exhausted");
            break;
        }
        if !tab.refresh() {
            eprintln!("[lp-debug] refresh failed (singular basis or infeasible rhs)");
            break;
        }
        if tab.entering_column().is_some() {
            match tab.run()? {
                Phase2::Unbounded => return Ok(LpSolution::Unbounded),
                Phase2::Optimal => {}
            }
        }
    }
    Err(LpError::NumericalFailure { iterations: tab.iterations })
}

enum Phase2 {
    Optimal,
    Unbounded,
}

struct Tableau<T> {
    m: usize,
    width: usize, // columns including rhs
    n_total: usize,
    art_start: usize,
    rows: Vec<T>, // m x width, row-major
    obj: Vec<T>,  // reduced-cost row, length width
    basis: Vec<usize>,
    locked: Vec<bool>,
    iterations: usize,
    cap: usize,
    bland: bool,
    stall: usize,
    in_phase_one: bool,
    noise_locked: bool,
    // Pristine copy of the initial tableau so the working copy can be
    // recomputed at the current basis when rounding drift accumulates.
    pristine: Vec<T>,
    current_costs: Vec<T>,
    refreshes_left: usize,
}

impl<T: Scalar> Tableau<T> {
    fn build(
        std_rows: Vec<Vec<T>>,
        std_rhs: Vec<T>,
        std_sense: Vec<RowSense>,
        max_iterations: Option<usize>,
    ) -> Self {
        let m = std_rhs.len();
        let n_std = std_rows.first().map_or(0, |r| r.len());
        let n_slack = std_sense.iter().filter(|s| **s == RowSense::Le).count();
        // Artificials are assigned lazily below; reserve the worst case.
        let art_start = n_std + n_slack;
        let n_total_max = art_start + m;
        let width = n_total_max + 1;

        let mut rows = vec![T::zero(); m * width];
        let mut basis = vec![usize::MAX; m];
        let mut slack_idx = 0usize;
        let mut n_art = 0usize;
        for i in 0..m {
            let negate = std_rhs[i] < T::zero();
            let flip = if negate { -T::one() } else { T::one() };
            let row = &mut rows[i * width..(i + 1) * width];
            for (j, &a) in std_rows[i].iter().enumerate() {
                row[j] = a * flip;
            }
            row[n_total_max] = std_rhs[i] * flip;
            if std_sense[i] == RowSense::Le {
                let col = n_std + slack_idx;
                slack_idx += 1;
                row[col] = flip;
                if !negate {
                    basis[i] = col;
                }
            }
            if basis[i] == usize::MAX {
                let col = art_start + n_art;
                n_art += 1;
                row[col] = T::one();
                basis[i] = col;
            }
        }
        let n_total = art_start + n_art;

        let cap = max_iterations.unwrap_or(2000 + 60 * (m + n_total));
        let pristine = rows.clone();
        Tableau {
            m,
            width,
            n_total,
            art_start,
            rows,
            obj: vec![T::zero(); width],
            basis,
            locked: vec![false; n_total],
            iterations: 0,
            cap,
            bland: false,
            stall: 0,
            in_phase_one: false,
            noise_locked: false,
            pristine,
            current_costs: Vec::new(),
            refreshes_left: 2,
        }
    }

    #[inline]
    fn row(&self, i: usize) -> &[T] {
        &self.rows[i * self.width..(i + 1) * self.width]
    }

    fn rhs(&self, i: usize) -> T {
        self.rows[i * self.width + self.width - 1]
    }

    /// Install `costs` (indexed by column; missing columns cost zero) as the
    /// objective row and price out the current basis.
    fn set_objective(&mut self, costs: &[T]) {
        self.current_costs = costs.to_vec();
        self.obj.iter_mut().for_each(|v| *v = T::zero());
        self.obj[..costs.len()].copy_from_slice(costs);
        for i in 0..self.m {
            let c = if self.basis[i] < costs.len() { costs[self.basis[i]] } else { T::zero() };
            if c != T::zero() {
                let row = self.row(i).to_vec();
                for (o, r) in self.obj.iter_mut().zip(&row) {
                    *o = *o - c * *r;
                }
            }
        }
    }

    /// Recompute the working tableau from the pristine data at the current
    /// basis, clearing accumulated elimination error. Returns false when the
    /// basis matrix cannot be factored or the refreshed right-hand side shows
    /// the basis was not primal feasible after all.
    fn refresh(&mut self) -> bool {
        let m = self.m;
        let basis_mat = Mat::from_fn(m, m, |i, j| self.pristine[i * self.width + self.basis[j]]);
        let Some(lu) = crate::linalg::lu_factor(&basis_mat, T::pivot_tol()) else {
            return false;
        };
        // New tableau column c solves B x = pristine column c. The basic
        // solution values land in the rhs column.
        let mut fresh = vec![T::zero(); self.rows.len()];
        let mut col_buf = vec![T::zero(); m];
        for c in 0..self.width {
            for i in 0..m {
                col_buf[i] = self.pristine[i * self.width + c];
            }
            let x = lu.solve(&col_buf);
            for i in 0..m {
                fresh[i * self.width + c] = x[i];
            }
        }
        for i in 0..m {
            let rhs = fresh[i * self.width + self.width - 1];
            if rhs < -T::feas_tol() {
                return false;
            }
            if rhs < T::zero() {
                fresh[i * self.width + self.width - 1] = T::zero();
            }
        }
        self.rows = fresh;
        let costs = self.current_costs.clone();
        self.set_objective(&costs);
        for flag in self.locked.iter_mut() {
            *flag = false;
        }
        if !self.in_phase_one {
            for j in self.art_start..self.n_total {
                self.locked[j] = true;
            }
        }
        true
    }

    fn objective_value(&self) -> T {
        -self.obj[self.width - 1]
    }

    fn phase_one(&mut self) -> Result<bool, LpError> {
        if self.n_total > self.art_start {
            let mut costs = vec![T::zero(); self.n_total];
            for c in costs[self.art_start..].iter_mut() {
                *c = T::one();
            }
            self.in_phase_one = true;
            self.set_objective(&costs);
            match self.run()? {
                Phase2::Optimal => {}
                Phase2::Unbounded => unreachable!("phase one locks empty columns"),
            }
            self.in_phase_one = false;
            if self.objective_value() > T::feas_tol() {
                // An infeasibility verdict is only trustworthy when no
                // column had to be discarded as numerical noise.
                if self.noise_locked {
                    return Err(LpError::NumericalFailure { iterations: self.iterations });
                }
                return Ok(false);
            }
            self.drive_out_artificials();
        }
        for j in self.art_start..self.n_total {
            self.locked[j] = true;
        }
        Ok(true)
    }

    fn drive_out_artificials(&mut self) {
        for i in 0..self.m {
            if self.basis[i] < self.art_start {
                continue;
            }
            // A solid pivot element is required here: dividing the row by a
            // near-zero entry would blow up the whole tableau.
            let pivot_col = (0..self.art_start)
                .filter(|&j| self.rows[i * self.width + j].abs() > T::feas_tol())
                .max_by(|&a, &b| {
                    self.rows[i * self.width + a]
                        .abs()
                        .partial_cmp(&self.rows[i * self.width + b].abs())
                        .unwrap()
                });
            if let Some(j) = pivot_col {
                self.pivot(i, j);
            }
            // Otherwise the row is redundant: every structural coefficient is
            // zero, so the artificial stays basic at value zero and is inert.
        }
    }

    fn phase_two(&mut self, std_cost: &[T]) -> Result<Phase2, LpError> {
        // Noise locks from phase one are basis-dependent; start fresh.
        for j in 0..self.art_start {
            self.locked[j] = false;
        }
        self.set_objective(std_cost);
        self.bland = false;
        self.stall = 0;
        self.run()
    }

    fn run(&mut self) -> Result<Phase2, LpError> {
        // The lexicographic ratio test already rules out cycling; Bland's
        // rule stays as a backstop against tolerance artifacts in the
        // lexicographic comparisons.
        let stall_limit = 4 * (self.m + 64);
        loop {
            let Some(enter) = self.entering_column() else {
                return Ok(Phase2::Optimal);
            };
            let Some(leave) = self.ratio_test(enter) else {
                // No positive pivot entry. In phase one the objective is
                // bounded below by zero, so this verdict can only be rounding
                // drift; the same holds in phase two when the reduced cost is
                // at noise level. Recompute the tableau from pristine data
                // first; if that is exhausted, drop the column and note that
                // later verdicts are degraded.
                if self.in_phase_one || self.obj[enter] > -T::feas_tol() {
                    if self.refreshes_left > 0 {
                        self.refreshes_left -= 1;
                        if self.refresh() {
                            continue;
                        }
                    }
                    self.locked[enter] = true;
                    self.noise_locked = true;
                    continue;
                }
                return Ok(Phase2::Unbounded);
            };
            let before = self.objective_value();
            self.pivot(leave, enter);
            self.iterations += 1;
            if self.iterations > self.cap {
                return Err(LpError::NumericalFailure { iterations: self.iterations });
            }
            if !self.bland {
                let improved = before - self.objective_value()
                    > T::pivot_tol() * (T::one() + before.abs());
                self.stall = if improved { 0 } else { self.stall + 1 };
                if self.stall > stall_limit {
                    self.bland = true;
                }
            }
        }
    }

    fn entering_column(&self) -> Option<usize> {
        let neg = -T::pivot_tol();
        if self.bland {
            (0..self.n_total).find(|&j| !self.locked[j] && self.obj[j] < neg)
        } else {
            let mut best: Option<(usize, T)> = None;
            for j in 0..self.n_total {
                if self.locked[j] {
                    continue;
                }
                let c = self.obj[j];
                if c < neg && best.map_or(true, |(_, b)| c < b) {
                    best = Some((j, c));
                }
            }
            best.map(|(j, _)| j)
        }
    }

    /// Two-pass ratio test: the first pass bounds the step with the
    /// feasibility slack, the second picks the largest pivot element among
    /// rows whose true ratio fits the bound. Degenerate problems would
    /// otherwise force pivots on near-zero elements, which is what corrupts
    /// a dense tableau. Under Bland's rule the leaving row is instead the
    /// minimum-ratio row of smallest basis index, as the anti-cycling
    /// argument requires.
    fn ratio_test(&self, enter: usize) -> Option<usize> {
        if self.bland {
            let mut best: Option<(usize, T)> = None;
            for i in 0..self.m {
                let a = self.rows[i * self.width + enter];
                if a <= T::pivot_tol() {
                    continue;
                }
                let ratio = self.rhs(i) / a;
                let better = match best {
                    None => true,
                    Some((bi, br)) => {
                        ratio < br || (ratio == br && self.basis[i] < self.basis[bi])
                    }
                };
                if better {
                    best = Some((i, ratio));
                }
            }
            return best.map(|(i, _)| i);
        }
        let mut theta = T::infinity();
        for i in 0..self.m {
            let a = self.rows[i * self.width + enter];
            if a <= T::pivot_tol() {
                continue;
            }
            theta = theta.min((self.rhs(i) + T::feas_tol()) / a);
        }
        if !theta.is_finite() {
            return None;
        }
        let mut best: Option<(usize, T)> = None;
        for i in 0..self.m {
            let a = self.rows[i * self.width + enter];
            if a <= T::pivot_tol() {
                continue;
            }
            if self.rhs(i) / a <= theta && best.map_or(true, |(_, ba)| a > ba) {
                best = Some((i, a));
            }
        }
        best.map(|(i, _)| i)
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let width = self.width;
        let pivot = self.rows[r * width + c];
        let inv = T::one() / pivot;
        {
            let row = &mut self.rows[r * width..(r + 1) * width];
            for v in row.iter_mut() {
                *v = *v * inv;
            }
            row[c] = T::one();
        }
        let pivot_row = self.rows[r * width..(r + 1) * width].to_vec();
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let factor = self.rows[i * width + c];
            if factor == T::zero() {
                continue;
            }
            let row = &mut self.rows[i * width..(i + 1) * width];
            for (v, p) in row.iter_mut().zip(&pivot_row) {
                *v = *v - factor * *p;
            }
            row[c] = T::zero();
        }
        let factor = self.obj[c];
        if factor != T::zero() {
            for (v, p) in self.obj.iter_mut().zip(&pivot_row) {
                *v = *v - factor * *p;
            }
            self.obj[c] = T::zero();
        }
        self.basis[r] = c;
    }

    fn extract(&self, n_std: usize) -> Vec<T> {
        let mut x = vec![T::zero(); n_std];
        for i in 0..self.m {
            if self.basis[i] < n_std {
                x[self.basis[i]] = self.rhs(i);
            }
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat(rows: &[Vec<f64>]) -> Mat<f64> {
        Mat::from_rows(rows).unwrap()
    }

    #[test]
    fn single_variable_bounds() {
        // min x  s.t. x >= 3, x <= 10
        let lp = LinearProgram {
            objective: vec![1.0],
            constraint_matrix: mat(&[vec![-1.0], vec![1.0]]),
            rhs: vec![-3.0, 10.0],
            senses: vec![RowSense::Le, RowSense::Le],
            bounds: vec![VarBound::free()],
            direction: Direction::Minimize,
        };
        let sol = solve_lp(&lp).unwrap();
        let (x, v) = sol.optimal().unwrap();
        assert!((x[0] - 3.0).abs() < 1e-9);
        assert!((v - 3.0).abs() < 1e-9);
    }

    #[test]
    fn contradictory_bounds_are_infeasible() {
        // min 0  s.t. x <= 1, x >= 2
        let lp = LinearProgram::minimize_free(
            vec![0.0],
            mat(&[vec![1.0], vec![-1.0]]),
            vec![1.0, -2.0],
        );
        assert_eq!(solve_lp(&lp).unwrap(), LpSolution::Infeasible);
    }

    #[test]
    fn polygon_maximum_matches_vertex_enumeration() {
        // max x + y  s.t. x + 2y <= 4, x <= 2, x >= 0, y >= 0.
        // Oracle: evaluate the objective at the four vertices of the feasible
        // polygon and take the largest.
        let vertices = [(0.0, 0.0), (2.0, 0.0), (2.0, 1.0), (0.0, 2.0)];
        let expect = vertices.iter().map(|(x, y)| x + y).fold(f64::MIN, f64::max);
        let lp = LinearProgram {
            objective: vec![1.0, 1.0],
            constraint_matrix: mat(&[vec![1.0, 2.0], vec![1.0, 0.0]]),
            rhs: vec![4.0, 2.0],
            senses: vec![RowSense::Le; 2],
            bounds: vec![VarBound::at_least(0.0); 2],
            direction: Direction::Maximize,
        };
        let sol = solve_lp(&lp).unwrap();
        let (x, v) = sol.optimal().unwrap();
        assert!((v - expect).abs() < 1e-9);
        assert!((x[0] - 2.0).abs() < 1e-9 && (x[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn unbounded_detection() {
        // max x with no constraints that cap it.
        let lp = LinearProgram {
            objective: vec![1.0],
            constraint_matrix: mat(&[vec![-1.0]]),
            rhs: vec![0.0],
            senses: vec![RowSense::Le],
            bounds: vec![VarBound::free()],
            direction: Direction::Maximize,
        };
        assert_eq!(solve_lp(&lp).unwrap(), LpSolution::Unbounded);
    }

    #[test]
    fn equality_rows() {
        // min x + y  s.t. x + y = 2, x - y = 0  => x = y = 1.
        let lp = LinearProgram {
            objective: vec![1.0, 1.0],
            constraint_matrix: mat(&[vec![1.0, 1.0], vec![1.0, -1.0]]),
            rhs: vec![2.0, 0.0],
            senses: vec![RowSense::Eq; 2],
            bounds: vec![VarBound::free(); 2],
            direction: Direction::Minimize,
        };
        let sol = solve_lp(&lp).unwrap();
        let (x, v) = sol.optimal().unwrap();
        assert!((x[0] - 1.0).abs() < 1e-9 && (x[1] - 1.0).abs() < 1e-9);
        assert!((v - 2.0).abs() < 1e-9);
    }

    #[test]
    fn feasible_point_examples() {
        // {x <= 1, -x <= 0}: any point of [0, 1].
        let p = feasible_point(&mat(&[vec![1.0], vec![-1.0]]), &[1.0, 0.0]).unwrap().unwrap();
        assert!(p[0] >= -1e-9 && p[0] <= 1.0 + 1e-9);
        // {x <= -1, -x <= 0}: empty.
        let q = feasible_point(&mat(&[vec![1.0], vec![-1.0]]), &[-1.0, 0.0]).unwrap();
        assert!(q.is_none());
    }

    #[test]
    fn feasible_point_random_system_verified_by_substitution() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        for _ in 0..20 {
            // Rows through the origin keep it feasible by construction.
            let rows: Vec<Vec<f64>> = (0..5)
                .map(|_| vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)])
                .collect();
            let rhs: Vec<f64> = (0..5).map(|_| rng.random_range(0.1..2.0)).collect();
            let a = mat(&rows);
            let p = feasible_point(&a, &rhs).unwrap().expect("origin is feasible");
            for i in 0..5 {
                assert!(dot(a.row(i), &p) <= rhs[i] + 1e-7);
            }
        }
    }

    #[test]
    fn weak_duality_spot_check() {
        // min 3x + 2y s.t. x + y >= 2, x >= 0, y >= 0.
        // Dual feasible point mu = 2 gives the lower bound mu * 2 = 4.
        let lp = LinearProgram {
            objective: vec![3.0, 2.0],
            constraint_matrix: mat(&[vec![-1.0, -1.0]]),
            rhs: vec![-2.0],
            senses: vec![RowSense::Le],
            bounds: vec![VarBound::at_least(0.0); 2],
            direction: Direction::Minimize,
        };
        let (_, v) = solve_lp(&lp).unwrap().optimal().unwrap();
        assert!(v >= 4.0 - 1e-9);
    }

    #[test]
    fn determinism() {
        let lp = LinearProgram {
            objective: vec![1.0, -2.0, 0.5],
            constraint_matrix: mat(&[
                vec![1.0, 1.0, 1.0],
                vec![-1.0, 2.0, 0.0],
                vec![0.0, -1.0, 4.0],
            ]),
            rhs: vec![5.0, 3.0, 2.0],
            senses: vec![RowSense::Le; 3],
            bounds: vec![VarBound::range(-10.0, 10.0); 3],
            direction: Direction::Minimize,
        };
        let a = solve_lp(&lp).unwrap();
        let b = solve_lp(&lp).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn support_value_on_box() {
        // [-1, 1]^2, direction (1, 1): support is 2.
        let a = mat(&[vec![1.0, 0.0], vec![-1.0, 0.0], vec![0.0, 1.0], vec![0.0, -1.0]]);
        let b = vec![1.0; 4];
        match support_value(&a, &b, &[1.0, 1.0]).unwrap() {
            Support::Value(v) => assert!((v - 2.0).abs() < 1e-9),
            other => panic!("expected value, got {other:?}"),
        }
        // Unbounded direction on a half-space.
        let a2 = mat(&[vec![1.0, 0.0]]);
        match support_value(&a2, &[1.0], &[0.0, 1.0]).unwrap() {
            Support::Unbounded => {}
            other => panic!("expected unbounded, got {other:?}"),
        }
        // Empty set certificate.
        let a3 = mat(&[vec![1.0], vec![-1.0]]);
        match support_value(&a3, &[-1.0, 0.0], &[1.0]).unwrap() {
            Support::Empty => {}
            other => panic!("expected empty, got {other:?}"),
        }
    }

    #[test]
    fn non_finite_input_rejected() {
        let lp = LinearProgram::minimize_free(vec![f64::NAN], mat(&[vec![1.0]]), vec![1.0]);
        assert!(matches!(solve_lp(&lp), Err(LpError::InvalidProblem(_))));
    }
}
