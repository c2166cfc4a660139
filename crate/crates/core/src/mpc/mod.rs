//! The adjustable-uncertainty optimal control problem: prediction matrices,
//! the dualized finite-dimensional LP, an exact vertex-enumeration reference
//! solver for small instances, and the receding-horizon closed loop.

mod closed_loop;
mod dual;
mod oracle;
mod prediction;

pub use closed_loop::{
    lambda_sweep, run_closed_loop, run_closed_loop_from, write_sweep_csv, ClosedLoopTrace,
    DisturbanceMode, SweepRow, TraceStep,
};
pub use dual::{build_dual_lp, solve_ocp, RmpcLp, VariableLayout};
pub use oracle::{solve_ocp_vertex_oracle, verify_robust_feasibility, RobustCertificate};
pub use prediction::{build_prediction_matrices, simulate_policy_response, PolicyResponse,
    PredictionMatrices};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::GeometryError;
use crate::linalg::{dot, Mat};
use crate::lp::LpError;
use crate::model::ModelError;
use crate::scalar::Scalar;

#[derive(Clone, Debug, Error)]
pub enum RmpcError<T: Scalar> {
    #[error("shape error: {0}")]
    Shape(String),
    #[error("optimal control problem is infeasible")]
    Infeasible,
    #[error("optimal control problem is unbounded; check the admissible set and weights")]
    Unbounded,
    #[error("closed loop lost feasibility at step {step}, state {state:?}")]
    InfeasibleAtStep { step: usize, state: Vec<T>, trace: Box<ClosedLoopTrace<T>> },
    #[error("scripted disturbance sequence has {got} entries, need {needed}")]
    ScriptTooShort { needed: usize, got: usize },
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Linear stage costs: `state . x_k + input . u_k` summed over the horizon
/// plus `terminal . x_N`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(bound(
    serialize = "T: Scalar + Serialize",
    deserialize = "T: Scalar + Deserialize<'de>"
))]
pub struct CostSpec<T: Scalar = f64> {
    pub state: Vec<T>,
    pub terminal: Vec<T>,
    pub input: Vec<T>,
}

/// The worst-case cost as an affine function of the stacked decision
/// variables: `input_row . u + dist_row . w + constant` where `w` is the
/// stacked disturbance sequence. The disturbance row carries the part of the
/// state cost that the disturbances reach directly; it vanishes when the
/// stage cost ignores them.
#[derive(Clone, Debug)]
pub struct DerivedCost<T: Scalar> {
    pub input_row: Vec<T>,
    pub dist_row: Vec<T>,
    pub constant: T,
}

impl<T: Scalar> CostSpec<T> {
    pub fn zero(n_x: usize, n_u: usize) -> Self {
        CostSpec {
            state: vec![T::zero(); n_x],
            terminal: vec![T::zero(); n_x],
            input: vec![T::zero(); n_u],
        }
    }

    /// Propagate the stage costs through the dynamics: coefficients of the
    /// total cost on each stacked input and disturbance block, plus the
    /// free-response constant at `x0`.
    pub fn derive(
        &self,
        sys: &crate::model::UncertainLtiSystem<T>,
        horizon: usize,
        x0: &[T],
    ) -> Result<DerivedCost<T>, RmpcError<T>> {
        let n_x = sys.n_x();
        if self.state.len() != n_x || self.terminal.len() != n_x {
            return Err(RmpcError::Shape("state cost length".into()));
        }
        if self.input.len() != sys.n_u() {
            return Err(RmpcError::Shape("input cost length".into()));
        }
        if x0.len() != n_x {
            return Err(RmpcError::Shape("initial state length".into()));
        }
        let powers = a_powers(&sys.a, horizon);
        let mut input_row = Vec::with_capacity(horizon * sys.n_u());
        let mut dist_row = Vec::with_capacity(horizon * sys.n_w());
        for j in 0..horizon {
            // tail_j = sum_{k > j} q A^{k-1-j} + q_f A^{N-1-j}
            let mut tail = vec![T::zero(); n_x];
            for k in (j + 1)..horizon {
                add_row_through(&mut tail, &self.state, &powers[k - 1 - j]);
            }
            add_row_through(&mut tail, &self.terminal, &powers[horizon - 1 - j]);
            let through_b = row_times(&tail, &sys.b);
            let through_e = row_times(&tail, &sys.e);
            for (iu, v) in through_b.iter().enumerate() {
                input_row.push(*v + self.input[iu]);
            }
            dist_row.extend_from_slice(&through_e);
        }
        let mut constant = T::zero();
        for k in 0..horizon {
            constant = constant + dot(&self.state, &powers[k].mul_vec(x0));
        }
        constant = constant + dot(&self.terminal, &powers[horizon].mul_vec(x0));
        Ok(DerivedCost { input_row, dist_row, constant })
    }
}

/// `row . (M x)` accumulated into `acc`.
fn add_row_through<T: Scalar>(acc: &mut [T], row: &[T], m: &Mat<T>) {
    for j in 0..m.cols() {
        let mut v = T::zero();
        for i in 0..m.rows() {
            v = v + row[i] * m[(i, j)];
        }
        acc[j] = acc[j] + v;
    }
}

fn row_times<T: Scalar>(row: &[T], m: &Mat<T>) -> Vec<T> {
    let mut out = vec![T::zero(); m.cols()];
    add_row_through(&mut out, row, m);
    out
}

pub(crate) fn a_powers<T: Scalar>(a: &Mat<T>, up_to: usize) -> Vec<Mat<T>> {
    let mut powers = Vec::with_capacity(up_to + 1);
    powers.push(Mat::identity(a.rows()));
    for k in 1..=up_to {
        powers.push(powers[k - 1].mul(a));
    }
    powers
}

/// Linear size metric `rho(Y S + y_off) = y . vec(Y) + y_off_coeffs . y_off`.
#[derive(Clone, Debug)]
pub struct RhoCoefficients<T: Scalar = f64> {
    pub y: Vec<T>,
    pub y_off: Vec<T>,
}

impl<T: Scalar> RhoCoefficients<T> {
    pub fn value(&self, y_mat: &Mat<T>, y_off: &[T]) -> T {
        dot(&self.y, &y_mat.vec_col()) + dot(&self.y_off, y_off)
    }
}

/// Affine disturbance feedback over the primitive sequence:
/// `u_k = p_k + sum_{j<k} P_{k,j} s_j`. The strictly lower block structure is
/// enforced by construction, which is what makes the policy causal.
#[derive(Clone, Debug)]
pub struct AffineDfPolicy<T: Scalar = f64> {
    /// `gains[k]` holds the blocks `P_{k,j}` for `j = 0..k`.
    gains: Vec<Vec<Mat<T>>>,
    offsets: Vec<Vec<T>>,
}

impl<T: Scalar> AffineDfPolicy<T> {
    pub fn new(gains: Vec<Vec<Mat<T>>>, offsets: Vec<Vec<T>>) -> Result<Self, String> {
        if gains.len() != offsets.len() {
            return Err("gain and offset horizons differ".into());
        }
        for (k, blocks) in gains.iter().enumerate() {
            if blocks.len() != k {
                return Err(format!("step {k} must have exactly {k} gain blocks"));
            }
        }
        Ok(AffineDfPolicy { gains, offsets })
    }

    /// Open-loop policy: all gain blocks zero.
    pub fn open_loop(inputs: Vec<Vec<T>>, n_s: usize) -> Self {
        let n_u = inputs.first().map_or(0, |u| u.len());
        let gains = (0..inputs.len())
            .map(|k| (0..k).map(|_| Mat::zeros(n_u, n_s)).collect())
            .collect();
        AffineDfPolicy { gains, offsets: inputs }
    }

    pub fn horizon(&self) -> usize {
        self.offsets.len()
    }

    pub fn gain_block(&self, k: usize, j: usize) -> &Mat<T> {
        &self.gains[k][j]
    }

    pub fn offset(&self, k: usize) -> &[T] {
        &self.offsets[k]
    }

    /// Input at step `k` given the realized primitive points so far.
    pub fn input(&self, k: usize, s_history: &[Vec<T>]) -> Vec<T> {
        let mut u = self.offsets[k].clone();
        for (j, block) in self.gains[k].iter().enumerate() {
            let contrib = block.mul_vec(&s_history[j]);
            for (ui, ci) in u.iter_mut().zip(&contrib) {
                *ui = *ui + *ci;
            }
        }
        u
    }

    /// No disturbance has realized at step zero, so the first input is the
    /// open-loop term.
    pub fn first_input(&self) -> &[T] {
        &self.offsets[0]
    }

    /// The block-lower-triangular stacked gain.
    pub fn stacked_gain(&self, n_s: usize) -> Mat<T> {
        let n = self.horizon();
        let n_u = self.offsets.first().map_or(0, |u| u.len());
        let mut m = Mat::zeros(n * n_u, n * n_s);
        for (k, blocks) in self.gains.iter().enumerate() {
            for (j, block) in blocks.iter().enumerate() {
                m.set_block(k * n_u, j * n_s, block);
            }
        }
        m
    }

    pub fn stacked_offset(&self) -> Vec<T> {
        self.offsets.iter().flat_map(|u| u.iter().copied()).collect()
    }
}

/// Optimal solution of the adjustable-uncertainty problem at one time step.
#[derive(Clone, Debug)]
pub struct RmpcSolution<T: Scalar = f64> {
    pub policy: AffineDfPolicy<T>,
    /// Per-step `(Y_k, y_off_k)`.
    pub uncertainty: Vec<(Mat<T>, Vec<T>)>,
    /// Worst-case cost bound.
    pub tau: T,
    /// Full objective `tau - sum_k lambda_k rho_k`.
    pub objective: T,
}

impl<T: Scalar> RmpcSolution<T> {
    pub fn first_input(&self) -> &[T] {
        self.policy.first_input()
    }
}

/// Index layout of the policy variables `(tau, p, P, Y, y_off)` shared by the
/// dual LP and the vertex-enumeration oracle.
#[derive(Clone, Copy, Debug)]
pub struct PolicyLayout {
    pub horizon: usize,
    pub n_u: usize,
    pub n_s: usize,
    pub n_w: usize,
    pub tau: usize,
    pub p_start: usize,
    pub p_gain_start: usize,
    pub y_start: usize,
    pub y_off_start: usize,
    pub policy_total: usize,
}

impl PolicyLayout {
    pub fn new(horizon: usize, n_u: usize, n_s: usize, n_w: usize) -> Self {
        let tau = 0;
        let p_start = 1;
        let p_gain_start = p_start + horizon * n_u;
        let n_gain = n_u * n_s * horizon * (horizon.saturating_sub(1)) / 2;
        let y_start = p_gain_start + n_gain;
        let y_off_start = y_start + horizon * n_w * n_s;
        let policy_total = y_off_start + horizon * n_w;
        PolicyLayout { horizon, n_u, n_s, n_w, tau, p_start, p_gain_start, y_start, y_off_start, policy_total }
    }

    pub fn p_index(&self, k: usize, iu: usize) -> usize {
        self.p_start + k * self.n_u + iu
    }

    /// Index of `P_{k,j}[iu, is]` for `j < k`.
    pub fn p_gain_index(&self, k: usize, j: usize, iu: usize, is: usize) -> usize {
        debug_assert!(j < k);
        let block = k * (k - 1) / 2 + j;
        self.p_gain_start + block * self.n_u * self.n_s + iu * self.n_s + is
    }

    /// Index of `Y_k[iw, is]` in the column-major stacking.
    pub fn y_index(&self, k: usize, iw: usize, is: usize) -> usize {
        self.y_start + k * self.n_w * self.n_s + is * self.n_w + iw
    }

    pub fn y_off_index(&self, k: usize, iw: usize) -> usize {
        self.y_off_start + k * self.n_w + iw
    }

    /// Rebuild the policy and uncertainty blocks from a primal vector laid
    /// out by this map.
    pub fn extract_solution<T: Scalar>(&self, primal: &[T]) -> (AffineDfPolicy<T>, Vec<(Mat<T>, Vec<T>)>, T) {
        let mut gains = Vec::with_capacity(self.horizon);
        let mut offsets = Vec::with_capacity(self.horizon);
        for k in 0..self.horizon {
            let mut blocks = Vec::with_capacity(k);
            for j in 0..k {
                blocks.push(Mat::from_fn(self.n_u, self.n_s, |iu, is| {
                    primal[self.p_gain_index(k, j, iu, is)]
                }));
            }
            gains.push(blocks);
            offsets.push((0..self.n_u).map(|iu| primal[self.p_index(k, iu)]).collect());
        }
        let policy = AffineDfPolicy { gains, offsets };
        let uncertainty = (0..self.horizon)
            .map(|k| {
                let y = Mat::from_fn(self.n_w, self.n_s, |iw, is| {
                    primal[self.y_index(k, iw, is)]
                });
                let off = (0..self.n_w).map(|iw| primal[self.y_off_index(k, iw)]).collect();
                (y, off)
            })
            .collect();
        (policy, uncertainty, primal[self.tau])
    }
}
