//! Stacked prediction matrices: path constraints, the terminal map, and the
//! primitive-set stack, all affine in the stacked inputs and disturbances
//! with the measured state folded into the offsets.

use crate::linalg::Mat;
use crate::model::{UncertainLtiSystem, UncertaintyParametrization};
use crate::scalar::Scalar;

use super::{a_powers, AffineDfPolicy, RmpcError};

/// For inputs `u` and disturbances `w` stacked over the horizon:
///
/// * `path_input u + path_dist w <= path_rhs` holds iff every predicted state
///   is in the state set and every input in the input set;
/// * `terminal_input u + terminal_dist w + terminal_free` is the terminal
///   state.
#[derive(Clone, Debug)]
pub struct PredictionMatrices<T: Scalar = f64> {
    pub path_input: Mat<T>,
    pub path_dist: Mat<T>,
    pub path_rhs: Vec<T>,
    pub terminal_input: Mat<T>,
    pub terminal_dist: Mat<T>,
    pub terminal_free: Vec<T>,
    /// Block-diagonal stack of the primitive-set matrix over the horizon.
    pub g_stack: Mat<T>,
    pub g_rhs: Vec<T>,
    pub horizon: usize,
    pub n_x: usize,
    pub n_u: usize,
    pub n_w: usize,
    pub n_s: usize,
    /// Rows of the state and input sets.
    pub n_f: usize,
    pub n_g: usize,
}

impl<T: Scalar> PredictionMatrices<T> {
    pub fn path_rows(&self) -> usize {
        self.horizon * (self.n_f + self.n_g)
    }

    pub fn primitive_rows(&self) -> usize {
        self.g_rhs.len()
    }
}

pub fn build_prediction_matrices<T: Scalar>(
    sys: &UncertainLtiSystem<T>,
    unc: &UncertaintyParametrization<T>,
    horizon: usize,
    x0: &[T],
) -> Result<PredictionMatrices<T>, RmpcError<T>> {
    if horizon == 0 {
        return Err(RmpcError::Shape("horizon must be at least 1".into()));
    }
    if x0.len() != sys.n_x() {
        return Err(RmpcError::Shape("initial state length".into()));
    }
    if unc.n_w() != sys.n_w() {
        return Err(RmpcError::Shape("disturbance dimension".into()));
    }
    let (n_x, n_u, n_w) = (sys.n_x(), sys.n_u(), sys.n_w());
    let n_s = unc.n_s();
    let state_set = &sys.state_set;
    let input_set = &sys.input_set;
    let (n_f, n_g) = (state_set.num_rows(), input_set.num_rows());
    let powers = a_powers(&sys.a, horizon);

    // input_map[k] and dist_map[k]: x_k as a function of the stacks.
    let mut input_maps = Vec::with_capacity(horizon + 1);
    let mut dist_maps = Vec::with_capacity(horizon + 1);
    for k in 0..=horizon {
        let mut su = Mat::zeros(n_x, horizon * n_u);
        let mut sw = Mat::zeros(n_x, horizon * n_w);
        for j in 0..k {
            su.set_block(0, j * n_u, &powers[k - 1 - j].mul(&sys.b));
            sw.set_block(0, j * n_w, &powers[k - 1 - j].mul(&sys.e));
        }
        input_maps.push(su);
        dist_maps.push(sw);
    }

    let rows_total = horizon * (n_f + n_g);
    let mut path_input = Mat::zeros(rows_total, horizon * n_u);
    let mut path_dist = Mat::zeros(rows_total, horizon * n_w);
    let mut path_rhs = vec![T::zero(); rows_total];
    for k in 0..horizon {
        let base = k * (n_f + n_g);
        let fx_su = state_set.matrix().mul(&input_maps[k]);
        let fx_sw = state_set.matrix().mul(&dist_maps[k]);
        let free = state_set.matrix().mul_vec(&powers[k].mul_vec(x0));
        for i in 0..n_f {
            path_input.row_mut(base + i).copy_from_slice(fx_su.row(i));
            path_dist.row_mut(base + i).copy_from_slice(fx_sw.row(i));
            path_rhs[base + i] = state_set.offsets()[i] - free[i];
        }
        for i in 0..n_g {
            let row = path_input.row_mut(base + n_f + i);
            let fu = input_set.matrix().row(i);
            row[k * n_u..(k + 1) * n_u].copy_from_slice(fu);
            path_rhs[base + n_f + i] = input_set.offsets()[i];
        }
    }

    let l = unc.primitive_set.num_rows();
    let mut g_stack = Mat::zeros(horizon * l, horizon * n_s);
    let mut g_rhs = vec![T::zero(); horizon * l];
    for k in 0..horizon {
        g_stack.set_block(k * l, k * n_s, unc.primitive_set.matrix());
        g_rhs[k * l..(k + 1) * l].copy_from_slice(unc.primitive_set.offsets());
    }

    Ok(PredictionMatrices {
        path_input,
        path_dist,
        path_rhs,
        terminal_input: input_maps[horizon].clone(),
        terminal_dist: dist_maps[horizon].clone(),
        terminal_free: powers[horizon].mul_vec(x0),
        g_stack,
        g_rhs,
        horizon,
        n_x,
        n_u,
        n_w,
        n_s,
        n_f,
        n_g,
    })
}

/// Step-by-step rollout of a policy and uncertainty choice along a primitive
/// sequence. This recursion is deliberately independent of
/// [`PredictionMatrices`]; tests cross-check the two.
#[derive(Clone, Debug)]
pub struct PolicyResponse<T: Scalar> {
    /// `horizon + 1` states, starting at `x0`.
    pub states: Vec<Vec<T>>,
    pub inputs: Vec<Vec<T>>,
    pub disturbances: Vec<Vec<T>>,
}

pub fn simulate_policy_response<T: Scalar>(
    sys: &UncertainLtiSystem<T>,
    x0: &[T],
    policy: &AffineDfPolicy<T>,
    uncertainty: &[(Mat<T>, Vec<T>)],
    s_seq: &[Vec<T>],
) -> PolicyResponse<T> {
    let horizon = policy.horizon();
    assert_eq!(uncertainty.len(), horizon);
    assert_eq!(s_seq.len(), horizon);
    let mut states = vec![x0.to_vec()];
    let mut inputs = Vec::with_capacity(horizon);
    let mut disturbances = Vec::with_capacity(horizon);
    for k in 0..horizon {
        let u = policy.input(k, &s_seq[..k]);
        let (y_mat, y_off) = &uncertainty[k];
        let mut w = y_mat.mul_vec(&s_seq[k]);
        for (wi, oi) in w.iter_mut().zip(y_off) {
            *wi = *wi + *oi;
        }
        let mut next = sys.a.mul_vec(&states[k]);
        for (n, v) in next.iter_mut().zip(sys.b.mul_vec(&u)) {
            *n = *n + v;
        }
        for (n, v) in next.iter_mut().zip(sys.e.mul_vec(&w)) {
            *n = *n + v;
        }
        states.push(next);
        inputs.push(u);
        disturbances.push(w);
    }
    PolicyResponse { states, inputs, disturbances }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::HPolytope;
    use crate::model::tests::{cacc_system, cacc_uncertainty};
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    /// Stacked path residuals `path_input u + path_dist w - path_rhs` for a
    /// concrete rollout.
    fn stacked_residuals(
        pm: &PredictionMatrices<f64>,
        inputs: &[Vec<f64>],
        disturbances: &[Vec<f64>],
    ) -> Vec<f64> {
        let u: Vec<f64> = inputs.iter().flatten().copied().collect();
        let w: Vec<f64> = disturbances.iter().flatten().copied().collect();
        let cu = pm.path_input.mul_vec(&u);
        let cw = pm.path_dist.mul_vec(&w);
        cu.iter()
            .zip(&cw)
            .zip(&pm.path_rhs)
            .map(|((a, b), d)| *a + *b - *d)
            .collect()
    }

    #[test]
    fn single_step_expansion_by_hand() {
        // N = 1: the path block is F_x (A x0 + B u + E w) <= f_x and
        // F_u u <= f_u; the terminal map is (B, E, A x0).
        let sys = cacc_system();
        let unc = cacc_uncertainty();
        let x0 = [15.0, 0.0];
        let pm = build_prediction_matrices(&sys, &unc, 1, &x0).unwrap();
        assert_eq!(pm.path_rows(), 6);
        // k = 0 state rows have zero input/disturbance coefficients.
        for i in 0..4 {
            assert!(pm.path_input.row(i).iter().all(|v| v.abs() < 1e-15));
            assert!(pm.path_dist.row(i).iter().all(|v| v.abs() < 1e-15));
        }
        let fx = sys.state_set.matrix().mul_vec(&x0);
        for i in 0..4 {
            assert!((pm.path_rhs[i] - (sys.state_set.offsets()[i] - fx[i])).abs() < 1e-12);
        }
        // Input rows reproduce the input set.
        assert_eq!(pm.path_input.row(4), &[1.0]);
        assert_eq!(pm.path_input.row(5), &[-1.0]);
        assert!((pm.path_rhs[4] - 10.0).abs() < 1e-12 && (pm.path_rhs[5] - 10.0).abs() < 1e-12);
        // Terminal map.
        assert_eq!(pm.terminal_input.col(0), sys.b.col(0));
        assert_eq!(pm.terminal_dist.col(0), sys.e.col(0));
        let ax0 = sys.a.mul_vec(&x0);
        assert_eq!(pm.terminal_free, ax0);
    }

    #[test]
    fn identity_dynamics_repeat_the_offset() {
        // A = I, B = 0, E = 0: every state block gives f_x - F_x x0.
        let sys = crate::model::UncertainLtiSystem::new(
            Mat::identity(2),
            Mat::zeros(2, 1),
            Mat::zeros(2, 1),
            HPolytope::from_bounds(&[-1.0, -1.0], &[1.0, 1.0]),
            HPolytope::from_bounds(&[-1.0], &[1.0]),
        )
        .unwrap();
        let unc = cacc_uncertainty();
        let x0 = [0.25, -0.5];
        let pm = build_prediction_matrices(&sys, &unc, 3, &x0).unwrap();
        let expected: Vec<f64> = {
            let fx = sys.state_set.matrix().mul_vec(&x0);
            sys.state_set.offsets().iter().zip(&fx).map(|(h, v)| h - v).collect()
        };
        for k in 0..3 {
            let base = k * 6;
            for i in 0..4 {
                assert!((pm.path_rhs[base + i] - expected[i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn stacked_constraints_match_simulation() {
        // Random policies on the two-state platoon model, horizon 5: stacked
        // residuals agree with a step-by-step rollout to 1e-10.
        let sys = cacc_system();
        let unc = cacc_uncertainty();
        let mut rng = StdRng::seed_from_u64(41);
        let horizon = 5;
        let x0 = [13.0, 1.0];
        let pm = build_prediction_matrices(&sys, &unc, horizon, &x0).unwrap();
        for _ in 0..20 {
            let mut gains = Vec::new();
            let mut offsets = Vec::new();
            for k in 0..horizon {
                gains.push(
                    (0..k)
                        .map(|_| Mat::from_fn(1, 1, |_, _| rng.random_range(-1.0..1.0)))
                        .collect::<Vec<_>>(),
                );
                offsets.push(vec![rng.random_range(-2.0..2.0)]);
            }
            let policy = AffineDfPolicy::new(gains, offsets).unwrap();
            let uncertainty: Vec<(Mat<f64>, Vec<f64>)> = (0..horizon)
                .map(|_| {
                    (
                        Mat::from_fn(1, 1, |_, _| rng.random_range(0.0..2.0)),
                        vec![rng.random_range(-0.5..0.5)],
                    )
                })
                .collect();
            let s_seq: Vec<Vec<f64>> =
                (0..horizon).map(|_| vec![rng.random_range(-1.0..1.0)]).collect();
            let response = simulate_policy_response(&sys, &x0, &policy, &uncertainty, &s_seq);
            let residuals = stacked_residuals(&pm, &response.inputs, &response.disturbances);
            // Compare residuals against direct evaluation of the sets.
            for k in 0..horizon {
                let base = k * 6;
                let fx = sys.state_set.matrix().mul_vec(&response.states[k]);
                for i in 0..4 {
                    let direct = fx[i] - sys.state_set.offsets()[i];
                    assert!((residuals[base + i] - direct).abs() < 1e-10);
                }
                let fu = sys.input_set.matrix().mul_vec(&response.inputs[k]);
                for i in 0..2 {
                    let direct = fu[i] - sys.input_set.offsets()[i];
                    assert!((residuals[base + 4 + i] - direct).abs() < 1e-10);
                }
            }
            // Terminal map agrees with the rolled-out final state.
            let u: Vec<f64> = response.inputs.iter().flatten().copied().collect();
            let w: Vec<f64> = response.disturbances.iter().flatten().copied().collect();
            let mut x_n = pm.terminal_input.mul_vec(&u);
            let via_w = pm.terminal_dist.mul_vec(&w);
            for i in 0..2 {
                x_n[i] += via_w[i] + pm.terminal_free[i];
                assert!((x_n[i] - response.states[horizon][i]).abs() < 1e-10);
            }
        }
    }
}
