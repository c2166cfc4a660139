//! Shared fixtures: the platooning study instance and a generator of small
//! random instances for oracle comparisons.

use rand::rngs::StdRng;
use rand::Rng;

use rmpc_au::geometry::HPolytope;
use rmpc_au::linalg::Mat;
use rmpc_au::model::UncertaintyParametrization;
use rmpc_au::mpc::CostSpec;
use rmpc_au::problem::ProblemInstance;

/// Two-vehicle platoon with distance and velocity-difference states. The
/// feedback gain places the closed-loop poles at {0.8, 0.7} and is offset to
/// regulate around d = 15.
pub fn cacc_instance() -> ProblemInstance<f64> {
    let dt = 0.2;
    ProblemInstance {
        a: Mat::from_rows(&[vec![1.0, dt], vec![0.0, 1.0]]).unwrap(),
        b: Mat::from_rows(&[vec![0.0], vec![-dt]]).unwrap(),
        e: Mat::from_rows(&[vec![0.0], vec![dt]]).unwrap(),
        state_set: HPolytope::from_bounds(&[10.0, -5.0], &[20.0, 5.0]),
        input_set: HPolytope::from_bounds(&[-10.0], &[10.0]),
        primitive_set: HPolytope::from_bounds(&[-1.0], &[1.0]),
        primitive_vertices: Some(vec![vec![-1.0], vec![1.0]]),
        admissible_set: UncertaintyParametrization::scalar_symmetric_template(1, 5.0),
        tie_over_horizon: true,
        feedback_gain: Mat::from_rows(&[vec![1.5, 2.5]]).unwrap(),
        feedback_offset: vec![-22.5],
        horizon: 10,
        lambda: vec![1.0],
        rho_y: vec![1.0],
        rho_y_off: vec![0.0],
        cost: CostSpec { state: vec![1.0, 0.0], terminal: vec![1.0, 0.0], input: vec![0.0] },
        initial_state: vec![15.0, 0.0],
    }
}

/// Random instance in the oracle-tractable regime: up to two states, scalar
/// input and disturbance, interval primitive set, horizon at most three.
pub fn random_small_instance(rng: &mut StdRng) -> ProblemInstance<f64> {
    let n_x = if rng.random_bool(0.5) { 1 } else { 2 };
    let horizon = rng.random_range(1..=3);
    let a = Mat::from_fn(n_x, n_x, |_, _| rng.random_range(-1.1..1.1));
    let b = Mat::from_fn(n_x, 1, |_, _| rng.random_range(-1.0..1.0) + 0.2);
    let e = Mat::from_fn(n_x, 1, |_, _| rng.random_range(-1.0..1.0));
    let x_hi: Vec<f64> = (0..n_x).map(|_| rng.random_range(2.0..5.0)).collect();
    let x_lo: Vec<f64> = x_hi.iter().map(|h| -h).collect();
    let u_lim = rng.random_range(1.0..3.0);
    let y_max = rng.random_range(0.1..0.8);
    let admissible_set = if rng.random_bool(0.5) {
        UncertaintyParametrization::scalar_symmetric_template(1, y_max)
    } else {
        // Free offset inside a small box.
        UncertaintyParametrization::box_template(&[0.0, -0.1], &[y_max, 0.1])
    };
    let cost = CostSpec {
        state: (0..n_x).map(|_| rng.random_range(-1.0..1.0)).collect(),
        terminal: (0..n_x).map(|_| rng.random_range(-1.0..1.0)).collect(),
        input: vec![rng.random_range(-0.5..0.5)],
    };
    let initial_state: Vec<f64> = x_hi.iter().map(|h| rng.random_range(-0.3 * h..0.3 * h)).collect();
    ProblemInstance {
        a,
        b,
        e,
        state_set: HPolytope::from_bounds(&x_lo, &x_hi),
        input_set: HPolytope::from_bounds(&[-u_lim], &[u_lim]),
        primitive_set: HPolytope::from_bounds(&[-1.0], &[1.0]),
        primitive_vertices: Some(vec![vec![-1.0], vec![1.0]]),
        admissible_set,
        tie_over_horizon: rng.random_bool(0.5),
        feedback_gain: Mat::zeros(1, n_x),
        feedback_offset: vec![0.0],
        horizon,
        lambda: vec![rng.random_range(0.0..0.5)],
        rho_y: vec![rng.random_range(0.1..1.0)],
        rho_y_off: vec![rng.random_range(0.0..0.2)],
        cost,
        initial_state,
    }
}

/// Box terminal set over the augmented coordinates, shrunk inside the state
/// and parameter bounds so it is usually reachable.
pub fn box_terminal(doc: &ProblemInstance<f64>, shrink: f64) -> HPolytope<f64> {
    let n_x = doc.a.rows();
    let mut lo = Vec::new();
    let mut hi = Vec::new();
    for i in 0..n_x {
        // Read the box back out of the bound rows (2i is the upper row).
        let up = doc.state_set.offsets()[2 * i];
        lo.push(-up * shrink);
        hi.push(up * shrink);
    }
    // Parameter block: generous box, the admissible rows do the real work.
    lo.extend_from_slice(&[-1.0, -1.0]);
    hi.extend_from_slice(&[1.0, 1.0]);
    HPolytope::from_bounds(&lo, &hi)
}
