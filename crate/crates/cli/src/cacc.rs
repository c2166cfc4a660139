//! The bundled cooperative adaptive cruise control study: a two-vehicle
//! platoon where the rear vehicle tracks the gap `d` and velocity difference
//! `dv` while choosing how much acceleration freedom `w in [-y, y]` to grant
//! the front vehicle.

use rmpc_au::geometry::HPolytope;
use rmpc_au::linalg::Mat;
use rmpc_au::model::UncertaintyParametrization;
use rmpc_au::mpc::CostSpec;
use rmpc_au::problem::ProblemInstance;

pub const DEFAULT_HORIZON: usize = 10;
pub const DEFAULT_Y_MAX: f64 = 5.0;
/// Closed-loop poles of the shipped feedback gain.
pub const DEFAULT_POLES: [f64; 2] = [0.8, 0.7];

/// Build the bundled problem document. `gain`/`offset` default to the
/// pole-placed values for [`DEFAULT_POLES`], regulating around d = 15.
pub fn cacc_document(
    horizon: usize,
    lambda: f64,
    y_max: f64,
    gain: Option<Mat<f64>>,
    offset: Option<Vec<f64>>,
) -> ProblemInstance<f64> {
    let dt = 0.2;
    ProblemInstance {
        a: Mat::from_rows(&[vec![1.0, dt], vec![0.0, 1.0]]).unwrap(),
        b: Mat::from_rows(&[vec![0.0], vec![-dt]]).unwrap(),
        e: Mat::from_rows(&[vec![0.0], vec![dt]]).unwrap(),
        state_set: HPolytope::from_bounds(&[10.0, -5.0], &[20.0, 5.0]),
        input_set: HPolytope::from_bounds(&[-10.0], &[10.0]),
        primitive_set: HPolytope::from_bounds(&[-1.0], &[1.0]),
        primitive_vertices: Some(vec![vec![-1.0], vec![1.0]]),
        admissible_set: UncertaintyParametrization::scalar_symmetric_template(1, y_max),
        tie_over_horizon: true,
        feedback_gain: gain
            .unwrap_or_else(|| Mat::from_rows(&[vec![1.5, 2.5]]).unwrap()),
        feedback_offset: offset.unwrap_or_else(|| vec![-22.5]),
        horizon,
        lambda: vec![lambda],
        rho_y: vec![1.0],
        rho_y_off: vec![0.0],
        cost: CostSpec { state: vec![1.0, 0.0], terminal: vec![1.0, 0.0], input: vec![0.0] },
        initial_state: vec![15.0, 0.0],
    }
}
