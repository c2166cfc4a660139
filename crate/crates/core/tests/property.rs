//! Property-based checks over the solver and the set operations, plus a
//! smoke test of the `f32` instantiation.

use proptest::prelude::*;

use rmpc_au::geometry::HPolytope;
use rmpc_au::linalg::{dot, Mat};
use rmpc_au::lp::{feasible_point, solve_lp, Direction, LinearProgram, LpSolution, RowSense, VarBound};

fn small_lp() -> impl Strategy<Value = LinearProgram<f64>> {
    let dims = (1usize..=3, 1usize..=5);
    dims.prop_flat_map(|(n, m)| {
        let entries = proptest::collection::vec(-2.0f64..2.0, m * n);
        let rhs = proptest::collection::vec(0.2f64..3.0, m);
        let obj = proptest::collection::vec(-1.0f64..1.0, n);
        (entries, rhs, obj).prop_map(move |(entries, rhs, obj)| {
            let rows: Vec<Vec<f64>> = entries.chunks(n).map(|c| c.to_vec()).collect();
            LinearProgram {
                objective: obj,
                constraint_matrix: Mat::from_rows(&rows).unwrap(),
                rhs,
                senses: vec![RowSense::Le; m],
                // Bounded box keeps every instance feasible (origin) and
                // bounded, so the solver must return Optimal.
                bounds: vec![VarBound::range(-5.0, 5.0); n],
                direction: Direction::Minimize,
            }
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn optimal_solutions_satisfy_all_rows(lp in small_lp()) {
        match solve_lp(&lp).unwrap() {
            LpSolution::Optimal { primal, objective_value } => {
                for i in 0..lp.num_rows() {
                    let lhs = dot(lp.constraint_matrix.row(i), &primal);
                    prop_assert!(lhs <= lp.rhs[i] + 1e-7);
                }
                let recomputed = dot(&lp.objective, &primal);
                prop_assert!((objective_value - recomputed).abs() <= 1e-7 * (1.0 + objective_value.abs()));
            }
            other => return Err(TestCaseError::fail(format!("expected optimal, got {other:?}"))),
        }
    }

    #[test]
    fn feasible_points_satisfy_their_rows(lp in small_lp()) {
        let p = feasible_point(&lp.constraint_matrix, &lp.rhs).unwrap();
        let p = p.expect("origin is feasible for these instances");
        for i in 0..lp.num_rows() {
            prop_assert!(dot(lp.constraint_matrix.row(i), &p) <= lp.rhs[i] + 1e-7);
        }
    }

    #[test]
    fn redundancy_removal_preserves_the_set(
        offs in proptest::collection::vec(0.5f64..2.0, 6),
        angles in proptest::collection::vec(0.0f64..std::f64::consts::TAU, 6),
    ) {
        let mut rows: Vec<Vec<f64>> = angles.iter().map(|a| vec![a.cos(), a.sin()]).collect();
        let mut rhs = offs;
        for (r, o) in [([1.0, 0.0], 3.0), ([-1.0, 0.0], 3.0), ([0.0, 1.0], 3.0), ([0.0, -1.0], 3.0)] {
            rows.push(r.to_vec());
            rhs.push(o);
        }
        let p = HPolytope::new(Mat::from_rows(&rows).unwrap(), rhs).unwrap();
        let r = p.remove_redundancy().unwrap();
        prop_assert!(r.num_rows() <= p.num_rows());
        prop_assert!(p.contains_poly(&r).unwrap());
        prop_assert!(r.contains_poly(&p).unwrap());
    }

    #[test]
    fn projection_is_sound_for_sampled_points(
        offs in proptest::collection::vec(0.5f64..2.0, 5),
        angles in proptest::collection::vec(0.0f64..std::f64::consts::TAU, 5),
        lift in proptest::collection::vec(-0.5f64..0.5, 5),
    ) {
        // Bounded 3-D polytope around the origin.
        let mut rows: Vec<Vec<f64>> = angles
            .iter()
            .zip(&lift)
            .map(|(a, l)| vec![a.cos(), a.sin(), *l])
            .collect();
        let mut rhs = offs;
        for i in 0..3 {
            for s in [1.0, -1.0] {
                let mut r = vec![0.0; 3];
                r[i] = s;
                rows.push(r);
                rhs.push(2.0);
            }
        }
        let p = HPolytope::new(Mat::from_rows(&rows).unwrap(), rhs).unwrap();
        let proj = p.project_out(1).unwrap();
        for v in p.enumerate_vertices().unwrap().vertices {
            prop_assert!(proj.contains_point_with_tol(&v[..2], 1e-7));
        }
    }

    #[test]
    fn intersect_then_contains(
        a_lo in -2.0f64..-0.1, a_hi in 0.1f64..2.0,
        b_lo in -2.0f64..-0.1, b_hi in 0.1f64..2.0,
    ) {
        let p = HPolytope::from_bounds(&[a_lo], &[a_hi]);
        let q = HPolytope::from_bounds(&[b_lo], &[b_hi]);
        let cut = p.intersect(&q).unwrap();
        prop_assert!(p.contains_poly(&cut).unwrap());
        prop_assert!(q.contains_poly(&cut).unwrap());
    }
}

#[test]
fn f32_instantiation_works_end_to_end() {
    // The whole stack is generic over the scalar; exercise the f32 path on a
    // small problem with its looser tolerances.
    let lp = LinearProgram::<f32> {
        objective: vec![1.0, 1.0],
        constraint_matrix: Mat::from_rows(&[vec![1.0f32, 2.0], vec![1.0, 0.0]]).unwrap(),
        rhs: vec![4.0, 2.0],
        senses: vec![RowSense::Le; 2],
        bounds: vec![VarBound::at_least(0.0f32); 2],
        direction: Direction::Maximize,
    };
    match solve_lp(&lp).unwrap() {
        LpSolution::Optimal { objective_value, .. } => {
            assert!((objective_value - 3.0).abs() < 1e-4);
        }
        other => panic!("unexpected {other:?}"),
    }
    let p: HPolytope<f32> = HPolytope::from_bounds(&[0.0f32, 0.0], &[1.0, 1.0]);
    let verts = p.enumerate_vertices().unwrap();
    assert_eq!(verts.vertices.len(), 4);
    let reduced = p.intersect(&p).unwrap().remove_redundancy().unwrap();
    assert!(reduced.set_equal(&p).unwrap());
}
