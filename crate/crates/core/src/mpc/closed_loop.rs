//! Receding-horizon closed loop and the trade-off sweep over the
//! uncertainty-size weight.

use std::io;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::geometry::HPolytope;
use crate::linalg::{dot, Mat};
use crate::problem::CompiledProblem;
use crate::scalar::{scalar, Scalar};

use super::{solve_ocp, RmpcError, RmpcSolution};

/// How the applied disturbance is drawn from the realized set
/// `W* = Y* S + y_off*` at each step.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DisturbanceMode {
    /// No disturbance. Assumes the zero set is admissible for the run to
    /// stay inside the realized sets.
    Zero,
    /// Uniformly random extreme point of the realized set.
    RandomVertex,
    /// Random convex combination of the extreme points.
    RandomInterior,
    /// Random extreme point from a dedicated seed stream; the reproducible
    /// stress mode.
    AdversarialVertex,
    /// User-supplied sequence, applied as given.
    Scripted,
}

#[derive(Clone, Debug)]
pub struct TraceStep<T: Scalar> {
    pub t: usize,
    pub state: Vec<T>,
    pub input: Vec<T>,
    pub y_mat: Mat<T>,
    pub y_off: Vec<T>,
    pub tau: T,
    pub objective: T,
    pub disturbance: Vec<T>,
    pub feasible: bool,
}

#[derive(Clone, Debug, Default)]
pub struct ClosedLoopTrace<T: Scalar> {
    pub steps: Vec<TraceStep<T>>,
}

impl<T: Scalar> ClosedLoopTrace<T> {
    pub fn feasible_steps(&self) -> usize {
        self.steps.iter().filter(|s| s.feasible).count()
    }

    /// Mean of `weights . x_t` over the recorded feasible steps.
    pub fn average_stage_cost(&self, weights: &[T]) -> T {
        let feasible: Vec<&TraceStep<T>> = self.steps.iter().filter(|s| s.feasible).collect();
        if feasible.is_empty() {
            return T::nan();
        }
        let sum: T = feasible.iter().map(|s| dot(weights, &s.state)).sum();
        sum / T::from_usize(feasible.len()).unwrap()
    }

    /// Realized size metric per step.
    pub fn rho_sequence(&self, rho: &super::RhoCoefficients<T>) -> Vec<T> {
        self.steps
            .iter()
            .filter(|s| s.feasible)
            .map(|s| rho.value(&s.y_mat, &s.y_off))
            .collect()
    }

    /// Write the trace as CSV with the header
    /// `t,x1..,u1..,Y1..,y_off1..,tau,objective,feasible`.
    pub fn write_csv<W: io::Write>(&self, out: &mut W) -> io::Result<()> {
        let Some(first) = self.steps.first() else {
            return writeln!(out, "t");
        };
        let mut header = String::from("t");
        for i in 1..=first.state.len() {
            header.push_str(&format!(",x{i}"));
        }
        for i in 1..=first.input.len() {
            header.push_str(&format!(",u{i}"));
        }
        for i in 1..=(first.y_mat.rows() * first.y_mat.cols()) {
            header.push_str(&format!(",Y{i}"));
        }
        for i in 1..=first.y_off.len() {
            header.push_str(&format!(",y_off{i}"));
        }
        header.push_str(",tau,objective,feasible");
        writeln!(out, "{header}")?;
        for s in &self.steps {
            let mut line = format!("{}", s.t);
            for v in &s.state {
                line.push_str(&format!(",{v}"));
            }
            for v in &s.input {
                line.push_str(&format!(",{v}"));
            }
            for v in s.y_mat.vec_col() {
                line.push_str(&format!(",{v}"));
            }
            for v in &s.y_off {
                line.push_str(&format!(",{v}"));
            }
            line.push_str(&format!(",{},{},{}", s.tau, s.objective, s.feasible));
            writeln!(out, "{line}")?;
        }
        Ok(())
    }
}

/// Run the receding-horizon loop for `steps` steps from the instance's
/// initial state. Losing feasibility aborts with the step index, the state,
/// and the partial trace.
pub fn run_closed_loop<T: Scalar>(
    instance: &CompiledProblem<T>,
    steps: usize,
    mode: DisturbanceMode,
    terminal: Option<&HPolytope<T>>,
    seed: u64,
    script: Option<&[Vec<T>]>,
) -> Result<ClosedLoopTrace<T>, RmpcError<T>> {
    run_closed_loop_from(instance, &instance.initial_state.clone(), steps, mode, terminal, seed, script)
}

/// Same as [`run_closed_loop`] but from an explicit initial state.
pub fn run_closed_loop_from<T: Scalar>(
    instance: &CompiledProblem<T>,
    x0: &[T],
    steps: usize,
    mode: DisturbanceMode,
    terminal: Option<&HPolytope<T>>,
    seed: u64,
    script: Option<&[Vec<T>]>,
) -> Result<ClosedLoopTrace<T>, RmpcError<T>> {
    if mode == DisturbanceMode::Scripted {
        let got = script.map_or(0, |s| s.len());
        if got < steps {
            return Err(RmpcError::ScriptTooShort { needed: steps, got });
        }
    }
    let sys = &instance.system;
    let n_w = sys.n_w();
    let mut rng = StdRng::seed_from_u64(seed);
    // Separate stream so the stress mode is reproducible independently of
    // any other randomness consumed during the run.
    let mut adversarial_rng = StdRng::seed_from_u64(seed ^ 0xadd5_eed0_u64);
    let mut trace = ClosedLoopTrace::default();
    let mut x = x0.to_vec();
    for t in 0..steps {
        let solution: RmpcSolution<T> = match solve_ocp(instance, &x, terminal) {
            Ok(sol) => sol,
            Err(RmpcError::Infeasible) => {
                trace.steps.push(TraceStep {
                    t,
                    state: x.clone(),
                    input: vec![T::nan(); sys.n_u()],
                    y_mat: Mat::zeros(n_w, instance.uncertainty.n_s()),
                    y_off: vec![T::zero(); n_w],
                    tau: T::nan(),
                    objective: T::nan(),
                    disturbance: vec![T::zero(); n_w],
                    feasible: false,
                });
                return Err(RmpcError::InfeasibleAtStep {
                    step: t,
                    state: x,
                    trace: Box::new(trace),
                });
            }
            Err(e) => return Err(e),
        };
        let (y_mat, y_off) = solution.uncertainty[0].clone();
        let realized: Vec<Vec<T>> = instance
            .uncertainty
            .primitive_vertices
            .vertices
            .iter()
            .map(|v| {
                let mut w = y_mat.mul_vec(v);
                for (wi, oi) in w.iter_mut().zip(&y_off) {
                    *wi = *wi + *oi;
                }
                w
            })
            .collect();
        let w = match mode {
            DisturbanceMode::Zero => vec![T::zero(); n_w],
            DisturbanceMode::RandomVertex => realized[rng.random_range(0..realized.len())].clone(),
            DisturbanceMode::AdversarialVertex => {
                realized[adversarial_rng.random_range(0..realized.len())].clone()
            }
            DisturbanceMode::RandomInterior => {
                let mut weights: Vec<T> = (0..realized.len())
                    .map(|_| scalar::<T>(-rng.random_range(1e-6..1.0f64).ln()))
                    .collect();
                let total: T = weights.iter().copied().sum();
                for wgt in weights.iter_mut() {
                    *wgt = *wgt / total;
                }
                let mut point = vec![T::zero(); n_w];
                for (wgt, v) in weights.iter().zip(&realized) {
                    for (pi, vi) in point.iter_mut().zip(v) {
                        *pi = *pi + *wgt * *vi;
                    }
                }
                point
            }
            DisturbanceMode::Scripted => script.unwrap()[t].clone(),
        };
        let u = solution.first_input().to_vec();
        trace.steps.push(TraceStep {
            t,
            state: x.clone(),
            input: u.clone(),
            y_mat,
            y_off,
            tau: solution.tau,
            objective: solution.objective,
            disturbance: w.clone(),
            feasible: true,
        });
        let mut next = sys.a.mul_vec(&x);
        for (n_i, v) in next.iter_mut().zip(sys.b.mul_vec(&u)) {
            *n_i = *n_i + v;
        }
        for (n_i, v) in next.iter_mut().zip(sys.e.mul_vec(&w)) {
            *n_i = *n_i + v;
        }
        x = next;
    }
    Ok(trace)
}

/// One row of the weight sweep: the optimal size metric at the initial
/// solve and the average first stage cost over a closed-loop run.
#[derive(Clone, Debug)]
pub struct SweepRow<T> {
    pub lambda: T,
    pub y_star: T,
    pub avg_distance: T,
}

/// Solve the problem for each weight and run a closed loop per weight.
/// Solves are independent, so the sweep fans out across threads.
pub fn lambda_sweep<T: Scalar>(
    instance: &CompiledProblem<T>,
    lambdas: &[T],
    mode: DisturbanceMode,
    steps: usize,
    terminal: Option<&HPolytope<T>>,
    seed: u64,
) -> Result<Vec<SweepRow<T>>, RmpcError<T>> {
    let mut results: Vec<Option<Result<SweepRow<T>, RmpcError<T>>>> =
        (0..lambdas.len()).map(|_| None).collect();
    std::thread::scope(|scope| {
        for (slot, &lambda) in results.iter_mut().zip(lambdas) {
            scope.spawn(move || {
                *slot = Some(sweep_one(instance, lambda, mode, steps, terminal, seed));
            });
        }
    });
    results
        .into_iter()
        .map(|r| r.expect("sweep worker finished"))
        .collect()
}

fn sweep_one<T: Scalar>(
    instance: &CompiledProblem<T>,
    lambda: T,
    mode: DisturbanceMode,
    steps: usize,
    terminal: Option<&HPolytope<T>>,
    seed: u64,
) -> Result<SweepRow<T>, RmpcError<T>> {
    let inst = instance.with_lambda(lambda);
    let solution = solve_ocp(&inst, &inst.initial_state, terminal)?;
    let (y_mat, y_off) = &solution.uncertainty[0];
    let y_star = inst.rho.value(y_mat, y_off);
    let trace = run_closed_loop(&inst, steps, mode, terminal, seed, None)?;
    let avg_distance = trace.average_stage_cost(&inst.cost.state);
    Ok(SweepRow { lambda, y_star, avg_distance })
}

/// CSV with the header `lambda,y_star,avg_distance`.
pub fn write_sweep_csv<T: Scalar, W: io::Write>(
    rows: &[SweepRow<T>],
    out: &mut W,
) -> io::Result<()> {
    writeln!(out, "lambda,y_star,avg_distance")?;
    for r in rows {
        writeln!(out, "{},{},{}", r.lambda, r.y_star, r.avg_distance)?;
    }
    Ok(())
}
