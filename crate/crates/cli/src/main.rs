//! Command-line front end: invariant-set computation and export, closed-loop
//! simulation, and sweeps over the uncertainty-size weight.
//!
//! Exit codes: 0 success, 2 configuration or input error, 3 fixed point not
//! converged, 4 numerical failure, 5 feasibility lost. Diagnostics go to
//! stderr; stdout carries nothing but CSV when no output file is given.

mod cacc;
mod poles;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use rmpc_au::geometry::HPolytope;
use rmpc_au::invariant::{
    compute_c_adj, compute_o_adj, InvariantError, InvariantSetResult, DEFAULT_MAX_ITER,
};
use rmpc_au::model::{
    build_autonomous_augmentation, build_controlled_augmentation, tighten_states_for_feedback,
};
use rmpc_au::mpc::{
    lambda_sweep, run_closed_loop, write_sweep_csv, DisturbanceMode as LibMode, RmpcError,
};
use rmpc_au::problem::{CompiledProblem, ProblemInstance};

const EXIT_CONFIG: u8 = 2;
const EXIT_NOT_CONVERGED: u8 = 3;
const EXIT_NUMERICAL: u8 = 4;
const EXIT_INFEASIBLE: u8 = 5;

#[derive(Parser)]
#[command(name = "rmpc-au", about = "Robust MPC with adjustable uncertainty sets", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the bundled cruise-control problem document.
    InitConfig(InitConfigArgs),
    /// Compute an adjustable invariant set and export it with 2-D slices.
    InvariantSet(InvariantSetArgs),
    /// Run the receding-horizon closed loop and emit the trace as CSV.
    Simulate(SimulateArgs),
    /// Solve and simulate across uncertainty-size weights.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct InitConfigArgs {
    /// Output path for the problem document.
    #[arg(long)]
    out: PathBuf,
    /// Closed-loop poles for the default feedback gain (one per state).
    #[arg(long, value_delimiter = ',')]
    poles: Option<Vec<f64>>,
    /// Upper bound for the scalar uncertainty scaling.
    #[arg(long, default_value_t = cacc::DEFAULT_Y_MAX)]
    y_max: f64,
    #[arg(long, default_value_t = cacc::DEFAULT_HORIZON)]
    horizon: usize,
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
}

#[derive(Args)]
struct InvariantSetArgs {
    #[arg(long)]
    config: PathBuf,
    /// positive: closed loop under the configured feedback; control: free
    /// admissible inputs.
    #[arg(long)]
    kind: SetKind,
    #[arg(long, default_value_t = DEFAULT_MAX_ITER)]
    max_iter: usize,
    /// Scaling values at which 2-D state-space slices are exported.
    #[arg(long, value_delimiter = ',', default_values_t = [0.0, 0.5, 1.0, 2.0])]
    scalings: Vec<f64>,
    /// Output path for the set (JSON). Slices go to `<out>` with the
    /// extension replaced by `_slices.csv` unless --slices-out is given.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    slices_out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SetKind {
    Positive,
    Control,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    steps: usize,
    #[arg(long, default_value = "adversarial-vertex")]
    mode: Mode,
    /// Terminal set file, or the literal `none`.
    #[arg(long, default_value = "none")]
    terminal: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Trace CSV destination; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON file with the scripted disturbance sequence (array of arrays).
    #[arg(long)]
    script: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Zero,
    RandomVertex,
    RandomInterior,
    AdversarialVertex,
    Scripted,
}

impl From<Mode> for LibMode {
    fn from(m: Mode) -> LibMode {
        match m {
            Mode::Zero => LibMode::Zero,
            Mode::RandomVertex => LibMode::RandomVertex,
            Mode::RandomInterior => LibMode::RandomInterior,
            Mode::AdversarialVertex => LibMode::AdversarialVertex,
            Mode::Scripted => LibMode::Scripted,
        }
    }
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, value_delimiter = ',')]
    lambdas: Vec<f64>,
    #[arg(long, default_value_t = 60)]
    steps: usize,
    #[arg(long, default_value = "zero")]
    mode: Mode,
    #[arg(long, default_value = "none")]
    terminal: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::InitConfig(args) => cmd_init_config(args),
        Command::InvariantSet(args) => cmd_invariant_set(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Sweep(args) => cmd_sweep(args),
    };
    match code {
        Ok(()) => ExitCode::SUCCESS,
        Err(code) => ExitCode::from(code),
    }
}

fn fail(code: u8, message: impl std::fmt::Display) -> u8 {
    eprintln!("error: {message}");
    code
}

fn load_problem(path: &Path) -> Result<(ProblemInstance<f64>, CompiledProblem<f64>), u8> {
    let text = fs::read_to_string(path)
        .map_err(|e| fail(EXIT_CONFIG, format!("cannot read {}: {e}", path.display())))?;
    let doc = ProblemInstance::<f64>::from_json(&text)
        .map_err(|e| fail(EXIT_CONFIG, e))?;
    let compiled = doc.compile().map_err(|e| fail(EXIT_CONFIG, e))?;
    Ok((doc, compiled))
}

fn load_terminal(spec: &str) -> Result<Option<HPolytope<f64>>, u8> {
    if spec == "none" {
        return Ok(None);
    }
    let text = fs::read_to_string(spec)
        .map_err(|e| fail(EXIT_CONFIG, format!("cannot read terminal set {spec}: {e}")))?;
    let set: HPolytope<f64> =
        serde_json::from_str(&text).map_err(|e| fail(EXIT_CONFIG, format!("terminal set: {e}")))?;
    Ok(Some(set))
}

fn cmd_init_config(args: InitConfigArgs) -> Result<(), u8> {
    // The shipped gain corresponds to the default poles; explicit --poles
    // recomputes it via Ackermann and regulates around the initial state.
    let (gain, offset) = match &args.poles {
        None => (None, None),
        Some(poles) => {
            let base = cacc::cacc_document(args.horizon, args.lambda, args.y_max, None, None);
            let gain = poles::place_poles(&base.a, &base.b, poles).ok_or_else(|| {
                fail(EXIT_CONFIG, "pole placement failed; give one real pole per state")
            })?;
            let shift = gain.mul_vec(&base.initial_state);
            let offset = shift.iter().map(|v| -v).collect();
            (Some(gain), Some(offset))
        }
    };
    let doc = cacc::cacc_document(args.horizon, args.lambda, args.y_max, gain, offset);
    doc.compile().map_err(|e| fail(EXIT_CONFIG, e))?;
    fs::write(&args.out, doc.to_json())
        .map_err(|e| fail(EXIT_CONFIG, format!("cannot write {}: {e}", args.out.display())))?;
    eprintln!("wrote {}", args.out.display());
    Ok(())
}

fn cmd_invariant_set(args: InvariantSetArgs) -> Result<(), u8> {
    let (_, inst) = load_problem(&args.config)?;
    let result = match args.kind {
        SetKind::Positive => {
            // The exported set doubles as a terminal constraint, so states
            // where the feedback would saturate are excluded up front.
            let tightened = tighten_states_for_feedback(
                &inst.system,
                &inst.feedback_gain,
                &inst.feedback_offset,
            )
            .map_err(|e| fail(EXIT_CONFIG, e))?;
            let aug = build_autonomous_augmentation(
                &tightened,
                &inst.uncertainty,
                &inst.feedback_gain,
                &inst.feedback_offset,
            )
            .map_err(|e| fail(EXIT_CONFIG, e))?;
            compute_o_adj(&aug, args.max_iter)
        }
        SetKind::Control => {
            let aug = build_controlled_augmentation(&inst.system, &inst.uncertainty)
                .map_err(|e| fail(EXIT_CONFIG, e))?;
            compute_c_adj(&aug, &inst.system.input_set, args.max_iter)
        }
    };
    let (result, exit_code) = match result {
        Ok(r) => (r, None),
        Err(InvariantError::NotConverged(last)) => {
            eprintln!(
                "fixed point not converged within {} iterations; exporting the last iterate",
                last.iterations
            );
            (*last, Some(EXIT_NOT_CONVERGED))
        }
        Err(InvariantError::Unbounded) => {
            return Err(fail(
                EXIT_CONFIG,
                "the augmented feasible set is unbounded; bound the admissible parameter set",
            ))
        }
        Err(e) => return Err(fail(EXIT_NUMERICAL, e)),
    };
    let json = serde_json::to_string_pretty(&result).expect("set serializes");
    fs::write(&args.out, json)
        .map_err(|e| fail(EXIT_CONFIG, format!("cannot write {}: {e}", args.out.display())))?;
    eprintln!(
        "{} set: {} rows, converged={}, iterations={}",
        match args.kind {
            SetKind::Positive => "adjustable positive invariant",
            SetKind::Control => "adjustable control invariant",
        },
        result.set.num_rows(),
        result.converged,
        result.iterations
    );
    let slices_path = args
        .slices_out
        .clone()
        .unwrap_or_else(|| slices_path_for(&args.out));
    write_slices(&result, &inst, &args.scalings, &slices_path)?;
    match exit_code {
        None => Ok(()),
        Some(code) => Err(code),
    }
}

fn slices_path_for(out: &Path) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    out.with_file_name(format!("{stem}_slices.csv"))
}

/// Slice the set at each scaling (diagonal scaling entries set to the value,
/// everything else zero) and emit the slice vertices in plot order.
fn write_slices(
    result: &InvariantSetResult<f64>,
    inst: &CompiledProblem<f64>,
    scalings: &[f64],
    path: &Path,
) -> Result<(), u8> {
    let n_x = inst.system.n_x();
    if n_x != 2 {
        eprintln!("slices are emitted only for two-dimensional state spaces; skipping");
        return Ok(());
    }
    let n_w = inst.uncertainty.n_w();
    let n_s = inst.uncertainty.n_s();
    let mut csv = String::from("scaling,vertex,x1,x2\n");
    for &value in scalings {
        let mut fixed: Vec<(usize, f64)> = Vec::new();
        for i in 0..n_w {
            for j in 0..n_s {
                fixed.push((n_x + j * n_w + i, if i == j { value } else { 0.0 }));
            }
        }
        for i in 0..n_w {
            fixed.push((n_x + n_w * n_s + i, 0.0));
        }
        let slice = result
            .set
            .slice(&fixed)
            .and_then(|s| s.remove_redundancy())
            .map_err(|e| fail(EXIT_NUMERICAL, e))?;
        if slice.is_empty().map_err(|e| fail(EXIT_NUMERICAL, e))? {
            eprintln!("slice at scaling {value} is empty");
            continue;
        }
        let mut verts = slice
            .enumerate_vertices()
            .map_err(|e| fail(EXIT_NUMERICAL, e))?
            .vertices;
        let centroid = centroid(&verts);
        verts.sort_by(|a, b| {
            let ang = |p: &Vec<f64>| (p[1] - centroid[1]).atan2(p[0] - centroid[0]);
            ang(a).partial_cmp(&ang(b)).unwrap()
        });
        for (idx, v) in verts.iter().enumerate() {
            csv.push_str(&format!("{value},{idx},{},{}\n", v[0], v[1]));
        }
    }
    fs::write(path, csv)
        .map_err(|e| fail(EXIT_CONFIG, format!("cannot write {}: {e}", path.display())))?;
    eprintln!("slice boundaries written to {}", path.display());
    Ok(())
}

fn centroid(points: &[Vec<f64>]) -> Vec<f64> {
    let n = points.len().max(1) as f64;
    let mut c = vec![0.0; points.first().map_or(0, |p| p.len())];
    for p in points {
        for (ci, pi) in c.iter_mut().zip(p) {
            *ci += pi / n;
        }
    }
    c
}

fn cmd_simulate(args: SimulateArgs) -> Result<(), u8> {
    let (_, inst) = load_problem(&args.config)?;
    let terminal = load_terminal(&args.terminal)?;
    let script: Option<Vec<Vec<f64>>> = match &args.script {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| fail(EXIT_CONFIG, format!("cannot read script: {e}")))?;
            Some(
                serde_json::from_str(&text)
                    .map_err(|e| fail(EXIT_CONFIG, format!("script file: {e}")))?,
            )
        }
        None => None,
    };
    if !inst.uncertainty.supports_zero_uncertainty() {
        eprintln!(
            "warning: the admissible set excludes the zero uncertainty set; \
             the shifted-policy feasibility fallback does not apply"
        );
    }
    let outcome = run_closed_loop(
        &inst,
        args.steps,
        args.mode.into(),
        terminal.as_ref(),
        args.seed,
        script.as_deref(),
    );
    match outcome {
        Ok(trace) => {
            write_trace(&trace, args.out.as_deref())?;
            let mean_d = trace.average_stage_cost(&inst.cost.state);
            let rho_seq = trace.rho_sequence(&inst.rho);
            eprintln!(
                "feasible steps: {}/{}; mean stage cost: {:.4}; realized sizes: {:?}",
                trace.feasible_steps(),
                args.steps,
                mean_d,
                compact(&rho_seq)
            );
            Ok(())
        }
        Err(RmpcError::InfeasibleAtStep { step, state, trace }) => {
            write_trace(&trace, args.out.as_deref())?;
            eprintln!("infeasible at step {step} from state {state:?}");
            Err(EXIT_INFEASIBLE)
        }
        Err(RmpcError::ScriptTooShort { needed, got }) => Err(fail(
            EXIT_CONFIG,
            format!("scripted mode needs {needed} disturbances, got {got}"),
        )),
        Err(RmpcError::Unbounded) => Err(fail(
            EXIT_CONFIG,
            "objective unbounded; check the admissible set and weights",
        )),
        Err(e) => Err(fail(EXIT_NUMERICAL, e)),
    }
}

fn write_trace(
    trace: &rmpc_au::mpc::ClosedLoopTrace<f64>,
    out: Option<&Path>,
) -> Result<(), u8> {
    match out {
        Some(path) => {
            let mut buf = Vec::new();
            trace.write_csv(&mut buf).expect("in-memory write");
            fs::write(path, buf)
                .map_err(|e| fail(EXIT_CONFIG, format!("cannot write {}: {e}", path.display())))?;
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            trace.write_csv(&mut lock).map_err(|e| fail(EXIT_CONFIG, e))?;
            lock.flush().ok();
        }
    }
    Ok(())
}

fn compact(values: &[f64]) -> Vec<f64> {
    // The realized size sequence is usually constant; print first, min, max.
    match values.len() {
        0 => Vec::new(),
        _ => {
            let first = values[0];
            let min = values.iter().copied().fold(f64::INFINITY, f64::min);
            let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            vec![first, min, max]
        }
    }
}

fn cmd_sweep(args: SweepArgs) -> Result<(), u8> {
    if args.lambdas.is_empty() {
        return Err(fail(EXIT_CONFIG, "--lambdas needs at least one value"));
    }
    if args.lambdas.iter().any(|l| *l < 0.0) {
        return Err(fail(EXIT_CONFIG, "lambda values must be nonnegative"));
    }
    let (_, inst) = load_problem(&args.config)?;
    let terminal = load_terminal(&args.terminal)?;
    let rows = lambda_sweep(
        &inst,
        &args.lambdas,
        args.mode.into(),
        args.steps,
        terminal.as_ref(),
        args.seed,
    )
    .map_err(|e| match e {
        RmpcError::Infeasible | RmpcError::InfeasibleAtStep { .. } => fail(EXIT_INFEASIBLE, e),
        other => fail(EXIT_NUMERICAL, other),
    })?;
    let mut buf = Vec::new();
    write_sweep_csv(&rows, &mut buf).expect("in-memory write");
    match &args.out {
        Some(path) => fs::write(path, buf)
            .map_err(|e| fail(EXIT_CONFIG, format!("cannot write {}: {e}", path.display())))?,
        None => {
            std::io::stdout().write_all(&buf).map_err(|e| fail(EXIT_CONFIG, e))?;
        }
    }
    let tol = 1e-9;
    let monotone = |vals: Vec<f64>| vals.windows(2).all(|w| w[1] >= w[0] - tol);
    let y_ok = monotone(rows.iter().map(|r| r.y_star).collect());
    let d_ok = monotone(rows.iter().map(|r| r.avg_distance).collect());
    eprintln!("{} monotone y_star", if y_ok { "PASS" } else { "FAIL" });
    eprintln!("{} monotone avg_distance", if d_ok { "PASS" } else { "FAIL" });
    Ok(())
}
