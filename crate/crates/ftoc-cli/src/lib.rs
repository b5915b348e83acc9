//! Command line front end for the `ftoc` solvers.
//!
//! Three subcommands: `generate` writes a seeded random instance to an
//! `ftoc-v1` problem file; `solve` runs one of the solvers on a problem
//! file, optionally writes a `sol-v1` solution file, and prints a one-row
//! report; `bench` generates a grid of instances, times serial and
//! parallel solves, and emits a report table.
//!
//! Exit codes: 0 success, 2 solver non-convergence (also usage errors),
//! 3 I/O errors (unreadable or unparseable files), 4 validation errors
//! (wrong version, malformed or inconsistent problem data, instances the
//! requested solver cannot handle).

use clap::{Args, Parser, Subcommand, ValueEnum};
use ftoc::bench::{
    emit_report, generate, read_problem, write_problem, write_solution, BenchReport, BenchRow,
    FileError, GeneratorSpec, ReportFormat, SolutionFile, SOLUTION_VERSION,
};
use ftoc::model::{count_active_rows, objective_value, Trajectory, ValidatedProblem};
use ftoc::oracle;
use ftoc::qp3split;
use ftoc::timesplit::{ExecMode, FtocSolution, HorizonSolver, OuterConfig};
use ftoc::{SolveStatus, Tolerance};
use std::path::PathBuf;
use std::time::Instant;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NO_CONVERGENCE: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_VALIDATION: i32 = 4;

/// Slack threshold below which an inequality row counts as active.
const ACTIVE_ROW_TOL: f64 = 1e-6;

#[derive(Parser)]
#[command(
    name = "ftoc",
    version,
    about = "Finite-time optimal control: solvers, problem generator, benchmarks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a seeded random problem file (ftoc-v1)
    Generate(GenerateArgs),
    /// Solve a problem file and report; optionally write a solution file
    Solve(SolveArgs),
    /// Generate a grid of instances and benchmark the horizon solver
    Bench(BenchArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// State dimension
    #[arg(long, default_value_t = 10)]
    n: usize,
    /// Input dimension
    #[arg(long, default_value_t = 10)]
    m: usize,
    /// Horizon length N
    #[arg(long = "horizon", default_value_t = 10)]
    horizon: usize,
    /// Consecutive-state difference bound (default: calibrated)
    #[arg(long)]
    dx: Option<f64>,
    /// Input box bound (default: calibrated)
    #[arg(long = "u-max")]
    u_max: Option<f64>,
    /// Calibration factor in (0, 1)
    #[arg(long, default_value_t = 0.8)]
    tightness: f64,
    /// Standard deviation of disturbance spikes
    #[arg(long, default_value_t = 1.0)]
    disturbance: f64,
    /// Comma-separated spike stages (default: thirds of the horizon)
    #[arg(long = "spikes", value_delimiter = ',')]
    spikes: Vec<usize>,
    /// Spectral radius bound for the state matrix
    #[arg(long = "spectral-radius", default_value_t = 0.95)]
    spectral_radius: f64,
    /// Random seed; equal seeds generate identical files
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Problem file to write
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum SolverKind {
    /// Horizon splitting with per-stage three-set solves
    Hier,
    /// Three-set splitting on the stacked QP (no horizon splitting)
    #[value(name = "3set-full")]
    ThreeSetFull,
    /// Active-set enumeration (exact, small instances only)
    Oracle,
}

impl SolverKind {
    fn name(self) -> &'static str {
        match self {
            SolverKind::Hier => "hier",
            SolverKind::ThreeSetFull => "3set-full",
            SolverKind::Oracle => "oracle",
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum TolModeArg {
    /// Fixed thresholds: --tol-pri and --tol-dual are used directly
    Direct,
    /// Adaptive thresholds: --tol-pri is the absolute term, --tol-dual the relative term
    Absrel,
}

#[derive(Clone, Copy, ValueEnum)]
enum ToggleArg {
    On,
    Off,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Table,
    Csv,
}

impl From<FormatArg> for ReportFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Table => ReportFormat::Table,
            FormatArg::Csv => ReportFormat::Csv,
        }
    }
}

#[derive(Args, Clone)]
struct SolverFlags {
    /// Splitting penalty for both loops
    #[arg(long, default_value_t = 15.0)]
    rho: f64,
    /// Primal threshold (direct mode) or absolute term (absrel mode)
    #[arg(long = "tol-pri", default_value_t = 1e-4)]
    tol_pri: f64,
    /// Dual threshold (direct mode) or relative term (absrel mode)
    #[arg(long = "tol-dual", default_value_t = 1e-3)]
    tol_dual: f64,
    #[arg(long = "tol-mode", value_enum, default_value_t = TolModeArg::Direct)]
    tol_mode: TolModeArg,
    /// Outer iteration cap (also the cap for single-loop solvers)
    #[arg(long = "max-iter", default_value_t = 2000)]
    max_iter: usize,
    /// Worker threads for the stage sweep; 1 runs serially
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Reuse each stage's previous iterate as the inner starting point
    #[arg(long = "warm-start", value_enum, default_value_t = ToggleArg::On)]
    warm_start: ToggleArg,
}

impl SolverFlags {
    fn tolerance(&self) -> Tolerance {
        match self.tol_mode {
            TolModeArg::Direct => Tolerance::Direct {
                eps_pri: self.tol_pri,
                eps_dual: self.tol_dual,
            },
            TolModeArg::Absrel => Tolerance::AbsRel {
                eps_abs: self.tol_pri,
                eps_rel: self.tol_dual,
            },
        }
    }

    fn exec_mode(&self) -> ExecMode {
        if self.threads <= 1 {
            ExecMode::Serial
        } else {
            ExecMode::Parallel(self.threads)
        }
    }

    fn outer_config(&self) -> OuterConfig {
        let mut cfg = OuterConfig::new(self.rho);
        cfg.tol = self.tolerance();
        cfg.inner_tol = self.tolerance();
        cfg.max_iter = self.max_iter;
        cfg.warm_start = matches!(self.warm_start, ToggleArg::On);
        cfg.exec = self.exec_mode();
        cfg
    }
}

#[derive(Args)]
struct SolveArgs {
    /// Problem file (ftoc-v1)
    problem: PathBuf,
    #[arg(long, value_enum, default_value_t = SolverKind::Hier)]
    solver: SolverKind,
    #[command(flatten)]
    flags: SolverFlags,
    /// Solution file to write (sol-v1)
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FormatArg::Table)]
    format: FormatArg,
}

#[derive(Args)]
struct BenchArgs {
    /// Problem shapes as n:m:N, comma separated
    #[arg(long, value_delimiter = ',', default_value = "10:10:10")]
    sizes: Vec<String>,
    /// Instances per shape (seeds count up from --seed)
    #[arg(long, default_value_t = 1)]
    seeds: usize,
    /// Base random seed
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[command(flatten)]
    flags: SolverFlags,
    /// Report file to write (default: print to stdout)
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FormatArg::Table)]
    format: FormatArg,
}

/// Parses arguments and runs the requested subcommand, returning the
/// process exit code. The binary wraps this; tests call it directly.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // help and version surface as "errors" with exit code 0
            let code = if e.exit_code() == 0 { EXIT_OK } else { EXIT_USAGE };
            let _ = e.print();
            return code;
        }
    };
    match cli.command {
        Command::Generate(args) => run_generate(&args),
        Command::Solve(args) => run_solve(&args),
        Command::Bench(args) => run_bench(&args),
    }
}

fn file_error_exit(e: &FileError) -> i32 {
    match e {
        FileError::Io(_) | FileError::Json(_) => EXIT_IO,
        FileError::Version { .. } | FileError::Structure(_) | FileError::Validation(_) => {
            EXIT_VALIDATION
        }
    }
}

fn ms(d: std::time::Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

fn status_name(status: SolveStatus) -> &'static str {
    match status {
        SolveStatus::Converged => "converged",
        SolveStatus::MaxIterations => "max-iterations",
    }
}

fn run_generate(args: &GenerateArgs) -> i32 {
    if args.n < 1 || args.m < 1 || args.horizon < 1 {
        eprintln!("error: --n, --m and --horizon must be at least 1");
        return EXIT_USAGE;
    }
    if !(args.tightness > 0.0 && args.tightness < 1.0) {
        eprintln!("error: --tightness must lie strictly between 0 and 1");
        return EXIT_USAGE;
    }
    if args.dx.is_some_and(|v| v <= 0.0) || args.u_max.is_some_and(|v| v <= 0.0) {
        eprintln!("error: --dx and --u-max must be positive");
        return EXIT_USAGE;
    }
    if args.spectral_radius <= 0.0 {
        eprintln!("error: --spectral-radius must be positive");
        return EXIT_USAGE;
    }
    if args.disturbance < 0.0 {
        eprintln!("error: --disturbance must be nonnegative");
        return EXIT_USAGE;
    }
    if let Some(&bad) = args.spikes.iter().find(|&&t| t >= args.horizon) {
        eprintln!("error: spike stage {bad} is outside 0..{}", args.horizon);
        return EXIT_USAGE;
    }
    let spec = GeneratorSpec {
        n: args.n,
        m: args.m,
        horizon: args.horizon,
        dx: args.dx,
        u_max: args.u_max,
        tightness: args.tightness,
        disturbance: args.disturbance,
        spike_times: args.spikes.clone(),
        spectral_radius: args.spectral_radius,
        seed: args.seed,
    };
    let (problem, echo) = generate(&spec);
    if let Err(e) = write_problem(&args.out, &problem, Some(&echo)) {
        eprintln!("error: cannot write {}: {e}", args.out.display());
        return file_error_exit(&e);
    }
    println!(
        "wrote {} (n={} m={} N={} inequality_rows={} dx={} u_max={} seed={})",
        args.out.display(),
        problem.n,
        problem.m,
        problem.horizon,
        problem.total_ineq_rows(),
        echo.dx,
        echo.u_max,
        spec.seed
    );
    EXIT_OK
}

struct SolveOutcome {
    trajectory: Trajectory,
    status: SolveStatus,
    outer_iterations: Option<usize>,
    inner_iterations: Option<usize>,
    avg_inner: f64,
    primal_residual: Option<f64>,
    dual_residual: Option<f64>,
    factorization_ms: f64,
    solve_ms: f64,
}

fn solve_hier(problem: &ValidatedProblem, cfg: OuterConfig) -> Result<SolveOutcome, String> {
    let mut solver = HorizonSolver::new(problem, cfg).map_err(|e| e.to_string())?;
    let sol: FtocSolution = solver.solve();
    let residuals = sol.final_residuals().copied();
    Ok(SolveOutcome {
        status: sol.status,
        outer_iterations: Some(sol.outer_iterations),
        inner_iterations: Some(sol.total_inner_iterations()),
        avg_inner: sol.avg_inner_iterations(),
        primal_residual: residuals.map(|r| r.primal),
        dual_residual: residuals.map(|r| r.dual),
        factorization_ms: ms(sol.factorization_time),
        solve_ms: ms(sol.solve_time),
        trajectory: sol.trajectory,
    })
}

fn solve_three_set(problem: &ValidatedProblem, flags: &SolverFlags) -> Result<SolveOutcome, String> {
    let qp = oracle::stacked_qp(problem);
    let cfg = qp3split::InnerConfig {
        rho: flags.rho,
        tol: flags.tolerance(),
        max_iter: flags.max_iter,
    };
    let factor_started = Instant::now();
    let factors = qp3split::prefactor(&qp, cfg.rho).map_err(|e| e.to_string())?;
    let factorization_ms = ms(factor_started.elapsed());
    let solve_started = Instant::now();
    let (sol, _) = qp3split::solve_prefactored(&qp, &factors, &cfg, None);
    let solve_ms = ms(solve_started.elapsed());
    Ok(SolveOutcome {
        trajectory: oracle::trajectory_from_stacked(problem, &sol.x),
        status: sol.status,
        outer_iterations: Some(sol.iterations),
        inner_iterations: Some(sol.iterations),
        avg_inner: sol.iterations as f64,
        primal_residual: Some(sol.residuals.primal),
        dual_residual: Some(sol.residuals.dual),
        factorization_ms,
        solve_ms,
    })
}

fn solve_oracle(problem: &ValidatedProblem) -> Result<SolveOutcome, (String, i32)> {
    let started = Instant::now();
    let sol = match oracle::solve_ftoc(problem) {
        Ok(sol) => sol,
        Err(e) => return Err((e.to_string(), EXIT_VALIDATION)),
    };
    let solve_ms = ms(started.elapsed());
    Ok(SolveOutcome {
        trajectory: oracle::trajectory_from_stacked(problem, &sol.x),
        status: SolveStatus::Converged,
        outer_iterations: None,
        inner_iterations: None,
        avg_inner: 0.0,
        primal_residual: None,
        dual_residual: None,
        factorization_ms: 0.0,
        solve_ms,
    })
}

fn run_solve(args: &SolveArgs) -> i32 {
    let (problem, _echo) = match read_problem(&args.problem) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot load {}: {e}", args.problem.display());
            return file_error_exit(&e);
        }
    };
    let flags = &args.flags;
    let outcome = match args.solver {
        SolverKind::Hier => solve_hier(&problem, flags.outer_config()),
        SolverKind::ThreeSetFull => solve_three_set(&problem, flags),
        SolverKind::Oracle => match solve_oracle(&problem) {
            Ok(o) => Ok(o),
            Err((msg, code)) => {
                eprintln!("error: {msg}");
                return code;
            }
        },
    };
    let outcome = match outcome {
        Ok(o) => o,
        Err(msg) => {
            eprintln!("error: {msg}");
            return EXIT_VALIDATION;
        }
    };

    let objective =
        objective_value(&problem, &outcome.trajectory).expect("solver trajectories are well-formed");
    let active = count_active_rows(&problem, &outcome.trajectory, ACTIVE_ROW_TOL)
        .expect("solver trajectories are well-formed");

    if let Some(out) = &args.out {
        let file = SolutionFile {
            version: SOLUTION_VERSION.to_string(),
            solver: args.solver.name().to_string(),
            status: status_name(outcome.status).to_string(),
            objective,
            states: outcome.trajectory.states.clone(),
            inputs: outcome.trajectory.inputs.clone(),
            outer_iterations: outcome.outer_iterations,
            inner_iterations: outcome.inner_iterations,
            primal_residual: outcome.primal_residual,
            dual_residual: outcome.dual_residual,
            active_rows: Some(active),
        };
        if let Err(e) = write_solution(out, &file) {
            eprintln!("error: cannot write {}: {e}", out.display());
            return file_error_exit(&e);
        }
    }

    let (serial_ms, parallel_ms) = match flags.exec_mode() {
        ExecMode::Serial => (Some(outcome.solve_ms), None),
        ExecMode::Parallel(_) => (None, Some(outcome.solve_ms)),
    };
    let report = BenchReport {
        rows: vec![BenchRow {
            n: problem.n,
            m: problem.m,
            horizon: problem.horizon,
            rho: flags.rho,
            tol: flags.tolerance(),
            outer_iterations: outcome.outer_iterations.unwrap_or(0),
            avg_inner_iterations: outcome.avg_inner,
            factorization_ms: outcome.factorization_ms,
            solve_ms_serial: serial_ms,
            solve_ms_parallel: parallel_ms,
            objective,
            oracle_gap: None,
            active_rows: Some(active),
        }],
    };
    print!("{}", emit_report(&report, args.format.into()));
    println!("status: {}", status_name(outcome.status));

    if outcome.status.converged() {
        EXIT_OK
    } else {
        EXIT_NO_CONVERGENCE
    }
}

fn parse_size(text: &str) -> Result<(usize, usize, usize), String> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        return Err(format!("size {text:?} is not of the form n:m:N"));
    }
    let mut nums = [0usize; 3];
    for (slot, part) in nums.iter_mut().zip(&parts) {
        *slot = part
            .parse()
            .map_err(|_| format!("size {text:?} has a non-numeric component"))?;
        if *slot == 0 {
            return Err(format!("size {text:?} has a zero component"));
        }
    }
    Ok((nums[0], nums[1], nums[2]))
}

fn run_bench(args: &BenchArgs) -> i32 {
    if args.seeds == 0 {
        eprintln!("error: --seeds must be at least 1");
        return EXIT_USAGE;
    }
    let mut shapes = Vec::new();
    for size in &args.sizes {
        match parse_size(size) {
            Ok(shape) => shapes.push(shape),
            Err(msg) => {
                eprintln!("error: {msg}");
                return EXIT_USAGE;
            }
        }
    }
    let flags = &args.flags;
    let mut rows = Vec::new();
    let mut all_converged = true;
    for &(n, m, horizon) in &shapes {
        for k in 0..args.seeds {
            let spec = GeneratorSpec::new(n, m, horizon, args.seed.wrapping_add(k as u64));
            let (problem, _echo) = generate(&spec);

            let mut serial_cfg = flags.outer_config();
            serial_cfg.exec = ExecMode::Serial;
            let serial = match solve_hier(&problem, serial_cfg) {
                Ok(o) => o,
                Err(msg) => {
                    eprintln!("error: {msg}");
                    return EXIT_VALIDATION;
                }
            };
            all_converged &= serial.status.converged();

            let parallel_ms = if flags.threads >= 2 {
                let mut cfg = flags.outer_config();
                cfg.exec = ExecMode::Parallel(flags.threads);
                match solve_hier(&problem, cfg) {
                    Ok(o) => {
                        all_converged &= o.status.converged();
                        Some(o.solve_ms)
                    }
                    Err(msg) => {
                        eprintln!("error: {msg}");
                        return EXIT_VALIDATION;
                    }
                }
            } else {
                None
            };

            let objective = objective_value(&problem, &serial.trajectory)
                .expect("solver trajectories are well-formed");
            let oracle_gap = if problem.total_ineq_rows() <= oracle::MAX_ENUM_ROWS {
                oracle::solve_ftoc(&problem).ok().map(|exact| {
                    (objective - exact.objective).abs() / (1.0 + exact.objective.abs())
                })
            } else {
                None
            };
            let active = count_active_rows(&problem, &serial.trajectory, ACTIVE_ROW_TOL)
                .expect("solver trajectories are well-formed");

            rows.push(BenchRow {
                n,
                m,
                horizon,
                rho: flags.rho,
                tol: flags.tolerance(),
                outer_iterations: serial.outer_iterations.unwrap_or(0),
                avg_inner_iterations: serial.avg_inner,
                factorization_ms: serial.factorization_ms,
                solve_ms_serial: Some(serial.solve_ms),
                solve_ms_parallel: parallel_ms,
                objective,
                oracle_gap,
                active_rows: Some(active),
            });
        }
    }

    let text = emit_report(&BenchReport { rows }, args.format.into());
    match &args.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, &text) {
                eprintln!("error: cannot write {}: {e}", path.display());
                return EXIT_IO;
            }
            println!("wrote {}", path.display());
        }
        None => print!("{text}"),
    }

    if all_converged {
        EXIT_OK
    } else {
        EXIT_NO_CONVERGENCE
    }
}
