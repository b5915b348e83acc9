//! Consensus splitting of the control horizon.
//!
//! Every stage `t` owns a private copy `xt = (x_t, u_t, x_next)` of its
//! piece of the trajectory, so all `N + 1` stage QPs can be solved
//! independently — that is the parallel step. Agreement between a stage's
//! predicted next state and the next stage's current state is enforced
//! through consensus values `z_t` and a pair of scaled duals per boundary:
//! `w_t` on the current-state copy and `v_t` on the predicted-state copy.
//! One iteration is
//!
//! ```text
//! 1. xt_t   <- argmin of the stage QP given (z, w, v)     for every t
//! 2. z_t    <- (cur(xt_t) + pred(xt_{t-1})) / 2           for t = 1..N
//! 3. w_t    -= cur(xt_t) - z_t                            for t = 1..N
//!    v_t    -= pred(xt_{t-1}) - z_t
//! ```
//!
//! where `cur` and `pred` select the first and last `n` entries of a stage
//! vector. Because `z_t` is the midpoint, `w_t + v_t = 0` at every
//! iteration; step 3 is evaluated through the half-difference
//! `d = (cur - pred)/2` as `w -= d`, `v += d`, which keeps that identity
//! exact in floating point. Stage QPs are solved by the three-set
//! splitting in [`crate::qp3split`], warm started from one outer iteration
//! to the next, with all factorizations built once up front.

use crate::linalg::{sum_sq, LinalgError};
use crate::model::{
    self, stage_qp_template, ModelError, StageCoupling, StageRole, StandardQp, Trajectory,
    ValidatedProblem,
};
use crate::qp3split::{self, InnerConfig, InnerFactors, InnerState};
use crate::{ResidualReport, SolveStatus, Tolerance};
use std::ops::Range;
use std::time::{Duration, Instant};
use thiserror::Error;

#[cfg(feature = "parallel")]
use rayon::prelude::*;
#[cfg(feature = "parallel")]
use std::sync::Arc;

pub const DEFAULT_OUTER_MAX_ITER: usize = 2000;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// How the stage sweep runs. `Parallel(w)` uses `w` worker threads over
/// the deterministic chunk schedule of [`parallel_schedule`]; without the
/// `parallel` feature it degrades to the same chunked loop run serially.
/// Results are bitwise identical either way.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExecMode {
    Serial,
    Parallel(usize),
}

impl ExecMode {
    pub fn workers(self) -> usize {
        match self {
            ExecMode::Serial => 1,
            ExecMode::Parallel(w) => w.max(1),
        }
    }
}

/// Outer-loop settings. `rho` is shared with the inner solver unless
/// `inner_rho` overrides it; the inner termination rule defaults to the
/// same thresholds as the outer one.
#[derive(Debug, Clone, Copy)]
pub struct OuterConfig {
    pub rho: f64,
    pub tol: Tolerance,
    pub max_iter: usize,
    pub inner_tol: Tolerance,
    pub inner_max_iter: usize,
    pub inner_rho: Option<f64>,
    pub warm_start: bool,
    pub exec: ExecMode,
}

impl OuterConfig {
    pub fn new(rho: f64) -> Self {
        OuterConfig {
            rho,
            tol: Tolerance::default_direct(),
            max_iter: DEFAULT_OUTER_MAX_ITER,
            inner_tol: Tolerance::default_direct(),
            inner_max_iter: qp3split::DEFAULT_INNER_MAX_ITER,
            inner_rho: None,
            warm_start: true,
            exec: ExecMode::Serial,
        }
    }

    fn inner_cfg(&self) -> InnerConfig {
        InnerConfig {
            rho: self.inner_rho.unwrap_or(self.rho),
            tol: self.inner_tol,
            max_iter: self.inner_max_iter,
        }
    }
}

/// Iterate of the outer loop. Boundary quantities for `t = 1..N` are
/// stored at index `t - 1`; the accessor methods take the stage index
/// directly.
#[derive(Debug, Clone, PartialEq)]
pub struct OuterState {
    /// Stage vectors `xt_t`, `t = 0..N`, each of width `2n + m`.
    pub stage_primals: Vec<Vec<f64>>,
    /// Consensus states `z_t`, `t = 1..N`.
    pub consensus: Vec<Vec<f64>>,
    /// Duals `w_t` on the current-state copies, `t = 1..N`.
    pub dual_current: Vec<Vec<f64>>,
    /// Duals `v_t` on the predicted-state copies, `t = 1..N`.
    pub dual_predicted: Vec<Vec<f64>>,
    pub iterations: usize,
}

impl OuterState {
    pub fn zeros(p: &ValidatedProblem) -> Self {
        let width = p.stage_width();
        OuterState {
            stage_primals: vec![vec![0.0; width]; p.horizon + 1],
            consensus: vec![vec![0.0; p.n]; p.horizon],
            dual_current: vec![vec![0.0; p.n]; p.horizon],
            dual_predicted: vec![vec![0.0; p.n]; p.horizon],
            iterations: 0,
        }
    }

    pub fn consensus_at(&self, t: usize) -> &[f64] {
        &self.consensus[t - 1]
    }

    pub fn dual_current_at(&self, t: usize) -> &[f64] {
        &self.dual_current[t - 1]
    }

    pub fn dual_predicted_at(&self, t: usize) -> &[f64] {
        &self.dual_predicted[t - 1]
    }
}

/// Splits `0..num_stages` into at most `workers` contiguous chunks whose
/// sizes differ by at most one, in ascending order. One worker gets the
/// whole range; `num_stages` workers get singletons.
pub fn parallel_schedule(num_stages: usize, workers: usize) -> Vec<Range<usize>> {
    assert!(workers >= 1, "need at least one worker");
    let w = workers.min(num_stages).max(1);
    let base = num_stages / w;
    let extra = num_stages % w;
    let mut out = Vec::with_capacity(w);
    let mut start = 0;
    for k in 0..w {
        let len = base + usize::from(k < extra);
        out.push(start..start + len);
        start += len;
    }
    debug_assert_eq!(start, num_stages);
    out
}

struct StageWorker {
    role: StageRole,
    qp: StandardQp,
    factors: InnerFactors,
    warm: Option<InnerState>,
    cumulative_inner: usize,
    exhausted: usize,
}

/// Horizon solver with cached per-stage factorizations. Construct once
/// per problem, then [`step`](Self::step) or [`solve`](Self::solve); the
/// interior state persists across calls, so repeated solves continue where
/// the previous one stopped.
pub struct HorizonSolver<'a> {
    problem: &'a ValidatedProblem,
    cfg: OuterConfig,
    inner_cfg: InnerConfig,
    stages: Vec<StageWorker>,
    state: OuterState,
    /// Consensus values of the previous iteration (for the dual residual).
    prev_consensus: Vec<Vec<f64>>,
    chunks: Vec<Range<usize>>,
    #[cfg(feature = "parallel")]
    pool: Option<Arc<rayon::ThreadPool>>,
    factorization_time: Duration,
}

/// Solution bundle: the extracted trajectory plus iteration counts,
/// residual history and phase timings.
#[derive(Debug, Clone)]
pub struct FtocSolution {
    pub trajectory: Trajectory,
    pub objective: f64,
    pub status: SolveStatus,
    /// Outer iterations spent in this solve call.
    pub outer_iterations: usize,
    /// Inner iterations accumulated per stage over the solver's lifetime.
    pub inner_iterations: Vec<usize>,
    /// Stage solves that hit the inner iteration cap (the outer loop
    /// continues with the best iterate; this is the count of such events).
    pub inner_exhausted: usize,
    pub residual_history: Vec<ResidualReport>,
    pub factorization_time: Duration,
    pub solve_time: Duration,
}

impl FtocSolution {
    pub fn total_inner_iterations(&self) -> usize {
        self.inner_iterations.iter().sum()
    }

    /// Mean inner iterations per stage solve (one stage solve = one stage
    /// in one outer iteration).
    pub fn avg_inner_iterations(&self) -> f64 {
        if self.outer_iterations == 0 {
            return 0.0;
        }
        self.total_inner_iterations() as f64
            / (self.outer_iterations * self.inner_iterations.len()) as f64
    }

    pub fn final_residuals(&self) -> Option<&ResidualReport> {
        self.residual_history.last()
    }
}

/// Read-only inputs shared by every stage solve of one sweep.
struct SweepCtx<'a> {
    problem: &'a ValidatedProblem,
    state: &'a OuterState,
    inner_cfg: &'a InnerConfig,
    rho: f64,
    warm_start: bool,
}

fn stage_job(ctx: &SweepCtx<'_>, t: usize, worker: &mut StageWorker, out_primal: &mut Vec<f64>) {
    let SweepCtx {
        problem,
        state,
        inner_cfg,
        rho,
        warm_start,
    } = *ctx;
    let horizon = problem.horizon;
    let coupling = StageCoupling {
        current: (t >= 1).then(|| model::ConsensusPair {
            consensus: state.consensus_at(t),
            dual: state.dual_current_at(t),
        }),
        next: (t < horizon).then(|| model::ConsensusPair {
            consensus: state.consensus_at(t + 1),
            dual: state.dual_predicted_at(t + 1),
        }),
    };
    model::set_stage_linear(problem, worker.role, rho, &coupling, &mut worker.qp)
        .expect("stage role fixed at construction");
    let warm = if warm_start { worker.warm.take() } else { None };
    let (sol, inner_state) =
        qp3split::solve_prefactored(&worker.qp, &worker.factors, inner_cfg, warm);
    worker.warm = Some(inner_state);
    worker.cumulative_inner += sol.iterations;
    if !sol.status.converged() {
        worker.exhausted += 1;
    }
    *out_primal = sol.x;
}

/// Consensus and dual update for one boundary `t`: the midpoint and the
/// half-difference update that keeps `w_t + v_t = 0` bitwise.
fn boundary_update(
    n: usize,
    m: usize,
    cur_stage: &[f64],
    pred_stage: &[f64],
    z: &mut [f64],
    w: &mut [f64],
    v: &mut [f64],
) {
    let cur = &cur_stage[..n];
    let pred = &pred_stage[n + m..];
    for i in 0..n {
        z[i] = (cur[i] + pred[i]) / 2.0;
        let d = (cur[i] - pred[i]) / 2.0;
        w[i] -= d;
        v[i] += d;
    }
}

impl<'a> HorizonSolver<'a> {
    pub fn new(problem: &'a ValidatedProblem, cfg: OuterConfig) -> Result<Self, SolverError> {
        assert!(cfg.rho > 0.0, "penalty must be positive");
        assert!(cfg.max_iter >= 1, "need at least one outer iteration");
        let inner_cfg = cfg.inner_cfg();
        let started = Instant::now();
        let mut stages = Vec::with_capacity(problem.horizon + 1);
        for t in 0..=problem.horizon {
            let role = StageRole::for_stage(t, problem.horizon)?;
            let qp = stage_qp_template(problem, role, cfg.rho)?;
            let factors = qp3split::prefactor(&qp, inner_cfg.rho)?;
            stages.push(StageWorker {
                role,
                qp,
                factors,
                warm: None,
                cumulative_inner: 0,
                exhausted: 0,
            });
        }
        let factorization_time = started.elapsed();
        let chunks = parallel_schedule(problem.horizon + 1, cfg.exec.workers());
        #[cfg(feature = "parallel")]
        let pool = match cfg.exec {
            ExecMode::Serial => None,
            ExecMode::Parallel(w) => Some(Arc::new(
                rayon::ThreadPoolBuilder::new()
                    .num_threads(w.max(1))
                    .build()
                    .expect("thread pool construction"),
            )),
        };
        Ok(HorizonSolver {
            problem,
            cfg,
            inner_cfg,
            stages,
            state: OuterState::zeros(problem),
            prev_consensus: vec![vec![0.0; problem.n]; problem.horizon],
            chunks,
            #[cfg(feature = "parallel")]
            pool,
            factorization_time,
        })
    }

    pub fn state(&self) -> &OuterState {
        &self.state
    }

    pub fn config(&self) -> &OuterConfig {
        &self.cfg
    }

    pub fn factorization_time(&self) -> Duration {
        self.factorization_time
    }

    pub fn inner_exhausted(&self) -> usize {
        self.stages.iter().map(|s| s.exhausted).sum()
    }

    pub fn inner_iterations(&self) -> Vec<usize> {
        self.stages.iter().map(|s| s.cumulative_inner).collect()
    }

    /// One outer iteration: the stage sweep, the boundary updates, and the
    /// residual gather. Always gathers residuals sequentially in stage
    /// order so parallel runs report identical numbers.
    pub fn step(&mut self) -> ResidualReport {
        #[cfg(feature = "parallel")]
        {
            if let Some(pool) = self.pool.clone() {
                return pool.install(|| self.step_impl(true));
            }
        }
        self.step_impl(false)
    }

    fn step_impl(&mut self, use_parallel: bool) -> ResidualReport {
        #[cfg(not(feature = "parallel"))]
        let _ = use_parallel;
        let problem = self.problem;
        let n = problem.n;
        let m = problem.m;
        let horizon = problem.horizon;

        // 1. stage sweep
        let mut new_primals: Vec<Vec<f64>> = vec![Vec::new(); horizon + 1];
        {
            let ctx = SweepCtx {
                problem,
                state: &self.state,
                inner_cfg: &self.inner_cfg,
                rho: self.cfg.rho,
                warm_start: self.cfg.warm_start,
            };
            let run_chunk = |(start, ws, os): ChunkJob<'_>| {
                for (i, (w, o)) in ws.iter_mut().zip(os.iter_mut()).enumerate() {
                    stage_job(&ctx, start + i, w, o);
                }
            };
            let jobs = chunk_jobs(&self.chunks, &mut self.stages, &mut new_primals);
            #[cfg(feature = "parallel")]
            {
                if use_parallel {
                    jobs.into_par_iter().for_each(run_chunk);
                } else {
                    jobs.into_iter().for_each(run_chunk);
                }
            }
            #[cfg(not(feature = "parallel"))]
            jobs.into_iter().for_each(run_chunk);
        }
        self.state.stage_primals = new_primals;

        // 2 + 3. boundary updates; previous consensus kept for the dual
        // residual (every entry is rewritten below)
        std::mem::swap(&mut self.prev_consensus, &mut self.state.consensus);
        {
            let OuterState {
                stage_primals,
                consensus,
                dual_current,
                dual_predicted,
                ..
            } = &mut self.state;
            let stage_primals = &*stage_primals;
            let prev = &*self.prev_consensus;
            for (i, z) in consensus.iter_mut().enumerate() {
                z.copy_from_slice(&prev[i]);
            }
            let update = |i: usize, z: &mut Vec<f64>, w: &mut Vec<f64>, v: &mut Vec<f64>| {
                let t = i + 1;
                boundary_update(n, m, &stage_primals[t], &stage_primals[t - 1], z, w, v);
            };
            #[cfg(feature = "parallel")]
            {
                if use_parallel {
                    consensus
                        .par_iter_mut()
                        .zip(dual_current.par_iter_mut())
                        .zip(dual_predicted.par_iter_mut())
                        .enumerate()
                        .for_each(|(i, ((z, w), v))| update(i, z, w, v));
                } else {
                    for (i, ((z, w), v)) in consensus
                        .iter_mut()
                        .zip(dual_current.iter_mut())
                        .zip(dual_predicted.iter_mut())
                        .enumerate()
                    {
                        update(i, z, w, v);
                    }
                }
            }
            #[cfg(not(feature = "parallel"))]
            for (i, ((z, w), v)) in consensus
                .iter_mut()
                .zip(dual_current.iter_mut())
                .zip(dual_predicted.iter_mut())
                .enumerate()
            {
                update(i, z, w, v);
            }
        }
        self.state.iterations += 1;

        self.gather_residuals()
    }

    /// Residual norms of the current iterate, written against the stacked
    /// consensus system whose row block for boundary `t` is
    /// `(pred(xt_{t-1}) - z_t, cur(xt_t) - z_t)`:
    ///
    /// ```text
    /// |r| = sqrt( sum_t |pred(xt_{t-1}) - z_t|^2 + |cur(xt_t) - z_t|^2 )
    /// |s| = rho * sqrt( 2 * sum_t |z_t - z_t_prev|^2 )
    /// ```
    ///
    /// (the stage block of the dual residual is
    /// `pred'(dz_{t+1}) + cur'(dz_t)`, and the two selectors write to
    /// disjoint entries, so each `dz_t` contributes twice). In adaptive
    /// mode `eps_pri = eps_abs sqrt(2nN) + eps_rel max(|Ax|, |Bz|)` and
    /// `eps_dual = eps_abs sqrt((2n+m)(N+1)) + eps_rel |A'(v_1, w_1, ...)|`
    /// over the same stacked system.
    fn gather_residuals(&self) -> ResidualReport {
        let problem = self.problem;
        let (n, m) = (problem.n, problem.m);
        let horizon = problem.horizon;
        let state = &self.state;
        let rho = self.cfg.rho;

        let mut r_sq = 0.0;
        let mut s_sq = 0.0;
        for t in 1..=horizon {
            let cur = &state.stage_primals[t][..n];
            let pred = &state.stage_primals[t - 1][n + m..];
            let z = &state.consensus[t - 1];
            let zp = &self.prev_consensus[t - 1];
            for i in 0..n {
                let rp = pred[i] - z[i];
                let rc = cur[i] - z[i];
                r_sq += rp * rp + rc * rc;
                let dz = z[i] - zp[i];
                s_sq += 2.0 * dz * dz;
            }
        }
        let primal = r_sq.sqrt();
        let dual = rho * s_sq.sqrt();

        let (eps_pri, eps_dual) = match self.cfg.tol {
            Tolerance::Direct { eps_pri, eps_dual } => (eps_pri, eps_dual),
            Tolerance::AbsRel { eps_abs, eps_rel } => {
                let mut ax_sq = 0.0;
                let mut bz_sq = 0.0;
                let mut dual_sq = 0.0;
                for t in 1..=horizon {
                    ax_sq += sum_sq(&state.stage_primals[t][..n])
                        + sum_sq(&state.stage_primals[t - 1][n + m..]);
                    bz_sq += 2.0 * sum_sq(&state.consensus[t - 1]);
                    dual_sq += sum_sq(&state.dual_current[t - 1])
                        + sum_sq(&state.dual_predicted[t - 1]);
                }
                let pri_dim = (horizon * 2 * n) as f64;
                let dual_dim = ((2 * n + m) * (horizon + 1)) as f64;
                (
                    eps_abs * pri_dim.sqrt() + eps_rel * ax_sq.sqrt().max(bz_sq.sqrt()),
                    eps_abs * dual_dim.sqrt() + eps_rel * dual_sq.sqrt(),
                )
            }
        };
        ResidualReport {
            primal,
            dual,
            eps_pri,
            eps_dual,
        }
    }

    /// The trajectory of the current iterate: `x_0` from stage 0's own
    /// copy, `x_t = z_t` for interior boundaries, inputs from each stage's
    /// copy, and a zero final input (the last stage applies none).
    pub fn extract_trajectory(&self) -> Trajectory {
        let (n, m) = (self.problem.n, self.problem.m);
        let horizon = self.problem.horizon;
        let mut states = Vec::with_capacity(horizon + 1);
        states.push(self.state.stage_primals[0][..n].to_vec());
        for t in 1..=horizon {
            states.push(self.state.consensus[t - 1].clone());
        }
        let mut inputs: Vec<Vec<f64>> = (0..horizon)
            .map(|t| self.state.stage_primals[t][n..n + m].to_vec())
            .collect();
        inputs.push(vec![0.0; m]);
        Trajectory { states, inputs }
    }

    /// Iterates until the residual test passes or the cap is reached.
    pub fn solve(&mut self) -> FtocSolution {
        let started = Instant::now();
        let mut history = Vec::new();
        let mut status = SolveStatus::MaxIterations;
        for _ in 0..self.cfg.max_iter {
            let report = self.step();
            history.push(report);
            if report.converged() {
                status = SolveStatus::Converged;
                break;
            }
        }
        let solve_time = started.elapsed();
        let trajectory = self.extract_trajectory();
        let objective = model::objective_value(self.problem, &trajectory)
            .expect("extracted trajectory has problem dimensions");
        FtocSolution {
            trajectory,
            objective,
            status,
            outer_iterations: history.len(),
            inner_iterations: self.inner_iterations(),
            inner_exhausted: self.inner_exhausted(),
            residual_history: history,
            factorization_time: self.factorization_time,
            solve_time,
        }
    }
}

/// One contiguous piece of the stage sweep: the first stage index plus
/// the workers and output slots it owns.
type ChunkJob<'w> = (usize, &'w mut [StageWorker], &'w mut [Vec<f64>]);

fn chunk_jobs<'w>(
    chunks: &[Range<usize>],
    mut workers: &'w mut [StageWorker],
    mut outs: &'w mut [Vec<f64>],
) -> Vec<ChunkJob<'w>> {
    let mut jobs = Vec::with_capacity(chunks.len());
    for r in chunks {
        let len = r.end - r.start;
        let (wa, wrest) = workers.split_at_mut(len);
        let (oa, orest) = outs.split_at_mut(len);
        workers = wrest;
        outs = orest;
        jobs.push((r.start, wa, oa));
    }
    jobs
}

/// Builds a solver and runs it to completion.
pub fn solve_ftoc(problem: &ValidatedProblem, cfg: OuterConfig) -> Result<FtocSolution, SolverError> {
    let mut solver = HorizonSolver::new(problem, cfg)?;
    Ok(solver.solve())
}
