//! Problem data for quadratic finite-time optimal control and the stage
//! assembly used by the horizon-splitting solver.
//!
//! A problem over horizon `N` couples states only between neighbouring
//! stages. Giving every stage its own copy of the boundary states yields
//! stage variables `xt = (x_t, u_t, x_next)` of width `2n + m`; two
//! selectors pick the copies back out: the current state (first `n`
//! entries) and the predicted next state (last `n` entries). Consensus
//! between the copies is what the outer solver enforces.

use crate::linalg::{norm_inf, Matrix};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("stage {stage} out of range for horizon {horizon}")]
    StageOutOfRange { stage: usize, horizon: usize },
    #[error("coupling mismatch: {0}")]
    CouplingMismatch(&'static str),
}

/// All violations found by [`validate`], joined into one message.
#[derive(Debug, Error)]
#[error("invalid problem: {}", violations.join("; "))]
pub struct ValidationError {
    pub violations: Vec<String>,
}

/// Per-stage inequality `mat * (x_t, u_t) <= rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct StageInequality {
    pub mat: Matrix,
    pub rhs: Vec<f64>,
}

impl StageInequality {
    pub fn none(n: usize, m: usize) -> Self {
        StageInequality {
            mat: Matrix::zeros(0, n + m),
            rhs: Vec::new(),
        }
    }

    pub fn rows(&self) -> usize {
        self.mat.rows()
    }
}

/// Quadratic finite-time optimal control problem
///
/// ```text
/// min  1/2 * sum_{t=0..N} (x_t' Q x_t + u_t' R u_t)
/// s.t. x_{t+1} = A_t x_t + B_t u_t + c_t      t = 0..N-1
///      H_t (x_t, u_t) <= h_t                  t = 0..N
///      x_0 = x_init
/// ```
///
/// `dynamics_a`, `dynamics_b` and `disturbance` have length `N`;
/// `stage_ineq` has length `N + 1`. The last stage has no input in the
/// cost-relevant sense, so `H_N` must have zero input columns.
#[derive(Debug, Clone)]
pub struct FtocProblem {
    pub n: usize,
    pub m: usize,
    pub horizon: usize,
    pub state_cost: Matrix,
    pub input_cost: Matrix,
    pub dynamics_a: Vec<Matrix>,
    pub dynamics_b: Vec<Matrix>,
    pub disturbance: Vec<Vec<f64>>,
    pub x_init: Vec<f64>,
    pub stage_ineq: Vec<StageInequality>,
}

/// Proof token that [`validate`] accepted the wrapped problem. Solvers
/// only take validated problems so they can index stages without
/// re-checking shapes.
#[derive(Debug, Clone)]
pub struct ValidatedProblem {
    p: FtocProblem,
}

impl ValidatedProblem {
    pub fn get(&self) -> &FtocProblem {
        &self.p
    }

    pub fn into_inner(self) -> FtocProblem {
        self.p
    }

    /// Width `2n + m` of one stage variable.
    pub fn stage_width(&self) -> usize {
        2 * self.p.n + self.p.m
    }

    pub fn total_ineq_rows(&self) -> usize {
        self.p.stage_ineq.iter().map(StageInequality::rows).sum()
    }
}

impl std::ops::Deref for ValidatedProblem {
    type Target = FtocProblem;

    fn deref(&self) -> &FtocProblem {
        &self.p
    }
}

fn check_symmetric_psd(mat: &Matrix, name: &str, strict: bool, out: &mut Vec<String>) {
    let n = mat.rows();
    let scale = mat.max_abs().max(1.0);
    for i in 0..n {
        for j in 0..i {
            if (mat.get(i, j) - mat.get(j, i)).abs() > 1e-12 * scale {
                out.push(format!("{name} is not symmetric"));
                return;
            }
        }
    }
    let mut shifted = mat.clone();
    if !strict {
        // tiny ridge so semidefinite matrices pass the strict factorization
        shifted.add_diagonal(1e-10 * scale);
    }
    if crate::linalg::cholesky_factorize(&shifted).is_err() {
        out.push(format!(
            "{name} is not positive {}definite",
            if strict { "" } else { "semi" }
        ));
    }
}

fn all_finite(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite())
}

/// Checks every structural requirement and returns the problem wrapped as
/// proof. All violations are collected and reported together, not just the
/// first.
pub fn validate(p: FtocProblem) -> Result<ValidatedProblem, ValidationError> {
    let mut v = Vec::new();
    let (n, m, horizon) = (p.n, p.m, p.horizon);
    if horizon == 0 {
        v.push("horizon must be at least 1".to_string());
    }
    if n == 0 {
        v.push("state dimension must be at least 1".to_string());
    }
    if p.state_cost.rows() != n || p.state_cost.cols() != n {
        v.push(format!(
            "state cost must be {n}x{n}, got {}x{}",
            p.state_cost.rows(),
            p.state_cost.cols()
        ));
    } else {
        check_symmetric_psd(&p.state_cost, "state cost", false, &mut v);
    }
    if p.input_cost.rows() != m || p.input_cost.cols() != m {
        v.push(format!(
            "input cost must be {m}x{m}, got {}x{}",
            p.input_cost.rows(),
            p.input_cost.cols()
        ));
    } else if m > 0 {
        check_symmetric_psd(&p.input_cost, "input cost", true, &mut v);
    }
    if p.dynamics_a.len() != horizon {
        v.push(format!(
            "expected {horizon} state transition matrices, got {}",
            p.dynamics_a.len()
        ));
    }
    if p.dynamics_b.len() != horizon {
        v.push(format!(
            "expected {horizon} input matrices, got {}",
            p.dynamics_b.len()
        ));
    }
    if p.disturbance.len() != horizon {
        v.push(format!(
            "expected {horizon} disturbance vectors, got {}",
            p.disturbance.len()
        ));
    }
    for (t, a) in p.dynamics_a.iter().enumerate() {
        if a.rows() != n || a.cols() != n {
            v.push(format!("state transition at stage {t} must be {n}x{n}"));
        }
    }
    for (t, b) in p.dynamics_b.iter().enumerate() {
        if b.rows() != n || b.cols() != m {
            v.push(format!("input matrix at stage {t} must be {n}x{m}"));
        }
    }
    for (t, c) in p.disturbance.iter().enumerate() {
        if c.len() != n {
            v.push(format!("disturbance at stage {t} must have length {n}"));
        } else if !all_finite(c) {
            v.push(format!("disturbance at stage {t} has non-finite entries"));
        }
    }
    if p.x_init.len() != n {
        v.push(format!(
            "initial state must have length {n}, got {}",
            p.x_init.len()
        ));
    } else if !all_finite(&p.x_init) {
        v.push("initial state has non-finite entries".to_string());
    }
    if p.stage_ineq.len() != horizon + 1 {
        v.push(format!(
            "expected {} stage inequality blocks, got {}",
            horizon + 1,
            p.stage_ineq.len()
        ));
    }
    for (t, si) in p.stage_ineq.iter().enumerate() {
        if si.mat.cols() != n + m {
            v.push(format!(
                "inequality matrix at stage {t} must have {} columns, got {}",
                n + m,
                si.mat.cols()
            ));
        }
        if si.rhs.len() != si.mat.rows() {
            v.push(format!(
                "inequality right-hand side at stage {t} must have length {}, got {}",
                si.mat.rows(),
                si.rhs.len()
            ));
        } else if !all_finite(&si.rhs) {
            v.push(format!(
                "inequality right-hand side at stage {t} has non-finite entries"
            ));
        }
        // the last stage carries no real input: its input columns must vanish
        if t == horizon {
            let input_cols_zero = (0..si.mat.rows())
                .all(|i| (n..n + m).all(|j| si.mat.get(i, j) == 0.0));
            if !input_cols_zero {
                v.push("inequality at the last stage touches input columns".to_string());
            }
        }
    }
    if v.is_empty() {
        Ok(ValidatedProblem { p })
    } else {
        Err(ValidationError { violations: v })
    }
}

/// Position of a stage inside the horizon. The first stage has no
/// current-state consensus (its state is pinned to `x_init`), the last has
/// no predicted-state consensus.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StageRole {
    First,
    Middle(usize),
    Last,
}

impl StageRole {
    pub fn for_stage(t: usize, horizon: usize) -> Result<StageRole, ModelError> {
        if t > horizon {
            return Err(ModelError::StageOutOfRange { stage: t, horizon });
        }
        Ok(if t == 0 {
            StageRole::First
        } else if t == horizon {
            StageRole::Last
        } else {
            StageRole::Middle(t)
        })
    }

    pub fn index(&self, horizon: usize) -> usize {
        match self {
            StageRole::First => 0,
            StageRole::Middle(t) => *t,
            StageRole::Last => horizon,
        }
    }

    /// Whether this stage's current state participates in consensus.
    pub fn couples_current(&self) -> bool {
        !matches!(self, StageRole::First)
    }

    /// Whether this stage predicts the next state.
    pub fn couples_next(&self) -> bool {
        !matches!(self, StageRole::Last)
    }
}

/// Splits a stage vector of width `2n + m` into
/// `(current state, input, predicted next state)`.
pub fn stage_parts(n: usize, m: usize, v: &[f64]) -> (&[f64], &[f64], &[f64]) {
    debug_assert_eq!(v.len(), 2 * n + m);
    (&v[..n], &v[n..n + m], &v[n + m..])
}

/// The matrices that define one stage subproblem in explicit form: the
/// block cost, the dynamics rows, and the two state selectors. Mostly a
/// test aid — the solver slices instead of multiplying by selectors.
#[derive(Debug, Clone)]
pub struct StageMatrices {
    /// `blkdiag(Q, R, 0)`, size `(2n+m) x (2n+m)`.
    pub cost: Matrix,
    /// `[-A_t  -B_t  I]`, `None` at the last stage.
    pub dynamics: Option<Matrix>,
    /// Picks the current state: `[I 0 0]`.
    pub select_current: Matrix,
    /// Picks the predicted next state: `[0 0 I]`.
    pub select_predicted: Matrix,
}

pub fn stage_matrices(p: &ValidatedProblem, t: usize) -> Result<StageMatrices, ModelError> {
    let (n, m) = (p.n, p.m);
    if t > p.horizon {
        return Err(ModelError::StageOutOfRange {
            stage: t,
            horizon: p.horizon,
        });
    }
    let w = 2 * n + m;
    let mut cost = Matrix::zeros(w, w);
    for i in 0..n {
        for j in 0..n {
            cost.set(i, j, p.state_cost.get(i, j));
        }
    }
    for i in 0..m {
        for j in 0..m {
            cost.set(n + i, n + j, p.input_cost.get(i, j));
        }
    }
    let dynamics = if t < p.horizon {
        let mut f = Matrix::zeros(n, w);
        for i in 0..n {
            for j in 0..n {
                f.set(i, j, -p.dynamics_a[t].get(i, j));
            }
            for j in 0..m {
                f.set(i, n + j, -p.dynamics_b[t].get(i, j));
            }
            f.set(i, n + m + i, 1.0);
        }
        Some(f)
    } else {
        None
    };
    let mut select_current = Matrix::zeros(n, w);
    let mut select_predicted = Matrix::zeros(n, w);
    for i in 0..n {
        select_current.set(i, i, 1.0);
        select_predicted.set(i, n + m + i, 1.0);
    }
    Ok(StageMatrices {
        cost,
        dynamics,
        select_current,
        select_predicted,
    })
}

/// `min 1/2 x'Mx + q'x + r  s.t.  A x = b,  H x <= h` with dense data.
/// Equality and inequality blocks may have zero rows.
#[derive(Debug, Clone)]
pub struct StandardQp {
    pub hess: Matrix,
    pub lin: Vec<f64>,
    pub constant: f64,
    pub eq_mat: Matrix,
    pub eq_rhs: Vec<f64>,
    pub ineq_mat: Matrix,
    pub ineq_rhs: Vec<f64>,
}

impl StandardQp {
    pub fn new(
        hess: Matrix,
        lin: Vec<f64>,
        constant: f64,
        eq_mat: Matrix,
        eq_rhs: Vec<f64>,
        ineq_mat: Matrix,
        ineq_rhs: Vec<f64>,
    ) -> Result<Self, ModelError> {
        let qp = StandardQp {
            hess,
            lin,
            constant,
            eq_mat,
            eq_rhs,
            ineq_mat,
            ineq_rhs,
        };
        qp.check_dims()?;
        Ok(qp)
    }

    pub fn check_dims(&self) -> Result<(), ModelError> {
        let n = self.hess.rows();
        if !self.hess.is_square() {
            return Err(ModelError::Dimension("objective matrix must be square".into()));
        }
        if self.lin.len() != n {
            return Err(ModelError::Dimension(format!(
                "linear term length {} != {n}",
                self.lin.len()
            )));
        }
        if self.eq_mat.cols() != n || self.eq_rhs.len() != self.eq_mat.rows() {
            return Err(ModelError::Dimension("equality block shape mismatch".into()));
        }
        if self.ineq_mat.cols() != n || self.ineq_rhs.len() != self.ineq_mat.rows() {
            return Err(ModelError::Dimension("inequality block shape mismatch".into()));
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.hess.rows()
    }

    pub fn n_eq(&self) -> usize {
        self.eq_mat.rows()
    }

    pub fn n_ineq(&self) -> usize {
        self.ineq_mat.rows()
    }

    /// `1/2 x'Mx + q'x + r`.
    pub fn objective_at(&self, x: &[f64]) -> f64 {
        0.5 * self.hess.quad_form(x) + crate::linalg::dot(&self.lin, x) + self.constant
    }
}

/// One consensus attachment: the agreed value and its scaled dual.
#[derive(Debug, Clone, Copy)]
pub struct ConsensusPair<'a> {
    pub consensus: &'a [f64],
    pub dual: &'a [f64],
}

/// Consensus data a stage couples to: `current` ties the stage's own state
/// to the consensus value (absent at the first stage), `next` ties its
/// predicted state (absent at the last stage).
#[derive(Debug, Clone, Copy, Default)]
pub struct StageCoupling<'a> {
    pub current: Option<ConsensusPair<'a>>,
    pub next: Option<ConsensusPair<'a>>,
}

/// Builds the parts of a stage QP that never change across outer
/// iterations: the quadratic block, equality rows and inequality rows.
/// The linear term and constant are zeroed; [`set_stage_linear`] fills
/// them.
pub fn stage_qp_template(
    p: &ValidatedProblem,
    role: StageRole,
    rho: f64,
) -> Result<StandardQp, ModelError> {
    assert!(rho > 0.0, "stage assembly needs rho > 0");
    let (n, m) = (p.n, p.m);
    let w = 2 * n + m;
    let t = role.index(p.horizon);
    if let StageRole::Middle(tt) = role {
        if tt == 0 || tt >= p.horizon {
            return Err(ModelError::StageOutOfRange {
                stage: tt,
                horizon: p.horizon,
            });
        }
    }

    // M = blkdiag(Q, R, 0) + rho * (selector weights on coupled blocks)
    let mut hess = Matrix::zeros(w, w);
    for i in 0..n {
        for j in 0..n {
            hess.set(i, j, p.state_cost.get(i, j));
        }
    }
    for i in 0..m {
        for j in 0..m {
            hess.set(n + i, n + j, p.input_cost.get(i, j));
        }
    }
    if role.couples_current() {
        for i in 0..n {
            hess.set(i, i, hess.get(i, i) + rho);
        }
    }
    if role.couples_next() {
        for i in 0..n {
            hess.set(n + m + i, n + m + i, hess.get(n + m + i, n + m + i) + rho);
        }
    }

    // equality rows: the first stage pins its state to x_init on top of
    // its dynamics rows; middle stages keep only dynamics; the last has
    // none
    let (eq_mat, eq_rhs) = match role {
        StageRole::First => {
            let mut a = Matrix::zeros(2 * n, w);
            for i in 0..n {
                a.set(i, i, 1.0);
            }
            fill_dynamics_rows(&mut a, n, p, 0);
            let mut b = p.x_init.clone();
            b.extend_from_slice(&p.disturbance[0]);
            (a, b)
        }
        StageRole::Middle(t) => {
            let mut a = Matrix::zeros(n, w);
            fill_dynamics_rows(&mut a, 0, p, t);
            (a, p.disturbance[t].clone())
        }
        StageRole::Last => (Matrix::zeros(0, w), Vec::new()),
    };

    // inequality rows act on (x_t, u_t); the predicted block is free
    let si = &p.stage_ineq[t];
    let mut ineq = Matrix::zeros(si.rows(), w);
    for i in 0..si.rows() {
        for j in 0..n + m {
            ineq.set(i, j, si.mat.get(i, j));
        }
    }

    StandardQp::new(hess, vec![0.0; w], 0.0, eq_mat, eq_rhs, ineq, si.rhs.clone())
}

fn fill_dynamics_rows(a: &mut Matrix, row0: usize, p: &ValidatedProblem, t: usize) {
    let (n, m) = (p.n, p.m);
    for i in 0..n {
        for j in 0..n {
            a.set(row0 + i, j, -p.dynamics_a[t].get(i, j));
        }
        for j in 0..m {
            a.set(row0 + i, n + j, -p.dynamics_b[t].get(i, j));
        }
        a.set(row0 + i, n + m + i, 1.0);
    }
}

/// Writes the outer-iteration-dependent linear term and constant into a
/// stage QP built by [`stage_qp_template`]:
///
/// ```text
/// q = -rho * (S_cur'(zc + wc) + S_pred'(zp + vp))
/// r =  rho/2 * (zc'zc + zp'zp) + rho * (wc'zc + vp'zp)
/// ```
///
/// where each term is present only when the corresponding coupling is.
pub fn set_stage_linear(
    p: &ValidatedProblem,
    role: StageRole,
    rho: f64,
    coupling: &StageCoupling,
    qp: &mut StandardQp,
) -> Result<(), ModelError> {
    let (n, m) = (p.n, p.m);
    if role.couples_current() != coupling.current.is_some() {
        return Err(ModelError::CouplingMismatch(
            "current-state coupling does not match the stage role",
        ));
    }
    if role.couples_next() != coupling.next.is_some() {
        return Err(ModelError::CouplingMismatch(
            "predicted-state coupling does not match the stage role",
        ));
    }
    qp.lin.iter_mut().for_each(|v| *v = 0.0);
    let mut constant = 0.0;
    if let Some(cur) = &coupling.current {
        if cur.consensus.len() != n || cur.dual.len() != n {
            return Err(ModelError::Dimension(
                "current coupling vectors must have the state length".into(),
            ));
        }
        for i in 0..n {
            qp.lin[i] = -rho * (cur.consensus[i] + cur.dual[i]);
            constant += 0.5 * rho * cur.consensus[i] * cur.consensus[i]
                + rho * cur.dual[i] * cur.consensus[i];
        }
    }
    if let Some(next) = &coupling.next {
        if next.consensus.len() != n || next.dual.len() != n {
            return Err(ModelError::Dimension(
                "predicted coupling vectors must have the state length".into(),
            ));
        }
        for i in 0..n {
            qp.lin[n + m + i] = -rho * (next.consensus[i] + next.dual[i]);
            constant += 0.5 * rho * next.consensus[i] * next.consensus[i]
                + rho * next.dual[i] * next.consensus[i];
        }
    }
    qp.constant = constant;
    Ok(())
}

/// Template plus linear fill in one call.
pub fn assemble_stage_qp(
    p: &ValidatedProblem,
    role: StageRole,
    rho: f64,
    coupling: &StageCoupling,
) -> Result<StandardQp, ModelError> {
    let mut qp = stage_qp_template(p, role, rho)?;
    set_stage_linear(p, role, rho, coupling, &mut qp)?;
    Ok(qp)
}

/// State and input sequences over the horizon. `states` has length
/// `N + 1`; `inputs` too, with the final input fixed to zero (the last
/// stage applies no input).
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub states: Vec<Vec<f64>>,
    pub inputs: Vec<Vec<f64>>,
}

fn check_trajectory_dims(p: &ValidatedProblem, traj: &Trajectory) -> Result<(), ModelError> {
    if traj.states.len() != p.horizon + 1 || traj.inputs.len() != p.horizon + 1 {
        return Err(ModelError::Dimension(format!(
            "trajectory must hold {} states and inputs",
            p.horizon + 1
        )));
    }
    if traj.states.iter().any(|x| x.len() != p.n)
        || traj.inputs.iter().any(|u| u.len() != p.m)
    {
        return Err(ModelError::Dimension(
            "trajectory entry with wrong dimension".into(),
        ));
    }
    Ok(())
}

/// `1/2 * sum_t (x_t'Qx_t + u_t'Ru_t)`.
pub fn objective_value(p: &ValidatedProblem, traj: &Trajectory) -> Result<f64, ModelError> {
    check_trajectory_dims(p, traj)?;
    let mut acc = 0.0;
    for t in 0..=p.horizon {
        acc += 0.5 * p.state_cost.quad_form(&traj.states[t]);
        if p.m > 0 {
            acc += 0.5 * p.input_cost.quad_form(&traj.inputs[t]);
        }
    }
    Ok(acc)
}

/// Worst constraint violations of a trajectory, each as an infinity norm.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityReport {
    /// `|x_0 - x_init|`.
    pub initial: f64,
    /// Worst dynamics defect `|x_{t+1} - A_t x_t - B_t u_t - c_t|`.
    pub max_dynamics: f64,
    pub worst_dynamics_stage: Option<usize>,
    /// Worst positive part of `H_t (x_t, u_t) - h_t`.
    pub max_inequality: f64,
    pub worst_inequality_stage: Option<usize>,
    pub feasible: bool,
}

pub fn check_feasibility(
    p: &ValidatedProblem,
    traj: &Trajectory,
    tol: f64,
) -> Result<FeasibilityReport, ModelError> {
    check_trajectory_dims(p, traj)?;
    let initial: f64 = traj.states[0]
        .iter()
        .zip(&p.x_init)
        .fold(0.0, |acc: f64, (a, b)| acc.max((a - b).abs()));

    let mut max_dynamics = 0.0;
    let mut worst_dynamics_stage = None;
    for t in 0..p.horizon {
        let mut pred = p.dynamics_a[t].matvec(&traj.states[t]);
        let bu = p.dynamics_b[t].matvec(&traj.inputs[t]);
        for i in 0..p.n {
            pred[i] += bu[i] + p.disturbance[t][i];
            pred[i] -= traj.states[t + 1][i];
        }
        let defect = norm_inf(&pred);
        if defect > max_dynamics {
            max_dynamics = defect;
            worst_dynamics_stage = Some(t);
        }
    }

    let mut max_inequality = 0.0;
    let mut worst_inequality_stage = None;
    for t in 0..=p.horizon {
        let si = &p.stage_ineq[t];
        if si.rows() == 0 {
            continue;
        }
        let mut xu = traj.states[t].clone();
        xu.extend_from_slice(&traj.inputs[t]);
        let hx = si.mat.matvec(&xu);
        let viol = hx
            .iter()
            .zip(&si.rhs)
            .fold(0.0, |acc: f64, (lhs, rhs)| acc.max(lhs - rhs));
        if viol > max_inequality {
            max_inequality = viol;
            worst_inequality_stage = Some(t);
        }
    }

    let feasible = initial <= tol && max_dynamics <= tol && max_inequality <= tol;
    Ok(FeasibilityReport {
        initial,
        max_dynamics,
        worst_dynamics_stage,
        max_inequality,
        worst_inequality_stage,
        feasible,
    })
}

/// Counts inequality rows that hold with (near-)equality along the
/// trajectory: rows whose slack `rhs - row * (x_t, u_t)` is at most `tol`.
/// The count is a total over all stages; violated rows count as active.
pub fn count_active_rows(
    p: &ValidatedProblem,
    traj: &Trajectory,
    tol: f64,
) -> Result<usize, ModelError> {
    check_trajectory_dims(p, traj)?;
    let mut active = 0;
    for t in 0..=p.horizon {
        let si = &p.stage_ineq[t];
        if si.rows() == 0 {
            continue;
        }
        let mut xu = traj.states[t].clone();
        xu.extend_from_slice(&traj.inputs[t]);
        let hx = si.mat.matvec(&xu);
        active += hx
            .iter()
            .zip(&si.rhs)
            .filter(|(lhs, rhs)| *rhs - **lhs <= tol)
            .count();
    }
    Ok(active)
}

/// Simulates the dynamics from `x_init` under the given inputs
/// (`inputs.len() == N`; the trailing zero input is appended).
pub fn rollout(p: &ValidatedProblem, inputs: &[Vec<f64>]) -> Result<Trajectory, ModelError> {
    if inputs.len() != p.horizon {
        return Err(ModelError::Dimension(format!(
            "rollout needs {} inputs, got {}",
            p.horizon,
            inputs.len()
        )));
    }
    if inputs.iter().any(|u| u.len() != p.m) {
        return Err(ModelError::Dimension("rollout input with wrong length".into()));
    }
    let mut states = vec![p.x_init.clone()];
    for t in 0..p.horizon {
        let mut next = p.dynamics_a[t].matvec(&states[t]);
        let bu = p.dynamics_b[t].matvec(&inputs[t]);
        for i in 0..p.n {
            next[i] += bu[i] + p.disturbance[t][i];
        }
        states.push(next);
    }
    let mut inputs = inputs.to_vec();
    inputs.push(vec![0.0; p.m]);
    Ok(Trajectory { states, inputs })
}
