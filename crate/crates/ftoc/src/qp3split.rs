//! Consensus splitting of a dense QP over three constraint sets.
//!
//! The QP `min 1/2 x'Mx + q'x + r  s.t.  Ax = b, Hx <= h` is copied three
//! times: one copy carries the objective, one the equalities, one the
//! inequalities (through a nonnegative slack `y` with `Hx + y = h`). All
//! copies are tied to a consensus iterate `z`. Every sub-update is then
//! analytic — two cached Cholesky solves, one cached saddle-system solve
//! and a projection onto the nonnegative orthant — so iterations cost a
//! handful of triangular solves regardless of the constraint mix:
//!
//! ```text
//! x1 = (M + rho I)^-1 (rho (z + d1) - q)            objective copy
//! x2 : rho x2 + A'nu = rho (z + d2),  A x2 = b      equality copy
//! x3 = (H'H + I)^-1 (H'(h - dy - y) + z + d3)       inequality copy
//! z  = (x1 + x2 + x3)/3
//! y  = max(h - H x3 - dy, 0)
//! d1 += z - x1    d2 += z - x2    d3 += z - x3
//! dy += y - h + H x3
//! ```
//!
//! The duals `d1, d2, d3` start at zero and keep `d1 + d2 + d3 = 0` (the
//! averaging step returns exactly what the three updates subtract), which
//! is what lets `z` be the plain mean.

use crate::linalg::{
    cholesky_factorize, kkt_factorize, norm2, project_nonneg, sum_sq, CholeskyFactor, KktFactor,
    LinalgError,
};
use crate::model::StandardQp;
use crate::{ResidualReport, SolveStatus, Tolerance};

pub const DEFAULT_INNER_MAX_ITER: usize = 2000;

/// Penalty, termination rule and iteration cap for one splitting solve.
#[derive(Debug, Clone, Copy)]
pub struct InnerConfig {
    pub rho: f64,
    pub tol: Tolerance,
    pub max_iter: usize,
}

impl InnerConfig {
    pub fn new(rho: f64) -> Self {
        InnerConfig {
            rho,
            tol: Tolerance::default_direct(),
            max_iter: DEFAULT_INNER_MAX_ITER,
        }
    }
}

/// Full iterate of the splitting: the three copies, the consensus value,
/// the slack, and every dual. Carrying it across solves is what warm
/// starting is.
#[derive(Debug, Clone, PartialEq)]
pub struct InnerState {
    pub x_obj: Vec<f64>,
    pub x_eq: Vec<f64>,
    pub x_ineq: Vec<f64>,
    pub z: Vec<f64>,
    pub dual_obj: Vec<f64>,
    pub dual_eq: Vec<f64>,
    pub dual_ineq: Vec<f64>,
    pub y: Vec<f64>,
    pub dual_slack: Vec<f64>,
    pub eq_multiplier: Vec<f64>,
    /// Total iterations applied to this state, across warm restarts.
    pub iterations: usize,
}

impl InnerState {
    pub fn zeros(n: usize, m_eq: usize, p: usize) -> Self {
        InnerState {
            x_obj: vec![0.0; n],
            x_eq: vec![0.0; n],
            x_ineq: vec![0.0; n],
            z: vec![0.0; n],
            dual_obj: vec![0.0; n],
            dual_eq: vec![0.0; n],
            dual_ineq: vec![0.0; n],
            y: vec![0.0; p],
            dual_slack: vec![0.0; p],
            eq_multiplier: vec![0.0; m_eq],
            iterations: 0,
        }
    }

    pub fn zeros_for(qp: &StandardQp) -> Self {
        InnerState::zeros(qp.n(), qp.n_eq(), qp.n_ineq())
    }

    pub fn matches(&self, qp: &StandardQp) -> bool {
        self.z.len() == qp.n()
            && self.y.len() == qp.n_ineq()
            && self.eq_multiplier.len() == qp.n_eq()
    }
}

/// The three cached factorizations. `M`, `A` and `H` never change across
/// iterations (or across outer iterations of the horizon solver), so these
/// are built once per problem and reused for every solve.
#[derive(Debug, Clone)]
pub struct InnerFactors {
    rho: f64,
    obj: CholeskyFactor,
    eq: KktFactor,
    ineq: CholeskyFactor,
}

impl InnerFactors {
    pub fn rho(&self) -> f64 {
        self.rho
    }
}

/// Builds `chol(M + rho I)`, the equality saddle factor and
/// `chol(H'H + I)`. With no inequality rows the third factor is the
/// identity, which reproduces its input bit for bit — no special casing
/// downstream.
pub fn prefactor(qp: &StandardQp, rho: f64) -> Result<InnerFactors, LinalgError> {
    assert!(rho > 0.0, "splitting penalty must be positive");
    let mut shifted = qp.hess.clone();
    shifted.add_diagonal(rho);
    let obj = cholesky_factorize(&shifted)?;
    let eq = kkt_factorize(&qp.eq_mat, rho)?;
    let mut gram = qp.ineq_mat.gram();
    gram.add_diagonal(1.0);
    let ineq = cholesky_factorize(&gram)?;
    Ok(InnerFactors { rho, obj, eq, ineq })
}

/// `x1 = (M + rho I)^-1 (rho (z + d1) - q)`.
pub fn update_x_obj(qp: &StandardQp, f: &InnerFactors, z: &[f64], dual_obj: &[f64]) -> Vec<f64> {
    let rhs: Vec<f64> = z
        .iter()
        .zip(dual_obj)
        .zip(&qp.lin)
        .map(|((zi, di), qi)| f.rho * (zi + di) - qi)
        .collect();
    f.obj.solve(&rhs).expect("objective factor matches the QP")
}

/// Equality copy: solves `rho x2 + A'nu = rho (z + d2)`, `A x2 = b`.
/// With no equality rows this collapses to `x2 = z + d2` exactly, with an
/// empty multiplier.
pub fn update_x_eq(
    qp: &StandardQp,
    f: &InnerFactors,
    z: &[f64],
    dual_eq: &[f64],
) -> (Vec<f64>, Vec<f64>) {
    if qp.n_eq() == 0 {
        let x = z.iter().zip(dual_eq).map(|(zi, di)| zi + di).collect();
        return (x, Vec::new());
    }
    let rhs: Vec<f64> = z
        .iter()
        .zip(dual_eq)
        .map(|(zi, di)| f.rho * (zi + di))
        .collect();
    f.eq
        .solve(&rhs, &qp.eq_rhs)
        .expect("equality factor matches the QP")
}

/// `x3 = (H'H + I)^-1 (H'(h - dy - y) + z + d3)`. With no inequality rows
/// the factor is the identity and this collapses to `x3 = z + d3` exactly.
pub fn update_x_ineq(
    qp: &StandardQp,
    f: &InnerFactors,
    z: &[f64],
    dual_ineq: &[f64],
    y: &[f64],
    dual_slack: &[f64],
) -> Vec<f64> {
    let v: Vec<f64> = qp
        .ineq_rhs
        .iter()
        .zip(dual_slack)
        .zip(y)
        .map(|((hi, di), yi)| hi - di - yi)
        .collect();
    let mut rhs = qp.ineq_mat.tr_matvec(&v);
    for ((ri, zi), di) in rhs.iter_mut().zip(z).zip(dual_ineq) {
        *ri = *ri + zi + di;
    }
    f.ineq.solve(&rhs).expect("inequality factor matches the QP")
}

fn mean3(a: &[f64], b: &[f64], c: &[f64]) -> Vec<f64> {
    a.iter()
        .zip(b)
        .zip(c)
        .map(|((ai, bi), ci)| (ai + bi + ci) / 3.0)
        .collect()
}

/// `h - H x3 - dy`, the value the slack is projected from.
fn pre_projection(qp: &StandardQp, hx_ineq: &[f64], dual_slack: &[f64]) -> Vec<f64> {
    qp.ineq_rhs
        .iter()
        .zip(hx_ineq)
        .zip(dual_slack)
        .map(|((hi, hxi), di)| hi - hxi - di)
        .collect()
}

/// Consensus and slack updates: `z = mean(x1, x2, x3)`,
/// `y = max(h - H x3 - dy, 0)`.
pub fn update_z_y(
    qp: &StandardQp,
    x_obj: &[f64],
    x_eq: &[f64],
    x_ineq: &[f64],
    dual_slack: &[f64],
) -> (Vec<f64>, Vec<f64>) {
    let z = mean3(x_obj, x_eq, x_ineq);
    let hx = qp.ineq_mat.matvec(x_ineq);
    let w = pre_projection(qp, &hx, dual_slack);
    (z, project_nonneg(&w))
}

/// Advances every dual in place. Call with the `x_*`, `z` and `y` fields
/// of `state` already holding the fresh iterates; the dual fields still
/// hold the previous ones.
///
/// Because `z` is the exact mean of the three copies, the plain updates
/// `d_i += z - x_i` sum to zero; the third dual is closed against the
/// other two so that identity survives floating point bit for bit. The
/// slack dual `dy += y - h + H x3` is likewise evaluated as `y - w`
/// against the recomputed pre-projection value `w = h - H x3 - dy` — the
/// same expression, but exact where the projection clipped (and it keeps
/// `dy >= 0`).
pub fn update_duals(qp: &StandardQp, state: &mut InnerState) {
    for i in 0..state.z.len() {
        state.dual_obj[i] += state.z[i] - state.x_obj[i];
        state.dual_eq[i] += state.z[i] - state.x_eq[i];
        state.dual_ineq[i] = -(state.dual_obj[i] + state.dual_eq[i]);
    }
    let hx = qp.ineq_mat.matvec(&state.x_ineq);
    let w = pre_projection(qp, &hx, &state.dual_slack);
    for i in 0..state.y.len() {
        state.dual_slack[i] = state.y[i] - w[i];
    }
}

/// Residual norms of the splitting, written against the stacked consensus
/// system whose rows are `x1 - z`, `x2 - z`, `x3 - z` and `H x3 + y - h`:
///
/// ```text
/// |r|  = sqrt(|x1-z|^2 + |x2-z|^2 + |x3-z|^2 + |Hx3 + y - h|^2)
/// |s|  = rho * sqrt(2|dz|^2 + |dz - H'dy|^2)
/// ```
///
/// with `dz`, `dy` the change of `z` and `y` over the iteration. In
/// adaptive mode the thresholds follow the same stacked system:
/// `eps_pri = eps_abs sqrt(3n+p) + eps_rel max(|Ax|, |B(z,y)|, |h|)` and
/// `eps_dual = eps_abs sqrt(3n) + eps_rel |(d1, d2, d3 + H'dy_dual)|`.
fn residual_from_parts(
    qp: &StandardQp,
    rho: f64,
    state: &InnerState,
    hx_ineq: &[f64],
    delta_z: &[f64],
    delta_y: &[f64],
    tol: &Tolerance,
) -> ResidualReport {
    let n = qp.n() as f64;
    let p = qp.n_ineq() as f64;

    let mut r_sq = 0.0;
    for i in 0..state.z.len() {
        let a = state.x_obj[i] - state.z[i];
        let b = state.x_eq[i] - state.z[i];
        let c = state.x_ineq[i] - state.z[i];
        r_sq += a * a + b * b + c * c;
    }
    for i in 0..state.y.len() {
        let d = hx_ineq[i] + state.y[i] - qp.ineq_rhs[i];
        r_sq += d * d;
    }
    let primal = r_sq.sqrt();

    let ht_dy = qp.ineq_mat.tr_matvec(delta_y);
    let mut s_sq = 0.0;
    for i in 0..delta_z.len() {
        let e = delta_z[i] - ht_dy[i];
        s_sq += 2.0 * delta_z[i] * delta_z[i] + e * e;
    }
    let dual = rho * s_sq.sqrt();

    let (eps_pri, eps_dual) = match *tol {
        Tolerance::Direct { eps_pri, eps_dual } => (eps_pri, eps_dual),
        Tolerance::AbsRel { eps_abs, eps_rel } => {
            let ax = (sum_sq(&state.x_obj)
                + sum_sq(&state.x_eq)
                + sum_sq(&state.x_ineq)
                + sum_sq(hx_ineq))
            .sqrt();
            let bzy = (3.0 * sum_sq(&state.z) + sum_sq(&state.y)).sqrt();
            let c = norm2(&qp.ineq_rhs);
            let ht_dual = qp.ineq_mat.tr_matvec(&state.dual_slack);
            let mut dual_sq = sum_sq(&state.dual_obj) + sum_sq(&state.dual_eq);
            for i in 0..state.dual_ineq.len() {
                let v = state.dual_ineq[i] + ht_dual[i];
                dual_sq += v * v;
            }
            (
                eps_abs * (3.0 * n + p).sqrt() + eps_rel * ax.max(bzy).max(c),
                eps_abs * (3.0 * n).sqrt() + eps_rel * dual_sq.sqrt(),
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

/// Residuals of `state` relative to the previous consensus and slack
/// values (for callers stepping manually).
pub fn residuals(
    qp: &StandardQp,
    rho: f64,
    state: &InnerState,
    prev_z: &[f64],
    prev_y: &[f64],
    tol: &Tolerance,
) -> ResidualReport {
    let hx = qp.ineq_mat.matvec(&state.x_ineq);
    let delta_z: Vec<f64> = state.z.iter().zip(prev_z).map(|(a, b)| a - b).collect();
    let delta_y: Vec<f64> = state.y.iter().zip(prev_y).map(|(a, b)| a - b).collect();
    residual_from_parts(qp, rho, state, &hx, &delta_z, &delta_y, tol)
}

/// One full iteration in place: the three x-updates (each reading only
/// previous-iteration values, so they could run concurrently), the
/// consensus average, the slack projection, the dual updates, and the
/// residual report for the new iterate.
pub fn step(
    qp: &StandardQp,
    f: &InnerFactors,
    state: &mut InnerState,
    tol: &Tolerance,
) -> ResidualReport {
    let x_obj = update_x_obj(qp, f, &state.z, &state.dual_obj);
    let (x_eq, nu) = update_x_eq(qp, f, &state.z, &state.dual_eq);
    let x_ineq = update_x_ineq(qp, f, &state.z, &state.dual_ineq, &state.y, &state.dual_slack);

    let hx = qp.ineq_mat.matvec(&x_ineq);
    let z = mean3(&x_obj, &x_eq, &x_ineq);
    let w = pre_projection(qp, &hx, &state.dual_slack);
    let y = project_nonneg(&w);

    let delta_z: Vec<f64> = z.iter().zip(&state.z).map(|(a, b)| a - b).collect();
    let delta_y: Vec<f64> = y.iter().zip(&state.y).map(|(a, b)| a - b).collect();

    for i in 0..z.len() {
        state.dual_obj[i] += z[i] - x_obj[i];
        state.dual_eq[i] += z[i] - x_eq[i];
        // closing the third dual against the other two keeps the zero-sum
        // identity of the averaging step exact in floating point; the
        // plain update `+= z - x3` differs by accumulated roundoff only
        state.dual_ineq[i] = -(state.dual_obj[i] + state.dual_eq[i]);
    }
    for i in 0..y.len() {
        state.dual_slack[i] = y[i] - w[i];
    }
    state.x_obj = x_obj;
    state.x_eq = x_eq;
    state.x_ineq = x_ineq;
    state.z = z;
    state.y = y;
    state.eq_multiplier = nu;
    state.iterations += 1;

    residual_from_parts(qp, f.rho, state, &hx, &delta_z, &delta_y, tol)
}

/// Result of one splitting solve. `x` is the consensus iterate.
#[derive(Debug, Clone)]
pub struct QpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    /// Iterations spent in this solve (not counting warm-start history).
    pub iterations: usize,
    pub status: SolveStatus,
    pub residuals: ResidualReport,
}

/// Runs the splitting from `warm` (or from zeros) until the residual test
/// passes or the iteration cap is reached. Exhausting the cap is a status,
/// not an error: the final iterate is still returned.
pub fn solve_prefactored(
    qp: &StandardQp,
    f: &InnerFactors,
    cfg: &InnerConfig,
    warm: Option<InnerState>,
) -> (QpSolution, InnerState) {
    assert!(cfg.max_iter >= 1, "need at least one iteration");
    debug_assert_eq!(cfg.rho, f.rho, "config and factors disagree on rho");
    let mut state = match warm {
        Some(s) => {
            assert!(s.matches(qp), "warm state sized for a different QP");
            s
        }
        None => InnerState::zeros_for(qp),
    };
    let mut iterations = 0;
    let mut status = SolveStatus::MaxIterations;
    let mut report = ResidualReport {
        primal: f64::INFINITY,
        dual: f64::INFINITY,
        eps_pri: 0.0,
        eps_dual: 0.0,
    };
    while iterations < cfg.max_iter {
        report = step(qp, f, &mut state, &cfg.tol);
        iterations += 1;
        if report.converged() {
            status = SolveStatus::Converged;
            break;
        }
    }
    let x = state.z.clone();
    let objective = qp.objective_at(&x);
    (
        QpSolution {
            x,
            objective,
            iterations,
            status,
            residuals: report,
        },
        state,
    )
}

/// Factorizes and solves in one call.
pub fn solve(qp: &StandardQp, cfg: &InnerConfig) -> Result<(QpSolution, InnerState), LinalgError> {
    let f = prefactor(qp, cfg.rho)?;
    Ok(solve_prefactored(qp, &f, cfg, None))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{norm_inf, Matrix};
    use crate::oracle;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_qp(seed: u64, n: usize, m_eq: usize, p: usize) -> StandardQp {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rand_mat = |r: usize, c: usize| {
            let data = (0..r * c).map(|_| rng.random_range(-1.0..1.0)).collect();
            Matrix::new(r, c, data).unwrap()
        };
        let mut hess = rand_mat(n, n).gram();
        hess.add_diagonal(0.4);
        let eq_mat = rand_mat(m_eq, n);
        let ineq_mat = rand_mat(p, n);
        let mut rng2 = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let lin: Vec<f64> = (0..n).map(|_| rng2.random_range(-2.0..2.0)).collect();
        let constant = rng2.random_range(-1.0..1.0);
        // pick rhs so that a known point is strictly feasible
        let x0: Vec<f64> = (0..n).map(|_| rng2.random_range(-0.5..0.5)).collect();
        let eq_rhs = eq_mat.matvec(&x0);
        let mut ineq_rhs = ineq_mat.matvec(&x0);
        for v in ineq_rhs.iter_mut() {
            *v += rng2.random_range(0.05..1.0);
        }
        StandardQp::new(hess, lin, constant, eq_mat, eq_rhs, ineq_mat, ineq_rhs).unwrap()
    }

    fn tight() -> InnerConfig {
        InnerConfig {
            rho: 1.0,
            tol: Tolerance::Direct {
                eps_pri: 1e-10,
                eps_dual: 1e-10,
            },
            max_iter: 50_000,
        }
    }

    #[test]
    fn unconstrained_quadratic_converges_to_minimum() {
        let qp = StandardQp::new(
            Matrix::identity(2),
            vec![-1.0, -2.0],
            0.5,
            Matrix::zeros(0, 2),
            vec![],
            Matrix::zeros(0, 2),
            vec![],
        )
        .unwrap();
        let (sol, state) = solve(&qp, &tight()).unwrap();
        assert!(sol.status.converged());
        assert_abs_diff_eq!(sol.x[0], 1.0, epsilon = 1e-8);
        assert_abs_diff_eq!(sol.x[1], 2.0, epsilon = 1e-8);
        assert_abs_diff_eq!(sol.objective, -2.0, epsilon = 1e-8);
        // all three copies agree at convergence
        assert!(norm_inf(&state.x_obj.iter().zip(&state.z).map(|(a, b)| a - b).collect::<Vec<_>>()) <= 1e-8);
    }

    #[test]
    fn no_equalities_collapse_is_exact() {
        // x2 must equal z + d2 bit for bit when there are no equality rows
        let qp = random_qp(3, 4, 0, 3);
        let f = prefactor(&qp, 2.5).unwrap();
        let mut state = InnerState::zeros_for(&qp);
        for _ in 0..20 {
            step(&qp, &f, &mut state, &Tolerance::default_direct());
            let expect: Vec<f64> = state
                .z
                .iter()
                .zip(&state.dual_eq)
                .map(|(z, d)| z + d)
                .collect();
            // state.x_eq was computed from the PREVIOUS z/d, so recompute
            let (x_eq, nu) = update_x_eq(&qp, &f, &state.z, &state.dual_eq);
            assert_eq!(x_eq, expect);
            assert!(nu.is_empty());
        }
    }

    #[test]
    fn no_inequalities_collapse_is_exact() {
        let qp = random_qp(4, 4, 2, 0);
        let f = prefactor(&qp, 1.0).unwrap();
        let mut state = InnerState::zeros_for(&qp);
        for _ in 0..20 {
            step(&qp, &f, &mut state, &Tolerance::default_direct());
            let x_ineq_redo = update_x_ineq(
                &qp,
                &f,
                &state.z,
                &state.dual_ineq,
                &state.y,
                &state.dual_slack,
            );
            let expect: Vec<f64> = state
                .z
                .iter()
                .zip(&state.dual_ineq)
                .map(|(z, d)| z + d)
                .collect();
            assert_eq!(x_ineq_redo, expect);
        }
    }

    #[test]
    fn consensus_is_exact_mean_every_iteration() {
        let qp = random_qp(5, 5, 2, 4);
        let f = prefactor(&qp, 3.0).unwrap();
        let mut state = InnerState::zeros_for(&qp);
        for _ in 0..50 {
            step(&qp, &f, &mut state, &Tolerance::default_direct());
            for i in 0..qp.n() {
                let mean = (state.x_obj[i] + state.x_eq[i] + state.x_ineq[i]) / 3.0;
                assert_eq!(state.z[i], mean);
            }
            assert!(state.y.iter().all(|&v| v >= 0.0));
            assert!(state.dual_slack.iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn dual_sum_stays_zero_over_long_runs() {
        // d1 + d2 + d3 = 0 must hold to 1e-14 after every iteration, even
        // over thousands of iterations
        for seed in 0..8 {
            let qp = random_qp(100 + seed, 6, 2, 5);
            let f = prefactor(&qp, 1.5).unwrap();
            let mut state = InnerState::zeros_for(&qp);
            let mut worst: f64 = 0.0;
            for _ in 0..3000 {
                step(&qp, &f, &mut state, &Tolerance::default_direct());
                for i in 0..qp.n() {
                    let s = state.dual_obj[i] + state.dual_eq[i] + state.dual_ineq[i];
                    worst = worst.max(s.abs());
                }
            }
            assert!(worst <= 1e-14, "dual drift {worst:.3e} on seed {seed}");
        }
    }

    #[test]
    fn converged_iterate_is_feasible() {
        let qp = random_qp(8, 5, 2, 4);
        let (sol, state) = solve(&qp, &tight()).unwrap();
        assert!(sol.status.converged());
        let ax = qp.eq_mat.matvec(&sol.x);
        for (l, r) in ax.iter().zip(&qp.eq_rhs) {
            assert_abs_diff_eq!(l, r, epsilon = 1e-8);
        }
        let hx = qp.ineq_mat.matvec(&sol.x);
        for (l, r) in hx.iter().zip(&qp.ineq_rhs) {
            assert!(*l <= r + 1e-8, "inequality violated: {l} > {r}");
        }
        assert!(state.y.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn matches_enumeration_oracle_on_random_qps() {
        let mut checked_active = 0;
        for seed in 0..25 {
            let n = 2 + (seed as usize % 5);
            let m_eq = seed as usize % 3;
            let p = 1 + (seed as usize % 6);
            let qp = random_qp(1000 + seed, n, m_eq, p);
            let exact = oracle::solve_qp(&qp).unwrap();
            let (sol, _) = solve(&qp, &tight()).unwrap();
            assert!(sol.status.converged(), "seed {seed} did not converge");
            let scale = 1.0 + norm_inf(&exact.x);
            for i in 0..n {
                assert!(
                    (sol.x[i] - exact.x[i]).abs() <= 1e-6 * scale,
                    "seed {seed}: x[{i}] = {} vs oracle {}",
                    sol.x[i],
                    exact.x[i]
                );
            }
            assert!(
                (sol.objective - exact.objective).abs() <= 1e-7 * (1.0 + exact.objective.abs()),
                "seed {seed}: objective {} vs {}",
                sol.objective,
                exact.objective
            );
            checked_active += exact.active_set.len();
        }
        // the suite exercises genuinely active constraints somewhere
        assert!(checked_active > 0);
    }

    #[test]
    fn warm_restart_of_a_converged_solve_is_immediate() {
        let qp = random_qp(21, 5, 2, 4);
        let f = prefactor(&qp, 1.0).unwrap();
        let cfg = tight();
        let (first, state) = solve_prefactored(&qp, &f, &cfg, None);
        assert!(first.status.converged());
        let total_before = state.iterations;
        let (second, state2) = solve_prefactored(&qp, &f, &cfg, Some(state));
        assert!(second.status.converged());
        assert!(
            second.iterations <= 2,
            "warm restart took {} iterations",
            second.iterations
        );
        assert_eq!(state2.iterations, total_before + second.iterations);
    }

    #[test]
    fn residuals_match_explicit_consensus_matrices() {
        // n=5, m_eq=2, p=3: build the stacked consensus system explicitly
        // and compare both residual norms at every iteration
        let qp = random_qp(33, 5, 2, 3);
        let (n, p) = (qp.n(), qp.n_ineq());
        let rho = 2.0;
        let f = prefactor(&qp, rho).unwrap();

        // A_res (x1,x2,x3) = (x1, x2, x3, H x3); B_res (z,y) adds
        // (-z,-z,-z,y); c_res = (0,0,0,h)
        let mut a_res = Matrix::zeros(3 * n + p, 3 * n);
        for i in 0..n {
            a_res.set(i, i, 1.0);
            a_res.set(n + i, n + i, 1.0);
            a_res.set(2 * n + i, 2 * n + i, 1.0);
        }
        for i in 0..p {
            for j in 0..n {
                a_res.set(3 * n + i, 2 * n + j, qp.ineq_mat.get(i, j));
            }
        }
        let mut b_res = Matrix::zeros(3 * n + p, n + p);
        for i in 0..n {
            b_res.set(i, i, -1.0);
            b_res.set(n + i, i, -1.0);
            b_res.set(2 * n + i, i, -1.0);
        }
        for i in 0..p {
            b_res.set(3 * n + i, n + i, 1.0);
        }
        let mut c_res = vec![0.0; 3 * n + p];
        c_res[3 * n..].copy_from_slice(&qp.ineq_rhs);

        let mut state = InnerState::zeros_for(&qp);
        let tol = Tolerance::default_direct();
        for _ in 0..60 {
            let prev_z = state.z.clone();
            let prev_y = state.y.clone();
            let report = step(&qp, &f, &mut state, &tol);

            let mut xs = state.x_obj.clone();
            xs.extend_from_slice(&state.x_eq);
            xs.extend_from_slice(&state.x_ineq);
            let mut zy = state.z.clone();
            zy.extend_from_slice(&state.y);
            let ax = a_res.matvec(&xs);
            let bzy = b_res.matvec(&zy);
            let r_vec: Vec<f64> = ax
                .iter()
                .zip(&bzy)
                .zip(&c_res)
                .map(|((a, b), c)| a + b - c)
                .collect();
            let r_explicit = norm2(&r_vec);

            let mut dzy: Vec<f64> = state.z.iter().zip(&prev_z).map(|(a, b)| a - b).collect();
            dzy.extend(state.y.iter().zip(&prev_y).map(|(a, b)| a - b));
            let b_dz = b_res.matvec(&dzy);
            let s_vec = a_res.tr_matvec(&b_dz);
            let s_explicit = rho * norm2(&s_vec);

            assert!(
                (report.primal - r_explicit).abs() <= 1e-12 * (1.0 + r_explicit),
                "primal {} vs explicit {}",
                report.primal,
                r_explicit
            );
            assert!(
                (report.dual - s_explicit).abs() <= 1e-12 * (1.0 + s_explicit),
                "dual {} vs explicit {}",
                report.dual,
                s_explicit
            );

            // the manual-residual entry point agrees with the step report
            let redo = residuals(&qp, rho, &state, &prev_z, &prev_y, &tol);
            assert_eq!(redo.primal, report.primal);
            assert_eq!(redo.dual, report.dual);
        }
    }

    #[test]
    fn absrel_mode_converges_and_scales_thresholds() {
        let qp = random_qp(55, 5, 2, 4);
        let cfg = InnerConfig {
            rho: 1.0,
            tol: Tolerance::AbsRel {
                eps_abs: 1e-8,
                eps_rel: 1e-8,
            },
            max_iter: 100_000,
        };
        let (sol, _) = solve(&qp, &cfg).unwrap();
        assert!(sol.status.converged());
        assert!(sol.residuals.eps_pri > 0.0 && sol.residuals.eps_dual > 0.0);
        let exact = oracle::solve_qp(&qp).unwrap();
        assert!(norm_inf(
            &sol.x
                .iter()
                .zip(&exact.x)
                .map(|(a, b)| a - b)
                .collect::<Vec<_>>()
        ) <= 1e-5 * (1.0 + norm_inf(&exact.x)));
    }

    #[test]
    fn max_iterations_is_a_status_not_an_error() {
        let qp = random_qp(66, 6, 2, 5);
        let cfg = InnerConfig {
            rho: 1.0,
            tol: Tolerance::Direct {
                eps_pri: 1e-14,
                eps_dual: 1e-14,
            },
            max_iter: 5,
        };
        let (sol, state) = solve(&qp, &cfg).unwrap();
        assert_eq!(sol.status, SolveStatus::MaxIterations);
        assert_eq!(sol.iterations, 5);
        assert_eq!(state.iterations, 5);
        assert!(sol.x.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn rank_deficient_equalities_fail_at_prefactor() {
        let qp = StandardQp::new(
            Matrix::identity(2),
            vec![0.0; 2],
            0.0,
            Matrix::from_rows(&[vec![1.0, 1.0], vec![2.0, 2.0]]).unwrap(),
            vec![1.0, 2.0],
            Matrix::zeros(0, 2),
            vec![],
        )
        .unwrap();
        assert!(matches!(
            prefactor(&qp, 1.0),
            Err(LinalgError::RankDeficient)
        ));
    }

    #[test]
    fn rho_independent_structure_reuses_equality_factor() {
        // prefactoring twice at the same rho gives bitwise-equal solves
        let qp = random_qp(77, 4, 2, 3);
        let f1 = prefactor(&qp, 2.0).unwrap();
        let f2 = prefactor(&qp, 2.0).unwrap();
        let mut s1 = InnerState::zeros_for(&qp);
        let mut s2 = InnerState::zeros_for(&qp);
        for _ in 0..25 {
            step(&qp, &f1, &mut s1, &Tolerance::default_direct());
            step(&qp, &f2, &mut s2, &Tolerance::default_direct());
        }
        assert_eq!(s1, s2);
    }
}
