//! Brute-force reference solver for small QPs.
//!
//! Enumerates every subset of the inequality rows as a trial active set,
//! solves the resulting equality-constrained KKT system with a local
//! Gauss-elimination routine (deliberately independent from the Cholesky
//! path in [`crate::linalg`]), and keeps the best candidate that passes
//! primal and dual feasibility. Exponential in the number of inequality
//! rows, so capped at [`MAX_ENUM_ROWS`] — its whole point is to be an
//! unarguable yardstick for the iterative solvers on small instances.

use crate::linalg::Matrix;
use crate::model::{StandardQp, Trajectory, ValidatedProblem};
use thiserror::Error;

/// Hard cap on inequality rows; `2^16` subsets is the most the exhaustive
/// scan is allowed to visit.
pub const MAX_ENUM_ROWS: usize = 16;

/// Multipliers on active rows may dip this far below zero before the
/// candidate is rejected — pure roundoff slack.
pub const MULTIPLIER_SLACK: f64 = 1e-10;

/// Inactive rows may overshoot their bound by this much — roundoff from
/// the candidate KKT solve.
pub const INACTIVE_SLACK: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("no active set yields a feasible KKT point; problem is infeasible")]
    Infeasible,
    #[error("{rows} inequality rows exceed the enumeration cap of {max}")]
    EnumerationLimit { rows: usize, max: usize },
}

#[derive(Debug, Clone)]
pub struct OracleSolution {
    pub x: Vec<f64>,
    /// Multipliers of the equality rows.
    pub eq_multipliers: Vec<f64>,
    /// Multipliers of all inequality rows; zero on inactive rows.
    pub ineq_multipliers: Vec<f64>,
    /// Indices of the rows held at equality, ascending.
    pub active_set: Vec<usize>,
    pub objective: f64,
    /// Trial subsets whose KKT system was singular and had to be skipped
    /// (redundant row combinations).
    pub singular_subsets: usize,
}

/// Dense Gauss elimination with partial pivoting. Returns `None` when a
/// pivot collapses, which the enumeration treats as "this subset is
/// redundant".
fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    let scale = a
        .iter()
        .flat_map(|row| row.iter())
        .fold(0.0f64, |acc, v| acc.max(v.abs()))
        .max(1.0);
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() <= 1e-12 * scale {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for i in col + 1..n {
            let f = a[i][col] / a[col][col];
            if f != 0.0 {
                for j in col..n {
                    a[i][j] -= f * a[col][j];
                }
                b[i] -= f * b[col];
            }
        }
    }
    for i in (0..n).rev() {
        let mut v = b[i];
        for j in i + 1..n {
            v -= a[i][j] * b[j];
        }
        b[i] = v / a[i][i];
    }
    b.iter().all(|v| v.is_finite()).then_some(b)
}

struct Candidate {
    objective: f64,
    active: Vec<usize>,
    x: Vec<f64>,
    nu: Vec<f64>,
    lambda: Vec<f64>,
}

/// Total order on candidates: lowest objective, then fewest active rows,
/// then lexicographically smallest index list. Total and antisymmetric,
/// so a parallel reduction picks the same winner as a sequential scan.
fn better(a: &Candidate, b: &Candidate) -> std::cmp::Ordering {
    a.objective
        .total_cmp(&b.objective)
        .then(a.active.len().cmp(&b.active.len()))
        .then_with(|| a.active.cmp(&b.active))
}

fn try_subset(qp: &StandardQp, mask: u32) -> Result<Option<Candidate>, ()> {
    let n = qp.n();
    let m_eq = qp.n_eq();
    let p = qp.n_ineq();
    let active: Vec<usize> = (0..p).filter(|i| mask & (1 << i) != 0).collect();
    let s = active.len();
    let dim = n + m_eq + s;

    // [ M  A'  Hs' ] [x ]   [-q ]
    // [ A  0   0   ] [nu] = [ b ]
    // [ Hs 0   0   ] [la]   [ hs]
    let mut kkt = vec![vec![0.0; dim]; dim];
    let mut rhs = vec![0.0; dim];
    for i in 0..n {
        for j in 0..n {
            kkt[i][j] = qp.hess.get(i, j);
        }
        for k in 0..m_eq {
            kkt[i][n + k] = qp.eq_mat.get(k, i);
            kkt[n + k][i] = qp.eq_mat.get(k, i);
        }
        for (k, &row) in active.iter().enumerate() {
            kkt[i][n + m_eq + k] = qp.ineq_mat.get(row, i);
            kkt[n + m_eq + k][i] = qp.ineq_mat.get(row, i);
        }
        rhs[i] = -qp.lin[i];
    }
    rhs[n..n + m_eq].copy_from_slice(&qp.eq_rhs);
    for (k, &row) in active.iter().enumerate() {
        rhs[n + m_eq + k] = qp.ineq_rhs[row];
    }

    let Some(sol) = gauss_solve(kkt, rhs) else {
        return Err(()); // singular subset
    };
    let x = sol[..n].to_vec();
    let nu = sol[n..n + m_eq].to_vec();
    let lam_active = &sol[n + m_eq..];

    if lam_active.iter().any(|&l| l < -MULTIPLIER_SLACK) {
        return Ok(None);
    }
    let hx = qp.ineq_mat.matvec(&x);
    for i in 0..p {
        if mask & (1 << i) == 0 && hx[i] > qp.ineq_rhs[i] + INACTIVE_SLACK {
            return Ok(None);
        }
    }
    let mut lambda = vec![0.0; p];
    for (k, &row) in active.iter().enumerate() {
        lambda[row] = lam_active[k];
    }
    Ok(Some(Candidate {
        objective: qp.objective_at(&x),
        active,
        x,
        nu,
        lambda,
    }))
}

/// Solves a strictly convex QP exactly by enumerating active sets.
pub fn solve_qp(qp: &StandardQp) -> Result<OracleSolution, OracleError> {
    qp.check_dims().expect("oracle: malformed QP");
    let p = qp.n_ineq();
    if p > MAX_ENUM_ROWS {
        return Err(OracleError::EnumerationLimit {
            rows: p,
            max: MAX_ENUM_ROWS,
        });
    }
    let masks = 0u32..(1u32 << p);

    #[cfg(feature = "parallel")]
    let (best, singular) = {
        use rayon::prelude::*;
        masks
            .into_par_iter()
            .map(|mask| match try_subset(qp, mask) {
                Ok(c) => (c, 0usize),
                Err(()) => (None, 1),
            })
            .reduce(
                || (None, 0),
                |(a, sa), (b, sb)| {
                    let keep = match (a, b) {
                        (Some(a), Some(b)) => {
                            if better(&a, &b).is_le() {
                                Some(a)
                            } else {
                                Some(b)
                            }
                        }
                        (a, None) => a,
                        (None, b) => b,
                    };
                    (keep, sa + sb)
                },
            )
    };
    #[cfg(not(feature = "parallel"))]
    let (best, singular) = {
        let mut best: Option<Candidate> = None;
        let mut singular = 0usize;
        for mask in masks {
            match try_subset(qp, mask) {
                Ok(Some(c)) => {
                    best = match best {
                        Some(b) if better(&b, &c).is_le() => Some(b),
                        _ => Some(c),
                    };
                }
                Ok(None) => {}
                Err(()) => singular += 1,
            }
        }
        (best, singular)
    };

    let c = best.ok_or(OracleError::Infeasible)?;
    Ok(OracleSolution {
        x: c.x,
        eq_multipliers: c.nu,
        ineq_multipliers: c.lambda,
        active_set: c.active,
        objective: c.objective,
        singular_subsets: singular,
    })
}

/// KKT defects of a candidate solution — the evidence that an oracle
/// answer really is optimal.
#[derive(Debug, Clone, Copy)]
pub struct KktCheck {
    /// `|Mx + q + A'nu + H'lambda|_inf`.
    pub stationarity: f64,
    /// `|Ax - b|_inf`.
    pub eq_defect: f64,
    /// `max(Hx - h)_+`.
    pub ineq_violation: f64,
    /// `max |lambda_i * (Hx - h)_i|`.
    pub comp_slack: f64,
    /// Most negative inequality multiplier (0 when none).
    pub min_multiplier: f64,
}

pub fn verify_kkt(qp: &StandardQp, sol: &OracleSolution) -> KktCheck {
    let mut grad = qp.hess.matvec(&sol.x);
    for (g, q) in grad.iter_mut().zip(&qp.lin) {
        *g += q;
    }
    let at_nu = qp.eq_mat.tr_matvec(&sol.eq_multipliers);
    let ht_lam = qp.ineq_mat.tr_matvec(&sol.ineq_multipliers);
    for i in 0..grad.len() {
        grad[i] += at_nu[i] + ht_lam[i];
    }
    let stationarity = crate::linalg::norm_inf(&grad);

    let ax = qp.eq_mat.matvec(&sol.x);
    let eq_defect = ax
        .iter()
        .zip(&qp.eq_rhs)
        .fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()));

    let hx = qp.ineq_mat.matvec(&sol.x);
    let mut ineq_violation = 0.0f64;
    let mut comp_slack = 0.0f64;
    for i in 0..qp.n_ineq() {
        let slack = hx[i] - qp.ineq_rhs[i];
        ineq_violation = ineq_violation.max(slack);
        comp_slack = comp_slack.max((sol.ineq_multipliers[i] * slack).abs());
    }
    let min_multiplier = sol
        .ineq_multipliers
        .iter()
        .fold(0.0f64, |acc, &l| acc.min(l));
    KktCheck {
        stationarity,
        eq_defect,
        ineq_violation,
        comp_slack,
        min_multiplier,
    }
}

/// Stacks a whole control problem into one [`StandardQp`] over
/// `(x_0, u_0, ..., x_N, u_N)`.
pub fn stacked_qp(p: &ValidatedProblem) -> StandardQp {
    let (n, m, horizon) = (p.n, p.m, p.horizon);
    let s = n + m;
    let width = s * (horizon + 1);

    let mut hess = Matrix::zeros(width, width);
    for t in 0..=horizon {
        let o = t * s;
        for i in 0..n {
            for j in 0..n {
                hess.set(o + i, o + j, p.state_cost.get(i, j));
            }
        }
        for i in 0..m {
            for j in 0..m {
                hess.set(o + n + i, o + n + j, p.input_cost.get(i, j));
            }
        }
    }

    // x_0 pin plus one dynamics block per transition
    let m_eq = n * (horizon + 1);
    let mut eq = Matrix::zeros(m_eq, width);
    let mut eq_rhs = vec![0.0; m_eq];
    for i in 0..n {
        eq.set(i, i, 1.0);
        eq_rhs[i] = p.x_init[i];
    }
    for t in 0..horizon {
        let r0 = n * (t + 1);
        let o = t * s;
        for i in 0..n {
            for j in 0..n {
                eq.set(r0 + i, o + j, -p.dynamics_a[t].get(i, j));
            }
            for j in 0..m {
                eq.set(r0 + i, o + n + j, -p.dynamics_b[t].get(i, j));
            }
            eq.set(r0 + i, o + s + i, 1.0);
            eq_rhs[r0 + i] = p.disturbance[t][i];
        }
    }

    let total_rows = p.total_ineq_rows();
    let mut ineq = Matrix::zeros(total_rows, width);
    let mut ineq_rhs = Vec::with_capacity(total_rows);
    let mut r = 0;
    for t in 0..=horizon {
        let si = &p.stage_ineq[t];
        for i in 0..si.rows() {
            for j in 0..s {
                ineq.set(r, t * s + j, si.mat.get(i, j));
            }
            ineq_rhs.push(si.rhs[i]);
            r += 1;
        }
    }

    StandardQp::new(hess, vec![0.0; width], 0.0, eq, eq_rhs, ineq, ineq_rhs)
        .expect("stacked QP dimensions are consistent by construction")
}

/// Reads the per-stage states and inputs back out of a stacked solution
/// vector.
pub fn trajectory_from_stacked(p: &ValidatedProblem, x: &[f64]) -> Trajectory {
    let (n, m) = (p.n, p.m);
    let s = n + m;
    assert_eq!(x.len(), s * (p.horizon + 1));
    let states = (0..=p.horizon).map(|t| x[t * s..t * s + n].to_vec()).collect();
    let inputs = (0..=p.horizon)
        .map(|t| x[t * s + n..(t + 1) * s].to_vec())
        .collect();
    Trajectory { states, inputs }
}

/// Exact solve of a whole control problem via the stacked QP. Subject to
/// the same enumeration cap on the total inequality row count.
pub fn solve_ftoc(p: &ValidatedProblem) -> Result<OracleSolution, OracleError> {
    let rows = p.total_ineq_rows();
    if rows > MAX_ENUM_ROWS {
        return Err(OracleError::EnumerationLimit {
            rows,
            max: MAX_ENUM_ROWS,
        });
    }
    solve_qp(&stacked_qp(p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{validate, FtocProblem, StageInequality};
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unconstrained(hess: Matrix, lin: Vec<f64>) -> StandardQp {
        let n = hess.rows();
        StandardQp::new(hess, lin, 0.0, Matrix::zeros(0, n), vec![], Matrix::zeros(0, n), vec![])
            .unwrap()
    }

    #[test]
    fn unconstrained_minimum() {
        let qp = unconstrained(Matrix::identity(2), vec![-1.0, -2.0]);
        let sol = solve_qp(&qp).unwrap();
        assert_abs_diff_eq!(sol.x[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(sol.x[1], 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(sol.objective, -2.5, epsilon = 1e-12);
        assert!(sol.active_set.is_empty());
    }

    #[test]
    fn active_and_inactive_bounds() {
        // min x^2/2 s.t. x <= -1 pushes onto the bound with lambda = 1
        let qp = StandardQp::new(
            Matrix::identity(1),
            vec![0.0],
            0.0,
            Matrix::zeros(0, 1),
            vec![],
            Matrix::from_rows(&[vec![1.0]]).unwrap(),
            vec![-1.0],
        )
        .unwrap();
        let sol = solve_qp(&qp).unwrap();
        assert_abs_diff_eq!(sol.x[0], -1.0, epsilon = 1e-12);
        assert_eq!(sol.active_set, vec![0]);
        assert_abs_diff_eq!(sol.ineq_multipliers[0], 1.0, epsilon = 1e-12);

        // a slack bound stays inactive
        let qp = StandardQp::new(
            Matrix::identity(1),
            vec![0.0],
            0.0,
            Matrix::zeros(0, 1),
            vec![],
            Matrix::from_rows(&[vec![1.0]]).unwrap(),
            vec![5.0],
        )
        .unwrap();
        let sol = solve_qp(&qp).unwrap();
        assert_eq!(sol.x, vec![0.0]);
        assert!(sol.active_set.is_empty());
        assert_eq!(sol.ineq_multipliers, vec![0.0]);
    }

    #[test]
    fn equality_plus_inequality_hand_example() {
        // min |x|^2/2 s.t. x1 + x2 = 2, x1 <= 1/2
        let qp = StandardQp::new(
            Matrix::identity(2),
            vec![0.0; 2],
            0.0,
            Matrix::from_rows(&[vec![1.0, 1.0]]).unwrap(),
            vec![2.0],
            Matrix::from_rows(&[vec![1.0, 0.0]]).unwrap(),
            vec![0.5],
        )
        .unwrap();
        let sol = solve_qp(&qp).unwrap();
        assert_abs_diff_eq!(sol.x[0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(sol.x[1], 1.5, epsilon = 1e-12);
        assert_abs_diff_eq!(sol.eq_multipliers[0], -1.5, epsilon = 1e-12);
        assert_abs_diff_eq!(sol.ineq_multipliers[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(sol.objective, 1.25, epsilon = 1e-12);
        let check = verify_kkt(&qp, &sol);
        assert!(check.stationarity <= 1e-10);
        assert!(check.eq_defect <= 1e-10);
        assert!(check.comp_slack <= 1e-10);
    }

    #[test]
    fn infeasible_bounds_are_reported() {
        // x <= -1 and -x <= -1 cannot both hold
        let qp = StandardQp::new(
            Matrix::identity(1),
            vec![0.0],
            0.0,
            Matrix::zeros(0, 1),
            vec![],
            Matrix::from_rows(&[vec![1.0], vec![-1.0]]).unwrap(),
            vec![-1.0, -1.0],
        )
        .unwrap();
        assert!(matches!(solve_qp(&qp), Err(OracleError::Infeasible)));
    }

    #[test]
    fn duplicate_rows_are_skipped_as_singular() {
        // the same bound twice: the {0,1} subset is rank deficient
        let qp = StandardQp::new(
            Matrix::identity(1),
            vec![1.0],
            0.0,
            Matrix::zeros(0, 1),
            vec![],
            Matrix::from_rows(&[vec![1.0], vec![1.0]]).unwrap(),
            vec![-2.0, -2.0],
        )
        .unwrap();
        let sol = solve_qp(&qp).unwrap();
        assert_abs_diff_eq!(sol.x[0], -2.0, epsilon = 1e-12);
        assert_eq!(sol.active_set.len(), 1);
        assert!(sol.singular_subsets >= 1);
    }

    #[test]
    fn enumeration_cap() {
        let p = MAX_ENUM_ROWS + 1;
        let mut rows = Vec::new();
        let mut rhs = Vec::new();
        for i in 0..p {
            rows.push(vec![1.0 + i as f64]);
            rhs.push(10.0 + i as f64);
        }
        let qp = StandardQp::new(
            Matrix::identity(1),
            vec![0.0],
            0.0,
            Matrix::zeros(0, 1),
            vec![],
            Matrix::from_rows(&rows).unwrap(),
            rhs,
        )
        .unwrap();
        assert!(matches!(
            solve_qp(&qp),
            Err(OracleError::EnumerationLimit { rows: 17, max: 16 })
        ));
    }

    /// Secondary independent check: projected gradient on box-constrained
    /// QPs. Slow but embarrassingly simple.
    fn projected_gradient_box(hess: &Matrix, lin: &[f64], bound: f64) -> Vec<f64> {
        let n = hess.rows();
        // Lipschitz constant via power iteration
        let mut v = vec![1.0; n];
        let mut lip = 1.0;
        for _ in 0..100 {
            let w = hess.matvec(&v);
            lip = crate::linalg::norm2(&w).max(1e-12);
            v = w.iter().map(|x| x / lip).collect();
        }
        let step = 1.0 / (lip * 1.01);
        let mut x = vec![0.0; n];
        for _ in 0..1_000_000 {
            let mut g = hess.matvec(&x);
            for (gi, qi) in g.iter_mut().zip(lin) {
                *gi += qi;
            }
            let next: Vec<f64> = x
                .iter()
                .zip(&g)
                .map(|(xi, gi)| (xi - step * gi).clamp(-bound, bound))
                .collect();
            if next == x {
                break;
            }
            x = next;
        }
        x
    }

    #[test]
    fn box_qps_match_projected_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for trial in 0..10 {
            let n = 2 + (trial % 3); // up to 4 -> at most 8 rows
            let mut b = Matrix::zeros(n, n);
            for i in 0..n {
                for j in 0..n {
                    b.set(i, j, rng.random_range(-1.0..1.0));
                }
            }
            let mut hess = b.gram();
            hess.add_diagonal(0.5);
            let lin: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
            // |x_i| <= 0.4 forces several bounds active for most draws
            let bound = 0.4;
            let mut rows = Matrix::zeros(2 * n, n);
            let mut rhs = vec![bound; 2 * n];
            for i in 0..n {
                rows.set(i, i, 1.0);
                rows.set(n + i, i, -1.0);
            }
            rhs.truncate(2 * n);
            let qp = StandardQp::new(
                hess.clone(),
                lin.clone(),
                0.0,
                Matrix::zeros(0, n),
                vec![],
                rows,
                rhs,
            )
            .unwrap();
            let sol = solve_qp(&qp).unwrap();
            let pg = projected_gradient_box(&hess, &lin, bound);
            for i in 0..n {
                assert_abs_diff_eq!(sol.x[i], pg[i], epsilon = 1e-6);
            }
            let check = verify_kkt(&qp, &sol);
            assert!(check.stationarity <= 1e-8 * (1.0 + crate::linalg::norm_inf(&lin)));
            assert!(check.min_multiplier >= -MULTIPLIER_SLACK);
        }
    }

    #[test]
    fn row_permutation_leaves_solution_unchanged() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 3;
        let mut b = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                b.set(i, j, rng.random_range(-1.0..1.0));
            }
        }
        let mut hess = b.gram();
        hess.add_diagonal(1.0);
        let lin = vec![-2.0, 1.0, 0.5];
        let rows = vec![
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 1.0],
            vec![-1.0, 0.5, 0.0],
            vec![0.0, -1.0, 0.0],
        ];
        let rhs = vec![0.3, 0.2, 0.1, 0.25];
        let qp = StandardQp::new(
            hess.clone(),
            lin.clone(),
            0.0,
            Matrix::zeros(0, n),
            vec![],
            Matrix::from_rows(&rows).unwrap(),
            rhs.clone(),
        )
        .unwrap();
        let sol = solve_qp(&qp).unwrap();

        let perm = [2usize, 0, 3, 1];
        let prows: Vec<Vec<f64>> = perm.iter().map(|&i| rows[i].clone()).collect();
        let prhs: Vec<f64> = perm.iter().map(|&i| rhs[i]).collect();
        let qp2 = StandardQp::new(
            hess,
            lin,
            0.0,
            Matrix::zeros(0, n),
            vec![],
            Matrix::from_rows(&prows).unwrap(),
            prhs,
        )
        .unwrap();
        let sol2 = solve_qp(&qp2).unwrap();
        for i in 0..n {
            assert_abs_diff_eq!(sol.x[i], sol2.x[i], epsilon = 1e-9);
        }
        // active sets map through the permutation
        let mapped: Vec<usize> = sol2
            .active_set
            .iter()
            .map(|&i| perm[i])
            .collect::<std::collections::BTreeSet<_>>()
            .into_iter()
            .collect();
        assert_eq!(mapped, sol.active_set);
    }

    #[test]
    fn stacked_single_step_hand_example() {
        // n=m=1, N=1, x1 = x0 + u0, Q=R=1, x_init=1, no bounds:
        // u0 = -1/2, x1 = 1/2, u1 = 0, objective 3/4
        let p = validate(FtocProblem {
            n: 1,
            m: 1,
            horizon: 1,
            state_cost: Matrix::identity(1),
            input_cost: Matrix::identity(1),
            dynamics_a: vec![Matrix::identity(1)],
            dynamics_b: vec![Matrix::identity(1)],
            disturbance: vec![vec![0.0]],
            x_init: vec![1.0],
            stage_ineq: vec![StageInequality::none(1, 1), StageInequality::none(1, 1)],
        })
        .unwrap();
        let sol = solve_ftoc(&p).unwrap();
        let traj = trajectory_from_stacked(&p, &sol.x);
        assert_abs_diff_eq!(traj.inputs[0][0], -0.5, epsilon = 1e-10);
        assert_abs_diff_eq!(traj.states[1][0], 0.5, epsilon = 1e-10);
        assert_abs_diff_eq!(traj.inputs[1][0], 0.0, epsilon = 1e-10);
        assert_abs_diff_eq!(sol.objective, 0.75, epsilon = 1e-10);
    }

    #[test]
    fn stacked_unconstrained_220_variables() {
        // n=10, m=10, N=10 with no inequality rows: a single KKT solve
        // over 220 variables; checks stationarity and dynamic feasibility
        let (n, m, horizon) = (10, 10, 10);
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let mut rand_mat = |r: usize, c: usize| {
            let data = (0..r * c).map(|_| rng.random_range(-0.5..0.5)).collect();
            Matrix::new(r, c, data).unwrap()
        };
        let dynamics_a: Vec<Matrix> = (0..horizon).map(|_| rand_mat(n, n)).collect();
        let dynamics_b: Vec<Matrix> = (0..horizon).map(|_| rand_mat(n, m)).collect();
        let mut rng2 = ChaCha8Rng::seed_from_u64(77);
        let p = validate(FtocProblem {
            n,
            m,
            horizon,
            state_cost: Matrix::identity(n),
            input_cost: Matrix::identity(m),
            dynamics_a,
            dynamics_b,
            disturbance: (0..horizon)
                .map(|_| (0..n).map(|_| rng2.random_range(-0.2..0.2)).collect())
                .collect(),
            x_init: (0..n).map(|_| rng2.random_range(-1.0..1.0)).collect(),
            stage_ineq: (0..=horizon).map(|_| StageInequality::none(n, m)).collect(),
        })
        .unwrap();
        let qp = stacked_qp(&p);
        assert_eq!(qp.n(), 220);
        let sol = solve_ftoc(&p).unwrap();
        let check = verify_kkt(&qp, &sol);
        assert!(check.stationarity <= 1e-7, "stationarity {}", check.stationarity);
        assert!(check.eq_defect <= 1e-8, "eq defect {}", check.eq_defect);
        let traj = trajectory_from_stacked(&p, &sol.x);
        let rep = crate::model::check_feasibility(&p, &traj, 1e-7).unwrap();
        assert!(rep.feasible, "{rep:?}");
    }
}
