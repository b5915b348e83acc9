//! Seeded random problem generator.
//!
//! Instances are time-invariant linear systems with quadratic costs and
//! two constraint families:
//!
//! * consecutive-state differences `x_{t,i} - x_{t,i-1} <= dx` for
//!   `i = 2..n`, at every stage including the last (`n - 1` rows), and
//! * an input box `|u_{t,k}| <= u_max` for every stage but the last
//!   (`2 m` rows).
//!
//! All random entries are i.i.d. standard normal, `Q = R = I`, and the
//! state matrix is rescaled so its spectral radius stays below a
//! configured bound. The disturbance is zero except for normal-distributed
//! spikes at scheduled stages.
//!
//! When `dx` or `u_max` are not given, they are calibrated from the
//! unconstrained optimum: the bound is set to `tightness` (< 1) times the
//! largest value the unconstrained solution attains, which makes that
//! solution infeasible — so the constrained optimum provably has at least
//! one active row. The difference bound is additionally floored so the
//! zero-input rollout stays feasible (stage 0 is pinned to `x_init`, which
//! must satisfy its own difference rows); the input box, which always
//! admits the zero input, carries the activity guarantee on its own. The
//! resolved bounds are reported in a [`GeneratorEcho`] for embedding into
//! problem files.

use crate::linalg::{norm_inf, sum_sq, Matrix};
use crate::model::{validate, FtocProblem, StageInequality, ValidatedProblem};
use crate::oracle;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

fn default_tightness() -> f64 {
    0.8
}

fn default_disturbance() -> f64 {
    1.0
}

fn default_spectral_radius() -> f64 {
    0.95
}

/// Everything that determines an instance. The seed fixes the random
/// draws completely: equal specs generate bitwise-identical problems.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub n: usize,
    pub m: usize,
    #[serde(rename = "N")]
    pub horizon: usize,
    /// Consecutive-state difference bound; `None` calibrates it.
    #[serde(default)]
    pub dx: Option<f64>,
    /// Input box bound; `None` calibrates it.
    #[serde(default)]
    pub u_max: Option<f64>,
    /// Calibration factor in (0, 1): bounds are set to this fraction of
    /// the unconstrained optimum's extremes.
    #[serde(default = "default_tightness")]
    pub tightness: f64,
    /// Standard deviation of the disturbance spikes.
    #[serde(default = "default_disturbance")]
    pub disturbance: f64,
    /// Stages at which the disturbance spikes; empty means a default
    /// schedule at one third and two thirds of the horizon.
    #[serde(default)]
    pub spike_times: Vec<usize>,
    /// Upper bound on the spectral radius of the rescaled state matrix.
    #[serde(default = "default_spectral_radius")]
    pub spectral_radius: f64,
    pub seed: u64,
}

impl GeneratorSpec {
    pub fn new(n: usize, m: usize, horizon: usize, seed: u64) -> Self {
        GeneratorSpec {
            n,
            m,
            horizon,
            dx: None,
            u_max: None,
            tightness: default_tightness(),
            disturbance: default_disturbance(),
            spike_times: Vec::new(),
            spectral_radius: default_spectral_radius(),
            seed,
        }
    }

    fn assert_valid(&self) {
        assert!(self.n >= 1 && self.m >= 1 && self.horizon >= 1, "empty shape");
        if let Some(dx) = self.dx {
            assert!(dx > 0.0, "dx must be positive");
        }
        if let Some(u_max) = self.u_max {
            assert!(u_max > 0.0, "u_max must be positive");
        }
        assert!(
            self.tightness > 0.0 && self.tightness < 1.0,
            "tightness must lie in (0, 1)"
        );
        assert!(self.disturbance >= 0.0, "disturbance must be nonnegative");
        assert!(self.spectral_radius > 0.0, "spectral radius bound must be positive");
        assert!(
            self.spike_times.iter().all(|&t| t < self.horizon),
            "spike stages must lie in 0..N"
        );
    }

    fn resolved_spikes(&self) -> Vec<usize> {
        let mut spikes = if self.spike_times.is_empty() {
            vec![self.horizon / 3, (2 * self.horizon) / 3]
        } else {
            self.spike_times.clone()
        };
        spikes.sort_unstable();
        spikes.dedup();
        spikes.retain(|&t| t < self.horizon);
        spikes
    }
}

/// The spec together with the bounds that calibration resolved; this is
/// what problem files embed so an instance can be regenerated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorEcho {
    pub spec: GeneratorSpec,
    pub dx: f64,
    pub u_max: f64,
}

fn matmul(a: &Matrix, b: &Matrix) -> Matrix {
    assert_eq!(a.cols(), b.rows());
    let mut data = vec![0.0; a.rows() * b.cols()];
    for i in 0..a.rows() {
        for k in 0..a.cols() {
            let aik = a.get(i, k);
            for j in 0..b.cols() {
                data[i * b.cols() + j] += aik * b.get(k, j);
            }
        }
    }
    Matrix::new(a.rows(), b.cols(), data).expect("product of finite matrices")
}

fn frobenius(a: &Matrix) -> f64 {
    sum_sq(a.data()).sqrt()
}

fn scale_matrix(a: &Matrix, s: f64) -> Matrix {
    Matrix::new(
        a.rows(),
        a.cols(),
        a.data().iter().map(|v| v * s).collect(),
    )
    .expect("scaled finite matrix")
}

/// Upper bound on the spectral radius via `|A^64|_F^(1/64)` (the
/// Frobenius norm is consistent, so the k-th root of `|A^k|` can only
/// overestimate the spectral radius). Squaring with renormalization keeps
/// the powers in range.
pub fn spectral_radius_bound(a: &Matrix) -> f64 {
    assert!(a.is_square());
    let mut m = a.clone();
    let mut log_norm = 0.0f64;
    for _ in 0..6 {
        let s = frobenius(&m);
        if s == 0.0 {
            return 0.0;
        }
        let normalized = scale_matrix(&m, 1.0 / s);
        m = matmul(&normalized, &normalized);
        log_norm = 2.0 * (log_norm + s.ln());
    }
    ((frobenius(&m).ln() + log_norm) / 64.0).exp()
}

fn stage_constraints(n: usize, m: usize, dx: f64, u_max: f64, with_inputs: bool) -> StageInequality {
    let diff_rows = n - 1;
    let box_rows = if with_inputs { 2 * m } else { 0 };
    let mut mat = Matrix::zeros(diff_rows + box_rows, n + m);
    let mut rhs = Vec::with_capacity(diff_rows + box_rows);
    for i in 0..diff_rows {
        mat.set(i, i + 1, 1.0);
        mat.set(i, i, -1.0);
        rhs.push(dx);
    }
    if with_inputs {
        for k in 0..m {
            mat.set(diff_rows + 2 * k, n + k, 1.0);
            rhs.push(u_max);
            mat.set(diff_rows + 2 * k + 1, n + k, -1.0);
            rhs.push(u_max);
        }
    }
    StageInequality { mat, rhs }
}

fn build_problem(
    spec: &GeneratorSpec,
    a: &Matrix,
    b: &Matrix,
    c: &[Vec<f64>],
    x_init: &[f64],
    bounds: Option<(f64, f64)>,
) -> ValidatedProblem {
    let (n, m, horizon) = (spec.n, spec.m, spec.horizon);
    let stage_ineq = match bounds {
        None => (0..=horizon).map(|_| StageInequality::none(n, m)).collect(),
        Some((dx, u_max)) => (0..=horizon)
            .map(|t| stage_constraints(n, m, dx, u_max, t < horizon))
            .collect(),
    };
    validate(FtocProblem {
        n,
        m,
        horizon,
        state_cost: Matrix::identity(n),
        input_cost: Matrix::identity(m),
        dynamics_a: vec![a.clone(); horizon],
        dynamics_b: vec![b.clone(); horizon],
        disturbance: c.to_vec(),
        x_init: x_init.to_vec(),
        stage_ineq,
    })
    .expect("generated data satisfies the model invariants")
}

/// Generates the instance a spec describes, together with the echo
/// recording the resolved bounds. Deterministic in the spec.
pub fn generate(spec: &GeneratorSpec) -> (ValidatedProblem, GeneratorEcho) {
    spec.assert_valid();
    let (n, m, horizon) = (spec.n, spec.m, spec.horizon);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    // draw order is part of the format: A row-major, then B, then x_init,
    // then spike values in ascending stage order
    let mut draw = |count: usize| -> Vec<f64> {
        (0..count).map(|_| rng.sample(StandardNormal)).collect()
    };
    let a_raw = Matrix::new(n, n, draw(n * n)).expect("finite normal draws");
    let b = Matrix::new(n, m, draw(n * m)).expect("finite normal draws");
    let x_init = draw(n);
    let spikes = spec.resolved_spikes();
    let mut c = vec![vec![0.0; n]; horizon];
    for &t in &spikes {
        c[t] = draw(n).iter().map(|v| v * spec.disturbance).collect();
    }

    let rho_bound = spectral_radius_bound(&a_raw);
    let a = if rho_bound > 0.0 {
        scale_matrix(&a_raw, spec.spectral_radius / rho_bound)
    } else {
        a_raw
    };

    let (dx, u_max) = match (spec.dx, spec.u_max) {
        (Some(dx), Some(u_max)) => (dx, u_max),
        (dx_given, u_given) => {
            // bound calibration: solve the unconstrained instance exactly
            // and place each missing bound strictly inside the range its
            // quantity attains there, so the unconstrained optimum
            // violates it and the constrained optimum must have an
            // active row
            let free = build_problem(spec, &a, &b, &c, &x_init, None);
            let sol = oracle::solve_ftoc(&free)
                .expect("unconstrained instances solve by a single linear system");
            let traj = oracle::trajectory_from_stacked(&free, &sol.x);
            let mut max_diff = 0.0f64;
            for x in &traj.states {
                for i in 1..n {
                    max_diff = max_diff.max(x[i] - x[i - 1]);
                }
            }
            let mut max_input = 0.0f64;
            for u in traj.inputs.iter().take(horizon) {
                max_input = max_input.max(norm_inf(u));
            }
            let fallback = 1.0;
            let mut dx_cal = if max_diff > 1e-9 {
                spec.tightness * max_diff
            } else {
                fallback
            };
            // feasibility floor: the zero-input rollout (inputs 0 lie in
            // any box) must satisfy the difference rows, and its stage-0
            // state is the pinned x_init — without this lift, an x_init
            // whose own differences exceed dx makes the instance
            // infeasible. When the floor binds, the input box alone
            // carries the activity guarantee.
            let rollout = crate::model::rollout(&free, &vec![vec![0.0; m]; horizon])
                .expect("zero-input rollout has matching dimensions");
            let mut dx_floor = 0.0f64;
            for x in &rollout.states {
                for i in 1..n {
                    dx_floor = dx_floor.max(x[i] - x[i - 1]);
                }
            }
            if dx_cal < dx_floor {
                dx_cal = dx_floor * (1.0 + 1e-7);
            }
            (
                dx_given.unwrap_or(dx_cal),
                u_given.unwrap_or(if max_input > 1e-9 {
                    spec.tightness * max_input
                } else {
                    fallback
                }),
            )
        }
    };

    let problem = build_problem(spec, &a, &b, &c, &x_init, Some((dx, u_max)));
    let echo = GeneratorEcho {
        spec: spec.clone(),
        dx,
        u_max,
    };
    (problem, echo)
}
