//! Solvers for quadratic finite-time optimal control (FTOC) built from two
//! nested consensus splittings:
//!
//! * [`timesplit`] — the outer loop. The horizon is split in time so that
//!   every stage owns an independent small QP; neighbouring stages are tied
//!   together through consensus copies of the shared states.
//! * [`qp3split`] — the inner loop. Each stage QP is split over three
//!   constraint sets (objective, equalities, inequalities) so that every
//!   sub-update is a cached factorization solve or a projection.
//!
//! [`oracle`] provides a slow but exact reference solver used to validate
//! both loops, [`model`] holds the problem types and the stage assembly, and
//! [`bench`] carries the instance generator, report formatting and file I/O
//! used by the benchmark CLI.

// The dense kernels walk several same-length slices by index; zipping
// three or four iterators would bury the arithmetic the loops exist for.
#![allow(clippy::needless_range_loop)]

pub mod bench;
pub mod linalg;
pub mod model;
pub mod oracle;
pub mod qp3split;
pub mod timesplit;

/// Termination rule shared by the inner and outer loops.
///
/// `Direct` compares the residual 2-norms against fixed thresholds.
/// `AbsRel` builds the thresholds each iteration from an absolute floor
/// (scaled by the square root of the residual dimension) plus a relative
/// term scaled by the magnitude of the iterates, so the test adapts to the
/// problem's scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Tolerance {
    Direct { eps_pri: f64, eps_dual: f64 },
    AbsRel { eps_abs: f64, eps_rel: f64 },
}

impl Tolerance {
    /// Defaults used throughout the benchmark suite.
    pub const fn default_direct() -> Self {
        Tolerance::Direct {
            eps_pri: 1e-4,
            eps_dual: 1e-3,
        }
    }
}

/// How a solve ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Converged,
    MaxIterations,
}

impl SolveStatus {
    pub fn converged(self) -> bool {
        matches!(self, SolveStatus::Converged)
    }
}

/// Residual norms and the thresholds they were compared against on one
/// iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualReport {
    pub primal: f64,
    pub dual: f64,
    pub eps_pri: f64,
    pub eps_dual: f64,
}

impl ResidualReport {
    pub fn converged(&self) -> bool {
        self.primal <= self.eps_pri && self.dual <= self.eps_dual
    }
}
