//! Versioned problem and solution documents.
//!
//! Problem files (`"version": "ftoc-v1"`) carry the full instance:
//! `n`, `m`, `N`, cost matrices `Q`/`R`, per-stage dynamics lists `A`/`B`
//! (length `N`, row-major nested arrays), disturbances `c` (length `N`),
//! `x_init`, and per-stage inequality data `H`/`h` (length `N + 1`; empty
//! matrices stand for unconstrained stages). An optional `generator` block
//! echoes the spec and resolved bounds of the generator that produced the
//! instance.
//!
//! Solution files (`"version": "sol-v1"`) carry the solver name, status,
//! objective, trajectory, iteration counts and final residuals. They
//! deliberately contain **no timing data**: two runs that differ only in
//! worker count write byte-identical files.

use crate::bench::generator::GeneratorEcho;
use crate::linalg::Matrix;
use crate::model::{validate, FtocProblem, StageInequality, ValidatedProblem, ValidationError};
use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

pub const PROBLEM_VERSION: &str = "ftoc-v1";
pub const SOLUTION_VERSION: &str = "sol-v1";

#[derive(Debug, Error)]
pub enum FileError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("unsupported file version {found:?} (expected {expected:?})")]
    Version {
        found: String,
        expected: &'static str,
    },
    #[error("malformed document: {0}")]
    Structure(String),
    #[error(transparent)]
    Validation(#[from] ValidationError),
}

#[derive(Serialize, Deserialize)]
struct ProblemFile {
    version: String,
    n: usize,
    m: usize,
    #[serde(rename = "N")]
    horizon: usize,
    #[serde(rename = "Q")]
    state_cost: Vec<Vec<f64>>,
    #[serde(rename = "R")]
    input_cost: Vec<Vec<f64>>,
    #[serde(rename = "A")]
    dynamics_a: Vec<Vec<Vec<f64>>>,
    #[serde(rename = "B")]
    dynamics_b: Vec<Vec<Vec<f64>>>,
    c: Vec<Vec<f64>>,
    x_init: Vec<f64>,
    #[serde(rename = "H")]
    ineq_mats: Vec<Vec<Vec<f64>>>,
    h: Vec<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    generator: Option<GeneratorEcho>,
}

fn matrix_to_rows(mat: &Matrix) -> Vec<Vec<f64>> {
    (0..mat.rows()).map(|i| mat.row(i).to_vec()).collect()
}

fn rows_to_matrix(rows: &[Vec<f64>], cols_if_empty: usize, what: &str) -> Result<Matrix, FileError> {
    if rows.is_empty() {
        return Ok(Matrix::zeros(0, cols_if_empty));
    }
    let cols = rows[0].len();
    if rows.iter().any(|r| r.len() != cols) {
        return Err(FileError::Structure(format!("{what}: ragged rows")));
    }
    let data: Vec<f64> = rows.iter().flatten().copied().collect();
    Matrix::new(rows.len(), cols, data)
        .map_err(|e| FileError::Structure(format!("{what}: {e}")))
}

/// Serializes a problem (with an optional generator echo) to pretty JSON.
pub fn problem_to_json(p: &ValidatedProblem, echo: Option<&GeneratorEcho>) -> String {
    let file = ProblemFile {
        version: PROBLEM_VERSION.to_string(),
        n: p.n,
        m: p.m,
        horizon: p.horizon,
        state_cost: matrix_to_rows(&p.state_cost),
        input_cost: matrix_to_rows(&p.input_cost),
        dynamics_a: p.dynamics_a.iter().map(matrix_to_rows).collect(),
        dynamics_b: p.dynamics_b.iter().map(matrix_to_rows).collect(),
        c: p.disturbance.clone(),
        x_init: p.x_init.clone(),
        ineq_mats: p.stage_ineq.iter().map(|s| matrix_to_rows(&s.mat)).collect(),
        h: p.stage_ineq.iter().map(|s| s.rhs.clone()).collect(),
        generator: echo.cloned(),
    };
    serde_json::to_string_pretty(&file).expect("problem serialization cannot fail")
}

/// Parses and validates an `ftoc-v1` document.
pub fn problem_from_json(text: &str) -> Result<(ValidatedProblem, Option<GeneratorEcho>), FileError> {
    let file: ProblemFile = serde_json::from_str(text)?;
    if file.version != PROBLEM_VERSION {
        return Err(FileError::Version {
            found: file.version,
            expected: PROBLEM_VERSION,
        });
    }
    let (n, m) = (file.n, file.m);
    let state_cost = rows_to_matrix(&file.state_cost, n, "Q")?;
    let input_cost = rows_to_matrix(&file.input_cost, m, "R")?;
    let dynamics_a = file
        .dynamics_a
        .iter()
        .map(|rows| rows_to_matrix(rows, n, "A"))
        .collect::<Result<Vec<_>, _>>()?;
    let dynamics_b = file
        .dynamics_b
        .iter()
        .map(|rows| rows_to_matrix(rows, m, "B"))
        .collect::<Result<Vec<_>, _>>()?;
    if file.ineq_mats.len() != file.h.len() {
        return Err(FileError::Structure(format!(
            "H holds {} stages but h holds {}",
            file.ineq_mats.len(),
            file.h.len()
        )));
    }
    let stage_ineq = file
        .ineq_mats
        .iter()
        .zip(&file.h)
        .map(|(rows, rhs)| {
            Ok(StageInequality {
                mat: rows_to_matrix(rows, n + m, "H")?,
                rhs: rhs.clone(),
            })
        })
        .collect::<Result<Vec<_>, FileError>>()?;
    let problem = validate(FtocProblem {
        n,
        m,
        horizon: file.horizon,
        state_cost,
        input_cost,
        dynamics_a,
        dynamics_b,
        disturbance: file.c,
        x_init: file.x_init,
        stage_ineq,
    })?;
    Ok((problem, file.generator))
}

pub fn write_problem(
    path: &Path,
    p: &ValidatedProblem,
    echo: Option<&GeneratorEcho>,
) -> Result<(), FileError> {
    std::fs::write(path, problem_to_json(p, echo))?;
    Ok(())
}

pub fn read_problem(path: &Path) -> Result<(ValidatedProblem, Option<GeneratorEcho>), FileError> {
    let text = std::fs::read_to_string(path)?;
    problem_from_json(&text)
}

/// A `sol-v1` document. Timings are deliberately absent (see the module
/// docs); iteration and residual fields are omitted by solvers that have
/// no notion of them (the enumeration oracle).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionFile {
    pub version: String,
    pub solver: String,
    pub status: String,
    pub objective: f64,
    pub states: Vec<Vec<f64>>,
    pub inputs: Vec<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub outer_iterations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub inner_iterations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub primal_residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub dual_residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub active_rows: Option<usize>,
}

impl SolutionFile {
    pub fn converged(&self) -> bool {
        self.status == "converged"
    }
}

pub fn solution_to_json(sol: &SolutionFile) -> String {
    serde_json::to_string_pretty(sol).expect("solution serialization cannot fail")
}

pub fn solution_from_json(text: &str) -> Result<SolutionFile, FileError> {
    let sol: SolutionFile = serde_json::from_str(text)?;
    if sol.version != SOLUTION_VERSION {
        return Err(FileError::Version {
            found: sol.version,
            expected: SOLUTION_VERSION,
        });
    }
    Ok(sol)
}

pub fn write_solution(path: &Path, sol: &SolutionFile) -> Result<(), FileError> {
    std::fs::write(path, solution_to_json(sol))?;
    Ok(())
}

pub fn read_solution(path: &Path) -> Result<SolutionFile, FileError> {
    let text = std::fs::read_to_string(path)?;
    solution_from_json(&text)
}
