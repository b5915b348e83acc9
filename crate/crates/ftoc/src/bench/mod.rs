//! Benchmark plumbing: a seeded random problem generator, versioned
//! problem/solution file formats, and report emission.
//!
//! The generator produces time-invariant linear systems with two
//! constraint families — bounds on the difference of consecutive state
//! entries at every stage, and an input box at every stage but the last —
//! and calibrates the bounds against the unconstrained optimum so at least
//! one row is active at the solution (see [`generator`]).
//!
//! Files are versioned (`ftoc-v1` for problems, `sol-v1` for solutions) so
//! benchmark corpora stay replayable; solution files deliberately carry no
//! timing data, so runs that differ only in worker count produce
//! byte-identical files (see [`files`]).
//!
//! Reports mirror a classic solver-comparison table: one row per run with
//! iteration counts, millisecond timings, objective, and the objective gap
//! against the enumeration oracle when the instance is small enough to
//! enumerate (see [`report`]).

pub mod files;
pub mod generator;
pub mod report;

pub use files::{
    problem_from_json, problem_to_json, read_problem, read_solution, solution_from_json,
    solution_to_json, write_problem, write_solution, FileError, SolutionFile, PROBLEM_VERSION,
    SOLUTION_VERSION,
};
pub use generator::{generate, GeneratorEcho, GeneratorSpec};
pub use report::{emit_report, parse_csv, BenchReport, BenchRow, ReportError, ReportFormat};
