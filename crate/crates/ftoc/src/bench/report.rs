//! Benchmark report rows and their table/CSV renderings.
//!
//! A row records one run: problem shape, penalty, tolerance, iteration
//! counts, millisecond timings, the objective, and — when the instance is
//! small enough for the enumeration oracle — the relative objective gap.
//! Optional columns (`solve_ms_serial`, `solve_ms_parallel`, `oracle_gap`,
//! `active_rows`) render as `-` in tables and as empty CSV cells.
//!
//! Numeric cells are written with the shortest representation that parses
//! back to the same value, so `parse_csv(emit_report(r, Csv)) == r`.

use crate::Tolerance;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("malformed report CSV: {0}")]
    Malformed(String),
}

/// One benchmark run.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub n: usize,
    pub m: usize,
    pub horizon: usize,
    pub rho: f64,
    pub tol: Tolerance,
    pub outer_iterations: usize,
    pub avg_inner_iterations: f64,
    pub factorization_ms: f64,
    pub solve_ms_serial: Option<f64>,
    pub solve_ms_parallel: Option<f64>,
    pub objective: f64,
    /// `|objective - oracle| / (1 + |oracle|)` when the oracle could run.
    pub oracle_gap: Option<f64>,
    /// Total inequality rows tight at the solution (slack within 1e-6).
    pub active_rows: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Table,
    Csv,
}

const HEADERS: [&str; 15] = [
    "n",
    "m",
    "N",
    "rho",
    "tol_mode",
    "tol_a",
    "tol_b",
    "outer_iters",
    "avg_inner_iters",
    "factorization_ms",
    "solve_ms_serial",
    "solve_ms_parallel",
    "objective",
    "oracle_gap",
    "active_rows",
];

fn tol_cells(tol: Tolerance) -> (String, String, String) {
    match tol {
        Tolerance::Direct { eps_pri, eps_dual } => {
            ("direct".into(), format!("{eps_pri}"), format!("{eps_dual}"))
        }
        Tolerance::AbsRel { eps_abs, eps_rel } => {
            ("absrel".into(), format!("{eps_abs}"), format!("{eps_rel}"))
        }
    }
}

fn opt_f64_cell(v: Option<f64>) -> String {
    v.map(|x| format!("{x}")).unwrap_or_default()
}

fn opt_usize_cell(v: Option<usize>) -> String {
    v.map(|x| format!("{x}")).unwrap_or_default()
}

fn row_cells(row: &BenchRow) -> [String; 15] {
    let (mode, a, b) = tol_cells(row.tol);
    [
        format!("{}", row.n),
        format!("{}", row.m),
        format!("{}", row.horizon),
        format!("{}", row.rho),
        mode,
        a,
        b,
        format!("{}", row.outer_iterations),
        format!("{}", row.avg_inner_iterations),
        format!("{}", row.factorization_ms),
        opt_f64_cell(row.solve_ms_serial),
        opt_f64_cell(row.solve_ms_parallel),
        format!("{}", row.objective),
        opt_f64_cell(row.oracle_gap),
        opt_usize_cell(row.active_rows),
    ]
}

/// Renders the report. Tables align columns and print `-` for absent
/// values; CSV emits one header line plus one line per row with empty
/// cells for absent values.
pub fn emit_report(report: &BenchReport, format: ReportFormat) -> String {
    let rows: Vec<[String; 15]> = report.rows.iter().map(row_cells).collect();
    match format {
        ReportFormat::Csv => {
            let mut out = HEADERS.join(",");
            out.push('\n');
            for cells in &rows {
                out.push_str(&cells.join(","));
                out.push('\n');
            }
            out
        }
        ReportFormat::Table => {
            let mut widths: Vec<usize> = HEADERS.iter().map(|h| h.len()).collect();
            for cells in &rows {
                for (w, c) in widths.iter_mut().zip(cells.iter()) {
                    *w = (*w).max(c.len().max(1));
                }
            }
            let mut out = String::new();
            for (i, h) in HEADERS.iter().enumerate() {
                if i > 0 {
                    out.push_str("  ");
                }
                out.push_str(&format!("{:>width$}", h, width = widths[i]));
            }
            out.push('\n');
            for cells in &rows {
                for (i, c) in cells.iter().enumerate() {
                    if i > 0 {
                        out.push_str("  ");
                    }
                    let shown = if c.is_empty() { "-" } else { c.as_str() };
                    out.push_str(&format!("{:>width$}", shown, width = widths[i]));
                }
                out.push('\n');
            }
            out
        }
    }
}

fn parse_cell<T: std::str::FromStr>(cell: &str, name: &str) -> Result<T, ReportError> {
    cell.parse()
        .map_err(|_| ReportError::Malformed(format!("bad {name} value {cell:?}")))
}

fn parse_opt_f64(cell: &str, name: &str) -> Result<Option<f64>, ReportError> {
    if cell.is_empty() {
        Ok(None)
    } else {
        parse_cell(cell, name).map(Some)
    }
}

/// Parses CSV text produced by [`emit_report`].
pub fn parse_csv(text: &str) -> Result<BenchReport, ReportError> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| ReportError::Malformed("empty document".into()))?;
    if header != HEADERS.join(",") {
        return Err(ReportError::Malformed(format!(
            "unexpected header {header:?}"
        )));
    }
    let mut rows = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != HEADERS.len() {
            return Err(ReportError::Malformed(format!(
                "line {}: expected {} cells, got {}",
                lineno + 2,
                HEADERS.len(),
                cells.len()
            )));
        }
        let tol = match cells[4] {
            "direct" => Tolerance::Direct {
                eps_pri: parse_cell(cells[5], "tol_a")?,
                eps_dual: parse_cell(cells[6], "tol_b")?,
            },
            "absrel" => Tolerance::AbsRel {
                eps_abs: parse_cell(cells[5], "tol_a")?,
                eps_rel: parse_cell(cells[6], "tol_b")?,
            },
            other => {
                return Err(ReportError::Malformed(format!(
                    "unknown tolerance mode {other:?}"
                )))
            }
        };
        rows.push(BenchRow {
            n: parse_cell(cells[0], "n")?,
            m: parse_cell(cells[1], "m")?,
            horizon: parse_cell(cells[2], "N")?,
            rho: parse_cell(cells[3], "rho")?,
            tol,
            outer_iterations: parse_cell(cells[7], "outer_iters")?,
            avg_inner_iterations: parse_cell(cells[8], "avg_inner_iters")?,
            factorization_ms: parse_cell(cells[9], "factorization_ms")?,
            solve_ms_serial: parse_opt_f64(cells[10], "solve_ms_serial")?,
            solve_ms_parallel: parse_opt_f64(cells[11], "solve_ms_parallel")?,
            objective: parse_cell(cells[12], "objective")?,
            oracle_gap: parse_opt_f64(cells[13], "oracle_gap")?,
            active_rows: if cells[14].is_empty() {
                None
            } else {
                Some(parse_cell(cells[14], "active_rows")?)
            },
        });
    }
    Ok(BenchReport { rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_rows() -> BenchReport {
        BenchReport {
            rows: vec![
                BenchRow {
                    n: 10,
                    m: 10,
                    horizon: 10,
                    rho: 15.0,
                    tol: Tolerance::Direct {
                        eps_pri: 1e-4,
                        eps_dual: 1e-3,
                    },
                    outer_iterations: 250,
                    avg_inner_iterations: 21.8,
                    factorization_ms: 3.18,
                    solve_ms_serial: Some(1880.0),
                    solve_ms_parallel: Some(188.5),
                    objective: 1234.5678901234567,
                    oracle_gap: None,
                    active_rows: Some(7),
                },
                BenchRow {
                    n: 2,
                    m: 1,
                    horizon: 3,
                    rho: 0.1 + 0.2, // deliberately non-representable nicely
                    tol: Tolerance::AbsRel {
                        eps_abs: 1e-6,
                        eps_rel: 1e-4,
                    },
                    outer_iterations: 57,
                    avg_inner_iterations: 4.25,
                    factorization_ms: 0.01,
                    solve_ms_serial: Some(1.5),
                    solve_ms_parallel: None,
                    objective: -0.75,
                    oracle_gap: Some(3.2e-9),
                    active_rows: None,
                },
            ],
        }
    }

    #[test]
    fn empty_report_is_header_only() {
        let empty = BenchReport::default();
        let csv = emit_report(&empty, ReportFormat::Csv);
        assert_eq!(csv.lines().count(), 1);
        assert!(csv.starts_with("n,m,N,rho,"));
        let table = emit_report(&empty, ReportFormat::Table);
        assert_eq!(table.lines().count(), 1);
        assert!(table.contains("solve_ms_serial"));
    }

    #[test]
    fn one_row_renders_one_data_line() {
        let mut report = sample_rows();
        report.rows.truncate(1);
        let table = emit_report(&report, ReportFormat::Table);
        assert_eq!(table.lines().count(), 2);
        assert!(table.contains("250"));
        assert!(table.contains("21.8"));
        // absent oracle gap renders as a dash
        assert!(table.lines().nth(1).unwrap().contains(" -"));
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let report = sample_rows();
        let csv = emit_report(&report, ReportFormat::Csv);
        let back = parse_csv(&csv).unwrap();
        assert_eq!(back, report);
    }

    #[test]
    fn parse_rejects_malformed_documents() {
        assert!(parse_csv("").is_err());
        assert!(parse_csv("nonsense header\n").is_err());
        let mut csv = emit_report(&sample_rows(), ReportFormat::Csv);
        csv.push_str("1,2,3\n");
        assert!(matches!(parse_csv(&csv), Err(ReportError::Malformed(_))));
        let bad_tol = csv.replace("direct", "sideways");
        assert!(parse_csv(&bad_tol).is_err());
    }

    #[test]
    fn table_columns_align() {
        let table = emit_report(&sample_rows(), ReportFormat::Table);
        let lines: Vec<&str> = table.lines().collect();
        assert_eq!(lines.len(), 3);
        // right-aligned columns share their end offsets; check the first
        // column's width is consistent
        let header_n = lines[0].split_whitespace().next().unwrap();
        assert_eq!(header_n, "n");
        for line in &lines {
            assert!(!line.is_empty());
        }
    }
}
