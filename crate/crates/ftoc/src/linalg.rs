//! Dense linear-algebra kernels with reusable factorizations.
//!
//! Everything is dense, row-major and unpivoted on purpose: the subproblems
//! this crate solves stay small (a few hundred variables), where plain
//! Cholesky with cached factors beats any sparse machinery. The KKT factor
//! eliminates the scaled-identity block analytically, so only the equality
//! Gram matrix is ever factorized.

use thiserror::Error;

/// Relative tolerance for the symmetry check before a Cholesky
/// factorization.
pub const SYMMETRY_RTOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("matrix not symmetric: |S - S'| reaches {asym:.3e} (allowed {allowed:.3e})")]
    NotSymmetric { asym: f64, allowed: f64 },
    #[error("matrix not positive definite: pivot {pivot:.3e} at index {index}")]
    NotPositiveDefinite { index: usize, pivot: f64 },
    #[error("equality constraint matrix is rank deficient")]
    RankDeficient,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
}

/// Row-major dense matrix. Entries are checked to be finite on
/// construction; operations assume finiteness from there on.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, LinalgError> {
        if data.len() != rows * cols {
            return Err(LinalgError::DimensionMismatch(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        for (k, v) in data.iter().enumerate() {
            if !v.is_finite() {
                return Err(LinalgError::NonFinite {
                    row: k / cols.max(1),
                    col: k % cols.max(1),
                });
            }
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, LinalgError> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            if row.len() != c {
                return Err(LinalgError::DimensionMismatch(
                    "ragged rows in matrix literal".into(),
                ));
            }
            data.extend_from_slice(row);
        }
        Matrix::new(r, c, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    /// `A x`.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols, "matvec: vector length != cols");
        let mut out = vec![0.0; self.rows];
        for (i, oi) in out.iter_mut().enumerate() {
            *oi = dot(self.row(i), x);
        }
        out
    }

    /// `A' x`.
    pub fn tr_matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.rows, "tr_matvec: vector length != rows");
        let mut out = vec![0.0; self.cols];
        for i in 0..self.rows {
            let xi = x[i];
            let row = self.row(i);
            for (oj, aij) in out.iter_mut().zip(row) {
                *oj += aij * xi;
            }
        }
        out
    }

    /// `A' A` (cols x cols).
    pub fn gram(&self) -> Matrix {
        let n = self.cols;
        let mut g = Matrix::zeros(n, n);
        for k in 0..self.rows {
            let row = self.row(k);
            for i in 0..n {
                let rki = row[i];
                if rki == 0.0 {
                    continue;
                }
                for j in 0..n {
                    g.data[i * n + j] += rki * row[j];
                }
            }
        }
        g
    }

    /// `A A'` (rows x rows).
    pub fn outer_gram(&self) -> Matrix {
        let r = self.rows;
        let mut g = Matrix::zeros(r, r);
        for i in 0..r {
            for j in 0..=i {
                let v = dot(self.row(i), self.row(j));
                g.set(i, j, v);
                g.set(j, i, v);
            }
        }
        g
    }

    /// Adds `shift` to every diagonal entry.
    pub fn add_diagonal(&mut self, shift: f64) {
        let n = self.rows.min(self.cols);
        for i in 0..n {
            self.data[i * self.cols + i] += shift;
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    /// `x' S x` for square `S`.
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        assert!(self.is_square() && x.len() == self.rows);
        let mut acc = 0.0;
        for i in 0..self.rows {
            acc += x[i] * dot(self.row(i), x);
        }
        acc
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn sum_sq(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

pub fn norm2(v: &[f64]) -> f64 {
    sum_sq(v).sqrt()
}

pub fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |acc: f64, x| acc.max(x.abs()))
}

/// Componentwise `max(v, 0)`.
pub fn project_nonneg(v: &[f64]) -> Vec<f64> {
    v.iter().map(|&x| x.max(0.0)).collect()
}

/// Lower-triangular Cholesky factor `L` with `S = L L'`, stored row-major.
#[derive(Debug, Clone)]
pub struct CholeskyFactor {
    dim: usize,
    lower: Vec<f64>,
}

/// Factorizes a symmetric positive definite matrix as `L L'`.
///
/// The input is checked for symmetry within [`SYMMETRY_RTOL`] relative to
/// its largest entry, then symmetrized as `(S + S')/2` before the sweep so
/// that roundoff asymmetry never leaks into the factor. No pivoting.
pub fn cholesky_factorize(s: &Matrix) -> Result<CholeskyFactor, LinalgError> {
    if !s.is_square() {
        return Err(LinalgError::DimensionMismatch(format!(
            "cholesky needs a square matrix, got {}x{}",
            s.rows(),
            s.cols()
        )));
    }
    let n = s.rows();
    let scale = s.max_abs();
    let allowed = SYMMETRY_RTOL * scale;
    let mut asym: f64 = 0.0;
    for i in 0..n {
        for j in 0..i {
            asym = asym.max((s.get(i, j) - s.get(j, i)).abs());
        }
    }
    if asym > allowed {
        return Err(LinalgError::NotSymmetric { asym, allowed });
    }

    // work on the symmetrized lower triangle
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            l[i * n + j] = 0.5 * (s.get(i, j) + s.get(j, i));
        }
    }
    for i in 0..n {
        for j in 0..=i {
            let mut sum = l[i * n + j];
            for k in 0..j {
                sum -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if sum <= 0.0 || !sum.is_finite() {
                    return Err(LinalgError::NotPositiveDefinite {
                        index: i,
                        pivot: sum,
                    });
                }
                l[i * n + i] = sum.sqrt();
            } else {
                l[i * n + j] = sum / l[j * n + j];
            }
        }
    }
    Ok(CholeskyFactor { dim: n, lower: l })
}

impl CholeskyFactor {
    pub fn dimension(&self) -> usize {
        self.dim
    }

    /// Solves `S x = rhs` by forward/back substitution against the cached
    /// factor. Never mutates the factor, so one factorization serves any
    /// number of solves.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>, LinalgError> {
        let n = self.dim;
        if rhs.len() != n {
            return Err(LinalgError::DimensionMismatch(format!(
                "cholesky solve: rhs length {} != {}",
                rhs.len(),
                n
            )));
        }
        let l = &self.lower;
        let mut x = rhs.to_vec();
        for i in 0..n {
            let mut v = x[i];
            for k in 0..i {
                v -= l[i * n + k] * x[k];
            }
            x[i] = v / l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut v = x[i];
            for k in i + 1..n {
                v -= l[k * n + i] * x[k];
            }
            x[i] = v / l[i * n + i];
        }
        Ok(x)
    }

    pub fn lower(&self) -> Matrix {
        Matrix {
            rows: self.dim,
            cols: self.dim,
            data: self.lower.clone(),
        }
    }

    /// `L L'` — reconstructs the factorized matrix (test aid).
    pub fn reconstruct(&self) -> Matrix {
        self.lower().outer_gram()
    }
}

/// Cached factorization of the saddle system
///
/// ```text
/// [ rho*I  A' ] [x]   [rhs_top]
/// [ A      0  ] [nu] = [rhs_bottom]
/// ```
///
/// The top block is eliminated analytically: `x = (rhs_top - A' nu)/rho`
/// with `(A A') nu = A rhs_top - rho*rhs_bottom`. Only `chol(A A')` is
/// stored, and it does not depend on `rho`, so the same factor serves any
/// positive scaling (`rho` enters the solve, not the factor).
#[derive(Debug, Clone)]
pub struct KktFactor {
    n: usize,
    m_eq: usize,
    rho: f64,
    a: Matrix,
    schur: Option<CholeskyFactor>,
}

/// Factorizes the saddle system for equality matrix `a` (may have zero
/// rows) and penalty `rho > 0`.
pub fn kkt_factorize(a: &Matrix, rho: f64) -> Result<KktFactor, LinalgError> {
    assert!(rho > 0.0, "kkt_factorize: rho must be positive");
    let schur = if a.rows() == 0 {
        None
    } else {
        let gram = a.outer_gram();
        match cholesky_factorize(&gram) {
            Ok(f) => {
                // a rank-deficient A makes A A' singular, but roundoff can
                // leave a barely-positive pivot instead of a zero one, so
                // judge each pivot against its own diagonal entry
                let l = f.lower();
                for i in 0..gram.rows() {
                    let pivot_sq = l.get(i, i) * l.get(i, i);
                    if pivot_sq <= 1e-12 * gram.get(i, i) {
                        return Err(LinalgError::RankDeficient);
                    }
                }
                Some(f)
            }
            Err(LinalgError::NotPositiveDefinite { .. }) => {
                return Err(LinalgError::RankDeficient)
            }
            Err(e) => return Err(e),
        }
    };
    Ok(KktFactor {
        n: a.cols(),
        m_eq: a.rows(),
        rho,
        a: a.clone(),
        schur,
    })
}

impl KktFactor {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m_eq(&self) -> usize {
        self.m_eq
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// Solves for `(x, nu)`. With no equality rows this degenerates to
    /// plain scaling `x = rhs_top/rho` and an empty multiplier.
    pub fn solve(&self, rhs_top: &[f64], rhs_bottom: &[f64]) -> Result<(Vec<f64>, Vec<f64>), LinalgError> {
        if rhs_top.len() != self.n || rhs_bottom.len() != self.m_eq {
            return Err(LinalgError::DimensionMismatch(format!(
                "kkt solve: rhs lengths ({}, {}) != ({}, {})",
                rhs_top.len(),
                rhs_bottom.len(),
                self.n,
                self.m_eq
            )));
        }
        let Some(schur) = &self.schur else {
            let x = rhs_top.iter().map(|v| v / self.rho).collect();
            return Ok((x, Vec::new()));
        };
        let mut rhs_nu = self.a.matvec(rhs_top);
        for (r, b) in rhs_nu.iter_mut().zip(rhs_bottom) {
            *r -= self.rho * b;
        }
        let nu = schur.solve(&rhs_nu)?;
        let at_nu = self.a.tr_matvec(&nu);
        let x = rhs_top
            .iter()
            .zip(&at_nu)
            .map(|(g, c)| (g - c) / self.rho)
            .collect();
        Ok((x, nu))
    }
}
