//! Companion matrices of the scaled observer error dynamics, the continuous
//! Lyapunov equation `A^T P + P A = -I`, and the steady-state estimation
//! error bound built from `P`.

use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LyapunovError {
    #[error("coefficient list is empty")]
    EmptyCoefficients,
    #[error("matrix must be square and non-empty")]
    NotSquare,
    #[error("Lyapunov system is singular; A has eigenvalues summing to zero")]
    Singular,
    #[error("matrix is not Hurwitz: solution has eigenvalue {lambda_min}")]
    NotHurwitz { lambda_min: f64 },
    #[error("state index {index} outside 1..={max}")]
    IndexOutOfRange { index: usize, max: usize },
    #[error("{0}")]
    InvalidArgument(String),
}

/// Dense row-major square matrix.
#[derive(Clone, PartialEq)]
pub struct SquareMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SquareMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[&[f64]]) -> Result<Self, LyapunovError> {
        let n = rows.len();
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(LyapunovError::NotSquare);
        }
        Ok(Self {
            n,
            data: rows.iter().flat_map(|r| r.iter().copied()).collect(),
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        let mut out = Self::zeros(self.n);
        for i in 0..self.n {
            for k in 0..self.n {
                let a = self[(i, k)];
                for j in 0..self.n {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.n);
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self[(i, j)] * v[j]).sum())
            .collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for j in 0..i {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }
}

impl std::ops::Index<(usize, usize)> for SquareMatrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for SquareMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }
}

impl fmt::Debug for SquareMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<&[f64]> = self.data.chunks(self.n.max(1)).collect();
        f.debug_list().entries(rows).finish()
    }
}

/// Matrix of the time-scaled error dynamics: first column `-a_1..-a_{n+1}`,
/// ones on the superdiagonal.
pub fn companion_matrix(coeffs: &[f64]) -> Result<SquareMatrix, LyapunovError> {
    if coeffs.is_empty() {
        return Err(LyapunovError::EmptyCoefficients);
    }
    let m = coeffs.len();
    let mut a = SquareMatrix::zeros(m);
    for (i, c) in coeffs.iter().enumerate() {
        a[(i, 0)] = -c;
        if i + 1 < m {
            a[(i, i + 1)] = 1.0;
        }
    }
    Ok(a)
}

/// Solves `M x = b` in place by Gaussian elimination with partial pivoting.
fn gauss_solve(mut m: Vec<f64>, mut b: Vec<f64>, n: usize) -> Result<Vec<f64>, LyapunovError> {
    let scale = m.iter().fold(0.0f64, |s, v| s.max(v.abs())).max(1.0);
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&r, &s| m[r * n + col].abs().total_cmp(&m[s * n + col].abs()))
            .expect("non-empty range");
        if m[pivot * n + col].abs() <= 1e-13 * scale {
            return Err(LyapunovError::Singular);
        }
        if pivot != col {
            for j in 0..n {
                m.swap(col * n + j, pivot * n + j);
            }
            b.swap(col, pivot);
        }
        let d = m[col * n + col];
        for r in col + 1..n {
            let f = m[r * n + col] / d;
            if f == 0.0 {
                continue;
            }
            for j in col..n {
                m[r * n + j] -= f * m[col * n + j];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let mut acc = b[r];
        for j in r + 1..n {
            acc -= m[r * n + j] * x[j];
        }
        x[r] = acc / m[r * n + r];
    }
    Ok(x)
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
pub fn symmetric_eigenvalues(s: &SquareMatrix) -> Vec<f64> {
    let n = s.dim();
    let mut a = s.clone();
    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in 0..i {
                off += a[(i, j)] * a[(i, j)];
            }
        }
        let diag: f64 = (0..n).map(|i| a[(i, i)] * a[(i, i)]).sum();
        if off <= 1e-30 * diag.max(f64::MIN_POSITIVE) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - sn * akq;
                    a[(k, q)] = sn * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - sn * aqk;
                    a[(q, k)] = sn * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Solution of `A^T P + P A = -I` together with the spectrum extremes of `P`.
#[derive(Debug, Clone, PartialEq)]
pub struct LyapunovResult {
    pub p: SquareMatrix,
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// `max |A^T P + P A + I|`
    pub residual: f64,
}

impl LyapunovResult {
    /// `V(eta) = eta^T P eta`
    pub fn v(&self, eta: &[f64]) -> f64 {
        self.p.mul_vec(eta).iter().zip(eta).map(|(a, b)| a * b).sum()
    }

    /// `W(eta) = |eta|^2`
    pub fn w(&self, eta: &[f64]) -> f64 {
        eta.iter().map(|v| v * v).sum()
    }

    /// `dV/d eta_{n+1} = 2 (P eta)_{n+1}`
    pub fn grad_last(&self, eta: &[f64]) -> f64 {
        2.0 * *self.p.mul_vec(eta).last().expect("non-empty")
    }
}

pub fn lyapunov_residual(a: &SquareMatrix, p: &SquareMatrix) -> f64 {
    let mut r = a.transpose().mul(p);
    let pa = p.mul(a);
    for i in 0..a.dim() {
        for j in 0..a.dim() {
            r[(i, j)] += pa[(i, j)];
        }
        r[(i, i)] += 1.0;
    }
    r.max_abs()
}

/// Solves `A^T P + P A = -I` by vectorizing into an `m^2` linear system.
/// Fails with [`LyapunovError::NotHurwitz`] when the solution is not
/// positive definite.
pub fn solve_lyapunov(a: &SquareMatrix) -> Result<LyapunovResult, LyapunovError> {
    let m = a.dim();
    if m == 0 {
        return Err(LyapunovError::NotSquare);
    }
    let nn = m * m;
    let idx = |i: usize, j: usize| i * m + j;
    let mut sys = vec![0.0; nn * nn];
    let mut rhs = vec![0.0; nn];
    // Row (i, j): sum_k A[k,i] P[k,j] + sum_k P[i,k] A[k,j] = -delta_ij
    for i in 0..m {
        for j in 0..m {
            let row = idx(i, j);
            for k in 0..m {
                sys[row * nn + idx(k, j)] += a[(k, i)];
                sys[row * nn + idx(i, k)] += a[(k, j)];
            }
            if i == j {
                rhs[row] = -1.0;
            }
        }
    }
    let sol = gauss_solve(sys, rhs, nn)?;
    let mut p = SquareMatrix::zeros(m);
    for i in 0..m {
        for j in 0..m {
            p[(i, j)] = 0.5 * (sol[idx(i, j)] + sol[idx(j, i)]);
        }
    }
    let ev = symmetric_eigenvalues(&p);
    let lambda_min = ev[0];
    let lambda_max = ev[m - 1];
    if !(lambda_min > 0.0) {
        return Err(LyapunovError::NotHurwitz { lambda_min });
    }
    let residual = lyapunov_residual(a, &p);
    Ok(LyapunovResult {
        p,
        lambda_min,
        lambda_max,
        residual,
    })
}

/// Limit bound on `|x_i - xhat_i|` for observer order `n`, state index
/// `i` in `1..=n+1`:
///
/// ```text
/// 2 M lambda_max(P)^2 / (lambda_min(P) omega0^(n + 2 - i))
/// ```
pub fn theorem1_bound(
    m: f64,
    lyap: &LyapunovResult,
    omega0: f64,
    n: usize,
    i: usize,
) -> Result<f64, LyapunovError> {
    if i == 0 || i > n + 1 {
        return Err(LyapunovError::IndexOutOfRange { index: i, max: n + 1 });
    }
    if !(omega0 > 0.0) {
        return Err(LyapunovError::InvalidArgument(format!(
            "bandwidth must be positive, got {omega0}"
        )));
    }
    if !(m >= 0.0) {
        return Err(LyapunovError::InvalidArgument(format!(
            "disturbance-rate bound must be non-negative, got {m}"
        )));
    }
    let scale = omega0.powi((n + 2 - i) as i32);
    Ok(2.0 * m * lyap.lambda_max * lyap.lambda_max / (lyap.lambda_min * scale))
}
