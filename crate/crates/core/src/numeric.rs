//! Floating-point kernels: matrix exponential and the symmetric-definite
//! generalized eigenproblem.

use nalgebra::{DMatrix, DVector};

use crate::exact::{is_zero_mat, mat_mul, to_f64_mat, RMat};

pub fn dmatrix(m: &[Vec<f64>]) -> DMatrix<f64> {
    let rows = m.len();
    let cols = m.first().map_or(0, Vec::len);
    DMatrix::from_fn(rows, cols, |i, j| m[i][j])
}

pub fn dmatrix_exact(m: &RMat) -> DMatrix<f64> {
    dmatrix(&to_f64_mat(m))
}

/// `e^{τA}` with an exact truncated series when `A` is nilpotent.
#[derive(Debug, Clone)]
pub struct Expm {
    a: DMatrix<f64>,
    /// Powers `A^k`, `k < index`, when `A^index = 0`.
    nilpotent_powers: Option<Vec<DMatrix<f64>>>,
}

impl Expm {
    pub fn new(a: &RMat) -> Self {
        let n = a.len();
        let mut powers = vec![crate::exact::identity(n)];
        let mut nil = None;
        for _ in 0..n {
            let next = mat_mul(powers.last().expect("non-empty"), a);
            if is_zero_mat(&next) {
                nil = Some(powers.iter().map(dmatrix_exact).collect());
                break;
            }
            powers.push(next);
        }
        Self { a: dmatrix_exact(a), nilpotent_powers: nil }
    }

    pub fn from_f64(a: DMatrix<f64>) -> Self {
        Self { a, nilpotent_powers: None }
    }

    pub fn is_nilpotent(&self) -> bool {
        self.nilpotent_powers.is_some()
    }

    pub fn at(&self, tau: f64) -> DMatrix<f64> {
        match &self.nilpotent_powers {
            Some(powers) => {
                let mut out = DMatrix::zeros(self.a.nrows(), self.a.ncols());
                let mut c = 1.0;
                for (k, p) in powers.iter().enumerate() {
                    if k > 0 {
                        c *= tau / k as f64;
                    }
                    out += p * c;
                }
                out
            }
            None => (&self.a * tau).exp(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EigenError {
    #[error("B is not symmetric positive definite")]
    NotSpd,
    #[error("matrix sizes differ")]
    Shape,
}

/// Smallest generalized eigenpair of `(A, B)`: minimizes `vᵀAv / vᵀBv`.
pub fn lambda_min(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<(f64, DVector<f64>), EigenError> {
    if a.shape() != b.shape() || a.nrows() != a.ncols() {
        return Err(EigenError::Shape);
    }
    let chol = b.clone().cholesky().ok_or(EigenError::NotSpd)?;
    let l = chol.l();
    let linv_a = l.solve_lower_triangular(a).ok_or(EigenError::NotSpd)?;
    let c = l.solve_lower_triangular(&linv_a.transpose()).ok_or(EigenError::NotSpd)?;
    let c = (&c + c.transpose()) * 0.5;
    let eig = c.symmetric_eigen();
    let (idx, &val) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|x, y| x.1.total_cmp(y.1))
        .ok_or(EigenError::Shape)?;
    let y = eig.eigenvectors.column(idx).into_owned();
    let v = l.transpose().solve_upper_triangular(&y).ok_or(EigenError::NotSpd)?;
    Ok((val, v))
}

pub fn rayleigh(a: &DMatrix<f64>, b: &DMatrix<f64>, v: &DVector<f64>) -> f64 {
    v.dot(&(a * v)) / v.dot(&(b * v))
}
