//! Dense linear algebra over exact rationals.
//!
//! Matrices are row-major `Vec<Vec<Rational>>`. Sizes here are tiny (the
//! state dimension), so clarity wins over clever storage.

use num_traits::{One, Zero};

use crate::rational::{format_rational, to_f64, Rational};

pub type RVec = Vec<Rational>;
pub type RMat = Vec<Vec<Rational>>;

pub fn zeros(rows: usize, cols: usize) -> RMat {
    vec![vec![Rational::zero(); cols]; rows]
}

pub fn zero_vec(n: usize) -> RVec {
    vec![Rational::zero(); n]
}

pub fn identity(n: usize) -> RMat {
    let mut m = zeros(n, n);
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = Rational::one();
    }
    m
}

pub fn unit(n: usize, i: usize) -> RVec {
    let mut v = zero_vec(n);
    v[i] = Rational::one();
    v
}

pub fn is_zero_vec(v: &[Rational]) -> bool {
    v.iter().all(Zero::is_zero)
}

pub fn is_zero_mat(m: &RMat) -> bool {
    m.iter().all(|r| is_zero_vec(r))
}

pub fn dot(a: &[Rational], b: &[Rational]) -> Rational {
    a.iter().zip(b).fold(Rational::zero(), |acc, (x, y)| acc + x * y)
}

pub fn vadd(a: &[Rational], b: &[Rational]) -> RVec {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn vsub(a: &[Rational], b: &[Rational]) -> RVec {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn vscale(c: &Rational, a: &[Rational]) -> RVec {
    a.iter().map(|x| c * x).collect()
}

pub fn vneg(a: &[Rational]) -> RVec {
    a.iter().map(|x| -x.clone()).collect()
}

pub fn mat_vec(m: &RMat, v: &[Rational]) -> RVec {
    m.iter().map(|row| dot(row, v)).collect()
}

pub fn mat_mul(a: &RMat, b: &RMat) -> RMat {
    let cols = b.first().map_or(0, Vec::len);
    a.iter()
        .map(|row| {
            (0..cols)
                .map(|j| {
                    row.iter()
                        .zip(b)
                        .fold(Rational::zero(), |acc, (x, brow)| acc + x * &brow[j])
                })
                .collect()
        })
        .collect()
}

pub fn mat_add(a: &RMat, b: &RMat) -> RMat {
    a.iter().zip(b).map(|(r, s)| vadd(r, s)).collect()
}

pub fn mat_sub(a: &RMat, b: &RMat) -> RMat {
    a.iter().zip(b).map(|(r, s)| vsub(r, s)).collect()
}

pub fn mat_scale(c: &Rational, a: &RMat) -> RMat {
    a.iter().map(|r| vscale(c, r)).collect()
}

pub fn transpose(a: &RMat) -> RMat {
    let cols = a.first().map_or(0, Vec::len);
    (0..cols).map(|j| a.iter().map(|row| row[j].clone()).collect()).collect()
}

/// Matrix whose columns are the given vectors.
pub fn from_columns(cols: &[RVec], rows: usize) -> RMat {
    (0..rows).map(|i| cols.iter().map(|c| c[i].clone()).collect()).collect()
}

pub fn outer(a: &[Rational], b: &[Rational]) -> RMat {
    a.iter().map(|x| b.iter().map(|y| x * y).collect()).collect()
}

pub fn mat_pow(a: &RMat, k: usize) -> RMat {
    let mut acc = identity(a.len());
    for _ in 0..k {
        acc = mat_mul(&acc, a);
    }
    acc
}

pub fn to_f64_vec(v: &[Rational]) -> Vec<f64> {
    v.iter().map(to_f64).collect()
}

pub fn to_f64_mat(m: &RMat) -> Vec<Vec<f64>> {
    m.iter().map(|r| to_f64_vec(r)).collect()
}

pub fn format_vec(v: &[Rational]) -> String {
    let parts: Vec<String> = v.iter().map(format_rational).collect();
    format!("({})", parts.join(","))
}

/// Reduced row echelon form; returns the pivot columns.
fn rref(m: &mut RMat) -> Vec<usize> {
    let rows = m.len();
    let cols = m.first().map_or(0, Vec::len);
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(r, p);
        let inv = Rational::one() / &m[r][c];
        for x in m[r].iter_mut() {
            *x *= &inv;
        }
        for i in 0..rows {
            if i != r && !m[i][c].is_zero() {
                let f = m[i][c].clone();
                for j in 0..cols {
                    let t = &f * &m[r][j];
                    m[i][j] -= t;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

pub fn rank(vectors: &[RVec]) -> usize {
    if vectors.is_empty() {
        return 0;
    }
    let mut m: RMat = vectors.to_vec();
    rref(&mut m).len()
}

pub fn inverse(a: &RMat) -> Option<RMat> {
    let n = a.len();
    let mut aug: RMat = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend(unit(n, i));
            r
        })
        .collect();
    let pivots = rref(&mut aug);
    if pivots.len() < n || pivots[n - 1] != n - 1 {
        return None;
    }
    Some(aug.into_iter().map(|r| r[n..].to_vec()).collect())
}

/// Solves `A x = y` for square invertible `A`.
pub fn solve(a: &RMat, y: &[Rational]) -> Option<RVec> {
    inverse(a).map(|inv| mat_vec(&inv, y))
}

/// Mutually orthogonal (unnormalized) basis of the span of `vectors`,
/// skipping dependent entries.
pub fn gram_schmidt(vectors: &[RVec]) -> Vec<RVec> {
    let mut out: Vec<RVec> = Vec::new();
    for v in vectors {
        let mut w = v.clone();
        for q in &out {
            let c = dot(&w, q) / dot(q, q);
            w = vsub(&w, &vscale(&c, q));
        }
        if !is_zero_vec(&w) {
            out.push(w);
        }
    }
    out
}

/// A linear subspace of ℚⁿ described by a basis of independent vectors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Subspace {
    n: usize,
    basis: Vec<RVec>,
    /// `(BᵀB)⁻¹Bᵀ`: maps `x` to the coordinates of its orthogonal projection.
    dual: RMat,
}

impl Subspace {
    /// Span of the given vectors; dependent vectors are dropped in order, so
    /// the basis is the first maximal independent prefix-selection.
    pub fn span(n: usize, vectors: &[RVec]) -> Self {
        let mut basis: Vec<RVec> = Vec::new();
        for v in vectors {
            let mut trial = basis.clone();
            trial.push(v.clone());
            if rank(&trial) == trial.len() {
                basis = trial;
            }
        }
        Self::from_basis(n, basis)
    }

    fn from_basis(n: usize, basis: Vec<RVec>) -> Self {
        let d = basis.len();
        let dual = if d == 0 {
            Vec::new()
        } else {
            let gram: RMat = (0..d)
                .map(|i| (0..d).map(|j| dot(&basis[i], &basis[j])).collect())
                .collect();
            let ginv = inverse(&gram).expect("basis vectors are independent");
            mat_mul(&ginv, &basis)
        };
        Self { n, basis, dual }
    }

    pub fn zero(n: usize) -> Self {
        Self::from_basis(n, Vec::new())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[RVec] {
        &self.basis
    }

    /// Coordinates of the orthogonal projection of `x` in the basis.
    pub fn coordinates(&self, x: &[Rational]) -> RVec {
        mat_vec(&self.dual, x)
    }

    pub fn coordinate_matrix(&self) -> &RMat {
        &self.dual
    }

    pub fn project(&self, x: &[Rational]) -> RVec {
        let c = self.coordinates(x);
        let mut out = zero_vec(self.n);
        for (ci, b) in c.iter().zip(&self.basis) {
            out = vadd(&out, &vscale(ci, b));
        }
        out
    }

    pub fn project_perp(&self, x: &[Rational]) -> RVec {
        vsub(x, &self.project(x))
    }

    pub fn contains(&self, x: &[Rational]) -> bool {
        is_zero_vec(&self.project_perp(x))
    }

    pub fn contains_subspace(&self, other: &Subspace) -> bool {
        other.basis.iter().all(|v| self.contains(v))
    }

    /// Orthogonal projector matrix `P`.
    pub fn projector(&self) -> RMat {
        if self.basis.is_empty() {
            return zeros(self.n, self.n);
        }
        mat_mul(&from_columns(&self.basis, self.n), &self.dual)
    }

    pub fn projector_perp(&self) -> RMat {
        mat_sub(&identity(self.n), &self.projector())
    }

    /// Orthogonal basis of the orthogonal complement, from Gram–Schmidt on
    /// the basis followed by the canonical vectors.
    pub fn complement_basis(&self) -> Vec<RVec> {
        let mut all = self.basis.clone();
        all.extend((0..self.n).map(|i| unit(self.n, i)));
        gram_schmidt(&all).split_off(self.dim())
    }
}
