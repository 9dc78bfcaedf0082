//! Small dense complex linear algebra: one-sided Jacobi SVD, cyclic Jacobi
//! for Hermitian eigenproblems, and Gauss-Jordan inversion.

use std::ops::{Index, IndexMut, Mul};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub const MAX_SWEEPS: usize = 100;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Row-major dense complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Shape("matrix dimensions must be positive".into()));
        }
        if data.len() != rows * cols {
            return Err(Error::Shape(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Shape("non-finite entry".into()));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from rows; fails on ragged input.
    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != m) {
            return Err(Error::Shape(format!("row {bad} has {} entries, expected {m}", rows[bad].len())));
        }
        Self::from_vec(n, m, rows.concat())
    }

    pub fn from_real_diag(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = Complex64::new(d, 0.0);
        }
        m
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

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn scale(&self, z: Complex64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|a| a * z).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// `||A^H A - I||_F`, zero for a matrix with orthonormal columns.
    pub fn unitarity_residual(&self) -> f64 {
        (&self.adjoint() * self).sub(&Self::identity(self.cols)).frobenius_norm()
    }

    pub fn hermiticity_residual(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        self.sub(&self.adjoint()).frobenius_norm()
    }

    /// Block-diagonal matrix with the given square blocks.
    pub fn block_diag(blocks: &[&ComplexMatrix]) -> Self {
        let n: usize = blocks.iter().map(|b| b.rows).sum();
        let mut out = Self::zeros(n, n);
        let mut off = 0;
        for b in blocks {
            for i in 0..b.rows {
                for j in 0..b.cols {
                    out[(off + i, off + j)] = b[(i, j)];
                }
            }
            off += b.rows;
        }
        out
    }

    pub fn mul_vec(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    fn col_dot(&self, p: usize, q: usize) -> Complex64 {
        (0..self.rows).map(|i| self[(i, p)].conj() * self[(i, q)]).sum()
    }

    fn col_norm_sqr(&self, p: usize) -> f64 {
        (0..self.rows).map(|i| self[(i, p)].norm_sqr()).sum()
    }

    /// Applies the 2x2 unitary `[[a, b], [c, d]]` to columns `p, q` from the right.
    fn rotate_cols(&mut self, p: usize, q: usize, a: Complex64, b: Complex64, c: Complex64, d: Complex64) {
        for i in 0..self.rows {
            let xp = self[(i, p)];
            let xq = self[(i, q)];
            self[(i, p)] = xp * a + xq * c;
            self[(i, q)] = xp * b + xq * d;
        }
    }

    fn rotate_rows(&mut self, p: usize, q: usize, a: Complex64, b: Complex64, c: Complex64, d: Complex64) {
        for j in 0..self.cols {
            let xp = self[(p, j)];
            let xq = self[(q, j)];
            self[(p, j)] = a * xp + b * xq;
            self[(q, j)] = c * xp + d * xq;
        }
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;

    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.cols + j]
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.cols, rhs.rows, "inner dimensions differ");
        let mut out = ComplexMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == ZERO {
                    continue;
                }
                for j in 0..rhs.cols {
                    out.data[i * rhs.cols + j] += a * rhs[(k, j)];
                }
            }
        }
        out
    }
}

/// Thin singular value decomposition `a = u diag(s) v`, with `s` descending.
/// For square input `u` and `v` are unitary.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: ComplexMatrix,
    pub s: Vec<f64>,
    pub v: ComplexMatrix,
}

impl Svd {
    pub fn reconstruct(&self) -> ComplexMatrix {
        let k = self.s.len();
        let mut us = self.u.clone();
        for i in 0..us.rows {
            for j in 0..k {
                us[(i, j)] *= self.s[j];
            }
        }
        &us * &self.v
    }
}

pub fn svd(a: &ComplexMatrix) -> Result<Svd> {
    if a.rows < a.cols {
        let t = svd(&a.adjoint())?;
        return Ok(Svd {
            u: t.v.adjoint(),
            s: t.s,
            v: t.u.adjoint(),
        });
    }
    let (m, n) = (a.rows, a.cols);
    let mut w = a.clone();
    let mut v = ComplexMatrix::identity(n);
    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = w.col_norm_sqr(p);
                let beta = w.col_norm_sqr(q);
                let gamma = w.col_dot(p, q);
                let g = gamma.norm();
                if g == 0.0 || g <= f64::EPSILON * m as f64 * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let phase = gamma / g;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                // J = [[c, s e^{i th}], [-s e^{-i th}, c]]
                let a11 = Complex64::new(c, 0.0);
                let a12 = phase * s;
                let a21 = -phase.conj() * s;
                w.rotate_cols(p, q, a11, a12, a21, a11);
                v.rotate_cols(p, q, a11, a12, a21, a11);
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence("Jacobi SVD"));
    }

    let mut order: Vec<(usize, f64)> = (0..n).map(|j| (j, w.col_norm_sqr(j).sqrt())).collect();
    order.sort_by(|x, y| y.1.total_cmp(&x.1));
    let scale = order[0].1;
    let mut u = ComplexMatrix::zeros(m, n);
    let mut vh = ComplexMatrix::zeros(n, n);
    let mut s = Vec::with_capacity(n);
    let mut deficient = Vec::new();
    for (k, &(j, sigma)) in order.iter().enumerate() {
        s.push(sigma);
        for c in 0..n {
            vh[(k, c)] = v[(c, j)].conj();
        }
        if sigma > 1e-300 && sigma > scale * 1e-15 {
            for i in 0..m {
                u[(i, k)] = w[(i, j)] / sigma;
            }
        } else {
            deficient.push(k);
        }
    }
    complete_columns(&mut u, &deficient);
    Ok(Svd { u, s, v: vh })
}

/// Fills the listed columns with unit vectors orthogonal to all others
/// (modified Gram-Schmidt against the standard basis).
fn complete_columns(u: &mut ComplexMatrix, missing: &[usize]) {
    let m = u.rows;
    let mut filled: Vec<usize> = (0..u.cols).filter(|k| !missing.contains(k)).collect();
    let mut candidate = 0;
    for &k in missing {
        while candidate < m {
            let mut x = vec![ZERO; m];
            x[candidate] = ONE;
            candidate += 1;
            for _ in 0..2 {
                for &f in &filled {
                    let proj: Complex64 = (0..m).map(|i| u[(i, f)].conj() * x[i]).sum();
                    for (i, xi) in x.iter_mut().enumerate() {
                        *xi -= proj * u[(i, f)];
                    }
                }
            }
            let norm = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if norm > 1e-8 {
                for (i, xi) in x.iter().enumerate() {
                    u[(i, k)] = xi / norm;
                }
                filled.push(k);
                break;
            }
        }
    }
}

/// Eigen-decomposition of a Hermitian matrix: `a = vectors diag(values) vectors^H`.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

pub fn hermitian_eigen(a: &ComplexMatrix) -> Result<HermitianEigen> {
    if !a.is_square() {
        return Err(Error::Shape(format!("{}x{} is not square", a.rows, a.cols)));
    }
    let residual = a.hermiticity_residual();
    if residual > 1e-10 * a.frobenius_norm().max(1.0) {
        return Err(Error::NotHermitian(residual));
    }
    let n = a.rows;
    let mut w = a.add(&a.adjoint()).scale(Complex64::new(0.5, 0.0));
    let mut vecs = ComplexMatrix::identity(n);
    let norm = w.frobenius_norm();
    let mut converged = n == 1;
    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| w[(i, j)].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * norm || norm == 0.0 {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = w[(p, q)];
                let g = apq.norm();
                if g == 0.0 {
                    continue;
                }
                let phase = apq / g;
                let app = w[(p, p)].re;
                let aqq = w[(q, q)].re;
                let tau = (aqq - app) / (2.0 * g);
                let t = if tau == 0.0 {
                    1.0
                } else {
                    tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                // G = diag(1, e^{-i th}) [[c, s], [-s, c]]
                let g11 = Complex64::new(c, 0.0);
                let g12 = Complex64::new(s, 0.0);
                let g21 = -phase.conj() * s;
                let g22 = phase.conj() * c;
                w.rotate_cols(p, q, g11, g12, g21, g22);
                w.rotate_rows(p, q, g11.conj(), g21.conj(), g12.conj(), g22.conj());
                vecs.rotate_cols(p, q, g11, g12, g21, g22);
                w[(p, q)] = ZERO;
                w[(q, p)] = ZERO;
            }
        }
    }
    if !converged {
        return Err(Error::NoConvergence("Jacobi eigenvalue iteration"));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| w[(y, y)].re.total_cmp(&w[(x, x)].re));
    let values = order.iter().map(|&k| w[(k, k)].re).collect();
    let mut vectors = ComplexMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        for i in 0..n {
            vectors[(i, dst)] = vecs[(i, src)];
        }
    }
    Ok(HermitianEigen { values, vectors })
}

/// Real eigenvalues of a Hermitian matrix, descending.
pub fn hermitian_eigenvalues(a: &ComplexMatrix) -> Result<Vec<f64>> {
    hermitian_eigen(a).map(|e| e.values)
}

/// Inverse by Gauss-Jordan elimination with partial pivoting.
pub fn matrix_inverse(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    if !a.is_square() {
        return Err(Error::Shape(format!("{}x{} is not square", a.rows, a.cols)));
    }
    let n = a.rows;
    let row_norm = (0..n)
        .map(|i| a.row(i).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
        .fold(0.0, f64::max);
    let threshold = 1e-12 * row_norm;
    let mut w = a.clone();
    let mut inv = ComplexMatrix::identity(n);
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&x, &y| w[(x, col)].norm().total_cmp(&w[(y, col)].norm()))
            .expect("non-empty range");
        if w[(pivot, col)].norm() <= threshold || row_norm == 0.0 {
            return Err(Error::Singular);
        }
        if pivot != col {
            for j in 0..n {
                w.data.swap(pivot * n + j, col * n + j);
                inv.data.swap(pivot * n + j, col * n + j);
            }
        }
        let d = ONE / w[(col, col)];
        for j in 0..n {
            w[(col, j)] *= d;
            inv[(col, j)] *= d;
        }
        for r in 0..n {
            if r == col {
                continue;
            }
            let f = w[(r, col)];
            if f == ZERO {
                continue;
            }
            for j in 0..n {
                let wc = w[(col, j)];
                let ic = inv[(col, j)];
                w[(r, j)] -= f * wc;
                inv[(r, j)] -= f * ic;
            }
        }
    }
    Ok(inv)
}

/// Closest unitary to `a` in Frobenius norm (`u v` from its SVD).
pub fn polar_unitary(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    let d = svd(a)?;
    Ok(&d.u * &d.v)
}

#[cfg(test)]
pub(crate) mod testing {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub fn random_matrix(rows: usize, cols: usize, rng: &mut impl Rng) -> ComplexMatrix {
        let data = (0..rows * cols)
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        ComplexMatrix::from_vec(rows, cols, data).unwrap()
    }

    pub fn random_unitary(n: usize, rng: &mut impl Rng) -> ComplexMatrix {
        polar_unitary(&random_matrix(n, n, rng)).unwrap()
    }

    pub fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }
}
