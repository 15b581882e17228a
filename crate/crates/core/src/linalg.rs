//! Dense complex matrices and the handful of factorizations the rate
//! computations need.
//!
//! Storage is column-major. The SVD is a one-sided (Hestenes) Jacobi sweep,
//! which keeps tiny singular values accurate in absolute terms; that is what
//! makes the null-space rank decision below reliable.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

use num_complex::Complex64;
use num_traits::Zero;

/// Singular values at or below `RANK_TOL * largest` are treated as zero.
pub const RANK_TOL: f64 = 1e-10;

const JACOBI_EPS: f64 = 1e-15;
const JACOBI_MAX_SWEEPS: usize = 80;

#[derive(Debug, Clone, PartialEq)]
pub struct CMat {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl CMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![Complex64::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    /// Builds a matrix from row-major nested data (handy in tests).
    pub fn from_rows(rows: &[&[Complex64]]) -> Self {
        let r = rows.len();
        let c = if r == 0 { 0 } else { rows[0].len() };
        let mut m = Self::zeros(r, c);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), c, "ragged row {i}");
            for (j, v) in row.iter().enumerate() {
                m[(i, j)] = *v;
            }
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for j in 0..cols {
            for i in 0..rows {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.rows == 0 || self.cols == 0
    }

    #[inline]
    pub fn col(&self, j: usize) -> &[Complex64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    #[inline]
    pub fn col_mut(&mut self, j: usize) -> &mut [Complex64] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn iter(&self) -> impl Iterator<Item = &Complex64> {
        self.data.iter()
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn adjoint(&self) -> CMat {
        CMat::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn mul(&self, rhs: &CMat) -> CMat {
        assert_eq!(self.cols, rhs.rows, "inner dimensions differ");
        let mut out = CMat::zeros(self.rows, rhs.cols);
        for j in 0..rhs.cols {
            for k in 0..self.cols {
                let b = rhs[(k, j)];
                if b.is_zero() {
                    continue;
                }
                let a = self.col(k);
                let o = out.col_mut(j);
                for i in 0..a.len() {
                    o[i] += a[i] * b;
                }
            }
        }
        out
    }

    /// Horizontal concatenation `[a b c ...]`.
    pub fn hcat(blocks: &[&CMat]) -> CMat {
        let rows = blocks.first().map_or(0, |b| b.rows);
        let mut data = Vec::new();
        let mut cols = 0;
        for b in blocks {
            assert_eq!(b.rows, rows, "hcat row mismatch");
            data.extend_from_slice(&b.data);
            cols += b.cols;
        }
        CMat { rows, cols, data }
    }

    /// Vertical concatenation.
    pub fn vcat(blocks: &[&CMat]) -> CMat {
        let cols = blocks.first().map_or(0, |b| b.cols);
        let rows: usize = blocks.iter().map(|b| b.rows).sum();
        let mut out = CMat::zeros(rows, cols);
        let mut r0 = 0;
        for b in blocks {
            assert_eq!(b.cols, cols, "vcat column mismatch");
            for j in 0..cols {
                out.col_mut(j)[r0..r0 + b.rows].copy_from_slice(b.col(j));
            }
            r0 += b.rows;
        }
        out
    }

    /// Columns `start..start + len` as a new matrix.
    pub fn columns(&self, start: usize, len: usize) -> CMat {
        CMat {
            rows: self.rows,
            cols: len,
            data: self.data[start * self.rows..(start + len) * self.rows].to_vec(),
        }
    }
}

impl Index<(usize, usize)> for CMat {
    type Output = Complex64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[j * self.rows + i]
    }
}

impl IndexMut<(usize, usize)> for CMat {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[j * self.rows + i]
    }
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    // a^H b
    a.iter().zip(b).fold(Complex64::zero(), |acc, (x, y)| acc + x.conj() * y)
}

fn norm_sq(a: &[Complex64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum()
}

/// Thin singular value decomposition `A = U diag(s) V^H`.
///
/// `s` is sorted descending and has `min(rows, cols)` entries. Columns of `u`
/// and `v` belonging to zero singular values are left as zero vectors.
#[derive(Debug, Clone)]
pub struct Svd {
    pub s: Vec<f64>,
    pub u: CMat,
    pub v: CMat,
}

impl Svd {
    /// Number of singular values above `RANK_TOL` relative to the largest.
    pub fn rank(&self) -> usize {
        let smax = self.s.first().copied().unwrap_or(0.0);
        if smax <= 0.0 {
            return 0;
        }
        self.s.iter().take_while(|&&s| s > RANK_TOL * smax).count()
    }
}

/// One-sided Jacobi on the columns of `work`; returns the accumulated right
/// rotation. On exit the columns of `work` are mutually orthogonal.
fn hestenes(work: &mut CMat) -> CMat {
    let n = work.cols;
    let mut v = CMat::identity(n);
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = norm_sq(work.col(p));
                let beta = norm_sq(work.col(q));
                let gamma = dot(work.col(p), work.col(q));
                let g = gamma.norm();
                if g == 0.0 || g <= JACOBI_EPS * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                // Phase-align column q so the pair has a real inner product.
                let phase = gamma / g;
                let phase_conj = phase.conj();
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate_pair(work, p, q, phase_conj, c, s);
                rotate_pair(&mut v, p, q, phase_conj, c, s);
            }
        }
        if !rotated {
            break;
        }
    }
    v
}

#[inline]
fn rotate_pair(m: &mut CMat, p: usize, q: usize, phase_conj: Complex64, c: f64, s: f64) {
    let rows = m.rows;
    for i in 0..rows {
        let a = m.data[p * rows + i];
        let b = m.data[q * rows + i] * phase_conj;
        m.data[p * rows + i] = a * c - b * s;
        m.data[q * rows + i] = a * s + b * c;
    }
}

/// Orthogonalized columns -> (sorted singular values, normalized left
/// vectors, matching right vectors).
fn finish(work: CMat, rot: CMat) -> Svd {
    let k = work.cols;
    let norms: Vec<f64> = (0..k).map(|j| norm_sq(work.col(j)).sqrt()).collect();
    let mut order: Vec<usize> = (0..k).collect();
    // Stable sort keeps ties in their original column order.
    order.sort_by(|&a, &b| norms[b].partial_cmp(&norms[a]).unwrap_or(core::cmp::Ordering::Equal));
    let smax = order.first().map_or(0.0, |&j| norms[j]);
    let mut u = CMat::zeros(work.rows, k);
    let mut v = CMat::zeros(rot.rows, k);
    let mut s = Vec::with_capacity(k);
    for (dst, &src) in order.iter().enumerate() {
        let sigma = norms[src];
        s.push(sigma);
        v.col_mut(dst).copy_from_slice(rot.col(src));
        if sigma > 0.0 && sigma > f64::MIN_POSITIVE * smax.max(1.0) {
            let inv = 1.0 / sigma;
            for (o, x) in u.col_mut(dst).iter_mut().zip(work.col(src)) {
                *o = x * inv;
            }
        }
    }
    Svd { s, u, v }
}

/// Thin SVD, picking whichever orientation has fewer columns to rotate.
pub fn svd(a: &CMat) -> Svd {
    if a.rows >= a.cols {
        let mut work = a.clone();
        let rot = hestenes(&mut work);
        finish(work, rot)
    } else {
        // A^H W = Q S  =>  A = W S Q^H.
        let mut work = a.adjoint();
        let rot = hestenes(&mut work);
        let Svd { s, u, v } = finish(work, rot);
        Svd { s, u: v, v: u }
    }
}

/// Singular values only, descending.
pub fn singular_values(a: &CMat) -> Vec<f64> {
    let mut work = if a.rows >= a.cols { a.clone() } else { a.adjoint() };
    hestenes(&mut work);
    let mut s: Vec<f64> = (0..work.cols).map(|j| norm_sq(work.col(j)).sqrt()).collect();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap_or(core::cmp::Ordering::Equal));
    s
}

/// Orthonormal basis of `{x : A x = 0}` as the columns of a `cols(A) x d`
/// matrix. Rank is decided by `RANK_TOL` relative to the largest singular
/// value; a zero matrix has the whole space as its null space.
pub fn null_space(a: &CMat) -> CMat {
    let n = a.cols;
    if a.rows == 0 {
        return CMat::identity(n);
    }
    let dec = svd(a);
    let rank = dec.rank();
    let row_space = dec.v.columns(0, rank);
    orthonormal_complement(&row_space)
}

/// Orthonormal basis for the complement of the span of `q`'s columns, which
/// must already be orthonormal.
pub fn orthonormal_complement(q: &CMat) -> CMat {
    let n = q.rows;
    let k = q.cols;
    let want = n.saturating_sub(k);
    let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(n);
    for j in 0..k {
        basis.push(q.col(j).to_vec());
    }
    // Residuals of the unit vectors against everything accepted so far.
    let mut cand: Vec<Vec<Complex64>> = (0..n)
        .map(|i| {
            let mut e = vec![Complex64::zero(); n];
            e[i] = Complex64::new(1.0, 0.0);
            e
        })
        .collect();
    for c in cand.iter_mut() {
        for _ in 0..2 {
            for b in &basis {
                project_out(c, b);
            }
        }
    }
    let mut out = CMat::zeros(n, want);
    for col in 0..want {
        // Greedy: the candidate with the largest remaining component.
        let (best, _) = cand
            .iter()
            .enumerate()
            .map(|(i, c)| (i, norm_sq(c)))
            .fold((0, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        let mut v = cand[best].clone();
        for _ in 0..2 {
            for b in &basis {
                project_out(&mut v, b);
            }
        }
        let nrm = norm_sq(&v).sqrt();
        for z in v.iter_mut() {
            *z /= nrm;
        }
        for c in cand.iter_mut() {
            project_out(c, &v);
        }
        cand[best].iter_mut().for_each(|z| *z = Complex64::zero());
        out.col_mut(col).copy_from_slice(&v);
        basis.push(v);
    }
    out
}

#[inline]
fn project_out(x: &mut [Complex64], unit: &[Complex64]) {
    let c = dot(unit, x);
    for (xi, ui) in x.iter_mut().zip(unit) {
        *xi -= ui * c;
    }
}
