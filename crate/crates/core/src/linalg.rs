//! Small complex matrix types: a 2×2 matrix and a banded square matrix indexed
//! by (possibly negative) interleaved lattice indices.

use std::ops::{Mul, Range};

use num_complex::Complex;
use num_traits::{One, Zero};

use crate::scalar::{Real, C};

/// Row-major 2×2 complex matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat2<T> {
    pub m: [[C<T>; 2]; 2],
}

impl<T: Real> Mat2<T> {
    pub fn new(a: C<T>, b: C<T>, c: C<T>, d: C<T>) -> Self {
        Mat2 { m: [[a, b], [c, d]] }
    }

    pub fn identity() -> Self {
        Self::new(C::one(), C::zero(), C::zero(), C::one())
    }

    pub fn sigma1() -> Self {
        Self::new(C::zero(), C::one(), C::one(), C::zero())
    }

    pub fn from_real(a: T, b: T, c: T, d: T) -> Self {
        Self::new(a.into(), b.into(), c.into(), d.into())
    }

    pub fn det(&self) -> C<T> {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    pub fn trace(&self) -> C<T> {
        self.m[0][0] + self.m[1][1]
    }

    pub fn adjoint(&self) -> Self {
        let m = &self.m;
        Self::new(m[0][0].conj(), m[1][0].conj(), m[0][1].conj(), m[1][1].conj())
    }

    pub fn transpose(&self) -> Self {
        let m = &self.m;
        Self::new(m[0][0], m[1][0], m[0][1], m[1][1])
    }

    pub fn scale(&self, s: C<T>) -> Self {
        let m = &self.m;
        Self::new(m[0][0] * s, m[0][1] * s, m[1][0] * s, m[1][1] * s)
    }

    pub fn inverse(&self) -> Option<Self> {
        let d = self.det();
        if d.norm() == T::zero() {
            return None;
        }
        let m = &self.m;
        Some(Self::new(m[1][1], -m[0][1], -m[1][0], m[0][0]).scale(d.inv()))
    }

    pub fn apply(&self, v: [C<T>; 2]) -> [C<T>; 2] {
        [
            self.m[0][0] * v[0] + self.m[0][1] * v[1],
            self.m[1][0] * v[0] + self.m[1][1] * v[1],
        ]
    }

    pub fn frobenius_sqr(&self) -> T {
        self.m.iter().flatten().fold(T::zero(), |s, z| s + z.norm_sqr())
    }

    /// Operator 2-norm (largest singular value), in closed form. The gap
    /// between the squared singular values is taken from the row Gram matrix,
    /// `(‖r₁‖² − ‖r₂‖²)² + 4|⟨r₁, r₂⟩|²`, which does not cancel.
    pub fn op_norm(&self) -> T {
        let m = &self.m;
        let n1 = m[0][0].norm_sqr() + m[0][1].norm_sqr();
        let n2 = m[1][0].norm_sqr() + m[1][1].norm_sqr();
        let g = m[0][0] * m[1][0].conj() + m[0][1] * m[1][1].conj();
        let two = T::lit(2.0);
        let gap = ((n1 - n2) * (n1 - n2) + two * two * g.norm_sqr()).sqrt();
        ((n1 + n2 + gap) / two).sqrt()
    }

    pub fn max_abs(&self) -> T {
        self.m.iter().flatten().fold(T::zero(), |s, z| s.max(z.norm()))
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        let mut out = T::zero();
        for i in 0..2 {
            for j in 0..2 {
                out = out.max((self.m[i][j] - other.m[i][j]).norm());
            }
        }
        out
    }

    /// Largest entry of M*M − 1.
    pub fn unitarity_defect(&self) -> T {
        (self.adjoint() * *self).max_abs_diff(&Self::identity())
    }
}

impl<T: Real> Mul for Mat2<T> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let a = &self.m;
        let b = &o.m;
        Self::new(
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        )
    }
}

/// Square banded matrix on the index range `lo .. lo+n` with half-bandwidth `w`.
/// Entries outside the band or the range read as zero.
#[derive(Clone, Debug, PartialEq)]
pub struct Banded<T> {
    lo: i64,
    n: usize,
    w: usize,
    data: Vec<C<T>>,
}

impl<T: Real> Banded<T> {
    pub fn zeros(range: Range<i64>, w: usize) -> Self {
        assert!(range.end >= range.start, "reversed index range");
        let n = (range.end - range.start) as usize;
        Banded { lo: range.start, n, w, data: vec![C::zero(); n * (2 * w + 1)] }
    }

    pub fn identity(range: Range<i64>, w: usize) -> Self {
        let mut out = Self::zeros(range.clone(), w);
        for k in range {
            out.set(k, k, C::one());
        }
        out
    }

    pub fn range(&self) -> Range<i64> {
        self.lo..self.lo + self.n as i64
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn half_bandwidth(&self) -> usize {
        self.w
    }

    fn slot(&self, r: i64, c: i64) -> Option<usize> {
        let off = c - r;
        if r < self.lo || c < self.lo || off.unsigned_abs() as usize > self.w {
            return None;
        }
        let ri = (r - self.lo) as usize;
        let ci = (c - self.lo) as usize;
        if ri >= self.n || ci >= self.n {
            return None;
        }
        Some(ri * (2 * self.w + 1) + (off + self.w as i64) as usize)
    }

    pub fn get(&self, r: i64, c: i64) -> C<T> {
        self.slot(r, c).map_or_else(C::zero, |i| self.data[i])
    }

    /// Sets an entry; silently drops writes outside the range, panics on a band violation.
    pub fn set(&mut self, r: i64, c: i64, v: C<T>) {
        if !self.range().contains(&r) || !self.range().contains(&c) {
            return;
        }
        let i = self.slot(r, c).expect("entry outside band");
        self.data[i] = v;
    }

    /// Nonzero-capable columns of row `r`, clipped to the range.
    pub fn row_cols(&self, r: i64) -> Range<i64> {
        let rg = self.range();
        let lo = (r - self.w as i64).max(rg.start);
        let hi = (r + self.w as i64 + 1).min(rg.end);
        lo..hi.max(lo)
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.range(), self.w);
        for r in self.range() {
            for c in self.row_cols(r) {
                out.set(c, r, self.get(r, c).conj());
            }
        }
        out
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.range(), self.w);
        for r in self.range() {
            for c in self.row_cols(r) {
                out.set(c, r, self.get(r, c));
            }
        }
        out
    }

    /// Product on the common range. Contributions from indices outside the
    /// range are lost, so the result is exact only away from the edges.
    pub fn matmul(&self, o: &Self) -> Self {
        assert_eq!(self.range(), o.range(), "range mismatch");
        let mut out = Self::zeros(self.range(), self.w + o.w);
        for r in self.range() {
            for k in self.row_cols(r) {
                let a = self.get(r, k);
                if a == C::zero() {
                    continue;
                }
                for c in o.row_cols(k) {
                    let i = out.slot(r, c).unwrap();
                    out.data[i] += a * o.get(k, c);
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[C<T>]) -> Vec<C<T>> {
        assert_eq!(v.len(), self.n);
        self.range()
            .map(|r| {
                self.row_cols(r)
                    .fold(C::zero(), |s, c| s + self.get(r, c) * v[(c - self.lo) as usize])
            })
            .collect()
    }

    /// Copies the entries into a matrix with another range/bandwidth.
    pub fn reshaped(&self, range: Range<i64>, w: usize) -> Self {
        let mut out = Self::zeros(range.clone(), w);
        for r in range {
            for c in out.row_cols(r) {
                out.set(r, c, self.get(r, c));
            }
        }
        out
    }

    /// Max entry difference over rows and columns in `block`.
    pub fn max_abs_diff_on(&self, o: &Self, block: Range<i64>) -> T {
        let w = self.w.max(o.w) as i64;
        let mut out = T::zero();
        for r in block.clone() {
            let lo = (r - w).max(block.start);
            let hi = (r + w + 1).min(block.end);
            for c in lo..hi {
                out = out.max((self.get(r, c) - o.get(r, c)).norm());
            }
        }
        out
    }

    pub fn max_abs_diff(&self, o: &Self) -> T {
        let rg = self.range();
        let start = rg.start.min(o.range().start);
        let end = rg.end.max(o.range().end);
        self.max_abs_diff_on(o, start..end)
    }

    /// ‖M*M − 1‖_max restricted to `block`. Pass the full range for exact matrices.
    pub fn unitarity_defect_on(&self, block: Range<i64>) -> T {
        let g = self.adjoint().matmul(self);
        g.max_abs_diff_on(&Self::identity(self.range(), 0), block)
    }

    pub fn to_dense(&self) -> Vec<Vec<C<T>>> {
        self.range()
            .map(|r| self.range().map(|c| self.get(r, c)).collect())
            .collect()
    }

    pub fn map(&self, f: impl Fn(i64, i64, C<T>) -> C<T>) -> Self {
        let mut out = self.clone();
        for r in self.range() {
            for c in self.row_cols(r) {
                out.set(r, c, f(r, c, self.get(r, c)));
            }
        }
        out
    }
}

impl Banded<f64> {
    pub fn to_faer(&self) -> faer::Mat<Complex<f64>> {
        let lo = self.lo;
        faer::Mat::from_fn(self.n, self.n, |i, j| self.get(lo + i as i64, lo + j as i64))
    }
}
