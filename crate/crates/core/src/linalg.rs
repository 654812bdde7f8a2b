//! Small dense complex matrices and superoperators.
//!
//! The propagators work with matrices of dimension 2..=8, where allocation
//! and dispatch overhead of a general-purpose library dominate. [`CMat`] is a
//! row-major square matrix with in-place kernels used in the hot loops;
//! nalgebra is used for the one-off decompositions.

use nalgebra::DMatrix;
use num_complex::Complex64;
use std::ops::{Index, IndexMut};

pub type C64 = Complex64;

pub const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Square complex matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct CMat {
    n: usize,
    data: Vec<C64>,
}

impl CMat {
    pub fn zeros(n: usize) -> Self {
        CMat {
            n,
            data: vec![C64::new(0.0, 0.0); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for k in 0..n {
            m[(k, k)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for r in 0..n {
            for c in 0..n {
                data.push(f(r, c));
            }
        }
        CMat { n, data }
    }

    pub fn from_real(n: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        Self::from_fn(n, |r, c| C64::new(f(r, c), 0.0))
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len());
        for (k, v) in values.iter().enumerate() {
            m[(k, k)] = C64::new(*v, 0.0);
        }
        m
    }

    /// Projector `|k><k|`.
    pub fn basis_projector(n: usize, k: usize) -> Self {
        let mut m = Self::zeros(n);
        m[(k, k)] = C64::new(1.0, 0.0);
        m
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn fill_zero(&mut self) {
        self.data.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
    }

    pub fn copy_from(&mut self, other: &CMat) {
        debug_assert_eq!(self.n, other.n);
        self.data.copy_from_slice(&other.data);
    }

    pub fn trace(&self) -> C64 {
        (0..self.n).map(|k| self[(k, k)]).sum()
    }

    pub fn diag_real(&self) -> Vec<f64> {
        (0..self.n).map(|k| self[(k, k)].re).collect()
    }

    pub fn adjoint(&self) -> CMat {
        CMat::from_fn(self.n, |r, c| self[(c, r)].conj())
    }

    /// Largest |entry|.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// max |A - A^dagger| over entries.
    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.n;
        let mut worst = 0.0f64;
        for r in 0..n {
            for c in r..n {
                worst = worst.max((self[(r, c)] - self[(c, r)].conj()).norm());
            }
        }
        worst
    }

    /// Replace `A` by `(A + A^dagger)/2`.
    pub fn make_hermitian(&mut self) {
        let n = self.n;
        for r in 0..n {
            let d = self[(r, r)];
            self[(r, r)] = C64::new(d.re, 0.0);
            for c in (r + 1)..n {
                let avg = (self[(r, c)] + self[(c, r)].conj()) * 0.5;
                self[(r, c)] = avg;
                self[(c, r)] = avg.conj();
            }
        }
    }

    pub fn scale(&mut self, s: C64) {
        self.data.iter_mut().for_each(|z| *z *= s);
    }

    /// `self += s * other`
    #[inline]
    pub fn axpy(&mut self, s: C64, other: &CMat) {
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
    }

    pub fn scaled(&self, s: C64) -> CMat {
        let mut m = self.clone();
        m.scale(s);
        m
    }

    pub fn add(&self, other: &CMat) -> CMat {
        let mut m = self.clone();
        m.axpy(C64::new(1.0, 0.0), other);
        m
    }

    pub fn sub(&self, other: &CMat) -> CMat {
        let mut m = self.clone();
        m.axpy(C64::new(-1.0, 0.0), other);
        m
    }

    pub fn matmul(&self, other: &CMat) -> CMat {
        let mut out = CMat::zeros(self.n);
        matmul_into(self, other, &mut out);
        out
    }

    pub fn commutator(&self, other: &CMat) -> CMat {
        self.matmul(other).sub(&other.matmul(self))
    }

    pub fn anticommutator(&self, other: &CMat) -> CMat {
        self.matmul(other).add(&other.matmul(self))
    }

    /// `Tr(self * other)`
    pub fn trace_product(&self, other: &CMat) -> C64 {
        let n = self.n;
        let mut acc = C64::new(0.0, 0.0);
        for r in 0..n {
            for k in 0..n {
                acc += self[(r, k)] * other[(k, r)];
            }
        }
        acc
    }

    /// Max |self - other| over entries.
    pub fn max_abs_diff(&self, other: &CMat) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn to_nalgebra(&self) -> DMatrix<C64> {
        DMatrix::from_fn(self.n, self.n, |r, c| self[(r, c)])
    }

    pub fn from_nalgebra(m: &DMatrix<C64>) -> CMat {
        assert_eq!(m.nrows(), m.ncols());
        CMat::from_fn(m.nrows(), |r, c| m[(r, c)])
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn hermitian_eigenvalues(&self) -> Vec<f64> {
        let mut h = self.clone();
        h.make_hermitian();
        let eig = nalgebra::SymmetricEigen::new(h.to_nalgebra());
        let mut v: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        v.sort_by(|a, b| a.total_cmp(b));
        v
    }

    /// Trace distance `(1/2) * sum |eig(A - B)|` for Hermitian arguments.
    pub fn trace_distance(&self, other: &CMat) -> f64 {
        0.5 * self
            .sub(other)
            .hermitian_eigenvalues()
            .iter()
            .map(|e| e.abs())
            .sum::<f64>()
    }
}

impl Index<(usize, usize)> for CMat {
    type Output = C64;
    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &C64 {
        &self.data[r * self.n + c]
    }
}

impl IndexMut<(usize, usize)> for CMat {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut C64 {
        &mut self.data[r * self.n + c]
    }
}

/// `out = a * b`
#[inline]
pub fn matmul_into(a: &CMat, b: &CMat, out: &mut CMat) {
    let n = a.n;
    debug_assert!(b.n == n && out.n == n);
    for r in 0..n {
        let row = &a.data[r * n..(r + 1) * n];
        let dst = &mut out.data[r * n..(r + 1) * n];
        dst.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
        for (k, &ark) in row.iter().enumerate() {
            if ark.re == 0.0 && ark.im == 0.0 {
                continue;
            }
            let brow = &b.data[k * n..(k + 1) * n];
            for (d, &bkc) in dst.iter_mut().zip(brow) {
                *d += ark * bkc;
            }
        }
    }
}

/// `out += s * (a*b - sign*b*a)`; `sign = 1` gives a commutator, `-1` an anticommutator.
#[inline]
pub fn add_bracket(a: &CMat, b: &CMat, sign: f64, s: C64, out: &mut CMat) {
    let n = a.n;
    for r in 0..n {
        for c in 0..n {
            let mut ab = C64::new(0.0, 0.0);
            let mut ba = C64::new(0.0, 0.0);
            for k in 0..n {
                ab += a.data[r * n + k] * b.data[k * n + c];
                ba += b.data[r * n + k] * a.data[k * n + c];
            }
            out.data[r * n + c] += s * (ab - ba * sign);
        }
    }
}

/// Dense linear map on `n x n` matrices, stored as an `n^2 x n^2` matrix acting on
/// the row-major vectorization.
#[derive(Clone, Debug)]
pub struct Superoperator {
    n: usize,
    data: Vec<C64>,
}

impl Superoperator {
    pub fn zeros(n: usize) -> Self {
        Superoperator {
            n,
            data: vec![C64::new(0.0, 0.0); n * n * n * n],
        }
    }

    /// Tabulate a linear map by applying it to every matrix unit `|r><c|`.
    pub fn from_map(n: usize, map: impl Fn(&CMat) -> CMat) -> Self {
        let d = n * n;
        let mut sup = Self::zeros(n);
        let mut unit = CMat::zeros(n);
        for col in 0..d {
            unit.fill_zero();
            unit.data[col] = C64::new(1.0, 0.0);
            let image = map(&unit);
            for row in 0..d {
                sup.data[row * d + col] = image.data[row];
            }
        }
        sup
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn add_assign(&mut self, other: &Superoperator) {
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    /// `out = L(rho)`
    #[inline]
    pub fn apply_into(&self, rho: &CMat, out: &mut CMat) {
        let d = self.n * self.n;
        let x = &rho.data;
        for (row, dst) in out.data.iter_mut().enumerate() {
            let coeffs = &self.data[row * d..(row + 1) * d];
            let mut acc = C64::new(0.0, 0.0);
            for (a, b) in coeffs.iter().zip(x) {
                acc += a * b;
            }
            *dst = acc;
        }
    }

    pub fn apply(&self, rho: &CMat) -> CMat {
        let mut out = CMat::zeros(self.n);
        self.apply_into(rho, &mut out);
        out
    }

    pub fn to_nalgebra(&self) -> DMatrix<C64> {
        let d = self.n * self.n;
        DMatrix::from_fn(d, d, |r, c| self.data[r * d + c])
    }
}
