//! Small dense complex matrices with an exact-to-tolerance matrix exponential.
//!
//! Sizes are fixed at compile time (4x4 for pair Hilbert space, 16x16 for
//! Liouville space). The exponential uses scaling-and-squaring with a
//! Pade(13) approximant; for the matrix norms that occur here (bounded by
//! detuning times duration) this is accurate to well below the 1e-8 oracle
//! tolerance used in the tests.

use crate::scalar::Scalar;
use num_complex::Complex;
use num_traits::{One, Zero};
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

pub type C<T> = Complex<T>;

/// Dense N x N complex matrix stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix<T, const N: usize> {
    data: [[C<T>; N]; N],
}

impl<T: Scalar, const N: usize> CMatrix<T, N> {
    pub fn zeros() -> Self {
        Self {
            data: [[C::zero(); N]; N],
        }
    }

    pub fn identity() -> Self {
        let mut m = Self::zeros();
        for i in 0..N {
            m.data[i][i] = C::one();
        }
        m
    }

    pub fn from_fn(mut f: impl FnMut(usize, usize) -> C<T>) -> Self {
        let mut m = Self::zeros();
        for i in 0..N {
            for j in 0..N {
                m.data[i][j] = f(i, j);
            }
        }
        m
    }

    pub fn scale(&self, s: C<T>) -> Self {
        Self::from_fn(|i, j| self.data[i][j] * s)
    }

    pub fn scale_re(&self, s: T) -> Self {
        self.scale(C::new(s, T::zero()))
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(|i, j| self.data[j][i].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(|i, j| self.data[j][i])
    }

    pub fn conj(&self) -> Self {
        Self::from_fn(|i, j| self.data[i][j].conj())
    }

    pub fn trace(&self) -> C<T> {
        let mut t = C::zero();
        for i in 0..N {
            t = t + self.data[i][i];
        }
        t
    }

    /// Max elementwise absolute deviation from another matrix.
    pub fn max_abs_diff(&self, other: &Self) -> T {
        let mut m = T::zero();
        for i in 0..N {
            for j in 0..N {
                let d = (self.data[i][j] - other.data[i][j]).norm();
                if d > m {
                    m = d;
                }
            }
        }
        m
    }

    pub fn max_abs(&self) -> T {
        self.max_abs_diff(&Self::zeros())
    }

    /// Maximum column sum of moduli (induced 1-norm).
    pub fn one_norm(&self) -> T {
        let mut best = T::zero();
        for j in 0..N {
            let mut s = T::zero();
            for i in 0..N {
                s = s + self.data[i][j].norm();
            }
            if s > best {
                best = s;
            }
        }
        best
    }

    pub fn is_finite(&self) -> bool {
        self.data
            .iter()
            .flatten()
            .all(|c| c.re.is_finite() && c.im.is_finite())
    }

    pub fn mul_vec(&self, v: &[C<T>; N]) -> [C<T>; N] {
        let mut out = [C::zero(); N];
        for i in 0..N {
            let mut acc = C::zero();
            for j in 0..N {
                acc = acc + self.data[i][j] * v[j];
            }
            out[i] = acc;
        }
        out
    }

    fn matmul(&self, rhs: &Self) -> Self {
        let mut out = Self::zeros();
        for i in 0..N {
            for k in 0..N {
                let a = self.data[i][k];
                if a.re.is_zero() && a.im.is_zero() {
                    continue;
                }
                for j in 0..N {
                    out.data[i][j] = out.data[i][j] + a * rhs.data[k][j];
                }
            }
        }
        out
    }

    /// Solve A X = B by Gaussian elimination with partial pivoting.
    /// Returns None when the pivot collapses (singular to working precision).
    pub fn solve(&self, b: &Self) -> Option<Self> {
        let mut a = self.clone();
        let mut x = b.clone();
        for col in 0..N {
            let mut piv = col;
            let mut best = a.data[col][col].norm();
            for row in (col + 1)..N {
                let v = a.data[row][col].norm();
                if v > best {
                    best = v;
                    piv = row;
                }
            }
            if best < T::of(1e-300) {
                return None;
            }
            if piv != col {
                a.data.swap(piv, col);
                x.data.swap(piv, col);
            }
            let d = a.data[col][col];
            for row in (col + 1)..N {
                let f = a.data[row][col] / d;
                if f.re.is_zero() && f.im.is_zero() {
                    continue;
                }
                for j in col..N {
                    let v = a.data[col][j];
                    a.data[row][j] = a.data[row][j] - f * v;
                }
                for j in 0..N {
                    let v = x.data[col][j];
                    x.data[row][j] = x.data[row][j] - f * v;
                }
            }
        }
        for col in (0..N).rev() {
            let d = a.data[col][col];
            for j in 0..N {
                let mut s = x.data[col][j];
                for k in (col + 1)..N {
                    s = s - a.data[col][k] * x.data[k][j];
                }
                x.data[col][j] = s / d;
            }
        }
        Some(x)
    }

    /// exp(self) via scaling-and-squaring with Pade(13).
    pub fn expm(&self) -> Self {
        // Pade(13) coefficients, Higham 2005.
        const B: [f64; 14] = [
            64764752532480000.0,
            32382376266240000.0,
            7771770303897600.0,
            1187353796428800.0,
            129060195264000.0,
            10559470521600.0,
            670442572800.0,
            33522128640.0,
            1323241920.0,
            40840800.0,
            960960.0,
            16380.0,
            182.0,
            1.0,
        ];
        let theta13 = T::of(5.371920351148152);
        let norm = self.one_norm();
        let s: u32 = if norm > theta13 {
            let r = (norm / theta13).to_f64().unwrap_or(f64::MAX);
            r.log2().ceil().max(0.0) as u32
        } else {
            0
        };
        let scale = T::of(0.5).powi(s as i32);
        let a = self.scale_re(scale);

        let a2 = a.matmul(&a);
        let a4 = a2.matmul(&a2);
        let a6 = a2.matmul(&a4);
        let id = Self::identity();

        let c = |k: usize| C::new(T::of(B[k]), T::zero());

        let w1 = a6.scale(c(13)) + a4.scale(c(11)) + a2.scale(c(9));
        let w2 = w1.matmul(&a6) + a6.scale(c(7)) + a4.scale(c(5)) + a2.scale(c(3)) + id.scale(c(1));
        let u = a.matmul(&w2);

        let z1 = a6.scale(c(12)) + a4.scale(c(10)) + a2.scale(c(8));
        let v = z1.matmul(&a6) + a6.scale(c(6)) + a4.scale(c(4)) + a2.scale(c(2)) + id.scale(c(0));

        let num = v.clone() + u.clone();
        let den = v - u;
        let mut r = den.solve(&num).unwrap_or_else(Self::identity);
        for _ in 0..s {
            r = r.matmul(&r);
        }
        r
    }

    /// Eigenvalues of a Hermitian matrix by cyclic complex Jacobi sweeps.
    /// Intended for validation of small density matrices.
    pub fn hermitian_eigenvalues(&self) -> [T; N] {
        let mut a = self.clone();
        for _sweep in 0..64 {
            let mut off = T::zero();
            for p in 0..N {
                for q in (p + 1)..N {
                    off = off + a.data[p][q].norm_sqr();
                }
            }
            if off < T::of(1e-30) {
                break;
            }
            for p in 0..N {
                for q in (p + 1)..N {
                    let apq = a.data[p][q];
                    if apq.norm() < T::of(1e-300) {
                        continue;
                    }
                    let app = a.data[p][p].re;
                    let aqq = a.data[q][q].re;
                    // phase to make the pivot real, then a real Jacobi rotation
                    let phase = apq / C::new(apq.norm(), T::zero());
                    let g = apq.norm();
                    let theta = (aqq - app) / (T::two() * g);
                    let t = {
                        let sign = if theta >= T::zero() { T::one() } else { -T::one() };
                        sign / (theta.abs() + (theta * theta + T::one()).sqrt())
                    };
                    let cth = T::one() / (t * t + T::one()).sqrt();
                    let sth = t * cth;
                    let cc = C::new(cth, T::zero());
                    let ss = phase * C::new(sth, T::zero());
                    // rows/cols rotation: [c, s; -s*, c]
                    for k in 0..N {
                        let akp = a.data[k][p];
                        let akq = a.data[k][q];
                        a.data[k][p] = akp * cc - akq * ss.conj();
                        a.data[k][q] = akp * ss + akq * cc;
                    }
                    for k in 0..N {
                        let apk = a.data[p][k];
                        let aqk = a.data[q][k];
                        a.data[p][k] = apk * cc.conj() - aqk * ss;
                        a.data[q][k] = apk * ss.conj() + aqk * cc.conj();
                    }
                }
            }
        }
        let mut ev = [T::zero(); N];
        for i in 0..N {
            ev[i] = a.data[i][i].re;
        }
        ev.sort_by(|x, y| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal));
        ev
    }
}

/// Kronecker product of two 4x4 matrices, yielding 16x16.
pub fn kron4<T: Scalar>(a: &CMatrix<T, 4>, b: &CMatrix<T, 4>) -> CMatrix<T, 16> {
    CMatrix::from_fn(|i, j| a[(i / 4, j / 4)] * b[(i % 4, j % 4)])
}

impl<T: Scalar, const N: usize> Index<(usize, usize)> for CMatrix<T, N> {
    type Output = C<T>;
    fn index(&self, (i, j): (usize, usize)) -> &C<T> {
        &self.data[i][j]
    }
}

impl<T: Scalar, const N: usize> IndexMut<(usize, usize)> for CMatrix<T, N> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C<T> {
        &mut self.data[i][j]
    }
}

impl<T: Scalar, const N: usize> Add for CMatrix<T, N> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::from_fn(|i, j| self.data[i][j] + rhs.data[i][j])
    }
}

impl<T: Scalar, const N: usize> Sub for CMatrix<T, N> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::from_fn(|i, j| self.data[i][j] - rhs.data[i][j])
    }
}

impl<T: Scalar, const N: usize> Neg for CMatrix<T, N> {
    type Output = Self;
    fn neg(self) -> Self {
        Self::from_fn(|i, j| -self.data[i][j])
    }
}

impl<'a, T: Scalar, const N: usize> Mul<&'a CMatrix<T, N>> for &'a CMatrix<T, N> {
    type Output = CMatrix<T, N>;
    fn mul(self, rhs: &'a CMatrix<T, N>) -> CMatrix<T, N> {
        self.matmul(rhs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    type M2 = CMatrix<f64, 2>;

    fn c(re: f64, im: f64) -> C<f64> {
        C::new(re, im)
    }

    #[test]
    fn expm_zero_is_identity() {
        let z = CMatrix::<f64, 4>::zeros();
        assert!(z.expm().max_abs_diff(&CMatrix::identity()) < 1e-15);
    }

    #[test]
    fn expm_diagonal() {
        let mut a = M2::zeros();
        a[(0, 0)] = c(1.0, 0.0);
        a[(1, 1)] = c(-2.0, 0.5);
        let e = a.expm();
        assert!((e[(0, 0)] - c(1.0, 0.0).exp()).norm() < 1e-14);
        assert!((e[(1, 1)] - c(-2.0, 0.5).exp()).norm() < 1e-14);
        assert!(e[(0, 1)].norm() < 1e-15);
    }

    #[test]
    fn expm_pauli_rotation() {
        // exp(-i theta/2 sigma_x)
        let theta = std::f64::consts::PI / 3.0;
        let mut a = M2::zeros();
        a[(0, 1)] = c(0.0, -theta / 2.0);
        a[(1, 0)] = c(0.0, -theta / 2.0);
        let u = a.expm();
        let ct = (theta / 2.0).cos();
        let st = (theta / 2.0).sin();
        assert!((u[(0, 0)] - c(ct, 0.0)).norm() < 1e-13);
        assert!((u[(0, 1)] - c(0.0, -st)).norm() < 1e-13);
    }

    #[test]
    fn expm_large_norm_scaling() {
        let mut a = M2::zeros();
        a[(0, 0)] = c(0.0, 700.0);
        a[(1, 1)] = c(-3.0, -700.0);
        let e = a.expm();
        let want00 = c(0.0, 700.0).exp();
        assert!((e[(0, 0)] - want00).norm() < 1e-9);
    }

    #[test]
    fn expm_additivity_commuting() {
        let mut a = CMatrix::<f64, 4>::zeros();
        for i in 0..4 {
            a[(i, i)] = c(0.1 * i as f64, -0.3 * i as f64);
        }
        let e1 = a.expm();
        let two = a.scale_re(2.0).expm();
        let prod = &e1 * &e1;
        assert!(two.max_abs_diff(&prod) < 1e-13);
    }

    #[test]
    fn solve_roundtrip() {
        let a = CMatrix::<f64, 4>::from_fn(|i, j| {
            c(((i * 7 + j * 3) % 5) as f64 + if i == j { 4.0 } else { 0.0 }, (i as f64) - (j as f64))
        });
        let b = CMatrix::<f64, 4>::from_fn(|i, j| c((i + j) as f64, 1.0));
        let x = a.solve(&b).unwrap();
        let r = &a * &x;
        assert!(r.max_abs_diff(&b) < 1e-11);
    }

    #[test]
    fn hermitian_eigenvalues_known() {
        // sigma_x has eigenvalues -1, +1
        let mut a = M2::zeros();
        a[(0, 1)] = c(1.0, 0.0);
        a[(1, 0)] = c(1.0, 0.0);
        let ev = a.hermitian_eigenvalues();
        assert!((ev[0] + 1.0).abs() < 1e-12 && (ev[1] - 1.0).abs() < 1e-12);

        // complex Hermitian 2x2 with known spectrum 1 +- sqrt(2)
        let mut h = M2::zeros();
        h[(0, 0)] = c(1.0, 0.0);
        h[(1, 1)] = c(1.0, 0.0);
        h[(0, 1)] = c(1.0, 1.0);
        h[(1, 0)] = c(1.0, -1.0);
        let ev = h.hermitian_eigenvalues();
        let s = 2.0_f64.sqrt();
        assert!((ev[0] - (1.0 - s)).abs() < 1e-12);
        assert!((ev[1] - (1.0 + s)).abs() < 1e-12);
    }

    #[test]
    fn kron_identity() {
        let i4 = CMatrix::<f64, 4>::identity();
        let k = kron4(&i4, &i4);
        assert!(k.max_abs_diff(&CMatrix::identity()) < 1e-15);
    }
}
