//! 4×4 matrices over complex rings, used for spinor-space operators.
//!
//! The element type is `Complex<R>` for any ring `R` that supports exact or
//! floating arithmetic; this lets the Dirac algebra be checked in exact
//! rational arithmetic and then used in floating point.

use std::fmt::Debug;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex;
use num_rational::Ratio;
use num_traits::{Num, One, Zero};

/// Real ring underlying the complex entries of a [`Mat4`].
pub trait RingScalar: Clone + Num + Neg<Output = Self> + PartialEq + Debug {
    /// The rational number `num / den`.
    fn ratio(num: i64, den: i64) -> Self;
}

impl RingScalar for f64 {
    fn ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }
}

impl RingScalar for f32 {
    fn ratio(num: i64, den: i64) -> Self {
        num as f32 / den as f32
    }
}

impl RingScalar for Ratio<i64> {
    fn ratio(num: i64, den: i64) -> Self {
        Ratio::new(num, den)
    }
}

/// Dense 4×4 complex matrix.
#[derive(Clone, PartialEq, Debug)]
pub struct Mat4<R: RingScalar> {
    /// Row-major entries.
    pub m: [[Complex<R>; 4]; 4],
}

impl<R: RingScalar> Mat4<R> {
    /// Builds a matrix from Gaussian-rational entries `(re_num, im_num)` over a common denominator.
    pub fn from_gauss(entries: [[(i64, i64); 4]; 4], den: i64) -> Self {
        let m =
            entries.map(|row| row.map(|(a, b)| Complex::new(R::ratio(a, den), R::ratio(b, den))));
        Self { m }
    }

    /// Zero matrix.
    pub fn zero() -> Self {
        Self::from_gauss([[(0, 0); 4]; 4], 1)
    }

    /// Identity matrix.
    pub fn identity() -> Self {
        let mut e = [[(0, 0); 4]; 4];
        for (i, row) in e.iter_mut().enumerate() {
            row[i] = (1, 0);
        }
        Self::from_gauss(e, 1)
    }

    /// Diagonal matrix with real integer entries.
    pub fn diag(d: [i64; 4]) -> Self {
        let mut e = [[(0, 0); 4]; 4];
        for i in 0..4 {
            e[i][i] = (d[i], 0);
        }
        Self::from_gauss(e, 1)
    }

    /// Block matrix `[[a, b], [c, d]]` from 2×2 blocks.
    pub fn blocks(
        a: [[Complex<R>; 2]; 2],
        b: [[Complex<R>; 2]; 2],
        c: [[Complex<R>; 2]; 2],
        d: [[Complex<R>; 2]; 2],
    ) -> Self {
        let mut out = Self::zero();
        for i in 0..2 {
            for j in 0..2 {
                out.m[i][j] = a[i][j].clone();
                out.m[i][j + 2] = b[i][j].clone();
                out.m[i + 2][j] = c[i][j].clone();
                out.m[i + 2][j + 2] = d[i][j].clone();
            }
        }
        out
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let mut out = Self::zero();
        for i in 0..4 {
            for j in 0..4 {
                out.m[i][j] = self.m[j][i].conj();
            }
        }
        out
    }

    /// Multiplies every entry by a complex scalar.
    pub fn scale(&self, s: &Complex<R>) -> Self {
        let mut out = self.clone();
        for row in out.m.iter_mut() {
            for v in row.iter_mut() {
                *v = v.clone() * s.clone();
            }
        }
        out
    }

    /// Anticommutator `AB + BA`.
    pub fn anticommutator(&self, other: &Self) -> Self {
        self * other + other * self
    }

    /// Commutator `AB − BA`.
    pub fn commutator(&self, other: &Self) -> Self {
        self * other - other * self
    }

    /// True if the matrix is diagonal.
    pub fn is_diagonal(&self) -> bool {
        (0..4).all(|i| (0..4).all(|j| i == j || self.m[i][j].is_zero()))
    }

    /// Applies the matrix to a 4-vector.
    pub fn apply(&self, v: &[Complex<R>; 4]) -> [Complex<R>; 4] {
        let mut out: [Complex<R>; 4] = std::array::from_fn(|_| Complex::zero());
        for (i, o) in out.iter_mut().enumerate() {
            for (j, vj) in v.iter().enumerate() {
                *o = o.clone() + self.m[i][j].clone() * vj.clone();
            }
        }
        out
    }
}

impl<R: RingScalar> Mul for &Mat4<R> {
    type Output = Mat4<R>;
    fn mul(self, rhs: &Mat4<R>) -> Mat4<R> {
        let mut out = Mat4::zero();
        for i in 0..4 {
            for j in 0..4 {
                let mut s = Complex::<R>::zero();
                for k in 0..4 {
                    s = s + self.m[i][k].clone() * rhs.m[k][j].clone();
                }
                out.m[i][j] = s;
            }
        }
        out
    }
}

impl<R: RingScalar> Add for Mat4<R> {
    type Output = Mat4<R>;
    fn add(mut self, rhs: Mat4<R>) -> Mat4<R> {
        for i in 0..4 {
            for j in 0..4 {
                self.m[i][j] = self.m[i][j].clone() + rhs.m[i][j].clone();
            }
        }
        self
    }
}

impl<R: RingScalar> Sub for Mat4<R> {
    type Output = Mat4<R>;
    fn sub(mut self, rhs: Mat4<R>) -> Mat4<R> {
        for i in 0..4 {
            for j in 0..4 {
                self.m[i][j] = self.m[i][j].clone() - rhs.m[i][j].clone();
            }
        }
        self
    }
}

impl<R: RingScalar> Neg for Mat4<R> {
    type Output = Mat4<R>;
    fn neg(self) -> Mat4<R> {
        self.scale(&Complex::new(-R::one(), R::zero()))
    }
}

/// 2×2 complex block helper: `c · I`.
pub(crate) fn block_scalar<R: RingScalar>(c: Complex<R>) -> [[Complex<R>; 2]; 2] {
    [[c.clone(), Complex::zero()], [Complex::zero(), c]]
}

/// 2×2 complex block helper: `c · σ`.
pub(crate) fn block_scaled<R: RingScalar>(
    c: &Complex<R>,
    s: &[[Complex<R>; 2]; 2],
) -> [[Complex<R>; 2]; 2] {
    [
        [c.clone() * s[0][0].clone(), c.clone() * s[0][1].clone()],
        [c.clone() * s[1][0].clone(), c.clone() * s[1][1].clone()],
    ]
}

/// Zero 2×2 block.
pub(crate) fn block_zero<R: RingScalar>() -> [[Complex<R>; 2]; 2] {
    block_scalar(Complex::zero())
}

/// Exposes `One` for generic constructions.
pub(crate) fn cone<R: RingScalar>() -> Complex<R> {
    Complex::one()
}
