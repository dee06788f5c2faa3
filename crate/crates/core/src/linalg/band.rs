//! Square banded matrices over complex scalars.

use crate::error::{Error, Result};
use crate::scalar::{czero, Cx, Real};

/// Square matrix with `kl` sub-diagonals and `ku` super-diagonals, stored row-wise.
///
/// Entry `(i, j)` lives at `data[i * width + (j + kl - i)]` for
/// `i - kl ≤ j ≤ i + ku`, with `width = kl + ku + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct BandMatrix<T: Real> {
    n: usize,
    kl: usize,
    ku: usize,
    data: Vec<Cx<T>>,
}

impl<T: Real> BandMatrix<T> {
    /// Zero matrix of order `n` with the given bandwidths.
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        Self {
            n,
            kl,
            ku,
            data: vec![czero(); n * (kl + ku + 1)],
        }
    }

    /// Order of the matrix.
    pub fn order(&self) -> usize {
        self.n
    }

    /// Number of sub-diagonals.
    pub fn lower_bandwidth(&self) -> usize {
        self.kl
    }

    /// Number of super-diagonals.
    pub fn upper_bandwidth(&self) -> usize {
        self.ku
    }

    #[inline]
    fn in_band(&self, i: usize, j: usize) -> bool {
        i < self.n && j < self.n && j + self.kl >= i && j <= i + self.ku
    }

    #[inline]
    fn index(&self, i: usize, j: usize) -> usize {
        i * (self.kl + self.ku + 1) + (j + self.kl - i)
    }

    /// Entry `(i, j)`; zero outside the band.
    pub fn get(&self, i: usize, j: usize) -> Cx<T> {
        if self.in_band(i, j) {
            self.data[self.index(i, j)]
        } else {
            czero()
        }
    }

    /// Adds `v` to entry `(i, j)`.
    ///
    /// # Panics
    /// Panics if `(i, j)` lies outside the band; callers size the band from
    /// the stencil, so this signals a programming error.
    pub fn add(&mut self, i: usize, j: usize, v: Cx<T>) {
        assert!(self.in_band(i, j), "entry ({i}, {j}) outside band");
        let k = self.index(i, j);
        self.data[k] += v;
    }

    /// Overwrites entry `(i, j)`.
    pub fn set(&mut self, i: usize, j: usize, v: Cx<T>) {
        assert!(self.in_band(i, j), "entry ({i}, {j}) outside band");
        let k = self.index(i, j);
        self.data[k] = v;
    }

    /// Column range `[lo, hi)` of the band in row `i`.
    pub fn row_range(&self, i: usize) -> (usize, usize) {
        (i.saturating_sub(self.kl), (i + self.ku + 1).min(self.n))
    }

    /// Matrix–vector product `y = A x`.
    pub fn matvec(&self, x: &[Cx<T>]) -> Vec<Cx<T>> {
        assert_eq!(x.len(), self.n);
        (0..self.n)
            .map(|i| {
                let (lo, hi) = self.row_range(i);
                (lo..hi).fold(czero(), |acc, j| acc + self.data[self.index(i, j)] * x[j])
            })
            .collect()
    }

    /// Returns `alpha·I + beta·A`.
    pub fn shifted(&self, alpha: Cx<T>, beta: Cx<T>) -> Self {
        let mut out = self.clone();
        for v in &mut out.data {
            *v = *v * beta;
        }
        for i in 0..self.n {
            let k = out.index(i, i);
            out.data[k] += alpha;
        }
        out
    }

    /// Largest `|A_ij - conj(A_ji)|` over the band (zero for Hermitian matrices).
    pub fn hermitian_defect(&self) -> T {
        let mut worst = T::zero();
        for i in 0..self.n {
            let (lo, hi) = self.row_range(i);
            for j in lo..hi {
                let d = (self.get(i, j) - self.get(j, i).conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    /// Maximum absolute row sum, an upper bound for the spectral norm.
    pub fn norm_inf(&self) -> T {
        (0..self.n)
            .map(|i| {
                let (lo, hi) = self.row_range(i);
                (lo..hi).fold(T::zero(), |acc, j| acc + self.get(i, j).norm())
            })
            .fold(T::zero(), T::max)
    }

    /// Dense copy (row-major), intended for small diagnostics and tests.
    pub fn to_dense(&self) -> Vec<Vec<Cx<T>>> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j)).collect())
            .collect()
    }

    /// Number of eigenvalues strictly below `sigma` for a Hermitian matrix.
    ///
    /// Reduces to tridiagonal form first; when counting repeatedly, call
    /// [`BandMatrix::tridiagonalize`] once and count on the result.
    pub fn count_below(&self, sigma: T) -> usize {
        self.tridiagonalize().count_below(sigma)
    }

    /// Unitary reduction of a Hermitian band matrix to real symmetric
    /// tridiagonal form with the same eigenvalues.
    ///
    /// Outer diagonals are annihilated one at a time by Givens rotations, each
    /// followed by chasing the bulge it creates down the band (Rutishauser's
    /// scheme). The cost is `O(n²·b)` for half-bandwidth `b`.
    pub fn tridiagonalize(&self) -> SymTridiagonal<T> {
        let n = self.n;
        let b = self.kl.max(self.ku);
        let mut w = BulgeBand::new(n, b + 1);
        for i in 0..n {
            let (lo, hi) = self.row_range(i);
            for j in lo..hi {
                w.set(i, j, self.get(i, j));
            }
        }
        for bw in (2..=b).rev() {
            for j in 0..n.saturating_sub(bw) {
                // Annihilate (j + bw, j), then chase the bulges it creates.
                let (mut row, mut col) = (j + bw, j);
                while row < n {
                    w.rotate_to_zero(row, col);
                    let next = row + bw;
                    if next >= n {
                        break;
                    }
                    col = row - 1;
                    row = next;
                    if w.get(row, col) == czero() {
                        break;
                    }
                }
            }
        }
        let d = (0..n).map(|i| w.get(i, i).re).collect();
        let e = (1..n).map(|i| w.get(i, i - 1).norm()).collect();
        SymTridiagonal { d, e }
    }
}

/// Real symmetric tridiagonal matrix: diagonal `d`, off-diagonal `e`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTridiagonal<T: Real> {
    /// Diagonal entries.
    pub d: Vec<T>,
    /// Sub-diagonal entries (`len = n − 1`).
    pub e: Vec<T>,
}

impl<T: Real> SymTridiagonal<T> {
    /// Number of eigenvalues strictly below `sigma` (Sturm sequence with the
    /// usual tiny-pivot safeguard).
    pub fn count_below(&self, sigma: T) -> usize {
        let scale = self
            .d
            .iter()
            .map(|v| v.abs())
            .chain(self.e.iter().map(|v| v.abs()))
            .fold(T::zero(), T::max);
        let pivmin = T::min_positive_value() * (T::one() + scale * scale);
        let mut count = 0;
        let mut q = T::one();
        for (i, &di) in self.d.iter().enumerate() {
            let coupling = if i == 0 {
                T::zero()
            } else {
                self.e[i - 1] * self.e[i - 1] / q
            };
            q = di - sigma - coupling;
            if q.abs() < pivmin {
                q = -pivmin;
            }
            if q < T::zero() {
                count += 1;
            }
        }
        count
    }
}

/// Full (both triangles) Hermitian band of half-width `w` used for bulge chasing.
struct BulgeBand<T: Real> {
    n: usize,
    w: usize,
    data: Vec<Cx<T>>,
}

impl<T: Real> BulgeBand<T> {
    fn new(n: usize, w: usize) -> Self {
        Self {
            n,
            w,
            data: vec![czero(); n * (2 * w + 1)],
        }
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> usize {
        i * (2 * self.w + 1) + (j + self.w - i)
    }

    #[inline]
    fn get(&self, i: usize, j: usize) -> Cx<T> {
        if i.abs_diff(j) <= self.w {
            self.data[self.at(i, j)]
        } else {
            czero()
        }
    }

    #[inline]
    fn set(&mut self, i: usize, j: usize, v: Cx<T>) {
        let k = self.at(i, j);
        self.data[k] = v;
    }

    /// Applies the similarity `A ← G A G*` on rows/columns `(row − 1, row)`
    /// that zeroes `A[row][col]` (and by symmetry `A[col][row]`).
    fn rotate_to_zero(&mut self, row: usize, col: usize) {
        let (p, q) = (row - 1, row);
        let a = self.get(p, col);
        let b = self.get(q, col);
        let r = (a.norm_sqr() + b.norm_sqr()).sqrt();
        if r == T::zero() {
            return;
        }
        let (c, s) = if a.norm() == T::zero() {
            (T::zero(), Cx::new(T::one(), T::zero()))
        } else {
            (a.norm() / r, (a / a.norm()) * b.conj() / r)
        };
        let lo = p.saturating_sub(self.w);
        let hi = (q + self.w + 1).min(self.n);
        // Rows: (A_p·, A_q·) ← (c A_p· + s A_q·, −s̄ A_p· + c A_q·).
        for j in lo..hi {
            let (x, y) = (self.get(p, j), self.get(q, j));
            if p.abs_diff(j) <= self.w {
                self.set(p, j, x * c + y * s);
            }
            if q.abs_diff(j) <= self.w {
                self.set(q, j, y * c - x * s.conj());
            }
        }
        // Columns: (A_·p, A_·q) ← (A_·p c + A_·q s̄, −A_·p s + A_·q c).
        for i in lo..hi {
            let (x, y) = (self.get(i, p), self.get(i, q));
            if i.abs_diff(p) <= self.w {
                self.set(i, p, x * c + y * s.conj());
            }
            if i.abs_diff(q) <= self.w {
                self.set(i, q, y * c - x * s);
            }
        }
        self.set(q, col, czero());
        self.set(col, q, czero());
    }
}

/// LU factorisation with partial pivoting of a banded matrix (LAPACK `gbtrf` layout).
#[derive(Debug, Clone)]
pub struct BandLu<T: Real> {
    n: usize,
    kl: usize,
    ku: usize,
    // Row i stores columns [i − kl, i + kl + ku].
    data: Vec<Cx<T>>,
    piv: Vec<usize>,
}

impl<T: Real> BandLu<T> {
    /// Factorises `a`; fails if an exactly zero pivot is met.
    pub fn new(a: &BandMatrix<T>) -> Result<Self> {
        let (n, kl, ku) = (a.n, a.kl, a.ku);
        let w = 2 * kl + ku + 1;
        let mut data = vec![czero(); n * w];
        let at = |i: usize, j: usize| i * w + (j + kl - i);
        for i in 0..n {
            let (lo, hi) = a.row_range(i);
            for j in lo..hi {
                data[at(i, j)] = a.get(i, j);
            }
        }
        let mut piv = vec![0; n];
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let last_col = (k + kl + ku).min(n - 1);
            let mut p = k;
            let mut best = data[at(k, k)].norm();
            for i in k + 1..=last_row {
                let v = data[at(i, k)].norm();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == T::zero() {
                return Err(Error::Numeric(format!(
                    "banded LU: zero pivot in column {k} of {n}"
                )));
            }
            piv[k] = p;
            if p != k {
                for j in k..=last_col {
                    data.swap(at(k, j), at(p, j));
                }
            }
            let inv = data[at(k, k)].inv();
            for i in k + 1..=last_row {
                let l = data[at(i, k)] * inv;
                data[at(i, k)] = l;
                if l.re == T::zero() && l.im == T::zero() {
                    continue;
                }
                for j in k + 1..=last_col {
                    let u = data[at(k, j)];
                    data[at(i, j)] -= l * u;
                }
            }
        }
        Ok(Self {
            n,
            kl,
            ku,
            data,
            piv,
        })
    }

    /// Order of the factorised matrix.
    pub fn order(&self) -> usize {
        self.n
    }

    /// Solves `A x = b` in place.
    pub fn solve_in_place(&self, b: &mut [Cx<T>]) {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        assert_eq!(b.len(), n);
        let w = 2 * kl + ku + 1;
        let at = |i: usize, j: usize| i * w + (j + kl - i);
        for k in 0..n {
            let p = self.piv[k];
            if p != k {
                b.swap(k, p);
            }
            let bk = b[k];
            for i in k + 1..=(k + kl).min(n.saturating_sub(1)) {
                b[i] -= self.data[at(i, k)] * bk;
            }
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for j in i + 1..=(i + kl + ku).min(n - 1) {
                s -= self.data[at(i, j)] * b[j];
            }
            b[i] = s / self.data[at(i, i)];
        }
    }

    /// Solves `A x = b`, returning `x`.
    pub fn solve(&self, b: &[Cx<T>]) -> Vec<Cx<T>> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}
