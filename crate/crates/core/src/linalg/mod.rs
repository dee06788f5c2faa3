//! Linear-algebra kernels: banded storage with pivoted LU, Sylvester inertia
//! counts, small dense Hermitian eigenproblems and 4×4 spinor matrices.

mod band;
mod mat4;
mod small;

pub use band::{BandLu, BandMatrix, SymTridiagonal};
pub(crate) use mat4::{block_scalar, block_scaled, block_zero, cone};
pub use mat4::{Mat4, RingScalar};
pub use small::{hermitian_eigen, DenseHermitianEigen};

use crate::scalar::{czero, Cx, Real};

/// Hermitian inner product `Σ conj(a_i) b_i`.
pub fn dot<T: Real>(a: &[Cx<T>], b: &[Cx<T>]) -> Cx<T> {
    a.iter()
        .zip(b)
        .fold(czero(), |acc, (x, y)| acc + x.conj() * y)
}

/// Euclidean norm of a complex vector.
pub fn norm<T: Real>(a: &[Cx<T>]) -> T {
    a.iter().fold(T::zero(), |acc, x| acc + x.norm_sqr()).sqrt()
}
