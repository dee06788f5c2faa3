//! Dirac matrices in the working representation and in Bachelot's
//! representation, together with the unitary intertwiner between them.
//!
//! Working representation (metric `diag(1, −1, −1, −1)`):
//! `γ⁰ = i[[0, I], [−I, 0]]`, `γᵏ = i[[0, σᵏ], [σᵏ, 0]]` with
//! `σ¹ = diag(1, −1)`, `σ² = [[0, 1], [1, 0]]`, `σ³ = [[0, −i], [i, 0]]`.
//! Bachelot representation: `γ⁰_B = diag(I, −I)`, `γᵏ_B = [[0, σᵏ], [−σᵏ, 0]]`,
//! `γ⁵_B = [[0, I], [I, 0]]`, intertwiner `P = e^{iπ/4}/√2 · [[I, I], [−iI, iI]]`.
//!
//! Every entry is a Gaussian rational, so the algebra can be instantiated over
//! `Complex<Ratio<i64>>` and checked exactly.

use num_complex::Complex;
use num_rational::Ratio;
use num_traits::Zero;

use crate::linalg::{block_scalar, block_scaled, block_zero, cone, Mat4, RingScalar};

/// Exact algebra over Gaussian rationals.
pub type ExactAlgebra = DiracAlgebra<Ratio<i64>>;

/// The Dirac algebra and its companion constants.
#[derive(Debug, Clone, PartialEq)]
pub struct DiracAlgebra<R: RingScalar> {
    /// `γ⁰, γ¹, γ², γ³`.
    pub gamma: [Mat4<R>; 4],
    /// `γ⁵ = −iγ⁰γ¹γ²γ³`.
    pub gamma5: Mat4<R>,
    /// `Γ¹ = −γ⁰γ¹ = diag(1, −1, −1, 1)`.
    pub big_gamma1: Mat4<R>,
    /// `γ⁰_B, γ¹_B, γ²_B, γ³_B`.
    pub gamma_b: [Mat4<R>; 4],
    /// `γ⁵_B`.
    pub gamma5_b: Mat4<R>,
    /// Intertwiner `P`.
    pub p: Mat4<R>,
    /// `P⁻¹ = P*`.
    pub p_inv: Mat4<R>,
    /// Involution `S` commuting with every channel operator: `S e₁ = e₄`, `S e₂ = −e₃`.
    pub reflection: Mat4<R>,
}

/// A violated algebra identity.
#[derive(Debug, Clone, PartialEq)]
pub struct IdentityFailure {
    /// Human-readable name of the identity.
    pub identity: String,
}

fn c<R: RingScalar>(re: i64, im: i64) -> Complex<R> {
    Complex::new(R::ratio(re, 1), R::ratio(im, 1))
}

fn pauli<R: RingScalar>() -> [[[Complex<R>; 2]; 2]; 3] {
    [
        [[c(1, 0), c(0, 0)], [c(0, 0), c(-1, 0)]],
        [[c(0, 0), c(1, 0)], [c(1, 0), c(0, 0)]],
        [[c(0, 0), c(0, -1)], [c(0, 1), c(0, 0)]],
    ]
}

impl<R: RingScalar> DiracAlgebra<R> {
    /// Constructs all matrices (no checks; see [`build_algebra`]).
    pub fn construct() -> Self {
        let i = c::<R>(0, 1);
        let one = cone::<R>();
        let sig = pauli::<R>();
        let z = block_zero::<R>();
        let g0 = Mat4::blocks(
            z.clone(),
            block_scalar(i.clone()),
            block_scalar(-i.clone()),
            z.clone(),
        );
        let gk = |k: usize| {
            Mat4::blocks(
                z.clone(),
                block_scaled(&i, &sig[k]),
                block_scaled(&i, &sig[k]),
                z.clone(),
            )
        };
        let gamma = [g0, gk(0), gk(1), gk(2)];
        let gamma5 = (&(&(&gamma[0] * &gamma[1]) * &gamma[2]) * &gamma[3]).scale(&c(0, -1));
        let big_gamma1 = -(&gamma[0] * &gamma[1]);
        let g0b = Mat4::blocks(
            block_scalar(one.clone()),
            z.clone(),
            z.clone(),
            block_scalar(-one.clone()),
        );
        let gkb = |k: usize| {
            Mat4::blocks(
                z.clone(),
                block_scaled(&one, &sig[k]),
                block_scaled(&-one.clone(), &sig[k]),
                z.clone(),
            )
        };
        let gamma_b = [g0b, gkb(0), gkb(1), gkb(2)];
        let gamma5_b = Mat4::blocks(
            z.clone(),
            block_scalar(one.clone()),
            block_scalar(one.clone()),
            z,
        );
        // e^{iπ/4}/√2 = (1 + i)/2.
        let half = Complex::new(R::ratio(1, 2), R::ratio(1, 2));
        let p = Mat4::blocks(
            block_scalar(half.clone()),
            block_scalar(half.clone()),
            block_scalar(half.clone() * c(0, -1)),
            block_scalar(half.clone() * c(0, 1)),
        );
        let p_inv = p.adjoint();
        let reflection = Mat4::from_gauss(
            [
                [(0, 0), (0, 0), (0, 0), (1, 0)],
                [(0, 0), (0, 0), (-1, 0), (0, 0)],
                [(0, 0), (-1, 0), (0, 0), (0, 0)],
                [(1, 0), (0, 0), (0, 0), (0, 0)],
            ],
            1,
        );
        Self {
            gamma,
            gamma5,
            big_gamma1,
            gamma_b,
            gamma5_b,
            p,
            p_inv,
            reflection,
        }
    }

    /// Lists every violated identity (empty when the algebra is consistent).
    ///
    /// Checked: Hermiticity pattern, the Clifford relations `{γ^μ, γ^ν} = 2g^{μν}`,
    /// anticommutation of `γ⁵`, `Γ¹ = diag(1, −1, −1, 1)`, unitarity of `P`, the
    /// intertwining relations `γ⁰ = Pγ⁰_B P⁻¹`, `γʲ = −Pγʲ_B P⁻¹`, the Clifford
    /// relations of the Bachelot matrices, anticommutation of `γ⁵_B`, and that the
    /// reflection `S` is a unitary involution commuting with `Γ¹`, `γ⁰γ²`, `γ⁰`
    /// and preserving `ker(γ¹ + i)`.
    pub fn failures(&self) -> Vec<IdentityFailure> {
        let mut out = Vec::new();
        let mut check = |ok: bool, name: String| {
            if !ok {
                out.push(IdentityFailure { identity: name });
            }
        };
        let id = Mat4::<R>::identity();
        let metric = [1, -1, -1, -1];
        let g = &self.gamma;
        check(g[0].adjoint() == g[0], "γ⁰ Hermitian".into());
        for j in 1..4 {
            check(
                g[j].adjoint() == -g[j].clone(),
                format!("γ{j} anti-Hermitian"),
            );
        }
        for mu in 0..4 {
            for nu in 0..4 {
                let expect = if mu == nu {
                    id.scale(&c(2 * metric[mu], 0))
                } else {
                    Mat4::zero()
                };
                check(
                    g[mu].anticommutator(&g[nu]) == expect,
                    format!("{{γ{mu}, γ{nu}}} = 2g"),
                );
                let expect_b = if mu == nu {
                    id.scale(&c(2 * metric[mu], 0))
                } else {
                    Mat4::zero()
                };
                check(
                    self.gamma_b[mu].anticommutator(&self.gamma_b[nu]) == expect_b,
                    format!("{{γ{mu}_B, γ{nu}_B}} = 2g"),
                );
            }
            check(
                self.gamma5
                    .anticommutator(&g[mu])
                    .m
                    .iter()
                    .flatten()
                    .all(Zero::is_zero),
                format!("{{γ⁵, γ{mu}}} = 0"),
            );
            check(
                self.gamma5_b
                    .anticommutator(&self.gamma_b[mu])
                    .m
                    .iter()
                    .flatten()
                    .all(Zero::is_zero),
                format!("{{γ⁵_B, γ{mu}_B}} = 0"),
            );
        }
        check(
            self.big_gamma1 == Mat4::diag([1, -1, -1, 1]),
            "Γ¹ = diag(1, −1, −1, 1)".into(),
        );
        check(&self.p * &self.p_inv == id, "P P* = 1".into());
        check(&self.p_inv * &self.p == id, "P* P = 1".into());
        check(
            &(&self.p * &self.gamma_b[0]) * &self.p_inv == g[0],
            "γ⁰ = P γ⁰_B P⁻¹".into(),
        );
        for j in 1..4 {
            check(
                -(&(&self.p * &self.gamma_b[j]) * &self.p_inv) == g[j],
                format!("γ{j} = −P γ{j}_B P⁻¹"),
            );
        }
        let s = &self.reflection;
        check(
            s * s == id && s.adjoint() == *s,
            "S unitary involution".into(),
        );
        let g0g2 = &g[0] * &g[2];
        for (name, m) in [("Γ¹", &self.big_gamma1), ("γ⁰γ²", &g0g2), ("γ⁰", &g[0])] {
            check(s.commutator(m) == Mat4::zero(), format!("[S, {name}] = 0"));
        }
        let mit = g[1].clone() + id.scale(&c(0, 1));
        check(
            s.commutator(&mit) == Mat4::zero(),
            "S preserves ker(γ¹ + i)".into(),
        );
        out
    }
}

/// Builds the algebra and asserts every identity of [`DiracAlgebra::failures`].
///
/// # Panics
/// Panics if any identity fails; the matrices are compile-time constants, so a
/// failure is a programming error.
pub fn build_algebra<R: RingScalar>() -> DiracAlgebra<R> {
    let alg = DiracAlgebra::<R>::construct();
    let failures = alg.failures();
    assert!(
        failures.is_empty(),
        "Dirac algebra identities violated: {failures:?}"
    );
    alg
}
