use adsdirac_core::algebra::{build_algebra, DiracAlgebra, ExactAlgebra};
use adsdirac_core::linalg::Mat4;
use num_complex::Complex;
use num_rational::Ratio;

type Q = Ratio<i64>;

fn exact() -> ExactAlgebra {
    build_algebra::<Q>()
}

#[test]
fn exact_identities_hold() {
    let alg = DiracAlgebra::<Q>::construct();
    assert!(alg.failures().is_empty(), "{:?}", alg.failures());
}

#[test]
fn gamma0_gamma1_is_diagonal() {
    let alg = exact();
    let g0g1 = &alg.gamma[0] * &alg.gamma[1];
    assert_eq!(g0g1, Mat4::diag([-1, 1, 1, -1]));
    assert_eq!(alg.big_gamma1, Mat4::diag([1, -1, -1, 1]));
}

#[test]
fn squares_follow_metric() {
    let alg = exact();
    let id = Mat4::<Q>::identity();
    assert_eq!(&alg.gamma[0] * &alg.gamma[0], id);
    for j in 1..4 {
        assert_eq!(&alg.gamma[j] * &alg.gamma[j], -id.clone());
    }
    assert_eq!(&alg.gamma5 * &alg.gamma5, id);
}

#[test]
fn gamma5_anticommutes_entrywise() {
    let alg = exact();
    for mu in 0..4 {
        assert_eq!(alg.gamma5.anticommutator(&alg.gamma[mu]), Mat4::zero());
    }
}

#[test]
fn transform_pair_properties() {
    let alg = exact();
    let id = Mat4::<Q>::identity();
    assert_eq!(&alg.p * &alg.p.adjoint(), id);
    // γ⁵_B swaps the upper and lower 2-blocks.
    let v: [Complex<Q>; 4] = std::array::from_fn(|k| {
        Complex::new(Ratio::from_integer(k as i64 + 1), Ratio::from_integer(0))
    });
    let w = alg.gamma5_b.apply(&v);
    assert_eq!([w[0], w[1], w[2], w[3]], [v[2], v[3], v[0], v[1]]);
    assert_eq!(&(&alg.p * &alg.gamma_b[0]) * &alg.p_inv, alg.gamma[0]);
    for j in 1..4 {
        assert_eq!(-(&(&alg.p * &alg.gamma_b[j]) * &alg.p_inv), alg.gamma[j]);
    }
}

#[test]
fn corrupted_algebra_is_detected() {
    let mut alg = DiracAlgebra::<Q>::construct();
    alg.gamma[2] = alg.gamma[2].clone().scale(&Complex::new(
        Ratio::from_integer(-1),
        Ratio::from_integer(0),
    ));
    // Sign flip of γ² keeps the Clifford relations but breaks the intertwining relation.
    let names: Vec<String> = alg.failures().into_iter().map(|f| f.identity).collect();
    assert!(names.iter().any(|n| n.contains("γ2 = −P")), "{names:?}");
}

#[test]
fn floating_algebra_is_exact_too() {
    // Entries are dyadic Gaussian rationals, so f64 arithmetic reproduces them exactly.
    let fa = build_algebra::<f64>();
    let qa = exact();
    for (a, b) in fa.gamma.iter().zip(&qa.gamma) {
        for i in 0..4 {
            for j in 0..4 {
                let q = &b.m[i][j];
                let re = *q.re.numer() as f64 / *q.re.denom() as f64;
                let im = *q.im.numer() as f64 / *q.im.denom() as f64;
                assert_eq!(a.m[i][j], Complex::new(re, im));
            }
        }
    }
}
