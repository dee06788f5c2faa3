use std::f64::consts::PI;

use adsdirac_core::channel::*;
use adsdirac_core::dynamics::{bump_state, free_generator};
use adsdirac_core::geometry::Params;
use adsdirac_core::grid::{make_grid, Endpoint, SpacingPolicy, SpinorField};
use adsdirac_core::ode::{dormand_prince, OdeOptions};
use adsdirac_core::spectral::*;
use adsdirac_core::{Cx, Error};
use nalgebra::{Complex, DMatrix};

fn c(re: f64, im: f64) -> Cx<f64> {
    Cx::new(re, im)
}

fn sads(m: f64, x_min: f64, n: usize, policy: SpacingPolicy) -> ChannelOperator<f64> {
    let p = Params::new(1.0, 1.0, m).unwrap();
    let pp = PotentialPair::sads(&p);
    let bc = BoundaryCondition::for_regime(p.regime);
    let grid = make_grid(x_min, n, policy, bc.endpoint()).unwrap();
    assemble_hamiltonian(validate_channel(0.5, 0.5).unwrap(), &p, grid, &pp).unwrap()
}

fn free(x_min: f64, n: usize) -> ChannelOperator<f64> {
    let p = Params::new(1.0, 1.0, 1.0).unwrap();
    let grid = make_grid(x_min, n, SpacingPolicy::Uniform, Endpoint::OnBoundary).unwrap();
    free_generator(validate_channel(0.5, 0.5).unwrap(), &p, grid).unwrap()
}

fn dense_eigenvalues(op: &ChannelOperator<f64>) -> Vec<f64> {
    let d = op.matrix().to_dense();
    let n = d.len();
    let m = DMatrix::from_fn(n, n, |i, j| Complex::new(d[i][j].re, d[i][j].im));
    let mut v: Vec<f64> = m.symmetric_eigen().eigenvalues.iter().copied().collect();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v
}

#[test]
fn dormand_prince_reproduces_closed_forms() {
    let opts = OdeOptions::default();
    let (y, stats) = dormand_prince(|_, y, dy| dy[0] = y[0], 0.0, &[1.0], 2.0, &opts).unwrap();
    assert!((y[0] - 2f64.exp()).abs() <= 1e-9 * 2f64.exp());
    assert!(stats.accepted > 0);
    // Harmonic oscillator over one period, backwards in time.
    let osc = |_: f64, y: &[f64], dy: &mut [f64]| {
        dy[0] = y[1];
        dy[1] = -y[0];
    };
    let (y, _) = dormand_prince(osc, 2.0 * PI, &[1.0, 0.0], 0.0, &opts).unwrap();
    assert!((y[0] - 1.0).abs() <= 1e-8 && y[1].abs() <= 1e-8, "{y:?}");
    // Empty span returns the initial value.
    let (y, stats) = dormand_prince(osc, 1.0, &[0.3, 0.4], 1.0, &opts).unwrap();
    assert_eq!(y, vec![0.3, 0.4]);
    assert_eq!(stats.accepted, 0);
    // Blow-up is reported, not looped on.
    let blow = |_: f64, y: &[f64], dy: &mut [f64]| dy[0] = y[0] * y[0];
    assert!(matches!(
        dormand_prince(blow, 0.0, &[1.0], 2.0, &opts),
        Err(Error::Numeric(_))
    ));
}

#[test]
fn tridiagonal_counts_match_dense_eigenvalues() {
    // The free operator has zero diagonal and exactly doubled eigenvalues,
    // the hardest case for inertia counts.
    for op in [
        free(-4.0, 16),
        sads(1.0, -6.0, 24, SpacingPolicy::Uniform),
        sads(0.25, -6.0, 24, SpacingPolicy::Uniform),
    ] {
        let ev = dense_eigenvalues(&op);
        let tri = op.matrix().tridiagonalize();
        let mut shifts: Vec<f64> = ev
            .windows(2)
            .map(|w| 0.5 * (w[0] + w[1]))
            .filter(|_| true)
            .collect();
        shifts.extend([-1e3, 0.123, 1e3]);
        for s in shifts {
            let expect = ev.iter().filter(|&&v| v < s).count();
            // Shifts within 1e−9 of an eigenvalue are ambiguous.
            if ev.iter().any(|v| (v - s).abs() < 1e-9) {
                continue;
            }
            assert_eq!(tri.count_below(s), expect, "σ = {s}");
            assert_eq!(op.matrix().count_below(s), expect, "σ = {s}");
        }
    }
}

#[test]
fn eigendecompose_matches_dense_oracle() {
    for op in [
        sads(1.0, -8.0, 48, SpacingPolicy::Uniform),
        sads(0.25, -8.0, 48, SpacingPolicy::Uniform),
    ] {
        let dec = eigendecompose(&op).unwrap();
        let ev = dense_eigenvalues(&op);
        assert_eq!(dec.len(), op.dim());
        let scale = op.matrix().norm_inf();
        for (a, b) in dec.eigenvalues.iter().zip(&ev) {
            assert!((a - b).abs() <= 1e-10 * scale, "{a} vs {b}");
        }
        assert!(
            dec.max_residual <= EIGEN_TOLERANCE && dec.orthonormality_defect <= EIGEN_TOLERANCE
        );
        assert!(dec.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
    }
}

#[test]
fn free_spectrum_is_chirally_paired() {
    let op = free(-10.0, 256);
    let dec = eigendecompose(&op).unwrap();
    let n = dec.len();
    let scale = op.matrix().norm_inf();
    for k in 0..n {
        let pair = dec.eigenvalues[k] + dec.eigenvalues[n - 1 - k];
        assert!(
            pair.abs() <= 1e-10 * scale,
            "λ_{k} + λ_{} = {pair}",
            n - 1 - k
        );
    }
    assert!(dec.eigenvalues.iter().all(|v| v.is_finite()));
}

#[test]
fn free_eigenvalue_count_follows_transport_density() {
    // Four unit-speed transport components on an interval of length L, coupled
    // only by reflection, give levels spaced π/L each: 4·(2K)·L/π in [−K, K).
    let length = 20.0;
    let op = free(-length, 2048);
    for k in [0.5, 1.0, 2.0] {
        let count = eigenvalue_count(&op, -k, k) as f64;
        let expect = 8.0 * k * length / PI;
        assert!(
            (count - expect).abs() <= 4.0,
            "K = {k}: {count} vs {expect}"
        );
    }
    let c1 = eigenvalue_count(&op, -1.0, 1.0) as f64;
    let c2 = eigenvalue_count(&op, -2.0, 2.0) as f64;
    assert!((c2 / c1 - 2.0).abs() <= 0.1);
}

#[test]
fn mourre_quotient_is_exactly_one_without_potentials() {
    let op = free(-10.0, 512);
    for interval in [(0.5, 2.0), (-1.5, 0.5)] {
        let r = mourre_check(&op, interval, 0.5).unwrap();
        assert!(r.eigen_count >= MIN_WINDOW_LEVELS);
        assert!(
            (r.min_quotient - 1.0).abs() <= 1e-12 && (r.max_quotient - 1.0).abs() <= 1e-12,
            "{r:?}"
        );
        assert!(r.eta <= 1e-12 && r.pass && r.strict_pass);
    }
}

#[test]
fn mourre_estimate_holds_on_reference_window() {
    let coarse = sads(1.0, -20.0, 1024, SpacingPolicy::Uniform);
    let fine = sads(1.0, -20.0, 2048, SpacingPolicy::Uniform);
    let study = mourre_refinement(&coarse, &fine, (0.5, 1.5), 0.5, true).unwrap();
    assert_eq!(study.verdict, MourreVerdict::Pass, "{study:?}");
    assert!(study.quotient_change <= MOURRE_STABILITY);
    for r in [&study.coarse, &study.fine] {
        assert!(r.pass && r.strict_pass, "{r:?}");
        assert!(r.min_quotient >= 0.5 && r.min_quotient <= 1.0 + r.eta);
        assert!(r.level_spacing > 0.0 && r.eigen_count >= MIN_WINDOW_LEVELS);
    }
}

#[test]
fn mourre_correction_shrinks_with_the_window() {
    let op = sads(1.0, -20.0, 1024, SpacingPolicy::Uniform);
    let reports = mourre_shrink(&op, 1.0, &[0.5, 0.35, 0.25], 0.5).unwrap();
    for w in reports.windows(2) {
        assert!(w[1].eta <= w[0].eta + 1e-3, "η {} → {}", w[0].eta, w[1].eta);
        assert!(w[1].eigen_count < w[0].eigen_count);
    }
}

#[test]
fn mourre_rejects_under_resolved_windows() {
    let op = sads(1.0, -20.0, 512, SpacingPolicy::Uniform);
    assert!(matches!(
        mourre_check(&op, (0.99, 1.01), 0.5),
        Err(Error::Configuration(_))
    ));
    assert!(matches!(
        mourre_check(&op, (0.5, 1.5), 1.5),
        Err(Error::Configuration(_))
    ));
}

/// Fixed-step RK4 propagation matrix of w′ = W(x)w, built independently from
/// the potentials (the oracle for the adaptive integrator).
fn rk4_propagation(
    lambda: f64,
    p: &Params<f64>,
    pp: &PotentialPair<f64>,
    from: f64,
    to: f64,
    steps: usize,
) -> [[Cx<f64>; 4]; 4] {
    let alg = algebra::<f64>();
    let g01 = &alg.gamma[0] * &alg.gamma[1];
    let g02 = &alg.gamma[0] * &alg.gamma[2];
    let w_at = |x: f64| -> [[Cx<f64>; 4]; 4] {
        let (a, b) = pp.eval(x).unwrap();
        let v = |j: usize, k: usize| g02.m[j][k] * a - alg.gamma[0].m[j][k] * (p.field_mass * b);
        std::array::from_fn(|j| {
            std::array::from_fn(|k| {
                let gj = g01.m[j][j].re;
                let gk = g01.m[k][k].re;
                c(0.0, gj) * Cx::from_polar(1.0, lambda * (gj - gk) * x) * v(j, k)
            })
        })
    };
    let mul = |a: &[[Cx<f64>; 4]; 4], b: &[[Cx<f64>; 4]; 4]| -> [[Cx<f64>; 4]; 4] {
        std::array::from_fn(|i| std::array::from_fn(|j| (0..4).map(|k| a[i][k] * b[k][j]).sum()))
    };
    let axpy = |a: &[[Cx<f64>; 4]; 4], s: f64, b: &[[Cx<f64>; 4]; 4]| -> [[Cx<f64>; 4]; 4] {
        std::array::from_fn(|i| std::array::from_fn(|j| a[i][j] + b[i][j] * s))
    };
    let mut phi: [[Cx<f64>; 4]; 4] =
        std::array::from_fn(|i| std::array::from_fn(|j| c(if i == j { 1.0 } else { 0.0 }, 0.0)));
    let h = (to - from) / steps as f64;
    for s in 0..steps {
        let x = from + s as f64 * h;
        let k1 = mul(&w_at(x), &phi);
        let k2 = mul(&w_at(x + 0.5 * h), &axpy(&phi, 0.5 * h, &k1));
        let k3 = mul(&w_at(x + 0.5 * h), &axpy(&phi, 0.5 * h, &k2));
        let k4 = mul(&w_at(x + h), &axpy(&phi, h, &k3));
        phi = std::array::from_fn(|i| {
            std::array::from_fn(|j| {
                phi[i][j] + (k1[i][j] + k2[i][j] * 2.0 + k3[i][j] * 2.0 + k4[i][j]) * (h / 6.0)
            })
        });
    }
    phi
}

#[test]
fn fundamental_matrix_has_invertible_limit() {
    let p = Params::new(1.0, 1.0, 1.0).unwrap();
    let pp = PotentialPair::sads(&p);
    let ch = validate_channel(0.5, 0.5).unwrap();
    let opts = NoEigenvalueOptions::default();
    for lambda in [-2.0, -1.0, 0.0, 1.0, 2.0] {
        let r = no_eigenvalue_test(lambda, ch, &p, &pp, 30.0, &opts).unwrap();
        assert!(r.invertible_limit, "{r:?}");
        assert!(r.convergence <= 1e-8 && r.condition <= 1e3);
        // ∫‖W‖ converges: the tail beyond −X is exponentially small.
        assert!(r.tail_integral <= 1e-20 && r.total_integral.is_finite());
        // Oracle: fixed-step RK4 from −X to x₀.
        let oracle = rk4_propagation(lambda, &p, &pp, -30.0, opts.x0, 20_000);
        let diff: f64 = (0..4)
            .flat_map(|i| (0..4).map(move |j| (i, j)))
            .map(|(i, j)| {
                (c(r.propagation[i][j].0, r.propagation[i][j].1) - oracle[i][j]).norm_sqr()
            })
            .sum::<f64>()
            .sqrt();
        assert!(diff <= 1e-8, "λ = {lambda}: adaptive vs RK4 {diff:e}");
    }
    // Shallower depth: the tail integral is larger but still decays.
    let shallow = no_eigenvalue_test(0.0, ch, &p, &pp, 5.0, &opts).unwrap();
    let deep = no_eigenvalue_test(0.0, ch, &p, &pp, 10.0, &opts).unwrap();
    assert!(deep.tail_integral < shallow.tail_integral && shallow.tail_integral > 0.0);
}

#[test]
fn no_eigenvalue_verdict_is_stable_under_tolerance_halving() {
    let p = Params::new(1.0, 1.0, 1.0).unwrap();
    let pp = PotentialPair::sads(&p);
    let ch = validate_channel(1.5, -0.5).unwrap();
    let coarse = NoEigenvalueOptions::default();
    let fine = NoEigenvalueOptions {
        rtol: coarse.rtol / 2.0,
        ..coarse
    };
    for lambda in [-2.0, 0.0, 1.0] {
        let a = no_eigenvalue_test(lambda, ch, &p, &pp, 30.0, &coarse).unwrap();
        let b = no_eigenvalue_test(lambda, ch, &p, &pp, 30.0, &fine).unwrap();
        assert_eq!(a.invertible_limit, b.invertible_limit);
        assert!(a.invertible_limit);
        assert!((a.condition - b.condition).abs() <= 1e-6 * a.condition);
    }
}

#[test]
fn zero_potential_propagation_is_identity() {
    let p = Params::new(1.0, 1.0, 1.0).unwrap();
    let r = no_eigenvalue_test(
        1.0,
        validate_channel(0.5, 0.5).unwrap(),
        &p,
        &PotentialPair::zero(),
        30.0,
        &NoEigenvalueOptions::default(),
    )
    .unwrap();
    for i in 0..4 {
        for j in 0..4 {
            let expect = if i == j { 1.0 } else { 0.0 };
            assert_eq!(r.propagation[i][j], (expect, 0.0));
        }
    }
    assert_eq!(r.convergence, 0.0);
    assert!((r.condition - 1.0).abs() <= 1e-14 && r.total_integral == 0.0);
    // Domain and configuration checks.
    let pp = PotentialPair::sads(&p);
    let ch = validate_channel(0.5, 0.5).unwrap();
    assert!(matches!(
        no_eigenvalue_test(f64::NAN, ch, &p, &pp, 30.0, &NoEigenvalueOptions::default()),
        Err(Error::Domain(_))
    ));
    assert!(matches!(
        no_eigenvalue_test(0.0, ch, &p, &pp, 0.5, &NoEigenvalueOptions::default()),
        Err(Error::Configuration(_))
    ));
}

fn graded(m: f64, h_min: f64) -> ChannelOperator<f64> {
    sads(
        m,
        -20.0,
        600,
        SpacingPolicy::BoundaryGraded { ratio: 1.1, h_min },
    )
}

fn probe_data(op: &ChannelOperator<f64>) -> SpinorField<f64> {
    let g = op.grid().clone();
    let f = bump_state(g.clone(), 0, -5.0, 2.0, 0.0)
        .add(&bump_state(g.clone(), 1, -5.0, 2.0, 0.0).scaled(c(0.3, 0.0)))
        .add(&bump_state(g.clone(), 2, -5.0, 2.0, 0.0).scaled(c(0.0, 0.5)))
        .add(&bump_state(g, 3, -5.0, 2.0, 0.0).scaled(c(-0.2, 0.0)));
    op.project_admissible(&f)
}

#[test]
fn boundary_exponents_match_domain_asymptotics() {
    let z = c(0.3, 1.0);
    let sup = graded(1.0, 1e-5);
    let fit = boundary_exponent_fit(&sup, z, &probe_data(&sup)).unwrap();
    assert_eq!(fit.status, FitStatus::Fitted);
    let slope = fit.slope.unwrap();
    assert!(slope >= 0.45, "2ml = 2 slope {slope}");
    assert!(fit.points >= 5 && fit.window.1 / fit.window.0 > 9.99);

    let sub = graded(0.25, 1e-5);
    assert_eq!(sub.bc(), BoundaryCondition::Mit);
    let fit = boundary_exponent_fit(&sub, z, &probe_data(&sub)).unwrap();
    let slope = fit.slope.unwrap();
    assert!((slope + 0.25).abs() <= 0.05, "2ml = 1/2 slope {slope}");
    assert_eq!(fit.target, Some(-0.25));
}

#[test]
fn boundary_exponents_approach_targets_under_grading_refinement() {
    let z = c(0.3, 1.0);
    let slopes = |m: f64| -> Vec<f64> {
        [1e-2, 1e-3, 1e-4]
            .iter()
            .map(|&h| {
                let op = graded(m, h);
                boundary_exponent_fit(&op, z, &probe_data(&op))
                    .unwrap()
                    .slope
                    .unwrap()
            })
            .collect()
    };
    let sub = slopes(0.25);
    let dist: Vec<f64> = sub.iter().map(|s| (s + 0.25).abs()).collect();
    assert!(
        dist.windows(2).all(|w| w[1] <= w[0]),
        "2ml = 1/2 slopes {sub:?}"
    );
    let sup = slopes(1.0);
    assert!(sup.iter().all(|&s| s >= 0.45), "2ml = 2 slopes {sup:?}");
}

#[test]
fn boundary_fit_degenerate_cases() {
    let z = c(0.3, 1.0);
    let op = graded(1.0, 1e-4);
    // Manufactured data with a compactly supported solution: nothing to fit.
    let u = probe_data(&op);
    let f = manufactured_data(&op, z, &u);
    let fit = boundary_exponent_fit(&op, z, &f).unwrap();
    assert_eq!(fit.status, FitStatus::NoBoundaryTail);
    assert!(fit.slope.is_none());
    let back = resolvent_solve(&op, z, &f).unwrap();
    assert!(back.sub(&u).norm() <= 1e-12 * u.norm());

    assert!(matches!(
        boundary_exponent_fit(&op, c(0.3, 0.0), &probe_data(&op)),
        Err(Error::Domain(_))
    ));
    // Data reaching the boundary decade is rejected.
    let near = op.project_admissible(&SpinorField::from_fn(op.grid().clone(), |x| {
        let v = c((-x).min(1.0), 0.0);
        [v, v, v, v]
    }));
    assert!(matches!(
        boundary_exponent_fit(&op, z, &near),
        Err(Error::Validation(_))
    ));
    // 2ml = 1 is reported without a fit.
    let crit = graded(0.5, 1e-4);
    let fit = boundary_exponent_fit(&crit, z, &probe_data(&crit)).unwrap();
    assert_eq!(fit.status, FitStatus::CriticalNotFitted);
    assert!(fit.slope.is_none() && fit.target.is_none());
}
