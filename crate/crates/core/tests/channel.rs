mod common;

use std::sync::Arc;

use adsdirac_core::channel::*;
use adsdirac_core::geometry::Params;
use adsdirac_core::grid::{make_grid, Endpoint, Grid, SpacingPolicy, SpinorField};
use adsdirac_core::linalg::Mat4;
use adsdirac_core::{Cx, Error};
use common::bump;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn c(re: f64, im: f64) -> Cx<f64> {
    Cx::new(re, im)
}

fn random_field(grid: &Arc<Grid<f64>>, rng: &mut ChaCha8Rng) -> SpinorField<f64> {
    let values = (0..grid.len())
        .map(|_| std::array::from_fn(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))))
        .collect();
    SpinorField::from_values(grid.clone(), values).unwrap()
}

fn random_bump(grid: &Arc<Grid<f64>>, rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> SpinorField<f64> {
    let centre = rng.gen_range(lo..hi);
    let amps: [Cx<f64>; 4] =
        std::array::from_fn(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    SpinorField::from_fn(grid.clone(), |x| {
        let b = bump(x, centre, 1.0);
        std::array::from_fn(|k| amps[k] * b)
    })
}

fn max_entry_diff(a: &Mat4<f64>, b: &Mat4<f64>) -> f64 {
    let d = a.clone() - b.clone();
    d.m.iter().flatten().fold(0.0, |m, z| m.max(z.norm()))
}

#[test]
fn channel_membership() {
    let ch = validate_channel(0.5, 0.5).unwrap();
    assert_eq!(ch.coupling(), 1.0);
    let ch = validate_channel(2.5, -1.5).unwrap();
    assert_eq!(ch.coupling(), 3.0);
    assert_eq!((ch.s(), ch.n()), (2.5, -1.5));
    for (s, n) in [(0.5, 1.5), (1.0, 0.5), (0.5, 0.0), (-0.5, 0.5), (1.5, 2.5)] {
        assert!(
            matches!(validate_channel(s, n), Err(Error::Validation(_))),
            "({s}, {n}) accepted"
        );
    }
}

#[test]
fn sads_potential_limits() {
    let p = Params::<f64>::new(1.0, 1.0, 1.0).unwrap();
    let pp = PotentialPair::sads(&p);
    let x: f64 = -1e-4;
    assert!((pp.a_ang(x).unwrap() - 1.0).abs() < 1e-7);
    assert!((-x * pp.b_mass(x).unwrap() - 1.0).abs() < 1e-7);
    let ratio = pp.a_ang(-30.0).unwrap() / pp.a_ang(-29.0).unwrap();
    assert!(
        (ratio / (-2.0f64).exp() - 1.0).abs() < 0.05,
        "ratio {ratio}"
    );
    assert!(matches!(pp.eval(0.0), Err(Error::Domain(_))));
    assert!(matches!(pp.eval(0.5), Err(Error::Domain(_))));
    let (a0, xb0) = pp.eval_with_limit(0.0).unwrap();
    assert_eq!((a0, xb0), (1.0, -1.0));
}

#[test]
fn envelope_classes() {
    for (m, l) in [(1.0, 1.0), (0.5, 2.0)] {
        let p = Params::new(m, l, 1.0).unwrap();
        let pp = PotentialPair::sads(&p);
        let report = envelope_check(&pp, &p).unwrap();
        assert!(report.pass, "{report:?}");
        assert!(report.horizon_exponent_a >= 0.95 * p.kappa);
    }
    let p = Params::new(1.0, 1.0, 1.0).unwrap();
    let pp = PotentialPair::sads(&p);
    let x = -1e-3;
    let (_, b0) = envelope_reference(x, 1.0);
    assert!((pp.b_mass(x).unwrap() - b0).abs() <= 1e-2);
    for x in [-2.0, -3.5, -10.0] {
        assert_eq!(envelope_reference(x, 1.0), (0.0, 0.0));
    }
    assert!(envelope_check(&PotentialPair::zero(), &p).is_err());
}

#[test]
fn boundary_condition_follows_product_only() {
    for mass in [0.1, 1.0, 7.0] {
        let sub = Params::new(mass, 1.0, 0.25).unwrap();
        let sup = Params::new(mass, 2.0, 0.5).unwrap();
        assert_eq!(
            BoundaryCondition::for_regime(sub.regime),
            BoundaryCondition::Mit
        );
        assert_eq!(
            BoundaryCondition::for_regime(sup.regime),
            BoundaryCondition::Natural
        );
    }
}

#[test]
fn mismatched_condition_is_rejected() {
    let ch = validate_channel(0.5, 0.5).unwrap();
    let p = Params::new(1.0, 1.0, 1.0).unwrap();
    let pp = PotentialPair::sads(&p);
    let g_on = make_grid(-10.0, 64, SpacingPolicy::Uniform, Endpoint::OnBoundary).unwrap();
    let g_st = make_grid(-10.0, 64, SpacingPolicy::Uniform, Endpoint::Staggered).unwrap();
    assert!(matches!(
        assemble_with_bc(ch, &p, g_st.clone(), &pp, BoundaryCondition::Mit),
        Err(Error::Configuration(_))
    ));
    assert!(matches!(
        assemble_hamiltonian(ch, &p, g_on, &pp),
        Err(Error::Configuration(_))
    ));
    assert!(assemble_hamiltonian(ch, &p, g_st, &pp).is_ok());
}

fn operator(m: f64, n_nodes: usize, pp: Option<PotentialPair<f64>>) -> ChannelOperator<f64> {
    let p = Params::new(1.0, 1.0, m).unwrap();
    let pp = pp.unwrap_or_else(|| PotentialPair::sads(&p));
    let bc = BoundaryCondition::for_potentials(&pp, &p);
    let grid = make_grid(-20.0, n_nodes, SpacingPolicy::Uniform, bc.endpoint()).unwrap();
    assemble_hamiltonian(validate_channel(0.5, 0.5).unwrap(), &p, grid, &pp).unwrap()
}

#[test]
fn discrete_self_adjointness() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for m in [0.25, 1.0] {
        let op = operator(m, 2048, None);
        assert_eq!(op.matrix().hermitian_defect(), 0.0);
        let grid = op.grid().clone();
        for _ in 0..100 {
            let u = op.project_admissible(&random_field(&grid, &mut rng));
            let v = op.project_admissible(&random_field(&grid, &mut rng));
            let u = u.scaled(c(1.0 / u.norm(), 0.0));
            let v = v.scaled(c(1.0 / v.norm(), 0.0));
            let lhs = op.apply(&u).inner(&v);
            let rhs = u.inner(&op.apply(&v));
            assert!(
                (lhs - rhs).norm() <= 1e-12,
                "m = {m}: {}",
                (lhs - rhs).norm()
            );
        }
    }
}

#[test]
fn admissible_fields_satisfy_mit_at_the_boundary() {
    let op = operator(0.25, 256, None);
    assert_eq!(op.bc(), BoundaryCondition::Mit);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let psi = op.project_admissible(&random_field(op.grid(), &mut rng));
    let last = psi.values().last().unwrap();
    assert!((last[0] + last[2]).norm() < 1e-14);
    assert!((last[1] - last[3]).norm() < 1e-14);
    // The projection is idempotent.
    let again = op.project_admissible(&psi);
    assert!(again.sub(&psi).norm() < 1e-13);
}

#[test]
fn potential_blocks_match_definition() {
    let op = operator(1.0, 512, None);
    let p = *op.params();
    let pp = op.potentials().clone();
    let alg = algebra::<f64>();
    let g0g2 = &alg.gamma[0] * &alg.gamma[2];
    for (i, &x) in op.grid().nodes().iter().enumerate() {
        let (a, b) = pp.eval(x).unwrap();
        let expect = g0g2.scale(&c(a, 0.0)) - alg.gamma[0].scale(&c(p.field_mass * b, 0.0));
        assert!(max_entry_diff(op.potential_block(i), &expect) < 1e-15 * (1.0 + b));
    }
}

#[test]
fn zero_override_has_symmetric_free_structure() {
    let op = operator(1.0, 256, Some(PotentialPair::zero()));
    assert_eq!(op.bc(), BoundaryCondition::Mit);
    for i in 0..op.grid().len() {
        assert_eq!(max_entry_diff(op.potential_block(i), &Mat4::zero()), 0.0);
    }
    // Only the derivative stencil remains: all diagonal entries vanish.
    for r in 0..op.dim() {
        assert!(op.matrix().get(r, r).norm() < 1e-15);
    }
}

#[test]
fn conjugate_operator_is_gamma1_times_x() {
    let grid = make_grid(-4.0, 32, SpacingPolicy::Uniform, Endpoint::Staggered).unwrap();
    let e1 = SpinorField::from_fn(grid.clone(), |_| {
        [c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]
    });
    let out = conjugate_apply(&e1);
    for (v, &x) in out.values().iter().zip(grid.nodes()) {
        assert_eq!(v[0], c(x, 0.0));
        assert_eq!(&v[1..], &[c(0.0, 0.0); 3]);
    }
    let ones = SpinorField::from_fn(grid.clone(), |_| [c(1.0, 1.0); 4]);
    let out = conjugate_apply(&ones);
    for (v, &x) in out.values().iter().zip(grid.nodes()) {
        assert_eq!(v[1], c(-x, -x));
        assert_eq!(v[2], c(-x, -x));
        assert_eq!(v[3], c(x, x));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let psi = random_field(&grid, &mut rng);
    assert!(psi.inner(&conjugate_apply(&psi)).im.abs() < 1e-13);
}

#[test]
fn commutator_closed_form_properties() {
    let ch = validate_channel(0.5, 0.5).unwrap();
    let p = Params::new(1.0, 1.0, 1.0).unwrap();
    let grid = make_grid(-40.5, 81, SpacingPolicy::Uniform, Endpoint::OnBoundary).unwrap();
    let free = commutator_closed_form(ch, &p, &PotentialPair::zero(), &grid).unwrap();
    for b in &free.blocks {
        assert_eq!(max_entry_diff(b, &Mat4::identity()), 0.0);
    }
    let sads = commutator_closed_form(ch, &p, &PotentialPair::sads(&p), &grid).unwrap();
    assert!(sads.hermitian_defect() < 1e-14);
    // Node 0 sits at x = −40: the correction is of the size of x·e^{κx}.
    assert!((grid.nodes()[0] + 40.0).abs() < 1e-12);
    let dev = max_entry_diff(&sads.blocks[0], &Mat4::identity());
    assert!(dev < 1e-30, "deviation {dev}");
}

#[test]
fn commutator_matches_brute_force_at_second_order() {
    let ch = validate_channel(1.5, -0.5).unwrap();
    let p = Params::new(1.0, 1.0, 1.0).unwrap();
    let pp = PotentialPair::sads(&p);
    let mut errs = Vec::new();
    for n in [400, 800, 1600] {
        let grid = make_grid(-10.0, n, SpacingPolicy::Uniform, Endpoint::Staggered).unwrap();
        let op = assemble_hamiltonian(ch, &p, grid.clone(), &pp).unwrap();
        let psi = SpinorField::from_fn(grid.clone(), |x| {
            let b = bump(x, -2.0, 1.5);
            [c(b, 0.0), c(0.0, b), c(0.5 * b, -b), c(-b, 0.25 * b)]
        });
        let closed = commutator_closed_form(ch, &p, &pp, &grid)
            .unwrap()
            .apply(&psi);
        let brute = discrete_commutator(&op, &psi);
        errs.push(closed.sub(&brute).norm() / psi.norm());
    }
    let order1 = (errs[0] / errs[1]).log2();
    let order2 = (errs[1] / errs[2]).log2();
    assert!(errs[2] < 1e-4, "{errs:?}");
    assert!(
        order1 > 1.8 && order2 > 1.8,
        "orders {order1}, {order2} from {errs:?}"
    );
}

#[test]
fn bachelot_representation_is_consistent() {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    for m in [0.25, 1.0] {
        let op = operator(m, 1024, None);
        let fields: Vec<_> = (0..20)
            .map(|_| random_bump(op.grid(), &mut rng, -15.0, -3.0))
            .collect();
        let r = transform_consistency(&op, &fields).unwrap();
        assert!(r <= 1e-12, "residual {r}");
    }
}

#[test]
fn reflection_splits_the_operator() {
    for m in [0.25, 1.0] {
        let op = operator(m, 256, None);
        let (blocks, cross) = op.symmetry_blocks();
        assert!(cross < 1e-13, "cross coupling {cross}");
        assert_eq!(
            blocks.iter().map(|b| b.matrix.order()).sum::<usize>(),
            op.dim()
        );
        // Lifting a block basis vector and applying Ĥ equals lifting the block product.
        let blk = &blocks[0];
        let k = blk.matrix.order() / 2;
        let mut e = vec![c(0.0, 0.0); blk.matrix.order()];
        e[k] = c(1.0, 0.0);
        let lifted = blk.lift(&e, op.dim());
        let full = op.matrix().matvec(&lifted);
        let via_block = blk.lift(&blk.matrix.matvec(&e), op.dim());
        let diff: f64 = full
            .iter()
            .zip(&via_block)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        assert!(diff < 1e-12, "diff {diff}");
    }
}
