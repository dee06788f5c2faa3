mod common;

use std::sync::Arc;

use adsdirac_core::channel::*;
use adsdirac_core::dynamics::*;
use adsdirac_core::geometry::Params;
use adsdirac_core::grid::{make_grid, Endpoint, Grid, SpacingPolicy, SpinorField};
use adsdirac_core::{Cx, Error};
use common::bump;

fn c(re: f64, im: f64) -> Cx<f64> {
    Cx::new(re, im)
}

fn sads_operator(m: f64, x_min: f64, n: usize) -> ChannelOperator<f64> {
    let p = Params::new(1.0, 1.0, m).unwrap();
    let pp = PotentialPair::sads(&p);
    let bc = BoundaryCondition::for_regime(p.regime);
    let grid = make_grid(x_min, n, SpacingPolicy::Uniform, bc.endpoint()).unwrap();
    assemble_hamiltonian(validate_channel(0.5, 0.5).unwrap(), &p, grid, &pp).unwrap()
}

fn free_operator(x_min: f64, n: usize) -> ChannelOperator<f64> {
    let p = Params::new(1.0, 1.0, 1.0).unwrap();
    let grid = make_grid(x_min, n, SpacingPolicy::Uniform, Endpoint::OnBoundary).unwrap();
    free_generator(validate_channel(0.5, 0.5).unwrap(), &p, grid).unwrap()
}

/// Mixed-component smooth state centred at `centre`.
fn mixed_state(grid: &Arc<Grid<f64>>, centre: f64, width: f64) -> SpinorField<f64> {
    SpinorField::from_fn(grid.clone(), |x| {
        let b = bump(x, centre, width);
        let ph = c((2.0 * x).cos(), (2.0 * x).sin());
        [ph * b, c(0.5 * b, 0.0), c(0.0, -0.3 * b), ph * (0.8 * b)]
    })
}

#[test]
fn grid_construction() {
    let g = make_grid(-20.0f64, 2000, SpacingPolicy::Uniform, Endpoint::Staggered).unwrap();
    assert_eq!(g.len(), 2000);
    assert!(g.nodes().windows(2).all(|w| w[1] > w[0]));
    assert!((g.max_spacing() - 0.01).abs() < 1e-12 && (g.min_spacing() - 0.01).abs() < 1e-12);
    let sum: f64 = g.weights().iter().sum();
    assert!((sum - 20.0).abs() < 0.011, "weights sum {sum}");
    let graded = make_grid(
        -20.0f64,
        400,
        SpacingPolicy::BoundaryGraded {
            ratio: 1.05,
            h_min: 1e-4,
        },
        Endpoint::Staggered,
    )
    .unwrap();
    let nodes = graded.nodes();
    let n = nodes.len();
    let last_gap = nodes[n - 1] - nodes[n - 2];
    assert!((last_gap - graded.min_spacing()).abs() < 1e-15);
    // Staggered nodes: the last gap is the mean of the two smallest cells.
    assert!((last_gap - 1e-4 * (1.0 + 1.05) / 2.0).abs() < 1e-12);
    assert!((nodes[n - 1] + 0.5e-4).abs() < 1e-15);
    for w in nodes.windows(3) {
        let r = (w[1] - w[0]) / (w[2] - w[1]);
        assert!((1.0 - 1e-9..=1.2 + 1e-9).contains(&r), "ratio {r}");
    }
    assert!(graded.weights().iter().all(|&w| w > 0.0));
    for bad in [
        make_grid(1.0, 100, SpacingPolicy::Uniform, Endpoint::Staggered),
        make_grid(-1.0, 8, SpacingPolicy::Uniform, Endpoint::Staggered),
        make_grid(
            -1.0,
            100,
            SpacingPolicy::BoundaryGraded {
                ratio: 1.5,
                h_min: 1e-3,
            },
            Endpoint::Staggered,
        ),
    ] {
        assert!(matches!(bad, Err(Error::Configuration(_))));
    }
}

#[test]
fn configuration_guards() {
    let op = free_operator(-10.0, 256);
    let psi = SpinorField::zeros(op.grid().clone());
    let h = op.grid().min_spacing();
    assert!(evolve(&op, &psi, &EvolutionConfig::new(h, 1.0)).is_err());
    assert!(evolve(&op, &psi, &EvolutionConfig::new(-0.01, 1.0)).is_err());
    assert!(evolve(
        &op,
        &psi,
        &EvolutionConfig::new(h / 2.0, 1.0).with_snapshots([2.0])
    )
    .is_err());
    // A state violating the reflecting condition at x = 0 is rejected.
    let bad = SpinorField::from_fn(op.grid().clone(), |_| {
        [c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]
    });
    assert!(matches!(
        evolve(&op, &bad, &EvolutionConfig::new(h / 2.0, 1.0)),
        Err(Error::Validation(_))
    ));
}

#[test]
fn zero_field_stays_zero() {
    let op = sads_operator(1.0, -10.0, 256);
    let h = op.grid().min_spacing();
    let psi = SpinorField::zeros(op.grid().clone());
    let traj = evolve(&op, &psi, &EvolutionConfig::new(h / 2.0, 2.0)).unwrap();
    assert_eq!(traj.final_state.norm(), 0.0);
    assert_eq!(traj.norm_drift, 0.0);
}

#[test]
fn unitarity_in_both_regimes() {
    for m in [0.25, 1.0] {
        let op = sads_operator(m, -20.0, 2048);
        let h = op.grid().min_spacing();
        let psi = mixed_state(op.grid(), -1.5, 1.0);
        let cfg = EvolutionConfig::new(h / 2.0, 10.0).with_snapshots([2.5, 5.0, 10.0]);
        let traj = evolve(&op, &psi, &cfg).unwrap();
        assert_eq!(traj.snapshots.len(), 3);
        assert!(
            traj.norm_drift <= 1e-10,
            "m = {m}: drift {}",
            traj.norm_drift
        );
        let ratio = traj.final_state.norm() / psi.norm();
        assert!((ratio - 1.0).abs() <= 1e-10);
        // Running backwards returns to the initial state.
        let back =
            evolve_backward(&op, &traj.final_state, &EvolutionConfig::new(h / 2.0, 10.0)).unwrap();
        assert!(back.final_state.sub(&psi).norm() < 1e-9 * psi.norm());
    }
}

#[test]
fn free_propagator_transports_and_reflects() {
    let grid = make_grid(-10.0, 1000, SpacingPolicy::Uniform, Endpoint::OnBoundary).unwrap();
    let g = |x: f64| bump(x, -2.5, 0.5);
    let psi = SpinorField::from_fn(grid.clone(), |x| {
        [c(0.0, 0.0), c(g(x), 0.0), c(0.0, 0.0), c(0.0, 0.0)]
    });
    let out = free_propagate(&psi, 4.0, Direction::Backward);
    let mut err: f64 = 0.0;
    for (v, &x) in out.values().iter().zip(grid.nodes()) {
        err = err.max(v[0].norm()).max(v[1].norm()).max(v[2].norm());
        err = err.max((v[3] - c(g(-x - 4.0), 0.0)).norm());
    }
    assert!(err < 1e-5, "{err}");
    assert!(out.mass_where(|x| !(-2.0..=-1.0).contains(&x)) < 1e-12);
    // Forward: a left-moving wave in component 3 near the wall stays put in shape.
    let psi3 = SpinorField::from_fn(grid.clone(), |x| {
        [c(0.0, 0.0), c(0.0, 0.0), c(g(x), 0.0), c(0.0, 0.0)]
    });
    let moved = free_propagate(&psi3, 3.0, Direction::Forward);
    let expect = SpinorField::from_fn(grid.clone(), |x| {
        [c(0.0, 0.0), c(0.0, 0.0), c(g(x + 3.0), 0.0), c(0.0, 0.0)]
    });
    assert!(moved.sub(&expect).norm() < 1e-5);
}

#[test]
fn free_propagator_group_law_and_norm() {
    let grid = make_grid(-30.0, 3000, SpacingPolicy::Uniform, Endpoint::OnBoundary).unwrap();
    let psi = mixed_state(&grid, -3.0, 1.5);
    for dir in [Direction::Forward, Direction::Backward] {
        let two_steps = free_propagate(&free_propagate(&psi, 1.7, dir), 2.9, dir);
        let one_step = free_propagate(&psi, 4.6, dir);
        assert!(
            two_steps.sub(&one_step).norm() < 1e-6 * psi.norm(),
            "{dir:?}"
        );
        let rel = (one_step.norm() / psi.norm() - 1.0).abs();
        assert!(rel < 1e-4, "{dir:?}: {rel}");
    }
    // Forward then backward is the identity.
    let round = free_propagate(
        &free_propagate(&psi, 5.0, Direction::Forward),
        5.0,
        Direction::Backward,
    );
    assert!(round.sub(&psi).norm() < 1e-6 * psi.norm());
}

#[test]
fn reflecting_coupling_holds_at_the_boundary() {
    let grid = make_grid(-10.0, 1000, SpacingPolicy::Uniform, Endpoint::OnBoundary).unwrap();
    let psi = mixed_state(&grid, -2.0, 1.0);
    let out = free_propagate(&psi, 2.0, Direction::Forward);
    let tr = boundary_trace(&out);
    assert!(tr.mit_residual < 1e-12, "{}", tr.mit_residual);
    let (a, b) = (tr.values[0], tr.values[2]);
    assert!((a.0 + b.0).abs() < 1e-12 && (a.1 + b.1).abs() < 1e-12);
    assert!(
        tr.values[0].0.abs() + tr.values[0].1.abs() > 1e-3,
        "wave should be at the wall"
    );
    // Interior bump: all traces vanish.
    let quiet = boundary_trace(&psi);
    assert!(quiet.values.iter().all(|v| v.0 == 0.0 && v.1 == 0.0));
    // A constant field in ker(γ¹ + i) has zero residual.
    let staggered = make_grid(-10.0, 100, SpacingPolicy::Uniform, Endpoint::Staggered).unwrap();
    let k = SpinorField::from_fn(staggered, |_| {
        [c(1.0, 2.0), c(0.5, 0.0), c(-1.0, -2.0), c(0.5, 0.0)]
    });
    let tr = boundary_trace(&k);
    assert!(tr.mit_residual < 1e-14 && tr.scaled_residual.unwrap() < 1e-14);
}

#[test]
fn discrete_free_evolution_converges_to_closed_form() {
    let t = 4.0;
    let mut errs = Vec::new();
    for n in [1024, 2048, 4096] {
        let op = free_operator(-8.0, n);
        let h = op.grid().min_spacing();
        let psi = SpinorField::from_fn(op.grid().clone(), |x| {
            let b = bump(x, -2.5, 1.5);
            let ph = c(x.cos(), x.sin());
            [ph * b, c(0.5 * b, 0.0), c(0.0, -0.3 * b), ph * (0.8 * b)]
        });
        let traj = evolve(&op, &psi, &EvolutionConfig::new(h / 2.0, t)).unwrap();
        let exact = free_propagate(&psi, t, Direction::Forward);
        errs.push(l2_distance(&traj.final_state, &exact) / psi.norm());
    }
    let orders: Vec<f64> = errs.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    assert!(errs[1] <= 1e-3, "{errs:?}");
    assert!(
        orders.iter().all(|&o| o >= 1.8),
        "orders {orders:?} from {errs:?}"
    );
}

#[test]
fn snapshots_are_taken_at_exact_times() {
    let op = free_operator(-10.0, 512);
    let h = op.grid().min_spacing();
    let psi = mixed_state(op.grid(), -3.0, 1.0);
    let cfg = EvolutionConfig::new(h / 2.0, 3.0).with_snapshots([0.0, 1.0 / 3.0, 2.0]);
    let traj = evolve(&op, &psi, &cfg).unwrap();
    assert_eq!(traj.times, vec![0.0, 1.0 / 3.0, 2.0]);
    assert!(traj.snapshots[0].sub(&psi).norm() < 1e-15 * psi.norm().max(1.0) * 10.0);
    // Splitting the run at a snapshot does not change the final state beyond rounding.
    let direct = evolve(&op, &traj.snapshots[2], &EvolutionConfig::new(h / 2.0, 1.0)).unwrap();
    assert!(direct.final_state.sub(&traj.final_state).norm() < 1e-12);
}

#[test]
fn finite_propagation_speed() {
    let op = sads_operator(1.0, -30.0, 2048);
    let h = op.grid().min_spacing();
    let (a, b) = (-6.0, -4.0);
    let psi = mixed_state(op.grid(), 0.5 * (a + b), 0.5 * (b - a));
    let times = [2.0, 4.0, 8.0];
    let cfg = EvolutionConfig::new(h / 2.0, 8.0).with_snapshots(times);
    let traj = evolve(&op, &psi, &cfg).unwrap();
    let total = psi.norm_sqr();
    for (state, &t) in traj.snapshots.iter().zip(&traj.times) {
        let lo = a - 1.1 * t;
        let hi = (b + 1.1 * t).min(0.0);
        let outside = state.mass_where(|x| x < lo || x > hi);
        assert!(outside <= 1e-6 * total, "t = {t}: {}", outside / total);
    }
}

#[test]
fn free_dynamics_conserves_pair_masses() {
    let op = free_operator(-15.0, 1024);
    let h = op.grid().min_spacing();
    let psi = mixed_state(op.grid(), -2.0, 1.0);
    let traj = evolve(
        &op,
        &psi,
        &EvolutionConfig::new(h / 2.0, 6.0).with_snapshots([3.0, 6.0]),
    )
    .unwrap();
    let m0 = psi.component_masses();
    let pair0 = (m0[0] + m0[2], m0[1] + m0[3]);
    for s in &traj.snapshots {
        let m = s.component_masses();
        let pair = (m[0] + m[2], m[1] + m[3]);
        assert!(
            (pair.0 - pair0.0).abs() < 1e-3 * (pair0.0 + pair0.1),
            "{pair:?} vs {pair0:?}"
        );
        assert!((pair.1 - pair0.1).abs() < 1e-3 * (pair0.0 + pair0.1));
    }
    // The closed form conserves them up to interpolation error.
    for t in [1.0, 3.0, 7.0] {
        let m = free_propagate(&psi, t, Direction::Forward).component_masses();
        assert!((m[0] + m[2] - pair0.0).abs() < 1e-4 * pair0.0);
        assert!((m[1] + m[3] - pair0.1).abs() < 1e-4 * pair0.1);
    }
}

#[test]
fn zero_override_is_the_free_generator() {
    let p = Params::new(1.0, 1.0, 0.4).unwrap();
    let ch = validate_channel(1.5, 0.5).unwrap();
    let grid = make_grid(-8.0, 300, SpacingPolicy::Uniform, Endpoint::OnBoundary).unwrap();
    let a = free_generator(ch, &p, grid.clone()).unwrap();
    let b = assemble_hamiltonian(ch, &p, grid, &PotentialPair::zero()).unwrap();
    assert_eq!(a.matrix(), b.matrix());
}
