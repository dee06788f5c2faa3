mod common;

use adsdirac_core::geometry::{
    expansion_residuals, horizon_radius, metric_factor, tortoise, CoordinateMap, Params, Regime,
    Side,
};
use common::{bisect, integrate};

fn params(m: f64, l: f64) -> Params<f64> {
    Params::new(m, l, 1.0).unwrap()
}

#[test]
fn metric_factor_values() {
    let p = params(1.0, 1.0);
    assert_eq!(metric_factor(1.0, &p).unwrap(), 0.0);
    assert_eq!(metric_factor(2.0, &p).unwrap(), 4.0);
    let r = 1e6;
    assert!((metric_factor(r, &p).unwrap() / (r * r) - 1.0).abs() < 1e-11);
    assert!(metric_factor(0.0, &p).is_err());
    assert!(metric_factor(-1.0, &p).is_err());
}

#[test]
fn horizon_matches_bisection_oracle() {
    for &(m, l) in &[
        (1.0, 1.0),
        (1.0, 10.0),
        (0.1, 1.0),
        (3.0, 0.5),
        (1e-6, 1.0),
        (50.0, 2.0),
    ] {
        let closed = horizon_radius(m, l);
        let oracle = bisect(
            |r| 1.0 - 2.0 * m / r + r * r / (l * l),
            1e-12,
            2.0 * m + 1.0,
            1e-15,
        );
        assert!(
            (closed - oracle).abs() <= 1e-12 * oracle.max(1e-3),
            "M={m} l={l}: closed {closed} vs bisection {oracle}"
        );
        let p = params(m, l);
        let f = metric_factor(closed, &p).unwrap();
        assert!(f.abs() <= 1e-12 * closed.max(1.0), "F(r_SAdS) = {f}");
    }
    assert!((horizon_radius(1.0f64, 1.0) - 1.0).abs() < 1e-12);
    // Degenerating horizon.
    assert!(horizon_radius(1e-9f64, 1.0) < 3e-9);
}

#[test]
fn derived_constants() {
    let p = params(1.0, 1.0);
    assert!((p.kappa - 2.0).abs() < 1e-12);
    assert!((p.tortoise_c - 5.0 / (4.0 * 7f64.sqrt())).abs() < 1e-12);
    assert!((p.tortoise_c - 0.47246).abs() < 1e-5);
    for &(m, l) in &[(1.0, 1.0), (1.0, 10.0), (0.3, 2.0)] {
        let p = params(m, l);
        assert!((2.0 * p.kappa * p.alpha1 - 1.0).abs() < 1e-12);
        let fp = 2.0 * m / (p.horizon * p.horizon) + 2.0 * p.horizon / (l * l);
        assert!((fp - 2.0 * p.kappa).abs() < 1e-12);
    }
    assert!((p.lambda() + 3.0).abs() < 1e-15);
}

#[test]
fn regime_depends_only_on_product() {
    assert_eq!(
        Params::new(1.0, 1.0, 1.0).unwrap().regime,
        Regime::Supercritical
    );
    assert_eq!(
        Params::new(1.0, 1.0, 0.25).unwrap().regime,
        Regime::Subcritical
    );
    assert_eq!(Params::new(1.0, 1.0, 0.5).unwrap().regime, Regime::Critical);
    assert_eq!(
        Params::new(7.0, 2.0, 0.0625).unwrap().regime,
        Regime::Subcritical
    );
    assert!(Params::new(-1.0, 1.0, 1.0).is_err());
    assert!(Params::new(1.0, 0.0, 1.0).is_err());
}

#[test]
fn tortoise_agrees_with_quadrature() {
    for &(m, l) in &[(1.0, 1.0), (1.0, 10.0), (0.2, 1.5)] {
        let p = params(m, l);
        let rs = p.horizon;
        let inv_f = |r: f64| 1.0 / (1.0 - 2.0 * m / r + r * r / (l * l));
        let samples = [
            rs * 1.001,
            rs * 1.1,
            rs * 1.5,
            rs * 3.0,
            10.0 * l,
            100.0 * l,
        ];
        for w in samples.windows(2) {
            let (r1, r2) = (w[0], w[1]);
            let quad = integrate(inv_f, r1, r2, 1e-12);
            let diff = tortoise(r2, &p).unwrap() - tortoise(r1, &p).unwrap();
            assert!(
                (quad - diff).abs() < 1e-8,
                "M={m} l={l} [{r1},{r2}]: {quad} vs {diff}"
            );
        }
    }
}

#[test]
fn tortoise_limits() {
    let p = params(1.0, 1.0);
    let far = tortoise(1e12, &p).unwrap();
    assert!((far - p.tortoise_c * std::f64::consts::FRAC_PI_2).abs() < 1e-11);
    let mut prev = f64::INFINITY;
    for k in 1..12 {
        let v = tortoise(1.0 + 10f64.powi(-k), &p).unwrap();
        assert!(v < prev);
        prev = v;
    }
    assert!(prev < -5.0);
    assert!(tortoise(1.0, &p).is_err());
}

#[test]
fn coordinate_round_trips() {
    for &(m, l) in &[(1.0, 1.0), (1.0, 10.0), (0.05, 1.0)] {
        let p = params(m, l);
        let map = CoordinateMap::new(p);
        let rs = p.horizon;
        let (a, b) = ((rs * 1e-6).ln(), (1e3 * l - rs).ln());
        let mut prev_x = f64::NEG_INFINITY;
        for i in 0..=400 {
            let delta = (a + (b - a) * i as f64 / 400.0).exp();
            let r = rs + delta;
            let x = map.x_of_r(r).unwrap();
            assert!(x > prev_x, "monotonicity at r = {r}");
            prev_x = x;
            let back = map.r_of_x(x).unwrap();
            assert!((back - r).abs() <= 1e-10 * r, "r = {r}: round trip {back}");
        }
        // Deep in the horizon region r rounds to r_SAdS; the horizon distance carries x.
        for &x in &[-40.0, -20.0, -5.0] {
            let pt = map.point_of_x(x).unwrap();
            let again = map.x_of_delta(pt.delta);
            assert!((again - x).abs() <= 1e-10 * x.abs(), "x = {x}: {again}");
        }
        for &x in &[-1.0, -0.1, -1e-3, -1e-7, -2e-8] {
            let r = map.r_of_x(x).unwrap();
            let again = map.x_of_r(r).unwrap();
            assert!(
                (again - x).abs() <= 1e-10 * x.abs().max(1e-9),
                "x = {x}: {again}"
            );
        }
    }
    let p = params(1.0, 1.0);
    let map = CoordinateMap::new(p);
    let pt = map.point_of_x(-5.0).unwrap();
    assert!((map.x_of_point(&pt) + 5.0).abs() < 1e-10);
    // Through a bare radius the round trip is limited by the conditioning dx/dr = 1/F.
    let r = map.r_of_x(-5.0).unwrap();
    let bound = 1e-10 * 5.0 + f64::EPSILON * r / metric_factor(r, &p).unwrap();
    assert!((map.x_of_r(r).unwrap() + 5.0).abs() < bound);
    assert!(map.r_of_x(0.0).is_err());
    assert!(map.r_of_x(1.0).is_err());
    assert!(map.x_of_r(0.5).is_err());
    assert!(map.x_of_r(1e15).unwrap() < 0.0);
}

#[test]
fn boundary_expansions_hold() {
    let p = params(1.0, 1.0);
    let map = CoordinateMap::new(p);
    let pt = map.point_of_x(-1e-3).unwrap();
    assert!((pt.sqrt_f / pt.r - 1.0).abs() < 1e-5);
    assert!((1e-3 * pt.sqrt_f - 1.0).abs() < 1e-5);
    let table = expansion_residuals(&p, Side::Boundary).unwrap();
    // F^{1/2}, F^{1/2}/r residuals are o(x) and o(x²); r residual o(x).
    assert!(table.fitted_orders[0] > 1.5, "{:?}", table.fitted_orders);
    assert!(table.fitted_orders[1] > 2.5, "{:?}", table.fitted_orders);
    assert!(table.fitted_orders[2] > 1.5, "{:?}", table.fitted_orders);
    // Series region agrees with the inversion at the switch point.
    let inside = map.point_of_x(-0.99e-8).unwrap();
    let outside = map.point_of_x(-1.01e-8).unwrap();
    assert!((inside.r * 0.99 - outside.r * 1.01).abs() < 1e-6 * inside.r);
}

#[test]
fn horizon_exponential_law() {
    let p = params(1.0, 1.0);
    let table = expansion_residuals(&p, Side::Horizon).unwrap();
    let slope = table.fitted_orders[0];
    assert!((slope - p.kappa).abs() < 0.01 * p.kappa, "slope {slope}");
    assert!(table
        .rows
        .iter()
        .all(|r| r.sqrt_f > 0.0 && r.sqrt_f.is_finite()));
}

#[test]
fn single_precision_instantiation() {
    let p = Params::<f32>::new(1.0, 1.0, 1.0).unwrap();
    assert!((p.horizon - 1.0).abs() < 1e-6);
    let map = CoordinateMap::new(p);
    let r = map.r_of_x(-2.0).unwrap();
    assert!((map.x_of_r(r).unwrap() + 2.0).abs() < 1e-4);
}
