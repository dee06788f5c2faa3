//! Schwarzschild–anti-de Sitter exterior geometry.
//!
//! The metric factor is `F(r) = 1 − 2M/r + r²/l²`, with a single positive
//! root `r_SAdS`. The tortoise coordinate `r_*` satisfies `dr_*/dr = 1/F` and
//! the working coordinate is `x = r_* − Cπ/2`, which maps the horizon to
//! `−∞` and conformal infinity to `0⁻`.
//!
//! Radii are carried as a [`RadialPoint`] holding both `r` and the horizon
//! distance `δ = r − r_SAdS`, so that points exponentially close to the
//! horizon (`δ ~ e^{2κx}`) remain representable.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Classification of the product `2ml` that selects the boundary condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    /// `2ml < 1`: a boundary condition at conformal infinity is required.
    Subcritical,
    /// `2ml = 1` (within `1e−12`).
    Critical,
    /// `2ml > 1`: the operator is essentially self-adjoint without boundary data.
    Supercritical,
}

impl Regime {
    /// Regime of the product `2ml`.
    pub fn of_product(two_ml: f64) -> Self {
        if (two_ml - 1.0).abs() <= 1e-12 {
            Regime::Critical
        } else if two_ml < 1.0 {
            Regime::Subcritical
        } else {
            Regime::Supercritical
        }
    }
}

/// Black-hole and field parameters together with derived constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Params<T: Real> {
    /// Black-hole mass `M`.
    pub mass: T,
    /// AdS length scale `l` (`Λ = −3/l²`).
    pub ads_length: T,
    /// Field mass `m`.
    pub field_mass: T,
    /// Horizon radius `r_SAdS`.
    pub horizon: T,
    /// Surface gravity `κ = F'(r_SAdS)/2`.
    pub kappa: T,
    /// Coefficient `C` of the arctangent in `r_*`.
    pub tortoise_c: T,
    /// Coefficient `α₁ = r_SAdS·l²/(3r_SAdS² + l²) = 1/(2κ)`.
    pub alpha1: T,
    /// Regime of `2ml`.
    pub regime: Regime,
}

impl<T: Real> Params<T> {
    /// Validates `M, l, m > 0` and derives the horizon constants.
    pub fn new(mass: T, ads_length: T, field_mass: T) -> Result<Self> {
        for (name, v) in [("M", mass), ("l", ads_length), ("m", field_mass)] {
            if !(v > T::zero()) || !v.is_finite() {
                return Err(Error::Validation(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        let l = ads_length;
        let rs = horizon_radius(mass, l);
        let three = T::lit(3.0);
        let alpha1 = rs * l * l / (three * rs * rs + l * l);
        let kappa = metric_factor_derivative(rs, mass, l) / T::lit(2.0);
        let d = three * rs * rs + T::lit(4.0) * l * l;
        let tortoise_c = l * l * (three * rs * rs + T::lit(2.0) * l * l)
            / ((three * rs * rs + l * l) * d.sqrt());
        let regime = Regime::of_product((T::lit(2.0) * field_mass * l).to_f64_lossy());
        Ok(Self {
            mass,
            ads_length,
            field_mass,
            horizon: rs,
            kappa,
            tortoise_c,
            alpha1,
            regime,
        })
    }

    /// Cosmological constant `Λ = −3/l²`.
    pub fn lambda(&self) -> T {
        -T::lit(3.0) / (self.ads_length * self.ads_length)
    }

    /// The product `2ml`.
    pub fn two_ml(&self) -> T {
        T::lit(2.0) * self.field_mass * self.ads_length
    }

    /// `√(3r_SAdS² + 4l²)`, the scale inside the arctangent.
    fn sqrt_d(&self) -> T {
        let (rs, l) = (self.horizon, self.ads_length);
        (T::lit(3.0) * rs * rs + T::lit(4.0) * l * l).sqrt()
    }

    /// `Q(r) = r² + r_SAdS·r + r_SAdS² + l²`, the quadratic cofactor of `F`.
    fn quadratic(&self, r: T) -> T {
        let (rs, l) = (self.horizon, self.ads_length);
        r * r + rs * r + rs * rs + l * l
    }
}

/// `F(r) = 1 − 2M/r + r²/l²` for `r > 0`.
pub fn metric_factor<T: Real>(r: T, p: &Params<T>) -> Result<T> {
    if !(r > T::zero()) {
        return Err(Error::Domain(format!("metric factor needs r > 0, got {r}")));
    }
    let l = p.ads_length;
    Ok(T::one() - T::lit(2.0) * p.mass / r + r * r / (l * l))
}

/// `F'(r) = 2M/r² + 2r/l²`.
pub fn metric_factor_derivative<T: Real>(r: T, mass: T, l: T) -> T {
    T::lit(2.0) * mass / (r * r) + T::lit(2.0) * r / (l * l)
}

/// Horizon radius `r_SAdS = p₊ + p₋` with `p± = ∛(Ml² ± √(M²l⁴ + l⁶/27))`.
///
/// The closed form loses relative accuracy through cancellation when
/// `M ≪ l`; a single Newton step on the cubic `r³ + l²r − 2Ml²` restores full
/// precision without changing the root selected.
pub fn horizon_radius<T: Real>(mass: T, l: T) -> T {
    let l2 = l * l;
    let disc = (mass * mass * l2 * l2 + l2 * l2 * l2 / T::lit(27.0)).sqrt();
    let p_plus = (mass * l2 + disc).cbrt();
    let p_minus = (mass * l2 - disc).cbrt();
    let mut r = p_plus + p_minus;
    for _ in 0..2 {
        let f = r * r * r + l2 * r - T::lit(2.0) * mass * l2;
        let df = T::lit(3.0) * r * r + l2;
        r -= f / df;
    }
    r
}

/// A radius outside the horizon, carried with its horizon distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialPoint<T: Real> {
    /// Areal radius `r`.
    pub r: T,
    /// Horizon distance `δ = r − r_SAdS > 0` (accurate even when `δ ≪ r`).
    pub delta: T,
    /// `F(r)^{1/2}`.
    pub sqrt_f: T,
}

/// The monotone map `r ↦ x` and its inverse.
#[derive(Debug, Clone, Copy)]
pub struct CoordinateMap<T: Real> {
    /// Geometry parameters.
    pub params: Params<T>,
    /// Relative tolerance of the inversion (in `ln δ`).
    pub tol: T,
    /// Below `|x|` of this size the boundary series replaces the inversion.
    pub series_cutoff: T,
}

impl<T: Real> CoordinateMap<T> {
    /// Map with default tolerances (`tol` near machine precision, series below `|x| = 1e−8`).
    pub fn new(params: Params<T>) -> Self {
        Self {
            params,
            tol: T::epsilon() * T::lit(8.0),
            series_cutoff: T::lit(1e-8),
        }
    }

    /// `x` as a function of the horizon distance `δ`.
    ///
    /// Written as `−α₁ ln(1 + r_S/δ) − (α₁/2) ln(Q(r)/r²) − C·atan(√D/(2r + r_S))`,
    /// algebraically identical to `r_* − Cπ/2` but free of cancellation at both ends.
    pub fn x_of_delta(&self, delta: T) -> T {
        let p = &self.params;
        let rs = p.horizon;
        let r = rs + delta;
        let q_over_r2 = rs / r + (rs * rs + p.ads_length * p.ads_length) / (r * r);
        -p.alpha1 * (rs / delta).ln_1p()
            - p.alpha1 / T::lit(2.0) * q_over_r2.ln_1p()
            - p.tortoise_c * (p.sqrt_d() / (T::lit(2.0) * r + rs)).atan()
    }

    /// `dx/d(ln δ) = δ/F = r·l²/Q(r)`.
    fn dx_dlndelta(&self, delta: T) -> T {
        let p = &self.params;
        let r = p.horizon + delta;
        r * p.ads_length * p.ads_length / p.quadratic(r)
    }

    /// Working coordinate `x(r) = r_*(r) − Cπ/2`.
    pub fn x_of_r(&self, r: T) -> Result<T> {
        let delta = r - self.params.horizon;
        if !(delta > T::zero()) {
            return Err(Error::Domain(format!(
                "x(r) needs r > r_SAdS = {}, got {r}",
                self.params.horizon
            )));
        }
        Ok(self.x_of_delta(delta))
    }

    /// Working coordinate of a radial point, evaluated from its horizon distance.
    ///
    /// Unlike [`Self::x_of_r`], this keeps full accuracy where `r − r_SAdS` is
    /// below the resolution of `r` itself.
    pub fn x_of_point(&self, pt: &RadialPoint<T>) -> T {
        self.x_of_delta(pt.delta)
    }

    /// Tortoise coordinate `r_*(r)`.
    pub fn tortoise(&self, r: T) -> Result<T> {
        Ok(self.x_of_r(r)? + self.params.tortoise_c * T::FRAC_PI_2())
    }

    /// `F^{1/2}` at horizon distance `δ`, from the factorisation `F = δ·Q(r)/(r·l²)`.
    pub fn sqrt_f_of_delta(&self, delta: T) -> T {
        let p = &self.params;
        let r = p.horizon + delta;
        (delta * p.quadratic(r) / (r * p.ads_length * p.ads_length)).sqrt()
    }

    /// Radial point at coordinate `x < 0`.
    pub fn point_of_x(&self, x: T) -> Result<RadialPoint<T>> {
        if !(x < T::zero()) || !x.is_finite() {
            return Err(Error::Domain(format!("r(x) needs finite x < 0, got {x}")));
        }
        let p = &self.params;
        let l = p.ads_length;
        if -x < self.series_cutoff {
            let r = -l * l / x + x / T::lit(3.0);
            let sqrt_f = -l / x - x / (T::lit(6.0) * l);
            return Ok(RadialPoint {
                r,
                delta: r - p.horizon,
                sqrt_f,
            });
        }
        let u = self.solve_ln_delta(x)?;
        // Polish in δ itself (dx/dδ = 1/F): the logarithmic unknown leaves a
        // relative error of order ε·|ln δ| in δ, which matters where F^{1/2}
        // is compared with its boundary expansion.
        let mut delta = u.exp();
        for _ in 0..2 {
            let f = self.sqrt_f_of_delta(delta).powi(2);
            let next = delta - (self.x_of_delta(delta) - x) * f;
            if next > T::zero() {
                delta = next;
            }
        }
        Ok(RadialPoint {
            r: p.horizon + delta,
            delta,
            sqrt_f: self.sqrt_f_of_delta(delta),
        })
    }

    /// Inverse map `r(x)`.
    pub fn r_of_x(&self, x: T) -> Result<T> {
        Ok(self.point_of_x(x)?.r)
    }

    /// Solves `x(e^u) = x_target` for `u = ln δ` by bracketing and safeguarded Newton.
    fn solve_ln_delta(&self, target: T) -> Result<T> {
        let p = &self.params;
        let l = p.ads_length;
        let g = |u: T| self.x_of_delta(u.exp()) - target;
        // Initial guess: linear law near the horizon, `r ≈ −l²/x` near the boundary.
        let far_r = -l * l / target;
        let mut u = if far_r > T::lit(2.0) * p.horizon {
            (far_r - p.horizon).ln()
        } else {
            let x_inf = self.x_of_delta(T::lit(1e-30)) - p.alpha1 * T::lit(1e-30).ln();
            (target - x_inf) / p.alpha1
        };
        let ln_max = T::max_value().ln() - T::lit(1.0);
        let ln_min = T::min_positive_value().ln() + T::lit(1.0);
        u = u.max(ln_min).min(ln_max);
        let (mut lo, mut hi) = (u, u);
        let mut step = T::one();
        while g(lo) > T::zero() {
            lo = (lo - step).max(ln_min);
            step *= T::lit(2.0);
            if lo <= ln_min && g(lo) > T::zero() {
                return Err(Error::Numeric(format!(
                    "r(x) bracket failed for x = {target}: x(δ) > target on [exp({lo}), exp({hi})]"
                )));
            }
        }
        step = T::one();
        while g(hi) < T::zero() {
            hi = (hi + step).min(ln_max);
            step *= T::lit(2.0);
            if hi >= ln_max && g(hi) < T::zero() {
                return Err(Error::Numeric(format!(
                    "r(x) bracket failed for x = {target}: x(δ) < target on [exp({lo}), exp({hi})]"
                )));
            }
        }
        u = u.max(lo).min(hi);
        for _ in 0..200 {
            let gu = g(u);
            if gu == T::zero() {
                return Ok(u);
            }
            if gu < T::zero() {
                lo = u;
            } else {
                hi = u;
            }
            let newton = u - gu / self.dx_dlndelta(u.exp());
            let next = if newton > lo && newton < hi {
                newton
            } else {
                (lo + hi) / T::lit(2.0)
            };
            let du = (next - u).abs();
            u = next;
            if du <= self.tol * T::one().max(u.abs()) || hi - lo <= self.tol * T::one().max(u.abs())
            {
                return Ok(u);
            }
        }
        Err(Error::Numeric(format!(
            "r(x) Newton iteration stalled for x = {target} in ln δ ∈ [{lo}, {hi}]"
        )))
    }
}

/// Tortoise coordinate of the standalone closed form.
pub fn tortoise<T: Real>(r: T, p: &Params<T>) -> Result<T> {
    CoordinateMap::new(*p).tortoise(r)
}

/// Which end of the `x` axis an expansion describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    /// `x → −∞` (event horizon).
    Horizon,
    /// `x → 0⁻` (conformal infinity).
    Boundary,
}

/// One sample of an expansion check.
#[derive(Debug, Clone, Serialize)]
pub struct ResidualRow {
    /// Sample coordinate.
    pub x: f64,
    /// `F^{1/2}` by inversion.
    pub sqrt_f: f64,
    /// `F^{1/2}/r` by inversion.
    pub sqrt_f_over_r: f64,
    /// Residuals of the expansions (boundary side) or of the exponential law (horizon side).
    pub residuals: Vec<f64>,
}

/// Residuals of the asymptotic expansions on a sample.
#[derive(Debug, Clone, Serialize)]
pub struct ResidualTable {
    /// Side examined.
    pub side: Side,
    /// Sampled rows.
    pub rows: Vec<ResidualRow>,
    /// Fitted orders: on the boundary side, log–log slopes of `|residual|` vs `|x|` for
    /// `F^{1/2}`, `F^{1/2}/r` and `r`; on the horizon side, the slope of `ln F^{1/2}` vs `x`.
    pub fitted_orders: Vec<f64>,
}

/// Least-squares slope of `ys` against `xs`.
pub fn fit_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Evaluates `F^{1/2}`, `F^{1/2}/r`, `r` by inversion and compares them with the
/// asymptotic expansions at the selected end.
///
/// Boundary side: `F^{1/2} = −l/x − x/(6l)`, `F^{1/2}/r = 1/l + x²/(2l³)`,
/// `r = −l²/x + x/3`, sampled at `x = −10^{−k/2}`, `k = 2..12`. Horizon side:
/// `ln F^{1/2}` is sampled on `[−40, −20]` and its slope (expected `κ`) is fitted.
pub fn expansion_residuals(p: &Params<f64>, side: Side) -> Result<ResidualTable> {
    let map = CoordinateMap::new(*p);
    let l = p.ads_length;
    let mut rows = Vec::new();
    match side {
        Side::Boundary => {
            let mut logs = Vec::new();
            let mut res: [Vec<f64>; 3] = Default::default();
            for k in 2..=12 {
                let x = -(10f64).powf(-(k as f64) / 2.0);
                let pt = map.point_of_x(x)?;
                let r1 = pt.sqrt_f - (-l / x - x / (6.0 * l));
                let r2 = pt.sqrt_f / pt.r - (1.0 / l + x * x / (2.0 * l * l * l));
                let r3 = pt.r - (-l * l / x + x / 3.0);
                logs.push((-x).ln());
                for (acc, v) in res.iter_mut().zip([r1, r2, r3]) {
                    acc.push(v.abs().max(f64::MIN_POSITIVE).ln());
                }
                rows.push(ResidualRow {
                    x,
                    sqrt_f: pt.sqrt_f,
                    sqrt_f_over_r: pt.sqrt_f / pt.r,
                    residuals: vec![r1, r2, r3],
                });
            }
            // Fit on the four largest |x| samples, where residuals dominate rounding.
            let fitted_orders = res
                .iter()
                .map(|ys| fit_slope(&logs[..4], &ys[..4]))
                .collect();
            Ok(ResidualTable {
                side,
                rows,
                fitted_orders,
            })
        }
        Side::Horizon => {
            let mut xs = Vec::new();
            let mut ys = Vec::new();
            for i in 0..=40 {
                let x = -40.0 + 0.5 * i as f64;
                let pt = map.point_of_x(x)?;
                let lnf = pt.sqrt_f.ln();
                xs.push(x);
                ys.push(lnf);
                rows.push(ResidualRow {
                    x,
                    sqrt_f: pt.sqrt_f,
                    sqrt_f_over_r: pt.sqrt_f / pt.r,
                    residuals: vec![lnf - p.kappa * x],
                });
            }
            Ok(ResidualTable {
                side,
                rows,
                fitted_orders: vec![fit_slope(&xs, &ys)],
            })
        }
    }
}
