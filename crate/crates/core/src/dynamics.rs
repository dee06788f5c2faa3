//! Time evolution: the Cayley (trapezoidal) propagator of a channel operator,
//! and the exact propagator of the comparison operator
//! `H_c = Γ¹D_x` with the reflecting coupling `ψ₁(0) = −ψ₃(0)`, `ψ₂(0) = ψ₄(0)`.
//!
//! Throughout, `U(t) = e^{−itH}`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::channel::{
    algebra, assemble_with_bc, BoundaryCondition, Channel, ChannelOperator, PotentialPair,
};
use crate::error::{Error, Result};
use crate::geometry::Params;
use crate::grid::{Grid, SpinorField};
use crate::linalg::{norm, BandLu, BandMatrix};
use crate::scalar::{cx, czero, Cx, Real};

/// One-step scheme of [`evolve`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// `(1 + i dt/2 H) ψ⁺ = (1 − i dt/2 H) ψ`, exactly unitary for Hermitian `H`.
    #[default]
    Cayley,
}

/// Time-stepping parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolutionConfig {
    /// Time step (positive; the direction is chosen by the caller).
    pub dt: f64,
    /// Final time.
    pub t_final: f64,
    /// One-step method.
    #[serde(default)]
    pub scheme: Scheme,
    /// Relative residual accepted from the linear solve of each step.
    #[serde(default = "default_solver_tolerance")]
    pub solver_tolerance: f64,
    /// Times at which to record the state (each reached exactly; the step is
    /// shortened as needed between consecutive snapshots).
    #[serde(default)]
    pub snapshots: Vec<f64>,
}

fn default_solver_tolerance() -> f64 {
    1e-12
}

impl EvolutionConfig {
    /// Configuration recording only the final state.
    pub fn new(dt: f64, t_final: f64) -> Self {
        Self {
            dt,
            t_final,
            scheme: Scheme::Cayley,
            solver_tolerance: default_solver_tolerance(),
            snapshots: Vec::new(),
        }
    }

    /// Adds snapshot times.
    pub fn with_snapshots(mut self, times: impl IntoIterator<Item = f64>) -> Self {
        self.snapshots.extend(times);
        self
    }

    /// Checks `dt > 0`, `t_final ≥ 0` and the resolution guard `dt ≤ h_min/2`.
    pub fn validate<T: Real>(&self, grid: &Grid<T>) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::Configuration(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        if !(self.t_final >= 0.0) || !self.t_final.is_finite() {
            return Err(Error::Configuration(format!(
                "final time must be non-negative, got {}",
                self.t_final
            )));
        }
        let h_min = grid.min_spacing().to_f64_lossy();
        if self.dt > 0.5 * h_min * (1.0 + 1e-12) {
            return Err(Error::Configuration(format!(
                "dt = {} exceeds half the smallest spacing {h_min}",
                self.dt
            )));
        }
        if !(self.solver_tolerance > 0.0) {
            return Err(Error::Configuration(
                "solver tolerance must be positive".into(),
            ));
        }
        if let Some(t) = self
            .snapshots
            .iter()
            .find(|t| !(**t >= 0.0 && **t <= self.t_final * (1.0 + 1e-12)))
        {
            return Err(Error::Configuration(format!(
                "snapshot time {t} outside [0, {}]",
                self.t_final
            )));
        }
        Ok(())
    }
}

/// Factorised Cayley step for a fixed operator and signed time step.
#[derive(Debug, Clone)]
pub struct CayleyPropagator<T: Real> {
    lu: BandLu<T>,
    lhs: BandMatrix<T>,
    rhs: BandMatrix<T>,
    dt: T,
    tolerance: T,
}

impl<T: Real> CayleyPropagator<T> {
    /// Factorises `1 + i dt/2 Ĥ` for the scaled matrix of `op`; negative `dt` runs backwards.
    pub fn new(op: &ChannelOperator<T>, dt: T, tolerance: T) -> Result<Self> {
        let half = cx(T::zero(), dt / T::lit(2.0));
        let one = cx(T::one(), T::zero());
        let lhs = op.matrix().shifted(one, half);
        let rhs = op.matrix().shifted(one, -half);
        let lu = BandLu::new(&lhs)?;
        Ok(Self {
            lu,
            lhs,
            rhs,
            dt,
            tolerance,
        })
    }

    /// Signed time step.
    pub fn dt(&self) -> T {
        self.dt
    }

    /// Advances reduced coordinates by one step.
    ///
    /// The residual of the linear solve is checked; one step of iterative
    /// refinement is applied if it exceeds the tolerance.
    pub fn step(&self, y: &mut Vec<Cx<T>>) -> Result<()> {
        let b = self.rhs.matvec(y);
        let mut x = self.lu.solve(&b);
        let scale = norm(&b).max(T::min_positive_value());
        let mut rel = T::zero();
        for attempt in 0..2 {
            let ax = self.lhs.matvec(&x);
            let r: Vec<Cx<T>> = b.iter().zip(&ax).map(|(p, q)| *p - *q).collect();
            rel = norm(&r) / scale;
            if rel <= self.tolerance {
                *y = x;
                return Ok(());
            }
            if attempt == 0 {
                let corr = self.lu.solve(&r);
                for (xi, ci) in x.iter_mut().zip(corr) {
                    *xi += ci;
                }
            }
        }
        Err(Error::Numeric(format!(
            "Cayley step: relative residual {rel} above tolerance {} after refinement",
            self.tolerance
        )))
    }
}

/// States recorded by [`evolve`].
#[derive(Debug, Clone)]
pub struct Trajectory<T: Real> {
    /// Recorded times, ascending.
    pub times: Vec<T>,
    /// States at `times`.
    pub snapshots: Vec<SpinorField<T>>,
    /// Final state.
    pub final_state: SpinorField<T>,
    /// `max_t |‖ψ(t)‖ − ‖ψ₀‖| / ‖ψ₀‖` over all steps.
    pub norm_drift: T,
    /// Steps taken.
    pub steps: usize,
}

/// Relative distance of a field from the admissible subspace of `op`.
pub fn admissibility_defect<T: Real>(op: &ChannelOperator<T>, psi: &SpinorField<T>) -> T {
    let nrm = psi.norm();
    if nrm == T::zero() {
        return T::zero();
    }
    op.project_admissible(psi).sub(psi).norm() / nrm
}

fn check_admissible<T: Real>(op: &ChannelOperator<T>, psi: &SpinorField<T>) -> Result<()> {
    if !Arc::ptr_eq(op.grid(), psi.grid()) && **op.grid() != **psi.grid() {
        return Err(Error::Validation(
            "initial state lives on a different grid".into(),
        ));
    }
    let d = admissibility_defect(op, psi);
    if d > T::lit(1e-8) {
        return Err(Error::Validation(format!(
            "initial state violates the boundary conditions (relative defect {d})"
        )));
    }
    Ok(())
}

/// Evolves `ψ₀` by `e^{−itH}` up to `cfg.t_final` with the Cayley scheme.
pub fn evolve<T: Real>(
    op: &ChannelOperator<T>,
    psi0: &SpinorField<T>,
    cfg: &EvolutionConfig,
) -> Result<Trajectory<T>> {
    evolve_signed(op, psi0, cfg, false)
}

/// Evolves `ψ₀` by `e^{+itH}` (backwards in time) up to `cfg.t_final`.
pub fn evolve_backward<T: Real>(
    op: &ChannelOperator<T>,
    psi0: &SpinorField<T>,
    cfg: &EvolutionConfig,
) -> Result<Trajectory<T>> {
    evolve_signed(op, psi0, cfg, true)
}

fn evolve_signed<T: Real>(
    op: &ChannelOperator<T>,
    psi0: &SpinorField<T>,
    cfg: &EvolutionConfig,
    backward: bool,
) -> Result<Trajectory<T>> {
    cfg.validate(op.grid())?;
    check_admissible(op, psi0)?;
    let sign = if backward { -1.0 } else { 1.0 };
    let tol = T::lit(cfg.solver_tolerance);
    // Segment ends: snapshot times and the final time, each reached exactly by
    // taking ⌈Δt/dt⌉ equal steps.
    let mut marks: Vec<f64> = cfg.snapshots.iter().map(|&t| t.min(cfg.t_final)).collect();
    marks.push(cfg.t_final);
    marks.sort_by(|a, b| a.partial_cmp(b).expect("finite times"));
    marks.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * cfg.t_final.max(1.0));
    let mut y = op.to_reduced(psi0);
    let n0 = norm(&y);
    let mut drift = T::zero();
    let mut times = Vec::with_capacity(marks.len());
    let mut snapshots = Vec::with_capacity(marks.len());
    let mut cache: Option<(u64, CayleyPropagator<T>)> = None;
    let mut steps = 0;
    let mut t = 0.0;
    let is_snapshot = |m: f64| {
        cfg.snapshots
            .iter()
            .any(|&s| (s - m).abs() <= 1e-12 * cfg.t_final.max(1.0))
    };
    for &mark in &marks {
        let span = mark - t;
        if span > 0.0 {
            let n = ((span / cfg.dt) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
            let dt = span / n as f64;
            if cache.as_ref().map(|(bits, _)| *bits) != Some(dt.to_bits()) {
                cache = Some((
                    dt.to_bits(),
                    CayleyPropagator::new(op, T::lit(sign * dt), tol)?,
                ));
            }
            let prop = &cache.as_ref().expect("propagator cached").1;
            for _ in 0..n {
                prop.step(&mut y)?;
                if n0 > T::zero() {
                    drift = drift.max((norm(&y) - n0).abs() / n0);
                }
            }
            steps += n;
            t = mark;
        }
        if is_snapshot(mark) {
            times.push(T::lit(mark));
            snapshots.push(op.from_reduced(&y));
        }
    }
    Ok(Trajectory {
        times,
        snapshots,
        final_state: op.from_reduced(&y),
        norm_drift: drift,
        steps,
    })
}

/// The comparison operator `H_c = Γ¹D_x` with the reflecting (MIT) coupling at
/// `x = 0`, realised on an on-boundary grid with the same discretisation as
/// the channel operators.
pub fn free_generator<T: Real>(
    ch: Channel,
    p: &Params<T>,
    grid: Arc<Grid<T>>,
) -> Result<ChannelOperator<T>> {
    assemble_with_bc(ch, p, grid, &PotentialPair::zero(), BoundaryCondition::Mit)
}

/// Direction of the exact comparison propagator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// `e^{−itH_c}`.
    Forward,
    /// `e^{+itH_c}`.
    Backward,
}

/// Exact solution of the comparison dynamics by characteristics.
///
/// With `τ = t` for `e^{itH_c}` and `τ = −t` for `e^{−itH_c}`:
/// `ψ₁(x) = ψ₁⁰(x+τ)` or `−ψ₃⁰(−x−τ)`, `ψ₂(x) = ψ₂⁰(x−τ)` or `ψ₄⁰(τ−x)`,
/// `ψ₃(x) = ψ₃⁰(x−τ)` or `−ψ₁⁰(τ−x)`, `ψ₄(x) = ψ₄⁰(x+τ)` or `ψ₂⁰(−x−τ)`, the second
/// alternative applying when the shifted argument is non-negative (the wave has
/// been reflected at `x = 0`). Values between nodes come from local cubic
/// interpolation; the field vanishes left of the first node.
pub fn free_propagate<T: Real>(
    psi0: &SpinorField<T>,
    t: T,
    direction: Direction,
) -> SpinorField<T> {
    let tau = match direction {
        Direction::Backward => t,
        Direction::Forward => -t,
    };
    let grid = psi0.grid().clone();
    let comps: Vec<Vec<Cx<T>>> = (0..4).map(|k| psi0.component(k)).collect();
    let at = |k: usize, x: T| grid.interpolate(&comps[k], x);
    let zero = T::zero();
    SpinorField::from_fn(grid.clone(), |x| {
        let plus = x + tau;
        let minus = x - tau;
        let v1 = if plus < zero {
            at(0, plus)
        } else {
            -at(2, -plus)
        };
        let v2 = if minus < zero {
            at(1, minus)
        } else {
            at(3, -minus)
        };
        let v3 = if minus < zero {
            at(2, minus)
        } else {
            -at(0, -minus)
        };
        let v4 = if plus < zero {
            at(3, plus)
        } else {
            at(1, -plus)
        };
        [v1, v2, v3, v4]
    })
}

/// Boundary values of a field and its distance from the MIT condition.
#[derive(Debug, Clone, Serialize)]
pub struct BoundaryTrace {
    /// `ψ(0⁻)` extrapolated linearly (Richardson) from the last two nodes, as `(re, im)` pairs.
    pub values: [(f64, f64); 4],
    /// `‖(γ¹ + i)ψ(0⁻)‖`.
    pub mit_residual: f64,
    /// `‖(γ¹ + i)ψ(x_last)‖·(−x_last)^{−1/2}` (the `o(√−x)` test); `None` when the last node is at `0`.
    pub scaled_residual: Option<f64>,
}

/// Extrapolated boundary values and MIT residuals of `ψ`.
pub fn boundary_trace<T: Real>(psi: &SpinorField<T>) -> BoundaryTrace {
    let alg = algebra::<T>();
    let m = alg.gamma[1].clone() + crate::linalg::Mat4::identity().scale(&cx(T::zero(), T::one()));
    let nodes = psi.grid().nodes();
    let vals = psi.values();
    let n = nodes.len();
    let (x1, x0) = (nodes[n - 1], nodes[n - 2]);
    let (v1, v0) = (vals[n - 1], vals[n - 2]);
    let boundary: [Cx<T>; 4] = if x1 == T::zero() {
        v1
    } else {
        let s = -x1 / (x1 - x0);
        std::array::from_fn(|k| v1[k] + (v1[k] - v0[k]) * s)
    };
    let resid = |v: &[Cx<T>; 4]| {
        let w = m.apply(v);
        w.iter().fold(T::zero(), |a, z| a + z.norm_sqr()).sqrt()
    };
    let scaled_residual = if x1 < T::zero() {
        Some((resid(&v1) / (-x1).sqrt()).to_f64_lossy())
    } else {
        None
    };
    BoundaryTrace {
        values: std::array::from_fn(|k| {
            (boundary[k].re.to_f64_lossy(), boundary[k].im.to_f64_lossy())
        }),
        mit_residual: resid(&boundary).to_f64_lossy(),
        scaled_residual,
    }
}

/// `L²` distance between two fields on the same grid.
pub fn l2_distance<T: Real>(a: &SpinorField<T>, b: &SpinorField<T>) -> T {
    a.sub(b).norm()
}

/// A smooth bump `exp(1 − 1/(1 − u²))`, `u = (x − centre)/half_width`, carried by
/// one component with a plane-wave phase `e^{ikx}`.
pub fn bump_state<T: Real>(
    grid: Arc<Grid<T>>,
    component: usize,
    centre: T,
    half_width: T,
    wavenumber: T,
) -> SpinorField<T> {
    SpinorField::from_fn(grid, |x| {
        let mut v = [czero(); 4];
        let u = (x - centre) / half_width;
        if u.abs() < T::one() {
            let amp = (T::one() - T::one() / (T::one() - u * u)).exp();
            v[component] = cx((wavenumber * x).cos(), (wavenumber * x).sin()) * amp;
        }
        v
    })
}
