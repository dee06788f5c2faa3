//! Wave operators, propagation (velocity) estimates and the asymptotic
//! velocity.
//!
//! The free factor of every wave-operator composition is the exact comparison
//! propagator; only the interacting factor is discretised (and not even that
//! when the potentials vanish, since the operator then is the comparison one).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{conjugate_apply, Channel, ChannelOperator};
use crate::dynamics::{evolve, evolve_backward, free_propagate, Direction, EvolutionConfig};
use crate::error::{Error, Result};
use crate::grid::SpinorField;

/// Geometric snapshot schedule `t_k = t₀·2^k`, `k = 0..count`.
pub fn geometric_schedule(t0: f64, count: usize) -> Vec<f64> {
    (0..count).map(|k| t0 * 2f64.powi(k as i32)).collect()
}

fn check_schedule(times: &[f64]) -> Result<()> {
    if times.len() < 2 {
        return Err(Error::Configuration(
            "a schedule needs at least two times".into(),
        ));
    }
    if times.iter().any(|t| !(*t > 0.0) || !t.is_finite())
        || times.windows(2).any(|w| !(w[1] > w[0]))
    {
        return Err(Error::Configuration(format!(
            "schedule must be positive and increasing: {times:?}"
        )));
    }
    Ok(())
}

/// Outcome of a wave-operator computation.
#[derive(Debug, Clone, Serialize)]
pub struct ScatteringReport {
    /// Channel of the interacting operator.
    pub channel: Channel,
    /// `(M, l, m)`.
    pub params: (f64, f64, f64),
    /// Snapshot times `t_k`.
    pub times: Vec<f64>,
    /// Cauchy increments `‖Ω_{t_k}φ − Ω_{t_{k+1}}φ‖`.
    pub increments: Vec<f64>,
    /// `‖φ‖`.
    pub initial_norm: f64,
    /// `‖Ω_{t_k}φ‖` for every `k`.
    pub limit_norms: Vec<f64>,
    /// Largest relative norm drift of the discrete evolution.
    pub norm_drift: f64,
    /// Last three increments strictly decreasing.
    pub monotone_tail: bool,
    /// Monotone tail and final increment `≤ 1e−2·‖φ‖`.
    pub converged: bool,
    /// `|⟨Ωφ, ψ⟩ − ⟨φ, Wψ⟩|/(‖φ‖‖ψ‖)`, when a pairing was computed.
    pub adjoint_residual: Option<f64>,
    /// `(τ, ‖e^{−iτH_c}Ωφ − Ωe^{−iτH}φ‖)` at the final snapshot, when computed.
    pub intertwining: Vec<(f64, f64)>,
    /// `⟨𝒜/t⟩` of `e^{−itH}φ` at every `t_k` (forward wave operator only).
    pub velocities: Vec<f64>,
    /// Extrapolation of `velocities` in `1/t` (forward wave operator only).
    pub v_extrapolated: Option<f64>,
    /// Limit estimate `Ω_{t_K}φ` (not serialised).
    #[serde(skip)]
    pub limit: Option<SpinorField<f64>>,
}

impl ScatteringReport {
    /// Final Cauchy increment.
    pub fn final_increment(&self) -> f64 {
        *self.increments.last().expect("at least one increment")
    }

    /// `|‖Ωφ‖ − ‖φ‖|`.
    pub fn isometry_defect(&self) -> f64 {
        (self.limit_norms.last().expect("non-empty") - self.initial_norm).abs()
    }
}

/// Convergence verdict shared by all reports: the last three increments
/// decrease and the final one is at most `1e−2·‖φ‖`.
pub fn convergence_verdict(increments: &[f64], norm: f64) -> (bool, bool) {
    let tail = &increments[increments.len().saturating_sub(3)..];
    let monotone = tail.len() >= 2 && tail.windows(2).all(|w| w[1] < w[0]);
    let small = increments.last().is_some_and(|&c| c <= 1e-2 * norm);
    (monotone, monotone && small)
}

fn build_report(
    op: &ChannelOperator<f64>,
    times: &[f64],
    limits: &[SpinorField<f64>],
    norm0: f64,
    drift: f64,
) -> ScatteringReport {
    let increments: Vec<f64> = limits.windows(2).map(|w| w[0].sub(&w[1]).norm()).collect();
    let (monotone_tail, converged) = convergence_verdict(&increments, norm0);
    let p = op.params();
    ScatteringReport {
        channel: op.channel(),
        params: (p.mass, p.ads_length, p.field_mass),
        times: times.to_vec(),
        limit_norms: limits.iter().map(|f| f.norm()).collect(),
        increments,
        initial_norm: norm0,
        norm_drift: drift,
        monotone_tail,
        converged,
        adjoint_residual: None,
        intertwining: Vec::new(),
        velocities: Vec::new(),
        v_extrapolated: None,
        limit: limits.last().cloned(),
    }
}

/// `Ωφ = lim e^{itH_c}e^{−itH}φ` along the schedule.
///
/// `intertwining_shifts` lists `τ` values for the finite-time intertwining
/// check at the last snapshot (the evolution is extended to `t_K + τ`).
pub fn wave_operator_forward(
    phi: &SpinorField<f64>,
    op: &ChannelOperator<f64>,
    times: &[f64],
    dt: f64,
    intertwining_shifts: &[f64],
) -> Result<ScatteringReport> {
    check_schedule(times)?;
    let t_last = *times.last().expect("checked");
    let extra: Vec<f64> = intertwining_shifts.iter().map(|tau| t_last + tau).collect();
    let all: Vec<f64> = times.iter().chain(&extra).cloned().collect();
    let (states, drift) = interacting_states(op, phi, &all, dt)?;
    let limits: Vec<SpinorField<f64>> = times
        .iter()
        .zip(&states)
        .map(|(&t, s)| free_propagate(s, t, Direction::Backward))
        .collect();
    let mut report = build_report(op, times, &limits, phi.norm(), drift);
    report.velocities = states
        .iter()
        .zip(times)
        .map(|(s, &t)| velocity_expectation(s, t))
        .collect();
    report.v_extrapolated = Some(extrapolate_in_inverse_time(times, &report.velocities));
    let omega = limits.last().expect("non-empty");
    for (&tau, shifted) in intertwining_shifts.iter().zip(&states[times.len()..]) {
        let lhs = free_propagate(omega, tau, Direction::Forward);
        let rhs = free_propagate(shifted, t_last, Direction::Backward);
        report.intertwining.push((tau, lhs.sub(&rhs).norm()));
    }
    Ok(report)
}

/// `Wψ = lim e^{itH}e^{−itH_c}ψ` along the schedule.
pub fn wave_operator_backward(
    psi: &SpinorField<f64>,
    op: &ChannelOperator<f64>,
    times: &[f64],
    dt: f64,
) -> Result<ScatteringReport> {
    check_schedule(times)?;
    let runs: Vec<(SpinorField<f64>, f64)> = times
        .par_iter()
        .map(|&t| {
            let free = free_propagate(psi, t, Direction::Forward);
            let admissible = op.project_admissible(&free);
            if op.potentials().is_zero() {
                return Ok((free_propagate(&admissible, t, Direction::Backward), 0.0));
            }
            let traj = evolve_backward(op, &admissible, &EvolutionConfig::new(dt, t))?;
            Ok((traj.final_state, traj.norm_drift))
        })
        .collect::<Result<Vec<_>>>()?;
    let drift = runs.iter().map(|r| r.1).fold(0.0, f64::max);
    let limits: Vec<SpinorField<f64>> = runs.into_iter().map(|r| r.0).collect();
    Ok(build_report(op, times, &limits, psi.norm(), drift))
}

/// Both wave operators and the pairing residual `|⟨Ωφ, ψ⟩ − ⟨φ, Wψ⟩|/(‖φ‖‖ψ‖)`.
pub fn adjoint_pairing(
    phi: &SpinorField<f64>,
    psi: &SpinorField<f64>,
    op: &ChannelOperator<f64>,
    times: &[f64],
    dt: f64,
) -> Result<(ScatteringReport, ScatteringReport)> {
    let (forward, backward) = rayon::join(
        || wave_operator_forward(phi, op, times, dt, &[1.0, 2.0]),
        || wave_operator_backward(psi, op, times, dt),
    );
    let (mut forward, mut backward) = (forward?, backward?);
    let omega_phi = forward.limit.as_ref().expect("limit kept");
    let w_psi = backward.limit.as_ref().expect("limit kept");
    let r = (omega_phi.inner(psi) - phi.inner(w_psi)).norm() / (phi.norm() * psi.norm());
    forward.adjoint_residual = Some(r);
    backward.adjoint_residual = Some(r);
    Ok((forward, backward))
}

/// Quintic smoothstep: `0` for `u ≤ 0`, `1` for `u ≥ 1`, `C²` in between.
pub fn smoothstep(u: f64) -> f64 {
    let u = u.clamp(0.0, 1.0);
    u * u * u * (10.0 - 15.0 * u + 6.0 * u * u)
}

/// Cutoff functions `J` applied to `𝒜/t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Cutoff {
    /// `J ≡ 1`.
    One,
    /// Minimal-velocity cutoff: `1` below `1 − 2δ`, `0` from `1 − δ` on
    /// (support in `(−∞, 1 − δ)`).
    MinimalVelocity {
        /// Gap `δ` below velocity one.
        delta: f64,
    },
    /// Maximal-velocity cutoff: `0` up to `1 + ε`, `1` from `1 + 2ε` on
    /// (support in `(1 + ε, ∞)`).
    MaximalVelocity {
        /// Gap `ε` above velocity one.
        epsilon: f64,
    },
    /// Indicator of the velocity band `[1 − δ, 1 + δ]`.
    Band {
        /// Half-width of the band.
        delta: f64,
    },
}

impl Cutoff {
    /// `J(s)`.
    pub fn eval(&self, s: f64) -> f64 {
        match *self {
            Cutoff::One => 1.0,
            Cutoff::MinimalVelocity { delta } => {
                1.0 - smoothstep((s - (1.0 - 2.0 * delta)) / delta)
            }
            Cutoff::MaximalVelocity { epsilon } => smoothstep((s - (1.0 + epsilon)) / epsilon),
            Cutoff::Band { delta } => {
                if (1.0 - delta..=1.0 + delta).contains(&s) {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// `sup |J|`.
    pub fn sup(&self) -> f64 {
        1.0
    }
}

/// `⟨ψ, J(𝒜/t)ψ⟩/‖ψ‖²`, with `𝒜 = Γ¹x` acting pointwise.
pub fn cutoff_expectation(psi: &SpinorField<f64>, j: Cutoff, t: f64) -> f64 {
    let signs = [1.0, -1.0, -1.0, 1.0];
    let w = psi.grid().weights();
    let mut acc = 0.0;
    for ((v, &x), &wi) in psi.values().iter().zip(psi.grid().nodes()).zip(w) {
        for k in 0..4 {
            acc += wi * v[k].norm_sqr() * j.eval(signs[k] * x / t);
        }
    }
    acc / psi.norm_sqr()
}

/// `⟨ψ, (𝒜/t)ψ⟩/‖ψ‖²`.
pub fn velocity_expectation(psi: &SpinorField<f64>, t: f64) -> f64 {
    psi.inner(&conjugate_apply(psi)).re / (t * psi.norm_sqr())
}

/// Which dynamics a diagnostic follows.
#[derive(Debug, Clone, Copy)]
pub enum Dynamics<'a> {
    /// Discrete evolution under a channel operator with time step `dt`.
    Interacting(&'a ChannelOperator<f64>, f64),
    /// Exact comparison dynamics.
    Free,
}

fn states_at(
    phi: &SpinorField<f64>,
    dynamics: Dynamics<'_>,
    times: &[f64],
) -> Result<Vec<SpinorField<f64>>> {
    match dynamics {
        Dynamics::Free => Ok(times
            .iter()
            .map(|&t| free_propagate(phi, t, Direction::Forward))
            .collect()),
        Dynamics::Interacting(op, dt) => Ok(interacting_states(op, phi, times, dt)?.0),
    }
}

/// `e^{−itH}φ` at each of `times` with the largest norm drift.
///
/// With zero potentials `H` is the comparison operator, whose group is known in
/// closed form; it is used instead of the discrete evolution so that every
/// scattering quantity reduces exactly to its identity value.
fn interacting_states(
    op: &ChannelOperator<f64>,
    phi: &SpinorField<f64>,
    times: &[f64],
    dt: f64,
) -> Result<(Vec<SpinorField<f64>>, f64)> {
    if op.potentials().is_zero() {
        let states = times
            .iter()
            .map(|&t| free_propagate(phi, t, Direction::Forward))
            .collect();
        return Ok((states, 0.0));
    }
    let t_final = times.iter().cloned().fold(0.0, f64::max);
    let traj = evolve(
        op,
        phi,
        &EvolutionConfig::new(dt, t_final).with_snapshots(times.iter().cloned()),
    )?;
    let states = times
        .iter()
        .map(|&t| {
            let k = traj
                .times
                .iter()
                .position(|&s| (s - t).abs() <= 1e-9 * t.max(1.0))
                .expect("snapshot recorded");
            traj.snapshots[k].clone()
        })
        .collect();
    Ok((states, traj.norm_drift))
}

/// Expectations of velocity cutoffs along a trajectory.
#[derive(Debug, Clone, Serialize)]
pub struct VelocityTrace {
    /// Cutoff applied.
    pub cutoff: Cutoff,
    /// Sample times.
    pub times: Vec<f64>,
    /// `⟨ψ(t), J(𝒜/t)ψ(t)⟩/‖ψ‖²`.
    pub expectations: Vec<f64>,
    /// Mass fraction with `𝒜/t ∈ [0.75, 1.25]`.
    pub band_fractions: Vec<f64>,
}

impl VelocityTrace {
    /// Final expectation.
    pub fn final_value(&self) -> f64 {
        *self.expectations.last().expect("non-empty")
    }
}

/// Velocity-cutoff trace of `φ` at positive `times`.
pub fn velocity_trace(
    phi: &SpinorField<f64>,
    dynamics: Dynamics<'_>,
    j: Cutoff,
    times: &[f64],
) -> Result<VelocityTrace> {
    if times.iter().any(|t| !(*t > 0.0)) {
        return Err(Error::Configuration(
            "velocity traces need positive times".into(),
        ));
    }
    let states = states_at(phi, dynamics, times)?;
    Ok(VelocityTrace {
        cutoff: j,
        times: times.to_vec(),
        expectations: states
            .iter()
            .zip(times)
            .map(|(s, &t)| cutoff_expectation(s, j, t))
            .collect(),
        band_fractions: states
            .iter()
            .zip(times)
            .map(|(s, &t)| cutoff_expectation(s, Cutoff::Band { delta: 0.25 }, t))
            .collect(),
    })
}

/// `v(t) = ⟨𝒜/t⟩` and its Richardson extrapolation in `1/t`.
#[derive(Debug, Clone, Serialize)]
pub struct AsymptoticVelocity {
    /// Sample times.
    pub times: Vec<f64>,
    /// `v(t)` at the sample times.
    pub values: Vec<f64>,
    /// `(t₂v(t₂) − t₁v(t₁))/(t₂ − t₁)` from the last two samples.
    pub extrapolated: f64,
}

/// Asymptotic velocity estimate along `times` (at least two, increasing).
pub fn asymptotic_velocity(
    phi: &SpinorField<f64>,
    dynamics: Dynamics<'_>,
    times: &[f64],
) -> Result<AsymptoticVelocity> {
    check_schedule(times)?;
    let states = states_at(phi, dynamics, times)?;
    let values: Vec<f64> = states
        .iter()
        .zip(times)
        .map(|(s, &t)| velocity_expectation(s, t))
        .collect();
    Ok(AsymptoticVelocity {
        times: times.to_vec(),
        extrapolated: extrapolate_in_inverse_time(times, &values),
        values,
    })
}

/// Two-point Richardson extrapolation `v(∞)` of `v(t) = v(∞) + c/t` from the
/// last two samples.
fn extrapolate_in_inverse_time(times: &[f64], values: &[f64]) -> f64 {
    let n = times.len();
    let (t1, t2) = (times[n - 2], times[n - 1]);
    (t2 * values[n - 1] - t1 * values[n - 2]) / (t2 - t1)
}

/// Channel-summed wave-operator report.
#[derive(Debug, Clone, Serialize)]
pub struct MultichannelReport {
    /// Per-channel reports, in input order.
    pub channels: Vec<ScatteringReport>,
    /// Channel weights.
    pub weights: Vec<f64>,
    /// `(Σ w_c² c_{k,c}²)^{1/2}`.
    pub aggregate_increments: Vec<f64>,
    /// Every channel converged.
    pub converged: bool,
}

/// Computes `Ω` channel by channel (in parallel) for `φ = Σ w_c φ_c` with every
/// `φ_c` the same profile, and aggregates the increments.
pub fn multichannel_scatter(
    phi: &SpinorField<f64>,
    operators: &[ChannelOperator<f64>],
    weights: &[f64],
    times: &[f64],
    dt: f64,
) -> Result<MultichannelReport> {
    if operators.is_empty() || operators.len() != weights.len() {
        return Err(Error::Configuration(
            "one weight per channel operator is required".into(),
        ));
    }
    if weights.iter().any(|w| !w.is_finite()) {
        return Err(Error::Configuration(
            "channel weights must be finite".into(),
        ));
    }
    let channels = operators
        .par_iter()
        .map(|op| wave_operator_forward(phi, op, times, dt, &[]))
        .collect::<Result<Vec<_>>>()?;
    let k = channels[0].increments.len();
    let aggregate_increments = (0..k)
        .map(|i| {
            channels
                .iter()
                .zip(weights)
                .map(|(r, w)| (w * r.increments[i]).powi(2))
                .sum::<f64>()
                .sqrt()
        })
        .collect();
    let converged = channels.iter().all(|r| r.converged);
    Ok(MultichannelReport {
        channels,
        weights: weights.to_vec(),
        aggregate_increments,
        converged,
    })
}
