//! Experiment configuration, orchestration and deterministic report emission.
//!
//! A run is described by an [`ExperimentConfig`] (JSON, strict keys) and
//! produces, per experiment, CSV traces and JSON reports under the output
//! directory together with a `manifest.json`. Every number written comes from
//! a module operation; this module only wires operations together, records
//! their outputs and turns them into pass/fail checks.
//!
//! Numeric outputs are byte-reproducible: solvers are deterministic, random
//! test fields use the configured seed, parallel results are collected in
//! input order and wall-clock times appear only in the manifest.

use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Instant;

use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::algebra::DiracAlgebra;
use crate::channel::{
    assemble_hamiltonian, validate_channel, BoundaryCondition, Channel, ChannelOperator,
    PotentialPair,
};
use crate::dynamics::{
    boundary_trace, bump_state, evolve, free_generator, free_propagate, l2_distance, BoundaryTrace,
    Direction, EvolutionConfig,
};
use crate::error::{Error, Result};
use crate::geometry::{
    expansion_residuals, metric_factor, tortoise, CoordinateMap, Params, Regime, ResidualTable,
    Side,
};
use crate::grid::{make_grid, Endpoint, Grid, SpacingPolicy, SpinorField};
use crate::ode::{dormand_prince, OdeOptions};
use crate::scalar::{cx, Cx};
use crate::scattering::{
    adjoint_pairing, asymptotic_velocity, geometric_schedule, multichannel_scatter, velocity_trace,
    wave_operator_forward, AsymptoticVelocity, Cutoff, Dynamics, MultichannelReport,
    ScatteringReport, VelocityTrace,
};
use crate::spectral::{
    boundary_exponent_fit, eigendecompose, mourre_check, mourre_refinement, mourre_shrink,
    no_eigenvalue_test, ExponentFit, FitStatus, MourreRefinement, MourreReport, MourreVerdict,
    NoEigenvalueOptions, NoEigenvalueReport, EIGEN_TOLERANCE, MAX_DENSE_DIMENSION,
};

/// Selectable experiments, in execution and report order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    /// Horizon, tortoise coordinate and coordinate maps.
    Geometry,
    /// Exact Dirac-algebra identities.
    Algebra,
    /// Unitary evolution and the free-propagator oracle.
    Evolve,
    /// Wave operators, adjoint pairing and the trivial-potential oracle.
    Scatter,
    /// Velocity cutoffs and the asymptotic velocity.
    Velocity,
    /// Mourre positivity of the commutator.
    Mourre,
    /// Eigen-decomposition and absence of eigenvalues.
    Spectrum,
    /// Boundary exponents of resolvent probes.
    DomainExponent,
}

impl Experiment {
    /// Every experiment, in execution order.
    pub const ALL: [Experiment; 8] = [
        Experiment::Geometry,
        Experiment::Algebra,
        Experiment::Evolve,
        Experiment::Scatter,
        Experiment::Velocity,
        Experiment::Mourre,
        Experiment::Spectrum,
        Experiment::DomainExponent,
    ];

    /// Name used in configs, on the command line and as output directory.
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Geometry => "geometry",
            Experiment::Algebra => "algebra",
            Experiment::Evolve => "evolve",
            Experiment::Scatter => "scatter",
            Experiment::Velocity => "velocity",
            Experiment::Mourre => "mourre",
            Experiment::Spectrum => "spectrum",
            Experiment::DomainExponent => "domain-exponent",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Options of the geometry experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometryOptions {
    /// Radii sampled for the `(r, F, r_*, x)` table (geometric in `r − r_SAdS`).
    pub samples: usize,
    /// Smallest sampled `(r − r_SAdS)/r_SAdS`.
    pub min_relative_gap: f64,
    /// Largest sampled radius in units of `l`.
    pub max_radius: f64,
}

impl Default for GeometryOptions {
    fn default() -> Self {
        Self {
            samples: 200,
            min_relative_gap: 1e-6,
            max_radius: 1e3,
        }
    }
}

/// Options of the evolution experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolveOptions {
    /// Left end of the uniform grid.
    pub x_min: f64,
    /// Number of nodes.
    pub n: usize,
    /// Time step (`null`: half the grid spacing).
    pub dt: Option<f64>,
    /// Final time.
    pub t_final: f64,
    /// Snapshot times written to the trajectory CSV.
    pub snapshots: Vec<f64>,
    /// Centre of the initial bump.
    pub centre: f64,
    /// Half-width of the initial bump.
    pub half_width: f64,
    /// Left end of the grids of the free-propagator study.
    pub free_x_min: f64,
    /// Centre of the free-study bump.
    pub free_centre: f64,
    /// Half-width of the free-study bump.
    pub free_half_width: f64,
    /// Node counts of the free-propagator refinement study.
    pub free_levels: Vec<usize>,
    /// Final time of the free-propagator study.
    pub free_t: f64,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self {
            x_min: -20.0,
            n: 2048,
            dt: None,
            t_final: 10.0,
            snapshots: vec![2.5, 5.0, 10.0],
            centre: -1.5,
            half_width: 1.0,
            free_x_min: -8.0,
            free_centre: -2.5,
            free_half_width: 1.5,
            free_levels: vec![1024, 2048, 4096],
            free_t: 4.0,
        }
    }
}

/// Grid and schedule of one wave-operator run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScatterSetup {
    /// Left end of the uniform grid.
    pub x_min: f64,
    /// Number of nodes.
    pub n: usize,
    /// Time step.
    pub dt: f64,
    /// First snapshot time.
    pub t0: f64,
    /// Number of snapshots `t₀·2^k`.
    pub count: usize,
}

/// Options of the scattering experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScatterOptions {
    /// Setup for `2ml > 1`.
    pub supercritical: ScatterSetup,
    /// Setup for `2ml < 1` (slower ringing, longer schedule, finer grid).
    pub subcritical: ScatterSetup,
    /// Centre of the scattering states.
    pub centre: f64,
    /// Half-width of the scattering states.
    pub half_width: f64,
}

impl Default for ScatterOptions {
    fn default() -> Self {
        Self {
            supercritical: ScatterSetup {
                x_min: -45.0,
                n: 4500,
                dt: 0.005,
                t0: 4.0,
                count: 4,
            },
            subcritical: ScatterSetup {
                x_min: -80.0,
                n: 8000,
                dt: 0.005,
                t0: 4.0,
                count: 5,
            },
            centre: -4.5,
            half_width: 3.0,
        }
    }
}

impl ScatterOptions {
    /// Setup used for a regime (`None` at `2ml = 1`).
    pub fn setup(&self, regime: Regime) -> Option<&ScatterSetup> {
        match regime {
            Regime::Supercritical => Some(&self.supercritical),
            Regime::Subcritical => Some(&self.subcritical),
            Regime::Critical => None,
        }
    }
}

/// Options of the velocity experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VelocityOptions {
    /// Left end of the cutoff-trace grid.
    pub x_min: f64,
    /// Nodes of the cutoff-trace grid.
    pub n: usize,
    /// Time step of the cutoff traces.
    pub dt: f64,
    /// Sample times of the cutoff traces.
    pub times: Vec<f64>,
    /// Gap `δ` of the minimal-velocity cutoff.
    pub delta: f64,
    /// Gap `ε` of the maximal-velocity cutoff.
    pub epsilon: f64,
    /// Centre of the initial state.
    pub centre: f64,
    /// Half-width of the initial state.
    pub half_width: f64,
    /// Left end of the interacting asymptotic-velocity grid.
    pub asymptotic_x_min: f64,
    /// Nodes of the interacting asymptotic-velocity grid.
    pub asymptotic_n: usize,
    /// Time step of the interacting asymptotic-velocity runs.
    pub asymptotic_dt: f64,
    /// Sample times of the interacting asymptotic velocity.
    pub asymptotic_times: Vec<f64>,
    /// Left end of the free asymptotic-velocity grid.
    pub free_x_min: f64,
    /// Nodes of the free asymptotic-velocity grid.
    pub free_n: usize,
    /// Sample times of the free asymptotic velocity.
    pub free_times: Vec<f64>,
}

impl Default for VelocityOptions {
    fn default() -> Self {
        Self {
            x_min: -30.0,
            n: 3000,
            dt: 0.005,
            times: vec![5.0, 10.0, 20.0],
            delta: 0.2,
            epsilon: 0.2,
            centre: -1.5,
            half_width: 1.0,
            asymptotic_x_min: -60.0,
            asymptotic_n: 3000,
            asymptotic_dt: 0.01,
            asymptotic_times: vec![10.0, 20.0, 40.0],
            free_x_min: -100.0,
            free_n: 5000,
            free_times: vec![20.0, 40.0, 80.0],
        }
    }
}

/// Options of the Mourre experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MourreOptions {
    /// Left end of the grids.
    pub x_min: f64,
    /// Nodes of the coarse grid (the refined grid has twice as many).
    pub n: usize,
    /// Spectral window.
    pub interval: (f64, f64),
    /// Allowed deficit `ε`.
    pub epsilon: f64,
    /// Half-widths of the nested windows of the shrink study (about the window centre).
    pub shrink_half_widths: Vec<f64>,
    /// Left end of the grid of the free check.
    pub free_x_min: f64,
    /// Nodes of the grid of the free check.
    pub free_n: usize,
}

impl Default for MourreOptions {
    fn default() -> Self {
        Self {
            x_min: -20.0,
            n: 1024,
            interval: (0.5, 1.5),
            epsilon: 0.5,
            shrink_half_widths: vec![0.5, 0.35, 0.25],
            free_x_min: -10.0,
            free_n: 512,
        }
    }
}

/// Options of the spectrum experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumOptions {
    /// Left end of the grid of the full decompositions.
    pub x_min: f64,
    /// Nodes of the grid of the full decompositions.
    pub n: usize,
    /// Spectral parameters of the no-eigenvalue test.
    pub lambdas: Vec<f64>,
    /// Depth `X` of the no-eigenvalue test.
    pub depth: f64,
    /// Integrator and verdict settings of the no-eigenvalue test.
    pub no_eigenvalue: NoEigenvalueOptions,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        Self {
            x_min: -20.0,
            n: 256,
            lambdas: vec![-2.0, -1.0, 0.0, 1.0, 2.0],
            depth: 30.0,
            no_eigenvalue: NoEigenvalueOptions::default(),
        }
    }
}

/// Options of the boundary-exponent experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DomainExponentOptions {
    /// Left end of the boundary-graded grid.
    pub x_min: f64,
    /// Number of nodes.
    pub n: usize,
    /// Spacing growth factor away from the boundary.
    pub ratio: f64,
    /// Spacing at the boundary.
    pub h_min: f64,
    /// Resolvent shift `z` as `[re, im]`.
    pub z: (f64, f64),
    /// Centre of the data `f`.
    pub centre: f64,
    /// Half-width of the data `f`.
    pub half_width: f64,
}

impl Default for DomainExponentOptions {
    fn default() -> Self {
        Self {
            x_min: -20.0,
            n: 600,
            ratio: 1.1,
            h_min: 1e-5,
            z: (0.3, 1.0),
            centre: -5.0,
            half_width: 2.0,
        }
    }
}

/// Complete description of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Black-hole mass `M`.
    #[serde(rename = "M")]
    pub mass: f64,
    /// AdS length `l`.
    pub l: f64,
    /// Field mass `m`.
    pub m: f64,
    /// Harmonic channel `(s, n)`.
    #[serde(default = "default_channel")]
    pub channel: (f64, f64),
    /// Further channels for the multichannel scattering aggregate.
    #[serde(default)]
    pub extra_channels: Vec<(f64, f64)>,
    /// Further field masses for the per-regime checks (evolution, scattering,
    /// interacting asymptotic velocity, boundary exponents).
    #[serde(default)]
    pub extra_masses: Vec<f64>,
    /// Expected boundary condition for `m`; must agree with the regime of `2ml`.
    #[serde(default)]
    pub boundary: Option<BoundaryCondition>,
    /// Experiments to run.
    #[serde(default = "default_experiments")]
    pub experiments: Vec<Experiment>,
    /// Output directory.
    #[serde(default = "default_output")]
    pub output: PathBuf,
    /// Seed of randomised test fields.
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Geometry options.
    #[serde(default)]
    pub geometry: GeometryOptions,
    /// Evolution options.
    #[serde(default)]
    pub evolve: EvolveOptions,
    /// Scattering options.
    #[serde(default)]
    pub scatter: ScatterOptions,
    /// Velocity options.
    #[serde(default)]
    pub velocity: VelocityOptions,
    /// Mourre options.
    #[serde(default)]
    pub mourre: MourreOptions,
    /// Spectrum options.
    #[serde(default)]
    pub spectrum: SpectrumOptions,
    /// Boundary-exponent options.
    #[serde(default)]
    pub domain_exponent: DomainExponentOptions,
}

fn default_channel() -> (f64, f64) {
    (0.5, 0.5)
}

fn default_experiments() -> Vec<Experiment> {
    Experiment::ALL.to_vec()
}

fn default_output() -> PathBuf {
    PathBuf::from("adsdirac-out")
}

fn default_seed() -> u64 {
    0x5eed
}

impl ExperimentConfig {
    /// Config with the given parameters and every option at its default.
    pub fn new(mass: f64, l: f64, m: f64) -> Self {
        Self {
            mass,
            l,
            m,
            channel: default_channel(),
            extra_channels: Vec::new(),
            extra_masses: Vec::new(),
            boundary: None,
            experiments: default_experiments(),
            output: default_output(),
            seed: default_seed(),
            geometry: GeometryOptions::default(),
            evolve: EvolveOptions::default(),
            scatter: ScatterOptions::default(),
            velocity: VelocityOptions::default(),
            mourre: MourreOptions::default(),
            spectrum: SpectrumOptions::default(),
            domain_exponent: DomainExponentOptions::default(),
        }
    }

    /// Reference configuration: `M = l = 1`, `m = 1` (`2ml = 2`) with the
    /// subcritical comparison mass `m = 1/4` (`2ml = 1/2`).
    pub fn reference() -> Self {
        Self {
            extra_masses: vec![0.25],
            ..Self::new(1.0, 1.0, 1.0)
        }
    }

    /// Parameters of the primary field mass.
    pub fn params(&self) -> Result<Params<f64>> {
        Params::new(self.mass, self.l, self.m)
    }

    /// Parameters of the primary and every extra field mass.
    pub fn all_params(&self) -> Result<Vec<Params<f64>>> {
        std::iter::once(self.m)
            .chain(self.extra_masses.iter().copied())
            .map(|m| Params::new(self.mass, self.l, m))
            .collect()
    }

    /// Primary channel.
    pub fn primary_channel(&self) -> Result<Channel> {
        validate_channel(self.channel.0, self.channel.1)
    }

    /// Regime of the primary field mass.
    pub fn regime(&self) -> Result<Regime> {
        Ok(self.params()?.regime)
    }

    /// Checks every block against the preconditions of the operations it
    /// feeds, collecting all problems.
    pub fn validate(&self) -> std::result::Result<(), ConfigErrors> {
        let mut errs: Vec<Error> = Vec::new();
        let mut need = |ok: bool, msg: String| {
            if !ok {
                errs.push(Error::Configuration(msg));
            }
        };
        let mut grid = |what: &str, x_min: f64, n: usize, policy: SpacingPolicy| match make_grid(
            x_min,
            n,
            policy,
            Endpoint::Staggered,
        ) {
            Ok(g) => Some(g),
            Err(e) => {
                need(false, format!("{what}: {e}"));
                None
            }
        };
        let u = SpacingPolicy::Uniform;
        let o = &self.evolve;
        let s = &self.scatter;
        let v = &self.velocity;
        let mo = &self.mourre;
        let sp = &self.spectrum;
        let d = &self.domain_exponent;
        let h_evolve = grid("evolve grid", o.x_min, o.n, u);
        for &n in &o.free_levels {
            grid("evolve free-study grid", o.free_x_min, n, u);
        }
        let h_super = grid(
            "scatter supercritical grid",
            s.supercritical.x_min,
            s.supercritical.n,
            u,
        );
        let h_sub = grid(
            "scatter subcritical grid",
            s.subcritical.x_min,
            s.subcritical.n,
            u,
        );
        let h_velocity = grid("velocity grid", v.x_min, v.n, u);
        let h_asymptotic = grid(
            "velocity asymptotic grid",
            v.asymptotic_x_min,
            v.asymptotic_n,
            u,
        );
        grid("velocity free grid", v.free_x_min, v.free_n, u);
        grid("mourre grid", mo.x_min, mo.n, u);
        grid("mourre free grid", mo.free_x_min, mo.free_n, u);
        grid("spectrum grid", sp.x_min, sp.n, u);
        let graded = SpacingPolicy::BoundaryGraded {
            ratio: d.ratio,
            h_min: d.h_min,
        };
        grid("domain-exponent grid", d.x_min, d.n, graded);

        match self.params() {
            Ok(p) => {
                if let Some(bc) = self.boundary {
                    let expected = BoundaryCondition::for_regime(p.regime);
                    need(
                        bc == expected,
                        format!(
                            "boundary {bc:?} contradicts 2ml = {} ({:?} needs {expected:?})",
                            p.two_ml(),
                            p.regime
                        ),
                    );
                }
            }
            Err(e) => need(false, e.to_string()),
        }
        for &m in &self.extra_masses {
            if let Err(e) = Params::new(self.mass, self.l, m) {
                need(false, format!("extra mass: {e}"));
            }
        }
        for &(cs, cn) in std::iter::once(&self.channel).chain(&self.extra_channels) {
            if let Err(e) = validate_channel(cs, cn) {
                need(false, e.to_string());
            }
        }
        need(
            !self.experiments.is_empty(),
            "no experiments selected".into(),
        );
        need(
            self.geometry.samples >= 2
                && self.geometry.min_relative_gap > 0.0
                && self.geometry.max_radius > 0.0,
            "geometry: need ≥ 2 samples, a positive gap and a positive maximal radius".into(),
        );

        // Evolution.
        need(
            o.t_final > 0.0 && o.t_final.is_finite(),
            format!("evolve: t_final must be positive, got {}", o.t_final),
        );
        need(
            o.snapshots.iter().all(|&t| t > 0.0 && t <= o.t_final),
            format!("evolve: snapshots must lie in (0, {}]", o.t_final),
        );
        need(
            support_inside(o.centre, o.half_width),
            "evolve: initial bump must lie in x < 0".into(),
        );
        need(
            support_inside(o.free_centre, o.free_half_width),
            "evolve: free-study bump must lie in x < 0".into(),
        );
        if let (Some(g), Some(dt)) = (&h_evolve, o.dt) {
            let snaps = o.snapshots.iter().copied();
            step_ok(
                &mut need,
                "evolve",
                g,
                &EvolutionConfig::new(dt, o.t_final).with_snapshots(snaps),
            );
        }
        need(
            o.free_levels.len() >= 3,
            "evolve: the free-propagator study needs at least 3 levels".into(),
        );
        need(
            o.free_levels.windows(2).all(|w| w[1] == 2 * w[0]),
            "evolve: free-study levels must double".into(),
        );
        need(o.free_t > 0.0, "evolve: free_t must be positive".into());

        // Scattering: unit-speed transport must not reach the wall before the last time.
        for (name, setup, h) in [
            ("supercritical", s.supercritical, h_super),
            ("subcritical", s.subcritical, h_sub),
        ] {
            need(
                setup.count >= 4,
                format!("scatter {name}: at least 4 snapshots are needed for a 3-increment tail"),
            );
            need(
                setup.t0 > 0.0,
                format!("scatter {name}: t0 must be positive"),
            );
            if let Some(g) = &h {
                step_ok(
                    &mut need,
                    &format!("scatter {name}"),
                    g,
                    &EvolutionConfig::new(setup.dt, 1.0),
                );
            }
            let t_max = setup.t0 * 2f64.powi(setup.count.saturating_sub(1) as i32) + 2.0;
            need(
                setup.x_min <= s.centre - s.half_width - t_max,
                format!(
                    "scatter {name}: x_min = {} is reached by time {t_max}",
                    setup.x_min
                ),
            );
        }
        need(
            support_inside(s.centre, s.half_width),
            "scatter: states must lie in x < 0".into(),
        );

        // Velocity.
        for (name, times) in [
            ("times", &v.times),
            ("asymptotic_times", &v.asymptotic_times),
            ("free_times", &v.free_times),
        ] {
            need(
                times.len() >= 2 && times[0] > 0.0 && times.windows(2).all(|w| w[1] > w[0]),
                format!("velocity {name}: need ≥ 2 positive increasing times"),
            );
        }
        need(
            v.delta > 0.0 && v.delta < 0.5,
            "velocity: δ must lie in (0, 1/2)".into(),
        );
        need(v.epsilon > 0.0, "velocity: ε must be positive".into());
        need(
            support_inside(v.centre, v.half_width),
            "velocity: state must lie in x < 0".into(),
        );
        for (name, h, dt) in [
            ("dt", h_velocity, v.dt),
            ("asymptotic_dt", h_asymptotic, v.asymptotic_dt),
        ] {
            if let Some(g) = &h {
                step_ok(
                    &mut need,
                    &format!("velocity {name}"),
                    g,
                    &EvolutionConfig::new(dt, 1.0),
                );
            }
        }
        let last = |times: &[f64]| times.last().copied().unwrap_or(0.0);
        let reach = v.centre - v.half_width;
        need(
            v.x_min <= reach - last(&v.times),
            "velocity: grid too short for the trace times".into(),
        );
        need(
            v.asymptotic_x_min <= reach - last(&v.asymptotic_times),
            "velocity: asymptotic grid too short".into(),
        );
        need(
            v.free_x_min <= reach - last(&v.free_times),
            "velocity: free grid too short".into(),
        );

        // Spectral.
        need(
            mo.epsilon > 0.0 && mo.epsilon < 1.0,
            format!("mourre: ε = {} must lie in (0, 1)", mo.epsilon),
        );
        need(
            mo.interval.0 < mo.interval.1,
            "mourre: empty interval".into(),
        );
        need(
            mo.shrink_half_widths.iter().all(|&w| w > 0.0),
            "mourre: shrink half-widths must be positive".into(),
        );
        need(
            8 * mo.n <= MAX_DENSE_DIMENSION,
            "mourre: refined grid exceeds the dense dimension limit".into(),
        );
        need(
            4 * sp.n <= MAX_DENSE_DIMENSION,
            "spectrum: grid exceeds the dense dimension limit".into(),
        );
        need(
            sp.lambdas.iter().all(|l| l.is_finite()),
            "spectrum: λ must be finite".into(),
        );
        need(sp.depth > 1.0, "spectrum: depth must exceed 1".into());
        need(
            d.z.1 != 0.0,
            "domain-exponent: Im z must be non-zero".into(),
        );
        need(
            support_inside(d.centre, d.half_width),
            "domain-exponent: data must lie in x < 0".into(),
        );
        if errs.is_empty() {
            Ok(())
        } else {
            Err(ConfigErrors { errors: errs })
        }
    }

    /// SHA-256 of the canonical JSON form of the config, excluding the output directory.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output = PathBuf::new();
        let bytes = serde_json::to_vec(&c).expect("configs serialise");
        format!("{:x}", Sha256::digest(&bytes))
    }
}

fn step_ok(
    need: &mut impl FnMut(bool, String),
    what: &str,
    grid: &Grid<f64>,
    evo: &EvolutionConfig,
) {
    if let Err(e) = evo.validate(grid) {
        need(false, format!("{what}: {e}"));
    }
}

fn support_inside(centre: f64, half_width: f64) -> bool {
    half_width > 0.0 && centre + half_width < 0.0
}

/// Every problem found while validating a config.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{} configuration problem(s): {}", errors.len(), errors.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("; "))]
pub struct ConfigErrors {
    /// Collected errors.
    pub errors: Vec<Error>,
}

/// Reads, parses and validates a JSON config.
pub fn parse_config(path: &Path) -> std::result::Result<ExperimentConfig, ConfigErrors> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigErrors {
        errors: vec![Error::Io(format!("{}: {e}", path.display()))],
    })?;
    parse_config_str(&text)
}

/// Parses and validates a JSON config held in memory.
pub fn parse_config_str(text: &str) -> std::result::Result<ExperimentConfig, ConfigErrors> {
    let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| ConfigErrors {
        errors: vec![Error::Configuration(e.to_string())],
    })?;
    cfg.validate()?;
    Ok(cfg)
}

/// One pass/fail verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    /// Acceptance criterion the check belongs to (`None` for supporting invariants).
    pub criterion: Option<u8>,
    /// Short description.
    pub name: String,
    /// Verdict.
    pub passed: bool,
    /// Measured values behind the verdict.
    pub detail: String,
}

impl Check {
    fn new(
        criterion: Option<u8>,
        name: impl Into<String>,
        passed: bool,
        detail: impl Into<String>,
    ) -> Self {
        Self {
            criterion,
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }

    /// One-line verdict.
    pub fn line(&self) -> String {
        let tag = match self.criterion {
            Some(c) => format!("criterion {c}"),
            None => "invariant".to_string(),
        };
        format!(
            "{} [{tag}] {}: {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.detail
        )
    }
}

/// What one experiment produced.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentOutcome {
    /// Experiment.
    pub experiment: Experiment,
    /// Ran to the end without a module error.
    pub completed: bool,
    /// Module error that aborted the experiment.
    pub error: Option<String>,
    /// Files written, relative to the output directory.
    pub outputs: Vec<PathBuf>,
    /// Verdicts, in evaluation order.
    pub checks: Vec<Check>,
    /// Wall-clock seconds.
    pub wall_seconds: f64,
}

impl ExperimentOutcome {
    /// Completed and every check passed.
    pub fn passed(&self) -> bool {
        self.completed && self.checks.iter().all(|c| c.passed)
    }
}

/// Summary of a run, also written to `manifest.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    /// [`ExperimentConfig::hash`].
    pub config_hash: String,
    /// Crate version that produced the outputs.
    pub version: String,
    /// Output directory.
    pub output_dir: PathBuf,
    /// Outcomes in execution order.
    pub experiments: Vec<ExperimentOutcome>,
    /// Wall-clock seconds of the whole run.
    pub wall_seconds: f64,
    /// Every experiment completed and passed.
    pub passed: bool,
}

impl RunManifest {
    /// All checks in execution order.
    pub fn checks(&self) -> impl Iterator<Item = &Check> {
        self.experiments.iter().flat_map(|e| e.checks.iter())
    }

    /// One line per check, followed by one line per aborted experiment.
    pub fn verdict_lines(&self) -> Vec<String> {
        let mut lines: Vec<String> = self.checks().map(Check::line).collect();
        for e in self.experiments.iter().filter(|e| !e.completed) {
            lines.push(format!(
                "FAIL [experiment] {} aborted: {}",
                e.experiment,
                e.error.as_deref().unwrap_or("unknown error")
            ));
        }
        lines
    }
}

/// Output sink of one experiment.
struct Recorder<'a> {
    root: &'a Path,
    dir: PathBuf,
    hash: &'a str,
    outputs: Vec<PathBuf>,
    checks: Vec<Check>,
}

impl<'a> Recorder<'a> {
    fn new(root: &'a Path, experiment: Experiment, hash: &'a str) -> Self {
        Self {
            root,
            dir: PathBuf::from(experiment.name()),
            hash,
            outputs: Vec::new(),
            checks: Vec::new(),
        }
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let rel = self.dir.join(name);
        let path = self.root.join(&rel);
        std::fs::create_dir_all(path.parent().expect("file has a parent"))?;
        std::fs::write(&path, bytes)?;
        self.outputs.push(rel);
        Ok(())
    }

    /// CSV with a `# config_hash=…` comment line before the header.
    fn csv<R: Serialize>(
        &mut self,
        name: &str,
        header: &[&str],
        rows: impl IntoIterator<Item = R>,
    ) -> Result<()> {
        let mut wtr = csv::WriterBuilder::new()
            .has_headers(false)
            .from_writer(Vec::new());
        let io = |e: csv::Error| Error::Io(e.to_string());
        wtr.write_record(header).map_err(io)?;
        for r in rows {
            wtr.serialize(r).map_err(io)?;
        }
        let body = wtr.into_inner().map_err(|e| Error::Io(e.to_string()))?;
        let mut bytes = format!("# config_hash={}\n", self.hash).into_bytes();
        bytes.extend(body);
        self.write(name, &bytes)
    }

    /// JSON document `{config_hash, version, report}`.
    fn json<T: Serialize>(&mut self, name: &str, report: &T) -> Result<()> {
        let doc = serde_json::json!({
            "config_hash": self.hash,
            "version": env!("CARGO_PKG_VERSION"),
            "report": report,
        });
        let mut bytes = serde_json::to_vec_pretty(&doc).map_err(|e| Error::Io(e.to_string()))?;
        bytes.push(b'\n');
        self.write(name, &bytes)
    }

    fn check(
        &mut self,
        criterion: Option<u8>,
        name: impl Into<String>,
        passed: bool,
        detail: impl Into<String>,
    ) {
        self.checks
            .push(Check::new(criterion, name, passed, detail));
    }
}

/// Validates the config and runs its experiments on the global thread pool.
pub fn run(config: &ExperimentConfig) -> Result<RunManifest> {
    config
        .validate()
        .map_err(|e| Error::Configuration(e.to_string()))?;
    let start = Instant::now();
    let hash = config.hash();
    let root = config.output.clone();
    std::fs::create_dir_all(&root)?;
    let mut selected = config.experiments.clone();
    selected.sort();
    selected.dedup();
    let experiments: Vec<ExperimentOutcome> = selected
        .par_iter()
        .map(|&e| {
            let t = Instant::now();
            let mut rec = Recorder::new(&root, e, &hash);
            let result = run_experiment(e, config, &mut rec);
            ExperimentOutcome {
                experiment: e,
                completed: result.is_ok(),
                error: result.err().map(|err| err.to_string()),
                outputs: rec.outputs,
                checks: rec.checks,
                wall_seconds: t.elapsed().as_secs_f64(),
            }
        })
        .collect();
    let passed = experiments.iter().all(ExperimentOutcome::passed);
    let manifest = RunManifest {
        config_hash: hash,
        version: env!("CARGO_PKG_VERSION").to_string(),
        output_dir: root.clone(),
        experiments,
        wall_seconds: start.elapsed().as_secs_f64(),
        passed,
    };
    let mut bytes = serde_json::to_vec_pretty(&manifest).map_err(|e| Error::Io(e.to_string()))?;
    bytes.push(b'\n');
    std::fs::write(root.join("manifest.json"), bytes)?;
    Ok(manifest)
}

/// [`run`] on a dedicated pool of `threads` workers (`None`: rayon's default).
pub fn run_with_threads(config: &ExperimentConfig, threads: Option<usize>) -> Result<RunManifest> {
    match threads {
        None => run(config),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Configuration(format!("thread pool: {e}")))?
            .install(|| run(config)),
    }
}

fn run_experiment(e: Experiment, cfg: &ExperimentConfig, rec: &mut Recorder<'_>) -> Result<()> {
    match e {
        Experiment::Geometry => run_geometry(cfg, rec),
        Experiment::Algebra => run_algebra(rec),
        Experiment::Evolve => run_evolve(cfg, rec),
        Experiment::Scatter => run_scatter(cfg, rec),
        Experiment::Velocity => run_velocity(cfg, rec),
        Experiment::Mourre => run_mourre(cfg, rec),
        Experiment::Spectrum => run_spectrum(cfg, rec),
        Experiment::DomainExponent => run_domain_exponent(cfg, rec),
    }
}

/// Channel operator of the black-hole potentials on a grid matching the regime's boundary condition.
pub fn sads_operator(
    p: &Params<f64>,
    ch: Channel,
    x_min: f64,
    n: usize,
    policy: SpacingPolicy,
) -> Result<ChannelOperator<f64>> {
    let bc = BoundaryCondition::for_regime(p.regime);
    let grid = make_grid(x_min, n, policy, bc.endpoint())?;
    assemble_hamiltonian(ch, p, grid, &PotentialPair::sads(p))
}

/// Comparison (zero-potential) operator on a uniform grid ending at `x = 0`.
pub fn comparison_operator(
    p: &Params<f64>,
    ch: Channel,
    x_min: f64,
    n: usize,
) -> Result<ChannelOperator<f64>> {
    let grid = make_grid(
        x_min,
        n,
        SpacingPolicy::Uniform,
        BoundaryCondition::Mit.endpoint(),
    )?;
    free_generator(ch, p, grid)
}

fn normalised(f: SpinorField<f64>) -> SpinorField<f64> {
    let n = f.norm();
    f.scaled(cx(1.0 / n, 0.0))
}

/// Unit admissible state with equal bumps in the first two components.
pub fn scattering_state(
    op: &ChannelOperator<f64>,
    centre: f64,
    half_width: f64,
) -> SpinorField<f64> {
    let g = op.grid().clone();
    let f = bump_state(g.clone(), 0, centre, half_width, 0.0)
        .add(&bump_state(g, 1, centre, half_width, 0.0));
    normalised(op.project_admissible(&f))
}

/// Unit admissible state in the lower components, the first with a slow phase.
pub fn asymptotic_state(
    op: &ChannelOperator<f64>,
    centre: f64,
    half_width: f64,
) -> SpinorField<f64> {
    let g = op.grid().clone();
    let f = bump_state(g.clone(), 2, centre, half_width, 0.5)
        .add(&bump_state(g, 3, centre, half_width, 0.0));
    normalised(op.project_admissible(&f))
}

/// Unit admissible state mixing all four components with distinct phases.
pub fn mixed_state(op: &ChannelOperator<f64>, centre: f64, half_width: f64) -> SpinorField<f64> {
    let g = op.grid().clone();
    let f = bump_state(g.clone(), 0, centre, half_width, 2.0)
        .add(&bump_state(g.clone(), 1, centre, half_width, 0.0).scaled(cx(0.5, 0.0)))
        .add(&bump_state(g.clone(), 2, centre, half_width, 0.0).scaled(cx(0.0, -0.3)))
        .add(&bump_state(g, 3, centre, half_width, 2.0).scaled(cx(0.8, 0.0)));
    normalised(op.project_admissible(&f))
}

/// Unit admissible state with seeded random amplitudes under a bump envelope.
pub fn random_state(
    op: &ChannelOperator<f64>,
    centre: f64,
    half_width: f64,
    seed: u64,
) -> SpinorField<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let envelope = bump_state(op.grid().clone(), 0, centre, half_width, 0.0);
    let values = envelope
        .values()
        .iter()
        .map(|v| {
            std::array::from_fn(|_| {
                v[0] * Cx::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
            })
        })
        .collect();
    let f = SpinorField::from_values(op.grid().clone(), values).expect("one value per node");
    normalised(op.project_admissible(&f))
}

fn regime_label(p: &Params<f64>) -> String {
    format!("2ml = {}", p.two_ml())
}

fn fmt_list(v: &[f64]) -> String {
    let items: Vec<String> = v.iter().map(|x| format!("{x:.3e}")).collect();
    format!("[{}]", items.join(", "))
}

#[derive(Serialize)]
struct GeometrySummary {
    #[serde(rename = "M")]
    mass: f64,
    l: f64,
    r_sads: f64,
    kappa: f64,
    #[serde(rename = "C")]
    tortoise_c: f64,
    alpha1: f64,
    horizon_residual: f64,
    quadrature_defect: f64,
    round_trip_defect: f64,
    boundary_expansions: ResidualTable,
    horizon_expansion: ResidualTable,
}

fn run_geometry(cfg: &ExperimentConfig, rec: &mut Recorder<'_>) -> Result<()> {
    let p = cfg.params()?;
    let o = &cfg.geometry;
    let map = CoordinateMap::new(p);
    let rs = p.horizon;
    let (a, b) = (
        (rs * o.min_relative_gap).ln(),
        (o.max_radius * p.ads_length - rs).ln(),
    );
    let mut rows = Vec::with_capacity(o.samples);
    let mut round_trip: f64 = 0.0;
    for i in 0..o.samples {
        let r = rs + (a + (b - a) * i as f64 / (o.samples - 1) as f64).exp();
        let x = map.x_of_r(r)?;
        rows.push((r, metric_factor(r, &p)?, tortoise(r, &p)?, x));
        round_trip = round_trip.max((map.r_of_x(x)? - r).abs() / r);
    }
    // Deep in the horizon region the radius rounds to r_SAdS; the horizon distance carries x.
    for x in [-40.0, -20.0, -5.0, -1.0, -0.1, -1e-3, -1e-7] {
        let pt = map.point_of_x(x)?;
        round_trip = round_trip.max((map.x_of_point(&pt) - x).abs() / x.abs());
    }
    rec.csv("geometry.csv", &["r", "F", "r_star", "x"], &rows)?;

    let horizon_residual = metric_factor(rs, &p)?.abs();
    let mut horizon_ok = horizon_residual <= 1e-12 * rs.max(1.0);
    let mut detail = format!("r_SAdS = {rs}, |F(r_SAdS)| = {horizon_residual:.1e}");
    if p.mass == 1.0 && p.ads_length == 1.0 {
        horizon_ok &= (rs - 1.0).abs() <= 1e-12;
        detail.push_str(&format!(", |r_SAdS − 1| = {:.1e}", (rs - 1.0).abs()));
    }
    rec.check(
        Some(1),
        "horizon radius is the root of F",
        horizon_ok,
        detail,
    );

    // Quadrature of dr/F by the adaptive integrator between sample radii.
    let l = p.ads_length;
    let radii = [
        rs * 1.001,
        rs * 1.1,
        rs * 1.5,
        rs * 3.0,
        10.0 * l,
        100.0 * l,
    ];
    let opts = OdeOptions {
        rtol: 1e-12,
        atol: 1e-14,
        ..OdeOptions::default()
    };
    let mut quadrature: f64 = 0.0;
    for w in radii.windows(2) {
        let (y, _) = dormand_prince(
            |r, _, dy| dy[0] = 1.0 / metric_factor(r, &p).unwrap_or(f64::NAN),
            w[0],
            &[0.0],
            w[1],
            &opts,
        )?;
        quadrature = quadrature.max((y[0] - (tortoise(w[1], &p)? - tortoise(w[0], &p)?)).abs());
    }
    rec.check(
        Some(1),
        "tortoise closed form vs quadrature",
        quadrature <= 1e-8,
        format!("max defect {quadrature:.1e} ≤ 1e-8"),
    );
    rec.check(
        Some(1),
        "coordinate round trips",
        round_trip <= 1e-10,
        format!("max relative defect {round_trip:.1e} ≤ 1e-10"),
    );

    rec.json(
        "summary.json",
        &GeometrySummary {
            mass: p.mass,
            l: p.ads_length,
            r_sads: rs,
            kappa: p.kappa,
            tortoise_c: p.tortoise_c,
            alpha1: p.alpha1,
            horizon_residual,
            quadrature_defect: quadrature,
            round_trip_defect: round_trip,
            boundary_expansions: expansion_residuals(&p, Side::Boundary)?,
            horizon_expansion: expansion_residuals(&p, Side::Horizon)?,
        },
    )
}

fn run_algebra(rec: &mut Recorder<'_>) -> Result<()> {
    let alg = DiracAlgebra::<Ratio<i64>>::construct();
    let failures: Vec<String> = alg.failures().into_iter().map(|f| f.identity).collect();
    rec.json(
        "identities.json",
        &serde_json::json!({ "arithmetic": "exact rational", "violated": failures }),
    )?;
    rec.check(
        Some(2),
        "Clifford, γ⁵ and transform-pair identities (exact arithmetic)",
        failures.is_empty(),
        if failures.is_empty() {
            "all identities hold entrywise".to_string()
        } else {
            format!("violated: {}", failures.join(", "))
        },
    );
    Ok(())
}

#[derive(Serialize)]
struct EvolveSummary {
    m: f64,
    regime: Regime,
    boundary: BoundaryCondition,
    dt: f64,
    t_final: f64,
    norm_drift: f64,
    random_state_norm_drift: f64,
    boundary_residuals: Vec<(f64, BoundaryTrace)>,
}

#[derive(Serialize)]
struct FreeStudy {
    x_min: f64,
    t: f64,
    levels: Vec<usize>,
    errors: Vec<f64>,
    orders: Vec<f64>,
}

fn run_evolve(cfg: &ExperimentConfig, rec: &mut Recorder<'_>) -> Result<()> {
    let o = &cfg.evolve;
    let ch = cfg.primary_channel()?;
    for p in cfg.all_params()? {
        let op = sads_operator(&p, ch, o.x_min, o.n, SpacingPolicy::Uniform)?;
        let dt = o.dt.unwrap_or(0.5 * op.grid().min_spacing());
        let evo = EvolutionConfig::new(dt, o.t_final).with_snapshots(o.snapshots.iter().copied());
        let psi = mixed_state(&op, o.centre, o.half_width);
        let rnd = random_state(&op, o.centre, o.half_width, cfg.seed);
        let (traj, rtraj) = rayon::join(
            || evolve(&op, &psi, &evo),
            || evolve(&op, &rnd, &EvolutionConfig::new(dt, o.t_final)),
        );
        let (traj, rtraj) = (traj?, rtraj?);
        let mut rows = Vec::new();
        for (t, snap) in traj.times.iter().zip(&traj.snapshots) {
            for (x, v) in snap.grid().nodes().iter().zip(snap.values()) {
                rows.push((
                    t, x, v[0].re, v[0].im, v[1].re, v[1].im, v[2].re, v[2].im, v[3].re, v[3].im,
                ));
            }
        }
        let tag = format!("m{}", p.field_mass);
        rec.csv(
            &format!("trajectory_{tag}.csv"),
            &[
                "t", "x", "re1", "im1", "re2", "im2", "re3", "im3", "re4", "im4",
            ],
            rows,
        )?;
        let drift = traj.norm_drift.max(rtraj.norm_drift);
        rec.json(
            &format!("summary_{tag}.json"),
            &EvolveSummary {
                m: p.field_mass,
                regime: p.regime,
                boundary: op.bc(),
                dt,
                t_final: o.t_final,
                norm_drift: traj.norm_drift,
                random_state_norm_drift: rtraj.norm_drift,
                boundary_residuals: traj
                    .times
                    .iter()
                    .copied()
                    .zip(traj.snapshots.iter().map(boundary_trace))
                    .collect(),
            },
        )?;
        rec.check(
            Some(3),
            format!(
                "unitarity, {} ({:?} boundary), N = {}",
                regime_label(&p),
                op.bc(),
                o.n
            ),
            drift <= 1e-8,
            format!("max norm drift {drift:.1e} ≤ 1e-8 over T = {}", o.t_final),
        );
    }

    // Free-propagator oracle and refinement study.
    let p = cfg.params()?;
    let errors = o
        .free_levels
        .par_iter()
        .map(|&n| {
            let op = comparison_operator(&p, ch, o.free_x_min, n)?;
            let psi = mixed_state(&op, o.free_centre, o.free_half_width);
            let traj = evolve(
                &op,
                &psi,
                &EvolutionConfig::new(0.5 * op.grid().min_spacing(), o.free_t),
            )?;
            let exact = free_propagate(&psi, o.free_t, Direction::Forward);
            Ok(l2_distance(&traj.final_state, &exact) / psi.norm())
        })
        .collect::<Result<Vec<f64>>>()?;
    let orders: Vec<f64> = errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    let at = o
        .free_levels
        .iter()
        .position(|&n| n == o.n)
        .unwrap_or(o.free_levels.len() - 1);
    rec.csv(
        "free_convergence.csv",
        &["N", "l2_error"],
        o.free_levels.iter().zip(&errors).collect::<Vec<_>>(),
    )?;
    rec.json(
        "free_convergence.json",
        &FreeStudy {
            x_min: o.free_x_min,
            t: o.free_t,
            levels: o.free_levels.clone(),
            errors: errors.clone(),
            orders: orders.clone(),
        },
    )?;
    let min_order = orders.iter().copied().fold(f64::INFINITY, f64::min);
    rec.check(
        Some(4),
        "discrete free evolution vs closed form",
        errors[at] <= 1e-3 && min_order >= 1.8,
        format!(
            "L² error {:.2e} ≤ 1e-3 at N = {}; observed orders {} ≥ 1.8",
            errors[at],
            o.free_levels[at],
            fmt_list(&orders)
        ),
    );
    Ok(())
}

#[derive(Serialize)]
struct ScatterJob<'a> {
    channel: String,
    regime: Regime,
    t_k: &'a [f64],
    increments: &'a [f64],
    limit_norms: &'a [f64],
    v_extrapolated: Option<f64>,
    report: &'a ScatteringReport,
}

fn scatter_job(r: &ScatteringReport, regime: Regime) -> ScatterJob<'_> {
    ScatterJob {
        channel: r.channel.to_string(),
        regime,
        t_k: &r.times,
        increments: &r.increments,
        limit_norms: &r.limit_norms,
        v_extrapolated: r.v_extrapolated,
        report: r,
    }
}

fn increment_rows(r: &ScatteringReport) -> Vec<(f64, Option<f64>, f64, Option<f64>)> {
    (0..r.times.len())
        .map(|k| {
            (
                r.times[k],
                r.increments.get(k).copied(),
                r.limit_norms[k],
                r.velocities.get(k).copied(),
            )
        })
        .collect()
}

fn run_scatter(cfg: &ExperimentConfig, rec: &mut Recorder<'_>) -> Result<()> {
    let o = &cfg.scatter;
    let ch = cfg.primary_channel()?;
    let header = ["t", "increment_to_next", "limit_norm", "velocity"];
    let all = cfg.all_params()?;
    let jobs: Vec<(Params<f64>, ScatterSetup)> = all
        .iter()
        .filter_map(|p| o.setup(p.regime).map(|s| (*p, *s)))
        .collect();
    for p in all.iter().filter(|p| o.setup(p.regime).is_none()) {
        rec.check(
            None,
            format!("wave operator, {}", regime_label(p)),
            true,
            "skipped: no schedule for 2ml = 1",
        );
    }
    // The primary mass also gets the backward wave operator and the pairing.
    let primary = cfg.params()?;
    let results = jobs
        .par_iter()
        .map(|(p, s)| {
            let op = sads_operator(p, ch, s.x_min, s.n, SpacingPolicy::Uniform)?;
            let phi = scattering_state(&op, o.centre, o.half_width);
            let psi = asymptotic_state(&op, o.centre, o.half_width);
            let times = geometric_schedule(s.t0, s.count);
            if p.field_mass == primary.field_mass {
                let (f, b) = adjoint_pairing(&phi, &psi, &op, &times, s.dt)?;
                let pairing = f.limit.as_ref().expect("limit kept").inner(&psi).norm();
                Ok((f, Some((b, pairing))))
            } else {
                Ok((
                    wave_operator_forward(&phi, &op, &times, s.dt, &[1.0, 2.0])?,
                    None,
                ))
            }
        })
        .collect::<Result<Vec<(ScatteringReport, Option<(ScatteringReport, f64)>)>>>()?;
    for ((p, _), (fwd, bwd)) in jobs.iter().zip(&results) {
        let tag = format!("m{}", p.field_mass);
        rec.csv(
            &format!("increments_{tag}.csv"),
            &header,
            increment_rows(fwd),
        )?;
        rec.json(&format!("forward_{tag}.json"), &scatter_job(fwd, p.regime))?;
        let fin = fwd.final_increment();
        rec.check(
            Some(6),
            format!("wave operator converges, {}", regime_label(p)),
            fwd.converged,
            format!(
                "increments {} monotone on the tail: {}; final {fin:.2e} ≤ 1e-2·‖φ‖",
                fmt_list(&fwd.increments),
                fwd.monotone_tail
            ),
        );
        let iso = fwd.isometry_defect();
        let inter = fwd.intertwining.iter().map(|x| x.1).fold(0.0, f64::max);
        rec.check(
            None,
            format!("isometry and intertwining of Ω, {}", regime_label(p)),
            iso <= 10.0 * fin && inter <= 2.0 * fin,
            format!(
                "|‖Ωφ‖ − ‖φ‖| = {iso:.1e} ≤ 10·{fin:.1e}; intertwining {inter:.1e} ≤ 2·{fin:.1e}"
            ),
        );
        if let Some((b, pairing)) = bwd {
            rec.csv(
                &format!("backward_increments_{tag}.csv"),
                &header,
                increment_rows(b),
            )?;
            rec.json(&format!("backward_{tag}.json"), &scatter_job(b, p.regime))?;
            let r = fwd.adjoint_residual.expect("pairing computed");
            rec.check(
                Some(6),
                format!("adjoint pairing ⟨Ωφ, ψ⟩ = ⟨φ, Wψ⟩, {}", regime_label(p)),
                r <= 1e-2,
                format!("relative residual {r:.2e} ≤ 1e-2 (|⟨Ωφ, ψ⟩| = {pairing:.3e})"),
            );
        }
    }

    // Trivial potentials: both wave operators must be the identity.
    let s = o.setup(primary.regime).copied().unwrap_or(o.supercritical);
    let op = comparison_operator(&primary, ch, s.x_min, s.n)?;
    let phi = scattering_state(&op, o.centre, o.half_width);
    let psi = asymptotic_state(&op, o.centre, o.half_width);
    let (f, b) = adjoint_pairing(&phi, &psi, &op, &geometric_schedule(s.t0, s.count), s.dt)?;
    let omega = f.limit.as_ref().expect("limit kept").sub(&phi).norm();
    let w = b.limit.as_ref().expect("limit kept").sub(&psi).norm();
    let worst = f
        .increments
        .iter()
        .chain(&b.increments)
        .copied()
        .chain([omega, w, f.adjoint_residual.unwrap_or(f64::INFINITY)])
        .fold(0.0, f64::max);
    rec.json("trivial_potential.json", &serde_json::json!({ "forward": scatter_job(&f, primary.regime), "backward": scatter_job(&b, primary.regime) }))?;
    rec.check(
        Some(6),
        "trivial-potential oracle: Ω = W = 𝟙",
        worst <= 1e-12,
        format!("largest deviation {worst:.1e} ≤ 1e-12"),
    );

    if !cfg.extra_channels.is_empty() {
        let s = o.setup(primary.regime).copied().unwrap_or(o.supercritical);
        let channels: Vec<Channel> = std::iter::once(Ok(ch))
            .chain(
                cfg.extra_channels
                    .iter()
                    .map(|&(cs, cn)| validate_channel(cs, cn)),
            )
            .collect::<Result<_>>()?;
        let ops = channels
            .iter()
            .map(|&c| sads_operator(&primary, c, s.x_min, s.n, SpacingPolicy::Uniform))
            .collect::<Result<Vec<_>>>()?;
        let phi = scattering_state(&ops[0], o.centre, o.half_width);
        let weights: Vec<f64> = channels.iter().map(|c| c.coupling().powi(-2)).collect();
        let mc: MultichannelReport = multichannel_scatter(
            &phi,
            &ops,
            &weights,
            &geometric_schedule(s.t0, s.count),
            s.dt,
        )?;
        rec.json("multichannel.json", &mc)?;
        rec.check(
            None,
            "multichannel aggregate converges",
            mc.converged,
            format!(
                "aggregate increments {}",
                fmt_list(&mc.aggregate_increments)
            ),
        );
    }
    Ok(())
}

#[derive(Serialize)]
struct VelocitySummary {
    minimal: VelocityTrace,
    maximal: VelocityTrace,
    free: AsymptoticVelocity,
    interacting: Vec<(f64, AsymptoticVelocity)>,
}

fn run_velocity(cfg: &ExperimentConfig, rec: &mut Recorder<'_>) -> Result<()> {
    let o = &cfg.velocity;
    let ch = cfg.primary_channel()?;
    let p = cfg.params()?;
    let op = sads_operator(&p, ch, o.x_min, o.n, SpacingPolicy::Uniform)?;
    let phi = scattering_state(&op, o.centre, o.half_width);
    let dynamics = Dynamics::Interacting(&op, o.dt);
    let (min, max) = rayon::join(
        || {
            velocity_trace(
                &phi,
                dynamics,
                Cutoff::MinimalVelocity { delta: o.delta },
                &o.times,
            )
        },
        || {
            velocity_trace(
                &phi,
                dynamics,
                Cutoff::MaximalVelocity { epsilon: o.epsilon },
                &o.times,
            )
        },
    );
    let (min, max) = (min?, max?);
    let t_end = *o.times.last().expect("validated");
    for (tr, name) in [(&min, "minimal"), (&max, "maximal")] {
        rec.check(
            Some(5),
            format!("{name}-velocity cutoff decays, {}", regime_label(&p)),
            tr.final_value() <= 1e-2,
            format!(
                "⟨J(𝒜/t)⟩ {} ≤ 1e-2 at t = {t_end}",
                fmt_list(&tr.expectations)
            ),
        );
    }
    let band = *min.band_fractions.last().expect("non-empty");
    rec.check(
        Some(5),
        "velocity sandwich |𝒜/t − 1| ≤ 0.25",
        band >= 0.98,
        format!("mass fraction {band:.4} ≥ 0.98 at t = {t_end}"),
    );

    let free_op = comparison_operator(&p, ch, o.free_x_min, o.free_n)?;
    let free_phi = normalised(bump_state(
        free_op.grid().clone(),
        1,
        o.centre,
        o.half_width,
        0.0,
    ));
    let free = asymptotic_velocity(&free_phi, Dynamics::Free, &o.free_times)?;
    rec.check(
        Some(7),
        "asymptotic velocity, free dynamics",
        (free.extrapolated - 1.0).abs() <= 0.05,
        format!(
            "extrapolated ⟨𝒜/t⟩ = {:.6} (|· − 1| ≤ 0.05)",
            free.extrapolated
        ),
    );
    let interacting = cfg
        .all_params()?
        .par_iter()
        .map(|q| {
            let op = sads_operator(
                q,
                ch,
                o.asymptotic_x_min,
                o.asymptotic_n,
                SpacingPolicy::Uniform,
            )?;
            let phi = scattering_state(&op, o.centre, o.half_width);
            Ok((
                q.field_mass,
                asymptotic_velocity(
                    &phi,
                    Dynamics::Interacting(&op, o.asymptotic_dt),
                    &o.asymptotic_times,
                )?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    for (m, av) in &interacting {
        let q = Params::new(cfg.mass, cfg.l, *m)?;
        rec.check(
            Some(7),
            format!(
                "asymptotic velocity, interacting dynamics, {}",
                regime_label(&q)
            ),
            (av.extrapolated - 1.0).abs() <= 0.05,
            format!(
                "v(t) {} → extrapolated {:.4} (|· − 1| ≤ 0.05)",
                fmt_list(&av.values),
                av.extrapolated
            ),
        );
    }

    let mut rows = Vec::new();
    for tr in [&min, &max] {
        let name = match tr.cutoff {
            Cutoff::MinimalVelocity { .. } => "minimal",
            _ => "maximal",
        };
        for k in 0..tr.times.len() {
            rows.push((name, tr.times[k], tr.expectations[k], tr.band_fractions[k]));
        }
    }
    rec.csv(
        "cutoff_traces.csv",
        &["cutoff", "t", "expectation", "band_fraction"],
        rows,
    )?;
    let mut rows = Vec::new();
    for k in 0..free.times.len() {
        rows.push(("free".to_string(), free.times[k], free.values[k]));
    }
    for (m, av) in &interacting {
        for k in 0..av.times.len() {
            rows.push((format!("m{m}"), av.times[k], av.values[k]));
        }
    }
    rec.csv(
        "asymptotic_velocity.csv",
        &["dynamics", "t", "velocity"],
        rows,
    )?;
    rec.json(
        "velocity.json",
        &VelocitySummary {
            minimal: min,
            maximal: max,
            free,
            interacting,
        },
    )
}

#[derive(Serialize)]
struct MourreSummary {
    refinement: MourreRefinement,
    free: MourreReport,
    shrink: Vec<MourreReport>,
}

fn run_mourre(cfg: &ExperimentConfig, rec: &mut Recorder<'_>) -> Result<()> {
    let o = &cfg.mourre;
    let ch = cfg.primary_channel()?;
    let p = cfg.params()?;
    let (coarse, fine) = rayon::join(
        || sads_operator(&p, ch, o.x_min, o.n, SpacingPolicy::Uniform),
        || sads_operator(&p, ch, o.x_min, 2 * o.n, SpacingPolicy::Uniform),
    );
    let (coarse, fine) = (coarse?, fine?);
    let refinement = mourre_refinement(&coarse, &fine, o.interval, o.epsilon, true)?;
    rec.check(
        Some(9),
        format!(
            "Mourre positivity on [{}, {}], ε = {}, N = {} → {}",
            o.interval.0,
            o.interval.1,
            o.epsilon,
            o.n,
            2 * o.n
        ),
        refinement.verdict == MourreVerdict::Pass,
        format!(
            "min quotient {:.4} → {:.4} ≥ {}; change {:.1e} ≤ 0.05; η = {:.3}",
            refinement.coarse.min_quotient,
            refinement.fine.min_quotient,
            1.0 - o.epsilon,
            refinement.quotient_change,
            refinement.fine.eta
        ),
    );
    let free_op = comparison_operator(&p, ch, o.free_x_min, o.free_n)?;
    let free = mourre_check(&free_op, o.interval, o.epsilon)?;
    let dev = (free.min_quotient - 1.0)
        .abs()
        .max((free.max_quotient - 1.0).abs());
    rec.check(
        Some(9),
        "free commutator quotient is exactly one",
        dev <= 1e-12,
        format!("max |quotient − 1| = {dev:.1e} ≤ 1e-12"),
    );
    let centre = 0.5 * (o.interval.0 + o.interval.1);
    let shrink = mourre_shrink(&coarse, centre, &o.shrink_half_widths, o.epsilon)?;
    let etas: Vec<f64> = shrink.iter().map(|r| r.eta).collect();
    let noise = shrink.iter().map(|r| r.level_spacing).fold(0.0, f64::max) * 1e-2;
    rec.check(
        None,
        "compact correction shrinks with the window",
        etas.windows(2).all(|w| w[1] <= w[0] + noise),
        format!(
            "η over nested windows {} (noise allowance {noise:.1e})",
            fmt_list(&etas)
        ),
    );
    rec.json(
        "mourre.json",
        &MourreSummary {
            refinement,
            free,
            shrink,
        },
    )
}

#[derive(Serialize)]
struct SpectrumSummary {
    dimension: usize,
    max_residual: f64,
    orthonormality_defect: f64,
    free_pairing_defect: f64,
    no_eigenvalue: Vec<NoEigenvalueReport>,
}

fn run_spectrum(cfg: &ExperimentConfig, rec: &mut Recorder<'_>) -> Result<()> {
    let o = &cfg.spectrum;
    let ch = cfg.primary_channel()?;
    let p = cfg.params()?;
    let op = sads_operator(&p, ch, o.x_min, o.n, SpacingPolicy::Uniform)?;
    let free_op = comparison_operator(&p, ch, o.x_min, o.n)?;
    let (dec, free) = rayon::join(|| eigendecompose(&op), || eigendecompose(&free_op));
    let (dec, free) = (dec?, free?);
    rec.csv(
        "eigenvalues.csv",
        &["index", "eigenvalue"],
        dec.eigenvalues.iter().enumerate().collect::<Vec<_>>(),
    )?;
    rec.csv(
        "free_eigenvalues.csv",
        &["index", "eigenvalue"],
        free.eigenvalues.iter().enumerate().collect::<Vec<_>>(),
    )?;
    let worst = dec.max_residual.max(dec.orthonormality_defect);
    rec.check(
        None,
        "eigenpair residuals and orthonormality",
        worst <= EIGEN_TOLERANCE,
        format!(
            "residual {:.1e}, orthonormality {:.1e} ≤ 1e-10",
            dec.max_residual, dec.orthonormality_defect
        ),
    );
    let n = free.len();
    let scale = free_op.matrix().norm_inf();
    let pairing = (0..n)
        .map(|k| (free.eigenvalues[k] + free.eigenvalues[n - 1 - k]).abs())
        .fold(0.0, f64::max)
        / scale;
    rec.check(
        None,
        "free spectrum is symmetric about zero",
        pairing <= 1e-10,
        format!("max |λ_k + λ_(n−1−k)|/‖H‖ = {pairing:.1e}"),
    );

    let pp = PotentialPair::sads(&p);
    let reports = o
        .lambdas
        .par_iter()
        .map(|&l| no_eigenvalue_test(l, ch, &p, &pp, o.depth, &o.no_eigenvalue))
        .collect::<Result<Vec<_>>>()?;
    for r in &reports {
        rec.check(
            Some(8),
            format!("no eigenvalue at λ = {}", r.lambda),
            r.invertible_limit,
            format!(
                "‖Φ(−X) − Φ(−2X)‖ = {:.1e} ≤ {:.0e}, cond = {:.3} ≤ {:.0e} (X = {})",
                r.convergence,
                o.no_eigenvalue.convergence_tol,
                r.condition,
                o.no_eigenvalue.max_condition,
                r.depth
            ),
        );
    }
    rec.csv(
        "no_eigenvalue.csv",
        &[
            "lambda",
            "convergence",
            "condition",
            "tail_integral",
            "total_integral",
            "steps",
            "invertible_limit",
        ],
        reports
            .iter()
            .map(|r| {
                (
                    r.lambda,
                    r.convergence,
                    r.condition,
                    r.tail_integral,
                    r.total_integral,
                    r.steps,
                    r.invertible_limit,
                )
            })
            .collect::<Vec<_>>(),
    )?;
    rec.json(
        "spectrum.json",
        &SpectrumSummary {
            dimension: op.dim(),
            max_residual: dec.max_residual,
            orthonormality_defect: dec.orthonormality_defect,
            free_pairing_defect: pairing,
            no_eigenvalue: reports,
        },
    )
}

/// Smooth four-component resolvent data supported in `[centre − w, centre + w]`.
pub fn probe_data(op: &ChannelOperator<f64>, centre: f64, half_width: f64) -> SpinorField<f64> {
    let g = op.grid().clone();
    let f = bump_state(g.clone(), 0, centre, half_width, 0.0)
        .add(&bump_state(g.clone(), 1, centre, half_width, 0.0).scaled(cx(0.3, 0.0)))
        .add(&bump_state(g.clone(), 2, centre, half_width, 0.0).scaled(cx(0.0, 0.5)))
        .add(&bump_state(g, 3, centre, half_width, 0.0).scaled(cx(-0.2, 0.0)));
    op.project_admissible(&f)
}

fn run_domain_exponent(cfg: &ExperimentConfig, rec: &mut Recorder<'_>) -> Result<()> {
    let o = &cfg.domain_exponent;
    let ch = cfg.primary_channel()?;
    let z = cx(o.z.0, o.z.1);
    let policy = SpacingPolicy::BoundaryGraded {
        ratio: o.ratio,
        h_min: o.h_min,
    };
    let fits = cfg
        .all_params()?
        .par_iter()
        .map(|p| {
            let op = sads_operator(p, ch, o.x_min, o.n, policy)?;
            Ok((
                *p,
                boundary_exponent_fit(&op, z, &probe_data(&op, o.centre, o.half_width))?,
            ))
        })
        .collect::<Result<Vec<(Params<f64>, ExponentFit)>>>()?;
    for (p, fit) in &fits {
        let tag = format!("m{}", p.field_mass);
        rec.csv(
            &format!("profile_{tag}.csv"),
            &["minus_x", "abs_u"],
            &fit.profile,
        )?;
        let ml = p.field_mass * p.ads_length;
        match (p.regime, fit.status, fit.slope) {
            (Regime::Supercritical, FitStatus::Fitted, Some(s)) => rec.check(
                Some(10),
                format!("boundary exponent, {}", regime_label(p)),
                s >= 0.45,
                format!(
                    "slope {s:.4} ≥ 0.45 over −x ∈ [{:.1e}, {:.1e}]",
                    fit.window.0, fit.window.1
                ),
            ),
            (Regime::Subcritical, FitStatus::Fitted, Some(s)) => rec.check(
                Some(10),
                format!("boundary exponent, {}", regime_label(p)),
                (s + ml).abs() <= 0.05,
                format!(
                    "slope {s:.4} = −ml = {:.4} ± 0.05 over −x ∈ [{:.1e}, {:.1e}]",
                    -ml, fit.window.0, fit.window.1
                ),
            ),
            (Regime::Critical, FitStatus::CriticalNotFitted, _) => rec.check(
                None,
                format!("boundary exponent, {}", regime_label(p)),
                true,
                "logarithmic case reported, not fitted",
            ),
            (_, status, _) => rec.check(
                Some(10),
                format!("boundary exponent, {}", regime_label(p)),
                false,
                format!("no fit: {status:?}"),
            ),
        }
    }
    let fits: Vec<&ExponentFit> = fits.iter().map(|f| &f.1).collect();
    rec.json("fits.json", &fits)
}
