//! Channel Hamiltonians `H = Γ¹D_x + (s + 1/2)A(x)γ⁰γ² − mB(x)γ⁰` on a grid,
//! the conjugate operator `𝒜 = Γ¹x` and the closed-form commutator `[H, i𝒜]`.
//!
//! # Discretisation
//!
//! The derivative is the second-order summation-by-parts operator `D = W⁻¹Q`
//! with `Q` the central-difference stencil (`Q_{i,i±1} = ±1/2`) closed by
//! `Q_00 = −1/2` at the hard wall and, when the last node sits on the
//! boundary, `Q_NN = 1/2`. The Hermitian form of the operator is
//! `M = −iΓ¹Q + W V`; its boundary defect `−iΓ¹·diag(Q)` vanishes on the
//! kernel `K = ker(γ¹ + i)` because `Γ¹` compresses to zero there. Nodes where a
//! boundary condition is imposed therefore carry only the two coordinates of
//! `K` (computed numerically from `γ¹ + i`), which makes the reduced matrix
//! exactly Hermitian. The same compression removes the mass term at `x = 0`,
//! where `B` is singular. With the natural condition the last node is
//! staggered at `−h/2` and the stencil continues to a zero ghost value, so `Q`
//! is skew-symmetric at that end and no boundary data are needed.
//!
//! The stored matrix is the symmetrically scaled `Ĥ = G^{−1/2} M G^{−1/2}`
//! (`G` the reduced quadrature weights), a Hermitian banded matrix in the
//! Euclidean inner product; reduced coordinates `y = G^{1/2}E*ψ` make the grid
//! norm the Euclidean norm.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::algebra::{build_algebra, DiracAlgebra};
use crate::error::{Error, Result};
use crate::geometry::{fit_slope, CoordinateMap, Params, Regime};
use crate::grid::{Endpoint, Grid, SpinorField};
use crate::linalg::{hermitian_eigen, BandMatrix, Mat4};
use crate::scalar::{cx, czero, Cx, Real};

/// Harmonic channel `(s, n)` of the index set `I`, stored as `(2s, 2n)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Channel {
    twice_s: u32,
    twice_n: i32,
}

impl Channel {
    /// `s`.
    pub fn s(&self) -> f64 {
        self.twice_s as f64 / 2.0
    }

    /// `n`.
    pub fn n(&self) -> f64 {
        self.twice_n as f64 / 2.0
    }

    /// Angular coupling `s + 1/2`.
    pub fn coupling(&self) -> f64 {
        (self.twice_s as f64 + 1.0) / 2.0
    }
}

impl std::fmt::Display for Channel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}/2, {}/2)", self.twice_s, self.twice_n)
    }
}

fn twice_half_integer(v: f64, name: &str) -> Result<i64> {
    let t = 2.0 * v;
    let r = t.round();
    if !v.is_finite() || (t - r).abs() > 1e-9 || (r as i64).rem_euclid(2) != 1 {
        return Err(Error::Validation(format!(
            "{name} = {v} is not a half-integer (ℤ + 1/2)"
        )));
    }
    Ok(r as i64)
}

/// Accepts `(s, n)` iff `s ∈ ℕ + 1/2`, `n ∈ ℤ + 1/2` and `s − |n| ∈ ℕ`.
pub fn validate_channel(s: f64, n: f64) -> Result<Channel> {
    let ts = twice_half_integer(s, "s")?;
    if ts < 1 {
        return Err(Error::Validation(format!("s = {s} must be at least 1/2")));
    }
    let tn = twice_half_integer(n, "n")?;
    if ts - tn.abs() < 0 {
        return Err(Error::Validation(format!(
            "s − |n| = {} is negative, not in ℕ",
            (ts - tn.abs()) as f64 / 2.0
        )));
    }
    Ok(Channel {
        twice_s: ts as u32,
        twice_n: tn as i32,
    })
}

/// Shared pointwise potential `x ↦ (A(x), B(x))`.
pub type PotentialFn<T> = Arc<dyn Fn(T) -> (T, T) + Send + Sync>;

/// Source of the potentials.
#[derive(Clone)]
pub enum PotentialMode<T: Real> {
    /// `A = F^{1/2}/r`, `B = F^{1/2}` of the black-hole geometry.
    Sads(CoordinateMap<T>),
    /// `A ≡ B ≡ 0`.
    Zero,
    /// Arbitrary test potentials.
    Custom(PotentialFn<T>),
}

impl<T: Real> std::fmt::Debug for PotentialMode<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PotentialMode::Sads(m) => write!(f, "Sads({:?})", m.params),
            PotentialMode::Zero => write!(f, "Zero"),
            PotentialMode::Custom(_) => write!(f, "Custom"),
        }
    }
}

/// Angular potential `A` and mass potential `B`.
#[derive(Clone, Debug)]
pub struct PotentialPair<T: Real> {
    /// Where the values come from.
    pub mode: PotentialMode<T>,
}

impl<T: Real> PotentialPair<T> {
    /// Black-hole potentials (`potentials_sads`).
    pub fn sads(p: &Params<T>) -> Self {
        Self {
            mode: PotentialMode::Sads(CoordinateMap::new(*p)),
        }
    }

    /// Vanishing potentials.
    pub fn zero() -> Self {
        Self {
            mode: PotentialMode::Zero,
        }
    }

    /// Test potentials given pointwise.
    pub fn custom(f: impl Fn(T) -> (T, T) + Send + Sync + 'static) -> Self {
        Self {
            mode: PotentialMode::Custom(Arc::new(f)),
        }
    }

    /// True for the black-hole mode.
    pub fn is_sads(&self) -> bool {
        matches!(self.mode, PotentialMode::Sads(_))
    }

    /// True for `A ≡ B ≡ 0`.
    pub fn is_zero(&self) -> bool {
        matches!(self.mode, PotentialMode::Zero)
    }

    /// `(A(x), B(x))` for `x < 0`.
    pub fn eval(&self, x: T) -> Result<(T, T)> {
        if !(x < T::zero()) {
            return Err(Error::Domain(format!(
                "potentials are defined for x < 0, got {x}"
            )));
        }
        Ok(match &self.mode {
            PotentialMode::Sads(map) => {
                let pt = map.point_of_x(x)?;
                (pt.sqrt_f / pt.r, pt.sqrt_f)
            }
            PotentialMode::Zero => (T::zero(), T::zero()),
            PotentialMode::Custom(f) => f(x),
        })
    }

    /// `A(x)`.
    pub fn a_ang(&self, x: T) -> Result<T> {
        Ok(self.eval(x)?.0)
    }

    /// `B(x)`.
    pub fn b_mass(&self, x: T) -> Result<T> {
        Ok(self.eval(x)?.1)
    }

    /// `(A(x), x·B(x))`, extended to `x = 0` by its limit (`(1/l, −l)` for the black hole).
    pub fn eval_with_limit(&self, x: T) -> Result<(T, T)> {
        if x == T::zero() {
            return Ok(match &self.mode {
                PotentialMode::Sads(map) => {
                    (T::one() / map.params.ads_length, -map.params.ads_length)
                }
                PotentialMode::Zero => (T::zero(), T::zero()),
                PotentialMode::Custom(f) => {
                    let (a, _) = f(x);
                    (a, T::zero())
                }
            });
        }
        let (a, b) = self.eval(x)?;
        Ok((a, x * b))
    }
}

/// Smooth transition equal to 0 for `x ≤ −2` and 1 for `x ≥ −1`.
fn cutoff_step(x: f64) -> f64 {
    let t = x + 2.0;
    if t <= 0.0 {
        return 0.0;
    }
    if t >= 1.0 {
        return 1.0;
    }
    let a = (-1.0 / t).exp();
    let b = (-1.0 / (1.0 - t)).exp();
    a / (a + b)
}

/// Reference profiles `(A₀, B₀)`: `A₀ = 1/l`, `B₀ = l/(−x)` near `0`, both `0` for `x ≤ −2`.
pub fn envelope_reference(x: f64, l: f64) -> (f64, f64) {
    let chi = cutoff_step(x);
    (chi / l, chi * l / (-x))
}

/// Outcome of [`envelope_check`].
#[derive(Debug, Clone, Serialize)]
pub struct EnvelopeReport {
    /// Fitted decay rate of `|A − A₀|` as `x → −∞`.
    pub horizon_exponent_a: f64,
    /// Fitted decay rate of `|B − B₀|` as `x → −∞`.
    pub horizon_exponent_b: f64,
    /// Surface gravity, the expected rate.
    pub kappa: f64,
    /// `sup |A − A₀|/x²` over the boundary sample.
    pub boundary_constant_a: f64,
    /// `sup |B − B₀|/(−x)` over the boundary sample.
    pub boundary_constant_b: f64,
    /// Largest relative spread of the boundary ratios over the innermost samples
    /// (small when the envelope bound holds with a limiting constant).
    pub max_violation_margin: f64,
    /// All envelope conditions met.
    pub pass: bool,
}

/// Checks the envelope classes of the black-hole potentials against the
/// cutoff references: exponential decay at the horizon at rate `≥ 0.95κ`, and
/// `|A − A₀| = O(x²)`, `|B − B₀| = O(−x)` at the boundary.
pub fn envelope_check(pp: &PotentialPair<f64>, p: &Params<f64>) -> Result<EnvelopeReport> {
    if !pp.is_sads() {
        return Err(Error::Configuration(
            "envelope check needs black-hole potentials".into(),
        ));
    }
    let l = p.ads_length;
    let (mut xs, mut la, mut lb) = (Vec::new(), Vec::new(), Vec::new());
    for i in 0..=40 {
        let x = -40.0 + 0.5 * i as f64;
        let (a, b) = pp.eval(x)?;
        let (a0, b0) = envelope_reference(x, l);
        xs.push(x);
        la.push((a - a0).abs().ln());
        lb.push((b - b0).abs().ln());
    }
    let horizon_exponent_a = fit_slope(&xs, &la);
    let horizon_exponent_b = fit_slope(&xs, &lb);
    let (mut ra, mut rb) = (Vec::new(), Vec::new());
    for k in 2..=12 {
        let x = -(10f64).powf(-(k as f64) / 2.0);
        let (a, b) = pp.eval(x)?;
        let (a0, b0) = envelope_reference(x, l);
        ra.push((a - a0).abs() / (x * x));
        rb.push((b - b0).abs() / (-x));
    }
    let spread = |r: &[f64]| {
        let tail = &r[r.len() - 4..];
        let hi = tail.iter().cloned().fold(f64::MIN, f64::max);
        let lo = tail.iter().cloned().fold(f64::MAX, f64::min);
        (hi - lo) / hi.max(f64::MIN_POSITIVE)
    };
    let boundary_constant_a = ra.iter().cloned().fold(0.0, f64::max);
    let boundary_constant_b = rb.iter().cloned().fold(0.0, f64::max);
    let max_violation_margin = spread(&ra).max(spread(&rb));
    let pass = horizon_exponent_a >= 0.95 * p.kappa
        && horizon_exponent_b >= 0.95 * p.kappa
        && boundary_constant_a.is_finite()
        && boundary_constant_b.is_finite()
        && max_violation_margin < 0.1;
    Ok(EnvelopeReport {
        horizon_exponent_a,
        horizon_exponent_b,
        kappa: p.kappa,
        boundary_constant_a,
        boundary_constant_b,
        max_violation_margin,
        pass,
    })
}

/// Boundary condition at `x = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryCondition {
    /// No boundary data; requires a staggered last node (`2ml ≥ 1`).
    Natural,
    /// `(γ¹ + i)ψ(0) = 0`, imposed on a node at `x = 0` (`2ml < 1`, and the comparison dynamics).
    Mit,
}

impl BoundaryCondition {
    /// Condition demanded by the regime of `2ml`.
    pub fn for_regime(r: Regime) -> Self {
        match r {
            Regime::Subcritical => BoundaryCondition::Mit,
            Regime::Critical | Regime::Supercritical => BoundaryCondition::Natural,
        }
    }

    /// Grid endpoint this condition is realised on.
    pub fn endpoint(self) -> Endpoint {
        match self {
            BoundaryCondition::Natural => Endpoint::Staggered,
            BoundaryCondition::Mit => Endpoint::OnBoundary,
        }
    }

    /// Condition for a potential pair: the regime's for black-hole potentials,
    /// the reflecting condition of the comparison dynamics otherwise.
    pub fn for_potentials<T: Real>(pp: &PotentialPair<T>, p: &Params<T>) -> Self {
        if pp.is_sads() {
            Self::for_regime(p.regime)
        } else {
            BoundaryCondition::Mit
        }
    }
}

/// Algebra constants in floating point, shared by all operators.
pub fn algebra<T: Real>() -> DiracAlgebra<T> {
    build_algebra::<T>()
}

/// Orthonormal basis of `ker(γ¹ + i)` computed numerically.
pub fn mit_kernel<T: Real>(alg: &DiracAlgebra<T>) -> Vec<[Cx<T>; 4]> {
    let m = alg.gamma[1].clone() + Mat4::identity().scale(&cx(T::zero(), T::one()));
    let g = &m.adjoint() * &m;
    let dense: Vec<Vec<Cx<T>>> = g.m.iter().map(|r| r.to_vec()).collect();
    let eig = hermitian_eigen(&dense).expect("4×4 Jacobi converges");
    let tol = T::lit(1e-10);
    let basis: Vec<[Cx<T>; 4]> = eig
        .values
        .iter()
        .zip(&eig.vectors)
        .filter(|(v, _)| v.abs() < tol)
        .map(|(_, vec)| [vec[0], vec[1], vec[2], vec[3]])
        .collect();
    assert_eq!(basis.len(), 2, "γ¹ + i must have a two-dimensional kernel");
    basis
}

/// Coordinates attached to one grid node.
#[derive(Debug, Clone)]
pub struct NodeLayout<T: Real> {
    /// First reduced index of the node.
    pub offset: usize,
    /// Orthonormal basis of the admissible spinor space at the node.
    pub basis: Vec<[Cx<T>; 4]>,
}

/// Dense `rows × cols` complex block.
pub type Block<T> = Vec<Vec<Cx<T>>>;

/// Discrete self-adjoint realisation of a channel Hamiltonian.
#[derive(Debug, Clone)]
pub struct ChannelOperator<T: Real> {
    channel: Channel,
    params: Params<T>,
    grid: Arc<Grid<T>>,
    bc: BoundaryCondition,
    potentials: PotentialPair<T>,
    layout: Vec<NodeLayout<T>>,
    sqrt_g: Vec<T>,
    potential_blocks: Vec<Mat4<T>>,
    matrix: BandMatrix<T>,
}

fn mat_vec<T: Real>(m: &Mat4<T>, v: &[Cx<T>; 4]) -> [Cx<T>; 4] {
    m.apply(v)
}

fn vdot<T: Real>(a: &[Cx<T>; 4], b: &[Cx<T>; 4]) -> Cx<T> {
    (0..4).fold(czero(), |s, k| s + a[k].conj() * b[k])
}

fn standard_basis<T: Real>() -> Vec<[Cx<T>; 4]> {
    (0..4)
        .map(|k| {
            std::array::from_fn(|j| {
                if j == k {
                    cx(T::one(), T::zero())
                } else {
                    czero()
                }
            })
        })
        .collect()
}

/// Assembles `H` with the boundary condition demanded by the potentials and regime.
pub fn assemble_hamiltonian<T: Real>(
    ch: Channel,
    p: &Params<T>,
    grid: Arc<Grid<T>>,
    pp: &PotentialPair<T>,
) -> Result<ChannelOperator<T>> {
    assemble_with_bc(ch, p, grid, pp, BoundaryCondition::for_potentials(pp, p))
}

/// Assembles `H` with an explicit boundary condition.
///
/// Errors if the condition contradicts the regime (black-hole potentials) or
/// the grid endpoint.
pub fn assemble_with_bc<T: Real>(
    ch: Channel,
    p: &Params<T>,
    grid: Arc<Grid<T>>,
    pp: &PotentialPair<T>,
    bc: BoundaryCondition,
) -> Result<ChannelOperator<T>> {
    if pp.is_sads() && bc != BoundaryCondition::for_regime(p.regime) {
        return Err(Error::Configuration(format!(
            "boundary condition {bc:?} contradicts regime {:?} (2ml = {})",
            p.regime,
            p.two_ml()
        )));
    }
    if grid.endpoint() != bc.endpoint() {
        return Err(Error::Configuration(format!(
            "boundary condition {bc:?} needs a grid with endpoint {:?}, got {:?}",
            bc.endpoint(),
            grid.endpoint()
        )));
    }
    let alg = algebra::<T>();
    let kernel = mit_kernel(&alg);
    let nodes = grid.nodes();
    let weights = grid.weights();
    let n = nodes.len();
    let g0g2 = &alg.gamma[0] * &alg.gamma[2];
    let coupling = T::lit(ch.coupling());
    let m = p.field_mass;

    // Node layouts: hard wall at node 0; boundary data at the last node for MIT.
    let mut layout = Vec::with_capacity(n);
    let mut offset = 0;
    for i in 0..n {
        let constrained = i == 0 || (i == n - 1 && bc == BoundaryCondition::Mit);
        let basis = if constrained {
            kernel.clone()
        } else {
            standard_basis()
        };
        let d = basis.len();
        layout.push(NodeLayout { offset, basis });
        offset += d;
    }
    let dim = offset;

    // Pointwise potential blocks.
    let mut potential_blocks = Vec::with_capacity(n);
    for &x in nodes {
        let block = if x == T::zero() {
            // The mass term compresses to zero on ker(γ¹ + i); only A(0) survives.
            let (a, _) = pp.eval_with_limit(x)?;
            g0g2.scale(&cx(coupling * a, T::zero()))
        } else {
            let (a, b) = pp.eval(x)?;
            g0g2.scale(&cx(coupling * a, T::zero())) - alg.gamma[0].scale(&cx(m * b, T::zero()))
        };
        potential_blocks.push(block);
    }

    // Hermitian form M = −iΓ¹Q + W V compressed to the node bases.
    let minus_i_gamma1 = alg.big_gamma1.scale(&cx(T::zero(), -T::one()));
    let half = T::lit(0.5);
    let mut entries: Vec<(usize, usize, Cx<T>)> = Vec::new();
    let mut push_block = |i: usize, j: usize, blk: &Mat4<T>, layout: &[NodeLayout<T>]| {
        for (a, ba) in layout[i].basis.iter().enumerate() {
            for (b, bb) in layout[j].basis.iter().enumerate() {
                let v = vdot(ba, &mat_vec(blk, bb));
                if v.re != T::zero() || v.im != T::zero() {
                    entries.push((layout[i].offset + a, layout[j].offset + b, v));
                }
            }
        }
    };
    for i in 0..n {
        let mut diag = potential_blocks[i].scale(&cx(weights[i], T::zero()));
        if i == 0 {
            diag = diag + minus_i_gamma1.scale(&cx(-half, T::zero()));
        }
        if i == n - 1 && bc == BoundaryCondition::Mit {
            diag = diag + minus_i_gamma1.scale(&cx(half, T::zero()));
        }
        push_block(i, i, &diag, &layout);
        if i + 1 < n {
            push_block(
                i,
                i + 1,
                &minus_i_gamma1.scale(&cx(half, T::zero())),
                &layout,
            );
            push_block(
                i + 1,
                i,
                &minus_i_gamma1.scale(&cx(-half, T::zero())),
                &layout,
            );
        }
    }
    let mut sqrt_g = vec![T::zero(); dim];
    for (i, nl) in layout.iter().enumerate() {
        for a in 0..nl.basis.len() {
            sqrt_g[nl.offset + a] = weights[i].sqrt();
        }
    }
    let band = entries
        .iter()
        .map(|&(r, c, _)| r.abs_diff(c))
        .max()
        .unwrap_or(0);
    let mut matrix = BandMatrix::zeros(dim, band, band);
    for &(r, c, v) in &entries {
        matrix.add(r, c, v / (sqrt_g[r] * sqrt_g[c]));
    }
    // Remove the O(ε) anti-Hermitian residue of the compressed boundary terms.
    for r in 0..dim {
        let (lo, hi) = matrix.row_range(r);
        for c in lo.max(r)..hi {
            let avg = (matrix.get(r, c) + matrix.get(c, r).conj()) * half;
            matrix.set(r, c, avg);
            matrix.set(c, r, avg.conj());
        }
    }
    Ok(ChannelOperator {
        channel: ch,
        params: *p,
        grid,
        bc,
        potentials: pp.clone(),
        layout,
        sqrt_g,
        potential_blocks,
        matrix,
    })
}

impl<T: Real> ChannelOperator<T> {
    /// Channel of the operator.
    pub fn channel(&self) -> Channel {
        self.channel
    }

    /// Geometry parameters.
    pub fn params(&self) -> &Params<T> {
        &self.params
    }

    /// Grid.
    pub fn grid(&self) -> &Arc<Grid<T>> {
        &self.grid
    }

    /// Boundary condition.
    pub fn bc(&self) -> BoundaryCondition {
        self.bc
    }

    /// Potentials.
    pub fn potentials(&self) -> &PotentialPair<T> {
        &self.potentials
    }

    /// Per-node reduced coordinates.
    pub fn layout(&self) -> &[NodeLayout<T>] {
        &self.layout
    }

    /// Dimension of the reduced space.
    pub fn dim(&self) -> usize {
        self.sqrt_g.len()
    }

    /// The scaled Hermitian banded matrix `Ĥ`.
    pub fn matrix(&self) -> &BandMatrix<T> {
        &self.matrix
    }

    /// Potential block `(s + 1/2)A(x_i)γ⁰γ² − mB(x_i)γ⁰` at node `i`
    /// (mass term omitted at a node on `x = 0`, where it compresses to zero).
    pub fn potential_block(&self, i: usize) -> &Mat4<T> {
        &self.potential_blocks[i]
    }

    /// Reduced, scaled coordinates `y = G^{1/2}E*ψ` of a field.
    pub fn to_reduced(&self, psi: &SpinorField<T>) -> Vec<Cx<T>> {
        let mut y = vec![czero(); self.dim()];
        for (nl, v) in self.layout.iter().zip(psi.values()) {
            for (a, b) in nl.basis.iter().enumerate() {
                let k = nl.offset + a;
                y[k] = vdot(b, v) * self.sqrt_g[k];
            }
        }
        y
    }

    /// Field with reduced coordinates `y`.
    pub fn from_reduced(&self, y: &[Cx<T>]) -> SpinorField<T> {
        let values = self
            .layout
            .iter()
            .map(|nl| {
                let mut v = [czero(); 4];
                for (a, b) in nl.basis.iter().enumerate() {
                    let k = nl.offset + a;
                    let c = y[k] / self.sqrt_g[k];
                    for j in 0..4 {
                        v[j] += b[j] * c;
                    }
                }
                v
            })
            .collect();
        SpinorField::from_values(self.grid.clone(), values).expect("layout matches grid")
    }

    /// Orthogonal projection onto fields satisfying the boundary conditions.
    pub fn project_admissible(&self, psi: &SpinorField<T>) -> SpinorField<T> {
        self.from_reduced(&self.to_reduced(psi))
    }

    /// `Hψ` for an admissible field.
    pub fn apply(&self, psi: &SpinorField<T>) -> SpinorField<T> {
        self.from_reduced(&self.matrix.matvec(&self.to_reduced(psi)))
    }

    /// Splits `Ĥ` into the `±1` eigenspaces of the reflection `S`, which commutes
    /// with every channel operator.
    ///
    /// Returns the two blocks with the isometries mapping block coordinates back
    /// to reduced coordinates, and the largest cross-coupling entry (zero up to rounding).
    pub fn symmetry_blocks(&self) -> (Vec<SymmetryBlock<T>>, T) {
        let alg = algebra::<T>();
        let s = &alg.reflection;
        // Per node: columns of the S = ±1 eigenvectors in reduced node coordinates.
        let mut node_vecs: Vec<[Vec<Vec<Cx<T>>>; 2]> = Vec::with_capacity(self.layout.len());
        for nl in &self.layout {
            let d = nl.basis.len();
            let compressed: Vec<Vec<Cx<T>>> = (0..d)
                .map(|a| {
                    (0..d)
                        .map(|b| vdot(&nl.basis[a], &s.apply(&nl.basis[b])))
                        .collect()
                })
                .collect();
            let eig = hermitian_eigen(&compressed).expect("small Jacobi converges");
            let mut plus = Vec::new();
            let mut minus = Vec::new();
            for (val, vec) in eig.values.iter().zip(eig.vectors) {
                if *val > T::zero() {
                    plus.push(vec);
                } else {
                    minus.push(vec);
                }
            }
            node_vecs.push([plus, minus]);
        }
        let n = self.layout.len();
        let mut cross = T::zero();
        let mut blocks = Vec::new();
        for sign in 0..2 {
            // Block coordinate offsets.
            let mut offs = Vec::with_capacity(n);
            let mut dim = 0;
            for nv in &node_vecs {
                offs.push(dim);
                dim += nv[sign].len();
            }
            let mut entries = Vec::new();
            for i in 0..n {
                for j in i.saturating_sub(1)..(i + 2).min(n) {
                    let hij = self.dense_node_block(i, j);
                    for (a, ua) in node_vecs[i][sign].iter().enumerate() {
                        for other in 0..2 {
                            for (b, ub) in node_vecs[j][other].iter().enumerate() {
                                let mut v = czero();
                                for (p, up) in ua.iter().enumerate() {
                                    for (q, uq) in ub.iter().enumerate() {
                                        v += up.conj() * hij[p][q] * uq;
                                    }
                                }
                                if other == sign {
                                    entries.push((offs[i] + a, offs[j] + b, v));
                                } else {
                                    cross = cross.max(v.norm());
                                }
                            }
                        }
                    }
                }
            }
            let band = entries
                .iter()
                .map(|&(r, c, _)| r.abs_diff(c))
                .max()
                .unwrap_or(0);
            let mut matrix = BandMatrix::zeros(dim, band, band);
            for (r, c, v) in entries {
                matrix.add(r, c, v);
            }
            let columns = (0..n)
                .flat_map(|i| {
                    let off = self.layout[i].offset;
                    node_vecs[i][sign]
                        .iter()
                        .map(move |u| (off, u.clone()))
                        .collect::<Vec<_>>()
                })
                .collect();
            blocks.push(SymmetryBlock { matrix, columns });
        }
        (blocks, cross)
    }

    fn dense_node_block(&self, i: usize, j: usize) -> Block<T> {
        let (ni, nj) = (&self.layout[i], &self.layout[j]);
        (0..ni.basis.len())
            .map(|a| {
                (0..nj.basis.len())
                    .map(|b| self.matrix.get(ni.offset + a, nj.offset + b))
                    .collect()
            })
            .collect()
    }
}

/// One `S`-invariant block of a channel operator.
#[derive(Debug, Clone)]
pub struct SymmetryBlock<T: Real> {
    /// Hermitian banded block matrix.
    pub matrix: BandMatrix<T>,
    /// For each block coordinate: reduced offset of its node and the coefficients
    /// of the block basis vector in that node's reduced coordinates.
    pub columns: Vec<(usize, Vec<Cx<T>>)>,
}

impl<T: Real> SymmetryBlock<T> {
    /// Lifts a block vector to reduced coordinates of the full operator.
    pub fn lift(&self, v: &[Cx<T>], dim: usize) -> Vec<Cx<T>> {
        let mut out = vec![czero(); dim];
        for ((off, coeffs), &c) in self.columns.iter().zip(v) {
            for (p, u) in coeffs.iter().enumerate() {
                out[off + p] += *u * c;
            }
        }
        out
    }
}

/// Conjugate operator `𝒜 = Γ¹x`: component `k` at node `x_i` multiplied by `Γ¹_kk·x_i`.
pub fn conjugate_apply<T: Real>(field: &SpinorField<T>) -> SpinorField<T> {
    let signs = [T::one(), -T::one(), -T::one(), T::one()];
    let values = field
        .values()
        .iter()
        .zip(field.grid().nodes())
        .map(|(v, &x)| std::array::from_fn(|k| v[k] * (signs[k] * x)))
        .collect();
    SpinorField::from_values(field.grid().clone(), values).expect("same grid")
}

/// Pointwise operator field (one 4×4 block per node).
#[derive(Debug, Clone)]
pub struct PointwiseOperator<T: Real> {
    /// Blocks per node.
    pub blocks: Vec<Mat4<T>>,
}

impl<T: Real> PointwiseOperator<T> {
    /// Applies the blocks node by node.
    pub fn apply(&self, field: &SpinorField<T>) -> SpinorField<T> {
        let values = field
            .values()
            .iter()
            .zip(&self.blocks)
            .map(|(v, b)| b.apply(v))
            .collect();
        SpinorField::from_values(field.grid().clone(), values).expect("same grid")
    }

    /// Largest `|B − B*|` entry over all nodes.
    pub fn hermitian_defect(&self) -> T {
        self.blocks
            .iter()
            .map(|b| {
                let d = b.clone() - b.adjoint();
                d.m.iter().flatten().fold(T::zero(), |a, z| a.max(z.norm()))
            })
            .fold(T::zero(), T::max)
    }

    /// `Σ_i w_i u_i* B_i v_i`, the sesquilinear form in the grid inner product.
    pub fn form(&self, u: &SpinorField<T>, v: &SpinorField<T>) -> Cx<T> {
        let w = u.grid().weights();
        u.values()
            .iter()
            .zip(v.values())
            .zip(&self.blocks)
            .zip(w)
            .fold(czero(), |acc, (((a, b), blk), &wi)| {
                acc + vdot(a, &blk.apply(b)) * wi
            })
    }
}

/// Closed-form commutator `[H, i𝒜] = 𝟙 + 2i(s + 1/2)xA γ²γ¹ + 2imxB γ¹` on the grid
/// (with `x·B` replaced by its limit at a node on `x = 0`).
pub fn commutator_closed_form<T: Real>(
    ch: Channel,
    p: &Params<T>,
    pp: &PotentialPair<T>,
    grid: &Grid<T>,
) -> Result<PointwiseOperator<T>> {
    let alg = algebra::<T>();
    let g2g1 = &alg.gamma[2] * &alg.gamma[1];
    let coupling = T::lit(ch.coupling());
    let two = T::lit(2.0);
    let blocks = grid
        .nodes()
        .iter()
        .map(|&x| {
            let (a, xb) = pp.eval_with_limit(x)?;
            Ok(Mat4::identity()
                + g2g1.scale(&cx(T::zero(), two * coupling * x * a))
                + alg.gamma[1].scale(&cx(T::zero(), two * p.field_mass * xb)))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PointwiseOperator { blocks })
}

/// Applies `M_d·(Dψ) + V(x_i)ψ` with the interior central difference `D`
/// (rows of the end nodes are zero; intended for interior-supported fields).
pub fn apply_interior<T: Real>(
    field: &SpinorField<T>,
    derivative_matrix: &Mat4<T>,
    potential: impl Fn(usize) -> Mat4<T>,
) -> SpinorField<T> {
    let g = field.grid();
    let x = g.nodes();
    let v = field.values();
    let n = v.len();
    let mut out = vec![[czero(); 4]; n];
    for i in 1..n - 1 {
        let inv = T::one() / (x[i + 1] - x[i - 1]);
        let d: [Cx<T>; 4] = std::array::from_fn(|k| (v[i + 1][k] - v[i - 1][k]) * inv);
        let a = derivative_matrix.apply(&d);
        let b = potential(i).apply(&v[i]);
        out[i] = std::array::from_fn(|k| a[k] + b[k]);
    }
    SpinorField::from_values(g.clone(), out).expect("same grid")
}

/// Brute-force discrete commutator `i(H𝒜 − 𝒜H)ψ` with the interior stencil.
pub fn discrete_commutator<T: Real>(
    op: &ChannelOperator<T>,
    psi: &SpinorField<T>,
) -> SpinorField<T> {
    let alg = algebra::<T>();
    let dmat = alg.big_gamma1.scale(&cx(T::zero(), -T::one()));
    let h = |f: &SpinorField<T>| apply_interior(f, &dmat, |i| op.potential_block(i).clone());
    let ha = h(&conjugate_apply(psi));
    let ah = conjugate_apply(&h(psi));
    ha.sub(&ah).scaled(cx(T::zero(), T::one()))
}

/// Residual `‖Hψ − Pγ⁵_B(−H̃)γ⁵_B P⁻¹ψ‖/‖ψ‖` maximised over the given interior fields,
/// with `H̃ = iγ⁰_Bγ¹_B∂_x + (s + 1/2)Aγ⁰_Bγ²_B − mBγ⁰_B` assembled in Bachelot's representation.
pub fn transform_consistency<T: Real>(
    op: &ChannelOperator<T>,
    fields: &[SpinorField<T>],
) -> Result<T> {
    let alg = algebra::<T>();
    let i = cx(T::zero(), T::one());
    let gb = &alg.gamma_b;
    let dmat_b = (&gb[0] * &gb[1]).scale(&i);
    let g0g2_b = &gb[0] * &gb[2];
    let coupling = T::lit(op.channel.coupling());
    let m = op.params.field_mass;
    let grid = op.grid.clone();
    let pots = grid
        .nodes()
        .iter()
        .map(|&x| {
            if x < T::zero() {
                op.potentials.eval(x)
            } else {
                Ok((T::zero(), T::zero()))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let h_tilde = |f: &SpinorField<T>| {
        apply_interior(f, &dmat_b, |k| {
            let (a, b) = pots[k];
            g0g2_b.scale(&cx(coupling * a, T::zero())) - gb[0].scale(&cx(m * b, T::zero()))
        })
    };
    let dmat = alg.big_gamma1.scale(&cx(T::zero(), -T::one()));
    let pointwise = |mat: &Mat4<T>, f: &SpinorField<T>| {
        PointwiseOperator {
            blocks: vec![mat.clone(); f.grid().len()],
        }
        .apply(f)
    };
    let left = &alg.p * &alg.gamma5_b;
    let right = &alg.gamma5_b * &alg.p_inv;
    let mut worst = T::zero();
    for f in fields {
        let direct = apply_interior(f, &dmat, |k| op.potential_block(k).clone());
        let transformed =
            pointwise(&left, &h_tilde(&pointwise(&right, f))).scaled(cx(-T::one(), T::zero()));
        let r = direct.sub(&transformed).norm() / f.norm().max(T::min_positive_value());
        worst = worst.max(r);
    }
    Ok(worst)
}
