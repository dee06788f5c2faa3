//! Discrete spectral experiments: eigenpairs of channel operators, Mourre
//! positivity of the commutator with `𝒜 = Γ¹x` on spectral windows, the
//! fundamental-matrix test for absence of eigenvalues, and boundary exponents of
//! resolvent solutions.
//!
//! Eigenpairs are computed per `S`-symmetry block by Sturm bisection on the
//! unitarily tridiagonalised block, inverse iteration with one factorisation per eigenvalue, and Rayleigh–Ritz on
//! clusters of close eigenvalues.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{algebra, commutator_closed_form, Channel, ChannelOperator, PotentialPair};
use crate::error::{Error, Result};
use crate::geometry::{Params, Regime};
use crate::grid::{Grid, SpinorField};
use crate::linalg::{dot, hermitian_eigen, norm, BandLu, BandMatrix, Mat4};
use crate::ode::{dormand_prince, OdeOptions};
use crate::scalar::{cx, czero, Cx, Real};

/// Largest matrix dimension accepted by [`eigendecompose`].
pub const MAX_DENSE_DIMENSION: usize = 4 * 4096;

/// Eigenvalues below this relative gap are treated as one cluster.
const CLUSTER_GAP: f64 = 1e-5;

/// Eigenpairs of a channel operator (all of them, or those in a window).
///
/// Eigenvectors are stored in the operator's reduced coordinates, where the
/// grid inner product is the Euclidean one; use
/// [`ChannelOperator::from_reduced`] to obtain spinor fields.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition<T: Real> {
    /// Eigenvalues in ascending order.
    pub eigenvalues: Vec<T>,
    /// Orthonormal eigenvectors; `eigenvectors[k]` belongs to `eigenvalues[k]`.
    pub eigenvectors: Vec<Vec<Cx<T>>>,
    /// Grid of the operator.
    pub grid: Arc<Grid<T>>,
    /// Half-open window `[lo, hi)` that was resolved.
    pub window: (T, T),
    /// `max ‖Ĥv − λv‖ / ‖Ĥ‖`.
    pub max_residual: T,
    /// `max |⟨v_i, v_j⟩ − δ_ij|`.
    pub orthonormality_defect: T,
}

/// Tolerance of the residual and orthonormality invariants.
pub const EIGEN_TOLERANCE: f64 = 1e-10;

/// All eigenpairs of `op` (dimension at most [`MAX_DENSE_DIMENSION`]).
///
/// The cost grows like `dim²`; for windows of the spectrum use [`eigen_window`].
pub fn eigendecompose<T: Real>(op: &ChannelOperator<T>) -> Result<SpectralDecomposition<T>> {
    if op.dim() > MAX_DENSE_DIMENSION {
        return Err(Error::Configuration(format!(
            "full decomposition limited to dimension {MAX_DENSE_DIMENSION}, got {}",
            op.dim()
        )));
    }
    let r = op.matrix().norm_inf() * T::lit(1.0 + 1e-8) + T::one();
    eigen_window(op, -r, r)
}

/// Number of eigenvalues of `op` in `[lo, hi)` from Sturm counts on the
/// tridiagonalised symmetry blocks.
pub fn eigenvalue_count<T: Real>(op: &ChannelOperator<T>, lo: T, hi: T) -> usize {
    let (blocks, _) = op.symmetry_blocks();
    blocks
        .iter()
        .map(|b| {
            let tri = b.matrix.tridiagonalize();
            tri.count_below(hi).saturating_sub(tri.count_below(lo))
        })
        .sum()
}

/// Eigenpairs of `op` with eigenvalues in `[lo, hi)`.
///
/// Every pair is checked against the residual and orthonormality invariants;
/// a violation is reported as a numeric error.
pub fn eigen_window<T: Real>(
    op: &ChannelOperator<T>,
    lo: T,
    hi: T,
) -> Result<SpectralDecomposition<T>> {
    if !(lo < hi) {
        return Err(Error::Configuration(format!(
            "empty spectral window [{lo}, {hi})"
        )));
    }
    let (blocks, _) = op.symmetry_blocks();
    let dim = op.dim();
    let mut pairs: Vec<(T, Vec<Cx<T>>)> = Vec::new();
    for (b, block) in blocks.iter().enumerate() {
        let (vals, vecs) = block_window(&block.matrix, lo, hi, 0x5eed + b as u64)?;
        for (v, y) in vals.into_iter().zip(vecs) {
            pairs.push((v, block.lift(&y, dim)));
        }
    }
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite eigenvalues"));
    let (eigenvalues, eigenvectors): (Vec<T>, Vec<Vec<Cx<T>>>) = pairs.into_iter().unzip();

    let matrix = op.matrix();
    let scale = matrix.norm_inf().max(T::min_positive_value());
    let mut max_residual = T::zero();
    for (lam, v) in eigenvalues.iter().zip(&eigenvectors) {
        let hv = matrix.matvec(v);
        let r = hv
            .iter()
            .zip(v)
            .fold(T::zero(), |acc, (a, b)| acc + (*a - *b * *lam).norm_sqr())
            .sqrt();
        max_residual = max_residual.max(r / scale);
    }
    let mut orthonormality_defect = T::zero();
    for i in 0..eigenvectors.len() {
        for j in i..eigenvectors.len() {
            let d = dot(&eigenvectors[i], &eigenvectors[j]);
            let target = if i == j { T::one() } else { T::zero() };
            orthonormality_defect = orthonormality_defect.max((d - cx(target, T::zero())).norm());
        }
    }
    let tol = T::lit(EIGEN_TOLERANCE);
    if max_residual > tol || orthonormality_defect > tol {
        return Err(Error::Numeric(format!(
            "eigenpairs fail invariants: residual {:e}, orthonormality {:e}",
            max_residual.to_f64_lossy(),
            orthonormality_defect.to_f64_lossy()
        )));
    }
    Ok(SpectralDecomposition {
        eigenvalues,
        eigenvectors,
        grid: op.grid().clone(),
        window: (lo, hi),
        max_residual,
        orthonormality_defect,
    })
}

impl<T: Real> SpectralDecomposition<T> {
    /// Number of pairs.
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Whether the window holds no eigenvalue.
    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Eigenvector `k` as a spinor field.
    pub fn field(&self, op: &ChannelOperator<T>, k: usize) -> SpinorField<T> {
        op.from_reduced(&self.eigenvectors[k])
    }
}

/// Eigenpairs of one Hermitian band matrix in `[lo, hi)`.
fn block_window<T: Real>(
    m: &BandMatrix<T>,
    lo: T,
    hi: T,
    seed: u64,
) -> Result<(Vec<T>, Vec<Vec<Cx<T>>>)> {
    let n = m.order();
    let scale = m.norm_inf().max(T::min_positive_value());
    let tri = m.tridiagonalize();
    let (clo, chi) = (tri.count_below(lo), tri.count_below(hi));
    if chi <= clo {
        return Ok((Vec::new(), Vec::new()));
    }
    // Sturm bisection, sharing counts between neighbouring eigenvalues.
    let tol = T::lit(1e-12) * scale;
    let mut approx: Vec<T> = Vec::with_capacity(chi - clo);
    let mut stack = vec![(lo, clo, hi, chi)];
    while let Some((a, ca, b, cb)) = stack.pop() {
        if cb <= ca {
            continue;
        }
        if b - a <= tol {
            let mid = (a + b) * T::lit(0.5);
            approx.extend(std::iter::repeat(mid).take(cb - ca));
            continue;
        }
        let mid = (a + b) * T::lit(0.5);
        let cm = tri.count_below(mid).clamp(ca, cb);
        // Upper half first so that the lower half is processed first (LIFO).
        stack.push((mid, cm, b, cb));
        stack.push((a, ca, mid, cm));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gap = T::lit(CLUSTER_GAP) * scale;
    let mut values = Vec::with_capacity(approx.len());
    let mut vectors: Vec<Vec<Cx<T>>> = Vec::with_capacity(approx.len());
    let mut start = 0;
    while start < approx.len() {
        let mut end = start + 1;
        while end < approx.len() && approx[end] - approx[end - 1] <= gap {
            end += 1;
        }
        let mut cluster: Vec<Vec<Cx<T>>> = Vec::with_capacity(end - start);
        for &sigma in &approx[start..end] {
            let lu = shifted_lu(m, sigma, scale)?;
            let mut v: Vec<Cx<T>> = (0..n)
                .map(|_| {
                    cx(
                        T::lit(rng.gen::<f64>() - 0.5),
                        T::lit(rng.gen::<f64>() - 0.5),
                    )
                })
                .collect();
            for _ in 0..3 {
                lu.solve_in_place(&mut v);
                orthonormalise_against(&mut v, &cluster)?;
            }
            cluster.push(v);
        }
        // Rayleigh–Ritz on the cluster subspace.
        let hv: Vec<Vec<Cx<T>>> = cluster.iter().map(|v| m.matvec(v)).collect();
        let small: Vec<Vec<Cx<T>>> = cluster
            .iter()
            .map(|vi| hv.iter().map(|hj| dot(vi, hj)).collect())
            .collect();
        let eig = hermitian_eigen(&small)?;
        for (val, coeffs) in eig.values.iter().zip(&eig.vectors) {
            let mut w = vec![czero::<T>(); n];
            for (c, v) in coeffs.iter().zip(&cluster) {
                for (wi, vi) in w.iter_mut().zip(v) {
                    *wi += *vi * *c;
                }
            }
            values.push(*val);
            vectors.push(w);
        }
        start = end;
    }
    Ok((values, vectors))
}

/// Factorises `m − σ` and nudges `σ` if it hits an eigenvalue exactly.
fn shifted_lu<T: Real>(m: &BandMatrix<T>, sigma: T, scale: T) -> Result<BandLu<T>> {
    let mut shift = sigma;
    for attempt in 0..4 {
        match BandLu::new(&m.shifted(cx(-shift, T::zero()), cx(T::one(), T::zero()))) {
            Ok(lu) => return Ok(lu),
            Err(_) => shift = sigma + T::lit(1e-13 * f64::from(attempt + 1)) * scale,
        }
    }
    Err(Error::Numeric(format!(
        "inverse iteration could not factorise at shift {sigma}"
    )))
}

/// Twice-repeated modified Gram–Schmidt against `basis`, then normalisation.
fn orthonormalise_against<T: Real>(v: &mut [Cx<T>], basis: &[Vec<Cx<T>>]) -> Result<()> {
    for _ in 0..2 {
        for q in basis {
            let c = dot(q, v);
            for (vi, qi) in v.iter_mut().zip(q) {
                *vi -= *qi * c;
            }
        }
    }
    let nv = norm(v);
    if !(nv > T::zero()) || !nv.is_finite() {
        return Err(Error::Numeric(
            "inverse iteration produced a degenerate vector".into(),
        ));
    }
    for vi in v.iter_mut() {
        *vi = *vi / nv;
    }
    Ok(())
}

/// Mourre positivity of `[H, i𝒜]` on one spectral window.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MourreReport {
    /// Window `I = [lo, hi)`.
    pub interval: (f64, f64),
    /// Allowed deficit `ε`.
    pub epsilon: f64,
    /// `dim ran P_I`.
    pub eigen_count: usize,
    /// Smallest eigenvalue of `P_I C P_I` on `ran P_I` (Rayleigh–Ritz minimum).
    pub min_quotient: f64,
    /// Largest eigenvalue of `P_I C P_I` on `ran P_I`.
    pub max_quotient: f64,
    /// Compact-correction magnitude `η = ‖P_I (C − 𝟙) P_I‖`.
    pub eta: f64,
    /// `min_quotient ≥ (1 − ε) − η`.
    pub pass: bool,
    /// `min_quotient ≥ 1 − ε` (positivity without any correction).
    pub strict_pass: bool,
    /// Mean eigenvalue spacing in the window.
    pub level_spacing: f64,
}

/// Smallest number of eigenvalues a window must contain to count as resolved.
pub const MIN_WINDOW_LEVELS: usize = 10;

/// Compresses the closed-form commutator `C = [H, i𝒜]` to `ran P_I` and reports
/// its spectrum.
///
/// Fails with a configuration error when `I` holds fewer than
/// [`MIN_WINDOW_LEVELS`] eigenvalues.
pub fn mourre_check(
    op: &ChannelOperator<f64>,
    interval: (f64, f64),
    epsilon: f64,
) -> Result<MourreReport> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::Configuration(format!(
            "ε must lie in (0, 1), got {epsilon}"
        )));
    }
    let (lo, hi) = interval;
    let count = eigenvalue_count(op, lo, hi);
    if count < MIN_WINDOW_LEVELS {
        return Err(Error::Configuration(format!(
            "window [{lo}, {hi}) holds {count} eigenvalues; at least {MIN_WINDOW_LEVELS} are needed"
        )));
    }
    let dec = eigen_window(op, lo, hi)?;
    let c = commutator_closed_form(op.channel(), op.params(), op.potentials(), op.grid())?;
    let fields: Vec<SpinorField<f64>> = (0..dec.len()).map(|k| dec.field(op, k)).collect();
    let compressed: Vec<Vec<Cx<f64>>> = fields
        .iter()
        .map(|u| fields.iter().map(|v| c.form(u, v)).collect())
        .collect();
    // Hermitise against rounding before the small eigen-solve.
    let k = compressed.len();
    let herm: Vec<Vec<Cx<f64>>> = (0..k)
        .map(|i| {
            (0..k)
                .map(|j| (compressed[i][j] + compressed[j][i].conj()) * 0.5)
                .collect()
        })
        .collect();
    let eig = hermitian_eigen(&herm)?;
    let min_quotient = eig.values[0];
    let max_quotient = eig.values[k - 1];
    let eta = eig
        .values
        .iter()
        .fold(0.0f64, |a, v| a.max((v - 1.0).abs()));
    let spread = dec.eigenvalues[k - 1] - dec.eigenvalues[0];
    Ok(MourreReport {
        interval,
        epsilon,
        eigen_count: k,
        min_quotient,
        max_quotient,
        eta,
        pass: min_quotient >= (1.0 - epsilon) - eta,
        strict_pass: min_quotient >= 1.0 - epsilon,
        level_spacing: if k > 1 {
            spread / (k - 1) as f64
        } else {
            f64::NAN
        },
    })
}

/// Outcome of a Mourre check compared across one grid refinement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MourreVerdict {
    /// Passes on both grids and the quotient is refinement-stable.
    Pass,
    /// Fails on the refined grid and the quotient is refinement-stable.
    Fail,
    /// The quotient moves by more than the stability tolerance.
    Inconclusive,
}

/// Mourre checks on a grid and its refinement.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MourreRefinement {
    /// Report on the coarse grid.
    pub coarse: MourreReport,
    /// Report on the refined grid.
    pub fine: MourreReport,
    /// `|min_quotient(fine) − min_quotient(coarse)|`.
    pub quotient_change: f64,
    /// Combined verdict.
    pub verdict: MourreVerdict,
}

/// Largest quotient change under refinement that still counts as stable.
pub const MOURRE_STABILITY: f64 = 0.05;

/// Runs [`mourre_check`] on `coarse` and `fine` and classifies the pair.
///
/// `strict` selects the uncorrected criterion `min_quotient ≥ 1 − ε`.
pub fn mourre_refinement(
    coarse: &ChannelOperator<f64>,
    fine: &ChannelOperator<f64>,
    interval: (f64, f64),
    epsilon: f64,
    strict: bool,
) -> Result<MourreRefinement> {
    let (a, b) = rayon::join(
        || mourre_check(coarse, interval, epsilon),
        || mourre_check(fine, interval, epsilon),
    );
    let (coarse, fine) = (a?, b?);
    let quotient_change = (fine.min_quotient - coarse.min_quotient).abs();
    let passed = |r: &MourreReport| if strict { r.strict_pass } else { r.pass };
    let verdict = if quotient_change > MOURRE_STABILITY {
        MourreVerdict::Inconclusive
    } else if passed(&coarse) && passed(&fine) {
        MourreVerdict::Pass
    } else {
        MourreVerdict::Fail
    };
    Ok(MourreRefinement {
        coarse,
        fine,
        quotient_change,
        verdict,
    })
}

/// Mourre checks on nested windows `[λ − w, λ + w)` for each half-width `w`.
pub fn mourre_shrink(
    op: &ChannelOperator<f64>,
    centre: f64,
    half_widths: &[f64],
    epsilon: f64,
) -> Result<Vec<MourreReport>> {
    half_widths
        .iter()
        .map(|&w| mourre_check(op, (centre - w, centre + w), epsilon))
        .collect()
}

/// Settings of [`no_eigenvalue_test`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoEigenvalueOptions {
    /// Fixed end point `x₀` of the propagation.
    pub x0: f64,
    /// Relative tolerance of the ODE integrator.
    pub rtol: f64,
    /// Largest accepted `‖Φ(−X, x₀) − Φ(−2X, x₀)‖_F`.
    pub convergence_tol: f64,
    /// Largest accepted condition number of `Φ(−2X, x₀)`.
    pub max_condition: f64,
}

impl Default for NoEigenvalueOptions {
    fn default() -> Self {
        Self {
            x0: -1.0,
            rtol: 1e-10,
            convergence_tol: 1e-8,
            max_condition: 1e3,
        }
    }
}

/// Fundamental-matrix evidence that `Hψ = λψ` has no solution decaying at the horizon.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NoEigenvalueReport {
    /// Spectral parameter `λ`.
    pub lambda: f64,
    /// Depth `X`.
    pub depth: f64,
    /// End point `x₀`.
    pub x0: f64,
    /// `Φ(−2X, x₀)` as `(re, im)` entries.
    pub propagation: [[(f64, f64); 4]; 4],
    /// `‖Φ(−X, x₀) − Φ(−2X, x₀)‖_F`.
    pub convergence: f64,
    /// 2-norm condition number of `Φ(−2X, x₀)`.
    pub condition: f64,
    /// `∫_{−2X}^{−X} ‖W‖_F dx`.
    pub tail_integral: f64,
    /// `∫_{−2X}^{x₀} ‖W‖_F dx`.
    pub total_integral: f64,
    /// Accepted ODE steps.
    pub steps: usize,
    /// Convergence and conditioning both within their limits.
    pub invertible_limit: bool,
}

type C4 = [[Cx<f64>; 4]; 4];

fn mat_mul(a: &C4, b: &C4) -> C4 {
    std::array::from_fn(|i| {
        std::array::from_fn(|j| (0..4).fold(czero(), |s, k| s + a[i][k] * b[k][j]))
    })
}

/// Integrates `w′ = W(x)w`, `W = iγ⁰γ¹ e^{iλγ⁰γ¹x} V e^{−iλγ⁰γ¹x}`, for the
/// 4×4 fundamental matrix from `−2X` and from `−X` to `x₀`, and tests whether
/// the propagation matrix has an invertible limit as `X → ∞`.
pub fn no_eigenvalue_test(
    lambda: f64,
    ch: Channel,
    p: &Params<f64>,
    pp: &PotentialPair<f64>,
    depth: f64,
    opts: &NoEigenvalueOptions,
) -> Result<NoEigenvalueReport> {
    if !lambda.is_finite() {
        return Err(Error::Domain(format!(
            "λ must be real and finite, got {lambda}"
        )));
    }
    if !(depth > 0.0) || -depth >= opts.x0 || opts.x0 >= 0.0 {
        return Err(Error::Configuration(format!(
            "need −X < x₀ < 0, got X = {depth}, x₀ = {}",
            opts.x0
        )));
    }
    let alg = algebra::<f64>();
    let g = &alg.gamma[0] * &alg.gamma[1];
    if !g.is_diagonal() {
        return Err(Error::Numeric(
            "γ⁰γ¹ is expected to be diagonal in the chosen representation".into(),
        ));
    }
    let gdiag: [f64; 4] = std::array::from_fn(|k| g.m[k][k].re);
    let g0g2 = &alg.gamma[0] * &alg.gamma[2];
    let coupling = ch.coupling();
    let mass = p.field_mass;
    let gamma0 = alg.gamma[0].clone();

    // W(x) and ‖V(x)‖_F.
    let w_at = |x: f64| -> Result<(C4, f64)> {
        let (a, b) = pp.eval(x)?;
        let v: Mat4<f64> = g0g2.scale(&cx(coupling * a, 0.0)) - gamma0.scale(&cx(mass * b, 0.0));
        let vnorm =
            v.m.iter()
                .flatten()
                .map(|z| z.norm_sqr())
                .sum::<f64>()
                .sqrt();
        let w: C4 = std::array::from_fn(|j| {
            std::array::from_fn(|k| {
                let phase = Cx::from_polar(1.0, lambda * (gdiag[j] - gdiag[k]) * x);
                cx(0.0, gdiag[j]) * phase * v.m[j][k]
            })
        });
        Ok((w, vnorm))
    };
    // State: 16 complex entries of Φ (row-major, re/im interleaved) then ∫‖W‖.
    let failure = std::sync::Mutex::new(None::<Error>);
    let rhs = |x: f64, y: &[f64], dy: &mut [f64]| match w_at(x) {
        Ok((w, vnorm)) => {
            for i in 0..4 {
                for j in 0..4 {
                    let mut acc = czero::<f64>();
                    for (k, wik) in w[i].iter().enumerate() {
                        acc += *wik * cx(y[2 * (4 * k + j)], y[2 * (4 * k + j) + 1]);
                    }
                    dy[2 * (4 * i + j)] = acc.re;
                    dy[2 * (4 * i + j) + 1] = acc.im;
                }
            }
            dy[32] = vnorm;
        }
        Err(e) => {
            dy.iter_mut().for_each(|d| *d = f64::NAN);
            *failure.lock().expect("unpoisoned") = Some(e);
        }
    };
    let identity_state = || {
        let mut y = vec![0.0; 33];
        for i in 0..4 {
            y[2 * (4 * i + i)] = 1.0;
        }
        y
    };
    let ode = OdeOptions {
        rtol: opts.rtol,
        ..OdeOptions::default()
    };
    let integrate = |from: f64, to: f64| -> Result<(C4, f64, usize)> {
        let out = dormand_prince(rhs, from, &identity_state(), to, &ode);
        if let Some(e) = failure.lock().expect("unpoisoned").take() {
            return Err(e);
        }
        let (y, stats) = out?;
        let phi: C4 = std::array::from_fn(|i| {
            std::array::from_fn(|j| cx(y[2 * (4 * i + j)], y[2 * (4 * i + j) + 1]))
        });
        Ok((phi, y[32], stats.accepted))
    };
    // Φ(−2X, x₀) = Φ(−X, x₀)·Φ(−2X, −X) by the group property.
    let (near, near_int, s1) = integrate(-depth, opts.x0)?;
    let (tail, tail_int, s2) = integrate(-2.0 * depth, -depth)?;
    let full = mat_mul(&near, &tail);
    let convergence = (0..4)
        .flat_map(|i| (0..4).map(move |j| (i, j)))
        .map(|(i, j)| (near[i][j] - full[i][j]).norm_sqr())
        .sum::<f64>()
        .sqrt();
    let gram: Vec<Vec<Cx<f64>>> = (0..4)
        .map(|i| {
            (0..4)
                .map(|j| (0..4).fold(czero(), |s, k| s + full[k][i].conj() * full[k][j]))
                .collect()
        })
        .collect();
    let sv = hermitian_eigen(&gram)?;
    let condition = if sv.values[0] > 0.0 {
        (sv.values[3] / sv.values[0]).sqrt()
    } else {
        f64::INFINITY
    };
    Ok(NoEigenvalueReport {
        lambda,
        depth,
        x0: opts.x0,
        propagation: std::array::from_fn(|i| {
            std::array::from_fn(|j| (full[i][j].re, full[i][j].im))
        }),
        convergence,
        condition,
        tail_integral: tail_int,
        total_integral: tail_int + near_int,
        steps: s1 + s2,
        invertible_limit: convergence <= opts.convergence_tol && condition <= opts.max_condition,
    })
}

/// Status of a boundary-exponent fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitStatus {
    /// A slope was fitted.
    Fitted,
    /// The solution vanishes near the boundary; there is nothing to fit.
    NoBoundaryTail,
    /// `2ml = 1`: the `√(−x)·log(−x)` behaviour is reported but not fitted.
    CriticalNotFitted,
}

/// Log–log fit of `|u(x)|` against `−x` near conformal infinity.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExponentFit {
    /// Fit outcome.
    pub status: FitStatus,
    /// Fitted exponent (slope of `log|u|` against `log(−x)`).
    pub slope: Option<f64>,
    /// Range of `−x` used for the fit.
    pub window: (f64, f64),
    /// Number of nodes in the window.
    pub points: usize,
    /// Root-mean-square residual of the linear fit.
    pub rms_residual: Option<f64>,
    /// `(−x, |u(x)|)` over the window.
    pub profile: Vec<(f64, f64)>,
    /// Regime of `2ml`.
    pub regime: Regime,
    /// Theoretical target: lower bound `1/2` for `2ml > 1`, value `−ml` for `2ml < 1`.
    pub target: Option<f64>,
}

/// Relative size below which the boundary tail of a solution counts as absent.
const TAIL_FLOOR: f64 = 1e-10;

/// Solves `(H − z)u = f` with one banded factorisation.
pub fn resolvent_solve(
    op: &ChannelOperator<f64>,
    z: Cx<f64>,
    f: &SpinorField<f64>,
) -> Result<SpinorField<f64>> {
    if z.im == 0.0 {
        return Err(Error::Domain(format!(
            "resolvent probe needs Im z ≠ 0, got {z}"
        )));
    }
    let lu = BandLu::new(&op.matrix().shifted(-z, cx(1.0, 0.0)))?;
    Ok(op.from_reduced(&lu.solve(&op.to_reduced(f))))
}

/// Right-hand side `f = (H − z)u` for a given admissible `u` (manufactured data).
pub fn manufactured_data(
    op: &ChannelOperator<f64>,
    z: Cx<f64>,
    u: &SpinorField<f64>,
) -> SpinorField<f64> {
    let y = op.to_reduced(u);
    let hy = op.matrix().matvec(&y);
    let r: Vec<Cx<f64>> = hy.iter().zip(&y).map(|(a, b)| *a - *b * z).collect();
    op.from_reduced(&r)
}

/// Solves `(H − z)u = f` and fits `log|u|` against `log(−x)` over the lowest
/// decade of `−x` values, excluding the three nodes closest to the boundary.
pub fn boundary_exponent_fit(
    op: &ChannelOperator<f64>,
    z: Cx<f64>,
    f: &SpinorField<f64>,
) -> Result<ExponentFit> {
    let p = op.params();
    let regime = p.regime;
    let ml = p.field_mass * p.ads_length;
    let target = match regime {
        Regime::Supercritical => Some(0.5),
        Regime::Subcritical => Some(-ml),
        Regime::Critical => None,
    };
    let nodes = op.grid().nodes();
    let n = nodes.len();
    let start = -nodes[n - 4];
    let window = (start, 10.0 * start);
    if !(start > 0.0) || window.1 >= -nodes[0] {
        return Err(Error::Configuration(format!(
            "grid does not resolve a boundary decade: −x ∈ [{}, {}]",
            window.0, window.1
        )));
    }
    let idx: Vec<usize> = (0..n - 3).filter(|&i| -nodes[i] <= window.1).collect();
    let fmax = f.values().iter().map(|v| norm(v)).fold(0.0, f64::max);
    if idx
        .iter()
        .any(|&i| norm(&f.values()[i]) > 1e-14 * fmax.max(f64::MIN_POSITIVE))
    {
        return Err(Error::Validation(
            "data must vanish on the fitting window near the boundary".into(),
        ));
    }
    let u = resolvent_solve(op, z, f)?;
    let mags: Vec<f64> = u.values().iter().map(|v| norm(v)).collect();
    let umax = mags.iter().copied().fold(0.0, f64::max);
    let profile: Vec<(f64, f64)> = idx.iter().map(|&i| (-nodes[i], mags[i])).collect();
    let base = ExponentFit {
        status: FitStatus::Fitted,
        slope: None,
        window,
        points: profile.len(),
        rms_residual: None,
        profile,
        regime,
        target,
    };
    let tail = base.profile.iter().map(|&(_, m)| m).fold(0.0, f64::max);
    if !(tail > TAIL_FLOOR * umax) || base.profile.iter().any(|&(_, m)| m <= 0.0) {
        return Ok(ExponentFit {
            status: FitStatus::NoBoundaryTail,
            ..base
        });
    }
    if regime == Regime::Critical {
        return Ok(ExponentFit {
            status: FitStatus::CriticalNotFitted,
            ..base
        });
    }
    if base.points < 3 {
        return Err(Error::Configuration(format!(
            "only {} nodes in the boundary decade; grade the grid more finely",
            base.points
        )));
    }
    let pts: Vec<(f64, f64)> = base
        .profile
        .iter()
        .map(|&(r, m)| (r.ln(), m.ln()))
        .collect();
    let k = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let (mx, my) = (sx / k, sy / k);
    let (sxx, sxy) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| {
        (a + (x - mx).powi(2), b + (x - mx) * (y - my))
    });
    let slope = sxy / sxx;
    let rms = (pts
        .iter()
        .map(|(x, y)| (y - my - slope * (x - mx)).powi(2))
        .sum::<f64>()
        / k)
        .sqrt();
    Ok(ExponentFit {
        slope: Some(slope),
        rms_residual: Some(rms),
        ..base
    })
}
