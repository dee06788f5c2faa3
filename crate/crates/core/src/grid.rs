//! Spatial grids on `(x_min, 0]` and spinor fields sampled on them.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{czero, Cx, Real};

/// Node spacing policy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SpacingPolicy {
    /// Equal spacing `h = |x_min|/N`.
    Uniform,
    /// Spacing `h_min` at the boundary end, growing geometrically by `ratio`
    /// until it reaches the uniform spacing that fills the interval.
    BoundaryGraded {
        /// Growth factor between neighbouring cells, in `[1, 1.2]`.
        ratio: f64,
        /// Smallest spacing, at the `x = 0` end.
        h_min: f64,
    },
}

/// Placement of the last node relative to the boundary `x = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Endpoint {
    /// Last node at `−h_last/2`; the stencil continues to a zero ghost value
    /// at `+h_last/2`. Used without boundary data.
    Staggered,
    /// Last node exactly at `x = 0`, where boundary data are imposed.
    OnBoundary,
}

/// Strictly increasing nodes with trapezoidal summation-by-parts weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid<T: Real> {
    x_min: T,
    nodes: Vec<T>,
    weights: Vec<T>,
    policy: SpacingPolicy,
    endpoint: Endpoint,
}

impl<T: Real> Grid<T> {
    /// Builds a grid of `n` nodes on `(x_min, 0]`.
    ///
    /// Cells tile `[x_min, 0]`; nodes sit at cell centres (staggered) or at
    /// right cell edges (on-boundary), so every node lies strictly inside
    /// `x_min`. The hard wall at the left end is imposed on the first node by
    /// the operator.
    pub fn new(x_min: T, n: usize, policy: SpacingPolicy, endpoint: Endpoint) -> Result<Self> {
        if !(x_min < T::zero()) || !x_min.is_finite() {
            return Err(Error::Configuration(format!(
                "x_min must be negative, got {x_min}"
            )));
        }
        if n < 16 {
            return Err(Error::Configuration(format!(
                "grid needs N ≥ 16 nodes, got {n}"
            )));
        }
        let len = -x_min;
        // Cell widths from the boundary end inwards.
        let widths: Vec<T> = match policy {
            SpacingPolicy::Uniform => vec![len / T::of_usize(n); n],
            SpacingPolicy::BoundaryGraded { ratio, h_min } => {
                if !(1.0..=1.2).contains(&ratio) {
                    return Err(Error::Configuration(format!(
                        "grading ratio must lie in [1, 1.2], got {ratio}"
                    )));
                }
                let (ratio, h_min) = (T::lit(ratio), T::lit(h_min));
                if !(h_min > T::zero()) || h_min * T::of_usize(n) > len {
                    return Err(Error::Configuration(format!(
                        "h_min = {h_min} incompatible with {n} cells on length {len}"
                    )));
                }
                let total = |h_max: T| {
                    let mut h = h_min;
                    let mut s = T::zero();
                    for _ in 0..n {
                        s += h;
                        h = (h * ratio).min(h_max);
                    }
                    s
                };
                let mut lo = h_min;
                let mut hi = len;
                if total(hi) < len {
                    return Err(Error::Configuration(format!(
                        "graded grid cannot fill length {len} with {n} cells at ratio {ratio}"
                    )));
                }
                for _ in 0..200 {
                    let mid = (lo + hi) / T::lit(2.0);
                    if total(mid) < len {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                let mut h = h_min;
                let mut w = Vec::with_capacity(n);
                for _ in 0..n {
                    w.push(h);
                    h = (h * ratio).min(hi);
                }
                // Absorb the bisection residue in the widest cell.
                let s: T = w.iter().fold(T::zero(), |a, &b| a + b);
                let last = w.len() - 1;
                w[last] += len - s;
                w
            }
        };
        // widths[0] is the cell adjacent to x = 0.
        let mut nodes = vec![T::zero(); n];
        let mut edge = T::zero();
        for (k, &h) in widths.iter().enumerate() {
            let idx = n - 1 - k;
            nodes[idx] = match endpoint {
                Endpoint::Staggered => edge - h / T::lit(2.0),
                Endpoint::OnBoundary => edge,
            };
            edge -= h;
        }
        for w in nodes.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::Configuration(
                    "grid nodes not strictly increasing".into(),
                ));
            }
        }
        let weights = Self::sbp_weights(&nodes, endpoint);
        Ok(Self {
            x_min,
            nodes,
            weights,
            policy,
            endpoint,
        })
    }

    fn sbp_weights(nodes: &[T], endpoint: Endpoint) -> Vec<T> {
        let n = nodes.len();
        let two = T::lit(2.0);
        let mut w = vec![T::zero(); n];
        w[0] = (nodes[1] - nodes[0]) / two;
        for i in 1..n - 1 {
            w[i] = (nodes[i + 1] - nodes[i - 1]) / two;
        }
        w[n - 1] = match endpoint {
            Endpoint::OnBoundary => (nodes[n - 1] - nodes[n - 2]) / two,
            Endpoint::Staggered => (-nodes[n - 1] - nodes[n - 2]) / two,
        };
        w
    }

    /// Left truncation point.
    pub fn x_min(&self) -> T {
        self.x_min
    }

    /// Node coordinates.
    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }

    /// Quadrature weights of the grid inner product.
    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    /// Number of nodes.
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    /// Always false: grids carry at least 16 nodes.
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Spacing policy used to build the grid.
    pub fn policy(&self) -> SpacingPolicy {
        self.policy
    }

    /// Boundary placement.
    pub fn endpoint(&self) -> Endpoint {
        self.endpoint
    }

    /// Smallest node spacing.
    pub fn min_spacing(&self) -> T {
        self.nodes
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(T::infinity(), T::min)
    }

    /// Largest node spacing.
    pub fn max_spacing(&self) -> T {
        self.nodes
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(T::zero(), T::max)
    }

    /// Index of the node nearest to `x`.
    pub fn nearest(&self, x: T) -> usize {
        match self
            .nodes
            .binary_search_by(|v| v.partial_cmp(&x).expect("finite nodes"))
        {
            Ok(i) => i,
            Err(0) => 0,
            Err(i) if i >= self.nodes.len() => self.nodes.len() - 1,
            Err(i) => {
                if x - self.nodes[i - 1] <= self.nodes[i] - x {
                    i - 1
                } else {
                    i
                }
            }
        }
    }

    /// Local cubic Lagrange interpolation of nodal samples at `x`.
    ///
    /// Returns zero left of the first node (fields vanish beyond the wall);
    /// between the last node and `0` the edge stencil is used.
    pub fn interpolate(&self, values: &[Cx<T>], x: T) -> Cx<T> {
        let n = self.nodes.len();
        if x < self.nodes[0] {
            return czero();
        }
        let i = match self
            .nodes
            .binary_search_by(|v| v.partial_cmp(&x).expect("finite nodes"))
        {
            Ok(i) => return values[i],
            Err(i) => i,
        };
        // Stencil of four nodes around the interval [i−1, i], clamped to the grid.
        let start = i.saturating_sub(2).min(n - 4);
        let xs = &self.nodes[start..start + 4];
        let mut acc = czero();
        for a in 0..4 {
            let mut basis = T::one();
            for b in 0..4 {
                if a != b {
                    basis *= (x - xs[b]) / (xs[a] - xs[b]);
                }
            }
            acc += values[start + a] * basis;
        }
        acc
    }
}

/// Constructs a grid (`make_grid`).
pub fn make_grid<T: Real>(
    x_min: T,
    n: usize,
    policy: SpacingPolicy,
    endpoint: Endpoint,
) -> Result<Arc<Grid<T>>> {
    Grid::new(x_min, n, policy, endpoint).map(Arc::new)
}

/// Four complex amplitudes per grid node.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinorField<T: Real> {
    grid: Arc<Grid<T>>,
    values: Vec<[Cx<T>; 4]>,
}

impl<T: Real> SpinorField<T> {
    /// Zero field.
    pub fn zeros(grid: Arc<Grid<T>>) -> Self {
        let n = grid.len();
        Self {
            grid,
            values: vec![[czero(); 4]; n],
        }
    }

    /// Field from nodal values.
    pub fn from_values(grid: Arc<Grid<T>>, values: Vec<[Cx<T>; 4]>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Configuration(format!(
                "field has {} nodes, grid has {}",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, values })
    }

    /// Samples `f(x)` at every node.
    pub fn from_fn(grid: Arc<Grid<T>>, f: impl Fn(T) -> [Cx<T>; 4]) -> Self {
        let values = grid.nodes().iter().map(|&x| f(x)).collect();
        Self { grid, values }
    }

    /// Underlying grid.
    pub fn grid(&self) -> &Arc<Grid<T>> {
        &self.grid
    }

    /// Nodal values.
    pub fn values(&self) -> &[[Cx<T>; 4]] {
        &self.values
    }

    /// Mutable nodal values.
    pub fn values_mut(&mut self) -> &mut [[Cx<T>; 4]] {
        &mut self.values
    }

    /// Samples of one component (`k ∈ 0..4`).
    pub fn component(&self, k: usize) -> Vec<Cx<T>> {
        self.values.iter().map(|v| v[k]).collect()
    }

    /// Grid inner product `⟨self, other⟩ = Σ w_i Σ_k conj(self_k) other_k`.
    pub fn inner(&self, other: &Self) -> Cx<T> {
        let w = self.grid.weights();
        self.values
            .iter()
            .zip(&other.values)
            .zip(w)
            .fold(czero(), |acc, ((a, b), &wi)| {
                acc + (0..4).fold(czero(), |s, k| s + a[k].conj() * b[k]) * wi
            })
    }

    /// Squared grid norm.
    pub fn norm_sqr(&self) -> T {
        self.component_masses()
            .iter()
            .fold(T::zero(), |a, &b| a + b)
    }

    /// Grid norm.
    pub fn norm(&self) -> T {
        self.norm_sqr().sqrt()
    }

    /// Squared norm carried by each of the four components.
    pub fn component_masses(&self) -> [T; 4] {
        let mut m = [T::zero(); 4];
        for (v, &wi) in self.values.iter().zip(self.grid.weights()) {
            for k in 0..4 {
                m[k] += wi * v[k].norm_sqr();
            }
        }
        m
    }

    /// `self − other`.
    pub fn sub(&self, other: &Self) -> Self {
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| std::array::from_fn(|k| a[k] - b[k]))
            .collect();
        Self {
            grid: self.grid.clone(),
            values,
        }
    }

    /// `self + other`.
    pub fn add(&self, other: &Self) -> Self {
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| std::array::from_fn(|k| a[k] + b[k]))
            .collect();
        Self {
            grid: self.grid.clone(),
            values,
        }
    }

    /// `c · self`.
    pub fn scaled(&self, c: Cx<T>) -> Self {
        let values = self.values.iter().map(|a| a.map(|z| z * c)).collect();
        Self {
            grid: self.grid.clone(),
            values,
        }
    }

    /// Squared norm restricted to nodes where `keep(x)` holds.
    pub fn mass_where(&self, keep: impl Fn(T) -> bool) -> T {
        let g = &self.grid;
        self.values
            .iter()
            .zip(g.nodes())
            .zip(g.weights())
            .filter(|((_, &x), _)| keep(x))
            .fold(T::zero(), |acc, ((v, _), &wi)| {
                acc + wi * v.iter().fold(T::zero(), |s, z| s + z.norm_sqr())
            })
    }
}
