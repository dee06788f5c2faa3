//! Cyclic Jacobi eigen-solver for small dense Hermitian matrices.

use crate::error::{Error, Result};
use crate::scalar::{cx, czero, Cx, Real};

/// Eigen-decomposition of a small Hermitian matrix.
#[derive(Debug, Clone)]
pub struct DenseHermitianEigen<T: Real> {
    /// Eigenvalues in ascending order.
    pub values: Vec<T>,
    /// Eigenvectors; `vectors[k]` belongs to `values[k]`.
    pub vectors: Vec<Vec<Cx<T>>>,
}

/// Diagonalises the Hermitian matrix `a` (row-major, `n × n`) by cyclic Jacobi rotations.
pub fn hermitian_eigen<T: Real>(a: &[Vec<Cx<T>>]) -> Result<DenseHermitianEigen<T>> {
    let n = a.len();
    let mut m: Vec<Vec<Cx<T>>> = a.to_vec();
    let mut v: Vec<Vec<Cx<T>>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i == j {
                        cx(T::one(), T::zero())
                    } else {
                        czero()
                    }
                })
                .collect()
        })
        .collect();
    let scale = m
        .iter()
        .flat_map(|r| r.iter())
        .fold(T::zero(), |acc, z| acc + z.norm_sqr())
        .sqrt();
    let tol = T::epsilon() * T::lit(0.5) * scale.max(T::min_positive_value());
    let mut converged = n < 2;
    for _sweep in 0..100 {
        let off = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .fold(T::zero(), |acc, (i, j)| acc + m[i][j].norm_sqr())
            .sqrt();
        if off <= tol {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[p][q];
                let r = apq.norm();
                if r <= tol * T::lit(1e-3) {
                    continue;
                }
                let phase = apq / r;
                let app = m[p][p].re;
                let aqq = m[q][q].re;
                let theta = (aqq - app) / (T::lit(2.0) * r);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                // Unitary rotation R on coordinates (p, q):
                // R_pp = c, R_pq = s, R_qp = -s·conj(phase), R_qq = c·conj(phase).
                let rpp = cx(c, T::zero());
                let rpq = cx(s, T::zero());
                let rqp = phase.conj() * (-s);
                let rqq = phase.conj() * c;
                for row in m.iter_mut() {
                    let (xp, xq) = (row[p], row[q]);
                    row[p] = xp * rpp + xq * rqp;
                    row[q] = xp * rpq + xq * rqq;
                }
                for j in 0..n {
                    let (yp, yq) = (m[p][j], m[q][j]);
                    m[p][j] = rpp.conj() * yp + rqp.conj() * yq;
                    m[q][j] = rpq.conj() * yp + rqq.conj() * yq;
                }
                m[p][q] = czero();
                m[q][p] = czero();
                m[p][p].im = T::zero();
                m[q][q].im = T::zero();
                for row in v.iter_mut() {
                    let (xp, xq) = (row[p], row[q]);
                    row[p] = xp * rpp + xq * rqp;
                    row[q] = xp * rpq + xq * rqq;
                }
            }
        }
    }
    if !converged {
        return Err(Error::Numeric(format!(
            "Jacobi eigen-solver did not converge for order {n}"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        m[i][i]
            .re
            .partial_cmp(&m[j][j].re)
            .expect("finite eigenvalues")
    });
    let values = order.iter().map(|&k| m[k][k].re).collect();
    let vectors = order
        .iter()
        .map(|&k| (0..n).map(|i| v[i][k]).collect())
        .collect();
    Ok(DenseHermitianEigen { values, vectors })
}
