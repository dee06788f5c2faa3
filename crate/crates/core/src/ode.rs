//! Adaptive Dormand–Prince 5(4) integration of `y′ = f(t, y)` for real state vectors.

use crate::error::{Error, Result};

/// Error control and step limits.
#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    /// Relative tolerance per component.
    pub rtol: f64,
    /// Absolute tolerance per component.
    pub atol: f64,
    /// Initial step (`0` picks `|t₁ − t₀|/100`).
    pub h0: f64,
    /// Largest number of attempted steps.
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-14,
            h0: 0.0,
            max_steps: 1_000_000,
        }
    }
}

/// Step statistics of an integration.
#[derive(Debug, Clone, Copy, Default)]
pub struct OdeStats {
    /// Accepted steps.
    pub accepted: usize,
    /// Rejected steps.
    pub rejected: usize,
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
/// Fifth-order weights (equal to the last row of `A`: first-same-as-last).
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Integrates from `t0` to `t1` (either direction) and returns `y(t1)`.
pub fn dormand_prince(
    f: impl Fn(f64, &[f64], &mut [f64]),
    t0: f64,
    y0: &[f64],
    t1: f64,
    opts: &OdeOptions,
) -> Result<(Vec<f64>, OdeStats)> {
    let n = y0.len();
    let span = t1 - t0;
    if span == 0.0 {
        return Ok((y0.to_vec(), OdeStats::default()));
    }
    let dir = span.signum();
    let mut h = if opts.h0 > 0.0 {
        opts.h0
    } else {
        span.abs() / 100.0
    };
    let mut t = t0;
    let mut y = y0.to_vec();
    let mut k: Vec<Vec<f64>> = vec![vec![0.0; n]; 7];
    let mut tmp = vec![0.0; n];
    let mut stats = OdeStats::default();
    f(t, &y, &mut k[0]);
    while (t1 - t) * dir > 0.0 {
        if stats.accepted + stats.rejected >= opts.max_steps {
            return Err(Error::Numeric(format!(
                "ODE integration exceeded {} steps at t = {t} (target {t1})",
                opts.max_steps
            )));
        }
        let last = h >= (t1 - t).abs();
        if last {
            h = (t1 - t).abs();
        }
        let hs = h * dir;
        for s in 1..7 {
            let (done, rest) = k.split_at_mut(s);
            for (i, out) in tmp.iter_mut().enumerate() {
                *out = y[i] + hs * done.iter().zip(&A[s]).map(|(kj, a)| a * kj[i]).sum::<f64>();
            }
            f(t + C[s] * hs, &tmp, &mut rest[0]);
        }
        // The last stage point is the fifth-order solution.
        let mut err = 0.0f64;
        for i in 0..n {
            let mut e = 0.0;
            for s in 0..7 {
                e += (B5[s] - B4[s]) * k[s][i];
            }
            let sc = opts.atol + opts.rtol * y[i].abs().max(tmp[i].abs());
            err = err.max((hs * e).abs() / sc);
        }
        if !err.is_finite() {
            return Err(Error::Numeric(format!(
                "ODE integration produced non-finite values at t = {t}"
            )));
        }
        if err <= 1.0 {
            t = if last { t1 } else { t + hs };
            y.copy_from_slice(&tmp);
            k.swap(0, 6);
            stats.accepted += 1;
        } else {
            stats.rejected += 1;
        }
        let factor = if err == 0.0 {
            5.0
        } else {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        };
        h *= factor;
        if h < 1e-14 * t.abs().max(1.0) {
            return Err(Error::Numeric(format!(
                "ODE step size underflow at t = {t}"
            )));
        }
    }
    Ok((y, stats))
}
