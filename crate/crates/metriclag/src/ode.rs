//! Adaptive embedded Runge-Kutta integration (Dormand-Prince 5(4)).
//!
//! Output samples are reached exactly: the controller clamps the step so
//! every requested time is an integration node, never an interpolation.
//! A fixed-step classical RK4 is kept alongside for convergence studies.

use crate::error::{Error, Result};

/// RHS signature: `rhs(t, y, dy)` fills `dy` in place.
pub type Rhs<'a> = &'a dyn Fn(f64, &[f64], &mut [f64]) -> Result<()>;

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    /// initial step; `None` picks a conservative default from the span
    pub h0: Option<f64>,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions { rtol: 1e-10, atol: 1e-12, h0: None, max_steps: 2_000_000 }
    }
}

impl OdeOptions {
    pub fn with_tol(tol: f64) -> Self {
        OdeOptions { rtol: tol, atol: tol * 1e-2, ..Self::default() }
    }
}

// Dormand-Prince coefficients. b5 is the propagating 5th-order weight row
// (FSAL: equal to the last stage row); b4 the embedded 4th-order row.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
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

/// Integrate `y' = rhs(t, y)` from `t0`, returning the state at each entry of
/// `times` (strictly increasing, `times[0] >= t0`). Each requested time is
/// hit exactly by step clamping.
pub fn rk45_to_times(
    rhs: Rhs,
    t0: f64,
    y0: &[f64],
    times: &[f64],
    opts: &OdeOptions,
) -> Result<Vec<Vec<f64>>> {
    let dim = y0.len();
    if times.is_empty() {
        return Ok(Vec::new());
    }
    if times[0] < t0 - 1e-14 * t0.abs().max(1.0) {
        return Err(Error::Precondition(format!(
            "first output time {} precedes start {t0}",
            times[0]
        )));
    }
    for w in times.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::Precondition("output times must be strictly increasing".into()));
        }
    }

    let span = times[times.len() - 1] - t0;
    let mut h = opts.h0.unwrap_or(span * 1e-3).min(span.max(1e-300));
    let mut t = t0;
    let mut y = y0.to_vec();
    let mut out = Vec::with_capacity(times.len());

    let mut k = vec![vec![0.0; dim]; 7];
    let mut ytmp = vec![0.0; dim];
    let mut y5 = vec![0.0; dim];
    let mut y4 = vec![0.0; dim];
    rhs(t, &y, &mut k[0])?;
    let mut steps = 0usize;

    for &t_target in times {
        if (t_target - t).abs() <= 1e-14 * t_target.abs().max(1.0) {
            out.push(y.clone());
            continue;
        }
        loop {
            steps += 1;
            if steps > opts.max_steps {
                return Err(Error::NonConvergence(format!(
                    "step budget exhausted at t = {t} (needed past {t_target})"
                )));
            }
            let h_try = h.min(t_target - t);
            if h_try < 1e-14 * t.abs().max(1.0) {
                return Err(Error::Numerical(format!("step underflow near t = {t}")));
            }

            for s in 1..7 {
                for i in 0..dim {
                    let mut acc = 0.0;
                    for (j, kj) in k.iter().enumerate().take(s) {
                        acc += A[s][j] * kj[i];
                    }
                    ytmp[i] = y[i] + h_try * acc;
                }
                rhs(t + C[s] * h_try, &ytmp, &mut k[s])?;
            }
            let mut err_norm = 0.0f64;
            for i in 0..dim {
                let mut acc5 = 0.0;
                let mut acc4 = 0.0;
                for (j, kj) in k.iter().enumerate() {
                    acc5 += B5[j] * kj[i];
                    acc4 += B4[j] * kj[i];
                }
                y5[i] = y[i] + h_try * acc5;
                y4[i] = y[i] + h_try * acc4;
                let scale = opts.atol + opts.rtol * y[i].abs().max(y5[i].abs());
                err_norm = err_norm.max(((y5[i] - y4[i]) / scale).abs());
            }
            if !err_norm.is_finite() {
                return Err(Error::Numerical(format!(
                    "non-finite state near t = {}",
                    t + h_try
                )));
            }

            if err_norm <= 1.0 {
                t += h_try;
                y.copy_from_slice(&y5);
                // FSAL: stage 7 was evaluated at (t+h, y5)
                let (head, tail) = k.split_at_mut(6);
                head[0].copy_from_slice(&tail[0]);
                let grow = if err_norm == 0.0 { 5.0 } else { 0.9 * err_norm.powf(-0.2) };
                h = h_try * grow.clamp(0.2, 5.0);
                if (t_target - t).abs() <= 1e-14 * t_target.abs().max(1.0) {
                    out.push(y.clone());
                    break;
                }
            } else {
                h = h_try * (0.9 * err_norm.powf(-0.2)).clamp(0.1, 1.0);
                // rejected: k[0] still holds f(t, y)
            }
        }
    }
    Ok(out)
}

/// Classical fixed-step RK4; returns the state after each of the `n` steps
/// (n+1 rows including the initial state).
pub fn rk4_fixed(rhs: Rhs, t0: f64, y0: &[f64], h: f64, n: usize) -> Result<Vec<Vec<f64>>> {
    let dim = y0.len();
    let mut y = y0.to_vec();
    let mut out = Vec::with_capacity(n + 1);
    out.push(y.clone());
    let mut k1 = vec![0.0; dim];
    let mut k2 = vec![0.0; dim];
    let mut k3 = vec![0.0; dim];
    let mut k4 = vec![0.0; dim];
    let mut ytmp = vec![0.0; dim];
    for step in 0..n {
        let t = t0 + step as f64 * h;
        rhs(t, &y, &mut k1)?;
        for i in 0..dim {
            ytmp[i] = y[i] + 0.5 * h * k1[i];
        }
        rhs(t + 0.5 * h, &ytmp, &mut k2)?;
        for i in 0..dim {
            ytmp[i] = y[i] + 0.5 * h * k2[i];
        }
        rhs(t + 0.5 * h, &ytmp, &mut k3)?;
        for i in 0..dim {
            ytmp[i] = y[i] + h * k3[i];
        }
        rhs(t + h, &ytmp, &mut k4)?;
        for i in 0..dim {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!(
                "non-finite state at t = {}",
                t + h
            )));
        }
        out.push(y.clone());
    }
    Ok(out)
}
