//! Legendre transform and Hamilton-equation flow for the deformed recipes,
//! cross-checkable against the Lagrangian-side integrators.
//!
//! All flows run in the measure image τ, where the deformed time derivative
//! is exactly d/dτ: options 1/2 become the classical Hamilton system there,
//! and option 3 picks up the explicit momentum-damping term
//! `(α−1) t^(−α) p`. Options 1 and 2 produce the same final system (the
//! option-2 route differs only by a total-derivative manipulation), so they
//! share one right-hand side here.

use crate::deform::DeformKind;
use crate::error::{Error, Result};
use crate::euler_lagrange::{GridKind, Trajectory};
use crate::lagrangian::MechLagrangian;
use crate::ode::{rk45_to_times, OdeOptions};

/// A point of the phase flow: raw time, coordinate, deformed momentum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseState {
    pub t: f64,
    pub q: f64,
    pub p: f64,
}

impl PhaseState {
    pub fn new(t: f64, q: f64, p: f64) -> Result<Self> {
        if !(t.is_finite() && q.is_finite() && p.is_finite()) {
            return Err(Error::Parameter(format!(
                "phase state must be finite, got (t={t}, q={q}, p={p})"
            )));
        }
        Ok(PhaseState { t, q, p })
    }
}

/// Deformed momentum and Hamiltonian at a state: `p = ∂L/∂(Dx)`,
/// `H = p·Dx − L`. Errors when the kinetic term is degenerate (the Legendre
/// map is then not invertible).
pub fn legendre(l: &MechLagrangian, t: f64, x: f64, dax: f64) -> Result<(f64, f64)> {
    let p = l.dl_ddax(t, x, dax)?;
    // curvature in Dx via a plain second difference; "degenerate" means
    // indistinguishable from the rounding floor of that stencil
    let h = 1e-3 * dax.abs().max(1.0);
    let (lp, l0, lm) = (
        l.eval(t, x, dax + h)?,
        l.eval(t, x, dax)?,
        l.eval(t, x, dax - h)?,
    );
    let lvv = (lp - 2.0 * l0 + lm) / (h * h);
    let floor = 32.0 * f64::EPSILON * (lp.abs() + 2.0 * l0.abs() + lm.abs()) / (h * h);
    if lvv.abs() <= floor.max(1e-12) {
        return Err(Error::Precondition(format!(
            "kinetic term degenerate at (t={t}, x={x}): d²L/d(Dx)² = {lvv:.3e}"
        )));
    }
    Ok((p, p * dax - l0))
}

fn require_quadratic(l: &MechLagrangian) -> Result<()> {
    // the flow inverts p = m·Dx explicitly, which needs the standard
    // quadratic kinetic form
    let probe = legendre(l, 1.0, 0.0, 1.0);
    match probe {
        Ok((p, _)) if (p - l.m).abs() <= 1e-9 * l.m.abs() => Ok(()),
        Ok(_) => Err(Error::Precondition(
            "Hamilton flow needs the standard kinetic term ½ m (Dx)²".into(),
        )),
        Err(e) => Err(e),
    }
}

/// Rates (dq/dτ, dp/dτ) of the Hamilton system in the measure variable τ.
/// Options 1/2: `dq/dτ = ∂H/∂p`, `dp/dτ = −∂H/∂q`. Option 3:
/// `dp/dτ = (α−1) t^(−α) p − ∂H/∂q` with t recovered from τ.
pub fn hamilton_rhs(state: &PhaseState, l: &MechLagrangian) -> Result<(f64, f64)> {
    require_quadratic(l)?;
    let dq = state.p / l.m;
    let mut dp = -l.potential.deriv(state.q)?;
    if !l.option.shares_opt12_form() {
        let alpha = power_order(l)?;
        if alpha != 1.0 {
            if state.t <= 0.0 {
                return Err(Error::Domain(format!(
                    "option-3 momentum damping needs t > 0, got {}",
                    state.t
                )));
            }
            dp += (alpha - 1.0) * state.t.powf(-alpha) * state.p;
        }
    }
    Ok((dq, dp))
}

fn power_order(l: &MechLagrangian) -> Result<f64> {
    match l.deform.kind {
        DeformKind::Classical => Ok(1.0),
        DeformKind::Conformable | DeformKind::Katugampola => Ok(l.deform.alpha),
        other => Err(Error::Precondition(format!(
            "option-3 Hamilton flow uses the power kernel t^(1-alpha), got {other}"
        ))),
    }
}

/// Integrate the Hamilton system from `state0` to `t1`, sampling `n_out`
/// uniformly spaced raw times. For time-independent Lagrangians under
/// options 1/2 the returned H values are conserved.
pub fn integrate_hamilton(
    l: &MechLagrangian,
    state0: PhaseState,
    t1: f64,
    tol: f64,
    n_out: usize,
) -> Result<Vec<PhaseState>> {
    require_quadratic(l)?;
    let t0 = state0.t;
    if !(t1 > t0) {
        return Err(Error::Parameter(format!("need t1 > t0, got [{t0}, {t1}]")));
    }
    if n_out < 2 {
        return Err(Error::Parameter(format!("need at least 2 output samples, got {n_out}")));
    }
    let opt3 = !l.option.shares_opt12_form();
    if t0 <= 0.0 && !l.deform.is_identity() {
        return Err(Error::Domain(format!(
            "raw-grid start needs t0 > 0 for the deformed kernel, got {t0}"
        )));
    }
    if opt3 {
        power_order(l)?;
    }
    let t_grid: Vec<f64> = (0..n_out)
        .map(|i| t0 + (t1 - t0) * i as f64 / (n_out - 1) as f64)
        .collect();
    let tau0 = l.deform.measure_antiderivative(t0)?;
    let tau_targets: Vec<f64> = t_grid
        .iter()
        .map(|&t| l.deform.measure_antiderivative(t))
        .collect::<Result<_>>()?;
    let m = l.m;
    let pot = l.potential.clone();
    let deform = l.deform;
    let alpha = if opt3 { power_order(l)? } else { 1.0 };
    let rhs = move |tau: f64, y: &[f64], dy: &mut [f64]| -> Result<()> {
        dy[0] = y[1] / m;
        dy[1] = -pot.deriv(y[0])?;
        if opt3 && alpha != 1.0 {
            let t = deform.measure_inverse(tau)?;
            dy[1] += (alpha - 1.0) * t.powf(-alpha) * y[1];
        }
        Ok(())
    };
    let rows = rk45_to_times(
        &rhs,
        tau0,
        &[state0.q, state0.p],
        &tau_targets,
        &OdeOptions::with_tol(tol),
    )?;
    rows.iter()
        .zip(&t_grid)
        .map(|(r, &t)| PhaseState::new(t, r[0], r[1]))
        .collect()
}

/// Convert a phase trajectory to a coordinate [`Trajectory`] (raw velocity
/// recovered through the kernel: ẋ = (p/m)/kernel(t)).
pub fn phase_to_trajectory(states: &[PhaseState], l: &MechLagrangian) -> Result<Trajectory> {
    let t: Vec<f64> = states.iter().map(|s| s.t).collect();
    let x: Vec<f64> = states.iter().map(|s| s.q).collect();
    let mut v = Vec::with_capacity(states.len());
    for s in states {
        v.push(s.p / l.m / l.deform.kernel(s.t)?);
    }
    Trajectory::new(t, x, Some(v), GridKind::Raw)
}
