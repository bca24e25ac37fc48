//! Time integrators for the deformed Newton equations, one per variational
//! recipe, plus the first-order-in-(1−α) linearized companions used for
//! low-fractionality studies.
//!
//! Strategy: every equation is driven in a variable where it is regular.
//! Options 1/2 use the measure substitution τ (the deformed derivative is
//! exactly d/dτ there); option 3 and the q-variant integrate their exact
//! conservative forms, so the V = 0 first integrals hold to roundoff.

use crate::deform::DeformKind;
use crate::error::{Error, Result};
use crate::euler_lagrange::{GridKind, Trajectory};
use crate::lagrangian::MechLagrangian;
use crate::ode::{rk45_to_times, OdeOptions};

fn uniform(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

fn check_span(t0: f64, t1: f64, n_out: usize) -> Result<()> {
    if !(t1 > t0) {
        return Err(Error::Parameter(format!("need t1 > t0, got [{t0}, {t1}]")));
    }
    if n_out < 2 {
        return Err(Error::Parameter(format!("need at least 2 output samples, got {n_out}")));
    }
    Ok(())
}

/// Solve the option-1/2 equation `m·D(D x) = −V'(x)` (D the deformed time
/// derivative) by substituting τ = measure(t), where it is exactly
/// `m·x''(τ) = −V'(x)`.
///
/// `v0` is the deformed velocity D x at t0 (= dx/dτ). Output columns: t
/// (raw), x, and v as the raw velocity dx/dt.
pub fn solve_newton_opt12(
    l: &MechLagrangian,
    x0: f64,
    v0: f64,
    t0: f64,
    t1: f64,
    tol: f64,
    n_out: usize,
) -> Result<Trajectory> {
    check_span(t0, t1, n_out)?;
    if t0 <= 0.0 && !l.deform.is_identity() {
        return Err(Error::Domain(format!(
            "raw-grid start needs t0 > 0 for the deformed kernel, got {t0}"
        )));
    }
    let t_grid = uniform(t0, t1, n_out);
    let tau0 = l.deform.measure_antiderivative(t0)?;
    let tau_targets: Vec<f64> = t_grid
        .iter()
        .map(|&t| l.deform.measure_antiderivative(t))
        .collect::<Result<_>>()?;
    let m = l.m;
    let pot = l.potential.clone();
    let rhs = move |_tau: f64, y: &[f64], dy: &mut [f64]| -> Result<()> {
        dy[0] = y[1];
        dy[1] = -pot.deriv(y[0])? / m;
        Ok(())
    };
    let rows = rk45_to_times(&rhs, tau0, &[x0, v0], &tau_targets, &OdeOptions::with_tol(tol))?;
    let mut x = Vec::with_capacity(n_out);
    let mut v = Vec::with_capacity(n_out);
    for (i, row) in rows.iter().enumerate() {
        x.push(row[0]);
        // dx/dt = (dx/dτ)·(dτ/dt) = dax / kernel
        v.push(row[1] / l.deform.kernel(t_grid[i])?);
    }
    Trajectory::new(t_grid, x, Some(v), GridKind::Raw)
}

fn require_power_kernel(l: &MechLagrangian) -> Result<f64> {
    match l.deform.kind {
        DeformKind::Classical => Ok(1.0),
        DeformKind::Conformable | DeformKind::Katugampola => Ok(l.deform.alpha),
        other => Err(Error::Precondition(format!(
            "option-3 dynamics use the power kernel t^(1-alpha), got {other}"
        ))),
    }
}

/// Solve the option-3 equation `m·d/dt(t^(2−2α) ẋ) = −V'(x)` on t > 0.
///
/// State is (x, w) with w = t^(2−2α) ẋ — the exact first integral for V = 0,
/// which therefore stays constant to roundoff. `v0` is the raw velocity
/// ẋ(t0).
pub fn solve_newton_opt3(
    l: &MechLagrangian,
    x0: f64,
    v0: f64,
    t0: f64,
    t1: f64,
    tol: f64,
    n_out: usize,
) -> Result<Trajectory> {
    check_span(t0, t1, n_out)?;
    let alpha = require_power_kernel(l)?;
    if t0 <= 0.0 {
        return Err(Error::Domain(format!(
            "option-3 raw grid needs t0 > 0, got {t0}; use the shifted solver to start at the origin"
        )));
    }
    let e = 2.0 - 2.0 * alpha;
    let m = l.m;
    let pot = l.potential.clone();
    let rhs = move |t: f64, y: &[f64], dy: &mut [f64]| -> Result<()> {
        dy[0] = y[1] * t.powf(-e); // xdot = w·t^(2α−2)
        dy[1] = -pot.deriv(y[0])? / m;
        Ok(())
    };
    let t_grid = uniform(t0, t1, n_out);
    let w0 = t0.powf(e) * v0;
    let rows = rk45_to_times(&rhs, t0, &[x0, w0], &t_grid, &OdeOptions::with_tol(tol))?;
    let x: Vec<f64> = rows.iter().map(|r| r[0]).collect();
    let v: Vec<f64> = rows
        .iter()
        .zip(&t_grid)
        .map(|(r, &t)| r[1] * t.powf(-e))
        .collect();
    Trajectory::new(t_grid, x, Some(v), GridKind::Raw)
}

/// Solve the shifted-time option-3 equation from t' = 0, where the kernel
/// u = 1 + t'/l0 is regular. Internally u is the integration variable:
/// `m·d/du(u^(2−2α) x_u) = −l0²·V'(x)`, and d/dt' = (1/l0)·d/du. The exact
/// first integral (1+t'/l0)^(2−2α)·ẋ = v0 holds for every l0.
///
/// `v0` is ẋ(t'=0). The trajectory stores u in its time column
/// (`GridKind::Shifted`) and ẋ = dx/dt' in v.
pub fn solve_newton_shifted(
    l: &MechLagrangian,
    x0: f64,
    v0: f64,
    t1_prime: f64,
    tol: f64,
    n_out: usize,
) -> Result<Trajectory> {
    check_span(0.0, t1_prime, n_out)?;
    let alpha = require_power_kernel(l)?;
    let l0 = l.deform.l0;
    let e = 2.0 - 2.0 * alpha;
    let m = l.m;
    let pot = l.potential.clone();
    let rhs = move |u: f64, y: &[f64], dy: &mut [f64]| -> Result<()> {
        dy[0] = y[1] * u.powf(-e); // x_u = w·u^(2α−2)
        dy[1] = -l0 * l0 * pot.deriv(y[0])? / m;
        Ok(())
    };
    let u_grid = uniform(1.0, 1.0 + t1_prime / l0, n_out);
    // x_u(1) = l0·xdot(0); w(1) = 1^e·x_u = l0·v0
    let rows = rk45_to_times(&rhs, 1.0, &[x0, l0 * v0], &u_grid, &OdeOptions::with_tol(tol))?;
    let x: Vec<f64> = rows.iter().map(|r| r[0]).collect();
    let v: Vec<f64> = rows
        .iter()
        .zip(&u_grid)
        .map(|(r, &u)| r[1] * u.powf(-e) / l0) // xdot = x_u/l0
        .collect();
    Trajectory::new(u_grid, x, Some(v), GridKind::Shifted)
}

/// First-order-in-ε (ε = 1−α) truncation of the shifted option-3 equation:
/// `m[(2ε/(l0·u))·ẋ + (1 + 2ε·ln u)·ẍ] = −V'` with u = 1 + t'/l0.
///
/// This is the genuine O(ε) truncation of the full equation, which is what a
/// full-vs-linearized comparison must use for the gap to shrink as ε².
pub fn solve_newton_shifted_linearized(
    l: &MechLagrangian,
    x0: f64,
    v0: f64,
    t1_prime: f64,
    tol: f64,
    n_out: usize,
) -> Result<Trajectory> {
    check_span(0.0, t1_prime, n_out)?;
    let alpha = require_power_kernel(l)?;
    let eps = 1.0 - alpha;
    let l0 = l.deform.l0;
    let m = l.m;
    let pot = l.potential.clone();
    // integrate in u; y = (x, x_u): mass term (1+2ε ln u), friction 2ε/u
    let rhs = move |u: f64, y: &[f64], dy: &mut [f64]| -> Result<()> {
        dy[0] = y[1];
        let force = -l0 * l0 * pot.deriv(y[0])? / m;
        dy[1] = (force - 2.0 * eps / u * y[1]) / (1.0 + 2.0 * eps * u.ln());
        Ok(())
    };
    let u_grid = uniform(1.0, 1.0 + t1_prime / l0, n_out);
    let rows = rk45_to_times(&rhs, 1.0, &[x0, l0 * v0], &u_grid, &OdeOptions::with_tol(tol))?;
    let x: Vec<f64> = rows.iter().map(|r| r[0]).collect();
    let v: Vec<f64> = rows.iter().map(|r| r[1] / l0).collect();
    Trajectory::new(u_grid, x, Some(v), GridKind::Shifted)
}

/// Solve the q-variant equation `l0²·m·d/dt([1+(1−q)t]² ẋ) = −V'(x)` from
/// t = 0. State is (x, w) with w = k²ẋ, the exact V = 0 first integral.
/// `v0` is ẋ(0). The classical law returns at q = 1 **and** l0 = 1.
pub fn solve_newton_q(
    l: &MechLagrangian,
    x0: f64,
    v0: f64,
    t1: f64,
    tol: f64,
    n_out: usize,
) -> Result<Trajectory> {
    check_span(0.0, t1, n_out)?;
    if l.deform.kind != DeformKind::QDeriv {
        return Err(Error::Precondition(format!(
            "q dynamics need a q-derivative deformation, got {}",
            l.deform.kind
        )));
    }
    let q = l.deform.q;
    let l0 = l.deform.l0;
    if q > 1.0 {
        let pole = 1.0 / (q - 1.0);
        if t1 >= pole {
            return Err(Error::Domain(format!(
                "kernel 1+(1-q)t vanishes at t = {pole}, inside the requested span"
            )));
        }
    }
    let m = l.m;
    let pot = l.potential.clone();
    let rhs = move |t: f64, y: &[f64], dy: &mut [f64]| -> Result<()> {
        let k = 1.0 + (1.0 - q) * t;
        dy[0] = y[1] / (k * k);
        dy[1] = -pot.deriv(y[0])? / (m * l0 * l0);
        Ok(())
    };
    let t_grid = uniform(0.0, t1, n_out);
    let rows = rk45_to_times(&rhs, 0.0, &[x0, v0], &t_grid, &OdeOptions::with_tol(tol))?;
    let x: Vec<f64> = rows.iter().map(|r| r[0]).collect();
    let v: Vec<f64> = rows
        .iter()
        .zip(&t_grid)
        .map(|(r, &t)| {
            let k = 1.0 + (1.0 - q) * t;
            r[1] / (k * k)
        })
        .collect();
    Trajectory::new(t_grid, x, Some(v), GridKind::Raw)
}

/// First-order-in-ε (ε = 1−q) truncation of the q equation:
/// `l0²·m[2ε·ẋ + (1+2εt)·ẍ] = −V'`.
pub fn solve_newton_q_linearized(
    l: &MechLagrangian,
    x0: f64,
    v0: f64,
    t1: f64,
    tol: f64,
    n_out: usize,
) -> Result<Trajectory> {
    check_span(0.0, t1, n_out)?;
    if l.deform.kind != DeformKind::QDeriv {
        return Err(Error::Precondition(format!(
            "q dynamics need a q-derivative deformation, got {}",
            l.deform.kind
        )));
    }
    let eps = 1.0 - l.deform.q;
    let l0 = l.deform.l0;
    let m = l.m;
    let pot = l.potential.clone();
    let rhs = move |t: f64, y: &[f64], dy: &mut [f64]| -> Result<()> {
        dy[0] = y[1];
        let force = -pot.deriv(y[0])? / (m * l0 * l0);
        dy[1] = (force - 2.0 * eps * y[1]) / (1.0 + 2.0 * eps * t);
        Ok(())
    };
    let t_grid = uniform(0.0, t1, n_out);
    let rows = rk45_to_times(&rhs, 0.0, &[x0, v0], &t_grid, &OdeOptions::with_tol(tol))?;
    let x: Vec<f64> = rows.iter().map(|r| r[0]).collect();
    let v: Vec<f64> = rows.iter().map(|r| r[1]).collect();
    Trajectory::new(t_grid, x, Some(v), GridKind::Raw)
}

/// The conserved combination along V = 0 solutions, per option:
/// opt1/2 → D x (deformed velocity), opt3 raw → t^(2−2α)ẋ,
/// opt3 shifted → u^(2−2α)ẋ, opt3 with q kernel → [1+(1−q)t]²ẋ.
pub fn first_integral(traj: &Trajectory, l: &MechLagrangian) -> Result<Vec<f64>> {
    let v = traj.velocities()?;
    let n = traj.len();
    let mut out = vec![0.0; n];
    if l.option.shares_opt12_form() {
        if traj.grid_kind == GridKind::Shifted {
            return Err(Error::Precondition(
                "option-1/2 first integral expects a raw grid".into(),
            ));
        }
        for i in 0..n {
            out[i] = l.deform.kernel(traj.t[i])? * v[i];
        }
        return Ok(out);
    }
    match (l.deform.kind, traj.grid_kind) {
        (DeformKind::QDeriv, GridKind::Raw) => {
            for i in 0..n {
                let k = 1.0 + (1.0 - l.deform.q) * traj.t[i];
                out[i] = k * k * v[i];
            }
        }
        (DeformKind::QDeriv, GridKind::Shifted) => {
            return Err(Error::Precondition(
                "q first integral expects a raw grid".into(),
            ));
        }
        (_, _) => {
            // raw t or shifted u both carry the same power-law weight
            let alpha = require_power_kernel(l)?;
            for i in 0..n {
                out[i] = traj.t[i].powf(2.0 - 2.0 * alpha) * v[i];
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::deform::DeformationParams;
    use crate::euler_lagrange::{el_residual_opt12, el_residual_opt3, el_residual_q, interior_max};
    use crate::lagrangian::{Potential, VariationalOption};
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn free(d: DeformationParams, option: VariationalOption) -> MechLagrangian {
        MechLagrangian::new(1.0, Potential::zero(), d, option).unwrap()
    }

    #[test]
    fn opt12_free_particle_closed_form() {
        // x = x0 + v0 (t^alpha - t0^alpha)/alpha; starting just above the
        // origin, alpha=0.5, v0=1, t=4 gives 4.0 well inside 1e-6 relative
        let l = free(DeformationParams::conformable(0.5).unwrap(), VariationalOption::Opt1);
        let t0 = 1e-14;
        let traj = solve_newton_opt12(&l, 0.0, 1.0, t0, 4.0, 1e-12, 201).unwrap();
        let xf = *traj.x.last().unwrap();
        assert_relative_eq!(xf, 4.0, max_relative = 1e-6);
        // tight check against the form anchored exactly at t0
        for (t, x) in traj.t.iter().zip(&traj.x) {
            let expect = (t.sqrt() - t0.sqrt()) / 0.5;
            assert_relative_eq!(*x, expect, max_relative = 1e-9, epsilon = 1e-12);
        }
    }

    #[test]
    fn opt12_classical_line_and_oscillator() {
        let line = free(DeformationParams::classical(), VariationalOption::Opt1);
        let traj = solve_newton_opt12(&line, 0.5, 2.0, 1.0, 3.0, 1e-10, 101).unwrap();
        for (t, x) in traj.t.iter().zip(&traj.x) {
            assert_relative_eq!(*x, 0.5 + 2.0 * (t - 1.0), epsilon = 1e-10);
        }
        let osc = MechLagrangian::new(
            1.0,
            Potential::harmonic(1.0),
            DeformationParams::classical(),
            VariationalOption::Opt1,
        )
        .unwrap();
        let traj = solve_newton_opt12(&osc, 1.0, 0.0, 0.0, 2.0 * PI, 1e-10, 401).unwrap();
        assert_relative_eq!(*traj.x.last().unwrap(), 1.0, max_relative = 1e-6);
    }

    #[test]
    fn opt3_velocity_ratio() {
        // alpha=0.75: xdot(4)/xdot(1) = 4^(-0.5) = 0.5
        let l = free(DeformationParams::conformable(0.75).unwrap(), VariationalOption::Opt3);
        let traj = solve_newton_opt3(&l, 0.0, 1.0, 1.0, 4.0, 1e-10, 301).unwrap();
        let v = traj.v.as_ref().unwrap();
        assert_relative_eq!(v[300] / v[0], 0.5, max_relative = 1e-9);
        // first integral exactly constant for V=0
        let fi = first_integral(&traj, &l).unwrap();
        for w in &fi {
            assert_relative_eq!(*w, fi[0], epsilon = 1e-12);
        }
    }

    #[test]
    fn opt3_log_solution_at_half() {
        // alpha=0.5: xdot = C/t so x = x0 + C ln t
        let l = free(DeformationParams::conformable(0.5).unwrap(), VariationalOption::Opt3);
        let traj = solve_newton_opt3(&l, 2.0, 1.5, 1.0, 5.0, 1e-11, 201).unwrap();
        for (t, x) in traj.t.iter().zip(&traj.x) {
            assert_relative_eq!(*x, 2.0 + 1.5 * t.ln(), max_relative = 1e-9);
        }
    }

    #[test]
    fn shifted_first_integral_holds_for_any_l0() {
        for &l0 in &[0.5, 1.0, 3.0] {
            let mut d = DeformationParams::conformable(0.8).unwrap();
            d.l0 = l0;
            let l = free(d, VariationalOption::Opt3);
            let traj = solve_newton_shifted(&l, 0.0, 1.3, 4.0, 1e-10, 201).unwrap();
            let v = traj.v.as_ref().unwrap();
            for (u, vi) in traj.t.iter().zip(v) {
                assert_relative_eq!(u.powf(0.4) * vi, 1.3, max_relative = 1e-9);
            }
        }
    }

    #[test]
    fn shifted_classical_limit() {
        let l = free(DeformationParams::conformable(1.0).unwrap(), VariationalOption::Opt3);
        let traj = solve_newton_shifted(&l, 1.0, 2.0, 3.0, 1e-10, 101).unwrap();
        // u = 1 + t', x = 1 + 2 t' = 1 + 2(u-1)
        for (u, x) in traj.t.iter().zip(&traj.x) {
            assert_relative_eq!(*x, 1.0 + 2.0 * (u - 1.0), epsilon = 1e-9);
        }
    }

    #[test]
    fn q_free_velocity_law() {
        let d = DeformationParams::q_deriv_with_cutoff(0.5, 1.0).unwrap();
        let l = free(d, VariationalOption::Opt3);
        let traj = solve_newton_q(&l, 0.0, 1.0, 3.0, 1e-10, 301).unwrap();
        let v = traj.v.as_ref().unwrap();
        for (t, vi) in traj.t.iter().zip(v) {
            let expect = (1.0 + 0.5 * t).powi(-2);
            assert_relative_eq!(*vi, expect, max_relative = 1e-9);
        }
    }

    #[test]
    fn q_classical_oscillator() {
        let d = DeformationParams::q_deriv_with_cutoff(1.0, 1.0).unwrap();
        let l = MechLagrangian::new(1.0, Potential::harmonic(1.0), d, VariationalOption::Opt3)
            .unwrap();
        let traj = solve_newton_q(&l, 1.0, 0.0, 2.0 * PI, 1e-10, 401).unwrap();
        assert_relative_eq!(*traj.x.last().unwrap(), 1.0, max_relative = 1e-7);
    }

    #[test]
    fn q_kernel_pole_is_rejected() {
        let d = DeformationParams::q_deriv_with_cutoff(1.5, 1.0).unwrap();
        let l = free(d, VariationalOption::Opt3);
        assert!(matches!(
            solve_newton_q(&l, 0.0, 1.0, 3.0, 1e-8, 100),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn solver_output_zeroes_matching_residuals() {
        let harmonic = Potential::harmonic(1.0);

        let l12 = MechLagrangian::new(
            1.0,
            harmonic.clone(),
            DeformationParams::conformable(0.6).unwrap(),
            VariationalOption::Opt1,
        )
        .unwrap();
        let t12 = solve_newton_opt12(&l12, 0.8, 0.3, 0.5, 3.0, 1e-11, 801).unwrap();
        let r12 = el_residual_opt12(&t12, &l12).unwrap();
        assert!(interior_max(&r12) < 1e-5, "opt12 r = {:.2e}", interior_max(&r12));

        let l3 = MechLagrangian::new(
            1.0,
            harmonic.clone(),
            DeformationParams::conformable(0.75).unwrap(),
            VariationalOption::Opt3,
        )
        .unwrap();
        let t3 = solve_newton_opt3(&l3, 0.8, 0.3, 1.0, 4.0, 1e-11, 801).unwrap();
        let r3 = el_residual_opt3(&t3, &l3).unwrap();
        assert!(interior_max(&r3) < 1e-5, "opt3 r = {:.2e}", interior_max(&r3));

        let lq = MechLagrangian::new(
            1.0,
            harmonic,
            DeformationParams::q_deriv_with_cutoff(0.7, 1.2).unwrap(),
            VariationalOption::Opt3,
        )
        .unwrap();
        let tq = solve_newton_q(&lq, 0.8, 0.3, 3.0, 1e-11, 801).unwrap();
        let rq = el_residual_q(&tq, &lq).unwrap();
        assert!(interior_max(&rq) < 1e-5, "q r = {:.2e}", interior_max(&rq));
    }

    #[test]
    fn damping_sign_for_subunit_orders() {
        // V=0, v0>0: |xdot| non-increasing when alpha<1 (opt3) or q<1.
        let l = free(DeformationParams::conformable(0.8).unwrap(), VariationalOption::Opt3);
        let traj = solve_newton_opt3(&l, 0.0, 1.0, 1.0, 6.0, 1e-10, 301).unwrap();
        let v = traj.v.as_ref().unwrap();
        for w in v.windows(2) {
            assert!(w[1] <= w[0] + 1e-12);
        }
        let dq = DeformationParams::q_deriv_with_cutoff(0.6, 1.0).unwrap();
        let lq = free(dq, VariationalOption::Opt3);
        let tq = solve_newton_q(&lq, 0.0, 1.0, 5.0, 1e-10, 301).unwrap();
        let vq = tq.v.as_ref().unwrap();
        for w in vq.windows(2) {
            assert!(w[1] <= w[0] + 1e-12);
        }
    }

    #[test]
    fn linearized_gap_shrinks_quadratically() {
        // conformable-shifted family
        let mut gaps_c = Vec::new();
        let eps_list = [1e-4, 3e-4, 1e-3, 3e-3, 1e-2];
        for &eps in &eps_list {
            let d = DeformationParams::conformable(1.0 - eps).unwrap();
            let l = MechLagrangian::new(
                1.0,
                Potential::harmonic(1.0),
                d,
                VariationalOption::Opt3,
            )
            .unwrap();
            let full = solve_newton_shifted(&l, 1.0, 0.5, 3.0, 1e-12, 101).unwrap();
            let lin = solve_newton_shifted_linearized(&l, 1.0, 0.5, 3.0, 1e-12, 101).unwrap();
            let gap = full
                .x
                .iter()
                .zip(&lin.x)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max);
            gaps_c.push(gap);
        }
        let slope = crate::numeric::loglog_slope(&eps_list, &gaps_c);
        assert!((slope - 2.0).abs() < 0.15, "conformable slope {slope}, gaps {gaps_c:?}");

        // q family
        let mut gaps_q = Vec::new();
        for &eps in &eps_list {
            let d = DeformationParams::q_deriv_with_cutoff(1.0 - eps, 1.0).unwrap();
            let l = MechLagrangian::new(
                1.0,
                Potential::harmonic(1.0),
                d,
                VariationalOption::Opt3,
            )
            .unwrap();
            let full = solve_newton_q(&l, 1.0, 0.5, 3.0, 1e-12, 101).unwrap();
            let lin = solve_newton_q_linearized(&l, 1.0, 0.5, 3.0, 1e-12, 101).unwrap();
            let gap = full
                .x
                .iter()
                .zip(&lin.x)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max);
            gaps_q.push(gap);
        }
        let slope = crate::numeric::loglog_slope(&eps_list, &gaps_q);
        assert!((slope - 2.0).abs() < 0.15, "q slope {slope}, gaps {gaps_q:?}");
    }
}
