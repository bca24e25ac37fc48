//! Euler-Lagrange residuals on sampled trajectories, for the three
//! variational recipes and the q-variant, plus the mixed-order equations.
//!
//! All residual operators share one shape: build the generalized momentum
//! series p(t) = ∂L/∂(Dx), differentiate the appropriate kernel-weighted
//! combination along the grid, and subtract from ∂L/∂x. Residual arrays are
//! full-length; the two points at each edge come from one-sided stencils and
//! should be read through [`interior_max`].

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::deform::DeformKind;
use crate::error::{Error, Result};
use crate::lagrangian::MechLagrangian;
use crate::numeric;

/// Minimum samples for a residual evaluation to be meaningful.
pub const MIN_GRID: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridKind {
    /// grid holds the physical time t
    Raw,
    /// grid holds u = 1 + t'/l0 (time origin mapped to u = 1)
    Shifted,
}

/// A sampled trajectory. Velocities are differenced from positions when not
/// supplied. On shifted grids `t` stores u = 1 + t'/l0 and `v` stores dx/dt'.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub t: Vec<f64>,
    pub x: Vec<f64>,
    pub v: Option<Vec<f64>>,
    pub grid_kind: GridKind,
}

impl Trajectory {
    pub fn new(t: Vec<f64>, x: Vec<f64>, v: Option<Vec<f64>>, grid_kind: GridKind) -> Result<Self> {
        if t.len() != x.len() || v.as_ref().is_some_and(|v| v.len() != t.len()) {
            return Err(Error::Precondition(format!(
                "trajectory columns disagree: t {}, x {}, v {:?}",
                t.len(),
                x.len(),
                v.as_ref().map(|v| v.len())
            )));
        }
        if t.len() < 3 {
            return Err(Error::Precondition("trajectory needs at least 3 samples".into()));
        }
        for w in t.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::Precondition(format!(
                    "time grid must be strictly increasing (violated near t = {})",
                    w[0]
                )));
            }
        }
        if grid_kind == GridKind::Shifted && t[0] < 1.0 - 1e-12 {
            return Err(Error::Precondition(format!(
                "shifted grid stores u = 1 + t'/l0 and must start at u >= 1, got {}",
                t[0]
            )));
        }
        let finite = t.iter().chain(&x).chain(v.iter().flat_map(|v| v.iter())).all(|z| z.is_finite());
        if !finite {
            return Err(Error::Precondition("trajectory contains non-finite samples".into()));
        }
        Ok(Trajectory { t, x, v, grid_kind })
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// Stored velocities, or 4th-order differenced positions.
    pub fn velocities(&self) -> Result<Vec<f64>> {
        match &self.v {
            Some(v) => Ok(v.clone()),
            None => numeric::sampled_deriv(&self.t, &self.x),
        }
    }
}

fn check_resolution(traj: &Trajectory) -> Result<()> {
    if traj.len() < MIN_GRID {
        return Err(Error::Precondition(format!(
            "grid too coarse for residual evaluation: {} points < {MIN_GRID}",
            traj.len()
        )));
    }
    Ok(())
}

/// Max |r| over the interior, skipping the two one-sided points at each edge.
pub fn interior_max(r: &[f64]) -> f64 {
    let n = r.len();
    if n <= 4 {
        return f64::NAN;
    }
    r[2..n - 2].iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// Residual of the shared option-1/option-2 equation
/// `∂L/∂x − D_t(∂L/∂(Dx)) = 0`, with D the deformed derivative of `l.deform`.
///
/// Options 1 and 2 are algebraically identical here; both route through this
/// function.
pub fn el_residual_opt12(traj: &Trajectory, l: &MechLagrangian) -> Result<Vec<f64>> {
    check_resolution(traj)?;
    if traj.grid_kind == GridKind::Shifted {
        return Err(Error::Precondition(
            "option 1/2 residuals operate on raw grids; resample the shifted trajectory".into(),
        ));
    }
    let n = traj.len();
    let v = traj.velocities()?;
    let mut kernel = vec![0.0; n];
    for i in 0..n {
        kernel[i] = l.deform.kernel(traj.t[i])?;
    }
    let mut p = vec![0.0; n];
    for i in 0..n {
        let dax = kernel[i] * v[i];
        p[i] = l.dl_ddax(traj.t[i], traj.x[i], dax)?;
    }
    let dp = numeric::sampled_deriv(&traj.t, &p)?;
    let mut r = vec![0.0; n];
    for i in 0..n {
        let dax = kernel[i] * v[i];
        r[i] = l.dl_dx(traj.t[i], traj.x[i], dax)? - kernel[i] * dp[i];
    }
    Ok(r)
}

/// Residual of the option-3 equation `∂L/∂x − d/dt(t^(1−α) ∂L/∂(Dx)) = 0`
/// on raw grids. On shifted grids the same equation is evaluated in the
/// stored variable u = 1 + t'/l0, whose chain rule contributes a 1/l0 on the
/// outer derivative.
pub fn el_residual_opt3(traj: &Trajectory, l: &MechLagrangian) -> Result<Vec<f64>> {
    check_resolution(traj)?;
    if l.deform.kind != DeformKind::Conformable && l.deform.kind != DeformKind::Classical {
        return Err(Error::Precondition(format!(
            "option-3 residual is defined for the power-kernel time derivative, got {}",
            l.deform.kind
        )));
    }
    let alpha = if l.deform.kind == DeformKind::Classical { 1.0 } else { l.deform.alpha };
    let n = traj.len();
    let v = traj.velocities()?;
    match traj.grid_kind {
        GridKind::Raw => {
            if traj.t[0] <= 0.0 {
                return Err(Error::Domain(
                    "option-3 kernel t^(1-alpha) is singular at t <= 0; use the shifted grid u = 1 + t'/l0"
                        .into(),
                ));
            }
            let mut w = vec![0.0; n];
            for i in 0..n {
                let k = traj.t[i].powf(1.0 - alpha);
                let dax = k * v[i];
                w[i] = k * l.dl_ddax(traj.t[i], traj.x[i], dax)?;
            }
            let dw = numeric::sampled_deriv(&traj.t, &w)?;
            let mut r = vec![0.0; n];
            for i in 0..n {
                let k = traj.t[i].powf(1.0 - alpha);
                r[i] = l.dl_dx(traj.t[i], traj.x[i], k * v[i])? - dw[i];
            }
            Ok(r)
        }
        GridKind::Shifted => {
            // stored: t = u >= 1, v = dx/dt'; d/dt' = (1/l0) d/du
            let l0 = l.deform.l0;
            let mut w = vec![0.0; n];
            for i in 0..n {
                let k = traj.t[i].powf(1.0 - alpha);
                let dax = k * v[i];
                w[i] = k * l.dl_ddax(traj.t[i], traj.x[i], dax)?;
            }
            let dw = numeric::sampled_deriv(&traj.t, &w)?;
            let mut r = vec![0.0; n];
            for i in 0..n {
                let k = traj.t[i].powf(1.0 - alpha);
                r[i] = l.dl_dx(traj.t[i], traj.x[i], k * v[i])? - dw[i] / l0;
            }
            Ok(r)
        }
    }
}

/// Residual of the q-variant equation
/// `∂L/∂x − l0·d/dt[(1+(1−q)t)·∂L/∂(D_q x)] = 0`.
///
/// The q-deformed velocity here carries the cutoff: D_q x = l0·(1+(1−q)t)·ẋ.
/// With that convention the V = 0 expansion reproduces the movement equation
/// `2 l0² (1−q) m k ẋ + l0² k² m ẍ = −V'` and the classical limit needs both
/// q → 1 and l0 → 1 (the single-l0 residual and the l0² dynamics are then one
/// and the same statement).
pub fn el_residual_q(traj: &Trajectory, l: &MechLagrangian) -> Result<Vec<f64>> {
    check_resolution(traj)?;
    if l.deform.kind != DeformKind::QDeriv {
        return Err(Error::Precondition(format!(
            "q residual needs a q-derivative deformation, got {}",
            l.deform.kind
        )));
    }
    if traj.grid_kind == GridKind::Shifted {
        return Err(Error::Precondition(
            "q residuals operate on raw grids (the kernel already regularises t = 0)".into(),
        ));
    }
    let q = l.deform.q;
    let l0 = l.deform.l0;
    let n = traj.len();
    let v = traj.velocities()?;
    let mut kp = vec![0.0; n];
    for i in 0..n {
        let k = l.deform.kernel(traj.t[i])?; // errors name the pole
        let dax = l0 * k * v[i];
        kp[i] = k * l.dl_ddax(traj.t[i], traj.x[i], dax)?;
    }
    let d = numeric::sampled_deriv(&traj.t, &kp)?;
    let mut r = vec![0.0; n];
    for i in 0..n {
        let k = 1.0 + (1.0 - q) * traj.t[i];
        r[i] = l.dl_dx(traj.t[i], traj.x[i], l0 * k * v[i])? - l0 * d[i];
    }
    Ok(r)
}

type MixedFn = Arc<dyn Fn(f64, f64, f64, f64, f64, f64) -> f64 + Send + Sync>;

/// Two-field Lagrangian `L(x, y, D^α y, D^β y, z, D^γ z)` on a spatial-like
/// base axis, where the action measure carries order α. Partials are central
/// differences (exact for quadratic L).
#[derive(Clone)]
pub struct MixedLagrangian {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: Option<f64>,
    /// include the undelivered `(∂L/∂D^β y)(α−β)x^(−β)` correction terms;
    /// switchable for sensitivity studies
    pub include_extra_terms: bool,
    l: MixedFn,
}

impl fmt::Debug for MixedLagrangian {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MixedLagrangian")
            .field("alpha", &self.alpha)
            .field("beta", &self.beta)
            .field("gamma", &self.gamma)
            .field("include_extra_terms", &self.include_extra_terms)
            .finish()
    }
}

impl MixedLagrangian {
    /// `l(x, y, day, dby, z, dgz)`; pass zeros for slots the Lagrangian
    /// ignores.
    pub fn new(
        alpha: f64,
        beta: f64,
        gamma: Option<f64>,
        l: impl Fn(f64, f64, f64, f64, f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        for (name, v) in [("alpha", alpha), ("beta", beta)] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::Parameter(format!("{name} must be in (0, 1], got {v}")));
            }
        }
        if let Some(g) = gamma {
            if !(g > 0.0 && g <= 1.0) {
                return Err(Error::Parameter(format!("gamma must be in (0, 1], got {g}")));
            }
        }
        Ok(MixedLagrangian { alpha, beta, gamma, include_extra_terms: true, l: Arc::new(l) })
    }

    fn partial(&self, args: [f64; 6], slot: usize) -> f64 {
        // exact for quadratic L at any h; the wide step keeps rounding noise
        // out of the downstream stencil derivative
        let h = 1e-4 * args[slot].abs().max(1.0);
        let mut up = args;
        let mut dn = args;
        up[slot] += h;
        dn[slot] -= h;
        let f = &self.l;
        (f(up[0], up[1], up[2], up[3], up[4], up[5]) - f(dn[0], dn[1], dn[2], dn[3], dn[4], dn[5]))
            / (2.0 * h)
    }
}

#[derive(Debug, Clone)]
pub struct MixedResiduals {
    pub y: Vec<f64>,
    pub z: Option<Vec<f64>>,
}

/// Mixed-order Euler-Lagrange residuals:
///
/// y: `∂L/∂y − D^α(∂L/∂D^α y) − D^β(∂L/∂D^β y) − (∂L/∂D^β y)(α−β)x^(−β)`
/// z: `∂L/∂z − D^γ(∂L/∂D^γ z) − (∂L/∂D^γ z)(α−γ)x^(−γ)`
///
/// The trailing correction terms are kept exactly in this stated form (their
/// derivation is not constructive); `include_extra_terms = false` zeroes them.
pub fn el_residual_mixed(
    x_grid: &[f64],
    y: &[f64],
    z: Option<&[f64]>,
    ml: &MixedLagrangian,
) -> Result<MixedResiduals> {
    let n = x_grid.len();
    if n < MIN_GRID {
        return Err(Error::Precondition(format!(
            "grid too coarse for residual evaluation: {n} points < {MIN_GRID}"
        )));
    }
    if y.len() != n || z.is_some_and(|z| z.len() != n) {
        return Err(Error::Precondition("field columns must match the grid length".into()));
    }
    let singular_extra = ml.include_extra_terms
        && (ml.beta != ml.alpha || ml.gamma.is_some_and(|g| g != ml.alpha));
    if singular_extra && x_grid[0] <= 0.0 {
        return Err(Error::Domain(
            "correction term x^(-order) is singular at x <= 0 when orders differ".into(),
        ));
    }

    let yp = numeric::sampled_deriv(x_grid, y)?;
    let zp = match z {
        Some(z) => Some(numeric::sampled_deriv(x_grid, z)?),
        None => None,
    };

    // point arguments: (x, y, day, dby, z, dgz)
    let args_at = |i: usize| -> [f64; 6] {
        let x = x_grid[i];
        let day = x.powf(1.0 - ml.alpha) * yp[i];
        let dby = x.powf(1.0 - ml.beta) * yp[i];
        let (zv, dgz) = match (&z, &zp, ml.gamma) {
            (Some(z), Some(zp), Some(g)) => (z[i], x.powf(1.0 - g) * zp[i]),
            _ => (0.0, 0.0),
        };
        [x, y[i], day, dby, zv, dgz]
    };

    let mut p_alpha = vec![0.0; n];
    let mut p_beta = vec![0.0; n];
    let mut p_gamma = vec![0.0; n];
    for i in 0..n {
        let a = args_at(i);
        p_alpha[i] = ml.partial(a, 2);
        p_beta[i] = ml.partial(a, 3);
        if z.is_some() {
            p_gamma[i] = ml.partial(a, 5);
        }
    }
    let dpa = numeric::sampled_deriv(x_grid, &p_alpha)?;
    let dpb = numeric::sampled_deriv(x_grid, &p_beta)?;

    let mut ry = vec![0.0; n];
    for i in 0..n {
        let a = args_at(i);
        let x = x_grid[i];
        let mut r = ml.partial(a, 1)
            - x.powf(1.0 - ml.alpha) * dpa[i]
            - x.powf(1.0 - ml.beta) * dpb[i];
        if ml.include_extra_terms {
            r -= p_beta[i] * (ml.alpha - ml.beta) * x.powf(-ml.beta);
        }
        ry[i] = r;
    }

    let rz = if let (Some(_), Some(g)) = (z, ml.gamma) {
        let dpg = numeric::sampled_deriv(x_grid, &p_gamma)?;
        let mut rz = vec![0.0; n];
        for i in 0..n {
            let a = args_at(i);
            let x = x_grid[i];
            let mut r = ml.partial(a, 4) - x.powf(1.0 - g) * dpg[i];
            if ml.include_extra_terms {
                r -= p_gamma[i] * (ml.alpha - g) * x.powf(-g);
            }
            rz[i] = r;
        }
        Some(rz)
    } else {
        None
    };

    Ok(MixedResiduals { y: ry, z: rz })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::deform::DeformationParams;
    use crate::lagrangian::{Potential, VariationalOption};
    use approx::assert_relative_eq;

    fn grid(a: f64, b: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
    }

    fn free(deform: DeformationParams, option: VariationalOption) -> MechLagrangian {
        MechLagrangian::new(1.0, Potential::zero(), deform, option).unwrap()
    }

    #[test]
    fn classical_straight_line_is_exact() {
        let t = grid(0.0, 2.0, 100);
        let x: Vec<f64> = t.iter().map(|&t| 0.3 + 1.7 * t).collect();
        let traj = Trajectory::new(t, x, None, GridKind::Raw).unwrap();
        let l = free(DeformationParams::classical(), VariationalOption::Opt1);
        let r = el_residual_opt12(&traj, &l).unwrap();
        assert!(interior_max(&r) < 1e-8, "max r = {:.3e}", interior_max(&r));
    }

    #[test]
    fn opt12_closed_form_solution_converges_second_order() {
        // x = x0 + v0 t^alpha / alpha solves the free option-1/2 equation.
        let alpha = 0.6;
        let l = free(DeformationParams::conformable(alpha).unwrap(), VariationalOption::Opt1);
        let mut maxima = Vec::new();
        for n in [200usize, 400, 800] {
            let t = grid(0.5, 3.0, n);
            let x: Vec<f64> = t.iter().map(|&t| 1.0 + 2.0 * t.powf(alpha) / alpha).collect();
            let traj = Trajectory::new(t, x, None, GridKind::Raw).unwrap();
            let r = el_residual_opt12(&traj, &l).unwrap();
            maxima.push(interior_max(&r));
        }
        // must refine at 2nd order or better
        assert!(maxima[0] < 5e-5, "maxima: {maxima:?}");
        assert!(maxima[2] < 1e-6, "maxima: {maxima:?}");
        assert!(maxima[0] / maxima[2] > 16.0, "maxima: {maxima:?}");
        // a generic non-solution must be visibly nonzero
        let t = grid(0.5, 3.0, 400);
        let x: Vec<f64> = t.to_vec();
        let traj = Trajectory::new(t, x, None, GridKind::Raw).unwrap();
        let half = free(DeformationParams::conformable(0.5).unwrap(), VariationalOption::Opt1);
        let r = el_residual_opt12(&traj, &half).unwrap();
        assert!(interior_max(&r) > 1e-2);
    }

    #[test]
    fn opt12_and_opt2_share_code_bit_for_bit() {
        let alpha = 0.7;
        let t = grid(0.5, 2.5, 120);
        let x: Vec<f64> = t.iter().map(|&t| (t * 1.1).sin()).collect();
        let traj = Trajectory::new(t, x, None, GridKind::Raw).unwrap();
        let l1 = free(DeformationParams::conformable(alpha).unwrap(), VariationalOption::Opt1);
        let l2 = free(DeformationParams::conformable(alpha).unwrap(), VariationalOption::Opt2);
        let r1 = el_residual_opt12(&traj, &l1).unwrap();
        let r2 = el_residual_opt12(&traj, &l2).unwrap();
        assert_eq!(r1, r2);
    }

    #[test]
    fn opt3_first_integral_solution() {
        // V=0: t^(2-2a) xdot = const, so xdot = C t^(2a-2).
        let alpha = 0.75;
        let l = free(DeformationParams::conformable(alpha).unwrap(), VariationalOption::Opt3);
        let t = grid(1.0, 4.0, 600);
        // x(t) = ∫ t^(2a-2) = t^(2a-1)/(2a-1), 2a-1 = 0.5
        let x: Vec<f64> = t.iter().map(|&t| t.powf(0.5) / 0.5).collect();
        let traj = Trajectory::new(t, x, None, GridKind::Raw).unwrap();
        let r = el_residual_opt3(&traj, &l).unwrap();
        assert!(interior_max(&r) < 2e-7, "max r = {:.3e}", interior_max(&r));
    }

    #[test]
    fn opt3_expansion_matches_coefficient_form() {
        // r must equal -V' - m[2(1-a) t^(1-2a) xdot + t^(2-2a) xddot]
        let alpha = 0.8;
        let m = 1.4;
        let l = MechLagrangian::new(
            m,
            Potential::harmonic(1.0),
            DeformationParams::conformable(alpha).unwrap(),
            VariationalOption::Opt3,
        )
        .unwrap();
        let t = grid(1.0, 3.0, 800);
        let x: Vec<f64> = t.iter().map(|&t| (0.9 * t).sin()).collect();
        let traj = Trajectory::new(t.clone(), x.clone(), None, GridKind::Raw).unwrap();
        let r = el_residual_opt3(&traj, &l).unwrap();
        for (i, &ti) in t.iter().enumerate().skip(2).take(t.len() - 4) {
            let xd = 0.9 * (0.9 * ti).cos();
            let xdd = -0.81 * (0.9 * ti).sin();
            let expect = -x[i]
                - m * (2.0 * (1.0 - alpha) * ti.powf(1.0 - 2.0 * alpha) * xd
                    + ti.powf(2.0 - 2.0 * alpha) * xdd);
            assert_relative_eq!(r[i], expect, epsilon = 5e-6, max_relative = 5e-6);
        }
    }

    #[test]
    fn opt3_raw_grid_rejects_time_origin() {
        let l = free(DeformationParams::conformable(0.5).unwrap(), VariationalOption::Opt3);
        let t = grid(0.0, 2.0, 100);
        let x = t.clone();
        let traj = Trajectory::new(t, x, None, GridKind::Raw).unwrap();
        match el_residual_opt3(&traj, &l) {
            Err(Error::Domain(msg)) => assert!(msg.contains("shifted")),
            other => panic!("expected domain error, got {other:?}"),
        }
    }

    #[test]
    fn opt3_shifted_grid_carries_chain_rule_factor() {
        // In u = 1 + t'/l0 with v = dx/dt': r = -V' - (m/l0) d/du[u^(2-2a) v].
        // A u-space first-integral solution must land at zero for any l0.
        let alpha = 0.7;
        let l0 = 2.5;
        let deform = {
            let mut d = DeformationParams::conformable(alpha).unwrap();
            d.l0 = l0;
            d
        };
        let l = MechLagrangian::new(1.0, Potential::zero(), deform, VariationalOption::Opt3).unwrap();
        let u = grid(1.0, 3.0, 600);
        // x_u = u^(2a-2) => xdot = u^(2a-2)/l0; x = u^(2a-1)/(2a-1)
        let x: Vec<f64> = u.iter().map(|&u| u.powf(2.0 * alpha - 1.0) / (2.0 * alpha - 1.0)).collect();
        let v: Vec<f64> = u.iter().map(|&u| u.powf(2.0 * alpha - 2.0) / l0).collect();
        let traj = Trajectory::new(u, x, Some(v), GridKind::Shifted).unwrap();
        let r = el_residual_opt3(&traj, &l).unwrap();
        assert!(interior_max(&r) < 1e-9, "max r = {:.3e}", interior_max(&r));
    }

    #[test]
    fn q_residual_first_integral_and_expansion() {
        let q = 0.5;
        let l0 = 1.5;
        let m = 1.2;
        let deform = DeformationParams::q_deriv_with_cutoff(q, l0).unwrap();
        let l = MechLagrangian::new(m, Potential::zero(), deform, VariationalOption::Opt3).unwrap();
        let t = grid(0.0, 3.0, 600);
        // xdot = [1+(1-q)t]^(-2): x = -(1/(1-q)) [1+(1-q)t]^(-1) + C
        let x: Vec<f64> = t.iter().map(|&t| -2.0 / (1.0 + 0.5 * t)).collect();
        let traj = Trajectory::new(t.clone(), x, None, GridKind::Raw).unwrap();
        let r = el_residual_q(&traj, &l).unwrap();
        assert!(interior_max(&r) < 1e-6, "max r = {:.3e}", interior_max(&r));

        // generic trajectory: residual equals -V' - l0^2 m d/dt[k^2 xdot]
        let x2: Vec<f64> = t.iter().map(|&t| (0.8 * t).cos()).collect();
        let traj2 = Trajectory::new(t.clone(), x2, None, GridKind::Raw).unwrap();
        let r2 = el_residual_q(&traj2, &l).unwrap();
        for (i, &ti) in t.iter().enumerate().skip(2).take(t.len() - 4) {
            let k = 1.0 + 0.5 * ti;
            let xd = -0.8 * (0.8 * ti).sin();
            let xdd = -0.64 * (0.8 * ti).cos();
            let expect = -l0 * l0 * m * (2.0 * 0.5 * k * xd + k * k * xdd);
            assert_relative_eq!(r2[i], expect, epsilon = 1e-6, max_relative = 1e-6);
        }
    }

    #[test]
    fn q_residual_classical_limit() {
        let deform = DeformationParams::q_deriv_with_cutoff(1.0, 1.0).unwrap();
        let l = MechLagrangian::new(1.0, Potential::harmonic(1.0), deform, VariationalOption::Opt3)
            .unwrap();
        let t = grid(0.0, 2.0 * std::f64::consts::PI, 700);
        let x: Vec<f64> = t.iter().map(|&t| t.cos()).collect();
        let traj = Trajectory::new(t, x, None, GridKind::Raw).unwrap();
        // cos t solves m xdd = -x: residual ~ stencil error only
        let r = el_residual_q(&traj, &l).unwrap();
        assert!(interior_max(&r) < 1e-7);
    }

    #[test]
    fn all_residuals_collapse_classically() {
        // alpha = 1 / q = 1, l0 = 1: every operator agrees with the classical
        // residual -V' - m xdd to tight tolerance.
        let t = grid(1.0, 3.0, 500);
        let x: Vec<f64> = t.iter().map(|&t| (1.3 * t).sin()).collect();
        let traj = Trajectory::new(t.clone(), x.clone(), None, GridKind::Raw).unwrap();
        let mk = |d: DeformationParams| {
            MechLagrangian::new(1.0, Potential::harmonic(1.0), d, VariationalOption::Opt1).unwrap()
        };
        let classical = el_residual_opt12(&traj, &mk(DeformationParams::classical())).unwrap();
        let conf = el_residual_opt12(&traj, &mk(DeformationParams::conformable(1.0).unwrap())).unwrap();
        let o3 = el_residual_opt3(&traj, &mk(DeformationParams::conformable(1.0).unwrap())).unwrap();
        let qr = el_residual_q(&traj, &mk(DeformationParams::q_deriv_with_cutoff(1.0, 1.0).unwrap()))
            .unwrap();
        for i in 2..t.len() - 2 {
            assert_relative_eq!(classical[i], conf[i], epsilon = 1e-10);
            assert_relative_eq!(classical[i], o3[i], epsilon = 1e-10);
            assert_relative_eq!(classical[i], qr[i], epsilon = 1e-10);
        }
    }

    #[test]
    fn grid_too_coarse_is_diagnosed() {
        let t = grid(0.5, 1.0, 10);
        let x = t.clone();
        let traj = Trajectory::new(t, x, None, GridKind::Raw).unwrap();
        let l = free(DeformationParams::classical(), VariationalOption::Opt1);
        assert!(matches!(el_residual_opt12(&traj, &l), Err(Error::Precondition(_))));
    }

    #[test]
    fn mixed_degenerate_orders_reduce_to_opt12() {
        // L = ½ day² − ½ y², beta = alpha, no z: the correction term carries
        // (alpha-beta) = 0 and the equation is the plain option-1/2 one.
        let alpha = 0.6;
        let ml = MixedLagrangian::new(alpha, alpha, None, |_x, y, day, _dby, _z, _dgz| {
            0.5 * day * day - 0.5 * y * y
        })
        .unwrap();
        let xg = grid(1.0, 2.0, 300);
        let y: Vec<f64> = xg.iter().map(|&x| x.powf(1.3)).collect();
        let mixed = el_residual_mixed(&xg, &y, None, &ml).unwrap();
        assert!(mixed.z.is_none());

        let l = MechLagrangian::new(
            1.0,
            Potential::harmonic(1.0),
            DeformationParams::conformable(alpha).unwrap(),
            VariationalOption::Opt1,
        )
        .unwrap();
        let traj = Trajectory::new(xg.clone(), y, None, GridKind::Raw).unwrap();
        let r12 = el_residual_opt12(&traj, &l).unwrap();
        for i in 2..xg.len() - 2 {
            // note: D^a(p_a) + D^b(p_b) with both partials seeing the same
            // slot-value splits the momentum between the two terms when
            // beta == alpha; the mixed L above routes all kinetic energy
            // through the alpha slot, so the comparison is direct.
            assert_relative_eq!(mixed.y[i], r12[i], epsilon = 1e-7, max_relative = 1e-6);
        }
    }

    #[test]
    fn mixed_matches_term_by_term_oracle() {
        // L = ½ day² + ½ dby² − ½ y² + ½ dgz² with y = x³, z = x²,
        // alpha=0.6, beta=0.4, gamma=0.5 on [1,2]: assemble each term from
        // closed forms and compare.
        let (alpha, beta, gamma) = (0.6, 0.4, 0.5);
        let ml = MixedLagrangian::new(alpha, beta, Some(gamma), |_x, y, day, dby, _z, dgz| {
            0.5 * day * day + 0.5 * dby * dby - 0.5 * y * y + 0.5 * dgz * dgz
        })
        .unwrap();
        let xg = grid(1.0, 2.0, 400);
        let y: Vec<f64> = xg.iter().map(|&x| x.powi(3)).collect();
        let z: Vec<f64> = xg.iter().map(|&x| x.powi(2)).collect();
        let got = el_residual_mixed(&xg, &y, Some(&z), &ml).unwrap();
        let rz = got.z.unwrap();
        for (i, &x) in xg.iter().enumerate().skip(2).take(xg.len() - 4) {
            // day = x^(1-a)·3x² = 3x^(3-a); p_a = day; D^a p_a = x^(1-a)·3(3-a)x^(2-a)
            let da_pa = 3.0 * (3.0 - alpha) * x.powf(3.0 - 2.0 * alpha);
            let db_pb = 3.0 * (3.0 - beta) * x.powf(3.0 - 2.0 * beta);
            let p_b = 3.0 * x.powf(3.0 - beta);
            let extra_y = p_b * (alpha - beta) * x.powf(-beta);
            let want_y = -y[i] - da_pa - db_pb - extra_y;
            assert_relative_eq!(got.y[i], want_y, max_relative = 1e-7);

            // dgz = x^(1-g)·2x = 2x^(2-g); D^g p_g = x^(1-g)·2(2-g)x^(1-g)
            let dg_pg = 2.0 * (2.0 - gamma) * x.powf(2.0 - 2.0 * gamma);
            let p_g = 2.0 * x.powf(2.0 - gamma);
            let extra_z = p_g * (alpha - gamma) * x.powf(-gamma);
            let want_z = -dg_pg - extra_z;
            assert_relative_eq!(rz[i], want_z, max_relative = 1e-7);
        }

        // switching the correction off removes exactly the extra terms
        let mut ml_off = ml.clone();
        ml_off.include_extra_terms = false;
        let off = el_residual_mixed(&xg, &y, Some(&z), &ml_off).unwrap();
        for (i, &x) in xg.iter().enumerate().skip(2).take(xg.len() - 4) {
            let p_b = 3.0 * x.powf(3.0 - beta);
            let extra_y = p_b * (alpha - beta) * x.powf(-beta);
            assert_relative_eq!(got.y[i], off.y[i] - extra_y, max_relative = 1e-7);
        }
    }

    #[test]
    fn mixed_singular_correction_is_rejected_at_origin() {
        let ml = MixedLagrangian::new(0.6, 0.4, None, |_x, _y, day, _dby, _z, _dgz| {
            0.5 * day * day
        })
        .unwrap();
        let xg = grid(0.0, 1.0, 100);
        let y = xg.clone();
        assert!(matches!(el_residual_mixed(&xg, &y, None, &ml), Err(Error::Domain(_))));
    }

    #[test]
    fn trajectory_validation() {
        assert!(Trajectory::new(vec![0.0, 1.0], vec![0.0, 1.0], None, GridKind::Raw).is_err());
        assert!(Trajectory::new(vec![0.0, 1.0, 0.5], vec![0.0; 3], None, GridKind::Raw).is_err());
        assert!(Trajectory::new(vec![0.5, 1.0, 1.5], vec![0.0; 3], None, GridKind::Shifted).is_err());
        assert!(Trajectory::new(vec![1.0, 1.5, 2.0], vec![0.0; 3], None, GridKind::Shifted).is_ok());
    }
}
