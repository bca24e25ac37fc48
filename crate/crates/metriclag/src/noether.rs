//! Conserved currents of the wave densities and the pointwise divergence
//! check that goes with them.
//!
//! A symmetry is an infinitesimal field variation `delta phi(x, psi)`,
//! optionally paired with boundary terms `G^mu` when the density only returns
//! to itself up to a total derivative. The assembled current is
//!
//! ```text
//! J^0 = -hbar * Im(conj(psi) delta) - G^0
//! J^1 = -(hbar^2 / m) * w(x) * Re(conj(d_x psi) delta) - G^1
//! ```
//!
//! where `w` is the coefficient the variant's kinetic term puts in front of
//! the gradient density: 1 for the plain-space equations, the derivative
//! kernel for the kernel-weighted one, and the squared kernel (conductivity)
//! for the flux-form one. On shell the pair satisfies
//! `D_t J^0 + D_x J^1 = 0` with each axis carrying its own derivative
//! deformation, which is what [`deformed_divergence`] measures.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::deform::DeformationParams;
use crate::error::{Error, Result};
use crate::lagrangian::{FieldLagrangian, FieldVariant};
use crate::numeric;
use crate::schrodinger::{self, build_hamiltonian, Evolution};

/// Relative field-equation residual above which a snapshot is flagged.
const RESIDUAL_WARN: f64 = 1e-2;

/// An infinitesimal variation of the field together with the boundary terms
/// it picks up. The default boundary terms are zero, which covers strict
/// symmetries (phase rotations, shifts of a free real field).
#[derive(Clone)]
pub struct SymmetryVariation {
    delta_phi: Arc<dyn Fn(f64, Complex64) -> Complex64 + Send + Sync>,
    boundary_time: Arc<dyn Fn(f64, Complex64) -> f64 + Send + Sync>,
    boundary_space: Arc<dyn Fn(f64, Complex64) -> f64 + Send + Sync>,
}

impl fmt::Debug for SymmetryVariation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("SymmetryVariation(..)")
    }
}

impl SymmetryVariation {
    /// A variation under which the density is exactly invariant (`G^mu = 0`).
    pub fn strict(
        delta: impl Fn(f64, Complex64) -> Complex64 + Send + Sync + 'static,
    ) -> Self {
        SymmetryVariation {
            delta_phi: Arc::new(delta),
            boundary_time: Arc::new(|_, _| 0.0),
            boundary_space: Arc::new(|_, _| 0.0),
        }
    }

    /// A variation that shifts the density by the total derivative of
    /// `(g_time, g_space)`.
    pub fn with_boundary(
        delta: impl Fn(f64, Complex64) -> Complex64 + Send + Sync + 'static,
        g_time: impl Fn(f64, Complex64) -> f64 + Send + Sync + 'static,
        g_space: impl Fn(f64, Complex64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        SymmetryVariation {
            delta_phi: Arc::new(delta),
            boundary_time: Arc::new(g_time),
            boundary_space: Arc::new(g_space),
        }
    }

    /// Global phase rotation `delta psi = i psi`; its charge is the
    /// (measure-weighted) probability, up to the factor `-hbar`.
    pub fn phase() -> Self {
        SymmetryVariation::strict(|_, z| Complex64::new(-z.im, z.re))
    }

    /// Constant shift `delta phi = 1`, a symmetry of potential-free real
    /// densities.
    pub fn shift() -> Self {
        SymmetryVariation::strict(|_, _| Complex64::new(1.0, 0.0))
    }

    fn delta(&self, x: f64, z: Complex64) -> Complex64 {
        (self.delta_phi)(x, z)
    }

    fn g_time(&self, x: f64, z: Complex64) -> f64 {
        (self.boundary_time)(x, z)
    }

    fn g_space(&self, x: f64, z: Complex64) -> f64 {
        (self.boundary_space)(x, z)
    }
}

/// Current densities of one snapshot, sampled on the snapshot's grid.
///
/// `warning` is set when the snapshot visibly fails its own field equation
/// (checked against the neighbouring snapshots), in which case the current is
/// still assembled but conservation statements about it are hollow.
#[derive(Debug, Clone)]
pub struct NoetherCurrent {
    pub x: Vec<f64>,
    pub j_time: Vec<f64>,
    pub j_space: Vec<f64>,
    pub warning: Option<String>,
}

/// Pointwise divergence `D_t J^0 + D_x J^1` on the interior of the sampled
/// space-time block, with per-axis derivative deformations.
#[derive(Debug, Clone)]
pub struct DivergenceField {
    /// Interior time stamps (the first and last slice carry no centered stencil).
    pub times: Vec<f64>,
    /// Interior grid nodes.
    pub x: Vec<f64>,
    /// `residual[k][j]` at `(times[k], x[j])`.
    pub residual: Vec<Vec<f64>>,
    pub max_abs: f64,
}

/// Gradient-density coefficient of the variant's kinetic term.
fn gradient_weight(l: &FieldLagrangian, x: f64) -> Result<f64> {
    match l.variant {
        FieldVariant::TimeDeformed | FieldVariant::ScaleQTime | FieldVariant::NrtNonlinear => {
            Ok(1.0)
        }
        FieldVariant::SpatialDeformed => {
            if l.deform.is_identity() {
                Ok(1.0)
            } else {
                l.deform.kernel(x)
            }
        }
        FieldVariant::Opt3Spatial => schrodinger::conductivity(&l.deform, x),
    }
}

/// Apply the five-point skew gradient (zero extension at the walls) to a
/// complex field.
fn discrete_gradient(psi: &[Complex64], h: f64) -> Vec<Complex64> {
    let n = psi.len();
    let g = schrodinger::gradient_skew_4th(n, h);
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    for r in 0..n {
        let lo = r.saturating_sub(2);
        let hi = (r + 2).min(n - 1);
        let mut acc = Complex64::new(0.0, 0.0);
        for c in lo..=hi {
            acc += g[(r, c)] * psi[c];
        }
        out[r] = acc;
    }
    out
}

fn check_evolution(ev: &Evolution) -> Result<()> {
    if ev.states.is_empty() {
        return Err(Error::Precondition("the evolution holds no snapshots".into()));
    }
    if ev.times.len() != ev.states.len() {
        return Err(Error::Precondition(format!(
            "evolution bookkeeping is inconsistent: {} time stamps for {} snapshots",
            ev.times.len(),
            ev.states.len()
        )));
    }
    Ok(())
}

/// Assemble the current pair of `symmetry` on snapshot `index` of an
/// evolution. The neighbouring snapshots are used only for the
/// field-equation residual attached as `warning` when it exceeds a percent;
/// end snapshots (and the spectrally propagated variant, whose time kernel
/// acts mode by mode) skip that check.
pub fn noether_current(
    l: &FieldLagrangian,
    ev: &Evolution,
    index: usize,
    symmetry: &SymmetryVariation,
) -> Result<NoetherCurrent> {
    check_evolution(ev)?;
    if index >= ev.states.len() {
        return Err(Error::Range(format!(
            "snapshot index {index} out of range, the evolution holds {}",
            ev.states.len()
        )));
    }
    let wf = &ev.states[index];
    let n = wf.len();
    let h = wf.dx();

    let grad = discrete_gradient(&wf.psi, h);
    let coupling = l.hbar * l.hbar / l.m;

    let mut j_time = Vec::with_capacity(n);
    let mut j_space = Vec::with_capacity(n);
    for j in 0..n {
        let xv = wf.x[j];
        let z = wf.psi[j];
        let delta = symmetry.delta(xv, z);
        j_time.push(-l.hbar * (z.conj() * delta).im - symmetry.g_time(xv, z));
        let w = gradient_weight(l, xv)?;
        j_space.push(-coupling * w * (grad[j].conj() * delta).re - symmetry.g_space(xv, z));
    }

    let warning = snapshot_residual(l, ev, index)?;
    Ok(NoetherCurrent { x: wf.x.clone(), j_time, j_space, warning })
}

/// Relative residual of the snapshot against its own field equation, with the
/// time derivative taken in the variant's evolution variable through the
/// neighbouring snapshots. Returns `None` where no centered stencil exists.
fn snapshot_residual(l: &FieldLagrangian, ev: &Evolution, index: usize) -> Result<Option<String>> {
    if ev.states.len() < 3 || index == 0 || index + 1 == ev.states.len() {
        return Ok(None);
    }
    if l.variant == FieldVariant::ScaleQTime {
        // the deformed exponential acts mode by mode; there is no single
        // pointwise equation for a snapshot to satisfy
        return Ok(None);
    }
    let wf = &ev.states[index];
    let n = wf.len();
    let prev = &ev.states[index - 1];
    let next = &ev.states[index + 1];
    if prev.len() != n || next.len() != n {
        return Err(Error::Precondition(
            "neighbouring snapshots live on different grids".into(),
        ));
    }

    // evolution variable: the time measure for the deformed-time equation,
    // raw time otherwise
    let map = |t: f64| -> Result<f64> {
        match l.variant {
            FieldVariant::TimeDeformed => l.deform.measure_antiderivative(t),
            _ => Ok(t),
        }
    };
    let v = [map(ev.times[index - 1])?, map(ev.times[index])?, map(ev.times[index + 1])?];
    if !(v[0] < v[1] && v[1] < v[2]) {
        return Err(Error::Precondition(format!(
            "time stamps must increase strictly, got {:?}",
            ev.times[index - 1..=index + 1].to_vec()
        )));
    }
    let w = numeric::fd_weights(v[1], &v, 1);

    let m = n - 2;
    let mut lhs = vec![Complex64::new(0.0, 0.0); m];
    for r in 0..m {
        let d = w[0] * prev.psi[r + 1] + w[1] * wf.psi[r + 1] + w[2] * next.psi[r + 1];
        lhs[r] = Complex64::new(0.0, l.hbar) * d;
    }

    let rhs = match l.variant {
        FieldVariant::NrtNonlinear => {
            let q = schrodinger::q_index_of(&l.deform)?;
            let a_pow = 2.0 - q;
            let mut p = vec![Complex64::new(0.0, 0.0); m];
            for (r, z) in wf.psi[1..n - 1].iter().enumerate() {
                let zp = if a_pow == 1.0 {
                    *z
                } else if z.norm_sqr() == 0.0 {
                    Complex64::new(0.0, 0.0)
                } else {
                    z.powf(a_pow)
                };
                if !zp.re.is_finite() || !zp.im.is_finite() {
                    return Ok(Some(format!(
                        "snapshot {index}: amplitude power leaves the principal branch at x = {:.6}",
                        wf.x[r + 1]
                    )));
                }
                p[r] = zp;
            }
            let d2 = schrodinger::laplacian_4th(m, wf.dx());
            let c = l.hbar * l.hbar / (2.0 * l.m * a_pow);
            let mut out = vec![Complex64::new(0.0, 0.0); m];
            for r in 0..m {
                let lo = r.saturating_sub(2);
                let hi = (r + 2).min(m - 1);
                let mut acc = Complex64::new(0.0, 0.0);
                for col in lo..=hi {
                    acc += d2[(r, col)] * p[col];
                }
                out[r] = -c * acc;
            }
            out
        }
        _ => {
            let hm = build_hamiltonian(l, wf)?;
            let mut out = vec![Complex64::new(0.0, 0.0); m];
            for r in 0..m {
                let mut acc = Complex64::new(0.0, 0.0);
                for col in 0..m {
                    let a = hm.matrix[(r, col)];
                    if a != 0.0 {
                        acc += a * wf.psi[col + 1];
                    }
                }
                out[r] = acc;
            }
            out
        }
    };

    let mut diff = 0.0;
    let mut lhs_norm = 0.0;
    let mut rhs_norm = 0.0;
    for r in 0..m {
        diff += (lhs[r] - rhs[r]).norm_sqr();
        lhs_norm += lhs[r].norm_sqr();
        rhs_norm += rhs[r].norm_sqr();
    }
    let scale = lhs_norm.max(rhs_norm).sqrt();
    if scale == 0.0 {
        return Ok(None);
    }
    let rel = diff.sqrt() / scale;
    if rel > RESIDUAL_WARN {
        return Ok(Some(format!(
            "snapshot {index} leaves a relative field-equation residual of {rel:.3e}"
        )));
    }
    Ok(None)
}

/// Charge `Q(t_k) = sum_j weight(x_j) J^0(x_j) dx` under the states' own
/// measure, one value per snapshot. For the phase symmetry this is
/// `-hbar` times the squared propagated norm, so it inherits the
/// propagator's conservation order.
pub fn charge_history(
    l: &FieldLagrangian,
    ev: &Evolution,
    symmetry: &SymmetryVariation,
) -> Result<Vec<f64>> {
    check_evolution(ev)?;
    let mut out = Vec::with_capacity(ev.states.len());
    for wf in &ev.states {
        let dx = wf.dx();
        let mut q = 0.0;
        for (xv, z) in wf.x.iter().zip(&wf.psi) {
            let delta = symmetry.delta(*xv, *z);
            let j0 = -l.hbar * (z.conj() * delta).im - symmetry.g_time(*xv, *z);
            if j0 != 0.0 {
                q += wf.measure.weight(*xv)? * j0 * dx;
            }
        }
        out.push(q);
    }
    Ok(out)
}

/// Pointwise deformed divergence of a current history: the time component is
/// differentiated in the time axis' measure variable (a centered nonuniform
/// stencil, second order there), the space component through the spatial
/// kernel times a centered difference. Interior nodes only.
pub fn deformed_divergence(
    currents: &[NoetherCurrent],
    times: &[f64],
    axis_time: &DeformationParams,
    axis_space: &DeformationParams,
) -> Result<DivergenceField> {
    let steps = currents.len();
    if steps < 3 {
        return Err(Error::Precondition(format!(
            "a centered time stencil needs at least 3 slices, got {steps}"
        )));
    }
    if times.len() != steps {
        return Err(Error::Precondition(format!(
            "{} time stamps for {steps} slices",
            times.len()
        )));
    }
    let x = &currents[0].x;
    let n = x.len();
    if n < 3 {
        return Err(Error::Precondition(format!(
            "a centered space stencil needs at least 3 nodes, got {n}"
        )));
    }
    let span = (x[n - 1] - x[0]).abs().max(1.0);
    for (k, c) in currents.iter().enumerate() {
        if c.x.len() != n
            || (c.x[0] - x[0]).abs() > 1e-12 * span
            || (c.x[n - 1] - x[n - 1]).abs() > 1e-12 * span
        {
            return Err(Error::Precondition(format!(
                "slice {k} is sampled on a different grid"
            )));
        }
        if c.j_time.len() != n || c.j_space.len() != n {
            return Err(Error::Precondition(format!(
                "slice {k} has component lengths {} / {} on {n} nodes",
                c.j_time.len(),
                c.j_space.len()
            )));
        }
    }
    let h = x[1] - x[0];
    if !(h > 0.0) {
        return Err(Error::Precondition(format!(
            "grid must increase strictly, first spacing is {h}"
        )));
    }

    let mut v = Vec::with_capacity(steps);
    for &t in times {
        v.push(axis_time.measure_antiderivative(t)?);
    }
    for k in 1..steps {
        if !(v[k] > v[k - 1]) {
            return Err(Error::Precondition(format!(
                "time stamps must increase strictly in the measure variable, got {} then {}",
                v[k - 1],
                v[k]
            )));
        }
    }

    let mut kernel_x = Vec::with_capacity(n - 2);
    for &xv in &x[1..n - 1] {
        kernel_x.push(axis_space.kernel(xv)?);
    }

    let mut residual = Vec::with_capacity(steps - 2);
    let mut max_abs = 0.0_f64;
    for k in 1..steps - 1 {
        let w = numeric::fd_weights(v[k], &v[k - 1..=k + 1], 1);
        let mut row = Vec::with_capacity(n - 2);
        for j in 1..n - 1 {
            let dt = w[0] * currents[k - 1].j_time[j]
                + w[1] * currents[k].j_time[j]
                + w[2] * currents[k + 1].j_time[j];
            let dx = kernel_x[j - 1] * (currents[k].j_space[j + 1] - currents[k].j_space[j - 1])
                / (2.0 * h);
            let r = dt + dx;
            max_abs = max_abs.max(r.abs());
            row.push(r);
        }
        residual.push(row);
    }

    Ok(DivergenceField {
        times: times[1..steps - 1].to_vec(),
        x: x[1..n - 1].to_vec(),
        residual,
        max_abs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lagrangian::Potential;
    use crate::schrodinger::{solve_spatial_deformed, solve_time_deformed, Measure, WaveFunction};
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn grid(x0: f64, x1: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| x0 + (x1 - x0) * i as f64 / (n - 1) as f64).collect()
    }

    /// Spreading free Gaussian packet for hbar = m = 1:
    /// psi(x,t) = (pi s0^2)^(-1/4) (1+i b)^(-1/2) exp(-x^2 / (2 s0^2 (1+i b)))
    /// with b = t / s0^2.
    fn free_gaussian(x: &[f64], t: f64, s0: f64) -> WaveFunction {
        let norm = (PI * s0 * s0).powf(-0.25);
        let b = Complex64::new(1.0, t / (s0 * s0));
        let pref = norm / b.sqrt();
        let psi: Vec<Complex64> =
            x.iter().map(|&xv| pref * (-xv * xv / (2.0 * s0 * s0 * b)).exp()).collect();
        WaveFunction::new(x.to_vec(), psi, Measure::Plain).unwrap()
    }

    fn manual_evolution(times: Vec<f64>, states: Vec<WaveFunction>) -> Evolution {
        let norms = states.iter().map(|s| s.norm().unwrap()).collect();
        Evolution { times, states, norms }
    }

    fn free_lagrangian(variant: FieldVariant, deform: DeformationParams) -> FieldLagrangian {
        FieldLagrangian::new(variant, 1.0, Potential::zero(), 1.0, deform).unwrap()
    }

    fn gaussian_packet(x: &[f64], center: f64, s: f64, k0: f64, measure: Measure) -> WaveFunction {
        let n = x.len();
        let norm = (PI * s * s).powf(-0.25);
        let mut psi: Vec<Complex64> = x
            .iter()
            .map(|&xv| {
                let arg = -(xv - center) * (xv - center) / (2.0 * s * s);
                Complex64::new(0.0, k0 * xv).exp() * (norm * arg.exp())
            })
            .collect();
        psi[0] = Complex64::new(0.0, 0.0);
        psi[n - 1] = Complex64::new(0.0, 0.0);
        WaveFunction::new(x.to_vec(), psi, measure).unwrap()
    }

    #[test]
    fn phase_current_matches_the_textbook_densities() {
        let x = grid(-12.0, 12.0, 513);
        let s0 = 1.0;
        let t = 0.4;
        let dt = 0.05;
        let ev = manual_evolution(
            vec![t - dt, t, t + dt],
            vec![
                free_gaussian(&x, t - dt, s0),
                free_gaussian(&x, t, s0),
                free_gaussian(&x, t + dt, s0),
            ],
        );
        let l = free_lagrangian(FieldVariant::TimeDeformed, DeformationParams::classical());
        let cur = noether_current(&l, &ev, 1, &SymmetryVariation::phase()).unwrap();
        assert!(cur.warning.is_none(), "clean solution got {:?}", cur.warning);

        let b = t / (s0 * s0);
        for (j, &xv) in x.iter().enumerate() {
            let rho = ev.states[1].psi[j].norm_sqr();
            assert_relative_eq!(cur.j_time[j], -rho, epsilon = 1e-15, max_relative = 1e-13);
            // Im(conj(psi) psi_x) = |psi|^2 * x b / (s0^2 (1 + b^2))
            let want = -rho * xv * b / (s0 * s0 * (1.0 + b * b));
            assert!(
                (cur.j_space[j] - want).abs() < 5e-6,
                "x = {xv}: {} vs {want}",
                cur.j_space[j]
            );
        }
    }

    #[test]
    fn vanishing_variation_returns_minus_the_boundary_terms() {
        let x = grid(-12.0, 12.0, 129);
        let wf = free_gaussian(&x, 0.3, 1.0);
        let ev = manual_evolution(vec![0.3], vec![wf]);
        let l = free_lagrangian(FieldVariant::TimeDeformed, DeformationParams::classical());
        let sym = SymmetryVariation::with_boundary(
            |_, _| Complex64::new(0.0, 0.0),
            |xv, z| xv * z.norm_sqr(),
            |xv, _| 2.0 * xv + 1.0,
        );
        let cur = noether_current(&l, &ev, 0, &sym).unwrap();
        for (j, &xv) in x.iter().enumerate() {
            let rho = ev.states[0].psi[j].norm_sqr();
            assert_relative_eq!(cur.j_time[j], -xv * rho, epsilon = 1e-15, max_relative = 1e-14);
            assert_relative_eq!(cur.j_space[j], -(2.0 * xv + 1.0), max_relative = 1e-14);
        }
    }

    #[test]
    fn shift_current_of_a_static_real_bump_is_its_gradient() {
        let x = grid(-3.0, 5.0, 257);
        let s = 0.55;
        let psi: Vec<Complex64> = x
            .iter()
            .map(|&xv| {
                let arg = -(xv - 1.0) * (xv - 1.0) / (2.0 * s * s);
                Complex64::new(0.8 * arg.exp(), 0.0)
            })
            .collect();
        let wf = WaveFunction::new(x.clone(), psi, Measure::Plain).unwrap();
        let ev = manual_evolution(
            vec![0.0, 0.1, 0.2],
            vec![wf.clone(), wf.clone(), wf],
        );
        let l = free_lagrangian(FieldVariant::TimeDeformed, DeformationParams::classical());
        let cur = noether_current(&l, &ev, 1, &SymmetryVariation::shift()).unwrap();
        for (j, &xv) in x.iter().enumerate() {
            assert_eq!(cur.j_time[j], 0.0, "real field carries no phase charge");
            let phi = 0.8 * (-(xv - 1.0) * (xv - 1.0) / (2.0 * s * s)).exp();
            // J^1 = -phi' and phi' = -(x-1)/s^2 * phi
            let want = (xv - 1.0) / (s * s) * phi;
            assert!(
                (cur.j_space[j] - want).abs() < 1e-5,
                "x = {xv}: {} vs {want}",
                cur.j_space[j]
            );
        }
        // a frozen bump does not solve the free wave equation, and the
        // residual check says so
        assert!(cur.warning.is_some());
    }

    #[test]
    fn solver_snapshots_pass_the_residual_check_until_corrupted() {
        let x = grid(0.0, 6.0, 129);
        let psi0 = gaussian_packet(&x, 3.0, 0.5, 2.0, Measure::Plain);
        let l = free_lagrangian(
            FieldVariant::TimeDeformed,
            DeformationParams::conformable(0.7).unwrap(),
        );
        let ev = solve_time_deformed(&psi0, &l, 1.0, 192).unwrap();
        let sym = SymmetryVariation::phase();

        let clean = noether_current(&l, &ev, 96, &sym).unwrap();
        assert!(clean.warning.is_none(), "clean run got {:?}", clean.warning);

        let mut broken = ev.clone();
        for z in &mut broken.states[96].psi {
            *z *= 2.0;
        }
        let flagged = noether_current(&l, &broken, 96, &sym).unwrap();
        assert!(flagged.warning.is_some());

        // end snapshots have no centered stencil to check against
        let edge = noether_current(&l, &broken, 0, &sym).unwrap();
        assert!(edge.warning.is_none());
    }

    #[test]
    fn continuity_residual_refines_quadratically() {
        let classical = DeformationParams::classical();
        let l = free_lagrangian(FieldVariant::TimeDeformed, classical.clone());
        let sym = SymmetryVariation::phase();
        let mut hs = Vec::new();
        let mut errs = Vec::new();
        for &(n, dt) in &[(161usize, 0.05), (321usize, 0.025)] {
            let x = grid(-12.0, 12.0, n);
            let times: Vec<f64> = (0..5).map(|k| 0.4 + (k as f64 - 2.0) * dt).collect();
            let states: Vec<WaveFunction> =
                times.iter().map(|&t| free_gaussian(&x, t, 1.0)).collect();
            let ev = manual_evolution(times.clone(), states);
            let currents: Vec<NoetherCurrent> = (0..5)
                .map(|k| noether_current(&l, &ev, k, &sym).unwrap())
                .collect();
            let field = deformed_divergence(&currents, &times, &classical, &classical).unwrap();
            assert_eq!(field.times.len(), 3);
            assert_eq!(field.x.len(), n - 2);
            hs.push(x[1] - x[0]);
            errs.push(field.max_abs);
        }
        let slope = numeric::loglog_slope(&hs, &errs);
        assert!(
            (slope - 2.0).abs() < 0.2,
            "continuity residual slope {slope}, errors {errs:?}"
        );
    }

    #[test]
    fn deformed_time_divergence_refines_in_the_measure_variable() {
        // exact deformed-time solution: the plain packet run through the
        // inverse time measure, here tau = 2 sqrt(t)
        let alpha = 0.5;
        let axis_time = DeformationParams::conformable(alpha).unwrap();
        let classical = DeformationParams::classical();
        let l = free_lagrangian(FieldVariant::TimeDeformed, axis_time.clone());
        let sym = SymmetryVariation::phase();
        let tau_c = 0.5;
        let mut hs = Vec::new();
        let mut errs = Vec::new();
        for &(n, dtau) in &[(161usize, 0.05), (321usize, 0.025)] {
            let x = grid(-12.0, 12.0, n);
            let taus: Vec<f64> = (0..5).map(|k| tau_c + (k as f64 - 2.0) * dtau).collect();
            let times: Vec<f64> = taus.iter().map(|&tau| (tau / 2.0) * (tau / 2.0)).collect();
            let states: Vec<WaveFunction> =
                taus.iter().map(|&tau| free_gaussian(&x, tau, 1.0)).collect();
            let ev = manual_evolution(times.clone(), states);
            let currents: Vec<NoetherCurrent> = (0..5)
                .map(|k| {
                    let c = noether_current(&l, &ev, k, &sym).unwrap();
                    assert!(c.warning.is_none(), "snapshot {k}: {:?}", c.warning);
                    c
                })
                .collect();
            let field = deformed_divergence(&currents, &times, &axis_time, &classical).unwrap();
            hs.push(x[1] - x[0]);
            errs.push(field.max_abs);
        }
        let slope = numeric::loglog_slope(&hs, &errs);
        assert!(
            (slope - 2.0).abs() < 0.2,
            "deformed-time residual slope {slope}, errors {errs:?}"
        );
    }

    #[test]
    fn charges_of_propagated_runs_hold_to_conservation_order() {
        let sym = SymmetryVariation::phase();

        let x = grid(0.0, 6.0, 129);
        let psi0 = gaussian_packet(&x, 3.0, 0.5, 2.0, Measure::Plain);
        let l = free_lagrangian(
            FieldVariant::TimeDeformed,
            DeformationParams::conformable(0.7).unwrap(),
        );
        let ev = solve_time_deformed(&psi0, &l, 1.0, 100).unwrap();
        let q = charge_history(&l, &ev, &sym).unwrap();
        assert!(q[0] < 0.0, "phase charge is minus the probability");
        let drift =
            q.iter().map(|qk| (qk - q[0]).abs() / q[0].abs()).fold(0.0, f64::max);
        assert!(drift < 1e-10, "plain-measure charge drift {drift:.3e}");

        let deform = DeformationParams::conformable(0.6).unwrap();
        let lw = free_lagrangian(FieldVariant::SpatialDeformed, deform);
        let xw = grid(1.0, 5.0, 129);
        let psi0 = gaussian_packet(&xw, 3.0, 0.4, 0.0, Measure::Deformed { alpha: 0.6 });
        let ev = solve_spatial_deformed(&psi0, &lw, 0.5, 100).unwrap();
        let q = charge_history(&lw, &ev, &sym).unwrap();
        let drift =
            q.iter().map(|qk| (qk - q[0]).abs() / q[0].abs()).fold(0.0, f64::max);
        assert!(drift < 1e-10, "weighted charge drift {drift:.3e}");
    }

    #[test]
    fn zero_currents_have_zero_divergence() {
        let x = grid(0.0, 1.0, 64);
        let zero = NoetherCurrent {
            x: x.clone(),
            j_time: vec![0.0; 64],
            j_space: vec![0.0; 64],
            warning: None,
        };
        let currents = vec![zero.clone(), zero.clone(), zero];
        let field = deformed_divergence(
            &currents,
            &[0.1, 0.2, 0.3],
            &DeformationParams::conformable(0.5).unwrap(),
            &DeformationParams::classical(),
        )
        .unwrap();
        assert_eq!(field.max_abs, 0.0);
        assert_eq!(field.times.len(), 1);
        assert_eq!(field.x.len(), 62);
        assert!(field.residual[0].iter().all(|&r| r == 0.0));
    }

    #[test]
    fn shape_preconditions_are_enforced() {
        let x = grid(-12.0, 12.0, 129);
        let ev = manual_evolution(vec![0.2], vec![free_gaussian(&x, 0.2, 1.0)]);
        let l = free_lagrangian(FieldVariant::TimeDeformed, DeformationParams::classical());
        let err = noether_current(&l, &ev, 5, &SymmetryVariation::phase()).unwrap_err();
        assert!(matches!(err, Error::Range(_)), "got {err:?}");

        let slice = NoetherCurrent {
            x: x.clone(),
            j_time: vec![0.0; 129],
            j_space: vec![0.0; 129],
            warning: None,
        };
        let classical = DeformationParams::classical();
        let err = deformed_divergence(
            &[slice.clone(), slice.clone()],
            &[0.0, 0.1],
            &classical,
            &classical,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Precondition(_)), "got {err:?}");

        let mut other = slice.clone();
        other.x = grid(-10.0, 10.0, 129);
        let err = deformed_divergence(
            &[slice.clone(), other, slice.clone()],
            &[0.0, 0.1, 0.2],
            &classical,
            &classical,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Precondition(_)), "got {err:?}");

        let err = deformed_divergence(
            &[slice.clone(), slice.clone(), slice],
            &[0.0, 0.2, 0.1],
            &classical,
            &classical,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Precondition(_)), "got {err:?}");
    }
}
