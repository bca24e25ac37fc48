//! Wave propagators for the deformed Schrödinger family.
//!
//! The toolkit is a uniform Dirichlet box: wave functions live on an evenly
//! spaced grid whose first and last samples vanish, norms are taken with a
//! measure weight attached to the grid, and every Hamiltonian is assembled as
//! a real band matrix over the interior nodes. Five steppers share that
//! toolkit:
//!
//! * [`solve_time_deformed`] — power-law time kernel, integrated with
//!   Crank–Nicolson in the time measure variable (where the equation is the
//!   ordinary one),
//! * [`solve_scale_q_time`] — spectral propagation with q-exponential time
//!   factors per eigenmode,
//! * [`solve_nrt_nonlinear`] — free nonlinear evolution driven by the
//!   principal-branch amplitude power `psi^(2-q)`,
//! * [`solve_spatial_deformed`] — kernel-weighted gradient squared, unitary
//!   under the matching weighted norm,
//! * [`solve_opt3_spatial`] — conservative flux form `d/dx [a(x) d/dx]` with
//!   the kernel-squared conductivity, plus its small-deformation
//!   linearization.

use nalgebra::{DMatrix, DVector, Dyn};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::deform::{DeformKind, DeformationParams};
use crate::error::{Error, Result};
use crate::lagrangian::{FieldLagrangian, FieldVariant, Potential};
use crate::qalgebra;

/// Inner-product weight attached to a spatial grid.
///
/// `norm^2 = sum_j weight(x_j) |psi_j|^2 dx`. The deformed weight is the
/// power law `x^(alpha-1)`; the q-kernel weight is `1/(1+(1-q)x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Measure {
    Plain,
    Deformed { alpha: f64 },
    QKernel { q: f64 },
}

impl Measure {
    /// Weight at a single point. Errors where the weight is undefined or
    /// non-positive.
    pub fn weight(&self, x: f64) -> Result<f64> {
        match *self {
            Measure::Plain => Ok(1.0),
            Measure::Deformed { alpha } => {
                if x <= 0.0 {
                    return Err(Error::Domain(format!(
                        "power-law weight x^(alpha-1) needs x > 0, got x = {x}"
                    )));
                }
                Ok(x.powf(alpha - 1.0))
            }
            Measure::QKernel { q } => {
                let k = 1.0 + (1.0 - q) * x;
                if k <= 0.0 {
                    return Err(Error::Domain(format!(
                        "q-kernel weight has a pole at x = {}; got x = {x}",
                        1.0 / (q - 1.0)
                    )));
                }
                Ok(1.0 / k)
            }
        }
    }
}

/// The grid measure implied by a deformation, used by the kernel-weighted
/// spatial solver. Identity deformations weigh nothing.
pub fn measure_for(deform: &DeformationParams) -> Result<Measure> {
    if deform.is_identity() {
        return Ok(Measure::Plain);
    }
    match deform.kind {
        DeformKind::Classical => Ok(Measure::Plain),
        DeformKind::Conformable | DeformKind::Katugampola => {
            Ok(Measure::Deformed { alpha: deform.alpha })
        }
        DeformKind::QDeriv => Ok(Measure::QKernel { q: deform.q }),
        other => Err(Error::Precondition(format!(
            "no grid measure is defined for the {other:?} kernel here"
        ))),
    }
}

/// Complex amplitude sampled on a uniform Dirichlet box.
///
/// Invariants enforced at construction: at least 64 nodes, uniform spacing,
/// vanishing wall samples (relative to the peak amplitude), finite entries,
/// and a grid on which the attached measure weight is defined.
#[derive(Debug, Clone)]
pub struct WaveFunction {
    pub x: Vec<f64>,
    pub psi: Vec<Complex64>,
    pub measure: Measure,
}

impl WaveFunction {
    pub fn new(x: Vec<f64>, psi: Vec<Complex64>, measure: Measure) -> Result<Self> {
        let n = x.len();
        if n < 64 {
            return Err(Error::Precondition(format!(
                "at least 64 grid nodes are required, got {n}"
            )));
        }
        if psi.len() != n {
            return Err(Error::Precondition(format!(
                "grid and amplitude lengths differ: {n} vs {}",
                psi.len()
            )));
        }
        if x.iter().any(|v| !v.is_finite())
            || psi.iter().any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::Precondition("non-finite sample in the wave function".into()));
        }
        let dx = x[1] - x[0];
        if !(dx > 0.0) {
            return Err(Error::Precondition(format!(
                "grid must increase strictly, first spacing is {dx}"
            )));
        }
        for i in 1..n {
            let d = x[i] - x[i - 1];
            if (d - dx).abs() > 1e-9 * dx {
                return Err(Error::Precondition(format!(
                    "grid spacing is not uniform near x = {} ({} vs {})",
                    x[i], d, dx
                )));
            }
        }
        let peak = psi.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if peak > 0.0 {
            for &end in &[0usize, n - 1] {
                if psi[end].norm() > 1e-8 * peak {
                    return Err(Error::Precondition(format!(
                        "Dirichlet walls: the sample at x = {} must vanish (|psi| = {:.3e}, peak {:.3e})",
                        x[end],
                        psi[end].norm(),
                        peak
                    )));
                }
            }
        }
        match measure {
            Measure::Plain => {}
            Measure::Deformed { alpha } => {
                if !(alpha > 0.0 && alpha <= 1.0) || !alpha.is_finite() {
                    return Err(Error::Parameter(format!(
                        "measure order must lie in (0, 1], got {alpha}"
                    )));
                }
                measure.weight(x[0])?;
            }
            Measure::QKernel { q } => {
                if !q.is_finite() {
                    return Err(Error::Parameter(format!("measure index must be finite, got {q}")));
                }
                // the kernel is linear in x, so the ends bound the grid
                measure.weight(x[0])?;
                measure.weight(x[n - 1])?;
            }
        }
        Ok(WaveFunction { x, psi, measure })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn dx(&self) -> f64 {
        self.x[1] - self.x[0]
    }

    /// Measure-weighted L2 norm.
    pub fn norm(&self) -> Result<f64> {
        let dx = self.dx();
        let mut acc = 0.0;
        for (xv, z) in self.x.iter().zip(&self.psi) {
            let w = if z.norm_sqr() == 0.0 { 0.0 } else { self.measure.weight(*xv)? };
            acc += w * z.norm_sqr() * dx;
        }
        Ok(acc.sqrt())
    }

    fn interior(&self) -> Vec<Complex64> {
        self.psi[1..self.len() - 1].to_vec()
    }

    fn with_interior(&self, interior: &[Complex64]) -> WaveFunction {
        let mut psi = vec![Complex64::new(0.0, 0.0); self.len()];
        psi[1..self.len() - 1].copy_from_slice(interior);
        WaveFunction { x: self.x.clone(), psi, measure: self.measure }
    }
}

/// Real Hamiltonian over the interior nodes of a Dirichlet box, tagged with
/// the inner product in which it is self-adjoint.
///
/// Every variant built here has a real matrix; the propagators lift it to
/// complex arithmetic. `hermitian_under` names the weight under which
/// `W H = (W H)^T` holds exactly, which is what makes the Crank–Nicolson step
/// conserve the corresponding norm.
#[derive(Debug, Clone)]
pub struct HamiltonianMatrix {
    pub matrix: DMatrix<f64>,
    pub hermitian_under: Measure,
    pub dx: f64,
    pub x_interior: Vec<f64>,
}

impl HamiltonianMatrix {
    /// Largest relative asymmetry of `W H` under the tagged weight. Zero (to
    /// rounding) certifies self-adjointness in the weighted inner product.
    pub fn self_adjointness_defect(&self) -> Result<f64> {
        let m = self.matrix.nrows();
        let mut w = Vec::with_capacity(m);
        for &xv in &self.x_interior {
            w.push(self.hermitian_under.weight(xv)?);
        }
        let mut scale: f64 = 0.0;
        let mut defect: f64 = 0.0;
        for i in 0..m {
            for j in 0..m {
                let a = w[i] * self.matrix[(i, j)];
                let b = w[j] * self.matrix[(j, i)];
                scale = scale.max(a.abs());
                defect = defect.max((a - b).abs());
            }
        }
        if scale == 0.0 {
            return Ok(0.0);
        }
        Ok(defect / scale)
    }
}

/// A time-stamped sequence of states plus the norm history under the states'
/// own measure.
#[derive(Debug, Clone)]
pub struct Evolution {
    pub times: Vec<f64>,
    pub states: Vec<WaveFunction>,
    pub norms: Vec<f64>,
}

impl Evolution {
    pub fn final_state(&self) -> &WaveFunction {
        self.states.last().expect("an evolution holds at least the initial state")
    }

    /// Largest relative deviation of the norm from its initial value.
    pub fn norm_drift(&self) -> f64 {
        let n0 = self.norms[0];
        if n0 == 0.0 {
            return 0.0;
        }
        self.norms.iter().map(|n| (n - n0).abs() / n0).fold(0.0, f64::max)
    }
}

// ---------------------------------------------------------------------------
// band-matrix kernel: storage, matvec, LU without pivoting
// ---------------------------------------------------------------------------

/// Complex band matrix; `data[r*w + c]` holds `A[r, r - kb + c]` with
/// `w = 2 kb + 1`. Entries that fall outside the square are kept at zero.
struct Band {
    m: usize,
    kb: usize,
    data: Vec<Complex64>,
}

impl Band {
    fn width(&self) -> usize {
        2 * self.kb + 1
    }

    /// `shift * I + scale * H` restricted to the band of half-width `kb`.
    fn from_real(h: &DMatrix<f64>, shift: Complex64, scale: Complex64, kb: usize) -> Band {
        let m = h.nrows();
        let w = 2 * kb + 1;
        let mut data = vec![Complex64::new(0.0, 0.0); m * w];
        for r in 0..m {
            let lo = r.saturating_sub(kb);
            let hi = (r + kb).min(m - 1);
            for j in lo..=hi {
                data[r * w + (j + kb - r)] = scale * h[(r, j)];
            }
            data[r * w + kb] += shift;
        }
        Band { m, kb, data }
    }

    fn matvec(&self, v: &[Complex64], out: &mut [Complex64]) {
        let w = self.width();
        let kb = self.kb;
        for r in 0..self.m {
            let lo = r.saturating_sub(kb);
            let hi = (r + kb).min(self.m - 1);
            let mut acc = Complex64::new(0.0, 0.0);
            for j in lo..=hi {
                acc += self.data[r * w + (j + kb - r)] * v[j];
            }
            out[r] = acc;
        }
    }

    /// In-place LU without pivoting. Returns `None` when a pivot collapses,
    /// in which case the caller falls back to a dense factorization.
    fn lu(mut self) -> Option<BandLu> {
        let w = self.width();
        let kb = self.kb;
        let diag_scale = (0..self.m)
            .map(|r| self.data[r * w + kb].norm())
            .fold(0.0, f64::max);
        let tol = 1e-12 * diag_scale;
        for r in 0..self.m {
            let pivot = self.data[r * w + kb];
            if !pivot.re.is_finite() || !pivot.im.is_finite() || pivot.norm() <= tol {
                return None;
            }
            let hi = (r + kb).min(self.m - 1);
            for i in r + 1..=hi {
                let off = kb - (i - r);
                let f = self.data[i * w + off] / pivot;
                self.data[i * w + off] = f;
                for c in 1..=kb {
                    if r + c >= self.m {
                        break;
                    }
                    let upper = self.data[r * w + kb + c];
                    self.data[i * w + off + c] -= f * upper;
                }
            }
        }
        Some(BandLu { m: self.m, kb, data: self.data })
    }
}

/// Factored band matrix: unit lower triangle below the diagonal slot, upper
/// triangle (with pivots) on and above it.
struct BandLu {
    m: usize,
    kb: usize,
    data: Vec<Complex64>,
}

impl BandLu {
    fn solve_in_place(&self, v: &mut [Complex64]) {
        let w = 2 * self.kb + 1;
        let kb = self.kb;
        for r in 0..self.m {
            let lo = r.saturating_sub(kb);
            let mut acc = v[r];
            for j in lo..r {
                acc -= self.data[r * w + (j + kb - r)] * v[j];
            }
            v[r] = acc;
        }
        for r in (0..self.m).rev() {
            let hi = (r + kb).min(self.m - 1);
            let mut acc = v[r];
            for j in r + 1..=hi {
                acc -= self.data[r * w + (j + kb - r)] * v[j];
            }
            v[r] = acc / self.data[r * w + kb];
        }
    }
}

enum CnSolve {
    Band(BandLu),
    Dense(nalgebra::linalg::LU<Complex64, Dyn, Dyn>),
}

/// One Crank–Nicolson step operator: apply `I - i mu H`, then solve with
/// `I + i mu H`. The implicit factor is factored once per run.
struct CnPropagator {
    forward: Band,
    solve: CnSolve,
}

fn bandwidth_of(h: &DMatrix<f64>) -> usize {
    let m = h.nrows();
    let mut kb = 0usize;
    for i in 0..m {
        for j in 0..m {
            if h[(i, j)] != 0.0 {
                kb = kb.max(i.abs_diff(j));
            }
        }
    }
    kb
}

fn cn_prepare(h: &DMatrix<f64>, hbar: f64, dstep: f64) -> CnPropagator {
    let mu = dstep / (2.0 * hbar);
    let kb = bandwidth_of(h);
    let one = Complex64::new(1.0, 0.0);
    let forward = Band::from_real(h, one, Complex64::new(0.0, -mu), kb);
    let solve = if kb <= 8 {
        Band::from_real(h, one, Complex64::new(0.0, mu), kb).lu().map(CnSolve::Band)
    } else {
        None
    };
    let solve = match solve {
        Some(s) => s,
        None => {
            let m = h.nrows();
            let dense = DMatrix::from_fn(m, m, |i, j| {
                let mut z = Complex64::new(h[(i, j)], 0.0) * Complex64::new(0.0, mu);
                if i == j {
                    z += one;
                }
                z
            });
            CnSolve::Dense(dense.lu())
        }
    };
    CnPropagator { forward, solve }
}

impl CnPropagator {
    fn step(&self, v: &mut Vec<Complex64>, scratch: &mut Vec<Complex64>) -> Result<()> {
        self.forward.matvec(v, scratch);
        match &self.solve {
            CnSolve::Band(lu) => lu.solve_in_place(scratch),
            CnSolve::Dense(lu) => {
                let rhs = DVector::from_column_slice(scratch);
                let sol = lu.solve(&rhs).ok_or_else(|| {
                    Error::Numerical("the implicit half-step solve failed".into())
                })?;
                scratch.copy_from_slice(sol.as_slice());
            }
        }
        std::mem::swap(v, scratch);
        Ok(())
    }
}

/// Run Crank–Nicolson with a constant step `dstep` in the evolution variable
/// and label the snapshots with `times`.
fn cn_evolve(
    h: &DMatrix<f64>,
    template: &WaveFunction,
    hbar: f64,
    dstep: f64,
    times: Vec<f64>,
) -> Result<Evolution> {
    let prop = cn_prepare(h, hbar, dstep);
    let mut v = template.interior();
    let mut scratch = vec![Complex64::new(0.0, 0.0); v.len()];
    let mut states = Vec::with_capacity(times.len());
    states.push(template.clone());
    for _ in 1..times.len() {
        prop.step(&mut v, &mut scratch)?;
        if v.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Numerical("the propagated state lost finiteness".into()));
        }
        states.push(template.with_interior(&v));
    }
    package(times, states)
}

fn package(times: Vec<f64>, states: Vec<WaveFunction>) -> Result<Evolution> {
    let mut norms = Vec::with_capacity(states.len());
    for s in &states {
        norms.push(s.norm()?);
    }
    Ok(Evolution { times, states, norms })
}

// ---------------------------------------------------------------------------
// operator assembly
// ---------------------------------------------------------------------------

/// Fourth-order Laplacian on the interior of a Dirichlet box. Wall closure by
/// odd images (`psi(-h) = -psi(h)` through the wall node), which keeps the
/// matrix symmetric and is exact for the sine modes of the box.
pub(crate) fn laplacian_4th(m: usize, h: f64) -> DMatrix<f64> {
    let h2 = h * h;
    let c0 = -5.0 / 2.0 / h2;
    let c1 = 4.0 / 3.0 / h2;
    let c2 = -1.0 / 12.0 / h2;
    let mut a = DMatrix::zeros(m, m);
    for r in 0..m {
        a[(r, r)] = c0;
        if r + 1 < m {
            a[(r, r + 1)] = c1;
            a[(r + 1, r)] = c1;
        }
        if r + 2 < m {
            a[(r, r + 2)] = c2;
            a[(r + 2, r)] = c2;
        }
    }
    // odd image through each wall folds the ghost entry onto the diagonal
    a[(0, 0)] -= c2;
    a[(m - 1, m - 1)] -= c2;
    a
}

/// Fourth-order centered first derivative with zero extension past the walls.
/// Exactly skew-symmetric, which is what the kernel-weighted solver needs for
/// its weighted unitarity; the outermost rows trade local order for that.
pub(crate) fn gradient_skew_4th(m: usize, h: f64) -> DMatrix<f64> {
    let d1 = 2.0 / 3.0 / h;
    let d2 = -1.0 / 12.0 / h;
    let mut a = DMatrix::zeros(m, m);
    for r in 0..m {
        if r + 1 < m {
            a[(r, r + 1)] = d1;
            a[(r + 1, r)] = -d1;
        }
        if r + 2 < m {
            a[(r, r + 2)] = d2;
            a[(r + 2, r)] = -d2;
        }
    }
    a
}

fn gradient_skew_3pt(m: usize, h: f64) -> DMatrix<f64> {
    let d = 1.0 / (2.0 * h);
    let mut a = DMatrix::zeros(m, m);
    for r in 0..m {
        if r + 1 < m {
            a[(r, r + 1)] = d;
            a[(r + 1, r)] = -d;
        }
    }
    a
}

fn laplacian_3pt(m: usize, h: f64) -> DMatrix<f64> {
    let h2 = h * h;
    let mut a = DMatrix::zeros(m, m);
    for r in 0..m {
        a[(r, r)] = -2.0 / h2;
        if r + 1 < m {
            a[(r, r + 1)] = 1.0 / h2;
            a[(r + 1, r)] = 1.0 / h2;
        }
    }
    a
}

/// Conservative `d/dx [a(x) d/dx]` with the conductivity sampled at half
/// nodes; `a_half[i]` sits between interior nodes `i-1` and `i` (walls
/// included). Symmetric by construction.
fn flux_form(m: usize, h: f64, a_half: &[f64]) -> DMatrix<f64> {
    debug_assert_eq!(a_half.len(), m + 1);
    let h2 = h * h;
    let mut a = DMatrix::zeros(m, m);
    for r in 0..m {
        a[(r, r)] = -(a_half[r] + a_half[r + 1]) / h2;
        if r + 1 < m {
            a[(r, r + 1)] = a_half[r + 1] / h2;
            a[(r + 1, r)] = a_half[r + 1] / h2;
        }
    }
    a
}

fn potential_diagonal(l: &FieldLagrangian, x_interior: &[f64]) -> Result<Vec<f64>> {
    x_interior.iter().map(|&x| l.potential.eval(x)).collect()
}

/// Assemble the interior Hamiltonian for a field density on the given grid.
///
/// * time-kernel, scale-q and nonlinear variants: plain fourth-order kinetic
///   term, self-adjoint in the plain inner product;
/// * kernel-weighted spatial variant: `-(hbar^2/2m) (K grad)^2` with
///   `K = diag(kernel(x))`, self-adjoint under the reciprocal-kernel weight;
/// * flux-form spatial variant: `-(hbar^2/2m) d/dx[a dx]` with the squared
///   kernel as conductivity, self-adjoint in the plain inner product.
pub fn build_hamiltonian(l: &FieldLagrangian, wf: &WaveFunction) -> Result<HamiltonianMatrix> {
    let n = wf.len();
    let m = n - 2;
    let h = wf.dx();
    let x_interior: Vec<f64> = wf.x[1..n - 1].to_vec();
    let scale = l.hbar * l.hbar / (2.0 * l.m);

    let (mut mat, hermitian_under) = match l.variant {
        FieldVariant::TimeDeformed | FieldVariant::ScaleQTime | FieldVariant::NrtNonlinear => {
            (laplacian_4th(m, h) * (-scale), Measure::Plain)
        }
        FieldVariant::SpatialDeformed => {
            if l.deform.is_identity() {
                (laplacian_4th(m, h) * (-scale), Measure::Plain)
            } else {
                let measure = measure_for(&l.deform)?;
                if wf.x[0] <= 0.0 {
                    return Err(Error::Precondition(format!(
                        "the grid must start right of the origin, got x_min = {}",
                        wf.x[0]
                    )));
                }
                let mut a = gradient_skew_4th(m, h);
                for (r, &xv) in x_interior.iter().enumerate() {
                    let k = l.deform.kernel(xv)?;
                    for c in 0..m {
                        a[(r, c)] *= k;
                    }
                }
                ((&a * &a) * (-scale), measure)
            }
        }
        FieldVariant::Opt3Spatial => {
            let identity = l.deform.is_identity();
            if !identity && wf.x[0] <= 0.0 {
                return Err(Error::Precondition(format!(
                    "the grid must start right of the origin, got x_min = {}",
                    wf.x[0]
                )));
            }
            let mut a_half = Vec::with_capacity(m + 1);
            for i in 0..=m {
                let xh = wf.x[0] + (i as f64 + 0.5) * h;
                let a = conductivity(&l.deform, xh)?;
                a_half.push(a);
            }
            (flux_form(m, h, &a_half) * (-scale), Measure::Plain)
        }
    };

    let v = potential_diagonal(l, &x_interior)?;
    for (r, vr) in v.into_iter().enumerate() {
        mat[(r, r)] += vr;
    }
    Ok(HamiltonianMatrix { matrix: mat, hermitian_under, dx: h, x_interior })
}

/// Conductivity of the flux-form spatial operator: the squared deformation
/// kernel, `x^(2-2 alpha)` for power kernels and `l0^2 (1+(1-q)x)^2` for the
/// q kernel.
pub(crate) fn conductivity(deform: &DeformationParams, x: f64) -> Result<f64> {
    match deform.kind {
        DeformKind::Classical => Ok(1.0),
        DeformKind::Conformable | DeformKind::Katugampola => {
            if deform.alpha == 1.0 {
                return Ok(1.0);
            }
            if x <= 0.0 {
                return Err(Error::Domain(format!(
                    "power-law conductivity x^(2-2 alpha) needs x > 0, got x = {x}"
                )));
            }
            Ok(x.powf(2.0 - 2.0 * deform.alpha))
        }
        DeformKind::QDeriv => {
            let k = deform.kernel(x)?;
            Ok(deform.l0 * deform.l0 * k * k)
        }
        other => Err(Error::Precondition(format!(
            "the flux-form spatial equation supports power and q kernels, got {other:?}"
        ))),
    }
}

// ---------------------------------------------------------------------------
// solvers
// ---------------------------------------------------------------------------

fn expect_variant(l: &FieldLagrangian, want: FieldVariant) -> Result<()> {
    if l.variant != want {
        return Err(Error::Precondition(format!(
            "this solver handles the {want} equation, got {}",
            l.variant
        )));
    }
    Ok(())
}

fn expect_plain(psi0: &WaveFunction) -> Result<()> {
    if psi0.measure != Measure::Plain {
        return Err(Error::Precondition(format!(
            "this solver propagates plain-measure states, got {:?}",
            psi0.measure
        )));
    }
    Ok(())
}

fn expect_horizon(t1: f64) -> Result<()> {
    if !(t1 > 0.0) || !t1.is_finite() {
        return Err(Error::Precondition(format!("the horizon must be positive, got {t1}")));
    }
    Ok(())
}

/// Evolve under a deformed time kernel by switching to the time measure
/// variable, where the equation is the ordinary Schrödinger equation; step
/// with Crank–Nicolson there. Snapshots are labelled with the raw times that
/// map onto the uniform measure grid.
pub fn solve_time_deformed(
    psi0: &WaveFunction,
    l: &FieldLagrangian,
    t1: f64,
    steps: usize,
) -> Result<Evolution> {
    expect_variant(l, FieldVariant::TimeDeformed)?;
    expect_plain(psi0)?;
    expect_horizon(t1)?;
    if steps < 8 {
        return Err(Error::Precondition(format!(
            "at least 8 time steps are required, got {steps}"
        )));
    }
    let tau1 = l.deform.measure_antiderivative(t1)?;
    if !(tau1 > 0.0) || !tau1.is_finite() {
        return Err(Error::Numerical(format!(
            "the time measure must grow over the horizon, got tau({t1}) = {tau1}"
        )));
    }
    let dtau = tau1 / steps as f64;
    let mut times = Vec::with_capacity(steps + 1);
    for k in 0..=steps {
        times.push(l.deform.measure_inverse(k as f64 * dtau)?);
    }
    let h = build_hamiltonian(l, psi0)?;
    cn_evolve(&h.matrix, psi0, l.hbar, dtau, times)
}

/// Eigenpairs of a Hamiltonian, ascending. For weighted tags the matrix is
/// symmetrized by the similarity `W^(1/2) H W^(-1/2)` first; the returned
/// columns are normalized in the weighted inner product.
pub fn eigen_decomposition(h: &HamiltonianMatrix) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let m = h.matrix.nrows();
    let mut wsqrt = Vec::with_capacity(m);
    for &xv in &h.x_interior {
        wsqrt.push(h.hermitian_under.weight(xv)?.sqrt());
    }
    let mut s = DMatrix::from_fn(m, m, |i, j| h.matrix[(i, j)] * wsqrt[i] / wsqrt[j]);
    // scrub rounding asymmetry so the symmetric solver sees its contract
    for i in 0..m {
        for j in i + 1..m {
            let avg = 0.5 * (s[(i, j)] + s[(j, i)]);
            s[(i, j)] = avg;
            s[(j, i)] = avg;
        }
    }
    let eig = nalgebra::SymmetricEigen::try_new(s.clone(), 1e-13, 50_000).ok_or_else(|| {
        let lu = s.lu();
        let u = lu.u();
        let mut dmax: f64 = 0.0;
        let mut dmin = f64::INFINITY;
        for i in 0..m {
            let d = u[(i, i)].abs();
            dmax = dmax.max(d);
            dmin = dmin.min(d);
        }
        let cond = if dmin > 0.0 { dmax / dmin } else { f64::INFINITY };
        Error::Numerical(format!(
            "eigendecomposition stalled for the {m}x{m} operator (condition estimate {cond:.3e})"
        ))
    })?;
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let evals: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vecs = DMatrix::zeros(m, m);
    for (col, &src) in order.iter().enumerate() {
        for r in 0..m {
            vecs[(r, col)] = eig.eigenvectors[(r, src)] / wsqrt[r];
        }
    }
    Ok((evals, vecs))
}

/// Spectral propagation with q-exponential time factors: every eigenmode
/// evolves as `c_n e_q(-i E_n t / hbar)`, the mode rate playing the role of
/// the scale parameter. Exact in time up to the eigensolve.
pub fn solve_scale_q_time(
    psi0: &WaveFunction,
    l: &FieldLagrangian,
    t1: f64,
    steps: usize,
) -> Result<Evolution> {
    expect_variant(l, FieldVariant::ScaleQTime)?;
    expect_plain(psi0)?;
    expect_horizon(t1)?;
    if steps == 0 {
        return Err(Error::Precondition("at least one output step is required".into()));
    }
    let q = q_index_of(&l.deform)?;
    let h = build_hamiltonian(l, psi0)?;
    let (evals, vecs) = eigen_decomposition(&h)?;
    let m = evals.len();
    let interior = psi0.interior();
    // plain-measure modes are l2-orthonormal, so projection is the transpose
    let mut coeff = vec![Complex64::new(0.0, 0.0); m];
    for n in 0..m {
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 0..m {
            acc += vecs[(j, n)] * interior[j];
        }
        coeff[n] = acc;
    }
    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    for k in 0..=steps {
        let t = t1 * k as f64 / steps as f64;
        times.push(t);
        let mut v = vec![Complex64::new(0.0, 0.0); m];
        for n in 0..m {
            let factor = qalgebra::q_exp_complex(
                Complex64::new(0.0, -evals[n] * t / l.hbar),
                q,
            )?;
            let cn = coeff[n] * factor;
            if cn.norm_sqr() == 0.0 {
                continue;
            }
            for j in 0..m {
                v[j] += cn * vecs[(j, n)];
            }
        }
        states.push(psi0.with_interior(&v));
    }
    package(times, states)
}

pub(crate) fn q_index_of(deform: &DeformationParams) -> Result<f64> {
    match deform.kind {
        DeformKind::Classical => Ok(1.0),
        DeformKind::QDeriv | DeformKind::ScaleQ => Ok(deform.q),
        other => Err(Error::Precondition(format!(
            "a q-family kernel is required here, got {other:?}"
        ))),
    }
}

/// Free nonlinear evolution driven by the principal-branch amplitude power:
/// `i hbar psi_t = -(hbar^2 / 2m) (2-q)^(-1) d^2/dx^2 [psi^(2-q)]`.
///
/// Explicit Runge–Kutta in time; each output interval is subdivided so the
/// linearized rate stays inside the stability region. The potential must be
/// zero — the nonlinearity is only calibrated for free propagation.
pub fn solve_nrt_nonlinear(
    psi0: &WaveFunction,
    l: &FieldLagrangian,
    t1: f64,
    steps: usize,
) -> Result<Evolution> {
    expect_variant(l, FieldVariant::NrtNonlinear)?;
    expect_plain(psi0)?;
    expect_horizon(t1)?;
    if steps == 0 {
        return Err(Error::Precondition("at least one output step is required".into()));
    }
    if !matches!(l.potential, Potential::Zero) {
        return Err(Error::Precondition(
            "free evolution only: the nonlinear stepper takes a zero potential".into(),
        ));
    }
    let q = q_index_of(&l.deform)?;
    let a_pow = 2.0 - q;
    if !(a_pow > 0.0) {
        return Err(Error::Parameter(format!(
            "the amplitude exponent 2-q must be positive, got q = {q}"
        )));
    }
    let n = psi0.len();
    let m = n - 2;
    let h = psi0.dx();
    let x_interior: Vec<f64> = psi0.x[1..n - 1].to_vec();
    let d2 = Band::from_real(&laplacian_4th(m, h), Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0), 2);
    // i hbar psi_t = -c d2 p  =>  psi_t = i (c/hbar) d2 p
    let c = l.hbar * l.hbar / (2.0 * l.m * a_pow);
    let rate = Complex64::new(0.0, c / l.hbar);

    let power = |v: &[Complex64], out: &mut [Complex64]| -> Result<()> {
        for (j, &z) in v.iter().enumerate() {
            let w = if a_pow == 1.0 {
                z
            } else if z.norm_sqr() == 0.0 {
                Complex64::new(0.0, 0.0)
            } else {
                z.powf(a_pow)
            };
            if !w.re.is_finite() || !w.im.is_finite() {
                return Err(Error::Numerical(format!(
                    "amplitude power left the principal branch at node {j} (x = {:.6}, |psi| = {:.3e})",
                    x_interior[j],
                    z.norm()
                )));
            }
            out[j] = w;
        }
        Ok(())
    };
    let mut pbuf = vec![Complex64::new(0.0, 0.0); m];
    let mut rhs_of = |v: &[Complex64], out: &mut [Complex64]| -> Result<()> {
        power(v, &mut pbuf)?;
        d2.matvec(&pbuf, out);
        for z in out.iter_mut() {
            *z *= rate;
        }
        Ok(())
    };

    let dt = t1 / steps as f64;
    let lam0 = (l.hbar / (2.0 * l.m)) * (16.0 / (3.0 * h * h));
    let mut v = psi0.interior();
    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    times.push(0.0);
    states.push(psi0.clone());
    let mut k1 = vec![Complex64::new(0.0, 0.0); m];
    let mut k2 = k1.clone();
    let mut k3 = k1.clone();
    let mut k4 = k1.clone();
    let mut stage = k1.clone();
    for step in 1..=steps {
        // linearized rate scales with |psi|^(1-q); floor tiny amplitudes so
        // q > 1 does not divide by zero
        let peak = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let amp = if q == 1.0 || peak == 0.0 {
            1.0
        } else {
            let floor = 1e-6 * peak;
            v.iter()
                .map(|z| z.norm().max(floor).powf(1.0 - q))
                .fold(0.0, f64::max)
        };
        let substeps = ((dt * lam0 * amp / 1.5).ceil() as usize).max(1);
        if substeps > 20_000 {
            return Err(Error::Numerical(format!(
                "step control wants {substeps} substeps per output step; the state is too stiff"
            )));
        }
        let hsub = dt / substeps as f64;
        for _ in 0..substeps {
            rhs_of(&v, &mut k1)?;
            for j in 0..m {
                stage[j] = v[j] + 0.5 * hsub * k1[j];
            }
            rhs_of(&stage, &mut k2)?;
            for j in 0..m {
                stage[j] = v[j] + 0.5 * hsub * k2[j];
            }
            rhs_of(&stage, &mut k3)?;
            for j in 0..m {
                stage[j] = v[j] + hsub * k3[j];
            }
            rhs_of(&stage, &mut k4)?;
            for j in 0..m {
                v[j] += hsub / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
            }
        }
        times.push(dt * step as f64);
        states.push(psi0.with_interior(&v));
    }
    package(times, states)
}

/// Residual of the q-plane-wave `e_q(i (k x - w t))` with `hbar w = hbar^2
/// k^2 / 2m` under the nonlinear stepper's own discrete operators, maximized
/// over nodes away from the wall closures and scaled by the largest
/// time-derivative term. With a zero wave number both sides must vanish, and
/// the absolute residual is returned instead.
pub fn nrt_ansatz_residual(
    l: &FieldLagrangian,
    x0: f64,
    x1: f64,
    n: usize,
    wave_number: f64,
    t: f64,
) -> Result<f64> {
    expect_variant(l, FieldVariant::NrtNonlinear)?;
    if n < 64 {
        return Err(Error::Precondition(format!("at least 64 sample nodes are required, got {n}")));
    }
    if !(x1 > x0) {
        return Err(Error::Precondition(format!("empty sample window [{x0}, {x1}]")));
    }
    let q = q_index_of(&l.deform)?;
    let a_pow = 2.0 - q;
    if !(a_pow > 0.0) {
        return Err(Error::Parameter(format!(
            "the amplitude exponent 2-q must be positive, got q = {q}"
        )));
    }
    let h = (x1 - x0) / (n - 1) as f64;
    let omega = l.hbar * wave_number * wave_number / (2.0 * l.m);
    let mut psi = Vec::with_capacity(n);
    let mut dpsi_dt = Vec::with_capacity(n);
    for i in 0..n {
        let x = x0 + i as f64 * h;
        let u = wave_number * x - omega * t;
        let z = Complex64::new(0.0, u);
        psi.push(qalgebra::q_exp_complex(z, q)?);
        let envelope = if q == 1.0 {
            z.exp()
        } else {
            let base = Complex64::new(1.0, 0.0) + (1.0 - q) * z;
            base.powf(q / (1.0 - q))
        };
        dpsi_dt.push(Complex64::new(0.0, -omega) * envelope);
    }
    let mut p = vec![Complex64::new(0.0, 0.0); n];
    for (i, &z) in psi.iter().enumerate() {
        p[i] = if a_pow == 1.0 {
            z
        } else if z.norm_sqr() == 0.0 {
            Complex64::new(0.0, 0.0)
        } else {
            z.powf(a_pow)
        };
    }
    let d2 = Band::from_real(&laplacian_4th(n, h), Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0), 2);
    let mut d2p = vec![Complex64::new(0.0, 0.0); n];
    d2.matvec(&p, &mut d2p);
    let c = l.hbar * l.hbar / (2.0 * l.m * a_pow);
    let mut scale: f64 = 0.0;
    let mut worst: f64 = 0.0;
    // rows 0,1 and n-2,n-1 encode the wall closure, which the free wave ignores
    for i in 2..n - 2 {
        let lhs = Complex64::new(0.0, l.hbar) * dpsi_dt[i];
        let rhs = -c * d2p[i];
        scale = scale.max(lhs.norm());
        worst = worst.max((lhs - rhs).norm());
    }
    if scale == 0.0 {
        return Ok(worst);
    }
    Ok(worst / scale)
}

/// Evolve under the kernel-weighted spatial operator `-(hbar^2/2m)
/// (kernel(x) d/dx)^2 + V`. The state must carry the measure implied by the
/// kernel; under that weight the step is unitary. The identity deformation
/// falls back to the plain fourth-order Laplacian.
pub fn solve_spatial_deformed(
    psi0: &WaveFunction,
    l: &FieldLagrangian,
    t1: f64,
    steps: usize,
) -> Result<Evolution> {
    expect_variant(l, FieldVariant::SpatialDeformed)?;
    expect_horizon(t1)?;
    if steps == 0 {
        return Err(Error::Precondition("at least one output step is required".into()));
    }
    let expected = measure_for(&l.deform)?;
    if psi0.measure != expected {
        return Err(Error::Precondition(format!(
            "the state carries {:?} but the kernel implies {:?}",
            psi0.measure, expected
        )));
    }
    let h = build_hamiltonian(l, psi0)?;
    let dt = t1 / steps as f64;
    let times = (0..=steps).map(|k| dt * k as f64).collect();
    cn_evolve(&h.matrix, psi0, l.hbar, dt, times)
}

/// Evolve under the conservative flux-form operator `-(hbar^2/2m) d/dx
/// [kernel^2 d/dx] + V` with Crank–Nicolson in plain time. The flux form is
/// symmetric in the plain inner product, so the plain norm history it reports
/// is flat to rounding.
pub fn solve_opt3_spatial(
    psi0: &WaveFunction,
    l: &FieldLagrangian,
    t1: f64,
    steps: usize,
) -> Result<Evolution> {
    expect_variant(l, FieldVariant::Opt3Spatial)?;
    expect_plain(psi0)?;
    expect_horizon(t1)?;
    if steps == 0 {
        return Err(Error::Precondition("at least one output step is required".into()));
    }
    let h = build_hamiltonian(l, psi0)?;
    let dt = t1 / steps as f64;
    let times = (0..=steps).map(|k| dt * k as f64).collect();
    cn_evolve(&h.matrix, psi0, l.hbar, dt, times)
}

/// First-order expansion of the flux-form q operator around the identity:
/// `-(hbar^2 l0^2 / 2m) [2 eps d/dx + (1 + 2 eps x) d^2/dx^2] + V` with
/// `eps = 1 - q`, discretized with centered three-point stencils. Agrees with
/// [`solve_opt3_spatial`] to second order in `eps`.
pub fn solve_opt3_spatial_linearized(
    psi0: &WaveFunction,
    l: &FieldLagrangian,
    t1: f64,
    steps: usize,
) -> Result<Evolution> {
    expect_variant(l, FieldVariant::Opt3Spatial)?;
    expect_plain(psi0)?;
    expect_horizon(t1)?;
    if steps == 0 {
        return Err(Error::Precondition("at least one output step is required".into()));
    }
    if l.deform.kind != DeformKind::QDeriv {
        return Err(Error::Precondition(format!(
            "the linearized flux form expands the q kernel, got {:?}",
            l.deform.kind
        )));
    }
    let eps = 1.0 - l.deform.q;
    let n = psi0.len();
    let m = n - 2;
    let h = psi0.dx();
    let x_interior: Vec<f64> = psi0.x[1..n - 1].to_vec();
    let scale = l.hbar * l.hbar * l.deform.l0 * l.deform.l0 / (2.0 * l.m);
    let d1 = gradient_skew_3pt(m, h);
    let d2 = laplacian_3pt(m, h);
    let mut mat = DMatrix::zeros(m, m);
    for r in 0..m {
        let coeff = 1.0 + 2.0 * eps * x_interior[r];
        for c in 0..m {
            mat[(r, c)] = -scale * (2.0 * eps * d1[(r, c)] + coeff * d2[(r, c)]);
        }
    }
    let v = potential_diagonal(l, &x_interior)?;
    for (r, vr) in v.into_iter().enumerate() {
        mat[(r, r)] += vr;
    }
    let dt = t1 / steps as f64;
    let times = (0..=steps).map(|k| dt * k as f64).collect();
    cn_evolve(&mat, psi0, l.hbar, dt, times)
}
