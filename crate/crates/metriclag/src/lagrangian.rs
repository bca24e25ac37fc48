//! Mechanics Lagrangians `L = ½ m (deformed velocity)² − V(x)` and the
//! field-density descriptors consumed by the wave solvers.
//!
//! Quadratic-in-velocity Lagrangians are first-class (exact symbolic
//! partials); anything else goes through a callable with finite-difference
//! partials at looser tolerance.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::deform::DeformationParams;
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::numeric;

/// The three action recipes: deformed measure with the usual variation,
/// deformed measure with deformed variation, ordinary measure with embedded
/// deformed derivatives. The first two produce identical equations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VariationalOption {
    Opt1,
    Opt2,
    Opt3,
}

impl VariationalOption {
    /// Options 1 and 2 share one residual/dynamics path.
    pub fn shares_opt12_form(self) -> bool {
        matches!(self, VariationalOption::Opt1 | VariationalOption::Opt2)
    }
}

impl fmt::Display for VariationalOption {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            VariationalOption::Opt1 => "opt1",
            VariationalOption::Opt2 => "opt2",
            VariationalOption::Opt3 => "opt3",
        };
        f.write_str(s)
    }
}

/// Which wave equation a field density drives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldVariant {
    TimeDeformed,
    SpatialDeformed,
    ScaleQTime,
    NrtNonlinear,
    Opt3Spatial,
}

impl fmt::Display for FieldVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            FieldVariant::TimeDeformed => "time_deformed",
            FieldVariant::SpatialDeformed => "spatial_deformed",
            FieldVariant::ScaleQTime => "scale_q_time",
            FieldVariant::NrtNonlinear => "nrt_nonlinear",
            FieldVariant::Opt3Spatial => "opt3_spatial",
        };
        f.write_str(s)
    }
}

/// Shared physical constants for scenario plumbing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    pub hbar: f64,
    pub m: f64,
    /// oscillator stiffness where a harmonic potential is in play
    pub k: f64,
}

impl PhysicalParams {
    pub fn new(hbar: f64, m: f64, k: f64) -> Result<Self> {
        for (name, v) in [("hbar", hbar), ("m", m), ("k", k)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Parameter(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(PhysicalParams { hbar, m, k })
    }

    pub fn unit() -> Self {
        PhysicalParams { hbar: 1.0, m: 1.0, k: 1.0 }
    }
}

/// Scalar potential V(x). Symbolic potentials get exact derivatives;
/// callables fall back to extrapolated central differences.
#[derive(Clone)]
pub enum Potential {
    Zero,
    Symbolic { v: Expr, dv: Expr },
    Callable(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for Potential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Potential::Zero => f.write_str("Zero"),
            Potential::Symbolic { v, .. } => write!(f, "Symbolic({v})"),
            Potential::Callable(_) => f.write_str("Callable(..)"),
        }
    }
}

impl Potential {
    pub fn zero() -> Self {
        Potential::Zero
    }

    /// Parse a potential from expression text in the single variable `x`.
    pub fn parse(text: &str) -> Result<Self> {
        let v = Expr::parse(text)?;
        let vars = v.free_vars();
        if let Some(stray) = vars.iter().find(|n| n.as_str() != "x") {
            return Err(Error::Unbound(format!(
                "potential may only reference x, found `{stray}`"
            )));
        }
        let dv = v.diff("x");
        Ok(Potential::Symbolic { v, dv })
    }

    /// ½ k x² — the workhorse example.
    pub fn harmonic(k: f64) -> Self {
        Potential::parse(&format!("0.5*{k:?}*x^2")).expect("harmonic template parses")
    }

    pub fn from_fn(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Potential::Callable(Arc::new(f))
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Potential::Zero)
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        match self {
            Potential::Zero => Ok(0.0),
            Potential::Symbolic { v, .. } => v.eval_single("x", x),
            Potential::Callable(f) => Ok(f(x)),
        }
    }

    /// V'(x): exact for symbolic potentials, Richardson-extrapolated central
    /// differences for callables.
    pub fn deriv(&self, x: f64) -> Result<f64> {
        match self {
            Potential::Zero => Ok(0.0),
            Potential::Symbolic { dv, .. } => dv.eval_single("x", x),
            Potential::Callable(f) => {
                let h0 = 1e-4 * x.abs().max(1.0);
                let g = |h: f64| (f(x + h) - f(x - h)) / (2.0 * h);
                Ok(numeric::richardson(g, h0, 2, 3))
            }
        }
    }
}

type CustomL = Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>;

/// Point-particle Lagrangian `L = ½ m (D x)² − V(x)` with a deformed time
/// derivative, or an arbitrary callable `L(t, x, Dx)` via [`MechLagrangian::custom`].
#[derive(Clone)]
pub struct MechLagrangian {
    pub m: f64,
    pub potential: Potential,
    pub deform: DeformationParams,
    pub option: VariationalOption,
    custom: Option<CustomL>,
}

impl fmt::Debug for MechLagrangian {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MechLagrangian")
            .field("m", &self.m)
            .field("potential", &self.potential)
            .field("deform", &self.deform)
            .field("option", &self.option)
            .field("custom", &self.custom.is_some())
            .finish()
    }
}

impl MechLagrangian {
    pub fn new(
        m: f64,
        potential: Potential,
        deform: DeformationParams,
        option: VariationalOption,
    ) -> Result<Self> {
        if !(m > 0.0) || !m.is_finite() {
            return Err(Error::Parameter(format!("mass must be positive, got {m}")));
        }
        Ok(MechLagrangian { m, potential, deform, option, custom: None })
    }

    /// Arbitrary `L(t, x, Dx)`. Partials switch to finite differences.
    pub fn custom(
        m: f64,
        deform: DeformationParams,
        option: VariationalOption,
        l: impl Fn(f64, f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        let mut base = Self::new(m, Potential::zero(), deform, option)?;
        base.custom = Some(Arc::new(l));
        Ok(base)
    }

    /// L(t, x, dax) with `dax` the already-evaluated deformed velocity.
    pub fn eval(&self, t: f64, x: f64, dax: f64) -> Result<f64> {
        match &self.custom {
            Some(l) => Ok(l(t, x, dax)),
            None => Ok(0.5 * self.m * dax * dax - self.potential.eval(x)?),
        }
    }

    /// ∂L/∂x; equals −V'(x) on the quadratic path.
    pub fn dl_dx(&self, t: f64, x: f64, dax: f64) -> Result<f64> {
        match &self.custom {
            Some(l) => {
                let h0 = 1e-4 * x.abs().max(1.0);
                let g = |h: f64| (l(t, x + h, dax) - l(t, x - h, dax)) / (2.0 * h);
                Ok(numeric::richardson(g, h0, 2, 3))
            }
            None => Ok(-self.potential.deriv(x)?),
        }
    }

    /// ∂L/∂(Dx), the generalized momentum; equals m·dax on the quadratic path.
    pub fn dl_ddax(&self, t: f64, x: f64, dax: f64) -> Result<f64> {
        match &self.custom {
            Some(l) => {
                let h0 = 1e-4 * dax.abs().max(1.0);
                let g = |h: f64| (l(t, x, dax + h) - l(t, x, dax - h)) / (2.0 * h);
                Ok(numeric::richardson(g, h0, 2, 3))
            }
            None => Ok(self.m * dax),
        }
    }
}

/// Evaluate the mechanics Lagrangian at a phase point.
pub fn eval_mech_l(l: &MechLagrangian, t: f64, x: f64, dax: f64) -> Result<f64> {
    l.eval(t, x, dax)
}

/// Field density descriptor for the wave solvers: mass, potential, ħ and the
/// deformation, plus which of the five equations to build.
#[derive(Debug, Clone)]
pub struct FieldLagrangian {
    pub variant: FieldVariant,
    pub m: f64,
    pub potential: Potential,
    pub hbar: f64,
    pub deform: DeformationParams,
}

impl FieldLagrangian {
    pub fn new(
        variant: FieldVariant,
        m: f64,
        potential: Potential,
        hbar: f64,
        deform: DeformationParams,
    ) -> Result<Self> {
        if !(m > 0.0) || !m.is_finite() {
            return Err(Error::Parameter(format!("mass must be positive, got {m}")));
        }
        if !(hbar > 0.0) || !hbar.is_finite() {
            return Err(Error::Parameter(format!("hbar must be positive, got {hbar}")));
        }
        Ok(FieldLagrangian { variant, m, potential, hbar, deform })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};

    #[test]
    fn eval_pinned_cases() {
        let free = MechLagrangian::new(
            1.0,
            Potential::zero(),
            DeformationParams::classical(),
            VariationalOption::Opt1,
        )
        .unwrap();
        assert_relative_eq!(free.eval(0.0, 0.0, 2.0).unwrap(), 2.0, epsilon = 1e-15);

        let osc = MechLagrangian::new(
            2.0,
            Potential::harmonic(1.0),
            DeformationParams::classical(),
            VariationalOption::Opt1,
        )
        .unwrap();
        assert_relative_eq!(osc.eval(0.0, 1.0, 0.0).unwrap(), -0.5, epsilon = 1e-15);
    }

    #[test]
    fn partials_pinned_cases() {
        let osc = MechLagrangian::new(
            3.0,
            Potential::harmonic(1.0),
            DeformationParams::classical(),
            VariationalOption::Opt1,
        )
        .unwrap();
        assert_relative_eq!(osc.dl_dx(0.0, 2.0, 0.0).unwrap(), -2.0, epsilon = 1e-15);
        assert_relative_eq!(osc.dl_ddax(0.0, 0.0, 1.0).unwrap(), 3.0, epsilon = 1e-15);
    }

    #[test]
    fn matches_expression_built_lagrangian() {
        // cross-evaluate against an independently assembled expression
        let l = MechLagrangian::new(
            1.7,
            Potential::parse("x^4 - 2*x").unwrap(),
            DeformationParams::conformable(0.7).unwrap(),
            VariationalOption::Opt3,
        )
        .unwrap();
        let direct = Expr::parse("0.5*1.7*w^2 - (x^4 - 2*x)").unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..40 {
            let x = rng.gen_range(-2.0..2.0);
            let w = rng.gen_range(-3.0..3.0);
            let mut b = std::collections::HashMap::new();
            b.insert("x".to_string(), x);
            b.insert("w".to_string(), w);
            assert_relative_eq!(
                l.eval(1.0, x, w).unwrap(),
                direct.eval(&b).unwrap(),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn custom_path_partials_agree_with_quadratic_path() {
        let quad = MechLagrangian::new(
            1.3,
            Potential::harmonic(2.0),
            DeformationParams::classical(),
            VariationalOption::Opt1,
        )
        .unwrap();
        let cust = MechLagrangian::custom(
            1.3,
            DeformationParams::classical(),
            VariationalOption::Opt1,
            |_t, x, w| 0.5 * 1.3 * w * w - 0.5 * 2.0 * x * x,
        )
        .unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..30 {
            let x = rng.gen_range(-2.0..2.0);
            let w = rng.gen_range(-2.0..2.0);
            assert_relative_eq!(
                cust.dl_dx(0.0, x, w).unwrap(),
                quad.dl_dx(0.0, x, w).unwrap(),
                epsilon = 1e-8
            );
            assert_relative_eq!(
                cust.dl_ddax(0.0, x, w).unwrap(),
                quad.dl_ddax(0.0, x, w).unwrap(),
                epsilon = 1e-8
            );
        }
    }

    #[test]
    fn potential_validation() {
        assert!(Potential::parse("x^2 + y").is_err());
        assert!(MechLagrangian::new(
            0.0,
            Potential::zero(),
            DeformationParams::classical(),
            VariationalOption::Opt1
        )
        .is_err());
        assert!(PhysicalParams::new(1.0, -1.0, 1.0).is_err());
        let callable = Potential::from_fn(|x| x.powi(4));
        assert_relative_eq!(callable.deriv(1.2).unwrap(), 4.0 * 1.2f64.powi(3), epsilon = 1e-9);
    }
}
