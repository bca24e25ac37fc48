//! Seeded randomized self-check of the calculus identities every deformed
//! operator must satisfy: linearity, the Leibniz and chain rules, collapse to
//! the classical derivative at identity order, agreement between the kernel
//! and limit evaluation modes, and integration by parts under the matching
//! measure weight. One run of the suite is the `props` gate of the CLI.

use std::sync::Arc;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::deform::{
    conformable_deriv_mode, deformed_deriv, deformed_integral, hausdorff_deriv_mode,
    katugampola_deriv_mode, q_integral, DeformKind, DeformationParams, DerivMode, Func1D,
};
use crate::error::{Error, Result};
use crate::qalgebra::q_deriv_mode;

/// Worst violation of one identity over the sampled cases.
#[derive(Debug, Clone)]
pub struct IdentityCheck {
    pub name: &'static str,
    pub cases: usize,
    pub worst: f64,
    pub tolerance: f64,
}

impl IdentityCheck {
    pub fn passed(&self) -> bool {
        self.worst.is_finite() && self.worst <= self.tolerance
    }
}

/// Outcome of a full suite run.
#[derive(Debug, Clone)]
pub struct SuiteReport {
    pub seed: u64,
    pub checks: Vec<IdentityCheck>,
}

impl SuiteReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(IdentityCheck::passed)
    }
}

type Shared = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A smooth test function carried together with its exact derivative, so the
/// identities are probed at analytic precision rather than at the accuracy of
/// some inner differencing.
#[derive(Clone)]
struct Smooth {
    f: Shared,
    df: Shared,
}

impl Smooth {
    fn new(
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        df: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Smooth { f: Arc::new(f), df: Arc::new(df) }
    }

    fn eval(&self, x: f64) -> f64 {
        (self.f)(x)
    }

    fn slope(&self, x: f64) -> f64 {
        (self.df)(x)
    }

    fn func(&self) -> Func1D {
        let f = self.f.clone();
        let df = self.df.clone();
        Func1D::with_deriv(move |x| f(x), move |x| df(x))
    }

    fn combine(a: f64, fa: &Smooth, b: f64, fb: &Smooth) -> Smooth {
        let (f1, d1) = (fa.f.clone(), fa.df.clone());
        let (f2, d2) = (fb.f.clone(), fb.df.clone());
        Smooth::new(
            move |x| a * f1(x) + b * f2(x),
            move |x| a * d1(x) + b * d2(x),
        )
    }

    fn product(fa: &Smooth, fb: &Smooth) -> Smooth {
        let (f1, d1) = (fa.f.clone(), fa.df.clone());
        let (f2, d2) = (fb.f.clone(), fb.df.clone());
        let (f1b, f2b) = (f1.clone(), f2.clone());
        Smooth::new(
            move |x| f1(x) * f2(x),
            move |x| d1(x) * f2b(x) + f1b(x) * d2(x),
        )
    }

    fn compose(outer: &Smooth, inner: &Smooth) -> Smooth {
        let (fo, dfo) = (outer.f.clone(), outer.df.clone());
        let (fi, dfi) = (inner.f.clone(), inner.df.clone());
        let fi2 = fi.clone();
        Smooth::new(move |x| fo(fi(x)), move |x| dfo(fi2(x)) * dfi(x))
    }
}

/// General family: low polynomials, damped exponentials and trigonometric
/// waves; coefficient ranges keep values and slopes a few dozen at most on
/// the sampled points so the absolute tolerances stay meaningful.
fn random_smooth(rng: &mut ChaCha8Rng) -> Smooth {
    match rng.gen_range(0..5u8) {
        0 => {
            let (a, b, c, d) = (
                rng.gen_range(-1.5..1.5),
                rng.gen_range(-1.5..1.5),
                rng.gen_range(-1.5..1.5),
                rng.gen_range(-1.5..1.5),
            );
            Smooth::new(
                move |x| a + b * x + c * x * x + d * x * x * x,
                move |x| b + 2.0 * c * x + 3.0 * d * x * x,
            )
        }
        1 => {
            let a = rng.gen_range(-1.5..1.5);
            let s = rng.gen_range(-1.0..0.8);
            Smooth::new(move |x| a * (s * x).exp(), move |x| a * s * (s * x).exp())
        }
        2 => {
            let a = rng.gen_range(-1.5..1.5);
            let w = rng.gen_range(0.3..2.5);
            let p = rng.gen_range(0.0..6.28);
            Smooth::new(
                move |x| a * (w * x + p).sin(),
                move |x| a * w * (w * x + p).cos(),
            )
        }
        3 => {
            let a = rng.gen_range(-1.5..1.5);
            Smooth::new(
                move |x| a / (1.0 + x * x),
                move |x| -2.0 * a * x / ((1.0 + x * x) * (1.0 + x * x)),
            )
        }
        _ => {
            let a = rng.gen_range(-1.5..1.5);
            Smooth::new(
                move |x| a * (1.0 + x * x).ln(),
                move |x| 2.0 * a * x / (1.0 + x * x),
            )
        }
    }
}

/// Outer functions for compositions: bounded value and slope on the whole
/// axis, so `f(g(x))` cannot blow up whatever the inner function does.
fn random_bounded(rng: &mut ChaCha8Rng) -> Smooth {
    match rng.gen_range(0..3u8) {
        0 => {
            let a = rng.gen_range(-1.5..1.5);
            let w = rng.gen_range(0.3..1.5);
            Smooth::new(move |x| a * (w * x).sin(), move |x| a * w * (w * x).cos())
        }
        1 => {
            let a = rng.gen_range(-1.5..1.5);
            Smooth::new(
                move |x| a / (1.0 + x * x),
                move |x| -2.0 * a * x / ((1.0 + x * x) * (1.0 + x * x)),
            )
        }
        _ => {
            let a = rng.gen_range(-1.5..1.5);
            Smooth::new(move |x| a * x.tanh(), move |x| {
                let c = x.cosh();
                a / (c * c)
            })
        }
    }
}

/// One operator draw: the parameter set, an admissible evaluation point and
/// the identity-order version of the same kind for the classical-limit check.
struct OperatorCase {
    params: DeformationParams,
    identity: DeformationParams,
    x: f64,
}

fn random_operator(rng: &mut ChaCha8Rng, slot: usize) -> Result<OperatorCase> {
    let x_max = 2.5;
    match slot % 5 {
        0 => {
            let alpha = rng.gen_range(0.3..0.95);
            Ok(OperatorCase {
                params: DeformationParams::conformable(alpha)?,
                identity: DeformationParams::conformable(1.0)?,
                x: rng.gen_range(0.2..x_max),
            })
        }
        1 => {
            let alpha = rng.gen_range(0.3..0.95);
            Ok(OperatorCase {
                params: DeformationParams::katugampola(alpha)?,
                // the order-1 member of the power-kernel family; the
                // katugampola constructor keeps its order strictly below 1
                identity: DeformationParams::conformable(1.0)?,
                x: rng.gen_range(0.2..x_max),
            })
        }
        2 => {
            let zeta = rng.gen_range(0.3..0.95);
            let l0 = rng.gen_range(0.5..2.0);
            Ok(OperatorCase {
                params: DeformationParams::hausdorff(zeta, l0)?,
                identity: DeformationParams::hausdorff(1.0, l0)?,
                x: rng.gen_range(0.2..x_max),
            })
        }
        3 => {
            let q = rng.gen_range(0.4..1.6);
            // keep the kernel 1+(1-q)x comfortably away from its zero
            let hi = if q > 1.0 { x_max.min(0.7 / (q - 1.0)) } else { x_max };
            Ok(OperatorCase {
                params: DeformationParams::q_deriv(q)?,
                identity: DeformationParams::q_deriv(1.0)?,
                x: rng.gen_range(0.2..hi.max(0.3)),
            })
        }
        _ => {
            let q = rng.gen_range(0.4..1.6);
            let lambda = rng.gen_range(0.3..1.5);
            let hi = if q > 1.0 {
                x_max.min(0.7 / ((q - 1.0) * lambda))
            } else {
                x_max
            };
            Ok(OperatorCase {
                params: DeformationParams::scale_q(q, lambda)?,
                identity: DeformationParams::scale_q(1.0, lambda)?,
                x: rng.gen_range(0.2..hi.max(0.3)),
            })
        }
    }
}

/// Limit-mode evaluation where the operator defines one; `None` for kinds
/// whose definition is already the kernel form.
fn limit_mode(params: &DeformationParams, f: &Func1D, x: f64) -> Result<Option<f64>> {
    let v = match params.kind {
        DeformKind::Conformable => {
            Some(conformable_deriv_mode(f, x, params.alpha, DerivMode::Limit)?)
        }
        DeformKind::Katugampola => {
            Some(katugampola_deriv_mode(f, x, params.alpha, DerivMode::Limit)?)
        }
        DeformKind::Hausdorff => {
            Some(hausdorff_deriv_mode(f, x, params.zeta, params.l0, DerivMode::Limit)?)
        }
        DeformKind::QDeriv => Some(q_deriv_mode(f, x, params.q, DerivMode::Limit)?),
        DeformKind::Classical | DeformKind::ScaleQ => None,
    };
    Ok(v)
}

struct Tally {
    name: &'static str,
    cases: usize,
    worst: f64,
    tolerance: f64,
}

impl Tally {
    fn new(name: &'static str, tolerance: f64) -> Self {
        Tally { name, cases: 0, worst: 0.0, tolerance }
    }

    fn record(&mut self, violation: f64) {
        self.cases += 1;
        if violation.is_nan() {
            self.worst = f64::NAN;
        } else {
            self.worst = self.worst.max(violation);
        }
    }

    fn into_check(self) -> IdentityCheck {
        IdentityCheck {
            name: self.name,
            cases: self.cases,
            worst: self.worst,
            tolerance: self.tolerance,
        }
    }
}

/// Run `cases` randomized draws; each draw samples one operator kind (cycled
/// so every kind receives a fifth of the budget), one admissible point and a
/// fresh pair of smooth functions, then pushes them through every identity
/// that applies there.
pub fn run_identity_suite(seed: u64, cases: usize) -> Result<SuiteReport> {
    if cases == 0 {
        return Err(Error::Precondition("the suite needs at least one case".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut linearity = Tally::new("linearity", 1e-8);
    let mut leibniz = Tally::new("leibniz_rule", 1e-8);
    let mut chain = Tally::new("chain_rule", 1e-8);
    let mut classical = Tally::new("classical_limit", 1e-8);
    let mut modes = Tally::new("mode_agreement", 1e-6);
    let mut parts_power = Tally::new("parts_power_weight", 1e-6);
    let mut parts_q = Tally::new("parts_q_weight", 1e-6);

    for slot in 0..cases {
        let case = random_operator(&mut rng, slot)?;
        let f = random_smooth(&mut rng);
        let g = random_smooth(&mut rng);
        let x = case.x;

        let df = deformed_deriv(&case.params, &f.func(), x)?;
        let dg = deformed_deriv(&case.params, &g.func(), x)?;

        // D(a f + b g) = a Df + b Dg
        let (a, b) = (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        let comb = Smooth::combine(a, &f, b, &g);
        let lhs = deformed_deriv(&case.params, &comb.func(), x)?;
        linearity.record((lhs - (a * df + b * dg)).abs());

        // D(fg) = g Df + f Dg
        let prod = Smooth::product(&f, &g);
        let lhs = deformed_deriv(&case.params, &prod.func(), x)?;
        leibniz.record((lhs - (g.eval(x) * df + f.eval(x) * dg)).abs());

        // D(h o g) = h'(g) Dg, with a bounded outer function
        let outer = random_bounded(&mut rng);
        let comp = Smooth::compose(&outer, &g);
        let lhs = deformed_deriv(&case.params, &comp.func(), x)?;
        chain.record((lhs - outer.slope(g.eval(x)) * dg).abs());

        // identity order collapses the operator onto the plain derivative
        let plain = deformed_deriv(&case.identity, &f.func(), x)?;
        classical.record((plain - f.slope(x)).abs());

        // the defining limit agrees with the kernel form
        if let Some(lim) = limit_mode(&case.params, &f.func(), x)? {
            modes.record((lim - df).abs() / df.abs().max(1.0));
        }

        // integration by parts under the matching weight, exercised on the
        // two kinds that own an integral
        match case.params.kind {
            DeformKind::Conformable => {
                let alpha = case.params.alpha;
                let (a, b) = (0.3, rng.gen_range(1.2..2.4));
                let fg = |s: &Smooth, t: &Smooth| {
                    let (sf, tdf) = (s.f.clone(), t.df.clone());
                    Func1D::from_fn(move |x: f64| sf(x) * x.powf(1.0 - alpha) * tdf(x))
                };
                let i1 = deformed_integral(&fg(&f, &g), a, b, alpha)?;
                let i2 = deformed_integral(&fg(&g, &f), a, b, alpha)?;
                let boundary = f.eval(b) * g.eval(b) - f.eval(a) * g.eval(a);
                parts_power.record((i1 + i2 - boundary).abs());
            }
            DeformKind::QDeriv => {
                let q = case.params.q;
                let (a, b) = (0.3, 0.9 * case.x.max(1.0));
                let fg = |s: &Smooth, t: &Smooth| {
                    let (sf, tdf) = (s.f.clone(), t.df.clone());
                    Func1D::from_fn(move |x: f64| sf(x) * (1.0 + (1.0 - q) * x) * tdf(x))
                };
                let i1 = q_integral(&fg(&f, &g), a, b, q)?;
                let i2 = q_integral(&fg(&g, &f), a, b, q)?;
                let boundary = f.eval(b) * g.eval(b) - f.eval(a) * g.eval(a);
                parts_q.record((i1 + i2 - boundary).abs());
            }
            _ => {}
        }
    }

    Ok(SuiteReport {
        seed,
        checks: vec![
            linearity.into_check(),
            leibniz.into_check(),
            chain.into_check(),
            classical.into_check(),
            modes.into_check(),
            parts_power.into_check(),
            parts_q.into_check(),
        ],
    })
}
