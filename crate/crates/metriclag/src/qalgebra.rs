//! Tsallis q-algebra primitives: the q-exponential/q-logarithm pair, the
//! deformed difference, and the q- and scale-q-derivatives built on it.
//!
//! Conventions: `e_q(x) = (1 + (1-q) x)^(1/(1-q))` with `e_1 = exp` as an
//! exact branch (never evaluated through the small-`1-q` power form, which
//! cancels catastrophically). Complex arguments use the principal branch of
//! the power.

use num_complex::Complex64;

use crate::deform::{DeformationParams, DerivMode, Func1D};
use crate::error::{Error, Result};
use crate::numeric;

/// q-exponential of a real argument. Requires `1 + (1-q) x > 0`.
pub fn q_exp(x: f64, q: f64) -> Result<f64> {
    if q == 1.0 {
        return Ok(x.exp());
    }
    let base = 1.0 + (1.0 - q) * x;
    if base <= 0.0 {
        return Err(Error::Domain(format!(
            "q_exp support requires 1+(1-q)x > 0; x = {x} lies outside (boundary at x = {})",
            1.0 / (q - 1.0)
        )));
    }
    Ok(base.powf(1.0 / (1.0 - q)))
}

/// q-exponential of a complex argument, principal branch.
pub fn q_exp_complex(z: Complex64, q: f64) -> Result<Complex64> {
    if q == 1.0 {
        return Ok(z.exp());
    }
    let base = Complex64::new(1.0, 0.0) + (1.0 - q) * z;
    let expo = 1.0 / (1.0 - q);
    if base.norm() == 0.0 {
        if expo > 0.0 {
            return Ok(Complex64::new(0.0, 0.0));
        }
        return Err(Error::Domain(format!(
            "q_exp base vanishes at z = {z} with non-positive exponent {expo}"
        )));
    }
    Ok(base.powf(expo))
}

/// q-logarithm, the inverse of [`q_exp`] on its support. Requires `y > 0`.
pub fn q_log(y: f64, q: f64) -> Result<f64> {
    if y <= 0.0 {
        return Err(Error::Domain(format!("q_log requires y > 0, got {y}")));
    }
    if q == 1.0 {
        return Ok(y.ln());
    }
    Ok((y.powf(1.0 - q) - 1.0) / (1.0 - q))
}

/// Deformed difference `(x - y) / (1 + (1-q) y)`.
pub fn q_difference(x: f64, y: f64, q: f64) -> Result<f64> {
    let den = 1.0 + (1.0 - q) * y;
    if den == 0.0 {
        return Err(Error::Domain(format!(
            "deformed difference has a pole at y = {} for q = {q}",
            1.0 / (q - 1.0)
        )));
    }
    Ok((x - y) / den)
}

/// q-derivative `D_q f(x) = (1 + (1-q) x) f'(x)` (kernel mode).
pub fn q_deriv(f: &Func1D, x: f64, q: f64) -> Result<f64> {
    q_deriv_mode(f, x, q, DerivMode::Kernel)
}

/// q-derivative with explicit mode. The limit mode extrapolates the deformed
/// difference quotient `(f(x) - f(y)) / ((x - y)/(1 + (1-q) y))` as `y -> x`,
/// independently of the stored derivative.
pub fn q_deriv_mode(f: &Func1D, x: f64, q: f64, mode: DerivMode) -> Result<f64> {
    let p = DeformationParams::q_deriv(q)?;
    match mode {
        DerivMode::Kernel => Ok(p.kernel(x)? * f.deriv(x)?),
        DerivMode::Limit => {
            p.kernel(x)?; // surface the pole before differencing across it
            let g = |h: f64| -> f64 {
                let y = x - h;
                let dq = (x - y) / (1.0 + (1.0 - q) * y);
                (f.eval(x).unwrap_or(f64::NAN) - f.eval(y).unwrap_or(f64::NAN)) / dq
            };
            let h0 = 1e-4f64.max(1e-4 * x.abs());
            let d = numeric::richardson(g, h0, 1, 4);
            if d.is_finite() {
                Ok(d)
            } else {
                Err(Error::Numerical(format!("q-derivative quotient not finite at x = {x}")))
            }
        }
    }
}

/// Scale-q-derivative `(1 + (1-q) lambda x) f'(x)`.
///
/// The kernel scales the *point*, not the function argument; with this
/// reading `f(x) = e_q(lambda x)` is an eigenfunction with eigenvalue
/// `lambda`, which is the property the q-deformed evolution relies on.
pub fn scale_q_deriv(f: &Func1D, x: f64, q: f64, lambda: f64) -> Result<f64> {
    let p = DeformationParams::scale_q(q, lambda)?;
    Ok(p.kernel(x)? * f.deriv(x)?)
}

/// Derivative of the q-exponential: `d/dx e_q(x) = e_q(x)^q`. Handy for
/// building analytic [`Func1D`] eigenfunction inputs.
pub fn q_exp_deriv(x: f64, q: f64) -> Result<f64> {
    if q == 1.0 {
        return Ok(x.exp());
    }
    let base = 1.0 + (1.0 - q) * x;
    if base <= 0.0 {
        return Err(Error::Domain(format!("outside q_exp support at x = {x}")));
    }
    Ok(base.powf(q / (1.0 - q)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn q_exp_pinned_values() {
        assert_relative_eq!(q_exp(1.0, 0.5).unwrap(), 2.25, epsilon = 1e-14);
        for &q in &[0.2, 0.5, 1.0, 1.5] {
            assert_relative_eq!(q_exp(0.0, q).unwrap(), 1.0, epsilon = 1e-15);
        }
        assert_relative_eq!(q_exp(0.7, 1.0).unwrap(), 0.7f64.exp(), epsilon = 1e-15);
        assert!(matches!(q_exp(-3.0, 0.5), Err(Error::Domain(_))));
    }

    #[test]
    fn q_exp_complex_modulus_example() {
        let v = q_exp_complex(Complex64::new(0.0, 1.0), 0.5).unwrap();
        assert_relative_eq!(v.norm(), 1.25, epsilon = 1e-12);
    }

    #[test]
    fn q_log_pinned_values() {
        assert_relative_eq!(q_log(2.25, 0.5).unwrap(), 1.0, epsilon = 1e-14);
        for &q in &[0.3, 0.8, 1.0, 1.4] {
            assert_relative_eq!(q_log(1.0, q).unwrap(), 0.0, epsilon = 1e-15);
        }
        assert!(matches!(q_log(0.0, 0.5), Err(Error::Domain(_))));
        assert!(matches!(q_log(-2.0, 1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn q_difference_pinned_values() {
        assert_relative_eq!(q_difference(3.0, 1.0, 0.5).unwrap(), 4.0 / 3.0, epsilon = 1e-14);
        assert_relative_eq!(q_difference(5.0, 2.0, 1.0).unwrap(), 3.0, epsilon = 1e-15);
        assert_relative_eq!(q_difference(2.0, 2.0, 0.3).unwrap(), 0.0, epsilon = 1e-15);
        // q = 1.5, y = 2 puts the denominator 1 + (1-q) y at exactly zero.
        assert!(matches!(q_difference(0.0, 2.0, 1.5), Err(Error::Domain(_))));
    }

    #[test]
    fn q_deriv_pinned_values() {
        let ident = Func1D::with_deriv(|x| x, |_| 1.0);
        assert_relative_eq!(q_deriv(&ident, 2.0, 0.5).unwrap(), 2.0, epsilon = 1e-14);
        let f = Func1D::with_deriv(|x: f64| x.sin(), |x: f64| x.cos());
        assert_relative_eq!(q_deriv(&f, 1.2, 1.0).unwrap(), 1.2f64.cos(), epsilon = 1e-14);
    }

    #[test]
    fn q_deriv_eigenfunction_identity() {
        // D_q e_q = e_q, exactly the statement that drives the q-evolution.
        for &q in &[0.2, 0.5, 0.8, 1.2, 1.5, 1.8] {
            let f = Func1D::with_deriv(
                move |x| q_exp(x, q).unwrap(),
                move |x| q_exp_deriv(x, q).unwrap(),
            );
            for &x in &[-0.4, 0.0, 0.3, 1.0] {
                if 1.0 + (1.0 - q) * x <= 0.0 {
                    continue;
                }
                let lhs = q_deriv(&f, x, q).unwrap();
                let rhs = q_exp(x, q).unwrap();
                assert!((lhs - rhs).abs() <= 1e-10 * rhs.abs().max(1.0), "q={q}, x={x}");
            }
        }
    }

    #[test]
    fn q_deriv_limit_mode_agrees() {
        let f = Func1D::from_fn(|x: f64| x.exp() * (0.5 * x).cos());
        for &q in &[0.4, 0.9, 1.3] {
            for &x in &[0.0, 0.7, 1.9] {
                let k = q_deriv_mode(&f, x, q, DerivMode::Kernel).unwrap();
                let l = q_deriv_mode(&f, x, q, DerivMode::Limit).unwrap();
                assert_relative_eq!(k, l, max_relative = 1e-7);
            }
        }
    }

    #[test]
    fn scale_q_reductions_and_eigenfunction() {
        let f = Func1D::with_deriv(|x: f64| x.powi(2), |x: f64| 2.0 * x);
        // lambda = 1 reduces to q_deriv; q = 1 to the plain derivative.
        assert_relative_eq!(
            scale_q_deriv(&f, 2.0, 0.5, 1.0).unwrap(),
            q_deriv(&f, 2.0, 0.5).unwrap(),
            epsilon = 1e-14
        );
        assert_relative_eq!(scale_q_deriv(&f, 2.0, 1.0, 3.0).unwrap(), 4.0, epsilon = 1e-14);

        let (q, lambda) = (0.6, 1.7);
        let g = Func1D::with_deriv(
            move |x| q_exp(lambda * x, q).unwrap(),
            move |x| lambda * q_exp_deriv(lambda * x, q).unwrap(),
        );
        for &x in &[0.0, 0.4, 1.1] {
            let lhs = scale_q_deriv(&g, x, q, lambda).unwrap();
            let rhs = lambda * q_exp(lambda * x, q).unwrap();
            assert_relative_eq!(lhs, rhs, max_relative = 1e-12);
        }
    }

    #[test]
    fn modulus_law_matches_closed_form() {
        for &q in &[0.3, 0.5, 0.7, 1.4] {
            if q == 1.0 {
                continue;
            }
            for &x in &[0.1, 0.5, 1.0, 2.0] {
                let m2 = q_exp_complex(Complex64::new(0.0, x), q).unwrap().norm_sqr();
                let expect = (1.0 + (1.0 - q).powi(2) * x * x).powf(1.0 / (1.0 - q));
                assert!((m2 - expect).abs() <= 1e-10 * expect.abs(), "q={q}, x={x}");
            }
        }
    }

    proptest! {
        #[test]
        fn round_trip_q_log_q_exp(x in -0.9f64..3.0, q in 0.1f64..1.9) {
            prop_assume!((q - 1.0).abs() > 1e-3);
            prop_assume!(1.0 + (1.0 - q) * x > 1e-3);
            let y = q_exp(x, q).unwrap();
            let back = q_log(y, q).unwrap();
            prop_assert!((back - x).abs() <= 1e-12 * x.abs().max(1.0));
        }

        #[test]
        fn q_sum_factorises_q_exp(x in -0.5f64..1.5, y in -0.5f64..1.5, q in 0.1f64..1.9) {
            prop_assume!((q - 1.0).abs() > 1e-3);
            prop_assume!(1.0 + (1.0 - q) * x > 1e-3 && 1.0 + (1.0 - q) * y > 1e-3);
            let qsum = x + y + (1.0 - q) * x * y;
            prop_assume!(1.0 + (1.0 - q) * qsum > 1e-3);
            let lhs = q_exp(x, q).unwrap() * q_exp(y, q).unwrap();
            let rhs = q_exp(qsum, q).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-10 * rhs.abs().max(1.0));
        }
    }
}
