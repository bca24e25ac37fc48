//! Shared numerical primitives: finite-difference weights on arbitrary grids,
//! adaptive quadrature and limit extrapolation.

use crate::error::{Error, Result};

/// Finite-difference weights for the `m`-th derivative at `x0` given stencil
/// nodes `xs`, via Fornberg's recursion. Works on non-uniform grids; a
/// `k+1`-point stencil of an order-`m` derivative is exact on polynomials of
/// degree `k`.
pub fn fd_weights(x0: f64, xs: &[f64], m: usize) -> Vec<f64> {
    let n = xs.len();
    assert!(n > m, "stencil must contain more nodes than derivative order");
    // c[j][k]: weight of node j for the k-th derivative, built incrementally.
    let mut c = vec![vec![0.0; m + 1]; n];
    let mut c1 = 1.0;
    let mut c4 = xs[0] - x0;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - x0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[m]).collect()
}

/// First derivative of a sampled series on a strictly increasing grid.
///
/// Every point uses a 5-point stencil (4th order on smooth data): centred in
/// the interior, skewed toward the boundary near the edges. With fewer than
/// 5 samples the stencil shrinks to whatever is available (3-point minimum).
/// Grids may be non-uniform.
pub fn sampled_deriv(grid: &[f64], values: &[f64]) -> Result<Vec<f64>> {
    let n = grid.len();
    if n != values.len() {
        return Err(Error::Precondition(format!(
            "grid ({n}) and values ({}) lengths differ",
            values.len()
        )));
    }
    if n < 3 {
        return Err(Error::Precondition(format!(
            "need at least 3 samples for a derivative, got {n}"
        )));
    }
    let width = 5.min(n);
    let mut out = vec![0.0; n];
    for i in 0..n {
        let lo = i.saturating_sub(width / 2).min(n - width);
        let hi = lo + width;
        let w = fd_weights(grid[i], &grid[lo..hi], 1);
        out[i] = w.iter().zip(&values[lo..hi]).map(|(wi, vi)| wi * vi).sum();
    }
    Ok(out)
}

/// Derivative of a sampled series at one arbitrary abscissa (not necessarily
/// a node), using the 5 nearest nodes.
pub fn sampled_deriv_at(grid: &[f64], values: &[f64], x: f64) -> Result<f64> {
    let n = grid.len();
    if n < 3 {
        return Err(Error::Precondition("need at least 3 samples".into()));
    }
    if x < grid[0] || x > grid[n - 1] {
        return Err(Error::Range(format!(
            "x = {x} outside sampled range [{}, {}]",
            grid[0],
            grid[n - 1]
        )));
    }
    let k = match grid.binary_search_by(|g| g.partial_cmp(&x).unwrap()) {
        Ok(i) => i,
        Err(i) => i.saturating_sub(1),
    };
    let width = 5.min(n);
    let lo = k.saturating_sub(width / 2).min(n - width);
    let w = fd_weights(x, &grid[lo..lo + width], 1);
    Ok(w.iter().zip(&values[lo..lo + width]).map(|(wi, vi)| wi * vi).sum())
}

/// Cubic (4-point Lagrange) interpolation of sampled data; linear near edges
/// degrades gracefully to the 2- or 3-point form.
pub fn interp(grid: &[f64], values: &[f64], x: f64) -> Result<f64> {
    let n = grid.len();
    if x < grid[0] || x > grid[n - 1] {
        return Err(Error::Range(format!(
            "x = {x} outside sampled range [{}, {}]",
            grid[0],
            grid[n - 1]
        )));
    }
    let k = match grid.binary_search_by(|g| g.partial_cmp(&x).unwrap()) {
        Ok(i) => return Ok(values[i]),
        Err(i) => i.saturating_sub(1),
    };
    let width = 4.min(n);
    let lo = k.saturating_sub(1).min(n - width);
    let xs = &grid[lo..lo + width];
    let ys = &values[lo..lo + width];
    // Lagrange form; stencils are tiny so the O(w^2) cost is irrelevant.
    let mut acc = 0.0;
    for i in 0..width {
        let mut term = ys[i];
        for j in 0..width {
            if i != j {
                term *= (x - xs[j]) / (xs[i] - xs[j]);
            }
        }
        acc += term;
    }
    Ok(acc)
}

/// Adaptive Simpson quadrature of `f` over `[a, b]` to absolute tolerance `tol`.
///
/// Non-finite integrand values surface as `Error::Integration` carrying the
/// offending abscissa.
pub fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> Result<f64> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Domain("integration limits must be finite".into()));
    }
    if a == b {
        return Ok(0.0);
    }
    let eval = |x: f64| -> Result<f64> {
        let y = f(x);
        if y.is_finite() {
            Ok(y)
        } else {
            Err(Error::Integration {
                location: x,
                detail: "integrand is not finite".into(),
            })
        }
    };
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (eval(a)?, eval(m)?, eval(b)?);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(&eval, a, b, fa, fm, fb, whole, tol.max(1e-15), 50)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> Result<f64>>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let (flm, frm) = (f(lm)?, f(rm)?);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 {
        return Err(Error::Integration {
            location: m,
            detail: "adaptive refinement exhausted".into(),
        });
    }
    if delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    let lv = simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?;
    let rv = simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?;
    Ok(lv + rv)
}

/// Extrapolate `g(h) -> L` as `h -> 0+` assuming a power-series error
/// `g(h) = L + c1*h^p + c2*h^(2p) + ...`. Uses `levels` Richardson stages
/// with step ratio 2.
pub fn richardson<G: Fn(f64) -> f64>(g: G, h0: f64, p: i32, levels: usize) -> f64 {
    let r = 2f64.powi(p);
    let mut tab: Vec<f64> = (0..levels).map(|i| g(h0 / 2f64.powi(i as i32))).collect();
    for k in 1..levels {
        let fac = r.powi(k as i32);
        for i in (k..levels).rev() {
            tab[i] = (fac * tab[i] - tab[i - 1]) / (fac - 1.0);
        }
    }
    tab[levels - 1]
}

/// Neville extrapolation of `(x_i, y_i)` samples to `x = 0`; used for
/// right-limit evaluation of operators at the lower end of their domain.
pub fn neville_to_zero(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len();
    let mut p = ys.to_vec();
    for k in 1..n {
        for i in (k..n).rev() {
            p[i] = (xs[i - k] * p[i] - xs[i] * p[i - 1]) / (xs[i - k] - xs[i]);
        }
    }
    p[n - 1]
}

/// Least-squares slope of `log(y)` against `log(x)`; the standard estimate
/// for empirical convergence orders.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}
