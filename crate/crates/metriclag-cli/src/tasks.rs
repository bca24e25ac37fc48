//! Task runners: one function per subcommand. Every runner writes its CSV
//! artifacts under `<out>/<name>/` and returns a one-line summary for stdout.

use std::fs;
use std::path::PathBuf;

use metriclag::{
    charge_history, deformed_deriv, deformed_divergence, integrate_hamilton, legendre,
    minimize_action, noether_current, run_identity_suite, solve_newton_opt12, solve_newton_opt3,
    solve_newton_q, solve_nrt_nonlinear, solve_opt3_spatial, solve_scale_q_time,
    solve_spatial_deformed, solve_time_deformed, ActionProblem, Complex64, DeformKind,
    DeformationParams, Error, Evolution, Expr, FieldLagrangian, FieldVariant, Func1D, Measure,
    MechLagrangian, PhaseState, Potential, Result, SymmetryVariation, Trajectory,
    VariationalOption, WaveFunction,
};

use crate::artifacts::{emit_plot, fmt_f64, write_csv, Series};
use crate::scenario::{Scenario, Task};

const ODE_TOL: f64 = 1e-10;

/// Output root: the environment override wins over the scenario field.
fn out_root(scenario_out: &str) -> PathBuf {
    match std::env::var("METRICLAG_OUT") {
        Ok(v) if !v.is_empty() => PathBuf::from(v),
        _ => PathBuf::from(scenario_out),
    }
}

fn out_dir(s: &Scenario) -> Result<PathBuf> {
    let dir = out_root(&s.out_dir).join(&s.name);
    fs::create_dir_all(&dir)
        .map_err(|e| Error::Parameter(format!("cannot create `{}`: {e}", dir.display())))?;
    Ok(dir)
}

fn mech(s: &Scenario) -> Result<MechLagrangian> {
    MechLagrangian::new(s.physics.m, Potential::parse(&s.potential)?, s.deformation, s.option)
}

fn field(s: &Scenario) -> Result<FieldLagrangian> {
    FieldLagrangian::new(
        s.variant,
        s.physics.m,
        Potential::parse(&s.potential)?,
        s.physics.hbar,
        s.deformation,
    )
}

fn gaussian_packet(s: &Scenario, measure: Measure) -> Result<WaveFunction> {
    let g = &s.grid;
    let n = g.n_nodes;
    let x: Vec<f64> = (0..n)
        .map(|i| g.x_min + (g.x_max - g.x_min) * i as f64 / (n - 1) as f64)
        .collect();
    let norm = (std::f64::consts::PI * s.packet.width * s.packet.width).powf(-0.25);
    let mut psi: Vec<Complex64> = x
        .iter()
        .map(|&xv| {
            let arg = -(xv - s.packet.center).powi(2) / (2.0 * s.packet.width * s.packet.width);
            Complex64::new(0.0, s.packet.momentum * xv).exp() * (norm * arg.exp())
        })
        .collect();
    psi[0] = Complex64::new(0.0, 0.0);
    psi[n - 1] = Complex64::new(0.0, 0.0);
    WaveFunction::new(x, psi, measure)
}

/// Deformed derivative of a single-variable expression at a point.
pub fn run_derive(expr_text: &str, params: &DeformationParams, at: f64) -> Result<String> {
    let e = Expr::parse(expr_text)?;
    let vars = e.free_vars();
    if vars.len() > 1 {
        return Err(Error::Unbound(format!(
            "expression must use one variable, found {}",
            vars.iter().cloned().collect::<Vec<_>>().join(", ")
        )));
    }
    let var = vars.iter().next().cloned().unwrap_or_else(|| "x".to_string());
    let de = e.diff(&var);
    let (va, vb) = (var.clone(), var);
    let f = Func1D::with_deriv(
        move |x| e.eval_single(&va, x).unwrap_or(f64::NAN),
        move |x| de.eval_single(&vb, x).unwrap_or(f64::NAN),
    );
    let v = deformed_deriv(params, &f, at)?;
    if !v.is_finite() {
        return Err(Error::Numerical(format!(
            "derivative is not finite at {at} (expression domain fault)"
        )));
    }
    Ok(format!("{v:?}"))
}

fn solve_mechanics(s: &Scenario, l: &MechLagrangian, n_out: usize) -> Result<Trajectory> {
    let (x0, v0) = (s.state.x0, s.state.v0);
    let (t0, t1) = (s.time.t0_seconds, s.time.t1_seconds);
    match (s.deformation.kind, s.option) {
        (DeformKind::QDeriv, VariationalOption::Opt3) => {
            solve_newton_q(l, x0, v0, t1, ODE_TOL, n_out)
        }
        (_, o) if o.shares_opt12_form() => solve_newton_opt12(l, x0, v0, t0, t1, ODE_TOL, n_out),
        _ => solve_newton_opt3(l, x0, v0, t0, t1, ODE_TOL, n_out),
    }
}

pub fn run_newton(s: &Scenario) -> Result<String> {
    let dir = out_dir(s)?;
    let l = mech(s)?;
    let n_out = s.time.n_steps.max(2);
    let traj = solve_mechanics(s, &l, n_out)?;
    let v = traj.velocities()?;
    let rows: Vec<Vec<String>> = traj
        .t
        .iter()
        .zip(&traj.x)
        .zip(&v)
        .map(|((&t, &x), &vi)| vec![fmt_f64(t), fmt_f64(x), fmt_f64(vi)])
        .collect();
    write_csv(&dir.join("trajectory.csv"), &["t", "x", "v"], &rows)?;
    if s.svg {
        emit_plot(
            &[
                Series::new("x(t)", traj.t.clone(), traj.x.clone()),
                Series::new("v(t)", traj.t.clone(), v.clone()),
            ],
            &dir.join("trajectory.svg"),
        )?;
    }
    Ok(format!(
        "newton[{}]: {} samples -> {}; final x {:.6}, final v {:.6}",
        s.name,
        traj.t.len(),
        dir.display(),
        traj.x.last().unwrap(),
        v.last().unwrap()
    ))
}

fn evolve(s: &Scenario) -> Result<(FieldLagrangian, Evolution)> {
    if s.time.t0_seconds != 0.0 {
        return Err(Error::Parameter(
            "wave-equation runs start at t = 0; set time.t0_seconds to 0".into(),
        ));
    }
    let l = field(s)?;
    let measure = match s.variant {
        FieldVariant::SpatialDeformed => metriclag::measure_for(&s.deformation)?,
        _ => Measure::Plain,
    };
    let wf = gaussian_packet(s, measure)?;
    let t1 = s.time.t1_seconds;
    let steps = s.time.n_steps;
    let ev = match s.variant {
        FieldVariant::TimeDeformed => solve_time_deformed(&wf, &l, t1, steps)?,
        FieldVariant::SpatialDeformed => solve_spatial_deformed(&wf, &l, t1, steps)?,
        FieldVariant::ScaleQTime => solve_scale_q_time(&wf, &l, t1, steps)?,
        FieldVariant::NrtNonlinear => solve_nrt_nonlinear(&wf, &l, t1, steps)?,
        FieldVariant::Opt3Spatial => solve_opt3_spatial(&wf, &l, t1, steps)?,
    };
    Ok((l, ev))
}

pub fn run_schrodinger(s: &Scenario) -> Result<String> {
    let dir = out_dir(s)?;
    let (_, ev) = evolve(s)?;
    let norm_rows: Vec<Vec<String>> = ev
        .times
        .iter()
        .zip(&ev.norms)
        .map(|(&t, &n)| vec![fmt_f64(t), fmt_f64(n)])
        .collect();
    write_csv(&dir.join("norms.csv"), &["t", "norm"], &norm_rows)?;
    let last = ev.final_state();
    let state_rows: Vec<Vec<String>> = last
        .x
        .iter()
        .zip(&last.psi)
        .map(|(&x, p)| vec![fmt_f64(x), fmt_f64(p.re), fmt_f64(p.im), fmt_f64(p.norm_sqr())])
        .collect();
    write_csv(&dir.join("final_state.csv"), &["x", "re", "im", "abs2"], &state_rows)?;
    if s.svg {
        let density = |wf: &WaveFunction| wf.psi.iter().map(|p| p.norm_sqr()).collect::<Vec<_>>();
        emit_plot(
            &[
                Series::new("|psi(0)|^2", ev.states[0].x.clone(), density(&ev.states[0])),
                Series::new("|psi(T)|^2", last.x.clone(), density(last)),
            ],
            &dir.join("density.svg"),
        )?;
    }
    Ok(format!(
        "schrodinger[{}]: {} steps ({}) -> {}; norm drift {:.3e}",
        s.name,
        ev.times.len() - 1,
        s.variant,
        dir.display(),
        ev.norm_drift()
    ))
}

pub fn run_action_min(s: &Scenario) -> Result<String> {
    let dir = out_dir(s)?;
    let l = mech(s)?;
    let n = s.time.n_steps.max(16);
    let x1 = match s.state.x1 {
        Some(x1) => x1,
        // no endpoint given: take it from the equation of motion so the
        // boundary-value problem is consistent with the dynamics
        None => *solve_mechanics(s, &l, n)?.x.last().unwrap(),
    };
    let problem = ActionProblem::new(l, s.time.t0_seconds, s.time.t1_seconds, s.state.x0, x1, n)?;
    let report = minimize_action(&problem)?;
    let rows: Vec<Vec<String>> = report
        .trajectory
        .t
        .iter()
        .zip(&report.trajectory.x)
        .map(|(&t, &x)| vec![fmt_f64(t), fmt_f64(x)])
        .collect();
    write_csv(&dir.join("trajectory.csv"), &["t", "x"], &rows)?;
    if s.svg {
        emit_plot(
            &[Series::new("x(t)", report.trajectory.t.clone(), report.trajectory.x.clone())],
            &dir.join("trajectory.svg"),
        )?;
    }
    let line = format!(
        "action_min[{}]: action {:.8e} after {} iterations (grad norm {:.3e}) -> {}",
        s.name,
        report.action,
        report.iterations,
        report.grad_norm,
        dir.display()
    );
    if report.converged {
        Ok(line)
    } else {
        Err(Error::NonConvergence(format!(
            "minimizer stalled: grad norm {:.3e} after {} iterations",
            report.grad_norm, report.iterations
        )))
    }
}

pub fn run_hamilton(s: &Scenario) -> Result<String> {
    let dir = out_dir(s)?;
    let l = mech(s)?;
    let (t0, t1) = (s.time.t0_seconds, s.time.t1_seconds);
    // the canonical momentum is conjugate to the deformed velocity; opt1/2
    // prescribe that velocity directly, opt3 prescribes the plain one
    let p0 = if s.option.shares_opt12_form() {
        l.m * s.state.v0
    } else {
        l.m * s.deformation.kernel(t0)? * s.state.v0
    };
    let s0 = PhaseState::new(t0, s.state.x0, p0)?;
    let states = integrate_hamilton(&l, s0, t1, ODE_TOL, s.time.n_steps.max(2))?;
    let mut rows = Vec::with_capacity(states.len());
    let mut h0 = 0.0;
    let mut drift = 0.0f64;
    for (i, st) in states.iter().enumerate() {
        // quadratic kinetic term: p = m * dax inverts in closed form
        let (_, h) = legendre(&l, st.t, st.q, st.p / l.m)?;
        if i == 0 {
            h0 = h;
        }
        drift = drift.max((h - h0).abs());
        rows.push(vec![fmt_f64(st.t), fmt_f64(st.q), fmt_f64(st.p), fmt_f64(h)]);
    }
    write_csv(&dir.join("phase.csv"), &["t", "q", "p", "H"], &rows)?;
    if s.svg {
        let ts: Vec<f64> = states.iter().map(|st| st.t).collect();
        emit_plot(
            &[
                Series::new("q(t)", ts.clone(), states.iter().map(|st| st.q).collect()),
                Series::new("p(t)", ts, states.iter().map(|st| st.p).collect()),
            ],
            &dir.join("phase.svg"),
        )?;
    }
    Ok(format!(
        "hamilton[{}]: {} samples -> {}; H drift {:.3e}",
        s.name,
        states.len(),
        dir.display(),
        drift
    ))
}

pub fn run_noether_check(s: &Scenario) -> Result<String> {
    if s.time.n_steps < 2 {
        return Err(Error::Parameter(
            "noether_check needs at least 2 steps for a divergence stencil".into(),
        ));
    }
    let dir = out_dir(s)?;
    let (l, ev) = evolve(s)?;
    let sym = SymmetryVariation::phase();
    let mut currents = Vec::with_capacity(ev.states.len());
    let mut warnings = 0usize;
    for k in 0..ev.states.len() {
        let c = noether_current(&l, &ev, k, &sym)?;
        if c.warning.is_some() {
            warnings += 1;
        }
        currents.push(c);
    }
    let charges = charge_history(&l, &ev, &sym)?;
    let (axis_time, axis_space) = match s.variant {
        FieldVariant::TimeDeformed => (s.deformation, DeformationParams::classical()),
        FieldVariant::SpatialDeformed | FieldVariant::Opt3Spatial => {
            (DeformationParams::classical(), s.deformation)
        }
        _ => (DeformationParams::classical(), DeformationParams::classical()),
    };
    let divergence = deformed_divergence(&currents, &ev.times, &axis_time, &axis_space)?;
    let interior_max: Vec<f64> = divergence
        .residual
        .iter()
        .map(|row| row.iter().fold(0.0f64, |m, &r| m.max(r.abs())))
        .collect();
    let rows: Vec<Vec<String>> = ev
        .times
        .iter()
        .zip(&charges)
        .enumerate()
        .map(|(k, (&t, &q))| {
            let res = if k >= 1 && k + 1 < ev.times.len() {
                fmt_f64(interior_max[k - 1])
            } else {
                String::new()
            };
            vec![fmt_f64(t), fmt_f64(q), res]
        })
        .collect();
    write_csv(&dir.join("noether.csv"), &["t", "Q", "max_divergence_residual"], &rows)?;
    if s.svg {
        emit_plot(
            &[Series::new("Q(t)", ev.times.clone(), charges.clone())],
            &dir.join("charge.svg"),
        )?;
    }
    let drift = charges
        .iter()
        .map(|q| (q - charges[0]).abs() / charges[0].abs().max(1e-300))
        .fold(0.0f64, f64::max);
    Ok(format!(
        "noether_check[{}]: charge drift {:.3e}, max divergence residual {:.3e}, {} flagged snapshots -> {}",
        s.name,
        drift,
        divergence.max_abs,
        warnings,
        dir.display()
    ))
}

pub fn run_props(s: &Scenario, lines: &mut Vec<String>) -> Result<String> {
    let dir = out_dir(s)?;
    let report = run_identity_suite(s.seed, s.cases)?;
    let mut rows = Vec::new();
    for c in &report.checks {
        lines.push(format!(
            "  {:<20} {:>5} cases  worst {:>12.3e}  tol {:>8.0e}  {}",
            c.name,
            c.cases,
            c.worst,
            c.tolerance,
            if c.passed() { "ok" } else { "FAIL" }
        ));
        rows.push(vec![
            c.name.to_string(),
            c.cases.to_string(),
            fmt_f64(c.worst),
            fmt_f64(c.tolerance),
            c.passed().to_string(),
        ]);
    }
    write_csv(
        &dir.join("report.csv"),
        &["check", "cases", "worst", "tolerance", "passed"],
        &rows,
    )?;
    if report.all_passed() {
        Ok(format!(
            "props[{}]: {} checks over {} cases (seed {}) all hold -> {}",
            s.name,
            report.checks.len(),
            s.cases,
            s.seed,
            dir.display()
        ))
    } else {
        Err(Error::Numerical(format!(
            "{} identity checks failed (seed {})",
            report.checks.iter().filter(|c| !c.passed()).count(),
            s.seed
        )))
    }
}

/// Run a scenario by its own task field; `lines` collects extra report rows
/// some tasks print above the summary.
pub fn dispatch(s: &Scenario, lines: &mut Vec<String>) -> Result<String> {
    match s.task {
        Task::Derive => run_derive(&s.potential, &s.deformation, s.state.x0),
        Task::Newton => run_newton(s),
        Task::Schrodinger => run_schrodinger(s),
        Task::ActionMin => run_action_min(s),
        Task::Hamilton => run_hamilton(s),
        Task::NoetherCheck => run_noether_check(s),
        Task::Props => run_props(s, lines),
    }
}

/// Run scenario files concurrently; results are reported in input order.
pub fn run_batch(paths: &[PathBuf], jobs: usize) -> Vec<(String, Result<String>)> {
    let jobs = jobs.max(1).min(paths.len().max(1));
    let next = std::sync::atomic::AtomicUsize::new(0);
    let mut results: Vec<Option<(String, Result<String>)>> = Vec::new();
    results.resize_with(paths.len(), || None);
    let slots = std::sync::Mutex::new(&mut results);
    std::thread::scope(|scope| {
        for _ in 0..jobs {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                if i >= paths.len() {
                    break;
                }
                let label = paths[i].display().to_string();
                let outcome = Scenario::from_file(&paths[i]).and_then(|s| {
                    let mut lines = Vec::new();
                    let summary = dispatch(&s, &mut lines)?;
                    Ok(if lines.is_empty() {
                        summary
                    } else {
                        format!("{}\n{}", lines.join("\n"), summary)
                    })
                });
                slots.lock().unwrap()[i] = Some((label, outcome));
            });
        }
    });
    results.into_iter().map(|r| r.expect("every slot filled")).collect()
}
