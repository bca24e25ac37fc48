//! Scenario front end for the deformed-calculus engine. Subcommands mirror
//! the scenario task enum; every task accepts either `--config <json>` or a
//! flags-only invocation. Exit codes: 0 success, 2 invalid input, 3 numerical
//! failure.

mod artifacts;
mod scenario;
mod tasks;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use metriclag::{DeformKind, Error, FieldVariant, PhysicalParams, Result, VariationalOption};

use scenario::{
    build_deformation, GridSpec, PacketSpec, RawDeformation, RawScenario, Scenario, StateSpec,
    Task, TimeSpec, DEFAULT_GRID, DEFAULT_PACKET, DEFAULT_STATE, DEFAULT_TIME,
};

#[derive(Parser)]
#[command(
    name = "metriclag",
    version,
    about = "Deformed-calculus runner: derivatives, deformed Newton dynamics, wave propagation, \
             action minimization, Hamiltonian flow and conserved currents."
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Debug, Default)]
struct DeformFlags {
    /// operator family: classical|conformable|hausdorff|katugampola|q_deriv|scale_q
    /// (inferred from --alpha/--zeta/--q when omitted)
    #[arg(long)]
    kind: Option<String>,
    /// power-kernel order in (0, 1]
    #[arg(long)]
    alpha: Option<f64>,
    /// metric exponent of the cutoff kernel, in (0, 1]
    #[arg(long)]
    zeta: Option<f64>,
    /// lower cutoff of the medium
    #[arg(long)]
    l0: Option<f64>,
    /// nonextensivity index; 1 is the classical limit
    #[arg(long)]
    q: Option<f64>,
    /// scale parameter of the scale-q kernel
    #[arg(long)]
    lambda: Option<f64>,
}

impl DeformFlags {
    fn to_raw(&self) -> Result<RawDeformation> {
        let kind = match &self.kind {
            Some(k) => Some(parse_kind(k)?),
            None => {
                if self.alpha.is_some() {
                    Some(DeformKind::Conformable)
                } else if self.q.is_some() && self.lambda.is_some() {
                    Some(DeformKind::ScaleQ)
                } else if self.q.is_some() {
                    Some(DeformKind::QDeriv)
                } else if self.zeta.is_some() {
                    Some(DeformKind::Hausdorff)
                } else {
                    None
                }
            }
        };
        Ok(RawDeformation {
            kind,
            alpha: self.alpha,
            zeta: self.zeta,
            l0: self.l0,
            q: self.q,
            lambda: self.lambda,
        })
    }

    fn flags_in_use(&self, used: &mut Vec<&'static str>) {
        for (flag, set) in [
            ("--kind", self.kind.is_some()),
            ("--alpha", self.alpha.is_some()),
            ("--zeta", self.zeta.is_some()),
            ("--l0", self.l0.is_some()),
            ("--q", self.q.is_some()),
            ("--lambda", self.lambda.is_some()),
        ] {
            if set {
                used.push(flag);
            }
        }
    }
}

#[derive(Args, Debug)]
struct DeriveArgs {
    /// scenario JSON (its `potential` field is differentiated at `state.x0`)
    #[arg(long)]
    config: Option<PathBuf>,
    /// expression in one variable, e.g. "t^2"
    #[arg(long)]
    expr: Option<String>,
    /// evaluation point
    #[arg(long)]
    at: Option<f64>,
    #[command(flatten)]
    deform: DeformFlags,
}

#[derive(Args, Debug)]
struct ScenArgs {
    /// scenario JSON file; excludes every flag below
    #[arg(long)]
    config: Option<PathBuf>,
    /// run name; artifacts land in <out>/<name>/
    #[arg(long)]
    name: Option<String>,
    #[command(flatten)]
    deform: DeformFlags,
    /// variational recipe 1, 2 or 3
    #[arg(long)]
    option: Option<u8>,
    /// wave-equation family: time_deformed|spatial_deformed|scale_q_time|nrt_nonlinear|opt3_spatial
    #[arg(long)]
    variant: Option<String>,
    /// potential expression in x, e.g. "0.5*x^2"
    #[arg(long)]
    potential: Option<String>,
    #[arg(long)]
    mass: Option<f64>,
    #[arg(long)]
    hbar: Option<f64>,
    /// oscillator stiffness k (used by harmonic potentials)
    #[arg(long)]
    stiffness: Option<f64>,
    #[arg(long)]
    x0: Option<f64>,
    #[arg(long)]
    v0: Option<f64>,
    /// endpoint for action minimization (defaults to the ODE endpoint)
    #[arg(long)]
    x1: Option<f64>,
    #[arg(long)]
    t0: Option<f64>,
    #[arg(long)]
    t1: Option<f64>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    x_min: Option<f64>,
    #[arg(long)]
    x_max: Option<f64>,
    #[arg(long)]
    nodes: Option<usize>,
    /// wave-packet center
    #[arg(long)]
    center: Option<f64>,
    /// wave-packet width
    #[arg(long)]
    width: Option<f64>,
    /// wave-packet momentum
    #[arg(long)]
    momentum: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    cases: Option<usize>,
    /// output root (the METRICLAG_OUT environment variable overrides it)
    #[arg(long)]
    out: Option<String>,
    /// also emit SVG line plots
    #[arg(long)]
    svg: bool,
    /// print the normalized scenario JSON instead of running the task
    #[arg(long)]
    emit_config: bool,
}

#[derive(Args, Debug)]
struct BatchArgs {
    /// scenario JSON files to run
    #[arg(required = true)]
    configs: Vec<PathBuf>,
    /// number of scenarios to run concurrently
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Subcommand)]
enum Cmd {
    /// Evaluate a deformed derivative of an expression at a point
    Derive(DeriveArgs),
    /// Integrate the deformed Newton equation of motion
    Newton(ScenArgs),
    /// Propagate a wave packet under one of the deformed wave equations
    Schrodinger(ScenArgs),
    /// Minimize the discretized action between fixed endpoints
    #[command(name = "action_min")]
    ActionMin(ScenArgs),
    /// Integrate the canonical phase-space flow and track H
    Hamilton(ScenArgs),
    /// Propagate a packet and audit its conserved phase charge
    #[command(name = "noether_check")]
    NoetherCheck(ScenArgs),
    /// Run the randomized calculus identity suite
    Props(ScenArgs),
    /// Run several scenario files, optionally in parallel
    Batch(BatchArgs),
}

fn parse_kind(text: &str) -> Result<DeformKind> {
    match text {
        "classical" => Ok(DeformKind::Classical),
        "conformable" => Ok(DeformKind::Conformable),
        "hausdorff" => Ok(DeformKind::Hausdorff),
        "katugampola" => Ok(DeformKind::Katugampola),
        "q_deriv" => Ok(DeformKind::QDeriv),
        "scale_q" => Ok(DeformKind::ScaleQ),
        other => Err(Error::Parameter(format!(
            "unknown operator kind `{other}`; expected classical|conformable|hausdorff|katugampola|q_deriv|scale_q"
        ))),
    }
}

fn parse_option(n: u8) -> Result<VariationalOption> {
    match n {
        1 => Ok(VariationalOption::Opt1),
        2 => Ok(VariationalOption::Opt2),
        3 => Ok(VariationalOption::Opt3),
        other => Err(Error::Parameter(format!(
            "variational option must be 1, 2 or 3, got {other}"
        ))),
    }
}

fn parse_variant(text: &str) -> Result<FieldVariant> {
    match text {
        "time_deformed" => Ok(FieldVariant::TimeDeformed),
        "spatial_deformed" => Ok(FieldVariant::SpatialDeformed),
        "scale_q_time" => Ok(FieldVariant::ScaleQTime),
        "nrt_nonlinear" => Ok(FieldVariant::NrtNonlinear),
        "opt3_spatial" => Ok(FieldVariant::Opt3Spatial),
        other => Err(Error::Parameter(format!(
            "unknown variant `{other}`; expected time_deformed|spatial_deformed|scale_q_time|nrt_nonlinear|opt3_spatial"
        ))),
    }
}

impl ScenArgs {
    fn flags_in_use(&self) -> Vec<&'static str> {
        let mut used = Vec::new();
        self.deform.flags_in_use(&mut used);
        for (flag, set) in [
            ("--name", self.name.is_some()),
            ("--option", self.option.is_some()),
            ("--variant", self.variant.is_some()),
            ("--potential", self.potential.is_some()),
            ("--mass", self.mass.is_some()),
            ("--hbar", self.hbar.is_some()),
            ("--stiffness", self.stiffness.is_some()),
            ("--x0", self.x0.is_some()),
            ("--v0", self.v0.is_some()),
            ("--x1", self.x1.is_some()),
            ("--t0", self.t0.is_some()),
            ("--t1", self.t1.is_some()),
            ("--steps", self.steps.is_some()),
            ("--x-min", self.x_min.is_some()),
            ("--x-max", self.x_max.is_some()),
            ("--nodes", self.nodes.is_some()),
            ("--center", self.center.is_some()),
            ("--width", self.width.is_some()),
            ("--momentum", self.momentum.is_some()),
            ("--seed", self.seed.is_some()),
            ("--cases", self.cases.is_some()),
            ("--out", self.out.is_some()),
            ("--svg", self.svg),
        ] {
            if set {
                used.push(flag);
            }
        }
        used
    }

    fn to_scenario(&self, task: Task) -> Result<Scenario> {
        if let Some(cfg) = &self.config {
            let used = self.flags_in_use();
            if !used.is_empty() {
                return Err(Error::Parameter(format!(
                    "--config excludes flag-style arguments; drop {}",
                    used.join(", ")
                )));
            }
            let s = Scenario::from_file(cfg)?;
            if s.task != task {
                return Err(Error::Parameter(format!(
                    "config task `{}` does not match subcommand `{}`",
                    s.task.token(),
                    task.token()
                )));
            }
            return Ok(s);
        }

        let physics = if self.mass.is_some() || self.hbar.is_some() || self.stiffness.is_some() {
            Some(PhysicalParams {
                hbar: self.hbar.unwrap_or(1.0),
                m: self.mass.unwrap_or(1.0),
                k: self.stiffness.unwrap_or(1.0),
            })
        } else {
            None
        };
        let grid = if self.x_min.is_some() || self.x_max.is_some() || self.nodes.is_some() {
            Some(GridSpec {
                x_min: self.x_min.unwrap_or(DEFAULT_GRID.x_min),
                x_max: self.x_max.unwrap_or(DEFAULT_GRID.x_max),
                n_nodes: self.nodes.unwrap_or(DEFAULT_GRID.n_nodes),
            })
        } else {
            None
        };
        let time = if self.t0.is_some() || self.t1.is_some() || self.steps.is_some() {
            Some(TimeSpec {
                t0_seconds: self.t0.unwrap_or(DEFAULT_TIME.t0_seconds),
                t1_seconds: self.t1.unwrap_or(DEFAULT_TIME.t1_seconds),
                n_steps: self.steps.unwrap_or(DEFAULT_TIME.n_steps),
            })
        } else {
            None
        };
        let state = if self.x0.is_some() || self.v0.is_some() || self.x1.is_some() {
            Some(StateSpec {
                x0: self.x0.unwrap_or(DEFAULT_STATE.x0),
                v0: self.v0.unwrap_or(DEFAULT_STATE.v0),
                x1: self.x1,
            })
        } else {
            None
        };
        let packet = if self.center.is_some() || self.width.is_some() || self.momentum.is_some() {
            Some(PacketSpec {
                center: self.center.unwrap_or(DEFAULT_PACKET.center),
                width: self.width.unwrap_or(DEFAULT_PACKET.width),
                momentum: self.momentum.unwrap_or(DEFAULT_PACKET.momentum),
            })
        } else {
            None
        };
        let raw = RawScenario {
            name: self.name.clone(),
            task,
            deformation: Some(self.deform.to_raw()?),
            physics,
            potential: self.potential.clone(),
            option: self.option.map(parse_option).transpose()?,
            variant: self.variant.as_deref().map(parse_variant).transpose()?,
            grid,
            time,
            state,
            packet,
            seed: self.seed,
            cases: self.cases,
            out_dir: self.out.clone(),
            svg: if self.svg { Some(true) } else { None },
        };
        Scenario::normalize(raw)
    }
}

fn run_derive_cmd(args: &DeriveArgs) -> Result<String> {
    if let Some(cfg) = &args.config {
        let mut used = Vec::new();
        args.deform.flags_in_use(&mut used);
        if args.expr.is_some() {
            used.push("--expr");
        }
        if args.at.is_some() {
            used.push("--at");
        }
        if !used.is_empty() {
            return Err(Error::Parameter(format!(
                "--config excludes flag-style arguments; drop {}",
                used.join(", ")
            )));
        }
        let s = Scenario::from_file(cfg)?;
        if s.task != Task::Derive {
            return Err(Error::Parameter(format!(
                "config task `{}` does not match subcommand `derive`",
                s.task.token()
            )));
        }
        return tasks::run_derive(&s.potential, &s.deformation, s.state.x0);
    }
    let expr = args
        .expr
        .as_deref()
        .ok_or_else(|| Error::Parameter("--expr is required without --config".into()))?;
    let at = args
        .at
        .ok_or_else(|| Error::Parameter("--at is required without --config".into()))?;
    let params = build_deformation(&args.deform.to_raw()?)?;
    tasks::run_derive(expr, &params, at)
}

fn run_scen_cmd(args: &ScenArgs, task: Task) -> Result<String> {
    let s = args.to_scenario(task)?;
    if args.emit_config {
        return Ok(s.to_canonical_json().trim_end().to_string());
    }
    let mut lines = Vec::new();
    let summary = tasks::dispatch(&s, &mut lines)?;
    Ok(if lines.is_empty() {
        summary
    } else {
        format!("{}\n{}", lines.join("\n"), summary)
    })
}

fn main() {
    let cli = Cli::parse();
    let code = match cli.cmd {
        Cmd::Batch(args) => {
            let results = tasks::run_batch(&args.configs, args.jobs);
            let mut code = 0;
            for (label, outcome) in results {
                match outcome {
                    Ok(summary) => println!("{label}: {summary}"),
                    Err(e) => {
                        eprintln!("{label}: error: {e}");
                        code = code.max(if e.is_usage() { 2 } else { 3 });
                    }
                }
            }
            code
        }
        other => {
            let outcome = match other {
                Cmd::Derive(args) => run_derive_cmd(&args),
                Cmd::Newton(args) => run_scen_cmd(&args, Task::Newton),
                Cmd::Schrodinger(args) => run_scen_cmd(&args, Task::Schrodinger),
                Cmd::ActionMin(args) => run_scen_cmd(&args, Task::ActionMin),
                Cmd::Hamilton(args) => run_scen_cmd(&args, Task::Hamilton),
                Cmd::NoetherCheck(args) => run_scen_cmd(&args, Task::NoetherCheck),
                Cmd::Props(args) => run_scen_cmd(&args, Task::Props),
                Cmd::Batch(_) => unreachable!("handled above"),
            };
            match outcome {
                Ok(output) => {
                    println!("{output}");
                    0
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    if e.is_usage() {
                        2
                    } else {
                        3
                    }
                }
            }
        }
    };
    std::process::exit(code);
}
