//! Scenario documents: strict JSON parsing, default filling and canonical
//! re-serialization. Parsing is strict — any key outside the schema is
//! collected and reported, all offenders at once.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use metriclag::{
    DeformKind, DeformationParams, Error, FieldVariant, PhysicalParams, Potential, Result,
    VariationalOption,
};
use serde::{Deserialize, Serialize};

/// What a scenario asks the runner to do.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Derive,
    Newton,
    Schrodinger,
    ActionMin,
    Hamilton,
    NoetherCheck,
    Props,
}

impl Task {
    pub fn token(self) -> &'static str {
        match self {
            Task::Derive => "derive",
            Task::Newton => "newton",
            Task::Schrodinger => "schrodinger",
            Task::ActionMin => "action_min",
            Task::Hamilton => "hamilton",
            Task::NoetherCheck => "noether_check",
            Task::Props => "props",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub n_nodes: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeSpec {
    pub t0_seconds: f64,
    pub t1_seconds: f64,
    pub n_steps: usize,
}

/// Mechanics initial/boundary data. `x1` is only consulted by the direct
/// minimization task; when absent the endpoint comes from the ODE solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateSpec {
    pub x0: f64,
    pub v0: f64,
    pub x1: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PacketSpec {
    pub center: f64,
    pub width: f64,
    pub momentum: f64,
}

/// A fully normalized scenario: every field concrete, deformation rebuilt
/// through its checked constructor. Serializing and re-parsing one of these
/// is a fixed point.
#[derive(Debug, Clone, Serialize)]
pub struct Scenario {
    pub name: String,
    pub task: Task,
    pub deformation: DeformationParams,
    pub physics: PhysicalParams,
    pub potential: String,
    pub option: VariationalOption,
    pub variant: FieldVariant,
    pub grid: GridSpec,
    pub time: TimeSpec,
    pub state: StateSpec,
    pub packet: PacketSpec,
    pub seed: u64,
    pub cases: usize,
    pub out_dir: String,
    pub svg: bool,
}

pub const DEFAULT_GRID: GridSpec = GridSpec { x_min: 0.0, x_max: 6.0, n_nodes: 129 };
pub const DEFAULT_TIME: TimeSpec = TimeSpec { t0_seconds: 0.0, t1_seconds: 1.0, n_steps: 200 };
pub const DEFAULT_STATE: StateSpec = StateSpec { x0: 0.0, v0: 1.0, x1: None };
pub const DEFAULT_PACKET: PacketSpec = PacketSpec { center: 3.0, width: 0.5, momentum: 2.0 };

#[derive(Debug, Clone, Default, Deserialize)]
pub struct RawDeformation {
    pub kind: Option<DeformKind>,
    pub alpha: Option<f64>,
    pub zeta: Option<f64>,
    pub l0: Option<f64>,
    pub q: Option<f64>,
    pub lambda: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct RawScenario {
    pub name: Option<String>,
    pub task: Task,
    pub deformation: Option<RawDeformation>,
    pub physics: Option<PhysicalParams>,
    pub potential: Option<String>,
    pub option: Option<VariationalOption>,
    pub variant: Option<FieldVariant>,
    pub grid: Option<GridSpec>,
    pub time: Option<TimeSpec>,
    pub state: Option<StateSpec>,
    pub packet: Option<PacketSpec>,
    pub seed: Option<u64>,
    pub cases: Option<usize>,
    pub out_dir: Option<String>,
    pub svg: Option<bool>,
}

const TOP_KEYS: &[&str] = &[
    "name", "task", "deformation", "physics", "potential", "option", "variant", "grid", "time",
    "state", "packet", "seed", "cases", "out_dir", "svg",
];
const DEFORMATION_KEYS: &[&str] = &["kind", "alpha", "zeta", "l0", "q", "lambda"];
const PHYSICS_KEYS: &[&str] = &["hbar", "m", "k"];
const GRID_KEYS: &[&str] = &["x_min", "x_max", "n_nodes"];
const TIME_KEYS: &[&str] = &["t0_seconds", "t1_seconds", "n_steps"];
const STATE_KEYS: &[&str] = &["x0", "v0", "x1"];
const PACKET_KEYS: &[&str] = &["center", "width", "momentum"];

fn collect_unknown(
    value: &serde_json::Value,
    allowed: &[&str],
    prefix: &str,
    offenders: &mut Vec<String>,
) {
    if let serde_json::Value::Object(map) = value {
        let allowed: BTreeSet<&str> = allowed.iter().copied().collect();
        for key in map.keys() {
            if !allowed.contains(key.as_str()) {
                if prefix.is_empty() {
                    offenders.push(format!("unknown key `{key}`"));
                } else {
                    offenders.push(format!("unknown key `{prefix}.{key}`"));
                }
            }
        }
    }
}

/// Reject every key the schema does not know, reporting all of them at once.
fn check_schema(doc: &serde_json::Value) -> Result<()> {
    let obj = match doc {
        serde_json::Value::Object(_) => doc,
        other => {
            return Err(Error::Schema(vec![format!(
                "scenario document must be a JSON object, found {other}"
            )]))
        }
    };
    let mut offenders = Vec::new();
    collect_unknown(obj, TOP_KEYS, "", &mut offenders);
    let sections: &[(&str, &[&str])] = &[
        ("deformation", DEFORMATION_KEYS),
        ("physics", PHYSICS_KEYS),
        ("grid", GRID_KEYS),
        ("time", TIME_KEYS),
        ("state", STATE_KEYS),
        ("packet", PACKET_KEYS),
    ];
    for (section, keys) in sections {
        if let Some(sub) = obj.get(*section) {
            collect_unknown(sub, keys, section, &mut offenders);
        }
    }
    if offenders.is_empty() {
        Ok(())
    } else {
        Err(Error::Schema(offenders))
    }
}

/// Canonicalize the deformation block through the checked constructors, so
/// irrelevant fields land on their identity values and bad parameters are
/// rejected with the library's own messages.
pub fn build_deformation(raw: &RawDeformation) -> Result<DeformationParams> {
    let kind = raw.kind.unwrap_or(DeformKind::Classical);
    match kind {
        DeformKind::Classical => Ok(DeformationParams::classical()),
        DeformKind::Conformable => DeformationParams::conformable(raw.alpha.unwrap_or(1.0)),
        DeformKind::Hausdorff => {
            DeformationParams::hausdorff(raw.zeta.unwrap_or(1.0), raw.l0.unwrap_or(1.0))
        }
        DeformKind::Katugampola => DeformationParams::katugampola(raw.alpha.unwrap_or(0.5)),
        DeformKind::QDeriv => {
            DeformationParams::q_deriv_with_cutoff(raw.q.unwrap_or(1.0), raw.l0.unwrap_or(1.0))
        }
        DeformKind::ScaleQ => {
            DeformationParams::scale_q(raw.q.unwrap_or(1.0), raw.lambda.unwrap_or(1.0))
        }
    }
}

fn check_name(name: &str) -> Result<()> {
    if name.is_empty() {
        return Err(Error::Parameter("scenario name must not be empty".into()));
    }
    if name.contains('/') || name.contains('\\') || name == "." || name == ".." {
        return Err(Error::Parameter(format!(
            "scenario name `{name}` must be a single path component"
        )));
    }
    Ok(())
}

impl Scenario {
    /// Parse scenario JSON text: strict schema, then defaults, then the
    /// numeric validity checks.
    pub fn from_json(text: &str) -> Result<Scenario> {
        let doc: serde_json::Value = serde_json::from_str(text)
            .map_err(|e| Error::Syntax { offset: 0, message: format!("scenario JSON: {e}") })?;
        check_schema(&doc)?;
        let raw: RawScenario = serde_json::from_value(doc)
            .map_err(|e| Error::Parameter(format!("scenario field: {e}")))?;
        Scenario::normalize(raw)
    }

    pub fn from_file(path: &Path) -> Result<Scenario> {
        let text = fs::read_to_string(path).map_err(|e| {
            Error::Parameter(format!("cannot read scenario `{}`: {e}", path.display()))
        })?;
        Scenario::from_json(&text)
    }

    pub fn normalize(raw: RawScenario) -> Result<Scenario> {
        let deformation = build_deformation(&raw.deformation.unwrap_or_default())?;
        let physics = match raw.physics {
            Some(p) => PhysicalParams::new(p.hbar, p.m, p.k)?,
            None => PhysicalParams::unit(),
        };
        let potential = raw.potential.unwrap_or_else(|| "0".to_string());
        Potential::parse(&potential)?;
        let grid = raw.grid.unwrap_or(DEFAULT_GRID);
        let time = raw.time.unwrap_or(DEFAULT_TIME);
        let state = raw.state.unwrap_or(DEFAULT_STATE);
        let packet = raw.packet.unwrap_or(DEFAULT_PACKET);
        let s = Scenario {
            name: raw.name.unwrap_or_else(|| raw.task.token().to_string()),
            task: raw.task,
            deformation,
            physics,
            potential,
            option: raw.option.unwrap_or(VariationalOption::Opt1),
            variant: raw.variant.unwrap_or(FieldVariant::TimeDeformed),
            grid,
            time,
            state,
            packet,
            seed: raw.seed.unwrap_or(7),
            cases: raw.cases.unwrap_or(500),
            out_dir: raw.out_dir.unwrap_or_else(|| "runs".to_string()),
            svg: raw.svg.unwrap_or(false),
        };
        s.validate()?;
        Ok(s)
    }

    fn validate(&self) -> Result<()> {
        check_name(&self.name)?;
        if !(self.grid.x_max > self.grid.x_min) {
            return Err(Error::Parameter(format!(
                "grid.x_max ({}) must exceed grid.x_min ({})",
                self.grid.x_max, self.grid.x_min
            )));
        }
        if self.grid.n_nodes < 3 {
            return Err(Error::Parameter(format!(
                "grid.n_nodes must be at least 3, got {}",
                self.grid.n_nodes
            )));
        }
        if !(self.time.t1_seconds > self.time.t0_seconds) {
            return Err(Error::Parameter(format!(
                "time.t1_seconds ({}) must exceed time.t0_seconds ({})",
                self.time.t1_seconds, self.time.t0_seconds
            )));
        }
        if self.time.n_steps == 0 {
            return Err(Error::Parameter("time.n_steps must be positive".into()));
        }
        if !(self.packet.width > 0.0) {
            return Err(Error::Parameter(format!(
                "packet.width must be positive, got {}",
                self.packet.width
            )));
        }
        if self.cases == 0 {
            return Err(Error::Parameter("cases must be positive".into()));
        }
        Ok(())
    }

    /// Canonical JSON: all keys present, struct order, trailing newline.
    pub fn to_canonical_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("scenario serializes");
        text.push('\n');
        text
    }
}
