//! Run configuration: a TOML file with exactly one mode block (`simulate`,
//! `homogenize`, or `verify`) plus an optional `output` block.
//!
//! Parsing is strict. Unknown keys are hard errors that name the full key
//! path and suggest the nearest valid key, so a typo like `clf` fails with
//! a pointer at `cfl` instead of silently running with a default. Analytic
//! field inputs (u0, v0, sigma0, heterogeneous moduli) are small expressions
//! over x, y with sin/cos/exp and polynomial arithmetic, checked at parse
//! time and evaluated onto the grid when the run is built.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CoreError;
use crate::expr::Expr;
use crate::field::Field;
use crate::force::{BodyForceModel, TimeSignal};
use crate::grid::{Boundary, Grid};
use crate::homogenize::{LaminateSpec, Phase};
use crate::lagrangian::Variant;
use crate::material::MaterialModel;
use crate::prestate::PreState;
use crate::solver::{Monitor, SolverConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub simulate: Option<SimulateSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub homogenize: Option<HomogenizeSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verify: Option<VerifySpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSpec {
    pub variant: String,
    pub grid: GridSpec,
    pub material: MaterialSpec,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prestate: Option<PreStateSpec>,
    pub solver: SolverSpec,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub source: Option<SourceSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub kind: String,
    pub n: Vec<usize>,
    pub length: Vec<f64>,
    pub boundary: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialSpec {
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c_expr: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho_expr: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c_file: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho_file: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PreStateSpec {
    /// Pre-displacement expressions, one per component.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub u0: Option<Vec<String>>,
    /// Background velocity expressions, one per component.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub v0: Option<Vec<String>>,
    /// Pre-stress expressions, row-major (dim x dim entries); exclusive
    /// with u0 since a measured stress carries no displacement kinematics.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma0: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    pub cfl: f64,
    pub n_steps: usize,
    #[serde(default = "default_record_every")]
    pub record_every: usize,
    #[serde(default = "default_corrector_sweeps")]
    pub corrector_sweeps: usize,
    #[serde(default)]
    pub monitors: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub growth_limit: Option<f64>,
}

fn default_record_every() -> usize {
    1
}

fn default_corrector_sweeps() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceSpec {
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ix: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iy: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub component: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub signal: Option<TimeSignalSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSignalSpec {
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub center_freq: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub freq: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delay: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phase: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HomogenizeSpec {
    pub laminate: LaminateBlock,
    pub omega_min: f64,
    pub omega_max: f64,
    #[serde(default = "default_n_points")]
    pub n_points: usize,
    #[serde(default = "default_n_harmonics")]
    pub n_harmonics: usize,
}

fn default_n_points() -> usize {
    50
}

fn default_n_harmonics() -> usize {
    32
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LaminateBlock {
    pub cell_length: f64,
    pub phases: Vec<PhaseBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub comparison: Option<ComparisonBlock>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseBlock {
    pub c: f64,
    pub rho: f64,
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComparisonBlock {
    pub c: f64,
    pub rho: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySpec {
    /// Suites to run; empty means all of them.
    #[serde(default)]
    pub suites: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: String,
}

/// Which mode block the file selected.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Simulate,
    Homogenize,
    Verify,
}

/// A parsed, validated configuration plus provenance.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub file: ConfigFile,
    pub mode: Mode,
    /// sha-256 of the raw config bytes, hex encoded.
    pub hash: String,
    /// directory of the config file; referenced files resolve against it
    pub base_dir: PathBuf,
}

// ---------------------------------------------------------------------------
// schema walk: unknown keys become located errors with suggestions

enum Schema {
    Table(&'static [(&'static str, Schema)]),
    Array(&'static Schema),
    Leaf,
}

static PHASE_SCHEMA: Schema = Schema::Table(&[
    ("c", Schema::Leaf),
    ("rho", Schema::Leaf),
    ("fraction", Schema::Leaf),
]);

static ROOT_SCHEMA: Schema = Schema::Table(&[
    (
        "simulate",
        Schema::Table(&[
            ("variant", Schema::Leaf),
            (
                "grid",
                Schema::Table(&[
                    ("kind", Schema::Leaf),
                    ("n", Schema::Leaf),
                    ("length", Schema::Leaf),
                    ("boundary", Schema::Leaf),
                ]),
            ),
            (
                "material",
                Schema::Table(&[
                    ("kind", Schema::Leaf),
                    ("c", Schema::Leaf),
                    ("rho", Schema::Leaf),
                    ("lambda", Schema::Leaf),
                    ("mu", Schema::Leaf),
                    ("c_expr", Schema::Leaf),
                    ("rho_expr", Schema::Leaf),
                    ("c_file", Schema::Leaf),
                    ("rho_file", Schema::Leaf),
                ]),
            ),
            (
                "prestate",
                Schema::Table(&[
                    ("u0", Schema::Leaf),
                    ("v0", Schema::Leaf),
                    ("sigma0", Schema::Leaf),
                ]),
            ),
            (
                "solver",
                Schema::Table(&[
                    ("cfl", Schema::Leaf),
                    ("n_steps", Schema::Leaf),
                    ("record_every", Schema::Leaf),
                    ("corrector_sweeps", Schema::Leaf),
                    ("monitors", Schema::Leaf),
                    ("growth_limit", Schema::Leaf),
                ]),
            ),
            (
                "source",
                Schema::Table(&[
                    ("kind", Schema::Leaf),
                    ("ix", Schema::Leaf),
                    ("iy", Schema::Leaf),
                    ("component", Schema::Leaf),
                    ("signal", SIGNAL_SCHEMA),
                ]),
            ),
        ]),
    ),
    (
        "homogenize",
        Schema::Table(&[
            (
                "laminate",
                Schema::Table(&[
                    ("cell_length", Schema::Leaf),
                    ("phases", Schema::Array(&PHASE_SCHEMA)),
                    (
                        "comparison",
                        Schema::Table(&[("c", Schema::Leaf), ("rho", Schema::Leaf)]),
                    ),
                ]),
            ),
            ("omega_min", Schema::Leaf),
            ("omega_max", Schema::Leaf),
            ("n_points", Schema::Leaf),
            ("n_harmonics", Schema::Leaf),
        ]),
    ),
    ("verify", Schema::Table(&[("suites", Schema::Leaf)])),
    ("output", Schema::Table(&[("dir", Schema::Leaf)])),
]);

// a named const so the nested table above can embed the signal layout
const SIGNAL_SCHEMA: Schema = Schema::Table(&[
    ("kind", Schema::Leaf),
    ("center_freq", Schema::Leaf),
    ("freq", Schema::Leaf),
    ("delay", Schema::Leaf),
    ("amplitude", Schema::Leaf),
    ("phase", Schema::Leaf),
]);

fn edit_distance(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for i in 1..=a.len() {
        cur[0] = i;
        for j in 1..=b.len() {
            let sub = prev[j - 1] + usize::from(a[i - 1] != b[j - 1]);
            cur[j] = sub.min(prev[j] + 1).min(cur[j - 1] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

fn check_keys(value: &toml::Value, schema: &Schema, path: &str, errs: &mut Vec<String>) {
    match (value, schema) {
        (toml::Value::Table(table), Schema::Table(allowed)) => {
            for (key, sub) in table {
                let full = if path.is_empty() {
                    key.clone()
                } else {
                    format!("{path}.{key}")
                };
                match allowed.iter().find(|(name, _)| name == key) {
                    Some((_, subschema)) => check_keys(sub, subschema, &full, errs),
                    None => {
                        let near = allowed
                            .iter()
                            .map(|(name, _)| (edit_distance(key, name), *name))
                            .min();
                        let hint = match near {
                            Some((d, name)) if d <= 2 => {
                                format!(" (did you mean `{name}`?)")
                            }
                            _ => String::new(),
                        };
                        errs.push(format!("unknown key `{full}`{hint}"));
                    }
                }
            }
        }
        (toml::Value::Array(items), Schema::Array(inner)) => {
            for (i, item) in items.iter().enumerate() {
                check_keys(item, inner, &format!("{path}[{i}]"), errs);
            }
        }
        (toml::Value::Table(_), Schema::Leaf) => {
            // a table where a scalar belongs; the typed deserializer reports
            // the mismatch with more context
        }
        _ => {}
    }
}

// ---------------------------------------------------------------------------

pub fn parse_config(path: &Path) -> Result<RunConfig, CoreError> {
    let bytes = fs::read(path)
        .map_err(|e| CoreError::Config(format!("{}: {e}", path.display())))?;
    let hash = hex_digest(&bytes);
    let text = String::from_utf8(bytes)
        .map_err(|_| CoreError::Config(format!("{}: not valid UTF-8", path.display())))?;
    let base_dir = path
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));
    let mut cfg = parse_config_str(&text, &base_dir)?;
    cfg.hash = hash;
    Ok(cfg)
}

/// Parse from a string (hash computed over the same bytes); referenced
/// files resolve against `base_dir`.
pub fn parse_config_str(text: &str, base_dir: &Path) -> Result<RunConfig, CoreError> {
    let value: toml::Value = text
        .parse()
        .map_err(|e: toml::de::Error| CoreError::Config(e.to_string()))?;

    let mut errs = Vec::new();
    check_keys(&value, &ROOT_SCHEMA, "", &mut errs);
    if !errs.is_empty() {
        return Err(CoreError::Config(errs.join("\n")));
    }

    let file: ConfigFile = value
        .try_into()
        .map_err(|e: toml::de::Error| CoreError::Config(e.to_string()))?;

    let mode = select_mode(&file)?;
    validate(&file, mode, base_dir)?;
    Ok(RunConfig {
        hash: hex_digest(text.as_bytes()),
        file,
        mode,
        base_dir: base_dir.to_path_buf(),
    })
}

fn hex_digest(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        use std::fmt::Write as _;
        write!(out, "{b:02x}").unwrap();
    }
    out
}

fn select_mode(file: &ConfigFile) -> Result<Mode, CoreError> {
    let present = [
        file.simulate.is_some().then_some(Mode::Simulate),
        file.homogenize.is_some().then_some(Mode::Homogenize),
        file.verify.is_some().then_some(Mode::Verify),
    ];
    let mut modes = present.into_iter().flatten();
    match (modes.next(), modes.next()) {
        (Some(m), None) => Ok(m),
        (None, _) => Err(CoreError::Config(
            "no mode block: add one of [simulate], [homogenize], [verify]".into(),
        )),
        (Some(_), Some(_)) => Err(CoreError::Config(
            "more than one mode block present; a config selects exactly one of \
             [simulate], [homogenize], [verify]"
                .into(),
        )),
    }
}

fn parse_exprs(key: &str, sources: &[String], want: usize) -> Result<Vec<Expr>, CoreError> {
    if sources.len() != want {
        return Err(CoreError::Config(format!(
            "{key}: expected {want} expressions, found {}",
            sources.len()
        )));
    }
    sources
        .iter()
        .map(|s| {
            Expr::parse(s).map_err(|e| CoreError::Config(format!("{key}: `{s}`: {e}")))
        })
        .collect()
}

fn validate(file: &ConfigFile, mode: Mode, base_dir: &Path) -> Result<(), CoreError> {
    match mode {
        Mode::Simulate => {
            let sim = file.simulate.as_ref().unwrap();
            parse_variant(&sim.variant)?;
            let grid = build_grid(&sim.grid)?;
            let dim = grid.dim;
            check_material_spec(&sim.material, dim, base_dir)?;
            if let Some(pre) = &sim.prestate {
                if pre.u0.is_some() && pre.sigma0.is_some() {
                    return Err(CoreError::Config(
                        "simulate.prestate: u0 and sigma0 are exclusive (a measured \
                         pre-stress carries no displacement kinematics)"
                            .into(),
                    ));
                }
                if let Some(u0) = &pre.u0 {
                    parse_exprs("simulate.prestate.u0", u0, dim)?;
                }
                if let Some(v0) = &pre.v0 {
                    parse_exprs("simulate.prestate.v0", v0, dim)?;
                }
                if let Some(s0) = &pre.sigma0 {
                    parse_exprs("simulate.prestate.sigma0", s0, dim * dim)?;
                }
            }
            for m in &sim.solver.monitors {
                parse_monitor(m)?;
            }
            if let Some(src) = &sim.source {
                check_source_spec(src, &grid)?;
            }
            // range checks beyond this point live in Solver::new
            if !(sim.solver.cfl > 0.0 && sim.solver.cfl < 1.0) {
                return Err(CoreError::Config(
                    "simulate.solver.cfl must lie in (0, 1)".into(),
                ));
            }
            Ok(())
        }
        Mode::Homogenize => {
            let h = file.homogenize.as_ref().unwrap();
            build_laminate(&h.laminate).and_then(|l| l.validate())?;
            if !(h.omega_min > 0.0 && h.omega_max > h.omega_min) {
                return Err(CoreError::Config(
                    "homogenize: need 0 < omega_min < omega_max".into(),
                ));
            }
            if h.n_points < 2 {
                return Err(CoreError::Config("homogenize.n_points must be >= 2".into()));
            }
            if h.n_harmonics < 8 {
                return Err(CoreError::Config(
                    "homogenize.n_harmonics must be >= 8".into(),
                ));
            }
            Ok(())
        }
        Mode::Verify => {
            let v = file.verify.as_ref().unwrap();
            for s in &v.suites {
                parse_suite(s)?;
            }
            Ok(())
        }
    }
}

pub fn parse_variant(name: &str) -> Result<Variant, CoreError> {
    for v in [
        Variant::Classical,
        Variant::TemporalRaw,
        Variant::TemporalSym,
        Variant::Wfe,
    ] {
        if v.name() == name {
            return Ok(v);
        }
    }
    Err(CoreError::Config(format!(
        "unknown variant `{name}`; expected classical, willis-temporal-raw, \
         willis-temporal, or wfe"
    )))
}

pub fn parse_monitor(name: &str) -> Result<Monitor, CoreError> {
    for m in [
        Monitor::Energy,
        Monitor::ConservationTemporal,
        Monitor::ConservationSpatial,
    ] {
        if m.name() == name {
            return Ok(m);
        }
    }
    Err(CoreError::Config(format!(
        "unknown monitor `{name}`; expected energy, conservation-temporal, or \
         conservation-spatial"
    )))
}

fn parse_suite(name: &str) -> Result<(), CoreError> {
    if crate::verify::SUITE_NAMES.contains(&name) {
        return Ok(());
    }
    Err(CoreError::Config(format!(
        "unknown verify suite `{name}`; expected one of {}",
        crate::verify::SUITE_NAMES.join(", ")
    )))
}

pub fn build_grid(spec: &GridSpec) -> Result<Grid, CoreError> {
    let bc = match spec.boundary.as_str() {
        "periodic" => Boundary::Periodic,
        "fixed" => Boundary::FixedDisplacement,
        "traction-free" => Boundary::TractionFree,
        other => {
            return Err(CoreError::Config(format!(
                "grid.boundary: unknown value `{other}`; expected periodic, fixed, \
                 or traction-free"
            )))
        }
    };
    match spec.kind.as_str() {
        "line" => {
            if spec.n.len() != 1 || spec.length.len() != 1 {
                return Err(CoreError::Config(
                    "grid: a line takes one entry each in n and length".into(),
                ));
            }
            Grid::line(spec.n[0], spec.length[0] / spec.n[0] as f64, bc)
        }
        "rect" => {
            if spec.n.len() != 2 || spec.length.len() != 2 {
                return Err(CoreError::Config(
                    "grid: a rect takes two entries each in n and length".into(),
                ));
            }
            Grid::rect(
                [spec.n[0], spec.n[1]],
                [
                    spec.length[0] / spec.n[0] as f64,
                    spec.length[1] / spec.n[1] as f64,
                ],
                bc,
            )
        }
        other => Err(CoreError::Config(format!(
            "grid.kind: unknown value `{other}`; expected line or rect"
        ))),
    }
}

fn check_material_spec(spec: &MaterialSpec, dim: usize, base_dir: &Path) -> Result<(), CoreError> {
    let need = |opt: &Option<f64>, key: &str| {
        opt.ok_or_else(|| CoreError::Config(format!("material.{key} is required for this kind")))
    };
    match spec.kind.as_str() {
        "uniform-scalar" => {
            if dim != 1 {
                return Err(CoreError::Config(
                    "material: uniform-scalar applies to 1D grids".into(),
                ));
            }
            need(&spec.c, "c")?;
            need(&spec.rho, "rho")?;
            Ok(())
        }
        "uniform-isotropic" => {
            if dim != 2 {
                return Err(CoreError::Config(
                    "material: uniform-isotropic applies to 2D grids".into(),
                ));
            }
            need(&spec.lambda, "lambda")?;
            need(&spec.mu, "mu")?;
            need(&spec.rho, "rho")?;
            Ok(())
        }
        "scalar-expr" => {
            if dim != 1 {
                return Err(CoreError::Config(
                    "material: scalar-expr applies to 1D grids".into(),
                ));
            }
            for (key, src) in [("c_expr", &spec.c_expr), ("rho_expr", &spec.rho_expr)] {
                let src = src.as_ref().ok_or_else(|| {
                    CoreError::Config(format!("material.{key} is required for this kind"))
                })?;
                Expr::parse(src)
                    .map_err(|e| CoreError::Config(format!("material.{key}: `{src}`: {e}")))?;
            }
            Ok(())
        }
        "scalar-file" => {
            if dim != 1 {
                return Err(CoreError::Config(
                    "material: scalar-file applies to 1D grids".into(),
                ));
            }
            for (key, file) in [("c_file", &spec.c_file), ("rho_file", &spec.rho_file)] {
                let file = file.as_ref().ok_or_else(|| {
                    CoreError::Config(format!("material.{key} is required for this kind"))
                })?;
                let path = base_dir.join(file);
                if !path.is_file() {
                    return Err(CoreError::Config(format!(
                        "material.{key}: `{}` does not exist",
                        path.display()
                    )));
                }
            }
            Ok(())
        }
        other => Err(CoreError::Config(format!(
            "material.kind: unknown value `{other}`; expected uniform-scalar, \
             uniform-isotropic, scalar-expr, or scalar-file"
        ))),
    }
}

fn check_source_spec(spec: &SourceSpec, grid: &Grid) -> Result<(), CoreError> {
    match spec.kind.as_str() {
        "none" => Ok(()),
        "point" => {
            let ix = spec
                .ix
                .ok_or_else(|| CoreError::Config("source.ix is required".into()))?;
            let iy = spec.iy.unwrap_or(0);
            let comp = spec
                .component
                .ok_or_else(|| CoreError::Config("source.component is required".into()))?;
            if ix >= grid.n[0] || (grid.dim == 2 && iy >= grid.n[1]) || comp >= grid.dim {
                return Err(CoreError::Config("source: point outside the grid".into()));
            }
            let sig = spec
                .signal
                .as_ref()
                .ok_or_else(|| CoreError::Config("source.signal is required".into()))?;
            build_signal(sig).map(|_| ())
        }
        other => Err(CoreError::Config(format!(
            "source.kind: unknown value `{other}`; expected point or none"
        ))),
    }
}

fn build_signal(spec: &TimeSignalSpec) -> Result<TimeSignal, CoreError> {
    let need = |opt: Option<f64>, key: &str| {
        opt.ok_or_else(|| CoreError::Config(format!("source.signal.{key} is required")))
    };
    match spec.kind.as_str() {
        "ricker" => Ok(TimeSignal::Ricker {
            center_freq: need(spec.center_freq, "center_freq")?,
            delay: need(spec.delay, "delay")?,
            amplitude: need(spec.amplitude, "amplitude")?,
        }),
        "sine" => Ok(TimeSignal::Sine {
            freq: need(spec.freq, "freq")?,
            amplitude: need(spec.amplitude, "amplitude")?,
            phase: spec.phase.unwrap_or(0.0),
        }),
        other => Err(CoreError::Config(format!(
            "source.signal.kind: unknown value `{other}`; expected ricker or sine"
        ))),
    }
}

pub fn build_laminate(block: &LaminateBlock) -> Result<LaminateSpec, CoreError> {
    Ok(LaminateSpec {
        cell_length: block.cell_length,
        phases: block
            .phases
            .iter()
            .map(|p| Phase {
                c: p.c,
                rho: p.rho,
                fraction: p.fraction,
            })
            .collect(),
        comparison: block.comparison.as_ref().map(|c| (c.c, c.rho)),
    })
}

/// Everything a simulate run needs, built from the validated spec.
pub struct SimRun {
    pub variant: Variant,
    pub grid: Grid,
    pub material: MaterialModel,
    pub pre: PreState,
    pub force: BodyForceModel,
    pub solver: SolverConfig,
}

pub fn build_simulation(cfg: &RunConfig) -> Result<SimRun, CoreError> {
    let sim = cfg
        .file
        .simulate
        .as_ref()
        .ok_or_else(|| CoreError::Config("config has no [simulate] block".into()))?;
    let variant = parse_variant(&sim.variant)?;
    let grid = build_grid(&sim.grid)?;
    let dim = grid.dim;
    let material = build_material(&sim.material, &grid, &cfg.base_dir)?;

    let eval_vector = |sources: &[String], key: &str| -> Result<Field, CoreError> {
        let exprs = parse_exprs(key, sources, dim)?;
        Ok(Field::from_fn_vector(&grid, |x, i| exprs[i].eval(x[0], x[1])))
    };

    let pre = match &sim.prestate {
        None => PreState::quiescent(&grid),
        Some(spec) => {
            let v0 = spec
                .v0
                .as_ref()
                .map(|v| eval_vector(v, "simulate.prestate.v0"))
                .transpose()?;
            if let Some(u0src) = &spec.u0 {
                let u0 = eval_vector(u0src, "simulate.prestate.u0")?;
                PreState::from_u0(&grid, &material, u0, v0)?
            } else if let Some(s0src) = &spec.sigma0 {
                let exprs = parse_exprs("simulate.prestate.sigma0", s0src, dim * dim)?;
                let mut s0 = Field::zeros(&grid, 2);
                for node in 0..s0.nnodes {
                    let xy = grid.coords(node);
                    for i in 0..dim {
                        for j in 0..dim {
                            s0.set_m(node, i, j, exprs[i * dim + j].eval(xy[0], xy[1]));
                        }
                    }
                }
                PreState::from_sigma0(&grid, s0, v0)?
            } else {
                let mut st = PreState::quiescent(&grid);
                if let Some(v) = v0 {
                    st.v0 = v;
                }
                st
            }
        }
    };

    let force = match &sim.source {
        None => BodyForceModel::none(),
        Some(spec) if spec.kind == "none" => BodyForceModel::none(),
        Some(spec) => {
            let signal = build_signal(spec.signal.as_ref().unwrap())?;
            BodyForceModel::point(
                &grid,
                spec.ix.unwrap(),
                spec.iy.unwrap_or(0),
                spec.component.unwrap(),
                signal,
            )?
        }
    };

    let monitors = sim
        .solver
        .monitors
        .iter()
        .map(|m| parse_monitor(m))
        .collect::<Result<Vec<_>, _>>()?;
    let mut solver = SolverConfig {
        cfl: sim.solver.cfl,
        n_steps: sim.solver.n_steps,
        record_every: sim.solver.record_every,
        corrector_sweeps: sim.solver.corrector_sweeps,
        monitors,
        ..SolverConfig::default()
    };
    if let Some(g) = sim.solver.growth_limit {
        solver.growth_limit = g;
    }

    Ok(SimRun {
        variant,
        grid,
        material,
        pre,
        force,
        solver,
    })
}

fn build_material(
    spec: &MaterialSpec,
    grid: &Grid,
    base_dir: &Path,
) -> Result<MaterialModel, CoreError> {
    match spec.kind.as_str() {
        "uniform-scalar" => {
            MaterialModel::uniform_scalar_1d(grid, spec.c.unwrap(), spec.rho.unwrap())
        }
        "uniform-isotropic" => Ok(MaterialModel::uniform_isotropic(
            grid,
            spec.lambda.unwrap(),
            spec.mu.unwrap(),
            spec.rho.unwrap(),
        )),
        "scalar-expr" => {
            let cexpr = Expr::parse(spec.c_expr.as_ref().unwrap())?;
            let rexpr = Expr::parse(spec.rho_expr.as_ref().unwrap())?;
            let c = Field::from_fn_scalar(grid, |x| cexpr.eval(x[0], x[1]));
            let rho = Field::from_fn_scalar(grid, |x| rexpr.eval(x[0], x[1]));
            MaterialModel::scalar_1d(grid, &c, &rho)
        }
        "scalar-file" => {
            let c = crate::csvio::read_field_csv(
                &base_dir.join(spec.c_file.as_ref().unwrap()),
                grid,
                0,
            )?;
            let rho = crate::csvio::read_field_csv(
                &base_dir.join(spec.rho_file.as_ref().unwrap()),
                grid,
                0,
            )?;
            MaterialModel::scalar_1d(grid, &c, &rho)
        }
        _ => unreachable!("kind checked during validation"),
    }
}

/// Canonical TOML of a parsed file: fixed key order, defaults filled where
/// the schema declares them. Parsing the emission reproduces the structure.
pub fn canonical_toml(file: &ConfigFile) -> Result<String, CoreError> {
    toml::to_string_pretty(file).map_err(|e| CoreError::Config(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
        [simulate]
        variant = "classical"

        [simulate.grid]
        kind = "line"
        n = [64]
        length = [6.283185307179586]
        boundary = "periodic"

        [simulate.material]
        kind = "uniform-scalar"
        c = 1.0
        rho = 1.0

        [simulate.solver]
        cfl = 0.5
        n_steps = 10
    "#;

    #[test]
    fn minimal_config_parses_with_defaults() {
        let cfg = parse_config_str(MINIMAL, Path::new(".")).unwrap();
        assert_eq!(cfg.mode, Mode::Simulate);
        let sim = cfg.file.simulate.as_ref().unwrap();
        assert_eq!(sim.solver.record_every, 1);
        assert_eq!(sim.solver.corrector_sweeps, 1);
        let run = build_simulation(&cfg).unwrap();
        assert_eq!(run.grid.n[0], 64);
        assert_eq!(run.variant, Variant::Classical);
        assert_eq!(cfg.hash.len(), 64);
    }

    #[test]
    fn misspelled_cfl_names_the_key_and_suggests() {
        let bad = MINIMAL.replace("cfl = 0.5", "clf = 0.5");
        let err = parse_config_str(&bad, Path::new(".")).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("simulate.solver.clf"), "{msg}");
        assert!(msg.contains("did you mean `cfl`?"), "{msg}");
    }

    #[test]
    fn canonical_emission_reparses_identically() {
        let with_extras = format!(
            "{MINIMAL}\n[simulate.prestate]\nv0 = [\"0.05 * sin(x)\"]\n\n[output]\ndir = \"out\"\n"
        );
        let cfg = parse_config_str(&with_extras, Path::new(".")).unwrap();
        let canon = canonical_toml(&cfg.file).unwrap();
        let again = parse_config_str(&canon, Path::new(".")).unwrap();
        assert_eq!(cfg.file, again.file);
    }

    #[test]
    fn zero_or_two_mode_blocks_are_rejected() {
        let none = "[output]\ndir = \"x\"\n";
        assert!(parse_config_str(none, Path::new(".")).is_err());

        let two = format!(
            "{MINIMAL}\n[verify]\nsuites = [\"limits\"]\n"
        );
        let err = parse_config_str(&two, Path::new(".")).unwrap_err();
        assert!(err.to_string().contains("exactly one"), "{err}");
    }

    #[test]
    fn bad_expression_is_a_config_error_with_the_key_path() {
        let bad = format!(
            "{MINIMAL}\n[simulate.prestate]\nu0 = [\"sin(\"]\n"
        );
        let err = parse_config_str(&bad, Path::new(".")).unwrap_err();
        assert!(err.to_string().contains("simulate.prestate.u0"), "{err}");
    }

    #[test]
    fn homogenize_mode_roundtrip() {
        let text = r#"
            [homogenize]
            omega_min = 0.01
            omega_max = 0.4
            n_points = 10

            [homogenize.laminate]
            cell_length = 6.283185307179586
            phases = [
                { c = 1.0, rho = 1.0, fraction = 0.5 },
                { c = 3.0, rho = 1.0, fraction = 0.5 },
            ]
        "#;
        let cfg = parse_config_str(text, Path::new(".")).unwrap();
        assert_eq!(cfg.mode, Mode::Homogenize);
        let h = cfg.file.homogenize.as_ref().unwrap();
        assert_eq!(h.n_harmonics, 32);
        let lam = build_laminate(&h.laminate).unwrap();
        lam.validate().unwrap();
    }

    #[test]
    fn missing_referenced_file_is_caught_at_parse_time() {
        let text = MINIMAL
            .replace("kind = \"uniform-scalar\"", "kind = \"scalar-file\"")
            .replace("c = 1.0", "c_file = \"no-such-file.csv\"")
            .replace("rho = 1.0", "rho_file = \"also-missing.csv\"");
        let err = parse_config_str(&text, Path::new("/nonexistent-base")).unwrap_err();
        assert!(err.to_string().contains("does not exist"), "{err}");
    }
}
