//! Run configuration: a strict JSON schema, validated before anything runs.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use confpos::KernelParams;

pub const MIN_POINTS: usize = 8;
pub const MAX_POINTS: usize = 4096;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message} at line {line}, column {column}")]
    Parse { path: String, message: String, line: usize, column: usize },
    #[error("invalid {field}: {message}")]
    Invalid { field: &'static str, message: String },
}

fn invalid(field: &'static str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { field, message: message.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Energy,
    Transform,
    Positivity,
    Represent,
    Symmetrize,
    Hemiball,
    LizhuCheck,
    Counterexample,
    SharpConstant,
}

impl Command {
    pub fn as_str(&self) -> &'static str {
        match self {
            Command::Energy => "energy",
            Command::Transform => "transform",
            Command::Positivity => "positivity",
            Command::Represent => "represent",
            Command::Symmetrize => "symmetrize",
            Command::Hemiball => "hemiball",
            Command::LizhuCheck => "lizhu-check",
            Command::Counterexample => "counterexample",
            Command::SharpConstant => "sharp-constant",
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSpec {
    pub dim: usize,
    pub lambda: f64,
}

/// A scalar applies to every axis.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum PerAxis<T> {
    All(T),
    Each(Vec<T>),
}

impl<T: Copy> PerAxis<T> {
    fn expand(&self, dim: usize, field: &'static str) -> Result<Vec<T>, ConfigError> {
        match self {
            PerAxis::All(v) => Ok(vec![*v; dim]),
            PerAxis::Each(v) if v.len() == dim => Ok(v.clone()),
            PerAxis::Each(v) => Err(invalid(field, format!("expected {dim} entries, got {}", v.len()))),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub min: PerAxis<f64>,
    pub max: PerAxis<f64>,
    pub points: PerAxis<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FunctionSpec {
    /// the optimizer `α (β + |x - y|^2)^(-(2N - λ)/2)`, with its tail
    Extremizer {
        #[serde(default = "one")]
        alpha: f64,
        #[serde(default = "one")]
        beta: f64,
        center: Option<Vec<f64>>,
    },
    /// `α (β + |x - y|^2)^(-exponent)`, with its tail when integrable
    Algebraic {
        #[serde(default = "one")]
        alpha: f64,
        #[serde(default = "one")]
        beta: f64,
        center: Option<Vec<f64>>,
        exponent: f64,
    },
    /// indicator of a ball (an interval in one dimension)
    Indicator { center: Option<Vec<f64>>, radius: f64 },
    /// sum of `weight · exp(-|x - c|^2 / width^2)`
    Gaussians { bumps: Vec<Bump> },
    /// Field CSV, relative to the config file
    File { path: PathBuf },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bump {
    pub center: Vec<f64>,
    pub width: f64,
    #[serde(default = "one")]
    pub weight: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum RegionSpec {
    Ball { center: Vec<f64>, radius: f64 },
    Halfspace { normal: Vec<f64>, offset: f64 },
    /// only for `transform`
    Cayley,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Ray {
    pub direction: Vec<f64>,
    pub u: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// relative error against an expected value
    pub relative: f64,
    /// multiple of the error estimate a positivity defect may fall below zero
    pub defect_factor: f64,
    /// multiple of the error estimate a strict defect must exceed
    pub strict_factor: f64,
    /// relative distance below which a field counts as invariant
    pub asymmetry: f64,
    pub fit_error: f64,
    pub mass_cv: f64,
    pub pointwise: f64,
    pub radius: f64,
    pub mass_balance: f64,
    /// multiple of the error estimate separating a witness from zero
    pub witness_factor: f64,
    /// `I[f, f]` must exceed this multiple of the overlap estimate
    pub overlap_factor: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            relative: 1e-2,
            defect_factor: 3.0,
            strict_factor: 10.0,
            asymmetry: 0.1,
            fit_error: 5e-2,
            mass_cv: 1e-3,
            pointwise: 1e-3,
            radius: 1e-4,
            mass_balance: 1e-5,
            witness_factor: 3.0,
            overlap_factor: 100.0,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSpec {
    pub max_sweeps: Option<usize>,
    pub tol_stop: Option<f64>,
    pub ball_offsets: Option<Vec<f64>>,
    pub min_gain: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchSpec {
    pub heights: Option<Vec<f64>>,
    pub widths: Option<Vec<f64>>,
    pub resolution: Option<usize>,
    pub max_cells: Option<usize>,
    pub candidates: Option<usize>,
    /// cells across the support of the zero-overlap field (`λ = 1`)
    pub cells: Option<usize>,
}

/// The document as written.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    command: Command,
    kernel: KernelSpec,
    grid: Option<GridSpec>,
    function: Option<FunctionSpec>,
    region: Option<RegionSpec>,
    #[serde(default)]
    tolerances: Tolerances,
    seed: Option<u64>,
    centers: Option<Vec<Vec<f64>>>,
    rays: Option<Vec<Ray>>,
    expected: Option<Vec<f64>>,
    power: Option<f64>,
    measure: Option<PathBuf>,
    schedule: Option<ScheduleSpec>,
    search: Option<SearchSpec>,
    #[serde(default)]
    write_fields: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridBounds {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
    pub points: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    pub kernel: KernelParams,
    pub grid: GridBounds,
    pub function: FunctionSpec,
    pub region: Option<RegionSpec>,
    pub tolerances: Tolerances,
    pub seed: Option<u64>,
    pub centers: Option<Vec<Vec<f64>>>,
    pub rays: Vec<Ray>,
    pub expected: Option<Vec<f64>>,
    pub power: Option<f64>,
    pub measure: Option<PathBuf>,
    pub schedule: ScheduleSpec,
    pub search: SearchSpec,
    pub write_fields: bool,
}

/// `[-L, L]^N` with `n` cells per axis.
pub fn default_grid(dim: usize) -> GridBounds {
    let (l, n) = match dim {
        1 => (40.0, 2048),
        2 => (8.0, 128),
        _ => (6.0, 64),
    };
    GridBounds { min: vec![-l; dim], max: vec![l; dim], points: vec![n; dim] }
}

pub fn read_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.into(), source })?;
    let mut cfg = parse_config(&text)?;
    let base = path.parent().unwrap_or(Path::new("."));
    if let FunctionSpec::File { path } = &mut cfg.function {
        *path = base.join(&*path);
    }
    if let Some(m) = &mut cfg.measure {
        *m = base.join(&*m);
    }
    Ok(cfg)
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let raw: RawConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        ConfigError::Parse { path, message: strip_position(&inner), line: inner.line(), column: inner.column() }
    })?;
    validate(raw)
}

fn strip_position(e: &serde_json::Error) -> String {
    let s = e.to_string();
    match s.rfind(" at line ") {
        Some(i) => s[..i].to_string(),
        None => s,
    }
}

fn check_len(v: &[f64], dim: usize, field: &'static str) -> Result<(), ConfigError> {
    if v.len() != dim {
        return Err(invalid(field, format!("expected {dim} coordinates, got {}", v.len())));
    }
    if v.iter().any(|c| !c.is_finite()) {
        return Err(invalid(field, "coordinates must be finite"));
    }
    Ok(())
}

fn validate(raw: RawConfig) -> Result<RunConfig, ConfigError> {
    let dim = raw.kernel.dim;
    if !(1..=3).contains(&dim) {
        return Err(invalid("kernel.dim", format!("dimension must be 1, 2 or 3, got {dim}")));
    }
    let lambda = raw.kernel.lambda;
    if !(lambda > 0.0 && lambda < dim as f64) {
        return Err(invalid("kernel.lambda", format!("lambda must lie in (0, N); got {lambda} with N = {dim}")));
    }
    let kernel = KernelParams::new(dim, lambda).map_err(|e| invalid("kernel", e.to_string()))?;
    let grid = match &raw.grid {
        None => default_grid(dim),
        Some(g) => {
            let min = g.min.expand(dim, "grid.min")?;
            let max = g.max.expand(dim, "grid.max")?;
            let points = g.points.expand(dim, "grid.points")?;
            if let Some(n) = points.iter().find(|n| !(MIN_POINTS..=MAX_POINTS).contains(n)) {
                return Err(invalid("grid.points", format!("{n} lies outside [{MIN_POINTS}, {MAX_POINTS}]")));
            }
            if min.iter().zip(&max).any(|(a, b)| !(a.is_finite() && b.is_finite() && a < b)) {
                return Err(invalid("grid", "every axis needs finite min < max"));
            }
            GridBounds { min, max, points }
        }
    };
    let function = raw.function.unwrap_or(FunctionSpec::Extremizer { alpha: 1.0, beta: 1.0, center: None });
    match &function {
        FunctionSpec::Extremizer { alpha, beta, center } | FunctionSpec::Algebraic { alpha, beta, center, .. } => {
            if !(*alpha > 0.0 && *beta > 0.0) {
                return Err(invalid("function", "alpha and beta must be positive"));
            }
            if let Some(c) = center {
                check_len(c, dim, "function.center")?;
            }
            if let FunctionSpec::Algebraic { exponent, .. } = &function {
                if !(*exponent > 0.0) {
                    return Err(invalid("function.exponent", "must be positive"));
                }
            }
        }
        FunctionSpec::Indicator { center, radius } => {
            if let Some(c) = center {
                check_len(c, dim, "function.center")?;
            }
            if !(*radius > 0.0) {
                return Err(invalid("function.radius", "must be positive"));
            }
        }
        FunctionSpec::Gaussians { bumps } => {
            if bumps.is_empty() {
                return Err(invalid("function.bumps", "needs at least one bump"));
            }
            for b in bumps {
                check_len(&b.center, dim, "function.bumps.center")?;
                if !(b.width > 0.0 && b.weight.is_finite()) {
                    return Err(invalid("function.bumps", "widths must be positive and weights finite"));
                }
            }
        }
        FunctionSpec::File { .. } => {}
    }
    match &raw.region {
        Some(RegionSpec::Ball { center, radius }) => {
            check_len(center, dim, "region.center")?;
            if !(*radius > 0.0) {
                return Err(invalid("region.radius", "must be positive"));
            }
        }
        Some(RegionSpec::Halfspace { normal, offset }) => {
            check_len(normal, dim, "region.normal")?;
            if normal.iter().all(|c| *c == 0.0) || !offset.is_finite() {
                return Err(invalid("region", "normal must be non-zero and offset finite"));
            }
        }
        Some(RegionSpec::Cayley) if raw.command != Command::Transform => {
            return Err(invalid("region.kind", "cayley is only available to transform"));
        }
        _ => {}
    }
    if matches!(raw.command, Command::Transform | Command::Positivity) && raw.region.is_none() {
        return Err(invalid("region", format!("{} needs a region", raw.command.as_str())));
    }
    if raw.command == Command::Counterexample && dim != 3 {
        return Err(invalid("kernel.dim", "counterexample runs in three dimensions"));
    }
    if raw.command == Command::Counterexample && lambda > 1.0 {
        return Err(invalid("kernel.lambda", "counterexample needs lambda <= 1"));
    }
    for c in raw.centers.iter().flatten() {
        check_len(c, dim, "centers")?;
    }
    for r in raw.rays.iter().flatten() {
        check_len(&r.direction, dim, "rays.direction")?;
        if !(r.u > 0.0) || r.direction.iter().all(|c| *c == 0.0) {
            return Err(invalid("rays", "u must be positive and direction non-zero"));
        }
    }
    if let Some(p) = raw.power {
        if !(p > 0.0) {
            return Err(invalid("power", "must be positive"));
        }
    }
    Ok(RunConfig {
        command: raw.command,
        kernel,
        grid,
        function,
        region: raw.region,
        tolerances: raw.tolerances,
        seed: raw.seed,
        centers: raw.centers,
        rays: raw.rays.unwrap_or_default(),
        expected: raw.expected,
        power: raw.power,
        measure: raw.measure,
        schedule: raw.schedule.unwrap_or_default(),
        search: raw.search.unwrap_or_default(),
        write_fields: raw.write_fields,
    })
}
