//! The batch job description shared by flag-driven and file-driven runs.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tangent_graphs::zoo::zoo_entries;
use tangent_graphs::{ParamImmersion, ParamPoint, PropertyKind, SampleSpec};

use crate::error::CliError;

pub const DEFAULT_GRID: usize = 128;
pub const DEFAULT_TOL: f64 = 1e-3;
pub const DEFAULT_ANGLES: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommandKind {
    ZooList,
    Extract,
    Radii,
    Verify,
    Counterexample,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Check {
    Theorem,
    Enlargement,
    Distance,
    Inclusion,
    DuCert,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImmersionSpec {
    pub name: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
}

impl ImmersionSpec {
    pub fn build(&self) -> Result<ParamImmersion, CliError> {
        Ok(tangent_graphs::zoo_build(&self.name, &self.params)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasePoint {
    #[serde(default)]
    pub chart: usize,
    pub coords: Vec<f64>,
}

impl From<&BasePoint> for ParamPoint {
    fn from(b: &BasePoint) -> Self {
        ParamPoint::new(b.chart, b.coords.clone())
    }
}

/// One batch job. Unused fields for a command must be absent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: CommandKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub check: Option<Check>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub immersion: Option<ImmersionSpec>,
    /// Explicit base points; when empty and `samples` is unset, the origin of chart 0.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub q: Vec<BasePoint>,
    /// Sampler points per chart axis, replacing `q`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default)]
    pub jitter: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<PropertyKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default = "default_angles")]
    pub angles: usize,
    #[serde(default = "default_grid")]
    pub grid: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Report destination; stdout when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    /// Per-node CSV destination for `du-cert`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
}

fn default_grid() -> usize {
    DEFAULT_GRID
}

fn default_tol() -> f64 {
    DEFAULT_TOL
}

fn default_angles() -> usize {
    DEFAULT_ANGLES
}

impl RunConfig {
    pub fn new(command: CommandKind) -> Self {
        Self {
            command,
            check: None,
            immersion: None,
            q: Vec::new(),
            samples: None,
            jitter: 0.0,
            seed: 0,
            kind: None,
            lambda: None,
            r: None,
            rho: None,
            eps: None,
            delta: None,
            angles: DEFAULT_ANGLES,
            grid: DEFAULT_GRID,
            tol: DEFAULT_TOL,
            out: None,
            csv: None,
        }
    }

    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.into(), source })?;
        serde_json::from_str(&text).map_err(|source| CliError::ConfigParse { path: path.into(), source })
    }

    /// Checks that the fields the command needs are present and in range, and
    /// that no field foreign to the command is set.
    pub fn validate(&self) -> Result<(), CliError> {
        use CommandKind::*;
        let needs_immersion = matches!(self.command, Extract | Radii | Verify);
        match (&self.immersion, needs_immersion) {
            (None, true) => return invalid("an immersion is required"),
            (Some(_), false) => return invalid("this command takes no immersion"),
            (Some(spec), true) if !zoo_entries().iter().any(|e| e.name == spec.name) => {
                return invalid(format!("unknown zoo entry `{}`", spec.name));
            }
            _ => {}
        }
        if (self.command == Verify) != self.check.is_some() {
            return invalid("`check` is required for verify and only allowed there");
        }
        if (self.command == Radii) != self.kind.is_some() {
            return invalid("`kind` is required for radii and only allowed there");
        }
        if !matches!(self.command, Counterexample) && (self.eps.is_some() || self.delta.is_some()) {
            return invalid("`eps` and `delta` belong to the counterexample command");
        }
        if self.samples.is_some() && !self.q.is_empty() {
            return invalid("give either explicit base points or a sampler, not both");
        }
        if self.samples == Some(0) {
            return invalid("`samples` must be positive");
        }
        if !(0.0..=1.0).contains(&self.jitter) {
            return invalid("`jitter` must lie in [0, 1]");
        }
        if self.grid < 8 {
            return invalid("`grid` must be at least 8");
        }
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return invalid("`tol` must lie in (0, 1)");
        }
        if self.angles < 2 || self.angles % 2 != 0 {
            return invalid("`angles` must be even and at least 2");
        }
        for (name, v) in [("lambda", self.lambda), ("r", self.r), ("rho", self.rho), ("delta", self.delta)] {
            if let Some(v) = v {
                if !(v.is_finite() && v > 0.0) {
                    return invalid(format!("`{name}` must be positive and finite"));
                }
            }
        }
        if let Some(eps) = self.eps {
            if !(eps.is_finite() && eps >= 0.0) {
                return invalid("`eps` must be non-negative and finite");
            }
        }
        if self.csv.is_some() && self.check != Some(Check::DuCert) {
            return invalid("`csv` is only written by verify du-cert");
        }
        let required: &[(&str, bool)] = match (self.command, self.check) {
            (Extract, _) => &[("r", self.r.is_some())],
            (Radii, _) => &[("lambda", self.lambda.is_some())],
            (Verify, Some(Check::Theorem)) => &[],
            (Verify, Some(_)) => &[("r", self.r.is_some()), ("lambda", self.lambda.is_some())],
            _ => &[],
        };
        if let Some((name, _)) = required.iter().find(|(_, present)| !present) {
            return invalid(format!("`{name}` is required for this command"));
        }
        if self.rho.is_some() && self.check != Some(Check::Distance) {
            return invalid("`rho` belongs to verify distance");
        }
        Ok(())
    }

    /// Base points of the job, with the sampler spec when one is used.
    pub fn base_points(&self, f: &ParamImmersion) -> Result<(Vec<ParamPoint>, Option<SampleSpec>), CliError> {
        if let Some(per_axis) = self.samples {
            let spec = SampleSpec { per_axis, jitter: self.jitter, seed: self.seed };
            return Ok((f.sample(&spec), Some(spec)));
        }
        if self.q.is_empty() {
            return Ok((vec![ParamPoint::new(0, vec![0.0; f.m()])], None));
        }
        let points: Vec<ParamPoint> = self.q.iter().map(ParamPoint::from).collect();
        for p in &points {
            if !f.contains(p) {
                return invalid(format!("base point {:?} lies outside chart {} of {}", p.coords, p.chart, f.name()));
            }
        }
        Ok((points, None))
    }
}

fn invalid<T>(msg: impl Into<String>) -> Result<T, CliError> {
    Err(CliError::Config(msg.into()))
}
