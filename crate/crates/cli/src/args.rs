//! Command-line flags, lowered to a [`RunConfig`].

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use tangent_graphs::PropertyKind;

use crate::config::{
    BasePoint, Check, CommandKind, ImmersionSpec, RunConfig, DEFAULT_ANGLES, DEFAULT_GRID, DEFAULT_TOL,
};
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "tgraph", version, about = "Local graph representations of immersed manifolds")]
pub struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Built-in immersions.
    Zoo {
        #[command(subcommand)]
        action: ZooAction,
    },
    /// Sample the local graph over B_r and write it as CSV.
    Extract(ExtractArgs),
    /// Largest radius with the C⁰ or C¹ property.
    Radii(RadiiArgs),
    /// Numerical checks of the main statement and its lemmas.
    Verify(VerifyArgs),
    /// Slopes of the sine curve over all line directions.
    Counterexample(CounterexampleArgs),
    /// Run a JSON job file.
    Run(RunArgs),
}

#[derive(Debug, Subcommand)]
pub enum ZooAction {
    /// Names, descriptions and default parameters.
    List {
        /// Also write a JSON report here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct ImmersionArgs {
    /// Zoo entry name (see `zoo list`).
    #[arg(long)]
    pub immersion: String,
    /// Entry parameter as KEY=VALUE; repeatable.
    #[arg(long = "param", value_name = "KEY=VALUE", value_parser = parse_param)]
    pub params: Vec<(String, f64)>,
    /// Shorthand for `--param R=…`.
    #[arg(long = "R", value_name = "R")]
    pub big_r: Option<f64>,
}

impl ImmersionArgs {
    fn spec(&self) -> ImmersionSpec {
        let mut params: std::collections::BTreeMap<String, f64> = self.params.iter().cloned().collect();
        if let Some(r) = self.big_r {
            params.insert("R".into(), r);
        }
        ImmersionSpec { name: self.immersion.clone(), params }
    }
}

#[derive(Debug, Args)]
pub struct BaseArgs {
    /// Base point as `c1,c2,…` on chart 0 or `chart:c1,c2,…`; repeatable.
    #[arg(long, value_parser = parse_base_point, allow_hyphen_values = true)]
    pub q: Vec<BasePoint>,
    /// Sample base points with this many points per chart axis instead.
    #[arg(long, conflicts_with = "q")]
    pub samples: Option<usize>,
    /// Sampler jitter inside each cell, in [0, 1].
    #[arg(long, default_value_t = 0.0)]
    pub jitter: f64,
    /// Sampler seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    #[command(flatten)]
    pub immersion: ImmersionArgs,
    #[command(flatten)]
    pub base: BaseArgs,
    /// Ball radius.
    #[arg(long)]
    pub r: f64,
    /// Grid resolution N.
    #[arg(long, default_value_t = DEFAULT_GRID)]
    pub grid: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct RadiiArgs {
    #[arg(long, value_parser = parse_kind)]
    pub kind: PropertyKind,
    #[arg(long)]
    pub lambda: f64,
    #[command(flatten)]
    pub immersion: ImmersionArgs,
    #[command(flatten)]
    pub base: BaseArgs,
    /// Relative bracket width.
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    #[arg(long, default_value_t = DEFAULT_GRID)]
    pub grid: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(value_enum)]
    pub check: Check,
    #[command(flatten)]
    pub immersion: ImmersionArgs,
    #[command(flatten)]
    pub base: BaseArgs,
    /// Slope bound; `theorem` defaults to the threshold of the dimension.
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub r: Option<f64>,
    /// Inner radius for `distance` (defaults to r/5).
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    #[arg(long, default_value_t = DEFAULT_GRID)]
    pub grid: usize,
    /// Per-node CSV for `du-cert`.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct CounterexampleArgs {
    #[arg(long, default_value_t = 1e-6)]
    pub eps: f64,
    #[arg(long, default_value_t = 1e-7)]
    pub delta: f64,
    /// Half-width of the window.
    #[arg(long, default_value_t = 0.2)]
    pub r: f64,
    /// Number of line directions.
    #[arg(long, default_value_t = DEFAULT_ANGLES)]
    pub angles: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Job file (JSON).
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the job's output path.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_param(s: &str) -> Result<(String, f64), String> {
    let (key, value) = s.split_once('=').ok_or_else(|| format!("expected KEY=VALUE, got `{s}`"))?;
    let value: f64 = value.trim().parse().map_err(|e| format!("parameter `{key}`: {e}"))?;
    Ok((key.trim().to_string(), value))
}

fn parse_base_point(s: &str) -> Result<BasePoint, String> {
    let (chart, coords) = match s.split_once(':') {
        Some((c, rest)) => (c.trim().parse::<usize>().map_err(|e| format!("chart index: {e}"))?, rest),
        None => (0, s),
    };
    let coords = coords
        .split(',')
        .map(|c| c.trim().parse::<f64>().map_err(|e| format!("coordinate `{c}`: {e}")))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(BasePoint { chart, coords })
}

fn parse_kind(s: &str) -> Result<PropertyKind, String> {
    s.parse().map_err(|e: tangent_graphs::Error| e.to_string())
}

impl BaseArgs {
    fn apply(&self, config: &mut RunConfig) {
        config.q = self.q.clone();
        config.samples = self.samples;
        config.jitter = self.jitter;
        config.seed = self.seed;
    }
}

impl Command {
    /// The job this command describes; `run` reads it from its file.
    pub fn into_config(self) -> Result<RunConfig, CliError> {
        let config = match self {
            Command::Zoo { action: ZooAction::List { out } } => {
                let mut c = RunConfig::new(CommandKind::ZooList);
                c.out = out;
                c
            }
            Command::Extract(a) => {
                let mut c = RunConfig::new(CommandKind::Extract);
                c.immersion = Some(a.immersion.spec());
                a.base.apply(&mut c);
                c.r = Some(a.r);
                c.grid = a.grid;
                c.out = a.output.out;
                c
            }
            Command::Radii(a) => {
                let mut c = RunConfig::new(CommandKind::Radii);
                c.immersion = Some(a.immersion.spec());
                a.base.apply(&mut c);
                c.kind = Some(a.kind);
                c.lambda = Some(a.lambda);
                c.tol = a.tol;
                c.grid = a.grid;
                c.out = a.output.out;
                c
            }
            Command::Verify(a) => {
                let mut c = RunConfig::new(CommandKind::Verify);
                c.check = Some(a.check);
                c.immersion = Some(a.immersion.spec());
                a.base.apply(&mut c);
                c.lambda = a.lambda;
                c.r = a.r;
                c.rho = a.rho;
                c.tol = a.tol;
                c.grid = a.grid;
                c.csv = a.csv;
                c.out = a.output.out;
                c
            }
            Command::Counterexample(a) => {
                let mut c = RunConfig::new(CommandKind::Counterexample);
                c.eps = Some(a.eps);
                c.delta = Some(a.delta);
                c.r = Some(a.r);
                c.angles = a.angles;
                c.out = a.output.out;
                c
            }
            Command::Run(a) => {
                let mut c = RunConfig::from_file(&a.config)?;
                if a.out.is_some() {
                    c.out = a.out;
                }
                c
            }
        };
        Ok(config)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn base_points() {
        assert_eq!(parse_base_point("0").unwrap(), BasePoint { chart: 0, coords: vec![0.0] });
        assert_eq!(parse_base_point("2:0.3,-0.2").unwrap(), BasePoint { chart: 2, coords: vec![0.3, -0.2] });
        assert!(parse_base_point("x").is_err());
    }

    #[test]
    fn params() {
        assert_eq!(parse_param("R=2").unwrap(), ("R".to_string(), 2.0));
        assert!(parse_param("R").is_err());
    }

    #[test]
    fn flags_lower_to_config() {
        let cli = Cli::try_parse_from([
            "tgraph", "radii", "--kind", "c1", "--immersion", "circle", "--R", "1", "--lambda", "0.5", "--q", "-0.5",
        ])
        .unwrap();
        let c = cli.command.into_config().unwrap();
        assert_eq!(c.kind, Some(PropertyKind::C1));
        assert_eq!(c.immersion.as_ref().unwrap().params.get("R"), Some(&1.0));
        assert_eq!(c.q, vec![BasePoint { chart: 0, coords: vec![-0.5] }]);
        assert!(c.validate().is_ok());
    }

    #[test]
    fn clap_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
