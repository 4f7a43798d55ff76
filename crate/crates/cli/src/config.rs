//! Command-line flags, the optional JSON config file, and their merge into a
//! validated [`RunConfig`].  Precedence: flag, then config file, then (for
//! the seed) the `UNIEST_SEED` environment variable, then built-in defaults.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const DEFAULT_SAMPLES: usize = 100_000;
pub const DEFAULT_SEED: u64 = 20_010_101;
pub const MIN_SAMPLES: usize = 100;
pub const MAX_D: usize = 8;
pub const SEED_ENV: &str = "UNIEST_SEED";

#[derive(Debug, Parser)]
#[command(name = "uniest", version, about = "Monte Carlo checks for optimal estimation of unknown unitaries")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Average fidelity of a one-use strategy against 2/d²
    FidelityN1 {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, value_enum)]
        strategy: Option<StrategyKind>,
    },
    /// Compare the sampled f1 operator with its closed form
    F1Check {
        #[command(flatten)]
        common: CommonArgs,
        /// Report deviations without asserting them
        #[arg(long)]
        explore: bool,
    },
    /// Two-copy qubit estimation, optionally scanning the probe weight
    FidelityN2 {
        #[command(flatten)]
        common: CommonArgs,
        /// Probe weights: "0,0.5,1" or "start:stop:step"
        #[arg(long)]
        grid: Option<String>,
        /// Spin-1 weight of the probe
        #[arg(long)]
        a: Option<f64>,
        /// Spin-1 weight of the measurement fiducial
        #[arg(long)]
        a_meas: Option<f64>,
    },
    /// Estimate a magnetic field from one use of a spin-1/2 probe
    Bfield {
        #[command(flatten)]
        common: CommonArgs,
        /// Field direction "x,y,z"; omit both axis and angle for random fields
        #[arg(long, allow_hyphen_values = true)]
        axis: Option<String>,
        /// Rotation angle μBT in [0, π]
        #[arg(long)]
        angle: Option<f64>,
        /// Include every trial in the output
        #[arg(long)]
        per_trial: bool,
    },
    /// Entangled versus product probe for learning an unknown basis change
    ChannelTune {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Check positivity, completeness and guess unitarity of a POVM file
    PovmValidate {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        input: Option<PathBuf>,
    },
}

#[derive(Debug, Default, Args)]
pub struct CommonArgs {
    /// Hilbert-space dimension of the unknown unitary
    #[arg(long)]
    pub d: Option<usize>,
    /// Monte Carlo trials (at least 100)
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Write the report here instead of stdout
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Worker threads; results do not depend on this
    #[arg(long)]
    pub workers: Option<usize>,
    /// Omit the timestamp so repeated runs are byte-identical
    #[arg(long)]
    pub no_timestamp: bool,
    /// JSON file with defaults for any of these flags (kebab-case keys)
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StrategyKind {
    Bell,
    Covariant,
    Blind,
}

impl StrategyKind {
    pub fn as_str(self) -> &'static str {
        match self {
            StrategyKind::Bell => "bell",
            StrategyKind::Covariant => "covariant",
            StrategyKind::Blind => "blind",
        }
    }
}

/// A grid written either as a list or as a `start:stop:step` string.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum GridSpec {
    List(Vec<f64>),
    Text(String),
}

/// Contents of a `--config` file.
#[derive(Debug, Default, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct FileConfig {
    pub d: Option<usize>,
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    pub format: Option<Format>,
    pub output: Option<PathBuf>,
    pub workers: Option<usize>,
    pub no_timestamp: Option<bool>,
    pub strategy: Option<StrategyKind>,
    pub explore: Option<bool>,
    pub grid: Option<GridSpec>,
    pub a: Option<f64>,
    pub a_meas: Option<f64>,
    pub axis: Option<GridSpec>,
    pub angle: Option<f64>,
    pub per_trial: Option<bool>,
    pub input: Option<PathBuf>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("bad config {}: {e}", path.display())))
    }
}

/// Everything a command needs after merging.  The echoed part is what
/// determines the numbers; output location, format and worker count are
/// kept out of it so reports compare equal across those.
#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub command: String,
    pub d: usize,
    pub samples: usize,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub strategy: Option<StrategyKind>,
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub explore: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a_meas: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub axis: Option<[f64; 3]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub angle: Option<f64>,
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub per_trial: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    #[serde(skip)]
    pub format: Format,
    #[serde(skip)]
    pub output: Option<PathBuf>,
    #[serde(skip)]
    pub workers: Option<usize>,
    #[serde(skip)]
    pub timestamp: bool,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::FidelityN1 { .. } => "fidelity-n1",
            Command::F1Check { .. } => "f1-check",
            Command::FidelityN2 { .. } => "fidelity-n2",
            Command::Bfield { .. } => "bfield",
            Command::ChannelTune { .. } => "channel-tune",
            Command::PovmValidate { .. } => "povm-validate",
        }
    }

    fn common(&self) -> &CommonArgs {
        match self {
            Command::FidelityN1 { common, .. }
            | Command::F1Check { common, .. }
            | Command::FidelityN2 { common, .. }
            | Command::Bfield { common, .. }
            | Command::ChannelTune { common }
            | Command::PovmValidate { common, .. } => common,
        }
    }

    /// Merges flags, the config file and the environment.
    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let c = self.common();
        let file = match &c.config {
            Some(p) => FileConfig::load(p)?,
            None => FileConfig::default(),
        };
        let env_seed = match std::env::var(SEED_ENV) {
            Ok(s) => Some(
                s.trim()
                    .parse::<u64>()
                    .map_err(|_| CliError::Usage(format!("{SEED_ENV} must be an unsigned integer, got {s:?}")))?,
            ),
            Err(_) => None,
        };
        let mut cfg = RunConfig {
            command: self.name().to_string(),
            d: c.d.or(file.d).unwrap_or(2),
            samples: c.samples.or(file.samples).unwrap_or(DEFAULT_SAMPLES),
            seed: c.seed.or(file.seed).or(env_seed).unwrap_or(DEFAULT_SEED),
            strategy: None,
            explore: false,
            grid: None,
            a: None,
            a_meas: None,
            axis: None,
            angle: None,
            per_trial: false,
            input: None,
            format: c.format.or(file.format).unwrap_or(Format::Json),
            output: c.output.clone().or(file.output.clone()),
            workers: c.workers.or(file.workers),
            timestamp: !(c.no_timestamp || file.no_timestamp.unwrap_or(false)),
        };
        if !(2..=MAX_D).contains(&cfg.d) {
            return Err(CliError::Usage(format!("d must be in 2..={MAX_D}, got {}", cfg.d)));
        }
        if cfg.samples < MIN_SAMPLES {
            return Err(CliError::Usage(format!("samples must be at least {MIN_SAMPLES}")));
        }
        if cfg.workers == Some(0) {
            return Err(CliError::Usage("workers must be positive".into()));
        }
        match self {
            Command::FidelityN1 { strategy, .. } => {
                let s = strategy.or(file.strategy).unwrap_or(StrategyKind::Covariant);
                if s == StrategyKind::Bell && cfg.d != 2 {
                    return Err(CliError::Usage("the Bell strategy exists only for d = 2".into()));
                }
                cfg.strategy = Some(s);
            }
            Command::F1Check { explore, .. } => {
                cfg.explore = *explore || file.explore.unwrap_or(false);
            }
            Command::FidelityN2 { grid, a, a_meas, .. } => {
                if cfg.d != 2 {
                    return Err(CliError::Usage("two-copy estimation is implemented for d = 2 only".into()));
                }
                let grid = match grid {
                    Some(g) => Some(parse_grid(g)?),
                    None => file.grid.as_ref().map(grid_from_spec).transpose()?,
                };
                if let Some(g) = &grid {
                    check_unit_interval("grid value", g)?;
                }
                cfg.grid = grid;
                let a = a.or(file.a).unwrap_or_else(uniest::probes::optimal_n2_prep_weight);
                let a_meas = a_meas.or(file.a_meas).unwrap_or_else(uniest::probes::optimal_n2_meas_weight);
                check_unit_interval("a", &[a])?;
                check_unit_interval("a-meas", &[a_meas])?;
                cfg.a = Some(a);
                cfg.a_meas = Some(a_meas);
            }
            Command::Bfield { axis, angle, per_trial, .. } => {
                if cfg.d != 2 {
                    return Err(CliError::Usage("the field probe is a qubit, d must be 2".into()));
                }
                let axis = match axis {
                    Some(s) => Some(parse_list(s)?),
                    None => file.axis.as_ref().map(grid_from_spec).transpose()?,
                };
                let angle = angle.or(file.angle);
                if axis.is_some() || angle.is_some() {
                    let v = axis.unwrap_or_else(|| vec![0.0, 0.0, 1.0]);
                    let v: [f64; 3] = v
                        .try_into()
                        .map_err(|_| CliError::Usage("axis needs exactly three components".into()))?;
                    let angle = angle.unwrap_or(0.0);
                    // validates the axis norm and the angle range
                    uniest::AxisAngle::new(v, angle).map_err(|e| CliError::Usage(e.to_string()))?;
                    cfg.axis = Some(v);
                    cfg.angle = Some(angle);
                }
                cfg.per_trial = *per_trial || file.per_trial.unwrap_or(false);
            }
            Command::ChannelTune { .. } => {}
            Command::PovmValidate { input, .. } => {
                let input = input
                    .clone()
                    .or(file.input)
                    .ok_or_else(|| CliError::Usage("povm-validate needs --input".into()))?;
                cfg.input = Some(input);
            }
        }
        Ok(cfg)
    }
}

fn check_unit_interval(what: &str, values: &[f64]) -> Result<(), CliError> {
    match values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        Some(v) => Err(CliError::Usage(format!("{what} {v} outside [0, 1]"))),
        None => Ok(()),
    }
}

fn grid_from_spec(spec: &GridSpec) -> Result<Vec<f64>, CliError> {
    match spec {
        GridSpec::List(v) => Ok(v.clone()),
        GridSpec::Text(s) => parse_grid(s),
    }
}

fn parse_list(s: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| CliError::Usage(format!("not a number: {t:?}")))
        })
        .collect()
}

/// `"0,0.25,1"` or an inclusive `"start:stop:step"` range.  Range points are
/// computed as `start + i·step` and rounded to 12 decimals so `0:1:0.1`
/// yields `0.3`, not `0.30000000000000004`.
pub fn parse_grid(s: &str) -> Result<Vec<f64>, CliError> {
    if !s.contains(':') {
        let v = parse_list(s)?;
        return if v.is_empty() {
            Err(CliError::Usage("empty grid".into()))
        } else {
            Ok(v)
        };
    }
    let parts = parse_list(&s.replace(':', ","))?;
    let [start, stop, step] = parts[..] else {
        return Err(CliError::Usage(format!("range grid must be start:stop:step, got {s:?}")));
    };
    if step <= 0.0 || stop < start {
        return Err(CliError::Usage(format!("empty or unbounded range {s:?}")));
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    if count > 10_000 {
        return Err(CliError::Usage("grid has more than 10000 points".into()));
    }
    Ok((0..count)
        .map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12)
        .collect())
}
