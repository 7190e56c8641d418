//! The `purify` command line.
//!
//! Every subcommand reads one JSON configuration file and writes one table,
//! as CSV (with a `#`-prefixed block echoing the input) or as a JSON
//! document. Output depends only on the configuration and the seed.
//!
//! Exit codes: 0 on success, 2 for configuration errors, 3 for numerical
//! failures.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::dephasing::{estimate_moments, pd_purified, purified_from_moments, wiener_moments};
use crate::distinguishability::{sample_dephased_overlaps, DephasingParams, SamplingGrid};
use crate::error::Error;
use crate::histogram::{
    fit, fit_joint, mc_uncertainty, parse_histogram, parse_peak_counts, FitTarget, Mode, PeakAreas,
    PeakCounts, SetupGeometry,
};
use crate::permanent::DistinguishabilityMatrix;
use crate::protocol::{
    bs_sweep, polarization_bounds, purified_visibility, purified_visibility_for,
    success_probability, Coupler, NoiseConfig, PhotonModel,
};
use crate::CMatrix;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "purify",
    version,
    about = "Heralded photon purification simulator"
)]
pub struct Args {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub global: GlobalOpts,
}

#[derive(clap::Args, Debug, Clone)]
pub struct GlobalOpts {
    /// JSON configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Seed for stochastic subcommands.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; all cores when absent.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
}

#[derive(Subcommand, Debug, Clone)]
pub enum Command {
    /// Raw and purified visibilities of one or more scenarios.
    Simulate,
    /// Visibilities over a parameter grid.
    Sweep,
    /// Efficiency and visibility from correlation-peak counts.
    Fit {
        #[arg(long, value_enum)]
        mode: Option<FitMode>,
        /// Raw visibility, required in pure mode.
        #[arg(long = "v-raw")]
        v_raw: Option<f64>,
        /// Poisson resamples for the uncertainty estimate; 0 disables it.
        #[arg(long = "mc-resamples")]
        mc_resamples: Option<usize>,
    },
    /// Overlap moments of sampled dephased wavepackets against closed forms.
    McDephasing,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitMode {
    Raw,
    Pure,
}

/// A failure with its exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn config(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_CONFIG,
            message: message.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::FitFailed { .. } | Error::Inconsistent(_) | Error::DegenerateReference => {
                EXIT_NUMERICAL
            }
            _ => EXIT_CONFIG,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// A result table: named columns and rows of JSON scalars.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    fn new(columns: &[&str]) -> Self {
        Table {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }
}

/// The table together with what produced it.
#[derive(Clone, Debug)]
pub struct Report {
    pub command: &'static str,
    pub input: Value,
    pub seed: Option<u64>,
    pub table: Table,
    /// Human-readable summary, printed to standard error.
    pub summary: Option<String>,
}

impl Report {
    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.render_csv(),
            Format::Json => {
                let doc = json!({
                    "command": self.command,
                    "input": self.input,
                    "seed": self.seed,
                    "columns": self.table.columns,
                    "rows": self.table.rows,
                });
                let mut s = serde_json::to_string_pretty(&doc).expect("serializable");
                s.push('\n');
                s
            }
        }
    }

    fn render_csv(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# command: {}", self.command);
        let _ = writeln!(s, "# input: {}", self.input);
        if let Some(seed) = self.seed {
            let _ = writeln!(s, "# seed: {seed}");
        }
        let _ = writeln!(s, "{}", self.table.columns.join(","));
        for row in &self.table.rows {
            let cells: Vec<String> = row.iter().map(csv_cell).collect();
            let _ = writeln!(s, "{}", cells.join(","));
        }
        s
    }
}

fn csv_cell(v: &Value) -> String {
    match v {
        Value::String(s) if s.contains(',') || s.contains('"') => {
            format!("\"{}\"", s.replace('"', "\"\""))
        }
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x)
        .map(Value::Number)
        .unwrap_or(Value::Null)
}

/// Photon model of a scenario.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelConfig {
    /// Constant overlap, given either directly or as the raw visibility.
    Constant {
        #[serde(default)]
        c: Option<f64>,
        #[serde(default)]
        v_raw: Option<f64>,
    },
    /// Linear polarization angles of the four sources, in degrees.
    Polarization { angles_deg: [f64; 4] },
    /// Explicit Gram matrix over the four sources.
    Gram {
        real: Vec<Vec<f64>>,
        #[serde(default)]
        imag: Option<Vec<Vec<f64>>>,
    },
    /// Pure dephasing at strength `x`; `closed_form` evaluates the analytic
    /// purified indistinguishability, `wiener` runs the circuit with exact
    /// Wiener overlap moments.
    Dephasing {
        x: f64,
        #[serde(default)]
        method: DephasingMethod,
    },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DephasingMethod {
    #[default]
    ClosedForm,
    Wiener,
}

impl ModelConfig {
    fn evaluate(&self, noise: &NoiseConfig) -> crate::Result<(f64, f64)> {
        let model = match self {
            ModelConfig::Constant {
                c: Some(c),
                v_raw: None,
            } => PhotonModel::Constant { c: *c },
            ModelConfig::Constant {
                c: None,
                v_raw: Some(v),
            } => PhotonModel::from_raw_visibility(*v)?,
            ModelConfig::Constant { .. } => {
                return Err(Error::Unsupported(
                    "constant model needs exactly one of `c` and `v_raw`".into(),
                ))
            }
            ModelConfig::Polarization { angles_deg } => {
                PhotonModel::polarized(angles_deg.map(f64::to_radians))?
            }
            ModelConfig::Gram { real, imag } => {
                PhotonModel::Gram(gram_from_parts(real, imag.as_deref())?)
            }
            ModelConfig::Dephasing {
                x,
                method: DephasingMethod::ClosedForm,
            } => {
                if *noise != NoiseConfig::default() {
                    return Err(Error::Unsupported(
                        "the closed-form dephasing model has no circuit imperfections".into(),
                    ));
                }
                return Ok((
                    crate::dephasing::raw_indistinguishability(*x),
                    pd_purified(*x)?,
                ));
            }
            ModelConfig::Dephasing {
                x,
                method: DephasingMethod::Wiener,
            } => PhotonModel::Ensemble(wiener_moments(*x)?),
        };
        let v = purified_visibility_for(model, noise)?;
        Ok((v.raw, v.pure))
    }
}

fn gram_from_parts(
    real: &[Vec<f64>],
    imag: Option<&[Vec<f64>]>,
) -> crate::Result<DistinguishabilityMatrix> {
    let n = real.len();
    let square = |m: &[Vec<f64>]| m.len() == n && m.iter().all(|r| r.len() == n);
    if !square(real) || imag.is_some_and(|m| !square(m)) {
        return Err(Error::Dimension(
            "Gram matrix parts must be square and of equal size".into(),
        ));
    }
    DistinguishabilityMatrix::new(CMatrix::from_fn(n, n, |j, k| {
        num_complex::Complex64::new(real[j][k], imag.map_or(0.0, |m| m[j][k]))
    }))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub id: String,
    pub model: ModelConfig,
    #[serde(default)]
    pub noise: NoiseConfig,
    /// Photons per purifier for the success-probability column.
    #[serde(default = "default_n")]
    pub n: usize,
}

fn default_n() -> usize {
    2
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub scenarios: Vec<ScenarioConfig>,
}

/// `points` evenly spaced values from `start` to `stop` inclusive.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl Grid {
    pub fn values(&self) -> CliResult<Vec<f64>> {
        match self.points {
            0 => Err(CliError::config("grid has no points")),
            1 => Ok(vec![self.start]),
            n => Ok((0..n)
                .map(|k| self.start + (self.stop - self.start) * k as f64 / (n - 1) as f64)
                .collect()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveModel {
    /// Constant overlap through the ideal circuit.
    Multipermanent,
    /// Closed-form pure dephasing.
    PureDephasing,
    /// Constant overlap with the sweep's `g2`.
    MultipermanentG2,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "axis", rename_all = "snake_case", deny_unknown_fields)]
pub enum SweepConfig {
    /// Purified visibility against raw visibility for several models.
    RawVisibility {
        grid: Grid,
        models: Vec<CurveModel>,
        #[serde(default)]
        g2: f64,
    },
    /// Polarization rotation angle in degrees.
    Theta { grid: Grid },
    /// Reflectivity of one coupler.
    Reflectivity {
        coupler: Coupler,
        grid: Grid,
        v_raw: f64,
    },
    /// Multiphoton contamination.
    G2 { grid: Grid, v_raw: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepFile {
    pub sweep: SweepConfig,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CountsFormat {
    /// `peak_index, counts` rows.
    #[default]
    Peaks,
    /// `time_bin_ns, counts` rows.
    Histogram,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    /// Counts file, relative to the configuration file.
    pub counts_file: PathBuf,
    #[serde(default)]
    pub counts_format: CountsFormat,
    /// Pulse period for histogram files; `1e9 / repetition_rate` when absent.
    #[serde(default)]
    pub period_ns: Option<f64>,
    pub repetition_rate: f64,
    pub integration_time: f64,
    #[serde(default)]
    pub geometry: SetupGeometry,
    #[serde(default)]
    pub mode: Option<FitMode>,
    #[serde(default)]
    pub v_raw: Option<f64>,
    #[serde(default)]
    pub mc_resamples: Option<usize>,
    /// Raw measurement to fit jointly with a purified one.
    #[serde(default)]
    pub joint_raw: Option<JointRawConfig>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointRawConfig {
    pub counts_file: PathBuf,
    #[serde(default)]
    pub counts_format: CountsFormat,
    pub integration_time: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McDephasingConfig {
    pub gamma: f64,
    /// Dephasing strengths `x = 2 gamma_d / gamma`.
    pub x: Vec<f64>,
    pub n_samples: usize,
    #[serde(default = "default_photons")]
    pub n_photons: usize,
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default)]
    pub horizon: Option<f64>,
}

fn default_photons() -> usize {
    4
}

fn load<T: serde::de::DeserializeOwned>(path: Option<&Path>) -> CliResult<(T, Value)> {
    let path = path.ok_or_else(|| CliError::config("--config is required"))?;
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
    let value: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    let parsed = serde_json::from_str(&text)
        .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    Ok((parsed, value))
}

pub fn cmd_simulate(config: &SimulateConfig) -> CliResult<Table> {
    if config.scenarios.is_empty() {
        return Err(CliError::config("no scenarios"));
    }
    let rows: Vec<CliResult<Vec<Value>>> = config
        .scenarios
        .par_iter()
        .map(|sc| {
            let (raw, pure) = sc.model.evaluate(&sc.noise)?;
            Ok(vec![
                Value::String(sc.id.clone()),
                num(raw),
                num(pure),
                num(pure - raw),
                num(success_probability(sc.n)?),
            ])
        })
        .collect();
    let mut table = Table::new(&[
        "scenario",
        "v_raw",
        "v_pure",
        "improvement",
        "success_probability",
    ]);
    for r in rows {
        table.rows.push(r?);
    }
    Ok(table)
}

pub fn cmd_sweep(config: &SweepConfig) -> CliResult<Table> {
    match config {
        SweepConfig::RawVisibility { grid, models, g2 } => {
            if models.is_empty() {
                return Err(CliError::config("no models to sweep"));
            }
            let values = grid.values()?;
            let mut columns = vec!["v_raw".to_string()];
            columns.extend(models.iter().map(|m| {
                let name = serde_json::to_value(m).expect("serializable");
                format!("v_pure_{}", name.as_str().unwrap_or_default())
            }));
            let rows: Vec<CliResult<Vec<Value>>> = values
                .par_iter()
                .map(|&v| {
                    let mut row = vec![num(v)];
                    for m in models {
                        let pure = match m {
                            CurveModel::Multipermanent => {
                                purified_visibility(checked_sqrt(v)?, &NoiseConfig::default())?.pure
                            }
                            CurveModel::PureDephasing => {
                                pd_purified(crate::dephasing::strength_for_raw(v)?)?
                            }
                            CurveModel::MultipermanentG2 => {
                                purified_visibility(checked_sqrt(v)?, &NoiseConfig::with_g2(*g2))?
                                    .pure
                            }
                        };
                        row.push(num(pure));
                    }
                    Ok(row)
                })
                .collect();
            let mut table = Table {
                columns,
                rows: Vec::new(),
            };
            for r in rows {
                table.rows.push(r?);
            }
            Ok(table)
        }
        SweepConfig::Theta { grid } => {
            let thetas: Vec<f64> = grid.values()?.into_iter().map(f64::to_radians).collect();
            let mut table = Table::new(&["theta_deg", "v_raw", "v_pure_same", "v_pure_opposite"]);
            for r in polarization_bounds(&thetas)? {
                table.rows.push(vec![
                    num(r.theta.to_degrees()),
                    num(r.v_raw),
                    num(r.v_pure_same),
                    num(r.v_pure_opposite),
                ]);
            }
            Ok(table)
        }
        SweepConfig::Reflectivity {
            coupler,
            grid,
            v_raw,
        } => {
            let mut table = Table::new(&["reflectivity", "v_raw", "v_pure", "improvement"]);
            for r in bs_sweep(*coupler, &grid.values()?, checked_sqrt(*v_raw)?)? {
                table.rows.push(vec![
                    num(r.r),
                    num(r.v_raw),
                    num(r.v_pure),
                    num(r.v_pure - r.v_raw),
                ]);
            }
            Ok(table)
        }
        SweepConfig::G2 { grid, v_raw } => {
            let c = checked_sqrt(*v_raw)?;
            let rows: Vec<CliResult<Vec<Value>>> = grid
                .values()?
                .par_iter()
                .map(|&g2| {
                    let v = purified_visibility(c, &NoiseConfig::with_g2(g2))?;
                    Ok(vec![num(g2), num(v.raw), num(v.pure), num(v.improvement())])
                })
                .collect();
            let mut table = Table::new(&["g2", "v_raw", "v_pure", "improvement"]);
            for r in rows {
                table.rows.push(r?);
            }
            Ok(table)
        }
    }
}

fn checked_sqrt(v: f64) -> crate::Result<f64> {
    crate::error::check_unit_interval("raw visibility", v)?;
    Ok(v.sqrt())
}

fn read_areas(path: &Path, format: CountsFormat, period_ns: f64) -> CliResult<PeakAreas> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
    let areas = match format {
        CountsFormat::Peaks => parse_peak_counts(&text),
        CountsFormat::Histogram => parse_histogram(&text, period_ns),
    };
    areas.map_err(|e| CliError::config(format!("{}: {e}", path.display())))
}

/// Command-line overrides for `fit`.
#[derive(Clone, Copy, Debug, Default)]
pub struct FitOverrides {
    pub mode: Option<FitMode>,
    pub v_raw: Option<f64>,
    pub mc_resamples: Option<usize>,
}

pub fn cmd_fit(
    config: &FitConfig,
    base_dir: &Path,
    overrides: FitOverrides,
    seed: Option<u64>,
) -> CliResult<(Table, String)> {
    let mode = overrides.mode.or(config.mode).unwrap_or(FitMode::Raw);
    let v_raw = overrides.v_raw.or(config.v_raw);
    let resamples = overrides.mc_resamples.or(config.mc_resamples).unwrap_or(0);
    let period = config.period_ns.unwrap_or(1e9 / config.repetition_rate);
    let areas = read_areas(
        &base_dir.join(&config.counts_file),
        config.counts_format,
        period,
    )?;
    let counts = PeakCounts::new(
        areas.central,
        areas.side,
        config.repetition_rate,
        config.integration_time,
    )?;
    let g = config.geometry;

    if let (FitMode::Pure, Some(joint)) = (mode, &config.joint_raw) {
        let raw_areas = read_areas(
            &base_dir.join(&joint.counts_file),
            joint.counts_format,
            period,
        )?;
        let raw = PeakCounts::new(
            raw_areas.central,
            raw_areas.side,
            config.repetition_rate,
            joint.integration_time,
        )?;
        let j = fit_joint(&raw, &counts, &g)?;
        let mut table = Table::new(&["mode", "t_raw", "v_raw", "t_pure", "v_pure", "residual"]);
        table.rows.push(vec![
            Value::String("joint".into()),
            num(j.t_raw),
            num(j.v_raw),
            num(j.t_pure),
            num(j.v_pure),
            num(j.residual),
        ]);
        let summary = format!(
            "t_raw = {:.10}\nV_raw = {:.10}\nt_pure = {:.10}\nV_pure = {:.10}\nresidual = {:.6e}\n",
            j.t_raw, j.v_raw, j.t_pure, j.v_pure, j.residual
        );
        return Ok((table, summary));
    }

    let target = FitTarget::from_mode(
        match mode {
            FitMode::Raw => Mode::Raw,
            FitMode::Pure => Mode::Pure,
        },
        v_raw,
    )
    .map_err(|_| CliError::config("pure mode needs the raw visibility (--v-raw)"))?;
    let mut result = fit(&counts, &g, target)?;
    if resamples > 0 {
        let seed =
            seed.ok_or_else(|| CliError::config("--seed is required with --mc-resamples"))?;
        let (st, sv) = mc_uncertainty(&counts, &g, target, resamples, seed)?;
        result.sigma_t = Some(st);
        result.sigma_v = Some(sv);
    }
    let mode_name = match mode {
        FitMode::Raw => "raw",
        FitMode::Pure => "pure",
    };
    let mut table = Table::new(&[
        "mode", "central", "side", "t", "v", "residual", "sigma_t", "sigma_v",
    ]);
    table.rows.push(vec![
        Value::String(mode_name.into()),
        num(counts.central),
        num(counts.side),
        num(result.t),
        num(result.v),
        num(result.residual),
        result.sigma_t.map_or(Value::Null, num),
        result.sigma_v.map_or(Value::Null, num),
    ]);
    Ok((table, result.to_key_value()))
}

pub fn cmd_mc_dephasing(config: &McDephasingConfig, seed: u64) -> CliResult<Table> {
    if config.x.is_empty() {
        return Err(CliError::config("no dephasing strengths"));
    }
    let mut table = Table::new(&[
        "x",
        "pair_mc",
        "pair_se",
        "pair_exact",
        "triple_mc",
        "triple_se",
        "triple_wiener",
        "quad_mc",
        "quad_se",
        "quad_wiener",
        "purified_mc",
        "purified_se",
        "purified_closed_form",
        "purified_wiener",
        "z_closed_form",
    ]);
    for (k, &x) in config.x.iter().enumerate() {
        let params = DephasingParams::new(config.gamma, x * config.gamma / 2.0)?;
        let default_grid = SamplingGrid::for_decay_rate(config.gamma);
        let grid = SamplingGrid {
            dt: config.dt.unwrap_or(default_grid.dt),
            horizon: config.horizon.unwrap_or(default_grid.horizon),
        };
        let samples = sample_dephased_overlaps(
            &params,
            config.n_photons,
            config.n_samples,
            grid,
            seed.wrapping_add(k as u64),
        )?;
        let est = estimate_moments(&samples)?;
        let exact = wiener_moments(x)?;
        let purified = est.purified()?;
        let closed = pd_purified(x)?;
        table.rows.push(vec![
            num(x),
            num(est.pair.mean),
            num(est.pair.se),
            num(exact.pair),
            num(est.triple.mean),
            num(est.triple.se),
            num(exact.triple),
            num(est.quad.mean),
            num(est.quad.se),
            num(exact.quad),
            num(purified.mean),
            num(purified.se),
            num(closed),
            num(purified_from_moments(&exact)?),
            num((purified.mean - closed) / purified.se),
        ]);
    }
    Ok(table)
}

/// Runs a parsed command and returns its report.
pub fn execute(args: &Args) -> CliResult<Report> {
    let g = &args.global;
    let config_path = g.config.as_deref();
    match &args.command {
        Command::Simulate => {
            let (config, input): (SimulateConfig, _) = load(config_path)?;
            Ok(Report {
                command: "simulate",
                input,
                seed: g.seed,
                table: cmd_simulate(&config)?,
                summary: None,
            })
        }
        Command::Sweep => {
            let (config, input): (SweepFile, _) = load(config_path)?;
            Ok(Report {
                command: "sweep",
                input,
                seed: g.seed,
                table: cmd_sweep(&config.sweep)?,
                summary: None,
            })
        }
        Command::Fit {
            mode,
            v_raw,
            mc_resamples,
        } => {
            let (config, input): (FitConfig, _) = load(config_path)?;
            let base = config_path.and_then(Path::parent).unwrap_or(Path::new("."));
            let overrides = FitOverrides {
                mode: *mode,
                v_raw: *v_raw,
                mc_resamples: *mc_resamples,
            };
            let (table, summary) = cmd_fit(&config, base, overrides, g.seed)?;
            let input = json!({ "config": input, "mode": mode, "v_raw": v_raw, "mc_resamples": mc_resamples });
            Ok(Report {
                command: "fit",
                input,
                seed: g.seed,
                table,
                summary: Some(summary),
            })
        }
        Command::McDephasing => {
            let (config, input): (McDephasingConfig, _) = load(config_path)?;
            let seed = g
                .seed
                .ok_or_else(|| CliError::config("--seed is required for mc-dephasing"))?;
            Ok(Report {
                command: "mc-dephasing",
                input,
                seed: Some(seed),
                table: cmd_mc_dephasing(&config, seed)?,
                summary: None,
            })
        }
    }
}

/// Parses `argv`, runs the command, writes the output and returns the exit
/// code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args = match Args::try_parse_from(argv) {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.global.workers.unwrap_or(0))
        .build();
    let outcome = match pool {
        Ok(pool) => pool.install(|| execute(&args)),
        Err(e) => Err(CliError::config(format!("cannot start workers: {e}"))),
    };
    match outcome.and_then(|report| emit(&report, &args.global)) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}

fn emit(report: &Report, g: &GlobalOpts) -> CliResult<()> {
    if let Some(summary) = &report.summary {
        eprint!("{summary}");
    }
    let text = report.render(g.format);
    match &g.out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::config(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
