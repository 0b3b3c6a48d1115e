//! Experiment configuration, execution, and report emission.

use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::model_io::{load_model, write_atomic};
use limred::algorithms::{heuristic_iter, hmor, itia, limited_bt, pork, ConvergenceControl};
use limred::audit::gramian_conditions;
use limred::gramians::limited_h2_error;
use limred::lti::{make_model, LimitSpec, StateSpaceModel, TransferSampler};
use limred::matfun::matrix_exponential;
use limred::projection::{InterpolationData, ProjectionPair, Side};

/// Reduction routine selected for an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Flitia,
    Tlitia,
    Flhmor,
    Tlhmor,
    Flpork,
    Tlpork,
    Fltsia,
    Tlirka,
    Flbt,
    Tlbt,
}

impl Algorithm {
    /// True for the algorithms defined over a frequency band; the rest need
    /// a time window.
    pub fn needs_frequency_band(self) -> bool {
        matches!(
            self,
            Algorithm::Flitia
                | Algorithm::Flhmor
                | Algorithm::Flpork
                | Algorithm::Fltsia
                | Algorithm::Flbt
        )
    }

    fn token(self) -> &'static str {
        match self {
            Algorithm::Flitia => "flitia",
            Algorithm::Tlitia => "tlitia",
            Algorithm::Flhmor => "flhmor",
            Algorithm::Tlhmor => "tlhmor",
            Algorithm::Flpork => "flpork",
            Algorithm::Tlpork => "tlpork",
            Algorithm::Fltsia => "fltsia",
            Algorithm::Tlirka => "tlirka",
            Algorithm::Flbt => "flbt",
            Algorithm::Tlbt => "tlbt",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

/// Serializable horizon description used in configs and reports.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum LimitConfig {
    #[serde(rename = "freq")]
    Frequency { lo: f64, hi: f64 },
    #[serde(rename = "time")]
    Time { lo: f64, hi: f64 },
}

impl LimitConfig {
    /// Parses the command-line form `freq:<lo>:<hi>` or `time:<lo>:<hi>`.
    pub fn parse(text: &str) -> Result<LimitConfig> {
        let parts: Vec<&str> = text.split(':').collect();
        if parts.len() != 3 {
            return Err(CliError::Invalid(format!(
                "limit must look like freq:<lo>:<hi> or time:<lo>:<hi>, got \"{text}\""
            )));
        }
        let lo: f64 = parts[1]
            .parse()
            .map_err(|_| CliError::Invalid(format!("bad limit edge \"{}\"", parts[1])))?;
        let hi: f64 = parts[2]
            .parse()
            .map_err(|_| CliError::Invalid(format!("bad limit edge \"{}\"", parts[2])))?;
        let config = match parts[0] {
            "freq" => LimitConfig::Frequency { lo, hi },
            "time" => LimitConfig::Time { lo, hi },
            other => {
                return Err(CliError::Invalid(format!(
                    "limit kind must be freq or time, got \"{other}\""
                )))
            }
        };
        config.to_spec()?;
        Ok(config)
    }

    /// Validated core limit.
    pub fn to_spec(self) -> Result<LimitSpec> {
        match self {
            LimitConfig::Frequency { lo, hi } => {
                LimitSpec::frequency_band(lo, hi).map_err(CliError::from)
            }
            LimitConfig::Time { lo, hi } => LimitSpec::time_window(lo, hi).map_err(CliError::from),
        }
    }

    /// True for the frequency-band variant.
    pub fn is_frequency(self) -> bool {
        matches!(self, LimitConfig::Frequency { .. })
    }
}

impl fmt::Display for LimitConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LimitConfig::Frequency { lo, hi } => write!(f, "freq:{lo}:{hi}"),
            LimitConfig::Time { lo, hi } => write!(f, "time:{lo}:{hi}"),
        }
    }
}

/// Which side the pseudo-optimal Krylov reduction preserves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PorkSide {
    #[default]
    Input,
    Output,
}

impl PorkSide {
    fn to_side(self) -> Side {
        match self {
            PorkSide::Input => Side::Input,
            PorkSide::Output => Side::Output,
        }
    }
}

fn default_tolerance() -> f64 {
    1e-6
}

fn default_max_iterations() -> usize {
    200
}

fn default_emit_plots() -> bool {
    true
}

/// Full description of one reduction experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Model file: JSON bundle or manifest of Matrix Market files.
    pub model: PathBuf,
    pub limit: LimitConfig,
    pub algorithm: Algorithm,
    /// Reduced orders, one table row each.
    pub orders: Vec<usize>,
    /// Seeds the default initial reduced models of the iterative runs.
    #[serde(default)]
    pub seed: u64,
    /// Relative shift-change threshold that counts as converged.
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
    pub out_dir: PathBuf,
    /// Optional initial reduced model (JSON bundle); its order must match
    /// the requested order.
    #[serde(default)]
    pub init: Option<PathBuf>,
    #[serde(default)]
    pub pork_side: PorkSide,
    /// Whether report emission also samples response curves per order.
    #[serde(default = "default_emit_plots")]
    pub emit_plots: bool,
}

impl ExperimentConfig {
    /// Checks limit edges, algorithm/limit agreement, and iteration knobs.
    pub fn validate(&self) -> Result<()> {
        self.limit.to_spec()?;
        if self.algorithm.needs_frequency_band() != self.limit.is_frequency() {
            let wanted = if self.algorithm.needs_frequency_band() {
                "a frequency band"
            } else {
                "a time window"
            };
            return Err(CliError::Invalid(format!(
                "algorithm {} needs {wanted}, got {}",
                self.algorithm, self.limit
            )));
        }
        if !self.tolerance.is_finite() || self.tolerance < 0.0 {
            return Err(CliError::Invalid(format!(
                "tolerance must be finite and nonnegative, got {}",
                self.tolerance
            )));
        }
        if self.max_iterations == 0 {
            return Err(CliError::Invalid("max iterations must be positive".into()));
        }
        Ok(())
    }
}

/// Library and driver versions recorded in every report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Versions {
    pub library: String,
    pub driver: String,
}

impl Versions {
    fn current() -> Versions {
        Versions {
            library: limred::VERSION.to_string(),
            driver: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

/// One table row. Residual columns are relative to the model-side norms;
/// `f_deviation` is present only for the projection-producing algorithms.
/// Failed rows carry the failure message and leave the value columns empty.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunRow {
    pub order: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub error_norm: Option<f64>,
    pub converged: Option<bool>,
    pub iterations: Option<usize>,
    pub res_b: Option<f64>,
    pub res_c: Option<f64>,
    pub res_a: Option<f64>,
    pub f_deviation: Option<f64>,
    pub wall_time: Option<f64>,
}

/// Outcome of one experiment: a row per requested order plus metadata. The
/// loaded model and the reduced models are kept in memory for plot emission
/// but are not serialized.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub config: ExperimentConfig,
    pub versions: Versions,
    pub rows: Vec<RunRow>,
    #[serde(skip)]
    pub model: Option<StateSpaceModel>,
    #[serde(skip)]
    pub reduced: Vec<Option<StateSpaceModel>>,
}

/// Runs the configured algorithm, audit, and error norm per requested
/// order. Per-order failures become failed rows; the run continues. The
/// outcome is deterministic for a fixed config and seed.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunReport> {
    config.validate()?;
    let model = load_model(&config.model)?;
    let limit = config.limit.to_spec()?;
    let init = match &config.init {
        Some(path) => Some(load_model(path)?),
        None => None,
    };
    let mut rows = Vec::with_capacity(config.orders.len());
    let mut reduced = Vec::with_capacity(config.orders.len());
    for &order in &config.orders {
        let (row, rom) = run_order(&model, &limit, config, order, init.as_ref());
        rows.push(row);
        reduced.push(rom);
    }
    Ok(RunReport {
        config: config.clone(),
        versions: Versions::current(),
        rows,
        model: Some(model),
        reduced,
    })
}

fn run_order(
    model: &StateSpaceModel,
    limit: &LimitSpec,
    config: &ExperimentConfig,
    order: usize,
    init: Option<&StateSpaceModel>,
) -> (RunRow, Option<StateSpaceModel>) {
    let start = Instant::now();
    let outcome = reduce_once(model, limit, config, order, init).and_then(|reduced| {
        let report = gramian_conditions(model, &reduced.rom, reduced.pair.as_ref(), limit)?;
        let norm = limited_h2_error(model, &reduced.rom, limit)?;
        Ok((reduced, report, norm))
    });
    match outcome {
        Ok((reduced, report, norm)) => {
            let row = RunRow {
                order,
                error: None,
                error_norm: Some(norm),
                converged: Some(reduced.converged),
                iterations: Some(reduced.iterations),
                res_b: Some(report.res_b_relative()),
                res_c: Some(report.res_c_relative()),
                res_a: Some(report.res_a_relative()),
                f_deviation: report.f_deviation,
                wall_time: Some(start.elapsed().as_secs_f64()),
            };
            (row, Some(reduced.rom))
        }
        Err(e) => {
            let row = RunRow {
                order,
                error: Some(e.to_string()),
                error_norm: None,
                converged: None,
                iterations: None,
                res_b: None,
                res_c: None,
                res_a: None,
                f_deviation: None,
                wall_time: Some(start.elapsed().as_secs_f64()),
            };
            (row, None)
        }
    }
}

struct Reduced {
    rom: StateSpaceModel,
    pair: Option<ProjectionPair>,
    converged: bool,
    iterations: usize,
}

fn reduce_once(
    model: &StateSpaceModel,
    limit: &LimitSpec,
    config: &ExperimentConfig,
    order: usize,
    init: Option<&StateSpaceModel>,
) -> limred::Result<Reduced> {
    let ctrl = ConvergenceControl {
        max_iterations: config.max_iterations,
        shift_tolerance: config.tolerance,
        ..ConvergenceControl::default()
    };
    match config.algorithm {
        Algorithm::Flbt | Algorithm::Tlbt => {
            let rom = limited_bt(model, limit, order)?;
            Ok(Reduced {
                rom,
                pair: None,
                converged: true,
                iterations: 1,
            })
        }
        Algorithm::Flpork | Algorithm::Tlpork => {
            let rom0 = initial_rom(model, config, order, init)?;
            let data = InterpolationData::from_rom_mirror(&rom0)?;
            let rom = pork(model, limit, &data, config.pork_side.to_side())?;
            Ok(Reduced {
                rom,
                pair: None,
                converged: true,
                iterations: 1,
            })
        }
        Algorithm::Flitia | Algorithm::Tlitia => {
            let rom0 = initial_rom(model, config, order, init)?;
            let data = InterpolationData::from_rom_mirror(&rom0)?;
            let out = itia(model, limit, order, &data, &ctrl)?;
            Ok(Reduced {
                rom: out.rom,
                pair: Some(out.pair),
                converged: out.converged,
                iterations: out.iterations,
            })
        }
        Algorithm::Flhmor | Algorithm::Tlhmor => {
            let rom0 = initial_rom(model, config, order, init)?;
            let out = hmor(model, limit, order, &rom0, &ctrl)?;
            Ok(Reduced {
                rom: out.rom,
                pair: Some(out.pair),
                converged: out.converged,
                iterations: out.iterations,
            })
        }
        Algorithm::Fltsia | Algorithm::Tlirka => {
            let rom0 = initial_rom(model, config, order, init)?;
            let out = heuristic_iter(model, limit, order, &rom0, &ctrl)?;
            Ok(Reduced {
                rom: out.rom,
                pair: Some(out.pair),
                converged: out.converged,
                iterations: out.iterations,
            })
        }
    }
}

fn initial_rom(
    model: &StateSpaceModel,
    config: &ExperimentConfig,
    order: usize,
    init: Option<&StateSpaceModel>,
) -> limred::Result<StateSpaceModel> {
    if let Some(rom) = init {
        if rom.order() != order {
            return Err(limred::Error::DimensionMismatch(
                "initial reduced model order must match the requested order",
            ));
        }
        if rom.inputs() != model.inputs() || rom.outputs() != model.outputs() {
            return Err(limred::Error::DimensionMismatch(
                "initial reduced model input/output counts must match the model",
            ));
        }
        return Ok(rom.clone());
    }
    default_initial_rom(
        order,
        model.inputs(),
        model.outputs(),
        config.seed.wrapping_add(order as u64),
    )
}

/// Deterministic initial reduced model: a stable diagonal state map with
/// well-separated entries so the mirrored poles are always simple, plus
/// random input/output maps.
fn default_initial_rom(
    order: usize,
    inputs: usize,
    outputs: usize,
    seed: u64,
) -> limred::Result<StateSpaceModel> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut a = DMatrix::zeros(order, order);
    for i in 0..order {
        a[(i, i)] = -(0.5 + i as f64 + rng.random::<f64>() * 0.5);
    }
    let b = DMatrix::from_fn(order, inputs, |_, _| rng.random::<f64>() * 2.0 - 1.0);
    let c = DMatrix::from_fn(outputs, order, |_, _| rng.random::<f64>() * 2.0 - 1.0);
    make_model(a, b, c, true)
}

/// Writes the CSV table, the JSON report, and (when the report still holds
/// the in-memory models and plots are enabled) one response-curve file per
/// successful order. Returns the written paths. All writes are atomic.
pub fn emit_report(report: &RunReport, out_dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir).map_err(|e| CliError::Io {
        path: out_dir.to_path_buf(),
        source: e,
    })?;
    let mut written = Vec::new();

    let csv_path = out_dir.join("report.csv");
    write_atomic(&csv_path, &csv_text(report))?;
    written.push(csv_path);

    let json_path = out_dir.join("report.json");
    let mut json = serde_json::to_string_pretty(report)
        .map_err(|e| CliError::Invalid(format!("report serialization: {e}")))?;
    json.push('\n');
    write_atomic(&json_path, &json)?;
    written.push(json_path);

    if report.config.emit_plots {
        written.extend(plot_files(report, out_dir)?);
    }
    Ok(written)
}

const CSV_HEADER: &str = "order,error_norm,converged,iterations,res_B,res_C,res_A,f_deviation,wall_time";

fn csv_text(report: &RunReport) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for row in &report.rows {
        let cells = [
            row.order.to_string(),
            opt_num(row.error_norm),
            row.converged.map(|b| b.to_string()).unwrap_or_default(),
            row.iterations.map(|i| i.to_string()).unwrap_or_default(),
            opt_num(row.res_b),
            opt_num(row.res_c),
            opt_num(row.res_a),
            opt_num(row.f_deviation),
            opt_num(row.wall_time),
        ];
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

fn opt_num(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn plot_files(report: &RunReport, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let Some(model) = &report.model else {
        return Ok(Vec::new());
    };
    if report.reduced.len() != report.rows.len() {
        return Ok(Vec::new());
    }
    let mut written = Vec::new();
    match report.config.limit {
        LimitConfig::Frequency { lo, hi } => {
            let mut model_sampler: Option<TransferSampler> = None;
            for (row, rom) in report.rows.iter().zip(&report.reduced) {
                let Some(rom) = rom else { continue };
                if model_sampler.is_none() {
                    model_sampler = Some(TransferSampler::new(model)?);
                }
                let text = frequency_plot_text(
                    model_sampler.as_ref().expect("sampler built above"),
                    rom,
                    lo,
                    hi,
                )?;
                let path = out_dir.join(format!("frequency_response_order_{}.csv", row.order));
                write_atomic(&path, &text)?;
                written.push(path);
            }
        }
        LimitConfig::Time { lo, hi } => {
            for (row, rom) in report.rows.iter().zip(&report.reduced) {
                let Some(rom) = rom else { continue };
                let text = time_plot_text(model, rom, lo, hi)?;
                let path = out_dir.join(format!("impulse_response_order_{}.csv", row.order));
                write_atomic(&path, &text)?;
                written.push(path);
            }
        }
    }
    Ok(written)
}

const FREQUENCY_PLOT_POINTS: usize = 200;
const TIME_PLOT_POINTS: usize = 501;

/// Log-spaced sample frequencies whose first and last entries equal the
/// band edges exactly; a zero lower edge contributes one sample at zero
/// followed by a log grid spanning four decades below the upper edge.
fn frequency_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if lo > 0.0 {
        logspace(lo, hi, count)
    } else {
        let mut grid = Vec::with_capacity(count);
        grid.push(0.0);
        grid.extend(logspace(hi * 1e-4, hi, count - 1));
        grid
    }
}

fn logspace(a: f64, b: f64, count: usize) -> Vec<f64> {
    let (la, lb) = (a.ln(), b.ln());
    (0..count)
        .map(|i| {
            if i == 0 {
                a
            } else if i == count - 1 {
                b
            } else {
                (la + (lb - la) * i as f64 / (count - 1) as f64).exp()
            }
        })
        .collect()
}

fn frequency_plot_text(
    model_sampler: &TransferSampler,
    rom: &StateSpaceModel,
    lo: f64,
    hi: f64,
) -> Result<String> {
    let rom_sampler = TransferSampler::new(rom)?;
    let mut out = String::from("omega,sigma_max\n");
    for nu in frequency_grid(lo, hi, FREQUENCY_PLOT_POINTS) {
        let s = Complex64::new(0.0, nu);
        let gap = model_sampler.eval(s)? - rom_sampler.eval(s)?;
        let sigma = gap.svd(false, false).singular_values.max();
        out.push_str(&format!("{nu},{sigma}\n"));
    }
    Ok(out)
}

fn time_plot_text(
    model: &StateSpaceModel,
    rom: &StateSpaceModel,
    lo: f64,
    hi: f64,
) -> Result<String> {
    let p = model.outputs();
    let m = model.inputs();
    let dt = (hi - lo) / (TIME_PLOT_POINTS - 1) as f64;
    let mut model_walk = ImpulseWalk::new(model, lo, dt)?;
    let mut rom_walk = ImpulseWalk::new(rom, lo, dt)?;
    let mut out = String::from("t");
    for i in 0..p {
        for j in 0..m {
            out.push_str(&format!(",h_{}_{}", i + 1, j + 1));
        }
    }
    out.push('\n');
    for k in 0..TIME_PLOT_POINTS {
        let t = if k == TIME_PLOT_POINTS - 1 {
            hi
        } else {
            lo + dt * k as f64
        };
        let h = model_walk.output() - rom_walk.output();
        out.push_str(&t.to_string());
        for i in 0..p {
            for j in 0..m {
                out.push_str(&format!(",{}", h[(i, j)]));
            }
        }
        out.push('\n');
        if k + 1 < TIME_PLOT_POINTS {
            model_walk.advance();
            rom_walk.advance();
        }
    }
    Ok(out)
}

/// Steps the impulse-response state e^{At}B across uniform sample times by
/// one matrix exponential per model.
struct ImpulseWalk {
    c: DMatrix<f64>,
    step: DMatrix<f64>,
    state: DMatrix<f64>,
}

impl ImpulseWalk {
    fn new(model: &StateSpaceModel, start: f64, dt: f64) -> Result<ImpulseWalk> {
        let state = if start == 0.0 {
            model.b().clone()
        } else {
            matrix_exponential(model.a(), start).map_err(CliError::from)? * model.b()
        };
        Ok(ImpulseWalk {
            c: model.c().clone(),
            step: matrix_exponential(model.a(), dt).map_err(CliError::from)?,
            state,
        })
    }

    fn output(&self) -> DMatrix<f64> {
        &self.c * &self.state
    }

    fn advance(&mut self) {
        self.state = &self.step * &self.state;
    }
}
