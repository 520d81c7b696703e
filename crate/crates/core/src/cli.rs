//! Batch front end: JSON run configuration, the `run`, `diagnose` and
//! `classify` commands, and their on-disk outputs.
//!
//! Commands return an exit code instead of terminating the process so they
//! can be driven from tests.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::deformation::{Classification, SpectraField};
use crate::diagnostics::{
    containment_verdict, epsilon_decay_check, epsilon_identity_residual, moment_identity_residual,
    planar_stretching_verdict, vorticity_residual, BoundVerdict, DiagnosticsRecord, Evaluator,
    Monitor, MonitorOptions, StaticIdentities,
};
use crate::error::{Error, Result};
use crate::fft::Fft3;
use crate::field::VectorSpectrum;
use crate::grid::Grid;
use crate::init::{classify_initial, InitSpec};
use crate::snapshot::{write_snapshot, Snapshot, SnapshotKind};
use crate::solver::{Observer, Solver, SolverConfig, SolverState};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NUMERIC_ABORT: i32 = 2;
pub const EXIT_IO: i32 = 3;

/// Relative slack allowed in the envelope and planar-stretching verdicts.
pub const BOUND_SLACK: f64 = 1e-6;

/// Environment variable capping the worker pool size.
pub const THREADS_ENV: &str = "EULER_SPECTRA_THREADS";

/// Grid extrema of each sign polished off-grid in `run` and `diagnose`.
pub const DEFAULT_EXTREMA_CANDIDATES: usize = 4;

fn default_output_every() -> u64 {
    1
}

fn default_extrema_candidates() -> usize {
    DEFAULT_EXTREMA_CANDIDATES
}

fn default_oversampling() -> usize {
    1
}

/// A complete run description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub init: InitSpec,
    pub solver: SolverConfig,
    /// Grid points per direction; a power of two in `[8, 128]`.
    pub n: usize,
    pub output_dir: PathBuf,
    /// Steps between diagnostic records.
    #[serde(default = "default_output_every")]
    pub output_every: u64,
    /// Steps between velocity snapshots; 0 writes none.
    #[serde(default)]
    pub snapshot_every: u64,
    /// Classification tolerance on `λ₂`; absent means `1e-10 · rms(λ₁)`.
    #[serde(default)]
    pub class_tolerance: Option<f64>,
    /// Refinement of the grid on which `λ₂` extrema are sampled.
    #[serde(default = "default_oversampling")]
    pub extrema_oversampling: usize,
    /// Grid extrema polished off-grid; 0 keeps the sampled values.
    #[serde(default = "default_extrema_candidates")]
    pub extrema_candidates: usize,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.n.is_power_of_two() && (8..=128).contains(&self.n)) {
            return Err(Error::Config(format!(
                "n = {} must be a power of two in [8, 128]",
                self.n
            )));
        }
        if self.output_every < 1 {
            return Err(Error::Config("output_every must be at least 1".into()));
        }
        if let Some(tol) = self.class_tolerance {
            if !(tol.is_finite() && tol >= 0.0) {
                return Err(Error::Config(format!(
                    "class_tolerance must be a non-negative number, got {tol}"
                )));
            }
        }
        if !(self.extrema_oversampling >= 1 && self.extrema_oversampling.is_power_of_two()) {
            return Err(Error::Config(format!(
                "extrema_oversampling = {} must be a power of two",
                self.extrema_oversampling
            )));
        }
        self.solver.validate()?;
        self.init.validate(&Grid::new(self.n)?)
    }
}

/// Parses and validates a JSON run configuration. Unknown keys are errors,
/// reported with their JSON path.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let config: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        Error::ConfigParse {
            path,
            message: e.into_inner().to_string(),
        }
    })?;
    config.validate()?;
    Ok(config)
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text)
}

#[derive(Debug, Parser)]
#[command(
    name = "euler-spectra",
    version,
    about = "Pseudospectral Euler runs with deformation-spectrum diagnostics"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate a configured run and write timeseries.csv, summary.json and
    /// snapshots.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `output_dir` from the config.
        #[arg(long)]
        output_dir: Option<PathBuf>,
        /// Only log errors.
        #[arg(long)]
        quiet: bool,
    },
    /// Evaluate diagnostics on stored snapshots; five or more uniformly
    /// spaced velocity snapshots also give time-derivative residuals.
    Diagnose {
        #[arg(required = true)]
        snapshots: Vec<PathBuf>,
        /// Viscosity used in the vorticity-equation residual.
        #[arg(long, default_value_t = 0.0)]
        nu: f64,
    },
    /// Classify the initial field of a config, or a snapshot (velocity or
    /// eigenvalue file).
    Classify {
        #[arg(long, conflicts_with = "snapshot")]
        config: Option<PathBuf>,
        #[arg(required_unless_present = "config")]
        snapshot: Option<PathBuf>,
    },
}

/// Exit code for a failed operation.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::NumericAbort { .. } => EXIT_NUMERIC_ABORT,
        Error::Io { .. } => EXIT_IO,
        _ => EXIT_USAGE,
    }
}

/// Runs a parsed command, writing its report to `out`.
pub fn dispatch(command: Command, out: &mut dyn Write) -> i32 {
    let result = match command {
        Command::Run {
            config,
            output_dir,
            quiet: _,
        } => load_config(&config).and_then(|mut c| {
            if let Some(dir) = output_dir {
                c.output_dir = dir;
            }
            cmd_run(&c).map(|s| s.exit_code())
        }),
        Command::Diagnose { snapshots, nu } => cmd_diagnose(&snapshots, nu).and_then(|report| {
            print_json(out, &report)?;
            Ok(EXIT_OK)
        }),
        Command::Classify { config, snapshot } => {
            let report = match (config, snapshot) {
                (Some(c), _) => load_config(&c).and_then(|c| classify_config(&c)),
                (None, Some(s)) => classify_snapshot(&s),
                (None, None) => Err(Error::Config(
                    "classify needs --config or a snapshot".into(),
                )),
            };
            report.and_then(|r| {
                print_json(out, &r)?;
                Ok(EXIT_OK)
            })
        }
    };
    result.unwrap_or_else(|e| {
        log::error!("{e}");
        exit_code(&e)
    })
}

fn print_json<T: Serialize>(out: &mut dyn Write, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("report serializes");
    writeln!(out, "{text}").map_err(|e| Error::io("<stdout>", e))
}

/// Writes physical-space velocity snapshots at a fixed step cadence.
struct SnapshotWriter {
    fft: Fft3,
    dir: PathBuf,
    every: u64,
    written: Vec<PathBuf>,
}

impl Observer for SnapshotWriter {
    fn cadence(&self) -> u64 {
        self.every
    }

    fn observe(&mut self, state: &SolverState) -> Result<()> {
        let path = self
            .dir
            .join(format!("snapshot_{:08}.bin", state.step_index));
        write_snapshot(&path, &self.fft.inverse_vector(&state.v), state.t)?;
        self.written.push(path);
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Completed,
    NumericAbort,
    Failed,
}

/// `ε`-decay outcome without the per-sample series.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpsilonBoundSummary {
    #[serde(flatten)]
    pub verdict: BoundVerdict,
    pub rhs: Option<f64>,
    /// Largest `(t − t₀) · inf ε²` reached.
    pub max_lhs: Option<f64>,
}

/// Worst residuals of every identity checked during the run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityResiduals {
    pub static_identities: StaticIdentities,
    /// Records at which some static identity exceeded its tolerance.
    pub static_failures: usize,
    /// `max |D[Q] + 4P|` and its normalized form; absent with fewer than
    /// five uniformly spaced records.
    pub moment_identity_abs: Option<f64>,
    pub moment_identity_normalized: Option<f64>,
    /// ε-form of the same identity while the class condition holds.
    pub epsilon_identity_normalized: Option<f64>,
    pub max_trace_defect: f64,
    pub max_tail_enstrophy_fraction: f64,
}

/// Contents of summary.json.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub status: RunStatus,
    pub error: Option<String>,
    /// Step at which a numeric abort occurred.
    pub abort_step: Option<u64>,
    pub n: usize,
    pub t_start: f64,
    /// Time of the last state that passed every check.
    pub t_end: f64,
    pub steps: u64,
    pub records: usize,
    pub class: Classification,
    /// First record at which the initial class condition failed.
    pub zero_touching_time: Option<f64>,
    #[serde(flatten)]
    pub series: SeriesSummary,
    pub snapshots: Vec<PathBuf>,
}

/// Quantities reduced from the record series.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesSummary {
    /// `max_t |E(t) − E₀| / E₀`.
    pub energy_drift: f64,
    /// `max_t |H(t) − H₀|`.
    pub helicity_drift: f64,
    pub max_vorticity: f64,
    /// Trapezoid `∫ max|ω| dt`.
    pub vorticity_time_integral: f64,
    pub envelope_containment: BoundVerdict,
    pub planar_stretching_bound: BoundVerdict,
    pub epsilon_decay_bound: EpsilonBoundSummary,
    pub identity_residuals: IdentityResiduals,
}

impl RunSummary {
    pub fn exit_code(&self) -> i32 {
        match self.status {
            RunStatus::Completed => EXIT_OK,
            RunStatus::NumericAbort => EXIT_NUMERIC_ABORT,
            RunStatus::Failed => EXIT_IO,
        }
    }
}

fn verdict_or_inapplicable(v: Result<BoundVerdict>) -> BoundVerdict {
    v.unwrap_or_else(|e| BoundVerdict::Inapplicable {
        reason: e.to_string(),
    })
}

fn summarize_records(
    monitor: &Monitor,
    class: &Classification,
    volume: f64,
) -> Result<SeriesSummary> {
    let recs = monitor.records();
    let first = recs
        .first()
        .ok_or_else(|| Error::Contract("run produced no records".into()))?;
    let (e0, h0, z0) = (first.energy, first.helicity, first.enstrophy);
    let energy_drift = recs.iter().fold(0.0, |m: f64, r| {
        let d = (r.energy - e0).abs();
        m.max(if e0 > 0.0 { d / e0 } else { d })
    });
    let helicity_drift = recs
        .iter()
        .fold(0.0, |m: f64, r| m.max((r.helicity - h0).abs()));
    let max_vorticity = recs.iter().fold(0.0, |m: f64, r| m.max(r.bkm_sup_vort));
    let vorticity_time_integral = recs
        .windows(2)
        .map(|w| 0.5 * (w[1].t - w[0].t) * (w[0].bkm_sup_vort + w[1].bkm_sup_vort))
        .sum();

    let containment = verdict_or_inapplicable(containment_verdict(recs, BOUND_SLACK));
    let planar = verdict_or_inapplicable(planar_stretching_verdict(recs, BOUND_SLACK));
    let eps = epsilon_decay_check(recs, class, e0, h0, z0, volume)?;
    let epsilon = EpsilonBoundSummary {
        max_lhs: eps.samples.iter().map(|s| s.lhs).reduce(f64::max),
        rhs: eps.rhs,
        verdict: eps.verdict,
    };

    let moment = moment_identity_residual(recs, None).ok();
    let eps_series = monitor.epsilon_integrals();
    let epsilon_identity = if class.is_admissible() && eps_series.len() >= 5 {
        let times: Vec<f64> = eps_series.iter().map(|e| e.0).collect();
        let m: Vec<f64> = eps_series.iter().map(|e| e.1).collect();
        let k: Vec<f64> = eps_series.iter().map(|e| e.2).collect();
        epsilon_identity_residual(&times, &m, &k, class.class, None)
            .ok()
            .map(|r| r.max_normalized())
    } else {
        None
    };
    let identities = IdentityResiduals {
        static_identities: *monitor.worst_identities(),
        static_failures: monitor.identity_failures().len(),
        moment_identity_abs: moment.as_ref().map(|r| r.max_abs()),
        moment_identity_normalized: moment.as_ref().map(|r| r.max_normalized()),
        epsilon_identity_normalized: epsilon_identity,
        max_trace_defect: monitor.max_trace_defect(),
        max_tail_enstrophy_fraction: monitor.max_tail_fraction(),
    };
    Ok(SeriesSummary {
        energy_drift,
        helicity_drift,
        max_vorticity,
        vorticity_time_integral,
        envelope_containment: containment,
        planar_stretching_bound: planar,
        epsilon_decay_bound: epsilon,
        identity_residuals: identities,
    })
}

/// Executes a run and writes its outputs under `config.output_dir`.
///
/// Configuration and I/O problems before the first step are returned as
/// errors; once integration starts, failures are recorded in the summary
/// (which is still written) and reflected in its exit code.
pub fn cmd_run(config: &RunConfig) -> Result<RunSummary> {
    config.validate()?;
    let dir = &config.output_dir;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let archived = serde_json::to_string_pretty(config).expect("config serializes");
    let config_path = dir.join("config.json");
    fs::write(&config_path, archived).map_err(|e| Error::io(&config_path, e))?;

    let grid = Grid::new(config.n)?;
    let fft = Fft3::new(grid);
    let (v0, t0) = config.init.generate(&fft)?;
    let class = classify_initial(&fft, &v0, config.class_tolerance)?;
    log::info!(
        "n = {}, class {} (λ₂ in [{:.6e}, {:.6e}], tolerance {:.3e})",
        config.n,
        class.class,
        class.min_lambda2,
        class.max_lambda2,
        class.tolerance
    );

    let mut monitor = Monitor::new(
        fft.clone(),
        MonitorOptions {
            cadence: config.output_every,
            class: Some(class),
            epsilon_floor: None,
            keep_states: false,
            extrema_oversampling: config.extrema_oversampling,
            extrema_candidates: config.extrema_candidates,
        },
    )?
    .with_csv(&dir.join("timeseries.csv"))?;
    let mut snapshots = SnapshotWriter {
        fft: fft.clone(),
        dir: dir.clone(),
        every: config.snapshot_every,
        written: vec![],
    };

    let solver = Solver::new(fft, config.solver.clone())?;
    let outcome = {
        let mut observers: Vec<&mut dyn Observer> = vec![&mut monitor];
        if config.snapshot_every > 0 {
            observers.push(&mut snapshots);
        }
        solver.run(SolverState::new(v0, t0), &mut observers)
    };
    let (status, error, abort_step, t_end, steps) = match outcome {
        Ok(state) => (RunStatus::Completed, None, None, state.t, state.step_index),
        Err(failure) => {
            log::error!("{failure}");
            let (status, step) = match &failure.error {
                Error::NumericAbort { step, .. } => (RunStatus::NumericAbort, Some(*step)),
                _ => (RunStatus::Failed, None),
            };
            (
                status,
                Some(failure.error.to_string()),
                step,
                failure.last_good.t,
                failure.last_good.step_index,
            )
        }
    };

    let series = summarize_records(&monitor, &class, grid.volume())?;
    let summary = RunSummary {
        status,
        error,
        abort_step,
        n: config.n,
        t_start: t0,
        t_end,
        steps,
        records: monitor.records().len(),
        class,
        zero_touching_time: monitor.zero_touching(),
        series,
        snapshots: snapshots.written,
    };
    let summary_path = dir.join("summary.json");
    let text = serde_json::to_string_pretty(&summary).expect("summary serializes");
    fs::write(&summary_path, text + "\n").map_err(|e| Error::io(&summary_path, e))?;
    log::info!(
        "finished at t = {} after {} steps; energy drift {:.3e}",
        summary.t_end,
        summary.steps,
        summary.series.energy_drift
    );
    Ok(summary)
}

/// One evaluated snapshot.
#[derive(Clone, Debug, Serialize)]
pub struct SnapshotReport {
    pub path: PathBuf,
    pub kind: &'static str,
    pub record: DiagnosticsRecord,
    /// Absent for eigenvalue files, which carry no velocity.
    pub identities: Option<StaticIdentities>,
    pub identities_pass: Option<bool>,
}

#[derive(Clone, Debug, Serialize)]
pub struct TimeResiduals {
    pub moment_identity_abs: f64,
    pub moment_identity_normalized: f64,
    /// `max ‖residual‖ / max(‖∂ω/∂t‖, ‖transport‖)` over the samples.
    pub vorticity_relative: Option<f64>,
    pub vorticity_abs: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct DiagnoseReport {
    pub class: Classification,
    pub snapshots: Vec<SnapshotReport>,
    /// Present with at least five uniformly spaced snapshots.
    pub time_residuals: Option<TimeResiduals>,
}

fn kind_name(kind: SnapshotKind) -> &'static str {
    match kind {
        SnapshotKind::Velocity => "velocity",
        SnapshotKind::Spectra => "spectra",
    }
}

/// Evaluates each snapshot; all must share one grid.
pub fn cmd_diagnose(paths: &[PathBuf], nu: f64) -> Result<DiagnoseReport> {
    if paths.is_empty() {
        return Err(Error::Contract(
            "diagnose needs at least one snapshot".into(),
        ));
    }
    let snaps: Vec<Snapshot> = paths
        .iter()
        .map(|p| Snapshot::read(p))
        .collect::<Result<_>>()?;
    let grid = snaps[0].grid;
    if let Some(bad) = snaps.iter().position(|s| s.grid != grid) {
        return Err(Error::Contract(format!(
            "{} has n = {} but {} has n = {}",
            paths[bad].display(),
            snaps[bad].grid.n(),
            paths[0].display(),
            grid.n()
        )));
    }
    let fft = Fft3::new(grid);
    let evaluator = Evaluator::new(fft.clone()).with_extrema_refinement(DEFAULT_EXTREMA_CANDIDATES);

    let mut class = None;
    let mut reports = Vec::with_capacity(snaps.len());
    let mut states = vec![];
    for (path, snap) in paths.iter().zip(snaps) {
        let kind = snap.kind;
        let (record, identities) = match kind {
            SnapshotKind::Velocity => {
                let (v, t) = snap.into_velocity()?;
                let v_hat = fft.forward_vector(&v);
                let c = *class.get_or_insert(classify_initial(&fft, &v_hat, None)?);
                let eval = evaluator.evaluate(&v_hat, t, Some(&c))?;
                states.push(v_hat);
                (eval.record, Some(eval.identities))
            }
            SnapshotKind::Spectra => {
                let (s, t) = snap.into_spectra()?;
                let c = *class.get_or_insert(s.classify(s.default_tolerance()));
                (
                    DiagnosticsRecord::from_spectra(t, &s, Some(&c), None)?,
                    None,
                )
            }
        };
        reports.push(SnapshotReport {
            path: path.clone(),
            kind: kind_name(kind),
            record,
            identities_pass: identities.map(|i| i.all_pass()),
            identities,
        });
    }

    let records: Vec<DiagnosticsRecord> = reports.iter().map(|r| r.record).collect();
    let time_residuals = if records.len() >= 5 {
        match moment_identity_residual(&records, None) {
            Ok(moment) => {
                let vorticity = if states.len() == records.len() {
                    let times: Vec<f64> = records.iter().map(|r| r.t).collect();
                    let mut rel: f64 = 0.0;
                    let mut abs: f64 = 0.0;
                    for i in 0..states.len() {
                        let r = vorticity_residual(&fft, &times, &states, i, nu, true)?;
                        abs = abs.max(r.residual);
                        let scale = r.time_derivative.max(r.transport);
                        rel = rel.max(if scale > 0.0 { r.residual / scale } else { 0.0 });
                    }
                    Some((rel, abs))
                } else {
                    None
                };
                Some(TimeResiduals {
                    moment_identity_abs: moment.max_abs(),
                    moment_identity_normalized: moment.max_normalized(),
                    vorticity_relative: vorticity.map(|v| v.0),
                    vorticity_abs: vorticity.map(|v| v.1),
                })
            }
            Err(e) => {
                log::warn!("no time-derivative residuals: {e}");
                None
            }
        }
    } else {
        None
    };
    Ok(DiagnoseReport {
        class: class.expect("at least one snapshot"),
        snapshots: reports,
        time_residuals,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ClassifyReport {
    pub n: usize,
    pub t: f64,
    #[serde(flatten)]
    pub classification: Classification,
}

pub fn classify_config(config: &RunConfig) -> Result<ClassifyReport> {
    let fft = Fft3::new(Grid::new(config.n)?);
    let (v, t) = config.init.generate(&fft)?;
    Ok(ClassifyReport {
        n: config.n,
        t,
        classification: classify_initial(&fft, &v, config.class_tolerance)?,
    })
}

/// Classifies a velocity snapshot (through `v → S → Λ`) or an eigenvalue
/// file directly, with the default tolerance.
pub fn classify_snapshot(path: &Path) -> Result<ClassifyReport> {
    let snap = Snapshot::read(path)?;
    let n = snap.grid.n();
    let (spectra, t) = match snap.kind {
        SnapshotKind::Velocity => {
            let (v, t) = snap.into_velocity()?;
            let fft = Fft3::new(v.grid());
            let v_hat: VectorSpectrum = fft.forward_vector(&v);
            (SpectraField::from_velocity(&fft, &v_hat)?, t)
        }
        SnapshotKind::Spectra => snap.into_spectra()?,
    };
    Ok(ClassifyReport {
        n,
        t,
        classification: spectra.classify(spectra.default_tolerance()),
    })
}

/// Reads the thread cap from the environment; `None` when unset.
pub fn threads_from_env() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(e) => Err(Error::Config(format!("{THREADS_ENV}: {e}"))),
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(k) if k >= 1 => Ok(Some(k)),
            _ => Err(Error::Config(format!(
                "{THREADS_ENV} must be a positive integer, got {s:?}"
            ))),
        },
    }
}
