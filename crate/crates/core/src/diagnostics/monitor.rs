//! Solver observer that evaluates and records diagnostics at a fixed cadence.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use super::{
    CsvLedger, DiagnosticsRecord, EnvelopeRow, EnvelopeTracker, Evaluator, StaticIdentities,
    TAIL_ENSTROPHY_WARN,
};
use crate::deformation::Classification;
use crate::error::{Error, Result};
use crate::fft::Fft3;
use crate::field::VectorSpectrum;
use crate::solver::{Observer, SolverState};

#[derive(Clone, Debug, Default)]
pub struct MonitorOptions {
    /// Steps between records; zero is treated as one.
    pub cadence: u64,
    /// Initial classification; ε-quantities are tracked while it holds.
    pub class: Option<Classification>,
    pub epsilon_floor: Option<f64>,
    /// Keep every observed velocity (needed for vorticity residuals).
    pub keep_states: bool,
    /// Refinement factor of the grid on which `λ₂` extrema are sampled;
    /// 0 and 1 both mean the simulation grid.
    pub extrema_oversampling: usize,
    /// Grid extrema of each sign polished off-grid; 0 disables.
    pub extrema_candidates: usize,
}

/// Collects one [`DiagnosticsRecord`] per observed state, with envelopes and
/// identity checks, optionally streaming them to CSV.
pub struct Monitor {
    evaluator: Evaluator,
    options: MonitorOptions,
    tracker: EnvelopeTracker,
    records: Vec<DiagnosticsRecord>,
    envelopes: Vec<EnvelopeRow>,
    identities: StaticIdentities,
    identity_failures: Vec<(f64, Vec<&'static str>)>,
    epsilon_integrals: Vec<(f64, f64, f64)>,
    max_trace_defect: f64,
    max_tail_fraction: f64,
    states: Vec<VectorSpectrum>,
    ledger: Option<(PathBuf, CsvLedger<Box<dyn Write>>)>,
    tail_warned: bool,
}

impl std::fmt::Debug for Monitor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Monitor")
            .field("records", &self.records.len())
            .field("options", &self.options)
            .finish()
    }
}

impl Monitor {
    pub fn new(fft: Fft3, options: MonitorOptions) -> Result<Self> {
        let evaluator = Evaluator::new(fft)
            .with_extrema_oversampling(options.extrema_oversampling.max(1))?
            .with_extrema_refinement(options.extrema_candidates)
            .with_epsilon_floor(options.epsilon_floor);
        Ok(Self {
            evaluator,
            tracker: EnvelopeTracker::new(options.class),
            options,
            records: vec![],
            envelopes: vec![],
            identities: StaticIdentities::default(),
            identity_failures: vec![],
            epsilon_integrals: vec![],
            max_trace_defect: 0.0,
            max_tail_fraction: 0.0,
            states: vec![],
            ledger: None,
            tail_warned: false,
        })
    }

    /// Streams records to a CSV file at `path`, created now.
    pub fn with_csv(mut self, path: &Path) -> Result<Self> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let writer: Box<dyn Write> = Box::new(BufWriter::new(file));
        let ledger = CsvLedger::new(writer).map_err(|e| Error::io(path, e))?;
        self.ledger = Some((path.to_path_buf(), ledger));
        Ok(self)
    }

    /// Evaluates one state and appends it to every series.
    pub fn record(&mut self, v: &VectorSpectrum, t: f64) -> Result<&DiagnosticsRecord> {
        let class = self
            .options
            .class
            .filter(|c| c.is_admissible() && self.tracker.zero_touching().is_none());
        let eval = self.evaluator.evaluate(v, t, class.as_ref())?;
        let failures = eval.identities.failures();
        if !failures.is_empty() {
            log::warn!("identity checks failed at t = {t}: {}", failures.join(", "));
            self.identity_failures.push((t, failures));
        }
        self.identities = self.identities.max(&eval.identities);
        self.max_trace_defect = self.max_trace_defect.max(eval.trace_defect);
        self.max_tail_fraction = self.max_tail_fraction.max(eval.tail_enstrophy_fraction);
        if eval.tail_enstrophy_fraction > TAIL_ENSTROPHY_WARN && !self.tail_warned {
            log::warn!(
                "{:.2}% of enstrophy sits in the outer third of the resolved band at t = {t}",
                100.0 * eval.tail_enstrophy_fraction
            );
            self.tail_warned = true;
        }
        if let Some((m, k)) = eval.epsilon_integrals {
            self.epsilon_integrals.push((t, m, k));
        }
        let row = self.tracker.push(&eval.record);
        if let Some((path, ledger)) = &mut self.ledger {
            ledger
                .push(&eval.record, &row)
                .map_err(|e| Error::io(path.as_path(), e))?;
        }
        if self.options.keep_states {
            self.states.push(v.clone());
        }
        self.records.push(eval.record);
        self.envelopes.push(row);
        Ok(self.records.last().unwrap())
    }

    pub fn fft(&self) -> &Fft3 {
        self.evaluator.fft()
    }

    pub fn class(&self) -> Option<&Classification> {
        self.options.class.as_ref()
    }

    pub fn records(&self) -> &[DiagnosticsRecord] {
        &self.records
    }

    pub fn envelopes(&self) -> &[EnvelopeRow] {
        &self.envelopes
    }

    /// Componentwise worst static identity error over all records.
    pub fn worst_identities(&self) -> &StaticIdentities {
        &self.identities
    }

    /// Times and names of failed static identity checks.
    pub fn identity_failures(&self) -> &[(f64, Vec<&'static str>)] {
        &self.identity_failures
    }

    /// `(t, ∫λ²(ε²+ε+1), ∫λ³(ε²+ε))` while the class condition holds.
    pub fn epsilon_integrals(&self) -> &[(f64, f64, f64)] {
        &self.epsilon_integrals
    }

    pub fn zero_touching(&self) -> Option<f64> {
        self.tracker.zero_touching()
    }

    pub fn max_trace_defect(&self) -> f64 {
        self.max_trace_defect
    }

    pub fn max_tail_fraction(&self) -> f64 {
        self.max_tail_fraction
    }

    /// Observed velocities (empty unless `keep_states` was set).
    pub fn states(&self) -> &[VectorSpectrum] {
        &self.states
    }
}

impl Observer for Monitor {
    fn cadence(&self) -> u64 {
        self.options.cadence.max(1)
    }

    fn observe(&mut self, state: &SolverState) -> Result<()> {
        self.record(&state.v, state.t).map(|_| ())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::init::abc_flow;
    use crate::solver::{Solver, SolverConfig};

    #[test]
    fn steady_run_records() {
        let fft = Fft3::new(Grid::new(16).unwrap());
        let v = abc_flow(&fft, 1.0, 1.0, 1.0);
        let solver = Solver::new(fft.clone(), SolverConfig::new(0.01, 0.1)).unwrap();
        let mut mon = Monitor::new(
            fft,
            MonitorOptions {
                cadence: 2,
                ..Default::default()
            },
        )
        .unwrap();
        solver
            .run(SolverState::new(v, 0.0), &mut [&mut mon])
            .unwrap();
        assert_eq!(mon.records().len(), 6);
        assert!(mon.identity_failures().is_empty());
        let e0 = mon.records()[0].energy;
        assert!(mon
            .records()
            .iter()
            .all(|r| (r.energy - e0).abs() < 1e-10 * e0));
        let env = mon.envelopes();
        assert!(env.iter().all(|e| e.lower <= e.upper));
    }

    #[test]
    fn csv_is_written_incrementally() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("series.csv");
        let fft = Fft3::new(Grid::new(8).unwrap());
        let v = abc_flow(&fft, 1.0, 0.5, 0.0);
        let mut mon = Monitor::new(fft, MonitorOptions::default())
            .unwrap()
            .with_csv(&path)
            .unwrap();
        mon.record(&v, 0.0).unwrap();
        mon.record(&v, 0.1).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 3);
    }
}
