//! Pseudospectral time integration of the incompressible Euler equations
//! (Navier–Stokes when `nu > 0`).
//!
//! The momentum equation is advanced in rotational form,
//! `∂v̂/∂t = P[(v × ω)^] − ν|k|² v̂`, where `P` is the Leray projection. The
//! gradient part of the nonlinearity (pressure plus kinetic energy) is removed
//! by `P` and never formed.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::Fft3;
use crate::field::{Spectrum, VectorField, VectorSpectrum};

fn default_dt() -> f64 {
    1e-3
}

fn default_dealias() -> bool {
    true
}

fn default_cfl_warn() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default = "default_dt")]
    pub dt: f64,
    pub t_final: f64,
    /// Kinematic viscosity; zero gives the Euler equations.
    #[serde(default)]
    pub nu: f64,
    #[serde(default = "default_dealias")]
    pub dealias: bool,
    /// Courant number `max|v| dt / dx` above which a warning is logged.
    #[serde(default = "default_cfl_warn")]
    pub cfl_warn: f64,
}

impl SolverConfig {
    pub fn new(dt: f64, t_final: f64) -> Self {
        Self {
            dt,
            t_final,
            nu: 0.0,
            dealias: true,
            cfl_warn: default_cfl_warn(),
        }
    }

    pub fn with_viscosity(mut self, nu: f64) -> Self {
        self.nu = nu;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::Config(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        if !(self.t_final.is_finite() && self.t_final >= 0.0) {
            return Err(Error::Config(format!(
                "t_final must be non-negative, got {}",
                self.t_final
            )));
        }
        if !(self.nu.is_finite() && self.nu >= 0.0) {
            return Err(Error::Config(format!(
                "nu must be non-negative, got {}",
                self.nu
            )));
        }
        if !(self.cfl_warn.is_finite() && self.cfl_warn > 0.0) {
            return Err(Error::Config(format!(
                "cfl_warn must be positive, got {}",
                self.cfl_warn
            )));
        }
        Ok(())
    }

    /// Number of steps to reach `t_final`; the last one is shortened if
    /// `t_final` is not a multiple of `dt`.
    pub fn step_count(&self) -> u64 {
        let ratio = self.t_final / self.dt;
        let rounded = ratio.round();
        if (ratio - rounded).abs() <= 1e-9 * ratio.max(1.0) {
            rounded as u64
        } else {
            ratio.ceil() as u64
        }
    }
}

/// Time, solenoidal spectral velocity and step counter.
#[derive(Clone, Debug)]
pub struct SolverState {
    pub t: f64,
    pub v: VectorSpectrum,
    pub step_index: u64,
}

impl SolverState {
    pub fn new(v: VectorSpectrum, t: f64) -> Self {
        Self {
            t,
            v,
            step_index: 0,
        }
    }
}

/// Callback run between steps on a consistent state.
pub trait Observer {
    /// Steps between calls; the initial state is always observed.
    fn cadence(&self) -> u64 {
        1
    }

    fn observe(&mut self, state: &SolverState) -> Result<()>;
}

/// A failed run: the error plus the last state that passed every check.
#[derive(Debug)]
pub struct RunFailure {
    pub error: Error,
    pub last_good: Box<SolverState>,
}

impl std::fmt::Display for RunFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} (last good state: step {}, t = {})",
            self.error, self.last_good.step_index, self.last_good.t
        )
    }
}

impl std::error::Error for RunFailure {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.error)
    }
}

#[derive(Clone, Debug)]
pub struct Solver {
    fft: Fft3,
    config: SolverConfig,
}

impl Solver {
    pub fn new(fft: Fft3, config: SolverConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self { fft, config })
    }

    pub fn fft(&self) -> &Fft3 {
        &self.fft
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    /// `P[(v × ω)^] − ν|k|² v̂`, dealiased when configured.
    pub fn rhs(&self, v: &VectorSpectrum) -> Result<VectorSpectrum> {
        self.rhs_with_speed(v).map(|(r, _)| r)
    }

    fn rhs_with_speed(&self, v_hat: &VectorSpectrum) -> Result<(VectorSpectrum, f64)> {
        let omega_hat = v_hat.curl();
        let (vc, wc) = (v_hat.components(), omega_hat.components());
        let mut fields = self
            .fft
            .inverse_many(&[&vc[0], &vc[1], &vc[2], &wc[0], &wc[1], &wc[2]])
            .into_iter();
        let mut next3 = || VectorField::new([0, 1, 2].map(|_| fields.next().expect("six fields")));
        let v = next3()?;
        let omega = next3()?;
        let lamb = v.cross(&omega);
        for c in lamb.components() {
            c.check_finite("nonlinear term")?;
        }
        let mut out = self.fft.forward_vector(&lamb);
        if self.config.dealias {
            out.dealias_in_place();
        }
        out.leray_project_in_place();
        if self.config.nu > 0.0 {
            let g = v_hat.grid();
            let nu = self.config.nu;
            for c in 0..3 {
                let src = v_hat[c].coeffs();
                out[c]
                    .coeffs_mut()
                    .par_iter_mut()
                    .enumerate()
                    .for_each(|(idx, r)| {
                        let k = g.wavevector(idx);
                        *r -= src[idx] * (nu * (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]));
                    });
            }
        }
        Ok((out, v.max_norm()))
    }

    /// One classical RK4 step of size `dt`, re-projected after combination.
    pub fn step_rk4(&self, state: &SolverState, dt: f64) -> Result<SolverState> {
        self.step_inner(state, dt).map(|(s, _)| s)
    }

    fn step_inner(&self, state: &SolverState, dt: f64) -> Result<(SolverState, f64)> {
        let abort = |e: Error| match e {
            Error::NonFinite { what, index } => Error::NumericAbort {
                step: state.step_index + 1,
                t: state.t,
                reason: format!("non-finite {what} at grid index {index}"),
            },
            other => other,
        };
        let v = &state.v;
        let (k1, speed) = self.rhs_with_speed(v).map_err(abort)?;
        let k2 = self.rhs(&v.axpy(0.5 * dt, &k1)).map_err(abort)?;
        let k3 = self.rhs(&v.axpy(0.5 * dt, &k2)).map_err(abort)?;
        let k4 = self.rhs(&v.axpy(dt, &k3)).map_err(abort)?;

        let mut next = VectorSpectrum::zeros(v.grid());
        for c in 0..3 {
            let (a, b1, b2, b3, b4) = (
                v[c].coeffs(),
                k1[c].coeffs(),
                k2[c].coeffs(),
                k3[c].coeffs(),
                k4[c].coeffs(),
            );
            next[c]
                .coeffs_mut()
                .par_iter_mut()
                .enumerate()
                .for_each(|(i, out)| {
                    *out = a[i] + (b1[i] + (b2[i] + b3[i]) * 2.0 + b4[i]) * (dt / 6.0);
                });
        }
        next.leray_project_in_place();
        next.check_finite("velocity").map_err(abort)?;
        Ok((
            SolverState {
                t: state.t + dt,
                v: next,
                step_index: state.step_index + 1,
            },
            speed,
        ))
    }

    /// Integrates from `initial` to `initial.t + t_final`, calling observers at
    /// their cadence (the initial state included).
    pub fn run(
        &self,
        initial: SolverState,
        observers: &mut [&mut dyn Observer],
    ) -> std::result::Result<SolverState, RunFailure> {
        let fail = |error, state: &SolverState| RunFailure {
            error,
            last_good: Box::new(state.clone()),
        };
        let t0 = initial.t;
        let steps = self.config.step_count();
        let dx = initial.v.grid().dx();
        let mut warned = false;

        let mut state = initial;
        if let Err(e) = state.v.check_finite("initial velocity") {
            return Err(fail(e, &state));
        }
        notify(observers, &state).map_err(|e| fail(e, &state))?;
        for s in 0..steps {
            // Time from the step count so output cadence stays uniform.
            let t_next = if s + 1 == steps {
                t0 + self.config.t_final
            } else {
                t0 + (s + 1) as f64 * self.config.dt
            };
            let dt = t_next - state.t;
            let (mut next, speed) = self.step_inner(&state, dt).map_err(|e| fail(e, &state))?;
            let courant = speed * self.config.dt / dx;
            if courant > self.config.cfl_warn && !warned {
                log::warn!(
                    "Courant number {courant:.3} exceeds {} at step {} (t = {})",
                    self.config.cfl_warn,
                    state.step_index,
                    state.t
                );
                warned = true;
            }
            next.t = t_next;
            state = next;
            notify(observers, &state).map_err(|e| fail(e, &state))?;
        }
        Ok(state)
    }
}

fn notify(observers: &mut [&mut dyn Observer], state: &SolverState) -> Result<()> {
    for obs in observers.iter_mut() {
        let cadence = obs.cadence().max(1);
        if state.step_index.is_multiple_of(cadence) {
            obs.observe(state)?;
        }
    }
    Ok(())
}

/// `−ν|k|² v̂` alone, for isolating the viscous part of [`Solver::rhs`].
pub fn viscous_term(v: &VectorSpectrum, nu: f64) -> VectorSpectrum {
    let g = v.grid();
    let components = [0, 1, 2].map(|c| {
        let coeffs = v[c]
            .coeffs()
            .par_iter()
            .enumerate()
            .map(|(idx, x)| {
                let k = g.wavevector(idx);
                x * (-nu * (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]))
            })
            .collect();
        Spectrum::from_vec(g, coeffs).expect("length")
    });
    VectorSpectrum::new(components).expect("shared grid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::init::{abc_flow, taylor_green};

    fn solver(n: usize, cfg: SolverConfig) -> Solver {
        Solver::new(Fft3::new(Grid::new(n).unwrap()), cfg).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(SolverConfig::new(0.0, 1.0).validate().is_err());
        assert!(SolverConfig::new(1e-3, -1.0).validate().is_err());
        assert!(SolverConfig::new(1e-3, 1.0)
            .with_viscosity(-1.0)
            .validate()
            .is_err());
        assert_eq!(SolverConfig::new(1e-3, 1.0).step_count(), 1000);
        assert_eq!(SolverConfig::new(0.3, 1.0).step_count(), 4);
        assert_eq!(SolverConfig::new(0.1, 0.0).step_count(), 0);
    }

    #[test]
    fn shear_flow_is_steady() {
        let s = solver(16, SolverConfig::new(1e-3, 1.0));
        let g = s.fft().grid();
        let v = s
            .fft()
            .forward_vector(&VectorField::from_fn(g, |[_, y, _]| [y.sin(), 0.0, 0.0]));
        assert!(s.rhs(&v).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn beltrami_flow_is_steady() {
        let s = solver(16, SolverConfig::new(1e-3, 1.0));
        let v = abc_flow(s.fft(), 1.0, 1.0, 1.0);
        assert!(s.rhs(&v).unwrap().max_abs() < 1e-11);
    }

    #[test]
    fn viscous_term_on_single_mode() {
        let nu = 0.05;
        let s = solver(16, SolverConfig::new(1e-3, 1.0).with_viscosity(nu));
        // (sin z, cos z, 0) is a single |k| = 1 Beltrami mode.
        let v = abc_flow(s.fft(), 1.0, 0.0, 0.0);
        let r = s.rhs(&v).unwrap();
        assert!(r.max_abs_diff(&v.scale(-nu)) < 1e-15);
        assert!(r.max_abs_diff(&viscous_term(&v, nu)) < 1e-15);
    }

    #[test]
    fn zero_final_time_takes_no_steps() {
        let s = solver(8, SolverConfig::new(1e-3, 0.0));
        let v = taylor_green(s.fft());
        let out = s.run(SolverState::new(v.clone(), 0.0), &mut []).unwrap();
        assert_eq!(out.step_index, 0);
        assert_eq!(out.v, v);
    }

    struct Counter(u64, Vec<u64>);
    impl Observer for Counter {
        fn cadence(&self) -> u64 {
            self.0
        }
        fn observe(&mut self, state: &SolverState) -> Result<()> {
            self.1.push(state.step_index);
            Ok(())
        }
    }

    #[test]
    fn observers_follow_cadence() {
        let s = solver(8, SolverConfig::new(0.01, 0.1));
        let mut c = Counter(3, vec![]);
        let out = s
            .run(SolverState::new(taylor_green(s.fft()), 0.0), &mut [&mut c])
            .unwrap();
        assert_eq!(out.step_index, 10);
        assert!((out.t - 0.1).abs() < 1e-15);
        assert_eq!(c.1, vec![0, 3, 6, 9]);
    }

    struct Failing;
    impl Observer for Failing {
        fn observe(&mut self, state: &SolverState) -> Result<()> {
            if state.step_index == 2 {
                Err(Error::Contract("observer refused".into()))
            } else {
                Ok(())
            }
        }
    }

    #[test]
    fn observer_failure_aborts_with_state() {
        let s = solver(8, SolverConfig::new(0.01, 0.1));
        let err = s
            .run(
                SolverState::new(taylor_green(s.fft()), 0.0),
                &mut [&mut Failing],
            )
            .unwrap_err();
        assert_eq!(err.last_good.step_index, 2);
        assert!(matches!(err.error, Error::Contract(_)));
    }

    #[test]
    fn nan_aborts_with_step_context() {
        let s = solver(8, SolverConfig::new(0.01, 0.1));
        let mut v = taylor_green(s.fft());
        v[0].coeffs_mut()[1] = num_complex::Complex64::new(f64::NAN, 0.0);
        let err = s.step_rk4(&SolverState::new(v, 0.0), 0.01).unwrap_err();
        assert!(
            matches!(err, Error::NumericAbort { step: 1, .. }),
            "{err:?}"
        );
    }
}
