//! Finite-difference residuals of the evolution identities.
//!
//! Time derivatives use fourth-order differences at the record cadence:
//! centered five-point stencils in the interior and one-sided five-point
//! stencils at the first and last two samples.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::DiagnosticsRecord;
use crate::deformation::AdmissibleClass;
use crate::error::{Error, Result};
use crate::fft::Fft3;
use crate::field::{Field, VectorSpectrum};

const FORWARD_0: [f64; 5] = [-25.0, 48.0, -36.0, 16.0, -3.0];
const FORWARD_1: [f64; 5] = [-3.0, -10.0, 18.0, -6.0, 1.0];
const CENTERED: [f64; 5] = [1.0, -8.0, 0.0, 8.0, -1.0];
const BACKWARD_1: [f64; 5] = [-1.0, 6.0, -18.0, 10.0, 3.0];
const BACKWARD_0: [f64; 5] = [3.0, -16.0, 36.0, -48.0, 25.0];

/// `(first index, weights)` of the fourth-order first-derivative stencil at
/// sample `i` of `len`; weights are to be divided by `12 h`.
pub fn fd4_weights(len: usize, i: usize) -> Result<(usize, [f64; 5])> {
    if len < 5 {
        return Err(Error::Contract(format!(
            "fourth-order differences need at least 5 samples, got {len}"
        )));
    }
    if i >= len {
        return Err(Error::Contract(format!("sample {i} out of range 0..{len}")));
    }
    Ok(match i {
        0 => (0, FORWARD_0),
        1 => (0, FORWARD_1),
        _ if i == len - 1 => (len - 5, BACKWARD_0),
        _ if i == len - 2 => (len - 5, BACKWARD_1),
        _ => (i - 2, CENTERED),
    })
}

/// Fourth-order derivative of uniformly spaced samples.
pub fn fd4_derivative(values: &[f64], h: f64) -> Result<Vec<f64>> {
    (0..values.len())
        .map(|i| {
            let (start, w) = fd4_weights(values.len(), i)?;
            let acc: f64 = w
                .iter()
                .enumerate()
                .map(|(j, c)| c * values[start + j])
                .sum();
            Ok(acc / (12.0 * h))
        })
        .collect()
}

/// Spacing of `times`, or a contract error if it is not uniform.
fn uniform_spacing(times: &[f64]) -> Result<f64> {
    if times.len() < 2 {
        return Err(Error::Contract("need at least two samples".into()));
    }
    let h = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
    if !(h > 0.0) {
        return Err(Error::Contract("sample times must increase".into()));
    }
    for (i, w) in times.windows(2).enumerate() {
        let step = w[1] - w[0];
        if (step - h).abs() > 1e-6 * h {
            return Err(Error::Contract(format!(
                "non-uniform cadence: step {i} is {step}, mean spacing {h}"
            )));
        }
    }
    Ok(h)
}

/// Residual of `d/dt F + G = 0` along a sampled series.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualSeries {
    pub times: Vec<f64>,
    /// Finite-difference `dF/dt`.
    pub derivative: Vec<f64>,
    /// `dF/dt + G`.
    pub residual: Vec<f64>,
    /// `|residual| / max(|dF/dt|, |G|, floor)`.
    pub normalized: Vec<f64>,
    /// The floor used in the normalization.
    pub floor: f64,
}

impl ResidualSeries {
    fn build(times: &[f64], f: &[f64], g: &[f64], floor: Option<f64>) -> Result<Self> {
        let h = uniform_spacing(times)?;
        let derivative = fd4_derivative(f, h)?;
        let residual: Vec<f64> = derivative.iter().zip(g).map(|(d, g)| d + g).collect();
        let local: Vec<f64> = derivative
            .iter()
            .zip(g)
            .map(|(d, g)| d.abs().max(g.abs()))
            .collect();
        let floor = floor.unwrap_or_else(|| local.iter().copied().fold(0.0, f64::max));
        let normalized = residual
            .iter()
            .zip(&local)
            .map(|(r, l)| {
                if *r == 0.0 {
                    0.0
                } else {
                    r.abs() / l.max(floor)
                }
            })
            .collect();
        Ok(Self {
            times: times.to_vec(),
            derivative,
            residual,
            normalized,
            floor,
        })
    }

    pub fn max_abs(&self) -> f64 {
        self.residual.iter().fold(0.0, |m, r| m.max(r.abs()))
    }

    pub fn max_normalized(&self) -> f64 {
        self.normalized.iter().fold(0.0, |m: f64, r| m.max(*r))
    }
}

/// `D[Q] + 4P` over a record series.
///
/// With `floor = None` every sample is normalized by the series scale
/// `max_t max(|D[Q]|, 4|P|)`, so instants where both sides vanish do not
/// inflate the relative error.
pub fn moment_identity_residual(
    records: &[DiagnosticsRecord],
    floor: Option<f64>,
) -> Result<ResidualSeries> {
    let times: Vec<f64> = records.iter().map(|r| r.t).collect();
    let q: Vec<f64> = records.iter().map(|r| r.q).collect();
    let p4: Vec<f64> = records.iter().map(|r| 4.0 * r.p).collect();
    ResidualSeries::build(&times, &q, &p4, floor)
}

/// `D[M] ∓ 2K` for `M = ∫λ²(ε²+ε+1)` and `K = ∫λ³(ε²+ε)`, with the upper
/// sign on `A₊`. Normalized as in [`moment_identity_residual`].
pub fn epsilon_identity_residual(
    times: &[f64],
    moment: &[f64],
    cubic: &[f64],
    class: AdmissibleClass,
    floor: Option<f64>,
) -> Result<ResidualSeries> {
    let sign = match class {
        AdmissibleClass::APlus => -2.0,
        AdmissibleClass::AMinus => 2.0,
        AdmissibleClass::Neither => {
            return Err(Error::Contract(
                "the epsilon form needs an admissible class".into(),
            ))
        }
    };
    if moment.len() != times.len() || cubic.len() != times.len() {
        return Err(Error::Contract("series lengths differ".into()));
    }
    let g: Vec<f64> = cubic.iter().map(|k| sign * k).collect();
    ResidualSeries::build(times, moment, &g, floor)
}

/// L² norms at one sample of `∂ω/∂t + (v·∇)ω − (ω·∇)v − ν∆ω`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VorticityResidual {
    pub t: f64,
    pub residual: f64,
    /// `‖∂ω/∂t‖`, for scale.
    pub time_derivative: f64,
    /// `‖(v·∇)ω − (ω·∇)v‖`, for scale.
    pub transport: f64,
}

fn l2_norm(v: &VectorSpectrum) -> f64 {
    (v.grid().volume() * v.power()).sqrt()
}

/// Vorticity-equation residual at sample `index` of a uniformly spaced
/// sequence of velocity states.
///
/// `∂ω/∂t` comes from fourth-order differences of the states. The transport
/// terms are products on the grid; with `dealias` they are truncated like the
/// solver's nonlinear term, which makes the residual vanish to rounding for a
/// dealiased run up to time-discretization error.
pub fn vorticity_residual(
    fft: &Fft3,
    times: &[f64],
    states: &[VectorSpectrum],
    index: usize,
    nu: f64,
    dealias: bool,
) -> Result<VorticityResidual> {
    if states.len() != times.len() {
        return Err(Error::Contract("one time per state required".into()));
    }
    let grid = fft.grid();
    if states.iter().any(|s| s.grid() != grid) {
        return Err(Error::Contract("states on different grids".into()));
    }
    let h = uniform_spacing(times)?;
    let (start, w) = fd4_weights(states.len(), index)?;

    let mut dv = VectorSpectrum::zeros(grid);
    for (j, c) in w.iter().enumerate() {
        dv = dv.axpy(c / (12.0 * h), &states[start + j]);
    }
    let domega_dt = dv.curl();

    let v_hat = &states[index];
    let omega_hat = v_hat.curl();
    let v = fft.inverse_vector(v_hat);
    let omega = fft.inverse_vector(&omega_hat);
    // ∂_j of each component, physical.
    let grad =
        |s: &VectorSpectrum| [0, 1, 2].map(|i| [0, 1, 2].map(|j| fft.inverse(&s[i].derivative(j))));
    let dv_phys = grad(v_hat);
    let dw_phys = grad(&omega_hat);
    let transport = [0, 1, 2].map(|i| {
        let vals = (0..grid.len())
            .into_par_iter()
            .map(|p| {
                let mut acc = 0.0;
                for j in 0..3 {
                    acc += v[j][p] * dw_phys[i][j][p] - omega[j][p] * dv_phys[i][j][p];
                }
                acc
            })
            .collect();
        Field::from_vec(grid, vals).expect("length")
    });
    let transport = crate::field::VectorField::new(transport)?;
    let mut transport_hat = fft.forward_vector(&transport);
    if dealias {
        transport_hat.dealias_in_place();
    }
    let mut res = domega_dt.axpy(1.0, &transport_hat);
    if nu > 0.0 {
        res = res.axpy(nu, &crate::solver::viscous_term(&omega_hat, -1.0));
    }
    Ok(VorticityResidual {
        t: times[index],
        residual: l2_norm(&res),
        time_derivative: l2_norm(&domega_dt),
        transport: l2_norm(&transport_hat),
    })
}
