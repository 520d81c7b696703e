//! Integrals, identities and a priori bounds evaluated along a run.
//!
//! [`evaluate`] turns one velocity state into a [`DiagnosticsRecord`] plus
//! the static identity checks. Time-dependent quantities (envelopes,
//! finite-difference residuals) live in the submodules and consume record
//! series.

mod envelope;
mod ledger;
mod monitor;
mod residual;

pub use envelope::{
    class_envelopes, containment_verdict, epsilon_decay_check, epsilon_decay_rhs,
    planar_stretching_integral, planar_stretching_verdict, stretching_envelopes, BoundVerdict,
    ClassEnvelopes, EnvelopeRow, EnvelopeSeries, EnvelopeTracker, EpsilonBound, EpsilonBoundSample,
};
pub use ledger::{CsvLedger, CSV_COLUMNS, ENVELOPE_COLUMNS};
pub use monitor::{Monitor, MonitorOptions};
pub use residual::{
    epsilon_identity_residual, fd4_derivative, fd4_weights, moment_identity_residual,
    vorticity_residual, ResidualSeries,
};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::deformation::{
    AdmissibleClass, Classification, SpectraField, SymTensorField, VelocityGradient,
};
use crate::error::{Error, Result};
use crate::fft::Fft3;
use crate::field::{Field, VectorField, VectorSpectrum};
use crate::grid::Grid;
use crate::pointwise::{refined_lambda2_extrema, GradientInterpolant};
use crate::reduce;

/// Relative tolerance for `Z = 2Q`.
pub const ENSTROPHY_MOMENT_TOL: f64 = 1e-8;
/// Relative tolerance for `W = −(4/3) C3`.
pub const STRETCHING_CUBIC_TOL: f64 = 1e-7;
/// Relative tolerance for `C3 = 3P`.
pub const CUBIC_PRODUCT_TOL: f64 = 1e-8;
/// Pointwise tolerance for `|∇v|² = S:S + ½|ω|²`, relative to `max |∇v|²`.
pub const POINTWISE_GRADIENT_TOL: f64 = 1e-9;
/// Relative tolerance for `∫|∇v|² = ∫|ω|²`.
pub const GRADIENT_VORTICITY_TOL: f64 = 1e-10;
/// `max |tr S| / max |S_ij|` above which the velocity is not solenoidal enough.
pub const TRACE_DEFECT_WARN: f64 = 1e-8;
/// Fraction of enstrophy in the outer third of the retained band above which
/// the field is flagged as under-resolved.
pub const TAIL_ENSTROPHY_WARN: f64 = 1e-2;
/// Modes below this fraction of the largest coefficient are left out of the
/// off-grid interpolant; their total effect on the gradient is far below the
/// search resolution.
const INTERPOLANT_CUTOFF: f64 = 1e-13;

/// One row of the time series.
///
/// Undefined entries are NaN (`inf_eps` outside the admissible classes, and
/// velocity-derived integrals for records built from eigenvalues alone).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    /// `½∫|v|²`
    pub energy: f64,
    /// `∫v·ω`
    pub helicity: f64,
    /// `∫|ω|²`
    pub enstrophy: f64,
    /// `∫(λ₁² + λ₂² + λ₃²)`
    pub q: f64,
    /// `∫λ₁λ₂λ₃`
    pub p: f64,
    /// `∫S_jk ω_j ω_k`
    pub w: f64,
    /// `∫tr S³`
    pub c3: f64,
    pub sup_l2p: f64,
    pub inf_l2p: f64,
    pub sup_l2m_abs: f64,
    pub inf_l2m_abs: f64,
    pub min_l2: f64,
    pub max_l2: f64,
    pub inf_eps: f64,
    /// `max |ω|` on the grid.
    pub bkm_sup_vort: f64,
}

impl DiagnosticsRecord {
    /// A record from eigenvalue fields alone. `Z`, `W` and `C3` follow from
    /// `Q` and `P` through the identities; velocity-only integrals are NaN.
    ///
    /// `class` selects whether `inf_eps` is computed.
    pub fn from_spectra(
        t: f64,
        spectra: &SpectraField,
        class: Option<&Classification>,
        epsilon_floor: Option<f64>,
    ) -> Result<Self> {
        let (q, p) = spectra_integrals(spectra);
        let mut rec = Self::with_lambda2(t, spectra.lambda2_extrema());
        rec.q = q;
        rec.p = p;
        rec.enstrophy = 2.0 * q;
        rec.c3 = 3.0 * p;
        rec.w = -4.0 * p;
        rec.inf_eps = inf_epsilon(spectra, class, epsilon_floor)?;
        Ok(rec)
    }

    fn with_lambda2(t: f64, (min_l2, max_l2): (f64, f64)) -> Self {
        Self {
            t,
            energy: f64::NAN,
            helicity: f64::NAN,
            enstrophy: f64::NAN,
            q: f64::NAN,
            p: f64::NAN,
            w: f64::NAN,
            c3: f64::NAN,
            sup_l2p: max_l2.max(0.0),
            inf_l2p: min_l2.max(0.0),
            sup_l2m_abs: (-min_l2).max(0.0),
            inf_l2m_abs: (-max_l2).max(0.0),
            min_l2,
            max_l2,
            inf_eps: f64::NAN,
            bkm_sup_vort: f64::NAN,
        }
    }

    /// `‖ω‖_{L²} = √Z`.
    pub fn vorticity_norm(&self) -> f64 {
        self.enstrophy.sqrt()
    }
}

/// Relative errors of the identities that hold at every instant.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StaticIdentities {
    /// `Z = 2Q`
    pub enstrophy_moment: f64,
    /// `W = −(4/3) C3`
    pub stretching_cubic: f64,
    /// `C3 = 3P`
    pub cubic_product: f64,
    /// `|∇v|² = S:S + ½|ω|²` at every grid point.
    pub pointwise_gradient: f64,
    /// `tr S³ = 3 λ₁λ₂λ₃` at every grid point.
    pub pointwise_cubic: f64,
    /// `∫|∇v|² = ∫|ω|²`
    pub gradient_vorticity: f64,
}

impl StaticIdentities {
    /// Names of the checks that exceed their tolerance.
    pub fn failures(&self) -> Vec<&'static str> {
        let checks = [
            (
                "enstrophy_moment",
                self.enstrophy_moment,
                ENSTROPHY_MOMENT_TOL,
            ),
            (
                "stretching_cubic",
                self.stretching_cubic,
                STRETCHING_CUBIC_TOL,
            ),
            ("cubic_product", self.cubic_product, CUBIC_PRODUCT_TOL),
            (
                "pointwise_gradient",
                self.pointwise_gradient,
                POINTWISE_GRADIENT_TOL,
            ),
            ("pointwise_cubic", self.pointwise_cubic, CUBIC_PRODUCT_TOL),
            (
                "gradient_vorticity",
                self.gradient_vorticity,
                GRADIENT_VORTICITY_TOL,
            ),
        ];
        checks
            .iter()
            .filter(|(_, err, tol)| !(err <= tol))
            .map(|(name, _, _)| *name)
            .collect()
    }

    pub fn all_pass(&self) -> bool {
        self.failures().is_empty()
    }

    /// Componentwise maximum.
    pub fn max(&self, other: &Self) -> Self {
        Self {
            enstrophy_moment: self.enstrophy_moment.max(other.enstrophy_moment),
            stretching_cubic: self.stretching_cubic.max(other.stretching_cubic),
            cubic_product: self.cubic_product.max(other.cubic_product),
            pointwise_gradient: self.pointwise_gradient.max(other.pointwise_gradient),
            pointwise_cubic: self.pointwise_cubic.max(other.pointwise_cubic),
            gradient_vorticity: self.gradient_vorticity.max(other.gradient_vorticity),
        }
    }
}

/// Everything computed from one state.
#[derive(Clone, Debug)]
pub struct Evaluation {
    pub record: DiagnosticsRecord,
    pub identities: StaticIdentities,
    pub trace_defect: f64,
    /// Share of `Σ|k|²|v̂|²` carried by modes with `|k|` above two thirds of
    /// the dealiasing cutoff.
    pub tail_enstrophy_fraction: f64,
    /// `(∫λ²(ε²+ε+1), ∫λ³(ε²+ε))` on admissible states.
    pub epsilon_integrals: Option<(f64, f64)>,
    pub spectra: SpectraField,
}

/// `½∫|v|²`.
pub fn energy(v: &VectorField) -> f64 {
    0.5 * v.norm_sqr().integrate()
}

/// `∫v·ω`.
pub fn helicity(v: &VectorField, omega: &VectorField) -> f64 {
    v.dot(omega).integrate()
}

/// `∫|ω|²`.
pub fn enstrophy(omega: &VectorField) -> f64 {
    omega.norm_sqr().integrate()
}

/// `(Q, P) = (∫Σλᵢ², ∫λ₁λ₂λ₃)`.
pub fn spectra_integrals(spectra: &SpectraField) -> (f64, f64) {
    let g = spectra.grid();
    let [l1, l2, l3] = [0, 1, 2].map(|c| spectra.lambda(c));
    let q = reduce::pairwise_sum_by(g.len(), |p| l1[p] * l1[p] + l2[p] * l2[p] + l3[p] * l3[p]);
    let prod = reduce::pairwise_sum_by(g.len(), |p| l1[p] * l2[p] * l3[p]);
    (q * g.cell_volume(), prod * g.cell_volume())
}

/// `∫S_jk ω_j ω_k`.
pub fn stretching_integral(s: &SymTensorField, omega: &VectorField) -> f64 {
    s.stretching(omega).integrate()
}

/// `(∫λ²(ε²+ε+1), ∫λ³(ε²+ε))` with `λ = λ₁, ε = λ₂/λ₁` on `A₊` and
/// `λ = −λ₃, ε = −λ₂/λ` on `A₋`.
///
/// Written in terms of the eigenvalues these are `Q/2` and `∓P`; they are
/// evaluated in the ε form so the rewrite itself is checked.
pub fn epsilon_integrals(spectra: &SpectraField, class: AdmissibleClass) -> Result<(f64, f64)> {
    let g = spectra.grid();
    let (big, small): (&Field, &Field) = match class {
        AdmissibleClass::APlus => (spectra.lambda(0), spectra.lambda(1)),
        AdmissibleClass::AMinus => (spectra.lambda(2), spectra.lambda(1)),
        AdmissibleClass::Neither => {
            return Err(Error::Contract(
                "epsilon integrals need an admissible class".into(),
            ))
        }
    };
    let parts = |p: usize| {
        let lam = big[p].abs();
        if lam == 0.0 {
            return (0.0, 0.0);
        }
        let eps = small[p].abs() / lam;
        (
            lam * lam * (eps * eps + eps + 1.0),
            lam * lam * lam * (eps * eps + eps),
        )
    };
    let m = reduce::pairwise_sum_by(g.len(), |p| parts(p).0);
    let k = reduce::pairwise_sum_by(g.len(), |p| parts(p).1);
    Ok((m * g.cell_volume(), k * g.cell_volume()))
}

fn inf_epsilon(
    spectra: &SpectraField,
    class: Option<&Classification>,
    floor: Option<f64>,
) -> Result<f64> {
    match class {
        Some(c) if c.is_admissible() => {
            let floor = floor.unwrap_or_else(|| spectra.default_epsilon_floor());
            Ok(spectra.epsilon_ratio(c, floor)?.min.unwrap_or(f64::NAN))
        }
        _ => Ok(f64::NAN),
    }
}

/// `|a − b| / max(|a|, |b|, floor)`, zero when `a == b`.
pub fn relative_gap(a: f64, b: f64, floor: f64) -> f64 {
    let diff = (a - b).abs();
    if diff == 0.0 {
        0.0
    } else {
        diff / a.abs().max(b.abs()).max(floor)
    }
}

/// Evaluates every per-state diagnostic.
///
/// `class` is the classification that governs ε (pass `None` outside the
/// admissible classes or after the first zero touching time).
pub fn evaluate(
    fft: &Fft3,
    v_hat: &VectorSpectrum,
    t: f64,
    class: Option<&Classification>,
    epsilon_floor: Option<f64>,
) -> Result<Evaluation> {
    Evaluator::new(fft.clone())
        .with_epsilon_floor(epsilon_floor)
        .evaluate(v_hat, t, class)
}

/// Per-state evaluation with fixed settings.
///
/// Integrals always use the simulation grid, where they are exact for
/// dealiased fields. The `λ₂` extrema and `inf ε` can instead be sampled on
/// a grid refined by an oversampling factor, after spectral interpolation,
/// and the `λ₂` extrema can be polished off the grid entirely (see
/// [`crate::pointwise`]). Grid values fall short of the continuum sup/inf
/// because the extrema sit on eigenvalue crossings.
#[derive(Clone, Debug)]
pub struct Evaluator {
    fft: Fft3,
    fine: Option<Fft3>,
    epsilon_floor: Option<f64>,
    refine_candidates: usize,
}

impl Evaluator {
    pub fn new(fft: Fft3) -> Self {
        Self {
            fft,
            fine: None,
            epsilon_floor: None,
            refine_candidates: 0,
        }
    }

    /// Samples extrema on an `n·factor` grid; `factor` must be a power of two
    /// (1 keeps the simulation grid).
    pub fn with_extrema_oversampling(mut self, factor: usize) -> Result<Self> {
        if !factor.is_power_of_two() {
            return Err(Error::Config(format!(
                "extrema oversampling {factor} must be a power of two"
            )));
        }
        let g = self.fft.grid();
        self.fine = if factor == 1 {
            None
        } else {
            Some(Fft3::new(Grid::with_box_length(
                g.n() * factor,
                g.box_length(),
            )?))
        };
        Ok(self)
    }

    /// Polishes the `λ₂` extrema off the grid by compass search on the
    /// trigonometric interpolant, seeded from the best `candidates` grid
    /// extrema of each sign; 0 keeps the sampled values.
    pub fn with_extrema_refinement(mut self, candidates: usize) -> Self {
        self.refine_candidates = candidates;
        self
    }

    pub fn with_epsilon_floor(mut self, floor: Option<f64>) -> Self {
        self.epsilon_floor = floor;
        self
    }

    pub fn fft(&self) -> &Fft3 {
        &self.fft
    }

    /// Grid on which extrema are sampled.
    pub fn extrema_grid(&self) -> Grid {
        self.fine.as_ref().unwrap_or(&self.fft).grid()
    }

    pub fn evaluate(
        &self,
        v_hat: &VectorSpectrum,
        t: f64,
        class: Option<&Classification>,
    ) -> Result<Evaluation> {
        let fft = &self.fft;
        let grid = fft.grid();
        let v = fft.inverse_vector(v_hat);
        let omega = fft.inverse_vector(&v_hat.curl());
        let gradient = VelocityGradient::from_velocity(fft, v_hat);
        let s = gradient.deformation();

        let trace_defect = s.trace_defect();
        if trace_defect > TRACE_DEFECT_WARN {
            log::warn!("deformation tensor trace defect {trace_defect:.3e} at t = {t}");
        }
        let spectra = s.eigenvalues()?;
        let fine_spectra = match &self.fine {
            Some(fine) => Some(SpectraField::from_velocity(
                fine,
                &v_hat.resample(fine.grid()),
            )?),
            None => None,
        };
        let sampled = fine_spectra.as_ref().unwrap_or(&spectra);

        let (q, p) = spectra_integrals(&spectra);
        let z = enstrophy(&omega);
        let w = stretching_integral(&s, &omega);
        let cubic = s.cubic_trace();
        let c3 = cubic.integrate();

        let grad_sq = gradient.norm_sqr();
        let s_sq = s.norm_sqr();
        let omega_sq = omega.norm_sqr();
        let n = grid.len();

        // The cubic integrals vanish for symmetric flows; below a millionth of
        // their natural magnitude ∫|S|³ the gap is measured against that floor.
        let cubic_scale =
            reduce::pairwise_sum_by(n, |i| s_sq[i] * s_sq[i].sqrt()) * grid.cell_volume();
        let floor3 = 1e-6 * cubic_scale;
        let grad_scale = grad_sq.max_abs();
        let pointwise_gradient = if grad_scale == 0.0 {
            0.0
        } else {
            reduce::max_by(n, |i| (grad_sq[i] - s_sq[i] - 0.5 * omega_sq[i]).abs()) / grad_scale
        };
        let cube_scale = reduce::max_by(n, |i| s_sq[i] * s_sq[i].sqrt());
        let pointwise_cubic = if cube_scale == 0.0 {
            0.0
        } else {
            reduce::max_by(n, |i| {
                let l = spectra.at(i);
                (cubic[i] - 3.0 * l[0] * l[1] * l[2]).abs()
            }) / cube_scale
        };
        let identities = StaticIdentities {
            enstrophy_moment: relative_gap(z, 2.0 * q, 0.0),
            stretching_cubic: relative_gap(w, -4.0 / 3.0 * c3, floor3),
            cubic_product: relative_gap(c3, 3.0 * p, floor3),
            pointwise_gradient,
            pointwise_cubic,
            gradient_vorticity: relative_gap(grad_sq.integrate(), z, 0.0),
        };

        let lambda2_extrema = if self.refine_candidates > 0 {
            let interp = GradientInterpolant::new(v_hat, INTERPOLANT_CUTOFF);
            refined_lambda2_extrema(&interp, sampled.lambda(1), self.refine_candidates)
        } else {
            sampled.lambda2_extrema()
        };
        let mut record = DiagnosticsRecord::with_lambda2(t, lambda2_extrema);
        record.energy = energy(&v);
        record.helicity = helicity(&v, &omega);
        record.enstrophy = z;
        record.q = q;
        record.p = p;
        record.w = w;
        record.c3 = c3;
        record.inf_eps = inf_epsilon(sampled, class, self.epsilon_floor)?;
        record.bkm_sup_vort = omega.max_norm();

        let epsilon_integrals = match class {
            Some(c) if c.is_admissible() => Some(epsilon_integrals(&spectra, c.class)?),
            _ => None,
        };

        Ok(Evaluation {
            record,
            identities,
            trace_defect,
            tail_enstrophy_fraction: tail_enstrophy_fraction(v_hat),
            epsilon_integrals,
            spectra,
        })
    }
}

/// Share of `Σ|k|²|v̂|²` held by modes with `|k| > (2/3)·cutoff`.
pub fn tail_enstrophy_fraction(v_hat: &VectorSpectrum) -> f64 {
    let g = v_hat.grid();
    let threshold =
        2.0 / 3.0 * g.dealias_cutoff() as f64 * (2.0 * std::f64::consts::PI / g.box_length());
    let weight = |idx: usize, tail: bool| {
        let k = g.wavevector(idx);
        let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
        if tail && k2.sqrt() <= threshold {
            return 0.0;
        }
        let c: f64 = v_hat
            .components()
            .iter()
            .map(|s| Complex64::norm_sqr(&s[idx]))
            .sum();
        k2 * c
    };
    let total = reduce::pairwise_sum_by(g.len(), |i| weight(i, false));
    if total == 0.0 {
        0.0
    } else {
        reduce::pairwise_sum_by(g.len(), |i| weight(i, true)) / total
    }
}
