//! Exponential envelopes of `‖ω(t)‖_{L²}` and the ε-decay bound.
//!
//! Rates are integrated in time with the trapezoid rule at the record
//! cadence. Spatial sup/inf come from the record's `λ₂` extrema, which are
//! grid values unless the evaluator polishes them off-grid.

use serde::{Deserialize, Serialize};

use super::DiagnosticsRecord;
use crate::deformation::{AdmissibleClass, Classification};
use crate::error::{Error, Result};

/// Rates of the two-sided envelope built from `λ₂⁺` and `λ₂⁻`:
/// lower `½ inf λ₂⁺ − sup|λ₂⁻|`, upper `sup λ₂⁺ − ½ inf|λ₂⁻|`.
fn stretching_rates(r: &DiagnosticsRecord) -> (f64, f64) {
    (
        0.5 * r.inf_l2p - r.sup_l2m_abs,
        r.sup_l2p - 0.5 * r.inf_l2m_abs,
    )
}

/// Class-conditional rates. On `A₊` they are `(½ inf|λ₂|, sup|λ₂|)`, on `A₋`
/// `(−sup|λ₂|, −½ inf|λ₂|)`.
fn class_rates(class: AdmissibleClass, r: &DiagnosticsRecord) -> (f64, f64) {
    match class {
        AdmissibleClass::APlus => (0.5 * r.min_l2.abs(), r.max_l2.abs()),
        AdmissibleClass::AMinus => (-r.min_l2.abs(), -0.5 * r.max_l2.abs()),
        AdmissibleClass::Neither => (f64::NAN, f64::NAN),
    }
}

fn sign_condition_fails(class: &Classification, r: &DiagnosticsRecord) -> bool {
    match class.class {
        AdmissibleClass::APlus => !(r.min_l2 > class.tolerance),
        AdmissibleClass::AMinus => !(r.max_l2 < -class.tolerance),
        AdmissibleClass::Neither => true,
    }
}

/// Envelope values at one record.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnvelopeRow {
    pub lower: f64,
    pub upper: f64,
    /// Running `∫₀ᵗ sup λ₂⁺ ds`.
    pub lambda2p_integral: f64,
    /// Class-conditional envelopes; NaN outside the admissible classes and
    /// from the first zero touching time on.
    pub class_lower: f64,
    pub class_upper: f64,
}

/// Streaming envelope accumulator fed one record at a time.
#[derive(Clone, Debug)]
pub struct EnvelopeTracker {
    class: Option<Classification>,
    omega0: f64,
    prev: Option<DiagnosticsRecord>,
    lower_int: f64,
    upper_int: f64,
    lambda_int: f64,
    class_lower_int: f64,
    class_upper_int: f64,
    zero_touching: Option<f64>,
}

impl EnvelopeTracker {
    /// `class` enables the class-conditional envelopes when admissible.
    pub fn new(class: Option<Classification>) -> Self {
        Self {
            class: class.filter(Classification::is_admissible),
            omega0: f64::NAN,
            prev: None,
            lower_int: 0.0,
            upper_int: 0.0,
            lambda_int: 0.0,
            class_lower_int: 0.0,
            class_upper_int: 0.0,
            zero_touching: None,
        }
    }

    /// First record time at which the class sign condition failed.
    pub fn zero_touching(&self) -> Option<f64> {
        self.zero_touching
    }

    /// `‖ω₀‖`, NaN before the first record.
    pub fn initial_norm(&self) -> f64 {
        self.omega0
    }

    pub fn push(&mut self, r: &DiagnosticsRecord) -> EnvelopeRow {
        let class_active = |s: &Self| s.class.is_some() && s.zero_touching.is_none();
        match self.prev {
            None => self.omega0 = r.vorticity_norm(),
            Some(prev) => {
                let h = 0.5 * (r.t - prev.t);
                let (a0, b0) = stretching_rates(&prev);
                let (a1, b1) = stretching_rates(r);
                self.lower_int += h * (a0 + a1);
                self.upper_int += h * (b0 + b1);
                self.lambda_int += h * (prev.sup_l2p + r.sup_l2p);
                if class_active(self) {
                    let class = self.class.as_ref().unwrap();
                    if sign_condition_fails(class, r) {
                        self.zero_touching = Some(r.t);
                    } else {
                        let (c0, d0) = class_rates(class.class, &prev);
                        let (c1, d1) = class_rates(class.class, r);
                        self.class_lower_int += h * (c0 + c1);
                        self.class_upper_int += h * (d0 + d1);
                    }
                }
            }
        }
        if self.prev.is_none() {
            if let Some(class) = &self.class {
                if sign_condition_fails(class, r) {
                    self.zero_touching = Some(r.t);
                }
            }
        }
        self.prev = Some(*r);
        let (class_lower, class_upper) = if class_active(self) {
            (
                self.omega0 * self.class_lower_int.exp(),
                self.omega0 * self.class_upper_int.exp(),
            )
        } else {
            (f64::NAN, f64::NAN)
        };
        EnvelopeRow {
            lower: self.omega0 * self.lower_int.exp(),
            upper: self.omega0 * self.upper_int.exp(),
            lambda2p_integral: self.lambda_int,
            class_lower,
            class_upper,
        }
    }
}

/// Envelopes over a full record series.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeSeries {
    pub times: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub lambda2p_integral: Vec<f64>,
}

impl EnvelopeSeries {
    /// Records where `lower ≤ √Z ≤ upper` fails by more than `slack`
    /// relative to the envelope, as `(t, √Z, lower, upper)`.
    pub fn violations(
        &self,
        records: &[DiagnosticsRecord],
        slack: f64,
    ) -> Vec<(f64, f64, f64, f64)> {
        records
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .filter_map(|(r, (&lo, &hi))| {
                let w = r.vorticity_norm();
                (w < lo * (1.0 - slack) || w > hi * (1.0 + slack)).then_some((r.t, w, lo, hi))
            })
            .collect()
    }
}

fn require_records(records: &[DiagnosticsRecord]) -> Result<()> {
    if records.is_empty() {
        Err(Error::Contract("envelopes need at least one record".into()))
    } else {
        Ok(())
    }
}

/// Two-sided envelope of `‖ω(t)‖` from the `λ₂⁺`/`λ₂⁻` rates, starting at
/// `‖ω₀‖ = √Z₀`, together with the running `∫ sup λ₂⁺`.
pub fn stretching_envelopes(records: &[DiagnosticsRecord]) -> Result<EnvelopeSeries> {
    require_records(records)?;
    let mut tracker = EnvelopeTracker::new(None);
    let rows: Vec<EnvelopeRow> = records.iter().map(|r| tracker.push(r)).collect();
    Ok(EnvelopeSeries {
        times: records.iter().map(|r| r.t).collect(),
        lower: rows.iter().map(|r| r.lower).collect(),
        upper: rows.iter().map(|r| r.upper).collect(),
        lambda2p_integral: rows.iter().map(|r| r.lambda2p_integral).collect(),
    })
}

/// Running trapezoid integral of `sup λ₂⁺`; nondecreasing.
pub fn planar_stretching_integral(records: &[DiagnosticsRecord]) -> Vec<f64> {
    let mut acc = 0.0;
    let mut out = Vec::with_capacity(records.len());
    for (i, r) in records.iter().enumerate() {
        if i > 0 {
            let prev = &records[i - 1];
            acc += 0.5 * (r.t - prev.t) * (prev.sup_l2p + r.sup_l2p);
        }
        out.push(acc);
    }
    out
}

/// `Satisfied` when `lower ≤ √Z ≤ upper` holds at every record up to a
/// relative `slack`, else the first offending time.
pub fn containment_verdict(records: &[DiagnosticsRecord], slack: f64) -> Result<BoundVerdict> {
    let env = stretching_envelopes(records)?;
    Ok(match env.violations(records, slack).first() {
        Some(&(t, ..)) => BoundVerdict::Violated { t },
        None => BoundVerdict::Satisfied,
    })
}

/// Checks `√Z(t) ≤ √Z₀ · exp(∫₀ᵗ sup λ₂⁺ ds)` up to a relative `slack`.
pub fn planar_stretching_verdict(
    records: &[DiagnosticsRecord],
    slack: f64,
) -> Result<BoundVerdict> {
    require_records(records)?;
    let omega0 = records[0].vorticity_norm();
    let integral = planar_stretching_integral(records);
    for (r, i) in records.iter().zip(integral) {
        if r.vorticity_norm() > omega0 * i.exp() * (1.0 + slack) {
            return Ok(BoundVerdict::Violated { t: r.t });
        }
    }
    Ok(BoundVerdict::Satisfied)
}

/// Class-conditional envelopes up to (excluding) the first zero touching time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassEnvelopes {
    pub class: AdmissibleClass,
    pub times: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub zero_touching: Option<f64>,
}

pub fn class_envelopes(
    records: &[DiagnosticsRecord],
    class: &Classification,
) -> Result<ClassEnvelopes> {
    require_records(records)?;
    if !class.is_admissible() {
        return Err(Error::Contract(
            "class-conditional envelopes need an admissible class".into(),
        ));
    }
    let mut tracker = EnvelopeTracker::new(Some(*class));
    let mut out = ClassEnvelopes {
        class: class.class,
        times: vec![],
        lower: vec![],
        upper: vec![],
        zero_touching: None,
    };
    for r in records {
        let row = tracker.push(r);
        if tracker.zero_touching().is_some() {
            break;
        }
        out.times.push(r.t);
        out.lower.push(row.class_lower);
        out.upper.push(row.class_upper);
    }
    out.zero_touching = tracker.zero_touching();
    Ok(out)
}

/// Outcome of a bound check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum BoundVerdict {
    Satisfied,
    Violated { t: f64 },
    Inapplicable { reason: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpsilonBoundSample {
    pub t: f64,
    /// `(t − t₀) · (inf ε)²`, the infimum running over samples so far.
    pub lhs: f64,
    pub satisfied: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpsilonBound {
    pub rhs: Option<f64>,
    pub samples: Vec<EpsilonBoundSample>,
    pub verdict: BoundVerdict,
}

/// Right-hand side of `t · inf ε² ≤ C`.
///
/// On `A₊`, `C = √27 |Ω|^{1/2} / (√2 ‖ω₀‖)`; on `A₋`,
/// `C = √27 |Ω|^{1/2} (√E₀/H₀ − 1/(√2 ‖ω₀‖))`, which needs `H₀ > 0`.
/// `‖ω₀‖ = √Z₀`. `Err` carries the reason the bound does not apply.
pub fn epsilon_decay_rhs(
    class: AdmissibleClass,
    e0: f64,
    h0: f64,
    z0: f64,
    volume: f64,
) -> std::result::Result<f64, String> {
    let omega0 = z0.sqrt();
    if !(omega0 > 0.0 && omega0.is_finite()) {
        return Err(format!("initial enstrophy {z0} must be positive"));
    }
    let lead = 27f64.sqrt() * volume.sqrt();
    match class {
        AdmissibleClass::APlus => Ok(lead / (2f64.sqrt() * omega0)),
        AdmissibleClass::AMinus => {
            if !(h0 > 0.0) {
                return Err(format!("helicity H0 = {h0} is not positive"));
            }
            if !(e0 >= 0.0) {
                return Err(format!("energy E0 = {e0} is not a valid energy"));
            }
            Ok(lead * (e0.sqrt() / h0 - 1.0 / (2f64.sqrt() * omega0)))
        }
        AdmissibleClass::Neither => Err("field is in neither admissible class".into()),
    }
}

/// Checks `(t − t₀) · inf ε² ≤ C` on every record before the first zero
/// touching time. Records whose `inf_eps` is NaN leave the running infimum
/// unchanged.
pub fn epsilon_decay_check(
    records: &[DiagnosticsRecord],
    class: &Classification,
    e0: f64,
    h0: f64,
    z0: f64,
    volume: f64,
) -> Result<EpsilonBound> {
    require_records(records)?;
    let rhs = match epsilon_decay_rhs(class.class, e0, h0, z0, volume) {
        Ok(c) => c,
        Err(reason) => {
            return Ok(EpsilonBound {
                rhs: None,
                samples: vec![],
                verdict: BoundVerdict::Inapplicable { reason },
            })
        }
    };
    let t0 = records[0].t;
    let mut inf_eps = f64::INFINITY;
    let mut samples = Vec::with_capacity(records.len());
    for r in records {
        if sign_condition_fails(class, r) {
            break;
        }
        if r.inf_eps.is_finite() {
            inf_eps = inf_eps.min(r.inf_eps);
        }
        let lhs = if inf_eps.is_finite() {
            (r.t - t0) * inf_eps * inf_eps
        } else {
            0.0
        };
        samples.push(EpsilonBoundSample {
            t: r.t,
            lhs,
            satisfied: lhs <= rhs,
        });
    }
    let verdict = match samples.iter().find(|s| !s.satisfied) {
        Some(s) => BoundVerdict::Violated { t: s.t },
        None => BoundVerdict::Satisfied,
    };
    Ok(EpsilonBound {
        rhs: Some(rhs),
        samples,
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn record(t: f64, min_l2: f64, max_l2: f64, z: f64) -> DiagnosticsRecord {
        let mut r = DiagnosticsRecord::with_lambda2(t, (min_l2, max_l2));
        r.enstrophy = z;
        r
    }

    fn times(n: usize, h: f64) -> impl Iterator<Item = f64> {
        (0..n).map(move |i| i as f64 * h)
    }

    #[test]
    fn zero_rates_give_flat_envelopes() {
        let recs: Vec<_> = times(11, 0.1).map(|t| record(t, 0.0, 0.0, 4.0)).collect();
        let e = stretching_envelopes(&recs).unwrap();
        assert!(e.lower.iter().chain(&e.upper).all(|&x| x == 2.0));
        assert!(e.lambda2p_integral.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn constant_planar_rate() {
        // sup λ₂⁺ = 1 and everything else zero: λ₂ ranges over [0, 1].
        let recs: Vec<_> = times(21, 0.05).map(|t| record(t, 0.0, 1.0, 9.0)).collect();
        let e = stretching_envelopes(&recs).unwrap();
        for (i, t) in e.times.iter().enumerate() {
            assert!((e.upper[i] - 3.0 * t.exp()).abs() < 1e-12 * e.upper[i]);
            assert_eq!(e.lower[i], 3.0);
            assert!((e.lambda2p_integral[i] - t).abs() < 1e-14);
        }
        assert_eq!(planar_stretching_integral(&recs), e.lambda2p_integral);
    }

    #[test]
    fn verdicts_flag_growth_beyond_the_rate() {
        // sup λ₂⁺ = 1 allows √Z to grow like eᵗ but no faster.
        let ok: Vec<_> = times(11, 0.1)
            .map(|t| record(t, 0.0, 1.0, (2.0 * t).exp()))
            .collect();
        assert_eq!(
            planar_stretching_verdict(&ok, 1e-9).unwrap(),
            BoundVerdict::Satisfied
        );
        let fast: Vec<_> = times(11, 0.1)
            .map(|t| record(t, 0.0, 1.0, (2.2 * t).exp()))
            .collect();
        assert_eq!(
            planar_stretching_verdict(&fast, 1e-9).unwrap(),
            BoundVerdict::Violated { t: 0.1 }
        );
        assert_eq!(
            containment_verdict(&fast, 1e-9).unwrap(),
            BoundVerdict::Violated { t: 0.1 }
        );
    }

    #[test]
    fn integral_is_nondecreasing() {
        let recs: Vec<_> = times(30, 0.1)
            .map(|t| record(t, -1.0, (3.0 * t).sin().max(0.0), 1.0))
            .collect();
        let i = planar_stretching_integral(&recs);
        assert!(i.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn empty_series_is_an_error() {
        assert!(stretching_envelopes(&[]).is_err());
    }

    #[test]
    fn class_envelopes_closed_form() {
        let g = 0.8;
        let plus = Classification::from_extrema(g, g, 0.0);
        let recs: Vec<_> = times(41, 0.025).map(|t| record(t, g, g, 1.0)).collect();
        let e = class_envelopes(&recs, &plus).unwrap();
        assert_eq!(e.times.len(), 41);
        for (i, t) in e.times.iter().enumerate() {
            assert!((e.lower[i] - (g * t / 2.0).exp()).abs() < 1e-12);
            assert!((e.upper[i] - (g * t).exp()).abs() < 1e-12);
        }

        let minus = Classification::from_extrema(-g, -g, 0.0);
        let recs: Vec<_> = times(41, 0.025).map(|t| record(t, -g, -g, 1.0)).collect();
        let e = class_envelopes(&recs, &minus).unwrap();
        for (i, t) in e.times.iter().enumerate() {
            assert!((e.lower[i] - (-g * t).exp()).abs() < 1e-12);
            assert!((e.upper[i] - (-g * t / 2.0).exp()).abs() < 1e-12);
        }
    }

    #[test]
    fn class_envelopes_stop_at_zero_touching() {
        let plus = Classification::from_extrema(1.0, 2.0, 1e-12);
        let recs: Vec<_> = times(10, 0.1)
            .map(|t| record(t, 1.0 - 2.0 * t, 2.0, 1.0))
            .collect();
        let e = class_envelopes(&recs, &plus).unwrap();
        // λ₂ reaches zero at t = 0.5.
        assert_eq!(e.times.len(), 5);
        assert_eq!(e.zero_touching, Some(recs[5].t));
        let neither = Classification::from_extrema(-1.0, 1.0, 0.0);
        assert!(class_envelopes(&recs, &neither).is_err());
    }

    #[test]
    fn epsilon_rhs_arithmetic() {
        let vol = 8.0 * PI.powi(3);
        let c = epsilon_decay_rhs(AdmissibleClass::APlus, 1.0, 0.0, 2.0, vol).unwrap();
        let expect = 27f64.sqrt() * vol.sqrt() / (2f64.sqrt() * 2f64.sqrt());
        assert!((c - expect).abs() < 1e-13 * expect);
        assert!((c - 40.91869).abs() < 1e-5, "{c}");
        assert!(epsilon_decay_rhs(AdmissibleClass::AMinus, 1.0, 0.0, 2.0, vol).is_err());
        assert!(epsilon_decay_rhs(AdmissibleClass::AMinus, 1.0, -1.0, 2.0, vol).is_err());
        let m = epsilon_decay_rhs(AdmissibleClass::AMinus, 1.0, 0.5, 2.0, vol).unwrap();
        assert!((m - 27f64.sqrt() * vol.sqrt() * (2.0 - 0.5)).abs() < 1e-12 * m);
    }

    #[test]
    fn epsilon_check_flips_at_threshold() {
        let vol = 8.0 * PI.powi(3);
        let eps0: f64 = 0.25;
        let plus = Classification::from_extrema(0.1, 0.2, 0.0);
        let rhs = epsilon_decay_rhs(AdmissibleClass::APlus, 1.0, 0.0, 2.0, vol).unwrap();
        let t_star = rhs / (eps0 * eps0);
        let recs: Vec<_> = times(1001, t_star / 500.0)
            .map(|t| {
                let mut r = record(t, 0.1, 0.2, 2.0);
                r.inf_eps = eps0;
                r
            })
            .collect();
        let b = epsilon_decay_check(&recs, &plus, 1.0, 0.0, 2.0, vol).unwrap();
        assert_eq!(b.rhs, Some(rhs));
        for s in &b.samples {
            assert!((s.lhs - eps0 * eps0 * s.t).abs() <= 1e-15 * s.t.max(1.0));
            assert_eq!(s.satisfied, s.t <= t_star * (1.0 + 1e-14) && s.lhs <= rhs);
        }
        assert!(b.samples[499].satisfied && !b.samples[501].satisfied);
        assert!(matches!(b.verdict, BoundVerdict::Violated { .. }));
    }

    #[test]
    fn epsilon_check_inapplicable() {
        let minus = Classification::from_extrema(-0.2, -0.1, 0.0);
        let recs = vec![record(0.0, -0.2, -0.1, 1.0)];
        let b = epsilon_decay_check(&recs, &minus, 1.0, -3.0, 1.0, 1.0).unwrap();
        assert!(matches!(b.verdict, BoundVerdict::Inapplicable { .. }));
        assert_eq!(b.rhs, None);
    }
}
