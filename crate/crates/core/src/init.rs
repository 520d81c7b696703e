//! Initial velocity fields.
//!
//! Every generator returns a Leray-projected spectral field. Taylor–Green and
//! ABC flows are sampled on the grid and transformed; the random generator
//! draws Fourier coefficients directly.

use std::path::PathBuf;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::deformation::{Classification, SpectraField};
use crate::error::{Error, Result};
use crate::fft::Fft3;
use crate::field::{Spectrum, VectorField, VectorSpectrum};
use crate::grid::Grid;
use crate::snapshot;

/// Which initial field to build.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitSpec {
    TaylorGreen,
    Abc {
        a: f64,
        b: f64,
        c: f64,
    },
    RandomSolenoidal {
        seed: u64,
        peak_k: f64,
        slope: f64,
        amplitude: f64,
    },
    FromFile {
        path: PathBuf,
    },
}

impl InitSpec {
    pub fn validate(&self, grid: &Grid) -> Result<()> {
        match self {
            InitSpec::Abc { a, b, c } if !(a.is_finite() && b.is_finite() && c.is_finite()) => {
                Err(Error::Config("ABC coefficients must be finite".into()))
            }
            InitSpec::RandomSolenoidal {
                peak_k,
                slope,
                amplitude,
                ..
            } => {
                if !(peak_k.is_finite() && *peak_k > 0.0 && 3.0 * peak_k < grid.n() as f64) {
                    return Err(Error::Config(format!(
                        "peak_k = {peak_k} must lie in (0, n/3) for n = {}",
                        grid.n()
                    )));
                }
                if !(amplitude.is_finite() && *amplitude > 0.0) {
                    return Err(Error::Config(format!(
                        "amplitude = {amplitude} must be positive"
                    )));
                }
                if !slope.is_finite() {
                    return Err(Error::Config("slope must be finite".into()));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Builds the field and its start time (zero except for loaded files).
    pub fn generate(&self, fft: &Fft3) -> Result<(VectorSpectrum, f64)> {
        let grid = fft.grid();
        self.validate(&grid)?;
        Ok(match self {
            InitSpec::TaylorGreen => (taylor_green(fft), 0.0),
            InitSpec::Abc { a, b, c } => (abc_flow(fft, *a, *b, *c), 0.0),
            InitSpec::RandomSolenoidal {
                seed,
                peak_k,
                slope,
                amplitude,
            } => (
                random_solenoidal(grid, *seed, *peak_k, *slope, *amplitude)?,
                0.0,
            ),
            InitSpec::FromFile { path } => {
                let (v, t) = snapshot::load_snapshot(path)?;
                if v.grid() != grid {
                    return Err(Error::Config(format!(
                        "snapshot {} has n = {}, L = {}; run uses n = {}, L = {}",
                        path.display(),
                        v.grid().n(),
                        v.grid().box_length(),
                        grid.n(),
                        grid.box_length()
                    )));
                }
                (fft.forward_vector(&v).leray_project(), t)
            }
        })
    }
}

/// `v = (sin x cos y cos z, −cos x sin y cos z, 0)`.
pub fn taylor_green(fft: &Fft3) -> VectorSpectrum {
    let v = VectorField::from_fn(fft.grid(), |[x, y, z]| {
        [
            x.sin() * y.cos() * z.cos(),
            -x.cos() * y.sin() * z.cos(),
            0.0,
        ]
    });
    fft.forward_vector(&v).leray_project()
}

/// `v = (A sin z + C cos y, B sin x + A cos z, C sin y + B cos x)`; a Beltrami
/// field with `curl v = v` on the `2π` box.
pub fn abc_flow(fft: &Fft3, a: f64, b: f64, c: f64) -> VectorSpectrum {
    let v = VectorField::from_fn(fft.grid(), |[x, y, z]| {
        [
            a * z.sin() + c * y.cos(),
            b * x.sin() + a * z.cos(),
            c * y.sin() + b * x.cos(),
        ]
    });
    fft.forward_vector(&v).leray_project()
}

/// Energy `½∫|v|²` from spectral coefficients via Parseval.
pub(crate) fn spectral_energy(v: &VectorSpectrum) -> f64 {
    0.5 * v.grid().volume() * v.power()
}

/// Gaussian random solenoidal field with per-mode variance following the
/// radial energy spectrum `E(k) ∝ k^slope · exp(−(k/peak_k)²)`, restricted to
/// the dealiased modes and rescaled so that `½∫|v|² = amplitude`.
///
/// `k` is the integer mode magnitude. Identical arguments give bit-identical
/// fields.
pub fn random_solenoidal(
    grid: Grid,
    seed: u64,
    peak_k: f64,
    slope: f64,
    amplitude: f64,
) -> Result<VectorSpectrum> {
    InitSpec::RandomSolenoidal {
        seed,
        peak_k,
        slope,
        amplitude,
    }
    .validate(&grid)?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = || -> f64 { StandardNormal.sample(&mut rng) };
    let len = grid.len();
    let shell_amplitude = |idx: usize| {
        let m = grid.mode_triple(idx);
        let k2 = (m[0] * m[0] + m[1] * m[1] + m[2] * m[2]) as f64;
        if k2 == 0.0 || !grid.is_retained(idx) {
            return 0.0;
        }
        let k = k2.sqrt();
        // Shell of radius k holds ~4πk² modes.
        (k.powf(slope) * (-(k / peak_k).powi(2)).exp() / k2).sqrt()
    };

    let mut raw = [0, 1, 2].map(|_| vec![Complex64::new(0.0, 0.0); len]);
    for idx in 0..len {
        let a = shell_amplitude(idx);
        for comp in raw.iter_mut() {
            let (re, im) = (draw(), draw());
            comp[idx] = Complex64::new(re, im) * a;
        }
    }

    let n = grid.n();
    let components = raw.map(|r| {
        let coeffs = (0..len)
            .map(|idx| {
                let (i, j, k) = grid.unravel(idx);
                let mirror = grid.index((n - i) % n, (n - j) % n, (n - k) % n);
                (r[idx] + r[mirror].conj()) * 0.5
            })
            .collect();
        Spectrum::from_vec(grid, coeffs).expect("length")
    });
    let mut v = VectorSpectrum::new(components)?.leray_project();
    let e = spectral_energy(&v);
    if e == 0.0 {
        return Err(Error::Config(
            "random spectrum has no energy on the retained modes".into(),
        ));
    }
    v = v.scale((amplitude / e).sqrt());
    Ok(v)
}

/// Classifies a velocity field through `v → S → Λ`. A `None` tolerance uses
/// the field's default, `1e-10 · rms(λ₁)`.
pub fn classify_initial(
    fft: &Fft3,
    v: &VectorSpectrum,
    tolerance: Option<f64>,
) -> Result<Classification> {
    let spectra = SpectraField::from_velocity(fft, v)?;
    let tol = tolerance.unwrap_or_else(|| spectra.default_tolerance());
    Ok(spectra.classify(tol))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::deformation::AdmissibleClass;
    use std::f64::consts::PI;

    #[test]
    fn taylor_green_properties() {
        let fft = Fft3::new(Grid::new(16).unwrap());
        let v = taylor_green(&fft);
        assert!(v.divergence_ratio() < 1e-12);
        assert!((spectral_energy(&v) - PI.powi(3)).abs() < 1e-11);
    }

    #[test]
    fn abc_is_beltrami() {
        let fft = Fft3::new(Grid::new(16).unwrap());
        let v = abc_flow(&fft, 1.0, 1.0, 1.0);
        assert!(v.curl().max_abs_diff(&v) < 1e-12);
        assert!((spectral_energy(&v) - 12.0 * PI.powi(3)).abs() < 1e-10);
        let single = abc_flow(&fft, 1.0, 0.0, 0.0);
        assert!((spectral_energy(&single) - 4.0 * PI.powi(3)).abs() < 1e-11);
    }

    #[test]
    fn random_field_contract() {
        let g = Grid::new(16).unwrap();
        let v = random_solenoidal(g, 3, 3.0, 2.0, 0.7).unwrap();
        assert!(v.divergence_ratio() < 1e-12);
        assert!((spectral_energy(&v) - 0.7).abs() < 1e-12);
        for c in v.components() {
            assert!(c.conjugate_asymmetry() < 1e-15);
        }
        let w = random_solenoidal(g, 3, 3.0, 2.0, 0.7).unwrap();
        for c in 0..3 {
            assert!(
                v[c].coeffs()
                    .iter()
                    .zip(w[c].coeffs())
                    .all(|(a, b)| a.re.to_bits() == b.re.to_bits()
                        && a.im.to_bits() == b.im.to_bits())
            );
        }
        let other = random_solenoidal(g, 4, 3.0, 2.0, 0.7).unwrap();
        assert!(other.max_abs_diff(&v) > 1e-3);
    }

    #[test]
    fn random_field_respects_cutoff() {
        let g = Grid::new(16).unwrap();
        let v = random_solenoidal(g, 1, 5.0, 0.0, 1.0).unwrap();
        for idx in 0..g.len() {
            if !g.is_retained(idx) {
                assert!(v.components().iter().all(|c| c[idx].norm() == 0.0));
            }
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        let g = Grid::new(16).unwrap();
        assert!(random_solenoidal(g, 1, 6.0, 0.0, 1.0).is_err());
        assert!(random_solenoidal(g, 1, 2.0, 0.0, 0.0).is_err());
        assert!(InitSpec::Abc {
            a: f64::NAN,
            b: 0.0,
            c: 0.0
        }
        .validate(&g)
        .is_err());
    }

    #[test]
    fn classification_of_canonical_flows() {
        let fft = Fft3::new(Grid::new(16).unwrap());
        let tg = classify_initial(&fft, &taylor_green(&fft), None).unwrap();
        assert_eq!(tg.class, AdmissibleClass::Neither);
        assert!(tg.min_lambda2 < 0.0 && tg.max_lambda2 > 0.0);
        let abc = classify_initial(&fft, &abc_flow(&fft, 1.0, 1.0, 1.0), None).unwrap();
        assert_eq!(abc.class, AdmissibleClass::Neither);
        let shear = fft.forward_vector(&VectorField::from_fn(fft.grid(), |[_, y, _]| {
            [y.sin(), 0.0, 0.0]
        }));
        let c = classify_initial(&fft, &shear, None).unwrap();
        assert_eq!(c.class, AdmissibleClass::Neither);
        assert!(c.min_lambda2.abs() < 1e-14 && c.max_lambda2.abs() < 1e-14);
    }

    #[test]
    fn spec_deserializes_from_tagged_json() {
        let s: InitSpec = serde_json::from_str(r#"{"kind":"abc","a":1,"b":0.5,"c":0}"#).unwrap();
        assert_eq!(
            s,
            InitSpec::Abc {
                a: 1.0,
                b: 0.5,
                c: 0.0
            }
        );
        let s: InitSpec = serde_json::from_str(r#"{"kind":"taylor_green"}"#).unwrap();
        assert_eq!(s, InitSpec::TaylorGreen);
        assert!(
            serde_json::from_str::<InitSpec>(r#"{"kind":"abc","a":1,"b":1,"c":1,"d":2}"#).is_err()
        );
    }
}
