//! Operators acting on Fourier coefficients: differentiation, curl, Leray
//! projection and two-thirds dealiasing.
//!
//! Derivatives multiply by `i k`; slots whose differentiated axis sits on the
//! Nyquist frequency get a zero derivative, which keeps the discrete operators
//! skew-adjoint.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::field::{Spectrum, VectorSpectrum};
use crate::grid::Grid;
use crate::reduce;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Wavenumber used for differentiation along `axis` at slot `idx`.
#[inline]
fn derivative_wavenumber(grid: &Grid, idx: usize, axis: usize) -> f64 {
    let (i, j, k) = grid.unravel(idx);
    let slot = [i, j, k][axis];
    if grid.is_nyquist(slot) {
        0.0
    } else {
        grid.wavenumber(slot)
    }
}

impl Spectrum {
    /// The same trigonometric polynomial on another grid with the same box.
    ///
    /// Modes representable on both grids are copied; Nyquist slots of the
    /// source are dropped because their conjugate partner is ambiguous.
    pub fn resample(&self, target: Grid) -> Spectrum {
        let src = self.grid();
        assert_eq!(
            src.box_length(),
            target.box_length(),
            "resampling needs a common box"
        );
        let half = (src.n().min(target.n()) / 2) as i64;
        let coeffs = (0..target.len())
            .into_par_iter()
            .map(|idx| {
                let m = target.mode_triple(idx);
                if m.iter().any(|x| x.abs() >= half) {
                    Complex64::new(0.0, 0.0)
                } else {
                    self.coefficient(m)
                }
            })
            .collect();
        Spectrum::from_vec(target, coeffs).expect("length")
    }

    /// `∂f/∂x_axis` with `axis` in `0..3`.
    pub fn derivative(&self, axis: usize) -> Spectrum {
        assert!(axis < 3, "axis must be 0, 1 or 2");
        let g = self.grid();
        let coeffs = self
            .coeffs()
            .par_iter()
            .enumerate()
            .map(|(idx, c)| c * I * derivative_wavenumber(&g, idx, axis))
            .collect();
        Spectrum::from_vec(g, coeffs).expect("length preserved")
    }

    /// Zeroes every mode with some `|k_axis| > n/3`.
    pub fn dealias(&self) -> Spectrum {
        let mut out = self.clone();
        out.dealias_in_place();
        out
    }

    pub fn dealias_in_place(&mut self) {
        let g = self.grid();
        self.coeffs_mut()
            .par_iter_mut()
            .enumerate()
            .for_each(|(idx, c)| {
                if !g.is_retained(idx) {
                    *c = Complex64::new(0.0, 0.0);
                }
            });
    }

    /// Spectral gradient of a scalar.
    pub fn gradient(&self) -> VectorSpectrum {
        VectorSpectrum::new([self.derivative(0), self.derivative(1), self.derivative(2)])
            .expect("shared grid")
    }
}

impl VectorSpectrum {
    /// `ω̂(k) = i k × v̂(k)`.
    pub fn curl(&self) -> VectorSpectrum {
        let g = self.grid();
        let [a, b, c] = self.components();
        let d = |s: &Spectrum, axis| s.derivative(axis);
        let sub = |x: Spectrum, y: Spectrum| {
            let coeffs = x
                .coeffs()
                .par_iter()
                .zip(y.coeffs().par_iter())
                .map(|(p, q)| p - q)
                .collect();
            Spectrum::from_vec(g, coeffs).expect("length preserved")
        };
        VectorSpectrum::new([
            sub(d(c, 1), d(b, 2)),
            sub(d(a, 2), d(c, 0)),
            sub(d(b, 0), d(a, 1)),
        ])
        .expect("shared grid")
    }

    /// Spectral divergence `i k · v̂`, with the Nyquist convention of
    /// [`Spectrum::derivative`].
    pub fn divergence(&self) -> Spectrum {
        let g = self.grid();
        let [a, b, c] = self.components();
        let coeffs = (0..g.len())
            .into_par_iter()
            .map(|idx| {
                (a[idx] * derivative_wavenumber(&g, idx, 0)
                    + b[idx] * derivative_wavenumber(&g, idx, 1)
                    + c[idx] * derivative_wavenumber(&g, idx, 2))
                    * I
            })
            .collect();
        Spectrum::from_vec(g, coeffs).expect("length preserved")
    }

    /// Orthogonal projection onto divergence-free fields:
    /// `v̂ ↦ v̂ − k (k·v̂)/|k|²`, mean mode untouched.
    pub fn leray_project(&self) -> VectorSpectrum {
        let mut out = self.clone();
        out.leray_project_in_place();
        out
    }

    pub fn leray_project_in_place(&mut self) {
        let g = self.grid();
        let [a, b, c] = self.components_mut();
        a.coeffs_mut()
            .par_iter_mut()
            .zip(b.coeffs_mut().par_iter_mut())
            .zip(c.coeffs_mut().par_iter_mut())
            .enumerate()
            .for_each(|(idx, ((x, y), z))| {
                let k = g.wavevector(idx);
                let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
                if k2 == 0.0 {
                    return;
                }
                let kv = (*x * k[0] + *y * k[1] + *z * k[2]) / k2;
                *x -= kv * k[0];
                *y -= kv * k[1];
                *z -= kv * k[2];
            });
    }

    pub fn dealias(&self) -> VectorSpectrum {
        let mut out = self.clone();
        out.dealias_in_place();
        out
    }

    pub fn dealias_in_place(&mut self) {
        for c in self.components_mut() {
            c.dealias_in_place();
        }
    }

    /// `max_k |k · v̂(k)| / max |v̂|` over all modes, using the projection's
    /// wavevectors (Nyquist included). Zero for a zero field.
    pub fn divergence_ratio(&self) -> f64 {
        let g = self.grid();
        let [a, b, c] = self.components();
        let top = reduce::max_by(g.len(), |idx| {
            let k = g.wavevector(idx);
            (a[idx] * k[0] + b[idx] * k[1] + c[idx] * k[2]).norm()
        });
        let scale = self.max_abs();
        if scale == 0.0 {
            0.0
        } else {
            top / scale
        }
    }

    /// Componentwise [`Spectrum::resample`].
    pub fn resample(&self, target: Grid) -> VectorSpectrum {
        VectorSpectrum::new(self.components().each_ref().map(|c| c.resample(target)))
            .expect("shared grid")
    }

    /// Mean-square magnitude summed over modes, `Σ_k |v̂(k)|²`.
    pub fn power(&self) -> f64 {
        self.components().iter().map(Spectrum::power).sum()
    }
}
