//! Scalar and vector fields in physical and spectral representation.
//!
//! The representation is carried by the type: [`Field`] and [`VectorField`]
//! hold grid-point values, [`Spectrum`] and [`VectorSpectrum`] hold Fourier
//! coefficients normalized so that the zero mode is the mean of the values.

use std::ops::{Index, IndexMut};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::reduce;

/// Real scalar field sampled on the grid points.
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    grid: Grid,
    values: Vec<f64>,
}

impl Field {
    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    pub fn from_vec(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Contract(format!(
                "field has {} values, grid n = {} needs {}",
                values.len(),
                grid.n(),
                grid.len()
            )));
        }
        Ok(Self { grid, values })
    }

    /// Samples `f(x, y, z)` at every grid point.
    pub fn from_fn<F>(grid: Grid, f: F) -> Self
    where
        F: Fn([f64; 3]) -> f64 + Sync,
    {
        let values = (0..grid.len())
            .into_par_iter()
            .map(|idx| f(grid.position(idx)))
            .collect();
        Self { grid, values }
    }

    /// Evaluates `f(i)` at every linear index.
    pub fn from_index_fn<F>(grid: Grid, f: F) -> Self
    where
        F: Fn(usize) -> f64 + Sync,
    {
        let values = (0..grid.len()).into_par_iter().map(&f).collect();
        Self { grid, values }
    }

    #[inline]
    pub fn grid(&self) -> Grid {
        self.grid
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// `∫ f dx` over the box: fixed-order pairwise sum times the cell volume.
    pub fn integrate(&self) -> f64 {
        reduce::pairwise_sum(&self.values) * self.grid.cell_volume()
    }

    pub fn max_abs(&self) -> f64 {
        reduce::max_by(self.values.len(), |i| self.values[i].abs())
    }

    pub fn min_max(&self) -> (f64, f64) {
        reduce::min_max_by(self.values.len(), |i| self.values[i])
    }

    /// Fails with the first grid index holding NaN or infinity.
    pub fn check_finite(&self, what: &'static str) -> Result<()> {
        match reduce::first_non_finite(&self.values) {
            Some(index) => Err(Error::NonFinite { what, index }),
            None => Ok(()),
        }
    }
}

impl Index<usize> for Field {
    type Output = f64;
    fn index(&self, idx: usize) -> &f64 {
        &self.values[idx]
    }
}

/// Fourier coefficients of a scalar field.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    grid: Grid,
    coeffs: Vec<Complex64>,
}

impl Spectrum {
    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            coeffs: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    pub fn from_vec(grid: Grid, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::Contract(format!(
                "spectrum has {} coefficients, grid n = {} needs {}",
                coeffs.len(),
                grid.n(),
                grid.len()
            )));
        }
        Ok(Self { grid, coeffs })
    }

    #[inline]
    pub fn grid(&self) -> Grid {
        self.grid
    }

    #[inline]
    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    #[inline]
    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    /// Linear index of integer mode `(kx, ky, kz)`; each component must lie
    /// in `[-n/2, n/2)`.
    pub fn slot(&self, mode: [i64; 3]) -> usize {
        let n = self.grid.n() as i64;
        let wrap = |m: i64| {
            assert!((-n / 2..n / 2).contains(&m), "mode {m} outside [-n/2, n/2)");
            m.rem_euclid(n) as usize
        };
        self.grid.index(wrap(mode[0]), wrap(mode[1]), wrap(mode[2]))
    }

    /// Coefficient of integer mode `(kx, ky, kz)`.
    pub fn coefficient(&self, mode: [i64; 3]) -> Complex64 {
        self.coeffs[self.slot(mode)]
    }

    /// `Σ |f̂(k)|²`, which equals the mean of `f²` over the grid.
    pub fn power(&self) -> f64 {
        reduce::pairwise_sum_by(self.coeffs.len(), |i| self.coeffs[i].norm_sqr())
    }

    pub fn max_abs(&self) -> f64 {
        reduce::max_by(self.coeffs.len(), |i| self.coeffs[i].norm())
    }

    pub fn check_finite(&self, what: &'static str) -> Result<()> {
        match self
            .coeffs
            .par_iter()
            .position_first(|c| !(c.re.is_finite() && c.im.is_finite()))
        {
            Some(index) => Err(Error::NonFinite { what, index }),
            None => Ok(()),
        }
    }

    /// Largest deviation from conjugate symmetry `f̂(-k) = conj(f̂(k))`,
    /// ignoring slots with a Nyquist component.
    pub fn conjugate_asymmetry(&self) -> f64 {
        let g = self.grid;
        let n = g.n();
        reduce::max_by(self.coeffs.len(), |idx| {
            let (i, j, k) = g.unravel(idx);
            if g.is_nyquist(i) || g.is_nyquist(j) || g.is_nyquist(k) {
                return 0.0;
            }
            let mirror = g.index((n - i) % n, (n - j) % n, (n - k) % n);
            (self.coeffs[idx] - self.coeffs[mirror].conj()).norm()
        })
    }
}

impl Index<usize> for Spectrum {
    type Output = Complex64;
    fn index(&self, idx: usize) -> &Complex64 {
        &self.coeffs[idx]
    }
}

/// Three physical components sharing one grid.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    components: [Field; 3],
}

impl VectorField {
    pub fn new(components: [Field; 3]) -> Result<Self> {
        let g = components[0].grid();
        if components.iter().any(|c| c.grid() != g) {
            return Err(Error::Contract(
                "vector components on different grids".into(),
            ));
        }
        Ok(Self { components })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self {
            components: [Field::zeros(grid), Field::zeros(grid), Field::zeros(grid)],
        }
    }

    /// Samples a vector-valued function at every grid point.
    pub fn from_fn<F>(grid: Grid, f: F) -> Self
    where
        F: Fn([f64; 3]) -> [f64; 3] + Sync,
    {
        let f = &f;
        Self {
            components: [0, 1, 2].map(|c| Field::from_fn(grid, move |x| f(x)[c])),
        }
    }

    #[inline]
    pub fn grid(&self) -> Grid {
        self.components[0].grid()
    }

    #[inline]
    pub fn components(&self) -> &[Field; 3] {
        &self.components
    }

    pub fn into_components(self) -> [Field; 3] {
        self.components
    }

    /// Pointwise `a · b`.
    pub fn dot(&self, other: &VectorField) -> Field {
        let (a, b) = (&self.components, &other.components);
        Field::from_index_fn(self.grid(), |i| {
            a[0][i] * b[0][i] + a[1][i] * b[1][i] + a[2][i] * b[2][i]
        })
    }

    /// Pointwise `|v|²`.
    pub fn norm_sqr(&self) -> Field {
        self.dot(self)
    }

    /// Pointwise `a × b`.
    pub fn cross(&self, other: &VectorField) -> VectorField {
        let (a, b) = (&self.components, &other.components);
        let g = self.grid();
        VectorField {
            components: [
                Field::from_index_fn(g, |i| a[1][i] * b[2][i] - a[2][i] * b[1][i]),
                Field::from_index_fn(g, |i| a[2][i] * b[0][i] - a[0][i] * b[2][i]),
                Field::from_index_fn(g, |i| a[0][i] * b[1][i] - a[1][i] * b[0][i]),
            ],
        }
    }

    /// Largest pointwise magnitude `max |v|`.
    pub fn max_norm(&self) -> f64 {
        let c = &self.components;
        reduce::max_by(self.grid().len(), |i| {
            (c[0][i] * c[0][i] + c[1][i] * c[1][i] + c[2][i] * c[2][i]).sqrt()
        })
    }

    /// Largest componentwise difference `max |a_c(x) - b_c(x)|`.
    pub fn max_abs_diff(&self, other: &VectorField) -> f64 {
        (0..3)
            .map(|c| {
                let (a, b) = (self.components[c].values(), other.components[c].values());
                reduce::max_by(a.len(), |i| (a[i] - b[i]).abs())
            })
            .fold(0.0, f64::max)
    }
}

impl Index<usize> for VectorField {
    type Output = Field;
    fn index(&self, c: usize) -> &Field {
        &self.components[c]
    }
}

impl IndexMut<usize> for VectorField {
    fn index_mut(&mut self, c: usize) -> &mut Field {
        &mut self.components[c]
    }
}

/// Three spectral components sharing one grid.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorSpectrum {
    components: [Spectrum; 3],
}

impl VectorSpectrum {
    pub fn new(components: [Spectrum; 3]) -> Result<Self> {
        let g = components[0].grid();
        if components.iter().any(|c| c.grid() != g) {
            return Err(Error::Contract(
                "vector components on different grids".into(),
            ));
        }
        Ok(Self { components })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self {
            components: [
                Spectrum::zeros(grid),
                Spectrum::zeros(grid),
                Spectrum::zeros(grid),
            ],
        }
    }

    #[inline]
    pub fn grid(&self) -> Grid {
        self.components[0].grid()
    }

    #[inline]
    pub fn components(&self) -> &[Spectrum; 3] {
        &self.components
    }

    pub fn into_components(self) -> [Spectrum; 3] {
        self.components
    }

    pub fn components_mut(&mut self) -> &mut [Spectrum; 3] {
        &mut self.components
    }

    pub fn check_finite(&self, what: &'static str) -> Result<()> {
        self.components
            .iter()
            .try_for_each(|c| c.check_finite(what))
    }

    pub fn max_abs(&self) -> f64 {
        self.components
            .iter()
            .map(Spectrum::max_abs)
            .fold(0.0, f64::max)
    }

    /// `self + scale * other`, componentwise.
    pub fn axpy(&self, scale: f64, other: &VectorSpectrum) -> VectorSpectrum {
        let components = [0, 1, 2].map(|c| {
            let (a, b) = (self.components[c].coeffs(), other.components[c].coeffs());
            let coeffs = a
                .par_iter()
                .zip(b.par_iter())
                .map(|(x, y)| x + y * scale)
                .collect();
            Spectrum {
                grid: self.grid(),
                coeffs,
            }
        });
        VectorSpectrum { components }
    }

    pub fn scale(&self, factor: f64) -> VectorSpectrum {
        let components = [0, 1, 2].map(|c| {
            let coeffs = self.components[c]
                .coeffs()
                .par_iter()
                .map(|x| x * factor)
                .collect();
            Spectrum {
                grid: self.grid(),
                coeffs,
            }
        });
        VectorSpectrum { components }
    }

    /// Largest componentwise coefficient difference.
    pub fn max_abs_diff(&self, other: &VectorSpectrum) -> f64 {
        (0..3)
            .map(|c| {
                let (a, b) = (self.components[c].coeffs(), other.components[c].coeffs());
                reduce::max_by(a.len(), |i| (a[i] - b[i]).norm())
            })
            .fold(0.0, f64::max)
    }
}

impl Index<usize> for VectorSpectrum {
    type Output = Spectrum;
    fn index(&self, c: usize) -> &Spectrum {
        &self.components[c]
    }
}

impl IndexMut<usize> for VectorSpectrum {
    fn index_mut(&mut self, c: usize) -> &mut Spectrum {
        &mut self.components[c]
    }
}
