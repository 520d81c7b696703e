//! Three-dimensional FFTs built from batched one-dimensional transforms.
//!
//! Normalization: the forward transform divides by `n³`, so the zero mode is
//! the mean of the field and the inverse transform is a plain sum over modes.
//! Every line transform is independent, so results do not depend on how lines
//! are distributed over threads.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::field::{Field, Spectrum, VectorField, VectorSpectrum};
use crate::grid::Grid;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Planned forward and inverse transforms for one grid.
#[derive(Clone)]
pub struct Fft3 {
    grid: Grid,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Fft3 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fft3").field("grid", &self.grid).finish()
    }
}

impl Fft3 {
    pub fn new(grid: Grid) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            grid,
            forward: planner.plan_fft_forward(grid.n()),
            inverse: planner.plan_fft_inverse(grid.n()),
        }
    }

    #[inline]
    pub fn grid(&self) -> Grid {
        self.grid
    }

    /// Physical values to Fourier coefficients.
    pub fn forward(&self, field: &Field) -> Spectrum {
        assert_eq!(
            field.grid(),
            self.grid,
            "field grid does not match transform"
        );
        let mut data: Vec<Complex64> = field
            .values()
            .par_iter()
            .map(|&v| Complex64::new(v, 0.0))
            .collect();
        self.transform(&mut data, &self.forward);
        let norm = 1.0 / self.grid.len() as f64;
        data.par_iter_mut().for_each(|c| *c *= norm);
        Spectrum::from_vec(self.grid, data).expect("length preserved")
    }

    /// Fourier coefficients to physical values; the imaginary residue of a
    /// conjugate-symmetric spectrum is discarded.
    pub fn inverse(&self, spectrum: &Spectrum) -> Field {
        assert_eq!(
            spectrum.grid(),
            self.grid,
            "spectrum grid does not match transform"
        );
        let mut data = spectrum.coeffs().to_vec();
        self.transform(&mut data, &self.inverse);
        let values = data.par_iter().map(|c| c.re).collect();
        Field::from_vec(self.grid, values).expect("length preserved")
    }

    /// Forward transforms of two real fields with one complex transform of
    /// `a + i b`. The outputs are exactly conjugate-symmetric.
    pub fn forward_pair(&self, a: &Field, b: &Field) -> (Spectrum, Spectrum) {
        assert_eq!(a.grid(), self.grid, "field grid does not match transform");
        assert_eq!(b.grid(), self.grid, "field grid does not match transform");
        let mut data: Vec<Complex64> = a
            .values()
            .par_iter()
            .zip(b.values())
            .map(|(&x, &y)| Complex64::new(x, y))
            .collect();
        self.transform(&mut data, &self.forward);
        let g = self.grid;
        let n = g.n();
        let half = 0.5 / g.len() as f64;
        let (sa, sb): (Vec<Complex64>, Vec<Complex64>) = (0..g.len())
            .into_par_iter()
            .map(|idx| {
                let (i, j, k) = g.unravel(idx);
                let c = data[idx];
                let m = data[g.index((n - i) % n, (n - j) % n, (n - k) % n)].conj();
                let d = c - m;
                ((c + m) * half, Complex64::new(d.im, -d.re) * half)
            })
            .unzip();
        (
            Spectrum::from_vec(g, sa).expect("length preserved"),
            Spectrum::from_vec(g, sb).expect("length preserved"),
        )
    }

    /// Inverse transforms of two conjugate-symmetric spectra with one complex
    /// transform of `A + i B`.
    pub fn inverse_pair(&self, a: &Spectrum, b: &Spectrum) -> (Field, Field) {
        assert_eq!(
            a.grid(),
            self.grid,
            "spectrum grid does not match transform"
        );
        assert_eq!(
            b.grid(),
            self.grid,
            "spectrum grid does not match transform"
        );
        let mut data: Vec<Complex64> = a
            .coeffs()
            .par_iter()
            .zip(b.coeffs())
            .map(|(x, y)| Complex64::new(x.re - y.im, x.im + y.re))
            .collect();
        self.transform(&mut data, &self.inverse);
        let (fa, fb): (Vec<f64>, Vec<f64>) = data.par_iter().map(|c| (c.re, c.im)).unzip();
        (
            Field::from_vec(self.grid, fa).expect("length preserved"),
            Field::from_vec(self.grid, fb).expect("length preserved"),
        )
    }

    pub fn forward_vector(&self, v: &VectorField) -> VectorSpectrum {
        let c = v.components();
        let (x, y) = self.forward_pair(&c[0], &c[1]);
        VectorSpectrum::new([x, y, self.forward(&c[2])]).expect("shared grid")
    }

    pub fn inverse_vector(&self, v: &VectorSpectrum) -> VectorField {
        let c = v.components();
        let (x, y) = self.inverse_pair(&c[0], &c[1]);
        VectorField::new([x, y, self.inverse(&c[2])]).expect("shared grid")
    }

    /// Inverse transforms of any number of conjugate-symmetric spectra,
    /// paired two at a time.
    pub fn inverse_many(&self, spectra: &[&Spectrum]) -> Vec<Field> {
        let mut out = Vec::with_capacity(spectra.len());
        for pair in spectra.chunks(2) {
            match pair {
                [a, b] => {
                    let (x, y) = self.inverse_pair(a, b);
                    out.push(x);
                    out.push(y);
                }
                [a] => out.push(self.inverse(a)),
                _ => unreachable!(),
            }
        }
        out
    }

    fn transform(&self, data: &mut [Complex64], fft: &Arc<dyn Fft<f64>>) {
        let n = self.grid.n();
        let plane = n * n;
        let scratch_len = fft.get_inplace_scratch_len();

        // x: lines are contiguous, one plane of n lines per task.
        data.par_chunks_mut(plane).for_each_init(
            || vec![ZERO; scratch_len],
            |scratch, chunk| fft.process_with_scratch(chunk, scratch),
        );

        // y: transpose each plane so columns become contiguous.
        data.par_chunks_mut(plane).for_each_init(
            || (vec![ZERO; plane], vec![ZERO; scratch_len]),
            |(buf, scratch), chunk| {
                for j in 0..n {
                    for i in 0..n {
                        buf[i * n + j] = chunk[i + n * j];
                    }
                }
                fft.process_with_scratch(buf, scratch);
                for j in 0..n {
                    for i in 0..n {
                        chunk[i + n * j] = buf[i * n + j];
                    }
                }
            },
        );

        // z: gather lines of fixed (i, j) into contiguous blocks.
        let mut lines = vec![ZERO; data.len()];
        {
            let src: &[Complex64] = data;
            lines
                .par_chunks_mut(plane)
                .enumerate()
                .for_each(|(j, block)| {
                    for i in 0..n {
                        for k in 0..n {
                            block[i * n + k] = src[i + n * j + plane * k];
                        }
                    }
                });
        }
        lines.par_chunks_mut(plane).for_each_init(
            || vec![ZERO; scratch_len],
            |scratch, chunk| fft.process_with_scratch(chunk, scratch),
        );
        data.par_chunks_mut(plane)
            .enumerate()
            .for_each(|(k, chunk)| {
                for j in 0..n {
                    for i in 0..n {
                        chunk[i + n * j] = lines[j * plane + i * n + k];
                    }
                }
            });
    }
}
