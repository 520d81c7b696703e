//! Uniform cubic discretization of the periodic box.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// A cubic grid with `n` points per axis on a periodic box of side `box_length`.
///
/// Linear indices are x-fastest: `i + n * (j + n * k)` where `i`, `j`, `k`
/// index the x, y and z axes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    n: usize,
    box_length: f64,
}

impl Grid {
    /// Grid on the standard `[0, 2π)³` torus.
    pub fn new(n: usize) -> Result<Self> {
        Self::with_box_length(n, 2.0 * PI)
    }

    pub fn with_box_length(n: usize, box_length: f64) -> Result<Self> {
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::Config(format!(
                "grid size must be a power of two >= 8, got {n}"
            )));
        }
        if !(box_length.is_finite() && box_length > 0.0) {
            return Err(Error::Config(format!(
                "box length must be positive and finite, got {box_length}"
            )));
        }
        Ok(Self { n, box_length })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn box_length(&self) -> f64 {
        self.box_length
    }

    /// Total number of grid points, `n³`.
    #[inline]
    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn dx(&self) -> f64 {
        self.box_length / self.n as f64
    }

    #[inline]
    pub fn cell_volume(&self) -> f64 {
        self.dx().powi(3)
    }

    /// Volume of the box, `|Ω| = L³`.
    #[inline]
    pub fn volume(&self) -> f64 {
        self.box_length.powi(3)
    }

    /// Integer frequency of storage slot `i` along an axis, in `[-n/2, n/2)`.
    #[inline]
    pub fn mode(&self, i: usize) -> i64 {
        let n = self.n as i64;
        let i = i as i64;
        if i < n / 2 {
            i
        } else {
            i - n
        }
    }

    /// Physical wavenumber of slot `i`: the integer mode scaled by `2π/L`.
    #[inline]
    pub fn wavenumber(&self, i: usize) -> f64 {
        self.mode(i) as f64 * (2.0 * PI / self.box_length)
    }

    /// Integer frequencies for every storage slot of one axis.
    pub fn modes(&self) -> Vec<i64> {
        (0..self.n).map(|i| self.mode(i)).collect()
    }

    /// Whether slot `i` holds the unpaired `-n/2` frequency.
    #[inline]
    pub fn is_nyquist(&self, i: usize) -> bool {
        i == self.n / 2
    }

    /// Coordinate of grid point `i` along any axis.
    #[inline]
    pub fn coordinate(&self, i: usize) -> f64 {
        i as f64 * self.dx()
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.n * (j + self.n * k)
    }

    #[inline]
    pub fn unravel(&self, idx: usize) -> (usize, usize, usize) {
        let n = self.n;
        (idx % n, (idx / n) % n, idx / (n * n))
    }

    /// Physical coordinates `(x, y, z)` of the point with linear index `idx`.
    #[inline]
    pub fn position(&self, idx: usize) -> [f64; 3] {
        let (i, j, k) = self.unravel(idx);
        [self.coordinate(i), self.coordinate(j), self.coordinate(k)]
    }

    /// Physical wavevector of the spectral slot with linear index `idx`.
    #[inline]
    pub fn wavevector(&self, idx: usize) -> [f64; 3] {
        let (i, j, k) = self.unravel(idx);
        [self.wavenumber(i), self.wavenumber(j), self.wavenumber(k)]
    }

    /// Integer mode triple of the spectral slot with linear index `idx`.
    #[inline]
    pub fn mode_triple(&self, idx: usize) -> [i64; 3] {
        let (i, j, k) = self.unravel(idx);
        [self.mode(i), self.mode(j), self.mode(k)]
    }

    /// Largest integer frequency kept by the two-thirds rule.
    #[inline]
    pub fn dealias_cutoff(&self) -> i64 {
        (self.n / 3) as i64
    }

    /// Whether a mode survives two-thirds dealiasing: every `|k_axis| <= n/3`.
    #[inline]
    pub fn is_retained(&self, idx: usize) -> bool {
        let cutoff = self.n as i64;
        self.mode_triple(idx).iter().all(|m| 3 * m.abs() <= cutoff)
    }
}
