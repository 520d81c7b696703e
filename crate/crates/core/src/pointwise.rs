//! Off-grid evaluation of band-limited velocity gradients and local search
//! for the continuum extrema of eigenvalue functions.
//!
//! Grid extrema underestimate the supremum of a smooth field by an amount
//! quadratic in the grid spacing. Starting from the best grid points, a
//! compass search on the trigonometric interpolant recovers the off-grid
//! peak.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::eigen::{eigenvalues_sym3, Sym3};
use crate::field::{Field, VectorSpectrum};
use crate::grid::Grid;

/// Velocity gradient of a spectral velocity at arbitrary points.
#[derive(Clone, Debug)]
pub struct GradientInterpolant {
    /// Integer modes shifted by `max_mode` so they index the phase tables.
    slots: Vec<[usize; 3]>,
    wavevectors: Vec<[f64; 3]>,
    coeffs: Vec<[Complex64; 3]>,
    max_mode: usize,
    kappa: f64,
}

impl GradientInterpolant {
    /// Keeps modes whose largest component exceeds `rel_cutoff` times the
    /// largest coefficient overall. Nyquist slots are skipped, matching the
    /// grid derivative.
    pub fn new(v: &VectorSpectrum, rel_cutoff: f64) -> Self {
        let g = v.grid();
        let [a, b, c] = v.components();
        let threshold = rel_cutoff * v.max_abs();
        let kept: Vec<usize> = (0..g.len())
            .filter(|&idx| {
                let (i, j, k) = g.unravel(idx);
                !(g.is_nyquist(i) || g.is_nyquist(j) || g.is_nyquist(k))
            })
            .filter(|&idx| a[idx].norm().max(b[idx].norm()).max(c[idx].norm()) > threshold)
            .collect();
        let max_mode = kept
            .iter()
            .flat_map(|&idx| g.mode_triple(idx))
            .map(|m| m.unsigned_abs() as usize)
            .max()
            .unwrap_or(0);
        Self {
            slots: kept
                .iter()
                .map(|&idx| g.mode_triple(idx).map(|m| (m + max_mode as i64) as usize))
                .collect(),
            wavevectors: kept.iter().map(|&idx| g.wavevector(idx)).collect(),
            coeffs: kept.iter().map(|&idx| [a[idx], b[idx], c[idx]]).collect(),
            max_mode,
            kappa: 2.0 * std::f64::consts::PI / g.box_length(),
        }
    }

    /// Number of retained modes.
    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `e^{i m κ x}` for `m = −max_mode..=max_mode`.
    fn phases(&self, x: f64) -> Vec<Complex64> {
        let m = self.max_mode as i64;
        (-m..=m)
            .map(|j| {
                let (s, c) = (j as f64 * self.kappa * x).sin_cos();
                Complex64::new(c, s)
            })
            .collect()
    }

    /// `V_ij = ∂v_j/∂x_i` at `x`.
    pub fn gradient_at(&self, x: [f64; 3]) -> [[f64; 3]; 3] {
        let [px, py, pz] = [0, 1, 2].map(|a| self.phases(x[a]));
        let mut out = [[0.0; 3]; 3];
        for ((s, k), c) in self.slots.iter().zip(&self.wavevectors).zip(&self.coeffs) {
            let e = px[s[0]] * py[s[1]] * pz[s[2]];
            for j in 0..3 {
                // Re(i k_i ĉ_j e^{ik·x}) = −k_i Im(ĉ_j e^{ik·x})
                let im = c[j].re * e.im + c[j].im * e.re;
                for (i, row) in out.iter_mut().enumerate() {
                    row[j] -= k[i] * im;
                }
            }
        }
        out
    }

    pub fn deformation_at(&self, x: [f64; 3]) -> Sym3 {
        let v = self.gradient_at(x);
        let s = |i: usize, j: usize| 0.5 * (v[i][j] + v[j][i]);
        [s(0, 0), s(0, 1), s(0, 2), s(1, 1), s(1, 2), s(2, 2)]
    }

    pub fn eigenvalues_at(&self, x: [f64; 3]) -> [f64; 3] {
        eigenvalues_sym3(&self.deformation_at(x))
    }
}

/// Indices of grid points not exceeded by any of their 26 periodic
/// neighbours (`maximize`) or not undercut by them, best first, at most
/// `count` of them.
///
/// Points whose value repeats an already chosen one to within `1e-9`
/// relative are skipped: symmetric flows replicate every extremum, and the
/// copies would crowd out distinct basins.
pub fn local_extrema(field: &Field, count: usize, maximize: bool) -> Vec<usize> {
    let g = field.grid();
    let n = g.n();
    let sign = if maximize { 1.0 } else { -1.0 };
    let value = |idx: usize| sign * field[idx];
    let mut found: Vec<usize> = (0..g.len())
        .into_par_iter()
        .filter(|&idx| {
            let (i, j, k) = g.unravel(idx);
            let v = value(idx);
            for di in [n - 1, 0, 1] {
                for dj in [n - 1, 0, 1] {
                    for dk in [n - 1, 0, 1] {
                        let nb = g.index((i + di) % n, (j + dj) % n, (k + dk) % n);
                        if nb != idx && value(nb) > v {
                            return false;
                        }
                    }
                }
            }
            true
        })
        .collect();
    found.sort_by(|&a, &b| value(b).total_cmp(&value(a)).then(a.cmp(&b)));
    let mut chosen: Vec<usize> = Vec::with_capacity(count);
    for idx in found {
        if chosen.len() == count {
            break;
        }
        let v = value(idx);
        let repeat = chosen
            .iter()
            .any(|&c| (value(c) - v).abs() <= 1e-9 * v.abs().max(f64::MIN_POSITIVE));
        if !repeat {
            chosen.push(idx);
        }
    }
    chosen
}

/// Steps of a [`compass_search`]: initial, smallest and largest.
#[derive(Clone, Copy, Debug)]
pub struct Steps {
    pub start: f64,
    pub min: f64,
    pub max: f64,
}

/// Compass search for a local maximum of `f` (or minimum) from `start`,
/// stopping once the step falls below `steps.min`. Polling is
/// opportunistic, starting from the last successful direction; a success
/// doubles the step (up to `steps.max`), a failed poll halves it. Returns
/// the best point and value; never worse than the start.
pub fn compass_search<F>(f: F, start: [f64; 3], steps: Steps, maximize: bool) -> ([f64; 3], f64)
where
    F: Fn([f64; 3]) -> f64,
{
    let sign = if maximize { 1.0 } else { -1.0 };
    let mut x = start;
    let mut best = sign * f(x);
    let mut h = steps.start;
    let mut last = 0;
    let mut polls = 0;
    while h >= steps.min && polls < 20_000 {
        let mut moved = false;
        for offset in 0..DIRECTIONS.len() {
            let d = DIRECTIONS[(last + offset) % DIRECTIONS.len()];
            let y = [x[0] + h * d[0], x[1] + h * d[1], x[2] + h * d[2]];
            polls += 1;
            let v = sign * f(y);
            if v > best {
                best = v;
                x = y;
                last = (last + offset) % DIRECTIONS.len();
                moved = true;
                break;
            }
        }
        h = if moved {
            (2.0 * h).min(steps.max)
        } else {
            0.5 * h
        };
    }
    (x, sign * best)
}

const DIRECTIONS: [[f64; 3]; 26] = {
    let mut out = [[0.0; 3]; 26];
    let mut n = 0;
    let mut code = 0;
    while code < 27 {
        let d = [
            (code % 3) as f64 - 1.0,
            ((code / 3) % 3) as f64 - 1.0,
            (code / 9) as f64 - 1.0,
        ];
        if code != 13 {
            out[n] = d;
            n += 1;
        }
        code += 1;
    }
    out
};

/// `λ₂` with the kink at its double root rounded off over a width `mu`.
///
/// Maxima of `λ₂` typically sit on the curve where `λ₁ = λ₂`, and minima
/// where `λ₂ = λ₃`. There `λ₂ = ½(λ₁+λ₂) − ½|λ₁−λ₂|` has a conical kink that
/// a compass search cannot follow; replacing `|d|` by `hypot(d, mu)` gives a
/// smooth function lying below `λ₂` (above it for minima) by at most `mu/2`.
pub fn smoothed_lambda2(l: [f64; 3], mu: f64, maximize: bool) -> f64 {
    if maximize {
        0.5 * (l[0] + l[1]) - 0.5 * (l[0] - l[1]).hypot(mu)
    } else {
        0.5 * (l[1] + l[2]) + 0.5 * (l[1] - l[2]).hypot(mu)
    }
}

/// Continuation widths for [`smoothed_lambda2`], relative to the field scale.
const SMOOTHING: [f64; 6] = [1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6];

/// Local extremum of `λ₂` near `start`: compass searches on
/// [`smoothed_lambda2`] with shrinking width, each starting where the
/// previous one ended, then the exact `λ₂` at the final point.
pub fn polish_lambda2(
    interp: &GradientInterpolant,
    start: [f64; 3],
    dx: f64,
    scale: f64,
    maximize: bool,
) -> ([f64; 3], f64) {
    let mut x = start;
    let mut h = 0.5 * dx;
    for mu in SMOOTHING.map(|m| m * scale) {
        let f = |y: [f64; 3]| smoothed_lambda2(interp.eigenvalues_at(y), mu, maximize);
        let steps = Steps {
            start: h,
            min: 1e-5 * dx,
            max: 0.5 * dx,
        };
        x = compass_search(f, x, steps, maximize).0;
        // Later stages start near their optimum; the search expands if not.
        h = 0.01 * dx;
    }
    (x, interp.eigenvalues_at(x)[1])
}

/// Continuum estimates `(min λ₂, max λ₂)` of the interpolated velocity.
///
/// `sampled` holds `λ₂` on some grid (typically the simulation grid or a
/// refinement of it); the `candidates` best distinct local extrema of each
/// sign seed [`polish_lambda2`]. The result is never less extreme than the
/// grid values.
pub fn refined_lambda2_extrema(
    interp: &GradientInterpolant,
    sampled: &Field,
    candidates: usize,
) -> (f64, f64) {
    let g: Grid = sampled.grid();
    let (grid_min, grid_max) = sampled.min_max();
    let scale = grid_min.abs().max(grid_max.abs());
    if interp.is_empty() || scale == 0.0 {
        return (grid_min, grid_max);
    }
    let search = |maximize: bool| {
        local_extrema(sampled, candidates, maximize)
            .into_par_iter()
            .map(|idx| polish_lambda2(interp, g.position(idx), g.dx(), scale, maximize).1)
            .collect::<Vec<f64>>()
    };
    let hi = search(true).into_iter().fold(grid_max, f64::max);
    let lo = search(false).into_iter().fold(grid_min, f64::min);
    (lo, hi)
}
