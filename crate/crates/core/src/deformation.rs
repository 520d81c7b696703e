//! Velocity gradient, deformation tensor and its ordered eigenvalue fields.
//!
//! Index convention: `V_ij = ∂v_j/∂x_i` (row = derivative direction),
//! `S_ij = (V_ij + V_ji)/2`. The antisymmetric part is never stored; it is
//! `A_ij = ½ ε_ijk ω_k` with `ε_123 = 1`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eigen::{eigenvalues_sym3, Sym3};
use crate::error::{Error, Result};
use crate::fft::Fft3;
use crate::field::{Field, VectorField, VectorSpectrum};
use crate::grid::Grid;
use crate::reduce;

/// Slot of `S_ij` in the six stored components.
#[inline]
pub const fn sym_slot(i: usize, j: usize) -> usize {
    const SLOTS: [[usize; 3]; 3] = [[0, 1, 2], [1, 3, 4], [2, 4, 5]];
    SLOTS[i][j]
}

/// Levi-Civita symbol `ε_ijk` on zero-based indices.
#[inline]
pub const fn levi_civita(i: usize, j: usize, k: usize) -> f64 {
    match (i, j, k) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
        _ => 0.0,
    }
}

/// The nine physical components `V_ij = ∂v_j/∂x_i`.
#[derive(Clone, Debug)]
pub struct VelocityGradient {
    components: [[Field; 3]; 3],
}

impl VelocityGradient {
    /// Spectral derivatives of every velocity component, transformed back.
    pub fn from_velocity(fft: &Fft3, v: &VectorSpectrum) -> Self {
        let derivs: Vec<_> = (0..9).map(|ij| v[ij % 3].derivative(ij / 3)).collect();
        let refs: Vec<_> = derivs.iter().collect();
        let mut fields = fft.inverse_many(&refs).into_iter();
        let components = [0, 1, 2].map(|_| [0, 1, 2].map(|_| fields.next().expect("nine fields")));
        Self { components }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> &Field {
        &self.components[i][j]
    }

    pub fn grid(&self) -> Grid {
        self.components[0][0].grid()
    }

    /// Symmetric part.
    pub fn deformation(&self) -> SymTensorField {
        let g = self.grid();
        let v = &self.components;
        let sym = |i: usize, j: usize| Field::from_index_fn(g, |p| 0.5 * (v[i][j][p] + v[j][i][p]));
        SymTensorField {
            components: [
                sym(0, 0),
                sym(0, 1),
                sym(0, 2),
                sym(1, 1),
                sym(1, 2),
                sym(2, 2),
            ],
        }
    }

    /// Pointwise `|∇v|² = Σ_ij V_ij V_ij`.
    pub fn norm_sqr(&self) -> Field {
        let v = &self.components;
        Field::from_index_fn(self.grid(), |p| {
            let mut acc = 0.0;
            for row in v {
                for c in row {
                    acc += c[p] * c[p];
                }
            }
            acc
        })
    }
}

/// Symmetric tensor field stored as `[S11, S12, S13, S22, S23, S33]`.
#[derive(Clone, Debug)]
pub struct SymTensorField {
    components: [Field; 6],
}

impl SymTensorField {
    pub fn new(components: [Field; 6]) -> Result<Self> {
        let g = components[0].grid();
        if components.iter().any(|c| c.grid() != g) {
            return Err(Error::Contract(
                "tensor components on different grids".into(),
            ));
        }
        Ok(Self { components })
    }

    /// Deformation tensor of a spectral velocity field.
    pub fn from_velocity(fft: &Fft3, v: &VectorSpectrum) -> Self {
        VelocityGradient::from_velocity(fft, v).deformation()
    }

    pub fn grid(&self) -> Grid {
        self.components[0].grid()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> &Field {
        &self.components[sym_slot(i, j)]
    }

    #[inline]
    pub fn at(&self, p: usize) -> Sym3 {
        let c = &self.components;
        [c[0][p], c[1][p], c[2][p], c[3][p], c[4][p], c[5][p]]
    }

    /// `max |tr S| / max |S_ij|`; zero for a zero tensor.
    pub fn trace_defect(&self) -> f64 {
        let c = &self.components;
        let n = self.grid().len();
        let tr = reduce::max_by(n, |p| (c[0][p] + c[3][p] + c[5][p]).abs());
        let scale = c.iter().map(Field::max_abs).fold(0.0, f64::max);
        if scale == 0.0 {
            0.0
        } else {
            tr / scale
        }
    }

    /// Pointwise `S_ij S_ij`.
    pub fn norm_sqr(&self) -> Field {
        let c = &self.components;
        Field::from_index_fn(self.grid(), |p| {
            c[0][p] * c[0][p]
                + c[3][p] * c[3][p]
                + c[5][p] * c[5][p]
                + 2.0 * (c[1][p] * c[1][p] + c[2][p] * c[2][p] + c[4][p] * c[4][p])
        })
    }

    /// Pointwise cubic trace `Σ_ijk S_kj S_ik S_ij = tr(S³)`.
    pub fn cubic_trace(&self) -> Field {
        Field::from_index_fn(self.grid(), |p| {
            let s = self.at(p);
            let m = |i: usize, j: usize| s[sym_slot(i, j)];
            let mut acc = 0.0;
            for i in 0..3 {
                for j in 0..3 {
                    for k in 0..3 {
                        acc += m(k, j) * m(i, k) * m(i, j);
                    }
                }
            }
            acc
        })
    }

    /// Pointwise stretching density `Σ_jk S_jk ω_j ω_k`.
    pub fn stretching(&self, omega: &VectorField) -> Field {
        let w = omega.components();
        Field::from_index_fn(self.grid(), |p| {
            let s = self.at(p);
            let o = [w[0][p], w[1][p], w[2][p]];
            let mut acc = 0.0;
            for j in 0..3 {
                for k in 0..3 {
                    acc += s[sym_slot(j, k)] * o[j] * o[k];
                }
            }
            acc
        })
    }

    /// Ordered eigenvalues at every grid point.
    pub fn eigenvalues(&self) -> Result<SpectraField> {
        let n = self.grid().len();
        let triples: Vec<[f64; 3]> = (0..n)
            .into_par_iter()
            .map(|p| eigenvalues_sym3(&self.at(p)))
            .collect();
        if let Some(index) = triples
            .par_iter()
            .position_first(|t| t.iter().any(|x| !x.is_finite()))
        {
            return Err(Error::NonFinite {
                what: "deformation tensor",
                index,
            });
        }
        let g = self.grid();
        let lambda = [0, 1, 2].map(|c| Field::from_index_fn(g, |p| triples[p][c]));
        Ok(SpectraField { lambda })
    }
}

/// Ordered eigenvalue fields `λ₁ ≥ λ₂ ≥ λ₃` of the deformation tensor.
#[derive(Clone, Debug)]
pub struct SpectraField {
    lambda: [Field; 3],
}

impl SpectraField {
    /// Wraps externally supplied eigenvalue fields after checking the ordering.
    pub fn new(lambda: [Field; 3]) -> Result<Self> {
        let g = lambda[0].grid();
        if lambda.iter().any(|c| c.grid() != g) {
            return Err(Error::Contract(
                "eigenvalue fields on different grids".into(),
            ));
        }
        for (c, f) in lambda.iter().enumerate() {
            f.check_finite(["lambda1", "lambda2", "lambda3"][c])?;
        }
        if let Some(p) = (0..g.len())
            .into_par_iter()
            .position_first(|p| !(lambda[0][p] >= lambda[1][p] && lambda[1][p] >= lambda[2][p]))
        {
            return Err(Error::Contract(format!(
                "eigenvalues not ordered at grid index {p}"
            )));
        }
        Ok(Self { lambda })
    }

    /// The same triple at every grid point.
    pub fn uniform(grid: Grid, triple: [f64; 3]) -> Result<Self> {
        Self::new(triple.map(|x| Field::from_index_fn(grid, |_| x)))
    }

    /// Pipeline `v → S → Λ`.
    pub fn from_velocity(fft: &Fft3, v: &VectorSpectrum) -> Result<Self> {
        SymTensorField::from_velocity(fft, v).eigenvalues()
    }

    pub fn grid(&self) -> Grid {
        self.lambda[0].grid()
    }

    /// `λ_{c+1}` for `c` in `0..3`.
    #[inline]
    pub fn lambda(&self, c: usize) -> &Field {
        &self.lambda[c]
    }

    #[inline]
    pub fn at(&self, p: usize) -> [f64; 3] {
        [self.lambda[0][p], self.lambda[1][p], self.lambda[2][p]]
    }

    /// `(λ₂⁺, λ₂⁻) = (max(λ₂, 0), min(λ₂, 0))`.
    pub fn lambda2_split(&self) -> (Field, Field) {
        let l2 = &self.lambda[1];
        let g = self.grid();
        (
            Field::from_index_fn(g, |p| l2[p].max(0.0)),
            Field::from_index_fn(g, |p| l2[p].min(0.0)),
        )
    }

    /// Root mean square of `λ₁` over the grid.
    pub fn rms_lambda1(&self) -> f64 {
        let l1 = &self.lambda[0];
        (reduce::pairwise_sum_by(l1.values().len(), |p| l1[p] * l1[p]) / l1.values().len() as f64)
            .sqrt()
    }

    /// Classification threshold used when none is configured: `1e-10 · rms(λ₁)`.
    pub fn default_tolerance(&self) -> f64 {
        1e-10 * self.rms_lambda1()
    }

    /// ε-ratio denominator floor used when none is configured: `1e-12 · rms(λ₁)`.
    pub fn default_epsilon_floor(&self) -> f64 {
        1e-12 * self.rms_lambda1()
    }

    /// Grid extrema of `λ₂`.
    pub fn lambda2_extrema(&self) -> (f64, f64) {
        self.lambda[1].min_max()
    }

    /// Places the field in `A₊`, `A₋` or neither using strict inequalities
    /// relaxed by `tolerance`.
    pub fn classify(&self, tolerance: f64) -> Classification {
        let (min_lambda2, max_lambda2) = self.lambda2_extrema();
        Classification::from_extrema(min_lambda2, max_lambda2, tolerance)
    }

    /// Pointwise `ε = |λ₂| / λ` with `λ = λ₁` on `A₊` and `λ = −λ₃` on `A₋`.
    ///
    /// Points where `λ ≤ floor` are marked NaN and counted as excluded.
    pub fn epsilon_ratio(&self, class: &Classification, floor: f64) -> Result<EpsilonField> {
        let denominator: &(dyn Fn(usize) -> f64 + Sync) = match class.class {
            AdmissibleClass::APlus => &|p| self.lambda[0][p],
            AdmissibleClass::AMinus => &|p| -self.lambda[2][p],
            AdmissibleClass::Neither => {
                return Err(Error::Contract(
                    "epsilon ratio is only defined on the admissible classes".into(),
                ))
            }
        };
        let l2 = &self.lambda[1];
        let eps = Field::from_index_fn(self.grid(), |p| {
            let d = denominator(p);
            if d > floor {
                l2[p].abs() / d
            } else {
                f64::NAN
            }
        });
        let excluded = eps.values().par_iter().filter(|e| e.is_nan()).count();
        let (min, max) = eps.min_max();
        let defined = excluded < eps.values().len();
        Ok(EpsilonField {
            eps,
            excluded_count: excluded,
            min: defined.then_some(min),
            max: defined.then_some(max),
        })
    }
}

/// Admissible class of a deformation spectrum.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum AdmissibleClass {
    /// `inf λ₂ > 0`: planar stretching everywhere.
    APlus,
    /// `sup λ₂ < 0`: linear stretching everywhere.
    AMinus,
    Neither,
}

impl std::fmt::Display for AdmissibleClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            AdmissibleClass::APlus => "APlus",
            AdmissibleClass::AMinus => "AMinus",
            AdmissibleClass::Neither => "Neither",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub class: AdmissibleClass,
    pub min_lambda2: f64,
    pub max_lambda2: f64,
    pub tolerance: f64,
}

impl Classification {
    pub fn from_extrema(min_lambda2: f64, max_lambda2: f64, tolerance: f64) -> Self {
        let class = if min_lambda2 > tolerance {
            AdmissibleClass::APlus
        } else if max_lambda2 < -tolerance {
            AdmissibleClass::AMinus
        } else {
            AdmissibleClass::Neither
        };
        Self {
            class,
            min_lambda2,
            max_lambda2,
            tolerance,
        }
    }

    pub fn is_admissible(&self) -> bool {
        self.class != AdmissibleClass::Neither
    }
}

/// Pointwise ε-ratio with excluded points stored as NaN.
#[derive(Clone, Debug)]
pub struct EpsilonField {
    pub eps: Field,
    pub excluded_count: usize,
    /// Smallest defined value; `None` when every point was excluded.
    pub min: Option<f64>,
    pub max: Option<f64>,
}

/// One time sample of the `λ₂` grid extrema.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Lambda2Sample {
    pub t: f64,
    pub min_lambda2: f64,
    pub max_lambda2: f64,
}

/// Earliest sample at which the sign condition defining the initial class
/// (`min λ₂ > tolerance` on `A₊`, `max λ₂ < −tolerance` on `A₋`) fails;
/// `None` if it never does (or the class is `Neither`).
pub fn first_zero_touching(
    history: &[Lambda2Sample],
    class: &Classification,
    tolerance: f64,
) -> Result<Option<f64>> {
    if history.is_empty() {
        return Err(Error::Contract(
            "first zero touching needs a non-empty history".into(),
        ));
    }
    let violated = |s: &Lambda2Sample| match class.class {
        AdmissibleClass::APlus => !(s.min_lambda2 > tolerance),
        AdmissibleClass::AMinus => !(s.max_lambda2 < -tolerance),
        AdmissibleClass::Neither => false,
    };
    Ok(history.iter().find(|s| violated(s)).map(|s| s.t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::VectorField;

    fn spectral(grid: Grid, f: impl Fn([f64; 3]) -> [f64; 3] + Sync) -> (Fft3, VectorSpectrum) {
        let fft = Fft3::new(grid);
        let v = fft.forward_vector(&VectorField::from_fn(grid, f));
        (fft, v)
    }

    #[test]
    fn shear_gradient_has_single_component() {
        let g = Grid::new(16).unwrap();
        let (fft, v) = spectral(g, |[_, y, _]| [y.sin(), 0.0, 0.0]);
        let grad = VelocityGradient::from_velocity(&fft, &v);
        for i in 0..3 {
            for j in 0..3 {
                let f = grad.get(i, j);
                if (i, j) == (1, 0) {
                    let err = (0..g.len())
                        .map(|p| (f[p] - g.position(p)[1].cos()).abs())
                        .fold(0.0, f64::max);
                    assert!(err < 1e-13);
                } else {
                    assert!(f.max_abs() < 1e-14, "V[{i}][{j}]");
                }
            }
        }
        let s = grad.deformation();
        let err = (0..g.len())
            .map(|p| (s.get(0, 1)[p] - 0.5 * g.position(p)[1].cos()).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-13);
        assert!(s.get(0, 0).max_abs() < 1e-14 && s.get(2, 2).max_abs() < 1e-14);
    }

    #[test]
    fn rotation_like_field_is_purely_antisymmetric() {
        // v = (-sin y, sin x, 0): gradient at the origin is a rigid rotation and
        // the symmetric part vanishes wherever cos x = cos y.
        let g = Grid::new(16).unwrap();
        let (fft, v) = spectral(g, |[x, y, _]| [-y.sin(), x.sin(), 0.0]);
        let grad = VelocityGradient::from_velocity(&fft, &v);
        let o = g.index(0, 0, 0);
        assert!((grad.get(1, 0)[o] + 1.0).abs() < 1e-13);
        assert!((grad.get(0, 1)[o] - 1.0).abs() < 1e-13);
        let s = grad.deformation();
        assert!(s.get(0, 1)[o].abs() < 1e-13);
    }

    #[test]
    fn taylor_green_gradient_at_point() {
        let g = Grid::new(16).unwrap();
        let (fft, v) = spectral(g, |[x, y, z]| {
            [
                x.sin() * y.cos() * z.cos(),
                -x.cos() * y.sin() * z.cos(),
                0.0,
            ]
        });
        let grad = VelocityGradient::from_velocity(&fft, &v);
        // x = π/2 is grid slot n/4.
        let p = g.index(4, 0, 0);
        assert!(grad.get(0, 0)[p].abs() < 1e-13);
    }

    #[test]
    fn antisymmetric_gradient_has_zero_deformation() {
        let g = Grid::new(8).unwrap();
        let f = |s: f64| Field::from_fn(g, move |[x, y, z]| s * (x + 2.0 * y).sin() * z.cos());
        let zero = || Field::zeros(g);
        let grad = VelocityGradient {
            components: [
                [zero(), f(1.0), f(2.0)],
                [f(-1.0), zero(), f(3.0)],
                [f(-2.0), f(-3.0), zero()],
            ],
        };
        let s = grad.deformation();
        assert!((0..6).all(|c| s.components[c].max_abs() == 0.0));
    }

    #[test]
    fn lambda2_split_examples() {
        let g = Grid::new(8).unwrap();
        let pos = SpectraField::uniform(g, [0.5, 0.3, -0.8]).unwrap();
        let (p, m) = pos.lambda2_split();
        assert_eq!((p[0], m[0]), (0.3, 0.0));
        let neg = SpectraField::uniform(g, [0.5, -0.2, -0.3]).unwrap();
        let (p, m) = neg.lambda2_split();
        assert_eq!((p[0], m[0]), (0.0, -0.2));
        let zero = SpectraField::uniform(g, [0.5, 0.0, -0.5]).unwrap();
        let (p, m) = zero.lambda2_split();
        assert_eq!((p.max_abs(), m.max_abs()), (0.0, 0.0));
    }

    #[test]
    fn classification() {
        let g = Grid::new(8).unwrap();
        let shear = SpectraField::uniform(g, [0.5, 0.0, -0.5]).unwrap();
        assert_eq!(shear.classify(1e-12).class, AdmissibleClass::Neither);
        let plus = SpectraField::uniform(g, [0.4, 0.1, -0.5]).unwrap();
        assert_eq!(plus.classify(1e-12).class, AdmissibleClass::APlus);
        let minus = SpectraField::uniform(g, [0.5, -0.1, -0.4]).unwrap();
        assert_eq!(minus.classify(1e-12).class, AdmissibleClass::AMinus);
    }

    #[test]
    fn epsilon_examples() {
        let g = Grid::new(8).unwrap();
        let eps = |triple: [f64; 3]| {
            let s = SpectraField::uniform(g, triple).unwrap();
            let c = s.classify(1e-12);
            s.epsilon_ratio(&c, 1e-12).unwrap()
        };
        assert_eq!(eps([2.0, 1.0, -3.0]).eps[0], 0.5);
        assert_eq!(eps([3.0, -1.0, -2.0]).eps[0], 0.5);
        assert_eq!(eps([1.0, 1.0, -2.0]).eps[0], 1.0);
        let e = eps([2.0, 1.0, -3.0]);
        assert_eq!((e.excluded_count, e.min, e.max), (0, Some(0.5), Some(0.5)));
    }

    #[test]
    fn epsilon_rejects_neither_and_counts_exclusions() {
        let g = Grid::new(8).unwrap();
        let s = SpectraField::uniform(g, [0.5, 0.0, -0.5]).unwrap();
        let c = s.classify(1e-12);
        assert!(matches!(s.epsilon_ratio(&c, 0.0), Err(Error::Contract(_))));

        let plus = SpectraField::uniform(g, [2.0, 1.0, -3.0]).unwrap();
        let c = plus.classify(0.0);
        let e = plus.epsilon_ratio(&c, 5.0).unwrap();
        assert_eq!(e.excluded_count, g.len());
        assert_eq!(e.min, None);
    }

    #[test]
    fn rejects_unordered_spectra() {
        let g = Grid::new(8).unwrap();
        assert!(SpectraField::uniform(g, [0.1, 0.2, -0.3]).is_err());
    }

    #[test]
    fn zero_touching() {
        let class = Classification::from_extrema(0.1, 0.2, 1e-6);
        let s = |t, lo, hi| Lambda2Sample {
            t,
            min_lambda2: lo,
            max_lambda2: hi,
        };
        let clean = [s(0.0, 0.1, 0.3), s(0.5, 0.05, 0.3), s(1.0, 0.07, 0.2)];
        assert_eq!(first_zero_touching(&clean, &class, 1e-6).unwrap(), None);
        let dirty = [s(0.0, 0.1, 0.3), s(0.5, 0.02, 0.3), s(1.0, -0.01, 0.2)];
        assert_eq!(
            first_zero_touching(&dirty, &class, 1e-6).unwrap(),
            Some(1.0)
        );

        let minus = Classification::from_extrema(-0.3, -0.1, 1e-6);
        let hist = [
            s(0.0, -0.3, -0.1),
            s(0.1, -0.3, -0.01),
            s(0.2, -0.3, 0.01),
            s(0.3, -0.3, 0.02),
        ];
        assert_eq!(first_zero_touching(&hist, &minus, 1e-6).unwrap(), Some(0.2));

        assert!(matches!(
            first_zero_touching(&[], &class, 1e-6),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn levi_civita_contracts_to_twice_delta() {
        // Σ_jk ε_jkm ε_jkn = 2 δ_mn
        for m in 0..3 {
            for n in 0..3 {
                let mut acc = 0.0;
                for j in 0..3 {
                    for k in 0..3 {
                        acc += levi_civita(j, k, m) * levi_civita(j, k, n);
                    }
                }
                assert_eq!(acc, if m == n { 2.0 } else { 0.0 });
            }
        }
    }
}
