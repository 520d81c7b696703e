//! Closed-form eigenvalues of real symmetric 3×3 matrices.
//!
//! The trigonometric solution of the characteristic cubic is accurate for the
//! eigenvalue farthest from the other two, but the remaining pair inherits a
//! square-root loss of precision near a double root. That pair is therefore
//! recomputed from the 2×2 restriction of the matrix to the plane orthogonal
//! to the isolated eigenvector, where it follows from a `hypot` without
//! cancellation.

use std::f64::consts::PI;

/// Upper triangle `[s11, s12, s13, s22, s23, s33]` of a symmetric matrix.
pub type Sym3 = [f64; 6];

#[inline]
fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
fn mat_vec(m: &Sym3, v: [f64; 3]) -> [f64; 3] {
    let [a11, a12, a13, a22, a23, a33] = *m;
    [
        a11 * v[0] + a12 * v[1] + a13 * v[2],
        a12 * v[0] + a22 * v[1] + a23 * v[2],
        a13 * v[0] + a23 * v[1] + a33 * v[2],
    ]
}

/// Eigenvalues of a symmetric matrix, sorted `λ₁ ≥ λ₂ ≥ λ₃`.
///
/// With the mean eigenvalue removed, `p = tr(B²)/6` and `r = det(B)/2`; the
/// roots are `2√p cos(θ − 2πk/3)` with `θ = arccos(clamp(r / p^{3/2}))/3`.
/// The zero matrix (and any multiple of the identity) returns three equal
/// values. Non-finite input yields non-finite output.
pub fn eigenvalues_sym3(m: &Sym3) -> [f64; 3] {
    let [a11, a12, a13, a22, a23, a33] = *m;
    let shift = (a11 + a22 + a33) / 3.0;
    let b: Sym3 = [a11 - shift, a12, a13, a22 - shift, a23, a33 - shift];
    let off = a12 * a12 + a13 * a13 + a23 * a23;
    let p = (b[0] * b[0] + b[3] * b[3] + b[5] * b[5] + 2.0 * off) / 6.0;
    if p == 0.0 {
        return [shift; 3];
    }
    if !p.is_finite() {
        return [f64::NAN; 3];
    }

    let sp = p.sqrt();
    // det(B / √p) / 2, scaled first so large entries cannot overflow.
    let c: Sym3 = b.map(|x| x / sp);
    let det = c[0] * (c[3] * c[5] - c[4] * c[4]) - c[1] * (c[1] * c[5] - c[4] * c[2])
        + c[2] * (c[1] * c[4] - c[3] * c[2]);
    let r = (det / 2.0).clamp(-1.0, 1.0);
    let theta = r.acos() / 3.0;

    let top = 2.0 * sp * theta.cos();
    let bottom = 2.0 * sp * (theta + 2.0 * PI / 3.0).cos();
    let middle = -top - bottom;

    // r >= 0 puts the close pair at the bottom of the spectrum.
    let isolated = if r >= 0.0 { top } else { bottom };
    let refined = match restricted_pair(&b, isolated) {
        Some((hi, lo)) if r >= 0.0 => [isolated, hi, lo],
        Some((hi, lo)) => [hi, lo, isolated],
        None => [top, middle, bottom],
    };

    let mut out = refined.map(|x| x + shift);
    if out[0] < out[1] {
        out.swap(0, 1);
    }
    if out[1] < out[2] {
        out.swap(1, 2);
    }
    if out[0] < out[1] {
        out.swap(0, 1);
    }
    out
}

/// Eigenvalues `(hi, lo)` of traceless `b` on the plane orthogonal to the
/// eigenvector of the simple eigenvalue `mu`.
fn restricted_pair(b: &Sym3, mu: f64) -> Option<(f64, f64)> {
    let rows = [
        [b[0] - mu, b[1], b[2]],
        [b[1], b[3] - mu, b[4]],
        [b[2], b[4], b[5] - mu],
    ];
    let candidates = [
        cross(rows[0], rows[1]),
        cross(rows[0], rows[2]),
        cross(rows[1], rows[2]),
    ];
    let (u, norm2) =
        candidates
            .iter()
            .map(|c| (*c, dot(*c, *c)))
            .fold(
                ([0.0; 3], 0.0),
                |best, cur| if cur.1 > best.1 { cur } else { best },
            );
    if !(norm2 > 0.0 && norm2.is_finite()) {
        return None;
    }
    let inv = norm2.sqrt().recip();
    let u = u.map(|x| x * inv);

    let w = if u[0].abs() > u[1].abs() {
        let s = (u[0] * u[0] + u[2] * u[2]).sqrt().recip();
        [-u[2] * s, 0.0, u[0] * s]
    } else {
        let s = (u[1] * u[1] + u[2] * u[2]).sqrt().recip();
        [0.0, u[2] * s, -u[1] * s]
    };
    let q = cross(u, w);

    let bw = mat_vec(b, w);
    let bq = mat_vec(b, q);
    let ww = dot(w, bw);
    let qq = dot(q, bq);
    let wq = dot(w, bq);

    let mean = -0.5 * mu;
    let half_gap = (0.5 * (ww - qq)).hypot(wq);
    Some((mean + half_gap, mean - half_gap))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: [f64; 3], b: [f64; 3], tol: f64) -> bool {
        a.iter().zip(b.iter()).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn diagonal() {
        assert_eq!(
            eigenvalues_sym3(&[1.0, 0.0, 0.0, 0.0, 0.0, -1.0]),
            [1.0, 0.0, -1.0]
        );
        let e = eigenvalues_sym3(&[-1.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        assert!(close(e, [1.0, 0.0, -1.0], 1e-15));
    }

    #[test]
    fn zero_matrix() {
        assert_eq!(eigenvalues_sym3(&[0.0; 6]), [0.0, 0.0, 0.0]);
    }

    #[test]
    fn shear_block() {
        let e = eigenvalues_sym3(&[0.0, 0.5, 0.0, 0.0, 0.0, 0.0]);
        assert!(close(e, [0.5, 0.0, -0.5], 1e-15), "{e:?}");
    }

    #[test]
    fn exact_double_roots() {
        let e = eigenvalues_sym3(&[1.0, 0.0, 0.0, 1.0, 0.0, -2.0]);
        assert!(close(e, [1.0, 1.0, -2.0], 1e-15), "{e:?}");
        let e = eigenvalues_sym3(&[2.0, 0.0, 0.0, -1.0, 0.0, -1.0]);
        assert!(close(e, [2.0, -1.0, -1.0], 1e-15), "{e:?}");
    }

    #[test]
    fn identity_multiple() {
        assert_eq!(eigenvalues_sym3(&[3.0, 0.0, 0.0, 3.0, 0.0, 3.0]), [3.0; 3]);
    }

    #[test]
    fn non_finite_propagates() {
        let e = eigenvalues_sym3(&[f64::NAN, 0.0, 0.0, 0.0, 0.0, 0.0]);
        assert!(e.iter().any(|x| !x.is_finite()));
        let e = eigenvalues_sym3(&[f64::INFINITY, 0.0, 0.0, 0.0, 0.0, 0.0]);
        assert!(e.iter().any(|x| !x.is_finite()));
    }

    #[test]
    fn scale_invariant() {
        let m = [0.3, -0.7, 0.2, 0.5, 0.1, -0.8];
        let e = eigenvalues_sym3(&m);
        let big = eigenvalues_sym3(&m.map(|x| x * 1e150));
        assert!(close(big.map(|x| x / 1e150), e, 1e-14));
    }
}
