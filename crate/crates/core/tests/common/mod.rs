//! Helpers shared by the integration tests.
#![allow(dead_code, clippy::needless_range_loop)]

use euler_spectra::eigen::Sym3;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Cyclic Jacobi on a full 3×3 matrix; returns ascending eigenvalues.
pub fn jacobi(m: &Sym3) -> [f64; 3] {
    let mut a = [[m[0], m[1], m[2]], [m[1], m[3], m[4]], [m[2], m[4], m[5]]];
    for _sweep in 0..100 {
        let off = a[0][1].powi(2) + a[0][2].powi(2) + a[1][2].powi(2);
        if off == 0.0 {
            break;
        }
        for (p, q) in [(0, 1), (0, 2), (1, 2)] {
            if a[p][q] == 0.0 {
                continue;
            }
            let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
            let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
            let t = if theta == 0.0 { 1.0 } else { t };
            let c = 1.0 / (t * t + 1.0).sqrt();
            let s = t * c;
            for row in a.iter_mut() {
                let (x, y) = (row[p], row[q]);
                row[p] = c * x - s * y;
                row[q] = s * x + c * y;
            }
            for k in 0..3 {
                let (x, y) = (a[p][k], a[q][k]);
                a[p][k] = c * x - s * y;
                a[q][k] = s * x + c * y;
            }
        }
    }
    let mut d = [a[0][0], a[1][1], a[2][2]];
    d.sort_by(f64::total_cmp);
    d
}

pub fn random_rotation(rng: &mut ChaCha8Rng) -> [[f64; 3]; 3] {
    // Normalized quaternion.
    let mut q = [0.0f64; 4];
    for x in q.iter_mut() {
        *x = rng.gen_range(-1.0..1.0);
    }
    let n = q.iter().map(|x| x * x).sum::<f64>().sqrt();
    let [w, x, y, z] = q.map(|c| c / n);
    [
        [
            1.0 - 2.0 * (y * y + z * z),
            2.0 * (x * y - w * z),
            2.0 * (x * z + w * y),
        ],
        [
            2.0 * (x * y + w * z),
            1.0 - 2.0 * (x * x + z * z),
            2.0 * (y * z - w * x),
        ],
        [
            2.0 * (x * z - w * y),
            2.0 * (y * z + w * x),
            1.0 - 2.0 * (x * x + y * y),
        ],
    ]
}

/// `R diag(d) Rᵀ` in upper-triangle storage.
pub fn conjugate(r: &[[f64; 3]; 3], d: [f64; 3]) -> Sym3 {
    let e = |i: usize, j: usize| (0..3).map(|k| r[i][k] * d[k] * r[j][k]).sum::<f64>();
    [e(0, 0), e(0, 1), e(0, 2), e(1, 1), e(1, 2), e(2, 2)]
}

pub fn traceless(mut m: Sym3) -> Sym3 {
    let tr = (m[0] + m[3] + m[5]) / 3.0;
    m[0] -= tr;
    m[3] -= tr;
    m[5] -= tr;
    m
}

/// Traceless test matrix number `case`: generic, exactly and nearly
/// degenerate, zero, diagonal and planar-strain cases in rotation.
pub fn oracle_matrix(case: usize, rng: &mut ChaCha8Rng) -> Sym3 {
    match case % 5 {
        0 | 1 => traceless([0; 6].map(|_| rng.gen_range(-1.0..1.0))),
        // Exact double root (a, a, −2a).
        2 => {
            let a = rng.gen_range(-1.0..1.0);
            conjugate(&random_rotation(rng), [a, a, -2.0 * a])
        }
        3 => {
            let a = rng.gen_range(-1.0..1.0);
            let gap = 10f64.powf(rng.gen_range(-12.0..-3.0));
            conjugate(&random_rotation(rng), [a, a + gap, -2.0 * a - gap])
        }
        _ => match case % 3 {
            0 => [0.0; 6],
            1 => {
                let a = rng.gen_range(-1.0..1.0);
                let b = rng.gen_range(-1.0..1.0);
                [a, 0.0, 0.0, b, 0.0, -a - b]
            }
            _ => {
                let a = rng.gen_range(-1.0..1.0);
                conjugate(&random_rotation(rng), [a, 0.0, -a])
            }
        },
    }
}

/// Largest deviation of the closed-form eigenvalues from Jacobi over
/// `count` oracle matrices; panics if the ordering is ever wrong.
pub fn eigen_oracle_error(count: usize, seed: u64) -> f64 {
    use rand::SeedableRng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for case in 0..count {
        let m = oracle_matrix(case, &mut rng);
        let got = euler_spectra::eigen::eigenvalues_sym3(&m);
        let want = jacobi(&m);
        assert!(
            got[0] >= got[1] && got[1] >= got[2],
            "case {case}: {got:?} not descending"
        );
        for k in 0..3 {
            worst = worst.max((got[k] - want[2 - k]).abs());
        }
    }
    worst
}
