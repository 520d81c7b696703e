//! Randomized properties of the building blocks.

use euler_spectra::deformation::SpectraField;
use euler_spectra::diagnostics::{evaluate, fd4_derivative};
use euler_spectra::eigen::eigenvalues_sym3;
use euler_spectra::fft::Fft3;
use euler_spectra::field::Field;
use euler_spectra::grid::Grid;
use euler_spectra::init::random_solenoidal;
use euler_spectra::snapshot::{Snapshot, SnapshotKind};
use proptest::prelude::*;

fn sym3() -> impl Strategy<Value = [f64; 6]> {
    prop::array::uniform6(-10.0f64..10.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn eigenvalues_are_ordered_and_sum_to_the_trace(m in sym3()) {
        let l = eigenvalues_sym3(&m);
        prop_assert!(l[0] >= l[1] && l[1] >= l[2]);
        let tr = m[0] + m[3] + m[5];
        let scale = m.iter().fold(1.0f64, |a, x| a.max(x.abs()));
        prop_assert!((l[0] + l[1] + l[2] - tr).abs() <= 1e-12 * scale);
        // Frobenius norm is the eigenvalue norm.
        let frob = m[0] * m[0] + m[3] * m[3] + m[5] * m[5]
            + 2.0 * (m[1] * m[1] + m[2] * m[2] + m[4] * m[4]);
        let sq = l.iter().map(|x| x * x).sum::<f64>();
        prop_assert!((frob - sq).abs() <= 1e-11 * scale * scale);
    }

    #[test]
    fn eigenvalues_scale_linearly(m in sym3(), c in 0.1f64..10.0) {
        let l = eigenvalues_sym3(&m);
        let ls = eigenvalues_sym3(&m.map(|x| c * x));
        let scale = m.iter().fold(1.0f64, |a, x| a.max(x.abs()));
        for k in 0..3 {
            prop_assert!((ls[k] - c * l[k]).abs() <= 1e-11 * c * scale);
        }
    }

    #[test]
    fn fft_round_trip(values in prop::collection::vec(-5.0f64..5.0, 512)) {
        let g = Grid::new(8).unwrap();
        let fft = Fft3::new(g);
        let f = Field::from_vec(g, values.clone()).unwrap();
        let back = fft.inverse(&fft.forward(&f));
        for (a, b) in back.values().iter().zip(&values) {
            prop_assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn leray_projection_is_idempotent_and_solenoidal(seed in any::<u64>()) {
        let g = Grid::new(8).unwrap();
        let v = random_solenoidal(g, seed, 1.5, 2.0, 1.0).unwrap();
        prop_assert!(v.divergence_ratio() < 1e-14);
        let again = v.leray_project();
        prop_assert!(again.max_abs_diff(&v) <= 1e-15 * v.max_abs());
    }

    #[test]
    fn snapshot_round_trip_is_bit_exact(values in prop::collection::vec(any::<f64>(), 3 * 512), t in any::<f64>()) {
        let g = Grid::new(8).unwrap();
        let arrays = [0, 1, 2].map(|c| Field::from_vec(g, values[c * 512..(c + 1) * 512].to_vec()).unwrap());
        let snap = Snapshot { kind: SnapshotKind::Velocity, grid: g, time: t, arrays };
        let back = Snapshot::decode(&snap.encode()).unwrap();
        prop_assert_eq!(back.time.to_bits(), t.to_bits());
        for c in 0..3 {
            for (a, b) in back.arrays[c].values().iter().zip(snap.arrays[c].values()) {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }

    #[test]
    fn fourth_order_differences_are_exact_on_quartics(
        c in prop::array::uniform5(-2.0f64..2.0), h in 0.01f64..0.5,
    ) {
        let p = |t: f64| c[0] + t * (c[1] + t * (c[2] + t * (c[3] + t * c[4])));
        let dp = |t: f64| c[1] + t * (2.0 * c[2] + t * (3.0 * c[3] + t * 4.0 * c[4]));
        let values: Vec<f64> = (0..9).map(|i| p(i as f64 * h)).collect();
        let d = fd4_derivative(&values, h).unwrap();
        for (i, di) in d.iter().enumerate() {
            let want = dp(i as f64 * h);
            prop_assert!((di - want).abs() < 1e-9 * (1.0 + want.abs()) / h, "{} vs {}", di, want);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn static_identities_hold_for_random_fields(seed in any::<u64>(), slope in -2.0f64..4.0) {
        let fft = Fft3::new(Grid::new(16).unwrap());
        let v = random_solenoidal(fft.grid(), seed, 2.5, slope, 1.0).unwrap();
        let eval = evaluate(&fft, &v, 0.0, None, None).unwrap();
        prop_assert!(eval.identities.all_pass(), "{:?}", eval.identities);
        let spectra = SpectraField::from_velocity(&fft, &v).unwrap();
        let (lo, hi) = spectra.lambda2_extrema();
        prop_assert!(lo <= hi);
        prop_assert!(eval.record.min_l2 == lo && eval.record.max_l2 == hi);
    }
}
