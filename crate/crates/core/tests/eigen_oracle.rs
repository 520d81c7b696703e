//! Closed-form eigenvalues against cyclic Jacobi rotations.

mod common;

#[test]
fn closed_form_matches_jacobi_on_ten_thousand_matrices() {
    let worst = common::eigen_oracle_error(10_000, 20);
    assert!(worst <= 1e-10, "worst eigenvalue error {worst:e}");
}

#[test]
fn jacobi_reproduces_a_known_spectrum() {
    let r = common::random_rotation(
        &mut <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(1),
    );
    let m = common::conjugate(&r, [0.7, -0.2, -0.5]);
    let got = common::jacobi(&m);
    for (g, w) in got.iter().zip([-0.5, -0.2, 0.7]) {
        assert!((g - w).abs() < 1e-14, "{got:?}");
    }
}
