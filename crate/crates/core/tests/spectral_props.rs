use dirac_lasso_core::linalg::{random_orthogonal, seeded_rng};
use dirac_lasso_core::spectral::{
    eigendecompose, projector_distance, rayleigh_distance_check, spectral_projector_contour, spectral_projector_eig,
};
use dirac_lasso_core::{SpectralWindow, SymmetricOperator};
use nalgebra::DVector;
use proptest::prelude::*;

/// Spectrum `values` in a random orthonormal frame.
fn rotated(values: &[f64], seed: u64) -> SymmetricOperator {
    let q = random_orthogonal(values.len(), &mut seeded_rng(seed));
    SymmetricOperator::from_diagonal(values).conjugated(&q)
}

fn sorted_distinct(raw: Vec<f64>, min_gap: f64) -> Vec<f64> {
    let mut v = raw;
    v.sort_by(f64::total_cmp);
    for i in 1..v.len() {
        v[i] = v[i].max(v[i - 1] + min_gap);
    }
    v
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn contour_matches_eig_with_enough_nodes(
        raw in prop::collection::vec(-3.0f64..3.0, 3..9),
        start_frac in 0.0f64..1.0,
        k in 1usize..3,
        seed in 0u64..10_000,
    ) {
        let values = sorted_distinct(raw, 0.05);
        let n = values.len();
        prop_assume!(k + 1 < n);
        let start = 1 + ((n - k - 1) as f64 * start_frac) as usize;
        // start in 1..=n-k-1, so both neighbours of the block exist
        let lower = 0.5 * (values[start - 1] + values[start]);
        let upper = 0.5 * (values[start + k - 1] + values[start + k]);
        let w = SpectralWindow::new(lower, upper, k).unwrap();
        let gap = values.iter().map(|&x| (x - lower).abs().min((x - upper).abs())).fold(f64::INFINITY, f64::min);
        let nodes = ((64.0 * w.radius() / gap).ceil() as usize).max(16);
        prop_assume!(nodes <= 4096);
        let op = rotated(&values, seed);
        let exact = spectral_projector_eig(&op, &w).unwrap();
        let contour = spectral_projector_contour(&op, &w, nodes).unwrap();
        prop_assert!(projector_distance(&contour, &exact) <= 1e-8);
    }

    #[test]
    fn rayleigh_bound_has_no_counterexample(
        raw in prop::collection::vec(0.0f64..10.0, 2..9),
        k_frac in 0.0f64..1.0,
        lambda_frac in 0.01f64..0.99,
        coeffs in prop::collection::vec(-1.0f64..1.0, 9),
        extra in 0.0f64..1.0,
        seed in 0u64..10_000,
    ) {
        let values = sorted_distinct(raw, 0.01);
        let n = values.len();
        let k = 1 + ((n - 1) as f64 * k_frac) as usize;
        prop_assume!(k < n);
        let lambda = values[k - 1] + lambda_frac * (values[k] - values[k - 1]);
        let op = rotated(&values, seed);
        let x = DVector::from_iterator(n, coeffs.iter().copied().take(n));
        prop_assume!(x.norm() > 1e-3);
        let x = x.normalize();
        let rq = x.dot(&(op.matrix() * &x));
        let eps = (rq - lambda).max(0.0) + extra;
        let report = rayleigh_distance_check(&op, k, lambda, eps, &x).unwrap();
        prop_assert!(report.holds, "{report:?}");
    }
}

#[test]
fn eigendecomposition_is_orthonormal() {
    let op = rotated(&[1.0, 1.0, 2.0, 5.0], 3);
    let eig = eigendecompose(&op).unwrap();
    let gram = eig.vectors.transpose() * &eig.vectors;
    assert!((gram - nalgebra::DMatrix::identity(4, 4)).norm() <= 1e-12);
}
