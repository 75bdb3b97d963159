use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lasso::cluster_multiplicity;
use crate::linalg::{random_subspace, seeded_rng};
use crate::models::SymmetricOperator;

use super::eigendecompose;

pub const MINMAX_TOL: f64 = 1e-10;

#[derive(Clone, Debug, Serialize)]
pub struct MinMaxReport {
    pub k: usize,
    pub lambda_k: f64,
    /// Max Rayleigh quotient on the span of the first `k` eigenvectors.
    pub achieved: f64,
    pub achieved_ok: bool,
    pub trials: usize,
    /// Smallest max-Rayleigh quotient over the random subspaces.
    pub min_random_max: f64,
    pub violations: usize,
    pub holds: bool,
}

/// Largest Rayleigh quotient of `op` on the span of the orthonormal columns of `basis`.
pub fn max_rayleigh(op: &SymmetricOperator, basis: &DMatrix<f64>) -> f64 {
    let restricted = basis.transpose() * op.matrix() * basis;
    restricted
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .fold(f64::NEG_INFINITY, |a, &b| a.max(b))
}

/// One-sided certificates for `λ_k = min_{dim U = k} max_{x ∈ U} ⟨Tx, x⟩`:
/// the first `k` eigenvectors attain `λ_k`, and no sampled `k`-dimensional
/// subspace does better than `λ_k − 1e−10`.
pub fn minmax_check(op: &SymmetricOperator, k: usize, trials: usize, seed: u64) -> Result<MinMaxReport> {
    let n = op.dim();
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!("k must lie in 1..={n}, got {k}")));
    }
    let eig = eigendecompose(op)?;
    let lambda_k = eig.values[k - 1];
    let achieved = max_rayleigh(op, &eig.columns(0, k));
    let achieved_ok = (achieved - lambda_k).abs() <= MINMAX_TOL;

    let mut rng = seeded_rng(seed);
    let mut min_random_max = f64::INFINITY;
    let mut violations = 0;
    for _ in 0..trials {
        let u = random_subspace(n, k, &mut rng);
        let value = max_rayleigh(op, &u);
        if value < lambda_k - MINMAX_TOL {
            violations += 1;
        }
        min_random_max = min_random_max.min(value);
    }
    Ok(MinMaxReport {
        k,
        lambda_k,
        achieved,
        achieved_ok,
        trials,
        min_random_max,
        violations,
        holds: achieved_ok && violations == 0,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct RayleighReport {
    pub rayleigh_quotient: f64,
    pub distance_sq: f64,
    pub bound: f64,
    pub holds: bool,
}

/// Distance of a unit vector with small Rayleigh quotient to the span `V` of
/// the first `k` distinct eigenspaces: `dist(V, x)² ≤ (Λ + ε)/λ_{k+1}`.
///
/// Hypotheses: `0 ≤ λ₁ < … < λ_k < Λ < λ_{k+1}` over distinct eigenvalues,
/// `‖x‖ = 1`, `⟨Tx, x⟩ ≤ Λ + ε`. A violated hypothesis is returned as
/// [`Error::Hypothesis`].
pub fn rayleigh_distance_check(
    op: &SymmetricOperator,
    k: usize,
    lambda: f64,
    eps: f64,
    x: &DVector<f64>,
) -> Result<RayleighReport> {
    let hyp = |msg: String| Err(Error::Hypothesis(msg));
    if x.len() != op.dim() {
        return Err(Error::DimensionMismatch { expected: op.dim(), got: x.len() });
    }
    if k == 0 {
        return hyp("k must be at least 1".into());
    }
    if !(eps >= 0.0) {
        return hyp(format!("eps = {eps} must be non-negative"));
    }
    if (x.norm() - 1.0).abs() > 1e-10 {
        return hyp(format!("x must be a unit vector, |x| = {}", x.norm()));
    }
    let eig = eigendecompose(op)?;
    let tol = (1e-8 * op.norm()).max(f64::MIN_POSITIVE);
    let clusters = cluster_multiplicity(&eig.values, tol);
    if clusters.len() < k + 1 {
        return hyp(format!("need {} distinct eigenvalues, found {}", k + 1, clusters.len()));
    }
    if clusters[0].0 < -tol {
        return hyp(format!("lowest eigenvalue {} is negative", clusters[0].0));
    }
    let lambda_k = clusters[k - 1].0;
    let lambda_next = clusters[k].0;
    if !(lambda_k < lambda && lambda < lambda_next) {
        return hyp(format!("need λ_k = {lambda_k} < Λ = {lambda} < λ_(k+1) = {lambda_next}"));
    }
    let rayleigh_quotient = x.dot(&(op.matrix() * x));
    if rayleigh_quotient > lambda + eps {
        return hyp(format!("<Tx, x> = {rayleigh_quotient} exceeds Λ + ε = {}", lambda + eps));
    }
    let dim_v: usize = clusters[..k].iter().map(|c| c.1).sum();
    let v = eig.columns(0, dim_v);
    let residual = x - &v * (v.transpose() * x);
    let distance_sq = residual.norm_squared();
    let bound = (lambda + eps) / lambda_next;
    Ok(RayleighReport { rayleigh_quotient, distance_sq, bound, holds: distance_sq <= bound })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{random_symmetric, seeded_rng};

    #[test]
    fn minmax_diag_k2() {
        let op = SymmetricOperator::from_diagonal(&[1.0, 2.0, 3.0]);
        let r = minmax_check(&op, 2, 50, 1).unwrap();
        assert!((r.achieved - 2.0).abs() < 1e-12);
        assert!(r.holds);
        let e1e3 = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        assert!((max_rayleigh(&op, &e1e3) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn minmax_seeded_random() {
        let mut rng = seeded_rng(77);
        let op = SymmetricOperator::symmetrized(&(random_symmetric(10, &mut rng) * 4.0));
        let r = minmax_check(&op, 4, 100, 5).unwrap();
        assert!(r.achieved_ok);
        assert_eq!(r.violations, 0);
        assert!(r.min_random_max >= r.lambda_k - 1e-10);
    }

    #[test]
    fn minmax_rejects_bad_k() {
        let op = SymmetricOperator::from_diagonal(&[1.0, 2.0]);
        assert!(minmax_check(&op, 0, 1, 0).is_err());
        assert!(minmax_check(&op, 3, 1, 0).is_err());
    }

    #[test]
    fn rayleigh_eigenvector_has_zero_distance() {
        let op = SymmetricOperator::from_diagonal(&[0.0, 1.0, 10.0]);
        let x = DVector::from_vec(vec![1.0, 0.0, 0.0]);
        let eps = 0.3;
        let r = rayleigh_distance_check(&op, 2, 2.0, eps, &x).unwrap();
        assert_eq!(r.distance_sq, 0.0);
        assert!((r.bound - (2.0 + eps) / 10.0).abs() < 1e-15);
        assert!(r.holds);
    }

    #[test]
    fn rayleigh_mixed_vector() {
        let op = SymmetricOperator::from_diagonal(&[0.0, 1.0, 10.0]);
        let x = DVector::from_vec(vec![0.9_f64.sqrt(), 0.0, 0.1_f64.sqrt()]);
        let r = rayleigh_distance_check(&op, 2, 2.0, 0.0, &x).unwrap();
        assert!((r.rayleigh_quotient - 1.0).abs() < 1e-12);
        assert!((r.distance_sq - 0.1).abs() < 1e-12);
        assert!((r.bound - 0.2).abs() < 1e-15);
        assert!(r.holds);
    }

    #[test]
    fn rayleigh_hypothesis_violations() {
        let op = SymmetricOperator::from_diagonal(&[0.0, 1.0, 10.0]);
        let x = DVector::from_vec(vec![1.0, 0.0, 0.0]);
        // Λ not in the spectral gap
        assert!(matches!(rayleigh_distance_check(&op, 2, 0.5, 0.0, &x), Err(Error::Hypothesis(_))));
        // not enough distinct eigenvalues
        assert!(matches!(rayleigh_distance_check(&op, 3, 20.0, 0.0, &x), Err(Error::Hypothesis(_))));
        // Rayleigh quotient too large
        let far = DVector::from_vec(vec![0.0, 0.0, 1.0]);
        assert!(matches!(rayleigh_distance_check(&op, 2, 2.0, 0.0, &far), Err(Error::Hypothesis(_))));
        // negative spectrum
        let neg = SymmetricOperator::from_diagonal(&[-1.0, 1.0, 10.0]);
        assert!(matches!(rayleigh_distance_check(&neg, 2, 2.0, 0.0, &x), Err(Error::Hypothesis(_))));
        // not a unit vector
        let long = DVector::from_vec(vec![2.0, 0.0, 0.0]);
        assert!(matches!(rayleigh_distance_check(&op, 2, 2.0, 0.0, &long), Err(Error::Hypothesis(_))));
    }

    #[test]
    fn rayleigh_uses_whole_eigenspaces() {
        // λ = 1 has multiplicity 2; V includes both directions
        let op = SymmetricOperator::from_diagonal(&[1.0, 1.0, 4.0]);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let x = DVector::from_vec(vec![s, s, 0.0]);
        let r = rayleigh_distance_check(&op, 1, 2.0, 0.0, &x).unwrap();
        assert!(r.distance_sq < 1e-15);
    }
}
