//! Eigendecomposition, continuous enumeration of eigenvalue families, spectral
//! windows and projectors, and variational checks.

mod projector;
mod properties;
mod variational;
mod window;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::models::{OperatorFamily, SymmetricOperator};

pub use projector::{projector_distance, spectral_projector_contour, spectral_projector_eig};
pub use properties::{unbounded_growth, verify_dirac_properties, DiracPropertiesReport};
pub use variational::{minmax_check, rayleigh_distance_check, MinMaxReport, RayleighReport};
pub use window::{
    spectral_close, window_membership, SpectralWindow, WindowMembership, ENDPOINT_MARGIN,
};

const MAX_SWEEPS: usize = 10_000;

/// Eigenpairs of a symmetric operator, values ascending, vectors as columns.
#[derive(Clone, Debug)]
pub struct Eigen {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

impl Eigen {
    /// Columns `range` of the eigenvector matrix.
    pub fn columns(&self, start: usize, count: usize) -> DMatrix<f64> {
        self.vectors.columns(start, count).into_owned()
    }
}

pub fn eigendecompose(op: &SymmetricOperator) -> Result<Eigen> {
    let n = op.dim();
    if n == 0 {
        return Ok(Eigen { values: Vec::new(), vectors: DMatrix::zeros(0, 0) });
    }
    let eig = SymmetricEigen::try_new(op.matrix().clone(), f64::EPSILON, MAX_SWEEPS)
        .ok_or(Error::EigenSolver)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok(Eigen { values, vectors })
}

pub fn eigenvalues(op: &SymmetricOperator) -> Result<Vec<f64>> {
    Ok(eigendecompose(op)?.values)
}

/// Hausdorff distance between two finite point sets on the line.
pub fn hausdorff_distance(a: &[f64], b: &[f64]) -> f64 {
    let directed = |x: &[f64], y: &[f64]| {
        x.iter()
            .map(|p| y.iter().map(|q| (p - q).abs()).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    if a.is_empty() && b.is_empty() {
        return 0.0;
    }
    directed(a, b).max(directed(b, a))
}

/// Table `λ_j(t_i)` of sorted eigenvalues of a family over a parameter grid.
#[derive(Clone, Debug, Serialize)]
pub struct EnumeratedSpectrum {
    pub samples: Vec<f64>,
    /// `values[i][j] = λ_j(t_i)`, non-decreasing in `j`.
    pub values: Vec<Vec<f64>>,
}

impl EnumeratedSpectrum {
    pub fn column(&self, j: usize) -> Vec<f64> {
        self.values.iter().map(|row| row[j]).collect()
    }

    /// Rows `(j, t, λ)` in sample-major order.
    pub fn rows(&self) -> impl Iterator<Item = (usize, f64, f64)> + '_ {
        self.samples
            .iter()
            .zip(&self.values)
            .flat_map(|(&t, row)| row.iter().enumerate().map(move |(j, &l)| (j, t, l)))
    }
}

/// Sorted enumeration of the family's eigenvalues at every grid point.
///
/// Sorting gives the continuous non-decreasing enumeration: by Weyl's
/// inequality `|λ_j(A) − λ_j(B)| ≤ ‖A − B‖` for every `j`.
pub fn enumerate_family(family: &OperatorFamily, samples: &[f64]) -> Result<EnumeratedSpectrum> {
    use rayon::prelude::*;
    if samples.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidArgument("sample grid must be ordered".into()));
    }
    let values = samples
        .par_iter()
        .map(|&t| eigenvalues(&family.sample(t)))
        .collect::<Result<Vec<_>>>()?;
    Ok(EnumeratedSpectrum { samples: samples.to_vec(), values })
}

/// `n + 1` uniform points `0, 1/n, …, 1`.
pub fn uniform_grid(n: usize) -> Vec<f64> {
    (0..=n).map(|i| i as f64 / n as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{random_symmetric, seeded_rng, sym_norm};
    use crate::models::make_halfturn_loop;
    use proptest::prelude::*;

    #[test]
    fn diagonal_is_sorted() {
        let e = eigendecompose(&SymmetricOperator::from_diagonal(&[3.0, 1.0, 2.0])).unwrap();
        assert_eq!(e.values, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn swap_matrix() {
        let op = SymmetricOperator::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let e = eigendecompose(&op).unwrap();
        assert!((e.values[0] + 1.0).abs() < 1e-14 && (e.values[1] - 1.0).abs() < 1e-14);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        // up to sign: (1, -1)/√2 and (1, 1)/√2
        let v0 = e.vectors.column(0);
        assert!((v0[0].abs() - s).abs() < 1e-12 && (v0[0] + v0[1]).abs() < 1e-12);
        let v1 = e.vectors.column(1);
        assert!((v1[0] - v1[1]).abs() < 1e-12);
    }

    #[test]
    fn seeded_residuals() {
        let mut rng = seeded_rng(8);
        let op = SymmetricOperator::symmetrized(&(random_symmetric(8, &mut rng) * 5.0));
        let e = eigendecompose(&op).unwrap();
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(e.values.clone()));
        let res = (op.matrix() * &e.vectors - &e.vectors * d).norm();
        assert!(res <= 1e-11 * op.norm(), "{res:e}");
        let orth = (e.vectors.transpose() * &e.vectors - DMatrix::identity(8, 8)).norm();
        assert!(orth <= 1e-12, "{orth:e}");
    }

    #[test]
    fn linear_path_curves_meet() {
        let fam = OperatorFamily::linear_path(
            SymmetricOperator::from_diagonal(&[0.0, 1.0]),
            SymmetricOperator::from_diagonal(&[1.0, 0.0]),
        )
        .unwrap();
        let table = enumerate_family(&fam, &uniform_grid(10)).unwrap();
        for (t, row) in table.samples.iter().zip(&table.values) {
            assert!((row[0] - t.min(1.0 - t)).abs() < 1e-14);
            assert!((row[1] - t.max(1.0 - t)).abs() < 1e-14);
        }
        assert!((table.values[5][0] - 0.5).abs() < 1e-14);
        assert!((table.values[5][1] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn constant_and_equivariant_families_have_constant_columns() {
        let base = SymmetricOperator::from_diagonal(&[0.5, 1.5, 2.0, 4.0]);
        let c = enumerate_family(&OperatorFamily::constant(base.clone()), &uniform_grid(7)).unwrap();
        for row in &c.values {
            assert_eq!(row, &c.values[0]);
        }
        let fam = make_halfturn_loop(base).unwrap().family();
        let table = enumerate_family(&fam, &uniform_grid(100)).unwrap();
        for row in &table.values {
            assert!(hausdorff_distance(row, &table.values[0]) <= 1e-10);
        }
    }

    #[test]
    fn enumerate_rejects_unordered_grid() {
        let fam = OperatorFamily::constant(SymmetricOperator::from_diagonal(&[1.0]));
        assert!(enumerate_family(&fam, &[0.5, 0.1]).is_err());
    }

    #[test]
    fn hausdorff_basic() {
        assert_eq!(hausdorff_distance(&[1.0, 2.0], &[1.0, 2.0]), 0.0);
        assert_eq!(hausdorff_distance(&[1.0], &[1.0, 3.0]), 2.0);
    }

    proptest! {
        #[test]
        fn sorted_eigenvalues_are_lipschitz(seed in 0u64..10_000, n in 1usize..8, scale in 0.0f64..2.0) {
            let mut rng = seeded_rng(seed);
            let a = random_symmetric(n, &mut rng) * 3.0;
            let b = &a + random_symmetric(n, &mut rng) * scale;
            let la = eigenvalues(&SymmetricOperator::symmetrized(&a)).unwrap();
            let lb = eigenvalues(&SymmetricOperator::symmetrized(&b)).unwrap();
            let dist = sym_norm(&(&a - &b));
            for (x, y) in la.iter().zip(&lb) {
                prop_assert!((x - y).abs() <= dist + 1e-12);
            }
        }
    }
}
