use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{sym_norm, CMatrix};
use crate::models::SymmetricOperator;

use super::{eigendecompose, eigenvalues, SpectralWindow};

pub const MIN_CONTOUR_NODES: usize = 16;

/// `V_in V_inᵀ` over the eigenvectors whose eigenvalues lie in the window.
pub fn spectral_projector_eig(op: &SymmetricOperator, window: &SpectralWindow) -> Result<DMatrix<f64>> {
    let eig = eigendecompose(op)?;
    let range = window.validate(&eig.values)?;
    let v = eig.columns(range.start, range.len());
    Ok(&v * v.transpose())
}

/// Resolvent contour integral `(1/2πi) ∮ (z − D)^{-1} dz` over the circle with
/// the window's center and radius, discretized by the `nodes`-point
/// trapezoidal rule at angles `2π(j + ½)/nodes`.
///
/// Equivalent to `−(1/2πi) ∮ (D − z)^{-1} dz`. The nodes come in conjugate
/// pairs, so the imaginary part cancels and only the real part is returned.
/// Convergence is geometric in `nodes`, with rate set by how close the nearest
/// eigenvalue gets to the circle.
pub fn spectral_projector_contour(
    op: &SymmetricOperator,
    window: &SpectralWindow,
    nodes: usize,
) -> Result<DMatrix<f64>> {
    if nodes < MIN_CONTOUR_NODES {
        return Err(Error::InvalidArgument(format!(
            "contour needs at least {MIN_CONTOUR_NODES} nodes, got {nodes}"
        )));
    }
    let values = eigenvalues(op)?;
    window.validate(&values)?;
    let n = op.dim();
    let center = window.center();
    let radius = window.radius();
    let d: CMatrix = op.matrix().map(|x| Complex64::new(x, 0.0));
    let identity = CMatrix::identity(n, n);
    let mut acc = CMatrix::zeros(n, n);
    for j in 0..nodes {
        let theta = 2.0 * PI * (j as f64 + 0.5) / nodes as f64;
        let unit = Complex64::from_polar(1.0, theta);
        let z = Complex64::new(center, 0.0) + unit * radius;
        let shifted = &identity * z - &d;
        let resolvent = shifted.lu().try_inverse().ok_or_else(|| {
            let gap = values
                .iter()
                .map(|&l| (z - l).norm())
                .fold(f64::INFINITY, f64::min);
            Error::ResolventSolve { node: j, re: z.re, im: z.im, gap }
        })?;
        // dz = i·l·e^{iθ} dθ, and dθ/(2πi) · i = dθ/2π
        acc += resolvent * (unit * radius);
    }
    acc /= Complex64::new(nodes as f64, 0.0);
    Ok(acc.map(|z| z.re))
}

/// Spectral norm `‖P − Q‖` of the difference of two symmetric projectors.
pub fn projector_distance(p: &DMatrix<f64>, q: &DMatrix<f64>) -> f64 {
    sym_norm(&(p - q))
}
