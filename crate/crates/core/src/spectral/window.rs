use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lasso::cluster_multiplicity;
use crate::models::SymmetricOperator;

use super::eigenvalues;

/// An eigenvalue closer than this to a window endpoint invalidates the window.
pub const ENDPOINT_MARGIN: f64 = 1e-9;

/// Open interval `(lower, upper)` expected to hold `k` eigenvalues.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawWindow")]
pub struct SpectralWindow {
    lower: f64,
    upper: f64,
    k: usize,
}

#[derive(Deserialize)]
struct RawWindow {
    lower: f64,
    upper: f64,
    k: usize,
}

impl TryFrom<RawWindow> for SpectralWindow {
    type Error = Error;

    fn try_from(raw: RawWindow) -> Result<Self> {
        SpectralWindow::new(raw.lower, raw.upper, raw.k)
    }
}

impl SpectralWindow {
    pub fn new(lower: f64, upper: f64, k: usize) -> Result<Self> {
        if !(lower < upper) || !lower.is_finite() || !upper.is_finite() {
            return Err(Error::InvalidWindow { lower, upper });
        }
        Ok(Self { lower, upper, k })
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// `c = (Λ₁ + Λ₂)/2`
    pub fn center(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }

    /// `l = (Λ₂ − Λ₁)/2`
    pub fn radius(&self) -> f64 {
        0.5 * (self.upper - self.lower)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lower < x && x < self.upper
    }

    /// Index range of the eigenvalues strictly inside, after checking that no
    /// eigenvalue sits within [`ENDPOINT_MARGIN`] of an endpoint. `values` must
    /// be sorted.
    pub fn inner_range(&self, values: &[f64]) -> Result<Range<usize>> {
        for &v in values {
            for endpoint in [self.lower, self.upper] {
                if (v - endpoint).abs() <= ENDPOINT_MARGIN {
                    return Err(Error::EndpointCollision {
                        endpoint,
                        eigenvalue: v,
                        margin: ENDPOINT_MARGIN,
                    });
                }
            }
        }
        let start = values.partition_point(|&v| v <= self.lower);
        let end = values.partition_point(|&v| v < self.upper);
        Ok(start..end)
    }

    /// As [`inner_range`](Self::inner_range), additionally requiring exactly `k`
    /// eigenvalues inside.
    pub fn validate(&self, values: &[f64]) -> Result<Range<usize>> {
        let range = self.inner_range(values)?;
        if range.len() != self.k {
            return Err(Error::WindowCount { expected: self.k, found: range.len() });
        }
        Ok(range)
    }
}

/// Membership of an operator in the set where the window eigenbundle is
/// defined: `k` eigenvalues inside, gaps at both ends of the enumerated block,
/// and at least one odd-multiplicity eigenvalue inside.
#[derive(Clone, Debug, Serialize)]
pub struct WindowMembership {
    pub in_y: bool,
    pub count: usize,
    /// `λ₁ − λ₀`; `None` when the window is empty, infinite when nothing lies below.
    pub lower_gap: Option<f64>,
    /// `λ_{k+1} − λ_k`; same conventions.
    pub upper_gap: Option<f64>,
    pub lower_gap_ok: bool,
    pub upper_gap_ok: bool,
    pub has_odd_multiplicity: bool,
    /// `(value, multiplicity)` for the eigenvalues inside the window.
    pub clusters: Vec<(f64, usize)>,
}

/// `tol` is the minimal boundary gap; multiplicities use clustering at
/// `1e−8·‖D‖`.
pub fn window_membership(
    op: &SymmetricOperator,
    window: &SpectralWindow,
    tol: f64,
) -> Result<WindowMembership> {
    let values = eigenvalues(op)?;
    let range = window.inner_range(&values)?;
    let count = range.len();
    let cluster_tol = (1e-8 * op.norm()).max(f64::MIN_POSITIVE);
    let clusters = cluster_multiplicity(&values[range.clone()], cluster_tol);

    let (lower_gap, upper_gap) = if count == 0 {
        (None, None)
    } else {
        let lo = if range.start == 0 {
            f64::INFINITY
        } else {
            values[range.start] - values[range.start - 1]
        };
        let hi = if range.end == values.len() {
            f64::INFINITY
        } else {
            values[range.end] - values[range.end - 1]
        };
        (Some(lo), Some(hi))
    };
    let lower_gap_ok = lower_gap.is_some_and(|g| g > tol);
    let upper_gap_ok = upper_gap.is_some_and(|g| g > tol);
    let has_odd_multiplicity = clusters.iter().any(|&(_, m)| m % 2 == 1);
    Ok(WindowMembership {
        in_y: count == window.k() && lower_gap_ok && upper_gap_ok && has_odd_multiplicity,
        count,
        lower_gap,
        upper_gap,
        lower_gap_ok,
        upper_gap_ok,
        has_odd_multiplicity,
        clusters,
    })
}

/// `(Λ₁, Λ₂, ε)`-closeness of two spectra: neither contains an endpoint, both
/// hold the same number of eigenvalues in `(Λ₁, Λ₂)`, and the sorted in-window
/// eigenvalues pair up within `ε`.
pub fn spectral_close(a: &[f64], b: &[f64], lower: f64, upper: f64, eps: f64) -> Result<bool> {
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!("eps must be positive, got {eps}")));
    }
    let window = SpectralWindow::new(lower, upper, 0)?;
    let inside = |spec: &[f64]| -> Result<Vec<f64>> {
        let mut sorted = spec.to_vec();
        sorted.sort_by(f64::total_cmp);
        let r = window.inner_range(&sorted)?;
        Ok(sorted[r].to_vec())
    };
    let ia = inside(a)?;
    let ib = inside(b)?;
    Ok(ia.len() == ib.len() && ia.iter().zip(&ib).all(|(x, y)| (x - y).abs() < eps))
}
