//! Degeneracy search on discs of operators filling a loop.
//!
//! If the boundary loop carries a window eigenbundle with sign `−1`, the
//! bundle cannot extend over the disc, so somewhere inside the enumerated
//! block `λ_{s−1} ≤ λ_s ≤ … ≤ λ_{s+k}` two consecutive eigenvalues must meet.
//! [`scan_disc`] maps the smallest such gap over a polar grid and [`refine`]
//! zooms in on a candidate with nested Cartesian stencils.

use std::f64::consts::PI;
use std::ops::Range;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::holonomy::{transport, Sign, DEFAULT_INITIAL_SAMPLES};
use crate::models::{Domain, OperatorFamily, SymmetricOperator};
use crate::spectral::{eigendecompose, eigenvalues, SpectralWindow};

pub const MAX_REFINE_LEVELS: usize = 40;
const STENCIL_HALF: i32 = 2;

/// Greedy left-to-right clustering of the sorted spectrum: a value joins the
/// current cluster when it is within `tol` of its predecessor. Each cluster is
/// reported as `(mean, size)`.
pub fn cluster_multiplicity(spectrum: &[f64], tol: f64) -> Vec<(f64, usize)> {
    let mut sorted = spectrum.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut out: Vec<(f64, usize)> = Vec::new();
    let mut sum = 0.0;
    let mut prev: Option<f64> = None;
    for x in sorted {
        match prev {
            Some(p) if x - p <= tol => {
                let last = out.last_mut().expect("cluster open");
                last.1 += 1;
                sum += x;
                last.0 = sum / last.1 as f64;
            }
            _ => {
                out.push((x, 1));
                sum = x;
            }
        }
        prev = Some(x);
    }
    out
}

/// `H(r, θ) = C + r (D(θ/2π) − C)` over the unit disc.
#[derive(Clone, Debug)]
pub struct DiscFamily {
    center: SymmetricOperator,
    boundary: OperatorFamily,
}

impl DiscFamily {
    pub fn new(center: SymmetricOperator, boundary: OperatorFamily) -> Result<Self> {
        if boundary.domain() != Domain::Circle {
            return Err(Error::InvalidArgument("disc boundary must be a loop".into()));
        }
        if center.dim() != boundary.dim() {
            return Err(Error::DimensionMismatch { expected: boundary.dim(), got: center.dim() });
        }
        Ok(Self { center, boundary })
    }

    /// Center at the boundary average `∫ D(t) dt`, by the `nodes`-point
    /// trapezoidal rule.
    pub fn with_boundary_mean(boundary: OperatorFamily, nodes: usize) -> Result<Self> {
        if nodes == 0 {
            return Err(Error::InvalidArgument("nodes must be positive".into()));
        }
        let n = boundary.dim();
        let mut acc = DMatrix::zeros(n, n);
        for j in 0..nodes {
            acc += boundary.sample(j as f64 / nodes as f64).matrix();
        }
        Self::new(SymmetricOperator::symmetrized(&(acc / nodes as f64)), boundary)
    }

    /// Center at the basepoint `D(0)`.
    pub fn with_basepoint_center(boundary: OperatorFamily) -> Result<Self> {
        Self::new(boundary.sample(0.0), boundary)
    }

    pub fn center(&self) -> &SymmetricOperator {
        &self.center
    }

    pub fn boundary(&self) -> &OperatorFamily {
        &self.boundary
    }

    pub fn dim(&self) -> usize {
        self.center.dim()
    }

    pub fn at(&self, r: f64, theta: f64) -> SymmetricOperator {
        let edge = self.boundary.sample(theta / (2.0 * PI));
        let c = self.center.matrix();
        SymmetricOperator::symmetrized(&(c + (edge.matrix() - c) * r))
    }

    pub fn at_xy(&self, x: f64, y: f64) -> SymmetricOperator {
        let (r, theta) = to_polar(x, y);
        self.at(r, theta)
    }
}

fn to_polar(x: f64, y: f64) -> (f64, f64) {
    (x.hypot(y), y.atan2(x).rem_euclid(2.0 * PI))
}

/// `H(x, y) = [[x, y], [y, −x]]`, eigenvalues `±√(x² + y²)`: an exact
/// conical degeneracy at the origin, boundary sign `−1` for `k = 1`.
pub fn make_conical_disc() -> DiscFamily {
    let boundary = OperatorFamily::circle(2, |t| {
        let (s, c) = (2.0 * PI * t).sin_cos();
        SymmetricOperator::symmetrized(&DMatrix::from_row_slice(2, 2, &[c, s, s, -c]))
    });
    DiscFamily::new(SymmetricOperator::from_diagonal(&[0.0, 0.0]), boundary).expect("2x2 disc")
}

/// Smallest consecutive gap within the extended block `λ_{s−1}, …, λ_{s+k}`,
/// and the lower index of the pair attaining it.
pub fn extended_gap(values: &[f64], block: &Range<usize>) -> (f64, usize) {
    let lo = block.start.saturating_sub(1);
    let hi = block.end.min(values.len().saturating_sub(1));
    let mut best = (f64::INFINITY, lo);
    for i in lo..hi {
        let g = values[i + 1] - values[i];
        if g < best.0 {
            best = (g, i);
        }
    }
    best
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, serde::Deserialize)]
pub struct ScanGrid {
    /// Radii `i / rings`, `i = 1..=rings`.
    pub rings: usize,
    /// Angles `2π j / angles`, `j = 0..angles`.
    pub angles: usize,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct GapPoint {
    pub r: f64,
    pub theta: f64,
    pub min_gap: f64,
}

impl GapPoint {
    pub fn xy(&self) -> (f64, f64) {
        (self.r * self.theta.cos(), self.r * self.theta.sin())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ScanResult {
    pub boundary_sign: Sign,
    pub warning: Option<String>,
    /// First enumerated index of the window block (fixed on the boundary).
    pub block_start: usize,
    pub k: usize,
    pub grid: ScanGrid,
    /// Grid order: ring-major, then angle.
    pub points: Vec<GapPoint>,
    /// Indices into `points`, ascending by gap (ties by grid order).
    pub ranked: Vec<usize>,
}

impl ScanResult {
    pub fn best(&self) -> &GapPoint {
        &self.points[self.ranked[0]]
    }

    pub fn min_gap(&self) -> f64 {
        self.best().min_gap
    }

    pub fn candidates(&self) -> impl Iterator<Item = &GapPoint> {
        self.ranked.iter().map(|&i| &self.points[i])
    }
}

/// Index block of the window eigenvalues, read off at the boundary basepoint.
pub fn boundary_block(disc: &DiscFamily, window: &SpectralWindow) -> Result<Range<usize>> {
    if window.k() == 0 {
        return Err(Error::InvalidArgument("window must hold at least one eigenvalue".into()));
    }
    let values = eigenvalues(&disc.boundary().sample(0.0))?;
    window.validate(&values)
}

fn gap_at(disc: &DiscFamily, block: &Range<usize>, r: f64, theta: f64) -> Result<f64> {
    let values = eigenvalues(&disc.at(r, theta))?;
    Ok(extended_gap(&values, block).0)
}

/// Gap map over the polar grid. A boundary sign of `+1` is recorded as a
/// warning: no degeneracy is forced in that case.
pub fn scan_disc(disc: &DiscFamily, window: &SpectralWindow, grid: ScanGrid) -> Result<ScanResult> {
    if grid.rings == 0 || grid.angles == 0 {
        return Err(Error::InvalidArgument("scan grid needs at least one ring and one angle".into()));
    }
    let block = boundary_block(disc, window)?;
    let (_, ret) = transport(disc.boundary(), window, DEFAULT_INITIAL_SAMPLES)?;
    let warning = (ret.sign == Sign::Plus)
        .then(|| "boundary sign is +1: a degeneracy is not guaranteed".to_string());

    let coords: Vec<(f64, f64)> = (1..=grid.rings)
        .flat_map(|i| {
            (0..grid.angles).map(move |j| {
                (i as f64 / grid.rings as f64, 2.0 * PI * j as f64 / grid.angles as f64)
            })
        })
        .collect();
    let points = coords
        .par_iter()
        .map(|&(r, theta)| Ok(GapPoint { r, theta, min_gap: gap_at(disc, &block, r, theta)? }))
        .collect::<Result<Vec<_>>>()?;
    let mut ranked: Vec<usize> = (0..points.len()).collect();
    ranked.sort_by(|&a, &b| points[a].min_gap.total_cmp(&points[b].min_gap).then(a.cmp(&b)));
    Ok(ScanResult {
        boundary_sign: ret.sign,
        warning,
        block_start: block.start,
        k: block.len(),
        grid,
        points,
        ranked,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct DegeneracyCertificate {
    pub r: f64,
    pub theta: f64,
    pub x: f64,
    pub y: f64,
    /// Enumerated index of `lambda_a`; `lambda_b` has index `pair_index + 1`.
    pub pair_index: usize,
    pub lambda_a: f64,
    pub lambda_b: f64,
    pub gap: f64,
    /// `‖H v_i − λ̄ v_i‖` for the two eigenvectors, `λ̄` the pair mean.
    pub residuals: [f64; 2],
    pub operator_norm: f64,
    pub window: SpectralWindow,
    pub block_start: usize,
    pub levels: usize,
}

impl DegeneracyCertificate {
    pub fn satisfies_invariants(&self, tol: f64) -> bool {
        let bound = 10.0 * self.gap + 1e-10 * self.operator_norm;
        self.gap <= tol && self.residuals.iter().all(|&r| r <= bound)
    }
}

#[derive(Clone, Debug)]
pub struct RefineOptions {
    pub tol: f64,
    pub max_levels: usize,
    /// Half-width of the first stencil; successive stencils shrink by 4.
    pub initial_half_width: f64,
}

impl RefineOptions {
    pub fn for_grid(tol: f64, grid: ScanGrid) -> Self {
        Self {
            tol,
            max_levels: MAX_REFINE_LEVELS,
            initial_half_width: (1.0 / grid.rings as f64).max(2.0 * PI / grid.angles as f64),
        }
    }
}

/// Nested-grid minimization of the extended-block gap from a seed point.
///
/// Each level evaluates a `5×5` stencil of spacing `h/2` around the current
/// best point (skipping points outside the disc), moves to the smallest gap
/// and divides `h` by 4. Stops once the gap is `≤ tol`; after `max_levels`
/// levels without success returns [`Error::NotFound`] with the best point.
pub fn refine(
    disc: &DiscFamily,
    window: &SpectralWindow,
    seed: (f64, f64),
    opts: &RefineOptions,
) -> Result<DegeneracyCertificate> {
    let block = boundary_block(disc, window)?;
    let gap_xy = |x: f64, y: f64| -> Result<f64> {
        let values = eigenvalues(&disc.at_xy(x, y))?;
        Ok(extended_gap(&values, &block).0)
    };
    let (mut bx, mut by) = seed;
    let mut best = gap_xy(bx, by)?;
    let mut h = opts.initial_half_width;
    let mut levels = 0;
    while best > opts.tol && levels < opts.max_levels {
        let (cx, cy) = (bx, by);
        for a in -STENCIL_HALF..=STENCIL_HALF {
            for b in -STENCIL_HALF..=STENCIL_HALF {
                if a == 0 && b == 0 {
                    continue;
                }
                let x = cx + a as f64 * 0.5 * h;
                let y = cy + b as f64 * 0.5 * h;
                if x * x + y * y > 1.0 {
                    continue;
                }
                let g = gap_xy(x, y)?;
                if g < best {
                    best = g;
                    bx = x;
                    by = y;
                }
            }
        }
        h *= 0.25;
        levels += 1;
    }
    let (r, theta) = to_polar(bx, by);
    if best > opts.tol {
        return Err(Error::NotFound { r, theta, gap: best });
    }

    let op = disc.at_xy(bx, by);
    let eig = eigendecompose(&op)?;
    let (gap, i) = extended_gap(&eig.values, &block);
    let mean = 0.5 * (eig.values[i] + eig.values[i + 1]);
    let residual = |j: usize| {
        let v = eig.vectors.column(j);
        (op.matrix() * v - v * mean).norm()
    };
    Ok(DegeneracyCertificate {
        r,
        theta,
        x: bx,
        y: by,
        pair_index: i,
        lambda_a: eig.values[i],
        lambda_b: eig.values[i + 1],
        gap,
        residuals: [residual(i), residual(i + 1)],
        operator_norm: op.norm(),
        window: *window,
        block_start: block.start,
        levels,
    })
}

/// Refines the ranked candidates of `scan` in order until one yields a
/// certificate. Returns the best [`Error::NotFound`] when none does.
pub fn refine_candidates(
    disc: &DiscFamily,
    window: &SpectralWindow,
    scan: &ScanResult,
    tol: f64,
    max_candidates: usize,
) -> Result<DegeneracyCertificate> {
    let opts = RefineOptions::for_grid(tol, scan.grid);
    let mut best: Option<Error> = None;
    for point in scan.candidates().take(max_candidates.max(1)) {
        match refine(disc, window, point.xy(), &opts) {
            Ok(cert) => return Ok(cert),
            Err(Error::NotFound { r, theta, gap }) => {
                let improves = match best {
                    Some(Error::NotFound { gap: g, .. }) => gap < g,
                    _ => true,
                };
                if improves {
                    best = Some(Error::NotFound { r, theta, gap });
                }
            }
            Err(e) => return Err(e),
        }
    }
    Err(best.unwrap_or(Error::NotFound { r: f64::NAN, theta: f64::NAN, gap: f64::INFINITY }))
}

/// [`scan_disc`] followed by [`refine_candidates`].
pub fn find_degeneracy(
    disc: &DiscFamily,
    window: &SpectralWindow,
    grid: ScanGrid,
    tol: f64,
    max_candidates: usize,
) -> Result<(ScanResult, DegeneracyCertificate)> {
    let scan = scan_disc(disc, window, grid)?;
    let cert = refine_candidates(disc, window, &scan, tol, max_candidates)?;
    Ok((scan, cert))
}
