//! Operator families: the exact circle Dirac oracle, equivariant loops
//! `D(t) = ρ(t) D₀ ρ(t)ᵀ`, and seeded perturbed base operators.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::clifford::{build_clifford, expected_epsilon, find_structure_map, RotationLift};
use crate::error::{Error, Result};
use crate::holonomy::Sign;
use crate::linalg::{random_symmetric, seeded_rng, sym_norm, symmetrize, CMatrix};

pub const SYMMETRY_TOL: f64 = 1e-13;
pub const MAX_CIRCLE_TRUNCATION: usize = 2048;

/// Real symmetric matrix standing in for a Dirac operator on a truncated
/// invariant subspace.
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetricOperator {
    matrix: DMatrix<f64>,
}

impl SymmetricOperator {
    /// Validates squareness, finiteness and symmetry (`‖D − Dᵀ‖_F ≤ 1e−13 ‖D‖_F`),
    /// then stores the exactly symmetrized matrix.
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        let (rows, cols) = matrix.shape();
        if rows != cols {
            return Err(Error::NotSquare { rows, cols });
        }
        if matrix.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
        let residual = (&matrix - matrix.transpose()).norm();
        let tolerance = SYMMETRY_TOL * matrix.norm();
        if residual > tolerance {
            return Err(Error::NotSymmetric { residual, tolerance });
        }
        Ok(Self { matrix: symmetrize(&matrix) })
    }

    /// Symmetrizes without validation; for products that are symmetric up to rounding.
    pub fn symmetrized(matrix: &DMatrix<f64>) -> Self {
        Self { matrix: symmetrize(matrix) }
    }

    pub fn from_diagonal(values: &[f64]) -> Self {
        Self {
            matrix: DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(values)),
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != n) {
            return Err(Error::NotSquare { rows: n, cols: bad.len() });
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Spectral norm.
    pub fn norm(&self) -> f64 {
        sym_norm(&self.matrix)
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.matrix.row_iter().map(|r| r.iter().copied().collect()).collect()
    }

    /// `Q D Qᵀ`.
    pub fn conjugated(&self, q: &DMatrix<f64>) -> Self {
        Self::symmetrized(&(q * &self.matrix * q.transpose()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Odd,
    Even,
}

impl Parity {
    pub fn sign(self) -> Sign {
        match self {
            Parity::Odd => Sign::Minus,
            Parity::Even => Sign::Plus,
        }
    }

    pub fn compose(self, other: Parity) -> Parity {
        if self == other {
            Parity::Even
        } else {
            Parity::Odd
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    /// `[0, 1]`
    Interval,
    /// `[0, 1]` with endpoints identified
    Circle,
}

type Sampler = Arc<dyn Fn(f64) -> SymmetricOperator + Send + Sync>;

/// One-parameter family of symmetric operators over `[0, 1]` or the circle.
///
/// Circle families are sampled at `t mod 1`, so `sample(1) == sample(0)` holds
/// bit for bit.
#[derive(Clone)]
pub struct OperatorFamily {
    domain: Domain,
    dim: usize,
    parity: Option<Parity>,
    sampler: Sampler,
}

impl fmt::Debug for OperatorFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OperatorFamily")
            .field("domain", &self.domain)
            .field("dim", &self.dim)
            .field("parity", &self.parity)
            .finish_non_exhaustive()
    }
}

impl OperatorFamily {
    pub fn interval<F>(dim: usize, f: F) -> Self
    where
        F: Fn(f64) -> SymmetricOperator + Send + Sync + 'static,
    {
        Self { domain: Domain::Interval, dim, parity: None, sampler: Arc::new(f) }
    }

    pub fn circle<F>(dim: usize, f: F) -> Self
    where
        F: Fn(f64) -> SymmetricOperator + Send + Sync + 'static,
    {
        Self { domain: Domain::Circle, dim, parity: None, sampler: Arc::new(f) }
    }

    /// Constant loop, trivially even.
    pub fn constant(op: SymmetricOperator) -> Self {
        let dim = op.dim();
        Self::circle(dim, move |_| op.clone()).with_parity(Some(Parity::Even))
    }

    /// `t ↦ (1 − t) A + t B` on the interval.
    pub fn linear_path(a: SymmetricOperator, b: SymmetricOperator) -> Result<Self> {
        if a.dim() != b.dim() {
            return Err(Error::DimensionMismatch { expected: a.dim(), got: b.dim() });
        }
        let dim = a.dim();
        Ok(Self::interval(dim, move |t| {
            SymmetricOperator::symmetrized(&(a.matrix() * (1.0 - t) + b.matrix() * t))
        }))
    }

    pub fn with_parity(mut self, parity: Option<Parity>) -> Self {
        self.parity = parity;
        self
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn parity(&self) -> Option<Parity> {
        self.parity
    }

    pub fn sample(&self, t: f64) -> SymmetricOperator {
        let t = match self.domain {
            Domain::Circle => t.rem_euclid(1.0),
            Domain::Interval => t.clamp(0.0, 1.0),
        };
        (self.sampler)(t)
    }

    /// The same loop started at `shift` instead of 0.
    pub fn rebased(&self, shift: f64) -> Result<Self> {
        if self.domain != Domain::Circle {
            return Err(Error::InvalidArgument("only circle families can be rebased".into()));
        }
        let inner = self.clone();
        Ok(Self::circle(self.dim, move |t| inner.sample(t + shift)).with_parity(self.parity))
    }

    /// Adds a constant symmetric operator to every sample.
    pub fn perturbed(&self, delta: &SymmetricOperator) -> Result<Self> {
        if delta.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: delta.dim() });
        }
        let inner = self.clone();
        let delta = delta.matrix().clone();
        let sampler = move |t: f64| SymmetricOperator::symmetrized(&(inner.sample(t).matrix() + &delta));
        Ok(match self.domain {
            Domain::Circle => Self::circle(self.dim, sampler),
            Domain::Interval => Self::interval(self.dim, sampler),
        }
        .with_parity(self.parity))
    }
}

/// Spin structure on the circle: periodic spinors (`δ = 0`) or antiperiodic
/// ones (`δ = 1/2`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CircleSpin {
    Periodic,
    Antiperiodic,
}

impl CircleSpin {
    pub fn offset(self) -> f64 {
        match self {
            CircleSpin::Periodic => 0.0,
            CircleSpin::Antiperiodic => 0.5,
        }
    }

    pub fn from_offset(delta: f64) -> Result<Self> {
        if delta == 0.0 {
            Ok(CircleSpin::Periodic)
        } else if delta == 0.5 {
            Ok(CircleSpin::Antiperiodic)
        } else {
            Err(Error::InvalidArgument(format!("spin offset must be 0 or 1/2, got {delta}")))
        }
    }
}

/// Dirac operator `−i d/dθ` on the unit circle, truncated to the Fourier modes
/// `e^{i(n+δ)θ}` with `|n + δ| ≤ N`.
#[derive(Clone, Debug)]
pub struct CircleDiracModel {
    truncation: usize,
    spin: CircleSpin,
}

pub fn make_circle_dirac(truncation: usize, delta: f64) -> Result<CircleDiracModel> {
    if truncation == 0 || truncation > MAX_CIRCLE_TRUNCATION {
        return Err(Error::InvalidArgument(format!(
            "truncation must lie in 1..={MAX_CIRCLE_TRUNCATION}, got {truncation}"
        )));
    }
    Ok(CircleDiracModel { truncation, spin: CircleSpin::from_offset(delta)? })
}

impl CircleDiracModel {
    pub fn truncation(&self) -> usize {
        self.truncation
    }

    pub fn spin(&self) -> CircleSpin {
        self.spin
    }

    /// Positive frequencies `k = n + δ ≤ N`.
    pub fn frequencies(&self) -> Vec<f64> {
        let delta = self.spin.offset();
        (0..=self.truncation)
            .map(|n| n as f64 + delta)
            .filter(|&k| k > 0.0 && k <= self.truncation as f64)
            .collect()
    }

    fn has_zero_mode(&self) -> bool {
        self.spin == CircleSpin::Periodic
    }

    pub fn dim(&self) -> usize {
        2 * self.frequencies().len() + usize::from(self.has_zero_mode())
    }

    /// Matrix of `d/dθ` in the real basis `[1], cos k₁θ, sin k₁θ, cos k₂θ, …`;
    /// antisymmetric with eigenvalues `±i k`.
    pub fn generator(&self) -> DMatrix<f64> {
        let n = self.dim();
        let offset = usize::from(self.has_zero_mode());
        let mut a = DMatrix::zeros(n, n);
        for (idx, k) in self.frequencies().into_iter().enumerate() {
            let c = offset + 2 * idx;
            let s = c + 1;
            a[(s, c)] = -k;
            a[(c, s)] = k;
        }
        a
    }

    /// Real symmetric realization of `−i d/dθ`: the Hermitian matrix `−iA`
    /// conjugated by the unitary `diag(1, i)` on each `(cos, sin)` pair.
    pub fn operator(&self) -> SymmetricOperator {
        let a = self.generator();
        let n = a.nrows();
        let offset = usize::from(self.has_zero_mode());
        let hermitian: CMatrix = a.map(|x| Complex64::new(0.0, -x));
        let u = CMatrix::from_fn(n, n, |i, j| {
            if i != j {
                Complex64::new(0.0, 0.0)
            } else if i >= offset && (i - offset) % 2 == 1 {
                Complex64::new(0.0, 1.0)
            } else {
                Complex64::new(1.0, 0.0)
            }
        });
        let real = u.adjoint() * hermitian * u;
        debug_assert!(real.iter().all(|z| z.im.abs() < 1e-12));
        SymmetricOperator::symmetrized(&real.map(|z| z.re))
    }

    /// `{n + δ : |n + δ| ≤ N}` in ascending order, each value once.
    pub fn analytic_spectrum(&self) -> Vec<f64> {
        let freqs = self.frequencies();
        let mut out: Vec<f64> = freqs.iter().rev().map(|k| -k).collect();
        if self.has_zero_mode() {
            out.push(0.0);
        }
        out.extend(freqs);
        out
    }

    pub fn family(&self) -> OperatorFamily {
        OperatorFamily::constant(self.operator())
    }
}

type Rotation = Arc<dyn Fn(f64) -> DMatrix<f64> + Send + Sync>;

/// Loop `D(t) = ρ(t) D₀ ρ(t)ᵀ` with `ρ(0) = I` and `ρ(1) = ±I`.
///
/// Every `ρ(t)v` is an eigenvector of `D(t)` when `v` is one of `D₀`, so the
/// spectrum is constant along the loop and the bundle sign is `σ^k`.
#[derive(Clone)]
pub struct EquivariantLoopModel {
    base: SymmetricOperator,
    rotation: Rotation,
    end_sign: Sign,
}

impl fmt::Debug for EquivariantLoopModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EquivariantLoopModel")
            .field("dim", &self.base.dim())
            .field("end_sign", &self.end_sign)
            .finish_non_exhaustive()
    }
}

impl EquivariantLoopModel {
    pub fn base(&self) -> &SymmetricOperator {
        &self.base
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    pub fn rho(&self, t: f64) -> DMatrix<f64> {
        (self.rotation)(t)
    }

    /// `σ` in `ρ(1) = σ I`.
    pub fn end_sign(&self) -> Sign {
        self.end_sign
    }

    pub fn parity(&self) -> Parity {
        match self.end_sign {
            Sign::Minus => Parity::Odd,
            Sign::Plus => Parity::Even,
        }
    }

    /// `ρ(t) D₀ ρ(t)ᵀ`, without wrapping `t`.
    pub fn operator(&self, t: f64) -> SymmetricOperator {
        self.base.conjugated(&self.rho(t))
    }

    pub fn family(&self) -> OperatorFamily {
        let model = self.clone();
        OperatorFamily::circle(self.dim(), move |t| model.operator(t)).with_parity(Some(self.parity()))
    }
}

/// Block-diagonal `2×2` rotations by `π · half_turns · t`.
pub fn make_planar_loop(base: SymmetricOperator, half_turns: u32) -> Result<EquivariantLoopModel> {
    let dim = base.dim();
    if dim % 2 != 0 || dim == 0 {
        return Err(Error::OddDimension { dim });
    }
    if half_turns == 0 {
        return Err(Error::InvalidArgument("half_turns must be positive".into()));
    }
    let rate = PI * half_turns as f64;
    let rotation: Rotation = Arc::new(move |t: f64| {
        let (s, c) = (rate * t).sin_cos();
        let mut r = DMatrix::zeros(dim, dim);
        for b in (0..dim).step_by(2) {
            r[(b, b)] = c;
            r[(b, b + 1)] = -s;
            r[(b + 1, b)] = s;
            r[(b + 1, b + 1)] = c;
        }
        r
    });
    let end_sign = if half_turns % 2 == 1 { Sign::Minus } else { Sign::Plus };
    Ok(EquivariantLoopModel { base, rotation, end_sign })
}

/// Odd loop: rotation by `πt` in each coordinate pair, ending at `ρ(1) = −I`.
pub fn make_halfturn_loop(base: SymmetricOperator) -> Result<EquivariantLoopModel> {
    make_planar_loop(base, 1)
}

/// Even loop: rotation by `2πt` in each coordinate pair.
pub fn make_fullturn_loop(base: SymmetricOperator) -> Result<EquivariantLoopModel> {
    make_planar_loop(base, 2)
}

/// Spin lift of the rotation loop in the `(m−1, m)` plane acting on the real
/// form of the spinor representation, `ρ(t) = lift(2πt)` for one turn.
pub fn make_spin_loop(m: usize, base: SymmetricOperator) -> Result<EquivariantLoopModel> {
    make_spin_loop_with_turns(m, base, 1)
}

/// As [`make_spin_loop`] but traversing the rotation loop `turns` times;
/// odd iff `turns` is odd.
pub fn make_spin_loop_with_turns(
    m: usize,
    base: SymmetricOperator,
    turns: u32,
) -> Result<EquivariantLoopModel> {
    if turns == 0 {
        return Err(Error::InvalidArgument("turns must be positive".into()));
    }
    match expected_epsilon(m) {
        None => return Err(Error::ComplexType { m, residue: m % 8 }),
        Some(-1) => return Err(Error::NotRealType { m, epsilon: -1 }),
        _ => {}
    }
    if m < 2 {
        return Err(Error::InvalidArgument("spin loop needs m >= 2".into()));
    }
    let rep = build_clifford(m)?;
    let structure = find_structure_map(&rep)?;
    if structure.epsilon() != 1 {
        return Err(Error::NotRealType { m, epsilon: structure.epsilon() });
    }
    if base.dim() != rep.dim() {
        return Err(Error::DimensionMismatch { expected: rep.dim(), got: base.dim() });
    }
    let basis = structure.real_form_basis()?;
    let lift = RotationLift::new(&rep, m - 1, m)?;
    let real_bivector = (basis.adjoint() * lift.bivector() * &basis).map(|z| z.re);
    let dim = rep.dim();
    let rate = PI * turns as f64;
    // ρ(t) = cos(α/2) I + sin(α/2) e_{m-1}e_m with α = 2π·turns·t
    let rotation: Rotation = Arc::new(move |t: f64| {
        let (s, c) = (rate * t).sin_cos();
        DMatrix::identity(dim, dim) * c + &real_bivector * s
    });
    let end_sign = if turns % 2 == 1 { Sign::Minus } else { Sign::Plus };
    Ok(EquivariantLoopModel { base, rotation, end_sign })
}

/// `diag(values) + ε S` with `S` a seeded random symmetric matrix, `‖S‖ = 1`.
///
/// For `ε > 0` the result is required to have a simple spectrum (minimal gap
/// above `1e−8·max(‖D‖, 1)`); up to 10 seeds `seed, seed+1, …` are tried.
pub fn make_odd_multiplicity_base(
    clusters: &[(f64, usize)],
    epsilon: f64,
    seed: u64,
) -> Result<SymmetricOperator> {
    if !(epsilon >= 0.0) || !epsilon.is_finite() {
        return Err(Error::InvalidArgument(format!("epsilon must be >= 0, got {epsilon}")));
    }
    let diag: Vec<f64> = clusters
        .iter()
        .flat_map(|&(v, mult)| std::iter::repeat_n(v, mult))
        .collect();
    if diag.is_empty() {
        return Err(Error::InvalidArgument("no cluster values given".into()));
    }
    let base = SymmetricOperator::from_diagonal(&diag);
    if epsilon == 0.0 {
        return Ok(base);
    }
    const ATTEMPTS: usize = 10;
    let n = diag.len();
    let mut best_gap = 0.0_f64;
    for attempt in 0..ATTEMPTS {
        let mut rng = seeded_rng(seed.wrapping_add(attempt as u64));
        let s = random_symmetric(n, &mut rng);
        let op = SymmetricOperator::symmetrized(&(base.matrix() + s * epsilon));
        let values = crate::spectral::eigenvalues(&op)?;
        let gap = values.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
        let threshold = 1e-8 * op.norm().max(1.0);
        if n == 1 || gap > threshold {
            return Ok(op);
        }
        best_gap = best_gap.max(gap);
    }
    Err(Error::NotSimple { attempts: ATTEMPTS, min_gap: best_gap })
}

/// Diagonal loop `diag(d_i + a·cos(2πt + 2πi/n))`: all samples commute, the
/// eigenvectors never move, and every window has sign `+1`.
pub fn make_commuting_loop(diagonal: &[f64], amplitude: f64) -> OperatorFamily {
    let d = diagonal.to_vec();
    let n = d.len();
    OperatorFamily::circle(n, move |t| {
        let vals: Vec<f64> = d
            .iter()
            .enumerate()
            .map(|(i, v)| v + amplitude * (2.0 * PI * t + 2.0 * PI * i as f64 / n as f64).cos())
            .collect();
        SymmetricOperator::from_diagonal(&vals)
    })
    .with_parity(Some(Parity::Even))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{eigendecompose, eigenvalues, hausdorff_distance};

    fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
        assert_eq!(a.len(), b.len());
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn symmetric_operator_validation() {
        assert!(matches!(
            SymmetricOperator::new(DMatrix::zeros(2, 3)),
            Err(Error::NotSquare { .. })
        ));
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        assert!(matches!(SymmetricOperator::new(asym), Err(Error::NotSymmetric { .. })));
        let nan = DMatrix::from_row_slice(1, 1, &[f64::NAN]);
        assert!(matches!(SymmetricOperator::new(nan), Err(Error::NonFinite)));
    }

    #[test]
    fn circle_antiperiodic_n3() {
        let model = make_circle_dirac(3, 0.5).unwrap();
        assert_eq!(model.analytic_spectrum(), vec![-2.5, -1.5, -0.5, 0.5, 1.5, 2.5]);
        let numeric = eigenvalues(&model.operator()).unwrap();
        assert!(max_abs_diff(&numeric, &model.analytic_spectrum()) < 1e-10);
    }

    #[test]
    fn circle_periodic_n3_contains_zero() {
        let model = make_circle_dirac(3, 0.0).unwrap();
        let expected = vec![-3.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0];
        assert_eq!(model.analytic_spectrum(), expected);
        let numeric = eigenvalues(&model.operator()).unwrap();
        assert!(max_abs_diff(&numeric, &expected) < 1e-10);
    }

    #[test]
    fn circle_spectra_symmetric_about_zero() {
        for delta in [0.0, 0.5] {
            let spec = make_circle_dirac(7, delta).unwrap().analytic_spectrum();
            let neg: Vec<f64> = spec.iter().rev().map(|x| -x).collect();
            assert_eq!(spec, neg);
        }
    }

    #[test]
    fn circle_generator_is_antisymmetric() {
        let a = make_circle_dirac(5, 0.5).unwrap().generator();
        assert_eq!(a.transpose(), -a);
    }

    #[test]
    fn circle_rejects_bad_offset() {
        assert!(make_circle_dirac(3, 0.25).is_err());
        assert!(make_circle_dirac(0, 0.0).is_err());
    }

    #[test]
    fn halfturn_quarter_and_half_points() {
        let model = make_halfturn_loop(SymmetricOperator::from_diagonal(&[1.0, 2.0])).unwrap();
        // rotation by π/4
        let quarter = model.operator(0.25);
        let expected = DMatrix::from_row_slice(2, 2, &[1.5, -0.5, -0.5, 1.5]);
        assert!((quarter.matrix() - expected).norm() < 1e-14);
        // rotation by π/2 swaps the eigenvalues
        let half = model.operator(0.5);
        let swapped = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 1.0]);
        assert!((half.matrix() - swapped).norm() < 1e-14);
        assert_eq!(model.parity(), Parity::Odd);
    }

    #[test]
    fn halfturn_closes_and_ends_at_minus_identity() {
        let base = SymmetricOperator::from_diagonal(&[1.0, 2.0, 3.0, 4.0]);
        let model = make_halfturn_loop(base.clone()).unwrap();
        let rho1 = model.rho(1.0);
        assert!((rho1 + DMatrix::identity(4, 4)).norm() < 1e-15);
        let fam = model.family();
        assert_eq!(fam.sample(1.0), fam.sample(0.0));
        assert_eq!(fam.sample(0.0), base);
        assert!((model.operator(1.0).matrix() - base.matrix()).norm() < 1e-14);
    }

    #[test]
    fn halfturn_rejects_odd_dimension() {
        let r = make_halfturn_loop(SymmetricOperator::from_diagonal(&[1.0, 2.0, 3.0]));
        assert!(matches!(r, Err(Error::OddDimension { dim: 3 })));
    }

    #[test]
    fn fullturn_is_even() {
        let model = make_fullturn_loop(SymmetricOperator::from_diagonal(&[1.0, 2.0])).unwrap();
        assert_eq!(model.parity(), Parity::Even);
        assert!((model.rho(1.0) - DMatrix::identity(2, 2)).norm() < 1e-15);
    }

    #[test]
    fn spin_loop_m7_is_odd_on_eight_dims() {
        let base = SymmetricOperator::from_diagonal(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0]);
        let model = make_spin_loop(7, base.clone()).unwrap();
        assert_eq!(model.dim(), 8);
        assert_eq!(model.parity(), Parity::Odd);
        assert!((model.rho(1.0) + DMatrix::identity(8, 8)).norm() < 1e-12);
        let rho = model.rho(0.37);
        assert!((rho.transpose() * &rho - DMatrix::identity(8, 8)).norm() < 1e-12);
        let spec0 = eigenvalues(&base).unwrap();
        for i in 0..20 {
            let t = i as f64 / 20.0;
            let spec = eigenvalues(&model.operator(t)).unwrap();
            assert!(hausdorff_distance(&spec0, &spec) < 1e-10);
        }
    }

    #[test]
    fn spin_loop_m6_and_m8() {
        let model = make_spin_loop(6, SymmetricOperator::from_diagonal(&[1.0; 8])).unwrap();
        assert_eq!(model.dim(), 8);
        let base16: Vec<f64> = (1..=16).map(f64::from).collect();
        let model = make_spin_loop(8, SymmetricOperator::from_diagonal(&base16)).unwrap();
        assert!((model.rho(1.0) + DMatrix::identity(16, 16)).norm() < 1e-12);
    }

    #[test]
    fn spin_loop_rejects_non_real_types() {
        let d = SymmetricOperator::from_diagonal(&[1.0, 2.0, 3.0, 4.0]);
        assert!(matches!(make_spin_loop(4, d.clone()), Err(Error::NotRealType { .. })));
        assert!(matches!(make_spin_loop(5, d.clone()), Err(Error::ComplexType { .. })));
        assert!(matches!(make_spin_loop(7, d), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn spin_loop_twice_is_even() {
        let base = SymmetricOperator::from_diagonal(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0]);
        let model = make_spin_loop_with_turns(7, base, 2).unwrap();
        assert_eq!(model.parity(), Parity::Even);
        assert!((model.rho(1.0) - DMatrix::identity(8, 8)).norm() < 1e-12);
    }

    #[test]
    fn eigenvector_transport_law() {
        let base = make_odd_multiplicity_base(&[(1.0, 2), (2.0, 2)], 0.2, 4).unwrap();
        let model = make_halfturn_loop(base.clone()).unwrap();
        let eig = eigendecompose(&base).unwrap();
        for step in 0..10 {
            let t = step as f64 / 10.0;
            let d = model.operator(t);
            for j in 0..4 {
                let v = model.rho(t) * eig.vectors.column(j);
                let r = (d.matrix() * &v - &v * eig.values[j]).norm();
                assert!(r < 1e-10, "t = {t}, j = {j}, residual {r:e}");
            }
        }
    }

    #[test]
    fn odd_multiplicity_base_splits_cluster() {
        let op = make_odd_multiplicity_base(&[(3.5, 8)], 0.1, 1).unwrap();
        let values = eigenvalues(&op).unwrap();
        assert_eq!(values.len(), 8);
        for v in &values {
            assert!((3.4..=3.6).contains(v), "{v}");
        }
        let gap = values.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
        assert!(gap > 0.0);
    }

    #[test]
    fn odd_multiplicity_base_with_zero_epsilon_is_exact() {
        let op = make_odd_multiplicity_base(&[(1.0, 2), (4.0, 1)], 0.0, 9).unwrap();
        assert_eq!(eigenvalues(&op).unwrap(), vec![1.0, 1.0, 4.0]);
    }

    #[test]
    fn odd_multiplicity_base_is_seed_deterministic() {
        let a = make_odd_multiplicity_base(&[(0.0, 3), (1.0, 3)], 0.05, 42).unwrap();
        let b = make_odd_multiplicity_base(&[(0.0, 3), (1.0, 3)], 0.05, 42).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rebased_loop_starts_elsewhere() {
        let model = make_halfturn_loop(SymmetricOperator::from_diagonal(&[1.0, 2.0])).unwrap();
        let fam = model.family();
        let shifted = fam.rebased(0.25).unwrap();
        assert_eq!(shifted.sample(0.0), fam.sample(0.25));
        assert_eq!(shifted.sample(1.0), shifted.sample(0.0));
    }

    #[test]
    fn commuting_loop_is_diagonal_and_closed() {
        let fam = make_commuting_loop(&[1.0, 2.0], 0.2);
        assert_eq!(fam.sample(0.0), fam.sample(1.0));
        let s = fam.sample(0.3);
        assert_eq!(s.matrix()[(0, 1)], 0.0);
    }
}
