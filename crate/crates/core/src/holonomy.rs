//! Transport of window eigenframes around loops of operators and the sign of
//! the resulting eigenbundle over the circle.
//!
//! A frame `F₀` of the window eigenspace at `t = 0` is carried along the loop
//! by `F_{i+1} = polar(P_{i+1} F_i)`. At the end `F_N` spans the same space as
//! `F₀`, so `F_N = F₀ A` with `A = F₀ᵀ F_N`, and `sgn det A` is `−1` exactly
//! when the bundle is non-orientable. Consecutive projectors are kept closer
//! than `1/2` in operator norm so that each step is an isomorphism.

use std::fmt;
use std::ops::Mul;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::polar_factor;
use crate::models::{Domain, OperatorFamily, Parity};
use crate::spectral::{eigendecompose, projector_distance, uniform_grid, SpectralWindow};

pub const DEFAULT_INITIAL_SAMPLES: usize = 64;
pub const MAX_STEP_DISTANCE: f64 = 0.5;
const MAX_BISECTION_DEPTH: usize = 40;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "i32", try_from = "i32")]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn of(x: f64) -> Sign {
        if x < 0.0 {
            Sign::Minus
        } else {
            Sign::Plus
        }
    }

    pub fn as_i32(self) -> i32 {
        match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }

    pub fn pow(self, k: usize) -> Sign {
        if self == Sign::Minus && k % 2 == 1 {
            Sign::Minus
        } else {
            Sign::Plus
        }
    }
}

impl Mul for Sign {
    type Output = Sign;

    fn mul(self, rhs: Sign) -> Sign {
        if self == rhs {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }
}

impl From<Sign> for i32 {
    fn from(s: Sign) -> i32 {
        s.as_i32()
    }
}

impl TryFrom<i32> for Sign {
    type Error = String;

    fn try_from(v: i32) -> std::result::Result<Self, Self::Error> {
        match v {
            1 => Ok(Sign::Plus),
            -1 => Ok(Sign::Minus),
            other => Err(format!("sign must be +1 or -1, got {other}")),
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Plus => "+1",
            Sign::Minus => "-1",
        })
    }
}

/// `sgn(f)^k`: `−1` iff the loop is odd and `k` is odd.
pub fn predicted_sign(parity: Parity, k: usize) -> Sign {
    parity.sign().pow(k)
}

#[derive(Clone, Debug)]
pub struct TransportOptions {
    pub initial_samples: usize,
    pub max_step_distance: f64,
    /// Allowed `‖D(1) − D(0)‖_F`, relative to `max(1, ‖D(0)‖_F)`.
    pub closure_tol: f64,
}

impl Default for TransportOptions {
    fn default() -> Self {
        Self {
            initial_samples: DEFAULT_INITIAL_SAMPLES,
            max_step_distance: MAX_STEP_DISTANCE,
            closure_tol: 1e-10,
        }
    }
}

#[derive(Clone, Debug)]
pub struct FramePath {
    pub samples: Vec<f64>,
    pub frames: Vec<DMatrix<f64>>,
    pub window: SpectralWindow,
    /// Largest consecutive projector distance along the accepted samples.
    pub max_step_distance: f64,
}

impl FramePath {
    /// Rows `(t, F[0,0], F[1,0], …)` with column-major frame entries.
    pub fn rows(&self) -> impl Iterator<Item = (f64, Vec<f64>)> + '_ {
        self.samples
            .iter()
            .zip(&self.frames)
            .map(|(&t, f)| (t, f.iter().copied().collect()))
    }

    /// Header names for the frame entries, `f_<row>_<col>`.
    pub fn entry_names(&self) -> Vec<String> {
        let (rows, cols) = self.frames.first().map_or((0, 0), |f| f.shape());
        (0..cols)
            .flat_map(|c| (0..rows).map(move |r| format!("f_{r}_{c}")))
            .collect()
    }
}

#[derive(Clone, Debug)]
pub struct ReturnMatrix {
    pub matrix: DMatrix<f64>,
    pub determinant: f64,
    pub sign: Sign,
    /// `‖F₀ A − F_N‖_F`
    pub closure_residual: f64,
}

fn window_frame(family: &OperatorFamily, window: &SpectralWindow, t: f64) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let eig = eigendecompose(&family.sample(t))?;
    let range = window
        .validate(&eig.values)
        .map_err(|e| Error::WindowLost { t, reason: e.to_string() })?;
    let v = eig.columns(range.start, range.len());
    let p = &v * v.transpose();
    Ok((p, v))
}

/// Transports the window eigenframe around a closed loop starting from the
/// eigenvectors at `t = 0`.
pub fn transport(
    family: &OperatorFamily,
    window: &SpectralWindow,
    initial_samples: usize,
) -> Result<(FramePath, ReturnMatrix)> {
    let opts = TransportOptions { initial_samples, ..TransportOptions::default() };
    transport_with(family, window, &opts, None)
}

/// As [`transport`], with explicit options and an optional starting frame
/// (orthonormal columns spanning the window eigenspace at `t = 0`).
pub fn transport_with(
    family: &OperatorFamily,
    window: &SpectralWindow,
    opts: &TransportOptions,
    initial_frame: Option<&DMatrix<f64>>,
) -> Result<(FramePath, ReturnMatrix)> {
    if family.domain() != Domain::Circle {
        return Err(Error::InvalidArgument("transport needs a loop (circle domain)".into()));
    }
    if opts.initial_samples == 0 {
        return Err(Error::InvalidArgument("initial_samples must be positive".into()));
    }
    let d0 = family.sample(0.0);
    let d1 = family.sample(1.0);
    let closure = (d1.matrix() - d0.matrix()).norm();
    if closure > opts.closure_tol * d0.matrix().norm().max(1.0) {
        return Err(Error::NotClosed { residual: closure });
    }

    let (p0, v0) = window_frame(family, window, 0.0)?;
    let f0 = match initial_frame {
        None => v0,
        Some(f) => {
            if f.shape() != v0.shape() {
                return Err(Error::DimensionMismatch { expected: v0.ncols(), got: f.ncols() });
            }
            let k = f.ncols();
            let orth = (f.transpose() * f - DMatrix::identity(k, k)).norm();
            let span = (&p0 * f - f).norm();
            if orth > 1e-10 || span > 1e-8 {
                return Err(Error::InvalidArgument(format!(
                    "initial frame is not an orthonormal basis of the window space (orth {orth:e}, span {span:e})"
                )));
            }
            f.clone()
        }
    };

    let mut samples = vec![0.0];
    let mut frames = vec![f0.clone()];
    let mut max_step = 0.0_f64;
    let mut p = p0;
    let mut f = f0.clone();
    let grid = uniform_grid(opts.initial_samples);
    for pair in grid.windows(2) {
        // depth-first bisection of [a, b] until every step is short enough
        let mut targets = vec![(pair[1], 0usize)];
        let mut t = pair[0];
        while let Some((b, depth)) = targets.pop() {
            let (pb, _) = window_frame(family, window, b)?;
            let dist = projector_distance(&pb, &p);
            if dist >= opts.max_step_distance {
                if depth >= MAX_BISECTION_DEPTH {
                    return Err(Error::RefinementStalled { t, step: b - t });
                }
                let mid = 0.5 * (t + b);
                targets.push((b, depth + 1));
                targets.push((mid, depth + 1));
                continue;
            }
            f = polar_factor(&(&pb * &f));
            p = pb;
            t = b;
            max_step = max_step.max(dist);
            samples.push(t);
            frames.push(f.clone());
        }
    }

    let a = f0.transpose() * &f;
    let closure_residual = (&f0 * &a - &f).norm();
    let determinant = a.determinant();
    let ret = ReturnMatrix { sign: Sign::of(determinant), determinant, matrix: a, closure_residual };
    let path = FramePath { samples, frames, window: *window, max_step_distance: max_step };
    Ok((path, ret))
}

#[derive(Clone, Debug, Serialize)]
pub struct StabilityReport {
    /// `max_t ‖P_A(t) − P_B(t)‖` over the shared samples.
    pub max_distance: f64,
    pub criterion_met: bool,
    pub sign_a: Sign,
    pub sign_b: Sign,
    /// False only if the criterion holds but the signs differ.
    pub consistent: bool,
    pub message: String,
}

/// Compares two loops sharing a window: when their window subspaces stay
/// closer than 1 everywhere, the bundles are isomorphic and the signs agree.
pub fn sign_stability(
    loop_a: &OperatorFamily,
    loop_b: &OperatorFamily,
    window: &SpectralWindow,
    samples: usize,
) -> Result<StabilityReport> {
    if loop_a.dim() != loop_b.dim() {
        return Err(Error::DimensionMismatch { expected: loop_a.dim(), got: loop_b.dim() });
    }
    let mut max_distance = 0.0_f64;
    for t in uniform_grid(samples) {
        let (pa, _) = window_frame(loop_a, window, t)?;
        let (pb, _) = window_frame(loop_b, window, t)?;
        max_distance = max_distance.max(projector_distance(&pa, &pb));
    }
    let (_, ra) = transport(loop_a, window, samples)?;
    let (_, rb) = transport(loop_b, window, samples)?;
    let criterion_met = max_distance < 1.0;
    let equal = ra.sign == rb.sign;
    let message = if !criterion_met {
        "criterion not met".to_string()
    } else if equal {
        "criterion met, signs equal".to_string()
    } else {
        "criterion met but signs differ".to_string()
    };
    Ok(StabilityReport {
        max_distance,
        criterion_met,
        sign_a: ra.sign,
        sign_b: rb.sign,
        consistent: !criterion_met || equal,
        message,
    })
}

/// Time-rescaled concatenation: `loop1(2t)` on `[0, ½]`, `loop2(2t − 1)` on `[½, 1]`.
pub fn concatenate_loops(loop1: &OperatorFamily, loop2: &OperatorFamily, tol: f64) -> Result<OperatorFamily> {
    if loop1.domain() != Domain::Circle || loop2.domain() != Domain::Circle {
        return Err(Error::InvalidArgument("only loops can be concatenated".into()));
    }
    if loop1.dim() != loop2.dim() {
        return Err(Error::DimensionMismatch { expected: loop1.dim(), got: loop2.dim() });
    }
    let residual = (loop1.sample(0.0).matrix() - loop2.sample(0.0).matrix()).norm();
    if residual > tol {
        return Err(Error::BasepointMismatch { residual });
    }
    let parity = match (loop1.parity(), loop2.parity()) {
        (Some(a), Some(b)) => Some(a.compose(b)),
        _ => None,
    };
    let (a, b) = (loop1.clone(), loop2.clone());
    Ok(OperatorFamily::circle(loop1.dim(), move |t| {
        if t < 0.5 {
            a.sample(2.0 * t)
        } else {
            b.sample(2.0 * t - 1.0)
        }
    })
    .with_parity(parity))
}

#[derive(Clone, Debug, Serialize)]
pub struct MultiplicativityReport {
    pub sign1: Sign,
    pub sign2: Sign,
    pub sign_concatenated: Sign,
    pub holds: bool,
}

pub fn sign_multiplicativity(
    loop1: &OperatorFamily,
    loop2: &OperatorFamily,
    window: &SpectralWindow,
    initial_samples: usize,
) -> Result<MultiplicativityReport> {
    let joined = concatenate_loops(loop1, loop2, 1e-10)?;
    let (_, r1) = transport(loop1, window, initial_samples)?;
    let (_, r2) = transport(loop2, window, initial_samples)?;
    let (_, r) = transport(&joined, window, 2 * initial_samples)?;
    Ok(MultiplicativityReport {
        sign1: r1.sign,
        sign2: r2.sign,
        sign_concatenated: r.sign,
        holds: r.sign == r1.sign * r2.sign,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{random_orthogonal, random_symmetric, seeded_rng};
    use crate::models::{
        make_commuting_loop, make_fullturn_loop, make_halfturn_loop, make_odd_multiplicity_base,
        SymmetricOperator,
    };
    use std::f64::consts::PI;

    fn w(lower: f64, upper: f64, k: usize) -> SpectralWindow {
        SpectralWindow::new(lower, upper, k).unwrap()
    }

    fn halfturn_12() -> OperatorFamily {
        make_halfturn_loop(SymmetricOperator::from_diagonal(&[1.0, 2.0])).unwrap().family()
    }

    /// Brute-force oracle: follow a single eigenvector by sign-continuity on a
    /// very fine uniform grid, without projectors or polar factors.
    fn brute_force_sign(family: &OperatorFamily, window: &SpectralWindow, n: usize) -> Sign {
        let frame = |t: f64| {
            let eig = eigendecompose(&family.sample(t)).unwrap();
            let r = window.validate(&eig.values).unwrap();
            eig.columns(r.start, r.len())
        };
        let f0 = frame(0.0);
        let mut f = f0.clone();
        for i in 1..=n {
            let g = frame(i as f64 / n as f64);
            // align each column block by the overlap matrix sign structure
            let overlap = f.transpose() * &g;
            let k = overlap.nrows();
            let mut aligned = g.clone();
            for c in 0..k {
                let (best, _) = (0..k)
                    .map(|r| (r, overlap[(r, c)].abs()))
                    .fold((0, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
                if overlap[(best, c)] < 0.0 {
                    aligned.column_mut(c).neg_mut();
                }
            }
            f = aligned;
        }
        Sign::of((f0.transpose() * f).determinant())
    }

    #[test]
    fn halfturn_k1_is_minus() {
        let (path, ret) = transport(&halfturn_12(), &w(0.5, 1.5, 1), 16).unwrap();
        assert_eq!(ret.sign, Sign::Minus);
        assert!((ret.determinant + 1.0).abs() < 1e-10);
        assert!(ret.closure_residual < 1e-8);
        assert!(path.max_step_distance < 0.5);
        // the transported vector is ρ(t) e₁ up to the initial sign
        let f_half = &path.frames[path.samples.iter().position(|&t| t == 0.5).unwrap()];
        assert!((f_half[(0, 0)].abs()) < 1e-8 && (f_half[(1, 0)].abs() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn halfturn_k2_is_plus_matching_brute_force() {
        let fam = halfturn_12();
        let win = w(0.5, 2.5, 2);
        let (_, ret) = transport(&fam, &win, 16).unwrap();
        assert_eq!(ret.sign, Sign::Plus);
        assert_eq!(brute_force_sign(&fam, &win, 10_000), Sign::Plus);
    }

    #[test]
    fn fullturn_k1_is_plus_matching_brute_force() {
        let fam = make_fullturn_loop(SymmetricOperator::from_diagonal(&[1.0, 2.0])).unwrap().family();
        let win = w(0.5, 1.5, 1);
        let (_, ret) = transport(&fam, &win, 16).unwrap();
        assert_eq!(ret.sign, Sign::Plus);
        assert_eq!(brute_force_sign(&fam, &win, 10_000), Sign::Plus);
        assert_eq!(brute_force_sign(&halfturn_12(), &win, 10_000), Sign::Minus);
    }

    #[test]
    fn predicted_sign_table() {
        assert_eq!(predicted_sign(Parity::Odd, 1), Sign::Minus);
        assert_eq!(predicted_sign(Parity::Odd, 2), Sign::Plus);
        assert_eq!(predicted_sign(Parity::Even, 3), Sign::Plus);
        assert_eq!(predicted_sign(Parity::Odd, 3), Sign::Minus);
    }

    #[test]
    fn refinement_and_rebasing_invariance() {
        let base = make_odd_multiplicity_base(&[(1.0, 2), (2.0, 2), (3.0, 2)], 0.1, 3).unwrap();
        let fam = make_halfturn_loop(base).unwrap().family();
        let values = crate::spectral::eigenvalues(&fam.sample(0.0)).unwrap();
        for k in 1..=3 {
            let win = w(values[0] - 0.5, 0.5 * (values[k - 1] + values[k]), k);
            let expected = predicted_sign(Parity::Odd, k);
            for n in [4, 8, 16, 32] {
                assert_eq!(transport(&fam, &win, n).unwrap().1.sign, expected, "k = {k}, n = {n}");
            }
            for shift in [0.1, 0.37, 0.8] {
                let re = fam.rebased(shift).unwrap();
                assert_eq!(transport(&re, &win, 16).unwrap().1.sign, expected);
            }
        }
    }

    #[test]
    fn gauge_invariance() {
        let base = make_odd_multiplicity_base(&[(1.0, 3), (3.0, 3)], 0.1, 9).unwrap();
        let fam = make_halfturn_loop(base).unwrap().family();
        let win = w(0.5, 2.0, 3);
        let (path, ret) = transport(&fam, &win, 16).unwrap();
        let mut rng = seeded_rng(4);
        for _ in 0..5 {
            let q = random_orthogonal(3, &mut rng);
            let f0 = &path.frames[0] * q;
            let (_, r) = transport_with(&fam, &win, &TransportOptions::default(), Some(&f0)).unwrap();
            assert_eq!(r.sign, ret.sign);
        }
    }

    #[test]
    fn adaptive_refinement_kicks_in() {
        // fast rotation with only 2 initial samples must be refined
        let base = SymmetricOperator::from_diagonal(&[1.0, 2.0]);
        let fam = crate::models::make_planar_loop(base, 7).unwrap().family();
        let (path, ret) = transport(&fam, &w(0.5, 1.5, 1), 2).unwrap();
        assert!(path.samples.len() > 3);
        assert!(path.max_step_distance < 0.5);
        assert_eq!(ret.sign, Sign::Minus);
    }

    #[test]
    fn window_loss_is_reported_with_parameter() {
        let path = OperatorFamily::circle(2, |t| {
            SymmetricOperator::from_diagonal(&[1.0 + (2.0 * PI * t).sin(), 3.0])
        });
        let err = transport(&path, &w(0.5, 1.5, 1), 16).unwrap_err();
        assert!(matches!(err, Error::WindowLost { .. }), "{err}");
    }

    #[test]
    fn interval_family_is_rejected() {
        let fam = OperatorFamily::linear_path(
            SymmetricOperator::from_diagonal(&[1.0, 2.0]),
            SymmetricOperator::from_diagonal(&[1.0, 2.0]),
        )
        .unwrap();
        assert!(transport(&fam, &w(0.5, 1.5, 1), 4).is_err());
    }

    #[test]
    fn stability_identical_loops() {
        let fam = halfturn_12();
        let r = sign_stability(&fam, &fam, &w(0.5, 1.5, 1), 32).unwrap();
        assert_eq!(r.max_distance, 0.0);
        assert!(r.criterion_met && r.consistent);
    }

    #[test]
    fn stability_under_quarter_gap_perturbations() {
        let fam = halfturn_12();
        for seed in 0..10 {
            let mut rng = seeded_rng(seed);
            let delta = SymmetricOperator::symmetrized(&(random_symmetric(2, &mut rng) * 0.25));
            let pert = fam.perturbed(&delta).unwrap();
            let r = sign_stability(&fam, &pert, &w(0.5, 1.5, 1), 32).unwrap();
            assert!(r.criterion_met, "seed {seed}: {}", r.max_distance);
            assert_eq!(r.sign_b, Sign::Minus);
            assert!(r.consistent);
        }
    }

    #[test]
    fn stability_criterion_not_met_for_unrelated_loops() {
        let a = halfturn_12();
        let b = OperatorFamily::constant(SymmetricOperator::from_diagonal(&[2.0, 1.0]));
        let r = sign_stability(&a, &b, &w(0.5, 1.5, 1), 32).unwrap();
        assert!(!r.criterion_met);
        assert_eq!(r.message, "criterion not met");
        assert!(r.consistent);
    }

    #[test]
    fn multiplicativity() {
        let base = SymmetricOperator::from_diagonal(&[1.0, 2.0]);
        let odd = make_halfturn_loop(base.clone()).unwrap().family();
        let even = make_fullturn_loop(base.clone()).unwrap().family();
        let trivial = OperatorFamily::constant(base);
        let win = w(0.5, 1.5, 1);
        let oo = sign_multiplicativity(&odd, &odd, &win, 16).unwrap();
        assert_eq!(oo.sign_concatenated, Sign::Plus);
        assert!(oo.holds);
        let oe = sign_multiplicativity(&odd, &even, &win, 16).unwrap();
        assert_eq!(oe.sign_concatenated, Sign::Minus);
        assert!(oe.holds);
        let tt = sign_multiplicativity(&trivial, &trivial, &win, 16).unwrap();
        assert_eq!(tt.sign_concatenated, Sign::Plus);
        assert_eq!(concatenate_loops(&odd, &odd, 1e-10).unwrap().parity(), Some(Parity::Even));
    }

    #[test]
    fn concatenation_requires_shared_basepoint() {
        let a = halfturn_12();
        let b = make_commuting_loop(&[1.0, 2.0], 0.2);
        assert!(matches!(concatenate_loops(&a, &b, 1e-10), Err(Error::BasepointMismatch { .. })));
    }

    #[test]
    fn sign_serializes_as_integer() {
        assert_eq!(serde_json::to_string(&Sign::Minus).unwrap(), "-1");
        assert_eq!(serde_json::from_str::<Sign>("1").unwrap(), Sign::Plus);
        assert!(serde_json::from_str::<Sign>("0").is_err());
    }
}
