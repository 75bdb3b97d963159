//! Complex Clifford representations, spin lifts of planar rotations and
//! real/quaternionic structure maps.
//!
//! Generators follow the convention `e_i^2 = -1`: every `γ_i` is unitary and
//! anti-Hermitian. Representations are built by iterated tensor doubling:
//!
//! * `m = 1`: `γ_1 = (i)`.
//! * `m = 2n + 1`: append the (phase-corrected) product `γ_1 ⋯ γ_{2n}` to the
//!   `m = 2n` generators.
//! * `m = 2n + 2`: `γ_j ⊗ σ_y` for the `2n + 1` odd generators, then `I ⊗ iσ_x`.
//!
//! Generator indices in the public API are 1-based (`1..=m`), matching the
//! usual `e_1, …, e_m` labelling.

use nalgebra::DVector;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{frobenius_c, kron, CMatrix};

pub const MAX_CLIFFORD_M: usize = 12;
pub const ALGEBRAIC_TOL: f64 = 1e-12;
pub const SOLVER_TOL: f64 = 1e-10;

const I: Complex64 = Complex64::new(0.0, 1.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Clone, Debug)]
pub struct CliffordRep {
    m: usize,
    generators: Vec<CMatrix>,
}

impl CliffordRep {
    pub fn m(&self) -> usize {
        self.m
    }

    /// Representation dimension `2^⌊m/2⌋`.
    pub fn dim(&self) -> usize {
        self.generators[0].nrows()
    }

    pub fn generators(&self) -> &[CMatrix] {
        &self.generators
    }

    /// Generator `γ_i`, 1-based.
    pub fn generator(&self, i: usize) -> &CMatrix {
        &self.generators[i - 1]
    }

    /// `max_{i,j} ‖γ_iγ_j + γ_jγ_i + 2δ_ij I‖_F`.
    pub fn anticommutation_residual(&self) -> f64 {
        let n = self.dim();
        let id = CMatrix::identity(n, n);
        let mut worst = 0.0_f64;
        for (a, ga) in self.generators.iter().enumerate() {
            for (b, gb) in self.generators.iter().enumerate().skip(a) {
                let mut r = ga * gb + gb * ga;
                if a == b {
                    r += &id * Complex64::new(2.0, 0.0);
                }
                worst = worst.max(frobenius_c(&r));
            }
        }
        worst
    }

    /// `max_i max(‖γ_i^* + γ_i‖, ‖γ_i^*γ_i − I‖)`.
    pub fn unitarity_residual(&self) -> f64 {
        let n = self.dim();
        let id = CMatrix::identity(n, n);
        self.generators
            .iter()
            .map(|g| {
                let adj = g.adjoint();
                frobenius_c(&(&adj + g)).max(frobenius_c(&(&adj * g - &id)))
            })
            .fold(0.0, f64::max)
    }
}

pub fn build_clifford(m: usize) -> Result<CliffordRep> {
    if m == 0 || m > MAX_CLIFFORD_M {
        return Err(Error::DimensionGuard { m, max: MAX_CLIFFORD_M });
    }
    let sigma_y = CMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO]);
    let i_sigma_x = CMatrix::from_row_slice(2, 2, &[ZERO, I, I, ZERO]);

    let mut gens = vec![CMatrix::from_element(1, 1, I)];
    let mut current = 1;
    while current < m {
        if current % 2 == 1 {
            // odd -> even: double the representation
            let n = gens[0].nrows();
            let mut next: Vec<CMatrix> = gens.iter().map(|g| kron(g, &sigma_y)).collect();
            next.push(kron(&CMatrix::identity(n, n), &i_sigma_x));
            gens = next;
        } else {
            gens.push(chirality_generator(&gens));
        }
        current += 1;
    }
    Ok(CliffordRep { m, generators: gens })
}

/// Extra generator for odd `m`: `Ω = γ_1⋯γ_{2n}` if it squares to `-I`, else `iΩ`.
fn chirality_generator(gens: &[CMatrix]) -> CMatrix {
    let n = gens[0].nrows();
    let omega = gens
        .iter()
        .fold(CMatrix::identity(n, n), |acc, g| acc * g);
    let sq = &omega * &omega;
    if sq[(0, 0)].re < 0.0 {
        omega
    } else {
        omega * I
    }
}

/// Bivector `γ_iγ_j` of the rotation plane `(i, j)`, together with evaluation of
/// the spin lift `ρ(α) = cos(α/2) I + sin(α/2) γ_iγ_j`.
#[derive(Clone, Debug)]
pub struct RotationLift {
    plane: (usize, usize),
    bivector: CMatrix,
}

impl RotationLift {
    pub fn new(rep: &CliffordRep, i: usize, j: usize) -> Result<Self> {
        let m = rep.m();
        if i == j || i == 0 || j == 0 || i > m || j > m {
            return Err(Error::InvalidIndices { i, j, m });
        }
        Ok(Self {
            plane: (i, j),
            bivector: rep.generator(i) * rep.generator(j),
        })
    }

    pub fn plane(&self) -> (usize, usize) {
        self.plane
    }

    pub fn bivector(&self) -> &CMatrix {
        &self.bivector
    }

    pub fn at(&self, angle: f64) -> CMatrix {
        let n = self.bivector.nrows();
        let half = 0.5 * angle;
        CMatrix::identity(n, n) * Complex64::new(half.cos(), 0.0)
            + &self.bivector * Complex64::new(half.sin(), 0.0)
    }
}

/// Spin lift of the rotation by `angle` in the `(i, j)` plane (1-based indices).
pub fn lift_rotation(rep: &CliffordRep, i: usize, j: usize, angle: f64) -> Result<CMatrix> {
    Ok(RotationLift::new(rep, i, j)?.at(angle))
}

/// Antilinear map `J(v) = C·conj(v)` commuting with Clifford multiplication.
#[derive(Clone, Debug)]
pub struct StructureMap {
    matrix: CMatrix,
    epsilon: i32,
}

impl StructureMap {
    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// `+1` for a real structure, `-1` for a quaternionic one.
    pub fn epsilon(&self) -> i32 {
        self.epsilon
    }

    pub fn apply(&self, v: &DVector<Complex64>) -> DVector<Complex64> {
        &self.matrix * v.map(|z| z.conj())
    }

    /// Matrix of `J²`, i.e. `C·conj(C)`.
    pub fn square(&self) -> CMatrix {
        &self.matrix * self.matrix.map(|z| z.conj())
    }

    /// `max_i ‖C·conj(γ_i) − γ_i·C‖_F`.
    pub fn commutation_residual(&self, rep: &CliffordRep) -> f64 {
        rep.generators()
            .iter()
            .map(|g| frobenius_c(&(&self.matrix * g.map(|z| z.conj()) - g * &self.matrix)))
            .fold(0.0, f64::max)
    }

    pub fn square_residual(&self) -> f64 {
        let n = self.matrix.nrows();
        frobenius_c(&(self.square() - CMatrix::identity(n, n) * Complex64::new(self.epsilon as f64, 0.0)))
    }

    /// Unitary matrix whose columns are a real orthonormal basis of the fixed
    /// space `{v : J v = v}`. Only defined for real structures.
    ///
    /// Any complex-linear map `L` commuting with `J` has a real matrix `B^* L B`
    /// in this basis.
    pub fn real_form_basis(&self) -> Result<CMatrix> {
        if self.epsilon != 1 {
            return Err(Error::InvalidArgument(
                "real form requires a real structure (J^2 = +1)".into(),
            ));
        }
        let n = self.matrix.nrows();
        let mut basis: Vec<DVector<Complex64>> = Vec::with_capacity(n);
        'outer: for idx in 0..n {
            for phase in [ONE, I] {
                let mut e = DVector::from_element(n, ZERO);
                e[idx] = phase;
                let mut v = (&e + self.apply(&e)) * Complex64::new(0.5, 0.0);
                // real Gram-Schmidt, twice for stability
                for _ in 0..2 {
                    for b in &basis {
                        let c = b.dotc(&v).re;
                        v -= b * Complex64::new(c, 0.0);
                    }
                }
                let norm = v.norm();
                if norm > 1e-8 {
                    basis.push(v / Complex64::new(norm, 0.0));
                    if basis.len() == n {
                        break 'outer;
                    }
                }
            }
        }
        if basis.len() != n {
            return Err(Error::StructureSolver(format!(
                "real form has dimension {} instead of {n}",
                basis.len()
            )));
        }
        Ok(CMatrix::from_columns(&basis))
    }
}

/// `ε` for `m mod 8`, or `None` for the complex-type residues 1 and 5.
pub fn expected_epsilon(m: usize) -> Option<i32> {
    match m % 8 {
        0 | 6 | 7 => Some(1),
        2 | 3 | 4 => Some(-1),
        _ => None,
    }
}

/// Finds the antilinear map commuting with all generators.
///
/// The twisted actions `T_k(X) = γ_k X conj(γ_k)^{-1} = −γ_k X conj(γ_k)` are
/// commuting involutions, so `Π_k (1 + T_k)/2` is the projector onto the
/// solution space of `C·conj(γ_k) = γ_k·C`. It is applied to matrix units until
/// a nonzero solution appears, which is then rescaled so that `J² = ±I`.
pub fn find_structure_map(rep: &CliffordRep) -> Result<StructureMap> {
    let m = rep.m();
    if matches!(m % 8, 1 | 5) {
        return Err(Error::ComplexType { m, residue: m % 8 });
    }
    let n = rep.dim();
    let conj_gens: Vec<CMatrix> = rep.generators().iter().map(|g| g.map(|z| z.conj())).collect();

    let project = |mut x: CMatrix| -> CMatrix {
        for (g, gc) in rep.generators().iter().zip(&conj_gens) {
            let t = -(g * &x * gc);
            x = (x + t) * Complex64::new(0.5, 0.0);
        }
        x
    };

    let mut solution = None;
    'search: for a in 0..n {
        for b in 0..n {
            let mut unit = CMatrix::zeros(n, n);
            unit[(a, b)] = ONE;
            let c = project(unit);
            let norm = frobenius_c(&c);
            if norm > 1e-6 {
                solution = Some(c / Complex64::new(norm, 0.0));
                break 'search;
            }
        }
    }
    let c = solution.ok_or_else(|| {
        Error::StructureSolver(format!("commutant of the m = {m} representation is trivial"))
    })?;

    // C conj(C) = μ I with μ real; normalize to |μ| = 1.
    let sq = &c * c.map(|z| z.conj());
    let mu = sq.trace() / Complex64::new(n as f64, 0.0);
    if mu.norm() < 1e-12 || mu.im.abs() > SOLVER_TOL * mu.norm() {
        return Err(Error::StructureSolver(format!("J^2 is not a real scalar (mu = {mu})")));
    }
    let epsilon = if mu.re > 0.0 { 1 } else { -1 };
    let c = c / Complex64::new(mu.norm().sqrt(), 0.0);
    let map = StructureMap { matrix: c, epsilon };

    let comm = map.commutation_residual(rep);
    let sqr = map.square_residual();
    if comm > SOLVER_TOL || sqr > SOLVER_TOL {
        return Err(Error::StructureSolver(format!(
            "residuals too large (commutation {comm:e}, square {sqr:e})"
        )));
    }
    Ok(map)
}
