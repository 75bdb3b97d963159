//! The acceptance criteria as runnable checks with pinned seeds and
//! tolerances. Shared by the `acceptance` test target and `reproduce-all`.

use std::time::Instant;

use nalgebra::DVector;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::clifford::{build_clifford, find_structure_map, lift_rotation, MAX_CLIFFORD_M};
use crate::config::lowest_window;
use crate::error::{Error, Result};
use crate::holonomy::{predicted_sign, sign_multiplicativity, sign_stability, transport, Sign};
use crate::lasso::{find_degeneracy, make_conical_disc, refine_candidates, scan_disc, DiscFamily, ScanGrid};
use crate::linalg::{random_orthogonal, random_symmetric, seeded_rng, CMatrix};
use crate::models::{
    make_circle_dirac, make_commuting_loop, make_fullturn_loop, make_halfturn_loop, make_odd_multiplicity_base,
    make_spin_loop, make_spin_loop_with_turns, OperatorFamily, SymmetricOperator,
};
use crate::spectral::{
    eigendecompose, eigenvalues, hausdorff_distance, minmax_check, projector_distance, rayleigh_distance_check,
    spectral_close, spectral_projector_contour, spectral_projector_eig, verify_dirac_properties, SpectralWindow,
};

/// Every threshold the criteria compare against.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub clifford_residual: f64,
    pub clifford_seconds: f64,
    pub circle_spectrum: f64,
    pub circle_max_truncation: usize,
    pub growth_exponent: (f64, f64),
    pub circle_seconds: f64,
    pub isospectral: f64,
    pub isospectral_samples: usize,
    pub sign_seconds: f64,
    pub stability_perturbations: usize,
    pub stability_fraction: f64,
    pub projector: f64,
    pub contour_nodes: usize,
    pub projector_operators: usize,
    pub minmax: f64,
    pub minmax_subspaces: usize,
    pub rayleigh_instances: usize,
    pub minmax_seconds: f64,
    pub conical_gap: f64,
    pub halfturn_gap: f64,
    pub spin_gap: f64,
    pub negative_control_gap: f64,
    pub lasso_seconds: f64,
    pub close_eps: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            clifford_residual: 1e-12,
            clifford_seconds: 10.0,
            circle_spectrum: 1e-10,
            circle_max_truncation: 64,
            growth_exponent: (0.9, 1.1),
            circle_seconds: 5.0,
            isospectral: 1e-10,
            isospectral_samples: 100,
            sign_seconds: 60.0,
            stability_perturbations: 10,
            stability_fraction: 0.25,
            projector: 1e-8,
            contour_nodes: 256,
            projector_operators: 20,
            minmax: 1e-10,
            minmax_subspaces: 100,
            rayleigh_instances: 1000,
            minmax_seconds: 30.0,
            conical_gap: 1e-10,
            halfturn_gap: 1e-8,
            spin_gap: 1e-7,
            negative_control_gap: 1e-3,
            lasso_seconds: 120.0,
            close_eps: 0.1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CriterionResult {
    pub id: u8,
    pub name: String,
    pub passed: bool,
    pub detail: String,
    /// Excluded from equality-sensitive comparisons by callers.
    pub elapsed_s: f64,
}

impl CriterionResult {
    pub fn line(&self) -> String {
        format!(
            "[{}] {:>2} {:<28} {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.detail
        )
    }
}

pub const CRITERIA: [(u8, &str); 10] = [
    (1, "clifford conformance"),
    (2, "circle oracle"),
    (3, "isospectral loops"),
    (4, "sign formula"),
    (5, "sign multiplicativity"),
    (6, "sign stability"),
    (7, "projector cross-check"),
    (8, "min-max and rayleigh"),
    (9, "lasso end-to-end"),
    (10, "spectral closeness"),
];

type Outcome = Result<(bool, String)>;

pub fn run_criterion(id: u8, tol: &Tolerances) -> CriterionResult {
    let name = CRITERIA
        .iter()
        .find(|c| c.0 == id)
        .map_or("unknown", |c| c.1)
        .to_string();
    let start = Instant::now();
    let outcome = match id {
        1 => clifford_conformance(tol),
        2 => circle_oracle(tol),
        3 => isospectral_loops(tol),
        4 => sign_formula(tol),
        5 => multiplicativity(),
        6 => stability(tol),
        7 => projector_cross_check(tol),
        8 => minmax_and_rayleigh(tol),
        9 => lasso_end_to_end(tol),
        10 => closeness_truth_table(tol),
        _ => Err(Error::InvalidArgument(format!("no criterion {id}"))),
    };
    let elapsed_s = start.elapsed().as_secs_f64();
    let limit = match id {
        1 => Some(tol.clifford_seconds),
        2 => Some(tol.circle_seconds),
        4 => Some(tol.sign_seconds),
        8 => Some(tol.minmax_seconds),
        9 => Some(tol.lasso_seconds),
        _ => None,
    };
    let (mut passed, mut detail) = match outcome {
        Ok(pair) => pair,
        Err(e) => (false, format!("error: {e}")),
    };
    if let Some(limit) = limit {
        if elapsed_s > limit {
            passed = false;
            detail = format!("{detail}; runtime {elapsed_s:.1}s exceeds {limit}s");
        }
    }
    CriterionResult { id, name, passed, detail, elapsed_s }
}

pub fn reproduce_all(tol: &Tolerances) -> Vec<CriterionResult> {
    CRITERIA.iter().map(|&(id, _)| run_criterion(id, tol)).collect()
}

fn max_abs_c(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn clifford_conformance(tol: &Tolerances) -> Outcome {
    let mut worst_relation = 0.0_f64;
    let mut worst_lift = 0.0_f64;
    let mut failures = Vec::new();
    for m in 1..=MAX_CLIFFORD_M {
        let rep = build_clifford(m)?;
        worst_relation = worst_relation.max(rep.anticommutation_residual()).max(rep.unitarity_residual());
        if m >= 2 {
            let lift = lift_rotation(&rep, 1, 2, 2.0 * std::f64::consts::PI)?;
            let n = rep.dim();
            worst_lift = worst_lift.max(max_abs_c(&(lift + CMatrix::identity(n, n))));
        }
        let want = match m % 8 {
            0 | 6 | 7 => Some(1),
            2..=4 => Some(-1),
            _ => None,
        };
        match (want, find_structure_map(&rep)) {
            (Some(e), Ok(s)) if s.epsilon() == e => {}
            (None, Err(Error::ComplexType { .. })) => {}
            (want, got) => failures.push(format!("m = {m}: expected {want:?}, got {:?}", got.map(|s| s.epsilon()))),
        }
    }
    let passed = worst_relation <= tol.clifford_residual
        && worst_lift <= tol.clifford_residual
        && failures.is_empty();
    Ok((
        passed,
        format!(
            "m <= {MAX_CLIFFORD_M}: relation residual {worst_relation:.1e}, |lift(2pi) + I| {worst_lift:.1e}, parity mismatches {}",
            failures.len()
        ),
    ))
}

fn circle_oracle(tol: &Tolerances) -> Outcome {
    let mut worst = 0.0_f64;
    let mut symmetric = true;
    let mut counts_ok = true;
    let mut exponents = Vec::new();
    let mut n = 4;
    while n <= tol.circle_max_truncation {
        for delta in [0.0, 0.5] {
            let model = make_circle_dirac(n, delta)?;
            let numeric = eigenvalues(&model.operator())?;
            let cutoff = n as f64 - 1.0;
            let inside = |v: &[f64]| v.iter().copied().filter(|x| x.abs() <= cutoff).collect::<Vec<_>>();
            let (a, b) = (inside(&numeric), inside(&model.analytic_spectrum()));
            if a.len() != b.len() {
                counts_ok = false;
                continue;
            }
            worst = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(worst, f64::max);
            let report = verify_dirac_properties(&numeric, 1, cutoff);
            symmetric &= report.symmetric == Some(true);
            if n == tol.circle_max_truncation {
                exponents.push(report.growth_exponent);
            }
        }
        n *= 2;
    }
    let (lo, hi) = tol.growth_exponent;
    let growth_ok = !exponents.is_empty() && exponents.iter().all(|&e| lo <= e && e <= hi);
    Ok((
        counts_ok && worst <= tol.circle_spectrum && symmetric && growth_ok,
        format!("max error {worst:.1e}, symmetric {symmetric}, growth exponents {exponents:.3?} in [{lo}, {hi}]"),
    ))
}

fn planar_base() -> Result<SymmetricOperator> {
    make_odd_multiplicity_base(&[(1.0, 2), (2.0, 2), (3.0, 2)], 0.1, 11)
}

fn spin_base() -> Result<SymmetricOperator> {
    make_odd_multiplicity_base(&[(1.0, 2), (2.0, 2), (3.0, 2), (4.0, 2)], 0.1, 7)
}

fn isospectral_loops(tol: &Tolerances) -> Outcome {
    let spin16 = make_odd_multiplicity_base(&[(1.0, 4), (2.0, 4), (3.0, 4), (4.0, 4)], 0.1, 3)?;
    let loops: Vec<(&str, OperatorFamily)> = vec![
        ("half-turn", make_halfturn_loop(planar_base()?)?.family()),
        ("full-turn", make_fullturn_loop(planar_base()?)?.family()),
        ("spin m=6", make_spin_loop(6, spin_base()?)?.family()),
        ("spin m=7", make_spin_loop(7, spin_base()?)?.family()),
        ("spin m=8", make_spin_loop(8, spin16)?.family()),
    ];
    let mut worst = 0.0_f64;
    for (_, fam) in &loops {
        let base = eigenvalues(&fam.sample(0.0))?;
        for i in 0..tol.isospectral_samples {
            let t = i as f64 / tol.isospectral_samples as f64;
            worst = worst.max(hausdorff_distance(&eigenvalues(&fam.sample(t))?, &base));
        }
    }
    Ok((
        worst <= tol.isospectral,
        format!("{} loops x {} samples, max Hausdorff distance {worst:.1e}", loops.len(), tol.isospectral_samples),
    ))
}

fn sign_formula(_tol: &Tolerances) -> Outcome {
    let loops: Vec<(&str, OperatorFamily)> = vec![
        ("half-turn", make_halfturn_loop(planar_base()?)?.family()),
        ("full-turn", make_fullturn_loop(planar_base()?)?.family()),
        ("spin m=7", make_spin_loop(7, spin_base()?)?.family()),
        ("spin m=7 twice", make_spin_loop_with_turns(7, spin_base()?, 2)?.family()),
    ];
    let mut combos = 0;
    let mut mismatches = Vec::new();
    let mut spin_k1 = None;
    for (name, fam) in &loops {
        let parity = fam.parity().ok_or_else(|| Error::InvalidArgument(format!("{name} has no parity")))?;
        let values = eigenvalues(&fam.sample(0.0))?;
        for k in 1..=3 {
            let w = lowest_window(&values, k).expect("k below dimension");
            let expected = predicted_sign(parity, k);
            let signs: Vec<Sign> = [16, 32, 64]
                .iter()
                .map(|&n0| transport(fam, &w, n0).map(|r| r.1.sign))
                .collect::<Result<_>>()?;
            combos += 1;
            if signs.iter().any(|&s| s != expected) {
                mismatches.push(format!("{name} k={k}: {signs:?} vs {expected}"));
            }
            if *name == "spin m=7" && k == 1 {
                spin_k1 = Some(signs[0]);
            }
        }
    }
    let passed = combos == 12 && mismatches.is_empty() && spin_k1 == Some(Sign::Minus);
    Ok((
        passed,
        format!(
            "{combos} combinations, {} mismatches across n0 in {{16, 32, 64}}, spin m=7 k=1 sign {}",
            mismatches.len(),
            spin_k1.map_or("?".to_string(), |s| s.to_string())
        ),
    ))
}

fn multiplicativity() -> Outcome {
    let base = SymmetricOperator::from_diagonal(&[1.0, 2.0]);
    let odd = make_halfturn_loop(base.clone())?.family();
    let even = make_fullturn_loop(base)?.family();
    let w = SpectralWindow::new(0.5, 1.5, 1)?;
    let oo = sign_multiplicativity(&odd, &odd, &w, 32)?;
    let oe = sign_multiplicativity(&odd, &even, &w, 32)?;

    let spin_odd = make_spin_loop(7, spin_base()?)?.family();
    let spin_even = make_spin_loop_with_turns(7, spin_base()?, 2)?.family();
    let sw = lowest_window(&eigenvalues(&spin_odd.sample(0.0))?, 1).expect("dimension 8");
    let soo = sign_multiplicativity(&spin_odd, &spin_odd, &sw, 32)?;
    let soe = sign_multiplicativity(&spin_odd, &spin_even, &sw, 32)?;

    let passed = oo.sign_concatenated == Sign::Plus
        && oe.sign_concatenated == Sign::Minus
        && soo.sign_concatenated == Sign::Plus
        && soe.sign_concatenated == Sign::Minus
        && [&oo, &oe, &soo, &soe].iter().all(|r| r.holds);
    Ok((
        passed,
        format!(
            "planar odd*odd {}, odd*even {}; spin odd*odd {}, odd*even {}",
            oo.sign_concatenated, oe.sign_concatenated, soo.sign_concatenated, soe.sign_concatenated
        ),
    ))
}

fn stability(tol: &Tolerances) -> Outcome {
    let base = SymmetricOperator::from_diagonal(&[1.0, 2.0, 3.0, 4.0]);
    let odd = make_halfturn_loop(base)?.family();
    let values = eigenvalues(&odd.sample(0.0))?;
    let w = lowest_window(&values, 1).expect("dimension 4");
    let gap = values[1] - values[0];
    let size = tol.stability_fraction * gap;
    let mut max_distance = 0.0_f64;
    let mut ok = 0;
    for seed in 0..tol.stability_perturbations as u64 {
        let mut rng = seeded_rng(1000 + seed);
        let delta = SymmetricOperator::symmetrized(&(random_symmetric(4, &mut rng) * size));
        let report = sign_stability(&odd, &odd.perturbed(&delta)?, &w, 64)?;
        max_distance = max_distance.max(report.max_distance);
        if report.criterion_met && report.sign_b == Sign::Minus && report.consistent {
            ok += 1;
        }
    }
    Ok((
        ok == tol.stability_perturbations,
        format!(
            "{ok}/{} perturbations of norm {size} keep sign -1, max projector distance {max_distance:.3}",
            tol.stability_perturbations
        ),
    ))
}

/// Seeded operator with eigenvalue spacings in `[0.1, 0.2]` and a window of
/// `k` eigenvalues whose endpoints sit at gap midpoints.
fn projector_instance(seed: u64) -> Result<(SymmetricOperator, SpectralWindow)> {
    let n = 8;
    let mut rng = seeded_rng(seed);
    let mut values = vec![rng.random_range(-1.0..1.0)];
    for _ in 1..n {
        let last = *values.last().expect("non-empty");
        values.push(last + rng.random_range(0.1..0.2));
    }
    let k = 1 + (seed % 2) as usize;
    let start = rng.random_range(1..n - k);
    let lower = 0.5 * (values[start - 1] + values[start]);
    let upper = 0.5 * (values[start + k - 1] + values[start + k]);
    let q = random_orthogonal(n, &mut rng);
    Ok((SymmetricOperator::from_diagonal(&values).conjugated(&q), SpectralWindow::new(lower, upper, k)?))
}

fn projector_cross_check(tol: &Tolerances) -> Outcome {
    let mut worst = 0.0_f64;
    let mut geometric = true;
    for seed in 0..tol.projector_operators as u64 {
        let (op, w) = projector_instance(500 + seed)?;
        let exact = spectral_projector_eig(&op, &w)?;
        worst = worst.max(projector_distance(&spectral_projector_contour(&op, &w, tol.contour_nodes)?, &exact));
        let errors: Vec<f64> = [16, 32, 64, 128]
            .iter()
            .map(|&m| spectral_projector_contour(&op, &w, m).map(|p| projector_distance(&p, &exact)))
            .collect::<Result<_>>()?;
        // each doubling of the node count must at least quarter the error
        // until it reaches round-off
        geometric &= errors.windows(2).all(|e| e[0] <= 1e-11 || e[1] <= 0.25 * e[0]);
    }
    Ok((
        worst <= tol.projector && geometric,
        format!(
            "{} operators, max |P_contour - P_eig| {worst:.1e} at M = {}, geometric decay {geometric}",
            tol.projector_operators, tol.contour_nodes
        ),
    ))
}

fn minmax_and_rayleigh(tol: &Tolerances) -> Outcome {
    let mut achieved_worst = 0.0_f64;
    let mut subspace_violations = 0;
    for seed in 0..10u64 {
        let mut rng = seeded_rng(2000 + seed);
        let op = SymmetricOperator::symmetrized(&(random_symmetric(10, &mut rng) * 4.0));
        let k = 1 + (seed as usize % 9);
        let report = minmax_check(&op, k, tol.minmax_subspaces, 3000 + seed)?;
        achieved_worst = achieved_worst.max((report.achieved - report.lambda_k).abs());
        if report.min_random_max < report.lambda_k - tol.minmax {
            subspace_violations += 1;
        }
        subspace_violations += report.violations;
    }

    let mut rng = seeded_rng(4000);
    let mut violations = 0;
    let mut hypothesis_errors = 0;
    for _ in 0..tol.rayleigh_instances {
        let n = rng.random_range(3..=10);
        let mut values: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..10.0)).collect();
        values.sort_by(f64::total_cmp);
        for i in 1..n {
            values[i] = values[i].max(values[i - 1] + 0.05);
        }
        let q = random_orthogonal(n, &mut rng);
        let op = SymmetricOperator::from_diagonal(&values).conjugated(&q);
        let k = rng.random_range(1..n);
        let lambda = values[k - 1] + rng.random_range(0.05..0.95) * (values[k] - values[k - 1]);
        let eig = eigendecompose(&op)?;
        let v = eig.columns(0, k) * DVector::from_fn(k, |_, _| rng.random_range(-1.0..1.0));
        let u = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        let s: f64 = rng.random_range(0.0..1.0);
        let x = (v + u * s).normalize();
        let rq = x.dot(&(op.matrix() * &x));
        let eps = (rq - lambda).max(0.0) + rng.random_range(0.0..0.5);
        match rayleigh_distance_check(&op, k, lambda, eps, &x) {
            Ok(r) if r.holds => {}
            Ok(_) => violations += 1,
            Err(_) => hypothesis_errors += 1,
        }
    }
    let passed =
        achieved_worst <= tol.minmax && subspace_violations == 0 && violations == 0 && hypothesis_errors == 0;
    Ok((
        passed,
        format!(
            "achievability {achieved_worst:.1e}, subspace violations {subspace_violations}, \
             rayleigh violations {violations}/{} (hypothesis rejects {hypothesis_errors})",
            tol.rayleigh_instances
        ),
    ))
}

fn lasso_end_to_end(tol: &Tolerances) -> Outcome {
    let unit = SpectralWindow::new(0.5, 1.5, 1)?;

    let (_, conical) = find_degeneracy(&make_conical_disc(), &unit, ScanGrid { rings: 16, angles: 32 }, tol.conical_gap, 8)?;
    let conical_ok = conical.r <= tol.conical_gap && conical.satisfies_invariants(tol.conical_gap);

    let half = make_halfturn_loop(SymmetricOperator::from_diagonal(&[1.0, 2.0]))?.family();
    let half_disc = DiscFamily::with_boundary_mean(half, 256)?;
    let (_, halfturn) = find_degeneracy(&half_disc, &unit, ScanGrid { rings: 32, angles: 64 }, tol.halfturn_gap, 8)?;
    let halfturn_ok = halfturn.satisfies_invariants(tol.halfturn_gap);

    let spin = make_spin_loop(7, spin_base()?)?.family();
    let spin_window = lowest_window(&eigenvalues(&spin.sample(0.0))?, 1).expect("dimension 8");
    let spin_disc = DiscFamily::with_basepoint_center(spin)?;
    let (spin_scan, spin_cert) =
        find_degeneracy(&spin_disc, &spin_window, ScanGrid { rings: 32, angles: 64 }, tol.spin_gap, 16)?;
    let spin_ok = spin_scan.boundary_sign == Sign::Minus && spin_cert.satisfies_invariants(tol.spin_gap);

    let commuting = make_commuting_loop(&[1.0, 2.0], 0.2);
    let control_disc = DiscFamily::new(SymmetricOperator::from_diagonal(&[1.0, 2.0]), commuting)?;
    let grid = ScanGrid { rings: 32, angles: 64 };
    let control_scan = scan_disc(&control_disc, &unit, grid)?;
    let control = refine_candidates(&control_disc, &unit, &control_scan, tol.halfturn_gap, 8);
    let control_gap = match control {
        Err(Error::NotFound { gap, .. }) => Some(gap),
        _ => None,
    };
    let control_ok = control_scan.boundary_sign == Sign::Plus
        && control_scan.min_gap() > tol.negative_control_gap
        && control_gap.is_some_and(|g| g > tol.negative_control_gap);

    Ok((
        conical_ok && halfturn_ok && spin_ok && control_ok,
        format!(
            "conical gap {:.1e} at r {:.1e}; half-turn gap {:.1e}; spin m=7 gap {:.1e}; control NotFound gap {}",
            conical.gap,
            conical.r,
            halfturn.gap,
            spin_cert.gap,
            control_gap.map_or("none".to_string(), |g| format!("{g:.3}"))
        ),
    ))
}

fn closeness_truth_table(tol: &Tolerances) -> Outcome {
    let eps = tol.close_eps;
    let a = [1.0, 2.0, 3.0];
    let shift = |d: f64| a.iter().map(|x| x + d).collect::<Vec<_>>();
    let cases: Vec<(&str, Vec<f64>, bool)> = vec![
        ("identical", a.to_vec(), true),
        ("shifted within eps", shift(0.5 * eps), true),
        ("shifted within eps, down", shift(-0.5 * eps), true),
        ("shifted beyond eps", shift(2.0 * eps), false),
        ("count mismatch", vec![1.0, 2.0, 2.4, 3.0], false),
        ("missing eigenvalue", vec![1.0, 3.0], false),
        ("outside changes only", vec![0.0, 1.0, 2.0, 7.0], true),
    ];
    let mut wrong = Vec::new();
    for (name, b, expected) in &cases {
        if spectral_close(&a, b, 0.5, 2.5, eps)? != *expected {
            wrong.push(*name);
        }
    }
    // an eigenvalue on an endpoint is a contract violation, not `false`
    if !matches!(spectral_close(&a, &[1.0, 2.0, 2.5], 0.5, 2.5, eps), Err(Error::EndpointCollision { .. })) {
        wrong.push("endpoint hit");
    }
    Ok((wrong.is_empty(), format!("{} cases, wrong: {wrong:?}", cases.len() + 1)))
}
