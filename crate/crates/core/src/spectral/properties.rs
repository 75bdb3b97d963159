use serde::Serialize;

pub const SYMMETRY_TOL: f64 = 1e-9;

#[derive(Clone, Debug, Serialize)]
pub struct DiracPropertiesReport {
    pub m: usize,
    pub cutoff: f64,
    pub count_in_window: usize,
    /// Symmetry about zero is only expected when `m mod 4 ≠ 3`.
    pub symmetry_checked: bool,
    pub symmetric: Option<bool>,
    pub symmetry_defect: f64,
    pub has_zero: bool,
    /// Least-squares slope of `ln N(λ)` against `ln λ`, with
    /// `N(λ) = #{|λ_j| ≤ λ}` sampled at the positive eigenvalues in
    /// `[cutoff/2, cutoff]`. `NaN` with fewer than two points.
    pub growth_exponent: f64,
    pub fit_points: usize,
    pub max_abs: f64,
}

/// Report-only checks of a (truncated) Dirac spectrum: symmetry about zero,
/// counting-function growth exponent, and `max |λ|` as an unboundedness proxy.
pub fn verify_dirac_properties(spectrum: &[f64], m: usize, cutoff: f64) -> DiracPropertiesReport {
    let mut inside: Vec<f64> = spectrum.iter().copied().filter(|x| x.abs() <= cutoff).collect();
    inside.sort_by(f64::total_cmp);

    let mirrored: Vec<f64> = inside.iter().rev().map(|x| -x).collect();
    let symmetry_defect = inside
        .iter()
        .zip(&mirrored)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let symmetry_checked = m % 4 != 3;
    let symmetric = symmetry_checked.then_some(symmetry_defect <= SYMMETRY_TOL);

    let counting = |lambda: f64| inside.iter().filter(|x| x.abs() <= lambda).count() as f64;
    let points: Vec<(f64, f64)> = inside
        .iter()
        .copied()
        .filter(|&x| x > 0.0 && x >= 0.5 * cutoff)
        .map(|x| (x.ln(), counting(x).ln()))
        .collect();
    let growth_exponent = least_squares_slope(&points);

    DiracPropertiesReport {
        m,
        cutoff,
        count_in_window: inside.len(),
        symmetry_checked,
        symmetric,
        symmetry_defect,
        has_zero: inside.iter().any(|x| x.abs() <= SYMMETRY_TOL),
        growth_exponent,
        fit_points: points.len(),
        max_abs: spectrum.iter().fold(0.0, |a, x| a.max(x.abs())),
    }
}

/// True when `max |λ|` strictly increases along a sequence of truncations.
pub fn unbounded_growth(max_abs_by_truncation: &[f64]) -> bool {
    max_abs_by_truncation.len() >= 2 && max_abs_by_truncation.windows(2).all(|w| w[1] > w[0])
}

fn least_squares_slope(points: &[(f64, f64)]) -> f64 {
    if points.len() < 2 {
        return f64::NAN;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::make_circle_dirac;

    #[test]
    fn periodic_circle_is_symmetric_with_linear_growth() {
        let spec = make_circle_dirac(20, 0.0).unwrap().analytic_spectrum();
        let r = verify_dirac_properties(&spec, 1, 20.0);
        assert_eq!(r.symmetric, Some(true));
        assert!(r.has_zero);
        assert!((r.growth_exponent - 1.0).abs() <= 0.05, "{}", r.growth_exponent);
    }

    #[test]
    fn antiperiodic_circle_has_no_zero_mode() {
        let spec = make_circle_dirac(20, 0.5).unwrap().analytic_spectrum();
        let r = verify_dirac_properties(&spec, 1, 20.0);
        assert_eq!(r.symmetric, Some(true));
        assert!(!r.has_zero);
        assert!((r.growth_exponent - 1.0).abs() <= 0.05, "{}", r.growth_exponent);
    }

    #[test]
    fn shifted_spectrum_fails_symmetry() {
        let spec: Vec<f64> = make_circle_dirac(10, 0.0)
            .unwrap()
            .analytic_spectrum()
            .iter()
            .map(|x| x + 0.1)
            .collect();
        let r = verify_dirac_properties(&spec, 1, 5.0);
        assert_eq!(r.symmetric, Some(false));
    }

    #[test]
    fn symmetry_not_required_in_dimension_3_mod_4() {
        let r = verify_dirac_properties(&[0.3, 1.0], 3, 5.0);
        assert!(!r.symmetry_checked);
        assert_eq!(r.symmetric, None);
    }

    #[test]
    fn growth_with_truncation() {
        let maxes: Vec<f64> = [4, 8, 16]
            .iter()
            .map(|&n| {
                let spec = make_circle_dirac(n, 0.5).unwrap().analytic_spectrum();
                verify_dirac_properties(&spec, 1, f64::INFINITY).max_abs
            })
            .collect();
        assert!(unbounded_growth(&maxes));
        assert!(!unbounded_growth(&[3.0, 3.0]));
    }
}
