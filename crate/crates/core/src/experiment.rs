//! Config-driven pipelines: build the model, run one experiment, write
//! artifacts and a [`RunReport`].

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{BuiltModel, ExperimentConfig, ExperimentKind};
use crate::error::{Error, Result};
use crate::holonomy::{predicted_sign, transport, Sign};
use crate::lasso::{refine_candidates, scan_disc, DegeneracyCertificate, GapPoint, ScanGrid};
use crate::models::{make_circle_dirac, Domain, Parity};
use crate::output::{default_output_dir, frames_csv, gap_map_csv, spectrum_csv, write_atomic, write_json};
use crate::spectral::{
    eigenvalues, enumerate_family, hausdorff_distance, uniform_grid, verify_dirac_properties, window_membership,
    DiracPropertiesReport, SpectralWindow,
};

pub const REPORT_FILE: &str = "report.json";
pub const SPECTRA_FILE: &str = "spectra.csv";
pub const FRAMES_FILE: &str = "frames.csv";
pub const GAP_MAP_FILE: &str = "gap_map.csv";
pub const CERTIFICATE_FILE: &str = "certificate.json";

#[derive(Clone, Debug, Serialize)]
pub struct ExpectationOutcome {
    pub name: String,
    pub expected: Value,
    pub observed: Value,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub kind: ExperimentKind,
    pub config: ExperimentConfig,
    pub results: Value,
    /// File names inside the output directory.
    pub artifacts: Vec<String>,
    pub timings_s: BTreeMap<String, f64>,
    pub expectations: Vec<ExpectationOutcome>,
    pub passed: bool,
}

/// `--out` flag, then the config's `output.dir`, then the environment default.
pub fn resolve_output_dir(flag: Option<&Path>, config: &ExperimentConfig) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| config.output.dir.clone())
        .unwrap_or_else(default_output_dir)
}

#[derive(Clone, Debug, Serialize)]
struct SpectrumResults {
    dim: usize,
    samples: usize,
    basepoint_eigenvalues: Vec<f64>,
    /// `max_t d_H(spec D(t), spec D(0))`
    isospectral_defect: f64,
    window: Option<SpectralWindow>,
    window_count_at_basepoint: Option<usize>,
}

#[derive(Clone, Debug, Serialize)]
struct TrackResults {
    dim: usize,
    samples: usize,
    window: SpectralWindow,
    window_valid: bool,
    in_y_everywhere: bool,
    first_failure: Option<Value>,
    min_lower_gap: f64,
    min_upper_gap: f64,
    frames_written: bool,
}

#[derive(Clone, Debug, Serialize)]
struct HolonomyResults {
    dim: usize,
    window: SpectralWindow,
    sign: Sign,
    determinant: f64,
    closure_residual: f64,
    return_matrix: Vec<Vec<f64>>,
    parity: Option<Parity>,
    predicted_sign: Option<Sign>,
    sign_matches_prediction: Option<bool>,
    initial_samples: usize,
    accepted_samples: usize,
    max_step_distance: f64,
    doubled_samples_sign: Sign,
    refinement_invariant: bool,
}

#[derive(Clone, Debug, Serialize)]
struct NotFound {
    r: f64,
    theta: f64,
    gap: f64,
}

#[derive(Clone, Debug, Serialize)]
struct LassoResults {
    dim: usize,
    window: SpectralWindow,
    grid: ScanGrid,
    tolerance: f64,
    boundary_sign: Sign,
    warning: Option<String>,
    min_scan_gap: f64,
    best_scan_point: GapPoint,
    certificate: Option<DegeneracyCertificate>,
    not_found: Option<NotFound>,
    invariants_hold: Option<bool>,
}

#[derive(Clone, Debug, Serialize)]
struct PropertiesResults {
    report: DiracPropertiesReport,
    /// Largest deviation from the closed-form spectrum inside the cutoff.
    oracle_max_error: Option<f64>,
    /// `(N, max |λ|)` over `N/4, N/2, N`.
    max_abs_by_truncation: Option<Vec<(usize, f64)>>,
    unbounded_growth: Option<bool>,
}

struct Artifacts<'a> {
    dir: &'a Path,
    names: Vec<String>,
}

impl Artifacts<'_> {
    fn text(&mut self, name: &str, text: &str) -> Result<()> {
        write_atomic(&self.dir.join(name), text.as_bytes())?;
        self.names.push(name.to_string());
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        write_json(&self.dir.join(name), value)?;
        self.names.push(name.to_string());
        Ok(())
    }
}

fn unavailable(name: &str, kind: ExperimentKind) -> Error {
    Error::Config { field: format!("expect.{name}"), message: format!("not produced by `{}`", kind.name()) }
}

struct Checker<'a> {
    kind: ExperimentKind,
    results: &'a Value,
    out: Vec<ExpectationOutcome>,
}

impl Checker<'_> {
    fn observe(&self, name: &str, key: &str) -> Result<Value> {
        match self.results.pointer(key) {
            Some(v) if !v.is_null() => Ok(v.clone()),
            _ => Err(unavailable(name, self.kind)),
        }
    }

    fn push(&mut self, name: &str, expected: Value, observed: Value, passed: bool) {
        self.out.push(ExpectationOutcome { name: name.to_string(), expected, observed, passed });
    }

    fn equal(&mut self, name: &str, expected: Option<Value>, key: &str) -> Result<()> {
        if let Some(expected) = expected {
            let observed = self.observe(name, key)?;
            let passed = observed == expected;
            self.push(name, expected, observed, passed);
        }
        Ok(())
    }

    fn at_most(&mut self, name: &str, bound: Option<f64>, key: &str) -> Result<()> {
        if let Some(bound) = bound {
            let observed = self.observe(name, key)?;
            let passed = observed.as_f64().is_some_and(|x| x <= bound);
            self.push(name, json!(bound), observed, passed);
        }
        Ok(())
    }
}

fn evaluate(kind: ExperimentKind, config: &ExperimentConfig, results: &Value) -> Result<Vec<ExpectationOutcome>> {
    let e = &config.expect;
    let mut c = Checker { kind, results, out: Vec::new() };
    c.equal("sign", e.sign.map(|s| json!(s)), match kind {
        ExperimentKind::LassoScan => "/boundary_sign",
        _ => "/sign",
    })?;
    c.equal("sign_matches_prediction", e.sign_matches_prediction.map(|b| json!(b)), "/sign_matches_prediction")?;
    c.at_most("max_isospectral_defect", e.max_isospectral_defect, "/isospectral_defect")?;
    c.equal("window_valid", e.window_valid.map(|b| json!(b)), "/window_valid")?;
    if let Some(want) = e.certificate_found {
        if kind != ExperimentKind::LassoScan {
            return Err(unavailable("certificate_found", kind));
        }
        let found = !results["certificate"].is_null();
        c.push("certificate_found", json!(want), json!(found), found == want);
    }
    if let Some(bound) = e.max_gap {
        if kind != ExperimentKind::LassoScan {
            return Err(unavailable("max_gap", kind));
        }
        let observed = results.pointer("/certificate/gap").cloned().unwrap_or(Value::Null);
        let passed = observed.as_f64().is_some_and(|g| g <= bound);
        c.push("max_gap", json!(bound), observed, passed);
    }
    if let Some(bound) = e.min_scan_gap_above {
        let observed = c.observe("min_scan_gap_above", "/min_scan_gap")?;
        let passed = observed.as_f64().is_some_and(|g| g > bound);
        c.push("min_scan_gap_above", json!(bound), observed, passed);
    }
    c.equal("symmetric", e.symmetric.map(|b| json!(b)), "/report/symmetric")?;
    c.equal("has_zero", e.has_zero.map(|b| json!(b)), "/report/has_zero")?;
    if let Some((lo, hi)) = e.growth_exponent {
        let observed = c.observe("growth_exponent", "/report/growth_exponent")?;
        let passed = observed.as_f64().is_some_and(|x| lo <= x && x <= hi);
        c.push("growth_exponent", json!([lo, hi]), observed, passed);
    }
    c.at_most("max_oracle_error", e.max_oracle_error, "/oracle_max_error")?;
    Ok(c.out)
}

fn to_value<T: Serialize>(value: &T) -> Value {
    serde_json::to_value(value).expect("results serialize to JSON")
}

/// Runs one experiment and writes its artifacts plus `report.json` into `out_dir`.
pub fn run_experiment(kind: ExperimentKind, config: &ExperimentConfig, out_dir: &Path) -> Result<RunReport> {
    config.validate(kind)?;
    let mut timings = BTreeMap::new();
    let mut artifacts = Artifacts { dir: out_dir, names: Vec::new() };

    let start = Instant::now();
    let model = config.build_model()?;
    let family = model.family();
    let basepoint = family.sample(0.0);
    let window = config.resolve_window(&basepoint)?;
    timings.insert("build".to_string(), start.elapsed().as_secs_f64());

    let start = Instant::now();
    let results = match kind {
        ExperimentKind::Spectrum => run_spectrum(config, &model, window, &mut artifacts)?,
        ExperimentKind::Track => run_track(config, &model, window.expect("validated"), &mut artifacts)?,
        ExperimentKind::Holonomy => run_holonomy(config, &model, window.expect("validated"), &mut artifacts)?,
        ExperimentKind::LassoScan => run_lasso(config, &model, window.expect("validated"), &mut artifacts)?,
        ExperimentKind::Properties => run_properties(config, &model)?,
    };
    timings.insert("compute".to_string(), start.elapsed().as_secs_f64());

    let expectations = evaluate(kind, config, &results)?;
    let passed = expectations.iter().all(|e| e.passed);
    let mut report = RunReport {
        kind,
        config: config.clone(),
        results,
        artifacts: Vec::new(),
        timings_s: timings,
        expectations,
        passed,
    };
    artifacts.names.push(REPORT_FILE.to_string());
    report.artifacts = artifacts.names.clone();
    write_json(&out_dir.join(REPORT_FILE), &report)?;
    Ok(report)
}

fn run_spectrum(
    config: &ExperimentConfig,
    model: &BuiltModel,
    window: Option<SpectralWindow>,
    artifacts: &mut Artifacts,
) -> Result<Value> {
    let family = model.family();
    let samples = if model.is_static() { vec![0.0] } else { uniform_grid(config.grid.samples) };
    let table = enumerate_family(&family, &samples)?;
    artifacts.text(SPECTRA_FILE, &spectrum_csv(&table)?)?;
    let base = table.values[0].clone();
    let isospectral_defect = table.values.iter().map(|row| hausdorff_distance(row, &base)).fold(0.0, f64::max);
    let window_count_at_basepoint = match &window {
        Some(w) => Some(w.inner_range(&base)?.len()),
        None => None,
    };
    Ok(to_value(&SpectrumResults {
        dim: family.dim(),
        samples: samples.len(),
        basepoint_eigenvalues: base,
        isospectral_defect,
        window,
        window_count_at_basepoint,
    }))
}

fn run_track(
    config: &ExperimentConfig,
    model: &BuiltModel,
    window: SpectralWindow,
    artifacts: &mut Artifacts,
) -> Result<Value> {
    let family = model.family();
    let samples = uniform_grid(config.grid.samples);
    let table = enumerate_family(&family, &samples)?;
    artifacts.text(SPECTRA_FILE, &spectrum_csv(&table)?)?;

    let mut first_failure = None;
    let mut in_y_everywhere = true;
    let (mut min_lower, mut min_upper) = (f64::INFINITY, f64::INFINITY);
    for &t in &samples {
        match window_membership(&family.sample(t), &window, config.tolerances.cluster) {
            Ok(m) => {
                in_y_everywhere &= m.in_y;
                min_lower = min_lower.min(m.lower_gap.unwrap_or(0.0));
                min_upper = min_upper.min(m.upper_gap.unwrap_or(0.0));
                if m.count != window.k() && first_failure.is_none() {
                    first_failure = Some(json!({"t": t, "reason": format!("window holds {} eigenvalues", m.count)}));
                }
            }
            Err(e) => {
                in_y_everywhere = false;
                if first_failure.is_none() {
                    first_failure = Some(json!({"t": t, "reason": e.to_string()}));
                }
            }
        }
    }
    let window_valid = first_failure.is_none();
    let mut frames_written = false;
    if window_valid && family.domain() == Domain::Circle {
        let (path, _) = transport(&family, &window, config.grid.samples)?;
        artifacts.text(FRAMES_FILE, &frames_csv(&path)?)?;
        frames_written = true;
    }
    Ok(to_value(&TrackResults {
        dim: family.dim(),
        samples: samples.len(),
        window,
        window_valid,
        in_y_everywhere,
        first_failure,
        min_lower_gap: min_lower,
        min_upper_gap: min_upper,
        frames_written,
    }))
}

fn run_holonomy(
    config: &ExperimentConfig,
    model: &BuiltModel,
    window: SpectralWindow,
    artifacts: &mut Artifacts,
) -> Result<Value> {
    let family = model.family();
    let n0 = config.grid.samples;
    let (path, ret) = transport(&family, &window, n0)?;
    artifacts.text(FRAMES_FILE, &frames_csv(&path)?)?;
    let (_, doubled) = transport(&family, &window, 2 * n0)?;
    let parity = family.parity();
    let predicted = parity.map(|p| predicted_sign(p, window.k()));
    let m = &ret.matrix;
    Ok(to_value(&HolonomyResults {
        dim: family.dim(),
        window,
        sign: ret.sign,
        determinant: ret.determinant,
        closure_residual: ret.closure_residual,
        return_matrix: (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect(),
        parity,
        predicted_sign: predicted,
        sign_matches_prediction: predicted.map(|p| p == ret.sign),
        initial_samples: n0,
        accepted_samples: path.samples.len(),
        max_step_distance: path.max_step_distance,
        doubled_samples_sign: doubled.sign,
        refinement_invariant: doubled.sign == ret.sign,
    }))
}

fn run_lasso(
    config: &ExperimentConfig,
    model: &BuiltModel,
    window: SpectralWindow,
    artifacts: &mut Artifacts,
) -> Result<Value> {
    let disc = config.build_disc(model)?;
    let grid = config.scan_grid();
    let tol = config.tolerances.refine;
    let scan = scan_disc(&disc, &window, grid)?;
    artifacts.text(GAP_MAP_FILE, &gap_map_csv(&scan)?)?;
    let (certificate, not_found) = match refine_candidates(&disc, &window, &scan, tol, config.grid.max_candidates) {
        Ok(cert) => (Some(cert), None),
        Err(Error::NotFound { r, theta, gap }) => (None, Some(NotFound { r, theta, gap })),
        Err(e) => return Err(e),
    };
    if let Some(cert) = &certificate {
        artifacts.json(CERTIFICATE_FILE, cert)?;
    }
    Ok(to_value(&LassoResults {
        dim: disc.dim(),
        window,
        grid,
        tolerance: tol,
        boundary_sign: scan.boundary_sign,
        warning: scan.warning.clone(),
        min_scan_gap: scan.min_gap(),
        best_scan_point: *scan.best(),
        invariants_hold: certificate.as_ref().map(|c| c.satisfies_invariants(tol)),
        certificate,
        not_found,
    }))
}

fn run_properties(config: &ExperimentConfig, model: &BuiltModel) -> Result<Value> {
    let m = config.properties.m;
    let out = match model {
        BuiltModel::Circle(circle) => {
            let n = circle.truncation();
            let cutoff = config.properties.cutoff.unwrap_or(n as f64 - 1.0);
            let numeric = eigenvalues(&circle.operator())?;
            let report = verify_dirac_properties(&numeric, m, cutoff);
            let inside = |v: &[f64]| v.iter().copied().filter(|x| x.abs() <= cutoff).collect::<Vec<_>>();
            let (num_in, exact_in) = (inside(&numeric), inside(&circle.analytic_spectrum()));
            let oracle_max_error = if num_in.len() == exact_in.len() {
                num_in.iter().zip(&exact_in).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
            } else {
                f64::INFINITY
            };
            let mut maxes = Vec::new();
            for trunc in [n / 4, n / 2, n].into_iter().filter(|&t| t > 0) {
                let c = make_circle_dirac(trunc, circle.spin().offset())?;
                maxes.push((trunc, eigenvalues(&c.operator())?.iter().fold(0.0_f64, |a, x| a.max(x.abs()))));
            }
            let growth: Vec<f64> = maxes.iter().map(|p| p.1).collect();
            PropertiesResults {
                report,
                oracle_max_error: Some(oracle_max_error),
                unbounded_growth: Some(crate::spectral::unbounded_growth(&growth)),
                max_abs_by_truncation: Some(maxes),
            }
        }
        _ => {
            let values = eigenvalues(&model.family().sample(0.0))?;
            let cutoff = config.properties.cutoff.unwrap_or(f64::INFINITY);
            PropertiesResults {
                report: verify_dirac_properties(&values, m, cutoff),
                oracle_max_error: None,
                max_abs_by_truncation: None,
                unbounded_growth: None,
            }
        }
    };
    Ok(to_value(&out))
}
