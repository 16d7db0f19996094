//! Command orchestration behind the CLI: run, validate, sweep, report.

use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::adjoint::curvature_relation_residual;
use crate::error::Error;
use crate::flow::{classify_limit, run, Termination};
use crate::lie::LieStructure;
use crate::metric::{BundleContext, MetricField};
use crate::report::{
    read_diagnostics_csv, read_summary, render_series_svg, write_diagnostics_csv, write_summary,
    write_sweep_csv, RunSummary, SweepRow,
};
use crate::scenario::{GroupKind, Scenario};
use crate::snapshot::save_metric;
use crate::stability::{is_semistable, predicted_flow_infimum, BundleClass};
use crate::torus::TorusDomain;

pub const OUT_ROOT_ENV: &str = "FLOWLAB_OUT";

/// Resolve the output directory: explicit flag, then the scenario's own
/// directory, then $FLOWLAB_OUT/<stem>, then ./flowlab_runs/<stem>.
pub fn resolve_out_dir(
    scenario_path: &Path,
    scenario: &Scenario,
    out_override: Option<&Path>,
) -> PathBuf {
    if let Some(p) = out_override {
        return p.to_path_buf();
    }
    if let Some(dir) = &scenario.outputs.directory {
        return PathBuf::from(dir);
    }
    let stem = scenario_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "run".into());
    if let Ok(root) = std::env::var(OUT_ROOT_ENV) {
        return PathBuf::from(root).join(stem);
    }
    PathBuf::from("flowlab_runs").join(stem)
}

pub fn load_scenario(path: &Path) -> Result<Scenario, Error> {
    let text = std::fs::read_to_string(path)?;
    Scenario::parse(&text)
}

/// Execute a scenario: flow, then diagnostics CSV, final-metric snapshot and
/// summary JSON in the output directory. The termination state is returned
/// so the CLI can map aborted flows to their exit code.
pub fn cmd_run(scenario_path: &Path, out_override: Option<&Path>) -> Result<(RunSummary, Termination), Error> {
    let started = Instant::now();
    let scenario = load_scenario(scenario_path)?;
    let out_dir = resolve_out_dir(scenario_path, &scenario, out_override);
    std::fs::create_dir_all(&out_dir)?;

    let prepared = scenario.prepare()?;
    let flow_run = run(&prepared.ctx, &prepared.h0, prepared.lambda, &prepared.config)?;

    write_diagnostics_csv(&out_dir.join("diagnostics.csv"), &flow_run.diagnostics)?;
    save_metric(&out_dir.join("final_metric"), &prepared.ctx, &flow_run.metric)?;

    let (oracle_prediction, oracle_certificate) = match &prepared.class {
        Some(class) => {
            let verdict = is_semistable(class);
            (
                Some(predicted_flow_infimum(class, prepared.ctx.domain().vol())),
                Some(verdict.certificate),
            )
        }
        None => (None, None),
    };
    let classification = classify_limit(
        &flow_run.diagnostics,
        oracle_prediction.unwrap_or(0.0),
        prepared.config.epsilon_target,
    );
    let c0 = match scenario.group {
        GroupKind::Sl2 => Some(LieStructure::sl2().c0_constant()?),
        GroupKind::TorusFactor => None,
    };
    let final_sup_dev = flow_run
        .diagnostics
        .samples
        .last()
        .map(|s| s.sup_dev)
        .unwrap_or(f64::NAN);
    let steps = flow_run.diagnostics.samples.last().map(|s| s.step).unwrap_or(0);
    let summary = RunSummary {
        lambda: prepared.lambda,
        c0,
        final_sup_dev,
        classification: classification.as_str().to_string(),
        oracle_prediction,
        oracle_certificate,
        termination: match &flow_run.termination {
            Termination::TargetReached => "target_reached".into(),
            Termination::MaxSteps => "max_steps".into(),
            Termination::Aborted(msg) => format!("aborted: {msg}"),
        },
        steps,
        wall_time_seconds: started.elapsed().as_secs_f64(),
        scenario,
    };
    write_summary(&out_dir.join("summary.json"), &summary)?;
    Ok((summary, flow_run.termination))
}

#[derive(Debug, Clone)]
pub struct CheckRow {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub rows: Vec<CheckRow>,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.rows.iter().all(|r| r.passed)
    }

    pub fn render(&self) -> String {
        let mut out = String::from("check                 result  detail\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{:<21} {:<7} {}\n",
                r.name,
                if r.passed { "pass" } else { "FAIL" },
                r.detail
            ));
        }
        out
    }
}

/// Static consistency checks of a scenario without flowing: geometry,
/// cocycle, Hermiticity/positivity, seam compatibility, degree integrality.
pub fn cmd_validate(scenario_path: &Path) -> Result<ValidationReport, Error> {
    let scenario = load_scenario(scenario_path)?;
    let mut rows = Vec::new();

    let domain = match TorusDomain::new(scenario.base.tau.to_complex(), scenario.base.n) {
        Ok(d) => {
            rows.push(CheckRow {
                name: "geometry",
                passed: true,
                detail: format!("N = {}, vol = {}", d.n(), d.vol()),
            });
            d
        }
        Err(e) => {
            rows.push(CheckRow {
                name: "geometry",
                passed: false,
                detail: e.to_string(),
            });
            return Ok(ValidationReport { rows });
        }
    };

    let bundle = match scenario.bundle.build(domain.tau()) {
        Ok(b) => b,
        Err(e) => {
            rows.push(CheckRow {
                name: "bundle",
                passed: false,
                detail: e.to_string(),
            });
            return Ok(ValidationReport { rows });
        }
    };
    let residual = bundle.validate_cocycle();
    rows.push(CheckRow {
        name: "cocycle",
        passed: residual < 1e-10,
        detail: format!("residual {residual:.3e}"),
    });
    if matches!(scenario.group, GroupKind::Sl2) {
        rows.push(CheckRow {
            name: "det_trivial",
            passed: bundle.det_trivial(),
            detail: format!("det multipliers trivial: {}", bundle.det_trivial()),
        });
    }

    let ctx = match BundleContext::new(domain, bundle) {
        Ok(c) => c,
        Err(e) => {
            rows.push(CheckRow {
                name: "context",
                passed: false,
                detail: e.to_string(),
            });
            return Ok(ValidationReport { rows });
        }
    };
    let h0: Result<MetricField, Error> = match &scenario.initial_metric {
        crate::scenario::InitialMetric::Canonical => ctx.canonical_metric(),
        crate::scenario::InitialMetric::Perturbed { seed, amplitude } => ctx
            .canonical_metric()
            .and_then(|h| ctx.perturb(&h, *seed, *amplitude, scenario.flow.det_constrained)),
        crate::scenario::InitialMetric::Snapshot { path } => {
            crate::snapshot::load_values(Path::new(path)).and_then(|(header, values)| {
                crate::snapshot::check_header_against(&header, &ctx)?;
                Ok(MetricField::new(values, crate::metric::Provenance::Perturbed))
            })
        }
    };
    let h0 = match h0 {
        Ok(h) => h,
        Err(e) => {
            rows.push(CheckRow {
                name: "initial_metric",
                passed: false,
                detail: e.to_string(),
            });
            return Ok(ValidationReport { rows });
        }
    };
    match ctx.validate_metric(&h0) {
        Ok(()) => rows.push(CheckRow {
            name: "hermitian_positive",
            passed: true,
            detail: "all fibers Hermitian positive definite".into(),
        }),
        Err(e) => rows.push(CheckRow {
            name: "hermitian_positive",
            passed: false,
            detail: e.to_string(),
        }),
    }
    match ctx.seam_check(&h0) {
        Ok(chk) => rows.push(CheckRow {
            name: "seam_compatibility",
            passed: chk.compatible(),
            detail: format!(
                "seam {:.3e} vs interior {:.3e}",
                chk.seam_residual, chk.interior_residual
            ),
        }),
        Err(e) => rows.push(CheckRow {
            name: "seam_compatibility",
            passed: false,
            detail: e.to_string(),
        }),
    }
    match ctx.degree(&h0) {
        Ok(slope) => {
            let nearest = slope.degree.round();
            let err = (slope.degree - nearest).abs();
            rows.push(CheckRow {
                name: "degree_integrality",
                passed: err < 1e-6,
                detail: format!("degree {} (|err| = {err:.3e})", slope.degree),
            });
        }
        Err(e) => rows.push(CheckRow {
            name: "degree_integrality",
            passed: false,
            detail: e.to_string(),
        }),
    }
    Ok(ValidationReport { rows })
}

/// Refinement sweep: canonical curvature residual against the block
/// constants (classifiable bundles) and the adjoint curvature-relation
/// residual (det-trivial rank 2), with observed orders between levels.
pub fn cmd_sweep(scenario_path: &Path, grids: &[usize], out_override: Option<&Path>) -> Result<Vec<SweepRow>, Error> {
    let scenario = load_scenario(scenario_path)?;
    if grids.is_empty() {
        return Err(Error::Scenario("sweep needs at least one grid level".into()));
    }
    let tau = scenario.base.tau.to_complex();
    let lie = LieStructure::sl2();
    let mut rows: Vec<SweepRow> = Vec::new();
    for &n in grids {
        let domain = TorusDomain::new(tau, n)?;
        let bundle = scenario.bundle.build(tau)?;
        let ctx = BundleContext::new(domain, bundle)?;
        let h = ctx.canonical_metric()?;
        let curvature_residual = match BundleClass::from_tag(ctx.bundle().class_tag()) {
            Some(BundleClass::LineSum(degrees)) if degrees.len() == ctx.rank() => {
                let k = ctx.mean_curvature(&h)?;
                let vol = ctx.domain().vol();
                let r = ctx.rank();
                let mut worst = 0.0f64;
                for kk in 0..ctx.domain().n() {
                    for j in 0..ctx.domain().n() {
                        let cell = k.cell(j, kk);
                        for a in 0..r {
                            for b in 0..r {
                                let expect = if a == b {
                                    2.0 * std::f64::consts::PI * degrees[a] as f64 / vol
                                } else {
                                    0.0
                                };
                                worst = worst
                                    .max((cell[a * r + b] - num_complex::Complex64::new(expect, 0.0)).norm());
                            }
                        }
                    }
                }
                worst
            }
            _ => f64::NAN,
        };
        let relation_residual = if ctx.rank() == 2 && ctx.bundle().det_trivial() {
            curvature_relation_residual(&ctx, &h, &lie)?
        } else {
            f64::NAN
        };
        let (mut curvature_order, mut relation_order) = (None, None);
        if let Some(prev) = rows.last() {
            let ratio = (n as f64 / prev.n as f64).ln();
            if prev.curvature_residual.is_finite() && curvature_residual.is_finite() && curvature_residual > 0.0 {
                curvature_order = Some((prev.curvature_residual / curvature_residual).ln() / ratio);
            }
            if prev.relation_residual.is_finite() && relation_residual.is_finite() && relation_residual > 0.0 {
                relation_order = Some((prev.relation_residual / relation_residual).ln() / ratio);
            }
        }
        rows.push(SweepRow {
            n,
            curvature_residual,
            relation_residual,
            curvature_order,
            relation_order,
        });
    }
    let out_dir = resolve_out_dir(scenario_path, &scenario, out_override);
    std::fs::create_dir_all(&out_dir)?;
    write_sweep_csv(&out_dir.join("sweep.csv"), &rows)?;
    Ok(rows)
}

/// Render report artifacts from a run directory: a text summary always, and
/// the sup-deviation / minimum-eigenvalue charts when SVG output is enabled
/// (scenario setting, overridable from the CLI).
pub fn cmd_report(run_dir: &Path, force_svg: Option<bool>) -> Result<Vec<PathBuf>, Error> {
    let csv_path = run_dir.join("diagnostics.csv");
    if !csv_path.exists() {
        return Err(Error::Scenario(format!(
            "no diagnostics.csv in {}",
            run_dir.display()
        )));
    }
    let samples = read_diagnostics_csv(&csv_path)?;
    if samples.is_empty() {
        return Err(Error::Scenario("diagnostics series is empty".into()));
    }
    let summary = read_summary(&run_dir.join("summary.json")).ok();
    let emit_svg = force_svg.unwrap_or_else(|| {
        summary
            .as_ref()
            .map(|s| s.scenario.outputs.emit_svg)
            .unwrap_or(false)
    });
    let mut written = Vec::new();

    let mut text = String::new();
    let last = samples.last().unwrap();
    text.push_str(&format!("samples: {}\n", samples.len()));
    text.push_str(&format!("final step: {} (t = {})\n", last.step, last.time));
    text.push_str(&format!("final sup deviation: {:.6e}\n", last.sup_dev));
    text.push_str(&format!("final min eigenvalue of h0^-1 h: {:.6e}\n", last.min_eig));
    text.push_str(&format!("final condition number: {:.6e}\n", last.cond));
    text.push_str(&format!("determinant drift: {:.6e}\n", last.det_drift));
    if let Some(s) = &summary {
        text.push_str(&format!("lambda: {}\n", s.lambda));
        text.push_str(&format!("classification: {}\n", s.classification));
        if let Some(p) = s.oracle_prediction {
            text.push_str(&format!("oracle prediction: {p}\n"));
        }
        if let Some(c) = &s.oracle_certificate {
            text.push_str(&format!("oracle certificate: {c}\n"));
        }
        text.push_str(&format!("termination: {}\n", s.termination));
    }
    let report_path = run_dir.join("report.txt");
    std::fs::write(&report_path, text)?;
    written.push(report_path);

    if emit_svg {
        let xs: Vec<f64> = samples.iter().map(|s| s.time).collect();
        let sup: Vec<f64> = samples.iter().map(|s| s.sup_dev).collect();
        let min_eig: Vec<f64> = samples.iter().map(|s| s.min_eig).collect();
        let p1 = run_dir.join("sup_deviation.svg");
        render_series_svg(&p1, "sup |K - lambda|_h", &xs, &sup)?;
        written.push(p1);
        let p2 = run_dir.join("min_eig.svg");
        render_series_svg(&p2, "min eigenvalue of h0^-1 h", &xs, &min_eig)?;
        written.push(p2);
    }
    Ok(written)
}
