//! Time integration of the Donaldson heat flow
//! h^-1 dh/dt = -(K(h) - lambda Id) with positivity-preserving
//! multiplicative exponential steps, running diagnostics, and limit
//! classification.
//!
//! The update h <- h exp(-dt (K - lambda)) stays Hermitian positive for any
//! step size because K - lambda is h-Hermitian; the step size is still
//! bounded by the parabolic stability of the linearized equation
//! d phi/dt = 2 d_z d_zbar phi under the 4th-order stencils.

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::error::Error;
use crate::field::MatrixField;
use crate::metric::{BundleContext, MetricField, Provenance};
use crate::smallmat;
use crate::torus::TorusDomain;

const ZERO: C64 = C64::new(0.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    EulerMult,
    Rk2Mult,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowConfig {
    pub cfl: f64,
    pub scheme: Scheme,
    pub max_steps: u64,
    pub epsilon_target: f64,
    pub record_every: u64,
    pub det_constrained: bool,
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig {
            cfl: 0.2,
            scheme: Scheme::EulerMult,
            max_steps: 10_000,
            epsilon_target: 1e-3,
            record_every: 50,
            det_constrained: false,
        }
    }
}

impl FlowConfig {
    pub fn validate(&self) -> Result<(), Error> {
        if !(self.cfl > 0.0 && self.cfl <= 0.5) {
            return Err(Error::InvalidConfig(format!(
                "cfl {} outside (0, 0.5]",
                self.cfl
            )));
        }
        if !(self.epsilon_target > 0.0) {
            return Err(Error::InvalidConfig("epsilon_target must be positive".into()));
        }
        if self.max_steps == 0 || self.record_every == 0 {
            return Err(Error::InvalidConfig(
                "max_steps and record_every must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// One diagnostics record along the flow.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowSample {
    pub step: u64,
    pub time: f64,
    pub sup_dev: f64,
    pub l2_dev: f64,
    pub det_drift: f64,
    pub trace_residual: f64,
    pub min_eig: f64,
    pub cond: f64,
    pub energy: f64,
}

#[derive(Debug, Clone, Default)]
pub struct FlowDiagnostics {
    pub dt: f64,
    pub samples: Vec<FlowSample>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Termination {
    TargetReached,
    MaxSteps,
    Aborted(String),
}

#[derive(Debug)]
pub struct FlowRun {
    pub metric: MetricField,
    pub diagnostics: FlowDiagnostics,
    pub termination: Termination,
}

/// Largest stable Euler step for the linearized flow under the 4th-order
/// second-derivative stencils (symbol extreme 16/3 per axis).
pub fn stability_bound(domain: &TorusDomain) -> f64 {
    let tau = domain.tau();
    let n2 = (domain.n() * domain.n()) as f64;
    let lam_max = (16.0 / 3.0) * (tau.norm_sqr() + 1.0 + 2.0 * tau.re.abs())
        / (2.0 * tau.im * tau.im)
        * n2;
    2.0 / lam_max
}

/// dt = cfl * dx^2 with dx the smaller physical grid spacing, capped at 90%
/// of the hard stability bound so every admissible cfl stays stable.
pub fn time_step(domain: &TorusDomain, cfl: f64) -> f64 {
    let dx = domain.spacing() * f64::min(1.0, domain.tau().norm());
    (cfl * dx * dx).min(0.9 * stability_bound(domain))
}

/// h <- h exp(-dt (K - lambda Id)) cellwise, re-Hermitized.
fn apply_exponential(values: &mut MatrixField, k: &MatrixField, lambda: f64, dt: f64) {
    let r = values.rows();
    let rr = r * r;
    let n = values.n();
    values
        .data_mut()
        .par_chunks_mut(n * rr)
        .enumerate()
        .for_each(|(kk, row)| {
            let mut x = vec![ZERO; rr];
            let mut e = vec![ZERO; rr];
            let mut scratch = vec![ZERO; 2 * rr];
            let mut hnew = vec![ZERO; rr];
            for j in 0..n {
                let kc = k.cell(j, kk);
                for i in 0..rr {
                    x[i] = -dt * kc[i];
                }
                for d in 0..r {
                    x[d * r + d] += C64::new(dt * lambda, 0.0);
                }
                smallmat::expm(r, &x, &mut e, &mut scratch);
                let hc = &mut row[j * rr..(j + 1) * rr];
                smallmat::mul(r, hc, &e, &mut hnew);
                smallmat::hermitize(r, &mut hnew);
                hc.copy_from_slice(&hnew);
            }
        });
}

/// Rescale each fiber metric so det(h0^-1 h) returns to 1 exactly.
fn renormalize_det(values: &mut MatrixField, det0: &[f64]) {
    let r = values.rows();
    let n = values.n();
    for kk in 0..n {
        for j in 0..n {
            let cell = values.cell_mut(j, kk);
            let d = smallmat::det(r, cell).re / det0[kk * n + j];
            if d > 0.0 && d.is_finite() {
                let s = d.powf(-1.0 / r as f64);
                for v in cell.iter_mut() {
                    *v *= s;
                }
            }
        }
    }
}

/// Single flow step. Errors when dt exceeds the stability bound.
pub fn step(
    ctx: &BundleContext,
    h: &MetricField,
    lambda: f64,
    dt: f64,
    scheme: Scheme,
) -> Result<MetricField, Error> {
    let bound = stability_bound(ctx.domain());
    if dt > bound {
        return Err(Error::TimeStepTooLarge { dt, bound });
    }
    let mut values = h.values().clone();
    advance(ctx, &mut values, lambda, dt, scheme)?;
    Ok(MetricField::new(values, Provenance::FlowEvolved))
}

fn advance(
    ctx: &BundleContext,
    values: &mut MatrixField,
    lambda: f64,
    dt: f64,
    scheme: Scheme,
) -> Result<(), Error> {
    match scheme {
        Scheme::EulerMult => {
            let h = MetricField::new(values.clone(), Provenance::FlowEvolved);
            let k = ctx.mean_curvature(&h)?;
            apply_exponential(values, &k, lambda, dt);
        }
        Scheme::Rk2Mult => {
            let h = MetricField::new(values.clone(), Provenance::FlowEvolved);
            let k1 = ctx.mean_curvature(&h)?;
            let mut mid = values.clone();
            apply_exponential(&mut mid, &k1, lambda, 0.5 * dt);
            let hmid = MetricField::new(mid, Provenance::FlowEvolved);
            let k2 = ctx.mean_curvature(&hmid)?;
            apply_exponential(values, &k2, lambda, dt);
        }
    }
    Ok(())
}

/// Integrate for an exact number of steps without diagnostics.
pub fn run_steps(
    ctx: &BundleContext,
    h0: &MetricField,
    lambda: f64,
    dt: f64,
    nsteps: u64,
    scheme: Scheme,
) -> Result<MetricField, Error> {
    let bound = stability_bound(ctx.domain());
    if dt > bound {
        return Err(Error::TimeStepTooLarge { dt, bound });
    }
    let mut values = h0.values().clone();
    for _ in 0..nsteps {
        advance(ctx, &mut values, lambda, dt, scheme)?;
    }
    Ok(MetricField::new(values, Provenance::FlowEvolved))
}

struct Reference {
    det0: Vec<f64>,
    l0inv: MatrixField,
}

fn reference_of(h0: &MetricField) -> Result<Reference, Error> {
    let r = h0.rank();
    let rr = r * r;
    let n = h0.values().n();
    let mut det0 = vec![0.0f64; n * n];
    let mut l0inv = MatrixField::zeros(n, r, r);
    let mut chol = vec![ZERO; rr];
    for kk in 0..n {
        for j in 0..n {
            let cell = h0.values().cell(j, kk);
            let d = smallmat::det(r, cell).re;
            if d <= 0.0 || !d.is_finite() {
                return Err(Error::InvalidMetric("initial metric not positive".into()));
            }
            det0[kk * n + j] = d;
            if !smallmat::cholesky_lower(r, cell, &mut chol) {
                return Err(Error::InvalidMetric("initial metric not positive".into()));
            }
            if !smallmat::lower_inverse(r, &chol, l0inv.cell_mut(j, kk)) {
                return Err(Error::InvalidMetric("singular Cholesky factor".into()));
            }
        }
    }
    Ok(Reference { det0, l0inv })
}

fn record_sample(
    ctx: &BundleContext,
    values: &MatrixField,
    k: &MatrixField,
    lambda: f64,
    reference: &Reference,
    step: u64,
    dt: f64,
) -> FlowSample {
    let r = values.rows();
    let rr = r * r;
    let n = values.n();
    let h = MetricField::new(values.clone(), Provenance::FlowEvolved);
    let sup_dev = ctx.sup_deviation_of(&h, k, lambda);
    let l2_dev = ctx.l2_deviation_of(&h, k, lambda);
    let energy = ctx.energy_of(&h, k, lambda);

    let mut det_drift = 0.0f64;
    let mut trace_residual = 0.0f64;
    let mut min_eig = f64::INFINITY;
    let mut cond = 0.0f64;
    let mut t1 = vec![ZERO; rr];
    let mut t2 = vec![ZERO; rr];
    for kk in 0..n {
        for j in 0..n {
            let cell = values.cell(j, kk);
            let d = smallmat::det(r, cell).re / reference.det0[kk * n + j];
            det_drift = det_drift.max((d - 1.0).abs());
            let tr = smallmat::trace(r, k.cell(j, kk));
            trace_residual = trace_residual.max((tr - C64::new(r as f64 * lambda, 0.0)).norm());
            // Eigenvalues of h0^-1 h via the Hermitian transform L0^-1 h L0^-H.
            let l0 = reference.l0inv.cell(j, kk);
            smallmat::mul(r, l0, cell, &mut t1);
            smallmat::mul_conjt(r, &t1, l0, &mut t2);
            smallmat::hermitize(r, &mut t2);
            let eigs = crate::metric::hermitian_eigs(r, &t2);
            let lo = eigs.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = eigs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            min_eig = min_eig.min(lo);
            if lo > 0.0 {
                cond = cond.max(hi / lo);
            } else {
                cond = f64::INFINITY;
            }
        }
    }
    FlowSample {
        step,
        time: step as f64 * dt,
        sup_dev,
        l2_dev,
        det_drift,
        trace_residual,
        min_eig,
        cond,
        energy,
    }
}

/// Integrate until sup-deviation falls below the target or max_steps is hit,
/// recording diagnostics every record_every steps (plus first and last).
/// NaN or positivity breakdown aborts with diagnostics accumulated so far.
pub fn run(
    ctx: &BundleContext,
    h0: &MetricField,
    lambda: f64,
    config: &FlowConfig,
) -> Result<FlowRun, Error> {
    config.validate()?;
    ctx.validate_metric(h0)?;
    let dt = time_step(ctx.domain(), config.cfl);
    let reference = reference_of(h0)?;
    let mut values = h0.values().clone();
    let mut diagnostics = FlowDiagnostics {
        dt,
        samples: Vec::new(),
    };

    let mut step_idx: u64 = 0;
    let termination = loop {
        let h = MetricField::new(values.clone(), Provenance::FlowEvolved);
        let k = match ctx.mean_curvature(&h) {
            Ok(k) => k,
            Err(e) => break Termination::Aborted(e.to_string()),
        };
        let at_sample = step_idx % config.record_every == 0 || step_idx == config.max_steps;
        if at_sample {
            let sample = record_sample(ctx, &values, &k, lambda, &reference, step_idx, dt);
            let finite = sample.sup_dev.is_finite() && sample.min_eig.is_finite();
            let positive = sample.min_eig > 0.0;
            diagnostics.samples.push(sample);
            if !finite || !positive {
                break Termination::Aborted(format!(
                    "positivity or finiteness lost at step {step_idx}"
                ));
            }
            if sample.sup_dev < config.epsilon_target {
                break Termination::TargetReached;
            }
        }
        if step_idx == config.max_steps {
            break Termination::MaxSteps;
        }
        if !values.is_finite() {
            break Termination::Aborted(format!("non-finite metric at step {step_idx}"));
        }
        match config.scheme {
            Scheme::EulerMult => apply_exponential(&mut values, &k, lambda, dt),
            Scheme::Rk2Mult => {
                let mut mid = values.clone();
                apply_exponential(&mut mid, &k, lambda, 0.5 * dt);
                let hmid = MetricField::new(mid, Provenance::FlowEvolved);
                let k2 = match ctx.mean_curvature(&hmid) {
                    Ok(k2) => k2,
                    Err(e) => break Termination::Aborted(e.to_string()),
                };
                apply_exponential(&mut values, &k2, lambda, dt);
            }
        }
        if config.det_constrained {
            renormalize_det(&mut values, &reference.det0);
        }
        step_idx += 1;
    };

    Ok(FlowRun {
        metric: MetricField::new(values, Provenance::FlowEvolved),
        diagnostics,
        termination,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    ApproxHe,
    Obstructed,
    Undecided,
}

impl Classification {
    pub fn as_str(&self) -> &'static str {
        match self {
            Classification::ApproxHe => "approx_HE",
            Classification::Obstructed => "obstructed",
            Classification::Undecided => "undecided",
        }
    }
}

/// Classify the limiting behavior of a diagnostics series: convergence below
/// epsilon, a plateau within 10% of the predicted infimum over the final
/// third, or neither.
pub fn classify_limit(diag: &FlowDiagnostics, predicted_inf: f64, epsilon: f64) -> Classification {
    let s = &diag.samples;
    if s.len() < 50 {
        return Classification::Undecided;
    }
    let last = s[s.len() - 1].sup_dev;
    if last < epsilon && last <= s[0].sup_dev {
        return Classification::ApproxHe;
    }
    if predicted_inf > 0.0 {
        let tail = &s[s.len() - s.len() / 3..];
        if tail
            .iter()
            .all(|smp| (smp.sup_dev - predicted_inf).abs() <= 0.1 * predicted_inf)
        {
            return Classification::Obstructed;
        }
    }
    Classification::Undecided
}

/// Pointwise eigenvalue extremes of h0^-1 h over the grid; used by the
/// degeneration observables of semistable-not-polystable flows.
pub fn relative_eig_range(h0: &MetricField, h: &MetricField) -> Result<(f64, f64), Error> {
    let reference = reference_of(h0)?;
    let r = h0.rank();
    let rr = r * r;
    let n = h0.values().n();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut t1 = vec![ZERO; rr];
    let mut t2 = vec![ZERO; rr];
    for kk in 0..n {
        for j in 0..n {
            let l0 = reference.l0inv.cell(j, kk);
            smallmat::mul(r, l0, h.values().cell(j, kk), &mut t1);
            smallmat::mul_conjt(r, &t1, l0, &mut t2);
            smallmat::hermitize(r, &mut t2);
            for e in crate::metric::hermitian_eigs(r, &t2) {
                lo = lo.min(e);
                hi = hi.max(e);
            }
        }
    }
    Ok((lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundle::FactorSystem;
    use crate::torus::TorusDomain;
    use std::f64::consts::PI;

    fn tau_i() -> C64 {
        C64::new(0.0, 1.0)
    }

    fn ctx_of(b: FactorSystem, n: usize) -> BundleContext {
        BundleContext::new(TorusDomain::new(b.tau(), n).unwrap(), b).unwrap()
    }

    #[test]
    fn hermitian_einstein_fixed_point() {
        let c = ctx_of(FactorSystem::line(2, tau_i()), 32);
        let h = c.canonical_metric().unwrap();
        let dt = time_step(c.domain(), 0.2);
        let h1 = step(&c, &h, 4.0 * PI, dt, Scheme::EulerMult).unwrap();
        // K - lambda is pure discretization error, so one step barely moves h.
        let rel = h1.values().max_diff(h.values()) / h.values().max_cell_frob();
        assert!(rel < 1e-6, "fixed point moved by {rel}");
    }

    #[test]
    fn linearized_mode_decay_rate() {
        // h = e^phi on the trivial bundle with phi = a cos(2 pi x):
        // d phi/dt = -K = 2 d_z d_zbar phi decays the mode at exp(-2 pi^2 t).
        let n = 32;
        let c = ctx_of(FactorSystem::line(0, tau_i()), n);
        let amp = 0.01;
        let mut values = MatrixField::zeros(n, 1, 1);
        for k in 0..n {
            for j in 0..n {
                let x = c.domain().x(j as isize);
                values.cell_mut(j, k)[0] =
                    C64::new((amp * (2.0 * PI * x).cos()).exp(), 0.0);
            }
        }
        let h0 = MetricField::new(values, Provenance::Perturbed);
        let dt = time_step(c.domain(), 0.2);
        let nsteps = 120u64;
        let h1 = run_steps(&c, &h0, 0.0, dt, nsteps, Scheme::EulerMult).unwrap();
        let t = dt * nsteps as f64;
        let measure = |h: &MetricField| {
            let mut hi = f64::NEG_INFINITY;
            let mut lo = f64::INFINITY;
            for v in h.values().data() {
                hi = hi.max(v.re.ln());
                lo = lo.min(v.re.ln());
            }
            0.5 * (hi - lo)
        };
        let ratio = measure(&h1) / measure(&h0);
        let expect = (-2.0 * PI * PI * t).exp();
        assert!(
            (ratio / expect - 1.0).abs() < 0.01,
            "decay ratio {ratio} vs {expect}"
        );
    }

    #[test]
    fn determinant_and_trace_preserved_for_trace_free_data() {
        let c = ctx_of(FactorSystem::atiyah_f2(tau_i()), 32);
        let h0 = c.canonical_metric().unwrap();
        let config = FlowConfig {
            max_steps: 300,
            epsilon_target: 1e-12,
            record_every: 30,
            ..Default::default()
        };
        let out = run(&c, &h0, 0.0, &config).unwrap();
        assert_eq!(out.termination, Termination::MaxSteps);
        for s in &out.diagnostics.samples {
            assert!(s.det_drift < 1e-10, "det drift {} at step {}", s.det_drift, s.step);
            assert!(s.trace_residual < 1e-8, "trace residual {}", s.trace_residual);
        }
    }

    #[test]
    fn scheme_consistency_and_orders() {
        // Euler converges at order 1 and midpoint at order 2 in dt.
        let n = 16;
        let c = ctx_of(FactorSystem::line(1, tau_i()), n);
        let h0 = {
            let h = c.canonical_metric().unwrap();
            c.perturb(&h, 3, 0.2, false).unwrap()
        };
        let lambda = 2.0 * PI;
        let dt = 0.5 * time_step(c.domain(), 0.2);
        let t_end = 64.0 * dt;
        let solve = |dt_use: f64, scheme: Scheme| {
            let steps = (t_end / dt_use).round() as u64;
            run_steps(&c, &h0, lambda, dt_use, steps, scheme).unwrap()
        };
        let reference = solve(dt / 8.0, Scheme::Rk2Mult);
        let err = |h: &MetricField| h.values().max_diff(reference.values());
        let e_euler_1 = err(&solve(dt, Scheme::EulerMult));
        let e_euler_2 = err(&solve(dt / 2.0, Scheme::EulerMult));
        let e_rk2_1 = err(&solve(dt, Scheme::Rk2Mult));
        let e_rk2_2 = err(&solve(dt / 2.0, Scheme::Rk2Mult));
        let order_euler = (e_euler_1 / e_euler_2).log2();
        let order_rk2 = (e_rk2_1 / e_rk2_2).log2();
        assert!(
            (0.7..1.5).contains(&order_euler),
            "euler order {order_euler} ({e_euler_1} -> {e_euler_2})"
        );
        assert!(
            order_rk2 > 1.6,
            "rk2 order {order_rk2} ({e_rk2_1} -> {e_rk2_2})"
        );
        // The two schemes agree on the same horizon to truncation level.
        assert!(e_euler_1 < 1e-2);
    }

    #[test]
    fn semistable_run_reaches_target_and_classifies() {
        let n = 32;
        let c = ctx_of(FactorSystem::line(2, tau_i()), n);
        let h = c.canonical_metric().unwrap();
        let h0 = c.perturb(&h, 7, 0.3, false).unwrap();
        let lambda = c.degree(&h).unwrap().lambda;
        // The discrete flow's deviation floor at N = 32 sits near 5.7e-3
        // (the O(N^-4) Chern-Weil defect of the discrete curvature), so the
        // target must stay above it; the N = 64 acceptance run uses 1e-3.
        let config = FlowConfig {
            epsilon_target: 8e-3,
            record_every: 5,
            max_steps: 20_000,
            ..Default::default()
        };
        let out = run(&c, &h0, lambda, &config).unwrap();
        assert_eq!(out.termination, Termination::TargetReached);
        let last = out.diagnostics.samples.last().unwrap();
        assert!(last.sup_dev < 8e-3);
        assert!(out.diagnostics.samples.len() >= 50);
        assert_eq!(
            classify_limit(&out.diagnostics, 0.0, config.epsilon_target),
            Classification::ApproxHe
        );
        // Monotonicity with 1% slack per interval.
        for w in out.diagnostics.samples.windows(2) {
            assert!(
                w[1].sup_dev <= w[0].sup_dev * 1.01,
                "deviation rose: {} -> {}",
                w[0].sup_dev,
                w[1].sup_dev
            );
        }
        // Positivity held at every recorded step.
        for s in &out.diagnostics.samples {
            assert!(s.min_eig > 0.0);
        }
    }

    #[test]
    fn unstable_run_plateaus_and_classifies() {
        let n = 32;
        let b = FactorSystem::direct_sum(
            &FactorSystem::line(1, tau_i()),
            &FactorSystem::line(-1, tau_i()),
        )
        .unwrap();
        let c = ctx_of(b, n);
        let h0 = c.canonical_metric().unwrap();
        let config = FlowConfig {
            epsilon_target: 0.05,
            record_every: 5,
            max_steps: 300,
            ..Default::default()
        };
        let out = run(&c, &h0, 0.0, &config).unwrap();
        assert_eq!(out.termination, Termination::MaxSteps);
        let last = out.diagnostics.samples.last().unwrap();
        assert!((last.sup_dev - 2.0 * PI).abs() < 0.05 * 2.0 * PI);
        assert_eq!(
            classify_limit(&out.diagnostics, 2.0 * PI, config.epsilon_target),
            Classification::Obstructed
        );
        // A truncated series is undecided.
        let mut short = out.diagnostics.clone();
        short.samples.truncate(10);
        assert_eq!(
            classify_limit(&short, 2.0 * PI, config.epsilon_target),
            Classification::Undecided
        );
    }

    #[test]
    fn oversized_step_rejected() {
        let c = ctx_of(FactorSystem::line(1, tau_i()), 16);
        let h = c.canonical_metric().unwrap();
        let bound = stability_bound(c.domain());
        assert!(step(&c, &h, 2.0 * PI, 1.1 * bound, Scheme::EulerMult).is_err());
        assert!(step(&c, &h, 2.0 * PI, 0.9 * bound, Scheme::EulerMult).is_ok());
    }

    #[test]
    fn aborts_on_breakdown() {
        let c = ctx_of(FactorSystem::line(0, tau_i()), 16);
        let h = c.canonical_metric().unwrap();
        // Invalid initial data is rejected up front.
        let mut bad = h.values().clone();
        bad.cell_mut(3, 3)[0] = C64::new(-1.0, 0.0);
        let bad = MetricField::new(bad, Provenance::Perturbed);
        let config = FlowConfig {
            max_steps: 10,
            record_every: 1,
            ..Default::default()
        };
        assert!(run(&c, &bad, 0.0, &config).is_err());
        // An absurd lambda overflows the exponential update within a step;
        // the run aborts and keeps the diagnostics collected so far.
        let out = run(&c, &h, 1e9, &config).unwrap();
        match out.termination {
            Termination::Aborted(_) => {
                assert!(!out.diagnostics.samples.is_empty());
            }
            other => panic!("expected abort, got {other:?}"),
        }
    }

    #[test]
    fn det_constrained_flag_pins_determinant() {
        let c = ctx_of(FactorSystem::atiyah_f2(tau_i()), 16);
        let h0 = c.canonical_metric().unwrap();
        let config = FlowConfig {
            max_steps: 50,
            record_every: 10,
            epsilon_target: 1e-12,
            det_constrained: true,
            ..Default::default()
        };
        let out = run(&c, &h0, 0.0, &config).unwrap();
        for s in &out.diagnostics.samples {
            assert!(s.det_drift < 1e-13, "constrained det drift {}", s.det_drift);
        }
    }
}
