//! Numerical verification layer tying the SL(2, C) bundle to its adjoint:
//! the norm comparison |K_ad| = c0 |K_E|, the curvature relation
//! F(ad) = ad(F(E)), membership of the mean curvature in the image of the
//! adjoint map, and the commuting square of flow and induction.

use num_complex::Complex64 as C64;

use crate::error::Error;
use crate::flow::{run_steps, time_step, Scheme};
use crate::lie::LieStructure;
use crate::metric::{BundleContext, MetricField};
use crate::smallmat;

const ZERO: C64 = C64::new(0.0, 0.0);

/// sup over the grid of |det h - 1|.
pub fn unimodular_residual(h: &MetricField) -> f64 {
    let r = h.rank();
    h.values()
        .data()
        .chunks_exact(r * r)
        .map(|cell| (smallmat::det(r, cell) - C64::new(1.0, 0.0)).norm())
        .fold(0.0, f64::max)
}

fn require_unimodular(h: &MetricField, what: &str) -> Result<(), Error> {
    let res = unimodular_residual(h);
    if res > 1e-8 {
        return Err(Error::InvalidMetric(format!(
            "{what} requires det h = 1, residual {res:.3e}"
        )));
    }
    Ok(())
}

/// Pointwise Hilbert-Schmidt norm of an endomorphism with respect to a
/// fiber metric: |M|^2 = tr(M g^-1 M^H g).
fn hs_norm(r: usize, g: &[C64], m: &[C64], scratch: &mut [C64]) -> f64 {
    let rr = r * r;
    let (ginv, rest) = scratch.split_at_mut(rr);
    let (t1, t2) = rest.split_at_mut(rr);
    if !smallmat::inverse(r, g, ginv) {
        return f64::NAN;
    }
    smallmat::mul_conjt(r, ginv, m, t1);
    smallmat::mul(r, t1, g, t2);
    smallmat::mul(r, m, t2, t1);
    smallmat::trace(r, t1).re.max(0.0).sqrt()
}

/// Maximum relative error of |K(h_ad)|_{h_ad} = c0 |K(h)|_h over the grid,
/// both sides in the Hilbert-Schmidt norms of their own fiber metrics and
/// computed through independent code paths (the induced rank-3 metric on one
/// side, the rank-2 metric on the other). Relative to the sup of the right
/// side so flat instances report zero.
pub fn norm_comparison_check(
    ctx_e: &BundleContext,
    h: &MetricField,
    lie: &LieStructure,
) -> Result<f64, Error> {
    require_unimodular(h, "norm comparison")?;
    let c0 = lie.c0_constant()?;
    let ctx_ad = ctx_e.end0_context()?;
    let g = ctx_e.induce_end_metric(h, true)?;
    let k_ad = ctx_ad.mean_curvature(&g)?;
    let k_e = ctx_e.mean_curvature(h)?;
    let n = ctx_e.domain().n();
    let mut scratch2 = vec![ZERO; 3 * 4];
    let mut scratch3 = vec![ZERO; 3 * 9];
    let mut sup_rhs = 0.0f64;
    let mut sup_diff = 0.0f64;
    for kk in 0..n {
        for j in 0..n {
            let lhs = hs_norm(3, g.values().cell(j, kk), k_ad.cell(j, kk), &mut scratch3);
            let rhs = c0 * hs_norm(2, h.values().cell(j, kk), k_e.cell(j, kk), &mut scratch2);
            sup_rhs = sup_rhs.max(rhs);
            sup_diff = sup_diff.max((lhs - rhs).abs());
        }
    }
    if sup_rhs < 1e-10 {
        // Flat instances: report the absolute defect.
        return Ok(sup_diff);
    }
    Ok(sup_diff / sup_rhs)
}

/// sup over the grid of |K(h_ad) - ad(K(h))| in the induced HS norm: the
/// discrete residual of the curvature relation F(ad) = ad(F(E)).
pub fn curvature_relation_residual(
    ctx_e: &BundleContext,
    h: &MetricField,
    lie: &LieStructure,
) -> Result<f64, Error> {
    require_unimodular(h, "curvature relation")?;
    let ctx_ad = ctx_e.end0_context()?;
    let g = ctx_e.induce_end_metric(h, true)?;
    let k_ad = ctx_ad.mean_curvature(&g)?;
    let k_e = ctx_e.mean_curvature(h)?;
    let n = ctx_e.domain().n();
    let mut scratch3 = vec![ZERO; 3 * 9];
    let mut worst = 0.0f64;
    for kk in 0..n {
        for j in 0..n {
            // Project the tiny discrete trace out before applying ad.
            let mut ke = [ZERO; 4];
            ke.copy_from_slice(k_e.cell(j, kk));
            let half_tr = 0.5 * (ke[0] + ke[3]);
            ke[0] -= half_tr;
            ke[3] -= half_tr;
            let ad_ke = lie.ad_map(&ke)?;
            let mut diff = [ZERO; 9];
            for (i, d) in diff.iter_mut().enumerate() {
                *d = k_ad.cell(j, kk)[i] - ad_ke[i];
            }
            worst = worst.max(hs_norm(3, g.values().cell(j, kk), &diff, &mut scratch3));
        }
    }
    Ok(worst)
}

/// Pointwise least-squares distance of K(h_ad) from the span of
/// {ad(E), ad(F), ad(H)} in the induced HS inner product; sup over the grid.
pub fn ad_image_residual(
    ctx_ad: &BundleContext,
    h_ad: &MetricField,
    lie: &LieStructure,
) -> Result<f64, Error> {
    if ctx_ad.rank() != 3 {
        return Err(Error::Incompatible(
            "ad-image residual runs on the rank-3 adjoint bundle".into(),
        ));
    }
    let k_ad = ctx_ad.mean_curvature(h_ad)?;
    let ads = lie.ad_basis();
    let n = ctx_ad.domain().n();
    let mut worst = 0.0f64;
    let mut ginv = [ZERO; 9];
    let mut t1 = [ZERO; 9];
    let mut t2 = [ZERO; 9];
    let mut scratch3 = vec![ZERO; 3 * 9];
    for kk in 0..n {
        for j in 0..n {
            let g = h_ad.values().cell(j, kk);
            if !smallmat::inverse(3, g, &mut ginv) {
                return Err(Error::InvalidMetric("singular induced metric".into()));
            }
            // <A, B>_g = tr(A g^-1 B^H g)
            let pair = |a: &[C64; 9], b: &[C64; 9], t1: &mut [C64; 9], t2: &mut [C64; 9]| -> C64 {
                smallmat::mul_conjt(3, &ginv, b, t1);
                smallmat::mul(3, t1, g, t2);
                smallmat::mul(3, a, t2, t1);
                smallmat::trace(3, t1)
            };
            let mut gram = [ZERO; 9];
            let mut rhs = [ZERO; 3];
            let mut kc = [ZERO; 9];
            kc.copy_from_slice(k_ad.cell(j, kk));
            for q in 0..3 {
                for p in 0..3 {
                    gram[q * 3 + p] = pair(&ads[p], &ads[q], &mut t1, &mut t2);
                }
                rhs[q] = pair(&kc, &ads[q], &mut t1, &mut t2);
            }
            let mut gram_inv = [ZERO; 9];
            if !smallmat::inverse(3, &gram, &mut gram_inv) {
                return Err(Error::Lie("degenerate ad-image Gram matrix".into()));
            }
            let mut coeff = [ZERO; 3];
            for q in 0..3 {
                coeff[q] = (0..3).map(|p| gram_inv[q * 3 + p] * rhs[p]).sum();
            }
            let mut resid = kc;
            for p in 0..3 {
                for e in 0..9 {
                    resid[e] -= coeff[p] * ads[p][e];
                }
            }
            worst = worst.max(hs_norm(3, g, &resid, &mut scratch3));
        }
    }
    Ok(worst)
}

/// Result of the commuting-square test of Lemma-style reduction
/// preservation: flow-then-induce versus induce-then-flow.
#[derive(Debug, Clone, Copy)]
pub struct ReductionCheck {
    pub deviation: f64,
    pub dt: f64,
    pub steps: u64,
}

/// Run (a) the flow on the adjoint bundle from the induced metric, and
/// (b) the flow on E followed by induction; report the sup-norm distance of
/// the two time-T metrics. lambda = 0 throughout (semisimple case).
pub fn reduction_preservation_test(
    ctx_e: &BundleContext,
    h0: &MetricField,
    t_final: f64,
    cfl: f64,
    scheme: Scheme,
) -> Result<ReductionCheck, Error> {
    require_unimodular(h0, "reduction preservation")?;
    let dt = time_step(ctx_e.domain(), cfl);
    let steps = (t_final / dt).round().max(1.0) as u64;
    let ctx_ad = ctx_e.end0_context()?;

    let g0 = ctx_e.induce_end_metric(h0, true)?;
    let ga = run_steps(&ctx_ad, &g0, 0.0, dt, steps, scheme)?;

    let h_t = run_steps(ctx_e, h0, 0.0, dt, steps, scheme)?;
    let gb = ctx_e.induce_end_metric(&h_t, true)?;

    let n = ctx_e.domain().n();
    let mut worst = 0.0f64;
    for kk in 0..n {
        for j in 0..n {
            let d: f64 = ga
                .values()
                .cell(j, kk)
                .iter()
                .zip(gb.values().cell(j, kk).iter())
                .map(|(a, b)| (a - b).norm_sqr())
                .sum::<f64>()
                .sqrt();
            worst = worst.max(d);
        }
    }
    Ok(ReductionCheck {
        deviation: worst,
        dt,
        steps,
    })
}

/// The c0 bridge at the level of sup-deviations: sup |K_E|_h * c0 against
/// the ad-side sup |K_ad|_{h_ad}, both in the max-eigenvalue norm. Equality
/// is exact in the continuum because the eigenvalues of ad(xi) are the
/// eigenvalue differences of xi.
pub fn deviation_bridge(
    ctx_e: &BundleContext,
    h: &MetricField,
    lie: &LieStructure,
) -> Result<(f64, f64), Error> {
    require_unimodular(h, "deviation bridge")?;
    let c0 = lie.c0_constant()?;
    let ctx_ad = ctx_e.end0_context()?;
    let g = ctx_e.induce_end_metric(h, true)?;
    let e_side = ctx_e.sup_deviation(h, 0.0)? * c0;
    let ad_side = ctx_ad.sup_deviation(&g, 0.0)?;
    Ok((e_side, ad_side))
}
