//! Hermitian metric fields and their calculus: Chern connection, curvature,
//! mean curvature K = sqrt(-1) Lambda_omega F(h), deviation norms, degree and
//! slope, induced metrics on (trace-free) endomorphism bundles, and seeded
//! conformal perturbations.
//!
//! Sign conventions are anchored once: the canonical metric on the degree-d
//! line bundle has F_{z zbar} = pi d / Im tau, mean curvature K = 2 pi d / vol
//! and degree d. Everything else (Lambda_omega, lambda = 2 pi mu / vol, the
//! flow's fixed points) is downstream of this anchor.

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::f64::consts::PI;

use crate::bundle::{sl2_basis, ClassTag, FactorSystem};
use crate::error::Error;
use crate::field::{curvature_stencils, pad, FieldKind, MatrixField, SeamTable};
use crate::smallmat;
use crate::torus::{integrate, TorusDomain};

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Canonical,
    Perturbed,
    FlowEvolved,
    Induced,
}

impl Provenance {
    pub fn as_str(&self) -> &'static str {
        match self {
            Provenance::Canonical => "canonical",
            Provenance::Perturbed => "perturbed",
            Provenance::FlowEvolved => "flow-evolved",
            Provenance::Induced => "induced",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "canonical" => Some(Provenance::Canonical),
            "perturbed" => Some(Provenance::Perturbed),
            "flow-evolved" => Some(Provenance::FlowEvolved),
            "induced" => Some(Provenance::Induced),
            _ => None,
        }
    }
}

/// Grid of Hermitian positive-definite fiber metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricField {
    values: MatrixField,
    provenance: Provenance,
}

impl MetricField {
    pub fn new(values: MatrixField, provenance: Provenance) -> Self {
        MetricField { values, provenance }
    }

    pub fn values(&self) -> &MatrixField {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut MatrixField {
        &mut self.values
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn rank(&self) -> usize {
        self.values.rows()
    }
}

/// Degree, rank, slope, and the Hermitian-Einstein constant of a bundle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeData {
    pub degree: f64,
    pub rank: usize,
    pub slope: f64,
    pub lambda: f64,
}

/// Seam-compatibility report: one-sided versus twisted-centered differences
/// at the seam rows, with the same comparison at interior rows as the
/// discretization-error yardstick.
#[derive(Debug, Clone, Copy)]
pub struct SeamCheck {
    pub seam_residual: f64,
    pub interior_residual: f64,
}

impl SeamCheck {
    /// A compatible metric keeps the seam comparison within a small factor of
    /// the interior one; an incompatible ghost rule blows it up by O(N).
    pub fn compatible(&self) -> bool {
        self.seam_residual <= 10.0 * self.interior_residual.max(1e-11)
    }
}

/// A bundle fixed over a discretized torus, with precomputed seam transport.
#[derive(Debug, Clone)]
pub struct BundleContext {
    domain: TorusDomain,
    bundle: FactorSystem,
    seams: SeamTable,
}

impl BundleContext {
    pub fn new(domain: TorusDomain, bundle: FactorSystem) -> Result<Self, Error> {
        let residual = bundle.validate_cocycle();
        if residual >= 1e-10 {
            return Err(Error::InvalidBundle(format!(
                "cocycle residual {residual:.3e} exceeds 1e-10"
            )));
        }
        let seams = bundle.seam_table(&domain)?;
        Ok(BundleContext {
            domain,
            bundle,
            seams,
        })
    }

    pub fn domain(&self) -> &TorusDomain {
        &self.domain
    }

    pub fn bundle(&self) -> &FactorSystem {
        &self.bundle
    }

    pub fn seams(&self) -> &SeamTable {
        &self.seams
    }

    pub fn rank(&self) -> usize {
        self.bundle.rank()
    }

    /// Context for the trace-free endomorphism bundle of this one.
    pub fn end0_context(&self) -> Result<BundleContext, Error> {
        BundleContext::new(self.domain.clone(), FactorSystem::end0_bundle(&self.bundle)?)
    }

    /// Context for the full endomorphism bundle of this one.
    pub fn end_context(&self) -> Result<BundleContext, Error> {
        BundleContext::new(self.domain.clone(), FactorSystem::end_bundle(&self.bundle)?)
    }

    /// Smooth compatible reference metric for every built-in construction.
    pub fn canonical_metric(&self) -> Result<MetricField, Error> {
        let values = canonical_values(self.bundle.class_tag(), &self.domain)?;
        Ok(MetricField::new(values, Provenance::Canonical))
    }

    /// Connection coefficient a_z = h^-1 d_z h of the Chern connection.
    pub fn chern_connection(&self, h: &MetricField) -> Result<MatrixField, Error> {
        let r = self.rank();
        let p = pad(h.values(), FieldKind::Metric, &self.seams)?;
        let dzh = crate::field::d_z_padded(&self.domain, &p);
        let n = self.domain.n();
        let mut out = MatrixField::zeros(n, r, r);
        let mut hinv = vec![ZERO; r * r];
        for k in 0..n {
            for j in 0..n {
                let hc = h.values().cell(j, k);
                if !smallmat::inverse(r, hc, &mut hinv) {
                    return Err(Error::InvalidMetric(format!("singular metric at ({j},{k})")));
                }
                smallmat::mul(r, &hinv, dzh.cell(j, k), out.cell_mut(j, k));
            }
        }
        Ok(out)
    }

    /// Curvature coefficient F_{z zbar} = h^-1(d_zbar h) h^-1(d_z h) - h^-1(d_zbar d_z h),
    /// assembled from the metric alone so no multiplier derivatives are needed.
    pub fn curvature(&self, h: &MetricField) -> Result<MatrixField, Error> {
        let r = self.rank();
        let p = pad(h.values(), FieldKind::Metric, &self.seams)?;
        let (dzh, dzbh, dzzh) = curvature_stencils(&self.domain, &p);
        let n = self.domain.n();
        let mut out = MatrixField::zeros(n, r, r);
        let rr = r * r;
        out.data_mut()
            .par_chunks_mut(n * rr)
            .enumerate()
            .for_each(|(k, row)| {
                let mut hinv = vec![ZERO; rr];
                let mut t1 = vec![ZERO; rr];
                let mut t2 = vec![ZERO; rr];
                let mut t3 = vec![ZERO; rr];
                for j in 0..n {
                    let hc = h.values().cell(j, k);
                    if !smallmat::inverse(r, hc, &mut hinv) {
                        row[j * rr..(j + 1) * rr].fill(C64::new(f64::NAN, 0.0));
                        continue;
                    }
                    smallmat::mul(r, &hinv, dzbh.cell(j, k), &mut t1);
                    smallmat::mul(r, &hinv, dzh.cell(j, k), &mut t2);
                    smallmat::mul(r, &t1, &t2, &mut t3);
                    smallmat::mul(r, &hinv, dzzh.cell(j, k), &mut t1);
                    let dst = &mut row[j * rr..(j + 1) * rr];
                    for i in 0..rr {
                        dst[i] = t3[i] - t1[i];
                    }
                }
            });
        Ok(out)
    }

    /// Mean curvature K = sqrt(-1) Lambda_omega F(h) = 2 F_{z zbar},
    /// projected onto its h-Hermitian part. This is the flow's inner loop:
    /// the three stencil gathers and the fiber products are fused into one
    /// pass over the padded metric.
    pub fn mean_curvature(&self, h: &MetricField) -> Result<MatrixField, Error> {
        let r = self.rank();
        let p = pad(h.values(), FieldKind::Metric, &self.seams)?;
        let n = self.domain.n();
        let mut out = MatrixField::zeros(n, r, r);
        let rr = r * r;
        let nf = n as f64;
        let tau = self.domain.tau();
        let (zx, zy) = crate::torus::dz_coeffs(tau);
        let (bx, by) = crate::torus::dzbar_coeffs(tau);
        let (cxx, cyy, cxy) = crate::torus::dzbar_dz_coeffs(tau);
        let need_mixed = cxy.abs() > 1e-300;
        let wzx: Vec<C64> = crate::torus::D1_W.iter().map(|&w| zx * (w * nf)).collect();
        let wzy: Vec<C64> = crate::torus::D1_W.iter().map(|&w| zy * (w * nf)).collect();
        let wbx: Vec<C64> = crate::torus::D1_W.iter().map(|&w| bx * (w * nf)).collect();
        let wby: Vec<C64> = crate::torus::D1_W.iter().map(|&w| by * (w * nf)).collect();
        let wxx: Vec<f64> = crate::torus::D2_W.iter().map(|&w| cxx * w * nf * nf).collect();
        let wyy: Vec<f64> = crate::torus::D2_W.iter().map(|&w| cyy * w * nf * nf).collect();
        let wmix: Vec<f64> = crate::torus::D1_W.iter().map(|&w| w * nf).collect();

        let mut dzh = vec![ZERO; rr];
        let mut dzbh = vec![ZERO; rr];
        let mut dzzh = vec![ZERO; rr];
        let mut hinv = vec![ZERO; rr];
        let mut t1 = vec![ZERO; rr];
        let mut t2 = vec![ZERO; rr];
        let mut kraw = vec![ZERO; rr];
        for k in 0..n {
            for j in 0..n {
                dzh.fill(ZERO);
                dzbh.fill(ZERO);
                dzzh.fill(ZERO);
                for g in 0..5usize {
                    let off = g as isize - 2;
                    let sx = p.cell(j as isize + off, k as isize);
                    let sy = p.cell(j as isize, k as isize + off);
                    let (az, ab, axx) = (wzx[g], wbx[g], wxx[g]);
                    let (cz, cb, cy2) = (wzy[g], wby[g], wyy[g]);
                    if g == 2 {
                        for i in 0..rr {
                            dzzh[i] += axx * sx[i] + cy2 * sy[i];
                        }
                    } else {
                        for i in 0..rr {
                            let vx = sx[i];
                            let vy = sy[i];
                            dzh[i] += az * vx + cz * vy;
                            dzbh[i] += ab * vx + cb * vy;
                            dzzh[i] += axx * vx + cy2 * vy;
                        }
                    }
                }
                if need_mixed {
                    for gx in 0..5usize {
                        if gx == 2 {
                            continue;
                        }
                        for gy in 0..5usize {
                            if gy == 2 {
                                continue;
                            }
                            let w = cxy * wmix[gx] * wmix[gy];
                            let src = p.cell(j as isize + gx as isize - 2, k as isize + gy as isize - 2);
                            for i in 0..rr {
                                dzzh[i] += w * src[i];
                            }
                        }
                    }
                }
                let hc = h.values().cell(j, k);
                let dst = out.cell_mut(j, k);
                if !smallmat::inverse(r, hc, &mut hinv) {
                    dst.fill(C64::new(f64::NAN, 0.0));
                    continue;
                }
                smallmat::mul(r, &hinv, &dzbh, &mut t1);
                smallmat::mul(r, &hinv, &dzh, &mut t2);
                smallmat::mul(r, &t1, &t2, &mut kraw);
                smallmat::mul(r, &hinv, &dzzh, &mut t1);
                for i in 0..rr {
                    kraw[i] = 2.0 * (kraw[i] - t1[i]);
                }
                // K <- (K + h^-1 K^H h)/2 keeps it exactly h-Hermitian.
                smallmat::conjt(r, &kraw, &mut t1);
                smallmat::mul(r, &hinv, &t1, &mut t2);
                smallmat::mul(r, &t2, hc, &mut t1);
                for i in 0..rr {
                    dst[i] = 0.5 * (kraw[i] + t1[i]);
                }
            }
        }
        Ok(out)
    }

    /// Pointwise deviation |K(h) - lambda Id|_h at one cell of a precomputed
    /// mean curvature, measured as the largest eigenvalue magnitude of the
    /// h-Hermitian deviation endomorphism.
    pub(crate) fn deviation_at(r: usize, h_cell: &[C64], k_cell: &[C64], lambda: f64) -> f64 {
        let rr = r * r;
        let mut m = vec![ZERO; rr];
        m.copy_from_slice(k_cell);
        for i in 0..r {
            m[i * r + i] -= C64::new(lambda, 0.0);
        }
        h_hermitian_eigs(r, h_cell, &m)
            .into_iter()
            .map(f64::abs)
            .fold(0.0, f64::max)
    }

    /// Pointwise Hilbert-Schmidt deviation tr(M M^{*h}) at one cell.
    pub(crate) fn hs_deviation_sq_at(r: usize, h_cell: &[C64], k_cell: &[C64], lambda: f64) -> f64 {
        let rr = r * r;
        let mut m = vec![ZERO; rr];
        m.copy_from_slice(k_cell);
        for i in 0..r {
            m[i * r + i] -= C64::new(lambda, 0.0);
        }
        let mut hinv = vec![ZERO; rr];
        if !smallmat::inverse(r, h_cell, &mut hinv) {
            return f64::NAN;
        }
        // tr(M h^-1 M^H h)
        let mut t1 = vec![ZERO; rr];
        let mut t2 = vec![ZERO; rr];
        smallmat::mul_conjt(r, &hinv, &m, &mut t1); // h^-1 M^H
        smallmat::mul(r, &t1, h_cell, &mut t2); // h^-1 M^H h
        smallmat::mul(r, &m, &t2, &mut t1);
        smallmat::trace(r, &t1).re
    }

    /// sup over the grid of |K(h) - lambda Id|_h.
    pub fn sup_deviation(&self, h: &MetricField, lambda: f64) -> Result<f64, Error> {
        let k = self.mean_curvature(h)?;
        Ok(self.sup_deviation_of(h, &k, lambda))
    }

    pub(crate) fn sup_deviation_of(&self, h: &MetricField, k: &MatrixField, lambda: f64) -> f64 {
        let r = self.rank();
        let n = self.domain.n();
        let mut worst = 0.0f64;
        for kk in 0..n {
            for j in 0..n {
                worst = worst.max(Self::deviation_at(r, h.values().cell(j, kk), k.cell(j, kk), lambda));
            }
        }
        worst
    }

    /// L2 norm sqrt(int |K - lambda|^2 dvol) of the pointwise deviation.
    pub fn l2_deviation(&self, h: &MetricField, lambda: f64) -> Result<f64, Error> {
        let k = self.mean_curvature(h)?;
        Ok(self.l2_deviation_of(h, &k, lambda))
    }

    pub(crate) fn l2_deviation_of(&self, h: &MetricField, k: &MatrixField, lambda: f64) -> f64 {
        let r = self.rank();
        let n = self.domain.n();
        let mut acc = 0.0f64;
        for kk in 0..n {
            for j in 0..n {
                let d = Self::deviation_at(r, h.values().cell(j, kk), k.cell(j, kk), lambda);
                acc += d * d;
            }
        }
        (acc * self.domain.cell_area()).sqrt()
    }

    /// Donaldson-functional energy density int |K - lambda|_{h,HS}^2 dvol.
    pub(crate) fn energy_of(&self, h: &MetricField, k: &MatrixField, lambda: f64) -> f64 {
        let r = self.rank();
        let n = self.domain.n();
        let mut acc = 0.0f64;
        for kk in 0..n {
            for j in 0..n {
                acc += Self::hs_deviation_sq_at(r, h.values().cell(j, kk), k.cell(j, kk), lambda);
            }
        }
        acc * self.domain.cell_area()
    }

    /// Chern-Weil degree (1/2 pi) int tr K dvol with slope and the
    /// Hermitian-Einstein constant lambda = 2 pi mu / ((n-1)! vol), n = 1.
    ///
    /// The trace of the mean curvature is evaluated through the determinant
    /// identity tr K = -2 d_zbar d_z log det h on the transported padding.
    /// On that route the periodic part of log det h telescopes out of the
    /// grid sum exactly, so the degree is metric-independent to rounding
    /// rather than to truncation order.
    pub fn degree(&self, h: &MetricField) -> Result<SlopeData, Error> {
        let r = self.rank();
        let p = pad(h.values(), FieldKind::Metric, &self.seams)?;
        let mut bad = false;
        let u = crate::field::map_padded_scalar(&p, |cell| {
            let d = smallmat::det(r, cell).re;
            if d <= 0.0 || !d.is_finite() {
                bad = true;
                return ZERO;
            }
            C64::new(d.ln(), 0.0)
        });
        if bad {
            return Err(Error::InvalidMetric(
                "non-positive determinant in degree computation".into(),
            ));
        }
        let (_, _, ddu) = curvature_stencils(&self.domain, &u);
        let n = self.domain.n();
        let tr = MatrixField::from_fn(n, 1, 1, |j, kk, _, _| -2.0 * ddu.cell(j, kk)[0]);
        let integral = integrate(&self.domain, &tr)?;
        let degree = integral.re / (2.0 * PI);
        let slope = degree / r as f64;
        Ok(SlopeData {
            degree,
            rank: r,
            slope,
            lambda: 2.0 * PI * slope / self.domain.vol(),
        })
    }

    /// Hermitian metric induced on End(E) (matrix-unit basis) or on the
    /// trace-free End0(E) (fixed (E, F, H) basis) by the h-adjoint pairing
    /// <phi, psi> = tr(phi h^-1 psi^* h). This is the unique ordering that
    /// transforms as a metric under the conjugation multipliers of End;
    /// the opposite placement of h and h^-1 picks up |det A|-factors at the
    /// seam and is not globally defined.
    pub fn induce_end_metric(&self, h: &MetricField, trace_free: bool) -> Result<MetricField, Error> {
        let r = self.rank();
        let basis: Vec<Vec<C64>> = if trace_free {
            if r != 2 {
                return Err(Error::Unsupported(
                    "trace-free induced metric requires a rank-2 bundle".into(),
                ));
            }
            if !self.bundle.det_trivial() {
                return Err(Error::Unsupported(
                    "trace-free induced metric requires det-trivial multipliers".into(),
                ));
            }
            sl2_basis().iter().map(|b| b.to_vec()).collect()
        } else {
            let mut units = Vec::with_capacity(r * r);
            for a in 0..r {
                for b in 0..r {
                    let mut m = vec![ZERO; r * r];
                    m[a * r + b] = ONE;
                    units.push(m);
                }
            }
            units
        };
        let dim = basis.len();
        let n = self.domain.n();
        let rr = r * r;
        let mut out = MatrixField::zeros(n, dim, dim);
        let dd = dim * dim;
        out.data_mut()
            .par_chunks_mut(n * dd)
            .enumerate()
            .for_each(|(kk, row)| {
                let mut hinv = vec![ZERO; rr];
                let mut t1 = vec![vec![ZERO; rr]; dim];
                let mut t2 = vec![vec![ZERO; rr]; dim];
                for j in 0..n {
                    let hc = h.values().cell(j, kk);
                    if !smallmat::inverse(r, hc, &mut hinv) {
                        row[j * dd..(j + 1) * dd].fill(C64::new(f64::NAN, 0.0));
                        continue;
                    }
                    for p in 0..dim {
                        smallmat::mul(r, &basis[p], &hinv, &mut t1[p]);
                        smallmat::conjt_mul(r, &basis[p], hc, &mut t2[p]);
                    }
                    let dst = &mut row[j * dd..(j + 1) * dd];
                    for q in 0..dim {
                        for p in 0..dim {
                            // tr(xi_p h^-1 xi_q^H h)
                            let mut acc = ZERO;
                            for a in 0..r {
                                for b in 0..r {
                                    acc += t1[p][a * r + b] * t2[q][b * r + a];
                                }
                            }
                            dst[q * dim + p] = acc;
                        }
                    }
                    smallmat::hermitize(dim, dst);
                }
            });
        Ok(MetricField::new(out, Provenance::Induced))
    }

    /// Multiply h by seeded conformal factors: one periodic real trigonometric
    /// polynomial (modes <= 3) per diagonal block of the construction,
    /// normalized so the largest exponent magnitude equals `amplitude`. With
    /// `det_constrained`, the rank-weighted mean of the exponents is removed
    /// pointwise so det h is preserved exactly.
    pub fn perturb(
        &self,
        h: &MetricField,
        seed: u64,
        amplitude: f64,
        det_constrained: bool,
    ) -> Result<MetricField, Error> {
        if !(0.0..1.0).contains(&amplitude) {
            return Err(Error::InvalidMetric(format!(
                "perturbation amplitude {amplitude} must lie in [0, 1)"
            )));
        }
        if amplitude == 0.0 {
            return Ok(MetricField::new(h.values().clone(), Provenance::Perturbed));
        }
        let blocks = self.bundle.diagonal_blocks();
        let n = self.domain.n();
        let r = self.rank();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);

        // Real trigonometric polynomials per block.
        let mut phi = vec![vec![0.0f64; n * n]; blocks.len()];
        for field in phi.iter_mut() {
            let mut modes = Vec::new();
            for m in 0..=3i32 {
                for p in -3..=3i32 {
                    if m == 0 && p <= 0 {
                        continue;
                    }
                    let a: f64 = rng.gen_range(-1.0..1.0);
                    let b: f64 = rng.gen_range(-1.0..1.0);
                    modes.push((m, p, a, b));
                }
            }
            for k in 0..n {
                for j in 0..n {
                    let x = self.domain.x(j as isize);
                    let y = self.domain.y(k as isize);
                    let mut v = 0.0;
                    for &(m, p, a, b) in &modes {
                        let arg = 2.0 * PI * (m as f64 * x + p as f64 * y);
                        v += a * arg.cos() + b * arg.sin();
                    }
                    field[k * n + j] = v;
                }
            }
        }
        if det_constrained {
            for cell in 0..n * n {
                let mean: f64 = blocks
                    .iter()
                    .zip(phi.iter())
                    .map(|(sz, f)| *sz as f64 * f[cell])
                    .sum::<f64>()
                    / r as f64;
                for f in phi.iter_mut() {
                    f[cell] -= mean;
                }
            }
        }
        let sup = phi
            .iter()
            .flat_map(|f| f.iter())
            .map(|v| v.abs())
            .fold(0.0f64, f64::max);
        if sup > 0.0 {
            let s = amplitude / sup;
            for f in phi.iter_mut() {
                for v in f.iter_mut() {
                    *v *= s;
                }
            }
        }

        // h' = D^{1/2} h D^{1/2} with D = exp(diag-block Phi): Hermitian,
        // positive, and seam-compatible since D commutes with the multipliers.
        let mut out = h.values().clone();
        let mut offsets = Vec::with_capacity(blocks.len());
        let mut acc = 0;
        for sz in &blocks {
            offsets.push(acc);
            acc += sz;
        }
        for k in 0..n {
            for j in 0..n {
                let cell = out.cell_mut(j, k);
                let mut half = vec![0.0f64; r];
                for (bi, (off, sz)) in offsets.iter().zip(blocks.iter()).enumerate() {
                    for idx in 0..*sz {
                        half[off + idx] = (0.5 * phi[bi][k * n + j]).exp();
                    }
                }
                for a in 0..r {
                    for b in 0..r {
                        cell[a * r + b] *= half[a] * half[b];
                    }
                }
            }
        }
        Ok(MetricField::new(out, Provenance::Perturbed))
    }

    /// Hermiticity, positivity and shape validation.
    pub fn validate_metric(&self, h: &MetricField) -> Result<(), Error> {
        let r = self.rank();
        let n = self.domain.n();
        if h.values().n() != n || h.values().rows() != r || h.values().cols() != r {
            return Err(Error::ShapeMismatch(format!(
                "metric shape {}x{} on grid {} does not match bundle rank {r} on grid {n}",
                h.values().rows(),
                h.values().cols(),
                h.values().n()
            )));
        }
        let mut chol = vec![ZERO; r * r];
        for k in 0..n {
            for j in 0..n {
                let cell = h.values().cell(j, k);
                for a in 0..r {
                    for b in 0..r {
                        if (cell[a * r + b] - cell[b * r + a].conj()).norm() > 1e-12 {
                            return Err(Error::InvalidMetric(format!(
                                "non-Hermitian fiber metric at ({j},{k})"
                            )));
                        }
                    }
                }
                if !smallmat::cholesky_lower(r, cell, &mut chol) {
                    return Err(Error::InvalidMetric(format!(
                        "fiber metric not positive definite at ({j},{k})"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Seam compatibility: the transported ghost value must continue the
    /// interior field smoothly. Each ghost cell is compared against 5-point
    /// polynomial extrapolation of the interior; the identical comparison one
    /// row inside (where no transport is involved) serves as the reference
    /// for the local discretization error, since adjacent rows share the same
    /// derivative scale.
    pub fn seam_check(&self, h: &MetricField) -> Result<SeamCheck, Error> {
        let r = self.rank();
        let rr = r * r;
        let n = self.domain.n();
        let p = pad(h.values(), FieldKind::Metric, &self.seams)?;
        // Degree-4 extrapolation: f_5 = 5 f_4 - 10 f_3 + 10 f_2 - 5 f_1 + f_0.
        let wext = [1.0, -5.0, 10.0, -10.0, 5.0];
        let extrap = |cells: [&[C64]; 5], out: &mut [C64]| {
            out.fill(ZERO);
            for (g, w) in wext.iter().enumerate() {
                for i in 0..rr {
                    out[i] += *w * cells[g][i];
                }
            }
        };
        let mut e = vec![ZERO; rr];
        let mut seam = 0.0f64;
        let mut interior = 0.0f64;
        let mut probe = |target: &[C64], cells: [&[C64]; 5], acc: &mut f64| {
            extrap(cells, &mut e);
            let num: f64 = e
                .iter()
                .zip(target.iter())
                .map(|(a, b)| (a - b).norm_sqr())
                .sum::<f64>()
                .sqrt();
            let scale = smallmat::frob_norm(target).max(1e-300);
            *acc = acc.max(num / scale);
        };
        let step = (n / 16).max(1);
        let ni = n as isize;
        for j in (0..ni).step_by(step) {
            // +y ghost and its interior reference.
            probe(
                p.cell(j, ni),
                [p.cell(j, ni - 5), p.cell(j, ni - 4), p.cell(j, ni - 3), p.cell(j, ni - 2), p.cell(j, ni - 1)],
                &mut seam,
            );
            probe(
                p.cell(j, ni - 1),
                [p.cell(j, ni - 6), p.cell(j, ni - 5), p.cell(j, ni - 4), p.cell(j, ni - 3), p.cell(j, ni - 2)],
                &mut interior,
            );
            // -y ghost mirrored.
            probe(
                p.cell(j, -1),
                [p.cell(j, 4), p.cell(j, 3), p.cell(j, 2), p.cell(j, 1), p.cell(j, 0)],
                &mut seam,
            );
            probe(
                p.cell(j, 0),
                [p.cell(j, 5), p.cell(j, 4), p.cell(j, 3), p.cell(j, 2), p.cell(j, 1)],
                &mut interior,
            );
            // x-direction seams.
            probe(
                p.cell(ni, j),
                [p.cell(ni - 5, j), p.cell(ni - 4, j), p.cell(ni - 3, j), p.cell(ni - 2, j), p.cell(ni - 1, j)],
                &mut seam,
            );
            probe(
                p.cell(ni - 1, j),
                [p.cell(ni - 6, j), p.cell(ni - 5, j), p.cell(ni - 4, j), p.cell(ni - 3, j), p.cell(ni - 2, j)],
                &mut interior,
            );
        }
        Ok(SeamCheck {
            seam_residual: seam,
            interior_residual: interior,
        })
    }
}

/// Real eigenvalues of an h-Hermitian endomorphism M, computed from the
/// Hermitian transform L^H M L^-H with h = L L^H.
pub(crate) fn h_hermitian_eigs(r: usize, h_cell: &[C64], m: &[C64]) -> Vec<f64> {
    if r == 1 {
        return vec![m[0].re];
    }
    let rr = r * r;
    let mut l = vec![ZERO; rr];
    if !smallmat::cholesky_lower(r, h_cell, &mut l) {
        return vec![f64::NAN; r];
    }
    let mut linv = vec![ZERO; rr];
    if !smallmat::lower_inverse(r, &l, &mut linv) {
        return vec![f64::NAN; r];
    }
    // C = L^H M (L^H)^-1 = L^H M (L^-1)^H
    let mut w = vec![ZERO; rr];
    smallmat::mul_conjt(r, m, &linv, &mut w);
    let mut cmat = vec![ZERO; rr];
    smallmat::conjt_mul(r, &l, &w, &mut cmat);
    smallmat::hermitize(r, &mut cmat);
    hermitian_eigs(r, &cmat)
}

/// Eigenvalues of a Hermitian matrix (ascending for r <= 2, unsorted above).
pub(crate) fn hermitian_eigs(r: usize, c: &[C64]) -> Vec<f64> {
    match r {
        1 => vec![c[0].re],
        2 => {
            let a = c[0].re;
            let d = c[3].re;
            let off = c[1].norm_sqr();
            let mid = 0.5 * (a + d);
            let disc = (0.25 * (a - d) * (a - d) + off).max(0.0).sqrt();
            vec![mid - disc, mid + disc]
        }
        _ => {
            let m = nalgebra::DMatrix::from_fn(r, r, |i, j| c[i * r + j]);
            m.symmetric_eigen().eigenvalues.iter().cloned().collect()
        }
    }
}

fn canonical_values(tag: &ClassTag, domain: &TorusDomain) -> Result<MatrixField, Error> {
    let n = domain.n();
    let t2 = domain.tau().im;
    match tag {
        ClassTag::Line { degree } => {
            let d = *degree as f64;
            Ok(MatrixField::from_fn(n, 1, 1, |_, k, _, _| {
                let y = domain.y(k as isize);
                C64::new((-2.0 * PI * d * t2 * y * y).exp(), 0.0)
            }))
        }
        ClassTag::Sum(a, b) => {
            let ha = canonical_values(a, domain)?;
            let hb = canonical_values(b, domain)?;
            let (ra, rb) = (ha.rows(), hb.rows());
            let r = ra + rb;
            let mut out = MatrixField::zeros(n, r, r);
            for k in 0..n {
                for j in 0..n {
                    let dst = out.cell_mut(j, k);
                    let ca = ha.cell(j, k);
                    let cb = hb.cell(j, k);
                    for i in 0..ra {
                        for jj in 0..ra {
                            dst[i * r + jj] = ca[i * ra + jj];
                        }
                    }
                    for i in 0..rb {
                        for jj in 0..rb {
                            dst[(ra + i) * r + (ra + jj)] = cb[i * rb + jj];
                        }
                    }
                }
            }
            Ok(out)
        }
        ClassTag::Dual(a) => {
            let ha = canonical_values(a, domain)?;
            let r = ha.rows();
            let mut out = MatrixField::zeros(n, r, r);
            let mut inv = vec![ZERO; r * r];
            for k in 0..n {
                for j in 0..n {
                    if !smallmat::inverse(r, ha.cell(j, k), &mut inv) {
                        return Err(Error::InvalidMetric("singular canonical metric".into()));
                    }
                    let dst = out.cell_mut(j, k);
                    for i in 0..r {
                        for jj in 0..r {
                            dst[i * r + jj] = inv[i * r + jj].conj();
                        }
                    }
                }
            }
            Ok(out)
        }
        ClassTag::Tensor(a, b) => {
            let ha = canonical_values(a, domain)?;
            let hb = canonical_values(b, domain)?;
            let (ra, rb) = (ha.rows(), hb.rows());
            let r = ra * rb;
            let mut out = MatrixField::zeros(n, r, r);
            for k in 0..n {
                for j in 0..n {
                    let dst = out.cell_mut(j, k);
                    let ca = ha.cell(j, k);
                    let cb = hb.cell(j, k);
                    for ia in 0..ra {
                        for ib in 0..rb {
                            for ja in 0..ra {
                                for jb in 0..rb {
                                    dst[(ia * rb + ib) * r + (ja * rb + jb)] =
                                        ca[ia * ra + ja] * cb[ib * rb + jb];
                                }
                            }
                        }
                    }
                }
            }
            Ok(out)
        }
        ClassTag::End(inner) | ClassTag::End0(inner) => {
            // Induced from the canonical metric of the underlying bundle.
            let hb = canonical_values(inner, domain)?;
            induce_values(&hb, matches!(tag, ClassTag::End0(_)))
        }
        ClassTag::Atiyah { rank } => {
            if *rank != 2 {
                return Err(Error::Unsupported(format!(
                    "canonical metric for the rank-{rank} extension tower is not built in"
                )));
            }
            // h = M(y)^* M(y) with M(y) = Id - y N: exactly compatible with
            // the unipotent tau-multiplier and 1-periodic in x, det = 1.
            Ok(MatrixField::from_fn(n, 2, 2, |_, k, row, col| {
                let y = domain.y(k as isize);
                match (row, col) {
                    (0, 0) => ONE,
                    (0, 1) | (1, 0) => C64::new(-y, 0.0),
                    (1, 1) => C64::new(1.0 + y * y, 0.0),
                    _ => unreachable!(),
                }
            }))
        }
        ClassTag::Custom => Err(Error::Unsupported(
            "no canonical metric for custom multiplier systems".into(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::d_zbar;

    fn tau_i() -> C64 {
        C64::new(0.0, 1.0)
    }

    fn ctx(bundle: FactorSystem, n: usize) -> BundleContext {
        BundleContext::new(TorusDomain::new(bundle.tau(), n).unwrap(), bundle).unwrap()
    }

    fn line_ctx(d: i64, n: usize) -> BundleContext {
        ctx(FactorSystem::line(d, tau_i()), n)
    }

    fn sum_ctx(d1: i64, d2: i64, n: usize) -> BundleContext {
        let a = FactorSystem::line(d1, tau_i());
        let b = FactorSystem::line(d2, tau_i());
        ctx(FactorSystem::direct_sum(&a, &b).unwrap(), n)
    }

    #[test]
    fn trivial_bundle_flat() {
        let c = line_ctx(0, 16);
        let h = c.canonical_metric().unwrap();
        c.validate_metric(&h).unwrap();
        let k = c.mean_curvature(&h).unwrap();
        assert!(k.max_cell_frob() < 1e-12);
        assert!(c.sup_deviation(&h, 0.0).unwrap() < 1e-12);
    }

    #[test]
    fn line_bundle_curvature_anchor() {
        // Canonical L_d: F_{z zbar} = pi d, K = 2 pi d on the square torus.
        // The truncation constant grows like (4 pi d)^5, so the tight bound
        // is asserted at |d| = 1 and a scaled one at d = 2.
        for (d, tol) in [(1i64, 5e-4), (-1, 5e-4), (2, 2e-3)] {
            let c = line_ctx(d, 64);
            let h = c.canonical_metric().unwrap();
            c.validate_metric(&h).unwrap();
            let f = c.curvature(&h).unwrap();
            let expect = PI * d as f64;
            let mut worst = 0.0f64;
            for k in 0..64 {
                for j in 0..64 {
                    worst = worst.max((f.cell(j, k)[0] - C64::new(expect, 0.0)).norm());
                }
            }
            assert!(worst < tol, "d={d} F err {worst}");
            let kfld = c.mean_curvature(&h).unwrap();
            let mut worst_k = 0.0f64;
            for k in 0..64 {
                for j in 0..64 {
                    worst_k = worst_k.max((kfld.cell(j, k)[0] - C64::new(2.0 * expect, 0.0)).norm());
                }
            }
            assert!(worst_k < 2.0 * tol, "d={d} K err {worst_k}");
        }
    }

    #[test]
    fn mean_curvature_fourth_order() {
        let err_at = |n: usize| {
            let c = line_ctx(1, n);
            let h = c.canonical_metric().unwrap();
            c.sup_deviation(&h, 2.0 * PI).unwrap()
        };
        let e64 = err_at(64);
        let e128 = err_at(128);
        assert!(e64 < 1e-3, "e64 {e64}");
        assert!(e64 / e128 >= 12.0, "ratio {}", e64 / e128);
    }

    #[test]
    fn general_tau_curvature() {
        // K = 2 pi d / vol on a skewed torus as well.
        let t = C64::new(0.3, 1.4);
        let c = ctx(FactorSystem::line(1, t), 48);
        let h = c.canonical_metric().unwrap();
        let lambda = 2.0 * PI / 1.4;
        let dev = c.sup_deviation(&h, lambda).unwrap();
        assert!(dev < 5e-3, "dev {dev}");
    }

    #[test]
    fn chern_connection_examples() {
        let c = line_ctx(0, 16);
        let h = c.canonical_metric().unwrap();
        let a = c.chern_connection(&h).unwrap();
        assert!(a.max_cell_frob() < 1e-12);

        // L_1 canonical: a_z = d_z(-2 pi y^2) = 2 pi i y.
        let c = line_ctx(1, 64);
        let h = c.canonical_metric().unwrap();
        let a = c.chern_connection(&h).unwrap();
        let mut worst = 0.0f64;
        for k in 0..64 {
            for j in 0..64 {
                let y = c.domain().y(k as isize);
                worst = worst.max((a.cell(j, k)[0] - C64::new(0.0, 2.0 * PI * y)).norm());
            }
        }
        assert!(worst < 1e-3, "a_z err {worst}");
    }

    #[test]
    fn block_metric_block_curvature() {
        let c = sum_ctx(1, -1, 64);
        let h = c.canonical_metric().unwrap();
        let f = c.curvature(&h).unwrap();
        let mut worst = 0.0f64;
        for k in 0..64 {
            for j in 0..64 {
                let cell = f.cell(j, k);
                worst = worst.max((cell[0] - C64::new(PI, 0.0)).norm());
                worst = worst.max((cell[3] - C64::new(-PI, 0.0)).norm());
                worst = worst.max(cell[1].norm()).max(cell[2].norm());
            }
        }
        assert!(worst < 2e-3, "block curvature err {worst}");
    }

    #[test]
    fn conformal_identity() {
        // K(e^phi h) - K(h) = -2 d_z d_zbar phi for scalar periodic phi.
        let n = 64;
        let c = line_ctx(1, n);
        let h = c.canonical_metric().unwrap();
        let phi = MatrixField::from_fn(n, 1, 1, |j, k, _, _| {
            let x = j as f64 / n as f64;
            let y = k as f64 / n as f64;
            C64::new(0.1 * (2.0 * PI * (x + 2.0 * y)).cos(), 0.0)
        });
        let mut hp = h.values().clone();
        for k in 0..n {
            for j in 0..n {
                let f = phi.cell(j, k)[0].re.exp();
                hp.cell_mut(j, k)[0] *= f;
            }
        }
        let hp = MetricField::new(hp, Provenance::Perturbed);
        let k0 = c.mean_curvature(&h).unwrap();
        let k1 = c.mean_curvature(&hp).unwrap();
        // Independent finite-difference oracle for d_z d_zbar phi.
        let seams = SeamTable::trivial(n);
        let dphi = crate::field::d_z(c.domain(), &phi, FieldKind::Scalar, &seams).unwrap();
        let ddphi = d_zbar(c.domain(), &dphi, FieldKind::Scalar, &seams).unwrap();
        let mut worst = 0.0f64;
        for kk in 0..n {
            for j in 0..n {
                let lhs = k1.cell(j, kk)[0] - k0.cell(j, kk)[0];
                let rhs = -2.0 * ddphi.cell(j, kk)[0];
                worst = worst.max((lhs - rhs).norm());
            }
        }
        assert!(worst < 5e-3, "conformal identity err {worst}");
    }

    #[test]
    fn sup_deviation_split_sum_is_2pi() {
        let c = sum_ctx(1, -1, 64);
        let h = c.canonical_metric().unwrap();
        let dev = c.sup_deviation(&h, 0.0).unwrap();
        assert!((dev - 2.0 * PI).abs() < 0.01 * 2.0 * PI, "dev {dev}");
    }

    #[test]
    fn degree_examples() {
        let c = line_ctx(3, 64);
        let h = c.canonical_metric().unwrap();
        let s = c.degree(&h).unwrap();
        assert!((s.degree - 3.0).abs() < 1e-6, "deg {}", s.degree);
        assert!((s.lambda - 6.0 * PI).abs() < 1e-4);
        // Chern-Weil independence under perturbation.
        let hp = c.perturb(&h, 11, 0.4, false).unwrap();
        let sp = c.degree(&hp).unwrap();
        assert!((sp.degree - s.degree).abs() < 1e-6, "drift {}", (sp.degree - s.degree).abs());

        // Dual inverts degree.
        let cd = ctx(FactorSystem::dual(&FactorSystem::line(2, tau_i())).unwrap(), 64);
        let hd = cd.canonical_metric().unwrap();
        assert!((cd.degree(&hd).unwrap().degree + 2.0).abs() < 1e-6);

        // deg(end0(F2)) = 0.
        let f2 = FactorSystem::atiyah_f2(tau_i());
        let ce = ctx(FactorSystem::end0_bundle(&f2).unwrap(), 64);
        let he = ce.canonical_metric().unwrap();
        assert!(ce.degree(&he).unwrap().degree.abs() < 1e-6);

        // Volume scaling: on tau = 2i the line bundle still has integer degree.
        let c2 = ctx(FactorSystem::line(2, C64::new(0.0, 2.0)), 64);
        let h2 = c2.canonical_metric().unwrap();
        let s2 = c2.degree(&h2).unwrap();
        assert!((s2.degree - 2.0).abs() < 1e-6);
        assert!((s2.lambda - 2.0 * PI * 2.0 / 2.0).abs() < 1e-4);
    }

    #[test]
    fn induced_metric_identity_gram() {
        let c = sum_ctx(0, 0, 16);
        let h = c.canonical_metric().unwrap(); // identity metric
        let g = c.induce_end_metric(&h, true).unwrap();
        for k in 0..16 {
            for j in 0..16 {
                let cell = g.values().cell(j, k);
                let expect = [1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 2.0];
                for (i, e) in expect.iter().enumerate() {
                    assert!((cell[i] - C64::new(*e, 0.0)).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn induced_metric_det_constant_and_scale_invariant() {
        let c = ctx(FactorSystem::atiyah_f2(tau_i()), 32);
        let h = c.canonical_metric().unwrap();
        let g = c.induce_end_metric(&h, true).unwrap();
        let mut min_det = f64::INFINITY;
        let mut max_det = f64::NEG_INFINITY;
        for k in 0..32 {
            for j in 0..32 {
                let d = smallmat::det(3, g.values().cell(j, k)).re;
                min_det = min_det.min(d);
                max_det = max_det.max(d);
            }
        }
        assert!(max_det - min_det < 1e-8, "det drift {}", max_det - min_det);

        // Scaling h -> c h leaves the induced metric unchanged.
        let mut hs = h.values().clone();
        for v in hs.data_mut() {
            *v *= 3.7;
        }
        let hs = MetricField::new(hs, Provenance::Perturbed);
        let gs = c.induce_end_metric(&hs, true).unwrap();
        assert!(g.values().max_diff(gs.values()) < 1e-12);
    }

    #[test]
    fn perturb_contracts() {
        let c = sum_ctx(1, -1, 32);
        let h = c.canonical_metric().unwrap();
        // amplitude 0: unchanged
        let p0 = c.perturb(&h, 7, 0.0, false).unwrap();
        assert!(h.values().max_diff(p0.values()) == 0.0);
        // determinism
        let p1 = c.perturb(&h, 7, 0.3, false).unwrap();
        let p2 = c.perturb(&h, 7, 0.3, false).unwrap();
        assert!(p1.values().max_diff(p2.values()) == 0.0);
        let p3 = c.perturb(&h, 8, 0.3, false).unwrap();
        assert!(p1.values().max_diff(p3.values()) > 1e-6);
        // det-constrained balance
        let pd = c.perturb(&h, 9, 0.3, true).unwrap();
        for k in 0..32 {
            for j in 0..32 {
                let d0 = smallmat::det(2, h.values().cell(j, k));
                let d1 = smallmat::det(2, pd.values().cell(j, k));
                assert!((d1 / d0 - ONE).norm() < 1e-12);
            }
        }
        // perturbed metrics stay valid and seam-compatible
        c.validate_metric(&p1).unwrap();
        assert!(c.seam_check(&p1).unwrap().compatible());
    }

    #[test]
    fn atiyah_canonical_compatible_identity_not() {
        let c = ctx(FactorSystem::atiyah_f2(tau_i()), 32);
        let h = c.canonical_metric().unwrap();
        c.validate_metric(&h).unwrap();
        let check = c.seam_check(&h).unwrap();
        assert!(check.compatible(), "canonical F2 flagged: {check:?}");
        // det h = 1 exactly
        for k in 0..32 {
            for j in 0..32 {
                assert!((smallmat::det(2, h.values().cell(j, k)) - ONE).norm() < 1e-12);
            }
        }
        // h = Id is NOT compatible with the unipotent multiplier.
        let id = MetricField::new(MatrixField::identity(32, 2), Provenance::Canonical);
        let bad = c.seam_check(&id).unwrap();
        assert!(!bad.compatible(), "identity metric passed: {bad:?}");
    }

    #[test]
    fn curvature_gauge_covariance_under_shift() {
        // Curvature computed on a shifted fundamental domain agrees with the
        // transported curvature of the original chart.
        let c = ctx(FactorSystem::atiyah_f2(tau_i()), 32);
        let h = c.canonical_metric().unwrap();
        let k0 = c.mean_curvature(&h).unwrap();
        let n = 32;
        let s = 5usize; // shift in y-cells
        let b = c.bundle();
        // Build the shifted metric field.
        let mut hs = MatrixField::zeros(n, 2, 2);
        for k in 0..n {
            for j in 0..n {
                let src_k = k + s;
                let v = if src_k < n {
                    h.values().cell(j, src_k).to_vec()
                } else {
                    let z = c.domain().point(j as isize, (src_k - n) as isize);
                    b.transport(
                        crate::bundle::LatticeDir::Tau,
                        z,
                        h.values().cell(j, src_k - n),
                        FieldKind::Metric,
                        true,
                    )
                    .unwrap()
                };
                hs.cell_mut(j, k).copy_from_slice(&v);
            }
        }
        let hs = MetricField::new(hs, Provenance::Perturbed);
        let ks = c.mean_curvature(&hs).unwrap();
        let mut worst = 0.0f64;
        for k in 0..n {
            for j in 0..n {
                let src_k = k + s;
                let expect = if src_k < n {
                    k0.cell(j, src_k).to_vec()
                } else {
                    let z = c.domain().point(j as isize, (src_k - n) as isize);
                    b.transport(
                        crate::bundle::LatticeDir::Tau,
                        z,
                        k0.cell(j, src_k - n),
                        FieldKind::Endomorphism,
                        true,
                    )
                    .unwrap()
                };
                for (a, e) in ks.cell(j, k).iter().zip(expect.iter()) {
                    worst = worst.max((a - e).norm());
                }
            }
        }
        assert!(worst < 1e-8, "gauge covariance err {worst}");
    }

    #[test]
    fn hs_norm_scale_invariance() {
        // |M|_{c h} = |M|_h exactly: h and h^-1 cancel.
        let c = ctx(FactorSystem::atiyah_f2(tau_i()), 16);
        let h = c.canonical_metric().unwrap();
        let k = c.mean_curvature(&h).unwrap();
        let cell = (3usize, 7usize);
        let hc = h.values().cell(cell.0, cell.1);
        let kc = k.cell(cell.0, cell.1);
        let a = BundleContext::hs_deviation_sq_at(2, hc, kc, 0.0);
        let scaled: Vec<C64> = hc.iter().map(|v| v * 5.0).collect();
        let b = BundleContext::hs_deviation_sq_at(2, &scaled, kc, 0.0);
        assert!((a - b).abs() < 1e-13 * a.abs().max(1.0));
        // And the operator-norm deviation likewise.
        let da = BundleContext::deviation_at(2, hc, kc, 0.0);
        let db = BundleContext::deviation_at(2, &scaled, kc, 0.0);
        assert!((da - db).abs() < 1e-12);
    }
}

/// Standalone induced-metric computation on raw values (used by canonical
/// construction for End/End0 tags where no context exists yet).
fn induce_values(h: &MatrixField, trace_free: bool) -> Result<MatrixField, Error> {
    let r = h.rows();
    let n = h.n();
    let basis: Vec<Vec<C64>> = if trace_free {
        if r != 2 {
            return Err(Error::Unsupported("trace-free induction needs rank 2".into()));
        }
        sl2_basis().iter().map(|b| b.to_vec()).collect()
    } else {
        let mut units = Vec::with_capacity(r * r);
        for a in 0..r {
            for b in 0..r {
                let mut m = vec![ZERO; r * r];
                m[a * r + b] = ONE;
                units.push(m);
            }
        }
        units
    };
    let dim = basis.len();
    let mut out = MatrixField::zeros(n, dim, dim);
    let rr = r * r;
    let mut hinv = vec![ZERO; rr];
    let mut t1 = vec![vec![ZERO; rr]; dim];
    let mut t2 = vec![vec![ZERO; rr]; dim];
    for k in 0..n {
        for j in 0..n {
            let hc = h.cell(j, k);
            if !smallmat::inverse(r, hc, &mut hinv) {
                return Err(Error::InvalidMetric("singular metric in induction".into()));
            }
            for p in 0..dim {
                smallmat::mul(r, &basis[p], &hinv, &mut t1[p]);
                smallmat::conjt_mul(r, &basis[p], hc, &mut t2[p]);
            }
            let dst = out.cell_mut(j, k);
            for q in 0..dim {
                for p in 0..dim {
                    let mut acc = ZERO;
                    for a in 0..r {
                        for b in 0..r {
                            acc += t1[p][a * r + b] * t2[q][b * r + a];
                        }
                    }
                    dst[q * dim + p] = acc;
                }
            }
            smallmat::hermitize(dim, dst);
        }
    }
    Ok(out)
}
