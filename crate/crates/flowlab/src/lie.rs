//! The Lie-algebra layer for G = SL(2, C): structure constants, the Killing
//! form, the adjoint representation, and the isometry constant c0 of the
//! adjoint map with respect to a chosen invariant metric on the algebra.
//!
//! The trace-free basis (E, F, H) is shared with the bundle layer; the
//! default invariant metric is <xi, eta> = tr(xi eta^*), the compact real
//! form metric, for which c0 = 2.

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bundle::sl2_basis;
use crate::error::Error;
use crate::metric::BundleContext;
use crate::smallmat;

const ZERO: C64 = C64::new(0.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupName {
    Sl2,
    TorusFactor,
}

/// Structure group descriptor at the level the artifact distinguishes:
/// the semisimple SL(2, C) case and the torus factor C^*.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GroupDescriptor {
    pub name: GroupName,
    pub center_dim: usize,
}

impl GroupDescriptor {
    pub fn sl2() -> Self {
        GroupDescriptor {
            name: GroupName::Sl2,
            center_dim: 0,
        }
    }

    pub fn torus_factor() -> Self {
        GroupDescriptor {
            name: GroupName::TorusFactor,
            center_dim: 1,
        }
    }
}

/// sl(2, C) with a fixed trace-free basis and an invariant Hermitian metric.
#[derive(Debug, Clone)]
pub struct LieStructure {
    basis: [[C64; 4]; 3],
    structure_constants: [[[C64; 3]; 3]; 3],
    inner: [C64; 9],
    killing: [C64; 9],
}

/// Coordinates of a trace-free 2x2 matrix in the (E, F, H) basis.
pub fn trace_free_coords(m: &[C64]) -> Result<[C64; 3], Error> {
    let tr = m[0] + m[3];
    if tr.norm() > 1e-10 * (smallmat::frob_norm(m).max(1.0)) {
        return Err(Error::Lie(format!("matrix has trace {tr}, not trace-free")));
    }
    Ok([m[1], m[2], m[0]])
}

impl LieStructure {
    pub fn sl2() -> Self {
        Self::sl2_with_inner_gram(&[
            C64::new(1.0, 0.0),
            ZERO,
            ZERO,
            ZERO,
            C64::new(1.0, 0.0),
            ZERO,
            ZERO,
            ZERO,
            C64::new(2.0, 0.0),
        ])
    }

    /// Same algebra with the default metric scaled by a positive factor.
    pub fn sl2_scaled(scale: f64) -> Self {
        let mut base = Self::sl2();
        for v in base.inner.iter_mut() {
            *v *= scale;
        }
        base
    }

    /// sl(2) with an arbitrary Hermitian Gram matrix on (E, F, H); the c0
    /// computation rejects metrics that are not ad-invariant.
    pub fn sl2_with_inner_gram(gram: &[C64; 9]) -> Self {
        let basis = sl2_basis();
        // Structure constants from the brackets of the basis.
        let mut sc = [[[ZERO; 3]; 3]; 3];
        let mut t1 = [ZERO; 4];
        let mut t2 = [ZERO; 4];
        for i in 0..3 {
            for j in 0..3 {
                smallmat::mul(2, &basis[i], &basis[j], &mut t1);
                smallmat::mul(2, &basis[j], &basis[i], &mut t2);
                let bracket = [t1[0] - t2[0], t1[1] - t2[1], t1[2] - t2[2], t1[3] - t2[3]];
                let coords = trace_free_coords(&bracket).expect("bracket stays trace-free");
                for (k, c) in coords.iter().enumerate() {
                    sc[k][i][j] = *c;
                }
            }
        }
        let mut lie = LieStructure {
            basis,
            structure_constants: sc,
            inner: *gram,
            killing: [ZERO; 9],
        };
        // Killing Gram B(xi_p, xi_q) = tr(ad xi_p . ad xi_q).
        let ads: Vec<[C64; 9]> = (0..3).map(|p| lie.ad_of_basis(p)).collect();
        let mut prod = [ZERO; 9];
        for p in 0..3 {
            for q in 0..3 {
                smallmat::mul(3, &ads[p], &ads[q], &mut prod);
                lie.killing[p * 3 + q] = smallmat::trace(3, &prod);
            }
        }
        lie
    }

    pub fn basis(&self) -> &[[C64; 4]; 3] {
        &self.basis
    }

    pub fn structure_constants(&self) -> &[[[C64; 3]; 3]; 3] {
        &self.structure_constants
    }

    pub fn inner_gram(&self) -> &[C64; 9] {
        &self.inner
    }

    pub fn killing_gram(&self) -> &[C64; 9] {
        &self.killing
    }

    fn ad_of_basis(&self, p: usize) -> [C64; 9] {
        let mut out = [ZERO; 9];
        for q in 0..3 {
            for k in 0..3 {
                out[k * 3 + q] = self.structure_constants[k][p][q];
            }
        }
        out
    }

    /// Matrix of ad(xi) = [xi, .] in the fixed basis, for trace-free xi.
    pub fn ad_map(&self, xi: &[C64]) -> Result<[C64; 9], Error> {
        let coords = trace_free_coords(xi)?;
        let mut out = [ZERO; 9];
        for (p, c) in coords.iter().enumerate() {
            let adp = self.ad_of_basis(p);
            for i in 0..9 {
                out[i] += c * adp[i];
            }
        }
        Ok(out)
    }

    /// The three basis images ad(E), ad(F), ad(H).
    pub fn ad_basis(&self) -> [[C64; 9]; 3] {
        [self.ad_of_basis(0), self.ad_of_basis(1), self.ad_of_basis(2)]
    }

    /// Adjoint representation Ad(g) xi = g xi g^-1 as a 3x3 matrix.
    pub fn adjoint_rep(&self, g: &[C64]) -> Result<[C64; 9], Error> {
        let mut ginv = [ZERO; 4];
        if !smallmat::inverse(2, g, &mut ginv) {
            return Err(Error::Lie("singular group element".into()));
        }
        let mut out = [ZERO; 9];
        let mut t1 = [ZERO; 4];
        let mut t2 = [ZERO; 4];
        for q in 0..3 {
            smallmat::mul(2, g, &self.basis[q], &mut t1);
            smallmat::mul(2, &t1, &ginv, &mut t2);
            let coords = trace_free_coords(&t2)?;
            for k in 0..3 {
                out[k * 3 + q] = coords[k];
            }
        }
        Ok(out)
    }

    /// Max Jacobi identity residual over basis triples.
    pub fn jacobi_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        let mut t1 = [ZERO; 4];
        let mut t2 = [ZERO; 4];
        let bracket = |a: &[C64; 4], b: &[C64; 4], t1: &mut [C64; 4], t2: &mut [C64; 4]| -> [C64; 4] {
            smallmat::mul(2, a, b, t1);
            smallmat::mul(2, b, a, t2);
            [t1[0] - t2[0], t1[1] - t2[1], t1[2] - t2[2], t1[3] - t2[3]]
        };
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    let ab = bracket(&self.basis[i], &self.basis[j], &mut t1, &mut t2);
                    let abc = bracket(&ab, &self.basis[k], &mut t1, &mut t2);
                    let bc = bracket(&self.basis[j], &self.basis[k], &mut t1, &mut t2);
                    let bca = bracket(&bc, &self.basis[i], &mut t1, &mut t2);
                    let ca = bracket(&self.basis[k], &self.basis[i], &mut t1, &mut t2);
                    let cab = bracket(&ca, &self.basis[j], &mut t1, &mut t2);
                    let res: f64 = (0..4)
                        .map(|e| (abc[e] + bca[e] + cab[e]).norm_sqr())
                        .sum::<f64>()
                        .sqrt();
                    worst = worst.max(res);
                }
            }
        }
        worst
    }

    pub fn killing_nondegenerate(&self) -> bool {
        smallmat::det(3, &self.killing).norm() > 1e-8
    }

    /// Squared metric length |xi|^2 = v^H S v of a coordinate vector.
    pub fn vec_norm_sq(&self, coords: &[C64; 3]) -> f64 {
        let mut acc = ZERO;
        for q in 0..3 {
            for p in 0..3 {
                acc += coords[q].conj() * self.inner[q * 3 + p] * coords[p];
            }
        }
        acc.re
    }

    /// Squared Hilbert-Schmidt norm tr(T S^-1 T^H S) of an operator on the
    /// algebra with respect to the inner metric.
    pub fn op_hs_norm_sq(&self, t: &[C64; 9]) -> f64 {
        let mut sinv = [ZERO; 9];
        if !smallmat::inverse(3, &self.inner, &mut sinv) {
            return f64::NAN;
        }
        let mut w1 = [ZERO; 9];
        let mut w2 = [ZERO; 9];
        smallmat::mul(3, t, &sinv, &mut w1);
        smallmat::mul_conjt(3, &w1, t, &mut w2);
        smallmat::mul(3, &w2, &self.inner, &mut w1);
        smallmat::trace(3, &w1).re
    }

    /// The constant c0 > 0 with |ad(xi)|_HS = c0 |xi| for all xi, verified on
    /// the basis and 100 seeded random elements. A non-constant ratio (inner
    /// metric not invariant, or degenerate) is an error, not a value.
    pub fn c0_constant(&self) -> Result<f64, Error> {
        let mut chol = [ZERO; 9];
        if !smallmat::cholesky_lower(3, &self.inner, &mut chol) {
            return Err(Error::Lie(
                "inner metric is not Hermitian positive definite".into(),
            ));
        }
        let mut ratios = Vec::with_capacity(103);
        let mut push_ratio = |coords: [C64; 3]| -> Result<(), Error> {
            let mut xi = [ZERO; 4];
            for (p, c) in coords.iter().enumerate() {
                for e in 0..4 {
                    xi[e] += c * self.basis[p][e];
                }
            }
            let t = self.ad_map(&xi)?;
            let num = self.op_hs_norm_sq(&t);
            let den = self.vec_norm_sq(&coords);
            if den <= 0.0 {
                return Err(Error::Lie("degenerate direction in c0 computation".into()));
            }
            ratios.push(num / den);
            Ok(())
        };
        push_ratio([C64::new(1.0, 0.0), ZERO, ZERO])?;
        push_ratio([ZERO, C64::new(1.0, 0.0), ZERO])?;
        push_ratio([ZERO, ZERO, C64::new(1.0, 0.0)])?;
        let mut rng = ChaCha8Rng::seed_from_u64(0xC0);
        for _ in 0..100 {
            let mut coords = [ZERO; 3];
            for c in coords.iter_mut() {
                *c = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            }
            push_ratio(coords)?;
        }
        let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mid = 0.5 * (lo + hi);
        if (hi - lo) > 1e-10 * mid.abs().max(1e-300) {
            return Err(Error::Lie(format!(
                "adjoint map is not a homothety for this metric: ratio spread [{lo}, {hi}]"
            )));
        }
        Ok(mid.sqrt())
    }
}

/// The central element lambda of the flow: zero for the semisimple SL(2)
/// case, and 2 pi mu / vol for the torus factor, computed from the degree of
/// the bundle's canonical metric.
pub fn center_constant(group: &GroupDescriptor, ctx: &BundleContext) -> Result<f64, Error> {
    match group.name {
        GroupName::Sl2 => {
            if !ctx.bundle().det_trivial() {
                return Err(Error::Incompatible(
                    "SL(2) structure group requires det-trivial multipliers".into(),
                ));
            }
            Ok(0.0)
        }
        GroupName::TorusFactor => {
            let h = ctx.canonical_metric()?;
            Ok(ctx.degree(&h)?.lambda)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundle::FactorSystem;
    use crate::torus::TorusDomain;
    use std::f64::consts::PI;

    #[test]
    fn ad_map_on_basis() {
        let lie = LieStructure::sl2();
        let basis = *lie.basis();
        // ad(H) = diag(2, -2, 0) on (E, F, H).
        let adh = lie.ad_map(&basis[2]).unwrap();
        let expect = [2.0, 0.0, 0.0, 0.0, -2.0, 0.0, 0.0, 0.0, 0.0];
        for (a, e) in adh.iter().zip(expect.iter()) {
            assert!((a - C64::new(*e, 0.0)).norm() < 1e-14);
        }
        // [E, F] = H: the F-column of ad(E) is the H coordinate vector,
        // and [E, H] = -2E fills the H-column.
        let ade = lie.ad_map(&basis[0]).unwrap();
        assert!((ade[2 * 3 + 1] - C64::new(1.0, 0.0)).norm() < 1e-14);
        assert!(ade[1].norm() < 1e-14);
        assert!((ade[2] - C64::new(-2.0, 0.0)).norm() < 1e-14);
        // Zero maps to zero.
        let z = [ZERO; 4];
        assert!(lie.ad_map(&z).unwrap().iter().all(|v| v.norm() == 0.0));
        // Non-trace-free input is rejected.
        let bad = [C64::new(1.0, 0.0), ZERO, ZERO, C64::new(1.0, 0.0)];
        assert!(lie.ad_map(&bad).is_err());
    }

    #[test]
    fn jacobi_and_killing() {
        let lie = LieStructure::sl2();
        assert!(lie.jacobi_residual() < 1e-14);
        assert!(lie.killing_nondegenerate());
        let k = lie.killing_gram();
        let expect = [0.0, 4.0, 0.0, 4.0, 0.0, 0.0, 0.0, 0.0, 8.0];
        for (a, e) in k.iter().zip(expect.iter()) {
            assert!((a - C64::new(*e, 0.0)).norm() < 1e-12);
        }
        // |det| of the Killing Gram is 128 here, comfortably nondegenerate.
        assert!((smallmat::det(3, k).norm() - 128.0).abs() < 1e-9);
    }

    #[test]
    fn adjoint_rep_is_homomorphism() {
        let lie = LieStructure::sl2();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let mut random_sl2 = || -> [C64; 4] {
            let a = C64::new(rng.gen_range(0.5..1.5), rng.gen_range(-0.5..0.5));
            let b = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let c = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let d = (C64::new(1.0, 0.0) + b * c) / a;
            [a, b, c, d]
        };
        for _ in 0..20 {
            let g1 = random_sl2();
            let g2 = random_sl2();
            let mut g12 = [ZERO; 4];
            smallmat::mul(2, &g1, &g2, &mut g12);
            let lhs = lie.adjoint_rep(&g12).unwrap();
            let a1 = lie.adjoint_rep(&g1).unwrap();
            let a2 = lie.adjoint_rep(&g2).unwrap();
            let mut rhs = [ZERO; 9];
            smallmat::mul(3, &a1, &a2, &mut rhs);
            let scale = smallmat::frob_norm(&rhs).max(1.0);
            for (l, r) in lhs.iter().zip(rhs.iter()) {
                assert!((l - r).norm() < 1e-10 * scale);
            }
        }
    }

    #[test]
    fn killing_antisymmetry_of_ad() {
        // B(ad(xi) eta, zeta) + B(eta, ad(xi) zeta) = 0.
        let lie = LieStructure::sl2();
        let ads = lie.ad_basis();
        let b = lie.killing_gram();
        for ad in ads.iter() {
            // ad^T B + B ad = 0 in coordinates.
            let mut t1 = [ZERO; 9];
            let mut t2 = [ZERO; 9];
            // t1 = ad^T B
            for i in 0..3 {
                for j in 0..3 {
                    let mut acc = ZERO;
                    for k in 0..3 {
                        acc += ad[k * 3 + i] * b[k * 3 + j];
                    }
                    t1[i * 3 + j] = acc;
                }
            }
            smallmat::mul(3, b, ad, &mut t2);
            for e in 0..9 {
                assert!((t1[e] + t2[e]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn c0_examples() {
        // tr(xi eta^*) gives c0 = 2: |ad H|^2 = 8 against |H|^2 = 2 and the
        // same ratio 4 in every direction.
        let lie = LieStructure::sl2();
        let c0 = lie.c0_constant().unwrap();
        assert!((c0 - 2.0).abs() < 1e-12, "c0 = {c0}");
        // Scaling the metric by 4 scales c0 to 1.
        let scaled = LieStructure::sl2_scaled(4.0);
        let c0s = scaled.c0_constant().unwrap();
        assert!((c0s - 1.0).abs() < 1e-12, "c0 scaled = {c0s}");
        // A degenerate metric errors.
        let mut degenerate = [ZERO; 9];
        degenerate[0] = C64::new(1.0, 0.0);
        degenerate[4] = C64::new(1.0, 0.0);
        assert!(LieStructure::sl2_with_inner_gram(&degenerate)
            .c0_constant()
            .is_err());
        // A non-invariant metric has a direction-dependent ratio: error.
        let mut skew = [ZERO; 9];
        skew[0] = C64::new(1.0, 0.0);
        skew[4] = C64::new(1.0, 0.0);
        skew[8] = C64::new(5.0, 0.0);
        assert!(LieStructure::sl2_with_inner_gram(&skew).c0_constant().is_err());
    }

    #[test]
    fn center_constants() {
        let tau = C64::new(0.0, 1.0);
        let f2 = FactorSystem::atiyah_f2(tau);
        let ctx = BundleContext::new(TorusDomain::new(tau, 16).unwrap(), f2).unwrap();
        assert_eq!(center_constant(&GroupDescriptor::sl2(), &ctx).unwrap(), 0.0);

        let l3 = FactorSystem::line(3, tau);
        let ctx3 = BundleContext::new(TorusDomain::new(tau, 32).unwrap(), l3).unwrap();
        let lam = center_constant(&GroupDescriptor::torus_factor(), &ctx3).unwrap();
        assert!((lam - 6.0 * PI).abs() < 1e-6, "lambda {lam}");

        let l0 = FactorSystem::line(0, tau);
        let ctx0 = BundleContext::new(TorusDomain::new(tau, 32).unwrap(), l0).unwrap();
        let lam0 = center_constant(&GroupDescriptor::torus_factor(), &ctx0).unwrap();
        assert!(lam0.abs() < 1e-9);

        // SL(2) on a non-det-trivial bundle is rejected.
        let l1 = FactorSystem::line(1, tau);
        let ctx1 = BundleContext::new(TorusDomain::new(tau, 16).unwrap(), l1).unwrap();
        assert!(center_constant(&GroupDescriptor::sl2(), &ctx1).is_err());
        assert_eq!(GroupDescriptor::sl2().center_dim, 0);
        assert_eq!(GroupDescriptor::torus_factor().center_dim, 1);
    }
}
