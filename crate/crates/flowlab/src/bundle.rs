//! Holomorphic bundles on the torus presented by factors of automorphy.
//!
//! A bundle of rank r is the data of two r x r multiplier matrices A_1(z),
//! A_tau(z) with sections transforming as s(z + l) = A_l(z) s(z). The
//! built-in constructions (line bundles, sums, duals, tensors, End, trace-free
//! End, and the rank-2 unipotent extension) all carry their inverse-transpose
//! multipliers alongside, so duals are exact involutions.

use num_complex::Complex64 as C64;
use std::f64::consts::PI;

use crate::error::Error;
use crate::expr::AnalyticExpr;
use crate::field::{FieldKind, SeamTable};
use crate::smallmat;
use crate::torus::TorusDomain;

/// Square matrix of closed-form expressions.
#[derive(Debug, Clone, PartialEq)]
pub struct ExprMat {
    rank: usize,
    entries: Vec<AnalyticExpr>,
}

impl ExprMat {
    pub fn identity(rank: usize) -> Self {
        let mut entries = vec![AnalyticExpr::zero(); rank * rank];
        for i in 0..rank {
            entries[i * rank + i] = AnalyticExpr::one();
        }
        ExprMat { rank, entries }
    }

    pub fn from_entries(rank: usize, entries: Vec<AnalyticExpr>) -> Result<Self, Error> {
        if entries.len() != rank * rank {
            return Err(Error::ShapeMismatch(format!(
                "{} entries for rank {rank} multiplier",
                entries.len()
            )));
        }
        Ok(ExprMat { rank, entries })
    }

    pub fn scalar(e: AnalyticExpr) -> Self {
        ExprMat {
            rank: 1,
            entries: vec![e],
        }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn entry(&self, i: usize, j: usize) -> &AnalyticExpr {
        &self.entries[i * self.rank + j]
    }

    pub fn eval(&self, z: C64) -> Vec<C64> {
        self.entries.iter().map(|e| e.eval(z)).collect()
    }

    pub fn block_diag(a: &ExprMat, b: &ExprMat) -> ExprMat {
        let rank = a.rank + b.rank;
        let mut entries = vec![AnalyticExpr::zero(); rank * rank];
        for i in 0..a.rank {
            for j in 0..a.rank {
                entries[i * rank + j] = a.entry(i, j).clone();
            }
        }
        for i in 0..b.rank {
            for j in 0..b.rank {
                entries[(a.rank + i) * rank + (a.rank + j)] = b.entry(i, j).clone();
            }
        }
        ExprMat { rank, entries }
    }

    pub fn kron(a: &ExprMat, b: &ExprMat) -> ExprMat {
        let rank = a.rank * b.rank;
        let mut entries = vec![AnalyticExpr::zero(); rank * rank];
        for ia in 0..a.rank {
            for ib in 0..b.rank {
                for ja in 0..a.rank {
                    for jb in 0..b.rank {
                        let row = ia * b.rank + ib;
                        let col = ja * b.rank + jb;
                        entries[row * rank + col] =
                            a.entry(ia, ja).clone().mul(b.entry(ib, jb).clone());
                    }
                }
            }
        }
        ExprMat { rank, entries }
    }

    pub fn transpose(&self) -> ExprMat {
        let mut entries = vec![AnalyticExpr::zero(); self.rank * self.rank];
        for i in 0..self.rank {
            for j in 0..self.rank {
                entries[j * self.rank + i] = self.entry(i, j).clone();
            }
        }
        ExprMat {
            rank: self.rank,
            entries,
        }
    }
}

/// Construction descriptor; the stability oracle classifies bundles by it.
#[derive(Debug, Clone, PartialEq)]
pub enum ClassTag {
    Line { degree: i64 },
    Sum(Box<ClassTag>, Box<ClassTag>),
    Dual(Box<ClassTag>),
    Tensor(Box<ClassTag>, Box<ClassTag>),
    End(Box<ClassTag>),
    End0(Box<ClassTag>),
    Atiyah { rank: u32 },
    Custom,
}

impl ClassTag {
    pub fn rank(&self) -> usize {
        match self {
            ClassTag::Line { .. } => 1,
            ClassTag::Sum(a, b) => a.rank() + b.rank(),
            ClassTag::Dual(a) => a.rank(),
            ClassTag::Tensor(a, b) => a.rank() * b.rank(),
            ClassTag::End(a) => a.rank() * a.rank(),
            ClassTag::End0(a) => a.rank() * a.rank() - 1,
            ClassTag::Atiyah { rank } => *rank as usize,
            ClassTag::Custom => 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LatticeDir {
    One,
    Tau,
}

/// Holomorphic bundle presented by factors of automorphy over C/(Z + tau Z).
#[derive(Debug, Clone)]
pub struct FactorSystem {
    tau: C64,
    rank: usize,
    a1: ExprMat,
    atau: ExprMat,
    a1_invt: Option<ExprMat>,
    atau_invt: Option<ExprMat>,
    class_tag: ClassTag,
    det_trivial: bool,
}

/// Deterministic sample points used for cocycle and determinant checks.
pub(crate) fn sample_points(tau: C64) -> Vec<C64> {
    const PHI: f64 = 0.618_033_988_749_894_9;
    (0..32)
        .map(|i| {
            let x = (0.05 + i as f64 * PHI).fract();
            let y = (0.15 + i as f64 * PHI * PHI).fract();
            C64::new(x, 0.0) + tau * y
        })
        .collect()
}

impl FactorSystem {
    fn assemble(
        tau: C64,
        a1: ExprMat,
        atau: ExprMat,
        a1_invt: Option<ExprMat>,
        atau_invt: Option<ExprMat>,
        class_tag: ClassTag,
    ) -> Self {
        let rank = a1.rank();
        let det_trivial = {
            let mut ok = true;
            for z in sample_points(tau) {
                let d1 = smallmat::det(rank, &a1.eval(z));
                let dt = smallmat::det(rank, &atau.eval(z));
                if (d1 - C64::new(1.0, 0.0)).norm() > 1e-10
                    || (dt - C64::new(1.0, 0.0)).norm() > 1e-10
                {
                    ok = false;
                    break;
                }
            }
            ok
        };
        FactorSystem {
            tau,
            rank,
            a1,
            atau,
            a1_invt,
            atau_invt,
            class_tag,
            det_trivial,
        }
    }

    /// Degree-d line bundle with the theta multiplier
    /// A_tau(z) = exp(-pi i d tau - 2 pi i d z), A_1 = 1.
    pub fn line(degree: i64, tau: C64) -> Self {
        let d = degree as f64;
        let f = AnalyticExpr::constant(C64::new(0.0, -PI * d) * tau)
            .add(AnalyticExpr::constant(C64::new(0.0, -2.0 * PI * d)).mul(AnalyticExpr::z()));
        let atau = ExprMat::scalar(f.clone().exp());
        let atau_invt = ExprMat::scalar(f.neg().exp());
        Self::assemble(
            tau,
            ExprMat::identity(1),
            atau,
            Some(ExprMat::identity(1)),
            Some(atau_invt),
            ClassTag::Line { degree },
        )
    }

    /// The rank-2 nonsplit self-extension of the trivial line bundle:
    /// A_1 = Id, A_tau = [[1,1],[0,1]].
    pub fn atiyah_f2(tau: C64) -> Self {
        let e = |v: f64| AnalyticExpr::real(v);
        let atau = ExprMat::from_entries(2, vec![e(1.0), e(1.0), e(0.0), e(1.0)]).unwrap();
        // (A^-1)^T for the unipotent multiplier.
        let atau_invt = ExprMat::from_entries(2, vec![e(1.0), e(0.0), e(-1.0), e(1.0)]).unwrap();
        Self::assemble(
            tau,
            ExprMat::identity(2),
            atau,
            Some(ExprMat::identity(2)),
            Some(atau_invt),
            ClassTag::Atiyah { rank: 2 },
        )
    }

    pub fn direct_sum(a: &FactorSystem, b: &FactorSystem) -> Result<Self, Error> {
        if a.tau != b.tau {
            return Err(Error::Incompatible(format!(
                "direct sum over different moduli {} vs {}",
                a.tau, b.tau
            )));
        }
        let invt = |x: &Option<ExprMat>, y: &Option<ExprMat>| match (x, y) {
            (Some(x), Some(y)) => Some(ExprMat::block_diag(x, y)),
            _ => None,
        };
        Ok(Self::assemble(
            a.tau,
            ExprMat::block_diag(&a.a1, &b.a1),
            ExprMat::block_diag(&a.atau, &b.atau),
            invt(&a.a1_invt, &b.a1_invt),
            invt(&a.atau_invt, &b.atau_invt),
            ClassTag::Sum(Box::new(a.class_tag.clone()), Box::new(b.class_tag.clone())),
        ))
    }

    /// Dual bundle: multipliers are the inverse transposes.
    pub fn dual(a: &FactorSystem) -> Result<Self, Error> {
        let (a1i, ataui) = match (&a.a1_invt, &a.atau_invt) {
            (Some(x), Some(y)) => (x.clone(), y.clone()),
            _ => {
                return Err(Error::Unsupported(
                    "dual of a custom multiplier system without symbolic inverse".into(),
                ))
            }
        };
        Ok(Self::assemble(
            a.tau,
            a1i,
            ataui,
            Some(a.a1.clone()),
            Some(a.atau.clone()),
            ClassTag::Dual(Box::new(a.class_tag.clone())),
        ))
    }

    pub fn tensor(a: &FactorSystem, b: &FactorSystem) -> Result<Self, Error> {
        if a.tau != b.tau {
            return Err(Error::Incompatible("tensor over different moduli".into()));
        }
        let invt = |x: &Option<ExprMat>, y: &Option<ExprMat>| match (x, y) {
            (Some(x), Some(y)) => Some(ExprMat::kron(x, y)),
            _ => None,
        };
        Ok(Self::assemble(
            a.tau,
            ExprMat::kron(&a.a1, &b.a1),
            ExprMat::kron(&a.atau, &b.atau),
            invt(&a.a1_invt, &b.a1_invt),
            invt(&a.atau_invt, &b.atau_invt),
            ClassTag::Tensor(Box::new(a.class_tag.clone()), Box::new(b.class_tag.clone())),
        ))
    }

    /// Endomorphism bundle: multipliers act by conjugation, i.e. A (x) A^-T
    /// on row-major-vectorized endomorphisms.
    pub fn end_bundle(a: &FactorSystem) -> Result<Self, Error> {
        let (a1i, ataui) = match (&a.a1_invt, &a.atau_invt) {
            (Some(x), Some(y)) => (x.clone(), y.clone()),
            _ => return Err(Error::Unsupported("End of a custom multiplier system".into())),
        };
        Ok(Self::assemble(
            a.tau,
            ExprMat::kron(&a.a1, &a1i),
            ExprMat::kron(&a.atau, &ataui),
            Some(ExprMat::kron(&a1i, &a.a1)),
            Some(ExprMat::kron(&ataui, &a.atau)),
            ClassTag::End(Box::new(a.class_tag.clone())),
        ))
    }

    /// Trace-free endomorphism bundle of a det-trivial rank-2 system, in the
    /// fixed basis (E, F, H) of trace-free 2x2 matrices. Multipliers are the
    /// adjoint-representation images Ad(A_l(z)).
    pub fn end0_bundle(a: &FactorSystem) -> Result<Self, Error> {
        if a.rank != 2 {
            return Err(Error::Unsupported(format!(
                "trace-free End requires rank 2, got {}",
                a.rank
            )));
        }
        if !a.det_trivial {
            return Err(Error::Unsupported(
                "trace-free End requires det-trivial multipliers".into(),
            ));
        }
        let ad_fwd = ad_rep_expr(&a.a1);
        let ad_tau_fwd = ad_rep_expr(&a.atau);
        // Ad(A)^-T = Ad(A^-1)^T, and A^-1 is the adjugate for det 1.
        let ad_inv = |m: &ExprMat| ad_rep_expr(&adjugate2(m)).transpose();
        Ok(Self::assemble(
            a.tau,
            ad_fwd,
            ad_tau_fwd,
            Some(ad_inv(&a.a1)),
            Some(ad_inv(&a.atau)),
            ClassTag::End0(Box::new(a.class_tag.clone())),
        ))
    }

    /// Arbitrary multiplier system inside the expression DSL. No validation
    /// is performed here; `validate_cocycle` is the consistency check.
    pub fn from_parts(tau: C64, a1: ExprMat, atau: ExprMat) -> Result<Self, Error> {
        if a1.rank() != atau.rank() {
            return Err(Error::ShapeMismatch(format!(
                "multiplier ranks differ: {} vs {}",
                a1.rank(),
                atau.rank()
            )));
        }
        if tau.im <= 0.0 {
            return Err(Error::InvalidTorus("Im tau must be positive".into()));
        }
        Ok(Self::assemble(tau, a1, atau, None, None, ClassTag::Custom))
    }

    pub fn tau(&self) -> C64 {
        self.tau
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn class_tag(&self) -> &ClassTag {
        &self.class_tag
    }

    pub fn det_trivial(&self) -> bool {
        self.det_trivial
    }

    pub fn a1_expr(&self) -> &ExprMat {
        &self.a1
    }

    pub fn atau_expr(&self) -> &ExprMat {
        &self.atau
    }

    pub fn multiplier_at(&self, dir: LatticeDir, z: C64) -> Vec<C64> {
        match dir {
            LatticeDir::One => self.a1.eval(z),
            LatticeDir::Tau => self.atau.eval(z),
        }
    }

    /// Maximum cocycle residual ||A_1(z+tau) A_tau(z) - A_tau(z+1) A_1(z)||_F
    /// over the deterministic sample set, normalized per sample by the
    /// magnitude of the two products. Theta multipliers reach e^{4 pi} on the
    /// sample set, where unnormalized f64 rounding alone would exceed 1e-12.
    pub fn validate_cocycle(&self) -> f64 {
        let r = self.rank;
        let mut lhs = vec![C64::new(0.0, 0.0); r * r];
        let mut rhs = vec![C64::new(0.0, 0.0); r * r];
        let mut worst = 0.0f64;
        for z in sample_points(self.tau) {
            let a1_shift = self.a1.eval(z + self.tau);
            let atau_here = self.atau.eval(z);
            let atau_shift = self.atau.eval(z + C64::new(1.0, 0.0));
            let a1_here = self.a1.eval(z);
            smallmat::mul(r, &a1_shift, &atau_here, &mut lhs);
            smallmat::mul(r, &atau_shift, &a1_here, &mut rhs);
            let res: f64 = lhs
                .iter()
                .zip(rhs.iter())
                .map(|(a, b)| (a - b).norm_sqr())
                .sum::<f64>()
                .sqrt();
            let scale = smallmat::frob_norm(&lhs).max(smallmat::frob_norm(&rhs)).max(1.0);
            worst = worst.max(res / scale);
        }
        worst
    }

    /// Carry a single fiber value across one lattice seam. `forward` maps
    /// f(z) to f(z + dir) using the multiplier at z.
    pub fn transport(
        &self,
        dir: LatticeDir,
        z: C64,
        value: &[C64],
        kind: FieldKind,
        forward: bool,
    ) -> Result<Vec<C64>, Error> {
        let r = self.rank;
        let m = self.multiplier_at(dir, z);
        let mut minv = vec![C64::new(0.0, 0.0); r * r];
        if !smallmat::inverse(r, &m, &mut minv) {
            return Err(Error::InvalidBundle("singular multiplier".into()));
        }
        let mut out = vec![C64::new(0.0, 0.0); value.len()];
        let mut scratch = vec![C64::new(0.0, 0.0); value.len()];
        match kind {
            FieldKind::Scalar => out.copy_from_slice(value),
            FieldKind::Section => {
                if value.len() != r {
                    return Err(Error::ShapeMismatch("section length".into()));
                }
                let src = if forward { &m } else { &minv };
                for i in 0..r {
                    out[i] = (0..r).map(|k| src[i * r + k] * value[k]).sum();
                }
            }
            FieldKind::Endomorphism => {
                if value.len() != r * r {
                    return Err(Error::ShapeMismatch("endomorphism shape".into()));
                }
                let (l, rmat) = if forward { (&m, &minv) } else { (&minv, &m) };
                smallmat::mul(r, l, value, &mut scratch);
                smallmat::mul(r, &scratch, rmat, &mut out);
            }
            FieldKind::Metric => {
                if value.len() != r * r {
                    return Err(Error::ShapeMismatch("metric shape".into()));
                }
                if forward {
                    smallmat::conjt_mul(r, &minv, value, &mut scratch);
                    smallmat::mul(r, &scratch, &minv, &mut out);
                } else {
                    smallmat::conjt_mul(r, &m, value, &mut scratch);
                    smallmat::mul(r, &scratch, &m, &mut out);
                }
            }
        }
        Ok(out)
    }

    pub fn seam_table(&self, domain: &TorusDomain) -> Result<SeamTable, Error> {
        if domain.tau() != self.tau {
            return Err(Error::Incompatible(
                "bundle and domain have different moduli".into(),
            ));
        }
        SeamTable::build(
            domain,
            self.rank,
            |z| self.a1.eval(z),
            |z| self.atau.eval(z),
        )
    }

    /// Diagonal block sizes preserved by every multiplier of the
    /// construction; used by block-wise conformal perturbations.
    pub fn diagonal_blocks(&self) -> Vec<usize> {
        fn blocks(tag: &ClassTag, full: usize) -> Vec<usize> {
            match tag {
                ClassTag::Line { .. } => vec![1],
                ClassTag::Sum(a, b) => {
                    let mut v = blocks(a, a.rank());
                    v.extend(blocks(b, b.rank()));
                    v
                }
                ClassTag::Dual(a) => blocks(a, full),
                _ => vec![full],
            }
        }
        blocks(&self.class_tag, self.rank)
    }
}

/// Adjugate of a rank-2 expression matrix; equals the inverse when det = 1.
fn adjugate2(m: &ExprMat) -> ExprMat {
    assert_eq!(m.rank(), 2);
    ExprMat::from_entries(
        2,
        vec![
            m.entry(1, 1).clone(),
            m.entry(0, 1).clone().neg(),
            m.entry(1, 0).clone().neg(),
            m.entry(0, 0).clone(),
        ],
    )
    .unwrap()
}

/// Adjoint representation of a det-1 rank-2 multiplier in the trace-free
/// basis E = [[0,1],[0,0]], F = [[0,0],[1,0]], H = [[1,0],[0,-1]]:
/// columns are the (E, F, H) coordinates of A X A^-1.
fn ad_rep_expr(m: &ExprMat) -> ExprMat {
    assert_eq!(m.rank(), 2);
    let a = m.entry(0, 0).clone();
    let b = m.entry(0, 1).clone();
    let c = m.entry(1, 0).clone();
    let d = m.entry(1, 1).clone();
    let two = AnalyticExpr::real(2.0);
    ExprMat::from_entries(
        3,
        vec![
            // row E
            a.clone().mul(a.clone()),
            b.clone().mul(b.clone()).neg(),
            two.clone().mul(a.clone()).mul(b.clone()).neg(),
            // row F
            c.clone().mul(c.clone()).neg(),
            d.clone().mul(d.clone()),
            two.mul(c.clone()).mul(d.clone()),
            // row H
            a.clone().mul(c.clone()).neg(),
            b.clone().mul(d.clone()),
            a.mul(d).add(b.mul(c)),
        ],
    )
    .unwrap()
}

/// Fixed trace-free 2x2 basis shared with the Lie-algebra layer.
pub fn sl2_basis() -> [[C64; 4]; 3] {
    let z = C64::new(0.0, 0.0);
    let o = C64::new(1.0, 0.0);
    [
        [z, o, z, z],          // E
        [z, z, o, z],          // F
        [o, z, z, -o],         // H
    ]
}
