//! Exact classification of the built-in bundle classes and the predicted
//! flow-limit deviations they imply. The oracle covers exactly the classes
//! with textbook classifications; anything else is rejected rather than
//! guessed.

use std::f64::consts::PI;

use crate::bundle::{ClassTag, FactorSystem};
use crate::error::Error;

/// Normalized bundle class for stability bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub enum BundleClass {
    /// Direct sum of line bundles of the given degrees.
    LineSum(Vec<i64>),
    /// The rank-k unipotent extension tower (k = 2 here).
    Atiyah(u32),
    /// Trace-free endomorphisms of a classified det-trivial rank-2 bundle.
    End0Of(Box<BundleClass>),
}

impl BundleClass {
    /// Normalize a construction tag into a classified bundle class.
    /// Sums, duals and tensors of line bundles collapse into LineSum;
    /// End0 of a line-sum likewise; End0 of the unipotent extension stays
    /// symbolic. Unsupported shapes return None.
    pub fn from_tag(tag: &ClassTag) -> Option<BundleClass> {
        fn line_sum(tag: &ClassTag) -> Option<Vec<i64>> {
            match tag {
                ClassTag::Line { degree } => Some(vec![*degree]),
                ClassTag::Sum(a, b) => {
                    let mut v = line_sum(a)?;
                    v.extend(line_sum(b)?);
                    Some(v)
                }
                ClassTag::Dual(a) => Some(line_sum(a)?.into_iter().map(|d| -d).collect()),
                ClassTag::Tensor(a, b) => {
                    let va = line_sum(a)?;
                    let vb = line_sum(b)?;
                    let mut v = Vec::with_capacity(va.len() * vb.len());
                    for da in &va {
                        for db in &vb {
                            v.push(da + db);
                        }
                    }
                    Some(v)
                }
                ClassTag::End(a) => {
                    let va = line_sum(a)?;
                    let mut v = Vec::with_capacity(va.len() * va.len());
                    for di in &va {
                        for dj in &va {
                            v.push(dj - di);
                        }
                    }
                    Some(v)
                }
                _ => None,
            }
        }
        match tag {
            ClassTag::Atiyah { rank } => Some(BundleClass::Atiyah(*rank)),
            ClassTag::End0(inner) => match inner.as_ref() {
                ClassTag::Atiyah { rank } => {
                    Some(BundleClass::End0Of(Box::new(BundleClass::Atiyah(*rank))))
                }
                other => {
                    let degrees = line_sum(other)?;
                    if degrees.len() != 2 || degrees[0] + degrees[1] != 0 {
                        return None;
                    }
                    // Block order follows the (E, F, H) basis: degrees
                    // (d1 - d2, d2 - d1, 0).
                    let d = degrees[0] - degrees[1];
                    Some(BundleClass::LineSum(vec![d, -d, 0]))
                }
            },
            other => line_sum(other).map(BundleClass::LineSum),
        }
    }

    /// Classify a built bundle, erroring on unsupported constructions.
    pub fn of(bundle: &FactorSystem) -> Result<BundleClass, Error> {
        Self::from_tag(bundle.class_tag()).ok_or_else(|| {
            Error::Unsupported(format!(
                "no stability classification for {:?}",
                bundle.class_tag()
            ))
        })
    }

    pub fn rank(&self) -> usize {
        match self {
            BundleClass::LineSum(v) => v.len(),
            BundleClass::Atiyah(k) => *k as usize,
            BundleClass::End0Of(inner) => {
                let r = inner.rank();
                r * r - 1
            }
        }
    }

    pub fn degree(&self) -> i64 {
        match self {
            BundleClass::LineSum(v) => v.iter().sum(),
            BundleClass::Atiyah(_) => 0,
            BundleClass::End0Of(_) => 0,
        }
    }

    pub fn slope(&self) -> f64 {
        self.degree() as f64 / self.rank() as f64
    }
}

/// Semistability verdict with a human-readable certificate.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityVerdict {
    pub semistable: bool,
    pub certificate: String,
}

pub fn is_semistable(class: &BundleClass) -> StabilityVerdict {
    match class {
        BundleClass::LineSum(degrees) => {
            let mu = class.slope();
            let max_d = *degrees.iter().max().expect("nonempty sum");
            if (max_d as f64) > mu {
                StabilityVerdict {
                    semistable: false,
                    certificate: format!("sub-line-bundle of degree {max_d} > mu = {mu}"),
                }
            } else {
                StabilityVerdict {
                    semistable: true,
                    certificate: format!("all line summands have degree mu = {mu}"),
                }
            }
        }
        BundleClass::Atiyah(_) => StabilityVerdict {
            semistable: true,
            certificate: "nonsplit self-extension of a degree-0 line bundle; \
                          every line subbundle has degree <= 0 = mu"
                .into(),
        },
        BundleClass::End0Of(inner) => {
            let inner_verdict = is_semistable(inner);
            StabilityVerdict {
                semistable: inner_verdict.semistable,
                certificate: format!(
                    "adjoint criterion: semistable iff the underlying bundle is ({})",
                    inner_verdict.certificate
                ),
            }
        }
    }
}

pub fn is_polystable(class: &BundleClass) -> bool {
    match class {
        BundleClass::LineSum(degrees) => degrees.iter().all(|d| *d == degrees[0]),
        BundleClass::Atiyah(k) => *k < 2,
        BundleClass::End0Of(inner) => is_polystable(inner),
    }
}

/// Slopes of the canonical destabilizing filtration, sorted descending.
pub fn hn_slopes(class: &BundleClass) -> Vec<f64> {
    match class {
        BundleClass::LineSum(degrees) => {
            let mut v: Vec<f64> = degrees.iter().map(|d| *d as f64).collect();
            v.sort_by(|a, b| b.partial_cmp(a).unwrap());
            v
        }
        BundleClass::Atiyah(_) => vec![0.0],
        BundleClass::End0Of(inner) => {
            if is_semistable(inner).semistable {
                vec![0.0]
            } else {
                // Only reachable through symbolic End0Of(Atiyah), which is
                // semistable; line-sum adjoints normalize to LineSum.
                vec![0.0]
            }
        }
    }
}

/// Limit of the sup-deviation along the flow: for diagonal splittings each
/// line factor converges to constant curvature 2 pi d_i / vol, so the
/// infimum over metrics of sup|K - lambda| is (2 pi / vol) max_i |d_i - mu|.
/// Semistable classes reach every epsilon, hence zero.
pub fn predicted_flow_infimum(class: &BundleClass, vol: f64) -> f64 {
    match class {
        BundleClass::LineSum(degrees) => {
            let mu = class.slope();
            let worst = degrees
                .iter()
                .map(|d| (*d as f64 - mu).abs())
                .fold(0.0f64, f64::max);
            2.0 * PI * worst / vol
        }
        BundleClass::Atiyah(_) => 0.0,
        BundleClass::End0Of(inner) => {
            if is_semistable(inner).semistable {
                0.0
            } else {
                predicted_flow_infimum(inner, vol)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64 as C64;

    fn tau_i() -> C64 {
        C64::new(0.0, 1.0)
    }

    #[test]
    fn classification_from_tags() {
        let l1 = FactorSystem::line(1, tau_i());
        let lm1 = FactorSystem::line(-1, tau_i());
        let sum = FactorSystem::direct_sum(&l1, &lm1).unwrap();
        assert_eq!(
            BundleClass::of(&sum).unwrap(),
            BundleClass::LineSum(vec![1, -1])
        );
        let dual = FactorSystem::dual(&sum).unwrap();
        assert_eq!(
            BundleClass::of(&dual).unwrap(),
            BundleClass::LineSum(vec![-1, 1])
        );
        let end0 = FactorSystem::end0_bundle(&sum).unwrap();
        assert_eq!(
            BundleClass::of(&end0).unwrap(),
            BundleClass::LineSum(vec![2, -2, 0])
        );
        // Slope multiset is {2, 0, -2} as read off the HN slopes.
        assert_eq!(
            hn_slopes(&BundleClass::of(&end0).unwrap()),
            vec![2.0, 0.0, -2.0]
        );
        let f2 = FactorSystem::atiyah_f2(tau_i());
        assert_eq!(BundleClass::of(&f2).unwrap(), BundleClass::Atiyah(2));
        let end0f2 = FactorSystem::end0_bundle(&f2).unwrap();
        assert_eq!(
            BundleClass::of(&end0f2).unwrap(),
            BundleClass::End0Of(Box::new(BundleClass::Atiyah(2)))
        );
        let tens = FactorSystem::tensor(&l1, &lm1).unwrap();
        assert_eq!(
            BundleClass::of(&tens).unwrap(),
            BundleClass::LineSum(vec![0])
        );
        // Custom systems are rejected.
        let custom = FactorSystem::from_parts(
            tau_i(),
            l1.a1_expr().clone(),
            l1.atau_expr().clone(),
        )
        .unwrap();
        assert!(BundleClass::of(&custom).is_err());
    }

    #[test]
    fn semistability_examples() {
        let unstable = BundleClass::LineSum(vec![1, -1]);
        let v = is_semistable(&unstable);
        assert!(!v.semistable);
        assert_eq!(v.certificate, "sub-line-bundle of degree 1 > mu = 0");

        let atiyah = BundleClass::Atiyah(2);
        assert!(is_semistable(&atiyah).semistable);

        let end0 = BundleClass::End0Of(Box::new(BundleClass::Atiyah(2)));
        assert!(is_semistable(&end0).semistable);

        let balanced = BundleClass::LineSum(vec![2, 2]);
        assert!(is_semistable(&balanced).semistable);
    }

    #[test]
    fn polystability_examples() {
        assert!(is_polystable(&BundleClass::LineSum(vec![2, 2])));
        assert!(!is_polystable(&BundleClass::Atiyah(2)));
        assert!(is_polystable(&BundleClass::LineSum(vec![0])));
        assert!(!is_polystable(&BundleClass::LineSum(vec![1, -1])));
        assert!(!is_polystable(&BundleClass::End0Of(Box::new(
            BundleClass::Atiyah(2)
        ))));
    }

    #[test]
    fn polystable_implies_semistable() {
        let classes = [
            BundleClass::LineSum(vec![2, 2]),
            BundleClass::LineSum(vec![0]),
            BundleClass::LineSum(vec![1, -1]),
            BundleClass::LineSum(vec![2, 0, -2]),
            BundleClass::Atiyah(2),
            BundleClass::End0Of(Box::new(BundleClass::Atiyah(2))),
        ];
        for c in &classes {
            if is_polystable(c) {
                assert!(is_semistable(c).semistable, "{c:?}");
            }
        }
    }

    #[test]
    fn hn_slope_examples() {
        assert_eq!(hn_slopes(&BundleClass::LineSum(vec![1, -1])), vec![1.0, -1.0]);
        assert_eq!(
            hn_slopes(&BundleClass::LineSum(vec![-2, 2, 0])),
            vec![2.0, 0.0, -2.0]
        );
        assert_eq!(hn_slopes(&BundleClass::Atiyah(2)), vec![0.0]);
    }

    #[test]
    fn predicted_infimum_examples() {
        let two_pi = 2.0 * PI;
        let v = predicted_flow_infimum(&BundleClass::LineSum(vec![1, -1]), 1.0);
        assert!((v - two_pi).abs() < 1e-12);
        assert!((v - 6.2832).abs() < 1e-3);
        let v = predicted_flow_infimum(&BundleClass::LineSum(vec![2, 0, -2]), 1.0);
        assert!((v - 4.0 * PI).abs() < 1e-12);
        assert_eq!(predicted_flow_infimum(&BundleClass::Atiyah(2), 1.0), 0.0);
        assert_eq!(
            predicted_flow_infimum(&BundleClass::End0Of(Box::new(BundleClass::Atiyah(2))), 1.0),
            0.0
        );
        // Volume scaling.
        let v = predicted_flow_infimum(&BundleClass::LineSum(vec![1, -1]), 2.0);
        assert!((v - PI).abs() < 1e-12);
    }

    #[test]
    fn infimum_zero_iff_semistable() {
        let classes = [
            BundleClass::LineSum(vec![2, 2]),
            BundleClass::LineSum(vec![0]),
            BundleClass::LineSum(vec![1, -1]),
            BundleClass::LineSum(vec![2, 0, -2]),
            BundleClass::LineSum(vec![3]),
            BundleClass::Atiyah(2),
            BundleClass::End0Of(Box::new(BundleClass::Atiyah(2))),
        ];
        for c in &classes {
            let zero = predicted_flow_infimum(c, 1.0) == 0.0;
            assert_eq!(zero, is_semistable(c).semistable, "{c:?}");
        }
    }
}
