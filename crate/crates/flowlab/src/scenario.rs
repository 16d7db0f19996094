//! Scenario files: the JSON schema driving runs, validation, and sweeps.
//! Unknown keys are rejected so a scenario on disk is complete provenance
//! for the experiment it produced.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::bundle::{ClassTag, FactorSystem};
use crate::error::Error;
use crate::flow::{FlowConfig, Scheme};
use crate::lie::GroupDescriptor;
use crate::metric::{BundleContext, MetricField};
use crate::stability::BundleClass;
use crate::torus::TorusDomain;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TauSpec {
    pub re: f64,
    pub im: f64,
}

impl TauSpec {
    pub fn to_complex(self) -> C64 {
        C64::new(self.re, self.im)
    }

    pub fn from_complex(z: C64) -> Self {
        TauSpec { re: z.re, im: z.im }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaseSection {
    pub tau: TauSpec,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BundleDescriptor {
    Line { degree: i64 },
    Sum { summands: Vec<BundleDescriptor> },
    Atiyah,
    Dual { of: Box<BundleDescriptor> },
    Tensor { left: Box<BundleDescriptor>, right: Box<BundleDescriptor> },
    End0 { of: Box<BundleDescriptor> },
}

impl BundleDescriptor {
    pub fn build(&self, tau: C64) -> Result<FactorSystem, Error> {
        match self {
            BundleDescriptor::Line { degree } => Ok(FactorSystem::line(*degree, tau)),
            BundleDescriptor::Sum { summands } => {
                let mut iter = summands.iter();
                let first = iter
                    .next()
                    .ok_or_else(|| Error::Scenario("empty direct sum".into()))?;
                let mut acc = first.build(tau)?;
                for d in iter {
                    acc = FactorSystem::direct_sum(&acc, &d.build(tau)?)?;
                }
                Ok(acc)
            }
            BundleDescriptor::Atiyah => Ok(FactorSystem::atiyah_f2(tau)),
            BundleDescriptor::Dual { of } => FactorSystem::dual(&of.build(tau)?),
            BundleDescriptor::Tensor { left, right } => {
                FactorSystem::tensor(&left.build(tau)?, &right.build(tau)?)
            }
            BundleDescriptor::End0 { of } => FactorSystem::end0_bundle(&of.build(tau)?),
        }
    }

    /// Descriptor of a built-in construction tag; Custom systems have none.
    pub fn from_tag(tag: &ClassTag) -> Option<BundleDescriptor> {
        match tag {
            ClassTag::Line { degree } => Some(BundleDescriptor::Line { degree: *degree }),
            ClassTag::Sum(a, b) => {
                // Flatten nested sums into one summand list.
                let mut summands = Vec::new();
                fn collect(tag: &ClassTag, out: &mut Vec<BundleDescriptor>) -> Option<()> {
                    match tag {
                        ClassTag::Sum(a, b) => {
                            collect(a, out)?;
                            collect(b, out)
                        }
                        other => {
                            out.push(BundleDescriptor::from_tag(other)?);
                            Some(())
                        }
                    }
                }
                collect(a, &mut summands)?;
                collect(b, &mut summands)?;
                Some(BundleDescriptor::Sum { summands })
            }
            ClassTag::Dual(a) => Some(BundleDescriptor::Dual {
                of: Box::new(Self::from_tag(a)?),
            }),
            ClassTag::Tensor(a, b) => Some(BundleDescriptor::Tensor {
                left: Box::new(Self::from_tag(a)?),
                right: Box::new(Self::from_tag(b)?),
            }),
            ClassTag::End0(a) => Some(BundleDescriptor::End0 {
                of: Box::new(Self::from_tag(a)?),
            }),
            ClassTag::Atiyah { .. } => Some(BundleDescriptor::Atiyah),
            ClassTag::End(_) | ClassTag::Custom => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum GroupKind {
    #[serde(rename = "SL2")]
    Sl2,
    #[serde(rename = "torus_factor")]
    TorusFactor,
}

impl GroupKind {
    pub fn descriptor(&self) -> GroupDescriptor {
        match self {
            GroupKind::Sl2 => GroupDescriptor::sl2(),
            GroupKind::TorusFactor => GroupDescriptor::torus_factor(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialMetric {
    Canonical,
    Perturbed { seed: u64, amplitude: f64 },
    Snapshot { path: String },
}

fn default_cfl() -> f64 {
    0.2
}

fn default_record_every() -> u64 {
    50
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SchemeKind {
    #[default]
    EulerMult,
    Rk2Mult,
}

impl SchemeKind {
    pub fn to_scheme(self) -> Scheme {
        match self {
            SchemeKind::EulerMult => Scheme::EulerMult,
            SchemeKind::Rk2Mult => Scheme::Rk2Mult,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowSection {
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    #[serde(default)]
    pub scheme: SchemeKind,
    pub max_steps: u64,
    pub epsilon_target: f64,
    #[serde(default = "default_record_every")]
    pub record_every: u64,
    #[serde(default)]
    pub det_constrained: bool,
}

impl FlowSection {
    pub fn to_config(&self) -> FlowConfig {
        FlowConfig {
            cfl: self.cfl,
            scheme: self.scheme.to_scheme(),
            max_steps: self.max_steps,
            epsilon_target: self.epsilon_target,
            record_every: self.record_every,
            det_constrained: self.det_constrained,
        }
    }
}

fn default_emit_svg() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputsSection {
    #[serde(default)]
    pub directory: Option<String>,
    #[serde(default = "default_emit_svg")]
    pub emit_svg: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub base: BaseSection,
    pub bundle: BundleDescriptor,
    pub group: GroupKind,
    pub initial_metric: InitialMetric,
    pub flow: FlowSection,
    pub outputs: OutputsSection,
}

/// Everything a command needs, resolved from a scenario.
pub struct Prepared {
    pub ctx: BundleContext,
    pub h0: MetricField,
    pub lambda: f64,
    pub config: FlowConfig,
    pub group: GroupDescriptor,
    pub class: Option<BundleClass>,
}

impl Scenario {
    /// Parse with position information preserved in the error message.
    pub fn parse(text: &str) -> Result<Scenario, Error> {
        serde_json::from_str(text).map_err(|e| Error::Scenario(e.to_string()))
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serialization is infallible")
    }

    pub fn domain(&self) -> Result<TorusDomain, Error> {
        TorusDomain::new(self.base.tau.to_complex(), self.base.n)
    }

    /// Resolve the scenario into live objects, loading or constructing the
    /// initial metric.
    pub fn prepare(&self) -> Result<Prepared, Error> {
        self.flow.to_config().validate()?;
        let domain = self.domain()?;
        let bundle = self.bundle.build(domain.tau())?;
        let ctx = BundleContext::new(domain, bundle)?;
        let h0 = match &self.initial_metric {
            InitialMetric::Canonical => ctx.canonical_metric()?,
            InitialMetric::Perturbed { seed, amplitude } => {
                let h = ctx.canonical_metric()?;
                ctx.perturb(&h, *seed, *amplitude, self.flow.det_constrained)?
            }
            InitialMetric::Snapshot { path } => {
                let (header, values) = crate::snapshot::load_values(std::path::Path::new(path))?;
                crate::snapshot::check_header_against(&header, &ctx)?;
                MetricField::new(values, crate::metric::Provenance::Perturbed)
            }
        };
        ctx.validate_metric(&h0)?;
        let group = self.group.descriptor();
        let lambda = crate::lie::center_constant(&group, &ctx)?;
        Ok(Prepared {
            class: BundleClass::from_tag(ctx.bundle().class_tag()),
            h0,
            lambda,
            config: self.flow.to_config(),
            group,
            ctx,
        })
    }
}
