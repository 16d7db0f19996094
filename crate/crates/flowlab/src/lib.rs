//! Numerical laboratory for the Donaldson heat flow on holomorphic bundles
//! over flat complex tori.
//!
//! Bundles are presented by factors of automorphy, Hermitian metrics live on
//! a periodic grid with automorphy-twisted seams, and the flow
//! h^-1 dh/dt = -(K(h) - lambda) is integrated with positivity-preserving
//! multiplicative steps. The principal-bundle layer for SL(2, C) provides the
//! adjoint machinery: induced metrics, the curvature relation, the isometry
//! constant of the adjoint map, and reduction-preservation checks.

pub mod bundle;
pub mod error;
pub mod runner;
pub mod scenario;
pub mod snapshot;
pub mod stability;
pub mod report;
pub mod expr;
pub mod field;
pub mod flow;
pub mod lie;
pub mod adjoint;
pub(crate) mod smallmat;
pub mod metric;
pub mod torus;

pub use bundle::{ClassTag, FactorSystem, LatticeDir};
pub use error::Error;
pub use expr::AnalyticExpr;
pub use field::{FieldKind, MatrixField, SeamTable};
pub use flow::{classify_limit, Classification, FlowConfig, FlowDiagnostics, FlowRun, FlowSample, Scheme, Termination};
pub use metric::{BundleContext, MetricField, Provenance, SeamCheck, SlopeData};
pub use torus::TorusDomain;
