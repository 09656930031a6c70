//! Numerical verification of biharmonic maps and biharmonic morphisms between
//! Riemannian manifolds given in coordinates.
//!
//! The pipeline is built on truncated multivariate Taylor jets ([`jets`]):
//! metrics, maps and every derived quantity (Christoffel symbols, tension,
//! bitension, dilation) are evaluated as jets at a point, so derivatives up to
//! order four come from one exact mechanism.
//!
//! - [`geometry`]: metric patches, Christoffel symbols, curvature, Laplacian.
//! - [`fields`]: tension, p-tension, pullback Laplacian, bitension, the
//!   conformal biharmonicity equation.
//! - [`morphism`]: the four biharmonic-morphism conditions and the trace screen.
//! - [`submersion`]: adapted frames, mean curvatures, fundamental tensors.
//! - [`catalog`]: built-in examples with expected verdicts and closed forms.

pub mod catalog;
pub mod error;
pub mod fields;
pub mod geometry;
pub mod jets;
pub mod morphism;
pub mod submersion;

pub use catalog::{instantiate, list_entries, oracle_residual, sample_points, CatalogEntry, Expected, OracleValue, Params, Region};
pub use error::{Error, Result};
pub use fields::{
    bitension, differential, energy_densities, eqf_residual, hwc_check, p_tension, pullback_laplacian, tension,
    BitensionData, ConformalityData, EqfData, Pullback, SmoothMap, TensionData,
};
pub use geometry::{christoffel, curvature, laplace_beltrami, MetricPatch};
pub use jets::{fd_oracle, Jet, MultiIndex};
pub use morphism::{
    condition_eqc, longeq_residual, morphism_verdict, s_tensor, trace_screen, Condition, MorphismReport, PointReport,
};
pub use submersion::{adapted_frame, fundamental_tensors, mean_curvatures, tension_via_x, AdaptedFrame};

/// Version string embedded in reports.
pub const ENGINE_VERSION: &str = env!("CARGO_PKG_VERSION");
