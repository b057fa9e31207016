//! Numerical laboratory for Riemannian metrics on the 2-sphere.
//!
//! Curves live on the unit sphere `S² ⊂ ℝ³` for every metric; non-round
//! geometry enters only through the metric tensor. The crate provides
//!
//! - [`metrics`]: metric families (round, ellipsoid of revolution, Zoll of
//!   revolution), covariant acceleration and meridian lengths,
//! - [`curves`]: polyline loops with length, curvature vectors, resampling
//!   and embeddedness tests,
//! - [`flow`]: the curve-shortening flow with collapse/convergence
//!   classification,
//! - [`sweepout`]: the plane-section family and minmax estimates,
//! - [`topology`]: complementary components and the ℤ₂ invariant of loops
//!   of curves,
//! - [`geodesics`]: geodesic shooting, Clairaut checks and the simple length
//!   spectrum,
//! - [`verify`]: end-to-end checks of the Zoll and covering statements.

pub mod curves;
pub mod error;
pub mod flow;
pub mod geodesics;
pub mod metrics;
pub mod sphere;
pub mod sweepout;
pub mod topology;
pub mod verify;

pub use curves::{DiscreteCurve, VertexGeometry};
pub use error::{Error, Result};
pub use flow::{FlowOutcome, FlowParams, FlowStatus, FlowTrace};
pub use geodesics::{GeodesicTrajectory, SpectrumReport};
pub use metrics::{MetricSpec, OddProfile};
pub use sweepout::{GridResolution, LSEstimates, PlaneFamilyIndex, SubfamilyKind};
pub use topology::{CurveLoop, MarkedCurve};

/// Points and tangent vectors in ambient ℝ³.
pub type Vec3 = nalgebra::Vector3<f64>;
