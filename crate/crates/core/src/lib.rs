//! Barycentric visualization of session-level database time.
//!
//! Per-session metric vectors that partition a sample interval are mapped
//! onto points of a triangle (three metrics) or a regular tetrahedron (four),
//! audited for time that is missing or counted twice, and drawn as
//! deterministic SVG frames and charts.

pub mod audit;
pub mod ingest;
pub mod owi;
pub mod par;
pub mod render;
pub mod simplex;

pub use audit::{audit_series, AuditReport, Classification, TimeAccountingRecord};
pub use owi::{AggregationSpec, AxisAssignment, DatasetSeries, MetricVector, SessionSnapshot};
pub use par::Strategy;
pub use render::{FrameScene, ViewConfig};
pub use simplex::{BarycentricPoint, CartesianPoint, NormalizationMode, ViewRotation};
