//! Gradient flow of the Willmore-Helfrich energy for open polygonal curves
//! with clamped endpoints and natural curvature boundary conditions.

pub mod banded;
pub mod diagnostics;
pub mod energy;
pub mod flow;
pub mod geometry;
pub mod io;

pub use diagnostics::{AuditReport, RunReport, SeriesRow, Termination};
pub use energy::{EnergyBreakdown, FlowParams};
pub use flow::{DtMode, FlowConfig, FlowState, Integrator, VelocityMode};
pub use geometry::{DiscreteCurve, GeometryCache, VertexField};
