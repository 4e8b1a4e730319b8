//! Complex potentials, their structural assumptions and the explicit
//! spectral enclosures derived from them.

mod assumptions;
mod regions;
mod spec;

pub use assumptions::{
    infer_case, sectoriality_angle, verify_assumptions, AssumptionCase, AssumptionReport, MeasuredConstants,
    SampleBox, Sectoriality, Violation,
};
pub use regions::{completeness_threshold, PlaneRegion};
pub use spec::{DeclaredBounds, PotentialSpec, SingularPart, BUILTIN_NAMES};
