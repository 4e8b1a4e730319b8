//! Fixtures shared by the criterion benches.

use spexact::potentials::PotentialSpec;
use spexact::shooting::{BoundaryCondition, TruncatedProblem};

/// Built-in potential on `(−s, s)` with Dirichlet ends.
pub fn problem(name: &str, s: f64) -> TruncatedProblem {
    let spec = PotentialSpec::builtin(name).expect("built-in potential");
    TruncatedProblem::symmetric(spec, s, BoundaryCondition::Dirichlet).expect("valid problem")
}
