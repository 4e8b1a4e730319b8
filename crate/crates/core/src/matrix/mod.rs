//! Finite-difference backend: tridiagonal discretisations of truncated
//! problems, determinant-phase eigenvalue counting, resolvent norms,
//! pseudospectra and the Attouch–Wets surrogate on point clouds.

mod banded;
mod discretize;
mod spectra;

pub use banded::{BandedOperator, TriLu};
pub use discretize::{discretize, MIN_UNKNOWNS};
pub use spectra::{
    attouch_wets, eigs_in_rect, eigs_in_rect_with, newton_ratio, pseudospectrum, pseudospectrum_with, resolvent_norm,
    resolvent_norm_with, smallest_singular_value, AttouchWets, MatrixEigenvalue, PseudospectrumGrid, SminOptions,
};
