//! Spectra of separable multi-dimensional problems from one-dimensional
//! solves: sums over Cartesian factors for cubes, unions over angular modes
//! for balls and annuli.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Rect;
use crate::ode::{OdeForm, OdeKind};
use crate::potentials::PotentialSpec;
use crate::shooting::{find_eigenvalues, BoundaryCondition, EigenRecord, TruncatedProblem};

/// Sums closer than this are one level.
pub const MERGE_TOL: f64 = 1e-9;

/// Default cap on the angular index.
pub const L_CAP: u32 = 64;

/// An eigenvalue with its total multiplicity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Level {
    pub lambda: Complex64,
    pub multiplicity: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Geometry {
    Cube { d: usize, s: f64 },
    Ball3d { s: f64 },
    Annulus2d { r_in: f64, s: f64 },
}

/// Eigenvalues of one separated mode. Cubes have a single mode without an
/// angular index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub l: Option<u32>,
    /// Number of angular functions sharing this radial problem.
    pub angular_multiplicity: u32,
    pub eigenvalues: Vec<EigenRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeTable {
    pub geometry: Geometry,
    pub window: Rect,
    pub modes: Vec<Mode>,
    /// First angular index whose list is empty in the window.
    pub l_max: Option<u32>,
}

impl ModeTable {
    /// All levels of the separated problem in the window, merged within
    /// `merge_tol`. Cube tables sum their one-dimensional list, whose
    /// coverage was certified when the table was built.
    pub fn levels(&self, merge_tol: f64) -> Vec<Level> {
        if let Geometry::Cube { d, .. } = self.geometry {
            let mu: Vec<Complex64> = self.modes[0]
                .eigenvalues
                .iter()
                .flat_map(|r| std::iter::repeat_n(r.lambda, r.multiplicity as usize))
                .collect();
            let sums = assemble_cube_with(&mu, f64::INFINITY, d, &self.window).unwrap_or_default();
            return merge_levels(sums, merge_tol);
        }
        let pts: Vec<Level> = self
            .modes
            .iter()
            .flat_map(|m| {
                m.eigenvalues.iter().map(move |e| Level {
                    lambda: e.lambda,
                    multiplicity: e.multiplicity * m.angular_multiplicity,
                })
            })
            .collect();
        merge_levels(pts, merge_tol)
    }
}

/// Degeneracy `k(k+1)/2` of the `k`-th level of the 3-D harmonic oscillator.
pub fn degeneracy(k: u32) -> u32 {
    k * (k + 1) / 2
}

fn merge_levels(mut pts: Vec<Level>, tol: f64) -> Vec<Level> {
    pts.sort_by(|a, b| a.lambda.re.total_cmp(&b.lambda.re).then(a.lambda.im.total_cmp(&b.lambda.im)));
    let mut out: Vec<Level> = Vec::new();
    for p in pts {
        match out.iter_mut().find(|q| (q.lambda - p.lambda).norm() <= tol) {
            Some(q) => q.multiplicity += p.multiplicity,
            None => out.push(p),
        }
    }
    out
}

/// `d`-fold sums of `mu` in `window`; `mu` is taken to be complete up to its
/// largest real part.
pub fn assemble_cube(mu: &[Complex64], d: usize, window: &Rect) -> Result<Vec<Level>> {
    let top = mu.iter().map(|m| m.re).fold(f64::NEG_INFINITY, f64::max);
    assemble_cube_with(mu, top, d, window)
}

/// `d`-fold sums of `mu` landing in `window`, every ordered index tuple
/// counted once, merged within [`MERGE_TOL`].
///
/// `complete_to` is the real part up to which `mu` is known to hold every
/// one-dimensional eigenvalue. Any sum in the window uses factors with
/// `Re μ ≤ Re_max(window) − (d−1)·min Re μ`, so that bound must not exceed
/// `complete_to`.
pub fn assemble_cube_with(mu: &[Complex64], complete_to: f64, d: usize, window: &Rect) -> Result<Vec<Level>> {
    if d == 0 {
        return Err(Error::InvalidParameter("dimension must be positive".into()));
    }
    if mu.is_empty() {
        return Err(Error::WindowNotCovered("empty one-dimensional list".into()));
    }
    let re_min = mu.iter().map(|m| m.re).fold(f64::INFINITY, f64::min);
    let needed = window.re_max - (d - 1) as f64 * re_min;
    if needed > complete_to {
        return Err(Error::WindowNotCovered(format!(
            "sums up to Re {} need factors up to Re {needed}, list complete to {complete_to}",
            window.re_max
        )));
    }
    let mut sums = Vec::new();
    let mut idx = vec![0usize; d];
    loop {
        let z: Complex64 = idx.iter().map(|&i| mu[i]).sum();
        if window.contains(z) {
            sums.push(Level { lambda: z, multiplicity: 1 });
        }
        // odometer over all ordered tuples
        let mut k = 0;
        while k < d {
            idx[k] += 1;
            if idx[k] < mu.len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
        if k == d {
            break;
        }
    }
    Ok(merge_levels(sums, MERGE_TOL))
}

/// Cube `(−s, s)^d` from the one-dimensional problem `p1`.
///
/// The 1-D eigenvalues are searched in `search`, whose right edge is the
/// completeness bound handed to [`assemble_cube_with`].
pub fn cube_modes(p1: &TruncatedProblem, d: usize, search: &Rect, window: &Rect, tol: f64) -> Result<ModeTable> {
    let recs = find_eigenvalues(p1, search, tol)?;
    let mu: Vec<Complex64> = recs
        .iter()
        .flat_map(|r| std::iter::repeat_n(r.lambda, r.multiplicity as usize))
        .collect();
    // fail early if the search cannot certify the window
    assemble_cube_with(&mu, search.re_max, d, window)?;
    Ok(ModeTable {
        geometry: Geometry::Cube { d, s: p1.size() },
        window: *window,
        modes: vec![Mode { l: None, angular_multiplicity: 1, eigenvalues: recs }],
        l_max: None,
    })
}

/// Radial problem of angular index `l` for a ball or annulus.
pub fn radial_problem(geometry: &Geometry, potential: &PotentialSpec, l: u32, bc: BoundaryCondition) -> Result<TruncatedProblem> {
    match *geometry {
        Geometry::Ball3d { s } => {
            TruncatedProblem::radial(OdeForm::new(OdeKind::Radial3d { l }, potential.clone()), s, bc)
        }
        Geometry::Annulus2d { r_in, s } => TruncatedProblem::new(
            OdeForm::new(OdeKind::Radial2d { l }, potential.clone()),
            r_in,
            s,
            BoundaryCondition::Dirichlet,
            bc,
        ),
        Geometry::Cube { .. } => Err(Error::InvalidParameter("cubes have no radial modes".into())),
    }
}

/// Angular functions per radial mode: `2l + 1` spherical harmonics in 3-D,
/// `e^{±ilφ}` in 2-D.
pub fn angular_multiplicity(geometry: &Geometry, l: u32) -> u32 {
    match geometry {
        Geometry::Ball3d { .. } => 2 * l + 1,
        Geometry::Annulus2d { .. } => {
            if l == 0 {
                1
            } else {
                2
            }
        }
        Geometry::Cube { .. } => 1,
    }
}

/// Per-`l` eigenvalues in `window` for `l = 0, 1, …` until a list comes back
/// empty; the empty list certifies completeness because the angular barrier
/// grows with `l`.
pub fn radial_modes(
    geometry: &Geometry,
    potential: &PotentialSpec,
    window: &Rect,
    bc: BoundaryCondition,
    tol: f64,
) -> Result<ModeTable> {
    radial_modes_capped(geometry, potential, window, bc, tol, L_CAP)
}

pub fn radial_modes_capped(
    geometry: &Geometry,
    potential: &PotentialSpec,
    window: &Rect,
    bc: BoundaryCondition,
    tol: f64,
    l_cap: u32,
) -> Result<ModeTable> {
    let mut modes = Vec::new();
    for l in 0..=l_cap {
        let p = radial_problem(geometry, potential, l, bc)?;
        let eigenvalues = find_eigenvalues(&p, window, tol)?;
        let empty = eigenvalues.is_empty();
        modes.push(Mode { l: Some(l), angular_multiplicity: angular_multiplicity(geometry, l), eigenvalues });
        if empty {
            return Ok(ModeTable { geometry: *geometry, window: *window, modes, l_max: Some(l) });
        }
    }
    Err(Error::LMaxExceeded(l_cap))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::SingularPart;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn as_pairs(v: &[Level]) -> Vec<(Complex64, u32)> {
        v.iter().map(|l| (l.lambda, l.multiplicity)).collect()
    }

    #[test]
    fn harmonic_cube_degeneracies() {
        let mu = [c(1.0, 0.0), c(3.0, 0.0), c(5.0, 0.0), c(7.0, 0.0)];
        let w = Rect::new(0.0, 8.0, -1.0, 1.0).unwrap();
        let got = assemble_cube(&mu, 3, &w).unwrap();
        assert_eq!(as_pairs(&got), vec![(c(3.0, 0.0), 1), (c(5.0, 0.0), 3), (c(7.0, 0.0), 6)]);
        let odd: Vec<Complex64> = (0..8).map(|k| c(2.0 * k as f64 + 1.0, 0.0)).collect();
        let levels = assemble_cube(&odd, 3, &Rect::new(0.0, 14.0, -1.0, 1.0).unwrap()).unwrap();
        for (k, l) in levels.iter().enumerate() {
            assert_eq!(l.multiplicity, degeneracy(k as u32 + 1));
        }
    }

    #[test]
    fn small_sums() {
        let w = Rect::new(0.0, 2.0, -1.0, 1.0).unwrap();
        assert_eq!(as_pairs(&assemble_cube(&[c(1.0, 0.0)], 2, &w).unwrap()), vec![(c(2.0, 0.0), 1)]);
        let w = Rect::new(0.0, 2.0, -1.0, 3.0).unwrap();
        let got = assemble_cube(&[c(1.0, 0.0), c(1.0, 1.0)], 2, &w).unwrap();
        assert_eq!(as_pairs(&got), vec![(c(2.0, 0.0), 1), (c(2.0, 1.0), 2), (c(2.0, 2.0), 1)]);
    }

    #[test]
    fn uncovered_window_is_rejected() {
        let mu = [c(1.0, 0.0), c(3.0, 0.0), c(5.0, 0.0)];
        let w = Rect::new(0.0, 8.0, -1.0, 1.0).unwrap();
        assert!(matches!(assemble_cube(&mu, 3, &w), Err(Error::WindowNotCovered(_))));
        assert!(assemble_cube_with(&mu, 6.0, 3, &w).is_ok());
    }

    #[test]
    fn degeneracy_values() {
        assert_eq!([degeneracy(1), degeneracy(2), degeneracy(3)], [1, 3, 6]);
    }

    #[test]
    fn angular_counts() {
        let b = Geometry::Ball3d { s: 1.0 };
        let a = Geometry::Annulus2d { r_in: 1.0, s: 2.0 };
        assert_eq!([angular_multiplicity(&b, 0), angular_multiplicity(&b, 2)], [1, 5]);
        assert_eq!([angular_multiplicity(&a, 0), angular_multiplicity(&a, 3)], [1, 2]);
    }

    #[test]
    fn ball_levels_match_cube() {
        let w = Rect::new(0.0, 8.0, -1.0, 1.0).unwrap();
        let q = PotentialSpec::new("r^2", "0", SingularPart::None, 3).unwrap();
        let ball = radial_modes(&Geometry::Ball3d { s: 8.0 }, &q, &w, BoundaryCondition::Dirichlet, 1e-10).unwrap();
        assert_eq!(ball.l_max, Some(3));
        let levels = ball.levels(1e-6);
        let want = [(3.0, 1), (5.0, 3), (7.0, 6)];
        assert_eq!(levels.len(), 3);
        for (l, (re, m)) in levels.iter().zip(want) {
            assert!((l.lambda - c(re, 0.0)).norm() < 1e-4, "{:?}", l);
            assert_eq!(l.multiplicity, m);
        }
    }

    #[test]
    fn real_annulus_mode_is_real() {
        let w = Rect::new(0.0, 12.0, -1.0, 1.0).unwrap();
        let q = PotentialSpec::new("r^2", "0", SingularPart::None, 2).unwrap();
        let g = Geometry::Annulus2d { r_in: 1.0, s: 6.0 };
        let p = radial_problem(&g, &q, 0, BoundaryCondition::Dirichlet).unwrap();
        let e = find_eigenvalues(&p, &w, 1e-10).unwrap();
        assert!(!e.is_empty());
        assert!(e.iter().all(|r| r.lambda.im.abs() < 1e-8));
    }

    #[test]
    fn cap_is_reported() {
        let w = Rect::new(0.0, 8.0, -1.0, 1.0).unwrap();
        let q = PotentialSpec::new("r^2", "0", SingularPart::None, 3).unwrap();
        let r = radial_modes_capped(&Geometry::Ball3d { s: 8.0 }, &q, &w, BoundaryCondition::Dirichlet, 1e-10, 1);
        assert_eq!(r, Err(Error::LMaxExceeded(1)));
    }
}
