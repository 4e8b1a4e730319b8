use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::banded::{BandedOperator, TriLu};
use crate::contour::{counted_rect, locate_zeros, with_margin, ContourOptions};
use crate::error::{Error, Result};
use crate::geometry::Rect;

/// Eigenvalue of a matrix with its algebraic multiplicity (sub-box winding).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatrixEigenvalue {
    pub lambda: Complex64,
    pub multiplicity: u32,
}

// Phase of det(A − zI); a breakdown means z hit an eigenvalue.
fn det_phase_fn(a: &BandedOperator) -> impl FnMut(Complex64) -> Result<Complex64> + '_ {
    move |z| match TriLu::factor(a, z) {
        Ok(lu) => Ok(lu.det_phase()),
        Err(Error::PivotBreakdown(_)) => Err(Error::ZeroOnContour(z)),
        Err(e) => Err(e),
    }
}

/// `p(λ)/p′(λ)` for `p(λ) = det(A − λI)` from the three-term recurrence of
/// the leading principal minors, rescaled to avoid overflow.
pub fn newton_ratio(a: &BandedOperator, lambda: Complex64) -> Complex64 {
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::default();
    // (p_{k-1}, p_{k-2}) and derivatives
    let (mut p1, mut p2, mut d1, mut d2) = (one, zero, zero, zero);
    for k in 0..a.n {
        let t = a.diag[k] - lambda;
        let bc = if k > 0 { a.sub[k - 1] * a.sup[k - 1] } else { zero };
        let p = t * p1 - bc * p2;
        let d = -p1 + t * d1 - bc * d2;
        p2 = p1;
        p1 = p;
        d2 = d1;
        d1 = d;
        let m = p1.norm().max(d1.norm()).max(p2.norm()).max(d2.norm());
        if m > 1e100 || (m < 1e-100 && m > 0.0) {
            let s = 1.0 / m;
            p1 *= s;
            p2 *= s;
            d1 *= s;
            d2 *= s;
        }
    }
    p1 / d1
}

fn newton_polish(a: &BandedOperator, start: Complex64, region: &Rect, tol: f64) -> Option<Complex64> {
    let mut lambda = start;
    let mut last = f64::INFINITY;
    for _ in 0..60 {
        let step = newton_ratio(a, lambda);
        if !(step.re.is_finite() && step.im.is_finite()) {
            return if step.norm().is_nan() && region.contains(lambda) { Some(lambda) } else { None };
        }
        lambda -= step;
        if !region.contains(lambda) {
            return None;
        }
        let s = step.norm();
        if s <= tol * (1.0 + lambda.norm()) || (s <= 1e3 * tol * (1.0 + lambda.norm()) && s > 0.5 * last) {
            return Some(lambda);
        }
        last = s;
    }
    None
}

/// Eigenvalues of `a` in `rect` via the winding of `det(A − λI)`.
pub fn eigs_in_rect(a: &BandedOperator, rect: &Rect) -> Result<Vec<MatrixEigenvalue>> {
    eigs_in_rect_with(a, rect, 1e-12, &ContourOptions::default())
}

pub fn eigs_in_rect_with(a: &BandedOperator, rect: &Rect, tol: f64, opts: &ContourOptions) -> Result<Vec<MatrixEigenvalue>> {
    let mut f = det_phase_fn(a);
    let (r, total) = counted_rect(&mut f, rect, opts)?;
    let polish = |b: &Rect| Ok(newton_polish(a, b.center(), &with_margin(b, 0.1), tol));
    let zeros = locate_zeros(&mut f, polish, &r, total, 1e-8 * (1.0 + rect.diameter()), opts)?;
    Ok(zeros.into_iter().map(|z| MatrixEigenvalue { lambda: z.z, multiplicity: z.multiplicity as u32 }).collect())
}

/// Options of the smallest-singular-value iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SminOptions {
    pub rel_tol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for SminOptions {
    fn default() -> Self {
        SminOptions { rel_tol: 1e-8, max_iter: 500, seed: 0 }
    }
}

/// Smallest singular value of `A − λI` by inverse power iteration on
/// `((A − λI)^*(A − λI))^{−1}`. `Ok(0.0)` on pivot breakdown; on the
/// iteration cap the best estimate is returned inside
/// [`Error::IterationCapExceeded`].
pub fn smallest_singular_value(a: &BandedOperator, lambda: Complex64, opts: &SminOptions) -> Result<f64> {
    let lu = match TriLu::factor(a, lambda) {
        Ok(lu) => lu,
        Err(Error::PivotBreakdown(_)) => return Ok(0.0),
        Err(e) => return Err(e),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut x: Vec<Complex64> = (0..a.n).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    let norm = |v: &[Complex64]| v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    let nx = norm(&x);
    x.iter_mut().for_each(|c| *c /= nx);
    let mut nu_old = 0.0;
    let mut nu = 0.0;
    for _ in 0..opts.max_iter {
        lu.solve_adjoint(&mut x);
        let ny = norm(&x);
        nu = ny * ny;
        lu.solve(&mut x);
        let nz = norm(&x);
        if !(nz.is_finite() && nz > 0.0) {
            return Ok(0.0);
        }
        x.iter_mut().for_each(|c| *c /= nz);
        if (nu - nu_old).abs() <= opts.rel_tol * nu {
            return Ok(1.0 / nu.sqrt());
        }
        nu_old = nu;
    }
    Err(Error::IterationCapExceeded(1.0 / nu.sqrt()))
}

/// `‖(A − λI)^{−1}‖₂ = 1/smin`; `+∞` when `λ` is an eigenvalue to machine precision.
pub fn resolvent_norm(a: &BandedOperator, lambda: Complex64) -> Result<f64> {
    resolvent_norm_with(a, lambda, &SminOptions::default())
}

pub fn resolvent_norm_with(a: &BandedOperator, lambda: Complex64, opts: &SminOptions) -> Result<f64> {
    match smallest_singular_value(a, lambda, opts) {
        Ok(s) => Ok(if s == 0.0 { f64::INFINITY } else { 1.0 / s }),
        Err(Error::IterationCapExceeded(s)) => Err(Error::IterationCapExceeded(1.0 / s)),
        Err(e) => Err(e),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PseudospectrumGrid {
    pub rect: Rect,
    pub nx: usize,
    pub ny: usize,
    /// `smin(A − λI)` in row-major order, row `j` at `Im = im_min + j·dy`.
    pub values: Vec<f64>,
    pub eps_levels: Vec<f64>,
    /// Per level, the grid points with `smin < ε`.
    pub level_sets: Vec<Vec<Complex64>>,
}

impl PseudospectrumGrid {
    pub fn point(&self, i: usize, j: usize) -> Complex64 {
        let dx = self.rect.width() / (self.nx - 1) as f64;
        let dy = self.rect.height() / (self.ny - 1) as f64;
        Complex64::new(self.rect.re_min + i as f64 * dx, self.rect.im_min + j as f64 * dy)
    }

    pub fn smin(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.nx + i]
    }
}

/// `smin(A − λI)` on an `nx × ny` grid over `rect` with strict level sets
/// `{smin < ε}`.
pub fn pseudospectrum(a: &BandedOperator, rect: &Rect, nx: usize, ny: usize, eps_levels: &[f64]) -> Result<PseudospectrumGrid> {
    pseudospectrum_with(a, rect, nx, ny, eps_levels, &SminOptions::default())
}

pub fn pseudospectrum_with(
    a: &BandedOperator,
    rect: &Rect,
    nx: usize,
    ny: usize,
    eps_levels: &[f64],
    opts: &SminOptions,
) -> Result<PseudospectrumGrid> {
    if nx < 8 || ny < 8 {
        return Err(Error::InvalidParameter(format!("grid {nx}x{ny} must be at least 8x8")));
    }
    if eps_levels.iter().any(|e| !(*e > 0.0)) {
        return Err(Error::InvalidParameter("eps levels must be positive".into()));
    }
    let mut grid =
        PseudospectrumGrid { rect: *rect, nx, ny, values: Vec::with_capacity(nx * ny), eps_levels: eps_levels.to_vec(), level_sets: vec![] };
    for j in 0..ny {
        for i in 0..nx {
            let z = grid.point(i, j);
            let s = match smallest_singular_value(a, z, opts) {
                Ok(s) => s,
                Err(Error::IterationCapExceeded(best)) => best,
                Err(e) => return Err(e),
            };
            grid.values.push(s);
        }
    }
    grid.level_sets = eps_levels
        .iter()
        .map(|&eps| {
            let mut pts = Vec::new();
            for j in 0..ny {
                for i in 0..nx {
                    if grid.smin(i, j) < eps {
                        pts.push(grid.point(i, j));
                    }
                }
            }
            pts
        })
        .collect();
    Ok(grid)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttouchWets {
    pub radii: Vec<f64>,
    pub per_rho: Vec<f64>,
    pub max: f64,
}

fn nearest(z: Complex64, set: &[Complex64]) -> f64 {
    set.iter().map(|w| (z - w).norm()).fold(f64::INFINITY, f64::min)
}

/// For each `ρ`: `max{sup_{a∈A∩B̄ρ} dist(a, B), sup_{b∈B∩B̄ρ} dist(b, A)}`,
/// where an empty restriction contributes `0`.
pub fn attouch_wets(set_a: &[Complex64], set_b: &[Complex64], radii: &[f64]) -> Result<AttouchWets> {
    if set_a.is_empty() || set_b.is_empty() {
        return Err(Error::EmptySet);
    }
    if radii.iter().any(|r| !(*r > 0.0)) {
        return Err(Error::InvalidParameter("radii must be positive".into()));
    }
    // nearest distances do not depend on ρ
    let da: Vec<(f64, f64)> = set_a.iter().map(|z| (z.norm(), nearest(*z, set_b))).collect();
    let db: Vec<(f64, f64)> = set_b.iter().map(|z| (z.norm(), nearest(*z, set_a))).collect();
    let per_rho: Vec<f64> = radii
        .iter()
        .map(|&rho| {
            da.iter().chain(&db).filter(|(r, _)| *r <= rho).map(|(_, d)| *d).fold(0.0, f64::max)
        })
        .collect();
    let max = per_rho.iter().copied().fold(0.0, f64::max);
    Ok(AttouchWets { radii: radii.to_vec(), per_rho, max })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::discretize;
    use crate::ode::OdeForm;
    use crate::potentials::{PotentialSpec, SingularPart};
    use crate::shooting::{BoundaryCondition, TruncatedProblem};
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn free(n: usize) -> BandedOperator {
        let d = BoundaryCondition::Dirichlet;
        let s = PotentialSpec::new("0", "0", SingularPart::None, 1).unwrap();
        discretize(&TruncatedProblem::new(OdeForm::cartesian(s), 0.0, PI, d, d).unwrap(), n).unwrap()
    }

    #[test]
    fn diagonal_matrix_eigenvalue() {
        let a = BandedOperator::from_diagonal(vec![c(1.0, 0.0), c(2.0, 1.0), c(5.0, 0.0)]).unwrap();
        let e = eigs_in_rect(&a, &Rect::new(1.5, 2.5, 0.5, 1.5).unwrap()).unwrap();
        assert_eq!(e.len(), 1);
        assert_eq!(e[0].multiplicity, 1);
        assert!((e[0].lambda - c(2.0, 1.0)).norm() < 1e-12);
    }

    #[test]
    fn repeated_diagonal_entry_has_multiplicity_two() {
        let a = BandedOperator::from_diagonal(vec![c(3.0, 0.0), c(3.0, 0.0), c(1.0, 0.0)]).unwrap();
        let e = eigs_in_rect(&a, &Rect::new(2.0, 4.0, -1.0, 1.0).unwrap()).unwrap();
        assert_eq!(e.len(), 1, "{e:?}");
        assert_eq!(e[0].multiplicity, 2);
    }

    #[test]
    fn laplacian_eigenvalues() {
        let a = free(400);
        let e = eigs_in_rect(&a, &Rect::new(0.5, 4.5, -1.0, 1.0).unwrap()).unwrap();
        assert_eq!(e.len(), 2);
        let h = a.h;
        for (ev, k) in e.iter().zip([1.0f64, 2.0]) {
            let exact = 4.0 / (h * h) * (k * h / 2.0).sin().powi(2);
            assert!((ev.lambda - exact).norm() < 1e-9);
        }
        let e200 = eigs_in_rect(&free(200), &Rect::new(0.5, 1.5, -1.0, 1.0).unwrap()).unwrap();
        assert!((e200[0].lambda.re - 1.0).abs() < 1e-3);
    }

    #[test]
    fn selfadjoint_resolvent_norm() {
        let a = free(400);
        let h = a.h;
        let l1 = 4.0 / (h * h) * (h / 2.0).sin().powi(2);
        let l2 = 4.0 / (h * h) * h.sin().powi(2);
        assert!((resolvent_norm(&a, c(0.0, 0.0)).unwrap() - 1.0 / l1).abs() < 1e-7);
        // the two smallest singular values nearly coincide here, so the
        // iterate settles anywhere between them
        let r = resolvent_norm(&a, c(2.5, 0.0)).unwrap();
        assert!(r <= 1.0 / (2.5 - l1).min(l2 - 2.5) + 1e-12 && r >= 1.0 / (2.5 - l1).max(l2 - 2.5) - 1e-12);
        assert!((r - 1.0 / 1.5).abs() < 1e-3);
    }

    #[test]
    fn selfadjoint_level_set_is_distance_ball() {
        let a = free(400);
        let h = a.h;
        let eig: Vec<f64> = (1..=400).map(|k| 4.0 / (h * h) * (k as f64 * h / 2.0).sin().powi(2)).collect();
        let rect = Rect::new(0.0, 10.0, -1.0, 1.0).unwrap();
        let g = pseudospectrum(&a, &rect, 41, 9, &[0.5]).unwrap();
        for j in 0..g.ny {
            for i in 0..g.nx {
                let z = g.point(i, j);
                let d = eig.iter().map(|e| (z - e).norm()).fold(f64::INFINITY, f64::min);
                // skip points within rounding distance of the level boundary
                if (d - 0.5).abs() > 1e-6 {
                    assert_eq!(g.level_sets[0].contains(&z), d < 0.5, "{z}");
                }
            }
        }
    }

    #[test]
    fn aw_examples() {
        let a = vec![c(0.0, 0.0)];
        let b = vec![c(1.0, 0.0)];
        assert_eq!(attouch_wets(&a, &a, &[1.0, 5.0]).unwrap().max, 0.0);
        assert_eq!(attouch_wets(&a, &b, &[2.0]).unwrap().per_rho, vec![1.0]);
        assert_eq!(attouch_wets(&[], &b, &[2.0]), Err(Error::EmptySet));
        // nothing in a tiny ball around the origin from b, a's point sits at 0
        assert_eq!(attouch_wets(&b, &[c(5.0, 0.0)], &[0.5]).unwrap().per_rho, vec![0.0]);
    }
}
