//! Shooting method for truncated problems on an interval.
//!
//! The eigenvalue condition is the vanishing of the Wronskian of the two
//! one-sided solutions at a matching point. Zeros are counted with the
//! argument principle ([`crate::contour`]) and polished by Newton's method
//! on a frozen integration mesh, where the Wronskian is an analytic
//! function of `λ` to rounding error.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::contour::{counted_rect, locate_zeros, with_margin, ContourOptions};
use crate::error::{Error, Result};
use crate::geometry::{Rect, ScaledComplex};
use crate::ode::{self, IntegratorOptions, OdeForm, OdeKind, ScaledState};
use crate::potentials::{AssumptionCase, PotentialSpec};

/// Endpoint condition. Robin uses the outward normal: `f′(s) + a f(s) = 0`
/// on the right, `−f′(ℓ) + a f(ℓ) = 0` on the left.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BoundaryCondition {
    Dirichlet,
    Robin { a: Complex64 },
    /// Regular solution at `r = 0`; radial forms with `ℓ = 0` only.
    RegularOrigin,
}

impl BoundaryCondition {
    pub fn neumann() -> Self {
        BoundaryCondition::Robin { a: Complex64::new(0.0, 0.0) }
    }
}

/// `W = c·δ(· − site)`, imposed as `f′(site⁺) − f′(site⁻) = c f(site)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interface {
    pub site: f64,
    pub coupling: Complex64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncatedProblem {
    pub form: OdeForm,
    pub left: f64,
    pub right: f64,
    pub left_bc: BoundaryCondition,
    pub right_bc: BoundaryCondition,
    #[serde(default)]
    pub interfaces: Vec<Interface>,
    /// Overrides the default matching point.
    #[serde(default)]
    pub matching_point: Option<f64>,
}

impl TruncatedProblem {
    /// A problem on `[left, right]`; a δ-part of the potential is turned into
    /// an interface when its site lies strictly inside.
    pub fn new(
        form: OdeForm,
        left: f64,
        right: f64,
        left_bc: BoundaryCondition,
        right_bc: BoundaryCondition,
    ) -> Result<Self> {
        let mut interfaces = Vec::new();
        if let Some((site, coupling)) = form.potential.delta() {
            if form.kind == OdeKind::Cartesian && site > left && site < right {
                interfaces.push(Interface { site, coupling });
            }
        }
        let p = TruncatedProblem { form, left, right, left_bc, right_bc, interfaces, matching_point: None };
        p.validate()?;
        Ok(p)
    }

    /// `(−s, s)` with the same condition at both ends.
    pub fn symmetric(spec: PotentialSpec, s: f64, bc: BoundaryCondition) -> Result<Self> {
        TruncatedProblem::new(OdeForm::cartesian(spec), -s, s, bc, bc)
    }

    /// Radial problem on `(0, s)` with the regular solution at the origin.
    pub fn radial(form: OdeForm, s: f64, bc: BoundaryCondition) -> Result<Self> {
        TruncatedProblem::new(form, 0.0, s, BoundaryCondition::RegularOrigin, bc)
    }

    pub fn with_interfaces(mut self, mut interfaces: Vec<Interface>) -> Result<Self> {
        interfaces.sort_by(|a, b| a.site.total_cmp(&b.site));
        self.interfaces = interfaces;
        self.validate()?;
        Ok(self)
    }

    pub fn with_matching_point(mut self, x: f64) -> Result<Self> {
        self.matching_point = Some(x);
        self.validate()?;
        Ok(self)
    }

    /// Same problem on `[left, s]` (or `[−s, s]` when symmetric).
    pub fn resized(&self, s: f64) -> Result<Self> {
        let left = if self.left == -self.right { -s } else { self.left };
        let mut p = TruncatedProblem::new(self.form.clone(), left, s, self.left_bc, self.right_bc)?;
        let extra: Vec<Interface> = self
            .interfaces
            .iter()
            .filter(|i| !p.interfaces.contains(i) && i.site > left && i.site < s)
            .copied()
            .collect();
        p.interfaces.extend(extra);
        p.interfaces.sort_by(|a, b| a.site.total_cmp(&b.site));
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.left.is_finite() && self.right.is_finite() && self.left < self.right) {
            return Err(Error::InvalidParameter(format!("interval [{}, {}]", self.left, self.right)));
        }
        if self.right_bc == BoundaryCondition::RegularOrigin {
            return Err(Error::InvalidParameter("regular_origin is a left-end condition".into()));
        }
        if self.form.kind.is_radial() {
            if self.left < 0.0 {
                return Err(Error::InvalidParameter("radial forms need left endpoint >= 0".into()));
            }
            if self.left == 0.0 && self.left_bc != BoundaryCondition::RegularOrigin {
                return Err(Error::InvalidParameter("radial problems at r = 0 need regular_origin".into()));
            }
        }
        if self.left_bc == BoundaryCondition::RegularOrigin && !(self.form.kind.is_radial() && self.left == 0.0) {
            return Err(Error::InvalidParameter("regular_origin requires a radial form and left endpoint 0".into()));
        }
        for w in self.interfaces.windows(2) {
            if w[0].site >= w[1].site {
                return Err(Error::InvalidParameter("interface sites must be strictly increasing".into()));
            }
        }
        for i in &self.interfaces {
            if !(i.site > self.left && i.site < self.right) {
                return Err(Error::InvalidParameter(format!("interface site {} not interior", i.site)));
            }
        }
        if let Some(xm) = self.matching_point {
            if !(xm > self.left && xm < self.right) {
                return Err(Error::InvalidParameter(format!("matching point {xm} not interior")));
            }
        }
        Ok(())
    }

    pub fn matching_point(&self) -> f64 {
        self.matching_point.unwrap_or(if self.form.kind.is_radial() {
            self.right / 2.0
        } else {
            0.5 * (self.left + self.right)
        })
    }

    /// Truncation size `s` (the right endpoint).
    pub fn size(&self) -> f64 {
        self.right
    }

    // Start point of the left solution (offset from r = 0 for the series start).
    fn left_start(&self) -> f64 {
        if self.left_bc == BoundaryCondition::RegularOrigin {
            radial_start_radius(self.right)
        } else {
            self.left
        }
    }
}

/// Starting radius of the regular series solution.
pub fn radial_start_radius(s: f64) -> f64 {
    1e-3f64.min(s / 1e3)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenRecord {
    pub lambda: Complex64,
    pub multiplicity: u32,
    pub residual: f64,
    pub s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShootingOptions {
    /// Integrator tolerance while sampling contours.
    pub count_tol: f64,
    /// Integrator tolerance while polishing.
    pub polish_tol: f64,
    /// Normalised `|w|` below which a contour point counts as a zero.
    pub clearance: f64,
    /// Boxes narrower than this keep their winding as a multiplicity.
    pub cluster_diameter: f64,
    pub newton_max_iter: usize,
    pub contour: ContourOptions,
}

impl Default for ShootingOptions {
    fn default() -> Self {
        ShootingOptions {
            count_tol: 1e-9,
            polish_tol: 1e-12,
            clearance: 1e-14,
            cluster_diameter: 1e-6,
            newton_max_iter: 40,
            contour: ContourOptions::default(),
        }
    }
}

/// Wronskian at the matching point. `w` is normalised by the max-norms of
/// the two one-sided states, so `|w| ≤ 2`; the true Wronskian is
/// `w · e^{log_scale}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MissDistance {
    pub w: Complex64,
    pub log_scale: f64,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Side {
    Left,
    Right,
}

// Integrates one side to the matching point. `step` integrates a segment
// given (segment index, from, to, state).
fn shoot_side<S>(p: &TruncatedProblem, lambda: Complex64, side: Side, mut step: S) -> Result<ScaledState>
where
    S: FnMut(usize, f64, f64, ScaledState) -> Result<ScaledState>,
{
    let xm = p.matching_point();
    let (mut x, mut state) = match side {
        Side::Left => {
            let x0 = p.left_start();
            let st = match p.left_bc {
                BoundaryCondition::Dirichlet => ScaledState::new(Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)),
                BoundaryCondition::Robin { a } => ScaledState::new(Complex64::new(1.0, 0.0), a),
                BoundaryCondition::RegularOrigin => ode::radial_series_start(&p.form, lambda, x0)?,
            };
            (x0, st)
        }
        Side::Right => {
            let st = match p.right_bc {
                BoundaryCondition::Dirichlet => ScaledState::new(Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)),
                BoundaryCondition::Robin { a } => ScaledState::new(Complex64::new(1.0, 0.0), -a),
                BoundaryCondition::RegularOrigin => unreachable!("validated"),
            };
            (p.right, st)
        }
    };
    let sites: Vec<&Interface> = match side {
        Side::Left => p.interfaces.iter().filter(|i| i.site < xm).collect(),
        Side::Right => p.interfaces.iter().rev().filter(|i| i.site >= xm).collect(),
    };
    let mut seg = 0;
    for i in sites {
        state = step(seg, x, i.site, state)?;
        seg += 1;
        let jump = i.coupling * state.value;
        state.derivative += match side {
            Side::Left => jump,
            Side::Right => -jump,
        };
        state = state.renormalized();
        x = i.site;
    }
    step(seg, x, xm, state)
}

fn combine(l: &ScaledState, r: &ScaledState) -> ScaledComplex {
    let (w, ls) = ode::wronskian(l, r);
    ScaledComplex::new(w, ls)
}

fn miss_distance_tol(p: &TruncatedProblem, lambda: Complex64, tol: f64) -> Result<MissDistance> {
    if !(lambda.re.is_finite() && lambda.im.is_finite()) {
        return Err(Error::InvalidParameter("lambda must be finite".into()));
    }
    let adaptive = |_: usize, a: f64, b: f64, s: ScaledState| ode::integrate(&p.form, lambda, a, b, s, tol);
    let l = shoot_side(p, lambda, Side::Left, adaptive)?;
    let r = shoot_side(p, lambda, Side::Right, adaptive)?;
    let raw = combine(&l, &r);
    let norm = l.max_norm() * r.max_norm();
    Ok(MissDistance { w: raw.mantissa / norm, log_scale: raw.log_scale + norm.ln() })
}

/// The Wronskian miss-distance at `lambda` with the polishing tolerance.
pub fn miss_distance(p: &TruncatedProblem, lambda: Complex64) -> Result<MissDistance> {
    miss_distance_tol(p, lambda, ShootingOptions::default().polish_tol)
}

pub fn miss_distance_with(p: &TruncatedProblem, lambda: Complex64, opts: &ShootingOptions) -> Result<MissDistance> {
    miss_distance_tol(p, lambda, opts.polish_tol)
}

// Contour evaluator: phase of w, refusing points too close to a zero.
fn contour_fn<'a>(p: &'a TruncatedProblem, opts: &'a ShootingOptions) -> impl FnMut(Complex64) -> Result<Complex64> + 'a {
    move |z| {
        let m = miss_distance_tol(p, z, opts.count_tol)?;
        if m.w.norm() < opts.clearance {
            Err(Error::ZeroOnContour(z))
        } else {
            Ok(m.w)
        }
    }
}

/// Number of eigenvalues (with multiplicity) in `rect`.
pub fn count_eigenvalues(p: &TruncatedProblem, rect: &Rect) -> Result<usize> {
    count_eigenvalues_with(p, rect, &ShootingOptions::default())
}

pub fn count_eigenvalues_with(p: &TruncatedProblem, rect: &Rect, opts: &ShootingOptions) -> Result<usize> {
    let mut f = contour_fn(p, opts);
    Ok(counted_rect(&mut f, rect, &opts.contour)?.1 as usize)
}

/// Integration meshes of both sides, one per segment between interfaces.
#[derive(Debug, Clone, Default)]
struct Meshes {
    left: Vec<Vec<f64>>,
    right: Vec<Vec<f64>>,
}

fn record_meshes(p: &TruncatedProblem, lambda: Complex64, tol: f64) -> Result<(Meshes, ScaledComplex)> {
    let opts = IntegratorOptions::with_tol(tol);
    let mut meshes = Meshes::default();
    let run = |side: Side, store: &mut Vec<Vec<f64>>| {
        shoot_side(p, lambda, side, |_, a, b, s| {
            let (st, mesh) = ode::integrate_recording(&p.form, lambda, a, b, s, &opts)?;
            store.push(mesh);
            Ok(st)
        })
    };
    let l = run(Side::Left, &mut meshes.left)?;
    let r = run(Side::Right, &mut meshes.right)?;
    Ok((meshes, combine(&l, &r)))
}

fn wronskian_on_mesh(p: &TruncatedProblem, lambda: Complex64, meshes: &Meshes) -> Result<ScaledComplex> {
    let l = shoot_side(p, lambda, Side::Left, |k, _, _, s| ode::integrate_on_mesh(&p.form, lambda, &meshes.left[k], s))?;
    let r = shoot_side(p, lambda, Side::Right, |k, _, _, s| ode::integrate_on_mesh(&p.form, lambda, &meshes.right[k], s))?;
    Ok(combine(&l, &r))
}

/// Newton's method on a frozen mesh. `None` when the iterate leaves `region`.
fn newton(
    p: &TruncatedProblem,
    start: Complex64,
    region: &Rect,
    step_tol: f64,
    opts: &ShootingOptions,
) -> Result<Option<Complex64>> {
    let mut lambda = start;
    for _round in 0..2 {
        let (meshes, _) = record_meshes(p, lambda, opts.polish_tol)?;
        let mut converged = false;
        let mut last_step = f64::INFINITY;
        for _ in 0..opts.newton_max_iter {
            let delta = 1e-6 * (1.0 + lambda.norm());
            let w0 = wronskian_on_mesh(p, lambda, &meshes)?;
            if w0.mantissa == Complex64::new(0.0, 0.0) {
                converged = true;
                break;
            }
            let wp = wronskian_on_mesh(p, lambda + delta, &meshes)?.relative_to(w0.log_scale);
            let wm = wronskian_on_mesh(p, lambda - delta, &meshes)?.relative_to(w0.log_scale);
            let dw = (wp - wm) / (2.0 * delta);
            let step = w0.mantissa / dw;
            if !(step.re.is_finite() && step.im.is_finite()) {
                return Ok(None);
            }
            lambda -= step;
            if !region.contains(lambda) {
                return Ok(None);
            }
            let size = step.norm();
            // stop at the tolerance, or once rounding noise stops the decrease
            if size <= step_tol.max(1e-15 * (1.0 + lambda.norm())) || (size <= 1e2 * step_tol && size > 0.5 * last_step) {
                converged = true;
                break;
            }
            last_step = size;
        }
        if !converged {
            return Err(Error::NonConvergence(lambda));
        }
    }
    Ok(Some(lambda))
}

/// All eigenvalues in `rect` with multiplicities, sorted by `(Re, Im)`.
pub fn find_eigenvalues(p: &TruncatedProblem, rect: &Rect, tol: f64) -> Result<Vec<EigenRecord>> {
    find_eigenvalues_with(p, rect, tol, &ShootingOptions::default())
}

pub fn find_eigenvalues_with(
    p: &TruncatedProblem,
    rect: &Rect,
    tol: f64,
    opts: &ShootingOptions,
) -> Result<Vec<EigenRecord>> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tol = {tol} must be positive")));
    }
    let mut f = contour_fn(p, opts);
    let (r, total) = counted_rect(&mut f, rect, &opts.contour)?;
    let min_diam = tol.max(opts.cluster_diameter);
    let polish = |b: &Rect| match newton(p, b.center(), &with_margin(b, 0.1), tol, opts) {
        Err(Error::NonConvergence(_)) => Ok(None),
        other => other,
    };
    let zeros = locate_zeros(&mut f, polish, &r, total, min_diam, &opts.contour)?;
    zeros
        .into_iter()
        .map(|z| {
            let res = miss_distance_tol(p, z.z, opts.polish_tol)?;
            Ok(EigenRecord { lambda: z.z, multiplicity: z.multiplicity as u32, residual: res.w.norm(), s: p.size() })
        })
        .collect()
}

/// A normalised eigenfunction sampled on a uniform grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Eigenfunction {
    pub x: Vec<f64>,
    pub values: Vec<Complex64>,
    pub h: f64,
    /// Relative mismatch of the one-sided states at the matching point
    /// after scaling the right solution onto the left one.
    pub derivative_mismatch: f64,
}

/// Residual `|w|` above which [`eigenfunction`] rejects `lambda`.
pub const EIGENFUNCTION_RESIDUAL: f64 = 1e-6;

// Samples one side at the given points (ordered away from its start).
fn sample_side(
    p: &TruncatedProblem,
    lambda: Complex64,
    side: Side,
    points: &[f64],
    tol: f64,
) -> Result<(Vec<ScaledState>, ScaledState)> {
    let mut samples = Vec::with_capacity(points.len());
    let mut idx = 0;
    let end = shoot_side(p, lambda, side, |_, a, b, mut s| {
        let fwd = b >= a;
        let mut x = a;
        while idx < points.len() {
            let t = points[idx];
            let inside = if fwd { t >= a && t <= b } else { t <= a && t >= b };
            if !inside {
                break;
            }
            s = ode::integrate(&p.form, lambda, x, t, s, tol)?;
            x = t;
            samples.push(s);
            idx += 1;
        }
        ode::integrate(&p.form, lambda, x, b, s, tol)
    })?;
    Ok((samples, end))
}

/// Samples the eigenfunction at `n ≥ 2` uniformly spaced points on
/// `[ℓ, s]`, normalised so that `Σ|φᵢ|² h = 1`.
pub fn eigenfunction(p: &TruncatedProblem, lambda: Complex64, n: usize) -> Result<Eigenfunction> {
    let opts = ShootingOptions::default();
    if n < 2 {
        return Err(Error::InvalidParameter("eigenfunction grid needs at least 2 points".into()));
    }
    let res = miss_distance_tol(p, lambda, opts.polish_tol)?;
    if res.w.norm() > EIGENFUNCTION_RESIDUAL {
        return Err(Error::NotAnEigenvalue(lambda, res.w.norm()));
    }
    let h = (p.right - p.left) / (n - 1) as f64;
    let x: Vec<f64> = (0..n).map(|i| if i == n - 1 { p.right } else { p.left + i as f64 * h }).collect();
    let xm = p.matching_point();
    let x0 = p.left_start();
    let near_origin: Vec<f64> = x.iter().copied().filter(|&t| t < x0).collect();
    let left_pts: Vec<f64> = x.iter().copied().filter(|&t| t >= x0 && t < xm).collect();
    let right_pts: Vec<f64> = x.iter().rev().copied().filter(|&t| t >= xm).collect();
    let (mut left, l_end) = sample_side(p, lambda, Side::Left, &left_pts, opts.polish_tol)?;
    let (mut right, r_end) = sample_side(p, lambda, Side::Right, &right_pts, opts.polish_tol)?;
    right.reverse();

    // scale the right solution onto the left one by least squares on (f, f')
    let num = l_end.value * r_end.value.conj() + l_end.derivative * r_end.derivative.conj();
    let den = r_end.value.norm_sqr() + r_end.derivative.norm_sqr();
    if den == 0.0 || num.norm() == 0.0 {
        return Err(Error::MatchFailure(format!("degenerate one-sided state at x = {xm}")));
    }
    let ratio = num / den;
    let shift = l_end.log_scale - r_end.log_scale;
    let scaled = |s: &ScaledState| ScaledComplex::new(s.value * ratio, s.log_scale + shift);
    let mismatch = (l_end.derivative - r_end.derivative * ratio).norm().max((l_end.value - r_end.value * ratio).norm())
        / l_end.max_norm();

    let mut vals: Vec<ScaledComplex> = Vec::with_capacity(n);
    for &t in &near_origin {
        let v = if t > 0.0 {
            let s = ode::radial_series_start(&p.form, lambda, t)?;
            ScaledComplex::new(s.value, s.log_scale)
        } else if p.form.kind.angular_index() == Some(0) {
            ScaledComplex::new(Complex64::new(1.0, 0.0), 0.0)
        } else {
            ScaledComplex::new(Complex64::new(0.0, 0.0), 0.0)
        };
        vals.push(v);
    }
    vals.extend(left.drain(..).map(|s| ScaledComplex::new(s.value, s.log_scale)));
    vals.extend(right.iter().map(scaled));
    let top = vals.iter().filter(|v| v.mantissa.norm() > 0.0).map(|v| v.ln_abs()).fold(f64::NEG_INFINITY, f64::max);
    if !top.is_finite() {
        return Err(Error::MatchFailure("eigenfunction vanishes on the grid".into()));
    }
    let mut values: Vec<Complex64> = vals.iter().map(|v| v.relative_to(top)).collect();
    let norm = (values.iter().map(|v| v.norm_sqr()).sum::<f64>() * h).sqrt();
    values.iter_mut().for_each(|v| *v /= norm);
    Ok(Eigenfunction { x, values, h, derivative_mismatch: mismatch })
}

/// `(Σ_{|xᵢ|>r} |φᵢ|² h)^{1/2}`.
pub fn tail_mass(phi: &Eigenfunction, r: f64) -> Result<f64> {
    if !(r >= 0.0) {
        return Err(Error::OutOfRange(format!("tail radius {r} must be >= 0")));
    }
    let s: f64 = phi.x.iter().zip(&phi.values).filter(|(x, _)| x.abs() > r).map(|(_, v)| v.norm_sqr()).sum();
    Ok((s * phi.h).sqrt())
}

/// Decay bound `D / inf_{r ≤ |x| ≤ r_max} |Q₀|^ι` with `ι = 1/2` in the
/// sectorial case and `1` in the accretive case, the infimum taken over
/// `samples` points per side along the first axis.
pub fn decay_bound(spec: &PotentialSpec, case: AssumptionCase, d: f64, r: f64, r_max: f64, samples: usize) -> Result<f64> {
    if !(r >= 0.0 && r_max >= r) {
        return Err(Error::OutOfRange(format!("bad radii {r}, {r_max}")));
    }
    let iota = match case {
        AssumptionCase::Sectorial => 0.5,
        AssumptionCase::Accretive => 1.0,
    };
    let n = samples.max(2);
    let mut inf = f64::INFINITY;
    for k in 0..n {
        let t = r + (r_max - r) * k as f64 / (n - 1) as f64;
        for x in [t, -t] {
            let mut p = vec![0.0; spec.dimension];
            p[0] = x;
            inf = inf.min(spec.q0_at(&p).norm());
        }
    }
    Ok(d / inf.powf(iota))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::SingularPart;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn spec(q: &str) -> PotentialSpec {
        PotentialSpec::new(q, "0", SingularPart::None, 1).unwrap()
    }

    fn free_box() -> TruncatedProblem {
        TruncatedProblem::new(
            OdeForm::cartesian(spec("0")),
            0.0,
            PI,
            BoundaryCondition::Dirichlet,
            BoundaryCondition::Dirichlet,
        )
        .unwrap()
    }

    #[test]
    fn miss_distance_examples() {
        let p = free_box();
        let m = miss_distance(&p, c(1.0, 0.0)).unwrap();
        assert!((m.w * m.log_scale.exp()).norm() < 1e-8);
        assert!(miss_distance(&p, c(2.0, 0.0)).unwrap().w.norm() >= 0.1);
        let h = TruncatedProblem::symmetric(spec("x^2"), 8.0, BoundaryCondition::Dirichlet).unwrap();
        assert!(miss_distance(&h, c(1.0, 0.0)).unwrap().w.norm() < 1e-6);
    }

    #[test]
    fn counting_examples() {
        let p = free_box();
        assert_eq!(count_eigenvalues(&p, &Rect::new(0.5, 4.5, -1.0, 1.0).unwrap()).unwrap(), 2);
        let h = TruncatedProblem::symmetric(spec("x^2"), 8.0, BoundaryCondition::Dirichlet).unwrap();
        assert_eq!(count_eigenvalues(&h, &Rect::new(0.0, 6.0, -1.0, 1.0).unwrap()).unwrap(), 3);
    }

    #[test]
    fn dirichlet_box_eigenvalues() {
        let p = free_box();
        let e = find_eigenvalues(&p, &Rect::new(0.5, 9.5, -1.0, 1.0).unwrap(), 1e-10).unwrap();
        assert_eq!(e.len(), 3);
        for (r, k) in e.iter().zip([1.0, 4.0, 9.0]) {
            assert_eq!(r.multiplicity, 1);
            assert!((r.lambda - k).norm() < 1e-8, "{:?}", r.lambda);
        }
    }

    #[test]
    fn robin_box() {
        // -f'' = k^2 f, f'(0) = f(0), f'(1) = -f(1): tan k = 2k/(k^2-1)
        let p = TruncatedProblem::new(
            OdeForm::cartesian(spec("0")),
            0.0,
            1.0,
            BoundaryCondition::Robin { a: c(1.0, 0.0) },
            BoundaryCondition::Robin { a: c(1.0, 0.0) },
        )
        .unwrap();
        let e = find_eigenvalues(&p, &Rect::new(0.5, 10.0, -1.0, 1.0).unwrap(), 1e-10).unwrap();
        // k = 1.3065..., next root k = 3.67 lies outside
        assert_eq!(e.len(), 1);
        let k = e[0].lambda.re.sqrt();
        assert!((k.tan() - 2.0 * k / (k * k - 1.0)).abs() < 1e-7);
    }

    #[test]
    fn harmonic_ground_state() {
        let p = TruncatedProblem::symmetric(spec("x^2"), 8.0, BoundaryCondition::Dirichlet).unwrap();
        let phi = eigenfunction(&p, c(1.0, 0.0), 1601).unwrap();
        // fix the global phase at the centre
        let mid = phi.values[800];
        let phase = mid.conj() / mid.norm();
        let err = phi
            .x
            .iter()
            .zip(&phi.values)
            .map(|(x, v)| (v * phase - PI.powf(-0.25) * (-x * x / 2.0).exp()).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-5, "{err}");
        // only the node at x = 0 is excluded
        let t0 = tail_mass(&phi, 0.0).unwrap();
        assert!((t0 * t0 + phi.values[800].norm_sqr() * phi.h - 1.0).abs() < 1e-12);
        assert_eq!(tail_mass(&phi, 9.0).unwrap(), 0.0);
        assert!(tail_mass(&phi, -1.0).is_err());
    }

    #[test]
    fn not_an_eigenvalue() {
        assert!(matches!(eigenfunction(&free_box(), c(2.0, 0.0), 100), Err(Error::NotAnEigenvalue(..))));
    }

    #[test]
    fn sine_mode() {
        let phi = eigenfunction(&free_box(), c(4.0, 0.0), 401).unwrap();
        let k = phi.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        assert!((k - (2.0 / PI).sqrt()).abs() < 1e-3);
        assert!(phi.derivative_mismatch < 1e-8);
    }

    #[test]
    fn validation() {
        let f = OdeForm::cartesian(spec("x^2"));
        let d = BoundaryCondition::Dirichlet;
        assert!(TruncatedProblem::new(f.clone(), 1.0, -1.0, d, d).is_err());
        assert!(TruncatedProblem::new(f.clone(), -1.0, 1.0, BoundaryCondition::RegularOrigin, d).is_err());
        let p = TruncatedProblem::new(f, -1.0, 1.0, d, d).unwrap();
        assert!(p.clone().with_interfaces(vec![Interface { site: 2.0, coupling: c(1.0, 0.0) }]).is_err());
        assert!(p.with_matching_point(1.0).is_err());
        let spec = PotentialSpec::builtin("shifted_complex_harmonic_delta").unwrap();
        let q = TruncatedProblem::symmetric(spec, 8.0, d).unwrap();
        assert_eq!(q.interfaces.len(), 1);
    }
}
