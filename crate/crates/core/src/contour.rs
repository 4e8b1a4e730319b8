//! Argument-principle zero counting for analytic functions given only
//! through their values (or any positive multiple of them) on a rectangle.
//!
//! The evaluator returns a complex number with the phase of `F(z)`; the
//! magnitude is irrelevant for counting. It may fail with
//! [`Error::ZeroOnContour`] when it detects that `z` sits too close to a zero.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::Rect;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContourOptions {
    /// Initial uniform samples per edge.
    pub samples_per_edge: usize,
    /// Segments are bisected until consecutive phase increments are below this.
    pub max_phase_step: f64,
    /// Smallest admissible segment length relative to the rectangle diameter.
    pub min_segment: f64,
    /// Evaluation budget per contour.
    pub max_evals: usize,
}

impl Default for ContourOptions {
    fn default() -> Self {
        ContourOptions { samples_per_edge: 16, max_phase_step: PI / 4.0, min_segment: 1e-9, max_evals: 200_000 }
    }
}

/// Phase increment `arg(b / a)` in `(−π, π]`.
#[inline]
pub fn phase_step(a: Complex64, b: Complex64) -> f64 {
    (b * a.conj()).arg()
}

/// Winding number of `f` along the counter-clockwise boundary of `rect`.
pub fn winding_number<F>(f: &mut F, rect: &Rect, opts: &ContourOptions) -> Result<i64>
where
    F: FnMut(Complex64) -> Result<Complex64>,
{
    let corners = rect.corners();
    let min_len = opts.min_segment * rect.diameter();
    let mut evals = 0usize;
    let mut total = 0.0;
    let n = opts.samples_per_edge.max(1);
    let first = f(corners[0])?;
    let mut prev_z = corners[0];
    let mut prev_f = first;
    for e in 0..4 {
        let a = corners[e];
        let b = corners[(e + 1) % 4];
        for k in 1..=n {
            let z = a + (b - a) * (k as f64 / n as f64);
            let fz = if e == 3 && k == n { first } else { f(z)? };
            evals += 1;
            total += refine(f, prev_z, prev_f, z, fz, opts, min_len, &mut evals)?;
            prev_z = z;
            prev_f = fz;
        }
    }
    let w = total / TAU;
    let r = w.round();
    if (w - r).abs() > 0.25 {
        return Err(Error::PhaseResolutionExceeded(rect.center()));
    }
    Ok(r as i64)
}

// Phase change from (za, fa) to (zb, fb), bisecting until every increment
// is below the threshold.
#[allow(clippy::too_many_arguments)]
fn refine<F>(
    f: &mut F,
    za: Complex64,
    fa: Complex64,
    zb: Complex64,
    fb: Complex64,
    opts: &ContourOptions,
    min_len: f64,
    evals: &mut usize,
) -> Result<f64>
where
    F: FnMut(Complex64) -> Result<Complex64>,
{
    let mut stack = vec![(za, fa, zb, fb)];
    let mut total = 0.0;
    // depth-first, left segment first, so increments are summed in order
    while let Some((z0, f0, z1, f1)) = stack.pop() {
        let d = phase_step(f0, f1);
        if d.abs() < opts.max_phase_step {
            total += d;
            continue;
        }
        if (z1 - z0).norm() < min_len || *evals >= opts.max_evals {
            return Err(Error::PhaseResolutionExceeded(z0));
        }
        let zm = (z0 + z1) * 0.5;
        let fm = f(zm)?;
        *evals += 1;
        stack.push((zm, fm, z1, f1));
        stack.push((z0, f0, zm, fm));
    }
    Ok(total)
}

/// A sub-rectangle containing `winding` zeros.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsolatedBox {
    pub rect: Rect,
    pub winding: i64,
}

// Off-centre split fractions; tried in order when a split line hits a zero.
const SPLITS: [f64; 4] = [0.537, 0.463, 0.611, 0.389];

/// Splits `rect` along its longer side, retrying other split fractions when
/// the evaluator reports a zero on the new edge. Returns the two halves and
/// their windings.
///
/// Both halves are counted; a zero hugging a contour can alias a full turn
/// away, which shows up as a broken sum. The parent and halves are then
/// recounted with denser initial sampling.
pub fn split_counted<F>(f: &mut F, rect: &Rect, winding: i64, opts: &ContourOptions) -> Result<[IsolatedBox; 2]>
where
    F: FnMut(Complex64) -> Result<Complex64>,
{
    let mut last_err = None;
    for level in 0..DENSITY_LEVELS {
        let o = denser(opts, level);
        let parent = if level == 0 {
            winding
        } else {
            match winding_number(f, rect, &o) {
                Ok(w) => w,
                Err(e @ (Error::ZeroOnContour(_) | Error::PhaseResolutionExceeded(_))) => {
                    last_err = Some(e);
                    continue;
                }
                Err(e) => return Err(e),
            }
        };
        for t in SPLITS {
            let (a, b) = rect.split(t);
            match winding_number(f, &a, &o).and_then(|wa| Ok((wa, winding_number(f, &b, &o)?))) {
                Ok((wa, wb)) if wa + wb == parent && wa >= 0 && wb >= 0 => {
                    return Ok([IsolatedBox { rect: a, winding: wa }, IsolatedBox { rect: b, winding: wb }]);
                }
                Ok(_) => last_err = Some(Error::PhaseResolutionExceeded(rect.center())),
                Err(e @ (Error::ZeroOnContour(_) | Error::PhaseResolutionExceeded(_))) => last_err = Some(e),
                Err(e) => return Err(e),
            }
        }
    }
    Err(last_err.unwrap_or(Error::PhaseResolutionExceeded(rect.center())))
}

// Sampling density doublings tried before a count is given up.
const DENSITY_LEVELS: u32 = 4;

fn denser(opts: &ContourOptions, level: u32) -> ContourOptions {
    ContourOptions { samples_per_edge: opts.samples_per_edge.max(1) << level, ..*opts }
}

/// Winding number confirmed by a second count at twice the initial sample
/// density; the density keeps doubling until two consecutive counts agree.
pub fn verified_winding<F>(f: &mut F, rect: &Rect, opts: &ContourOptions) -> Result<i64>
where
    F: FnMut(Complex64) -> Result<Complex64>,
{
    let mut prev = winding_number(f, rect, opts)?;
    for level in 1..=DENSITY_LEVELS {
        let w = winding_number(f, rect, &denser(opts, level))?;
        if w == prev {
            return Ok(w);
        }
        prev = w;
    }
    Err(Error::PhaseResolutionExceeded(rect.center()))
}

// Relative box size below which a phase that no longer resolves is taken
// as rounding noise around an ill-conditioned zero.
const RESOLUTION_FLOOR: f64 = 1e-4;

fn below_resolution(r: &Rect) -> bool {
    r.diameter() < RESOLUTION_FLOOR * (1.0 + r.center().norm())
}

fn unresolvable(e: &Error) -> bool {
    matches!(e, Error::PhaseResolutionExceeded(_) | Error::ZeroOnContour(_))
}

/// Bisects `rect` (whose winding is `winding`) until every box has winding
/// one or diameter below `min_diameter`. Boxes with winding zero are dropped.
/// A box that cannot be split because its phase is unresolvable is kept
/// whole when it is already tiny relative to its position.
pub fn isolate_zeros<F>(
    f: &mut F,
    rect: &Rect,
    winding: i64,
    min_diameter: f64,
    opts: &ContourOptions,
) -> Result<Vec<IsolatedBox>>
where
    F: FnMut(Complex64) -> Result<Complex64>,
{
    Ok(isolate(f, rect, winding, min_diameter, opts)?.0)
}

// Multiplicity that a box was credited with but that a denser recount moved
// elsewhere: a multiple zero just outside an edge can alias a full turn.
// `hint` is where the missing zero is expected.
struct Orphan {
    hint: Complex64,
    multiplicity: i64,
}

fn isolate<F>(
    f: &mut F,
    rect: &Rect,
    winding: i64,
    min_diameter: f64,
    opts: &ContourOptions,
) -> Result<(Vec<IsolatedBox>, Vec<Orphan>)>
where
    F: FnMut(Complex64) -> Result<Complex64>,
{
    let mut out = Vec::new();
    let mut orphans = Vec::new();
    let mut stack = vec![IsolatedBox { rect: *rect, winding }];
    while let Some(b) = stack.pop() {
        if b.winding < 0 {
            return Err(Error::PhaseResolutionExceeded(b.rect.center()));
        }
        if b.winding == 0 {
            continue;
        }
        if b.winding == 1 || b.rect.diameter() < min_diameter {
            out.push(b);
            continue;
        }
        match split_counted(f, &b.rect, b.winding, opts) {
            Ok([l, r]) => {
                let deficit = b.winding - l.winding - r.winding;
                if deficit > 0 {
                    orphans.push(Orphan { hint: b.rect.center(), multiplicity: deficit });
                }
                stack.push(r);
                stack.push(l);
            }
            Err(e) if unresolvable(&e) && below_resolution(&b.rect) => out.push(b),
            Err(e) => return Err(e),
        }
    }
    Ok((out, orphans))
}

/// A located zero with its multiplicity (the winding of its final box).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocatedZero {
    pub z: Complex64,
    pub multiplicity: i64,
    /// Whether `polish` converged; otherwise `z` is the centre of a box
    /// narrower than the cluster diameter.
    pub polished: bool,
}

/// Isolates the zeros in `rect` (whose winding is `winding`) and polishes
/// each simple one with `polish(box)`, which returns `None` when it fails.
/// Boxes whose polish fails or ends outside the box are split again.
/// Boxes with winding `m > 1` narrower than `min_diameter` are reported at
/// their centre with multiplicity `m`; zeros closer than `min_diameter` are
/// merged with their multiplicities summed.
pub fn locate_zeros<F, P>(
    f: &mut F,
    mut polish: P,
    rect: &Rect,
    winding: i64,
    min_diameter: f64,
    opts: &ContourOptions,
) -> Result<Vec<LocatedZero>>
where
    F: FnMut(Complex64) -> Result<Complex64>,
    P: FnMut(&Rect) -> Result<Option<Complex64>>,
{
    let (mut pending, mut orphans) = isolate(f, rect, winding, min_diameter, opts)?;
    let mut out = Vec::new();
    while let Some(b) = pending.pop() {
        if b.winding > 1 {
            out.push(LocatedZero { z: b.rect.center(), multiplicity: b.winding, polished: false });
            continue;
        }
        // a polish that lands in a neighbouring box found someone else's zero
        let candidate = polish(&b.rect)?;
        let polished = candidate.filter(|z| b.rect.contains_with_margin(*z, 1e-9 * b.rect.diameter()));
        if let Some(z) = polished {
            out.push(LocatedZero { z, multiplicity: 1, polished: true });
        } else if b.rect.diameter() < min_diameter {
            out.push(LocatedZero { z: b.rect.center(), multiplicity: 1, polished: false });
        } else {
            match split_counted(f, &b.rect, 1, opts) {
                Ok(halves) => {
                    if halves[0].winding + halves[1].winding == 0 {
                        orphans.push(Orphan { hint: candidate.unwrap_or(b.rect.center()), multiplicity: 1 });
                    }
                    pending.extend(halves.into_iter().filter(|h| h.winding != 0))
                }
                Err(e) if unresolvable(&e) && below_resolution(&b.rect) => {
                    out.push(LocatedZero { z: b.rect.center(), multiplicity: 1, polished: false })
                }
                Err(e) => return Err(e),
            }
        }
    }
    // the outer count is verified, so misplaced multiplicity goes to the
    // nearest zero found
    for o in orphans {
        let nearest = out.iter_mut().min_by(|a, b| (a.z - o.hint).norm().total_cmp(&(b.z - o.hint).norm()));
        match nearest {
            Some(z) => z.multiplicity += o.multiplicity,
            None => out.push(LocatedZero { z: o.hint, multiplicity: o.multiplicity, polished: false }),
        }
    }
    // a multiple zero cut by a split line is found once from each side
    let mut merged: Vec<LocatedZero> = Vec::with_capacity(out.len());
    for z in out {
        match merged.iter_mut().find(|m| (m.z - z.z).norm() < min_diameter) {
            Some(m) => {
                let w = (m.multiplicity + z.multiplicity) as f64;
                m.z = (m.z * m.multiplicity as f64 + z.z * z.multiplicity as f64) / w;
                m.multiplicity += z.multiplicity;
                m.polished &= z.polished;
            }
            None => merged.push(z),
        }
    }
    merged.sort_by(|a, b| a.z.re.total_cmp(&b.z.re).then(a.z.im.total_cmp(&b.z.im)));
    Ok(merged)
}

/// `rect` enlarged by `frac` of its width and height on every side.
pub fn with_margin(rect: &Rect, frac: f64) -> Rect {
    let (dx, dy) = (rect.width() * frac, rect.height() * frac);
    Rect { re_min: rect.re_min - dx, re_max: rect.re_max + dx, im_min: rect.im_min - dy, im_max: rect.im_max + dy }
}

/// Winding over `rect`, perturbing the rectangle outward/inward by multiples
/// of `10⁻²·diameter` when a zero sits on (or too near) the boundary.
/// Returns the rectangle actually used.
pub fn counted_rect<F>(f: &mut F, rect: &Rect, opts: &ContourOptions) -> Result<(Rect, i64)>
where
    F: FnMut(Complex64) -> Result<Complex64>,
{
    let d = rect.diameter();
    let mut last = None;
    for k in [0.0, 1e-2, -1e-2, 2e-2, -2e-2] {
        let r = if k == 0.0 {
            *rect
        } else {
            let g = k * d;
            match Rect::new(rect.re_min - g, rect.re_max + g, rect.im_min - g, rect.im_max + g) {
                Ok(r) => r,
                Err(_) => continue,
            }
        };
        match verified_winding(f, &r, opts) {
            Ok(w) if w >= 0 => return Ok((r, w)),
            Ok(_) => last = Some(Error::PhaseResolutionExceeded(r.center())),
            Err(e @ (Error::ZeroOnContour(_) | Error::PhaseResolutionExceeded(_))) => last = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last.unwrap_or(Error::ZeroOnContour(rect.center())))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn poly(roots: Vec<Complex64>) -> impl FnMut(Complex64) -> Result<Complex64> {
        move |z| Ok(roots.iter().fold(c(1.0, 0.0), |acc, r| acc * (z - r)))
    }

    #[test]
    fn counts_polynomial_roots() {
        let mut f = poly(vec![c(1.0, 0.0), c(4.0, 0.0), c(2.0, 0.5), c(10.0, 0.0)]);
        let r = Rect::new(0.5, 4.5, -1.0, 1.0).unwrap();
        assert_eq!(winding_number(&mut f, &r, &ContourOptions::default()).unwrap(), 3);
    }

    #[test]
    fn multiple_root_counts_with_multiplicity() {
        let mut f = poly(vec![c(1.0, 1.0), c(1.0, 1.0), c(1.0, 1.0)]);
        let r = Rect::new(0.0, 2.0, 0.0, 2.0).unwrap();
        let w = winding_number(&mut f, &r, &ContourOptions::default()).unwrap();
        assert_eq!(w, 3);
        // roundoff splits a triple root at the eps^(1/3) scale, so stop well above it
        let boxes = isolate_zeros(&mut f, &r, w, 1e-3, &ContourOptions::default()).unwrap();
        assert_eq!(boxes.len(), 1, "{boxes:?}");
        assert_eq!(boxes[0].winding, 3);
        assert!((boxes[0].rect.center() - c(1.0, 1.0)).norm() < 1e-3);
    }

    #[test]
    fn isolation_separates_close_roots() {
        let roots = vec![c(1.0, 0.0), c(1.001, 0.0), c(3.0, -0.2)];
        let mut f = poly(roots.clone());
        let r = Rect::new(0.0, 4.0, -1.0, 1.0).unwrap();
        let opts = ContourOptions::default();
        let w = winding_number(&mut f, &r, &opts).unwrap();
        let boxes = isolate_zeros(&mut f, &r, w, 1e-9, &opts).unwrap();
        assert_eq!(boxes.len(), 3);
        for z in roots {
            assert!(boxes.iter().any(|b| b.rect.contains(z)));
        }
    }

    #[test]
    fn essential_phase_variation_is_resolved() {
        // exp(10 z) has no zeros but winds quickly along the vertical edges
        let mut f = |z: Complex64| Ok((z * 10.0).exp() * (z - c(0.3, 0.1)));
        let r = Rect::new(-1.0, 1.0, -2.0, 2.0).unwrap();
        assert_eq!(winding_number(&mut f, &r, &ContourOptions::default()).unwrap(), 1);
    }
}
