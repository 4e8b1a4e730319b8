//! Eigenvalue trajectories over growing truncations.
//!
//! A sweep solves the same problem on a list of sizes, strings the
//! eigenvalues of consecutive sizes into trajectories, and classifies each
//! one as converging, as one half of a conjugate pair whose imaginary parts
//! run off, or as unresolved.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Rect;
use crate::shooting::{find_eigenvalues_with, EigenRecord, ShootingOptions, TruncatedProblem};

/// Differences below this are indistinguishable from rounding.
pub const NOISE_FLOOR: f64 = 1e-13;
/// Tails below this are skipped in [`rate_bound_check`].
pub const MIN_TAIL: f64 = 1e-15;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPlan {
    /// Instantiated at each size through [`TruncatedProblem::resized`].
    pub template: TruncatedProblem,
    pub sizes: Vec<f64>,
    pub window: Rect,
    pub tol: f64,
}

impl SweepPlan {
    pub fn new(template: TruncatedProblem, sizes: Vec<f64>, window: Rect, tol: f64) -> Result<Self> {
        let plan = SweepPlan { template, sizes, window, tol };
        plan.validate()?;
        Ok(plan)
    }

    pub fn validate(&self) -> Result<()> {
        if self.sizes.is_empty() {
            return Err(Error::InvalidParameter("empty size list".into()));
        }
        if self.sizes.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidParameter("sizes must be strictly increasing".into()));
        }
        if !(self.window.width() > 0.0 && self.window.height() > 0.0) {
            return Err(Error::InvalidParameter(format!("empty window {}", self.window)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParameter(format!("tol = {} must be positive", self.tol)));
        }
        Ok(())
    }
}

/// Eigenvalues at one truncation size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeSlice {
    pub s: f64,
    pub records: Vec<EigenRecord>,
}

/// Solves every size of the plan; slices come back in size order and each
/// slice is sorted by `(Re λ, Im λ)`.
pub fn run_sweep(plan: &SweepPlan) -> Result<Vec<SizeSlice>> {
    run_sweep_with(plan, &ShootingOptions::default())
}

pub fn run_sweep_with(plan: &SweepPlan, opts: &ShootingOptions) -> Result<Vec<SizeSlice>> {
    plan.validate()?;
    let solve = |s: f64| -> Result<SizeSlice> {
        let p = plan.template.resized(s)?;
        let mut records = find_eigenvalues_with(&p, &plan.window, plan.tol, opts)?;
        // the contour may have been nudged outwards
        records.retain(|r| plan.window.contains(r.lambda));
        Ok(SizeSlice { s, records })
    };
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get()).min(plan.sizes.len());
    if threads <= 1 {
        return plan.sizes.iter().map(|&s| solve(s)).collect();
    }
    // sizes are independent; strided assignment keeps the work balanced
    let mut out: Vec<Option<Result<SizeSlice>>> = vec![None; plan.sizes.len()];
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..threads)
            .map(|t| {
                let solve = &solve;
                let sizes = &plan.sizes;
                scope.spawn(move || {
                    (t..sizes.len()).step_by(threads).map(|i| (i, solve(sizes[i]))).collect::<Vec<_>>()
                })
            })
            .collect();
        for h in handles {
            for (i, r) in h.join().expect("sweep worker panicked") {
                out[i] = Some(r);
            }
        }
    });
    out.into_iter().map(|r| r.expect("every size solved")).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum RateModel {
    Exponential,
    Algebraic,
}

/// Least-squares fit of `ln|λ(s) − λ*|` against `s` (exponential) or
/// `ln s` (algebraic).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub model: RateModel,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum Classification {
    Converged { limit: Complex64, rate: Option<RateFit> },
    DivergingPair { partner: usize },
    Unresolved,
}

impl Classification {
    pub fn label(&self) -> &'static str {
        match self {
            Classification::Converged { .. } => "converged",
            Classification::DivergingPair { .. } => "diverging_pair",
            Classification::Unresolved => "unresolved",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub id: usize,
    pub records: Vec<EigenRecord>,
    pub classification: Classification,
    pub partner: Option<usize>,
    /// `ambiguous[k]` flags the match that appended `records[k + 1]`.
    #[serde(default)]
    pub ambiguous: Vec<bool>,
}

impl Trajectory {
    pub fn last(&self) -> &EigenRecord {
        self.records.last().expect("trajectories are never empty")
    }

    fn increments(&self) -> Vec<f64> {
        self.records.windows(2).map(|w| (w[1].lambda - w[0].lambda).norm()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackOptions {
    /// Lower bound of the matching gate.
    pub gate_min: f64,
    /// Gate as a multiple of the median nearest-neighbour displacement.
    pub gate_factor: f64,
    /// Matches with a competitor closer than this factor are ambiguous.
    pub ambiguity_ratio: f64,
    /// Consecutive steps of growing `|Im λ|` needed to link a pair.
    pub pair_steps: usize,
    /// Increments compared in the Cauchy tail.
    pub tail_steps: usize,
}

impl Default for TrackOptions {
    fn default() -> Self {
        TrackOptions { gate_min: 0.5, gate_factor: 5.0, ambiguity_ratio: 1.25, pair_steps: 3, tail_steps: 3 }
    }
}

fn median(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[m] } else { 0.5 * (v[m - 1] + v[m]) })
}

/// Strings slices into trajectories and classifies them with `tol`.
pub fn track(slices: &[SizeSlice], tol: f64) -> Result<Vec<Trajectory>> {
    track_with(slices, tol, &TrackOptions::default())
}

pub fn track_with(slices: &[SizeSlice], tol: f64, opts: &TrackOptions) -> Result<Vec<Trajectory>> {
    if slices.len() < 2 {
        return Err(Error::TooShort(slices.len()));
    }
    let mut trajs: Vec<Trajectory> = Vec::new();
    // trajectories holding a record of the previous slice
    let mut active: Vec<usize> = Vec::new();
    for slice in slices {
        let recs = &slice.records;
        if active.is_empty() {
            active = recs.iter().map(|r| start(&mut trajs, *r)).collect();
            continue;
        }
        let prev: Vec<Complex64> = active.iter().map(|&t| trajs[t].last().lambda).collect();
        let nearest: Vec<f64> = recs
            .iter()
            .map(|r| prev.iter().map(|p| (p - r.lambda).norm()).fold(f64::INFINITY, f64::min))
            .collect();
        let gate = median(nearest).map_or(opts.gate_min, |m| opts.gate_min.max(opts.gate_factor * m));
        let mut cands: Vec<(f64, usize, usize)> = Vec::new();
        for (i, p) in prev.iter().enumerate() {
            for (j, r) in recs.iter().enumerate() {
                let d = (p - r.lambda).norm();
                if d < gate {
                    cands.push((d, i, j));
                }
            }
        }
        cands.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        let mut prev_taken = vec![false; prev.len()];
        let mut rec_owner: Vec<Option<usize>> = vec![None; recs.len()];
        for &(d, i, j) in &cands {
            if prev_taken[i] || rec_owner[j].is_some() {
                continue;
            }
            let rival = cands.iter().any(|&(d2, i2, j2)| {
                ((i2 == i && j2 != j && rec_owner[j2].is_none()) || (j2 == j && i2 != i && !prev_taken[i2]))
                    && d2 <= opts.ambiguity_ratio * d + NOISE_FLOOR
            });
            prev_taken[i] = true;
            rec_owner[j] = Some(active[i]);
            let t = &mut trajs[active[i]];
            t.records.push(recs[j]);
            t.ambiguous.push(rival);
        }
        active = rec_owner
            .iter()
            .enumerate()
            .map(|(j, owner)| owner.unwrap_or_else(|| start(&mut trajs, recs[j])))
            .collect();
    }
    link_pairs(&mut trajs, slices, tol, opts);
    for i in 0..trajs.len() {
        trajs[i].classification = match classify_with(&trajs[i], tol, opts) {
            Ok(c) => c,
            Err(Error::TooShort(_)) => Classification::Unresolved,
            Err(e) => return Err(e),
        };
    }
    Ok(trajs)
}

fn start(trajs: &mut Vec<Trajectory>, r: EigenRecord) -> usize {
    let id = trajs.len();
    trajs.push(Trajectory {
        id,
        records: vec![r],
        classification: Classification::Unresolved,
        partner: None,
        ambiguous: Vec::new(),
    });
    id
}

// `|Im λ|` rising by more than `floor` on each of the last `steps` steps.
fn im_growing(t: &Trajectory, steps: usize, floor: f64) -> bool {
    let n = t.records.len();
    n > steps
        && t.records[n - steps - 1..].windows(2).all(|w| w[1].lambda.im.abs() > w[0].lambda.im.abs() + floor)
}

// Links upper- and lower-half-plane trajectories whose final records are
// near-conjugate, closest candidates first.
fn link_pairs(trajs: &mut [Trajectory], slices: &[SizeSlice], tol: f64, opts: &TrackOptions) {
    let floor = 1e3 * tol;
    let ok: Vec<bool> = trajs.iter().map(|t| im_growing(t, opts.pair_steps, floor)).collect();
    let gate_at = |s: f64| {
        // gate of the step that produced slice `s`
        let k = slices.iter().position(|sl| sl.s == s).unwrap_or(0);
        if k == 0 {
            return opts.gate_min;
        }
        let prev: Vec<Complex64> = slices[k - 1].records.iter().map(|r| r.lambda).collect();
        let near: Vec<f64> = slices[k]
            .records
            .iter()
            .map(|r| prev.iter().map(|p| (p - r.lambda).norm()).fold(f64::INFINITY, f64::min))
            .collect();
        median(near).map_or(opts.gate_min, |m| opts.gate_min.max(opts.gate_factor * m))
    };
    let mut cands: Vec<(f64, usize, usize)> = Vec::new();
    for a in (0..trajs.len()).filter(|&a| ok[a] && trajs[a].last().lambda.im > 0.0) {
        let la = *trajs[a].last();
        let gate = gate_at(la.s);
        for b in (0..trajs.len()).filter(|&b| ok[b] && trajs[b].last().lambda.im < 0.0) {
            let lb = trajs[b].last();
            let d = (lb.lambda - la.lambda.conj()).norm();
            if lb.s == la.s && d < gate {
                cands.push((d, a, b));
            }
        }
    }
    cands.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    for (_, a, b) in cands {
        if trajs[a].partner.is_none() && trajs[b].partner.is_none() {
            trajs[a].partner = Some(b);
            trajs[b].partner = Some(a);
        }
    }
}

fn ls_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let ss_res: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let r2 = if syy > 0.0 { (1.0 - ss_res / syy).clamp(0.0, 1.0) } else { 1.0 };
    (slope, intercept, r2)
}

/// Classification of a single trajectory; uses the partner set by [`track`].
pub fn classify(t: &Trajectory, tol: f64) -> Result<Classification> {
    classify_with(t, tol, &TrackOptions::default())
}

pub fn classify_with(t: &Trajectory, tol: f64, opts: &TrackOptions) -> Result<Classification> {
    if t.records.len() < 3 {
        return Err(Error::TooShort(t.records.len()));
    }
    let inc = t.increments();
    let limit = t.last().lambda;
    let floor = 1e2 * NOISE_FLOOR * (1.0 + limit.norm());
    let k = opts.tail_steps.min(inc.len());
    let tail = &inc[inc.len() - k..];
    let cauchy = tail.windows(2).all(|w| w[1] <= w[0] || w[1] <= floor);
    let unambiguous = t.ambiguous.iter().rev().take(k).all(|a| !a);
    if unambiguous && cauchy && inc[inc.len() - 1] < tol {
        let rate = fit_rate(t, limit).ok();
        return Ok(Classification::Converged { limit, rate });
    }
    if let Some(partner) = t.partner {
        let s: Vec<f64> = t.records.iter().map(|r| r.s).collect();
        let im: Vec<f64> = t.records.iter().map(|r| r.lambda.im.abs()).collect();
        let (slope, _, _) = ls_fit(&s, &im);
        if slope > 0.0 {
            return Ok(Classification::DivergingPair { partner });
        }
    }
    Ok(Classification::Unresolved)
}

/// `(s, ln|λ(s) − limit|)` for the records above the noise floor.
pub fn log_residuals(t: &Trajectory, limit: Complex64) -> Vec<(f64, f64)> {
    t.records
        .iter()
        .map(|r| (r.s, (r.lambda - limit).norm()))
        .filter(|&(_, e)| e > NOISE_FLOOR)
        .map(|(s, e)| (s, e.ln()))
        .collect()
}

/// Fits both models and keeps the one with the larger `r²`.
pub fn fit_rate(t: &Trajectory, limit: Complex64) -> Result<RateFit> {
    let pts = log_residuals(t, limit);
    if pts.len() < 4 {
        return Err(Error::InsufficientData(pts.len()));
    }
    let s: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let y: Vec<f64> = pts.iter().map(|p| p.1).collect();
    let (es, ei, er) = ls_fit(&s, &y);
    let fits = if s.iter().all(|&v| v > 0.0) {
        let ls: Vec<f64> = s.iter().map(|v| v.ln()).collect();
        Some(ls_fit(&ls, &y))
    } else {
        None
    };
    Ok(match fits {
        Some((as_, ai, ar)) if ar > er => RateFit { model: RateModel::Algebraic, slope: as_, intercept: ai, r_squared: ar },
        _ => RateFit { model: RateModel::Exponential, slope: es, intercept: ei, r_squared: er },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateBound {
    pub c_hat: f64,
    pub satisfied: bool,
    /// `|λ − λ(s)| / tail(s)` per used record.
    pub ratios: Vec<(f64, f64)>,
}

/// Empirical constant of the error-versus-tail bound.
///
/// `tails[k]` belongs to `t.records[k]`. The bound counts as satisfied when
/// the running maximum of the ratio no longer grows over the last third of
/// the samples.
pub fn rate_bound_check(t: &Trajectory, limit: Complex64, tails: &[f64]) -> Result<RateBound> {
    if tails.len() != t.records.len() {
        return Err(Error::InvalidParameter(format!(
            "{} tails for {} records",
            tails.len(),
            t.records.len()
        )));
    }
    let ratios: Vec<(f64, f64)> = t
        .records
        .iter()
        .zip(tails)
        .filter(|(_, &tail)| tail >= MIN_TAIL)
        .map(|(r, &tail)| (r.s, (r.lambda - limit).norm() / tail))
        .collect();
    if ratios.is_empty() {
        return Err(Error::InsufficientData(0));
    }
    let c_hat = ratios.iter().map(|r| r.1).fold(0.0, f64::max);
    let cut = ratios.len() - ratios.len().div_ceil(3);
    let head = ratios[..cut].iter().map(|r| r.1).fold(f64::NEG_INFINITY, f64::max);
    let satisfied = c_hat.is_finite() && (cut == 0 || head >= c_hat * (1.0 - 1e-9));
    Ok(RateBound { c_hat, satisfied, ratios })
}
