//! Sample-based checks of the structural assumptions on `Q = Q₀ − U + W`.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::spec::PotentialSpec;
use crate::error::{Error, Result};

/// Which family of assumptions to test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AssumptionCase {
    /// `Q₀` sectorial with semi-angle below π/2, `U ≡ 0`.
    #[serde(rename = "I", alias = "sectorial")]
    Sectorial,
    /// `Re Q₀ ≥ 0` with a non-positive part `−U` controlled by `Im Q₀`.
    #[serde(rename = "II", alias = "accretive")]
    Accretive,
}

/// Semi-angle and lower bound of `Q₀ − shift` over a sample set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sectoriality {
    pub theta: f64,
    pub c0: f64,
}

/// Uniform grid on the cube `[−half_width, half_width]ᵈ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleBox {
    pub half_width: f64,
    pub points_per_axis: usize,
}

impl SampleBox {
    pub fn new(half_width: f64, points_per_axis: usize) -> Self {
        SampleBox { half_width, points_per_axis }
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / (self.points_per_axis.max(2) - 1) as f64
    }

    pub fn points(&self, dimension: usize) -> Vec<Vec<f64>> {
        let n = self.points_per_axis;
        if n == 0 || dimension == 0 {
            return Vec::new();
        }
        let axis: Vec<f64> = if n == 1 {
            vec![0.0]
        } else {
            (0..n).map(|k| -self.half_width + k as f64 * self.spacing()).collect()
        };
        let mut pts: Vec<Vec<f64>> = vec![Vec::new()];
        for _ in 0..dimension {
            pts = pts
                .into_iter()
                .flat_map(|p| {
                    axis.iter().map(move |&a| {
                        let mut q = p.clone();
                        q.push(a);
                        q
                    })
                })
                .collect();
        }
        pts
    }
}

/// One failed inequality: label, worst sample point, offending value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub label: String,
    pub point: Vec<f64>,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct MeasuredConstants {
    pub theta_hat: f64,
    pub c0_hat: f64,
    pub a_u_hat: f64,
    pub b_u_hat: f64,
    pub a_grad_hat: f64,
    pub b_grad_hat: f64,
    /// Minimum of `|Q₀|` on concentric shells, innermost first.
    pub growth_witness: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    pub case: AssumptionCase,
    pub passed: bool,
    pub measured: MeasuredConstants,
    pub violations: Vec<Violation>,
}

/// Sup of `arg`-type angle `arctan(|Im| / Re)` of `Q₀ − shift` and min of its real part.
///
/// Returns `theta = π/2` when some sample has non-positive real part with a
/// non-zero imaginary part (or a strictly negative real part).
pub fn sectoriality_angle(spec: &PotentialSpec, samples: &[Vec<f64>], shift: Option<Complex64>) -> Result<Sectoriality> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    let shift = shift.unwrap_or_default();
    let mut theta: f64 = 0.0;
    let mut c0 = f64::INFINITY;
    let mut sentinel = false;
    for p in samples {
        let v = spec.q0_at(p) - shift;
        if !(v.re.is_finite() && v.im.is_finite()) {
            return Err(Error::NonFiniteEvaluation(p.clone()));
        }
        c0 = c0.min(v.re);
        if v.re > 0.0 {
            theta = theta.max((v.im.abs() / v.re).atan());
        } else if v.im != 0.0 || v.re < 0.0 {
            sentinel = true;
        }
    }
    Ok(Sectoriality { theta: if sentinel { FRAC_PI_2 } else { theta }, c0 })
}

/// Least-squares line `y ≈ a + b z` with `b` clamped at zero, then the
/// smallest `a ≥ 0` making `y ≤ a + b z` hold on every sample.
fn fit_upper_bound(z: &[f64], y: &[f64]) -> (f64, f64) {
    let n = z.len() as f64;
    let mz = z.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = z.iter().map(|v| (v - mz) * (v - mz)).sum();
    let sxy: f64 = z.iter().zip(y).map(|(a, b)| (a - mz) * (b - my)).sum();
    let b = if sxx > 0.0 { (sxy / sxx).max(0.0) } else { 0.0 };
    let a = z
        .iter()
        .zip(y)
        .map(|(zi, yi)| yi - b * zi)
        .fold(0.0f64, f64::max);
    (a, b)
}

fn growth_witness(spec: &PotentialSpec, samples: &[Vec<f64>], shells: usize) -> Vec<f64> {
    let radius = |p: &Vec<f64>| p.iter().map(|t| t * t).sum::<f64>().sqrt();
    let r_max = samples.iter().map(radius).fold(0.0, f64::max);
    if r_max == 0.0 {
        return Vec::new();
    }
    let mut mins = vec![f64::INFINITY; shells];
    for p in samples {
        let k = ((radius(p) / r_max) * shells as f64).floor() as usize;
        let k = k.min(shells - 1);
        mins[k] = mins[k].min(spec.q0_at(p).norm());
    }
    mins.into_iter().filter(|m| m.is_finite()).collect()
}

fn worst<'a>(items: impl Iterator<Item = (&'a Vec<f64>, f64)>) -> Option<(Vec<f64>, f64)> {
    items
        .filter(|(_, v)| *v > 0.0)
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(p, v)| (p.clone(), v))
}

const GROWTH_SHELLS: usize = 8;

/// Checks the assumptions of `case` on the grid of `sample_box`.
pub fn verify_assumptions(spec: &PotentialSpec, case: AssumptionCase, sample_box: &SampleBox) -> Result<AssumptionReport> {
    let samples = sample_box.points(spec.dimension);
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    let mut q0 = Vec::with_capacity(samples.len());
    let mut u = Vec::with_capacity(samples.len());
    for p in &samples {
        let q = spec.q0_at(p);
        let uu = spec.u_at(p);
        if !(q.re.is_finite() && q.im.is_finite() && uu.is_finite()) {
            return Err(Error::NonFiniteEvaluation(p.clone()));
        }
        q0.push(q);
        u.push(uu);
    }
    let declared = spec.declared.clone().unwrap_or_default();
    let mut violations = Vec::new();
    let mut measured = MeasuredConstants::default();
    let scale = q0.iter().map(|q| q.norm()).fold(1.0, f64::max);
    let eps = 1e-12 * scale;

    let sect = sectoriality_angle(spec, &samples, declared.shift)?;
    measured.theta_hat = sect.theta;
    measured.c0_hat = sect.c0;

    measured.growth_witness = growth_witness(spec, &samples, GROWTH_SHELLS);
    let gw = &measured.growth_witness;
    let grows = gw.len() >= 2
        && gw.windows(2).all(|w| w[1] >= w[0] - 1e-12 * w[0].abs().max(1.0))
        && gw[gw.len() - 1] > gw[gw.len() / 2] * (1.0 + 1e-9);
    if !grows {
        let last = gw.last().copied().unwrap_or(0.0);
        violations.push(Violation { label: "unboundedness".into(), point: vec![sample_box.half_width], value: last });
    }

    match case {
        AssumptionCase::Sectorial => {
            let limit = declared.theta.unwrap_or(FRAC_PI_2);
            let ok = if declared.theta.is_some() { sect.theta <= limit + 1e-12 } else { sect.theta < limit };
            if !ok {
                violations.push(Violation { label: "sectoriality".into(), point: Vec::new(), value: sect.theta });
            }
            if sect.c0 <= 0.0 || declared.c0.is_some_and(|c| sect.c0 < c - eps) {
                let shift = declared.shift.unwrap_or_default();
                let (p, v) = samples
                    .iter()
                    .map(|p| (p, (spec.q0_at(p) - shift).re))
                    .min_by(|a, b| a.1.total_cmp(&b.1))
                    .map(|(p, v)| (p.clone(), v))
                    .unwrap_or_default();
                violations.push(Violation { label: "re_q0_lower_bound".into(), point: p, value: v });
            }
            if u.iter().any(|v| *v != 0.0) {
                let (p, v) = worst(samples.iter().zip(u.iter().map(|v| v.abs()))).unwrap_or_default();
                violations.push(Violation { label: "u_vanishes".into(), point: p, value: v });
            }
        }
        AssumptionCase::Accretive => {
            if let Some((p, v)) = worst(samples.iter().zip(q0.iter().map(|q| -q.re - eps))) {
                violations.push(Violation { label: "re_q0_nonnegative".into(), point: p, value: -(v + eps) });
            }
            if let Some((p, v)) = worst(samples.iter().zip(u.iter().map(|v| -v))) {
                violations.push(Violation { label: "u_nonnegative".into(), point: p, value: -v });
            }
            if let Some((p, v)) = worst(samples.iter().zip(q0.iter().zip(&u).map(|(q, v)| (q.re * v).abs() - eps))) {
                violations.push(Violation { label: "u_re_q0_zero".into(), point: p, value: v + eps });
            }

            let h = sample_box.spacing();
            let grad_sq: Vec<f64> = samples
                .iter()
                .map(|p| {
                    (0..p.len())
                        .map(|k| {
                            let mut plus = p.clone();
                            let mut minus = p.clone();
                            plus[k] += h;
                            minus[k] -= h;
                            ((spec.q0_at(&plus) - spec.q0_at(&minus)) / (2.0 * h)).norm_sqr()
                        })
                        .sum()
                })
                .collect();
            let q_sq: Vec<f64> = q0.iter().map(|q| q.norm_sqr()).collect();
            let (a_grad, b_grad) = fit_upper_bound(&q_sq, &grad_sq);
            measured.a_grad_hat = a_grad;
            measured.b_grad_hat = b_grad;

            let u_sq: Vec<f64> = u.iter().map(|v| v * v).collect();
            let im_sq: Vec<f64> = q0.iter().map(|q| q.im * q.im).collect();
            let (a_u, b_u) = fit_upper_bound(&im_sq, &u_sq);
            measured.a_u_hat = a_u;
            measured.b_u_hat = b_u;

            // declared constants must dominate the sampled inequalities
            if let (Some(a), Some(b)) = (declared.a_grad, declared.b_grad) {
                let excess = samples.iter().zip(grad_sq.iter().zip(&q_sq).map(|(g, q)| g - a - b * q - eps * g.max(1.0)));
                if let Some((p, v)) = worst(excess) {
                    violations.push(Violation { label: "gradient_bound".into(), point: p, value: v });
                }
            }
            if let (Some(a), Some(b)) = (declared.a_u, declared.b_u) {
                let excess = samples.iter().zip(u_sq.iter().zip(&im_sq).map(|(v, q)| v - a - b * q - eps * v.max(1.0)));
                if let Some((p, v)) = worst(excess) {
                    violations.push(Violation { label: "u_bound".into(), point: p, value: v });
                }
            }
            let b_u = declared.b_u.unwrap_or(0.0).max(b_u);
            if b_u >= 1.0 {
                violations.push(Violation { label: "b_u_below_one".into(), point: Vec::new(), value: b_u });
            }
        }
    }

    Ok(AssumptionReport { case, passed: violations.is_empty(), measured, violations })
}

/// Case I when `Q₀ − shift` is sectorial on the samples, otherwise case II.
pub fn infer_case(spec: &PotentialSpec, sample_box: &SampleBox) -> Result<AssumptionCase> {
    let samples = sample_box.points(spec.dimension);
    let s = sectoriality_angle(spec, &samples, Some(spec.shift()))?;
    Ok(if s.theta < FRAC_PI_2 && s.c0 > 0.0 && spec.u.is_zero() {
        AssumptionCase::Sectorial
    } else {
        AssumptionCase::Accretive
    })
}

#[cfg(test)]
mod tests {
    use std::f64::consts::FRAC_PI_4;

    use super::*;
    use crate::potentials::spec::SingularPart;

    fn grid(lo: i32, hi: i32) -> Vec<Vec<f64>> {
        (lo..=hi).map(|k| vec![k as f64]).collect()
    }

    #[test]
    fn sectoriality_examples() {
        let s = PotentialSpec::new("(1+i)*x^2+1", "0", SingularPart::None, 1).unwrap();
        let r = sectoriality_angle(&s, &grid(-3, 3), None).unwrap();
        assert!((r.theta - 0.9f64.atan()).abs() < 1e-15);
        assert_eq!(r.c0, 1.0);
        let dense: Vec<Vec<f64>> = (0..=2000).map(|k| vec![-10.0 + 0.01 * k as f64]).collect();
        let d = sectoriality_angle(&s, &dense, None).unwrap();
        assert!(d.theta <= FRAC_PI_4 && d.theta > r.theta);

        let h = PotentialSpec::new("x^2", "0", SingularPart::None, 1).unwrap();
        let r = sectoriality_angle(&h, &grid(-3, 3), None).unwrap();
        assert_eq!(r.theta, 0.0);
        assert_eq!(r.c0, 0.0);

        let c = PotentialSpec::builtin("ix3").unwrap();
        assert_eq!(sectoriality_angle(&c, &grid(-3, 3), None).unwrap().theta, FRAC_PI_2);
        assert_eq!(sectoriality_angle(&c, &[], None), Err(Error::EmptySamples));
    }

    #[test]
    fn sectoriality_monotone_in_samples() {
        let s = PotentialSpec::new("(1+2i)*x^2+x+3", "0", SingularPart::None, 1).unwrap();
        let small = sectoriality_angle(&s, &grid(-2, 2), None).unwrap();
        let big = sectoriality_angle(&s, &grid(-5, 5), None).unwrap();
        assert!(big.theta >= small.theta);
        assert!(big.c0 <= small.c0);
    }

    #[test]
    fn odd_cubic_with_u_split_passes_case_two() {
        let s = PotentialSpec::new("i*sgn(x)*|x|^3", "0.5*|x|^3", SingularPart::None, 1).unwrap();
        let rep = verify_assumptions(&s, AssumptionCase::Accretive, &SampleBox::new(10.0, 401)).unwrap();
        assert!(rep.passed, "{:?}", rep.violations);
        assert!((rep.measured.b_u_hat - 0.25).abs() < 1e-9);
        assert!(rep.measured.a_u_hat < 1e-6);
    }

    #[test]
    fn merged_cubic_fails_real_part() {
        let s = PotentialSpec::new("i*x^3 - x^2", "0", SingularPart::None, 1).unwrap();
        let rep = verify_assumptions(&s, AssumptionCase::Accretive, &SampleBox::new(5.0, 101)).unwrap();
        assert!(!rep.passed);
        assert!(rep.violations.iter().any(|v| v.label == "re_q0_nonnegative" && v.value < 0.0));
    }

    #[test]
    fn complex_harmonic_passes_case_one() {
        let s = PotentialSpec::new("(1+i)*x^2+1", "0", SingularPart::None, 1).unwrap();
        let rep = verify_assumptions(&s, AssumptionCase::Sectorial, &SampleBox::new(10.0, 201)).unwrap();
        assert!(rep.passed, "{:?}", rep.violations);
        assert!(rep.measured.theta_hat < FRAC_PI_4 + 1e-12);
        let w = &rep.measured.growth_witness;
        assert!(w.windows(2).all(|p| p[1] >= p[0]));
    }

    #[test]
    fn split_cubic_fits_small_b_u() {
        let s = PotentialSpec::builtin("ix3_minus_x2").unwrap();
        let rep = verify_assumptions(&s, AssumptionCase::Accretive, &SampleBox::new(6.0, 241)).unwrap();
        assert!(rep.passed, "{:?}", rep.violations);
        assert!(rep.measured.b_u_hat < 1.0);
        // gradient of i x^3 is 3i x^2: |grad|^2 = 9 x^4 against |Q0|^2 = x^6
        assert!(rep.measured.b_grad_hat > 0.0);
    }

    #[test]
    fn declared_bounds_are_checked() {
        use crate::potentials::spec::DeclaredBounds;
        let s = PotentialSpec::new("i*x^3", "x^3*sgn(x)", SingularPart::None, 1)
            .unwrap()
            .with_declared(DeclaredBounds { a_u: Some(0.0), b_u: Some(0.5), ..Default::default() });
        let rep = verify_assumptions(&s, AssumptionCase::Accretive, &SampleBox::new(4.0, 81)).unwrap();
        assert!(rep.violations.iter().any(|v| v.label == "u_bound"));
        assert!(rep.violations.iter().any(|v| v.label == "b_u_below_one"));
    }

    #[test]
    fn bounded_potential_fails_growth() {
        let s = PotentialSpec::new("1+i*sgn(x)", "0", SingularPart::None, 1).unwrap();
        let rep = verify_assumptions(&s, AssumptionCase::Sectorial, &SampleBox::new(4.0, 81)).unwrap();
        assert!(rep.violations.iter().any(|v| v.label == "unboundedness"));
    }

    #[test]
    fn three_dimensional_grid() {
        let b = SampleBox::new(1.0, 3);
        let pts = b.points(3);
        assert_eq!(pts.len(), 27);
        assert!(pts.contains(&vec![-1.0, 0.0, 1.0]));
    }
}
