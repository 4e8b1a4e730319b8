//! Renormalised integration of `−f″ + V(x) f = λ f` in Cartesian and radial form.
//!
//! Solutions of these equations grow or decay like `exp(±∫√(Q−λ))`, which
//! overflows `f64` long before the interval ends. The integrator therefore
//! carries a [`ScaledState`]: after every accepted step the pair
//! `(f, f′)` is divided by a power of two so that its max-norm lies in
//! `[1/2, 2]`, and the natural logarithm of the factor is accumulated.
//! Dividing by powers of two is exact, so the phase of any bilinear
//! quantity built from scaled states is unaffected.

use std::f64::consts::LN_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potentials::PotentialSpec;

/// Which differential expression is integrated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OdeKind {
    /// `−f″ + Q(x) f = λ f`.
    Cartesian,
    /// `−f″ − f′/r + (l²/r² + Q(r)) f = λ f`.
    Radial2d { l: u32 },
    /// `−g″ − 2g′/r + (l(l+1)/r² + Q(r)) g = λ g`.
    Radial3d { l: u32 },
}

impl OdeKind {
    pub fn is_radial(&self) -> bool {
        !matches!(self, OdeKind::Cartesian)
    }

    pub fn angular_index(&self) -> Option<u32> {
        match *self {
            OdeKind::Cartesian => None,
            OdeKind::Radial2d { l } | OdeKind::Radial3d { l } => Some(l),
        }
    }

    /// Exponent `k` of the radial weight `r^k` (`0` for Cartesian).
    pub fn weight_exponent(&self) -> i32 {
        match self {
            OdeKind::Cartesian => 0,
            OdeKind::Radial2d { .. } => 1,
            OdeKind::Radial3d { .. } => 2,
        }
    }

    /// Centrifugal coefficient multiplying `1/r²`.
    pub fn centrifugal(&self) -> f64 {
        match *self {
            OdeKind::Cartesian => 0.0,
            OdeKind::Radial2d { l } => (l as f64) * (l as f64),
            OdeKind::Radial3d { l } => (l as f64) * (l as f64 + 1.0),
        }
    }
}

/// A differential expression together with the potential profile along
/// the integration variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OdeForm {
    pub kind: OdeKind,
    pub potential: PotentialSpec,
}

impl OdeForm {
    pub fn new(kind: OdeKind, potential: PotentialSpec) -> Self {
        OdeForm { kind, potential }
    }

    pub fn cartesian(potential: PotentialSpec) -> Self {
        OdeForm::new(OdeKind::Cartesian, potential)
    }

    /// Potential part `V(x)` of the zeroth-order coefficient, centrifugal term included.
    pub fn potential_at(&self, x: f64) -> Complex64 {
        let q = self.potential.profile(x);
        match self.kind {
            OdeKind::Cartesian => q,
            _ => q + self.kind.centrifugal() / (x * x),
        }
    }

    // f″ = a(x) f + b(x) f′
    #[inline]
    fn coefficients(&self, x: f64, lambda: Complex64) -> (Complex64, f64) {
        let a = self.potential_at(x) - lambda;
        let b = match self.kind {
            OdeKind::Cartesian => 0.0,
            _ => -(self.kind.weight_exponent() as f64) / x,
        };
        (a, b)
    }
}

/// `e^{log_scale} · (value, derivative)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaledState {
    pub value: Complex64,
    pub derivative: Complex64,
    pub log_scale: f64,
}

impl ScaledState {
    pub fn new(value: Complex64, derivative: Complex64) -> Self {
        ScaledState { value, derivative, log_scale: 0.0 }.renormalized()
    }

    pub fn max_norm(&self) -> f64 {
        self.value.norm().max(self.derivative.norm())
    }

    /// Rescales by a power of two so that the max-norm lies in `[1/2, 2]`.
    pub fn renormalized(mut self) -> Self {
        let m = self.max_norm();
        if m == 0.0 || !m.is_finite() || (0.5..=2.0).contains(&m) {
            return self;
        }
        let k = m.log2().floor() as i32;
        let factor = 2f64.powi(-k);
        self.value *= factor;
        self.derivative *= factor;
        self.log_scale += k as f64 * LN_2;
        self
    }

    /// Multiplies the represented state by a complex scalar.
    pub fn scaled_by(&self, c: Complex64) -> Self {
        ScaledState { value: self.value * c, derivative: self.derivative * c, log_scale: self.log_scale }.renormalized()
    }

    pub fn true_value(&self) -> Complex64 {
        self.value * self.log_scale.exp()
    }

    pub fn true_derivative(&self) -> Complex64 {
        self.derivative * self.log_scale.exp()
    }
}

/// `f₁ f₂′ − f₁′ f₂` of two scaled states, as mantissa and log-scale.
pub fn wronskian(a: &ScaledState, b: &ScaledState) -> (Complex64, f64) {
    (a.value * b.derivative - a.derivative * b.value, a.log_scale + b.log_scale)
}

/// Tuning of the adaptive integrator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorOptions {
    pub tol: f64,
    pub max_steps: usize,
    /// Upper bound on a single step.
    pub max_step: f64,
}

impl IntegratorOptions {
    pub fn with_tol(tol: f64) -> Self {
        IntegratorOptions { tol, max_steps: 5_000_000, max_step: 0.25 }
    }
}

// Dormand–Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

type Y = [Complex64; 2];

#[inline]
fn rhs(form: &OdeForm, lambda: Complex64, x: f64, y: &Y) -> Result<Y> {
    let (a, b) = form.coefficients(x, lambda);
    if !(a.re.is_finite() && a.im.is_finite() && b.is_finite()) {
        return Err(Error::NonFiniteCoefficient(x));
    }
    Ok([y[1], a * y[0] + y[1] * b])
}

#[inline]
fn axpy(y: &Y, h: f64, terms: &[(f64, &Y)]) -> Y {
    let mut out = *y;
    for (c, k) in terms {
        out[0] += k[0] * (h * c);
        out[1] += k[1] * (h * c);
    }
    out
}

struct Step {
    y_new: Y,
    k7: Y,
    err: Y,
}

fn dopri_step(form: &OdeForm, lambda: Complex64, x: f64, y: &Y, k1: &Y, h: f64) -> Result<Step> {
    let k2 = rhs(form, lambda, x + C2 * h, &axpy(y, h, &[(A21, k1)]))?;
    let k3 = rhs(form, lambda, x + C3 * h, &axpy(y, h, &[(A31, k1), (A32, &k2)]))?;
    let k4 = rhs(form, lambda, x + C4 * h, &axpy(y, h, &[(A41, k1), (A42, &k2), (A43, &k3)]))?;
    let k5 = rhs(form, lambda, x + C5 * h, &axpy(y, h, &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)]))?;
    let k6 = rhs(
        form,
        lambda,
        x + h,
        &axpy(y, h, &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
    )?;
    let y_new = axpy(y, h, &[(B1, k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
    let k7 = rhs(form, lambda, x + h, &y_new)?;
    let zero = [Complex64::default(); 2];
    let err = axpy(&zero, h, &[(E1, k1), (E3, &k3), (E4, &k4), (E5, &k5), (E6, &k6), (E7, &k7)]);
    Ok(Step { y_new, k7, err })
}

fn check_interval(form: &OdeForm, from: f64, to: f64) -> Result<()> {
    if !(from.is_finite() && to.is_finite()) {
        return Err(Error::InvalidParameter("integration bounds must be finite".into()));
    }
    if form.kind.is_radial() && from.min(to) <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "radial integration interval [{}, {}] touches r = 0",
            from.min(to),
            from.max(to)
        )));
    }
    Ok(())
}

fn initial_step(form: &OdeForm, lambda: Complex64, x: f64, span: f64, opts: &IntegratorOptions) -> f64 {
    let (a, b) = form.coefficients(x, lambda);
    let k = a.norm().sqrt() + b.abs();
    let h = 0.05 * opts.tol.powf(0.2) / (1.0 + k);
    h.min(span).min(opts.max_step)
}

/// Integrates from `from` to `to` (either direction) with adaptive steps.
/// Returns the final state and, when `record` is set, the accepted mesh
/// (including both endpoints).
fn integrate_impl(
    form: &OdeForm,
    lambda: Complex64,
    from: f64,
    to: f64,
    init: ScaledState,
    opts: &IntegratorOptions,
    mut record: Option<&mut Vec<f64>>,
) -> Result<ScaledState> {
    check_interval(form, from, to)?;
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tol = {} must be positive", opts.tol)));
    }
    let mut state = init.renormalized();
    if let Some(m) = record.as_deref_mut() {
        m.clear();
        m.push(from);
    }
    if from == to {
        return Ok(state);
    }
    let dir = (to - from).signum();
    let span = (to - from).abs();
    let mut x = from;
    let mut y: Y = [state.value, state.derivative];
    let mut k1 = rhs(form, lambda, x, &y)?;
    let mut h = initial_step(form, lambda, x, span, opts);
    let mut steps = 0usize;
    loop {
        let remaining = (to - x) * dir;
        if remaining <= 0.0 {
            break;
        }
        let mut last = false;
        if h >= remaining {
            h = remaining;
            last = true;
        }
        let st = dopri_step(form, lambda, x, &y, &k1, dir * h)?;
        let scale = y[0].norm().max(y[1].norm()).max(st.y_new[0].norm().max(st.y_new[1].norm()));
        let err = st.err[0].norm().max(st.err[1].norm()) / (opts.tol * scale.max(f64::MIN_POSITIVE));
        if !err.is_finite() {
            return Err(Error::NonFiniteCoefficient(x));
        }
        if err <= 1.0 {
            x = if last { to } else { x + dir * h };
            y = st.y_new;
            k1 = st.k7;
            // power-of-two renormalisation; rhs is linear so k1 rescales exactly
            let m = y[0].norm().max(y[1].norm());
            if !(0.5..=2.0).contains(&m) && m > 0.0 {
                let k = m.log2().floor() as i32;
                let f = 2f64.powi(-k);
                y[0] *= f;
                y[1] *= f;
                k1[0] *= f;
                k1[1] *= f;
                state.log_scale += k as f64 * LN_2;
            }
            if let Some(m) = record.as_deref_mut() {
                m.push(x);
            }
            if last {
                break;
            }
            let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            h = (h * fac).min(opts.max_step);
        } else {
            h *= (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
        }
        if h < 1e-14 * (1.0 + x.abs()) {
            return Err(Error::StepSizeUnderflow { x, h });
        }
        steps += 1;
        if steps > opts.max_steps {
            return Err(Error::StepSizeUnderflow { x, h });
        }
    }
    state.value = y[0];
    state.derivative = y[1];
    Ok(state.renormalized())
}

/// Adaptive integration of the form's ODE from `from` to `to`.
pub fn integrate(form: &OdeForm, lambda: Complex64, from: f64, to: f64, init: ScaledState, tol: f64) -> Result<ScaledState> {
    integrate_impl(form, lambda, from, to, init, &IntegratorOptions::with_tol(tol), None)
}

/// As [`integrate`], also returning the accepted mesh.
pub fn integrate_recording(
    form: &OdeForm,
    lambda: Complex64,
    from: f64,
    to: f64,
    init: ScaledState,
    opts: &IntegratorOptions,
) -> Result<(ScaledState, Vec<f64>)> {
    let mut mesh = Vec::new();
    let s = integrate_impl(form, lambda, from, to, init, opts, Some(&mut mesh))?;
    Ok((s, mesh))
}

/// Adaptive integration with explicit options.
pub fn integrate_with(
    form: &OdeForm,
    lambda: Complex64,
    from: f64,
    to: f64,
    init: ScaledState,
    opts: &IntegratorOptions,
) -> Result<ScaledState> {
    integrate_impl(form, lambda, from, to, init, opts, None)
}

/// Replays a fixed mesh (as returned by [`integrate_recording`]) with the
/// fifth-order Dormand–Prince update and no error control. For a fixed mesh
/// the result depends analytically on `lambda`.
pub fn integrate_on_mesh(form: &OdeForm, lambda: Complex64, mesh: &[f64], init: ScaledState) -> Result<ScaledState> {
    let mut state = init.renormalized();
    if mesh.len() < 2 {
        return Ok(state);
    }
    check_interval(form, mesh[0], mesh[mesh.len() - 1])?;
    let mut y: Y = [state.value, state.derivative];
    let mut k1 = rhs(form, lambda, mesh[0], &y)?;
    for w in mesh.windows(2) {
        let st = dopri_step(form, lambda, w[0], &y, &k1, w[1] - w[0])?;
        y = st.y_new;
        k1 = st.k7;
        let m = y[0].norm().max(y[1].norm());
        if !(0.5..=2.0).contains(&m) && m > 0.0 && m.is_finite() {
            let k = m.log2().floor() as i32;
            let f = 2f64.powi(-k);
            y[0] *= f;
            y[1] *= f;
            k1[0] *= f;
            k1[1] *= f;
            state.log_scale += k as f64 * LN_2;
        }
    }
    state.value = y[0];
    state.derivative = y[1];
    Ok(state.renormalized())
}

/// Integrates through the ordered `points` (starting at `points[0]` with
/// `init`) and returns the state at every point.
pub fn integrate_through(
    form: &OdeForm,
    lambda: Complex64,
    points: &[f64],
    init: ScaledState,
    tol: f64,
) -> Result<Vec<ScaledState>> {
    let mut out = Vec::with_capacity(points.len());
    let Some(&first) = points.first() else {
        return Ok(out);
    };
    let _ = first;
    let mut s = init.renormalized();
    out.push(s);
    let opts = IntegratorOptions::with_tol(tol);
    for w in points.windows(2) {
        s = integrate_impl(form, lambda, w[0], w[1], s, &opts, None)?;
        out.push(s);
    }
    Ok(out)
}

/// Regular solution `r^l (1 + c₂ r² + …)` and its derivative at `r0`.
pub fn radial_series_start(form: &OdeForm, lambda: Complex64, r0: f64) -> Result<ScaledState> {
    let l = form.kind.angular_index().ok_or(Error::NotRadial)?;
    if !(r0 > 0.0) {
        return Err(Error::InvalidParameter(format!("r0 = {r0} must be positive")));
    }
    let c2 = series_coefficient(form, lambda)?;
    let lf = l as f64;
    // factor r0^l out into the log-scale
    let value = Complex64::new(1.0, 0.0) + c2 * (r0 * r0);
    let derivative = Complex64::new(lf / r0, 0.0) + c2 * ((lf + 2.0) * r0);
    let state = ScaledState { value, derivative, log_scale: lf * r0.ln() };
    Ok(state.renormalized())
}

/// Second Taylor coefficient `c₂` of the regular radial solution.
pub fn series_coefficient(form: &OdeForm, lambda: Complex64) -> Result<Complex64> {
    let l = form.kind.angular_index().ok_or(Error::NotRadial)? as f64;
    let q0 = form.potential.profile(0.0);
    let denom = match form.kind {
        OdeKind::Radial3d { .. } => 4.0 * l + 6.0,
        OdeKind::Radial2d { .. } => 4.0 * l + 4.0,
        OdeKind::Cartesian => unreachable!(),
    };
    Ok((q0 - lambda) / denom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::SingularPart;

    fn form(q: &str) -> OdeForm {
        OdeForm::cartesian(PotentialSpec::new(q, "0", SingularPart::None, 1).unwrap())
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn free_sine() {
        let tol = 1e-10;
        let s = integrate(&form("0"), c(1.0, 0.0), 0.0, std::f64::consts::PI, ScaledState::new(c(0.0, 0.0), c(1.0, 0.0)), tol)
            .unwrap();
        assert!(s.true_value().norm() < 10.0 * tol);
        assert!((s.true_derivative() + 1.0).norm() < 10.0 * tol);
    }

    #[test]
    fn hermite_ground_state() {
        let tol = 1e-10;
        let s = integrate(&form("x^2"), c(1.0, 0.0), 0.0, 3.0, ScaledState::new(c(1.0, 0.0), c(0.0, 0.0)), tol).unwrap();
        let exact = (-4.5f64).exp();
        assert!((s.true_value() - exact).norm() / exact < 1e3 * tol);
        assert!((s.true_derivative() + 3.0 * exact).norm() / exact < 1e3 * tol);
    }

    #[test]
    fn renormalisation_keeps_state_bounded() {
        // e^{+x^2/2}-type growth over [0, 15] overflows without rescaling
        let s = integrate(&form("x^2"), c(-1.0, 0.0), 0.0, 15.0, ScaledState::new(c(1.0, 0.0), c(0.0, 0.0)), 1e-9).unwrap();
        assert!((0.5..=2.0).contains(&s.max_norm()));
        assert!(s.log_scale > 100.0);
        // exact solution e^{x^2/2}
        let ln_val = (s.value.norm()).ln() + s.log_scale;
        assert!((ln_val - 112.5).abs() < 1e-6);
    }

    #[test]
    fn backward_integration() {
        let tol = 1e-10;
        let e = (-4.5f64).exp();
        let s = integrate(&form("x^2"), c(1.0, 0.0), 3.0, 0.0, ScaledState::new(c(e, 0.0), c(-3.0 * e, 0.0)), tol).unwrap();
        assert!((s.true_value() - 1.0).norm() < 1e3 * tol);
        assert!(s.true_derivative().norm() < 1e3 * tol);
    }

    #[test]
    fn mesh_replay_matches_adaptive_run() {
        let f = form("i*x^3");
        let opts = IntegratorOptions::with_tol(1e-10);
        let init = ScaledState::new(c(0.0, 0.0), c(1.0, 0.0));
        let (a, mesh) = integrate_recording(&f, c(3.0, 0.5), -5.0, 0.0, init, &opts).unwrap();
        let b = integrate_on_mesh(&f, c(3.0, 0.5), &mesh, init).unwrap();
        assert_eq!(a.log_scale, b.log_scale);
        // step widths are recomputed as mesh differences, so only roundoff separates the two
        assert!((a.value - b.value).norm() < 1e-12);
    }

    #[test]
    fn radial_guards() {
        let f = OdeForm::new(OdeKind::Radial3d { l: 0 }, PotentialSpec::builtin("harmonic").unwrap());
        assert!(integrate(&f, c(1.0, 0.0), 0.0, 1.0, ScaledState::new(c(1.0, 0.0), c(0.0, 0.0)), 1e-8).is_err());
        assert_eq!(radial_series_start(&form("x^2"), c(1.0, 0.0), 1e-3), Err(Error::NotRadial));
    }

    #[test]
    fn series_start_examples() {
        let harm = PotentialSpec::new("r^2", "0", SingularPart::None, 3).unwrap();
        let f0 = OdeForm::new(OdeKind::Radial3d { l: 0 }, harm.clone());
        assert_eq!(series_coefficient(&f0, c(3.0, 0.0)).unwrap(), c(-0.5, 0.0));
        let s = radial_series_start(&f0, c(3.0, 0.0), 1e-3).unwrap();
        assert!((s.true_value() - (1.0 - 0.5e-6)).norm() < 1e-15);

        let f1 = OdeForm::new(OdeKind::Radial3d { l: 1 }, harm);
        let r0 = 1e-6;
        let s = radial_series_start(&f1, c(2.0, 1.0), r0).unwrap();
        assert!((s.true_value() / r0 - 1.0).norm() < 1e-10);
        assert!((s.true_derivative() - 1.0).norm() < 1e-10);

        let rot = PotentialSpec::builtin("rotated_harmonic(1+3i)").unwrap();
        let f2 = OdeForm::new(OdeKind::Radial2d { l: 2 }, rot);
        assert_eq!(series_coefficient(&f2, c(0.0, 0.0)).unwrap(), c(0.0, 0.0));
        let s = radial_series_start(&f2, c(0.0, 0.0), 1e-3).unwrap();
        assert!((s.true_value() - 1e-6).norm() < 1e-18);
    }

    #[test]
    fn radial_series_satisfies_ode() {
        // residual of the two-term series inside the ODE is O(r^{l+2})
        let harm = PotentialSpec::new("r^2", "0", SingularPart::None, 3).unwrap();
        let f = OdeForm::new(OdeKind::Radial3d { l: 2 }, harm);
        let lam = c(7.0, 0.0);
        let r0 = 1e-3;
        let a = radial_series_start(&f, lam, r0).unwrap();
        let b = integrate(&f, lam, r0, 2.0 * r0, a, 1e-13).unwrap();
        let direct = radial_series_start(&f, lam, 2.0 * r0).unwrap();
        let rel = (b.true_value() - direct.true_value()).norm() / direct.true_value().norm();
        assert!(rel < 1e-9, "rel {rel}");
    }
}
