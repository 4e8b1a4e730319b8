//! Analytic resolvent-set enclosures and the completeness threshold.
//!
//! Every [`PlaneRegion`] describes a set that lies in the resolvent set of
//! the operator (or of every truncation), together with an explicit bound on
//! the resolvent norm there. Outside the region the bound is `+∞`.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PlaneRegion {
    /// Left sector with asymptote slope `(1−√b′)/√b′`, shifted by `−m_tr²`
    /// (`m_tr = 0` gives the whole-space sector).
    SectorR { b_prime: f64, a_wu: f64, m_tr: f64 },
    /// Left hyperbolic region with asymptote slope `√((1−b′)/(2+b′))`.
    /// `d` is the constant of the `d/|Re λ|` bound.
    HyperbolicRtilde { b_prime: f64, a_tilde: f64, d: f64 },
    /// Complement of the closed sector `{|arg(λ − μ₀)| ≤ θ₀}` containing the
    /// numerical ranges; bound `1/dist(λ, sector)`.
    UniformSectorS { mu0: Complex64, theta0: f64 },
    /// `{Re λ < c}`; bound `1/(c − Re λ)`.
    LeftHalfplane { c: f64 },
}

fn check_b_prime(b: f64) -> Result<()> {
    if b > 0.0 && b < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("b' = {b} not in (0, 1)")))
    }
}

fn check_nonneg(name: &str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} = {v} must be finite and >= 0")))
    }
}

impl PlaneRegion {
    pub fn sector_r(b_prime: f64, a_wu: f64, m_tr: f64) -> Result<Self> {
        check_b_prime(b_prime)?;
        check_nonneg("a_wu", a_wu)?;
        check_nonneg("m_tr", m_tr)?;
        Ok(PlaneRegion::SectorR { b_prime, a_wu, m_tr })
    }

    pub fn hyperbolic_rtilde(b_prime: f64, a_tilde: f64, d: f64) -> Result<Self> {
        check_b_prime(b_prime)?;
        check_nonneg("a_tilde", a_tilde)?;
        if !(d > 0.0 && d.is_finite()) {
            return Err(Error::InvalidParameter(format!("d = {d} must be positive")));
        }
        Ok(PlaneRegion::HyperbolicRtilde { b_prime, a_tilde, d })
    }

    pub fn uniform_sector_s(mu0: Complex64, theta0: f64) -> Result<Self> {
        if !(0.0..FRAC_PI_2).contains(&theta0) {
            return Err(Error::InvalidParameter(format!("theta0 = {theta0} not in [0, pi/2)")));
        }
        Ok(PlaneRegion::UniformSectorS { mu0, theta0 })
    }

    pub fn left_halfplane(c: f64) -> Result<Self> {
        if !c.is_finite() {
            return Err(Error::InvalidParameter("c must be finite".into()));
        }
        Ok(PlaneRegion::LeftHalfplane { c })
    }

    pub fn contains(&self, lambda: Complex64) -> bool {
        self.denominator(lambda).is_some()
    }

    /// Explicit resolvent-norm bound; `+∞` outside the region.
    pub fn resolvent_bound(&self, lambda: Complex64) -> f64 {
        match (self, self.denominator(lambda)) {
            (_, None) => f64::INFINITY,
            (PlaneRegion::HyperbolicRtilde { d, .. }, Some(den)) => d / den,
            (_, Some(den)) => 1.0 / den,
        }
    }

    // Positive denominator of the bound when `lambda` is a member.
    fn denominator(&self, lambda: Complex64) -> Option<f64> {
        let (x, y) = (lambda.re, lambda.im.abs());
        match *self {
            PlaneRegion::SectorR { b_prime, a_wu, m_tr } => {
                let sb = b_prime.sqrt();
                let shifted = x + m_tr * m_tr;
                let member = x < -m_tr * m_tr - a_wu / (1.0 - sb)
                    && y < (1.0 - sb) / sb * shifted.abs() - a_wu / sb;
                let den = (1.0 - sb) * shifted.abs() - sb * y - a_wu;
                member.then_some(den.max(f64::MIN_POSITIVE))
            }
            PlaneRegion::HyperbolicRtilde { b_prime, a_tilde, .. } => {
                let member = x < -((2.0 + b_prime) / (1.0 - b_prime) * a_tilde).sqrt()
                    && y * y < (1.0 - b_prime) / (2.0 + b_prime) * x * x - a_tilde;
                member.then_some(x.abs().max(f64::MIN_POSITIVE))
            }
            PlaneRegion::UniformSectorS { mu0, theta0 } => {
                let dist = distance_to_sector(lambda - mu0, theta0);
                (dist > 0.0).then_some(dist)
            }
            PlaneRegion::LeftHalfplane { c } => (x < c).then_some(c - x),
        }
    }
}

// Distance from z to {|arg w| <= theta}.
fn distance_to_sector(z: Complex64, theta: f64) -> f64 {
    let phi = z.arg().abs();
    if phi <= theta {
        0.0
    } else if phi - theta >= FRAC_PI_2 {
        z.norm()
    } else {
        z.norm() * (phi - theta).sin()
    }
}

fn completeness_angle(b: f64) -> f64 {
    if b == 0.0 {
        return FRAC_PI_2;
    }
    let sb = b.sqrt();
    ((1.0 - sb) / sb).max(((1.0 - b) / (2.0 + b)).sqrt()).atan()
}

/// Smallest exponent `β` above which the root-vector completeness criterion
/// applies for the family `−d²/dx² + i|x|^β sgn x − α|x|^β`.
pub fn completeness_threshold(alpha: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::OutOfRange(format!("alpha = {alpha} not in [0, 1)")));
    }
    Ok(2.0 * (PI / completeness_angle(alpha * alpha) - 1.0))
}
