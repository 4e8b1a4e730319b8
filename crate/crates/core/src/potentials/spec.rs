use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::Expr;

/// The singular part `W` of the potential.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SingularPart {
    None,
    /// Bounded perturbation applied inside the closed ball of the given radius.
    Bounded { w: Expr, radius: f64 },
    /// Point interaction `coupling · δ(x − site)`, one-dimensional only.
    Delta { site: f64, coupling: Complex64 },
}

/// Declared constants of the decomposition. Only `theta`, `c0`, `shift`,
/// the gradient and `U` bounds take part in numerical checks; the `W`
/// constants are carried as metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct DeclaredBounds {
    pub theta: Option<f64>,
    pub c0: Option<f64>,
    pub shift: Option<Complex64>,
    pub a_grad: Option<f64>,
    pub b_grad: Option<f64>,
    pub a_u: Option<f64>,
    pub b_u: Option<f64>,
    pub a_w: Option<f64>,
    pub b_w: Option<f64>,
    pub m_w: Option<f64>,
}

/// A potential `Q = Q₀ − U + W` on `ℝᵈ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialSpec {
    pub q0: Expr,
    #[serde(default = "Expr::zero")]
    pub u: Expr,
    #[serde(default = "no_singular")]
    pub w: SingularPart,
    #[serde(default)]
    pub declared: Option<DeclaredBounds>,
    pub dimension: usize,
}

fn no_singular() -> SingularPart {
    SingularPart::None
}

/// Names accepted by [`PotentialSpec::builtin`].
pub const BUILTIN_NAMES: &[&str] = &[
    "ix",
    "ix3",
    "harmonic",
    "rotated_harmonic(1+3i)",
    "ix3_minus_x2",
    "shifted_complex_harmonic_delta",
];

impl PotentialSpec {
    pub fn new(q0: &str, u: &str, w: SingularPart, dimension: usize) -> Result<Self> {
        let spec = PotentialSpec {
            q0: Expr::parse(q0)?,
            u: Expr::parse(u)?,
            w,
            declared: None,
            dimension,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_declared(mut self, declared: DeclaredBounds) -> Self {
        self.declared = Some(declared);
        self
    }

    /// Named potentials used by the experiments.
    ///
    /// `rotated_harmonic(c)` accepts any complex coefficient `c`, e.g.
    /// `rotated_harmonic(1+3i)`.
    pub fn builtin(name: &str) -> Result<Self> {
        let name = name.trim();
        if let Some(inner) = name.strip_prefix("rotated_harmonic(").and_then(|s| s.strip_suffix(')')) {
            let coeff = Expr::parse(inner)?;
            return PotentialSpec::new(&format!("({})*r^2", coeff.source()), "0", SingularPart::None, 2);
        }
        match name {
            "ix" => PotentialSpec::new("i*x", "0", SingularPart::None, 1),
            "ix3" => PotentialSpec::new("i*x^3", "0", SingularPart::None, 1),
            "harmonic" => PotentialSpec::new("r^2", "0", SingularPart::None, 1).map(|s| {
                s.with_declared(DeclaredBounds {
                    theta: Some(0.0),
                    shift: Some(Complex64::new(-1.0, 0.0)),
                    ..Default::default()
                })
            }),
            "ix3_minus_x2" => PotentialSpec::new("i*x^3", "x^2", SingularPart::None, 1),
            "shifted_complex_harmonic_delta" => PotentialSpec::new(
                "(1+i)*x^2",
                "0",
                SingularPart::Delta { site: 0.0, coupling: Complex64::new(0.0, 1.0) },
                1,
            )
            .map(|s| {
                s.with_declared(DeclaredBounds {
                    theta: Some(std::f64::consts::FRAC_PI_4),
                    shift: Some(Complex64::new(-1.0, 0.0)),
                    ..Default::default()
                })
            }),
            other => Err(Error::Config(format!(
                "unknown built-in potential '{other}' (known: {})",
                BUILTIN_NAMES.join(", ")
            ))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=3).contains(&self.dimension) {
            return Err(Error::Config(format!("dimension {} not in 1..=3", self.dimension)));
        }
        if matches!(self.w, SingularPart::Delta { .. }) && self.dimension != 1 {
            return Err(Error::Config("delta interactions require dimension 1".into()));
        }
        Ok(())
    }

    pub fn q0_at(&self, p: &[f64]) -> Complex64 {
        self.q0.eval(p)
    }

    /// `U(x)`; only the real part of the expression is used.
    pub fn u_at(&self, p: &[f64]) -> f64 {
        self.u.eval(p).re
    }

    /// Regular part of `Q` at `p`: `Q₀ − U` plus a bounded `W` inside its radius.
    pub fn regular_at(&self, p: &[f64]) -> Complex64 {
        let mut q = self.q0.eval(p) - self.u_at(p);
        if let SingularPart::Bounded { w, radius } = &self.w {
            let r = p.iter().map(|t| t * t).sum::<f64>().sqrt();
            if r <= *radius {
                q += w.eval(p);
            }
        }
        q
    }

    /// The regular part along the first coordinate axis, as used by the
    /// one-dimensional and radial ODE forms.
    pub fn profile(&self, t: f64) -> Complex64 {
        let mut p = [0.0; 3];
        p[0] = t;
        self.regular_at(&p[..self.dimension])
    }

    pub fn delta(&self) -> Option<(f64, Complex64)> {
        match self.w {
            SingularPart::Delta { site, coupling } => Some((site, coupling)),
            _ => None,
        }
    }

    pub fn shift(&self) -> Complex64 {
        self.declared.as_ref().and_then(|d| d.shift).unwrap_or_default()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_parse() {
        for name in BUILTIN_NAMES {
            let s = PotentialSpec::builtin(name).unwrap();
            s.validate().unwrap();
        }
        assert!(PotentialSpec::builtin("nope").is_err());
        let rot = PotentialSpec::builtin("rotated_harmonic(2-1i)").unwrap();
        assert_eq!(rot.profile(2.0), Complex64::new(8.0, -4.0));
    }

    #[test]
    fn decomposition_evaluates() {
        let s = PotentialSpec::builtin("ix3_minus_x2").unwrap();
        assert_eq!(s.profile(2.0), Complex64::new(-4.0, 8.0));
        let b = PotentialSpec::new(
            "x^2",
            "0",
            SingularPart::Bounded { w: Expr::parse("5").unwrap(), radius: 1.0 },
            1,
        )
        .unwrap();
        assert_eq!(b.profile(0.5).re, 5.25);
        assert_eq!(b.profile(2.0).re, 4.0);
    }

    #[test]
    fn delta_requires_one_dimension() {
        let w = SingularPart::Delta { site: 0.0, coupling: Complex64::new(1.0, 0.0) };
        assert!(PotentialSpec::new("x^2", "0", w.clone(), 2).is_err());
        assert!(PotentialSpec::new("x^2", "0", w, 1).is_ok());
    }

    #[test]
    fn json_round_trip() {
        let s = PotentialSpec::builtin("shifted_complex_harmonic_delta").unwrap();
        let js = serde_json::to_string(&s).unwrap();
        let back: PotentialSpec = serde_json::from_str(&js).unwrap();
        assert_eq!(back, s);
        let minimal: PotentialSpec = serde_json::from_str(r#"{"q0": "i*x^3", "dimension": 1}"#).unwrap();
        assert!(minimal.u.is_zero());
        assert_eq!(minimal.w, SingularPart::None);
    }
}
