//! Axis-aligned rectangles in the complex plane and a log-scaled complex number.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Closed axis-aligned rectangle `[re_min, re_max] × [im_min, im_max]·i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl Rect {
    pub fn new(re_min: f64, re_max: f64, im_min: f64, im_max: f64) -> Result<Self> {
        let r = Rect { re_min, re_max, im_min, im_max };
        if !(re_min < re_max && im_min < im_max) || ![re_min, re_max, im_min, im_max].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidParameter(format!("degenerate rectangle {r}")));
        }
        Ok(r)
    }

    pub fn width(&self) -> f64 {
        self.re_max - self.re_min
    }

    pub fn height(&self) -> f64 {
        self.im_max - self.im_min
    }

    pub fn diameter(&self) -> f64 {
        self.width().hypot(self.height())
    }

    pub fn center(&self) -> Complex64 {
        Complex64::new(0.5 * (self.re_min + self.re_max), 0.5 * (self.im_min + self.im_max))
    }

    pub fn contains(&self, z: Complex64) -> bool {
        z.re >= self.re_min && z.re <= self.re_max && z.im >= self.im_min && z.im <= self.im_max
    }

    /// Membership in the rectangle grown by `margin` on every side.
    pub fn contains_with_margin(&self, z: Complex64, margin: f64) -> bool {
        z.re >= self.re_min - margin
            && z.re <= self.re_max + margin
            && z.im >= self.im_min - margin
            && z.im <= self.im_max + margin
    }

    pub fn translate(&self, c: Complex64) -> Rect {
        Rect {
            re_min: self.re_min + c.re,
            re_max: self.re_max + c.re,
            im_min: self.im_min + c.im,
            im_max: self.im_max + c.im,
        }
    }

    /// Corners in counter-clockwise order starting at the lower-left corner.
    pub fn corners(&self) -> [Complex64; 4] {
        [
            Complex64::new(self.re_min, self.im_min),
            Complex64::new(self.re_max, self.im_min),
            Complex64::new(self.re_max, self.im_max),
            Complex64::new(self.re_min, self.im_max),
        ]
    }

    /// Split along the longer side at fraction `t` of that side.
    pub fn split(&self, t: f64) -> (Rect, Rect) {
        if self.width() >= self.height() {
            let x = self.re_min + t * self.width();
            (Rect { re_max: x, ..*self }, Rect { re_min: x, ..*self })
        } else {
            let y = self.im_min + t * self.height();
            (Rect { im_max: y, ..*self }, Rect { im_min: y, ..*self })
        }
    }
}

impl fmt::Display for Rect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]x[{}, {}]i", self.re_min, self.re_max, self.im_min, self.im_max)
    }
}

/// Parses `re_min,re_max,im_min,im_max`.
impl FromStr for Rect {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<f64> = s
            .split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Config(format!("bad rectangle '{s}': {e}")))?;
        if parts.len() != 4 {
            return Err(Error::Config(format!("rectangle '{s}' needs four numbers")));
        }
        Rect::new(parts[0], parts[1], parts[2], parts[3])
    }
}

/// A complex number stored as `mantissa · e^{log_scale}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledComplex {
    pub mantissa: Complex64,
    pub log_scale: f64,
}

impl ScaledComplex {
    pub fn new(mantissa: Complex64, log_scale: f64) -> Self {
        ScaledComplex { mantissa, log_scale }
    }

    pub fn ln_abs(&self) -> f64 {
        self.mantissa.norm().ln() + self.log_scale
    }

    /// Value expressed relative to the reference scale `e^{reference}`.
    pub fn relative_to(&self, reference: f64) -> Complex64 {
        self.mantissa * (self.log_scale - reference).exp()
    }

    pub fn to_complex(&self) -> Complex64 {
        self.relative_to(0.0)
    }

    pub fn mul(&self, other: &ScaledComplex) -> ScaledComplex {
        ScaledComplex::new(self.mantissa * other.mantissa, self.log_scale + other.log_scale)
    }

    pub fn div(&self, other: &ScaledComplex) -> ScaledComplex {
        ScaledComplex::new(self.mantissa / other.mantissa, self.log_scale - other.log_scale)
    }
}
