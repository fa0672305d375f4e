use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Axis-aligned rectangle in the complex λ-plane.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ContourRegion {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl ContourRegion {
    pub fn new(re_min: f64, re_max: f64, im_min: f64, im_max: f64) -> Result<Self> {
        let r = ContourRegion {
            re_min,
            re_max,
            im_min,
            im_max,
        };
        r.check()?;
        Ok(r)
    }

    pub fn check(&self) -> Result<()> {
        let finite = [self.re_min, self.re_max, self.im_min, self.im_max]
            .iter()
            .all(|v| v.is_finite());
        if !finite || !(self.re_min < self.re_max) || !(self.im_min < self.im_max) {
            return Err(Error::Domain(format!("ill-ordered region {self}")));
        }
        Ok(())
    }

    /// Square of half-width `radius` centred at `c`.
    pub fn around(c: Complex64, radius: f64) -> Self {
        ContourRegion {
            re_min: c.re - radius,
            re_max: c.re + radius,
            im_min: c.im - radius,
            im_max: c.im + radius,
        }
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

    /// Distance from `z` to the rectangle (0 inside).
    pub fn distance_to(&self, z: Complex64) -> f64 {
        let dx = (self.re_min - z.re).max(0.0).max(z.re - self.re_max);
        let dy = (self.im_min - z.im).max(0.0).max(z.im - self.im_max);
        dx.hypot(dy)
    }

    /// Corners in counter-clockwise order starting at the lower left.
    pub fn corners(&self) -> [Complex64; 4] {
        [
            Complex64::new(self.re_min, self.im_min),
            Complex64::new(self.re_max, self.im_min),
            Complex64::new(self.re_max, self.im_max),
            Complex64::new(self.re_min, self.im_max),
        ]
    }

    /// Same centre, half-extents multiplied by `factor`, then shifted by `shift`.
    pub fn dilated(&self, factor: f64, shift: Complex64) -> Self {
        let c = self.center() + shift;
        let hw = 0.5 * self.width() * factor;
        let hh = 0.5 * self.height() * factor;
        ContourRegion {
            re_min: c.re - hw,
            re_max: c.re + hw,
            im_min: c.im - hh,
            im_max: c.im + hh,
        }
    }
}

impl fmt::Display for ContourRegion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}, {}] x [{}, {}]",
            self.re_min, self.re_max, self.im_min, self.im_max
        )
    }
}
