//! Smooth compactly supported test functions.

use crate::error::{Error, Result};

/// `a·(1 − ((x − c)/r)²)⁴` on `|x − c| < r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bump {
    pub center: f64,
    pub radius: f64,
    pub amplitude: f64,
}

impl Bump {
    pub fn new(center: f64, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !center.is_finite() {
            return Err(Error::InvalidTestFunction(format!(
                "bump needs a finite center and positive radius, got ({center}, {radius})"
            )));
        }
        Ok(Bump { center, radius, amplitude: 1.0 })
    }

    pub fn support(&self) -> (f64, f64) {
        (self.center - self.radius, self.center + self.radius)
    }

    pub fn value(&self, x: f64) -> f64 {
        let z = (x - self.center) / self.radius;
        if z.abs() >= 1.0 {
            return 0.0;
        }
        let s = 1.0 - z * z;
        self.amplitude * s * s * s * s
    }

    pub fn deriv(&self, x: f64) -> f64 {
        let z = (x - self.center) / self.radius;
        if z.abs() >= 1.0 {
            return 0.0;
        }
        let s = 1.0 - z * z;
        -8.0 * self.amplitude * z * s * s * s / self.radius
    }

    pub fn second_deriv(&self, x: f64) -> f64 {
        let z = (x - self.center) / self.radius;
        if z.abs() >= 1.0 {
            return 0.0;
        }
        let s = 1.0 - z * z;
        self.amplitude * (-8.0 * s * s * s + 48.0 * z * z * s * s) / (self.radius * self.radius)
    }
}

/// Product bump `φ(t, x) = φ_t(t)·φ_x(x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpaceTimeBump {
    pub time: Bump,
    pub space: Bump,
}

impl SpaceTimeBump {
    pub fn new(t_center: f64, t_radius: f64, x_center: f64, x_radius: f64) -> Result<Self> {
        Ok(SpaceTimeBump { time: Bump::new(t_center, t_radius)?, space: Bump::new(x_center, x_radius)? })
    }
    pub fn value(&self, t: f64, x: f64) -> f64 {
        self.time.value(t) * self.space.value(x)
    }
    pub fn dt(&self, t: f64, x: f64) -> f64 {
        self.time.deriv(t) * self.space.value(x)
    }
    pub fn dx(&self, t: f64, x: f64) -> f64 {
        self.time.value(t) * self.space.deriv(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivatives_match_differences() {
        let b = Bump::new(0.3, 0.7).unwrap();
        let h = 1e-5;
        for x in [-0.2, 0.1, 0.5, 0.9] {
            let d1 = (b.value(x + h) - b.value(x - h)) / (2.0 * h);
            let d2 = (b.deriv(x + h) - b.deriv(x - h)) / (2.0 * h);
            assert!((d1 - b.deriv(x)).abs() < 1e-8);
            assert!((d2 - b.second_deriv(x)).abs() < 1e-6);
        }
    }
}
