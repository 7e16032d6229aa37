use std::fmt;
use std::str::FromStr;

use nalgebra::Point3;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Polyharmonic radial basis functions.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kernel {
    /// `phi(r) = r`
    #[default]
    Biharmonic,
    /// `phi(r) = r^3`
    Triharmonic,
    /// `phi(r) = r^2 log r`, with `phi(0) = 0`
    #[serde(alias = "tps", alias = "thin-plate-spline")]
    ThinPlate,
}

impl Kernel {
    pub const ALL: [Kernel; 3] = [Kernel::Biharmonic, Kernel::Triharmonic, Kernel::ThinPlate];

    #[inline]
    pub fn radial(self, r: f64) -> f64 {
        match self {
            Kernel::Biharmonic => r,
            Kernel::Triharmonic => r * r * r,
            Kernel::ThinPlate => {
                if r > 0.0 {
                    r * r * r.ln()
                } else {
                    0.0
                }
            }
        }
    }

    /// `phi'(r) / r`, so that `grad_x phi(|x - y|) = factor * (x - y)`.
    ///
    /// The biharmonic kernel is not differentiable at `r = 0`; zero is
    /// returned there.
    #[inline]
    pub fn gradient_factor(self, r: f64) -> f64 {
        match self {
            Kernel::Biharmonic => {
                if r > 0.0 {
                    1.0 / r
                } else {
                    0.0
                }
            }
            Kernel::Triharmonic => 3.0 * r,
            Kernel::ThinPlate => {
                if r > 0.0 {
                    2.0 * r.ln() + 1.0
                } else {
                    0.0
                }
            }
        }
    }

    #[inline]
    pub fn eval(self, x: &Point3<f64>, y: &Point3<f64>) -> f64 {
        self.radial((x - y).norm())
    }

    pub fn name(self) -> &'static str {
        match self {
            Kernel::Biharmonic => "biharmonic",
            Kernel::Triharmonic => "triharmonic",
            Kernel::ThinPlate => "thin-plate",
        }
    }
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Kernel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "biharmonic" => Ok(Kernel::Biharmonic),
            "triharmonic" => Ok(Kernel::Triharmonic),
            "thin-plate" | "tps" | "thin-plate-spline" => Ok(Kernel::ThinPlate),
            other => Err(Error::invalid(format!("unknown kernel `{other}`"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn reference_values() {
        let o = Point3::origin();
        let p = Point3::new(3.0, 4.0, 0.0);
        assert_relative_eq!(Kernel::Biharmonic.eval(&o, &p), 5.0);
        assert_relative_eq!(Kernel::Triharmonic.eval(&o, &p), 125.0);
        assert_eq!(Kernel::ThinPlate.eval(&o, &Point3::new(0.0, 1.0, 0.0)), 0.0);
        assert_eq!(Kernel::ThinPlate.eval(&p, &p), 0.0);
    }

    #[test]
    fn gradient_factor_matches_derivative() {
        for k in Kernel::ALL {
            for r in [0.3, 1.0, 2.7] {
                let h = 1e-6;
                let fd = (k.radial(r + h) - k.radial(r - h)) / (2.0 * h);
                assert_relative_eq!(k.gradient_factor(r) * r, fd, max_relative = 1e-7);
            }
        }
    }

    proptest! {
        #[test]
        fn symmetric(ax in -5.0..5.0f64, ay in -5.0..5.0f64, az in -5.0..5.0f64,
                     bx in -5.0..5.0f64, by in -5.0..5.0f64, bz in -5.0..5.0f64) {
            let a = Point3::new(ax, ay, az);
            let b = Point3::new(bx, by, bz);
            for k in Kernel::ALL {
                prop_assert_eq!(k.eval(&a, &b), k.eval(&b, &a));
            }
        }
    }
}
