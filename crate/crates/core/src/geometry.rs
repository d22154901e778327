//! Planar points, path-loss models and the link configuration.

use std::cmp::Ordering;
use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{FmeError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const ORIGIN: Point2 = Point2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Point2 { x, y }
    }

    pub fn polar(r: f64, theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Point2 { x: r * c, y: r * s }
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn norm_sq(self) -> f64 {
        self.x * self.x + self.y * self.y
    }

    pub fn dist(self, other: Point2) -> f64 {
        (self - other).norm()
    }

    /// Angle in `[0, 2π)`.
    pub fn angle(self) -> f64 {
        let a = self.y.atan2(self.x);
        if a < 0.0 {
            a + 2.0 * PI
        } else {
            a
        }
    }

    pub fn rotate(self, theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Point2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// Total order used to rank points from the origin: norm, then angle,
    /// then coordinates.
    pub fn radial_cmp(&self, other: &Point2) -> Ordering {
        self.norm()
            .total_cmp(&other.norm())
            .then_with(|| self.angle().total_cmp(&other.angle()))
            .then_with(|| self.x.total_cmp(&other.x))
            .then_with(|| self.y.total_cmp(&other.y))
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, o: Point2) -> Point2 {
        Point2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, o: Point2) -> Point2 {
        Point2::new(self.x - o.x, self.y - o.y)
    }
}

impl Neg for Point2 {
    type Output = Point2;
    fn neg(self) -> Point2 {
        Point2::new(-self.x, -self.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, s: f64) -> Point2 {
        Point2::new(self.x * s, self.y * s)
    }
}

/// Power-law attenuation `ℓ`, a non-increasing function of distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PathLoss {
    /// `ℓ(x) = ‖x‖^{-α}`
    Singular { alpha: f64 },
    /// `ℓ(x) = min{1, ‖x‖^{-α}}`
    Bounded { alpha: f64 },
}

impl PathLoss {
    pub fn singular(alpha: f64) -> Result<Self> {
        Self::check_alpha(alpha)?;
        Ok(PathLoss::Singular { alpha })
    }

    pub fn bounded(alpha: f64) -> Result<Self> {
        Self::check_alpha(alpha)?;
        Ok(PathLoss::Bounded { alpha })
    }

    fn check_alpha(alpha: f64) -> Result<()> {
        if alpha.is_finite() && alpha > 2.0 {
            Ok(())
        } else {
            Err(FmeError::config(format!(
                "path-loss exponent must exceed 2 for integrable interference, got {alpha}"
            )))
        }
    }

    pub fn alpha(&self) -> f64 {
        match *self {
            PathLoss::Singular { alpha } | PathLoss::Bounded { alpha } => alpha,
        }
    }

    pub fn eval(&self, x: Point2) -> f64 {
        self.at_distance(x.norm())
    }

    pub fn at_distance(&self, r: f64) -> f64 {
        match *self {
            PathLoss::Singular { alpha } => {
                if r == 0.0 {
                    f64::INFINITY
                } else {
                    r.powf(-alpha)
                }
            }
            PathLoss::Bounded { alpha } => {
                if r <= 1.0 {
                    1.0
                } else {
                    r.powf(-alpha)
                }
            }
        }
    }

    /// Profile of `min{1, c·ℓ(r)}` as `(level, knee)`: the function equals
    /// `level` for `r < knee` and `c·r^{-α}` beyond.
    pub fn capped_profile(&self, c: f64) -> (f64, f64) {
        let alpha = self.alpha();
        match *self {
            PathLoss::Singular { .. } => (1.0, c.powf(1.0 / alpha)),
            PathLoss::Bounded { .. } => {
                if c <= 1.0 {
                    (c, 1.0)
                } else {
                    (1.0, c.powf(1.0 / alpha))
                }
            }
        }
    }

    /// `min{1, c·ℓ(r)}`.
    pub fn capped(&self, c: f64, r: f64) -> f64 {
        (c * self.at_distance(r)).min(1.0)
    }

    /// `∫_{‖x‖ > rho} min{1, c·ℓ(x)} dx` in closed form.
    pub fn capped_integral_beyond(&self, c: f64, rho: f64) -> f64 {
        if c <= 0.0 {
            return 0.0;
        }
        let alpha = self.alpha();
        let (level, knee) = self.capped_profile(c);
        let tail_from = |r: f64| 2.0 * PI * c * r.powf(2.0 - alpha) / (alpha - 2.0);
        if rho >= knee {
            tail_from(rho)
        } else {
            level * PI * (knee * knee - rho * rho) + tail_from(knee)
        }
    }

    /// `∫_{R²} min{1, c·ℓ(x)} dx`.
    pub fn capped_integral(&self, c: f64) -> f64 {
        self.capped_integral_beyond(c, 0.0)
    }

    /// Smallest radius beyond which `∫ min{1, c·ℓ}` is below `eps`.
    pub fn capped_tail_radius(&self, c: f64, eps: f64) -> f64 {
        let alpha = self.alpha();
        let (_, knee) = self.capped_profile(c);
        if c <= 0.0 {
            return knee;
        }
        let r = (2.0 * PI * c / ((alpha - 2.0) * eps)).powf(1.0 / (alpha - 2.0));
        r.max(knee)
    }
}

/// Typical link: threshold `θ`, link distance `R`, noise `N₀` and the
/// receiver position `r(o)` at distance `R` from the transmitter at the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkConfig {
    pub theta: f64,
    pub distance: f64,
    pub noise: f64,
    pub receiver: Point2,
}

impl LinkConfig {
    /// Receiver placed on the positive x-axis.
    pub fn new(theta: f64, distance: f64, noise: f64) -> Result<Self> {
        if !(theta.is_finite() && theta > 0.0) {
            return Err(FmeError::config(format!("SINR threshold must be positive, got {theta}")));
        }
        if !(distance.is_finite() && distance >= 0.0) {
            return Err(FmeError::config(format!("link distance must be non-negative, got {distance}")));
        }
        if !(noise.is_finite() && noise >= 0.0) {
            return Err(FmeError::config(format!("noise power must be non-negative, got {noise}")));
        }
        Ok(LinkConfig {
            theta,
            distance,
            noise,
            receiver: Point2::new(distance, 0.0),
        })
    }

    /// Link with a prescribed `ν = θ/ℓ(R)` at distance `R`.
    pub fn from_nu(nu: f64, distance: f64, noise: f64, pl: &PathLoss) -> Result<Self> {
        let l = pl.at_distance(distance);
        if !(l.is_finite() && l > 0.0) {
            return Err(FmeError::config(format!(
                "cannot prescribe nu at link distance {distance}: path loss is {l}"
            )));
        }
        Self::new(nu * l, distance, noise)
    }

    /// `ν = θ/ℓ(R)`. A receiver at the singularity of `ℓ` gives `ν = 0`.
    pub fn nu(&self, pl: &PathLoss) -> Result<f64> {
        let l = pl.at_distance(self.distance);
        if l.is_infinite() {
            return Ok(0.0);
        }
        let nu = self.theta / l;
        if nu.is_finite() && nu > 0.0 {
            Ok(nu)
        } else {
            Err(FmeError::config(format!(
                "nu = theta / l(R) is not finite and positive ({nu})"
            )))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn path_loss_values() {
        let s = PathLoss::singular(4.0).unwrap();
        assert_eq!(s.eval(Point2::new(1.0, 0.0)), 1.0);
        assert_eq!(s.eval(Point2::new(0.0, 2.0)), 0.0625);
        assert_eq!(s.eval(Point2::ORIGIN), f64::INFINITY);
        let b = PathLoss::bounded(4.0).unwrap();
        assert_eq!(b.eval(Point2::new(0.5, 0.0)), 1.0);
        assert!(PathLoss::singular(2.0).is_err());
    }

    #[test]
    fn nu_examples() {
        let pl = PathLoss::singular(4.0).unwrap();
        assert_eq!(LinkConfig::new(1.0, 1.0, 0.0).unwrap().nu(&pl).unwrap(), 1.0);
        assert_eq!(LinkConfig::new(2.0, 2.0, 0.0).unwrap().nu(&pl).unwrap(), 32.0);
        assert_eq!(LinkConfig::new(1.0, 0.0, 0.0).unwrap().nu(&pl).unwrap(), 0.0);
        let link = LinkConfig::from_nu(3.0, 2.0, 0.1, &pl).unwrap();
        assert_relative_eq!(link.nu(&pl).unwrap(), 3.0);
        assert_eq!(link.receiver, Point2::new(2.0, 0.0));
    }

    #[test]
    fn capped_integral_closed_form() {
        // ∫ min{1, r^-4} over the plane = π + π
        let pl = PathLoss::singular(4.0).unwrap();
        assert_relative_eq!(pl.capped_integral(1.0), 2.0 * PI, max_relative = 1e-14);
        let b = PathLoss::bounded(4.0).unwrap();
        assert_relative_eq!(b.capped_integral(0.5), 0.5 * 2.0 * PI, max_relative = 1e-14);
        let r = pl.capped_tail_radius(1.0, 1e-6);
        assert_relative_eq!(pl.capped_integral_beyond(1.0, r), 1e-6, max_relative = 1e-9);
    }

    #[test]
    fn radial_integral_converges_as_cutoff_grows() {
        // ε < ‖x‖ < R_max integrals of ℓ approach a finite limit
        for alpha in [2.5, 4.0, 6.0] {
            let pl = PathLoss::singular(alpha).unwrap();
            let partial = |lo: f64, hi: f64| {
                crate::quad::integrate(
                    |r| 2.0 * PI * r * pl.at_distance(r),
                    lo,
                    hi,
                    crate::quad::Tolerance::default(),
                )
                .unwrap()
                .value
            };
            let inc1 = partial(10.0, 100.0);
            let inc2 = partial(100.0, 1000.0);
            assert!(partial(0.1, 1000.0).is_finite());
            assert!(inc2 < inc1, "alpha {alpha}: increments must shrink");
            assert_relative_eq!(inc2 / inc1, 10f64.powf(2.0 - alpha), max_relative = 1e-6);
        }
    }

    proptest! {
        #[test]
        fn monotone_in_distance(alpha in 2.01f64..8.0, r1 in 0.0f64..50.0, dr in 0.0f64..50.0) {
            for pl in [PathLoss::Singular { alpha }, PathLoss::Bounded { alpha }] {
                prop_assert!(pl.at_distance(r1) >= pl.at_distance(r1 + dr));
            }
        }

        #[test]
        fn radially_symmetric(alpha in 2.01f64..8.0, x in -20.0f64..20.0, y in -20.0f64..20.0, th in 0.0f64..6.3) {
            let p = Point2::new(x, y);
            for pl in [PathLoss::Singular { alpha }, PathLoss::Bounded { alpha }] {
                let a = pl.eval(p);
                let b = pl.eval(p.rotate(th));
                prop_assert!((a - b).abs() <= 1e-12 * a.max(1e-300) || a == b);
            }
        }
    }
}
