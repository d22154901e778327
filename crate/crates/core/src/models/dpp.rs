use std::f64::consts::PI;
use std::fmt;

use nalgebra::DMatrix;

use crate::error::{FmeError, Result};
use crate::geometry::Point2;
use crate::special::bessel_j1;

/// Real, symmetric, stationary DPP kernels `K(r)`, `r = ‖x - y‖`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DppKernel {
    /// `π^{-1} e^{-r²/2}`
    Ginibre,
    /// `(πσ²)^{-1} e^{-r²/(2σ²)}`
    GinibreScaled { sigma2: f64 },
    /// `(π(1-τ²))^{-1} e^{-r²/(2(1-τ²))}`
    ModifiedGinibre { tau: f64 },
    /// `J₁(2√π r) / (2√π r)`
    Sine2D,
}

impl DppKernel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            DppKernel::GinibreScaled { sigma2 } if !(sigma2.is_finite() && sigma2 > 0.0) => {
                Err(FmeError::config(format!("Ginibre variance must be positive, got {sigma2}")))
            }
            DppKernel::ModifiedGinibre { tau } if !(0.0..1.0).contains(&tau) => {
                Err(FmeError::config(format!("modified Ginibre parameter must lie in [0, 1), got {tau}")))
            }
            _ => Ok(()),
        }
    }

    /// Variance of the Gaussian kernels; `None` for the sine kernel.
    pub fn gaussian_variance(&self) -> Option<f64> {
        match *self {
            DppKernel::Ginibre => Some(1.0),
            DppKernel::GinibreScaled { sigma2 } => Some(sigma2),
            DppKernel::ModifiedGinibre { tau } => Some(1.0 - tau * tau),
            DppKernel::Sine2D => None,
        }
    }

    /// Gaussian kernel with density `λ`.
    pub fn ginibre_with_density(lambda: f64) -> Result<Self> {
        let k = DppKernel::GinibreScaled {
            sigma2: 1.0 / (PI * lambda),
        };
        k.validate()?;
        Ok(k)
    }

    pub fn eval(&self, r: f64) -> f64 {
        match self.gaussian_variance() {
            Some(s2) => (-r * r / (2.0 * s2)).exp() / (PI * s2),
            None => {
                let x = 2.0 * PI.sqrt() * r;
                if x < 1e-8 {
                    0.5
                } else {
                    bessel_j1(x) / x
                }
            }
        }
    }

    /// `K(0)`, the density of the process.
    pub fn at_zero(&self) -> f64 {
        self.eval(0.0)
    }

    /// Distance beyond which `K(r)²/K(0)²` is negligible.
    pub fn correlation_range(&self) -> f64 {
        match self.gaussian_variance() {
            // e^{-r²/σ²} < 1e-16
            Some(s2) => (s2 * 16.0 * 10f64.ln()).sqrt(),
            // algebraic decay r^{-3}; no finite range
            None => f64::INFINITY,
        }
    }
}

impl fmt::Display for DppKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            DppKernel::Ginibre => write!(f, "ginibre"),
            DppKernel::GinibreScaled { sigma2 } => write!(f, "ginibre-scaled:{sigma2}"),
            DppKernel::ModifiedGinibre { tau } => write!(f, "modified-ginibre:{tau}"),
            DppKernel::Sine2D => write!(f, "sine"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Determinantal {
    pub kernel: DppKernel,
    pub max_order: usize,
}

impl Determinantal {
    pub fn new(kernel: DppKernel) -> Result<Self> {
        kernel.validate()?;
        Ok(Determinantal { kernel, max_order: 8 })
    }

    /// `det(K(x_i - x_j))` over `points ∪ {o}`, without clamping.
    pub fn kernel_determinant(&self, points: &[Point2]) -> f64 {
        let n = points.len() + 1;
        let at = |i: usize| if i < points.len() { points[i] } else { Point2::ORIGIN };
        let m = DMatrix::from_fn(n, n, |i, j| self.kernel.eval(at(i).dist(at(j))));
        m.determinant()
    }

    pub fn product_density(&self, points: &[Point2]) -> f64 {
        self.kernel_determinant(points).max(0.0)
    }
}
