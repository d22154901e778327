//! Transmitter point processes: density and product densities.
//!
//! Product densities are evaluated in reduced form: for `points = [x₁, …, x_k]`
//! the value returned is `ϱ^{(k+1)}(x₁, …, x_k, o)`, i.e. the last point sits
//! at the origin.

mod dpp;
mod matern;

pub use dpp::{Determinantal, DppKernel};
pub use matern::{MaternCsma, SimplexRule};

use std::fmt;

use crate::error::{FmeError, Result};
use crate::geometry::Point2;

#[derive(Debug, Clone)]
pub enum PointProcess {
    Poisson { intensity: f64 },
    MaternCsma(MaternCsma),
    Determinantal(Determinantal),
}

impl PointProcess {
    pub fn poisson(intensity: f64) -> Result<Self> {
        if intensity.is_finite() && intensity > 0.0 {
            Ok(PointProcess::Poisson { intensity })
        } else {
            Err(FmeError::config(format!("Poisson intensity must be positive, got {intensity}")))
        }
    }

    pub fn determinantal(kernel: DppKernel) -> Result<Self> {
        Ok(PointProcess::Determinantal(Determinantal::new(kernel)?))
    }

    /// Mean number of points per unit area.
    pub fn density(&self) -> f64 {
        match self {
            PointProcess::Poisson { intensity } => *intensity,
            PointProcess::MaternCsma(m) => m.density(),
            PointProcess::Determinantal(d) => d.kernel.at_zero(),
        }
    }

    /// Largest supported product-density order.
    pub fn max_order(&self) -> usize {
        match self {
            PointProcess::Poisson { .. } => usize::MAX,
            PointProcess::MaternCsma(m) => m.max_order,
            PointProcess::Determinantal(d) => d.max_order,
        }
    }

    fn check_order(&self, points: &[Point2]) -> Result<usize> {
        let order = points.len() + 1;
        if order > self.max_order() {
            return Err(FmeError::UnsupportedOrder {
                order,
                max: self.max_order(),
            });
        }
        Ok(order)
    }

    /// `ϱ^{(k+1)}(points…, o)`.
    pub fn product_density(&self, points: &[Point2]) -> Result<f64> {
        let order = self.check_order(points)?;
        Ok(match self {
            PointProcess::Poisson { intensity } => intensity.powi(order as i32),
            PointProcess::MaternCsma(m) => m.product_density(points),
            PointProcess::Determinantal(d) => d.product_density(points),
        })
    }

    /// Factorized upper bound `A_n · Π φ(x_k)` on the product density.
    pub fn product_density_upper_bound(&self, points: &[Point2]) -> f64 {
        let order = points.len() + 1;
        self.bound_prefactor(order) * points.iter().map(|&p| self.pair_factor(p)).product::<f64>()
    }

    /// `A_n` of the factorized product-density bound.
    pub fn bound_prefactor(&self, order: usize) -> f64 {
        match self {
            PointProcess::Poisson { intensity } => intensity.powi(order as i32),
            PointProcess::MaternCsma(_) => 1.0,
            PointProcess::Determinantal(d) => d.kernel.at_zero().powi(order as i32),
        }
    }

    /// `φ(x) ∈ [0, 1]` of the factorized product-density bound.
    pub fn pair_factor(&self, x: Point2) -> f64 {
        match self {
            PointProcess::Poisson { .. } => 1.0,
            PointProcess::MaternCsma(m) => 1.0 - m.contention_probability(x.norm()),
            PointProcess::Determinantal(d) => {
                let k0 = d.kernel.at_zero();
                let k = d.kernel.eval(x.norm());
                (1.0 - (k * k) / (k0 * k0)).max(0.0)
            }
        }
    }

    /// Radius beyond which `φ ≡ 1` (up to negligible error); zero for Poisson.
    pub fn interaction_range(&self) -> f64 {
        match self {
            PointProcess::Poisson { .. } => 0.0,
            PointProcess::MaternCsma(m) => m.range(),
            PointProcess::Determinantal(d) => d.kernel.correlation_range(),
        }
    }
}

impl fmt::Display for PointProcess {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PointProcess::Poisson { intensity } => write!(f, "ppp(lambda={intensity})"),
            PointProcess::MaternCsma(m) => write!(f, "matern(P={}, fading={})", m.threshold, m.fading),
            PointProcess::Determinantal(d) => write!(f, "dpp({})", d.kernel),
        }
    }
}
