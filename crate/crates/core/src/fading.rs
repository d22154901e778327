//! Fading (mark) distributions and the success functional built from them.
//!
//! Fading is a unit-mean power gain. Nakagami-`m` is parameterized so the
//! power gain is `Gamma(m, 1/m)`; Rayleigh is the `m = 1` case.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma, LogNormal};

use crate::error::{FmeError, Result};
use crate::quad::{integrate_breaks, Tolerance};
use crate::special::{erfc, gamma, gamma_q, ln_gamma, GaussRule};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FadingModel {
    /// Exponential power gain with unit mean.
    Rayleigh,
    /// Gamma power gain with shape `m ≥ 1/2` and unit mean.
    Nakagami { m: f64 },
    /// `h = exp(X)` with `X ~ N(mu, sigma2)`.
    LogNormal { mu: f64, sigma2: f64 },
    /// Deterministic `h ≡ 1`.
    UnitPoint,
}

impl FadingModel {
    pub fn nakagami(m: f64) -> Result<Self> {
        let f = FadingModel::Nakagami { m };
        f.validate()?;
        Ok(f)
    }

    pub fn lognormal(mu: f64, sigma2: f64) -> Result<Self> {
        let f = FadingModel::LogNormal { mu, sigma2 };
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            FadingModel::Nakagami { m } if !(m.is_finite() && m >= 0.5) => Err(FmeError::config(
                format!("Nakagami shape must be at least 0.5, got {m}"),
            )),
            FadingModel::LogNormal { mu, sigma2 } if !(mu.is_finite() && sigma2.is_finite() && sigma2 > 0.0) => {
                Err(FmeError::config(format!(
                    "log-normal parameters must be finite with positive variance, got mu={mu}, sigma2={sigma2}"
                )))
            }
            _ => Ok(()),
        }
    }

    /// Shape of the gamma law for gamma-family fading.
    pub fn gamma_shape(&self) -> Option<f64> {
        match *self {
            FadingModel::Rayleigh => Some(1.0),
            FadingModel::Nakagami { m } => Some(m),
            _ => None,
        }
    }

    /// `P(h > x)`.
    pub fn ccdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 1.0;
        }
        match *self {
            FadingModel::Rayleigh => (-x).exp(),
            FadingModel::Nakagami { m } => gamma_q(m, m * x),
            FadingModel::LogNormal { mu, sigma2 } => {
                if x == 0.0 {
                    1.0
                } else {
                    0.5 * erfc((x.ln() - mu) / (2.0 * sigma2).sqrt())
                }
            }
            FadingModel::UnitPoint => {
                if x < 1.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Probability density; zero for the deterministic model.
    pub fn pdf(&self, x: f64) -> f64 {
        self.ccdf_derivative(1, x).map_or(0.0, |d| -d)
    }

    pub fn mean(&self) -> f64 {
        match *self {
            FadingModel::LogNormal { mu, sigma2 } => (mu + 0.5 * sigma2).exp(),
            _ => 1.0,
        }
    }

    /// `E[h^p]` for any real `p`, `None` when the moment is infinite.
    pub fn moment(&self, p: f64) -> Option<f64> {
        match *self {
            FadingModel::Rayleigh => (p > -1.0).then(|| gamma(1.0 + p)),
            FadingModel::Nakagami { m } => {
                (m + p > 0.0).then(|| (ln_gamma(m + p) - ln_gamma(m) - p * m.ln()).exp())
            }
            FadingModel::LogNormal { mu, sigma2 } => Some((p * mu + 0.5 * p * p * sigma2).exp()),
            FadingModel::UnitPoint => Some(1.0),
        }
    }

    /// `E[h^p]` for `0 < p < 1`.
    pub fn fractional_moment(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(FmeError::config(format!("fractional moment order must lie in (0, 1), got {p}")));
        }
        self.moment(p)
            .ok_or_else(|| FmeError::NonIntegrable(format!("E[h^{p}] is infinite")))
    }

    /// `min{1, E[h]·ℓ}` with `ℓ = ∞` allowed.
    pub fn min_one_mean_bound(&self, lval: f64) -> f64 {
        if lval <= 0.0 {
            return 0.0;
        }
        (self.mean() * lval).min(1.0)
    }

    /// `E[min{1, h·ℓ}] = ∫₀¹ G(a/ℓ) da`, never larger than
    /// [`min_one_mean_bound`](Self::min_one_mean_bound).
    pub fn min_one_mean_bound_tight(&self, lval: f64) -> f64 {
        if lval <= 0.0 {
            return 0.0;
        }
        if lval.is_infinite() {
            return 1.0;
        }
        if let FadingModel::Rayleigh = self {
            return lval * -(-1.0 / lval).exp_m1();
        }
        let mut breaks = vec![0.0];
        if let FadingModel::UnitPoint = self {
            if lval < 1.0 {
                breaks.push(lval);
            }
        }
        breaks.push(1.0);
        integrate_breaks(|a| self.ccdf(a / lval), &breaks, Tolerance::new(1e-14, 1e-12))
            .map(|r| r.value)
            .unwrap_or_else(|_| self.min_one_mean_bound(lval))
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            FadingModel::Rayleigh => Exp1.sample(rng),
            FadingModel::Nakagami { m } => Gamma::new(m, 1.0 / m).expect("validated shape").sample(rng),
            FadingModel::LogNormal { mu, sigma2 } => {
                LogNormal::new(mu, sigma2.sqrt()).expect("validated variance").sample(rng)
            }
            FadingModel::UnitPoint => 1.0,
        }
    }

    /// Smallest `x` with `P(h > x) ≤ eps`.
    pub fn upper_quantile(&self, eps: f64) -> f64 {
        if let FadingModel::UnitPoint = self {
            return 1.0;
        }
        let mut hi = 1.0;
        while self.ccdf(hi) > eps {
            hi *= 2.0;
        }
        let mut lo = 0.0;
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if self.ccdf(mid) > eps {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    }

    /// Gauss rule for `E[g(h)]`: nodes are mark values, weights sum to one.
    pub fn gauss_rule(&self, n: usize) -> GaussRule {
        match *self {
            FadingModel::Rayleigh => GaussRule::laguerre(n, 0.0),
            FadingModel::Nakagami { m } => {
                let rule = GaussRule::laguerre(n, m - 1.0);
                let norm = gamma(m);
                GaussRule {
                    nodes: rule.nodes.iter().map(|x| x / m).collect(),
                    weights: rule.weights.iter().map(|w| w / norm).collect(),
                }
            }
            FadingModel::LogNormal { mu, sigma2 } => {
                let rule = GaussRule::hermite(n);
                let s = (2.0 * sigma2).sqrt();
                GaussRule {
                    nodes: rule.nodes.iter().map(|x| (mu + s * x).exp()).collect(),
                    weights: rule.weights.iter().map(|w| w / PI.sqrt()).collect(),
                }
            }
            FadingModel::UnitPoint => GaussRule {
                nodes: vec![1.0],
                weights: vec![1.0],
            },
        }
    }

    /// `d^k/du^k P(h > u)`; `None` where the derivative does not exist or
    /// is unbounded.
    pub fn ccdf_derivative(&self, k: usize, u: f64) -> Option<f64> {
        if k == 0 {
            return Some(self.ccdf(u));
        }
        if u < 0.0 {
            return Some(0.0);
        }
        let j = k - 1;
        match *self {
            FadingModel::Rayleigh => Some(if k % 2 == 1 { -(-u).exp() } else { (-u).exp() }),
            FadingModel::Nakagami { m } => gamma_density_derivative(m, j, u).map(|d| -d),
            FadingModel::LogNormal { mu, sigma2 } => Some(-lognormal_density_derivative(mu, sigma2, j, u)),
            FadingModel::UnitPoint => None,
        }
    }

    /// `sup_{u ≥ u0} |d^k/du^k P(h > u)|`, `None` when unbounded.
    pub fn ccdf_derivative_sup(&self, k: usize, u0: f64) -> Option<f64> {
        let u0 = u0.max(0.0);
        if k == 0 {
            return Some(self.ccdf(u0));
        }
        match *self {
            FadingModel::Rayleigh => Some((-u0).exp()),
            FadingModel::UnitPoint => None,
            FadingModel::Nakagami { m } => {
                if u0 == 0.0 && gamma_density_derivative(m, k - 1, 0.0).is_none() {
                    return None;
                }
                let hi = (u0 + 1.0).max((m + 40.0 + 12.0 * m.sqrt()) / m + u0);
                Some(scan_sup(|u| self.ccdf_derivative(k, u).unwrap_or(f64::INFINITY).abs(), u0, hi, false))
            }
            FadingModel::LogNormal { mu, sigma2 } => {
                let s = sigma2.sqrt();
                let lo = u0.max((mu - 14.0 * s).exp());
                let hi = (mu + 14.0 * s).exp().max(lo * 2.0);
                Some(scan_sup(|u| self.ccdf_derivative(k, u).unwrap_or(0.0).abs(), lo, hi, true))
            }
        }
    }
}

impl fmt::Display for FadingModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            FadingModel::Rayleigh => write!(f, "rayleigh"),
            FadingModel::Nakagami { m } => write!(f, "nakagami:{m}"),
            FadingModel::LogNormal { mu, sigma2 } => write!(f, "lognormal:{mu}:{sigma2}"),
            FadingModel::UnitPoint => write!(f, "unit"),
        }
    }
}

/// `d^j/du^j` of the `Gamma(m, 1/m)` density.
fn gamma_density_derivative(m: f64, j: usize, u: f64) -> Option<f64> {
    let log_norm = m * m.ln() - ln_gamma(m);
    let mut total = 0.0;
    let mut binom = 1.0;
    let mut falling = 1.0;
    for r in 0..=j {
        if r > 0 {
            binom *= (j - r + 1) as f64 / r as f64;
            falling *= m - r as f64;
        }
        if falling == 0.0 {
            // integer shape: every higher power vanishes too
            break;
        }
        let power = m - 1.0 - r as f64;
        let coeff = binom * falling * (-m).powi((j - r) as i32);
        let term = if u == 0.0 {
            if power > 0.0 {
                0.0
            } else if power == 0.0 {
                coeff
            } else {
                return None;
            }
        } else {
            coeff * u.powf(power)
        };
        total += term;
    }
    Some(total * (log_norm - m * u).exp())
}

/// `d^j/du^j` of the log-normal density, via `P_{j+1} = P_j' + P_j·(-(w-μ)/σ² - (j+1))`
/// in `w = ln u`.
fn lognormal_density_derivative(mu: f64, sigma2: f64, j: usize, u: f64) -> f64 {
    if u <= 0.0 {
        return 0.0;
    }
    let mut poly = vec![1.0];
    for step in 0..j {
        let c = -(step as f64 + 1.0);
        let mut next = vec![0.0; poly.len() + 1];
        for (d, &a) in poly.iter().enumerate() {
            if d > 0 {
                next[d - 1] += d as f64 * a;
            }
            // a·w^d·(-(w - μ)/σ² + c)
            next[d + 1] += -a / sigma2;
            next[d] += a * (mu / sigma2 + c);
        }
        poly = next;
    }
    let w = u.ln();
    let p: f64 = poly.iter().rev().fold(0.0, |acc, &a| acc * w + a);
    let expo = -(w - mu) * (w - mu) / (2.0 * sigma2) - (j as f64 + 1.0) * w;
    p * expo.exp() / ((2.0 * PI * sigma2).sqrt())
}

/// Maximum of `g` on `[lo, hi]`: dense grid followed by golden-section
/// refinement around the best grid point.
fn scan_sup(g: impl Fn(f64) -> f64, lo: f64, hi: f64, log_grid: bool) -> f64 {
    const N: usize = 4000;
    let at = |i: usize| {
        let t = i as f64 / N as f64;
        if log_grid {
            lo * (hi / lo).powf(t)
        } else {
            lo + (hi - lo) * t
        }
    };
    let (mut best_i, mut best) = (0, g(lo));
    for i in 1..=N {
        let v = g(at(i));
        if v > best {
            best = v;
            best_i = i;
        }
    }
    let (mut a, mut b) = (at(best_i.saturating_sub(1)), at((best_i + 1).min(N)));
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..80 {
        let c = b - ratio * (b - a);
        let d = a + ratio * (b - a);
        if g(c) > g(d) {
            b = d;
        } else {
            a = c;
        }
    }
    best.max(g(0.5 * (a + b)))
}

/// A function of interference with optional derivative bounds.
pub trait Functional: Send + Sync {
    /// Value at interference `x` (already including any noise shift).
    fn eval(&self, x: f64) -> f64;

    /// `‖d^k F/dx^k‖_∞` over `x ≥ 0`; `None` when not known or unbounded.
    fn derivative_sup(&self, k: usize) -> Option<f64>;

    /// `max_{0≤k≤i} 2^{i-k} ‖F^{(k)}‖_∞`.
    fn f_star(&self, i: usize) -> Option<f64> {
        (0..=i).try_fold(0.0f64, |acc, k| {
            self.derivative_sup(k)
                .map(|d| acc.max(2f64.powi((i - k) as i32) * d))
        })
    }

    fn as_success(&self) -> Option<&SuccessFunctional> {
        None
    }
}

/// `x ↦ P(W > ν N₀ + ν x)` for the desired-link fading `W`.
#[derive(Debug, Clone, PartialEq)]
pub struct SuccessFunctional {
    pub base: FadingModel,
    pub nu: f64,
    pub noise: f64,
    /// User-supplied `F_k`, overriding the computed ones for `k < len`.
    pub derivative_bounds: Option<Vec<f64>>,
}

impl SuccessFunctional {
    pub fn new(base: FadingModel, nu: f64, noise: f64) -> Result<Self> {
        base.validate()?;
        if !(nu.is_finite() && nu >= 0.0) {
            return Err(FmeError::config(format!("nu must be finite and non-negative, got {nu}")));
        }
        if !(noise.is_finite() && noise >= 0.0) {
            return Err(FmeError::config(format!("noise must be finite and non-negative, got {noise}")));
        }
        Ok(SuccessFunctional {
            base,
            nu,
            noise,
            derivative_bounds: None,
        })
    }

    pub fn with_derivative_bounds(mut self, bounds: Vec<f64>) -> Self {
        self.derivative_bounds = Some(bounds);
        self
    }

    /// `ν N₀`.
    pub fn offset(&self) -> f64 {
        self.nu * self.noise
    }
}

impl Functional for SuccessFunctional {
    fn eval(&self, x: f64) -> f64 {
        self.base.ccdf(self.offset() + self.nu * x)
    }

    fn derivative_sup(&self, k: usize) -> Option<f64> {
        if let Some(b) = self.derivative_bounds.as_ref().and_then(|b| b.get(k)) {
            return Some(*b);
        }
        if k > 0 && self.nu == 0.0 {
            return Some(0.0);
        }
        self.base
            .ccdf_derivative_sup(k, self.offset())
            .map(|s| s * self.nu.powi(k as i32))
    }

    fn as_success(&self) -> Option<&SuccessFunctional> {
        Some(self)
    }
}

/// Arbitrary user functional, e.g. an ergodic-capacity integrand.
#[derive(Clone)]
pub struct CustomFunctional {
    f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    derivative_bounds: Option<Vec<f64>>,
}

impl CustomFunctional {
    pub fn new(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        CustomFunctional {
            f: Arc::new(f),
            derivative_bounds: None,
        }
    }

    pub fn with_derivative_bounds(mut self, bounds: Vec<f64>) -> Self {
        self.derivative_bounds = Some(bounds);
        self
    }
}

impl fmt::Debug for CustomFunctional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomFunctional")
            .field("derivative_bounds", &self.derivative_bounds)
            .finish_non_exhaustive()
    }
}

impl Functional for CustomFunctional {
    fn eval(&self, x: f64) -> f64 {
        (self.f)(x)
    }

    fn derivative_sup(&self, k: usize) -> Option<f64> {
        self.derivative_bounds.as_ref().and_then(|b| b.get(k)).copied()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::stream;
    use crate::quad::integrate;
    use approx::assert_relative_eq;

    const ALL: [FadingModel; 5] = [
        FadingModel::Rayleigh,
        FadingModel::Nakagami { m: 2.0 },
        FadingModel::Nakagami { m: 0.7 },
        FadingModel::LogNormal { mu: 0.0, sigma2: 1.0 },
        FadingModel::LogNormal { mu: -0.5, sigma2: 0.25 },
    ];

    #[test]
    fn ccdf_examples() {
        for t in [0.0, 0.3, 1.0, 4.0] {
            assert_relative_eq!(
                FadingModel::Nakagami { m: 1.0 }.ccdf(t),
                (-t as f64).exp(),
                max_relative = 1e-12
            );
        }
        let n2 = FadingModel::Nakagami { m: 2.0 }.ccdf(1.0);
        assert_relative_eq!(n2, 3.0 * (-2.0f64).exp(), max_relative = 1e-12);
        // density 4x e^{-2x} integrated over (1, ∞)
        let oracle = integrate(|x| 4.0 * x * (-2.0 * x).exp(), 1.0, f64::INFINITY, Tolerance::default())
            .unwrap()
            .value;
        assert_relative_eq!(n2, oracle, max_relative = 1e-9);
        assert_relative_eq!(n2, 0.406006, epsilon = 1e-6);
        assert_relative_eq!(FadingModel::LogNormal { mu: 0.0, sigma2: 1.0 }.ccdf(1.0), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn ccdf_shape() {
        for f in ALL {
            assert_eq!(f.ccdf(0.0), 1.0);
            assert!(f.ccdf(1e4) < 1e-6);
            let mut prev = 1.0;
            for i in 1..200 {
                let v = f.ccdf(i as f64 * 0.05);
                assert!(v <= prev + 1e-15);
                prev = v;
            }
        }
    }

    #[test]
    fn fractional_moment_examples() {
        let r = FadingModel::Rayleigh.fractional_moment(0.5).unwrap();
        let oracle = integrate(|x: f64| x.sqrt() * (-x).exp(), 0.0, f64::INFINITY, Tolerance::default())
            .unwrap()
            .value;
        assert_relative_eq!(r, oracle, max_relative = 1e-8);
        assert_relative_eq!(r, PI.sqrt() / 2.0, max_relative = 1e-12);
        let n = FadingModel::Nakagami { m: 2.0 }.fractional_moment(0.5).unwrap();
        let oracle = integrate(|x: f64| x.sqrt() * 4.0 * x * (-2.0 * x).exp(), 0.0, f64::INFINITY, Tolerance::default())
            .unwrap()
            .value;
        assert_relative_eq!(n, oracle, max_relative = 1e-8);
        assert_relative_eq!(n, 0.939986, epsilon = 1e-6);
        assert_eq!(FadingModel::UnitPoint.fractional_moment(0.3).unwrap(), 1.0);
        assert!(FadingModel::Rayleigh.fractional_moment(1.5).is_err());
    }

    #[test]
    fn fractional_moment_matches_ccdf_integral() {
        // E[h^p] = ∫ p x^{p-1} P(h > x) dx
        for f in ALL {
            for p in [0.25, 0.5, 0.8] {
                let want = f.fractional_moment(p).unwrap();
                let got = integrate(
                    |x: f64| p * x.powf(p - 1.0) * f.ccdf(x),
                    0.0,
                    f64::INFINITY,
                    Tolerance::new(1e-13, 1e-11),
                )
                .unwrap()
                .value;
                assert_relative_eq!(got, want, max_relative = 1e-6);
            }
        }
    }

    #[test]
    fn min_one_mean_examples() {
        for f in ALL {
            assert_eq!(f.min_one_mean_bound(0.0), 0.0);
            assert_eq!(f.min_one_mean_bound_tight(0.0), 0.0);
        }
        assert_eq!(FadingModel::Rayleigh.min_one_mean_bound(f64::INFINITY), 1.0);
        let tight = FadingModel::Rayleigh.min_one_mean_bound_tight(1.0);
        assert_relative_eq!(tight, 1.0 - (-1.0f64).exp(), max_relative = 1e-14);
        let quad = integrate(|a: f64| (-a).exp(), 0.0, 1.0, Tolerance::default()).unwrap().value;
        assert_relative_eq!(tight, quad, max_relative = 1e-12);
        for f in ALL {
            for l in [0.01, 0.5, 1.0, 3.0, 100.0] {
                assert!(f.min_one_mean_bound_tight(l) <= f.min_one_mean_bound(l) + 1e-12);
            }
        }
    }

    #[test]
    fn derivative_sup_examples() {
        let ray = SuccessFunctional::new(FadingModel::Rayleigh, 1.0, 0.0).unwrap();
        assert_relative_eq!(ray.derivative_sup(3).unwrap(), 1.0);
        let ray2 = SuccessFunctional::new(FadingModel::Rayleigh, 2.0, 0.0).unwrap();
        assert_relative_eq!(ray2.derivative_sup(2).unwrap(), 4.0);
        let nak = SuccessFunctional::new(FadingModel::Nakagami { m: 2.0 }, 1.0, 0.0).unwrap();
        let s = nak.derivative_sup(1).unwrap();
        assert_relative_eq!(s, 2.0 / std::f64::consts::E, max_relative = 1e-9);
        // grid-scan oracle
        let grid = (0..100_000)
            .map(|i| {
                let x = i as f64 * 1e-4;
                4.0 * x * (-2.0 * x).exp()
            })
            .fold(0.0, f64::max);
        assert!(s >= grid && s - grid < 1e-7);
    }

    #[test]
    fn unbounded_derivatives_are_reported() {
        let unit = SuccessFunctional::new(FadingModel::UnitPoint, 1.0, 0.0).unwrap();
        assert!(unit.derivative_sup(1).is_none());
        assert!(unit.f_star(2).is_none());
        // shape below the derivative order: density derivative blows up at 0
        let n = SuccessFunctional::new(FadingModel::Nakagami { m: 0.7 }, 1.0, 0.0).unwrap();
        assert!(n.derivative_sup(1).is_none());
        // ...but is finite once noise moves the evaluation away from 0
        let n = SuccessFunctional::new(FadingModel::Nakagami { m: 0.7 }, 1.0, 0.5).unwrap();
        assert!(n.derivative_sup(1).unwrap().is_finite());
        let custom = CustomFunctional::new(|x| (1.0 + 1.0 / (1.0 + x)).ln());
        assert!(custom.f_star(1).is_none());
    }

    #[test]
    fn derivative_sup_dominates_finite_differences() {
        let fs = [
            SuccessFunctional::new(FadingModel::Rayleigh, 1.3, 0.2).unwrap(),
            SuccessFunctional::new(FadingModel::Nakagami { m: 2.0 }, 1.0, 0.0).unwrap(),
            SuccessFunctional::new(FadingModel::Nakagami { m: 3.0 }, 0.7, 0.1).unwrap(),
            SuccessFunctional::new(FadingModel::LogNormal { mu: 0.0, sigma2: 1.0 }, 1.0, 0.0).unwrap(),
        ];
        for f in &fs {
            for k in 1..=3usize {
                let sup = f.derivative_sup(k).unwrap();
                let h = 1e-3;
                for i in 0..2000 {
                    let x = 0.01 + i as f64 * 0.005;
                    // central k-th difference
                    let mut d = 0.0;
                    for j in 0..=k {
                        let c = crate::special::binomial(k as f64, j) * if j % 2 == 0 { 1.0 } else { -1.0 };
                        d += c * f.eval(x + (k as f64 / 2.0 - j as f64) * h);
                    }
                    d /= h.powi(k as i32);
                    assert!(d.abs() <= sup + 1e-6 + 1e-3 * sup, "k={k} x={x} fd={d} sup={sup} {:?}", f.base);
                }
            }
        }
    }

    #[test]
    fn sampler_means() {
        let n = 1_000_000;
        for f in [FadingModel::Rayleigh, FadingModel::Nakagami { m: 3.0 }] {
            let mut rng = stream(11, 0, 0);
            let mean: f64 = (0..n).map(|_| f.sample(&mut rng)).sum::<f64>() / n as f64;
            assert!((mean - 1.0).abs() < 0.01, "{f}: {mean}");
        }
        let mut rng = stream(11, 0, 1);
        assert_eq!(FadingModel::UnitPoint.sample(&mut rng), 1.0);
    }

    #[test]
    fn sampler_matches_ccdf_ks() {
        let n = 100_000;
        // 99% Kolmogorov–Smirnov critical value
        let crit = 1.628 / (n as f64).sqrt();
        for (i, f) in ALL.iter().enumerate() {
            let mut rng = stream(5, 1, i as u64);
            let mut xs: Vec<f64> = (0..n).map(|_| f.sample(&mut rng)).collect();
            xs.sort_by(f64::total_cmp);
            let mut d: f64 = 0.0;
            for (j, &x) in xs.iter().enumerate() {
                let cdf = 1.0 - f.ccdf(x);
                d = d.max((cdf - j as f64 / n as f64).abs()).max(((j + 1) as f64 / n as f64 - cdf).abs());
            }
            assert!(d < crit, "{f}: KS {d} >= {crit}");
        }
    }

    #[test]
    fn gauss_rules_reproduce_moments() {
        for f in [FadingModel::Rayleigh, FadingModel::Nakagami { m: 2.5 }, FadingModel::LogNormal { mu: 0.1, sigma2: 0.3 }] {
            let rule = f.gauss_rule(24);
            assert_relative_eq!(rule.weights.iter().sum::<f64>(), 1.0, max_relative = 1e-12);
            assert_relative_eq!(rule.integrate(|h| h), f.mean(), max_relative = 1e-10);
            assert_relative_eq!(rule.integrate(|h| h * h), f.moment(2.0).unwrap(), max_relative = 1e-10);
        }
    }
}
