//! Closed-form values for Poisson networks, used as oracles and in the
//! comparison tables.
//!
//! With a singular path loss, no noise and Nakagami fading of integer shape
//! `m` on the desired link, the success probability of a Poisson network is
//! an entire function of `λ`:
//!
//! ```text
//! P_s = Σ_j T_j,   T_j = (-λc)^j / j! · (mν)^{jδ} · (-1)^{m-1} C(jδ - 1, m - 1)
//! ```
//!
//! where `δ = 2/α` and `c = π Γ(1 - δ) E[h^δ]`. The printed table formulas
//! for Nakagami fading are kept separately so they can be compared against
//! the values above.

use std::f64::consts::PI;

use crate::error::{FmeError, Result};
use crate::fading::FadingModel;
use crate::geometry::PathLoss;
use crate::quad::{integrate_breaks, Tolerance};
use crate::special::{binomial, gamma};

/// `∫_{R²} Δ(x) dx` with `Δ = νℓ/(1 + νℓ)`.
pub fn rayleigh_delta_integral(nu: f64, pl: &PathLoss) -> Result<f64> {
    let alpha = pl.alpha();
    let delta = 2.0 / alpha;
    match pl {
        PathLoss::Singular { .. } => Ok(PI * nu.powf(delta) * PI * delta / (PI * delta).sin()),
        PathLoss::Bounded { .. } => {
            let knee = nu.powf(1.0 / alpha).max(1.0);
            integrate_breaks(
                |r| 2.0 * PI * r * crate::kernels::rayleigh_delta(nu, pl.at_distance(r)),
                &[0.0, 1.0, knee.max(1.0) + 1.0, f64::INFINITY],
                Tolerance::new(1e-13, 1e-12),
            )
            .map(|r| r.value)
        }
    }
}

/// `exp(-νN₀ - λ ∫Δ)`, the success probability of a Poisson network with
/// Rayleigh fading on every link.
pub fn rayleigh_ppp_success(lambda: f64, nu: f64, noise: f64, pl: &PathLoss) -> Result<f64> {
    Ok((-nu * noise - lambda * rayleigh_delta_integral(nu, pl)?).exp())
}

/// `e^{-νN₀} (-λC)^i / i!` for `i = 0..=n`.
pub fn rayleigh_ppp_terms(lambda: f64, nu: f64, noise: f64, pl: &PathLoss, n: usize) -> Result<Vec<f64>> {
    let c = rayleigh_delta_integral(nu, pl)?;
    let mut t = (-nu * noise).exp();
    let mut out = Vec::with_capacity(n + 1);
    for i in 0..=n {
        if i > 0 {
            t *= -lambda * c / i as f64;
        }
        out.push(t);
    }
    Ok(out)
}

fn check_shape(m: f64) -> Result<usize> {
    if m >= 1.0 && m.fract() == 0.0 {
        Ok(m as usize)
    } else {
        Err(FmeError::Unsupported(format!(
            "closed-form Poisson terms need an integer Nakagami shape, got {m}"
        )))
    }
}

/// Term `T_j` of the exact Poisson expansion for desired-link Nakagami(m)
/// fading with integer `m`, singular path loss and no noise. Interferer
/// marks may follow any fading law with a finite `E[h^δ]`.
pub fn ppp_nakagami_term(j: usize, lambda: f64, nu: f64, m: f64, interferer: &FadingModel, alpha: f64) -> Result<f64> {
    let m = check_shape(m)?;
    if j == 0 {
        return Ok(1.0);
    }
    let delta = 2.0 / alpha;
    let c = PI * gamma(1.0 - delta) * interferer.fractional_moment(delta)?;
    let mut coef = 1.0;
    for k in 1..=j {
        coef *= -lambda * c / k as f64;
    }
    let x = j as f64 * delta;
    let sign = if (m - 1) % 2 == 0 { 1.0 } else { -1.0 };
    Ok(coef * (m as f64 * nu).powf(x) * sign * binomial(x - 1.0, m - 1))
}

/// First-order term `-λ π ν^{2/α} E[h^{2/α}] E[W^{-2/α}]` for a Poisson
/// network with singular path loss and no noise.
pub fn ppp_first_order(lambda: f64, nu: f64, desired: &FadingModel, interferer: &FadingModel, alpha: f64) -> Result<f64> {
    let delta = 2.0 / alpha;
    let w = desired.moment(-delta).ok_or_else(|| {
        FmeError::NonIntegrable(format!(
            "E[W^(-2/alpha)] is infinite for {desired} at alpha = {alpha}; the first-order term diverges"
        ))
    })?;
    Ok(-lambda * PI * nu.powf(delta) * interferer.fractional_moment(delta)? * w)
}

/// First-order term for Nakagami(m) on every link with the printed power
/// `ν^{-2/α}`. Agrees with [`ppp_first_order`] only at `ν = 1`.
pub fn nakagami_first_order_printed(lambda: f64, nu: f64, m: f64, alpha: f64) -> f64 {
    let d = 2.0 / alpha;
    -lambda * nu.powf(-d) * PI * gamma(m - d) * gamma(m + d) / (gamma(m) * gamma(m))
}

fn csc(x: f64) -> f64 {
    1.0 / x.sin()
}

/// Printed closed form of the third term (`E[F^{(2)}]` integrated), for
/// `m ∈ {2, 3, 4}`.
pub fn table_third_term_printed(m: u32, alpha: f64, lambda: f64, nu: f64) -> Result<f64> {
    let a = alpha;
    let c2 = csc(2.0 * PI / a).powi(2);
    let pi4 = PI.powi(4);
    let core = match m {
        2 => 2.0 * pi4 * (a - 4.0) * (a + 2.0).powi(2) * c2 / a.powi(3),
        3 => 2.0 * pi4 * (a - 4.0) * (a - 2.0) * (a + 1.0).powi(2) * (a + 2.0).powi(2) * c2 / a.powi(6),
        4 => {
            2.0 * pi4
                * (a - 4.0)
                * (a - 2.0)
                * (a + 1.0).powi(2)
                * (a + 2.0).powi(2)
                * (3.0 * a - 4.0)
                * (3.0 * a + 2.0).powi(2)
                * c2
                / (27.0 * a.powi(9))
        }
        _ => return Err(FmeError::Unsupported(format!("no printed third term for m = {m}"))),
    };
    Ok(core * lambda * lambda * nu.powf(-4.0 / a))
}

/// Printed closed form of the fourth term (`E[F^{(3)}]` integrated), for
/// `m ∈ {2, 3, 4}`.
pub fn table_fourth_term_printed(m: u32, alpha: f64, lambda: f64, nu: f64) -> Result<f64> {
    let a = alpha;
    let c3 = csc(2.0 * PI / a).powi(3);
    let pi6 = PI.powi(6);
    let core = match m {
        2 => -4.0 * pi6 * (a - 6.0) * (a + 2.0).powi(3) * c3 / (3.0 * a.powi(4)),
        3 => -4.0 * pi6 * (a - 6.0) * (a - 3.0) * (a + 1.0).powi(3) * (a + 2.0).powi(3) * c3 / (3.0 * a.powi(8)),
        4 => {
            4.0 * pi6
                * (a - 6.0)
                * (a - 3.0)
                * (a - 2.0)
                * (a + 1.0).powi(3)
                * (a + 2.0).powi(3)
                * (3.0 * a + 2.0).powi(3)
                * c3
                / (81.0 * a.powi(12))
        }
        _ => return Err(FmeError::Unsupported(format!("no printed fourth term for m = {m}"))),
    };
    Ok(core * lambda.powi(3) * nu.powf(-6.0 / a))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::integrate;
    use approx::assert_relative_eq;

    #[test]
    fn delta_integral_alpha_four() {
        let pl = PathLoss::singular(4.0).unwrap();
        assert_relative_eq!(rayleigh_delta_integral(1.0, &pl).unwrap(), PI * PI / 2.0, max_relative = 1e-14);
        // radial quadrature oracle at ν = 2.5
        let q = integrate(
            |r| 2.0 * PI * r / (1.0 + r.powi(4) / 2.5),
            0.0,
            f64::INFINITY,
            Tolerance::new(1e-13, 1e-12),
        )
        .unwrap()
        .value;
        assert_relative_eq!(rayleigh_delta_integral(2.5, &pl).unwrap(), q, max_relative = 1e-10);
    }

    #[test]
    fn rayleigh_terms_are_taylor_coefficients() {
        let pl = PathLoss::singular(4.0).unwrap();
        let t = rayleigh_ppp_terms(0.05, 1.0, 0.0, &pl, 12).unwrap();
        let s: f64 = t.iter().sum();
        assert_relative_eq!(s, rayleigh_ppp_success(0.05, 1.0, 0.0, &pl).unwrap(), max_relative = 1e-14);
        assert_relative_eq!(rayleigh_ppp_success(0.05, 1.0, 0.0, &pl).unwrap(), 0.781_4, max_relative = 1e-4);
    }

    #[test]
    fn nakagami_taylor_reduces_to_rayleigh() {
        let pl = PathLoss::singular(4.0).unwrap();
        let t = rayleigh_ppp_terms(0.1, 1.7, 0.0, &pl, 4).unwrap();
        for (j, tj) in t.iter().enumerate() {
            let v = ppp_nakagami_term(j, 0.1, 1.7, 1.0, &FadingModel::Rayleigh, 4.0).unwrap();
            assert_relative_eq!(v, *tj, max_relative = 1e-12);
        }
    }

    #[test]
    fn first_order_forms_agree() {
        for m in [1.0, 2.0, 3.0] {
            for alpha in [3.0, 4.0, 5.0] {
                let h = FadingModel::Nakagami { m };
                let a = ppp_first_order(0.1, 1.0, &h, &h, alpha).unwrap();
                let b = ppp_nakagami_term(1, 0.1, 1.0, m, &h, alpha).unwrap();
                let c = nakagami_first_order_printed(0.1, 1.0, m, alpha);
                assert_relative_eq!(a, b, max_relative = 1e-12);
                assert_relative_eq!(a, c, max_relative = 1e-12);
            }
        }
        // the exponent of ν is +2/α
        let h = FadingModel::Nakagami { m: 2.0 };
        let a = ppp_first_order(0.1, 2.0, &h, &h, 4.0).unwrap();
        let b = ppp_nakagami_term(1, 0.1, 2.0, 2.0, &h, 4.0).unwrap();
        assert_relative_eq!(a, b, max_relative = 1e-12);
        assert_relative_eq!(a / ppp_first_order(0.1, 1.0, &h, &h, 4.0).unwrap(), 2f64.sqrt(), max_relative = 1e-12);
    }

    #[test]
    fn first_order_diverges_for_small_shape() {
        let h = FadingModel::Nakagami { m: 0.5 };
        assert!(matches!(
            ppp_first_order(0.1, 1.0, &h, &h, 3.0),
            Err(FmeError::NonIntegrable(_))
        ));
    }

    #[test]
    fn printed_third_term_zero_at_alpha_four() {
        assert_eq!(table_third_term_printed(2, 4.0, 0.1, 1.0).unwrap(), 0.0);
        assert_eq!(table_fourth_term_printed(3, 6.0, 0.1, 1.0).unwrap(), 0.0);
    }
}
