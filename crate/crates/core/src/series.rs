//! Truncated factorial moment expansion of the success probability,
//!
//! ```text
//! P_s = F(νN₀) + λ^{-1} Σ_{i≥1} ∫_{R^{2i}} E_h[F^{(i)}_{x₁..x_i}(νN₀)] ϱ^{(i+1)}(x₁, …, x_i) dx
//! ```
//!
//! together with the bound on the remainder after `n` terms.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{FmeError, Result};
use crate::exec::{map_indexed, stream, Execution, Moments};
use crate::fading::{FadingModel, Functional, SuccessFunctional};
use crate::geometry::{LinkConfig, PathLoss, Point2};
use crate::kernels::{self, MarkAveraging};
use crate::models::PointProcess;
use crate::quad::{integrate_breaks, integrate_plane, Integral, Tolerance};
use crate::reference;

/// How a single series term is integrated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TermMethod {
    ClosedForm,
    /// Deterministic quadrature; first-order terms only.
    RadialQuadrature,
    MonteCarlo,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegrationPolicy {
    /// Overrides of the default method (quadrature for `i = 1`, Monte Carlo beyond).
    pub methods: BTreeMap<usize, TermMethod>,
    /// Initial number of Monte Carlo samples per term.
    pub samples: usize,
    pub seed: u64,
    /// Truncation radius around the receiver; derived from `eps_tail` when absent.
    pub rmax: Option<f64>,
    /// Relative mass of the importance profile discarded beyond `rmax`.
    pub eps_tail: f64,
    /// Sampling continues, doubling the sample count, until the relative
    /// standard error drops below this target or `max_samples` is reached.
    pub target_rel_se: Option<f64>,
    pub max_samples: usize,
    /// Gauss nodes per point for mark averages without a closed form; the
    /// tensor rule is used while `nodes^i ≤ 4096`, marks are sampled beyond.
    pub mark_nodes: usize,
    pub execution: Execution,
}

impl Default for IntegrationPolicy {
    fn default() -> Self {
        IntegrationPolicy {
            methods: BTreeMap::new(),
            samples: 100_000,
            seed: 0,
            rmax: None,
            eps_tail: 1e-6,
            target_rel_se: None,
            max_samples: 20_000_000,
            mark_nodes: 8,
            execution: Execution::default(),
        }
    }
}

impl IntegrationPolicy {
    pub fn validate(&self) -> Result<()> {
        if self.samples < 1000 {
            return Err(FmeError::config(format!(
                "at least 1000 Monte Carlo samples are required, got {}",
                self.samples
            )));
        }
        if !(self.eps_tail > 0.0 && self.eps_tail < 1.0) {
            return Err(FmeError::config(format!("eps_tail must lie in (0, 1), got {}", self.eps_tail)));
        }
        if let Some(r) = self.rmax {
            if !(r.is_finite() && r > 0.0) {
                return Err(FmeError::config(format!("rmax must be positive, got {r}")));
            }
        }
        if let Some(t) = self.target_rel_se {
            if !(t > 0.0) {
                return Err(FmeError::config(format!("target relative standard error must be positive, got {t}")));
            }
        }
        if self.mark_nodes == 0 {
            return Err(FmeError::config("mark_nodes must be positive"));
        }
        Ok(())
    }

    pub fn method_for(&self, i: usize) -> TermMethod {
        self.methods.get(&i).copied().unwrap_or(if i == 1 {
            TermMethod::RadialQuadrature
        } else {
            TermMethod::MonteCarlo
        })
    }
}

#[derive(Clone)]
pub struct FmeRequest {
    pub model: PointProcess,
    pub interferer_fading: FadingModel,
    pub functional: Arc<dyn Functional>,
    pub pathloss: PathLoss,
    pub link: LinkConfig,
    pub order: usize,
    pub policy: IntegrationPolicy,
}

impl std::fmt::Debug for FmeRequest {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FmeRequest")
            .field("model", &self.model)
            .field("interferer_fading", &self.interferer_fading)
            .field("functional", &self.functional.as_success())
            .field("pathloss", &self.pathloss)
            .field("link", &self.link)
            .field("order", &self.order)
            .field("policy", &self.policy)
            .finish()
    }
}

impl FmeRequest {
    /// Success-probability request: `F(x) = P(W > νN₀ + νx)` with `ν` taken
    /// from the link.
    pub fn success(
        model: PointProcess,
        interferer_fading: FadingModel,
        desired_fading: FadingModel,
        pathloss: PathLoss,
        link: LinkConfig,
        order: usize,
    ) -> Result<Self> {
        interferer_fading.validate()?;
        let nu = link.nu(&pathloss)?;
        let functional = SuccessFunctional::new(desired_fading, nu, link.noise)?;
        Ok(FmeRequest {
            model,
            interferer_fading,
            functional: Arc::new(functional),
            pathloss,
            link,
            order,
            policy: IntegrationPolicy::default(),
        })
    }

    pub fn with_policy(mut self, policy: IntegrationPolicy) -> Self {
        self.policy = policy;
        self
    }

    pub fn with_functional(mut self, functional: Arc<dyn Functional>) -> Self {
        self.functional = functional;
        self
    }

    fn success_functional(&self) -> Option<&SuccessFunctional> {
        self.functional.as_success()
    }

    /// Importance profile scale `ν E[h]` (the kernels decay like
    /// `min{1, ν h ℓ}` per point).
    fn profile_scale(&self) -> f64 {
        let nu = self.success_functional().map(|s| s.nu).unwrap_or(1.0);
        (nu * self.interferer_fading.mean()).max(1e-300)
    }
}

/// Diagnostics attached to a result.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Diagnostics {
    pub rmax: f64,
    pub samples: Vec<usize>,
    pub quadrature_errors: Vec<f64>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FmeResult {
    pub terms: Vec<f64>,
    pub partial_sums: Vec<f64>,
    /// Monte Carlo standard error of each term; zero for deterministic terms.
    pub term_std_errors: Vec<f64>,
    pub methods: Vec<TermMethod>,
    /// Bound on the remainder after `order` terms, plus `tail_bound`.
    pub err_bound: Option<f64>,
    /// The remainder bound alone.
    pub truncation_bound: Option<f64>,
    /// Bound on the mass discarded by truncating Monte Carlo terms at `rmax`.
    pub tail_bound: Option<f64>,
    /// `order_bounds[k]` bounds the error of `partial_sums[k]`, tails included.
    pub order_bounds: Vec<Option<f64>>,
    pub diagnostics: Diagnostics,
}

impl FmeResult {
    pub fn value(&self) -> f64 {
        *self.partial_sums.last().expect("term zero always present")
    }

    /// Combined standard error of the partial sum at `order`.
    pub fn std_error(&self, order: usize) -> f64 {
        self.term_std_errors[..=order].iter().map(|s| s * s).sum::<f64>().sqrt()
    }
}

/// Finiteness checks performed before any term is integrated.
pub fn check_condition(req: &FmeRequest) -> Result<()> {
    req.policy.validate()?;
    req.interferer_fading.validate()?;
    if req.order + 1 > req.model.max_order() {
        return Err(FmeError::UnsupportedOrder {
            order: req.order + 1,
            max: req.model.max_order(),
        });
    }
    // kernels decay like P(W ≤ ν h ℓ); with no noise and a singular path
    // loss the first-order integral needs E[W^{-2/α}] < ∞
    if let Some(s) = req.success_functional() {
        if s.nu > 0.0 && s.noise == 0.0 && req.order >= 1 {
            let delta = 2.0 / req.pathloss.alpha();
            if s.base.moment(-delta).is_none() {
                return Err(FmeError::NonIntegrable(format!(
                    "E[W^(-2/alpha)] is infinite for {} at alpha = {}; the expansion terms diverge",
                    s.base,
                    req.pathloss.alpha()
                )));
            }
        }
        if req.interferer_fading.moment(2.0 / req.pathloss.alpha()).is_none() {
            return Err(FmeError::NonIntegrable("interferer fading lacks the 2/alpha moment".into()));
        }
    }
    Ok(())
}

/// Truncated expansion up to `req.order` with error bound.
pub fn fme_success_probability(req: &FmeRequest) -> Result<FmeResult> {
    check_condition(req)?;
    let t0 = req.functional.eval(0.0);
    let mut terms = vec![t0];
    let mut ses = vec![0.0];
    let mut methods = vec![TermMethod::ClosedForm];
    let mut diag = Diagnostics {
        rmax: truncation_radius(req),
        samples: vec![0],
        quadrature_errors: vec![0.0],
        warnings: Vec::new(),
    };
    let mut tail = 0.0;
    let mut tails = vec![0.0];
    for i in 1..=req.order {
        let method = req.policy.method_for(i);
        let (value, se) = match method {
            TermMethod::ClosedForm => {
                diag.samples.push(0);
                diag.quadrature_errors.push(0.0);
                (closed_form_term(req, i)?, 0.0)
            }
            TermMethod::RadialQuadrature => {
                if i != 1 {
                    return Err(FmeError::Unsupported(format!(
                        "quadrature is only available for the first-order term, requested for order {i}"
                    )));
                }
                let (v, err) = first_order_quadrature(req)?;
                diag.samples.push(0);
                diag.quadrature_errors.push(err);
                (v, 0.0)
            }
            TermMethod::MonteCarlo => {
                let est = higher_order_term(req, i)?;
                diag.samples.push(est.samples);
                diag.quadrature_errors.push(0.0);
                if let Some(w) = est.warning {
                    diag.warnings.push(w);
                }
                tail += est.tail_bound.unwrap_or(f64::INFINITY);
                (est.value, est.std_error)
            }
        };
        terms.push(value);
        ses.push(se);
        methods.push(method);
        tails.push(tail);
    }
    let partial_sums = terms
        .iter()
        .scan(0.0, |acc, t| {
            *acc += t;
            Some(*acc)
        })
        .collect();
    let truncation = match error_bound(req, req.order) {
        Ok(b) => Some(b),
        Err(FmeError::BoundUnavailable(msg)) => {
            diag.warnings.push(format!("error bound unavailable: {msg}"));
            None
        }
        Err(e) => return Err(e),
    };
    let tail_bound = tail.is_finite().then_some(tail);
    let err_bound = match (truncation, tail_bound) {
        (Some(b), Some(t)) => Some(b + t),
        _ => None,
    };
    let mut order_bounds: Vec<Option<f64>> = (0..req.order)
        .map(|k| {
            error_bound(req, k)
                .ok()
                .map(|b| b + tails[k])
                .filter(|b| b.is_finite())
        })
        .collect();
    order_bounds.push(err_bound);
    Ok(FmeResult {
        terms,
        partial_sums,
        term_std_errors: ses,
        methods,
        err_bound,
        truncation_bound: truncation,
        tail_bound,
        order_bounds,
        diagnostics: diag,
    })
}

fn closed_form_term(req: &FmeRequest, i: usize) -> Result<f64> {
    let unsupported = || {
        FmeError::Unsupported(format!(
            "no closed form for order {i} with {} and {}",
            req.model, req.interferer_fading
        ))
    };
    let s = req.success_functional().ok_or_else(unsupported)?;
    let lambda = match req.model {
        PointProcess::Poisson { intensity } => intensity,
        _ => return Err(unsupported()),
    };
    if let FadingModel::Rayleigh = s.base {
        if let FadingModel::Rayleigh = req.interferer_fading {
            return Ok(reference::rayleigh_ppp_terms(lambda, s.nu, s.noise, &req.pathloss, i)?[i]);
        }
    }
    let singular = matches!(req.pathloss, PathLoss::Singular { .. });
    if !singular || s.noise != 0.0 {
        return Err(unsupported());
    }
    let alpha = req.pathloss.alpha();
    if i == 1 {
        return reference::ppp_first_order(lambda, s.nu, &s.base, &req.interferer_fading, alpha);
    }
    match s.base {
        FadingModel::Rayleigh => reference::ppp_nakagami_term(i, lambda, s.nu, 1.0, &req.interferer_fading, alpha),
        FadingModel::Nakagami { m } => reference::ppp_nakagami_term(i, lambda, s.nu, m, &req.interferer_fading, alpha),
        _ => Err(unsupported()),
    }
}

fn mark_averaging(req: &FmeRequest, seed: u64) -> MarkAveraging {
    MarkAveraging {
        nodes: req.policy.mark_nodes.max(32),
        max_tensor_points: 1,
        mc_draws: 0,
        seed,
    }
}

/// `E_h[F(νN₀ + νhℓ(x - r)) - F(νN₀)]` as a function of `x`.
fn first_order_kernel(req: &FmeRequest, x: Point2) -> Result<f64> {
    let avg = mark_averaging(req, 0);
    kernels::mark_averaged_kernel(
        req.functional.as_ref(),
        &[x],
        req.link.receiver,
        &req.pathloss,
        &req.interferer_fading,
        &avg,
    )
    .map(|k| k.value)
}

/// First-order term by quadrature; returns the value and the quadrature error
/// estimate.
pub fn first_order_term(req: &FmeRequest) -> Result<(f64, f64)> {
    check_condition(req)?;
    first_order_quadrature(req)
}

fn first_order_quadrature(req: &FmeRequest) -> Result<(f64, f64)> {
    let lambda = req.model.density();
    let r = req.link.receiver;
    let knee = req.pathloss.capped_profile(req.profile_scale()).1.max(1e-3);
    let tol = Tolerance::new(1e-14, 1e-11);
    // part common to all models: λ ∫ g(|x - r|) dx
    let radial = |rho: f64| {
        let g = first_order_kernel(req, r + Point2::new(rho, 0.0)).unwrap_or(f64::NAN);
        2.0 * PI * rho * g
    };
    let mut breaks = vec![0.0, knee];
    if let PathLoss::Bounded { .. } = req.pathloss {
        if knee != 1.0 {
            breaks.push(1.0);
        }
    }
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    breaks.push(f64::INFINITY);
    let base = accept_small_error(integrate_breaks(radial, &breaks, tol))
        .map_err(|e| nonintegrable_from(e, "first-order term"))?;
    if !base.value.is_finite() {
        return Err(FmeError::NonIntegrable("first-order term is not finite".into()));
    }
    let mut value = lambda * base.value;
    let mut err = lambda * base.error;
    if !matches!(req.model, PointProcess::Poisson { .. }) {
        // correction λ^{-1} ∫ g(|x - r|) (ϱ^{(2)}(x) - λ²) dx, concentrated near the origin
        let range = req.model.interaction_range();
        let d = req.link.distance;
        let mut rb = vec![0.0];
        if d > 0.0 {
            rb.push(d);
        }
        let outer = if range.is_finite() { (2.0 * range).max(d + knee) } else { f64::INFINITY };
        if range.is_finite() && range > 0.0 && range < outer {
            rb.push(range);
        }
        rb.sort_by(f64::total_cmp);
        rb.dedup();
        rb.push(outer);
        let l2 = lambda * lambda;
        let corr = accept_small_error(integrate_plane(
            |x| {
                let rho = req.model.product_density(&[x]).unwrap_or(f64::NAN);
                if rho == l2 {
                    return 0.0;
                }
                let g = first_order_kernel(req, x).unwrap_or(f64::NAN);
                g * (rho - l2)
            },
            Point2::ORIGIN,
            &rb,
            Tolerance::new(1e-12, 1e-9),
        ))
        .map_err(|e| nonintegrable_from(e, "first-order correlation term"))?;
        value += corr.value / lambda;
        err += corr.error / lambda;
    }
    Ok((value, err))
}

/// Keeps an unconverged quadrature whose error estimate is still small
/// relative to the value; integrable log-type singularities end up here.
fn accept_small_error(r: Result<Integral>) -> Result<Integral> {
    match r {
        Err(FmeError::Quadrature {
            estimate,
            error,
            evaluations,
        }) if estimate.is_finite() && error <= 1e-7 * estimate.abs().max(1e-300) => Ok(Integral {
            value: estimate,
            error,
            evaluations,
            converged: false,
        }),
        other => other,
    }
}

fn nonintegrable_from(e: FmeError, what: &str) -> FmeError {
    match e {
        FmeError::Quadrature { estimate, .. } if !estimate.is_finite() || estimate.abs() > 1e12 => {
            FmeError::NonIntegrable(format!("{what} does not converge (estimate {estimate:e})"))
        }
        other => other,
    }
}

/// Radius around the receiver beyond which Monte Carlo terms are truncated.
pub fn truncation_radius(req: &FmeRequest) -> f64 {
    if let Some(r) = req.policy.rmax {
        return r;
    }
    let c = req.profile_scale();
    let total = req.pathloss.capped_integral(c);
    req.pathloss.capped_tail_radius(c, req.policy.eps_tail * total)
}

/// Radial importance density `∝ min{1, c ℓ(ρ)}` on the disk of radius `rmax`
/// around the receiver.
#[derive(Debug, Clone, Copy)]
struct Profile {
    center: Point2,
    level: f64,
    knee: f64,
    c: f64,
    alpha: f64,
    rmax: f64,
    inner_mass: f64,
    mass: f64,
}

impl Profile {
    fn new(center: Point2, pl: &PathLoss, c: f64, rmax: f64) -> Self {
        let (level, knee) = pl.capped_profile(c);
        let alpha = pl.alpha();
        let knee = knee.min(rmax);
        let inner_mass = level * PI * knee * knee;
        let outer = if rmax > knee {
            2.0 * PI * c * (knee.powf(2.0 - alpha) - rmax.powf(2.0 - alpha)) / (alpha - 2.0)
        } else {
            0.0
        };
        Profile {
            center,
            level,
            knee,
            c,
            alpha,
            rmax,
            inner_mass,
            mass: inner_mass + outer,
        }
    }

    fn value(&self, rho: f64) -> f64 {
        if rho > self.rmax {
            0.0
        } else if rho < self.knee {
            self.level
        } else {
            self.c * rho.powf(-self.alpha)
        }
    }

    fn sample<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> (Point2, f64) {
        let u: f64 = rng.random::<f64>() * self.mass;
        let rho = if u < self.inner_mass {
            self.knee * (u / self.inner_mass).sqrt()
        } else {
            let a = self.alpha - 2.0;
            let v = self.knee.powf(-a) - (u - self.inner_mass) * a / (2.0 * PI * self.c);
            v.max(self.rmax.powf(-a)).powf(-1.0 / a)
        };
        let theta = 2.0 * PI * rng.random::<f64>();
        (self.center + Point2::polar(rho, theta), self.value(rho) / self.mass)
    }
}

/// Monte Carlo estimate of one series term.
#[derive(Debug, Clone, PartialEq)]
pub struct TermEstimate {
    pub value: f64,
    pub std_error: f64,
    pub samples: usize,
    /// Bound on the part of the term beyond the truncation radius.
    pub tail_bound: Option<f64>,
    pub warning: Option<String>,
}

const CHUNK: usize = 2048;

/// Term `i ≥ 1` by importance sampling: coordinates are drawn i.i.d. from the
/// radial profile, sorted, and the kernel at the ordered tuple is weighted by
/// `ϱ^{(i+1)} / (q(x₁)…q(x_i) · i!)`.
pub fn higher_order_term(req: &FmeRequest, i: usize) -> Result<TermEstimate> {
    if i == 0 {
        return Err(FmeError::config("term order must be at least 1"));
    }
    if i + 1 > req.model.max_order() {
        return Err(FmeError::UnsupportedOrder {
            order: i + 1,
            max: req.model.max_order(),
        });
    }
    if i > kernels::MAX_SUBSET_POINTS {
        return Err(FmeError::TooManyPoints(i));
    }
    req.policy.validate()?;
    let lambda = req.model.density();
    let rmax = truncation_radius(req);
    let profile = Profile::new(req.link.receiver, &req.pathloss, req.profile_scale(), rmax);
    let exact_marks = req
        .success_functional()
        .map(|s| kernels::exact_success_kernel_mean(s, &[1.0], &req.interferer_fading).is_some())
        .unwrap_or(false)
        || matches!(req.interferer_fading, FadingModel::UnitPoint);
    let tensor_ok = (req.policy.mark_nodes as f64).powi(i as i32) <= 4096.0;
    let averaging = MarkAveraging {
        nodes: req.policy.mark_nodes,
        max_tensor_points: if tensor_ok { i } else { 0 },
        mc_draws: 0,
        seed: req.policy.seed,
    };
    let fold_marks = !exact_marks && !tensor_ok;
    let factorial: f64 = (1..=i).map(|k| k as f64).product();
    let scale = 1.0 / (lambda * factorial);
    let domain = 0x5345_5249_0000 + i as u64;

    let run_chunks = |first: usize, count: usize| -> Result<Moments> {
        let parts = map_indexed(req.policy.execution, count, |c| -> Result<Moments> {
            let chunk = (first + c) as u64;
            let mut rng = stream(req.policy.seed, domain, chunk);
            let mut m = Moments::default();
            let mut pts = vec![Point2::ORIGIN; i];
            let mut q = vec![0.0; i];
            for _ in 0..CHUNK {
                let mut weight = 1.0;
                for k in 0..i {
                    let (p, dens) = profile.sample(&mut rng);
                    pts[k] = p;
                    q[k] = dens;
                    weight /= dens;
                }
                pts.sort_by(|a, b| b.radial_cmp(a));
                let rho = req.model.product_density(&pts)?;
                if rho == 0.0 {
                    m.push(0.0);
                    continue;
                }
                let k = if fold_marks {
                    let ls: Vec<f64> = pts.iter().map(|&z| req.pathloss.eval(z - req.link.receiver)).collect();
                    kernels::sampled_mark_kernel(req.functional.as_ref(), &ls, &req.interferer_fading, &mut rng)?
                } else {
                    kernels::mark_averaged_kernel(
                        req.functional.as_ref(),
                        &pts,
                        req.link.receiver,
                        &req.pathloss,
                        &req.interferer_fading,
                        &averaging,
                    )?
                    .value
                };
                m.push(k * rho * weight * scale);
            }
            Ok(m)
        });
        let mut total = Moments::default();
        for p in parts {
            total.merge(&p?);
        }
        Ok(total)
    };

    let initial = req.policy.samples.div_ceil(CHUNK).max(1);
    let max_chunks = req.policy.max_samples.div_ceil(CHUNK).max(initial);
    let mut moments = run_chunks(0, initial)?;
    let mut done = initial;
    let mut warning = None;
    if let Some(target) = req.policy.target_rel_se {
        loop {
            let rel = moments.std_error() / moments.mean().abs();
            if rel <= target {
                break;
            }
            if done >= max_chunks {
                warning = Some(format!(
                    "term {i}: relative standard error {rel:.3e} above target {target:.1e} after {} samples",
                    done * CHUNK
                ));
                break;
            }
            let more = done.min(max_chunks - done);
            moments.merge(&run_chunks(done, more)?);
            done += more;
        }
    }
    Ok(TermEstimate {
        value: moments.mean(),
        std_error: moments.std_error(),
        samples: done * CHUNK,
        tail_bound: term_tail_bound(req, i, rmax),
        warning,
    })
}

/// `λ^{-1} F*_i / i! · A_{i+1} · i · G_out · G^{i-1}` where `G` integrates
/// `min{1, E[h] ℓ(x - r)}` over the plane and `G_out` beyond `rmax`.
fn term_tail_bound(req: &FmeRequest, i: usize, rmax: f64) -> Option<f64> {
    let fstar = req.functional.f_star(i)?;
    let eh = req.interferer_fading.mean();
    let g = req.pathloss.capped_integral(eh);
    let g_out = req.pathloss.capped_integral_beyond(eh, rmax);
    let factorial: f64 = (1..=i).map(|k| k as f64).product();
    let a = req.model.bound_prefactor(i + 1);
    Some(fstar / (req.model.density() * factorial) * a * i as f64 * g_out * g.powi(i as i32 - 1))
}

/// `∫ φ(x) min{1, E[h] ℓ(x - r)} dx` with `φ` the per-point factor of the
/// model's product-density bound.
pub fn bound_integral(req: &FmeRequest) -> Result<f64> {
    let eh = req.interferer_fading.mean();
    let full = req.pathloss.capped_integral(eh);
    if let PointProcess::Poisson { .. } = req.model {
        return Ok(full);
    }
    let range = req.model.interaction_range();
    let mut breaks = vec![0.0];
    if req.link.distance > 0.0 {
        breaks.push(req.link.distance);
    }
    breaks.push(if range.is_finite() { range.max(req.link.distance * 2.0).max(1e-9) } else { f64::INFINITY });
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let missing = integrate_plane(
        |x| {
            let lost = 1.0 - req.model.pair_factor(x);
            if lost == 0.0 {
                0.0
            } else {
                lost * req.pathloss.capped(eh, x.dist(req.link.receiver))
            }
        },
        Point2::ORIGIN,
        &breaks,
        Tolerance::new(1e-12, 1e-9),
    )?;
    Ok((full - missing.value).max(0.0))
}

/// Bound on `|P_s - Σ_{i≤n} T_i|`:
/// `λ^{-1} F*_{n+1} / (n+1)! · A_{n+2} · (∫ φ min{1, E[h]ℓ(x - r)} dx)^{n+1}`.
pub fn error_bound(req: &FmeRequest, n: usize) -> Result<f64> {
    let fstar = req.functional.f_star(n + 1).ok_or_else(|| {
        FmeError::BoundUnavailable(format!("derivative bounds up to order {} are not available", n + 1))
    })?;
    if !fstar.is_finite() {
        return Err(FmeError::BoundUnavailable("derivative bounds are infinite".into()));
    }
    let j = bound_integral(req)?;
    let factorial: f64 = (1..=n + 1).map(|k| k as f64).product();
    let a = req.model.bound_prefactor(n + 2);
    Ok(fstar / (req.model.density() * factorial) * a * j.powi(n as i32 + 1))
}
