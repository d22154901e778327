//! Expansion kernels `F^{(n)}` of a functional of the interference at the
//! receiver, in recursive and compact subset-sum form, and their expectations
//! over i.i.d. fading marks.
//!
//! Kernels vanish unless `z_n ≺ … ≺ z₁` in the radial order (norm, then
//! angle, then coordinates). The check is done here so integrators may
//! sample the whole plane.

use std::cmp::Ordering;

use rand::Rng;

use crate::error::{FmeError, Result};
use crate::exec::{stream, Moments};
use crate::fading::{FadingModel, Functional, SuccessFunctional};
use crate::geometry::{PathLoss, Point2};

/// Largest number of points accepted by the subset enumeration.
pub const MAX_SUBSET_POINTS: usize = 20;

/// Points `z₁, …, z_n` with optional marks. `z₁` has the largest norm.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderedConfig {
    points: Vec<Point2>,
    marks: Option<Vec<f64>>,
}

impl OrderedConfig {
    /// Sorts `points` into non-increasing radial order.
    pub fn new(mut points: Vec<Point2>) -> Self {
        points.sort_by(|a, b| b.radial_cmp(a));
        OrderedConfig { points, marks: None }
    }

    /// Sorts points together with their marks.
    pub fn with_marks(points: Vec<Point2>, marks: Vec<f64>) -> Result<Self> {
        if points.len() != marks.len() {
            return Err(FmeError::config(format!(
                "{} points but {} marks",
                points.len(),
                marks.len()
            )));
        }
        let mut pairs: Vec<(Point2, f64)> = points.into_iter().zip(marks).collect();
        pairs.sort_by(|a, b| b.0.radial_cmp(&a.0));
        let (points, marks) = pairs.into_iter().unzip();
        Ok(OrderedConfig {
            points,
            marks: Some(marks),
        })
    }

    /// Keeps the given order, which need not be radially sorted.
    pub fn as_given(points: Vec<Point2>, marks: Option<Vec<f64>>) -> Self {
        OrderedConfig { points, marks }
    }

    pub fn points(&self) -> &[Point2] {
        &self.points
    }

    pub fn marks(&self) -> Option<&[f64]> {
        self.marks.as_deref()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Strict order `z_n ≺ … ≺ z₁`.
    pub fn is_ordered(&self) -> bool {
        is_strictly_ordered(&self.points)
    }

    fn gammas(&self, receiver: Point2, pl: &PathLoss) -> Result<Vec<f64>> {
        let marks = self
            .marks
            .as_ref()
            .ok_or_else(|| FmeError::config("kernel evaluation needs marks"))?;
        Ok(self
            .points
            .iter()
            .zip(marks)
            .map(|(&z, &h)| gamma_term(h, pl.eval(z - receiver)))
            .collect())
    }
}

pub(crate) fn is_strictly_ordered(points: &[Point2]) -> bool {
    points.windows(2).all(|w| w[0].radial_cmp(&w[1]) == Ordering::Greater)
}

fn gamma_term(h: f64, l: f64) -> f64 {
    if h == 0.0 {
        0.0
    } else {
        h * l
    }
}

/// `Σ_{Π ⊆ {1..n}} (-1)^{n-|Π|} F(b + Σ_{i∈Π} γ_i)`, enumerated in Gray-code
/// order. Infinite `γ_i` are tracked separately so removing them is exact.
pub fn alternating_subset_sum(f: impl Fn(f64) -> f64, gammas: &[f64], background: f64) -> Result<f64> {
    let n = gammas.len();
    if n > MAX_SUBSET_POINTS {
        return Err(FmeError::TooManyPoints(n));
    }
    let parity = |k: usize| if (n - k) % 2 == 0 { 1.0 } else { -1.0 };
    let arg = |sum: f64, inf: usize| if inf > 0 { f64::INFINITY } else { background + sum };
    let mut in_set = 0u32;
    let mut size = 0usize;
    let mut sum = 0.0;
    let mut inf = 0usize;
    let mut total = parity(0) * f(arg(0.0, 0));
    for step in 1u32..(1u32 << n) {
        let bit = step.trailing_zeros() as usize;
        let g = gammas[bit];
        let adding = in_set >> bit & 1 == 0;
        in_set ^= 1 << bit;
        if g.is_infinite() {
            if adding {
                inf += 1
            } else {
                inf -= 1
            }
        } else if adding {
            sum += g;
        } else {
            sum -= g;
        }
        if adding {
            size += 1
        } else {
            size -= 1
        }
        if in_set == 0 {
            sum = 0.0;
        }
        total += parity(size) * f(arg(sum.max(0.0), inf));
    }
    Ok(total)
}

/// Null kernel `F^{(n)}_{z₁..z_n}(∅)`; zero off the ordered region.
pub fn null_kernel(f: &dyn Functional, cfg: &OrderedConfig, receiver: Point2, pl: &PathLoss) -> Result<f64> {
    kernel_with_background(f, cfg, 0.0, receiver, pl)
}

/// Compact form `F^{(n)}_{z₁..z_n}(φ)` where `background` is the interference
/// `I_{z_n}` of the points of `φ` below `z_n`.
pub fn kernel_with_background(
    f: &dyn Functional,
    cfg: &OrderedConfig,
    background: f64,
    receiver: Point2,
    pl: &PathLoss,
) -> Result<f64> {
    if cfg.len() > MAX_SUBSET_POINTS {
        return Err(FmeError::TooManyPoints(cfg.len()));
    }
    if background < 0.0 {
        return Err(FmeError::config("background interference must be non-negative"));
    }
    if !cfg.is_ordered() {
        return Ok(0.0);
    }
    let gammas = cfg.gammas(receiver, pl)?;
    alternating_subset_sum(|x| f.eval(x), &gammas, background)
}

/// Reference implementation of the nested first-order differences
/// `F^{(n)}_{z₁..z_n}(φ) = F^{(n-1)}_{z₁..z_{n-1}}(φ_{z_n} ∪ {z_n}) - F^{(n-1)}_{z₁..z_{n-1}}(φ_{z_n})`,
/// where `φ_z` keeps the points of `φ` strictly below `z`.
pub fn recursive_kernel(
    f: &dyn Functional,
    cfg: &OrderedConfig,
    background: &[(Point2, f64)],
    receiver: Point2,
    pl: &PathLoss,
) -> Result<f64> {
    if cfg.len() > 6 {
        return Err(FmeError::Unsupported(format!(
            "recursive kernel is a test reference limited to 6 points, got {}",
            cfg.len()
        )));
    }
    let marks = cfg
        .marks()
        .ok_or_else(|| FmeError::config("kernel evaluation needs marks"))?;
    let zs: Vec<(Point2, f64)> = cfg.points().iter().copied().zip(marks.iter().copied()).collect();
    Ok(recurse(f, &zs, background.to_vec(), receiver, pl))
}

fn recurse(f: &dyn Functional, zs: &[(Point2, f64)], phi: Vec<(Point2, f64)>, receiver: Point2, pl: &PathLoss) -> f64 {
    match zs.split_last() {
        None => {
            let mut sum = 0.0;
            for &(x, h) in &phi {
                sum += gamma_term(h, pl.eval(x - receiver));
            }
            f.eval(sum)
        }
        Some((&(z, h), rest)) => {
            let below: Vec<(Point2, f64)> = phi
                .into_iter()
                .filter(|(x, _)| x.radial_cmp(&z) == Ordering::Less)
                .collect();
            let mut with = below.clone();
            with.push((z, h));
            recurse(f, rest, with, receiver, pl) - recurse(f, rest, below, receiver, pl)
        }
    }
}

/// `Δ(x) = 1 / (1 + ν^{-1} ℓ(x - r)^{-1})`.
pub fn rayleigh_delta(nu: f64, l: f64) -> f64 {
    let g = nu * l;
    if g.is_infinite() {
        1.0
    } else {
        g / (1.0 + g)
    }
}

/// Closed-form mark expectation of the null kernel for Rayleigh fading on
/// every link: `(-1)^n e^{-νN₀} Π Δ(z_i)`.
pub fn rayleigh_null_kernel_mean(nu: f64, noise: f64, points: &[Point2], receiver: Point2, pl: &PathLoss) -> f64 {
    if !is_strictly_ordered(points) {
        return 0.0;
    }
    let sign = if points.len() % 2 == 0 { 1.0 } else { -1.0 };
    sign * (-nu * noise).exp()
        * points
            .iter()
            .map(|&z| rayleigh_delta(nu, pl.eval(z - receiver)))
            .product::<f64>()
}

/// Mark-averaged kernel value and the standard error of its estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelMean {
    pub value: f64,
    pub std_error: f64,
}

impl KernelMean {
    fn exact(value: f64) -> Self {
        KernelMean { value, std_error: 0.0 }
    }
}

/// How interferer marks are averaged out.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarkAveraging {
    /// Gauss nodes per point for the tensor rule.
    pub nodes: usize,
    /// Largest point count handled by the tensor rule.
    pub max_tensor_points: usize,
    /// Draws used once the tensor rule is out of range.
    pub mc_draws: usize,
    pub seed: u64,
}

impl Default for MarkAveraging {
    fn default() -> Self {
        MarkAveraging {
            nodes: 32,
            max_tensor_points: 4,
            mc_draws: 10_000,
            seed: 0,
        }
    }
}

/// `E_h[F^{(n)}_{z₁..z_n}(∅)]` over i.i.d. interferer marks.
///
/// Success functionals whose desired-link fading is Rayleigh or Nakagami with
/// integer shape, combined with Rayleigh, Nakagami or unit interferer marks,
/// are averaged exactly. Other cases use a tensor Gauss rule and, beyond
/// `max_tensor_points`, Monte Carlo marks.
pub fn mark_averaged_kernel(
    f: &dyn Functional,
    points: &[Point2],
    receiver: Point2,
    pl: &PathLoss,
    fading: &FadingModel,
    averaging: &MarkAveraging,
) -> Result<KernelMean> {
    if points.len() > MAX_SUBSET_POINTS {
        return Err(FmeError::TooManyPoints(points.len()));
    }
    if !is_strictly_ordered(points) {
        return Ok(KernelMean::exact(0.0));
    }
    let ls: Vec<f64> = points.iter().map(|&z| pl.eval(z - receiver)).collect();
    if let Some(v) = f.as_success().and_then(|s| exact_success_kernel_mean(s, &ls, fading)) {
        return Ok(KernelMean::exact(v));
    }
    if let FadingModel::UnitPoint = fading {
        return alternating_subset_sum(|x| f.eval(x), &ls, 0.0).map(KernelMean::exact);
    }
    if points.len() <= averaging.max_tensor_points {
        let rule = fading.gauss_rule(averaging.nodes);
        return tensor_gauss_mean(f, &ls, &rule.nodes, &rule.weights).map(KernelMean::exact);
    }
    let mut rng = stream(averaging.seed, 0x6b65_726e, 0);
    let mut m = Moments::default();
    let mut gammas = vec![0.0; ls.len()];
    for _ in 0..averaging.mc_draws.max(2) {
        for (g, &l) in gammas.iter_mut().zip(&ls) {
            *g = gamma_term(fading.sample(&mut rng), l);
        }
        m.push(alternating_subset_sum(|x| f.eval(x), &gammas, 0.0)?);
    }
    Ok(KernelMean {
        value: m.mean(),
        std_error: m.std_error(),
    })
}

/// Null kernel at marks drawn by the caller's stream; used when the mark
/// average is folded into an outer Monte Carlo loop.
pub fn sampled_mark_kernel<R: Rng + ?Sized>(
    f: &dyn Functional,
    ls: &[f64],
    fading: &FadingModel,
    rng: &mut R,
) -> Result<f64> {
    let gammas: Vec<f64> = ls.iter().map(|&l| gamma_term(fading.sample(rng), l)).collect();
    alternating_subset_sum(|x| f.eval(x), &gammas, 0.0)
}

fn tensor_gauss_mean(f: &dyn Functional, ls: &[f64], nodes: &[f64], weights: &[f64]) -> Result<f64> {
    let n = ls.len();
    let q = nodes.len();
    let mut idx = vec![0usize; n];
    let mut gammas = vec![0.0; n];
    let mut total = 0.0;
    loop {
        let mut w = 1.0;
        for k in 0..n {
            w *= weights[idx[k]];
            gammas[k] = gamma_term(nodes[idx[k]], ls[k]);
        }
        total += w * alternating_subset_sum(|x| f.eval(x), &gammas, 0.0)?;
        let mut k = 0;
        loop {
            if k == n {
                return Ok(total);
            }
            idx[k] += 1;
            if idx[k] < q {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

/// Exact `E_h[F^{(n)}]` via the Laplace transform of the interference.
///
/// With `W ~ Gamma(m, 1/m)`, `m` integer, `P(W > u) = Σ_{k<m} (mu)^k e^{-mu}/k!`
/// and `E[u^k e^{-mu}] = (-1)^k L^{(k)}(m)` where `L(t) = E[e^{-tu}]`. The
/// alternating subset sum of `L` factorizes into `e^{-t s₀} Π (g_i(t) - 1)`,
/// so only a truncated power series in `t - m` is needed.
pub fn exact_success_kernel_mean(f: &SuccessFunctional, ls: &[f64], fading: &FadingModel) -> Option<f64> {
    let m = match f.base {
        FadingModel::Rayleigh => 1usize,
        FadingModel::Nakagami { m } if m.fract() == 0.0 && m <= 64.0 => m as usize,
        _ => return None,
    };
    let mh = match *fading {
        FadingModel::Rayleigh => Some(1.0),
        FadingModel::Nakagami { m } => Some(m),
        FadingModel::UnitPoint => None,
        FadingModel::LogNormal { .. } => return None,
    };
    let mf = m as f64;
    let s0 = f.offset();
    let nu = f.nu;
    // series of e^{-(m+ε) s0}
    let mut acc = vec![0.0; m];
    acc[0] = (-mf * s0).exp();
    for k in 1..m {
        acc[k] = acc[k - 1] * -s0 / k as f64;
    }
    let mut factor = vec![0.0; m];
    for &l in ls {
        let b = nu * l;
        // coefficients of g(m+ε) - 1
        if b == 0.0 {
            return Some(0.0);
        }
        if b.is_infinite() {
            factor.iter_mut().for_each(|c| *c = 0.0);
            factor[0] = -1.0;
        } else {
            match mh {
                Some(mh) => {
                    let bb = b / mh;
                    let ln_g0 = -mh * (mf * bb).ln_1p();
                    let beta = bb / (1.0 + mf * bb);
                    factor[0] = ln_g0.exp_m1();
                    let g0 = ln_g0.exp();
                    let mut c = g0;
                    for (k, slot) in factor.iter_mut().enumerate().skip(1) {
                        // C(-mh, k) β^k recursively
                        c *= (-mh - (k as f64 - 1.0)) / k as f64 * beta;
                        *slot = c;
                    }
                }
                None => {
                    factor[0] = (-mf * b).exp_m1();
                    let mut c = (-mf * b).exp();
                    for (k, slot) in factor.iter_mut().enumerate().skip(1) {
                        c *= -b / k as f64;
                        *slot = c;
                    }
                }
            }
        }
        let mut next = vec![0.0; m];
        for (i, &a) in acc.iter().enumerate() {
            for (j, &c) in factor.iter().enumerate().take(m - i) {
                next[i + j] += a * c;
            }
        }
        acc = next;
    }
    let mut value = 0.0;
    let mut pow = 1.0;
    for &a in &acc {
        value += pow * a;
        pow *= -mf;
    }
    Some(value)
}

/// `min_{k≤n} F_k 2^{n-k} Π_{k smallest} γ`, the kernel bound for functionals
/// with bounded derivatives. `None` when a derivative bound is missing.
pub fn kernel_derivative_bound(f: &dyn Functional, gammas: &[f64]) -> Option<f64> {
    let n = gammas.len();
    let mut sorted = gammas.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut best = f64::INFINITY;
    let mut prod = 1.0;
    for k in 0..=n {
        if k > 0 {
            prod *= sorted[k - 1];
        }
        let fk = f.derivative_sup(k)?;
        let v = fk * 2f64.powi((n - k) as i32) * prod;
        if !v.is_nan() {
            best = best.min(v);
        }
    }
    Some(best)
}
