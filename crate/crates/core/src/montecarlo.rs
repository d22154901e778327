//! Point-process samplers and a simulator of the success probability of the
//! typical link, used as an oracle for the series.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};

use crate::error::{FmeError, Result};
use crate::exec::{map_indexed, stream, Execution};
use crate::fading::FadingModel;
use crate::geometry::{LinkConfig, PathLoss, Point2};
use crate::models::{DppKernel, MaternCsma, PointProcess};

/// Uniform point in the disk of radius `r` around `center`.
fn uniform_in_disk<R: Rng + ?Sized>(rng: &mut R, center: Point2, r: f64) -> Point2 {
    let rho = r * rng.random::<f64>().sqrt();
    center + Point2::polar(rho, 2.0 * PI * rng.random::<f64>())
}

/// Poisson process of intensity `lambda` in the disk of radius `window`.
pub fn sample_ppp<R: Rng + ?Sized>(lambda: f64, window: f64, rng: &mut R) -> Vec<Point2> {
    let mean = lambda * PI * window * window;
    if !(mean > 0.0) {
        return Vec::new();
    }
    let n = Poisson::new(mean).expect("positive mean").sample(rng) as usize;
    (0..n).map(|_| uniform_in_disk(rng, Point2::ORIGIN, window)).collect()
}

/// CSMA thinning: node `i` survives when its mark is smaller than the marks
/// of every node it contends with. `contends(i, j, d)` returns whether `j` is
/// in the contention set of `i` and whether `i` is in that of `j`.
pub fn csma_thin<F>(points: &[Point2], marks: &[f64], range: f64, mut contends: F) -> Vec<bool>
where
    F: FnMut(usize, usize, f64) -> (bool, bool),
{
    let n = points.len();
    let mut keep = vec![true; n];
    if range <= 0.0 || n < 2 {
        return keep;
    }
    for (i, j, d) in close_pairs(points, range) {
        let (j_in_i, i_in_j) = contends(i, j, d);
        if j_in_i && marks[j] <= marks[i] {
            keep[i] = false;
        }
        if i_in_j && marks[i] <= marks[j] {
            keep[j] = false;
        }
    }
    keep
}

/// Pairs `(i, j, d)` with `i < j` and distance `d < range`, in a fixed order.
fn close_pairs(points: &[Point2], range: f64) -> Vec<(usize, usize, f64)> {
    let cell = |p: Point2| ((p.x / range).floor() as i64, (p.y / range).floor() as i64);
    // points sorted by cell; each row of three neighbouring cells is one run
    let mut order: Vec<((i64, i64), usize)> = points.iter().enumerate().map(|(i, &p)| (cell(p), i)).collect();
    order.sort_unstable();
    let mut out = Vec::new();
    let mut near = Vec::new();
    for (i, &p) in points.iter().enumerate() {
        let (cx, cy) = cell(p);
        near.clear();
        for dx in -1..=1 {
            let lo = order.partition_point(|e| e.0 < (cx + dx, cy - 1));
            let hi = order.partition_point(|e| e.0 <= (cx + dx, cy + 1));
            near.extend(order[lo..hi].iter().map(|e| e.1).filter(|&j| j > i));
        }
        near.sort_unstable();
        for &j in &near {
            let d2 = (p - points[j]).norm_sq();
            if d2 < range * range {
                out.push((i, j, d2.sqrt()));
            }
        }
    }
    out
}

fn contention_draw<R: Rng + ?Sized>(model: &MaternCsma, d: f64, symmetric: bool, rng: &mut R) -> (bool, bool) {
    let l = model.pathloss.at_distance(d);
    let hears = |h: f64| h * l > model.threshold;
    let a = hears(model.fading.sample(rng));
    if symmetric {
        (a, a)
    } else {
        (a, hears(model.fading.sample(rng)))
    }
}

/// Matérn CSMA process in the disk of radius `window`: the unit-density parent
/// process is simulated on a disk padded by the contention range.
pub fn sample_matern_csma<R: Rng + ?Sized>(
    model: &MaternCsma,
    window: f64,
    symmetric: bool,
    rng: &mut R,
) -> Vec<Point2> {
    let range = model.range();
    let parents = sample_ppp(1.0, window + range, rng);
    let marks: Vec<f64> = parents.iter().map(|_| rng.random::<f64>()).collect();
    let keep = csma_thin(&parents, &marks, range, |_, _, d| contention_draw(model, d, symmetric, rng));
    parents
        .into_iter()
        .zip(keep)
        .filter(|(p, k)| *k && p.norm() <= window)
        .map(|(p, _)| p)
        .collect()
}

/// Reduced Palm version of [`sample_matern_csma`]: a parent is added at the
/// origin and the realization is conditioned on that parent surviving. The
/// survival event only involves parents within the contention range of the
/// origin, so rejection runs on that disk alone and the rest of the window is
/// drawn once afterwards. The origin is not part of the returned set.
pub fn sample_matern_palm<R: Rng + ?Sized>(
    model: &MaternCsma,
    window: f64,
    symmetric: bool,
    rng: &mut R,
) -> Vec<Point2> {
    let range = model.range();
    let outer = window + range;
    // neighbours of the origin with their marks and both contention outcomes
    let (near, near_marks, origin_mark, links) = loop {
        let near = sample_ppp(1.0, range, rng);
        let marks: Vec<f64> = near.iter().map(|_| rng.random::<f64>()).collect();
        let u0: f64 = rng.random();
        let links: Vec<(bool, bool)> = near
            .iter()
            .map(|p| contention_draw(model, p.norm(), symmetric, rng))
            .collect();
        // the origin survives unless a neighbour it hears has a smaller mark
        let survives = near
            .iter()
            .zip(&marks)
            .zip(&links)
            .all(|((_, &u), &(heard_by_origin, _))| !(heard_by_origin && u < u0));
        if survives {
            break (near, marks, u0, links);
        }
    };
    let mut parents = vec![Point2::ORIGIN];
    let mut marks = vec![origin_mark];
    parents.extend(near.iter().copied());
    marks.extend(near_marks.iter().copied());
    for p in sample_ppp(1.0, outer, rng) {
        if p.norm() > range {
            parents.push(p);
            marks.push(rng.random::<f64>());
        }
    }
    let keep = csma_thin(&parents, &marks, range, |i, j, d| {
        if i == 0 {
            // reuse the outcome that conditioned the origin's survival
            let (a, b) = links[j - 1];
            (a, b)
        } else {
            contention_draw(model, d, symmetric, rng)
        }
    });
    debug_assert!(keep[0]);
    parents
        .into_iter()
        .zip(keep)
        .skip(1)
        .filter(|(p, k)| *k && p.norm() <= window)
        .map(|(p, _)| p)
        .collect()
}

/// Ginibre-type sampling by eigenvalues of complex Gaussian matrices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GinibreSampler {
    pub sigma2: f64,
    /// Fraction of the spectral radius `√N σ` excluded near the edge.
    pub margin: f64,
    pub max_matrix: usize,
}

impl GinibreSampler {
    pub fn new(kernel: &DppKernel) -> Result<Self> {
        let sigma2 = kernel.gaussian_variance().ok_or_else(|| {
            FmeError::Unsupported(format!("no eigenvalue sampler for the {kernel} kernel"))
        })?;
        Ok(GinibreSampler {
            sigma2,
            margin: 0.2,
            max_matrix: 1500,
        })
    }

    /// Smallest matrix whose reliable bulk covers radius `window`.
    pub fn matrix_size_for(&self, window: f64) -> usize {
        let s = window / (self.sigma2.sqrt() * (1.0 - self.margin));
        (s * s).ceil().max(2.0) as usize
    }

    /// Radius of the bulk region where the eigenvalues follow the
    /// stationary kernel.
    pub fn reliable_radius(&self, n: usize) -> f64 {
        (n as f64).sqrt() * self.sigma2.sqrt() * (1.0 - self.margin)
    }

    /// All eigenvalues of an `n × n` matrix with i.i.d. complex Gaussian
    /// entries of variance `σ²`.
    pub fn eigenvalues<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<Point2> {
        let s = (0.5 * self.sigma2).sqrt();
        let m = DMatrix::<Complex64>::from_fn(n, n, |_, _| {
            let a: f64 = StandardNormal.sample(rng);
            let b: f64 = StandardNormal.sample(rng);
            Complex64::new(a * s, b * s)
        });
        m.schur()
            .eigenvalues()
            .map(|ev| ev.iter().map(|z| Point2::new(z.re, z.im)).collect())
            .unwrap_or_default()
    }

    /// Eigenvalues inside the disk of radius `window`, using an `n × n` matrix.
    pub fn sample_with_size<R: Rng + ?Sized>(&self, n: usize, window: f64, rng: &mut R) -> Result<Vec<Point2>> {
        if window > self.reliable_radius(n) {
            return Err(FmeError::config(format!(
                "window {window} exceeds the reliable bulk radius {:.3} of a {n}x{n} matrix",
                self.reliable_radius(n)
            )));
        }
        let mut pts = self.eigenvalues(n, rng);
        pts.retain(|p| p.norm() <= window);
        Ok(pts)
    }
}

/// Ginibre-type process restricted to the disk of radius `window`.
pub fn sample_ginibre<R: Rng + ?Sized>(kernel: &DppKernel, window: f64, rng: &mut R) -> Result<Vec<Point2>> {
    let s = GinibreSampler::new(kernel)?;
    let n = s.matrix_size_for(window);
    if n > s.max_matrix {
        return Err(FmeError::config(format!(
            "window {window} needs a {n}x{n} matrix, above the limit {}",
            s.max_matrix
        )));
    }
    s.sample_with_size(n, window, rng)
}

/// Binned pair-correlation estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairCorrelationBin {
    pub r_lo: f64,
    pub r_hi: f64,
    pub g: f64,
    /// Standard error across realizations.
    pub std_error: f64,
}

/// Pair correlation from independent realizations observed in the disk of
/// radius `window`. Reference points are restricted to the disk shrunk by
/// the largest bin edge, so no edge correction is needed.
pub fn pair_correlation(realizations: &[Vec<Point2>], window: f64, edges: &[f64], density: f64) -> Vec<PairCorrelationBin> {
    let nb = edges.len().saturating_sub(1);
    let rmax = edges.last().copied().unwrap_or(0.0);
    let inner = window - rmax;
    let areas: Vec<f64> = (0..nb).map(|b| PI * (edges[b + 1].powi(2) - edges[b].powi(2))).collect();
    let per: Vec<Vec<f64>> = realizations
        .iter()
        .map(|pts| {
            let mut counts = vec![0.0; nb];
            let mut refs = 0.0;
            for (i, p) in pts.iter().enumerate() {
                if p.norm() > inner {
                    continue;
                }
                refs += 1.0;
                for (j, q) in pts.iter().enumerate() {
                    if i == j {
                        continue;
                    }
                    let d = p.dist(*q);
                    if d >= rmax {
                        continue;
                    }
                    let b = edges.partition_point(|&e| e <= d);
                    if b >= 1 && b <= nb {
                        counts[b - 1] += 1.0;
                    }
                }
            }
            (0..nb)
                .map(|b| if refs > 0.0 { counts[b] / (refs * density * areas[b]) } else { f64::NAN })
                .collect()
        })
        .collect();
    (0..nb)
        .map(|b| {
            let vals: Vec<f64> = per.iter().map(|v| v[b]).filter(|x| x.is_finite()).collect();
            let k = vals.len() as f64;
            let mean = vals.iter().sum::<f64>() / k;
            let var = vals.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0).max(1.0);
            PairCorrelationBin {
                r_lo: edges[b],
                r_hi: edges[b + 1],
                g: mean,
                std_error: (var / k).sqrt(),
            }
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub model: PointProcess,
    pub interferer_fading: FadingModel,
    pub desired_fading: FadingModel,
    pub pathloss: PathLoss,
    pub link: LinkConfig,
    /// Interferers are simulated within this radius of the typical transmitter.
    pub window: f64,
    /// Number of typical-link samples.
    pub trials: usize,
    pub seed: u64,
    pub execution: Execution,
    /// One contention mark per pair (`true`) or one per direction.
    pub symmetric_contention: bool,
}

impl SimConfig {
    pub fn new(
        model: PointProcess,
        interferer_fading: FadingModel,
        desired_fading: FadingModel,
        pathloss: PathLoss,
        link: LinkConfig,
    ) -> Self {
        SimConfig {
            model,
            interferer_fading,
            desired_fading,
            pathloss,
            link,
            window: 50.0,
            trials: 10_000,
            seed: 0,
            execution: Execution::default(),
            symmetric_contention: true,
        }
    }

    fn validate(&self) -> Result<()> {
        self.interferer_fading.validate()?;
        self.desired_fading.validate()?;
        if !(self.window.is_finite() && self.window > self.link.distance) {
            return Err(FmeError::config(format!(
                "simulation window {} must exceed the link distance {}",
                self.window, self.link.distance
            )));
        }
        if self.trials == 0 {
            return Err(FmeError::config("at least one trial is required"));
        }
        Ok(())
    }

    /// Mean interference from beyond the window, `E[h] λ ∫_{‖x‖>R_w} ℓ(x - r) dx`,
    /// bounded using `‖x - r‖ ≥ ‖x‖ - R`.
    pub fn tail_interference(&self) -> f64 {
        let alpha = self.pathloss.alpha();
        let gap = self.window - self.link.distance;
        let lambda = self.model.density();
        let edge = self.window / gap;
        // ∫_{R_w}^∞ 2πρ (ρ - R)^{-α} dρ ≤ (R_w/gap) ∫_{gap}^∞ 2π s^{1-α} ds
        self.interferer_fading.mean() * lambda * edge * 2.0 * PI * gap.powf(2.0 - alpha) / (alpha - 2.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimEstimate {
    pub p_hat: f64,
    /// `1.96 √(p̂(1 - p̂)/n_eff)`.
    pub ci95: f64,
    pub trials: usize,
    /// Equals `trials` for independent samples; smaller for the Ginibre
    /// estimator whose samples share realizations.
    pub effective_trials: f64,
    /// Mean interference omitted beyond the window.
    pub tail_interference: f64,
    /// `ν` times the omitted mean interference; the window is adequate when
    /// this is below `1e-4`.
    pub tail_threshold_shift: f64,
    pub tail_ok: bool,
}

fn link_success<R: Rng + ?Sized>(cfg: &SimConfig, interferers: &[Point2], rng: &mut R) -> bool {
    let r = cfg.link.receiver;
    let mut interference = 0.0;
    for &x in interferers {
        interference += cfg.interferer_fading.sample(rng) * cfg.pathloss.eval(x - r);
    }
    let w = cfg.desired_fading.sample(rng);
    let signal = w * cfg.pathloss.at_distance(cfg.link.distance);
    signal > cfg.link.theta * (interference + cfg.link.noise)
}

const TRIAL_DOMAIN: u64 = 0x5349_4d55;

/// Empirical success probability of the typical link.
pub fn estimate_success(cfg: &SimConfig) -> Result<SimEstimate> {
    cfg.validate()?;
    let nu = cfg.link.nu(&cfg.pathloss)?;
    let (successes, effective) = match &cfg.model {
        PointProcess::Poisson { intensity } => {
            let hits = count_trials(cfg, |rng| {
                let pts = sample_ppp(*intensity, cfg.window, rng);
                link_success(cfg, &pts, rng)
            });
            (hits, cfg.trials as f64)
        }
        PointProcess::MaternCsma(m) => {
            let hits = count_trials(cfg, |rng| {
                let pts = sample_matern_palm(m, cfg.window, cfg.symmetric_contention, rng);
                link_success(cfg, &pts, rng)
            });
            (hits, cfg.trials as f64)
        }
        PointProcess::Determinantal(d) => return estimate_ginibre(cfg, &d.kernel, nu),
    };
    let p = successes as f64 / cfg.trials as f64;
    Ok(finish(cfg, p, effective, nu))
}

fn finish(cfg: &SimConfig, p: f64, effective: f64, nu: f64) -> SimEstimate {
    let tail = cfg.tail_interference();
    SimEstimate {
        p_hat: p,
        ci95: 1.96 * (p * (1.0 - p) / effective).sqrt(),
        trials: cfg.trials,
        effective_trials: effective,
        tail_interference: tail,
        tail_threshold_shift: nu * tail,
        tail_ok: nu * tail < 1e-4,
    }
}

fn count_trials<F>(cfg: &SimConfig, trial: F) -> usize
where
    F: Fn(&mut rand_chacha::ChaCha8Rng) -> bool + Sync + Send,
{
    const CHUNK: usize = 256;
    let chunks = cfg.trials.div_ceil(CHUNK);
    map_indexed(cfg.execution, chunks, |c| {
        let lo = c * CHUNK;
        let hi = (lo + CHUNK).min(cfg.trials);
        (lo..hi)
            .filter(|&t| {
                let mut rng = stream(cfg.seed, TRIAL_DOMAIN, t as u64);
                trial(&mut rng)
            })
            .count()
    })
    .into_iter()
    .sum()
}

/// Palm estimate for Ginibre-type processes by Campbell averaging: every
/// eigenvalue in an inner disk serves as a typical transmitter, with its
/// interferers taken from the same realization. The standard error treats
/// realizations as clusters.
fn estimate_ginibre(cfg: &SimConfig, kernel: &DppKernel, nu: f64) -> Result<SimEstimate> {
    let sampler = GinibreSampler::new(kernel)?;
    let sigma = sampler.sigma2.sqrt();
    let inner = 3.0 * sigma;
    let n = sampler.matrix_size_for(inner + cfg.window);
    if n > sampler.max_matrix {
        return Err(FmeError::config(format!(
            "a simulation window of {} needs a {n}x{n} matrix, above the limit {}",
            cfg.window, sampler.max_matrix
        )));
    }
    let per_realization = kernel.at_zero() * PI * inner * inner;
    let realizations = ((cfg.trials as f64 / per_realization).ceil() as usize).max(2);
    let parts = map_indexed(cfg.execution, realizations, |k| {
        let mut rng = stream(cfg.seed, TRIAL_DOMAIN + 1, k as u64);
        let pts = sampler.eigenvalues(n, &mut rng);
        let mut hits = 0.0;
        let mut count = 0.0;
        for (i, &o) in pts.iter().enumerate() {
            if o.norm() > inner {
                continue;
            }
            let interferers: Vec<Point2> = pts
                .iter()
                .enumerate()
                .filter(|&(j, &x)| j != i && x.dist(o) <= cfg.window)
                .map(|(_, &x)| x - o)
                .collect();
            count += 1.0;
            if link_success(cfg, &interferers, &mut rng) {
                hits += 1.0;
            }
        }
        (hits, count)
    });
    let total: f64 = parts.iter().map(|p| p.1).sum();
    if total == 0.0 {
        return Err(FmeError::config("no typical points were sampled"));
    }
    let p = parts.iter().map(|p| p.0).sum::<f64>() / total;
    let k = parts.len() as f64;
    let var = parts.iter().map(|(s, c)| (s - p * c).powi(2)).sum::<f64>() * k / ((k - 1.0) * total * total);
    let effective = if var > 0.0 { (p * (1.0 - p) / var).min(total) } else { total };
    let mut est = finish(cfg, p, effective, nu);
    est.trials = total as usize;
    Ok(est)
}
