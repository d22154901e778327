use std::collections::HashMap;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, OnceLock};

use parking_lot::RwLock;
use rand::Rng;

use crate::error::{FmeError, Result};
use crate::exec::stream;
use crate::fading::FadingModel;
use crate::geometry::{PathLoss, Point2};
use crate::quad::{integrate_breaks, integrate_plane, Tolerance};
use crate::special::GaussRule;

/// Contention probabilities below this are treated as zero.
const CONTENTION_EPS: f64 = 1e-16;
const PAIR_TABLE_SIZE: usize = 1024;
const CACHE_CAPACITY: usize = 1 << 16;
const RADIAL_NODES: usize = 32;
const ANGULAR_NODES: usize = 96;

/// Rule for the integral over the mark cube `[0,1]^n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SimplexRule {
    /// Gauss–Legendre on each of the `n!` ordered simplices for `n ≤ 4`,
    /// Monte Carlo with `draws` samples beyond.
    Auto { draws: usize },
    /// Tensor Gauss–Legendre with `nodes` per dimension on each ordered simplex.
    Deterministic { nodes: usize },
    MonteCarlo { draws: usize },
}

impl Default for SimplexRule {
    fn default() -> Self {
        SimplexRule::Auto { draws: 10_000 }
    }
}

/// Matérn hard-core process modified for CSMA: a unit-density Poisson parent
/// process where a node survives when its uniform mark is the smallest among
/// the nodes it hears above the power threshold `P`.
#[derive(Clone)]
pub struct MaternCsma {
    pub threshold: f64,
    pub fading: FadingModel,
    pub pathloss: PathLoss,
    pub max_order: usize,
    pub simplex: SimplexRule,
    mean_contention: f64,
    range: f64,
    shared: Arc<Shared>,
}

#[derive(Default)]
struct Shared {
    pair_table: OnceLock<Vec<f64>>,
    cache: RwLock<HashMap<Vec<i64>, f64>>,
    integrations: AtomicUsize,
}

impl fmt::Debug for MaternCsma {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MaternCsma")
            .field("threshold", &self.threshold)
            .field("fading", &self.fading)
            .field("pathloss", &self.pathloss)
            .field("max_order", &self.max_order)
            .field("mean_contention", &self.mean_contention)
            .finish_non_exhaustive()
    }
}

impl MaternCsma {
    pub fn new(threshold: f64, fading: FadingModel, pathloss: PathLoss) -> Result<Self> {
        if !(threshold.is_finite() && threshold > 0.0) {
            return Err(FmeError::config(format!("CSMA power threshold must be positive, got {threshold}")));
        }
        fading.validate()?;
        let q = fading.upper_quantile(CONTENTION_EPS);
        let alpha = pathloss.alpha();
        let range = match pathloss {
            PathLoss::Bounded { .. } if threshold >= q => 0.0,
            _ => (q / threshold).powf(1.0 / alpha),
        };
        let mut model = MaternCsma {
            threshold,
            fading,
            pathloss,
            max_order: 4,
            simplex: SimplexRule::default(),
            mean_contention: 0.0,
            range,
            shared: Arc::new(Shared::default()),
        };
        model.mean_contention = model.compute_mean_contention()?;
        Ok(model)
    }

    pub fn with_max_order(mut self, max_order: usize) -> Self {
        self.max_order = max_order;
        self
    }

    pub fn with_simplex_rule(mut self, rule: SimplexRule) -> Self {
        self.simplex = rule;
        self
    }

    /// Probability that two nodes at distance `r` contend:
    /// `P(h ℓ(r) > P)`.
    pub fn contention_probability(&self, r: f64) -> f64 {
        let l = self.pathloss.at_distance(r);
        if l.is_infinite() {
            return 1.0;
        }
        self.fading.ccdf(self.threshold / l)
    }

    /// Distance beyond which contention is negligible.
    pub fn range(&self) -> f64 {
        self.range
    }

    fn radial_breaks(&self) -> Vec<f64> {
        let mut b = vec![0.0];
        if let PathLoss::Bounded { .. } = self.pathloss {
            if self.range > 1.0 {
                b.push(1.0);
            }
        }
        if self.range > 0.0 {
            b.push(self.range);
        }
        b
    }

    fn compute_mean_contention(&self) -> Result<f64> {
        let breaks = self.radial_breaks();
        if breaks.len() < 2 {
            return Ok(0.0);
        }
        let r = integrate_breaks(
            |r| 2.0 * std::f64::consts::PI * r * self.contention_probability(r),
            &breaks,
            Tolerance::new(1e-13, 1e-11),
        )?;
        Ok(r.value)
    }

    /// `N`, the mean number of parent nodes in a contention neighbourhood.
    pub fn mean_contention(&self) -> f64 {
        self.mean_contention
    }

    /// `(1 - e^{-N}) / N`.
    pub fn density(&self) -> f64 {
        let n = self.mean_contention;
        if n < 1e-12 {
            1.0 - 0.5 * n
        } else {
            -(-n).exp_m1() / n
        }
    }

    /// Number of subset integrals evaluated by quadrature so far.
    pub fn integrations_performed(&self) -> usize {
        self.shared.integrations.load(Ordering::Relaxed)
    }

    fn integrate_subset(&self, ys: &[Point2]) -> f64 {
        self.shared.integrations.fetch_add(1, Ordering::Relaxed);
        let breaks = self.radial_breaks();
        if breaks.len() < 2 {
            return 0.0;
        }
        let f = |x: Point2| {
            ys.iter()
                .map(|&y| self.contention_probability(x.dist(y)))
                .product::<f64>()
        };
        match integrate_plane(f, ys[0], &breaks, Tolerance::new(1e-11, 1e-9)) {
            Ok(r) => r.value,
            Err(FmeError::Quadrature { estimate, .. }) => estimate,
            Err(_) => f64::NAN,
        }
    }

    /// Fixed polar rule around `ys[0]`: Gauss–Legendre in the radius on each
    /// radial piece, trapezoid in the angle. Used for three or more points,
    /// where adaptive quadrature is too slow inside Monte Carlo loops.
    fn overlap_by_tensor_rule(&self, ys: &[Point2]) -> f64 {
        self.shared.integrations.fetch_add(1, Ordering::Relaxed);
        let breaks = self.radial_breaks();
        if breaks.len() < 2 {
            return 0.0;
        }
        static RULE: OnceLock<(GaussRule, Vec<Point2>)> = OnceLock::new();
        let (rule, dirs) = RULE.get_or_init(|| {
            let dtheta = 2.0 * std::f64::consts::PI / ANGULAR_NODES as f64;
            let dirs = (0..ANGULAR_NODES).map(|k| Point2::polar(1.0, k as f64 * dtheta)).collect();
            (GaussRule::legendre(RADIAL_NODES), dirs)
        });
        let dtheta = 2.0 * std::f64::consts::PI / ANGULAR_NODES as f64;
        let mut total = 0.0;
        for w in breaks.windows(2) {
            let piece = rule.mapped(w[0], w[1]);
            for (&r, &wr) in piece.nodes.iter().zip(&piece.weights) {
                let mut ring = 0.0;
                for d in dirs {
                    let x = ys[0] + *d * r;
                    let mut v = 1.0;
                    for &y in &ys[1..] {
                        v *= self.contention_probability(x.dist(y));
                        if v == 0.0 {
                            break;
                        }
                    }
                    ring += v;
                }
                total += wr * r * ring * dtheta * self.contention_probability(r);
            }
        }
        total
    }

    fn pair_table(&self) -> &[f64] {
        self.shared.pair_table.get_or_init(|| {
            let h = 2.0 * self.range / (PAIR_TABLE_SIZE - 1) as f64;
            (0..PAIR_TABLE_SIZE + 2)
                .map(|k| {
                    let d = k as f64 * h;
                    if d >= 2.0 * self.range {
                        0.0
                    } else {
                        self.integrate_subset(&[Point2::ORIGIN, Point2::new(d, 0.0)])
                    }
                })
                .collect()
        })
    }

    /// `∫ c(|x|) c(|x - y|) dx` as a function of `d = |y|`, interpolated from
    /// a table built on first use.
    pub fn pair_overlap(&self, d: f64) -> f64 {
        if self.range == 0.0 || d >= 2.0 * self.range {
            return 0.0;
        }
        let table = self.pair_table();
        let h = 2.0 * self.range / (PAIR_TABLE_SIZE - 1) as f64;
        let s = d / h;
        let k = (s.floor() as usize).clamp(1, PAIR_TABLE_SIZE - 2);
        let t = s - k as f64;
        // cubic Lagrange through k-1..k+2, mirrored at the origin
        let v = |j: isize| table[j.unsigned_abs()];
        let k = k as isize;
        let (p0, p1, p2, p3) = (v(k - 1), v(k), v(k + 1), v(k + 2));
        let t1 = t + 1.0;
        let t2 = t - 1.0;
        let t3 = t - 2.0;
        (-p0 * t * t2 * t3 / 6.0 + p1 * t1 * t2 * t3 / 2.0 - p2 * t1 * t * t3 / 2.0 + p3 * t1 * t * t2 / 6.0)
            .max(0.0)
    }

    /// `∫ Π_{y∈ys} c(|x - y|) dx`, cached per configuration.
    pub fn subset_integral(&self, ys: &[Point2]) -> f64 {
        match ys.len() {
            0 => 0.0,
            1 => self.mean_contention,
            2 => self.pair_overlap(ys[0].dist(ys[1])),
            _ => {
                for i in 0..ys.len() {
                    for j in i + 1..ys.len() {
                        if ys[i].dist(ys[j]) >= 2.0 * self.range {
                            return 0.0;
                        }
                    }
                }
                let key = config_key(ys);
                if let Some(v) = self.shared.cache.read().get(&key) {
                    return *v;
                }
                let v = self.overlap_by_tensor_rule(ys);
                let mut cache = self.shared.cache.write();
                if cache.len() < CACHE_CAPACITY {
                    cache.insert(key, v);
                }
                v
            }
        }
    }

    /// `ϱ^{(k+1)}(points…, o)`.
    pub fn product_density(&self, points: &[Point2]) -> f64 {
        let mut ys: Vec<Point2> = points.to_vec();
        ys.push(Point2::ORIGIN);
        let n = ys.len();
        let mut pair = 1.0;
        for i in 0..n {
            for j in i + 1..n {
                pair *= 1.0 - self.contention_probability(ys[i].dist(ys[j]));
            }
        }
        if pair <= 0.0 {
            return 0.0;
        }
        pair * self.mark_cube_integral(&ys)
    }

    /// `∫_{[0,1]^n} exp(-Σ_J (-1)^{|J|+1} I_J min_{i∈J} t_i) dt`.
    pub fn mark_cube_integral(&self, ys: &[Point2]) -> f64 {
        let n = ys.len();
        let subsets = 1usize << n;
        let mut signed = vec![0.0; subsets];
        for (mask, slot) in signed.iter_mut().enumerate().skip(1) {
            let members: Vec<Point2> = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| ys[i]).collect();
            let sign = if members.len() % 2 == 1 { 1.0 } else { -1.0 };
            *slot = sign * self.subset_integral(&members);
        }
        let deterministic = match self.simplex {
            SimplexRule::Auto { draws } => {
                if n <= 4 {
                    Some(if n <= 3 { 12 } else { 10 })
                } else {
                    return cube_monte_carlo(&signed, n, draws, ys);
                }
            }
            SimplexRule::Deterministic { nodes } => Some(nodes),
            SimplexRule::MonteCarlo { draws } => return cube_monte_carlo(&signed, n, draws, ys),
        };
        cube_by_simplices(&signed, n, deterministic.unwrap_or(12))
    }
}

fn config_key(ys: &[Point2]) -> Vec<i64> {
    let q = |v: f64| (v * 1e9).round() as i64;
    let mut pts: Vec<(i64, i64)> = ys.iter().map(|p| (q(p.x), q(p.y))).collect();
    pts.sort_unstable();
    let (x0, y0) = pts[0];
    pts.iter().flat_map(|&(x, y)| [x - x0, y - y0]).collect()
}

/// Sum over orderings `t_{σ0} ≤ … ≤ t_{σ(n-1)}`; on each ordered simplex the
/// exponent is linear in `t`.
fn cube_by_simplices(signed: &[f64], n: usize, nodes: usize) -> f64 {
    let rule = GaussRule::legendre(nodes).mapped(0.0, 1.0);
    let mut perm: Vec<usize> = (0..n).collect();
    let mut total = 0.0;
    let mut coef = vec![0.0; n];
    loop {
        // coefficient of s_k = t_{σk}: subsets whose earliest member in σ-order is σk
        let mut seen = 0usize;
        for (k, &p) in perm.iter().enumerate() {
            let bit = 1usize << p;
            let mut c = 0.0;
            for (mask, &v) in signed.iter().enumerate() {
                if mask & bit != 0 && mask & seen == 0 {
                    c += v;
                }
            }
            coef[k] = c;
            seen |= bit;
        }
        total += simplex_integral(&coef, &rule);
        if !next_permutation(&mut perm) {
            break;
        }
    }
    total
}

/// `∫_{0≤s₀≤…≤s_{n-1}≤1} exp(-Σ c_k s_k) ds` by nested Gauss–Legendre.
fn simplex_integral(coef: &[f64], rule: &GaussRule) -> f64 {
    fn rec(k: usize, upper: f64, acc: f64, coef: &[f64], rule: &GaussRule) -> f64 {
        let mut sum = 0.0;
        for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
            let s = upper * x;
            let a = acc + coef[k] * s;
            sum += w * upper * if k == 0 { (-a).exp() } else { rec(k - 1, s, a, coef, rule) };
        }
        sum
    }
    if coef.is_empty() {
        return 1.0;
    }
    rec(coef.len() - 1, 1.0, 0.0, coef, rule)
}

fn next_permutation(p: &mut [usize]) -> bool {
    let n = p.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

fn cube_monte_carlo(signed: &[f64], n: usize, draws: usize, ys: &[Point2]) -> f64 {
    let mut h = std::collections::hash_map::DefaultHasher::new();
    config_key(ys).hash(&mut h);
    let mut rng = stream(h.finish(), 0x4d41_5445, 0);
    let mut t = vec![0.0; n];
    let mut sum = 0.0;
    for _ in 0..draws.max(1) {
        for v in t.iter_mut() {
            *v = rng.random::<f64>();
        }
        let mut e = 0.0;
        for (mask, &v) in signed.iter().enumerate().skip(1) {
            let m = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| t[i]).fold(f64::INFINITY, f64::min);
            e += v * m;
        }
        sum += (-e).exp();
    }
    sum / draws.max(1) as f64
}
