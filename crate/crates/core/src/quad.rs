//! Adaptive Gauss–Kronrod quadrature on finite and semi-infinite intervals,
//! plus a polar-coordinate wrapper for integrals over the plane.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;

use crate::error::{FmeError, Result};
use crate::geometry::Point2;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            abs: 1e-12,
            rel: 1e-10,
            max_intervals: 2000,
        }
    }
}

impl Tolerance {
    pub fn new(abs: f64, rel: f64) -> Self {
        Tolerance {
            abs,
            rel,
            ..Default::default()
        }
    }

    fn satisfied(&self, value: f64, error: f64) -> bool {
        error <= self.abs.max(self.rel * value.abs())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
    pub converged: bool,
}

impl Integral {
    fn into_result(self) -> Result<Integral> {
        if self.converged {
            Ok(self)
        } else if !self.value.is_finite() {
            Err(FmeError::NonIntegrable(format!(
                "integrand produced {}",
                self.value
            )))
        } else {
            Err(FmeError::Quadrature {
                estimate: self.value,
                error: self.error,
                evaluations: self.evaluations,
            })
        }
    }
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kron += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

/// Globally adaptive integration of `f` over `[a, b]` (finite bounds).
/// Never fails; the `converged` flag reports whether `tol` was met.
pub fn integrate_raw<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: Tolerance) -> Integral {
    integrate_pieces(&f, &[a, b], tol)
}

fn integrate_pieces<F: Fn(f64) -> f64>(f: &F, breaks: &[f64], tol: Tolerance) -> Integral {
    let mut heap = BinaryHeap::new();
    let (mut value, mut error) = (0.0, 0.0);
    for w in breaks.windows(2) {
        if w[1] <= w[0] {
            continue;
        }
        let (v, e) = kronrod(f, w[0], w[1]);
        value += v;
        error += e;
        heap.push(Segment {
            a: w[0],
            b: w[1],
            value: v,
            error: e,
        });
    }
    let mut evaluations = 15 * heap.len();
    while !tol.satisfied(value, error) && heap.len() < tol.max_intervals {
        let Some(worst) = heap.pop() else { break };
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) {
            heap.push(worst);
            break;
        }
        let (v1, e1) = kronrod(f, worst.a, mid);
        let (v2, e2) = kronrod(f, mid, worst.b);
        evaluations += 30;
        value += v1 + v2 - worst.value;
        error += e1 + e2 - worst.error;
        heap.push(Segment { a: worst.a, b: mid, value: v1, error: e1 });
        heap.push(Segment { a: mid, b: worst.b, value: v2, error: e2 });
        if !value.is_finite() {
            break;
        }
    }
    // re-sum to shed accumulated cancellation in the running totals
    let (value, error) = heap
        .iter()
        .fold((0.0, 0.0), |(v, e), s| (v + s.value, e + s.error));
    Integral {
        value,
        error,
        evaluations,
        converged: value.is_finite() && tol.satisfied(value, error),
    }
}

/// Integrates over consecutive `breaks`; the last break may be `+∞`.
pub fn integrate_breaks_raw<F: Fn(f64) -> f64>(f: F, breaks: &[f64], tol: Tolerance) -> Integral {
    assert!(breaks.len() >= 2, "need at least two break points");
    let last = *breaks.last().unwrap();
    if last.is_finite() {
        return integrate_pieces(&f, breaks, tol);
    }
    let finite = &breaks[..breaks.len() - 1];
    let tail_start = *finite.last().unwrap();
    // x = tail_start + t / (1 - t)
    let mapped = |t: f64| {
        if t >= 1.0 {
            return 0.0;
        }
        let s = 1.0 - t;
        let v = f(tail_start + t / s) / (s * s);
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    let head = if finite.len() >= 2 {
        integrate_pieces(&f, finite, tol)
    } else {
        Integral {
            value: 0.0,
            error: 0.0,
            evaluations: 0,
            converged: true,
        }
    };
    let tail = integrate_pieces(&mapped, &[0.0, 0.5, 0.9, 0.99, 1.0], tol);
    let value = head.value + tail.value;
    let error = head.error + tail.error;
    Integral {
        value,
        error,
        evaluations: head.evaluations + tail.evaluations,
        converged: value.is_finite() && tol.satisfied(value, error),
    }
}

/// `∫_a^b f`, `b` may be `+∞`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: Tolerance) -> Result<Integral> {
    integrate_breaks_raw(f, &[a, b], tol).into_result()
}

pub fn integrate_breaks<F: Fn(f64) -> f64>(f: F, breaks: &[f64], tol: Tolerance) -> Result<Integral> {
    integrate_breaks_raw(f, breaks, tol).into_result()
}

/// `∫_{R²} f(x) dx` in polar coordinates around `center`. The radial range is
/// split at `radial_breaks` (first entry normally 0, last may be `+∞`).
pub fn integrate_plane<F: Fn(Point2) -> f64>(
    f: F,
    center: Point2,
    radial_breaks: &[f64],
    tol: Tolerance,
) -> Result<Integral> {
    let inner_tol = Tolerance {
        abs: tol.abs * 0.1,
        rel: tol.rel * 0.1,
        max_intervals: 200,
    };
    let angular_breaks = [0.0, 0.5 * PI, PI, 1.5 * PI, 2.0 * PI];
    let evaluations = std::cell::Cell::new(0usize);
    let radial = |r: f64| {
        if r == 0.0 {
            return 0.0;
        }
        let ring = integrate_pieces(
            &|theta: f64| f(center + Point2::polar(r, theta)),
            &angular_breaks,
            inner_tol,
        );
        evaluations.set(evaluations.get() + ring.evaluations);
        r * ring.value
    };
    let mut out = integrate_breaks_raw(radial, radial_breaks, tol);
    out.evaluations += evaluations.get();
    out.into_result()
}
