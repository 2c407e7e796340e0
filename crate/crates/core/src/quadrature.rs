//! Global adaptive Gauss–Legendre quadrature.
//!
//! Each interval carries two estimates: one Gauss–Legendre rule over the
//! whole interval and the sum of the same rule over its two halves. Their
//! difference is the error estimate, and the interval with the largest
//! estimate is bisected until the requested tolerance is met.
//!
//! The routine is generic over the integrand's value type so that complex
//! exponents (characteristic functions) are integrated in one pass.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::ops::{Add, Mul, Sub};
use std::sync::LazyLock;

use num_complex::Complex64;

use crate::error::{Error, Result, OVERFLOW_GUARD};

const RULE_ORDER: usize = 15;

/// Values the quadrature can accumulate.
pub trait QuadValue: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> {
    fn zero() -> Self;
    fn magnitude(&self) -> f64;
}

impl QuadValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
}

impl QuadValue for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadratureConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            rel_tol: 1e-10,
            abs_tol: 1e-13,
            max_subdivisions: 4000,
        }
    }
}

struct Rule {
    nodes: [f64; RULE_ORDER],
    weights: [f64; RULE_ORDER],
}

/// Gauss–Legendre nodes on [-1, 1] by Newton iteration on P_n.
static RULE: LazyLock<Rule> = LazyLock::new(|| {
    let n = RULE_ORDER;
    let mut nodes = [0.0; RULE_ORDER];
    let mut weights = [0.0; RULE_ORDER];
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let step = p1 / dp;
            x -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    Rule { nodes, weights }
});

fn apply_rule<T: QuadValue, F: Fn(f64) -> T>(f: &F, a: f64, b: f64) -> T {
    let rule = &*RULE;
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut acc = T::zero();
    for (x, w) in rule.nodes.iter().zip(rule.weights.iter()) {
        acc = acc + f(mid + half * x) * *w;
    }
    acc * half
}

struct Segment<T> {
    a: f64,
    b: f64,
    value: T,
    error: f64,
}

impl<T: QuadValue> Segment<T> {
    fn new<F: Fn(f64) -> T>(f: &F, a: f64, b: f64) -> Self {
        let m = 0.5 * (a + b);
        let whole = apply_rule(f, a, b);
        let value = apply_rule(f, a, m) + apply_rule(f, m, b);
        let error = (whole - value).magnitude();
        Segment { a, b, value, error }
    }
}

impl<T> PartialEq for Segment<T> {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
    }
}
impl<T> Eq for Segment<T> {}
impl<T> PartialOrd for Segment<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T> Ord for Segment<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Integrates `f` over the finite interval `[a, b]`.
pub fn integrate<T, F>(f: F, a: f64, b: f64, cfg: &QuadratureConfig) -> Result<T>
where
    T: QuadValue,
    F: Fn(f64) -> T,
{
    if a == b {
        return Ok(T::zero());
    }
    let mut heap = BinaryHeap::new();
    let first = Segment::new(&f, a, b);
    let mut total = first.value;
    let mut error = first.error;
    heap.push(first);
    let mut subdivisions = 0;
    loop {
        let magnitude = total.magnitude();
        if !magnitude.is_finite() || magnitude > OVERFLOW_GUARD {
            return Err(Error::Divergent { value: magnitude });
        }
        if error <= cfg.abs_tol.max(cfg.rel_tol * magnitude) {
            // re-sum to drop the drift of the running totals
            let (exact, exact_err) = heap
                .iter()
                .fold((T::zero(), 0.0), |(v, e), s| (v + s.value, e + s.error));
            if exact_err <= cfg.abs_tol.max(cfg.rel_tol * exact.magnitude()) {
                return Ok(exact);
            }
            total = exact;
            error = exact_err;
        }
        if subdivisions >= cfg.max_subdivisions {
            return Err(Error::NonConvergence {
                value: magnitude,
                error,
                subdivisions,
            });
        }
        let worst = heap.pop().expect("heap is never empty");
        let m = 0.5 * (worst.a + worst.b);
        if m <= worst.a || m >= worst.b {
            // interval exhausted at machine resolution
            return Err(Error::NonConvergence {
                value: magnitude,
                error,
                subdivisions,
            });
        }
        let left = Segment::new(&f, worst.a, m);
        let right = Segment::new(&f, m, worst.b);
        total = total - worst.value + left.value + right.value;
        error = (error - worst.error + left.error + right.error).max(0.0);
        heap.push(left);
        heap.push(right);
        subdivisions += 1;
    }
}

/// Integrates `f` over `[a, ∞)` through the map `y = a + x / (1 - x)`.
pub fn integrate_half_line<T, F>(f: F, a: f64, cfg: &QuadratureConfig) -> Result<T>
where
    T: QuadValue,
    F: Fn(f64) -> T,
{
    integrate(
        |x: f64| {
            let one_minus = 1.0 - x;
            let y = a + x / one_minus;
            f(y) * (1.0 / (one_minus * one_minus))
        },
        0.0,
        1.0,
        cfg,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_weights_sum_to_two() {
        let s: f64 = RULE.weights.iter().sum();
        assert!((s - 2.0).abs() < 1e-14);
    }

    #[test]
    fn polynomials_are_exact() {
        let cfg = QuadratureConfig::default();
        let v: f64 = integrate(|x: f64| x.powi(7) - 3.0 * x * x, 0.0, 2.0, &cfg).unwrap();
        assert!((v - (32.0 - 8.0)).abs() < 1e-12);
    }

    #[test]
    fn endpoint_singularity() {
        let cfg = QuadratureConfig::default();
        let v: f64 = integrate(|x: f64| x.powf(-0.5), 0.0, 1.0, &cfg).unwrap();
        assert!((v - 2.0).abs() < 1e-8, "{v}");
    }

    #[test]
    fn half_line_exponential() {
        let cfg = QuadratureConfig::default();
        let v: f64 = integrate_half_line(|y: f64| (-y).exp(), 0.0, &cfg).unwrap();
        assert!((v - 1.0).abs() < 1e-11);
        let c: Complex64 =
            integrate_half_line(|y: f64| Complex64::new(0.0, y).exp() * (-y).exp(), 0.0, &cfg)
                .unwrap();
        // ∫ e^{(i-1)y} dy = 1 / (1 - i)
        let expected = Complex64::new(1.0, 0.0) / Complex64::new(1.0, -1.0);
        assert!((c - expected).norm() < 1e-11);
    }

    #[test]
    fn divergent_integral_is_reported() {
        let cfg = QuadratureConfig::default();
        let r: Result<f64> = integrate(|x: f64| 1.0 / x, 0.0, 1.0, &cfg);
        assert!(r.unwrap_err().is_divergence());
        let r: Result<f64> = integrate_half_line(|y: f64| (0.5 * y).exp(), 0.0, &cfg);
        assert!(r.unwrap_err().is_divergence());
    }
}
