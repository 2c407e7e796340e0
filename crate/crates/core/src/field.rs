//! Random fields `X(t) = ∫_E f_t(x) Λ(dx)` on a discretised domain.
//!
//! Every quantity lives on the partition of the [`FieldSpec`]: kernels are
//! evaluated at cell midpoints, integrals use the midpoint rule, and all
//! coordinates of a sampled vector share one draw of the measure.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, OVERFLOW_GUARD};
use crate::levy::{levy_quadrature, tau, LevyMeasure, LevyTriplet};
use crate::measure::{DomainPartition, LocalCharacteristics, MeasureSampler};
use crate::streams::{derive_seed, stream_rng};

pub type KernelFn = Arc<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>;
pub type SupportFn = Arc<dyn Fn(&[f64]) -> (Vec<f64>, Vec<f64>) + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignClass {
    Nonnegative,
    Nonpositive,
    Mixed,
}

/// The kernels `f_t(x)`, evaluated as `eval(t, x)`.
#[derive(Clone)]
pub struct KernelFamily {
    eval: KernelFn,
    sign_class: SignClass,
    support_hint: Option<SupportFn>,
}

impl fmt::Debug for KernelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("KernelFamily")
            .field("sign_class", &self.sign_class)
            .field("support_hint", &self.support_hint.is_some())
            .finish_non_exhaustive()
    }
}

impl KernelFamily {
    pub fn new(eval: KernelFn, sign_class: SignClass) -> Self {
        KernelFamily {
            eval,
            sign_class,
            support_hint: None,
        }
    }

    pub fn from_fn<F>(f: F, sign_class: SignClass) -> Self
    where
        F: Fn(&[f64], &[f64]) -> f64 + Send + Sync + 'static,
    {
        Self::new(Arc::new(f), sign_class)
    }

    pub fn with_support_hint(mut self, hint: SupportFn) -> Self {
        self.support_hint = Some(hint);
        self
    }

    /// `f_t(x) = value` everywhere.
    pub fn constant(value: f64) -> Self {
        let class = if value >= 0.0 {
            SignClass::Nonnegative
        } else {
            SignClass::Nonpositive
        };
        Self::from_fn(move |_, _| value, class)
    }

    /// `f_t(x) = φ(x - t)`; requires `t` and `x` of equal dimension.
    pub fn translated<P>(profile: P, sign_class: SignClass) -> Self
    where
        P: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        Self::from_fn(
            move |t, x| {
                let shifted: Vec<f64> = x.iter().zip(t).map(|(xi, ti)| xi - ti).collect();
                profile(&shifted)
            },
            sign_class,
        )
    }

    /// `f_t(x) = 1{x - t ∈ [lower, upper)}`.
    pub fn translated_indicator(lower: Vec<f64>, upper: Vec<f64>) -> Self {
        let (lo, hi) = (lower.clone(), upper.clone());
        Self::translated(move |y| in_box(y, &lower, &upper) as u8 as f64, SignClass::Nonnegative)
            .with_support_hint(Arc::new(move |t| {
                (
                    lo.iter().zip(t).map(|(l, ti)| l + ti).collect(),
                    hi.iter().zip(t).map(|(h, ti)| h + ti).collect(),
                )
            }))
    }

    pub fn eval(&self, t: &[f64], x: &[f64]) -> f64 {
        (self.eval)(t, x)
    }

    pub fn sign_class(&self) -> SignClass {
        self.sign_class
    }

    pub fn support_hint(&self, t: &[f64]) -> Option<(Vec<f64>, Vec<f64>)> {
        self.support_hint.as_ref().map(|h| h(t))
    }

    /// Spot-checks the declared sign class at every cell midpoint and at
    /// `probes` uniform points of the partition's bounding box, for each
    /// `t`, and checks that declared support hints fit inside the box.
    pub fn check(&self, ts: &[Vec<f64>], partition: &DomainPartition, probes: usize, seed: u64) -> Result<()> {
        let (lo, hi) = partition.bounding_box();
        let mut rng = stream_rng(derive_seed(seed, &[0x6b65726e]));
        for t in ts {
            if let Some((slo, shi)) = self.support_hint(t) {
                let fits = slo.iter().zip(&lo).all(|(s, b)| *s >= *b - 1e-12)
                    && shi.iter().zip(&hi).all(|(s, b)| *s <= *b + 1e-12);
                if !fits {
                    return Err(Error::InvalidArgument(format!(
                        "support of f_t at t = {t:?} extends beyond the domain box"
                    )));
                }
            }
            let midpoints = partition.cells().iter().map(|c| c.midpoint());
            let random = (0..probes).map(|_| {
                lo.iter()
                    .zip(&hi)
                    .map(|(l, h)| l + (h - l) * rng.random::<f64>())
                    .collect::<Vec<f64>>()
            });
            for x in midpoints.chain(random.collect::<Vec<_>>()) {
                let v = self.eval(t, &x);
                let bad = match self.sign_class {
                    SignClass::Nonnegative => v < 0.0,
                    SignClass::Nonpositive => v > 0.0,
                    SignClass::Mixed => false,
                } || !v.is_finite();
                if bad {
                    return Err(Error::InvalidArgument(format!(
                        "kernel value {v} at t = {t:?}, x = {x:?} violates sign class {:?}",
                        self.sign_class
                    )));
                }
            }
        }
        Ok(())
    }
}

fn in_box(y: &[f64], lower: &[f64], upper: &[f64]) -> bool {
    y.iter()
        .zip(lower.iter().zip(upper))
        .all(|(v, (l, u))| *v >= *l && *v < *u)
}

/// A complete description of one random field on a partition.
#[derive(Clone)]
pub struct FieldSpec {
    kernels: KernelFamily,
    chars: LocalCharacteristics,
    partition: DomainPartition,
    gamma: f64,
    /// unit-mass triplets at the cell midpoints
    local: Arc<Vec<LevyTriplet>>,
}

impl fmt::Debug for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FieldSpec")
            .field("kernels", &self.kernels)
            .field("cells", &self.partition.len())
            .field("gamma", &self.gamma)
            .finish_non_exhaustive()
    }
}

impl FieldSpec {
    pub fn new(kernels: KernelFamily, chars: LocalCharacteristics, partition: DomainPartition) -> Result<Self> {
        let local = partition
            .cells()
            .iter()
            .map(|c| chars.at(&c.midpoint()))
            .collect::<Result<Vec<_>>>()?;
        Ok(FieldSpec {
            kernels,
            chars,
            partition,
            gamma: 1.0,
            local: Arc::new(local),
        })
    }

    pub fn kernels(&self) -> &KernelFamily {
        &self.kernels
    }

    pub fn chars(&self) -> &LocalCharacteristics {
        &self.chars
    }

    pub fn partition(&self) -> &DomainPartition {
        &self.partition
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Unit-mass triplet of cell `j`.
    pub fn local_triplet(&self, j: usize) -> &LevyTriplet {
        &self.local[j]
    }

    /// `f_t(x_mid)` for every cell.
    pub fn kernel_values(&self, t: &[f64]) -> Vec<f64> {
        self.partition
            .cells()
            .iter()
            .map(|c| self.kernels.eval(t, &c.midpoint()))
            .collect()
    }

    /// Cells where `|f_t(x_mid)| > 0`.
    pub fn support_cells(&self, t: &[f64]) -> Vec<bool> {
        self.kernel_values(t).iter().map(|v| v.abs() > 0.0).collect()
    }
}

/// Field with the scale `γ` multiplied into its control measure.
pub fn scale_spec(spec: &FieldSpec, gamma: f64) -> Result<FieldSpec> {
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(Error::InvalidArgument(format!("scale must be > 0, got {gamma}")));
    }
    let mut out = spec.clone();
    out.gamma *= gamma;
    Ok(out)
}

/// `Σ x_j 1_{B_j}` over distinct cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimpleFunction {
    pieces: Vec<(f64, usize)>,
}

impl SimpleFunction {
    pub fn new(pieces: Vec<(f64, usize)>) -> Result<Self> {
        let mut ids: Vec<usize> = pieces.iter().map(|p| p.1).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidArgument("simple function cells must be distinct".into()));
        }
        Ok(SimpleFunction { pieces })
    }

    pub fn pieces(&self) -> &[(f64, usize)] {
        &self.pieces
    }
}

/// Level-`n` simple approximation of `f_t`: `f_t(x_mid)` on cells where
/// `|f_t(x_mid)| ≤ n`, zero elsewhere. Nonnegative (nonpositive) families
/// additionally have negative (positive) coefficients zeroed.
pub fn simple_approx(spec: &FieldSpec, t: &[f64], level: u32) -> Result<SimpleFunction> {
    if level == 0 {
        return Err(Error::InvalidArgument("refinement level must be >= 1".into()));
    }
    let bound = level as f64;
    let class = spec.kernels.sign_class();
    let pieces = spec
        .kernel_values(t)
        .into_iter()
        .enumerate()
        .map(|(j, v)| {
            let c = if v.is_finite() && v.abs() <= bound { v } else { 0.0 };
            let c = match class {
                SignClass::Nonnegative => c.max(0.0),
                SignClass::Nonpositive => c.min(0.0),
                SignClass::Mixed => c,
            };
            (c, j)
        })
        .collect();
    SimpleFunction::new(pieces)
}

/// `Σ x_j Λ(B_j)`.
pub fn integrate_simple(sf: &SimpleFunction, measure_sample: &[f64]) -> Result<f64> {
    sf.pieces.iter().try_fold(0.0, |acc, &(x, id)| {
        let m = measure_sample.get(id).ok_or(Error::UnknownCell(id))?;
        Ok(acc + x * m)
    })
}

/// Joint sampler for `(X^{(n)}(t_1), ..., X^{(n)}(t_r))`.
#[derive(Debug, Clone)]
pub struct FieldSampler {
    approximations: Vec<SimpleFunction>,
    measure: MeasureSampler,
}

impl FieldSampler {
    pub fn new(spec: &FieldSpec, ts: &[Vec<f64>], level: u32, truncation: f64) -> Result<Self> {
        if ts.is_empty() {
            return Err(Error::InvalidArgument("need at least one index point".into()));
        }
        let approximations = ts
            .iter()
            .map(|t| simple_approx(spec, t, level))
            .collect::<Result<Vec<_>>>()?;
        let measure = MeasureSampler::scaled(&spec.partition, &spec.chars, truncation, spec.gamma)?;
        Ok(FieldSampler {
            approximations,
            measure,
        })
    }

    pub fn dim(&self) -> usize {
        self.approximations.len()
    }

    pub fn sample_measure(&self, seed: u64) -> Vec<f64> {
        self.measure.sample(seed)
    }

    /// Evaluates every coordinate on one shared measure sample.
    pub fn evaluate(&self, measure_sample: &[f64]) -> Vec<f64> {
        self.approximations
            .iter()
            .map(|sf| integrate_simple(sf, measure_sample).expect("cells index the partition"))
            .collect()
    }

    pub fn sample(&self, seed: u64) -> Vec<f64> {
        self.evaluate(&self.measure.sample(seed))
    }

    /// `n` replicates; replicate `r` uses `derive_seed(seed, [r])`.
    pub fn sample_batch(&self, n: usize, seed: u64) -> Vec<Vec<f64>> {
        (0..n as u64)
            .into_par_iter()
            .map(|r| self.sample(derive_seed(seed, &[r])))
            .collect()
    }
}

pub fn sample_field(spec: &FieldSpec, ts: &[Vec<f64>], level: u32, truncation: f64, seed: u64) -> Result<Vec<f64>> {
    Ok(FieldSampler::new(spec, ts, level, truncation)?.sample(seed))
}

/// `K(u, x) = iu a(x) - u²σ²(x)/2 + ∫ (e^{ius} - 1 - iuτ(s)) ρ(x, ds)`.
pub fn cumulant_kernel(u: f64, x: &[f64], chars: &LocalCharacteristics) -> Result<Complex64> {
    chars.at(x)?.exponent(u)
}

/// Log of the joint characteristic function, `γ Σ_cells K(Σ_j θ_j f_{t_j}(x_mid), x_mid) η(cell)`.
pub fn joint_cf_exponent(spec: &FieldSpec, ts: &[Vec<f64>], theta: &[f64]) -> Result<Complex64> {
    if ts.len() != theta.len() {
        return Err(Error::InvalidArgument(format!(
            "{} index points but {} coefficients",
            ts.len(),
            theta.len()
        )));
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for (j, cell) in spec.partition.cells().iter().enumerate() {
        if cell.base_mass == 0.0 {
            continue;
        }
        let x = cell.midpoint();
        let arg: f64 = ts
            .iter()
            .zip(theta)
            .map(|(t, th)| if *th == 0.0 { 0.0 } else { th * spec.kernels.eval(t, &x) })
            .sum();
        if arg == 0.0 {
            continue;
        }
        acc += spec.local[j].exponent(arg)? * cell.base_mass;
    }
    Ok(acc * spec.gamma)
}

pub fn joint_cf(spec: &FieldSpec, ts: &[Vec<f64>], theta: &[f64]) -> Result<Complex64> {
    Ok(joint_cf_exponent(spec, ts, theta)?.exp())
}

/// Characteristic function of `X(t)` at `u`.
pub fn cf_integral(spec: &FieldSpec, t: &[f64], u: f64) -> Result<Complex64> {
    joint_cf(spec, &[t.to_vec()], &[u])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionValue {
    pub value: f64,
    pub finite: bool,
}

impl ConditionValue {
    fn from_sum(r: Result<f64>) -> Self {
        match r {
            Ok(v) if v.is_finite() && v <= OVERFLOW_GUARD => ConditionValue { value: v, finite: true },
            _ => ConditionValue {
                value: f64::INFINITY,
                finite: false,
            },
        }
    }
}

/// Sufficient integrability conditions for one kernel, plus the bounds
/// `∫|U(f(x), x)| dλ` and `∫|V₀(f(x), x)| dλ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegrabilityReport {
    /// `∫ |f a| dλ`
    pub drift: ConditionValue,
    /// `∫ f² σ² dλ`
    pub gaussian: ConditionValue,
    /// `∫∫ |f s| ρ(x, ds) λ(dx)`
    pub jumps: ConditionValue,
    /// the `|s| ≤ 1` part of `jumps`
    pub jumps_small: ConditionValue,
    /// the `|s| > 1` part of `jumps`
    pub jumps_large: ConditionValue,
    pub u_bound: ConditionValue,
    pub v0_bound: ConditionValue,
    /// all of drift, gaussian and jumps finite
    pub pass: bool,
}

fn abs_moment(nu: &LevyMeasure, small: bool) -> Result<f64> {
    levy_quadrature(nu, |s: f64| {
        if (s.abs() <= 1.0) == small {
            s.abs()
        } else {
            0.0
        }
    })
}

fn sum_cells<F: Fn(f64, &LevyTriplet) -> Result<f64>>(spec: &FieldSpec, values: &[f64], term: F) -> Result<f64> {
    let mut acc = 0.0;
    for (j, cell) in spec.partition.cells().iter().enumerate() {
        let f = values[j];
        if cell.base_mass == 0.0 || f == 0.0 {
            continue;
        }
        acc += term(f, &spec.local[j])? * cell.base_mass * spec.gamma;
        if !acc.is_finite() || acc > OVERFLOW_GUARD {
            return Err(Error::Divergent { value: acc });
        }
    }
    Ok(acc)
}

pub fn integrability_check(spec: &FieldSpec, t: &[f64]) -> IntegrabilityReport {
    let f = spec.kernel_values(t);
    let drift = ConditionValue::from_sum(sum_cells(spec, &f, |v, l| Ok((v * l.shift).abs())));
    let gaussian = ConditionValue::from_sum(sum_cells(spec, &f, |v, l| Ok(v * v * l.gaussian_variance)));
    let jumps_small = ConditionValue::from_sum(sum_cells(spec, &f, |v, l| Ok(v.abs() * abs_moment(&l.jumps, true)?)));
    let jumps_large = ConditionValue::from_sum(sum_cells(spec, &f, |v, l| Ok(v.abs() * abs_moment(&l.jumps, false)?)));
    let jumps = if jumps_small.finite && jumps_large.finite {
        ConditionValue::from_sum(Ok(jumps_small.value + jumps_large.value))
    } else {
        ConditionValue::from_sum(Err(Error::Divergent { value: f64::INFINITY }))
    };
    let u_bound = ConditionValue::from_sum(sum_cells(spec, &f, |v, l| {
        let integral: f64 = levy_quadrature(&l.jumps, |s: f64| tau(s * v) - v * tau(s))?;
        Ok((v * l.shift + integral).abs())
    }));
    let v0_bound = ConditionValue::from_sum(sum_cells(spec, &f, |v, l| {
        levy_quadrature(&l.jumps, |s: f64| ((s * v) * (s * v)).min(1.0))
    }));
    IntegrabilityReport {
        pass: drift.finite && gaussian.finite && jumps.finite,
        drift,
        gaussian,
        jumps,
        jumps_small,
        jumps_large,
        u_bound,
        v0_bound,
    }
}
