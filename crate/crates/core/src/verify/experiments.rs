use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, OVERFLOW_GUARD};
use crate::field::{integrability_check, joint_cf, scale_spec, FieldSampler, FieldSpec, KernelFamily, SignClass};
use crate::measure::ScalarField;
use crate::streams::derive_seed;

use super::ecf::{empirical_cf, empirical_cf_with_se, mc_tolerance};
use super::monotone::make_monotone_function;
use super::report::{ExperimentReport, Statistic, Verdict};

pub const ANALYTIC_INDEPENDENCE_TOL: f64 = 1e-9;
pub const ANALYTIC_ID_TOL: f64 = 1e-12;
const PILOT_ROWS: usize = 1000;
const COV_SLACK: f64 = 1e-12;

/// Monte Carlo settings shared by the experiments. `samples = 0` skips
/// the empirical part of experiments that also have an analytic part.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McOptions {
    pub samples: usize,
    pub level: u32,
    pub truncation: f64,
    pub seed: u64,
}

impl Default for McOptions {
    fn default() -> Self {
        McOptions {
            samples: 10_000,
            level: 64,
            truncation: 1e-3,
            seed: 0,
        }
    }
}

fn pick(ts: &[Vec<f64>], idx: &[usize]) -> Result<Vec<Vec<f64>>> {
    idx.iter()
        .map(|&i| {
            ts.get(i)
                .cloned()
                .ok_or_else(|| Error::InvalidArgument(format!("index {i} out of range for {} points", ts.len())))
        })
        .collect()
}

fn check_disjoint(k: &[usize], l: &[usize]) -> Result<()> {
    if k.is_empty() || l.is_empty() {
        return Err(Error::InvalidArgument("index sets must be nonempty".into()));
    }
    if k.iter().any(|i| l.contains(i)) {
        return Err(Error::InvalidArgument("index sets must be disjoint".into()));
    }
    Ok(())
}

fn check_thetas(grid: &[Vec<f64>], dim: usize) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("theta grid must be nonempty".into()));
    }
    if let Some(bad) = grid.iter().find(|th| th.len() != dim) {
        return Err(Error::InvalidArgument(format!("theta {bad:?} must have length {dim}")));
    }
    Ok(())
}

fn masked(theta: &[f64], keep: std::ops::Range<usize>) -> Vec<f64> {
    theta
        .iter()
        .enumerate()
        .map(|(i, v)| if keep.contains(&i) { *v } else { 0.0 })
        .collect()
}

/// Factorization `φ_{K∪L}(θ) = φ_K(θ_K) φ_L(θ_L)` of the joint characteristic
/// function. Each `θ` in the grid lists the `K` coefficients then the `L` ones.
pub fn test_independence(
    spec: &FieldSpec,
    ts: &[Vec<f64>],
    k: &[usize],
    l: &[usize],
    theta_grid: &[Vec<f64>],
    opts: &McOptions,
) -> Result<ExperimentReport> {
    check_disjoint(k, l)?;
    let (tk, tl) = (pick(ts, k)?, pick(ts, l)?);
    let points: Vec<Vec<f64>> = tk.iter().chain(&tl).cloned().collect();
    let split = tk.len();
    let n = points.len();
    check_thetas(theta_grid, n)?;

    let mut report = ExperimentReport::new("independence", opts.seed)
        .param("k", k)
        .param("l", l)
        .param("theta_grid", theta_grid)
        .param("samples", opts.samples);

    let overlap = spec
        .partition()
        .cells()
        .iter()
        .filter(|c| c.base_mass > 0.0)
        .filter(|c| {
            let x = c.midpoint();
            let hit = |pts: &[Vec<f64>]| pts.iter().any(|t| spec.kernels().eval(t, &x) != 0.0);
            hit(&tk) && hit(&tl)
        })
        .count();
    report.push(Statistic::at_most("support_overlap_cells", overlap as f64, 0.0));

    let mut analytic = 0.0f64;
    for th in theta_grid {
        let joint = joint_cf(spec, &points, th)?;
        let pk = joint_cf(spec, &points, &masked(th, 0..split))?;
        let pl = joint_cf(spec, &points, &masked(th, split..n))?;
        analytic = analytic.max((joint - pk * pl).norm());
    }
    report.push(Statistic::at_most("analytic_gap", analytic, ANALYTIC_INDEPENDENCE_TOL));

    if opts.samples > 0 {
        let draws = FieldSampler::new(spec, &points, opts.level, opts.truncation)?.sample_batch(opts.samples, opts.seed);
        let mut gap = 0.0f64;
        for th in theta_grid {
            let joint = empirical_cf(&draws, th)?;
            let pk = empirical_cf(&draws, &masked(th, 0..split))?;
            let pl = empirical_cf(&draws, &masked(th, split..n))?;
            gap = gap.max((joint - pk * pl).norm());
        }
        let tol = mc_tolerance(opts.samples);
        report.push(Statistic::new("empirical_gap", gap, 0.0, tol, Verdict::from_bool(gap <= tol), opts.samples));
    }
    Ok(report)
}

fn function_seed(master: u64, pair: usize, which: u64) -> u64 {
    derive_seed(derive_seed(master, &[u64::MAX]), &[pair as u64, which])
}

/// Sample covariance of paired observations and its standard error.
fn covariance(a: &[f64], b: &[f64]) -> (f64, f64) {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let z: Vec<f64> = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).collect();
    let mz = z.iter().sum::<f64>() / n;
    let var = z.iter().map(|v| (v - mz) * (v - mz)).sum::<f64>() / n;
    let cov = if n > 1.0 { mz * n / (n - 1.0) } else { 0.0 };
    (cov, (var / n).sqrt())
}

fn covariance_report(
    name: &str,
    spec: &FieldSpec,
    ts: &[Vec<f64>],
    i_idx: &[usize],
    j_idx: &[usize],
    n_pairs: usize,
    opts: &McOptions,
    positive: bool,
) -> Result<ExperimentReport> {
    if opts.samples < 2 {
        return Err(Error::InvalidArgument("covariance tests need at least 2 samples".into()));
    }
    let ti = pick(ts, i_idx)?;
    let tj = pick(ts, j_idx)?;
    let points: Vec<Vec<f64>> = ti.iter().chain(&tj).cloned().collect();
    let draws = FieldSampler::new(spec, &points, opts.level, opts.truncation)?.sample_batch(opts.samples, opts.seed);
    let (xi, xj): (Vec<Vec<f64>>, Vec<Vec<f64>>) =
        draws.into_iter().map(|d| (d[..ti.len()].to_vec(), d[ti.len()..].to_vec())).unzip();
    let pilot_i = &xi[..xi.len().min(PILOT_ROWS)];
    let pilot_j = &xj[..xj.len().min(PILOT_ROWS)];

    let mut report = ExperimentReport::new(name, opts.seed)
        .param("i", i_idx)
        .param("n_pairs", n_pairs)
        .param("samples", opts.samples)
        .param("sign_class", spec.kernels().sign_class());
    if !positive {
        report = report.param("j", j_idx);
    }
    let stats: Vec<Statistic> = (0..n_pairs)
        .into_par_iter()
        .map(|p| {
            let f = make_monotone_function(ti.len(), pilot_i, function_seed(opts.seed, p, 0))?;
            let g = make_monotone_function(tj.len(), pilot_j, function_seed(opts.seed, p, 1))?;
            let fa: Vec<f64> = xi.iter().map(|y| f.eval(y)).collect();
            let gb: Vec<f64> = xj.iter().map(|y| g.eval(y)).collect();
            let (cov, se) = covariance(&fa, &gb);
            let (threshold, ok) = if positive {
                (-3.0 * se, cov >= -3.0 * se - COV_SLACK)
            } else {
                (3.0 * se, cov <= 3.0 * se + COV_SLACK)
            };
            Ok(Statistic::new(format!("cov[{p}]"), cov, se, threshold, Verdict::from_bool(ok), opts.samples))
        })
        .collect::<Result<_>>()?;
    report.statistics = stats;
    Ok(report)
}

/// Association on `X_I`: every `Cov(f(X_I), g(X_I)) ≥ -3 SE` for random
/// monotone pairs `(f, g)`.
pub fn test_association(
    spec: &FieldSpec,
    ts: &[Vec<f64>],
    idx: &[usize],
    n_pairs: usize,
    opts: &McOptions,
) -> Result<ExperimentReport> {
    if idx.is_empty() {
        return Err(Error::InvalidArgument("index set must be nonempty".into()));
    }
    covariance_report("association", spec, ts, idx, idx, n_pairs, opts, true)
}

/// Negative association between disjoint `X_I` and `X_J`: every
/// `Cov(f(X_I), g(X_J)) ≤ 3 SE`.
pub fn test_negative_association(
    spec: &FieldSpec,
    ts: &[Vec<f64>],
    i_idx: &[usize],
    j_idx: &[usize],
    n_pairs: usize,
    opts: &McOptions,
) -> Result<ExperimentReport> {
    check_disjoint(i_idx, j_idx)?;
    covariance_report("negative_association", spec, ts, i_idx, j_idx, n_pairs, opts, false)
}

/// Infinite divisibility: `joint_cf(spec / n)^n = joint_cf(spec)`, and the
/// sum of `n` independent draws of the scaled field has the CF of the field.
pub fn test_id(
    spec: &FieldSpec,
    ts: &[Vec<f64>],
    n_fold: usize,
    theta_grid: &[Vec<f64>],
    opts: &McOptions,
) -> Result<ExperimentReport> {
    if n_fold < 2 {
        return Err(Error::InvalidArgument(format!("n_fold must be >= 2, got {n_fold}")));
    }
    check_thetas(theta_grid, ts.len())?;
    let part = scale_spec(spec, 1.0 / n_fold as f64)?;
    let mut report = ExperimentReport::new("id", opts.seed)
        .param("n_fold", n_fold)
        .param("theta_grid", theta_grid)
        .param("samples", opts.samples);

    let mut analytic = 0.0f64;
    for th in theta_grid {
        let whole = joint_cf(spec, ts, th)?;
        let piece = joint_cf(&part, ts, th)?;
        let power = (0..n_fold).fold(Complex64::new(1.0, 0.0), |acc, _| acc * piece);
        analytic = analytic.max((power - whole).norm());
    }
    report.push(Statistic::at_most("analytic_gap", analytic, ANALYTIC_ID_TOL));

    if opts.samples > 0 {
        let sampler = FieldSampler::new(&part, ts, opts.level, opts.truncation)?;
        let draws: Vec<Vec<f64>> = (0..opts.samples as u64)
            .into_par_iter()
            .map(|r| {
                (0..n_fold as u64).fold(vec![0.0; ts.len()], |mut acc, k| {
                    for (a, v) in acc.iter_mut().zip(sampler.sample(derive_seed(opts.seed, &[r, k]))) {
                        *a += v;
                    }
                    acc
                })
            })
            .collect();
        let mut gap = 0.0f64;
        let mut se_max = 0.0f64;
        for th in theta_grid {
            let (emp, se) = empirical_cf_with_se(&draws, th)?;
            gap = gap.max((emp - joint_cf(spec, ts, th)?).norm());
            se_max = se_max.max(se);
        }
        let tol = mc_tolerance(opts.samples);
        report.push(Statistic::new("empirical_gap", gap, se_max, tol, Verdict::from_bool(gap <= tol), opts.samples));
    }
    Ok(report)
}

/// Optional inputs of [`test_stoch_continuity`].
#[derive(Clone, Default)]
pub struct ContinuityOptions {
    /// Approach direction; `s_k = t + r_k · direction`. Defaults to `e_1`.
    pub direction: Option<Vec<f64>>,
    /// Dominating function `g(x) ≥ |f_s(x) - f_t(x)|`.
    pub envelope: Option<ScalarField>,
}

impl std::fmt::Debug for ContinuityOptions {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ContinuityOptions")
            .field("direction", &self.direction)
            .field("envelope", &self.envelope.is_some())
            .finish()
    }
}

/// Estimates `p_k = P(|X(s_k) - X(t)| > ε_x)` along `s_k = t + r_k d` from
/// coupled draws. Passes when `p_k` is nonincreasing within two standard
/// errors and the last `p_k` is at most two standard errors.
pub fn test_stoch_continuity(
    spec: &FieldSpec,
    t: &[f64],
    radii: &[f64],
    eps_x: f64,
    opts: &McOptions,
    extra: &ContinuityOptions,
) -> Result<ExperimentReport> {
    if radii.is_empty() || radii.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
        return Err(Error::InvalidArgument("radii must be positive and finite".into()));
    }
    if radii.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidArgument("radii must be strictly decreasing".into()));
    }
    if !(eps_x > 0.0) {
        return Err(Error::InvalidArgument(format!("eps_x must be > 0, got {eps_x}")));
    }
    if opts.samples == 0 {
        return Err(Error::InvalidArgument("continuity test needs at least 1 sample".into()));
    }
    let direction = extra.direction.clone().unwrap_or_else(|| {
        let mut e = vec![0.0; t.len()];
        e[0] = 1.0;
        e
    });
    if direction.len() != t.len() {
        return Err(Error::InvalidArgument("direction and t must have equal length".into()));
    }
    let points: Vec<Vec<f64>> = std::iter::once(t.to_vec())
        .chain(radii.iter().map(|r| t.iter().zip(&direction).map(|(ti, d)| ti + r * d).collect()))
        .collect();

    let mut report = ExperimentReport::new("continuity", opts.seed)
        .param("t", t)
        .param("radii", radii)
        .param("eps_x", eps_x)
        .param("direction", &direction)
        .param("samples", opts.samples);

    let kernels = spec.kernels();
    let cells = spec.partition().cells();
    for (k, s) in points[1..].iter().enumerate() {
        let gaps = cells.iter().map(|c| {
            let x = c.midpoint();
            ((kernels.eval(s, &x) - kernels.eval(t, &x)).abs(), x)
        });
        match &extra.envelope {
            Some(g) => {
                let excess = gaps.map(|(d, x)| d - g(&x)).fold(f64::NEG_INFINITY, f64::max);
                report.push(Statistic::at_most(format!("envelope_excess[{k}]"), excess, 0.0));
            }
            None => {
                let sup = gaps.map(|(d, _)| d).fold(0.0, f64::max);
                report.push(Statistic::new(format!("kernel_gap[{k}]"), sup, 0.0, f64::INFINITY, Verdict::Pass, 0));
            }
        }
    }
    if let Some(g) = &extra.envelope {
        let g = g.clone();
        let env = KernelFamily::from_fn(move |_, x| g(x), SignClass::Nonnegative);
        let env_spec = FieldSpec::new(env, spec.chars().clone(), spec.partition().clone())?;
        let env_spec = scale_spec(&env_spec, spec.gamma())?;
        let ic = integrability_check(&env_spec, t);
        let total = ic.drift.value + ic.gaussian.value + ic.jumps.value;
        report.push(Statistic::new(
            "envelope_integrability",
            total,
            0.0,
            OVERFLOW_GUARD,
            Verdict::from_bool(ic.pass),
            0,
        ));
    }

    let draws = FieldSampler::new(spec, &points, opts.level, opts.truncation)?.sample_batch(opts.samples, opts.seed);
    let n = opts.samples as f64;
    let mut prev: Option<(f64, f64)> = None;
    let mut last = (0.0, 0.0);
    for k in 0..radii.len() {
        let hits = draws.iter().filter(|d| (d[k + 1] - d[0]).abs() > eps_x).count();
        let p = hits as f64 / n;
        let se = (p * (1.0 - p) / n).sqrt();
        let threshold = prev.map_or(1.0, |(pp, ps)| pp + 2.0 * (se * se + ps * ps).sqrt());
        report.push(Statistic::new(format!("p[{k}]"), p, se, threshold, Verdict::from_bool(p <= threshold), opts.samples));
        prev = Some((p, se));
        last = (p, se);
    }
    report.push(Statistic::new(
        "p_final",
        last.0,
        last.1,
        2.0 * last.1,
        Verdict::from_bool(last.0 <= 2.0 * last.1),
        opts.samples,
    ));
    Ok(report)
}
