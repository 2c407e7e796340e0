use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::Result;
use crate::field::{cf_integral, integrability_check, joint_cf, FieldSampler, SignClass};
use crate::stable::{association_classify, null_check, spectral_measure, stable_cf};
use crate::verify::{
    empirical_cf_with_se, mc_tolerance, test_association, test_id, test_independence, test_negative_association,
    test_stoch_continuity, ContinuityOptions, ExperimentReport, Statistic, Verdict,
};

use super::config::{ExperimentConfig, ExperimentKind, Model};

const SPHERE_TOL: f64 = 1e-12;
const CROSS_CF_TOL: f64 = 0.01;

/// Validates `cfg` and runs its experiments (those named `filter` only,
/// when given). Reports follow config order; an experiment that errors
/// yields a failing report instead of aborting the batch.
pub fn run_experiment(cfg: &ExperimentConfig, filter: Option<&str>, timing: bool) -> Result<Vec<ExperimentReport>> {
    let model = cfg.validate()?;
    let selected: Vec<&ExperimentKind> = cfg
        .experiments
        .iter()
        .filter(|e| filter.is_none_or(|f| e.name() == f))
        .collect();
    Ok(selected
        .par_iter()
        .map(|e| {
            let start = Instant::now();
            let mut report = run_one(cfg, &model, e).unwrap_or_else(|err| {
                let mut r = ExperimentReport::new(e.name(), cfg.seed).param("error", err.to_string());
                r.push(Statistic::new("error", f64::NAN, 0.0, f64::NAN, Verdict::Fail, 0));
                r
            });
            if timing {
                report.runtime_ms = Some(start.elapsed().as_millis() as u64);
            }
            report
        })
        .collect())
}

fn pair(z: Complex64) -> [f64; 2] {
    [z.re, z.im]
}

fn informational(name: &str, estimate: f64) -> Statistic {
    Statistic::new(name, estimate, 0.0, f64::INFINITY, Verdict::Pass, 0)
}

fn run_one(cfg: &ExperimentConfig, model: &Model, e: &ExperimentKind) -> Result<ExperimentReport> {
    let opts = cfg.mc_options();
    let spec = &model.spec;
    let ts = &model.ts;
    match e {
        ExperimentKind::CfCheck { index, theta } => {
            let t = ts[*index].clone();
            let draws = FieldSampler::new(spec, std::slice::from_ref(&t), opts.level, opts.truncation)?.sample_batch(opts.samples, opts.seed);
            let tol = mc_tolerance(opts.samples);
            let mut analytic = Vec::new();
            let mut empirical = Vec::new();
            let mut stats = Vec::new();
            for (i, u) in theta.iter().enumerate() {
                let a = cf_integral(spec, &t, *u)?;
                let (emp, se) = empirical_cf_with_se(&draws, &[*u])?;
                let gap = (emp - a).norm();
                stats.push(Statistic::new(format!("cf_gap[{i}]"), gap, se, tol, Verdict::from_bool(gap <= tol), opts.samples));
                analytic.push(pair(a));
                empirical.push(pair(emp));
            }
            let mut report = ExperimentReport::new("cf_check", opts.seed)
                .param("t", &t)
                .param("theta", theta)
                .param("analytic_cf", analytic)
                .param("empirical_cf", empirical)
                .param("integrability", integrability_check(spec, &t))
                .param("samples", opts.samples);
            report.statistics = stats;
            Ok(report)
        }
        ExperimentKind::Independence { k, l, theta_grid } => test_independence(spec, ts, k, l, theta_grid, &opts),
        ExperimentKind::Association {
            indices,
            n_pairs,
            against,
        } => match against {
            Some(j) => test_negative_association(spec, ts, indices, j, *n_pairs, &opts),
            None => test_association(spec, ts, indices, *n_pairs, &opts),
        },
        ExperimentKind::Id {
            n_fold,
            theta_grid,
            indices,
        } => {
            let pts: Vec<Vec<f64>> = match indices {
                Some(idx) => idx.iter().map(|i| ts[*i].clone()).collect(),
                None => ts.clone(),
            };
            test_id(spec, &pts, *n_fold, theta_grid, &opts)
        }
        ExperimentKind::Continuity {
            index,
            radii,
            eps_x,
            direction,
            envelope,
        } => {
            let extra = ContinuityOptions {
                direction: direction.clone(),
                envelope: envelope.as_ref().map(|g| g.build()),
            };
            test_stoch_continuity(spec, &ts[*index], radii, *eps_x, &opts, &extra)
        }
        ExperimentKind::StableSpectral {
            alpha,
            indices,
            theta_grid,
        } => {
            let pts: Vec<Vec<f64>> = match indices {
                Some(idx) => idx.iter().map(|i| ts[*i].clone()).collect(),
                None => ts.clone(),
            };
            let sspec = cfg.stable_spec(*alpha, &model.partition)?;
            let atoms = spectral_measure(&sspec, &pts)?;
            let class = association_classify(&atoms);
            let mut report = ExperimentReport::new("stable_spectral", opts.seed)
                .param("alpha", alpha)
                .param("t", &pts)
                .param("classification", class.class)
                .param("spectral_measure", &atoms);

            let sphere = atoms
                .atoms
                .iter()
                .map(|a| (a.point.iter().map(|v| v * v).sum::<f64>().sqrt() - 1.0).abs())
                .fold(0.0, f64::max);
            report.push(Statistic::at_most("max_sphere_deviation", sphere, SPHERE_TOL));

            let expected: f64 = model
                .partition
                .cells()
                .iter()
                .map(|c| {
                    let x = c.midpoint();
                    let s: f64 = pts.iter().map(|t| sspec.kernels.eval(t, &x).powi(2)).sum();
                    s.powf(alpha / 2.0) * c.base_mass
                })
                .sum();
            let drift = (atoms.total_mass() - expected).abs();
            report.push(Statistic::at_most("mass_conservation", drift, SPHERE_TOL * expected.max(1.0)));

            if sspec.kernels.sign_class() == SignClass::Mixed {
                report.push(informational("gamma_s_minus", class.mass_minus));
            } else {
                report.push(Statistic::at_most("gamma_s_minus", class.mass_minus, 0.0));
            }
            report.push(informational("gamma_s_plus", class.mass_plus));

            if !theta_grid.is_empty() {
                let generic = sspec.field_spec()?;
                for (i, th) in theta_grid.iter().enumerate() {
                    let a = stable_cf(&atoms, *alpha, th)?;
                    let b = joint_cf(&generic, &pts, th)?;
                    report.push(Statistic::at_most(format!("cf_consistency[{i}]"), (a - b).norm(), CROSS_CF_TOL));
                }
            }
            Ok(report)
        }
        ExperimentKind::NullCheck { alpha, index } => {
            let t = ts[*index].clone();
            let sspec = cfg.stable_spec(*alpha, &model.partition)?;
            let kernels = sspec.kernels.clone();
            let tt = t.clone();
            let null = null_check(&model.partition, move |x| kernels.eval(&tt, x), *alpha);
            let generic = sspec.field_spec()?;
            let draws = FieldSampler::new(&generic, std::slice::from_ref(&t), opts.level, opts.truncation)?.sample_batch(opts.samples, opts.seed);
            let nonzero = draws.iter().filter(|d| d[0] != 0.0).count() as f64;
            let mut report = ExperimentReport::new("null_check", opts.seed)
                .param("alpha", alpha)
                .param("t", &t)
                .param("degenerate", null.degenerate)
                .param("samples", opts.samples);
            report.push(informational("integral", null.integral));
            if null.degenerate {
                report.push(Statistic::new("nonzero_draws", nonzero, 0.0, 0.0, Verdict::from_bool(nonzero == 0.0), opts.samples));
            } else {
                report.push(Statistic::new("nonzero_draws", nonzero, 0.0, f64::INFINITY, Verdict::Pass, opts.samples));
            }
            Ok(report)
        }
    }
}
