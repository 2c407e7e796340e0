//! α-stable fields: the spectral measure of `(X(t_1), ..., X(t_n))`,
//! stable characteristic functions and sign-based association criteria.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_2_PI, FRAC_PI_2};
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::field::{FieldSpec, KernelFamily};
use crate::levy::LevyMeasure;
use crate::measure::{DomainPartition, LocalCharacteristics, ScalarField};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Stable field with index `alpha`, local skewness `beta` and control
/// measure given by the partition's base masses.
#[derive(Clone)]
pub struct StableSpec {
    pub alpha: f64,
    pub beta: ScalarField,
    pub partition: DomainPartition,
    pub kernels: KernelFamily,
}

impl std::fmt::Debug for StableSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("StableSpec")
            .field("alpha", &self.alpha)
            .field("cells", &self.partition.len())
            .field("kernels", &self.kernels)
            .finish_non_exhaustive()
    }
}

impl StableSpec {
    pub fn new(alpha: f64, beta: ScalarField, partition: DomainPartition, kernels: KernelFamily) -> Result<Self> {
        let spec = StableSpec {
            alpha,
            beta,
            partition,
            kernels,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_constant_skewness(alpha: f64, beta: f64, partition: DomainPartition, kernels: KernelFamily) -> Result<Self> {
        Self::new(alpha, Arc::new(move |_| beta), partition, kernels)
    }

    /// Checks `α ∈ (0, 2)` and `|β| ≤ 1` at every cell midpoint.
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 2.0) {
            return Err(Error::InvalidArgument(format!("alpha must lie in (0, 2), got {}", self.alpha)));
        }
        for cell in self.partition.cells() {
            let b = (self.beta)(&cell.midpoint());
            if !(b.abs() <= 1.0) {
                return Err(Error::InvalidArgument(format!(
                    "skewness must lie in [-1, 1], got {b} in cell {}",
                    cell.id
                )));
            }
        }
        Ok(())
    }

    /// Local characteristics of the generic representation of this field.
    pub fn characteristics(&self) -> LocalCharacteristics {
        stable_characteristics(self.alpha, self.beta.clone())
    }

    /// The same field as a generic [`FieldSpec`].
    pub fn field_spec(&self) -> Result<FieldSpec> {
        FieldSpec::new(self.kernels.clone(), self.characteristics(), self.partition.clone())
    }
}

/// `-Γ(-α) cos(πα/2)`, continued by `π/2` at `α = 1`.
pub fn stable_constant(alpha: f64) -> f64 {
    if alpha == 1.0 {
        FRAC_PI_2
    } else {
        let g = gamma(2.0 - alpha) / (alpha * (alpha - 1.0));
        -g * (FRAC_PI_2 * alpha).cos()
    }
}

/// `(a, 0, ρ)` such that a unit-mass cell has the stable law with
/// exponent `-|u|^α (1 - iβ sign(u) tan(πα/2))` (or the `α = 1` analogue
/// with `(2/π) ln|u|`), i.e. `β = (c₊ - c₋)/(c₊ + c₋)`.
pub fn stable_characteristics(alpha: f64, beta: ScalarField) -> LocalCharacteristics {
    let k = stable_constant(alpha);
    let centering = if alpha == 1.0 {
        EULER_GAMMA
    } else {
        1.0 / (1.0 - alpha) + 1.0 / alpha
    };
    let pair = move |x: &[f64]| {
        let b = beta(x);
        (0.5 * (1.0 + b) / k, 0.5 * (1.0 - b) / k)
    };
    let pair_d = pair.clone();
    LocalCharacteristics::new(
        Arc::new(move |x| {
            let (cp, cm) = pair_d(x);
            (cp - cm) * centering
        }),
        Arc::new(|_| 0.0),
        Arc::new(move |x| {
            let (cp, cm) = pair(x);
            LevyMeasure::stable(alpha, cp, cm)
        }),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralAtom {
    pub point: Vec<f64>,
    pub weight: f64,
}

/// Discrete spectral measure `Γ` on the unit sphere plus drift `μ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralMeasureAtoms {
    pub atoms: Vec<SpectralAtom>,
    pub mu: Vec<f64>,
}

impl SpectralMeasureAtoms {
    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.weight).sum()
    }
}

/// `(f_{t_1}(x), ..., f_{t_n}(x)) / ‖·‖`, or `None` when every kernel vanishes at `x`.
pub fn g_map(x: &[f64], ts: &[Vec<f64>], kernels: &KernelFamily) -> Option<Vec<f64>> {
    let values: Vec<f64> = ts.iter().map(|t| kernels.eval(t, x)).collect();
    normalize(&values).map(|(g, _)| g)
}

fn normalize(values: &[f64]) -> Option<(Vec<f64>, f64)> {
    let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 0.0 {
        Some((values.iter().map(|v| v / norm).collect(), norm))
    } else {
        None
    }
}

fn point_key(p: &[f64]) -> Vec<u64> {
    p.iter().map(|v| (v + 0.0).to_bits()).collect()
}

pub fn spectral_measure(spec: &StableSpec, ts: &[Vec<f64>]) -> Result<SpectralMeasureAtoms> {
    if ts.is_empty() {
        return Err(Error::InvalidArgument("need at least one index point".into()));
    }
    let mut merged: BTreeMap<Vec<u64>, SpectralAtom> = BTreeMap::new();
    let mut add = |point: Vec<f64>, weight: f64| {
        if weight > 0.0 {
            merged
                .entry(point_key(&point))
                .and_modify(|a| a.weight += weight)
                .or_insert(SpectralAtom { point, weight });
        }
    };
    for cell in spec.partition.cells() {
        if cell.base_mass == 0.0 {
            continue;
        }
        let x = cell.midpoint();
        let values: Vec<f64> = ts.iter().map(|t| spec.kernels.eval(t, &x)).collect();
        let Some((g, norm)) = normalize(&values) else {
            continue;
        };
        let m1 = norm.powf(spec.alpha) * cell.base_mass;
        let beta = (spec.beta)(&x);
        let antipode = g.iter().map(|v| -v).collect();
        add(g, 0.5 * (1.0 + beta) * m1);
        add(antipode, 0.5 * (1.0 - beta) * m1);
    }
    Ok(SpectralMeasureAtoms {
        atoms: merged.into_values().collect(),
        mu: vec![0.0; ts.len()],
    })
}

/// Characteristic function of the stable vector with spectral measure `Γ`
/// and drift `μ` at `θ`.
pub fn stable_cf(atoms: &SpectralMeasureAtoms, alpha: f64, theta: &[f64]) -> Result<Complex64> {
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(Error::InvalidArgument(format!("alpha must lie in (0, 2), got {alpha}")));
    }
    if theta.len() != atoms.dim() {
        return Err(Error::InvalidArgument(format!(
            "theta has length {} but the atoms live in dimension {}",
            theta.len(),
            atoms.dim()
        )));
    }
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let tan = (FRAC_PI_2 * alpha).tan();
    let mut exponent = Complex64::new(0.0, dot(theta, &atoms.mu));
    for atom in &atoms.atoms {
        let p = dot(theta, &atom.point);
        if p == 0.0 {
            continue;
        }
        let skew = if alpha == 1.0 {
            FRAC_2_PI * p.signum() * p.abs().ln()
        } else {
            -p.signum() * tan
        };
        exponent -= Complex64::new(1.0, skew) * (p.abs().powf(alpha) * atom.weight);
    }
    Ok(exponent.exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Association {
    Associated,
    NegativelyAssociated,
    Both,
    Neither,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AssociationReport {
    pub class: Association,
    /// `Γ({s : s_i s_j < 0 for some i ≠ j})`
    pub mass_minus: f64,
    /// `Γ({s : s_i s_j > 0 for some i ≠ j})`
    pub mass_plus: f64,
}

pub fn association_classify(atoms: &SpectralMeasureAtoms) -> AssociationReport {
    let (mut minus, mut plus) = (0.0, 0.0);
    for atom in &atoms.atoms {
        let s = &atom.point;
        let (mut neg, mut pos) = (false, false);
        for i in 0..s.len() {
            for j in i + 1..s.len() {
                let prod = s[i] * s[j];
                neg |= prod < 0.0;
                pos |= prod > 0.0;
            }
        }
        if neg {
            minus += atom.weight;
        }
        if pos {
            plus += atom.weight;
        }
    }
    let class = match (minus == 0.0, plus == 0.0) {
        (true, true) => Association::Both,
        (true, false) => Association::Associated,
        (false, true) => Association::NegativelyAssociated,
        (false, false) => Association::Neither,
    };
    AssociationReport {
        class,
        mass_minus: minus,
        mass_plus: plus,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NullReport {
    /// `Σ |f(x_mid)|^α m(cell)`
    pub integral: f64,
    pub degenerate: bool,
}

pub fn null_check<F: Fn(&[f64]) -> f64>(partition: &DomainPartition, f: F, alpha: f64) -> NullReport {
    let integral = partition
        .cells()
        .iter()
        .filter(|c| c.base_mass != 0.0)
        .map(|c| f(&c.midpoint()).abs().powf(alpha) * c.base_mass)
        .sum::<f64>();
    NullReport {
        integral,
        degenerate: integral == 0.0,
    }
}
