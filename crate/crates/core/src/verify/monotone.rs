use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::streams::stream_rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MonotoneKind {
    /// `Σ_j 1{y_j > c_j}`
    Threshold { levels: Vec<f64> },
    /// `Σ_j 1 / (1 + e^{-slope (y_j - c_j)})`
    SmoothClamp { levels: Vec<f64>, slope: f64 },
}

/// A bounded, coordinate-wise nondecreasing function `ℝ^dim → [0, dim]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotoneTestFunction {
    pub kind: MonotoneKind,
    pub seed: u64,
}

fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl MonotoneTestFunction {
    pub fn threshold(levels: Vec<f64>) -> Self {
        MonotoneTestFunction {
            kind: MonotoneKind::Threshold { levels },
            seed: 0,
        }
    }

    pub fn smooth_clamp(levels: Vec<f64>, slope: f64) -> Self {
        MonotoneTestFunction {
            kind: MonotoneKind::SmoothClamp { levels, slope },
            seed: 0,
        }
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            MonotoneKind::Threshold { levels } | MonotoneKind::SmoothClamp { levels, .. } => levels.len(),
        }
    }

    pub fn eval(&self, y: &[f64]) -> f64 {
        match &self.kind {
            MonotoneKind::Threshold { levels } => y.iter().zip(levels).filter(|(v, c)| v > c).count() as f64,
            MonotoneKind::SmoothClamp { levels, slope } => {
                y.iter().zip(levels).map(|(v, c)| logistic(slope * (v - c))).sum()
            }
        }
    }
}

/// Draws a random monotone function whose levels are one row of `pilot`
/// (uniform on `[-1, 1]^dim` when `pilot` is empty).
///
/// Using a single row keeps the family equivariant under coordinate
/// permutations of the data.
pub fn make_monotone_function(dim: usize, pilot: &[Vec<f64>], seed: u64) -> Result<MonotoneTestFunction> {
    if dim == 0 {
        return Err(Error::InvalidArgument("monotone function dimension must be >= 1".into()));
    }
    if pilot.iter().any(|p| p.len() != dim) {
        return Err(Error::InvalidArgument(format!("pilot samples must have dimension {dim}")));
    }
    let mut rng = stream_rng(seed);
    let levels = if pilot.is_empty() {
        (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect()
    } else {
        pilot[rng.random_range(0..pilot.len())].clone()
    };
    let kind = if rng.random::<bool>() {
        MonotoneKind::Threshold { levels }
    } else {
        let spread = pilot_spread(pilot).max(1e-6);
        let slope = rng.random_range(1.0..20.0) / spread;
        MonotoneKind::SmoothClamp { levels, slope }
    };
    Ok(MonotoneTestFunction { kind, seed })
}

/// Mean absolute deviation over all pilot coordinates.
fn pilot_spread(pilot: &[Vec<f64>]) -> f64 {
    let values: Vec<f64> = pilot.iter().flatten().copied().collect();
    if values.is_empty() {
        return 1.0;
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    values.iter().map(|v| (v - mean).abs()).sum::<f64>() / values.len() as f64
}
