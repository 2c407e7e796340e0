//! TOML experiment configuration.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{FieldSpec, KernelFamily, SignClass};
use crate::levy::LevyMeasure;
use crate::measure::{DomainPartition, GridSpec, LocalCharacteristics, ScalarField};
use crate::stable::StableSpec;
use crate::verify::McOptions;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_truncation")]
    pub truncation: f64,
    #[serde(default = "default_level")]
    pub level: u32,
    pub domain: DomainConfig,
    #[serde(default)]
    pub characteristics: CharacteristicsConfig,
    pub kernel: KernelConfig,
    pub t_points: Vec<Vec<f64>>,
    #[serde(default)]
    pub experiments: Vec<ExperimentKind>,
}

fn default_samples() -> usize {
    10_000
}
fn default_truncation() -> f64 {
    1e-3
}
fn default_level() -> u32 {
    64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub resolution: Vec<usize>,
}

/// A scalar function of the location `x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScalarConfig {
    Constant(f64),
    Family(ScalarFamily),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScalarFamily {
    /// `intercept + gradient · x`
    Affine { intercept: f64, gradient: Vec<f64> },
    /// `inside` on `[lower, upper)`, `outside` elsewhere
    Box {
        lower: Vec<f64>,
        upper: Vec<f64>,
        inside: f64,
        #[serde(default)]
        outside: f64,
    },
}

impl Default for ScalarConfig {
    fn default() -> Self {
        ScalarConfig::Constant(0.0)
    }
}

impl ScalarConfig {
    pub fn build(&self) -> ScalarField {
        match self.clone() {
            ScalarConfig::Constant(v) => Arc::new(move |_| v),
            ScalarConfig::Family(ScalarFamily::Affine { intercept, gradient }) => {
                Arc::new(move |x| intercept + gradient.iter().zip(x).map(|(g, xi)| g * xi).sum::<f64>())
            }
            ScalarConfig::Family(ScalarFamily::Box {
                lower,
                upper,
                inside,
                outside,
            }) => Arc::new(move |x| if in_box(x, &lower, &upper) { inside } else { outside }),
        }
    }

    fn dims(&self) -> Vec<usize> {
        match self {
            ScalarConfig::Constant(_) => vec![],
            ScalarConfig::Family(ScalarFamily::Affine { gradient, .. }) => vec![gradient.len()],
            ScalarConfig::Family(ScalarFamily::Box { lower, upper, .. }) => vec![lower.len(), upper.len()],
        }
    }
}

fn in_box(x: &[f64], lower: &[f64], upper: &[f64]) -> bool {
    x.iter().zip(lower.iter().zip(upper)).all(|(v, (l, u))| *v >= *l && *v < *u)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CharacteristicsConfig {
    #[serde(default)]
    pub drift: ScalarConfig,
    #[serde(default)]
    pub gaussian_variance: ScalarConfig,
    /// Lévy measure shared by every location, multiplied by `jump_scale(x)`.
    #[serde(default = "no_jumps")]
    pub jumps: LevyMeasure,
    #[serde(default)]
    pub jump_scale: Option<ScalarConfig>,
    /// Local skewness for stable experiments.
    #[serde(default)]
    pub skewness: ScalarConfig,
}

fn no_jumps() -> LevyMeasure {
    LevyMeasure::None
}

impl Default for CharacteristicsConfig {
    fn default() -> Self {
        CharacteristicsConfig {
            drift: ScalarConfig::default(),
            gaussian_variance: ScalarConfig::default(),
            jumps: no_jumps(),
            jump_scale: None,
            skewness: ScalarConfig::default(),
        }
    }
}

impl CharacteristicsConfig {
    pub fn build(&self) -> LocalCharacteristics {
        let jumps = self.jumps.clone();
        let measure: Arc<dyn Fn(&[f64]) -> LevyMeasure + Send + Sync> = match &self.jump_scale {
            None => Arc::new(move |_| jumps.clone()),
            Some(scale) => {
                let scale = scale.build();
                Arc::new(move |x| jumps.scaled(scale(x)))
            }
        };
        LocalCharacteristics::new(self.drift.build(), self.gaussian_variance.build(), measure)
    }
}

/// Named kernel families `f_t(x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case")]
pub enum KernelPreset {
    /// `value`
    Constant { value: f64 },
    /// `scale · 1{x - t ∈ [lower, upper)}`
    IndicatorBox {
        lower: Vec<f64>,
        upper: Vec<f64>,
        #[serde(default = "one")]
        scale: f64,
    },
    /// `scale · max(0, 1 - |x - t|² / radius²)`
    Bump {
        radius: f64,
        #[serde(default = "one")]
        scale: f64,
    },
    /// `scale · exp(-|x - t|² / (2 width²))`
    GaussianProfile {
        width: f64,
        #[serde(default = "one")]
        scale: f64,
    },
    /// `(1 + |t - anchor|) · 1{x ∈ [lower, upper)}`
    GrowingBox {
        lower: Vec<f64>,
        upper: Vec<f64>,
        anchor: Vec<f64>,
    },
    /// `2 · 1{x ∈ [lower, upper)}` at `t = anchor`, `1{x ∈ [lower, upper)}` elsewhere
    StepBox {
        lower: Vec<f64>,
        upper: Vec<f64>,
        anchor: Vec<f64>,
    },
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelConfig {
    #[serde(flatten)]
    pub preset: KernelPreset,
    #[serde(default)]
    pub sign_class: Option<SignClass>,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn class_of(scale: f64) -> SignClass {
    if scale >= 0.0 {
        SignClass::Nonnegative
    } else {
        SignClass::Nonpositive
    }
}

impl KernelConfig {
    pub fn build(&self) -> KernelFamily {
        let (family, default_class) = match self.preset.clone() {
            KernelPreset::Constant { value } => (KernelFamily::constant(value), class_of(value)),
            KernelPreset::IndicatorBox { lower, upper, scale } => (
                KernelFamily::translated(move |y| if in_box(y, &lower, &upper) { scale } else { 0.0 }, class_of(scale)),
                class_of(scale),
            ),
            KernelPreset::Bump { radius, scale } => {
                let r2 = radius * radius;
                (
                    KernelFamily::translated(move |y| scale * (1.0 - y.iter().map(|v| v * v).sum::<f64>() / r2).max(0.0), class_of(scale)),
                    class_of(scale),
                )
            }
            KernelPreset::GaussianProfile { width, scale } => {
                let w2 = 2.0 * width * width;
                (
                    KernelFamily::translated(move |y| scale * (-y.iter().map(|v| v * v).sum::<f64>() / w2).exp(), class_of(scale)),
                    class_of(scale),
                )
            }
            KernelPreset::GrowingBox { lower, upper, anchor } => (
                KernelFamily::from_fn(
                    move |t, x| {
                        if in_box(x, &lower, &upper) {
                            1.0 + sq_dist(t, &anchor).sqrt()
                        } else {
                            0.0
                        }
                    },
                    SignClass::Nonnegative,
                ),
                SignClass::Nonnegative,
            ),
            KernelPreset::StepBox { lower, upper, anchor } => (
                KernelFamily::from_fn(
                    move |t, x| match (in_box(x, &lower, &upper), t == anchor.as_slice()) {
                        (false, _) => 0.0,
                        (true, true) => 2.0,
                        (true, false) => 1.0,
                    },
                    SignClass::Nonnegative,
                ),
                SignClass::Nonnegative,
            ),
        };
        match self.sign_class {
            Some(c) if c != default_class => {
                let f = family.clone();
                KernelFamily::from_fn(move |t, x| f.eval(t, x), c)
            }
            _ => family,
        }
    }

    fn dims(&self) -> Vec<usize> {
        match &self.preset {
            KernelPreset::Constant { .. } | KernelPreset::Bump { .. } | KernelPreset::GaussianProfile { .. } => vec![],
            KernelPreset::IndicatorBox { lower, upper, .. } => vec![lower.len(), upper.len()],
            KernelPreset::GrowingBox { lower, upper, anchor } | KernelPreset::StepBox { lower, upper, anchor } => {
                vec![lower.len(), upper.len(), anchor.len()]
            }
        }
    }
}

/// Requested experiment with its parameters. Index sets refer to `t_points`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ExperimentKind {
    CfCheck {
        #[serde(default)]
        index: usize,
        theta: Vec<f64>,
    },
    Independence {
        k: Vec<usize>,
        l: Vec<usize>,
        theta_grid: Vec<Vec<f64>>,
    },
    Association {
        indices: Vec<usize>,
        n_pairs: usize,
        /// when present, tests negative association between `indices` and `against`
        #[serde(default)]
        against: Option<Vec<usize>>,
    },
    Id {
        n_fold: usize,
        theta_grid: Vec<Vec<f64>>,
        #[serde(default)]
        indices: Option<Vec<usize>>,
    },
    Continuity {
        #[serde(default)]
        index: usize,
        radii: Vec<f64>,
        eps_x: f64,
        #[serde(default)]
        direction: Option<Vec<f64>>,
        #[serde(default)]
        envelope: Option<ScalarConfig>,
    },
    StableSpectral {
        alpha: f64,
        #[serde(default)]
        indices: Option<Vec<usize>>,
        #[serde(default)]
        theta_grid: Vec<Vec<f64>>,
    },
    NullCheck {
        alpha: f64,
        #[serde(default)]
        index: usize,
    },
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::CfCheck { .. } => "cf_check",
            ExperimentKind::Independence { .. } => "independence",
            ExperimentKind::Association { .. } => "association",
            ExperimentKind::Id { .. } => "id",
            ExperimentKind::Continuity { .. } => "continuity",
            ExperimentKind::StableSpectral { .. } => "stable_spectral",
            ExperimentKind::NullCheck { .. } => "null_check",
        }
    }
}

pub const EXPERIMENT_NAMES: [&str; 7] = [
    "cf_check",
    "independence",
    "association",
    "id",
    "continuity",
    "stable_spectral",
    "null_check",
];

fn cfg_err(field: &str, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("{field}: {msg}"))
}

/// A validated configuration with its model objects built.
#[derive(Debug, Clone)]
pub struct Model {
    pub partition: DomainPartition,
    pub spec: FieldSpec,
    pub ts: Vec<Vec<f64>>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| cfg_err(&path.display().to_string(), e))?;
        Self::from_toml(&text)
    }

    pub fn mc_options(&self) -> McOptions {
        McOptions {
            samples: self.samples,
            level: self.level,
            truncation: self.truncation,
            seed: self.seed,
        }
    }

    /// Validates every field and builds the model.
    pub fn validate(&self) -> Result<Model> {
        let grid = GridSpec::new(self.domain.lower.clone(), self.domain.upper.clone(), self.domain.resolution.clone())
            .map_err(|e| cfg_err("domain", e))?;
        let dim = grid.lower.len();
        if self.samples == 0 {
            return Err(cfg_err("samples", "must be >= 1"));
        }
        if !(self.truncation > 0.0 && self.truncation <= 1.0) {
            return Err(cfg_err("truncation", format!("must lie in (0, 1], got {}", self.truncation)));
        }
        if self.level == 0 {
            return Err(cfg_err("level", "must be >= 1"));
        }
        if self.t_points.is_empty() {
            return Err(cfg_err("t_points", "must be nonempty"));
        }
        if let Some(t) = self.t_points.iter().find(|t| t.len() != dim) {
            return Err(cfg_err("t_points", format!("{t:?} must have dimension {dim}")));
        }
        let c = &self.characteristics;
        for (name, s) in [
            ("characteristics.drift", Some(&c.drift)),
            ("characteristics.gaussian_variance", Some(&c.gaussian_variance)),
            ("characteristics.jump_scale", c.jump_scale.as_ref()),
            ("characteristics.skewness", Some(&c.skewness)),
        ] {
            if s.is_some_and(|s| s.dims().iter().any(|d| *d != dim)) {
                return Err(cfg_err(name, format!("vectors must have dimension {dim}")));
            }
        }
        c.jumps.validate().map_err(|e| cfg_err("characteristics.jumps", e))?;
        if self.kernel.dims().iter().any(|d| *d != dim) {
            return Err(cfg_err("kernel", format!("vectors must have dimension {dim}")));
        }
        match &self.kernel.preset {
            KernelPreset::Bump { radius, .. } if !(*radius > 0.0) => return Err(cfg_err("kernel.radius", "must be > 0")),
            KernelPreset::GaussianProfile { width, .. } if !(*width > 0.0) => return Err(cfg_err("kernel.width", "must be > 0")),
            _ => {}
        }

        let partition = DomainPartition::grid(&grid).map_err(|e| cfg_err("domain", e))?;
        let kernels = self.kernel.build();
        kernels
            .check(&self.t_points, &partition, 1000, self.seed)
            .map_err(|e| cfg_err("kernel", e))?;
        let spec = FieldSpec::new(kernels, c.build(), partition.clone()).map_err(|e| cfg_err("characteristics", e))?;
        for (i, e) in self.experiments.iter().enumerate() {
            self.validate_experiment(e, &partition)
                .map_err(|err| cfg_err(&format!("experiments[{i}] ({})", e.name()), err))?;
        }
        Ok(Model {
            partition,
            spec,
            ts: self.t_points.clone(),
        })
    }

    fn validate_experiment(&self, e: &ExperimentKind, partition: &DomainPartition) -> std::result::Result<(), String> {
        let n = self.t_points.len();
        let check_idx = |name: &str, idx: &[usize]| -> std::result::Result<(), String> {
            if idx.is_empty() {
                return Err(format!("{name} must be nonempty"));
            }
            match idx.iter().find(|i| **i >= n) {
                Some(i) => Err(format!("{name} contains {i}, but there are {n} t_points")),
                None => Ok(()),
            }
        };
        let check_grid = |grid: &[Vec<f64>], len: usize| -> std::result::Result<(), String> {
            if grid.is_empty() {
                return Err("theta_grid must be nonempty".into());
            }
            match grid.iter().find(|th| th.len() != len) {
                Some(th) => Err(format!("theta {th:?} must have length {len}")),
                None => Ok(()),
            }
        };
        let check_alpha = |alpha: f64| {
            if alpha > 0.0 && alpha < 2.0 {
                Ok(())
            } else {
                Err(format!("alpha must lie in (0, 2), got {alpha}"))
            }
        };
        match e {
            ExperimentKind::CfCheck { index, theta } => {
                check_idx("index", &[*index])?;
                if theta.is_empty() {
                    return Err("theta must be nonempty".into());
                }
            }
            ExperimentKind::Independence { k, l, theta_grid } => {
                check_idx("k", k)?;
                check_idx("l", l)?;
                if k.iter().any(|i| l.contains(i)) {
                    return Err("k and l must be disjoint".into());
                }
                check_grid(theta_grid, k.len() + l.len())?;
            }
            ExperimentKind::Association { indices, n_pairs, against } => {
                check_idx("indices", indices)?;
                if let Some(j) = against {
                    check_idx("against", j)?;
                    if indices.iter().any(|i| j.contains(i)) {
                        return Err("indices and against must be disjoint".into());
                    }
                }
                if *n_pairs == 0 {
                    return Err("n_pairs must be >= 1".into());
                }
                if self.samples < 2 {
                    return Err("association needs samples >= 2".into());
                }
            }
            ExperimentKind::Id {
                n_fold,
                theta_grid,
                indices,
            } => {
                if *n_fold < 2 {
                    return Err(format!("n_fold must be >= 2, got {n_fold}"));
                }
                let len = match indices {
                    Some(idx) => {
                        check_idx("indices", idx)?;
                        idx.len()
                    }
                    None => n,
                };
                check_grid(theta_grid, len)?;
            }
            ExperimentKind::Continuity {
                index,
                radii,
                eps_x,
                direction,
                envelope,
            } => {
                check_idx("index", &[*index])?;
                if radii.is_empty() || radii.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
                    return Err("radii must be positive and finite".into());
                }
                if radii.windows(2).any(|w| w[1] >= w[0]) {
                    return Err("radii must be strictly decreasing".into());
                }
                if !(*eps_x > 0.0) {
                    return Err("eps_x must be > 0".into());
                }
                if direction.as_ref().is_some_and(|d| d.len() != partition.dim()) {
                    return Err(format!("direction must have dimension {}", partition.dim()));
                }
                if envelope.as_ref().is_some_and(|g| g.dims().iter().any(|d| *d != partition.dim())) {
                    return Err(format!("envelope vectors must have dimension {}", partition.dim()));
                }
            }
            ExperimentKind::StableSpectral {
                alpha,
                indices,
                theta_grid,
            } => {
                check_alpha(*alpha)?;
                let len = match indices {
                    Some(idx) => {
                        check_idx("indices", idx)?;
                        idx.len()
                    }
                    None => n,
                };
                if !theta_grid.is_empty() {
                    check_grid(theta_grid, len)?;
                }
                self.stable_spec(*alpha, partition).map_err(|e| e.to_string())?;
            }
            ExperimentKind::NullCheck { alpha, index } => {
                check_alpha(*alpha)?;
                check_idx("index", &[*index])?;
                self.stable_spec(*alpha, partition).map_err(|e| e.to_string())?;
            }
        }
        Ok(())
    }

    pub fn stable_spec(&self, alpha: f64, partition: &DomainPartition) -> Result<StableSpec> {
        StableSpec::new(alpha, self.characteristics.skewness.build(), partition.clone(), self.kernel.build())
    }
}
