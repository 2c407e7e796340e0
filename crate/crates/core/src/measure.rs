//! Infinitely divisible random measures discretised on a finite partition.
//!
//! A [`DomainPartition`] is a list of box cells with base masses; the base
//! measure plays the role of the reference measure for the
//! [`LocalCharacteristics`] densities. Each cell carries the law of
//! `Λ(cell)`, obtained by scaling the characteristics at the cell midpoint
//! by the cell's base mass.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::levy::{truncated_second_moment, LevyMeasure, LevySampler, LevyTriplet};
use crate::streams::{derive_seed, stream_rng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub id: usize,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub base_mass: f64,
}

impl Cell {
    pub fn midpoint(&self) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| 0.5 * (l + u))
            .collect()
    }

    pub fn volume(&self) -> f64 {
        self.lower.iter().zip(&self.upper).map(|(l, u)| u - l).product()
    }

    /// Splits the cell into `parts^dim` equal boxes sharing its base mass
    /// in proportion to volume. Child ids are local (`0..parts^dim`).
    pub fn subdivide(&self, parts: usize) -> Vec<Cell> {
        let dim = self.lower.len();
        let count = parts.pow(dim as u32);
        let share = self.base_mass / count as f64;
        (0..count)
            .map(|k| {
                let mut rem = k;
                let mut lower = Vec::with_capacity(dim);
                let mut upper = Vec::with_capacity(dim);
                for axis in 0..dim {
                    let i = rem % parts;
                    rem /= parts;
                    let width = (self.upper[axis] - self.lower[axis]) / parts as f64;
                    lower.push(self.lower[axis] + i as f64 * width);
                    upper.push(self.lower[axis] + (i + 1) as f64 * width);
                }
                Cell {
                    id: k,
                    lower,
                    upper,
                    base_mass: share,
                }
            })
            .collect()
    }
}

/// Uniform grid over a box, `resolution[k]` cells along axis `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub resolution: Vec<usize>,
}

impl GridSpec {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>, resolution: Vec<usize>) -> Result<Self> {
        let g = GridSpec {
            lower,
            upper,
            resolution,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn unit_interval(cells: usize) -> Self {
        GridSpec {
            lower: vec![0.0],
            upper: vec![1.0],
            resolution: vec![cells],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let dim = self.lower.len();
        if dim == 0 || dim > 3 {
            return Err(Error::InvalidArgument(format!(
                "domain dimension must be 1, 2 or 3, got {dim}"
            )));
        }
        if self.upper.len() != dim || self.resolution.len() != dim {
            return Err(Error::InvalidArgument(
                "lower, upper and resolution must have the same length".into(),
            ));
        }
        for k in 0..dim {
            if !(self.lower[k].is_finite() && self.upper[k].is_finite() && self.lower[k] < self.upper[k]) {
                return Err(Error::InvalidArgument(format!(
                    "axis {k}: need finite lower < upper, got [{}, {}]",
                    self.lower[k], self.upper[k]
                )));
            }
            if self.resolution[k] == 0 {
                return Err(Error::InvalidArgument(format!("axis {k}: resolution must be >= 1")));
            }
        }
        Ok(())
    }

    /// Next rung of the dyadic refinement ladder.
    pub fn refined(&self) -> Self {
        GridSpec {
            resolution: self.resolution.iter().map(|r| r * 2).collect(),
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainPartition {
    cells: Vec<Cell>,
}

impl DomainPartition {
    /// Builds a partition from cells; ids are reassigned to positions.
    pub fn new(cells: Vec<Cell>) -> Result<Self> {
        let dim = cells.first().map(|c| c.lower.len()).unwrap_or(0);
        let mut total = 0.0;
        let mut out = Vec::with_capacity(cells.len());
        for (id, mut c) in cells.into_iter().enumerate() {
            if c.lower.len() != dim || c.upper.len() != dim {
                return Err(Error::InvalidArgument("cells must share one dimension".into()));
            }
            if !(c.base_mass.is_finite() && c.base_mass >= 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "cell {id}: base mass must be finite and >= 0, got {}",
                    c.base_mass
                )));
            }
            total += c.base_mass;
            c.id = id;
            out.push(c);
        }
        if !total.is_finite() {
            return Err(Error::InvalidArgument("total base mass is not finite".into()));
        }
        Ok(DomainPartition { cells: out })
    }

    /// Grid partition with Lebesgue base masses.
    pub fn grid(grid: &GridSpec) -> Result<Self> {
        grid.validate()?;
        let dim = grid.lower.len();
        let count: usize = grid.resolution.iter().product();
        let cells = (0..count)
            .map(|k| {
                let mut rem = k;
                let mut lower = Vec::with_capacity(dim);
                let mut upper = Vec::with_capacity(dim);
                for axis in 0..dim {
                    let n = grid.resolution[axis];
                    let i = rem % n;
                    rem /= n;
                    let width = (grid.upper[axis] - grid.lower[axis]) / n as f64;
                    lower.push(grid.lower[axis] + i as f64 * width);
                    upper.push(grid.lower[axis] + (i + 1) as f64 * width);
                }
                let base_mass = lower.iter().zip(&upper).map(|(l, u)| u - l).product();
                Cell {
                    id: k,
                    lower,
                    upper,
                    base_mass,
                }
            })
            .collect();
        DomainPartition::new(cells)
    }

    /// Same cells with base masses replaced by `mass(cell)`.
    pub fn with_masses<F: Fn(&Cell) -> f64>(&self, mass: F) -> Result<Self> {
        DomainPartition::new(
            self.cells
                .iter()
                .map(|c| Cell {
                    base_mass: mass(c),
                    ..c.clone()
                })
                .collect(),
        )
    }

    /// Replaces cell `id` by its `parts^dim` subcells (appended at the end).
    pub fn subdivide_cell(&self, id: usize, parts: usize) -> Result<Self> {
        let target = self.cells.get(id).ok_or(Error::UnknownCell(id))?;
        let mut cells: Vec<Cell> = self.cells.iter().filter(|c| c.id != id).cloned().collect();
        cells.extend(target.subdivide(parts));
        DomainPartition::new(cells)
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.cells.first().map(|c| c.lower.len()).unwrap_or(0)
    }

    pub fn total_mass(&self) -> f64 {
        self.cells.iter().map(|c| c.base_mass).sum()
    }

    /// Smallest box containing every cell.
    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        let dim = self.dim();
        let mut lo = vec![f64::INFINITY; dim];
        let mut hi = vec![f64::NEG_INFINITY; dim];
        for c in &self.cells {
            for k in 0..dim {
                lo[k] = lo[k].min(c.lower[k]);
                hi[k] = hi[k].max(c.upper[k]);
            }
        }
        (lo, hi)
    }
}

pub type ScalarField = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type MeasureField = Arc<dyn Fn(&[f64]) -> LevyMeasure + Send + Sync>;

/// Densities `(a, σ², ρ)` of the random measure with respect to the base
/// measure.
#[derive(Clone)]
pub struct LocalCharacteristics {
    pub drift: ScalarField,
    pub gaussian_variance: ScalarField,
    pub jumps: MeasureField,
}

impl fmt::Debug for LocalCharacteristics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LocalCharacteristics").finish_non_exhaustive()
    }
}

impl LocalCharacteristics {
    pub fn new(drift: ScalarField, gaussian_variance: ScalarField, jumps: MeasureField) -> Self {
        LocalCharacteristics {
            drift,
            gaussian_variance,
            jumps,
        }
    }

    pub fn constant(drift: f64, gaussian_variance: f64, jumps: LevyMeasure) -> Self {
        LocalCharacteristics {
            drift: Arc::new(move |_| drift),
            gaussian_variance: Arc::new(move |_| gaussian_variance),
            jumps: Arc::new(move |_| jumps.clone()),
        }
    }

    pub fn null() -> Self {
        Self::constant(0.0, 0.0, LevyMeasure::None)
    }

    pub fn gaussian(variance: f64) -> Self {
        Self::constant(0.0, variance, LevyMeasure::None)
    }

    /// Unit-mass triplet `(a(x), σ²(x), ρ(x))`, validated.
    pub fn at(&self, x: &[f64]) -> Result<LevyTriplet> {
        LevyTriplet::new((self.drift)(x), (self.gaussian_variance)(x), (self.jumps)(x))
    }
}

/// `(|a| + σ² + ∫ min(1, z²) ρ(dz)) · η(cell)` at the cell midpoint.
pub fn control_mass(cell: &Cell, chars: &LocalCharacteristics) -> Result<f64> {
    if cell.base_mass == 0.0 {
        return Ok(0.0);
    }
    let local = chars.at(&cell.midpoint())?;
    let density =
        local.shift.abs() + local.gaussian_variance + truncated_second_moment(&local.jumps)?;
    Ok(density * cell.base_mass)
}

/// Triplet of `Λ(cell)`.
pub fn cell_triplet(cell: &Cell, chars: &LocalCharacteristics) -> Result<LevyTriplet> {
    Ok(chars.at(&cell.midpoint())?.scaled(cell.base_mass))
}

/// Per-cell samplers prepared once and reused across replicates.
#[derive(Debug, Clone)]
pub struct MeasureSampler {
    samplers: Vec<Option<LevySampler>>,
}

impl MeasureSampler {
    pub fn new(partition: &DomainPartition, chars: &LocalCharacteristics, truncation: f64) -> Result<Self> {
        Self::scaled(partition, chars, truncation, 1.0)
    }

    /// As [`MeasureSampler::new`] with every cell mass multiplied by `scale`.
    pub fn scaled(
        partition: &DomainPartition,
        chars: &LocalCharacteristics,
        truncation: f64,
        scale: f64,
    ) -> Result<Self> {
        let samplers = partition
            .cells()
            .par_iter()
            .map(|cell| {
                let mass = cell.base_mass * scale;
                if mass == 0.0 {
                    return Ok(None);
                }
                let triplet = chars.at(&cell.midpoint())?.scaled(mass);
                LevySampler::new(&triplet, truncation).map(Some)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(MeasureSampler { samplers })
    }

    /// One draw of `(Λ(B_1), ..., Λ(B_k))`; cell `j` uses the stream
    /// `derive_seed(seed, [j])`. Null cells are exactly zero.
    pub fn sample(&self, seed: u64) -> Vec<f64> {
        self.samplers
            .iter()
            .enumerate()
            .map(|(j, s)| match s {
                None => 0.0,
                Some(s) => s.sample(&mut stream_rng(derive_seed(seed, &[j as u64]))),
            })
            .collect()
    }
}

pub fn sample_measure(
    partition: &DomainPartition,
    chars: &LocalCharacteristics,
    truncation: f64,
    seed: u64,
) -> Result<Vec<f64>> {
    Ok(MeasureSampler::new(partition, chars, truncation)?.sample(seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy::cf_id;
    use num_complex::Complex64;

    fn unit_cell(mass: f64) -> Cell {
        Cell {
            id: 0,
            lower: vec![0.0],
            upper: vec![1.0],
            base_mass: mass,
        }
    }

    #[test]
    fn control_mass_examples() {
        let c = LocalCharacteristics::constant(1.0, 2.0, LevyMeasure::None);
        assert!((control_mass(&unit_cell(0.1), &c).unwrap() - 0.3).abs() < 1e-15);
        assert_eq!(control_mass(&unit_cell(0.7), &LocalCharacteristics::null()).unwrap(), 0.0);
        let c = LocalCharacteristics::constant(0.0, 0.0, LevyMeasure::point_masses(&[(2.0, 3.0)]));
        assert_eq!(control_mass(&unit_cell(1.0), &c).unwrap(), 3.0);
    }

    #[test]
    fn cell_triplet_examples() {
        let c = LocalCharacteristics::constant(1.0, 2.0, LevyMeasure::None);
        let t = cell_triplet(&unit_cell(0.1), &c).unwrap();
        assert!((t.shift - 0.1).abs() < 1e-15 && (t.gaussian_variance - 0.2).abs() < 1e-15);
        let t = cell_triplet(&unit_cell(0.0), &c).unwrap();
        assert_eq!((t.shift, t.gaussian_variance), (0.0, 0.0));
        let c = LocalCharacteristics::constant(0.0, 0.0, LevyMeasure::stable(1.5, 1.0, 1.0));
        let t = cell_triplet(&unit_cell(2.0), &c).unwrap();
        assert_eq!(t.jumps, LevyMeasure::stable(1.5, 2.0, 2.0));
    }

    #[test]
    fn grid_partition_geometry() {
        let g = GridSpec::new(vec![0.0, 0.0], vec![1.0, 2.0], vec![2, 4]).unwrap();
        let p = DomainPartition::grid(&g).unwrap();
        assert_eq!(p.len(), 8);
        assert!((p.total_mass() - 2.0).abs() < 1e-15);
        assert_eq!(p.cells()[0].midpoint(), vec![0.25, 0.25]);
        assert_eq!(DomainPartition::grid(&g.refined()).unwrap().len(), 32);
        assert!(GridSpec::new(vec![0.0], vec![1.0], vec![0]).is_err());
        assert!(GridSpec::new(vec![1.0], vec![0.0], vec![1]).is_err());
    }

    #[test]
    fn null_characteristics_sample_zero() {
        let p = DomainPartition::grid(&GridSpec::unit_interval(5)).unwrap();
        let xs = sample_measure(&p, &LocalCharacteristics::null(), 1e-3, 3).unwrap();
        assert!(xs.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn independent_scattering() {
        let p = DomainPartition::grid(&GridSpec::unit_interval(2)).unwrap();
        let sampler = MeasureSampler::new(&p, &LocalCharacteristics::gaussian(1.0), 1e-3).unwrap();
        let n = 10_000;
        let draws: Vec<Vec<f64>> = (0..n).map(|r| sampler.sample(derive_seed(99, &[r]))).collect();
        let mean = |k: usize| draws.iter().map(|d| d[k]).sum::<f64>() / n as f64;
        let (m0, m1) = (mean(0), mean(1));
        let cov = draws.iter().map(|d| (d[0] - m0) * (d[1] - m1)).sum::<f64>() / n as f64;
        let v0 = draws.iter().map(|d| (d[0] - m0).powi(2)).sum::<f64>() / n as f64;
        let v1 = draws.iter().map(|d| (d[1] - m1).powi(2)).sum::<f64>() / n as f64;
        let corr = cov / (v0 * v1).sqrt();
        assert!(corr.abs() < 3.0 / (n as f64).sqrt(), "{corr}");
    }

    #[test]
    fn subdivision_is_additive_in_law() {
        let chars = LocalCharacteristics::constant(0.3, 0.5, LevyMeasure::tempered(0.6, 1.0, 0.4, 1.5));
        let parent = unit_cell(0.8);
        let children = parent.subdivide(4);
        let control: f64 = children.iter().map(|c| control_mass(c, &chars).unwrap()).sum();
        assert!((control - control_mass(&parent, &chars).unwrap()).abs() < 1e-12);
        let parent_t = cell_triplet(&parent, &chars).unwrap();
        for &u in &[0.5, 1.0, 2.0, -3.0] {
            let prod: Complex64 = children
                .iter()
                .map(|c| cf_id(&cell_triplet(c, &chars).unwrap(), u).unwrap())
                .product();
            assert!((prod - cf_id(&parent_t, u).unwrap()).norm() < 1e-10);
        }
    }

    #[test]
    fn subdivided_sum_matches_parent_cf() {
        let chars = LocalCharacteristics::constant(0.0, 0.0, LevyMeasure::point_masses(&[(1.0, 1.5), (-0.5, 2.0)]));
        let parent = DomainPartition::new(vec![unit_cell(1.0)]).unwrap();
        let split = parent.subdivide_cell(0, 4).unwrap();
        assert_eq!(split.len(), 4);
        let sampler = MeasureSampler::new(&split, &chars, 1e-3).unwrap();
        let n = 100_000;
        let sums: Vec<f64> = (0..n)
            .map(|r| sampler.sample(derive_seed(7, &[r])).iter().sum())
            .collect();
        let parent_t = cell_triplet(&parent.cells()[0], &chars).unwrap();
        for &u in &[0.5, 1.0, 2.0] {
            let emp = sums.iter().map(|x| Complex64::new(0.0, u * x).exp()).sum::<Complex64>() / n as f64;
            assert!((emp - cf_id(&parent_t, u).unwrap()).norm() < 0.02);
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let p = DomainPartition::grid(&GridSpec::unit_interval(4)).unwrap();
        let chars = LocalCharacteristics::constant(0.1, 1.0, LevyMeasure::stable(0.7, 1.0, 0.5));
        let a = sample_measure(&p, &chars, 1e-3, 42).unwrap();
        let b = sample_measure(&p, &chars, 1e-3, 42).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, sample_measure(&p, &chars, 1e-3, 43).unwrap());
    }
}
