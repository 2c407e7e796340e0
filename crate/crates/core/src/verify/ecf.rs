use num_complex::Complex64;

use crate::error::{Error, Result};

/// `(1/N) Σ exp(i θ·X_k)`.
pub fn empirical_cf(samples: &[Vec<f64>], theta: &[f64]) -> Result<Complex64> {
    empirical_cf_with_se(samples, theta).map(|(v, _)| v)
}

/// Empirical characteristic function and its standard error
/// `sqrt((Var cos + Var sin) / N)`.
pub fn empirical_cf_with_se(samples: &[Vec<f64>], theta: &[f64]) -> Result<(Complex64, f64)> {
    if samples.is_empty() {
        return Err(Error::InvalidArgument("empirical cf needs at least one sample".into()));
    }
    let n = samples.len() as f64;
    let (mut c, mut s, mut c2, mut s2) = (0.0, 0.0, 0.0, 0.0);
    for x in samples {
        if x.len() != theta.len() {
            return Err(Error::InvalidArgument(format!(
                "sample of length {} paired with theta of length {}",
                x.len(),
                theta.len()
            )));
        }
        let phase: f64 = x.iter().zip(theta).map(|(a, b)| a * b).sum();
        let (sin, cos) = phase.sin_cos();
        c += cos;
        s += sin;
        c2 += cos * cos;
        s2 += sin * sin;
    }
    let (mc, ms) = (c / n, s / n);
    let var = (c2 / n - mc * mc).max(0.0) + (s2 / n - ms * ms).max(0.0);
    Ok((Complex64::new(mc, ms), (var / n).sqrt()))
}

/// Tolerance for comparing an empirical CF with its target: `max(0.02, 6/√N)`.
pub fn mc_tolerance(n: usize) -> f64 {
    (6.0 / (n as f64).sqrt()).max(0.02)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn trivial_cases() {
        let zeros = vec![vec![0.0, 0.0]; 10];
        assert_eq!(empirical_cf(&zeros, &[1.0, -2.0]).unwrap(), Complex64::new(1.0, 0.0));
        let some = vec![vec![1.3], vec![-0.2]];
        assert_eq!(empirical_cf(&some, &[0.0]).unwrap(), Complex64::new(1.0, 0.0));
        assert!(empirical_cf(&[], &[1.0]).is_err());
        assert!(empirical_cf(&some, &[1.0, 2.0]).is_err());
    }

    #[test]
    fn standard_normal() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let xs: Vec<Vec<f64>> = (0..100_000).map(|_| vec![StandardNormal.sample(&mut rng)]).collect();
        let (v, se) = empirical_cf_with_se(&xs, &[1.0]).unwrap();
        assert!((v - Complex64::new((-0.5f64).exp(), 0.0)).norm() < 0.02);
        assert!(se > 0.0 && se < 0.01);
        assert!(v.norm() <= 1.0);
    }

    #[test]
    fn tolerance_floor() {
        assert_eq!(mc_tolerance(100_000), 0.02);
        assert!((mc_tolerance(10_000) - 0.06).abs() < 1e-15);
    }
}
