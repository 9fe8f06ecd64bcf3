//! Dependent-uniform generator: a Gaussian copula whose latent covariance has
//! low-rank factor structure Sigma = (1/n) F F^T + D with unit diagonal.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pitlab::replicate_rng;
use crate::pointwise::PitSample;
use crate::specfun::normal_cdf;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LowRankCopulaSpec {
    pub n: usize,
    /// Latent factor dimension (rank of the cross-covariance).
    pub p: usize,
    /// Common loading magnitude; must be < 1 so the diagonal completion stays
    /// positive. 0 gives i.i.d. uniforms.
    pub loading_scale: f64,
    pub seed: u64,
}

impl LowRankCopulaSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.p == 0 {
            return Err(Error::InvalidSpec("copula needs n >= 1 and p >= 1".into()));
        }
        if !self.loading_scale.is_finite() || self.loading_scale < 0.0 {
            return Err(Error::InvalidSpec(
                "loading_scale must be a nonnegative real".into(),
            ));
        }
        Ok(())
    }
}

/// Unit loading directions: rows uniform on the positive orthant of the unit
/// sphere in R^p, so every pairwise latent correlation is nonnegative and the
/// sample co-moves. The caller scales rows by loading_scale * sqrt(n).
fn loading_directions(rng: &mut ChaCha8Rng, n: usize, p: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| {
            let mut row: Vec<f64> = (0..p)
                .map(|_| {
                    let z: f64 = rng.sample(StandardNormal);
                    z.abs()
                })
                .collect();
            let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 0.0 {
                for x in &mut row {
                    *x /= norm;
                }
            } else {
                row[0] = 1.0;
            }
            row
        })
        .collect()
}

/// n dependent Uniform(0,1) values: latent z = F w / sqrt(n) + D^{1/2} eps
/// with row norms ||f_i||^2 = n * loading_scale^2, so marginals are exactly
/// standard normal and u_i = Phi(z_i) exactly uniform. Pairwise latent
/// correlations are loading_scale^2 * (v_i . v_j) with rank-p structure.
pub fn copula_dependent_uniforms(spec: &LowRankCopulaSpec) -> Result<PitSample> {
    let mut rng = replicate_rng(spec.seed, 0);
    copula_dependent_uniforms_with(spec, &mut rng)
}

pub fn copula_dependent_uniforms_with(
    spec: &LowRankCopulaSpec,
    rng: &mut ChaCha8Rng,
) -> Result<PitSample> {
    spec.validate()?;
    let s = spec.loading_scale;
    let d = 1.0 - s * s;
    if d <= 0.0 {
        return Err(Error::InvalidSpec(format!(
            "loading_scale {s} too large: diagonal completion 1 - loading_scale^2 must be positive"
        )));
    }
    let dirs = loading_directions(rng, spec.n, spec.p);
    let w: Vec<f64> = (0..spec.p).map(|_| rng.sample(StandardNormal)).collect();
    let sqrt_d = d.sqrt();
    let mut u = Vec::with_capacity(spec.n);
    for dir in &dirs {
        // f_i . w / sqrt(n) with f_i = s * sqrt(n) * v_i
        let shared: f64 = s * dir.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>();
        let eps: f64 = rng.sample(StandardNormal);
        u.push(normal_cdf(shared + sqrt_d * eps).get());
    }
    PitSample::continuous(u)
}

/// Loading scale whose realized mean pairwise latent correlation (for this
/// spec's n, p, and seed-determined directions) equals `target`. Closed form:
/// correlations are loading_scale^2 * (v_i . v_j).
pub fn calibrate_loading_scale(n: usize, p: usize, seed: u64, target: f64) -> Result<f64> {
    let probe = LowRankCopulaSpec {
        n,
        p,
        loading_scale: 0.0,
        seed,
    };
    probe.validate()?;
    if n < 2 {
        return Err(Error::InvalidSpec("calibration needs n >= 2".into()));
    }
    if !(0.0..1.0).contains(&target) {
        return Err(Error::InvalidSpec(
            "target correlation must be in [0, 1)".into(),
        ));
    }
    if target == 0.0 {
        return Ok(0.0);
    }
    let mut rng = replicate_rng(seed, 0);
    let dirs = loading_directions(&mut rng, n, p);
    let mut acc = 0.0;
    let mut count = 0usize;
    for i in 0..n {
        for j in (i + 1)..n {
            acc += dirs[i]
                .iter()
                .zip(&dirs[j])
                .map(|(a, b)| a * b)
                .sum::<f64>();
            count += 1;
        }
    }
    let mean_vv = acc / count as f64;
    let s2 = target / mean_vv;
    if s2 >= 1.0 {
        return Err(Error::InvalidSpec(format!(
            "target correlation {target} unreachable: would need loading_scale^2 = {s2:.3} >= 1"
        )));
    }
    Ok(s2.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_loading_gives_iid_calibrated_ks() {
        // KS rejection rate at nominal level under independence
        let mut rejections = 0;
        let reps = 2000;
        for r in 0..reps {
            let spec = LowRankCopulaSpec {
                n: 100,
                p: 3,
                loading_scale: 0.0,
                seed: 1000 + r,
            };
            let u = copula_dependent_uniforms(&spec).unwrap();
            let rep = crate::baselines::ks_test(&u, 0.05).unwrap();
            if rep.reject {
                rejections += 1;
            }
        }
        let rate = rejections as f64 / reps as f64;
        // 3 MC standard errors around 0.05
        assert!(
            (rate - 0.05).abs() < 3.0 * (0.05f64 * 0.95 / reps as f64).sqrt() + 1e-9,
            "{rate}"
        );
    }

    #[test]
    fn single_factor_strong_comovement() {
        let spec = LowRankCopulaSpec {
            n: 200,
            p: 1,
            loading_scale: 0.9,
            seed: 4,
        };
        // estimate mean pairwise correlation of u across replicates via the
        // variance of the replicate means
        let reps = 3000;
        let n = spec.n;
        let mut means = Vec::with_capacity(reps);
        let mut pooled_sum = 0.0;
        let mut pooled_sq = 0.0;
        for r in 0..reps {
            let s = LowRankCopulaSpec {
                seed: 77 + r as u64,
                ..spec.clone()
            };
            let u = copula_dependent_uniforms(&s).unwrap();
            let m = u.values().iter().sum::<f64>() / n as f64;
            means.push(m);
            for &x in u.values() {
                pooled_sum += x;
                pooled_sq += x * x;
            }
        }
        let total = (reps * n) as f64;
        let var_marginal = pooled_sq / total - (pooled_sum / total).powi(2);
        let mean_of_means = means.iter().sum::<f64>() / reps as f64;
        let var_means = means
            .iter()
            .map(|m| (m - mean_of_means).powi(2))
            .sum::<f64>()
            / reps as f64;
        let rho = (n as f64 * var_means - var_marginal) / ((n as f64 - 1.0) * var_marginal);
        assert!(rho > 0.5, "mean pairwise correlation {rho}");
    }

    #[test]
    fn marginal_uniformity_pooled_histogram() {
        // within-replicate dependence inflates bin-count variance well past
        // binomial, so standard errors come from between-replicate variation
        // of the per-replicate bin proportions
        const BINS: usize = 20;
        let reps = 2000u64;
        let n = 500usize;
        let mut sums = [0.0f64; BINS];
        let mut sumsqs = [0.0f64; BINS];
        for r in 0..reps {
            let spec = LowRankCopulaSpec {
                n,
                p: 2,
                loading_scale: 0.7,
                seed: 900 + r,
            };
            let u = copula_dependent_uniforms(&spec).unwrap();
            let mut counts = [0usize; BINS];
            for &x in u.values() {
                counts[((x * BINS as f64) as usize).min(BINS - 1)] += 1;
            }
            for b in 0..BINS {
                let prop = counts[b] as f64 / n as f64;
                sums[b] += prop;
                sumsqs[b] += prop * prop;
            }
        }
        let rf = reps as f64;
        for b in 0..BINS {
            let mean = sums[b] / rf;
            let var = (sumsqs[b] / rf - mean * mean).max(0.0);
            let se = (var / rf).sqrt();
            assert!(
                (mean - 1.0 / BINS as f64).abs() < 3.0 * se + 1e-12,
                "bin {b}: {mean} vs {} (se {se})",
                1.0 / BINS as f64
            );
        }
    }

    #[test]
    fn overlarge_loading_rejected() {
        let spec = LowRankCopulaSpec {
            n: 10,
            p: 1,
            loading_scale: 1.0,
            seed: 0,
        };
        assert!(copula_dependent_uniforms(&spec).is_err());
    }

    #[test]
    fn calibration_hits_target() {
        let seed = 12;
        let (n, p) = (150, 3);
        let target = 0.4;
        let s = calibrate_loading_scale(n, p, seed, target).unwrap();
        // recompute the realized mean pairwise latent correlation
        let mut rng = replicate_rng(seed, 0);
        let dirs = loading_directions(&mut rng, n, p);
        let mut acc = 0.0;
        let mut count = 0;
        for i in 0..n {
            for j in (i + 1)..n {
                acc += s
                    * s
                    * dirs[i]
                        .iter()
                        .zip(&dirs[j])
                        .map(|(a, b)| a * b)
                        .sum::<f64>();
                count += 1;
            }
        }
        assert!((acc / count as f64 - target).abs() < 1e-12);
        assert!(calibrate_loading_scale(n, p, seed, 0.999).is_err());
        assert_eq!(calibrate_loading_scale(n, p, seed, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let spec = LowRankCopulaSpec {
            n: 50,
            p: 2,
            loading_scale: 0.5,
            seed: 8,
        };
        let a = copula_dependent_uniforms(&spec).unwrap();
        let b = copula_dependent_uniforms(&spec).unwrap();
        assert_eq!(a.values(), b.values());
    }
}
