//! Conjugate hierarchical normal model with known hyperparameters: exact
//! leave-one-out, posterior, and sampled-posterior PIT values in closed form,
//! plus the misspecified data generators used in the power studies.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Binomial, Distribution, Gamma, Poisson, StandardNormal, StudentT};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pitlab::replicate_rng;
use crate::pointwise::PitSample;
use crate::specfun::{ln_gamma, normal_cdf, Probability};

/// Data-generating process for the within-group observations. `Normal` is the
/// well-specified case; the others are controlled misspecifications.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "dgp")]
pub enum Dgp {
    /// y = mu_g + Normal(0, sigma) noise; matches the fitted model.
    Normal,
    /// y = mu_g + sigma * t_nu noise (heavy tails).
    StudentT { nu: f64 },
    /// y = mu_g + mean-centered LogNormal(0, sigma_log) noise (skew).
    LogNormal { sigma_log: f64 },
    /// y = mu_g + generalized-normal(alpha, beta) noise; beta > 2 is
    /// lighter-tailed than normal.
    GeneralizedNormal { alpha: f64, beta: f64 },
    /// counts: y ~ BetaBinomial(trials, logistic(mu_g), precision phi).
    BetaBinomial { trials: u64, phi: f64 },
    /// counts: y ~ NegBinomial with mean exp(mu_g) and dispersion phi
    /// (gamma-Poisson mixture).
    NegBinomial { phi: f64 },
}

impl Dgp {
    pub fn is_discrete(&self) -> bool {
        matches!(self, Dgp::BetaBinomial { .. } | Dgp::NegBinomial { .. })
    }
}

/// Hierarchical normal model y_ig ~ N(mu_g, sigma^2), mu_g ~ N(mu0, tau^2),
/// with sigma, tau, mu0 known, so every predictive distribution is available
/// in closed form.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConjugateHierSpec {
    /// Number of groups G.
    pub groups: usize,
    /// Observations per group m.
    pub per_group: usize,
    /// Within-group sd of the fitted model.
    pub sigma: f64,
    /// Group-effect sd.
    pub tau: f64,
    /// Population mean.
    pub mu0: f64,
    pub dgp: Dgp,
    pub seed: u64,
}

impl ConjugateHierSpec {
    pub fn validate(&self) -> Result<()> {
        if self.groups == 0 || self.per_group == 0 || self.groups * self.per_group < 2 {
            return Err(Error::InvalidSpec("need G*m >= 2 observations".into()));
        }
        for (name, v) in [("sigma", self.sigma), ("tau", self.tau)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidSpec(format!(
                    "{name} must be a positive finite real"
                )));
            }
        }
        if !self.mu0.is_finite() {
            return Err(Error::InvalidSpec("mu0 must be finite".into()));
        }
        match self.dgp {
            Dgp::StudentT { nu } if !(nu > 0.0) => {
                Err(Error::InvalidSpec("student-t nu must be positive".into()))
            }
            Dgp::LogNormal { sigma_log } if !(sigma_log > 0.0) => Err(Error::InvalidSpec(
                "lognormal sigma_log must be positive".into(),
            )),
            Dgp::GeneralizedNormal { alpha, beta } if !(alpha > 0.0 && beta > 0.0) => Err(
                Error::InvalidSpec("generalized-normal alpha, beta must be positive".into()),
            ),
            Dgp::BetaBinomial { trials, phi } if trials == 0 || !(phi > 0.0) => Err(
                Error::InvalidSpec("beta-binomial needs trials >= 1 and phi > 0".into()),
            ),
            Dgp::NegBinomial { phi } if !(phi > 0.0) => Err(Error::InvalidSpec(
                "negbinomial phi must be positive".into(),
            )),
            _ => Ok(()),
        }
    }

    /// One dataset (G x m) from the DGP, using the spec's own seed.
    pub fn sample_data(&self) -> Result<Vec<Vec<f64>>> {
        let mut rng = replicate_rng(self.seed, 0);
        self.sample_data_with(&mut rng)
    }

    /// One dataset from an externally managed RNG stream.
    pub fn sample_data_with(&self, rng: &mut ChaCha8Rng) -> Result<Vec<Vec<f64>>> {
        self.validate()?;
        let mut data = Vec::with_capacity(self.groups);
        for _ in 0..self.groups {
            let z: f64 = rng.sample(StandardNormal);
            let mu_g = self.mu0 + self.tau * z;
            let mut row = Vec::with_capacity(self.per_group);
            for _ in 0..self.per_group {
                row.push(self.draw_observation(mu_g, rng)?);
            }
            data.push(row);
        }
        Ok(data)
    }

    fn draw_observation(&self, mu_g: f64, rng: &mut ChaCha8Rng) -> Result<f64> {
        let bad = |e: &dyn std::fmt::Display| Error::InvalidSpec(format!("dgp parameters: {e}"));
        Ok(match self.dgp {
            Dgp::Normal => {
                let z: f64 = rng.sample(StandardNormal);
                mu_g + self.sigma * z
            }
            Dgp::StudentT { nu } => {
                let t = StudentT::new(nu).map_err(|e| bad(&e))?.sample(rng);
                mu_g + self.sigma * t
            }
            Dgp::LogNormal { sigma_log } => {
                let z: f64 = rng.sample(StandardNormal);
                // centered so the noise has mean zero
                mu_g + (sigma_log * z).exp() - (0.5 * sigma_log * sigma_log).exp()
            }
            Dgp::GeneralizedNormal { alpha, beta } => {
                // |x| = alpha * Gamma(1/beta, 1)^{1/beta}, random sign
                let g = Gamma::new(1.0 / beta, 1.0)
                    .map_err(|e| bad(&e))?
                    .sample(rng);
                let mag = alpha * g.powf(1.0 / beta);
                mu_g + if rng.gen_bool(0.5) { mag } else { -mag }
            }
            Dgp::BetaBinomial { trials, phi } => {
                let p_g = 1.0 / (1.0 + (-mu_g).exp());
                let a = (p_g * phi).max(1e-12);
                let b = ((1.0 - p_g) * phi).max(1e-12);
                let p = Beta::new(a, b).map_err(|e| bad(&e))?.sample(rng);
                Binomial::new(trials, p.clamp(0.0, 1.0))
                    .map_err(|e| bad(&e))?
                    .sample(rng) as f64
            }
            Dgp::NegBinomial { phi } => {
                let mean = mu_g.exp();
                let lambda = Gamma::new(phi, mean / phi)
                    .map_err(|e| bad(&e))?
                    .sample(rng);
                if lambda <= 0.0 {
                    0.0
                } else {
                    Poisson::new(lambda).map_err(|e| bad(&e))?.sample(rng)
                }
            }
        })
    }
}

/// Standard deviation of the generalized-normal(alpha, beta) law:
/// alpha * sqrt(Gamma(3/beta) / Gamma(1/beta)). Used to variance-match the
/// fitted model so only the tail shape is misspecified.
pub fn generalized_normal_sd(alpha: f64, beta: f64) -> f64 {
    alpha * (0.5 * (ln_gamma(3.0 / beta) - ln_gamma(1.0 / beta))).exp()
}

fn check_data(spec: &ConjugateHierSpec, data: &[Vec<f64>]) -> Result<()> {
    spec.validate()?;
    if data.len() != spec.groups || data.iter().any(|g| g.len() != spec.per_group) {
        return Err(Error::InvalidSpec(format!(
            "data shape does not match spec ({} groups x {} per group)",
            spec.groups, spec.per_group
        )));
    }
    for (i, v) in data.iter().flatten().enumerate() {
        if !v.is_finite() {
            return Err(Error::NonFiniteInput(i));
        }
    }
    Ok(())
}

fn predictive_pits(
    spec: &ConjugateHierSpec,
    data: &[Vec<f64>],
    leave_one_out: bool,
) -> Result<PitSample> {
    check_data(spec, data)?;
    let prec0 = 1.0 / (spec.tau * spec.tau);
    let prec_obs = 1.0 / (spec.sigma * spec.sigma);
    let k = if leave_one_out {
        spec.per_group - 1
    } else {
        spec.per_group
    } as f64;
    let prec = prec0 + k * prec_obs;
    if !(prec > 0.0) || !prec.is_finite() {
        return Err(Error::Domain(
            "improper predictive: posterior precision for mu_g is not positive and finite".into(),
        ));
    }
    let mut pits = Vec::with_capacity(spec.groups * spec.per_group);
    for group in data {
        let sum: f64 = group.iter().sum();
        for &y in group {
            let cond_sum = if leave_one_out { sum - y } else { sum };
            let mean = (prec0 * spec.mu0 + prec_obs * cond_sum) / prec;
            let sd = (1.0 / prec + spec.sigma * spec.sigma).sqrt();
            pits.push(normal_cdf((y - mean) / sd).get());
        }
    }
    PitSample::continuous(pits)
}

/// Exact leave-one-out PIT values: for each observation, the predictive
/// distribution conditions on the other m-1 members of its group.
pub fn exact_loo_pit(spec: &ConjugateHierSpec, data: &[Vec<f64>]) -> Result<PitSample> {
    if spec.per_group == 1 && spec.tau * spec.tau > 1e12 {
        // leaving out the only observation with a flat prior: improper
        return Err(Error::Domain(
            "improper LOO posterior: m = 1 with an effectively flat group prior".into(),
        ));
    }
    predictive_pits(spec, data, true)
}

/// Exact posterior-predictive PIT values: each observation is also included
/// in its own conditioning set, pulling the PITs toward 1/2.
pub fn exact_posterior_pit(spec: &ConjugateHierSpec, data: &[Vec<f64>]) -> Result<PitSample> {
    predictive_pits(spec, data, false)
}

/// Sampled-posterior PITs: one draw mu_g* from each group's full posterior,
/// PIT = Phi((y - mu_g*)/sigma). Bit-reproducible for a fixed draw seed.
pub fn spp_pit(spec: &ConjugateHierSpec, data: &[Vec<f64>], draw_seed: u64) -> Result<PitSample> {
    check_data(spec, data)?;
    let prec0 = 1.0 / (spec.tau * spec.tau);
    let prec_obs = 1.0 / (spec.sigma * spec.sigma);
    let prec = prec0 + spec.per_group as f64 * prec_obs;
    let mut rng = replicate_rng(draw_seed, 1);
    let mut pits = Vec::with_capacity(spec.groups * spec.per_group);
    for group in data {
        let sum: f64 = group.iter().sum();
        let mean = (prec0 * spec.mu0 + prec_obs * sum) / prec;
        let z: f64 = rng.sample(StandardNormal);
        let mu_star = mean + z / prec.sqrt();
        for &y in group {
            pits.push(normal_cdf((y - mu_star) / spec.sigma).get());
        }
    }
    PitSample::continuous(pits)
}

/// Randomized PIT for a discrete observation: a uniform point inside the CDF
/// jump [F(y-1), F(y)].
pub fn randomized_pit_discrete(
    cdf_at_y: Probability,
    cdf_at_y_minus_1: Probability,
    v: Probability,
) -> Result<Probability> {
    let hi = cdf_at_y.get();
    let lo = cdf_at_y_minus_1.get();
    if lo > hi {
        return Err(Error::Domain(format!(
            "discrete CDF ordering violated: F(y-1) = {lo} > F(y) = {hi}"
        )));
    }
    Probability::new(lo + v.get() * (hi - lo))
}
