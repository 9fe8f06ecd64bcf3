//! Monte Carlo harness: declarative experiment specs, parallel replicates
//! with counter-based RNG streams, and aggregated rejection rates.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::combine::Combiner;
use crate::combined_test;
use crate::error::{Error, Result};
use crate::pitlab::conjugate::{
    exact_loo_pit, exact_posterior_pit, spp_pit, ConjugateHierSpec, Dgp,
};
use crate::pitlab::copula::{copula_dependent_uniforms_with, LowRankCopulaSpec};
use crate::pitlab::{replicate_rng, splitmix64};
use crate::pointwise::{
    pietc_pointwise, potc_pointwise, pritc_pointwise, Method, Partition, PitSample, Reference,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PitVariant {
    Loo,
    Posterior,
    Spp,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "model")]
pub enum SimModel {
    Conjugate(ConjugateHierSpec),
    Copula(LowRankCopulaSpec),
}

/// One test in the battery: a method plus the settings it needs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MethodSpec {
    pub method: Method,
    pub combiner: Combiner,
    pub reference: Reference,
    /// Explicit PRIT-C partition (required: the simulated samples are
    /// continuous, so Auto is unavailable).
    pub partition: Option<Vec<f64>>,
    /// PITOS conditional-pair budget; default 2n.
    pub pair_budget: Option<usize>,
}

impl MethodSpec {
    pub fn label(&self) -> String {
        match self.method {
            Method::Ks | Method::Ad | Method::Pitos => self.method.to_string(),
            _ => format!("{}+{}", self.method, self.combiner),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimSpec {
    pub model: SimModel,
    /// Which PIT variant to compute (conjugate model only; ignored for the
    /// copula generator, which emits uniforms directly).
    pub pit: PitVariant,
    pub methods: Vec<MethodSpec>,
    pub replicates: usize,
    pub alphas: Vec<f64>,
    pub seed: u64,
    /// Number of replicate failures tolerated before the run aborts.
    pub error_budget: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RejectionRate {
    pub method: String,
    pub alpha: f64,
    pub rate: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimOutcome {
    pub replicates: usize,
    pub completed: usize,
    pub failed: usize,
    pub seed: u64,
    /// Per-method global p-values, one per completed replicate, in replicate
    /// order.
    pub p_values: BTreeMap<String, Vec<f64>>,
    pub rejection_rates: Vec<RejectionRate>,
    /// Mean pairwise correlation of the PIT values, estimated from the
    /// between-replicate variance of the per-replicate PIT means.
    pub mean_pairwise_pit_corr: Option<f64>,
}

impl SimSpec {
    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::InvalidSpec("replicates must be >= 1".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::InvalidSpec("at least one method is required".into()));
        }
        if self.alphas.is_empty() || self.alphas.iter().any(|a| !(*a > 0.0 && *a < 1.0)) {
            return Err(Error::InvalidSpec("alphas must be in (0, 1)".into()));
        }
        match &self.model {
            SimModel::Conjugate(c) => {
                c.validate()?;
                if c.dgp.is_discrete() {
                    return Err(Error::InvalidSpec(
                        "discrete DGPs have no conjugate continuous predictive; generate PIT \
                         files externally (randomized PITs) or use the copula model"
                            .into(),
                    ));
                }
            }
            SimModel::Copula(c) => c.validate()?,
        }
        for m in &self.methods {
            if m.method == Method::PritC && m.partition.is_none() {
                return Err(Error::InvalidSpec(
                    "pritc on simulated (continuous) samples needs an explicit partition".into(),
                ));
            }
        }
        Ok(())
    }
}

struct RepOut {
    p: Vec<f64>,
    sum_u: f64,
    sumsq_u: f64,
    n: usize,
}

fn one_replicate(spec: &SimSpec, r: u64) -> Result<RepOut> {
    let mut rng = replicate_rng(spec.seed, r);
    let sample: PitSample = match &spec.model {
        SimModel::Conjugate(c) => {
            let data = c.sample_data_with(&mut rng)?;
            match spec.pit {
                PitVariant::Loo => exact_loo_pit(c, &data)?,
                PitVariant::Posterior => exact_posterior_pit(c, &data)?,
                PitVariant::Spp => spp_pit(c, &data, splitmix64(spec.seed ^ splitmix64(r)))?,
            }
        }
        SimModel::Copula(c) => copula_dependent_uniforms_with(c, &mut rng)?,
    };
    let alpha = spec.alphas[0];
    let mut p = Vec::with_capacity(spec.methods.len());
    for m in &spec.methods {
        let report = match m.method {
            Method::PotC => combined_test(&potc_pointwise(&sample)?, m.combiner, alpha)?,
            Method::PritC => {
                let partition = Partition::Points(m.partition.clone().unwrap());
                combined_test(&pritc_pointwise(&sample, &partition)?, m.combiner, alpha)?
            }
            Method::PietC => {
                combined_test(&pietc_pointwise(&sample, m.reference)?, m.combiner, alpha)?
            }
            Method::Ks => crate::baselines::ks_test(&sample, alpha)?,
            Method::Ad => crate::baselines::ad_test(&sample, alpha)?,
            Method::Pitos => {
                crate::pitos::pitos_test(&sample, m.pair_budget.unwrap_or(2 * sample.len()), alpha)?
            }
        };
        p.push(report.global_p);
    }
    let sum_u: f64 = sample.values().iter().sum();
    let sumsq_u: f64 = sample.values().iter().map(|u| u * u).sum();
    Ok(RepOut {
        p,
        sum_u,
        sumsq_u,
        n: sample.len(),
    })
}

/// Runs all replicates, up to `parallelism` at a time. Output is identical
/// for any parallelism degree: each replicate owns a counter-derived RNG
/// stream and results are collected by index.
pub fn run_experiment(spec: &SimSpec, parallelism: usize) -> Result<SimOutcome> {
    spec.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism.max(1))
        .build()
        .map_err(|e| Error::InvalidSpec(format!("thread pool: {e}")))?;
    let results: Vec<std::result::Result<RepOut, String>> = pool.install(|| {
        (0..spec.replicates as u64)
            .into_par_iter()
            .map(|r| {
                one_replicate(spec, r).map_err(|e| {
                    Error::Replicate {
                        replicate: r as usize,
                        source: Box::new(e),
                    }
                    .to_string()
                })
            })
            .collect()
    });

    let mut failures = 0usize;
    let mut first_failure: Option<String> = None;
    let mut per_method: Vec<Vec<f64>> = vec![Vec::new(); spec.methods.len()];
    let (mut means, mut pooled_sum, mut pooled_sq, mut pooled_n) = (Vec::new(), 0.0, 0.0, 0usize);
    for res in results {
        match res {
            Ok(out) => {
                for (k, &p) in out.p.iter().enumerate() {
                    per_method[k].push(p);
                }
                means.push(out.sum_u / out.n as f64);
                pooled_sum += out.sum_u;
                pooled_sq += out.sumsq_u;
                pooled_n += out.n;
            }
            Err(msg) => {
                failures += 1;
                first_failure.get_or_insert(msg);
            }
        }
    }
    if failures > spec.error_budget {
        return Err(Error::ErrorBudget {
            failures,
            budget: spec.error_budget,
            first: first_failure.unwrap_or_default(),
        });
    }
    let completed = spec.replicates - failures;
    if completed == 0 {
        return Err(Error::EmptySample);
    }

    let mut p_values = BTreeMap::new();
    let mut rejection_rates = Vec::new();
    for (k, m) in spec.methods.iter().enumerate() {
        let label = m.label();
        for &alpha in &spec.alphas {
            let hits = per_method[k].iter().filter(|&&p| p <= alpha).count();
            rejection_rates.push(RejectionRate {
                method: label.clone(),
                alpha,
                rate: hits as f64 / completed as f64,
            });
        }
        p_values.insert(label, std::mem::take(&mut per_method[k]));
    }

    let n = pooled_n / completed;
    let mean_pairwise_pit_corr = if completed >= 2 && n >= 2 {
        let total = pooled_n as f64;
        let var_marginal = pooled_sq / total - (pooled_sum / total).powi(2);
        let grand = means.iter().sum::<f64>() / completed as f64;
        let var_means = means.iter().map(|m| (m - grand).powi(2)).sum::<f64>() / completed as f64;
        if var_marginal > 0.0 {
            Some((n as f64 * var_means - var_marginal) / ((n as f64 - 1.0) * var_marginal))
        } else {
            None
        }
    } else {
        None
    };

    Ok(SimOutcome {
        replicates: spec.replicates,
        completed,
        failed: failures,
        seed: spec.seed,
        p_values,
        rejection_rates,
        mean_pairwise_pit_corr,
    })
}

/// Flat on-disk form of [`SimSpec`]: one key-value table, unknown keys are
/// errors. Model-specific keys are validated against the chosen `model`.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSimSpec {
    model: String,
    // conjugate model
    groups: Option<usize>,
    per_group: Option<usize>,
    sigma: Option<f64>,
    tau: Option<f64>,
    mu0: Option<f64>,
    dgp: Option<String>,
    nu: Option<f64>,
    sigma_log: Option<f64>,
    alpha: Option<f64>,
    beta: Option<f64>,
    trials: Option<u64>,
    phi: Option<f64>,
    // copula model
    n: Option<usize>,
    p: Option<usize>,
    loading_scale: Option<f64>,
    // battery
    pit: Option<String>,
    methods: Vec<String>,
    combiner: Option<String>,
    reference: Option<String>,
    partition: Option<Vec<f64>>,
    pair_budget: Option<usize>,
    replicates: usize,
    alphas: Option<Vec<f64>>,
    seed: u64,
    error_budget: Option<usize>,
}

fn require<T>(v: Option<T>, key: &str) -> Result<T> {
    v.ok_or_else(|| Error::InvalidSpec(format!("missing key '{key}'")))
}

/// Parses the flat TOML experiment description.
pub fn parse_sim_spec(text: &str) -> Result<SimSpec> {
    let raw: RawSimSpec = toml::from_str(text).map_err(|e| Error::InvalidSpec(e.to_string()))?;
    let model = match raw.model.as_str() {
        "conjugate" => {
            let dgp = match require(raw.dgp.as_deref(), "dgp")? {
                "normal" => Dgp::Normal,
                "student_t" => Dgp::StudentT {
                    nu: require(raw.nu, "nu")?,
                },
                "lognormal" => Dgp::LogNormal {
                    sigma_log: require(raw.sigma_log, "sigma_log")?,
                },
                "generalized_normal" => Dgp::GeneralizedNormal {
                    alpha: require(raw.alpha, "alpha")?,
                    beta: require(raw.beta, "beta")?,
                },
                "beta_binomial" => Dgp::BetaBinomial {
                    trials: require(raw.trials, "trials")?,
                    phi: require(raw.phi, "phi")?,
                },
                "neg_binomial" => Dgp::NegBinomial {
                    phi: require(raw.phi, "phi")?,
                },
                other => return Err(Error::InvalidSpec(format!("unknown dgp '{other}'"))),
            };
            SimModel::Conjugate(ConjugateHierSpec {
                groups: require(raw.groups, "groups")?,
                per_group: require(raw.per_group, "per_group")?,
                sigma: require(raw.sigma, "sigma")?,
                tau: require(raw.tau, "tau")?,
                mu0: raw.mu0.unwrap_or(0.0),
                dgp,
                seed: raw.seed,
            })
        }
        "copula" => SimModel::Copula(LowRankCopulaSpec {
            n: require(raw.n, "n")?,
            p: require(raw.p, "p")?,
            loading_scale: require(raw.loading_scale, "loading_scale")?,
            seed: raw.seed,
        }),
        other => {
            return Err(Error::InvalidSpec(format!(
                "unknown model '{other}' (expected conjugate|copula)"
            )))
        }
    };
    let pit = match raw.pit.as_deref().unwrap_or("loo") {
        "loo" => PitVariant::Loo,
        "posterior" => PitVariant::Posterior,
        "spp" => PitVariant::Spp,
        other => return Err(Error::InvalidSpec(format!("unknown pit variant '{other}'"))),
    };
    let combiner: Combiner = raw.combiner.as_deref().unwrap_or("cct").parse()?;
    let reference: Reference = raw.reference.as_deref().unwrap_or("normal").parse()?;
    let methods = raw
        .methods
        .iter()
        .map(|s| {
            Ok(MethodSpec {
                method: s.parse()?,
                combiner,
                reference,
                partition: raw.partition.clone(),
                pair_budget: raw.pair_budget,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let spec = SimSpec {
        model,
        pit,
        methods,
        replicates: raw.replicates,
        alphas: raw.alphas.unwrap_or_else(|| vec![0.05]),
        seed: raw.seed,
        error_budget: raw.error_budget.unwrap_or(0),
    };
    spec.validate()?;
    Ok(spec)
}
