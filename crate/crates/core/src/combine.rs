//! Global p-values from pointwise p-values: Cauchy combination (CCT), its
//! truncated variant (TCCT), and Tippett's min-p baseline.
//!
//! CCT and TCCT approximate the tail of the combined statistic by a standard
//! Cauchy tail, which stays valid under arbitrary dependence between the
//! inputs. Tippett's p* uses the independence formula and is flagged as such
//! in reports.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pointwise::cauchy_transform;
use crate::specfun;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Combiner {
    Cct,
    Tcct,
    Tippett,
    None,
}

impl std::fmt::Display for Combiner {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Combiner::Cct => "cct",
            Combiner::Tcct => "tcct",
            Combiner::Tippett => "tippett",
            Combiner::None => "none",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for Combiner {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cct" => Ok(Combiner::Cct),
            "tcct" => Ok(Combiner::Tcct),
            "tippett" => Ok(Combiner::Tippett),
            other => Err(Error::Parse(format!(
                "unknown combiner '{other}' (expected cct|tcct|tippett)"
            ))),
        }
    }
}

/// Cauchy combination test: T = (1/n) sum tan{(0.5 - p_i) pi},
/// p* = 1 - F_Cauchy(T).
pub fn cct(p_values: &[f64]) -> Result<(f64, f64)> {
    if p_values.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut sum = 0.0;
    for (i, &p) in p_values.iter().enumerate() {
        if p <= 0.0 || p >= 1.0 {
            return Err(Error::DegenerateP { index: i, value: p });
        }
        sum += cauchy_transform(p);
    }
    let t = sum / p_values.len() as f64;
    Ok((t, 1.0 - specfun::cauchy_cdf(t).get()))
}

/// Truncated Cauchy combination test: only terms with p_i < 0.5 enter the
/// sum, still divided by the full n. p_i = 1 is allowed (its term is zeroed
/// by the indicator); p_i = 0 is still an error.
pub fn tcct(p_values: &[f64]) -> Result<(f64, f64)> {
    if p_values.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut sum = 0.0;
    for (i, &p) in p_values.iter().enumerate() {
        if p <= 0.0 {
            return Err(Error::DegenerateP { index: i, value: p });
        }
        if p < 0.5 {
            sum += cauchy_transform(p);
        }
    }
    let t = sum / p_values.len() as f64;
    Ok((t, 1.0 - specfun::cauchy_cdf(t).get()))
}

/// Tippett's minimal p-value method with the independence (Sidak-style)
/// global p-value: p* = 1 - (1 - p_min)^n.
pub fn tippett_min_p(p_values: &[f64]) -> Result<(f64, f64)> {
    if p_values.is_empty() {
        return Err(Error::EmptySample);
    }
    let p_min = p_values.iter().cloned().fold(f64::INFINITY, f64::min);
    let n = p_values.len() as f64;
    let p_star = -(n * (-p_min).ln_1p()).exp_m1();
    Ok((p_min, p_star))
}
