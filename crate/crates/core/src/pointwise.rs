//! Per-index p-values for the three pointwise uniformity tests (POT-C,
//! PRIT-C, PIET-C) and their Cauchy-space transforms.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::specfun::{self, Probability};

/// Whether a PIT sample is continuous or lives on a rank grid
/// {0, 1/s, ..., 1} from `s` comparison draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PitKind {
    Continuous,
    RankBased { s: u32 },
}

/// A sample of PIT values in [0, 1].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PitSample {
    values: Vec<f64>,
    kind: PitKind,
}

impl PitSample {
    pub fn new(values: Vec<f64>, kind: PitKind) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptySample);
        }
        for (i, &v) in values.iter().enumerate() {
            if !v.is_finite() || !(0.0..=1.0).contains(&v) {
                return Err(Error::Domain(format!(
                    "PIT value {v} at index {i} outside [0, 1]"
                )));
            }
            if let PitKind::RankBased { s } = kind {
                let scaled = v * s as f64;
                if (scaled - scaled.round()).abs() > 1e-9 {
                    return Err(Error::Domain(format!(
                        "rank-based PIT value {v} at index {i} not on the grid {{0, 1/{s}, ..., 1}}"
                    )));
                }
            }
        }
        Ok(PitSample { values, kind })
    }

    pub fn continuous(values: Vec<f64>) -> Result<Self> {
        Self::new(values, PitKind::Continuous)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn kind(&self) -> PitKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    PotC,
    PritC,
    PietC,
    Ks,
    Ad,
    Pitos,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Method::PotC => "potc",
            Method::PritC => "pritc",
            Method::PietC => "pietc",
            Method::Ks => "ks",
            Method::Ad => "ad",
            Method::Pitos => "pitos",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "potc" => Ok(Method::PotC),
            "pritc" => Ok(Method::PritC),
            "pietc" => Ok(Method::PietC),
            "ks" => Ok(Method::Ks),
            "ad" => Ok(Method::Ad),
            "pitos" => Ok(Method::Pitos),
            other => Err(Error::Parse(format!(
                "unknown method '{other}' (expected potc|pritc|pietc|ks|ad|pitos)"
            ))),
        }
    }
}

/// Reference distribution for PIET-C pseudo-values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Reference {
    /// Exponential with the given rate (asymmetric).
    Exp { rate: f64 },
    /// Standard normal (symmetric).
    Normal,
}

impl std::str::FromStr for Reference {
    type Err = Error;
    /// "normal", or "exp:<rate>" (also plain "exp" for rate 1).
    fn from_str(s: &str) -> Result<Self> {
        if s == "normal" {
            return Ok(Reference::Normal);
        }
        if s == "exp" {
            return Ok(Reference::Exp { rate: 1.0 });
        }
        if let Some(rate) = s.strip_prefix("exp:") {
            let rate: f64 = rate
                .parse()
                .map_err(|_| Error::Parse(format!("bad exponential rate '{rate}'")))?;
            if !(rate > 0.0) || !rate.is_finite() {
                return Err(Error::Parse(
                    "exponential rate must be a positive real".into(),
                ));
            }
            return Ok(Reference::Exp { rate });
        }
        Err(Error::Parse(format!(
            "unknown reference '{s}' (expected exp:<rate> or normal)"
        )))
    }
}

/// Per-index p-values plus the quantities they were computed from.
///
/// `index_map[k]` is the original input position behind entry `k` of the
/// p-value list (for PRIT-C it is the partition-point index instead, and the
/// lists have one entry per partition point rather than per observation).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PointwiseResult {
    pub method: Method,
    pub p_values: Vec<f64>,
    pub tested_quantity: Vec<f64>,
    pub cauchy_t: Vec<f64>,
    pub index_map: Vec<usize>,
    /// Set when the sample kind does not match the method's design
    /// (rank-based input to POT-C/PIET-C, continuous input to PRIT-C).
    pub kind_mismatch: bool,
}

pub(crate) fn cauchy_transform(p: f64) -> f64 {
    ((0.5 - p) * std::f64::consts::PI).tan()
}

fn doubled_tail(cdf: f64) -> f64 {
    (2.0 * cdf.min(1.0 - cdf)).min(1.0)
}

/// Stable argsort by value, ties broken by input index.
fn argsort(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
    idx
}

/// POT-C: beta-distribution p-values for each order statistic.
///
/// Results are in sorted order; `index_map` links each entry back to the
/// input position of the order statistic.
pub fn potc_pointwise(sample: &PitSample) -> Result<PointwiseResult> {
    let n = sample.len();
    let order = argsort(sample.values());
    for &o in &order {
        let v = sample.values()[o];
        if v == 0.0 || v == 1.0 {
            return Err(Error::BoundaryValue { index: o, value: v });
        }
    }
    let mut p_values = Vec::with_capacity(n);
    let mut tested = Vec::with_capacity(n);
    for (rank, &o) in order.iter().enumerate() {
        let u = sample.values()[o];
        let i = (rank + 1) as f64;
        let cdf = specfun::reg_inc_beta(u, i, n as f64 + 1.0 - i)?.get();
        p_values.push(doubled_tail(cdf));
        tested.push(u);
    }
    let cauchy_t = p_values.iter().map(|&p| cauchy_transform(p)).collect();
    Ok(PointwiseResult {
        method: Method::PotC,
        p_values,
        tested_quantity: tested,
        cauchy_t,
        index_map: order,
        kind_mismatch: !matches!(sample.kind(), PitKind::Continuous),
    })
}

/// Partition for PRIT-C: explicit interior points, or derived from the rank
/// grid of a rank-based sample.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum Partition {
    Auto,
    Points(Vec<f64>),
}

fn auto_partition(s: u32, n: usize) -> Vec<f64> {
    // Subset of the rank-grid interior {1/s, ..., (s-1)/s}, thinned to at
    // most n points by evenly spaced indices.
    let interior = (s as usize).saturating_sub(1);
    if interior <= n {
        (1..s as usize).map(|k| k as f64 / s as f64).collect()
    } else {
        (0..n)
            .map(|j| {
                let k = 1 + (j * (interior - 1)) / (n - 1).max(1);
                k as f64 / s as f64
            })
            .collect()
    }
}

/// PRIT-C: binomial p-values for scaled ECDF counts at partition points.
pub fn pritc_pointwise(sample: &PitSample, partition: &Partition) -> Result<PointwiseResult> {
    let n = sample.len();
    let points =
        match (partition, sample.kind()) {
            (Partition::Points(z), _) => z.clone(),
            (Partition::Auto, PitKind::RankBased { s }) => auto_partition(s, n),
            (Partition::Auto, PitKind::Continuous) => return Err(Error::InvalidPartition(
                "continuous samples need an explicit partition; Auto requires a rank-based sample"
                    .into(),
            )),
        };
    if points.is_empty() {
        return Err(Error::InvalidPartition("empty partition".into()));
    }
    for w in points.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::InvalidPartition(format!(
                "partition points must be strictly increasing: {} then {}",
                w[0], w[1]
            )));
        }
    }
    if points[0] <= 0.0 || *points.last().unwrap() >= 1.0 {
        return Err(Error::InvalidPartition(
            "partition points must lie strictly inside (0, 1)".into(),
        ));
    }

    let mut sorted = sample.values().to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut p_values = Vec::with_capacity(points.len());
    let mut tested = Vec::with_capacity(points.len());
    for &z in &points {
        // c = #{u_j <= z}
        let c = sorted.partition_point(|&u| u <= z) as i64;
        let zp = Probability::new(z)?;
        let lower = specfun::binom_cdf(c - 1, n as u64, zp)?.get();
        let upper = specfun::binom_cdf(c, n as u64, zp)?.get();
        p_values.push((2.0 * (1.0 - lower).min(upper)).min(1.0));
        tested.push(c as f64);
    }
    let cauchy_t = p_values.iter().map(|&p| cauchy_transform(p)).collect();
    Ok(PointwiseResult {
        method: Method::PritC,
        p_values,
        tested_quantity: tested,
        cauchy_t,
        index_map: (0..points.len()).collect(),
        kind_mismatch: matches!(sample.kind(), PitKind::Continuous),
    })
}

/// PIET-C: p-values from pseudo-values pushed through a continuous reference
/// distribution. Input order is preserved.
pub fn pietc_pointwise(sample: &PitSample, reference: Reference) -> Result<PointwiseResult> {
    let n = sample.len();
    for (i, &v) in sample.values().iter().enumerate() {
        if v == 0.0 || v == 1.0 {
            return Err(Error::BoundaryValue { index: i, value: v });
        }
    }
    let mut p_values = Vec::with_capacity(n);
    let mut tested = Vec::with_capacity(n);
    for &u in sample.values() {
        let up = Probability::new(u)?;
        match reference {
            Reference::Exp { rate } => {
                // asymmetric: 2 min{Pr(X > q), 1 - Pr(X > q)} = 2 min{1-u, u}
                tested.push(specfun::exp_quantile(up, rate)?);
                p_values.push((2.0 * u.min(1.0 - u)).min(1.0));
            }
            Reference::Normal => {
                // symmetric: 2 Pr(X > |q|)
                let q = specfun::normal_quantile(up)?;
                tested.push(q);
                p_values.push((2.0 * (1.0 - specfun::normal_cdf(q.abs()).get())).min(1.0));
            }
        }
    }
    let cauchy_t = p_values.iter().map(|&p| cauchy_transform(p)).collect();
    Ok(PointwiseResult {
        method: Method::PietC,
        p_values,
        tested_quantity: tested,
        cauchy_t,
        index_map: (0..n).collect(),
        kind_mismatch: !matches!(sample.kind(), PitKind::Continuous),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cont(values: &[f64]) -> PitSample {
        PitSample::continuous(values.to_vec()).unwrap()
    }

    #[test]
    fn sample_validation() {
        assert!(matches!(
            PitSample::continuous(vec![]),
            Err(Error::EmptySample)
        ));
        assert!(PitSample::continuous(vec![1.2]).is_err());
        assert!(PitSample::new(vec![0.25], PitKind::RankBased { s: 4 }).is_ok());
        assert!(PitSample::new(vec![0.3], PitKind::RankBased { s: 4 }).is_err());
    }

    #[test]
    fn potc_single_values() {
        let r = potc_pointwise(&cont(&[0.5])).unwrap();
        assert!((r.p_values[0] - 1.0).abs() < 1e-12);
        let r = potc_pointwise(&cont(&[0.975])).unwrap();
        assert!((r.p_values[0] - 0.05).abs() < 1e-12);
    }

    #[test]
    fn potc_n2() {
        // Beta(1,2) CDF 1-(1-x)^2 at 0.1 -> 0.19; Beta(2,1) CDF x^2 at 0.9 -> 0.81
        let r = potc_pointwise(&cont(&[0.1, 0.9])).unwrap();
        assert!((r.p_values[0] - 0.38).abs() < 1e-12);
        assert!((r.p_values[1] - 0.38).abs() < 1e-12);
    }

    #[test]
    fn potc_boundary_error() {
        assert!(matches!(
            potc_pointwise(&cont(&[0.0, 0.5])),
            Err(Error::BoundaryValue { index: 0, .. })
        ));
    }

    #[test]
    fn potc_kind_mismatch_is_warning_not_error() {
        let s = PitSample::new(vec![0.25, 0.5, 0.75], PitKind::RankBased { s: 4 }).unwrap();
        let r = potc_pointwise(&s).unwrap();
        assert!(r.kind_mismatch);
    }

    proptest! {
        #[test]
        fn potc_permutation_invariant(mut vals in proptest::collection::vec(0.001f64..0.999, 2..40)) {
            let a = potc_pointwise(&cont(&vals)).unwrap();
            vals.reverse();
            let b = potc_pointwise(&cont(&vals)).unwrap();
            prop_assert_eq!(a.p_values, b.p_values);
        }

        // asymmetric PIET-C depends on u only through min(u, 1-u), any rate
        #[test]
        fn pietc_exp_rate_invariant(u in 0.001f64..0.999, rate in 0.1f64..10.0) {
            let a = pietc_pointwise(&cont(&[u]), Reference::Exp { rate }).unwrap();
            let b = pietc_pointwise(&cont(&[1.0 - u]), Reference::Exp { rate: 1.0 }).unwrap();
            prop_assert!((a.p_values[0] - b.p_values[0]).abs() < 1e-12);
        }
    }

    #[test]
    fn pietc_examples() {
        let r = pietc_pointwise(&cont(&[0.5]), Reference::Exp { rate: 1.0 }).unwrap();
        assert!((r.p_values[0] - 1.0).abs() < 1e-12);
        let r = pietc_pointwise(&cont(&[0.975]), Reference::Exp { rate: 1.0 }).unwrap();
        assert!((r.p_values[0] - 0.05).abs() < 1e-12);
        let r = pietc_pointwise(&cont(&[0.975]), Reference::Normal).unwrap();
        assert!((r.p_values[0] - 0.05).abs() < 1e-9);
    }

    #[test]
    fn pritc_examples() {
        // n=4, z=0.5, c=2 -> 2*min(11/16, 11/16) clamped to 1
        let s = cont(&[0.1, 0.2, 0.8, 0.9]);
        let r = pritc_pointwise(&s, &Partition::Points(vec![0.5])).unwrap();
        assert!((r.p_values[0] - 1.0).abs() < 1e-12);
        assert!(r.kind_mismatch);

        // n=10, all u=0.05, z=0.5, c=10 -> 2*(1/1024)
        let s = cont(&[0.05; 10]);
        let r = pritc_pointwise(&s, &Partition::Points(vec![0.5])).unwrap();
        assert!((r.p_values[0] - 2.0 / 1024.0).abs() < 1e-13);

        // n=1, u=0.3, z=0.5, c=1 -> both tails >= 0.5
        let r = pritc_pointwise(&cont(&[0.3]), &Partition::Points(vec![0.5])).unwrap();
        assert!((r.p_values[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pritc_matches_pmf_brute_force() {
        // exact match against direct pmf summation for all n <= 12
        for n in 1usize..=12 {
            let vals: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
            let s = cont(&vals);
            for &z in &[0.21, 0.5, 0.83] {
                let r = pritc_pointwise(&s, &Partition::Points(vec![z])).unwrap();
                let c = vals.iter().filter(|&&u| u <= z).count() as i64;
                let pmf = |k: i64| -> f64 {
                    let lnc = crate::specfun::ln_gamma(n as f64 + 1.0)
                        - crate::specfun::ln_gamma(k as f64 + 1.0)
                        - crate::specfun::ln_gamma((n as i64 - k) as f64 + 1.0);
                    (lnc + k as f64 * z.ln() + (n as i64 - k) as f64 * (1.0 - z).ln()).exp()
                };
                let lower: f64 = (0..c).map(pmf).sum();
                let upper: f64 = (0..=c).map(pmf).sum();
                let expect = (2.0 * (1.0 - lower).min(upper)).min(1.0);
                assert!((r.p_values[0] - expect).abs() < 1e-12, "n={n} z={z}");
            }
        }
    }

    #[test]
    fn pritc_invalid_partitions() {
        let s = cont(&[0.5, 0.6]);
        assert!(pritc_pointwise(&s, &Partition::Points(vec![0.5, 0.4])).is_err());
        assert!(pritc_pointwise(&s, &Partition::Points(vec![0.0, 0.5])).is_err());
        assert!(pritc_pointwise(&s, &Partition::Auto).is_err());
    }

    #[test]
    fn pritc_auto_partition_from_rank_grid() {
        let s = PitSample::new(vec![0.25, 0.5, 0.75, 0.5], PitKind::RankBased { s: 4 }).unwrap();
        let r = pritc_pointwise(&s, &Partition::Auto).unwrap();
        assert_eq!(r.p_values.len(), 3); // {1/4, 2/4, 3/4}
        assert!(!r.kind_mismatch);

        // grid larger than n: thinned to n points, still strictly increasing
        let s = PitSample::new(vec![0.5, 0.25], PitKind::RankBased { s: 100 }).unwrap();
        let r = pritc_pointwise(&s, &Partition::Auto).unwrap();
        assert_eq!(r.p_values.len(), 2);
    }
}
