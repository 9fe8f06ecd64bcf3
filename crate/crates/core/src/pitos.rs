//! POT-C augmented with conditional order-statistic tests over index pairs,
//! Cauchy-aggregated with a 1.15x conservativeness correction. Restricted to
//! continuous samples.

use serde::{Deserialize, Serialize};

use crate::combine::{cct, Combiner};
use crate::error::{Error, Result};
use crate::pointwise::{potc_pointwise, Method, PitKind, PitSample};
use crate::report::TestReport;
use crate::specfun::reg_inc_beta;

/// Order-statistic index pairs (1-based), deduplicated.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairSet {
    pub pairs: Vec<(usize, usize)>,
    pub target_count: usize,
}

fn halton(index: usize, base: usize) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    let mut i = index;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

/// Deterministic low-discrepancy pair selection: Halton points on [0,1]^2
/// mapped to 1-based indices, duplicates and the diagonal skipped.
pub fn halton_pairs(n: usize, budget: usize) -> Result<PairSet> {
    if n < 2 {
        return Err(Error::Domain("pair selection needs n >= 2".into()));
    }
    if budget == 0 {
        return Err(Error::Domain("pair budget must be positive".into()));
    }
    let max_pairs = n * (n - 1);
    let target = budget.min(max_pairs);
    let mut seen = std::collections::BTreeSet::new();
    let mut pairs = Vec::with_capacity(target);
    let mut k = 1usize;
    // generation cap keeps degenerate small-n cases from spinning
    while pairs.len() < target && k <= 1000 * max_pairs.max(budget) {
        let i = ((halton(k, 2) * n as f64) as usize).min(n - 1) + 1;
        let j = ((halton(k, 3) * n as f64) as usize).min(n - 1) + 1;
        k += 1;
        if i != j && seen.insert((i, j)) {
            pairs.push((i, j));
        }
    }
    Ok(PairSet {
        pairs,
        target_count: target,
    })
}

/// Doubled-tail p-value from the conditional beta law of u_(j) given u_(i).
pub fn conditional_p(u_sorted: &[f64], i: usize, j: usize) -> Result<f64> {
    let n = u_sorted.len();
    if i == j || i < 1 || j < 1 || i > n || j > n {
        return Err(Error::Domain(format!("invalid pair ({i}, {j}) for n={n}")));
    }
    let ui = u_sorted[i - 1];
    let uj = u_sorted[j - 1];
    for (idx, u) in [(i, ui), (j, uj)] {
        if u == 0.0 || u == 1.0 {
            return Err(Error::BoundaryValue {
                index: idx - 1,
                value: u,
            });
        }
    }
    if ui == uj {
        return Err(Error::TieError { i, j });
    }
    let q = if i < j {
        let denom = 1.0 - ui;
        if denom <= 0.0 {
            return Err(Error::TieError { i, j });
        }
        reg_inc_beta((uj - ui) / denom, (j - i) as f64, (n + 1 - j) as f64)?.get()
    } else {
        reg_inc_beta(uj / ui, j as f64, (i - j) as f64)?.get()
    };
    Ok((2.0 * q.min(1.0 - q)).min(1.0))
}

/// Full PITOS test: marginal POT-C p-values plus conditional pair p-values,
/// combined with CCT; the corrected p* multiplies the raw p* by 1.15
/// (clamped to 1). Both are reported.
pub fn pitos_test(sample: &PitSample, pair_budget: usize, alpha: f64) -> Result<TestReport> {
    if sample.len() < 2 {
        return Err(Error::Domain("PITOS needs n >= 2".into()));
    }
    if !matches!(sample.kind(), PitKind::Continuous) {
        return Err(Error::Domain(
            "PITOS is restricted to continuous samples; rank-based PIT values are refused".into(),
        ));
    }
    let n = sample.len();
    let marginal = potc_pointwise(sample)?;
    let mut u_sorted = sample.values().to_vec();
    u_sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let pair_set = halton_pairs(n, pair_budget)?;
    let mut p_all = marginal.p_values.clone();
    let mut dropped = 0usize;
    for &(i, j) in &pair_set.pairs {
        match conditional_p(&u_sorted, i, j) {
            Ok(p) => p_all.push(p),
            // numerically failed pairs are dropped and counted
            Err(_) => dropped += 1,
        }
    }
    let (t, raw_p) = cct(&p_all)?;
    let corrected = (1.15 * raw_p).min(1.0);
    let mut report = TestReport::new(Method::Pitos, Combiner::Cct, t, corrected, alpha, n);
    report.raw_global_p = Some(raw_p);
    report.dropped_pairs = Some(dropped);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conditional_closed_forms() {
        // n=2: forward ratio 0.5 with Beta(1,1); backward ratio 1/3
        let u = [0.2, 0.6];
        let p = conditional_p(&u, 1, 2).unwrap();
        assert!((p - 1.0).abs() < 1e-12);
        let p = conditional_p(&u, 2, 1).unwrap();
        assert!((p - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn conditional_tie_error() {
        let u = [0.4, 0.4];
        assert!(matches!(
            conditional_p(&u, 1, 2),
            Err(Error::TieError { .. })
        ));
    }

    #[test]
    fn conditional_rejects_bad_pairs() {
        let u = [0.2, 0.6];
        assert!(conditional_p(&u, 1, 1).is_err());
        assert!(conditional_p(&u, 0, 2).is_err());
        assert!(conditional_p(&u, 1, 3).is_err());
    }

    #[test]
    fn halton_pairs_no_duplicates() {
        for n in [2usize, 5, 20, 200] {
            let ps = halton_pairs(n, 2 * n).unwrap();
            let set: std::collections::BTreeSet<_> = ps.pairs.iter().collect();
            assert_eq!(set.len(), ps.pairs.len());
            assert_eq!(ps.pairs.len(), ps.target_count);
            for &(i, j) in &ps.pairs {
                assert!(i != j && (1..=n).contains(&i) && (1..=n).contains(&j));
            }
        }
    }

    #[test]
    fn halton_pairs_deterministic() {
        assert_eq!(
            halton_pairs(50, 100).unwrap().pairs,
            halton_pairs(50, 100).unwrap().pairs
        );
    }

    #[test]
    fn pitos_composes_from_parts() {
        // n=2, budget=2: marginals + both ordered pairs
        let sample = PitSample::continuous(vec![0.2, 0.6]).unwrap();
        let report = pitos_test(&sample, 2, 0.05).unwrap();

        let marg = potc_pointwise(&sample).unwrap();
        let pairs = halton_pairs(2, 2).unwrap().pairs;
        let u = [0.2, 0.6];
        let mut all = marg.p_values.clone();
        for &(i, j) in &pairs {
            all.push(conditional_p(&u, i, j).unwrap());
        }
        let (t, raw) = cct(&all).unwrap();
        assert!((report.statistic - t).abs() < 1e-15);
        assert!((report.raw_global_p.unwrap() - raw).abs() < 1e-15);
        assert!((report.global_p - (1.15 * raw).min(1.0)).abs() < 1e-15);
        assert_eq!(report.dropped_pairs, Some(0));
    }

    #[test]
    fn pitos_refuses_rank_based() {
        let s = PitSample::new(vec![0.25, 0.5], PitKind::RankBased { s: 4 }).unwrap();
        assert!(pitos_test(&s, 4, 0.05).is_err());
    }
}
