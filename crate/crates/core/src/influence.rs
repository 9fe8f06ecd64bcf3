//! Shapley-value influence attribution over the Cauchy transforms, and the
//! influential-region / tilted-ECDF data behind the graphical diagnosis.
//!
//! The cooperative game assigns coalition S the average of its members'
//! Cauchy transforms t_i (empty coalition gets 0), so the grand value is the
//! Cauchy test statistic T. The closed form for each player's expected
//! marginal contribution only needs the total of the t_j, making the whole
//! attribution O(n).

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pointwise::{Method, PitSample, PointwiseResult};

/// One point of the (tilted) ECDF plot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EcdfPoint {
    pub x: f64,
    pub ecdf: f64,
    pub tilted: f64,
    pub highlighted: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InfluenceReport {
    pub phi: Vec<f64>,
    pub gamma: f64,
    pub influential: BTreeSet<usize>,
    pub harmonic_n: f64,
    pub grand_value: f64,
    pub ecdf_points: Vec<EcdfPoint>,
}

/// n-th harmonic number.
pub fn harmonic(n: usize) -> f64 {
    (1..=n).map(|k| 1.0 / k as f64).sum()
}

/// Closed-form Shapley values for the average-value game:
/// phi_i = t_i/n + ((H_n - 1)/n) (t_i - sum_{j != i} t_j / (n-1)).
pub fn shapley_values(cauchy_t: &[f64]) -> Result<Vec<f64>> {
    if cauchy_t.is_empty() {
        return Err(Error::EmptySample);
    }
    for (i, &t) in cauchy_t.iter().enumerate() {
        if !t.is_finite() {
            return Err(Error::NonFiniteInput(i));
        }
    }
    let n = cauchy_t.len();
    if n == 1 {
        return Ok(vec![cauchy_t[0]]);
    }
    let nf = n as f64;
    let total: f64 = cauchy_t.iter().sum();
    let scale = (harmonic(n) - 1.0) / nf;
    Ok(cauchy_t
        .iter()
        .map(|&t| t / nf + scale * (t - (total - t) / (nf - 1.0)))
        .collect())
}

/// Indices with phi_i strictly above gamma.
///
/// gamma must lie in [0, max(0, max phi)].
pub fn influential_region(phi: &[f64], gamma: f64) -> Result<BTreeSet<usize>> {
    let max_phi = phi
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max)
        .max(0.0);
    if !(0.0..=max_phi).contains(&gamma) || !gamma.is_finite() {
        return Err(Error::GammaOutOfRange {
            gamma,
            max: max_phi,
        });
    }
    Ok(phi
        .iter()
        .enumerate()
        .filter(|(_, &v)| v > gamma)
        .map(|(i, _)| i)
        .collect())
}

/// ECDF / tilted-ECDF coordinates with influence highlighting.
///
/// One point per observation, in sorted order. Which plot entity a test
/// index highlights depends on the method: POT-C addresses order statistics
/// (sorted position), PRIT-C addresses partition points (already in
/// increasing order), PIET-C addresses original observation positions.
pub fn ecdf_plot_data(
    sample: &PitSample,
    pointwise: &PointwiseResult,
    influential: &BTreeSet<usize>,
) -> Result<Vec<EcdfPoint>> {
    let n = sample.len();
    if pointwise.index_map.len() != n {
        return Err(Error::IndexMismatch {
            expected: n,
            got: pointwise.index_map.len(),
        });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| sample.values()[a].partial_cmp(&sample.values()[b]).unwrap());

    // test index -> original input position
    let mut inverse = vec![0usize; n];
    for (k, &orig) in pointwise.index_map.iter().enumerate() {
        inverse[orig] = k;
    }

    let points = order
        .iter()
        .enumerate()
        .map(|(rank, &orig)| {
            let x = sample.values()[orig];
            let ecdf = (rank + 1) as f64 / n as f64;
            let test_index = match pointwise.method {
                Method::PotC | Method::PritC => rank,
                _ => inverse[orig],
            };
            EcdfPoint {
                x,
                ecdf,
                tilted: ecdf - x,
                highlighted: influential.contains(&test_index),
            }
        })
        .collect();
    Ok(points)
}

/// Brute-force Shapley by enumerating all coalitions of N \ {i}, with
/// v(S) = mean of t over S and v(empty) = 0. Independent oracle for the
/// closed form; exponential, kept for conformance checks only.
pub(crate) fn shapley_brute_force(t: &[f64]) -> Vec<f64> {
    let n = t.len();
    assert!(n <= 16);
    // subset sums and sizes indexed by bitmask
    let mut sums = vec![0.0f64; 1 << n];
    for mask in 1usize..(1 << n) {
        let low = mask.trailing_zeros() as usize;
        sums[mask] = sums[mask & (mask - 1)] + t[low];
    }
    let value = |mask: usize| -> f64 {
        if mask == 0 {
            0.0
        } else {
            sums[mask] / mask.count_ones() as f64
        }
    };
    let fact: Vec<f64> = {
        let mut f = vec![1.0f64; n + 1];
        for k in 1..=n {
            f[k] = f[k - 1] * k as f64;
        }
        f
    };
    (0..n)
        .map(|i| {
            let others: Vec<usize> = (0..n).filter(|&j| j != i).collect();
            let mut phi = 0.0;
            for sub in 0usize..(1 << (n - 1)) {
                let mut mask = 0usize;
                for (bit, &j) in others.iter().enumerate() {
                    if sub >> bit & 1 == 1 {
                        mask |= 1 << j;
                    }
                }
                let s = mask.count_ones() as usize;
                let w = fact[s] * fact[n - s - 1] / fact[n];
                phi += w * (value(mask | (1 << i)) - value(mask));
            }
            phi
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pointwise::{pietc_pointwise, potc_pointwise, Reference};
    use proptest::prelude::*;

    #[test]
    fn shapley_small_examples() {
        assert_eq!(shapley_values(&[7.3]).unwrap(), vec![7.3]);

        let phi = shapley_values(&[2.0, 0.0]).unwrap();
        assert!((phi[0] - 1.5).abs() < 1e-12);
        assert!((phi[1] + 0.5).abs() < 1e-12);
        let brute = shapley_brute_force(&[2.0, 0.0]);
        assert!((phi[0] - brute[0]).abs() < 1e-12 && (phi[1] - brute[1]).abs() < 1e-12);

        let phi = shapley_values(&[1.0, 1.0, 1.0]).unwrap();
        for &v in &phi {
            assert!((v - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn shapley_rejects_non_finite() {
        assert!(matches!(
            shapley_values(&[1.0, f64::INFINITY]),
            Err(Error::NonFiniteInput(1))
        ));
    }

    proptest! {
        #[test]
        fn shapley_matches_brute_force(t in proptest::collection::vec(-20.0f64..20.0, 1..=8)) {
            let closed = shapley_values(&t).unwrap();
            let brute = shapley_brute_force(&t);
            for (c, b) in closed.iter().zip(&brute) {
                prop_assert!((c - b).abs() < 1e-9);
            }
        }

        // efficiency: sum phi = v(N) = mean(t)
        #[test]
        fn shapley_efficiency(t in proptest::collection::vec(-100.0f64..100.0, 1..200)) {
            let phi = shapley_values(&t).unwrap();
            let grand: f64 = t.iter().sum::<f64>() / t.len() as f64;
            prop_assert!((phi.iter().sum::<f64>() - grand).abs() < 1e-9);
        }

        // antitone influential regions
        #[test]
        fn region_antitone_in_gamma(t in proptest::collection::vec(-5.0f64..5.0, 2..50), f1 in 0.0f64..1.0, f2 in 0.0f64..1.0) {
            let phi = shapley_values(&t).unwrap();
            let max_phi = phi.iter().cloned().fold(0.0f64, f64::max);
            let (g1, g2) = (f1.min(f2) * max_phi, f1.max(f2) * max_phi);
            let r1 = influential_region(&phi, g1).unwrap();
            let r2 = influential_region(&phi, g2).unwrap();
            prop_assert!(r2.is_subset(&r1));
        }
    }

    #[test]
    fn shapley_symmetry_and_linearity() {
        // equal t => equal phi
        let phi = shapley_values(&[3.7, 1.2, 3.7, -0.5]).unwrap();
        assert!((phi[0] - phi[2]).abs() < 1e-12);

        // phi_i is affine in t_i with slope H_n / n (finite difference)
        let n = 6;
        let base: Vec<f64> = (0..n).map(|i| i as f64 * 0.3 - 1.0).collect();
        let mut bumped = base.clone();
        bumped[2] += 1.0;
        let p0 = shapley_values(&base).unwrap();
        let p1 = shapley_values(&bumped).unwrap();
        let slope = p1[2] - p0[2];
        assert!((slope - harmonic(n) / n as f64).abs() < 1e-12);
    }

    #[test]
    fn region_examples() {
        let r = influential_region(&[1.5, -0.5], 0.0).unwrap();
        assert_eq!(r.into_iter().collect::<Vec<_>>(), vec![0]);

        // strict inequality excludes exact hits
        let r = influential_region(&[1.0 / 3.0; 3], 1.0 / 3.0).unwrap();
        assert!(r.is_empty());

        // gamma = max/2 keeps only the dominant point
        let r = influential_region(&[0.9, 0.2, -0.1], 0.45).unwrap();
        assert_eq!(r.into_iter().collect::<Vec<_>>(), vec![0]);

        assert!(influential_region(&[0.9, 0.2], 1.0).is_err());
        assert!(influential_region(&[-0.9, -0.2], 0.1).is_err());
    }

    #[test]
    fn ecdf_plot_examples() {
        let s = PitSample::continuous(vec![0.25, 0.75]).unwrap();
        let pw = pietc_pointwise(&s, Reference::Exp { rate: 1.0 }).unwrap();
        let pts = ecdf_plot_data(&s, &pw, &BTreeSet::new()).unwrap();
        assert_eq!(pts.len(), 2);
        assert!((pts[0].x - 0.25).abs() < 1e-15 && (pts[0].ecdf - 0.5).abs() < 1e-15);
        assert!((pts[0].tilted - 0.25).abs() < 1e-15);
        assert!((pts[1].tilted - 0.25).abs() < 1e-15);
        assert!(!pts[0].highlighted && !pts[1].highlighted);

        let s = PitSample::continuous(vec![0.4]).unwrap();
        let pw = pietc_pointwise(&s, Reference::Exp { rate: 1.0 }).unwrap();
        let pts = ecdf_plot_data(&s, &pw, &BTreeSet::from([0])).unwrap();
        assert_eq!(
            pts,
            vec![EcdfPoint {
                x: 0.4,
                ecdf: 1.0,
                tilted: 0.6,
                highlighted: true
            }]
        );
    }

    #[test]
    fn ecdf_plot_potc_highlights_sorted_positions() {
        // order statistics: influential index 0 is the smallest value
        let s = PitSample::continuous(vec![0.9, 0.1, 0.5]).unwrap();
        let pw = potc_pointwise(&s).unwrap();
        let pts = ecdf_plot_data(&s, &pw, &BTreeSet::from([0])).unwrap();
        assert!(pts[0].highlighted && !pts[1].highlighted && !pts[2].highlighted);
        assert!((pts[0].x - 0.1).abs() < 1e-15);
    }

    #[test]
    fn ecdf_tilted_bounds() {
        let s = PitSample::continuous(vec![0.001, 0.2, 0.999]).unwrap();
        let pw = potc_pointwise(&s).unwrap();
        for p in ecdf_plot_data(&s, &pw, &BTreeSet::new()).unwrap() {
            assert!((-1.0..=1.0).contains(&p.tilted));
        }
    }

    #[test]
    fn ecdf_index_mismatch() {
        let s = PitSample::continuous(vec![0.2, 0.4, 0.6]).unwrap();
        let s2 = PitSample::continuous(vec![0.2, 0.4]).unwrap();
        let pw = potc_pointwise(&s2).unwrap();
        assert!(matches!(
            ecdf_plot_data(&s, &pw, &BTreeSet::new()),
            Err(Error::IndexMismatch {
                expected: 3,
                got: 2
            })
        ));
    }
}
