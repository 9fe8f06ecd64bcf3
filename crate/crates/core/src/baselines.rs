//! Independence-assuming uniformity tests (Kolmogorov-Smirnov and
//! Anderson-Darling) used as comparison baselines. Asymptotic p-values with
//! finite-n corrections; intended for n in the hundreds where the asymptotics
//! are adequate.

use crate::combine::Combiner;
use crate::error::{Error, Result};
use crate::pointwise::{Method, PitSample};
use crate::report::TestReport;

/// Kolmogorov asymptotic tail: P(sup|B(t)| > lambda) = 2 sum (-1)^{k-1} exp(-2 k^2 lambda^2).
fn kolmogorov_tail(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=200 {
        let term = (-2.0 * (k as f64) * (k as f64) * lambda * lambda).exp();
        sum += sign * term;
        if term < 1e-12 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Kolmogorov-Smirnov uniformity test on [0, 1].
pub fn ks_test(sample: &PitSample, alpha: f64) -> Result<TestReport> {
    let n = sample.len();
    let mut sorted = sample.values().to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let nf = n as f64;
    let mut d = 0.0f64;
    for (i, &u) in sorted.iter().enumerate() {
        let d_plus = (i + 1) as f64 / nf - u;
        let d_minus = u - i as f64 / nf;
        d = d.max(d_plus).max(d_minus);
    }
    let sqrt_n = nf.sqrt();
    // finite-n corrected argument for the asymptotic series
    let lambda = sqrt_n * d + 1.0 / (6.0 * sqrt_n) + (sqrt_n * d - 1.0) / (4.0 * nf);
    let p = kolmogorov_tail(lambda);
    Ok(TestReport::new(Method::Ks, Combiner::None, d, p, alpha, n))
}

/// Anderson-Darling uniformity test on (0, 1).
///
/// p-value from the case-0 asymptotic approximation applied to the adjusted
/// statistic A^2 (1 + 0.75/n + 2.25/n^2).
pub fn ad_test(sample: &PitSample, alpha: f64) -> Result<TestReport> {
    let n = sample.len();
    let mut sorted = sample.values().to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    for (i, &u) in sorted.iter().enumerate() {
        if u == 0.0 || u == 1.0 {
            return Err(Error::BoundaryValue { index: i, value: u });
        }
    }
    let nf = n as f64;
    let mut acc = 0.0;
    for i in 0..n {
        let w = (2 * (i + 1) - 1) as f64;
        acc += w * (sorted[i].ln() + (-sorted[n - 1 - i]).ln_1p());
    }
    let a2 = -nf - acc / nf;
    let z = a2 * (1.0 + 0.75 / nf + 2.25 / (nf * nf));
    let p = if z < 0.2 {
        1.0 - (-13.436 + 101.14 * z - 223.73 * z * z).exp()
    } else if z < 0.34 {
        1.0 - (-8.318 + 42.796 * z - 59.938 * z * z).exp()
    } else if z < 0.6 {
        (0.9177 - 4.279 * z - 1.38 * z * z).exp()
    } else {
        (1.2937 - 5.709 * z + 0.0186 * z * z).exp()
    };
    Ok(TestReport::new(
        Method::Ad,
        Combiner::None,
        a2,
        p.clamp(0.0, 1.0),
        alpha,
        n,
    ))
}
