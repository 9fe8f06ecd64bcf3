//! Dependence-aware uniformity tests for probability integral transform (PIT)
//! values, influence attribution for ECDF diagnosis, and a closed-form
//! simulation laboratory for cross-validated predictive checks.
//!
//! The pointwise tests (POT-C, PRIT-C, PIET-C) each produce one p-value per
//! observation (or partition point) from a marginal null law that holds under
//! arbitrary dependence between the PIT values; the Cauchy combination test
//! turns them into a single calibrated global p-value. Shapley values
//! attribute a rejection back to individual observations. KS, AD and
//! Tippett's min-p are included as independence-assuming baselines, and the
//! `pitlab` module reproduces leave-one-out PIT dependence phenomena with
//! exact conjugate formulas instead of MCMC.

// negated float comparisons like `!(x > 0.0)` are deliberate: they treat NaN
// as invalid, which `x <= 0.0` would silently accept
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod cli;
pub mod combine;
pub mod conformance;
pub mod error;
pub mod influence;
pub mod pitlab;
pub mod pitos;
pub mod plot;
pub mod pointwise;
pub mod report;
pub mod specfun;

pub use baselines::{ad_test, ks_test};
pub use combine::{cct, tcct, tippett_min_p, Combiner};
pub use error::{Error, Result};
pub use influence::{ecdf_plot_data, influential_region, shapley_values, InfluenceReport};
pub use pitos::{conditional_p, halton_pairs, pitos_test};
pub use pointwise::{
    pietc_pointwise, potc_pointwise, pritc_pointwise, Method, Partition, PitKind, PitSample,
    PointwiseResult, Reference,
};
pub use report::TestReport;

/// Global test assembled from a pointwise method and a combiner.
pub fn combined_test(
    pointwise: &PointwiseResult,
    combiner: Combiner,
    alpha: f64,
) -> Result<TestReport> {
    let (statistic, global_p) = match combiner {
        Combiner::Cct => cct(&pointwise.p_values)?,
        Combiner::Tcct => tcct(&pointwise.p_values)?,
        Combiner::Tippett => tippett_min_p(&pointwise.p_values)?,
        Combiner::None => {
            return Err(Error::Domain(
                "a combiner is required for pointwise methods".into(),
            ))
        }
    };
    let mut report = TestReport::new(
        pointwise.method,
        combiner,
        statistic,
        global_p,
        alpha,
        pointwise.p_values.len(),
    );
    if pointwise.kind_mismatch {
        report = report.with_warning(format!(
            "sample kind does not match the design of {}; p-values may be conservative or invalid",
            pointwise.method
        ));
    }
    if combiner == Combiner::Tippett {
        report =
            report.with_warning("tippett assumes independent p-values; invalid under dependence");
    }
    Ok(report)
}
