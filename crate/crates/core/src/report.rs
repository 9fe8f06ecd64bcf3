//! Test report emitted by every global test.

use serde::{Deserialize, Serialize};

use crate::combine::Combiner;
use crate::pointwise::Method;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TestReport {
    pub method: Method,
    pub combiner: Combiner,
    /// T for the Cauchy combiners, D for KS, A^2 for AD, min-p for Tippett.
    pub statistic: f64,
    pub global_p: f64,
    /// Uncorrected global p-value, when a correction was applied (PITOS).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub raw_global_p: Option<f64>,
    pub alpha: f64,
    pub reject: bool,
    pub n: usize,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub warnings: Vec<String>,
    /// PITOS: conditional pairs dropped after numerical failure.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dropped_pairs: Option<usize>,
}

impl TestReport {
    pub fn new(
        method: Method,
        combiner: Combiner,
        statistic: f64,
        global_p: f64,
        alpha: f64,
        n: usize,
    ) -> Self {
        TestReport {
            method,
            combiner,
            statistic,
            global_p,
            raw_global_p: None,
            alpha,
            reject: global_p <= alpha,
            n,
            warnings: Vec::new(),
            dropped_pairs: None,
        }
    }

    pub fn with_warning(mut self, warning: impl Into<String>) -> Self {
        self.warnings.push(warning.into());
        self
    }
}
