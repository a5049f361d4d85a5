//! Matched-pairs t-test.

use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairedTTestResult {
    pub t_statistic: f64,
    pub degrees_of_freedom: usize,
    /// Two-sided.
    pub p_value: f64,
    /// The differences are constant and non-zero, so `t` is infinite.
    pub exact_separation: bool,
}

/// Two-sided tail probability `P(|T| ≥ |t|)` of Student's t distribution,
/// `I_{df/(df+t²)}(df/2, 1/2)`.
pub fn student_t_two_sided_p(t: f64, df: usize) -> f64 {
    if t.is_infinite() {
        return 0.0;
    }
    let df = df as f64;
    let x = df / (df + t * t);
    beta_reg(df / 2.0, 0.5, x).clamp(0.0, 1.0)
}

/// t-test on the differences `xs[i] - ys[i]` with the sample standard
/// deviation.
pub fn paired_t_test(xs: &[f64], ys: &[f64]) -> Result<PairedTTestResult> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch {
            left: xs.len(),
            right: ys.len(),
        });
    }
    let n = xs.len();
    if n < 2 {
        return Err(Error::TooFewSamples { required: 2, found: n });
    }
    let d: Vec<f64> = xs.iter().zip(ys).map(|(x, y)| x - y).collect();
    let df = n - 1;
    let mean = d.iter().sum::<f64>() / n as f64;
    let constant = d.iter().all(|&v| v == d[0]);
    if constant {
        return Ok(if d[0] == 0.0 {
            PairedTTestResult {
                t_statistic: 0.0,
                degrees_of_freedom: df,
                p_value: 1.0,
                exact_separation: false,
            }
        } else {
            PairedTTestResult {
                t_statistic: f64::INFINITY.copysign(d[0]),
                degrees_of_freedom: df,
                p_value: 0.0,
                exact_separation: true,
            }
        });
    }
    let var = d.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / df as f64;
    let t = mean / (var.sqrt() / (n as f64).sqrt());
    Ok(PairedTTestResult {
        t_statistic: t,
        degrees_of_freedom: df,
        p_value: student_t_two_sided_p(t, df),
        exact_separation: false,
    })
}
