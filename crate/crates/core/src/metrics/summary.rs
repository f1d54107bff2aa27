//! Consistency scores and across-run aggregation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Sample standard deviation (divisor `k − 1`) of a metric across models.
pub fn consistency_score(values: &[f64]) -> Result<f64> {
    if values.len() < 2 {
        return Err(Error::Metric("consistency needs at least 2 models".into()));
    }
    let m = mean(values);
    let ss: f64 = values.iter().map(|v| (v - m).powi(2)).sum();
    Ok((ss / (values.len() - 1) as f64).sqrt())
}

/// Popoviciu's inequality `Var ≤ (max − min)² / 4` for the population
/// variance (divisor `k`) of the recorded values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PopoviciuCheck {
    pub variance: f64,
    pub range: f64,
    pub bound: f64,
    pub holds: bool,
}

pub fn popoviciu_check(values: &[f64]) -> Result<PopoviciuCheck> {
    if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Metric("Popoviciu check needs finite values".into()));
    }
    let m = mean(values);
    let variance = values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / values.len() as f64;
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let range = hi - lo;
    let bound = range * range / 4.0;
    Ok(PopoviciuCheck {
        variance,
        range,
        bound,
        // Two-point sets attain the bound exactly; allow for rounding.
        holds: variance <= bound * (1.0 + 1e-12),
    })
}

/// `mean ± 2·SE` with `SE = sd / √n` (sample sd; zero for a single run).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub n: usize,
    pub mean: f64,
    pub std: f64,
    pub se: f64,
    pub lower: f64,
    pub upper: f64,
}

pub fn aggregate(values: &[f64]) -> Result<Aggregate> {
    if values.is_empty() {
        return Err(Error::Metric("aggregate of zero runs".into()));
    }
    let m = mean(values);
    let std = if values.len() > 1 {
        consistency_score(values)?
    } else {
        0.0
    };
    let se = std / (values.len() as f64).sqrt();
    Ok(Aggregate {
        n: values.len(),
        mean: m,
        std,
        se,
        lower: m - 2.0 * se,
        upper: m + 2.0 * se,
    })
}
