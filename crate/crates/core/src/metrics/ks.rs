//! Kolmogorov–Smirnov distances and their group sums.

use std::collections::BTreeSet;

use crate::error::{Error, Result};

/// `sup_t |F_a(t) − F_b(t)|` between empirical CDFs, by a merged sweep.
pub fn ks_statistic(sample_a: &[f64], sample_b: &[f64]) -> Result<f64> {
    if sample_a.is_empty() || sample_b.is_empty() {
        return Err(Error::Metric("KS statistic of an empty sample".into()));
    }
    if sample_a.iter().chain(sample_b).any(|v| v.is_nan()) {
        return Err(Error::Metric("KS statistic of NaN values".into()));
    }
    let mut a = sample_a.to_vec();
    let mut b = sample_b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut best: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let t = a[i].min(b[j]);
        while i < a.len() && a[i] <= t {
            i += 1;
        }
        while j < b.len() && b[j] <= t {
            j += 1;
        }
        best = best.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(best)
}

fn subset(values: &[f64], mask: impl Fn(usize) -> bool) -> Vec<f64> {
    values
        .iter()
        .enumerate()
        .filter(|&(i, _)| mask(i))
        .map(|(_, &v)| v)
        .collect()
}

/// `Σ_a KS(s | A=a, s)`.
pub fn ks_sp(scores: &[f64], groups: &[usize]) -> Result<f64> {
    if scores.len() != groups.len() {
        return Err(Error::Metric("scores and groups must be aligned".into()));
    }
    let levels: BTreeSet<usize> = groups.iter().copied().collect();
    levels
        .iter()
        .map(|&g| ks_statistic(&subset(scores, |i| groups[i] == g), scores))
        .sum()
}

/// `Σ_{y,a} KS(u_y | A=a, Y=1−y ; u_y | Y=1−y)` with `u_y = y + (−1)^y·s`.
pub fn ks_eo(scores: &[f64], groups: &[usize], labels: &[f64]) -> Result<f64> {
    if scores.len() != groups.len() || scores.len() != labels.len() {
        return Err(Error::Metric("scores, groups and labels must be aligned".into()));
    }
    let levels: BTreeSet<usize> = groups.iter().copied().collect();
    let mut total = 0.0;
    for y in [0.0, 1.0] {
        let sign = if y == 0.0 { 1.0 } else { -1.0 };
        let u: Vec<f64> = scores.iter().map(|s| y + sign * s).collect();
        let other = 1.0 - y;
        let pooled = subset(&u, |i| labels[i] == other);
        for &g in &levels {
            let local = subset(&u, |i| labels[i] == other && groups[i] == g);
            if local.is_empty() || pooled.is_empty() {
                return Err(Error::Metric(format!("stratum (Y={other}, A={g}) is empty")));
            }
            total += ks_statistic(&local, &pooled)?;
        }
    }
    Ok(total)
}
