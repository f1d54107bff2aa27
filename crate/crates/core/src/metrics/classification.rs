//! Threshold-free and thresholded group metrics on scores and labels.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

fn check_labels(labels: &[f64]) -> Result<(usize, usize)> {
    if labels.iter().any(|&v| v != 0.0 && v != 1.0) {
        return Err(Error::Metric("labels must be 0/1".into()));
    }
    let pos = labels.iter().filter(|&&v| v == 1.0).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::Metric("both classes must be present".into()));
    }
    Ok((pos, neg))
}

fn check_scores(scores: &[f64], len: usize) -> Result<()> {
    if scores.len() != len {
        return Err(Error::Metric(format!("{} scores for {len} labels", scores.len())));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::Metric("scores contain NaN".into()));
    }
    Ok(())
}

/// Area under the ROC curve as the Mann–Whitney statistic: the fraction of
/// (positive, negative) pairs ranked correctly, ties counting one half.
pub fn auc(scores: &[f64], labels: &[f64]) -> Result<f64> {
    let (pos, neg) = check_labels(labels)?;
    check_scores(scores, labels.len())?;
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut wins = 0.0;
    let mut neg_below = 0usize;
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        let (mut p, mut q) = (0usize, 0usize);
        while j < idx.len() && scores[idx[j]] == scores[idx[i]] {
            if labels[idx[j]] == 1.0 {
                p += 1;
            } else {
                q += 1;
            }
            j += 1;
        }
        wins += (p * neg_below) as f64 + 0.5 * (p * q) as f64;
        neg_below += q;
        i = j;
    }
    Ok(wins / (pos as f64 * neg as f64))
}

/// Cut maximizing Youden's J = TPR − FPR, predicting `score ≥ threshold`.
/// Candidates are the observed scores; ties go to the larger threshold.
pub fn choose_threshold(scores: &[f64], labels: &[f64]) -> Result<f64> {
    let (pos, neg) = check_labels(labels)?;
    check_scores(scores, labels.len())?;
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut best = (f64::NEG_INFINITY, scores[idx[0]]);
    let mut i = 0;
    while i < idx.len() {
        let t = scores[idx[i]];
        while i < idx.len() && scores[idx[i]] == t {
            if labels[idx[i]] == 1.0 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        let j = tp as f64 / pos as f64 - fp as f64 / neg as f64;
        // descending sweep: strict improvement keeps the larger threshold on ties
        if j > best.0 {
            best = (j, t);
        }
    }
    Ok(best.1)
}

pub fn predict_labels(scores: &[f64], threshold: f64) -> Vec<bool> {
    scores.iter().map(|&s| s >= threshold).collect()
}

fn group_indices(groups: &[usize]) -> BTreeMap<usize, Vec<usize>> {
    let mut m: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &g) in groups.iter().enumerate() {
        m.entry(g).or_default().push(i);
    }
    m
}

fn rate(pred: &[bool], idx: &[usize], value: bool) -> f64 {
    idx.iter().filter(|&&i| pred[i] == value).count() as f64 / idx.len() as f64
}

/// `Σ_a |P(Ŷ=1 | A=a) / P(Ŷ=1) − 1|` over the groups present.
pub fn sp_ratio(pred: &[bool], groups: &[usize]) -> Result<f64> {
    if pred.len() != groups.len() || pred.is_empty() {
        return Err(Error::Metric(
            "predictions and groups must be aligned and nonempty".into(),
        ));
    }
    let all: Vec<usize> = (0..pred.len()).collect();
    let overall = rate(pred, &all, true);
    if overall == 0.0 {
        return Err(Error::Metric("P(Ŷ=1) = 0; parity ratio undefined".into()));
    }
    Ok(group_indices(groups)
        .values()
        .map(|idx| (rate(pred, idx, true) / overall - 1.0).abs())
        .sum())
}

/// `Σ_{y,a} |P(Ŷ=y | A=a, Y=y) / P(Ŷ=y | Y=y) − 1|`.
pub fn eo_ratio(pred: &[bool], groups: &[usize], labels: &[f64]) -> Result<f64> {
    if pred.len() != groups.len() || pred.len() != labels.len() {
        return Err(Error::Metric("predictions, groups and labels must be aligned".into()));
    }
    check_labels(labels)?;
    let all_groups: Vec<usize> = group_indices(groups).into_keys().collect();
    let mut total = 0.0;
    for y in [0.0, 1.0] {
        let stratum: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == y).collect();
        let value = y == 1.0;
        let pooled = rate(pred, &stratum, value);
        if pooled == 0.0 {
            return Err(Error::Metric(format!("P(Ŷ={y} | Y={y}) = 0; odds ratio undefined")));
        }
        let by_group = group_indices(&stratum.iter().map(|&i| groups[i]).collect::<Vec<_>>());
        for g in &all_groups {
            let local = by_group
                .get(g)
                .ok_or_else(|| Error::Metric(format!("stratum (Y={y}, A={g}) is empty")))?;
            let idx: Vec<usize> = local.iter().map(|&k| stratum[k]).collect();
            total += (rate(pred, &idx, value) / pooled - 1.0).abs();
        }
    }
    Ok(total)
}

/// `max_a E[s | A=a] − min_a E[s | A=a]`; for two groups the absolute mean gap.
pub fn group_mean_gap(scores: &[f64], groups: &[usize]) -> Result<f64> {
    if scores.len() != groups.len() || scores.is_empty() {
        return Err(Error::Metric("scores and groups must be aligned and nonempty".into()));
    }
    let means: Vec<f64> = group_indices(groups)
        .values()
        .map(|idx| idx.iter().map(|&i| scores[i]).sum::<f64>() / idx.len() as f64)
        .collect();
    let hi = means.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = means.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(hi - lo)
}

pub fn mse(pred: &[f64], target: &[f64]) -> Result<f64> {
    if pred.len() != target.len() || pred.is_empty() {
        return Err(Error::Metric("mse needs aligned nonempty vectors".into()));
    }
    Ok(pred.iter().zip(target).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / pred.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn auc_examples() {
        assert_eq!(auc(&[0.1, 0.2, 0.8, 0.9], &[0.0, 0.0, 1.0, 1.0]).unwrap(), 1.0);
        assert_eq!(auc(&[0.3; 4], &[0.0, 1.0, 0.0, 1.0]).unwrap(), 0.5);
        assert_eq!(auc(&[0.1, 0.4, 0.35, 0.8], &[0.0, 0.0, 1.0, 1.0]).unwrap(), 0.75);
        assert!(auc(&[0.1, 0.2], &[1.0, 1.0]).is_err());
    }

    #[test]
    fn threshold_examples() {
        let t = choose_threshold(&[0.1, 0.4, 0.35, 0.8], &[0.0, 0.0, 1.0, 1.0]).unwrap();
        assert!(t > 0.4 && t <= 0.8);
        assert_eq!(choose_threshold(&[0.5; 4], &[0.0, 1.0, 0.0, 1.0]).unwrap(), 0.5);
        let t = choose_threshold(&[0.1, 0.2, 0.8, 0.9], &[0.0, 0.0, 1.0, 1.0]).unwrap();
        let pred = predict_labels(&[0.1, 0.2, 0.8, 0.9], t);
        assert_eq!(pred, vec![false, false, true, true]);
    }

    #[test]
    fn sp_two_groups() {
        // group 0: 2/10 positive, group 1: 4/10 positive, overall 0.3
        let groups: Vec<usize> = (0..20).map(|i| i / 10).collect();
        let pred: Vec<bool> = (0..20).map(|i| (i < 2) || (10..14).contains(&i)).collect();
        let sp = sp_ratio(&pred, &groups).unwrap();
        assert!((sp - 2.0 / 3.0).abs() < 1e-12);
        assert!(sp_ratio(&[false; 4], &[0, 0, 1, 1]).is_err());
    }

    #[test]
    fn eo_hand_example() {
        // y=1: group 0 accuracy 0.5, group 1 accuracy 1.0; y=0 all correct
        let labels = [1.0, 1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0];
        let groups = [0, 0, 1, 1, 0, 0, 1, 1];
        let pred = [true, false, true, true, false, false, false, false];
        let eo = eo_ratio(&pred, &groups, &labels).unwrap();
        assert!((eo - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn eo_reports_empty_stratum() {
        let err = eo_ratio(&[true, false, true], &[0, 1, 1], &[1.0, 0.0, 0.0]).unwrap_err();
        assert!(err.to_string().contains("(Y=0, A=0)"), "{err}");
    }
}
