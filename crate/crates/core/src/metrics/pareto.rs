//! Trade-off points, Pareto fronts and the 2-D hypervolume indicator.
//! Both objectives are minimized.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeoffPoint {
    pub one_minus_auc: f64,
    pub scaled_fairness: f64,
    pub method: String,
    pub budget: String,
    pub run: usize,
}

impl TradeoffPoint {
    pub fn coords(&self) -> (f64, f64) {
        (self.one_minus_auc, self.scaled_fairness)
    }
}

fn dominates(p: (f64, f64), q: (f64, f64)) -> bool {
    p.0 <= q.0 && p.1 <= q.1 && p != q
}

/// Indices of the non-dominated points; of exact duplicates only the first is kept.
pub fn pareto_front(points: &[(f64, f64)]) -> Vec<usize> {
    (0..points.len())
        .filter(|&i| !points.iter().any(|&q| dominates(q, points[i])) && !points[..i].iter().any(|&q| q == points[i]))
        .collect()
}

/// Area dominated by `points` and bounded by `reference`.
pub fn hypervolume_2d(points: &[(f64, f64)], reference: (f64, f64)) -> Result<f64> {
    if let Some(p) = points
        .iter()
        .find(|p| p.0.is_nan() || p.1.is_nan() || p.0 > reference.0 || p.1 > reference.1)
    {
        return Err(Error::Input(format!("point {p:?} exceeds the reference {reference:?}")));
    }
    let mut front: Vec<(f64, f64)> = pareto_front(points).into_iter().map(|i| points[i]).collect();
    front.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut area = 0.0;
    for (k, p) in front.iter().enumerate() {
        let next_x = front.get(k + 1).map_or(reference.0, |q| q.0);
        area += (next_x - p.0) * (reference.1 - p.1);
    }
    Ok(area)
}

/// Divides each value by the largest one in the comparison set and clamps
/// to `[0, 1]`; an all-zero set stays zero.
pub fn scale_fairness(values: &[f64]) -> Vec<f64> {
    let cap = values.iter().cloned().fold(0.0, f64::max);
    values
        .iter()
        .map(|&v| if cap > 0.0 { (v / cap).clamp(0.0, 1.0) } else { 0.0 })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_point() {
        let hv = hypervolume_2d(&[(0.1, 0.1)], (1.0, 1.0)).unwrap();
        assert!((hv - 0.81).abs() < 1e-12);
    }

    #[test]
    fn dominance_example() {
        let pts = [(0.1, 0.1), (0.2, 0.2), (0.05, 0.15)];
        assert_eq!(pareto_front(&pts), vec![0, 2]);
        let hv = hypervolume_2d(&pts, (1.0, 1.0)).unwrap();
        assert!((hv - (0.95 * 0.85 + 0.05 * 0.90)).abs() < 1e-12);
        assert!((hv - 0.8525).abs() < 1e-12);
    }

    #[test]
    fn exceeding_reference_rejected() {
        assert!(hypervolume_2d(&[(1.1, 0.0)], (1.0, 1.0)).is_err());
    }

    #[test]
    fn duplicates_count_once() {
        let a = hypervolume_2d(&[(0.2, 0.3)], (1.0, 1.0)).unwrap();
        let b = hypervolume_2d(&[(0.2, 0.3), (0.2, 0.3)], (1.0, 1.0)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn scaling() {
        assert_eq!(scale_fairness(&[0.5, 1.0, 2.0]), vec![0.25, 0.5, 1.0]);
        assert_eq!(scale_fairness(&[0.0, 0.0]), vec![0.0, 0.0]);
    }
}
