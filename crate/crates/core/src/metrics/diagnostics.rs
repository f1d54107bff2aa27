//! Fairness-improvement bookkeeping and the data-side terms of the upstream
//! and downstream improvement bounds.
//!
//! All correlations are HGR estimates supplied by the caller. The Lipschitz
//! constants and capacity gaps that enter the downstream bounds are not
//! identifiable from data, so those bounds are reported without the
//! `λ_F⁻¹·C` term and nothing here asserts them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hgr::d_metric;

/// Upstream-side inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UpstreamQuantities {
    /// `ρ(h*(X), A)` for the model trained on the original data.
    pub rho_original: f64,
    /// `ρ(h̃*(X̃), A)`.
    pub rho_transformed: f64,
    /// `L(h*; D)`.
    pub loss_original: f64,
    /// `L(h̃*; D̃) = E[l(Ỹ, h̃*(X̃))]`.
    pub loss_transformed: f64,
    /// `E[l(Y, h̃*(X̃))]` against the untouched label.
    pub loss_transformed_on_y: f64,
    /// `ρ(Y, h*(X))`.
    pub rho_label_original: f64,
    /// `ρ(Ỹ, h̃*(X̃))`.
    pub rho_label_transformed: f64,
}

/// Inputs for one downstream model `h_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DownstreamQuantities {
    pub name: String,
    /// `ρ(h*_k(X), A)`.
    pub rho_original: f64,
    /// `ρ(h̃*_k(X̃), A)`.
    pub rho_transformed: f64,
    /// `L(h*_k; D)`.
    pub loss_original: f64,
    /// `L(h̃*_k; D̃)`.
    pub loss_transformed: f64,
    /// `ρ(h̃*(X̃), h̃*_k(X̃))`.
    pub rho_pair: f64,
    /// `ρ(h̃*_k(X̃), Ỹ)`.
    pub rho_label: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UpstreamBound {
    /// `λ_F⁻¹(E[l(Y, h̃*(X̃))] − e(A) − ε̌)`; absent when `λ_F = 0`.
    pub lower_bound: Option<f64>,
    /// `d(Y, h*(X)) + d(Y, h̃*(X̃))`, meaningful for binary outputs.
    pub upper_bound: f64,
    pub measured: f64,
    pub slack: f64,
    /// `measured ≥ lower_bound − slack`.
    pub lower_holds_with_slack: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDiagnostics {
    pub name: String,
    /// `Δ̃_F^k = ρ(h*_k(X), A) − ρ(h̃*_k(X̃), A)`.
    pub delta_f_k_tilde: f64,
    /// `Δ_F^k = ρ(h*(X), A) − ρ(h*_k(X), A)`.
    pub delta_f_k: f64,
    /// `Δ_L^k = L(h*_k; D) − L(h*; D)`.
    pub delta_l_k: f64,
    /// `d(h̃*(X̃), h̃*_k(X̃))`.
    pub d_pair: f64,
    /// `d(h̃*_k(X̃), Ỹ)`.
    pub d_label: f64,
    /// `Δ̃_F − Δ_F^k − d(h̃*, h̃*_k)`, without the `λ_F⁻¹·C` term.
    pub bracket_lower: f64,
    /// `Δ̃_F − Δ_F^k + d(h̃*, h̃*_k)`, without the `λ_F⁻¹·C` term.
    pub bracket_upper: f64,
    pub within_bracket: bool,
    /// `Δ_F^k + d(h̃*_k, Ỹ) + d(h̃*, Ỹ)`: right side of the sufficient
    /// condition for `Δ̃_F^k ≥ 0`, again without `λ_F⁻¹·C`.
    pub sufficient_rhs: f64,
    pub sufficient_condition_met: bool,
    /// `L(h̃*; D̃) − L(h̃*_k; D̃)`; the utility sandwich predicts this is ≤ 0.
    pub utility_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImprovementDiagnostics {
    /// `Δ̃_F = ρ(h*(X), A) − ρ(h̃*(X̃), A)`.
    pub delta_f_tilde: f64,
    /// `Δ̃_L = L(h*; D) − L(h̃*; D̃)`.
    pub delta_l_tilde: f64,
    /// `ε̌`: risk of an unconstrained model using `X` and `A` jointly.
    pub epsilon_check: f64,
    /// `e(A) = L(h*; D) − ε̌`.
    pub e_a: f64,
    /// `d(h̃*(X̃), Ỹ)`.
    pub d_upstream_label: f64,
    pub upstream: UpstreamBound,
    pub models: Vec<ModelDiagnostics>,
}

fn check_rho(name: &str, v: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::Input(format!("{name} = {v} is not a correlation in [0, 1]")));
    }
    Ok(v)
}

fn check_finite(name: &str, v: f64) -> Result<f64> {
    if !v.is_finite() {
        return Err(Error::Input(format!("{name} is missing or non-finite")));
    }
    Ok(v)
}

pub fn improvement_diagnostics(
    upstream: &UpstreamQuantities,
    models: &[DownstreamQuantities],
    epsilon_check: f64,
    lambda_f: f64,
    slack: f64,
) -> Result<ImprovementDiagnostics> {
    let u = upstream;
    let rho0 = check_rho("rho_original", u.rho_original)?;
    let rho1 = check_rho("rho_transformed", u.rho_transformed)?;
    let l0 = check_finite("loss_original", u.loss_original)?;
    let l1 = check_finite("loss_transformed", u.loss_transformed)?;
    let l1y = check_finite("loss_transformed_on_y", u.loss_transformed_on_y)?;
    let eps = check_finite("epsilon_check", epsilon_check)?;
    check_finite("lambda_f", lambda_f)?;
    check_finite("slack", slack)?;
    let delta_f_tilde = rho0 - rho1;
    let e_a = l0 - eps;
    let lower_bound = (lambda_f > 0.0).then(|| (l1y - e_a - eps) / lambda_f);
    let upper_bound = d_metric(check_rho("rho_label_original", u.rho_label_original)?)?
        + d_metric(check_rho("rho_label_transformed", u.rho_label_transformed)?)?;
    let d_upstream_label = d_metric(u.rho_label_transformed)?;

    let models = models
        .iter()
        .map(|m| {
            let rk0 = check_rho("model rho_original", m.rho_original)?;
            let rk1 = check_rho("model rho_transformed", m.rho_transformed)?;
            let d_pair = d_metric(check_rho("rho_pair", m.rho_pair)?)?;
            let d_label = d_metric(check_rho("rho_label", m.rho_label)?)?;
            let delta_f_k_tilde = rk0 - rk1;
            let delta_f_k = rho0 - rk0;
            let bracket_lower = delta_f_tilde - delta_f_k - d_pair;
            let bracket_upper = delta_f_tilde - delta_f_k + d_pair;
            let sufficient_rhs = delta_f_k + d_label + d_upstream_label;
            Ok(ModelDiagnostics {
                name: m.name.clone(),
                delta_f_k_tilde,
                delta_f_k,
                delta_l_k: check_finite("model loss_original", m.loss_original)? - l0,
                d_pair,
                d_label,
                bracket_lower,
                bracket_upper,
                within_bracket: (bracket_lower..=bracket_upper).contains(&delta_f_k_tilde),
                sufficient_rhs,
                sufficient_condition_met: delta_f_tilde >= sufficient_rhs,
                utility_gap: l1 - check_finite("model loss_transformed", m.loss_transformed)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(ImprovementDiagnostics {
        delta_f_tilde,
        delta_l_tilde: l0 - l1,
        epsilon_check: eps,
        e_a,
        d_upstream_label,
        upstream: UpstreamBound {
            lower_bound,
            upper_bound,
            measured: delta_f_tilde,
            slack,
            lower_holds_with_slack: lower_bound.map(|lb| delta_f_tilde >= lb - slack),
        },
        models,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn upstream(rho0: f64, rho1: f64) -> UpstreamQuantities {
        UpstreamQuantities {
            rho_original: rho0,
            rho_transformed: rho1,
            loss_original: 0.4,
            loss_transformed: 0.4,
            loss_transformed_on_y: 0.4,
            rho_label_original: 0.6,
            rho_label_transformed: 0.6,
        }
    }

    #[test]
    fn identical_inputs_give_zero_deltas() {
        let m = DownstreamQuantities {
            name: "k".into(),
            rho_original: 0.3,
            rho_transformed: 0.3,
            loss_original: 0.4,
            loss_transformed: 0.4,
            rho_pair: 1.0,
            rho_label: 0.6,
        };
        let d = improvement_diagnostics(&upstream(0.3, 0.3), &[m], 0.4, 1.0, 0.15).unwrap();
        assert_eq!(d.delta_f_tilde, 0.0);
        assert_eq!(d.delta_l_tilde, 0.0);
        assert_eq!(d.e_a, 0.0);
        let k = &d.models[0];
        assert_eq!(
            (k.delta_f_k_tilde, k.delta_f_k, k.delta_l_k, k.d_pair),
            (0.0, 0.0, 0.0, 0.0)
        );
        assert!(k.within_bracket);
    }

    #[test]
    fn improvement_identity() {
        let d = improvement_diagnostics(&upstream(0.7, 0.2), &[], 0.3, 2.0, 0.15).unwrap();
        assert!((d.delta_f_tilde + 0.2 - 0.7).abs() < 1e-15);
        // lower bound (0.4 − 0.1 − 0.3) / 2 = 0
        assert!(d.upstream.lower_bound.unwrap().abs() < 1e-15);
        assert_eq!(d.upstream.lower_holds_with_slack, Some(true));
    }

    #[test]
    fn zero_lambda_has_no_lower_bound() {
        let d = improvement_diagnostics(&upstream(0.7, 0.2), &[], 0.3, 0.0, 0.15).unwrap();
        assert!(d.upstream.lower_bound.is_none());
    }

    #[test]
    fn missing_inputs_rejected() {
        assert!(improvement_diagnostics(&upstream(f64::NAN, 0.2), &[], 0.3, 1.0, 0.1).is_err());
        let mut u = upstream(0.5, 0.2);
        u.loss_transformed = f64::NAN;
        assert!(improvement_diagnostics(&u, &[], 0.3, 1.0, 0.1).is_err());
    }
}
