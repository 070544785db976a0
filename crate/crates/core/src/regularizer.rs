//! Provider fairness regularizers and the max-min conjugate.
//!
//! Two fairness functions are supported:
//!
//! * max-min fairness, `min_p e_p / gamma_p`
//! * proportion fairness, `sum_p ln(1 + e_p / gamma_p)`
//!
//! For max-min fairness the conjugate `r*(-mu) = max_{e <= gamma} [r(e) + mu.e / lambda]`
//! is finite exactly on the region `D = { mu : sum_{p in S} gamma_p mu_p >= -lambda for every S }`.
//! The binding subset is always the set of negative coordinates, so membership
//! reduces to a single sum: `sum_p min(gamma_p mu_p, 0) >= -lambda`. On `D` the
//! conjugate equals `gamma.mu / lambda + 1` and is attained at `e = gamma`.

use serde::{Deserialize, Serialize};

use crate::dual::FEASIBILITY_SLACK;
use crate::error::{check_len, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regularizer {
    #[default]
    Mmf,
    Pf,
}

impl Regularizer {
    pub fn name(&self) -> &'static str {
        match self {
            Regularizer::Mmf => "mmf",
            Regularizer::Pf => "pf",
        }
    }
}

impl std::str::FromStr for Regularizer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mmf" => Ok(Regularizer::Mmf),
            "pf" => Ok(Regularizer::Pf),
            other => Err(Error::InvalidInput(format!("unknown regularizer {other:?}"))),
        }
    }
}

pub fn fairness_value(reg: Regularizer, exposures: &[f64], gamma: &[f64]) -> Result<f64> {
    check_len("exposures vs gamma", gamma.len(), exposures.len())?;
    if gamma.is_empty() {
        return Err(Error::InvalidInput("no providers".into()));
    }
    let ratios = exposures.iter().zip(gamma).map(|(e, g)| e / g);
    Ok(match reg {
        Regularizer::Mmf => ratios.fold(f64::INFINITY, f64::min),
        Regularizer::Pf => ratios.map(f64::ln_1p).sum(),
    })
}

/// Linear-time membership test for the dual region.
pub fn is_dual_feasible(mu: &[f64], gamma: &[f64], lambda: f64) -> bool {
    dual_slack(mu, gamma, lambda) >= 0.0
}

/// `sum_p min(gamma_p mu_p, 0) + lambda`; non-negative exactly on the region.
pub fn dual_slack(mu: &[f64], gamma: &[f64], lambda: f64) -> f64 {
    debug_assert_eq!(mu.len(), gamma.len());
    let negative: f64 = mu
        .iter()
        .zip(gamma)
        .map(|(m, g)| (g * m).min(0.0))
        .sum();
    negative + lambda
}

/// Closed-form value of the max-min conjugate `r*(-mu)`.
pub fn mmf_conjugate_value(mu: &[f64], gamma: &[f64], lambda: f64) -> Result<f64> {
    check_len("mu vs gamma", gamma.len(), mu.len())?;
    if !(lambda > 0.0) {
        return Err(Error::InvalidInput(format!(
            "conjugate needs a positive lambda, got {lambda}"
        )));
    }
    // Projected points may sit a rounding error outside the region.
    if dual_slack(mu, gamma, lambda) < -FEASIBILITY_SLACK * lambda.max(1.0) {
        return Err(Error::InfeasibleDual);
    }
    let dot: f64 = gamma.iter().zip(mu).map(|(g, m)| g * m).sum();
    Ok(dot / lambda + 1.0)
}

/// Maximizer of `r(e) + mu.e / lambda` subject to `e <= cap`: every provider
/// sits at its cap, clamped at zero once the cap goes negative.
pub fn conjugate_argmax_exposure(_mu: &[f64], cap: &[f64], _lambda: f64) -> Vec<f64> {
    cap.iter().map(|c| c.max(0.0)).collect()
}

pub(crate) fn conjugate_argmax_exposure_into(cap: &[f64], out: &mut [f64]) {
    for (o, c) in out.iter_mut().zip(cap) {
        *o = c.max(0.0);
    }
}

/// Gradient of the proportion-fairness term, `1 / (gamma_p + e_p)`.
pub fn pf_fairness_gradient(exposures: &[f64], gamma: &[f64]) -> Result<Vec<f64>> {
    check_len("exposures vs gamma", gamma.len(), exposures.len())?;
    Ok(exposures
        .iter()
        .zip(gamma)
        .map(|(e, g)| 1.0 / (g + e))
        .collect())
}
