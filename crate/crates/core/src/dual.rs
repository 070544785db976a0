//! One step of the momentum dual descent.
//!
//! The update is `mu' = argmin_{mu in D} <g, mu> + step * ||mu - mu_t||^2_{gamma^2}`.
//! Because the proximal term and the projection share the `gamma^2`-weighted
//! geometry, it splits into an unconstrained step followed by a weighted
//! projection onto `D`. Substituting `v_p = gamma_p mu_p` turns the projection
//! into a Euclidean one onto `{ v : sum_p min(v_p, 0) >= -lambda }`, which is
//! solved by raising the negative coordinates by a common water level.

use crate::error::{check_len, Error, Result};
use crate::regularizer::{conjugate_argmax_exposure_into, dual_slack};
use crate::types::{Decision, DualState};

/// Slack tolerated on the dual constraint after projection.
pub const FEASIBILITY_SLACK: f64 = 1e-9;

/// Scratch buffers reused across projections. Contents are meaningless
/// between calls.
#[derive(Debug, Clone, Default)]
pub struct ProjectionWorkspace {
    v: Vec<f64>,
    order: Vec<usize>,
    conj: Vec<f64>,
    grad: Vec<f64>,
}

impl ProjectionWorkspace {
    pub fn new(provider_count: usize) -> Self {
        Self {
            v: Vec::with_capacity(provider_count),
            order: Vec::with_capacity(provider_count),
            conj: vec![0.0; provider_count],
            grad: vec![0.0; provider_count],
        }
    }
}

/// `-A^T x_t + e_t`.
pub fn subgradient(decision: &Decision, conj_exposure: &[f64]) -> Result<Vec<f64>> {
    check_len(
        "exposure delta vs conjugate exposure",
        conj_exposure.len(),
        decision.exposure_delta.len(),
    )?;
    if decision.is_empty() {
        return Err(Error::InvalidInput("empty decision".into()));
    }
    Ok(decision
        .exposure_delta
        .iter()
        .zip(conj_exposure)
        .map(|(&d, &e)| e - d as f64)
        .collect())
}

/// `alpha * raw + (1 - alpha) * previous`.
pub fn momentum_blend(raw: &[f64], previous: &[f64], alpha: f64) -> Result<Vec<f64>> {
    check_len("momentum", raw.len(), previous.len())?;
    check_alpha(alpha)?;
    Ok(raw
        .iter()
        .zip(previous)
        .map(|(r, p)| alpha * r + (1.0 - alpha) * p)
        .collect())
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!(
            "momentum coefficient must lie in (0, 1], got {alpha}"
        )))
    }
}

/// Unconstrained minimizer of `<grad, mu'> + step * ||mu' - mu||^2_{gamma^2}`.
pub fn prox_step(mu: &[f64], grad: &[f64], step_size: f64, gamma: &[f64]) -> Vec<f64> {
    let mut out = mu.to_vec();
    prox_step_in_place(&mut out, grad, step_size, gamma);
    out
}

fn prox_step_in_place(mu: &mut [f64], grad: &[f64], step_size: f64, gamma: &[f64]) {
    for ((m, g), w) in mu.iter_mut().zip(grad).zip(gamma) {
        *m -= g / (2.0 * step_size * w * w);
    }
}

/// `gamma^2`-weighted projection onto the dual region.
pub fn project_onto_dual_region(
    mu: &[f64],
    gamma: &[f64],
    lambda: f64,
    ws: &mut ProjectionWorkspace,
) -> Vec<f64> {
    let mut out = mu.to_vec();
    project_in_place(&mut out, gamma, lambda, ws);
    out
}

pub(crate) fn project_in_place(
    mu: &mut [f64],
    gamma: &[f64],
    lambda: f64,
    ws: &mut ProjectionWorkspace,
) {
    debug_assert_eq!(mu.len(), gamma.len());
    if dual_slack(mu, gamma, lambda) >= 0.0 {
        return;
    }
    ws.v.clear();
    ws.v.extend(mu.iter().zip(gamma).map(|(m, g)| m * g));
    ws.order.clear();
    ws.order
        .extend((0..mu.len()).filter(|&p| ws.v[p] < 0.0));
    let v = &ws.v;
    ws.order
        .sort_unstable_by(|&a, &b| v[a].total_cmp(&v[b]).then(a.cmp(&b)));

    // With the negatives sorted ascending, the active set for a water level
    // theta is a prefix: coordinates with v + theta < 0. For a prefix of
    // length k the level solving sum_{j<k} (v_j + theta) = -lambda is
    // (-lambda - prefix_sum) / k; it is the answer once it leaves
    // coordinate k non-negative.
    let m = ws.order.len();
    let mut prefix = 0.0;
    let mut theta = 0.0;
    let mut active = m;
    for k in 1..=m {
        prefix += v[ws.order[k - 1]];
        let level = (-lambda - prefix) / k as f64;
        let next_exits = k == m || v[ws.order[k]] + level >= 0.0;
        if next_exits {
            theta = level;
            active = k;
            break;
        }
    }

    let raise = |v: &[f64], theta: f64, out: &mut [f64]| {
        for (p, o) in out.iter_mut().enumerate() {
            if v[p] < 0.0 {
                *o = (v[p] + theta).min(0.0) / gamma[p];
            }
        }
    };
    raise(v, theta, mu);
    // Rounding can leave the constraint violated by a few ulps; lift the
    // level until the check passes in mu-space.
    let mut tries = 0;
    while dual_slack(mu, gamma, lambda) < -FEASIBILITY_SLACK && tries < 64 {
        let deficit = -dual_slack(mu, gamma, lambda);
        theta += deficit / active as f64 + f64::EPSILON * theta.abs().max(1.0);
        raise(v, theta, mu);
        tries += 1;
    }
}

/// Parameters of the regularized problem needed by the dual step.
#[derive(Debug, Clone, Copy)]
pub struct RegParams<'a> {
    pub gamma: &'a [f64],
    pub lambda: f64,
}

/// Runs conjugate exposure, subgradient, momentum blend, proximal step and
/// projection. `remaining` is the resource vector before the decision was
/// applied. With `lambda == 0` there is no regularizer and the dual is left
/// untouched.
pub fn dual_update(
    dual: &mut DualState,
    decision: &Decision,
    remaining: &[f64],
    reg: RegParams<'_>,
    ws: &mut ProjectionWorkspace,
) -> Result<()> {
    let n = dual.mu.len();
    check_len("remaining resources", n, remaining.len())?;
    check_len("gamma", n, reg.gamma.len())?;
    check_len("exposure delta", n, decision.exposure_delta.len())?;
    check_alpha(dual.alpha)?;
    if decision.is_empty() {
        return Err(Error::InvalidInput("empty decision".into()));
    }
    if reg.lambda == 0.0 {
        return Ok(());
    }
    ws.conj.resize(n, 0.0);
    ws.grad.resize(n, 0.0);
    conjugate_argmax_exposure_into(remaining, &mut ws.conj);

    let alpha = dual.alpha;
    for p in 0..n {
        let raw = ws.conj[p] - decision.exposure_delta[p] as f64;
        dual.raw_grad[p] = raw;
        dual.momentum_grad[p] = alpha * raw + (1.0 - alpha) * dual.momentum_grad[p];
    }
    prox_step_in_place(&mut dual.mu, &dual.momentum_grad, dual.step_size, reg.gamma);
    let mut mu = std::mem::take(&mut dual.mu);
    project_in_place(&mut mu, reg.gamma, reg.lambda, ws);
    dual.mu = mu;
    Ok(())
}
