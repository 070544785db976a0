//! Evaluation metrics over a horizon trace.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::policy::HorizonTrace;
use crate::regularizer::{fairness_value, Regularizer};
use crate::types::{Instance, PreferenceScores};

/// Discounted cumulative gain with base-2 position discounts.
pub fn dcg(row: &[f64], list: &[usize]) -> f64 {
    list.iter()
        .enumerate()
        .map(|(pos, &i)| row[i] / ((pos + 2) as f64).log2())
        .sum()
}

/// Per-step plain top-`K` lists for the users of a trace.
pub fn original_lists(instance: &Instance, users: &[usize]) -> Result<Vec<Vec<usize>>> {
    let k = instance.k();
    users
        .iter()
        .map(|&u| {
            let row = instance.scores.row(u)?;
            let mut items: Vec<usize> = (0..row.len()).collect();
            let cmp = |a: &usize, b: &usize| row[*b].total_cmp(&row[*a]).then(a.cmp(b));
            if k < items.len() {
                items.select_nth_unstable_by(k - 1, cmp);
                items.truncate(k);
            }
            items.sort_by(cmp);
            Ok(items)
        })
        .collect()
}

fn dcg_pairs(
    original: &[Vec<usize>],
    reranked: &HorizonTrace,
    scores: &PreferenceScores,
) -> Result<Vec<(f64, f64)>> {
    check_len("original lists vs trace", reranked.decisions.len(), original.len())?;
    original
        .iter()
        .zip(&reranked.decisions)
        .zip(&reranked.users)
        .enumerate()
        .map(|(step, ((orig, dec), &u))| {
            check_len("list length", orig.len(), dec.selected.len())?;
            let row = scores.row(u)?;
            let base = dcg(row, orig);
            if base <= 0.0 {
                return Err(Error::ZeroDcg { step });
            }
            Ok((base, dcg(row, &dec.selected)))
        })
        .collect()
}

/// Horizon mean of `DCG(reranked) / DCG(original)`; 1 means no loss.
pub fn ndcg_at_k(
    original: &[Vec<usize>],
    reranked: &HorizonTrace,
    scores: &PreferenceScores,
) -> Result<f64> {
    let pairs = dcg_pairs(original, reranked, scores)?;
    Ok(pairs.iter().map(|(o, r)| r / o).sum::<f64>() / pairs.len() as f64)
}

/// Horizon mean of `DCG(original) / DCG(reranked)`, the literal ratio
/// orientation. `None` when some re-ranked list has zero gain.
pub fn ndcg_paper_form(
    original: &[Vec<usize>],
    reranked: &HorizonTrace,
    scores: &PreferenceScores,
) -> Result<Option<f64>> {
    let pairs = dcg_pairs(original, reranked, scores)?;
    if pairs.iter().any(|(_, r)| *r <= 0.0) {
        return Ok(None);
    }
    Ok(Some(
        pairs.iter().map(|(o, r)| o / r).sum::<f64>() / pairs.len() as f64,
    ))
}

/// `min_p e_p / gamma_p` over the final exposures.
pub fn mmf_at_k(trace: &HorizonTrace, gamma: &[f64]) -> Result<f64> {
    fairness_value(Regularizer::Mmf, &trace.exposures_f64(), gamma)
}

/// Mean per-step utility plus `lambda * MMF@K`.
pub fn w_lambda_at_k(trace: &HorizonTrace, gamma: &[f64], lambda: f64) -> Result<f64> {
    Ok(trace.mean_utility() + lambda * mmf_at_k(trace, gamma)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lorenz {
    /// `(fraction of providers, fraction of exposure)`, from `(0, 0)` to `(1, 1)`.
    pub points: Vec<(f64, f64)>,
    pub gini: f64,
}

impl Lorenz {
    /// Cumulative exposure share of the bottom `fraction` of providers,
    /// linearly interpolated between provider points.
    pub fn share_at(&self, fraction: f64) -> f64 {
        let f = fraction.clamp(0.0, 1.0);
        for w in self.points.windows(2) {
            let ((x0, y0), (x1, y1)) = (w[0], w[1]);
            if f <= x1 {
                return y0 + (y1 - y0) * (f - x0) / (x1 - x0);
            }
        }
        1.0
    }
}

pub fn lorenz_and_gini(exposures: &[f64]) -> Result<Lorenz> {
    if exposures.is_empty() {
        return Err(Error::InvalidInput("no exposures".into()));
    }
    if let Some(e) = exposures.iter().find(|e| !(**e >= 0.0)) {
        return Err(Error::InvalidInput(format!("negative exposure {e}")));
    }
    let total: f64 = exposures.iter().sum();
    if total <= 0.0 {
        return Err(Error::InvalidInput("all exposures are zero".into()));
    }
    let mut sorted = exposures.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut points = Vec::with_capacity(sorted.len() + 1);
    points.push((0.0, 0.0));
    let mut cum = 0.0;
    for (j, e) in sorted.iter().enumerate() {
        cum += e;
        points.push(((j + 1) as f64 / n, cum / total));
    }
    points.last_mut().unwrap().1 = 1.0;
    Ok(Lorenz {
        gini: gini_from_points(&points),
        points,
    })
}

/// `1 - 2 * area` under the Lorenz curve by trapezoids.
pub fn gini_from_points(points: &[(f64, f64)]) -> f64 {
    let area: f64 = points
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[0].1 + w[1].1) / 2.0)
        .sum();
    1.0 - 2.0 * area
}

/// Per-horizon summary of one policy run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub ndcg_at_k: f64,
    pub ndcg_paper_form: Option<f64>,
    pub mmf_at_k: f64,
    pub w_lambda_at_k: f64,
    pub lorenz_points: Vec<(f64, f64)>,
    pub gini: f64,
    pub regret: Option<f64>,
    pub overshoot_count: u64,
    pub mean_utility: f64,
    pub exposures: Vec<u64>,
}

impl RunReport {
    pub fn from_trace(instance: &Instance, trace: &HorizonTrace) -> Result<Self> {
        let original = original_lists(instance, &trace.users)?;
        let lorenz = lorenz_and_gini(&trace.exposures_f64())?;
        Ok(Self {
            ndcg_at_k: ndcg_at_k(&original, trace, &instance.scores)?,
            ndcg_paper_form: ndcg_paper_form(&original, trace, &instance.scores)?,
            mmf_at_k: mmf_at_k(trace, instance.gamma())?,
            w_lambda_at_k: w_lambda_at_k(trace, instance.gamma(), instance.lambda())?,
            lorenz_points: lorenz.points,
            gini: lorenz.gini,
            regret: None,
            overshoot_count: trace.overshoot_count,
            mean_utility: trace.mean_utility(),
            exposures: trace.exposures_final.clone(),
        })
    }
}
