//! Online re-ranking policies run over one horizon.
//!
//! Every policy scores each item, excludes some providers, and keeps the
//! `K` best adjusted scores. Ties go to the lower item index.
//!
//! | policy | adjusted score of item `i` owned by `p` | excluded providers |
//! |---|---|---|
//! | dual (`Pmmf`) | `s_{u,i} / T - mu_p` | `beta_p <= 0` |
//! | `Greedy` | `s_{u,i}` | none |
//! | `KNeighbor` | `s_{u,i}` | all but the `K` least-exposed |
//! | `MinRegularizer` | `s_{u,i} - c (e_p - min_q e_q)` | `beta_p <= 0` |

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::dual::{dual_update, ProjectionWorkspace, RegParams};
use crate::error::{check_len, Error, Result};
use crate::types::{ArrivalStream, Catalog, Decision, DualState, ExposureState, Instance};

/// What to do when fewer than `K` items remain outside excluded providers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FillMode {
    /// Fill the missing slots from excluded providers by adjusted score.
    #[default]
    Fill,
    Strict,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PmmfParams {
    pub alpha: f64,
    pub step_coefficient: f64,
}

impl Default for PmmfParams {
    fn default() -> Self {
        Self {
            alpha: 0.4,
            step_coefficient: 1e-3,
        }
    }
}

impl PmmfParams {
    /// Step size for a horizon of length `t`: `c / sqrt(t)`.
    pub fn step_size(&self, t: usize) -> f64 {
        self.step_coefficient / (t as f64).sqrt()
    }

    fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::InvalidInput(format!(
                "alpha must lie in (0, 1], got {}",
                self.alpha
            )));
        }
        if !(self.step_coefficient > 0.0 && self.step_coefficient.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "step coefficient must be positive, got {}",
                self.step_coefficient
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Policy {
    Pmmf {
        alpha: f64,
        step_coefficient: f64,
    },
    Greedy,
    KNeighbor,
    MinRegularizer {
        lambda_penalty: f64,
    },
    /// The dual policy with the momentum coefficient fixed at 1.
    DualNoMomentum {
        step_coefficient: f64,
    },
}

impl Policy {
    pub fn name(&self) -> &'static str {
        match self {
            Policy::Pmmf { .. } => "pmmf",
            Policy::Greedy => "greedy",
            Policy::KNeighbor => "k_neighbor",
            Policy::MinRegularizer { .. } => "min_regularizer",
            Policy::DualNoMomentum { .. } => "dual_no_momentum",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Policy::Pmmf {
                alpha,
                step_coefficient,
            } => PmmfParams {
                alpha,
                step_coefficient,
            }
            .validate(),
            Policy::DualNoMomentum { step_coefficient } => PmmfParams {
                alpha: 1.0,
                step_coefficient,
            }
            .validate(),
            Policy::MinRegularizer { lambda_penalty } if !(lambda_penalty >= 0.0) => Err(
                Error::InvalidInput(format!("lambda_penalty must be >= 0, got {lambda_penalty}")),
            ),
            _ => Ok(()),
        }
    }

    pub fn run(
        &self,
        instance: &Instance,
        arrivals: &ArrivalStream,
        mode: FillMode,
    ) -> Result<HorizonTrace> {
        self.validate()?;
        match *self {
            Policy::Pmmf {
                alpha,
                step_coefficient,
            } => run_pmmf(
                instance,
                arrivals,
                PmmfParams {
                    alpha,
                    step_coefficient,
                },
                mode,
            ),
            Policy::DualNoMomentum { step_coefficient } => run_pmmf(
                instance,
                arrivals,
                PmmfParams {
                    alpha: 1.0,
                    step_coefficient,
                },
                mode,
            ),
            Policy::Greedy => run_greedy(instance, arrivals),
            Policy::KNeighbor => run_kneighbor(instance, arrivals),
            Policy::MinRegularizer { lambda_penalty } => {
                run_minregularizer(instance, arrivals, lambda_penalty, mode)
            }
        }
    }
}

/// The trajectory of one horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizonTrace {
    pub users: Vec<usize>,
    pub decisions: Vec<Decision>,
    pub exposures_final: Vec<u64>,
    pub per_step_utility: Vec<f64>,
    pub overshoot_count: u64,
}

impl HorizonTrace {
    /// Replays a fixed list of decisions, e.g. an offline optimum.
    pub fn from_decisions(
        instance: &Instance,
        arrivals: &ArrivalStream,
        decisions: Vec<Decision>,
    ) -> Result<Self> {
        check_len("decisions vs arrivals", arrivals.len(), decisions.len())?;
        let mut recorder = Recorder::new(instance);
        for (&user, d) in arrivals.arrivals.iter().zip(decisions) {
            recorder.record(instance, user, d)?;
        }
        Ok(recorder.finish())
    }

    pub fn horizon_len(&self) -> usize {
        self.decisions.len()
    }

    pub fn mean_utility(&self) -> f64 {
        self.per_step_utility.iter().sum::<f64>() / self.per_step_utility.len() as f64
    }

    pub fn exposures_f64(&self) -> Vec<f64> {
        self.exposures_final.iter().map(|&e| e as f64).collect()
    }
}

struct Recorder {
    state: ExposureState,
    trace: HorizonTrace,
}

impl Recorder {
    fn new(instance: &Instance) -> Self {
        Self {
            state: ExposureState::new(instance.gamma()),
            trace: HorizonTrace {
                users: Vec::with_capacity(instance.t()),
                decisions: Vec::with_capacity(instance.t()),
                exposures_final: Vec::new(),
                per_step_utility: Vec::with_capacity(instance.t()),
                overshoot_count: 0,
            },
        }
    }

    fn record(&mut self, instance: &Instance, user: usize, decision: Decision) -> Result<()> {
        if decision.len() != instance.k() {
            return Err(Error::InvalidInput(format!(
                "decision has {} items, expected {}",
                decision.len(),
                instance.k()
            )));
        }
        let row = instance.scores.row(user)?;
        let utility = decision.selected.iter().map(|&i| row[i]).sum();
        self.trace.overshoot_count += self.state.apply(&decision, instance.gamma())?;
        self.trace.users.push(user);
        self.trace.per_step_utility.push(utility);
        self.trace.decisions.push(decision);
        Ok(())
    }

    fn finish(mut self) -> HorizonTrace {
        self.trace.exposures_final = self.state.exposures;
        self.trace
    }
}

#[inline]
/// Best first: higher value, then lower index.
fn rank_order(a: &(f64, usize), b: &(f64, usize)) -> Ordering {
    b.0.total_cmp(&a.0).then(a.1.cmp(&b.1))
}

/// The `k` best items accepted by `keep`, best first. One pass over the
/// catalog holding only `k` candidates, so large catalogs are streamed
/// rather than copied.
fn take_best(
    item_count: usize,
    k: usize,
    value: impl Fn(usize) -> f64,
    keep: impl Fn(usize) -> bool,
) -> Vec<(f64, usize)> {
    let mut best: Vec<(f64, usize)> = Vec::with_capacity(k + 1);
    if k == 0 {
        return best;
    }
    for i in 0..item_count {
        if !keep(i) {
            continue;
        }
        let c = (value(i), i);
        if best.len() == k && rank_order(&c, &best[k - 1]) != Ordering::Less {
            continue;
        }
        let pos = best.partition_point(|b| rank_order(b, &c) == Ordering::Less);
        best.insert(pos, c);
        best.truncate(k);
    }
    best
}

/// Picks the `k` best items by `value`, skipping items of excluded
/// providers unless `mode` allows filling. Result is best first.
pub(crate) fn top_k_masked(
    value: impl Fn(usize) -> f64,
    excluded: &[bool],
    k: usize,
    catalog: &Catalog,
    mode: FillMode,
) -> Result<Vec<usize>> {
    check_len("exclusion mask", catalog.provider_count(), excluded.len())?;
    let n = catalog.item_count();
    let mut chosen = take_best(n, k, &value, |i| !excluded[catalog.provider_of(i)]);
    if chosen.len() < k {
        if mode == FillMode::Strict {
            return Err(Error::InsufficientCandidates {
                needed: k,
                available: chosen.len(),
            });
        }
        let missing = k - chosen.len();
        chosen.extend(take_best(n, missing, &value, |i| excluded[catalog.provider_of(i)]));
        if chosen.len() < k {
            return Err(Error::InsufficientCandidates {
                needed: k,
                available: chosen.len(),
            });
        }
        chosen.sort_unstable_by(rank_order);
    }
    Ok(chosen.into_iter().map(|(_, i)| i).collect())
}

/// Selection step of the dual policy: the `k` items maximizing
/// `s_i / t - penalty_{p(i)}`, skipping excluded providers.
pub fn select_topk_dual(
    scores_row: &[f64],
    dual_penalty: &[f64],
    excluded: &[bool],
    k: usize,
    t: usize,
    catalog: &Catalog,
    mode: FillMode,
) -> Result<Decision> {
    check_len("scores row", catalog.item_count(), scores_row.len())?;
    check_len("dual penalty", catalog.provider_count(), dual_penalty.len())?;
    let inv_t = 1.0 / t as f64;
    let chosen = top_k_masked(
        |i| scores_row[i] * inv_t - dual_penalty[catalog.provider_of(i)],
        excluded,
        k,
        catalog,
        mode,
    )?;
    Decision::new(chosen, catalog)
}

/// Step-by-step driver for the dual policy, exposing the dual state between
/// steps.
#[derive(Debug)]
pub struct PmmfStepper<'a> {
    instance: &'a Instance,
    dual: DualState,
    exposure: ExposureState,
    workspace: ProjectionWorkspace,
    mode: FillMode,
    excluded: Vec<bool>,
}

impl<'a> PmmfStepper<'a> {
    pub fn new(instance: &'a Instance, params: PmmfParams, mode: FillMode) -> Result<Self> {
        params.validate()?;
        let n = instance.catalog.provider_count();
        Ok(Self {
            instance,
            dual: DualState::new(n, params.step_size(instance.t()), params.alpha)?,
            exposure: ExposureState::new(instance.gamma()),
            workspace: ProjectionWorkspace::new(n),
            mode,
            excluded: vec![false; n],
        })
    }

    pub fn dual(&self) -> &DualState {
        &self.dual
    }

    pub fn exposure(&self) -> &ExposureState {
        &self.exposure
    }

    /// Chooses the list for `user` without changing any state.
    pub fn select(&mut self, user: usize) -> Result<Decision> {
        let inst = self.instance;
        let row = inst.scores.row(user)?;
        let inv_t = 1.0 / inst.t() as f64;
        let catalog = &inst.catalog;
        for (p, ex) in self.excluded.iter_mut().enumerate() {
            *ex = self.exposure.exhausted(p);
        }
        let mu = &self.dual.mu;
        let chosen = top_k_masked(
            |i| row[i] * inv_t - mu[catalog.provider_of(i)],
            &self.excluded,
            inst.k(),
            catalog,
            self.mode,
        )?;
        Decision::new(chosen, catalog)
    }

    /// Dual update for `decision` against the current resources.
    pub fn update_dual(&mut self, decision: &Decision) -> Result<()> {
        let reg = RegParams {
            gamma: self.instance.gamma(),
            lambda: self.instance.lambda(),
        };
        dual_update(
            &mut self.dual,
            decision,
            &self.exposure.remaining,
            reg,
            &mut self.workspace,
        )
    }

    /// Updates the dual from the pre-step resources, then consumes them.
    /// Returns the overshoot of this step.
    pub fn commit(&mut self, decision: &Decision) -> Result<u64> {
        self.update_dual(decision)?;
        self.consume(decision)
    }

    /// Charges `decision` against the remaining resources only.
    pub fn consume(&mut self, decision: &Decision) -> Result<u64> {
        self.exposure.apply(decision, self.instance.gamma())
    }
}

fn check_horizon(instance: &Instance, arrivals: &ArrivalStream) -> Result<()> {
    if arrivals.len() != instance.t() {
        return Err(Error::InvalidInput(format!(
            "horizon has {} arrivals, expected T = {}",
            arrivals.len(),
            instance.t()
        )));
    }
    Ok(())
}

pub fn run_pmmf(
    instance: &Instance,
    arrivals: &ArrivalStream,
    params: PmmfParams,
    mode: FillMode,
) -> Result<HorizonTrace> {
    run_pmmf_observed(instance, arrivals, params, mode, |_| {})
}

/// Like [`run_pmmf`], calling `observe` with the dual state after each update.
pub fn run_pmmf_observed(
    instance: &Instance,
    arrivals: &ArrivalStream,
    params: PmmfParams,
    mode: FillMode,
    mut observe: impl FnMut(&DualState),
) -> Result<HorizonTrace> {
    check_horizon(instance, arrivals)?;
    let mut stepper = PmmfStepper::new(instance, params, mode)?;
    let mut recorder = Recorder::new(instance);
    for &user in &arrivals.arrivals {
        let decision = stepper.select(user)?;
        stepper.commit(&decision)?;
        observe(stepper.dual());
        recorder.record(instance, user, decision)?;
    }
    debug_assert_eq!(recorder.state.exposures, stepper.exposure().exposures);
    Ok(recorder.finish())
}

/// Generic loop for the stateless-in-dual baselines: `adjust` fills the
/// adjusted scores and the exclusion mask from the pre-step exposure.
fn run_with(
    instance: &Instance,
    arrivals: &ArrivalStream,
    mode: FillMode,
    mut adjust: impl FnMut(&ExposureState, &[f64], &mut [f64], &mut [bool]),
) -> Result<HorizonTrace> {
    check_horizon(instance, arrivals)?;
    let catalog = &instance.catalog;
    let mut recorder = Recorder::new(instance);
    let mut adjusted = vec![0.0; catalog.item_count()];
    let mut excluded = vec![false; catalog.provider_count()];
    for &user in &arrivals.arrivals {
        let row = instance.scores.row(user)?;
        excluded.fill(false);
        adjust(&recorder.state, row, &mut adjusted, &mut excluded);
        let chosen = top_k_masked(|i| adjusted[i], &excluded, instance.k(), catalog, mode)?;
        recorder.record(instance, user, Decision::new(chosen, catalog)?)?;
    }
    Ok(recorder.finish())
}

pub fn run_greedy(instance: &Instance, arrivals: &ArrivalStream) -> Result<HorizonTrace> {
    run_with(instance, arrivals, FillMode::Strict, |_, row, adj, _| {
        adj.copy_from_slice(row)
    })
}

/// Providers ordered by cumulative exposure, ties by index.
fn providers_by_exposure(exposures: &[u64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..exposures.len()).collect();
    order.sort_by_key(|&p| (exposures[p], p));
    order
}

pub fn run_kneighbor(instance: &Instance, arrivals: &ArrivalStream) -> Result<HorizonTrace> {
    let k = instance.k();
    run_with(instance, arrivals, FillMode::Strict, |state, row, adj, excluded| {
        adj.copy_from_slice(row);
        excluded.fill(true);
        // K providers own at least K items, so no further extension is needed.
        for p in providers_by_exposure(&state.exposures).into_iter().take(k) {
            excluded[p] = false;
        }
    })
}

pub fn run_minregularizer(
    instance: &Instance,
    arrivals: &ArrivalStream,
    lambda_penalty: f64,
    mode: FillMode,
) -> Result<HorizonTrace> {
    if !(lambda_penalty >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "lambda_penalty must be >= 0, got {lambda_penalty}"
        )));
    }
    let catalog = &instance.catalog;
    run_with(instance, arrivals, mode, |state, row, adj, excluded| {
        let floor = state.exposures.iter().copied().min().unwrap_or(0);
        for (i, (a, s)) in adj.iter_mut().zip(row).enumerate() {
            let p = catalog.provider_of(i);
            *a = s - lambda_penalty * (state.exposures[p] - floor) as f64;
        }
        for (p, ex) in excluded.iter_mut().enumerate() {
            *ex = state.exhausted(p);
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regularizer::is_dual_feasible;
    use crate::types::{build_instance, HorizonConfig, PreferenceScores, ProviderWeights};

    fn instance(
        provider_of: Vec<usize>,
        providers: usize,
        rows: Vec<Vec<f64>>,
        k: usize,
        t: usize,
        lambda: f64,
        gamma: Vec<f64>,
        arrivals: Vec<usize>,
    ) -> Instance {
        let users = rows.len();
        let items = provider_of.len();
        build_instance(
            Catalog::new(provider_of, providers).unwrap(),
            PreferenceScores::from_dense(users, items, rows.concat()).unwrap(),
            HorizonConfig::new(k, t, lambda).unwrap(),
            ProviderWeights::explicit(gamma).unwrap(),
            ArrivalStream::new(arrivals),
        )
        .unwrap()
    }

    fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
        fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
            if cur.len() == k {
                out.push(cur.clone());
                return;
            }
            for i in start..n {
                cur.push(i);
                rec(i + 1, n, k, cur, out);
                cur.pop();
            }
        }
        let mut out = Vec::new();
        rec(0, n, k, &mut Vec::new(), &mut out);
        out
    }

    #[test]
    fn select_dual_example() {
        let c = Catalog::new(vec![0, 0, 1], 2).unwrap();
        let d = select_topk_dual(
            &[0.9, 0.5, 0.4],
            &[0.3, 0.0],
            &[false, false],
            2,
            1,
            &c,
            FillMode::Strict,
        )
        .unwrap();
        assert_eq!(d.selected, vec![0, 2]);
        let mut best = (f64::NEG_INFINITY, vec![]);
        let adj = [0.6, 0.2, 0.4];
        for s in subsets(3, 2) {
            let v: f64 = s.iter().map(|&i| adj[i]).sum();
            if v > best.0 {
                best = (v, s);
            }
        }
        assert_eq!(best.1, vec![0, 2]);
    }

    #[test]
    fn select_zero_penalty_is_plain_topk() {
        let c = Catalog::new(vec![0, 1, 0, 1, 2], 3).unwrap();
        let row = [0.1, 0.7, 0.3, 0.7, 0.95];
        let d = select_topk_dual(&row, &[0.0; 3], &[false; 3], 3, 4, &c, FillMode::Strict).unwrap();
        assert_eq!(d.selected, vec![4, 1, 3]);
    }

    #[test]
    fn all_masked_is_strict_error() {
        let c = Catalog::new(vec![0, 1], 2).unwrap();
        let err =
            select_topk_dual(&[0.5, 0.5], &[0.0; 2], &[true; 2], 1, 1, &c, FillMode::Strict)
                .unwrap_err();
        assert!(matches!(err, Error::InsufficientCandidates { needed: 1, available: 0 }));
        let d = select_topk_dual(&[0.2, 0.5], &[0.0; 2], &[true; 2], 1, 1, &c, FillMode::Fill)
            .unwrap();
        assert_eq!(d.selected, vec![1]);
    }

    #[test]
    fn greedy_toy_all_to_second_provider() {
        let row = vec![0.1, 0.2, 0.3, 0.7, 0.8, 0.9];
        let inst = instance(
            vec![0, 0, 0, 1, 1, 1],
            2,
            vec![row.clone(), row],
            3,
            2,
            1.0,
            vec![6.0, 6.0],
            vec![0, 1],
        );
        let tr = run_greedy(&inst, &inst.arrivals).unwrap();
        assert_eq!(tr.exposures_final, vec![0, 6]);
        assert_eq!(tr.decisions[0].selected, vec![5, 4, 3]);
    }

    #[test]
    fn greedy_full_catalog() {
        let row = vec![0.1, 0.2, 0.3];
        let inst = instance(vec![0, 1, 1], 2, vec![row], 3, 1, 0.0, vec![3.0, 3.0], vec![0]);
        let tr = run_greedy(&inst, &inst.arrivals).unwrap();
        assert!((tr.per_step_utility[0] - 0.6).abs() < 1e-15);
    }

    #[test]
    fn kneighbor_first_step_tie_break() {
        let row = vec![0.9, 0.8, 0.1, 0.95];
        let inst = instance(vec![0, 1, 2, 3], 4, vec![row], 2, 1, 1.0, vec![2.0; 4], vec![0]);
        let tr = run_kneighbor(&inst, &inst.arrivals).unwrap();
        // providers 0 and 1 are the least exposed by index tie-break
        assert_eq!(tr.decisions[0].selected, vec![0, 1]);
    }

    #[test]
    fn kneighbor_two_providers_equals_greedy() {
        let rows = vec![vec![0.9, 0.8, 0.1, 0.95, 0.3], vec![0.2, 0.4, 0.6, 0.8, 1.0]];
        let inst = instance(
            vec![0, 1, 0, 1, 0],
            2,
            rows,
            2,
            4,
            1.0,
            vec![8.0, 8.0],
            vec![0, 1, 1, 0],
        );
        assert_eq!(
            run_kneighbor(&inst, &inst.arrivals).unwrap(),
            run_greedy(&inst, &inst.arrivals).unwrap()
        );
    }

    #[test]
    fn kneighbor_alternates() {
        // Provider 0 always has the best item, K = 1.
        let row = vec![0.9, 0.5, 0.4];
        let inst = instance(vec![0, 1, 2], 3, vec![row], 1, 4, 1.0, vec![4.0; 3], vec![0; 4]);
        let tr = run_kneighbor(&inst, &inst.arrivals).unwrap();
        let providers: Vec<usize> = tr
            .decisions
            .iter()
            .map(|d| inst.catalog.provider_of(d.selected[0]))
            .collect();
        // exposures [0,0,0] -> p0; [1,0,0] -> p1; [1,1,0] -> p2; [1,1,1] -> p0
        assert_eq!(providers, vec![0, 1, 2, 0]);
    }

    #[test]
    fn kneighbor_fewer_providers_than_k() {
        let row = vec![0.9, 0.5, 0.4, 0.3];
        let inst = instance(vec![0, 1, 1, 0], 2, vec![row], 3, 1, 1.0, vec![3.0; 2], vec![0]);
        let tr = run_kneighbor(&inst, &inst.arrivals).unwrap();
        assert_eq!(tr.decisions[0].selected, vec![0, 1, 2]);
    }

    #[test]
    fn minregularizer_first_step_equals_greedy() {
        let rows = vec![vec![0.9, 0.8, 0.1, 0.95]];
        let inst = instance(vec![0, 0, 1, 1], 2, rows, 2, 1, 1.0, vec![3.0, 3.0], vec![0]);
        assert_eq!(
            run_minregularizer(&inst, &inst.arrivals, 5.0, FillMode::Fill).unwrap(),
            run_greedy(&inst, &inst.arrivals).unwrap()
        );
    }

    #[test]
    fn minregularizer_gap_example() {
        // Four steps of p0 first: e = [4, 0], then the penalty flips the choice.
        let rows = vec![vec![0.9, 0.5]];
        let inst = instance(vec![0, 1], 2, rows, 1, 5, 1.0, vec![10.0, 10.0], vec![0; 5]);
        let tr = run_minregularizer(&inst, &inst.arrivals, 1.0, FillMode::Fill).unwrap();
        // step 1 greedy (gap 0) -> p0 ; step 2: adjusted [0.9-1, 0.5] -> p1; ...
        let picks: Vec<usize> = tr.decisions.iter().map(|d| d.selected[0]).collect();
        assert_eq!(picks, vec![0, 1, 0, 1, 0]);

        // direct check of the worked example: e = [4, 0]
        let adj: [f64; 2] = [0.9 - 1.0 * 4.0, 0.5 - 0.0];
        assert!((adj[0] - -3.1).abs() < 1e-12);
        let best = top_k_masked(|i| adj[i], &[false; 2], 1, &inst.catalog, FillMode::Strict).unwrap();
        assert_eq!(best, vec![1]);
    }

    #[test]
    fn minregularizer_zero_penalty_is_greedy_without_caps() {
        let rows = vec![vec![0.9, 0.8, 0.1, 0.95], vec![0.3, 0.6, 0.2, 0.1]];
        let inst = instance(vec![0, 0, 1, 1], 2, rows, 2, 3, 1.0, vec![6.0, 6.0], vec![0, 1, 0]);
        assert_eq!(
            run_minregularizer(&inst, &inst.arrivals, 0.0, FillMode::Fill).unwrap(),
            run_greedy(&inst, &inst.arrivals).unwrap()
        );
    }

    #[test]
    fn pmmf_zero_lambda_is_greedy() {
        let rows = vec![vec![0.9, 0.8, 0.1, 0.95], vec![0.3, 0.6, 0.2, 0.1]];
        let inst = instance(vec![0, 0, 1, 1], 2, rows, 2, 3, 0.0, vec![6.0, 6.0], vec![0, 1, 0]);
        let tr = run_pmmf(&inst, &inst.arrivals, PmmfParams::default(), FillMode::Fill).unwrap();
        assert_eq!(tr, run_greedy(&inst, &inst.arrivals).unwrap());
    }

    #[test]
    fn pmmf_masks_exhausted_provider() {
        // p0 has by far the best item but a cap of 1.
        let rows = vec![vec![1.0, 0.0, 0.1]];
        let inst = instance(vec![0, 1, 1], 2, rows, 1, 3, 0.0, vec![1.0, 5.0], vec![0; 3]);
        let tr = run_pmmf(&inst, &inst.arrivals, PmmfParams::default(), FillMode::Fill).unwrap();
        assert_eq!(tr.exposures_final, vec![1, 2]);
        assert_eq!(tr.overshoot_count, 0);
    }

    /// Straight-line re-implementation of the online loop for a tiny case:
    /// |I| = 4, |P| = 2, K = 1, T = 2.
    #[test]
    fn pmmf_matches_hand_simulation() {
        let rows = vec![vec![0.9, 0.6, 0.5, 0.2], vec![0.8, 0.7, 0.1, 0.3]];
        let provider = [0usize, 0, 1, 1];
        let gamma = [1.5, 1.5];
        let (lambda, alpha, c) = (1.0, 0.5, 0.01);
        let inst = instance(provider.to_vec(), 2, rows.clone(), 1, 2, lambda, gamma.to_vec(), vec![0, 1]);
        let trace = run_pmmf(
            &inst,
            &inst.arrivals,
            PmmfParams { alpha, step_coefficient: c },
            FillMode::Fill,
        )
        .unwrap();

        let eta = c / 2f64.sqrt();
        let mut mu = [0.0f64; 2];
        let mut g_prev = [0.0f64; 2];
        let mut beta = gamma;
        let mut utility = 0.0;
        let mut e = [0.0f64; 2];
        for (t, row) in rows.iter().enumerate() {
            // line 7 with K = 1: argmax of s/T - mu_p over unmasked items
            let mut best = None;
            for i in 0..4 {
                if beta[provider[i]] <= 0.0 {
                    continue;
                }
                let v = row[i] / 2.0 - mu[provider[i]];
                if best.map_or(true, |(bv, _)| v > bv) {
                    best = Some((v, i));
                }
            }
            let item = best.unwrap().1;
            assert_eq!(trace.decisions[t].selected, vec![item]);
            utility += row[item];
            let mut delta = [0.0; 2];
            delta[provider[item]] = 1.0;
            // lines 9-11
            let mut g = [0.0; 2];
            for p in 0..2 {
                let raw = beta[p].max(0.0) - delta[p];
                g[p] = alpha * raw + (1.0 - alpha) * g_prev[p];
            }
            g_prev = g;
            for p in 0..2 {
                beta[p] -= delta[p];
                e[p] += delta[p];
            }
            // line 14: step, then project with two coordinates by cases
            let mut v = [0.0; 2];
            for p in 0..2 {
                let m = mu[p] - g[p] / (2.0 * eta * gamma[p] * gamma[p]);
                v[p] = gamma[p] * m;
            }
            let neg: f64 = v.iter().map(|x| x.min(0.0)).sum();
            if neg < -lambda {
                let (lo, hi) = if v[0] <= v[1] { (0, 1) } else { (1, 0) };
                if v[hi] < 0.0 && v[hi] + (-lambda - v[lo]) < 0.0 {
                    let theta = (-lambda - v[0] - v[1]) / 2.0;
                    v[0] += theta;
                    v[1] += theta;
                } else {
                    v[lo] = -lambda;
                    if v[hi] < 0.0 {
                        v[hi] = 0.0;
                    }
                }
            }
            mu = [v[0] / gamma[0], v[1] / gamma[1]];
        }
        let w_hand = utility / 2.0 + lambda * (e[0] / gamma[0]).min(e[1] / gamma[1]);
        let w = trace.mean_utility()
            + lambda
                * crate::regularizer::fairness_value(
                    crate::regularizer::Regularizer::Mmf,
                    &trace.exposures_f64(),
                    &gamma,
                )
                .unwrap();
        assert!((w - w_hand).abs() < 1e-12);
        // the second user is steered to provider 1
        assert_eq!(trace.exposures_final, vec![1, 1]);
    }

    #[test]
    fn rejects_wrong_horizon_length() {
        let inst = instance(vec![0, 1], 2, vec![vec![0.1, 0.2]], 1, 2, 1.0, vec![2.0, 2.0], vec![0, 0]);
        assert!(run_greedy(&inst, &ArrivalStream::new(vec![0])).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn dyadic(n: usize, scale: i32) -> impl Strategy<Value = Vec<f64>> {
            prop::collection::vec((0i32..=scale).prop_map(move |x| x as f64 / scale as f64), n)
        }

        proptest! {
            #[test]
            fn selection_matches_exhaustive_search(
                (row, provider_of, penalty, excluded, k) in (2usize..=12, 1usize..=4).prop_flat_map(|(n, np)| {
                    let np = np.min(n);
                    (
                        dyadic(n, 16),
                        prop::collection::vec(0..np, n).prop_map(move |mut v| {
                            for (p, slot) in v.iter_mut().enumerate().take(np) { *slot = p; }
                            v
                        }),
                        dyadic(np, 64),
                        prop::collection::vec(prop::bool::weighted(0.25), np),
                        1usize..=3.min(n),
                    )
                }),
                t in prop::sample::select(vec![1usize, 2, 4, 8]),
            ) {
                let np = penalty.len();
                let catalog = Catalog::new(provider_of, np).unwrap();
                let allowed: Vec<usize> = (0..row.len())
                    .filter(|&i| !excluded[catalog.provider_of(i)])
                    .collect();
                let got = select_topk_dual(&row, &penalty, &excluded, k, t, &catalog, FillMode::Strict);
                if allowed.len() < k {
                    prop_assert!(got.is_err());
                    return Ok(());
                }
                let got = got.unwrap();
                let adj = |i: usize| row[i] / t as f64 - penalty[catalog.provider_of(i)];
                let mut best: Option<(f64, Vec<usize>)> = None;
                for s in subsets(allowed.len(), k) {
                    let set: Vec<usize> = s.iter().map(|&j| allowed[j]).collect();
                    let v: f64 = set.iter().map(|&i| adj(i)).sum();
                    if best.as_ref().map_or(true, |(bv, _)| v > *bv) {
                        best = Some((v, set));
                    }
                }
                let (best_v, best_set) = best.unwrap();
                let mut got_set = got.selected.clone();
                got_set.sort_unstable();
                let got_v: f64 = got_set.iter().map(|&i| adj(i)).sum();
                prop_assert_eq!(got_v, best_v);
                prop_assert_eq!(got_set, best_set);
            }

            #[test]
            fn pmmf_conserves_and_stays_feasible(
                seed in 0u64..1000,
                lambda in prop::sample::select(vec![0.0, 0.1, 1.0, 10.0]),
                alpha in 0.1f64..=1.0,
            ) {
                use rand::{Rng, SeedableRng};
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
                let (items, providers, k, t) = (8, 3, 2, 6);
                let provider_of: Vec<usize> = (0..items).map(|i| if i < providers { i } else { rng.gen_range(0..providers) }).collect();
                let rows: Vec<Vec<f64>> = (0..3).map(|_| (0..items).map(|_| rng.gen::<f64>()).collect()).collect();
                let arrivals: Vec<usize> = (0..t).map(|_| rng.gen_range(0..3)).collect();
                let catalog = Catalog::new(provider_of.clone(), providers).unwrap();
                let h = HorizonConfig::new(k, t, lambda).unwrap();
                let w = crate::types::default_weights(&catalog, &h).unwrap();
                let inst = instance(provider_of, providers, rows, k, t, lambda, w.gamma.clone(), arrivals);
                let mut feasible = true;
                let tr = run_pmmf_observed(&inst, &inst.arrivals, PmmfParams { alpha, step_coefficient: 0.01 }, FillMode::Fill, |d| {
                    feasible &= is_dual_feasible(&d.mu, &w.gamma, lambda + 1e-9);
                }).unwrap();
                prop_assert!(feasible);
                prop_assert_eq!(tr.exposures_final.iter().sum::<u64>(), (k * t) as u64);
                let mut recon = vec![0u64; providers];
                for d in &tr.decisions {
                    prop_assert_eq!(d.selected.len(), k);
                    for (p, &x) in d.exposure_delta.iter().enumerate() { recon[p] += x as u64; }
                }
                prop_assert_eq!(&recon, &tr.exposures_final);
                for u in &tr.per_step_utility { prop_assert!(*u >= 0.0 && *u <= k as f64); }
            }
        }
    }
}
