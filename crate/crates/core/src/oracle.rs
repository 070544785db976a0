//! Exact offline optimum for tiny instances.
//!
//! Every trajectory of per-step `K`-subsets is enumerated depth first. A
//! branch is cut as soon as a provider's exposure exceeds its cap. The
//! optimum maximizes `(1/T) sum_t g(x_t) + lambda * r(e)` under `e <= gamma`.
//! Ties keep the lexicographically smallest trajectory.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::policy::HorizonTrace;
use crate::regularizer::{fairness_value, Regularizer};
use crate::types::{ArrivalStream, Decision, Instance};

pub const DEFAULT_BUDGET: u64 = 10_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub w_opt: f64,
    pub best_decisions: Vec<Decision>,
    pub best_exposures: Vec<u64>,
    /// Complete feasible trajectories evaluated.
    pub enumerated: u64,
}

/// All `k`-subsets of `0..n` in lexicographic order.
pub(crate) fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if idx[i] < n - k + i {
                break;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// `C(n, k)^t`, or `None` on overflow.
pub fn trajectory_count(n: usize, k: usize, t: usize) -> Option<u128> {
    let per_step = binomial(n, k);
    (0..t).try_fold(1u128, |acc, _| acc.checked_mul(per_step))
}

struct Search<'a> {
    reg: Regularizer,
    lambda: f64,
    t: usize,
    gamma: &'a [f64],
    combo_delta: Vec<Vec<(usize, u64)>>,
    utility: Vec<Vec<f64>>,
    exposures: Vec<u64>,
    path: Vec<usize>,
    best: Option<(f64, Vec<usize>, Vec<u64>)>,
    enumerated: u64,
    scratch: Vec<f64>,
}

impl Search<'_> {
    fn descend(&mut self, step: usize, utility_sum: f64) -> Result<()> {
        if step == self.t {
            self.enumerated += 1;
            for (s, &e) in self.scratch.iter_mut().zip(&self.exposures) {
                *s = e as f64;
            }
            let value = utility_sum / self.t as f64
                + self.lambda * fairness_value(self.reg, &self.scratch, self.gamma)?;
            if self.best.as_ref().map_or(true, |(b, _, _)| value > *b) {
                self.best = Some((value, self.path.clone(), self.exposures.clone()));
            }
            return Ok(());
        }
        for c in 0..self.combo_delta.len() {
            let fits = self.combo_delta[c]
                .iter()
                .all(|&(p, d)| (self.exposures[p] + d) as f64 <= self.gamma[p]);
            if !fits {
                continue;
            }
            for &(p, d) in &self.combo_delta[c] {
                self.exposures[p] += d;
            }
            self.path.push(c);
            let u = self.utility[step][c];
            self.descend(step + 1, utility_sum + u)?;
            self.path.pop();
            for &(p, d) in &self.combo_delta[c] {
                self.exposures[p] -= d;
            }
        }
        Ok(())
    }
}

pub fn solve_offline(
    instance: &Instance,
    arrivals: &ArrivalStream,
    reg: Regularizer,
    budget: u64,
) -> Result<OracleResult> {
    let catalog = &instance.catalog;
    let (n, k, t) = (catalog.item_count(), instance.k(), arrivals.len());
    if t == 0 {
        return Err(Error::InvalidInput("no arrivals to optimize over".into()));
    }
    match trajectory_count(n, k, t) {
        Some(required) if required <= budget as u128 => {}
        Some(required) => {
            return Err(Error::BudgetExceeded {
                required: required.to_string(),
                budget,
            })
        }
        None => {
            return Err(Error::BudgetExceeded {
                required: format!("C({n},{k})^{t} > 2^128"),
                budget,
            })
        }
    }

    let combos = combinations(n, k);
    let combo_delta: Vec<Vec<(usize, u64)>> = combos
        .iter()
        .map(|c| {
            let mut counts: Vec<(usize, u64)> = Vec::new();
            for &i in c {
                let p = catalog.provider_of(i);
                match counts.iter_mut().find(|(q, _)| *q == p) {
                    Some((_, d)) => *d += 1,
                    None => counts.push((p, 1)),
                }
            }
            counts
        })
        .collect();
    let mut rows = Vec::with_capacity(t);
    for &u in &arrivals.arrivals {
        rows.push(instance.scores.row(u)?);
    }
    let utility = rows
        .iter()
        .map(|row| {
            combos
                .iter()
                .map(|c| c.iter().map(|&i| row[i]).sum())
                .collect()
        })
        .collect();

    let mut search = Search {
        reg,
        lambda: instance.lambda(),
        t,
        gamma: instance.gamma(),
        combo_delta,
        utility,
        exposures: vec![0; catalog.provider_count()],
        path: Vec::with_capacity(t),
        best: None,
        enumerated: 0,
        scratch: vec![0.0; catalog.provider_count()],
    };
    search.descend(0, 0.0)?;
    let enumerated = search.enumerated;
    let (w_opt, path, best_exposures) = search.best.ok_or(Error::NoFeasibleTrajectory)?;

    let best_decisions = path
        .iter()
        .zip(&rows)
        .map(|(&c, row)| {
            let mut list = combos[c].clone();
            list.sort_by(|&a, &b| row[b].total_cmp(&row[a]).then(a.cmp(&b)));
            Decision::new(list, catalog)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(OracleResult {
        w_opt,
        best_decisions,
        best_exposures,
        enumerated,
    })
}

/// Realized online objective `(1/T) sum_t g(x_t) + lambda * r(e)`.
pub fn online_objective(instance: &Instance, trace: &HorizonTrace, reg: Regularizer) -> Result<f64> {
    check_len("trace exposures", instance.catalog.provider_count(), trace.exposures_final.len())?;
    Ok(trace.mean_utility()
        + instance.lambda() * fairness_value(reg, &trace.exposures_f64(), instance.gamma())?)
}

/// Hindsight optimum minus the realized objective of `trace`.
pub fn empirical_regret(
    instance: &Instance,
    arrivals: &ArrivalStream,
    trace: &HorizonTrace,
    reg: Regularizer,
    budget: u64,
) -> Result<f64> {
    let opt = solve_offline(instance, arrivals, reg, budget)?;
    Ok(opt.w_opt - online_objective(instance, trace, reg)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::{run_greedy, run_pmmf, FillMode, PmmfParams};
    use crate::types::{build_instance, Catalog, HorizonConfig, PreferenceScores, ProviderWeights};

    fn tiny(
        provider_of: Vec<usize>,
        providers: usize,
        rows: Vec<Vec<f64>>,
        k: usize,
        lambda: f64,
        gamma: Option<Vec<f64>>,
        arrivals: Vec<usize>,
    ) -> Instance {
        let t = arrivals.len();
        let h = HorizonConfig::new(k, t, lambda).unwrap();
        let catalog = Catalog::new(provider_of, providers).unwrap();
        let weights = match gamma {
            Some(g) => ProviderWeights::explicit(g).unwrap(),
            None => ProviderWeights::uniform(providers, &h).unwrap(),
        };
        let (users, items) = (rows.len(), catalog.item_count());
        build_instance(
            catalog,
            PreferenceScores::from_dense(users, items, rows.concat()).unwrap(),
            h,
            weights,
            ArrivalStream::new(arrivals),
        )
        .unwrap()
    }

    #[test]
    fn combinations_in_order() {
        assert_eq!(
            combinations(4, 2),
            vec![vec![0, 1], vec![0, 2], vec![0, 3], vec![1, 2], vec![1, 3], vec![2, 3]]
        );
        assert_eq!(combinations(3, 3), vec![vec![0, 1, 2]]);
        assert_eq!(trajectory_count(5, 2, 3), Some(1000));
        assert_eq!(trajectory_count(4, 1, 8), Some(65536));
    }

    #[test]
    fn budget_exceeded_reports_count() {
        let inst = tiny(vec![0, 1, 0, 1], 2, vec![vec![0.5; 4]], 2, 1.0, None, vec![0; 3]);
        match solve_offline(&inst, &inst.arrivals, Regularizer::Mmf, 100) {
            Err(Error::BudgetExceeded { required, budget }) => {
                assert_eq!(required, "216");
                assert_eq!(budget, 100);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn single_provider_optimum_is_greedy() {
        let rows = vec![vec![0.9, 0.1, 0.5], vec![0.2, 0.8, 0.4]];
        let lambda = 0.7;
        let inst = tiny(vec![0, 0, 0], 1, rows, 2, lambda, Some(vec![8.0]), vec![0, 1, 0]);
        let opt = solve_offline(&inst, &inst.arrivals, Regularizer::Mmf, DEFAULT_BUDGET).unwrap();
        let greedy = run_greedy(&inst, &inst.arrivals).unwrap();
        assert_eq!(opt.best_decisions, greedy.decisions);
        let expected = greedy.mean_utility() + lambda * (6.0 / 8.0);
        assert!((opt.w_opt - expected).abs() < 1e-12);
    }

    #[test]
    fn zero_lambda_is_per_step_top_k() {
        let rows = vec![vec![0.9, 0.1, 0.5, 0.3], vec![0.2, 0.8, 0.4, 0.6]];
        let inst = tiny(vec![0, 1, 0, 1], 2, rows, 2, 0.0, None, vec![0, 1, 1]);
        let opt = solve_offline(&inst, &inst.arrivals, Regularizer::Mmf, DEFAULT_BUDGET).unwrap();
        let greedy = run_greedy(&inst, &inst.arrivals).unwrap();
        assert_eq!(opt.best_decisions, greedy.decisions);
        assert_eq!(opt.best_exposures, greedy.exposures_final);
        assert!((opt.w_opt - greedy.mean_utility()).abs() < 1e-12);
    }

    #[test]
    fn sixteen_trajectory_table() {
        let rows = vec![vec![0.9, 0.6, 0.5, 0.2], vec![0.8, 0.7, 0.1, 0.3]];
        let provider = [0usize, 0, 1, 1];
        let gamma = [1.5, 1.5];
        let inst = tiny(provider.to_vec(), 2, rows.clone(), 1, 1.0, Some(gamma.to_vec()), vec![0, 1]);
        let opt = solve_offline(&inst, &inst.arrivals, Regularizer::Mmf, DEFAULT_BUDGET).unwrap();

        let mut table = Vec::new();
        for i in 0..4 {
            for j in 0..4 {
                let mut e = [0.0f64; 2];
                e[provider[i]] += 1.0;
                e[provider[j]] += 1.0;
                if e[0] > gamma[0] || e[1] > gamma[1] {
                    continue;
                }
                let w = (rows[0][i] + rows[1][j]) / 2.0 + (e[0] / 1.5).min(e[1] / 1.5);
                table.push(((i, j), w));
            }
        }
        assert_eq!(table.len(), 8);
        assert_eq!(opt.enumerated, 8);
        let (arg, best) = table
            .iter()
            .fold(((9, 9), f64::NEG_INFINITY), |acc, &(ij, w)| if w > acc.1 { (ij, w) } else { acc });
        assert_eq!(arg, (2, 0));
        assert!((best - (0.65 + 1.0 / 1.5)).abs() < 1e-12);
        assert!((opt.w_opt - best).abs() < 1e-12);
        assert_eq!(opt.best_decisions[0].selected, vec![2]);
        assert_eq!(opt.best_decisions[1].selected, vec![0]);
    }

    #[test]
    fn oracle_replay_has_zero_regret() {
        let rows = vec![vec![0.9, 0.1, 0.5, 0.3], vec![0.2, 0.8, 0.4, 0.6]];
        let inst = tiny(vec![0, 1, 0, 1], 2, rows, 1, 1.0, None, vec![0, 1, 1, 0]);
        let opt = solve_offline(&inst, &inst.arrivals, Regularizer::Mmf, DEFAULT_BUDGET).unwrap();
        let replay =
            HorizonTrace::from_decisions(&inst, &inst.arrivals, opt.best_decisions.clone()).unwrap();
        let r = empirical_regret(&inst, &inst.arrivals, &replay, Regularizer::Mmf, DEFAULT_BUDGET)
            .unwrap();
        assert!(r.abs() < 1e-12);
    }

    #[test]
    fn pmmf_beats_starving_greedy() {
        // Provider 0 always scores higher; greedy never exposes provider 1.
        let rows = vec![vec![0.9, 0.8, 0.6, 0.5], vec![0.95, 0.7, 0.55, 0.6]];
        let arrivals = vec![0, 1, 0, 1];
        let catalog = Catalog::new(vec![0, 0, 1, 1], 2).unwrap();
        let h = HorizonConfig::new(1, 4, 1.0).unwrap();
        let gamma = crate::types::default_weights(&catalog, &h).unwrap().gamma;
        let inst = tiny(vec![0, 0, 1, 1], 2, rows, 1, 1.0, Some(gamma), arrivals);
        let greedy = run_greedy(&inst, &inst.arrivals).unwrap();
        assert_eq!(greedy.exposures_final[1], 0);
        let pmmf = run_pmmf(
            &inst,
            &inst.arrivals,
            PmmfParams { alpha: 0.4, step_coefficient: 1e-3 },
            FillMode::Fill,
        )
        .unwrap();
        let rg = empirical_regret(&inst, &inst.arrivals, &greedy, Regularizer::Mmf, DEFAULT_BUDGET)
            .unwrap();
        let rp = empirical_regret(&inst, &inst.arrivals, &pmmf, Regularizer::Mmf, DEFAULT_BUDGET)
            .unwrap();
        assert!(rp <= rg, "pmmf regret {rp} vs greedy {rg}");
    }

    #[test]
    fn fairness_term_monotone_in_lambda() {
        use rand::{Rng, SeedableRng};
        for seed in 0..10u64 {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let provider_of = vec![0, 1, 2, 0, 1];
            let rows: Vec<Vec<f64>> =
                (0..2).map(|_| (0..5).map(|_| rng.gen::<f64>()).collect()).collect();
            let arrivals: Vec<usize> = (0..3).map(|_| rng.gen_range(0..2)).collect();
            let mut prev = f64::NEG_INFINITY;
            for lambda in [0.0, 0.1, 1.0, 10.0] {
                let inst = tiny(provider_of.clone(), 3, rows.clone(), 2, lambda, None, arrivals.clone());
                let opt =
                    solve_offline(&inst, &inst.arrivals, Regularizer::Mmf, DEFAULT_BUDGET).unwrap();
                let e: Vec<f64> = opt.best_exposures.iter().map(|&x| x as f64).collect();
                let r = fairness_value(Regularizer::Mmf, &e, inst.gamma()).unwrap();
                assert!(r >= prev - 1e-12, "seed {seed} lambda {lambda}: {r} < {prev}");
                prev = r;
            }
        }
    }
}
