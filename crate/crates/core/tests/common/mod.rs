//! Brute-force oracles and random instance builders shared by the
//! integration tests.
#![allow(dead_code)]

use std::path::PathBuf;

use fairmmf::types::{
    build_instance, ArrivalStream, Catalog, HorizonConfig, Instance, PreferenceScores,
    ProviderWeights,
};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

pub fn config_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("configs")
        .join(name)
}

pub fn data_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Weighted squared distance `sum gamma_p^2 (a_p - b_p)^2`.
pub fn weighted_dist(a: &[f64], b: &[f64], gamma: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .zip(gamma)
        .map(|((x, y), g)| (g * (x - y)).powi(2))
        .sum()
}

/// Projection onto `{mu : sum_p min(gamma_p mu_p, 0) >= -lambda}` by
/// enumerating every assignment of coordinates to "unchanged", "set to 0"
/// or "shifted by a common level", keeping the closest feasible candidate.
pub fn projection_oracle(mu: &[f64], gamma: &[f64], lambda: f64) -> Vec<f64> {
    let n = mu.len();
    let v: Vec<f64> = mu.iter().zip(gamma).map(|(m, g)| m * g).collect();
    let slack = |w: &[f64]| w.iter().map(|x| x.min(0.0)).sum::<f64>() + lambda;
    if slack(&v) >= 0.0 {
        return mu.to_vec();
    }
    let mut best: Option<(f64, Vec<f64>)> = None;
    for code in 0..3usize.pow(n as u32) {
        let roles: Vec<usize> = (0..n).map(|p| code / 3usize.pow(p as u32) % 3).collect();
        let group: Vec<usize> = (0..n).filter(|&p| roles[p] == 2).collect();
        if group.is_empty() {
            continue;
        }
        let fixed: f64 = (0..n)
            .filter(|&p| roles[p] == 0)
            .map(|p| v[p].min(0.0))
            .sum();
        let theta = (-lambda - fixed - group.iter().map(|&p| v[p]).sum::<f64>()) / group.len() as f64;
        let w: Vec<f64> = (0..n)
            .map(|p| match roles[p] {
                0 => v[p],
                1 => 0.0,
                _ => v[p] + theta,
            })
            .collect();
        if group.iter().any(|&p| w[p] > 0.0) || slack(&w) < -1e-9 {
            continue;
        }
        let cand: Vec<f64> = w.iter().zip(gamma).map(|(x, g)| x / g).collect();
        let d = weighted_dist(&cand, mu, gamma);
        if best.as_ref().map_or(true, |(bd, _)| d < *bd) {
            best = Some((d, cand));
        }
    }
    best.expect("some candidate is feasible").1
}

/// Membership in the dual region via every subset of providers.
pub fn dual_feasible_by_subsets(mu: &[f64], gamma: &[f64], lambda: f64) -> bool {
    let n = mu.len();
    (0u32..1 << n).all(|mask| {
        let s: f64 = (0..n)
            .filter(|p| mask >> p & 1 == 1)
            .map(|p| gamma[p] * mu[p])
            .sum();
        s >= -lambda
    })
}

/// Max of `min_p e_p/gamma_p + mu.e/lambda` over a grid on `[0, gamma]`.
/// Also returns the value at `e = gamma`.
pub fn conjugate_grid(mu: &[f64], gamma: &[f64], lambda: f64, points: usize) -> (f64, f64) {
    let n = mu.len();
    let f = |e: &[f64]| {
        let r = e.iter().zip(gamma).map(|(x, g)| x / g).fold(f64::INFINITY, f64::min);
        r + e.iter().zip(mu).map(|(x, m)| x * m).sum::<f64>() / lambda
    };
    let mut best = f64::NEG_INFINITY;
    let mut idx = vec![0usize; n];
    let mut e = vec![0.0; n];
    loop {
        for p in 0..n {
            e[p] = gamma[p] * idx[p] as f64 / (points - 1) as f64;
        }
        best = best.max(f(&e));
        let mut p = 0;
        while p < n {
            idx[p] += 1;
            if idx[p] < points {
                break;
            }
            idx[p] = 0;
            p += 1;
        }
        if p == n {
            break;
        }
    }
    (best, f(gamma))
}

/// All `k`-subsets of `0..n`.
pub fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    (0u32..1 << n)
        .filter(|m| m.count_ones() as usize == k)
        .map(|m| (0..n).filter(|i| m >> i & 1 == 1).collect())
        .collect()
}

/// Random tiny instance with uniform caps `K * T`.
pub fn random_tiny(r: &mut ChaCha8Rng, max_items: usize, max_k: usize, max_t: usize) -> Instance {
    let items = r.gen_range(2..=max_items);
    let providers = r.gen_range(1..=items.min(3));
    let mut provider_of: Vec<usize> = (0..providers).collect();
    provider_of.extend((providers..items).map(|_| r.gen_range(0..providers)));
    provider_of.shuffle(r);
    let users = r.gen_range(1..=3);
    let k = r.gen_range(1..=max_k.min(items));
    let t = r.gen_range(1..=max_t);
    let lambda = [0.0, 0.1, 0.5, 1.0, 5.0][r.gen_range(0..5)];
    let scores: Vec<f64> = (0..users * items).map(|_| r.gen::<f64>()).collect();
    let arrivals: Vec<usize> = (0..t).map(|_| r.gen_range(0..users)).collect();
    let horizon = HorizonConfig::new(k, t, lambda).unwrap();
    build_instance(
        Catalog::new(provider_of, providers).unwrap(),
        PreferenceScores::from_dense(users, items, scores).unwrap(),
        horizon,
        ProviderWeights::uniform(providers, &horizon).unwrap(),
        ArrivalStream::new(arrivals),
    )
    .unwrap()
}
