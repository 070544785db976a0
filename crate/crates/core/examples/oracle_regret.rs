//! Hindsight optimum by exhaustive search and the regret of online
//! policies against it, for growing horizons.
//!
//!     cargo run --release --example oracle_regret

use fairmmf::dataset::{load_dataset, split_horizons, ScoreOptions};
use fairmmf::oracle::{empirical_regret, solve_offline, DEFAULT_BUDGET};
use fairmmf::policy::{FillMode, Policy};
use fairmmf::regularizer::Regularizer;
use fairmmf::types::{build_instance, default_weights, HorizonConfig};

fn main() -> fairmmf::Result<()> {
    let data = concat!(env!("CARGO_MANIFEST_DIR"), "/data");
    let ds = load_dataset(
        format!("{data}/tiny_scores.csv"),
        format!("{data}/tiny_providers.csv"),
        format!("{data}/tiny_arrivals.csv"),
        ScoreOptions {
            normalize: false,
            ..Default::default()
        },
    )?;
    let policies = [Policy::Pmmf { alpha: 0.4, step_coefficient: 1e-3 }, Policy::Greedy];
    for t in [2, 4, 8] {
        let horizon = HorizonConfig::new(2, t, 1.0)?;
        let weights = default_weights(&ds.catalog, &horizon)?;
        let inst = build_instance(
            ds.catalog.clone(),
            ds.scores.clone(),
            horizon,
            weights,
            ds.arrivals.clone(),
        )?;
        let mut line = format!("T={t}:");
        for p in &policies {
            let mut total = 0.0;
            for a in split_horizons(&inst.arrivals, t)? {
                let trace = p.run(&inst, &a, FillMode::Fill)?;
                total += empirical_regret(&inst, &a, &trace, Regularizer::Mmf, DEFAULT_BUDGET)?;
            }
            line += &format!("  {} {total:.4}", p.name());
        }
        println!("{line}");
    }

    // The oracle's own decisions, first horizon of length 4.
    let horizon = HorizonConfig::new(2, 4, 1.0)?;
    let inst = build_instance(
        ds.catalog.clone(),
        ds.scores.clone(),
        horizon,
        default_weights(&ds.catalog, &horizon)?,
        ds.arrivals.clone(),
    )?;
    let first = &split_horizons(&inst.arrivals, 4)?[0];
    let opt = solve_offline(&inst, first, Regularizer::Mmf, DEFAULT_BUDGET)?;
    println!(
        "optimum {:.4} over {} trajectories, exposures {:?}",
        opt.w_opt, opt.enumerated, opt.best_exposures
    );
    Ok(())
}
