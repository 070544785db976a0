//! Offline optima under max-min and proportional fairness on a skewed
//! instance, compared through their Lorenz curves.
//!
//!     cargo run --release --example lorenz_pf_vs_mmf

use fairmmf::dataset::{load_dataset, ScoreOptions};
use fairmmf::metrics::lorenz_and_gini;
use fairmmf::oracle::{solve_offline, DEFAULT_BUDGET};
use fairmmf::regularizer::Regularizer;
use fairmmf::types::{build_instance, HorizonConfig, ProviderWeights};

fn main() -> fairmmf::Result<()> {
    let data = concat!(env!("CARGO_MANIFEST_DIR"), "/data");
    let ds = load_dataset(
        format!("{data}/skewed_scores.csv"),
        format!("{data}/skewed_providers.csv"),
        format!("{data}/skewed_arrivals.csv"),
        ScoreOptions {
            normalize: false,
            ..Default::default()
        },
    )?;
    for lambda in [0.0, 0.05, 0.1, 1.0] {
        let horizon = HorizonConfig::new(2, 6, lambda)?;
        let inst = build_instance(
            ds.catalog.clone(),
            ds.scores.clone(),
            horizon,
            ProviderWeights::uniform(ds.catalog.provider_count(), &horizon)?,
            ds.arrivals.clone(),
        )?;
        for reg in [Regularizer::Mmf, Regularizer::Pf] {
            let opt = solve_offline(&inst, &inst.arrivals, reg, DEFAULT_BUDGET)?;
            let e: Vec<f64> = opt.best_exposures.iter().map(|&x| x as f64).collect();
            let lz = lorenz_and_gini(&e)?;
            println!(
                "lambda {lambda:<5} {reg:?}: exposures {:?} bottom-60% {:.3} gini {:.3}",
                opt.best_exposures,
                lz.share_at(0.6),
                lz.gini
            );
        }
    }
    Ok(())
}
