//! Two providers with three items each, every user prefers provider p1.
//! Greedy hands all six slots to p1. The dual policy moves slots to p2 once
//! lambda is large enough for p2's price to beat the score gap.
//!
//!     cargo run --example figure2

use fairmmf::dataset::{load_dataset, ScoreOptions};
use fairmmf::metrics::RunReport;
use fairmmf::policy::{FillMode, Policy};
use fairmmf::types::{build_instance, HorizonConfig, ProviderWeights};

fn main() -> fairmmf::Result<()> {
    let data = concat!(env!("CARGO_MANIFEST_DIR"), "/data");
    let ds = load_dataset(
        format!("{data}/figure2_scores.csv"),
        format!("{data}/figure2_providers.csv"),
        format!("{data}/figure2_arrivals.csv"),
        ScoreOptions {
            normalize: false,
            ..Default::default()
        },
    )?;
    let greedy = (Policy::Greedy, 1.0);
    let dual = |lambda| (Policy::Pmmf { alpha: 0.4, step_coefficient: 1e-3 }, lambda);
    for (policy, lambda) in [greedy, dual(1.0), dual(10.0)] {
        let horizon = HorizonConfig::new(3, 2, lambda)?;
        let inst = build_instance(
            ds.catalog.clone(),
            ds.scores.clone(),
            horizon,
            ProviderWeights::explicit(vec![6.0, 6.0])?,
            ds.arrivals.clone(),
        )?;
        let trace = policy.run(&inst, &inst.arrivals, FillMode::Fill)?;
        println!("{} (lambda {lambda})", policy.name());
        for (u, d) in trace.users.iter().zip(&trace.decisions) {
            let items: Vec<&str> = d.selected.iter().map(|&i| ds.items.id(i)).collect();
            println!("  {:<6} {:?}", ds.users.id(*u), items);
        }
        let rep = RunReport::from_trace(&inst, &trace)?;
        println!(
            "  exposures {:?}  ndcg {:.4}  mmf {:.3}",
            rep.exposures, rep.ndcg_at_k, rep.mmf_at_k
        );
    }
    Ok(())
}
