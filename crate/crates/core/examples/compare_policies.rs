//! All five policies on a synthetic catalog with skewed scores and provider
//! sizes. Prints horizon means of the reported metrics.
//!
//!     cargo run --release --example compare_policies

use fairmmf::dataset::{generate_synthetic, split_horizons, ScoreDistribution, SizeDistribution, SyntheticSpec};
use fairmmf::metrics::RunReport;
use fairmmf::policy::{FillMode, Policy};
use fairmmf::types::HorizonConfig;

fn main() -> fairmmf::Result<()> {
    let spec = SyntheticSpec {
        user_count: 100,
        item_count: 200,
        provider_count: 10,
        score_distribution: ScoreDistribution::PowerLaw { exponent: 1.5 },
        provider_size_distribution: SizeDistribution::PowerLaw { exponent: 1.0 },
        seed: 1,
        arrival_count: Some(512),
    };
    let horizon = HorizonConfig::new(10, 64, 1.0)?;
    let inst = generate_synthetic(&spec, horizon)?;
    let horizons = split_horizons(&inst.arrivals, horizon.t)?;

    let policies = [
        Policy::Pmmf { alpha: 0.4, step_coefficient: 1e-3 },
        Policy::Greedy,
        Policy::KNeighbor,
        Policy::MinRegularizer { lambda_penalty: 1.0 },
        Policy::DualNoMomentum { step_coefficient: 1e-3 },
    ];
    println!("{:<18} {:>8} {:>8} {:>8} {:>8}", "policy", "ndcg", "mmf", "W", "gini");
    for p in &policies {
        let mut sums = [0.0; 4];
        for a in &horizons {
            let rep = RunReport::from_trace(&inst, &p.run(&inst, a, FillMode::Fill)?)?;
            for (s, v) in sums.iter_mut().zip([rep.ndcg_at_k, rep.mmf_at_k, rep.w_lambda_at_k, rep.gini]) {
                *s += v;
            }
        }
        let n = horizons.len() as f64;
        println!(
            "{:<18} {:>8.4} {:>8.4} {:>8.4} {:>8.4}",
            p.name(),
            sums[0] / n,
            sums[1] / n,
            sums[2] / n,
            sums[3] / n
        );
    }
    Ok(())
}
