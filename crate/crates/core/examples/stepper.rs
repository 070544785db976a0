//! Driving the dual policy one arrival at a time, as a serving loop would,
//! and watching the provider prices move.
//!
//!     cargo run --example stepper

use fairmmf::dataset::{generate_synthetic, ScoreDistribution, SizeDistribution, SyntheticSpec};
use fairmmf::policy::{FillMode, PmmfParams, PmmfStepper};
use fairmmf::types::HorizonConfig;

fn main() -> fairmmf::Result<()> {
    let spec = SyntheticSpec {
        user_count: 8,
        item_count: 12,
        provider_count: 3,
        score_distribution: ScoreDistribution::PowerLaw { exponent: 1.5 },
        provider_size_distribution: SizeDistribution::Even,
        seed: 5,
        arrival_count: Some(12),
    };
    let inst = generate_synthetic(&spec, HorizonConfig::new(2, 12, 1.0)?)?;
    println!("gamma = {:.2?}", inst.gamma());

    let mut stepper = PmmfStepper::new(&inst, PmmfParams::default(), FillMode::Fill)?;
    for (step, &user) in inst.arrivals.arrivals.iter().enumerate() {
        let d = stepper.select(user)?;
        stepper.commit(&d)?;
        println!(
            "{step:>2} user {user} -> {:?}  mu {:.4?}  exposures {:?}",
            d.selected,
            stepper.dual().mu,
            stepper.exposure().exposures
        );
    }
    Ok(())
}
