//! Per-arrival cost of selection and of the dual step as the catalog grows.
//! The dual step only touches provider-sized state.
//!
//!     cargo run --release --example bench_dual_step

use fairmmf::experiment::{bench_item_count, BenchSection};
use fairmmf::policy::PmmfParams;
use fairmmf::types::HorizonConfig;

fn main() -> fairmmf::Result<()> {
    let section = BenchSection {
        item_counts: vec![1_000, 10_000, 100_000],
        provider_count: 100,
        user_count: 20,
        repetitions: 2000,
        warmup: 200,
    };
    let horizon = HorizonConfig::new(10, 256, 1.0)?;
    println!("{:>8} {:>12} {:>12}", "items", "select us", "dual us");
    for &n in &section.item_counts {
        let row = bench_item_count(n, &section, horizon, PmmfParams::default(), 1)?;
        println!("{:>8} {:>12.2} {:>12.2}", n, row.select_mean_us, row.dual_mean_us);
    }
    Ok(())
}
