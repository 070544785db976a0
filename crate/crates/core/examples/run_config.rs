//! Running a TOML experiment from library code instead of the binary.
//!
//!     cargo run --release --example run_config [path/to/config.toml]

use fairmmf::experiment::{run, ExperimentConfig};

fn main() -> fairmmf::Result<()> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/configs/figure2.toml").into());
    let cfg = ExperimentConfig::load(&path)?;
    let outcome = run(&cfg)?;
    for s in &outcome.summary.policies {
        println!(
            "{:<18} ndcg {:.4}  mmf {:.4}  W {:.4}  overshoot {}",
            s.policy, s.ndcg_at_k, s.mmf_at_k, s.w_lambda_at_k, s.overshoot_count
        );
    }
    println!(
        "{} horizons, {} arrivals dropped",
        outcome.summary.horizons, outcome.summary.dropped_arrivals
    );
    Ok(())
}
