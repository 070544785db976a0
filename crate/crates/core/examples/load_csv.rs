//! Loading the three CSV inputs and deriving default provider weights.
//!
//!     cargo run --example load_csv

use fairmmf::dataset::{load_dataset, DegeneratePolicy, ScoreOptions};
use fairmmf::types::{default_weights, HorizonConfig};

fn main() -> fairmmf::Result<()> {
    let data = concat!(env!("CARGO_MANIFEST_DIR"), "/data");
    let ds = load_dataset(
        format!("{data}/tiny_scores.csv"),
        format!("{data}/tiny_providers.csv"),
        format!("{data}/tiny_arrivals.csv"),
        ScoreOptions {
            normalize: true,
            degenerate: DegeneratePolicy::Midpoint,
        },
    )?;
    println!(
        "{} users, {} items, {} providers, {} arrivals",
        ds.users.len(),
        ds.items.len(),
        ds.providers.len(),
        ds.arrivals.len()
    );
    for p in 0..ds.catalog.provider_count() {
        let items: Vec<&str> = ds.catalog.items_of(p).iter().map(|&i| ds.items.id(i)).collect();
        println!("  {} owns {:?}", ds.providers.id(p), items);
    }

    // Caps proportional to catalog share, slightly above an even split.
    let horizon = HorizonConfig::new(2, 8, 1.0)?;
    let w = default_weights(&ds.catalog, &horizon)?;
    println!("gamma = {:?} (K*T = {})", w.gamma, horizon.slots());

    // An unreadable row reports its line.
    let dir = std::env::temp_dir().join("fairmmf_load_csv_example");
    std::fs::create_dir_all(&dir)?;
    let bad = dir.join("scores.csv");
    std::fs::write(&bad, "user_id,item_id,score\nu0,i0,0.3\nu0,i1,high\n")?;
    let err = fairmmf::dataset::load_scores(&bad, ScoreOptions::default()).unwrap_err();
    println!("bad file: {err}");
    Ok(())
}
