//! The dual step in isolation: projecting prices onto the feasible region
//! and one momentum update after a decision.
//!
//!     cargo run --example dual_projection

use fairmmf::dual::{dual_update, project_onto_dual_region, ProjectionWorkspace, RegParams};
use fairmmf::regularizer::{dual_slack, mmf_conjugate_value};
use fairmmf::types::{Catalog, Decision, DualState};

fn main() -> fairmmf::Result<()> {
    let gamma = [2.0, 1.0, 4.0];
    let lambda = 1.0;
    let mut ws = ProjectionWorkspace::new(gamma.len());

    let mu = [-0.6, 0.3, -0.5];
    println!("mu = {mu:?}, slack {:.3}", dual_slack(&mu, &gamma, lambda));
    let p = project_onto_dual_region(&mu, &gamma, lambda, &mut ws);
    println!("projected = {p:.4?}, slack {:.2e}", dual_slack(&p, &gamma, lambda));
    println!("conjugate at projection = {:.4}", mmf_conjugate_value(&p, &gamma, lambda)?);

    // Provider 1 gets the only slot while everyone still has budget.
    let catalog = Catalog::new(vec![0, 1, 2], 3)?;
    let decision = Decision::new(vec![1], &catalog)?;
    let mut dual = DualState::new(3, 0.05, 0.4)?;
    let remaining = gamma.to_vec();
    for step in 1..=3 {
        dual_update(
            &mut dual,
            &decision,
            &remaining,
            RegParams {
                gamma: &gamma,
                lambda,
            },
            &mut ws,
        )?;
        println!("step {step}: mu = {:.4?}", dual.mu);
    }
    Ok(())
}
