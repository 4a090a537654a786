//! Critical Hardy weights `W_μ` and their invariance identity.

use critlab::generators;
use critlab::green::{dirichlet_green, green_potential};
use critlab::hardy::{alpha_roots, critical_hardy_weight, invariance_check};
use critlab::operator::Domain;

fn main() -> critlab::Result<()> {
    let op = generators::path(61, 1.0, 0.05)?;
    let domain = Domain::interior(op.graph());
    let g = dirichlet_green(&op, &domain)?;
    let center = generators::path_center(61);

    let mu: Vec<f64> = (0..op.n())
        .map(|x| if op.graph().is_boundary(x) { 0.0 } else { (-(x.abs_diff(center) as f64)).exp() })
        .collect();
    let h = critical_hardy_weight(&op, &g, &mu)?;
    println!("W_mu: residual {:.2e}, {} negative nodes", h.residual, h.negative_nodes.len());
    let g_mu = green_potential(&g, &mu)?;
    println!("invariance: {:.2e}", invariance_check(&g, &h.w, &g_mu)?);

    for lambda in [0.1, 0.25, 0.5, 0.75] {
        let (a, b) = alpha_roots(lambda)?;
        println!("lambda {lambda}: alpha roots {a:.6}, {b:.6}");
    }
    Ok(())
}
