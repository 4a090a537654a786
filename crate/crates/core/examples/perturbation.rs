//! Neumann series, 3G constant and the sandwich bounds for `P − εV`.

use critlab::generators;
use critlab::green::dirichlet_green;
use critlab::operator::Domain;
use critlab::perturbation::{
    direct_perturbed_green, equivalence_interval, iterated_kernels, neumann_series, resolvent_check, sandwich_check,
    three_g_constant,
};

fn main() -> critlab::Result<()> {
    let op = generators::path(41, 1.0, 0.0)?;
    let domain = Domain::interior(op.graph());
    let g = dirichlet_green(&op, &domain)?;
    let n = op.n();
    let v: Vec<f64> = (0..n).map(|x| if op.graph().is_boundary(x) { 0.0 } else { 1.0 / (1.0 + x as f64) }).collect();

    let c0 = three_g_constant(&g, &v)?;
    let eps = 0.25 / c0;
    println!("C0 = {c0:.4}, eps = {eps:.4}");

    let neumann = neumann_series(&g, &v, eps, 1e-12)?;
    println!(
        "Neumann: {} terms, rho = {:.4}, converged {}",
        neumann.iterations, neumann.spectral_radius, neumann.converged
    );
    println!("resolvent residual: {:.2e}", resolvent_check(&g, &neumann.h, &v, eps)?);

    let direct = direct_perturbed_green(&op, &v, eps, &domain)?;
    let diff = (&neumann.h - direct.values()).amax() / direct.values().amax();
    println!("Neumann vs direct solve: {diff:.2e}");

    let s = sandwich_check(&g, &direct, eps, c0)?;
    println!("sandwich: lower {} upper {}", s.lower_holds, s.upper_holds);
    let k = iterated_kernels(&g, &v, 5)?;
    println!("iterated kernels G^(i) <= C0^i G: {} (worst ratio {:.3})", k.bound_holds, k.worst_bound_ratio);

    for p in equivalence_interval(&op, &v, &[0.0, 0.5 / c0, 1.0 / c0], &domain)? {
        println!("lambda {:.4}: ratio {:?}", p.lambda, p.ratio);
    }
    Ok(())
}
