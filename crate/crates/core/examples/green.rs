//! Dirichlet Green function of a path and its monotone exhaustion limit.

use critlab::generators;
use critlab::green::{dirichlet_green, exhaustion_probe, reproduction_residual, torsion_function, Exhaustion};
use critlab::operator::Domain;

fn main() -> critlab::Result<()> {
    // subcritical: a constant potential keeps the Green function bounded
    let op = generators::path(401, 1.0, 0.1)?;
    let center = generators::path_center(401);
    let ex = Exhaustion::by_radius(op.graph(), center, &[6, 12, 25, 50, 100, 200])?;

    let level = &ex.levels()[2];
    let g = dirichlet_green(&op, level)?;
    println!("G_M(0,0) on {} nodes: {:.6}", level.len(), g.get(center, center));
    println!("reproduction residual: {:.2e}", reproduction_residual(&op, &g)?);
    let t = torsion_function(&op, level)?;
    println!("torsional rigidity: {:.4}", t.rigidity);

    let trace = exhaustion_probe(&op, &ex, 1e-8)?;
    println!("probe max per level: {:?}", trace.probe_max);
    println!("converged: {} ({:?})", trace.converged, trace.trend);

    // c = 0 on the line: the same probe grows without bound
    let free = generators::path(401, 1.0, 0.0)?;
    let trace = exhaustion_probe(&free, &ex, 1e-8)?;
    println!("free path: {:?}, probe max {:?}", trace.trend, trace.probe_max);

    let whole = Domain::interior(op.graph());
    println!("host interior has {} nodes", whole.len());
    Ok(())
}
