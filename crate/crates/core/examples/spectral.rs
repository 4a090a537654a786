//! Principal eigenvalues by three routes, heat traces and the criticality probe.

use critlab::generators;
use critlab::green::{dirichlet_green, Exhaustion};
use critlab::operator::Domain;
use critlab::spectral::{
    criticality_probe, heat_trace, principal_eigenvalue_pencil, principal_eigenvalue_perron, spectrum,
    torsion_bound_audit, weighted_green_operator,
};

fn main() -> critlab::Result<()> {
    let op = generators::grid2d(6, 0.0)?;
    let domain = Domain::interior(op.graph());
    let w: Vec<f64> = (0..op.n()).map(|x| if op.graph().is_boundary(x) { 0.0 } else { 1.0 }).collect();

    let pencil = principal_eigenvalue_pencil(&op, &w, &domain)?;
    let perron = principal_eigenvalue_perron(&op, &w, &domain)?;
    println!("lambda0: pencil {:.12}, Perron {:.12}", pencil.lambda0, perron.lambda0);
    let g = dirichlet_green(&op, &domain)?;
    let wg = weighted_green_operator(&g, &w, op.graph())?;
    println!("1/rho(G_W) = {:.12}", wg.lambda0());

    let s = spectrum(&op, &domain)?;
    for t in [0.1, 1.0, 10.0] {
        println!("heat trace at t = {t}: {:.8}", heat_trace(&s.values, t)?);
    }
    let audit = torsion_bound_audit(&op, &domain, 0.0, 2.0)?;
    println!("torsion audit: {} eigenvalues, {} violations", audit.rows.len(), audit.violations.len());

    // λ0(M_R) of the point mass on the free line decays like 2/(R+1)
    let line = generators::path(4095, 1.0, 0.0)?;
    let c = generators::path_center(4095);
    let ex = Exhaustion::by_radius(line.graph(), c, &[4, 16, 64, 256, 1024, 2047])?;
    let mut delta = vec![0.0; line.n()];
    delta[c] = 1.0;
    let probe = criticality_probe(&line, &ex, &delta)?;
    println!("line: lambda0 {:?} -> {:?}", probe.lambda0, probe.verdict);
    Ok(())
}
