//! Radial Green profiles on hyperbolic space and the planar counterexample.

use critlab::radial::{self, RadialModel};

fn main() -> critlab::Result<()> {
    for dim in 2..=5 {
        let (shift, second) = radial::hyperbolic_asymptotic_coeffs(dim);
        let fit = radial::fit_expansion(dim, (8.0, 15.0), 71)?;
        println!(
            "N = {dim}: W -> {shift}, second coefficient {second:.4}, fitted {:.4} (rel. error {:.1e})",
            fit.fitted, fit.relative_error
        );
    }
    println!("G(1) on H^3: {:.10}", radial::hyperbolic_green(3, 1.0)?);

    let grid = radial::linear_grid(1.5, 40.0, 60);
    let model = RadialModel::PlanarInverseSquare { lambda: -1.0 };
    let (lambda, v) = model.exact_solution().expect("closed form");
    let res = radial::radial_residual(&model, v.as_ref(), lambda, &radial::inverse_square, &grid, 1e-6)?;
    println!("planar exact solution residual: {:.2e}", res.max_relative);

    let rep = radial::planar_example_report(-1.0, 0.0, &grid)?;
    println!(
        "|V1 - V2|/2 over W: {:?}, inequality violated everywhere: {}",
        rep.ratio_range, rep.inequality_violated_everywhere
    );
    Ok(())
}
