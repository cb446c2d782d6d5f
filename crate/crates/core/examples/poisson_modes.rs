//! Density of a perturbed Maxwellian, the periodic Poisson solve and the
//! electric energy, compared with the closed forms.

use std::f64::consts::PI;

use vlasov::driver::default_layout;
use vlasov::error::Result;
use vlasov::field::{compute_density, electric_energy, solve_poisson};
use vlasov::grid::{DistributionField, Method};
use vlasov::problem::ProblemSpec;

fn main() -> Result<()> {
    let p = ProblemSpec::twostream4d();
    let (eps, k) = (p.epsilon, p.k);
    for (method, degree) in [(Method::Spline, 0), (Method::Dg, 3)] {
        let grid = p.uniform_grid(method, degree, 32)?;
        // same spatial perturbation as the two-stream data, Maxwellian in v
        let f = DistributionField::from_fn(grid.clone(), default_layout(&grid), |x| {
            (1.0 + eps * (k * x[0]).cos() * (k * x[1]).cos()) * (-(x[2] * x[2] + x[3] * x[3]) / 2.0).exp() / (2.0 * PI)
        })?;
        let rho = compute_density(&f);
        let e = solve_poisson(&rho)?;
        let (x1, x2) = (grid.coordinates(0), grid.coordinates(1));
        let mut err: f64 = 0.0;
        for (j, &b) in x2.iter().enumerate() {
            for (i, &a) in x1.iter().enumerate() {
                let want = eps / (2.0 * k) * (k * a).sin() * (k * b).cos();
                err = err.max((e.components[0][i + x1.len() * j] - want).abs());
            }
        }
        let we = electric_energy(&e);
        let want = 25.0 * PI * PI * eps * eps / (4.0 * k * k);
        println!(
            "{:<6} max |E1 - exact| = {err:.2e}   energy {we:.6e} (closed form {want:.6e})",
            grid.scheme().label()
        );
    }
    Ok(())
}
