//! Linear and nonlinear Landau damping in 1x1v: electric energy history and
//! the fitted damping rate of the linear run.
//!
//! ```text
//! cargo run --release --example landau_damping -- 128 dg4
//! ```

use vlasov::driver::{run, RunConfig};
use vlasov::error::Result;
use vlasov::grid::Scheme;
use vlasov::problem::ProblemSpec;

/// Damping rate from a straight-line fit of the log peaks of the energy.
pub fn damping_rate(t: &[f64], energy: &[f64], from: f64) -> f64 {
    let peaks: Vec<(f64, f64)> = (1..energy.len() - 1)
        .filter(|&i| t[i] > from && energy[i] > energy[i - 1] && energy[i] >= energy[i + 1])
        .map(|i| (t[i], energy[i].ln()))
        .collect();
    let n = peaks.len() as f64;
    let (mt, my) = peaks.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0 / n, a.1 + p.1 / n));
    let sxy: f64 = peaks.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    let sxx: f64 = peaks.iter().map(|p| (p.0 - mt).powi(2)).sum();
    // the energy is quadratic in the field amplitude
    0.5 * sxy / sxx
}

fn main() -> Result<()> {
    let mut args = std::env::args().skip(1);
    let dof: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(128);
    let scheme = args.next().and_then(|s| Scheme::parse(&s)).unwrap_or(Scheme::SPLINE);

    let linear = ProblemSpec { epsilon: 1e-3, ..ProblemSpec::landau2d() };
    let grid = linear.nearest_grid(scheme, dof)?;
    let out = run(&RunConfig::new(linear, grid).t_end(30.0))?;
    let (t, e): (Vec<f64>, Vec<f64>) = out.records.iter().map(|r| (r.time, r.electric_energy)).unzip();
    println!("{} linear damping rate {:.4} (kinetic theory: -0.1533)", scheme.label(), damping_rate(&t, &e, 2.0));

    let p = ProblemSpec::landau2d();
    let grid = p.nearest_grid(scheme, dof)?;
    let out = run(&RunConfig::new(p, grid).t_end(50.0))?;
    println!("nonlinear run, eps = 0.5");
    println!("{:>6} {:>14} {:>14}", "t", "E energy", "total energy");
    for r in out.records.iter().step_by(50) {
        println!("{:6.1} {:14.6e} {:14.10}", r.time, r.electric_energy, r.total_energy);
    }
    Ok(())
}
