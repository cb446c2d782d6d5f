//! Wall time of each sub-step of one Strang step, per method and layout.
//!
//! ```text
//! cargo run --release --example sweep_timing -- 32
//! ```

use std::time::Instant;

use vlasov::driver::Stepper;
use vlasov::grid::{LayoutDescriptor, LayoutStrategy, Method};
use vlasov::problem::{initialize_with, ProblemSpec};

fn main() -> vlasov::error::Result<()> {
    let dof: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(32);
    let problem = ProblemSpec::landau4d();
    for (method, degree, strategy) in [
        (Method::Spline, 0, LayoutStrategy::Transpose),
        (Method::Spline, 0, LayoutStrategy::Strided),
        (Method::Dg, 3, LayoutStrategy::Strided),
        (Method::Dg, 3, LayoutStrategy::Transpose),
    ] {
        let grid = problem.uniform_grid(method, degree, dof)?;
        let mut f = initialize_with(&problem, &grid, LayoutDescriptor::canonical(&grid, strategy))?;
        let stepper = Stepper::new(&grid);
        let tau = 0.1;
        let mut times = Vec::new();
        for round in 0..3 {
            let mut row = Vec::new();
            for a in 0..2 {
                let t = Instant::now();
                stepper.free_stream(&mut f, a, 0.5 * tau)?;
                row.push(t.elapsed().as_secs_f64());
            }
            let t = Instant::now();
            let e = stepper.electric_field(&f)?;
            row.push(t.elapsed().as_secs_f64());
            for a in 0..2 {
                let t = Instant::now();
                stepper.accelerate(&mut f, &e, a, tau)?;
                row.push(t.elapsed().as_secs_f64());
            }
            if round > 0 {
                times.push(row);
            }
            for a in 0..2 {
                stepper.free_stream(&mut f, a, 0.5 * tau)?;
            }
        }
        let label = format!("{:?}{} {}", method, if method == Method::Dg { "4" } else { "" }, strategy.name());
        let ms: Vec<String> = (0..5)
            .map(|k| format!("{:7.2}", 1e3 * times.iter().map(|r| r[k]).sum::<f64>() / times.len() as f64))
            .collect();
        println!("{label:<20} x1 {} x2 {} field {} v1 {} v2 {}  [ms]", ms[0], ms[1], ms[2], ms[3], ms[4]);
    }
    Ok(())
}
