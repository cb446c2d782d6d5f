//! Time per Strang step and allocation peak for each method and layout.
//!
//! ```text
//! cargo run --release --example bench_layouts -- 32
//! ```

use vlasov::bench::alloc::TrackingAllocator;
use vlasov::bench::{bench_step, BENCH_CSV_HEADER};
use vlasov::driver::RunConfig;
use vlasov::error::Result;
use vlasov::grid::{LayoutStrategy, Scheme};
use vlasov::problem::ProblemSpec;

#[global_allocator]
static ALLOC: TrackingAllocator = TrackingAllocator;

fn main() -> Result<()> {
    let dof: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(16);
    let p = ProblemSpec::landau4d();
    println!("{BENCH_CSV_HEADER}");
    for scheme in [Scheme::SPLINE, Scheme::dg(4)?] {
        for strategy in [LayoutStrategy::Transpose, LayoutStrategy::Strided] {
            let grid = p.uniform_grid(scheme.method, scheme.degree, dof)?;
            let cfg = RunConfig::new(p.clone(), grid).strategy(strategy, 8).workers(1);
            println!("{}", bench_step(&cfg, 5)?.csv_row());
        }
    }
    Ok(())
}
