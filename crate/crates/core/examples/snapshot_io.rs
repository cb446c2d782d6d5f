//! Snapshots in the `VLF1` format: write during a run, read back into either
//! layout and evaluate off-grid.

use vlasov::driver::{run, RunConfig};
use vlasov::error::Result;
use vlasov::eval::Evaluator;
use vlasov::grid::{LayoutStrategy, Method};
use vlasov::problem::ProblemSpec;
use vlasov::snapshot;

fn main() -> Result<()> {
    let dir = std::env::temp_dir().join("vlasov_snapshot_example");
    let p = ProblemSpec::landau2d();
    let grid = p.uniform_grid(Method::Dg, 3, 64)?;
    let mut cfg = RunConfig::new(p, grid).t_end(2.0);
    cfg.snapshot_times = vec![0.0, 1.0, 2.0];
    cfg.snapshot_dir = Some(dir.clone());
    let out = run(&cfg)?;

    for snap in &out.snapshots {
        let path = snap.path.as_ref().expect("snapshot directory was set");
        let f = snapshot::load(path, LayoutStrategy::Strided)?;
        let ev = Evaluator::new(&f)?;
        let bytes = std::fs::metadata(path)?.len();
        println!(
            "t = {:.1}  {} ({bytes} bytes)  f(2pi, 0) = {:.12}",
            snap.time,
            path.file_name().unwrap().to_string_lossy(),
            ev.eval(&[2.0 * std::f64::consts::PI, 0.0])
        );
    }
    let last = snapshot::load(out.snapshots[2].path.as_ref().unwrap(), LayoutStrategy::Transpose)?;
    assert_eq!(last.canonical_data(), out.final_field.canonical_data());
    println!("final snapshot matches the in-memory field bitwise");
    Ok(())
}
