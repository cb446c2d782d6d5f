//! 2x2v two-stream instability, written to a diagnostics CSV.
//!
//! ```text
//! cargo run --release --example two_stream -- dg4 32 300 two_stream.csv
//! ```

use std::fs::File;
use std::io::{BufWriter, Write};

use vlasov::driver::{run_with, RunConfig, DIAGNOSTICS_CSV_HEADER};
use vlasov::error::Result;
use vlasov::grid::Scheme;
use vlasov::problem::ProblemSpec;

fn main() -> Result<()> {
    let mut args = std::env::args().skip(1);
    let scheme = args.next().and_then(|s| Scheme::parse(&s)).unwrap_or(Scheme::dg(4)?);
    let dof: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(16);
    let t_end: f64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(40.0);
    let path = args.next().unwrap_or_else(|| "two_stream.csv".into());

    let p = ProblemSpec::twostream4d();
    let grid = p.uniform_grid(scheme.method, scheme.degree, dof)?;
    let mut out = BufWriter::new(File::create(&path)?);
    writeln!(out, "{DIAGNOSTICS_CSV_HEADER}")?;
    let mut io = Ok(());
    let result = run_with(&RunConfig::new(p, grid).t_end(t_end), |r| {
        if io.is_ok() {
            io = writeln!(out, "{}", r.csv_row());
        }
        if (r.time * 10.0).round() as i64 % 100 == 0 {
            eprintln!("t = {:6.1}  electric energy {:.4e}", r.time, r.electric_energy);
        }
    })?;
    io?;
    out.flush()?;
    let peak = result.records.iter().max_by(|a, b| a.electric_energy.total_cmp(&b.electric_energy)).unwrap();
    println!("{}: peak electric energy {:.4e} at t = {:.1}; wrote {path}", scheme.label(), peak.electric_energy, peak.time);
    Ok(())
}
