//! Periodic 1D advection of `exp(cos x)` by cubic splines and by dG of
//! several orders, all with the same number of unknowns.
//!
//! ```text
//! cargo run --release --example advect_line -- 60 200
//! ```

use std::f64::consts::PI;

use vlasov::dg::{advect_line_dg, DgBasis};
use vlasov::error::Result;
use vlasov::spline::advect_line_spline;

fn profile(x: f64) -> f64 {
    x.cos().exp()
}

/// Max error after `steps` shifts of `0.1` for each scheme, with `dof` unknowns.
pub fn errors(dof: usize, steps: usize) -> Result<Vec<(String, f64)>> {
    let l = 2.0 * PI;
    let shift = 0.1;
    let total = shift * steps as f64;
    let mut rows = Vec::new();

    let h = l / dof as f64;
    let mut u: Vec<f64> = (0..dof).map(|i| profile(i as f64 * h)).collect();
    for _ in 0..steps {
        u = advect_line_spline(&u, shift, h)?;
    }
    let err = (0..dof).map(|i| (u[i] - profile(i as f64 * h - total)).abs()).fold(0.0, f64::max);
    rows.push(("spline".to_string(), err));

    for degree in 0..=5 {
        let np = degree + 1;
        if dof % np != 0 {
            continue;
        }
        let cells = dof / np;
        let h = l / cells as f64;
        let basis = DgBasis::new(degree);
        let xs: Vec<f64> = (0..cells).flat_map(|c| basis.nodes.iter().map(move |x| (c as f64 + x) * h)).collect();
        let mut u: Vec<f64> = xs.iter().map(|&x| profile(x)).collect();
        for _ in 0..steps {
            u = advect_line_dg(&u, shift, h, degree)?;
        }
        let err = xs.iter().zip(&u).map(|(&x, v)| (v - profile(x - total)).abs()).fold(0.0, f64::max);
        rows.push((format!("dg{np}"), err));
    }
    Ok(rows)
}

fn main() -> Result<()> {
    let mut args = std::env::args().skip(1).map(|s| s.parse::<usize>().ok());
    let dof = args.next().flatten().unwrap_or(60);
    let steps = args.next().flatten().unwrap_or(200);
    println!("dof = {dof}, {steps} steps of 0.1");
    for (name, err) in errors(dof, steps)? {
        println!("{name:>7}  max error {err:.3e}");
    }
    Ok(())
}
