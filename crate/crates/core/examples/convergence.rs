//! Errors of spline and dG runs against a fine spline reference on 1x1v
//! Landau damping, and the dof ratio at matched error.
//!
//! ```text
//! cargo run --release --example convergence -- 10 512
//! ```

use vlasov::bench::{convergence_study, curve, geometric_mean, matched_dof_ratios, StudyConfig};
use vlasov::error::Result;
use vlasov::grid::Scheme;
use vlasov::problem::ProblemSpec;

fn main() -> Result<()> {
    let mut args = std::env::args().skip(1);
    let t: f64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(5.0);
    let reference: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(256);
    let dofs: Vec<usize> = [16, 32, 64].iter().copied().filter(|d| 4 * d <= reference).collect();
    let schemes = vec![Scheme::SPLINE, Scheme::dg(4)?, Scheme::dg(6)?];
    let study = StudyConfig::new(ProblemSpec::landau2d(), schemes.clone(), dofs, vec![t], reference);
    let points = convergence_study(&study)?;
    for &s in &schemes {
        let row: Vec<String> = curve(&points, s, t).iter().map(|(d, e)| format!("{d}:{e:.2e}")).collect();
        println!("{:<6} {}", s.label(), row.join("  "));
    }
    let base = curve(&points, Scheme::SPLINE, t);
    for &s in &schemes[1..] {
        let r = matched_dof_ratios(&base, &curve(&points, s, t));
        if !r.is_empty() {
            println!("{} needs {:.2}x the spline dof at matched error", s.label(), geometric_mean(&r));
        }
    }
    Ok(())
}
