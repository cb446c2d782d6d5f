//! Driving the command-line front end from a configuration file.

use vlasov::cli::{execute, Command};

const CONFIG: &str = "\
# nonlinear Landau damping, fourth-order dG
problem = landau2d
method = dg
dg_order = 4
dof = 64
t_end = 5
diag_every = 10
";

fn main() -> std::io::Result<()> {
    let dir = std::env::temp_dir().join("vlasov_config_example");
    std::fs::create_dir_all(&dir)?;
    let cfg = dir.join("landau.cfg");
    let csv = dir.join("landau.csv");
    std::fs::write(&cfg, format!("{CONFIG}out_csv = {}\n", csv.display()))?;

    let code = execute(Command::Run, &cfg);
    println!("exit code {code}");
    print!("{}", std::fs::read_to_string(&csv)?);

    // an unknown key is a configuration error (exit code 2)
    std::fs::write(&cfg, "problem = landau2d\nmethod = spline\ndof = 16\nt_end = 1\nfoo = 1\n")?;
    println!("exit code with a bad key: {}", execute(Command::Run, &cfg));
    Ok(())
}
