use std::path::Path;
use std::process::{Command, Output};

fn vlasov(sub: &str, cfg: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vlasov")).arg(sub).arg(cfg).output().unwrap()
}

fn config(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
    let p = dir.join(format!("{name}.cfg"));
    let csv = dir.join(format!("{name}.csv"));
    std::fs::write(&p, format!("{body}\nout_csv = {}\n", csv.display())).unwrap();
    p
}

#[test]
fn run_writes_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "run", "problem = landau2d\nmethod = dg\ndg_order = 3\ndof = 24\nt_end = 1");
    let out = vlasov("run", &cfg);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("run.csv")).unwrap();
    assert_eq!(text.lines().count(), 12);
    let meta = std::fs::read_to_string(dir.path().join("run.meta")).unwrap();
    assert!(meta.contains("resolved.method = dg3"), "{meta}");
}

#[test]
fn configuration_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "bad", "problem = landau2d\nmethod = spline\ndof = 16\nt_end = 1\nfrobnicate = 3");
    let out = vlasov("run", &cfg);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("frobnicate"));
    assert_eq!(vlasov("bench", &dir.path().join("nope.cfg")).status.code(), Some(2));
}

#[test]
fn non_finite_state_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    for (name, method) in [("dg", "method = dg\ndg_order = 2"), ("spline", "method = spline")] {
        let cfg = config(dir.path(), name, &format!("problem = landau2d\n{method}\ndof = 16\ntau = 1e308\nt_end = 1e308"));
        let out = vlasov("run", &cfg);
        assert_eq!(out.status.code(), Some(3), "{name}: {}", String::from_utf8_lossy(&out.stderr));
        let meta = std::fs::read_to_string(dir.path().join(format!("{name}.meta"))).unwrap();
        assert!(meta.contains("status = aborted"), "{meta}");
    }
}

#[test]
fn bench_and_convergence_row_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "bench", "problem = landau2d\nmethod = spline,dg4\ndof = 16,32\nsteps = 3");
    assert_eq!(vlasov("bench", &cfg).status.code(), Some(0));
    assert_eq!(std::fs::read_to_string(dir.path().join("bench.csv")).unwrap().lines().count(), 1 + 4);

    let cfg = config(
        dir.path(),
        "conv",
        "problem = landau2d\nmethod = spline,dg4\ndof = 16,32\nreference_dof = 128\nt_eval = 0.2,0.4",
    );
    assert_eq!(vlasov("convergence", &cfg).status.code(), Some(0));
    assert_eq!(std::fs::read_to_string(dir.path().join("conv.csv")).unwrap().lines().count(), 1 + 8);
}
