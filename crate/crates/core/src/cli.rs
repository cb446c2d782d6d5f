//! The `run`, `bench` and `convergence` commands.
//!
//! Each command reads a [`ConfigFile`], writes its CSV and a `.meta`
//! sidecar echoing the resolved configuration, and returns an exit code:
//! `0` on success, `2` for configuration errors, `3` for numerical aborts
//! and `1` for other failures such as unwritable output.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::bench::{
    bench_step, convergence_study, curve, geometric_mean, matched_dof_ratios, StudyConfig, BENCH_CSV_HEADER,
    CONVERGENCE_CSV_HEADER,
};
use crate::config::{ConfigFile, Settings};
use crate::driver::{run_with, RunConfig, DIAGNOSTICS_CSV_HEADER};
use crate::error::{Error, Result};
use crate::grid::{LayoutDescriptor, Method, Scheme};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Run,
    Bench,
    Convergence,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Run => "run",
            Command::Bench => "bench",
            Command::Convergence => "convergence",
        }
    }

    fn default_csv(self) -> &'static str {
        match self {
            Command::Run => "diagnostics.csv",
            Command::Bench => "bench.csv",
            Command::Convergence => "convergence.csv",
        }
    }
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InvalidConfig(_)
        | Error::InvalidAxis(_)
        | Error::InvalidGrid(_)
        | Error::InvalidLayout(_)
        | Error::DimensionMismatch(_) => EXIT_CONFIG,
        Error::NonFinite(_) => EXIT_NUMERICAL,
        _ => EXIT_FAILURE,
    }
}

/// Runs `command` on the config at `path`, reporting errors on stderr.
pub fn execute(command: Command, path: &Path) -> i32 {
    let result = match command {
        Command::Run => run_command(path),
        Command::Bench => bench_command(path),
        Command::Convergence => convergence_command(path),
    };
    match result {
        Ok(csv) => {
            println!("wrote {}", csv.display());
            EXIT_OK
        }
        Err(e) => {
            let code = exit_code(&e);
            let kind = if code == EXIT_CONFIG { "configuration error" } else { "error" };
            eprintln!("{}: {kind}: {e}", command.name());
            code
        }
    }
}

pub fn cmd_run(path: &Path) -> i32 {
    execute(Command::Run, path)
}

pub fn cmd_bench(path: &Path) -> i32 {
    execute(Command::Bench, path)
}

pub fn cmd_convergence(path: &Path) -> i32 {
    execute(Command::Convergence, path)
}

fn load(path: &Path) -> Result<(ConfigFile, Settings)> {
    let file = ConfigFile::load(path)?;
    let settings = Settings::from_file(&file)?;
    Ok((file, settings))
}

fn out_path(settings: &Settings, command: Command) -> PathBuf {
    settings.out_csv.clone().unwrap_or_else(|| PathBuf::from(command.default_csv()))
}

/// `name.csv` -> `name.meta`.
pub fn meta_path(csv: &Path) -> PathBuf {
    csv.with_extension("meta")
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

fn meta_text(command: Command, file: &ConfigFile, extra: &[(String, String)]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "command = {}", command.name());
    let _ = writeln!(s, "version = {}", env!("CARGO_PKG_VERSION"));
    for (k, v) in file.entries() {
        let _ = writeln!(s, "config.{k} = {v}");
    }
    for (k, v) in extra {
        let _ = writeln!(s, "{k} = {v}");
    }
    s
}

fn write_meta(csv: &Path, text: &str) -> Result<()> {
    let mut w = create(&meta_path(csv))?;
    w.write_all(text.as_bytes())?;
    w.flush()?;
    Ok(())
}

/// Builds the run configuration a `run` config file describes.
pub fn run_config(settings: &Settings, csv: &Path) -> Result<RunConfig> {
    let t_end = settings.t_end.ok_or_else(|| Error::InvalidConfig("missing key `t_end`".into()))?;
    let scheme = settings.single_scheme()?;
    let grid = settings.problem.grid(scheme.method, scheme.degree, &settings.run_dofs()?)?;
    let mut cfg = RunConfig::new(settings.problem.clone(), grid).tau(settings.tau).t_end(t_end);
    cfg.layout = LayoutDescriptor::canonical(&cfg.grid, settings.strategy_for(scheme));
    cfg.layout.cache_block = settings.cache_block;
    cfg.diag_every = settings.diag_every;
    cfg.workers = settings.workers;
    cfg.dg_sampling = settings.sampling;
    cfg.snapshot_times = settings.snapshot_times.clone();
    if !cfg.snapshot_times.is_empty() {
        cfg.snapshot_dir = Some(settings.snapshot_dir.clone().unwrap_or_else(|| {
            let stem = csv.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            csv.with_file_name(format!("{stem}_snapshots"))
        }));
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run_command(path: &Path) -> Result<PathBuf> {
    let (file, settings) = load(path)?;
    let csv = out_path(&settings, Command::Run);
    let cfg = run_config(&settings, &csv)?;

    let mut w = create(&csv)?;
    writeln!(w, "{DIAGNOSTICS_CSV_HEADER}")?;
    let mut io_error = None;
    let result = run_with(&cfg, |rec| {
        if io_error.is_none() {
            if let Err(e) = writeln!(w, "{}", rec.csv_row()) {
                io_error = Some(e);
            }
        }
    });
    w.flush()?;
    if let Some(e) = io_error {
        return Err(e.into());
    }

    let mut extra = vec![
        ("resolved.method".to_string(), cfg.grid.scheme().label()),
        ("resolved.dof".to_string(), join(&cfg.grid.dofs())),
        ("resolved.layout".to_string(), cfg.layout.strategy.name().to_string()),
        ("resolved.cache_block".to_string(), cfg.layout.cache_block.to_string()),
        ("resolved.tau".to_string(), format!("{:.16e}", cfg.tau)),
        ("resolved.steps".to_string(), cfg.steps().to_string()),
        ("resolved.diag_every".to_string(), cfg.diag_every.to_string()),
        ("resolved.workers".to_string(), workers_text(cfg.workers)),
        ("resolved.poisson_sampling".to_string(), sampling_text(&cfg)),
    ];
    let status = match &result {
        Ok(out) => {
            for s in &out.snapshots {
                if let Some(p) = &s.path {
                    extra.push((format!("snapshot.{:.4}", s.time), p.display().to_string()));
                }
            }
            "ok".to_string()
        }
        Err(e) => format!("aborted: {e}"),
    };
    extra.push(("status".into(), status));
    write_meta(&csv, &meta_text(Command::Run, &file, &extra))?;
    result.map(|_| csv)
}

fn bench_command(path: &Path) -> Result<PathBuf> {
    let (file, settings) = load(path)?;
    let csv = out_path(&settings, Command::Bench);
    let mut configs = Vec::new();
    for &scheme in &settings.schemes {
        for &dof in &settings.dofs {
            let grid = settings.problem.uniform_grid(scheme.method, scheme.degree, dof)?;
            let mut cfg = RunConfig::new(settings.problem.clone(), grid).tau(settings.tau);
            cfg.layout = LayoutDescriptor::canonical(&cfg.grid, settings.strategy_for(scheme));
            cfg.layout.cache_block = settings.cache_block;
            cfg.workers = settings.workers;
            cfg.dg_sampling = settings.sampling;
            cfg.validate()?;
            configs.push(cfg);
        }
    }
    if settings.steps < 3 {
        return Err(Error::InvalidConfig(format!("`steps` must be at least 3, got {}", settings.steps)));
    }

    let mut text = format!("{BENCH_CSV_HEADER}\n");
    let mut extra = Vec::new();
    for cfg in &configs {
        let r = bench_step(cfg, settings.steps)?;
        text.push_str(&r.csv_row());
        text.push('\n');
        extra.push((
            format!("field_bytes.{}.{}", r.scheme.label(), r.dof_per_direction),
            r.field_bytes.to_string(),
        ));
    }
    let mut w = create(&csv)?;
    w.write_all(text.as_bytes())?;
    w.flush()?;
    extra.push(("resolved.steps".into(), settings.steps.to_string()));
    extra.push(("resolved.warmup_steps".into(), crate::bench::WARMUP_STEPS.to_string()));
    write_meta(&csv, &meta_text(Command::Bench, &file, &extra))?;
    Ok(csv)
}

fn convergence_command(path: &Path) -> Result<PathBuf> {
    let (file, settings) = load(path)?;
    let csv = out_path(&settings, Command::Convergence);
    let reference_dof =
        settings.reference_dof.ok_or_else(|| Error::InvalidConfig("missing key `reference_dof`".into()))?;
    if settings.t_eval.is_empty() {
        return Err(Error::InvalidConfig("missing key `t_eval`".into()));
    }
    if settings.problem.ndim() != 2 {
        return Err(Error::InvalidConfig("convergence studies run on a 1x1v problem".into()));
    }
    let mut study = StudyConfig::new(
        settings.problem.clone(),
        settings.schemes.clone(),
        settings.dofs.clone(),
        settings.t_eval.clone(),
        reference_dof,
    );
    study.tau = settings.tau;
    study.workers = settings.workers;
    study.validate()?;
    let points = convergence_study(&study)?;

    let mut text = format!("{CONVERGENCE_CSV_HEADER}\n");
    for p in &points {
        text.push_str(&p.csv_row());
        text.push('\n');
    }
    let mut w = create(&csv)?;
    w.write_all(text.as_bytes())?;
    w.flush()?;

    let mut extra = vec![(
        "reference".to_string(),
        format!("spline at {reference_dof} points per direction, standing in for a finer reference"),
    )];
    if study.schemes.contains(&Scheme::SPLINE) {
        for &t in &study.t_eval {
            let base = curve(&points, Scheme::SPLINE, t);
            for s in study.schemes.iter().filter(|s| s.method == Method::Dg) {
                let ratios = matched_dof_ratios(&base, &curve(&points, *s, t));
                if !ratios.is_empty() {
                    let alpha = geometric_mean(&ratios);
                    extra.push((format!("alpha.{}.t{t}", s.label()), format!("{alpha:.6}")));
                    println!("alpha ({} vs spline, t = {t}) = {alpha:.3}", s.label());
                }
            }
        }
    }
    write_meta(&csv, &meta_text(Command::Convergence, &file, &extra))?;
    Ok(csv)
}

fn join(v: &[usize]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn workers_text(w: Option<usize>) -> String {
    w.map(|w| w.to_string()).unwrap_or_else(|| format!("default ({})", rayon::current_num_threads()))
}

fn sampling_text(cfg: &RunConfig) -> String {
    match cfg.dg_sampling {
        crate::field::DgSampling::CellCenters => "centers".into(),
        crate::field::DgSampling::Subcell => "subcell".into(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
        let p = dir.join(name);
        std::fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn run_writes_csv_and_meta() {
        let dir = tempfile::tempdir().unwrap();
        let csv = dir.path().join("out.csv");
        let cfg = write_config(
            dir.path(),
            "a.cfg",
            &format!("problem = landau2d\nmethod = spline\ndof = 32\nt_end = 1\nout_csv = {}\n", csv.display()),
        );
        assert_eq!(cmd_run(&cfg), EXIT_OK);
        let text = std::fs::read_to_string(&csv).unwrap();
        assert_eq!(text.lines().count(), 12);
        assert_eq!(text.lines().next().unwrap(), DIAGNOSTICS_CSV_HEADER);
        let meta = std::fs::read_to_string(dir.path().join("out.meta")).unwrap();
        assert!(meta.contains("config.method = spline"));
        assert!(meta.contains("status = ok"));
    }

    #[test]
    fn exit_codes() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = write_config(dir.path(), "b.cfg", "problem = landau2d\nmethod = dg\ndof = 32\nt_end = 1\n");
        assert_eq!(cmd_run(&cfg), EXIT_CONFIG);
        let cfg = write_config(dir.path(), "c.cfg", "problem = landau2d\ncolour = blue\n");
        assert_eq!(cmd_run(&cfg), EXIT_CONFIG);
        assert_eq!(cmd_run(&dir.path().join("missing.cfg")), EXIT_CONFIG);
        assert_eq!(exit_code(&Error::NonFinite("v1 advection".into())), EXIT_NUMERICAL);
    }

    #[test]
    fn convergence_rows() {
        let dir = tempfile::tempdir().unwrap();
        let csv = dir.path().join("conv.csv");
        let cfg = write_config(
            dir.path(),
            "d.cfg",
            &format!(
                "problem = landau2d\nmethod = spline,dg\ndg_order = 4\ndof = 16,32\nt_eval = 0.5\nreference_dof = 128\nout_csv = {}\n",
                csv.display()
            ),
        );
        assert_eq!(cmd_convergence(&cfg), EXIT_OK);
        let text = std::fs::read_to_string(&csv).unwrap();
        assert_eq!(text.lines().count(), 1 + 4);
        let meta = std::fs::read_to_string(dir.path().join("conv.meta")).unwrap();
        assert!(meta.contains("alpha.dg4.t0.5"), "{meta}");
    }
}
