//! Strang-split time stepping, diagnostics and complete runs.
//!
//! One step is
//! `x1(v1 tau/2), x2(v2 tau/2), E = poisson(rho), v1(E1 tau), v2(E2 tau), x1(v1 tau/2), x2(v2 tau/2)`,
//! every factor being a translation along one axis applied through
//! [`line_sweep`]. Only the space axes present are used, so the same code
//! steps 1x1v and 2x2v problems.

use std::path::PathBuf;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::{compute_density, electric_energy, DgSampling, ElectricField, PoissonSolver};
use crate::grid::{DistributionField, GridSpec, LayoutDescriptor, LayoutStrategy, Method};
use crate::problem::{initialize_with, ProblemSpec};
use crate::snapshot;
use crate::sweep::{line_sweep, LineContext, LineKernel};
use crate::{dg::DgTableAdvection, spline::SplineAdvection};

pub const DEFAULT_TAU: f64 = 0.1;

/// Runs the inner kernel, then rejects non-finite output naming `stage`.
struct Checked<'a, K> {
    inner: K,
    stage: &'a str,
}

impl<K: LineKernel> LineKernel for Checked<'_, K> {
    type Scratch = K::Scratch;

    fn scratch(&self, len: usize) -> K::Scratch {
        self.inner.scratch(len)
    }

    fn apply(&self, ctx: &LineContext<'_>, input: &[f64], output: &mut [f64], scratch: &mut K::Scratch) -> Result<()> {
        self.inner.apply(ctx, input, output, scratch)?;
        if output.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonFinite(self.stage.to_string()))
        }
    }
}

/// Reusable per-grid state for stepping.
pub struct Stepper {
    grid: GridSpec,
    poisson: PoissonSolver,
    /// Node coordinates of each velocity axis.
    velocities: Vec<Vec<f64>>,
}

const X_STAGES: [[&str; 2]; 2] = [["x1 advection (first half)", "x2 advection (first half)"], [
    "x1 advection (second half)",
    "x2 advection (second half)",
]];
const V_STAGES: [&str; 2] = ["v1 advection", "v2 advection"];

impl Stepper {
    pub fn new(grid: &GridSpec) -> Self {
        Self::with_sampling(grid, DgSampling::default())
    }

    pub fn with_sampling(grid: &GridSpec, sampling: DgSampling) -> Self {
        let sd = grid.space_dims();
        Self {
            grid: grid.clone(),
            poisson: PoissonSolver::with_sampling(grid, sampling),
            velocities: (sd..grid.ndim()).map(|a| grid.coordinates(a)).collect(),
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// Shifts every line along `axis` by `shifts[select(line)]`.
    fn advect<S>(&self, field: &mut DistributionField, axis: usize, shifts: &[f64], select: S, stage: &str) -> Result<()>
    where
        S: Fn(&LineContext<'_>) -> usize + Sync,
    {
        let ax = &self.grid.axes[axis];
        match self.grid.method {
            Method::Spline => {
                let kernel = SplineAdvection::new(ax.count, ax.h(), |ctx: &LineContext<'_>| shifts[select(ctx)])?;
                line_sweep(field, axis, &Checked { inner: kernel, stage })
            }
            Method::Dg => {
                let kernel = DgTableAdvection::new(self.grid.dg_degree, ax.count, ax.h(), shifts, select);
                line_sweep(field, axis, &Checked { inner: kernel, stage })
            }
        }
    }

    /// Free streaming along space axis `a` for time `dt`: `f(x, v) <- f(x - v_a dt, v)`.
    pub fn free_stream(&self, field: &mut DistributionField, a: usize, dt: f64) -> Result<()> {
        self.free_stream_named(field, a, dt, X_STAGES[0][a])
    }

    fn free_stream_named(&self, field: &mut DistributionField, a: usize, dt: f64, stage: &str) -> Result<()> {
        let va = self.grid.space_dims() + a;
        let shifts: Vec<f64> = self.velocities[a].iter().map(|v| v * dt).collect();
        self.advect(field, a, &shifts, |ctx| ctx.index[va], stage)
    }

    /// Acceleration along velocity axis `a` for time `dt`: `f(x, v) <- f(x, v - E_a(x) dt)`.
    pub fn accelerate(&self, field: &mut DistributionField, e: &ElectricField, a: usize, dt: f64) -> Result<()> {
        let sd = self.grid.space_dims();
        let dofs = self.grid.dofs();
        let shifts: Vec<f64> = e.components[a].iter().map(|ea| ea * dt).collect();
        let select = |ctx: &LineContext<'_>| {
            let mut s = 0;
            for b in (0..sd).rev() {
                s = s * dofs[b] + ctx.index[b];
            }
            s
        };
        self.advect(field, sd + a, &shifts, select, V_STAGES[a])
    }

    /// Density and field of the current state.
    pub fn electric_field(&self, field: &DistributionField) -> Result<ElectricField> {
        let rho = compute_density(field);
        let e = self.poisson.solve(&rho)?;
        if e.components.iter().flatten().all(|v| v.is_finite()) {
            Ok(e)
        } else {
            Err(Error::NonFinite("poisson solve".into()))
        }
    }

    /// Advances `field` by one Strang step; returns the field used for the
    /// acceleration.
    pub fn step(&self, field: &mut DistributionField, tau: f64) -> Result<ElectricField> {
        let sd = self.grid.space_dims();
        for a in 0..sd {
            self.free_stream_named(field, a, 0.5 * tau, X_STAGES[0][a])?;
        }
        let e = self.electric_field(field)?;
        for a in 0..sd {
            self.accelerate(field, &e, a, tau)?;
        }
        for a in 0..sd {
            self.free_stream_named(field, a, 0.5 * tau, X_STAGES[1][a])?;
        }
        Ok(e)
    }
}

/// One Strang step with a fresh [`Stepper`].
pub fn strang_step(field: &mut DistributionField, tau: f64) -> Result<()> {
    Stepper::new(&field.grid).step(field, tau).map(|_| ())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticsRecord {
    pub time: f64,
    pub electric_energy: f64,
    pub mass: f64,
    pub l1: f64,
    pub l2: f64,
    pub kinetic_energy: f64,
    pub total_energy: f64,
}

pub const DIAGNOSTICS_CSV_HEADER: &str = "time,electric_energy,mass,l1_norm,l2_norm,kinetic_energy,total_energy";

impl DiagnosticsRecord {
    /// CSV row with 17 significant digits per value.
    pub fn csv_row(&self) -> String {
        [self.time, self.electric_energy, self.mass, self.l1, self.l2, self.kinetic_energy, self.total_energy]
            .iter()
            .map(|v| format!("{v:.16e}"))
            .collect::<Vec<_>>()
            .join(",")
    }
}

/// Records as CSV text, header included.
pub fn diagnostics_csv(records: &[DiagnosticsRecord]) -> String {
    let mut s = String::from(DIAGNOSTICS_CSV_HEADER);
    s.push('\n');
    for r in records {
        s.push_str(&r.csv_row());
        s.push('\n');
    }
    s
}

/// Lines summed sequentially per partial sum; partial sums are then added
/// in order, so results do not depend on the number of workers.
const DIAG_GROUP: usize = 64;

/// Integral diagnostics with the grid's native quadrature. `time` is left at zero.
///
/// Sums run in canonical order whatever the layout, so equal fields give
/// bitwise equal records.
pub fn diagnostics(field: &DistributionField, e: &ElectricField) -> DiagnosticsRecord {
    let grid = &field.grid;
    let d = grid.ndim();
    let sd = grid.space_dims();
    let dofs = grid.dofs();
    let weights: Vec<Vec<f64>> = (0..d).map(|a| grid.weights(a)).collect();
    let coords: Vec<Vec<f64>> = (0..d).map(|a| if a >= sd { grid.coordinates(a) } else { Vec::new() }).collect();
    let strides = &field.layout.strides;
    let n0 = dofs[0];
    let lines = field.len() / n0;
    let data = &field.data;

    let partials: Vec<[f64; 4]> = (0..lines.div_ceil(DIAG_GROUP))
        .into_par_iter()
        .map(|g| {
            let mut acc = [0.0; 4];
            for line in g * DIAG_GROUP..((g + 1) * DIAG_GROUP).min(lines) {
                let mut rem = line;
                let mut base = 0;
                let mut w = 1.0;
                let mut v2 = 0.0;
                for a in 1..d {
                    let i = rem % dofs[a];
                    rem /= dofs[a];
                    base += i * strides[a];
                    w *= weights[a][i];
                    if a >= sd {
                        v2 += coords[a][i] * coords[a][i];
                    }
                }
                let (mut m, mut l1, mut l2) = (0.0, 0.0, 0.0);
                for (i, w0) in weights[0].iter().enumerate() {
                    let f = data[base + i * strides[0]];
                    m += w0 * f;
                    l1 += w0 * f.abs();
                    l2 += w0 * f * f;
                }
                acc[0] += w * m;
                acc[1] += w * l1;
                acc[2] += w * l2;
                acc[3] += 0.5 * v2 * w * m;
            }
            acc
        })
        .collect();
    let mut sum = [0.0; 4];
    for p in &partials {
        for k in 0..4 {
            sum[k] += p[k];
        }
    }
    let we = electric_energy(e);
    DiagnosticsRecord {
        time: 0.0,
        electric_energy: we,
        mass: sum[0],
        l1: sum[1],
        l2: sum[2].sqrt(),
        kinetic_energy: sum[3],
        total_energy: sum[3] + we,
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub problem: ProblemSpec,
    pub grid: GridSpec,
    pub tau: f64,
    pub t_end: f64,
    pub layout: LayoutDescriptor,
    /// Record diagnostics every this many steps.
    pub diag_every: usize,
    pub snapshot_times: Vec<f64>,
    /// Directory for `VLF1` snapshot files; snapshots stay in memory when `None`.
    pub snapshot_dir: Option<PathBuf>,
    /// Worker threads; `None` uses the global pool.
    pub workers: Option<usize>,
    pub dg_sampling: DgSampling,
}

/// Transpose for spline grids, strided for dG grids.
pub fn default_strategy(method: Method) -> LayoutStrategy {
    match method {
        Method::Spline => LayoutStrategy::Transpose,
        Method::Dg => LayoutStrategy::Strided,
    }
}

impl RunConfig {
    pub fn new(problem: ProblemSpec, grid: GridSpec) -> Self {
        let layout = default_layout(&grid);
        Self {
            problem,
            grid,
            tau: DEFAULT_TAU,
            t_end: 0.0,
            layout,
            diag_every: 1,
            snapshot_times: Vec::new(),
            snapshot_dir: None,
            workers: None,
            dg_sampling: DgSampling::default(),
        }
    }

    pub fn t_end(mut self, t_end: f64) -> Self {
        self.t_end = t_end;
        self
    }

    pub fn tau(mut self, tau: f64) -> Self {
        self.tau = tau;
        self
    }

    pub fn strategy(mut self, strategy: LayoutStrategy, cache_block: usize) -> Self {
        self.layout = LayoutDescriptor::canonical(&self.grid, strategy);
        self.layout.cache_block = cache_block.max(1);
        self
    }

    pub fn workers(mut self, workers: usize) -> Self {
        self.workers = Some(workers);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau.is_finite() && self.tau > 0.0) {
            return Err(Error::InvalidConfig(format!("tau must be positive, got {}", self.tau)));
        }
        if !(self.t_end.is_finite() && self.t_end >= 0.0) {
            return Err(Error::InvalidConfig(format!("t_end must be non-negative, got {}", self.t_end)));
        }
        if self.diag_every == 0 {
            return Err(Error::InvalidConfig("diag_every must be positive".into()));
        }
        if self.workers == Some(0) {
            return Err(Error::InvalidConfig("workers must be positive".into()));
        }
        if let Some(t) = self.snapshot_times.iter().find(|t| !(t.is_finite() && **t >= 0.0)) {
            return Err(Error::InvalidConfig(format!("invalid snapshot time {t}")));
        }
        if self.problem.ndim() != self.grid.ndim() {
            return Err(Error::DimensionMismatch(format!(
                "{} is {}-dimensional, grid has {} axes",
                self.problem.kind.name(),
                self.problem.ndim(),
                self.grid.ndim()
            )));
        }
        self.layout.validate(&self.grid)
    }

    /// Number of steps; the last step ends at or just past `t_end`.
    pub fn steps(&self) -> usize {
        let n = self.t_end / self.tau;
        (n - 1e-9 * n.max(1.0)).ceil().max(0.0) as usize
    }

    /// Runs `f` inside a pool of `workers` threads when set.
    pub fn in_pool<T: Send>(&self, f: impl FnOnce() -> T + Send) -> Result<T> {
        match self.workers {
            None => Ok(f()),
            Some(n) => {
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build()
                    .map_err(|e| Error::InvalidConfig(format!("cannot start {n} workers: {e}")))?;
                Ok(pool.install(f))
            }
        }
    }
}

/// A problem being stepped in time.
pub struct Simulation {
    pub field: DistributionField,
    pub stepper: Stepper,
    pub tau: f64,
    pub steps_taken: usize,
}

impl Simulation {
    pub fn new(config: &RunConfig) -> Result<Self> {
        config.validate()?;
        let field = initialize_with(&config.problem, &config.grid, config.layout.clone())?;
        Ok(Self {
            field,
            stepper: Stepper::with_sampling(&config.grid, config.dg_sampling),
            tau: config.tau,
            steps_taken: 0,
        })
    }

    pub fn time(&self) -> f64 {
        self.steps_taken as f64 * self.tau
    }

    pub fn step(&mut self) -> Result<()> {
        self.stepper.step(&mut self.field, self.tau)?;
        self.steps_taken += 1;
        Ok(())
    }

    pub fn diagnostics(&self) -> Result<DiagnosticsRecord> {
        let e = self.stepper.electric_field(&self.field)?;
        let mut rec = diagnostics(&self.field, &e);
        rec.time = self.time();
        Ok(rec)
    }
}

#[derive(Debug, Clone)]
pub struct Snapshot {
    pub time: f64,
    /// File written, when a snapshot directory was configured.
    pub path: Option<PathBuf>,
    /// The field itself, when no snapshot directory was configured.
    pub field: Option<DistributionField>,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub records: Vec<DiagnosticsRecord>,
    pub snapshots: Vec<Snapshot>,
    pub final_field: DistributionField,
}

/// Steps from `t = 0` to `t_end`, recording diagnostics and snapshots.
pub fn run(config: &RunConfig) -> Result<RunOutput> {
    run_with(config, |_| {})
}

/// Like [`run`], calling `on_record` as each record is produced.
pub fn run_with(config: &RunConfig, on_record: impl FnMut(&DiagnosticsRecord) + Send) -> Result<RunOutput> {
    config.validate()?;
    config.in_pool(|| run_inner(config, on_record))?
}

fn run_inner(config: &RunConfig, mut on_record: impl FnMut(&DiagnosticsRecord)) -> Result<RunOutput> {
    let mut sim = Simulation::new(config)?;
    let steps = config.steps();
    let mut pending: Vec<f64> = config.snapshot_times.clone();
    pending.sort_by(f64::total_cmp);
    pending.dedup();
    let mut pending = pending.into_iter().peekable();
    let mut records = Vec::new();
    let mut snapshots = Vec::new();
    if let Some(dir) = &config.snapshot_dir {
        std::fs::create_dir_all(dir)?;
    }

    for n in 0..=steps {
        if n > 0 {
            sim.step()?;
        }
        if n % config.diag_every == 0 {
            let rec = sim.diagnostics()?;
            on_record(&rec);
            records.push(rec);
        }
        let t = sim.time();
        while let Some(&ts) = pending.peek() {
            if ts > t + 1e-9 * config.tau && n < steps {
                break;
            }
            pending.next();
            snapshots.push(take_snapshot(config, &sim.field, t, snapshots.len())?);
        }
    }
    Ok(RunOutput { records, snapshots, final_field: sim.field })
}

fn take_snapshot(config: &RunConfig, field: &DistributionField, t: f64, index: usize) -> Result<Snapshot> {
    match &config.snapshot_dir {
        Some(dir) => {
            let path = dir.join(format!("snapshot_{index:03}_t{t:.4}.vlf"));
            snapshot::save(field, &path)?;
            Ok(Snapshot { time: t, path: Some(path), field: None })
        }
        None => Ok(Snapshot { time: t, path: None, field: Some(field.clone()) }),
    }
}

/// Canonical layout with the method's default strategy.
pub fn default_layout(grid: &GridSpec) -> LayoutDescriptor {
    LayoutDescriptor::canonical(grid, default_strategy(grid.method))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Axis;
    use std::f64::consts::PI;

    fn landau2d(method: Method, dof: usize) -> RunConfig {
        let p = ProblemSpec::landau2d();
        let degree = if method == Method::Dg { 3 } else { 0 };
        let g = p.uniform_grid(method, degree, dof).unwrap();
        RunConfig::new(p, g)
    }

    #[test]
    fn x_independent_data_without_field_is_unchanged() {
        for method in [Method::Spline, Method::Dg] {
            let degree = if method == Method::Dg { 2 } else { 0 };
            let g = GridSpec::new(
                vec![
                    Axis::space(0.0, 4.0 * PI, 6).unwrap(),
                    Axis::space(0.0, 4.0 * PI, 5).unwrap(),
                    Axis::velocity(-6.0, 6.0, 8).unwrap(),
                    Axis::velocity(-6.0, 6.0, 7).unwrap(),
                ],
                method,
                degree,
            )
            .unwrap();
            let layout = default_layout(&g);
            let mut f = DistributionField::from_fn(g.clone(), layout, |p| (-0.5 * (p[2] * p[2] + p[3] * p[3])).exp())
                .unwrap();
            let before = f.clone();
            let stepper = Stepper::new(&g);
            for a in 0..2 {
                stepper.free_stream(&mut f, a, 0.37).unwrap();
                stepper.accelerate(&mut f, &ElectricField::zeros(&g), a, 0.1).unwrap();
            }
            f.make_canonical();
            for (x, y) in f.data.iter().zip(&before.data) {
                assert!((x - y).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn single_step_conserves_mass() {
        for method in [Method::Spline, Method::Dg] {
            let p = ProblemSpec::landau4d();
            let g = p.uniform_grid(method, 3, 16).unwrap();
            let cfg = RunConfig::new(p, g);
            let mut sim = Simulation::new(&cfg).unwrap();
            let m0 = sim.diagnostics().unwrap().mass;
            sim.step().unwrap();
            let m1 = sim.diagnostics().unwrap().mass;
            assert!((m1 - m0).abs() < 1e-12 * m0, "{method:?}: {m0} -> {m1}");
        }
    }

    #[test]
    fn constant_field_diagnostics() {
        let p = ProblemSpec::landau4d();
        for method in [Method::Spline, Method::Dg] {
            let g = p.uniform_grid(method, 1, 8).unwrap();
            let f = DistributionField::from_fn(g.clone(), default_layout(&g), |_| 0.25).unwrap();
            let r = diagnostics(&f, &ElectricField::zeros(&g));
            let vol = (4.0 * PI).powi(2) * 144.0;
            assert!((r.mass - 0.25 * vol).abs() < 1e-10 * vol);
            assert_eq!(r.l1, r.mass);
            assert!((r.l2 - 0.25 * vol.sqrt()).abs() < 1e-12 * vol);
            assert_eq!(r.electric_energy, 0.0);
        }
    }

    #[test]
    fn diagnostics_ignore_layout() {
        let cfg = landau2d(Method::Dg, 32);
        let sim = Simulation::new(&cfg).unwrap();
        let e = sim.stepper.electric_field(&sim.field).unwrap();
        let mut t = sim.field.clone();
        t.transpose_to(&[1, 0]).unwrap();
        assert_eq!(diagnostics(&sim.field, &e), diagnostics(&t, &e));
    }

    #[test]
    fn zero_end_time_gives_initial_record() {
        let out = run(&landau2d(Method::Spline, 32)).unwrap();
        assert_eq!(out.records.len(), 1);
        assert_eq!(out.records[0].time, 0.0);
    }

    #[test]
    fn cadence_and_snapshots() {
        let mut cfg = landau2d(Method::Spline, 32).t_end(1.0);
        cfg.diag_every = 2;
        cfg.snapshot_times = vec![0.5, 0.0, 5.0];
        let out = run(&cfg).unwrap();
        assert_eq!(cfg.steps(), 10);
        let times: Vec<f64> = out.records.iter().map(|r| r.time).collect();
        assert_eq!(times.len(), 6);
        assert!((times[5] - 1.0).abs() < 1e-12);
        let snaps: Vec<f64> = out.snapshots.iter().map(|s| s.time).collect();
        assert_eq!(snaps.len(), 3);
        assert!((snaps[1] - 0.5).abs() < 1e-12);
        // times past the end are written at the final step
        assert!((snaps[2] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn snapshot_files_are_written() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = landau2d(Method::Dg, 32).t_end(0.2);
        cfg.snapshot_times = vec![0.2];
        cfg.snapshot_dir = Some(dir.path().to_path_buf());
        let out = run(&cfg).unwrap();
        let path = out.snapshots[0].path.clone().unwrap();
        let back = snapshot::load(&path, LayoutStrategy::Strided).unwrap();
        let mut fin = out.final_field.clone();
        fin.make_canonical();
        assert_eq!(back.data, fin.data);
    }

    #[test]
    fn csv_round_trips_values() {
        let out = run(&landau2d(Method::Spline, 32).t_end(0.3)).unwrap();
        let text = diagnostics_csv(&out.records);
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some(DIAGNOSTICS_CSV_HEADER));
        for (line, rec) in lines.zip(&out.records) {
            let v: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
            assert_eq!(v, vec![rec.time, rec.electric_energy, rec.mass, rec.l1, rec.l2, rec.kinetic_energy, rec.total_energy]);
        }
        assert_eq!(text.lines().count(), 5);
    }

    #[test]
    fn invalid_configs() {
        assert!(run(&landau2d(Method::Spline, 32).tau(0.0)).is_err());
        assert!(run(&landau2d(Method::Spline, 32).t_end(-1.0)).is_err());
        let mut c = landau2d(Method::Spline, 32);
        c.diag_every = 0;
        assert!(matches!(run(&c), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn nan_names_the_substep() {
        let cfg = landau2d(Method::Dg, 32);
        let mut sim = Simulation::new(&cfg).unwrap();
        sim.field.data[5] = f64::NAN;
        match sim.step() {
            Err(Error::NonFinite(stage)) => assert_eq!(stage, "x1 advection (first half)"),
            other => panic!("expected NonFinite, got {other:?}"),
        }
    }

    #[test]
    fn workers_do_not_change_results() {
        let a = run(&landau2d(Method::Dg, 32).t_end(0.5).workers(1)).unwrap();
        let b = run(&landau2d(Method::Dg, 32).t_end(0.5).workers(3)).unwrap();
        assert_eq!(a.records, b.records);
        assert_eq!(a.final_field.data, b.final_field.data);
    }

    #[test]
    fn layouts_agree_bitwise() {
        for method in [Method::Spline, Method::Dg] {
            let p = ProblemSpec::landau4d();
            let g = p.uniform_grid(method, 1, 8).unwrap();
            let base = RunConfig::new(p, g).t_end(0.3);
            let a = run(&base.clone().strategy(LayoutStrategy::Transpose, 8)).unwrap();
            let b = run(&base.strategy(LayoutStrategy::Strided, 3)).unwrap();
            let (mut fa, mut fb) = (a.final_field, b.final_field);
            fa.make_canonical();
            fb.make_canonical();
            assert_eq!(fa.data, fb.data);
            assert_eq!(a.records, b.records);
        }
    }
}
