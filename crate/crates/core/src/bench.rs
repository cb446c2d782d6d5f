//! Step timing, allocation peaks and resolution studies.

use std::time::Instant;

use crate::driver::{run, RunConfig, Simulation};
use crate::error::{Error, Result};
use crate::eval::Evaluator;
use crate::grid::{DistributionField, LayoutStrategy, Scheme};
use crate::problem::ProblemSpec;

pub mod alloc {
    //! A counting global allocator.
    //!
    //! Install it in a binary or test target with
    //! `#[global_allocator] static A: TrackingAllocator = TrackingAllocator;`.

    use std::alloc::{GlobalAlloc, Layout, System};
    use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};

    pub struct TrackingAllocator;

    static ACTIVE: AtomicBool = AtomicBool::new(false);
    static CURRENT: AtomicUsize = AtomicUsize::new(0);
    static PEAK: AtomicUsize = AtomicUsize::new(0);

    fn grow(size: usize) {
        let now = CURRENT.fetch_add(size, Ordering::Relaxed) + size;
        PEAK.fetch_max(now, Ordering::Relaxed);
    }

    unsafe impl GlobalAlloc for TrackingAllocator {
        unsafe fn alloc(&self, layout: Layout) -> *mut u8 {
            let p = System.alloc(layout);
            if !p.is_null() {
                ACTIVE.store(true, Ordering::Relaxed);
                grow(layout.size());
            }
            p
        }

        unsafe fn alloc_zeroed(&self, layout: Layout) -> *mut u8 {
            let p = System.alloc_zeroed(layout);
            if !p.is_null() {
                ACTIVE.store(true, Ordering::Relaxed);
                grow(layout.size());
            }
            p
        }

        unsafe fn dealloc(&self, ptr: *mut u8, layout: Layout) {
            System.dealloc(ptr, layout);
            CURRENT.fetch_sub(layout.size(), Ordering::Relaxed);
        }

        unsafe fn realloc(&self, ptr: *mut u8, layout: Layout, new_size: usize) -> *mut u8 {
            let p = System.realloc(ptr, layout, new_size);
            if !p.is_null() {
                if new_size >= layout.size() {
                    grow(new_size - layout.size());
                } else {
                    CURRENT.fetch_sub(layout.size() - new_size, Ordering::Relaxed);
                }
            }
            p
        }
    }

    /// Whether any allocation has gone through [`TrackingAllocator`].
    pub fn is_active() -> bool {
        ACTIVE.load(Ordering::Relaxed)
    }

    pub fn current_bytes() -> usize {
        CURRENT.load(Ordering::Relaxed)
    }

    pub fn peak_bytes() -> usize {
        PEAK.load(Ordering::Relaxed)
    }

    /// Restarts peak tracking from the current live total.
    pub fn reset_peak() {
        PEAK.store(CURRENT.load(Ordering::Relaxed), Ordering::Relaxed);
    }
}

pub const WARMUP_STEPS: usize = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct BenchResult {
    pub scheme: Scheme,
    pub dof_per_direction: usize,
    pub layout: LayoutStrategy,
    pub workers: usize,
    /// Median wall time of the timed steps.
    pub time_per_step_s: f64,
    /// Allocation peak above the live total before the field was created.
    pub peak_bytes: usize,
    pub field_bytes: usize,
    pub step_times_s: Vec<f64>,
}

pub const BENCH_CSV_HEADER: &str = "method,dof,layout,workers,time_per_step_s,peak_bytes";

impl BenchResult {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{:.16e},{}",
            self.scheme.label(),
            self.dof_per_direction,
            self.layout.name(),
            self.workers,
            self.time_per_step_s,
            self.peak_bytes
        )
    }
}

/// Times `steps` Strang steps after [`WARMUP_STEPS`] untimed ones.
///
/// Needs [`alloc::TrackingAllocator`] installed as the global allocator.
/// The tracker is process-wide, so concurrent work in other threads is
/// counted too.
pub fn bench_step(config: &RunConfig, steps: usize) -> Result<BenchResult> {
    if steps < 3 {
        return Err(Error::InvalidConfig(format!("bench needs at least 3 timed steps, got {steps}")));
    }
    config.validate()?;
    if !alloc::is_active() {
        return Err(Error::AllocTrackingInactive);
    }
    config.in_pool(|| {
        let workers = rayon::current_num_threads();
        let baseline = alloc::current_bytes();
        alloc::reset_peak();
        let mut sim = Simulation::new(config)?;
        for _ in 0..WARMUP_STEPS {
            sim.step()?;
        }
        let mut times = Vec::with_capacity(steps);
        for _ in 0..steps {
            let t0 = Instant::now();
            sim.step()?;
            times.push(t0.elapsed().as_secs_f64().max(1e-9));
        }
        let peak = alloc::peak_bytes().saturating_sub(baseline);
        let field_bytes = sim.field.size_bytes();
        drop(sim);
        Ok(BenchResult {
            scheme: config.grid.scheme(),
            dof_per_direction: config.grid.dof(0),
            layout: config.layout.strategy,
            workers,
            time_per_step_s: median(&times),
            peak_bytes: peak,
            field_bytes,
            step_times_s: times,
        })
    })?
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergencePoint {
    pub scheme: Scheme,
    /// Actual dof per direction (dG rounds to whole cells).
    pub dof: usize,
    pub t: f64,
    pub error_inf_rel: f64,
}

pub const CONVERGENCE_CSV_HEADER: &str = "method,dof,t,error_inf_rel";

impl ConvergencePoint {
    pub fn csv_row(&self) -> String {
        format!("{},{},{:.16e},{:.16e}", self.scheme.label(), self.dof, self.t, self.error_inf_rel)
    }
}

#[derive(Debug, Clone)]
pub struct StudyConfig {
    pub problem: ProblemSpec,
    pub schemes: Vec<Scheme>,
    pub dofs: Vec<usize>,
    pub t_eval: Vec<f64>,
    pub reference_dof: usize,
    pub tau: f64,
    pub workers: Option<usize>,
}

impl StudyConfig {
    pub fn new(problem: ProblemSpec, schemes: Vec<Scheme>, dofs: Vec<usize>, t_eval: Vec<f64>, reference_dof: usize) -> Self {
        Self { problem, schemes, dofs, t_eval, reference_dof, tau: crate::driver::DEFAULT_TAU, workers: None }
    }

    pub fn validate(&self) -> Result<()> {
        let max = self.dofs.iter().copied().max().unwrap_or(0);
        if self.reference_dof < 4 * max {
            return Err(Error::InvalidConfig(format!(
                "reference_dof {} must be at least 4 x max dof ({})",
                self.reference_dof,
                4 * max
            )));
        }
        if self.t_eval.is_empty() || self.t_eval.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
            return Err(Error::InvalidConfig("t_eval needs non-negative times".into()));
        }
        if self.schemes.is_empty() || self.dofs.is_empty() {
            return Err(Error::InvalidConfig("convergence needs at least one method and one dof".into()));
        }
        Ok(())
    }

    fn run_config(&self, scheme: Scheme, dof: usize) -> Result<RunConfig> {
        let grid = self.problem.nearest_grid(scheme, dof)?;
        let mut cfg = RunConfig::new(self.problem.clone(), grid).tau(self.tau);
        cfg.t_end = self.t_eval.iter().copied().fold(0.0, f64::max);
        cfg.snapshot_times = self.t_eval.clone();
        cfg.diag_every = usize::MAX;
        Ok(cfg)
    }
}

/// Snapshots of one run at the requested times, in the order of `times`.
fn solutions_at(cfg: &RunConfig, times: &[f64]) -> Result<Vec<DistributionField>> {
    let out = run(cfg)?;
    times
        .iter()
        .map(|t| {
            out.snapshots
                .iter()
                .find(|s| (s.time - t).abs() < 0.5 * cfg.tau)
                .and_then(|s| s.field.clone())
                .ok_or_else(|| Error::InvalidConfig(format!("no snapshot at t = {t}")))
        })
        .collect()
}

/// `max |u(x_r) - ref(x_r)| / max |ref|` over the reference's nodes.
pub fn relative_max_error(solution: &DistributionField, reference: &DistributionField) -> Result<f64> {
    if solution.grid.ndim() != reference.grid.ndim() {
        return Err(Error::DimensionMismatch("solution and reference differ in dimension".into()));
    }
    let eval = Evaluator::new(solution)?;
    let grid = &reference.grid;
    let coords: Vec<Vec<f64>> = (0..grid.ndim()).map(|a| grid.coordinates(a)).collect();
    let values = reference.canonical_data();
    let dofs = grid.dofs();
    let n0 = dofs[0];
    use rayon::prelude::*;
    let (err, norm) = values
        .par_chunks(n0)
        .enumerate()
        .map(|(line, chunk)| {
            let mut p = vec![0.0; dofs.len()];
            let mut rem = line;
            for a in 1..dofs.len() {
                p[a] = coords[a][rem % dofs[a]];
                rem /= dofs[a];
            }
            let mut err: f64 = 0.0;
            let mut norm: f64 = 0.0;
            for (i, r) in chunk.iter().enumerate() {
                p[0] = coords[0][i];
                err = err.max((eval.eval(&p) - r).abs());
                norm = norm.max(r.abs());
            }
            (err, norm)
        })
        .reduce(|| (0.0, 0.0), |a, b| (a.0.max(b.0), a.1.max(b.1)));
    Ok(err / norm)
}

/// Runs every scheme at every dof and compares with a spline reference at
/// `reference_dof` points per direction.
pub fn convergence_study(study: &StudyConfig) -> Result<Vec<ConvergencePoint>> {
    study.validate()?;
    let pool_cfg = RunConfig { workers: study.workers, ..study.run_config(Scheme::SPLINE, study.reference_dof)? };
    pool_cfg.in_pool(|| {
        let reference = solutions_at(&study.run_config(Scheme::SPLINE, study.reference_dof)?, &study.t_eval)?;
        let mut points = Vec::new();
        for &scheme in &study.schemes {
            for &dof in &study.dofs {
                let cfg = study.run_config(scheme, dof)?;
                let actual = cfg.grid.dof(0);
                let sols = solutions_at(&cfg, &study.t_eval)?;
                for ((t, sol), r) in study.t_eval.iter().zip(&sols).zip(&reference) {
                    points.push(ConvergencePoint {
                        scheme,
                        dof: actual,
                        t: *t,
                        error_inf_rel: relative_max_error(sol, r)?,
                    });
                }
            }
        }
        Ok(points)
    })?
}

/// dof the `other` curve needs to reach each error of `base`, divided by
/// the `base` dof. Curves are interpolated linearly in log-log
/// coordinates, extending the end segments when needed.
pub fn matched_dof_ratios(base: &[(usize, f64)], other: &[(usize, f64)]) -> Vec<f64> {
    let mut curve: Vec<(f64, f64)> =
        other.iter().filter(|p| p.1 > 0.0).map(|&(d, e)| ((d as f64).ln(), e.ln())).collect();
    curve.sort_by(|a, b| a.0.total_cmp(&b.0));
    if curve.len() < 2 {
        return Vec::new();
    }
    base.iter()
        .filter(|p| p.1 > 0.0)
        .filter_map(|&(d, e)| {
            let le = e.ln();
            // segment whose error range brackets le, else the nearest end
            let k = (0..curve.len() - 1)
                .find(|&k| (curve[k].1 - le) * (curve[k + 1].1 - le) <= 0.0)
                .unwrap_or(if le > curve[0].1 { 0 } else { curve.len() - 2 });
            let (a, b) = (curve[k], curve[k + 1]);
            if a.1 == b.1 {
                return None;
            }
            let ld = a.0 + (le - a.1) * (b.0 - a.0) / (b.1 - a.1);
            Some(ld.exp() / d as f64)
        })
        .collect()
}

pub fn geometric_mean(values: &[f64]) -> f64 {
    (values.iter().map(|v| v.ln()).sum::<f64>() / values.len() as f64).exp()
}

/// Errors of one scheme at time `t`, as `(dof, error)` sorted by dof.
pub fn curve(points: &[ConvergencePoint], scheme: Scheme, t: f64) -> Vec<(usize, f64)> {
    let mut c: Vec<(usize, f64)> = points
        .iter()
        .filter(|p| p.scheme == scheme && (p.t - t).abs() < 1e-9)
        .map(|p| (p.dof, p.error_inf_rel))
        .collect();
    c.sort_by_key(|p| p.0);
    c
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_of_odd_and_even() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 3.0, 2.0]), 2.5);
    }

    #[test]
    fn matched_ratio_of_power_laws() {
        // e = d^-4 against e = (d / 1.5)^-4: the second needs 1.5x the dof
        let base: Vec<(usize, f64)> = [64, 128, 256].iter().map(|&d| (d, (d as f64).powi(-4))).collect();
        let other: Vec<(usize, f64)> =
            [60, 120, 240, 480].iter().map(|&d| (d, (d as f64 / 1.5).powi(-4))).collect();
        let r = matched_dof_ratios(&base, &other);
        assert_eq!(r.len(), 3);
        for x in &r {
            assert!((x - 1.5).abs() < 1e-9, "{x}");
        }
        assert!((geometric_mean(&r) - 1.5).abs() < 1e-9);
    }

    #[test]
    fn matched_ratio_extrapolates() {
        let base = vec![(100, 1e-8)];
        let other = vec![(10, 1e-2), (20, 1e-3)];
        let r = matched_dof_ratios(&base, &other);
        // ten times lower error per doubling: 1e-8 needs 2^6 * 10 = 640
        assert!((r[0] - 6.4).abs() < 1e-9);
    }

    #[test]
    fn identical_fields_have_zero_error() {
        let p = ProblemSpec::landau2d();
        for scheme in [Scheme::SPLINE, Scheme::dg(3).unwrap()] {
            let g = p.nearest_grid(scheme, 48).unwrap();
            let f = crate::problem::initialize(&p, &g).unwrap();
            assert_eq!(relative_max_error(&f, &f).unwrap(), 0.0);
        }
    }

    #[test]
    fn study_rejects_small_reference() {
        let s = StudyConfig::new(ProblemSpec::landau2d(), vec![Scheme::SPLINE], vec![32, 64], vec![1.0], 128);
        assert!(matches!(convergence_study(&s), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn small_study_shape() {
        let schemes = vec![Scheme::SPLINE, Scheme::dg(4).unwrap()];
        let mut s = StudyConfig::new(ProblemSpec::landau2d(), schemes, vec![16, 32], vec![0.2, 0.4], 128);
        s.workers = Some(2);
        let pts = convergence_study(&s).unwrap();
        assert_eq!(pts.len(), 8);
        for scheme in &s.schemes {
            let c = curve(&pts, *scheme, 0.4);
            assert_eq!(c.len(), 2);
            assert!(c[1].1 < c[0].1, "{c:?}");
        }
    }

    #[test]
    fn bench_requires_tracking_and_steps() {
        let p = ProblemSpec::landau2d();
        let g = p.uniform_grid(crate::grid::Method::Spline, 0, 16).unwrap();
        let cfg = RunConfig::new(p, g);
        assert!(matches!(bench_step(&cfg, 2), Err(Error::InvalidConfig(_))));
        // unit tests run without the tracking allocator
        assert!(matches!(bench_step(&cfg, 5), Err(Error::AllocTrackingInactive)));
    }
}
