//! The shipped initial-value problems.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::grid::{Axis, DistributionField, GridSpec, LayoutDescriptor, LayoutStrategy, Method, Scheme};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProblemKind {
    /// 1x1v Landau damping.
    Landau2d,
    /// 2x2v nonlinear Landau damping.
    Landau4d,
    /// 2x2v two-stream instability.
    TwoStream4d,
}

impl ProblemKind {
    pub fn name(self) -> &'static str {
        match self {
            ProblemKind::Landau2d => "landau2d",
            ProblemKind::Landau4d => "landau4d",
            ProblemKind::TwoStream4d => "twostream4d",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "landau2d" => Some(ProblemKind::Landau2d),
            "landau4d" => Some(ProblemKind::Landau4d),
            "twostream4d" => Some(ProblemKind::TwoStream4d),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub kind: ProblemKind,
    pub epsilon: f64,
    pub k: f64,
    /// Beam velocity; zero for the Landau problems.
    pub v0: f64,
    /// `(lower, upper)` per axis, space axes first.
    pub domain: Vec<(f64, f64)>,
}

impl ProblemSpec {
    pub fn landau2d() -> Self {
        Self {
            kind: ProblemKind::Landau2d,
            epsilon: 0.5,
            k: 0.5,
            v0: 0.0,
            domain: vec![(0.0, 4.0 * PI), (-6.0, 6.0)],
        }
    }

    pub fn landau4d() -> Self {
        Self {
            kind: ProblemKind::Landau4d,
            epsilon: 0.5,
            k: 0.5,
            v0: 0.0,
            domain: vec![(0.0, 4.0 * PI), (0.0, 4.0 * PI), (-6.0, 6.0), (-6.0, 6.0)],
        }
    }

    pub fn twostream4d() -> Self {
        Self {
            kind: ProblemKind::TwoStream4d,
            epsilon: 1e-3,
            k: 0.2,
            v0: 2.4,
            domain: vec![(0.0, 10.0 * PI), (0.0, 10.0 * PI), (-6.0, 6.0), (-6.0, 6.0)],
        }
    }

    pub fn from_kind(kind: ProblemKind) -> Self {
        match kind {
            ProblemKind::Landau2d => Self::landau2d(),
            ProblemKind::Landau4d => Self::landau4d(),
            ProblemKind::TwoStream4d => Self::twostream4d(),
        }
    }

    pub fn ndim(&self) -> usize {
        self.domain.len()
    }

    /// Grid over the problem domain with `dof[a]` degrees of freedom on axis `a`.
    ///
    /// For dG the cell count is `dof / (degree + 1)`; `dof` must be divisible.
    pub fn grid(&self, method: Method, degree: usize, dof: &[usize]) -> Result<GridSpec> {
        if dof.len() != self.ndim() {
            return Err(Error::DimensionMismatch(format!(
                "{} needs {} dof entries, got {}",
                self.kind.name(),
                self.ndim(),
                dof.len()
            )));
        }
        let np = if method == Method::Dg { degree + 1 } else { 1 };
        let half = self.ndim() / 2;
        let axes = self
            .domain
            .iter()
            .zip(dof)
            .enumerate()
            .map(|(a, (&(lo, hi), &n))| {
                if n % np != 0 {
                    return Err(Error::InvalidGrid(format!("dof {n} is not a multiple of {np} nodes per cell")));
                }
                if a < half {
                    Axis::space(lo, hi, n / np)
                } else {
                    Axis::velocity(lo, hi, n / np)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        GridSpec::new(axes, method, degree)
    }

    /// Same dof on every axis.
    pub fn uniform_grid(&self, method: Method, degree: usize, dof: usize) -> Result<GridSpec> {
        self.grid(method, degree, &vec![dof; self.ndim()])
    }

    /// Uniform grid with the cell count nearest to `dof / nodes_per_cell`
    /// (at least 4), for dof counts the scheme cannot hit exactly.
    pub fn nearest_grid(&self, scheme: Scheme, dof: usize) -> Result<GridSpec> {
        let np = scheme.nodes_per_cell();
        let cells = ((dof as f64 / np as f64).round() as usize).max(4);
        self.uniform_grid(scheme.method, scheme.degree, cells * np)
    }

    /// The analytic initial condition at a phase-space point.
    pub fn initial_value(&self, p: &[f64]) -> f64 {
        let (eps, k) = (self.epsilon, self.k);
        match self.kind {
            ProblemKind::Landau2d => {
                (1.0 + eps * (k * p[0]).cos()) * (-0.5 * p[1] * p[1]).exp() / (2.0 * PI).sqrt()
            }
            ProblemKind::Landau4d => {
                (1.0 + eps * ((k * p[0]).cos() + (k * p[1]).cos())) * (-0.5 * (p[2] * p[2] + p[3] * p[3])).exp()
                    / (2.0 * PI)
            }
            ProblemKind::TwoStream4d => {
                let beams = |v: f64| (-0.5 * (v - self.v0).powi(2)).exp() + (-0.5 * (v + self.v0).powi(2)).exp();
                (1.0 + eps * (k * p[0]).cos() * (k * p[1]).cos()) * beams(p[2]) * beams(p[3]) / (8.0 * PI)
            }
        }
    }

    fn check_grid(&self, grid: &GridSpec) -> Result<()> {
        if grid.ndim() != self.ndim() {
            return Err(Error::DimensionMismatch(format!(
                "{} is {}-dimensional, grid has {} axes",
                self.kind.name(),
                self.ndim(),
                grid.ndim()
            )));
        }
        Ok(())
    }
}

/// Samples the initial condition at the grid's nodes.
pub fn initialize(problem: &ProblemSpec, grid: &GridSpec) -> Result<DistributionField> {
    initialize_with(problem, grid, LayoutDescriptor::canonical(grid, LayoutStrategy::Strided))
}

pub fn initialize_with(problem: &ProblemSpec, grid: &GridSpec, layout: LayoutDescriptor) -> Result<DistributionField> {
    problem.check_grid(grid)?;
    DistributionField::from_fn(grid.clone(), layout, |p| problem.initial_value(p))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn point_values() {
        let l4 = ProblemSpec::landau4d();
        assert!((l4.initial_value(&[0.0; 4]) - 1.0 / PI).abs() < 1e-15);
        let ts = ProblemSpec::twostream4d();
        let want = 1.001 / (8.0 * PI) * 4.0 * (-5.76f64).exp();
        assert!((ts.initial_value(&[0.0; 4]) - want).abs() < 1e-15 * want.max(1.0));
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let g = ProblemSpec::landau2d().uniform_grid(Method::Spline, 0, 16).unwrap();
        assert!(matches!(initialize(&ProblemSpec::landau4d(), &g), Err(Error::DimensionMismatch(_))));
        assert!(ProblemSpec::landau4d().grid(Method::Spline, 0, &[8, 8]).is_err());
        assert!(ProblemSpec::landau2d().uniform_grid(Method::Dg, 3, 30).is_err());
    }

    #[test]
    fn grid_uses_problem_domain() {
        let g = ProblemSpec::twostream4d().uniform_grid(Method::Dg, 3, 32).unwrap();
        assert_eq!(g.axes[0].count, 8);
        assert_eq!(g.dofs(), vec![32; 4]);
        assert!((g.axes[1].upper - 10.0 * PI).abs() < 1e-15);
        assert_eq!(g.axes[3].lower, -6.0);
    }

    #[test]
    fn nearest_grid_rounds_cells() {
        let p = ProblemSpec::landau2d();
        let dg6 = Scheme::dg(6).unwrap();
        let dofs: Vec<usize> = [64, 128, 256, 512].iter().map(|&d| p.nearest_grid(dg6, d).unwrap().dof(0)).collect();
        assert_eq!(dofs, vec![66, 126, 258, 510]);
        assert_eq!(p.nearest_grid(Scheme::SPLINE, 100).unwrap().dof(1), 100);
    }

    #[test]
    fn landau2d_mass() {
        let p = ProblemSpec::landau2d();
        let g = p.uniform_grid(Method::Spline, 0, 128).unwrap();
        let f = initialize(&p, &g).unwrap();
        let h = g.axes[0].h() * g.axes[1].h();
        let mass: f64 = f.data.iter().sum::<f64>() * h;
        // rectangle rule is spectrally accurate for these periodic integrands
        let mut gauss = 0.0;
        let n = 200_000;
        let dv = 12.0 / n as f64;
        for i in 0..n {
            let v = -6.0 + (i as f64 + 0.5) * dv;
            gauss += (-0.5 * v * v).exp() * dv;
        }
        let want = 4.0 * PI * gauss / (2.0 * PI).sqrt();
        assert!((mass - want).abs() < 1e-9 * want);
        assert!((mass - 4.0 * PI).abs() < 1e-7);
    }
}
