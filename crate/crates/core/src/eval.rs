//! Point evaluation of a discrete solution.
//!
//! Spline fields are evaluated as tensor-product cubic splines, dG fields as
//! the tensor-product Lagrange polynomial of the containing cell. Points are
//! wrapped periodically on every axis.

use rayon::prelude::*;

use crate::dg::DgBasis;
use crate::error::Result;
use crate::grid::{DistributionField, GridSpec, Method};
use crate::spline::{bspline_kernel, CyclicTridiag};

/// Precomputed interpolant for repeated evaluation of one field.
pub struct Evaluator {
    grid: GridSpec,
    /// Spline weights or nodal values, canonical order.
    coefficients: Vec<f64>,
    strides: Vec<usize>,
    basis: Option<DgBasis>,
    /// Stored spline point values, returned as-is at grid points.
    values: Vec<f64>,
}

impl Evaluator {
    pub fn new(field: &DistributionField) -> Result<Self> {
        let grid = field.grid.clone();
        let dofs = grid.dofs();
        let mut strides = vec![1; dofs.len()];
        for a in 1..dofs.len() {
            strides[a] = strides[a - 1] * dofs[a - 1];
        }
        let mut coefficients = field.canonical_data().into_owned();
        let mut values = Vec::new();
        let basis = match grid.method {
            Method::Spline => {
                values = coefficients.clone();
                for (a, &n) in dofs.iter().enumerate() {
                    spline_weights_along(&mut coefficients, &dofs, &strides, a, &CyclicTridiag::new(n)?);
                }
                None
            }
            Method::Dg => Some(DgBasis::new(grid.dg_degree)),
        };
        Ok(Self { grid, coefficients, strides, basis, values })
    }

    pub fn eval(&self, point: &[f64]) -> f64 {
        let d = self.grid.ndim();
        assert_eq!(point.len(), d, "point dimension does not match the grid");
        let np = match &self.basis {
            Some(b) => b.len(),
            None => 4,
        };
        let mut idx = [[0usize; 9]; 4];
        let mut wts = [[0.0f64; 9]; 4];
        if self.basis.is_none() {
            if let Some(off) = self.grid_point_offset(point) {
                return self.values[off];
            }
        }
        for a in 0..d {
            let ax = &self.grid.axes[a];
            let n = self.grid.dof(a);
            let x = ax.wrap(point[a]);
            let u = (x - ax.lower) / ax.h();
            let cell = (u.floor() as usize).min(ax.count - 1);
            let t = u - cell as f64;
            match &self.basis {
                None => {
                    for k in 0..4 {
                        idx[a][k] = (cell + n + k - 1) % n;
                        wts[a][k] = bspline_kernel(t + 1.0 - k as f64, 1.0);
                    }
                }
                Some(b) => {
                    let t = snap_to_node(&b.nodes, t, 8.0 * f64::EPSILON * (1.0 + u.abs()));
                    b.lagrange(t, &mut wts[a][..np]);
                    for m in 0..np {
                        idx[a][m] = cell * np + m;
                    }
                }
            }
        }
        // sum over the tensor stencil, last axis outermost
        let mut acc = 0.0;
        let total = np.pow(d as u32);
        for combo in 0..total {
            let mut rem = combo;
            let mut w = 1.0;
            let mut off = 0;
            for a in 0..d {
                let k = rem % np;
                rem /= np;
                w *= wts[a][k];
                off += idx[a][k] * self.strides[a];
            }
            if w != 0.0 {
                acc += w * self.coefficients[off];
            }
        }
        acc
    }

    /// Offset of the stored point that `point` falls on, if any.
    fn grid_point_offset(&self, point: &[f64]) -> Option<usize> {
        let mut off = 0;
        for (a, ax) in self.grid.axes.iter().enumerate() {
            let u = (ax.wrap(point[a]) - ax.lower) / ax.h();
            let r = u.round();
            if (u - r).abs() > 8.0 * f64::EPSILON * (1.0 + u.abs()) {
                return None;
            }
            off += (r as usize % ax.count) * self.strides[a];
        }
        Some(off)
    }

    pub fn eval_many(&self, points: &[Vec<f64>]) -> Vec<f64> {
        points.par_iter().map(|p| self.eval(p)).collect()
    }
}

fn snap_to_node(nodes: &[f64], t: f64, tol: f64) -> f64 {
    for &x in nodes {
        if (t - x).abs() <= tol {
            return x;
        }
    }
    t
}

/// Replaces the data along `axis` by its periodic spline weights.
fn spline_weights_along(data: &mut [f64], dofs: &[usize], strides: &[usize], axis: usize, solver: &CyclicTridiag) {
    let n = dofs[axis];
    let stride = strides[axis];
    let lines = data.len() / n;
    let mut line = vec![0.0; n];
    let mut omega = vec![0.0; n];
    for l in 0..lines {
        let inner = l % stride;
        let outer = l / stride;
        let base = inner + outer * stride * n;
        for i in 0..n {
            line[i] = data[base + i * stride];
        }
        solver.solve_scaled(&line, &mut omega);
        for i in 0..n {
            data[base + i * stride] = omega[i];
        }
    }
}

/// Value of the discrete solution at `point`. Builds the interpolant each
/// call; use [`Evaluator`] for many points.
pub fn evaluate_at(field: &DistributionField, point: &[f64]) -> Result<f64> {
    Ok(Evaluator::new(field)?.eval(point))
}
