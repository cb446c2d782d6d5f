//! Periodic cubic-spline advection.
//!
//! The interpolant is `sum_k w_k S(x - x_k)` with the cubic B-spline `S`.
//! Weights come from the cyclic system `(1/6) tridiag(1, 4, 1) w = u`, solved
//! in O(n) by a Thomas solve plus a Sherman-Morrison rank-one correction.

use crate::error::{Error, Result};
use crate::sweep::{LineContext, LineKernel};

/// Cubic B-spline with support `[-2h, 2h]`.
pub fn bspline_kernel(x: f64, h: f64) -> f64 {
    unit_bspline(x / h)
}

#[inline]
fn unit_bspline(u: f64) -> f64 {
    let a = u.abs();
    if a <= 1.0 {
        (4.0 - 6.0 * a * a + 3.0 * a * a * a) / 6.0
    } else if a <= 2.0 {
        let b = 2.0 - a;
        b * b * b / 6.0
    } else {
        0.0
    }
}

/// Factorised solver for `tridiag(1, 4, 1) w = d` with periodic corners.
#[derive(Debug, Clone)]
pub struct CyclicTridiag {
    n: usize,
    /// Reciprocal Thomas pivots of the modified (non-cyclic) matrix; also the
    /// eliminated super-diagonal since it is 1.
    inv_pivot: Vec<f64>,
    /// Solution of `T z = p` for the rank-one correction vector `p`.
    z: Vec<f64>,
    /// `1 / (1 + q.z)`.
    correction: f64,
}

const GAMMA: f64 = -4.0;

impl CyclicTridiag {
    pub fn new(n: usize) -> Result<Self> {
        if n < 4 {
            return Err(Error::SplineTooShort(n));
        }
        let mut inv_pivot = vec![0.0; n];
        let mut prev = 0.0;
        for (i, p) in inv_pivot.iter_mut().enumerate() {
            let diag = if i == 0 {
                4.0 - GAMMA
            } else if i == n - 1 {
                4.0 - 1.0 / GAMMA
            } else {
                4.0
            };
            *p = 1.0 / (diag - prev);
            prev = *p;
        }
        let mut solver = Self { n, inv_pivot, z: vec![0.0; n], correction: 0.0 };
        let mut p = vec![0.0; n];
        p[0] = GAMMA;
        p[n - 1] = 1.0;
        let mut z = vec![0.0; n];
        solver.thomas(&p, &mut z);
        let qz = z[0] + z[n - 1] / GAMMA;
        solver.correction = 1.0 / (1.0 + qz);
        solver.z = z;
        Ok(solver)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    fn thomas(&self, rhs: &[f64], out: &mut [f64]) {
        let n = self.n;
        let mut prev = 0.0;
        for i in 0..n {
            prev = (rhs[i] - prev) * self.inv_pivot[i];
            out[i] = prev;
        }
        for i in (0..n - 1).rev() {
            out[i] -= self.inv_pivot[i] * out[i + 1];
        }
    }

    /// Solves `(1/6) C w = values` into `omega`.
    pub fn solve_scaled(&self, values: &[f64], omega: &mut [f64]) {
        let n = self.n;
        debug_assert_eq!(values.len(), n);
        let mut prev = 0.0;
        for i in 0..n {
            prev = (6.0 * values[i] - prev) * self.inv_pivot[i];
            omega[i] = prev;
        }
        for i in (0..n - 1).rev() {
            omega[i] -= self.inv_pivot[i] * omega[i + 1];
        }
        let qy = omega[0] + omega[n - 1] / GAMMA;
        let factor = qy * self.correction;
        for (w, z) in omega.iter_mut().zip(&self.z) {
            *w -= factor * z;
        }
    }
}

/// B-spline weights of one periodic line.
#[derive(Debug, Clone, PartialEq)]
pub struct SplineCoefficients {
    pub omega: Vec<f64>,
    pub h: f64,
    pub x0: f64,
}

impl SplineCoefficients {
    /// Value of the periodic spline at `x`.
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.omega.len();
        let u = ((x - self.x0) / self.h).rem_euclid(n as f64);
        let mut j = u.floor() as usize;
        if j >= n {
            j = n - 1;
        }
        let t = u - j as f64;
        let w = cubic_weights(t);
        let mut acc = 0.0;
        for (k, wk) in w.iter().enumerate() {
            acc += wk * self.omega[(j + n + k - 1) % n];
        }
        acc
    }
}

/// Builds the periodic interpolating spline through `values` at `x0 + i*h`.
pub fn build_spline(values: &[f64], h: f64, x0: f64) -> Result<SplineCoefficients> {
    let solver = CyclicTridiag::new(values.len())?;
    let mut omega = vec![0.0; values.len()];
    solver.solve_scaled(values, &mut omega);
    Ok(SplineCoefficients { omega, h, x0 })
}

/// Kernel weights `S(t+1), S(t), S(t-1), S(t-2)` in units of `h`, for a point
/// at fractional offset `t` past node `j`; they multiply `w_{j-1}..w_{j+2}`.
#[inline]
fn cubic_weights(t: f64) -> [f64; 4] {
    [unit_bspline(t + 1.0), unit_bspline(t), unit_bspline(t - 1.0), unit_bspline(t - 2.0)]
}

/// Splits a shift into the index offset of the left stencil point and the
/// four kernel weights. Output `i` reads `omega[(i + offset + k) mod n]`,
/// `k = 0..4`.
fn shift_stencil(shift: f64, h: f64, n: usize) -> (usize, [f64; 4]) {
    let mut s = shift / h;
    if !s.is_finite() {
        return (0, [f64::NAN; 4]);
    }
    if s.abs() >= 2f64.powi(52) {
        // already an integer; fmod is exact
        s %= n as f64;
    }
    let q = s.floor();
    let alpha = s - q;
    let q = q as i64;
    // x* = x_i - shift lies in interval j = i - q - 1 at t = 1 - alpha, or on
    // node j = i - q when alpha is zero.
    let (j_off, t) = if alpha > 0.0 { (-q - 1, 1.0 - alpha) } else { (-q, 0.0) };
    let offset = (j_off - 1).rem_euclid(n as i64) as usize;
    (offset, cubic_weights(t))
}

/// Scratch buffers for [`advect_line_spline_with`].
#[derive(Debug, Clone, Default)]
pub struct SplineScratch {
    omega: Vec<f64>,
    padded: Vec<f64>,
}

impl SplineScratch {
    pub fn new(n: usize) -> Self {
        Self { omega: vec![0.0; n], padded: vec![0.0; n + 3] }
    }
}

/// Shifted spline evaluation with a prepared solver and reusable scratch.
pub fn advect_line_spline_with(
    solver: &CyclicTridiag,
    line: &[f64],
    shift: f64,
    h: f64,
    output: &mut [f64],
    scratch: &mut SplineScratch,
) {
    let n = solver.len();
    debug_assert_eq!(line.len(), n);
    debug_assert_eq!(output.len(), n);
    if scratch.omega.len() != n {
        *scratch = SplineScratch::new(n);
    }
    solver.solve_scaled(line, &mut scratch.omega);
    let (offset, w) = shift_stencil(shift, h, n);
    let omega = &scratch.omega;
    let padded = &mut scratch.padded;
    let head = n - offset;
    padded[..head].copy_from_slice(&omega[offset..]);
    padded[head..n].copy_from_slice(&omega[..offset]);
    padded.copy_within(0..3, n);
    for (i, out) in output.iter_mut().enumerate() {
        *out = w[0] * padded[i] + w[1] * padded[i + 1] + w[2] * padded[i + 2] + w[3] * padded[i + 3];
    }
}

/// `u_i <- spline(x_i - shift)` on a periodic line of spacing `h`.
pub fn advect_line_spline(line: &[f64], shift: f64, h: f64) -> Result<Vec<f64>> {
    let solver = CyclicTridiag::new(line.len())?;
    let mut out = vec![0.0; line.len()];
    let mut scratch = SplineScratch::new(line.len());
    advect_line_spline_with(&solver, line, shift, h, &mut out, &mut scratch);
    Ok(out)
}

/// Sweep kernel shifting each line by `shift(ctx)`.
pub struct SplineAdvection<F> {
    solver: CyclicTridiag,
    h: f64,
    shift: F,
}

impl<F> SplineAdvection<F>
where
    F: Fn(&LineContext<'_>) -> f64 + Sync,
{
    pub fn new(n: usize, h: f64, shift: F) -> Result<Self> {
        Ok(Self { solver: CyclicTridiag::new(n)?, h, shift })
    }
}

impl<F> LineKernel for SplineAdvection<F>
where
    F: Fn(&LineContext<'_>) -> f64 + Sync,
{
    type Scratch = SplineScratch;

    fn scratch(&self, len: usize) -> SplineScratch {
        SplineScratch::new(len)
    }

    fn apply(&self, ctx: &LineContext<'_>, input: &[f64], output: &mut [f64], scratch: &mut SplineScratch) -> Result<()> {
        if input.len() != self.solver.len() {
            return Err(Error::LineLengthMismatch { expected: self.solver.len(), got: input.len() });
        }
        let shift = (self.shift)(ctx);
        advect_line_spline_with(&self.solver, input, shift, self.h, output, scratch);
        Ok(())
    }
}
