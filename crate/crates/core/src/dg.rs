//! Semi-Lagrangian discontinuous Galerkin advection.
//!
//! Each cell of width `h` carries a degree-`l` polynomial stored by its values
//! at the `l+1` Gauss-Legendre nodes. A constant shift translates the
//! piecewise polynomial and L2-projects it back cell by cell. Writing
//! `shift/h = q + alpha` with `q = floor(shift/h)`, output cell `i` only reads
//! source cells `i-q-1` (through `A`) and `i-q` (through `B`).

use crate::error::{Error, Result};
use crate::sweep::{LineContext, LineKernel};

/// Gauss-Legendre nodes and weights on `[0, 1]` for `order` points.
pub fn gauss_nodes(order: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(order >= 1, "quadrature order must be positive");
    let n = order;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // root i of P_n on (-1, 1), descending
        let mut y = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, y);
            dp = d;
            let dy = p / d;
            y -= dy;
            if dy.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, y);
        if d != 0.0 {
            dp = d;
        }
        let w = 1.0 / ((1.0 - y * y) * dp * dp);
        // map to [0,1]: xi = (1 + y)/2, weight 2/(..)/2
        let xi = 0.5 * (1.0 + y);
        nodes[n - 1 - i] = xi;
        nodes[i] = 1.0 - xi;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.5;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, y: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = y;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 1..n {
        let k = k as f64;
        let p2 = ((2.0 * k + 1.0) * y * p1 - k * p0) / (k + 1.0);
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (y * p1 - p0) / (y * y - 1.0);
    (p1, d)
}

/// Values of the `L2(0,1)`-orthonormal Legendre polynomials `phi_0..phi_l` at `xi`.
pub fn orthonormal_legendre(degree: usize, xi: f64, out: &mut [f64]) {
    let y = 2.0 * xi - 1.0;
    let mut p0 = 1.0;
    let mut p1 = y;
    out[0] = 1.0;
    if degree >= 1 {
        out[1] = 3f64.sqrt() * y;
    }
    for k in 1..degree {
        let kf = k as f64;
        let p2 = ((2.0 * kf + 1.0) * y * p1 - kf * p0) / (kf + 1.0);
        p0 = p1;
        p1 = p2;
        out[k + 1] = (2.0 * kf + 3.0).sqrt() * p2;
    }
}

/// Nodal basis on the reference cell.
#[derive(Debug, Clone)]
pub struct DgBasis {
    pub degree: usize,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// Barycentric weights of the Lagrange basis on `nodes`.
    bary: Vec<f64>,
    /// `phi_k(xi_j)` stored at `[j * (degree + 1) + k]`.
    phi_at_nodes: Vec<f64>,
}

impl DgBasis {
    pub fn new(degree: usize) -> Self {
        let np = degree + 1;
        let (nodes, weights) = gauss_nodes(np);
        let bary = (0..np)
            .map(|m| {
                let prod: f64 = (0..np).filter(|&k| k != m).map(|k| nodes[m] - nodes[k]).product();
                1.0 / prod
            })
            .collect();
        let mut phi_at_nodes = vec![0.0; np * np];
        for (j, &x) in nodes.iter().enumerate() {
            orthonormal_legendre(degree, x, &mut phi_at_nodes[j * np..(j + 1) * np]);
        }
        Self { degree, nodes, weights, bary, phi_at_nodes }
    }

    pub fn len(&self) -> usize {
        self.degree + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Lagrange basis values `l_m(xi)` for all `m`.
    pub fn lagrange(&self, xi: f64, out: &mut [f64]) {
        if let Some(m) = self.nodes.iter().position(|&x| x == xi) {
            out.iter_mut().for_each(|v| *v = 0.0);
            out[m] = 1.0;
            return;
        }
        let mut denom = 0.0;
        for (m, o) in out.iter_mut().enumerate() {
            let t = self.bary[m] / (xi - self.nodes[m]);
            *o = t;
            denom += t;
        }
        for o in out.iter_mut() {
            *o /= denom;
        }
    }

    /// Value at `xi` of the cell polynomial with nodal values `values`.
    pub fn interpolate(&self, values: &[f64], xi: f64) -> f64 {
        if let Some(m) = self.nodes.iter().position(|&x| x == xi) {
            return values[m];
        }
        let mut num = 0.0;
        let mut denom = 0.0;
        for m in 0..self.len() {
            let t = self.bary[m] / (xi - self.nodes[m]);
            num += t * values[m];
            denom += t;
        }
        num / denom
    }
}

/// Two-cell update for one shift.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionPair {
    /// Row-major `(l+1) x (l+1)`, applied to source cell `i - q - 1`.
    pub a: Vec<f64>,
    /// Row-major `(l+1) x (l+1)`, applied to source cell `i - q`.
    pub b: Vec<f64>,
    pub q: i64,
    pub alpha: f64,
}

impl ProjectionPair {
    fn zeroed(np: usize) -> Self {
        Self { a: vec![0.0; np * np], b: vec![0.0; np * np], q: 0, alpha: 0.0 }
    }
}

/// Splits `shift/h` into whole cells and a fraction in `[0, 1)`.
pub fn split_shift(shift: f64, h: f64) -> (i64, f64) {
    let s = shift / h;
    let q = s.floor();
    let alpha = s - q;
    if alpha >= 1.0 {
        (q as i64 + 1, 0.0)
    } else {
        (q as i64, alpha)
    }
}

/// Builds the projection matrices for translating by `shift`.
pub fn projection_pair(shift: f64, h: f64, degree: usize) -> ProjectionPair {
    let basis = DgBasis::new(degree);
    let mut pair = ProjectionPair::zeroed(basis.len());
    let mut work = PairWork::new(basis.len());
    fill_projection_pair(&basis, shift, h, &mut pair, &mut work);
    pair
}

#[derive(Debug, Clone)]
struct PairWork {
    phi: Vec<f64>,
    lag: Vec<f64>,
    kern: Vec<f64>,
}

impl PairWork {
    fn new(np: usize) -> Self {
        Self { phi: vec![0.0; np], lag: vec![0.0; np], kern: vec![0.0; np] }
    }
}

fn fill_projection_pair(basis: &DgBasis, shift: f64, h: f64, pair: &mut ProjectionPair, work: &mut PairWork) {
    let np = basis.len();
    let (q, alpha) = split_shift(shift, h);
    pair.q = q;
    pair.alpha = alpha;
    pair.a.iter_mut().for_each(|v| *v = 0.0);
    pair.b.iter_mut().for_each(|v| *v = 0.0);
    if alpha == 0.0 {
        for j in 0..np {
            pair.b[j * np + j] = 1.0;
        }
        return;
    }
    // Sub-interval [0, alpha): source at xi + 1 - alpha. Sub-interval
    // [alpha, 1): source at xi - alpha. Both integrands have degree <= 2l,
    // so an (l+1)-point Gauss rule on each sub-interval is exact.
    for (target, lo, len, src_shift) in [(0, 0.0, alpha, 1.0 - alpha), (1, alpha, 1.0 - alpha, -alpha)] {
        for p in 0..np {
            let eta = lo + len * basis.nodes[p];
            let wq = len * basis.weights[p];
            orthonormal_legendre(basis.degree, eta, &mut work.phi);
            basis.lagrange(eta + src_shift, &mut work.lag);
            // kern[j] = sum_k phi_k(xi_j) phi_k(eta)
            for j in 0..np {
                let row = &basis.phi_at_nodes[j * np..(j + 1) * np];
                work.kern[j] = row.iter().zip(&work.phi).map(|(a, b)| a * b).sum();
            }
            let mat = if target == 0 { &mut pair.a } else { &mut pair.b };
            for j in 0..np {
                let kj = wq * work.kern[j];
                for m in 0..np {
                    mat[j * np + m] += kj * work.lag[m];
                }
            }
        }
    }
}

/// Applies a projection pair to a whole periodic line of `cells` cells.
pub fn apply_pair(pair: &ProjectionPair, np: usize, input: &[f64], output: &mut [f64]) {
    let cells = input.len() / np;
    let q = pair.q.rem_euclid(cells as i64) as usize;
    if pair.alpha == 0.0 {
        for i in 0..cells {
            let src = (i + cells - q) % cells;
            output[i * np..(i + 1) * np].copy_from_slice(&input[src * np..(src + 1) * np]);
        }
        return;
    }
    match np {
        1 => apply_fixed::<1>(pair, q, input, output),
        2 => apply_fixed::<2>(pair, q, input, output),
        3 => apply_fixed::<3>(pair, q, input, output),
        4 => apply_fixed::<4>(pair, q, input, output),
        5 => apply_fixed::<5>(pair, q, input, output),
        6 => apply_fixed::<6>(pair, q, input, output),
        7 => apply_fixed::<7>(pair, q, input, output),
        8 => apply_fixed::<8>(pair, q, input, output),
        9 => apply_fixed::<9>(pair, q, input, output),
        _ => unreachable!("dG degree is bounded by MAX_DG_DEGREE"),
    }
}

/// `out_i = A u_{i-q-1} + B u_{i-q}` with the cell size known at compile
/// time. Each output accumulates its A terms then its B terms in order of
/// the source node.
fn apply_fixed<const N: usize>(pair: &ProjectionPair, q: usize, input: &[f64], output: &mut [f64]) {
    let cells = input.len() / N;
    let mut a = [[0.0; N]; N];
    let mut b = [[0.0; N]; N];
    for m in 0..N {
        for j in 0..N {
            a[m][j] = pair.a[j * N + m];
            b[m][j] = pair.b[j * N + m];
        }
    }
    let mut right = (cells - q) % cells;
    let mut left = (right + cells - 1) % cells;
    for out in output.chunks_exact_mut(N) {
        let ul = &input[left * N..left * N + N];
        let ur = &input[right * N..right * N + N];
        let mut acc = [0.0; N];
        for m in 0..N {
            for j in 0..N {
                acc[j] += a[m][j] * ul[m];
            }
        }
        for m in 0..N {
            for j in 0..N {
                acc[j] += b[m][j] * ur[m];
            }
        }
        out.copy_from_slice(&acc);
        left = right;
        right += 1;
        if right == cells {
            right = 0;
        }
    }
}

/// `u <- P T_shift u` on a periodic line of `n_C * (degree + 1)` nodal values.
pub fn advect_line_dg(line: &[f64], shift: f64, h: f64, degree: usize) -> Result<Vec<f64>> {
    let np = degree + 1;
    if line.len() % np != 0 || line.len() / np < 2 {
        return Err(Error::DimensionMismatch(format!(
            "dG line of length {} does not hold at least two cells of {np} nodes",
            line.len()
        )));
    }
    let pair = projection_pair(shift, h, degree);
    let mut out = vec![0.0; line.len()];
    apply_pair(&pair, np, line, &mut out);
    Ok(out)
}

/// Per-worker scratch for [`DgLineAdvection`].
#[derive(Debug, Clone)]
pub struct DgScratch {
    pair: ProjectionPair,
    work: PairWork,
}

/// Sweep kernel with precomputed pairs, e.g. one per velocity node for an
/// x-advection; `select` maps a line to its pair.
pub struct DgTableAdvection<S> {
    np: usize,
    cells: usize,
    pairs: Vec<ProjectionPair>,
    select: S,
}

impl<S> DgTableAdvection<S>
where
    S: Fn(&LineContext<'_>) -> usize + Sync,
{
    pub fn new(degree: usize, cells: usize, h: f64, shifts: &[f64], select: S) -> Self {
        let basis = DgBasis::new(degree);
        let mut work = PairWork::new(basis.len());
        let pairs = shifts
            .iter()
            .map(|&s| {
                let mut p = ProjectionPair::zeroed(basis.len());
                fill_projection_pair(&basis, s, h, &mut p, &mut work);
                p
            })
            .collect();
        Self { np: basis.len(), cells, pairs, select }
    }

    pub fn pairs(&self) -> &[ProjectionPair] {
        &self.pairs
    }
}

impl<S> LineKernel for DgTableAdvection<S>
where
    S: Fn(&LineContext<'_>) -> usize + Sync,
{
    type Scratch = ();

    fn scratch(&self, _len: usize) {}

    fn apply(&self, ctx: &LineContext<'_>, input: &[f64], output: &mut [f64], _: &mut ()) -> Result<()> {
        if input.len() != self.cells * self.np {
            return Err(Error::LineLengthMismatch { expected: self.cells * self.np, got: input.len() });
        }
        apply_pair(&self.pairs[(self.select)(ctx)], self.np, input, output);
        Ok(())
    }
}

/// Sweep kernel forming a fresh pair for every line, for shifts that vary
/// from line to line (v-advection by the local electric field).
pub struct DgLineAdvection<F> {
    basis: DgBasis,
    h: f64,
    cells: usize,
    shift: F,
}

impl<F> DgLineAdvection<F>
where
    F: Fn(&LineContext<'_>) -> f64 + Sync,
{
    pub fn new(degree: usize, cells: usize, h: f64, shift: F) -> Self {
        Self { basis: DgBasis::new(degree), h, cells, shift }
    }
}

impl<F> LineKernel for DgLineAdvection<F>
where
    F: Fn(&LineContext<'_>) -> f64 + Sync,
{
    type Scratch = DgScratch;

    fn scratch(&self, _len: usize) -> DgScratch {
        let np = self.basis.len();
        DgScratch { pair: ProjectionPair::zeroed(np), work: PairWork::new(np) }
    }

    fn apply(&self, ctx: &LineContext<'_>, input: &[f64], output: &mut [f64], scratch: &mut DgScratch) -> Result<()> {
        let np = self.basis.len();
        if input.len() != self.cells * np {
            return Err(Error::LineLengthMismatch { expected: self.cells * np, got: input.len() });
        }
        let shift = (self.shift)(ctx);
        fill_projection_pair(&self.basis, shift, self.h, &mut scratch.pair, &mut scratch.work);
        apply_pair(&scratch.pair, np, input, output);
        Ok(())
    }
}
