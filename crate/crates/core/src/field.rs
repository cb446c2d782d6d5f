//! Charge density, periodic Poisson solve and electric energy.
//!
//! The field satisfies `div E = rho - 1`, `curl E = 0` on the periodic space
//! domain. It is computed in Fourier space on a uniform grid: for spline
//! grids that is the grid itself; for dG grids the cell polynomials of `rho`
//! are sampled at equispaced points and `E` is brought back to the Gauss
//! nodes by evaluating its Fourier series there.
//!
//! Spatial arrays are stored with `x1` fastest.

use std::f64::consts::PI;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::dg::DgBasis;
use crate::error::{Error, Result};
use crate::grid::{DistributionField, GridSpec, Method};

/// Sampling used to feed dG densities to the uniform-grid transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DgSampling {
    /// One sample per cell, at the cell centre.
    #[default]
    CellCenters,
    /// `degree + 1` equispaced samples per cell, at `(j + 1/2)/(degree + 1)`.
    Subcell,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityField {
    /// Density at the spatial nodes, `x1` fastest.
    pub rho: Vec<f64>,
    pub grid: GridSpec,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ElectricField {
    /// One array per space dimension, at the spatial nodes, `x1` fastest.
    pub components: Vec<Vec<f64>>,
    pub grid: GridSpec,
}

impl ElectricField {
    pub fn zeros(grid: &GridSpec) -> Self {
        let n = spatial_len(grid);
        Self { components: vec![vec![0.0; n]; grid.space_dims()], grid: grid.clone() }
    }
}

fn spatial_len(grid: &GridSpec) -> usize {
    (0..grid.space_dims()).map(|a| grid.dof(a)).product()
}

/// Quadrature weights of the spatial nodes, `x1` fastest.
pub fn spatial_weights(grid: &GridSpec) -> Vec<f64> {
    let mut out = vec![1.0];
    for a in 0..grid.space_dims() {
        let w = grid.weights(a);
        out = w.iter().flat_map(|wa| out.iter().map(move |o| o * wa)).collect();
    }
    out
}

fn space_measure(grid: &GridSpec) -> f64 {
    grid.space_axes().iter().map(|a| a.length()).product()
}

/// Velocity integral of `f` at every spatial node.
///
/// Each spatial node is summed by one worker in a fixed order (`v1`
/// fastest), so the result does not depend on the number of workers.
pub fn compute_density(field: &DistributionField) -> DensityField {
    let grid = &field.grid;
    let sd = grid.space_dims();
    let dofs = grid.dofs();
    let strides = &field.layout.strides;

    let mut v_offsets = vec![0usize];
    let mut v_weights = vec![1.0];
    for a in sd..grid.ndim() {
        let w = grid.weights(a);
        let mut no = Vec::with_capacity(v_offsets.len() * dofs[a]);
        let mut nw = Vec::with_capacity(v_offsets.len() * dofs[a]);
        for (i, wi) in w.iter().enumerate() {
            for (o, ow) in v_offsets.iter().zip(&v_weights) {
                no.push(o + i * strides[a]);
                nw.push(ow * wi);
            }
        }
        v_offsets = no;
        v_weights = nw;
    }

    // Blocks of spatial points walk each velocity slab in memory order; every
    // point still sums its velocity nodes in the order of `v_offsets`.
    const BLOCK: usize = 512;
    let n_space = spatial_len(grid);
    let data = &field.data;
    let mut rho = vec![0.0; n_space];
    rho.par_chunks_mut(BLOCK).enumerate().for_each(|(b, out)| {
        let bases: Vec<usize> = (b * BLOCK..b * BLOCK + out.len())
            .map(|s| {
                let mut rem = s;
                let mut base = 0;
                for a in 0..sd {
                    base += (rem % dofs[a]) * strides[a];
                    rem /= dofs[a];
                }
                base
            })
            .collect();
        for (o, w) in v_offsets.iter().zip(&v_weights) {
            for (acc, base) in out.iter_mut().zip(&bases) {
                *acc += w * data[base + o];
            }
        }
    });
    DensityField { rho, grid: grid.clone() }
}

/// Fourier data of one solve, on the uniform transform grid (`x1` fastest).
#[derive(Debug, Clone)]
pub struct Spectrum {
    /// Transform grid size per space axis.
    pub sizes: Vec<usize>,
    /// Wave numbers per axis, in FFT index order; Nyquist entries are zero.
    pub wavenumbers: Vec<Vec<f64>>,
    pub rho_hat: Vec<Complex64>,
    pub e_hat: Vec<Vec<Complex64>>,
}

/// Reusable periodic Poisson solver for one grid.
pub struct PoissonSolver {
    grid: GridSpec,
    sizes: Vec<usize>,
    ffts: Vec<(Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>)>,
    /// dG only: per axis, `samples x nodes` Lagrange values mapping nodal data to samples.
    sampling: Option<Vec<Vec<f64>>>,
    /// dG only: per axis, `nodes x modes` phase factors of the inverse series.
    synthesis: Option<Vec<Vec<Complex64>>>,
    warned_non_neutral: AtomicBool,
}

impl PoissonSolver {
    pub fn new(grid: &GridSpec) -> Self {
        Self::with_sampling(grid, DgSampling::default())
    }

    pub fn with_sampling(grid: &GridSpec, sampling: DgSampling) -> Self {
        let sd = grid.space_dims();
        let per_cell = match (grid.method, sampling) {
            (Method::Spline, _) => 1,
            (Method::Dg, DgSampling::CellCenters) => 1,
            (Method::Dg, DgSampling::Subcell) => grid.nodes_per_cell(),
        };
        let sizes: Vec<usize> = (0..sd).map(|a| grid.axes[a].count * per_cell).collect();
        let mut planner = FftPlanner::new();
        let ffts = sizes.iter().map(|&m| (planner.plan_fft_forward(m), planner.plan_fft_inverse(m))).collect();

        let (sampling, synthesis) = if grid.method == Method::Dg {
            let basis = DgBasis::new(grid.dg_degree);
            let np = basis.len();
            let offsets: Vec<f64> = (0..per_cell).map(|j| (j as f64 + 0.5) / per_cell as f64).collect();
            let mut samp = Vec::new();
            let mut synth = Vec::new();
            for a in 0..sd {
                let mut s = vec![0.0; per_cell * np];
                for (j, &xi) in offsets.iter().enumerate() {
                    basis.lagrange(xi, &mut s[j * np..(j + 1) * np]);
                }
                samp.push(s);

                let ax = &grid.axes[a];
                let m_count = sizes[a];
                let first = ax.lower + 0.5 * ax.length() / m_count as f64;
                let nodes = grid.coordinates(a);
                let ks = wavenumbers(m_count, ax.length());
                let mut t = vec![Complex64::new(0.0, 0.0); nodes.len() * m_count];
                for (i, x) in nodes.iter().enumerate() {
                    for (m, k) in ks.iter().enumerate() {
                        t[i * m_count + m] = Complex64::from_polar(1.0, k * (x - first));
                    }
                }
                synth.push(t);
            }
            (Some(samp), Some(synth))
        } else {
            (None, None)
        };
        Self { grid: grid.clone(), sizes, ffts, sampling, synthesis, warned_non_neutral: AtomicBool::new(false) }
    }

    /// Samples `rho` on the transform grid.
    fn sample(&self, rho: &[f64]) -> Vec<f64> {
        let Some(sampling) = &self.sampling else {
            return rho.to_vec();
        };
        let np = self.grid.nodes_per_cell();
        let mut cur = rho.to_vec();
        let mut shape: Vec<usize> = (0..self.grid.space_dims()).map(|a| self.grid.dof(a)).collect();
        for a in 0..shape.len() {
            let per_cell = self.sizes[a] / self.grid.axes[a].count;
            let cells = self.grid.axes[a].count;
            let inner: usize = shape[..a].iter().product();
            let outer: usize = shape[a + 1..].iter().product();
            let n_in = shape[a];
            let n_out = self.sizes[a];
            let mut next = vec![0.0; inner * n_out * outer];
            for o in 0..outer {
                for c in 0..cells {
                    for j in 0..per_cell {
                        let row = &sampling[a][j * np..(j + 1) * np];
                        for i in 0..inner {
                            let mut acc = 0.0;
                            for (m, w) in row.iter().enumerate() {
                                acc += w * cur[i + inner * (c * np + m + n_in * o)];
                            }
                            next[i + inner * (c * per_cell + j + n_out * o)] = acc;
                        }
                    }
                }
            }
            shape[a] = n_out;
            cur = next;
        }
        cur
    }

    fn transform(&self, data: &mut [Complex64], inverse: bool) {
        let mut inner = 1;
        let total = data.len();
        for (a, &m) in self.sizes.iter().enumerate() {
            let fft = if inverse { &self.ffts[a].1 } else { &self.ffts[a].0 };
            if inner == 1 {
                fft.process(data);
            } else {
                let mut line = vec![Complex64::new(0.0, 0.0); m];
                let outer = total / (inner * m);
                for o in 0..outer {
                    for i in 0..inner {
                        for (k, l) in line.iter_mut().enumerate() {
                            *l = data[i + inner * (k + m * o)];
                        }
                        fft.process(&mut line);
                        for (k, l) in line.iter().enumerate() {
                            data[i + inner * (k + m * o)] = *l;
                        }
                    }
                }
            }
            inner *= m;
        }
    }

    /// Fourier coefficients of `rho` and `E` on the transform grid.
    pub fn spectrum(&self, rho: &DensityField) -> Result<Spectrum> {
        if rho.rho.len() != spatial_len(&self.grid) {
            return Err(Error::DimensionMismatch(format!(
                "density has {} values, grid has {} spatial nodes",
                rho.rho.len(),
                spatial_len(&self.grid)
            )));
        }
        let weights = spatial_weights(&self.grid);
        let mean = rho.rho.iter().zip(&weights).map(|(r, w)| r * w).sum::<f64>() / space_measure(&self.grid);
        if (mean - 1.0).abs() > 1e-6 {
            let level = if self.warned_non_neutral.swap(true, Ordering::Relaxed) { log::Level::Debug } else { log::Level::Warn };
            log::log!(level, "density is not neutral: mean(rho) - 1 = {:e}; dropping the k = 0 mode", mean - 1.0);
        }

        let samples = self.sample(&rho.rho);
        let mut rho_hat: Vec<Complex64> = samples.iter().map(|&r| Complex64::new(r, 0.0)).collect();
        self.transform(&mut rho_hat, false);

        let sd = self.sizes.len();
        let ks: Vec<Vec<f64>> =
            (0..sd).map(|a| wavenumbers(self.sizes[a], self.grid.axes[a].length())).collect();
        let mut e_hat = vec![vec![Complex64::new(0.0, 0.0); rho_hat.len()]; sd];
        for (flat, r) in rho_hat.iter().enumerate() {
            let mut rem = flat;
            let mut k = [0.0; 2];
            for a in 0..sd {
                k[a] = ks[a][rem % self.sizes[a]];
                rem /= self.sizes[a];
            }
            let k2: f64 = k[..sd].iter().map(|x| x * x).sum();
            if k2 == 0.0 {
                continue;
            }
            // -lap phi = rho - 1, E = -grad phi  =>  E_hat = -i k rho_hat / |k|^2
            let phi = r / k2;
            for a in 0..sd {
                e_hat[a][flat] = Complex64::new(0.0, -k[a]) * phi;
            }
        }
        Ok(Spectrum { sizes: self.sizes.clone(), wavenumbers: ks, rho_hat, e_hat })
    }

    pub fn solve(&self, rho: &DensityField) -> Result<ElectricField> {
        let spectrum = self.spectrum(rho)?;
        let total: usize = self.sizes.iter().product();
        let scale = 1.0 / total as f64;
        let components = spectrum
            .e_hat
            .into_iter()
            .map(|mut eh| match &self.synthesis {
                None => {
                    self.transform(&mut eh, true);
                    eh.iter().map(|c| c.re * scale).collect()
                }
                Some(synth) => self.synthesize(synth, &eh, scale),
            })
            .collect();
        Ok(ElectricField { components, grid: self.grid.clone() })
    }

    /// Evaluates the Fourier series `eh` at the Gauss nodes, axis by axis.
    fn synthesize(&self, synth: &[Vec<Complex64>], eh: &[Complex64], scale: f64) -> Vec<f64> {
        let mut cur = eh.to_vec();
        let mut shape = self.sizes.clone();
        for a in 0..shape.len() {
            let m_count = self.sizes[a];
            let n_out = self.grid.dof(a);
            let inner: usize = shape[..a].iter().product();
            let outer: usize = shape[a + 1..].iter().product();
            let mut next = vec![Complex64::new(0.0, 0.0); inner * n_out * outer];
            for o in 0..outer {
                for t in 0..n_out {
                    let row = &synth[a][t * m_count..(t + 1) * m_count];
                    for i in 0..inner {
                        let mut acc = Complex64::new(0.0, 0.0);
                        for (m, p) in row.iter().enumerate() {
                            acc += p * cur[i + inner * (m + m_count * o)];
                        }
                        next[i + inner * (t + n_out * o)] = acc;
                    }
                }
            }
            shape[a] = n_out;
            cur = next;
        }
        cur.iter().map(|c| c.re * scale).collect()
    }
}

/// Angular wave numbers in FFT order; the Nyquist mode of an even grid is zeroed.
fn wavenumbers(m: usize, length: f64) -> Vec<f64> {
    (0..m)
        .map(|i| {
            if m % 2 == 0 && i == m / 2 {
                0.0
            } else {
                let signed = if i <= m / 2 { i as f64 } else { i as f64 - m as f64 };
                2.0 * PI * signed / length
            }
        })
        .collect()
}

/// One-shot Poisson solve; prefer [`PoissonSolver`] when solving repeatedly.
pub fn solve_poisson(rho: &DensityField) -> Result<ElectricField> {
    PoissonSolver::new(&rho.grid).solve(rho)
}

/// `1/2 * integral |E|^2 dx` with the grid's native spatial quadrature.
pub fn electric_energy(e: &ElectricField) -> f64 {
    let w = spatial_weights(&e.grid);
    0.5 * e.components.iter().map(|c| c.iter().zip(&w).map(|(v, wi)| v * v * wi).sum::<f64>()).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Axis, LayoutDescriptor, LayoutStrategy};

    fn grid(method: Method, n: usize, l: f64) -> GridSpec {
        let cells = if method == Method::Dg { n / 4 } else { n };
        GridSpec::new(
            vec![
                Axis::space(0.0, l, cells).unwrap(),
                Axis::space(0.0, l, cells).unwrap(),
                Axis::velocity(-6.0, 6.0, cells).unwrap(),
                Axis::velocity(-6.0, 6.0, cells).unwrap(),
            ],
            method,
            3,
        )
        .unwrap()
    }

    fn spatial_coords(g: &GridSpec) -> Vec<(f64, f64)> {
        let x1 = g.coordinates(0);
        let x2 = g.coordinates(1);
        x2.iter().flat_map(|b| x1.iter().map(move |a| (*a, *b))).collect()
    }

    fn density(g: &GridSpec, f: impl Fn(f64, f64) -> f64) -> DensityField {
        DensityField { rho: spatial_coords(g).into_iter().map(|(a, b)| f(a, b)).collect(), grid: g.clone() }
    }

    #[test]
    fn gaussian_density_is_one() {
        // Rectangle rule is spectrally accurate here; 4-point Gauss per cell needs finer cells.
        for (method, n) in [(Method::Spline, 32), (Method::Dg, 64)] {
            let g = grid(method, n, 4.0 * PI);
            let l = LayoutDescriptor::canonical(&g, LayoutStrategy::Strided);
            let f = DistributionField::from_fn(g, l, |p| (-(p[2] * p[2] + p[3] * p[3]) / 2.0).exp() / (2.0 * PI))
                .unwrap();
            let rho = compute_density(&f);
            for r in rho.rho {
                assert!((r - 1.0).abs() < 1e-7, "{method:?}: {r}");
            }
        }
    }

    #[test]
    fn zero_density_and_zero_field() {
        let g = grid(Method::Spline, 16, 1.0);
        let l = LayoutDescriptor::canonical(&g, LayoutStrategy::Strided);
        let f = DistributionField::zeros(g.clone(), l).unwrap();
        assert!(compute_density(&f).rho.iter().all(|&r| r == 0.0));
        let e = solve_poisson(&density(&g, |_, _| 1.0)).unwrap();
        assert!(e.components.iter().flatten().all(|v| v.abs() < 1e-15));
        assert_eq!(electric_energy(&e), 0.0);
    }

    #[test]
    fn density_of_indicator_is_weighted_sum() {
        // f = 1 on a single velocity node: rho = that node's weight product
        let g = grid(Method::Dg, 16, 1.0);
        let l = LayoutDescriptor::canonical(&g, LayoutStrategy::Transpose);
        let mut f = DistributionField::zeros(g.clone(), l).unwrap();
        let idx = f.offset(&[2, 3, 5, 6]);
        f.data[idx] = 1.0;
        let idx = f.offset(&[2, 3, 0, 1]);
        f.data[idx] = 2.0;
        let w2 = g.weights(2);
        let w3 = g.weights(3);
        let rho = compute_density(&f);
        let want = w2[5] * w3[6] + 2.0 * w2[0] * w3[1];
        assert!((rho.rho[2 + 16 * 3] - want).abs() < 1e-15);
        assert_eq!(rho.rho.iter().filter(|&&r| r != 0.0).count(), 1);
    }

    #[test]
    fn single_mode_field() {
        let g = grid(Method::Spline, 32, 4.0 * PI);
        let rho = density(&g, |x1, _| 1.0 + 0.5 * (0.5 * x1).cos());
        let e = solve_poisson(&rho).unwrap();
        for ((x1, _), (e1, e2)) in spatial_coords(&g).iter().zip(e.components[0].iter().zip(&e.components[1])) {
            assert!((e1 - (0.5 * x1).sin()).abs() < 1e-12);
            assert!(e2.abs() < 1e-12);
        }
        assert!((electric_energy(&e) - 4.0 * PI * PI).abs() < 1e-10);
    }

    #[test]
    fn two_mode_field() {
        let g = grid(Method::Spline, 32, 10.0 * PI);
        let (eps, k) = (1e-3, 0.2);
        let rho = density(&g, |a, b| 1.0 + eps * (k * a).cos() * (k * b).cos());
        let e = solve_poisson(&rho).unwrap();
        for ((x1, x2), (e1, e2)) in spatial_coords(&g).iter().zip(e.components[0].iter().zip(&e.components[1])) {
            let amp = eps / (2.0 * k);
            assert!((e1 - amp * (k * x1).sin() * (k * x2).cos()).abs() < 1e-12);
            assert!((e2 - amp * (k * x1).cos() * (k * x2).sin()).abs() < 1e-12);
        }
        let energy = electric_energy(&e);
        let want = 25.0 * PI * PI * eps * eps / (4.0 * k * k);
        assert!((energy - want).abs() < 1e-12 * want.max(1.0));
        assert!((energy - 1.5421e-3).abs() < 1e-7);
    }

    fn dg_error(cells: usize, sampling: DgSampling) -> f64 {
        let g = grid(Method::Dg, 4 * cells, 4.0 * PI);
        let rho = density(&g, |x1, x2| 1.0 + 0.5 * (0.5 * x1).cos() + 0.25 * (x2).sin());
        let e = PoissonSolver::with_sampling(&g, sampling).solve(&rho).unwrap();
        spatial_coords(&g)
            .iter()
            .zip(e.components[0].iter().zip(&e.components[1]))
            .map(|((x1, x2), (e1, e2))| (e1 - (0.5 * x1).sin()).abs().max((e2 + 0.25 * x2.cos()).abs()))
            .fold(0.0, f64::max)
    }

    #[test]
    fn dg_field_converges_with_cells() {
        // rho is only known through its cell polynomials, so E is exact only in the limit
        for sampling in [DgSampling::Subcell, DgSampling::CellCenters] {
            let (coarse, fine) = (dg_error(8, sampling), dg_error(16, sampling));
            assert!(fine < 1e-3, "{sampling:?}: {fine}");
            assert!(coarse / fine > 12.0, "{sampling:?}: {coarse} -> {fine}");
        }
        assert!(dg_error(16, DgSampling::Subcell) < dg_error(16, DgSampling::CellCenters));
    }

    #[test]
    fn translation_leaves_energy_unchanged() {
        let g = grid(Method::Spline, 32, 2.0 * PI);
        let f = |a: f64, b: f64| 1.0 + 0.3 * (a + 2.0 * b).sin() + 0.1 * (3.0 * a).cos() * b.sin();
        let base = electric_energy(&solve_poisson(&density(&g, f)).unwrap());
        let h = 2.0 * PI / 32.0;
        let shifted = electric_energy(&solve_poisson(&density(&g, |a, b| f(a - 5.0 * h, b - 3.0 * h))).unwrap());
        assert!((base - shifted).abs() <= 1e-12 * base);
    }

    #[test]
    fn spectrum_satisfies_gauss_law() {
        let g = grid(Method::Spline, 16, 2.0 * PI);
        let rho = density(&g, |a, b| 1.0 + (a + b).sin() + 0.2 * (2.0 * a).cos() + 0.05 * (3.0 * b).sin());
        let s = PoissonSolver::new(&g).spectrum(&rho).unwrap();
        for flat in 0..s.rho_hat.len() {
            let (i1, i2) = (flat % 16, flat / 16);
            let (k1, k2) = (s.wavenumbers[0][i1], s.wavenumbers[1][i2]);
            if k1 == 0.0 && k2 == 0.0 {
                continue;
            }
            // i k . E_hat = rho_hat and k x E_hat = 0
            let div = Complex64::new(0.0, k1) * s.e_hat[0][flat] + Complex64::new(0.0, k2) * s.e_hat[1][flat];
            assert!((div - s.rho_hat[flat]).norm() < 1e-12 * s.rho_hat[flat].norm().max(1.0));
            let curl = k1 * s.e_hat[1][flat] - k2 * s.e_hat[0][flat];
            assert!(curl.norm() < 1e-12);
        }
    }

    #[test]
    fn wrong_size_density_is_rejected() {
        let g = grid(Method::Spline, 16, 1.0);
        let rho = DensityField { rho: vec![1.0; 10], grid: g };
        assert!(solve_poisson(&rho).is_err());
    }
}
