//! Reference implementations used only by the test suites. None of these
//! share code with the library's kernels.

#![allow(dead_code)]

use std::f64::consts::PI;

/// Gaussian elimination with partial pivoting on a dense system.
pub fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x
}

/// The periodic cubic B-spline interpolation matrix `(1/6) circ(1, 4, 1)`.
pub fn cyclic_spline_matrix(n: usize) -> Vec<Vec<f64>> {
    let mut a = vec![vec![0.0; n]; n];
    for i in 0..n {
        a[i][i] += 4.0 / 6.0;
        a[i][(i + 1) % n] += 1.0 / 6.0;
        a[i][(i + n - 1) % n] += 1.0 / 6.0;
    }
    a
}

/// Gauss-Legendre nodes on `[0, 1]` for degree `l <= 3`, in closed form.
pub fn closed_form_nodes(l: usize) -> Vec<f64> {
    let sym = |r: &[f64]| -> Vec<f64> {
        let mut v: Vec<f64> = r.iter().flat_map(|&x| [0.5 - 0.5 * x, 0.5 + 0.5 * x]).collect();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    };
    match l {
        0 => vec![0.5],
        1 => sym(&[1.0 / 3f64.sqrt()]),
        2 => sym(&[0.0, (0.6f64).sqrt()]),
        3 => {
            let s = 2.0 / 7.0 * (6.0f64 / 5.0).sqrt();
            sym(&[(3.0 / 7.0 - s).sqrt(), (3.0 / 7.0 + s).sqrt()])
        }
        _ => panic!("closed-form nodes only up to degree 3"),
    }
}

/// Four-point Gauss rule on `[-1, 1]`.
fn gauss4() -> [(f64, f64); 4] {
    let s = 2.0 / 7.0 * (6.0f64 / 5.0).sqrt();
    let (xa, xb) = ((3.0 / 7.0 - s).sqrt(), (3.0 / 7.0 + s).sqrt());
    let (wa, wb) = ((18.0 + 30f64.sqrt()) / 36.0, (18.0 - 30f64.sqrt()) / 36.0);
    [(-xb, wb), (-xa, wa), (xa, wa), (xb, wb)]
}

fn poly(c: &[f64], t: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &ci| acc * t + ci)
}

/// Monomial coefficients (in the local coordinate `t` in `[0, 1]`) of every
/// cell's interpolating polynomial.
fn monomials(line: &[f64], nodes: &[f64]) -> Vec<Vec<f64>> {
    let np = nodes.len();
    line.chunks(np)
        .map(|cell| {
            let v: Vec<Vec<f64>> = nodes.iter().map(|&x| (0..np).map(|a| x.powi(a as i32)).collect()).collect();
            dense_solve(v, cell.to_vec())
        })
        .collect()
}

/// Samples per cell used by [`dg_projection_oracle`].
pub const ORACLE_SAMPLES: usize = 10_000;

/// `L2` projection of the shifted piecewise polynomial onto each cell, by
/// dense sampling (composite four-point Gauss panels split at the source cell
/// boundary) and least squares in the monomial basis, then read back at the
/// nodes. `out(x) ~ u(x - shift)`.
pub fn dg_projection_oracle(line: &[f64], shift: f64, h: f64, l: usize) -> Vec<f64> {
    let nodes = closed_form_nodes(l);
    let np = l + 1;
    let cells = line.len() / np;
    let src = monomials(line, &nodes);
    let s = shift / h;
    let m = s.floor();
    let beta = s - m;
    let m = m as i64;
    let panels = ORACLE_SAMPLES / 8;
    let rule = gauss4();
    let mut out = Vec::with_capacity(line.len());
    for i in 0..cells {
        let left = (i as i64 - m - 1).rem_euclid(cells as i64) as usize;
        let right = (i as i64 - m).rem_euclid(cells as i64) as usize;
        // (xi, weight, value)
        let mut samples = Vec::with_capacity(ORACLE_SAMPLES);
        for (lo, hi, cell, off) in [(0.0, beta, left, 1.0 - beta), (beta, 1.0, right, -beta)] {
            if hi <= lo {
                continue;
            }
            let w = (hi - lo) / panels as f64;
            for p in 0..panels {
                let a = lo + p as f64 * w;
                for &(x, wx) in &rule {
                    let xi = a + 0.5 * w * (x + 1.0);
                    samples.push((xi, 0.5 * w * wx, poly(&src[cell], xi + off)));
                }
            }
        }
        let mut g = vec![vec![0.0; np]; np];
        let mut r = vec![0.0; np];
        for &(xi, w, val) in &samples {
            for a in 0..np {
                let pa = xi.powi(a as i32);
                r[a] += w * pa * val;
                for b in 0..np {
                    g[a][b] += w * pa * xi.powi(b as i32);
                }
            }
        }
        let c = dense_solve(g, r);
        out.extend(nodes.iter().map(|&x| poly(&c, x)));
    }
    out
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Manufactured Poisson problems `(rho, exact E)` on a 2D periodic box.
pub struct Manufactured {
    pub name: &'static str,
    pub lengths: [f64; 2],
    pub rho: Box<dyn Fn(f64, f64) -> f64>,
    pub e: Box<dyn Fn(f64, f64) -> [f64; 2]>,
}

pub fn manufactured_cases() -> Vec<Manufactured> {
    let (eps, k) = (1e-3, 0.2);
    vec![
        Manufactured {
            name: "single mode",
            lengths: [4.0 * PI, 4.0 * PI],
            rho: Box::new(|x, _| 1.0 + 0.5 * (0.5 * x).cos()),
            e: Box::new(|x, _| [(0.5 * x).sin(), 0.0]),
        },
        Manufactured {
            name: "neutral",
            lengths: [4.0 * PI, 4.0 * PI],
            rho: Box::new(|_, _| 1.0),
            e: Box::new(|_, _| [0.0, 0.0]),
        },
        Manufactured {
            name: "product mode",
            lengths: [10.0 * PI, 10.0 * PI],
            rho: Box::new(move |x, y| 1.0 + eps * (k * x).cos() * (k * y).cos()),
            e: Box::new(move |x, y| {
                let a = eps / (2.0 * k);
                [a * (k * x).sin() * (k * y).cos(), a * (k * x).cos() * (k * y).sin()]
            }),
        },
    ]
}

/// Electric-energy history features of an instability run, read off the
/// envelope `max E(s)` over `|s - t| <= half_window` so that the zeros of
/// the plasma oscillation do not count as minima.
#[derive(Debug, Clone)]
pub struct GrowthSummary {
    pub initial: f64,
    pub min: f64,
    pub t_min: f64,
    pub max: f64,
    pub t_max: f64,
    /// First time after the envelope minimum at which the envelope exceeds ten times it.
    pub onset: Option<f64>,
    /// First time the energy reaches half its maximum.
    pub saturation: Option<f64>,
}

pub fn envelope(t: &[f64], energy: &[f64], half_window: f64) -> Vec<f64> {
    (0..t.len())
        .map(|i| {
            (0..t.len()).filter(|&j| (t[j] - t[i]).abs() <= half_window).map(|j| energy[j]).fold(0.0, f64::max)
        })
        .collect()
}

pub fn growth_summary(t: &[f64], energy: &[f64], half_window: f64) -> GrowthSummary {
    let env = envelope(t, energy, half_window);
    let (imin, &min) = env.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).unwrap();
    let (imax, &max) = energy.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap();
    let onset = (imin..env.len()).find(|&i| env[i] >= 10.0 * min).map(|i| t[i]);
    let saturation = energy.iter().position(|&e| e >= 0.5 * max).map(|i| t[i]);
    GrowthSummary { initial: energy[0], min, t_min: t[imin], max, t_max: t[imax], onset, saturation }
}
